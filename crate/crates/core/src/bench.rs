//! Benchmark harness: instance generators, run records and the aggregated
//! node/time comparison between settings.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{MipModel, RowSense};
use crate::scalar::Scalar;
use crate::search::{Mode, SolveResult, SolveStatus};

pub const NODE_SHIFT: f64 = 100.0;
pub const TIME_SHIFT: f64 = 10.0;
/// Minimum node count every setting must reach for an instance to be kept.
pub const MIN_NODES: u64 = 100;
/// Some setting must analyze more infeasibilities than this.
pub const MIN_ANALYZED: u64 = 100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BenchError {
    #[error("shifted geometric mean of an empty sequence")]
    Empty,
    #[error("base setting '{0}' does not occur in the records")]
    MissingBase(String),
    #[error("unknown instance family '{0}'")]
    UnknownFamily(String),
    #[error("size {size} outside the range {min}..={max} of {family}")]
    BadSize { family: &'static str, size: usize, min: usize, max: usize },
}

/// `(∏(v_i + s))^{1/k} − s`, computed through logarithms.
pub fn shifted_geomean(values: &[f64], shift: f64) -> Result<f64, BenchError> {
    if values.is_empty() {
        return Err(BenchError::Empty);
    }
    let mean = values.iter().map(|v| (v + shift).ln()).sum::<f64>() / values.len() as f64;
    Ok(mean.exp() - shift)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    MarkshareLike,
    BinPackingInfeasible,
    RandomSetCover,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::MarkshareLike, Family::BinPackingInfeasible, Family::RandomSetCover];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::MarkshareLike => "markshare-like",
            Family::BinPackingInfeasible => "bin-packing-infeasible",
            Family::RandomSetCover => "random-setcover",
        }
    }

    /// Accepted `size` values.
    pub fn size_range(self) -> (usize, usize) {
        match self {
            Family::MarkshareLike => (4, 60),
            Family::BinPackingInfeasible => (2, 12),
            Family::RandomSetCover => (3, 200),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Family {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| BenchError::UnknownFamily(s.to_string()))
    }
}

/// Builds a random instance; identical `(family, size, seed)` give identical models.
///
/// * markshare-like: `size` binaries, `max(2, size/5)` equality rows with
///   coefficients in `[0, 99]`; the right-hand side is half the row sum for
///   even seeds and the activity of a random 0/1 point for odd seeds.
/// * bin-packing-infeasible: `size` bins and `size + 1` items, any two of
///   which exceed the bin capacity by at least one unit.
/// * random-setcover: `size` columns and `size` rows of density 0.3.
pub fn generate_instance<T: Scalar>(family: Family, size: usize, seed: u64) -> Result<MipModel<T>, BenchError> {
    let (min, max) = family.size_range();
    if size < min || size > max {
        return Err(BenchError::BadSize { family: family.as_str(), size, min, max });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = MipModel::new(format!("{family}-{size}-{seed}"));
    match family {
        Family::MarkshareLike => {
            for j in 0..size {
                let c = T::lit(rng.gen_range(1..=20) as f64);
                m.add_binary(format!("x{j}"), c);
            }
            // odd seeds plant a solution, even seeds use the half-sum right-hand side
            let planted: Option<Vec<bool>> = (seed % 2 == 1).then(|| (0..size).map(|_| rng.gen_bool(0.5)).collect());
            for r in 0..(size / 5).max(2) {
                let coefs: Vec<u32> = (0..size).map(|_| rng.gen_range(0..=99)).collect();
                let rhs = match &planted {
                    Some(x) => coefs.iter().zip(x).filter(|(_, &on)| on).map(|(&a, _)| a).sum::<u32>(),
                    None => coefs.iter().sum::<u32>() / 2,
                };
                let entries = coefs
                    .iter()
                    .enumerate()
                    .filter(|&(_, &a)| a != 0)
                    .map(|(j, &a)| (j, T::lit(a as f64)))
                    .collect();
                m.add_row(format!("s{r}"), entries, RowSense::Eq, T::lit(rhs as f64))
                    .expect("generated row");
            }
        }
        Family::BinPackingInfeasible => {
            let bins = size;
            let items = size + 1;
            let capacity: u32 = 2 * rng.gen_range(5..=20) + 1;
            let sizes: Vec<u32> = (0..items).map(|_| capacity.div_ceil(2) + rng.gen_range(0..=1u32)).collect();
            let mut var = vec![vec![0; bins]; items];
            for (i, row) in var.iter_mut().enumerate() {
                for (b, v) in row.iter_mut().enumerate() {
                    *v = m.add_binary(format!("y{i}_{b}"), T::lit(rng.gen_range(1..=10) as f64));
                }
            }
            for (i, row) in var.iter().enumerate() {
                let entries = row.iter().map(|&v| (v, T::one())).collect();
                m.add_row(format!("assign{i}"), entries, RowSense::Eq, T::one()).expect("generated row");
            }
            for b in 0..bins {
                let entries = (0..items).map(|i| (var[i][b], T::lit(sizes[i] as f64))).collect();
                m.add_row(format!("cap{b}"), entries, RowSense::Le, T::lit(capacity as f64))
                    .expect("generated row");
            }
        }
        Family::RandomSetCover => {
            for j in 0..size {
                m.add_binary(format!("x{j}"), T::lit(rng.gen_range(1..=20) as f64));
            }
            for r in 0..size {
                let mut cols: Vec<usize> = (0..size).filter(|_| rng.gen_bool(0.3)).collect();
                if cols.is_empty() {
                    cols.push(rng.gen_range(0..size));
                }
                let entries = cols.into_iter().map(|j| (j, T::one())).collect();
                m.add_row(format!("cover{r}"), entries, RowSense::Ge, T::one()).expect("generated row");
            }
        }
    }
    Ok(m)
}

/// One CSV row per (instance, setting, seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub setting: String,
    pub seed: u64,
    pub status: String,
    pub nodes: u64,
    pub time_s: f64,
    pub conflicts_analyzed: u64,
    pub conflict_constraints: u64,
    pub proof_constraints: u64,
    pub conflict_deductions: u64,
    pub proof_deductions: u64,
    pub pool_evictions: u64,
    pub incumbent_deletions: u64,
}

impl RunRecord {
    pub fn from_result<T: Scalar>(instance: &str, mode: Mode, seed: u64, res: &SolveResult<T>) -> Self {
        let s = &res.stats;
        Self {
            instance: instance.to_string(),
            setting: mode.to_string(),
            seed,
            status: res.status.to_string(),
            nodes: s.nodes,
            time_s: res.time.as_secs_f64(),
            conflicts_analyzed: s.conflicts_analyzed,
            conflict_constraints: s.conflict_constraints,
            proof_constraints: s.proof_constraints,
            conflict_deductions: s.conflict_deductions,
            proof_deductions: s.proof_deductions,
            pool_evictions: s.pool.evicted,
            incumbent_deletions: s.pool.incumbent_deleted,
        }
    }

    /// Finished within the limits.
    pub fn solved(&self) -> bool {
        self.status == SolveStatus::Optimal.as_str()
            || self.status == SolveStatus::Infeasible.as_str()
            || self.status == SolveStatus::Unbounded.as_str()
    }
}

pub fn write_records<W: io::Write>(out: W, records: &[RunRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: io::Read>(input: R) -> csv::Result<Vec<RunRecord>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub setting: String,
    pub solved: usize,
    pub nodes: f64,
    pub time_s: f64,
    pub n_q: f64,
    pub t_q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub base: String,
    pub instances: Vec<String>,
    pub rows: Vec<SummaryRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Filters {
    pub min_nodes: u64,
    pub min_analyzed: u64,
    pub require_solved: bool,
}

impl Default for Filters {
    fn default() -> Self {
        Self { min_nodes: MIN_NODES, min_analyzed: MIN_ANALYZED, require_solved: true }
    }
}

impl Filters {
    /// Keeps every instance.
    pub fn none() -> Self {
        Self { min_nodes: 0, min_analyzed: 0, require_solved: false }
    }
}

/// Instances where every setting needs at least `min_nodes` nodes, some
/// setting finishes, and some setting analyzes more than `min_analyzed`
/// infeasible subproblems.
pub fn filter_instances(records: &[RunRecord], filters: &Filters) -> Vec<String> {
    let mut by_instance: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        by_instance.entry(&r.instance).or_default().push(r);
    }
    by_instance
        .into_iter()
        .filter(|(_, rs)| {
            rs.iter().all(|r| r.nodes >= filters.min_nodes)
                && (!filters.require_solved || rs.iter().any(|r| r.solved()))
                && (filters.min_analyzed == 0 || rs.iter().any(|r| r.conflicts_analyzed > filters.min_analyzed))
        })
        .map(|(name, _)| name.to_string())
        .collect()
}

/// Shifted geometric means per setting over the filtered instances and their ratios to `base`.
pub fn summarize(records: &[RunRecord], base: &str, filters: &Filters) -> Result<Summary, BenchError> {
    if !records.iter().any(|r| r.setting == base) {
        return Err(BenchError::MissingBase(base.to_string()));
    }
    let instances = filter_instances(records, filters);
    let keep: BTreeSet<&str> = instances.iter().map(String::as_str).collect();
    let mut settings: Vec<&str> = Vec::new();
    for r in records {
        if !settings.contains(&r.setting.as_str()) {
            settings.push(&r.setting);
        }
    }
    let mut rows = Vec::new();
    for setting in settings {
        let rs: Vec<&RunRecord> = records
            .iter()
            .filter(|r| r.setting == setting && keep.contains(r.instance.as_str()))
            .collect();
        let nodes: Vec<f64> = rs.iter().map(|r| r.nodes as f64).collect();
        let times: Vec<f64> = rs.iter().map(|r| r.time_s).collect();
        rows.push(SummaryRow {
            setting: setting.to_string(),
            solved: rs.iter().filter(|r| r.solved()).count(),
            nodes: shifted_geomean(&nodes, NODE_SHIFT).unwrap_or(f64::NAN),
            time_s: shifted_geomean(&times, TIME_SHIFT).unwrap_or(f64::NAN),
            n_q: f64::NAN,
            t_q: f64::NAN,
        });
    }
    let b = rows.iter().find(|r| r.setting == base).cloned().expect("base row");
    for r in &mut rows {
        r.n_q = r.nodes / b.nodes;
        r.t_q = r.time_s / b.time_s;
    }
    Ok(Summary { base: base.to_string(), instances, rows })
}

pub fn write_summary<W: io::Write>(out: W, summary: &Summary) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in &summary.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::write_mps;

    fn record(instance: &str, setting: &str, nodes: u64, time_s: f64) -> RunRecord {
        RunRecord {
            instance: instance.into(),
            setting: setting.into(),
            seed: 0,
            status: "optimal".into(),
            nodes,
            time_s,
            conflicts_analyzed: 500,
            conflict_constraints: 0,
            proof_constraints: 0,
            conflict_deductions: 0,
            proof_deductions: 0,
            pool_evictions: 0,
            incumbent_deletions: 0,
        }
    }

    #[test]
    fn geomean_examples() {
        let v = shifted_geomean(&[10.0, 1000.0], 10.0).unwrap();
        assert!((v - ((20.0f64 * 1010.0).sqrt() - 10.0)).abs() < 1e-9);
        assert!((v - 132.13).abs() < 0.01);
        assert!((shifted_geomean(&[7.5], 100.0).unwrap() - 7.5).abs() < 1e-12);
        assert!((shifted_geomean(&[3.0; 5], 1.0).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(shifted_geomean(&[], 1.0), Err(BenchError::Empty));
    }

    #[test]
    fn markshare_shape() {
        let m: MipModel<f64> = generate_instance(Family::MarkshareLike, 8, 1).unwrap();
        assert_eq!(m.num_vars(), 8);
        assert!(m.integer.iter().all(|&b| b));
        // two equalities, each split into a pair of ≥ rows
        assert_eq!(m.num_rows(), 4);
    }

    #[test]
    fn generation_is_deterministic() {
        for f in Family::ALL {
            let a: MipModel<f64> = generate_instance(f, 6, 42).unwrap();
            let b: MipModel<f64> = generate_instance(f, 6, 42).unwrap();
            assert_eq!(write_mps(&a), write_mps(&b));
            let c: MipModel<f64> = generate_instance(f, 6, 43).unwrap();
            assert_ne!(write_mps(&a), write_mps(&c));
        }
    }

    #[test]
    fn size_checked() {
        assert!(matches!(
            generate_instance::<f64>(Family::BinPackingInfeasible, 1, 0),
            Err(BenchError::BadSize { .. })
        ));
        assert!("knapsack".parse::<Family>().is_err());
    }

    #[test]
    fn identical_settings_have_unit_ratios() {
        let mut rs = Vec::new();
        for i in 0..4 {
            rs.push(record(&format!("i{i}"), "conflict", 200 + i * 50, 1.0 + i as f64));
            rs.push(record(&format!("i{i}"), "combined", 200 + i * 50, 1.0 + i as f64));
        }
        let s = summarize(&rs, "conflict", &Filters::default()).unwrap();
        for row in &s.rows {
            assert!((row.n_q - 1.0).abs() < 1e-12 && (row.t_q - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn doubled_nodes_give_ratio_near_two() {
        let mut rs = Vec::new();
        for i in 0..4 {
            rs.push(record(&format!("i{i}"), "conflict", 100_000 * (i + 1), 1.0));
            rs.push(record(&format!("i{i}"), "dualray", 200_000 * (i + 1), 1.0));
        }
        let s = summarize(&rs, "conflict", &Filters::default()).unwrap();
        let d = s.rows.iter().find(|r| r.setting == "dualray").unwrap();
        assert!((d.n_q - 2.0).abs() < 0.01);
    }

    #[test]
    fn filters_drop_uninteresting_instances() {
        let mut rs = vec![record("a", "conflict", 500, 1.0), record("a", "none", 500, 1.0)];
        let mut quiet = vec![record("b", "conflict", 500, 1.0), record("b", "none", 500, 1.0)];
        for r in &mut quiet {
            r.conflicts_analyzed = 100;
        }
        rs.extend(quiet);
        rs.push(record("c", "conflict", 50, 1.0));
        rs.push(record("c", "none", 500, 1.0));
        let mut unsolved = vec![record("d", "conflict", 500, 1.0), record("d", "none", 500, 1.0)];
        for r in &mut unsolved {
            r.status = "limit".into();
        }
        rs.extend(unsolved);
        assert_eq!(filter_instances(&rs, &Filters::default()), vec!["a".to_string()]);
        assert!(matches!(summarize(&rs, "combined", &Filters::default()), Err(BenchError::MissingBase(_))));
    }

    #[test]
    fn csv_round_trip_and_stable_summary() {
        let rs = vec![record("a", "conflict", 300, 2.0), record("a", "dualray", 150, 1.0)];
        let mut buf = Vec::new();
        write_records(&mut buf, &rs).unwrap();
        let header = String::from_utf8(buf.clone()).unwrap();
        assert!(header.starts_with(
            "instance,setting,seed,status,nodes,time_s,conflicts_analyzed,conflict_constraints,proof_constraints,conflict_deductions,proof_deductions,pool_evictions,incumbent_deletions\n"
        ));
        let back = read_records(buf.as_slice()).unwrap();
        assert_eq!(back, rs);
        let once = summarize(&back, "conflict", &Filters::default()).unwrap();
        let twice = summarize(&back, "conflict", &Filters::default()).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_summary(&mut a, &once).unwrap();
        write_summary(&mut b, &twice).unwrap();
        assert_eq!(a, b);
    }
}
