//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::time::{Duration, Instant};

use confmip::bench::{shifted_geomean, summarize, Family, Filters, RunRecord, NODE_SHIFT};
use confmip::lp::{solve_lp, validate_farkas, LpOutcome};
use confmip::model::{LocalBounds, SparseRow};
use confmip::pool::{ConflictPool, Learned};
use confmip::propagate::{propagate_row, BoundJournal, ConstraintRef, PropagationOutcome};
use confmip::search::{cutoff_delta, solve, Mode, Settings, SolveStats, SolveStatus};
use confmip::Tolerances;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{corpus, integer_points, random_binary_mip, random_lp, vertex_oracle, LpOracle};

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(n: usize, title: &str, o: &Outcome) {
    println!("criterion {n} ({title}): {}  {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
}

fn farkas_soundness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let tol = Tolerances::default();
    let (mut mismatches, mut rays, mut bad_rays) = (0, 0, 0);
    let mut counts = [0usize; 3];
    for _ in 0..500 {
        let (model, bounds) = random_lp(&mut rng);
        let oracle = vertex_oracle(&model, &bounds);
        let res = solve_lp(&model, &bounds, &[], None, &tol);
        let agree = match (&res.outcome, oracle) {
            (LpOutcome::Optimal(sol), LpOracle::Optimal(z)) => {
                counts[0] += 1;
                (sol.objective - z).abs() <= 1e-6 * (1.0 + z.abs())
            }
            (LpOutcome::Infeasible(ray), LpOracle::Infeasible) => {
                counts[1] += 1;
                rays += 1;
                if !validate_farkas(ray, &model, &[], &bounds, 1e-7).valid {
                    bad_rays += 1;
                }
                true
            }
            (LpOutcome::Unbounded { .. }, LpOracle::Unbounded) => {
                counts[2] += 1;
                true
            }
            _ => false,
        };
        if !agree {
            mismatches += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: mismatches == 0 && bad_rays == 0 && secs < 30.0,
        detail: format!(
            "500 LPs ({} optimal, {} infeasible, {} unbounded), {mismatches} status mismatches, {bad_rays}/{rays} rays rejected, {secs:.1} s",
            counts[0], counts[1], counts[2]
        ),
    }
}

fn constraint_validity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let tol = Tolerances::default();
    let (mut checked, mut violations, mut wrong_optimum, mut stamped) = (0usize, 0usize, 0usize, 0usize);
    for _ in 0..200 {
        let n = rng.gen_range(6..=14);
        let model = random_binary_mip(&mut rng, n);
        let points = integer_points(&model);
        let raw = |x: &[f64]| -> f64 { model.objective.iter().zip(x).map(|(c, v)| c * v).sum() };
        let best = points.iter().map(|x| raw(x)).min_by(f64::total_cmp);
        for mode in [Mode::Conflict, Mode::DualRay, Mode::Combined, Mode::CombinedPool] {
            let settings = Settings { record_learned: true, ..Settings::with_mode(mode) };
            let res = solve(&model, &settings);
            let found = res.incumbent.as_ref().map(|x| raw(x));
            let ok = match (best, found, res.status) {
                (None, None, SolveStatus::Infeasible) => true,
                (Some(b), Some(f), SolveStatus::Optimal) => (b - f).abs() < 1e-6,
                _ => false,
            };
            if !ok {
                wrong_optimum += 1;
            }
            for c in &res.learned {
                checked += 1;
                let stamp = c.stamp();
                if stamp.is_some() {
                    stamped += 1;
                }
                for x in &points {
                    // a stamped constraint only speaks about solutions that beat its stamp
                    if let Some(s) = stamp {
                        if raw(x) > s - cutoff_delta(&model, s, &tol) + 1e-9 {
                            continue;
                        }
                    }
                    if !c.is_satisfied_by(x, 1e-6) {
                        violations += 1;
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: violations == 0 && wrong_optimum == 0 && checked > 0 && secs < 300.0,
        detail: format!(
            "200 MIPs x 4 modes, {checked} learned constraints ({stamped} stamped), {violations} violations, {wrong_optimum} wrong optima, {secs:.1} s"
        ),
    }
}

struct CorpusRun {
    family: Family,
    records: Vec<RunRecord>,
    stats: Vec<(Mode, SolveStats)>,
    objectives: Vec<(SolveStatus, Option<f64>)>,
}

fn run_corpus() -> Vec<CorpusRun> {
    corpus()
        .into_iter()
        .map(|(family, name, model)| {
            let mut run = CorpusRun { family, records: Vec::new(), stats: Vec::new(), objectives: Vec::new() };
            for mode in Mode::ALL {
                let settings = Settings { time_limit: Some(Duration::from_secs(60)), ..Settings::with_mode(mode) };
                let res = solve(&model, &settings);
                run.records.push(RunRecord::from_result(&name, mode, settings.seed, &res));
                run.stats.push((mode, res.stats.clone()));
                run.objectives.push((res.status, res.objective));
            }
            run
        })
        .collect()
}

fn mode_equivalence(runs: &[CorpusRun]) -> Outcome {
    let mut disagree = Vec::new();
    let mut limits = 0;
    for run in runs {
        let (s0, z0) = run.objectives[0];
        for &(s, z) in &run.objectives {
            if s == SolveStatus::Limit {
                limits += 1;
            }
            let same = s == s0
                && match (z0, z) {
                    (Some(a), Some(b)) => (a - b).abs() <= 1e-6,
                    (None, None) => true,
                    _ => false,
                };
            if !same {
                disagree.push(run.records[0].instance.clone());
                break;
            }
        }
    }
    Outcome {
        pass: runs.len() >= 60 && disagree.is_empty() && limits == 0,
        detail: format!(
            "{} instances x 5 modes, {} disagreements {:?}, {limits} runs hit a limit",
            runs.len(),
            disagree.len(),
            disagree
        ),
    }
}

/// All corner activities of the row, skipping `skip`.
fn brute_max(coefs: &[f64], lb: &[f64], ub: &[f64], skip: Option<usize>) -> f64 {
    let idx: Vec<usize> = (0..coefs.len()).filter(|&j| Some(j) != skip).collect();
    let mut best = f64::NEG_INFINITY;
    for mask in 0..(1u32 << idx.len()) {
        let mut s = 0.0;
        for (k, &j) in idx.iter().enumerate() {
            let v = if mask & (1 << k) != 0 { ub[j] } else { lb[j] };
            s += coefs[j] * v;
        }
        if !s.is_nan() {
            best = best.max(s);
        }
    }
    if idx.is_empty() {
        0.0
    } else {
        best
    }
}

fn propagation_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let tol = Tolerances::default();
    let (mut mismatches, mut deductions, mut infeasible) = (0, 0, 0);
    for _ in 0..1000 {
        let k = rng.gen_range(1..=6);
        let coefs: Vec<f64> = (0..k)
            .map(|_| {
                let a: f64 = if rng.gen_bool(0.5) { rng.gen_range(-5..=5) as f64 } else { rng.gen_range(-5.0..5.0) };
                if a == 0.0 {
                    1.5
                } else {
                    a
                }
            })
            .collect();
        let integer: Vec<bool> = (0..k).map(|_| rng.gen_bool(0.5)).collect();
        let mut lb = Vec::new();
        let mut ub = Vec::new();
        for &int in &integer {
            let l = if rng.gen_bool(0.1) { f64::NEG_INFINITY } else { rng.gen_range(-5..=2) as f64 };
            let u = if rng.gen_bool(0.1) {
                f64::INFINITY
            } else {
                let base = if l.is_finite() { l } else { -5.0 };
                base + if int { rng.gen_range(0..=6) as f64 } else { rng.gen_range(0.0..6.0) }
            };
            lb.push(l);
            ub.push(u);
        }
        let beta: f64 = if rng.gen_bool(0.5) { rng.gen_range(-10..=10) as f64 } else { rng.gen_range(-10.0..10.0) };

        // oracle
        let total = brute_max(&coefs, &lb, &ub, None);
        let mut exp_lb = lb.clone();
        let mut exp_ub = ub.clone();
        let mut exp_infeasible = total.is_finite() && total < beta - tol.feasibility;
        if !exp_infeasible {
            for i in 0..k {
                let resid = brute_max(&coefs, &lb, &ub, Some(i));
                if resid.is_infinite() {
                    continue;
                }
                let mut b = (beta - resid) / coefs[i];
                let lower = coefs[i] > 0.0;
                if integer[i] {
                    b = if lower { (b - 1e-6).ceil() } else { (b + 1e-6).floor() };
                }
                let (cur, opp) = if lower { (lb[i], ub[i]) } else { (ub[i], lb[i]) };
                let gain = if lower { b - cur } else { cur - b };
                if !(gain > 1e-7) {
                    continue;
                }
                let crosses = if lower { b > opp } else { b < opp };
                if crosses {
                    if integer[i] || (b - opp).abs() > tol.feasibility {
                        exp_infeasible = true;
                        break;
                    }
                    b = opp;
                }
                if lower {
                    exp_lb[i] = b;
                } else {
                    exp_ub[i] = b;
                }
            }
        }

        let row = SparseRow::new(coefs.iter().copied().enumerate().collect());
        let mut journal = BoundJournal::new(&LocalBounds::new(lb.clone(), ub.clone()));
        let out = propagate_row(&row, beta, ConstraintRef::Row(0), None, &integer, &mut journal, &tol);
        let got_infeasible = matches!(out, PropagationOutcome::Infeasible(_));
        let same = if exp_infeasible {
            infeasible += 1;
            got_infeasible
        } else {
            !got_infeasible
                && (0..k).all(|i| {
                    let close = |a: f64, b: f64| a == b || (a - b).abs() <= 1e-9;
                    close(journal.lb()[i], exp_lb[i]) && close(journal.ub()[i], exp_ub[i])
                })
        };
        deductions += journal.len();
        if !same {
            mismatches += 1;
        }
    }
    Outcome {
        pass: mismatches == 0,
        detail: format!("1000 rows, {deductions} deductions, {infeasible} infeasible, {mismatches} mismatches"),
    }
}

fn node_ratio(records: &[RunRecord], setting: &str, base: &str) -> f64 {
    let s = summarize(records, base, &Filters::none()).expect("base present");
    s.rows.iter().find(|r| r.setting == setting).map(|r| r.n_q).unwrap_or(f64::NAN)
}

fn directional(runs: &[CorpusRun]) -> Outcome {
    let records: Vec<RunRecord> = runs
        .iter()
        .filter(|r| matches!(r.family, Family::MarkshareLike | Family::BinPackingInfeasible))
        .flat_map(|r| r.records.clone())
        .collect();
    let combined = node_ratio(&records, "combined", "conflict");
    let conflict = node_ratio(&records, "conflict", "none");
    let dualray = node_ratio(&records, "dualray", "none");
    let filtered = summarize(&records, "conflict", &Filters::default()).expect("base present");
    Outcome {
        pass: combined <= 1.0 && conflict <= 1.0 && dualray <= 1.0,
        detail: format!(
            "combined/conflict n_Q {combined:.3}, conflict/none {conflict:.3}, dualray/none {dualray:.3} ({} instances; {} pass the selection filters)",
            records.len() / Mode::ALL.len(),
            filtered.instances.len()
        ),
    }
}

fn pool_trace() -> (bool, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut pool = ConflictPool::new(1_000, 20);
    let mut next = 0u64;
    let mut max_len = 0;
    for _ in 0..100_000 {
        match rng.gen_range(0..10) {
            0..=5 => {
                next += 1;
                let stamp = rng.gen_bool(0.3).then(|| rng.gen_range(-100.0..100.0));
                pool.insert(Learned::Conflict(confmip::confgraph::ConflictConstraint {
                    id: next,
                    literals: Vec::new(),
                    origin: confmip::confgraph::ConflictOrigin::Propagation,
                    age: 0,
                    stamp,
                }))
                .expect("fresh id");
            }
            6 | 7 => {
                if next > 0 {
                    let _ = pool.record_propagation(rng.gen_range(1..=next), rng.gen_bool(0.2));
                }
            }
            8 => {
                pool.update_pass();
            }
            _ => {
                pool.on_new_incumbent(rng.gen_range(-100.0..100.0));
            }
        }
        max_len = max_len.max(pool.len());
        if pool.len() > pool.capacity() {
            return (false, max_len);
        }
    }
    (true, max_len)
}

fn pool_neutrality(runs: &[CorpusRun]) -> Outcome {
    let records: Vec<RunRecord> = runs.iter().flat_map(|r| r.records.clone()).collect();
    let ratio = node_ratio(&records, "combined-pool", "combined");
    let (trace_ok, max_len) = pool_trace();
    Outcome {
        pass: (0.8..=1.25).contains(&ratio) && trace_ok,
        detail: format!("combined-pool/combined n_Q {ratio:.3}; 1e5-event trace peak occupancy {max_len}/1000"),
    }
}

fn relaxation(runs: &[CorpusRun]) -> Outcome {
    let (mut events, mut before, mut after) = (0, 0, 0);
    for run in runs {
        for (_, s) in &run.stats {
            events += s.relaxation_events;
            before += s.reason_before_total;
            after += s.reason_after_total;
        }
    }
    let mb = before as f64 / events.max(1) as f64;
    let ma = after as f64 / events.max(1) as f64;
    Outcome {
        pass: events > 0 && before > 0 && ma < mb,
        detail: format!("{events} LP conflicts, mean reason size {mb:.2} before and {ma:.2} after relaxation"),
    }
}

fn geomean_arithmetic() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let k = rng.gen_range(1..=10);
        let values: Vec<f64> = (0..k).map(|_| rng.gen_range(1.0..1e4)).collect();
        let shift = [1.0, 10.0, NODE_SHIFT][rng.gen_range(0..3)];
        let direct = values.iter().map(|v| v + shift).product::<f64>().powf(1.0 / k as f64) - shift;
        let got = shifted_geomean(&values, shift).unwrap();
        worst = worst.max((got - direct).abs() / direct.abs());
    }
    Outcome { pass: worst <= 1e-12, detail: format!("100 arrays, worst relative error {worst:.2e}") }
}

fn main() {
    let mut all = true;
    let mut check = |n: usize, title: &str, o: Outcome| {
        report(n, title, &o);
        all &= o.pass;
    };
    check(1, "Farkas soundness", farkas_soundness());
    check(2, "learned-constraint validity", constraint_validity());
    let runs = run_corpus();
    check(3, "mode equivalence", mode_equivalence(&runs));
    check(4, "propagation oracle", propagation_oracle());
    check(5, "directional node counts", directional(&runs));
    check(6, "pool neutrality", pool_neutrality(&runs));
    check(7, "reason relaxation", relaxation(&runs));
    check(8, "shifted geometric mean", geomean_arithmetic());
    if !all {
        std::process::exit(1);
    }
}
