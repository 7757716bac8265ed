//! Independent oracles and instance generators shared by the integration tests.
#![allow(dead_code)]

use confmip::bench::{generate_instance, Family};
use confmip::model::{LocalBounds, MipModel, RowSense};
use itertools::Itertools;
use rand::Rng;

pub type Model = MipModel<f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpOracle {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

/// Gaussian elimination with partial pivoting; `None` if singular.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Constraints `g·x ≥ h` of the model rows and finite or capped bounds.
fn halfspaces(model: &Model, bounds: &LocalBounds<f64>, cap: f64) -> Vec<(Vec<f64>, f64)> {
    let n = model.num_vars();
    let mut hs = Vec::new();
    for (row, &b) in model.rows.iter().zip(&model.lhs) {
        let mut g = vec![0.0; n];
        for (i, a) in row.iter() {
            g[i] = a;
        }
        hs.push((g, b));
    }
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        hs.push((e.clone(), bounds.lb[i].max(-cap)));
        e[i] = -1.0;
        hs.push((e, -bounds.ub[i].min(cap)));
    }
    hs
}

fn best_vertex(model: &Model, bounds: &LocalBounds<f64>, cap: f64) -> Option<f64> {
    let n = model.num_vars();
    let hs = halfspaces(model, bounds, cap);
    let mut best: Option<f64> = None;
    for combo in (0..hs.len()).combinations(n) {
        let a = combo.iter().map(|&k| hs[k].0.clone()).collect();
        let b = combo.iter().map(|&k| hs[k].1).collect();
        let Some(x) = solve_dense(a, b) else { continue };
        let feasible = hs.iter().all(|(g, h)| {
            let act: f64 = g.iter().zip(&x).map(|(a, v)| a * v).sum();
            act >= h - 1e-7 * (1.0 + h.abs())
        });
        if feasible {
            let z: f64 = model.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
            best = Some(best.map_or(z, |b: f64| b.min(z)));
        }
    }
    best
}

/// Vertex enumeration for LPs whose variables all have a finite lower bound.
/// Infinite upper bounds are capped; a better optimum under a larger cap
/// means the LP is unbounded.
pub fn vertex_oracle(model: &Model, bounds: &LocalBounds<f64>) -> LpOracle {
    assert!(bounds.lb.iter().all(|l| l.is_finite()));
    let Some(z1) = best_vertex(model, bounds, 1e6) else { return LpOracle::Infeasible };
    if bounds.ub.iter().all(|u| u.is_finite()) {
        return LpOracle::Optimal(z1);
    }
    let z2 = best_vertex(model, bounds, 2e6).expect("feasible under the smaller cap");
    if z2 < z1 - 1e-6 * (1.0 + z1.abs()) {
        LpOracle::Unbounded
    } else {
        LpOracle::Optimal(z1)
    }
}

/// 3–6 variables, 3–8 rows, small integer data, lower bounds always finite.
pub fn random_lp<R: Rng>(rng: &mut R) -> (Model, LocalBounds<f64>) {
    let n = rng.gen_range(3..=6);
    let m = rng.gen_range(3..=8);
    let mut model = Model::new("lp");
    for i in 0..n {
        let lb = rng.gen_range(-5..=0) as f64;
        let ub = if rng.gen_bool(0.25) { f64::INFINITY } else { lb + rng.gen_range(0..=10) as f64 };
        model.add_var(format!("x{i}"), lb, ub, false, rng.gen_range(-5..=5) as f64);
    }
    let mut r = 0;
    while model.num_rows() < m {
        let entries: Vec<(usize, f64)> = (0..n)
            .filter_map(|i| rng.gen_bool(0.7).then(|| (i, rng.gen_range(-5..=5) as f64)))
            .filter(|&(_, a)| a != 0.0)
            .collect();
        if entries.is_empty() {
            continue;
        }
        let sense = match rng.gen_range(0..10) {
            0 => RowSense::Eq,
            1..=3 => RowSense::Le,
            _ => RowSense::Ge,
        };
        model.add_row(format!("r{r}"), entries, sense, rng.gen_range(-10..=10) as f64).unwrap();
        r += 1;
    }
    let bounds = model.global_bounds();
    (model, bounds)
}

/// Binary MIP with `n` variables; most rows are satisfied by a planted point.
pub fn random_binary_mip<R: Rng>(rng: &mut R, n: usize) -> Model {
    let mut model = Model::new("bin");
    for i in 0..n {
        model.add_binary(format!("x{i}"), rng.gen_range(-10..=10) as f64);
    }
    let planted: Vec<f64> = (0..n).map(|_| rng.gen_range(0..=1) as f64).collect();
    let m = rng.gen_range(3..=7);
    for r in 0..m {
        let entries: Vec<(usize, f64)> = (0..n)
            .filter_map(|i| rng.gen_bool(0.6).then(|| (i, rng.gen_range(-9..=9) as f64)))
            .filter(|&(_, a)| a != 0.0)
            .collect();
        if entries.is_empty() {
            continue;
        }
        let act: f64 = entries.iter().map(|&(i, a)| a * planted[i]).sum();
        let (sense, rhs) = match rng.gen_range(0..10) {
            0 | 1 => (RowSense::Eq, if rng.gen_bool(0.7) { act } else { act + 1.0 }),
            2..=5 => (RowSense::Le, act + rng.gen_range(-2..=3) as f64),
            _ => (RowSense::Ge, act - rng.gen_range(-2..=3) as f64),
        };
        model.add_row(format!("r{r}"), entries, sense, rhs).unwrap();
    }
    model
}

/// Every feasible point of a model whose variables are all integer with small finite bounds.
pub fn integer_points(model: &Model) -> Vec<Vec<f64>> {
    assert!(model.integer.iter().all(|&b| b));
    let ranges: Vec<Vec<f64>> = (0..model.num_vars())
        .map(|i| {
            let (l, u) = (model.lb[i], model.ub[i]);
            assert!(l.is_finite() && u.is_finite() && u - l <= 16.0);
            (l as i64..=u as i64).map(|v| v as f64).collect()
        })
        .collect();
    ranges
        .into_iter()
        .multi_cartesian_product()
        .filter(|x| model.rows.iter().zip(&model.lhs).all(|(row, &b)| row.dot(x) >= b - 1e-9))
        .collect()
}

/// Named instances of all three generator families.
pub fn corpus() -> Vec<(Family, String, Model)> {
    let mut out = Vec::new();
    let mut add = |f: Family, sizes: &[usize], seeds: u64| {
        for &s in sizes {
            for seed in 0..seeds {
                let m: Model = generate_instance(f, s, seed).unwrap();
                out.push((f, m.name.clone(), m));
            }
        }
    };
    add(Family::MarkshareLike, &[8, 10, 12, 14, 16, 18, 20, 22, 24], 4);
    add(Family::BinPackingInfeasible, &[3, 4, 5, 6], 3);
    add(Family::RandomSetCover, &[10, 20, 30, 40], 4);
    out
}
