//! Randomized and grid-based property suites, run by `betatree verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::evolution::{check_parabolic_comparison, solve_on_tree, EvolutionConfig};
use crate::operator::{apply_laplacian_level, apply_laplacian_tree, level_average, BetaWeight, TreeFunction};
use crate::spectrum::{default_depth, principal_eigenvalue};
use crate::tree::TruncatedTree;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Random functions per (m, L) in the commutation suite.
    pub operator_cases: usize,
    pub commutation_tol: f64,
    pub beta_grid: Vec<f64>,
    pub eigen_tol: f64,
    /// Random ordered pairs in the comparison suite.
    pub comparison_pairs: usize,
    pub comparison_tol: f64,
    pub evolution_beta: f64,
    pub evolution_m: usize,
    pub evolution_depth: usize,
    pub evolution_dt: f64,
    pub evolution_t_end: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            operator_cases: 20,
            commutation_tol: 1e-12,
            beta_grid: (1..=9).map(|i| i as f64 * 0.05).collect(),
            eigen_tol: 1e-12,
            comparison_pairs: 100,
            comparison_tol: 1e-12,
            evolution_beta: 0.3,
            evolution_m: 2,
            evolution_depth: 8,
            evolution_dt: 1e-3,
            evolution_t_end: 1.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub checks: usize,
    pub violations: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        Self { name: name.into(), ..Default::default() }
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.violations.push(describe());
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn violation_count(&self) -> usize {
        self.suites.iter().map(|s| s.violations.len()).sum()
    }
}

pub fn run_all(config: &VerifyConfig) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let suites = vec![
        operator_suite(config, &mut rng)?,
        spectrum_suite(config)?,
        evolution_suite(config, &mut rng)?,
    ];
    Ok(VerifyReport { config: config.clone(), suites })
}

fn random_tree_function(tree: &TruncatedTree, rng: &mut impl Rng) -> Result<TreeFunction> {
    TreeFunction::from_fn(tree, |_| rng.random_range(-1.0..1.0))
}

/// Level averaging commutes with `Δ_β`, and `Δ_β` is linear.
pub fn operator_suite(config: &VerifyConfig, rng: &mut impl Rng) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("operator");
    for m in 2..=3 {
        for depth in 0..=5 {
            let tree = TruncatedTree::new(m, depth)?;
            for _ in 0..config.operator_cases {
                let bw = BetaWeight::new(rng.random_range(0.0..0.99))?;
                let u = random_tree_function(&tree, rng)?;
                let lhs = level_average(&apply_laplacian_tree(&bw, &u)?);
                let rhs = apply_laplacian_level(&bw, &level_average(&u))?;
                let scale = 1.0f64.max(rhs.sup_norm());
                let err = lhs
                    .values()
                    .iter()
                    .zip(rhs.values())
                    .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
                report.check(err <= config.commutation_tol * scale, || {
                    format!("commutation m={m} L={depth} beta={}: error {err:e}", bw.beta())
                });

                let v = random_tree_function(&tree, rng)?;
                let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                let combo = TreeFunction::from_fn(&tree, |i| a * u.values()[i] + b * v.values()[i])?;
                let lu = apply_laplacian_tree(&bw, &u)?;
                let lv = apply_laplacian_tree(&bw, &v)?;
                let lc = apply_laplacian_tree(&bw, &combo)?;
                let err = (0..tree.node_count())
                    .map(|i| (lc.values()[i] - a * lu.values()[i] - b * lv.values()[i]).abs())
                    .fold(0.0f64, f64::max);
                let scale = 1.0f64.max(lu.sup_norm()).max(lv.sup_norm());
                report.check(err <= 1e-12 * scale, || {
                    format!("linearity m={m} L={depth} beta={}: error {err:e}", bw.beta())
                });
            }
        }
    }
    Ok(report)
}

/// Bounds, monotonicity in β, and the identities satisfied by the eigenpair.
pub fn spectrum_suite(config: &VerifyConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("spectrum");
    let mut previous: Option<(f64, f64)> = None;
    for &beta in &config.beta_grid {
        let bw = BetaWeight::new(beta)?;
        let depth = default_depth(&bw);
        let r = principal_eigenvalue(&bw, depth, config.eigen_tol)?;
        let tol = config.eigen_tol;
        let l = r.lambda1;
        report.check(l >= r.bounds.lower - tol && l <= r.bounds.upper + tol, || {
            format!("beta={beta}: lambda1={l} outside [{}, {}]", r.bounds.lower, r.bounds.upper)
        });
        report.check(l > 0.0 && l < 1.0, || format!("beta={beta}: lambda1={l} not in (0, 1)"));
        if let Some((pb, pl)) = previous {
            report.check(l <= pl + tol, || format!("lambda1 increases from beta={pb} ({pl}) to {beta} ({l})"));
        }
        previous = Some((beta, l));

        let u = r.eigenfunction.values();
        report.check((u[1] - (1.0 - l)).abs() <= 1e-12, || {
            format!("beta={beta}: u_1 - (1 - lambda1) = {:e}", u[1] - (1.0 - l))
        });
        report.check(u.iter().all(|&x| x > 0.0) && u.windows(2).all(|w| w[0] > w[1]), || {
            format!("beta={beta}: eigenfunction not positive and strictly decreasing")
        });
        let p = bw.p();
        let tail = p.powi(depth as i32 + 1) / (1.0 - p);
        report.check(r.sum_identity_gap <= tail + 10.0 * tol, || {
            format!("beta={beta}: sum identity gap {:e} exceeds {:e}", r.sum_identity_gap, tail + 10.0 * tol)
        });
        let worst_gap = r.scaled_gaps(&bw)?.into_iter().fold(f64::INFINITY, f64::min);
        report.check(worst_gap >= l - 10.0 * tol, || {
            format!("beta={beta}: scaled gap {worst_gap} below lambda1 = {l}")
        });
    }
    Ok(report)
}

/// Ordered initial data give ordered solutions; equal data give equal solutions.
pub fn evolution_suite(config: &VerifyConfig, rng: &mut impl Rng) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("evolution");
    let tree = TruncatedTree::new(config.evolution_m, config.evolution_depth)?;
    let bw = BetaWeight::new(config.evolution_beta)?;
    let cfg = EvolutionConfig { dt: config.evolution_dt, t_end: config.evolution_t_end, ..Default::default() };
    for pair in 0..config.comparison_pairs {
        let g = random_tree_function(&tree, rng)?;
        let f = TreeFunction::from_fn(&tree, |i| g.values()[i] + rng.random_range(0.0..1.0))?;
        let u = solve_on_tree(&bw, &f, &cfg)?;
        let v = solve_on_tree(&bw, &g, &cfg)?;
        let cmp = check_parabolic_comparison(&u, &v)?;
        report.check(cmp.worst_violation <= config.comparison_tol, || {
            format!("pair {pair}: u < v by {:e} at {:?}", cmp.worst_violation, cmp.worst_at)
        });
        if pair == 0 {
            let again = solve_on_tree(&bw, &f, &cfg)?;
            let same = check_parabolic_comparison(&u, &again)?;
            report.check(same.max_abs_difference <= config.comparison_tol, || {
                format!("identical data differ by {:e}", same.max_abs_difference)
            });
        }
    }
    Ok(report)
}
