//! One test per acceptance criterion. Each prints a single `PASS`/`FAIL` line
//! straight to stdout, so the lines show up even when output is captured.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use betatree::evolution::{
    check_parabolic_comparison, fixed_point_residual, solve, solve_on_tree, EvolutionConfig, Scheme, Trajectory,
};
use betatree::operator::residual_sup;
use betatree::spectrum::{
    bounds, build_supersolution, check_supersolution, closed_form_beta0, default_depth, fit_inverse_square,
    principal_eigenvalue, solve_resolvent, supercritical_diagnostic, EigenResult,
};
use betatree::{BetaWeight, LevelFunction, TreeFunction, TruncatedTree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, title: &str, ok: bool, detail: String) {
    let line = format!("criterion {id:>2} {}: {title} | {detail}", if ok { "PASS" } else { "FAIL" });
    let _ = writeln!(std::io::stdout().lock(), "{line}");
    assert!(ok, "{line}");
}

fn bw(beta: f64) -> BetaWeight {
    BetaWeight::new(beta).unwrap()
}

fn eigen(beta: f64, depth: usize) -> EigenResult {
    principal_eigenvalue(&bw(beta), depth, 1e-12).unwrap()
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

#[test]
fn criterion_01_bounds_envelope() {
    let start = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    let mut previous = f64::INFINITY;
    for i in 1..=9 {
        let beta = i as f64 * 0.05;
        let b = bw(beta);
        let depth = default_depth(&b);
        let r = principal_eigenvalue(&b, depth, 1e-12).unwrap();
        let env = bounds(beta).unwrap();
        let inside = env.lower <= r.lambda1 && r.lambda1 <= env.upper;
        let monotone = r.lambda1 <= previous;
        if !(inside && monotone) {
            notes.push(format!("beta={beta}: {} not in [{}, {}] or increased", r.lambda1, env.lower, env.upper));
        }
        ok &= inside && monotone;
        previous = r.lambda1;
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(5);
    report(1, "lambda1 within closed-form bounds and non-increasing on 0.05..0.45", ok,
        format!("runtime {} {}", secs(elapsed), notes.join("; ")));
}

#[test]
fn criterion_02_limits() {
    let low = eigen(0.01, default_depth(&bw(0.01))).lambda1;
    let high = eigen(0.49, default_depth(&bw(0.49))).lambda1;
    report(2, "lambda1(0.01) >= 0.96 and lambda1(0.49) <= 0.05", low >= 0.96 && high <= 0.05,
        format!("lambda1(0.01) = {low}, lambda1(0.49) = {high}"));
}

#[test]
fn criterion_03_beta_zero_exact() {
    let mut worst = 0.0f64;
    for lambda in [0.25, 0.5, 1.0] {
        let u = closed_form_beta0(lambda, 50).unwrap();
        worst = worst.max(residual_sup(&bw(0.0), lambda, &u).unwrap().interior);
    }
    report(3, "beta = 0 closed form has interior residual <= 1e-14", worst <= 1e-14,
        format!("worst residual {worst:e}"));
}

#[test]
fn criterion_04_oracle_equivalence() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for beta in [0.1, 0.25, 0.4] {
        for depth in [10, 50, 200] {
            let got = eigen(beta, depth).lambda1;
            worst = worst.max((got - common::level_oracle(beta, depth)).abs());
        }
    }
    let chain = eigen(0.25, 10).lambda1;
    let tree_err = (chain - common::tree_oracle(2, 0.25, 10)).abs();
    let elapsed = start.elapsed();
    let ok = worst <= 1e-8 && tree_err <= 1e-8 && elapsed < Duration::from_secs(10);
    report(4, "bisection matches dense level and full-tree eigensolves within 1e-8", ok,
        format!("level max error {worst:e}, tree (m=2, L=10) error {tree_err:e}, runtime {}", secs(elapsed)));
}

#[test]
fn criterion_05_eigenpair_identities() {
    let mut ok = true;
    let mut notes = Vec::new();
    for beta in [0.1, 0.25, 0.4] {
        let b = bw(beta);
        let depth = default_depth(&b);
        let r = principal_eigenvalue(&b, depth, 1e-12).unwrap();
        let p = b.p();
        let u = r.eigenfunction.values();
        let tail = p.powi(depth as i32 + 1) / (1.0 - p);
        let root = (u[1] - (1.0 - r.lambda1)).abs();
        let min_gap = r.scaled_gaps(&b).unwrap().into_iter().fold(f64::INFINITY, f64::min);
        let shape = u.iter().all(|&x| x > 0.0) && u.windows(2).all(|w| w[1] < w[0]);
        let here = r.sum_identity_gap <= tail + 1e-10 && root <= 1e-12 && min_gap >= r.lambda1 - 1e-10 && shape;
        ok &= here;
        notes.push(format!(
            "beta={beta} L={depth}: sum gap {:.1e}, |u1-(1-l1)| {root:.1e}, min scaled gap - l1 {:.1e}, positive decreasing {shape}",
            r.sum_identity_gap,
            min_gap - r.lambda1
        ));
    }
    report(5, "sum identity, root relation, gap lemma, positivity and monotonicity", ok, notes.join("; "));
}

#[test]
fn criterion_06_supersolution_certificate() {
    let b = bw(1.0 / 3.0);
    let depth = 20;
    let s = build_supersolution(&b, 2.0, depth).unwrap();
    let target = 2.0 * b.beta() - 1.0;
    let defect_err = (1..depth).map(|k| (s.laplacian.values()[k] - target).abs()).fold(0.0f64, f64::max);
    let upper = s.v.values().iter().copied().fold(f64::MIN, f64::max);
    let lambda = (1.0 - 2.0 * b.beta()) / (2.0 * upper);
    let cert = check_supersolution(&b, lambda, &s.v).unwrap();
    let ok = defect_err <= 1e-15 && s.warning.is_none() && cert.is_valid();
    report(6, "supersolution 1 + (k + 2) p^k has non-root defect 2 beta - 1 and certifies (1 - 2 beta)/(2C)", ok,
        format!(
            "L={depth}: max |defect - (-1/3)| {defect_err:e}, root defect {}, lambda {lambda}, max certificate defect {}",
            s.root_defect, cert.max_defect
        ));
}

#[test]
fn criterion_07_supercritical() {
    let start = Instant::now();
    let depths = [50, 100, 200, 400];
    let half = supercritical_diagnostic(&bw(0.5), &depths, 1e-12).unwrap();
    let fit = fit_inverse_square(&half).unwrap();
    let decreasing = |t: &[betatree::spectrum::DepthEigenvalue]| t.windows(2).all(|w| w[1].lambda1 < w[0].lambda1);
    let seven = supercritical_diagnostic(&bw(0.7), &depths, 1e-12).unwrap();
    let vanishing = seven.last().unwrap().lambda1 < 1e-3 * seven[0].lambda1;
    let elapsed = start.elapsed();
    let ok = decreasing(&half) && fit.max_relative_error < 0.1 && decreasing(&seven) && vanishing
        && elapsed < Duration::from_secs(5);
    report(7, "beta >= 1/2: truncated eigenvalues decrease to zero, c L^-2 at beta = 1/2", ok,
        format!(
            "beta=0.5: {:?}, c = {:.4}, max rel. error {:.3}; beta=0.7: {:?}; runtime {}",
            half.iter().map(|r| r.lambda1).collect::<Vec<_>>(),
            fit.c,
            fit.max_relative_error,
            seven.iter().map(|r| r.lambda1).collect::<Vec<_>>(),
            secs(elapsed)
        ));
}

#[test]
fn criterion_08_resolvent_blow_up() {
    let b = bw(0.3);
    let depth = 200;
    let l1 = eigen(0.3, depth).lambda1;
    let mut norms = Vec::new();
    let mut shape = true;
    for frac in [0.2, 0.5, 0.9, 0.99] {
        let phi = solve_resolvent(&b, frac * l1, depth).unwrap();
        let v = phi.values();
        shape &= v.iter().all(|&x| x >= 0.0) && v.windows(2).all(|w| w[1] <= w[0]);
        norms.push(phi.sup_norm());
    }
    let increasing = norms.windows(2).all(|w| w[1] > w[0]);
    report(8, "resolvent norm grows toward lambda1, solutions nonnegative and non-increasing", increasing && shape,
        format!("norms {norms:?}"));
}

fn eigen_on_tree(tree: &TruncatedTree, beta: f64) -> (f64, LevelFunction, TreeFunction) {
    let r = eigen(beta, tree.depth());
    let v = r.eigenfunction.to_tree(tree).unwrap();
    (r.lambda1, r.eigenfunction, v)
}

#[test]
fn criterion_09_eigenfunction_evolution() {
    let start = Instant::now();
    let tree = TruncatedTree::new(2, 8).unwrap();
    let b = bw(0.3);
    let (l1, _, v) = eigen_on_tree(&tree, 0.3);
    let cfg = EvolutionConfig { dt: 1e-3, t_end: 1.0, extrapolation: 2, ..Default::default() };
    let traj = solve_on_tree(&b, &v, &cfg).unwrap();
    let last = traj.states.last().unwrap();
    let decay = (-l1).exp();
    let err = last.iter().zip(v.values()).map(|(u, x)| (u - decay * x).abs()).fold(0.0f64, f64::max);
    let elapsed = start.elapsed();
    report(9, "eigenfunction data decay exactly as exp(-lambda1 t)", err <= 1e-6 && elapsed < Duration::from_secs(10),
        format!("|u(1) - exp(-lambda1) v| = {err:e}, runtime {}", secs(elapsed)));
}

/// `supnorm(t_j) ≤ bound(t_j) (1 + 1e-6)` at every grid time; returns the worst ratio.
fn worst_ratio(traj: &Trajectory, bound: impl Fn(f64) -> f64) -> f64 {
    traj.times.iter().zip(&traj.supnorms).map(|(&t, &s)| s / bound(t)).fold(0.0f64, f64::max)
}

#[test]
fn criterion_10_decay_bounds() {
    let tree = TruncatedTree::new(2, 8).unwrap();
    let b = bw(0.3);
    let depth = tree.depth();
    let cfg = EvolutionConfig { dt: 1e-3, t_end: 2.0, extrapolation: 3, ..Default::default() };
    let (l1, eigenfunction, v) = eigen_on_tree(&tree, 0.3);

    // Certified members of the admissible set, each with its supersolution.
    let mut certificates = Vec::new();
    for a in [2.0, 5.0] {
        let s = build_supersolution(&b, a, depth).unwrap();
        let upper = s.v.values().iter().copied().fold(f64::MIN, f64::max);
        certificates.push(check_supersolution(&b, (1.0 - 2.0 * b.beta()) / (2.0 * upper), &s.v).unwrap());
    }
    certificates.push(check_supersolution(&b, 0.5 * l1, &eigenfunction).unwrap());
    let certified = certificates.iter().all(|c| c.is_valid() && c.last_level_defect <= 0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut envelope = 0.0f64;
    let mut sharp = 0.0f64;
    for case in 0..21 {
        let f = TreeFunction::from_fn(&tree, |_| rng.random_range(-1.0..1.0)).unwrap();
        let u = solve_on_tree(&b, &f, &cfg).unwrap();
        let norm = f.sup_norm();
        for c in &certificates {
            envelope = envelope.max(worst_ratio(&u, |t| norm / c.lower * c.upper * (-c.lambda * t).exp()));
        }
        // |f| ≤ K v: random multiples of the eigenfunction, plus K v itself.
        let k = rng.random_range(0.5..2.0);
        let g = if case == 20 {
            TreeFunction::from_fn(&tree, |i| k * v.values()[i]).unwrap()
        } else {
            TreeFunction::from_fn(&tree, |i| k * v.values()[i] * rng.random_range(-1.0..1.0)).unwrap()
        };
        let w = solve_on_tree(&b, &g, &cfg).unwrap();
        sharp = sharp.max(worst_ratio(&w, |t| k * (-l1 * t).exp()));
    }
    let ok = certified && envelope <= 1.0 + 1e-6 && sharp <= 1.0 + 1e-6;
    report(10, "decay envelopes for certified lambdas and the sharp eigenfunction bound", ok,
        format!(
            "certified lambdas {:?}; worst supnorm/envelope {envelope:.9}, worst supnorm/sharp bound {sharp:.9}",
            certificates.iter().map(|c| c.lambda).collect::<Vec<_>>()
        ));
}

#[test]
fn criterion_11_comparison() {
    let start = Instant::now();
    let tree = TruncatedTree::new(2, 8).unwrap();
    let b = bw(0.3);
    let cfg = EvolutionConfig { dt: 1e-3, t_end: 1.0, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = f64::NEG_INFINITY;
    let mut uniqueness = 0.0f64;
    for pair in 0..100 {
        let g = TreeFunction::from_fn(&tree, |_| rng.random_range(-1.0..1.0)).unwrap();
        let f = TreeFunction::from_fn(&tree, |i| g.values()[i] + rng.random_range(0.0..1.0)).unwrap();
        let u = solve_on_tree(&b, &f, &cfg).unwrap();
        let v = solve_on_tree(&b, &g, &cfg).unwrap();
        worst = worst.max(check_parabolic_comparison(&u, &v).unwrap().worst_violation);
        if pair < 5 {
            let again = solve_on_tree(&b, &f, &cfg).unwrap();
            uniqueness = uniqueness.max(check_parabolic_comparison(&u, &again).unwrap().max_abs_difference);
        }
    }
    // Level-constant data solved on the chain and on the tree are the same solution.
    let levels = LevelFunction::new((0..=8).map(|k| 1.0 / (1.0 + k as f64)).collect()).unwrap();
    let on_tree = levels.to_tree(&tree).unwrap();
    let chain = solve(&b, &on_tree, &cfg).unwrap();
    let full = solve_on_tree(&b, &on_tree, &cfg).unwrap();
    uniqueness = uniqueness.max(check_parabolic_comparison(&chain, &full).unwrap().max_abs_difference);
    let elapsed = start.elapsed();
    let ok = worst <= 1e-12 && uniqueness <= 1e-12 && elapsed < Duration::from_secs(30);
    report(11, "f >= g gives u >= v - 1e-12; equal data give equal solutions", ok,
        format!("worst v - u {worst:e}, worst equal-data difference {uniqueness:e}, runtime {}", secs(elapsed)));
}

#[test]
fn criterion_12_scheme_cross_validation() {
    let tree = TruncatedTree::new(2, 8).unwrap();
    let b = bw(0.3);
    let dt = 5e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let f = TreeFunction::from_fn(&tree, |_| rng.random_range(-1.0..1.0)).unwrap();
    let implicit = EvolutionConfig { dt, t_end: 1.0, extrapolation: 3, ..Default::default() };
    let picard = EvolutionConfig {
        scheme: Scheme::Picard,
        dt,
        t_end: 1.0,
        picard_tol: 1e-11,
        picard_max_iter: 1000,
        ..Default::default()
    };
    let u = solve_on_tree(&b, &f, &implicit).unwrap();
    let w = solve_on_tree(&b, &f, &picard).unwrap();
    let diff = check_parabolic_comparison(&u, &w).unwrap().max_abs_difference;
    let residual = fixed_point_residual(&b, &w, picard.quad_points_per_dt).unwrap();
    report(12, "Picard and implicit trajectories agree within 1e-4; Picard fixed point to 1e-10",
        diff <= 1e-4 && residual <= 1e-10,
        format!("dt = {dt}: sup difference {diff:e}, |u - K u| {residual:e}"));
}
