//! Principal Dirichlet eigenvalue of `Δ_β` and related objects on the level chain.
//!
//! A level-constant eigenfunction normalised by `u_0 = 1` satisfies
//! `u_1 = 1 - λ` and, for `k ≥ 1`,
//! `(1-β) u_{k+1} = (1 - λ p^k) u_k - β u_{k-1}`.
//! Shooting this recurrence from the root and bisecting on the sign of the
//! trace gives the principal eigenvalue of the truncated chain, whose ghost
//! level `L + 1` is pinned to zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{residual_sup, BetaWeight, LevelFunction};

/// Relative inflation of the closed-form bracket before bisecting.
pub const BRACKET_INFLATION: f64 = 1e-3;
/// How many times the upper end of the bracket may be doubled.
pub const BRACKET_DOUBLINGS: usize = 4;
pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_DEPTH: usize = 400;
const MAX_BISECTIONS: usize = 4096;

/// Output of the forward recurrence for one trial `λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShootingTrace {
    pub lambda: f64,
    /// `u_0, u_1, …`, up to `u_{L+1}` or up to the first nonpositive entry.
    pub values: Vec<f64>,
    /// Smallest `k` with `u_k ≤ 0`, if any.
    pub first_nonpositive: Option<usize>,
}

pub fn shoot(bw: &BetaWeight, lambda: f64, depth: usize) -> Result<ShootingTrace> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda must be positive and finite, got {lambda}")));
    }
    bw.check_depth(depth)?;
    let beta = bw.beta();
    let p = bw.p();
    let mut values = Vec::with_capacity(depth + 2);
    values.push(1.0);
    values.push(1.0 - lambda);
    if values[1] <= 0.0 {
        return Ok(ShootingTrace { lambda, values, first_nonpositive: Some(1) });
    }
    let mut pk = 1.0;
    for k in 1..=depth {
        pk *= p;
        let next = ((1.0 - lambda * pk) * values[k] - beta * values[k - 1]) / (1.0 - beta);
        if !next.is_finite() {
            return Err(Error::Config(format!(
                "shooting overflowed at level {} for beta = {beta}, lambda = {lambda}",
                k + 1
            )));
        }
        values.push(next);
        if next <= 0.0 {
            return Ok(ShootingTrace { lambda, values, first_nonpositive: Some(k + 1) });
        }
    }
    Ok(ShootingTrace { lambda, values, first_nonpositive: None })
}

/// Sturm-type predicate: the trace reaches zero at or before the ghost level.
fn lambda_too_large(bw: &BetaWeight, lambda: f64, depth: usize) -> Result<bool> {
    Ok(shoot(bw, lambda, depth)?.first_nonpositive.is_some())
}

/// Closed-form envelope of the principal eigenvalue for `β ∈ (0, 1/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

pub fn bounds(beta: f64) -> Result<Bounds> {
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::Domain(format!("bounds need beta in (0, 1/2), got {beta}")));
    }
    let q = 1.0 - 2.0 * beta;
    Ok(Bounds {
        lower: q * q / (beta * beta + (1.0 - beta) * (1.0 - beta)),
        upper: q / (1.0 - beta),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenResult {
    pub beta: f64,
    pub lambda1: f64,
    /// Normalised so that `u_0 = 1`.
    pub eigenfunction: LevelFunction,
    pub depth: usize,
    /// Final bisection interval `(lo, hi)`.
    pub bracket: (f64, f64),
    pub bounds: Bounds,
    pub interior_residual: f64,
    /// `|λ Σ_k p^k u_k - (1 - 2β + βλ)|`.
    pub sum_identity_gap: f64,
}

impl EigenResult {
    /// `(u_k - u_{k+1}) p^{-k}` for `k = 0..=L`, with `u_{L+1} = 0`.
    pub fn scaled_gaps(&self, bw: &BetaWeight) -> Result<Vec<f64>> {
        let inv_p = bw.inverse_powers(self.depth)?;
        let u = &self.eigenfunction;
        Ok((0..=self.depth).map(|k| (u.get(k) - u.get(k + 1)) * inv_p[k]).collect())
    }
}

/// Depth used when none is given: 400, or the largest admissible depth when smaller.
pub fn default_depth(bw: &BetaWeight) -> usize {
    DEFAULT_DEPTH.min(bw.max_depth())
}

/// Principal eigenvalue `λ1^{(L)}` of the chain truncated at depth `L`, for `β ∈ (0, 1/2)`.
pub fn principal_eigenvalue(bw: &BetaWeight, depth: usize, tol: f64) -> Result<EigenResult> {
    let beta = bw.beta();
    if beta == 0.0 {
        return Err(Error::BetaZero);
    }
    if beta >= 0.5 {
        return Err(Error::Domain(format!(
            "beta = {beta} is outside (0, 1/2), where no principal eigenvalue exists; \
             use supercritical_diagnostic (CLI: diagnose-supercritical) instead"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tol must be positive, got {tol}")));
    }
    if depth < 2 {
        return Err(Error::Domain(format!("depth must be at least 2, got {depth}")));
    }
    bw.check_depth(depth)?;

    let env = bounds(beta)?;
    let mut lo = env.lower * (1.0 - BRACKET_INFLATION);
    let mut hi = env.upper * (1.0 + BRACKET_INFLATION);
    if lambda_too_large(bw, lo, depth)? {
        return Err(Error::NoEigenvalue {
            beta,
            reason: format!("trace already changes sign at the lower bracket end {lo}"),
        });
    }
    let mut doublings = 0;
    while !lambda_too_large(bw, hi, depth)? {
        if doublings == BRACKET_DOUBLINGS {
            return Err(Error::NoEigenvalue {
                beta,
                reason: format!("no sign change up to lambda = {hi}"),
            });
        }
        hi *= 2.0;
        doublings += 1;
    }

    // Bisect to the last representable split rather than stopping at `tol`:
    // the eigenfunction's root relation u_1 = 1 - λ1 is only as good as λ1.
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if lambda_too_large(bw, mid, depth)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if hi - lo > tol {
        return Err(Error::NoEigenvalue { beta, reason: format!("bracket [{lo}, {hi}] did not shrink below {tol}") });
    }
    let lambda1 = 0.5 * (lo + hi);
    let eigenfunction = dirichlet_eigenfunction(bw, lambda1, depth)?;
    let interior_residual = residual_sup(bw, lambda1, &eigenfunction)?.interior;
    let weighted: f64 = bw
        .powers(depth)?
        .iter()
        .zip(eigenfunction.values())
        .map(|(pk, uk)| pk * uk)
        .sum();
    let sum_identity_gap = (lambda1 * weighted - (1.0 - 2.0 * beta + beta * lambda1)).abs();

    Ok(EigenResult {
        beta,
        lambda1,
        eigenfunction,
        depth,
        bracket: (lo, hi),
        bounds: env,
        interior_residual,
        sum_identity_gap,
    })
}

/// Solution of the level recurrence with `u_{L+1} = 0`, run from the ghost level
/// towards the root and normalised to `u_0 = 1`.
///
/// Towards the root the decaying mode `p^k` of the recurrence dominates, so this
/// direction keeps every level to full relative precision, whereas the forward
/// trace at an approximate `λ` picks up a spurious constant of size `|λ - λ1|`.
/// The recurrence is carried in `z_k = u_k p^{-k}`, which stays bounded:
/// `(1-β) z_{k-1} = (1 - λ p^k) z_k - (1-β) p z_{k+1}`.
pub fn dirichlet_eigenfunction(bw: &BetaWeight, lambda: f64, depth: usize) -> Result<LevelFunction> {
    let beta = bw.beta();
    let p = bw.p();
    let powers = bw.powers(depth)?;
    let mut z = vec![0.0; depth + 2];
    z[depth] = 1.0;
    for k in (1..=depth).rev() {
        z[k - 1] = ((1.0 - lambda * powers[k]) * z[k] - (1.0 - beta) * p * z[k + 1]) / (1.0 - beta);
        // Rescale to stay clear of overflow; only the shape matters.
        if z[k - 1].abs() > 1e150 {
            for v in &mut z[k - 1..=depth] {
                *v *= 1e-150;
            }
        }
    }
    let z0 = z[0];
    if !(z0.is_finite() && z0 != 0.0) {
        return Err(Error::Singular { index: 0, pivot: z0 });
    }
    let values = (0..=depth).map(|k| powers[k] * (z[k] / z0)).collect();
    LevelFunction::new(values)
}

/// Eigenfunction of `Δ_0` for eigenvalue `λ`: `u_k = (1 - λ)^k`.
pub fn closed_form_beta0(lambda: f64, depth: usize) -> Result<LevelFunction> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Domain(format!("lambda must lie in (0, 1], got {lambda}")));
    }
    let r = 1.0 - lambda;
    let mut values = Vec::with_capacity(depth + 1);
    let mut v = 1.0;
    for _ in 0..=depth {
        values.push(v);
        v *= r;
    }
    LevelFunction::new(values)
}

/// The explicit supersolution `v_k = 1 + (k + a) p^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Supersolution {
    pub a: f64,
    pub v: LevelFunction,
    /// `Δ_β v(∅) = a(p - 1) + p`; negative exactly when `a > p / (1 - p)`.
    pub root_defect: f64,
    /// `Δ_β v` on every level. Below level `L` it is computed from the variable part
    /// `(k + a) p^k` alone, since constants have zero Laplacian there; applying the
    /// operator to the stored `v` would lose about `ε p^{-k}` at level `k`.
    pub laplacian: LevelFunction,
    /// Set when `a ≤ p / (1 - p)`: `v` is then not a supersolution at the root.
    pub warning: Option<String>,
}

pub fn build_supersolution(bw: &BetaWeight, a: f64, depth: usize) -> Result<Supersolution> {
    let beta = bw.beta();
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::Domain(format!("supersolution needs beta in (0, 1/2), got {beta}")));
    }
    let p = bw.p();
    let powers = bw.powers(depth)?;
    let w: Vec<f64> = powers.iter().enumerate().map(|(k, pk)| (k as f64 + a) * pk).collect();
    let v = LevelFunction::new(w.iter().map(|x| 1.0 + x).collect())?;
    let mut laplacian = crate::operator::apply_laplacian_level(bw, &LevelFunction::new(w)?)?.into_values();
    laplacian[depth] = crate::operator::apply_laplacian_level(bw, &v)?.values()[depth];
    let laplacian = LevelFunction::new(laplacian)?;
    let threshold = p / (1.0 - p);
    let warning = (a <= threshold)
        .then(|| format!("a = {a} does not exceed p/(1-p) = {threshold}; root defect is nonnegative"));
    Ok(Supersolution { a, v, root_defect: a * (p - 1.0) + p, laplacian, warning })
}

/// Evidence that `λ` belongs to the set of `λ` admitting a bounded,
/// uniformly positive `v` with `Δ_β v + λ v ≤ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SupersolutionCertificate {
    pub lambda: f64,
    pub v: LevelFunction,
    /// `min_k v_k`.
    pub lower: f64,
    /// `max_k v_k`.
    pub upper: f64,
    /// `max (Δ_β v + λ v)` over levels `0..L-1`.
    pub max_defect: f64,
    /// `Δ_β v + λ v` on level `L`, where the ghost children read zero.
    pub last_level_defect: f64,
}

impl SupersolutionCertificate {
    pub fn is_valid(&self) -> bool {
        self.max_defect <= 0.0 && self.lower > 0.0
    }
}

pub fn check_supersolution(
    bw: &BetaWeight,
    lambda: f64,
    v: &LevelFunction,
) -> Result<SupersolutionCertificate> {
    if let Some(k) = v.values().iter().position(|&x| x <= 0.0) {
        return Err(Error::Domain(format!("v must be strictly positive; v_{k} = {}", v.values()[k])));
    }
    if v.depth() == 0 {
        return Err(Error::Domain("certificate needs depth at least 1".into()));
    }
    let lap = crate::operator::apply_laplacian_level(bw, v)?;
    let defects: Vec<f64> = lap.values().iter().zip(v.values()).map(|(l, x)| l + lambda * x).collect();
    let depth = v.depth();
    let max_defect = defects[..depth].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lower = v.values().iter().copied().fold(f64::INFINITY, f64::min);
    let upper = v.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SupersolutionCertificate {
        lambda,
        v: v.clone(),
        lower,
        upper,
        max_defect,
        last_level_defect: defects[depth],
    })
}

/// Solves `Δ_β φ + λ φ = -1` on the truncated chain by one elimination sweep from
/// the root and one back substitution.
///
/// Rows are multiplied by `p^k`, giving the M-matrix
/// `-β φ_{k-1} + (1 - λ p^k) φ_k - (1-β) φ_{k+1} = p^k`. Its pivots are all
/// positive exactly when `λ < λ1^{(L)}`.
pub fn solve_resolvent(bw: &BetaWeight, lambda: f64, depth: usize) -> Result<LevelFunction> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    let beta = bw.beta();
    let powers = bw.powers(depth)?;
    let n = depth + 1;
    let sub = -beta;
    let sup = |k: usize| if k == 0 { -1.0 } else { -(1.0 - beta) };
    let mut pivots = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for k in 0..n {
        let diag = 1.0 - lambda * powers[k];
        let (d, r) = if k == 0 {
            (diag, 1.0)
        } else {
            let factor = sub / pivots[k - 1];
            (diag - factor * sup(k - 1), powers[k] - factor * rhs[k - 1])
        };
        if !(d > 0.0) {
            return Err(Error::SpectralWindow {
                lambda,
                reason: format!("elimination pivot {d} at level {k} is not positive"),
            });
        }
        pivots[k] = d;
        rhs[k] = r;
    }
    let mut phi = vec![0.0; n];
    for k in (0..n).rev() {
        let next = if k + 1 < n { phi[k + 1] } else { 0.0 };
        phi[k] = (rhs[k] - sup(k) * next) / pivots[k];
    }
    if let Some(k) = phi.iter().position(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::SpectralWindow {
            lambda,
            reason: format!("phi_{k} = {} lost positivity", phi[k]),
        });
    }
    LevelFunction::new(phi)
}

/// Truncated principal eigenvalue by bisection with a relative stopping rule,
/// usable for every `β ∈ (0, 1)`. Returns the final bracket midpoint.
pub fn truncated_eigenvalue(bw: &BetaWeight, depth: usize, rel_tol: f64) -> Result<f64> {
    bw.check_depth(depth)?;
    // λ = 1 gives u_1 = 0, so it is always "too large".
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= rel_tol * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if lambda_too_large(bw, mid, depth)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One row of the supercritical table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthEigenvalue {
    pub depth: usize,
    pub lambda1: f64,
}

/// `λ1^{(L)}` for each requested depth when `β ∈ [1/2, 1)`, where the infinite
/// tree has no principal eigenvalue and the truncated values drift to zero.
pub fn supercritical_diagnostic(
    bw: &BetaWeight,
    depths: &[usize],
    tol: f64,
) -> Result<Vec<DepthEigenvalue>> {
    if bw.beta() < 0.5 {
        return Err(Error::Domain(format!(
            "supercritical diagnostic needs beta in [1/2, 1), got {}",
            bw.beta()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tol must be positive, got {tol}")));
    }
    depths
        .iter()
        .map(|&depth| {
            Ok(DepthEigenvalue { depth, lambda1: truncated_eigenvalue(bw, depth, tol)? })
        })
        .collect()
}

/// Least-squares fit `λ ≈ c L^{-2}` in log space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseSquareFit {
    pub c: f64,
    /// Free-slope log-log fit, for comparison with -2.
    pub slope: f64,
    /// `max |λ_L / (c L^{-2}) - 1|`.
    pub max_relative_error: f64,
}

pub fn fit_inverse_square(table: &[DepthEigenvalue]) -> Result<InverseSquareFit> {
    if table.len() < 2 {
        return Err(Error::Window { found: table.len() });
    }
    let xs: Vec<f64> = table.iter().map(|r| (r.depth as f64).ln()).collect();
    let ys: Vec<f64> = table.iter().map(|r| r.lambda1.ln()).collect();
    let n = xs.len() as f64;
    let log_c = xs.iter().zip(&ys).map(|(x, y)| y + 2.0 * x).sum::<f64>() / n;
    let c = log_c.exp();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let max_relative_error = table
        .iter()
        .map(|r| (r.lambda1 / (c * (r.depth as f64).powi(-2)) - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(InverseSquareFit { c, slope: sxy / sxx, max_relative_error })
}
