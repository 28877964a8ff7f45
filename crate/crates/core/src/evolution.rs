//! Heat flow `u_t = Δ_β u` on a truncated tree with `u = 0` on the ghost level.
//!
//! Two independent integrators are provided. The implicit one is backward
//! Euler, solving `(I - dt Δ_β) w = u` exactly by eliminating the tree from
//! the leaves to the root; optionally several step sizes are combined by
//! Richardson extrapolation. The other iterates the integral operator
//!
//! ```text
//! K u(x,t) = e^{-t q_x} f(x) + ∫_0^t e^{(s-t) q_x} (Δ_β u(x,s) + q_x u(x,s)) ds,   q_x = p^{-|x|}
//! ```
//!
//! whose fixed points are the solutions, with the exponential kernel kept
//! exact and the integrand handled by the composite trapezoid rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{sup_norm, BetaWeight, LevelFunction, TreeFunction};
use crate::tree::TruncatedTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Implicit,
    Picard,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Trapezoid points per step for the kernel integral; 0 integrates the
    /// exponential kernel exactly against the linear interpolant of the integrand.
    pub quad_points_per_dt: usize,
    /// Number of backward Euler step sizes `dt, dt/2, …` combined by
    /// Richardson extrapolation; 1 means plain backward Euler.
    pub extrapolation: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Implicit,
            dt: 1e-3,
            t_end: 10.0,
            picard_tol: 1e-10,
            picard_max_iter: 200,
            quad_points_per_dt: 1,
            extrapolation: 1,
        }
    }
}

impl EvolutionConfig {
    /// Number of uniform steps; `t_end` must be a whole number of `dt`.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.dt > self.t_end {
            return Err(Error::Config(format!("dt = {} exceeds t_end = {}", self.dt, self.t_end)));
        }
        let n = (self.t_end / self.dt).round();
        if (n * self.dt - self.t_end).abs() > 1e-9 * self.t_end {
            return Err(Error::Config(format!(
                "t_end = {} is not a multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        if !(self.picard_tol > 0.0) {
            return Err(Error::Config(format!("picard_tol must be positive, got {}", self.picard_tol)));
        }
        if self.extrapolation == 0 {
            return Err(Error::Config("extrapolation must be at least 1".into()));
        }
        Ok(n as usize)
    }
}

/// Where trajectory states live: every node of a tree, or one value per level.
#[derive(Clone, Debug, PartialEq)]
pub enum Support {
    Tree(TruncatedTree),
    Levels { depth: usize },
}

impl Support {
    fn lattice(&self) -> Lattice<'_> {
        match self {
            Support::Tree(t) => Lattice::Tree(t),
            Support::Levels { depth } => Lattice::Chain(*depth),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Support::Tree(t) => t.depth(),
            Support::Levels { depth } => *depth,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub support: Support,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub supnorms: Vec<f64>,
}

impl Trajectory {
    fn new(support: Support, times: Vec<f64>, states: Vec<Vec<f64>>) -> Self {
        let supnorms = states.iter().map(|s| sup_norm(s)).collect();
        Self { support, times, states, supnorms }
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one time")
    }

    /// Replicates level values onto every node; tree trajectories are returned as is.
    pub fn to_tree(&self, tree: &TruncatedTree) -> Result<Trajectory> {
        match &self.support {
            Support::Tree(t) if t == tree => Ok(self.clone()),
            Support::Tree(_) => Err(Error::Shape("trajectory lives on a different tree".into())),
            Support::Levels { depth } if *depth == tree.depth() => {
                let states = self
                    .states
                    .iter()
                    .map(|s| Ok(LevelFunction::new(s.clone())?.to_tree(tree)?.into_values()))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Trajectory {
                    support: Support::Tree(tree.clone()),
                    times: self.times.clone(),
                    states,
                    supnorms: self.supnorms.clone(),
                })
            }
            Support::Levels { depth } => Err(Error::Shape(format!(
                "chain depth {depth} does not match tree depth {}",
                tree.depth()
            ))),
        }
    }

    /// State at time index `j` as a tree function (expanding chain states).
    pub fn tree_state(&self, tree: &TruncatedTree, j: usize) -> Result<TreeFunction> {
        let state = self.states.get(j).ok_or_else(|| Error::Bounds(format!("time index {j}")))?;
        match &self.support {
            Support::Levels { .. } => LevelFunction::new(state.clone())?.to_tree(tree),
            Support::Tree(_) => TreeFunction::new(tree, state.clone()),
        }
    }
}

/// Internal view shared by the tree and chain integrators.
#[derive(Clone, Copy)]
enum Lattice<'a> {
    Tree(&'a TruncatedTree),
    Chain(usize),
}

impl Lattice<'_> {
    fn len(&self) -> usize {
        match self {
            Lattice::Tree(t) => t.node_count(),
            Lattice::Chain(depth) => depth + 1,
        }
    }

    fn depth(&self) -> usize {
        match self {
            Lattice::Tree(t) => t.depth(),
            Lattice::Chain(depth) => *depth,
        }
    }

    fn levels(&self) -> Vec<usize> {
        match self {
            Lattice::Tree(t) => (0..=t.depth())
                .flat_map(|k| std::iter::repeat(k).take(t.level_range(k).len()))
                .collect(),
            Lattice::Chain(depth) => (0..=*depth).collect(),
        }
    }

    /// `β u(x̂) + (1-β)/m Σ u(x,i)`, or the child mean at the root. Multiplied by
    /// `p^{-|x|}` this is `Δ_β u + p^{-|x|} u` without the cancellation.
    fn neighbour_mean_into(&self, beta: f64, u: &[f64], out: &mut [f64]) {
        match *self {
            Lattice::Tree(tree) => {
                let m = tree.m();
                let inv_m = 1.0 / m as f64;
                for k in 0..=tree.depth() {
                    for i in tree.level_range(k) {
                        let child_mean = if k < tree.depth() {
                            let first = m * i + 1;
                            u[first..first + m].iter().sum::<f64>() * inv_m
                        } else {
                            0.0
                        };
                        out[i] = if k == 0 {
                            child_mean
                        } else {
                            beta * u[(i - 1) / m] + (1.0 - beta) * child_mean
                        };
                    }
                }
            }
            Lattice::Chain(depth) => {
                let at = |k: usize| if k <= depth { u[k] } else { 0.0 };
                out[0] = at(1);
                for k in 1..=depth {
                    out[k] = beta * u[k - 1] + (1.0 - beta) * at(k + 1);
                }
            }
        }
    }

    /// Solves `(I - dt Δ_β) w = rhs`. Each unknown below the root is written
    /// as `w_x = a_x + b_x w_{x̂}` starting from the leaves, the root equation
    /// becomes scalar, and back substitution runs root to leaves. Row `x` is
    /// multiplied by `p^{|x|}` so the stiff levels stay well scaled.
    fn implicit_solve(
        &self,
        beta: f64,
        powers: &[f64],
        dt: f64,
        rhs: &[f64],
        a: &mut [f64],
        b: &mut [f64],
        out: &mut [f64],
    ) -> Result<()> {
        match *self {
            Lattice::Tree(tree) => {
                let m = tree.m();
                let inv_m = 1.0 / m as f64;
                for k in (0..=tree.depth()).rev() {
                    let pk = powers[k];
                    for i in tree.level_range(k).rev() {
                        let (sa, sb) = if k < tree.depth() {
                            let first = m * i + 1;
                            let ch = first..first + m;
                            (a[ch.clone()].iter().sum::<f64>() * inv_m, b[ch].iter().sum::<f64>() * inv_m)
                        } else {
                            (0.0, 0.0)
                        };
                        let (child_w, parent_w) = if k == 0 { (1.0, 0.0) } else { (1.0 - beta, beta) };
                        let den = pk + dt * (1.0 - child_w * sb);
                        if !(den > 0.0 && den.is_finite()) {
                            return Err(Error::Singular { index: i, pivot: den });
                        }
                        a[i] = (pk * rhs[i] + dt * child_w * sa) / den;
                        b[i] = dt * parent_w / den;
                    }
                }
                out[0] = a[0];
                for i in 1..tree.node_count() {
                    out[i] = a[i] + b[i] * out[(i - 1) / m];
                }
            }
            Lattice::Chain(depth) => {
                for k in (0..=depth).rev() {
                    let (sa, sb) = if k < depth { (a[k + 1], b[k + 1]) } else { (0.0, 0.0) };
                    let (child_w, parent_w) = if k == 0 { (1.0, 0.0) } else { (1.0 - beta, beta) };
                    let den = powers[k] + dt * (1.0 - child_w * sb);
                    if !(den > 0.0 && den.is_finite()) {
                        return Err(Error::Singular { index: k, pivot: den });
                    }
                    a[k] = (powers[k] * rhs[k] + dt * child_w * sa) / den;
                    b[k] = dt * parent_w / den;
                }
                out[0] = a[0];
                for k in 1..=depth {
                    out[k] = a[k] + b[k] * out[k - 1];
                }
            }
        }
        Ok(())
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("dt must be positive, got {dt}")))
    }
}

/// One backward Euler step: the `w` with `(I - dt Δ_β) w = u`.
pub fn step_implicit(bw: &BetaWeight, u: &TreeFunction, dt: f64) -> Result<TreeFunction> {
    check_dt(dt)?;
    let tree = u.tree();
    let out = implicit_step_values(Lattice::Tree(tree), bw, u.values(), dt)?;
    TreeFunction::new(tree, out)
}

/// [`step_implicit`] on the level chain.
pub fn step_implicit_level(bw: &BetaWeight, u: &LevelFunction, dt: f64) -> Result<LevelFunction> {
    check_dt(dt)?;
    let out = implicit_step_values(Lattice::Chain(u.depth()), bw, u.values(), dt)?;
    LevelFunction::new(out)
}

fn implicit_step_values(lat: Lattice<'_>, bw: &BetaWeight, u: &[f64], dt: f64) -> Result<Vec<f64>> {
    let powers = bw.powers(lat.depth())?;
    let n = lat.len();
    let (mut a, mut b, mut out) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    lat.implicit_solve(bw.beta(), &powers, dt, u, &mut a, &mut b, &mut out)?;
    Ok(out)
}

/// Integrates from `f`. Level-constant data are routed to the level chain.
pub fn solve(bw: &BetaWeight, f: &TreeFunction, config: &EvolutionConfig) -> Result<Trajectory> {
    match f.as_level_constant() {
        Some(levels) => solve_levels(bw, &levels, config),
        None => {
            let support = Support::Tree(f.tree().clone());
            integrate(support, bw, f.values(), config)
        }
    }
}

/// Integrates a level-constant initial datum on the chain.
pub fn solve_levels(bw: &BetaWeight, f: &LevelFunction, config: &EvolutionConfig) -> Result<Trajectory> {
    integrate(Support::Levels { depth: f.depth() }, bw, f.values(), config)
}

/// Integrates on the full tree even when `f` is level constant.
pub fn solve_on_tree(bw: &BetaWeight, f: &TreeFunction, config: &EvolutionConfig) -> Result<Trajectory> {
    integrate(Support::Tree(f.tree().clone()), bw, f.values(), config)
}

fn integrate(support: Support, bw: &BetaWeight, f: &[f64], config: &EvolutionConfig) -> Result<Trajectory> {
    let steps = config.steps()?;
    bw.check_depth(support.depth())?;
    if let Some(i) = f.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("initial datum is not finite at entry {i}")));
    }
    let times: Vec<f64> = (0..=steps).map(|j| j as f64 * config.dt).collect();
    let states = match config.scheme {
        Scheme::Implicit => implicit_states(support.lattice(), bw, f, steps, config)?,
        Scheme::Picard => picard_states(support.lattice(), bw, f, steps, config)?,
    };
    Ok(Trajectory::new(support, times, states))
}

fn implicit_states(
    lat: Lattice<'_>,
    bw: &BetaWeight,
    f: &[f64],
    steps: usize,
    config: &EvolutionConfig,
) -> Result<Vec<Vec<f64>>> {
    let powers = bw.powers(lat.depth())?;
    let n = lat.len();
    let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
    // runs[r] holds the states of the run with step dt / 2^r on the coarse grid.
    let mut runs: Vec<Vec<Vec<f64>>> = Vec::with_capacity(config.extrapolation);
    for r in 0..config.extrapolation {
        let sub = 1usize << r;
        let h = config.dt / sub as f64;
        let mut states = Vec::with_capacity(steps + 1);
        states.push(f.to_vec());
        let mut cur = f.to_vec();
        let mut next = vec![0.0; n];
        for _ in 0..steps {
            for _ in 0..sub {
                lat.implicit_solve(bw.beta(), &powers, h, &cur, &mut a, &mut b, &mut next)?;
                std::mem::swap(&mut cur, &mut next);
            }
            states.push(cur.clone());
        }
        runs.push(states);
    }
    if runs.len() == 1 {
        return Ok(runs.pop().expect("one run"));
    }
    // Neville table for an error expansion in powers of h.
    let mut table = runs;
    for col in 1..table.len() {
        let factor = ((1u64 << col) - 1) as f64;
        for row in (col..table.len()).rev() {
            let (lower, upper) = table.split_at_mut(row);
            let coarse = &lower[row - 1];
            for (fine_state, coarse_state) in upper[0].iter_mut().zip(coarse) {
                for (x, y) in fine_state.iter_mut().zip(coarse_state) {
                    *x += (*x - y) / factor;
                }
            }
        }
    }
    Ok(table.pop().expect("non-empty table"))
}

/// Weights of the trapezoid rule for `∫_0^w e^{(s-w) q} g(s) ds` with `g`
/// linear between `g(0)` and `g(w)`, split into the coefficients of the two ends.
/// `quad_points == 0` integrates the kernel exactly against the linear interpolant.
fn kernel_weights(q: f64, width: f64, quad_points: usize) -> (f64, f64) {
    if quad_points == 0 {
        return exact_kernel_weights(q, width);
    }
    let h = width / quad_points as f64;
    let (mut w_old, mut w_new) = (0.0, 0.0);
    for i in 0..=quad_points {
        let c = if i == 0 || i == quad_points { 0.5 * h } else { h };
        let s = i as f64 * h;
        let kernel = c * ((s - width) * q).exp();
        let theta = i as f64 / quad_points as f64;
        w_old += kernel * (1.0 - theta);
        w_new += kernel * theta;
    }
    (w_old, w_new)
}

fn exact_kernel_weights(q: f64, width: f64) -> (f64, f64) {
    let x = q * width;
    if x < 1.0 {
        // Σ (-x)^n (n+1)/(n+2)! and Σ (-x)^n/(n+2)!, without the cancellation
        // of the closed forms.
        let (mut w_old, mut w_new) = (0.0, 0.0);
        let mut term = 0.5;
        for n in 0..24 {
            w_old += (n + 1) as f64 * term;
            w_new += term;
            term *= -x / (n + 3) as f64;
        }
        return (width * w_old, width * w_new);
    }
    let e = (-x).exp();
    let x2 = x * x;
    (width * (1.0 - e * (1.0 + x)) / x2, width * (x - 1.0 + e) / x2)
}

struct KernelTable {
    decay: Vec<f64>,
    w_old: Vec<f64>,
    w_new: Vec<f64>,
}

impl KernelTable {
    fn new(inv_p: &[f64], width: f64, quad_points: usize) -> Self {
        let mut t = KernelTable { decay: vec![], w_old: vec![], w_new: vec![] };
        for &q in inv_p {
            let (wo, wn) = kernel_weights(q, width, quad_points);
            t.decay.push((-q * width).exp());
            t.w_old.push(wo);
            t.w_new.push(wn);
        }
        t
    }
}

/// `G = Δ_β u + q u` for one state.
fn integrand_into(lat: Lattice<'_>, beta: f64, levels: &[usize], inv_p: &[f64], u: &[f64], out: &mut [f64]) {
    lat.neighbour_mean_into(beta, u, out);
    for (g, &k) in out.iter_mut().zip(levels) {
        *g *= inv_p[k];
    }
}

/// Applies `K` to the trajectory stored flat in `u` (`steps + 1` states of length `n`).
fn apply_k_flat(
    lat: Lattice<'_>,
    beta: f64,
    levels: &[usize],
    inv_p: &[f64],
    kernel: &KernelTable,
    f: &[f64],
    u: &[f64],
    out: &mut [f64],
    g_prev: &mut Vec<f64>,
    g_next: &mut Vec<f64>,
) {
    let n = f.len();
    out[..n].copy_from_slice(f);
    integrand_into(lat, beta, levels, inv_p, &u[..n], g_prev);
    let steps = u.len() / n - 1;
    for j in 0..steps {
        integrand_into(lat, beta, levels, inv_p, &u[(j + 1) * n..(j + 2) * n], g_next);
        let (done, rest) = out.split_at_mut((j + 1) * n);
        let prev = &done[j * n..];
        let cur = &mut rest[..n];
        for i in 0..n {
            let k = levels[i];
            cur[i] = kernel.decay[k] * prev[i] + kernel.w_old[k] * g_prev[i] + kernel.w_new[k] * g_next[i];
        }
        std::mem::swap(g_prev, g_next);
    }
}

fn picard_states(
    lat: Lattice<'_>,
    bw: &BetaWeight,
    f: &[f64],
    steps: usize,
    config: &EvolutionConfig,
) -> Result<Vec<Vec<f64>>> {
    let n = lat.len();
    let levels = lat.levels();
    let inv_p = bw.inverse_powers(lat.depth())?;
    let kernel = KernelTable::new(&inv_p, config.dt, config.quad_points_per_dt);
    let mut u: Vec<f64> = f.iter().copied().cycle().take(n * (steps + 1)).collect();
    let mut next = vec![0.0; u.len()];
    let (mut g_prev, mut g_next) = (vec![0.0; n], vec![0.0; n]);
    let mut residual = f64::INFINITY;
    for _ in 0..config.picard_max_iter {
        apply_k_flat(lat, bw.beta(), &levels, &inv_p, &kernel, f, &u, &mut next, &mut g_prev, &mut g_next);
        residual = u.iter().zip(&next).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        std::mem::swap(&mut u, &mut next);
        if residual <= config.picard_tol {
            return Ok(u.chunks(n).map(<[f64]>::to_vec).collect());
        }
    }
    Err(Error::IterationLimit { iterations: config.picard_max_iter, residual })
}

fn uniform_step(traj: &Trajectory) -> Result<f64> {
    if traj.times.len() < 2 {
        return Err(Error::Shape("trajectory needs at least two times".into()));
    }
    let dt = traj.times[1] - traj.times[0];
    let t_end = traj.t_end();
    for (j, w) in traj.times.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * t_end.max(1.0) {
            return Err(Error::Shape(format!("time grid is not uniform at index {j}")));
        }
    }
    Ok(dt)
}

/// `K u(·, t)` for the trajectory `u` and initial datum `f`, trapezoid rule
/// with `quad_points` sub-intervals per grid interval (0 for exact kernel moments).
pub fn apply_k(
    bw: &BetaWeight,
    f: &TreeFunction,
    traj: &Trajectory,
    t: f64,
    quad_points: usize,
) -> Result<TreeFunction> {
    let tree = f.tree();
    let traj = traj.to_tree(tree)?;
    let out = apply_k_values(Lattice::Tree(tree), bw, f.values(), &traj, t, quad_points)?;
    TreeFunction::new(tree, out)
}

fn apply_k_values(
    lat: Lattice<'_>,
    bw: &BetaWeight,
    f: &[f64],
    traj: &Trajectory,
    t: f64,
    quad_points: usize,
) -> Result<Vec<f64>> {
    let t_end = traj.t_end();
    if !(t >= 0.0 && t <= t_end * (1.0 + 1e-12)) {
        return Err(Error::Range { t, t_end });
    }
    let n = lat.len();
    if f.len() != n || traj.states.iter().any(|s| s.len() != n) {
        return Err(Error::Shape("initial datum and trajectory sizes differ".into()));
    }
    let levels = lat.levels();
    let inv_p = bw.inverse_powers(lat.depth())?;
    let mut acc = f.to_vec();
    if t == 0.0 {
        return Ok(acc);
    }
    let dt = uniform_step(traj)?;
    let full = ((t / dt) * (1.0 + 1e-12)).floor() as usize;
    let full = full.min(traj.states.len() - 1);
    let (mut g_prev, mut g_next) = (vec![0.0; n], vec![0.0; n]);
    let kernel = KernelTable::new(&inv_p, dt, quad_points);
    integrand_into(lat, bw.beta(), &levels, &inv_p, &traj.states[0], &mut g_prev);
    for j in 0..full {
        integrand_into(lat, bw.beta(), &levels, &inv_p, &traj.states[j + 1], &mut g_next);
        for i in 0..n {
            let k = levels[i];
            acc[i] = kernel.decay[k] * acc[i] + kernel.w_old[k] * g_prev[i] + kernel.w_new[k] * g_next[i];
        }
        std::mem::swap(&mut g_prev, &mut g_next);
    }
    let rest = t - full as f64 * dt;
    if rest > 1e-12 * dt && full + 1 < traj.states.len() {
        // Partial last interval: interpolate the integrand linearly in time.
        integrand_into(lat, bw.beta(), &levels, &inv_p, &traj.states[full + 1], &mut g_next);
        let theta = rest / dt;
        let partial = KernelTable::new(&inv_p, rest, quad_points);
        for i in 0..n {
            let k = levels[i];
            let g_t = g_prev[i] + theta * (g_next[i] - g_prev[i]);
            acc[i] = partial.decay[k] * acc[i] + partial.w_old[k] * g_prev[i] + partial.w_new[k] * g_t;
        }
    }
    Ok(acc)
}

/// `max_{x, t_j} |u(x, t_j) - K u(x, t_j)|` with `f = u(·, 0)`.
pub fn fixed_point_residual(bw: &BetaWeight, traj: &Trajectory, quad_points: usize) -> Result<f64> {
    let lat = traj.support.lattice();
    let n = lat.len();
    let levels = lat.levels();
    let inv_p = bw.inverse_powers(lat.depth())?;
    let dt = uniform_step(traj)?;
    let kernel = KernelTable::new(&inv_p, dt, quad_points);
    let flat: Vec<f64> = traj.states.iter().flatten().copied().collect();
    let mut out = vec![0.0; flat.len()];
    let (mut g_prev, mut g_next) = (vec![0.0; n], vec![0.0; n]);
    apply_k_flat(lat, bw.beta(), &levels, &inv_p, &kernel, &traj.states[0], &flat, &mut out, &mut g_prev, &mut g_next);
    Ok(flat.iter().zip(&out).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs())))
}

/// Least-squares slope of `-ln |u(·,t)|_∞` against `t` over samples in `[t_lo, t_hi]`.
/// Returns `+∞` when the solution has vanished somewhere in the window.
pub fn decay_rate(traj: &Trajectory, window: (f64, f64)) -> Result<f64> {
    let (t_lo, t_hi) = window;
    let samples: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.supnorms)
        .filter(|(t, _)| **t >= t_lo && **t <= t_hi)
        .map(|(t, s)| (*t, *s))
        .collect();
    if samples.len() < 3 {
        return Err(Error::Window { found: samples.len() });
    }
    if samples.iter().any(|&(_, s)| !(s > 0.0)) {
        return Ok(f64::INFINITY);
    }
    let n = samples.len() as f64;
    let mt = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let my = samples.iter().map(|s| -s.1.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, s) in &samples {
        sxy += (t - mt) * (-s.ln() - my);
        sxx += (t - mt) * (t - mt);
    }
    Ok(sxy / sxx)
}

pub const COMPARISON_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// `u ≥ v - 1e-12` everywhere.
    pub holds: bool,
    /// `max (v - u)` over all nodes and times.
    pub worst_violation: f64,
    /// `(time index, entry)` of the worst violation.
    pub worst_at: (usize, usize),
    /// `max |u - v|`.
    pub max_abs_difference: f64,
}

/// Checks `u ≥ v` on a common grid. Chain trajectories are compared against tree
/// ones by replicating level values.
pub fn check_parabolic_comparison(u: &Trajectory, v: &Trajectory) -> Result<ComparisonReport> {
    if u.times.len() != v.times.len()
        || u.times.iter().zip(&v.times).any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0))
    {
        return Err(Error::Shape("trajectories have different time grids".into()));
    }
    let (u, v) = match (&u.support, &v.support) {
        (Support::Tree(t), Support::Levels { .. }) => (u.clone(), v.to_tree(t)?),
        (Support::Levels { .. }, Support::Tree(t)) => (u.to_tree(t)?, v.clone()),
        (a, b) if a == b => (u.clone(), v.clone()),
        _ => return Err(Error::Shape("trajectories live on different supports".into())),
    };
    let mut report = ComparisonReport {
        holds: true,
        worst_violation: f64::NEG_INFINITY,
        worst_at: (0, 0),
        max_abs_difference: 0.0,
    };
    for (j, (su, sv)) in u.states.iter().zip(&v.states).enumerate() {
        for (i, (a, b)) in su.iter().zip(sv).enumerate() {
            let gap = b - a;
            if gap > report.worst_violation {
                report.worst_violation = gap;
                report.worst_at = (j, i);
            }
            report.max_abs_difference = report.max_abs_difference.max(gap.abs());
        }
    }
    report.holds = report.worst_violation <= COMPARISON_TOL;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximumPrincipleReport {
    /// `-Δ_β u ≥ 0` at every node.
    pub superharmonic: bool,
    pub min_value: f64,
    pub identically_zero: bool,
    /// The conclusion holds, or the hypothesis fails.
    pub passes: bool,
}

/// Tests the conclusion of the maximum principle: a superharmonic `u` (with
/// zero boundary values) is nonnegative, and for `β > 0` either strictly
/// positive or identically zero.
pub fn check_maximum_principle(bw: &BetaWeight, u: &TreeFunction) -> Result<MaximumPrincipleReport> {
    let lap = crate::operator::apply_laplacian_tree(bw, u)?;
    let scale = 1.0f64.max(lap.sup_norm());
    let superharmonic = lap.values().iter().all(|&l| -l >= -COMPARISON_TOL * scale);
    let min_value = u.values().iter().copied().fold(f64::INFINITY, f64::min);
    let identically_zero = u.values().iter().all(|&x| x == 0.0);
    let conclusion = min_value >= -COMPARISON_TOL
        && (bw.beta() == 0.0 || identically_zero || min_value > 0.0);
    Ok(MaximumPrincipleReport {
        superharmonic,
        min_value,
        identically_zero,
        passes: !superharmonic || conclusion,
    })
}
