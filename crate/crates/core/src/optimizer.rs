//! Maximization of the lever's minimum mechanical advantage over the link
//! lengths `(oe, cb, bd)`, subject to the handle-reach, container-capacity
//! and turning-width constraints.
//!
//! [`solve`] runs an augmented Lagrangian method with a projected Newton
//! inner solver from a fixed lattice of starts. [`grid_search_oracle`]
//! enumerates a regular grid and is used to certify the solver.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anthro::ConstraintBounds;
use crate::mechanism::{
    self, check_feasibility_with_tolerance, ConstraintSlacks, MechanismError, MechanismGeometry,
    DEFAULT_TOLERANCE,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizationProblem {
    #[serde(skip)]
    pub bounds: ConstraintBounds,
    pub alpha_eval: f64,
    pub gamma_eval: f64,
    /// Upper limits for `oe`, `cb`, `bd` in cm.
    pub variable_upper_limits: [f64; 3],
    pub tolerance: f64,
}

impl Default for OptimizationProblem {
    fn default() -> Self {
        Self {
            bounds: ConstraintBounds::default(),
            alpha_eval: 60.0,
            gamma_eval: 90.0,
            variable_upper_limits: [115.0; 3],
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

impl OptimizationProblem {
    pub fn with_bounds(bounds: ConstraintBounds) -> Self {
        Self {
            bounds,
            ..Self::default()
        }
    }

    /// Bucket angle at which the mechanical advantage is smallest.
    pub fn min_ma_gamma(gamma_max: f64) -> f64 {
        if gamma_max >= 90.0 {
            90.0
        } else {
            gamma_max
        }
    }

    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bad = self.bounds.invalid_fields();
        if !bad.is_empty() {
            return Err(OptimizerError::InvalidProblem(format!(
                "non-positive bounds: {}",
                bad.join(", ")
            )));
        }
        if !(self.alpha_eval > 0.0 && self.alpha_eval < 90.0) {
            return Err(OptimizerError::InvalidProblem(format!(
                "alpha_eval must lie in (0, 90), got {}",
                self.alpha_eval
            )));
        }
        if !(self.gamma_eval > 0.0 && self.gamma_eval <= 180.0) {
            return Err(OptimizerError::InvalidProblem(format!(
                "gamma_eval must lie in (0, 180], got {}",
                self.gamma_eval
            )));
        }
        if self.variable_upper_limits.iter().any(|u| !(u.is_finite() && *u > 0.0)) {
            return Err(OptimizerError::InvalidProblem(
                "variable upper limits must be positive".into(),
            ));
        }
        if !(self.tolerance.is_finite() && self.tolerance >= 0.0) {
            return Err(OptimizerError::InvalidProblem(format!(
                "tolerance must be non-negative, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }

    /// Full geometry for the given link lengths, with clearances, width and
    /// angles taken from the problem.
    pub fn geometry(&self, oe: f64, cb: f64, bd: f64) -> MechanismGeometry {
        MechanismGeometry {
            oe,
            cb,
            bd,
            fe: self.bounds.slider_gap,
            gd: self.bounds.ground_clearance,
            width_w: self.bounds.min_equipment_width,
            alpha_max: self.alpha_eval,
            gamma_max: MechanismGeometry::gamma_max_for_repose(30.0).max(self.gamma_eval),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverTrace {
    pub method: &'static str,
    pub starts: usize,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub evaluations: usize,
    pub best_start: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub geometry: MechanismGeometry,
    /// Mechanical advantage at `gamma_eval`; infinite for unbounded problems.
    pub objective: f64,
    pub slacks: ConstraintSlacks,
    pub status: SolveStatus,
    pub trace: SolverTrace,
}

/// Mechanical advantage at the problem's evaluation angle.
pub fn objective(
    geom: &MechanismGeometry,
    problem: &OptimizationProblem,
) -> Result<f64, OptimizerError> {
    Ok(mechanism::mechanical_advantage(geom, problem.gamma_eval)?)
}

/// Constraint evaluation with the trigonometry hoisted out.
#[derive(Debug, Clone, Copy)]
struct Kernel {
    tan_a: f64,
    sin_half: f64,
    cos_half: f64,
    sin_g: f64,
    b: ConstraintBounds,
}

impl Kernel {
    fn new(p: &OptimizationProblem) -> Self {
        let a = p.alpha_eval.to_radians();
        Self {
            tan_a: a.tan(),
            sin_half: (a / 2.0).sin(),
            cos_half: (a / 2.0).cos(),
            sin_g: p.gamma_eval.to_radians().sin(),
            b: p.bounds,
        }
    }

    fn height(&self, x: &[f64; 3]) -> f64 {
        x[0] * self.tan_a + x[1] * (1.0 + self.sin_half) + x[2]
    }

    fn length(&self, x: &[f64; 3]) -> f64 {
        x[0] + x[1] * self.cos_half
    }

    /// Unclamped `(l - fe) w (s - gd)`.
    fn volume_raw(&self, x: &[f64; 3]) -> f64 {
        (self.length(x) - self.b.slider_gap)
            * self.b.min_equipment_width
            * (x[1] + x[2] - self.b.ground_clearance)
    }

    fn volume(&self, x: &[f64; 3]) -> f64 {
        let l = self.length(x) - self.b.slider_gap;
        let h = x[1] + x[2] - self.b.ground_clearance;
        if l <= 0.0 || h <= 0.0 {
            0.0
        } else {
            l * self.b.min_equipment_width * h
        }
    }

    fn turning(&self, x: &[f64; 3]) -> f64 {
        mechanism::turning_width(self.length(x), self.b.min_equipment_width, self.b.worker_depth)
    }

    fn feasible(&self, x: &[f64; 3], tol: f64) -> bool {
        self.b.max_handle_height - self.height(x) >= -tol
            && self.volume(x) - self.b.min_container_volume >= -tol
            && self.b.max_turning_width - self.turning(x) >= -tol
    }

    fn ma(&self, x: &[f64; 3]) -> f64 {
        x[0] / (2.0 * (x[1] + x[2]) * self.sin_g)
    }
}

fn result_for(
    problem: &OptimizationProblem,
    x: [f64; 3],
    status: SolveStatus,
    trace: SolverTrace,
) -> Result<OptimizationResult, OptimizerError> {
    let geometry = problem.geometry(x[0], x[1], x[2]);
    let slacks = check_feasibility_with_tolerance(&geometry, &problem.bounds, problem.tolerance)?;
    let objective = if x[1] + x[2] > 0.0 {
        objective(&geometry, problem)?
    } else if status == SolveStatus::Unbounded {
        f64::INFINITY
    } else {
        f64::NAN
    };
    Ok(OptimizationResult {
        geometry,
        objective,
        slacks,
        status,
        trace,
    })
}

/// A feasible point with a vanishing bucket link, if one exists. Its
/// existence means the objective has no finite supremum.
fn unbounded_witness(problem: &OptimizationProblem) -> Option<[f64; 3]> {
    let k = Kernel::new(problem);
    let u = problem.variable_upper_limits[0];
    (1..=100)
        .map(|i| [u * i as f64 / 100.0, 0.0, 0.0])
        .find(|x| k.feasible(x, problem.tolerance))
}

// ---------------------------------------------------------------------------
// Augmented Lagrangian solver
// ---------------------------------------------------------------------------

const N_CON: usize = 4;

struct AlProblem {
    k: Kernel,
    upper: [f64; 3],
    /// Any point with a shorter bucket link violates the capacity bound.
    s_min: f64,
    has_capacity: bool,
    evals: usize,
}

impl AlProblem {
    fn objective_grad(&self, x: &[f64; 3]) -> (f64, [f64; 3]) {
        let s = x[1] + x[2];
        let (se, ds) = if s > self.s_min { (s, 1.0) } else { (self.s_min, 0.0) };
        let c = 2.0 * self.k.sin_g;
        let f = -x[0] / (c * se);
        let dfs = ds * x[0] / (c * se * se);
        (f, [-1.0 / (c * se), dfs, dfs])
    }

    /// Normalized constraints `g_i(x) <= 0` and their gradients.
    fn constraints(&self, x: &[f64; 3]) -> [(f64, [f64; 3]); N_CON] {
        let k = &self.k;
        let b = &k.b;
        let hn = b.max_handle_height;
        let g_height = (k.height(x) - hn) / hn;
        let d_height = [k.tan_a / hn, (1.0 + k.sin_half) / hn, 1.0 / hn];

        let l = k.length(x);
        let dl = [1.0, k.cos_half, 0.0];
        let (g_vol, d_vol, g_floor, d_floor) = if self.has_capacity {
            let vn = b.min_container_volume;
            let w = b.min_equipment_width;
            let hs = x[1] + x[2] - b.ground_clearance;
            let ls = l - b.slider_gap;
            let g = (vn - self.k.volume_raw(x)) / vn;
            let d = [
                -w * hs * dl[0] / vn,
                -w * (hs * dl[1] + ls) / vn,
                -w * (hs * dl[2] + ls) / vn,
            ];
            let sn = self.s_min.max(1.0);
            let gf = (self.s_min - (x[1] + x[2])) / sn;
            (g, d, gf, [0.0, -1.0 / sn, -1.0 / sn])
        } else {
            (-1.0, [0.0; 3], -1.0, [0.0; 3])
        };

        let tn = b.max_turning_width;
        let r = b.min_equipment_width.hypot(l + b.worker_depth);
        let g_turn = (2.0 * r - tn) / tn;
        let dt = if r > 0.0 { 2.0 * (l + b.worker_depth) / r / tn } else { 0.0 };
        let d_turn = [dt * dl[0], dt * dl[1], dt * dl[2]];

        [
            (g_height, d_height),
            (g_vol, d_vol),
            (g_turn, d_turn),
            (g_floor, d_floor),
        ]
    }

    fn lagrangian(&mut self, x: &[f64; 3], lambda: &[f64; N_CON], rho: f64) -> (f64, [f64; 3]) {
        self.evals += 1;
        let (mut val, mut grad) = self.objective_grad(x);
        for (i, (g, dg)) in self.constraints(x).iter().enumerate() {
            let m = (lambda[i] + rho * g).max(0.0);
            val += (m * m - lambda[i] * lambda[i]) / (2.0 * rho);
            for j in 0..3 {
                grad[j] += m * dg[j];
            }
        }
        (val, grad)
    }

    fn project(&self, x: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|j| x[j].clamp(0.0, self.upper[j]))
    }

    fn max_violation(&self, x: &[f64; 3]) -> f64 {
        self.constraints(x)
            .iter()
            .map(|(g, _)| g.max(0.0))
            .fold(0.0, f64::max)
    }

    /// Projected Newton on the box with a finite-difference Hessian of the
    /// analytic gradient. Returns the number of iterations used.
    fn minimize_inner(&mut self, x: &mut [f64; 3], lambda: &[f64; N_CON], rho: f64) -> usize {
        const MAX_ITER: usize = 200;
        let mut iters = 0;
        for _ in 0..MAX_ITER {
            iters += 1;
            let (f0, g0) = self.lagrangian(x, lambda, rho);
            let eps_b = 1e-9;
            let free: Vec<usize> = (0..3)
                .filter(|&j| {
                    let at_lo = x[j] <= eps_b && g0[j] > 0.0;
                    let at_hi = x[j] >= self.upper[j] - eps_b && g0[j] < 0.0;
                    !(at_lo || at_hi)
                })
                .collect();

            let pg = (0..3)
                .map(|j| {
                    let moved = (x[j] - g0[j]).clamp(0.0, self.upper[j]);
                    (moved - x[j]).abs()
                })
                .fold(0.0, f64::max);
            if pg <= 1e-13 {
                break;
            }

            let mut dir = [0.0; 3];
            if !free.is_empty() {
                let n = free.len();
                let mut h = DMatrix::<f64>::zeros(n, n);
                for (cj, &j) in free.iter().enumerate() {
                    let step = 1e-5 * (1.0 + x[j].abs());
                    let mut xp = *x;
                    let mut xm = *x;
                    xp[j] += step;
                    xm[j] -= step;
                    let (_, gp) = self.lagrangian(&xp, lambda, rho);
                    let (_, gm) = self.lagrangian(&xm, lambda, rho);
                    for (ci, &i) in free.iter().enumerate() {
                        h[(ci, cj)] = (gp[i] - gm[i]) / (2.0 * step);
                    }
                }
                let h = (&h + h.transpose()) * 0.5;
                let eig = SymmetricEigen::new(h);
                let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let floor = (scale * 1e-10).max(1e-14);
                let gf = DVector::from_iterator(n, free.iter().map(|&j| g0[j]));
                let qtg = eig.eigenvectors.transpose() * &gf;
                let scaled = DVector::from_iterator(
                    n,
                    qtg.iter()
                        .zip(eig.eigenvalues.iter())
                        .map(|(q, l)| q / l.abs().max(floor)),
                );
                let d = -(&eig.eigenvectors * scaled);
                for (ci, &j) in free.iter().enumerate() {
                    dir[j] = d[ci];
                }
            }

            // Armijo backtracking along the projection arc.
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let trial = self.project([
                    x[0] + t * dir[0],
                    x[1] + t * dir[1],
                    x[2] + t * dir[2],
                ]);
                let (ft, _) = self.lagrangian(&trial, lambda, rho);
                let decrease: f64 = (0..3).map(|j| g0[j] * (trial[j] - x[j])).sum();
                if ft <= f0 + 1e-4 * decrease && decrease <= 0.0 {
                    accepted = Some(trial);
                    break;
                }
                t *= 0.5;
            }
            let Some(next) = accepted else {
                // Newton direction failed; fall back to a projected gradient step.
                let mut t = 1.0;
                let mut moved = false;
                for _ in 0..60 {
                    let trial =
                        self.project([x[0] - t * g0[0], x[1] - t * g0[1], x[2] - t * g0[2]]);
                    let (ft, _) = self.lagrangian(&trial, lambda, rho);
                    let decrease: f64 = (0..3).map(|j| g0[j] * (trial[j] - x[j])).sum();
                    if ft <= f0 + 1e-4 * decrease && trial != *x {
                        *x = trial;
                        moved = true;
                        break;
                    }
                    t *= 0.5;
                }
                if !moved {
                    break;
                }
                continue;
            };
            let step = (0..3).map(|j| (next[j] - x[j]).abs()).fold(0.0, f64::max);
            *x = next;
            if step <= 1e-12 {
                break;
            }
        }
        iters
    }
}

struct AlOutcome {
    x: [f64; 3],
    outer: usize,
    inner: usize,
}

fn augmented_lagrangian(al: &mut AlProblem, start: [f64; 3]) -> AlOutcome {
    let mut x = al.project(start);
    let mut lambda = [0.0; N_CON];
    let mut rho = 10.0;
    let mut prev_violation = f64::INFINITY;
    let mut outer = 0;
    let mut inner = 0;
    for _ in 0..60 {
        outer += 1;
        inner += al.minimize_inner(&mut x, &lambda, rho);
        let cons = al.constraints(&x);
        let mut shift = 0.0f64;
        for (i, (g, _)) in cons.iter().enumerate() {
            let next = (lambda[i] + rho * g).max(0.0);
            shift = shift.max((next - lambda[i]).abs());
            lambda[i] = next;
        }
        let violation = al.max_violation(&x);
        if violation <= 1e-11 && shift <= 1e-9 {
            break;
        }
        if violation > 0.25 * prev_violation {
            rho = (rho * 10.0).min(1e10);
        }
        prev_violation = violation;
    }
    AlOutcome { x, outer, inner }
}

/// The eight multi-start points: every corner of the {1/4, 3/4} lattice of the box.
pub fn start_lattice(problem: &OptimizationProblem) -> Vec<[f64; 3]> {
    let u = problem.variable_upper_limits;
    let mut starts = Vec::with_capacity(8);
    for a in [0.25, 0.75] {
        for b in [0.25, 0.75] {
            for c in [0.25, 0.75] {
                starts.push([a * u[0], b * u[1], c * u[2]]);
            }
        }
    }
    starts
}

/// Solves the lever design problem. With `start = None` the eight lattice
/// starts are used; otherwise only the given geometry's link lengths.
pub fn solve(
    problem: &OptimizationProblem,
    start: Option<&MechanismGeometry>,
) -> Result<OptimizationResult, OptimizerError> {
    problem.validate()?;
    let starts = match start {
        Some(g) => vec![[g.oe, g.cb, g.bd]],
        None => start_lattice(problem),
    };
    let mut trace = SolverTrace {
        method: "augmented-lagrangian/projected-newton",
        starts: starts.len(),
        outer_iterations: 0,
        inner_iterations: 0,
        evaluations: 0,
        best_start: None,
    };

    if let Some(x) = unbounded_witness(problem) {
        return result_for(problem, x, SolveStatus::Unbounded, trace);
    }

    let k = Kernel::new(problem);
    let has_capacity = problem.bounds.min_container_volume > 0.0;
    let mut al = AlProblem {
        k,
        upper: problem.variable_upper_limits,
        s_min: if has_capacity { problem.bounds.ground_clearance } else { 0.0 },
        has_capacity,
        evals: 0,
    };

    let mut best: Option<(usize, [f64; 3], f64)> = None;
    let mut least_violation: Option<([f64; 3], f64)> = None;
    for (i, s) in starts.iter().enumerate() {
        let out = augmented_lagrangian(&mut al, *s);
        trace.outer_iterations += out.outer;
        trace.inner_iterations += out.inner;
        let x = out.x;
        let v = al.max_violation(&x);
        if least_violation.is_none_or(|(_, bv)| v < bv) {
            least_violation = Some((x, v));
        }
        if x[1] + x[2] <= 0.0 || !k.feasible(&x, problem.tolerance) {
            continue;
        }
        let obj = k.ma(&x);
        if best.is_none_or(|(_, _, b)| obj > b) {
            best = Some((i, x, obj));
        }
    }
    trace.evaluations = al.evals;

    match best {
        Some((i, x, obj)) => {
            trace.best_start = Some(i);
            let status = if obj > 0.0 {
                SolveStatus::Optimal
            } else {
                SolveStatus::Degenerate
            };
            result_for(problem, x, status, trace)
        }
        None => {
            let (x, _) = least_violation.expect("at least one start");
            result_for(problem, x, SolveStatus::Infeasible, trace)
        }
    }
}

/// Exhaustive search over the grid `k * resolution` inside the variable
/// limits. Ties go to the smaller bucket link, then the smaller `oe`.
pub fn grid_search_oracle(
    problem: &OptimizationProblem,
    resolution: f64,
) -> Result<OptimizationResult, OptimizerError> {
    problem.validate()?;
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(OptimizerError::InvalidProblem(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    let k = Kernel::new(problem);
    let tol = problem.tolerance;
    let u = problem.variable_upper_limits;
    let steps = |lim: f64| (lim / resolution + 1e-9).floor() as usize;
    let (n0, n1, n2) = (steps(u[0]), steps(u[1]), steps(u[2]));

    let mut trace = SolverTrace {
        method: "grid",
        starts: 0,
        outer_iterations: 0,
        inner_iterations: 0,
        evaluations: 0,
        best_start: None,
    };
    let mut best: Option<([f64; 3], f64)> = None;
    let mut unbounded: Option<[f64; 3]> = None;
    let mut evals = 0usize;

    for i in 0..=n0 {
        let oe = i as f64 * resolution;
        for j in 0..=n1 {
            let cb = j as f64 * resolution;
            for l in 0..=n2 {
                let bd = l as f64 * resolution;
                let x = [oe, cb, bd];
                evals += 1;
                // handle height only grows with bd
                if k.b.max_handle_height - k.height(&x) < -tol {
                    break;
                }
                if !k.feasible(&x, tol) {
                    continue;
                }
                if cb + bd == 0.0 {
                    if oe > 0.0 && unbounded.is_none() {
                        unbounded = Some(x);
                    }
                    continue;
                }
                let obj = k.ma(&x);
                let better = match best {
                    None => true,
                    Some((bx, bo)) => {
                        obj > bo
                            || (obj == bo
                                && (cb + bd, oe, cb) < (bx[1] + bx[2], bx[0], bx[1]))
                    }
                };
                if better {
                    best = Some((x, obj));
                }
            }
        }
    }
    trace.evaluations = evals;

    if let Some(x) = unbounded {
        return result_for(problem, x, SolveStatus::Unbounded, trace);
    }
    match best {
        Some((x, obj)) => {
            let status = if obj > 0.0 {
                SolveStatus::Optimal
            } else {
                SolveStatus::Degenerate
            };
            result_for(problem, x, status, trace)
        }
        None => {
            let x = [0.0, 0.0, 0.0];
            result_for(problem, x, SolveStatus::Infeasible, trace)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_values() {
        let p = OptimizationProblem::default();
        let g = p.geometry(78.0, 24.0, 4.0);
        assert!((objective(&g, &p).unwrap() - 78.0 / 56.0).abs() < 1e-12);
        assert!((objective(&p.geometry(56.0, 24.0, 4.0), &p).unwrap() - 1.0).abs() < 1e-12);
        assert!(objective(&p.geometry(78.0, 0.0, 0.0), &p).is_err());
        assert_eq!(
            objective(&g, &p).unwrap(),
            mechanism::mechanical_advantage(&g, 90.0).unwrap()
        );
    }

    #[test]
    fn min_ma_angle() {
        assert_eq!(OptimizationProblem::min_ma_gamma(120.0), 90.0);
        assert_eq!(OptimizationProblem::min_ma_gamma(70.0), 70.0);
    }

    #[test]
    fn reference_point_is_feasible() {
        let p = OptimizationProblem::default();
        let s = check_feasibility_with_tolerance(&p.geometry(78.0, 24.0, 4.0), &p.bounds, 0.25)
            .unwrap();
        assert!(s.feasible);
        assert!(s.handle_height_slack < 0.0 && s.handle_height_slack > -0.25);
    }

    #[test]
    fn solves_default_problem() {
        let p = OptimizationProblem::default();
        let r = solve(&p, None).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!(r.slacks.feasible);
        let g = r.geometry;
        assert!((g.oe - 78.0).abs() <= 1.0, "{g:?}");
        assert!((g.cb - 24.0).abs() <= 1.0, "{g:?}");
        assert!((g.bd - 4.0).abs() <= 1.0, "{g:?}");
        assert!(r.objective >= 1.379);
    }

    #[test]
    fn single_start_is_deterministic() {
        let p = OptimizationProblem::default();
        let start = p.geometry(50.0, 30.0, 10.0);
        let a = solve(&p, Some(&start)).unwrap();
        let b = solve(&p, Some(&start)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn relaxed_capacity_is_unbounded() {
        let p = OptimizationProblem::with_bounds(ConstraintBounds {
            min_container_volume: 0.0,
            ..ConstraintBounds::default()
        });
        assert_eq!(solve(&p, None).unwrap().status, SolveStatus::Unbounded);
        assert_eq!(grid_search_oracle(&p, 5.0).unwrap().status, SolveStatus::Unbounded);
    }

    #[test]
    fn low_handle_ceiling_is_infeasible() {
        let p = OptimizationProblem::with_bounds(ConstraintBounds {
            max_handle_height: 10.0,
            ..ConstraintBounds::default()
        });
        assert_eq!(grid_search_oracle(&p, 1.0).unwrap().status, SolveStatus::Infeasible);
        let r = solve(&p, None).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(!r.slacks.feasible);
    }

    #[test]
    fn huge_volume_is_infeasible() {
        let p = OptimizationProblem::with_bounds(ConstraintBounds {
            min_container_volume: 1e9,
            ..ConstraintBounds::default()
        });
        assert_eq!(grid_search_oracle(&p, 5.0).unwrap().status, SolveStatus::Infeasible);
        assert_eq!(solve(&p, None).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn oracle_unit_grid_near_reference() {
        let p = OptimizationProblem::default();
        let r = grid_search_oracle(&p, 1.0).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!(((r.objective - 1.3929) / 1.3929).abs() <= 0.02, "{}", r.objective);
        assert!((r.geometry.oe - 78.0).abs() <= 3.0);
        assert!(r.slacks.feasible);
    }

    #[test]
    fn coarse_grid_never_beats_fine() {
        let p = OptimizationProblem::default();
        let coarse = grid_search_oracle(&p, 20.0).unwrap();
        let fine = grid_search_oracle(&p, 1.0).unwrap();
        assert_eq!(coarse.status, SolveStatus::Optimal);
        assert!(coarse.objective <= fine.objective);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = OptimizationProblem::default();
        assert!(grid_search_oracle(&p, 0.0).is_err());
        let bad = OptimizationProblem {
            alpha_eval: 95.0,
            ..p
        };
        assert!(solve(&bad, None).is_err());
    }
}
