//! First eigenvalue of the weighted p-Laplacian by Rayleigh quotient descent.
//!
//! The objective is `F(u) = log dirichlet(u) - log mass(u)` over the free
//! nodes. Each step moves along the preconditioned direction
//! `d = -P⁻¹ ∇F` with `P = (p / dirichlet) K(u)`, where `K(u)` is the
//! stiffness matrix with coefficients frozen at the current iterate; for
//! `p = 2` a unit step is exactly one inverse-iteration step. Step lengths
//! are chosen by Armijo backtracking and every accepted iterate is rescaled to
//! `mass = 1`, so the recorded quotient history never increases.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};
use crate::mesh::{Field, Mesh1D};
use crate::operators::Discretization;
use crate::weights::WeightSpec;

/// Iterations in a row with relative decrease below `tol` before stopping.
const STALL_WINDOW: usize = 5;
const MAX_BACKTRACKS: usize = 60;
const NOISE_AMPLITUDE: f64 = 0.01;
/// Preconditioner regularization relative to the largest slope.
const PRECOND_DELTA: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayleighOptions {
    pub max_iters: usize,
    /// Relative quotient decrease treated as stagnation.
    pub tol: f64,
    pub seed: u64,
    pub armijo_factor: f64,
    pub sufficient_decrease: f64,
}

impl Default for RayleighOptions {
    fn default() -> Self {
        Self { max_iters: 20_000, tol: 1e-9, seed: 0, armijo_factor: 0.5, sufficient_decrease: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayleighReport {
    pub lambda_est: f64,
    /// Normalized to `mass = 1`, nonnegative on the free nodes when the run is
    /// sign definite.
    #[serde(skip)]
    pub minimizer: Option<Field>,
    pub iterations: usize,
    pub history: Vec<f64>,
    pub converged: bool,
    pub note: Option<String>,
    pub p: f64,
    /// Truncation level of ω₁, `None` for the untruncated weight.
    pub truncation: Option<f64>,
    pub mesh_id: String,
}

impl RayleighReport {
    pub fn minimizer(&self) -> &Field {
        self.minimizer.as_ref().expect("reports built by the solver carry a minimizer")
    }
}

/// Minimizes the Rayleigh quotient `∫ω₂|∇u|^p / ∫ω₁|u|^p` from the default
/// seeded bump.
pub fn minimize_rayleigh(
    omega1: &WeightSpec,
    omega2: &WeightSpec,
    p: f64,
    mesh: &Mesh1D,
    opts: &RayleighOptions,
) -> Result<RayleighReport> {
    minimize_rayleigh_from(omega1, omega2, p, mesh, opts, None)
}

/// As [`minimize_rayleigh`], optionally warm started from `initial`.
pub fn minimize_rayleigh_from(
    omega1: &WeightSpec,
    omega2: &WeightSpec,
    p: f64,
    mesh: &Mesh1D,
    opts: &RayleighOptions,
    initial: Option<&Field>,
) -> Result<RayleighReport> {
    if !(p >= 2.0) || !p.is_finite() {
        return arg_err(format!("Rayleigh minimization needs p >= 2, got {p}"));
    }
    if !(opts.tol > 0.0) || !(opts.armijo_factor > 0.0 && opts.armijo_factor < 1.0) {
        return arg_err("tol must be > 0 and the Armijo factor in (0, 1)");
    }
    if !(opts.sufficient_decrease > 0.0 && opts.sufficient_decrease < 1.0) {
        return arg_err("sufficient decrease constant must be in (0, 1)");
    }
    let disc = Discretization::new(mesh, omega1, omega2, p)?;
    let truncation = match omega1 {
        WeightSpec::Truncated { level, .. } => Some(*level),
        _ => None,
    };

    let start = match initial {
        Some(f) => {
            if f.len() != mesh.n_nodes() {
                return arg_err("warm start field does not match the mesh");
            }
            f.values().to_vec()
        }
        None => initial_bump(mesh, opts.seed),
    };
    let m0 = disc.mass(&start);
    if !(m0 > 0.0) || !m0.is_finite() {
        return Err(Error::Initialization(format!("mass of the initial guess is {m0}")));
    }

    let mut state = Descent::new(&disc, normalize(&start, m0, p), opts);
    let mut report = RayleighReport {
        lambda_est: state.quotient,
        minimizer: None,
        iterations: 0,
        history: vec![state.quotient],
        converged: false,
        note: None,
        p,
        truncation,
        mesh_id: mesh.describe(),
    };
    if !state.quotient.is_finite() {
        report.minimizer = Some(Field::from_raw(state.u.clone()));
        return Err(Error::Divergence { last_good: Box::new(report) });
    }

    let mut small_steps = 0;
    while report.iterations < opts.max_iters {
        let prev = state.quotient;
        match state.step() {
            Step::Accepted => {}
            Step::Stalled => {
                report.converged = true;
                report.note = Some("line search cannot decrease the quotient further".into());
                break;
            }
            Step::NonFinite => {
                report.minimizer = Some(Field::from_raw(state.u.clone()));
                report.lambda_est = state.quotient;
                return Err(Error::Divergence { last_good: Box::new(report) });
            }
        }
        report.iterations += 1;
        report.history.push(state.quotient);
        if (prev - state.quotient) <= opts.tol * state.quotient {
            small_steps += 1;
            if small_steps >= STALL_WINDOW {
                report.converged = true;
                break;
            }
        } else {
            small_steps = 0;
        }
    }

    let mut u = state.u;
    let free = mesh.free_nodes();
    if u[free.clone()].iter().sum::<f64>() < 0.0 {
        u.iter_mut().for_each(|v| *v = -*v);
    }
    let (lo, hi) = u[free].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo < 0.0 && hi > 0.0 {
        report.converged = false;
        report.note = Some(format!("minimizer changes sign (min {lo:e}, max {hi:e}); local minimum suspected"));
    }
    report.lambda_est = disc.dirichlet(&u) / disc.mass(&u);
    report.minimizer = Some(Field::from_raw(u));
    Ok(report)
}

/// Positive bump vanishing exactly at the pinned ends, times `1 + 0.01 ξ` with
/// seeded uniform noise `ξ ∈ [-1, 1]`.
pub fn initial_bump(mesh: &Mesh1D, seed: u64) -> Vec<f64> {
    use std::f64::consts::{FRAC_PI_2, PI};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let th_l = if mesh.dirichlet_left() { 0.0 } else { FRAC_PI_2 };
    let th_r = if mesh.dirichlet_right() { PI } else { FRAC_PI_2 };
    let (a, b) = (mesh.a(), mesh.b());
    let mut u: Vec<f64> = mesh
        .nodes()
        .iter()
        .map(|&x| {
            let t = (x - a) / (b - a);
            let noise: f64 = rng.gen_range(-1.0..=1.0);
            (th_l + t * (th_r - th_l)).sin() * (1.0 + NOISE_AMPLITUDE * noise)
        })
        .collect();
    let n = u.len();
    if mesh.dirichlet_left() {
        u[0] = 0.0;
    }
    if mesh.dirichlet_right() {
        u[n - 1] = 0.0;
    }
    u
}

fn normalize(u: &[f64], mass: f64, p: f64) -> Vec<f64> {
    let c = mass.powf(-1.0 / p);
    u.iter().map(|v| v * c).collect()
}

enum Step {
    Accepted,
    Stalled,
    NonFinite,
}

struct Descent<'a> {
    disc: &'a Discretization,
    opts: &'a RayleighOptions,
    u: Vec<f64>,
    dirichlet: f64,
    mass: f64,
    quotient: f64,
}

impl<'a> Descent<'a> {
    fn new(disc: &'a Discretization, u: Vec<f64>, opts: &'a RayleighOptions) -> Self {
        let dirichlet = disc.dirichlet(&u);
        let mass = disc.mass(&u);
        Self { disc, opts, u, dirichlet, mass, quotient: dirichlet / mass }
    }

    fn step(&mut self) -> Step {
        let p = self.disc.p();
        let free = self.disc.mesh().free_nodes();
        let a = self.disc.plap(&self.u, 0.0);
        let r = self.disc.reaction(&self.u);
        let grad: Vec<f64> =
            free.clone().map(|j| p * (a[j] / self.dirichlet - r[j] / self.mass)).collect();

        let max_slope = self
            .u
            .windows(2)
            .zip(self.disc.mesh().nodes().windows(2))
            .map(|(u, x)| ((u[1] - u[0]) / (x[1] - x[0])).abs())
            .fold(0.0, f64::max);
        let mut k = self.disc.lagged_stiffness(&self.u, PRECOND_DELTA * max_slope.max(f64::MIN_POSITIVE));
        let scale = p / self.dirichlet;
        let shift = 1e-12 * k.diag.iter().fold(0.0f64, |m, d| m.max(*d));
        for (i, d) in k.diag.iter_mut().enumerate() {
            *d += shift + 1e-12 * self.disc.l2_weights()[free.start + i];
        }
        let dir: Vec<f64> = match k.solve_spd(&grad) {
            Ok(x) => x.iter().map(|v| -v / scale).collect(),
            Err(_) => grad.iter().map(|g| -g).collect(),
        };
        let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        if !slope.is_finite() {
            return Step::NonFinite;
        }
        if slope >= 0.0 {
            return Step::Stalled;
        }

        let f0 = self.quotient.ln();
        let mut alpha = 1.0;
        for _ in 0..MAX_BACKTRACKS {
            let mut v = self.u.clone();
            for (i, j) in free.clone().enumerate() {
                v[j] += alpha * dir[i];
            }
            let m = self.disc.mass(&v);
            if m > 0.0 && m.is_finite() {
                let v = normalize(&v, m, p);
                let d = self.disc.dirichlet(&v);
                let mv = self.disc.mass(&v);
                let q = d / mv;
                if !q.is_finite() {
                    return Step::NonFinite;
                }
                if q.ln() <= f0 + self.opts.sufficient_decrease * alpha * slope && q <= self.quotient {
                    self.u = v;
                    self.dirichlet = d;
                    self.mass = mv;
                    self.quotient = q;
                    return Step::Accepted;
                }
            }
            alpha *= self.opts.armijo_factor;
        }
        Step::Stalled
    }
}

/// One row of a truncation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub m: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenStudy {
    pub rows: Vec<StudyRow>,
    /// Estimate with the untruncated ω₁.
    pub untruncated: RayleighReport,
}

/// Runs [`minimize_rayleigh`] for `W_m = T_m(ω₁)` over the increasing list
/// `m_list`, each run warm started from the previous minimizer, followed by
/// the untruncated weight warm started from the last row.
pub fn truncated_eigen_study(
    omega1: &WeightSpec,
    omega2: &WeightSpec,
    p: f64,
    mesh: &Mesh1D,
    m_list: &[f64],
    opts: &RayleighOptions,
) -> Result<EigenStudy> {
    if m_list.windows(2).any(|w| w[1] <= w[0]) {
        return arg_err("m_list must be strictly increasing");
    }
    if m_list.iter().any(|m| !(*m > 0.0)) {
        return arg_err("truncation levels must be > 0");
    }
    let mut rows = Vec::with_capacity(m_list.len());
    let mut warm: Option<Field> = None;
    for &m in m_list {
        let w = omega1.truncate(m)?;
        let (report, error) = match minimize_rayleigh_from(&w, omega2, p, mesh, opts, warm.as_ref()) {
            Ok(r) => (r, None),
            Err(Error::Divergence { last_good }) => (*last_good, Some("diverged".to_string())),
            Err(e) => return Err(e),
        };
        rows.push(StudyRow {
            m,
            lambda: report.lambda_est,
            iterations: report.iterations,
            converged: report.converged && error.is_none(),
            note: error.or(report.note.clone()),
        });
        warm = report.minimizer;
    }
    let untruncated = minimize_rayleigh_from(omega1, omega2, p, mesh, opts, warm.as_ref())?;
    Ok(EigenStudy { rows, untruncated })
}

/// Writes `m, lambda, iterations, converged`; the untruncated estimate is the
/// last row with `m = inf`.
pub fn write_study_csv(path: &Path, study: &EigenStudy) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["m", "lambda", "iterations", "converged"])?;
    for r in &study.rows {
        w.write_record([format!("{:e}", r.m), format!("{:e}", r.lambda), r.iterations.to_string(), r.converged.to_string()])?;
    }
    let u = &study.untruncated;
    w.write_record(["inf".to_string(), format!("{:e}", u.lambda_est), u.iterations.to_string(), u.converged.to_string()])?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, Metric};

    fn one() -> WeightSpec {
        WeightSpec::Constant { value: 1.0 }
    }

    #[test]
    fn p2_unit_interval_is_pi_squared() {
        let m = build_mesh(0.0, 1.0, 128, 1.0, Metric::Interval).unwrap();
        let r = minimize_rayleigh(&one(), &one(), 2.0, &m, &RayleighOptions::default()).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        assert!(r.converged);
        assert!((r.lambda_est - pi2).abs() < 0.01 * pi2, "{}", r.lambda_est);
        // lumped mass: (4/h²) sin²(πh/2)
        let h = 1.0 / 128.0;
        let exact = 4.0 / (h * h) * (std::f64::consts::PI * h / 2.0).sin().powi(2);
        assert!((r.lambda_est - exact).abs() < 1e-6 * exact);
    }

    #[test]
    fn history_is_monotone_and_report_consistent() {
        let m = build_mesh(0.0, 1.0, 64, 2.0, Metric::Radial { dim: 4 }).unwrap();
        let w1 = WeightSpec::power_radial(-3.0).truncate(100.0).unwrap();
        let r = minimize_rayleigh(&w1, &one(), 3.0, &m, &RayleighOptions::default()).unwrap();
        assert!(r.history.windows(2).all(|h| h[1] <= h[0]));
        let disc = Discretization::new(&m, &w1, &one(), 3.0).unwrap();
        let u = r.minimizer().values();
        assert!((disc.mass(u) - 1.0).abs() < 1e-12);
        assert!((disc.dirichlet(u) / disc.mass(u) - r.lambda_est).abs() <= 1e-12 * r.lambda_est);
        assert!(u[m.free_nodes()].iter().all(|&v| v >= 0.0));
        assert_eq!(r.truncation, Some(100.0));
    }

    #[test]
    fn zero_mass_initial_guess() {
        let m = build_mesh(0.0, 1.0, 16, 1.0, Metric::Interval).unwrap();
        let zero = WeightSpec::Constant { value: 0.0 };
        let err = minimize_rayleigh(&zero, &one(), 2.0, &m, &RayleighOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Initialization(_)));
        assert!(minimize_rayleigh(&one(), &one(), 1.5, &m, &RayleighOptions::default()).is_err());
    }

    #[test]
    fn study_rejects_unsorted_levels() {
        let m = build_mesh(0.0, 1.0, 16, 1.0, Metric::Interval).unwrap();
        let e = truncated_eigen_study(&one(), &one(), 2.0, &m, &[10.0, 5.0], &RayleighOptions::default());
        assert!(e.is_err());
    }

    #[test]
    fn seeded_runs_are_identical() {
        let m = build_mesh(0.0, 1.0, 48, 2.0, Metric::Interval).unwrap();
        let w1 = WeightSpec::distance_boundary(-4.0);
        let w2 = WeightSpec::distance_boundary(-1.0);
        let opts = RayleighOptions { seed: 9, max_iters: 300, ..Default::default() };
        let a = minimize_rayleigh(&w1, &w2, 3.0, &m, &opts).unwrap();
        let b = minimize_rayleigh(&w1, &w2, 3.0, &m, &opts).unwrap();
        assert_eq!(a, b);
    }
}
