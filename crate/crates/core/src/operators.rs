//! Discrete weighted energies and the ω-p-Laplacian in weak form.
//!
//! With piecewise linear fields the gradient is constant per element, so the
//! Dirichlet energy `∫ ω₂ |∇u|^p` is a sum of element terms
//! `ω₂(mid) |g_e|^p h_e metric(mid)`. Zero-order integrals `∫ ω₁ |u|^p` use
//! the interpolated midpoint value of the nodal function `|u|^p`, which makes
//! the mass lumped: `Σ_j L_j |u_j|^p`.
//!
//! `apply_plap` is the gradient of `dirichlet / p` and `reaction` the gradient
//! of `mass / p`, so the pairings below are exact discrete identities:
//! `<apply_plap(u), u> = dirichlet(u)` and `<reaction(u), u> = mass(u)`.

use serde::{Deserialize, Serialize};

use crate::banded::SymTridiagonal;
use crate::error::{arg_err, Result};
use crate::mesh::{gradient_of, lumped_weights, Field, Mesh1D};
use crate::weights::WeightSpec;

/// The integrals making up the Rayleigh quotient, plus the squared L² norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub dirichlet: f64,
    pub mass: f64,
    pub l2sq: f64,
    /// `dirichlet / mass`, absent when `mass == 0`.
    pub quotient: Option<f64>,
}

/// A weight pair and exponent sampled once on a mesh.
#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: Mesh1D,
    p: f64,
    /// `ω₂(mid_e) h_e metric(mid_e)` per element.
    stiff_weight: Vec<f64>,
    /// Lumped `ω₁` weights per node.
    mass_weight: Vec<f64>,
    /// Lumped unit weights per node (the L² inner product).
    l2_weight: Vec<f64>,
}

impl Discretization {
    pub fn new(mesh: &Mesh1D, omega1: &WeightSpec, omega2: &WeightSpec, p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return arg_err(format!("exponent p must be > 1, got {p}"));
        }
        let stiff_weight: Vec<f64> = mesh
            .midpoint_samples(omega2)
            .iter()
            .enumerate()
            .map(|(e, w)| w * mesh.measure(e))
            .collect();
        let mass_weight = lumped_weights(omega1, mesh);
        let l2_weight = lumped_weights(&WeightSpec::Constant { value: 1.0 }, mesh);
        if stiff_weight.iter().chain(&mass_weight).any(|v| !v.is_finite() || *v < 0.0) {
            return arg_err("weights must be finite and nonnegative at every element midpoint");
        }
        Ok(Self { mesh: mesh.clone(), p, stiff_weight, mass_weight, l2_weight })
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn mass_weights(&self) -> &[f64] {
        &self.mass_weight
    }

    pub fn l2_weights(&self) -> &[f64] {
        &self.l2_weight
    }

    fn slopes(&self, u: &[f64]) -> Vec<f64> {
        // lengths are checked by the public entry points
        u.windows(2)
            .zip(self.mesh.nodes().windows(2))
            .map(|(u, x)| (u[1] - u[0]) / (x[1] - x[0]))
            .collect()
    }

    pub fn dirichlet(&self, u: &[f64]) -> f64 {
        self.slopes(u)
            .iter()
            .zip(&self.stiff_weight)
            .map(|(g, w)| w * g.abs().powf(self.p))
            .sum()
    }

    pub fn mass(&self, u: &[f64]) -> f64 {
        u.iter().zip(&self.mass_weight).map(|(v, w)| w * v.abs().powf(self.p)).sum()
    }

    pub fn l2sq(&self, u: &[f64]) -> f64 {
        u.iter().zip(&self.l2_weight).map(|(v, w)| w * v * v).sum()
    }

    pub fn breakdown(&self, u: &[f64]) -> EnergyBreakdown {
        let dirichlet = self.dirichlet(u);
        let mass = self.mass(u);
        EnergyBreakdown {
            dirichlet,
            mass,
            l2sq: self.l2sq(u),
            quotient: (mass > 0.0).then(|| dirichlet / mass),
        }
    }

    /// Element coefficients `ω₂ h metric (|g|² + ε²)^((p-2)/2) / h²` of the
    /// stiffness matrix frozen at `w`.
    fn lagged_coefficients(&self, w: &[f64], eps: f64) -> Vec<f64> {
        let half_exp = 0.5 * (self.p - 2.0);
        self.slopes(w)
            .iter()
            .enumerate()
            .map(|(e, g)| {
                let h = self.mesh.h(e);
                self.stiff_weight[e] * (g * g + eps * eps).powf(half_exp) / (h * h)
            })
            .collect()
    }

    /// Weak-form residual of `-div(ω₂ (|∇u|² + ε²)^((p-2)/2) ∇u)` against the
    /// hat basis; pinned rows return the nodal value itself.
    pub fn plap(&self, u: &[f64], eps: f64) -> Vec<f64> {
        let coef = self.lagged_coefficients(u, eps);
        let mut r = vec![0.0; u.len()];
        for (e, c) in coef.iter().enumerate() {
            let flux = c * (u[e + 1] - u[e]);
            r[e] -= flux;
            r[e + 1] += flux;
        }
        self.pin_rows(&mut r, u);
        r
    }

    /// `L_j |u_j|^(p-2) u_j`, the gradient of `mass / p`; zero on pinned rows.
    pub fn reaction(&self, u: &[f64]) -> Vec<f64> {
        let mut r: Vec<f64> = u
            .iter()
            .zip(&self.mass_weight)
            .map(|(v, w)| w * v.abs().powf(self.p - 2.0) * v)
            .collect();
        let n = r.len();
        if self.mesh.dirichlet_left() {
            r[0] = 0.0;
        }
        if self.mesh.dirichlet_right() {
            r[n - 1] = 0.0;
        }
        r
    }

    fn pin_rows(&self, r: &mut [f64], u: &[f64]) {
        let n = r.len();
        if self.mesh.dirichlet_left() {
            r[0] = u[0];
        }
        if self.mesh.dirichlet_right() {
            r[n - 1] = u[n - 1];
        }
    }

    /// Stiffness matrix with coefficients frozen at `w`, restricted to the
    /// free nodes. `K(u) u` reproduces [`Self::plap`] on the free rows.
    pub fn lagged_stiffness(&self, w: &[f64], eps: f64) -> SymTridiagonal {
        let coef = self.lagged_coefficients(w, eps);
        let free = self.mesh.free_nodes();
        let mut k = SymTridiagonal::zeros(free.len());
        for (e, c) in coef.iter().enumerate() {
            for (i, j) in [(e, e + 1), (e + 1, e)] {
                if free.contains(&i) {
                    k.diag[i - free.start] += c;
                }
                if i < j && free.contains(&i) && free.contains(&j) {
                    k.off[i - free.start] -= c;
                }
            }
        }
        k
    }
}

fn check_field(u: &Field, mesh: &Mesh1D) -> Result<()> {
    if u.len() != mesh.n_nodes() {
        return arg_err(format!("field has {} values, mesh has {} nodes", u.len(), mesh.n_nodes()));
    }
    Ok(())
}

/// `∫ ω₂ |∇u|^p`.
pub fn dirichlet_energy(u: &Field, omega2: &WeightSpec, p: f64, mesh: &Mesh1D) -> Result<f64> {
    if !(p > 1.0) {
        return arg_err(format!("exponent p must be > 1, got {p}"));
    }
    let g = gradient_of(u.values(), mesh)?;
    let abs_p: Vec<f64> = g.iter().map(|g| g.abs().powf(p)).collect();
    crate::mesh::integrate(&abs_p, omega2, mesh)
}

/// `∫ ω₁ |u|^p` with the interpolated midpoint rule.
pub fn mass_energy(u: &Field, omega1: &WeightSpec, p: f64, mesh: &Mesh1D) -> Result<f64> {
    if !(p > 1.0) {
        return arg_err(format!("exponent p must be > 1, got {p}"));
    }
    check_field(u, mesh)?;
    let abs_p: Vec<f64> = u.values().iter().map(|v| v.abs().powf(p)).collect();
    crate::mesh::nodal_integrate(&abs_p, omega1, mesh)
}

/// Weak form of `-Δ_p^{ω₂} u` (positive definite sign convention) with
/// gradient regularization `ε`. Requires `p >= 2`.
pub fn apply_plap(u: &Field, omega2: &WeightSpec, p: f64, eps: f64, mesh: &Mesh1D) -> Result<Field> {
    if !(p >= 2.0) {
        return arg_err(format!("apply_plap needs p >= 2, got {p}"));
    }
    if !(eps >= 0.0) {
        return arg_err(format!("regularization must be >= 0, got {eps}"));
    }
    check_field(u, mesh)?;
    let one = WeightSpec::Constant { value: 1.0 };
    let disc = Discretization::new(mesh, &one, omega2, p)?;
    Ok(Field::from_raw(disc.plap(u.values(), eps)))
}

/// `<L_λ u, u> = dirichlet(u) - λ mass(u)`.
pub fn pairing_l_lambda(
    u: &Field,
    lambda: f64,
    omega1: &WeightSpec,
    omega2: &WeightSpec,
    p: f64,
    mesh: &Mesh1D,
) -> Result<f64> {
    Ok(dirichlet_energy(u, omega2, p, mesh)? - lambda * mass_energy(u, omega1, p, mesh)?)
}

/// All energies of `u` at once.
pub fn energy_breakdown(
    u: &Field,
    omega1: &WeightSpec,
    omega2: &WeightSpec,
    p: f64,
    mesh: &Mesh1D,
) -> Result<EnergyBreakdown> {
    check_field(u, mesh)?;
    Ok(Discretization::new(mesh, omega1, omega2, p)?.breakdown(u.values()))
}

/// Euclidean pairing of nodal vectors, the discrete counterpart of the L²
/// duality used for residuals.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, Metric};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one() -> WeightSpec {
        WeightSpec::Constant { value: 1.0 }
    }

    fn hat(mesh: &Mesh1D) -> Field {
        Field::from_fn(mesh, |x| 1.0 - (2.0 * x - 1.0).abs())
    }

    fn random_field(mesh: &Mesh1D, rng: &mut ChaCha8Rng) -> Field {
        Field::pinned((0..mesh.n_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect(), mesh).unwrap()
    }

    #[test]
    fn zero_field_has_zero_energies() {
        let m = build_mesh(0.0, 1.0, 8, 1.0, Metric::Interval).unwrap();
        let z = Field::zeros(&m);
        assert_eq!(dirichlet_energy(&z, &one(), 3.0, &m).unwrap(), 0.0);
        assert_eq!(mass_energy(&z, &one(), 3.0, &m).unwrap(), 0.0);
        assert!(apply_plap(&z, &one(), 3.0, 0.0, &m).unwrap().values().iter().all(|&v| v == 0.0));
        let b = energy_breakdown(&z, &one(), &one(), 3.0, &m).unwrap();
        assert!(b.quotient.is_none());
    }

    #[test]
    fn hat_energies() {
        let m = build_mesh(0.0, 1.0, 4, 1.0, Metric::Interval).unwrap();
        assert_abs_diff_eq!(dirichlet_energy(&hat(&m), &one(), 3.0, &m).unwrap(), 8.0, epsilon = 1e-12);
        let fine = build_mesh(0.0, 1.0, 512, 1.0, Metric::Interval).unwrap();
        // 2 ∫_0^{1/2} (2x)^3 dx = 1/4
        assert_abs_diff_eq!(mass_energy(&hat(&fine), &one(), 3.0, &fine).unwrap(), 0.25, epsilon = 1e-3);
    }

    #[test]
    fn homogeneity() {
        let m = build_mesh(0.0, 1.0, 32, 2.0, Metric::Interval).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_field(&m, &mut rng);
        let p = 3.0;
        let w = WeightSpec::distance_boundary(-1.0);
        let d = dirichlet_energy(&u, &w, p, &m).unwrap();
        let d2 = dirichlet_energy(&u.scaled(2.0), &w, p, &m).unwrap();
        assert_abs_diff_eq!(d2, 8.0 * d, epsilon = 1e-12 * d2);
        let ms = mass_energy(&u, &w, p, &m).unwrap();
        let ms3 = mass_energy(&u.scaled(-3.0), &w, p, &m).unwrap();
        assert_abs_diff_eq!(ms3, 27.0 * ms, epsilon = 1e-12 * ms3);
    }

    #[test]
    fn p2_stiffness_action() {
        let m = build_mesh(0.0, 1.0, 4, 1.0, Metric::Interval).unwrap();
        let u = Field::new(vec![0.0, 0.0, 1.0, 0.0, 0.0], &m).unwrap();
        let r = apply_plap(&u, &one(), 2.0, 0.0, &m).unwrap();
        for (a, b) in r.values()[1..4].iter().zip([-4.0, 8.0, -4.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        assert!(apply_plap(&u, &one(), 1.5, 0.0, &m).is_err());
        assert!(apply_plap(&u, &one(), 3.0, -1.0, &m).is_err());
    }

    #[test]
    fn plap_pairs_to_dirichlet_energy() {
        let m = build_mesh(0.0, 1.0, 40, 2.0, Metric::Radial { dim: 4 }).unwrap();
        let w = WeightSpec::power_radial(-1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let u = random_field(&m, &mut rng);
            let r = apply_plap(&u, &w, 3.0, 0.0, &m).unwrap();
            let d = dirichlet_energy(&u, &w, 3.0, &m).unwrap();
            assert_abs_diff_eq!(dot(r.values(), u.values()), d, epsilon = 1e-10 * d);
        }
    }

    #[test]
    fn reaction_pairs_to_mass() {
        let m = build_mesh(0.0, 1.0, 40, 2.0, Metric::Interval).unwrap();
        let w = WeightSpec::distance_boundary(-4.0);
        let disc = Discretization::new(&m, &w, &one(), 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_field(&m, &mut rng);
        let lhs = dot(&disc.reaction(u.values()), u.values());
        assert_abs_diff_eq!(lhs, disc.mass(u.values()), epsilon = 1e-10 * lhs);
    }

    #[test]
    fn lagged_stiffness_reproduces_residual() {
        let m = build_mesh(0.0, 1.0, 30, 2.0, Metric::Radial { dim: 3 }).unwrap();
        let disc = Discretization::new(&m, &one(), &WeightSpec::power_radial(0.5), 3.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = random_field(&m, &mut rng);
        let k = disc.lagged_stiffness(u.values(), 1e-3);
        let free = m.free_nodes();
        let ku = k.mul_vec(&u.values()[free.clone()]);
        let r = disc.plap(u.values(), 1e-3);
        for (a, b) in ku.iter().zip(&r[free]) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-10 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn pairing_at_quotient_vanishes() {
        let m = build_mesh(0.0, 1.0, 64, 1.0, Metric::Interval).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_field(&m, &mut rng);
        let w1 = WeightSpec::distance_boundary(-2.0);
        let b = energy_breakdown(&u, &w1, &one(), 3.0, &m).unwrap();
        let q = b.quotient.unwrap();
        let pr = pairing_l_lambda(&u, q, &w1, &one(), 3.0, &m).unwrap();
        assert!(pr.abs() <= 1e-12 * b.dirichlet);
        assert_eq!(pairing_l_lambda(&u, 0.0, &w1, &one(), 3.0, &m).unwrap(), b.dirichlet);
    }

    #[test]
    fn quotient_is_scale_invariant() {
        let m = build_mesh(0.0, 1.0, 64, 2.0, Metric::Interval).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let w = WeightSpec::distance_boundary(-1.0);
        for _ in 0..20 {
            let u = random_field(&m, &mut rng);
            let c: f64 = rng.gen_range(-5.0..5.0);
            let q = energy_breakdown(&u, &w, &w, 3.0, &m).unwrap().quotient.unwrap();
            let qc = energy_breakdown(&u.scaled(c), &w, &w, 3.0, &m).unwrap().quotient.unwrap();
            assert_abs_diff_eq!(q, qc, epsilon = 1e-12 * q);
        }
    }
}
