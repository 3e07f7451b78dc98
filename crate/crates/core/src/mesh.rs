//! Graded 1D meshes, nodal fields and midpoint quadrature.
//!
//! Every integral is a one-point midpoint rule per element, multiplied by the
//! metric factor `r^(N-1)` on radial meshes. Weights are only ever sampled at
//! element midpoints, so a weight that is singular at a mesh endpoint never
//! produces an infinite sample.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Result};
use crate::weights::{Domain, WeightSpec};

/// Measure carried by the 1D coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    Interval,
    /// Radial coordinate of an `dim`-dimensional ball; integrands get `r^(dim-1)`.
    Radial { dim: u32 },
}

impl Metric {
    pub fn factor(&self, x: f64) -> f64 {
        match *self {
            Metric::Interval | Metric::Radial { dim: 1 } => 1.0,
            Metric::Radial { dim } => x.powi(dim as i32 - 1),
        }
    }
}

/// Serializable description of a graded mesh, `{a, b, n, grading, metric, N}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    #[serde(default = "default_grading")]
    pub grading: f64,
    #[serde(default)]
    pub metric: MetricKind,
    /// Ambient dimension for radial meshes.
    #[serde(rename = "N", default = "default_dim")]
    pub dim: u32,
    /// Grade toward both endpoints instead of only toward `a`.
    #[serde(default)]
    pub symmetric: bool,
}

fn default_grading() -> f64 {
    2.0
}

fn default_dim() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    #[default]
    Interval,
    Radial,
}

impl MeshSpec {
    pub fn metric(&self) -> Metric {
        match self.metric {
            MetricKind::Interval => Metric::Interval,
            MetricKind::Radial => Metric::Radial { dim: self.dim },
        }
    }

    pub fn build(&self) -> Result<Mesh1D> {
        if self.symmetric {
            build_mesh_symmetric(self.a, self.b, self.n, self.grading, self.metric())
        } else {
            build_mesh(self.a, self.b, self.n, self.grading, self.metric())
        }
    }
}

/// A 1D mesh with strictly increasing nodes and Dirichlet flags at the ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    nodes: Vec<f64>,
    metric: Metric,
    dirichlet_left: bool,
    dirichlet_right: bool,
}

impl Mesh1D {
    /// Builds a mesh from explicit nodes. Radial meshes starting at the origin
    /// cannot pin the origin.
    pub fn from_nodes(
        nodes: Vec<f64>,
        metric: Metric,
        dirichlet_left: bool,
        dirichlet_right: bool,
    ) -> Result<Self> {
        if nodes.len() < 3 {
            return arg_err(format!("mesh needs at least 2 elements, got {}", nodes.len().saturating_sub(1)));
        }
        if nodes.iter().any(|x| !x.is_finite()) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return arg_err("mesh nodes must be finite and strictly increasing");
        }
        if let Metric::Radial { dim } = metric {
            if dim == 0 {
                return arg_err("radial metric needs dimension >= 1");
            }
            if nodes[0] < 0.0 {
                return arg_err("radial mesh must start at r >= 0");
            }
            if nodes[0] == 0.0 && dirichlet_left {
                return arg_err("the origin of a radial mesh cannot carry a Dirichlet condition");
            }
        }
        Ok(Self { nodes, metric, dirichlet_left, dirichlet_right })
    }

    /// Same nodes with different Dirichlet flags.
    pub fn with_dirichlet(&self, left: bool, right: bool) -> Result<Self> {
        Self::from_nodes(self.nodes.clone(), self.metric, left, right)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn a(&self) -> f64 {
        self.nodes[0]
    }

    pub fn b(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn dirichlet_left(&self) -> bool {
        self.dirichlet_left
    }

    pub fn dirichlet_right(&self) -> bool {
        self.dirichlet_right
    }

    pub fn is_dirichlet(&self, node: usize) -> bool {
        (node == 0 && self.dirichlet_left) || (node == self.nodes.len() - 1 && self.dirichlet_right)
    }

    /// Indices of the nodes that are not pinned.
    pub fn free_nodes(&self) -> std::ops::Range<usize> {
        let lo = usize::from(self.dirichlet_left);
        let hi = self.nodes.len() - usize::from(self.dirichlet_right);
        lo..hi
    }

    pub fn h(&self, e: usize) -> f64 {
        self.nodes[e + 1] - self.nodes[e]
    }

    pub fn midpoint(&self, e: usize) -> f64 {
        0.5 * (self.nodes[e] + self.nodes[e + 1])
    }

    /// `h_e * metric(mid_e)`, the measure of element `e`.
    pub fn measure(&self, e: usize) -> f64 {
        self.h(e) * self.metric.factor(self.midpoint(e))
    }

    pub fn domain(&self) -> Domain {
        match self.metric {
            Metric::Interval => Domain::interval(self.a(), self.b()),
            Metric::Radial { .. } => Domain::radial(self.a(), self.b()),
        }
    }

    /// Weight sampled at every element midpoint.
    pub fn midpoint_samples(&self, w: &WeightSpec) -> Vec<f64> {
        let dom = self.domain();
        (0..self.n_elements()).map(|e| w.value(self.midpoint(e), &dom)).collect()
    }

    /// Short human readable identifier.
    pub fn describe(&self) -> String {
        let metric = match self.metric {
            Metric::Interval => "interval".to_string(),
            Metric::Radial { dim } => format!("radial(N={dim})"),
        };
        format!("{metric}[{}, {}] n={}", self.a(), self.b(), self.n_elements())
    }

    fn check_nodal(&self, len: usize) -> Result<()> {
        if len != self.n_nodes() {
            return arg_err(format!("expected {} nodal values, got {len}", self.n_nodes()));
        }
        Ok(())
    }

    fn check_elemental(&self, len: usize) -> Result<()> {
        if len != self.n_elements() {
            return arg_err(format!("expected {} element values, got {len}", self.n_elements()));
        }
        Ok(())
    }
}

fn default_dirichlet(a: f64, metric: Metric) -> (bool, bool) {
    match metric {
        Metric::Interval => (true, true),
        Metric::Radial { .. } => (a > 0.0, true),
    }
}

/// Nodes `x_i = a + (b - a) (i/n)^grading`, graded toward `a`.
pub fn build_mesh(a: f64, b: f64, n: usize, grading: f64, metric: Metric) -> Result<Mesh1D> {
    check_build(a, b, n, grading)?;
    let nodes = (0..=n)
        .map(|i| {
            if i == n {
                b
            } else {
                a + (b - a) * (i as f64 / n as f64).powf(grading)
            }
        })
        .collect();
    let (l, r) = default_dirichlet(a, metric);
    Mesh1D::from_nodes(nodes, metric, l, r)
}

/// Graded toward both endpoints, mirror symmetric about the centre.
pub fn build_mesh_symmetric(a: f64, b: f64, n: usize, grading: f64, metric: Metric) -> Result<Mesh1D> {
    check_build(a, b, n, grading)?;
    let nodes = (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let s = if 2 * i <= n {
                0.5 * (2.0 * t).powf(grading)
            } else {
                1.0 - 0.5 * (2.0 - 2.0 * t).powf(grading)
            };
            if i == n {
                b
            } else {
                a + (b - a) * s
            }
        })
        .collect();
    let (l, r) = default_dirichlet(a, metric);
    Mesh1D::from_nodes(nodes, metric, l, r)
}

fn check_build(a: f64, b: f64, n: usize, grading: f64) -> Result<()> {
    if n < 2 {
        return arg_err(format!("mesh needs n >= 2 elements, got {n}"));
    }
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return arg_err(format!("mesh needs finite a < b, got a={a}, b={b}"));
    }
    if !(grading >= 1.0) || !grading.is_finite() {
        return arg_err(format!("grading must be >= 1, got {grading}"));
    }
    Ok(())
}

/// Nodal values of a piecewise linear function; pinned nodes hold exactly 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: Vec<f64>,
}

impl Field {
    pub fn new(values: Vec<f64>, mesh: &Mesh1D) -> Result<Self> {
        mesh.check_nodal(values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return arg_err("field values must be finite");
        }
        if (mesh.dirichlet_left && values[0] != 0.0)
            || (mesh.dirichlet_right && values[values.len() - 1] != 0.0)
        {
            return arg_err("field must vanish at Dirichlet nodes");
        }
        Ok(Self { values })
    }

    pub fn zeros(mesh: &Mesh1D) -> Self {
        Self { values: vec![0.0; mesh.n_nodes()] }
    }

    /// Samples `f` at the nodes and pins the Dirichlet nodes to zero.
    pub fn from_fn(mesh: &Mesh1D, f: impl Fn(f64) -> f64) -> Self {
        let mut values: Vec<f64> = mesh.nodes().iter().map(|&x| f(x)).collect();
        pin(&mut values, mesh);
        Self { values }
    }

    /// Values with Dirichlet nodes overwritten by zero. Non-finite entries are
    /// rejected.
    pub fn pinned(mut values: Vec<f64>, mesh: &Mesh1D) -> Result<Self> {
        mesh.check_nodal(values.len())?;
        pin(&mut values, mesh);
        Self::new(values, mesh)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self { values }
    }
}

fn pin(values: &mut [f64], mesh: &Mesh1D) {
    let last = values.len() - 1;
    if mesh.dirichlet_left {
        values[0] = 0.0;
    }
    if mesh.dirichlet_right {
        values[last] = 0.0;
    }
}

/// Element-wise slope `(u_{i+1} - u_i) / h_i`.
pub fn gradient(u: &Field, mesh: &Mesh1D) -> Result<Vec<f64>> {
    gradient_of(u.values(), mesh)
}

pub(crate) fn gradient_of(u: &[f64], mesh: &Mesh1D) -> Result<Vec<f64>> {
    mesh.check_nodal(u.len())?;
    Ok(u.windows(2)
        .zip(mesh.nodes.windows(2))
        .map(|(u, x)| (u[1] - u[0]) / (x[1] - x[0]))
        .collect())
}

/// Midpoint rule `Σ g_e w(mid_e) h_e metric(mid_e)` for element-wise `g`.
pub fn integrate(g: &[f64], w: &WeightSpec, mesh: &Mesh1D) -> Result<f64> {
    mesh.check_elemental(g.len())?;
    let dom = mesh.domain();
    Ok(g.iter()
        .enumerate()
        .map(|(e, ge)| ge * w.value(mesh.midpoint(e), &dom) * mesh.measure(e))
        .sum())
}

/// Midpoint rule for a nodal function `g`: the value at each midpoint is the
/// linear interpolant `(g_i + g_{i+1}) / 2`.
pub fn nodal_integrate(g: &[f64], w: &WeightSpec, mesh: &Mesh1D) -> Result<f64> {
    mesh.check_nodal(g.len())?;
    let mids: Vec<f64> = g.windows(2).map(|p| 0.5 * (p[0] + p[1])).collect();
    integrate(&mids, w, mesh)
}

/// Nodal weights `L_j = Σ_{e ∋ j} w(mid_e) h_e metric(mid_e) / 2`, so that
/// `nodal_integrate(g, w) = Σ_j L_j g_j`.
pub fn lumped_weights(w: &WeightSpec, mesh: &Mesh1D) -> Vec<f64> {
    let samples = mesh.midpoint_samples(w);
    let mut out = vec![0.0; mesh.n_nodes()];
    for (e, s) in samples.iter().enumerate() {
        let half = 0.5 * s * mesh.measure(e);
        out[e] += half;
        out[e + 1] += half;
    }
    out
}

/// Writes `(node, value)` rows.
pub fn write_field_csv(path: &Path, mesh: &Mesh1D, u: &Field) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["node", "value"])?;
    for (x, v) in mesh.nodes().iter().zip(u.values()) {
        w.write_record([format!("{x:e}"), format!("{v:e}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a field written by [`write_field_csv`]; nodes must match the mesh.
pub fn read_field_csv(path: &Path, mesh: &Mesh1D) -> Result<Field> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |s: &str| s.trim().parse::<f64>().ok();
        let (Some(x), Some(v)) = (parse(&rec[0]), parse(&rec[1])) else {
            return arg_err(format!("{}: row {i} is not numeric", path.display()));
        };
        if i >= mesh.n_nodes() || (x - mesh.nodes()[i]).abs() > 1e-12 * (1.0 + x.abs()) {
            return arg_err(format!("{}: node {i} does not match the mesh", path.display()));
        }
        values.push(v);
    }
    Field::new(values, mesh)
}
