//! Comparison ODE `h″ = H h` with `h(0) = 0, h′(0) = 1`, the resulting
//! bound `Δ_g r ≤ m h′/h` for minimal graphs, and the `√(a² + r²)` barrier.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mse::{graph_laplacian, RadialGraph};

/// Absolute part of the comparison tolerance.
pub const COMPARISON_ABS_TOL: f64 = 1e-6;
/// Relative part of the comparison tolerance.
pub const COMPARISON_REL_TOL: f64 = 1e-8;

/// Named non-negative sources.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HSpec {
    Zero,
    /// `H ≡ κ̄²`.
    ConstKappa { kappa_bar: f64 },
    /// `H = κ̄²/(1+t²)`.
    DecayKappa { kappa_bar: f64 },
}

impl HSpec {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            HSpec::Zero => 0.0,
            HSpec::ConstKappa { kappa_bar } => kappa_bar * kappa_bar,
            HSpec::DecayKappa { kappa_bar } => kappa_bar * kappa_bar / (1.0 + t * t),
        }
    }
}

/// Source term of the comparison ODE.
#[derive(Clone)]
pub enum HSource {
    Named(HSpec),
    Custom { label: String, func: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl fmt::Debug for HSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HSource::Named(s) => write!(f, "{s:?}"),
            HSource::Custom { label, .. } => write!(f, "Custom({label})"),
        }
    }
}

impl From<HSpec> for HSource {
    fn from(s: HSpec) -> Self {
        HSource::Named(s)
    }
}

impl HSource {
    pub fn custom(label: &str, func: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        HSource::Custom { label: label.to_string(), func: Arc::new(func) }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            HSource::Named(s) => s.eval(t),
            HSource::Custom { func, .. } => func(t),
        }
    }

    pub fn label(&self) -> String {
        match self {
            HSource::Named(HSpec::Zero) => "zero".into(),
            HSource::Named(HSpec::ConstKappa { kappa_bar }) => format!("const-kappa({kappa_bar})"),
            HSource::Named(HSpec::DecayKappa { kappa_bar }) => format!("decay-kappa({kappa_bar})"),
            HSource::Custom { label, .. } => label.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ComparisonProfile {
    pub t: Vec<f64>,
    pub h: Vec<f64>,
    pub dh: Vec<f64>,
    pub source: HSource,
    /// Max of `|h″ - H h|` over interior nodes, with `h″` from a fourth-order
    /// difference of `h′`.
    pub residual: f64,
}

/// Integrates `h″ = H h` with classical RK4 from `t = 0`, `(h, h′) = (0, 1)`,
/// on the uniform grid `t_i = i t_max / n`, `i = 0..=n`.
pub fn solve_h(source: impl Into<HSource>, t_max: f64, n: usize) -> Result<ComparisonProfile> {
    let source = source.into();
    if n < 16 {
        return Err(Error::Argument(format!("grid size n = {n} must be at least 16")));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::Argument(format!("t_max = {t_max} must be positive")));
    }
    let dt = t_max / n as f64;
    let mut t = Vec::with_capacity(n + 1);
    let mut h = Vec::with_capacity(n + 1);
    let mut dh = Vec::with_capacity(n + 1);
    let (mut y, mut z) = (0.0f64, 1.0f64);
    let src = |s: f64| -> Result<f64> {
        let v = source.eval(s);
        if !(v >= 0.0) {
            return Err(Error::Precondition(format!("H({s}) = {v} is negative")));
        }
        Ok(v)
    };
    for i in 0..=n {
        let ti = i as f64 * dt;
        t.push(ti);
        h.push(y);
        dh.push(z);
        if i == n {
            src(ti)?;
            break;
        }
        let (ha, hm, hb) = (src(ti)?, src(ti + 0.5 * dt)?, src(ti + dt)?);
        let k1 = (z, ha * y);
        let k2 = (z + 0.5 * dt * k1.1, hm * (y + 0.5 * dt * k1.0));
        let k3 = (z + 0.5 * dt * k2.1, hm * (y + 0.5 * dt * k2.0));
        let k4 = (z + dt * k3.1, hb * (y + dt * k3.0));
        y += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        z += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    let mut residual = 0.0f64;
    for i in 2..n - 1 {
        let d2 = (-dh[i + 2] + 8.0 * dh[i + 1] - 8.0 * dh[i - 1] + dh[i - 2]) / (12.0 * dt);
        residual = residual.max((d2 - source.eval(t[i]) * h[i]).abs());
    }
    Ok(ComparisonProfile { t, h, dh, source, residual })
}

impl ComparisonProfile {
    pub fn t_max(&self) -> f64 {
        *self.t.last().unwrap()
    }

    fn locate(&self, r: f64) -> Result<(usize, f64, f64)> {
        let (lo, hi) = (self.t[0], self.t_max());
        if !(r >= lo && r <= hi) {
            return Err(Error::Domain { r, lo, hi });
        }
        let n = self.t.len() - 1;
        let dt = hi / n as f64;
        let i = ((r / dt).floor() as usize).min(n - 1);
        Ok((i, dt, (r - self.t[i]) / dt))
    }

    /// Cubic Hermite interpolation of `h` (from `h, h′`) and of `h′` (from
    /// `h′, H h`).
    pub fn interpolate(&self, r: f64) -> Result<(f64, f64)> {
        let (i, dt, s) = self.locate(r)?;
        let herm = |p0: f64, m0: f64, p1: f64, m1: f64| {
            let s2 = s * s;
            let s3 = s2 * s;
            (2.0 * s3 - 3.0 * s2 + 1.0) * p0
                + (s3 - 2.0 * s2 + s) * dt * m0
                + (-2.0 * s3 + 3.0 * s2) * p1
                + (s3 - s2) * dt * m1
        };
        let (a, b) = (i, i + 1);
        let h = herm(self.h[a], self.dh[a], self.h[b], self.dh[b]);
        let hh_a = self.source.eval(self.t[a]) * self.h[a];
        let hh_b = self.source.eval(self.t[b]) * self.h[b];
        let dh = herm(self.dh[a], hh_a, self.dh[b], hh_b);
        Ok((h, dh))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)?;
        wtr.write_record(["t", "h", "dh"])?;
        for i in 0..self.t.len() {
            wtr.write_record(&[
                format!("{:.17e}", self.t[i]),
                format!("{:.17e}", self.h[i]),
                format!("{:.17e}", self.dh[i]),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// `m h′(r)/h(r)`: closed forms for the named sources, interpolation of the
/// stored profile otherwise.
///
/// For `H = κ̄²/(1+t²)` the closed form comes from the supersolution
/// `t^{κ̄′}` with `κ̄′ = (1+√(1+4κ̄²))/2`.
pub fn graph_laplacian_bound(m: usize, profile: &ComparisonProfile, r: f64) -> Result<f64> {
    let (lo, hi) = (profile.t[0], profile.t_max());
    if !(r > lo && r <= hi) {
        return Err(Error::Domain { r, lo, hi });
    }
    let m = m as f64;
    Ok(match &profile.source {
        HSource::Named(HSpec::Zero) => m / r,
        HSource::Named(HSpec::ConstKappa { kappa_bar }) if *kappa_bar > 0.0 => {
            m * kappa_bar / (kappa_bar * r).tanh()
        }
        HSource::Named(HSpec::ConstKappa { .. }) => m / r,
        HSource::Named(HSpec::DecayKappa { kappa_bar }) => {
            m * (1.0 + (1.0 + 4.0 * kappa_bar * kappa_bar).sqrt()) / (2.0 * r)
        }
        HSource::Custom { .. } => interpolated_bound(m as usize, profile, r)?,
    })
}

/// `m h′/h` from the stored profile regardless of the source.
pub fn interpolated_bound(m: usize, profile: &ComparisonProfile, r: f64) -> Result<f64> {
    let (h, dh) = profile.interpolate(r)?;
    Ok(m as f64 * dh / h)
}

/// Pointwise minimum of `h″ - H h` over `grid` for a candidate `h` given as
/// `t ↦ (h, h″)`.
pub fn supersolution_defect(source: &HSource, grid: &[f64], h: impl Fn(f64) -> (f64, f64)) -> f64 {
    grid.iter()
        .map(|&t| {
            let (v, d2) = h(t);
            d2 - source.eval(t) * v
        })
        .fold(f64::INFINITY, f64::min)
}

/// The function `ψ = √(a² + r²)` with `|Dψ| < 1` and `Δ_g ψ` bounded by
/// `(m+1) max{1, κ̄}/a`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PsiBarrier {
    pub a: f64,
    pub laplacian_bound: f64,
    pub gradient_bound: f64,
}

impl PsiBarrier {
    pub fn value(&self, r: f64) -> f64 {
        self.a.hypot(r)
    }

    pub fn gradient(&self, r: f64) -> f64 {
        r / self.a.hypot(r)
    }

    pub fn second_derivative(&self, r: f64) -> f64 {
        let s = self.a.hypot(r);
        self.a * self.a / (s * s * s)
    }
}

pub fn psi_barrier(a: f64, kappa_bar: f64, m: usize) -> Result<PsiBarrier> {
    if !(a > 0.0) {
        return Err(Error::Argument(format!("barrier scale a = {a} must be positive")));
    }
    Ok(PsiBarrier { a, laplacian_bound: (m as f64 + 1.0) * kappa_bar.max(1.0) / a, gradient_bound: 1.0 })
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphComparisonReport {
    pub points: usize,
    /// `min (m h′/h - Δ_g r)` over interior nodes.
    pub worst_margin: f64,
    pub worst_radius: f64,
    /// Max deviation of the discrete `Δ_g r` from `(m-1)η′/η`.
    pub max_exact_deviation: f64,
    pub passed: bool,
}

/// Checks `Δ_g r ≤ m h′/h` along a radial graph, with `Δ_g r` computed by
/// the discrete divergence on the graph.
pub fn verify_graph_comparison(graph: &RadialGraph, profile: &ComparisonProfile) -> Result<GraphComparisonReport> {
    let n = graph.len();
    if graph.r[0] < profile.t[0] || graph.r[n - 1] > profile.t_max() {
        return Err(Error::Shape(format!(
            "graph range [{}, {}] exceeds profile range [0, {}]",
            graph.r[0],
            graph.r[n - 1],
            profile.t_max()
        )));
    }
    let man = graph.manifold();
    let m = man.dim();
    let lap = graph_laplacian(graph, &graph.r)?;
    let mut worst_margin = f64::INFINITY;
    let mut worst_radius = f64::NAN;
    let mut dev = 0.0f64;
    let mut passed = true;
    for (k, &lr) in lap.iter().enumerate() {
        let r = graph.r[k + 1];
        let eta = man.eta().eval(r)?;
        let exact = (m as f64 - 1.0) * eta.d1 / eta.value;
        dev = dev.max((lr - exact).abs());
        let bound = graph_laplacian_bound(m, profile, r)?;
        let margin = bound - lr;
        if margin < -(COMPARISON_ABS_TOL + COMPARISON_REL_TOL * bound.abs()) {
            passed = false;
        }
        if margin < worst_margin {
            worst_margin = margin;
            worst_radius = r;
        }
    }
    Ok(GraphComparisonReport { points: lap.len(), worst_margin, worst_radius, max_exact_deviation: dev, passed })
}
