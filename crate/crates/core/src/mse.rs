//! Radial minimal graphs on rotationally symmetric models, affine t-graphs
//! on doubly-warped models, and discrete curvature quantities.
//!
//! All divergences use staggered midpoint fluxes: for a radial function φ,
//! `(η^{m-1} a φ′)′` at node `i` is the difference of the cell fluxes on
//! either side divided by the dual cell width.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model_manifold::{ManifoldKind, ModelManifold, Warp};
use crate::quad;

/// Default residual pass threshold.
pub const RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct RadialGraph {
    manifold: ModelManifold,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub w: Vec<f64>,
    /// `η^{m-1} u′ / W` when the graph comes from the flux formula.
    pub flux: Option<f64>,
}

impl RadialGraph {
    pub fn from_samples(man: &ModelManifold, r: Vec<f64>, u: Vec<f64>, du: Vec<f64>) -> Result<Self> {
        if man.kind() != ManifoldKind::RotationallySymmetric {
            return Err(Error::UnsupportedKind("radial graphs need a rotationally symmetric model".into()));
        }
        if r.len() < 3 || u.len() != r.len() || du.len() != r.len() {
            return Err(Error::Shape(format!(
                "grid of {} points with {} values and {} slopes",
                r.len(),
                u.len(),
                du.len()
            )));
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Shape("radial grid must be strictly increasing".into()));
        }
        let (lo, hi) = man.domain();
        if r[0] < lo || *r.last().unwrap() > hi {
            return Err(Error::Domain { r: if r[0] < lo { r[0] } else { *r.last().unwrap() }, lo, hi });
        }
        let w = du.iter().map(|p| p.hypot(1.0)).collect();
        Ok(Self { manifold: man.clone(), r, u, du, w, flux: None })
    }

    /// Graph of a function given with its derivative.
    pub fn from_fn(man: &ModelManifold, r: Vec<f64>, f: impl Fn(f64) -> (f64, f64)) -> Result<Self> {
        let (u, du): (Vec<f64>, Vec<f64>) = r.iter().map(|&x| f(x)).unzip();
        Self::from_samples(man, r, u, du)
    }

    pub fn constant(man: &ModelManifold, r: Vec<f64>, value: f64) -> Result<Self> {
        Self::from_fn(man, r, |_| (value, 0.0))
    }

    pub fn manifold(&self) -> &ModelManifold {
        &self.manifold
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    fn m(&self) -> usize {
        self.manifold.dim()
    }

    fn weight(&self, r: f64) -> f64 {
        self.manifold.eta().value(r).unwrap_or(f64::NAN).powi(self.m() as i32 - 1)
    }

    /// Cubic Hermite interpolation of `u` and the slope at `x`. Flux
    /// solutions use the exact slope formula.
    pub fn interpolate(&self, x: f64) -> Result<(f64, f64)> {
        let n = self.r.len();
        let (lo, hi) = (self.r[0], self.r[n - 1]);
        if !(x >= lo && x <= hi) {
            return Err(Error::Domain { r: x, lo, hi });
        }
        let i = match self.r.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => (i - 1).min(n - 2),
        };
        let h = self.r[i + 1] - self.r[i];
        let s = (x - self.r[i]) / h;
        let (h00, h10, h01, h11) =
            (2.0 * s.powi(3) - 3.0 * s * s + 1.0, s.powi(3) - 2.0 * s * s + s, -2.0 * s.powi(3) + 3.0 * s * s, s.powi(3) - s * s);
        let u = h00 * self.u[i] + h10 * h * self.du[i] + h01 * self.u[i + 1] + h11 * h * self.du[i + 1];
        let du = match self.flux {
            Some(c) => flux_slope(self.weight(x), c),
            None => (1.0 - s) * self.du[i] + s * self.du[i + 1],
        };
        Ok((u, du))
    }

    /// Second derivative of `u` from the stored slopes (second order,
    /// one-sided at the ends).
    pub fn second_derivative(&self) -> Vec<f64> {
        nonuniform_derivative(&self.r, &self.du)
    }

    /// `W² - u′² - 1` over the grid.
    pub fn slope_identity_defect(&self) -> f64 {
        self.w.iter().zip(&self.du).map(|(w, p)| (w * w - p * p - 1.0).abs()).fold(0.0, f64::max)
    }

    /// The flux `η^{m-1} u′/W` at every node.
    pub fn flux_profile(&self) -> Vec<f64> {
        self.r.iter().zip(&self.du).zip(&self.w).map(|((&r, p), w)| self.weight(r) * p / w).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let res = mse_residual_profile(self);
        let mut wtr = csv::Writer::from_path(path)?;
        wtr.write_record(["r", "u", "du", "W", "residual"])?;
        for i in 0..self.len() {
            let rv = if i == 0 || i + 1 == self.len() { f64::NAN } else { res[i - 1] };
            wtr.write_record(&[
                format!("{:.17e}", self.r[i]),
                format!("{:.17e}", self.u[i]),
                format!("{:.17e}", self.du[i]),
                format!("{:.17e}", self.w[i]),
                format!("{:.17e}", rv),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads `r, u, du` columns (extra columns ignored).
    pub fn read_csv(man: &ModelManifold, path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Config(format!("{}: missing column {name}", path.display())))
        };
        let (ir, iu, idu) = (col("r")?, col("u")?, col("du")?);
        let (mut r, mut u, mut du) = (vec![], vec![], vec![]);
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let get = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Config(format!("{}: bad number on data line {}", path.display(), line + 1)))
            };
            r.push(get(ir)?);
            u.push(get(iu)?);
            du.push(get(idu)?);
        }
        Self::from_samples(man, r, u, du)
    }
}

fn flux_slope(weight: f64, c: f64) -> f64 {
    c / ((weight - c.abs()) * (weight + c.abs())).sqrt()
}

/// Derivative of sampled values on a possibly non-uniform grid, second
/// order everywhere.
pub fn nonuniform_derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    let three = |i0: usize, at: usize| {
        let (x0, x1, x2) = (x[i0], x[i0 + 1], x[i0 + 2]);
        let t = x[at];
        let l0 = ((t - x1) + (t - x2)) / ((x0 - x1) * (x0 - x2));
        let l1 = ((t - x0) + (t - x2)) / ((x1 - x0) * (x1 - x2));
        let l2 = ((t - x0) + (t - x1)) / ((x2 - x0) * (x2 - x1));
        l0 * y[i0] + l1 * y[i0 + 1] + l2 * y[i0 + 2]
    };
    if n < 3 {
        return out;
    }
    out[0] = three(0, 0);
    for i in 1..n - 1 {
        out[i] = three(i - 1, i);
    }
    out[n - 1] = three(n - 3, n - 1);
    out
}

/// Exact radial solution with constant flux `η^{m-1}u′/W = c`, `u(r0) = 0`.
pub fn radial_flux_solution(man: &ModelManifold, c: f64, r0: f64, r1: f64, n: usize) -> Result<RadialGraph> {
    if man.kind() != ManifoldKind::RotationallySymmetric {
        return Err(Error::UnsupportedKind("flux solutions need a rotationally symmetric model".into()));
    }
    if !(r0 > 0.0 && r1 > r0) || n < 3 {
        return Err(Error::Argument(format!("need 0 < r0 < r1 and n >= 3 (got {r0}, {r1}, {n})")));
    }
    let p = man.dim() as i32 - 1;
    let weight = |r: f64| man.eta().value(r).map(|e| e.powi(p));
    let r: Vec<f64> = (0..n).map(|i| r0 + (r1 - r0) * i as f64 / (n - 1) as f64).collect();
    let mut du = Vec::with_capacity(n);
    for &x in &r {
        let wt = weight(x)?;
        if !(wt > c.abs()) {
            return Err(Error::FluxInfeasible { flux: c, radius: x });
        }
        du.push(flux_slope(wt, c));
    }
    let u = if c == 0.0 {
        vec![0.0; n]
    } else {
        quad::cumulative(|x| weight(x).map(|wt| flux_slope(wt, c)).unwrap_or(f64::NAN), &r)?
    };
    let mut g = RadialGraph::from_samples(man, r, u, du)?;
    g.flux = Some(c);
    Ok(g)
}

/// Discrete `Δ_g φ` at interior nodes for a radial function φ on the graph:
/// `(1/(W η^{m-1})) (η^{m-1} φ′/W)′` with midpoint fluxes.
pub fn graph_laplacian(graph: &RadialGraph, phi: &[f64]) -> Result<Vec<f64>> {
    if phi.len() != graph.len() {
        return Err(Error::Shape(format!("{} values on a {}-point graph", phi.len(), graph.len())));
    }
    let fluxes = midpoint_fluxes(graph, phi, |du_mid| 1.0 / du_mid.hypot(1.0));
    Ok(divergence(graph, &fluxes).into_iter().enumerate().map(|(k, d)| d / graph.w[k + 1]).collect())
}

/// `η_mid^{m-1} · a(u′_mid) · φ′_mid` on each cell.
fn midpoint_fluxes(graph: &RadialGraph, phi: &[f64], coeff: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..graph.len() - 1)
        .map(|i| {
            let h = graph.r[i + 1] - graph.r[i];
            let mid = 0.5 * (graph.r[i] + graph.r[i + 1]);
            let du_mid = (graph.u[i + 1] - graph.u[i]) / h;
            graph.weight(mid) * coeff(du_mid) * (phi[i + 1] - phi[i]) / h
        })
        .collect()
}

/// `(F_{i+1/2} - F_{i-1/2}) / (|dual cell| η_i^{m-1})` at interior nodes.
fn divergence(graph: &RadialGraph, fluxes: &[f64]) -> Vec<f64> {
    (1..graph.len() - 1)
        .map(|i| {
            let dual = 0.5 * (graph.r[i + 1] - graph.r[i - 1]);
            (fluxes[i] - fluxes[i - 1]) / (dual * graph.weight(graph.r[i]))
        })
        .collect()
}

/// Pointwise `div(Du/W)` at interior nodes.
pub fn mse_residual_profile(graph: &RadialGraph) -> Vec<f64> {
    let fluxes: Vec<f64> = (0..graph.len() - 1)
        .map(|i| {
            let h = graph.r[i + 1] - graph.r[i];
            let mid = 0.5 * (graph.r[i] + graph.r[i + 1]);
            let p = (graph.u[i + 1] - graph.u[i]) / h;
            graph.weight(mid) * p / p.hypot(1.0)
        })
        .collect();
    divergence(graph, &fluxes)
}

/// Maximum of `|div(Du/W)|` over interior nodes.
pub fn mse_residual(graph: &RadialGraph) -> f64 {
    mse_residual_profile(graph).iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// `‖II‖²` at every node.
pub fn second_fundamental_form_norm(graph: &RadialGraph) -> Vec<f64> {
    let upp = graph.second_derivative();
    let m1 = (graph.m() - 1) as f64;
    (0..graph.len())
        .map(|i| {
            let eta = graph.manifold.eta().eval(graph.r[i]).unwrap();
            let w2 = graph.w[i] * graph.w[i];
            let ang = eta.d1 * graph.du[i] / eta.value;
            (upp[i] * upp[i] / (w2 * w2) + m1 * ang * ang) / w2
        })
        .collect()
}

/// `|D²u|²` in the base metric at every node.
pub fn base_hessian_norm(graph: &RadialGraph) -> Vec<f64> {
    let upp = graph.second_derivative();
    let m1 = (graph.m() - 1) as f64;
    (0..graph.len())
        .map(|i| {
            let eta = graph.manifold.eta().eval(graph.r[i]).unwrap();
            let ang = eta.d1 * graph.du[i] / eta.value;
            upp[i] * upp[i] + m1 * ang * ang
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct JacobiReport {
    pub max: f64,
    pub profile: Vec<f64>,
    pub mse_residual: f64,
    pub warning: Option<String>,
}

/// Residual of `Δ_g(1/W) + (‖II‖² + Ric(n,n))/W` at interior nodes.
pub fn jacobi_residual(graph: &RadialGraph) -> JacobiReport {
    let mse = mse_residual(graph);
    let warning = (mse > 100.0 * RESIDUAL_TOL)
        .then(|| format!("input is not minimal: mse residual {mse:e} exceeds {:e}", 100.0 * RESIDUAL_TOL));
    let theta: Vec<f64> = graph.w.iter().map(|w| 1.0 / w).collect();
    let lap = graph_laplacian(graph, &theta).expect("matching lengths");
    let ii = second_fundamental_form_norm(graph);
    let m1 = (graph.m() - 1) as f64;
    let profile: Vec<f64> = (1..graph.len() - 1)
        .map(|i| {
            let eta = graph.manifold.eta().eval(graph.r[i]).unwrap();
            let ric_rr = -m1 * eta.d2 / eta.value;
            let w2 = graph.w[i] * graph.w[i];
            let ric_nn = graph.du[i] * graph.du[i] * ric_rr / w2;
            lap[i - 1] + (ii[i] + ric_nn) * theta[i]
        })
        .collect();
    let max = profile.iter().fold(0.0f64, |a, v: &f64| a.max(v.abs()));
    JacobiReport { max, profile, mse_residual: mse, warning }
}

/// Affine graph `u(t) = a t + b` over a doubly-warped model.
#[derive(Debug, Clone)]
pub struct TGraph {
    manifold: ModelManifold,
    pub a: f64,
    pub b: f64,
}

impl TGraph {
    pub fn new(man: &ModelManifold, a: f64, b: f64) -> Result<Self> {
        if man.kind() != ManifoldKind::DoublyWarped {
            return Err(Error::UnsupportedKind("t-graphs need a doubly-warped model".into()));
        }
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::Argument("slope and offset must be finite".into()));
        }
        Ok(Self { manifold: man.clone(), a, b })
    }

    pub fn manifold(&self) -> &ModelManifold {
        &self.manifold
    }

    pub fn value(&self, t: f64) -> f64 {
        self.a * t + self.b
    }

    fn f(&self) -> &Warp {
        self.manifold.f().expect("doubly-warped")
    }

    /// `|Du| = |a|/f(r)`.
    pub fn gradient_norm(&self, r: f64) -> Result<f64> {
        Ok(self.a.abs() / self.f().value(r)?)
    }

    pub fn slope(&self, r: f64) -> Result<f64> {
        Ok(self.gradient_norm(r)?.hypot(1.0))
    }

    /// Residual of the minimal surface equation at `(t, r)`, with `∂²ₜu`
    /// taken by a central difference of step `h`.
    pub fn residual(&self, t: f64, r: f64, h: f64) -> Result<f64> {
        let f = self.f().value(r)?;
        let u_t = (self.value(t + h) - self.value(t - h)) / (2.0 * h);
        let u_tt = (self.value(t + h) - 2.0 * self.value(t) + self.value(t - h)) / (h * h);
        Ok(t_graph_residual(f, u_t, u_tt))
    }
}

/// `∂²ₜu / (f² W³)` with `W = √(1 + (∂ₜu/f)²)`, the mean curvature of a
/// graph depending on `t` alone.
pub fn t_graph_residual(f: f64, u_t: f64, u_tt: f64) -> f64 {
    let w = (u_t / f).hypot(1.0);
    u_tt / (f * f * w * w * w)
}

/// Cutoff with linear ramps: 0 below `inner_zero`, 1 on
/// `[inner_one, outer_one]`, 0 above `outer_zero`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cutoff {
    pub inner_zero: f64,
    pub inner_one: f64,
    pub outer_one: f64,
    pub outer_zero: f64,
}

impl Cutoff {
    /// 1 on `B_R`, 0 outside `B_{2R}`.
    pub fn ball(radius: f64) -> Self {
        Self { inner_zero: 0.0, inner_one: 0.0, outer_one: radius, outer_zero: 2.0 * radius }
    }

    pub fn eval(&self, r: f64) -> (f64, f64) {
        if r <= self.inner_zero || r >= self.outer_zero {
            (0.0, 0.0)
        } else if r < self.inner_one {
            let w = self.inner_one - self.inner_zero;
            ((r - self.inner_zero) / w, 1.0 / w)
        } else if r <= self.outer_one {
            (1.0, 0.0)
        } else {
            let w = self.outer_zero - self.outer_one;
            ((self.outer_zero - r) / w, -1.0 / w)
        }
    }
}

/// A radial solution of `(η^{m-1} a_r u′)′ = 0` sampled on a grid, with the
/// coefficient given at cell midpoints.
#[derive(Debug, Clone)]
pub struct DivergenceFormSolution {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub coeff_mid: Vec<f64>,
    pub weight_mid: Vec<f64>,
    pub alpha: f64,
}

impl DivergenceFormSolution {
    /// `Δ`-harmonic data on a model (`A = I`, α = 1).
    pub fn harmonic(man: &ModelManifold, r: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        if r.len() != u.len() || r.len() < 3 {
            return Err(Error::Shape("grid and values differ in length".into()));
        }
        let p = man.dim() as i32 - 1;
        let weight_mid = r.windows(2).map(|w| man.eta().value(0.5 * (w[0] + w[1])).map(|e| e.powi(p))).collect::<Result<_>>()?;
        let n = r.len();
        Ok(Self { r, u, coeff_mid: vec![1.0; n - 1], weight_mid, alpha: 1.0 })
    }

    /// The graph's own height under `L = W Δ_g`, whose radial coefficient is
    /// `1/W` and angular coefficient `W`; α = sup W.
    pub fn graph_operator(graph: &RadialGraph) -> Self {
        let coeff_mid = (0..graph.len() - 1)
            .map(|i| 1.0 / ((graph.u[i + 1] - graph.u[i]) / (graph.r[i + 1] - graph.r[i])).hypot(1.0))
            .collect();
        let weight_mid = graph.r.windows(2).map(|w| graph.weight(0.5 * (w[0] + w[1]))).collect();
        let alpha = graph.w.iter().fold(1.0, |a: f64, &w| a.max(w));
        Self { r: graph.r.clone(), u: graph.u.clone(), coeff_mid, weight_mid, alpha }
    }

    fn cell_fluxes(&self) -> Vec<f64> {
        (0..self.r.len() - 1)
            .map(|i| self.weight_mid[i] * self.coeff_mid[i] * (self.u[i + 1] - self.u[i]) / (self.r[i + 1] - self.r[i]))
            .collect()
    }

    /// Relative spread of the cell fluxes, zero for an exact discrete solution.
    pub fn flux_variation(&self) -> f64 {
        let f = self.cell_fluxes();
        let max = f.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let min = f.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let scale = max.abs().max(min.abs());
        if scale == 0.0 {
            0.0
        } else {
            (max - min) / scale
        }
    }
}

/// Tolerance on the relative flux spread for a function to count as
/// discretely L-harmonic.
pub const HARMONIC_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Serialize)]
pub struct CaccioppoliReport {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
    pub alpha: f64,
    pub flux_variation: f64,
}

/// `∫φ²|Du|² ≤ 4α² ∫u²|Dφ|²` with midpoint cell sums (the common factor
/// `|S^{m-1}|` is dropped).
pub fn caccioppoli_check(sol: &DivergenceFormSolution, cutoff: &Cutoff, alpha: f64) -> Result<CaccioppoliReport> {
    let n = sol.r.len();
    let (r0, r1) = (sol.r[0], sol.r[n - 1]);
    let inner_ok = cutoff.inner_zero >= r0 && (r0 == 0.0 || cutoff.inner_zero < cutoff.inner_one || cutoff.inner_zero > r0);
    let ordered = cutoff.inner_zero <= cutoff.inner_one
        && cutoff.inner_one <= cutoff.outer_one
        && cutoff.outer_one < cutoff.outer_zero;
    if !(inner_ok && ordered && cutoff.outer_zero <= r1) {
        return Err(Error::Argument(format!(
            "cutoff {cutoff:?} is not compactly supported in the grid range [{r0}, {r1}]"
        )));
    }
    let variation = sol.flux_variation();
    if variation > HARMONIC_TOL {
        return Err(Error::Precondition(format!(
            "input is not discretely L-harmonic: relative flux spread {variation:e}"
        )));
    }
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for i in 0..n - 1 {
        let h = sol.r[i + 1] - sol.r[i];
        let mid = 0.5 * (sol.r[i] + sol.r[i + 1]);
        let du = (sol.u[i + 1] - sol.u[i]) / h;
        let u_mid = 0.5 * (sol.u[i] + sol.u[i + 1]);
        let (phi, dphi) = cutoff.eval(mid);
        lhs += phi * phi * du * du * sol.weight_mid[i] * h;
        rhs += u_mid * u_mid * dphi * dphi * sol.weight_mid[i] * h;
    }
    rhs *= 4.0 * alpha * alpha;
    Ok(CaccioppoliReport { lhs, rhs, margin: rhs - lhs, holds: lhs <= rhs, alpha, flux_variation: variation })
}

/// Uniform grid with `n` points on `[a, b]`.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Geometric grid with `n` points on `[a, b]`, `a > 0`.
pub fn geometric_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let q = (b / a).ln();
    (0..n).map(|i| if i + 1 == n { b } else { a * (q * i as f64 / (n - 1) as f64).exp() }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(m: usize) -> ModelManifold {
        ModelManifold::euclidean(m).unwrap()
    }

    #[test]
    fn zero_flux_is_flat() {
        let g = radial_flux_solution(&e(3), 0.0, 1.0, 2.0, 50).unwrap();
        assert!(g.u.iter().all(|&v| v == 0.0) && g.w.iter().all(|&v| v == 1.0));
        assert_eq!(mse_residual(&g), 0.0);
    }

    #[test]
    fn catenoid_matches_arccosh() {
        let g = radial_flux_solution(&e(2), 1.0, 1.5, 5.0, 4096).unwrap();
        let base = 1.5f64.acosh();
        let err = g.r.iter().zip(&g.u).map(|(r, u)| (u - (r.acosh() - base)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err:e}");
        assert!(g.slope_identity_defect() < 1e-14);
    }

    #[test]
    fn infeasible_flux_names_radius() {
        match radial_flux_solution(&e(2), 2.0, 1.5, 5.0, 101) {
            Err(Error::FluxInfeasible { radius, .. }) => assert_eq!(radius, 1.5),
            other => panic!("{other:?}"),
        }
        let s2 = ModelManifold::sphere(2).unwrap();
        match radial_flux_solution(&s2, 0.5, 1.0, 3.0, 2001) {
            Err(Error::FluxInfeasible { radius, .. }) => {
                assert!(radius >= 5.0 * std::f64::consts::PI / 6.0 && radius < 5.0 * std::f64::consts::PI / 6.0 + 1e-3)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flux_is_constant() {
        for m in [2, 3, 5] {
            let g = radial_flux_solution(&e(m), 1.0, 1.5, 5.0, 1000).unwrap();
            let f = g.flux_profile();
            let drift = f.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
            assert!(drift < 1e-12, "m={m} drift {drift:e}");
        }
    }

    #[test]
    fn cone_residual_profile() {
        // symbolic oracle: div(Du/W) for u = a r is (m-1) a / (r √(1+a²))
        let a = 0.7;
        for m in [2, 3, 4] {
            let g = RadialGraph::from_fn(&e(m), uniform_grid(0.5, 3.0, 4096), |r| (a * r, a)).unwrap();
            let prof = mse_residual_profile(&g);
            for (k, v) in prof.iter().enumerate() {
                let r = g.r[k + 1];
                let exact = (m as f64 - 1.0) * a / (r * (1.0 + a * a).sqrt());
                assert!((v - exact).abs() < 1e-6, "m={m} r={r}");
            }
        }
    }

    #[test]
    fn m3_flux_solution_is_minimal() {
        let g = radial_flux_solution(&e(3), 1.0, 1.5, 5.0, 4096).unwrap();
        assert!(mse_residual(&g) < 1e-6);
        // quadrature oracle for u(5): ∫ dr/√(r⁴-1)
        let u5 = quad::quad(|r| 1.0 / (r.powi(4) - 1.0).sqrt(), 1.5, 5.0).unwrap();
        assert!((g.u.last().unwrap() - u5).abs() < 1e-12);
    }

    #[test]
    fn residuals_converge_at_second_order() {
        for m in [2, 3] {
            let levels: Vec<(f64, f64)> = [257usize, 513, 1025, 2049]
                .iter()
                .map(|&n| {
                    let g = radial_flux_solution(&e(m), 1.0, 1.5, 5.0, n).unwrap();
                    (mse_residual(&g), jacobi_residual(&g).max)
                })
                .collect();
            for w in levels.windows(2) {
                let (a, b) = (w[0].0 / w[1].0, w[0].1 / w[1].1);
                assert!((3.0..=5.0).contains(&a), "m={m} mse ratio {a}");
                assert!((3.0..=5.0).contains(&b), "m={m} jacobi ratio {b}");
            }
        }
    }

    #[test]
    fn jacobi_small_on_catenoid() {
        let g = radial_flux_solution(&e(2), 1.0, 1.5, 5.0, 4096).unwrap();
        let j = jacobi_residual(&g);
        assert!(j.max < 1e-4 && j.warning.is_none());
        let c = RadialGraph::constant(&e(3), uniform_grid(0.5, 2.0, 100), 1.0).unwrap();
        assert_eq!(jacobi_residual(&c).max, 0.0);
        let cone = RadialGraph::from_fn(&e(3), uniform_grid(0.5, 2.0, 100), |r| (r, 1.0)).unwrap();
        assert!(jacobi_residual(&cone).warning.is_some());
    }

    #[test]
    fn second_fundamental_form_bounds_hessian() {
        let g = radial_flux_solution(&e(2), 1.0, 1.5, 5.0, 2048).unwrap();
        let ii = second_fundamental_form_norm(&g);
        let hess = base_hessian_norm(&g);
        for i in 0..g.len() {
            assert!(ii[i] > 0.0);
            assert!(ii[i] >= hess[i] / g.w[i].powi(6));
        }
        let flat = RadialGraph::constant(&e(2), uniform_grid(1.0, 2.0, 10), 3.0).unwrap();
        assert!(second_fundamental_form_norm(&flat).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn t_graph_residuals() {
        let p = crate::model_manifold::KwProfile::new(0.4).unwrap();
        let man = ModelManifold::doubly_warped(4, Warp::KwEta(p), Warp::KwF { b: 100.0, c: 100.0, exponent: -0.3 })
            .unwrap();
        let g = TGraph::new(&man, 1.0, 0.5).unwrap();
        for t in [-1.0, 0.0, 0.7] {
            for r in [0.1, 5.0, 100.0] {
                assert!(g.residual(t, r, 0.01).unwrap().abs() < 1e-10);
            }
        }
        assert_eq!(TGraph::new(&man, 0.0, 1.0).unwrap().residual(0.3, 1.0, 0.01).unwrap(), 0.0);
        // u = t² with f = 2 at t: ∂ₜu = 2t, ∂²ₜu = 2
        let t = 0.6;
        let w = (2.0 * t / 2.0f64).hypot(1.0);
        assert!((t_graph_residual(2.0, 2.0 * t, 2.0) - 2.0 / (4.0 * w.powi(3))).abs() < 1e-15);
        // slope bound consistency
        let grid = uniform_grid(0.0, 200.0, 1001);
        let max_grad = grid.iter().map(|&r| g.gradient_norm(r).unwrap()).fold(0.0, f64::max);
        let min_f = grid.iter().map(|&r| man.f().unwrap().value(r).unwrap()).fold(f64::INFINITY, f64::min);
        assert!((max_grad - 1.0 / min_f).abs() < 1e-15);
    }

    #[test]
    fn caccioppoli_log_annulus() {
        let r = geometric_grid(0.05, 40.0, 4000);
        let u: Vec<f64> = r.iter().map(|x| x.ln()).collect();
        let sol = DivergenceFormSolution::harmonic(&e(2), r, u).unwrap();
        let cut = Cutoff { inner_zero: 0.05, inner_one: 0.1, outer_one: 10.0, outer_zero: 20.0 };
        let rep = caccioppoli_check(&sol, &cut, 1.0).unwrap();
        assert!(rep.holds && rep.margin > 0.0);
        // not compactly supported
        assert!(caccioppoli_check(&sol, &Cutoff::ball(30.0), 1.0).is_err());
        let cut_open = Cutoff { inner_zero: 0.0, inner_one: 0.0, outer_one: 1.0, outer_zero: 2.0 };
        assert!(caccioppoli_check(&sol, &cut_open, 1.0).is_err());
    }

    #[test]
    fn caccioppoli_constant_and_catenoid() {
        let r = uniform_grid(0.0, 5.0, 200);
        let sol = DivergenceFormSolution::harmonic(&e(3), r.clone(), vec![2.0; r.len()]).unwrap();
        let rep = caccioppoli_check(&sol, &Cutoff::ball(2.0), 1.0).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert!(rep.holds);
        let g = radial_flux_solution(&e(2), 1.0, 1.2, 30.0, 8000).unwrap();
        let sol = DivergenceFormSolution::graph_operator(&g);
        let cut = Cutoff { inner_zero: 1.2, inner_one: 2.0, outer_one: 10.0, outer_zero: 20.0 };
        let rep = caccioppoli_check(&sol, &cut, sol.alpha).unwrap();
        assert!(rep.holds, "{rep:?}");
    }

    #[test]
    fn csv_roundtrip() {
        let g = radial_flux_solution(&e(2), 1.0, 1.5, 3.0, 64).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        g.write_csv(&path).unwrap();
        let back = RadialGraph::read_csv(&e(2), &path).unwrap();
        assert_eq!(back.u, g.u);
        assert_eq!(back.du, g.du);
    }

    #[test]
    fn interpolation_of_flux_solution() {
        let g = radial_flux_solution(&e(2), 1.0, 1.5, 5.0, 2048).unwrap();
        let base = 1.5f64.acosh();
        for x in [1.6, 2.345, 4.99] {
            let (u, du) = g.interpolate(x).unwrap();
            assert!((u - (x.acosh() - base)).abs() < 1e-10);
            assert!((du - 1.0 / (x * x - 1.0).sqrt()).abs() < 1e-14);
        }
        assert!(g.interpolate(1.0).is_err());
    }

    proptest! {
        #[test]
        fn flux_conservation_random(c in 0.05f64..1.0, r0 in 1.05f64..2.0, len in 0.5f64..5.0, m in 2usize..5) {
            let g = radial_flux_solution(&e(m), c, r0, r0 + len, 300).unwrap();
            let f = g.flux_profile();
            for v in f {
                prop_assert!((v - c).abs() <= 1e-9 * c);
            }
            prop_assert!(g.w.iter().all(|&w| w >= 1.0));
        }

        #[test]
        fn slope_consistent_with_values(c in 0.1f64..0.9, m in 2usize..4) {
            let g = radial_flux_solution(&e(m), c, 1.2, 3.0, 2001).unwrap();
            let h = g.r[1] - g.r[0];
            for i in 1..g.len() - 1 {
                let fd = (g.u[i + 1] - g.u[i - 1]) / (2.0 * h);
                prop_assert!((fd - g.du[i]).abs() < 10.0 * h * h);
            }
        }
    }
}
