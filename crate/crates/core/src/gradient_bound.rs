//! Explicit Korevaar-type gradient bound, its parameter constraints, the
//! canonical δ-parameter choice, the resulting closed-form estimates, a
//! feasible-parameter optimizer and verification on concrete minimal graphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model_manifold::{ricci_diag, ricci_l_radial, simple_plane_sectionals, ManifoldKind, Warp};
use crate::mse::{RadialGraph, TGraph};

/// Problem data of the estimate: `Ric ≥ -(m-1)κ²`,
/// `Ric^(ℓ)(∇r) ≥ -κ̄²/(1+r²)`, balls `B_{R₁} ⊂ B_R` and the normalized
/// oscillation γ*.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundInputs {
    pub m: usize,
    pub kappa: f64,
    pub kappa_bar: f64,
    #[serde(rename = "R")]
    pub r_outer: f64,
    #[serde(rename = "R1")]
    pub r_inner: f64,
    pub gamma_star: f64,
}

impl BoundInputs {
    pub fn kappa_bar0(&self) -> f64 {
        self.kappa_bar.max(1.0)
    }

    pub fn check(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::Argument(format!("m = {} must be at least 2", self.m)));
        }
        if !(self.kappa >= 0.0 && self.kappa_bar >= 0.0) {
            return Err(Error::Argument("kappa and kappa_bar must be non-negative".into()));
        }
        if !(0.0 < self.r_inner && self.r_inner < self.r_outer && self.r_outer.is_finite()) {
            return Err(Error::Argument(format!("need 0 < R1 < R (got {}, {})", self.r_inner, self.r_outer)));
        }
        if !(self.gamma_star > 0.0 && self.gamma_star.is_finite()) {
            return Err(Error::Argument(format!("gamma_star = {} must be positive", self.gamma_star)));
        }
        Ok(())
    }
}

/// The free parameters `(ε, τ, q, a₀, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KorevaarParams {
    pub epsilon: f64,
    pub tau: f64,
    pub q: f64,
    pub a0: f64,
    #[serde(rename = "L")]
    pub l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

pub fn derived_constants(inp: &BoundInputs, p: &KorevaarParams) -> DerivedConstants {
    let g = inp.gamma_star;
    let a1 = (1.0 - p.tau) * (p.q * p.q - 1.0 / (p.tau * p.a0 * p.a0 * g * g)) * p.l * p.l;
    let a2 = (inp.m as f64 + 1.0) * inp.kappa_bar0() * p.l / (p.epsilon * inp.r_outer);
    let a3 = a1 - (inp.m as f64 - 1.0) * inp.kappa * inp.kappa;
    DerivedConstants { a1, a2, a3 }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`; the constraint is `lhs > rhs`.
    pub slack: f64,
    pub holds: bool,
}

impl ConstraintCheck {
    fn new(name: &'static str, lhs: f64, rhs: f64) -> Self {
        let slack = lhs - rhs;
        Self { name, lhs, rhs, slack, holds: slack > 0.0 && slack.is_finite() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    pub checks: Vec<ConstraintCheck>,
    pub constants: DerivedConstants,
    pub passed: bool,
}

impl ValidityReport {
    pub fn failed(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.holds).map(|c| c.name).collect()
    }

    pub fn check(&self, name: &str) -> Option<&ConstraintCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const Q_WINDOW_UPPER: &str = "q-window(upper)";
pub const Q_WINDOW_LOWER: &str = "q-window(lower)";
pub const A1_A2_GAP: &str = "a1-a2-gap";

pub fn validate_params(inp: &BoundInputs, p: &KorevaarParams) -> ValidityReport {
    let g = inp.gamma_star;
    let e = p.epsilon;
    let rho = inp.r_inner / inp.r_outer;
    let upper = ((e * e + 1.0).sqrt() - (rho * rho + e * e).sqrt()) / g;
    let lower = 1.0 / (p.tau.sqrt() * p.a0 * g);
    let c = derived_constants(inp, p);
    let checks = vec![
        ConstraintCheck::new("epsilon>0", e, 0.0),
        ConstraintCheck::new("tau>0", p.tau, 0.0),
        ConstraintCheck::new("tau<1", 1.0, p.tau),
        ConstraintCheck::new("a0>0", p.a0, 0.0),
        ConstraintCheck::new("L>0", p.l, 0.0),
        ConstraintCheck::new(Q_WINDOW_UPPER, upper, p.q),
        ConstraintCheck::new(Q_WINDOW_LOWER, p.q, lower),
        ConstraintCheck::new(A1_A2_GAP, c.a1 - c.a2, (inp.m as f64 - 1.0) * inp.kappa * inp.kappa),
    ];
    let passed = checks.iter().all(|c| c.holds);
    ValidityReport { checks, constants: c, passed }
}

/// `ln(e^x - 1)` for `x > 0`, stable for large and small `x`.
fn ln_expm1(x: f64) -> f64 {
    if x > 1.0 {
        x + (-(-x).exp_m1()).ln()
    } else {
        x.exp_m1().ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundValue {
    /// May be `inf` when the bound exceeds `f64`; `log_value` stays finite.
    pub value: f64,
    pub log_value: f64,
    pub prefactor: f64,
    pub log_ratio: f64,
    pub numerator_exponent: f64,
    pub denominator_exponent: f64,
}

/// The gradient bound at a point with `r(x) = r` and `γ(x) = gamma`.
pub fn korevaar_bound(inp: &BoundInputs, p: &KorevaarParams, r: f64, gamma: f64) -> Result<BoundValue> {
    inp.check()?;
    let v = validate_params(inp, p);
    if !v.passed {
        return Err(Error::Infeasible(format!("parameter constraints fail: {:?}", v.failed())));
    }
    if !(0.0..=inp.r_inner).contains(&r) {
        return Err(Error::Domain { r, lo: 0.0, hi: inp.r_inner });
    }
    if !(gamma >= 0.0 && gamma <= inp.gamma_star * (1.0 + 1e-12)) {
        return Err(Error::Argument(format!("gamma = {gamma} outside [0, {}]", inp.gamma_star)));
    }
    Ok(bound_unchecked(inp, p, &v.constants, r, gamma)?)
}

fn bound_unchecked(inp: &BoundInputs, p: &KorevaarParams, c: &DerivedConstants, r: f64, gamma: f64) -> Result<BoundValue> {
    let e = p.epsilon;
    let lr = p.l * inp.r_outer;
    let s = (e * e + 1.0).sqrt();
    let rho = r / inp.r_outer;
    let num = lr * (s - e);
    let den = lr * (s - (e * e + rho * rho).sqrt() - p.q * gamma);
    if !(den > 0.0) {
        return Err(Error::Infeasible(format!("denominator exponent {den} is not positive")));
    }
    let prefactor = (1.0 + (p.a0 * inp.gamma_star).powi(2)).sqrt().max((c.a3 / (c.a3 - c.a2)).sqrt());
    let log_ratio = ln_expm1(num) - ln_expm1(den);
    let log_value = prefactor.ln() + log_ratio;
    Ok(BoundValue {
        value: log_value.exp(),
        log_value,
        prefactor,
        log_ratio,
        numerator_exponent: num,
        denominator_exponent: den,
    })
}

/// Parameter choice tied to `δ ∈ [1/2, 1)`.
pub fn canonical_params(delta: f64, gamma_star: f64, m: usize, kappa_bar0: f64, r_outer: f64) -> Result<KorevaarParams> {
    if !(0.5..1.0).contains(&delta) {
        return Err(Error::Argument(format!("delta = {delta} outside [1/2, 1)")));
    }
    if !(gamma_star > 0.0 && kappa_bar0 > 0.0 && r_outer > 0.0) {
        return Err(Error::Argument("gamma_star, kappa_bar0 and R must be positive".into()));
    }
    let q = (1.0 - delta) / (2.0 * 2f64.sqrt() * gamma_star);
    let a0 = 2.0 / (q * gamma_star);
    let l = 8.0 * (m as f64 + 1.0) * kappa_bar0 / (delta * r_outer * q * q);
    Ok(KorevaarParams { epsilon: delta, tau: 0.5, q, a0, l })
}

/// Helper constant with `(y^α - 1)/(y - 1) ≤ C(α) y^{α-1}` on `y > 1`,
/// `α ≥ 1` (mean value theorem).
pub fn helper_constant(alpha: f64) -> Result<f64> {
    if !(alpha >= 1.0) {
        return Err(Error::Argument(format!("helper constant needs alpha >= 1, got {alpha}")));
    }
    Ok(alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorollaryBound {
    pub value: f64,
    pub log_value: f64,
    pub prefactor: f64,
    pub alpha: f64,
    pub c_alpha: f64,
    /// Argument of the exponential.
    pub exponent: f64,
}

/// Closed-form estimate from the δ-parameter choice.
pub fn corollary_bound(delta: f64, gamma_star: f64, m: usize, kappa_bar0: f64) -> Result<CorollaryBound> {
    if !(0.5..1.0).contains(&delta) {
        return Err(Error::Argument(format!("delta = {delta} outside [1/2, 1)")));
    }
    if !(gamma_star >= 0.0) {
        return Err(Error::Argument("gamma_star must be non-negative".into()));
    }
    let dd = delta * (1.0 - delta);
    let alpha = 2.0 / dd;
    let c_alpha = helper_constant(alpha)?;
    let g2 = gamma_star * gamma_star;
    let prefactor = (1.0 + 32.0 * g2 / (1.0 - delta).powi(2)).sqrt().max(2f64.sqrt());
    let exponent = 16.0 * 2f64.sqrt() * (m as f64 + 1.0) * kappa_bar0 / dd * (alpha - 1.0) * g2;
    let log_value = prefactor.ln() + c_alpha.ln() + exponent;
    Ok(CorollaryBound { value: log_value.exp(), log_value, prefactor, alpha, c_alpha, exponent })
}

/// Global bound for solutions with `u ≥ -a(1 + r)`.
pub fn entire_bound(a: f64, m: usize, kappa_bar0: f64) -> Result<CorollaryBound> {
    if !(a >= 0.0) {
        return Err(Error::Argument(format!("growth slope a = {a} must be non-negative")));
    }
    corollary_bound(0.5, a, m, kappa_bar0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeOptions {
    pub seed: u64,
    pub budget: usize,
    pub restarts: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self { seed: 0, budget: 2000, restarts: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeReport {
    pub params: KorevaarParams,
    pub bound: BoundValue,
    pub canonical: Option<(KorevaarParams, BoundValue)>,
    pub evaluations: usize,
    pub validity: ValidityReport,
}

fn encode(p: &KorevaarParams) -> [f64; 5] {
    [p.epsilon.ln(), (p.tau / (1.0 - p.tau)).ln(), p.q.ln(), p.a0.ln(), p.l.ln()]
}

fn decode(x: &[f64; 5]) -> KorevaarParams {
    KorevaarParams {
        epsilon: x[0].exp(),
        tau: 1.0 / (1.0 + (-x[1]).exp()),
        q: x[2].exp(),
        a0: x[3].exp(),
        l: x[4].exp(),
    }
}

const PENALTY: f64 = 1e6;

/// Canonical parameters with `δ` large enough for `R₁ < δR`, and `L`
/// doubled until the Ricci-lower-bound constraint holds.
pub fn feasible_canonical(inp: &BoundInputs, delta: f64) -> Option<KorevaarParams> {
    let mut p = canonical_params(delta, inp.gamma_star, inp.m, inp.kappa_bar0(), inp.r_outer).ok()?;
    for _ in 0..200 {
        if validate_params(inp, &p).passed {
            return Some(p);
        }
        let c = validate_params(inp, &p);
        if c.check(Q_WINDOW_UPPER).map(|c| c.holds) != Some(true) || c.check(Q_WINDOW_LOWER).map(|c| c.holds) != Some(true) {
            return None;
        }
        p.l *= 2.0;
    }
    None
}

/// Minimizes the bound at `(r, γ)` over feasible parameters with restarted
/// Nelder-Mead in log coordinates.
pub fn optimize_params(inp: &BoundInputs, r: f64, gamma: f64, opts: &OptimizeOptions) -> Result<OptimizeReport> {
    inp.check()?;
    if !(0.0..=inp.r_inner).contains(&r) || !(gamma >= 0.0 && gamma <= inp.gamma_star) {
        return Err(Error::Argument(format!("(r, gamma) = ({r}, {gamma}) outside the admissible range")));
    }
    let evals = std::cell::Cell::new(0usize);
    let best: std::cell::RefCell<Option<(KorevaarParams, BoundValue)>> = std::cell::RefCell::new(None);
    let objective = |x: &[f64; 5]| -> f64 {
        evals.set(evals.get() + 1);
        let p = decode(x);
        let v = validate_params(inp, &p);
        if !v.passed {
            let viol: f64 = v.checks.iter().filter(|c| !c.holds).map(|c| (-c.slack).max(0.0).min(1e3)).sum();
            return PENALTY + viol;
        }
        match bound_unchecked(inp, &p, &v.constants, r, gamma) {
            Ok(b) => {
                let mut slot = best.borrow_mut();
                if slot.as_ref().map_or(true, |(_, old)| b.log_value < old.log_value) {
                    *slot = Some((p, b));
                }
                b.log_value
            }
            Err(_) => PENALTY,
        }
    };

    let rho = inp.r_inner / inp.r_outer;
    let canonical = feasible_canonical(inp, 0.5).and_then(|p| {
        let v = validate_params(inp, &p);
        bound_unchecked(inp, &p, &v.constants, r, gamma).ok().map(|b| (p, b))
    });
    let mut starts: Vec<KorevaarParams> = Vec::new();
    if let Some((p, _)) = canonical {
        starts.push(p);
    }
    let delta_fit = (0.5 * (1.0 + rho)).max(0.5);
    if let Some(p) = feasible_canonical(inp, delta_fit.min(0.999)) {
        starts.push(p);
    }
    if starts.is_empty() {
        // generic start; the penalty pulls the simplex toward feasibility
        starts.push(KorevaarParams { epsilon: 1.0, tau: 0.5, q: 0.1 / inp.gamma_star, a0: 100.0, l: 100.0 / inp.r_outer });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let per_run = (opts.budget / opts.restarts.max(1)).max(10);
    for s in &starts {
        objective(&encode(s));
    }
    for k in 0..opts.restarts.max(1) {
        if evals.get() >= opts.budget {
            break;
        }
        let x0 = match best.borrow().as_ref() {
            Some((p, _)) if k > 0 => encode(p),
            _ => encode(&starts[k % starts.len()]),
        };
        let scale = if k == 0 { 0.3 } else { 0.3 * rng.gen_range(0.2..1.0) };
        let mut simplex = vec![x0];
        for i in 0..5 {
            let mut x = x0;
            x[i] += scale * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            simplex.push(x);
        }
        let remaining = opts.budget.saturating_sub(evals.get()).min(per_run);
        nelder_mead(&objective, simplex, remaining);
    }
    let (params, bound) = best
        .into_inner()
        .ok_or_else(|| Error::Infeasible(format!("no feasible parameters after {} evaluations", evals.get())))?;
    let validity = validate_params(inp, &params);
    Ok(OptimizeReport { params, bound, canonical, evaluations: evals.get(), validity })
}

fn nelder_mead<F: Fn(&[f64; 5]) -> f64>(f: &F, init: Vec<[f64; 5]>, budget: usize) {
    let mut pts: Vec<([f64; 5], f64)> = init.into_iter().map(|x| (x, f(&x))).collect();
    let mut used = pts.len();
    let lerp = |a: &[f64; 5], b: &[f64; 5], t: f64| -> [f64; 5] {
        let mut out = [0.0; 5];
        for i in 0..5 {
            out[i] = a[i] + t * (b[i] - a[i]);
        }
        out
    };
    while used < budget {
        pts.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let spread = pts.last().unwrap().1 - pts[0].1;
        if spread.abs() < 1e-13 {
            break;
        }
        let mut centroid = [0.0; 5];
        for (x, _) in &pts[..5] {
            for i in 0..5 {
                centroid[i] += x[i] / 5.0;
            }
        }
        let worst = pts[5];
        let refl = lerp(&centroid, &worst.0, -1.0);
        let fr = f(&refl);
        used += 1;
        if fr < pts[0].1 {
            let exp = lerp(&centroid, &worst.0, -2.0);
            let fe = f(&exp);
            used += 1;
            pts[5] = if fe < fr { (exp, fe) } else { (refl, fr) };
        } else if fr < pts[4].1 {
            pts[5] = (refl, fr);
        } else {
            let contr = if fr < worst.1 { lerp(&centroid, &refl, 0.5) } else { lerp(&centroid, &worst.0, 0.5) };
            let fc = f(&contr);
            used += 1;
            if fc < worst.1.min(fr) {
                pts[5] = (contr, fc);
            } else {
                let best = pts[0].0;
                for p in pts.iter_mut().skip(1) {
                    p.0 = lerp(&best, &p.0, 0.5);
                    p.1 = f(&p.0);
                    used += 1;
                }
            }
        }
    }
}

/// Curvature hypotheses on a doubly-warped model, as certified on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KwHypotheses {
    pub ricci_positive: bool,
    pub kappa_bar: f64,
    /// `f(0)`, the maximum of the decreasing warp `f`.
    pub f_max: f64,
    /// A positive lower bound for `f`.
    pub f_min: f64,
    pub source: String,
}

/// What to verify the bound on.
pub enum VerifyTarget<'a> {
    /// Radial graph on a rotationally symmetric model, restricted to the
    /// ball of radius `R` around a point at distance `center` from the
    /// pole.
    RadialBall { graph: &'a RadialGraph, center: f64, samples: usize },
    /// Affine t-graph with certified curvature hypotheses.
    KwTGraph { graph: &'a TGraph, hypotheses: &'a KwHypotheses, samples: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub points_checked: usize,
    /// `min (bound - W)` over checked points.
    pub min_margin: f64,
    /// `min (ln bound - ln W)`.
    pub min_log_margin: f64,
    pub worst_point: (f64, f64),
    pub gamma_star: f64,
    pub params: KorevaarParams,
    pub inputs: BoundInputs,
    pub assumptions: Vec<String>,
    pub passed: bool,
}

/// Checks `W(x) ≤ bound(r(x), γ(x))` over `B_{R₁}`, with `γ` computed from
/// the graph and parameters from [`feasible_canonical`] (δ chosen so that
/// `R₁ < δR`) unless `params` is given.
pub fn verify_solution_bound(target: VerifyTarget<'_>, inp: &BoundInputs, params: Option<KorevaarParams>) -> Result<VerifyReport> {
    match target {
        VerifyTarget::RadialBall { graph, center, samples } => verify_radial(graph, center, samples, inp, params),
        VerifyTarget::KwTGraph { graph, hypotheses, samples } => verify_kw(graph, hypotheses, samples, inp, params),
    }
}

fn pick_params(inp: &BoundInputs, params: Option<KorevaarParams>) -> Result<KorevaarParams> {
    if let Some(p) = params {
        let v = validate_params(inp, &p);
        if !v.passed {
            return Err(Error::Infeasible(format!("supplied parameters fail {:?}", v.failed())));
        }
        return Ok(p);
    }
    let rho = inp.r_inner / inp.r_outer;
    let delta = (0.5 * (1.0 + rho)).max(0.5).min(0.999);
    feasible_canonical(inp, delta)
        .ok_or_else(|| Error::Infeasible("no feasible canonical parameters for these inputs".into()))
}

fn verify_radial(
    graph: &RadialGraph,
    center: f64,
    samples: usize,
    inp: &BoundInputs,
    params: Option<KorevaarParams>,
) -> Result<VerifyReport> {
    let man = graph.manifold();
    let (rg0, rg1) = (graph.r[0], *graph.r.last().unwrap());
    let big_r = inp.r_outer;
    let mut assumptions = Vec::new();
    let flat = matches!(man.eta(), Warp::Euclidean);
    if center == 0.0 {
        if rg0 > 1e-12 && !flat {
            return Err(Error::Precondition("a ball at the pole needs a graph defined down to r = 0".into()));
        }
    } else if center - big_r < rg0 || center + big_r > rg1 {
        return Err(Error::Precondition(format!(
            "ball of radius {big_r} around distance {center} leaves the graph range [{rg0}, {rg1}]"
        )));
    }
    if center == 0.0 && rg1 < big_r {
        return Err(Error::Precondition(format!("graph range ends at {rg1} < R = {big_r}")));
    }
    if center == 0.0 && rg0 > 1e-12 {
        return Err(Error::Precondition("a ball at the pole needs a graph defined down to r = 0".into()));
    }
    // curvature hypotheses
    if flat {
        assumptions.push("flat model: kappa = kappa_bar = 0 hold around every center".into());
    } else if center == 0.0 {
        let m = man.dim();
        let l = if m > 2 { m - 2 } else { 1 };
        let mut need_k: f64 = 0.0;
        let mut need_kb: f64 = 0.0;
        for &r in graph.r.iter().filter(|&&r| r > 0.0 && r <= big_r) {
            let d = ricci_diag(man, r)?;
            need_k = need_k.max((-d.min() / (m as f64 - 1.0)).max(0.0));
            let s = simple_plane_sectionals(man, r)?;
            need_kb = need_kb.max((-ricci_l_radial(man, &s, l) * (1.0 + r * r)).max(0.0));
        }
        if inp.kappa * inp.kappa < need_k * (1.0 - 1e-12) || inp.kappa_bar * inp.kappa_bar < need_kb * (1.0 - 1e-12) {
            return Err(Error::Precondition(format!(
                "curvature hypotheses not met on the grid: need kappa^2 >= {need_k:e}, kappa_bar^2 >= {need_kb:e}"
            )));
        }
        assumptions.push(format!("curvature hypotheses checked on the graph grid (kappa^2 >= {need_k:e}, kappa_bar^2 >= {need_kb:e})"));
    } else {
        return Err(Error::Precondition(
            "off-pole balls on curved models need a kappa_bar certified for the re-centered distance".into(),
        ));
    }
    let n = samples.max(8);
    // ball points: distance s from the center, angle θ to the outward ray
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for i in 0..=n {
        let s = big_r * i as f64 / n as f64;
        for j in 0..=n {
            let th = std::f64::consts::PI * j as f64 / n as f64;
            let rr = (center * center + s * s + 2.0 * center * s * th.cos()).max(0.0).sqrt();
            pts.push((s, rr));
        }
    }
    let mut u_inf = f64::INFINITY;
    let mut u_sup_inner = f64::NEG_INFINITY;
    let mut evals = Vec::with_capacity(pts.len());
    for &(s, rr) in &pts {
        let (u, du) = graph.interpolate(rr.clamp(rg0, rg1))?;
        u_inf = u_inf.min(u);
        if s <= inp.r_inner {
            u_sup_inner = u_sup_inner.max(u);
        }
        evals.push((s, u, du.hypot(1.0)));
    }
    let gamma_star = (u_sup_inner - u_inf) / big_r;
    let mut ins = *inp;
    if gamma_star <= 0.0 {
        // constant graph: W = 1 lies below every admissible bound
        return Ok(VerifyReport {
            points_checked: evals.len(),
            min_margin: f64::INFINITY,
            min_log_margin: f64::INFINITY,
            worst_point: (0.0, 0.0),
            gamma_star: 0.0,
            params: KorevaarParams { epsilon: 1.0, tau: 0.5, q: 1.0, a0: 1.0, l: 1.0 },
            inputs: ins,
            assumptions: {
                assumptions.push("constant graph: W = 1 everywhere".into());
                assumptions
            },
            passed: evals.iter().all(|e| e.2 == 1.0),
        });
    }
    ins.gamma_star = gamma_star;
    let p = pick_params(&ins, params)?;
    let v = validate_params(&ins, &p);
    let mut min_margin = f64::INFINITY;
    let mut min_log = f64::INFINITY;
    let mut worst = (0.0, 0.0);
    let mut count = 0;
    for &(s, u, w) in &evals {
        if s > inp.r_inner {
            continue;
        }
        let gamma = ((u - u_inf) / big_r).clamp(0.0, gamma_star);
        let b = bound_unchecked(&ins, &p, &v.constants, s, gamma)?;
        count += 1;
        let lm = b.log_value - w.ln();
        if lm < min_log {
            min_log = lm;
            worst = (s, gamma);
        }
        min_margin = min_margin.min(b.value - w);
    }
    Ok(VerifyReport {
        points_checked: count,
        min_margin,
        min_log_margin: min_log,
        worst_point: worst,
        gamma_star,
        params: p,
        inputs: ins,
        assumptions,
        passed: min_log > 0.0,
    })
}

fn verify_kw(
    graph: &TGraph,
    hyp: &KwHypotheses,
    samples: usize,
    inp: &BoundInputs,
    params: Option<KorevaarParams>,
) -> Result<VerifyReport> {
    if graph.manifold().kind() != ManifoldKind::DoublyWarped {
        return Err(Error::UnsupportedKind("t-graph verification needs a doubly-warped model".into()));
    }
    if !hyp.ricci_positive {
        return Err(Error::Precondition(format!("certificate {} does not certify Ric > 0", hyp.source)));
    }
    if inp.kappa_bar < hyp.kappa_bar {
        return Err(Error::Precondition(format!(
            "kappa_bar = {} is below the certified value {} from {}",
            inp.kappa_bar, hyp.kappa_bar, hyp.source
        )));
    }
    let assumptions = vec![
        format!("Ric > 0 and kappa_bar = {} taken from certificate {}", hyp.kappa_bar, hyp.source),
        "the decay bound is certified along the coordinate r and used for the distance from (t, r) = (0, 0)".into(),
        "distance d to the center satisfies max(r, f_min |t|) <= d <= r + f_max |t|".into(),
        "gamma_star is only bracketed; the bound is minimized over a sample of the bracket".into(),
    ];
    let (a, b) = (graph.a.abs(), graph.b);
    let (fmax, fmin) = (hyp.f_max, hyp.f_min);
    let (big_r, r1) = (inp.r_outer, inp.r_inner);
    // inf over B_R lies in [b - aR/fmin, b - aR/fmax]; sup over B_{R1} in [b + aR1/fmax, b + aR1/fmin]
    let inf_upper = b - a * big_r / fmax;
    let gs_lo = a * (r1 + big_r) / (fmax * big_r);
    let gs_hi = a * (r1 + big_r) / (fmin * big_r);
    let n = samples.max(8);
    let gs_samples: Vec<f64> = (0..=16).map(|k| gs_lo + (gs_hi - gs_lo) * k as f64 / 16.0).collect();
    let mut chosen: Vec<(BoundInputs, KorevaarParams, DerivedConstants)> = Vec::new();
    for &gs in &gs_samples {
        let mut ins = *inp;
        ins.kappa = 0.0;
        ins.gamma_star = gs;
        let p = pick_params(&ins, params)?;
        let c = validate_params(&ins, &p).constants;
        chosen.push((ins, p, c));
    }
    let mut min_margin = f64::INFINITY;
    let mut min_log = f64::INFINITY;
    let mut worst = (0.0, 0.0);
    let mut count = 0;
    for i in 0..=n {
        let rr = r1 * i as f64 / n as f64;
        let w = graph.slope(rr)?;
        for j in 0..=n {
            // t from -R1/fmax to R1/fmax, inside B_{R1} when r + fmax|t| <= R1
            let t = -r1 / fmax + 2.0 * r1 / fmax * j as f64 / n as f64;
            if rr + fmax * t.abs() > r1 * (1.0 + 1e-12) {
                continue;
            }
            let d_lo = rr.max(fmin * t.abs()).min(r1);
            let gamma_lo = ((graph.value(t) - inf_upper) / big_r).max(0.0);
            let mut best = f64::INFINITY;
            for (ins, p, c) in &chosen {
                let g = gamma_lo.min(ins.gamma_star);
                if let Ok(bv) = bound_unchecked(ins, p, c, d_lo, g) {
                    best = best.min(bv.log_value);
                }
            }
            count += 1;
            let lm = best - w.ln();
            if lm < min_log {
                min_log = lm;
                worst = (rr, t);
            }
            min_margin = min_margin.min(best.exp() - w);
        }
    }
    let (ins, p, _) = chosen[0];
    Ok(VerifyReport {
        points_checked: count,
        min_margin,
        min_log_margin: min_log,
        worst_point: worst,
        gamma_star: ins.gamma_star,
        params: p,
        inputs: ins,
        assumptions,
        passed: min_log > 0.0 && count > 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_manifold::ModelManifold;
    use crate::mse::radial_flux_solution;
    use proptest::prelude::*;

    fn inputs(gs: f64) -> BoundInputs {
        BoundInputs { m: 3, kappa: 0.0, kappa_bar: 0.0, r_outer: 10.0, r_inner: 5.0, gamma_star: gs }
    }

    /// Independent transcription of the bound, evaluated directly.
    fn oracle(inp: &BoundInputs, p: &KorevaarParams, r: f64, g: f64) -> f64 {
        let m = inp.m as f64;
        let kb0 = if inp.kappa_bar > 1.0 { inp.kappa_bar } else { 1.0 };
        let a1 = (1.0 - p.tau) * (p.q.powi(2) - 1.0 / (p.tau * p.a0.powi(2) * inp.gamma_star.powi(2))) * p.l.powi(2);
        let a2 = (m + 1.0) * kb0 * p.l / (p.epsilon * inp.r_outer);
        let a3 = a1 - (m - 1.0) * inp.kappa.powi(2);
        let pre = f64::max((1.0 + p.a0.powi(2) * inp.gamma_star.powi(2)).sqrt(), (a3 / (a3 - a2)).sqrt());
        let lr = p.l * inp.r_outer;
        let top = (lr * ((p.epsilon.powi(2) + 1.0).sqrt() - p.epsilon)).exp() - 1.0;
        let bottom = (lr * ((p.epsilon.powi(2) + 1.0).sqrt() - (p.epsilon.powi(2) + (r / inp.r_outer).powi(2)).sqrt() - p.q * g))
            .exp()
            - 1.0;
        pre * top / bottom
    }

    #[test]
    fn canonical_example_values() {
        let p = canonical_params(0.5, 1.0, 3, 1.0, 10.0).unwrap();
        assert!((p.q - 1.0 / (4.0 * 2f64.sqrt())).abs() < 1e-15 && (p.q - 0.176777).abs() < 1e-6);
        assert!((p.a0 - 8.0 * 2f64.sqrt()).abs() < 1e-13 && (p.a0 - 11.313708).abs() < 1e-6);
        assert!((p.l - 204.8).abs() < 1e-11);
        assert!(canonical_params(0.4, 1.0, 3, 1.0, 10.0).is_err());
        assert!(canonical_params(1.0, 1.0, 3, 1.0, 10.0).is_err());
    }

    #[test]
    fn canonical_passes_with_double_slack() {
        let inp = inputs(1.0);
        let p = canonical_params(0.5, 1.0, 3, 1.0, 10.0).unwrap();
        let v = validate_params(&inp, &p);
        assert!(v.passed);
        assert!(v.check(Q_WINDOW_UPPER).unwrap().slack >= p.q);
    }

    #[test]
    fn constructed_violations_are_named() {
        let inp = inputs(1.0);
        let mut p = canonical_params(0.5, 1.0, 3, 1.0, 10.0).unwrap();
        p.q = 1.0;
        assert!(validate_params(&inp, &p).failed().contains(&Q_WINDOW_UPPER));
        let mut p = canonical_params(0.5, 1.0, 3, 1.0, 10.0).unwrap();
        p.l = 1e-9;
        let v = validate_params(&inp, &p);
        assert_eq!(v.failed(), vec![A1_A2_GAP]);
    }

    #[test]
    fn bound_matches_dual_implementation() {
        let inp = inputs(1.0);
        let p = canonical_params(0.5, 1.0, 3, 1.0, 10.0).unwrap();
        // keep LR moderate so the direct formula does not overflow
        let mut p2 = p;
        p2.l = 2.0;
        let mut inp2 = inp;
        inp2.kappa_bar = 0.0;
        for (r, g) in [(0.0, 0.0), (2.0, 0.01), (5.0, 0.02)] {
            if validate_params(&inp2, &p2).passed {
                let a = korevaar_bound(&inp2, &p2, r, g).unwrap().value;
                let b = oracle(&inp2, &p2, r, g);
                assert!(((a - b) / b).abs() < 1e-12, "{a} {b}");
            }
        }
        let a = korevaar_bound(&inp, &p, 0.0, 0.0).unwrap();
        let b = oracle(&inp, &p, 0.0, 0.0);
        if b.is_finite() {
            assert!(((a.value - b) / b).abs() < 1e-12);
        } else {
            assert!(a.log_value.is_finite());
        }
    }

    #[test]
    fn dual_implementation_feasible_small_lr() {
        // a feasible point with LR of order 10 so both forms are finite
        let inp = BoundInputs { m: 2, kappa: 0.0, kappa_bar: 0.0, r_outer: 10.0, r_inner: 5.0, gamma_star: 0.05 };
        let p = canonical_params(0.75, 0.05, 2, 1.0, 10.0).unwrap();
        assert!(validate_params(&inp, &p).passed);
        for (r, g) in [(0.0, 0.0), (1.0, 0.02), (5.0, 0.05)] {
            let a = korevaar_bound(&inp, &p, r, g).unwrap();
            let b = oracle(&inp, &p, r, g);
            assert!(b.is_finite());
            assert!(((a.value - b) / b).abs() < 1e-12, "{} {b}", a.value);
        }
    }

    #[test]
    fn identities_hold() {
        for delta in [0.5, 0.7, 0.9] {
            for gs in [0.1, 1.0, 10.0] {
                let p = canonical_params(delta, gs, 3, 1.0, 10.0).unwrap();
                let inp = BoundInputs { gamma_star: gs, ..inputs(gs) };
                let c = derived_constants(&inp, &p);
                assert!(((c.a3 - 2.0 * c.a2) / c.a3).abs() < 1e-12);
                assert!(((c.a3 - p.l * p.l * p.q * p.q / 4.0) / c.a3).abs() < 1e-12);
                let lhs = (p.a0 * gs).powi(2);
                let rhs = 32.0 * gs * gs / (1.0 - delta).powi(2);
                assert!(((lhs - rhs) / rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn corollary_dominates_canonical_bound() {
        let (delta, gs) = (0.5, 1.0);
        let cb = corollary_bound(delta, gs, 3, 1.0).unwrap();
        let inp = BoundInputs { m: 3, kappa: 0.0, kappa_bar: 0.0, r_outer: 10.0, r_inner: 4.9, gamma_star: gs };
        let p = canonical_params(delta, gs, 3, 1.0, 10.0).unwrap();
        for i in 0..=10 {
            for j in 0..=10 {
                let r = inp.r_inner * i as f64 / 10.0;
                let g = gs * j as f64 / 10.0;
                let b = korevaar_bound(&inp, &p, r, g).unwrap();
                assert!(b.log_value <= cb.log_value + 1e-9);
            }
        }
        let small = corollary_bound(0.5, 1e-9, 3, 1.0).unwrap();
        assert!((small.value - 2f64.sqrt() * 8.0).abs() < 1e-6);
    }

    #[test]
    fn entire_bound_limits() {
        let e0 = entire_bound(0.0, 3, 1.0).unwrap();
        assert!((e0.value - 8.0 * 2f64.sqrt()).abs() < 1e-12);
        let a = 0.05;
        let target = entire_bound(a, 3, 1.0).unwrap().value;
        let mut last = f64::NAN;
        for k in 1..=10 {
            let big_r = 10f64.powi(k);
            last = corollary_bound(0.5, a * (1.0 + 1.0 / big_r), 3, 1.0).unwrap().value;
        }
        assert!(((last - target) / target).abs() < 1e-6);
    }

    #[test]
    fn korevaar_converges_with_growing_radius() {
        // with canonical parameters LR does not depend on R, so the bound at
        // fixed r and gamma = gamma* = a converges as R grows
        let a = 0.05;
        let vals: Vec<f64> = [1e2, 1e4, 1e6]
            .iter()
            .map(|&big_r| {
                let inp = BoundInputs { m: 3, kappa: 0.0, kappa_bar: 0.0, r_outer: big_r, r_inner: 1.0, gamma_star: a };
                let p = canonical_params(0.5, a, 3, 1.0, big_r).unwrap();
                korevaar_bound(&inp, &p, 1.0, a).unwrap().log_value
            })
            .collect();
        assert!((vals[2] - vals[1]).abs() < (vals[1] - vals[0]).abs() + 1e-15);
        assert!(vals[2] <= entire_bound(a, 3, 1.0).unwrap().log_value);
    }

    #[test]
    fn optimizer_beats_canonical_and_is_deterministic() {
        let inp = inputs(1.0);
        let opts = OptimizeOptions::default();
        let a = optimize_params(&inp, 2.0, 0.5, &opts).unwrap();
        let b = optimize_params(&inp, 2.0, 0.5, &opts).unwrap();
        assert_eq!(a.params, b.params);
        assert!(a.validity.passed);
        let (_, canon) = a.canonical.unwrap();
        assert!(a.bound.log_value <= canon.log_value);
        assert!(a.evaluations <= opts.budget + 10);
    }

    #[test]
    fn optimizer_handles_negative_ricci_scale() {
        let inp = BoundInputs { m: 3, kappa: 1.0, kappa_bar: 2.0, r_outer: 10.0, r_inner: 3.0, gamma_star: 0.5 };
        let rep = optimize_params(&inp, 1.0, 0.2, &OptimizeOptions::default()).unwrap();
        assert!(rep.validity.passed);
        let c = rep.validity.constants;
        assert!(c.a3 > c.a2 && c.a2 > 0.0);
    }

    #[test]
    fn catenoid_sub_ball_verified() {
        let e2 = ModelManifold::euclidean(2).unwrap();
        let g = radial_flux_solution(&e2, 1.0, 1.05, 30.0, 4096).unwrap();
        for (center, big_r) in [(6.0, 4.0), (15.0, 10.0), (3.0, 1.5)] {
            let inp = BoundInputs { m: 2, kappa: 0.0, kappa_bar: 0.0, r_outer: big_r, r_inner: big_r / 2.0, gamma_star: 1.0 };
            let rep = verify_solution_bound(VerifyTarget::RadialBall { graph: &g, center, samples: 40 }, &inp, None).unwrap();
            assert!(rep.passed && rep.min_margin > 0.0, "{rep:?}");
        }
    }

    #[test]
    fn constant_graph_verified() {
        let e3 = ModelManifold::euclidean(3).unwrap();
        let g = RadialGraph::constant(&e3, crate::mse::uniform_grid(0.0, 10.0, 100), 1.0).unwrap();
        let inp = BoundInputs { m: 3, kappa: 0.0, kappa_bar: 0.0, r_outer: 5.0, r_inner: 2.0, gamma_star: 1.0 };
        let rep = verify_solution_bound(VerifyTarget::RadialBall { graph: &g, center: 0.0, samples: 10 }, &inp, None).unwrap();
        assert!(rep.passed);
    }

    #[test]
    fn off_pole_curved_rejected() {
        let h = ModelManifold::hyperbolic(3).unwrap();
        let g = RadialGraph::constant(&h, crate::mse::uniform_grid(0.0, 10.0, 100), 1.0).unwrap();
        let inp = BoundInputs { m: 3, kappa: 1.0, kappa_bar: 10.0, r_outer: 2.0, r_inner: 1.0, gamma_star: 1.0 };
        let r = verify_solution_bound(VerifyTarget::RadialBall { graph: &g, center: 5.0, samples: 10 }, &inp, None);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    proptest! {
        #[test]
        fn feasible_samples_order_constants(delta in 0.5f64..0.99, gs in 0.05f64..5.0, kb in 0.0f64..3.0, k in 0.0f64..2.0) {
            let inp = BoundInputs { m: 4, kappa: k, kappa_bar: kb, r_outer: 7.0, r_inner: 3.0, gamma_star: gs };
            if let Some(p) = feasible_canonical(&inp, delta) {
                let v = validate_params(&inp, &p);
                prop_assert!(v.passed);
                prop_assert!(v.constants.a3 > v.constants.a2 && v.constants.a2 > 0.0);
            }
        }

        #[test]
        fn ratio_at_least_one_and_monotone(gs in 0.05f64..3.0, fr in 0.0f64..1.0, g1 in 0.0f64..1.0, g2 in 0.0f64..1.0) {
            let inp = BoundInputs { m: 3, kappa: 0.0, kappa_bar: 0.0, r_outer: 10.0, r_inner: 4.0, gamma_star: gs };
            let p = canonical_params(0.5, gs, 3, 1.0, 10.0).unwrap();
            let r = 4.0 * fr;
            let (lo, hi) = if g1 < g2 { (g1, g2) } else { (g2, g1) };
            let a = korevaar_bound(&inp, &p, r, lo * gs).unwrap();
            let b = korevaar_bound(&inp, &p, r, hi * gs).unwrap();
            prop_assert!(a.log_ratio >= -1e-12);
            prop_assert!(a.log_value <= b.log_value + 1e-12);
        }

        #[test]
        fn scaling_invariance(lambda in 0.1f64..10.0, fr in 0.0f64..1.0, fg in 0.0f64..1.0) {
            let gs = 0.8;
            let inp = BoundInputs { m: 3, kappa: 0.0, kappa_bar: 0.0, r_outer: 10.0, r_inner: 4.0, gamma_star: gs };
            let p = canonical_params(0.6, gs, 3, 1.0, 10.0).unwrap();
            // a₂ scales like 1/(εR) · L, which is invariant together with LR
            let scaled_inp = BoundInputs { r_outer: 10.0 * lambda, r_inner: 4.0 * lambda, ..inp };
            let scaled_p = KorevaarParams { l: p.l / lambda, ..p };
            let a = korevaar_bound(&inp, &p, 4.0 * fr, fg * gs).unwrap();
            let b = korevaar_bound(&scaled_inp, &scaled_p, 4.0 * fr * lambda, fg * gs).unwrap();
            prop_assert!((a.log_value - b.log_value).abs() <= 1e-12 * a.log_value.abs().max(1.0));
        }
    }
}
