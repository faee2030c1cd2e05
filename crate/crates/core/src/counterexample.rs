//! The doubly-warped example of Kasue and Washio: construction, a grid
//! certificate of its curvature and of the affine t-graphs it carries, and
//! a search over the free parameters `(b, c)`.
//!
//! Certification is grid based. Every claim in the certificate carries its
//! worst margin and location; claims that are only recorded (the pointwise
//! sign of the second Ricci curvature) are marked as not asserted.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradient_bound::KwHypotheses;
use crate::model_manifold::{
    ricci_from_spectrum, ricci_l_radial, second_ricci_brackets, simple_plane_sectionals, KwProfile, ModelManifold,
    Warp, BRACKET_LABELS, R_MIN,
};
use crate::mse::TGraph;
use crate::verdict::Verdict;

/// Version tag of the certificate JSON.
pub const CERTIFICATE_SCHEMA: &str = "mglab/kw-certificate/1";

/// Ceiling for the mean curvature of the affine t-graphs.
pub const T_GRAPH_RESIDUAL_TOL: f64 = 1e-10;

pub const DEFAULT_R_MAX: f64 = 200.0;
pub const DEFAULT_N: usize = 8192;

/// Fraction of `r_max` where the tail fit of the asymptotic powers starts.
const TAIL_START: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothing {
    /// Quintic Hermite bridge for ζ₁ on `[1, 2]`.
    #[default]
    QuinticHermite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KwSpec {
    pub m: usize,
    pub alpha: f64,
    pub beta: f64,
    pub b: f64,
    pub c: f64,
    #[serde(default)]
    pub smoothing: Smoothing,
}

impl KwSpec {
    pub fn new(m: usize, alpha: f64, beta: f64, b: f64, c: f64) -> Result<Self> {
        let s = Self { m, alpha, beta, b, c, smoothing: Smoothing::QuinticHermite };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<()> {
        if self.m < 4 {
            return Err(Error::Argument(format!("m = {} must be at least 4", self.m)));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Argument(format!("{name} = {v} must lie in (0,1)")));
            }
        }
        if !(self.m as f64 - 1.0 - self.beta > 2.0 + self.alpha) {
            return Err(Error::Argument(format!(
                "need m - 1 - beta > 2 + alpha (got m = {}, alpha = {}, beta = {})",
                self.m, self.alpha, self.beta
            )));
        }
        if !(self.b > 0.0 && self.c > 0.0 && self.b.is_finite() && self.c.is_finite()) {
            return Err(Error::Argument(format!("need b, c > 0 (got {}, {})", self.b, self.c)));
        }
        Ok(())
    }

    /// `p = (β + 3 - m)/2`, negative under the constraints.
    pub fn exponent(&self) -> f64 {
        (self.beta + 3.0 - self.m as f64) / 2.0
    }
}

/// `f(r)² dt² + dr² + η(r)² h` with `η` from the ζ-profile and
/// `f = (b + r²)^p + c`.
pub fn build_kw_manifold(spec: &KwSpec) -> Result<ModelManifold> {
    spec.check()?;
    let profile = KwProfile::new(spec.alpha)?;
    ModelManifold::doubly_warped(
        spec.m,
        Warp::KwEta(profile),
        Warp::KwF { b: spec.b, c: spec.c, exponent: spec.exponent() },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridInfo {
    pub r_min: f64,
    pub r_max: f64,
    pub n: usize,
}

/// A claim with its worst margin and where it occurs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Claim {
    pub name: &'static str,
    pub verdict: Verdict,
    /// Part of the pass condition of the certificate.
    pub asserted: bool,
    pub margin: f64,
    pub at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketSummary {
    pub label: &'static str,
    pub realized: bool,
    pub min: f64,
    pub at: f64,
    pub value_at_r_max: f64,
    /// Least-squares slope of `ln |value|` against `ln r` on the tail.
    pub tail_power: f64,
    pub tail_sign: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RicciMinima {
    pub t: f64,
    pub r: f64,
    pub fiber: f64,
    pub min: f64,
    pub at: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WarpChecks {
    pub eta_prime_origin: f64,
    pub eta_prime_min: f64,
    pub eta_prime_max: f64,
    pub eta_prime_decreasing: bool,
    pub f_origin: f64,
    pub f_min: f64,
    pub f_decreasing: bool,
    pub zeta2_origin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayForm {
    pub l: usize,
    /// Smallest `κ̄ ≥ 0` with `Ric^(l)(∂r)(1 + r²) ≥ -κ̄²` on the grid.
    pub kappa_bar: f64,
    pub worst_r: f64,
    pub pointwise_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientSummary {
    pub slope: f64,
    /// `a / min f` over the grid.
    pub sup_du: f64,
    /// `a / c`, valid on the whole manifold since `f ≥ c`.
    pub global_bound: f64,
    pub max_t_graph_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub schema: String,
    pub spec: KwSpec,
    pub grid: GridInfo,
    pub warps: WarpChecks,
    pub ricci: RicciMinima,
    /// Entries with `(m-3)` fiber multiplicity in the `t` and `r`
    /// directions.
    pub ricci_m3: RicciMinima,
    pub sup_abs_sectional: f64,
    pub sup_abs_sectional_at: f64,
    pub fiber_terms_min: [f64; 2],
    pub brackets: Vec<BracketSummary>,
    pub decay: DecayForm,
    pub gradient: GradientSummary,
    pub claims: Vec<Claim>,
    pub passed: bool,
}

struct PointRecord {
    r: f64,
    eta_d1: f64,
    f: f64,
    ricci: [f64; 3],
    ricci_m3: [f64; 3],
    max_abs: f64,
    brackets: [f64; 9],
    fiber_terms: [f64; 2],
    ric_l: f64,
    residual: f64,
}

fn evaluate(man: &ModelManifold, tg: &TGraph, r: f64) -> Result<PointRecord> {
    let m = man.dim();
    let eta = man.eta().eval(r)?;
    let f = man.f().expect("doubly-warped").eval(r)?;
    let s = simple_plane_sectionals(man, r)?;
    let ric = ricci_from_spectrum(man, &s);
    let br = second_ricci_brackets(&s, m);
    let mut brackets = [0.0; 9];
    for (slot, b) in brackets.iter_mut().zip(&br) {
        *slot = b.value;
    }
    let mut residual = 0.0f64;
    for t in [-1.0, 0.0, 1.0] {
        residual = residual.max(tg.residual(t, r, 0.25)?.abs());
    }
    Ok(PointRecord {
        r,
        eta_d1: eta.d1,
        f: f.value,
        ricci: [ric.t.unwrap_or(f64::NAN), ric.r, ric.fiber],
        ricci_m3: [ric.t_m3.unwrap_or(f64::NAN), ric.r_m3.unwrap_or(f64::NAN), ric.fiber],
        max_abs: s.max_abs(),
        brackets,
        fiber_terms: [2.0 * s.k_ab, 2.0 * s.k_ra],
        ric_l: ricci_l_radial(man, &s, m - 2),
        residual,
    })
}

fn argmin(values: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NAN), |best, (v, r)| if v < best.0 { (v, r) } else { best })
}

fn minima(points: &[PointRecord], pick: impl Fn(&PointRecord) -> [f64; 3]) -> RicciMinima {
    let col = |k: usize| points.iter().map(|p| pick(p)[k]).fold(f64::INFINITY, f64::min);
    let (min, at) = argmin(points.iter().map(|p| (pick(p).into_iter().fold(f64::INFINITY, f64::min), p.r)));
    RicciMinima { t: col(0), r: col(1), fiber: col(2), min, at }
}

fn tail_power(points: &[PointRecord], value: impl Fn(&PointRecord) -> f64) -> f64 {
    let r_max = points.last().map_or(0.0, |p| p.r);
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.r >= TAIL_START * r_max)
        .map(|p| (p.r.ln(), value(p).abs()))
        .filter(|(_, v)| *v > 0.0)
        .map(|(x, v)| (x, v.ln()))
        .collect();
    if xy.len() < 2 {
        return f64::NAN;
    }
    let n = xy.len() as f64;
    let (mx, my) = (xy.iter().map(|p| p.0).sum::<f64>() / n, xy.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = xy.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xy.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Uniform grid from [`R_MIN`] to `r_max`.
pub fn certificate_grid(r_max: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| R_MIN + (r_max - R_MIN) * i as f64 / (n - 1) as f64).collect()
}

/// Certificate on `n` points of `[R_MIN, r_max]`. Points are evaluated
/// independently (in parallel when asked) and reduced in grid order, so the
/// result does not depend on scheduling.
pub fn certify(spec: &KwSpec, r_max: f64, n: usize, parallel: bool) -> Result<Certificate> {
    if !(r_max > R_MIN) || n < 16 {
        return Err(Error::Argument(format!("need r_max > {R_MIN} and n >= 16 (got {r_max}, {n})")));
    }
    let man = build_kw_manifold(spec)?;
    let tg = TGraph::new(&man, 1.0, 0.0)?;
    let grid = certificate_grid(r_max, n);
    let points: Vec<PointRecord> = if parallel {
        grid.par_iter().map(|&r| evaluate(&man, &tg, r)).collect::<Result<_>>()?
    } else {
        grid.iter().map(|&r| evaluate(&man, &tg, r)).collect::<Result<_>>()?
    };
    let m = spec.m;

    let eta0 = man.eta().eval(0.0)?;
    let f0 = man.f().unwrap().eval(0.0)?;
    let eta_prime_min = points.iter().map(|p| p.eta_d1).fold(f64::INFINITY, f64::min);
    let eta_prime_max = points.iter().map(|p| p.eta_d1).fold(eta0.d1, f64::max);
    let (f_min, f_min_at) = argmin(points.iter().map(|p| (p.f, p.r)));
    let warps = WarpChecks {
        eta_prime_origin: eta0.d1,
        eta_prime_min,
        eta_prime_max,
        eta_prime_decreasing: points.windows(2).all(|w| w[1].eta_d1 <= w[0].eta_d1) && points[0].eta_d1 <= eta0.d1,
        f_origin: f0.value,
        f_min,
        f_decreasing: points.windows(2).all(|w| w[1].f <= w[0].f),
        zeta2_origin: match man.eta() {
            Warp::KwEta(p) => p.zeta2_origin(),
            _ => unreachable!(),
        },
    };

    let ricci = minima(&points, |p| p.ricci);
    let ricci_m3 = minima(&points, |p| p.ricci_m3);
    let (neg_sup, sup_at) = argmin(points.iter().map(|p| (-p.max_abs, p.r)));
    let fiber_terms_min = [0, 1].map(|k| points.iter().map(|p| p.fiber_terms[k]).fold(f64::INFINITY, f64::min));
    let (fiber_min, fiber_at) = argmin(points.iter().map(|p| (p.fiber_terms[0].min(p.fiber_terms[1]), p.r)));

    let realized = second_ricci_brackets(&simple_plane_sectionals(&man, 1.0)?, m);
    let brackets: Vec<BracketSummary> = (0..9)
        .map(|k| {
            let (min, at) = argmin(points.iter().map(|p| (p.brackets[k], p.r)));
            let last = points.last().unwrap().brackets[k];
            BracketSummary {
                label: BRACKET_LABELS[k],
                realized: realized[k].realized,
                min,
                at,
                value_at_r_max: last,
                tail_power: tail_power(&points, |p| p.brackets[k]),
                tail_sign: if last == 0.0 { 0.0 } else { last.signum() },
            }
        })
        .collect();
    let (pointwise_l2, pointwise_l2_at) = argmin(
        points.iter().map(|p| {
            let v = (0..9).filter(|&k| realized[k].realized).map(|k| p.brackets[k]).fold(f64::INFINITY, f64::min);
            (v, p.r)
        }),
    );

    let (decay_val, decay_at) = argmin(points.iter().map(|p| (p.ric_l * (1.0 + p.r * p.r), p.r)));
    let decay = DecayForm {
        l: m - 2,
        kappa_bar: (-decay_val).max(0.0).sqrt(),
        worst_r: decay_at,
        pointwise_min: points.iter().map(|p| p.ric_l).fold(f64::INFINITY, f64::min),
    };

    let (neg_res, res_at) = argmin(points.iter().map(|p| (-p.residual, p.r)));
    let gradient = GradientSummary {
        slope: tg.a,
        sup_du: tg.a.abs() / f_min,
        global_bound: tg.a.abs() / spec.c,
        max_t_graph_residual: -neg_res,
    };

    let claim = |name, ok: bool, asserted, margin, at| Claim { name, verdict: Verdict::from_bool(ok), asserted, margin, at };
    let eta_margin = (eta_prime_min - 0.5).min(1.0 - eta_prime_max);
    let claims = vec![
        claim("eta-prime-in-half-one", eta_prime_min > 0.5 && eta_prime_max <= 1.0, true, eta_margin, f64::NAN),
        claim("eta-prime-decreasing", warps.eta_prime_decreasing, true, 0.0, f64::NAN),
        claim("f-decreasing", warps.f_decreasing, true, 0.0, f64::NAN),
        claim("f-at-least-c", f_min >= spec.c, true, f_min - spec.c, f_min_at),
        claim("fiber-terms-positive", fiber_min > 0.0, true, fiber_min, fiber_at),
        claim("ricci-positive", ricci.min > 0.0, true, ricci.min, ricci.at),
        claim("ricci-positive-m3", ricci_m3.min > 0.0, false, ricci_m3.min, ricci_m3.at),
        claim("sectional-bounded", neg_sup.is_finite(), true, -neg_sup, sup_at),
        claim("decay-form", decay.kappa_bar.is_finite(), true, decay.kappa_bar, decay.worst_r),
        claim("second-ricci-pointwise", pointwise_l2 >= 0.0, false, pointwise_l2, pointwise_l2_at),
        claim(
            "t-graph-minimal",
            gradient.max_t_graph_residual < T_GRAPH_RESIDUAL_TOL,
            true,
            T_GRAPH_RESIDUAL_TOL - gradient.max_t_graph_residual,
            res_at,
        ),
        claim("gradient-bounded", gradient.sup_du.is_finite() && gradient.sup_du <= gradient.global_bound, true, gradient.global_bound - gradient.sup_du, f_min_at),
    ];
    let passed = claims.iter().filter(|c| c.asserted).all(|c| c.verdict.passed());
    Ok(Certificate {
        schema: CERTIFICATE_SCHEMA.into(),
        spec: *spec,
        grid: GridInfo { r_min: R_MIN, r_max, n },
        warps,
        ricci,
        ricci_m3,
        sup_abs_sectional: -neg_sup,
        sup_abs_sectional_at: sup_at,
        fiber_terms_min,
        brackets,
        decay,
        gradient,
        claims,
        passed,
    })
}

impl Certificate {
    pub fn claim(&self, name: &str) -> Option<&Claim> {
        self.claims.iter().find(|c| c.name == name)
    }

    /// Curvature hypotheses for gradient-bound verification on the t-graphs.
    pub fn hypotheses(&self) -> KwHypotheses {
        let s = &self.spec;
        KwHypotheses {
            ricci_positive: self.claim("ricci-positive").is_some_and(|c| c.verdict.passed()),
            kappa_bar: self.decay.kappa_bar,
            f_max: self.warps.f_origin,
            f_min: s.c,
            source: format!(
                "{} m={} alpha={} beta={} b={} c={} r_max={} n={}",
                self.schema, s.m, s.alpha, s.beta, s.b, s.c, self.grid.r_max, self.grid.n
            ),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

/// Minimum over a grid of each Ricci entry divided by the sum of the
/// absolute values of its sectional terms, a scale-free margin in `[-1, 1]`.
pub fn normalized_ricci_margin(spec: &KwSpec, r_max: f64, n: usize) -> Result<(f64, f64)> {
    let man = build_kw_manifold(spec)?;
    let mf = spec.m as f64;
    let mut best = (f64::INFINITY, f64::NAN);
    for r in certificate_grid(r_max, n) {
        let s = simple_plane_sectionals(&man, r)?;
        let (tr, ta) = (s.k_tr.unwrap(), s.k_ta.unwrap());
        let entries = [
            (tr + (mf - 2.0) * ta, tr.abs() + (mf - 2.0) * ta.abs()),
            (tr + (mf - 2.0) * s.k_ra, tr.abs() + (mf - 2.0) * s.k_ra.abs()),
            (ta + s.k_ra + (mf - 3.0) * s.k_ab, ta.abs() + s.k_ra.abs() + (mf - 3.0) * s.k_ab.abs()),
        ];
        for (v, scale) in entries {
            let q = if scale > 0.0 { v / scale } else { 0.0 };
            if q < best.0 {
                best = (q, r);
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchCandidate {
    pub b: f64,
    pub c: f64,
    pub margin: f64,
    pub at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub m: usize,
    pub alpha: f64,
    pub beta: f64,
    pub grid_size: usize,
    pub candidates: Vec<SearchCandidate>,
    pub best: SearchCandidate,
    pub certificate: Certificate,
    /// Ricci minimum of the certificate with `b` doubled.
    pub doubled_b_ricci_min: f64,
}

/// Coarse grid used to score candidates.
pub const SEARCH_COARSE_N: usize = 512;

/// Log grid `grid_size × grid_size` over `b, c ∈ [10, 10⁶]`, scored by the
/// normalized Ricci margin on a coarse grid; the winner gets a full
/// certificate.
pub fn search_bc(m: usize, alpha: f64, beta: f64, grid_size: usize, r_max: f64, n: usize) -> Result<SearchReport> {
    if grid_size < 2 {
        return Err(Error::Argument(format!("grid size {grid_size} must be at least 2")));
    }
    KwSpec::new(m, alpha, beta, 1.0, 1.0)?;
    let axis: Vec<f64> = (0..grid_size).map(|k| 10f64.powf(1.0 + 5.0 * k as f64 / (grid_size - 1) as f64)).collect();
    let pairs: Vec<(f64, f64)> = axis.iter().flat_map(|&b| axis.iter().map(move |&c| (b, c))).collect();
    let candidates: Vec<SearchCandidate> = pairs
        .par_iter()
        .map(|&(b, c)| {
            let spec = KwSpec::new(m, alpha, beta, b, c)?;
            let (margin, at) = normalized_ricci_margin(&spec, r_max, SEARCH_COARSE_N)?;
            Ok(SearchCandidate { b, c, margin, at })
        })
        .collect::<Result<_>>()?;
    let best = *candidates
        .iter()
        .fold(None, |acc: Option<&SearchCandidate>, cand| match acc {
            Some(a) if a.margin >= cand.margin => Some(a),
            _ => Some(cand),
        })
        .unwrap();
    if !(best.margin > 0.0) {
        return Err(Error::Infeasible(format!(
            "no (b, c) in [10, 1e6]^2 gives positive Ricci curvature; best margin {:e} at b = {}, c = {}",
            best.margin, best.b, best.c
        )));
    }
    let spec = KwSpec::new(m, alpha, beta, best.b, best.c)?;
    let certificate = certify(&spec, r_max, n, true)?;
    let doubled = KwSpec::new(m, alpha, beta, 2.0 * best.b, best.c)?;
    let doubled_b_ricci_min = certify(&doubled, r_max, n, true)?.ricci.min;
    Ok(SearchReport { m, alpha, beta, grid_size, candidates, best, certificate, doubled_b_ricci_min })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;
    use proptest::prelude::*;

    fn spec(b: f64, c: f64) -> KwSpec {
        KwSpec::new(4, 0.4, 0.4, b, c).unwrap()
    }

    #[test]
    fn spec_constraints() {
        assert!(KwSpec::new(3, 0.4, 0.4, 1.0, 1.0).is_err());
        assert!(KwSpec::new(4, 0.9, 0.5, 1.0, 1.0).is_err());
        assert!(KwSpec::new(4, 0.4, 0.4, 0.0, 1.0).is_err());
        let s = spec(1.0, 1.0);
        assert!((s.exponent() + 0.3).abs() < 1e-15);
        let json = r#"{"m":4,"alpha":0.4,"beta":0.4,"b":1,"c":2,"extra":0}"#;
        assert!(serde_json::from_str::<KwSpec>(json).is_err());
    }

    #[test]
    fn construction_endpoints() {
        let s = spec(100.0, 50.0);
        let man = build_kw_manifold(&s).unwrap();
        let eta = man.eta().eval(0.0).unwrap();
        let f = man.f().unwrap().eval(0.0).unwrap();
        assert!(eta.value.abs() < 1e-15 && (eta.d1 - 1.0).abs() < 1e-15 && f.d1 == 0.0);
        assert!((f.value - (100f64.powf(-0.3) + 50.0)).abs() < 1e-12);
        assert!((man.f().unwrap().value(1e8).unwrap() - 50.0).abs() < 1e-4);
    }

    #[test]
    fn zeta2_origin_against_quadrature() {
        let man = build_kw_manifold(&spec(10.0, 10.0)).unwrap();
        let p = match man.eta() {
            Warp::KwEta(p) => p.clone(),
            _ => unreachable!(),
        };
        // ∫₀^∞ ζ₁ with the closed tail beyond t = 50.
        let body = quad::quad(|t| p.zeta1(t).value, 0.0, 50.0).unwrap();
        let total = body + 50f64.powf(-0.4) / 0.4;
        assert!((total - p.zeta2_origin()).abs() < 1e-8);
    }

    #[test]
    fn certificate_for_large_parameters() {
        let cert = certify(&spec(1e4, 1e4), DEFAULT_R_MAX, 2048, true).unwrap();
        assert!(cert.passed, "{:#?}", cert.claims);
        assert!(cert.ricci.min > 0.0);
        assert!(cert.gradient.max_t_graph_residual < T_GRAPH_RESIDUAL_TOL);
        assert!((cert.gradient.sup_du - 1.0 / cert.warps.f_min).abs() < 1e-15);
        let hyp = cert.hypotheses();
        assert!(hyp.ricci_positive && hyp.f_min == 1e4 && hyp.f_max > hyp.f_min);
    }

    #[test]
    fn bracket_tail_power() {
        // K_tr + K_ta behaves like -4p² r^{2p-2}/c once r² ≫ b.
        let cert = certify(&spec(1.0, 1e4), DEFAULT_R_MAX, 2048, true).unwrap();
        let b = cert.brackets.iter().find(|b| b.label == "K_tr+K_ta").unwrap();
        assert_eq!(b.tail_sign, -1.0);
        assert!((b.tail_power - (2.0 * -0.3 - 2.0)).abs() < 0.15, "{b:?}");
    }

    #[test]
    fn small_parameters_fail_ricci() {
        let cert = certify(&spec(0.5, 0.5), DEFAULT_R_MAX, 1024, false).unwrap();
        assert!(!cert.passed);
        assert_eq!(cert.claim("ricci-positive").unwrap().verdict, Verdict::Fail);
        assert!(cert.decay.kappa_bar.is_finite());
    }

    #[test]
    fn certificate_is_bit_reproducible() {
        let a = certify(&spec(300.0, 2000.0), 50.0, 600, true).unwrap().to_json();
        let b = certify(&spec(300.0, 2000.0), 50.0, 600, false).unwrap().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn certificate_reproduces_model_manifold_calls() {
        let s = spec(1e3, 1e3);
        let cert = certify(&s, 20.0, 200, false).unwrap();
        let man = build_kw_manifold(&s).unwrap();
        let min = certificate_grid(20.0, 200)
            .into_iter()
            .map(|r| crate::model_manifold::ricci_diag(&man, r).unwrap().min())
            .fold(f64::INFINITY, f64::min);
        assert_eq!(min, cert.ricci.min);
    }

    #[test]
    fn search_returns_positive_ricci() {
        let rep = search_bc(4, 0.4, 0.4, 4, DEFAULT_R_MAX, 1024).unwrap();
        assert!(rep.best.margin > 0.0);
        assert!(rep.certificate.ricci.min > 0.0);
        assert!(rep.doubled_b_ricci_min > 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn prop_warp_invariants(alpha in 0.05f64..0.6, lb in 0.0f64..6.0, lc in 0.0f64..6.0) {
            let s = KwSpec::new(4, alpha, 0.4, 10f64.powf(lb), 10f64.powf(lc)).unwrap();
            let cert = certify(&s, 100.0, 400, false).unwrap();
            prop_assert!(cert.warps.eta_prime_min > 0.5 && cert.warps.eta_prime_max <= 1.0);
            prop_assert!(cert.warps.eta_prime_decreasing && cert.warps.f_decreasing);
            prop_assert!(cert.warps.f_min >= s.c);
            prop_assert!(cert.fiber_terms_min[0] > 0.0 && cert.fiber_terms_min[1] > 0.0);
        }
    }
}
