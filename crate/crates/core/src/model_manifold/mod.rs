//! Rotationally symmetric and doubly-warped model manifolds and their
//! curvature and volume quantities.
//!
//! A rotationally symmetric model is `dr² + η(r)² g_S` on `S^{m-1}`; a
//! doubly-warped model is `f(r)² dt² + dr² + η(r)² h` with `h` the round unit
//! metric on `S^{m-2}`. In both cases the curvature operator is diagonal on
//! the coordinate planes, so everything reduces to four scalar functions of r.

mod spec;
mod warp;

pub use spec::{ManifoldSpec, WarpSpec};
pub use warp::{finite_difference_defect, warp_eval, Jet, KwProfile, PiecewiseWarp, QuinticPiece, Warp, POSITIVITY_SAMPLES};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad;

/// Smallest radius at which curvature formulas are evaluated on grids.
pub const R_MIN: f64 = 1e-4;

/// Closure tolerance for `η(0) = 0`, `η′(0) = 1`, `f′(0) = 0`.
pub const CLOSURE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManifoldKind {
    RotationallySymmetric,
    DoublyWarped,
}

/// Orthonormal frame classes: the `t` direction, the radial direction and
/// the fiber directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameClass {
    T,
    R,
    Fiber,
}

#[derive(Debug, Clone)]
pub struct ModelManifold {
    kind: ManifoldKind,
    m: usize,
    eta: Warp,
    f: Option<Warp>,
}

impl ModelManifold {
    pub fn rotationally_symmetric(m: usize, eta: Warp) -> Result<Self> {
        if m < 2 {
            return Err(Error::Argument(format!("dimension m = {m} must be at least 2")));
        }
        check_pole(&eta, "eta", 0.0, 1.0)?;
        Ok(Self { kind: ManifoldKind::RotationallySymmetric, m, eta, f: None })
    }

    pub fn doubly_warped(m: usize, eta: Warp, f: Warp) -> Result<Self> {
        if m < 4 {
            return Err(Error::Argument(format!("doubly-warped models need m >= 4, got {m}")));
        }
        check_pole(&eta, "eta", 0.0, 1.0)?;
        let (lo, _) = f.domain();
        let jf = f.eval(lo)?;
        if jf.d1.abs() > CLOSURE_TOL {
            return Err(Error::Construction(format!("f'(0) = {:e} violates closure", jf.d1)));
        }
        if !(jf.value > 0.0) {
            return Err(Error::Construction(format!("f(0) = {} is not positive", jf.value)));
        }
        Ok(Self { kind: ManifoldKind::DoublyWarped, m, eta, f: Some(f) })
    }

    pub fn euclidean(m: usize) -> Result<Self> {
        Self::rotationally_symmetric(m, Warp::Euclidean)
    }

    pub fn sphere(m: usize) -> Result<Self> {
        Self::rotationally_symmetric(m, Warp::Sphere)
    }

    pub fn hyperbolic(m: usize) -> Result<Self> {
        Self::rotationally_symmetric(m, Warp::Hyperbolic)
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn eta(&self) -> &Warp {
        &self.eta
    }

    pub fn f(&self) -> Option<&Warp> {
        self.f.as_ref()
    }

    /// Radial domain shared by the warps.
    pub fn domain(&self) -> (f64, f64) {
        let (lo, hi) = self.eta.domain();
        match &self.f {
            Some(f) => {
                let (a, b) = f.domain();
                (lo.max(a), hi.min(b))
            }
            None => (lo, hi),
        }
    }

    /// Frame classes with multiplicities.
    pub fn frame(&self) -> Vec<(FrameClass, usize)> {
        match self.kind {
            ManifoldKind::RotationallySymmetric => vec![(FrameClass::R, 1), (FrameClass::Fiber, self.m - 1)],
            ManifoldKind::DoublyWarped => {
                vec![(FrameClass::T, 1), (FrameClass::R, 1), (FrameClass::Fiber, self.m - 2)]
            }
        }
    }
}

fn check_pole(w: &Warp, name: &str, value: f64, d1: f64) -> Result<()> {
    let (lo, _) = w.domain();
    let j = w.eval(lo)?;
    if (j.value - value).abs() > CLOSURE_TOL || (j.d1 - d1).abs() > CLOSURE_TOL {
        return Err(Error::Construction(format!(
            "{name} does not close at the pole: value {} and slope {} at r = {lo}",
            j.value, j.d1
        )));
    }
    Ok(())
}

/// Sectional curvatures of the coordinate planes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectionalSpectrum {
    pub k_tr: Option<f64>,
    pub k_ta: Option<f64>,
    pub k_ra: f64,
    pub k_ab: f64,
}

impl SectionalSpectrum {
    /// Sectional curvature of the plane spanned by two frame vectors of the
    /// given classes (distinct vectors).
    pub fn plane(&self, a: FrameClass, b: FrameClass) -> f64 {
        use FrameClass::*;
        match (a, b) {
            (T, R) | (R, T) => self.k_tr.unwrap_or(f64::NAN),
            (T, Fiber) | (Fiber, T) => self.k_ta.unwrap_or(f64::NAN),
            (R, Fiber) | (Fiber, R) => self.k_ra,
            (Fiber, Fiber) => self.k_ab,
            (T, T) | (R, R) => f64::NAN,
        }
    }

    /// Largest absolute sectional curvature among populated entries.
    pub fn max_abs(&self) -> f64 {
        [self.k_tr, self.k_ta, Some(self.k_ra), Some(self.k_ab)]
            .into_iter()
            .flatten()
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

fn sectionals_from_jets(eta: Jet, f: Option<Jet>) -> SectionalSpectrum {
    let k_ra = -eta.d2 / eta.value;
    let k_ab = (1.0 - eta.d1 * eta.d1) / (eta.value * eta.value);
    match f {
        Some(f) => SectionalSpectrum {
            k_tr: Some(-f.d2 / f.value),
            k_ta: Some(-eta.d1 * f.d1 / (eta.value * f.value)),
            k_ra,
            k_ab,
        },
        None => SectionalSpectrum { k_tr: None, k_ta: None, k_ra, k_ab },
    }
}

pub fn simple_plane_sectionals(man: &ModelManifold, r: f64) -> Result<SectionalSpectrum> {
    if !(r > 0.0) {
        return Err(Error::Pole { r });
    }
    let eta = man.eta.eval(r)?;
    let f = match &man.f {
        Some(f) => Some(f.eval(r)?),
        None => None,
    };
    Ok(sectionals_from_jets(eta, f))
}

/// Sectional spectrum with every warp derivative replaced by a central
/// difference of warp values at step `h`.
pub fn finite_difference_sectionals(man: &ModelManifold, r: f64, h: f64) -> Result<SectionalSpectrum> {
    if !(r > 0.0) {
        return Err(Error::Pole { r });
    }
    let fd = |w: &Warp| -> Result<Jet> {
        let (lo, hi) = w.domain();
        let c = r.clamp(lo + h, hi - h);
        let (vp, v0, vm) = (w.value(c + h)?, w.value(c)?, w.value(c - h)?);
        // shift back to r to first order is unnecessary when r is interior
        Ok(Jet::new(v0, (vp - vm) / (2.0 * h), (vp - 2.0 * v0 + vm) / (h * h)))
    };
    let eta = fd(&man.eta)?;
    let f = match &man.f {
        Some(f) => Some(fd(f)?),
        None => None,
    };
    Ok(sectionals_from_jets(eta, f))
}

/// Diagonal Ricci entries in the coordinate frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RicciDiagonal {
    /// Ric in the `t` direction, counted over the actual frame.
    pub t: Option<f64>,
    pub r: f64,
    pub fiber: f64,
    /// Alternative `t` and `r` entries with `(m-3)` fiber multiplicity, for
    /// comparison with the printed display of the doubly-warped example.
    pub t_m3: Option<f64>,
    pub r_m3: Option<f64>,
}

impl RicciDiagonal {
    /// Minimum over the frame of the trace-computed entries.
    pub fn min(&self) -> f64 {
        let mut v = self.r.min(self.fiber);
        if let Some(t) = self.t {
            v = v.min(t);
        }
        v
    }
}

/// Ricci entries computed as traces over the frame with multiplicities.
pub fn ricci_diag(man: &ModelManifold, r: f64) -> Result<RicciDiagonal> {
    let s = simple_plane_sectionals(man, r)?;
    Ok(ricci_from_spectrum(man, &s))
}

pub fn ricci_from_spectrum(man: &ModelManifold, s: &SectionalSpectrum) -> RicciDiagonal {
    let m = man.m as f64;
    match man.kind {
        ManifoldKind::RotationallySymmetric => RicciDiagonal {
            t: None,
            r: (m - 1.0) * s.k_ra,
            fiber: s.k_ra + (m - 2.0) * s.k_ab,
            t_m3: None,
            r_m3: None,
        },
        ManifoldKind::DoublyWarped => {
            let k_tr = s.k_tr.unwrap_or(f64::NAN);
            let k_ta = s.k_ta.unwrap_or(f64::NAN);
            RicciDiagonal {
                t: Some(k_tr + (m - 2.0) * k_ta),
                r: k_tr + (m - 2.0) * s.k_ra,
                fiber: k_ta + s.k_ra + (m - 3.0) * s.k_ab,
                t_m3: Some(k_tr + (m - 3.0) * k_ta),
                r_m3: Some(k_tr + (m - 3.0) * s.k_ra),
            }
        }
    }
}

/// The nine candidate brackets for the second Ricci curvature on a
/// doubly-warped model, in their conventional order.
pub const BRACKET_LABELS: [&str; 9] = [
    "K_tr+K_ab",
    "K_tr+K_ta",
    "K_tr+K_ra",
    "K_ab+K_ta",
    "K_ab+K_ra",
    "K_ra+K_ta",
    "2K_ta",
    "2K_ab",
    "2K_ra",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bracket {
    pub label: &'static str,
    /// Bracket value divided by 2 (the normalization of `Ric^(2)`).
    pub value: f64,
    /// Whether some frame direction actually has this pair of planes.
    pub realized: bool,
}

/// Brackets for `ℓ = 2` on a doubly-warped spectrum in an `m`-manifold.
pub fn second_ricci_brackets(s: &SectionalSpectrum, m: usize) -> Vec<Bracket> {
    let k_tr = s.k_tr.unwrap_or(f64::NAN);
    let k_ta = s.k_ta.unwrap_or(f64::NAN);
    let fibers = m.saturating_sub(2);
    let values = [
        k_tr + s.k_ab,
        k_tr + k_ta,
        k_tr + s.k_ra,
        s.k_ab + k_ta,
        s.k_ab + s.k_ra,
        s.k_ra + k_ta,
        2.0 * k_ta,
        2.0 * s.k_ab,
        2.0 * s.k_ra,
    ];
    // t∧r and α∧β share no frame vector, so the first bracket is never realized
    let realized = [false, true, true, fibers >= 2, fibers >= 2, true, fibers >= 2, fibers >= 3, fibers >= 2];
    BRACKET_LABELS
        .iter()
        .zip(values)
        .zip(realized)
        .map(|((label, v), realized)| Bracket { label, value: 0.5 * v, realized })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionTerm {
    pub direction: FrameClass,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RicciLReport {
    pub l: usize,
    /// `(1/ℓ)` times the minimum over frame directions and coordinate
    /// ℓ-subsets of sectional sums.
    pub value: f64,
    pub per_direction: Vec<DirectionTerm>,
    /// Only for `ℓ = 2` on doubly-warped models.
    pub brackets: Option<Vec<Bracket>>,
}

/// Sorted sectional curvatures of the `m-1` coordinate planes containing a
/// frame vector of class `dir`.
fn planes_through(man: &ModelManifold, s: &SectionalSpectrum, dir: FrameClass) -> Vec<f64> {
    let mut out = Vec::with_capacity(man.m - 1);
    for (class, mult) in man.frame() {
        let count = if class == dir { mult - 1 } else { mult };
        for _ in 0..count {
            out.push(s.plane(dir, class));
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    out
}

pub fn ricci_l_lower(man: &ModelManifold, r: f64, l: usize) -> Result<RicciLReport> {
    if l < 1 || l > man.m - 1 {
        return Err(Error::Argument(format!("l = {l} outside [1, {}]", man.m - 1)));
    }
    let s = simple_plane_sectionals(man, r)?;
    Ok(ricci_l_from_spectrum(man, &s, l))
}

pub fn ricci_l_from_spectrum(man: &ModelManifold, s: &SectionalSpectrum, l: usize) -> RicciLReport {
    let per_direction: Vec<DirectionTerm> = man
        .frame()
        .into_iter()
        .filter(|(_, mult)| *mult > 0)
        .map(|(dir, _)| {
            let planes = planes_through(man, s, dir);
            let sum: f64 = planes.iter().take(l).sum();
            DirectionTerm { direction: dir, value: sum / l as f64 }
        })
        .collect();
    let value = per_direction.iter().map(|d| d.value).fold(f64::INFINITY, f64::min);
    let brackets = if l == 2 && man.kind == ManifoldKind::DoublyWarped {
        Some(second_ricci_brackets(s, man.m))
    } else {
        None
    };
    RicciLReport { l, value, per_direction, brackets }
}

/// `Ric^(ℓ)(v)` for a single radial direction `v = ∂_r`.
pub fn ricci_l_radial(man: &ModelManifold, s: &SectionalSpectrum, l: usize) -> f64 {
    let planes = planes_through(man, s, FrameClass::R);
    planes.iter().take(l).sum::<f64>() / l as f64
}

/// Area of the unit round sphere `S^k`.
pub fn sphere_area(k: usize) -> f64 {
    use std::f64::consts::PI;
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * sphere_area(k - 2),
    }
}

/// `|B_R|` for a rotationally symmetric model.
pub fn volume_ball(man: &ModelManifold, radius: f64) -> Result<f64> {
    if man.kind != ManifoldKind::RotationallySymmetric {
        return Err(Error::UnsupportedKind("volume_ball needs a rotationally symmetric model".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::Argument(format!("radius {radius} must be positive")));
    }
    let (lo, hi) = man.domain();
    if radius > hi {
        return Err(Error::Domain { r: radius, lo, hi });
    }
    let p = (man.m - 1) as i32;
    let opts = quad::QuadOptions { abs_tol: 0.0, rel_tol: 1e-13, max_intervals: 4000 };
    let v = quad::integrate(|s| man.eta.value(s).map(|e| e.powi(p)).unwrap_or(f64::NAN), lo, radius, opts)?;
    Ok(sphere_area(man.m - 1) * v.value)
}

/// Bishop–Gromov bracket for `√(|B_R(x)| |B_R(y)|)` given `|B_R(x)|` and
/// `d = dist(x, y)`.
pub fn ball_offset_bound(vol_x: f64, d: f64, radius: f64, m: usize) -> Result<(f64, f64)> {
    if !(vol_x > 0.0 && d >= 0.0 && radius > 0.0) {
        return Err(Error::Argument(format!("need vol_x > 0, d >= 0, R > 0 (got {vol_x}, {d}, {radius})")));
    }
    let factor = (1.0 + d / radius).powf(m as f64 / 2.0);
    Ok((vol_x / factor, vol_x * factor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn kw() -> ModelManifold {
        let p = KwProfile::new(0.4).unwrap();
        ModelManifold::doubly_warped(4, Warp::KwEta(p), Warp::KwF { b: 100.0, c: 100.0, exponent: -0.3 }).unwrap()
    }

    fn all_models() -> Vec<ModelManifold> {
        vec![
            ModelManifold::euclidean(3).unwrap(),
            ModelManifold::sphere(3).unwrap(),
            ModelManifold::hyperbolic(4).unwrap(),
            ModelManifold::euclidean(2).unwrap(),
            kw(),
            {
                let p = KwProfile::new(0.4).unwrap();
                ModelManifold::doubly_warped(6, Warp::KwEta(p), Warp::KwF { b: 50.0, c: 10.0, exponent: -1.3 })
                    .unwrap()
            },
        ]
    }

    #[test]
    fn sphere_and_euclidean_sectionals() {
        let s = simple_plane_sectionals(&ModelManifold::sphere(3).unwrap(), 1.0).unwrap();
        assert!((s.k_ra - 1.0).abs() < 1e-14 && (s.k_ab - 1.0).abs() < 1e-14);
        let e = simple_plane_sectionals(&ModelManifold::euclidean(3).unwrap(), 1.0).unwrap();
        assert_eq!((e.k_ra, e.k_ab), (0.0, 0.0));
        assert!(matches!(simple_plane_sectionals(&ModelManifold::euclidean(3).unwrap(), 0.0), Err(Error::Pole { .. })));
    }

    #[test]
    fn kw_pole_limit_of_k_tr() {
        let (b, c, p): (f64, f64, f64) = (100.0, 100.0, -0.3);
        // symbolic oracle: f = (b+r²)^p + c ⇒ f″(0) = 2p b^{p-1}
        let oracle = -2.0 * p * b.powf(p - 1.0) / (b.powf(p) + c);
        let s = simple_plane_sectionals(&kw(), 1e-6).unwrap();
        assert!((s.k_tr.unwrap() - oracle).abs() < 1e-12 * oracle.abs().max(1.0));
    }

    #[test]
    fn ricci_examples() {
        let d = ricci_diag(&ModelManifold::sphere(3).unwrap(), 0.7).unwrap();
        assert!((d.r - 2.0).abs() < 1e-13 && (d.fiber - 2.0).abs() < 1e-13);
        let e = ricci_diag(&ModelManifold::euclidean(5).unwrap(), 0.7).unwrap();
        assert_eq!(e.min(), 0.0);
    }

    #[test]
    fn ricci_matches_explicit_plane_enumeration() {
        // oracle: build the full frame vector list and sum sectional curvatures pairwise
        for man in all_models() {
            for r in [0.3, 1.4, 5.0] {
                if r >= man.domain().1 {
                    continue;
                }
                let s = simple_plane_sectionals(&man, r).unwrap();
                let frame: Vec<FrameClass> =
                    man.frame().into_iter().flat_map(|(c, k)| std::iter::repeat(c).take(k)).collect();
                let ric: Vec<f64> = (0..frame.len())
                    .map(|a| (0..frame.len()).filter(|&b| b != a).map(|b| s.plane(frame[a], frame[b])).sum())
                    .collect();
                let d = ricci_from_spectrum(&man, &s);
                for (a, v) in ric.iter().enumerate() {
                    let expect = match frame[a] {
                        FrameClass::T => d.t.unwrap(),
                        FrameClass::R => d.r,
                        FrameClass::Fiber => d.fiber,
                    };
                    assert!((v - expect).abs() < 1e-12 * v.abs().max(1.0));
                }
                // trace consistency
                let total: f64 = ric.iter().sum();
                let pairs: f64 = (0..frame.len())
                    .flat_map(|a| (0..frame.len()).map(move |b| (a, b)))
                    .filter(|(a, b)| a != b)
                    .map(|(a, b)| s.plane(frame[a], frame[b]))
                    .sum();
                assert!((total - pairs).abs() < 1e-11 * total.abs().max(1.0));
            }
        }
    }

    #[test]
    fn printed_convention_reported() {
        let d = ricci_diag(&kw(), 3.0).unwrap();
        let s = simple_plane_sectionals(&kw(), 3.0).unwrap();
        assert!((d.t.unwrap() - d.t_m3.unwrap() - s.k_ta.unwrap()).abs() < 1e-15);
        assert!((d.r - d.r_m3.unwrap() - s.k_ra).abs() < 1e-15);
    }

    fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        if n < k {
            return vec![];
        }
        let mut out = combinations(n - 1, k);
        for mut c in combinations(n - 1, k - 1) {
            c.push(n - 1);
            out.push(c);
        }
        out
    }

    #[test]
    fn ricci_l_matches_brute_force_subsets() {
        for man in all_models() {
            let frame: Vec<FrameClass> =
                man.frame().into_iter().flat_map(|(c, k)| std::iter::repeat(c).take(k)).collect();
            for r in [0.2, 1.7, 4.0] {
                if r >= man.domain().1 {
                    continue;
                }
                let s = simple_plane_sectionals(&man, r).unwrap();
                for l in 1..man.dim() {
                    let mut best = f64::INFINITY;
                    for a in 0..frame.len() {
                        let others: Vec<usize> = (0..frame.len()).filter(|&b| b != a).collect();
                        for subset in combinations(others.len(), l) {
                            let sum: f64 = subset.iter().map(|&i| s.plane(frame[a], frame[others[i]])).sum();
                            best = best.min(sum / l as f64);
                        }
                    }
                    let rep = ricci_l_lower(&man, r, l).unwrap();
                    assert!((rep.value - best).abs() < 1e-12 * best.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn realized_brackets_bound_second_ricci() {
        let man = kw();
        for r in [0.5, 2.0, 10.0] {
            let rep = ricci_l_lower(&man, r, 2).unwrap();
            let b = rep.brackets.unwrap();
            assert_eq!(b.len(), 9);
            let realized_min = b.iter().filter(|x| x.realized).map(|x| x.value).fold(f64::INFINITY, f64::min);
            assert!((realized_min - rep.value).abs() < 1e-13 * rep.value.abs().max(1.0));
            let all_min = b.iter().map(|x| x.value).fold(f64::INFINITY, f64::min);
            assert!(all_min <= rep.value + 1e-15);
        }
    }

    #[test]
    fn constant_curvature_ricci_l() {
        for l in 1..3 {
            let s = ricci_l_lower(&ModelManifold::sphere(3).unwrap(), 1.0, l).unwrap();
            assert!((s.value - 1.0).abs() < 1e-13);
        }
        assert!(ricci_l_lower(&ModelManifold::sphere(3).unwrap(), 1.0, 3).is_err());
        assert!(ricci_l_lower(&ModelManifold::sphere(3).unwrap(), 1.0, 0).is_err());
    }

    #[test]
    fn volumes() {
        let e3 = ModelManifold::euclidean(3).unwrap();
        assert!((volume_ball(&e3, 1.0).unwrap() - 4.0 * PI / 3.0).abs() < 1e-12);
        let e2 = ModelManifold::euclidean(2).unwrap();
        assert!((volume_ball(&e2, 2.0).unwrap() - 4.0 * PI).abs() < 1e-12);
        // oracle: ∫₀^π sin² = π/2, |S²| = 4π
        let s3 = ModelManifold::sphere(3).unwrap();
        let v = volume_ball(&s3, PI).unwrap();
        assert!((v - 2.0 * PI * PI).abs() < 1e-10 * v);
        assert!(matches!(volume_ball(&kw(), 1.0), Err(Error::UnsupportedKind(_))));
    }

    #[test]
    fn sphere_area_values() {
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn offset_bound_examples() {
        assert_eq!(ball_offset_bound(3.0, 0.0, 1.0, 4).unwrap(), (3.0, 3.0));
        let (lo, hi) = ball_offset_bound(8.0, 2.0, 2.0, 4).unwrap();
        assert!((lo - 2.0).abs() < 1e-14 && (hi - 32.0).abs() < 1e-13);
    }

    #[test]
    fn closure_is_checked() {
        assert!(ModelManifold::rotationally_symmetric(3, Warp::Constant(1.0)).is_err());
        assert!(ModelManifold::doubly_warped(3, Warp::Euclidean, Warp::Constant(1.0)).is_err());
    }

    proptest! {
        #[test]
        fn sectionals_match_finite_differences(r in 0.05f64..3.0, which in 0usize..6) {
            let man = &all_models()[which];
            let a = simple_plane_sectionals(man, r).unwrap();
            let b = finite_difference_sectionals(man, r, 1e-4).unwrap();
            let tol = |x: f64| 1e-6 * x.abs().max(1.0) / r.min(1.0).powi(2);
            prop_assert!((a.k_ra - b.k_ra).abs() < tol(a.k_ra));
            prop_assert!((a.k_ab - b.k_ab).abs() < tol(a.k_ab));
            if let (Some(x), Some(y)) = (a.k_tr, b.k_tr) { prop_assert!((x - y).abs() < tol(x)); }
            if let (Some(x), Some(y)) = (a.k_ta, b.k_ta) { prop_assert!((x - y).abs() < tol(x)); }
        }

        #[test]
        fn ricci_l_monotone_in_l(r in 0.05f64..20.0, which in 0usize..6) {
            let man = &all_models()[which];
            prop_assume!(r < man.domain().1);
            let mut prev = f64::NEG_INFINITY;
            for l in 1..man.dim() {
                let v = ricci_l_lower(man, r, l).unwrap().value;
                prop_assert!(v >= prev - 1e-12 * v.abs().max(1.0));
                prev = v;
            }
        }

        #[test]
        fn euclidean_offset_bracket_contains_direct_volume(d in 0.0f64..1.0, radius in 0.5f64..3.0, m in 2usize..6) {
            // in flat space balls of equal radius have equal volume
            let man = ModelManifold::euclidean(m).unwrap();
            let v = volume_ball(&man, radius).unwrap();
            let (lo, hi) = ball_offset_bound(v, d * radius, radius, m).unwrap();
            prop_assert!(lo <= v && v <= hi);
        }

        #[test]
        fn bishop_gromov_monotone(r1 in 0.2f64..5.0, dr in 0.01f64..5.0) {
            let man = ModelManifold::euclidean(3).unwrap();
            let a = volume_ball(&man, r1).unwrap() / r1.powi(3);
            let b = volume_ball(&man, r1 + dr).unwrap() / (r1 + dr).powi(3);
            prop_assert!(b <= a * (1.0 + 1e-12));
        }
    }
}
