//! Warping functions: closed forms, the counterexample family and quintic
//! Hermite pieces. Every warp evaluates to a [`Jet`] of value and two
//! derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Value with first and second derivative at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub fn new(value: f64, d1: f64, d2: f64) -> Self {
        Self { value, d1, d2 }
    }
}

/// Quintic polynomial on `[x0, x1]` in the local variable `s = (x - x0)/h`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuinticPiece {
    pub x0: f64,
    pub x1: f64,
    coeffs: [f64; 6],
}

impl QuinticPiece {
    /// Quintic Hermite interpolant matching value, first and second derivative
    /// at both endpoints.
    pub fn hermite(x0: f64, left: Jet, x1: f64, right: Jet) -> Result<Self> {
        if !(x1 > x0) {
            return Err(Error::Argument(format!("empty Hermite interval [{x0}, {x1}]")));
        }
        let h = x1 - x0;
        let a0 = left.value;
        let a1 = h * left.d1;
        let a2 = 0.5 * h * h * left.d2;
        let big_a = right.value - a0 - a1 - a2;
        let big_b = h * right.d1 - a1 - 2.0 * a2;
        let big_c = h * h * right.d2 - 2.0 * a2;
        let a3 = 10.0 * big_a - 4.0 * big_b + 0.5 * big_c;
        let a4 = -15.0 * big_a + 7.0 * big_b - big_c;
        let a5 = 6.0 * big_a - 3.0 * big_b + 0.5 * big_c;
        Ok(Self { x0, x1, coeffs: [a0, a1, a2, a3, a4, a5] })
    }

    fn h(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn eval(&self, x: f64) -> Jet {
        let h = self.h();
        let s = (x - self.x0) / h;
        let c = &self.coeffs;
        let v = c[0] + s * (c[1] + s * (c[2] + s * (c[3] + s * (c[4] + s * c[5]))));
        let d = c[1] + s * (2.0 * c[2] + s * (3.0 * c[3] + s * (4.0 * c[4] + s * 5.0 * c[5])));
        let dd = 2.0 * c[2] + s * (6.0 * c[3] + s * (12.0 * c[4] + s * 20.0 * c[5]));
        Jet::new(v, d / h, dd / (h * h))
    }

    /// `∫_{x0}^{x} p`.
    pub fn integral(&self, x: f64) -> f64 {
        let h = self.h();
        let s = (x - self.x0) / h;
        let mut acc = 0.0;
        let mut sp = s;
        for (k, c) in self.coeffs.iter().enumerate() {
            acc += c * sp / (k as f64 + 1.0);
            sp *= s;
        }
        h * acc
    }

    /// `∫_{x0}^{x} ∫_{x0}^{y} p`.
    pub fn double_integral(&self, x: f64) -> f64 {
        let h = self.h();
        let s = (x - self.x0) / h;
        let mut acc = 0.0;
        let mut sp = s * s;
        for (k, c) in self.coeffs.iter().enumerate() {
            let kf = k as f64;
            acc += c * sp / ((kf + 1.0) * (kf + 2.0));
            sp *= s;
        }
        h * h * acc
    }

    /// Minimum of the value over `samples` equispaced points (endpoints included).
    pub fn sampled_min(&self, samples: usize) -> f64 {
        let n = samples.max(2);
        (0..n)
            .map(|i| self.eval(self.x0 + self.h() * i as f64 / (n - 1) as f64).value)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Samples used for the positivity post-check on smoothed pieces.
pub const POSITIVITY_SAMPLES: usize = 10_000;

/// The building blocks ζ₁, ζ₂ and η of the doubly-warped counterexample for
/// a decay exponent `alpha ∈ (0,1)`.
///
/// ζ₁ is `t` on `[0,1]`, `t^{-1-α}` on `[2,∞)` and a quintic Hermite bridge
/// in between. ζ₂ is its tail integral and η is built from ∫ζ₂. All pieces are
/// integrated in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct KwProfile {
    pub alpha: f64,
    bridge: QuinticPiece,
    zeta2_origin: f64,
    z1_at_2: f64,
    z2_at_1: f64,
    z2_at_2: f64,
}

impl KwProfile {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Argument(format!("alpha = {alpha} must lie in (0,1)")));
        }
        let left = Jet::new(1.0, 1.0, 0.0);
        let right = Jet::new(
            2f64.powf(-1.0 - alpha),
            -(1.0 + alpha) * 2f64.powf(-2.0 - alpha),
            (1.0 + alpha) * (2.0 + alpha) * 2f64.powf(-3.0 - alpha),
        );
        let bridge = QuinticPiece::hermite(1.0, left, 2.0, right)?;
        let min = bridge.sampled_min(POSITIVITY_SAMPLES);
        if !(min > 0.0) {
            return Err(Error::Construction(format!(
                "zeta_1 smoothing on [1,2] loses positivity (min {min:e})"
            )));
        }
        let z1_at_2 = 0.5 + bridge.integral(2.0);
        let zeta2_origin = z1_at_2 + 2f64.powf(-alpha) / alpha;
        let z2_at_1 = zeta2_origin - 1.0 / 6.0;
        let z2_at_2 = z2_at_1 + (zeta2_origin - 0.5) - bridge.double_integral(2.0);
        Ok(Self { alpha, bridge, zeta2_origin, z1_at_2, z2_at_1, z2_at_2 })
    }

    /// ζ₂(0) = ∫₀^∞ ζ₁.
    pub fn zeta2_origin(&self) -> f64 {
        self.zeta2_origin
    }

    pub fn zeta1(&self, t: f64) -> Jet {
        let a = self.alpha;
        if t <= 1.0 {
            Jet::new(t, 1.0, 0.0)
        } else if t < 2.0 {
            self.bridge.eval(t)
        } else {
            Jet::new(
                t.powf(-1.0 - a),
                -(1.0 + a) * t.powf(-2.0 - a),
                (1.0 + a) * (2.0 + a) * t.powf(-3.0 - a),
            )
        }
    }

    /// `∫₀^t ζ₁`.
    fn z1(&self, t: f64) -> f64 {
        let a = self.alpha;
        if t <= 1.0 {
            0.5 * t * t
        } else if t < 2.0 {
            0.5 + self.bridge.integral(t)
        } else {
            self.z1_at_2 + (2f64.powf(-a) - t.powf(-a)) / a
        }
    }

    pub fn zeta2(&self, t: f64) -> Jet {
        let z1 = self.zeta1(t);
        let value = if t >= 2.0 { t.powf(-self.alpha) / self.alpha } else { self.zeta2_origin - self.z1(t) };
        Jet::new(value, -z1.value, -z1.d1)
    }

    /// `∫₀^r ζ₂`.
    fn z2(&self, r: f64) -> f64 {
        let a = self.alpha;
        let z0 = self.zeta2_origin;
        if r <= 1.0 {
            z0 * r - r * r * r / 6.0
        } else if r < 2.0 {
            self.z2_at_1 + (z0 - 0.5) * (r - 1.0) - self.bridge.double_integral(r)
        } else {
            self.z2_at_2 + (r.powf(1.0 - a) - 2f64.powf(1.0 - a)) / (a * (1.0 - a))
        }
    }

    pub fn eta(&self, r: f64) -> Jet {
        let z0 = self.zeta2_origin;
        let zeta2 = self.zeta2(r).value;
        let zeta1 = self.zeta1(r).value;
        Jet::new(0.5 * r + self.z2(r) / (2.0 * z0), 0.5 + zeta2 / (2.0 * z0), -zeta1 / (2.0 * z0))
    }
}

/// Warping function with C² piecewise-quintic representation between knots.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseWarp {
    knots: Vec<f64>,
    pieces: Vec<QuinticPiece>,
}

impl PiecewiseWarp {
    /// Knots are `(r, value, d1, d2)` with strictly increasing `r`.
    pub fn new(knots: &[[f64; 4]]) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Argument("piecewise warp needs at least two knots".into()));
        }
        let mut pieces = Vec::with_capacity(knots.len() - 1);
        for w in knots.windows(2) {
            let (l, r) = (w[0], w[1]);
            pieces.push(QuinticPiece::hermite(l[0], Jet::new(l[1], l[2], l[3]), r[0], Jet::new(r[1], r[2], r[3]))?);
        }
        for (i, p) in pieces.iter().enumerate() {
            let h = p.x1 - p.x0;
            let n = POSITIVITY_SAMPLES;
            // the open domain excludes the first knot, where a pole-closing warp vanishes
            let start = if i == 0 { 1 } else { 0 };
            for k in start..n {
                let v = p.eval(p.x0 + h * k as f64 / (n - 1) as f64).value;
                if !(v > 0.0) {
                    return Err(Error::Construction(format!(
                        "piecewise warp not positive on ({}, {}]",
                        p.x0, p.x1
                    )));
                }
            }
        }
        Ok(Self { knots: knots.iter().map(|k| k[0]).collect(), pieces })
    }

    fn eval(&self, r: f64) -> Jet {
        let idx = match self.knots.binary_search_by(|k| k.partial_cmp(&r).unwrap()) {
            Ok(i) => i.min(self.pieces.len() - 1),
            Err(i) => i.saturating_sub(1).min(self.pieces.len() - 1),
        };
        self.pieces[idx].eval(r)
    }

    fn domain(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }
}

/// A positive warping function on an interval.
#[derive(Debug, Clone, PartialEq)]
pub enum Warp {
    /// η(r) = r.
    Euclidean,
    /// η(r) = sin r on [0, π].
    Sphere,
    /// η(r) = sinh r.
    Hyperbolic,
    /// Constant warp, e.g. a flat cylinder.
    Constant(f64),
    KwZeta1(KwProfile),
    KwZeta2(KwProfile),
    KwEta(KwProfile),
    /// f(r) = (b + r²)^exponent + c.
    KwF { b: f64, c: f64, exponent: f64 },
    Piecewise(PiecewiseWarp),
}

impl Warp {
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Warp::Sphere => (0.0, std::f64::consts::PI),
            Warp::Piecewise(p) => p.domain(),
            _ => (0.0, f64::INFINITY),
        }
    }

    /// Value and two derivatives at `r`.
    pub fn eval(&self, r: f64) -> Result<Jet> {
        let (lo, hi) = self.domain();
        if !(r >= lo && r <= hi) {
            return Err(Error::Domain { r, lo, hi });
        }
        Ok(match self {
            Warp::Euclidean => Jet::new(r, 1.0, 0.0),
            Warp::Sphere => Jet::new(r.sin(), r.cos(), -r.sin()),
            Warp::Hyperbolic => Jet::new(r.sinh(), r.cosh(), r.sinh()),
            Warp::Constant(c) => Jet::new(*c, 0.0, 0.0),
            Warp::KwZeta1(p) => p.zeta1(r),
            Warp::KwZeta2(p) => p.zeta2(r),
            Warp::KwEta(p) => p.eta(r),
            Warp::KwF { b, c, exponent } => {
                let p = *exponent;
                let base = b + r * r;
                let pow = base.powf(p);
                Jet::new(
                    pow + c,
                    2.0 * p * r * pow / base,
                    2.0 * p * pow / base + 4.0 * p * (p - 1.0) * r * r * pow / (base * base),
                )
            }
            Warp::Piecewise(p) => p.eval(r),
        })
    }

    pub fn value(&self, r: f64) -> Result<f64> {
        self.eval(r).map(|j| j.value)
    }
}

/// Warp evaluation as a free function.
pub fn warp_eval(w: &Warp, r: f64) -> Result<Jet> {
    w.eval(r)
}

/// Finite-difference consistency of a warp at `r` with step `h`.
///
/// Returns `(|fd1 - d1|, |fd2 - d2|)` where both differences are central
/// differences of the value. Near the domain boundary the stencil is shifted
/// inward.
pub fn finite_difference_defect(w: &Warp, r: f64, h: f64) -> Result<(f64, f64)> {
    let (lo, hi) = w.domain();
    let c = r.clamp(lo + h, hi - h);
    let jet = w.eval(c)?;
    let fp = w.value(c + h)?;
    let f0 = jet.value;
    let fm = w.value(c - h)?;
    let d1 = (fp - fm) / (2.0 * h);
    let d2 = (fp - 2.0 * f0 + fm) / (h * h);
    Ok(((d1 - jet.d1).abs(), (d2 - jet.d2).abs()))
}
