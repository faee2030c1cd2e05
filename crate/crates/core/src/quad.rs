//! Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.
//!
//! Infinite tails are never integrated numerically here; callers close them
//! with an analytic expression.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-14, rel_tol: 1e-12, max_intervals: 2000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = fc.abs() * WGK[7];
    for (j, &x) in XGK.iter().take(7).enumerate() {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for (j, &x) in XGK.iter().take(7).enumerate() {
        let dx = half * x;
        asc += WGK[j] * ((f(center - dx) - mean).abs() + (f(center + dx) - mean).abs());
    }
    let value = kronrod * half;
    let mut error = ((kronrod - gauss) * half).abs();
    let asc = asc * half.abs();
    let abs_sum = abs_sum * half.abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (1.0f64).min((200.0 * error / asc).powf(1.5));
    }
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * abs_sum);
    }
    Segment { a, b, value, error }
}

/// Integrates `f` over `[a, b]` with globally adaptive bisection.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Argument(format!("non-finite interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, intervals: 0 });
    }
    let mut segments = vec![gk15(&f, a, b)];
    loop {
        let total: f64 = segments.iter().map(|s| s.value).sum();
        let err: f64 = segments.iter().map(|s| s.error).sum();
        if !total.is_finite() {
            return Err(Error::Argument("integrand produced a non-finite value".into()));
        }
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if err <= target || segments.len() >= opts.max_intervals {
            return Ok(QuadResult { value: total, error: err, intervals: segments.len() });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, s)| if s.error > acc.1 { (i, s.error) } else { acc });
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval exhausted at machine resolution
            segments.push(seg);
            let total: f64 = segments.iter().map(|s| s.value).sum();
            let err: f64 = segments.iter().map(|s| s.error).sum();
            return Ok(QuadResult { value: total, error: err, intervals: segments.len() });
        }
        segments.push(gk15(&f, seg.a, mid));
        segments.push(gk15(&f, mid, seg.b));
    }
}

/// Convenience wrapper using default tolerances, returning the value only.
pub fn quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    integrate(f, a, b, QuadOptions::default()).map(|r| r.value)
}

/// Cumulative integral of `f` at the grid nodes, starting from zero at `grid[0]`.
///
/// Each cell is integrated adaptively, so the result is exact to quadrature
/// tolerance rather than to the grid's trapezoid order.
pub fn cumulative<F: Fn(f64) -> f64>(f: F, grid: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in grid.windows(2) {
        acc += quad(&f, w[0], w[1])?;
        out.push(acc);
    }
    Ok(out)
}

/// Cumulative trapezoid rule over sampled values.
pub fn cumulative_trapezoid(values: &[f64], grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..grid.len().min(values.len()) {
        acc += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = quad(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn sin_squared_over_period() {
        let v = quad(|x| x.sin().powi(2), 0.0, std::f64::consts::PI).unwrap();
        assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-13);
    }

    #[test]
    fn endpoint_sqrt_singularity() {
        let v = quad(|x| x.sqrt(), 0.0, 1.0).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn cumulative_matches_antiderivative() {
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.1).collect();
        let c = cumulative(|x| x.exp(), &grid).unwrap();
        for (x, v) in grid.iter().zip(&c) {
            assert!((v - (x.exp() - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_infinite_bounds() {
        assert!(quad(|x| x, 0.0, f64::INFINITY).is_err());
    }
}
