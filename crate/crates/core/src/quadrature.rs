//! One-dimensional quadrature: Gauss–Legendre rules, adaptive Gauss–Kronrod
//! integration on finite intervals and half lines, and Cauchy principal
//! values by singularity subtraction.
//!
//! Every routine sums in a fixed order so repeated calls are bit-identical.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Scalar types the adaptive integrators accept.
pub trait QuadValue: Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn norm(self) -> f64;
}

impl QuadValue for f64 {
    fn norm(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn norm(self) -> f64 {
        Complex64::norm(self)
    }
}

/// Tolerances shared by the adaptive routines.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadSettings {
    /// Relative accuracy the adaptive loop aims for.
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Relative error estimate above which the result is rejected.
    pub fail_rel: f64,
    /// Maximum number of subintervals per adaptive call.
    pub max_intervals: usize,
    /// Every finite interval is first cut into this many equal pieces.
    pub initial_splits: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings {
            rel_tol: 1e-12,
            abs_tol: 1e-300,
            fail_rel: 1e-9,
            max_intervals: 4000,
            initial_splits: 1,
        }
    }
}

impl QuadSettings {
    /// Same tolerances with twice the initial subdivision.
    pub fn refined(&self) -> Self {
        QuadSettings {
            initial_splits: self.initial_splits * 2,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    /// Estimate of the integral of |f|; used for tail decisions.
    pub l1: f64,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// 15-point Kronrod rule with the embedded 7-point Gauss estimate.
fn qk15<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> QuadResult<T> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = fc.norm() * WGK[7];
    let mut fv1 = [T::default(); 7];
    let mut fv2 = [T::default(); 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk = resk + (f1 + f2) * WGK[j];
        resabs += WGK[j] * (f1.norm() + f2.norm());
        if j % 2 == 1 {
            resg = resg + (f1 + f2) * WG[j / 2];
        }
    }
    let mean = resk * 0.5;
    let mut resasc = WGK[7] * (fc - mean).norm();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - mean).norm() + (fv2[j] - mean).norm());
    }
    let value = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).norm();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    QuadResult {
        value,
        error: err,
        l1: resabs,
    }
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// `breaks` are interior points (inside `(a, b)`) where `f` may be
/// non-smooth; they always become interval endpoints.
pub fn integrate_with_breaks<T, F>(mut f: F, a: f64, b: f64, breaks: &[f64], s: &QuadSettings) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("integration bounds must be finite, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult {
            value: T::default(),
            error: 0.0,
            l1: 0.0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut pts = vec![lo];
    let mut interior: Vec<f64> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
    interior.sort_by(|x, y| x.partial_cmp(y).unwrap());
    interior.dedup();
    pts.extend(interior);
    pts.push(hi);

    let splits = s.initial_splits.max(1);
    let mut intervals: Vec<(f64, f64, QuadResult<T>)> = Vec::new();
    for w in pts.windows(2) {
        let step = (w[1] - w[0]) / splits as f64;
        for k in 0..splits {
            let x0 = w[0] + step * k as f64;
            let x1 = if k + 1 == splits { w[1] } else { w[0] + step * (k + 1) as f64 };
            let r = qk15(&mut f, x0, x1);
            intervals.push((x0, x1, r));
        }
    }

    loop {
        let mut total = T::default();
        let mut err = 0.0;
        let mut l1 = 0.0;
        for iv in &intervals {
            total = total + iv.2.value;
            err += iv.2.error;
            l1 += iv.2.l1;
        }
        // cancelling integrands cannot beat round-off relative to ∫|f|
        let target = s.abs_tol.max(s.rel_tol * total.norm()).max(64.0 * f64::EPSILON * l1);
        if err <= target || intervals.len() >= s.max_intervals {
            let rel = if total.norm() > 0.0 { err / total.norm() } else { err };
            if err > target && err > s.abs_tol.max(s.fail_rel * total.norm().max(1e-3 * l1)) {
                return Err(Error::NonConvergence {
                    what: format!("adaptive Gauss-Kronrod on [{lo}, {hi}]"),
                    estimate: rel,
                    tolerance: s.fail_rel,
                });
            }
            return Ok(QuadResult {
                value: total * sign,
                error: err,
                l1,
            });
        }
        // bisect the interval with the largest error estimate
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, be), (i, iv)| if iv.2.error > be { (i, iv.2.error) } else { (bi, be) });
        let (x0, x1, _) = intervals[idx];
        let mid = 0.5 * (x0 + x1);
        if mid <= x0 || mid >= x1 {
            // interval can no longer be split in floating point
            intervals[idx].2.error = 0.0;
            continue;
        }
        let left = qk15(&mut f, x0, mid);
        let right = qk15(&mut f, mid, x1);
        intervals[idx] = (x0, mid, left);
        intervals.push((mid, x1, right));
    }
}

pub fn integrate<T, F>(f: F, a: f64, b: f64, s: &QuadSettings) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    integrate_with_breaks(f, a, b, &[], s)
}

/// Integral over `[a, ∞)` using geometrically growing panels
/// `[a + scale(2^k - 1), a + scale(2^{k+1} - 1)]`, stopped once two
/// consecutive decaying panels carry negligible absolute mass.
pub fn integrate_to_infinity<T, F>(mut f: F, a: f64, scale: f64, breaks: &[f64], s: &QuadSettings) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let mut total = T::default();
    let mut err = 0.0;
    let mut l1 = 0.0;
    let mut prev_l1 = f64::INFINITY;
    let mut quiet = 0;
    for k in 0..80 {
        let x0 = a + scale * ((1u64 << k) as f64 - 1.0);
        let x1 = a + scale * ((1u64 << (k + 1)) as f64 - 1.0);
        let r = integrate_with_breaks(&mut f, x0, x1, breaks, s)?;
        total = total + r.value;
        err += r.error;
        l1 += r.l1;
        let small = r.l1 <= 1e-3 * s.rel_tol * total.norm().max(l1 * 1e-3) || r.l1 <= s.abs_tol;
        if small && r.l1 <= prev_l1 {
            quiet += 1;
            if quiet >= 2 {
                return Ok(QuadResult { value: total, error: err + r.l1, l1 });
            }
        } else {
            quiet = 0;
        }
        prev_l1 = r.l1;
    }
    Err(Error::NonConvergence {
        what: format!("half-line integral from {a}"),
        estimate: prev_l1 / total.norm().max(f64::MIN_POSITIVE),
        tolerance: s.fail_rel,
    })
}

/// Integral over the whole real line, split at `breaks` (which must contain
/// every non-smooth point of `f`). `scale` sets the first tail panel width.
pub fn integrate_real_line<T, F>(mut f: F, breaks: &[f64], scale: f64, s: &QuadSettings) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let mut b: Vec<f64> = breaks.to_vec();
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.dedup();
    let (lo, hi) = match (b.first(), b.last()) {
        (Some(&l), Some(&h)) => (l, h),
        _ => (0.0, 0.0),
    };
    let mid = integrate_with_breaks(&mut f, lo, hi, &b, s)?;
    let right = integrate_to_infinity(&mut f, hi, scale, &[], s)?;
    let left = integrate_to_infinity(|x: f64| f(-x), -lo, scale, &[], s)?;
    Ok(QuadResult {
        value: mid.value + right.value + left.value,
        error: mid.error + right.error + left.error,
        l1: mid.l1 + right.l1 + left.l1,
    })
}

/// Cauchy principal value of `∫_{-∞}^{∞} w(u)/(u - x0) du`.
///
/// Near the pole the smooth remainder `(w(u) - w(x0))/(u - x0)` is
/// integrated over the symmetric window `[x0 - d, x0 + d]`, where the
/// logarithmic counter-term vanishes identically; the rest of the line is
/// regular. `breaks` lists non-smooth points of `w`.
pub fn principal_value_line<F>(mut w: F, x0: f64, half_width: f64, breaks: &[f64], scale: f64, s: &QuadSettings) -> Result<QuadResult<f64>>
where
    F: FnMut(f64) -> f64,
{
    if !(half_width > 0.0) {
        return Err(Error::Domain("principal value window must have positive width".into()));
    }
    let w0 = w(x0);
    if !w0.is_finite() {
        return Err(Error::Numerical(format!("weight is not finite at the pole x0 = {x0}")));
    }
    let lo = x0 - half_width;
    let hi = x0 + half_width;
    let inner_breaks: Vec<f64> = breaks.iter().copied().chain(std::iter::once(x0)).collect();
    let core = integrate_with_breaks(
        |u: f64| {
            let d = u - x0;
            if d == 0.0 {
                0.0
            } else {
                (w(u) - w0) / d
            }
        },
        lo,
        hi,
        &inner_breaks,
        s,
    )?;
    let mut outer_breaks: Vec<f64> = breaks.iter().copied().filter(|&x| x < lo || x > hi).collect();
    outer_breaks.push(lo);
    outer_breaks.push(hi);
    outer_breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // regular part: everything outside the window
    let first = *outer_breaks.first().unwrap();
    let last = *outer_breaks.last().unwrap();
    let mut value = core.value;
    let mut error = core.error;
    let mut l1 = core.l1;
    let regular = |u: f64, w: &mut F| w(u) / (u - x0);
    // segments strictly outside the window between consecutive breaks
    for pair in outer_breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a >= lo && b <= hi {
            continue;
        }
        let r = integrate(|u| regular(u, &mut w), a, b, s)?;
        value += r.value;
        error += r.error;
        l1 += r.l1;
    }
    let right = integrate_to_infinity(|u| regular(u, &mut w), last, scale, &[], s)?;
    let left = integrate_to_infinity(|v| regular(-v, &mut w), -first, scale, &[], s)?;
    value += right.value + left.value;
    error += right.error + left.error;
    l1 += right.l1 + left.l1;
    Ok(QuadResult { value, error, l1 })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Newton iteration on the
/// three-term recurrence), nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            x[0] = 0.0;
            w[0] = 2.0;
            break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite Gauss–Legendre rule with panels no longer than `max_panel`.
pub fn composite_gauss<T, F>(mut f: F, a: f64, b: f64, max_panel: f64, order: usize) -> T
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let (x, w) = gauss_legendre(order);
    let n_panels = (((b - a) / max_panel).ceil() as usize).max(1);
    let h = (b - a) / n_panels as f64;
    let mut total = T::default();
    for p in 0..n_panels {
        let c = a + h * (p as f64 + 0.5);
        let mut part = T::default();
        for (xi, wi) in x.iter().zip(&w) {
            part = part + f(c + 0.5 * h * xi) * *wi;
        }
        total = total + part * (0.5 * h);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 10, 20] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg} q={q} exact={exact}");
            }
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let r = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, &QuadSettings::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn half_line_power_and_exponential_tails() {
        let s = QuadSettings::default();
        let r = integrate_to_infinity(|x: f64| (-x).exp(), 0.0, 1.0, &[], &s).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        // ∫_1^∞ x^{-3} dx = 1/2
        let r = integrate_to_infinity(|x: f64| x.powi(-3), 1.0, 1.0, &[], &s).unwrap();
        assert!((r.value - 0.5).abs() < 1e-11, "{}", r.value);
    }

    #[test]
    fn principal_value_of_lorentzian_weight() {
        // PV ∫ 1/(1+u²) /(u - x0) du = -π x0/(1+x0²)
        let s = QuadSettings::default();
        for x0 in [-2.0, -0.3, 0.0, 0.7, 3.0] {
            let r = principal_value_line(|u| 1.0 / (1.0 + u * u), x0, 1.0, &[0.0], 1.0, &s).unwrap();
            let exact = -PI * x0 / (1.0 + x0 * x0);
            assert!((r.value - exact).abs() < 1e-10, "x0={x0}: {} vs {exact}", r.value);
        }
    }

    #[test]
    fn principal_value_of_gaussian_matches_dawson() {
        // PV ∫ e^{-u²}/(u - x) du = -2√π D(x), D Dawson's function; D(1) = 0.5380795069127684
        let s = QuadSettings::default();
        let r = principal_value_line(|u| (-u * u).exp(), 1.0, 0.5, &[], 1.0, &s).unwrap();
        let exact = -2.0 * PI.sqrt() * 0.538_079_506_912_768_4;
        assert!((r.value - exact).abs() < 1e-11, "{} vs {exact}", r.value);
    }

    #[test]
    fn composite_rule_resolves_oscillations() {
        let t = 40.0;
        let v: f64 = composite_gauss(|x: f64| (t * x).cos(), 0.0, 1.0, PI / (4.0 * t), 12);
        assert!((v - (t).sin() / t).abs() < 1e-13);
    }

    #[test]
    fn complex_integrand() {
        let r = integrate(|x: f64| Complex64::new(0.0, x).exp(), 0.0, PI, &QuadSettings::default()).unwrap();
        assert!((r.value - Complex64::new(0.0, 2.0)).norm() < 1e-12);
    }
}
