//! Expectations in the thermal equilibrium state of the free bosonic
//! reservoir: two-point functions, Wick's theorem, Weyl characteristic
//! function, the gluing map `τ_β`, and the reservoir autocorrelation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{envelope, FormFactor, RadialProfile};
use crate::quadrature::{integrate, integrate_to_infinity, QuadSettings};
use crate::sphere::Angular;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionClass {
    /// Observable test functions.
    Obs,
    /// Test functions allowed inside correlation (Kraus) operators.
    Cor,
}

/// Test function `f(k) = c · |k|^p/(1+|k|^{p+q}) · h(|k|) · A(Σ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub class: FunctionClass,
    pub p: f64,
    pub q: f64,
    pub profile: RadialProfile,
    #[serde(default)]
    pub angular: Angular,
    #[serde(default = "unit_amplitude")]
    pub amplitude: Complex64,
}

fn unit_amplitude() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

impl TestFunction {
    pub fn new(class: FunctionClass, p: f64, q: f64, profile: RadialProfile) -> Result<Self> {
        let f = TestFunction { class, p, q, profile, angular: Angular::ISOTROPIC, amplitude: unit_amplitude() };
        f.validate()?;
        Ok(f)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        TestFunction { amplitude: self.amplitude * c, ..self.clone() }
    }

    pub fn with_angular(mut self, angular: Angular) -> Self {
        self.angular = angular;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude == ZERO
    }

    pub fn validate(&self) -> Result<()> {
        let p_ok = (self.p + 0.5).abs() < 1e-12 || (self.p - 0.5).abs() < 1e-12 || self.p > 1.0;
        if !p_ok {
            return Err(Error::Validation(format!(
                "test function infrared exponent p = {} must be -1/2, 1/2 or > 1",
                self.p
            )));
        }
        if !(self.q > 1.5) {
            return Err(Error::Validation(format!("test function ultraviolet exponent q = {} must exceed 3/2", self.q)));
        }
        if !(self.amplitude.re.is_finite() && self.amplitude.im.is_finite()) {
            return Err(Error::Validation("test function amplitude must be finite".into()));
        }
        self.profile.validate()?;
        if self.class == FunctionClass::Cor && self.profile.gauss_rate == 0.0 && self.profile.exp_rate == 0.0 {
            return Err(Error::Validation("correlation-class test functions need exponential ultraviolet decay".into()));
        }
        Ok(())
    }

    /// Checks `e^{β|k|} f ∈ L²` for correlation-class functions.
    pub fn check_cor(&self, beta: f64) -> Result<()> {
        if self.class != FunctionClass::Cor {
            return Err(Error::Validation("test function is not of correlation class".into()));
        }
        if !self.profile.decays_faster_than(beta) {
            return Err(Error::Validation(format!(
                "correlation-class profile decays at rate {} which does not beat e^(beta k) with beta = {beta}",
                self.profile.exp_rate
            )));
        }
        Ok(())
    }

    /// Radial part without amplitude and angular factor.
    pub fn radial_shape(&self, k: f64) -> f64 {
        envelope(k, self.p, self.q) * self.profile.value(k)
    }

    pub fn radial(&self, k: f64) -> Complex64 {
        self.amplitude * self.radial_shape(k)
    }

    pub fn eval(&self, k: f64, sigma: [f64; 3]) -> Complex64 {
        self.radial(k) * self.angular.at(sigma)
    }

    /// The coupling form factor viewed as a (real, unit-amplitude) test function.
    pub fn from_form_factor(ff: &FormFactor, class: FunctionClass) -> Self {
        TestFunction {
            class,
            p: ff.p,
            q: ff.q,
            profile: ff.profile.clone(),
            angular: ff.angular,
            amplitude: unit_amplitude(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ladder {
    Create,
    Annihilate,
}

/// Ordered product of creation and annihilation operators times a scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialWord<V> {
    pub factors: Vec<(Ladder, V)>,
    pub coefficient: Complex64,
}

impl<V> PolynomialWord<V> {
    pub fn new(factors: Vec<(Ladder, V)>) -> Self {
        PolynomialWord { factors, coefficient: Complex64::new(1.0, 0.0) }
    }
}

/// One-particle space carrying a thermal occupation operator `n̄`.
pub trait OneParticleSpace {
    type Vector;

    /// `⟨g, f⟩`, antilinear in `g`.
    fn inner(&self, g: &Self::Vector, f: &Self::Vector) -> Result<Complex64>;

    /// `⟨g, n̄ f⟩` with `n̄ = (e^{β|k|} - 1)^{-1}`.
    fn thermal_inner(&self, g: &Self::Vector, f: &Self::Vector) -> Result<Complex64>;
}

pub fn occupation(beta: f64, omega: f64) -> f64 {
    1.0 / (beta * omega).exp_m1()
}

/// `coth(βω/2) = 1 + 2n̄(ω)`.
pub fn coth_half(beta: f64, omega: f64) -> f64 {
    1.0 + 2.0 * occupation(beta, omega)
}

/// Test functions on `ℝ³` with the radial integrals done by adaptive quadrature.
#[derive(Debug, Clone)]
pub struct Continuum {
    pub beta: f64,
    pub quad: QuadSettings,
}

impl Continuum {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Domain(format!("inverse temperature must be positive and finite, got {beta}")));
        }
        Ok(Continuum { beta, quad: QuadSettings::default() })
    }

    /// `∫_0^∞ k² f_r(k) g_r(k) w(k) dk` for the real radial shapes.
    fn radial_integral<W: Fn(f64) -> f64>(&self, f: &TestFunction, g: &TestFunction, weight: W) -> Result<f64> {
        let integrand = |k: f64| {
            if k == 0.0 {
                return 0.0;
            }
            k * k * f.radial_shape(k) * g.radial_shape(k) * weight(k)
        };
        Ok(integrate_to_infinity(integrand, 0.0, 1.0, &[], &self.quad)?.value)
    }

    fn pair<W: Fn(f64) -> f64>(&self, g: &TestFunction, f: &TestFunction, weight: W) -> Result<Complex64> {
        if f.is_zero() || g.is_zero() {
            return Ok(ZERO);
        }
        let ang = f.angular.overlap(&g.angular);
        let r = self.radial_integral(f, g, weight)?;
        Ok(g.amplitude.conj() * f.amplitude * (ang * r))
    }

    /// `⟨f, coth(β|k|/2) f⟩`.
    pub fn coth_form(&self, f: &TestFunction) -> Result<f64> {
        let beta = self.beta;
        Ok(self.pair(f, f, |k| coth_half(beta, k))?.re)
    }
}

impl OneParticleSpace for Continuum {
    type Vector = TestFunction;

    fn inner(&self, g: &TestFunction, f: &TestFunction) -> Result<Complex64> {
        self.pair(g, f, |_| 1.0)
    }

    fn thermal_inner(&self, g: &TestFunction, f: &TestFunction) -> Result<Complex64> {
        let beta = self.beta;
        self.pair(g, f, |k| occupation(beta, k))
    }
}

/// Finitely many modes with frequencies `ω_k`; vectors are coefficient lists.
#[derive(Debug, Clone)]
pub struct DiscreteModes {
    pub freqs: Vec<f64>,
    pub beta: f64,
}

impl DiscreteModes {
    fn check(&self, v: &[Complex64]) -> Result<()> {
        if v.len() != self.freqs.len() {
            return Err(Error::Validation(format!("vector has {} components, space has {} modes", v.len(), self.freqs.len())));
        }
        Ok(())
    }

    pub fn coth_form(&self, f: &[Complex64]) -> Result<f64> {
        self.check(f)?;
        Ok(f.iter().zip(&self.freqs).map(|(c, &w)| c.norm_sqr() * coth_half(self.beta, w)).sum())
    }
}

impl OneParticleSpace for DiscreteModes {
    type Vector = Vec<Complex64>;

    fn inner(&self, g: &Vec<Complex64>, f: &Vec<Complex64>) -> Result<Complex64> {
        self.check(f)?;
        self.check(g)?;
        Ok(g.iter().zip(f).map(|(a, b)| a.conj() * b).sum())
    }

    fn thermal_inner(&self, g: &Vec<Complex64>, f: &Vec<Complex64>) -> Result<Complex64> {
        self.check(f)?;
        self.check(g)?;
        Ok(g.iter().zip(f).zip(&self.freqs).map(|((a, b), &w)| a.conj() * b * occupation(self.beta, w)).sum())
    }
}

/// `ω_{R,β}(a*(f) a(g)) = ⟨g, n̄ f⟩`.
pub fn two_point(f: &TestFunction, g: &TestFunction, beta: f64) -> Result<Complex64> {
    Continuum::new(beta)?.thermal_inner(g, f)
}

pub const DEFAULT_MAX_WORD_LEN: usize = 12;

/// Contraction of an ordered pair `(earlier, later)`.
fn contraction<S: OneParticleSpace>(space: &S, a: &(Ladder, S::Vector), b: &(Ladder, S::Vector)) -> Result<Complex64> {
    match (a.0, b.0) {
        // ⟨a*(f) a(g)⟩ = ⟨g, n̄ f⟩
        (Ladder::Create, Ladder::Annihilate) => space.thermal_inner(&b.1, &a.1),
        // ⟨a(g) a*(f)⟩ = ⟨g, (1 + n̄) f⟩
        (Ladder::Annihilate, Ladder::Create) => Ok(space.inner(&a.1, &b.1)? + space.thermal_inner(&a.1, &b.1)?),
        _ => Ok(ZERO),
    }
}

/// Wick's theorem for the gauge-invariant quasi-free thermal state.
pub fn wick_expectation<S: OneParticleSpace>(space: &S, word: &PolynomialWord<S::Vector>, max_len: usize) -> Result<Complex64> {
    let n = word.factors.len();
    if n > max_len {
        return Err(Error::Complexity { len: n, max: max_len });
    }
    let creators = word.factors.iter().filter(|f| f.0 == Ladder::Create).count();
    if n % 2 == 1 || 2 * creators != n {
        return Ok(ZERO);
    }
    if n == 0 {
        return Ok(word.coefficient);
    }
    let mut table = vec![vec![ZERO; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            table[i][j] = contraction(space, &word.factors[i], &word.factors[j])?;
        }
    }
    let kinds: Vec<Ladder> = word.factors.iter().map(|f| f.0).collect();
    let mut used = vec![false; n];
    let total = sum_pairings(&kinds, &table, &mut used);
    Ok(word.coefficient * total)
}

fn sum_pairings(kinds: &[Ladder], table: &[Vec<Complex64>], used: &mut [bool]) -> Complex64 {
    let Some(i) = used.iter().position(|u| !u) else {
        return Complex64::new(1.0, 0.0);
    };
    used[i] = true;
    let mut acc = ZERO;
    for j in (i + 1)..kinds.len() {
        if used[j] || kinds[i] == kinds[j] {
            continue;
        }
        used[j] = true;
        let rest = sum_pairings(kinds, table, used);
        acc += table[i][j] * rest;
        used[j] = false;
    }
    used[i] = false;
    acc
}

/// Number of pairings with one creator and one annihilator per pair.
pub fn count_pairings(kinds: &[Ladder]) -> usize {
    fn go(kinds: &[Ladder], used: &mut [bool]) -> usize {
        let Some(i) = used.iter().position(|u| !u) else {
            return 1;
        };
        used[i] = true;
        let mut c = 0;
        for j in (i + 1)..kinds.len() {
            if !used[j] && kinds[i] != kinds[j] {
                used[j] = true;
                c += go(kinds, used);
                used[j] = false;
            }
        }
        used[i] = false;
        c
    }
    if kinds.len() % 2 == 1 {
        return 0;
    }
    go(kinds, &mut vec![false; kinds.len()])
}

/// `ω_{R,β}(W(f)) = exp(-¼⟨f, coth(β|k|/2) f⟩)`.
pub fn weyl_expectation(f: &TestFunction, beta: f64) -> Result<f64> {
    if f.is_zero() {
        return Ok(1.0);
    }
    Ok((-0.25 * Continuum::new(beta)?.coth_form(f)?).exp())
}

/// Weyl expectation on finitely many modes, `exp(-¼ Σ |f_k|² coth(βω_k/2))`.
pub fn weyl_expectation_discrete(modes: &DiscreteModes, f: &[Complex64]) -> Result<f64> {
    Ok((-0.25 * modes.coth_form(f)?).exp())
}

/// `(τ_β f)(u, Σ)`; at `u = 0` the continuous limit from `u > 0` is returned.
pub fn glue(f: &TestFunction, beta: f64, u: f64, sigma: [f64; 3]) -> Complex64 {
    if u == 0.0 {
        // sqrt(1/β) · lim u^{1/2} f(u, Σ)
        let lim = if f.p + 0.5 > 1e-12 { 0.0 } else { f.profile.value(0.0) };
        return f.amplitude * (lim * f.angular.at(sigma) / beta.sqrt());
    }
    // u/(1 - e^{-βu}) > 0 on both half-lines
    let thermal = u / -(-beta * u).exp_m1();
    let factor = (thermal * u.abs()).sqrt();
    if u > 0.0 {
        f.eval(u, sigma) * factor
    } else {
        -f.eval(-u, sigma).conj() * factor
    }
}

/// Tolerances for the autocorrelation integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutocorrSettings {
    pub quad: QuadSettings,
    /// Neglected tail relative to `C(0)`.
    pub tail_tol: f64,
}

impl Default for AutocorrSettings {
    fn default() -> Self {
        AutocorrSettings { quad: QuadSettings::default(), tail_tol: 1e-13 }
    }
}

/// `C(t) = (1/π) ∫_0^∞ J(ω)[coth(βω/2) cos ωt - i sin ωt] dω`.
pub fn reservoir_autocorrelation(ff: &FormFactor, beta: f64, t: f64) -> Result<Complex64> {
    reservoir_autocorrelation_with(ff, beta, t, &AutocorrSettings::default())
}

pub fn reservoir_autocorrelation_with(ff: &FormFactor, beta: f64, t: f64, s: &AutocorrSettings) -> Result<Complex64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!("inverse temperature must be positive and finite, got {beta}")));
    }
    let env = |w: f64| -> f64 {
        if w == 0.0 {
            return 0.0;
        }
        ff.spectral_density(w).unwrap_or(0.0) * coth_half(beta, w) / PI
    };
    let c0 = integrate_to_infinity(env, 0.0, 1.0, &[], &s.quad)?.value;
    if c0 == 0.0 {
        return Ok(ZERO);
    }
    if t == 0.0 {
        return Ok(Complex64::new(c0, 0.0));
    }
    let at = t.abs();
    // cutoff U: doubling until the tail is negligible, either in absolute
    // terms or through the oscillatory bound 2·env(U)/t on a decreasing envelope
    let mut upper: f64 = 1.0;
    loop {
        let tail = integrate_to_infinity(env, upper, upper, &[], &s.quad)?.value;
        let decreasing = (0..=8).all(|i| {
            let a = upper * (1.0 + i as f64 * 0.5);
            env(a) >= env(a * 1.25)
        });
        let osc = if decreasing { 2.0 * env(upper) / at } else { f64::INFINITY };
        if tail.min(osc) <= s.tail_tol * c0 {
            break;
        }
        upper *= 2.0;
        if upper > 1e9 {
            return Err(Error::NonConvergence {
                what: "autocorrelation tail".into(),
                estimate: tail.min(osc) / c0,
                tolerance: s.tail_tol,
            });
        }
    }
    let panel = PI / (4.0 * at);
    let n_panels = (upper / panel).ceil() as usize;
    let h = upper / n_panels as f64;
    let panel_quad = QuadSettings { abs_tol: s.tail_tol * c0 / n_panels as f64, ..s.quad };
    let mut acc = ZERO;
    for k in 0..n_panels {
        let a = h * k as f64;
        let b = if k + 1 == n_panels { upper } else { h * (k + 1) as f64 };
        let r = integrate(
            |w: f64| {
                if w == 0.0 {
                    return ZERO;
                }
                let j = ff.spectral_density(w).unwrap_or(0.0) / PI;
                let (sn, cs) = (w * t).sin_cos();
                Complex64::new(j * coth_half(beta, w) * cs, -j * sn)
            },
            a,
            b,
            &panel_quad,
        )?;
        acc += r.value;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r2: f64,
    pub samples: usize,
}

/// Least-squares fit of `log v = log c + α log t` over `window`.
pub fn fit_power_law(series: &[(f64, f64)], window: (f64, f64)) -> Result<PowerFit> {
    let pts: Vec<(f64, f64)> = series.iter().copied().filter(|(t, _)| *t >= window.0 && *t <= window.1).collect();
    if pts.len() < 8 {
        return Err(Error::Domain(format!("power-law fit needs at least 8 samples in the window, got {}", pts.len())));
    }
    if let Some((t, v)) = pts.iter().find(|(t, v)| !(*v > 0.0) || !(*t > 0.0)) {
        return Err(Error::Domain(format!("power-law fit needs positive data, got value {v} at t = {t}")));
    }
    let xs: Vec<f64> = pts.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, v)| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("power-law fit needs distinct times".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(PowerFit { exponent: slope, prefactor: intercept.exp(), r2, samples: pts.len() })
}
