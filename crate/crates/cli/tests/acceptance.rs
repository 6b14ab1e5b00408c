//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Every check compares library output with an oracle computed here:
//! brute-force Fock sums, an independent quadrature, closed-form rates,
//! or numbers read back from the CSV tables of a full benchmark sweep.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use corrbath::bath::{discretize, recurrence_time, Scheme};
use corrbath::davies::{semigroup_propagator, spectral_decomposition, DaviesGenerator, DaviesSettings};
use corrbath::linalg::CMatrix;
use corrbath::sphere::Angular;
use corrbath::model::{check_assumptions, two_level, FormFactor, RadialProfile, SystemModel, DEFAULT_FGR_TOLERANCE};
use corrbath::thermal::{
    glue, reservoir_autocorrelation, weyl_expectation_discrete, wick_expectation, Continuum, DiscreteModes, FunctionClass,
    Ladder, PolynomialWord, TestFunction, DEFAULT_MAX_WORD_LEN,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn cplx(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

// ---------------------------------------------------------------- criterion 1

const FOCK_CUTOFF: usize = 64;

/// `Σ_n p_n ⟨n| w |n⟩` over a truncated product Fock basis.
fn fock_polynomial(freqs: &[f64], beta: f64, factors: &[(Ladder, Vec<Complex64>)]) -> Complex64 {
    let m = freqs.len();
    let mut total = Complex64::new(0.0, 0.0);
    let mut occ = vec![0usize; m];
    loop {
        let weight: f64 = occ
            .iter()
            .zip(freqs)
            .map(|(&n, &w)| (1.0 - (-beta * w).exp()) * (-beta * w * n as f64).exp())
            .product();
        let mut ket: HashMap<Vec<usize>, Complex64> = HashMap::new();
        ket.insert(occ.clone(), Complex64::new(1.0, 0.0));
        for (kind, coeffs) in factors.iter().rev() {
            let mut next: HashMap<Vec<usize>, Complex64> = HashMap::new();
            for (state, amp) in &ket {
                for (k, c) in coeffs.iter().enumerate() {
                    let mut s = state.clone();
                    let (factor, ok) = match kind {
                        Ladder::Create => {
                            s[k] += 1;
                            (*c * (s[k] as f64).sqrt(), s[k] <= FOCK_CUTOFF)
                        }
                        Ladder::Annihilate => {
                            if s[k] == 0 {
                                (Complex64::new(0.0, 0.0), false)
                            } else {
                                let f = c.conj() * (s[k] as f64).sqrt();
                                s[k] -= 1;
                                (f, true)
                            }
                        }
                    };
                    if ok {
                        *next.entry(s).or_insert(Complex64::new(0.0, 0.0)) += amp * factor;
                    }
                }
            }
            ket = next;
        }
        if let Some(diag) = ket.get(&occ) {
            total += diag * weight;
        }
        // odometer over occupations
        let mut i = 0;
        loop {
            if i == m {
                return total;
            }
            occ[i] += 1;
            if occ[i] <= FOCK_CUTOFF {
                break;
            }
            occ[i] = 0;
            i += 1;
        }
    }
}

/// `Σ_n p_n ⟨n| e^{iφ(c)} |n⟩` for one mode, `φ(c) = (c a† + c̄ a)/√2`, via a dense eigendecomposition.
fn fock_weyl_single(omega: f64, beta: f64, c: Complex64) -> Complex64 {
    let dim = 81;
    let mut phi = DMatrix::<Complex64>::zeros(dim, dim);
    for n in 0..dim - 1 {
        let s = ((n + 1) as f64).sqrt() / 2f64.sqrt();
        phi[(n + 1, n)] = c * s;
        phi[(n, n + 1)] = c.conj() * s;
    }
    let eig = phi.symmetric_eigen();
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| Complex64::new(0.0, x).exp()));
    let w = &eig.eigenvectors * phases * eig.eigenvectors.adjoint();
    let x = beta * omega;
    (0..40).map(|n| w[(n, n)] * ((1.0 - (-x).exp()) * (-x * n as f64).exp())).sum()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut words = 0;
    for n_modes in [1usize, 2] {
        for _ in 0..12 {
            let freqs: Vec<f64> = (0..n_modes).map(|_| rng.random_range(0.6..2.0)).collect();
            let beta = rng.random_range(0.8..2.0);
            let half = rng.random_range(1..=3);
            let mut kinds = vec![Ladder::Create; half];
            kinds.extend(vec![Ladder::Annihilate; half]);
            kinds.shuffle(&mut rng);
            let factors: Vec<(Ladder, Vec<Complex64>)> =
                kinds.iter().map(|&k| (k, (0..n_modes).map(|_| cplx(&mut rng)).collect())).collect();
            let space = DiscreteModes { freqs: freqs.clone(), beta };
            let wick = wick_expectation(&space, &PolynomialWord::new(factors.clone()), DEFAULT_MAX_WORD_LEN)
                .map_err(|e| e.to_string())?;
            let brute = fock_polynomial(&freqs, beta, &factors);
            worst = worst.max(rel(wick, brute));
            words += 1;
        }
    }
    let mut weyls = 0;
    for n_modes in [1usize, 2] {
        for _ in 0..6 {
            let freqs: Vec<f64> = (0..n_modes).map(|_| rng.random_range(0.6..2.0)).collect();
            let beta = rng.random_range(0.8..2.0);
            let f: Vec<Complex64> = (0..n_modes).map(|_| cplx(&mut rng) * 1.5).collect();
            let space = DiscreteModes { freqs: freqs.clone(), beta };
            let formula = weyl_expectation_discrete(&space, &f).map_err(|e| e.to_string())?;
            // commuting single-mode factors
            let brute: Complex64 = freqs.iter().zip(&f).map(|(&w, &c)| fock_weyl_single(w, beta, c)).product();
            worst = worst.max(rel(Complex64::new(formula, 0.0), brute));
            weyls += 1;
        }
    }
    let detail = format!("{words} words and {weyls} Weyl functions, worst relative deviation {worst:.2e} (tol 1e-6)");
    if worst <= 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------- criterion 2

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on `P_n`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// `∫_0^∞ F(u) du` as `∫ F(e^s) e^s ds` with composite 20-point Gauss-Legendre panels.
fn half_line(rule: &[(f64, f64)], f: impl Fn(f64) -> f64) -> f64 {
    let (lo, hi, width) = (-46.0, 16.0, 0.25);
    let panels = ((hi - lo) / width) as usize;
    let mut acc = 0.0;
    for j in 0..panels {
        let a = lo + width * j as f64;
        for &(x, w) in rule {
            let s = a + 0.5 * width * (x + 1.0);
            let u = s.exp();
            acc += 0.5 * width * w * f(u) * u;
        }
    }
    acc
}

fn criterion_2() -> Outcome {
    let rule20 = gauss_legendre(20);
    let rule5 = gauss_legendre(5);
    let poly = RadialProfile { amp: 0.7, poly: vec![1.0, 0.5], exp_rate: 0.5, gauss_rate: 0.1 };
    let mk = |class, p, q, profile: RadialProfile| TestFunction::new(class, p, q, profile).expect("admissible");
    let cases: Vec<(TestFunction, f64)> = vec![
        (mk(FunctionClass::Obs, 0.5, 2.5, RadialProfile::exponential(1.0, 1.0)), 4.0),
        (mk(FunctionClass::Obs, -0.5, 2.0, RadialProfile::gaussian(1.0, 1.5)).with_angular(Angular { a1: 0.3, a2: 0.0 }), 1.0),
        (
            mk(FunctionClass::Cor, 2.0, 3.0, RadialProfile::exponential(2.0, 0.2))
                .with_angular(Angular { a1: -0.4, a2: 0.25 })
                .scaled(Complex64::new(0.3, 0.7)),
            2.0,
        ),
        (mk(FunctionClass::Obs, 0.5, 2.5, RadialProfile::constant(1.0)), 0.5),
        (mk(FunctionClass::Obs, 3.0, 4.0, poly).with_angular(Angular { a1: 0.0, a2: -0.6 }), 1.5),
    ];
    let mut worst = 0.0f64;
    for (f, beta) in &cases {
        let mut norm = 0.0;
        // A depends on cos θ only: 5-point rule in cos θ times 2π is exact for |A|²
        for &(ct, w) in &rule5 {
            let sigma = [(1.0 - ct * ct).sqrt(), 0.0, ct];
            let plus = half_line(&rule20, |u| glue(f, *beta, u, sigma).norm_sqr());
            let minus = half_line(&rule20, |u| glue(f, *beta, -u, sigma).norm_sqr());
            norm += 2.0 * PI * w * (plus + minus);
        }
        let form = Continuum::new(*beta).and_then(|c| c.coth_form(f)).map_err(|e| e.to_string())?;
        worst = worst.max((norm - form).abs() / form.abs());
    }
    let detail = format!("{} test functions, worst relative deviation {worst:.2e} (tol 1e-8)", cases.len());
    if worst <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------- criterion 3

fn benchmark_form_factor() -> FormFactor {
    FormFactor::new(0.5, 2.5, RadialProfile::exponential(1.0, 1.0)).expect("valid form factor")
}

fn three_level() -> SystemModel {
    let r = |x: f64| Complex64::new(x, 0.0);
    let g = CMatrix::from_row_slice(
        3,
        3,
        &[r(0.3), Complex64::new(0.7, 0.2), r(0.5), Complex64::new(0.7, -0.2), r(-0.4), Complex64::new(0.2, 0.6), r(0.5), Complex64::new(0.2, -0.6), r(0.1)],
    );
    SystemModel::new(vec![0.0, 1.0, 2.7], g).expect("valid model")
}

/// Choi matrix `Σ_ij |i⟩⟨j| ⊗ P(|i⟩⟨j|)` of a row-major superoperator.
fn choi_of(p: &CMatrix, n: usize) -> CMatrix {
    CMatrix::from_fn(n * n, n * n, |r, c| {
        let (i, a) = (r / n, r % n);
        let (j, b) = (c / n, c % n);
        p[(a * n + b, i * n + j)]
    })
}

fn trace_norm(m: &CMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.sum()
}

fn criterion_3() -> Outcome {
    let ff = benchmark_form_factor();
    let settings = DaviesSettings::default();
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, model, beta) in [("two-level", two_level(1.0), 4.0), ("three-level", three_level(), 1.3)] {
        let report = check_assumptions(&model, &ff, DEFAULT_FGR_TOLERANCE);
        if !(report.a1_ok && report.a2a_ok) {
            return Err(format!("{name}: assumptions fail: {}", report.notes));
        }
        for lambda in [0.2, 1.0] {
            let gen = DaviesGenerator::build(&model, &ff, beta, lambda, &settings).map_err(|e| e.to_string())?;
            let trace = gen.trace_defect();
            let n = model.dim();
            let mut min_choi = f64::INFINITY;
            for t in [0.01, 0.1, 1.0, 10.0, 100.0] {
                let p = semigroup_propagator(&gen, t).map_err(|e| e.to_string())?;
                let ch = choi_of(&p, n);
                let herm = (&ch + ch.adjoint()) * Complex64::new(0.5, 0.0);
                min_choi = min_choi.min(herm.symmetric_eigen().eigenvalues.min());
            }
            let stationarity = trace_norm(&gen.apply(&model.gibbs_state(beta)));
            let dec = spectral_decomposition(&gen, &settings).map_err(|e| e.to_string())?;
            let zero = dec.zero_modes(1e-10);
            let min_im = dec.modes.iter().filter(|m| m.e.abs() + m.a.norm() > 1e-10).map(|m| m.a.im).fold(f64::INFINITY, f64::min);
            let pass = trace <= 1e-10 && min_choi >= -1e-8 && stationarity <= 1e-8 && zero == 1 && min_im >= -1e-10;
            ok &= pass;
            lines.push(format!(
                "{name} λ={lambda}: trace {trace:.1e}, min Choi eig {min_choi:.1e}, ‖ℒρ_β‖₁ {stationarity:.1e}, zero modes {zero}, min Im a {min_im:.2e}"
            ));
        }
    }
    // golden-rule rates of the two-level system against closed form
    let beta = 4.0;
    let gen = DaviesGenerator::build(&two_level(1.0), &ff, beta, 0.1, &settings).map_err(|e| e.to_string())?;
    let g1 = 0.5 * (-1.0f64).exp(); // 1^p/(1 + 1^{p+q}) · e^{-1}
    let j = 0.5 * PI * g1 * g1 * 4.0 * PI;
    let boltz = (-beta).exp();
    let up = j / (1.0 - boltz);
    let down = j * boltz / (1.0 - boltz);
    let cross = -2.0 * j * (-beta / 2.0).exp() / (1.0 - boltz);
    let mut rate_err = 0.0f64;
    for s in &gen.shifts {
        let checks: Vec<(f64, f64)> = if s.e.abs() == 1.0 {
            vec![(s.matrix[(0, 0)].im, up + down)]
        } else {
            vec![(s.matrix[(0, 0)].im, 2.0 * down), (s.matrix[(1, 1)].im, 2.0 * up), (s.matrix[(0, 1)].im, cross)]
        };
        for (got, want) in checks {
            rate_err = rate_err.max((got - want).abs() / up);
        }
    }
    ok &= rate_err <= 1e-8;
    lines.push(format!("two-level rates: relative deviation {rate_err:.1e} (tol 1e-8)"));
    if ok {
        Ok(lines.join("; "))
    } else {
        Err(lines.join("; "))
    }
}

// ---------------------------------------------------------------- criterion 4

/// Least squares of `ln v` against `ln t`; returns `(exponent, r²)`.
fn loglog_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let xy: Vec<(f64, f64)> = pts.iter().map(|&(t, v)| (t.ln(), v.ln())).collect();
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = xy.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, sxy * sxy / (sxx * syy))
}

struct Autocorr {
    err_200: f64,
    err_400: f64,
    window: f64,
    exponent: f64,
    r2: f64,
}

/// Discrete against continuum `C(t)` on the 200-mode window, β = 4.
fn autocorrelation_study() -> Result<Autocorr, String> {
    let ff = benchmark_form_factor();
    let beta = 4.0;
    // ω_max = 10 puts the cutoff tail (~1e-9) below the quadrature error being measured
    let omega_max = 10.0;
    let b200 = discretize(&ff, 200, omega_max, Scheme::GaussSpectral).map_err(|e| e.to_string())?;
    let b400 = discretize(&ff, 400, omega_max, Scheme::GaussSpectral).map_err(|e| e.to_string())?;
    let window = recurrence_time(&b200).map_err(|e| e.to_string())? / 2.0;
    let (mut e200, mut e400, mut scale) = (0.0f64, 0.0f64, 0.0f64);
    let mut series = Vec::new();
    for i in 0..=400 {
        let t = window * i as f64 / 400.0;
        let c = reservoir_autocorrelation(&ff, beta, t).map_err(|e| e.to_string())?;
        scale = scale.max(c.norm());
        e200 = e200.max((b200.autocorrelation(beta, t) - c).norm());
        e400 = e400.max((b400.autocorrelation(beta, t) - c).norm());
        if t >= 5.0 {
            series.push((t, c.norm()));
        }
    }
    let (exponent, r2) = loglog_fit(&series);
    Ok(Autocorr { err_200: e200 / scale, err_400: e400 / scale, window, exponent, r2 })
}

fn criterion_4(a: &Autocorr) -> Outcome {
    let detail = format!(
        "window [0, {:.1}]: relative error {:.2e} at 200 modes (tol 1e-3), {:.2e} at 400 modes (ratio {:.1}, need ≥ 2)",
        a.window,
        a.err_200,
        a.err_400,
        a.err_200 / a.err_400
    );
    if a.err_200 <= 1e-3 && a.err_400 <= 0.5 * a.err_200 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ------------------------------------------------------------ criteria 5 to 9

const LAMBDAS: [f64; 3] = [0.2, 0.1, 0.05];
const FIT_START: f64 = 5.0;

#[derive(Debug, serde::Deserialize)]
struct Row {
    t: f64,
    observable: String,
    chi_hat_re: f64,
    chi_hat_im: f64,
    free_corr_re: f64,
    free_corr_im: f64,
    markov_error: f64,
}

impl Row {
    fn chi(&self) -> Complex64 {
        Complex64::new(self.chi_hat_re, self.chi_hat_im)
    }

    fn free(&self) -> Complex64 {
        Complex64::new(self.free_corr_re, self.free_corr_im)
    }
}

struct Sweep {
    _dir: tempfile::TempDir,
    traces: PathBuf,
    status: String,
    seconds: f64,
}

fn run_sweep() -> Result<Sweep, String> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let config = root.join("configs/benchmark.toml");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_corrbath"))
        .arg("sweep")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.path())
        .output()
        .map_err(|e| e.to_string())?;
    let seconds = start.elapsed().as_secs_f64();
    let status = match out.status.code() {
        Some(0) => "exit 0".to_string(),
        other => format!("exit {other:?}: {}", String::from_utf8_lossy(&out.stderr).lines().last().unwrap_or("")),
    };
    Ok(Sweep { traces: dir.path().join("traces"), _dir: dir, status, seconds })
}

fn load(sweep: &Sweep, scenario: &str, lambda: f64) -> Result<Vec<Row>, String> {
    let path = sweep.traces.join(format!("{scenario}__lambda_{lambda}.csv"));
    let mut rdr = csv::Reader::from_path(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    rdr.deserialize().collect::<Result<Vec<Row>, _>>().map_err(|e| e.to_string())
}

fn max_over(rows: &[Row], obs: &str, f: impl Fn(&Row) -> f64) -> Result<f64, String> {
    let v: Vec<f64> = rows.iter().filter(|r| r.observable == obs).map(f).collect();
    if v.is_empty() {
        return Err(format!("observable {obs} missing"));
    }
    Ok(v.into_iter().fold(0.0, f64::max))
}

/// Per-λ maxima and whether each halving shrinks them by `factor`.
fn halving(values: &[f64], factor: f64) -> bool {
    values.windows(2).all(|w| w[0] >= factor * w[1] && w[1] < w[0])
}

fn fmt(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>().join(" → ")
}

fn criterion_5(sweep: &Sweep) -> Outcome {
    let mut product = Vec::new();
    let mut example = Vec::new();
    for &l in &LAMBDAS {
        product.push(max_over(&load(sweep, "product", l)?, "weyl", |r| r.chi().norm())?);
        let rows = load(sweep, "example", l)?;
        example.push(max_over(&rows, "sx", |r| r.chi().norm())?.max(max_over(&rows, "sz", |r| r.chi().norm())?));
    }
    let detail = format!("product W(h): {}; example system-only: {} (factor ≥ 1.5 per halving)", fmt(&product), fmt(&example));
    if halving(&product, 1.5) && halving(&example, 1.5) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_6(sweep: &Sweep, a: &Autocorr) -> Outcome {
    let rows = load(sweep, "example", *LAMBDAS.last().unwrap())?;
    let window_end = rows.iter().map(|r| r.t).fold(0.0, f64::max);
    let series: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.observable == "sz_a" && r.t >= FIT_START).map(|r| (r.t, r.chi().norm())).collect();
    let (exponent, r2) = loglog_fit(&series);
    let detail = format!(
        "|χ̂| for sz⊗a(h) on [{FIT_START}, {window_end}]: exponent {exponent:.3}, r² {r2:.4}; |C(t)| on [5, {:.1}]: exponent {:.3}, r² {:.4} (need ≤ -2.5, r² ≥ 0.9)",
        a.window, a.exponent, a.r2
    );
    if exponent <= -2.5 && r2 >= 0.9 && a.exponent <= -2.5 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_7(sweep: &Sweep) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for scenario in ["product", "example"] {
        let mut sups = Vec::new();
        let mut interior = true;
        for &l in &LAMBDAS {
            let rows = load(sweep, scenario, l)?;
            let mut series: BTreeMap<u64, f64> = BTreeMap::new();
            for r in &rows {
                series.insert(r.t.to_bits(), r.markov_error);
            }
            let pts: Vec<(f64, f64)> = series.iter().map(|(k, v)| (f64::from_bits(*k), *v)).collect();
            let (idx, sup) = pts.iter().enumerate().fold((0, f64::MIN), |acc, (i, p)| if p.1 > acc.1 { (i, p.1) } else { acc });
            interior &= idx > 0 && idx + 1 < pts.len();
            sups.push(sup);
        }
        let decreasing = sups.windows(2).all(|w| w[1] < w[0]);
        ok &= decreasing && interior;
        parts.push(format!("{scenario}: {} (argmax interior: {interior})", fmt(&sups)));
    }
    let detail = parts.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_8(sweep: &Sweep) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for obs in ["sx", "sz", "weyl", "sz_a"] {
        let mut v = Vec::new();
        for &l in &LAMBDAS {
            v.push(max_over(&load(sweep, "example", l)?, obs, |r| (r.chi() - r.free()).norm())?);
        }
        ok &= v.windows(2).all(|w| w[1] < w[0]);
        parts.push(format!("{obs}: {}", fmt(&v)));
    }
    let detail = format!("max|χ̂ - free| in the example scenario, {}", parts.join("; "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_9(first: &Sweep, second: &Sweep) -> Outcome {
    let names = |s: &Sweep| -> Result<Vec<String>, String> {
        let mut v: Vec<String> = std::fs::read_dir(&s.traces)
            .map_err(|e| e.to_string())?
            .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
            .collect();
        v.sort();
        Ok(v)
    };
    let a = names(first)?;
    let b = names(second)?;
    if a != b || a.is_empty() {
        return Err(format!("trace file sets differ: {a:?} vs {b:?}"));
    }
    for name in &a {
        let x = std::fs::read(first.traces.join(name)).map_err(|e| e.to_string())?;
        let y = std::fs::read(second.traces.join(name)).map_err(|e| e.to_string())?;
        if x != y {
            return Err(format!("{name} differs between runs"));
        }
    }
    Ok(format!("{} CSV files byte-identical across two sweeps", a.len()))
}

fn report(id: u32, started: Instant, outcome: Outcome) -> bool {
    let secs = started.elapsed().as_secs_f64();
    match outcome {
        Ok(d) => {
            println!("PASS criterion {id} ({secs:.1}s): {d}");
            true
        }
        Err(d) => {
            println!("FAIL criterion {id} ({secs:.1}s): {d}");
            false
        }
    }
}

fn main() {
    let mut ok = true;
    let t = Instant::now();
    ok &= report(1, t, criterion_1());
    let t = Instant::now();
    ok &= report(2, t, criterion_2());
    let t = Instant::now();
    ok &= report(3, t, criterion_3());
    let t = Instant::now();
    let auto = autocorrelation_study();
    match &auto {
        Ok(a) => ok &= report(4, t, criterion_4(a)),
        Err(e) => ok &= report(4, t, Err(e.clone())),
    }

    let sweeps = run_sweep().and_then(|a| run_sweep().map(|b| (a, b)));
    match sweeps {
        Ok((first, second)) => {
            println!("benchmark sweeps: {} in {:.0}s, {} in {:.0}s", first.status, first.seconds, second.status, second.seconds);
            ok &= report(5, Instant::now(), criterion_5(&first));
            let c6 = match &auto {
                Ok(a) => criterion_6(&first, a),
                Err(e) => Err(e.clone()),
            };
            ok &= report(6, Instant::now(), c6);
            ok &= report(7, Instant::now(), criterion_7(&first));
            ok &= report(8, Instant::now(), criterion_8(&first));
            ok &= report(9, Instant::now(), criterion_9(&first, &second));
        }
        Err(e) => {
            for id in 5..=9 {
                ok &= report(id, Instant::now(), Err(format!("benchmark sweep did not run: {e}")));
            }
        }
    }
    if !ok {
        std::process::exit(1);
    }
}
