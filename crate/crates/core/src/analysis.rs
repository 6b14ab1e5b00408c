//! Decomposition of simulated trajectories into the Markovian product term
//! and the remainder `chi_hat`, with the derived diagnostics: Markov error,
//! free-dynamics comparison, Born distance, van Hove limit and power-law fits.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bath::{discretize, recurrence_time, DiscretizedBath, FockTruncation, Scheme};
use crate::davies::{apply_propagator, spectral_decomposition, DaviesGenerator, DaviesSettings, SpectralDecomposition};
use crate::engine::{Backend, DenseBackend, EngineSpec, ThermofieldBackend};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};
use crate::model::{FormFactor, SystemModel};
use crate::states::{KrausSpec, OperatorWord, StateLog};
use crate::thermal::{fit_power_law, FunctionClass, PowerFit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub n_modes: usize,
    pub omega_max: f64,
    pub scheme: Scheme,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedObservable {
    pub name: String,
    pub word: OperatorWord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub label: String,
    pub model: SystemModel,
    pub ff: FormFactor,
    pub beta: f64,
    pub lambda: f64,
    pub bath: BathSpec,
    pub engine: EngineSpec,
    pub max_dim: usize,
    pub kraus: KrausSpec,
    pub observables: Vec<NamedObservable>,
    pub dt: f64,
    /// End of the grid; `None` means half the recurrence time.
    pub t_max: Option<f64>,
    pub davies: DaviesSettings,
}

impl Scenario {
    pub fn with_lambda(&self, lambda: f64) -> Scenario {
        Scenario { lambda, label: format!("{}@lambda={lambda}", self.label), ..self.clone() }
    }

    pub fn discretized_bath(&self) -> Result<DiscretizedBath> {
        discretize(&self.ff, self.bath.n_modes, self.bath.omega_max, self.bath.scheme)
    }

    /// Uniform grid `0, dt, 2dt, …` up to `t_max`, checked against `T_rec/2`.
    pub fn time_grid(&self, t_rec: f64) -> Result<Vec<f64>> {
        if !(self.dt > 0.0) {
            return Err(Error::Validation(format!("time step must be positive, got {}", self.dt)));
        }
        let t_max = self.t_max.unwrap_or(0.5 * t_rec);
        if t_max > 0.5 * t_rec * (1.0 + 1e-12) {
            return Err(Error::Validation(format!(
                "time grid ends at {t_max} beyond half the recurrence time {:.4}",
                0.5 * t_rec
            )));
        }
        let n = (t_max / self.dt + 1e-9).floor() as usize;
        Ok((0..=n).map(|k| k as f64 * self.dt).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(Error::Validation(format!("inverse temperature must be positive, got {}", self.beta)));
        }
        self.kraus.validate(self.model.dim(), self.beta)?;
        for o in &self.observables {
            o.word.check_dims(self.model.dim())?;
            o.word.check_class(FunctionClass::Obs)?;
        }
        Ok(())
    }
}

/// Where the finite-bath numbers come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub n_modes: usize,
    pub omega_max: f64,
    pub scheme: Scheme,
    pub form_factor_hash: String,
    pub model_hash: String,
    pub recurrence_time: f64,
    pub window_end: f64,
    pub engine: EngineSpec,
    pub composite_dim: usize,
    pub lambda: f64,
    pub beta: f64,
    pub state_log: StateLog,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub observable: usize,
    pub exact: Complex64,
    pub markov: Complex64,
    pub chi_hat: Complex64,
    pub free_corr: Complex64,
}

#[derive(Debug, Clone)]
pub struct DecompositionTrace {
    pub label: String,
    pub times: Vec<f64>,
    pub observables: Vec<String>,
    /// Row `k·n_obs + j` holds time `k` and observable `j`.
    pub rows: Vec<TraceRow>,
    pub born_distance: Vec<f64>,
    pub markov_error: Vec<f64>,
    pub system_exact: Vec<CMatrix>,
    pub system_markov: Vec<CMatrix>,
    pub provenance: Provenance,
}

impl DecompositionTrace {
    pub fn series(&self, obs: usize) -> impl Iterator<Item = &TraceRow> {
        let n = self.observables.len();
        self.rows.iter().skip(obs).step_by(n.max(1))
    }

    pub fn observable_index(&self, name: &str) -> Result<usize> {
        self.observables
            .iter()
            .position(|o| o == name)
            .ok_or_else(|| Error::Validation(format!("unknown observable `{name}`")))
    }

    pub fn max_abs_chi(&self, obs: usize) -> f64 {
        self.series(obs).map(|r| r.chi_hat.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_chi_minus_free(&self, obs: usize) -> f64 {
        self.series(obs).map(|r| (r.chi_hat - r.free_corr).norm()).fold(0.0, f64::max)
    }

    pub fn markov_summary(&self) -> MarkovSummary {
        let (mut sup, mut arg) = (0.0, 0usize);
        for (k, &e) in self.markov_error.iter().enumerate() {
            if e > sup {
                sup = e;
                arg = k;
            }
        }
        MarkovSummary { sup, argmax_t: self.times[arg], at_edge: arg + 1 == self.times.len() && self.times.len() > 1 }
    }

    /// Power-law fit of `|chi_hat(t)|` on `window`.
    pub fn chi_decay_fit(&self, obs: usize, window: (f64, f64)) -> Result<PowerFit> {
        let series: Vec<(f64, f64)> = self.series(obs).map(|r| (r.t, r.chi_hat.norm())).collect();
        fit_power_law(&series, window)
    }

    /// Largest `|exact - markov - chi_hat|`; zero up to rounding by construction.
    pub fn decomposition_defect(&self) -> f64 {
        self.rows.iter().map(|r| (r.exact - r.markov - r.chi_hat).norm()).fold(0.0, f64::max)
    }

    /// CSV with a fixed column order and fixed number formatting.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "t,observable,exact_re,exact_im,markov_re,markov_im,chi_hat_re,chi_hat_im,free_corr_re,free_corr_im,born_distance,markov_error\n",
        );
        let n = self.observables.len();
        for (idx, r) in self.rows.iter().enumerate() {
            let k = idx / n;
            let _ = writeln!(
                s,
                "{:.6},{},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}",
                r.t,
                self.observables[r.observable],
                r.exact.re,
                r.exact.im,
                r.markov.re,
                r.markov.im,
                r.chi_hat.re,
                r.chi_hat.im,
                r.free_corr.re,
                r.free_corr.im,
                self.born_distance[k],
                self.markov_error[k]
            );
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarkovSummary {
    pub sup: f64,
    pub argmax_t: f64,
    pub at_edge: bool,
}

/// Markov propagators `e^{tℒ}` from one spectral decomposition.
struct MarkovPropagator {
    gen: DaviesGenerator,
    dec: SpectralDecomposition,
}

impl MarkovPropagator {
    fn new(gen: DaviesGenerator, settings: &DaviesSettings) -> Result<Self> {
        let dec = spectral_decomposition(&gen, settings)?;
        Ok(MarkovPropagator { gen, dec })
    }

    fn apply(&self, t: f64, rho: &CMatrix) -> CMatrix {
        let p = if self.dec.diagonalizable { self.dec.propagator(t) } else { linalg::expm(&(&self.gen.superop * c(t))) };
        apply_propagator(&p, rho)
    }
}

fn build_trace<B: Backend>(
    sc: &Scenario,
    backend: &B,
    bath: &DiscretizedBath,
    times: &[f64],
    t_rec: f64,
    markov: &MarkovPropagator,
) -> Result<DecompositionTrace> {
    let (state0, log) = backend.initial(&sc.kraus)?;
    let rho_s0 = backend.system(&state0);
    let prod0 = backend.product(&rho_s0);
    let n_obs = sc.observables.len();
    let factors: Vec<CMatrix> = (0..n_obs).map(|j| backend.reservoir_factor(j)).collect();

    let mut rows = Vec::with_capacity(times.len() * n_obs);
    let mut born = Vec::with_capacity(times.len());
    let mut err = Vec::with_capacity(times.len());
    let mut sys_exact = Vec::with_capacity(times.len());
    let mut sys_markov = Vec::with_capacity(times.len());

    let mut exact = state0.clone();
    let mut free = state0;
    let mut free_prod = prod0;
    let mut last_t = 0.0;
    for &t in times {
        let dt = t - last_t;
        if dt > 0.0 {
            exact = backend.step(&exact, dt);
            free = backend.free_step(&free, dt);
            free_prod = backend.free_step(&free_prod, dt);
        }
        last_t = t;
        let rs = backend.system(&exact);
        let rm = markov.apply(t, &rho_s0);
        err.push(linalg::trace_distance(&rs, &rm));
        born.push(backend.born_distance(&exact, &rs)?);
        for (j, m) in factors.iter().enumerate() {
            let ex = backend.expect(&exact, j);
            let mk = (&rm * m).trace();
            let fc = backend.expect(&free, j) - backend.expect(&free_prod, j);
            rows.push(TraceRow { t, observable: j, exact: ex, markov: mk, chi_hat: ex - mk, free_corr: fc });
        }
        sys_exact.push(rs);
        sys_markov.push(rm);
    }
    let provenance = Provenance {
        n_modes: bath.len(),
        omega_max: bath.omega_max,
        scheme: bath.scheme,
        form_factor_hash: bath.provenance.clone(),
        model_hash: sc.model.hash(),
        recurrence_time: t_rec,
        window_end: times.last().copied().unwrap_or(0.0),
        engine: sc.engine.clone(),
        composite_dim: backend.dim(),
        lambda: sc.lambda,
        beta: sc.beta,
        warnings: backend.warnings(),
        state_log: log,
    };
    Ok(DecompositionTrace {
        label: sc.label.clone(),
        times: times.to_vec(),
        observables: sc.observables.iter().map(|o| o.name.clone()).collect(),
        rows,
        born_distance: born,
        markov_error: err,
        system_exact: sys_exact,
        system_markov: sys_markov,
        provenance,
    })
}

fn words(sc: &Scenario) -> Vec<OperatorWord> {
    sc.observables.iter().map(|o| o.word.clone()).collect()
}

fn dense_truncation(sc: &Scenario, bath: &DiscretizedBath, cutoffs: &Option<Vec<usize>>, raise: usize) -> Result<FockTruncation> {
    let t = match cutoffs {
        Some(c) if c.len() == bath.len() => FockTruncation { cutoffs: c.clone() },
        Some(c) => {
            return Err(Error::Validation(format!("{} cutoffs given for {} modes", c.len(), bath.len())));
        }
        None => FockTruncation::thermal_default(bath, sc.beta).raised(raise),
    };
    t.check(sc.model.dim(), sc.max_dim)?;
    Ok(t)
}

/// Exact and Markovian trajectories with every per-time diagnostic.
pub fn run(sc: &Scenario) -> Result<DecompositionTrace> {
    sc.validate()?;
    let bath = sc.discretized_bath()?;
    let t_rec = recurrence_time(&bath)?;
    let times = sc.time_grid(t_rec)?;
    let gen = DaviesGenerator::build(&sc.model, &sc.ff, sc.beta, sc.lambda, &sc.davies)?;
    let markov = MarkovPropagator::new(gen, &sc.davies)?;
    match &sc.engine {
        EngineSpec::Dense { cutoffs, raise } => {
            let trunc = dense_truncation(sc, &bath, cutoffs, *raise)?;
            let b = DenseBackend::new(&sc.model, &bath, sc.beta, sc.lambda, trunc, &words(sc), sc.max_dim)?;
            build_trace(sc, &b, &bath, &times, t_rec, &markov)
        }
        EngineSpec::Thermofield { max_quanta } => {
            let b = ThermofieldBackend::new(&sc.model, &bath, sc.beta, sc.lambda, *max_quanta, &words(sc), sc.max_dim)?;
            build_trace(sc, &b, &bath, &times, t_rec, &markov)
        }
    }
}

/// `(t, ½‖ρ_S^t - e^{tℒ}ρ_S‖₁)` and its supremum.
pub fn markov_error(sc: &Scenario) -> Result<(Vec<(f64, f64)>, MarkovSummary)> {
    let tr = run(&Scenario { observables: vec![], ..sc.clone() })?;
    Ok((tr.times.iter().copied().zip(tr.markov_error.iter().copied()).collect(), tr.markov_summary()))
}

pub fn correlation_term(sc: &Scenario, obs: usize) -> Result<Vec<(f64, Complex64)>> {
    let tr = run(sc)?;
    Ok(tr.series(obs).map(|r| (r.t, r.chi_hat)).collect())
}

pub fn free_correlation(sc: &Scenario, obs: usize) -> Result<Vec<(f64, Complex64)>> {
    let tr = run(sc)?;
    Ok(tr.series(obs).map(|r| (r.t, r.free_corr)).collect())
}

pub fn born_distance(sc: &Scenario) -> Result<Vec<(f64, f64)>> {
    let tr = run(&Scenario { observables: vec![], ..sc.clone() })?;
    Ok(tr.times.iter().copied().zip(tr.born_distance.iter().copied()).collect())
}

/// Self-consistency of the finite-bath marginals. A check whose rerun does
/// not fit the dimension budget is left as `None` with the reason in `skipped`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    /// Largest trace distance between marginals when the mode count doubles.
    pub modes_doubled: Option<f64>,
    /// Largest trace distance when the truncation is one level deeper.
    pub truncation_raised: Option<f64>,
    pub modes_ok: Option<bool>,
    pub truncation_ok: Option<bool>,
    pub skipped: Vec<String>,
}

impl GateReport {
    /// False only if an evaluated check failed.
    pub fn passed(&self) -> bool {
        self.modes_ok != Some(false) && self.truncation_ok != Some(false)
    }
}

pub const MODES_GATE: f64 = 1e-3;
pub const TRUNCATION_GATE: f64 = 1e-4;

fn max_marginal_distance(a: &DecompositionTrace, b: &DecompositionTrace) -> f64 {
    a.system_exact.iter().zip(&b.system_exact).map(|(x, y)| linalg::trace_distance(x, y)).fold(0.0, f64::max)
}

fn gate_distance(reference: &DecompositionTrace, sc: &Scenario, what: &str, skipped: &mut Vec<String>) -> Result<Option<f64>> {
    match run(sc) {
        Ok(tr) => Ok(Some(max_marginal_distance(reference, &tr))),
        Err(e @ Error::Resource { .. }) => {
            skipped.push(format!("{what}: {e}"));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Reruns the marginals with doubled modes and with a deeper truncation on
/// the same time grid.
pub fn convergence_gate(sc: &Scenario) -> Result<GateReport> {
    let bath = sc.discretized_bath()?;
    let window = sc.t_max.unwrap_or(0.5 * recurrence_time(&bath)?);
    let base = Scenario { observables: vec![], t_max: Some(window), ..sc.clone() };
    let reference = run(&base)?;
    let mut skipped = Vec::new();
    let doubled = Scenario { bath: BathSpec { n_modes: 2 * sc.bath.n_modes, ..sc.bath }, ..base.clone() };
    let modes_doubled = gate_distance(&reference, &doubled, "doubled modes", &mut skipped)?;
    let raised = Scenario { engine: sc.engine.refined(), ..base };
    let truncation_raised = gate_distance(&reference, &raised, "raised truncation", &mut skipped)?;
    Ok(GateReport {
        modes_doubled,
        truncation_raised,
        modes_ok: modes_doubled.map(|d| d < MODES_GATE),
        truncation_ok: truncation_raised.map(|d| d < TRUNCATION_GATE),
        skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VanHoveRow {
    pub tau: f64,
    pub lambda: f64,
    pub exact: Complex64,
    pub markov: Complex64,
    pub deviation: f64,
}

fn van_hove_with<B: Backend>(
    sc: &Scenario,
    backend: &B,
    gen: &DaviesGenerator,
    taus: &[f64],
    lambda: f64,
    obs: usize,
) -> Result<Vec<VanHoveRow>> {
    let (state0, _) = backend.initial(&sc.kraus)?;
    let rho_s0 = backend.system(&state0);
    let factor = backend.reservoir_factor(obs);
    let mut state = state0;
    let mut now = 0.0;
    let mut out = Vec::with_capacity(taus.len());
    for &tau in taus {
        let target = tau / (lambda * lambda);
        while now < target - 1e-12 {
            let dt = sc.dt.min(target - now);
            state = backend.step(&state, dt);
            now += dt;
        }
        let rotated = backend.rotate_system(&state, target);
        let exact = backend.expect(&rotated, obs);
        let rk = apply_propagator(&gen.kappa_propagator(tau), &rho_s0);
        let markov = (&rk * &factor).trace();
        out.push(VanHoveRow { tau, lambda, exact, markov, deviation: (exact - markov).norm() });
    }
    Ok(out)
}

/// Interaction-picture expectations at `t = τ/λ²` against `e^{τ𝒦}` for each
/// coupling in `lambdas`.
pub fn van_hove_check(sc: &Scenario, obs: usize, taus: &[f64], lambdas: &[f64]) -> Result<Vec<VanHoveRow>> {
    sc.validate()?;
    if obs >= sc.observables.len() {
        return Err(Error::Validation(format!("observable index {obs} out of range")));
    }
    let mut taus = taus.to_vec();
    taus.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if taus.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::Validation("van Hove times must be nonnegative".into()));
    }
    let bath = sc.discretized_bath()?;
    let t_rec = recurrence_time(&bath)?;
    let tau_max = taus.last().copied().unwrap_or(0.0);
    let gen = DaviesGenerator::build(&sc.model, &sc.ff, sc.beta, 1.0, &sc.davies)?;
    let mut out = Vec::new();
    for &lambda in lambdas {
        if lambda == 0.0 {
            return Err(Error::Validation("the van Hove limit needs nonzero couplings".into()));
        }
        let t_end = tau_max / (lambda * lambda);
        if t_end > 0.5 * t_rec {
            return Err(Error::Validation(format!(
                "τ = {tau_max} at λ = {lambda} reaches t = {t_end:.3}, beyond half the recurrence time {:.3}",
                0.5 * t_rec
            )));
        }
        let rows = match &sc.engine {
            EngineSpec::Dense { cutoffs, raise } => {
                let trunc = dense_truncation(sc, &bath, cutoffs, *raise)?;
                let b = DenseBackend::new(&sc.model, &bath, sc.beta, lambda, trunc, &words(sc), sc.max_dim)?;
                van_hove_with(sc, &b, &gen, &taus, lambda, obs)?
            }
            EngineSpec::Thermofield { max_quanta } => {
                let b = ThermofieldBackend::new(&sc.model, &bath, sc.beta, lambda, *max_quanta, &words(sc), sc.max_dim)?;
                van_hove_with(sc, &b, &gen, &taus, lambda, obs)?
            }
        };
        out.extend(rows);
    }
    Ok(out)
}

/// sha256 of a byte string, hex encoded.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Least-squares slope of a monotone trend on a moving-average smoothed series.
pub fn smoothed_trend(series: &[f64], width: usize) -> f64 {
    let w = width.max(1);
    let sm: Vec<f64> = (0..series.len())
        .map(|i| {
            let lo = i.saturating_sub(w / 2);
            let hi = (i + w / 2 + 1).min(series.len());
            series[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let n = sm.len() as f64;
    if sm.len() < 2 {
        return 0.0;
    }
    let mx = (n - 1.0) / 2.0;
    let my = sm.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in sm.iter().enumerate() {
        sxy += (i as f64 - mx) * (y - my);
        sxx += (i as f64 - mx).powi(2);
    }
    sxy / sxx
}
