//! TOML run configuration: schema, defaults and resolution into scenarios.

use std::collections::BTreeMap;
use std::path::Path;

use corrbath::analysis::{BathSpec, NamedObservable, Scenario};
use corrbath::bath::DEFAULT_MAX_DIM;
use corrbath::davies::DaviesSettings;
use corrbath::engine::EngineSpec;
use corrbath::linalg::CMatrix;
use corrbath::model::{FormFactor, RadialProfile, SystemModel, DEFAULT_FGR_TOLERANCE};
use corrbath::sphere::Angular;
use corrbath::states::KrausSpec;
use corrbath::thermal::{FunctionClass, TestFunction};
use corrbath::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::word::{parse_word, Symbols};

/// A real number or a `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    pub fn value(self) -> Complex64 {
        match self {
            Entry::Real(r) => Complex64::new(r, 0.0),
            Entry::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

fn one() -> Entry {
    Entry::Real(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub label: String,
    pub beta: f64,
    pub lambdas: Vec<f64>,
    pub dt: f64,
    /// Defaults to half the recurrence time of the discretized bath.
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
}

fn default_max_dim() -> usize {
    DEFAULT_MAX_DIM
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub energies: Vec<f64>,
    /// Rows of `G` in the energy eigenbasis.
    pub coupling: Vec<Vec<Entry>>,
    #[serde(default = "default_fgr")]
    pub fgr_tolerance: f64,
}

fn default_fgr() -> f64 {
    DEFAULT_FGR_TOLERANCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSection {
    Constant { amplitude: f64 },
    Exponential { amplitude: f64, cutoff: f64 },
    Gaussian { amplitude: f64, width: f64 },
    General {
        amplitude: f64,
        poly: Vec<f64>,
        #[serde(default)]
        exp_rate: f64,
        #[serde(default)]
        gauss_rate: f64,
    },
}

impl ProfileSection {
    pub fn build(&self) -> RadialProfile {
        match self {
            ProfileSection::Constant { amplitude } => RadialProfile::constant(*amplitude),
            ProfileSection::Exponential { amplitude, cutoff } => RadialProfile::exponential(*amplitude, *cutoff),
            ProfileSection::Gaussian { amplitude, width } => RadialProfile::gaussian(*amplitude, *width),
            ProfileSection::General { amplitude, poly, exp_rate, gauss_rate } => {
                RadialProfile { amp: *amplitude, poly: poly.clone(), exp_rate: *exp_rate, gauss_rate: *gauss_rate }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormFactorSection {
    pub p: f64,
    pub q: f64,
    pub profile: ProfileSection,
    #[serde(default)]
    pub angular: Angular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSection {
    pub class: FunctionClass,
    pub p: f64,
    pub q: f64,
    pub profile: ProfileSection,
    #[serde(default)]
    pub angular: Angular,
    #[serde(default = "one")]
    pub amplitude: Entry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrausSection {
    pub normalize: bool,
    pub words: Vec<Spanned<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSection {
    pub name: String,
    pub word: Spanned<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    pub kraus: Spanned<String>,
    /// Observable names; all observables when omitted.
    #[serde(default)]
    pub observables: Option<Vec<String>>,
    /// Observables whose correlation part vanishes: `max|chi_hat|` must shrink
    /// by `vanishing_factor` per halving of λ.
    #[serde(default)]
    pub vanishing: Vec<String>,
    /// Observables whose `|chi_hat|` is fitted to a power law at the smallest λ.
    #[serde(default)]
    pub decay: Vec<String>,
    /// Observables for which `max|chi_hat - free_corr|` must decrease with λ.
    #[serde(default)]
    pub free_compare: Vec<String>,
    /// Require a strictly decreasing Markov error supremum with an interior argmax.
    #[serde(default = "yes")]
    pub markov_monotone: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VanHoveSection {
    pub scenario: String,
    pub observable: String,
    pub taus: Vec<f64>,
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default = "default_fit_start")]
    pub fit_start: f64,
    /// Defaults to the end of the time grid.
    #[serde(default)]
    pub fit_end: Option<f64>,
    #[serde(default = "default_max_exponent")]
    pub decay_max_exponent: f64,
    #[serde(default = "default_min_r2")]
    pub decay_min_r2: f64,
    #[serde(default = "default_vanishing_factor")]
    pub vanishing_factor: f64,
    /// Run the mode-doubling and truncation gate at the smallest λ.
    #[serde(default)]
    pub gate: bool,
    #[serde(default)]
    pub van_hove: Option<VanHoveSection>,
}

fn default_fit_start() -> f64 {
    5.0
}
fn default_max_exponent() -> f64 {
    -2.5
}
fn default_min_r2() -> f64 {
    0.9
}
fn default_vanishing_factor() -> f64 {
    1.5
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            fit_start: default_fit_start(),
            fit_end: None,
            decay_max_exponent: default_max_exponent(),
            decay_min_r2: default_min_r2(),
            vanishing_factor: default_vanishing_factor(),
            gate: false,
            van_hove: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<String>,
}

fn default_engine() -> EngineSpec {
    EngineSpec::Dense { cutoffs: None, raise: 0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub model: ModelSection,
    pub form_factor: FormFactorSection,
    pub bath: BathSpec,
    #[serde(default = "default_engine")]
    pub engine: EngineSpec,
    #[serde(default)]
    pub davies: Option<DaviesSettings>,
    #[serde(default)]
    pub matrices: BTreeMap<String, Vec<Vec<Entry>>>,
    #[serde(default)]
    pub functions: BTreeMap<String, FunctionSection>,
    #[serde(default)]
    pub kraus: BTreeMap<String, KrausSection>,
    #[serde(default)]
    pub observables: Vec<ObservableSection>,
    #[serde(default)]
    pub scenarios: Vec<ScenarioSection>,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Located configuration error.
fn at(src: &str, offset: usize, key: &str, message: impl Into<String>) -> Error {
    let line = src[..offset.min(src.len())].matches('\n').count() + 1;
    Error::Config { line, key: key.to_string(), message: message.into() }
}

/// Dotted key written on the line containing `offset`, qualified by the
/// nearest table header above it.
fn key_at(src: &str, offset: usize) -> String {
    let offset = offset.min(src.len());
    let start = src[..offset].rfind('\n').map(|i| i + 1).unwrap_or(0);
    let line = src[start..].lines().next().unwrap_or("");
    let table = src[..start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').to_string());
    let key = line.split_once('=').map(|(k, _)| k.trim().to_string()).unwrap_or_default();
    match (table, key.is_empty()) {
        (Some(t), false) => format!("{t}.{key}"),
        (Some(t), true) => t,
        (None, false) => key,
        (None, true) => "(document)".into(),
    }
}

/// Line of the first occurrence of `needle`, for keys without a span.
fn find_key(src: &str, needle: &str) -> usize {
    src.find(needle).unwrap_or(0)
}

fn matrix_from_rows(rows: &[Vec<Entry>], what: &str) -> std::result::Result<CMatrix, String> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(format!("{what} must be a square, nonempty table of rows"));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j].value()))
}

/// Everything a command needs, validated.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub model: SystemModel,
    pub ff: FormFactor,
    pub scenarios: Vec<ResolvedScenario>,
    /// sha256 of the canonical JSON form of the configuration.
    pub hash: String,
}

#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub section: ScenarioSection,
    /// The scenario at the first configured coupling.
    pub base: Scenario,
}

impl ResolvedScenario {
    pub fn name(&self) -> &str {
        &self.section.name
    }
}

impl RunConfig {
    pub fn parse(src: &str) -> Result<RunConfig> {
        toml::from_str(src).map_err(|e| {
            let offset = e.span().map(|s| s.start).unwrap_or(0);
            at(src, offset, &key_at(src, offset), e.message().trim().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<(RunConfig, String)> {
        let src = std::fs::read_to_string(path)?;
        Ok((RunConfig::parse(&src)?, src))
    }

    /// Model and form factor only; enough for the assumption check.
    pub fn physics(&self, src: &str) -> Result<(SystemModel, FormFactor)> {
        let g = matrix_from_rows(&self.model.coupling, "model.coupling").map_err(|m| at(src, find_key(src, "coupling"), "model.coupling", m))?;
        let model = SystemModel::new(self.model.energies.clone(), g)
            .map_err(|e| at(src, find_key(src, "[model]"), "model", e.to_string()))?;
        let ff = FormFactor::new(self.form_factor.p, self.form_factor.q, self.form_factor.profile.build())
            .map(|f| f.with_angular(self.form_factor.angular))
            .map_err(|e| at(src, find_key(src, "[form_factor]"), "form_factor", e.to_string()))?;
        Ok((model, ff))
    }

    /// Validates every section and builds the scenarios. `src` is the text the
    /// configuration was parsed from, used for error locations.
    pub fn resolve(self, src: &str) -> Result<Resolved> {
        let (model, ff) = self.physics(src)?;
        let run = &self.run;
        if run.lambdas.is_empty() {
            return Err(at(src, find_key(src, "lambdas"), "run.lambdas", "at least one coupling is required"));
        }
        if !(run.beta > 0.0 && run.beta.is_finite()) {
            return Err(at(src, find_key(src, "beta"), "run.beta", "inverse temperature must be positive"));
        }
        if !(run.dt > 0.0) {
            return Err(at(src, find_key(src, "dt"), "run.dt", "time step must be positive"));
        }

        let mut matrices = BTreeMap::new();
        for (name, rows) in &self.matrices {
            let key = format!("matrices.{name}");
            let m = matrix_from_rows(rows, &key).map_err(|msg| at(src, find_key(src, name), &key, msg))?;
            if m.nrows() != model.dim() {
                return Err(at(src, find_key(src, name), &key, format!("matrix is {}×{}, system dimension is {}", m.nrows(), m.nrows(), model.dim())));
            }
            matrices.insert(name.clone(), m);
        }
        let mut functions = BTreeMap::new();
        for (name, f) in &self.functions {
            let key = format!("functions.{name}");
            let tf = TestFunction::new(f.class, f.p, f.q, f.profile.build())
                .map(|t| t.with_angular(f.angular).scaled(f.amplitude.value()))
                .map_err(|e| at(src, find_key(src, &format!("[functions.{name}]")), &key, e.to_string()))?;
            if f.class == FunctionClass::Cor {
                tf.check_cor(run.beta).map_err(|e| at(src, find_key(src, &format!("[functions.{name}]")), &key, e.to_string()))?;
            }
            functions.insert(name.clone(), tf);
        }
        let sym = Symbols { matrices: &matrices, functions: &functions };

        let mut kraus = BTreeMap::new();
        for (name, k) in &self.kraus {
            let key = format!("kraus.{name}.words");
            let mut words = Vec::with_capacity(k.words.len());
            for w in &k.words {
                let word = parse_word(w.get_ref(), &sym).map_err(|m| at(src, w.span().start, &key, m))?;
                words.push(word);
            }
            let spec = KrausSpec { words, normalize: k.normalize };
            spec.validate(model.dim(), run.beta).map_err(|e| {
                let off = k.words.first().map(|w| w.span().start).unwrap_or_else(|| find_key(src, name));
                at(src, off, &key, e.to_string())
            })?;
            kraus.insert(name.clone(), spec);
        }

        let mut observables: Vec<NamedObservable> = Vec::with_capacity(self.observables.len());
        for o in &self.observables {
            let key = format!("observables.{}", o.name);
            if observables.iter().any(|x| x.name == o.name) {
                return Err(at(src, o.word.span().start, &key, "duplicate observable name"));
            }
            let word = parse_word(o.word.get_ref(), &sym).map_err(|m| at(src, o.word.span().start, &key, m))?;
            word.check_class(FunctionClass::Obs).map_err(|e| at(src, o.word.span().start, &key, e.to_string()))?;
            word.check_dims(model.dim()).map_err(|e| at(src, o.word.span().start, &key, e.to_string()))?;
            observables.push(NamedObservable { name: o.name.clone(), word });
        }

        let mut scenarios = Vec::with_capacity(self.scenarios.len());
        for s in &self.scenarios {
            let key = format!("scenarios.{}", s.name);
            let spec = kraus
                .get(s.kraus.get_ref())
                .cloned()
                .ok_or_else(|| at(src, s.kraus.span().start, &key, format!("unknown kraus spec `{}`", s.kraus.get_ref())))?;
            let off = s.kraus.span().start;
            let chosen: Vec<NamedObservable> = match &s.observables {
                None => observables.clone(),
                Some(names) => names
                    .iter()
                    .map(|n| {
                        observables.iter().find(|o| &o.name == n).cloned().ok_or_else(|| at(src, off, &key, format!("unknown observable `{n}`")))
                    })
                    .collect::<Result<_>>()?,
            };
            for n in s.vanishing.iter().chain(&s.decay).chain(&s.free_compare) {
                if !chosen.iter().any(|o| &o.name == n) {
                    return Err(at(src, off, &key, format!("assertion refers to observable `{n}` not in this scenario")));
                }
            }
            if scenarios.iter().any(|x: &ResolvedScenario| x.section.name == s.name) {
                return Err(at(src, off, &key, "duplicate scenario name"));
            }
            let base = Scenario {
                label: s.name.clone(),
                model: model.clone(),
                ff: ff.clone(),
                beta: run.beta,
                lambda: run.lambdas[0],
                bath: self.bath,
                engine: self.engine.clone(),
                max_dim: run.max_dim,
                kraus: spec,
                observables: chosen,
                dt: run.dt,
                t_max: run.t_max,
                davies: self.davies.unwrap_or_default(),
            };
            scenarios.push(ResolvedScenario { section: s.clone(), base });
        }
        if let Some(vh) = &self.analysis.van_hove {
            let off = find_key(src, "van_hove");
            let sc = scenarios
                .iter()
                .find(|s| s.section.name == vh.scenario)
                .ok_or_else(|| at(src, off, "analysis.van_hove.scenario", format!("unknown scenario `{}`", vh.scenario)))?;
            if !sc.base.observables.iter().any(|o| o.name == vh.observable) {
                return Err(at(src, off, "analysis.van_hove.observable", format!("unknown observable `{}`", vh.observable)));
            }
        }
        let hash = corrbath::analysis::sha256_hex(serde_json::to_string(&self)?.as_bytes());
        Ok(Resolved { config: self, model, ff, scenarios, hash })
    }
}

impl Resolved {
    pub fn load(path: &Path) -> Result<Resolved> {
        let (cfg, src) = RunConfig::load(path)?;
        cfg.resolve(&src)
    }

    /// Couplings in descending order, as used by the scaling assertions.
    pub fn lambdas_descending(&self) -> Vec<f64> {
        let mut l = self.config.run.lambdas.clone();
        l.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap());
        l
    }
}
