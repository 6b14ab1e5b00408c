//! The five subcommands. Each returns an [`Outcome`]; errors carry their own
//! exit code through [`corrbath::Error::exit_code`].

use std::path::{Path, PathBuf};

use corrbath::analysis::{self, sha256_hex, GateReport, Provenance, VanHoveRow};
use corrbath::davies::{export_json, spectral_decomposition, DaviesGenerator};
use corrbath::model::{check_assumptions, AssumptionReport};
use corrbath::thermal::{fit_power_law, PowerFit};
use corrbath::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Resolved, RunConfig};
use crate::output::{self, write_atomic, write_json, VERSIONS};
use crate::table::TraceTable;

/// Result of a command that ran to completion.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Success,
    /// An assumption check or an analysis assertion failed.
    Failed(String),
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::Failed(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub max_dim: Option<usize>,
}

impl Options {
    fn config_path(&self) -> Result<PathBuf> {
        self.config.clone().ok_or_else(|| Error::Validation("--config is required for this command".into()))
    }

    fn load(&self, path: &Path) -> Result<(Resolved, String)> {
        let (mut cfg, src) = RunConfig::load(path)?;
        if let Some(m) = self.max_dim {
            cfg.run.max_dim = m;
        }
        Ok((cfg.resolve(&src)?, src))
    }

    fn out_dir(&self, r: Option<&Resolved>) -> Result<PathBuf> {
        self.out
            .clone()
            .or_else(|| r.and_then(|r| r.config.output.dir.as_ref().map(PathBuf::from)))
            .ok_or_else(|| Error::Validation("no output directory: pass --out or set output.dir".into()))
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let n = self.workers.unwrap_or(1).max(1);
        rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| Error::Internal(e.to_string()))
    }
}

fn assumption_failure(report: &AssumptionReport) -> Option<String> {
    let mut why = Vec::new();
    if !report.a1_ok {
        why.push("(A1) fails");
    }
    if !report.a2a_ok {
        why.push("(A2a) fails");
    }
    (!why.is_empty()).then(|| format!("{}: {}", why.join(", "), report.notes))
}

pub fn check(opts: &Options) -> Result<Outcome> {
    let path = opts.config_path()?;
    let (cfg, src) = RunConfig::load(&path)?;
    let (model, ff) = cfg.physics(&src)?;
    let report = check_assumptions(&model, &ff, cfg.model.fgr_tolerance);
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(out) = &opts.out {
        write_json(&out.join("assumptions.json"), &report)?;
    }
    Ok(match assumption_failure(&report) {
        Some(why) => Outcome::Failed(why),
        None => Outcome::Success,
    })
}

pub fn davies(opts: &Options) -> Result<Outcome> {
    let (r, _) = opts.load(&opts.config_path()?)?;
    let report = check_assumptions(&r.model, &r.ff, r.config.model.fgr_tolerance);
    if let Some(why) = assumption_failure(&report) {
        eprintln!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(Outcome::Failed(why));
    }
    let out = opts.out_dir(Some(&r))?;
    let settings = r.config.davies.unwrap_or_default();
    for &lambda in &r.config.run.lambdas {
        let gen = DaviesGenerator::build(&r.model, &r.ff, r.config.run.beta, lambda, &settings)?;
        let dec = spectral_decomposition(&gen, &settings)?;
        let zero = dec.zero_modes(1e-10);
        println!(
            "lambda = {lambda}: {} modes, {zero} zero mode(s), simple = {}, trace defect {:.2e}",
            dec.modes.len(),
            dec.simple,
            gen.trace_defect()
        );
        write_json(&out.join(output::DAVIES_DIR).join(format!("lambda_{lambda}.json")), &export_json(&gen, &dec, &settings))?;
    }
    Ok(Outcome::Success)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceEntry {
    pub scenario: String,
    pub lambda: f64,
    pub file: String,
    pub sha256: String,
    pub decomposition_defect: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateEntry {
    pub scenario: String,
    pub lambda: f64,
    pub report: GateReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateManifest {
    pub versions: output::Versions,
    pub config_hash: String,
    pub traces: Vec<TraceEntry>,
    pub gates: Vec<GateEntry>,
}

fn smallest(lambdas: &[f64]) -> f64 {
    lambdas.iter().copied().fold(f64::INFINITY, |a, b| if b.abs() < a.abs() { b } else { a })
}

fn run_simulation(opts: &Options, r: &Resolved, src: &str, out: &Path) -> Result<SimulateManifest> {
    write_atomic(&out.join(output::CONFIG_COPY), src.as_bytes())?;
    write_json(&out.join(output::RESOLVED_CONFIG), &r.config)?;
    let jobs: Vec<(usize, f64)> =
        (0..r.scenarios.len()).flat_map(|s| r.config.run.lambdas.iter().map(move |&l| (s, l))).collect();
    let pool = opts.pool()?;
    let traces = pool.install(|| {
        jobs.par_iter()
            .map(|&(s, lambda)| {
                let sc = &r.scenarios[s];
                let trace = analysis::run(&sc.base.with_lambda(lambda))?;
                let csv = trace.to_csv();
                let file = output::trace_file(sc.name(), lambda);
                write_atomic(&out.join(output::TRACE_DIR).join(&file), csv.as_bytes())?;
                Ok(TraceEntry {
                    scenario: sc.name().to_string(),
                    lambda,
                    file,
                    sha256: sha256_hex(csv.as_bytes()),
                    decomposition_defect: trace.decomposition_defect(),
                    provenance: trace.provenance,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut gates = Vec::new();
    if r.config.analysis.gate {
        let lambda = smallest(&r.config.run.lambdas);
        gates = pool.install(|| {
            r.scenarios
                .par_iter()
                .map(|sc| {
                    let report = analysis::convergence_gate(&sc.base.with_lambda(lambda))?;
                    Ok(GateEntry { scenario: sc.name().to_string(), lambda, report })
                })
                .collect::<Result<Vec<_>>>()
        })?;
    }
    let manifest = SimulateManifest { versions: VERSIONS, config_hash: r.hash.clone(), traces, gates };
    write_json(&out.join(output::SIMULATE_MANIFEST), &manifest)?;
    Ok(manifest)
}

pub fn simulate(opts: &Options) -> Result<Outcome> {
    let (r, src) = opts.load(&opts.config_path()?)?;
    let out = opts.out_dir(Some(&r))?;
    let m = run_simulation(opts, &r, &src, &out)?;
    for t in &m.traces {
        println!("{} lambda = {}: {} (dim {}, T_rec {:.3})", t.scenario, t.lambda, t.file, t.provenance.composite_dim, t.provenance.recurrence_time);
    }
    for g in &m.gates {
        println!("gate {} lambda = {}: {:?}", g.scenario, g.lambda, g.report);
    }
    Ok(Outcome::Success)
}

#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub id: String,
    pub scenario: String,
    pub observable: Option<String>,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitEntry {
    pub scenario: String,
    pub observable: String,
    pub lambda: f64,
    pub window: (f64, f64),
    pub fit: Option<PowerFit>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingEntry {
    pub scenario: String,
    pub quantity: String,
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeManifest {
    pub versions: output::Versions,
    pub config_hash: String,
    pub traces: Vec<TraceEntry>,
    pub gates: Vec<GateEntry>,
    pub scaling: Vec<ScalingEntry>,
    pub fits: Vec<FitEntry>,
    pub van_hove: Vec<VanHoveRow>,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", ")
}

struct Collector {
    assertions: Vec<Assertion>,
}

impl Collector {
    fn push(&mut self, id: &str, scenario: &str, observable: Option<&str>, passed: bool, detail: String) {
        self.assertions.push(Assertion {
            id: id.into(),
            scenario: scenario.into(),
            observable: observable.map(str::to_string),
            passed,
            detail,
        });
    }
}

fn analyze_dir(r: &Resolved, out: &Path, sim: SimulateManifest) -> Result<AnalyzeManifest> {
    let lambdas = r.lambdas_descending();
    let a = &r.config.analysis;
    let mut col = Collector { assertions: Vec::new() };
    let mut fits = Vec::new();
    let mut scaling = Vec::new();
    for sc in &r.scenarios {
        let name = sc.name();
        let mut tables = Vec::with_capacity(lambdas.len());
        for &l in &lambdas {
            let path = output::trace_path(out, name, l);
            if !path.exists() {
                return Err(Error::Validation(format!("missing trajectory {}; run `simulate` first", path.display())));
            }
            tables.push(TraceTable::read(&path)?);
        }
        for (t, &l) in tables.iter().zip(&lambdas) {
            let defect = t.decomposition_defect();
            col.push("decomposition_identity", name, None, defect <= 1e-12, format!("lambda {l}: max|exact - markov - chi_hat| = {defect:.3e}"));
            let d0 = t.chi_free_gap_at_zero();
            col.push("chi_hat_at_zero", name, None, d0 <= 1e-9, format!("lambda {l}: |chi_hat(0) - free_corr(0)| = {d0:.3e}"));
        }

        let sups: Vec<f64> = tables.iter().map(|t| t.markov_summary().0).collect();
        scaling.push(ScalingEntry { scenario: name.into(), quantity: "markov_error_sup".into(), lambdas: lambdas.clone(), values: sups.clone() });
        if sc.section.markov_monotone {
            col.push("markov_error_monotone", name, None, strictly_decreasing(&sups), format!("sup over lambdas {lambdas:?}: {}", fmt_list(&sups)));
            for (t, &l) in tables.iter().zip(&lambdas) {
                let (_, arg, edge) = t.markov_summary();
                col.push("markov_argmax_interior", name, None, !edge, format!("lambda {l}: argmax t = {arg}, window end {}", t.window_end()));
            }
        }

        for o in &sc.section.vanishing {
            let v: Vec<f64> = tables.iter().map(|t| t.max_abs_chi(o)).collect::<Result<_>>()?;
            scaling.push(ScalingEntry { scenario: name.into(), quantity: format!("max_abs_chi_hat[{o}]"), lambdas: lambdas.clone(), values: v.clone() });
            let ok = v.windows(2).all(|w| w[0] >= a.vanishing_factor * w[1]);
            col.push("chi_hat_vanishing_scaling", name, Some(o), ok, format!("max|chi_hat|: {} (need factor >= {} per step)", fmt_list(&v), a.vanishing_factor));
        }

        for o in &sc.section.free_compare {
            let v: Vec<f64> = tables.iter().map(|t| t.max_abs_chi_minus_free(o)).collect::<Result<_>>()?;
            scaling.push(ScalingEntry { scenario: name.into(), quantity: format!("max_abs_chi_hat_minus_free[{o}]"), lambdas: lambdas.clone(), values: v.clone() });
            col.push("free_comparison_scaling", name, Some(o), strictly_decreasing(&v), format!("max|chi_hat - free_corr|: {}", fmt_list(&v)));
        }

        for o in &sc.section.decay {
            for (i, (t, &l)) in tables.iter().zip(&lambdas).enumerate() {
                let window = (a.fit_start, a.fit_end.unwrap_or(t.window_end()));
                let series = t.abs_chi_series(o)?;
                let fit = fit_power_law(&series, window);
                if i + 1 == lambdas.len() {
                    let (ok, detail) = match &fit {
                        Ok(f) => (
                            f.exponent <= a.decay_max_exponent && f.r2 >= a.decay_min_r2,
                            format!("lambda {l}, window {window:?}: exponent {:.3}, r2 {:.4}", f.exponent, f.r2),
                        ),
                        Err(e) => (false, format!("lambda {l}: fit failed: {e}")),
                    };
                    col.push("chi_hat_power_law_decay", name, Some(o), ok, detail);
                }
                let (fit, error) = match fit {
                    Ok(f) => (Some(f), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                fits.push(FitEntry { scenario: name.into(), observable: o.clone(), lambda: l, window, fit, error });
            }
        }
    }
    for g in &sim.gates {
        col.push("convergence_gate", &g.scenario, None, g.report.passed(), format!("{:?}", g.report));
    }

    let mut van_hove = Vec::new();
    if let Some(vh) = &a.van_hove {
        let sc = r.scenarios.iter().find(|s| s.section.name == vh.scenario).expect("validated at resolve");
        let idx = sc.base.observables.iter().position(|o| o.name == vh.observable).expect("validated at resolve");
        van_hove = analysis::van_hove_check(&sc.base, idx, &vh.taus, &vh.lambdas)?;
        let tau_max = vh.taus.iter().copied().fold(0.0, f64::max);
        let mut at_tau: Vec<(f64, f64)> = van_hove.iter().filter(|row| row.tau == tau_max).map(|row| (row.lambda.abs(), row.deviation)).collect();
        at_tau.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
        let devs: Vec<f64> = at_tau.iter().map(|x| x.1).collect();
        col.push("van_hove_deviation_monotone", &vh.scenario, Some(&vh.observable), strictly_decreasing(&devs), format!("tau {tau_max}: deviations {}", fmt_list(&devs)));
    }

    let passed = col.assertions.iter().all(|x| x.passed);
    Ok(AnalyzeManifest {
        versions: VERSIONS,
        config_hash: r.hash.clone(),
        traces: sim.traces,
        gates: sim.gates,
        scaling,
        fits,
        van_hove,
        assertions: col.assertions,
        passed,
    })
}

fn finish_analysis(m: &AnalyzeManifest, out: &Path) -> Result<Outcome> {
    write_json(&out.join(output::ANALYZE_MANIFEST), m)?;
    for x in &m.assertions {
        let obs = x.observable.as_deref().map(|o| format!("[{o}]")).unwrap_or_default();
        println!("{} {}{} ({}): {}", if x.passed { "PASS" } else { "FAIL" }, x.id, obs, x.scenario, x.detail);
    }
    let failed = m.assertions.iter().filter(|x| !x.passed).count();
    Ok(if failed == 0 { Outcome::Success } else { Outcome::Failed(format!("{failed} assertion(s) failed")) })
}

/// Reads a prior `simulate` run; the configuration defaults to the copy
/// stored in the run directory.
pub fn analyze(opts: &Options) -> Result<Outcome> {
    let out = match &opts.out {
        Some(o) => o.clone(),
        None => {
            let (r, _) = opts.load(&opts.config_path()?)?;
            opts.out_dir(Some(&r))?
        }
    };
    let cfg_path = opts.config.clone().unwrap_or_else(|| out.join(output::CONFIG_COPY));
    if !cfg_path.exists() {
        return Err(Error::Validation(format!("missing configuration {}", cfg_path.display())));
    }
    let (r, _) = opts.load(&cfg_path)?;
    let sim_path = out.join(output::SIMULATE_MANIFEST);
    let sim_text = std::fs::read_to_string(&sim_path)
        .map_err(|_| Error::Validation(format!("missing {}; run `simulate` first", sim_path.display())))?;
    let sim = SimulateManifest::from_json(&sim_text)?;
    if sim.config_hash != r.hash {
        return Err(Error::Validation(format!(
            "trajectories in {} were produced by a different configuration (hash {} vs {})",
            out.display(),
            sim.config_hash,
            r.hash
        )));
    }
    let m = analyze_dir(&r, &out, sim)?;
    finish_analysis(&m, &out)
}

/// `simulate` followed by `analyze` on the same directory.
pub fn sweep(opts: &Options) -> Result<Outcome> {
    let (r, src) = opts.load(&opts.config_path()?)?;
    let out = opts.out_dir(Some(&r))?;
    let sim = run_simulation(opts, &r, &src, &out)?;
    let m = analyze_dir(&r, &out, sim)?;
    finish_analysis(&m, &out)
}

impl SimulateManifest {
    /// Recovers the pieces `analyze` needs from a stored manifest.
    fn from_json(text: &str) -> Result<SimulateManifest> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let hash = v["config_hash"].as_str().ok_or_else(|| Error::Validation("manifest lacks config_hash".into()))?;
        let traces = serde_json::from_value(v["traces"].clone())?;
        let gates = serde_json::from_value(v["gates"].clone())?;
        Ok(SimulateManifest { versions: VERSIONS, config_hash: hash.to_string(), traces, gates })
    }
}
