//! Operator words from the correlation and observable algebras, compiled on
//! the truncated composite space, and correlated initial states built from
//! Kraus words.

use num_complex::Complex64;

use crate::bath::{self, BathState, CompositeState, DiscretizedBath, FockTruncation};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, C0, C1};
use crate::model::SystemModel;
use crate::sector::{exp_i_mv, expmv, CompositeOp, Ensemble, SectorSpace};
use crate::thermal::{FunctionClass, Ladder, TestFunction};

#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    System(CMatrix),
    Create(TestFunction),
    Annihilate(TestFunction),
    /// `exp(prefactor · Σ_r B_r ⊗ a♯(f_r))`.
    ExpLinear { prefactor: Complex64, terms: Vec<(CMatrix, Ladder, TestFunction)> },
    /// `W(f) = exp(iφ(f))`.
    Weyl(TestFunction),
}

/// `scalar · F_1 F_2 ⋯ F_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorWord {
    pub factors: Vec<Factor>,
    pub scalar: Complex64,
}

impl OperatorWord {
    pub fn new(factors: Vec<Factor>) -> Self {
        OperatorWord { factors, scalar: C1 }
    }

    pub fn identity() -> Self {
        OperatorWord::new(vec![])
    }

    pub fn system(s: CMatrix) -> Self {
        OperatorWord::new(vec![Factor::System(s)])
    }

    pub fn weyl(f: TestFunction) -> Self {
        OperatorWord::new(vec![Factor::Weyl(f)])
    }

    pub fn scaled(mut self, s: Complex64) -> Self {
        self.scalar *= s;
        self
    }

    fn functions(&self) -> impl Iterator<Item = &TestFunction> {
        self.factors.iter().flat_map(|f| -> Box<dyn Iterator<Item = &TestFunction> + '_> {
            match f {
                Factor::System(_) => Box::new(std::iter::empty()),
                Factor::Create(t) | Factor::Annihilate(t) | Factor::Weyl(t) => Box::new(std::iter::once(t)),
                Factor::ExpLinear { terms, .. } => Box::new(terms.iter().map(|x| &x.2)),
            }
        })
    }

    /// Every test function must belong to `class`.
    pub fn check_class(&self, class: FunctionClass) -> Result<()> {
        for f in self.functions() {
            if f.class != class {
                return Err(Error::Validation(format!(
                    "word uses a {:?}-class test function where {:?} is required",
                    f.class, class
                )));
            }
            f.validate()?;
        }
        Ok(())
    }

    pub fn check_dims(&self, n: usize) -> Result<()> {
        for f in &self.factors {
            let mats: Vec<&CMatrix> = match f {
                Factor::System(s) => vec![s],
                Factor::ExpLinear { terms, .. } => terms.iter().map(|t| &t.0).collect(),
                _ => vec![],
            };
            if mats.iter().any(|m| m.nrows() != n || m.ncols() != n) {
                return Err(Error::Validation(format!("system factor is not {n}×{n}")));
            }
        }
        Ok(())
    }

    /// True when the word acts on the system alone.
    pub fn is_system_only(&self) -> bool {
        self.factors.iter().all(|f| matches!(f, Factor::System(_)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausSpec {
    pub words: Vec<OperatorWord>,
    pub normalize: bool,
}

impl KrausSpec {
    pub fn identity() -> Self {
        KrausSpec { words: vec![OperatorWord::identity()], normalize: false }
    }

    pub fn validate(&self, n: usize, beta: f64) -> Result<()> {
        if self.words.is_empty() {
            return Err(Error::Validation("a Kraus family needs at least one word".into()));
        }
        for w in &self.words {
            w.check_dims(n)?;
            w.check_class(FunctionClass::Cor)?;
            for f in w.functions() {
                f.check_cor(beta)?;
            }
        }
        Ok(())
    }
}

/// Diagnostics recorded while building an initial state.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StateLog {
    pub trace_before_normalization: f64,
    pub completeness_defect: Option<f64>,
    pub hermiticity_correction: f64,
    pub min_eigenvalue: Option<f64>,
    pub warnings: Vec<String>,
}

/// Bath operator `a†(f) = Σ_k c_k a_k†` or its adjoint on the truncated Fock space.
pub fn ladder_dense(bath: &DiscretizedBath, trunc: &FockTruncation, f: &TestFunction, kind: Ladder) -> CMatrix {
    let coeffs = bath.coefficients(f);
    let d = trunc.bath_dim();
    let mut create = CMatrix::zeros(d, d);
    for (k, ck) in coeffs.iter().enumerate() {
        if *ck != C0 {
            create += bath::annihilation(trunc, k).adjoint() * *ck;
        }
    }
    match kind {
        Ladder::Create => create,
        Ladder::Annihilate => create.adjoint(),
    }
}

/// `exp(iH)` for Hermitian `H` through its eigendecomposition.
fn exp_i_hermitian(h: &CMatrix) -> CMatrix {
    let (vals, vecs) = linalg::eigh(h);
    let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| Complex64::from_polar(1.0, v)),
    ));
    &vecs * phases * vecs.adjoint()
}

/// Composite matrix of a word on `ℂ^N ⊗ truncated bath`.
pub fn compile_dense(word: &OperatorWord, n: usize, bath: &DiscretizedBath, trunc: &FockTruncation) -> Result<CMatrix> {
    word.check_dims(n)?;
    let d = trunc.bath_dim();
    let id_s = linalg::identity(n);
    let id_b = linalg::identity(d);
    let mut out = linalg::identity(n * d) * word.scalar;
    for factor in &word.factors {
        let m = match factor {
            Factor::System(s) => linalg::kron(s, &id_b),
            Factor::Create(f) => linalg::kron(&id_s, &ladder_dense(bath, trunc, f, Ladder::Create)),
            Factor::Annihilate(f) => linalg::kron(&id_s, &ladder_dense(bath, trunc, f, Ladder::Annihilate)),
            Factor::ExpLinear { prefactor, terms } => {
                let mut gen = CMatrix::zeros(n * d, n * d);
                for (b, kind, f) in terms {
                    gen += linalg::kron(b, &ladder_dense(bath, trunc, f, *kind));
                }
                let e = linalg::expm(&(gen * *prefactor));
                if e.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::Numerical("matrix exponential of a linear word overflowed".into()));
                }
                e
            }
            Factor::Weyl(f) => {
                if f.is_zero() {
                    linalg::identity(n * d)
                } else {
                    let cr = ladder_dense(bath, trunc, f, Ladder::Create);
                    let phi = (&cr + cr.adjoint()) * c(std::f64::consts::FRAC_1_SQRT_2);
                    linalg::kron(&id_s, &exp_i_hermitian(&phi))
                }
            }
        };
        out *= m;
    }
    Ok(out)
}

/// A word compiled for the thermofield engine, applied to vectors right to left.
#[derive(Debug, Clone)]
pub struct SectorWord {
    factors: Vec<SectorFactor>,
    scalar: Complex64,
}

#[derive(Debug, Clone)]
enum SectorFactor {
    Op(CompositeOp),
    Exp(CompositeOp),
    /// `e^{iX}` with Hermitian `X`.
    ExpI(CompositeOp),
}

impl SectorWord {
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut x = v.to_vec();
        for f in self.factors.iter().rev() {
            x = match f {
                SectorFactor::Op(op) => op.apply(&x),
                SectorFactor::Exp(op) => expmv(op, &x),
                SectorFactor::ExpI(op) => exp_i_mv(op, &x),
            };
        }
        x.iter_mut().for_each(|z| *z *= self.scalar);
        x
    }

    pub fn expectation(&self, ens: &Ensemble) -> Complex64 {
        ens.vectors.iter().map(|v| crate::sector::inner(v, &self.apply(v))).sum()
    }
}

fn sector_ladder(space: &SectorSpace, bath: &DiscretizedBath, f: &TestFunction, kind: Ladder) -> crate::sector::Sparse {
    let coeffs = bath.coefficients(f);
    match kind {
        Ladder::Create => space.creation(&coeffs),
        Ladder::Annihilate => space.annihilation(&coeffs),
    }
}

pub fn compile_sector(word: &OperatorWord, n: usize, bath: &DiscretizedBath, space: &SectorSpace) -> Result<SectorWord> {
    word.check_dims(n)?;
    let id = linalg::identity(n);
    let factors = word
        .factors
        .iter()
        .filter(|f| !matches!(f, Factor::Weyl(t) if t.is_zero()))
        .map(|factor| match factor {
            Factor::System(s) => SectorFactor::Op(CompositeOp::system(s.clone())),
            Factor::Create(f) => SectorFactor::Op(CompositeOp::product(id.clone(), sector_ladder(space, bath, f, Ladder::Create))),
            Factor::Annihilate(f) => {
                SectorFactor::Op(CompositeOp::product(id.clone(), sector_ladder(space, bath, f, Ladder::Annihilate)))
            }
            Factor::ExpLinear { prefactor, terms } => {
                let mut op = CompositeOp::default();
                for (b, kind, f) in terms {
                    op.push(b * *prefactor, Some(sector_ladder(space, bath, f, *kind)));
                }
                SectorFactor::Exp(op)
            }
            Factor::Weyl(f) => SectorFactor::ExpI(CompositeOp::product(id.clone(), space.field(&bath.coefficients(f)))),
        })
        .collect();
    Ok(SectorWord { factors, scalar: word.scalar })
}

/// `ρ_SR = Σ_α K_α (ρ_{S,β} ⊗ ω_R) K_α†` on the truncated Fock space.
pub fn correlated_initial_state(
    spec: &KrausSpec,
    model: &SystemModel,
    bath: &DiscretizedBath,
    beta: f64,
    trunc: &FockTruncation,
    max_dim: usize,
) -> Result<(CompositeState, StateLog)> {
    let n = model.dim();
    spec.validate(n, beta)?;
    trunc.check(n, max_dim)?;
    let BathState { rho: omega, warnings } = bath::bath_thermal_state(bath, beta, trunc)?;
    let base = linalg::kron(&model.gibbs_state(beta), &omega);
    let mut rho = CMatrix::zeros(base.nrows(), base.ncols());
    let mut completeness = CMatrix::zeros(base.nrows(), base.ncols());
    for w in &spec.words {
        let k = compile_dense(w, n, bath, trunc)?;
        rho += linalg::conjugate(&k, &base);
        completeness += k.adjoint() * &k;
    }
    finish_state(rho, spec.normalize, n, trunc, warnings, Some(completeness))
}

fn finish_state(
    rho: CMatrix,
    normalize: bool,
    n: usize,
    trunc: &FockTruncation,
    warnings: Vec<String>,
    completeness: Option<CMatrix>,
) -> Result<(CompositeState, StateLog)> {
    let tr = rho.trace().re;
    if !(tr > 1e-12) {
        return Err(Error::Degenerate(format!("Kraus words produce a state of trace {tr:.3e}")));
    }
    let herm = linalg::hermiticity_defect(&rho);
    let mut rho = linalg::hermitize(&rho);
    let completeness_defect = completeness.map(|m| linalg::max_abs(&(m - linalg::identity(rho.nrows()))));
    if !normalize {
        if let Some(d) = completeness_defect {
            if d > 1e-6 {
                return Err(Error::Validation(format!("Kraus words are not complete: ‖ΣK†K - 1‖ = {d:.3e}")));
            }
        }
    } else {
        rho /= c(tr);
    }
    let min = linalg::min_eigenvalue_hermitian(&rho);
    let state = CompositeState { rho, n_sys: n, cutoffs: trunc.cutoffs.clone() };
    Ok((
        state,
        StateLog {
            trace_before_normalization: tr,
            completeness_defect,
            hermiticity_correction: herm,
            min_eigenvalue: Some(min),
            warnings,
        },
    ))
}

/// Thermofield ensemble `{√p_j K_α |j, vac⟩}` representing the same state.
pub fn correlated_ensemble(
    spec: &KrausSpec,
    model: &SystemModel,
    bath: &DiscretizedBath,
    beta: f64,
    space: &SectorSpace,
) -> Result<(Ensemble, StateLog)> {
    let n = model.dim();
    spec.validate(n, beta)?;
    let words: Vec<SectorWord> = spec.words.iter().map(|w| compile_sector(w, n, bath, space)).collect::<Result<_>>()?;
    let base = Ensemble::product(&model.gibbs_state(beta), space.dim());
    let mut vectors = Vec::with_capacity(words.len() * base.vectors.len());
    for w in &words {
        for v in &base.vectors {
            vectors.push(w.apply(v));
        }
    }
    let mut ens = Ensemble { n_sys: n, vectors };
    let tr = ens.trace();
    if !(tr > 1e-12) {
        return Err(Error::Degenerate(format!("Kraus words produce a state of trace {tr:.3e}")));
    }
    let mut log = StateLog { trace_before_normalization: tr, ..Default::default() };
    if spec.normalize {
        let s = c(1.0 / tr.sqrt());
        ens.vectors.iter_mut().flatten().for_each(|z| *z *= s);
    } else {
        log.completeness_defect = Some((tr - 1.0).abs());
        if (tr - 1.0).abs() > 1e-6 {
            return Err(Error::Validation(format!("Kraus words are not trace preserving on the initial state: trace {tr}")));
        }
    }
    Ok((ens, log))
}

/// `tr(ρ W)`.
pub fn expectation(state: &CompositeState, obs: &CMatrix) -> Complex64 {
    (&state.rho * obs).trace()
}

/// Expectation of a Hermitian observable; fails when the imaginary part exceeds 1e-9.
pub fn hermitian_expectation(state: &CompositeState, obs: &CMatrix) -> Result<f64> {
    let v = expectation(state, obs);
    if v.im.abs() > 1e-9 {
        return Err(Error::Numerical(format!("Hermitian observable has expectation with imaginary part {:.3e}", v.im)));
    }
    Ok(v.re)
}

/// `I(S:R) = S(ρ_S) + S(ρ_R) - S(ρ_SR)`.
pub fn mutual_information(state: &CompositeState) -> f64 {
    let rs = bath::partial_trace_system(state);
    let rr = bath::partial_trace_bath(state);
    linalg::entropy(&rs) + linalg::entropy(&rr) - linalg::entropy(&state.rho)
}
