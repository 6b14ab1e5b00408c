//! Common interface over the dense Fock engine and the thermofield sector
//! engine, used by the trajectory analysis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{self, DiscretizedBath, FockTruncation};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C0, C1};
use crate::model::SystemModel;
use crate::sector::{Ensemble, SectorHamiltonian, SectorSpace};
use crate::states::{self, compile_dense, compile_sector, KrausSpec, OperatorWord, SectorWord, StateLog};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EngineSpec {
    /// Dense Fock space with per-mode cutoffs; thermal defaults raised by `raise`.
    Dense {
        #[serde(default)]
        cutoffs: Option<Vec<usize>>,
        #[serde(default)]
        raise: usize,
    },
    /// Thermofield doubling with at most `max_quanta` quanta.
    Thermofield { max_quanta: usize },
}

impl EngineSpec {
    /// Same engine one truncation level deeper.
    pub fn refined(&self) -> EngineSpec {
        match self {
            EngineSpec::Dense { cutoffs, raise } => EngineSpec::Dense {
                cutoffs: cutoffs.as_ref().map(|c| c.iter().map(|n| n + 1).collect()),
                raise: raise + 1,
            },
            EngineSpec::Thermofield { max_quanta } => EngineSpec::Thermofield { max_quanta: max_quanta + 1 },
        }
    }
}

/// Finite-bath simulator at one coupling strength with a fixed set of observables.
pub trait Backend: Sync {
    type State: Clone + Send + Sync;

    fn n_sys(&self) -> usize;
    fn dim(&self) -> usize;
    fn initial(&self, kraus: &KrausSpec) -> Result<(Self::State, StateLog)>;
    fn product(&self, sigma: &CMatrix) -> Self::State;
    /// Coupled evolution by `dt`.
    fn step(&self, s: &Self::State, dt: f64) -> Self::State;
    /// Uncoupled evolution by `dt`.
    fn free_step(&self, s: &Self::State, dt: f64) -> Self::State;
    /// Conjugation by `e^{iH_S τ} ⊗ 1`.
    fn rotate_system(&self, s: &Self::State, tau: f64) -> Self::State;
    fn system(&self, s: &Self::State) -> CMatrix;
    fn expect(&self, s: &Self::State, obs: usize) -> Complex64;
    /// `M` with `(σ ⊗ ω_R)(O) = tr(σ M)`.
    fn reservoir_factor(&self, obs: usize) -> CMatrix;
    fn born_distance(&self, s: &Self::State, sigma: &CMatrix) -> Result<f64>;
    fn warnings(&self) -> Vec<String>;
}

pub struct DenseBackend {
    model: SystemModel,
    n: usize,
    system_energies: Vec<f64>,
    trunc: FockTruncation,
    omega: CMatrix,
    h_vals: Vec<f64>,
    h_vecs: CMatrix,
    free_energies: Vec<f64>,
    observables: Vec<CMatrix>,
    bath: DiscretizedBath,
    beta: f64,
    max_dim: usize,
    warnings: Vec<String>,
}

impl DenseBackend {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        model: &SystemModel,
        bath: &DiscretizedBath,
        beta: f64,
        lambda: f64,
        trunc: FockTruncation,
        observables: &[OperatorWord],
        max_dim: usize,
    ) -> Result<Self> {
        let h = bath::hamiltonian(model, bath, lambda, &trunc, max_dim)?;
        let (h_vals, h_vecs) = linalg::eigh(&h);
        if h_vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("Hamiltonian eigendecomposition failed".into()));
        }
        let st = bath::bath_thermal_state(bath, beta, &trunc)?;
        let d = trunc.bath_dim();
        let mut bath_e = vec![0.0f64];
        for (m, &nk) in bath.modes.iter().zip(&trunc.cutoffs) {
            bath_e = bath_e.iter().flat_map(|e| (0..=nk).map(move |q| e + q as f64 * m.omega)).collect();
        }
        let free_energies = model.energies().iter().flat_map(|es| bath_e.iter().map(move |eb| es + eb)).collect();
        let observables = observables.iter().map(|w| compile_dense(w, model.dim(), bath, &trunc)).collect::<Result<_>>()?;
        debug_assert_eq!(st.rho.nrows(), d);
        Ok(DenseBackend {
            model: model.clone(),
            n: model.dim(),
            system_energies: model.energies().to_vec(),
            trunc,
            omega: st.rho,
            h_vals,
            h_vecs,
            free_energies,
            observables,
            bath: bath.clone(),
            beta,
            max_dim,
            warnings: st.warnings,
        })
    }

    fn conj_diag(rho: &CMatrix, phases: &[Complex64]) -> CMatrix {
        CMatrix::from_fn(rho.nrows(), rho.ncols(), |i, j| phases[i] * rho[(i, j)] * phases[j].conj())
    }
}

impl Backend for DenseBackend {
    type State = CMatrix;

    fn n_sys(&self) -> usize {
        self.n
    }

    fn dim(&self) -> usize {
        self.n * self.trunc.bath_dim()
    }

    fn initial(&self, kraus: &KrausSpec) -> Result<(CMatrix, StateLog)> {
        let (st, mut log) = states::correlated_initial_state(kraus, &self.model, &self.bath, self.beta, &self.trunc, self.max_dim)?;
        log.warnings.extend(self.warnings.iter().cloned());
        Ok((st.rho, log))
    }

    fn product(&self, sigma: &CMatrix) -> CMatrix {
        linalg::kron(sigma, &self.omega)
    }

    fn step(&self, s: &CMatrix, dt: f64) -> CMatrix {
        let phases: Vec<Complex64> = self.h_vals.iter().map(|&e| Complex64::from_polar(1.0, -e * dt)).collect();
        let inner = self.h_vecs.adjoint() * s * &self.h_vecs;
        let out = &self.h_vecs * Self::conj_diag(&inner, &phases) * self.h_vecs.adjoint();
        linalg::hermitize(&out)
    }

    fn free_step(&self, s: &CMatrix, dt: f64) -> CMatrix {
        let phases: Vec<Complex64> = self.free_energies.iter().map(|&e| Complex64::from_polar(1.0, -e * dt)).collect();
        Self::conj_diag(s, &phases)
    }

    fn rotate_system(&self, s: &CMatrix, tau: f64) -> CMatrix {
        let d = self.trunc.bath_dim();
        let phases: Vec<Complex64> =
            (0..self.dim()).map(|i| Complex64::from_polar(1.0, self.system_energies[i / d] * tau)).collect();
        Self::conj_diag(s, &phases)
    }

    fn system(&self, s: &CMatrix) -> CMatrix {
        linalg::partial_trace_second(s, self.n, self.trunc.bath_dim())
    }

    fn expect(&self, s: &CMatrix, obs: usize) -> Complex64 {
        (s * &self.observables[obs]).trace()
    }

    fn reservoir_factor(&self, obs: usize) -> CMatrix {
        let w = linalg::kron(&linalg::identity(self.n), &self.omega) * &self.observables[obs];
        linalg::partial_trace_second(&w, self.n, self.trunc.bath_dim())
    }

    fn born_distance(&self, s: &CMatrix, sigma: &CMatrix) -> Result<f64> {
        Ok(linalg::trace_distance(s, &self.product(sigma)))
    }

    fn warnings(&self) -> Vec<String> {
        self.warnings.clone()
    }
}

pub struct ThermofieldBackend {
    model: SystemModel,
    n: usize,
    space: SectorSpace,
    ham: SectorHamiltonian,
    observables: Vec<SectorWord>,
    bath: DiscretizedBath,
    beta: f64,
    system_energies: Vec<f64>,
}

impl ThermofieldBackend {
    pub fn new(
        model: &SystemModel,
        bath: &DiscretizedBath,
        beta: f64,
        lambda: f64,
        max_quanta: usize,
        observables: &[OperatorWord],
        max_dim: usize,
    ) -> Result<Self> {
        let space = SectorSpace::new(bath, beta, max_quanta, max_dim, model.dim())?;
        let ham = SectorHamiltonian::new(model, bath, &space, lambda);
        let observables = observables.iter().map(|w| compile_sector(w, model.dim(), bath, &space)).collect::<Result<_>>()?;
        Ok(ThermofieldBackend {
            model: model.clone(),
            n: model.dim(),
            space,
            ham,
            observables,
            bath: bath.clone(),
            beta,
            system_energies: model.energies().to_vec(),
        })
    }

    pub fn space(&self) -> &SectorSpace {
        &self.space
    }
}

impl Backend for ThermofieldBackend {
    type State = Ensemble;

    fn n_sys(&self) -> usize {
        self.n
    }

    fn dim(&self) -> usize {
        self.n * self.space.dim()
    }

    fn initial(&self, kraus: &KrausSpec) -> Result<(Ensemble, StateLog)> {
        states::correlated_ensemble(kraus, &self.model, &self.bath, self.beta, &self.space)
    }

    fn product(&self, sigma: &CMatrix) -> Ensemble {
        Ensemble::product(sigma, self.space.dim())
    }

    fn step(&self, s: &Ensemble, dt: f64) -> Ensemble {
        s.propagate(&self.ham, dt)
    }

    fn free_step(&self, s: &Ensemble, dt: f64) -> Ensemble {
        s.map(|v| self.ham.free_propagate(v, dt))
    }

    fn rotate_system(&self, s: &Ensemble, tau: f64) -> Ensemble {
        let d = self.space.dim();
        s.map(|v| {
            v.iter()
                .enumerate()
                .map(|(i, z)| z * Complex64::from_polar(1.0, self.system_energies[i / d] * tau))
                .collect()
        })
    }

    fn system(&self, s: &Ensemble) -> CMatrix {
        s.system_marginal()
    }

    fn expect(&self, s: &Ensemble, obs: usize) -> Complex64 {
        self.observables[obs].expectation(s)
    }

    fn reservoir_factor(&self, obs: usize) -> CMatrix {
        let d = self.space.dim();
        let mut m = CMatrix::zeros(self.n, self.n);
        for col in 0..self.n {
            let mut v = vec![C0; self.n * d];
            v[col * d + self.space.vacuum()] = C1;
            let w = self.observables[obs].apply(&v);
            for row in 0..self.n {
                m[(row, col)] = w[row * d + self.space.vacuum()];
            }
        }
        m
    }

    /// Distance on the doubled space; an upper bound for the distance of the
    /// physical states.
    fn born_distance(&self, s: &Ensemble, sigma: &CMatrix) -> Result<f64> {
        Ok(s.trace_distance(&self.product(sigma)))
    }

    fn warnings(&self) -> Vec<String> {
        Vec::new()
    }
}
