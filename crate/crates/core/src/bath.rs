//! Finite-mode reservoir: discretization of the spectral density, Fock-space
//! truncation and exact dense dynamics of the coupled system.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, C0, C1};
use crate::model::{FormFactor, SystemModel};
use crate::quadrature::{gauss_legendre, integrate, QuadSettings};
use crate::thermal::{coth_half, occupation, TestFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    UniformMidpoint,
    GaussSpectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub omega: f64,
    /// Coupling amplitude `g_k`.
    pub g: Complex64,
    /// Quadrature weight `W_k` of the measure `(2/π)J(ω)dω`; `|g_k|² = W_k`.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedBath {
    pub modes: Vec<Mode>,
    pub scheme: Scheme,
    pub omega_max: f64,
    pub form_factor: FormFactor,
    pub provenance: String,
}

fn measure_density(ff: &FormFactor, w: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    2.0 / PI * ff.spectral_density(w).unwrap_or(0.0)
}

/// Fine composite Gauss–Legendre discretization of `(2/π)J` on `[0, ω_max]`,
/// geometrically graded towards the origin.
fn fine_measure(ff: &FormFactor, omega_max: f64, min_points: usize) -> (Vec<f64>, Vec<f64>) {
    let order = 16;
    let (x, w) = gauss_legendre(order);
    let mut edges = vec![0.0];
    let head = omega_max / 32.0;
    for k in (0..24).rev() {
        edges.push(head * 0.5f64.powi(k));
    }
    let uniform = (min_points / order).max(64);
    for i in 1..=uniform {
        edges.push(head + (omega_max - head) * i as f64 / uniform as f64);
    }
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let h = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        for (xi, wi) in x.iter().zip(&w) {
            let node = m + h * xi;
            let mu = measure_density(ff, node) * wi * h;
            if mu > 0.0 {
                nodes.push(node);
                weights.push(mu);
            }
        }
    }
    (nodes, weights)
}

/// Gauss rule for a discrete measure by Lanczos with full
/// reorthogonalization followed by the Golub–Welsch eigenproblem.
fn gauss_from_measure(nodes: &[f64], weights: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("spectral density vanishes on the discretization interval".into()));
    }
    if n > nodes.len() {
        return Err(Error::Internal("fine measure has fewer points than requested nodes".into()));
    }
    let m = nodes.len();
    let mut qs: Vec<Vec<f64>> = Vec::with_capacity(n);
    let q0: Vec<f64> = weights.iter().map(|w| (w / total).sqrt()).collect();
    qs.push(q0);
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    for j in 0..n {
        let q = &qs[j];
        let a: f64 = (0..m).map(|i| nodes[i] * q[i] * q[i]).sum();
        alpha.push(a);
        if j + 1 == n {
            break;
        }
        let mut r: Vec<f64> = (0..m).map(|i| nodes[i] * q[i]).collect();
        for _ in 0..2 {
            for prev in &qs {
                let d: f64 = (0..m).map(|i| r[i] * prev[i]).sum();
                for i in 0..m {
                    r[i] -= d * prev[i];
                }
            }
        }
        let b = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(b > 1e-300) {
            return Err(Error::Numerical(format!("Lanczos breakdown at step {j}")));
        }
        beta.push(b);
        qs.push(r.into_iter().map(|x| x / b).collect());
    }
    let jac = DMatrix::from_fn(n, n, |i, k| {
        if i == k {
            alpha[i]
        } else if i + 1 == k {
            beta[i]
        } else if k + 1 == i {
            beta[k]
        } else {
            0.0
        }
    });
    let eig = jac.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], total * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(pairs.into_iter().unzip())
}

/// Replaces the continuum reservoir by `n_modes` oscillators.
pub fn discretize(ff: &FormFactor, n_modes: usize, omega_max: f64, scheme: Scheme) -> Result<DiscretizedBath> {
    if n_modes == 0 {
        return Err(Error::Validation("a discretized bath needs at least one mode".into()));
    }
    if !(omega_max > 0.0 && omega_max.is_finite()) {
        return Err(Error::Validation(format!("cutoff frequency must be positive, got {omega_max}")));
    }
    let (omegas, weights) = match scheme {
        Scheme::UniformMidpoint => {
            let dw = omega_max / n_modes as f64;
            let om: Vec<f64> = (0..n_modes).map(|k| (k as f64 + 0.5) * dw).collect();
            let w: Vec<f64> = om.iter().map(|&x| measure_density(ff, x) * dw).collect();
            if w.iter().all(|&x| x == 0.0) {
                return Err(Error::Degenerate("spectral density vanishes at every midpoint".into()));
            }
            (om, w)
        }
        Scheme::GaussSpectral => {
            let (nodes, mu) = fine_measure(ff, omega_max, (20 * n_modes).max(4000));
            gauss_from_measure(&nodes, &mu, n_modes)?
        }
    };
    let modes = omegas
        .into_iter()
        .zip(weights)
        .map(|(omega, weight)| Mode { omega, g: c(weight.sqrt()), weight })
        .collect();
    Ok(DiscretizedBath { modes, scheme, omega_max, form_factor: ff.clone(), provenance: ff.hash() })
}

impl DiscretizedBath {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn freqs(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.omega).collect()
    }

    pub fn couplings(&self) -> Vec<Complex64> {
        self.modes.iter().map(|m| m.g).collect()
    }

    /// Mode coefficients `c_k(f) = √W_k · ∫ḡ f dΣ / ∫|g|² dΣ` at `|k| = ω_k`.
    /// For `f = g` they reproduce the couplings `g_k`.
    pub fn coefficients(&self, f: &TestFunction) -> Vec<Complex64> {
        let ff = &self.form_factor;
        let ang = ff.angular.overlap(&f.angular) / ff.angular.norm_sq();
        self.modes
            .iter()
            .map(|m| {
                let g = ff.radial(m.omega);
                if g == 0.0 {
                    return C0;
                }
                f.radial(m.omega) * (m.weight.sqrt() * ang / g)
            })
            .collect()
    }

    /// `Σ_k |g_k|² ω_k^m`.
    pub fn moment(&self, m: i32) -> f64 {
        self.modes.iter().map(|x| x.weight * x.omega.powi(m)).sum()
    }

    /// `½ Σ_k |g_k|² [coth(βω_k/2) cos ω_k t - i sin ω_k t]`.
    pub fn autocorrelation(&self, beta: f64, t: f64) -> Complex64 {
        self.modes
            .iter()
            .map(|m| {
                let (s, cs) = (m.omega * t).sin_cos();
                Complex64::new(coth_half(beta, m.omega) * cs, -s) * (0.5 * m.weight)
            })
            .sum()
    }

    /// `Σ_k |c_k|² coth(βω_k/2)` for coefficient vectors.
    pub fn coth_form(&self, coeffs: &[Complex64], beta: f64) -> f64 {
        coeffs.iter().zip(&self.modes).map(|(c, m)| c.norm_sqr() * coth_half(beta, m.omega)).sum()
    }
}

/// `(2/π)∫_0^{ω_max} J(ω) ω^m dω` by adaptive quadrature.
pub fn continuum_moment(ff: &FormFactor, omega_max: f64, m: i32) -> Result<f64> {
    Ok(integrate(|w: f64| measure_density(ff, w) * w.powi(m), 0.0, omega_max, &QuadSettings::default())?.value)
}

/// Window bound `2π/Δω`. Uniform grids use their spacing; Gauss nodes use
/// the largest gap between neighbouring nodes, the smallest resulting time.
pub fn recurrence_time(bath: &DiscretizedBath) -> Result<f64> {
    if bath.len() < 2 {
        return Err(Error::Validation("recurrence time needs at least two modes".into()));
    }
    let mut w = bath.freqs();
    w.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let gap = match bath.scheme {
        Scheme::UniformMidpoint => bath.omega_max / bath.len() as f64,
        Scheme::GaussSpectral => w.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max),
    };
    Ok(2.0 * PI / gap)
}

/// Per-mode Fock cutoffs `n_k` (occupations `0..=n_k`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockTruncation {
    pub cutoffs: Vec<usize>,
}

pub const DEFAULT_MAX_DIM: usize = 200_000;

impl FockTruncation {
    /// `n_k = ⌈8 n̄(ω_k) + 4⌉`.
    pub fn thermal_default(bath: &DiscretizedBath, beta: f64) -> Self {
        FockTruncation {
            cutoffs: bath.modes.iter().map(|m| (8.0 * occupation(beta, m.omega) + 4.0).ceil() as usize).collect(),
        }
    }

    pub fn uniform(n_modes: usize, cutoff: usize) -> Self {
        FockTruncation { cutoffs: vec![cutoff; n_modes] }
    }

    pub fn bath_dim(&self) -> usize {
        self.cutoffs.iter().fold(1usize, |acc, n| acc.saturating_mul(n + 1))
    }

    pub fn composite_dim(&self, n_sys: usize) -> usize {
        self.bath_dim().saturating_mul(n_sys)
    }

    pub fn raised(&self, by: usize) -> Self {
        FockTruncation { cutoffs: self.cutoffs.iter().map(|n| n + by).collect() }
    }

    pub fn check(&self, n_sys: usize, max_dim: usize) -> Result<()> {
        let d = self.composite_dim(n_sys);
        if d > max_dim {
            return Err(Error::Resource { what: "composite Fock space".into(), dim: d, limit: max_dim });
        }
        Ok(())
    }
}

/// Density matrix on `ℂ^N ⊗ ⊗_k ℂ^{n_k+1}`, system index slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeState {
    pub rho: CMatrix,
    pub n_sys: usize,
    pub cutoffs: Vec<usize>,
}

impl CompositeState {
    pub fn bath_dim(&self) -> usize {
        self.rho.nrows() / self.n_sys
    }

    pub fn validate(&self) -> Result<()> {
        let h = linalg::hermiticity_defect(&self.rho);
        let t = self.rho.trace();
        let min = linalg::min_eigenvalue_hermitian(&self.rho);
        if h > 1e-10 || (t - C1).norm() > 1e-10 || min < -1e-8 {
            return Err(Error::Validation(format!(
                "not a density matrix: hermiticity defect {h:.2e}, trace {t}, minimal eigenvalue {min:.2e}"
            )));
        }
        Ok(())
    }
}

/// Truncated Gibbs state of the bath plus warnings for heavy discarded tails.
#[derive(Debug, Clone)]
pub struct BathState {
    pub rho: CMatrix,
    pub warnings: Vec<String>,
}

fn single_mode_annihilation(cutoff: usize) -> CMatrix {
    let d = cutoff + 1;
    let mut a = CMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = c((n as f64).sqrt());
    }
    a
}

/// Annihilation operator of mode `k` on the full truncated bath space.
pub fn annihilation(trunc: &FockTruncation, k: usize) -> CMatrix {
    let mut out = linalg::identity(1);
    for (j, &n) in trunc.cutoffs.iter().enumerate() {
        let factor = if j == k { single_mode_annihilation(n) } else { linalg::identity(n + 1) };
        out = linalg::kron(&out, &factor);
    }
    out
}

pub fn bath_thermal_state(bath: &DiscretizedBath, beta: f64, trunc: &FockTruncation) -> Result<BathState> {
    if trunc.cutoffs.len() != bath.len() {
        return Err(Error::Validation("truncation and bath have different mode counts".into()));
    }
    let mut diag = vec![1.0f64];
    let mut warnings = Vec::new();
    for (m, &n) in bath.modes.iter().zip(&trunc.cutoffs) {
        let x = (-beta * m.omega).exp();
        let discarded = x.powi(n as i32 + 1);
        if discarded > 1e-6 {
            warnings.push(format!(
                "mode at ω = {:.4} truncated at n = {n} discards Boltzmann weight {discarded:.2e}",
                m.omega
            ));
        }
        let p: Vec<f64> = (0..=n).map(|k| x.powi(k as i32)).collect();
        let z: f64 = p.iter().sum();
        let mut next = Vec::with_capacity(diag.len() * (n + 1));
        for d in &diag {
            for pk in &p {
                next.push(d * pk / z);
            }
        }
        diag = next;
    }
    let rho = CMatrix::from_diagonal(&DVector::from_iterator(diag.len(), diag.into_iter().map(c)));
    Ok(BathState { rho, warnings })
}

/// `(1/√2) Σ_k (v_k a_k† + v̄_k a_k)` on the truncated bath.
pub fn field_operator(trunc: &FockTruncation, coeffs: &[Complex64]) -> CMatrix {
    let d = trunc.bath_dim();
    let mut out = CMatrix::zeros(d, d);
    for (k, v) in coeffs.iter().enumerate() {
        if *v == C0 {
            continue;
        }
        let a = annihilation(trunc, k);
        out += (a.adjoint() * *v + a * v.conj()) * c(std::f64::consts::FRAC_1_SQRT_2);
    }
    out
}

pub fn hamiltonian(model: &SystemModel, bath: &DiscretizedBath, lambda: f64, trunc: &FockTruncation, max_dim: usize) -> Result<CMatrix> {
    trunc.check(model.dim(), max_dim)?;
    if trunc.cutoffs.len() != bath.len() {
        return Err(Error::Validation("truncation and bath have different mode counts".into()));
    }
    let d = trunc.bath_dim();
    let mut hb = CMatrix::zeros(d, d);
    for (k, m) in bath.modes.iter().enumerate() {
        let a = annihilation(trunc, k);
        hb += a.adjoint() * a * c(m.omega);
    }
    let mut h = linalg::kron(&model.hamiltonian(), &linalg::identity(d)) + linalg::kron(&linalg::identity(model.dim()), &hb);
    if lambda != 0.0 {
        let phi = field_operator(trunc, &bath.couplings());
        h += linalg::kron(model.coupling(), &phi) * c(lambda);
    }
    Ok(linalg::hermitize(&h))
}

/// Trajectory with the sizes of the re-Hermitization and renormalization corrections.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub states: Vec<CompositeState>,
    pub corrections: Vec<(f64, f64)>,
}

/// `ρ(t) = e^{-itH} ρ e^{itH}` for every `t` of the grid, from one eigendecomposition.
pub fn evolve(h: &CMatrix, state: &CompositeState, t_grid: &[f64]) -> Result<Evolution> {
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Validation("time grid must be sorted".into()));
    }
    let (vals, vecs) = linalg::eigh(h);
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("Hamiltonian eigendecomposition produced non-finite values".into()));
    }
    let rho_e = vecs.adjoint() * &state.rho * &vecs;
    let mut states = Vec::with_capacity(t_grid.len());
    let mut corrections = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let phase: Vec<Complex64> = vals.iter().map(|&e| Complex64::from_polar(1.0, -e * t)).collect();
        let evolved = CMatrix::from_fn(rho_e.nrows(), rho_e.ncols(), |i, j| phase[i] * rho_e[(i, j)] * phase[j].conj());
        let rho = &vecs * evolved * vecs.adjoint();
        let herm = linalg::hermiticity_defect(&rho);
        let rho = linalg::hermitize(&rho);
        let tr = rho.trace().re;
        states.push(CompositeState { rho: rho / c(tr), n_sys: state.n_sys, cutoffs: state.cutoffs.clone() });
        corrections.push((herm, (tr - 1.0).abs()));
    }
    Ok(Evolution { states, corrections })
}

pub fn partial_trace_system(state: &CompositeState) -> CMatrix {
    linalg::partial_trace_second(&state.rho, state.n_sys, state.bath_dim())
}

/// Marginal on the bath.
pub fn partial_trace_bath(state: &CompositeState) -> CMatrix {
    linalg::partial_trace_first(&state.rho, state.n_sys, state.bath_dim())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{two_level, RadialProfile};
    use crate::thermal::FunctionClass;

    fn ff() -> FormFactor {
        FormFactor::new(0.5, 2.5, RadialProfile::exponential(1.0, 1.0)).unwrap()
    }

    #[test]
    fn gauss_moments_are_exact() {
        let f = ff();
        let bath = discretize(&f, 12, 10.0, Scheme::GaussSpectral).unwrap();
        for m in [0, 1, 5, 11, 20] {
            let exact = continuum_moment(&f, 10.0, m).unwrap();
            assert!((bath.moment(m) - exact).abs() <= 1e-10 * exact, "moment {m}");
        }
        // coupling amplitudes are reproduced by the test-function projection
        let g = TestFunction::from_form_factor(&f, FunctionClass::Obs);
        for (ck, m) in bath.coefficients(&g).iter().zip(&bath.modes) {
            assert!((ck - m.g).norm() < 1e-14 * m.g.norm());
        }
    }

    #[test]
    fn recurrence_times() {
        let b = discretize(&ff(), 200, 10.0, Scheme::UniformMidpoint).unwrap();
        assert!((recurrence_time(&b).unwrap() - 2.0 * PI / 0.05).abs() < 1e-9);
        assert!((recurrence_time(&b).unwrap() - 125.66).abs() < 0.01);
        let g = discretize(&ff(), 30, 10.0, Scheme::GaussSpectral).unwrap();
        let w = g.freqs();
        let max_gap = w.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max);
        assert!((recurrence_time(&g).unwrap() - 2.0 * PI / max_gap).abs() < 1e-12);
    }

    #[test]
    fn thermal_occupation_and_zero_temperature() {
        let b = discretize(&ff(), 2, 3.0, Scheme::UniformMidpoint).unwrap();
        let beta = 1.3;
        let trunc = FockTruncation::uniform(2, 24);
        let st = bath_thermal_state(&b, beta, &trunc).unwrap();
        assert!(st.warnings.is_empty());
        for k in 0..2 {
            let a = annihilation(&trunc, k);
            let n = (&st.rho * a.adjoint() * &a).trace().re;
            assert!((n - occupation(beta, b.modes[k].omega)).abs() < 1e-8);
        }
        let cold = bath_thermal_state(&b, 1e3, &FockTruncation::thermal_default(&b, 1e3)).unwrap();
        assert!((cold.rho[(0, 0)].re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rabi_ground_energy_and_free_spectrum() {
        let model = two_level(1.0);
        let f = ff();
        let mut b = discretize(&f, 1, 2.0, Scheme::UniformMidpoint).unwrap();
        b.modes[0] = Mode { omega: 1.0, g: c(0.8), weight: 0.64 };
        let trunc = FockTruncation::uniform(1, 30);
        let h = hamiltonian(&model, &b, 0.5, &trunc, DEFAULT_MAX_DIM).unwrap();
        let (vals, _) = linalg::eigh(&h);
        // independent oracle: real symmetric Rabi matrix in the |s, n⟩ basis
        let d = 31;
        let coupling = 0.5 * 0.8 / 2f64.sqrt();
        let m = DMatrix::from_fn(2 * d, 2 * d, |i, j| {
            let (si, ni) = (i / d, i % d);
            let (sj, nj) = (j / d, j % d);
            let mut v = 0.0;
            if i == j {
                v += si as f64 + ni as f64;
            }
            if si != sj {
                if ni == nj + 1 {
                    v += coupling * (ni as f64).sqrt();
                }
                if nj == ni + 1 {
                    v += coupling * (nj as f64).sqrt();
                }
            }
            v
        });
        let oracle = m.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((vals[0] - oracle).abs() < 1e-10);

        let h0 = hamiltonian(&model, &b, 0.0, &trunc, DEFAULT_MAX_DIM).unwrap();
        let (v0, _) = linalg::eigh(&h0);
        let mut expected: Vec<f64> = (0..2).flat_map(|s| (0..=30).map(move |n| s as f64 + n as f64)).collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in v0.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn evolution_preserves_purity_and_energy() {
        let model = two_level(1.0);
        let b = discretize(&ff(), 2, 3.0, Scheme::UniformMidpoint).unwrap();
        let trunc = FockTruncation::uniform(2, 5);
        let h = hamiltonian(&model, &b, 0.3, &trunc, DEFAULT_MAX_DIM).unwrap();
        let bs = bath_thermal_state(&b, 2.0, &trunc).unwrap();
        let mut rs = CMatrix::zeros(2, 2);
        rs[(1, 1)] = C1;
        let state = CompositeState { rho: linalg::kron(&rs, &bs.rho), n_sys: 2, cutoffs: trunc.cutoffs.clone() };
        let ev = evolve(&h, &state, &[0.0, 0.5, 3.0, 10.0]).unwrap();
        let p0 = (&state.rho * &state.rho).trace().re;
        let e0 = (&state.rho * &h).trace().re;
        assert!(linalg::max_abs(&(&ev.states[0].rho - &state.rho)) < 1e-12);
        for s in &ev.states {
            assert!(((&s.rho * &s.rho).trace().re - p0).abs() < 1e-9);
            assert!(((&s.rho * &h).trace().re - e0).abs() < 1e-9);
        }
    }
}
