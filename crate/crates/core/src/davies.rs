//! Level shift operators, the Davies generator and its resonance spectral
//! decomposition.
//!
//! Vectorization is row-major throughout: the density-matrix entry
//! `X[m, n]` sits at index `m·N + n`, i.e. on the basis vector `φ_m ⊗ φ_n`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, C0, I};
use crate::model::{bohr_frequencies, BohrDecomposition, BohrSector, FormFactor, SystemModel, DEFAULT_DEGENERACY_TOLERANCE};
use crate::quadrature::{principal_value_line, QuadSettings};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DaviesSettings {
    pub quad: QuadSettings,
    pub degeneracy_tolerance: f64,
    /// Minimal separation of level-shift eigenvalues inside one Bohr sector.
    pub simplicity_tolerance: f64,
}

impl Default for DaviesSettings {
    fn default() -> Self {
        DaviesSettings {
            quad: QuadSettings::default(),
            degeneracy_tolerance: DEFAULT_DEGENERACY_TOLERANCE,
            simplicity_tolerance: 1e-9,
        }
    }
}

/// The three thermal weights appearing in the level shift operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WeightKind {
    /// `(2/π) J(|u|) / |1 - e^{-βu}|`
    Direct,
    /// `e^{-βu/2}` times the direct weight (even in `u`).
    Cross,
    /// `(2/π) J(|u|) / |e^{βu} - 1|`, the mirror image of the direct weight.
    Reverse,
}

/// Thermally weighted spectral density on the whole real line.
pub fn thermal_weight(ff: &FormFactor, beta: f64, kind: WeightKind, u: f64) -> f64 {
    let v = u.abs();
    if v == 0.0 {
        // finite only for p = -1/2, where J(v)/(βv) → |h(0)|²·∫|A|²/2·π/β·(2/π)
        if (ff.p + 0.5).abs() < 1e-12 {
            return ff.profile.value(0.0).powi(2) * ff.angular_weight() / beta;
        }
        return 0.0;
    }
    let j = ff.spectral_density(v).unwrap_or(0.0) * 2.0 / PI;
    // 1/(1 - e^{-βv}) = 1 + n̄(v)
    let r = 1.0 / -(-beta * v).exp_m1();
    let damp = (-beta * v).exp();
    let upper = u > 0.0;
    match kind {
        WeightKind::Direct => j * r * if upper { 1.0 } else { damp },
        WeightKind::Cross => j * r * (-0.5 * beta * v).exp(),
        WeightKind::Reverse => j * r * if upper { damp } else { 1.0 },
    }
}

/// `∫ w(u)/(u - x₀ + i0₊) du = P.V.∫ w(u)/(u - x₀) du - iπ w(x₀)`.
pub fn plemelj_integral(ff: &FormFactor, beta: f64, kind: WeightKind, x0: f64, quad: &QuadSettings) -> Result<Complex64> {
    let w = |u: f64| thermal_weight(ff, beta, kind, u);
    let half = (0.5 * x0.abs()).clamp(1e-3, 1.0);
    let pv = principal_value_line(w, x0, half, &[0.0], 1.0, quad)?;
    Ok(Complex64::new(pv.value, -PI * w(x0)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelShiftOperator {
    pub e: f64,
    pub pairs: Vec<(usize, usize)>,
    pub matrix: CMatrix,
}

type IntegralCache = BTreeMap<(WeightKind, u64), Complex64>;

fn cached(cache: &mut IntegralCache, ff: &FormFactor, beta: f64, kind: WeightKind, x0: f64, quad: &QuadSettings) -> Result<Complex64> {
    // -0.0 and 0.0 denote the same point
    let x0 = if x0 == 0.0 { 0.0 } else { x0 };
    let key = (kind, x0.to_bits());
    if let Some(v) = cache.get(&key) {
        return Ok(*v);
    }
    let v = plemelj_integral(ff, beta, kind, x0, quad)?;
    cache.insert(key, v);
    Ok(v)
}

fn level_shift_cached(
    model: &SystemModel,
    ff: &FormFactor,
    beta: f64,
    sector: &BohrSector,
    quad: &QuadSettings,
    cache: &mut IntegralCache,
) -> Result<LevelShiftOperator> {
    let n = model.dim();
    let en = model.energies();
    let g = model.coupling();
    let gb = g.map(|z| z.conj());
    let e = sector.e;
    let index: BTreeMap<(usize, usize), usize> = sector.pairs.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let k = sector.pairs.len();
    let mut lam = CMatrix::zeros(k, k);
    for (col, &(m, nn)) in sector.pairs.iter().enumerate() {
        // -½ (G⊗1) R_direct (G⊗1)
        for mp in 0..n {
            if g[(mp, m)] == C0 {
                continue;
            }
            let i1 = cached(cache, ff, beta, WeightKind::Direct, e - en[mp] + en[nn], quad)?;
            for mpp in 0..n {
                if let Some(&row) = index.get(&(mpp, nn)) {
                    lam[(row, col)] += -0.5 * g[(mpp, mp)] * g[(mp, m)] * i1;
                }
            }
        }
        // -½ (1⊗Ḡ) R_reverse (1⊗Ḡ)
        for np in 0..n {
            if gb[(np, nn)] == C0 {
                continue;
            }
            let i4 = cached(cache, ff, beta, WeightKind::Reverse, e - en[m] + en[np], quad)?;
            for npp in 0..n {
                if let Some(&row) = index.get(&(m, npp)) {
                    lam[(row, col)] += -0.5 * gb[(npp, np)] * gb[(np, nn)] * i4;
                }
            }
        }
        // +½ (G⊗1) R_cross (1⊗Ḡ) and +½ (1⊗Ḡ) R_cross (G⊗1)
        for mp in 0..n {
            for np in 0..n {
                let coeff = g[(mp, m)] * gb[(np, nn)];
                if coeff == C0 {
                    continue;
                }
                if let Some(&row) = index.get(&(mp, np)) {
                    let i2 = cached(cache, ff, beta, WeightKind::Cross, e - en[m] + en[np], quad)?;
                    let i3 = cached(cache, ff, beta, WeightKind::Cross, e - en[mp] + en[nn], quad)?;
                    lam[(row, col)] += 0.5 * coeff * (i2 + i3);
                }
            }
        }
    }
    Ok(LevelShiftOperator { e, pairs: sector.pairs.clone(), matrix: lam })
}

/// Level shift operator `Λ_e` on the span of `φ_m ⊗ φ_n` with `(m, n)` in the sector.
pub fn level_shift(model: &SystemModel, ff: &FormFactor, beta: f64, sector: &BohrSector, settings: &DaviesSettings) -> Result<LevelShiftOperator> {
    check_beta(beta)?;
    level_shift_cached(model, ff, beta, sector, &settings.quad, &mut IntegralCache::new())
}

/// All level shift operators, sharing scalar integrals between sectors.
pub fn level_shifts(model: &SystemModel, ff: &FormFactor, beta: f64, bohr: &BohrDecomposition, settings: &DaviesSettings) -> Result<Vec<LevelShiftOperator>> {
    check_beta(beta)?;
    let mut cache = IntegralCache::new();
    bohr.entries
        .iter()
        .map(|s| level_shift_cached(model, ff, beta, s, &settings.quad, &mut cache))
        .collect()
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!("inverse temperature must be positive and finite, got {beta}")));
    }
    Ok(())
}

/// Davies generator on row-major vectorized `N × N` matrices.
#[derive(Debug, Clone)]
pub struct DaviesGenerator {
    pub lambda: f64,
    pub beta: f64,
    pub dim: usize,
    pub energies: Vec<f64>,
    /// `ℒ_S(λ)` as an `N² × N²` matrix.
    pub superop: CMatrix,
    /// The `λ²` coefficient `𝒦`.
    pub kappa: CMatrix,
    /// Part of `𝒦` generated by the Hermitian (dispersive) part of `Λ`.
    pub hamiltonian_part: CMatrix,
    /// Part of `𝒦` generated by the anti-Hermitian (absorptive) part of `Λ`.
    pub dissipative_part: CMatrix,
    pub shifts: Vec<LevelShiftOperator>,
    pub model_hash: String,
}

/// Builds `M(λ) = L_S + λ²Λ`, dualizes through the Gibbs-weighted
/// vectorization and returns the Schrödinger-picture generator
/// `ℒ = D(-iM†)D⁻¹` with `D = diag(e^{-βE_n/2}/√Z)`.
pub fn assemble_and_dualize(model: &SystemModel, shifts: &[LevelShiftOperator], beta: f64, lambda: f64) -> Result<DaviesGenerator> {
    check_beta(beta)?;
    let n = model.dim();
    let nn = n * n;
    let en = model.energies();
    let mut covered = vec![false; nn];
    let mut lam = CMatrix::zeros(nn, nn);
    for s in shifts {
        for (j, &(m, k)) in s.pairs.iter().enumerate() {
            let b = m * n + k;
            if covered[b] {
                return Err(Error::Validation(format!("pair ({m}, {k}) appears in two level shift operators")));
            }
            covered[b] = true;
            for (i, &(mi, ki)) in s.pairs.iter().enumerate() {
                lam[(mi * n + ki, b)] = s.matrix[(i, j)];
            }
        }
    }
    if let Some(b) = covered.iter().position(|c| !c) {
        return Err(Error::Validation(format!("level shift operators do not cover pair ({}, {})", b / n, b % n)));
    }
    // D_a / D_b = e^{-β(E_{n_a} - E_{n_b})/2}
    let ratio = |a: usize, b: usize| -> f64 { (-0.5 * beta * (en[a % n] - en[b % n])).exp() };
    if (0..nn).any(|a| !ratio(a, 0).is_finite() || ratio(a, 0) == 0.0) {
        return Err(Error::Internal("Gibbs-weighted vectorization is numerically singular".into()));
    }
    let dual = |mat: &CMatrix, pre: Complex64| -> CMatrix {
        CMatrix::from_fn(nn, nn, |a, b| pre * mat[(b, a)].conj() * ratio(a, b))
    };
    let kappa = dual(&lam, -I);
    let lam_h = (&lam + lam.adjoint()) * c(0.5);
    let lam_a = (&lam - lam.adjoint()) * c(0.5);
    let hamiltonian_part = dual(&lam_h, -I);
    let dissipative_part = dual(&lam_a, -I);
    let mut superop = kappa.clone() * c(lambda * lambda);
    for a in 0..nn {
        superop[(a, a)] += -I * (en[a / n] - en[a % n]);
    }
    Ok(DaviesGenerator {
        lambda,
        beta,
        dim: n,
        energies: en.to_vec(),
        superop,
        kappa,
        hamiltonian_part,
        dissipative_part,
        shifts: shifts.to_vec(),
        model_hash: model.hash(),
    })
}

impl DaviesGenerator {
    /// Full pipeline: Bohr sectors, level shifts, dualization.
    pub fn build(model: &SystemModel, ff: &FormFactor, beta: f64, lambda: f64, settings: &DaviesSettings) -> Result<Self> {
        let bohr = bohr_frequencies(model, settings.degeneracy_tolerance);
        let shifts = level_shifts(model, ff, beta, &bohr, settings)?;
        assemble_and_dualize(model, &shifts, beta, lambda)
    }

    /// Same level shifts at another coupling.
    pub fn at_lambda(&self, lambda: f64) -> Self {
        let n = self.dim;
        let mut superop = self.kappa.clone() * c(lambda * lambda);
        for a in 0..n * n {
            superop[(a, a)] += -I * (self.energies[a / n] - self.energies[a % n]);
        }
        DaviesGenerator { lambda, superop, ..self.clone() }
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        linalg::unvec_row_major(&(&self.superop * linalg::vec_row_major(rho)), self.dim)
    }

    /// `e^{τ𝒦}` acting on a density matrix (interaction picture generator).
    pub fn kappa_propagator(&self, tau: f64) -> CMatrix {
        linalg::expm(&(&self.kappa * c(tau)))
    }

    /// Largest `|tr ℒ(E_{mn})|` over matrix units.
    pub fn trace_defect(&self) -> f64 {
        let n = self.dim;
        (0..n * n)
            .map(|b| (0..n).map(|d| self.superop[(d * n + d, b)]).sum::<Complex64>().norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry of `L_S Λ - Λ L_S` in the pair basis.
    pub fn commutator_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for s in &self.shifts {
            for (i, &(mi, ki)) in s.pairs.iter().enumerate() {
                for (j, &(mj, kj)) in s.pairs.iter().enumerate() {
                    let li = self.energies[mi] - self.energies[ki];
                    let lj = self.energies[mj] - self.energies[kj];
                    worst = worst.max((s.matrix[(i, j)] * (li - lj)).norm());
                }
            }
        }
        worst
    }
}

pub fn semigroup_propagator(gen: &DaviesGenerator, t: f64) -> Result<CMatrix> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("semigroup time must be nonnegative, got {t}")));
    }
    let dec = spectral_decomposition(gen, &DaviesSettings::default())?;
    if dec.diagonalizable {
        Ok(dec.propagator(t))
    } else {
        Ok(linalg::expm(&(&gen.superop * c(t))))
    }
}

/// `e^{tℒ}ρ`, re-Hermitized.
pub fn semigroup_apply(gen: &DaviesGenerator, t: f64, rho: &CMatrix) -> Result<CMatrix> {
    let p = semigroup_propagator(gen, t)?;
    Ok(apply_propagator(&p, rho))
}

pub fn apply_propagator(p: &CMatrix, rho: &CMatrix) -> CMatrix {
    let n = rho.nrows();
    linalg::hermitize(&linalg::unvec_row_major(&(p * linalg::vec_row_major(rho)), n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMode {
    /// Bohr frequency `e_j` in `e^{it(e_j + λ²a_j)}`.
    pub e: f64,
    /// Second-order correction `a_j`.
    pub a: Complex64,
    pub multiplicity: usize,
    pub projector: CMatrix,
    /// `‖P_j‖₂`, large for nearly defective modes.
    pub projector_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub lambda: f64,
    pub modes: Vec<SpectralMode>,
    /// Every level shift operator has separated eigenvalues.
    pub simple: bool,
    /// Every mode has multiplicity one, or its block is a multiple of the identity.
    pub diagonalizable: bool,
    /// Smallest eigenvalue separation found in each sector.
    pub min_separation: Vec<f64>,
}

impl SpectralDecomposition {
    /// `Σ_j e^{it(e_j + λ²a_j)} P_j`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let mut out = CMatrix::zeros(self.modes[0].projector.nrows(), self.modes[0].projector.ncols());
        for m in &self.modes {
            let phase = (I * t * (m.e + self.lambda * self.lambda * m.a)).exp();
            out += &m.projector * phase;
        }
        out
    }

    /// Modes with `|e_j| + |a_j|` below `tol`.
    pub fn zero_modes(&self, tol: f64) -> usize {
        self.modes.iter().filter(|m| m.e.abs() + m.a.norm() <= tol).count()
    }
}

/// Riesz projector `(1/2πi)∮ (z - B)⁻¹ dz` on a circle, 64-node trapezoid.
fn riesz_projector(block: &CMatrix, center: Complex64, radius: f64) -> Result<CMatrix> {
    let k = block.nrows();
    let nodes = 64;
    let mut acc = CMatrix::zeros(k, k);
    for j in 0..nodes {
        let th = 2.0 * PI * (j as f64 + 0.5) / nodes as f64;
        let dz = Complex64::from_polar(radius, th);
        let z = center + dz;
        let mut shifted = -block.clone();
        for i in 0..k {
            shifted[(i, i)] += z;
        }
        let inv = shifted
            .try_inverse()
            .ok_or_else(|| Error::Numerical("resolvent is singular on the projector contour".into()))?;
        acc += inv * dz;
    }
    Ok(acc / c(nodes as f64))
}

/// Eigen-decomposition of `iℒ` sector by sector.
pub fn spectral_decomposition(gen: &DaviesGenerator, settings: &DaviesSettings) -> Result<SpectralDecomposition> {
    let n = gen.dim;
    let nn = n * n;
    let l2 = gen.lambda * gen.lambda;
    let mut modes = Vec::new();
    let mut simple = true;
    let mut diagonalizable = true;
    let mut min_separation = Vec::new();
    for s in &gen.shifts {
        let idx: Vec<usize> = s.pairs.iter().map(|&(m, k)| m * n + k).collect();
        let k = idx.len();
        let nu = linalg::eigenvalues(&s.matrix)?;
        let scale = 1.0 + linalg::max_abs(&s.matrix);
        let mut sep = f64::INFINITY;
        for i in 0..k {
            for j in (i + 1)..k {
                sep = sep.min((nu[i] - nu[j]).norm());
            }
        }
        min_separation.push(sep);
        if sep <= settings.simplicity_tolerance * scale {
            simple = false;
        }
        // eigenvalues of ℒ on this sector: μ = -i(e + λ² ν̄), written as i(e_j + λ² a_j)
        let a_vals: Vec<Complex64> = nu.iter().map(|v| -v.conj()).collect();
        let e_j = -s.e;
        let mu: Vec<Complex64> = a_vals.iter().map(|a| I * (e_j + l2 * a)).collect();
        let block = CMatrix::from_fn(k, k, |i, j| gen.superop[(idx[i], idx[j])]);
        let cluster_tol = 1e-12 * (1.0 + e_j.abs()) + settings.simplicity_tolerance * l2 * scale;
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        for i in 0..k {
            match clusters.iter_mut().find(|cl| cl.iter().any(|&j| (mu[i] - mu[j]).norm() <= cluster_tol)) {
                Some(cl) => cl.push(i),
                None => clusters.push(vec![i]),
            }
        }
        let centers: Vec<Complex64> = clusters
            .iter()
            .map(|cl| cl.iter().map(|&i| mu[i]).sum::<Complex64>() / c(cl.len() as f64))
            .collect();
        let mut local = Vec::new();
        for (ci, cl) in clusters.iter().enumerate() {
            let proj_block = if clusters.len() == 1 {
                CMatrix::identity(k, k)
            } else {
                let d = centers
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != ci)
                    .map(|(_, z)| (z - centers[ci]).norm())
                    .fold(f64::INFINITY, f64::min);
                riesz_projector(&block, centers[ci], 0.5 * d)?
            };
            if cl.len() > 1 {
                let scalar = (0..k).all(|i| (0..k).all(|j| (block[(i, j)] - if i == j { block[(0, 0)] } else { C0 }).norm() <= 1e-14 * scale));
                if !scalar {
                    diagonalizable = false;
                }
            }
            let mut projector = CMatrix::zeros(nn, nn);
            for i in 0..k {
                for j in 0..k {
                    projector[(idx[i], idx[j])] = proj_block[(i, j)];
                }
            }
            let a = if gen.lambda == 0.0 {
                C0
            } else {
                cl.iter().map(|&i| a_vals[i]).sum::<Complex64>() / c(cl.len() as f64)
            };
            let projector_norm = linalg::trace_norm(&proj_block).max(0.0);
            local.push(SpectralMode { e: e_j, a, multiplicity: cl.len(), projector, projector_norm });
        }
        local.sort_by(|x, y| x.a.im.partial_cmp(&y.a.im).unwrap().then(x.a.re.partial_cmp(&y.a.re).unwrap()));
        modes.extend(local);
    }
    modes.sort_by(|x, y| x.e.partial_cmp(&y.e).unwrap().then(x.a.im.partial_cmp(&y.a.im).unwrap()).then(x.a.re.partial_cmp(&y.a.re).unwrap()));
    Ok(SpectralDecomposition { lambda: gen.lambda, modes, simple, diagonalizable, min_separation })
}

/// Gibbs direction `v_β` with components `e^{-βE_j/2} δ_{mn}`, restricted to the zero sector.
pub fn gibbs_direction(model: &SystemModel, beta: f64, sector: &LevelShiftOperator) -> CVector {
    let e0 = model.energies()[0];
    CVector::from_iterator(
        sector.pairs.len(),
        sector.pairs.iter().map(|&(m, k)| if m == k { c((-0.5 * beta * (model.energies()[m] - e0)).exp()) } else { C0 }),
    )
}

/// JSON export of a generator and its decomposition.
pub fn export_json(gen: &DaviesGenerator, dec: &SpectralDecomposition, settings: &DaviesSettings) -> serde_json::Value {
    let mat = |m: &CMatrix| -> Vec<Vec<[f64; 2]>> {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
    };
    serde_json::json!({
        "lambda": gen.lambda,
        "beta": gen.beta,
        "dim": gen.dim,
        "vectorization": "row-major: X[m,n] at index m*N+n",
        "superop": mat(&gen.superop),
        "kappa": mat(&gen.kappa),
        "hamiltonian_part": mat(&gen.hamiltonian_part),
        "dissipative_part": mat(&gen.dissipative_part),
        "level_shifts": gen.shifts.iter().map(|s| serde_json::json!({
            "e": s.e,
            "pairs": s.pairs,
            "matrix": mat(&s.matrix),
        })).collect::<Vec<_>>(),
        "spectral": {
            "simple": dec.simple,
            "diagonalizable": dec.diagonalizable,
            "min_separation": dec.min_separation.iter().map(|x| if x.is_finite() { serde_json::json!(x) } else { serde_json::Value::Null }).collect::<Vec<_>>(),
            "modes": dec.modes.iter().map(|m| serde_json::json!({
                "e": m.e,
                "a": [m.a.re, m.a.im],
                "multiplicity": m.multiplicity,
                "projector_norm": m.projector_norm,
                "projector": mat(&m.projector),
            })).collect::<Vec<_>>(),
        },
        "provenance": {
            "model_hash": gen.model_hash,
            "quadrature": settings.quad,
            "degeneracy_tolerance": settings.degeneracy_tolerance,
            "simplicity_tolerance": settings.simplicity_tolerance,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C1;
    use crate::model::{two_level, RadialProfile};

    fn bench() -> (SystemModel, FormFactor, f64) {
        let ff = FormFactor::new(0.5, 2.5, RadialProfile::exponential(1.0, 2.0)).unwrap();
        (two_level(1.0), ff, 1.5)
    }

    #[test]
    fn weights_are_consistent() {
        let (_, ff, beta) = bench();
        for u in [-2.0, -0.3, 0.4, 1.7] {
            let w1 = thermal_weight(&ff, beta, WeightKind::Direct, u);
            let w2 = thermal_weight(&ff, beta, WeightKind::Cross, u);
            let w4 = thermal_weight(&ff, beta, WeightKind::Reverse, u);
            assert!((w2 - (-beta * u / 2.0).exp() * w1).abs() < 1e-14 * w1);
            assert!((w4 - (-beta * u).exp() * w1).abs() < 1e-14 * w1);
            assert!((w4 - thermal_weight(&ff, beta, WeightKind::Direct, -u)).abs() < 1e-14 * w1);
        }
    }

    #[test]
    fn two_level_plemelj_rates() {
        let (model, ff, beta) = bench();
        let gen = DaviesGenerator::build(&model, &ff, beta, 0.1, &DaviesSettings::default()).unwrap();
        let j = ff.spectral_density(1.0).unwrap();
        let boltz = (-beta).exp();
        let up = j / (1.0 - boltz);
        let down = j * boltz / (1.0 - boltz);
        for s in &gen.shifts {
            if s.e == 1.0 || s.e == -1.0 {
                assert!((s.matrix[(0, 0)].im - (up + down)).abs() < 1e-8 * up);
            }
            if s.e == 0.0 {
                assert!((s.matrix[(0, 0)].im - 2.0 * down).abs() < 1e-8 * up);
                assert!((s.matrix[(1, 1)].im - 2.0 * up).abs() < 1e-8 * up);
                let cross = -2.0 * j * (-beta / 2.0).exp() / (1.0 - boltz);
                assert!((s.matrix[(0, 1)].im - cross).abs() < 1e-8 * up);
            }
        }
    }

    #[test]
    fn lambda_zero_is_commutator() {
        let (model, ff, beta) = bench();
        let gen = DaviesGenerator::build(&model, &ff, beta, 0.0, &DaviesSettings::default()).unwrap();
        let mut x = CMatrix::zeros(2, 2);
        x[(0, 1)] = C1;
        let y = gen.apply(&x);
        assert_eq!(y[(0, 1)], I * 1.0);
        assert_eq!(y[(0, 0)], C0);
        let dec = spectral_decomposition(&gen, &DaviesSettings::default()).unwrap();
        assert_eq!(dec.modes.len(), 3);
        assert!(dec.modes.iter().all(|m| m.a == C0));
    }

    #[test]
    fn gibbs_is_stationary() {
        let (model, ff, beta) = bench();
        let gen = DaviesGenerator::build(&model, &ff, beta, 0.3, &DaviesSettings::default()).unwrap();
        let r = gen.apply(&model.gibbs_state(beta));
        assert!(linalg::trace_norm(&r) < 1e-8);
        assert!(gen.trace_defect() < 1e-10);
        let zero = &gen.shifts[1];
        let v = gibbs_direction(&model, beta, zero);
        assert!((&zero.matrix * &v).norm() <= 1e-8 * v.norm());
    }

    #[test]
    fn resolution_doubling_is_stable() {
        let (model, ff, beta) = bench();
        let s1 = DaviesSettings::default();
        let s2 = DaviesSettings { quad: s1.quad.refined(), ..s1 };
        let bohr = bohr_frequencies(&model, s1.degeneracy_tolerance);
        let a = level_shifts(&model, &ff, beta, &bohr, &s1).unwrap();
        let b = level_shifts(&model, &ff, beta, &bohr, &s2).unwrap();
        for (x, y) in a.iter().zip(&b) {
            let scale = linalg::max_abs(&x.matrix);
            assert!(linalg::max_abs(&(&x.matrix - &y.matrix)) < 1e-8 * scale);
        }
    }

    #[test]
    fn negative_time_rejected() {
        let (model, ff, beta) = bench();
        let gen = DaviesGenerator::build(&model, &ff, beta, 0.1, &DaviesSettings::default()).unwrap();
        assert!(semigroup_apply(&gen, -1.0, &model.gibbs_state(beta)).is_err());
    }
}
