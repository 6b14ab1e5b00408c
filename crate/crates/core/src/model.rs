//! System, coupling and form-factor data, the reservoir spectral density,
//! the Bohr-frequency decomposition and the assumption checks.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::sphere::{Angular, SphereRule};

pub type CMatrix = DMatrix<Complex64>;

/// Finite-level system: ascending energies and a Hermitian coupling matrix
/// written in the energy eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    energies: Vec<f64>,
    coupling: CMatrix,
}

impl SystemModel {
    pub fn new(energies: Vec<f64>, coupling: CMatrix) -> Result<Self> {
        let n = energies.len();
        if n < 2 {
            return Err(Error::Validation(format!("system dimension must be at least 2, got {n}")));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::Validation("energies must be finite".into()));
        }
        if energies.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Validation("energies must be sorted ascending".into()));
        }
        if coupling.nrows() != n || coupling.ncols() != n {
            return Err(Error::Validation(format!(
                "coupling is {}x{}, expected {n}x{n}",
                coupling.nrows(),
                coupling.ncols()
            )));
        }
        let scale = coupling.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in 0..n {
                let d = (coupling[(i, j)] - coupling[(j, i)].conj()).norm();
                if d > 1e-12 * scale {
                    return Err(Error::Validation(format!(
                        "coupling is not Hermitian: |G[{i},{j}] - conj(G[{j},{i}])| = {d:.3e}"
                    )));
                }
            }
        }
        Ok(SystemModel { energies, coupling })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn coupling(&self) -> &CMatrix {
        &self.coupling
    }

    pub fn hamiltonian(&self) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.dim(),
            self.energies.iter().map(|&e| Complex64::new(e, 0.0)),
        ))
    }

    /// Gibbs populations `e^{-βE_j}/Z`, shifted by the ground energy for stability.
    pub fn gibbs_populations(&self, beta: f64) -> Vec<f64> {
        let e0 = self.energies[0];
        let w: Vec<f64> = self.energies.iter().map(|e| (-beta * (e - e0)).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    }

    pub fn gibbs_state(&self, beta: f64) -> CMatrix {
        let p = self.gibbs_populations(beta);
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.dim(),
            p.into_iter().map(|x| Complex64::new(x, 0.0)),
        ))
    }

    pub fn spectral_range(&self) -> f64 {
        self.energies[self.dim() - 1] - self.energies[0]
    }

    /// SHA-256 over the energies and coupling entries (little-endian bits).
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"system-model");
        for e in &self.energies {
            h.update(e.to_le_bytes());
        }
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                h.update(self.coupling[(i, j)].re.to_le_bytes());
                h.update(self.coupling[(i, j)].im.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

/// Radial profile `h(k) = amp · P(k) · exp(-a·k - b·k²)` with a polynomial
/// `P` (coefficients in ascending powers). Every derivative has the same
/// form, so derivatives of any order are available in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub amp: f64,
    #[serde(default = "one_poly")]
    pub poly: Vec<f64>,
    #[serde(default)]
    pub exp_rate: f64,
    #[serde(default)]
    pub gauss_rate: f64,
}

fn one_poly() -> Vec<f64> {
    vec![1.0]
}

impl RadialProfile {
    /// Number of derivatives the family declares bounded and known.
    pub const DECLARED_DERIVATIVES: usize = 4;

    pub fn constant(amp: f64) -> Self {
        RadialProfile { amp, poly: vec![1.0], exp_rate: 0.0, gauss_rate: 0.0 }
    }

    /// `amp · e^{-k/cutoff}`
    pub fn exponential(amp: f64, cutoff: f64) -> Self {
        RadialProfile { amp, poly: vec![1.0], exp_rate: 1.0 / cutoff, gauss_rate: 0.0 }
    }

    /// `amp · e^{-k²/width²}`
    pub fn gaussian(amp: f64, width: f64) -> Self {
        RadialProfile { amp, poly: vec![1.0], exp_rate: 0.0, gauss_rate: 1.0 / (width * width) }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amp.is_finite() || self.amp == 0.0 {
            return Err(Error::Validation("profile amplitude must be finite and nonzero".into()));
        }
        if self.poly.is_empty() || self.poly.iter().any(|c| !c.is_finite()) {
            return Err(Error::Validation("profile polynomial must have finite coefficients".into()));
        }
        if self.poly[0] == 0.0 {
            return Err(Error::Validation("profile must not vanish at k = 0".into()));
        }
        if !(self.exp_rate >= 0.0 && self.gauss_rate >= 0.0) {
            return Err(Error::Validation("profile decay rates must be nonnegative".into()));
        }
        let degree = self.poly.iter().rposition(|&c| c != 0.0).unwrap_or(0);
        if degree > 0 && self.exp_rate == 0.0 && self.gauss_rate == 0.0 {
            return Err(Error::Validation("a polynomial profile needs exponential or Gaussian damping to stay bounded".into()));
        }
        // sampled boundedness of h and its declared derivatives
        for order in 0..=Self::DECLARED_DERIVATIVES {
            for i in 0..=400 {
                let k = 0.05 * i as f64 * (1.0 + i as f64 / 40.0);
                if !self.derivative(k, order).is_finite() {
                    return Err(Error::Validation(format!("profile derivative of order {order} is not finite at k = {k}")));
                }
            }
        }
        Ok(())
    }

    fn derivative_poly(&self, order: usize) -> Vec<f64> {
        let mut p = self.poly.clone();
        for _ in 0..order {
            // P' - (a + 2bk) P
            let mut next = vec![0.0; p.len() + 1];
            for (i, c) in p.iter().enumerate() {
                if i > 0 {
                    next[i - 1] += i as f64 * c;
                }
                next[i] -= self.exp_rate * c;
                next[i + 1] -= 2.0 * self.gauss_rate * c;
            }
            p = next;
        }
        p
    }

    pub fn derivative(&self, k: f64, order: usize) -> f64 {
        let p = self.derivative_poly(order);
        let poly = p.iter().rev().fold(0.0, |acc, c| acc * k + c);
        self.amp * poly * (-self.exp_rate * k - self.gauss_rate * k * k).exp()
    }

    pub fn value(&self, k: f64) -> f64 {
        self.derivative(k, 0)
    }

    /// Limits `h^{(j)}(0⁺)` for `j = 0..=4`.
    pub fn derivative_limits_at_zero(&self) -> [f64; 5] {
        let mut out = [0.0; 5];
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.amp * self.derivative_poly(j)[0];
        }
        out
    }

    /// True when `e^{βk} h(k)` still decays.
    pub fn decays_faster_than(&self, beta: f64) -> bool {
        self.gauss_rate > 0.0 || self.exp_rate > beta
    }
}

/// Envelope `|k|^p / (1 + |k|^{p+q})` shared by form factors and test functions.
pub fn envelope(k: f64, p: f64, q: f64) -> f64 {
    if k == 0.0 {
        return if p > 0.0 {
            0.0
        } else if p == 0.0 {
            1.0
        } else {
            f64::INFINITY
        };
    }
    let kp = k.powf(p);
    kp / (1.0 + kp * k.powf(q))
}

/// Form factor `g(k) = |k|^p/(1+|k|^{p+q}) · h(|k|) · A(Σ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormFactor {
    pub p: f64,
    pub q: f64,
    pub profile: RadialProfile,
    #[serde(default)]
    pub angular: Angular,
    /// Spherical rule order for anisotropic factors (0 = 26-point Lebedev).
    #[serde(default)]
    pub angular_order: usize,
}

impl FormFactor {
    pub fn new(p: f64, q: f64, profile: RadialProfile) -> Result<Self> {
        let ff = FormFactor { p, q, profile, angular: Angular::ISOTROPIC, angular_order: 0 };
        ff.validate()?;
        Ok(ff)
    }

    pub fn with_angular(mut self, angular: Angular) -> Self {
        self.angular = angular;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p > -1.5) {
            return Err(Error::Validation(format!("infrared exponent p = {} must exceed -3/2", self.p)));
        }
        if !(self.q.is_finite() && self.q > 2.0) {
            return Err(Error::Validation(format!("ultraviolet exponent q = {} must exceed 2", self.q)));
        }
        self.profile.validate()
    }

    pub fn is_isotropic(&self) -> bool {
        self.angular.is_isotropic()
    }

    /// Radial part `|k|^p/(1+|k|^{p+q})·h(|k|)`.
    pub fn radial(&self, k: f64) -> f64 {
        envelope(k, self.p, self.q) * self.profile.value(k)
    }

    pub fn eval(&self, k: [f64; 3]) -> f64 {
        let r = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
        if r == 0.0 {
            return self.radial(0.0);
        }
        self.radial(r) * self.angular.value(k[2] / r)
    }

    /// `∫_{S²} |A(Σ)|² dΣ`: closed form when isotropic, quadrature otherwise.
    pub fn angular_weight(&self) -> f64 {
        if self.is_isotropic() {
            4.0 * PI
        } else {
            let a = self.angular;
            SphereRule::with_order(self.angular_order).integrate(|pt| a.at(pt).powi(2))
        }
    }

    /// `J(ω) = (π/2) ω² ∫_{S²} |g(ω, Σ)|² dΣ`.
    pub fn spectral_density(&self, omega: f64) -> Result<f64> {
        spectral_density(self, omega)
    }

    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("form factor serializes");
        let mut h = Sha256::new();
        h.update(b"form-factor");
        h.update(json);
        hex::encode(h.finalize())
    }
}

pub fn spectral_density(ff: &FormFactor, omega: f64) -> Result<f64> {
    if !(omega >= 0.0) {
        return Err(Error::Domain(format!("spectral density needs ω ≥ 0, got {omega}")));
    }
    if omega == 0.0 {
        // ω² |g|² ~ ω^{2+2p} → 0 for every admissible p
        return Ok(0.0);
    }
    let g = ff.radial(omega);
    Ok(0.5 * PI * omega * omega * g * g * ff.angular_weight())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BohrSector {
    pub e: f64,
    /// Index pairs `(m, n)` (zero-based) with `E_m - E_n ≈ e`.
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BohrDecomposition {
    pub entries: Vec<BohrSector>,
}

impl BohrDecomposition {
    pub fn sector_of(&self, m: usize, n: usize) -> Option<usize> {
        self.entries.iter().position(|s| s.pairs.contains(&(m, n)))
    }

    pub fn zero_sector(&self) -> usize {
        self.entries.iter().position(|s| s.e == 0.0).expect("zero Bohr frequency is always present")
    }
}

/// Distinct Bohr frequencies, grouping differences closer than
/// `degeneracy_tolerance · (E_N - E_1)`. Groups are built on the
/// nonnegative half and mirrored, so the result is exactly symmetric.
pub fn bohr_frequencies(model: &SystemModel, degeneracy_tolerance: f64) -> BohrDecomposition {
    let e = model.energies();
    let n = model.dim();
    let range = model.spectral_range();
    let tol = if range > 0.0 { degeneracy_tolerance * range } else { degeneracy_tolerance };
    let mut diffs: Vec<(f64, usize, usize)> = Vec::new();
    for m in 0..n {
        for k in 0..n {
            let d = e[m] - e[k];
            if d > 0.0 || (d == 0.0 && m >= k) {
                diffs.push((d, m, k));
            }
        }
    }
    diffs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut groups: Vec<Vec<(f64, usize, usize)>> = Vec::new();
    for item in diffs {
        match groups.last_mut() {
            Some(g) if item.0 - g.last().unwrap().0 <= tol => g.push(item),
            _ => groups.push(vec![item]),
        }
    }
    let mut entries = Vec::new();
    for (gi, g) in groups.iter().enumerate() {
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for &(_, m, k) in g {
            pairs.push((m, k));
            if m != k {
                if gi == 0 {
                    pairs.push((k, m));
                }
            }
        }
        pairs.sort();
        pairs.dedup();
        if gi == 0 {
            entries.push(BohrSector { e: 0.0, pairs });
        } else {
            let mean = g.iter().map(|x| x.0).sum::<f64>() / g.len() as f64;
            let mut neg: Vec<(usize, usize)> = pairs.iter().map(|&(m, k)| (k, m)).collect();
            neg.sort();
            entries.push(BohrSector { e: mean, pairs });
            entries.push(BohrSector { e: -mean, pairs: neg });
        }
    }
    entries.sort_by(|a, b| a.e.partial_cmp(&b.e).unwrap());
    BohrDecomposition { entries }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub m: usize,
    pub n: usize,
    /// `⟨φ_m, G φ_n⟩ · J(|E_m - E_n|)`
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub a1_ok: bool,
    pub a2a_ok: bool,
    pub a2a_witness: Vec<Witness>,
    pub fgr_tolerance: f64,
    pub notes: String,
}

pub const DEFAULT_FGR_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_DEGENERACY_TOLERANCE: f64 = 1e-9;

fn admissible_p(p: f64) -> bool {
    [-0.5, 0.5, 1.5].iter().any(|&x| (p - x).abs() < 1e-12) || p > 2.0
}

pub fn check_assumptions(model: &SystemModel, ff: &FormFactor, fgr_tolerance: f64) -> AssumptionReport {
    let mut notes = Vec::new();
    let p_ok = admissible_p(ff.p);
    let q_ok = ff.q > 2.0;
    let derivs_ok = RadialProfile::DECLARED_DERIVATIVES >= 4;
    if !p_ok {
        notes.push(format!("(A1) infrared exponent p = {} is not one of -1/2, 1/2, 3/2 and not > 2", ff.p));
    }
    if !q_ok {
        notes.push(format!("(A1) ultraviolet exponent q = {} must be > 2", ff.q));
    }
    let limits = ff.profile.derivative_limits_at_zero();
    let vanishing: Vec<usize> = (0..5).filter(|&j| limits[j] == 0.0).collect();
    if !vanishing.is_empty() {
        notes.push(format!(
            "profile derivatives of order {vanishing:?} vanish at k = 0 (informational; not part of the a1 verdict)"
        ));
    }

    let e = model.energies();
    let tol = DEFAULT_DEGENERACY_TOLERANCE * model.spectral_range().max(f64::MIN_POSITIVE);
    let mut witness = Vec::new();
    let mut a2a_ok = true;
    for m in 0..model.dim() {
        for n in (m + 1)..model.dim() {
            if (e[m] - e[n]).abs() <= tol {
                continue;
            }
            let j = ff.spectral_density((e[m] - e[n]).abs()).unwrap_or(0.0);
            let value = model.coupling()[(m, n)] * j;
            if !(value.norm() > fgr_tolerance) {
                a2a_ok = false;
                notes.push(format!(
                    "(A2a) |G[{m},{n}]|·J({:.6}) = {:.3e} does not exceed {:.1e}",
                    (e[m] - e[n]).abs(),
                    value.norm(),
                    fgr_tolerance
                ));
            }
            witness.push(Witness { m, n, value });
        }
    }
    AssumptionReport {
        a1_ok: p_ok && q_ok && derivs_ok,
        a2a_ok,
        a2a_witness: witness,
        fgr_tolerance,
        notes: notes.join("\n"),
    }
}

/// Two-level system `E = {0, ω₀}` coupled through `σ_x`.
pub fn two_level(omega0: f64) -> SystemModel {
    let g = CMatrix::from_row_slice(
        2,
        2,
        &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
    );
    SystemModel::new(vec![0.0, omega0], g).expect("two-level model is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ff_half() -> FormFactor {
        FormFactor::new(0.5, 2.5, RadialProfile::constant(1.0)).unwrap()
    }

    #[test]
    fn spectral_density_reference_value() {
        let j = ff_half().spectral_density(1.0).unwrap();
        assert!((j - PI * PI / 2.0).abs() < 1e-14);
        assert_eq!(ff_half().spectral_density(0.0).unwrap(), 0.0);
        assert!(ff_half().spectral_density(-1.0).is_err());
    }

    #[test]
    fn reduced_formula_matches_dense_angular_quadrature() {
        let rule = SphereRule::product(70);
        assert!(rule.len() >= 9800);
        for ff in [
            ff_half(),
            FormFactor::new(-0.5, 3.0, RadialProfile::exponential(0.7, 2.0)).unwrap(),
            FormFactor::new(1.5, 2.5, RadialProfile::gaussian(1.3, 3.0)).unwrap().with_angular(Angular { a1: 0.4, a2: -0.3 }),
        ] {
            for omega in [0.3, 1.0, 2.5] {
                let dense = 0.5 * PI * omega * omega * rule.integrate(|s| ff.eval([omega * s[0], omega * s[1], omega * s[2]]).powi(2));
                let j = ff.spectral_density(omega).unwrap();
                assert!((dense - j).abs() <= 1e-10 * j, "{dense} vs {j}");
            }
        }
    }

    #[test]
    fn ultraviolet_slope() {
        let ff = ff_half();
        let (a, b) = (10.0f64, 100.0f64);
        let slope = (ff.spectral_density(b).unwrap().ln() - ff.spectral_density(a).unwrap().ln()) / (b.ln() - a.ln());
        let expected = 2.0 - 2.0 * ff.q;
        assert!((slope - expected).abs() <= 0.1 * expected.abs(), "{slope}");
    }

    #[test]
    fn profile_derivatives_match_finite_differences() {
        let h = RadialProfile { amp: 1.7, poly: vec![1.0, -0.4, 0.3], exp_rate: 0.5, gauss_rate: 0.2 };
        h.validate().unwrap();
        let step = 1e-4;
        for order in 1..=4 {
            for &k in &[0.3, 1.1, 2.7] {
                let fd = (h.derivative(k + step, order - 1) - h.derivative(k - step, order - 1)) / (2.0 * step);
                let exact = h.derivative(k, order);
                assert!((fd - exact).abs() < 1e-6 * (1.0 + exact.abs()), "order {order} at {k}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn bohr_two_and_three_levels() {
        let m = two_level(1.0);
        let b = bohr_frequencies(&m, DEFAULT_DEGENERACY_TOLERANCE);
        let es: Vec<f64> = b.entries.iter().map(|s| s.e).collect();
        assert_eq!(es, vec![-1.0, 0.0, 1.0]);
        assert_eq!(b.entries[1].pairs, vec![(0, 0), (1, 1)]);

        let g = CMatrix::from_element(3, 3, Complex64::new(1.0, 0.0));
        let m3 = SystemModel::new(vec![0.0, 1.0, 2.0], g).unwrap();
        let b3 = bohr_frequencies(&m3, DEFAULT_DEGENERACY_TOLERANCE);
        let es: Vec<f64> = b3.entries.iter().map(|s| s.e).collect();
        assert_eq!(es, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(b3.entries[3].pairs, vec![(1, 0), (2, 1)]);
    }

    #[test]
    fn near_degenerate_differences_merge() {
        let g = CMatrix::from_element(3, 3, Complex64::new(1.0, 0.0));
        let m = SystemModel::new(vec![0.0, 1.0, 1.0 + 1e-12], g).unwrap();
        let b = bohr_frequencies(&m, DEFAULT_DEGENERACY_TOLERANCE);
        // 0 group holds the 1 ↔ 1+ε pairs, the 1 group holds both (1,0) and (2,0)
        assert_eq!(b.entries.len(), 3);
        let plus = &b.entries[2];
        assert_eq!(plus.pairs, vec![(1, 0), (2, 0)]);
        assert!(b.entries[1].pairs.contains(&(1, 2)) && b.entries[1].pairs.contains(&(2, 1)));
    }

    #[test]
    fn assumption_checks() {
        let ff = ff_half();
        let r = check_assumptions(&two_level(1.0), &ff, DEFAULT_FGR_TOLERANCE);
        assert!(r.a1_ok && r.a2a_ok);

        let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]));
        let r = check_assumptions(&SystemModel::new(vec![0.0, 1.0], diag).unwrap(), &ff, DEFAULT_FGR_TOLERANCE);
        assert!(!r.a2a_ok);

        let p1 = FormFactor::new(1.0, 2.5, RadialProfile::constant(1.0)).unwrap();
        let r = check_assumptions(&two_level(1.0), &p1, DEFAULT_FGR_TOLERANCE);
        assert!(!r.a1_ok);
        assert!(r.notes.contains("(A1)"));
    }

    #[test]
    fn rejects_non_hermitian_coupling() {
        let g = CMatrix::from_row_slice(2, 2, &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0)]);
        assert!(SystemModel::new(vec![0.0, 1.0], g).is_err());
    }
}
