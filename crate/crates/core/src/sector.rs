//! Thermofield engine for large discretized baths.
//!
//! Each physical mode is doubled, `a_k = √(1+n̄_k) b_k + √n̄_k d_k†`, so that
//! the thermal bath state becomes the vacuum of the `b` and `d` oscillators.
//! The extended Hamiltonian `H_S + Σ_k ω_k (b_k†b_k - d_k†d_k) + λ G ⊗ φ(g)`
//! reproduces every correlation of the physical algebra. The Fock space is
//! truncated to at most `M` quanta in total and propagated with a Chebyshev
//! expansion of `e^{-itH}`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bath::DiscretizedBath;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, C0, C1};
use crate::model::SystemModel;
use crate::thermal::occupation;

pub const MAX_QUANTA: usize = 12;

#[derive(Debug, Clone, Copy)]
struct State {
    len: u8,
    idx: [u16; MAX_QUANTA],
}

impl State {
    fn slice(&self) -> &[u16] {
        &self.idx[..self.len as usize]
    }
}

/// Compressed sparse rows.
#[derive(Debug, Clone)]
pub struct Sparse {
    pub n: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<Complex64>,
}

impl Sparse {
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, Complex64)>) -> Self {
        t.sort_unstable_by_key(|x| (x.0, x.1));
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(t.len());
        let mut last = None;
        for (r, col, v) in t {
            if last == Some((r, col)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, col));
            indptr[r + 1] += 1;
            indices.push(col as u32);
            values.push(v);
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        Sparse { n, indptr, indices, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    fn triplets(&self) -> Vec<(usize, usize, Complex64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.n {
            for p in self.indptr[r]..self.indptr[r + 1] {
                out.push((r, self.indices[p] as usize, self.values[p]));
            }
        }
        out
    }

    pub fn adjoint(&self) -> Sparse {
        Sparse::from_triplets(self.n, self.triplets().into_iter().map(|(r, c, v)| (c, r, v.conj())).collect())
    }

    pub fn scaled(&self, s: Complex64) -> Sparse {
        Sparse { values: self.values.iter().map(|v| v * s).collect(), ..self.clone() }
    }

    pub fn add(&self, other: &Sparse) -> Sparse {
        let mut t = self.triplets();
        t.extend(other.triplets());
        Sparse::from_triplets(self.n, t)
    }

    /// `y += alpha · A x`.
    pub fn mul_add(&self, alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
        for r in 0..self.n {
            let mut s = C0;
            for p in self.indptr[r]..self.indptr[r + 1] {
                s += self.values[p] * x[self.indices[p] as usize];
            }
            if s != C0 {
                y[r] += alpha * s;
            }
        }
    }

    /// Schur bound `√(max row sum · max column sum)` on the operator norm.
    pub fn norm_bound(&self) -> f64 {
        let mut cols = vec![0.0f64; self.n];
        let mut row_max = 0.0f64;
        for r in 0..self.n {
            let mut s = 0.0;
            for p in self.indptr[r]..self.indptr[r + 1] {
                let a = self.values[p].norm();
                s += a;
                cols[self.indices[p] as usize] += a;
            }
            row_max = row_max.max(s);
        }
        (row_max * cols.iter().copied().fold(0.0, f64::max)).sqrt()
    }
}

/// Truncated Fock space of `2K` thermofield oscillators with at most `M` quanta.
/// Oscillator `k < K` is `b_k` with frequency `ω_k`; oscillator `K + k` is
/// `d_k` with frequency `-ω_k`.
#[derive(Debug, Clone)]
pub struct SectorSpace {
    pub freqs: Vec<f64>,
    pub occupations: Vec<f64>,
    pub max_quanta: usize,
    states: Vec<State>,
    offsets: Vec<usize>,
    binom: Vec<Vec<u64>>,
    pub energies: Vec<f64>,
}

fn binomial_table(n: usize, k: usize) -> Vec<Vec<u64>> {
    let mut t = vec![vec![0u64; k + 1]; n + 1];
    for a in 0..=n {
        t[a][0] = 1;
        for b in 1..=k.min(a) {
            t[a][b] = t[a - 1][b - 1].saturating_add(if b <= a - 1 { t[a - 1][b] } else { 0 });
        }
    }
    t
}

impl SectorSpace {
    pub fn new(bath: &DiscretizedBath, beta: f64, max_quanta: usize, max_dim: usize, n_sys: usize) -> Result<Self> {
        if max_quanta > MAX_QUANTA {
            return Err(Error::Validation(format!("at most {MAX_QUANTA} quanta are supported, got {max_quanta}")));
        }
        let k = bath.len();
        let n_osc = 2 * k;
        if n_osc >= u16::MAX as usize {
            return Err(Error::Resource { what: "thermofield oscillators".into(), dim: n_osc, limit: u16::MAX as usize });
        }
        let binom = binomial_table(n_osc + max_quanta + 1, max_quanta + 1);
        let mut offsets = vec![0usize];
        for m in 0..=max_quanta {
            let count = if n_osc == 0 { (m == 0) as u64 } else { binom[n_osc + m - 1][m] };
            let next = (*offsets.last().unwrap() as u64).saturating_add(count);
            if next.saturating_mul(n_sys as u64) > max_dim as u64 {
                return Err(Error::Resource {
                    what: "thermofield sector space".into(),
                    dim: next.saturating_mul(n_sys as u64).min(usize::MAX as u64) as usize,
                    limit: max_dim,
                });
            }
            offsets.push(next as usize);
        }
        let dim = *offsets.last().unwrap();
        let mut states = vec![State { len: 0, idx: [0; MAX_QUANTA] }; dim];
        let mut space = SectorSpace {
            freqs: bath.freqs(),
            occupations: bath.modes.iter().map(|m| occupation(beta, m.omega)).collect(),
            max_quanta,
            states: Vec::new(),
            offsets,
            binom,
            energies: Vec::new(),
        };
        let mut cur = State { len: 0, idx: [0; MAX_QUANTA] };
        fn fill(space: &SectorSpace, states: &mut [State], cur: &mut State, start: usize, n_osc: usize) {
            let r = space.rank(cur.slice());
            states[r] = *cur;
            if cur.len as usize == space.max_quanta {
                return;
            }
            for j in start..n_osc {
                cur.idx[cur.len as usize] = j as u16;
                cur.len += 1;
                fill(space, states, cur, j, n_osc);
                cur.len -= 1;
            }
        }
        fill(&space, &mut states, &mut cur, 0, n_osc);
        space.energies = states.iter().map(|s| s.slice().iter().map(|&j| space.osc_freq(j as usize)).sum()).collect();
        space.states = states;
        Ok(space)
    }

    pub fn n_modes(&self) -> usize {
        self.freqs.len()
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn osc_freq(&self, j: usize) -> f64 {
        let k = self.n_modes();
        if j < k {
            self.freqs[j]
        } else {
            -self.freqs[j - k]
        }
    }

    /// Colex rank of a sorted multiset within its size block plus the block offset.
    fn rank(&self, s: &[u16]) -> usize {
        let mut r = self.offsets[s.len()] as u64;
        for (i, &x) in s.iter().enumerate() {
            r += self.binom[x as usize + i][i + 1];
        }
        r as usize
    }

    /// `A†(u) + A(w)` with `A†(u) = Σ_j u_j A_j†` and `A(w) = Σ_j w̄_j A_j`.
    pub fn linear(&self, create: &[Complex64], annihilate: &[Complex64]) -> Sparse {
        let n_osc = 2 * self.n_modes();
        assert!(create.len() == n_osc && annihilate.len() == n_osc);
        let mut t = Vec::new();
        let mut buf = [0u16; MAX_QUANTA];
        for (col, s) in self.states.iter().enumerate() {
            let sl = s.slice();
            if sl.len() < self.max_quanta {
                for (j, u) in create.iter().enumerate() {
                    if *u == C0 {
                        continue;
                    }
                    let pos = sl.partition_point(|&x| (x as usize) <= j);
                    let count = sl.iter().filter(|&&x| x as usize == j).count() + 1;
                    buf[..pos].copy_from_slice(&sl[..pos]);
                    buf[pos] = j as u16;
                    buf[pos + 1..sl.len() + 1].copy_from_slice(&sl[pos..]);
                    let row = self.rank(&buf[..sl.len() + 1]);
                    t.push((row, col, u * (count as f64).sqrt()));
                }
            }
            let mut i = 0;
            while i < sl.len() {
                let j = sl[i] as usize;
                let mut run = 1;
                while i + run < sl.len() && sl[i + run] as usize == j {
                    run += 1;
                }
                let w = annihilate[j];
                if w != C0 {
                    buf[..i].copy_from_slice(&sl[..i]);
                    buf[i..sl.len() - 1].copy_from_slice(&sl[i + 1..]);
                    let row = self.rank(&buf[..sl.len() - 1]);
                    t.push((row, col, w.conj() * (run as f64).sqrt()));
                }
                i += run;
            }
        }
        Sparse::from_triplets(self.dim(), t)
    }

    /// Thermofield images of the physical `a†(f) = Σ_k c_k a_k†`: the
    /// creation and annihilation coefficient vectors on the `2K` oscillators.
    pub fn creation_parts(&self, coeffs: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let k = self.n_modes();
        let mut u = vec![C0; 2 * k];
        let mut w = vec![C0; 2 * k];
        for i in 0..k {
            u[i] = coeffs[i] * (1.0 + self.occupations[i]).sqrt();
            w[k + i] = -coeffs[i].conj() * self.occupations[i].sqrt();
        }
        (u, w)
    }

    pub fn creation(&self, coeffs: &[Complex64]) -> Sparse {
        let (u, w) = self.creation_parts(coeffs);
        self.linear(&u, &w)
    }

    pub fn annihilation(&self, coeffs: &[Complex64]) -> Sparse {
        self.creation(coeffs).adjoint()
    }

    /// `φ(f) = (a†(f) + a(f))/√2`.
    pub fn field(&self, coeffs: &[Complex64]) -> Sparse {
        let cr = self.creation(coeffs);
        cr.add(&cr.adjoint()).scaled(c(std::f64::consts::FRAC_1_SQRT_2))
    }

    /// Index of the thermofield vacuum.
    pub fn vacuum(&self) -> usize {
        0
    }
}

/// `Σ_i S_i ⊗ B_i` with dense system factors; `None` stands for the bath identity.
#[derive(Debug, Clone, Default)]
pub struct CompositeOp {
    pub terms: Vec<(CMatrix, Option<Sparse>)>,
}

impl CompositeOp {
    pub fn system(s: CMatrix) -> Self {
        CompositeOp { terms: vec![(s, None)] }
    }

    pub fn product(s: CMatrix, b: Sparse) -> Self {
        CompositeOp { terms: vec![(s, Some(b))] }
    }

    pub fn push(&mut self, s: CMatrix, b: Option<Sparse>) {
        self.terms.push((s, b));
    }

    pub fn adjoint(&self) -> Self {
        CompositeOp { terms: self.terms.iter().map(|(s, b)| (s.adjoint(), b.as_ref().map(Sparse::adjoint))).collect() }
    }

    /// `y += alpha · O x` for vectors indexed `s·D + b`.
    pub fn mul_add(&self, alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
        for (s, b) in &self.terms {
            let n = s.nrows();
            let d = x.len() / n;
            let mut tmp = vec![C0; x.len()];
            match b {
                Some(b) => {
                    for j in 0..n {
                        b.mul_add(C1, &x[j * d..(j + 1) * d], &mut tmp[j * d..(j + 1) * d]);
                    }
                }
                None => tmp.copy_from_slice(x),
            }
            for i in 0..n {
                for j in 0..n {
                    let sij = s[(i, j)] * alpha;
                    if sij == C0 {
                        continue;
                    }
                    let (src, dst) = (&tmp[j * d..(j + 1) * d], &mut y[i * d..(i + 1) * d]);
                    for (yv, xv) in dst.iter_mut().zip(src) {
                        *yv += sij * xv;
                    }
                }
            }
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![C0; x.len()];
        self.mul_add(C1, x, &mut y);
        y
    }

    pub fn norm_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|(s, b)| linalg::frobenius(s) * b.as_ref().map_or(1.0, Sparse::norm_bound))
            .sum()
    }
}

/// `e^{X} v` by Taylor series with enough sub-steps that each has norm below one.
pub fn expmv(x: &CompositeOp, v: &[Complex64]) -> Vec<Complex64> {
    let steps = x.norm_bound().ceil().max(1.0) as usize;
    let h = c(1.0 / steps as f64);
    let mut out = v.to_vec();
    for _ in 0..steps {
        let mut term = out.clone();
        let base = linalg::frobenius(&CMatrix::from_column_slice(out.len(), 1, &out)).max(1e-300);
        for k in 1..60 {
            let mut next = vec![C0; term.len()];
            x.mul_add(h / c(k as f64), &term, &mut next);
            term = next;
            let norm = term.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for (o, t) in out.iter_mut().zip(&term) {
                *o += t;
            }
            if norm < 1e-17 * base {
                break;
            }
        }
    }
    out
}

/// `e^{-ixX} ψ` for `X` with spectrum in `[-1, 1]`, where `apply(v, y, a, b)`
/// overwrites `y` with `a·Xv + b·y`.
pub fn chebyshev_exp<F>(psi: &[Complex64], x: f64, apply: F) -> Vec<Complex64>
where
    F: Fn(&[Complex64], &mut [Complex64], f64, f64),
{
    let n_terms = (x.abs() + 12.0 * x.abs().cbrt() + 30.0) as usize;
    let jk = bessel_j(n_terms, x);
    let mut phase = C1;
    let coef: Vec<Complex64> = jk
        .iter()
        .enumerate()
        .map(|(k, j)| {
            let z = phase * if k == 0 { *j } else { 2.0 * j };
            phase *= Complex64::new(0.0, -1.0);
            z
        })
        .collect();
    let last = coef.iter().rposition(|z| z.norm() > 1e-16).unwrap_or(0).max(1);
    let mut out: Vec<Complex64> = psi.iter().map(|z| z * coef[0]).collect();
    let mut prev = psi.to_vec();
    let mut cur = vec![C0; psi.len()];
    apply(&prev, &mut cur, 1.0, 0.0);
    for (o, v) in out.iter_mut().zip(&cur) {
        *o += coef[1] * v;
    }
    for ck in coef.iter().take(last + 1).skip(2) {
        // prev <- 2 X cur - prev
        apply(&cur, &mut prev, 2.0, -1.0);
        std::mem::swap(&mut prev, &mut cur);
        for (o, v) in out.iter_mut().zip(&cur) {
            *o += ck * v;
        }
    }
    out
}

/// `e^{iX} v` for Hermitian `X`.
pub fn exp_i_mv(x: &CompositeOp, v: &[Complex64]) -> Vec<Complex64> {
    let r = x.norm_bound() * 1.01 + 1e-12;
    chebyshev_exp(v, r, |src, dst, a, b| {
        dst.iter_mut().for_each(|z| *z *= b);
        x.mul_add(c(-a / r), src, dst);
    })
}

/// Bessel functions `J_0..J_n` of the first kind by Miller's backward recurrence.
pub fn bessel_j(n: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let start = {
        let s = n.max(ax as usize) + 40 + (10.0 * ax.cbrt()) as usize;
        s + (s % 2)
    };
    let mut next = 0.0f64;
    let mut cur = 1e-300f64;
    let mut norm = 0.0f64;
    let mut vals = vec![0.0f64; start + 1];
    vals[start] = cur;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / ax * cur - next;
        next = cur;
        cur = prev;
        vals[k - 1] = cur;
        if cur.abs() > 1e250 {
            for v in vals[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
            next *= 1e-250;
            cur *= 1e-250;
        }
    }
    for (k, v) in vals.iter().enumerate() {
        if k == 0 {
            norm += v;
        } else if k % 2 == 0 {
            norm += 2.0 * v;
        }
    }
    for k in 0..=n {
        let mut v = vals[k] / norm;
        if x < 0.0 && k % 2 == 1 {
            v = -v;
        }
        out[k] = v;
    }
    out
}

/// Extended Hamiltonian on `ℂ^N ⊗ sector space`.
#[derive(Debug, Clone)]
pub struct SectorHamiltonian {
    pub n_sys: usize,
    pub system_energies: Vec<f64>,
    pub bath_energies: Vec<f64>,
    pub lambda: f64,
    pub coupling: CMatrix,
    pub field: Sparse,
    lo: f64,
    hi: f64,
}

impl SectorHamiltonian {
    pub fn new(model: &SystemModel, bath: &DiscretizedBath, space: &SectorSpace, lambda: f64) -> Self {
        let field = space.field(&bath.couplings());
        let es = model.energies().to_vec();
        let (bmin, bmax) = space.energies.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &e| (a.min(e), b.max(e)));
        let g_norm = linalg::trace_norm(model.coupling()).min(linalg::frobenius(model.coupling()));
        let pad = lambda.abs() * g_norm * field.norm_bound();
        let lo = es[0] + bmin - pad;
        let hi = es[es.len() - 1] + bmax + pad;
        SectorHamiltonian {
            n_sys: model.dim(),
            system_energies: es,
            bath_energies: space.energies.clone(),
            lambda,
            coupling: model.coupling().clone(),
            field,
            lo,
            hi,
        }
    }

    pub fn dim(&self) -> usize {
        self.n_sys * self.bath_energies.len()
    }

    /// `y = alpha (H - shift) x + beta_coef y`.
    fn apply_shifted(&self, x: &[Complex64], shift: f64, alpha: f64, y: &mut [Complex64], beta_coef: f64) {
        let d = self.bath_energies.len();
        for s in 0..self.n_sys {
            let es = self.system_energies[s] - shift;
            for b in 0..d {
                let i = s * d + b;
                y[i] = y[i] * beta_coef + x[i] * ((es + self.bath_energies[b]) * alpha);
            }
        }
        if self.lambda != 0.0 {
            let mut tmp = vec![C0; d];
            for j in 0..self.n_sys {
                tmp.iter_mut().for_each(|z| *z = C0);
                self.field.mul_add(C1, &x[j * d..(j + 1) * d], &mut tmp);
                for i in 0..self.n_sys {
                    let g = self.coupling[(i, j)] * (self.lambda * alpha);
                    if g == C0 {
                        continue;
                    }
                    for (yv, tv) in y[i * d..(i + 1) * d].iter_mut().zip(&tmp) {
                        *yv += g * tv;
                    }
                }
            }
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![C0; x.len()];
        self.apply_shifted(x, 0.0, 1.0, &mut y, 0.0);
        y
    }

    /// `e^{-iHt} ψ` by Chebyshev expansion, accurate to about 1e-13 in norm.
    pub fn propagate(&self, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        if t == 0.0 {
            return psi.to_vec();
        }
        if self.lambda == 0.0 {
            return self.free_propagate(psi, t);
        }
        let center = 0.5 * (self.hi + self.lo);
        let radius = 0.5 * (self.hi - self.lo) * 1.01 + 1e-12;
        let mut out = chebyshev_exp(psi, radius * t, |x, y, a, b| self.apply_shifted(x, center, a / radius, y, b));
        let global = Complex64::from_polar(1.0, -center * t);
        out.iter_mut().for_each(|z| *z *= global);
        out
    }

    /// Exact phases of the uncoupled dynamics.
    pub fn free_propagate(&self, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        let d = self.bath_energies.len();
        psi.iter()
            .enumerate()
            .map(|(i, z)| z * Complex64::from_polar(1.0, -(self.system_energies[i / d] + self.bath_energies[i % d]) * t))
            .collect()
    }
}

/// Mixed state `Σ_i |ψ_i⟩⟨ψ_i|` on the extended space.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub n_sys: usize,
    pub vectors: Vec<Vec<Complex64>>,
}

impl Ensemble {
    /// `σ ⊗ vacuum` from the eigendecomposition of `σ`.
    pub fn product(sigma: &CMatrix, bath_dim: usize) -> Self {
        let n = sigma.nrows();
        let (vals, vecs) = linalg::eigh(sigma);
        let mut vectors = Vec::new();
        for (k, p) in vals.iter().enumerate() {
            if *p <= 1e-15 {
                continue;
            }
            let mut v = vec![C0; n * bath_dim];
            for s in 0..n {
                v[s * bath_dim] = vecs[(s, k)] * p.sqrt();
            }
            vectors.push(v);
        }
        Ensemble { n_sys: n, vectors }
    }

    pub fn bath_dim(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.len() / self.n_sys)
    }

    pub fn trace(&self) -> f64 {
        self.vectors.iter().map(|v| v.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum()
    }

    pub fn system_marginal(&self) -> CMatrix {
        let n = self.n_sys;
        let d = self.bath_dim();
        let mut rho = CMatrix::zeros(n, n);
        for v in &self.vectors {
            for i in 0..n {
                for j in 0..n {
                    let mut s = C0;
                    for b in 0..d {
                        s += v[i * d + b] * v[j * d + b].conj();
                    }
                    rho[(i, j)] += s;
                }
            }
        }
        rho
    }

    pub fn expectation(&self, op: &CompositeOp) -> Complex64 {
        self.vectors.iter().map(|v| inner(v, &op.apply(v))).sum()
    }

    pub fn map<F: Fn(&[Complex64]) -> Vec<Complex64> + Sync>(&self, f: F) -> Ensemble {
        Ensemble { n_sys: self.n_sys, vectors: self.vectors.par_iter().map(|v| f(v)).collect() }
    }

    pub fn propagate(&self, h: &SectorHamiltonian, t: f64) -> Ensemble {
        self.map(|v| h.propagate(v, t))
    }

    /// `½‖Σ|ψ_i⟩⟨ψ_i| - Σ|φ_j⟩⟨φ_j|‖₁` from the Gram matrix of both families.
    pub fn trace_distance(&self, other: &Ensemble) -> f64 {
        let a = self.vectors.len();
        let all: Vec<&Vec<Complex64>> = self.vectors.iter().chain(&other.vectors).collect();
        let m = all.len();
        if m == 0 {
            return 0.0;
        }
        let gram = CMatrix::from_fn(m, m, |i, j| inner(all[i], all[j]));
        let (vals, vecs) = linalg::eigh(&gram);
        let top = vals.iter().copied().fold(0.0, f64::max);
        let sign = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(m, (0..m).map(|i| if i < a { C1 } else { -C1 })));
        let keep: Vec<usize> = (0..m).filter(|&i| vals[i] > 1e-14 * top.max(1e-300)).collect();
        let k = keep.len();
        let u = CMatrix::from_fn(m, k, |i, j| vecs[(i, keep[j])] * vals[keep[j]].sqrt());
        let reduced = u.adjoint() * sign * &u;
        let (ev, _) = linalg::eigh(&reduced);
        0.5 * ev.iter().map(|x| x.abs()).sum::<f64>()
    }
}

/// `⟨x, y⟩`, antilinear in the first argument.
pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}
