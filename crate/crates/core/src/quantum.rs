//! States, channels (Choi representation), ensembles and informationally complete POVMs.
//!
//! Choi convention: `J = sum_ij |i><j| (x) E(|i><j|)`, input system first, so that
//! `E(rho) = Tr_in[J (rho^T (x) I)]` and the identity channel has `J = sum_ij |ii><jj|`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, inner, inv_sqrt_pd, kron, norm, real::RealMatrix, trace_first, trace_second, ComplexMatrix, C64, I, ONE,
    ZERO,
};

/// Eigenvalue and trace tolerance for density operators.
pub const STATE_TOL: f64 = 1e-9;
/// Trace-preservation tolerance for channels.
pub const TP_TOL: f64 = 1e-8;
/// Minimum ensemble weight.
pub const MIN_WEIGHT: f64 = 1e-12;
/// Reduction outcomes below this probability trigger the POVM perturbation.
pub const POVM_MIN_PROB: f64 = 1e-8;
/// Mixing strength of the POVM perturbation.
pub const POVM_DELTA: f64 = 1e-6;

/// Checks that `m` is a density matrix: Hermitian, PSD within `STATE_TOL`, unit trace.
pub fn validate_state(m: &ComplexMatrix) -> Result<()> {
    validate_psd(m, "state")?;
    let tr = m.trace();
    if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
        return Err(Error::Validation(format!("state trace is {tr}, expected 1")));
    }
    Ok(())
}

/// Hermitian with minimum eigenvalue >= -STATE_TOL.
pub fn validate_psd(m: &ComplexMatrix, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("{what} must be square, got {}x{}", m.rows(), m.cols())));
    }
    if !m.is_hermitian(1e-9) {
        return Err(Error::Validation(format!("{what} is not Hermitian (defect {:.3e})", m.hermiticity_defect())));
    }
    let lmin = eig_hermitian(&m.hermitian_part())?.values.first().copied().unwrap_or(0.0);
    if lmin < -STATE_TOL {
        return Err(Error::Validation(format!("{what} has negative eigenvalue {lmin:.3e}")));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct DensityOperator {
    dims: Vec<usize>,
    matrix: ComplexMatrix,
}

impl DensityOperator {
    pub fn new(dims: Vec<usize>, matrix: ComplexMatrix) -> Result<Self> {
        let total: usize = dims.iter().product();
        if dims.is_empty() || dims.contains(&0) || total != matrix.rows() {
            return Err(Error::Dimension(format!("dims {dims:?} do not match a {}x{} matrix", matrix.rows(), matrix.cols())));
        }
        validate_state(&matrix)?;
        Ok(Self { dims, matrix: matrix.hermitian_part() })
    }

    pub fn single(matrix: ComplexMatrix) -> Result<Self> {
        let d = matrix.rows();
        Self::new(vec![d], matrix)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }
}

/// |psi><psi| / <psi|psi>.
pub fn pure_state(psi: &[C64]) -> ComplexMatrix {
    let n = norm(psi);
    let v: Vec<C64> = psi.iter().map(|z| z / n).collect();
    ComplexMatrix::outer(&v)
}

pub fn maximally_mixed(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d).scale(1.0 / d as f64)
}

/// Normalized maximally entangled state on C^d (x) C^d.
pub fn max_entangled(d: usize) -> ComplexMatrix {
    let mut psi = vec![ZERO; d * d];
    for i in 0..d {
        psi[i * d + i] = ONE;
    }
    pure_state(&psi)
}

/// Unnormalized |Phi><Phi| = sum_ij |ii><jj|, the Choi matrix of the identity channel.
pub fn identity_choi(d: usize) -> ComplexMatrix {
    max_entangled(d).scale(d as f64)
}

/// `sum_{i,i'} J[(i,o),(i',o')] Y[i,i']`: the channel with Choi matrix `j` applied to `y`.
pub fn apply_choi(j: &ComplexMatrix, d_in: usize, d_out: usize, y: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(d_out, d_out);
    for i in 0..d_in {
        for ip in 0..d_in {
            let w = y[(i, ip)];
            if w == ZERO {
                continue;
            }
            for o in 0..d_out {
                for op in 0..d_out {
                    out[(o, op)] += j[(i * d_out + o, ip * d_out + op)] * w;
                }
            }
        }
    }
    out
}

/// Adjoint (Heisenberg picture) map: Tr(E apply(Y)) = Tr(adjoint(E) Y).
pub fn apply_choi_adjoint(j: &ComplexMatrix, d_in: usize, d_out: usize, e: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(d_in, d_in);
    for i in 0..d_in {
        for ip in 0..d_in {
            let mut acc = ZERO;
            for o in 0..d_out {
                for op in 0..d_out {
                    acc += j[(i * d_out + o, ip * d_out + op)] * e[(op, o)];
                }
            }
            out[(ip, i)] = acc;
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct QuantumChannel {
    d_in: usize,
    d_out: usize,
    choi: ComplexMatrix,
}

impl QuantumChannel {
    pub fn new(d_in: usize, d_out: usize, choi: ComplexMatrix) -> Result<Self> {
        if choi.rows() != d_in * d_out || !choi.is_square() {
            return Err(Error::Dimension(format!("Choi matrix must be {0}x{0}", d_in * d_out)));
        }
        if !choi.is_hermitian(1e-9) {
            return Err(Error::Validation("Choi matrix is not Hermitian".into()));
        }
        let choi = choi.hermitian_part();
        let lmin = eig_hermitian(&choi)?.values[0];
        if lmin < -STATE_TOL * choi.frobenius_norm().max(1.0) {
            return Err(Error::Validation(format!("channel is not completely positive (Choi eigenvalue {lmin:.3e})")));
        }
        let defect = (&trace_second(&choi, d_in, d_out) - &ComplexMatrix::identity(d_in)).frobenius_norm();
        if defect > TP_TOL {
            return Err(Error::Validation(format!("channel is not trace preserving (defect {defect:.3e})")));
        }
        Ok(Self { d_in, d_out, choi })
    }

    pub fn identity(d: usize) -> Self {
        Self { d_in: d, d_out: d, choi: identity_choi(d) }
    }

    pub fn from_kraus(kraus: &[ComplexMatrix]) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::Validation("empty Kraus list".into()))?;
        let (d_out, d_in) = (first.rows(), first.cols());
        let mut choi = ComplexMatrix::zeros(d_in * d_out, d_in * d_out);
        for k in kraus {
            if k.rows() != d_out || k.cols() != d_in {
                return Err(Error::Dimension("Kraus operators differ in shape".into()));
            }
            let v: Vec<C64> = (0..d_in * d_out).map(|idx| k[(idx % d_out, idx / d_out)]).collect();
            choi += &ComplexMatrix::outer(&v);
        }
        Self::new(d_in, d_out, choi)
    }

    /// Rescales the input so that Tr_out J = I exactly, keeping J PSD.
    ///
    /// Used on numerically recovered Choi matrices; covariance is preserved because
    /// the correction commutes with any symmetry of Tr_out J.
    pub fn normalized_from(d_in: usize, d_out: usize, choi: &ComplexMatrix) -> Result<Self> {
        let j = psd_clip(&choi.hermitian_part())?;
        let t = trace_second(&j, d_in, d_out);
        let a = inv_sqrt_pd(&t)?;
        let big = kron(&a, &ComplexMatrix::identity(d_out));
        Self::new(d_in, d_out, j.conjugate_by(&big))
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        apply_choi(&self.choi, self.d_in, self.d_out, rho)
    }

    /// (id_A (x) E) applied to an operator on A (x) in.
    pub fn apply_second(&self, rho: &ComplexMatrix, d_a: usize) -> ComplexMatrix {
        let (di, dout) = (self.d_in, self.d_out);
        let mut out = ComplexMatrix::zeros(d_a * dout, d_a * dout);
        for a in 0..d_a {
            for ap in 0..d_a {
                let blk = rho.sub_block(a * di, ap * di, di, di);
                let img = self.apply(&blk);
                for o in 0..dout {
                    for op in 0..dout {
                        out[(a * dout + o, ap * dout + op)] = img[(o, op)];
                    }
                }
            }
        }
        out
    }

    /// Kraus operators from the eigendecomposition of the Choi matrix.
    pub fn kraus(&self) -> Vec<ComplexMatrix> {
        choi_to_kraus(&self.choi, self.d_in, self.d_out)
    }

    pub fn compose(&self, after: &QuantumChannel) -> Result<QuantumChannel> {
        if self.d_out != after.d_in {
            return Err(Error::Dimension("channel composition dimension mismatch".into()));
        }
        let mut kraus = Vec::new();
        for b in after.kraus() {
            for a in self.kraus() {
                kraus.push(b.matmul(&a));
            }
        }
        QuantumChannel::from_kraus(&kraus)
    }
}

/// Minimal Kraus decomposition; eigenvalues below 1e-14 relative are dropped.
pub fn choi_to_kraus(choi: &ComplexMatrix, d_in: usize, d_out: usize) -> Vec<ComplexMatrix> {
    let e = eig_hermitian(&choi.hermitian_part()).expect("Choi matrix is Hermitian");
    let top = e.values.last().copied().unwrap_or(0.0).max(0.0);
    let mut out = Vec::new();
    for (k, &lam) in e.values.iter().enumerate() {
        if lam <= 1e-14 * top.max(1e-300) {
            continue;
        }
        let s = lam.sqrt();
        out.push(ComplexMatrix::from_fn(d_out, d_in, |o, i| e.vectors[(i * d_out + o, k)] * s));
    }
    out
}

/// Apply via the explicit formula used as an oracle in tests.
pub fn apply_channel(ch: &QuantumChannel, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    if rho.rows() != ch.d_in || !rho.is_square() {
        return Err(Error::Dimension(format!("channel expects {0}x{0} input", ch.d_in)));
    }
    Ok(ch.apply(rho))
}

fn psd_clip(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(eig_hermitian(m)?.map(|v| v.max(0.0)))
}

/// Weighted collection of states on a common space.
#[derive(Debug, Clone)]
pub struct Ensemble {
    weights: Vec<f64>,
    states: Vec<ComplexMatrix>,
}

impl Ensemble {
    pub fn new(weights: Vec<f64>, states: Vec<ComplexMatrix>) -> Result<Self> {
        if weights.len() != states.len() || states.is_empty() {
            return Err(Error::Validation("ensemble needs one weight per state and at least one state".into()));
        }
        if let Some(w) = weights.iter().find(|&&w| !(w >= MIN_WEIGHT)) {
            return Err(Error::Validation(format!("ensemble weight {w} is below {MIN_WEIGHT}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!("ensemble weights sum to {total}")));
        }
        let d = states[0].rows();
        for s in &states {
            if s.rows() != d {
                return Err(Error::Dimension("ensemble states differ in dimension".into()));
            }
            validate_state(s)?;
        }
        Ok(Self { weights, states: states.into_iter().map(|s| s.hermitian_part()).collect() })
    }

    pub fn uniform(states: Vec<ComplexMatrix>) -> Result<Self> {
        let n = states.len();
        Self::new(vec![1.0 / n as f64; n], states)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn states(&self) -> &[ComplexMatrix] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].rows()
    }

    /// Classical-quantum state sum_i q_i |i><i| (x) rho_i.
    pub fn cq_state(&self) -> ComplexMatrix {
        let n = self.len();
        let mut out = ComplexMatrix::zeros(n * self.dim(), n * self.dim());
        for (i, (q, s)) in self.weights.iter().zip(&self.states).enumerate() {
            out += &kron(&ComplexMatrix::unit(n, i, i), &s.scale(*q));
        }
        out
    }
}

/// Informationally complete POVM with its dual frame.
#[derive(Debug, Clone)]
pub struct PovmBasis {
    pub elements: Vec<ComplexMatrix>,
    /// Dual operators with Tr(M_j Q_k) = delta_jk.
    pub duals: Vec<ComplexMatrix>,
}

impl PovmBasis {
    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }

    pub fn probabilities(&self, rho: &ComplexMatrix) -> Vec<f64> {
        self.elements.iter().map(|m| m.inner_re(rho)).collect()
    }

    /// rho = sum_k Tr(M_k rho) Q_k.
    pub fn reconstruct(&self, probs: &[f64]) -> ComplexMatrix {
        let d = self.dim();
        let mut out = ComplexMatrix::zeros(d, d);
        for (p, q) in probs.iter().zip(&self.duals) {
            out.axpy(C64::new(*p, 0.0), q);
        }
        out
    }

    /// (M + delta I) / (1 + d^2 delta): strictly positive elements, still IC.
    pub fn perturbed(&self, delta: f64) -> Result<Self> {
        let d = self.dim();
        let id = ComplexMatrix::identity(d);
        let s = 1.0 / (1.0 + (d * d) as f64 * delta);
        let elements: Vec<ComplexMatrix> = self.elements.iter().map(|m| (m + &id.scale(delta)).scale(s)).collect();
        let duals = dual_frame(&elements)?;
        Ok(Self { elements, duals })
    }
}

fn dual_frame(elements: &[ComplexMatrix]) -> Result<Vec<ComplexMatrix>> {
    let n = elements.len();
    let gram = RealMatrix::from_fn(n, n, |i, j| elements[i].inner_re(&elements[j]));
    let ev = gram.sym_eigvals();
    let cond = ev[n - 1] / ev[0].max(1e-300);
    if !(ev[0] > 0.0) || cond > 1e12 {
        return Err(Error::Singular(format!("POVM Gram matrix condition number {cond:.3e}")));
    }
    let inv = gram.inverse()?;
    Ok((0..n)
        .map(|k| {
            let d = elements[0].rows();
            let mut q = ComplexMatrix::zeros(d, d);
            for l in 0..n {
                q.axpy(C64::new(inv[(k, l)], 0.0), &elements[l]);
            }
            q
        })
        .collect())
}

/// Symmetric IC-POVM built from the d^2 projectors onto |m>, (|m>+|n>)/sqrt2 and
/// (|m>+i|n>)/sqrt2, rescaled by T^{-1/2} with T their sum.
pub fn ic_povm(d: usize) -> Result<PovmBasis> {
    if d == 0 {
        return Err(Error::Validation("dimension must be positive".into()));
    }
    let mut proj = Vec::with_capacity(d * d);
    for m in 0..d {
        proj.push(ComplexMatrix::unit(d, m, m));
    }
    for m in 0..d {
        for n in (m + 1)..d {
            for phase in [ONE, I] {
                let mut v = vec![ZERO; d];
                v[m] = ONE;
                v[n] = phase;
                proj.push(pure_state(&v));
            }
        }
    }
    let mut t = ComplexMatrix::zeros(d, d);
    for p in &proj {
        t += p;
    }
    let ti = inv_sqrt_pd(&t)?;
    let elements: Vec<ComplexMatrix> = proj.iter().map(|p| ti.matmul(p).matmul(&ti).hermitian_part()).collect();
    let duals = dual_frame(&elements)?;
    Ok(PovmBasis { elements, duals })
}

/// Result of measuring the A side of a bipartite state with an IC-POVM.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub ensemble: Ensemble,
    /// POVM actually used (perturbed when some outcome was too unlikely).
    pub povm: PovmBasis,
    pub perturbed: bool,
}

/// rho_j = Tr_A[(M_j (x) I) rho_AB] / p_j with p_j = Tr[(M_j (x) I) rho_AB].
pub fn reduce_bipartite_to_ensemble(rho_ab: &ComplexMatrix, d_a: usize, d_b: usize, povm: &PovmBasis) -> Result<Reduction> {
    if rho_ab.rows() != d_a * d_b || povm.dim() != d_a {
        return Err(Error::Dimension("bipartite state does not match the POVM dimension".into()));
    }
    validate_state(rho_ab)?;
    let branches = |p: &PovmBasis| -> Vec<ComplexMatrix> {
        p.elements
            .iter()
            .map(|m| trace_first(&kron(m, &ComplexMatrix::identity(d_b)).matmul(rho_ab), d_a, d_b).hermitian_part())
            .collect()
    };
    let mut povm = povm.clone();
    let mut perturbed = false;
    let mut raw = branches(&povm);
    if raw.iter().any(|r| r.trace().re < POVM_MIN_PROB) {
        povm = povm.perturbed(POVM_DELTA)?;
        perturbed = true;
        raw = branches(&povm);
    }
    let probs: Vec<f64> = raw.iter().map(|r| r.trace().re).collect();
    let total: f64 = probs.iter().sum();
    let weights: Vec<f64> = probs.iter().map(|p| p / total).collect();
    let states = raw.iter().zip(&probs).map(|(r, p)| r.scale(1.0 / p)).collect();
    Ok(Reduction { ensemble: Ensemble::new(weights, states)?, povm, perturbed })
}

fn gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Ginibre-distributed state G G^dagger / Tr.
pub fn random_state_rng(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let m = g.matmul(&g.adjoint());
    let tr = m.trace().re;
    m.scale(1.0 / tr).hermitian_part()
}

pub fn random_state(d: usize, seed: u64) -> ComplexMatrix {
    random_state_rng(d, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn random_pure_state_rng(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let v: Vec<C64> = (0..d).map(|_| gaussian(rng)).collect();
    pure_state(&v)
}

/// Random probability vector (normalized exponential draws).
pub fn random_distribution_rng(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-3).collect();
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

/// Channel from a Haar-like random isometry C^{d_in} -> C^{d_out} (x) C^{d_in d_out}.
pub fn random_channel_rng(d_in: usize, d_out: usize, rng: &mut impl Rng) -> QuantumChannel {
    let env = d_in * d_out;
    let rows = d_out * env;
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d_in);
    while cols.len() < d_in {
        let mut v: Vec<C64> = (0..rows).map(|_| gaussian(rng)).collect();
        for _ in 0..2 {
            for c in &cols {
                let p = inner(c, &v);
                v.iter_mut().zip(c).for_each(|(a, b)| *a -= p * b);
            }
        }
        let n = norm(&v);
        if n > 1e-8 {
            cols.push(v.iter().map(|z| z / n).collect());
        }
    }
    let kraus: Vec<ComplexMatrix> =
        (0..env).map(|e| ComplexMatrix::from_fn(d_out, d_in, |o, i| cols[i][o * env + e])).collect();
    QuantumChannel::from_kraus(&kraus).expect("isometry dilation yields a channel")
}

pub fn random_channel(d_in: usize, d_out: usize, seed: u64) -> QuantumChannel {
    random_channel_rng(d_in, d_out, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn random_unitary_rng(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let mut u = ComplexMatrix::zeros(d, d);
    let mut cols: Vec<Vec<C64>> = Vec::new();
    while cols.len() < d {
        let mut v: Vec<C64> = (0..d).map(|_| gaussian(rng)).collect();
        for _ in 0..2 {
            for c in &cols {
                let p = inner(c, &v);
                v.iter_mut().zip(c).for_each(|(a, b)| *a -= p * b);
            }
        }
        let n = norm(&v);
        if n > 1e-8 {
            cols.push(v.iter().map(|z| z / n).collect());
        }
    }
    for (j, c) in cols.iter().enumerate() {
        u.set_column(j, c);
    }
    u
}

pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    Ok(0.5 * crate::linalg::trace_norm(&(a - b))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{partial_trace, trace_norm};

    #[test]
    fn identity_channel_is_identity() {
        let rho = random_state(3, 1);
        let out = QuantumChannel::identity(3).apply(&rho);
        assert!((&out - &rho).frobenius_norm() < 1e-14);
    }

    #[test]
    fn apply_matches_kraus_sum() {
        for seed in 0..5 {
            let ch = random_channel(2, 3, seed);
            let rho = random_state(2, 100 + seed);
            let mut oracle = ComplexMatrix::zeros(3, 3);
            for k in ch.kraus() {
                oracle += &k.matmul(&rho).matmul(&k.adjoint());
            }
            assert!((&ch.apply(&rho) - &oracle).frobenius_norm() < 1e-12);
            let direct = partial_trace(&ch.choi().matmul(&kron(&rho.transpose(), &ComplexMatrix::identity(3))), &[2, 3], &[1]).unwrap();
            assert!((&ch.apply(&rho) - &direct).frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn adjoint_map_is_adjoint() {
        let ch = random_channel(3, 2, 7);
        let rho = random_state(3, 8);
        let e = random_state(2, 9);
        let lhs = e.inner_re(&ch.apply(&rho));
        let rhs = apply_choi_adjoint(ch.choi(), 3, 2, &e).inner_re(&rho);
        assert!((lhs - rhs).abs() < 1e-13);
    }

    #[test]
    fn kraus_roundtrip() {
        let ch = random_channel(2, 2, 3);
        let back = QuantumChannel::from_kraus(&ch.kraus()).unwrap();
        assert!((back.choi() - ch.choi()).frobenius_norm() < 1e-12);
    }

    #[test]
    fn non_tp_choi_rejected() {
        let j = identity_choi(2).scale(1.1);
        assert!(QuantumChannel::new(2, 2, j).is_err());
    }

    #[test]
    fn max_entangled_has_mixed_marginal() {
        for d in 2..5 {
            let phi = max_entangled(d);
            let m = trace_first(&phi, d, d);
            assert!((&m - &maximally_mixed(d)).frobenius_norm() < 1e-14);
        }
    }

    #[test]
    fn ic_povm_is_a_povm_and_reconstructs() {
        for d in 2..5 {
            let p = ic_povm(d).unwrap();
            assert_eq!(p.elements.len(), d * d);
            let mut sum = ComplexMatrix::zeros(d, d);
            for m in &p.elements {
                sum += m;
                assert!(eig_hermitian(m).unwrap().values[0] > -1e-14);
            }
            assert!((&sum - &ComplexMatrix::identity(d)).frobenius_norm() < 1e-12);
            let rho = random_state(d, d as u64);
            let rec = p.reconstruct(&p.probabilities(&rho));
            assert!((&rec - &rho).frobenius_norm() < 1e-10);
            for (j, m) in p.elements.iter().enumerate() {
                for (k, q) in p.duals.iter().enumerate() {
                    let expect = if j == k { 1.0 } else { 0.0 };
                    assert!((m.inner_re(q) - expect).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn reduction_of_product_state() {
        let a = random_state(2, 1);
        let b = random_state(3, 2);
        let red = reduce_bipartite_to_ensemble(&kron(&a, &b), 2, 3, &ic_povm(2).unwrap()).unwrap();
        for s in red.ensemble.states() {
            assert!((s - &b).frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn reduction_perturbs_when_outcome_is_impossible() {
        // A pure state orthogonal to the (rank-one) first element has zero probability there.
        let povm = ic_povm(2).unwrap();
        let a = eig_hermitian(&povm.elements[0]).unwrap().map(|v| if v < 1e-12 { 1.0 } else { 0.0 });
        let b = random_state(2, 3);
        let red = reduce_bipartite_to_ensemble(&kron(&a, &b), 2, 2, &povm).unwrap();
        assert!(red.perturbed);
        assert!(red.ensemble.weights().iter().all(|&w| w >= 1e-7));
    }

    #[test]
    fn random_objects_are_valid_and_deterministic() {
        let s1 = random_state(4, 42);
        let s2 = random_state(4, 42);
        assert_eq!(s1, s2);
        validate_state(&s1).unwrap();
        let c = random_channel(3, 2, 5);
        assert!(QuantumChannel::new(3, 2, c.choi().clone()).is_ok());
        assert!(trace_norm(&s1).unwrap() > 0.99);
    }
}
