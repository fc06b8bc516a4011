//! Abelian symmetry groups, twirls and covariant channels.
//!
//! A [`Representation`] is a product of factors, each either a cyclic group generated
//! by one unitary per system or a one-parameter group `t -> exp(-i t H)`. A channel is
//! covariant when `U_g E(X) U_g^dagger = E(V_g X V_g^dagger)`, which on the Choi matrix
//! reads `(conj(V_g) (x) U_g) J (conj(V_g) (x) U_g)^dagger = J`; for one-parameter
//! factors this is `[J, H_in^T (x) I - I (x) H_out] = 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{cluster_sorted, eig_hermitian, kron, ComplexMatrix, C64};
use crate::majorization::{decide_with_symmetry, ConversionProblem, ConversionReport};
use crate::minentropy::min_entropy;
use crate::quantum::{random_channel_rng, validate_state, QuantumChannel};
use crate::sdp::SdpSettings;

/// Residual below which a Choi matrix counts as covariant.
pub const COVARIANCE_TOL: f64 = 1e-8;
/// Relative tolerance for grouping generator eigenvalues.
pub const SPECTRUM_GROUPING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    /// Z_N generated by the given unitaries.
    Cyclic { order: usize },
    /// exp(-i t H) for the given Hamiltonians.
    OneParameter,
}

#[derive(Debug, Clone)]
pub struct RepFactor {
    pub kind: FactorKind,
    pub input: ComplexMatrix,
    pub output: ComplexMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Input,
    Output,
}

impl RepFactor {
    pub fn on(&self, side: Side) -> &ComplexMatrix {
        match side {
            Side::Input => &self.input,
            Side::Output => &self.output,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Representation {
    pub factors: Vec<RepFactor>,
}

fn check_unitary(u: &ComplexMatrix) -> Result<()> {
    let n = u.rows();
    if !u.is_square() || (&u.matmul(&u.adjoint()) - &ComplexMatrix::identity(n)).frobenius_norm() > 1e-9 {
        return Err(Error::Validation("group generator is not unitary".into()));
    }
    Ok(())
}

fn matrix_power(u: &ComplexMatrix, k: usize) -> ComplexMatrix {
    (0..k).fold(ComplexMatrix::identity(u.rows()), |acc, _| acc.matmul(u))
}

impl Representation {
    pub fn trivial() -> Self {
        Self::default()
    }

    pub fn cyclic(order: usize, input: ComplexMatrix, output: ComplexMatrix) -> Result<Self> {
        Self::trivial().with_cyclic(order, input, output)
    }

    pub fn one_parameter(h_in: ComplexMatrix, h_out: ComplexMatrix) -> Result<Self> {
        Self::trivial().with_one_parameter(h_in, h_out)
    }

    pub fn with_cyclic(mut self, order: usize, input: ComplexMatrix, output: ComplexMatrix) -> Result<Self> {
        if order == 0 {
            return Err(Error::Validation("cyclic order must be positive".into()));
        }
        for u in [&input, &output] {
            check_unitary(u)?;
            let n = u.rows();
            if (&matrix_power(u, order) - &ComplexMatrix::identity(n)).frobenius_norm() > 1e-9 {
                return Err(Error::Validation(format!("generator does not satisfy g^{order} = I")));
            }
        }
        self.factors.push(RepFactor { kind: FactorKind::Cyclic { order }, input, output });
        Ok(self)
    }

    pub fn with_one_parameter(mut self, h_in: ComplexMatrix, h_out: ComplexMatrix) -> Result<Self> {
        for h in [&h_in, &h_out] {
            if !h.is_square() || !h.is_hermitian(1e-10) {
                return Err(Error::Validation("one-parameter generator must be Hermitian".into()));
            }
        }
        self.factors.push(RepFactor { kind: FactorKind::OneParameter, input: h_in.hermitian_part(), output: h_out.hermitian_part() });
        Ok(self)
    }

    pub fn is_trivial(&self) -> bool {
        self.factors.is_empty()
    }

    /// Checks that every factor acts on spaces of the given dimensions.
    pub fn check_dims(&self, d_in: usize, d_out: usize) -> Result<()> {
        for f in &self.factors {
            if f.input.rows() != d_in || f.output.rows() != d_out {
                return Err(Error::Dimension(format!(
                    "representation acts on {}->{} but the problem is {d_in}->{d_out}",
                    f.input.rows(),
                    f.output.rows()
                )));
            }
        }
        Ok(())
    }
}

/// Pinching `x` onto the eigenspaces of the Hermitian generator `g`.
pub fn pinch(x: &ComplexMatrix, g: &ComplexMatrix) -> Result<ComplexMatrix> {
    let e = eig_hermitian(g)?;
    let range = e.values.last().unwrap_or(&0.0) - e.values.first().unwrap_or(&0.0);
    let clusters = cluster_sorted(&e.values, SPECTRUM_GROUPING_TOL * (1.0 + range));
    let n = x.rows();
    let mut label = vec![0usize; n];
    for (c, r) in clusters.iter().enumerate() {
        for i in r.clone() {
            label[i] = c;
        }
    }
    let v = &e.vectors;
    let mut y = v.adjoint().matmul(x).matmul(v);
    for i in 0..n {
        for j in 0..n {
            if label[i] != label[j] {
                y[(i, j)] = C64::new(0.0, 0.0);
            }
        }
    }
    Ok(v.matmul(&y).matmul(&v.adjoint()))
}

/// Generator `-H_L^T (x) I + I (x) H_R` of t -> conj(e^{-itH_L}) (x) e^{-itH_R}.
fn pair_generator(h_left: &ComplexMatrix, h_right: &ComplexMatrix) -> ComplexMatrix {
    let (dl, dr) = (h_left.rows(), h_right.rows());
    &kron(&h_left.transpose().scale(-1.0), &ComplexMatrix::identity(dr)) + &kron(&ComplexMatrix::identity(dl), h_right)
}

/// Group average of `(conj(g_left) (x) g_right) x (...)^dagger` over every factor.
pub fn bipartite_twirl(x: &ComplexMatrix, rep: &Representation, left: Side, right: Side) -> Result<ComplexMatrix> {
    let mut out = x.clone();
    for f in &rep.factors {
        let (l, r) = (f.on(left), f.on(right));
        if l.rows() * r.rows() != x.rows() {
            return Err(Error::Dimension("twirl: representation does not match operator dimensions".into()));
        }
        out = match f.kind {
            FactorKind::Cyclic { order } => {
                let w = kron(&l.conj(), r);
                let mut acc = out.clone();
                let mut wk = ComplexMatrix::identity(w.rows());
                for _ in 1..order {
                    wk = wk.matmul(&w);
                    acc += &out.conjugate_by(&wk);
                }
                acc.scale(1.0 / order as f64)
            }
            FactorKind::OneParameter => pinch(&out, &pair_generator(l, r))?,
        };
    }
    Ok(out)
}

/// Twirl of a state on A' (x) C where both systems carry the output action (A' conjugated).
pub fn twirl_state(tau: &ComplexMatrix, rep: &Representation) -> Result<ComplexMatrix> {
    bipartite_twirl(tau, rep, Side::Output, Side::Output)
}

/// Orthogonal projection of a Choi matrix onto the covariant subspace.
pub fn project_choi_covariant(choi: &ComplexMatrix, rep: &Representation) -> Result<ComplexMatrix> {
    bipartite_twirl(choi, rep, Side::Input, Side::Output)
}

/// Hermitian-preserving maps whose kernels are the covariant Choi matrices.
pub(crate) fn covariance_maps(rep: &Representation) -> Vec<Box<dyn Fn(&ComplexMatrix) -> ComplexMatrix + Sync>> {
    rep.factors
        .iter()
        .map(|f| -> Box<dyn Fn(&ComplexMatrix) -> ComplexMatrix + Sync> {
            match f.kind {
                FactorKind::Cyclic { .. } => {
                    let w = kron(&f.input.conj(), &f.output);
                    Box::new(move |j: &ComplexMatrix| &j.conjugate_by(&w) - j)
                }
                FactorKind::OneParameter => {
                    let g = pair_generator(&f.input, &f.output);
                    Box::new(move |j: &ComplexMatrix| g.commutator(j).scale_c(C64::new(0.0, 1.0)))
                }
            }
        })
        .collect()
}

/// Largest covariance residual over factors: conjugation residual over every group
/// element for cyclic factors, commutator norm for one-parameter ones.
pub fn check_covariance(ch: &QuantumChannel, rep: &Representation) -> Result<f64> {
    rep.check_dims(ch.d_in(), ch.d_out())?;
    let j = ch.choi();
    let mut worst = 0.0f64;
    for f in &rep.factors {
        match f.kind {
            FactorKind::Cyclic { order } => {
                let w = kron(&f.input.conj(), &f.output);
                let mut wk = ComplexMatrix::identity(w.rows());
                for _ in 1..order {
                    wk = wk.matmul(&w);
                    worst = worst.max((&j.conjugate_by(&wk) - j).frobenius_norm());
                }
            }
            FactorKind::OneParameter => {
                worst = worst.max(pair_generator(&f.input, &f.output).commutator(j).frobenius_norm());
            }
        }
    }
    Ok(worst)
}

pub fn is_covariant(ch: &QuantumChannel, rep: &Representation) -> Result<bool> {
    Ok(check_covariance(ch, rep)? <= COVARIANCE_TOL * ch.choi().frobenius_norm().max(1.0))
}

/// Decides whether a covariant channel maps every input state to its target.
pub fn decide_covariant_conversion(
    problem: &ConversionProblem,
    rep: &Representation,
    settings: &SdpSettings,
) -> Result<ConversionReport> {
    decide_with_symmetry(problem, Some(rep), settings)
}

/// `H_min(A'|B)` of the twirled product `eta (x) rho`, with A' carrying the conjugate
/// output action and the state carrying the action of `side`.
pub fn asymmetry_monotone(
    eta: &ComplexMatrix,
    rho: &ComplexMatrix,
    rep: &Representation,
    side: Side,
    settings: &SdpSettings,
) -> Result<f64> {
    validate_state(eta)?;
    validate_state(rho)?;
    let omega = bipartite_twirl(&kron(eta, rho), rep, Side::Output, side)?;
    Ok(min_entropy(&omega, eta.rows(), rho.rows(), settings)?.value)
}

pub fn random_covariant_channel_rng(d_in: usize, d_out: usize, rep: &Representation, rng: &mut impl Rng) -> Result<QuantumChannel> {
    rep.check_dims(d_in, d_out)?;
    let ch = random_channel_rng(d_in, d_out, rng);
    QuantumChannel::normalized_from(d_in, d_out, &project_choi_covariant(ch.choi(), rep)?)
}

pub fn random_covariant_channel(d_in: usize, d_out: usize, rep: &Representation, seed: u64) -> Result<QuantumChannel> {
    random_covariant_channel_rng(d_in, d_out, rep, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `exp(2 pi i k / n)` phases on the diagonal: the regular Z_n generator on C^n.
pub fn clock_unitary(n: usize, shifts: &[usize]) -> ComplexMatrix {
    let phases: Vec<C64> = shifts.iter().map(|&k| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64)).collect();
    let d = phases.len();
    let mut u = ComplexMatrix::zeros(d, d);
    for (i, p) in phases.iter().enumerate() {
        u[(i, i)] = *p;
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitary_evolution;
    use crate::quantum::random_state;

    fn z4_rep() -> Representation {
        let u = clock_unitary(4, &[0, 1, 2]);
        Representation::cyclic(4, u.clone(), u).unwrap()
    }

    #[test]
    fn twirl_matches_explicit_sum() {
        let rep = z4_rep();
        let u = clock_unitary(4, &[0, 1, 2]);
        let tau = random_state(9, 3);
        let mut oracle = ComplexMatrix::zeros(9, 9);
        for k in 0..4 {
            let uk = matrix_power(&u, k);
            let w = kron(&uk.conj(), &uk);
            oracle += &tau.conjugate_by(&w);
        }
        oracle = oracle.scale(0.25);
        assert!((&twirl_state(&tau, &rep).unwrap() - &oracle).frobenius_norm() < 1e-13);
    }

    #[test]
    fn trivial_group_is_identity() {
        let tau = random_state(4, 1);
        let out = twirl_state(&tau, &Representation::trivial()).unwrap();
        assert_eq!(out, tau);
        let ch = random_channel_rng(2, 2, &mut ChaCha8Rng::seed_from_u64(2));
        assert_eq!(check_covariance(&ch, &Representation::trivial()).unwrap(), 0.0);
    }

    #[test]
    fn projection_is_idempotent_and_covariant() {
        let rep = z4_rep();
        let ch = random_covariant_channel(3, 3, &rep, 7).unwrap();
        assert!(is_covariant(&ch, &rep).unwrap());
        let again = project_choi_covariant(ch.choi(), &rep).unwrap();
        assert!((&again - ch.choi()).frobenius_norm() < 1e-12);
    }

    #[test]
    fn one_parameter_projection_commutes_with_evolution() {
        let h = ComplexMatrix::diag_real(&[0.0, 1.0, 2.5]);
        let rep = Representation::one_parameter(h.clone(), h.clone()).unwrap();
        let ch = random_covariant_channel(3, 3, &rep, 11).unwrap();
        assert!(check_covariance(&ch, &rep).unwrap() < 1e-10);
        let rho = random_state(3, 12);
        let u = unitary_evolution(&h, 0.83).unwrap();
        let lhs = ch.apply(&rho).conjugate_by(&u);
        let rhs = ch.apply(&rho.conjugate_by(&u));
        assert!((&lhs - &rhs).frobenius_norm() < 1e-10);
    }

    #[test]
    fn cyclic_covariance_means_commuting_with_group() {
        let u = clock_unitary(3, &[0, 1, 2]);
        let rep = Representation::cyclic(3, u.clone(), u.clone()).unwrap();
        let ch = random_covariant_channel(3, 3, &rep, 5).unwrap();
        let rho = random_state(3, 6);
        let lhs = ch.apply(&rho).conjugate_by(&u);
        let rhs = ch.apply(&rho.conjugate_by(&u));
        assert!((&lhs - &rhs).frobenius_norm() < 1e-10);
    }

    #[test]
    fn bad_generators_rejected() {
        let u = clock_unitary(4, &[0, 1]);
        assert!(Representation::cyclic(3, u.clone(), u).is_err());
        let nh = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(Representation::one_parameter(nh.clone(), nh).is_err());
    }

    #[test]
    fn asymmetry_is_monotone_under_covariant_channels() {
        let h = ComplexMatrix::diag_real(&[0.0, 1.0]);
        let rep = Representation::one_parameter(h.clone(), h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let s = SdpSettings::default();
        for _ in 0..5 {
            let eta = crate::quantum::random_state_rng(2, &mut rng);
            let rho = crate::quantum::random_pure_state_rng(2, &mut rng);
            let ch = random_covariant_channel_rng(2, 2, &rep, &mut rng).unwrap();
            let before = asymmetry_monotone(&eta, &rho, &rep, Side::Input, &s).unwrap();
            let after = asymmetry_monotone(&eta, &ch.apply(&rho), &rep, Side::Output, &s).unwrap();
            assert!(before <= after + 1e-6);
        }
    }
}
