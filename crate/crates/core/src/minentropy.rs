//! Conditional min-entropy and guessing probabilities.
//!
//! `H_min(A|B) = -log2 min { Tr tau : I_A (x) tau >= Omega }`. The solver works on the
//! dual form `max Tr(Omega X)` with `Tr_A X = I_B`, whose equality multiplier is the
//! optimal `tau`; one solve therefore yields both operators and the duality gap.

use crate::error::{Error, Result};
use crate::linalg::{kron, trace_first, trace_norm, ComplexMatrix};
use crate::quantum::{validate_psd, Ensemble};
use crate::sdp::{solve, SdpBuilder, SdpSettings, Sense};

/// Largest accepted primal-dual gap on 2^{-H_min}.
pub const GAP_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct MinEntropyResult {
    /// H_min(A|B) in bits.
    pub value: f64,
    /// 2^{-H_min} = Tr tau at the optimum.
    pub exp_value: f64,
    pub optimal_tau: ComplexMatrix,
    pub optimal_x: ComplexMatrix,
    pub gap: f64,
}

/// H_min(A|B) of a (possibly sub-normalized) PSD operator on A (x) B.
pub fn min_entropy(omega: &ComplexMatrix, d_a: usize, d_b: usize, settings: &SdpSettings) -> Result<MinEntropyResult> {
    if omega.rows() != d_a * d_b || !omega.is_square() {
        return Err(Error::Dimension(format!("operator is {}x{}, expected {1}x{1}", omega.rows(), d_a * d_b)));
    }
    validate_psd(omega, "min-entropy operator")?;
    let tr = omega.trace().re;
    if tr <= 1e-14 {
        return Err(Error::Validation("min-entropy operator must be nonzero".into()));
    }
    if tr > 1.0 + 1e-9 {
        return Err(Error::Validation(format!("min-entropy operator has trace {tr} > 1")));
    }
    let omega = omega.hermitian_part();
    let mut b = SdpBuilder::new();
    let x = b.block(d_a * d_b);
    b.objective(x, omega.clone());
    let tr_a = |m: &ComplexMatrix| trace_first(m, d_a, d_b);
    let g = b.equality(d_b, &[(x, &tr_a)], &ComplexMatrix::identity(d_b));
    let sol = solve(&b.build(Sense::Maximize), settings)?.require_optimal("min-entropy")?;
    let tau = b.dual_matrix(g, &sol);
    let upper = tau.trace().re;
    let lower = sol.primal_objective;
    let gap = (upper - lower).abs();
    if gap > GAP_TOL {
        return Err(Error::NonConvergence(format!("min-entropy duality gap {gap:.3e} exceeds {GAP_TOL:e}")));
    }
    let exp_value = 0.5 * (upper + lower);
    Ok(MinEntropyResult { value: -exp_value.log2(), exp_value, optimal_tau: tau, optimal_x: sol.primal[x.0].clone(), gap })
}

#[derive(Debug, Clone)]
pub struct GuessResult {
    pub probability: f64,
    /// Optimal measurement, one element per ensemble member.
    pub povm: Vec<ComplexMatrix>,
    pub tau: ComplexMatrix,
    pub gap: f64,
}

/// Optimal probability of identifying the member of an ensemble:
/// `min { Tr tau : tau >= q_i rho_i }`, solved through the POVM form.
pub fn guessing_probability(ens: &Ensemble, settings: &SdpSettings) -> Result<GuessResult> {
    let d = ens.dim();
    let mut b = SdpBuilder::new();
    let blocks: Vec<_> = ens
        .states()
        .iter()
        .zip(ens.weights())
        .map(|(rho, q)| {
            let e = b.block(d);
            b.objective(e, rho.scale(*q));
            e
        })
        .collect();
    let ident = |m: &ComplexMatrix| m.clone();
    let terms: Vec<_> = blocks.iter().map(|&e| (e, &ident as &dyn Fn(&ComplexMatrix) -> ComplexMatrix)).collect();
    let g = b.equality(d, &terms, &ComplexMatrix::identity(d));
    let sol = solve(&b.build(Sense::Maximize), settings)?.require_optimal("guessing probability")?;
    let tau = b.dual_matrix(g, &sol);
    let upper = tau.trace().re;
    let gap = (upper - sol.primal_objective).abs();
    if gap > GAP_TOL {
        return Err(Error::NonConvergence(format!("guessing probability gap {gap:.3e}")));
    }
    Ok(GuessResult {
        probability: 0.5 * (upper + sol.primal_objective),
        povm: blocks.iter().map(|e| sol.primal[e.0].clone()).collect(),
        tau,
        gap,
    })
}

/// Closed form for two hypotheses `A_x = sum_i q_i r_{x|i} rho_i`:
/// `(Tr A_1 + Tr A_2)/2 + ||A_1 - A_2||_1 / 2`.
pub fn helstrom_pair(weights: &[f64], row1: &[f64], row2: &[f64], states: &[ComplexMatrix]) -> Result<f64> {
    let n = weights.len();
    if row1.len() != n || row2.len() != n || states.len() != n || n == 0 {
        return Err(Error::Dimension("weights, rows and states must have equal length".into()));
    }
    if row1.iter().chain(row2).any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Error::Validation("row entries must lie in [0, 1]".into()));
    }
    let d = states[0].rows();
    let mut a1 = ComplexMatrix::zeros(d, d);
    let mut a2 = ComplexMatrix::zeros(d, d);
    for i in 0..n {
        a1 += &states[i].scale(weights[i] * row1[i]);
        a2 += &states[i].scale(weights[i] * row2[i]);
    }
    Ok(0.5 * (a1.trace().re + a2.trace().re) + 0.5 * trace_norm(&(&a1 - &a2))?)
}

/// H_min(X|Y) of a joint distribution `p[x][y]`: `-log2 sum_y max_x p_xy`.
pub fn min_entropy_classical(p: &[Vec<f64>]) -> Result<f64> {
    let cols = p.first().map(|r| r.len()).unwrap_or(0);
    if cols == 0 || p.iter().any(|r| r.len() != cols) {
        return Err(Error::Dimension("distribution must be a non-empty rectangular table".into()));
    }
    if p.iter().flatten().any(|v| !(*v >= 0.0)) {
        return Err(Error::Validation("probabilities must be nonnegative".into()));
    }
    let total: f64 = p.iter().flatten().sum();
    if total <= 0.0 || total > 1.0 + 1e-12 {
        return Err(Error::Validation(format!("distribution has total mass {total}")));
    }
    let s: f64 = (0..cols).map(|y| p.iter().map(|r| r[y]).fold(0.0, f64::max)).sum();
    Ok(-s.log2())
}

/// The joint operator `sum_xy p_xy |x><x| (x) |y><y|`.
pub fn classical_operator(p: &[Vec<f64>]) -> ComplexMatrix {
    let (nx, ny) = (p.len(), p[0].len());
    let mut out = ComplexMatrix::zeros(nx * ny, nx * ny);
    for x in 0..nx {
        for y in 0..ny {
            out[(x * ny + y, x * ny + y)] = crate::linalg::C64::new(p[x][y], 0.0);
        }
    }
    out
}

/// Feasibility residual of a claimed optimal tau: lambda_min(I (x) tau - Omega).
pub fn tau_certificate_margin(omega: &ComplexMatrix, tau: &ComplexMatrix, d_a: usize) -> Result<f64> {
    crate::linalg::min_eigenvalue(&(&kron(&ComplexMatrix::identity(d_a), tau) - omega))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigvals_hermitian;
    use crate::quantum::{max_entangled, maximally_mixed, random_channel_rng, random_state_rng};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn settings() -> SdpSettings {
        SdpSettings::default()
    }

    #[test]
    fn maximally_entangled_and_mixed() {
        for d in 2..=4 {
            let h = min_entropy(&max_entangled(d), d, d, &settings()).unwrap();
            assert!((h.value + (d as f64).log2()).abs() < 1e-7, "d={d}: {}", h.value);
            let sigma = random_state_rng(d, &mut ChaCha8Rng::seed_from_u64(d as u64));
            let h = min_entropy(&kron(&maximally_mixed(d), &sigma), d, d, &settings()).unwrap();
            assert!((h.value - (d as f64).log2()).abs() < 1e-7);
        }
    }

    #[test]
    fn product_state_reduces_to_largest_eigenvalue() {
        // Oracle: H_min(A|B) of rho_A (x) rho_B equals -log2 lambda_max(rho_A).
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (da, db) in [(2, 2), (3, 2), (2, 3)] {
            let a = random_state_rng(da, &mut rng);
            let b = random_state_rng(db, &mut rng);
            let oracle = -eigvals_hermitian(&a).unwrap().last().unwrap().log2();
            let h = min_entropy(&kron(&a, &b), da, db, &settings()).unwrap();
            assert!((h.value - oracle).abs() < 1e-7);
        }
    }

    #[test]
    fn optimal_tau_is_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let omega = random_state_rng(6, &mut rng);
        let h = min_entropy(&omega, 2, 3, &settings()).unwrap();
        assert!(tau_certificate_margin(&omega, &h.optimal_tau, 2).unwrap() > -1e-7);
        assert!(h.gap <= GAP_TOL);
    }

    #[test]
    fn classical_matches_sdp() {
        let p = vec![vec![0.1, 0.25, 0.05], vec![0.3, 0.1, 0.2]];
        let direct = min_entropy_classical(&p).unwrap();
        // Oracle by hand: max column entries 0.3 + 0.25 + 0.2 = 0.75.
        assert!((direct + 0.75f64.log2()).abs() < 1e-15);
        let sdp = min_entropy(&classical_operator(&p), 2, 3, &settings()).unwrap();
        assert!((sdp.value - direct).abs() < 1e-7);
        let uniform = vec![vec![0.25, 0.25], vec![0.25, 0.25]];
        assert!((min_entropy_classical(&uniform).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn helstrom_examples() {
        let rho = ComplexMatrix::unit(2, 0, 0);
        let sigma = ComplexMatrix::unit(2, 1, 1);
        let orth = helstrom_pair(&[0.5, 0.5], &[1.0, 0.0], &[0.0, 1.0], &[rho.clone(), sigma.clone()]).unwrap();
        assert!((orth - 1.0).abs() < 1e-15);
        let same = helstrom_pair(&[0.5, 0.5], &[0.5, 0.5], &[0.5, 0.5], &[rho, sigma]).unwrap();
        assert!((same - 0.5).abs() < 1e-15);
    }

    #[test]
    fn helstrom_matches_guessing_sdp() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = random_state_rng(3, &mut rng);
        let b = random_state_rng(3, &mut rng);
        let ens = Ensemble::new(vec![0.3, 0.7], vec![a.clone(), b.clone()]).unwrap();
        let sdp = guessing_probability(&ens, &settings()).unwrap();
        let closed = helstrom_pair(&[0.3, 0.7], &[1.0, 0.0], &[0.0, 1.0], &[a, b]).unwrap();
        assert!((sdp.probability - closed).abs() < 1e-9);
    }

    #[test]
    fn cq_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let ens = Ensemble::new(vec![0.2, 0.5, 0.3], (0..3).map(|_| random_state_rng(2, &mut rng)).collect()).unwrap();
        let pg = guessing_probability(&ens, &settings()).unwrap().probability;
        let h = min_entropy(&ens.cq_state(), 3, 2, &settings()).unwrap();
        assert!((h.value + pg.log2()).abs() < 1e-7);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(min_entropy(&ComplexMatrix::zeros(4, 4), 2, 2, &settings()).is_err());
        assert!(min_entropy(&ComplexMatrix::identity(3), 2, 2, &settings()).is_err());
        assert!(min_entropy_classical(&[vec![0.7, 0.6]]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn data_processing(seed in any::<u64>(), da in 2usize..4, db in 2usize..4, dc in 2usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let omega = random_state_rng(da * db, &mut rng);
            let ch = random_channel_rng(db, dc, &mut rng);
            let before = min_entropy(&omega, da, db, &settings()).unwrap().value;
            let after = min_entropy(&ch.apply_second(&omega, da), da, dc, &settings()).unwrap().value;
            prop_assert!(before <= after + 1e-6);
        }

        #[test]
        fn bounded_by_log_dimension(seed in any::<u64>(), da in 2usize..4, db in 2usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let omega = random_state_rng(da * db, &mut rng);
            let h = min_entropy(&omega, da, db, &settings()).unwrap().value;
            let l = (da as f64).log2();
            prop_assert!(h >= -l - 1e-7 && h <= l + 1e-7);
        }
    }
}
