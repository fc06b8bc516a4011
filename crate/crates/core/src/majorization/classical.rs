//! Classical matrix majorization and thermo-majorization.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::sdp::{solve, SdpBuilder, SdpSettings, SdpStatus, Sense};

/// Residual below which a stochastic transition is accepted.
pub const MATRIX_MAJORIZATION_TOL: f64 = 1e-8;
/// Slack allowed in breakpoint comparisons.
pub const THERMO_TOL: f64 = 1e-9;
/// Smallest admissible Gibbs weight.
pub const MIN_GIBBS_WEIGHT: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct MatrixMajorization {
    pub holds: bool,
    /// Optimal total slack `sum |P X - Q|`.
    pub residual: f64,
    /// Row-stochastic `X` with `P X ~ Q`.
    pub transition: Vec<Vec<f64>>,
}

fn check_rows(m: &[Vec<f64>], what: &str) -> Result<usize> {
    let cols = m.first().map(|r| r.len()).ok_or_else(|| Error::Validation(format!("{what} has no rows")))?;
    if cols == 0 || m.iter().any(|r| r.len() != cols) {
        return Err(Error::Dimension(format!("{what} rows must have equal nonzero length")));
    }
    if m.iter().flatten().any(|v| !(*v >= 0.0)) {
        return Err(Error::Validation(format!("{what} has negative or non-finite entries")));
    }
    Ok(cols)
}

fn scalar(v: f64) -> ComplexMatrix {
    ComplexMatrix::diag_real(&[v])
}

/// Decides whether `Q = P X` for some row-stochastic `X` (rows of `P`, `Q` are paired).
pub fn matrix_majorization(p: &[Vec<f64>], q: &[Vec<f64>], settings: &SdpSettings) -> Result<MatrixMajorization> {
    if p.len() != q.len() {
        return Err(Error::Dimension(format!("P has {} rows but Q has {}", p.len(), q.len())));
    }
    let n = check_rows(p, "P")?;
    let k = check_rows(q, "Q")?;
    let mut b = SdpBuilder::new();
    let x: Vec<Vec<_>> = (0..n).map(|_| (0..k).map(|_| b.block(1)).collect()).collect();
    for row in &x {
        b.scalar_equality(row.iter().map(|&id| (id, scalar(1.0))).collect(), 1.0);
    }
    for (prow, qrow) in p.iter().zip(q) {
        for (c, &target) in qrow.iter().enumerate() {
            let sp = b.block(1);
            let sm = b.block(1);
            b.objective(sp, scalar(1.0));
            b.objective(sm, scalar(1.0));
            let mut terms: Vec<_> = (0..n).filter(|&j| prow[j] != 0.0).map(|j| (x[j][c], scalar(prow[j]))).collect();
            terms.push((sp, scalar(1.0)));
            terms.push((sm, scalar(-1.0)));
            b.scalar_equality(terms, target);
        }
    }
    let tight = settings.clone().with_tolerance(settings.tolerance.min(1e-10));
    let sol = solve(&b.build(Sense::Minimize), &tight)?;
    let usable = match sol.status {
        SdpStatus::Optimal | SdpStatus::NearOptimal => true,
        SdpStatus::MaxIterations | SdpStatus::Stalled => sol.primal_residual < MATRIX_MAJORIZATION_TOL,
        SdpStatus::Infeasible => false,
    };
    if !usable {
        return Err(Error::NonConvergence(format!("matrix majorization LP ended with {:?}", sol.status)));
    }
    let transition: Vec<Vec<f64>> = x
        .iter()
        .map(|row| {
            let vals: Vec<f64> = row.iter().map(|id| sol.primal[id.0][(0, 0)].re.max(0.0)).collect();
            let s: f64 = vals.iter().sum();
            vals.iter().map(|v| v / s).collect()
        })
        .collect();
    let residual = sol.primal_objective.max(0.0);
    Ok(MatrixMajorization { holds: residual <= MATRIX_MAJORIZATION_TOL, residual, transition })
}

fn check_dichotomy(p: &[f64], gamma: &[f64], what: &str) -> Result<()> {
    if p.is_empty() || p.len() != gamma.len() {
        return Err(Error::Dimension(format!("{what}: distribution and Gibbs vector lengths differ")));
    }
    if p.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::Validation(format!("{what}: negative probability")));
    }
    if gamma.iter().any(|g| !(*g >= MIN_GIBBS_WEIGHT)) {
        return Err(Error::Validation(format!("{what}: Gibbs weights must be at least {MIN_GIBBS_WEIGHT:e}")));
    }
    Ok(())
}

fn l1_shift(p: &[f64], gamma: &[f64], t: f64) -> f64 {
    p.iter().zip(gamma).map(|(a, g)| (a - t * g).abs()).sum()
}

/// Breakpoint values of `t` where either `||p - t g||_1` or `||q - t g'||_1` changes slope.
fn breakpoints(p: &[f64], gp: &[f64], q: &[f64], gq: &[f64]) -> Vec<f64> {
    let mut ts: Vec<f64> = std::iter::once(0.0)
        .chain(p.iter().zip(gp).map(|(a, g)| a / g))
        .chain(q.iter().zip(gq).map(|(a, g)| a / g))
        .collect();
    let max = ts.iter().cloned().fold(0.0, f64::max);
    ts.push(max + 1.0);
    ts.sort_by(|a, b| a.total_cmp(b));
    ts.dedup();
    ts
}

/// `min_t (||p - t g_p||_1 - ||q - t g_q||_1)` over all breakpoints; nonnegative
/// exactly when `(p, g_p)` majorizes `(q, g_q)`.
pub fn thermo_margin(p: &[f64], gp: &[f64], q: &[f64], gq: &[f64]) -> Result<f64> {
    check_dichotomy(p, gp, "p")?;
    check_dichotomy(q, gq, "q")?;
    Ok(breakpoints(p, gp, q, gq)
        .into_iter()
        .map(|t| l1_shift(p, gp, t) - l1_shift(q, gq, t))
        .fold(f64::INFINITY, f64::min))
}

/// Relative majorization of dichotomies with possibly different Gibbs vectors and lengths.
pub fn thermo_majorizes(p: &[f64], gp: &[f64], q: &[f64], gq: &[f64]) -> Result<bool> {
    Ok(thermo_margin(p, gp, q, gq)? >= -THERMO_TOL)
}

/// `p` thermo-majorizes `q` with respect to the common Gibbs distribution `gamma`.
pub fn thermo_majorization_check(p: &[f64], q: &[f64], gamma: &[f64]) -> Result<bool> {
    thermo_majorizes(p, gamma, q, gamma)
}

/// Vertices of the thermo-majorization curve: cumulative `(gamma, p)` after sorting
/// levels by decreasing `p_k / gamma_k`.
pub fn thermo_curve_breakpoints(p: &[f64], gamma: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_dichotomy(p, gamma, "p")?;
    let mut idx: Vec<usize> = (0..p.len()).collect();
    idx.sort_by(|&a, &b| (p[b] / gamma[b]).total_cmp(&(p[a] / gamma[a])));
    let mut pts = vec![(0.0, 0.0)];
    let (mut x, mut y) = (0.0, 0.0);
    for i in idx {
        x += gamma[i];
        y += p[i];
        pts.push((x, y));
    }
    Ok(pts)
}

/// Evaluates `sum_j f(p_j) >= sum_k f(q_k)` for every `f(s) = max_x r_x . s` in the family.
///
/// `p` and `q` are given as row matrices; the functionals act on their columns.
pub fn sublinear_criterion(p: &[Vec<f64>], q: &[Vec<f64>], functionals: &[Vec<Vec<f64>>]) -> Result<bool> {
    if p.len() != q.len() {
        return Err(Error::Dimension("P and Q need the same number of rows".into()));
    }
    let (n, k) = (check_rows(p, "P")?, check_rows(q, "Q")?);
    let m = p.len();
    let column = |mat: &[Vec<f64>], j: usize| -> Vec<f64> { mat.iter().map(|r| r[j]).collect() };
    for f in functionals {
        if f.is_empty() || f.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension(format!("functionals must have {m} components")));
        }
        let eval = |s: &[f64]| f.iter().map(|r| r.iter().zip(s).map(|(a, b)| a * b).sum::<f64>()).fold(f64::NEG_INFINITY, f64::max);
        let lhs: f64 = (0..n).map(|j| eval(&column(p, j))).sum();
        let rhs: f64 = (0..k).map(|j| eval(&column(q, j))).sum();
        if lhs < rhs - THERMO_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The family `{max((1, -t) . s, 0)}` at every breakpoint of the two dichotomies.
pub fn thermo_functionals(p: &[f64], gp: &[f64], q: &[f64], gq: &[f64]) -> Vec<Vec<Vec<f64>>> {
    breakpoints(p, gp, q, gq).into_iter().map(|t| vec![vec![1.0, -t], vec![0.0, 0.0]]).collect()
}
