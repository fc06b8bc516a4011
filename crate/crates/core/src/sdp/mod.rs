//! Semidefinite programs over Hermitian block variables.
//!
//! A problem is `min/max sum_b Tr(C_b X_b)` subject to `sum_b Tr(H_jb X_b) = b_j` and
//! `X_b >= 0`. Complex blocks are embedded as real symmetric blocks of twice the size
//! and handed to a primal-dual interior-point method (HKM direction, Mehrotra
//! predictor-corrector). The dual `y` returned is always in the caller's sense:
//! for minimization `sum_j y_j H_j <= C`, for maximization `sum_j y_j H_j >= C`.

mod builder;
mod ipm;
mod presolve;

use std::fmt;
use std::io::Write;
use std::sync::{Arc, Mutex};

use crate::linalg::real::RealMatrix;
use crate::linalg::{ComplexMatrix, C64};

pub use builder::{BlockId, GroupId, LinearTerm, LinearTermOwned, SdpBuilder};

/// Feasibility tolerance used by conversion decisions.
pub const EPS_FEAS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    /// (block index, Hermitian coefficient matrix); blocks not listed have zero coefficient.
    pub terms: Vec<(usize, ComplexMatrix)>,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub blocks: Vec<usize>,
    pub objective: Vec<Option<ComplexMatrix>>,
    pub constraints: Vec<Constraint>,
    pub sense: Sense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    /// Primal infeasible; `certificate` holds a ray y with <b, y> > 0 and sum_j y_j H_j <= 0.
    Infeasible,
    /// Stopped early with residuals and gap within a small multiple of the tolerance.
    NearOptimal,
    MaxIterations,
    /// Step lengths collapsed before the tolerance was met.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub primal: Vec<ComplexMatrix>,
    pub dual: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
    pub certificate: Option<Vec<f64>>,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }

    /// Converts any status other than optimal or near optimal into an error.
    pub fn require_optimal(self, what: &str) -> crate::Result<Self> {
        match self.status {
            SdpStatus::Optimal | SdpStatus::NearOptimal => Ok(self),
            s => Err(crate::Error::NonConvergence(format!(
                "{what}: status {s:?} after {} iterations (primal res {:.2e}, dual res {:.2e}, gap {:.2e})",
                self.iterations, self.primal_residual, self.dual_residual, self.gap
            ))),
        }
    }
}

/// Shared line-oriented sink for per-iteration solver diagnostics.
#[derive(Clone)]
pub struct TraceSink(Arc<Mutex<Box<dyn Write + Send>>>);

impl TraceSink {
    pub fn new(w: impl Write + Send + 'static) -> Self {
        Self(Arc::new(Mutex::new(Box::new(w))))
    }

    pub(crate) fn line(&self, iteration: usize, primal: f64, dual: f64, gap: f64) {
        if let Ok(mut w) = self.0.lock() {
            let _ = writeln!(w, "{iteration} {primal:.6e} {dual:.6e} {gap:.6e}");
        }
    }
}

impl fmt::Debug for TraceSink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TraceSink")
    }
}

#[derive(Debug, Clone)]
pub struct SdpSettings {
    /// Relative tolerance on primal residual, dual residual and duality gap.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub trace: Option<TraceSink>,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_iterations: 200, trace: None }
    }
}

impl SdpSettings {
    pub fn with_tolerance(&self, tolerance: f64) -> Self {
        Self { tolerance, ..self.clone() }
    }
}

/// Real symmetric problem `min <C, X>` s.t. `<A_j, X> = b_j`, `X >= 0` blockwise.
#[derive(Debug, Clone)]
pub struct RealSdp {
    pub blocks: Vec<usize>,
    pub c: Vec<RealMatrix>,
    pub a: Vec<Vec<(usize, RealMatrix)>>,
    pub b: Vec<f64>,
}

/// Real embedding of a Hermitian matrix: [[Re H, -Im H], [Im H, Re H]].
pub fn embed_hermitian(h: &ComplexMatrix) -> RealMatrix {
    let d = h.dim();
    let mut m = RealMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            let z = h[(i, j)];
            m[(i, j)] = z.re;
            m[(i + d, j + d)] = z.re;
            m[(i, j + d)] = -z.im;
            m[(i + d, j)] = z.im;
        }
    }
    m
}

/// Recovers the Hermitian matrix represented by a (possibly unstructured) embedded block.
pub fn unembed_hermitian(m: &RealMatrix) -> ComplexMatrix {
    let d = m.rows() / 2;
    ComplexMatrix::from_fn(d, d, |i, j| {
        let p = 0.5 * (m[(i, j)] + m[(i + d, j + d)]);
        let q = 0.5 * (m[(i + d, j)] - m[(i, j + d)]);
        C64::new(p, q)
    })
}

/// Embeds every Hermitian block into a real symmetric block of twice the size.
///
/// Coefficients are halved so that `<emb(H)/2, emb(X)> = Tr(HX)`; maximization is
/// turned into minimization by negating the objective.
pub fn embed_complex(p: &SdpProblem) -> RealSdp {
    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let c = p
        .blocks
        .iter()
        .enumerate()
        .map(|(k, &d)| match p.objective.get(k).and_then(|o| o.as_ref()) {
            Some(cm) => embed_hermitian(cm).scale(0.5 * sign),
            None => RealMatrix::zeros(2 * d, 2 * d),
        })
        .collect();
    let a = p
        .constraints
        .iter()
        .map(|con| con.terms.iter().map(|(k, h)| (*k, embed_hermitian(h).scale(0.5))).collect())
        .collect();
    RealSdp { blocks: p.blocks.iter().map(|d| 2 * d).collect(), c, a, b: p.constraints.iter().map(|c| c.rhs).collect() }
}

fn validate(p: &SdpProblem) -> crate::Result<()> {
    use crate::Error;
    if p.objective.len() != p.blocks.len() {
        return Err(Error::Dimension("objective must have one entry per block".into()));
    }
    let check = |k: usize, m: &ComplexMatrix, what: &str| -> crate::Result<()> {
        let d = *p.blocks.get(k).ok_or_else(|| Error::Dimension(format!("{what}: block {k} does not exist")))?;
        if m.rows() != d || m.cols() != d {
            return Err(Error::Dimension(format!("{what}: block {k} expects {d}x{d}, got {}x{}", m.rows(), m.cols())));
        }
        if !m.is_hermitian(1e-9) {
            return Err(Error::NotHermitian(m.hermiticity_defect()));
        }
        Ok(())
    };
    for (k, o) in p.objective.iter().enumerate() {
        if let Some(m) = o {
            check(k, m, "objective")?;
        }
    }
    for (j, con) in p.constraints.iter().enumerate() {
        for (k, m) in &con.terms {
            check(*k, m, &format!("constraint {j}"))?;
        }
        if !con.rhs.is_finite() {
            return Err(Error::Validation(format!("constraint {j} has non-finite right-hand side")));
        }
    }
    Ok(())
}

/// Solves a Hermitian block SDP.
pub fn solve(problem: &SdpProblem, settings: &SdpSettings) -> crate::Result<SdpSolution> {
    validate(problem)?;
    let real = embed_complex(problem);
    let sol = ipm::solve_real(&real, settings);
    let sign = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let primal: Vec<ComplexMatrix> = sol.x.iter().map(unembed_hermitian).collect();
    let mut pobj = 0.0;
    for (k, o) in problem.objective.iter().enumerate() {
        if let Some(c) = o {
            pobj += c.inner_re(&primal[k]);
        }
    }
    let dual: Vec<f64> = sol.y.iter().map(|v| v * sign).collect();
    let dobj: f64 = dual.iter().zip(&problem.constraints).map(|(y, c)| y * c.rhs).sum();
    Ok(SdpSolution {
        status: sol.status,
        primal,
        certificate: sol.certificate,
        dual,
        primal_objective: pobj,
        dual_objective: dobj,
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
        gap: sol.gap,
        iterations: sol.iterations,
    })
}
