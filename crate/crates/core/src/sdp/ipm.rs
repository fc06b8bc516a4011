//! Infeasible primal-dual interior-point method, HKM direction with Mehrotra correction.

use super::presolve::{presolve, Presolved};
use super::{RealSdp, SdpSettings, SdpStatus};
use crate::linalg::real::RealMatrix;

pub(crate) struct RealSolution {
    pub status: SdpStatus,
    pub x: Vec<RealMatrix>,
    pub y: Vec<f64>,
    pub certificate: Option<Vec<f64>>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
}

struct Term {
    block: usize,
    dense: RealMatrix,
    /// Nonzero entries (flat index, value) when the matrix is sparse.
    sparse: Option<Vec<(usize, f64)>>,
}

impl Term {
    fn new(block: usize, dense: RealMatrix) -> Self {
        let nz: Vec<(usize, f64)> = dense.data().iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (i, *v)).collect();
        let sparse = (nz.len() * 3 < dense.data().len()).then_some(nz);
        Self { block, dense, sparse }
    }

    fn dot(&self, m: &RealMatrix) -> f64 {
        match &self.sparse {
            Some(nz) => {
                let d = m.data();
                nz.iter().map(|(i, v)| v * d[*i]).sum()
            }
            None => self.dense.dot(m),
        }
    }
}

struct Problem<'a> {
    blocks: &'a [usize],
    b: &'a [f64],
    cons: Vec<Vec<Term>>,
    /// For each block: (constraint index, term index).
    by_block: Vec<Vec<(usize, usize)>>,
}

impl<'a> Problem<'a> {
    fn new(p: &'a RealSdp) -> Self {
        let cons: Vec<Vec<Term>> = p
            .a
            .iter()
            .map(|c| {
                // One term per block.
                let mut merged: Vec<(usize, RealMatrix)> = Vec::new();
                for (k, a) in c {
                    match merged.iter_mut().find(|(b, _)| b == k) {
                        Some((_, acc)) => acc.axpy(1.0, a),
                        None => merged.push((*k, a.clone())),
                    }
                }
                merged.into_iter().map(|(k, a)| Term::new(k, a)).collect()
            })
            .collect();
        let mut by_block = vec![Vec::new(); p.blocks.len()];
        for (i, c) in cons.iter().enumerate() {
            for (t, term) in c.iter().enumerate() {
                by_block[term.block].push((i, t));
            }
        }
        Self { blocks: &p.blocks, b: &p.b, cons, by_block }
    }

    fn m(&self) -> usize {
        self.b.len()
    }

    fn a_op(&self, x: &[RealMatrix]) -> Vec<f64> {
        self.cons.iter().map(|c| c.iter().map(|t| t.dot(&x[t.block])).sum()).collect()
    }

    fn at_op(&self, y: &[f64]) -> Vec<RealMatrix> {
        let mut out: Vec<RealMatrix> = self.blocks.iter().map(|&n| RealMatrix::zeros(n, n)).collect();
        for (i, c) in self.cons.iter().enumerate() {
            if y[i] == 0.0 {
                continue;
            }
            for t in c {
                out[t.block].axpy(y[i], &t.dense);
            }
        }
        out
    }

    /// M_ij = sum_blocks Tr(A_i X A_j S^{-1}).
    fn schur(&self, x: &[RealMatrix], sinv: &[RealMatrix]) -> RealMatrix {
        let m = self.m();
        let mut big = RealMatrix::zeros(m, m);
        for (k, list) in self.by_block.iter().enumerate() {
            for &(j, tj) in list {
                let g = x[k].matmul(&self.cons[j][tj].dense.matmul(&sinv[k]));
                for &(i, ti) in list {
                    if i > j {
                        continue;
                    }
                    // A_i symmetric: Tr(A_i G) = <A_i, G>.
                    big[(i, j)] += self.cons[i][ti].dot(&g);
                }
            }
        }
        for i in 0..m {
            for j in (i + 1)..m {
                big[(j, i)] = big[(i, j)];
            }
        }
        big
    }
}

fn blocks_dot(a: &[RealMatrix], b: &[RealMatrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn blocks_norm(a: &[RealMatrix]) -> f64 {
    a.iter().map(|x| x.dot(x)).sum::<f64>().sqrt()
}

fn vnorm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest step t with X + t dX >= 0 (infinite when dX is PSD).
fn max_step(x: &[RealMatrix], dx: &[RealMatrix]) -> f64 {
    let mut step = f64::INFINITY;
    for (xk, dk) in x.iter().zip(dx) {
        let l = match xk.cholesky() {
            Ok(l) => l,
            Err(_) => return 0.0,
        };
        let li = l.lower_inverse();
        let mut w = li.matmul(dk).matmul(&li.transpose());
        w.symmetrize();
        let lmin = w.sym_eigvals()[0];
        if lmin < 0.0 {
            step = step.min(-1.0 / lmin);
        }
    }
    step
}

enum SchurFactor {
    Cholesky(RealMatrix),
    Dense(RealMatrix),
}

impl SchurFactor {
    fn new(m: RealMatrix) -> Option<Self> {
        if let Ok(l) = m.cholesky() {
            return Some(Self::Cholesky(l));
        }
        let n = m.rows();
        let maxd = (0..n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
        let mut reg = m.clone();
        reg.add_identity(1e-12 * maxd);
        if let Ok(l) = reg.cholesky() {
            return Some(Self::Cholesky(l));
        }
        Some(Self::Dense(m))
    }

    fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        match self {
            Self::Cholesky(l) => Some(RealMatrix::cholesky_solve(l, rhs)),
            Self::Dense(m) => m.lu_solve(rhs).ok(),
        }
    }
}

pub(crate) fn solve_real(p: &RealSdp, settings: &SdpSettings) -> RealSolution {
    let m = p.b.len();
    match presolve(p) {
        Presolved::Inconsistent(y) => RealSolution {
            status: SdpStatus::Infeasible,
            x: p.blocks.iter().map(|&n| RealMatrix::zeros(n, n)).collect(),
            y: vec![0.0; m],
            certificate: Some(y),
            primal_residual: f64::INFINITY,
            dual_residual: f64::INFINITY,
            gap: f64::INFINITY,
            iterations: 0,
        },
        Presolved::Reduced { problem, kept } => {
            let mut sol = ipm(&problem, settings);
            let mut y = vec![0.0; m];
            for (k, &(i, s)) in kept.iter().enumerate() {
                y[i] = sol.y[k] * s;
            }
            sol.certificate = sol.certificate.map(|c| {
                let mut full = vec![0.0; m];
                for (k, &(i, s)) in kept.iter().enumerate() {
                    full[i] = c[k] * s;
                }
                full
            });
            sol.y = y;
            sol
        }
    }
}

struct Iterate {
    x: Vec<RealMatrix>,
    y: Vec<f64>,
    relp: f64,
    reld: f64,
    gap: f64,
}

/// Iterates within this multiple of the tolerance are reported as near optimal.
const NEAR_OPTIMAL_FACTOR: f64 = 100.0;

fn ipm(p: &RealSdp, settings: &SdpSettings) -> RealSolution {
    let prob = Problem::new(p);
    let m = prob.m();
    let n_total: usize = p.blocks.iter().sum();
    let nf = n_total as f64;
    let tol = settings.tolerance;

    let b_norm = vnorm(&p.b);
    let c_norm = blocks_norm(&p.c);

    // Initial point scaled to the data.
    let mut x = Vec::with_capacity(p.blocks.len());
    let mut s = Vec::with_capacity(p.blocks.len());
    for (k, &n) in p.blocks.iter().enumerate() {
        let sn = (n as f64).sqrt();
        let mut xi = 10f64.max(sn);
        let mut eta = 10f64.max(sn).max(p.c[k].norm());
        for &(i, t) in &prob.by_block[k] {
            let an = prob.cons[i][t].dense.norm();
            xi = xi.max(sn * (1.0 + p.b[i].abs()) / (1.0 + an));
            eta = eta.max(an);
        }
        let mut xm = RealMatrix::identity(n);
        xm.scale_mut(xi);
        let mut sm = RealMatrix::identity(n);
        sm.scale_mut(eta);
        x.push(xm);
        s.push(sm);
    }
    let mut y = vec![0.0; m];

    let mut best: Option<Iterate> = None;
    let mut stall = 0;
    let mut status = SdpStatus::MaxIterations;
    let mut iterations = 0;
    let mut certificate = None;
    let mut last = (f64::INFINITY, f64::INFINITY, f64::INFINITY);

    for iter in 0..settings.max_iterations {
        iterations = iter;
        let ax = prob.a_op(&x);
        let rp: Vec<f64> = p.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let aty = prob.at_op(&y);
        let rd: Vec<RealMatrix> = (0..p.blocks.len()).map(|k| p.c[k].sub(&s[k]).sub(&aty[k])).collect();
        let pobj = blocks_dot(&p.c, &x);
        let dobj: f64 = p.b.iter().zip(&y).map(|(b, v)| b * v).sum();
        let relp = vnorm(&rp) / (1.0 + b_norm);
        let reld = blocks_norm(&rd) / (1.0 + c_norm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        if let Some(t) = &settings.trace {
            t.line(iter, relp, reld, gap);
        }
        last = (relp, reld, gap);
        let score = relp.max(reld).max(gap);
        if best.as_ref().map_or(true, |b| score < b.relp.max(b.reld).max(b.gap)) {
            best = Some(Iterate { x: x.clone(), y: y.clone(), relp, reld, gap });
        }
        if relp <= tol && reld <= tol && gap <= tol {
            status = SdpStatus::Optimal;
            break;
        }
        if dobj > 1e8 * (1.0 + c_norm) {
            // Diverging dual: test y as a Farkas ray for primal infeasibility.
            let worst = aty.iter().map(|a| a.sym_eigvals().last().copied().unwrap_or(0.0)).fold(f64::NEG_INFINITY, f64::max);
            if worst <= 1e-7 * dobj {
                status = SdpStatus::Infeasible;
                certificate = Some(y.iter().map(|v| v / dobj).collect());
                break;
            }
        }

        let mu = blocks_dot(&x, &s) / nf;
        let sinv: Vec<RealMatrix> = match s.iter().map(|sk| sk.spd_inverse()).collect::<Result<Vec<_>, _>>() {
            Ok(v) => v,
            Err(_) => {
                status = SdpStatus::Stalled;
                break;
            }
        };
        let factor = match SchurFactor::new(prob.schur(&x, &sinv)) {
            Some(f) => f,
            None => {
                status = SdpStatus::Stalled;
                break;
            }
        };
        // h = X Rd S^{-1}
        let h: Vec<RealMatrix> = (0..p.blocks.len()).map(|k| x[k].matmul(&rd[k]).matmul(&sinv[k])).collect();
        let ah = prob.a_op(&h);

        let direction = |rc_sinv: &[RealMatrix]| -> Option<(Vec<RealMatrix>, Vec<f64>, Vec<RealMatrix>)> {
            let arc = prob.a_op(rc_sinv);
            let rhs: Vec<f64> = (0..m).map(|i| rp[i] - arc[i] + ah[i]).collect();
            let dy = factor.solve(&rhs)?;
            let atdy = prob.at_op(&dy);
            let ds: Vec<RealMatrix> = (0..p.blocks.len()).map(|k| rd[k].sub(&atdy[k])).collect();
            let dx: Vec<RealMatrix> = (0..p.blocks.len())
                .map(|k| {
                    let mut d = rc_sinv[k].sub(&x[k].matmul(&ds[k]).matmul(&sinv[k]));
                    d.symmetrize();
                    d
                })
                .collect();
            Some((dx, dy, ds))
        };

        // Predictor: R_c S^{-1} = -X.
        let pred_rc: Vec<RealMatrix> = x.iter().map(|xk| xk.scale(-1.0)).collect();
        let Some((dxa, _dya, dsa)) = direction(&pred_rc) else {
            status = SdpStatus::Stalled;
            break;
        };
        let ap = max_step(&x, &dxa).min(1.0);
        let ad = max_step(&s, &dsa).min(1.0);
        let mut mu_aff = 0.0;
        for k in 0..p.blocks.len() {
            let mut xa = x[k].clone();
            xa.axpy(ap, &dxa[k]);
            let mut sa = s[k].clone();
            sa.axpy(ad, &dsa[k]);
            mu_aff += xa.dot(&sa);
        }
        mu_aff /= nf;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector: R_c S^{-1} = sigma mu S^{-1} - X - dXa dSa S^{-1}.
        let corr_rc: Vec<RealMatrix> = (0..p.blocks.len())
            .map(|k| {
                let mut r = sinv[k].scale(sigma * mu);
                r.axpy(-1.0, &x[k]);
                r.axpy(-1.0, &dxa[k].matmul(&dsa[k]).matmul(&sinv[k]));
                r
            })
            .collect();
        let Some((dx, dy, ds)) = direction(&corr_rc) else {
            status = SdpStatus::Stalled;
            break;
        };
        let gamma = 0.9 + 0.09 * ap.min(ad);
        let ap = (gamma * max_step(&x, &dx)).min(1.0);
        let ad = (gamma * max_step(&s, &ds)).min(1.0);
        if ap < 1e-10 && ad < 1e-10 {
            stall += 1;
            if stall >= 3 {
                status = SdpStatus::Stalled;
                break;
            }
        } else {
            stall = 0;
        }
        for k in 0..p.blocks.len() {
            x[k].axpy(ap, &dx[k]);
            x[k].symmetrize();
            s[k].axpy(ad, &ds[k]);
            s[k].symmetrize();
        }
        for (yi, di) in y.iter_mut().zip(&dy) {
            *yi += ad * di;
        }
        iterations = iter + 1;
    }

    match status {
        SdpStatus::Optimal | SdpStatus::Infeasible => RealSolution {
            status,
            x,
            y,
            certificate,
            primal_residual: last.0,
            dual_residual: last.1,
            gap: last.2,
            iterations,
        },
        _ => {
            let b = best.expect("at least one iterate");
            // Degenerate problems often stall just short of the tolerance.
            let status = if b.relp.max(b.reld).max(b.gap) <= NEAR_OPTIMAL_FACTOR * tol { SdpStatus::NearOptimal } else { status };
            RealSolution {
                status,
                x: b.x,
                y: b.y,
                certificate: None,
                primal_residual: b.relp,
                dual_residual: b.reld,
                gap: b.gap,
                iterations,
            }
        }
    }
}
