//! Removal of linearly dependent equality constraints.

use super::RealSdp;
use crate::linalg::real::RealMatrix;

const DEPENDENCE_TOL: f64 = 1e-9;
const CONSISTENCY_TOL: f64 = 1e-8;

pub(crate) enum Presolved {
    Reduced {
        problem: RealSdp,
        /// Original index and scale of every kept constraint.
        kept: Vec<(usize, f64)>,
    },
    /// Ray y with sum_j y_j A_j = 0 and <b, y> > 0.
    Inconsistent(Vec<f64>),
}

fn svec(m: &RealMatrix, out: &mut [f64]) {
    let n = m.rows();
    let s2 = std::f64::consts::SQRT_2;
    let mut idx = 0;
    for i in 0..n {
        out[idx] = m[(i, i)];
        idx += 1;
        for j in (i + 1)..n {
            out[idx] = s2 * 0.5 * (m[(i, j)] + m[(j, i)]);
            idx += 1;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn presolve(p: &RealSdp) -> Presolved {
    let offsets: Vec<usize> = p
        .blocks
        .iter()
        .scan(0, |acc, &n| {
            let o = *acc;
            *acc += n * (n + 1) / 2;
            Some(o)
        })
        .collect();
    let width: usize = p.blocks.iter().map(|n| n * (n + 1) / 2).sum();
    let m = p.b.len();

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut norms = Vec::with_capacity(m);
    for con in &p.a {
        let mut r = vec![0.0; width];
        for (k, a) in con {
            let n = p.blocks[*k];
            let mut tmp = vec![0.0; n * (n + 1) / 2];
            svec(a, &mut tmp);
            for (dst, v) in r[offsets[*k]..].iter_mut().zip(&tmp) {
                *dst += v;
            }
        }
        let nr = dot(&r, &r).sqrt();
        norms.push(nr);
        rows.push(r);
    }
    let max_norm = norms.iter().cloned().fold(0.0, f64::max);

    let mut basis: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut kept = Vec::new();
    for i in 0..m {
        if norms[i] <= 1e-14 * max_norm.max(1e-300) {
            if p.b[i].abs() > CONSISTENCY_TOL {
                let mut y = vec![0.0; m];
                y[i] = p.b[i].signum();
                return Presolved::Inconsistent(y);
            }
            continue;
        }
        let mut v: Vec<f64> = rows[i].iter().map(|x| x / norms[i]).collect();
        let mut c = vec![0.0; m];
        c[i] = 1.0;
        for _ in 0..2 {
            for (q, cq) in &basis {
                let proj = dot(&v, q);
                if proj != 0.0 {
                    v.iter_mut().zip(q).for_each(|(a, b)| *a -= proj * b);
                    c.iter_mut().zip(cq).for_each(|(a, b)| *a -= proj * b);
                }
            }
        }
        let nv = dot(&v, &v).sqrt();
        if nv < DEPENDENCE_TOL {
            // sum_j c_j A_j / |A_j| ~ 0: the right-hand sides must agree.
            let y: Vec<f64> = c.iter().zip(&norms).map(|(cj, nj)| if *cj == 0.0 { 0.0 } else { cj / nj }).collect();
            let by = dot(&y, &p.b);
            let scale: f64 = y.iter().zip(&p.b).map(|(a, b)| (a * b).abs()).sum::<f64>() + c.iter().map(|x| x.abs()).sum::<f64>();
            if by.abs() > CONSISTENCY_TOL * scale.max(1.0) {
                let s = by.signum();
                return Presolved::Inconsistent(y.iter().map(|v| v * s).collect());
            }
            continue;
        }
        v.iter_mut().for_each(|a| *a /= nv);
        c.iter_mut().for_each(|a| *a /= nv);
        basis.push((v, c));
        kept.push((i, 1.0 / norms[i]));
    }

    let problem = RealSdp {
        blocks: p.blocks.clone(),
        c: p.c.clone(),
        a: kept.iter().map(|&(i, s)| p.a[i].iter().map(|(k, a)| (*k, a.scale(s))).collect()).collect(),
        b: kept.iter().map(|&(i, s)| p.b[i] * s).collect(),
    };
    Presolved::Reduced { problem, kept }
}
