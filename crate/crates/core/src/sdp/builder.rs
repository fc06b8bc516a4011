//! Assembles SDPs from linear maps on Hermitian block variables.

use super::{Constraint, SdpProblem, SdpSolution, Sense};
use crate::linalg::{from_hermitian_coords, hermitian_basis, hermitian_coords, ComplexMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupId(usize);

#[derive(Debug, Clone)]
struct Group {
    start: usize,
    /// Output dimension for matrix equalities, `None` for scalar ones.
    dim: Option<usize>,
}

/// A linear map from one block variable into a common output space.
pub type LinearTerm<'a> = (BlockId, &'a dyn Fn(&ComplexMatrix) -> ComplexMatrix);

/// Owned variant of a [`LinearTerm`] map.
pub type LinearTermOwned = Box<dyn Fn(&ComplexMatrix) -> ComplexMatrix>;

#[derive(Debug, Clone, Default)]
pub struct SdpBuilder {
    blocks: Vec<usize>,
    objective: Vec<Option<ComplexMatrix>>,
    constraints: Vec<Constraint>,
    groups: Vec<Group>,
}

impl SdpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn block(&mut self, dim: usize) -> BlockId {
        self.blocks.push(dim);
        self.objective.push(None);
        BlockId(self.blocks.len() - 1)
    }

    pub fn dim(&self, b: BlockId) -> usize {
        self.blocks[b.0]
    }

    pub fn objective(&mut self, b: BlockId, c: ComplexMatrix) {
        self.objective[b.0] = Some(match self.objective[b.0].take() {
            Some(prev) => &prev + &c,
            None => c,
        });
    }

    /// Adds `sum_t L_t(X_t) = rhs` for Hermitian-preserving maps `L_t` into `dim x dim`.
    ///
    /// Each map is expanded over an orthonormal Hermitian basis, producing `dim^2`
    /// scalar constraints whose coefficient matrices are the adjoint images of the
    /// output basis.
    pub fn equality(&mut self, dim: usize, terms: &[LinearTerm<'_>], rhs: &ComplexMatrix) -> GroupId {
        let start = self.constraints.len();
        let out_count = dim * dim;
        let mut rows: Vec<Vec<(usize, ComplexMatrix)>> = vec![Vec::new(); out_count];
        for (block, map) in terms {
            let d = self.blocks[block.0];
            let in_basis = hermitian_basis(d);
            // images[s][r] = <F_r, L(G_s)>
            let images: Vec<Vec<f64>> = in_basis
                .iter()
                .map(|g| {
                    let img = map(g);
                    assert_eq!(img.rows(), dim, "linear term output dimension");
                    hermitian_coords(&img)
                })
                .collect();
            for (r, row) in rows.iter_mut().enumerate() {
                let coords: Vec<f64> = images.iter().map(|im| im[r]).collect();
                if coords.iter().all(|c| *c == 0.0) {
                    continue;
                }
                row.push((block.0, from_hermitian_coords(d, &coords)));
            }
        }
        let rhs_coords = hermitian_coords(rhs);
        for (r, terms) in rows.into_iter().enumerate() {
            self.constraints.push(Constraint { terms, rhs: rhs_coords[r] });
        }
        self.groups.push(Group { start, dim: Some(dim) });
        GroupId(self.groups.len() - 1)
    }

    /// Adds `sum_t Tr(H_t X_t) = rhs`.
    pub fn scalar_equality(&mut self, terms: Vec<(BlockId, ComplexMatrix)>, rhs: f64) -> GroupId {
        let start = self.constraints.len();
        self.constraints.push(Constraint { terms: terms.into_iter().map(|(b, h)| (b.0, h)).collect(), rhs });
        self.groups.push(Group { start, dim: None });
        GroupId(self.groups.len() - 1)
    }

    pub fn build(&self, sense: Sense) -> SdpProblem {
        SdpProblem { blocks: self.blocks.clone(), objective: self.objective.clone(), constraints: self.constraints.clone(), sense }
    }

    /// Dual variable of a matrix equality, reassembled as a Hermitian matrix.
    pub fn dual_matrix(&self, g: GroupId, sol: &SdpSolution) -> ComplexMatrix {
        let group = &self.groups[g.0];
        let dim = group.dim.expect("dual_matrix on a scalar equality");
        from_hermitian_coords(dim, &sol.dual[group.start..group.start + dim * dim])
    }

    pub fn dual_scalar(&self, g: GroupId, sol: &SdpSolution) -> f64 {
        sol.dual[self.groups[g.0].start]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::trace_first;
    use crate::sdp::{solve, SdpSettings};

    #[test]
    fn partial_trace_equality_dual_is_tau() {
        // max Tr(Omega X) s.t. Tr_A X = I for Omega = phi+ on 2x2: value 2 = Tr tau.
        let mut phi = ComplexMatrix::zeros(4, 4);
        for i in [0, 3] {
            for j in [0, 3] {
                phi[(i, j)] = crate::linalg::C64::new(0.5, 0.0);
            }
        }
        let mut b = SdpBuilder::new();
        let x = b.block(4);
        b.objective(x, phi.clone());
        let tr = |m: &ComplexMatrix| trace_first(m, 2, 2);
        let g = b.equality(2, &[(x, &tr)], &ComplexMatrix::identity(2));
        let sol = solve(&b.build(Sense::Maximize), &SdpSettings::default()).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.primal_objective - 2.0).abs() < 1e-7);
        let tau = b.dual_matrix(g, &sol);
        assert!((tau.trace().re - 2.0).abs() < 1e-7);
        let lhs = crate::linalg::kron(&ComplexMatrix::identity(2), &tau);
        let gap = crate::linalg::min_eigenvalue(&(&lhs - &phi)).unwrap();
        assert!(gap > -1e-7);
    }
}
