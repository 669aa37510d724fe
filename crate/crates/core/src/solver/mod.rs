//! Finite-difference Newton solvers for the maximal-hypersurface equation and the Monge-Ampère
//! equation with Dirichlet data on masked lattices.
//!
//! Interior nodes (every node of the surrounding `3^m` block active) are unknowns; the other
//! active nodes carry Dirichlet values taken from the boundary expression at their coordinates.

mod linear;
mod ma;
mod maximal;

pub use ma::{solve_ma, MaConfig};
pub use maximal::{max_simplex_slope, superlinear_tail, solve_maximal, MaximalConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::graphgeom::LocalGraph;
use crate::lagrangian::{moduli_from_parts, ModuliCurvature};
use crate::lattice::Lattice;
use crate::linalg::Mat;
use crate::tensor::Tensor3;

use linear::{pcg, slot, StencilMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Inactive,
    Dirichlet,
    Interior,
}

/// Scalar field on a lattice. Inactive nodes hold `NaN`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub lattice: Lattice,
    pub kinds: Vec<NodeKind>,
    pub values: Vec<f64>,
}

impl GridField {
    /// Classifies nodes and fills every active node with `init(x)`.
    pub fn from_fn(lattice: Lattice, init: impl Fn(&[f64]) -> Result<f64>) -> Result<Self> {
        let kinds: Vec<NodeKind> = (0..lattice.len())
            .map(|i| {
                if lattice.is_interior(i) {
                    NodeKind::Interior
                } else if lattice.is_active(i) {
                    NodeKind::Dirichlet
                } else {
                    NodeKind::Inactive
                }
            })
            .collect();
        let values = (0..lattice.len())
            .map(|i| match kinds[i] {
                NodeKind::Inactive => Ok(f64::NAN),
                _ => init(&lattice.coords(i)),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GridField {
            lattice,
            kinds,
            values,
        })
    }

    /// Field equal to `boundary` at every active node.
    pub fn sample(lattice: Lattice, boundary: &Expr) -> Result<Self> {
        if let Some(i) = boundary.max_var() {
            if i >= lattice.dim() {
                return Err(Error::VariableOutOfRange {
                    index: i + 1,
                    dim: lattice.dim(),
                });
            }
        }
        Self::from_fn(lattice, |x| boundary.eval(x))
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&i| self.kinds[i] == NodeKind::Interior)
            .collect()
    }

    pub fn value_at(&self, idx: usize, offset: &[isize]) -> Option<f64> {
        let j = self.lattice.offset(idx, offset)?;
        (self.kinds[j] != NodeKind::Inactive).then(|| self.values[j])
    }

    /// Central-difference gradient and Hessian at a node whose `3^m` block is active.
    pub fn derivatives(&self, idx: usize) -> Option<(Vec<f64>, Mat<f64>)> {
        let m = self.lattice.dim();
        let h = self.lattice.spacing();
        let f0 = self.value_at(idx, &vec![0; m])?;
        let mut grad = vec![0.0; m];
        let mut hess = Mat::zeros(m, m);
        for a in 0..m {
            let mut o = vec![0isize; m];
            o[a] = 1;
            let p = self.value_at(idx, &o)?;
            o[a] = -1;
            let q = self.value_at(idx, &o)?;
            grad[a] = (p - q) / (2.0 * h);
            hess[(a, a)] = (p - 2.0 * f0 + q) / (h * h);
            for b in a + 1..m {
                let corner = |da: isize, db: isize| {
                    let mut o = vec![0isize; m];
                    o[a] = da;
                    o[b] = db;
                    self.value_at(idx, &o)
                };
                let v = (corner(1, 1)? - corner(1, -1)? - corner(-1, 1)? + corner(-1, -1)?)
                    / (4.0 * h * h);
                hess[(a, b)] = v;
                hess[(b, a)] = v;
            }
        }
        Some((grad, hess))
    }

    /// Largest `|value - exact(x)|` over active nodes.
    pub fn max_error(&self, exact: impl Fn(&[f64]) -> f64) -> f64 {
        (0..self.values.len())
            .filter(|&i| self.kinds[i] != NodeKind::Inactive)
            .map(|i| (self.values[i] - exact(&self.lattice.coords(i))).abs())
            .fold(0.0, f64::max)
    }
}

/// Convergence record of a Newton solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Max-norm residual after each accepted Newton step, starting with the initial guess, for
    /// the final continuation stage.
    pub history: Vec<f64>,
    pub newton_steps: usize,
    pub linear_iterations: usize,
    /// Boundary amplitudes visited by continuation (always ends at 1).
    pub continuation: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub field: GridField,
    pub report: SolveReport,
}

/// Unknown numbering of the interior nodes.
pub(crate) struct Numbering {
    pub(crate) nodes: Vec<usize>,
    pub(crate) unknown_of: Vec<usize>,
}

impl Numbering {
    pub(crate) fn new(field: &GridField) -> Result<Self> {
        let nodes = field.interior_nodes();
        if nodes.is_empty() {
            return Err(Error::Lattice("lattice has no interior nodes".into()));
        }
        let mut unknown_of = vec![usize::MAX; field.values.len()];
        for (k, &n) in nodes.iter().enumerate() {
            unknown_of[n] = k;
        }
        Ok(Numbering { nodes, unknown_of })
    }
}

/// Solves `-Δu = rhs` (five-point type Laplacian) for the interior values, keeping Dirichlet
/// values fixed.
pub(crate) fn poisson(field: &mut GridField, num: &Numbering, rhs: f64) -> Result<usize> {
    poisson_with(field, num, &vec![rhs; num.nodes.len()])
}

/// `-Δu = rhs[k]` at the k-th interior unknown, boundary values taken from `field`.
pub(crate) fn poisson_with(field: &mut GridField, num: &Numbering, rhs: &[f64]) -> Result<usize> {
    let lat = &field.lattice;
    let m = lat.dim();
    let h2 = lat.spacing().powi(2);
    let mut a = StencilMatrix::new(lat, &num.nodes, &num.unknown_of);
    let mut b = rhs.to_vec();
    let centre = vec![0isize; m];
    for (i, &node) in num.nodes.iter().enumerate() {
        a.add(i, slot(&centre), 2.0 * m as f64 / h2);
        for ax in 0..m {
            for d in [-1isize, 1] {
                let mut o = vec![0isize; m];
                o[ax] = d;
                let j = lat.offset(node, &o).expect("interior node");
                if field.kinds[j] == NodeKind::Interior {
                    a.add(i, slot(&o), -1.0 / h2);
                } else {
                    b[i] += field.values[j] / h2;
                }
            }
        }
    }
    let mut x: Vec<f64> = num.nodes.iter().map(|&n| field.values[n]).collect();
    let iters = pcg(&a, &b, &mut x, 1e-13, 20 * num.nodes.len() + 100)?;
    for (k, &n) in num.nodes.iter().enumerate() {
        field.values[n] = x[k];
    }
    Ok(iters)
}

/// Local graph data at an interior node from central differences of a graph field
/// (`n = 1`); third derivatives are not available.
pub fn grid_local(field: &GridField, idx: usize) -> Option<LocalGraph<f64>> {
    let (grad, hess) = field.derivatives(idx)?;
    let m = field.lattice.dim();
    Some(LocalGraph {
        x: field.lattice.coords(idx),
        y: vec![field.values[idx]],
        jac: Mat::from_fn(1, m, |_, a| grad[a]),
        second: Tensor3::from_fn([1, m, m], |_, a, b| hess[(a, b)]),
        third: None,
    })
}

/// Moduli-space curvature of a solved potential at an interior node. Third derivatives come
/// from central differences of the discrete Hessian and `∂ ln det` from central differences of
/// the discrete determinant, so both need the neighbours' full stencils.
pub fn grid_moduli_curvature(field: &GridField, idx: usize) -> Option<ModuliCurvature<f64>> {
    let lat = &field.lattice;
    let m = lat.dim();
    let h = lat.spacing();
    let (_, g) = field.derivatives(idx)?;
    if g.min_eigenvalue() <= 0.0 {
        return None;
    }
    let mut dg = Vec::with_capacity(m);
    let mut dlog = Vec::with_capacity(m);
    for c in 0..m {
        let mut o = vec![0isize; m];
        o[c] = 1;
        let (_, gp) = field.derivatives(lat.offset(idx, &o)?)?;
        o[c] = -1;
        let (_, gm) = field.derivatives(lat.offset(idx, &o)?)?;
        if gp.det() <= 0.0 || gm.det() <= 0.0 {
            return None;
        }
        dlog.push((gp.det().ln() - gm.det().ln()) / (2.0 * h));
        dg.push(gp.sub(&gm).scale(0.5 / h));
    }
    // symmetrize the third-derivative estimate over its three slots
    let third = Tensor3::from_fn([m, m, m], |a, b, c| {
        (dg[c][(a, b)] + dg[a][(b, c)] + dg[b][(a, c)]) / 3.0
    });
    Some(moduli_from_parts(&g, &third, Some(&dlog)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::lattice::Region;

    #[test]
    fn classification_and_sampling() {
        let lat = Lattice::new(vec![0.0, 0.0], vec![1.0, 1.0], 0.25).unwrap();
        let f = GridField::sample(lat, &parse("x1 + 2*x2", 2).unwrap()).unwrap();
        assert_eq!(f.interior_nodes().len(), 9);
        assert_eq!(f.kinds.iter().filter(|k| **k == NodeKind::Dirichlet).count(), 16);
        let (g, h) = f.derivatives(f.lattice.flat_index(&[2, 2])).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-12 && (g[1] - 2.0).abs() < 1e-12);
        assert!(h.max_abs() < 1e-12);
        assert!(f.derivatives(0).is_none());
    }

    #[test]
    fn poisson_recovers_quadratic() {
        let region = Region::Annulus {
            center: vec![0.0, 0.0],
            inner: 0.3,
            outer: 1.0,
        };
        let lat = Lattice::around(region, 0.1).unwrap();
        let exact = parse("x1^2 + x2^2", 2).unwrap();
        let mut f = GridField::sample(lat, &exact).unwrap();
        let num = Numbering::new(&f).unwrap();
        for &n in &num.nodes {
            f.values[n] = 0.0;
        }
        poisson(&mut f, &num, -4.0).unwrap();
        assert!(f.max_error(|x| x[0] * x[0] + x[1] * x[1]) < 1e-10);
    }
}
