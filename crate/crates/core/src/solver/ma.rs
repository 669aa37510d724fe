//! Convex Dirichlet problem for `det D²F = c` with the central-difference Hessian.

use super::linear::{banded_solve, slot, StencilMatrix};
use super::{poisson, poisson_with, GridField, Numbering, Solution, SolveReport};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::lattice::Lattice;
use crate::linalg::Mat;

#[derive(Debug, Clone, PartialEq)]
pub struct MaConfig {
    /// Target max-norm of `det D²F - c` over interior nodes.
    pub tol: f64,
    pub max_newton: usize,
    /// Smallest damping factor tried before reporting convexity loss.
    pub min_step: f64,
}

impl Default for MaConfig {
    fn default() -> Self {
        MaConfig {
            tol: 1e-10,
            max_newton: 50,
            min_step: 1e-8,
        }
    }
}

/// Discrete Hessians at the interior nodes, `None` if one is not positive definite.
fn hessians(field: &GridField, num: &Numbering) -> Option<Vec<Mat<f64>>> {
    num.nodes
        .iter()
        .map(|&n| {
            let (_, hess) = field.derivatives(n)?;
            (hess.cholesky().is_ok()).then_some(hess)
        })
        .collect()
}

fn residual(hs: &[Mat<f64>], c: f64) -> (Vec<f64>, f64) {
    let r: Vec<f64> = hs.iter().map(|h| h.det() - c).collect();
    let worst = r.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    (r, worst)
}

/// Linearization `δ ↦ cof(D²F) : D²δ` restricted to interior unknowns.
fn assemble(field: &GridField, num: &Numbering, hs: &[Mat<f64>], a: &mut StencilMatrix) -> Result<()> {
    let lat = &field.lattice;
    let m = lat.dim();
    let h2 = lat.spacing().powi(2);
    a.clear();
    for (row, (&node, hess)) in num.nodes.iter().zip(hs).enumerate() {
        let cof = hess.inverse()?.transpose().scale(hess.det());
        let mut put = |off: &[isize], v: f64| {
            let j = lat.offset(node, off).expect("interior stencil");
            if num.unknown_of[j] != usize::MAX {
                a.add(row, slot(off), v);
            }
        };
        for p in 0..m {
            let mut o = vec![0isize; m];
            put(&o, -2.0 * cof[(p, p)] / h2);
            for d in [-1isize, 1] {
                o[p] = d;
                put(&o, cof[(p, p)] / h2);
            }
            for q in p + 1..m {
                // both (p, q) and (q, p) entries of the cofactor
                let w = 2.0 * cof[(p, q)] / (4.0 * h2);
                for (dp, dq, sgn) in [(1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)] {
                    let mut o = vec![0isize; m];
                    o[p] = dp;
                    o[q] = dq;
                    put(&o, sgn * w);
                }
            }
        }
    }
    Ok(())
}

const MAX_SWEEPS: usize = 200;

/// One step of `Δu = sqrt((u₁₁ - u₂₂)² + 4u₁₂² + 4c)`, whose fixed points are the convex solutions in 2D.
fn laplacian_sweep(field: &mut GridField, num: &Numbering, c: f64) -> Result<usize> {
    let rhs = num
        .nodes
        .iter()
        .map(|&n| {
            let (_, h) = field.derivatives(n).expect("interior stencil");
            let d = h[(0, 0)] - h[(1, 1)];
            -(d * d + 4.0 * h[(0, 1)] * h[(0, 1)] + 4.0 * c).sqrt()
        })
        .collect::<Vec<f64>>();
    poisson_with(field, num, &rhs)
}

/// Solves `det D²F = c` for a convex `F` with Dirichlet data `boundary`.
///
/// Starts from the solution of `ΔF = m c^{1/m}` with the same data (in 2D refined by Laplacian
/// fixed-point sweeps until the discrete Hessians are positive definite), then runs Newton on the
/// cofactor linearization. Steps are halved until every interior discrete Hessian stays positive
/// definite and the residual decreases.
pub fn solve_ma(lattice: &Lattice, boundary: &Expr, c: f64, cfg: &MaConfig) -> Result<Solution> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidArgument(format!("right-hand side must be positive, got {c}")));
    }
    let mut field = GridField::sample(lattice.clone(), boundary)?;
    let num = Numbering::new(&field)?;
    let m = lattice.dim();
    let mut linear = poisson(&mut field, &num, -(m as f64) * c.powf(1.0 / m as f64))?;
    let mut hs = hessians(&field, &num);
    if m == 2 {
        let mut sweeps = 0;
        while hs.is_none() && sweeps < MAX_SWEEPS {
            linear += laplacian_sweep(&mut field, &num, c)?;
            hs = hessians(&field, &num);
            sweeps += 1;
        }
    }
    let mut hs = hs.ok_or_else(|| Error::Solver("initial guess is not discretely convex".into()))?;
    let (mut r, mut worst) = residual(&hs, c);
    let mut history = vec![worst];
    let mut a = StencilMatrix::new(lattice, &num.nodes, &num.unknown_of);
    let mut steps = 0;
    while worst > cfg.tol {
        if steps >= cfg.max_newton {
            return Err(Error::Solver(format!(
                "Newton iteration did not converge in {} steps (residual {worst:e})",
                cfg.max_newton
            )));
        }
        assemble(&field, &num, &hs, &mut a)?;
        let b: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta = banded_solve(&a, &b)?;
        linear += 1;
        let base: Vec<f64> = num.nodes.iter().map(|&n| field.values[n]).collect();
        let mut alpha = 1.0;
        loop {
            for (k, &n) in num.nodes.iter().enumerate() {
                field.values[n] = base[k] + alpha * delta[k];
            }
            if let Some(next) = hessians(&field, &num) {
                let (nr, nw) = residual(&next, c);
                if nw < worst {
                    hs = next;
                    r = nr;
                    worst = nw;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < cfg.min_step {
                return Err(Error::Solver(
                    "convexity lost: backtracking could not keep the discrete Hessian positive definite while reducing the residual".into(),
                ));
            }
        }
        steps += 1;
        history.push(worst);
    }
    Ok(Solution {
        field,
        report: SolveReport {
            history,
            newton_steps: steps,
            linear_iterations: linear,
            continuation: vec![1.0],
            residual: worst,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::solver::grid_moduli_curvature;

    fn square(h: f64) -> Lattice {
        Lattice::new(vec![0.0, 0.0], vec![1.0, 1.0], h).unwrap()
    }

    #[test]
    fn recovers_round_quadratic() {
        let b = parse("0.5*(x1^2 + x2^2)", 2).unwrap();
        let sol = solve_ma(&square(0.0625), &b, 1.0, &MaConfig::default()).unwrap();
        assert!(sol.report.residual <= 1e-10);
        assert!(sol.field.max_error(|x| 0.5 * (x[0] * x[0] + x[1] * x[1])) < 1e-10);
    }

    #[test]
    fn recovers_anisotropic_quadratic() {
        let b = parse("0.5*(2*x1^2 + 0.5*x2^2)", 2).unwrap();
        let sol = solve_ma(&square(0.0625), &b, 1.0, &MaConfig::default()).unwrap();
        assert!(sol.report.residual <= 1e-10);
        assert!(sol.field.max_error(|x| x[0] * x[0] + 0.25 * x[1] * x[1]) < 1e-10);
    }

    #[test]
    fn recovers_sheared_quadratic() {
        let b = parse("x1^2 + 0.25*x2^2 + 0.3*x1*x2", 2).unwrap();
        let sol = solve_ma(&square(0.0625), &b, 0.91, &MaConfig::default()).unwrap();
        assert!(sol.field.max_error(|x| x[0] * x[0] + 0.25 * x[1] * x[1] + 0.3 * x[0] * x[1]) < 1e-10);
    }

    #[test]
    fn three_dimensional_quadratic() {
        let lat = Lattice::new(vec![-1.0; 3], vec![1.0; 3], 0.25).unwrap();
        let b = parse("x1^2 + 0.5*x2^2 + x3^2 + 0.25*x1*x2", 3).unwrap();
        // det of [[2, .25, 0], [.25, 1, 0], [0, 0, 2]]
        let c = 2.0 * (2.0 - 0.0625);
        let sol = solve_ma(&lat, &b, c, &MaConfig::default()).unwrap();
        assert!(sol.field.max_error(|x| x[0] * x[0] + 0.5 * x[1] * x[1] + x[2] * x[2] + 0.25 * x[0] * x[1]) < 1e-10);
    }

    #[test]
    fn perturbed_data_has_nonnegative_moduli_ricci() {
        let b = parse("0.5*(x1^2 + x2^2) + 0.1*sin(2*x1 + x2)", 2).unwrap();
        let sol = solve_ma(&square(1.0 / 32.0), &b, 1.0, &MaConfig::default()).unwrap();
        assert!(sol.report.residual <= 1e-10);
        let f = &sol.field;
        assert!(f.max_error(|x| 0.5 * (x[0] * x[0] + x[1] * x[1])) > 1e-3);
        let mut min_eig = f64::INFINITY;
        let mut count = 0;
        for i in 0..f.values.len() {
            if let Some(mc) = grid_moduli_curvature(f, i) {
                min_eig = min_eig.min(mc.min_ricci_eig);
                count += 1;
            }
        }
        assert!(count > 100);
        assert!(min_eig >= -1e-4, "{min_eig}");
    }

    #[test]
    fn rejects_nonpositive_constant() {
        let b = parse("x1^2", 2).unwrap();
        assert!(solve_ma(&square(0.25), &b, 0.0, &MaConfig::default()).is_err());
    }
}
