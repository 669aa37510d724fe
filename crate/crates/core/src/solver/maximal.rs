//! Maximal space-like hypersurfaces as critical points of the discrete area functional
//! `E(f) = Σ_T |T| (-(1 - |∇f_T|²)^{1/2})` over simplices `T`.
//!
//! Every lattice cell contributes two simplices of weight `h^m / 2`: the forward-difference corner
//! simplex at its low vertex and the backward-difference one at its high vertex. For `m = 2` this
//! is the standard two-triangle split with piecewise linear elements.

use super::linear::{pcg, slot, StencilMatrix};
use super::{poisson, GridField, NodeKind, Numbering, Solution, SolveReport};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::lattice::Lattice;

#[derive(Debug, Clone, PartialEq)]
pub struct MaximalConfig {
    /// Target max-norm residual of `∂E/∂f_i / h^m`.
    pub tol: f64,
    pub max_newton: usize,
    /// Every simplex keeps `|∇f_T| <= 1 - delta_safe`.
    pub delta_safe: f64,
    /// Continuation stages before giving up.
    pub max_stages: usize,
}

impl Default for MaximalConfig {
    fn default() -> Self {
        MaximalConfig {
            tol: 1e-10,
            max_newton: 60,
            delta_safe: 1e-6,
            max_stages: 60,
        }
    }
}

struct Simplices {
    m: usize,
    /// `m + 1` nodes per simplex: base first, then one per axis.
    nodes: Vec<usize>,
    /// `+1` for forward, `-1` for backward simplices.
    sign: Vec<f64>,
    /// Stencil slot of node `j` seen from node `i`, `(m + 1)²` per simplex.
    slots: Vec<usize>,
}

impl Simplices {
    fn new(field: &GridField, num: &Numbering) -> Self {
        let lat = &field.lattice;
        let m = lat.dim();
        let mut corners: Vec<usize> = Vec::new();
        for &u in &num.nodes {
            for code in 0..(1usize << m) {
                let off: Vec<isize> = (0..m).map(|a| -(((code >> a) & 1) as isize)).collect();
                if let Some(c) = lat.offset(u, &off) {
                    corners.push(c);
                }
            }
        }
        corners.sort_unstable();
        corners.dedup();
        let mut s = Simplices {
            m,
            nodes: Vec::new(),
            sign: Vec::new(),
            slots: Vec::new(),
        };
        let ones = vec![1isize; m];
        for &c in &corners {
            let Some(top) = lat.offset(c, &ones) else { continue };
            let block_active = (0..(1usize << m)).all(|code| {
                let off: Vec<isize> = (0..m).map(|a| ((code >> a) & 1) as isize).collect();
                lat.offset(c, &off)
                    .is_some_and(|j| field.kinds[j] != NodeKind::Inactive)
            });
            if !block_active {
                continue;
            }
            for (base, sign) in [(c, 1isize), (top, -1isize)] {
                // local multi-offsets of the simplex nodes relative to the base
                let mut local: Vec<Vec<isize>> = vec![vec![0; m]];
                s.nodes.push(base);
                for a in 0..m {
                    let mut o = vec![0isize; m];
                    o[a] = sign;
                    s.nodes.push(lat.offset(base, &o).expect("cell corner"));
                    local.push(o);
                }
                for i in 0..=m {
                    for j in 0..=m {
                        let d: Vec<isize> = (0..m).map(|a| local[j][a] - local[i][a]).collect();
                        s.slots.push(slot(&d));
                    }
                }
                s.sign.push(sign as f64);
            }
        }
        s
    }

    fn len(&self) -> usize {
        self.sign.len()
    }

    fn gradient(&self, values: &[f64], t: usize, h: f64, p: &mut [f64]) {
        let k = t * (self.m + 1);
        let base = values[self.nodes[k]];
        for a in 0..self.m {
            p[a] = self.sign[t] * (values[self.nodes[k + 1 + a]] - base) / h;
        }
    }

    /// Largest `|∇f_T|` over all simplices.
    fn max_slope(&self, values: &[f64], h: f64) -> f64 {
        let mut p = vec![0.0; self.m];
        let mut worst: f64 = 0.0;
        for t in 0..self.len() {
            self.gradient(values, t, h, &mut p);
            worst = worst.max(p.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
        worst
    }
}

struct State {
    energy: f64,
    /// `∂E/∂f` at every lattice node.
    grad: Vec<f64>,
    residual: f64,
}

fn evaluate(
    s: &Simplices,
    values: &[f64],
    num: &Numbering,
    h: f64,
    limit: f64,
) -> Option<State> {
    let m = s.m;
    let w = h.powi(m as i32) / 2.0;
    let mut p = vec![0.0; m];
    let mut grad = vec![0.0; values.len()];
    let mut energy = 0.0;
    for t in 0..s.len() {
        s.gradient(values, t, h, &mut p);
        let pp: f64 = p.iter().map(|v| v * v).sum();
        if !(pp < limit * limit) {
            return None;
        }
        let root = (1.0 - pp).sqrt();
        energy -= w * root;
        let k = t * (m + 1);
        let sg = s.sign[t];
        for a in 0..m {
            let q = w * sg * p[a] / (root * h);
            grad[s.nodes[k + 1 + a]] += q;
            grad[s.nodes[k]] -= q;
        }
    }
    let scale = h.powi(m as i32);
    let residual = num
        .nodes
        .iter()
        .map(|&n| (grad[n] / scale).abs())
        .fold(0.0, f64::max);
    Some(State {
        energy,
        grad,
        residual,
    })
}

fn assemble(s: &Simplices, values: &[f64], num: &Numbering, h: f64, a: &mut StencilMatrix) {
    let m = s.m;
    let w = h.powi(m as i32) / 2.0;
    a.clear();
    let mut p = vec![0.0; m];
    let mut d = vec![0.0; m * (m + 1)];
    let mut hd = vec![0.0; m * (m + 1)];
    for t in 0..s.len() {
        s.gradient(values, t, h, &mut p);
        let pp: f64 = p.iter().map(|v| v * v).sum();
        let root = (1.0 - pp).sqrt();
        let k = t * (m + 1);
        let sg = s.sign[t];
        // D maps local node values to the simplex gradient
        d.iter_mut().for_each(|v| *v = 0.0);
        for ax in 0..m {
            d[ax * (m + 1)] = -sg / h;
            d[ax * (m + 1) + ax + 1] = sg / h;
        }
        // H = (I + q qᵀ) / root with q = p / root
        for ax in 0..m {
            for col in 0..=m {
                let mut acc = 0.0;
                for b in 0..m {
                    let hab = (if ax == b { 1.0 } else { 0.0 } + p[ax] * p[b] / (root * root)) / root;
                    acc += hab * d[b * (m + 1) + col];
                }
                hd[ax * (m + 1) + col] = acc;
            }
        }
        for i in 0..=m {
            let row = num.unknown_of[s.nodes[k + i]];
            if row == usize::MAX {
                continue;
            }
            for j in 0..=m {
                if num.unknown_of[s.nodes[k + j]] == usize::MAX {
                    continue;
                }
                let mut acc = 0.0;
                for ax in 0..m {
                    acc += d[ax * (m + 1) + i] * hd[ax * (m + 1) + j];
                }
                a.add(row, s.slots[t * (m + 1) * (m + 1) + i * (m + 1) + j], w * acc);
            }
        }
    }
}

struct Stage {
    history: Vec<f64>,
    steps: usize,
    linear: usize,
}

/// Damped Newton at fixed Dirichlet data; `values` must be feasible on entry.
fn newton(
    s: &Simplices,
    lat: &Lattice,
    values: &mut [f64],
    num: &Numbering,
    cfg: &MaximalConfig,
    tol: f64,
) -> Result<Stage> {
    let h = lat.spacing();
    let limit = 1.0 - cfg.delta_safe;
    let mut state = evaluate(s, values, num, h, limit)
        .ok_or_else(|| Error::Solver("initial guess is not space-like".into()))?;
    let mut a = StencilMatrix::new(lat, &num.nodes, &num.unknown_of);
    let mut history = vec![state.residual];
    let mut linear = 0;
    for step in 0..cfg.max_newton {
        if state.residual <= tol {
            return Ok(Stage {
                history,
                steps: step,
                linear,
            });
        }
        assemble(s, values, num, h, &mut a);
        let b: Vec<f64> = num.nodes.iter().map(|&n| -state.grad[n]).collect();
        let mut delta = vec![0.0; b.len()];
        let forcing = (1e-3 * state.residual).clamp(1e-13, 1e-4);
        linear += pcg(&a, &b, &mut delta, forcing, 50 * b.len() + 1000)?;
        let slope: f64 = -b.iter().zip(&delta).map(|(x, y)| x * y).sum::<f64>();
        let mut alpha = 1.0;
        let mut trial = values.to_vec();
        loop {
            for (k, &n) in num.nodes.iter().enumerate() {
                trial[n] = values[n] + alpha * delta[k];
            }
            if let Some(next) = evaluate(s, &trial, num, h, limit) {
                let armijo = next.energy <= state.energy + 1e-4 * alpha * slope;
                if armijo || next.residual < state.residual {
                    values.copy_from_slice(&trial);
                    state = next;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1e-10 {
                return Err(Error::Solver(
                    "space-like safeguard exhausted: step damping floor reached".into(),
                ));
            }
        }
        history.push(state.residual);
    }
    if state.residual <= tol {
        return Ok(Stage {
            history,
            steps: cfg.max_newton,
            linear,
        });
    }
    Err(Error::Solver(format!(
        "Newton iteration did not converge in {} steps (residual {:e})",
        cfg.max_newton, state.residual
    )))
}

/// Solves the maximal-surface equation with Dirichlet data `boundary` on the lattice.
///
/// The initial guess is the harmonic extension of the data; if it is not space-like, the data
/// amplitude is continued from a feasible fraction up to 1.
pub fn solve_maximal(lattice: &Lattice, boundary: &Expr, cfg: &MaximalConfig) -> Result<Solution> {
    let mut field = GridField::sample(lattice.clone(), boundary)?;
    let num = Numbering::new(&field)?;
    let s = Simplices::new(&field, &num);
    let h = lattice.spacing();
    let limit = 1.0 - cfg.delta_safe;
    let target: Vec<f64> = field.values.clone();
    let mut linear = poisson(&mut field, &num, 0.0)?;
    let harmonic = field.values.clone();

    let scaled = |src: &[f64], t: f64| -> Vec<f64> { src.iter().map(|v| v * t).collect() };
    let mut t = 1.0;
    while s.max_slope(&scaled(&harmonic, t), h) >= limit {
        t *= 0.5;
        if t < 1e-6 {
            return Err(Error::Solver("no space-like starting amplitude".into()));
        }
    }
    let mut values = scaled(&harmonic, t);
    let stage_tol = |t: f64| if t < 1.0 { cfg.tol.max(1e-6) } else { cfg.tol };
    let first = newton(&s, lattice, &mut values, &num, cfg, stage_tol(t))?;
    let mut continuation = vec![t];
    let mut steps = first.steps;
    linear += first.linear;
    let mut history = first.history;
    let mut incr = 1.0 - t;
    let mut stages = 1;
    while t < 1.0 {
        if stages >= cfg.max_stages || incr < 1e-6 {
            return Err(Error::Solver(format!(
                "continuation stalled at amplitude {t}"
            )));
        }
        stages += 1;
        let next = (t + incr).min(1.0);
        let mut guess = scaled(&values, next / t);
        for (i, kind) in field.kinds.iter().enumerate() {
            if *kind == NodeKind::Dirichlet {
                guess[i] = next * target[i];
            }
        }
        if s.max_slope(&guess, h) >= limit {
            incr *= 0.5;
            continue;
        }
        match newton(&s, lattice, &mut guess, &num, cfg, stage_tol(next)) {
            Ok(stage) => {
                values = guess;
                t = next;
                continuation.push(t);
                steps += stage.steps;
                linear += stage.linear;
                history = stage.history;
                incr *= 1.5;
            }
            Err(_) => incr *= 0.5,
        }
    }
    let residual = *history.last().expect("history is never empty");
    field.values = values;
    Ok(Solution {
        field,
        report: SolveReport {
            history,
            newton_steps: steps,
            linear_iterations: linear,
            continuation,
            residual,
        },
    })
}

/// Whether the last three steps of a residual history contract with shrinking ratios.
pub fn superlinear_tail(history: &[f64]) -> bool {
    let n = history.len();
    if n < 4 {
        return false;
    }
    let r: Vec<f64> = (n - 3..n).map(|k| history[k] / history[k - 1]).collect();
    r.iter().all(|&q| q < 1.0) && r[1] < r[0] && r[2] < r[1]
}

/// Largest simplex slope `|∇f_T|` of a field under the maximal-surface discretization.
pub fn max_simplex_slope(field: &GridField) -> Result<f64> {
    let num = Numbering::new(field)?;
    let s = Simplices::new(field, &num);
    Ok(s.max_slope(&field.values, field.lattice.spacing()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::graphgeom::{forms_of, frames_of};
    use crate::lattice::Region;
    use crate::solver::grid_local;

    fn annulus(h: f64) -> Lattice {
        Lattice::around(
            Region::Annulus {
                center: vec![0.0, 0.0],
                inner: 0.5,
                outer: 2.0,
            },
            h,
        )
        .unwrap()
    }

    #[test]
    fn affine_data_is_reproduced() {
        let lat = Lattice::new(vec![-1.0, -1.0], vec![1.0, 1.0], 0.125).unwrap();
        let b = parse("0.4*x1 - 0.3*x2 + 1", 2).unwrap();
        let sol = solve_maximal(&lat, &b, &MaximalConfig::default()).unwrap();
        assert!(sol.report.residual <= 1e-12);
        assert!(sol.field.max_error(|x| 0.4 * x[0] - 0.3 * x[1] + 1.0) < 1e-12);
    }

    #[test]
    fn energy_gradient_matches_finite_differences() {
        let lat = Lattice::new(vec![0.0, 0.0], vec![1.0, 1.0], 0.25).unwrap();
        let b = parse("0.3*x1^2 - 0.2*x2 + 0.1*x1*x2", 2).unwrap();
        let field = GridField::sample(lat.clone(), &b).unwrap();
        let num = Numbering::new(&field).unwrap();
        let s = Simplices::new(&field, &num);
        let st = evaluate(&s, &field.values, &num, 0.25, 1.0).unwrap();
        let mut a = StencilMatrix::new(&lat, &num.nodes, &num.unknown_of);
        assemble(&s, &field.values, &num, 0.25, &mut a);
        let e = 1e-6;
        for (k, &n) in num.nodes.iter().enumerate() {
            let mut v = field.values.clone();
            v[n] += e;
            let up = evaluate(&s, &v, &num, 0.25, 1.0).unwrap();
            v[n] -= 2.0 * e;
            let down = evaluate(&s, &v, &num, 0.25, 1.0).unwrap();
            let fd = (up.energy - down.energy) / (2.0 * e);
            assert!((fd - st.grad[n]).abs() < 1e-8);
            // Jacobian column k against differences of the gradient
            let mut unit = vec![0.0; num.nodes.len()];
            unit[k] = 1.0;
            let mut col = vec![0.0; unit.len()];
            a.matvec(&unit, &mut col);
            for (r, &rn) in num.nodes.iter().enumerate() {
                let fd = (up.grad[rn] - down.grad[rn]) / (2.0 * e);
                assert!((fd - col[r]).abs() < 1e-6, "{fd} {}", col[r]);
            }
        }
    }

    #[test]
    fn catenoid_second_order() {
        let b = parse("asinh(sqrt(x1^2 + x2^2))", 2).unwrap();
        let exact = |x: &[f64]| (x[0] * x[0] + x[1] * x[1]).sqrt().asinh();
        let mut errs = Vec::new();
        for h in [1.0 / 8.0, 1.0 / 16.0] {
            let sol = solve_maximal(&annulus(h), &b, &MaximalConfig::default()).unwrap();
            assert!(sol.report.residual <= 1e-10);
            assert!(max_simplex_slope(&sol.field).unwrap() < 1.0 - 1e-6);
            errs.push(sol.field.max_error(exact));
        }
        let order = (errs[0] / errs[1]).log2();
        assert!((order - 2.0).abs() < 0.5, "{errs:?} {order}");
    }

    #[test]
    fn newton_history_is_superlinear() {
        let b = parse("asinh(sqrt(x1^2 + x2^2))", 2).unwrap();
        let sol = solve_maximal(&annulus(1.0 / 16.0), &b, &MaximalConfig::default()).unwrap();
        let hist = &sol.report.history;
        println!("{hist:?}");
        assert!(superlinear_tail(hist));
    }

    #[test]
    fn maximum_principle_with_bump() {
        let lat = Lattice::new(vec![-1.0, -1.0], vec![1.0, 1.0], 0.125).unwrap();
        let b = parse("0.2*x1 + 0.3*exp(-4*(x1^2+x2^2))", 2).unwrap();
        let sol = solve_maximal(&lat, &b, &MaximalConfig::default()).unwrap();
        let f = &sol.field;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..f.values.len() {
            if f.kinds[i] == NodeKind::Dirichlet {
                lo = lo.min(f.values[i]);
                hi = hi.max(f.values[i]);
            }
        }
        let affine = |x: &[f64]| 0.2 * x[0];
        for i in f.interior_nodes() {
            let x = f.lattice.coords(i);
            let v = f.values[i];
            assert!(v >= lo - 1e-12 && v <= hi + 0.3 + 1e-12);
            assert!(v >= affine(&x) - 1e-9);
        }
    }

    #[test]
    fn regridded_mean_curvature_shrinks() {
        let b = parse("asinh(sqrt(x1^2 + x2^2))", 2).unwrap();
        let mut worst = Vec::new();
        for h in [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0] {
            let sol = solve_maximal(&annulus(h), &b, &MaximalConfig::default()).unwrap();
            let f = &sol.field;
            let mut w: f64 = 0.0;
            for i in 0..f.values.len() {
                if let Some(local) = grid_local(f, i) {
                    let fr = frames_of(&local).unwrap();
                    w = w.max(forms_of(&local, &fr).h_norm);
                }
            }
            worst.push(w);
        }
        assert!(worst[1] < 0.6 * worst[0] && worst[2] < 0.6 * worst[1], "{worst:?}");
    }
}
