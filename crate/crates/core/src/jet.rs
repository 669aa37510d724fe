//! Third-order forward-mode jets.
//!
//! A [`Jet3`] carries the value, gradient, Hessian and third-derivative tensor of a scalar
//! function at a point. Symmetric tensors are stored once per multiset of indices, so the
//! symmetry of mixed partials holds by construction.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::expr::{BinOp, Expr};
use crate::scalar::Scalar;

/// Largest supported number of variables.
pub const MAX_DIM: usize = 8;

#[inline]
fn idx2(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    b * (b + 1) / 2 + a
}

#[inline]
fn idx3(i: usize, j: usize, k: usize) -> usize {
    let mut v = [i, j, k];
    v.sort_unstable();
    let [a, b, c] = v;
    c * (c + 1) * (c + 2) / 6 + b * (b + 1) / 2 + a
}

fn len2(m: usize) -> usize {
    m * (m + 1) / 2
}

fn len3(m: usize) -> usize {
    m * (m + 1) * (m + 2) / 6
}

/// Truncated Taylor data of a scalar function at a point, to order three.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet3<T> {
    dim: usize,
    value: T,
    grad: Vec<T>,
    hess: Vec<T>,
    third: Vec<T>,
}

impl<T: Scalar> Jet3<T> {
    pub fn constant(dim: usize, value: T) -> Self {
        Jet3 {
            dim,
            value,
            grad: vec![T::zero(); dim],
            hess: vec![T::zero(); len2(dim)],
            third: vec![T::zero(); len3(dim)],
        }
    }

    /// The coordinate function `x_{index}` evaluated at `at`.
    pub fn variable(dim: usize, index: usize, at: T) -> Self {
        let mut j = Self::constant(dim, at);
        j.grad[index] = T::one();
        j
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self) -> T {
        self.value
    }

    pub fn grad(&self) -> &[T] {
        &self.grad
    }

    pub fn hess(&self, i: usize, j: usize) -> T {
        self.hess[idx2(i, j)]
    }

    pub fn third(&self, i: usize, j: usize, k: usize) -> T {
        self.third[idx3(i, j, k)]
    }

    /// Dense Hessian.
    pub fn hess_matrix(&self) -> Vec<Vec<T>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.hess(i, j)).collect())
            .collect()
    }

    /// Dense third-derivative tensor `t[i][j][k]`.
    pub fn third_tensor(&self) -> Vec<Vec<Vec<T>>> {
        let m = self.dim;
        (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| (0..m).map(|k| self.third(i, j, k)).collect())
                    .collect()
            })
            .collect()
    }

    pub fn scale(&self, c: T) -> Self {
        Jet3 {
            dim: self.dim,
            value: self.value * c,
            grad: self.grad.iter().map(|&g| g * c).collect(),
            hess: self.hess.iter().map(|&g| g * c).collect(),
            third: self.third.iter().map(|&g| g * c).collect(),
        }
    }

    fn zip(&self, other: &Self, op: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.dim, other.dim, "jet dimension mismatch");
        let z = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&x, &y)| op(x, y)).collect();
        Jet3 {
            dim: self.dim,
            value: op(self.value, other.value),
            grad: z(&self.grad, &other.grad),
            hess: z(&self.hess, &other.hess),
            third: z(&self.third, &other.third),
        }
    }

    /// Truncated Taylor product.
    pub fn mul_jet(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "jet dimension mismatch");
        let m = self.dim;
        let (u, v) = (self, other);
        let mut out = Self::constant(m, u.value * v.value);
        for i in 0..m {
            out.grad[i] = u.grad[i] * v.value + u.value * v.grad[i];
        }
        for j in 0..m {
            for i in 0..=j {
                out.hess[idx2(i, j)] = u.hess(i, j) * v.value
                    + u.value * v.hess(i, j)
                    + u.grad[i] * v.grad[j]
                    + u.grad[j] * v.grad[i];
            }
        }
        for k in 0..m {
            for j in 0..=k {
                for i in 0..=j {
                    out.third[idx3(i, j, k)] = u.third(i, j, k) * v.value
                        + u.value * v.third(i, j, k)
                        + u.hess(i, j) * v.grad[k]
                        + u.hess(i, k) * v.grad[j]
                        + u.hess(j, k) * v.grad[i]
                        + u.grad[i] * v.hess(j, k)
                        + u.grad[j] * v.hess(i, k)
                        + u.grad[k] * v.hess(i, j);
                }
            }
        }
        out
    }

    /// Compose with a univariate function given its value and first three derivatives at
    /// `self.value()`.
    pub fn compose(&self, phi: [T; 4]) -> Self {
        let m = self.dim;
        let [p0, p1, p2, p3] = phi;
        let v = self;
        let mut out = Self::constant(m, p0);
        for i in 0..m {
            out.grad[i] = p1 * v.grad[i];
        }
        for j in 0..m {
            for i in 0..=j {
                out.hess[idx2(i, j)] = p1 * v.hess(i, j) + p2 * v.grad[i] * v.grad[j];
            }
        }
        for k in 0..m {
            for j in 0..=k {
                for i in 0..=j {
                    let (gi, gj, gk) = (v.grad[i], v.grad[j], v.grad[k]);
                    out.third[idx3(i, j, k)] = p1 * v.third(i, j, k)
                        + p2 * (v.hess(i, j) * gk + v.hess(i, k) * gj + v.hess(j, k) * gi)
                        + p3 * gi * gj * gk;
                }
            }
        }
        out
    }

    /// Integer power.
    pub fn powi(&self, k: u32) -> Self {
        match k {
            0 => Self::constant(self.dim, T::one()),
            1 => self.clone(),
            _ => {
                let x = self.value;
                let kf = T::count(k as usize);
                let d = |order: u32, coef: T| {
                    if order > k {
                        T::zero()
                    } else {
                        coef * x.powi((k - order) as i32)
                    }
                };
                let one = T::one();
                let two = T::lit(2.0);
                self.compose([
                    x.powi(k as i32),
                    d(1, kf),
                    d(2, kf * (kf - one)),
                    d(3, kf * (kf - one) * (kf - two)),
                ])
            }
        }
    }

    fn recip(&self) -> Option<Self> {
        let x = self.value;
        if x == T::zero() {
            return None;
        }
        let r = T::one() / x;
        Some(self.compose([r, -r * r, T::lit(2.0) * r * r * r, T::lit(-6.0) * r * r * r * r]))
    }

    /// Largest absolute asymmetry of stored tensors. Zero by construction; kept for tests.
    pub fn max_asymmetry(&self) -> T {
        let m = self.dim;
        let mut worst = T::zero();
        for i in 0..m {
            for j in 0..m {
                worst = worst.max((self.hess(i, j) - self.hess(j, i)).abs());
                for k in 0..m {
                    worst = worst.max((self.third(i, j, k) - self.third(k, i, j)).abs());
                    worst = worst.max((self.third(i, j, k) - self.third(j, i, k)).abs());
                }
            }
        }
        worst
    }
}

impl<T: Scalar> Add for &Jet3<T> {
    type Output = Jet3<T>;
    fn add(self, rhs: Self) -> Jet3<T> {
        self.zip(rhs, |a, b| a + b)
    }
}

impl<T: Scalar> Sub for &Jet3<T> {
    type Output = Jet3<T>;
    fn sub(self, rhs: Self) -> Jet3<T> {
        self.zip(rhs, |a, b| a - b)
    }
}

impl<T: Scalar> Mul for &Jet3<T> {
    type Output = Jet3<T>;
    fn mul(self, rhs: Self) -> Jet3<T> {
        self.mul_jet(rhs)
    }
}

impl<T: Scalar> Div for &Jet3<T> {
    type Output = Option<Jet3<T>>;
    fn div(self, rhs: Self) -> Option<Jet3<T>> {
        rhs.recip().map(|r| self.mul_jet(&r))
    }
}

impl<T: Scalar> Neg for &Jet3<T> {
    type Output = Jet3<T>;
    fn neg(self) -> Jet3<T> {
        self.scale(-T::one())
    }
}

fn check_dim(expr: &Expr, dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::Dimension {
            dim,
            reason: format!("jets support 1..={MAX_DIM} variables"),
        });
    }
    if let Some(i) = expr.max_var() {
        if i >= dim {
            return Err(Error::VariableOutOfRange { index: i + 1, dim });
        }
    }
    Ok(())
}

/// Exact third-order Taylor data of `expr` at `point`.
pub fn evaluate_jet<T: Scalar>(expr: &Expr, point: &[T]) -> Result<Jet3<T>> {
    check_dim(expr, point.len())?;
    eval_node(expr, point)
}

fn eval_node<T: Scalar>(expr: &Expr, point: &[T]) -> Result<Jet3<T>> {
    let m = point.len();
    let domain = |reason: &str| Error::Domain {
        subexpr: expr.to_string(),
        reason: reason.to_string(),
    };
    Ok(match expr {
        Expr::Const(c) => Jet3::constant(m, T::lit(*c)),
        Expr::Var(i) => Jet3::variable(m, *i, point[*i]),
        Expr::Neg(e) => -&eval_node(e, point)?,
        Expr::Call(f, e) => {
            let inner = eval_node(e, point)?;
            let phi = f.taylor(inner.value()).map_err(domain)?;
            inner.compose(phi)
        }
        Expr::Binary(op, a, b) => {
            let (x, y) = (eval_node(a, point)?, eval_node(b, point)?);
            match op {
                BinOp::Add => &x + &y,
                BinOp::Sub => &x - &y,
                BinOp::Mul => &x * &y,
                BinOp::Div => (&x / &y).ok_or_else(|| domain("division by zero"))?,
            }
        }
        Expr::Pow(e, k) => eval_node(e, point)?.powi(*k),
    })
}

/// Maximum deviation between jet derivatives and central finite differences, per order.
///
/// Order one is compared against central differences of the value, order two against
/// central differences of the jet gradient and order three against central differences of
/// the jet Hessian. Deviations are relative to `max(1, |jet entry|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdReport<T> {
    pub order1: T,
    pub order2: T,
    pub order3: T,
}

pub fn finite_diff_check<T: Scalar>(expr: &Expr, point: &[T], h: T) -> Result<FdReport<T>> {
    if !(h > T::zero()) {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    let m = point.len();
    let center = evaluate_jet(expr, point)?;
    let two_h = h + h;
    let dev = |exact: T, approx: T| (exact - approx).abs() / exact.abs().max(T::one());
    let mut report = FdReport {
        order1: T::zero(),
        order2: T::zero(),
        order3: T::zero(),
    };
    for k in 0..m {
        let mut plus = point.to_vec();
        let mut minus = point.to_vec();
        plus[k] += h;
        minus[k] -= h;
        let jp = evaluate_jet(expr, &plus)?;
        let jm = evaluate_jet(expr, &minus)?;
        let d1 = (jp.value() - jm.value()) / two_h;
        report.order1 = report.order1.max(dev(center.grad()[k], d1));
        for i in 0..m {
            let d2 = (jp.grad()[i] - jm.grad()[i]) / two_h;
            report.order2 = report.order2.max(dev(center.hess(i, k), d2));
            for j in 0..m {
                let d3 = (jp.hess(i, j) - jm.hess(i, j)) / two_h;
                report.order3 = report.order3.max(dev(center.third(i, j, k), d3));
            }
        }
    }
    Ok(report)
}
