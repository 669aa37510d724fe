//! Geometry of a space-like graph `X(x) = (x, f(x))` in `R^{m+n}_n`.
//!
//! The ambient form has signature `diag(+1 × m, -1 × n)` in coordinates `(x; y)`. All tensors
//! returned in frame components refer to the adapted pseudo-orthonormal frame built by
//! [`adapted_frames`]: tangent vectors from the Cholesky factor of the induced metric and normal
//! vectors from the Cholesky factor of `I - A Aᵀ`, `A` being the Jacobian of `f`.
//!
//! The second fundamental form is `h_sij = <D_{e_i} e_j, e_s>`. With this sign the Hessian of the
//! pseudo-distance is `2 (δ_ij - <X, e_s> h_sij)` and the Gauss equation
//! `R_ijkl = -(h_sik h_sjl - h_sil h_sjk)` reproduces the intrinsic curvature of the metric.

mod forms;
pub(crate) mod intrinsic;
mod pseudo;
mod simons;

pub use forms::{
    covariant_h, covariant_of, curvature, curvature_of, extremal_residual, extremal_residual_of,
    forms_of, fundamental_forms, point_geometry, point_geometry_of, ricci_bound_check,
    ricci_margin, CovariantReport, Curvature, FundamentalForms, PointGeometry,
};
pub use intrinsic::{christoffel, coordinate_riemann, frame_riemann_oracle};
pub use pseudo::{pseudo_distance, PseudoDistancePoint};
pub use simons::{simons_report, SimonsPoint, SimonsReport};

use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::jet::{evaluate_jet, MAX_DIM};
use crate::linalg::Mat;
use crate::scalar::Scalar;
use crate::tensor::{Tensor3, Tensor4};

/// A graph map `f: R^m -> R^n` given by `n` expressions in `x1..xm`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMap<T> {
    m: usize,
    components: Vec<Expr>,
    offset: Option<Vec<T>>,
}

impl<T: Scalar> GraphMap<T> {
    pub fn new(m: usize, components: Vec<Expr>) -> Result<Self> {
        if m == 0 || m > MAX_DIM {
            return Err(Error::Dimension {
                dim: m,
                reason: format!("graph dimension must lie in 1..={MAX_DIM}"),
            });
        }
        if components.is_empty() {
            return Err(Error::InvalidArgument("graph map needs at least one component".into()));
        }
        for c in &components {
            if let Some(i) = c.max_var() {
                if i >= m {
                    return Err(Error::VariableOutOfRange { index: i + 1, dim: m });
                }
            }
        }
        Ok(GraphMap {
            m,
            components,
            offset: None,
        })
    }

    /// Parse each component in dimension `m`.
    pub fn parse(m: usize, components: &[&str]) -> Result<Self> {
        let exprs = components
            .iter()
            .map(|c| parse(c, m))
            .collect::<Result<Vec<_>>>()?;
        Self::new(m, exprs)
    }

    /// Subtract a constant vector from every component.
    pub fn with_offset(mut self, offset: Vec<T>) -> Result<Self> {
        if offset.len() != self.n() {
            return Err(Error::InvalidArgument(format!(
                "offset has {} entries, expected {}",
                offset.len(),
                self.n()
            )));
        }
        self.offset = Some(offset);
        Ok(self)
    }

    /// Translate the graph so that `X(0) = 0`.
    pub fn with_base_point_offset(self) -> Result<Self> {
        let zero = vec![T::zero(); self.m];
        let f0 = self
            .components
            .iter()
            .map(|c| c.eval(&zero))
            .collect::<Result<Vec<_>>>()?;
        self.with_offset(f0)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn offset(&self) -> Option<&[T]> {
        self.offset.as_deref()
    }

    /// Jets of every component at `x`, assembled into local graph data.
    pub fn local(&self, x: &[T]) -> Result<LocalGraph<T>> {
        if x.len() != self.m {
            return Err(Error::InvalidArgument(format!(
                "point has {} coordinates, expected {}",
                x.len(),
                self.m
            )));
        }
        let (m, n) = (self.m, self.n());
        let jets = self
            .components
            .iter()
            .map(|c| evaluate_jet(c, x))
            .collect::<Result<Vec<_>>>()?;
        let y = jets
            .iter()
            .enumerate()
            .map(|(s, j)| j.value() - self.offset.as_ref().map_or(T::zero(), |o| o[s]))
            .collect();
        Ok(LocalGraph {
            x: x.to_vec(),
            y,
            jac: Mat::from_fn(n, m, |s, i| jets[s].grad()[i]),
            second: Tensor3::from_fn([n, m, m], |s, a, b| jets[s].hess(a, b)),
            third: Some(Tensor4::from_fn([n, m, m, m], |s, a, b, c| {
                jets[s].third(a, b, c)
            })),
        })
    }
}

/// Position and derivatives of a graph at one point.
///
/// `second[(s, a, b)] = ∂²f^s/∂x^a∂x^b`; `third` holds the third derivatives when available.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalGraph<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub jac: Mat<T>,
    pub second: Tensor3<T>,
    pub third: Option<Tensor4<T>>,
}

impl<T: Scalar> LocalGraph<T> {
    pub fn m(&self) -> usize {
        self.x.len()
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Induced metric `g_ij = δ_ij - Σ_s f^s_i f^s_j`.
    pub fn metric_matrix(&self) -> Mat<T> {
        let a = &self.jac;
        Mat::identity(self.m()).sub(&a.transpose().matmul(a))
    }

    /// Coordinate derivatives `dg[c][(a, b)] = ∂_c g_ab`.
    pub fn metric_derivative(&self) -> Vec<Mat<T>> {
        let (m, n) = (self.m(), self.n());
        (0..m)
            .map(|c| {
                Mat::from_fn(m, m, |a, b| {
                    -(0..n)
                        .map(|s| {
                            self.second[(s, a, c)] * self.jac[(s, b)]
                                + self.jac[(s, a)] * self.second[(s, b, c)]
                        })
                        .sum::<T>()
                })
            })
            .collect()
    }

    pub(crate) fn point_f64(&self) -> Vec<f64> {
        self.x.iter().map(|v| v.to_f64_lossy()).collect()
    }
}

/// Induced metric at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricPoint<T> {
    pub g: Mat<T>,
    /// Inverse metric; `None` when the metric is singular.
    pub g_inv: Option<Mat<T>>,
    pub det_g: T,
    pub min_eig: T,
    pub spacelike: bool,
}

pub fn induced_metric<T: Scalar>(map: &GraphMap<T>, x: &[T]) -> Result<MetricPoint<T>> {
    Ok(metric_point(&map.local(x)?))
}

pub fn metric_point<T: Scalar>(local: &LocalGraph<T>) -> MetricPoint<T> {
    let g = local.metric_matrix();
    let min_eig = g.min_eigenvalue();
    MetricPoint {
        g_inv: g.inverse().ok(),
        det_g: g.det(),
        spacelike: min_eig > T::zero(),
        min_eig,
        g,
    }
}

/// Ambient pseudo-Euclidean inner product with `m` positive directions.
pub fn ambient_dot<T: Scalar>(m: usize, u: &[T], v: &[T]) -> T {
    u.iter()
        .zip(v)
        .enumerate()
        .map(|(k, (&a, &b))| if k < m { a * b } else { -(a * b) })
        .sum()
}

/// Adapted pseudo-orthonormal frame at a point.
///
/// `e_i = Σ_a tangent_coeffs[(a, i)] X_a` with `X_a = ∂_a + f^s_a ∂_{y^s}`, and
/// `e_s = Σ_t normal_coeffs[(t, s)] Ñ_t` with `Ñ_t = f^t_i ∂_i + ∂_{y^t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frames<T> {
    pub tangent: Vec<Vec<T>>,
    pub normal: Vec<Vec<T>>,
    pub tangent_coeffs: Mat<T>,
    pub normal_coeffs: Mat<T>,
    /// Cholesky factor of the induced metric.
    pub metric_factor: Mat<T>,
    /// Cholesky factor of `I - A Aᵀ`.
    pub normal_factor: Mat<T>,
}

pub fn adapted_frames<T: Scalar>(map: &GraphMap<T>, x: &[T]) -> Result<Frames<T>> {
    frames_of(&map.local(x)?)
}

pub fn frames_of<T: Scalar>(local: &LocalGraph<T>) -> Result<Frames<T>> {
    let (m, n) = (local.m(), local.n());
    let a = &local.jac;
    let g = local.metric_matrix();
    let not_spacelike = || Error::NotSpacelike {
        point: local.point_f64(),
        min_eig: g.min_eigenvalue().to_f64_lossy(),
    };
    let l = g.cholesky().map_err(|_| not_spacelike())?;
    let nn = Mat::identity(n).sub(&a.matmul(&a.transpose()));
    let k = nn.cholesky().map_err(|_| not_spacelike())?;
    let w = l.lower_inverse().transpose();
    let v = k.lower_inverse().transpose();
    let tangent = (0..m)
        .map(|i| {
            let mut e = vec![T::zero(); m + n];
            for b in 0..m {
                e[b] += w[(b, i)];
                for s in 0..n {
                    e[m + s] += w[(b, i)] * a[(s, b)];
                }
            }
            e
        })
        .collect();
    let normal = (0..n)
        .map(|s| {
            let mut e = vec![T::zero(); m + n];
            for t in 0..n {
                for i in 0..m {
                    e[i] += v[(t, s)] * a[(t, i)];
                }
                e[m + t] += v[(t, s)];
            }
            e
        })
        .collect();
    Ok(Frames {
        tangent,
        normal,
        tangent_coeffs: w,
        normal_coeffs: v,
        metric_factor: l,
        normal_factor: k,
    })
}

impl<T: Scalar> Frames<T> {
    /// Largest deviation of the frame Gram matrix from `diag(+1 × m, -1 × n)`.
    pub fn orthonormality_residual(&self) -> T {
        let m = self.tangent.len();
        let all: Vec<&Vec<T>> = self.tangent.iter().chain(&self.normal).collect();
        let mut worst = T::zero();
        for (p, u) in all.iter().enumerate() {
            for (q, v) in all.iter().enumerate() {
                let want = match (p == q, p < m) {
                    (false, _) => T::zero(),
                    (true, true) => T::one(),
                    (true, false) => -T::one(),
                };
                worst = worst.max((ambient_dot(m, u, v) - want).abs());
            }
        }
        worst
    }
}
