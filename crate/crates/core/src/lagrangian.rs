//! Gradient graphs `M = {(x, ∇F(x))}` of convex potentials in null coordinates of `R^{2m}_m`.
//!
//! The ambient form is `Q((u, v), (u', v')) = ½ (u·v' + u'·v)`, so the coordinate tangents
//! `e_i = ∂_i + F_ij ∂_{y^j}` satisfy `<e_i, e_j> = F_ij` and the normals
//! `n_i = ∂_i - F_ij ∂_{y^j}` satisfy `<n_i, n_j> = -F_ij`.

use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::graphgeom::intrinsic::riemann_from_metric;
use crate::graphgeom::LocalGraph;
use crate::jet::{evaluate_jet, Jet3, MAX_DIM};
use crate::linalg::Mat;
use crate::scalar::Scalar;
use crate::tensor::{Tensor3, Tensor4};

/// Convex potential `F` with the Monge-Ampère target `det Hess F = c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential<T> {
    m: usize,
    f: Expr,
    c: T,
}

impl<T: Scalar> Potential<T> {
    pub fn new(m: usize, f: Expr) -> Result<Self> {
        if m == 0 || m > MAX_DIM {
            return Err(Error::Dimension {
                dim: m,
                reason: format!("potential dimension must lie in 1..={MAX_DIM}"),
            });
        }
        if let Some(i) = f.max_var() {
            if i >= m {
                return Err(Error::VariableOutOfRange { index: i + 1, dim: m });
            }
        }
        Ok(Potential { m, f, c: T::one() })
    }

    pub fn parse(m: usize, text: &str) -> Result<Self> {
        Self::new(m, parse(text, m)?)
    }

    pub fn with_target(mut self, c: T) -> Self {
        self.c = c;
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn expr(&self) -> &Expr {
        &self.f
    }

    pub fn target(&self) -> T {
        self.c
    }

    fn jet(&self, x: &[T]) -> Result<Jet3<T>> {
        if x.len() != self.m {
            return Err(Error::InvalidArgument(format!(
                "point has {} coordinates, expected {}",
                x.len(),
                self.m
            )));
        }
        evaluate_jet(&self.f, x)
    }
}

/// Point of the gradient graph with its induced (Hessian) metric.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientPoint<T> {
    pub x: Vec<T>,
    /// `∇F(x)`
    pub y: Vec<T>,
    /// `g_ij = F_ij`
    pub metric: Mat<T>,
    pub min_eig: T,
    pub convex: bool,
}

pub fn gradient_graph<T: Scalar>(p: &Potential<T>, x: &[T]) -> Result<GradientPoint<T>> {
    let jet = p.jet(x)?;
    let m = p.m;
    let metric = Mat::from_fn(m, m, |i, j| jet.hess(i, j));
    let min_eig = metric.min_eigenvalue();
    Ok(GradientPoint {
        x: x.to_vec(),
        y: jet.grad().to_vec(),
        metric,
        min_eig,
        convex: min_eig > T::zero(),
    })
}

/// Hessian, inverse Hessian and third derivatives at a convex point.
struct Convex<T> {
    g: Mat<T>,
    gi: Mat<T>,
    third: Tensor3<T>,
}

fn convex_data<T: Scalar>(p: &Potential<T>, x: &[T]) -> Result<Convex<T>> {
    let jet = p.jet(x)?;
    let m = p.m;
    let g = Mat::from_fn(m, m, |i, j| jet.hess(i, j));
    let min_eig = g.min_eigenvalue();
    if !(min_eig > T::zero()) {
        return Err(Error::NotConvex {
            point: x.iter().map(|v| v.to_f64_lossy()).collect(),
            min_eig: min_eig.to_f64_lossy(),
        });
    }
    Ok(Convex {
        gi: g.inverse()?,
        g,
        third: Tensor3::from_fn([m, m, m], |i, j, k| jet.third(i, j, k)),
    })
}

/// `∂_l ln det g = g^{ij} F_ijl`
fn dlog_det<T: Scalar>(c: &Convex<T>) -> Vec<T> {
    let m = c.g.rows();
    (0..m)
        .map(|l| {
            let mut acc = T::zero();
            for i in 0..m {
                for j in 0..m {
                    acc += c.gi[(i, j)] * c.third[(i, j, l)];
                }
            }
            acc
        })
        .collect()
}

/// Second fundamental form and mean curvature of the gradient graph in the normals `n_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianForms<T> {
    pub metric: Mat<T>,
    /// `B_ij = Σ_k b[(i, j, k)] n_k` with `b_ijk = -½ F_ijl g^{lk}`.
    pub b: Tensor3<T>,
    /// `H = Σ_k eta[k] n_k` with `eta^k = -(1/2m) ∂_l(ln det g) g^{lk}`.
    pub eta: Vec<T>,
    /// `∂_l ln det g` from `g^{ij} F_ijl`.
    pub dlog_det: Vec<T>,
    /// Largest deviation between `dlog_det` and central differences of `ln det Hess F`.
    pub log_det_defect: T,
    /// Squared norm `Σ g^{ik} g^{jl} b_ijp b_klq F_pq`.
    pub s: T,
    /// `(η_p η_q F_pq)^{1/2}`
    pub h_norm: T,
}

pub fn lagrangian_forms<T: Scalar>(p: &Potential<T>, x: &[T]) -> Result<LagrangianForms<T>> {
    let cd = convex_data(p, x)?;
    let m = p.m;
    let half = T::lit(0.5);
    let b = Tensor3::from_fn([m, m, m], |i, j, k| {
        -half * (0..m).map(|l| cd.third[(i, j, l)] * cd.gi[(l, k)]).sum::<T>()
    });
    let dl = dlog_det(&cd);
    let two_m = T::count(2 * m);
    let eta: Vec<T> = (0..m)
        .map(|k| -(0..m).map(|l| dl[l] * cd.gi[(l, k)]).sum::<T>() / two_m)
        .collect();

    let step = T::lit(1e-4);
    let mut log_det_defect = T::zero();
    for l in 0..m {
        let ln_det = |d: T| -> Result<T> {
            let mut y = x.to_vec();
            y[l] += d;
            let jet = p.jet(&y)?;
            Ok(Mat::from_fn(m, m, |i, j| jet.hess(i, j)).det().ln())
        };
        let fd = (ln_det(step)? - ln_det(-step)?) / (T::lit(2.0) * step);
        log_det_defect = log_det_defect.max((fd - dl[l]).abs());
    }

    // raise both tangent indices of b with g^{-1}
    let mut s = T::zero();
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    let w = cd.gi[(i, k)] * cd.gi[(j, l)];
                    if w == T::zero() {
                        continue;
                    }
                    for pp in 0..m {
                        for q in 0..m {
                            s += w * b[(i, j, pp)] * b[(k, l, q)] * cd.g[(pp, q)];
                        }
                    }
                }
            }
        }
    }
    let mut hh = T::zero();
    for pp in 0..m {
        for q in 0..m {
            hh += eta[pp] * eta[q] * cd.g[(pp, q)];
        }
    }
    Ok(LagrangianForms {
        metric: cd.g,
        b,
        eta,
        dlog_det: dl,
        log_det_defect,
        s,
        h_norm: hh.max(T::zero()).sqrt(),
    })
}

/// `det Hess F(x) - c`
pub fn ma_residual<T: Scalar>(p: &Potential<T>, x: &[T]) -> Result<T> {
    let jet = p.jet(x)?;
    let m = p.m;
    Ok(Mat::from_fn(m, m, |i, j| jet.hess(i, j)).det() - p.c)
}

/// Curvature of the Hessian metric `F_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuliCurvature<T> {
    /// `R_ijkl = -¼ g^{st} F_sik F_tjl + ¼ g^{st} F_sil F_tjk`
    pub riemann: Tensor4<T>,
    /// `R_ik = g^{jl} R_ijkl`
    pub ricci: Mat<T>,
    pub scalar: T,
    /// Smallest eigenvalue of `g^{-1} Ric`.
    pub min_ricci_eig: T,
}

pub fn moduli_curvature<T: Scalar>(p: &Potential<T>, x: &[T]) -> Result<ModuliCurvature<T>> {
    let cd = convex_data(p, x)?;
    Ok(moduli_from_derivatives(&cd.g, &cd.third))
}

/// Curvature formulas from a Hessian metric and the third derivatives of its potential.
pub fn moduli_from_derivatives<T: Scalar>(g: &Mat<T>, third: &Tensor3<T>) -> ModuliCurvature<T> {
    moduli_from_parts(g, third, None)
}

/// As [`moduli_from_derivatives`], optionally with `∂_t ln det g` supplied separately instead of
/// the contraction `g^{ab} F_abt`.
pub fn moduli_from_parts<T: Scalar>(
    g: &Mat<T>,
    third: &Tensor3<T>,
    dlog: Option<&[T]>,
) -> ModuliCurvature<T> {
    let m = g.rows();
    let gi = g.inverse().expect("convex Hessian is invertible");
    let quarter = T::lit(0.25);
    // c[(i, k, j, l)] = g^{st} F_sik F_tjl
    let c = Tensor4::from_fn([m, m, m, m], |i, k, j, l| {
        let mut acc = T::zero();
        for s in 0..m {
            for t in 0..m {
                acc += gi[(s, t)] * third[(s, i, k)] * third[(t, j, l)];
            }
        }
        acc
    });
    let riemann = Tensor4::from_fn([m, m, m, m], |i, j, k, l| {
        quarter * (c[(i, l, j, k)] - c[(i, k, j, l)])
    });
    let dl: Vec<T> = match dlog {
        Some(d) => d.to_vec(),
        None => (0..m)
            .map(|t| {
                let mut acc = T::zero();
                for a in 0..m {
                    for b in 0..m {
                        acc += gi[(a, b)] * third[(a, b, t)];
                    }
                }
                acc
            })
            .collect(),
    };
    let ricci = Mat::from_fn(m, m, |i, k| {
        let mut first = T::zero();
        let mut second = T::zero();
        for s in 0..m {
            for t in 0..m {
                first += gi[(s, t)] * third[(s, i, k)] * dl[t];
            }
        }
        for j in 0..m {
            for l in 0..m {
                second += gi[(j, l)] * c[(i, l, j, k)];
            }
        }
        quarter * (second - first)
    });
    let mut scalar = T::zero();
    for s in 0..m {
        for t in 0..m {
            scalar -= quarter * gi[(s, t)] * dl[s] * dl[t];
        }
    }
    for i in 0..m {
        for k in 0..m {
            for j in 0..m {
                for l in 0..m {
                    scalar += quarter * gi[(i, k)] * gi[(j, l)] * c[(i, l, j, k)];
                }
            }
        }
    }
    let min_ricci_eig = relative_min_eig(g, &ricci);
    ModuliCurvature {
        riemann,
        ricci,
        scalar,
        min_ricci_eig,
    }
}

/// Smallest eigenvalue of `g^{-1} r` for symmetric `r` and positive definite `g`.
pub fn relative_min_eig<T: Scalar>(g: &Mat<T>, r: &Mat<T>) -> T {
    let l_inv = g.cholesky().expect("positive definite").lower_inverse();
    let sym = l_inv.matmul(r).matmul(&l_inv.transpose());
    let sym = sym.add(&sym.transpose()).scale(T::lit(0.5));
    sym.min_eigenvalue()
}

/// Intrinsic curvature of the Hessian metric from Christoffel symbols, in the convention
/// `<R(∂_k, ∂_l) ∂_j, ∂_i>`. Fourth derivatives of `F` come from Richardson-extrapolated central
/// differences of third-derivative jets with base step `h`.
pub fn moduli_curvature_oracle<T: Scalar>(p: &Potential<T>, x: &[T], h: T) -> Result<Tensor4<T>> {
    let cd = convex_data(p, x)?;
    let m = p.m;
    let third_at = |d: usize, off: T| -> Result<Tensor3<T>> {
        let mut y = x.to_vec();
        y[d] += off;
        let jet = p.jet(&y)?;
        Ok(Tensor3::from_fn([m, m, m], |a, b, c| jet.third(a, b, c)))
    };
    let mut fourth = Vec::with_capacity(m);
    for d in 0..m {
        let central = |step: T| -> Result<Tensor3<T>> {
            let (plus, minus) = (third_at(d, step)?, third_at(d, -step)?);
            Ok(Tensor3::from_fn([m, m, m], |a, b, c| {
                (plus[(a, b, c)] - minus[(a, b, c)]) / (T::lit(2.0) * step)
            }))
        };
        let (coarse, fine) = (central(h)?, central(h / T::lit(2.0))?);
        fourth.push(Tensor3::from_fn([m, m, m], |a, b, c| {
            (T::lit(4.0) * fine[(a, b, c)] - coarse[(a, b, c)]) / T::lit(3.0)
        }));
    }
    let dg: Vec<Mat<T>> = (0..m)
        .map(|c| Mat::from_fn(m, m, |a, b| cd.third[(a, b, c)]))
        .collect();
    let mut d2g = Vec::with_capacity(m * m);
    for c in 0..m {
        for d in 0..m {
            d2g.push(Mat::from_fn(m, m, |a, b| fourth[d][(a, b, c)]));
        }
    }
    Ok(riemann_from_metric(&cd.g, &cd.gi, &dg, &d2g))
}

/// The gradient graph written as an ordinary space-like graph in `R^{2m}_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardForm<T> {
    /// Linear map `(x; y) -> (u; w)` with `u = (x + y)/2`, `w = (x - y)/2`; it pulls the standard
    /// form `diag(+1 × m, -1 × m)` back to `Q`.
    pub transform: Mat<T>,
    /// Standard coordinates `(u; w)` of the point.
    pub point: Vec<T>,
    /// `w` as a function of `u` with derivatives to second order; third derivatives would need
    /// fourth derivatives of `F` and are left out.
    pub local: LocalGraph<T>,
}

pub fn to_standard<T: Scalar>(p: &Potential<T>, x: &[T]) -> Result<StandardForm<T>> {
    let cd = convex_data(p, x)?;
    let jet = p.jet(x)?;
    let m = p.m;
    let half = T::lit(0.5);
    let transform = Mat::from_fn(2 * m, 2 * m, |r, c| {
        if r < m {
            if c % m == r { half } else { T::zero() }
        } else if c == r - m {
            half
        } else if c == r {
            -half
        } else {
            T::zero()
        }
    });
    let grad = jet.grad();
    let u: Vec<T> = (0..m).map(|i| half * (x[i] + grad[i])).collect();
    let w: Vec<T> = (0..m).map(|i| half * (x[i] - grad[i])).collect();
    // u(x) has Jacobian J = (I + F2)/2 and second derivatives F3/2; w(x) has (I - F2)/2, -F3/2
    let id = Mat::<T>::identity(m);
    let j_inv = id.add(&cd.g).scale(half).inverse()?;
    let dw = id.sub(&cd.g).scale(half);
    let jac = dw.matmul(&j_inv);
    let second = Tensor3::from_fn([m, m, m], |s, pp, q| {
        let mut acc = T::zero();
        for i in 0..m {
            for j in 0..m {
                let mut inner = -half * cd.third[(s, i, j)];
                for r in 0..m {
                    inner -= jac[(s, r)] * half * cd.third[(r, i, j)];
                }
                acc += inner * j_inv[(i, pp)] * j_inv[(j, q)];
            }
        }
        acc
    });
    let mut point = u.clone();
    point.extend(&w);
    Ok(StandardForm {
        transform,
        point,
        local: LocalGraph {
            x: u,
            y: w,
            jac,
            second,
            third: None,
        },
    })
}
