//! Intrinsic curvature of the induced metric from coordinate formulas, independent of frames
//! and of the second fundamental form.

use super::{frames_of, GraphMap, LocalGraph};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Scalar;
use crate::tensor::{Tensor3, Tensor4};

/// `d2g[c * m + d][(a, b)] = ∂_c ∂_d g_ab`.
fn metric_second_derivative<T: Scalar>(local: &LocalGraph<T>, third: &Tensor4<T>) -> Vec<Mat<T>> {
    let (m, n) = (local.m(), local.n());
    let (a1, f2) = (&local.jac, &local.second);
    let mut out = Vec::with_capacity(m * m);
    for c in 0..m {
        for d in 0..m {
            out.push(Mat::from_fn(m, m, |a, b| {
                -(0..n)
                    .map(|s| {
                        third[(s, a, c, d)] * a1[(s, b)]
                            + f2[(s, a, c)] * f2[(s, b, d)]
                            + f2[(s, a, d)] * f2[(s, b, c)]
                            + a1[(s, a)] * third[(s, b, c, d)]
                    })
                    .sum::<T>()
            }));
        }
    }
    out
}

fn inverse_metric<T: Scalar>(local: &LocalGraph<T>) -> Result<Mat<T>> {
    let g = local.metric_matrix();
    if g.min_eigenvalue() <= T::zero() {
        return Err(Error::NotSpacelike {
            point: local.x.iter().map(|v| v.to_f64_lossy()).collect(),
            min_eig: g.min_eigenvalue().to_f64_lossy(),
        });
    }
    g.inverse()
}

/// Christoffel symbols `Γ[(p, i, j)] = Γ^p_ij` of the induced metric.
pub fn christoffel<T: Scalar>(map: &GraphMap<T>, x: &[T]) -> Result<Tensor3<T>> {
    let local = map.local(x)?;
    let gi = inverse_metric(&local)?;
    Ok(christoffel_of(&gi, &local.metric_derivative()))
}

pub(super) fn christoffel_of<T: Scalar>(gi: &Mat<T>, dg: &[Mat<T>]) -> Tensor3<T> {
    let m = gi.rows();
    let half = T::lit(0.5);
    Tensor3::from_fn([m, m, m], |p, i, j| {
        half * (0..m)
            .map(|q| gi[(p, q)] * (dg[i][(q, j)] + dg[j][(q, i)] - dg[q][(i, j)]))
            .sum::<T>()
    })
}

/// Coordinate Riemann tensor `R[(i, j, k, l)] = <R(∂_k, ∂_l) ∂_j, ∂_i>`.
pub fn coordinate_riemann<T: Scalar>(map: &GraphMap<T>, x: &[T]) -> Result<Tensor4<T>> {
    coordinate_riemann_of(&map.local(x)?)
}

fn coordinate_riemann_of<T: Scalar>(local: &LocalGraph<T>) -> Result<Tensor4<T>> {
    let third = local
        .third
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("intrinsic curvature needs third derivatives".into()))?;
    let g = local.metric_matrix();
    let gi = inverse_metric(local)?;
    let dg = local.metric_derivative();
    let d2g = metric_second_derivative(local, third);
    Ok(riemann_from_metric(&g, &gi, &dg, &d2g))
}

/// `<R(∂_k, ∂_l) ∂_j, ∂_i>` from a metric, its inverse, `dg[c] = ∂_c g` and
/// `d2g[c * m + d] = ∂_c ∂_d g`.
pub(crate) fn riemann_from_metric<T: Scalar>(
    g: &Mat<T>,
    gi: &Mat<T>,
    dg: &[Mat<T>],
    d2g: &[Mat<T>],
) -> Tensor4<T> {
    let m = g.rows();
    let gamma = christoffel_of(gi, dg);
    let half = T::lit(0.5);

    // dgamma[(k, p, i, j)] = ∂_k Γ^p_ij
    let dgi: Vec<Mat<T>> = dg
        .iter()
        .map(|d| gi.matmul(d).matmul(gi).scale(-T::one()))
        .collect();
    let dgamma = Tensor4::from_fn([m, m, m, m], |k, p, i, j| {
        half * (0..m)
            .map(|q| {
                dgi[k][(p, q)] * (dg[i][(q, j)] + dg[j][(q, i)] - dg[q][(i, j)])
                    + gi[(p, q)]
                        * (d2g[k * m + i][(q, j)] + d2g[k * m + j][(q, i)]
                            - d2g[k * m + q][(i, j)])
            })
            .sum::<T>()
    });
    let rup = Tensor4::from_fn([m, m, m, m], |p, k, l, j| {
        let mut r = dgamma[(k, p, l, j)] - dgamma[(l, p, k, j)];
        for q in 0..m {
            r += gamma[(p, k, q)] * gamma[(q, l, j)] - gamma[(p, l, q)] * gamma[(q, k, j)];
        }
        r
    });
    Tensor4::from_fn([m, m, m, m], |i, j, k, l| {
        (0..m).map(|p| g[(i, p)] * rup[(p, k, l, j)]).sum()
    })
}

/// Intrinsic Riemann tensor expressed in the adapted tangent frame.
pub fn frame_riemann_oracle<T: Scalar>(map: &GraphMap<T>, x: &[T]) -> Result<Tensor4<T>> {
    let local = map.local(x)?;
    let coord = coordinate_riemann_of(&local)?;
    let w = frames_of(&local)?.tangent_coeffs;
    let m = local.m();
    // contract one index at a time
    let mut cur = coord;
    for slot in 0..4 {
        let prev = cur.clone();
        cur = Tensor4::from_fn([m, m, m, m], |i, j, k, l| {
            let idx = [i, j, k, l];
            (0..m)
                .map(|a| {
                    let mut src = idx;
                    src[slot] = a;
                    w[(a, idx[slot])] * prev[(src[0], src[1], src[2], src[3])]
                })
                .sum()
        });
    }
    Ok(cur)
}
