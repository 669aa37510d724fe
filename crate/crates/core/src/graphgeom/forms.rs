use super::{frames_of, metric_point, Frames, GraphMap, LocalGraph, MetricPoint};
use crate::error::{Error, Result};
use crate::linalg::{lower_half, Mat};
use crate::scalar::Scalar;
use crate::tensor::{Tensor3, Tensor4};

/// Second fundamental form and its traces in the adapted frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalForms<T> {
    /// `h[(s, i, j)]`
    pub h: Tensor3<T>,
    /// Mean curvature components `H^s = (1/m) Σ_i h_sii`.
    pub mean: Vec<T>,
    /// `(Σ_s (H^s)²)^{1/2}`
    pub h_norm: T,
    /// Squared norm `S = Σ h_sij²`.
    pub s: T,
}

/// Curvature tensors in the adapted frame, from the Gauss and Ricci equations.
#[derive(Debug, Clone, PartialEq)]
pub struct Curvature<T> {
    /// `R_ijkl = -(h_sik h_sjl - h_sil h_sjk)`; `R_ijij` is the sectional curvature.
    pub riemann: Tensor4<T>,
    /// `R_ij = Σ_k R_kikj`
    pub ricci: Mat<T>,
    /// Normal curvature `R_stij = h_ski h_tkj - h_skj h_tki`.
    pub normal: Tensor4<T>,
}

/// Covariant derivative `h_sijk` of the second fundamental form.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariantReport<T> {
    /// `h_cov[(s, i, j, k)]`
    pub h_cov: Tensor4<T>,
    /// `max |h_sijk - h_sikj|`
    pub codazzi_asymmetry: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointGeometry<T> {
    pub metric: MetricPoint<T>,
    pub frames: Frames<T>,
    pub forms: FundamentalForms<T>,
    pub curvature: Curvature<T>,
    /// Present when third derivatives of the map are available.
    pub covariant: Option<CovariantReport<T>>,
}

pub fn fundamental_forms<T: Scalar>(map: &GraphMap<T>, x: &[T]) -> Result<FundamentalForms<T>> {
    let local = map.local(x)?;
    let frames = frames_of(&local)?;
    Ok(forms_of(&local, &frames))
}

/// `Wᵀ F_t W` for every normal index `t`.
fn pulled_second<T: Scalar>(local: &LocalGraph<T>, w: &Mat<T>) -> Vec<Mat<T>> {
    let m = local.m();
    (0..local.n())
        .map(|t| {
            let f = Mat::from_fn(m, m, |a, b| local.second[(t, a, b)]);
            w.transpose().matmul(&f).matmul(w)
        })
        .collect()
}

pub fn forms_of<T: Scalar>(local: &LocalGraph<T>, frames: &Frames<T>) -> FundamentalForms<T> {
    let (m, n) = (local.m(), local.n());
    let v = &frames.normal_coeffs;
    let pulled = pulled_second(local, &frames.tangent_coeffs);
    let h = Tensor3::from_fn([n, m, m], |s, i, j| {
        -(0..n).map(|t| v[(t, s)] * pulled[t][(i, j)]).sum::<T>()
    });
    let mf = T::count(m);
    let mean: Vec<T> = (0..n)
        .map(|s| (0..m).map(|i| h[(s, i, i)]).sum::<T>() / mf)
        .collect();
    let h_norm = mean.iter().map(|&c| c * c).sum::<T>().sqrt();
    FundamentalForms {
        s: h.sum_sq(),
        h,
        mean,
        h_norm,
    }
}

pub fn curvature_of<T: Scalar>(forms: &FundamentalForms<T>) -> Curvature<T> {
    let [n, m, _] = forms.h.shape();
    let h = &forms.h;
    let riemann = Tensor4::from_fn([m, m, m, m], |i, j, k, l| {
        -(0..n)
            .map(|s| h[(s, i, k)] * h[(s, j, l)] - h[(s, i, l)] * h[(s, j, k)])
            .sum::<T>()
    });
    let ricci = Mat::from_fn(m, m, |i, j| (0..m).map(|k| riemann[(k, i, k, j)]).sum());
    let normal = Tensor4::from_fn([n, n, m, m], |s, t, i, j| {
        (0..m)
            .map(|k| h[(s, k, i)] * h[(t, k, j)] - h[(s, k, j)] * h[(t, k, i)])
            .sum()
    });
    Curvature {
        riemann,
        ricci,
        normal,
    }
}

pub fn curvature<T: Scalar>(map: &GraphMap<T>, x: &[T]) -> Result<Curvature<T>> {
    Ok(curvature_of(&fundamental_forms(map, x)?))
}

/// Smallest Ricci eigenvalue minus the lower bound `-m² |H|² / 4`.
pub fn ricci_margin<T: Scalar>(forms: &FundamentalForms<T>, curv: &Curvature<T>) -> T {
    let m = T::count(curv.ricci.rows());
    curv.ricci.min_eigenvalue() + m * m * forms.h_norm * forms.h_norm / T::lit(4.0)
}

pub fn ricci_bound_check<T: Scalar>(map: &GraphMap<T>, x: &[T]) -> Result<T> {
    let forms = fundamental_forms(map, x)?;
    Ok(ricci_margin(&forms, &curvature_of(&forms)))
}

/// `Σ_ij g^{ij} ∂²f^s/∂x^i∂x^j` for every component.
pub fn extremal_residual<T: Scalar>(map: &GraphMap<T>, x: &[T]) -> Result<Vec<T>> {
    extremal_residual_of(&map.local(x)?)
}

pub fn extremal_residual_of<T: Scalar>(local: &LocalGraph<T>) -> Result<Vec<T>> {
    let mp = metric_point(local);
    if !mp.spacelike {
        return Err(Error::NotSpacelike {
            point: local.point_f64(),
            min_eig: mp.min_eig.to_f64_lossy(),
        });
    }
    let gi = mp.g_inv.expect("space-like metric is invertible");
    let m = local.m();
    Ok((0..local.n())
        .map(|s| {
            let mut acc = T::zero();
            for i in 0..m {
                for j in 0..m {
                    acc += gi[(i, j)] * local.second[(s, i, j)];
                }
            }
            acc
        })
        .collect())
}

pub fn covariant_h<T: Scalar>(map: &GraphMap<T>, x: &[T]) -> Result<CovariantReport<T>> {
    let local = map.local(x)?;
    let frames = frames_of(&local)?;
    let forms = forms_of(&local, &frames);
    covariant_of(&local, &frames, &forms)
}

/// Covariant derivative of `h` with connection coefficients obtained by differentiating the
/// Cholesky-based frame construction exactly.
pub fn covariant_of<T: Scalar>(
    local: &LocalGraph<T>,
    frames: &Frames<T>,
    forms: &FundamentalForms<T>,
) -> Result<CovariantReport<T>> {
    let third = local.third.as_ref().ok_or_else(|| {
        Error::InvalidArgument("covariant derivative needs third derivatives".into())
    })?;
    let (m, n) = (local.m(), local.n());
    let a = &local.jac;
    let w = &frames.tangent_coeffs;
    let v = &frames.normal_coeffs;
    let l = &frames.metric_factor;
    let k = &frames.normal_factor;
    let l_inv = l.lower_inverse();
    let k_inv = k.lower_inverse();
    let dg = local.metric_derivative();
    let pulled = pulled_second(local, w);
    let h = &forms.h;

    // Coordinate derivatives along ∂_c of h, and of the tangent and normal connection forms.
    let mut dh = Vec::with_capacity(m);
    let mut conn_t = Vec::with_capacity(m);
    let mut conn_n = Vec::with_capacity(m);
    for c in 0..m {
        let phi = lower_half(&l_inv.matmul(&dg[c]).matmul(&l_inv.transpose()));
        let dw = w.matmul(&phi.transpose()).scale(-T::one());
        let dn = Mat::from_fn(n, n, |s, t| {
            -(0..m)
                .map(|i| local.second[(s, i, c)] * a[(t, i)] + a[(s, i)] * local.second[(t, i, c)])
                .sum::<T>()
        });
        let psi = lower_half(&k_inv.matmul(&dn).matmul(&k_inv.transpose()));
        let dv = v.matmul(&psi.transpose()).scale(-T::one());

        let dpulled: Vec<Mat<T>> = (0..n)
            .map(|t| {
                let f = Mat::from_fn(m, m, |p, q| local.second[(t, p, q)]);
                let f3 = Mat::from_fn(m, m, |p, q| third[(t, p, q, c)]);
                let wt = w.transpose();
                dw.transpose()
                    .matmul(&f)
                    .matmul(w)
                    .add(&wt.matmul(&f).matmul(&dw))
                    .add(&wt.matmul(&f3).matmul(w))
            })
            .collect();
        dh.push(Tensor3::from_fn([n, m, m], |s, i, j| {
            -(0..n)
                .map(|t| dv[(t, s)] * pulled[t][(i, j)] + v[(t, s)] * dpulled[t][(i, j)])
                .sum::<T>()
        }));

        // <∂_c e_i, e_l> = (dWᵀ L)_il + (Wᵀ Γ_c W)_il with Γ_c[(p, q)] = <X_pc, X_q>
        let gamma = Mat::from_fn(m, m, |p, q| {
            -(0..n).map(|s| local.second[(s, p, c)] * a[(s, q)]).sum::<T>()
        });
        conn_t.push(
            dw.transpose()
                .matmul(l)
                .add(&w.transpose().matmul(&gamma).matmul(w)),
        );
        // <∂_c e_s, e_t> = -(dVᵀ K)_st + (Vᵀ Q_c V)_st with Q_c[(u, r)] = Σ_i f^u_ic A_ri
        let q = Mat::from_fn(n, n, |u, r| {
            (0..m).map(|i| local.second[(u, i, c)] * a[(r, i)]).sum::<T>()
        });
        conn_n.push(
            v.transpose()
                .matmul(&q)
                .matmul(v)
                .sub(&dv.transpose().matmul(k)),
        );
    }

    // Contract coordinate derivatives with the frame: e_k = Σ_c W_ck ∂_c.
    let along = |c_of: &dyn Fn(usize) -> T, kk: usize| -> T {
        (0..m).map(|c| w[(c, kk)] * c_of(c)).sum()
    };
    let mut h_cov = Tensor4::zeros([n, m, m, m]);
    for s in 0..n {
        for i in 0..m {
            for j in 0..m {
                for kk in 0..m {
                    let mut val = along(&|c| dh[c][(s, i, j)], kk);
                    for l in 0..m {
                        val -= along(&|c| conn_t[c][(i, l)], kk) * h[(s, l, j)];
                        val -= along(&|c| conn_t[c][(j, l)], kk) * h[(s, i, l)];
                    }
                    for t in 0..n {
                        val += along(&|c| conn_n[c][(s, t)], kk) * h[(t, i, j)];
                    }
                    h_cov[(s, i, j, kk)] = val;
                }
            }
        }
    }
    let mut asym = T::zero();
    for s in 0..n {
        for i in 0..m {
            for j in 0..m {
                for kk in 0..m {
                    asym = asym.max((h_cov[(s, i, j, kk)] - h_cov[(s, i, kk, j)]).abs());
                }
            }
        }
    }
    Ok(CovariantReport {
        h_cov,
        codazzi_asymmetry: asym,
    })
}

pub fn point_geometry<T: Scalar>(map: &GraphMap<T>, x: &[T]) -> Result<PointGeometry<T>> {
    point_geometry_of(&map.local(x)?)
}

pub fn point_geometry_of<T: Scalar>(local: &LocalGraph<T>) -> Result<PointGeometry<T>> {
    let metric = metric_point(local);
    let frames = frames_of(local)?;
    let forms = forms_of(local, &frames);
    let curvature = curvature_of(&forms);
    let covariant = match local.third {
        Some(_) => Some(covariant_of(local, &frames, &forms)?),
        None => None,
    };
    Ok(PointGeometry {
        metric,
        frames,
        forms,
        curvature,
        covariant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyperboloid(m: usize) -> GraphMap<f64> {
        let sum: Vec<String> = (1..=m).map(|i| format!("x{i}^2")).collect();
        GraphMap::parse(m, &[&format!("sqrt(1+{})", sum.join("+"))]).unwrap()
    }

    #[test]
    fn affine_maps_are_totally_geodesic() {
        let map = GraphMap::<f64>::parse(2, &["0.3*x1 - 0.2*x2 + 1", "0.1*x1 + 0.4*x2"]).unwrap();
        let x = [0.7, -0.3];
        let g = point_geometry(&map, &x).unwrap();
        assert_eq!(g.forms.s, 0.0);
        assert_eq!(g.forms.h_norm, 0.0);
        assert_eq!(g.curvature.riemann.max_abs(), 0.0);
        assert_eq!(g.curvature.normal.max_abs(), 0.0);
        assert_eq!(g.covariant.unwrap().h_cov.max_abs(), 0.0);
        assert_eq!(ricci_bound_check(&map, &x).unwrap(), 0.0);
        assert_eq!(extremal_residual(&map, &x).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn hyperboloid_is_umbilic_with_unit_curvature() {
        for m in 1..=4 {
            let map = hyperboloid(m);
            let x: Vec<f64> = (0..m).map(|i| 0.3 * i as f64 - 0.4).collect();
            let g = point_geometry(&map, &x).unwrap();
            assert!((g.forms.s - m as f64).abs() < 1e-12, "S = {}", g.forms.s);
            assert!((g.forms.h_norm - 1.0).abs() < 1e-12);
            for i in 0..m {
                for j in 0..m {
                    let want = if i == j { -((m - 1) as f64) } else { 0.0 };
                    assert!((g.curvature.ricci[(i, j)] - want).abs() < 1e-12);
                    if i != j {
                        assert!((g.curvature.riemann[(i, j, i, j)] + 1.0).abs() < 1e-12);
                    }
                }
            }
            assert!(g.covariant.unwrap().h_cov.max_abs() < 1e-12);
        }
        let margin = ricci_bound_check(&hyperboloid(2), &[0.2, 0.1]).unwrap();
        assert!(margin.abs() < 1e-12);
    }

    #[test]
    fn lorentzian_catenoid_is_maximal() {
        let map = GraphMap::<f64>::parse(2, &["asinh(sqrt(x1^2+x2^2))"]).unwrap();
        for &(r, th) in &[(0.5, 0.1), (1.0, 2.0), (1.7, -1.0), (2.0, 0.7)] {
            let x = [r * f64::cos(th), r * f64::sin(th)];
            let forms = fundamental_forms(&map, &x).unwrap();
            assert!(forms.h_norm <= 1e-9 && forms.s > 0.0);
            let res = extremal_residual(&map, &x).unwrap();
            assert!(res[0].abs() <= 1e-9);
        }
    }

    #[test]
    fn parabola_residual_matches_mean_curvature() {
        let map = GraphMap::<f64>::parse(1, &["x1^2"]).unwrap();
        let res = extremal_residual(&map, &[0.1]).unwrap();
        assert!((res[0] - 2.0 / 0.96).abs() < 1e-13);
        let forms = fundamental_forms(&map, &[0.1]).unwrap();
        assert!(forms.h_norm > 0.1);
    }
}
