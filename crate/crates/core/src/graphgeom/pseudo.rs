use super::{forms_of, frames_of, GraphMap};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Scalar;

/// Pseudo-distance `z = <X, X>` and its frame derivatives at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoDistancePoint<T> {
    pub z: T,
    /// `z_i = 2 <X, e_i>`
    pub grad_z: Vec<T>,
    /// `z_ij = 2 (δ_ij - Σ_s <X, e_s> h_sij)`
    pub hess_z: Mat<T>,
    /// `Δz = 2m - 2m Σ_s <X, e_s> H^s`
    pub lap_z: T,
    /// `|∇z| / (z + 1)`
    pub ratio: T,
}

/// Requires `X(0) = 0`, either exactly or through a configured offset.
pub fn pseudo_distance<T: Scalar>(map: &GraphMap<T>, x: &[T]) -> Result<PseudoDistancePoint<T>> {
    if map.offset().is_none() {
        let zero = vec![T::zero(); map.m()];
        let f0 = map
            .components()
            .iter()
            .map(|c| c.eval(&zero))
            .collect::<Result<Vec<T>>>()?;
        if f0.iter().any(|v| *v != T::zero()) {
            return Err(Error::BasePointNotOnGraph {
                offset: f0.iter().map(|v| v.to_f64_lossy()).collect(),
            });
        }
    }
    let local = map.local(x)?;
    let frames = frames_of(&local)?;
    let forms = forms_of(&local, &frames);
    let (m, n) = (local.m(), local.n());
    let (a, w, v) = (&local.jac, &frames.tangent_coeffs, &frames.normal_coeffs);
    let xs = &local.x;
    let ys = &local.y;

    let z = xs.iter().map(|&t| t * t).sum::<T>() - ys.iter().map(|&t| t * t).sum::<T>();
    // <X, X_a> and <X, Ñ_t>
    let on_coord: Vec<T> = (0..m)
        .map(|c| xs[c] - (0..n).map(|s| ys[s] * a[(s, c)]).sum::<T>())
        .collect();
    let on_normal: Vec<T> = (0..n)
        .map(|t| (0..m).map(|i| xs[i] * a[(t, i)]).sum::<T>() - ys[t])
        .collect();
    let x_tan: Vec<T> = (0..m)
        .map(|i| (0..m).map(|c| w[(c, i)] * on_coord[c]).sum())
        .collect();
    let x_nor: Vec<T> = (0..n)
        .map(|s| (0..n).map(|t| v[(t, s)] * on_normal[t]).sum())
        .collect();

    let two = T::lit(2.0);
    let grad_z: Vec<T> = x_tan.iter().map(|&c| two * c).collect();
    let hess_z = Mat::from_fn(m, m, |i, j| {
        let delta = if i == j { T::one() } else { T::zero() };
        two * (delta - (0..n).map(|s| x_nor[s] * forms.h[(s, i, j)]).sum::<T>())
    });
    let mf = T::count(m);
    let lap_z = two * mf - two * mf * (0..n).map(|s| x_nor[s] * forms.mean[s]).sum::<T>();
    let grad_norm = grad_z.iter().map(|&c| c * c).sum::<T>().sqrt();
    Ok(PseudoDistancePoint {
        ratio: grad_norm / (z + T::one()),
        z,
        grad_z,
        hess_z,
        lap_z,
    })
}

#[cfg(test)]
mod tests {
    use super::super::christoffel;
    use super::*;
    use crate::graphgeom::adapted_frames;

    #[test]
    fn origin() {
        let map = GraphMap::<f64>::parse(3, &["x1*x2 + x3^2", "0.5*sin(x1)"]).unwrap();
        let p = pseudo_distance(&map, &[0.0; 3]).unwrap();
        assert_eq!(p.z, 0.0);
        assert_eq!(p.grad_z, vec![0.0; 3]);
        assert_eq!(p.hess_z, Mat::identity(3).scale(2.0));
        assert_eq!(p.lap_z, 6.0);
    }

    #[test]
    fn linear_slope() {
        let map = GraphMap::<f64>::parse(1, &["0.6*x1"]).unwrap();
        let p = pseudo_distance(&map, &[1.0]).unwrap();
        assert!((p.z - 0.64).abs() < 1e-15);
        assert!((p.grad_z[0].abs() - 1.6).abs() < 1e-14);
        assert!((p.ratio - 1.6 / 1.64).abs() < 1e-14);
    }

    #[test]
    fn shifted_hyperboloid() {
        let map = GraphMap::<f64>::parse(2, &["sqrt(1+x1^2+x2^2) - 1"]).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let p = pseudo_distance(&map, &[r, r]).unwrap();
        assert!((p.z - (2.0 * 2f64.sqrt() - 2.0)).abs() < 1e-14);
        assert!((p.hess_z.trace() - p.lap_z).abs() < 1e-10);
    }

    #[test]
    fn base_point_must_be_on_graph() {
        let map = GraphMap::<f64>::parse(2, &["sqrt(1+x1^2+x2^2)"]).unwrap();
        assert!(matches!(
            pseudo_distance(&map, &[0.1, 0.2]),
            Err(Error::BasePointNotOnGraph { .. })
        ));
        let map = map.with_base_point_offset().unwrap();
        let p = pseudo_distance(&map, &[0.6, 0.8]).unwrap();
        assert!((p.z - (2.0 * 2f64.sqrt() - 2.0)).abs() < 1e-14);
    }

    /// Frame Hessian against `∂²z - Γ ∂z` from finite differences, moved to the frame.
    #[test]
    fn hessian_matches_covariant_finite_differences() {
        let map = GraphMap::<f64>::parse(2, &["0.2*x1^2 - 0.3*x1*x2 + 0.1*x2^3", "0.25*sin(x1+x2)"])
            .unwrap();
        let x = [0.4, -0.3];
        let p = pseudo_distance(&map, &x).unwrap();
        assert!((p.hess_z.trace() - p.lap_z).abs() < 1e-10);
        let zf = |y: [f64; 2]| pseudo_distance(&map, &y).unwrap().z;
        let h = 1e-4;
        let shift = |i: usize, d: f64| {
            let mut y = x;
            y[i] += d;
            y
        };
        let grad: Vec<f64> = (0..2)
            .map(|i| (zf(shift(i, h)) - zf(shift(i, -h))) / (2.0 * h))
            .collect();
        let gamma = christoffel(&map, &x).unwrap();
        let w = adapted_frames(&map, &x).unwrap().tangent_coeffs;
        let coord = Mat::from_fn(2, 2, |i, j| {
            let mut pp = x;
            pp[i] += h;
            pp[j] += h;
            let mut pm = x;
            pm[i] += h;
            pm[j] -= h;
            let mut mp = x;
            mp[i] -= h;
            mp[j] += h;
            let mut mm = x;
            mm[i] -= h;
            mm[j] -= h;
            let d2 = (zf(pp) - zf(pm) - zf(mp) + zf(mm)) / (4.0 * h * h);
            d2 - (0..2).map(|k| gamma[(k, i, j)] * grad[k]).sum::<f64>()
        });
        let frame = w.transpose().matmul(&coord).matmul(&w);
        assert!(frame.sub(&p.hess_z).max_abs() < 1e-5);
    }
}
