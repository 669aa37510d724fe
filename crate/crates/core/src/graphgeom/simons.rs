use super::intrinsic::christoffel_of;
use super::{point_geometry_of, GraphMap};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::scalar::Scalar;

/// Simons-type slack at one interior lattice node.
#[derive(Debug, Clone, PartialEq)]
pub struct SimonsPoint<T> {
    pub node: usize,
    pub x: Vec<f64>,
    pub s: T,
    /// Laplace-Beltrami of `S` from central differences.
    pub lap_s: T,
    /// `Σ h_sijk²`
    pub grad_h_sq: T,
    pub h_norm: T,
    /// `½ΔS - (Σ h_sijk² - m |H| S^{3/2} + S²/n)`
    pub slack: T,
    /// `|∇^⊥ H|`, zero for parallel mean curvature.
    pub dh_norm: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimonsReport<T> {
    pub points: Vec<SimonsPoint<T>>,
    pub min_slack: T,
    pub max_dh: T,
    /// Active nodes skipped because some stencil node was not space-like.
    pub skipped: usize,
}

pub fn simons_report<T: Scalar>(map: &GraphMap<T>, lattice: &Lattice) -> Result<SimonsReport<T>> {
    let m = map.m();
    if lattice.dim() != m {
        return Err(Error::Lattice(format!(
            "lattice dimension {} differs from graph dimension {m}",
            lattice.dim()
        )));
    }
    if let Some(&c) = lattice.counts().iter().find(|&&c| c < 5) {
        return Err(Error::Lattice(format!(
            "lattice too coarse: {c} points on an axis, at least 5 needed"
        )));
    }
    let n = T::count(map.n());
    let mf = T::count(m);
    let h = T::lit(lattice.spacing());

    let at = |idx: usize| -> Vec<T> { lattice.coords(idx).into_iter().map(T::lit).collect() };
    let s_field: Vec<Option<T>> = (0..lattice.len())
        .map(|i| {
            if !lattice.is_active(i) {
                return None;
            }
            let local = map.local(&at(i)).ok()?;
            let geom = point_geometry_of(&local).ok()?;
            Some(geom.forms.s)
        })
        .collect();

    let mut points = Vec::new();
    let mut skipped = 0;
    for idx in 0..lattice.len() {
        if !lattice.is_interior(idx) {
            continue;
        }
        let s_at = |off: &[isize]| lattice.offset(idx, off).and_then(|j| s_field[j]);
        let unit = |a: usize, d: isize| {
            let mut o = vec![0isize; m];
            o[a] = d;
            o
        };
        let Some(s0) = s_field[idx] else {
            skipped += 1;
            continue;
        };
        let mut grad = vec![T::zero(); m];
        let mut hess = vec![vec![T::zero(); m]; m];
        let mut complete = true;
        for a in 0..m {
            match (s_at(&unit(a, 1)), s_at(&unit(a, -1))) {
                (Some(p), Some(q)) => {
                    grad[a] = (p - q) / (T::lit(2.0) * h);
                    hess[a][a] = (p - T::lit(2.0) * s0 + q) / (h * h);
                }
                _ => complete = false,
            }
            for b in a + 1..m {
                let mut o = vec![0isize; m];
                let mut corner = |da: isize, db: isize| {
                    o[a] = da;
                    o[b] = db;
                    s_at(&o)
                };
                match (corner(1, 1), corner(1, -1), corner(-1, 1), corner(-1, -1)) {
                    (Some(pp), Some(pm), Some(mp), Some(mm)) => {
                        let v = (pp - pm - mp + mm) / (T::lit(4.0) * h * h);
                        hess[a][b] = v;
                        hess[b][a] = v;
                    }
                    _ => complete = false,
                }
            }
        }
        if !complete {
            skipped += 1;
            continue;
        }
        let local = map.local(&at(idx))?;
        let geom = point_geometry_of(&local)?;
        let gi = geom.metric.g_inv.clone().expect("space-like metric is invertible");
        let gamma = christoffel_of(&gi, &local.metric_derivative());
        let mut lap_s = T::zero();
        for i in 0..m {
            for j in 0..m {
                let conn: T = (0..m).map(|k| gamma[(k, i, j)] * grad[k]).sum();
                lap_s += gi[(i, j)] * (hess[i][j] - conn);
            }
        }
        let cov = geom.covariant.expect("jets provide third derivatives");
        let grad_h_sq = {
            let [nn, mm, _, _] = cov.h_cov.shape();
            let mut acc = T::zero();
            for s in 0..nn {
                for i in 0..mm {
                    for j in 0..mm {
                        for k in 0..mm {
                            acc += cov.h_cov[(s, i, j, k)].powi(2);
                        }
                    }
                }
            }
            acc
        };
        let mut dh_sq = T::zero();
        for s in 0..map.n() {
            for k in 0..m {
                let v: T = (0..m).map(|i| cov.h_cov[(s, i, i, k)]).sum::<T>() / mf;
                dh_sq += v * v;
            }
        }
        let s = geom.forms.s;
        let h_norm = geom.forms.h_norm;
        let rhs = grad_h_sq - mf * h_norm * s * s.sqrt() + s * s / n;
        points.push(SimonsPoint {
            node: idx,
            x: lattice.coords(idx),
            s,
            lap_s,
            grad_h_sq,
            h_norm,
            slack: T::lit(0.5) * lap_s - rhs,
            dh_norm: dh_sq.sqrt(),
        });
    }
    let min_slack = points
        .iter()
        .map(|p| p.slack)
        .fold(T::infinity(), |a, b| a.min(b));
    let max_dh = points.iter().map(|p| p.dh_norm).fold(T::zero(), |a, b| a.max(b));
    Ok(SimonsReport {
        points,
        min_slack,
        max_dh,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Region;

    #[test]
    fn affine_slack_is_zero() {
        let map = GraphMap::<f64>::parse(2, &["0.3*x1 + 0.1*x2"]).unwrap();
        let lat = Lattice::new(vec![-1.0, -1.0], vec![1.0, 1.0], 0.25).unwrap();
        let rep = simons_report(&map, &lat).unwrap();
        assert_eq!(rep.points.len(), 49);
        assert!(rep.points.iter().all(|p| p.slack == 0.0));
    }

    #[test]
    fn hyperboloid_slack() {
        let map = GraphMap::<f64>::parse(2, &["sqrt(1+x1^2+x2^2)"]).unwrap();
        let lat = Lattice::new(vec![-1.0, -1.0], vec![1.0, 1.0], 0.125).unwrap();
        let rep = simons_report(&map, &lat).unwrap();
        let want = 2f64.powf(2.5) - 4.0;
        for p in &rep.points {
            assert!((p.slack - want).abs() < 1e-8, "{}", p.slack);
        }
        assert!(rep.max_dh < 1e-10);
    }

    #[test]
    fn catenoid_slack_nonnegative_under_refinement() {
        let map = GraphMap::<f64>::parse(2, &["asinh(sqrt(x1^2+x2^2))"]).unwrap();
        let mut worst = Vec::new();
        for h in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
            let region = Region::Annulus {
                center: vec![0.0, 0.0],
                inner: 0.5,
                outer: 2.0,
            };
            let lat = Lattice::around(region, h).unwrap();
            let rep = simons_report(&map, &lat).unwrap();
            worst.push(rep.min_slack.min(0.0));
        }
        assert!(worst[2] >= -1e-2, "{worst:?}");
        assert!(worst[2].abs() <= worst[0].abs() + 1e-12);
    }

    #[test]
    fn coarse_lattice_is_rejected() {
        let map = GraphMap::<f64>::parse(1, &["x1^2"]).unwrap();
        let lat = Lattice::new(vec![0.0], vec![1.0], 0.5).unwrap();
        assert!(simons_report(&map, &lat).is_err());
    }
}
