//! Space-like `m`-planes of `R^{m+n}_n` in the slope chart, their geodesic distance and the
//! Gauss map of a graph.

use crate::error::{Error, Result};
use crate::graphgeom::{forms_of, frames_of, GraphMap};
use crate::linalg::Mat;
use crate::scalar::Scalar;

/// The plane spanned by the columns of `[I_m; A]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacelikePlane<T> {
    slope: Mat<T>,
    sigma_max: T,
}

impl<T: Scalar> SpacelikePlane<T> {
    /// `slope` is `n × m`; its largest singular value must be below 1.
    pub fn new(slope: Mat<T>) -> Result<Self> {
        let sigma_max = slope.singular_values().first().copied().unwrap_or(T::zero());
        if !(sigma_max < T::one()) {
            return Err(Error::NotSpacelike {
                point: Vec::new(),
                min_eig: (T::one() - sigma_max * sigma_max).to_f64_lossy(),
            });
        }
        Ok(SpacelikePlane { slope, sigma_max })
    }

    /// The coordinate plane `y = 0`.
    pub fn base(m: usize, n: usize) -> Self {
        SpacelikePlane {
            slope: Mat::zeros(n, m),
            sigma_max: T::zero(),
        }
    }

    pub fn slope(&self) -> &Mat<T> {
        &self.slope
    }

    pub fn sigma_max(&self) -> T {
        self.sigma_max
    }

    pub fn m(&self) -> usize {
        self.slope.cols()
    }

    pub fn n(&self) -> usize {
        self.slope.rows()
    }

    /// Slope of `other` after the boost that carries `self` to the base plane.
    pub fn transport(&self, other: &Self) -> Result<Mat<T>> {
        let a = &self.slope;
        let inv_sqrt = |x: T| T::one() / x.sqrt();
        let c = Mat::identity(self.m()).sub(&a.transpose().matmul(a)).sym_apply(inv_sqrt);
        let d = Mat::identity(self.n()).sub(&a.matmul(&a.transpose())).sym_apply(inv_sqrt);
        let top = c.sub(&a.transpose().matmul(&d).matmul(&other.slope));
        let bottom = d.matmul(&other.slope.sub(a));
        Ok(bottom.matmul(&top.inverse()?))
    }
}

/// Tangent plane of the graph at `x`.
pub fn gauss_map<T: Scalar>(map: &GraphMap<T>, x: &[T]) -> Result<SpacelikePlane<T>> {
    let local = map.local(x)?;
    SpacelikePlane::new(local.jac.clone()).map_err(|_| {
        let g = local.metric_matrix();
        Error::NotSpacelike {
            point: local.point_f64(),
            min_eig: g.min_eigenvalue().to_f64_lossy(),
        }
    })
}

/// Geodesic distance in the pseudo-Grassmannian: `(Σ_k artanh²σ_k)^{1/2}` over the singular values
/// of the transported slope.
pub fn distance<T: Scalar>(p: &SpacelikePlane<T>, q: &SpacelikePlane<T>) -> Result<T> {
    if p.m() != q.m() || p.n() != q.n() {
        return Err(Error::InvalidArgument(format!(
            "planes have shapes {}x{} and {}x{}",
            p.n(),
            p.m(),
            q.n(),
            q.m()
        )));
    }
    let sv = if p.sigma_max == T::zero() {
        q.slope.singular_values()
    } else {
        p.transport(q)?.singular_values()
    };
    let mut acc = T::zero();
    for s in sv {
        if s >= T::one() {
            return Err(Error::Factorization(format!(
                "transported slope has singular value {s}"
            )));
        }
        acc += s.atanh().powi(2);
    }
    Ok(acc.sqrt())
}

/// Finite-difference Gauss-map stretch along a frame direction.
#[derive(Debug, Clone, PartialEq)]
pub struct PullbackReport<T> {
    /// `(Σ_{s,i} (Σ_j h_sij v_j)²)^{1/2}`
    pub predicted: T,
    /// `(ε, d(γ(x), γ(x + ε W v)) / ε)` for each rung of the ladder.
    pub ladder: Vec<(T, T)>,
    /// Richardson extrapolation of the ladder to `ε = 0`.
    pub extrapolated: T,
    /// `|extrapolated - predicted| / max(1, predicted)`
    pub rel_error: T,
}

/// Compares the metric stretch of the Gauss map with the second fundamental form along the
/// unit frame vector `dir`, using the step ladder `eps0, eps0/2, ...` with `levels` rungs.
pub fn pullback_check<T: Scalar>(
    map: &GraphMap<T>,
    x: &[T],
    dir: &[T],
    eps0: T,
    levels: usize,
) -> Result<PullbackReport<T>> {
    let m = map.m();
    if dir.len() != m {
        return Err(Error::InvalidArgument(format!(
            "direction has {} entries, expected {m}",
            dir.len()
        )));
    }
    if levels == 0 || !(eps0 > T::zero()) {
        return Err(Error::InvalidArgument("step ladder needs a positive step and at least one level".into()));
    }
    let local = map.local(x)?;
    let frames = frames_of(&local)?;
    let forms = forms_of(&local, &frames);
    let mut predicted = T::zero();
    for s in 0..map.n() {
        for i in 0..m {
            let v: T = (0..m).map(|j| forms.h[(s, i, j)] * dir[j]).sum();
            predicted += v * v;
        }
    }
    let predicted = predicted.sqrt();
    let w = frames.tangent_coeffs.matvec(dir);
    let base = SpacelikePlane::new(local.jac.clone())?;
    let mut ladder = Vec::with_capacity(levels);
    let mut eps = eps0;
    for _ in 0..levels {
        let y: Vec<T> = x.iter().zip(&w).map(|(&a, &b)| a + eps * b).collect();
        let moved = gauss_map(map, &y)?;
        ladder.push((eps, distance(&base, &moved)? / eps));
        eps = eps / T::lit(2.0);
    }
    // forward differences carry a full power series in ε; eliminate one order per sweep
    let mut table: Vec<T> = ladder.iter().map(|&(_, d)| d).collect();
    let mut factor = T::lit(2.0);
    while table.len() > 1 {
        table = table
            .windows(2)
            .map(|wd| (factor * wd[1] - wd[0]) / (factor - T::one()))
            .collect();
        factor = factor * T::lit(2.0);
    }
    let extrapolated = table[0];
    Ok(PullbackReport {
        predicted,
        ladder,
        extrapolated,
        rel_error: (extrapolated - predicted).abs() / predicted.max(T::one()),
    })
}

/// Sum over the frame vectors of the squared extrapolated stretch, alongside `S`.
pub fn pullback_trace<T: Scalar>(
    map: &GraphMap<T>,
    x: &[T],
    eps0: T,
    levels: usize,
) -> Result<(T, T)> {
    let m = map.m();
    let mut trace = T::zero();
    for k in 0..m {
        let mut e = vec![T::zero(); m];
        e[k] = T::one();
        trace += pullback_check(map, x, &e, eps0, levels)?.extrapolated.powi(2);
    }
    let local = map.local(x)?;
    let s = forms_of(&local, &frames_of(&local)?).s;
    Ok((trace, s))
}

/// Largest Gauss-map distance to `reference` over the samples; a lower bound for the supremum
/// over the region the samples come from.
pub fn max_modulus<T: Scalar>(
    map: &GraphMap<T>,
    samples: &[Vec<T>],
    reference: &SpacelikePlane<T>,
) -> Result<T> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("max_modulus needs at least one sample".into()));
    }
    let mut mu = T::zero();
    for x in samples {
        mu = mu.max(distance(&gauss_map(map, x)?, reference)?);
    }
    Ok(mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_plane(rng: &mut ChaCha8Rng, m: usize, n: usize) -> SpacelikePlane<f64> {
        let vals: Vec<f64> = (0..n * m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = Mat::from_fn(n, m, |i, j| vals[i * m + j]);
        let s = a.singular_values()[0];
        let target = rng.gen_range(0.0..0.97);
        SpacelikePlane::new(a.scale(target / s)).unwrap()
    }

    fn rotation(rng: &mut ChaCha8Rng, k: usize) -> Mat<f64> {
        let mut q = Mat::identity(k);
        for i in 0..k {
            for j in i + 1..k {
                let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let g = Mat::from_fn(k, k, |a, b| match (a, b) {
                    _ if a == i && b == i || a == j && b == j => t.cos(),
                    _ if a == i && b == j => -t.sin(),
                    _ if a == j && b == i => t.sin(),
                    _ if a == b => 1.0,
                    _ => 0.0,
                });
                q = q.matmul(&g);
            }
        }
        q
    }

    #[test]
    fn identity_and_base_example() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let p = random_plane(&mut rng, 2, 2);
            assert!(distance(&p, &p).unwrap() < 1e-12);
        }
        let q = SpacelikePlane::new(Mat::from_rows(&[vec![0.5]])).unwrap();
        let d: f64 = distance(&SpacelikePlane::base(1, 1), &q).unwrap();
        assert!((d - 0.549_306_144_334_054_8).abs() < 1e-15);
        assert!((d - (1.0 / 0.75f64.sqrt()).acosh()).abs() < 1e-14);
        assert!(SpacelikePlane::new(Mat::from_rows(&[vec![1.0]])).is_err());
    }

    /// For one normal direction planes correspond to unit time-like normals in hyperbolic space.
    #[test]
    fn hyperbolic_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let m = rng.gen_range(1..=4);
            let p = random_plane(&mut rng, m, 1);
            let q = random_plane(&mut rng, m, 1);
            let (a, b) = (p.slope().to_rows()[0].clone(), q.slope().to_rows()[0].clone());
            let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
            let na: f64 = a.iter().map(|x| x * x).sum();
            let nb: f64 = b.iter().map(|x| x * x).sum();
            let want = ((dot - 1.0).abs() / ((1.0 - na) * (1.0 - nb)).sqrt()).acosh();
            let got = distance(&p, &q).unwrap();
            assert!((got - want).abs() <= 1e-8, "{got} vs {want}");
        }
    }

    #[test]
    fn boost_family_is_additive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let (m, n) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
            let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let plane = |t: f64| {
                SpacelikePlane::new(Mat::from_fn(n, m, |i, j| t.tanh() * u[i] * v[j] / (nu * nv)))
                    .unwrap()
            };
            let (t1, t2) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let d = distance(&plane(t1), &plane(t2)).unwrap();
            assert!((d - (t1 - t2).abs()).abs() <= 1e-9, "{d} {t1} {t2}");
        }
    }

    #[test]
    fn rotation_invariance_symmetry_and_triangle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let (m, n) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
            let p = random_plane(&mut rng, m, n);
            let q = random_plane(&mut rng, m, n);
            let r = random_plane(&mut rng, m, n);
            let (rm, rn) = (rotation(&mut rng, m), rotation(&mut rng, n));
            let rot = |x: &SpacelikePlane<f64>| {
                SpacelikePlane::new(rn.matmul(x.slope()).matmul(&rm.transpose())).unwrap()
            };
            let d = distance(&p, &q).unwrap();
            assert!((distance(&rot(&p), &rot(&q)).unwrap() - d).abs() <= 1e-12 * d.max(1.0));
            assert!((distance(&q, &p).unwrap() - d).abs() <= 1e-9);
            let (dpr, drq) = (distance(&p, &r).unwrap(), distance(&r, &q).unwrap());
            assert!(d <= dpr + drq + 1e-9);
        }
    }

    /// Slope-chart metric `tr((I - AᵀA)⁻¹ dAᵀ (I - AAᵀ)⁻¹ dA)`.
    fn chart_speed(a: &Mat<f64>, da: &Mat<f64>) -> f64 {
        let (m, n) = (a.cols(), a.rows());
        let g1 = Mat::identity(m).sub(&a.transpose().matmul(a)).inverse().unwrap();
        let g2 = Mat::identity(n).sub(&a.matmul(&a.transpose())).inverse().unwrap();
        g1.matmul(&da.transpose()).matmul(&g2).matmul(da).trace().sqrt()
    }

    fn curve_length(curve: &dyn Fn(f64) -> Mat<f64>, steps: usize) -> f64 {
        // Simpson's rule on the speed, derivative by central differences
        let dt = 1.0 / steps as f64;
        let speed = |t: f64| {
            let e = 1e-6;
            let da = curve(t + e).sub(&curve(t - e)).scale(0.5 / e);
            chart_speed(&curve(t), &da)
        };
        let mut acc = speed(0.0) + speed(1.0);
        for k in 1..steps {
            acc += speed(k as f64 * dt) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * dt / 3.0
    }

    /// The boosted image of the straight tanh curve realizes the distance in the chart metric and
    /// is locally length-minimizing.
    #[test]
    fn geodesic_length_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..6 {
            let (m, n) = (rng.gen_range(1..=2), rng.gen_range(1..=2));
            let p = random_plane(&mut rng, m, n);
            let q = random_plane(&mut rng, m, n);
            let mt = p.transport(&q).unwrap();
            // M = U Σ Vᵀ from the eigen-decomposition of MᵀM
            let (evals, vecs) = mt.transpose().matmul(&mt).sym_eigen();
            let a = p.slope().clone();
            let inv_sqrt = |x: f64| 1.0 / x.sqrt();
            let c = Mat::identity(m).sub(&a.transpose().matmul(&a)).sym_apply(inv_sqrt);
            let d = Mat::identity(n).sub(&a.matmul(&a.transpose())).sym_apply(inv_sqrt);
            let geo = |t: f64| -> Mat<f64> {
                // A(t) = M V f(Σ) Vᵀ with f(σ) = tanh(t artanh σ) / σ
                let scale = Mat::from_fn(m, m, |i, j| {
                    if i != j {
                        return 0.0;
                    }
                    let s = evals[i].max(0.0).sqrt();
                    if s < 1e-14 { t } else { (t * s.atanh()).tanh() / s }
                });
                let at = mt.matmul(&vecs).matmul(&scale).matmul(&vecs.transpose());
                let top = c.add(&a.transpose().matmul(&d).matmul(&at));
                let bottom = a.matmul(&c).add(&d.matmul(&at));
                bottom.matmul(&top.inverse().unwrap())
            };
            assert!(geo(0.0).sub(&a).max_abs() < 1e-12);
            assert!(geo(1.0).sub(q.slope()).max_abs() < 1e-10);
            let dist = distance(&p, &q).unwrap();
            let len = curve_length(&geo, 200);
            assert!((len - dist).abs() < 1e-6 * dist.max(1.0), "{len} vs {dist}");
            let vals: Vec<f64> = (0..n * m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let bump = Mat::from_fn(n, m, |i, j| 0.05 * vals[i * m + j]);
            let perturbed = |t: f64| geo(t).add(&bump.scale((std::f64::consts::PI * t).sin()));
            assert!(curve_length(&perturbed, 200) > len);
        }
    }

    #[test]
    fn gauss_map_examples() {
        let map = GraphMap::<f64>::parse(2, &["0.3*x1 - 0.2*x2", "0.1*x1 + 0.5*x2"]).unwrap();
        let a = gauss_map(&map, &[0.0, 0.0]).unwrap();
        let b = gauss_map(&map, &[3.0, -7.0]).unwrap();
        assert_eq!(a, b);
        let hyp = GraphMap::<f64>::parse(2, &["sqrt(1+x1^2+x2^2)"]).unwrap();
        let x = [0.6, -1.1];
        let r = (1.0f64 + 0.36 + 1.21).sqrt();
        let g = gauss_map(&hyp, &x).unwrap();
        assert!((g.slope()[(0, 0)] - 0.6 / r).abs() < 1e-15);
        assert!((g.slope()[(0, 1)] + 1.1 / r).abs() < 1e-15);
        let steep = GraphMap::<f64>::parse(1, &["x1^2"]).unwrap();
        assert!(gauss_map(&steep, &[0.4]).is_ok());
        assert!(gauss_map(&steep, &[0.6]).is_err());
    }

    #[test]
    fn pullback_examples() {
        let flat = GraphMap::<f64>::parse(2, &["0.3*x1 + 0.4*x2"]).unwrap();
        let rep = pullback_check(&flat, &[0.2, 0.1], &[0.6, 0.8], 1e-2, 3).unwrap();
        assert!(rep.predicted == 0.0 && rep.extrapolated.abs() < 1e-12);
        let hyp = GraphMap::<f64>::parse(2, &["sqrt(1+x1^2+x2^2)"]).unwrap();
        let rep = pullback_check(&hyp, &[0.0, 0.0], &[0.6, 0.8], 1e-2, 4).unwrap();
        assert!((rep.predicted - 1.0).abs() < 1e-14);
        assert!(rep.rel_error < 1e-6, "{rep:?}");
        // the raw forward difference converges linearly
        let errs: Vec<f64> = rep.ladder.iter().map(|&(_, d)| (d - 1.0).abs()).collect();
        assert!(errs[3] < errs[0]);
    }

    #[test]
    fn pullback_on_random_cubics() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let comps: Vec<String> = (0..2)
                .map(|_| {
                    format!(
                        "{:.3}*x1 + {:.3}*x2 + {:.3}*x1^2 + {:.3}*x1*x2^2 + {:.3}*x2^3",
                        rng.gen_range(-0.3..0.3),
                        rng.gen_range(-0.3..0.3),
                        rng.gen_range(-0.3..0.3),
                        rng.gen_range(-0.3..0.3),
                        rng.gen_range(-0.3..0.3)
                    )
                })
                .collect();
            let map = GraphMap::<f64>::parse(2, &[&comps[0], &comps[1]]).unwrap();
            let x = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
            let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let rep = pullback_check(&map, &x, &[t.cos(), t.sin()], 1e-2, 4).unwrap();
            assert!(rep.rel_error <= 1e-3, "{rep:?}");
            let (trace, s) = pullback_trace(&map, &x, 1e-2, 4).unwrap();
            assert!((trace - s).abs() <= 1e-3 * (1.0 + s));
        }
    }

    #[test]
    fn max_modulus_examples() {
        let flat = GraphMap::<f64>::parse(2, &["0.3*x1 + 0.4*x2"]).unwrap();
        let own = gauss_map(&flat, &[0.0, 0.0]).unwrap();
        let samples = vec![vec![1.0, 2.0], vec![-3.0, 0.5]];
        assert!(max_modulus(&flat, &samples, &own).unwrap() < 1e-14);
        assert!(max_modulus(&flat, &[], &own).is_err());

        let hyp = GraphMap::<f64>::parse(2, &["sqrt(1+x1^2+x2^2)"]).unwrap();
        let reference = gauss_map(&hyp, &[0.0, 0.0]).unwrap();
        let sphere = |a: f64| -> Vec<Vec<f64>> {
            (0..16)
                .map(|k| {
                    let t = k as f64 * std::f64::consts::TAU / 16.0;
                    vec![a.sinh() * t.cos(), a.sinh() * t.sin()]
                })
                .collect()
        };
        for a in [0.5, 1.0, 2.0] {
            let mu = max_modulus(&hyp, &sphere(a), &reference).unwrap();
            assert!((mu - a).abs() < 1e-3);
        }
        let mut nested = sphere(0.5);
        let small = max_modulus(&hyp, &nested, &reference).unwrap();
        nested.extend(sphere(1.0));
        assert!(max_modulus(&hyp, &nested, &reference).unwrap() >= small);
    }
}
