//! Seeded example generators and the invariant suites run by `check`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spacelike::bernstein::{completeness_probe, estimate_report, geodesic_radius, ProbeConfig};
use spacelike::graphgeom::{
    covariant_h, curvature, frame_riemann_oracle, frames_of, forms_of, metric_point,
    point_geometry, pseudo_distance, simons_report, GraphMap,
};
use spacelike::grassmann::{distance, pullback_check, pullback_trace, SpacelikePlane};
use spacelike::lagrangian::{
    lagrangian_forms, moduli_curvature, moduli_curvature_oracle, to_standard, Potential,
};
use spacelike::solver::{solve_ma, solve_maximal, MaConfig, MaximalConfig};
use spacelike::{finite_diff_check, parse, Lattice, Mat, Region};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Polynomial graph of degree ≤ 3 with coefficients small enough to be space-like near 0.
pub fn random_cubic(rng: &mut ChaCha8Rng, m: usize, n: usize) -> GraphMap<f64> {
    let comps: Vec<String> = (0..n)
        .map(|_| {
            let mut terms = Vec::new();
            for i in 1..=m {
                terms.push(format!("({:.4})*x{i}", rng.gen_range(-0.3..0.3)));
                for j in i..=m {
                    terms.push(format!("({:.4})*x{i}*x{j}", rng.gen_range(-0.3..0.3)));
                    for k in j..=m {
                        terms.push(format!("({:.4})*x{i}*x{j}*x{k}", rng.gen_range(-0.2..0.2)));
                    }
                }
            }
            terms.join(" + ")
        })
        .collect();
    let refs: Vec<&str> = comps.iter().map(String::as_str).collect();
    GraphMap::<f64>::parse(m, &refs).expect("generated polynomial parses")
}

/// Convex quartic potential in two variables.
pub fn random_quartic(rng: &mut ChaCha8Rng) -> Potential<f64> {
    let a = rng.gen_range(0.3..1.5);
    let b = rng.gen_range(0.3..1.5);
    let c = rng.gen_range(-0.2..0.2);
    let text = format!(
        "{a:.4}*x1^2 + {b:.4}*x2^2 + {c:.4}*x1*x2 + {:.4}*x1^4 + {:.4}*x2^4 + {:.4}*x1^2*x2^2 + {:.4}*x1^3 + {:.4}*x2^3",
        rng.gen_range(0.0..0.5),
        rng.gen_range(0.0..0.5),
        rng.gen_range(0.0..0.5),
        rng.gen_range(-0.3..0.3),
        rng.gen_range(-0.3..0.3),
    );
    Potential::parse(2, &text).expect("generated potential parses")
}

/// Space-like plane with largest singular value drawn from `[0, 0.97)`.
pub fn random_plane(rng: &mut ChaCha8Rng, m: usize, n: usize) -> SpacelikePlane<f64> {
    let vals: Vec<f64> = (0..n * m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let a = Mat::from_fn(n, m, |i, j| vals[i * m + j]);
    let s = a.singular_values()[0];
    let target = rng.gen_range(0.0..0.97);
    SpacelikePlane::new(a.scale(target / s)).expect("scaled below 1")
}

pub fn random_point(rng: &mut ChaCha8Rng, m: usize, r: f64) -> Vec<f64> {
    (0..m).map(|_| rng.gen_range(-r..r)).collect()
}

/// Product of Givens rotations with random angles.
pub fn random_rotation(rng: &mut ChaCha8Rng, k: usize) -> Mat<f64> {
    let mut q = Mat::identity(k);
    for i in 0..k {
        for j in i + 1..k {
            let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let (c, s) = (t.cos(), t.sin());
            let g = Mat::from_fn(k, k, |a, b| {
                if (a == i && b == i) || (a == j && b == j) {
                    c
                } else if a == i && b == j {
                    -s
                } else if a == j && b == i {
                    s
                } else if a == b {
                    1.0
                } else {
                    0.0
                }
            });
            q = q.matmul(&g);
        }
    }
    q
}

/// For one normal direction: `arccosh(|1 - a·b| / sqrt((1 - |a|²)(1 - |b|²)))`.
pub fn hyperbolic_distance(p: &SpacelikePlane<f64>, q: &SpacelikePlane<f64>) -> f64 {
    let (a, b) = (p.slope().to_rows()[0].clone(), q.slope().to_rows()[0].clone());
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    ((dot - 1.0).abs() / ((1.0 - na) * (1.0 - nb)).sqrt()).acosh()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

type Outcome = Result<(f64, f64, String), String>;

fn within(measured: f64, tolerance: f64, detail: impl Into<String>) -> Outcome {
    Ok((measured, tolerance, detail.into()))
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn jets(_: u64) -> Outcome {
    let expr = parse("sin(x1)*exp(x2) + x1^3*x2 - sqrt(2 + x2^2)", 2).map_err(e2s)?;
    let r = finite_diff_check(&expr, &[0.3f64, 0.2], 1e-4).map_err(e2s)?;
    let worst: f64 = (r.order1 / 1e-6).max(r.order2 / 1e-6).max(r.order3 / 1e-4);
    within(worst, 1.0, "finite-difference agreement relative to per-order tolerance")
}

fn gauss_equation(seed: u64) -> Outcome {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 20 {
        let (m, n) = (rng.gen_range(1..=3), rng.gen_range(1..=2));
        let map = random_cubic(&mut rng, m, n);
        let x = random_point(&mut rng, m, 0.5);
        let Ok(oracle) = frame_riemann_oracle(&map, &x) else { continue };
        let gauss = curvature(&map, &x).map_err(e2s)?.riemann;
        worst = worst.max(gauss.max_diff(&oracle) / oracle.max_abs().max(1e-3));
        done += 1;
    }
    within(worst, 1e-6, "frame curvature vs coordinate curvature, 20 cubic graphs")
}

fn codazzi(seed: u64) -> Outcome {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 20 {
        let (m, n) = (rng.gen_range(1..=3), rng.gen_range(1..=2));
        let map = random_cubic(&mut rng, m, n);
        let x = random_point(&mut rng, m, 0.5);
        let Ok(rep) = covariant_h(&map, &x) else { continue };
        worst = worst.max(rep.codazzi_asymmetry);
        done += 1;
    }
    within(worst, 1e-6, "max |h_sijk - h_sikj|, 20 cubic graphs")
}

fn hyperboloid(seed: u64) -> Outcome {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for m in [2usize, 3] {
        let text = format!(
            "sqrt(1 + {})",
            (1..=m).map(|i| format!("x{i}^2")).collect::<Vec<_>>().join(" + ")
        );
        let map = GraphMap::<f64>::parse(m, &[&text]).map_err(e2s)?;
        for _ in 0..5 {
            let x = random_point(&mut rng, m, 1.0);
            let pg = point_geometry(&map, &x).map_err(e2s)?;
            let mf = m as f64;
            worst = worst.max((pg.forms.h_norm - 1.0).abs() / 1e-9);
            worst = worst.max((pg.forms.s - mf).abs() / 1e-9);
            let g = &pg.curvature;
            for i in 0..m {
                for j in 0..m {
                    if i != j {
                        worst = worst.max((g.riemann[(i, j, i, j)] + 1.0).abs() / 1e-8);
                    }
                }
            }
            let cov = pg.covariant.as_ref().ok_or("missing covariant data")?;
            worst = worst.max(cov.h_cov.max_abs() / 1e-8);
            let margin = spacelike::graphgeom::ricci_margin(&pg.forms, &pg.curvature);
            worst = worst.max(-margin / 1e-10);
        }
    }
    within(worst, 1.0, "hyperboloid identities relative to their tolerances")
}

fn catenoid(seed: u64) -> Outcome {
    let mut rng = rng(seed);
    let map = GraphMap::<f64>::parse(2, &["asinh(sqrt(x1^2 + x2^2))"]).map_err(e2s)?;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let r = rng.gen_range(0.5..2.0);
        let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let pg = point_geometry(&map, &[r * t.cos(), r * t.sin()]).map_err(e2s)?;
        worst = worst.max(pg.forms.h_norm);
    }
    within(worst, 1e-9, "mean curvature of the catenoid from jets")
}

fn simons(_: u64) -> Outcome {
    let map = GraphMap::<f64>::parse(2, &["sqrt(1 + x1^2 + x2^2)"]).map_err(e2s)?;
    let lat = Lattice::new(vec![-0.5, -0.5], vec![0.5, 0.5], 0.125).map_err(e2s)?;
    let rep = simons_report(&map, &lat).map_err(e2s)?;
    within(-rep.min_slack, 0.0, "negated minimum Simons slack on the hyperboloid")
}

fn pullback(seed: u64) -> Outcome {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let map = random_cubic(&mut rng, 2, 2);
        let x = random_point(&mut rng, 2, 0.3);
        let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let Ok(rep) = pullback_check(&map, &x, &[t.cos(), t.sin()], 1e-2, 4) else { continue };
        worst = worst.max(rep.rel_error);
        let (trace, s) = pullback_trace(&map, &x, 1e-2, 4).map_err(e2s)?;
        worst = worst.max((trace - s).abs() / (1.0 + s));
    }
    within(worst, 1e-3, "Gauss-map stretch vs second fundamental form")
}

fn grassmann(seed: u64) -> Outcome {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let m = rng.gen_range(1..=3);
        let (p, q) = (random_plane(&mut rng, m, 1), random_plane(&mut rng, m, 1));
        let d = distance(&p, &q).map_err(e2s)?;
        worst = worst.max((d - hyperbolic_distance(&p, &q)).abs() / 1e-8);
        let (rm, rn) = (random_rotation(&mut rng, m), random_rotation(&mut rng, 1));
        let rot = |x: &SpacelikePlane<f64>| {
            SpacelikePlane::new(rn.matmul(x.slope()).matmul(&rm.transpose())).expect("rotated plane")
        };
        let dr = distance(&rot(&p), &rot(&q)).map_err(e2s)?;
        worst = worst.max((dr - d).abs() / (1e-12 * d.max(1.0)));
    }
    for _ in 0..10 {
        let (t1, t2) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let plane = |t: f64| SpacelikePlane::new(Mat::from_fn(2, 2, |i, j| if i == 0 && j == 1 { t.tanh() } else { 0.0 }));
        let d = distance(&plane(t1).map_err(e2s)?, &plane(t2).map_err(e2s)?).map_err(e2s)?;
        worst = worst.max((d - (t1 - t2).abs()).abs() / 1e-9);
    }
    within(worst, 1.0, "distance oracles relative to their tolerances")
}

fn pseudo(_: u64) -> Outcome {
    let line = GraphMap::<f64>::parse(1, &["0.6*x1"]).map_err(e2s)?;
    let a: f64 = pseudo_distance(&line, &[1.0]).map_err(e2s)?.z;
    let a = (a - 0.64).abs();
    let hyp = GraphMap::<f64>::parse(2, &["sqrt(1 + x1^2 + x2^2) - 1"]).map_err(e2s)?;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let p = pseudo_distance(&hyp, &[r, r]).map_err(e2s)?;
    let b = (p.z - (2.0 * 2f64.sqrt() - 2.0)).abs();
    let c = (p.hess_z.trace() - p.lap_z).abs();
    within((a / 1e-12).max(b / 1e-12).max(c / 1e-10), 1.0, "closed-form z values and trace identity")
}

fn lagrangian_cross(seed: u64) -> Outcome {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let p = random_quartic(&mut rng);
        let x = random_point(&mut rng, 2, 0.8);
        let Ok(f) = lagrangian_forms(&p, &x) else { continue };
        let st = to_standard(&p, &x).map_err(e2s)?;
        if !metric_point(&st.local).spacelike {
            return Err("standard graph is not space-like".into());
        }
        let geo = forms_of(&st.local, &frames_of(&st.local).map_err(e2s)?);
        worst = worst.max((geo.s - f.s).abs());
    }
    within(worst, 1e-8, "S from null coordinates vs standard graph")
}

fn moduli(seed: u64) -> Outcome {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let p = random_quartic(&mut rng);
        let x = random_point(&mut rng, 2, 0.8);
        let Ok(c) = moduli_curvature(&p, &x) else { continue };
        let oracle = moduli_curvature_oracle(&p, &x, 1e-3).map_err(e2s)?;
        worst = worst.max(c.riemann.max_diff(&oracle) / oracle.max_abs().max(1e-3) / 1e-6);
    }
    let q = Potential::parse(2, "x1^2 + 0.25*x2^2 + 0.3*x1*x2").map_err(e2s)?;
    let flat = moduli_curvature(&q, &[0.4, -0.7]).map_err(e2s)?;
    if flat.riemann.max_abs() != 0.0 {
        return Err("quadratic potential has nonzero curvature".into());
    }
    within(worst, 1.0, "moduli curvature vs intrinsic oracle relative to 1e-6")
}

fn maximal_affine(_: u64) -> Outcome {
    let lat = Lattice::new(vec![-1.0, -1.0], vec![1.0, 1.0], 0.125).map_err(e2s)?;
    let b = parse("0.4*x1 - 0.3*x2 + 1", 2).map_err(e2s)?;
    let sol = solve_maximal(&lat, &b, &MaximalConfig::default()).map_err(e2s)?;
    let err = sol.field.max_error(|x| 0.4 * x[0] - 0.3 * x[1] + 1.0);
    within(sol.report.residual.max(err), 1e-12, "affine data reproduced by the maximal solver")
}

fn ma_quadratic(_: u64) -> Outcome {
    let lat = Lattice::new(vec![0.0, 0.0], vec![1.0, 1.0], 0.0625).map_err(e2s)?;
    let b = parse("0.5*(2*x1^2 + 0.5*x2^2)", 2).map_err(e2s)?;
    let sol = solve_ma(&lat, &b, 1.0, &MaConfig::default()).map_err(e2s)?;
    let err = sol.field.max_error(|x| x[0] * x[0] + 0.25 * x[1] * x[1]);
    within(err, 1e-10, "quadratic recovered by the Monge-Ampère solver")
}

fn radius_flat(_: u64) -> Outcome {
    let map = GraphMap::<f64>::parse(2, &["0.6*x1"]).map_err(e2s)?;
    let lat = Lattice::new(vec![-1.0, -1.0], vec![1.0, 1.0], 0.0625).map_err(e2s)?;
    let f = geodesic_radius(&map, &lat, &[0.0, 0.0]).map_err(e2s)?;
    let mut worst: f64 = 0.0;
    for i in lat.active_nodes() {
        let x = lat.coords(i);
        let exact = (0.64 * x[0] * x[0] + x[1] * x[1]).sqrt();
        if exact > 0.0 {
            worst = worst.max((f.r[i] - exact).abs() / exact);
        }
    }
    within(worst, 0.08, "relative lattice distance error on a flat graph")
}

fn estimates(_: u64) -> Outcome {
    let affine = GraphMap::<f64>::parse(2, &["0.3*x1 - 0.2*x2"]).map_err(e2s)?;
    let lat = Lattice::new(vec![-1.0, -1.0], vec![1.0, 1.0], 0.125).map_err(e2s)?;
    let rep = estimate_report(&affine, &[0.0, 0.0], 0.8, &lat).map_err(e2s)?;
    let hyp = GraphMap::<f64>::parse(2, &["sqrt(1 + x1^2 + x2^2)"]).map_err(e2s)?;
    let lat = Lattice::new(vec![-1.5, -1.5], vec![1.5, 1.5], 0.125).map_err(e2s)?;
    let h = estimate_report(&hyp, &[0.0, 0.0], 1.0, &lat).map_err(e2s)?;
    if !(h.ratio29.is_finite() && h.ratio28.is_finite()) {
        return Err("hyperboloid ratios are not finite".into());
    }
    within(rep.ratio29.max(rep.ratio28), 0.0, "affine ball ratios")
}

fn completeness(_: u64) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for text in ["0.5*x1", "sqrt(1 + x1^2 + x2^2) - 1"] {
        let map = GraphMap::<f64>::parse(2, &[text]).map_err(e2s)?;
        let dirs = vec![vec![1.0, 0.0], vec![0.6, -0.8]];
        for r in completeness_probe(&map, &dirs, 4.0, &ProbeConfig::default()).map_err(e2s)? {
            if !r.completed {
                return Err(format!("probe stopped early: {}", r.status));
            }
            worst = worst.max(r.b_emp - r.ratio_sup);
        }
    }
    within(worst, 1e-3, "b_emp minus sampled gradient ratio")
}

fn catenoid_annulus_region() -> Region {
    Region::Annulus {
        center: vec![0.0, 0.0],
        inner: 0.5,
        outer: 2.0,
    }
}

fn catenoid_solve(_: u64) -> Outcome {
    let lat = Lattice::around(catenoid_annulus_region(), 0.125).map_err(e2s)?;
    let b = parse("asinh(sqrt(x1^2 + x2^2))", 2).map_err(e2s)?;
    let sol = solve_maximal(&lat, &b, &MaximalConfig::default()).map_err(e2s)?;
    within(sol.report.residual, 1e-10, "catenoid annulus solve residual")
}

type Suite = (&'static str, fn(u64) -> Outcome);

/// Every suite run by `check`, in report order.
pub fn suites() -> Vec<Suite> {
    vec![
        ("jets_finite_difference", jets),
        ("gauss_equation", gauss_equation),
        ("codazzi_symmetry", codazzi),
        ("hyperboloid_battery", hyperboloid),
        ("catenoid_jets", catenoid),
        ("simons_inequality", simons),
        ("gauss_map_pullback", pullback),
        ("grassmann_distance", grassmann),
        ("pseudo_distance", pseudo),
        ("lagrangian_cross_module", lagrangian_cross),
        ("moduli_curvature_oracle", moduli),
        ("maximal_affine", maximal_affine),
        ("maximal_catenoid", catenoid_solve),
        ("monge_ampere_quadratic", ma_quadratic),
        ("geodesic_radius_flat", radius_flat),
        ("ball_estimates", estimates),
        ("completeness_probe", completeness),
    ]
}

pub fn run_suite(index: usize, suite: &Suite, seed: u64) -> SuiteResult {
    let (name, f) = *suite;
    match f(seed.wrapping_add(index as u64)) {
        Ok((measured, tolerance, detail)) => SuiteResult {
            name,
            passed: measured <= tolerance,
            measured,
            tolerance,
            detail,
        },
        Err(e) => SuiteResult {
            name,
            passed: false,
            measured: f64::NAN,
            tolerance: f64::NAN,
            detail: e,
        },
    }
}
