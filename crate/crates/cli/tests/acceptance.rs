//! Acceptance suite: one pass/fail line per criterion, nonzero exit if any fails.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, TAU};
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use spacelike::bernstein::{completeness_probe, decay_scan, DecayConfig, ProbeConfig, SlopeFit};
use spacelike::graphgeom::{
    covariant_h, curvature, forms_of, frame_riemann_oracle, frames_of, metric_point, point_geometry,
    pseudo_distance, ricci_margin, simons_report, GraphMap,
};
use spacelike::grassmann::{distance, pullback_check, pullback_trace, SpacelikePlane};
use spacelike::lagrangian::{lagrangian_forms, moduli_curvature, moduli_curvature_oracle, to_standard, Potential};
use spacelike::solver::{grid_moduli_curvature, solve_ma, solve_maximal, MaConfig, MaximalConfig};
use spacelike::{parse, Lattice, Mat, Region};
use spacelike_cli::battery::{
    hyperbolic_distance, random_cubic, random_plane, random_point, random_quartic, random_rotation, rng,
};

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Fifty space-like points on random cubic graphs with `m <= 3`, `n <= 2`.
fn graph_battery(seed: u64) -> Vec<(GraphMap<f64>, Vec<f64>)> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    while out.len() < 50 {
        let (m, n) = (r.gen_range(1..=3), r.gen_range(1..=2));
        let map = random_cubic(&mut r, m, n);
        let x = random_point(&mut r, m, 0.5);
        if metric_point(&map.local(&x).expect("polynomial jets")).spacelike {
            out.push((map, x));
        }
    }
    out
}

fn quartic_battery(seed: u64) -> Vec<(Potential<f64>, Vec<f64>)> {
    let mut r = rng(seed);
    (0..20)
        .map(|_| {
            let p = random_quartic(&mut r);
            let x = random_point(&mut r, 2, 0.8);
            (p, x)
        })
        .collect()
}

fn gauss_equation() -> Verdict {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for (map, x) in graph_battery(101) {
        let oracle = frame_riemann_oracle(&map, &x).map_err(e2s)?;
        let frame = curvature(&map, &x).map_err(e2s)?.riemann;
        worst = worst.max(frame.max_diff(&oracle) / oracle.max_abs().max(1e-3));
    }
    let secs = t.elapsed().as_secs_f64();
    check(worst <= 1e-6 && secs < 10.0, format!("max relative diff {worst:.2e}, {secs:.2} s"))
}

fn hyperboloid() -> Verdict {
    let mut r = rng(102);
    let (mut dh, mut ds, mut dk, mut dcov) = (0f64, 0f64, 0f64, 0f64);
    let mut margin = f64::INFINITY;
    let mut slack = f64::INFINITY;
    for m in [2usize, 3] {
        let text = format!("sqrt(1 + {})", (1..=m).map(|i| format!("x{i}^2")).collect::<Vec<_>>().join(" + "));
        let map = GraphMap::<f64>::parse(m, &[&text]).map_err(e2s)?;
        for _ in 0..10 {
            let x = random_point(&mut r, m, 1.0);
            let pg = point_geometry(&map, &x).map_err(e2s)?;
            dh = dh.max((pg.forms.h_norm - 1.0).abs());
            ds = ds.max((pg.forms.s - m as f64).abs());
            for i in 0..m {
                for j in 0..m {
                    if i != j {
                        dk = dk.max((pg.curvature.riemann[(i, j, i, j)] + 1.0).abs());
                    }
                }
            }
            dcov = dcov.max(pg.covariant.as_ref().ok_or("no covariant data")?.h_cov.max_abs());
            margin = margin.min(ricci_margin(&pg.forms, &pg.curvature));
        }
        let lat = Lattice::new(vec![-0.5; m], vec![0.5; m], 0.25).map_err(e2s)?;
        slack = slack.min(simons_report(&map, &lat).map_err(e2s)?.min_slack);
    }
    check(
        dh <= 1e-9 && ds <= 1e-9 && dk <= 1e-8 && dcov <= 1e-8 && slack >= 0.0 && margin >= -1e-10,
        format!("|H|-1 {dh:.1e}, S-m {ds:.1e}, K+1 {dk:.1e}, h_sijk {dcov:.1e}, Simons slack {slack:.3}, Ricci margin {margin:.1e}"),
    )
}

fn catenoid() -> Verdict {
    let text = "asinh(sqrt(x1^2 + x2^2))";
    let map = GraphMap::<f64>::parse(2, &[text]).map_err(e2s)?;
    let mut r = rng(103);
    let mut hmax: f64 = 0.0;
    for _ in 0..50 {
        let rad = r.gen_range(0.5..2.0);
        let t: f64 = r.gen_range(0.0..TAU);
        hmax = hmax.max(point_geometry(&map, &[rad * t.cos(), rad * t.sin()]).map_err(e2s)?.forms.h_norm);
    }
    let b = parse(text, 2).map_err(e2s)?;
    let region = Region::Annulus { center: vec![0.0, 0.0], inner: 0.5, outer: 2.0 };
    let mut errs = Vec::new();
    for h in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
        let lat = Lattice::around(region.clone(), h).map_err(e2s)?;
        let sol = solve_maximal(&lat, &b, &MaximalConfig::default()).map_err(e2s)?;
        errs.push(sol.field.max_error(|x| (x[0] * x[0] + x[1] * x[1]).sqrt().asinh()));
    }
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let shown: Vec<String> = errs.iter().map(|e| format!("{e:.2e}")).collect();
    check(
        hmax <= 1e-9 && orders.iter().all(|p| (p - 2.0).abs() <= 0.3),
        format!("max |H| {hmax:.1e}, errors {shown:?}, orders {orders:.3?}"),
    )
}

fn codazzi() -> Verdict {
    let mut worst: f64 = 0.0;
    for (map, x) in graph_battery(101) {
        worst = worst.max(covariant_h(&map, &x).map_err(e2s)?.codazzi_asymmetry);
    }
    check(worst <= 1e-6, format!("max asymmetry {worst:.2e}"))
}

fn pullback() -> Verdict {
    let mut r = rng(105);
    let (mut stretch, mut trace): (f64, f64) = (0.0, 0.0);
    for (map, x) in graph_battery(101) {
        let m = x.len();
        let v: Vec<f64> = (0..m).map(|_| r.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-3);
        let v: Vec<f64> = v.iter().map(|a| a / norm).collect();
        stretch = stretch.max(pullback_check(&map, &x, &v, 1e-2, 4).map_err(e2s)?.rel_error);
        let (tr, s) = pullback_trace(&map, &x, 1e-2, 4).map_err(e2s)?;
        trace = trace.max((tr - s).abs() / (1.0 + s));
    }
    check(stretch <= 1e-3 && trace <= 1e-3, format!("stretch error {stretch:.2e}, trace error {trace:.2e}"))
}

fn grassmann() -> Verdict {
    let mut r = rng(106);
    let (mut oracle, mut invariance): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let m = r.gen_range(1..=3);
        let (p, q) = (random_plane(&mut r, m, 1), random_plane(&mut r, m, 1));
        let d = distance(&p, &q).map_err(e2s)?;
        oracle = oracle.max((d - hyperbolic_distance(&p, &q)).abs());
        let (rm, rn) = (random_rotation(&mut r, m), random_rotation(&mut r, 1));
        let rot = |x: &SpacelikePlane<f64>| SpacelikePlane::new(rn.matmul(x.slope()).matmul(&rm.transpose()));
        let dr = distance(&rot(&p).map_err(e2s)?, &rot(&q).map_err(e2s)?).map_err(e2s)?;
        invariance = invariance.max((dr - d).abs());
    }
    let mut boost: f64 = 0.0;
    let plane = |t: f64| SpacelikePlane::new(Mat::from_fn(2, 2, |i, j| if i == 0 && j == 1 { t.tanh() } else { 0.0 }));
    for _ in 0..50 {
        let (t1, t2) = (r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0));
        let d = distance(&plane(t1).map_err(e2s)?, &plane(t2).map_err(e2s)?).map_err(e2s)?;
        boost = boost.max((d - (t1 - t2).abs()).abs());
    }
    check(
        oracle <= 1e-8 && boost <= 1e-9 && invariance <= 1e-12,
        format!("arccosh oracle {oracle:.1e}, boost additivity {boost:.1e}, rotation invariance {invariance:.1e}"),
    )
}

fn lagrangian_cross() -> Verdict {
    let mut worst: f64 = 0.0;
    for (p, x) in quartic_battery(107) {
        let f = lagrangian_forms(&p, &x).map_err(e2s)?;
        let st = to_standard(&p, &x).map_err(e2s)?;
        let geo = forms_of(&st.local, &frames_of(&st.local).map_err(e2s)?);
        worst = worst.max((geo.s - f.s).abs());
    }
    check(worst <= 1e-8, format!("max |S diff| {worst:.2e} over 20 quartics"))
}

fn moduli() -> Verdict {
    let mut worst: f64 = 0.0;
    for (p, x) in quartic_battery(107) {
        let c = moduli_curvature(&p, &x).map_err(e2s)?;
        let oracle = moduli_curvature_oracle(&p, &x, 1e-3).map_err(e2s)?;
        worst = worst.max(c.riemann.max_diff(&oracle) / oracle.max_abs().max(1e-3));
    }
    let mut flat: f64 = 0.0;
    let mut r = rng(108);
    for text in ["x1^2 + 0.25*x2^2 + 0.3*x1*x2", "0.5*(x1^2 + x2^2)", "2*x1^2 + x2^2 - x1 + 3"] {
        let q = Potential::parse(2, text).map_err(e2s)?;
        let x = random_point(&mut r, 2, 1.0);
        flat = flat.max(moduli_curvature(&q, &x).map_err(e2s)?.riemann.max_abs());
    }
    check(worst <= 1e-6 && flat == 0.0, format!("max relative diff {worst:.2e}, quadratic curvature {flat:e}"))
}

fn monge_ampere() -> Verdict {
    let square = |h: f64| Lattice::new(vec![0.0, 0.0], vec![1.0, 1.0], h);
    let b = parse("0.5*(2*x1^2 + 0.5*x2^2) + 0.3*x1*x2", 2).map_err(e2s)?;
    let c = 2.0 * 0.5 - 0.09;
    let sol = solve_ma(&square(1.0 / 16.0).map_err(e2s)?, &b, c, &MaConfig::default()).map_err(e2s)?;
    let err = sol.field.max_error(|x| x[0] * x[0] + 0.25 * x[1] * x[1] + 0.3 * x[0] * x[1]);
    let b = parse("0.5*(x1^2 + x2^2) + 0.1*sin(2*x1 + x2)", 2).map_err(e2s)?;
    let sol = solve_ma(&square(1.0 / 32.0).map_err(e2s)?, &b, 1.0, &MaConfig::default()).map_err(e2s)?;
    let min_eig = (0..sol.field.values.len())
        .filter_map(|i| grid_moduli_curvature(&sol.field, i))
        .map(|mc| mc.min_ricci_eig)
        .fold(f64::INFINITY, f64::min);
    check(
        err <= 1e-10 && min_eig >= -1e-4,
        format!("quadratic error {err:.1e}, perturbed min Ricci eigenvalue {min_eig:.3e}"),
    )
}

fn decay() -> Verdict {
    let t = Instant::now();
    let b = parse("0.3*x1 + 0.1*sin(x2)", 2).map_err(e2s)?;
    let cfg = DecayConfig::new(vec![0.0, FRAC_PI_2], 0.25);
    let table = decay_scan(&b, &[4.0, 8.0, 16.0, 32.0], &cfg).map_err(e2s)?;
    let secs = t.elapsed().as_secs_f64();
    let s: Vec<String> = table
        .rows
        .iter()
        .map(|r| r.s_center.map_or("nan".into(), |v| format!("{v:.2e}")))
        .collect();
    match table.fit {
        SlopeFit::Fitted { slope, .. } => check(
            (-2.6..=-1.4).contains(&slope) && secs < 300.0,
            format!("slope {slope:.3} (target [-2.6, -1.4]), S(center) {s:?}, {secs:.1} s"),
        ),
        other => Err(format!("no fitted slope: {other:?}, S(center) {s:?}")),
    }
}

fn gradient_estimate() -> Verdict {
    let mut gap = f64::NEG_INFINITY;
    for text in ["0.5*x1 - 0.3*x2", "sqrt(1 + x1^2 + x2^2) - 1"] {
        let map = GraphMap::<f64>::parse(2, &[text]).map_err(e2s)?;
        let dirs = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, -0.8]];
        for rep in completeness_probe(&map, &dirs, 4.0, &ProbeConfig::default()).map_err(e2s)? {
            if !rep.completed {
                return Err(format!("probe along {:?} stopped: {}", rep.direction, rep.status));
            }
            gap = gap.max(rep.b_emp - rep.ratio_sup);
        }
    }
    let line = GraphMap::<f64>::parse(1, &["0.6*x1"]).map_err(e2s)?;
    let a = (pseudo_distance(&line, &[1.0]).map_err(e2s)?.z - 0.64).abs();
    let hyp = GraphMap::<f64>::parse(2, &["sqrt(1 + x1^2 + x2^2) - 1"]).map_err(e2s)?;
    let p = pseudo_distance(&hyp, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).map_err(e2s)?;
    let b = (p.z - (2.0 * 2f64.sqrt() - 2.0)).abs();
    let mut trace: f64 = 0.0;
    let mut r = rng(111);
    for (map, x) in graph_battery(101).into_iter().take(20) {
        if let Ok(pd) = pseudo_distance(&map, &x) {
            trace = trace.max((pd.hess_z.trace() - pd.lap_z).abs());
        }
    }
    let x = random_point(&mut r, 2, 1.0);
    let pd = pseudo_distance(&hyp, &x).map_err(e2s)?;
    trace = trace.max((pd.hess_z.trace() - pd.lap_z).abs());
    check(
        gap <= 1e-3 && trace <= 1e-10 && a <= 1e-12 && b <= 1e-12,
        format!("max b_emp - ratio_sup {gap:.3}, trace identity {trace:.1e}, z errors {a:.1e} / {b:.1e}"),
    )
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_spacelike"))
        .args(args)
        .output()
        .map_err(e2s)?;
    if !out.status.success() {
        return Err(format!("{args:?} exited with {}", out.status));
    }
    Ok(out.stdout)
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().map_err(e2s)?;
    let cfg = dir.path().join("job.toml");
    std::fs::write(
        &cfg,
        "m = 2\ncomponents = [\"0.3*x1^3 - 0.2*x1*x2 + 0.1*x2^2\"]\n[lattice]\nlo = [-0.5, -0.5]\nhi = [0.5, 0.5]\nh = 0.0625\n",
    )
    .map_err(e2s)?;
    let cfg = cfg.to_str().ok_or("non-utf-8 temp path")?;
    let mut sizes = Vec::new();
    for args in [
        vec!["check"],
        vec!["analyze", "--config", cfg],
        vec!["analyze", "--config", cfg, "--format", "json", "--threads", "3"],
    ] {
        let first = run_cli(&args)?;
        let second = run_cli(&args)?;
        if first != second {
            return Err(format!("{args:?} produced different bytes"));
        }
        sizes.push(first.len());
    }
    let single = run_cli(&["analyze", "--config", cfg, "--threads", "1"])?;
    let many = run_cli(&["analyze", "--config", cfg, "--threads", "4"])?;
    check(single == many, format!("byte-identical reruns ({sizes:?} bytes), thread count independent"))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("Gauss equation oracle", gauss_equation),
        ("hyperboloid battery", hyperboloid),
        ("catenoid battery", catenoid),
        ("Codazzi symmetry", codazzi),
        ("Gauss-map pullback", pullback),
        ("Grassmannian distance", grassmann),
        ("Lagrangian cross-module", lagrangian_cross),
        ("moduli curvature oracle", moduli),
        ("Monge-Ampère rigidity", monge_ampere),
        ("Bernstein decay", decay),
        ("gradient estimate", gradient_estimate),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let verdict = f();
        let secs = t.elapsed().as_secs_f64();
        match verdict {
            Ok(d) => println!("criterion {:2}: PASS  {name}: {d} [{secs:.1} s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:2}: FAIL  {name}: {d} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
