//! Estimate checkers and rigidity experiments: lattice geodesic distance, second fundamental
//! form ratios on geodesic balls, the decay of `S` at the center of growing maximal graphs, and
//! geodesic probes of the pseudo-distance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::graphgeom::{
    christoffel, forms_of, frames_of, induced_metric, point_geometry, pseudo_distance, GraphMap,
};
use crate::grassmann::{distance, gauss_map};
use crate::lattice::{Lattice, Region};
use crate::linalg::Mat;
use crate::solver::{grid_local, solve_maximal, MaximalConfig};

/// Offset reach used by [`geodesic_radius`].
pub const DEFAULT_REACH: usize = 2;

/// Intrinsic distance from a source point, sampled at lattice nodes (`NaN` at inactive nodes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusField {
    pub lattice: Lattice,
    pub source: Vec<f64>,
    pub r: Vec<f64>,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Nonzero offsets in `{-reach..reach}^m` whose entries have no common divisor.
pub fn primitive_offsets(m: usize, reach: usize) -> Vec<Vec<isize>> {
    let k = reach as isize;
    let side = 2 * reach + 1;
    let mut out = Vec::new();
    for code in 0..side.pow(m as u32) {
        let mut c = code;
        let mut o = vec![0isize; m];
        for a in (0..m).rev() {
            o[a] = (c % side) as isize - k;
            c /= side;
        }
        let g = o.iter().fold(0, |g, v| gcd(g, v.unsigned_abs()));
        if g == 1 {
            out.push(o);
        }
    }
    out
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn metric_at(map: &GraphMap<f64>, x: &[f64]) -> Result<Mat<f64>> {
    let mp = induced_metric(map, x)?;
    if !mp.spacelike {
        return Err(Error::NotSpacelike {
            point: x.to_vec(),
            min_eig: mp.min_eig,
        });
    }
    Ok(mp.g)
}

fn edge_length(g: &Mat<f64>, d: &[f64]) -> f64 {
    let gd = g.matvec(d);
    d.iter().zip(&gd).map(|(a, b)| a * b).sum::<f64>().sqrt()
}

/// Shortest-path distance from `x0` over the lattice graph with [`DEFAULT_REACH`].
pub fn geodesic_radius(map: &GraphMap<f64>, lattice: &Lattice, x0: &[f64]) -> Result<RadiusField> {
    geodesic_radius_with(map, lattice, x0, DEFAULT_REACH)
}

/// Shortest-path distance from `x0` over the graph joining active nodes by the primitive offsets
/// of the given reach (`reach = 1` is the `3^m - 1` neighbour stencil). Each edge is measured with
/// the induced metric at its midpoint.
pub fn geodesic_radius_with(
    map: &GraphMap<f64>,
    lattice: &Lattice,
    x0: &[f64],
    reach: usize,
) -> Result<RadiusField> {
    let m = lattice.dim();
    if map.m() != m || x0.len() != m {
        return Err(Error::Dimension {
            dim: m,
            reason: "map, lattice and source must share the dimension".into(),
        });
    }
    if reach == 0 {
        return Err(Error::InvalidArgument("stencil reach must be positive".into()));
    }
    let h = lattice.spacing();
    let offsets = primitive_offsets(m, reach);
    // midpoints live on the lattice of half spacing
    let half = Lattice::new(lattice.lo().to_vec(), lattice.hi().to_vec(), h / 2.0)?;
    let mut cache: Vec<Option<Mat<f64>>> = vec![None; half.len()];
    let mut mid_metric = |node: usize, off: &[isize]| -> Result<Mat<f64>> {
        let mi = lattice.multi_index(node);
        let k: Vec<usize> = (0..m).map(|a| (2 * mi[a] as isize + off[a]) as usize).collect();
        let j = half.flat_index(&k);
        if cache[j].is_none() {
            cache[j] = Some(metric_at(map, &half.coords(j))?);
        }
        Ok(cache[j].clone().expect("cached"))
    };

    let counts = lattice.counts();
    let near: Vec<usize> = (0..m)
        .map(|a| {
            let t = ((x0[a] - lattice.lo()[a]) / h).round();
            t.clamp(0.0, (counts[a] - 1) as f64) as usize
        })
        .collect();
    let n0 = lattice.flat_index(&near);
    if !lattice.is_active(n0) {
        return Err(Error::Lattice("source point is not next to an active node".into()));
    }
    let mut r = vec![f64::INFINITY; lattice.len()];
    let mut heap = BinaryHeap::new();
    let zero = vec![0isize; m];
    for off in std::iter::once(&zero).chain(offsets.iter()) {
        let Some(j) = lattice.active_offset(n0, off) else { continue };
        let xj = lattice.coords(j);
        let d: Vec<f64> = (0..m).map(|a| xj[a] - x0[a]).collect();
        let mid: Vec<f64> = (0..m).map(|a| 0.5 * (xj[a] + x0[a])).collect();
        let dist = edge_length(&metric_at(map, &mid)?, &d);
        if dist < r[j] {
            r[j] = dist;
            heap.push(Entry(dist, j));
        }
    }
    while let Some(Entry(dist, i)) = heap.pop() {
        if dist > r[i] {
            continue;
        }
        for off in &offsets {
            let Some(j) = lattice.active_offset(i, off) else { continue };
            let d: Vec<f64> = off.iter().map(|&o| o as f64 * h).collect();
            let cand = dist + edge_length(&mid_metric(i, off)?, &d);
            if cand < r[j] {
                r[j] = cand;
                heap.push(Entry(cand, j));
            }
        }
    }
    for (i, v) in r.iter_mut().enumerate() {
        if !lattice.is_active(i) {
            *v = f64::NAN;
        } else if v.is_infinite() {
            return Err(Error::Lattice(format!(
                "disconnected lattice: node {i} is unreachable from the source"
            )));
        }
    }
    Ok(RadiusField {
        lattice: lattice.clone(),
        source: x0.to_vec(),
        r,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSample {
    pub x: Vec<f64>,
    pub r: f64,
    pub s: f64,
    pub h_norm: f64,
    /// Gauss-map distance to the plane at the center.
    pub mu_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallReport {
    pub center: Vec<f64>,
    pub radius: f64,
    pub samples: Vec<BallSample>,
    /// Largest sampled mean curvature norm.
    pub h_bar: f64,
    /// Largest sampled Gauss-map distance.
    pub mu: f64,
    pub ratio29: f64,
    pub ratio28: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Samples the geodesic ball `r <= a` around `x0` and forms the two curvature-estimate ratios.
pub fn estimate_report(
    map: &GraphMap<f64>,
    x0: &[f64],
    a: f64,
    lattice: &Lattice,
) -> Result<BallReport> {
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!("ball radius must be positive, got {a}")));
    }
    let field = geodesic_radius(map, lattice, x0)?;
    let reference = gauss_map(map, x0)?;
    let mut samples = Vec::new();
    for i in lattice.active_nodes() {
        let r = field.r[i];
        if r > a {
            continue;
        }
        if !lattice.is_interior(i) {
            return Err(Error::Lattice(format!(
                "geodesic ball of radius {a} exceeds the lattice"
            )));
        }
        let x = lattice.coords(i);
        let pg = point_geometry(map, &x)?;
        let mu_distance = distance(&gauss_map(map, &x)?, &reference)?;
        samples.push(BallSample {
            x,
            r,
            s: pg.forms.s,
            h_norm: pg.forms.h_norm,
            mu_distance,
        });
    }
    let (m, n) = (map.m() as f64, map.n() as f64);
    let h_bar = samples.iter().fold(0.0, |acc: f64, s| acc.max(s.h_norm));
    let mu = samples.iter().fold(0.0, |acc: f64, s| acc.max(s.mu_distance));
    let den29 = m * m * n * n * h_bar * h_bar * a.powi(4)
        + m * n * (m - 1.0) * h_bar * a.powi(3)
        + 2.0 * n * (m + 4.0) * a * a;
    let q = 2.0 + mu * mu / n;
    let den28 = (8.0 * mu * a + m * a * a * h_bar).powi(2) * mu.powi(4) / (q * q)
        + (2.0 * (m + 4.0) * a * a + m * (m - 1.0) * h_bar * a.powi(3)) * mu * mu / q;
    let mut ratio29: f64 = 0.0;
    let mut ratio28: f64 = 0.0;
    for s in &samples {
        let num = s.s * (a * a - s.r * s.r).powi(2);
        ratio29 = ratio29.max(ratio(num, den29));
        ratio28 = ratio28.max(ratio(num, den28));
    }
    Ok(BallReport {
        center: x0.to_vec(),
        radius: a,
        samples,
        h_bar,
        mu,
        ratio29,
        ratio28,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayConfig {
    /// Ball center; the same for every radius.
    pub center: Vec<f64>,
    /// Lattice spacing, the same for every radius.
    pub h: f64,
    pub solver: MaximalConfig,
    /// `S(center)` at or below this counts as zero.
    pub zero_tol: f64,
    /// Run the per-radius solves on separate threads.
    pub parallel: bool,
}

impl DecayConfig {
    pub fn new(center: Vec<f64>, h: f64) -> Self {
        DecayConfig {
            center,
            h,
            solver: MaximalConfig::default(),
            zero_tol: 1e-10,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub a: f64,
    pub s_center: Option<f64>,
    pub residual: Option<f64>,
    pub newton_steps: usize,
    /// `"ok"` or the solver error.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlopeFit {
    Fitted { slope: f64, intercept: f64 },
    /// Every `S(center)` is zero to tolerance.
    ExactZero,
    Undefined { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTable {
    pub rows: Vec<DecayRow>,
    pub fit: SlopeFit,
}

impl DecayTable {
    pub fn slope(&self) -> Option<f64> {
        match self.fit {
            SlopeFit::Fitted { slope, .. } => Some(slope),
            _ => None,
        }
    }
}

fn decay_row(boundary: &Expr, a: f64, cfg: &DecayConfig) -> DecayRow {
    let run = || -> Result<(f64, f64, usize)> {
        let region = Region::Ball {
            center: cfg.center.clone(),
            radius: a,
        };
        let lattice = Lattice::around(region, cfg.h)?;
        let sol = solve_maximal(&lattice, boundary, &cfg.solver)?;
        let mid: Vec<usize> = lattice.counts().iter().map(|c| c / 2).collect();
        let idx = lattice.flat_index(&mid);
        let local = grid_local(&sol.field, idx)
            .ok_or_else(|| Error::Lattice("center node has no full stencil".into()))?;
        let frames = frames_of(&local)?;
        let s = forms_of(&local, &frames).s;
        Ok((s, sol.report.residual, sol.report.newton_steps))
    };
    match run() {
        Ok((s, res, steps)) => DecayRow {
            a,
            s_center: Some(s),
            residual: Some(res),
            newton_steps: steps,
            status: "ok".into(),
        },
        Err(e) => DecayRow {
            a,
            s_center: None,
            residual: None,
            newton_steps: 0,
            status: e.to_string(),
        },
    }
}

/// Least-squares slope and intercept of `ln S` against `ln a`.
pub fn fit_loglog(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Solves the maximal-surface problem with data `boundary` on balls of the given radii and
/// tabulates `S` at the common center. Failed radii stay in the table with their error.
pub fn decay_scan(boundary: &Expr, radii: &[f64], cfg: &DecayConfig) -> Result<DecayTable> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] > w[0])) || !(radii[0] > 0.0) {
        return Err(Error::InvalidArgument("radii must be positive and strictly increasing".into()));
    }
    if !(cfg.h > 0.0) {
        return Err(Error::InvalidArgument("spacing must be positive".into()));
    }
    let rows: Vec<DecayRow> = if cfg.parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = radii
                .iter()
                .map(|&a| scope.spawn(move || decay_row(boundary, a, cfg)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("decay worker panicked"))
                .collect()
        })
    } else {
        radii.iter().map(|&a| decay_row(boundary, a, cfg)).collect()
    };
    let solved: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.s_center.map(|s| (r.a, s)))
        .collect();
    let fit = if solved.is_empty() {
        SlopeFit::Undefined {
            reason: "no radius was solved".into(),
        }
    } else if solved.len() == rows.len() && solved.iter().all(|p| p.1 <= cfg.zero_tol) {
        SlopeFit::ExactZero
    } else {
        let positive: Vec<(f64, f64)> =
            solved.iter().copied().filter(|p| p.1 > cfg.zero_tol).collect();
        match fit_loglog(&positive) {
            Some((slope, intercept)) => SlopeFit::Fitted { slope, intercept },
            None => SlopeFit::Undefined {
                reason: "fewer than two radii with positive S".into(),
            },
        }
    };
    Ok(DecayTable { rows, fit })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    /// RK4 step in arc length.
    pub dt: f64,
    /// Geodesics leaving the box `|x_a| <= bound` count as exits.
    pub bound: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { dt: 1e-2, bound: 1e3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    /// Unit initial velocity (in the induced metric at the origin).
    pub direction: Vec<f64>,
    /// Arc length reached; equals the requested length when `completed`.
    pub t_reached: f64,
    pub completed: bool,
    /// `sup_t ln(z + 1) / t`.
    pub b_emp: f64,
    /// `sup_t |∇z| / (z + 1)` along the geodesic.
    pub ratio_sup: f64,
    pub z_end: f64,
    pub status: String,
}

fn geodesic_rhs(map: &GraphMap<f64>, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let m = x.len();
    let gamma = christoffel(map, x)?;
    Ok((0..m)
        .map(|p| {
            let mut acc = 0.0;
            for i in 0..m {
                for j in 0..m {
                    acc -= gamma[(p, i, j)] * v[i] * v[j];
                }
            }
            acc
        })
        .collect())
}

fn rk4_step(map: &GraphMap<f64>, x: &[f64], v: &[f64], dt: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> {
        a.iter().zip(b).map(|(p, q)| p + s * q).collect()
    };
    let k1x = v.to_vec();
    let k1v = geodesic_rhs(map, x, v)?;
    let x2 = axpy(x, dt / 2.0, &k1x);
    let v2 = axpy(v, dt / 2.0, &k1v);
    let k2v = geodesic_rhs(map, &x2, &v2)?;
    let x3 = axpy(x, dt / 2.0, &v2);
    let v3 = axpy(v, dt / 2.0, &k2v);
    let k3v = geodesic_rhs(map, &x3, &v3)?;
    let x4 = axpy(x, dt, &v3);
    let v4 = axpy(v, dt, &k3v);
    let k4v = geodesic_rhs(map, &x4, &v4)?;
    let m = x.len();
    let nx = (0..m)
        .map(|a| x[a] + dt / 6.0 * (k1x[a] + 2.0 * v2[a] + 2.0 * v3[a] + v4[a]))
        .collect();
    let nv = (0..m)
        .map(|a| v[a] + dt / 6.0 * (k1v[a] + 2.0 * k2v[a] + 2.0 * k3v[a] + k4v[a]))
        .collect();
    Ok((nx, nv))
}

fn probe_one(map: &GraphMap<f64>, dir: &[f64], t_end: f64, cfg: &ProbeConfig) -> Result<ProbeReport> {
    let m = map.m();
    let mut x = vec![0.0; m];
    let g0 = metric_at(map, &x)?;
    let norm = edge_length(&g0, dir);
    if !(norm > 0.0) {
        return Err(Error::InvalidArgument("probe direction must be nonzero".into()));
    }
    let mut v: Vec<f64> = dir.iter().map(|d| d / norm).collect();
    let start = pseudo_distance(map, &x)?;
    let mut ratio_sup = start.ratio;
    let mut b_emp: f64 = 0.0;
    let mut z_end = start.z;
    let steps = (t_end / cfg.dt).ceil().max(1.0) as usize;
    let dt = t_end / steps as f64;
    for k in 1..=steps {
        let t = k as f64 * dt;
        let advanced = rk4_step(map, &x, &v, dt).and_then(|(nx, nv)| {
            let pd = pseudo_distance(map, &nx)?;
            Ok((nx, nv, pd))
        });
        let (nx, nv, pd) = match advanced {
            Ok(step) => step,
            Err(e) => {
                return Ok(ProbeReport {
                    direction: dir.to_vec(),
                    t_reached: t - dt,
                    completed: false,
                    b_emp,
                    ratio_sup,
                    z_end,
                    status: e.to_string(),
                })
            }
        };
        x = nx;
        v = nv;
        z_end = pd.z;
        ratio_sup = ratio_sup.max(pd.ratio);
        b_emp = b_emp.max((pd.z + 1.0).ln() / t);
        if x.iter().any(|c| c.abs() > cfg.bound) {
            return Ok(ProbeReport {
                direction: dir.to_vec(),
                t_reached: t,
                completed: k == steps,
                b_emp,
                ratio_sup,
                z_end,
                status: "geodesic left the sampled region".into(),
            });
        }
    }
    Ok(ProbeReport {
        direction: dir.to_vec(),
        t_reached: t_end,
        completed: true,
        b_emp,
        ratio_sup,
        z_end,
        status: "ok".into(),
    })
}

/// Follows unit-speed geodesics from the origin (which must lie on the graph) for arc length
/// `t_end` and compares the growth rate of `ln(z + 1)` with the sampled gradient ratio.
pub fn completeness_probe(
    map: &GraphMap<f64>,
    directions: &[Vec<f64>],
    t_end: f64,
    cfg: &ProbeConfig,
) -> Result<Vec<ProbeReport>> {
    if !(t_end > 0.0) || !(cfg.dt > 0.0) {
        return Err(Error::InvalidArgument("probe length and step must be positive".into()));
    }
    directions
        .iter()
        .map(|d| {
            if d.len() != map.m() {
                return Err(Error::Dimension {
                    dim: map.m(),
                    reason: "probe direction has the wrong length".into(),
                });
            }
            probe_one(map, d, t_end, cfg)
        })
        .collect()
}
