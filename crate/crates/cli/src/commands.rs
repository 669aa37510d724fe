//! The six commands. Each returns a [`Output`] that the entry point renders and writes.

use rayon::prelude::*;
use serde_json::{json, Map, Value};
use spacelike::bernstein::{decay_scan, SlopeFit};
use spacelike::graphgeom::{
    extremal_residual_of, frame_riemann_oracle, metric_point, point_geometry_of, pseudo_distance,
    ricci_margin, GraphMap,
};
use spacelike::grassmann::{distance, SpacelikePlane};
use spacelike::lagrangian::{
    gradient_graph, lagrangian_forms, ma_residual, moduli_curvature, moduli_curvature_oracle,
    Potential,
};
use spacelike::solver::{solve_ma, solve_maximal, NodeKind, Solution};
use spacelike::Lattice;

use crate::battery::{run_suite, suites};
use crate::config::{ConfigError, JobConfig};
use crate::report::{coord_columns, Cell, Table};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const NUMERICAL: i32 = 2;
    pub const VIOLATION: i32 = 3;
}

#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Numerical(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub oracle: bool,
    pub seed: u64,
}

#[derive(Debug)]
pub struct Output {
    pub table: Table,
    pub meta: Map<String, Value>,
    /// Convergence log of a solve, written next to the main output.
    pub log: Option<Table>,
    pub warnings: Vec<String>,
    pub exit: i32,
}

impl Output {
    fn new(table: Table) -> Self {
        Output {
            table,
            meta: Map::new(),
            log: None,
            warnings: Vec::new(),
            exit: exit::OK,
        }
    }
}

fn nan_row(width: usize) -> Vec<Cell> {
    vec![Cell::Num(f64::NAN); width]
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a: f64, x| a.max(x.abs()))
}

const ANALYZE_COLUMNS: &[&str] = &[
    "spacelike",
    "metric_min_eig",
    "metric_max_eig",
    "h_norm",
    "s",
    "ricci_margin",
    "extremal_residual",
    "gauss_distance",
    "z",
    "z_ratio",
];

fn analyze_node(map: &GraphMap<f64>, x: &[f64], base: &SpacelikePlane<f64>, oracle: bool) -> (String, Vec<Cell>) {
    let width = ANALYZE_COLUMNS.len() + usize::from(oracle);
    let local = match map.local(x) {
        Ok(l) => l,
        Err(e) => return (format!("error: {e}"), nan_row(width)),
    };
    let mp = metric_point(&local);
    let (eigs, _) = mp.g.sym_eigen();
    let lo = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut row = vec![Cell::Bool(mp.spacelike), lo.into(), hi.into()];
    if !mp.spacelike {
        row.extend(nan_row(width - 3));
        return ("not_spacelike".into(), row);
    }
    let pg = match point_geometry_of(&local) {
        Ok(pg) => pg,
        Err(e) => {
            row.extend(nan_row(width - 3));
            return (format!("error: {e}"), row);
        }
    };
    let mut status = String::from("ok");
    row.push(pg.forms.h_norm.into());
    row.push(pg.forms.s.into());
    row.push(ricci_margin(&pg.forms, &pg.curvature).into());
    row.push(extremal_residual_of(&local).map(|r| max_abs(&r)).unwrap_or(f64::NAN).into());
    let gd = SpacelikePlane::new(local.jac.clone()).and_then(|p| distance(&p, base));
    row.push(gd.unwrap_or(f64::NAN).into());
    match pseudo_distance(map, x) {
        Ok(p) => {
            row.push(p.z.into());
            row.push(p.ratio.into());
        }
        Err(e) => {
            status = format!("z_unavailable: {e}");
            row.push(f64::NAN.into());
            row.push(f64::NAN.into());
        }
    }
    if oracle {
        let err = frame_riemann_oracle(map, x)
            .map(|o| pg.curvature.riemann.max_diff(&o) / o.max_abs().max(1e-3))
            .unwrap_or(f64::NAN);
        row.push(err.into());
    }
    (status, row)
}

fn node_table(lat: &Lattice, extra: &[&str], oracle_col: Option<&str>) -> Table {
    let mut cols = vec!["node".to_string()];
    cols.extend(coord_columns(lat.dim()));
    cols.push("status".into());
    cols.extend(extra.iter().map(|s| s.to_string()));
    if let Some(c) = oracle_col {
        cols.push(c.into());
    }
    Table::new(cols)
}

fn per_node<F>(lat: &Lattice, f: F) -> Vec<(usize, Vec<f64>, String, Vec<Cell>)>
where
    F: Fn(&[f64]) -> (String, Vec<Cell>) + Sync,
{
    lat.active_nodes()
        .into_par_iter()
        .map(|i| {
            let x = lat.coords(i);
            let (status, row) = f(&x);
            (i, x, status, row)
        })
        .collect()
}

fn fill(table: &mut Table, rows: Vec<(usize, Vec<f64>, String, Vec<Cell>)>) -> usize {
    let mut flagged = 0;
    for (i, x, status, cells) in rows {
        if status != "ok" {
            flagged += 1;
        }
        let mut row: Vec<Cell> = vec![i.into()];
        row.extend(x.into_iter().map(Cell::Num));
        row.push(status.into());
        row.extend(cells);
        table.push(row);
    }
    flagged
}

pub fn analyze(cfg: &JobConfig, opts: &Options) -> Result<Output, Failure> {
    let map = cfg.graph_map()?;
    let lat = cfg.lattice()?;
    let base = SpacelikePlane::base(map.m(), map.n());
    let mut table = node_table(&lat, ANALYZE_COLUMNS, opts.oracle.then_some("riemann_oracle_error"));
    let rows = per_node(&lat, |x| analyze_node(&map, x, &base, opts.oracle));
    let bad = rows.iter().filter(|r| r.2 == "not_spacelike").count();
    let flagged = fill(&mut table, rows);
    let mut out = Output::new(table);
    if bad > 0 {
        out.warnings.push(format!("{bad} nodes are not space-like"));
    }
    if flagged > bad {
        out.warnings.push(format!("{} nodes carry a non-ok status", flagged - bad));
    }
    Ok(out)
}

const LAGRANGIAN_COLUMNS: &[&str] = &[
    "convex",
    "metric_min_eig",
    "ma_residual",
    "h_norm",
    "s",
    "scalar_curvature",
    "min_ricci_eig",
];

fn lagrangian_node(p: &Potential<f64>, x: &[f64], oracle: bool) -> (String, Vec<Cell>) {
    let width = LAGRANGIAN_COLUMNS.len() + usize::from(oracle);
    let gp = match gradient_graph(p, x) {
        Ok(g) => g,
        Err(e) => return (format!("error: {e}"), nan_row(width)),
    };
    let mut row = vec![
        Cell::Bool(gp.convex),
        gp.min_eig.into(),
        ma_residual(p, x).unwrap_or(f64::NAN).into(),
    ];
    if !gp.convex {
        row.extend(nan_row(width - 3));
        return ("not_convex".into(), row);
    }
    let forms = lagrangian_forms(p, x);
    let curv = moduli_curvature(p, x);
    let (Ok(forms), Ok(curv)) = (forms, curv) else {
        row.extend(nan_row(width - 3));
        return ("error: curvature evaluation failed".into(), row);
    };
    row.push(forms.h_norm.into());
    row.push(forms.s.into());
    row.push(curv.scalar.into());
    row.push(curv.min_ricci_eig.into());
    if oracle {
        let err = moduli_curvature_oracle(p, x, 1e-3)
            .map(|o| curv.riemann.max_diff(&o) / o.max_abs().max(1e-3))
            .unwrap_or(f64::NAN);
        row.push(err.into());
    }
    ("ok".into(), row)
}

pub fn lagrangian(cfg: &JobConfig, opts: &Options) -> Result<Output, Failure> {
    let p = cfg.potential()?;
    let lat = cfg.lattice()?;
    let mut table = node_table(&lat, LAGRANGIAN_COLUMNS, opts.oracle.then_some("riemann_oracle_error"));
    let rows = per_node(&lat, |x| lagrangian_node(&p, x, opts.oracle));
    let bad = rows.iter().filter(|r| r.2 == "not_convex").count();
    fill(&mut table, rows);
    let mut out = Output::new(table);
    if bad > 0 {
        out.warnings.push(format!("{bad} nodes are not convex"));
    }
    Ok(out)
}

fn solution_output(sol: Solution) -> Output {
    let lat = &sol.field.lattice;
    let mut cols = vec!["node".to_string()];
    cols.extend(coord_columns(lat.dim()));
    cols.push("kind".into());
    cols.push("value".into());
    let mut table = Table::new(cols);
    for i in lat.active_nodes() {
        let kind = match sol.field.kinds[i] {
            NodeKind::Interior => "interior",
            NodeKind::Dirichlet => "dirichlet",
            NodeKind::Inactive => continue,
        };
        let mut row: Vec<Cell> = vec![i.into()];
        row.extend(lat.coords(i).into_iter().map(Cell::Num));
        row.push(kind.into());
        row.push(sol.field.values[i].into());
        table.push(row);
    }
    let mut log = Table::new(vec!["iteration".into(), "residual".into()]);
    for (k, r) in sol.report.history.iter().enumerate() {
        log.push(vec![k.into(), (*r).into()]);
    }
    let mut out = Output::new(table);
    out.meta.insert("lattice".into(), json!(lat));
    out.meta.insert("solve".into(), json!(sol.report));
    out.log = Some(log);
    out
}

pub fn solve_maximal_cmd(cfg: &JobConfig) -> Result<Output, Failure> {
    let lat = cfg.lattice()?;
    let boundary = cfg.boundary()?;
    let sc = cfg.maximal_config()?;
    let sol = solve_maximal(&lat, &boundary, &sc).map_err(|e| Failure::Numerical(e.to_string()))?;
    Ok(solution_output(sol))
}

pub fn solve_ma_cmd(cfg: &JobConfig) -> Result<Output, Failure> {
    let lat = cfg.lattice()?;
    let boundary = cfg.boundary()?;
    let (mc, c) = cfg.ma_config()?;
    let sol = solve_ma(&lat, &boundary, c, &mc).map_err(|e| Failure::Numerical(e.to_string()))?;
    Ok(solution_output(sol))
}

pub fn scan(cfg: &JobConfig, parallel: bool) -> Result<Output, Failure> {
    let boundary = cfg.boundary()?;
    let (radii, mut dc) = cfg.decay()?;
    dc.parallel = parallel;
    let table = decay_scan(&boundary, &radii, &dc).map_err(|e| Failure::Numerical(e.to_string()))?;
    let slope = match &table.fit {
        SlopeFit::Fitted { slope, .. } => Cell::Num(*slope),
        SlopeFit::ExactZero => "exact-zero".into(),
        SlopeFit::Undefined { .. } => "undefined".into(),
    };
    let mut out_table = Table::new(
        ["a", "s_center", "residual", "newton_steps", "status", "slope"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    let mut failed = 0;
    for r in &table.rows {
        if r.status != "ok" {
            failed += 1;
        }
        out_table.push(vec![
            r.a.into(),
            r.s_center.unwrap_or(f64::NAN).into(),
            r.residual.unwrap_or(f64::NAN).into(),
            r.newton_steps.into(),
            r.status.clone().into(),
            slope.clone(),
        ]);
    }
    let mut out = Output::new(out_table);
    out.meta.insert("fit".into(), json!(table.fit));
    out.meta.insert("center".into(), json!(dc.center));
    if failed > 0 {
        out.warnings.push(format!("{failed} radii failed to solve"));
        out.exit = exit::NUMERICAL;
    }
    Ok(out)
}

pub fn check(opts: &Options) -> Output {
    let all = suites();
    let results: Vec<_> = all
        .par_iter()
        .enumerate()
        .map(|(i, s)| run_suite(i, s, opts.seed))
        .collect();
    let mut table = Table::new(
        ["suite", "status", "measured", "tolerance", "detail"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    let mut failed = 0;
    for r in results {
        if !r.passed {
            failed += 1;
        }
        table.push(vec![
            r.name.into(),
            (if r.passed { "pass" } else { "fail" }).into(),
            r.measured.into(),
            r.tolerance.into(),
            r.detail.into(),
        ]);
    }
    let mut out = Output::new(table);
    out.meta.insert("seed".into(), json!(opts.seed));
    if failed > 0 {
        out.warnings.push(format!("{failed} suites failed"));
        out.exit = exit::VIOLATION;
    }
    out
}
