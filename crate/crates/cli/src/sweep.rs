//! Grid evaluation, EP flagging, peak tables and finite-size extrapolation.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array2;
use ptfid_core::biortho::{dense_ground_pair, EigOptions, Eigenpair};
use ptfid_core::fidelity::{chi_finite_difference, product_overlaps, Definition, Overlaps, PtClass};
use ptfid_core::fit::{peak_and_extrapolate, refine_peak};
use ptfid_core::lanczos::LanczosOptions;
use ptfid_core::ssh::{self, SshParams};
use ptfid_core::xxz::{self, Direction, XxzParams};
use ptfid_core::C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ModelKind, SweepConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// One grid point: fidelity between the point and its `+ε` neighbour along the
/// model's fidelity direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub model: String,
    #[serde(rename = "L")]
    pub l: usize,
    /// Values of the swept axes, in config order.
    pub axes: Vec<f64>,
    pub epsilon: f64,
    pub definition: String,
    pub re_f: Option<f64>,
    pub im_f: Option<f64>,
    pub re_chi: Option<f64>,
    pub im_chi: Option<f64>,
    pub re_chi_density: Option<f64>,
    pub pt_class_a: Option<String>,
    pub pt_class_b: Option<String>,
    pub ep_flag: String,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpCandidate {
    #[serde(rename = "L")]
    pub l: usize,
    pub axes: Vec<f64>,
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub re_f: f64,
    /// `n` with `Re F ≈ 2⁻ⁿ`, when within tolerance.
    pub order: Option<u32>,
    pub pt_class_a: String,
    pub pt_class_b: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    #[serde(rename = "L")]
    pub l: usize,
    /// Position along the first axis (parabolically refined for one-axis sweeps).
    pub position: f64,
    pub height: f64,
    /// Grid point of the sampled maximum.
    pub axes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub degree: usize,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub residual: f64,
    pub loglog_slopes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub toolkit: String,
    pub version: String,
    pub config: String,
    pub tolerances: BTreeMap<String, f64>,
    /// How the `chi` columns were obtained.
    pub chi_source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub model: String,
    pub axis_names: Vec<String>,
    pub sizes: Vec<usize>,
    pub records: Vec<Row>,
    pub ep_candidates: Vec<EpCandidate>,
    pub peaks: Vec<Peak>,
    pub extrapolation: Option<Fit>,
    pub extrapolation_note: Option<String>,
}

impl SweepResult {
    /// A result with no records, used for header-only output.
    pub fn empty(cfg: &SweepConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            provenance: provenance(cfg),
            model: cfg.model.tag().into(),
            axis_names: cfg.axis_names(),
            sizes: cfg.sizes.clone(),
            records: Vec::new(),
            ep_candidates: Vec::new(),
            peaks: Vec::new(),
            extrapolation: None,
            extrapolation_note: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("matrix file {path}: {msg}")]
    Matrix { path: String, msg: String },
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Raw outcome of one evaluation before flags are attached.
struct Eval {
    lambda_a: f64,
    f: C64,
    chi: C64,
    pt_a: PtClass,
    pt_b: PtClass,
}

fn row(cfg: &SweepConfig, l: usize, axes: Vec<f64>, res: Result<Eval, String>) -> (Row, Option<Eval>) {
    let base = Row {
        model: cfg.model.tag().into(),
        l,
        axes,
        epsilon: cfg.epsilon,
        definition: cfg.definition.tag().into(),
        re_f: None,
        im_f: None,
        re_chi: None,
        im_chi: None,
        re_chi_density: None,
        pt_class_a: None,
        pt_class_b: None,
        ep_flag: "none".into(),
        error: None,
    };
    match res {
        Ok(e) => {
            let r = Row {
                re_f: Some(e.f.re),
                im_f: Some(e.f.im),
                re_chi: Some(e.chi.re),
                im_chi: Some(e.chi.im),
                re_chi_density: Some(e.chi.re / l as f64),
                pt_class_a: Some(e.pt_a.tag().into()),
                pt_class_b: Some(e.pt_b.tag().into()),
                ..base
            };
            (r, Some(e))
        }
        Err(msg) => (Row { error: Some(msg), ..base }, None),
    }
}

fn ssh_params(cfg: &SweepConfig, l: usize, point: &[f64]) -> ptfid_core::Result<SshParams> {
    let mut v: BTreeMap<&str, f64> = [("w", 1.0), ("v2", 0.0), ("u", 0.0)].into_iter().collect();
    for (k, x) in &cfg.fixed {
        v.insert(k, *x);
    }
    for (a, x) in cfg.axes.iter().zip(point) {
        v.insert(&a.name, *x);
    }
    SshParams::new(v["w"], v["v1"], v["v2"], v["u"], l)
}

/// Finite-size PT class: the model's own `Δ_k` rule, or `max_k |Im ε_−(k)| ≥ tol` when overridden.
fn ssh_pt(p: &SshParams, tol_real: Option<f64>) -> PtClass {
    match tol_real {
        None => ssh::finite_size_pt(p),
        Some(t) => {
            let broken = p.momenta().into_iter().any(|k| ssh::band_point(k, p).energies.0.im.abs() >= t);
            if broken {
                PtClass::Broken
            } else {
                PtClass::Unbroken
            }
        }
    }
}

fn eval_ssh(cfg: &SweepConfig, l: usize, point: &[f64]) -> Result<Eval, String> {
    let run = || -> ptfid_core::Result<Eval> {
        let p = ssh_params(cfg, l, point)?;
        let q = p.with_v1(p.v1 + cfg.epsilon);
        let ov = product_overlaps(&ssh::ground_point(&p)?, &ssh::ground_point(&q)?)?;
        let f = ov.fidelity(cfg.definition);
        let chi = match cfg.definition {
            Definition::Metricized => C64::new(ssh::chi_total(&p)?.0, 0.0),
            Definition::RightRight => C64::new(ssh::chi_total_rr(&p)?, 0.0),
            _ => chi_finite_difference(f, cfg.epsilon),
        };
        Ok(Eval { lambda_a: p.v1, f, chi, pt_a: ssh_pt(&p, cfg.tol_real), pt_b: ssh_pt(&q, cfg.tol_real) })
    };
    run().map_err(|e| e.to_string())
}

fn xxz_rows(cfg: &SweepConfig, l: usize) -> Vec<(Row, Option<Eval>)> {
    let axis = &cfg.axes[0];
    let dir = if axis.name == "Jz" { Direction::Jz } else { Direction::Gamma };
    let (jz, gamma) = match dir {
        Direction::Jz => (axis.start, cfg.fixed["gamma"]),
        Direction::Gamma => (cfg.fixed["Jz"], axis.start),
    };
    let grid = axis.values();
    let opts = LanczosOptions { seed: cfg.seed, ..LanczosOptions::default() };
    let scan = XxzParams::new(jz, gamma, l)
        .and_then(|base| xxz::fidelity_scan(&base, dir, &grid, cfg.epsilon, cfg.definition, &opts));
    match scan {
        Err(e) => grid.iter().map(|&x| row(cfg, l, vec![x], Err(e.to_string()))).collect(),
        Ok(points) => points
            .into_iter()
            .map(|pt| {
                let res = match (pt.record, pt.energies) {
                    (Ok(rec), Some((ea, eb))) => {
                        let (pt_a, pt_b) = match cfg.tol_real {
                            Some(t) => (PtClass::from_energy(ea, t), PtClass::from_energy(eb, t)),
                            None => (rec.pt_a, rec.pt_b),
                        };
                        Ok(Eval { lambda_a: pt.lambda, f: rec.f, chi: rec.chi_fd, pt_a, pt_b })
                    }
                    (Err(e), _) => Err(e.to_string()),
                    (Ok(_), None) => Err("missing energies".into()),
                };
                row(cfg, l, vec![pt.lambda], res)
            })
            .collect(),
    }
}

/// Reads a dense complex matrix: one row per line, entries separated by whitespace,
/// each entry `re` or `re,im`; `#` starts a comment.
pub fn read_matrix(path: &Path) -> Result<Array2<C64>, SweepError> {
    let err = |msg: String| SweepError::Matrix { path: path.display().to_string(), msg };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                let mut parts = tok.split(',');
                let re = parts.next().unwrap_or("").parse::<f64>();
                let im = parts.next().map(str::parse::<f64>).unwrap_or(Ok(0.0));
                match (re, im, parts.next()) {
                    (Ok(re), Ok(im), None) => Ok(C64::new(re, im)),
                    _ => Err(err(format!("line {}: bad entry '{tok}'", i + 1))),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(err(format!("expected a square matrix, got {n} rows of lengths {:?}", rows.iter().map(Vec::len).collect::<Vec<_>>())));
    }
    Ok(Array2::from_shape_fn((n, n), |(i, j)| rows[i][j]))
}

fn dense_tol(h: &Array2<C64>, tol_real: Option<f64>) -> f64 {
    tol_real.unwrap_or_else(|| 1e-10 * h.iter().fold(1.0f64, |m, z| m.max(z.norm())))
}

fn eval_dense(cfg: &SweepConfig, h0: &Array2<C64>, v: &Array2<C64>, lambda: f64) -> Result<Eval, String> {
    let opts = EigOptions::default();
    let at = |x: f64| -> ptfid_core::Result<(Eigenpair, PtClass)> {
        let h = h0 + &v.mapv(|z| z * x);
        let pair = dense_ground_pair(&h, &opts)?;
        let pt = PtClass::from_energy(pair.energy, dense_tol(&h, cfg.tol_real));
        Ok((pair, pt))
    };
    let run = || -> ptfid_core::Result<Eval> {
        let (a, pt_a) = at(lambda)?;
        let (b, pt_b) = at(lambda + cfg.epsilon)?;
        let f = Overlaps::of(&a.left, &a.right, &b.left, &b.right)?.fidelity(cfg.definition);
        Ok(Eval { lambda_a: lambda, f, chi: chi_finite_difference(f, cfg.epsilon), pt_a, pt_b })
    };
    run().map_err(|e| e.to_string())
}

fn provenance(cfg: &SweepConfig) -> Provenance {
    let mut tol = BTreeMap::new();
    tol.insert("epsilon".to_string(), cfg.epsilon);
    tol.insert("half_tol".to_string(), cfg.half_tol);
    tol.insert("divergence_floor".to_string(), cfg.divergence_floor);
    tol.insert("fit_degree".to_string(), cfg.fit_degree as f64);
    tol.insert("seed".to_string(), cfg.seed as f64);
    if let Some(t) = cfg.tol_real {
        tol.insert("tol_real".to_string(), t);
    }
    let lz = LanczosOptions::default();
    tol.insert("lanczos_tol_resid".to_string(), lz.tol_resid);
    tol.insert("ep_guard".to_string(), EigOptions::default().ep_guard);
    let chi_source = match (cfg.model, cfg.definition) {
        (ModelKind::Ssh, Definition::Metricized) => "closed-form sum over momenta",
        (ModelKind::Ssh, Definition::RightRight) => "closed-form right-right sum over momenta",
        _ => "finite difference (1 - F)/epsilon^2",
    };
    Provenance {
        toolkit: "ptfid".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.source.clone(),
        tolerances: tol,
        chi_source: chi_source.into(),
    }
}

/// `n` with `|x − 2⁻ⁿ| < tol`, `n ≥ 1`.
pub fn half_power_order(x: f64, tol: f64) -> Option<u32> {
    if !(x > 0.0) {
        return None;
    }
    let n = (-x.log2()).round();
    (n >= 1.0 && (x - 0.5f64.powf(n)).abs() < tol).then_some(n as u32)
}

fn flag(cfg: &SweepConfig, r: &mut Row, e: &Eval) -> Option<EpCandidate> {
    if e.pt_a != e.pt_b {
        let order = half_power_order(e.f.re, cfg.half_tol);
        r.ep_flag = match order {
            Some(1) => "second-order".into(),
            Some(n) => format!("second-order-x{n}"),
            None => "straddle".into(),
        };
        return Some(EpCandidate {
            l: r.l,
            axes: r.axes.clone(),
            lambda_a: e.lambda_a,
            lambda_b: e.lambda_a + cfg.epsilon,
            re_f: e.f.re,
            order,
            pt_class_a: e.pt_a.tag().into(),
            pt_class_b: e.pt_b.tag().into(),
        });
    }
    if r.re_chi_density.is_some_and(|d| d < cfg.divergence_floor) {
        r.ep_flag = "divergence".into();
    }
    None
}

fn peaks(cfg: &SweepConfig, rows: &[Row]) -> Vec<Peak> {
    let mut out = Vec::new();
    for &l in &cfg.sizes {
        let mine: Vec<&Row> = rows.iter().filter(|r| r.l == l).collect();
        let best = mine
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.re_chi_density.filter(|d| d.is_finite()).map(|d| (i, d)))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((i, h)) = best else { continue };
        let mut position = mine[i].axes[0];
        let mut height = h;
        if cfg.axes.len() == 1 && i > 0 && i + 1 < mine.len() {
            let ys: Option<Vec<f64>> = mine[i - 1..=i + 1].iter().map(|r| r.re_chi_density).collect();
            if let Some(ys) = ys {
                let xs: Vec<f64> = mine[i - 1..=i + 1].iter().map(|r| r.axes[0]).collect();
                (position, height) = refine_peak(&xs, &ys, 1);
            }
        }
        out.push(Peak { l, position, height, axes: mine[i].axes.clone() });
    }
    out
}

/// Evaluates every grid point for every size and assembles the result.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult, SweepError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    let grid = cfg.grid();
    let evaluated: Vec<(Row, Option<Eval>)> = match cfg.model {
        ModelKind::Ssh => {
            let tasks: Vec<(usize, &Vec<f64>)> =
                cfg.sizes.iter().flat_map(|&l| grid.iter().map(move |p| (l, p))).collect();
            pool.install(|| {
                tasks.par_iter().map(|&(l, p)| row(cfg, l, p.clone(), eval_ssh(cfg, l, p))).collect()
            })
        }
        // Each size is one seeded, ordered scan; sizes run concurrently.
        ModelKind::Xxz => pool.install(|| {
            cfg.sizes.par_iter().map(|&l| xxz_rows(cfg, l)).collect::<Vec<_>>().into_iter().flatten().collect()
        }),
        ModelKind::DenseFile => {
            let h0 = read_matrix(Path::new(&cfg.files["h0"]))?;
            let v = read_matrix(Path::new(&cfg.files["v"]))?;
            if h0.dim() != v.dim() {
                return Err(SweepError::Matrix {
                    path: cfg.files["v"].clone(),
                    msg: format!("dimension {:?} differs from h0 {:?}", v.dim(), h0.dim()),
                });
            }
            let n = h0.nrows();
            pool.install(|| {
                grid.par_iter().map(|p| row(cfg, n, p.clone(), eval_dense(cfg, &h0, &v, p[0]))).collect()
            })
        }
    };
    let mut records = Vec::with_capacity(evaluated.len());
    let mut ep_candidates = Vec::new();
    for (mut r, e) in evaluated {
        if let Some(e) = e {
            ep_candidates.extend(flag(cfg, &mut r, &e));
        }
        records.push(r);
    }
    let mut result = SweepResult { records, ep_candidates, ..SweepResult::empty(cfg) };
    if cfg.model == ModelKind::DenseFile {
        result.sizes = result.records.first().map(|r| vec![r.l]).unwrap_or_default();
    } else {
        result.peaks = peaks(cfg, &result.records);
    }
    if cfg.sizes.len() >= 2 {
        let sizes: Vec<usize> = result.peaks.iter().map(|p| p.l).collect();
        let pos: Vec<f64> = result.peaks.iter().map(|p| p.position).collect();
        let hts: Vec<f64> = result.peaks.iter().map(|p| p.height).collect();
        match peak_and_extrapolate(&sizes, &pos, &hts, cfg.fit_degree) {
            Ok(x) => {
                result.extrapolation = Some(Fit {
                    degree: cfg.fit_degree,
                    intercept: x.intercept,
                    coefficients: x.coefficients,
                    residual: x.residual,
                    loglog_slopes: x.loglog_slopes,
                })
            }
            Err(e) => result.extrapolation_note = Some(e.to_string()),
        }
    }
    Ok(result)
}
