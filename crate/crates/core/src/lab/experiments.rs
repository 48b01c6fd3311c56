//! The experiment runners.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::config::{DirectionSpec, DomainSpec, ExperimentConfig, Truncation};
use super::report::{fmt_f64, fmt_opt, write_csv, write_meta};
use super::{
    boundary_targets, monotone_decay, relative_error, richardson, seeded_ball_points,
    seeded_directions, ErrorModel, LabError, LabResult, Quantity,
};
use crate::geometry::{MetricKind, PointInvariants, FULL_DEGREE};
use crate::kernels::{
    ball_kernel, polydisc_kernel, siegel_kernel, KernelProvider, ReinhardtKernel, ReinhardtSpec,
    SiegelKernel,
};
use crate::scaling::{
    levi_determinant, levi_form, levi_min_eigenvalue, make_scaling_step, nearest_boundary_point,
    project_to_boundary, unit_normal, DomainModel,
};
use crate::tol;

/// Seed of the ball-oracle point sample.
pub const BALL_ORACLE_SEED: u64 = 0x4b55_4653;

/// One record of a boundary sweep.
#[derive(Clone, Debug)]
pub struct ExperimentRow {
    pub index: usize,
    pub delta: f64,
    pub eta: f64,
    pub tail: Option<f64>,
    pub trusted: bool,
    pub values: Vec<f64>,
    pub extrapolated: Vec<Option<f64>>,
    pub raw_err: Vec<f64>,
    pub extrap_err: Vec<Option<f64>>,
}

pub struct AsymptoticsReport {
    pub provider_tag: String,
    pub quantities: Vec<Quantity>,
    pub targets: Vec<f64>,
    pub rows: Vec<ExperimentRow>,
    pub error_model: ErrorModel,
    pub levi_min: f64,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl AsymptoticsReport {
    pub fn csv_header(&self) -> Vec<String> {
        let mut header =
            vec!["j".into(), "delta".into(), "eta".into(), "tail".into(), "trusted".into()];
        for q in &self.quantities {
            let code = q.code();
            header.push(code.to_string());
            header.push(format!("{code}_target"));
            header.push(format!("{code}_extrap"));
            header.push(format!("{code}_err_raw"));
            header.push(format!("{code}_err_extrap"));
        }
        header
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|row| {
                let mut cells = vec![
                    row.index.to_string(),
                    fmt_f64(row.delta),
                    fmt_f64(row.eta),
                    fmt_opt(row.tail),
                    row.trusted.to_string(),
                ];
                for (k, _) in self.quantities.iter().enumerate() {
                    cells.push(fmt_f64(row.values[k]));
                    cells.push(fmt_f64(self.targets[k]));
                    cells.push(fmt_opt(row.extrapolated[k]));
                    cells.push(fmt_f64(row.raw_err[k]));
                    cells.push(fmt_opt(row.extrap_err[k]));
                }
                cells
            })
            .collect()
    }
}

/// Resolve the model domain; for series domains also fixes the truncation
/// (auto mode probes the deepest sweep point).
fn build_model(config: &ExperimentConfig, probes: &[Vec<Complex64>]) -> LabResult<DomainModel> {
    match &config.domain {
        DomainSpec::Ball(n) => Ok(DomainModel::ball(*n)),
        DomainSpec::Siegel(n) => Ok(DomainModel::siegel(*n)),
        DomainSpec::Ellipsoid(p) => {
            let spec = ReinhardtSpec::new(p.clone())?;
            match config.truncation {
                Truncation::Fixed(n) => Ok(DomainModel::ellipsoid(spec, n)?),
                Truncation::Auto => {
                    let kernel =
                        ReinhardtKernel::auto(spec.clone(), probes, 0.5 * config.tail_tol)?;
                    let base = DomainModel::ellipsoid(spec, kernel.truncation())?;
                    Ok(base.with_provider(Arc::new(kernel)))
                }
            }
        }
        DomainSpec::Polydisc(_) => Err(LabError::Config {
            what: "the polydisc boundary has no smooth strictly pseudoconvex model; \
                   use `eval` or the ball"
                .into(),
        }),
    }
}

fn resolve_direction(
    config: &ExperimentConfig,
    domain: &DomainModel,
    p0: &[Complex64],
) -> LabResult<Vec<Complex64>> {
    let nu = unit_normal(domain, p0)?;
    match &config.x {
        DirectionSpec::Explicit(x) => Ok(x.clone()),
        DirectionSpec::Normal => Ok(nu),
        DirectionSpec::Tangent => {
            // deterministic complex-tangent unit vector: Gram-Schmidt of the
            // first coordinate axis not parallel to the normal
            let n = domain.dim();
            for k in 0..n {
                let mut candidate = vec![Complex64::ZERO; n];
                candidate[k] = Complex64::ONE;
                let pairing: Complex64 =
                    candidate.iter().zip(&nu).map(|(ci, ni)| ci * ni.conj()).sum();
                for i in 0..n {
                    candidate[i] -= pairing * nu[i];
                }
                let norm: f64 = candidate.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                if norm > 1e-6 {
                    return Ok(candidate.iter().map(|c| c / norm).collect());
                }
            }
            Err(LabError::Config { what: "no tangent direction in dimension 1".into() })
        }
    }
}

/// Split a vector against the unit normal at a boundary point.
fn split_at(nu: &[Complex64], x: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let pairing: Complex64 = x.iter().zip(nu).map(|(xi, ni)| xi * ni.conj()).sum();
    let normal: Vec<Complex64> = nu.iter().map(|ni| pairing * ni).collect();
    let tangential: Vec<Complex64> = x.iter().zip(&normal).map(|(xi, ni)| xi - ni).collect();
    (normal, tangential)
}

/// Boundary-approach sweep along the inward normal at p0.
pub fn run_asymptotics(config: &ExperimentConfig) -> LabResult<AsymptoticsReport> {
    config.validate()?;
    let n = config.domain.dim();
    let schedule = config.schedule();

    // boundary point refinement needs only the defining function, which is
    // independent of the kernel truncation
    let skeleton = match &config.domain {
        DomainSpec::Ellipsoid(p) => {
            DomainModel::ellipsoid(ReinhardtSpec::new(p.clone())?, 8)?
        }
        _ => build_model(config, &[])?,
    };
    let p0 = project_to_boundary(&skeleton, &config.p0)?;
    let nu = unit_normal(&skeleton, &p0)?;
    let deepest: Vec<Complex64> = {
        let d = *schedule.last().unwrap();
        p0.iter().zip(&nu).map(|(pi, ni)| pi - ni * d).collect()
    };

    let domain = build_model(config, std::slice::from_ref(&deepest))?;
    let provider = domain.provider.clone();

    let levi_min = levi_min_eigenvalue(&domain, &p0)?;
    if levi_min <= 0.0 {
        return Err(LabError::LeviCheck { lambda: levi_min });
    }

    let x = resolve_direction(config, &domain, &p0)?;
    let (x_normal_p0, x_tangent_p0) = split_at(&nu, &x);
    let x_normal_norm = x_normal_p0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let levi_value = levi_form(&domain, &p0, &x_tangent_p0)?;
    let levi_det = levi_determinant(&domain, &p0)?;
    let all_targets = boundary_targets(n, x_normal_norm, levi_value, levi_det);
    let quantities = config.quantities.clone();
    let targets: Vec<f64> = quantities
        .iter()
        .map(|q| all_targets[Quantity::ALL.iter().position(|a| a == q).unwrap()])
        .collect();

    let raw_rows: Vec<LabResult<(f64, f64, Option<f64>, Vec<f64>)>> = schedule
        .par_iter()
        .map(|&delta| {
            let zeta: Vec<Complex64> =
                p0.iter().zip(&nu).map(|(pi, ni)| pi - ni * delta).collect();
            let (foot, delta_actual) = nearest_boundary_point(&domain, &zeta)?;
            let nu_foot = unit_normal(&domain, &foot)?;
            let (x_n, x_h) = split_at(&nu_foot, &x);
            let grad_norm: f64 = crate::scaling::grad_zbar(domain.defining.as_ref(), &foot)
                .iter()
                .map(|g| g.norm_sqr())
                .sum::<f64>()
                .sqrt();
            let eta = delta_actual * grad_norm;
            let inv = PointInvariants::new(provider.as_ref(), &zeta, FULL_DEGREE)?;
            let kf = MetricKind::KobayashiFuks;
            let values: Vec<f64> = quantities
                .iter()
                .map(|q| -> LabResult<f64> {
                    Ok(match q {
                        Quantity::VolumeScaled => {
                            delta_actual.powi(n as i32 + 1) * inv.volume(kf)?
                        }
                        Quantity::NormalLength => delta_actual * inv.length(&x_n, kf)?,
                        Quantity::TangentLength => delta_actual.sqrt() * inv.length(&x_h, kf)?,
                        Quantity::CanonicalInvariant => inv.canonical_invariant(kf)?,
                        Quantity::Sectional => inv.sectional_curvature(&x, kf)?,
                        Quantity::Ricci => inv.ricci_curvature(&x, kf)?,
                    })
                })
                .collect::<LabResult<_>>()?;
            let tail = provider.tail_estimate(&zeta);
            Ok((delta_actual, eta, tail, values))
        })
        .collect();

    let mut rows = Vec::with_capacity(schedule.len());
    for (j, item) in raw_rows.into_iter().enumerate() {
        let (delta, eta, tail, values) = item?;
        let trusted = tail.map_or(true, |t| t <= config.tail_tol);
        let raw_err: Vec<f64> =
            values.iter().zip(&targets).map(|(&v, &t)| relative_error(v, t)).collect();
        rows.push(ExperimentRow {
            index: j,
            delta,
            eta,
            tail,
            trusted,
            values,
            extrapolated: vec![None; quantities.len()],
            raw_err,
            extrap_err: vec![None; quantities.len()],
        });
    }

    let model = config.effective_error_model();
    for j in 1..rows.len() {
        for k in 0..quantities.len() {
            let est = richardson(rows[j - 1].values[k], rows[j].values[k], config.ratio, model);
            rows[j].extrapolated[k] = Some(est);
            rows[j].extrap_err[k] = Some(relative_error(est, targets[k]));
        }
    }

    let mut pass = rows.iter().all(|r| r.trusted);
    let mut notes = Vec::new();
    if let Some(raw_tol) = config.raw_tol {
        let worst = rows.last().unwrap().raw_err.iter().copied().fold(0.0, f64::max);
        if worst > raw_tol {
            pass = false;
            notes.push(format!("raw error {worst:.3e} above raw_tol {raw_tol:.3e}"));
        }
    }
    if let Some(extrap_tol) = config.extrap_tol {
        let worst = rows
            .last()
            .unwrap()
            .extrap_err
            .iter()
            .flatten()
            .copied()
            .fold(0.0, f64::max);
        if worst > extrap_tol {
            pass = false;
            notes.push(format!("extrapolated error {worst:.3e} above extrap_tol {extrap_tol:.3e}"));
        }
    }

    let report = AsymptoticsReport {
        provider_tag: provider.tag(),
        quantities,
        targets,
        rows,
        error_model: model,
        levi_min,
        pass,
        notes,
    };

    if let Some(output) = &config.output {
        write_csv(output, &report.csv_header(), &report.csv_rows())?;
        let mut meta = config.echo();
        meta.push(format!("provider = {}", report.provider_tag));
        meta.push(format!("levi_min_eigenvalue = {}", fmt_f64(report.levi_min)));
        meta.push(format!("levi_at_x_tangent = {}", fmt_f64(levi_value)));
        meta.push(format!("levi_determinant = {}", fmt_f64(levi_det)));
        meta.push(format!("x_normal_norm = {}", fmt_f64(x_normal_norm)));
        for (q, t) in report.quantities.iter().zip(&report.targets) {
            meta.push(format!("target_{} = {}", q.code(), fmt_f64(*t)));
        }
        write_meta(output, &meta)?;
    }
    Ok(report)
}

/// Quantities recorded by the blow-up sweep, in column order.
pub const SCALING_LABELS: [&str; 6] =
    ["kernel_at_base", "g_kf_vol", "beta_kf", "ds_sq", "hsc_kf", "ric_kf"];

#[derive(Clone, Debug)]
pub struct ScalingRow {
    pub index: usize,
    pub delta: f64,
    pub eta: f64,
    pub values: [f64; 6],
    pub raw_err: [f64; 6],
    pub extrapolated: [Option<f64>; 6],
    pub extrap_err: [Option<f64>; 6],
}

pub struct ScalingReport {
    pub provider_tag: String,
    pub targets: [f64; 6],
    pub rows: Vec<ScalingRow>,
    pub monotone: [bool; 6],
    pub pass: bool,
    pub notes: Vec<String>,
}

impl ScalingReport {
    pub fn csv_header(&self) -> Vec<String> {
        let mut header = vec!["j".into(), "delta".into(), "eta".into()];
        for label in SCALING_LABELS {
            header.push(label.to_string());
            header.push(format!("{label}_target"));
            header.push(format!("{label}_extrap"));
            header.push(format!("{label}_err_raw"));
            header.push(format!("{label}_err_extrap"));
        }
        header
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|row| {
                let mut cells =
                    vec![row.index.to_string(), fmt_f64(row.delta), fmt_f64(row.eta)];
                for k in 0..6 {
                    cells.push(fmt_f64(row.values[k]));
                    cells.push(fmt_f64(self.targets[k]));
                    cells.push(fmt_opt(row.extrapolated[k]));
                    cells.push(fmt_f64(row.raw_err[k]));
                    cells.push(fmt_opt(row.extrap_err[k]));
                }
                cells
            })
            .collect()
    }

    /// Final raw and extrapolated errors for a labelled quantity.
    pub fn final_errors(&self, label: &str) -> Option<(f64, Option<f64>)> {
        let k = SCALING_LABELS.iter().position(|&l| l == label)?;
        let last = self.rows.last()?;
        Some((last.raw_err[k], last.extrap_err[k]))
    }
}

/// Blow-up sweep: rescaled-domain kernels and invariants at b* against the
/// Siegel half-space targets.
pub fn run_scaling(config: &ExperimentConfig) -> LabResult<ScalingReport> {
    config.validate()?;
    let n = config.domain.dim();
    let schedule = config.schedule();
    let skeleton = match &config.domain {
        DomainSpec::Ellipsoid(p) => DomainModel::ellipsoid(ReinhardtSpec::new(p.clone())?, 8)?,
        _ => build_model(config, &[])?,
    };
    let p0 = project_to_boundary(&skeleton, &config.p0)?;
    let nu = unit_normal(&skeleton, &p0)?;
    let deepest: Vec<Complex64> = {
        let d = *schedule.last().unwrap();
        p0.iter().zip(&nu).map(|(pi, ni)| pi - ni * d).collect()
    };
    let domain = build_model(config, std::slice::from_ref(&deepest))?;

    let levi_min = levi_min_eigenvalue(&domain, &p0)?;
    if levi_min <= 0.0 {
        return Err(LabError::LeviCheck { lambda: levi_min });
    }

    let x = match &config.x {
        DirectionSpec::Explicit(v) => v.clone(),
        _ => {
            // default probe direction: the last coordinate axis
            let mut e = vec![Complex64::ZERO; n];
            e[n - 1] = Complex64::ONE;
            e
        }
    };

    // Siegel targets, computed once from the Siegel provider
    let siegel = SiegelKernel::new(n);
    let b_star = SiegelKernel::base_point(n);
    let kf = MetricKind::KobayashiFuks;
    let targets: [f64; 6] = {
        let inv = PointInvariants::new(&siegel, &b_star, FULL_DEGREE)?;
        [
            siegel.evaluate(&b_star, &b_star)?.re,
            inv.volume(kf)?,
            inv.canonical_invariant(kf)?,
            inv.metric(kf)?.length_sq(&x),
            inv.sectional_curvature(&x, kf)?,
            inv.ricci_curvature(&x, kf)?,
        ]
    };

    let raw_rows: Vec<LabResult<(f64, f64, [f64; 6])>> = schedule
        .par_iter()
        .map(|&delta| {
            let step = make_scaling_step(&domain, &p0, delta)?;
            let provider = step.provider.clone();
            let inv = PointInvariants::new(provider.as_ref(), &b_star, FULL_DEGREE)?;
            let values = [
                provider.evaluate(&b_star, &b_star)?.re,
                inv.volume(kf)?,
                inv.canonical_invariant(kf)?,
                inv.metric(kf)?.length_sq(&x),
                inv.sectional_curvature(&x, kf)?,
                inv.ricci_curvature(&x, kf)?,
            ];
            Ok((step.delta, step.eta, values))
        })
        .collect();

    let mut rows = Vec::with_capacity(schedule.len());
    for (j, item) in raw_rows.into_iter().enumerate() {
        let (delta, eta, values) = item?;
        let mut raw_err = [0.0; 6];
        for k in 0..6 {
            raw_err[k] = relative_error(values[k], targets[k]);
        }
        rows.push(ScalingRow {
            index: j,
            delta,
            eta,
            values,
            raw_err,
            extrapolated: [None; 6],
            extrap_err: [None; 6],
        });
    }
    let model = config.effective_error_model();
    for j in 1..rows.len() {
        for k in 0..6 {
            let est = richardson(rows[j - 1].values[k], rows[j].values[k], config.ratio, model);
            rows[j].extrapolated[k] = Some(est);
            rows[j].extrap_err[k] = Some(relative_error(est, targets[k]));
        }
    }

    let mut monotone = [true; 6];
    let mut notes = Vec::new();
    for k in 0..6 {
        let errs: Vec<f64> = rows.iter().map(|r| r.raw_err[k]).collect();
        monotone[k] = monotone_decay(&errs, tol::MONOTONE_SLACK, tol::MONOTONE_FLOOR);
        if !monotone[k] {
            notes.push(format!("non-monotone error decay for {}", SCALING_LABELS[k]));
        }
    }
    let mut pass = monotone.iter().all(|&m| m);
    if let Some(extrap_tol) = config.extrap_tol {
        let worst =
            rows.last().unwrap().extrap_err.iter().flatten().copied().fold(0.0, f64::max);
        if worst > extrap_tol {
            pass = false;
            notes.push(format!(
                "final extrapolated error {worst:.3e} above extrap_tol {extrap_tol:.3e}"
            ));
        }
    }

    let report = ScalingReport {
        provider_tag: domain.provider.tag(),
        targets,
        rows,
        monotone,
        pass,
        notes,
    };
    if let Some(output) = &config.output {
        write_csv(output, &report.csv_header(), &report.csv_rows())?;
        let mut meta = config.echo();
        meta.push(format!("provider = {}", report.provider_tag));
        for (label, t) in SCALING_LABELS.iter().zip(&report.targets) {
            meta.push(format!("target_{label} = {}", fmt_f64(*t)));
        }
        write_meta(output, &meta)?;
    }
    Ok(report)
}

pub struct BallOracleReport {
    pub n: usize,
    pub points: usize,
    /// max relative errors: g_kf volume, beta, sectional, ricci
    pub max_errors: [f64; 4],
    pub pass: bool,
}

pub const BALL_ORACLE_LABELS: [&str; 4] = ["g_kf_vol", "beta_kf", "hsc_kf", "ric_kf"];

/// Closed-form checks on the unit ball: at seeded points |z| <= 0.8,
///
/// ```text
/// det G_kf = (n+1)^n (n+2)^n (1-|z|^2)^{-(n+1)}
/// beta_kf  = (n+1)^n (n+2)^n pi^n / n!
/// R_kf     = -2/((n+1)(n+2))
/// Ric_kf   = -1/(n+2)
/// ```
pub fn run_ball_oracle(n: usize) -> LabResult<BallOracleReport> {
    let provider = ball_kernel(n);
    let points = seeded_ball_points(n, 25, 0.8, BALL_ORACLE_SEED);
    let directions = seeded_directions(n, 25, BALL_ORACLE_SEED ^ 0xd1ec);
    let nf = n as f64;
    let constant = ((nf + 1.0) * (nf + 2.0)).powi(n as i32);
    let beta_target = constant * std::f64::consts::PI.powi(n as i32) / crate::kernels::factorial(n);
    let hsc_target = -2.0 / ((nf + 1.0) * (nf + 2.0));
    let ric_target = -1.0 / (nf + 2.0);

    let errors: Vec<LabResult<[f64; 4]>> = points
        .par_iter()
        .zip(directions.par_iter())
        .map(|(z, x)| {
            let inv = PointInvariants::new(provider.as_ref(), z, FULL_DEGREE)?;
            let kf = MetricKind::KobayashiFuks;
            let r2: f64 = z.iter().map(|zi| zi.norm_sqr()).sum();
            let vol_target = constant / (1.0 - r2).powi(n as i32 + 1);
            Ok([
                relative_error(inv.volume(kf)?, vol_target),
                relative_error(inv.canonical_invariant(kf)?, beta_target),
                relative_error(inv.sectional_curvature(x, kf)?, hsc_target),
                relative_error(inv.ricci_curvature(x, kf)?, ric_target),
            ])
        })
        .collect();

    let mut max_errors = [0.0f64; 4];
    for e in errors {
        let e = e?;
        for k in 0..4 {
            max_errors[k] = max_errors[k].max(e[k]);
        }
    }
    let pass = max_errors.iter().all(|&e| e <= tol::CLOSED_FORM);
    Ok(BallOracleReport { n, points: points.len(), max_errors, pass })
}

pub struct MomentsReport {
    pub rows: Vec<(Vec<usize>, f64, f64, f64)>,
    pub max_rel: f64,
    pub pass: bool,
}

/// Beta-form moments against the quadrature oracle for all |alpha| <=
/// max_order.
pub fn run_moments(p: &[f64], max_order: usize, output: Option<&Path>) -> LabResult<MomentsReport> {
    let spec = ReinhardtSpec::new(p.to_vec())?;
    let points = match spec.dim() {
        1 => 400,
        2 => 160,
        _ => 48,
    };
    let mut rows = Vec::new();
    let mut alpha = vec![0usize; spec.dim()];
    collect_moment_rows(&spec, &mut alpha, 0, max_order, points, &mut rows);
    let max_rel = rows.iter().map(|r| r.3).fold(0.0, f64::max);
    let pass = max_rel <= tol::MOMENT_QUADRATURE;
    if let Some(path) = output {
        let header: Vec<String> = (1..=spec.dim())
            .map(|i| format!("alpha_{i}"))
            .chain(["c_alpha".into(), "c_alpha_quadrature".into(), "rel_diff".into()])
            .collect();
        let cells: Vec<Vec<String>> = rows
            .iter()
            .map(|(alpha, c, q, rel)| {
                alpha
                    .iter()
                    .map(|a| a.to_string())
                    .chain([fmt_f64(*c), fmt_f64(*q), fmt_f64(*rel)])
                    .collect()
            })
            .collect();
        write_csv(path, &header, &cells)?;
    }
    Ok(MomentsReport { rows, max_rel, pass })
}

fn collect_moment_rows(
    spec: &ReinhardtSpec,
    alpha: &mut Vec<usize>,
    pos: usize,
    left: usize,
    points: usize,
    out: &mut Vec<(Vec<usize>, f64, f64, f64)>,
) {
    if pos == alpha.len() {
        let closed = spec.moment(alpha);
        let quad = spec.moment_quadrature(alpha, points);
        let rel = relative_error(closed, quad);
        out.push((alpha.clone(), closed, quad, rel));
        return;
    }
    for a in 0..=left {
        alpha[pos] = a;
        collect_moment_rows(spec, alpha, pos + 1, left - a, points, out);
        alpha[pos] = 0;
    }
}

pub struct EvalReport {
    pub provider_tag: String,
    pub kernel: f64,
    pub g_b: Vec<Vec<Complex64>>,
    pub g_kf: Vec<Vec<Complex64>>,
    pub beta_b: f64,
    pub beta_kf: f64,
    pub hsc: Option<(f64, f64)>,
    pub ricci: Option<(f64, f64)>,
    pub pass: bool,
    pub notes: Vec<String>,
}

fn provider_for(spec: &DomainSpec, truncation: Truncation) -> LabResult<Arc<dyn KernelProvider>> {
    Ok(match spec {
        DomainSpec::Ball(n) => ball_kernel(*n),
        DomainSpec::Polydisc(n) => polydisc_kernel(*n),
        DomainSpec::Siegel(n) => siegel_kernel(*n),
        DomainSpec::Ellipsoid(p) => {
            let spec = ReinhardtSpec::new(p.clone())?;
            let truncation = match truncation {
                Truncation::Fixed(t) => t,
                Truncation::Auto => 40,
            };
            Arc::new(ReinhardtKernel::new(spec, truncation)?)
        }
    })
}

/// Point evaluation of kernel, metrics and invariants, with internal
/// consistency checks.
pub fn eval_point(
    spec: &DomainSpec,
    z: &[Complex64],
    x: Option<&[Complex64]>,
    truncation: Truncation,
) -> LabResult<EvalReport> {
    let provider = provider_for(spec, truncation)?;
    let inv = PointInvariants::new(provider.as_ref(), z, FULL_DEGREE)?;
    let to_rows = |m: &nalgebra::DMatrix<Complex64>| -> Vec<Vec<Complex64>> {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
    };
    let g_b = inv.metric(MetricKind::Bergman)?;
    let g_kf = inv.metric(MetricKind::KobayashiFuks)?;
    let mut notes = Vec::new();
    let mut pass = true;
    for (label, metric) in [("G_b", &g_b), ("G_kf", &g_kf)] {
        if metric.hermitian_defect() > tol::METRIC_HERMITIAN {
            pass = false;
            notes.push(format!("{label} is not Hermitian within tolerance"));
        }
        if !metric.is_positive_definite() {
            pass = false;
            notes.push(format!("{label} is not positive definite"));
        }
    }
    let pointwise = provider.evaluate(z, z)?.re;
    if relative_error(inv.kernel_value(), pointwise) > tol::KERNEL_SYMMETRY {
        pass = false;
        notes.push("log-jet constant term disagrees with the pointwise kernel".into());
    }
    if let Some(tail) = provider.tail_estimate(z) {
        notes.push(format!("series tail estimate {tail:.3e}"));
        if tail > tol::TAIL_FLAG {
            pass = false;
            notes.push("series tail flag raised".into());
        }
    }
    let (hsc, ricci) = match x {
        Some(x) => (
            Some((
                inv.sectional_curvature(x, MetricKind::Bergman)?,
                inv.sectional_curvature(x, MetricKind::KobayashiFuks)?,
            )),
            Some((
                inv.ricci_curvature(x, MetricKind::Bergman)?,
                inv.ricci_curvature(x, MetricKind::KobayashiFuks)?,
            )),
        ),
        None => (None, None),
    };
    Ok(EvalReport {
        provider_tag: provider.tag(),
        kernel: pointwise,
        g_b: to_rows(&g_b.matrix),
        g_kf: to_rows(&g_kf.matrix),
        beta_b: inv.canonical_invariant(MetricKind::Bergman)?,
        beta_kf: inv.canonical_invariant(MetricKind::KobayashiFuks)?,
        hsc,
        ricci,
        pass,
        notes,
    })
}
