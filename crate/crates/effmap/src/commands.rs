//! Subcommands: each writes its artifacts into the output directory and
//! returns a printable summary.

use std::path::{Path, PathBuf};

use effmap_core::cycle::wltp_like;
use effmap_core::ecm::{solve_operating_point, torque_envelope};
use effmap_core::gsa::{Method, SensitivityResult};
use effmap_core::pce::{pce_moments, required_samples, PceModel};
use effmap_core::pipeline::{gsa, uq, UqMethod};
use effmap_core::qoi::{CostReport, EcmEfficiencyModel, MomentField, OperatingSetKind};
use effmap_core::reduction::{reduce_and_compare, select_noninfluential, ReductionReport};
use serde::Serialize;

use crate::config::{MethodKind, OperatingConfig, RunConfig, Study};
use crate::cycle_csv::write_speed_cycle;
use crate::error::{CliError, Result};
use crate::exec::Parallel;
use crate::export::{write_columns, write_fields, write_json};

/// Monte Carlo runs below this many samples draw a warning.
const FEW_SAMPLES: usize = 30;

#[derive(Debug, Default)]
pub struct Summary {
    pub lines: Vec<String>,
    pub warnings: Vec<String>,
}

impl Summary {
    fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }
}

/// Validated configuration, resolved inputs and the executor.
pub struct Context {
    pub config: RunConfig,
    pub study: Study,
    pub exec: Parallel,
    pub out: PathBuf,
}

impl Context {
    /// Resolve `config` (relative paths against `base_dir`) and create the
    /// output directory `out`.
    pub fn new(config: RunConfig, base_dir: &Path, out: PathBuf, workers: usize) -> Result<Self> {
        let study = config.resolve(base_dir)?;
        let exec = Parallel::new(workers)?;
        std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
        Ok(Self {
            config,
            study,
            exec,
            out,
        })
    }

    fn model(&self) -> Result<EcmEfficiencyModel> {
        Ok(EcmEfficiencyModel::new(
            self.study.ecm,
            &self.study.space,
            self.study.opset.clone(),
        )?)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn method_warnings(&self, kind: MethodKind, summary: &mut Summary) {
        let n = self.config.method.mc.n_samples;
        if kind == MethodKind::Mc && n < FEW_SAMPLES {
            summary.warnings.push(format!(
                "only {n} Monte Carlo samples; moment and index estimates are unreliable"
            ));
        }
    }

    fn write_meta(&self, command: &str, mask: Option<&[bool]>) -> Result<()> {
        let opset = &self.study.opset;
        let meta = RunMeta {
            tool: "effmap",
            version: env!("CARGO_PKG_VERSION"),
            command,
            n_op: opset.len(),
            operating_kind: opset.kind,
            grid_shape: opset.grid_shape,
            parameters: self.study.space.names().collect(),
            mask,
            config: &self.config,
        };
        write_json(&self.path("run_meta.json"), &meta)
    }
}

#[derive(Serialize)]
struct RunMeta<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    n_op: usize,
    operating_kind: OperatingSetKind,
    grid_shape: Option<(usize, usize)>,
    parameters: Vec<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mask: Option<&'a [bool]>,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct CostEntry {
    method: MethodKind,
    #[serde(flatten)]
    cost: CostReport,
    model_evaluations: u64,
    closed_form: u64,
}

impl CostEntry {
    fn new(method: MethodKind, cost: CostReport, closed_form: u64) -> Self {
        Self {
            method,
            cost,
            model_evaluations: cost.model_evaluations(),
            closed_form,
        }
    }
}

#[derive(Serialize)]
struct CostDoc {
    n_op: usize,
    n_params: usize,
    runs: Vec<CostEntry>,
    operating_point_solves: u64,
}

fn kind_of(method: &UqMethod) -> MethodKind {
    match method {
        UqMethod::Mc(_) => MethodKind::Mc,
        UqMethod::Pce(_) => MethodKind::Pce,
    }
}

fn other(kind: MethodKind) -> MethodKind {
    match kind {
        MethodKind::Mc => MethodKind::Pce,
        MethodKind::Pce => MethodKind::Mc,
    }
}

/// Closed-form evaluation counts of a UQ run (`gsa` selects pick-freeze for MC).
fn closed_form(ctx: &Context, method: &UqMethod, gsa: bool) -> Result<u64> {
    let n_op = ctx.study.opset.len() as u64;
    let n = ctx.study.space.len();
    Ok(match method {
        UqMethod::Mc(s) if gsa => CostReport::mc_gsa_closed_form(n as u64, s.n_samples as u64, n_op),
        UqMethod::Mc(s) => s.n_samples as u64 * n_op,
        UqMethod::Pce(s) => CostReport::pce_closed_form(required_samples(n, s.degree, s.oversampling)? as u64, n_op),
    })
}

fn write_moments(ctx: &Context, m: &MomentField) -> Result<()> {
    let opset = &ctx.study.opset;
    write_fields(&ctx.path("mean.csv"), opset, &[("value", &m.mean)])?;
    write_fields(&ctx.path("std.csv"), opset, &[("value", &m.std)])
}

fn write_pce(ctx: &Context, pce: Option<&PceModel>, summary: &mut Summary) -> Result<()> {
    if let Some(p) = pce {
        if p.diagnostics.ill_conditioned {
            summary.warnings.push(format!(
                "PCE design matrix is ill-conditioned (condition {:e})",
                p.diagnostics.condition
            ));
        }
        write_json(&ctx.path("pce_model.json"), p)?;
    }
    Ok(())
}

/// Nominal efficiency map and torque envelope.
pub fn cmd_map(ctx: &Context) -> Result<Summary> {
    let study = &ctx.study;
    let mut eff = Vec::with_capacity(study.opset.len());
    for &op in &study.opset.points {
        eff.push(solve_operating_point(&study.ecm, op)?.efficiency);
    }
    write_fields(&ctx.path("map.csv"), &study.opset, &[("value", &eff)])?;

    let omegas: Vec<f64> = match &ctx.config.operating {
        OperatingConfig::Grid(g) => {
            let step = (g.omega_max - g.omega_min) / (g.n_omega - 1) as f64;
            (0..g.n_omega)
                .map(|j| {
                    if j + 1 == g.n_omega {
                        g.omega_max
                    } else {
                        g.omega_min + j as f64 * step
                    }
                })
                .collect()
        }
        OperatingConfig::Cycle(_) => {
            let top = study.opset.points.iter().map(|p| p.omega_m).fold(0.0, f64::max);
            (0..256).map(|j| top * j as f64 / 255.0).collect()
        }
    };
    let env = torque_envelope(&study.ecm, &omegas)?;
    write_columns(
        &ctx.path("envelope.csv"),
        ["omega_rad_s", "torque_max_Nm"],
        &omegas,
        &env,
    )?;
    let mask: Vec<bool> = eff.iter().map(|v| !v.is_nan()).collect();
    ctx.write_meta("map", Some(&mask))?;

    let feasible: Vec<f64> = eff.iter().copied().filter(|v| !v.is_nan()).collect();
    let mut s = Summary::default();
    s.line(format!("operating points: {} ({} feasible)", eff.len(), feasible.len()));
    if !feasible.is_empty() {
        let lo = feasible.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = feasible.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        s.line(format!("efficiency range: [{lo:.6}, {hi:.6}]"));
    }
    s.line(format!(
        "peak torque: {:.6} N m",
        env.iter().copied().fold(0.0, f64::max)
    ));
    Ok(s)
}

/// Mean and standard deviation fields; with `compare`, also the other
/// method and the pointwise absolute differences.
pub fn cmd_uq(ctx: &Context, compare: bool) -> Result<Summary> {
    let model = ctx.model()?;
    let kind = ctx.config.method.kind;
    let mut s = Summary::default();
    ctx.method_warnings(kind, &mut s);
    let method = ctx.config.uq_method(kind);
    let primary = uq(&model, &ctx.study.space, &method, &ctx.exec)?;
    write_moments(ctx, &primary.moments)?;
    let mut runs = vec![CostEntry::new(kind, primary.cost, closed_form(ctx, &method, false)?)];
    let mut pce = primary.pce.clone();
    let mut mask = primary.moments.mask.clone();
    s.line(format!(
        "{kind:?}: {} model evaluations",
        primary.cost.model_evaluations()
    ));

    if compare {
        if kind == MethodKind::Pce {
            ctx.method_warnings(MethodKind::Mc, &mut s);
        }
        let second_method = ctx.config.uq_method(other(kind));
        let second = uq(&model, &ctx.study.space, &second_method, &ctx.exec)?;
        runs.push(CostEntry::new(
            kind_of(&second_method),
            second.cost,
            closed_form(ctx, &second_method, false)?,
        ));
        pce = pce.or(second.pce.clone());
        let (a, b) = (&primary.moments, &second.moments);
        for (m, &ok) in mask.iter_mut().zip(&b.mask) {
            *m &= ok;
        }
        let diff = |x: &[f64], y: &[f64]| -> Vec<f64> {
            x.iter()
                .zip(y)
                .zip(&mask)
                .map(|((p, q), &ok)| if ok { (p - q).abs() } else { f64::NAN })
                .collect()
        };
        let dm = diff(&a.mean, &b.mean);
        let ds = diff(&a.std, &b.std);
        write_fields(&ctx.path("compare_mean.csv"), &ctx.study.opset, &[("value", &dm)])?;
        write_fields(&ctx.path("compare_std.csv"), &ctx.study.opset, &[("value", &ds)])?;
        let max = |v: &[f64]| v.iter().copied().filter(|x| !x.is_nan()).fold(0.0, f64::max);
        s.line(format!("max |mean difference|: {:e}", max(&dm)));
        s.line(format!("max |std difference|: {:e}", max(&ds)));
    }
    write_pce(ctx, pce.as_ref(), &mut s)?;
    write_json(
        &ctx.path("cost.json"),
        &CostDoc {
            n_op: ctx.study.opset.len(),
            n_params: ctx.study.space.len(),
            runs,
            operating_point_solves: model.solve_count(),
        },
    )?;
    s.line(format!(
        "unmasked points: {} of {}",
        mask.iter().filter(|m| **m).count(),
        mask.len()
    ));
    ctx.write_meta(if compare { "uq --compare" } else { "uq" }, Some(&mask))?;
    Ok(s)
}

#[derive(Serialize)]
struct ParameterIndices<'a> {
    parameter: &'a str,
    #[serde(rename = "S_first")]
    s_first: &'a [f64],
    #[serde(rename = "S_total")]
    s_total: &'a [f64],
    #[serde(rename = "G_first")]
    g_first: f64,
    #[serde(rename = "G_total")]
    g_total: f64,
}

#[derive(Serialize)]
struct IndicesDoc<'a> {
    method: Method,
    n_outputs: usize,
    indices: Vec<ParameterIndices<'a>>,
    mask: &'a [bool],
    degenerate: &'a [bool],
    variance: &'a [f64],
}

fn write_indices(ctx: &Context, r: &SensitivityResult) -> Result<()> {
    let gf = r.generalized_first.as_deref().unwrap_or_default();
    let gt = r.generalized_total.as_deref().unwrap_or_default();
    let doc = IndicesDoc {
        method: r.method,
        n_outputs: r.n_components(),
        indices: r
            .parameters
            .iter()
            .enumerate()
            .map(|(n, p)| ParameterIndices {
                parameter: p,
                s_first: &r.first[n],
                s_total: &r.total[n],
                g_first: gf.get(n).copied().unwrap_or(f64::NAN),
                g_total: gt.get(n).copied().unwrap_or(f64::NAN),
            })
            .collect(),
        mask: &r.mask,
        degenerate: &r.degenerate,
        variance: &r.variance,
    };
    write_json(&ctx.path("indices.json"), &doc)
}

fn index_table(r: &SensitivityResult, s: &mut Summary) {
    let gf = r.generalized_first.clone().unwrap_or_default();
    let gt = r.generalized_total.clone().unwrap_or_default();
    let mut order: Vec<usize> = (0..r.parameters.len()).collect();
    order.sort_by(|&a, &b| gt[b].total_cmp(&gt[a]));
    s.line(format!("{:<10} {:>12} {:>12}", "parameter", "G_first", "G_total"));
    for n in order {
        s.line(format!("{:<10} {:>12.6} {:>12.6}", r.parameters[n], gf[n], gt[n]));
    }
    let flagged = r.degenerate.iter().filter(|d| **d).count();
    let masked = r.mask.iter().filter(|m| !**m).count();
    s.line(format!(
        "components: {} ({masked} masked, {flagged} degenerate)",
        r.n_components()
    ));
}

/// Per-component Sobol' maps and generalized indices.
pub fn cmd_gsa(ctx: &Context) -> Result<Summary> {
    let model = ctx.model()?;
    let kind = ctx.config.method.kind;
    let mut s = Summary::default();
    ctx.method_warnings(kind, &mut s);
    let method = ctx.config.uq_method(kind);
    let out = gsa(&model, &ctx.study.space, &method, &ctx.exec)?;
    let r = &out.indices;
    for (n, p) in r.parameters.iter().enumerate() {
        write_fields(
            &ctx.path(&format!("sobol_{p}.csv")),
            &ctx.study.opset,
            &[("first", &r.first[n]), ("total", &r.total[n])],
        )?;
    }
    write_indices(ctx, r)?;
    write_pce(ctx, out.pce.as_ref(), &mut s)?;
    write_json(
        &ctx.path("cost.json"),
        &CostDoc {
            n_op: ctx.study.opset.len(),
            n_params: ctx.study.space.len(),
            runs: vec![CostEntry::new(kind, out.cost, closed_form(ctx, &method, true)?)],
            operating_point_solves: model.solve_count(),
        },
    )?;
    ctx.write_meta("gsa", Some(&r.mask))?;
    s.line(format!("{kind:?}: {} model evaluations", out.cost.model_evaluations()));
    index_table(r, &mut s);
    Ok(s)
}

/// Fix non-influential parameters and compare statistics with the full model.
pub fn cmd_reduce(ctx: &Context) -> Result<Summary> {
    let model = ctx.model()?;
    let kind = ctx.config.method.kind;
    let mut s = Summary::default();
    ctx.method_warnings(kind, &mut s);
    let method = ctx.config.uq_method(kind);
    let threshold = ctx.config.reduction.threshold;
    let sens = gsa(&model, &ctx.study.space, &method, &ctx.exec)?;
    let fixed = match &ctx.config.reduction.fixed {
        Some(f) => f.clone(),
        None => select_noninfluential(&sens.indices, threshold)?,
    };
    // The sensitivity fit already carries the moments of the full model.
    let (full, full_cost) = match &sens.pce {
        Some(p) => (pce_moments(p), None),
        None => {
            let run = uq(&model, &ctx.study.space, &method, &ctx.exec)?;
            (run.moments, Some(run.cost))
        }
    };
    let report: ReductionReport =
        reduce_and_compare(&model, &ctx.study.space, &fixed, threshold, &method, &full, &ctx.exec)?;
    let mut runs = vec![CostEntry::new(kind, sens.cost, closed_form(ctx, &method, true)?)];
    if let Some(c) = full_cost {
        runs.push(CostEntry::new(kind, c, closed_form(ctx, &method, false)?));
    }
    write_indices(ctx, &sens.indices)?;
    write_json(&ctx.path("reduction.json"), &report)?;
    let (f, r) = (&report.full, &report.reduced);
    write_fields(
        &ctx.path("reduction.csv"),
        &ctx.study.opset,
        &[
            ("full_mean", &f.mean),
            ("full_std", &f.std),
            ("reduced_mean", &r.mean),
            ("reduced_std", &r.std),
        ],
    )?;
    write_json(
        &ctx.path("cost.json"),
        &CostDoc {
            n_op: ctx.study.opset.len(),
            n_params: ctx.study.space.len(),
            runs,
            operating_point_solves: model.solve_count(),
        },
    )?;
    ctx.write_meta("reduce", Some(&report.full.mask))?;
    index_table(&sens.indices, &mut s);
    s.line(format!(
        "{:<24} {:>12} {:>14} {:>14}",
        "fixed parameters", "threshold", "MAE(mean)", "MAE(std)"
    ));
    let names = if fixed.is_empty() {
        "(none)".to_string()
    } else {
        fixed.join(", ")
    };
    s.line(format!(
        "{names:<24} {threshold:>12} {:>14.6e} {:>14.6e}",
        report.mae_mean, report.mae_std
    ));
    Ok(s)
}

/// Write the synthetic four-phase speed profile as a cycle CSV.
pub fn cmd_cycle(path: &Path, step: f64) -> Result<Summary> {
    let (t, v) = wltp_like(step)?;
    write_speed_cycle(path, &t, &v)?;
    let mut s = Summary::default();
    s.line(format!("{} samples written to {}", t.len(), path.display()));
    Ok(s)
}
