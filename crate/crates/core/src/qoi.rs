//! Operating sets, batch evaluation of vector-valued models, feasibility
//! masks, moment fields and evaluation-cost accounting.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use crate::ecm::{self, EcmField, EcmParameters, OperatingPoint};
use crate::error::{Error, Result};
use crate::math::{mean_variance, sqrt};
use crate::space::{ParameterSpace, SampleMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum OperatingSetKind {
    MapGrid,
    CycleProfile,
}

/// Ordered operating points that make up one multivariate output.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OperatingSet {
    pub points: Vec<OperatingPoint>,
    pub kind: OperatingSetKind,
    /// `(torque rows, speed columns)` of the tensor grid before clipping.
    pub grid_shape: Option<(usize, usize)>,
    /// Sample times of a cycle profile, seconds.
    pub times: Option<Vec<f64>>,
}

impl OperatingSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn profile(times: Vec<f64>, points: Vec<OperatingPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("cycle profile has no operating points".into()));
        }
        if times.len() != points.len() {
            return Err(Error::Contract(format!(
                "{} times for {} points",
                times.len(),
                points.len()
            )));
        }
        if let Some(k) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Config(format!(
                "cycle time is not strictly increasing at sample {} ({} -> {})",
                k + 1,
                times[k],
                times[k + 1]
            )));
        }
        Ok(Self {
            points,
            kind: OperatingSetKind::CycleProfile,
            grid_shape: None,
            times: Some(times),
        })
    }
}

/// Uniform tensor grid over the torque-speed plane.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_omega: usize,
    /// Drop points above the nominal torque envelope.
    pub clip_to_envelope: bool,
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(move |k| if k + 1 == n { b } else { a + k as f64 * step })
}

/// Torque-major grid of operating points, optionally clipped to the
/// torque envelope of `ecm_nominal`.
pub fn build_grid(spec: &GridSpec, ecm_nominal: &EcmParameters) -> Result<OperatingSet> {
    if spec.n_t < 2 || spec.n_omega < 2 {
        return Err(Error::Config(format!(
            "grid needs n_t >= 2 and n_omega >= 2, got {} x {}",
            spec.n_t, spec.n_omega
        )));
    }
    if !(spec.t_min < spec.t_max) || !(spec.omega_min < spec.omega_max) || spec.omega_min < 0.0 {
        return Err(Error::Config(format!(
            "grid ranges must be nondegenerate with omega_min >= 0: T [{}, {}], omega [{}, {}]",
            spec.t_min, spec.t_max, spec.omega_min, spec.omega_max
        )));
    }
    let omegas: Vec<f64> = linspace(spec.omega_min, spec.omega_max, spec.n_omega).collect();
    let envelope = if spec.clip_to_envelope {
        Some(ecm::torque_envelope(ecm_nominal, &omegas)?)
    } else {
        None
    };
    let mut points = Vec::with_capacity(spec.n_t * spec.n_omega);
    for t in linspace(spec.t_min, spec.t_max, spec.n_t) {
        for (j, &w) in omegas.iter().enumerate() {
            let keep = match &envelope {
                Some(env) => env[j] > 0.0 && t.abs() <= env[j],
                None => true,
            };
            if keep {
                points.push(OperatingPoint::new(t, w));
            }
        }
    }
    if points.is_empty() {
        return Err(Error::Config("empty grid after clipping".into()));
    }
    Ok(OperatingSet {
        points,
        kind: OperatingSetKind::MapGrid,
        grid_shape: Some((spec.n_t, spec.n_omega)),
        times: None,
    })
}

/// Deterministic model `R^N -> R^M`; a NaN output marks an infeasible component.
pub trait VectorModel: Sync {
    fn n_inputs(&self) -> usize;
    fn n_outputs(&self) -> usize;
    fn evaluate(&self, x: &[f64], out: &mut [f64]) -> Result<()>;
}

/// Row-parallel scheduling hook. Implementations must call `f` exactly
/// once per row and may run rows concurrently; rows are disjoint slices.
pub trait Executor: Sync {
    fn for_each_row(
        &self,
        out: &mut [f64],
        row_len: usize,
        f: &(dyn Fn(usize, &mut [f64]) -> Result<()> + Sync),
    ) -> Result<()>;
}

/// Runs rows in order on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn for_each_row(
        &self,
        out: &mut [f64],
        row_len: usize,
        f: &(dyn Fn(usize, &mut [f64]) -> Result<()> + Sync),
    ) -> Result<()> {
        for (i, row) in out.chunks_mut(row_len).enumerate() {
            f(i, row)?;
        }
        Ok(())
    }
}

/// `N_s x M` model outputs, row-major, with the common feasibility mask.
#[derive(Debug, Clone, PartialEq)]
pub struct QoiMatrix {
    values: Vec<f64>,
    n_samples: usize,
    n_outputs: usize,
    mask: Vec<bool>,
}

impl QoiMatrix {
    /// Build from raw rows; a column is masked if any row holds a NaN.
    pub fn from_values(values: Vec<f64>, n_samples: usize, n_outputs: usize) -> Result<Self> {
        if values.len() != n_samples * n_outputs {
            return Err(Error::Contract(format!(
                "{} values do not form a {n_samples} x {n_outputs} matrix",
                values.len()
            )));
        }
        let mut mask = vec![true; n_outputs];
        for row in values.chunks(n_outputs.max(1)) {
            for (m, v) in row.iter().enumerate() {
                if v.is_nan() {
                    mask[m] = false;
                }
            }
        }
        Ok(Self {
            values,
            n_samples,
            n_outputs,
            mask,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_outputs..(i + 1) * self.n_outputs]
    }

    pub fn column(&self, m: usize) -> impl Iterator<Item = f64> + Clone + '_ {
        self.values.iter().skip(m).step_by(self.n_outputs).copied()
    }

    /// Restrict the mask (never widens it).
    pub fn restrict_mask(&mut self, mask: &[bool]) {
        for (mine, &other) in self.mask.iter_mut().zip(mask) {
            *mine &= other;
        }
    }
}

/// Logical AND of the masks of several matrices.
pub fn common_mask<'a>(matrices: impl IntoIterator<Item = &'a QoiMatrix>) -> Vec<bool> {
    let mut iter = matrices.into_iter();
    let Some(first) = iter.next() else {
        return Vec::new();
    };
    let mut mask = first.mask.clone();
    for q in iter {
        for (a, &b) in mask.iter_mut().zip(&q.mask) {
            *a &= b;
        }
    }
    mask
}

/// Pointwise mean and standard deviation; NaN at masked components.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MomentField {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub mask: Vec<bool>,
}

/// Columnwise sample mean and unbiased standard deviation.
pub fn moments(q: &QoiMatrix) -> Result<MomentField> {
    if q.n_samples < 2 {
        return Err(Error::Config(format!(
            "standard deviation needs at least 2 samples, got {}",
            q.n_samples
        )));
    }
    let mut mean = vec![f64::NAN; q.n_outputs];
    let mut std = vec![f64::NAN; q.n_outputs];
    for m in 0..q.n_outputs {
        if q.mask[m] {
            let (mu, var) = mean_variance(q.column(m));
            mean[m] = mu;
            std[m] = sqrt(var);
        }
    }
    Ok(MomentField {
        mean,
        std,
        mask: q.mask.clone(),
    })
}

/// Pipeline phase a model evaluation is charged to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostPhase {
    Sampling,
    PickFreeze,
    PceFit,
}

/// Model evaluations, one per (sample, operating point) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CostReport {
    pub sampling: u64,
    pub pick_freeze: u64,
    pub pce_fit: u64,
}

impl CostReport {
    pub fn model_evaluations(&self) -> u64 {
        self.sampling + self.pick_freeze + self.pce_fit
    }

    pub fn charge(&mut self, phase: CostPhase, evaluations: u64) {
        match phase {
            CostPhase::Sampling => self.sampling += evaluations,
            CostPhase::PickFreeze => self.pick_freeze += evaluations,
            CostPhase::PceFit => self.pce_fit += evaluations,
        }
    }

    /// `(N + 2) N_s N_op`.
    pub fn mc_gsa_closed_form(n_params: u64, n_samples: u64, n_op: u64) -> u64 {
        (n_params + 2) * n_samples * n_op
    }

    /// `N_s N_op`.
    pub fn pce_closed_form(n_samples: u64, n_op: u64) -> u64 {
        n_samples * n_op
    }
}

/// Evaluate `model` on every row of `samples`.
pub fn evaluate_model<M: VectorModel + ?Sized>(
    model: &M,
    samples: &SampleMatrix,
    exec: &dyn Executor,
    cost: &mut CostReport,
    phase: CostPhase,
) -> Result<QoiMatrix> {
    if samples.n_params() != model.n_inputs() {
        return Err(Error::Contract(format!(
            "samples have {} columns, model takes {} inputs",
            samples.n_params(),
            model.n_inputs()
        )));
    }
    let m = model.n_outputs();
    let mut values = vec![0.0; samples.n_samples() * m];
    if m > 0 {
        exec.for_each_row(&mut values, m, &|i, row| model.evaluate(samples.row(i), row))?;
    }
    cost.charge(phase, (samples.n_samples() * m) as u64);
    QoiMatrix::from_values(values, samples.n_samples(), m)
}

/// Efficiency over an operating set as a function of the sampled circuit
/// parameters; unsampled parameters stay at `base`.
#[derive(Debug)]
pub struct EcmEfficiencyModel {
    base: EcmParameters,
    bindings: Vec<EcmField>,
    opset: OperatingSet,
    solves: AtomicU64,
}

impl EcmEfficiencyModel {
    /// Bind the columns of `space` to circuit parameters by name.
    pub fn new(base: EcmParameters, space: &ParameterSpace, opset: OperatingSet) -> Result<Self> {
        base.validate()?;
        let bindings = space.names().map(EcmField::from_name).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            base,
            bindings,
            opset,
            solves: AtomicU64::new(0),
        })
    }

    pub fn opset(&self) -> &OperatingSet {
        &self.opset
    }

    pub fn base(&self) -> &EcmParameters {
        &self.base
    }

    /// Operating-point solves performed so far.
    pub fn solve_count(&self) -> u64 {
        self.solves.load(Ordering::Relaxed)
    }

    pub fn parameters_at(&self, x: &[f64]) -> EcmParameters {
        let mut p = self.base;
        for (&field, &v) in self.bindings.iter().zip(x) {
            p.set(field, v);
        }
        p
    }
}

impl VectorModel for EcmEfficiencyModel {
    fn n_inputs(&self) -> usize {
        self.bindings.len()
    }

    fn n_outputs(&self) -> usize {
        self.opset.len()
    }

    fn evaluate(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let params = self.parameters_at(x);
        params.validate()?;
        for (slot, &op) in out.iter_mut().zip(&self.opset.points) {
            *slot = ecm::solve_operating_point(&params, op)?.efficiency;
        }
        self.solves.fetch_add(self.opset.len() as u64, Ordering::Relaxed);
        Ok(())
    }
}

/// Efficiency matrix for circuit parameters drawn in `samples`.
pub fn evaluate_qoi(
    model: &EcmEfficiencyModel,
    samples: &SampleMatrix,
    exec: &dyn Executor,
    cost: &mut CostReport,
) -> Result<QoiMatrix> {
    evaluate_model(model, samples, exec, cost, CostPhase::Sampling)
}

/// Names of the operating-set columns, for diagnostics.
pub fn describe_point(op: &OperatingPoint) -> String {
    format!("(T = {}, w_m = {})", op.torque, op.omega_m)
}
