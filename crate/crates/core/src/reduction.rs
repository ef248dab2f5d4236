//! Fix parameters with small generalized total indices at their nominal
//! values and measure what the statistics lose.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gsa::SensitivityResult;
use crate::math::{abs, fsum};
use crate::pipeline::{uq, UqMethod};
use crate::qoi::{Executor, MomentField, VectorModel};
use crate::space::ParameterSpace;

pub const DEFAULT_THRESHOLD: f64 = 0.01;

/// Parameters with `G_T < threshold`, ascending by `G_T`.
pub fn select_noninfluential(result: &SensitivityResult, threshold: f64) -> Result<Vec<String>> {
    let gt = result
        .generalized_total
        .as_ref()
        .ok_or_else(|| Error::Contract("generalized indices have not been computed".into()))?;
    let mut picked: Vec<(f64, &String)> = gt
        .iter()
        .zip(&result.parameters)
        .filter(|(g, _)| **g < threshold)
        .map(|(g, name)| (*g, name))
        .collect();
    picked.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(picked.into_iter().map(|(_, n)| n.clone()).collect())
}

/// Mean absolute difference over components unmasked in both fields.
pub fn mae(a: &[f64], b: &[f64], mask_a: &[bool], mask_b: &[bool]) -> Result<f64> {
    if a.len() != b.len() || mask_a.len() != a.len() || mask_b.len() != b.len() {
        return Err(Error::Contract(format!(
            "fields of length {} and {} differ",
            a.len(),
            b.len()
        )));
    }
    let idx: Vec<usize> = (0..a.len()).filter(|&k| mask_a[k] && mask_b[k]).collect();
    if idx.is_empty() {
        return Err(Error::Numerical("no unmasked components in common".into()));
    }
    Ok(fsum(idx.iter().map(|&k| abs(a[k] - b[k]))) / idx.len() as f64)
}

/// Evaluates a full-space model with some inputs pinned at fixed values.
#[derive(Debug)]
pub struct PinnedModel<'a, M: VectorModel + ?Sized> {
    inner: &'a M,
    keep: Vec<usize>,
    base: Vec<f64>,
}

impl<'a, M: VectorModel + ?Sized> PinnedModel<'a, M> {
    /// `keep[j]` is the full-space position of reduced input `j`; all other
    /// inputs take their value from `base`.
    pub fn new(inner: &'a M, keep: Vec<usize>, base: Vec<f64>) -> Result<Self> {
        if base.len() != inner.n_inputs() || keep.iter().any(|&k| k >= base.len()) {
            return Err(Error::Contract("pinned inputs do not match the model".into()));
        }
        Ok(Self { inner, keep, base })
    }
}

impl<M: VectorModel + ?Sized> VectorModel for PinnedModel<'_, M> {
    fn n_inputs(&self) -> usize {
        self.keep.len()
    }

    fn n_outputs(&self) -> usize {
        self.inner.n_outputs()
    }

    fn evaluate(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let mut full = self.base.clone();
        for (&k, &v) in self.keep.iter().zip(x) {
            full[k] = v;
        }
        self.inner.evaluate(&full, out)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReductionReport {
    pub fixed_parameters: Vec<String>,
    pub threshold: f64,
    pub mae_mean: f64,
    pub mae_std: f64,
    /// Components compared.
    pub n_compared: usize,
    pub full: MomentField,
    pub reduced: MomentField,
    /// Model evaluations of the reduced run.
    pub reduced_evaluations: u64,
}

/// Statistics of the model with `fixed` pinned at nominal, compared to `full`.
///
/// The reduced run reuses `method` unchanged; with Monte Carlo the surviving
/// columns are drawn from the same random streams as in the full space.
pub fn reduce_and_compare<M: VectorModel + ?Sized>(
    model: &M,
    space: &ParameterSpace,
    fixed: &[String],
    threshold: f64,
    method: &UqMethod,
    full: &MomentField,
    exec: &dyn Executor,
) -> Result<ReductionReport> {
    let nominal = space.nominal();
    let (reduced, evaluations) = match space.without(fixed)? {
        Some((sub, keep)) => {
            let pinned = PinnedModel::new(model, keep, nominal)?;
            let outcome = uq(&pinned, &sub, method, exec)?;
            (outcome.moments, outcome.cost.model_evaluations())
        }
        None => {
            let m = model.n_outputs();
            let mut mean = vec![0.0; m];
            model.evaluate(&nominal, &mut mean)?;
            let mask: Vec<bool> = mean.iter().map(|v| !v.is_nan()).collect();
            let std = mask.iter().map(|&ok| if ok { 0.0 } else { f64::NAN }).collect();
            (MomentField { mean, std, mask }, m as u64)
        }
    };
    let n_compared = full.mask.iter().zip(&reduced.mask).filter(|(a, b)| **a && **b).count();
    Ok(ReductionReport {
        fixed_parameters: fixed.to_vec(),
        threshold,
        mae_mean: mae(&full.mean, &reduced.mean, &full.mask, &reduced.mask)?,
        mae_std: mae(&full.std, &reduced.std, &full.mask, &reduced.mask)?,
        n_compared,
        full: full.clone(),
        reduced,
        reduced_evaluations: evaluations,
    })
}
