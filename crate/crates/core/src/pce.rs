//! Total-degree polynomial chaos expansions in orthonormal Legendre
//! polynomials, fitted by least squares on standardized inputs.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gsa::{Method, SensitivityResult};
use crate::math::{binomial, ceil, fsum, sqrt};
use crate::qoi::{MomentField, QoiMatrix};
use crate::space::{ParameterSpace, SampleMatrix};

/// Condition numbers above this are flagged in the fit diagnostics.
pub const ILL_CONDITIONED: f64 = 1e12;

/// Multi-indices of total degree at most `degree`, graded by degree and
/// in descending lexicographic order within a degree.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MultiIndexSet {
    n_params: usize,
    degree: u32,
    indices: Vec<Vec<u32>>,
}

impl MultiIndexSet {
    pub fn total_degree(n_params: usize, degree: u32) -> Result<Self> {
        if n_params == 0 {
            return Err(Error::Config("a multi-index set needs at least one parameter".into()));
        }
        let k = binomial((n_params as u64) + degree as u64, degree as u64)
            .filter(|&k| k <= 50_000_000)
            .ok_or_else(|| {
                Error::Config(format!(
                    "basis of degree {degree} in {n_params} parameters is too large"
                ))
            })?;
        let mut indices = Vec::with_capacity(k as usize);
        let mut current = vec![0u32; n_params];
        for d in 0..=degree {
            compositions(d, 0, &mut current, &mut indices);
        }
        Ok(Self {
            n_params,
            degree,
            indices,
        })
    }

    /// `K = (N + P)! / (N! P!)`.
    pub fn cardinality(n_params: usize, degree: u32) -> Option<u64> {
        binomial(n_params as u64 + degree as u64, degree as u64)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn indices(&self) -> &[Vec<u32>] {
        &self.indices
    }
}

fn compositions(remaining: u32, pos: usize, current: &mut [u32], out: &mut Vec<Vec<u32>>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.to_vec());
        return;
    }
    for v in (0..=remaining).rev() {
        current[pos] = v;
        compositions(remaining - v, pos + 1, current, out);
    }
    current[pos] = 0;
}

/// `sqrt(2k + 1) P_k(z)` for `k = 0..out.len()`.
pub fn legendre_orthonormal(z: f64, out: &mut [f64]) {
    let mut p_prev = 0.0;
    let mut p = 1.0;
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = sqrt((2 * k + 1) as f64) * p;
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * z * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = next;
    }
}

/// Tensorized orthonormal Legendre polynomial at a standardized point.
pub fn basis_eval(alpha: &[u32], z: &[f64]) -> f64 {
    let mut buf = Vec::new();
    alpha.iter().zip(z).fold(1.0, |acc, (&a, &zi)| {
        buf.resize(a as usize + 1, 0.0);
        legendre_orthonormal(zi, &mut buf);
        acc * buf[a as usize]
    })
}

/// `N_s x K` design matrix, row-major, for standardized points `z`.
pub fn design_matrix(set: &MultiIndexSet, z: &[f64]) -> Vec<f64> {
    let n = set.n_params;
    let p = set.degree as usize + 1;
    let rows = z.len() / n;
    let mut table = vec![0.0; n * p];
    let mut out = Vec::with_capacity(rows * set.len());
    for point in z.chunks(n) {
        for (j, &zj) in point.iter().enumerate() {
            legendre_orthonormal(zj, &mut table[j * p..(j + 1) * p]);
        }
        for alpha in &set.indices {
            out.push(
                alpha
                    .iter()
                    .enumerate()
                    .fold(1.0, |acc, (j, &a)| acc * table[j * p + a as usize]),
            );
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitDiagnostics {
    pub n_samples: usize,
    pub oversampling: f64,
    /// Largest residual 2-norm over the fitted components.
    pub residual_norm: f64,
    /// Ratio of extreme singular values of the design matrix.
    pub condition: f64,
    pub ill_conditioned: bool,
}

/// Fitted expansion: `coefficients[k][m]` multiplies basis `k` in component `m`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PceModel {
    pub multi_indices: MultiIndexSet,
    pub coefficients: Vec<Vec<f64>>,
    pub space: ParameterSpace,
    pub mask: Vec<bool>,
    pub diagnostics: FitDiagnostics,
}

/// Samples needed for oversampling `c`: `ceil(c K)`.
pub fn required_samples(n_params: usize, degree: u32, oversampling: f64) -> Result<usize> {
    if !(oversampling >= 1.0 && oversampling.is_finite()) {
        return Err(Error::Config(format!("oversampling must be >= 1, got {oversampling}")));
    }
    let k = MultiIndexSet::cardinality(n_params, degree).ok_or_else(|| {
        Error::Config(format!(
            "basis of degree {degree} in {n_params} parameters is too large"
        ))
    })?;
    Ok(ceil(oversampling * k as f64) as usize)
}

/// Least-squares fit of every unmasked component through one shared SVD of
/// the design matrix. Masked components get zero coefficients.
pub fn fit_pce(
    space: &ParameterSpace,
    samples: &SampleMatrix,
    evals: &QoiMatrix,
    degree: u32,
    oversampling: f64,
) -> Result<PceModel> {
    let set = MultiIndexSet::total_degree(space.len(), degree)?;
    let k = set.len();
    let n_s = samples.n_samples();
    let needed = required_samples(space.len(), degree, oversampling)?;
    if n_s < k {
        return Err(Error::Underdetermined { samples: n_s, terms: k });
    }
    if n_s < needed {
        return Err(Error::Contract(format!(
            "oversampling {oversampling} needs {needed} samples, got {n_s}"
        )));
    }
    if samples.space() != space || samples.n_params() != space.len() {
        return Err(Error::Contract(
            "samples were drawn from a different parameter space".into(),
        ));
    }
    if evals.n_samples() != n_s {
        return Err(Error::Contract(format!(
            "{} evaluations for {n_s} samples",
            evals.n_samples()
        )));
    }
    let m = evals.n_outputs();
    let mask = evals.mask().to_vec();

    let phi = DMatrix::from_row_slice(n_s, k, &design_matrix(&set, &samples.standardized()));
    let svd = phi.clone().svd(true, true);
    let sv = &svd.singular_values;
    let (s_max, s_min) = (sv.max(), sv.min());
    let condition = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    if !(s_min > f64::EPSILON * s_max * n_s as f64) {
        return Err(Error::Numerical(format!(
            "design matrix is rank deficient (condition {condition:e})"
        )));
    }

    let y = DMatrix::from_fn(n_s, m, |i, j| if mask[j] { evals.values()[i * m + j] } else { 0.0 });
    let c = svd
        .solve(&y, 0.0)
        .map_err(|e| Error::Numerical(format!("least-squares solve failed: {e}")))?;
    let residual = &phi * &c - &y;
    let residual_norm = (0..m).map(|j| residual.column(j).norm()).fold(0.0, f64::max);
    if !residual_norm.is_finite() || c.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite expansion coefficients".into()));
    }

    let coefficients = (0..k).map(|r| (0..m).map(|j| c[(r, j)]).collect()).collect();
    Ok(PceModel {
        multi_indices: set,
        coefficients,
        space: space.clone(),
        mask,
        diagnostics: FitDiagnostics {
            n_samples: n_s,
            oversampling,
            residual_norm,
            condition,
            ill_conditioned: condition > ILL_CONDITIONED,
        },
    })
}

impl PceModel {
    pub fn n_outputs(&self) -> usize {
        self.mask.len()
    }

    /// Surrogate outputs at a physical point; NaN at masked components.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.space.standardize(x)?;
        let psi = design_matrix(&self.multi_indices, &z);
        Ok((0..self.n_outputs())
            .map(|j| {
                if self.mask[j] {
                    fsum(psi.iter().zip(&self.coefficients).map(|(p, row)| p * row[j]))
                } else {
                    f64::NAN
                }
            })
            .collect())
    }

    fn coefficient_column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.coefficients.iter().map(move |row| row[j])
    }
}

/// Mean `c_0` and variance `sum_{alpha != 0} c_alpha^2` per component.
pub fn pce_moments(model: &PceModel) -> MomentField {
    let m = model.n_outputs();
    let mut mean = vec![f64::NAN; m];
    let mut std = vec![f64::NAN; m];
    for j in (0..m).filter(|&j| model.mask[j]) {
        mean[j] = model.coefficients[0][j];
        std[j] = sqrt(fsum(model.coefficient_column(j).skip(1).map(|c| c * c)));
    }
    MomentField {
        mean,
        std,
        mask: model.mask.clone(),
    }
}

/// Sobol' indices from the partition of squared coefficients.
pub fn pce_sobol(model: &PceModel) -> Result<SensitivityResult> {
    let m = model.n_outputs();
    let n = model.multi_indices.n_params;
    let idx = model.multi_indices.indices();
    let mut variance = vec![f64::NAN; m];
    let mut first = vec![vec![f64::NAN; m]; n];
    let mut total = vec![vec![f64::NAN; m]; n];
    for j in (0..m).filter(|&j| model.mask[j]) {
        let sq = |pred: &dyn Fn(&[u32]) -> bool| {
            fsum(
                idx.iter()
                    .zip(model.coefficient_column(j))
                    .filter(|(a, _)| pred(a))
                    .map(|(_, c)| c * c),
            )
        };
        variance[j] = sq(&|a| a.iter().any(|&v| v > 0));
        for p in 0..n {
            first[p][j] = sq(&|a| a[p] > 0 && a.iter().enumerate().all(|(q, &v)| q == p || v == 0));
            total[p][j] = sq(&|a| a[p] > 0);
        }
    }
    let names = model.space.names().map(Into::into).collect();
    SensitivityResult::from_partials(names, Method::Pce, variance, first, total, model.mask.clone())
}

/// [`pce_sobol`] plus generalized indices.
pub fn pce_generalized(model: &PceModel) -> Result<SensitivityResult> {
    let mut r = pce_sobol(model)?;
    r.aggregate()?;
    Ok(r)
}
