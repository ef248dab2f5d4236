//! Sobol' indices per output component and generalized indices aggregated
//! over components, from pick-and-freeze Monte Carlo evaluations.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::fsum;
use crate::qoi::{common_mask, QoiMatrix};

/// Variances below this are treated as zero.
pub const EPS_VAR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Method {
    Mc,
    Pce,
}

/// First- and total-order indices per component plus their generalized
/// aggregates. Masked or degenerate components carry NaN indices.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SensitivityResult {
    pub parameters: Vec<String>,
    pub method: Method,
    /// `first[n][m]`: S_n at component m.
    pub first: Vec<Vec<f64>>,
    /// `total[n][m]`: S_Tn at component m.
    pub total: Vec<Vec<f64>>,
    /// Output variance per component.
    pub variance: Vec<f64>,
    /// Partial variances behind `first` and `total`.
    pub partial_first: Vec<Vec<f64>>,
    pub partial_total: Vec<Vec<f64>>,
    pub mask: Vec<bool>,
    pub degenerate: Vec<bool>,
    pub generalized_first: Option<Vec<f64>>,
    pub generalized_total: Option<Vec<f64>>,
}

impl SensitivityResult {
    /// Assemble from partial variances; indices are their ratios to `variance`.
    pub fn from_partials(
        parameters: Vec<String>,
        method: Method,
        variance: Vec<f64>,
        partial_first: Vec<Vec<f64>>,
        partial_total: Vec<Vec<f64>>,
        mask: Vec<bool>,
    ) -> Result<Self> {
        let m = variance.len();
        let n = parameters.len();
        let shaped = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == m);
        if mask.len() != m || !shaped(&partial_first) || !shaped(&partial_total) {
            return Err(Error::Contract(
                "partial variances do not match parameters x components".into(),
            ));
        }
        let degenerate: Vec<bool> = variance
            .iter()
            .zip(&mask)
            .map(|(&v, &ok)| ok && !(v >= EPS_VAR))
            .collect();
        let usable = |k: usize| mask[k] && !degenerate[k];
        let ratio = |rows: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            rows.iter()
                .map(|row| {
                    (0..m)
                        .map(|k| if usable(k) { row[k] / variance[k] } else { f64::NAN })
                        .collect()
                })
                .collect()
        };
        Ok(Self {
            first: ratio(&partial_first),
            total: ratio(&partial_total),
            parameters,
            method,
            variance,
            partial_first,
            partial_total,
            mask,
            degenerate,
            generalized_first: None,
            generalized_total: None,
        })
    }

    pub fn n_components(&self) -> usize {
        self.variance.len()
    }

    /// Components entering the generalized traces.
    pub fn usable(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_components()).filter(|&k| self.mask[k] && !self.degenerate[k])
    }

    /// Trace ratios `G_n = sum_m V_n^(m) / sum_m V^(m)` over usable components.
    pub fn aggregate(&mut self) -> Result<()> {
        let idx: Vec<usize> = self.usable().collect();
        let trace = fsum(idx.iter().map(|&k| self.variance[k]));
        if idx.is_empty() || !(trace > 0.0) {
            return Err(Error::ZeroTotalVariance);
        }
        let g = |rows: &Vec<Vec<f64>>| -> Vec<f64> {
            rows.iter()
                .map(|row| fsum(idx.iter().map(|&k| row[k])) / trace)
                .collect()
        };
        self.generalized_first = Some(g(&self.partial_first));
        self.generalized_total = Some(g(&self.partial_total));
        Ok(())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.parameters.iter().position(|p| p == name)
    }
}

fn check_shapes(f_a: &QoiMatrix, f_b: &QoiMatrix, f_ab: &[QoiMatrix], n_params: usize) -> Result<()> {
    if f_ab.len() != n_params {
        return Err(Error::Contract(format!(
            "{} hybrid matrices for {n_params} parameters",
            f_ab.len()
        )));
    }
    let (s, m) = (f_a.n_samples(), f_a.n_outputs());
    for q in core::iter::once(f_b).chain(f_ab) {
        if q.n_samples() != s || q.n_outputs() != m {
            return Err(Error::Contract(format!(
                "pick-freeze matrices disagree in shape: {s} x {m} vs {} x {}",
                q.n_samples(),
                q.n_outputs()
            )));
        }
    }
    if s < 2 {
        return Err(Error::Contract("pick-freeze estimators need at least 2 samples".into()));
    }
    Ok(())
}

/// Saltelli (2010) first-order and Jansen total-order estimators per component.
///
/// Outputs are centered on the column mean of `f_A` before estimation; the
/// first-order estimator is not shift invariant and an offset such as a
/// mean efficiency near 1 would otherwise dominate its sampling error.
pub fn mc_sobol(
    parameters: &[String],
    f_a: &QoiMatrix,
    f_b: &QoiMatrix,
    f_ab: &[QoiMatrix],
) -> Result<SensitivityResult> {
    check_shapes(f_a, f_b, f_ab, parameters.len())?;
    let mask = common_mask(core::iter::once(f_a).chain(core::iter::once(f_b)).chain(f_ab));
    let (s, m) = (f_a.n_samples(), f_a.n_outputs());
    let inv = 1.0 / s as f64;
    let mut variance = vec![f64::NAN; m];
    let mut first = vec![vec![f64::NAN; m]; parameters.len()];
    let mut total = vec![vec![f64::NAN; m]; parameters.len()];
    let mut a = vec![0.0; s];
    let mut b = vec![0.0; s];
    let mut terms = vec![0.0; s];
    for k in (0..m).filter(|&k| mask[k]) {
        let shift = fsum(f_a.column(k)) * inv;
        for (slot, v) in a.iter_mut().zip(f_a.column(k)) {
            *slot = v - shift;
        }
        for (slot, v) in b.iter_mut().zip(f_b.column(k)) {
            *slot = v - shift;
        }
        let mean_a = fsum(a.iter().copied()) * inv;
        variance[k] = fsum(a.iter().map(|x| (x - mean_a) * (x - mean_a))) * inv;
        for (n, hybrid) in f_ab.iter().enumerate() {
            for ((t, h), &ai) in terms.iter_mut().zip(hybrid.column(k)).zip(&a) {
                *t = h - shift - ai;
            }
            first[n][k] = fsum(terms.iter().zip(&b).map(|(d, bi)| bi * d)) * inv;
            total[n][k] = 0.5 * fsum(terms.iter().map(|d| d * d)) * inv;
        }
    }
    SensitivityResult::from_partials(parameters.to_vec(), Method::Mc, variance, first, total, mask)
}

/// [`mc_sobol`] plus generalized indices.
pub fn mc_generalized(
    parameters: &[String],
    f_a: &QoiMatrix,
    f_b: &QoiMatrix,
    f_ab: &[QoiMatrix],
) -> Result<SensitivityResult> {
    let mut r = mc_sobol(parameters, f_a, f_b, f_ab)?;
    r.aggregate()?;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qoi::{evaluate_model, CostPhase, CostReport, Sequential, VectorModel};
    use crate::space::{pick_freeze, ParameterSpace, RandomParameter};

    struct Closure<F: Fn(&[f64], &mut [f64]) + Sync> {
        n: usize,
        m: usize,
        f: F,
    }

    impl<F: Fn(&[f64], &mut [f64]) + Sync> VectorModel for Closure<F> {
        fn n_inputs(&self) -> usize {
            self.n
        }
        fn n_outputs(&self) -> usize {
            self.m
        }
        fn evaluate(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
            (self.f)(x, out);
            Ok(())
        }
    }

    fn cube(n: usize) -> ParameterSpace {
        ParameterSpace::new(
            (0..n)
                .map(|i| RandomParameter::uniform(format!("x{}", i + 1), 0.0, -1.0, 1.0).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn run<F: Fn(&[f64], &mut [f64]) + Sync>(n: usize, m: usize, samples: usize, f: F) -> SensitivityResult {
        let space = cube(n);
        let model = Closure { n, m, f };
        let d = pick_freeze(&space, samples, 2024).unwrap();
        let mut cost = CostReport::default();
        let mut eval = |s| evaluate_model(&model, s, &Sequential, &mut cost, CostPhase::PickFreeze).unwrap();
        let fa = eval(&d.a);
        let fb = eval(&d.b);
        let fab: Vec<QoiMatrix> = d.ab.iter().map(&mut eval).collect();
        assert_eq!(cost.pick_freeze, ((n + 2) * samples * m) as u64);
        let names: Vec<String> = space.names().map(String::from).collect();
        mc_generalized(&names, &fa, &fb, &fab).unwrap()
    }

    #[test]
    fn pass_through_model() {
        let r = run(2, 1, 100_000, |x, y| y[0] = x[0]);
        assert!((r.first[0][0] - 1.0).abs() < 0.01);
        assert!(r.first[1][0].abs() < 0.01);
        assert!(r.total[1][0].abs() < 0.01);
    }

    #[test]
    fn additive_model() {
        let r = run(2, 1, 100_000, |x, y| y[0] = x[0] + 2.0 * x[1]);
        for (n, s) in [0.2, 0.8].into_iter().enumerate() {
            assert!((r.first[n][0] - s).abs() < 0.01);
            assert!((r.total[n][0] - s).abs() < 0.01);
        }
        assert_eq!(r.generalized_first.as_ref().unwrap()[0], r.first[0][0]);
        assert_eq!(r.generalized_total.as_ref().unwrap()[1], r.total[1][0]);
    }

    #[test]
    fn weighted_components() {
        let r = run(2, 2, 50_000, |x, y| {
            y[0] = x[0];
            y[1] = 3.0 * x[1];
        });
        let g = r.generalized_first.unwrap();
        assert!((g[0] - 0.1).abs() < 0.01 && (g[1] - 0.9).abs() < 0.01, "{g:?}");
    }

    #[test]
    fn constant_component_is_degenerate() {
        let r = run(2, 2, 1000, |x, y| {
            y[0] = 0.9;
            y[1] = x[0];
        });
        assert_eq!(r.degenerate, vec![true, false]);
        assert!(r.first[0][0].is_nan());
        let all_const = run_err(|_, y| y[0] = 0.5);
        assert_eq!(all_const, Error::ZeroTotalVariance);
    }

    fn run_err<F: Fn(&[f64], &mut [f64]) + Sync>(f: F) -> Error {
        let space = cube(1);
        let model = Closure { n: 1, m: 1, f };
        let d = pick_freeze(&space, 10, 1).unwrap();
        let mut cost = CostReport::default();
        let mut eval = |s| evaluate_model(&model, s, &Sequential, &mut cost, CostPhase::PickFreeze).unwrap();
        let (fa, fb) = (eval(&d.a), eval(&d.b));
        let fab = vec![eval(&d.ab[0])];
        mc_generalized(&["x1".into()], &fa, &fb, &fab).unwrap_err()
    }

    #[test]
    fn shape_mismatch_is_a_contract_error() {
        let q = QoiMatrix::from_values(vec![1.0, 2.0], 2, 1).unwrap();
        let r = QoiMatrix::from_values(vec![1.0, 2.0, 3.0], 3, 1).unwrap();
        let names = ["x1".to_string()];
        assert!(matches!(
            mc_sobol(&names, &q, &r, std::slice::from_ref(&q)),
            Err(Error::Contract(_))
        ));
        assert!(matches!(mc_sobol(&names, &q, &q, &[]), Err(Error::Contract(_))));
    }
}
