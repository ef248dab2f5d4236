//! End-to-end uncertainty quantification and sensitivity analysis runs.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gsa::{mc_generalized, SensitivityResult};
use crate::pce::{fit_pce, pce_generalized, pce_moments, required_samples, PceModel};
use crate::qoi::{evaluate_model, moments, CostPhase, CostReport, Executor, MomentField, VectorModel};
use crate::space::{pick_freeze, sample, ParameterSpace, SamplingStrategy};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct McSettings {
    pub n_samples: usize,
    pub seed: u64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub strategy: SamplingStrategy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct PceSettings {
    pub degree: u32,
    pub oversampling: f64,
    pub seed: u64,
    #[cfg_attr(feature = "serde", serde(default = "latin_hypercube"))]
    pub strategy: SamplingStrategy,
}

#[cfg(feature = "serde")]
fn latin_hypercube() -> SamplingStrategy {
    SamplingStrategy::LatinHypercube
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "method", rename_all = "lowercase"))]
pub enum UqMethod {
    Mc(McSettings),
    Pce(PceSettings),
}

#[derive(Debug, Clone, PartialEq)]
pub struct UqOutcome {
    pub moments: MomentField,
    pub cost: CostReport,
    pub pce: Option<PceModel>,
}

fn check_model<M: VectorModel + ?Sized>(model: &M, space: &ParameterSpace) -> Result<()> {
    if model.n_inputs() != space.len() {
        return Err(Error::Contract(format!(
            "model takes {} inputs, space has {} parameters",
            model.n_inputs(),
            space.len()
        )));
    }
    Ok(())
}

/// Sample mean and standard deviation from plain Monte Carlo.
pub fn uq_mc<M: VectorModel + ?Sized>(
    model: &M,
    space: &ParameterSpace,
    settings: &McSettings,
    exec: &dyn Executor,
) -> Result<UqOutcome> {
    check_model(model, space)?;
    let s = sample(space, settings.n_samples, settings.seed, settings.strategy)?;
    let mut cost = CostReport::default();
    let q = evaluate_model(model, &s, exec, &mut cost, CostPhase::Sampling)?;
    Ok(UqOutcome {
        moments: moments(&q)?,
        cost,
        pce: None,
    })
}

/// Fit a total-degree expansion on `ceil(C K)` samples.
pub fn fit_surrogate<M: VectorModel + ?Sized>(
    model: &M,
    space: &ParameterSpace,
    settings: &PceSettings,
    exec: &dyn Executor,
    cost: &mut CostReport,
) -> Result<PceModel> {
    check_model(model, space)?;
    let n_s = required_samples(space.len(), settings.degree, settings.oversampling)?;
    let s = sample(space, n_s, settings.seed, settings.strategy)?;
    let q = evaluate_model(model, &s, exec, cost, CostPhase::PceFit)?;
    fit_pce(space, &s, &q, settings.degree, settings.oversampling)
}

/// Moments read off a fitted expansion.
pub fn uq_pce<M: VectorModel + ?Sized>(
    model: &M,
    space: &ParameterSpace,
    settings: &PceSettings,
    exec: &dyn Executor,
) -> Result<UqOutcome> {
    let mut cost = CostReport::default();
    let pce = fit_surrogate(model, space, settings, exec, &mut cost)?;
    Ok(UqOutcome {
        moments: pce_moments(&pce),
        cost,
        pce: Some(pce),
    })
}

pub fn uq<M: VectorModel + ?Sized>(
    model: &M,
    space: &ParameterSpace,
    method: &UqMethod,
    exec: &dyn Executor,
) -> Result<UqOutcome> {
    match method {
        UqMethod::Mc(s) => uq_mc(model, space, s, exec),
        UqMethod::Pce(s) => uq_pce(model, space, s, exec),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GsaOutcome {
    pub indices: SensitivityResult,
    pub cost: CostReport,
    pub pce: Option<PceModel>,
}

/// Pick-and-freeze estimation with `(N + 2) N_s` model runs.
pub fn gsa_mc<M: VectorModel + ?Sized>(
    model: &M,
    space: &ParameterSpace,
    n_samples: usize,
    seed: u64,
    exec: &dyn Executor,
) -> Result<GsaOutcome> {
    check_model(model, space)?;
    let design = pick_freeze(space, n_samples, seed)?;
    let mut cost = CostReport::default();
    let mut eval = |s| evaluate_model(model, s, exec, &mut cost, CostPhase::PickFreeze);
    let f_a = eval(&design.a)?;
    let f_b = eval(&design.b)?;
    let f_ab = design.ab.iter().map(&mut eval).collect::<Result<Vec<_>>>()?;
    let names: Vec<String> = space.names().map(String::from).collect();
    Ok(GsaOutcome {
        indices: mc_generalized(&names, &f_a, &f_b, &f_ab)?,
        cost,
        pce: None,
    })
}

/// Indices from the coefficients of a fitted expansion.
pub fn gsa_pce<M: VectorModel + ?Sized>(
    model: &M,
    space: &ParameterSpace,
    settings: &PceSettings,
    exec: &dyn Executor,
) -> Result<GsaOutcome> {
    let mut cost = CostReport::default();
    let pce = fit_surrogate(model, space, settings, exec, &mut cost)?;
    Ok(GsaOutcome {
        indices: pce_generalized(&pce)?,
        cost,
        pce: Some(pce),
    })
}

pub fn gsa<M: VectorModel + ?Sized>(
    model: &M,
    space: &ParameterSpace,
    method: &UqMethod,
    exec: &dyn Executor,
) -> Result<GsaOutcome> {
    match method {
        UqMethod::Mc(s) => gsa_mc(model, space, s.n_samples, s.seed, exec),
        UqMethod::Pce(s) => gsa_pce(model, space, s, exec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qoi::Sequential;
    use crate::space::RandomParameter;
    use alloc::vec;

    struct Quadratic;

    impl VectorModel for Quadratic {
        fn n_inputs(&self) -> usize {
            2
        }
        fn n_outputs(&self) -> usize {
            2
        }
        fn evaluate(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
            out[0] = 1.0 + x[0] + 0.5 * x[1] * x[1];
            out[1] = x[0] * x[1];
            Ok(())
        }
    }

    fn cube() -> ParameterSpace {
        ParameterSpace::new(vec![
            RandomParameter::uniform("a", 0.0, -1.0, 1.0).unwrap(),
            RandomParameter::uniform("b", 0.0, -1.0, 1.0).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn pce_and_mc_moments_agree_on_a_quadratic() {
        let pce = PceSettings {
            degree: 2,
            oversampling: 2.0,
            seed: 1,
            strategy: SamplingStrategy::LatinHypercube,
        };
        let p = uq_pce(&Quadratic, &cube(), &pce, &Sequential).unwrap();
        assert_eq!(p.cost.pce_fit, 12 * 2);
        // mean 1 + 0.5/3, var 1/3 + 0.25 * 4/45
        assert!((p.moments.mean[0] - (1.0 + 1.0 / 6.0)).abs() < 1e-12);
        assert!((p.moments.std[0].powi(2) - (1.0 / 3.0 + 1.0 / 45.0)).abs() < 1e-12);
        assert!((p.moments.std[1].powi(2) - 1.0 / 9.0).abs() < 1e-12);
        let mc = McSettings {
            n_samples: 40_000,
            seed: 2,
            strategy: SamplingStrategy::PseudoRandom,
        };
        let m = uq_mc(&Quadratic, &cube(), &mc, &Sequential).unwrap();
        assert_eq!(m.cost.sampling, 80_000);
        assert!((m.moments.mean[0] - p.moments.mean[0]).abs() < 0.01);
    }

    #[test]
    fn gsa_costs_match_closed_forms() {
        let g = gsa_mc(&Quadratic, &cube(), 100, 3, &Sequential).unwrap();
        assert_eq!(g.cost.pick_freeze, CostReport::mc_gsa_closed_form(2, 100, 2));
        let pce = PceSettings {
            degree: 2,
            oversampling: 2.0,
            seed: 1,
            strategy: SamplingStrategy::LatinHypercube,
        };
        let p = gsa_pce(&Quadratic, &cube(), &pce, &Sequential).unwrap();
        assert_eq!(p.cost.model_evaluations(), CostReport::pce_closed_form(12, 2));
        let gt = p.indices.generalized_total.unwrap();
        assert!(gt.iter().all(|g| (0.0..=1.0).contains(g)));
    }

    #[test]
    fn model_and_space_must_agree() {
        let one = ParameterSpace::new(vec![RandomParameter::uniform("a", 0.0, -1.0, 1.0).unwrap()]).unwrap();
        let mc = McSettings {
            n_samples: 10,
            seed: 0,
            strategy: SamplingStrategy::PseudoRandom,
        };
        assert!(matches!(
            uq_mc(&Quadratic, &one, &mc, &Sequential),
            Err(Error::Contract(_))
        ));
    }
}
