//! Independent uniform inputs, sample designs and the map to the
//! standardized cube `[-1, 1]^N`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{self, StreamRole};

/// Marginal distribution family of a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Marginal {
    #[default]
    Uniform,
}

/// A named random input `X_n ~ U(lower, upper)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RandomParameter {
    pub name: String,
    pub nominal: f64,
    pub lower: f64,
    pub upper: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub marginal: Marginal,
}

impl RandomParameter {
    pub fn uniform(name: impl Into<String>, nominal: f64, lower: f64, upper: f64) -> Result<Self> {
        let p = Self {
            name: name.into(),
            nominal,
            lower,
            upper,
            marginal: Marginal::Uniform,
        };
        p.validate()?;
        Ok(p)
    }

    /// Uniform on `nominal * (1 -/+ halfwidth)`.
    pub fn relative(name: impl Into<String>, nominal: f64, halfwidth: f64) -> Result<Self> {
        let name = name.into();
        if !(halfwidth > 0.0 && halfwidth.is_finite()) {
            return Err(Error::Config(format!(
                "parameter `{name}`: relative halfwidth must be positive, got {halfwidth}"
            )));
        }
        let a = nominal * (1.0 - halfwidth);
        let b = nominal * (1.0 + halfwidth);
        Self::uniform(name, nominal, a.min(b), a.max(b))
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lower.is_finite()
            && self.upper.is_finite()
            && self.nominal.is_finite()
            && self.lower < self.upper
            && self.lower <= self.nominal
            && self.nominal <= self.upper;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "parameter `{}`: need lower < upper and lower <= nominal <= upper, got [{}, {}] with nominal {}",
                self.name, self.lower, self.upper, self.nominal
            )))
        }
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    #[inline]
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// Ordered set of independent random inputs.
///
/// Each parameter carries a stream id that keys its random column. Ids are
/// assigned by position on construction and survive [`ParameterSpace::without`],
/// which gives common random numbers between a space and its reductions.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParameterSpace {
    parameters: Vec<RandomParameter>,
    streams: Vec<u64>,
}

impl ParameterSpace {
    pub fn new(parameters: Vec<RandomParameter>) -> Result<Self> {
        let streams = (0..parameters.len() as u64).collect();
        Self::with_streams(parameters, streams)
    }

    fn with_streams(parameters: Vec<RandomParameter>, streams: Vec<u64>) -> Result<Self> {
        if parameters.is_empty() {
            return Err(Error::Config(
                "parameter space must contain at least one parameter".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for p in &parameters {
            p.validate()?;
            if !seen.insert(p.name.as_str()) {
                return Err(Error::Config(format!("duplicate parameter name `{}`", p.name)));
            }
        }
        Ok(Self { parameters, streams })
    }

    /// Validate a space that was deserialized or assembled by hand.
    pub fn validate(&self) -> Result<()> {
        if self.streams.len() != self.parameters.len() {
            return Err(Error::Config("stream ids do not match parameter count".into()));
        }
        Self::with_streams(self.parameters.clone(), self.streams.clone()).map(|_| ())
    }

    pub fn len(&self) -> usize {
        self.parameters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parameters.is_empty()
    }

    pub fn parameters(&self) -> &[RandomParameter] {
        &self.parameters
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.parameters.iter().map(|p| p.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.parameters.iter().position(|p| p.name == name)
    }

    pub fn nominal(&self) -> Vec<f64> {
        self.parameters.iter().map(|p| p.nominal).collect()
    }

    /// Space with the named parameters removed, plus the positions of the
    /// retained parameters in `self`. Returns `Ok(None)` when nothing remains.
    pub fn without(&self, fixed: &[String]) -> Result<Option<(ParameterSpace, Vec<usize>)>> {
        for name in fixed {
            if self.index_of(name).is_none() {
                return Err(Error::Config(format!("unknown parameter `{name}`")));
            }
        }
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| !fixed.iter().any(|f| *f == self.parameters[i].name))
            .collect();
        if keep.is_empty() {
            return Ok(None);
        }
        let params = keep.iter().map(|&i| self.parameters[i].clone()).collect();
        let streams = keep.iter().map(|&i| self.streams[i]).collect();
        Ok(Some((Self::with_streams(params, streams)?, keep)))
    }

    /// Affine map of a physical point onto `[-1, 1]^N`.
    pub fn standardize(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(point.len())?;
        self.parameters
            .iter()
            .zip(point)
            .map(|(p, &x)| {
                if !(p.lower <= x && x <= p.upper) {
                    return Err(Error::Domain(format!(
                        "parameter `{}` = {x} outside [{}, {}]",
                        p.name, p.lower, p.upper
                    )));
                }
                Ok(((2.0 * x - p.lower - p.upper) / p.width()).clamp(-1.0, 1.0))
            })
            .collect()
    }

    /// Inverse of [`ParameterSpace::standardize`].
    pub fn destandardize(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(z.len())?;
        self.parameters
            .iter()
            .zip(z)
            .map(|(p, &t)| {
                if !(-1.0..=1.0).contains(&t) {
                    return Err(Error::Domain(format!("standardized coordinate {t} outside [-1, 1]")));
                }
                Ok(p.midpoint() + 0.5 * p.width() * t)
            })
            .collect()
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n == self.len() {
            Ok(())
        } else {
            Err(Error::Contract(format!(
                "point has {n} coordinates, space has {}",
                self.len()
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum SamplingStrategy {
    #[default]
    PseudoRandom,
    LatinHypercube,
}

/// `n_samples x n_params` design in physical coordinates, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    values: Vec<f64>,
    n_samples: usize,
    seed: u64,
    space: ParameterSpace,
}

impl SampleMatrix {
    /// Wrap externally generated points; every entry is checked against its bounds.
    pub fn from_rows(space: &ParameterSpace, values: Vec<f64>, seed: u64) -> Result<Self> {
        let n = space.len();
        if !values.len().is_multiple_of(n) {
            return Err(Error::Contract(format!(
                "{} values do not form rows of length {n}",
                values.len()
            )));
        }
        for row in values.chunks(n) {
            space.standardize(row)?;
        }
        Ok(Self {
            n_samples: values.len() / n,
            values,
            seed,
            space: space.clone(),
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_params(&self) -> usize {
        self.space.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn space(&self) -> &ParameterSpace {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n_params();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n_params())
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + Clone + '_ {
        self.values.iter().skip(j).step_by(self.n_params()).copied()
    }

    /// Rows mapped onto `[-1, 1]^N`.
    pub fn standardized(&self) -> Vec<f64> {
        let n = self.n_params();
        let mut out = Vec::with_capacity(self.values.len());
        for row in self.rows() {
            for (p, &x) in self.space.parameters.iter().zip(row).take(n) {
                out.push(((2.0 * x - p.lower - p.upper) / p.width()).clamp(-1.0, 1.0));
            }
        }
        out
    }
}

/// Draw `n_samples` points from `space`.
pub fn sample(space: &ParameterSpace, n_samples: usize, seed: u64, strategy: SamplingStrategy) -> Result<SampleMatrix> {
    sample_role(space, n_samples, seed, strategy, StreamRole::Plain)
}

pub(crate) fn sample_role(
    space: &ParameterSpace,
    n_samples: usize,
    seed: u64,
    strategy: SamplingStrategy,
    role: StreamRole,
) -> Result<SampleMatrix> {
    space.validate()?;
    if n_samples == 0 {
        return Err(Error::Config("n_samples must be at least 1".into()));
    }
    let n = space.len();
    let mut values = alloc::vec![0.0; n_samples * n];
    let mut unit = Vec::with_capacity(n_samples);
    for (j, p) in space.parameters.iter().enumerate() {
        let mut rng = rng::stream(seed, role, space.streams[j]);
        unit.clear();
        match strategy {
            SamplingStrategy::PseudoRandom => {
                unit.extend((0..n_samples).map(|_| rng::unit(&mut rng)));
            }
            SamplingStrategy::LatinHypercube => {
                let mut strata: Vec<usize> = (0..n_samples).collect();
                strata.shuffle(&mut rng);
                unit.extend(
                    strata
                        .iter()
                        .map(|&k| (k as f64 + rng::unit(&mut rng)) / n_samples as f64),
                );
            }
        }
        for (i, &u) in unit.iter().enumerate() {
            values[i * n + j] = (p.lower + p.width() * u).min(p.upper);
        }
    }
    Ok(SampleMatrix {
        values,
        n_samples,
        seed,
        space: space.clone(),
    })
}

/// Pick-and-freeze design: `A`, `B` and the column-swapped hybrids `AB[n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PickFreezeDesign {
    pub a: SampleMatrix,
    pub b: SampleMatrix,
    pub ab: Vec<SampleMatrix>,
}

impl PickFreezeDesign {
    /// Rows over all `N + 2` matrices.
    pub fn total_rows(&self) -> usize {
        self.a.n_samples() + self.b.n_samples() + self.ab.iter().map(SampleMatrix::n_samples).sum::<usize>()
    }
}

pub fn pick_freeze(space: &ParameterSpace, n_samples: usize, seed: u64) -> Result<PickFreezeDesign> {
    if n_samples < 2 {
        return Err(Error::Config("pick-freeze designs need at least 2 samples".into()));
    }
    let a = sample_role(
        space,
        n_samples,
        seed,
        SamplingStrategy::PseudoRandom,
        StreamRole::PickA,
    )?;
    let b = sample_role(
        space,
        n_samples,
        seed,
        SamplingStrategy::PseudoRandom,
        StreamRole::PickB,
    )?;
    let n = space.len();
    let ab = (0..n)
        .map(|col| {
            let mut hybrid = a.clone();
            for i in 0..n_samples {
                hybrid.values[i * n + col] = b.values[i * n + col];
            }
            hybrid
        })
        .collect();
    Ok(PickFreezeDesign { a, b, ab })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn unit_space() -> ParameterSpace {
        ParameterSpace::new(vec![RandomParameter::uniform("x", 0.5, 0.0, 1.0).unwrap()]).unwrap()
    }

    fn circuit_space() -> ParameterSpace {
        ParameterSpace::new(vec![
            RandomParameter::relative("R_s", 8.9462, 0.05).unwrap(),
            RandomParameter::relative("lambda", 0.1144, 0.05).unwrap(),
            RandomParameter::relative("L_d", 0.2055, 0.05).unwrap(),
            RandomParameter::relative("L_q", 0.332, 0.05).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn unit_interval_samples_stay_in_bounds() {
        for seed in 0..20 {
            let s = sample(&unit_space(), 4, seed, SamplingStrategy::PseudoRandom).unwrap();
            assert_eq!(s.n_samples(), 4);
            assert!(s.values().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn latin_hypercube_fills_every_stratum_once() {
        for seed in 0..20 {
            let s = sample(&unit_space(), 4, seed, SamplingStrategy::LatinHypercube).unwrap();
            let mut strata: Vec<usize> = s.values().iter().map(|v| (v * 4.0) as usize).collect();
            strata.sort();
            assert_eq!(strata, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn nominal_resistance_bounds() {
        let space = circuit_space();
        let r = &space.parameters()[0];
        assert!((r.lower - 8.498_89).abs() < 1e-12);
        assert!((r.upper - 9.393_51).abs() < 1e-12);
        let s = sample(&space, 30, 7, SamplingStrategy::PseudoRandom).unwrap();
        assert_eq!(s.values().len(), 120);
        assert!(s.column(0).all(|v| (8.4989..=9.3936).contains(&v)));
    }

    #[test]
    fn sampling_is_reproducible() {
        let space = circuit_space();
        for strategy in [SamplingStrategy::PseudoRandom, SamplingStrategy::LatinHypercube] {
            let a = sample(&space, 100, 42, strategy).unwrap();
            let b = sample(&space, 100, 42, strategy).unwrap();
            assert_eq!(a, b);
            let c = sample(&space, 100, 43, strategy).unwrap();
            assert_ne!(a.values(), c.values());
        }
    }

    #[test]
    fn reduced_space_keeps_surviving_columns() {
        let space = circuit_space();
        let (reduced, keep) = space.without(&["L_d".into(), "L_q".into()]).unwrap().unwrap();
        assert_eq!(keep, vec![0, 1]);
        let full = sample(&space, 50, 3, SamplingStrategy::PseudoRandom).unwrap();
        let part = sample(&reduced, 50, 3, SamplingStrategy::PseudoRandom).unwrap();
        for j in 0..2 {
            assert!(full.column(j).eq(part.column(j)));
        }
        assert!(space
            .without(&space.names().map(String::from).collect::<Vec<_>>())
            .unwrap()
            .is_none());
        assert!(space.without(&["bogus".into()]).is_err());
    }

    #[test]
    fn pick_freeze_structure() {
        let space = circuit_space();
        let d = pick_freeze(&space, 10, 5).unwrap();
        assert_eq!(d.total_rows(), 60);
        for (col, hybrid) in d.ab.iter().enumerate() {
            for j in 0..4 {
                if j == col {
                    assert!(hybrid.column(j).eq(d.b.column(j)));
                } else {
                    assert!(hybrid.column(j).eq(d.a.column(j)));
                }
            }
        }
        assert_ne!(d.a.values(), d.b.values());
        assert!(pick_freeze(&space, 1, 5).is_err());
    }

    #[test]
    fn standardize_maps_nominal_and_bounds() {
        let space = circuit_space();
        let z = space.standardize(&space.nominal()).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-12));
        let upper: Vec<f64> = space.parameters().iter().map(|p| p.upper).collect();
        assert_eq!(space.standardize(&upper).unwrap(), vec![1.0; 4]);
        let mut outside = space.nominal();
        outside[2] = 10.0;
        assert!(matches!(space.standardize(&outside), Err(Error::Domain(_))));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(RandomParameter::uniform("x", 0.0, 1.0, 1.0).is_err());
        assert!(RandomParameter::uniform("x", 2.0, 0.0, 1.0).is_err());
        let p = RandomParameter::uniform("x", 0.5, 0.0, 1.0).unwrap();
        assert!(ParameterSpace::new(vec![p.clone(), p]).is_err());
        assert!(ParameterSpace::new(vec![]).is_err());
        assert!(sample(&unit_space(), 0, 1, SamplingStrategy::PseudoRandom).is_err());
    }

    #[test]
    fn sample_means_converge() {
        let space = circuit_space();
        let n = 20_000;
        let s = sample(&space, n, 11, SamplingStrategy::PseudoRandom).unwrap();
        for (j, p) in space.parameters().iter().enumerate() {
            let mean = s.column(j).sum::<f64>() / n as f64;
            let sigma = p.width() / 12f64.sqrt() / (n as f64).sqrt();
            assert!((mean - p.midpoint()).abs() < 3.0 * sigma, "{}", p.name);
        }
    }
}
