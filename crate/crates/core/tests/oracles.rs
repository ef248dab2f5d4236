//! Independent reference values for the estimators and the operating-point solver.

mod common;

use common::*;
use effmap_core::ecm::{solve_operating_point, torque_envelope, EcmParameters, OperatingPoint};
use effmap_core::pce::{basis_eval, fit_pce, pce_generalized, pce_moments, required_samples, MultiIndexSet};
use effmap_core::pipeline::gsa_mc;
use effmap_core::qoi::{QoiMatrix, Sequential};
use effmap_core::space::{sample, SamplingStrategy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn gauss_legendre_rule_integrates_polynomials() {
    let rule = gauss_legendre(8);
    let total: f64 = rule.iter().map(|(_, w)| w).sum();
    assert!((total - 2.0).abs() < 1e-14);
    let x6: f64 = rule.iter().map(|(x, w)| w * x.powi(6)).sum();
    assert!((x6 - 2.0 / 7.0).abs() < 1e-14);
}

#[test]
fn basis_is_orthonormal_under_quadrature() {
    let rule = gauss_legendre(8);
    let set = MultiIndexSet::total_degree(2, 4).unwrap();
    for a in set.indices() {
        for b in set.indices() {
            let mut integral = 0.0;
            for &(x, wx) in &rule {
                for &(y, wy) in &rule {
                    integral += 0.25 * wx * wy * basis_eval(a, &[x, y]) * basis_eval(b, &[x, y]);
                }
            }
            let expected = if a == b { 1.0 } else { 0.0 };
            assert!((integral - expected).abs() < 1e-12, "{a:?} {b:?}: {integral}");
        }
    }
}

#[test]
fn basis_matches_closed_form_legendre() {
    let set = MultiIndexSet::total_degree(3, 4).unwrap();
    for z in [[-1.0, 0.3, 0.9], [0.0, -0.5, 1.0], [0.77, -0.12, -0.999]] {
        for a in set.indices() {
            assert!((basis_eval(a, &z) - product_basis(a, &z)).abs() < 1e-12);
        }
    }
}

#[test]
fn ishigami_mc_indices() {
    let model = FnModel {
        n: 3,
        m: 1,
        f: |x: &[f64], out: &mut [f64]| out[0] = ishigami(x),
    };
    let r = gsa_mc(&model, &ishigami_space(), 50_000, 3, &Sequential)
        .unwrap()
        .indices;
    let (s, st) = ishigami_indices();
    for n in 0..3 {
        assert!(
            (r.first[n][0] - s[n]).abs() < 0.02,
            "S{} {} vs {}",
            n + 1,
            r.first[n][0],
            s[n]
        );
        assert!(
            (r.total[n][0] - st[n]).abs() < 0.02,
            "ST{} {} vs {}",
            n + 1,
            r.total[n][0],
            st[n]
        );
    }
}

#[test]
fn additive_model_mc_indices() {
    let model = FnModel {
        n: 2,
        m: 1,
        f: |x: &[f64], out: &mut [f64]| out[0] = x[0] + 2.0 * x[1],
    };
    let r = gsa_mc(&model, &uniform_space(&[(0.0, 1.0); 2]), 20_000, 8, &Sequential)
        .unwrap()
        .indices;
    for (n, exact) in [0.2, 0.8].into_iter().enumerate() {
        assert!((r.first[n][0] - exact).abs() < 0.02);
        assert!((r.total[n][0] - exact).abs() < 0.02);
    }
}

/// Eleven inputs on mixed intervals; the output is a known combination of
/// orthonormal Legendre terms, so variances are sums of squared weights.
struct Synthetic {
    terms: Vec<(Vec<u32>, [f64; 2])>,
    bounds: Vec<(f64, f64)>,
}

impl Synthetic {
    fn new() -> Self {
        let n = 11;
        let mut terms = vec![(vec![0; n], [0.9, -0.3])];
        for i in 0..n {
            let mut a = vec![0; n];
            a[i] = 1;
            terms.push((a, [0.1 * (i + 1) as f64, 0.05 * (n - i) as f64]));
        }
        let mut a = vec![0; n];
        a[2] = 2;
        terms.push((a, [0.4, 0.0]));
        let mut a = vec![0; n];
        a[0] = 1;
        a[5] = 1;
        terms.push((a, [0.3, 0.7]));
        let bounds = (0..n).map(|i| (-(i as f64) - 1.0, 2.0 * i as f64 + 0.5)).collect();
        Self { terms, bounds }
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let z: Vec<f64> = x
            .iter()
            .zip(&self.bounds)
            .map(|(&v, &(lo, hi))| (2.0 * v - lo - hi) / (hi - lo))
            .collect();
        for (m, slot) in out.iter_mut().enumerate() {
            *slot = self.terms.iter().map(|(a, w)| w[m] * product_basis(a, &z)).sum();
        }
    }

    /// `(variance, first partials, total partials)` per output.
    fn partials(&self) -> ([f64; 2], Vec<[f64; 2]>, Vec<[f64; 2]>) {
        let n = self.bounds.len();
        let mut var = [0.0; 2];
        let mut first = vec![[0.0; 2]; n];
        let mut total = vec![[0.0; 2]; n];
        for (a, w) in &self.terms {
            let active: Vec<usize> = (0..n).filter(|&i| a[i] > 0).collect();
            for m in 0..2 {
                let v = w[m] * w[m];
                if active.is_empty() {
                    continue;
                }
                var[m] += v;
                for &i in &active {
                    total[i][m] += v;
                }
                if active.len() == 1 {
                    first[active[0]][m] += v;
                }
            }
        }
        (var, first, total)
    }
}

#[test]
fn eleven_parameter_polynomial_indices_are_exact() {
    let syn = Synthetic::new();
    let space = uniform_space(&syn.bounds);
    let ns = required_samples(11, 2, 2.0).unwrap();
    assert_eq!(ns, 156);
    let s = sample(&space, ns, 5, SamplingStrategy::LatinHypercube).unwrap();
    let mut values = vec![0.0; ns * 2];
    for (row, out) in s.rows().zip(values.chunks_mut(2)) {
        syn.eval(row, out);
    }
    let q = QoiMatrix::from_values(values, ns, 2).unwrap();
    let pce = fit_pce(&space, &s, &q, 2, 2.0).unwrap();
    let r = pce_generalized(&pce).unwrap();
    let (var, first, total) = syn.partials();

    let mom = pce_moments(&pce);
    assert!((mom.mean[0] - 0.9).abs() < 1e-10 && (mom.mean[1] + 0.3).abs() < 1e-10);
    for m in 0..2 {
        assert!((mom.std[m] - var[m].sqrt()).abs() < 1e-10);
        for n in 0..11 {
            assert!((r.first[n][m] - first[n][m] / var[m]).abs() < 1e-10, "S_{n} at {m}");
            assert!((r.total[n][m] - total[n][m] / var[m]).abs() < 1e-10, "ST_{n} at {m}");
        }
    }
    let trace = var[0] + var[1];
    let gf = r.generalized_first.unwrap();
    let gt = r.generalized_total.unwrap();
    for n in 0..11 {
        assert!((gf[n] - (first[n][0] + first[n][1]) / trace).abs() < 1e-10);
        assert!((gt[n] - (total[n][0] + total[n][1]) / trace).abs() < 1e-10);
    }
}

#[test]
fn solver_agrees_with_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let nominal = EcmParameters::default();
    let mut compared = 0;
    for case in 0..50 {
        let mut e = nominal;
        e.r_s *= rng.gen_range(0.8..1.2);
        e.lambda *= rng.gen_range(0.8..1.2);
        e.l_d *= rng.gen_range(0.8..1.2);
        e.l_q *= rng.gen_range(0.8..1.2);
        let w = rng.gen_range(0.0..1500.0);
        let env = torque_envelope(&e, &[w]).unwrap()[0];
        let t = env * rng.gen_range(-0.95..0.95);
        let sol = solve_operating_point(&e, OperatingPoint::new(t, w)).unwrap();
        let oracle = brute_force_efficiency(&e, t, w, 160_000);
        match oracle {
            Some(eta) => {
                assert!(sol.feasible, "case {case}: solver infeasible at T {t} w {w}");
                assert!(
                    (sol.efficiency - eta).abs() < 1e-4,
                    "case {case}: {} vs {eta}",
                    sol.efficiency
                );
                compared += 1;
            }
            None => assert!(!sol.feasible, "case {case}: oracle infeasible at T {t} w {w}"),
        }
    }
    assert!(compared >= 40, "only {compared} feasible cases");
}
