#![allow(dead_code)]

use effmap_core::ecm::EcmParameters;
use effmap_core::qoi::VectorModel;
use effmap_core::space::{ParameterSpace, RandomParameter};
use effmap_core::Result;

/// Model from a closure.
pub struct FnModel<F: Fn(&[f64], &mut [f64]) + Sync> {
    pub n: usize,
    pub m: usize,
    pub f: F,
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> VectorModel for FnModel<F> {
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

pub fn uniform_space(bounds: &[(f64, f64)]) -> ParameterSpace {
    ParameterSpace::new(
        bounds
            .iter()
            .enumerate()
            .map(|(i, &(lo, hi))| RandomParameter::uniform(format!("x{}", i + 1), 0.5 * (lo + hi), lo, hi).unwrap())
            .collect(),
    )
    .unwrap()
}

/// Orthonormal Legendre polynomials up to degree 4 in closed form.
pub fn legendre(k: u32, z: f64) -> f64 {
    let p = match k {
        0 => 1.0,
        1 => z,
        2 => (3.0 * z * z - 1.0) / 2.0,
        3 => (5.0 * z * z * z - 3.0 * z) / 2.0,
        4 => (35.0 * z.powi(4) - 30.0 * z * z + 3.0) / 8.0,
        _ => panic!("degree {k} not tabulated"),
    };
    (2.0 * k as f64 + 1.0).sqrt() * p
}

pub fn product_basis(alpha: &[u32], z: &[f64]) -> f64 {
    alpha.iter().zip(z).map(|(&a, &zi)| legendre(a, zi)).product()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

pub const ISHIGAMI_A: f64 = 7.0;
pub const ISHIGAMI_B: f64 = 0.1;

pub fn ishigami(x: &[f64]) -> f64 {
    x[0].sin() + ISHIGAMI_A * x[1].sin().powi(2) + ISHIGAMI_B * x[2].powi(4) * x[0].sin()
}

/// Analytic `(S_first, S_total)` of the Ishigami function.
pub fn ishigami_indices() -> ([f64; 3], [f64; 3]) {
    let (a, b) = (ISHIGAMI_A, ISHIGAMI_B);
    let pi4 = std::f64::consts::PI.powi(4);
    let v1 = 0.5 * (1.0 + b * pi4 / 5.0).powi(2);
    let v2 = a * a / 8.0;
    let v13 = b * b * pi4 * pi4 * (1.0 / 18.0 - 1.0 / 50.0);
    let v = v1 + v2 + v13;
    ([v1 / v, v2 / v, 0.0], [(v1 + v13) / v, v2 / v, v13 / v])
}

pub fn ishigami_space() -> ParameterSpace {
    let pi = std::f64::consts::PI;
    uniform_space(&[(-pi, pi); 3])
}

/// Minimum copper loss over a dense sweep of `i_d`, with `i_q` solved
/// from the torque equation. Returns the efficiency, or `None` if no
/// current satisfies both ratings.
pub fn brute_force_efficiency(e: &EcmParameters, t: f64, w: f64, sweep: usize) -> Option<f64> {
    let p = e.pole_pairs as f64;
    let we = p * w;
    let power = t * w;
    let mut best: Option<f64> = None;
    for k in 0..=sweep {
        let i_d = -e.i_max + 2.0 * e.i_max * k as f64 / sweep as f64;
        let flux = e.lambda + (e.l_d - e.l_q) * i_d;
        let i_q = t / (1.5 * p * flux);
        if i_d * i_d + i_q * i_q > e.i_max * e.i_max {
            continue;
        }
        let vd = e.r_s * i_d - we * e.l_q * i_q;
        let vq = e.r_s * i_q + we * (e.l_d * i_d + e.lambda);
        if vd * vd + vq * vq > e.v_max * e.v_max {
            continue;
        }
        let loss = 1.5 * e.r_s * (i_d * i_d + i_q * i_q);
        best = Some(best.map_or(loss, |b: f64| b.min(loss)));
    }
    let loss = best?;
    if power.abs() < 1.0 {
        Some(1.0)
    } else if power > 0.0 {
        Some(power / (power + loss))
    } else {
        let eta = (-power - loss) / -power;
        (eta > 0.0).then_some(eta)
    }
}
