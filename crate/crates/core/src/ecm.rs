//! Steady-state PMSM model in the rotor d-q frame.
//!
//! With `w_e = p * w_m` the stator voltages are
//!
//! ```text
//! v_d = R_s i_d - w_e L_q i_q
//! v_q = R_s i_q + w_e (L_d i_d + lambda)
//! ```
//!
//! and the electromagnetic torque is `T = 3/2 p (lambda i_q + (L_d - L_q) i_d i_q)`.
//! For a requested `(T, w_m)` the solver picks the current pair on the
//! constant-torque curve that minimizes total loss while respecting the
//! peak current and peak voltage ratings.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, sin_cos, sqrt};

/// Output power below which an operating point counts as idle.
pub const IDLE_POWER_W: f64 = 1.0;

const BETA_TOL: f64 = 1e-10;
const COARSE_SCAN: usize = 64;
const FINE_SCAN: usize = 1024;
const ENVELOPE_SCAN: usize = 720;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Equivalent-circuit parameters and ratings.
///
/// Currents and voltages are peak phase quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct EcmParameters {
    /// Phase resistance, ohm.
    pub r_s: f64,
    /// Magnet flux linkage, Wb.
    pub lambda: f64,
    /// d-axis inductance, H.
    pub l_d: f64,
    /// q-axis inductance, H.
    pub l_q: f64,
    pub pole_pairs: u32,
    /// Peak phase current rating, A.
    pub i_max: f64,
    /// Peak phase voltage rating, V.
    pub v_max: f64,
    /// Hysteresis loss at nominal flux per electrical rad/s, W s/rad.
    pub k_hyst: f64,
    /// Eddy-current loss at nominal flux, W s^2/rad^2.
    pub k_eddy: f64,
    /// Bearing friction, W s/rad.
    pub k_fric: f64,
    /// Windage, W s^3/rad^3.
    pub k_wind: f64,
}

impl Default for EcmParameters {
    /// Nominal circuit values of the reference machine. Only copper
    /// losses are active.
    fn default() -> Self {
        Self {
            r_s: 8.9462,
            lambda: 0.1144,
            l_d: 0.2055,
            l_q: 0.332,
            pole_pairs: 3,
            i_max: 0.2,
            v_max: 400.0,
            k_hyst: 0.0,
            k_eddy: 0.0,
            k_fric: 0.0,
            k_wind: 0.0,
        }
    }
}

impl EcmParameters {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("r_s", self.r_s),
            ("lambda", self.lambda),
            ("l_d", self.l_d),
            ("l_q", self.l_q),
            ("v_max", self.v_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("`{name}` must be positive and finite, got {v}")));
            }
        }
        let non_negative = [
            ("i_max", self.i_max),
            ("k_hyst", self.k_hyst),
            ("k_eddy", self.k_eddy),
            ("k_fric", self.k_fric),
            ("k_wind", self.k_wind),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "`{name}` must be non-negative and finite, got {v}"
                )));
            }
        }
        if self.pole_pairs == 0 {
            return Err(Error::Config("`pole_pairs` must be at least 1".into()));
        }
        Ok(())
    }

    pub fn get(&self, field: EcmField) -> f64 {
        match field {
            EcmField::Rs => self.r_s,
            EcmField::Lambda => self.lambda,
            EcmField::Ld => self.l_d,
            EcmField::Lq => self.l_q,
        }
    }

    pub fn set(&mut self, field: EcmField, value: f64) {
        match field {
            EcmField::Rs => self.r_s = value,
            EcmField::Lambda => self.lambda = value,
            EcmField::Ld => self.l_d = value,
            EcmField::Lq => self.l_q = value,
        }
    }

    #[inline]
    fn torque_constant(&self) -> f64 {
        1.5 * self.pole_pairs as f64
    }
}

/// Circuit parameters that may be treated as random inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EcmField {
    Rs,
    Lambda,
    Ld,
    Lq,
}

impl EcmField {
    pub const ALL: [EcmField; 4] = [EcmField::Rs, EcmField::Lambda, EcmField::Ld, EcmField::Lq];

    pub fn name(self) -> &'static str {
        match self {
            EcmField::Rs => "R_s",
            EcmField::Lambda => "lambda",
            EcmField::Ld => "L_d",
            EcmField::Lq => "L_q",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name).ok_or_else(|| {
            Error::Config(format!(
                "unknown model parameter `{name}` (expected R_s, lambda, L_d or L_q)"
            ))
        })
    }
}

/// Torque (N m) and mechanical speed (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OperatingPoint {
    pub torque: f64,
    pub omega_m: f64,
}

impl OperatingPoint {
    pub fn new(torque: f64, omega_m: f64) -> Self {
        Self { torque, omega_m }
    }

    #[inline]
    pub fn mechanical_power(&self) -> f64 {
        self.torque * self.omega_m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub p_elec: f64,
    pub p_magn: f64,
    pub p_mech: f64,
}

impl LossBreakdown {
    #[inline]
    pub fn total(&self) -> f64 {
        self.p_elec + self.p_magn + self.p_mech
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingSolution {
    pub i_d: f64,
    pub i_q: f64,
    pub v_d: f64,
    pub v_q: f64,
    pub losses: LossBreakdown,
    /// Mechanical power `T * w_m`; negative when generating.
    pub p_out: f64,
    /// NaN when infeasible.
    pub efficiency: f64,
    pub feasible: bool,
    /// `|p_out|` below [`IDLE_POWER_W`]; efficiency is reported as 1.
    pub idle: bool,
}

impl OperatingSolution {
    fn infeasible(op: OperatingPoint) -> Self {
        Self {
            i_d: f64::NAN,
            i_q: f64::NAN,
            v_d: f64::NAN,
            v_q: f64::NAN,
            losses: LossBreakdown {
                p_elec: f64::NAN,
                p_magn: f64::NAN,
                p_mech: f64::NAN,
            },
            p_out: op.mechanical_power(),
            efficiency: f64::NAN,
            feasible: false,
            idle: false,
        }
    }
}

pub fn dq_voltages(ecm: &EcmParameters, i_d: f64, i_q: f64, omega_m: f64) -> (f64, f64) {
    let w_e = ecm.pole_pairs as f64 * omega_m;
    let v_d = ecm.r_s * i_d - w_e * ecm.l_q * i_q;
    let v_q = ecm.r_s * i_q + w_e * (ecm.l_d * i_d + ecm.lambda);
    (v_d, v_q)
}

pub fn torque(ecm: &EcmParameters, i_d: f64, i_q: f64) -> f64 {
    ecm.torque_constant() * (ecm.lambda * i_q + (ecm.l_d - ecm.l_q) * i_d * i_q)
}

/// Copper, iron and mechanical losses.
///
/// Iron loss scales with the squared stator flux linkage relative to the
/// magnet flux, so `k_hyst` and `k_eddy` are the losses at no load.
pub fn losses(ecm: &EcmParameters, i_d: f64, i_q: f64, omega_m: f64) -> LossBreakdown {
    let w_e = abs(ecm.pole_pairs as f64 * omega_m);
    let p_elec = 1.5 * ecm.r_s * (i_d * i_d + i_q * i_q);
    let p_magn = if ecm.k_hyst == 0.0 && ecm.k_eddy == 0.0 {
        0.0
    } else {
        let psi_d = ecm.l_d * i_d + ecm.lambda;
        let psi_q = ecm.l_q * i_q;
        let flux_ratio = (psi_d * psi_d + psi_q * psi_q) / (ecm.lambda * ecm.lambda);
        (ecm.k_hyst * w_e + ecm.k_eddy * w_e * w_e) * flux_ratio
    };
    let w = abs(omega_m);
    let p_mech = ecm.k_fric * w + ecm.k_wind * w * w * w;
    LossBreakdown { p_elec, p_magn, p_mech }
}

/// Efficiency for mechanical power `p_out` and total loss, or `None` for a
/// generating point whose losses consume the whole mechanical input.
pub fn efficiency(p_out: f64, total_loss: f64) -> Option<f64> {
    if p_out > 0.0 {
        Some(p_out / (p_out + total_loss))
    } else {
        let input = -p_out;
        let eta = (input - total_loss) / input;
        (eta > 0.0).then_some(eta)
    }
}

/// Whether `(i_d, i_q)` satisfies both ratings at `omega_m`.
pub fn within_limits(ecm: &EcmParameters, i_d: f64, i_q: f64, omega_m: f64) -> bool {
    let (v_d, v_q) = dq_voltages(ecm, i_d, i_q, omega_m);
    i_d * i_d + i_q * i_q <= ecm.i_max * ecm.i_max && v_d * v_d + v_q * v_q <= ecm.v_max * ecm.v_max
}

struct TorqueCurve<'a> {
    ecm: &'a EcmParameters,
    torque: f64,
    omega_m: f64,
    k: f64,
    saliency: f64,
}

#[derive(Clone, Copy)]
struct Candidate {
    beta: f64,
    i_d: f64,
    i_q: f64,
    loss: f64,
}

impl<'a> TorqueCurve<'a> {
    fn new(ecm: &'a EcmParameters, op: OperatingPoint) -> Self {
        Self {
            ecm,
            torque: op.torque,
            omega_m: op.omega_m,
            k: ecm.torque_constant(),
            saliency: ecm.l_d - ecm.l_q,
        }
    }

    /// Point on the constant-torque curve along current angle `beta`
    /// (`i_d = I cos beta`, `i_q = I sin beta`), smallest magnitude root.
    fn currents(&self, sin_b: f64, cos_b: f64) -> Option<(f64, f64)> {
        let k1 = self.k * self.ecm.lambda * sin_b;
        let k2 = self.k * self.saliency * sin_b * cos_b;
        let disc = k1 * k1 + 4.0 * k2 * self.torque;
        if !(disc >= 0.0) {
            return None;
        }
        let denom = k1 + libm::copysign(sqrt(disc), k1);
        let magnitude = 2.0 * self.torque / denom;
        if !(magnitude > 0.0 && magnitude.is_finite()) {
            return None;
        }
        let i_d = magnitude * cos_b;
        // Recover i_q from the torque equation so the torque residual is
        // at rounding level.
        let lever = self.k * (self.ecm.lambda + self.saliency * i_d);
        let i_q = if lever != 0.0 {
            self.torque / lever
        } else {
            magnitude * sin_b
        };
        Some((i_d, i_q))
    }

    fn evaluate_sc(&self, beta: f64, sin_b: f64, cos_b: f64) -> Option<Candidate> {
        let (i_d, i_q) = self.currents(sin_b, cos_b)?;
        if !within_limits(self.ecm, i_d, i_q, self.omega_m) {
            return None;
        }
        let loss = losses(self.ecm, i_d, i_q, self.omega_m).total();
        Some(Candidate { beta, i_d, i_q, loss })
    }

    fn evaluate(&self, beta: f64) -> Option<Candidate> {
        let (s, c) = sin_cos(beta);
        self.evaluate_sc(beta, s, c)
    }

    /// Best feasible grid point of a uniform scan over `(lo, lo + pi)`.
    fn scan(&self, lo: f64, n: usize) -> Option<(usize, Candidate)> {
        let step = core::f64::consts::PI / n as f64;
        let (step_s, step_c) = sin_cos(step);
        let (mut s, mut c) = sin_cos(lo + 0.5 * step);
        let mut best: Option<(usize, Candidate)> = None;
        for k in 0..n {
            let beta = lo + (k as f64 + 0.5) * step;
            if let Some(cand) = self.evaluate_sc(beta, s, c) {
                if best.is_none_or(|(_, b)| cand.loss < b.loss) {
                    best = Some((k, cand));
                }
            }
            let next_s = s * step_c + c * step_s;
            c = c * step_c - s * step_s;
            s = next_s;
        }
        best
    }

    /// Feasibility boundary between an infeasible and a feasible angle.
    fn boundary(&self, mut outside: f64, mut inside: Candidate) -> Candidate {
        while abs(outside - inside.beta) > BETA_TOL {
            let mid = 0.5 * (outside + inside.beta);
            match self.evaluate(mid) {
                Some(c) => inside = c,
                None => outside = mid,
            }
        }
        inside
    }

    fn golden(&self, mut a: f64, mut b: f64) -> Option<Candidate> {
        let loss = |c: Option<Candidate>| c.map_or(f64::INFINITY, |c| c.loss);
        let mut x1 = b - INV_PHI * (b - a);
        let mut x2 = a + INV_PHI * (b - a);
        let mut c1 = self.evaluate(x1);
        let mut c2 = self.evaluate(x2);
        while b - a > BETA_TOL {
            if loss(c1) <= loss(c2) {
                b = x2;
                x2 = x1;
                c2 = c1;
                x1 = b - INV_PHI * (b - a);
                c1 = self.evaluate(x1);
            } else {
                a = x1;
                x1 = x2;
                c1 = c2;
                x2 = a + INV_PHI * (b - a);
                c2 = self.evaluate(x2);
            }
        }
        if loss(c1) <= loss(c2) {
            c1
        } else {
            c2
        }
    }

    fn minimize(&self) -> Option<Candidate> {
        let lo = if self.torque > 0.0 { 0.0 } else { -core::f64::consts::PI };
        let hi = lo + core::f64::consts::PI;
        let (n, (k, seed)) = match self.scan(lo, COARSE_SCAN) {
            Some(found) => (COARSE_SCAN, found),
            None => (FINE_SCAN, self.scan(lo, FINE_SCAN)?),
        };
        let step = core::f64::consts::PI / n as f64;
        let left = if k == 0 { lo } else { seed.beta - step };
        let right = if k + 1 == n { hi } else { seed.beta + step };
        let left = match self.evaluate(left) {
            Some(c) => c,
            None => self.boundary(left, seed),
        };
        let right = match self.evaluate(right) {
            Some(c) => c,
            None => self.boundary(right, seed),
        };
        let mut best = seed;
        for cand in [Some(left), Some(right), self.golden(left.beta, right.beta)]
            .into_iter()
            .flatten()
        {
            if cand.loss < best.loss {
                best = cand;
            }
        }
        Some(best)
    }
}

fn zero_torque_currents(ecm: &EcmParameters, omega_m: f64) -> Option<(f64, f64)> {
    let w_e = ecm.pole_pairs as f64 * omega_m;
    let back_emf = w_e * ecm.lambda;
    if back_emf * back_emf <= ecm.v_max * ecm.v_max {
        return Some((0.0, 0.0));
    }
    // Field weakening along the negative d axis: smallest |i_d| on the
    // voltage limit.
    let a = ecm.r_s * ecm.r_s + w_e * w_e * ecm.l_d * ecm.l_d;
    let b = 2.0 * w_e * w_e * ecm.l_d * ecm.lambda;
    let c = back_emf * back_emf - ecm.v_max * ecm.v_max;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    // c > 0 here, so this is the root of smaller magnitude without cancellation.
    let i_d = 2.0 * c / (-b - sqrt(disc));
    let inside = |i: f64| abs(i) <= ecm.i_max && within_limits(ecm, i, 0.0, omega_m);
    // Root rounding can land a few ulps of flux outside the ellipse.
    let ulp = f64::EPSILON * (ecm.lambda / ecm.l_d + abs(i_d));
    [0.0, 1.0, 4.0, 16.0, 64.0]
        .iter()
        .map(|k| i_d - k * ulp)
        .find(|&i| inside(i))
        .map(|i| (i, 0.0))
}

/// Loss-minimizing current pair delivering `op.torque` at `op.omega_m`.
///
/// Returns `feasible = false` when no admissible pair exists. Errors are
/// reserved for invalid input and numerical breakdown.
pub fn solve_operating_point(ecm: &EcmParameters, op: OperatingPoint) -> Result<OperatingSolution> {
    if !(op.omega_m >= 0.0 && op.omega_m.is_finite() && op.torque.is_finite()) {
        return Err(Error::Domain(format!(
            "operating point (T = {}, w_m = {}) needs finite torque and non-negative speed",
            op.torque, op.omega_m
        )));
    }
    let currents = if op.torque == 0.0 {
        zero_torque_currents(ecm, op.omega_m)
    } else {
        TorqueCurve::new(ecm, op).minimize().map(|c| (c.i_d, c.i_q))
    };
    let Some((i_d, i_q)) = currents else {
        return Ok(OperatingSolution::infeasible(op));
    };
    let (v_d, v_q) = dq_voltages(ecm, i_d, i_q, op.omega_m);
    let loss = losses(ecm, i_d, i_q, op.omega_m);
    let total = loss.total();
    if !total.is_finite() {
        return Err(Error::Solver(format!(
            "non-finite loss {total} at (i_d = {i_d}, i_q = {i_q}) for T = {}, w_m = {}",
            op.torque, op.omega_m
        )));
    }
    let p_out = op.mechanical_power();
    let idle = abs(p_out) < IDLE_POWER_W;
    let eta = if idle { Some(1.0) } else { efficiency(p_out, total) };
    Ok(OperatingSolution {
        i_d,
        i_q,
        v_d,
        v_q,
        losses: loss,
        p_out,
        efficiency: eta.unwrap_or(f64::NAN),
        feasible: eta.is_some(),
        idle,
    })
}

/// Largest torque on `[lo, hi]` of `k1 I + k2 I^2`.
fn max_quadratic(k1: f64, k2: f64, lo: f64, hi: f64) -> f64 {
    let f = |i: f64| k1 * i + k2 * i * i;
    let mut best = f(lo).max(f(hi));
    if k2 != 0.0 {
        let vertex = -k1 / (2.0 * k2);
        if vertex > lo && vertex < hi {
            best = best.max(f(vertex));
        }
    }
    best
}

/// Largest motoring torque reachable along current angle `beta`.
fn peak_torque_at(ecm: &EcmParameters, omega_m: f64, beta: f64) -> f64 {
    let (s, c) = sin_cos(beta);
    let w_e = ecm.pole_pairs as f64 * omega_m;
    // |v|^2 = qa I^2 + 2 qb I + qc
    let vd_slope = ecm.r_s * c - w_e * ecm.l_q * s;
    let vq_slope = ecm.r_s * s + w_e * ecm.l_d * c;
    let back_emf = w_e * ecm.lambda;
    let qa = vd_slope * vd_slope + vq_slope * vq_slope;
    let qb = vq_slope * back_emf;
    let qc = back_emf * back_emf - ecm.v_max * ecm.v_max;
    let disc = qb * qb - qa * qc;
    if disc < 0.0 || qa <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let root = sqrt(disc);
    let lo = ((-qb - root) / qa).max(0.0);
    let hi = ((-qb + root) / qa).min(ecm.i_max);
    if !(lo <= hi) {
        return f64::NEG_INFINITY;
    }
    let k = ecm.torque_constant();
    max_quadratic(k * ecm.lambda * s, k * (ecm.l_d - ecm.l_q) * s * c, lo, hi)
}

fn envelope_at(ecm: &EcmParameters, omega_m: f64) -> f64 {
    let step = core::f64::consts::PI / ENVELOPE_SCAN as f64;
    let mut best_k = 0;
    let mut best = f64::NEG_INFINITY;
    for k in 0..=ENVELOPE_SCAN {
        let t = peak_torque_at(ecm, omega_m, k as f64 * step);
        if t > best {
            best = t;
            best_k = k;
        }
    }
    if best == f64::NEG_INFINITY {
        return 0.0;
    }
    let mut a = best_k.saturating_sub(1) as f64 * step;
    let mut b = (best_k + 1).min(ENVELOPE_SCAN) as f64 * step;
    let f = |beta: f64| peak_torque_at(ecm, omega_m, beta);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > BETA_TOL {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    best.max(f1).max(f2).max(0.0)
}

/// Maximum motoring torque at each speed under both ratings.
pub fn torque_envelope(ecm: &EcmParameters, omegas: &[f64]) -> Result<Vec<f64>> {
    omegas
        .iter()
        .map(|&w| {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Domain(format!("envelope speed must be non-negative, got {w}")));
            }
            Ok(envelope_at(ecm, w))
        })
        .collect()
}
