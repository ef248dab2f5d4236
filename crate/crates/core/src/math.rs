//! Floating-point helpers that behave identically with and without `std`.

use alloc::vec::Vec;

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn sin_cos(x: f64) -> (f64, f64) {
    libm::sincos(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

/// Correctly rounded sum of `values` (Shewchuk's exact partials).
///
/// The result does not depend on the order of summation, so reductions
/// stay bit-identical under any evaluation schedule. Non-finite inputs
/// fall back to plain IEEE accumulation.
pub fn fsum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    let mut special = 0.0;
    let mut has_special = false;
    for value in values {
        if !value.is_finite() {
            special += value;
            has_special = true;
            continue;
        }
        let mut x = value;
        let mut kept = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if abs(x) < abs(y) {
                core::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        partials.truncate(kept);
        partials.push(x);
    }
    if has_special {
        return special;
    }
    round_partials(&partials)
}

fn round_partials(partials: &[f64]) -> f64 {
    let mut n = partials.len();
    if n == 0 {
        return 0.0;
    }
    n -= 1;
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        let y_rounded = hi - x;
        lo = y - y_rounded;
        if lo != 0.0 {
            break;
        }
    }
    // Half-way case: the next partial decides the rounding direction.
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        if y == x - hi {
            hi = x;
        }
    }
    hi
}

/// Mean and sum of squared deviations of a sample, shifted by its minimum
/// so that identical values give exactly zero spread. Every step is order
/// independent, so permuting the sample leaves the result bit-identical.
pub(crate) fn shifted_moments<I>(values: I) -> (f64, f64, usize)
where
    I: IntoIterator<Item = f64> + Clone,
{
    let mut count = 0usize;
    let shift = values.clone().into_iter().fold(f64::INFINITY, |m, v| {
        count += 1;
        if v < m || v.is_nan() {
            v
        } else {
            m
        }
    });
    if count == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let mean_dev = fsum(values.clone().into_iter().map(|v| v - shift)) / count as f64;
    let ss = fsum(values.into_iter().map(|v| {
        let d = (v - shift) - mean_dev;
        d * d
    }));
    (shift + mean_dev, ss, count)
}

/// Sample mean and unbiased variance.
pub fn mean_variance<I>(values: I) -> (f64, f64)
where
    I: IntoIterator<Item = f64> + Clone,
{
    let (mean, ss, n) = shifted_moments(values);
    if n < 2 {
        return (mean, f64::NAN);
    }
    (mean, ss / (n - 1) as f64)
}

/// Binomial coefficient, `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}
