//! Fourth-order central finite differences on uniformly sampled series.
//!
//! First and second derivatives use five points, third and fourth use seven.
//! Only interior samples (three away from either end) are evaluated.

use std::ops::{Add, Mul};

/// Samples needed on each side of an evaluation point.
pub const HALF_WIDTH: usize = 3;

/// Minimum series length with at least one interior point.
pub const MIN_SAMPLES: usize = 2 * HALF_WIDTH + 1;

const D1: [f64; 7] = [0.0, 1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0, 0.0];
const D2: [f64; 7] = [
    0.0,
    -1.0 / 12.0,
    16.0 / 12.0,
    -30.0 / 12.0,
    16.0 / 12.0,
    -1.0 / 12.0,
    0.0,
];
const D3: [f64; 7] = [0.125, -1.0, 1.625, 0.0, -1.625, 1.0, -0.125];
const D4: [f64; 7] = [
    -1.0 / 6.0,
    2.0,
    -6.5,
    28.0 / 3.0,
    -6.5,
    2.0,
    -1.0 / 6.0,
];

fn apply<T>(f: &[T], i: usize, w: &[f64; 7], scale: f64) -> T
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    debug_assert!(i >= HALF_WIDTH && i + HALF_WIDTH < f.len());
    let base = i - HALF_WIDTH;
    let mut acc = f[i] * 0.0;
    for (k, wk) in w.iter().enumerate() {
        if *wk != 0.0 {
            acc = acc + f[base + k] * *wk;
        }
    }
    acc * scale
}

/// Derivative of the given order (0 to 4) at interior index `i`.
pub fn derivative<T>(f: &[T], i: usize, order: usize, h: f64) -> T
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    match order {
        0 => f[i],
        1 => apply(f, i, &D1, 1.0 / h),
        2 => apply(f, i, &D2, 1.0 / (h * h)),
        3 => apply(f, i, &D3, 1.0 / (h * h * h)),
        4 => apply(f, i, &D4, 1.0 / (h * h * h * h)),
        _ => panic!("derivative order {order} not supported"),
    }
}

/// Indices at which all stencils fit.
pub fn interior(n: usize) -> std::ops::Range<usize> {
    if n < MIN_SAMPLES {
        0..0
    } else {
        HALF_WIDTH..n - HALF_WIDTH
    }
}

/// Observed convergence order between two error levels at step ratio `ratio`.
pub fn observed_order(coarse: f64, fine: f64, ratio: f64) -> f64 {
    (coarse / fine).ln() / ratio.ln()
}
