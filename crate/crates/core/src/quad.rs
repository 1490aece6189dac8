//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let (f1, f2) = (f(c - h * XGK[i]), f(c + h * XGK[i]));
        k += WGK[i] * (f1 + f2);
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Piece {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then(other.lo.total_cmp(&self.lo))
    }
}

const MAX_PIECES: usize = 200_000;

fn ordered_sum<'a>(pieces: impl Iterator<Item = &'a Piece>) -> (f64, f64) {
    let mut v: Vec<&Piece> = pieces.collect();
    v.sort_by(|x, y| x.lo.total_cmp(&y.lo));
    v.iter().fold((0.0, 0.0), |(s, e), p| (s + p.value, e + p.error))
}

/// `∫_a^b f` to absolute-or-relative tolerance `tol`.
///
/// Globally adaptive: the piece with the largest error estimate is bisected
/// until the summed estimate falls below `tol·max(|∫f|, 1)`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let piece = |lo: f64, hi: f64| -> Result<Piece> {
        let (value, error) = kronrod(&f, lo, hi);
        // Estimates at rounding level carry no information.
        let error = if error <= 50.0 * f64::EPSILON * value.abs() { 0.0 } else { error };
        if !value.is_finite() {
            return Err(Error::NonConvergence(format!("non-finite integrand on [{lo}, {hi}]")));
        }
        Ok(Piece { lo, hi, value, error })
    };
    let first = piece(a, b)?;
    let (mut value, mut error) = (first.value, first.error);
    let mut heap = BinaryHeap::from([first]);
    // Pieces too narrow to bisect in floating point.
    let mut frozen: Vec<Piece> = Vec::new();
    loop {
        if error <= tol * value.abs().max(1.0) {
            // Running sums drift; confirm with an exact pass.
            (value, error) = ordered_sum(heap.iter().chain(&frozen));
            if error <= tol * value.abs().max(1.0) {
                return Ok(value);
            }
        }
        let Some(worst) = heap.pop() else {
            return Err(Error::NonConvergence(format!("quadrature error {error:e} at floating-point resolution")));
        };
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi) {
            frozen.push(worst);
            continue;
        }
        let (left, right) = (piece(worst.lo, mid)?, piece(mid, worst.hi)?);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        if heap.len() > MAX_PIECES {
            return Err(Error::NonConvergence(format!("quadrature error {error:e} after {MAX_PIECES} subintervals")));
        }
    }
}
