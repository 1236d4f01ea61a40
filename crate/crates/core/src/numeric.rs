//! Small numerical helpers shared by the checks.

use crate::kernel::C64;

/// Kahan-compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: C64,
    comp: C64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: C64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> C64 {
        self.sum
    }
}

impl FromIterator<C64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = C64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// `|a - b| / |b|`, or `|a - b|` when `b` vanishes.
pub fn rel_err(a: C64, b: C64) -> f64 {
    let d = (a - b).norm();
    if b.norm() > 0.0 {
        d / b.norm()
    } else {
        d
    }
}

/// Linear extrapolation to `δ = 0` from samples `v(δ₁)`, `v(δ₂)` of a quantity
/// with an `O(δ)` leading error; the result carries an `O(δ₁δ₂)` error.
pub fn richardson_linear(d1: f64, v1: C64, d2: f64, v2: C64) -> C64 {
    (v2 * d1 - v1 * d2) / (d1 - d2)
}

/// Principal-branch complex power `z^w = exp(w log z)`.
pub fn cpow(z: C64, w: C64) -> C64 {
    (w * z.ln()).exp()
}

/// Outcome of a residue (pole coefficient) comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueCheck {
    /// `(δ, (distance to pole) · value)` samples.
    pub samples: Vec<(f64, C64)>,
    /// Samples extrapolated to the pole.
    pub extrapolated: C64,
    /// Value predicted by the recursion.
    pub expected: C64,
    pub rel_err: f64,
}

impl ResidueCheck {
    pub fn from_samples(samples: Vec<(f64, C64)>, expected: C64) -> Self {
        assert!(samples.len() >= 2);
        let (d1, v1) = samples[0];
        let (d2, v2) = samples[1];
        let extrapolated = richardson_linear(d1, v1, d2, v2);
        ResidueCheck {
            rel_err: rel_err(extrapolated, expected),
            samples,
            extrapolated,
            expected,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(C64::new(1e16, 0.0));
        for _ in 0..10 {
            s.add(C64::new(1.0, 0.0));
        }
        s.add(C64::new(-1e16, 0.0));
        assert_eq!(s.value(), C64::new(10.0, 0.0));
    }

    #[test]
    fn richardson_cancels_linear_term() {
        let v = |d: f64| C64::new(2.0 + 3.0 * d + 5.0 * d * d, 0.0);
        let r = richardson_linear(1e-2, v(1e-2), 1e-3, v(1e-3));
        // the quadratic term leaves -5 d1 d2
        assert!((r - C64::new(2.0 - 5e-5, 0.0)).norm() < 1e-12);
    }
}
