//! Adaptive Gauss–Kronrod (7/15) quadrature with global interval bisection.
//!
//! The integrator keeps a max-heap of subintervals keyed by their error
//! estimate and repeatedly bisects the worst one until the summed error meets
//! `max(abs_tol, rel_tol * |I|)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

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
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tail cutoff for semi-infinite integrals, relative to the largest sampled
/// integrand value.
pub const TAIL_CUTOFF: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(centre - dx) + f(centre + dx);
        kron += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kron * half;
    let mut error = ((kron - gauss) * half).abs();
    if !value.is_finite() {
        error = f64::INFINITY;
    }
    Segment { a, b, value, error }
}

impl Quadrature {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    /// Integrates `f` over the finite interval `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<Integral> {
        self.integrate_breaks(f, &[a, b])
    }

    /// Integrates over `[points[0], points[last]]`, seeding the adaptive
    /// scheme with one segment per consecutive pair of breakpoints.
    pub fn integrate_breaks<F: Fn(f64) -> f64>(&self, f: F, points: &[f64]) -> Result<Integral> {
        if points.len() < 2 {
            return Err(Error::domain("integrate", "need at least two breakpoints"));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::domain("integrate", "breakpoints must be finite"));
        }
        let mut heap = BinaryHeap::new();
        for w in points.windows(2) {
            if w[1] > w[0] {
                heap.push(kronrod(&f, w[0], w[1]));
            } else if w[1] < w[0] {
                return Err(Error::domain("integrate", "breakpoints must be sorted"));
            }
        }
        if heap.is_empty() {
            return Ok(Integral {
                value: 0.0,
                error: 0.0,
                intervals: 0,
            });
        }

        loop {
            let (value, error) = heap
                .iter()
                .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
            let target = self.abs_tol.max(self.rel_tol * value.abs());
            if error <= target {
                return Ok(Integral {
                    value,
                    error,
                    intervals: heap.len(),
                });
            }
            let worst = heap.pop().expect("heap is non-empty");
            let mid = 0.5 * (worst.a + worst.b);
            let splittable = mid > worst.a && mid < worst.b;
            if heap.len() + 2 > self.max_intervals || !splittable || !value.is_finite() {
                heap.push(worst);
                return Err(Error::Quadrature {
                    value,
                    error,
                    intervals: heap.len(),
                });
            }
            heap.push(kronrod(&f, worst.a, mid));
            heap.push(kronrod(&f, mid, worst.b));
        }
    }

    /// Integrates over `[a, ∞)`. The tail is truncated at the first point of
    /// a geometric scan (spacing set by `scale`) past the integrand's peak where
    /// `|f|` drops below [`TAIL_CUTOFF`] times that peak.
    pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
        &self,
        f: F,
        a: f64,
        scale: f64,
    ) -> Result<Integral> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::domain(
                "integrate_semi_infinite",
                "scale must be positive",
            ));
        }
        let points = tail_points(&f, a, scale)?;
        self.integrate_breaks(f, &points)
    }
}

/// Breakpoints `a, a + scale/64, a + scale/32, ...` up to the tail cutoff.
pub(crate) fn tail_points<F: Fn(f64) -> f64>(f: &F, a: f64, scale: f64) -> Result<Vec<f64>> {
    let mut points = vec![a];
    let mut peak = f(a).abs();
    let mut step = scale / 64.0;
    for _ in 0..80 {
        let x = a + step;
        let fx = f(x).abs();
        points.push(x);
        if fx > peak {
            peak = fx;
        } else if peak > 0.0 && fx <= TAIL_CUTOFF * peak {
            return Ok(points);
        }
        step *= 2.0;
    }
    Err(Error::domain(
        "integrate_semi_infinite",
        "integrand does not decay within the scanned range",
    ))
}
