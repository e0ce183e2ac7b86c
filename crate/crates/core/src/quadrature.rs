//! Globally adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! Used to cross-check closed forms, so it only needs to be robust, not fast.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_SEGMENTS: usize = 20_000;

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub absolute: f64,
    pub relative: f64,
}

impl Tolerance {
    pub fn relative(relative: f64) -> Self {
        Self {
            absolute: 0.0,
            relative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
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
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let sum = f(center - dx) + f(center + dx);
        kronrod += w * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integral of `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let mut heap = BinaryHeap::new();
    let first = kronrod(&f, a, b);
    let (mut value, mut error) = (first.value, first.error);
    heap.push(first);
    let mut evaluations = 15;

    while error > tol.absolute.max(tol.relative * value.abs()) {
        if heap.len() >= MAX_SEGMENTS || !value.is_finite() {
            return Err(Error::Quadrature {
                tolerance: tol.absolute.max(tol.relative * value.abs()),
                estimate: error,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let left = kronrod(&f, worst.a, mid);
        let right = kronrod(&f, mid, worst.b);
        evaluations += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // resum occasionally to keep the running totals from drifting
        if heap.len() % 64 == 0 {
            value = heap.iter().map(|s| s.value).sum();
            error = heap.iter().map(|s| s.error).sum();
        }
    }
    let value = heap.iter().map(|s| s.value).sum();
    Ok(Estimate {
        value,
        error,
        evaluations,
    })
}

/// Integral of `f` over `[a, inf)`.
///
/// The range is cut into pieces `[a + h 2^j, a + h 2^(j+1)]` that are integrated
/// separately. Once successive pieces shrink geometrically the remaining tail is
/// extrapolated, which handles slowly decaying power-law integrands.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: Tolerance) -> Result<Estimate> {
    const MAX_PIECES: usize = 2000;
    let scale = a.abs().max(1.0);
    let piece_tol = Tolerance {
        absolute: tol.absolute / 16.0,
        relative: tol.relative / 16.0,
    };
    let mut head = integrate(&f, a, a + scale, piece_tol)?;
    let (mut value, mut error, mut evaluations) = (head.value, head.error, head.evaluations);
    let mut previous: Option<f64> = None;
    let mut previous_ratio: Option<f64> = None;
    let mut lo = scale;
    for _ in 0..MAX_PIECES {
        let hi = 2.0 * lo;
        head = integrate(&f, a + lo, a + hi, piece_tol)?;
        value += head.value;
        error += head.error;
        evaluations += head.evaluations;
        let target = tol.absolute.max(tol.relative * value.abs());
        if let Some(prev) = previous {
            if head.value == 0.0 && prev == 0.0 {
                return Ok(Estimate { value, error, evaluations });
            }
            let ratio = head.value / prev;
            if ratio > 0.0 && ratio < 0.95 {
                let tail = head.value * ratio / (1.0 - ratio);
                let faster_than_geometric = previous_ratio.is_some_and(|r| ratio < 0.5 * r);
                if faster_than_geometric {
                    // the geometric tail over-estimates what is left
                    if tail.abs() + error <= target {
                        return Ok(Estimate { value, error: error + tail.abs(), evaluations });
                    }
                } else if (0.01 * tail).abs() + error <= target {
                    // power-law tail, extrapolation trusted to ~1%
                    return Ok(Estimate {
                        value: value + tail,
                        error: error + (0.01 * tail).abs(),
                        evaluations,
                    });
                }
            }
            previous_ratio = Some(ratio);
        }
        if !value.is_finite() {
            break;
        }
        previous = Some(head.value);
        lo = hi;
    }
    Err(Error::Quadrature {
        tolerance: tol.absolute.max(tol.relative * value.abs()),
        estimate: error,
    })
}
