//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate meets `max(abs_tol, rel_tol * |integral|)`. Semi-infinite ranges
//! are mapped onto `(0, 1]` with `x = a + (1 - t) / t`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Result, TailError};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-14,
            rel_tol: 1e-10,
            max_intervals: 2000,
        }
    }
}

impl QuadOptions {
    pub fn rel(rel_tol: f64) -> Self {
        QuadOptions {
            rel_tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
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
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrate `f` over the finite interval `[a, b]`.
const INITIAL_PANELS: usize = 8;

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Quad> {
    if a == b {
        return Ok(Quad {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(TailError::Numeric(format!("finite quadrature called on [{a}, {b}]")));
    }
    // Start from a few equal panels: one 15-point rule can miss a narrow
    // peak entirely and report zero error.
    let mut heap = BinaryHeap::new();
    let (mut total, mut total_err) = (0.0, 0.0);
    for k in 0..INITIAL_PANELS {
        let pa = a + (b - a) * k as f64 / INITIAL_PANELS as f64;
        let pb = if k + 1 == INITIAL_PANELS {
            b
        } else {
            a + (b - a) * (k + 1) as f64 / INITIAL_PANELS as f64
        };
        let (value, error) = gk15(&f, pa, pb);
        heap.push(Piece {
            a: pa,
            b: pb,
            value,
            error,
        });
        total += value;
        total_err += error;
    }
    loop {
        if !total.is_finite() {
            return Err(TailError::Numeric(format!(
                "quadrature on [{a}, {b}] produced a non-finite value"
            )));
        }
        if total_err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            break;
        }
        if heap.len() >= opts.max_intervals {
            return Err(TailError::Numeric(format!(
                "quadrature on [{a}, {b}] did not converge: estimate {total:e} with error {total_err:e} after {} intervals",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Interval cannot be split further in floating point.
            heap.push(Piece { error: 0.0, ..worst });
            total_err -= worst.error;
            continue;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Piece {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Piece {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // Re-sum to shed the drift of incremental updates.
    let pieces = heap.into_vec();
    let value = pieces.iter().map(|p| p.value).sum();
    let error = pieces.iter().map(|p| p.error).sum();
    Ok(Quad {
        value,
        error,
        intervals: pieces.len(),
    })
}

/// Integrate `f` over `[a, +inf)`.
pub fn integrate_upper<F: Fn(f64) -> f64>(f: F, a: f64, opts: QuadOptions) -> Result<Quad> {
    integrate(
        |t| {
            if t <= 0.0 {
                return 0.0;
            }
            let s = (1.0 - t) / t;
            let v = f(a + s) / (t * t);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        opts,
    )
}

/// Integrate `f` over `(-inf, b]`.
pub fn integrate_lower<F: Fn(f64) -> f64>(f: F, b: f64, opts: QuadOptions) -> Result<Quad> {
    integrate_upper(|x| f(-x), -b, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let q = integrate(|x| x.powi(5) - 2.0 * x, -1.0, 2.0, QuadOptions::default()).unwrap();
        assert!((q.value - (64.0 / 6.0 - 1.0 / 6.0 - 3.0)).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_and_peaked() {
        let q = integrate(|x: f64| x.sin(), 0.0, PI, QuadOptions::default()).unwrap();
        assert!((q.value - 2.0).abs() < 1e-12);
        let q = integrate(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, QuadOptions::default()).unwrap();
        let exact = 2.0 * (1.0 / 1e-2) * (1.0f64 / 1e-2).atan();
        assert!(((q.value - exact) / exact).abs() < 1e-10);
    }

    #[test]
    fn semi_infinite() {
        let q = integrate_upper(|x: f64| (-x).exp(), 0.0, QuadOptions::default()).unwrap();
        assert!((q.value - 1.0).abs() < 1e-12);
        let q = integrate_lower(|x: f64| 1.0 / (PI * (1.0 + x * x)), 0.0, QuadOptions::default()).unwrap();
        assert!((q.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        let opts = QuadOptions {
            max_intervals: 4,
            ..Default::default()
        };
        assert!(integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, opts).is_err());
    }
}
