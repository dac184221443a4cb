//! One-dimensional root finding and maximization.
//!
//! Everything here works on plain closures over `f64`; callers choose the
//! grids and tolerances. The maximizer follows a scan-then-refine scheme: a
//! coarse grid locates the basin of the global maximum and golden-section
//! search narrows it, followed by a bisection on the sign of a central
//! difference slope, which resolves the maximizer well below the
//! `sqrt(eps)` limit of comparison-based search.

use crate::error::{Result, TailError};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Relative tolerance used for roots and maximizers: `1e-10 * (1 + |x|)`.
pub const REL_TOL: f64 = 1e-10;

pub fn tol_at(x: f64) -> f64 {
    REL_TOL * (1.0 + x.abs())
}

/// Bisection on a bracketing interval `[a, b]` with `f(a)` and `f(b)` of
/// opposite sign (zero counts as either sign). Stops once the interval is
/// narrower than `1e-10 * (1 + |x|)`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return Err(TailError::Numeric(format!(
            "root not bracketed on [{lo}, {hi}] (f = {flo}, {fhi})"
        )));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol_at(mid) || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solve `f(x) = target` for a non-decreasing `f`, expanding outward from
/// `start` with geometrically growing steps until the root is bracketed.
pub fn solve_monotone<F: Fn(f64) -> f64>(f: F, target: f64, start: f64, step: f64) -> Result<f64> {
    let g = |x: f64| f(x) - target;
    let g0 = g(start);
    if g0 == 0.0 {
        return Ok(start);
    }
    let dir = if g0 < 0.0 { 1.0 } else { -1.0 };
    let mut width = step.abs().max(1e-12);
    let mut prev = start;
    for _ in 0..2000 {
        let next = start + dir * width;
        let gn = g(next);
        if !gn.is_finite() {
            break;
        }
        if gn.signum() != g0.signum() || gn == 0.0 {
            return bisect(g, prev, next);
        }
        prev = next;
        width *= 2.0;
        if !width.is_finite() {
            break;
        }
    }
    Err(TailError::Numeric(format!(
        "could not bracket solution of f(x) = {target} from x = {start}"
    )))
}

/// Outcome of a grid scan for the global maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMax {
    pub index: usize,
    pub value: f64,
    /// More than one local maximum tied (within `1e-12` relative) with the
    /// global one; `index` is then the one with the smallest index.
    pub tied: bool,
}

/// Scan `values` (objective sampled on an ordered grid) for the global
/// maximum. Non-finite samples are ignored. Among local maxima whose value is
/// within `1e-12 * |max|` of the global maximum, the lowest index wins.
pub fn grid_argmax(values: &[f64]) -> Option<GridMax> {
    let (best, best_val) =
        values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .fold(None, |acc: Option<(usize, f64)>, (i, &v)| match acc {
                Some((_, bv)) if bv >= v => acc,
                _ => Some((i, v)),
            })?;
    let slack = 1e-12 * best_val.abs();
    let is_local_max = |i: usize| {
        let v = values[i];
        let left_ok = i == 0 || !(values[i - 1] > v);
        let right_ok = i + 1 == values.len() || !(values[i + 1] > v);
        left_ok && right_ok
    };
    let near: Vec<usize> = (0..values.len())
        .filter(|&i| values[i].is_finite() && values[i] >= best_val - slack && is_local_max(i))
        .collect();
    // Plateau neighbours are one maximum, not a tie.
    let separate = near.windows(2).filter(|w| w[1] > w[0] + 1).count() + 1;
    let index = near.first().copied().unwrap_or(best);
    Some(GridMax {
        index,
        value: values[index],
        tied: near.len() > 1 && separate > 1,
    })
}

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
/// Returns the final bracket.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..300 {
        if hi - lo <= tol_at(0.5 * (lo + hi)) {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    (lo, hi)
}

/// Refine a maximizer of `f` known to lie in `[a, b]`.
///
/// Golden-section search first; then, if the central-difference slope with
/// step `slope_step` changes sign from positive to negative across a small
/// window around the golden-section estimate, that sign change is bisected.
/// `slope_step` should be about `1e-5` of the length scale on which `f`
/// varies.
pub fn refine_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, slope_step: f64) -> f64 {
    let (lo, hi) = (a.min(b), a.max(b));
    let (glo, ghi) = golden_section_max(&f, lo, hi);
    let xg = 0.5 * (glo + ghi);
    if !(slope_step > 0.0) {
        return xg;
    }
    let slope = |x: f64| f(x + slope_step) - f(x - slope_step);
    let window = 20.0 * slope_step;
    let wlo = (xg - window).max(lo);
    let whi = (xg + window).min(hi);
    if !(whi > wlo) {
        return xg;
    }
    let (slo, shi) = (slope(wlo), slope(whi));
    if slo > 0.0 && shi < 0.0 {
        match bisect(slope, wlo, whi) {
            Ok(x) => x,
            Err(_) => xg,
        }
    } else {
        xg
    }
}

/// `count` points `anchor + dir * d_k` with offsets `d_k` log-spaced from
/// `d_min` to `d_max`, ordered outward from the anchor.
pub fn log_offsets(anchor: f64, dir: f64, d_min: f64, d_max: f64, count: usize) -> Vec<f64> {
    debug_assert!(count >= 2 && d_min > 0.0 && d_max > d_min);
    let ratio = (d_max / d_min).ln() / (count - 1) as f64;
    (0..count)
        .map(|k| {
            let d = if k + 1 == count {
                d_max
            } else {
                d_min * (ratio * k as f64).exp()
            };
            anchor + dir * d
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn bisect_requires_bracket() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn monotone_solve_expands_bracket() {
        let r = solve_monotone(|x: f64| x.powi(3), 1000.0, 0.0, 1.0).unwrap();
        assert!((r - 10.0).abs() < 1e-8);
        let r = solve_monotone(|x: f64| x.powi(3), -8.0, 5.0, 0.5).unwrap();
        assert!((r + 2.0).abs() < 1e-8);
    }

    #[test]
    fn golden_then_slope_polish() {
        let f = |x: f64| -(x - 0.3).powi(2) + 1.0;
        let x = refine_max(f, 0.0, 1.0, 1e-5);
        assert!((x - 0.3).abs() < 1e-10, "{x}");
        // Very flat top: comparison-based search alone stalls near sqrt(eps).
        let g = |x: f64| 1.0 - 1e-4 * (x - 2.0).powi(2);
        let x = refine_max(g, 0.0, 5.0, 1e-5);
        assert!((x - 2.0).abs() < 1e-7, "{x}");
    }

    #[test]
    fn grid_argmax_prefers_lowest_index_on_tie() {
        let v = [0.0, 1.0, 0.5, 1.0, 0.0];
        let m = grid_argmax(&v).unwrap();
        assert_eq!(m.index, 1);
        assert!(m.tied);
        let v = [0.0, 2.0, 2.0, 0.0];
        let m = grid_argmax(&v).unwrap();
        assert_eq!(m.index, 1);
        assert!(!m.tied);
        let v = [f64::NAN, 0.5, 0.1];
        assert_eq!(grid_argmax(&v).unwrap().index, 1);
        assert!(grid_argmax(&[f64::NAN]).is_none());
    }

    #[test]
    fn log_offsets_span_range() {
        let g = log_offsets(1.0, -1.0, 1e-3, 10.0, 5);
        assert_eq!(g.len(), 5);
        assert!((g[0] - (1.0 - 1e-3)).abs() < 1e-15);
        assert_eq!(g[4], -9.0);
        assert!(g.windows(2).all(|w| w[1] < w[0]));
    }
}
