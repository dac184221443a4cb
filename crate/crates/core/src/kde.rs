//! Gaussian-kernel estimators of density derivatives.
//!
//! The `r`-th derivative of the Gaussian kernel is `(-1)^r H_r(u) phi(u)` with
//! `H_r` the probabilists' Hermite polynomial, so
//!
//! ```text
//! f_n^(r)(x) = (-1)^r / (sqrt(2 pi) n h^(r+1)) * sum_i H_r(u_i) exp(-u_i^2 / 2),
//! u_i = (x - X_i) / h.
//! ```
//!
//! Bandwidths minimize the asymptotic MISE of the derivative estimator:
//!
//! ```text
//! h = [(2r + 1) R(K^(r)) / (mu_2(K)^2 R(f^(r+2)))]^(1/(2r+5)) n^(-1/(2r+5))
//! ```
//!
//! with `R(g) = int g^2` and `mu_2(K) = 1` for the Gaussian kernel.

use std::f64::consts::PI;

use crate::delimit::Side;
use crate::dist::DensityBundle;
use crate::error::{Result, TailError};
use crate::optimize::{golden_section_max, grid_argmax, log_offsets, refine_max};
use crate::quadrature::{integrate, QuadOptions};

/// Highest Hermite order supported.
pub const MAX_HERMITE_ORDER: usize = 10;
/// Highest derivative order of the public estimators.
pub const MAX_DERIVATIVE_ORDER: usize = 2;
/// Kernel contributions with `|x - X_i| / h` above this are skipped; they
/// underflow in double precision.
pub const KERNEL_CUTOFF: f64 = 38.0;
/// Grid points in the sample-point scans.
pub const SAMPLE_GRID_POINTS: usize = 2048;
/// The scan domain extends this many bandwidths past the extreme datum.
pub const DOMAIN_PAD_BANDWIDTHS: f64 = 8.0;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Probabilists' Hermite polynomial `H_r(x)`, via
/// `H_{r+1} = x H_r - r H_{r-1}`.
pub fn hermite(r: usize, x: f64) -> Result<f64> {
    if r > MAX_HERMITE_ORDER {
        return Err(TailError::InvalidArgument(format!(
            "Hermite order {r} exceeds the supported maximum {MAX_HERMITE_ORDER}"
        )));
    }
    Ok(hermite_unchecked(r, x))
}

#[inline]
fn hermite_unchecked(r: usize, x: f64) -> f64 {
    match r {
        0 => 1.0,
        1 => x,
        2 => x * x - 1.0,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for k in 1..r {
                let next = x * cur - k as f64 * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `R(phi^(r)) = int (phi^(r))^2 = (2r)! / (4^r r! 2 sqrt(pi))`.
pub fn gaussian_kernel_roughness(r: usize) -> Result<f64> {
    if r > MAX_HERMITE_ORDER {
        return Err(TailError::InvalidArgument(format!(
            "kernel derivative order {r} exceeds the supported maximum {MAX_HERMITE_ORDER}"
        )));
    }
    // (2r)! / (4^r r!) = prod_{k=1..r} (r + k) / 4
    let ratio: f64 = (1..=r).map(|k| (r + k) as f64 / 4.0).product();
    Ok(ratio / (2.0 * PI.sqrt()))
}

/// AMISE-optimal bandwidth for the order-`r` derivative estimator with the
/// Gaussian kernel, given `roughness_f = R(f^(r+2))`.
pub fn amise_bandwidth(r: usize, n: usize, roughness_f: f64) -> Result<f64> {
    if !(roughness_f > 0.0) || !roughness_f.is_finite() {
        return Err(TailError::InvalidArgument(format!(
            "roughness R(f^(r+2)) must be positive and finite, got {roughness_f}"
        )));
    }
    if n == 0 {
        return Err(TailError::InvalidArgument("sample size must be positive".into()));
    }
    let kernel = gaussian_kernel_roughness(r)?;
    let power = 1.0 / (2 * r + 5) as f64;
    Ok(((2 * r + 1) as f64 * kernel / roughness_f).powf(power) * (n as f64).powf(-power))
}

/// `R(f^(order))` when `f` is Gaussian with standard deviation `sd`.
pub fn normal_reference_roughness(order: usize, sd: f64) -> Result<f64> {
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(TailError::InvalidArgument(format!(
            "reference standard deviation must be positive, got {sd}"
        )));
    }
    Ok(gaussian_kernel_roughness(order)? / sd.powi(2 * order as i32 + 1))
}

/// `R(f^(order))` of a known density by adaptive quadrature over its
/// `1e-8 .. 1 - 1e-8` quantile range, relative tolerance `1e-8`.
///
/// Order 2 uses the bundle's `d2pdf`; orders 3 and 4 differentiate it
/// numerically (Richardson-extrapolated differences, one-sided next to a
/// finite support endpoint).
pub fn true_roughness(bundle: &DensityBundle, order: usize) -> Result<f64> {
    if !(2..=4).contains(&order) {
        return Err(TailError::InvalidArgument(format!(
            "true_roughness supports derivative orders 2 to 4, got {order}"
        )));
    }
    let q = |p: f64| bundle.quantile(p);
    let lo = q(1e-8)?;
    let hi = q(1.0 - 1e-8)?;
    let mut cuts = vec![lo];
    for p in [0.05, 0.25, 0.75, 0.95] {
        let x = q(p)?;
        if x > *cuts.last().unwrap() && x < hi {
            cuts.push(x);
        }
    }
    let mode = bundle.mode();
    if mode > lo && mode < hi && !cuts.contains(&mode) {
        cuts.push(mode);
        cuts.sort_by(f64::total_cmp);
    }
    cuts.push(hi);

    let scale = bundle.scale();
    let support_lo = bundle.support().lo;
    let deriv = |x: f64| higher_derivative(bundle, order, x, scale, support_lo);
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-8,
        max_intervals: 4000,
    };
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let piece = integrate(|x| deriv(x).powi(2), w[0], w[1], opts)
            .map_err(|e| e.context(format!("R(f^({order})) of {} on [{}, {}]", bundle.spec(), w[0], w[1])))?;
        total += piece.value;
    }
    Ok(total)
}

fn higher_derivative(bundle: &DensityBundle, order: usize, x: f64, scale: f64, lo: f64) -> f64 {
    let g = |t: f64| bundle.d2pdf(t);
    match order {
        2 => g(x),
        3 => {
            let h = f64::EPSILON.powf(0.2) * scale;
            if x - 2.0 * h < lo {
                let f: Vec<f64> = (0..5).map(|k| g(x + k as f64 * h)).collect();
                (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h)
            } else {
                let d = |h: f64| (g(x + h) - g(x - h)) / (2.0 * h);
                (4.0 * d(0.5 * h) - d(h)) / 3.0
            }
        }
        _ => {
            let h = f64::EPSILON.powf(1.0 / 6.0) * scale;
            if x - 2.0 * h < lo {
                let f: Vec<f64> = (0..6).map(|k| g(x + k as f64 * h)).collect();
                (45.0 * f[0] - 154.0 * f[1] + 214.0 * f[2] - 156.0 * f[3] + 61.0 * f[4] - 10.0 * f[5]) / (12.0 * h * h)
            } else {
                let g0 = g(x);
                let d = |h: f64| (g(x + h) - 2.0 * g0 + g(x - h)) / (h * h);
                (4.0 * d(0.5 * h) - d(h)) / 3.0
            }
        }
    }
}

/// Raw sum `sum_i H_r(u_i) exp(-u_i^2/2)` over sorted data, skipping terms
/// beyond `cutoff` bandwidths when one is given.
#[inline]
fn kernel_sum(sorted: &[f64], order: usize, h: f64, x: f64, cutoff: Option<f64>) -> f64 {
    let (lo, hi) = match cutoff {
        Some(c) => (
            sorted.partition_point(|&v| v < x - c * h),
            sorted.partition_point(|&v| v <= x + c * h),
        ),
        None => (0, sorted.len()),
    };
    let inv_h = 1.0 / h;
    let window = &sorted[lo..hi];
    match order {
        0 => window
            .iter()
            .map(|&xi| {
                let u = (x - xi) * inv_h;
                (-0.5 * u * u).exp()
            })
            .sum(),
        1 => window
            .iter()
            .map(|&xi| {
                let u = (x - xi) * inv_h;
                u * (-0.5 * u * u).exp()
            })
            .sum(),
        2 => window
            .iter()
            .map(|&xi| {
                let u = (x - xi) * inv_h;
                (u * u - 1.0) * (-0.5 * u * u).exp()
            })
            .sum(),
        r => window
            .iter()
            .map(|&xi| {
                let u = (x - xi) * inv_h;
                hermite_unchecked(r, u) * (-0.5 * u * u).exp()
            })
            .sum(),
    }
}

#[inline]
fn prefactor(order: usize, n: usize, h: f64) -> f64 {
    let sign = if order.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * INV_SQRT_2PI / (n as f64 * h.powi(order as i32 + 1))
}

fn sorted_finite(data: &[f64]) -> Result<Vec<f64>> {
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(TailError::InvalidArgument(format!(
            "data value #{} is not finite ({})",
            i + 1,
            data[i]
        )));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted)
}

/// A sample, a derivative order and a bandwidth: the estimator `f_n^(r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeModel {
    data: Vec<f64>,
    order: usize,
    bandwidth: f64,
    cutoff: Option<f64>,
}

impl KdeModel {
    pub fn new(data: &[f64], order: usize, bandwidth: f64) -> Result<Self> {
        if data.len() < 2 {
            return Err(TailError::InvalidArgument(format!(
                "a density estimate needs at least 2 observations, got {}",
                data.len()
            )));
        }
        if order > MAX_DERIVATIVE_ORDER {
            return Err(TailError::InvalidArgument(format!(
                "derivative order must be 0, 1 or 2, got {order}"
            )));
        }
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(TailError::InvalidArgument(format!(
                "bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        Ok(KdeModel {
            data: sorted_finite(data)?,
            order,
            bandwidth,
            cutoff: Some(KERNEL_CUTOFF),
        })
    }

    /// Sum every kernel, with no tail cutoff.
    pub fn without_cutoff(mut self) -> Self {
        self.cutoff = None;
        self
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// `f_n^(r)(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        prefactor(self.order, self.data.len(), h) * kernel_sum(&self.data, self.order, h, x, self.cutoff)
    }
}

/// `f_n^(r)(x)` for `model`.
pub fn eval_deriv(model: &KdeModel, x: f64) -> f64 {
    model.eval(x)
}

/// Bandwidths for the two sample points: `h1` for `f_n'`, `h2` for `f_n''`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bandwidths {
    pub h1: f64,
    pub h2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePoints {
    pub pinf: f64,
    pub pmconv: f64,
}

/// Sample inflection point and point of maximum convexity on one side.
///
/// Right side: `pinf = argmax_{x > m} -f_n'(x)` with bandwidth `h1` and
/// `pmconv = argmax_{x > m} f_n''(x)` with `h2`, where `m` is the mode
/// estimate. The left side is the mirror image (computed on reflected data).
pub fn sample_delimiting_points(
    data: &[f64],
    mode_estimate: f64,
    side: Side,
    bandwidths: Bandwidths,
) -> Result<SamplePoints> {
    let sorted = sorted_finite(data)?;
    Ok(SamplePoints {
        pinf: sample_point(&sorted, mode_estimate, side, 1, bandwidths.h1)?,
        pmconv: sample_point(&sorted, mode_estimate, side, 2, bandwidths.h2)?,
    })
}

/// Sample inflection point alone; `sorted` must be sorted ascending.
pub fn sample_pinf(sorted: &[f64], mode_estimate: f64, side: Side, h: f64) -> Result<f64> {
    sample_point(sorted, mode_estimate, side, 1, h)
}

/// Sample point of maximum convexity alone; `sorted` must be sorted ascending.
pub fn sample_pmconv(sorted: &[f64], mode_estimate: f64, side: Side, h: f64) -> Result<f64> {
    sample_point(sorted, mode_estimate, side, 2, h)
}

fn sample_point(sorted: &[f64], mode: f64, side: Side, order: usize, h: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(TailError::InvalidArgument("data must not be empty".into()));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(TailError::InvalidArgument(format!(
            "bandwidth must be positive and finite, got {h}"
        )));
    }
    if !mode.is_finite() {
        return Err(TailError::InvalidArgument(format!(
            "mode estimate must be finite, got {mode}"
        )));
    }
    match side {
        Side::Right => right_argmax(sorted, mode, order, h),
        Side::Left => {
            let reflected: Vec<f64> = sorted.iter().rev().map(|&v| -v).collect();
            Ok(-right_argmax(&reflected, -mode, order, h)?)
        }
    }
}

// argmax over x > mode of -f_n' (order 1) or f_n'' (order 2).
fn right_argmax(sorted: &[f64], mode: f64, order: usize, h: f64) -> Result<f64> {
    let n = sorted.len();
    let top = sorted[n - 1] + DOMAIN_PAD_BANDWIDTHS * h;
    let d_max = top - mode;
    let d_min = 1e-3 * h;
    if !(d_max > d_min) {
        return Err(TailError::InvalidArgument(format!(
            "empty search domain: mode estimate {mode} is not below the data maximum {}",
            sorted[n - 1]
        )));
    }
    let sign = if order == 1 { -1.0 } else { 1.0 };
    let scale = sign * prefactor(order, n, h);
    let objective = |x: f64| scale * kernel_sum(sorted, order, h, x, Some(KERNEL_CUTOFF));
    let grid = log_offsets(mode, 1.0, d_min, d_max, SAMPLE_GRID_POINTS);
    let values = grid_values(sorted, order, h, &grid, scale);
    let best =
        grid_argmax(&values).ok_or_else(|| TailError::Numeric("kernel estimate is not finite on the grid".into()))?;
    let i = best.index;
    let a = if i == 0 { mode } else { grid[i - 1] };
    let b = grid[(i + 1).min(grid.len() - 1)];
    Ok(refine_max(objective, a, b, 1e-5 * h))
}

// The objective on an ascending grid; kernel windows slide monotonically.
// Only used to pick the basin of the maximum, so the exponential is the
// branch-free approximation below rather than libm's. The AVX2 build of the
// loop uses the same operations in the same order, so both paths agree
// bit for bit.
fn grid_values(sorted: &[f64], order: usize, h: f64, grid: &[f64], scale: f64) -> Vec<f64> {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx512f") {
            // SAFETY: the CPU supports AVX-512F, checked just above.
            return unsafe { grid_values_avx512(sorted, order, h, grid, scale) };
        }
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the CPU supports AVX2, checked just above.
            return unsafe { grid_values_avx2(sorted, order, h, grid, scale) };
        }
    }
    grid_values_impl(sorted, order, h, grid, scale)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,avx512f")]
unsafe fn grid_values_avx512(sorted: &[f64], order: usize, h: f64, grid: &[f64], scale: f64) -> Vec<f64> {
    grid_values_impl(sorted, order, h, grid, scale)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn grid_values_avx2(sorted: &[f64], order: usize, h: f64, grid: &[f64], scale: f64) -> Vec<f64> {
    grid_values_impl(sorted, order, h, grid, scale)
}

#[inline(always)]
fn grid_values_impl(sorted: &[f64], order: usize, h: f64, grid: &[f64], scale: f64) -> Vec<f64> {
    if order == 1 {
        grid_scan::<1>(sorted, h, grid, scale)
    } else {
        grid_scan::<2>(sorted, h, grid, scale)
    }
}

#[inline(always)]
fn grid_scan<const ORDER: usize>(sorted: &[f64], h: f64, grid: &[f64], scale: f64) -> Vec<f64> {
    let reach = KERNEL_CUTOFF * h;
    let inv_h = 1.0 / h;
    let (mut lo, mut hi) = (0usize, 0usize);
    let mut out = Vec::with_capacity(grid.len());
    for &x in grid {
        while lo < sorted.len() && sorted[lo] < x - reach {
            lo += 1;
        }
        hi = hi.max(lo);
        while hi < sorted.len() && sorted[hi] <= x + reach {
            hi += 1;
        }
        out.push(scale * lane_sum::<ORDER>(&sorted[lo..hi], x, inv_h));
    }
    out
}

#[inline(always)]
fn kernel_term<const ORDER: usize>(x: f64, xi: f64, inv_h: f64) -> f64 {
    let u = (x - xi) * inv_h;
    let e = exp_neg(0.5 * u * u);
    if ORDER == 1 {
        u * e
    } else {
        (u * u - 1.0) * e
    }
}

// Eight interleaved partial sums, so that the loop vectorizes.
#[inline(always)]
fn lane_sum<const ORDER: usize>(xs: &[f64], x: f64, inv_h: f64) -> f64 {
    let mut acc = [0.0f64; 8];
    let chunks = xs.chunks_exact(8);
    let rest = chunks.remainder();
    for c in chunks {
        for j in 0..8 {
            acc[j] += kernel_term::<ORDER>(x, c[j], inv_h);
        }
    }
    let mut tail = 0.0;
    for &v in rest {
        tail += kernel_term::<ORDER>(x, v, inv_h);
    }
    (((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))) + tail
}

/// `exp(-t)` for `t >= 0`, relative error a few 1e-16 up to `t = 700`; larger
/// `t` is treated as 700. Written without branches or calls so that loops
/// over it vectorize.
#[inline(always)]
fn exp_neg(t: f64) -> f64 {
    const MAGIC: f64 = 6_755_399_441_055_744.0; // 1.5 * 2^52
    let y = -t.min(700.0) * std::f64::consts::LOG2_E;
    let shifted = y + MAGIC;
    let k = shifted - MAGIC;
    let s = (y - k) * std::f64::consts::LN_2;
    // Taylor series of e^s, |s| <= ln(2) / 2.
    let mut p = 1.0 / 479_001_600.0;
    p = p * s + 1.0 / 39_916_800.0;
    p = p * s + 1.0 / 3_628_800.0;
    p = p * s + 1.0 / 362_880.0;
    p = p * s + 1.0 / 40_320.0;
    p = p * s + 1.0 / 5_040.0;
    p = p * s + 1.0 / 720.0;
    p = p * s + 1.0 / 120.0;
    p = p * s + 1.0 / 24.0;
    p = p * s + 1.0 / 6.0;
    p = p * s + 0.5;
    p = p * s + 1.0;
    p = p * s + 1.0;
    let ki = shifted.to_bits().wrapping_sub(MAGIC.to_bits()) as i64;
    p * f64::from_bits((ki.wrapping_add(1023) as u64) << 52)
}

/// Mode estimate for data of unknown origin: the maximizer of `f_n` with its
/// normal-reference AMISE bandwidth, searched between the 1st and 99th
/// sample percentiles. Returns `(mode, bandwidth)`.
pub fn estimate_mode(data: &[f64]) -> Result<(f64, f64)> {
    let sorted = sorted_finite(data)?;
    let n = sorted.len();
    if n < 2 {
        return Err(TailError::InvalidArgument(
            "mode estimation needs at least 2 observations".into(),
        ));
    }
    let sd = sample_sd(&sorted);
    let h = amise_bandwidth(0, n, normal_reference_roughness(2, sd)?)?;
    let lo = sorted[((n - 1) as f64 * 0.01).floor() as usize];
    let hi = sorted[((n - 1) as f64 * 0.99).ceil() as usize];
    if !(hi > lo) {
        return Ok((lo, h));
    }
    let count = SAMPLE_GRID_POINTS;
    let grid: Vec<f64> = (0..count)
        .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
        .collect();
    let density = |x: f64| kernel_sum(&sorted, 0, h, x, Some(KERNEL_CUTOFF));
    let values: Vec<f64> = grid.iter().map(|&x| density(x)).collect();
    let i = grid_argmax(&values)
        .ok_or_else(|| TailError::Numeric("density estimate is not finite".into()))?
        .index;
    let a = grid[i.saturating_sub(1)];
    let b = grid[(i + 1).min(count - 1)];
    let (glo, ghi) = golden_section_max(density, a, b);
    Ok((0.5 * (glo + ghi), h))
}

/// Sample standard deviation (divisor `n - 1`).
pub fn sample_sd(data: &[f64]) -> f64 {
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let ss: f64 = data.iter().map(|v| (v - mean).powi(2)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// Normal-reference AMISE bandwidths for the sample points: `h1` for the
/// first derivative (needs `R(f''')`), `h2` for the second (`R(f'''')`).
pub fn normal_reference_bandwidths(data: &[f64]) -> Result<Bandwidths> {
    if data.len() < 2 {
        return Err(TailError::InvalidArgument(
            "bandwidth selection needs at least 2 observations".into(),
        ));
    }
    let sd = sample_sd(data);
    let n = data.len();
    Ok(Bandwidths {
        h1: amise_bandwidth(1, n, normal_reference_roughness(3, sd)?)?,
        h2: amise_bandwidth(2, n, normal_reference_roughness(4, sd)?)?,
    })
}

/// AMISE bandwidths from the true roughness of a known density.
pub fn true_bandwidths(bundle: &DensityBundle, n: usize) -> Result<Bandwidths> {
    Ok(Bandwidths {
        h1: amise_bandwidth(1, n, true_roughness(bundle, 3)?)?,
        h2: amise_bandwidth(2, n, true_roughness(bundle, 4)?)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::make_bundle;

    #[test]
    fn hermite_listed_polynomials() {
        for &x in &[-2.5, -1.0, 0.0, 0.3, 1.7, 4.0] {
            assert_eq!(hermite(0, x).unwrap(), 1.0);
            assert_eq!(hermite(1, x).unwrap(), x);
            assert_eq!(hermite(2, x).unwrap(), x * x - 1.0);
            let h3 = x * x * x - 3.0 * x;
            assert!((hermite(3, x).unwrap() - h3).abs() <= 1e-12 * (1.0 + h3.abs()));
            let h4 = x.powi(4) - 6.0 * x * x + 3.0;
            assert!((hermite(4, x).unwrap() - h4).abs() <= 1e-12 * (1.0 + h4.abs()));
        }
        assert_eq!(hermite(4, 0.0).unwrap(), 3.0);
        assert!(hermite(11, 1.0).is_err());
        assert!(hermite(10, 1.0).is_ok());
    }

    #[test]
    fn single_kernel_values() {
        let data = [0.0];
        let sorted = sorted_finite(&data).unwrap();
        let at = |r| prefactor(r, 1, 1.0) * kernel_sum(&sorted, r, 1.0, 0.0, Some(KERNEL_CUTOFF));
        assert!((at(0) - INV_SQRT_2PI).abs() < 1e-15);
        assert_eq!(at(1), 0.0);
        assert!((at(2) + INV_SQRT_2PI).abs() < 1e-15);
    }

    #[test]
    fn model_validation() {
        assert!(KdeModel::new(&[1.0], 0, 1.0).is_err());
        assert!(KdeModel::new(&[1.0, 2.0], 3, 1.0).is_err());
        assert!(KdeModel::new(&[1.0, 2.0], 1, 0.0).is_err());
        assert!(KdeModel::new(&[1.0, f64::NAN], 1, 1.0).is_err());
        let m = KdeModel::new(&[3.0, 1.0], 1, 0.5).unwrap();
        assert_eq!(m.data(), &[1.0, 3.0]);
    }

    #[test]
    fn cutoff_is_invisible() {
        let data: Vec<f64> = (0..50).map(|k| (k as f64 * 0.37).sin() * 3.0).collect();
        for r in 0..=2 {
            let cut = KdeModel::new(&data, r, 0.4).unwrap();
            let full = cut.clone().without_cutoff();
            for k in 0..40 {
                let x = -6.0 + 0.3 * k as f64;
                assert_eq!(cut.eval(x), full.eval(x));
            }
        }
    }

    #[test]
    fn amise_examples() {
        let rf = 3.0 / (8.0 * PI.sqrt());
        let h = amise_bandwidth(0, 1, rf).unwrap();
        assert!((h - (4.0f64 / 3.0).powf(0.2)).abs() < 1e-14);
        assert!((h - 1.0592).abs() < 1e-4);
        for r in 0..=4 {
            let ratio = amise_bandwidth(r, 1_000_000, 0.7).unwrap() / amise_bandwidth(r, 10, 0.7).unwrap();
            let expected = 1e5f64.powf(-1.0 / (2 * r + 5) as f64);
            assert!((ratio - expected).abs() < 1e-13);
        }
        assert!(amise_bandwidth(1, 10, 0.0).is_err());
        assert!(amise_bandwidth(1, 10, -1.0).is_err());
    }

    #[test]
    fn kernel_roughness_closed_form() {
        let sp = PI.sqrt();
        assert!((gaussian_kernel_roughness(0).unwrap() - 1.0 / (2.0 * sp)).abs() < 1e-16);
        assert!((gaussian_kernel_roughness(1).unwrap() - 1.0 / (4.0 * sp)).abs() < 1e-16);
        assert!((gaussian_kernel_roughness(2).unwrap() - 3.0 / (8.0 * sp)).abs() < 1e-16);
        assert!((gaussian_kernel_roughness(3).unwrap() - 15.0 / (16.0 * sp)).abs() < 1e-15);
        assert!(gaussian_kernel_roughness(11).is_err());
    }

    #[test]
    fn true_roughness_gaussian() {
        let sp = PI.sqrt();
        let g = make_bundle(&"gaussian()".parse().unwrap()).unwrap();
        let r2 = true_roughness(&g, 2).unwrap();
        assert!((r2 / (3.0 / (8.0 * sp)) - 1.0).abs() < 1e-8);
        let r3 = true_roughness(&g, 3).unwrap();
        assert!((r3 / (15.0 / (16.0 * sp)) - 1.0).abs() < 1e-7, "{r3}");
        let r4 = true_roughness(&g, 4).unwrap();
        let exact4 = gaussian_kernel_roughness(4).unwrap();
        assert!((r4 / exact4 - 1.0).abs() < 1e-6, "{r4} vs {exact4}");
        let sigma = 2.5f64;
        let gs = make_bundle(&format!("gaussian(mu=1,sigma={sigma})").parse().unwrap()).unwrap();
        let r2s = true_roughness(&gs, 2).unwrap();
        assert!((r2s / (sigma.powi(-5) * 3.0 / (8.0 * sp)) - 1.0).abs() < 1e-8);
        assert!(true_roughness(&g, 1).is_err());
        assert!(true_roughness(&g, 5).is_err());
    }

    #[test]
    fn true_roughness_exponential_near_boundary() {
        // R(f^(k)) = rate^(2k+1) / 2 for rate * exp(-rate x).
        let rate = 1.5f64;
        let e = make_bundle(&format!("exponential(rate={rate})").parse().unwrap()).unwrap();
        for k in 2..=4 {
            let exact = rate.powi(2 * k as i32 + 1) / 2.0;
            let r = true_roughness(&e, k).unwrap();
            assert!((r / exact - 1.0).abs() < 1e-6, "order {k}: {r} vs {exact}");
        }
    }

    #[test]
    fn single_point_sample_points() {
        let pts = sample_delimiting_points(&[0.0], 0.0, Side::Right, Bandwidths { h1: 1.0, h2: 1.0 }).unwrap();
        assert!((pts.pinf - 1.0).abs() < 1e-9, "{pts:?}");
        assert!((pts.pmconv - 3f64.sqrt()).abs() < 1e-9, "{pts:?}");
        let left = sample_delimiting_points(&[0.0], 0.0, Side::Left, Bandwidths { h1: 1.0, h2: 1.0 }).unwrap();
        assert!((left.pinf + 1.0).abs() < 1e-9);
    }

    #[test]
    fn sample_point_errors() {
        let bw = Bandwidths { h1: 0.1, h2: 0.1 };
        assert!(sample_delimiting_points(&[], 0.0, Side::Right, bw).is_err());
        assert!(sample_delimiting_points(&[0.0, 1.0], 5.0, Side::Right, bw).is_err());
        assert!(sample_delimiting_points(&[0.0, 1.0], -5.0, Side::Left, bw).is_err());
        let bad = Bandwidths { h1: -1.0, h2: 0.1 };
        assert!(sample_delimiting_points(&[0.0, 1.0], 0.5, Side::Right, bad).is_err());
    }

    #[test]
    #[cfg(target_arch = "x86_64")]
    fn simd_paths_agree_exactly() {
        let data: Vec<f64> = (0..1001).map(|k| ((k * 7919) % 1013) as f64 / 97.0 - 5.0).collect();
        let sorted = sorted_finite(&data).unwrap();
        let grid = log_offsets(0.0, 1.0, 1e-4, 12.0, 333);
        for order in [1, 2] {
            let base = grid_values_impl(&sorted, order, 0.3, &grid, 1.0);
            if std::arch::is_x86_feature_detected!("avx2") {
                let v = unsafe { grid_values_avx2(&sorted, order, 0.3, &grid, 1.0) };
                assert_eq!(base, v);
            }
            if std::arch::is_x86_feature_detected!("avx512f") {
                let v = unsafe { grid_values_avx512(&sorted, order, 0.3, &grid, 1.0) };
                assert_eq!(base, v);
            }
        }
    }

    #[test]
    fn fast_exponential() {
        let mut worst: f64 = 0.0;
        for k in 0..200_000 {
            let t = k as f64 * 0.0035;
            let rel = (exp_neg(t) / (-t).exp() - 1.0).abs();
            worst = worst.max(rel);
        }
        assert!(worst < 1e-13, "{worst}");
        assert_eq!(exp_neg(0.0), 1.0);
        assert!(exp_neg(1e6) > 0.0 && exp_neg(1e6) < 1e-300);
    }

    #[test]
    fn grid_values_match_pointwise() {
        let data: Vec<f64> = (0..300).map(|k| ((k * 7919) % 1000) as f64 / 100.0 - 5.0).collect();
        let sorted = sorted_finite(&data).unwrap();
        let grid = log_offsets(0.0, 1.0, 1e-3, 20.0, 200);
        for order in [1, 2] {
            let scale = prefactor(order, sorted.len(), 0.05);
            let fast = grid_values(&sorted, order, 0.05, &grid, scale);
            for (x, v) in grid.iter().zip(&fast) {
                let slow = scale * kernel_sum(&sorted, order, 0.05, *x, Some(KERNEL_CUTOFF));
                assert!((v - slow).abs() <= 1e-12 * (1.0 + slow.abs()));
            }
        }
    }
}
