//! Curvature and the delimiting points PInf, PMConv and PMCurv.
//!
//! Each point is defined separately on either side of the mode. Numerical
//! searches run on the side domain truncated at the `1e-9` / `1 - 1e-9`
//! quantiles, with the mode itself excluded by an offset of
//! `1e-12 * (1 + |mode|)`.

use serde::{Serialize, Serializer};
use serde_json::{json, Value};

use crate::dist::{make_bundle, DensityBundle, DistributionSpec, Family};
use crate::error::Result;
use crate::optimize::{bisect, grid_argmax, log_offsets, refine_max};

/// Number of grid points in the coarse scans.
pub const GRID_POINTS: usize = 513;
/// Tail probability at which side domains are truncated.
pub const TAIL_TRUNCATION: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    /// +1 for the right side, -1 for the left.
    pub fn direction(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

impl std::str::FromStr for Side {
    type Err = crate::TailError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(Side::Left),
            "right" | "r" => Ok(Side::Right),
            other => Err(crate::TailError::InvalidArgument(format!(
                "side must be `left` or `right`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Numeric,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Numeric => "numeric",
        }
    }
}

/// Signed curvature of the density graph, `f''(t) / (1 + f'(t)^2)^{3/2}`.
/// Zero outside the support.
pub fn curvature(bundle: &DensityBundle, t: f64) -> f64 {
    if !bundle.support().contains(t) {
        return 0.0;
    }
    let d1 = bundle.dpdf(t);
    bundle.d2pdf(t) / (1.0 + d1 * d1).powf(1.5)
}

/// Search domain on one side of the mode.
#[derive(Debug, Clone, Copy)]
struct SideDomain {
    mode: f64,
    dir: f64,
    /// Closest admissible point to the mode.
    start: f64,
    grid: [f64; 2],
}

impl SideDomain {
    fn new(bundle: &DensityBundle, side: Side) -> Result<Option<SideDomain>> {
        let mode = bundle.mode();
        let support = bundle.support();
        let empty = match side {
            Side::Left => support.lo >= mode,
            Side::Right => support.hi <= mode,
        };
        if empty {
            return Ok(None);
        }
        let bound = match side {
            Side::Left => bundle.quantile(TAIL_TRUNCATION)?,
            Side::Right => bundle.quantile(1.0 - TAIL_TRUNCATION)?,
        };
        let d_max = (bound - mode).abs();
        let offset = 1e-12 * (1.0 + mode.abs());
        if !(d_max > offset) {
            return Ok(None);
        }
        let d_min = (1e-6 * bundle.scale()).max(offset).min(1e-3 * d_max);
        let dir = side.direction();
        Ok(Some(SideDomain {
            mode,
            dir,
            start: mode + dir * offset,
            grid: [d_min, d_max],
        }))
    }

    fn points(&self) -> Vec<f64> {
        log_offsets(self.mode, self.dir, self.grid[0], self.grid[1], GRID_POINTS)
    }
}

/// A maximizer on one side, with the tie flag of its grid scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideArgmax {
    pub x: f64,
    pub tied: bool,
}

fn side_argmax<F: Fn(f64) -> f64>(bundle: &DensityBundle, side: Side, objective: F) -> Result<Option<SideArgmax>> {
    let Some(domain) = SideDomain::new(bundle, side)? else {
        return Ok(None);
    };
    let grid = domain.points();
    let values: Vec<f64> = grid.iter().map(|&x| objective(x)).collect();
    let Some(best) = grid_argmax(&values) else {
        return Ok(None);
    };
    if best.index == 0 && bundle.mode_on_boundary() {
        // Supremum at the support boundary (e.g. Exponential at 0).
        let x0 = domain.start;
        if objective(x0) >= best.value {
            return Ok(Some(SideArgmax {
                x: domain.mode,
                tied: best.tied,
            }));
        }
    }
    let i = best.index;
    let a = if i == 0 { domain.start } else { grid[i - 1] };
    let b = grid[(i + 1).min(grid.len() - 1)];
    let step = 1e-5 * (grid[i] - domain.mode).abs();
    let x = refine_max(&objective, a, b, step);
    Ok(Some(SideArgmax { x, tied: best.tied }))
}

/// Inflection point on `side`: the sign change of `f''` nearest the mode.
/// `None` when `f''` keeps one sign over the whole side domain.
pub fn pinf(bundle: &DensityBundle, side: Side) -> Result<Option<f64>> {
    let Some(domain) = SideDomain::new(bundle, side)? else {
        return Ok(None);
    };
    let mut prev_x = domain.start;
    let mut prev = bundle.d2pdf(prev_x);
    for x in domain.points() {
        let v = bundle.d2pdf(x);
        if v == 0.0 {
            return Ok(Some(x));
        }
        if prev != 0.0 && v.signum() != prev.signum() {
            return bisect(|t| bundle.d2pdf(t), prev_x, x).map(Some);
        }
        prev_x = x;
        prev = v;
    }
    Ok(None)
}

/// Point of maximum convexity on `side`: the maximizer of `f''`.
pub fn pmconv(bundle: &DensityBundle, side: Side) -> Result<Option<f64>> {
    Ok(pmconv_flagged(bundle, side)?.map(|m| m.x))
}

pub fn pmconv_flagged(bundle: &DensityBundle, side: Side) -> Result<Option<SideArgmax>> {
    side_argmax(bundle, side, |x| bundle.d2pdf(x))
}

/// Point of maximum curvature on `side`: the maximizer of [`curvature`].
pub fn pmcurv(bundle: &DensityBundle, side: Side) -> Result<Option<f64>> {
    Ok(pmcurv_flagged(bundle, side)?.map(|m| m.x))
}

pub fn pmcurv_flagged(bundle: &DensityBundle, side: Side) -> Result<Option<SideArgmax>> {
    side_argmax(bundle, side, |x| curvature(bundle, x))
}

/// What a closed form says about one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Closed {
    /// No formula for this point.
    Unavailable,
    /// The point provably does not exist.
    Absent,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedSide {
    pub pinf: Closed,
    pub pmconv: Closed,
    pub pmcurv: Closed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormPoints {
    pub left: ClosedSide,
    pub right: ClosedSide,
}

impl ClosedFormPoints {
    pub fn side(&self, side: Side) -> &ClosedSide {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }
}

/// Rate above which the Exponential has an interior point of maximum
/// curvature: `2^{-1/4}`.
pub fn exponential_pmcurv_threshold() -> f64 {
    2f64.powf(-0.25)
}

/// Exact maximizer of the curvature of `rate * exp(-rate * x)` on `x >= 0`.
///
/// Setting the log-derivative of `rate^3 e^{-rate x} (1 + rate^4 e^{-2 rate x})^{-3/2}`
/// to zero gives `rate^4 e^{-2 rate x} = 1/2`, i.e. `x = ln(2 rate^4) / (2 rate)`,
/// which is positive only for `rate > 2^{-1/4}`; below that the curvature
/// decreases from 0.
pub fn exponential_pmcurv(rate: f64) -> f64 {
    if rate > exponential_pmcurv_threshold() {
        (2.0 * rate.powi(4)).ln() / (2.0 * rate)
    } else {
        0.0
    }
}

/// Exact delimiting points for the families that have them; `None` for the
/// Skew-t.
pub fn closed_form_points(spec: &DistributionSpec) -> Option<ClosedFormPoints> {
    use Closed::*;
    let p = spec.params();
    let symmetric = |mu: f64, inf: f64, conv: f64| ClosedFormPoints {
        left: ClosedSide {
            pinf: Value(mu - inf),
            pmconv: Value(mu - conv),
            pmcurv: Unavailable,
        },
        right: ClosedSide {
            pinf: Value(mu + inf),
            pmconv: Value(mu + conv),
            pmcurv: Unavailable,
        },
    };
    match spec.family() {
        Family::Gaussian => Some(symmetric(p[0], p[1], 3f64.sqrt() * p[1])),
        Family::StudentT | Family::Cauchy => {
            let (nu, mu, sigma) = spec.as_student()?;
            let r = nu / (nu + 2.0);
            Some(symmetric(mu, sigma * r.sqrt(), sigma * (3.0 * r).sqrt()))
        }
        Family::LogNormal => {
            let (mu, s) = (p[0], p[1]);
            let s2 = s * s;
            let conv = |sign: f64| (mu - 2.0 * s2 + sign * s * (3.0 + s2).sqrt()).exp();
            let inf = |sign: f64| (0.5 * (2.0 * mu - 3.0 * s2 + sign * s * (s2 + 4.0).sqrt())).exp();
            Some(ClosedFormPoints {
                left: ClosedSide {
                    pinf: Value(inf(-1.0)),
                    pmconv: Value(conv(-1.0)),
                    pmcurv: Unavailable,
                },
                right: ClosedSide {
                    pinf: Value(inf(1.0)),
                    pmconv: Value(conv(1.0)),
                    pmcurv: Unavailable,
                },
            })
        }
        Family::Exponential => {
            let rate = p[0];
            Some(ClosedFormPoints {
                left: ClosedSide {
                    pinf: Absent,
                    pmconv: Absent,
                    pmcurv: Absent,
                },
                right: ClosedSide {
                    pinf: Absent,
                    pmconv: Value(0.0),
                    pmcurv: Value(exponential_pmcurv(rate)),
                },
            })
        }
        Family::SkewT => None,
    }
}

/// One located point with its cdf value and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Located {
    pub x: f64,
    pub cdf: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEntry {
    pub point: Option<Located>,
    pub method: Method,
}

impl PointEntry {
    pub fn x(&self) -> Option<f64> {
        self.point.map(|p| p.x)
    }

    pub fn cdf(&self) -> Option<f64> {
        self.point.map(|p| p.cdf)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideReport {
    pub pinf: PointEntry,
    pub pmconv: PointEntry,
    pub pmcurv: PointEntry,
}

impl SideReport {
    fn to_json(self) -> Value {
        let x = |e: PointEntry| e.x();
        let c = |e: PointEntry| e.cdf();
        json!({
            "pinf": x(self.pinf),
            "pmconv": x(self.pmconv),
            "pmcurv": x(self.pmcurv),
            "cdf_at": {
                "pinf": c(self.pinf),
                "pmconv": c(self.pmconv),
                "pmcurv": c(self.pmcurv),
            },
            "method": {
                "pinf": self.pinf.method.name(),
                "pmconv": self.pmconv.method.name(),
                "pmcurv": self.pmcurv.method.name(),
            },
        })
    }
}

/// Delimiting points on both sides of the mode for one distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct DelimitingReport {
    pub spec: DistributionSpec,
    pub mode: f64,
    pub left: SideReport,
    pub right: SideReport,
    /// `[PInf_l, PInf_r]`, when both exist.
    pub modal_region_inf: Option<(f64, f64)>,
    /// `[PMConv_l, PMConv_r]`, when both exist.
    pub modal_region_conv: Option<(f64, f64)>,
    /// Some numeric maximizer had competing grid maxima; the one nearest the
    /// mode was kept.
    pub tie_flagged: bool,
}

impl DelimitingReport {
    pub fn side(&self, side: Side) -> &SideReport {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    pub fn to_json(&self) -> Value {
        let params: serde_json::Map<String, Value> = self
            .spec
            .named_params()
            .map(|(k, v)| (k.to_string(), json!(v)))
            .collect();
        let region = |r: Option<(f64, f64)>| r.map(|(a, b)| vec![a, b]);
        json!({
            "family": self.spec.family().name(),
            "params": params,
            "mode": self.mode,
            "left": self.left.to_json(),
            "right": self.right.to_json(),
            "modal_region_inf": region(self.modal_region_inf),
            "modal_region_conv": region(self.modal_region_conv),
            "tie_flagged": self.tie_flagged,
        })
    }
}

impl Serialize for DelimitingReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

/// Full report for `spec`: closed forms where registered, numeric searches
/// for everything else.
pub fn report(spec: &DistributionSpec) -> Result<DelimitingReport> {
    let bundle = make_bundle(spec)?;
    report_for_bundle(&bundle)
}

pub fn report_for_bundle(bundle: &DensityBundle) -> Result<DelimitingReport> {
    let closed = closed_form_points(bundle.spec());
    let mut tie_flagged = false;
    let locate = |x: Option<f64>| x.map(|x| Located { x, cdf: bundle.cdf(x) });
    let mut side_report = |side: Side| -> Result<SideReport> {
        let cf = closed.as_ref().map(|c| *c.side(side));
        let pick = |known: Option<Closed>, numeric: &mut dyn FnMut() -> Result<Option<f64>>| -> Result<PointEntry> {
            match known {
                Some(Closed::Value(x)) => Ok(PointEntry {
                    point: locate(Some(x)),
                    method: Method::ClosedForm,
                }),
                Some(Closed::Absent) => Ok(PointEntry {
                    point: None,
                    method: Method::ClosedForm,
                }),
                Some(Closed::Unavailable) | None => Ok(PointEntry {
                    point: locate(numeric()?),
                    method: Method::Numeric,
                }),
            }
        };
        let pinf_e = pick(cf.map(|c| c.pinf), &mut || pinf(bundle, side))?;
        let pmconv_e = pick(cf.map(|c| c.pmconv), &mut || {
            let m = pmconv_flagged(bundle, side)?;
            tie_flagged |= m.is_some_and(|m| m.tied);
            Ok(m.map(|m| m.x))
        })?;
        let pmcurv_e = pick(cf.map(|c| c.pmcurv), &mut || {
            let m = pmcurv_flagged(bundle, side)?;
            tie_flagged |= m.is_some_and(|m| m.tied);
            Ok(m.map(|m| m.x))
        })?;
        Ok(SideReport {
            pinf: pinf_e,
            pmconv: pmconv_e,
            pmcurv: pmcurv_e,
        })
    };
    let left = side_report(Side::Left)?;
    let right = side_report(Side::Right)?;
    let pair = |l: PointEntry, r: PointEntry| Some((l.x()?, r.x()?));
    Ok(DelimitingReport {
        spec: bundle.spec().clone(),
        mode: bundle.mode(),
        modal_region_inf: pair(left.pinf, right.pinf),
        modal_region_conv: pair(left.pmconv, right.pmconv),
        left,
        right,
        tie_flagged,
    })
}

/// Numeric points only, ignoring any closed form.
pub fn numeric_points(bundle: &DensityBundle, side: Side) -> Result<[Option<f64>; 3]> {
    Ok([pinf(bundle, side)?, pmconv(bundle, side)?, pmcurv(bundle, side)?])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bundle(s: &str) -> DensityBundle {
        make_bundle(&s.parse().unwrap()).unwrap()
    }

    /// Dense-grid argmax oracle, independent of the scan/refine path.
    fn dense_argmax(f: impl Fn(f64) -> f64, lo: f64, hi: f64, count: usize) -> f64 {
        let mut best = (lo, f(lo));
        for k in 1..=count {
            let x = lo + (hi - lo) * k as f64 / count as f64;
            let v = f(x);
            if v > best.1 {
                best = (x, v);
            }
        }
        best.0
    }

    #[test]
    fn curvature_examples() {
        let g = bundle("gaussian()");
        assert!((curvature(&g, 0.0) + 0.398_942_280_401_432_7).abs() < 1e-15);
        let c = bundle("cauchy()");
        assert!((curvature(&c, 0.0) + 2.0 / std::f64::consts::PI).abs() < 1e-15);
        let e = bundle("exponential(rate=2)");
        assert_eq!(curvature(&e, -0.5), 0.0);
        let t = bundle("studentt(nu=3,mu=1,sigma=0.3)");
        for k in 0..100 {
            let x = -4.0 + 0.09 * k as f64;
            assert!(curvature(&t, x).abs() <= t.d2pdf(x).abs());
        }
    }

    #[test]
    fn pinf_examples() {
        let g = bundle("gaussian(mu=0,sigma=1)");
        assert!((pinf(&g, Side::Right).unwrap().unwrap() - 1.0).abs() < 1e-9);
        let t = bundle("studentt(nu=3)");
        let x = pinf(&t, Side::Right).unwrap().unwrap();
        assert!((x - (3.0f64 / 5.0).sqrt()).abs() < 1e-9);
        let e = bundle("exponential(rate=1)");
        assert_eq!(pinf(&e, Side::Right).unwrap(), None);
        assert_eq!(pinf(&e, Side::Left).unwrap(), None);
    }

    #[test]
    fn pmconv_examples() {
        let g = bundle("gaussian(mu=0,sigma=1)");
        let x = pmconv(&g, Side::Right).unwrap().unwrap();
        assert!((x - 3f64.sqrt()).abs() < 1e-9, "{x}");
        let ln = bundle("lognormal(mu=0,sigma=0.5)");
        let x = pmconv(&ln, Side::Right).unwrap().unwrap();
        let formula = (-0.5f64 + 0.5 * 3.25f64.sqrt()).exp();
        assert!((x - formula).abs() < 1e-9, "{x} vs {formula}");
        assert!((x - 1.4939).abs() < 1e-4);
        let oracle = dense_argmax(|t| ln.d2pdf(t), ln.mode(), 5.0, 400_000);
        assert!((x - oracle).abs() < 2e-5);
        let e = bundle("exponential(rate=1)");
        assert_eq!(pmconv(&e, Side::Right).unwrap(), Some(0.0));
    }

    #[test]
    fn pmcurv_examples() {
        let e = bundle("exponential(rate=1)");
        let x = pmcurv(&e, Side::Right).unwrap().unwrap();
        assert!((x - 2f64.ln() / 2.0).abs() < 1e-9, "{x}");
        let oracle = dense_argmax(|t| curvature(&e, t), 0.0, 3.0, 300_000);
        assert!((x - oracle).abs() < 2e-5);
        let e = bundle("exponential(rate=0.5)");
        assert_eq!(pmcurv(&e, Side::Right).unwrap(), Some(0.0));
        let g = bundle("gaussian(mu=0,sigma=100)");
        let x = pmcurv(&g, Side::Right).unwrap().unwrap();
        assert!((x / (3f64.sqrt() * 100.0) - 1.0).abs() < 5e-3);
    }

    #[test]
    fn exponential_pmcurv_formula_matches_dense_grid() {
        for rate in [0.85, 0.95, 1.0, 2.0, 5.0] {
            let e = bundle(&format!("exponential(rate={rate})"));
            let hi = 10.0 / rate;
            let oracle = dense_argmax(|t| curvature(&e, t), 0.0, hi, 1_000_000);
            let x = exponential_pmcurv(rate);
            assert!((x - oracle).abs() < 2.0 * hi / 1e6, "rate {rate}: {x} vs {oracle}");
        }
    }

    #[test]
    fn closed_forms() {
        let g = closed_form_points(&"gaussian()".parse().unwrap()).unwrap();
        assert_eq!(g.right.pinf, Closed::Value(1.0));
        assert_eq!(g.right.pmconv, Closed::Value(3f64.sqrt()));
        let c = closed_form_points(&"cauchy()".parse().unwrap()).unwrap();
        match (c.right.pinf, c.right.pmconv) {
            (Closed::Value(a), Closed::Value(b)) => {
                assert!((a - 1.0 / 3f64.sqrt()).abs() < 1e-15);
                assert!((b - 1.0).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        let ln = closed_form_points(&"lognormal(mu=0,sigma=0.5)".parse().unwrap()).unwrap();
        let Closed::Value(x) = ln.right.pinf else { panic!() };
        assert!((x - ((-0.75 + 0.5 * 4.25f64.sqrt()) / 2.0).exp()).abs() < 1e-15);
        assert!((x - 1.1507).abs() < 1e-4);
        // Oracle: numeric root of d2pdf.
        let b = bundle("lognormal(mu=0,sigma=0.5)");
        let root = bisect(|t| b.d2pdf(t), b.mode(), 1.4).unwrap();
        assert!((x - root).abs() < 1e-9);
        assert!(closed_form_points(&"skewt(nu=3,s=2)".parse().unwrap()).is_none());
    }

    #[test]
    fn report_examples() {
        let r = report(&"gaussian()".parse().unwrap()).unwrap();
        assert!((r.right.pmconv.cdf().unwrap() - 0.9584).abs() < 5e-4);
        assert!((r.right.pinf.cdf().unwrap() - 0.841).abs() < 5e-4);
        assert_eq!(r.right.pinf.method, Method::ClosedForm);
        assert_eq!(r.right.pmcurv.method, Method::Numeric);
        let r = report(&"cauchy()".parse().unwrap()).unwrap();
        assert!((r.right.pinf.cdf().unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.right.pmconv.cdf().unwrap() - 0.75).abs() < 1e-12);
        let r = report(&"exponential(rate=1)".parse().unwrap()).unwrap();
        assert_eq!(r.right.pinf.x(), None);
        assert_eq!(r.left.pmconv.x(), None);
        assert_eq!(r.modal_region_conv, None);
    }

    #[test]
    fn json_shape() {
        let r = report(&"exponential(rate=1)".parse().unwrap()).unwrap();
        let v = r.to_json();
        assert_eq!(v["family"], "exponential");
        assert_eq!(v["params"]["rate"], 1.0);
        assert!(v["right"]["pinf"].is_null());
        assert!((v["right"]["pmcurv"].as_f64().unwrap() - 0.346_573_6).abs() < 1e-7);
        assert_eq!(v["right"]["method"]["pmconv"], "closed_form");
        assert!(v["modal_region_inf"].is_null());
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"cdf_at\""));
    }
}
