//! Monte Carlo MSE study for the sample delimiting points and parameter
//! sweeps of the population points.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::delimit::{report, Side};
use crate::dist::{kurtosis, make_bundle, DistributionSpec};
use crate::error::{Result, TailError};
use crate::kde::{amise_bandwidth, sample_pinf, sample_pmconv, true_roughness};
use crate::rng::mix_seed;

/// Which sample point the study estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    PInf,
    PMConv,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::PInf => "pinf",
            Target::PMConv => "pmconv",
        }
    }

    /// Derivative order of the estimator maximized for this target.
    pub fn order(self) -> usize {
        match self {
            Target::PInf => 1,
            Target::PMConv => 2,
        }
    }

    /// Right-side population point of the standard Student-t.
    pub fn true_point(self, nu: f64) -> f64 {
        match self {
            Target::PInf => (nu / (nu + 2.0)).sqrt(),
            Target::PMConv => (3.0 * nu / (nu + 2.0)).sqrt(),
        }
    }
}

impl FromStr for Target {
    type Err = TailError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pinf" => Ok(Target::PInf),
            "pmconv" => Ok(Target::PMConv),
            other => Err(TailError::Parse {
                input: other.to_string(),
                reason: "target must be pinf or pmconv".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseStudyConfig {
    pub nu_values: Vec<f64>,
    pub n_values: Vec<usize>,
    pub replications: usize,
    pub base_seed: u64,
    pub target: Target,
    /// Keep every replication's estimate in the result.
    pub keep_estimates: bool,
}

impl MseStudyConfig {
    pub fn new(target: Target, base_seed: u64) -> Self {
        MseStudyConfig {
            nu_values: vec![1.0, 5.0, 100.0],
            n_values: vec![100, 500, 2000],
            replications: 1000,
            base_seed,
            target,
            keep_estimates: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nu_values.is_empty() || self.n_values.is_empty() {
            return Err(TailError::InvalidArgument(
                "the study needs at least one nu and one n".into(),
            ));
        }
        if let Some(nu) = self.nu_values.iter().find(|nu| !(**nu > 0.0 && nu.is_finite())) {
            return Err(TailError::InvalidArgument(format!(
                "nu must be positive and finite, got {nu}"
            )));
        }
        if self.n_values.contains(&0) {
            return Err(TailError::InvalidArgument("sample sizes must be at least 1".into()));
        }
        if self.replications == 0 {
            return Err(TailError::InvalidArgument("replications must be at least 1".into()));
        }
        Ok(())
    }
}

/// Seed of replication `k` in cell `(nu, n)`.
pub fn replication_seed(base_seed: u64, nu: f64, n: usize, k: usize) -> u64 {
    mix_seed(&[base_seed, nu.to_bits(), n as u64, k as u64])
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseCell {
    pub nu: f64,
    pub n: usize,
    pub mse: f64,
    pub true_point: f64,
    pub bandwidth: f64,
    pub seeds: Vec<u64>,
    pub estimates: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub target: Target,
    pub base_seed: u64,
    pub replications: usize,
    /// Cells in `nu`-major order.
    pub cells: Vec<MseCell>,
}

impl SimResult {
    pub fn cell(&self, nu: f64, n: usize) -> Option<&MseCell> {
        self.cells.iter().find(|c| c.nu == nu && c.n == n)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("target,nu,n,N,mse,base_seed\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                self.target.name(),
                c.nu,
                c.n,
                self.replications,
                c.mse,
                self.base_seed
            );
        }
        out
    }
}

/// Monte Carlo MSE of the sample point on the right side of a standard
/// Student-t, one cell per `(nu, n)`.
///
/// Bandwidths come from the AMISE formula with the true roughness of the
/// Student-t density, and the mode is taken as known (0). Replications run in
/// parallel and are summed in index order, so results do not depend on
/// scheduling.
pub fn run_mse_study(config: &MseStudyConfig) -> Result<SimResult> {
    config.validate()?;
    let target = config.target;
    let order = target.order();

    // Roughness depends on nu only.
    let roughness: Vec<f64> = config
        .nu_values
        .par_iter()
        .map(|&nu| {
            let bundle = make_bundle(&DistributionSpec::student_t(nu, 0.0, 1.0)?)?;
            true_roughness(&bundle, order + 2).map_err(|e| e.context(format!("nu={nu}")))
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for (&nu, &rough) in config.nu_values.iter().zip(&roughness) {
        let bundle = make_bundle(&DistributionSpec::student_t(nu, 0.0, 1.0)?)?;
        let truth = target.true_point(nu);
        for &n in &config.n_values {
            let h = amise_bandwidth(order, n, rough)?;
            let seeds: Vec<u64> = (0..config.replications)
                .map(|k| replication_seed(config.base_seed, nu, n, k))
                .collect();
            let estimates: Vec<f64> = seeds
                .par_iter()
                .enumerate()
                .map(|(k, &seed)| {
                    let mut data = bundle.sample(n, seed);
                    data.sort_by(f64::total_cmp);
                    let est = match target {
                        Target::PInf => sample_pinf(&data, 0.0, Side::Right, h),
                        Target::PMConv => sample_pmconv(&data, 0.0, Side::Right, h),
                    };
                    est.map_err(|e| e.context(format!("nu={nu}, n={n}, replication {k}")))
                })
                .collect::<Result<_>>()?;
            let sum: f64 = estimates.iter().map(|e| (e - truth).powi(2)).sum();
            cells.push(MseCell {
                nu,
                n,
                mse: sum / config.replications as f64,
                true_point: truth,
                bandwidth: h,
                seeds,
                estimates: config.keep_estimates.then_some(estimates),
            });
        }
    }
    Ok(SimResult {
        target,
        base_seed: config.base_seed,
        replications: config.replications,
        cells,
    })
}

/// Values taken by one swept parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub param: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn linear(param: &str, from: f64, to: f64, steps: usize) -> Result<Self> {
        Self::build(param, from, to, steps, false)
    }

    pub fn log(param: &str, from: f64, to: f64, steps: usize) -> Result<Self> {
        Self::build(param, from, to, steps, true)
    }

    fn build(param: &str, from: f64, to: f64, steps: usize, log: bool) -> Result<Self> {
        if steps < 2 || !(to > from) || !from.is_finite() || !to.is_finite() {
            return Err(TailError::InvalidArgument(format!(
                "sweep grid needs from < to and at least 2 steps (got {from}..{to}, {steps})"
            )));
        }
        if log && !(from > 0.0) {
            return Err(TailError::InvalidArgument(format!(
                "a log grid needs a positive start, got {from}"
            )));
        }
        let last = (steps - 1) as f64;
        let values = (0..steps)
            .map(|k| {
                let t = k as f64 / last;
                if k + 1 == steps {
                    to
                } else if log {
                    from * (to / from).powf(t)
                } else {
                    from + (to - from) * t
                }
            })
            .collect();
        Ok(Axis {
            param: param.to_string(),
            values,
        })
    }
}

/// A family, fixed values for the other parameters and one or two swept
/// parameters (the last axis varies fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: DistributionSpec,
    pub axes: Vec<Axis>,
}

pub const PRESETS: [&str; 5] = [
    "lognormal-sigma",
    "studentt-nu",
    "gaussian-sigma",
    "exponential-lambda",
    "skewt-grid",
];

impl SweepSpec {
    pub fn new(base: DistributionSpec, axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(TailError::InvalidArgument("a sweep needs at least one axis".into()));
        }
        for axis in &axes {
            if base.param(&axis.param).is_none() {
                return Err(TailError::UnknownKey {
                    family: base.family().name(),
                    key: axis.param.clone(),
                    accepted: base.family().param_names().join(", "),
                });
            }
            if axis.values.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(TailError::InvalidArgument(format!(
                    "grid for {} is not strictly increasing",
                    axis.param
                )));
            }
        }
        Ok(SweepSpec { base, axes })
    }

    pub fn preset(name: &str) -> Result<Self> {
        let spec = match name {
            "lognormal-sigma" => SweepSpec::new(
                DistributionSpec::log_normal(0.0, 1.0)?,
                vec![Axis::linear("sigma", 0.1, 2.0, 40)?],
            ),
            "studentt-nu" => SweepSpec::new(
                DistributionSpec::student_t(1.0, 0.0, 1.0)?,
                vec![Axis::linear("nu", 1.0, 20.0, 40)?],
            ),
            "gaussian-sigma" => SweepSpec::new(
                DistributionSpec::gaussian(0.0, 1.0)?,
                vec![Axis::log("sigma", 0.1, 100.0, 40)?],
            ),
            "exponential-lambda" => SweepSpec::new(
                DistributionSpec::exponential(1.0)?,
                vec![Axis::linear("rate", 0.1, 5.0, 40)?],
            ),
            "skewt-grid" => SweepSpec::new(
                DistributionSpec::skew_t(1.0, 0.0, 0.0, 1.0)?,
                vec![Axis::linear("nu", 1.0, 20.0, 20)?, Axis::linear("s", -10.0, 10.0, 21)?],
            ),
            other => {
                return Err(TailError::InvalidArgument(format!(
                    "unknown preset '{other}'; available presets: {}",
                    PRESETS.join(", ")
                )))
            }
        }?;
        Ok(spec)
    }

    /// Parameter combinations in row order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut rows: Vec<Vec<f64>> = vec![Vec::new()];
        for axis in &self.axes {
            rows = rows
                .into_iter()
                .flat_map(|prefix| {
                    axis.values.iter().map(move |&v| {
                        let mut row = prefix.clone();
                        row.push(v);
                        row
                    })
                })
                .collect();
        }
        rows
    }
}

/// Right-side outputs at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepValues {
    pub pinf_r: Option<f64>,
    pub pmconv_r: Option<f64>,
    pub pmcurv_r: Option<f64>,
    pub cdf_pinf_r: Option<f64>,
    pub cdf_pmconv_r: Option<f64>,
    pub cdf_pmcurv_r: Option<f64>,
    pub q05: Option<f64>,
    pub q95: Option<f64>,
    pub kurtosis: Option<f64>,
}

impl SweepValues {
    fn fields(&self) -> [Option<f64>; 9] {
        [
            self.pinf_r,
            self.pmconv_r,
            self.pmcurv_r,
            self.cdf_pinf_r,
            self.cdf_pmconv_r,
            self.cdf_pmcurv_r,
            self.q05,
            self.q95,
            self.kurtosis,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub coords: Vec<f64>,
    /// `Err` carries the reason the row failed.
    pub values: std::result::Result<SweepValues, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axis_names: Vec<String>,
    pub rows: Vec<SweepRow>,
}

const SWEEP_COLUMNS: &str = "pinf_r,pmconv_r,pmcurv_r,cdf_pinf_r,cdf_pmconv_r,cdf_pmcurv_r,q05,q95,kurtosis";

impl SweepTable {
    pub fn failures(&self) -> impl Iterator<Item = (&[f64], &str)> {
        self.rows
            .iter()
            .filter_map(|r| r.values.as_ref().err().map(|e| (r.coords.as_slice(), e.as_str())))
    }

    /// One row per grid point; failed rows have empty output fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if self.axis_names.len() == 1 {
            out.push_str("param_value");
        } else {
            out.push_str(&self.axis_names.join(","));
        }
        out.push(',');
        out.push_str(SWEEP_COLUMNS);
        out.push('\n');
        for row in &self.rows {
            let coords: Vec<String> = row.coords.iter().map(|v| v.to_string()).collect();
            out.push_str(&coords.join(","));
            let fields = row.values.as_ref().map(|v| v.fields()).unwrap_or([None; 9]);
            for f in fields {
                out.push(',');
                if let Some(v) = f {
                    let _ = write!(out, "{v}");
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Right-side delimiting points, their cdf values, the 5% and 95% quantiles
/// and the kurtosis for `spec`.
pub fn sweep_values(spec: &DistributionSpec) -> Result<SweepValues> {
    let rep = report(spec)?;
    let bundle = make_bundle(spec)?;
    let r = rep.right;
    Ok(SweepValues {
        pinf_r: r.pinf.x(),
        pmconv_r: r.pmconv.x(),
        pmcurv_r: r.pmcurv.x(),
        cdf_pinf_r: r.pinf.cdf(),
        cdf_pmconv_r: r.pmconv.cdf(),
        cdf_pmcurv_r: r.pmcurv.cdf(),
        q05: Some(bundle.quantile(0.05)?),
        q95: Some(bundle.quantile(0.95)?),
        kurtosis: kurtosis(spec),
    })
}

/// Evaluate every grid point; a point that fails is recorded and the sweep
/// carries on.
pub fn run_sweep(spec: &SweepSpec) -> SweepTable {
    let rows = spec
        .points()
        .into_par_iter()
        .map(|coords| {
            let values = spec
                .axes
                .iter()
                .zip(&coords)
                .try_fold(spec.base.clone(), |s, (axis, &v)| s.with_param(&axis.param, v))
                .and_then(|s| sweep_values(&s))
                .map_err(|e| e.to_string());
            SweepRow { coords, values }
        })
        .collect();
    SweepTable {
        axis_names: spec.axes.iter().map(|a| a.param.clone()).collect(),
        rows,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterRow {
    pub label: String,
    pub cdf_pmcurv_r: Option<f64>,
    pub cdf_pmconv_r: Option<f64>,
    pub cdf_pinf_r: Option<f64>,
}

/// Parameterizations shown in the family scatter.
pub fn scatter_specs() -> Vec<DistributionSpec> {
    let mut specs = Vec::new();
    let mut push = |s: Result<DistributionSpec>| specs.push(s.expect("valid preset parameters"));
    push(DistributionSpec::gaussian(0.0, 1.0));
    push(DistributionSpec::cauchy(0.0, 1.0));
    for nu in [2.0, 3.0, 5.0, 10.0, 30.0] {
        push(DistributionSpec::student_t(nu, 0.0, 1.0));
    }
    for sigma in [0.25, 0.5, 1.0] {
        push(DistributionSpec::log_normal(0.0, sigma));
    }
    for rate in [0.5, 1.0, 2.0] {
        push(DistributionSpec::exponential(rate));
    }
    for (nu, s) in [(3.0, 2.0), (3.0, -2.0), (5.0, 5.0), (10.0, 1.0)] {
        push(DistributionSpec::skew_t(nu, s, 0.0, 1.0));
    }
    specs
}

/// cdf values at the right-side points for each family in
/// [`scatter_specs`]; absent points are `None`.
pub fn scatter_families() -> Result<Vec<ScatterRow>> {
    scatter_specs()
        .par_iter()
        .map(|spec| {
            let r = report(spec)?.right;
            Ok(ScatterRow {
                label: spec.to_string(),
                cdf_pmcurv_r: r.pmcurv.cdf(),
                cdf_pmconv_r: r.pmconv.cdf(),
                cdf_pinf_r: r.pinf.cdf(),
            })
        })
        .collect()
}

pub fn scatter_csv(rows: &[ScatterRow]) -> String {
    let mut out = String::from("distribution,cdf_pmcurv_r,cdf_pmconv_r,cdf_pinf_r\n");
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for r in rows {
        let _ = writeln!(
            out,
            "\"{}\",{},{},{}",
            r.label,
            opt(r.cdf_pmcurv_r),
            opt(r.cdf_pmconv_r),
            opt(r.cdf_pinf_r)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn true_points() {
        assert_eq!(Target::PMConv.true_point(1.0), 1.0);
        assert!((Target::PInf.true_point(1.0) - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let mut c = MseStudyConfig::new(Target::PInf, 1);
        assert!(c.validate().is_ok());
        c.nu_values = vec![0.0];
        assert!(c.validate().is_err());
        let mut c = MseStudyConfig::new(Target::PInf, 1);
        c.replications = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn small_study_is_deterministic() {
        let mut c = MseStudyConfig::new(Target::PInf, 9);
        c.nu_values = vec![5.0];
        c.n_values = vec![100];
        c.replications = 8;
        c.keep_estimates = true;
        let a = run_mse_study(&c).unwrap();
        let b = run_mse_study(&c).unwrap();
        assert_eq!(a, b);
        let cell = &a.cells[0];
        let est = cell.estimates.as_ref().unwrap();
        let mse = est.iter().map(|e| (e - cell.true_point).powi(2)).sum::<f64>() / 8.0;
        assert_eq!(mse, cell.mse);
        assert_eq!(a.to_csv().lines().count(), 2);
    }

    #[test]
    fn axes_and_points() {
        let a = Axis::log("sigma", 0.1, 100.0, 4).unwrap();
        assert!((a.values[1] - 1.0).abs() < 1e-12);
        assert_eq!(a.values[3], 100.0);
        assert!(Axis::linear("x", 1.0, 1.0, 3).is_err());
        let s = SweepSpec::preset("skewt-grid").unwrap();
        let pts = s.points();
        assert_eq!(pts.len(), 420);
        assert_eq!(pts[1], vec![1.0, -9.0]);
        assert!(SweepSpec::preset("nope").is_err());
        let bad = SweepSpec::new(
            DistributionSpec::gaussian(0.0, 1.0).unwrap(),
            vec![Axis::linear("nu", 1.0, 2.0, 3).unwrap()],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn failed_rows_leave_empty_fields() {
        let spec = SweepSpec {
            base: DistributionSpec::gaussian(0.0, 1.0).unwrap(),
            axes: vec![Axis {
                param: "sigma".into(),
                values: vec![-1.0, 1.0],
            }],
        };
        let table = run_sweep(&spec);
        assert_eq!(table.failures().count(), 1);
        let csv = table.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "-1,,,,,,,,,");
        assert!(lines[2].starts_with("1,1,"));
    }
}
