use tailpoint::sim::{
    replication_seed, run_mse_study, run_sweep, scatter_families, sweep_values, Axis, MseStudyConfig, SweepSpec,
    Target, PRESETS,
};
use tailpoint::{make_bundle, DistributionSpec};

fn values(spec: &str) -> tailpoint::sim::SweepValues {
    sweep_values(&spec.parse().unwrap()).unwrap()
}

#[test]
fn studentt_sweep_row() {
    let table = run_sweep(&SweepSpec::preset("studentt-nu").unwrap());
    assert_eq!(table.rows.len(), 40);
    assert_eq!(table.rows[0].coords, vec![1.0]);
    assert_eq!(table.rows[39].coords, vec![20.0]);
    assert_eq!(table.failures().count(), 0);

    let v = values("studentt(nu=3)");
    assert!((v.pinf_r.unwrap() - 0.7746).abs() < 1e-4);
    assert!((v.pmconv_r.unwrap() - 1.3416).abs() < 1e-4);
    assert!(v.kurtosis.is_none());
    // Grid oracle: the largest f'' over a fine uniform grid sits next to pmconv.
    let b = make_bundle(&"studentt(nu=3)".parse().unwrap()).unwrap();
    let best = (0..=40_000)
        .map(|k| k as f64 * 1e-4)
        .max_by(|a, b2| b.d2pdf(*a).total_cmp(&b.d2pdf(*b2)))
        .unwrap();
    assert!((best - v.pmconv_r.unwrap()).abs() <= 1e-4);
}

#[test]
fn skewt_without_skew_matches_studentt() {
    let spec = SweepSpec::new(
        DistributionSpec::skew_t(1.0, 0.0, 0.0, 1.0).unwrap(),
        vec![
            Axis::linear("nu", 2.0, 4.0, 3).unwrap(),
            Axis::linear("s", -1.0, 1.0, 3).unwrap(),
        ],
    )
    .unwrap();
    let table = run_sweep(&spec);
    let row = table.rows.iter().find(|r| r.coords == [3.0, 0.0]).unwrap();
    let got = row.values.as_ref().unwrap();
    let want = values("studentt(nu=3)");
    for (a, b) in [
        (got.pinf_r, want.pinf_r),
        (got.pmconv_r, want.pmconv_r),
        (got.pmcurv_r, want.pmcurv_r),
        (got.cdf_pinf_r, want.cdf_pinf_r),
    ] {
        assert!((a.unwrap() - b.unwrap()).abs() < 1e-6, "{a:?} vs {b:?}");
    }
}

#[test]
fn lognormal_sweep_opposite_trends() {
    let table = run_sweep(&SweepSpec::preset("lognormal-sigma").unwrap());
    let rows: Vec<_> = table.rows.iter().map(|r| r.values.clone().unwrap()).collect();
    for w in rows.windows(2) {
        assert!(w[1].cdf_pmconv_r.unwrap() < w[0].cdf_pmconv_r.unwrap());
        assert!(w[1].q95.unwrap() > w[0].q95.unwrap());
    }
    for (r, v) in table.rows.iter().zip(&rows) {
        let expected = (1.644_853_626_951_472_2 * r.coords[0]).exp();
        assert!((v.q95.unwrap() / expected - 1.0).abs() < 1e-9);
    }
}

#[test]
fn gaussian_pmcurv_tends_to_pmconv() {
    let table = run_sweep(&SweepSpec::preset("gaussian-sigma").unwrap());
    let ratios: Vec<f64> = table
        .rows
        .iter()
        .map(|r| {
            let v = r.values.as_ref().unwrap();
            v.pmcurv_r.unwrap() / v.pmconv_r.unwrap()
        })
        .collect();
    assert!((ratios.last().unwrap() - 1.0).abs() < 1e-3, "{ratios:?}");
    assert!((ratios[0] - 1.0).abs() > (ratios.last().unwrap() - 1.0).abs());
}

#[test]
fn exponential_sweep_has_no_inflection() {
    let table = run_sweep(&SweepSpec::preset("exponential-lambda").unwrap());
    assert!(table.rows.iter().all(|r| r.values.as_ref().unwrap().pinf_r.is_none()));
    let csv = table.to_csv();
    let first = csv.lines().nth(1).unwrap();
    assert!(first.split(',').nth(1).unwrap().is_empty(), "{first}");
}

#[test]
fn sweep_specs_are_validated() {
    let base = DistributionSpec::gaussian(0.0, 1.0).unwrap();
    assert!(SweepSpec::new(
        base.clone(),
        vec![Axis {
            param: "nu".into(),
            values: vec![1.0, 2.0]
        }]
    )
    .is_err());
    assert!(SweepSpec::new(
        base.clone(),
        vec![Axis {
            param: "sigma".into(),
            values: vec![2.0, 1.0]
        }]
    )
    .is_err());
    assert!(SweepSpec::preset("nope").unwrap_err().to_string().contains(PRESETS[0]));

    // A grid point outside the parameter space fails its row only.
    let spec = SweepSpec::new(
        base,
        vec![Axis {
            param: "sigma".into(),
            values: vec![-1.0, 1.0],
        }],
    )
    .unwrap();
    let table = run_sweep(&spec);
    assert!(table.rows[0].values.is_err());
    assert!(table.rows[1].values.is_ok());
    assert_eq!(table.failures().count(), 1);
}

#[test]
fn scatter_rows() {
    let rows = scatter_families().unwrap();
    let find = |label: &str| rows.iter().find(|r| r.label.starts_with(label)).unwrap();
    let g = find("gaussian");
    assert!((g.cdf_pmconv_r.unwrap() - 0.9584).abs() < 5e-4);
    assert!((g.cdf_pinf_r.unwrap() - 0.841).abs() < 5e-4);
    let c = find("cauchy");
    assert!((c.cdf_pmconv_r.unwrap() - 0.75).abs() < 1e-9);
    assert!((c.cdf_pinf_r.unwrap() - 2.0 / 3.0).abs() < 1e-9);
    let e = rows.iter().find(|r| r.label == "exponential(rate=1)").unwrap();
    assert!(e.cdf_pinf_r.is_none());
    for r in &rows {
        let (k, c) = (r.cdf_pmcurv_r.unwrap(), r.cdf_pmconv_r.unwrap());
        assert!((0.0..=1.0).contains(&k) && (0.0..=1.0).contains(&c), "{}", r.label);
    }
}

fn small_config(target: Target, seed: u64, reps: usize) -> MseStudyConfig {
    let mut c = MseStudyConfig::new(target, seed);
    c.replications = reps;
    c
}

#[test]
fn studies_are_deterministic_and_rerunnable() {
    let mut config = small_config(Target::PMConv, 9, 8);
    config.nu_values = vec![1.0, 5.0];
    config.n_values = vec![100, 500];
    config.keep_estimates = true;
    let a = run_mse_study(&config).unwrap();
    let b = run_mse_study(&config).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.to_csv().lines().next().unwrap(), "target,nu,n,N,mse,base_seed");

    // One cell on its own reproduces the same seeds and estimates.
    let mut one = config.clone();
    one.nu_values = vec![5.0];
    one.n_values = vec![500];
    let single = run_mse_study(&one).unwrap();
    assert_eq!(&single.cells[0], a.cell(5.0, 500).unwrap());

    let cell = a.cell(1.0, 100).unwrap();
    assert_eq!(cell.seeds[3], replication_seed(9, 1.0, 100, 3));
    let est = cell.estimates.as_ref().unwrap();
    let mse = est.iter().map(|e| (e - cell.true_point).powi(2)).sum::<f64>() / 8.0;
    assert_eq!(mse, cell.mse);
    assert_eq!(cell.true_point, 1.0);

    let mut other = config.clone();
    other.base_seed = 10;
    assert_ne!(run_mse_study(&other).unwrap().cells[0].mse, a.cells[0].mse);
}

#[test]
fn mse_shrinks_with_sample_size() {
    let mut config = small_config(Target::PInf, 4, 60);
    config.n_values = vec![100, 2000];
    let r = run_mse_study(&config).unwrap();
    for nu in [1.0, 5.0, 100.0] {
        assert!(r.cell(nu, 2000).unwrap().mse < r.cell(nu, 100).unwrap().mse, "nu={nu}");
    }
}

#[test]
fn convexity_point_is_harder_to_estimate() {
    let avg = |t: Target| -> Vec<f64> {
        let runs: Vec<_> = (1..=5)
            .map(|s| run_mse_study(&small_config(t, s, 20)).unwrap())
            .collect();
        (0..9)
            .map(|i| runs.iter().map(|r| r.cells[i].mse).sum::<f64>() / 5.0)
            .collect()
    };
    let (a, b) = (avg(Target::PInf), avg(Target::PMConv));
    for i in 0..9 {
        assert!(b[i] >= a[i], "cell {i}: {} < {}", b[i], a[i]);
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let mut c = small_config(Target::PInf, 1, 5);
    c.n_values = vec![0];
    assert!(run_mse_study(&c).is_err());
}
