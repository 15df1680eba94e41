use std::path::Path;

use overland::calibrate::calibrate_manning;
use overland::config::parse_config;
use overland::io::{run_config, HydrographSeries};

const CASE: &str = "\
domain = 5 0.5
nx = 20
ny = 2
bottom = slope 0.04
boundary = right outflow
rain = 0 90 80mm/h
manning = 0.3
t_end = 150
output_every = 5
";

fn observed(n: f64) -> HydrographSeries {
    let cfg = parse_config(CASE).unwrap();
    let cfg = overland::config::RunConfig { manning: n, ..cfg };
    run_config(&cfg, Path::new("."), false).unwrap().hydrograph.unwrap()
}

#[test]
fn recovers_coefficient_from_synthetic_observations() {
    let cfg = parse_config(CASE).unwrap();
    let obs = observed(0.3);
    let result = calibrate_manning(&cfg, Path::new("."), &obs, &[0.2, 0.3, 0.4]).unwrap();
    assert_eq!(result.n_best, 0.3);
    assert_eq!(result.table.len(), 3);
    assert_eq!(result.table[1], (0.3, 0.0));
    assert!(result.table[0].1 > 0.0 && result.table[2].1 > 0.0);
}

#[test]
fn rmse_grows_away_from_truth() {
    let cfg = parse_config(CASE).unwrap();
    let obs = observed(0.3);
    let grid = [0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.45];
    let table = calibrate_manning(&cfg, Path::new("."), &obs, &grid).unwrap().table;
    assert_eq!(table.iter().map(|r| r.0).collect::<Vec<_>>(), grid);
    for w in table[..5].windows(2) {
        assert!(w[0].1 > w[1].1, "{table:?}");
    }
    for w in table[4..].windows(2) {
        assert!(w[0].1 < w[1].1, "{table:?}");
    }
}

#[test]
fn ties_go_to_smaller_coefficient() {
    // without rain nothing ever leaves, so every coefficient fits equally well
    let dry = CASE.replace("rain = 0 90 80mm/h\n", "");
    let cfg = parse_config(&dry).unwrap();
    let obs = HydrographSeries::new(vec![0.0, 50.0, 100.0], vec![0.0; 3]).unwrap();
    let result = calibrate_manning(&cfg, Path::new("."), &obs, &[0.4, 0.2, 0.3]).unwrap();
    assert_eq!(result.n_best, 0.2);
}

#[test]
fn invalid_grids_and_failures() {
    let cfg = parse_config(CASE).unwrap();
    let obs = observed(0.3);
    assert!(calibrate_manning(&cfg, Path::new("."), &obs, &[]).is_err());
    assert!(calibrate_manning(&cfg, Path::new("."), &obs, &[0.2, -0.1]).is_err());
    let late = HydrographSeries::new(vec![1000.0], vec![0.0]).unwrap();
    let err = calibrate_manning(&cfg, Path::new("."), &late, &[0.2]).unwrap_err();
    assert!(err.to_string().contains("n = 0.2"), "{err}");
}
