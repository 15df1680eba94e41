//! Hydrograph error and grid-search calibration of the Manning coefficient.

use std::path::Path;

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io::{run_config, HydrographSeries};

/// Root mean square difference between `simulated`, linearly interpolated
/// to the observed times, and `observed` [m³/s].
pub fn rmse(simulated: &HydrographSeries, observed: &HydrographSeries) -> Result<f64> {
    rmse_points(simulated, &observed.iter().collect::<Vec<_>>())
}

/// [`rmse`] over observations `(t, Q)` in any order.
pub fn rmse_points(simulated: &HydrographSeries, observed: &[(f64, f64)]) -> Result<f64> {
    if observed.is_empty() {
        return Err(Error::Numerical("observed hydrograph is empty".into()));
    }
    let mut sum = 0.0;
    for &(t, q_obs) in observed {
        let q_sim = simulated.interpolate(t).ok_or_else(|| {
            let range = match (simulated.times().first(), simulated.times().last()) {
                (Some(a), Some(b)) => format!("[{a}, {b}]"),
                _ => "an empty series".into(),
            };
            Error::Numerical(format!("observation at t = {t} s lies outside the simulated range {range}"))
        })?;
        sum += (q_sim - q_obs).powi(2);
    }
    Ok((sum / observed.len() as f64).sqrt())
}

/// Outcome of a grid search: the best coefficient and `(n, rmse)` for every
/// grid point in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub n_best: f64,
    pub table: Vec<(f64, f64)>,
}

/// Runs `config` once per Manning coefficient in `n_grid` (in parallel) and
/// picks the smallest RMSE against `observed`; ties go to the smaller `n`.
pub fn calibrate_manning(config: &RunConfig, base_dir: &Path, observed: &HydrographSeries, n_grid: &[f64]) -> Result<Calibration> {
    if n_grid.is_empty() {
        return Err(Error::config("n_grid", "empty"));
    }
    if let Some(n) = n_grid.iter().find(|n| !(**n > 0.0 && n.is_finite())) {
        return Err(Error::config("n_grid", format!("coefficient {n} must be positive")));
    }
    let table = n_grid
        .par_iter()
        .map(|&n| {
            let cfg = RunConfig { manning: n, ..config.clone() };
            let wrap = |e: Error| Error::Numerical(format!("run with n = {n} failed: {e}"));
            let record = run_config(&cfg, base_dir, false).map_err(wrap)?;
            let sim = record
                .hydrograph
                .ok_or_else(|| Error::config("boundary", "calibration needs an outflow boundary"))?;
            Ok((n, rmse(&sim, observed).map_err(wrap)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let (n_best, _) = table
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)))
        .expect("non-empty grid");
    Ok(Calibration { n_best, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(points: &[(f64, f64)]) -> HydrographSeries {
        HydrographSeries::new(points.iter().map(|p| p.0).collect(), points.iter().map(|p| p.1).collect()).unwrap()
    }

    #[test]
    fn worked_examples() {
        let sim = series(&[(0.0, 0.0), (10.0, 1.0)]);
        assert!((rmse(&sim, &series(&[(5.0, 0.2)])).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(rmse(&sim, &sim).unwrap(), 0.0);
        let shifted = series(&[(0.0, 0.25), (10.0, 1.25)]);
        assert!((rmse(&sim, &shifted).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_empty_and_out_of_range() {
        let sim = series(&[(0.0, 0.0), (10.0, 1.0)]);
        assert!(rmse(&sim, &HydrographSeries::default()).is_err());
        assert!(rmse(&sim, &series(&[(11.0, 0.0)])).is_err());
    }

    proptest! {
        #[test]
        fn rmse_properties(
            qs in proptest::collection::vec(-1.0f64..1.0, 2..20),
            obs in proptest::collection::vec((0.0f64..1.0, -1.0f64..1.0), 1..10),
            rot in 0usize..10,
        ) {
            let n = qs.len();
            let sim = series(&qs.iter().enumerate().map(|(i, q)| (i as f64, *q)).collect::<Vec<_>>());
            let span = (n - 1) as f64;
            let mut pts: Vec<(f64, f64)> = obs.iter().map(|(t, q)| (t * span, *q)).collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            pts.dedup_by(|a, b| a.0 == b.0);
            let base = rmse(&sim, &series(&pts)).unwrap();
            prop_assert!(base >= 0.0);

            let mut shuffled = pts.clone();
            shuffled.rotate_left(rot % pts.len());
            shuffled.reverse();
            prop_assert!((rmse_points(&sim, &shuffled).unwrap() - base).abs() <= 1e-12);

            // zero exactly when the observations sit on the simulated curve
            let on_curve: Vec<(f64, f64)> = pts.iter().map(|(t, _)| (*t, sim.interpolate(*t).unwrap())).collect();
            prop_assert_eq!(rmse(&sim, &series(&on_curve)).unwrap(), 0.0);
        }
    }
}
