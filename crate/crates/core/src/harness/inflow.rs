use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::Deserialize;

use super::config::InflowConfig;
use crate::ecology::{RiverYear, MONTHS};
use crate::{Error, Result};

const INFLOW_STREAM: u64 = 1;

#[derive(Debug, Deserialize)]
struct InflowRow {
    year: i64,
    month: usize,
    inflow: f64,
}

/// Reads a `year,month,inflow` CSV into one river year per calendar year,
/// in ascending year order.
pub fn read_inflow_csv(path: &Path) -> Result<Vec<RiverYear>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut years: BTreeMap<i64, [Option<f64>; MONTHS]> = BTreeMap::new();
    for (line, row) in reader.deserialize::<InflowRow>().enumerate() {
        let row = row.map_err(|e| csv_error(path, e))?;
        if !(1..=MONTHS).contains(&row.month) {
            return Err(Error::config(format!(
                "{}: row {}: month {} outside 1..=12",
                path.display(),
                line + 2,
                row.month
            )));
        }
        if !(row.inflow >= 0.0) || !row.inflow.is_finite() {
            return Err(Error::config(format!(
                "{}: row {}: inflow must be finite and >= 0",
                path.display(),
                line + 2
            )));
        }
        let slot = &mut years.entry(row.year).or_insert([None; MONTHS])[row.month - 1];
        if slot.replace(row.inflow).is_some() {
            return Err(Error::config(format!(
                "{}: duplicate entry for year {} month {}",
                path.display(),
                row.year,
                row.month
            )));
        }
    }
    if years.is_empty() {
        return Err(Error::config(format!("{}: no inflow rows", path.display())));
    }
    years
        .into_iter()
        .map(|(year, months)| {
            let mut q = [0.0; MONTHS];
            for (m, v) in months.iter().enumerate() {
                q[m] = v.ok_or_else(|| {
                    Error::config(format!("{}: year {year} is missing month {}", path.display(), m + 1))
                })?;
            }
            Ok(RiverYear::new(q))
        })
        .collect()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::config(format!("{}: {other:?}", path.display())),
    }
}

/// Seeded seasonal inflow series of `years` river years.
pub fn synthetic_inflows(cfg: &InflowConfig, years: usize, seed: u64) -> Result<Vec<RiverYear>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(INFLOW_STREAM);
    let sigma = cfg.noise_sigma;
    let noise = LogNormal::new(-sigma * sigma / 2.0, sigma).map_err(|e| Error::config(format!("inflow noise: {e}")))?;
    let base = cfg.mean_annual / MONTHS as f64;
    let shape: Vec<f64> = (1..=MONTHS)
        .map(|m| {
            let phase = 2.0 * PI * (m as f64 - f64::from(cfg.peak_month)) / MONTHS as f64;
            base * (1.0 + cfg.seasonal_amplitude * phase.cos())
        })
        .collect();
    Ok((0..years)
        .map(|_| {
            let mut q = [0.0; MONTHS];
            for (m, v) in q.iter_mut().enumerate() {
                *v = shape[m] * noise.sample(&mut rng);
            }
            RiverYear::new(q)
        })
        .collect())
}

/// River years for a run of `horizon` years. CSV series shorter than the
/// horizon are repeated from the start.
pub fn inflow_series(cfg: &InflowConfig, horizon: usize, seed: u64) -> Result<Vec<RiverYear>> {
    match &cfg.csv {
        Some(path) if path.exists() => {
            let years = read_inflow_csv(path)?;
            if years.len() < horizon {
                log::warn!(
                    "{} holds {} years, repeating it to cover {horizon}",
                    path.display(),
                    years.len()
                );
            }
            Ok(years.iter().cycle().take(horizon).cloned().collect())
        }
        Some(path) => {
            log::warn!("inflow file {} not found, using the synthetic series", path.display());
            synthetic_inflows(cfg, horizon, seed)
        }
        None => synthetic_inflows(cfg, horizon, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn synthetic_is_seeded_and_seasonal() {
        let cfg = InflowConfig {
            noise_sigma: 0.0,
            ..InflowConfig::default()
        };
        let a = synthetic_inflows(&cfg, 3, 9).unwrap();
        assert_eq!(a.len(), 3);
        assert!((a[0].annual_total() - cfg.mean_annual).abs() < 1e-9);
        let q = a[0].monthly_inflow;
        let peak = q.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1)).unwrap().0;
        assert_eq!(peak + 1, cfg.peak_month as usize);

        let noisy = InflowConfig::default();
        assert_eq!(synthetic_inflows(&noisy, 5, 1).unwrap(), synthetic_inflows(&noisy, 5, 1).unwrap());
        assert_ne!(synthetic_inflows(&noisy, 5, 1).unwrap(), synthetic_inflows(&noisy, 5, 2).unwrap());
    }

    #[test]
    fn csv_roundtrip_and_cycle() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "year,month,inflow").unwrap();
        for year in [2001, 2000] {
            for m in 1..=12 {
                writeln!(f, "{year},{m},{}", if year == 2000 { 1.0 } else { 2.0 }).unwrap();
            }
        }
        f.flush().unwrap();
        let years = read_inflow_csv(f.path()).unwrap();
        assert_eq!(years.len(), 2);
        assert_eq!(years[0].annual_total(), 12.0);
        let cfg = InflowConfig {
            csv: Some(f.path().to_path_buf()),
            ..InflowConfig::default()
        };
        let series = inflow_series(&cfg, 5, 0).unwrap();
        let totals: Vec<f64> = series.iter().map(RiverYear::annual_total).collect();
        assert_eq!(totals, vec![12.0, 24.0, 12.0, 24.0, 12.0]);
    }

    #[test]
    fn csv_missing_month_rejected() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "year,month,inflow\n1,1,5\n1,2,5").unwrap();
        f.flush().unwrap();
        let err = read_inflow_csv(f.path()).unwrap_err().to_string();
        assert!(err.contains("missing month 3"), "{err}");
    }

    #[test]
    fn missing_csv_falls_back_to_synthetic() {
        let cfg = InflowConfig {
            csv: Some("/no/such/inflow.csv".into()),
            ..InflowConfig::default()
        };
        assert_eq!(inflow_series(&cfg, 4, 3).unwrap().len(), 4);
    }
}
