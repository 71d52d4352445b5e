use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

/// Class-error rate with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CerEstimate {
    pub errors: usize,
    pub trials: usize,
    pub cer: f64,
    pub stderr: f64,
}

impl CerEstimate {
    pub fn new(errors: usize, trials: usize) -> Result<Self> {
        if trials == 0 {
            return Err(input("CER needs at least one trial"));
        }
        if errors > trials {
            return Err(input(format!("{errors} errors in {trials} trials")));
        }
        let p = errors as f64 / trials as f64;
        Ok(Self {
            errors,
            trials,
            cer: p,
            stderr: (p * (1.0 - p) / trials as f64).sqrt(),
        })
    }

    /// Pools two independent estimates.
    pub fn combine(&self, other: &CerEstimate) -> Self {
        Self::new(self.errors + other.errors, self.trials + other.trials).expect("nonzero trials")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CerPoint {
    pub test_snr_db: f64,
    pub cer: f64,
    pub trials: usize,
    pub stderr: f64,
}

pub const CER_HEADER: &str = "test_snr_db,cer,trials,stderr";

/// CER against test SNR, kept sorted by SNR.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CerCurve {
    points: Vec<CerPoint>,
}

impl CerCurve {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, test_snr_db: f64, est: CerEstimate) {
        self.insert_point(CerPoint {
            test_snr_db,
            cer: est.cer,
            trials: est.trials,
            stderr: est.stderr,
        });
    }

    pub fn insert_point(&mut self, p: CerPoint) {
        let at = self.points.partition_point(|q| q.test_snr_db < p.test_snr_db);
        self.points.insert(at, p);
    }

    pub fn points(&self) -> &[CerPoint] {
        &self.points
    }

    pub fn at(&self, test_snr_db: f64) -> Option<&CerPoint> {
        self.points.iter().find(|p| p.test_snr_db == test_snr_db)
    }

    /// Adjacent pairs `(lower SNR, higher SNR)` where CER rises by more than `k` combined
    /// standard errors.
    pub fn monotonicity_violations(&self, k: f64) -> Vec<(f64, f64)> {
        self.points
            .windows(2)
            .filter(|w| {
                let se = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
                w[1].cer > w[0].cer + k * se
            })
            .map(|w| (w[0].test_snr_db, w[1].test_snr_db))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        if self.points.is_empty() {
            wtr.write_record(CER_HEADER.split(','))?;
        }
        for p in &self.points {
            wtr.serialize(p)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header.join(",") != CER_HEADER {
            return Err(input(format!("unexpected CER header `{}`", header.join(","))));
        }
        let mut curve = Self::new();
        for p in rdr.deserialize() {
            let p: CerPoint = p?;
            if !(0.0..=1.0).contains(&p.cer) {
                return Err(input(format!("cer {} outside [0, 1]", p.cer)));
            }
            curve.insert_point(p);
        }
        Ok(curve)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_stderr() {
        let e = CerEstimate::new(100, 10_000).unwrap();
        assert_eq!(e.cer, 0.01);
        assert!((e.stderr - (0.01f64 * 0.99 / 10_000.0).sqrt()).abs() < 1e-15);
        assert!(CerEstimate::new(0, 0).is_err());
    }

    #[test]
    fn curve_stays_sorted_and_round_trips() {
        let mut c = CerCurve::new();
        c.insert(10.0, CerEstimate::new(5, 100).unwrap());
        c.insert(-5.0, CerEstimate::new(90, 100).unwrap());
        c.insert(0.0, CerEstimate::new(50, 100).unwrap());
        let snrs: Vec<f64> = c.points().iter().map(|p| p.test_snr_db).collect();
        assert_eq!(snrs, vec![-5.0, 0.0, 10.0]);
        assert!(c.monotonicity_violations(2.0).is_empty());
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with(CER_HEADER));
        assert_eq!(CerCurve::read_csv(buf.as_slice()).unwrap(), c);
    }

    #[test]
    fn flags_rising_cer() {
        let mut c = CerCurve::new();
        c.insert(0.0, CerEstimate::new(10, 10_000).unwrap());
        c.insert(5.0, CerEstimate::new(500, 10_000).unwrap());
        assert_eq!(c.monotonicity_violations(2.0), vec![(0.0, 5.0)]);
    }
}
