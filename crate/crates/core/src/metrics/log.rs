use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::protocol::Direction;

/// Per-epoch, per-direction training measurements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub epoch: usize,
    pub direction: Direction,
    pub class_success: f64,
    pub loss_rx: f64,
    pub loss_tx: f64,
    pub loss_crit: f64,
    pub critic_accuracy: f64,
    pub measured_snr_db: f64,
}

pub const METRICS_HEADER: &str =
    "epoch,direction,class_success,loss_rx,loss_tx,loss_crit,critic_accuracy,measured_snr_db";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsLog {
    rows: Vec<MetricsRow>,
}

impl MetricsLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a row, enforcing fraction ranges and strictly increasing epochs per direction.
    pub fn push(&mut self, row: MetricsRow) -> Result<()> {
        for (name, v) in [
            ("class_success", row.class_success),
            ("critic_accuracy", row.critic_accuracy),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(input(format!("{name} {v} outside [0, 1]")));
            }
        }
        if let Some(last) = self.rows.iter().rev().find(|r| r.direction == row.direction) {
            if row.epoch <= last.epoch {
                return Err(input(format!(
                    "epoch {} does not follow epoch {} for direction {}",
                    row.epoch, last.epoch, row.direction
                )));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[MetricsRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Distinct epochs in ascending order.
    pub fn epochs(&self) -> Vec<usize> {
        let mut e: Vec<usize> = self.rows.iter().map(|r| r.epoch).collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// `(epoch, class_success)` for one direction, or the mean over directions when `None`.
    pub fn success_trace(&self, direction: Option<Direction>) -> Vec<(usize, f64)> {
        match direction {
            Some(d) => self
                .rows
                .iter()
                .filter(|r| r.direction == d)
                .map(|r| (r.epoch, r.class_success))
                .collect(),
            None => self
                .epochs()
                .into_iter()
                .map(|e| {
                    let vals: Vec<f64> = self
                        .rows
                        .iter()
                        .filter(|r| r.epoch == e)
                        .map(|r| r.class_success)
                        .collect();
                    (e, vals.iter().sum::<f64>() / vals.len() as f64)
                })
                .collect(),
        }
    }

    pub fn last_epoch(&self) -> Option<usize> {
        self.rows.iter().map(|r| r.epoch).max()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        if self.rows.is_empty() {
            wtr.write_record(METRICS_HEADER.split(','))?;
        }
        for r in &self.rows {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header.join(",") != METRICS_HEADER {
            return Err(input(format!("unexpected metrics header `{}`", header.join(","))));
        }
        let mut log = Self::new();
        for row in rdr.deserialize() {
            log.push(row?)?;
        }
        Ok(log)
    }
}
