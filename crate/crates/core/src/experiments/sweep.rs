use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Protocol;
use crate::compiler::Readout;
use crate::engine::{propagate, EngineConfig, NoiseModel};
use crate::hamiltonian::NvParams;
use crate::operators::System;
use crate::{Error, Result};

/// One θ point of a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "theta_rad")]
    pub theta: f64,
    /// Gate-body RF time, s.
    #[serde(rename = "time_s")]
    pub time: f64,
    pub signal: f64,
    #[serde(rename = "stderr")]
    pub stderr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub system: System,
    pub protected: bool,
    /// Noise description in the noise-spec grammar.
    pub noise: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn validate(&self) -> Result<()> {
        for w in self.rows.windows(2) {
            if w[1].theta <= w[0].theta {
                return Err(Error::InvalidParameter("θ must be strictly increasing".into()));
            }
        }
        if let Some(r) = self.rows.iter().find(|r| !(0.0..=1.0).contains(&r.signal)) {
            return Err(Error::InvalidParameter(format!("signal {} outside [0, 1]", r.signal)));
        }
        Ok(())
    }

    /// Header `theta_rad,time_s,signal,stderr`; an absent stderr is empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row).map_err(csv_error)?;
        }
        if self.rows.is_empty() {
            w.write_record(["theta_rad", "time_s", "signal", "stderr"]).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Numeric(e.to_string()))
    }

    /// Rows only; metadata is not stored in CSV.
    pub fn read_csv_rows<R: Read>(input: R) -> Result<Vec<SweepRow>> {
        csv::Reader::from_reader(input)
            .deserialize()
            .collect::<std::result::Result<Vec<SweepRow>, _>>()
            .map_err(|e| Error::InvalidParameter(format!("bad sweep CSV: {e}")))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Numeric(e.to_string()))
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        n => (0..n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Population-readout signal over a θ grid.
///
/// θ points run in parallel; each point is an independent, seeded engine
/// run, so the table does not depend on scheduling. The standard error is
/// reported when classical noise is averaged over trajectories.
pub fn theta_sweep(
    protocol: &Protocol,
    system: System,
    noise: &NoiseModel,
    thetas: &[f64],
    params: &NvParams,
    config: &EngineConfig,
) -> Result<SweepTable> {
    if thetas.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidParameter("θ grid must be finite and non-negative".into()));
    }
    if thetas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("θ grid must be strictly increasing".into()));
    }
    let stochastic = noise.classical.is_some_and(|c| c.sigma() > 0.0) && config.n_traj > 1;
    let config = EngineConfig { keep_trajectories: stochastic, ..config.clone() };
    let rows = thetas
        .par_iter()
        .map(|&theta| {
            let (schedule, rho0) = protocol.compile(system, theta, Readout::Population, params)?;
            let result = propagate(&schedule, &rho0, params, noise, &config)?;
            let signal = result.signal("p0").ok_or_else(|| Error::Numeric("missing readout".into()))?;
            let stderr = result.trajectories.as_ref().map(|t| {
                let n = t.len() as f64;
                let mean = t.iter().map(|r| r[0]).sum::<f64>() / n;
                let var = t.iter().map(|r| (r[0] - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            });
            Ok(SweepRow { theta, time: protocol.gate_time(system, theta, params), signal, stderr })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { system, protected: protocol.is_protected(), noise: noise.to_string(), rows })
}
