//! Noise models: Markovian Lindblad rates and classical detuning processes.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Markovian relaxation times in seconds. A missing time disables that channel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LindbladNoise {
    #[serde(default, rename = "T1")]
    pub t1: Option<f64>,
    #[serde(default, rename = "T2")]
    pub t2: Option<f64>,
}

/// Random electron detuning δ(t) entering as δ·Sz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassicalNoise {
    /// One draw δ ~ N(0, σ²) per trajectory.
    StaticGaussian { sigma: f64 },
    /// Stationary Ornstein-Uhlenbeck process with ⟨δ(0)δ(τ)⟩ = σ²·e^{−|τ|/τ_c}.
    Ou { sigma: f64, tau_c: f64 },
}

impl ClassicalNoise {
    pub fn sigma(&self) -> f64 {
        match *self {
            ClassicalNoise::StaticGaussian { sigma } | ClassicalNoise::Ou { sigma, .. } => sigma,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    #[serde(default)]
    pub lindblad: Option<LindbladNoise>,
    #[serde(default)]
    pub classical: Option<ClassicalNoise>,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn lindblad(t1: Option<f64>, t2: Option<f64>) -> Self {
        Self { lindblad: Some(LindbladNoise { t1, t2 }), classical: None }
    }

    pub fn static_gaussian(sigma: f64) -> Self {
        Self { lindblad: None, classical: Some(ClassicalNoise::StaticGaussian { sigma }) }
    }

    pub fn ou(sigma: f64, tau_c: f64) -> Self {
        Self { lindblad: None, classical: Some(ClassicalNoise::Ou { sigma, tau_c }) }
    }

    pub fn is_noiseless(&self) -> bool {
        let dissipative = self.lindblad.is_some_and(|l| l.t1.is_some() || l.t2.is_some());
        let classical = self.classical.is_some_and(|c| c.sigma() > 0.0);
        !dissipative && !classical
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        if let Some(l) = self.lindblad {
            if let Some(t1) = l.t1 {
                positive("T1", t1)?;
            }
            if let Some(t2) = l.t2 {
                positive("T2", t2)?;
            }
        }
        match self.classical {
            Some(ClassicalNoise::StaticGaussian { sigma }) if !(sigma.is_finite() && sigma >= 0.0) => {
                Err(Error::Config(format!("sigma must be non-negative, got {sigma}")))
            }
            Some(ClassicalNoise::Ou { sigma, tau_c }) => {
                if !(sigma.is_finite() && sigma >= 0.0) {
                    return Err(Error::Config(format!("sigma must be non-negative, got {sigma}")));
                }
                positive("tau", tau_c)
            }
            _ => Ok(()),
        }
    }
}

fn parse_with_units(text: &str, units: &[(&str, f64)]) -> Result<f64> {
    let text = text.trim();
    let split = text
        .char_indices()
        .find(|&(_, ch)| ch.is_alphabetic() && ch != 'e' && ch != 'E')
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    let (number, unit) = text.split_at(split);
    let value: f64 =
        number.trim().parse().map_err(|_| Error::Config(format!("cannot parse number in '{text}'")))?;
    let scale = units
        .iter()
        .find(|(u, _)| *u == unit.trim())
        .map(|(_, s)| *s)
        .ok_or_else(|| Error::Config(format!("unknown or missing unit in '{text}'")))?;
    Ok(value * scale)
}

const TIME_UNITS: &[(&str, f64)] = &[("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("µs", 1e-6), ("ns", 1e-9)];
const FREQ_UNITS: &[(&str, f64)] = &[("Hz", 1.0), ("kHz", 1e3), ("MHz", 1e6), ("GHz", 1e9)];

/// Mini-grammar: `none`, `lindblad:T1=3.5ms,T2=34us`, `static:sigma=6.62kHz`,
/// `ou:sigma=5kHz,tau=100us`; a Lindblad term and one classical term may be
/// joined with `+`.
impl FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut model = NoiseModel::default();
        let s = s.trim();
        if s.is_empty() || s == "none" {
            return Ok(model);
        }
        for term in s.split('+') {
            let term = term.trim();
            let (kind, args) = term.split_once(':').unwrap_or((term, ""));
            let mut fields = Vec::new();
            for kv in args.split(',').filter(|kv| !kv.trim().is_empty()) {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("expected key=value in noise term '{term}'")))?;
                if fields.iter().any(|(seen, _): &(&str, &str)| *seen == k.trim()) {
                    return Err(Error::Config(format!("duplicate key '{}' in noise term '{term}'", k.trim())));
                }
                fields.push((k.trim(), v.trim()));
            }
            let unknown = |allowed: &[&str]| {
                fields
                    .iter()
                    .find(|(k, _)| !allowed.contains(k))
                    .map(|(k, _)| Err(Error::Config(format!("unknown key '{k}' in noise term '{term}'"))))
                    .unwrap_or(Ok(()))
            };
            let get = |key: &str| fields.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
            match kind {
                "lindblad" => {
                    unknown(&["T1", "T2"])?;
                    if model.lindblad.is_some() {
                        return Err(Error::Config("more than one lindblad term".into()));
                    }
                    model.lindblad = Some(LindbladNoise {
                        t1: get("T1").map(|v| parse_with_units(v, TIME_UNITS)).transpose()?,
                        t2: get("T2").map(|v| parse_with_units(v, TIME_UNITS)).transpose()?,
                    });
                }
                "static" | "ou" => {
                    if model.classical.is_some() {
                        return Err(Error::Config("at most one classical noise term is allowed".into()));
                    }
                    let sigma = get("sigma")
                        .ok_or_else(|| Error::Config(format!("noise term '{term}' needs sigma")))
                        .and_then(|v| parse_with_units(v, FREQ_UNITS))?;
                    model.classical = Some(if kind == "static" {
                        unknown(&["sigma"])?;
                        ClassicalNoise::StaticGaussian { sigma }
                    } else {
                        unknown(&["sigma", "tau"])?;
                        let tau_c = get("tau")
                            .ok_or_else(|| Error::Config(format!("noise term '{term}' needs tau")))
                            .and_then(|v| parse_with_units(v, TIME_UNITS))?;
                        ClassicalNoise::Ou { sigma, tau_c }
                    });
                }
                other => return Err(Error::Config(format!("unknown noise kind '{other}'"))),
            }
        }
        model.validate()?;
        Ok(model)
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        if let Some(l) = self.lindblad {
            let mut parts = Vec::new();
            if let Some(t1) = l.t1 {
                parts.push(format!("T1={t1}s"));
            }
            if let Some(t2) = l.t2 {
                parts.push(format!("T2={t2}s"));
            }
            terms.push(format!("lindblad:{}", parts.join(",")));
        }
        match self.classical {
            Some(ClassicalNoise::StaticGaussian { sigma }) => terms.push(format!("static:sigma={sigma}Hz")),
            Some(ClassicalNoise::Ou { sigma, tau_c }) => terms.push(format!("ou:sigma={sigma}Hz,tau={tau_c}s")),
            None => {}
        }
        if terms.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&terms.join("+"))
        }
    }
}

/// Running detuning value of one trajectory.
#[derive(Clone, Debug)]
pub struct NoiseProcess {
    model: ClassicalNoise,
    value: f64,
    rng: ChaCha8Rng,
}

impl NoiseProcess {
    /// Starts from the stationary distribution.
    pub fn new(model: ClassicalNoise, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xi: f64 = StandardNormal.sample(&mut rng);
        Self { model, value: model.sigma() * xi, rng }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Exact OU update over `dt`; static noise never changes.
    pub fn advance(&mut self, dt: f64) {
        if let ClassicalNoise::Ou { sigma, tau_c } = self.model {
            let decay = (-dt / tau_c).exp();
            let xi: f64 = StandardNormal.sample(&mut self.rng);
            self.value = self.value * decay + sigma * (1.0 - decay * decay).max(0.0).sqrt() * xi;
        }
    }

    pub fn is_static(&self) -> bool {
        matches!(self.model, ClassicalNoise::StaticGaussian { .. })
    }
}

/// Piecewise-constant detuning trace (Hz) on a grid of `ceil(duration/dt)`
/// steps; entry i holds δ on [i·dt, (i+1)·dt).
pub fn sample_noise(model: ClassicalNoise, duration: f64, dt: f64, seed: u64) -> Result<Vec<f64>> {
    if !(dt.is_finite() && dt > 0.0) || !(duration.is_finite() && duration >= 0.0) {
        return Err(Error::InvalidParameter("noise grid needs dt > 0 and duration ≥ 0".into()));
    }
    let steps = (duration / dt).ceil() as usize;
    let mut process = NoiseProcess::new(model, seed);
    Ok((0..steps)
        .map(|_| {
            let v = process.value();
            process.advance(dt);
            v
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn variance(v: &[f64]) -> f64 {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    }

    #[test]
    fn zero_sigma_is_silent() {
        let trace = sample_noise(ClassicalNoise::Ou { sigma: 0.0, tau_c: 1e-6 }, 1e-4, 1e-7, 3).unwrap();
        assert!(trace.iter().all(|&x| x == 0.0));
        let trace = sample_noise(ClassicalNoise::StaticGaussian { sigma: 0.0 }, 1e-4, 1e-6, 3).unwrap();
        assert!(trace.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn static_variance() {
        let sigma = 6.62e3;
        let draws: Vec<f64> = (0..100_000u64)
            .map(|seed| NoiseProcess::new(ClassicalNoise::StaticGaussian { sigma }, seed).value())
            .collect();
        let ratio = variance(&draws) / (sigma * sigma);
        assert!((ratio - 1.0).abs() < 0.03, "variance ratio {ratio}");
    }

    #[test]
    fn ou_stationary_and_correlated() {
        let sigma = 2.0e3;
        let tau_c = 1e-5;
        let dt = 1e-6;
        let trace = sample_noise(ClassicalNoise::Ou { sigma, tau_c }, 0.2, dt, 11).unwrap();
        let ratio = variance(&trace) / (sigma * sigma);
        assert!((ratio - 1.0).abs() < 0.05, "variance ratio {ratio}");
        let lag = 10;
        let n = trace.len() - lag;
        let acf = trace.iter().zip(&trace[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
        let expected = sigma * sigma * (-(lag as f64) * dt / tau_c).exp();
        assert!((acf - expected).abs() < 0.05 * sigma * sigma, "acf {acf} vs {expected}");
    }

    #[test]
    fn ou_long_correlation_behaves_static() {
        let sigma = 1.0e3;
        let model = ClassicalNoise::Ou { sigma, tau_c: 1e3 };
        let mut acc = 0.0;
        let n = 4000;
        for seed in 0..n {
            let trace = sample_noise(model, 1e-3, 1e-4, seed).unwrap();
            acc += trace[0] * trace[9];
        }
        assert!(acc / n as f64 >= 0.99 * sigma * sigma * 0.9, "lag correlation {}", acc / n as f64);
        let mut p = NoiseProcess::new(model, 5);
        let v0 = p.value();
        p.advance(1e-6);
        assert!((p.value() - v0).abs() < 1e-3 * sigma);
    }

    #[test]
    fn grammar() {
        let m: NoiseModel = "lindblad:T1=3.5ms,T2=34us".parse().unwrap();
        let l = m.lindblad.unwrap();
        assert!((l.t1.unwrap() - 3.5e-3).abs() < 1e-15 && (l.t2.unwrap() - 34e-6).abs() < 1e-18);
        let m: NoiseModel = "static:sigma=6.62kHz".parse().unwrap();
        assert_eq!(m.classical, Some(ClassicalNoise::StaticGaussian { sigma: 6620.0 }));
        let m: NoiseModel = "lindblad:T2=4ms + ou:sigma=1kHz,tau=100us".parse().unwrap();
        assert!(m.lindblad.is_some() && matches!(m.classical, Some(ClassicalNoise::Ou { .. })));
        assert!("none".parse::<NoiseModel>().unwrap().is_noiseless());
        for bad in ["static", "static:sigma=1", "ou:sigma=1kHz", "lindblad:T3=1ms", "quantum:x=1", "lindblad:T2=-1ms"] {
            assert!(bad.parse::<NoiseModel>().is_err(), "{bad} should fail");
        }
    }

    #[test]
    fn display_round_trip() {
        for text in ["none", "lindblad:T1=3.5ms,T2=34us", "static:sigma=6.62kHz", "lindblad:T2=4ms+ou:sigma=1kHz,tau=1ms"] {
            let m: NoiseModel = text.parse().unwrap();
            let again: NoiseModel = m.to_string().parse().unwrap();
            assert_eq!(m, again);
        }
    }
}
