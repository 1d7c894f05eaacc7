//! Run configuration: defaults ← TOML file ← command-line flags.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bsa::DetectorParams;
use crate::channel::{AdversaryModel, Topology};
use crate::error::check_range;
use crate::protocol::{DEFAULT_SAMPLE_FRACTION, DEFAULT_THRESHOLD};
use crate::rates::SystemParams;

use super::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    pub eta_d: f64,
    pub eta_analyzer: f64,
    /// One rate file is written per value.
    pub dark_count: Vec<f64>,
}

impl Default for DetectorSection {
    fn default() -> Self {
        let d = DetectorParams::default();
        Self {
            eta_d: d.eta_d,
            eta_analyzer: d.eta_analyzer,
            dark_count: vec![d.p_d],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    /// dB/km.
    pub alpha: f64,
    /// `P = 1 − e_x`, with `e_y = e_x` unless `e_y` is set.
    pub fidelity: Vec<f64>,
    pub e_y: Option<f64>,
    pub topology: Vec<Topology>,
    /// Segment length for simulations.
    pub distance_km: f64,
    pub q_eve_ratio: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            alpha: 0.19,
            fidelity: vec![0.99, 0.97],
            e_y: None,
            topology: vec![Topology::Symmetric],
            distance_km: 0.0,
            q_eve_ratio: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    pub parties: usize,
    pub rounds: u64,
    pub seed: u64,
    pub sample_fraction: f64,
    pub threshold: f64,
    pub adversary: AdversaryModel,
    /// Not echoed: outputs must not depend on it.
    #[serde(skip_serializing)]
    pub workers: usize,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            parties: 3,
            rounds: 100_000,
            seed: 1,
            sample_fraction: DEFAULT_SAMPLE_FRACTION,
            threshold: DEFAULT_THRESHOLD,
            adversary: AdversaryModel::None,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatesSection {
    /// `START:STOP:STEP` in km.
    pub grid: String,
}

impl Default for RatesSection {
    fn default() -> Self {
        Self {
            grid: "0:400:1".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub trials: usize,
    pub seed: u64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            trials: 100_000,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub detector: DetectorSection,
    pub channel: ChannelSection,
    pub protocol: ProtocolSection,
    pub rates: RatesSection,
    pub verify: VerifySection,
}

fn bad(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(bad)
    }

    /// Every numeric field against its range.
    pub fn validate(&self) -> Result<(), CliError> {
        for &p_d in &self.detector.dark_count {
            DetectorParams::new(self.detector.eta_d, p_d, self.detector.eta_analyzer)
                .map_err(bad)?;
        }
        if self.detector.dark_count.is_empty() {
            return Err(bad("at least one dark-count value is required"));
        }
        if self.channel.fidelity.is_empty() || self.channel.topology.is_empty() {
            return Err(bad("at least one fidelity and one topology are required"));
        }
        for p in self.system_params() {
            p.map_err(bad)?;
        }
        check_range(
            "distance_km",
            self.channel.distance_km,
            0.0,
            f64::MAX,
            "[0, inf)",
        )
        .map_err(bad)?;
        let pr = &self.protocol;
        if pr.parties < 3 {
            return Err(bad(format!(
                "parties must be at least 3, got {}",
                pr.parties
            )));
        }
        if pr.rounds == 0 {
            return Err(bad("rounds must be at least 1"));
        }
        if !(pr.sample_fraction > 0.0 && pr.sample_fraction < 1.0) {
            return Err(bad(format!(
                "sample_fraction must lie in (0, 1), got {}",
                pr.sample_fraction
            )));
        }
        check_range("threshold", pr.threshold, 0.0, 1.0, "[0, 1]").map_err(bad)?;
        if self.verify.trials == 0 {
            return Err(bad("trials must be at least 1"));
        }
        parse_grid(&self.rates.grid)?;
        Ok(())
    }

    pub fn detector(&self, p_d: f64) -> DetectorParams {
        DetectorParams {
            eta_d: self.detector.eta_d,
            p_d,
            eta_analyzer: self.detector.eta_analyzer,
        }
    }

    pub fn params_for(
        &self,
        fidelity: f64,
        topology: Topology,
        p_d: f64,
    ) -> crate::error::Result<SystemParams> {
        let e_x = 1.0 - fidelity;
        let p = SystemParams {
            detector: self.detector(p_d),
            alpha: self.channel.alpha,
            e_x,
            e_y: self.channel.e_y.unwrap_or(e_x),
            topology,
            q_eve_ratio: self.channel.q_eve_ratio,
        };
        p.validate()?;
        Ok(p)
    }

    /// All (fidelity, topology, p_d) combinations, in that nesting order.
    pub fn system_params(&self) -> Vec<crate::error::Result<SystemParams>> {
        let mut out = Vec::new();
        for &f in &self.channel.fidelity {
            for &t in &self.channel.topology {
                for &p_d in &self.detector.dark_count {
                    out.push(self.params_for(f, t, p_d));
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// `START:STOP:STEP`, inclusive of `STOP` when it lies on the grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let nums: Vec<f64> = match parts.as_slice() {
        [a, b, c] => [a, b, c]
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(format!("grid `{spec}`: {e}")))?,
        _ => return Err(bad(format!("grid `{spec}` must be START:STOP:STEP"))),
    };
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !(start.is_finite() && stop.is_finite() && step.is_finite())
        || start < 0.0
        || stop < start
        || step <= 0.0
    {
        return Err(bad(format!(
            "grid `{spec}` needs 0 ≤ START ≤ STOP and STEP > 0"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    if n > 10_000_000 {
        return Err(bad(format!("grid `{spec}` has too many points")));
    }
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}
