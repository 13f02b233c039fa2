//! Experiment configuration: one JSON document per run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use twist_green::twist::MapFamily;
use twist_green::GeneratingFunction;

use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub map: MapFamily,
    #[serde(default)]
    pub orbit: OrbitBlock,
    #[serde(default)]
    pub green: GreenBlock,
    #[serde(default)]
    pub spectrum: SpectrumBlock,
    #[serde(default)]
    pub thm2: Thm2Block,
    #[serde(default)]
    pub weakkam: WeakKamBlock,
    #[serde(default)]
    pub mane: ManeBlock,
    #[serde(default)]
    pub cone: ConeBlock,
    #[serde(default)]
    pub selftest: SelftestBlock,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

/// Which orbit to work on: a fixed point at `fixed`, or the minimizing
/// periodic orbit of rotation `rho` over `period` steps.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrbitBlock {
    pub fixed: Option<Vec<f64>>,
    pub rho: Option<Vec<i64>>,
    pub period: Option<usize>,
    pub starts: Option<usize>,
    pub perturbation: Option<f64>,
    /// Integer-translate competitors for the strong-minimality check.
    pub competitors: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GreenBlock {
    pub tol: f64,
    pub k_max: usize,
    pub richardson: bool,
    /// Iterates kept in the reduced order chain.
    pub k_chain: usize,
    /// Iterates used for the reduced limits.
    pub k_limit: usize,
}

impl Default for GreenBlock {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            k_max: 1000,
            richardson: true,
            k_chain: 10,
            k_limit: 60,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumBlock {
    pub iterations: usize,
    pub warmup: Option<usize>,
    pub tau: Option<f64>,
}

impl Default for SpectrumBlock {
    fn default() -> Self {
        Self {
            iterations: 10_000,
            warmup: None,
            tau: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thm2Block {
    pub tol: f64,
}

impl Default for Thm2Block {
    fn default() -> Self {
        Self { tol: 1e-6 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeakKamBlock {
    pub resolution: usize,
    pub tol: f64,
    pub max_iters: usize,
    /// Fixed effective value; estimated from periodic orbits when absent.
    pub lbar: Option<f64>,
    pub lbar_max_period: usize,
    /// Random node pairs for the subaction inequality.
    pub pairs: usize,
    pub violation_tol: f64,
}

impl Default for WeakKamBlock {
    fn default() -> Self {
        Self {
            resolution: 256,
            tol: 1e-8,
            max_iters: 10_000,
            lbar: None,
            lbar_max_period: 5,
            pairs: 10_000,
            violation_tol: 2e-8,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManeBlock {
    pub x: Option<Vec<f64>>,
    pub y: Option<Vec<f64>>,
    pub m: usize,
    pub lbar: f64,
    pub tol: f64,
}

impl Default for ManeBlock {
    fn default() -> Self {
        Self {
            x: None,
            y: None,
            m: 1,
            lbar: 0.0,
            tol: 1e-8,
        }
    }
}

/// A minimizing periodic orbit whose points join the cone samples.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtraOrbit {
    pub rho: Vec<i64>,
    pub period: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConeBlock {
    pub r0: f64,
    pub levels: usize,
    pub cluster_degrees: f64,
    pub min_pairs: usize,
    pub neighbor_count: usize,
    pub tol: f64,
    pub extra_orbits: Vec<ExtraOrbit>,
}

impl Default for ConeBlock {
    fn default() -> Self {
        let d = twist_green::geometry::ConeOptions::default();
        Self {
            r0: d.r0,
            levels: d.levels,
            cluster_degrees: d.cluster_degrees,
            min_pairs: d.min_pairs,
            neighbor_count: d.neighbor_count,
            tol: 1e-6,
            extra_orbits: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelftestBlock {
    pub instances: usize,
    pub dims: Option<Vec<usize>>,
    pub slack: f64,
    pub band_tol: f64,
    pub residual_tol: f64,
}

impl Default for SelftestBlock {
    fn default() -> Self {
        Self {
            instances: 1000,
            dims: None,
            slack: 1e-9,
            band_tol: 1e-9,
            residual_tol: 1e-10,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let s = self.generating_function()?;
        let n = s.n();
        positive("green.tol", self.green.tol)?;
        positive("thm2.tol", self.thm2.tol)?;
        positive("weakkam.tol", self.weakkam.tol)?;
        positive("weakkam.violation_tol", self.weakkam.violation_tol)?;
        positive("mane.tol", self.mane.tol)?;
        positive("cone.tol", self.cone.tol)?;
        positive("cone.r0", self.cone.r0)?;
        positive("cone.cluster_degrees", self.cone.cluster_degrees)?;
        positive("selftest.slack", self.selftest.slack)?;
        positive("selftest.band_tol", self.selftest.band_tol)?;
        positive("selftest.residual_tol", self.selftest.residual_tol)?;
        if let Some(t) = self.spectrum.tau {
            positive("spectrum.tau", t)?;
        }
        if let Some(p) = self.orbit.perturbation {
            positive("orbit.perturbation", p)?;
        }
        let check_len = |name: &str, len: usize| {
            if len == n {
                Ok(())
            } else {
                Err(CliError::Config(format!(
                    "{name} has length {len}, map dimension is {n}"
                )))
            }
        };
        if let Some(q) = &self.orbit.fixed {
            check_len("orbit.fixed", q.len())?;
        }
        if let Some(r) = &self.orbit.rho {
            check_len("orbit.rho", r.len())?;
        }
        for e in &self.cone.extra_orbits {
            check_len("cone.extra_orbits[].rho", e.rho.len())?;
            if e.period == 0 {
                return Err(CliError::Config("cone.extra_orbits[].period must be at least 1".into()));
            }
        }
        if let Some(x) = &self.mane.x {
            check_len("mane.x", x.len())?;
        }
        if let Some(y) = &self.mane.y {
            check_len("mane.y", y.len())?;
        }
        if self.orbit.period == Some(0) {
            return Err(CliError::Config("orbit.period must be at least 1".into()));
        }
        if self.mane.m == 0 {
            return Err(CliError::Config("mane.m must be at least 1".into()));
        }
        if self.spectrum.iterations == 0 || self.green.k_max == 0 {
            return Err(CliError::Config("iteration counts must be positive".into()));
        }
        if self.weakkam.resolution < 2 {
            return Err(CliError::Config("weakkam.resolution must be at least 2".into()));
        }
        if self
            .selftest
            .dims
            .as_ref()
            .is_some_and(|d| d.is_empty() || d.contains(&0))
        {
            return Err(CliError::Config("selftest.dims must be non-empty and positive".into()));
        }
        Ok(())
    }

    pub fn generating_function(&self) -> Result<GeneratingFunction, CliError> {
        GeneratingFunction::new(self.map.clone()).map_err(|e| CliError::Config(e.to_string()))
    }

    /// The config with every default filled in, as sorted-key JSON.
    pub fn canonical_json(&self) -> String {
        serde_json::to_value(self).expect("config serializes").to_string()
    }

    /// SHA-256 of [`canonical_json`](Self::canonical_json), hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::parse(r#"{"map": {"family": "standard", "epsilon": 1.0}}"#).unwrap();
        assert_eq!(c.green.k_max, 1000);
        assert_eq!(c.weakkam.resolution, 256);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            r#"{"map": {"family": "standard", "epsilon": 1.0}, "green": {"tol": -1.0}}"#,
            r#"{"map": {"family": "standard", "epsilon": 1.0}, "bogus": 1}"#,
            r#"{"map": {"family": "integrable", "n": 2}, "orbit": {"fixed": [0.5]}}"#,
            r#"{"map": {"family": "warp"}}"#,
        ] {
            assert!(
                matches!(ExperimentConfig::parse(text), Err(CliError::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = ExperimentConfig::parse(r#"{"map":{"family":"standard","epsilon":1.0}}"#).unwrap();
        let b =
            ExperimentConfig::parse("{\n  \"map\": {\"epsilon\": 1.0, \"family\": \"standard\"},\n  \"green\": {}\n}")
                .unwrap();
        assert_eq!(a.hash(), b.hash());
    }
}
