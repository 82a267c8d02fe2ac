//! Experiment configuration: a small TOML file with sections for the plant,
//! the quantizer, the simulation, and the tradeoff sweep. Matrices are
//! row-major lists with explicit dimensions, so fixtures stay diffable.

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::plant::PlantModel;

/// Codeword regime for the closed-loop simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookRegime {
    /// Time-invariant Huffman code built from the steady-state index model.
    Marginal,
    /// Per-step Huffman code from the decoder-computable conditional model.
    SiConditional,
    /// Fixed Elias integer code; no model needed.
    Elias,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    /// State dimension.
    pub m: usize,
    /// Input dimension.
    pub u: usize,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    #[serde(rename = "W")]
    pub w: Vec<f64>,
    #[serde(rename = "Q")]
    pub q: Vec<f64>,
    #[serde(rename = "R")]
    pub r: Vec<f64>,
    #[serde(rename = "X0")]
    pub x0: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizerSection {
    /// Quantizer step Δ > 0.
    pub delta: f64,
    /// Seed of the shared dither stream.
    pub dither_seed: u64,
    pub codebook_regime: CodebookRegime,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    /// Steps per run, T ≥ 1.
    pub horizon: usize,
    /// Independent runs to aggregate.
    pub num_seeds: usize,
    /// Base seed for process noise and initial states.
    pub noise_seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TradeoffSection {
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_steps: usize,
    /// Logarithmic grid when true, linear otherwise.
    #[serde(default)]
    pub log_grid: bool,
}

/// Parsed experiment file. Sections beyond the plant are optional; each
/// subcommand checks for the ones it needs.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub plant: PlantSection,
    pub quantizer: Option<QuantizerSection>,
    pub sim: Option<SimSection>,
    pub tradeoff: Option<TradeoffSection>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    fn validate(&self) -> Result<()> {
        let m = self.plant.m;
        let u = self.plant.u;
        if m == 0 {
            return Err(Error::Config("state dimension m must be positive".into()));
        }
        for (name, data, rows, cols) in [
            ("A", &self.plant.a, m, m),
            ("B", &self.plant.b, m, u),
            ("W", &self.plant.w, m, m),
            ("Q", &self.plant.q, m, m),
            ("R", &self.plant.r, u, u),
            ("X0", &self.plant.x0, m, m),
        ] {
            if data.len() != rows * cols {
                return Err(Error::Config(format!(
                    "{name} has {} entries, expected {rows}x{cols} = {}",
                    data.len(),
                    rows * cols
                )));
            }
        }
        if let Some(q) = &self.quantizer {
            if !(q.delta > 0.0) || !q.delta.is_finite() {
                return Err(Error::Config(format!(
                    "quantizer delta must be > 0, got {}",
                    q.delta
                )));
            }
        }
        if let Some(s) = &self.sim {
            if s.horizon < 1 {
                return Err(Error::Config("sim horizon must be >= 1".into()));
            }
            if s.num_seeds < 1 {
                return Err(Error::Config("sim num_seeds must be >= 1".into()));
            }
        }
        if let Some(t) = &self.tradeoff {
            if t.gamma_steps < 1 {
                return Err(Error::Config("tradeoff gamma_steps must be >= 1".into()));
            }
            if !(t.gamma_max > t.gamma_min) && t.gamma_steps > 1 {
                return Err(Error::Config(format!(
                    "tradeoff grid needs gamma_max > gamma_min, got [{}, {}]",
                    t.gamma_min, t.gamma_max
                )));
            }
            if t.log_grid && t.gamma_min <= 0.0 {
                return Err(Error::Config(
                    "log grid requires gamma_min > 0".into(),
                ));
            }
        }
        Ok(())
    }

    /// Builds and validates the plant model.
    pub fn plant_model(&self) -> Result<PlantModel> {
        let p = &self.plant;
        let model = PlantModel::new(
            DMatrix::from_row_slice(p.m, p.m, &p.a),
            DMatrix::from_row_slice(p.m, p.u, &p.b),
            DMatrix::from_row_slice(p.m, p.m, &p.w),
            DMatrix::from_row_slice(p.m, p.m, &p.x0),
            DMatrix::from_row_slice(p.m, p.m, &p.q),
            DMatrix::from_row_slice(p.u, p.u, &p.r),
        )?;
        let report = model.validate();
        if !report.is_empty() {
            return Err(Error::Config(format!(
                "plant section is invalid: {}",
                report.join("; ")
            )));
        }
        Ok(model)
    }

    pub fn quantizer(&self) -> Result<&QuantizerSection> {
        self.quantizer
            .as_ref()
            .ok_or_else(|| Error::Config("missing [quantizer] section".into()))
    }

    pub fn sim(&self) -> Result<&SimSection> {
        self.sim
            .as_ref()
            .ok_or_else(|| Error::Config("missing [sim] section".into()))
    }

    pub fn tradeoff(&self) -> Result<&TradeoffSection> {
        self.tradeoff
            .as_ref()
            .ok_or_else(|| Error::Config("missing [tradeoff] section".into()))
    }

    /// The γ grid described by the tradeoff section.
    pub fn gamma_grid(&self) -> Result<Vec<f64>> {
        let t = self.tradeoff()?;
        if t.gamma_steps == 1 {
            return Ok(vec![t.gamma_min]);
        }
        let n = t.gamma_steps;
        let grid = (0..n)
            .map(|i| {
                let frac = i as f64 / (n - 1) as f64;
                if t.log_grid {
                    (t.gamma_min.ln() + (t.gamma_max.ln() - t.gamma_min.ln()) * frac).exp()
                } else {
                    t.gamma_min + (t.gamma_max - t.gamma_min) * frac
                }
            })
            .collect();
        Ok(grid)
    }
}
