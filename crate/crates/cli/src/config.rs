//! Experiment configuration: JSON schema, lenient number parsing, semantic
//! validation with field paths, and expansion into core types.

use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize};
use skw_core::codec::CodecParams;
use skw_core::region::{AuxiliaryPair, Baseline, JointSource, OptimizerConfig, VaryAxis};

/// Probability values may be JSON numbers or decimal strings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Prob(pub f64);

impl<'de> Deserialize<'de> for Prob {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Prob(v)),
            Raw::Text(s) => s
                .trim()
                .parse::<f64>()
                .map(Prob)
                .map_err(|e| D::Error::custom(format!("bad decimal string {:?}: {}", s, e))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SourceSpec {
    /// Uniform binary X observed through two independent binary symmetric
    /// channels with the given crossover probabilities.
    BscPair { p_y: Prob, p_z: Prob },
    /// Dense joint over (x, y, z), probabilities row-major.
    Inline { sizes: [usize; 3], probs: Vec<Prob> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxSpec {
    pub u_given_x: Vec<Vec<Prob>>,
    pub t_given_u: Vec<Vec<Prob>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSpec {
    pub r1: Prob,
    pub r2: Prob,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CardinalitySpec {
    pub t: usize,
    pub u: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSpec {
    pub restarts: usize,
    pub max_iterations: usize,
    pub convergence_tol: f64,
    pub grid_resolution: usize,
    pub seed: u64,
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        Self {
            restarts: d.restarts,
            max_iterations: d.max_iterations,
            convergence_tol: d.convergence_tol,
            grid_resolution: d.grid_resolution,
            seed: d.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LeakageChoice {
    /// Exact when the enumeration fits, plug-in otherwise.
    #[default]
    Auto,
    Exact,
    Plugin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodecSpec {
    pub n: usize,
    pub delta: f64,
    pub margin: f64,
    pub trials: usize,
    pub seed: u64,
    pub leakage: LeakageChoice,
}

impl Default for CodecSpec {
    fn default() -> Self {
        let d = CodecParams::default();
        Self {
            n: d.n,
            delta: d.delta,
            margin: d.margin,
            trials: d.trials,
            seed: d.seed,
            leakage: LeakageChoice::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub vary: VaryAxis,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub source: SourceSpec,
    #[serde(default)]
    pub rates: Option<RatesSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aux: Option<AuxSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cardinalities: Option<CardinalitySpec>,
    #[serde(default)]
    pub baseline: Option<BaselineSpec>,
    #[serde(default)]
    pub optimizer: OptimizerSpec,
    #[serde(default)]
    pub codec: CodecSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineSpec {
    Joint,
    Separation,
}

impl From<BaselineSpec> for Baseline {
    fn from(b: BaselineSpec) -> Self {
        match b {
            BaselineSpec::Joint => Baseline::Joint,
            BaselineSpec::Separation => Baseline::Separation,
        }
    }
}

/// One semantic problem, addressed by a dotted field path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

const PMF_TOL: f64 = 1e-9;

impl ExperimentConfig {
    /// Parse JSON text; syntax errors come back as a single violation at `$`.
    pub fn parse(text: &str) -> Result<Self, Vec<Violation>> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
            vec![Violation { path: "$".into(), message: e.to_string() }]
        })?;
        let violations = cfg.validate();
        if violations.is_empty() {
            Ok(cfg)
        } else {
            Err(violations)
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        match &self.source {
            SourceSpec::BscPair { p_y, p_z } => {
                for (name, v) in [("source.p_y", p_y.0), ("source.p_z", p_z.0)] {
                    if !(v > 0.0 && v < 1.0) {
                        out.push(Violation {
                            path: name.into(),
                            message: format!("crossover {} outside (0, 1)", v),
                        });
                    }
                }
            }
            SourceSpec::Inline { sizes, probs } => {
                let cells: usize = sizes.iter().product();
                if sizes.iter().any(|&s| s == 0) {
                    out.push(Violation {
                        path: "source.sizes".into(),
                        message: "alphabet sizes must be positive".into(),
                    });
                } else if probs.len() != cells {
                    out.push(Violation {
                        path: "source.probs".into(),
                        message: format!("expected {} entries, got {}", cells, probs.len()),
                    });
                } else {
                    let mut sum = 0.0;
                    for (i, p) in probs.iter().enumerate() {
                        if p.0 < 0.0 || !p.0.is_finite() {
                            out.push(Violation {
                                path: format!("source.probs[{}]", i),
                                message: format!("negative or non-finite probability {}", p.0),
                            });
                        }
                        sum += p.0;
                    }
                    if (sum - 1.0).abs() > PMF_TOL {
                        out.push(Violation {
                            path: "source.probs".into(),
                            message: format!(
                                "probabilities sum to {:.12}, expected 1 within {:e}",
                                sum, PMF_TOL
                            ),
                        });
                    }
                }
            }
        }
        if let Some(rates) = &self.rates {
            for (name, v) in [("rates.r1", rates.r1.0), ("rates.r2", rates.r2.0)] {
                if !(v.is_finite() && v >= 0.0) {
                    out.push(Violation {
                        path: name.into(),
                        message: format!("rate {} must be finite and nonnegative", v),
                    });
                }
            }
        }
        if let Some(aux) = &self.aux {
            for (name, rows) in [
                ("aux.u_given_x", &aux.u_given_x),
                ("aux.t_given_u", &aux.t_given_u),
            ] {
                if rows.is_empty() || rows[0].is_empty() {
                    out.push(Violation {
                        path: name.into(),
                        message: "matrix must be non-empty".into(),
                    });
                    continue;
                }
                for (r, row) in rows.iter().enumerate() {
                    let sum: f64 = row.iter().map(|p| p.0).sum();
                    if (sum - 1.0).abs() > PMF_TOL {
                        out.push(Violation {
                            path: format!("{}[{}]", name, r),
                            message: format!("row sums to {:.12}, expected 1", sum),
                        });
                    }
                }
            }
        }
        if let Some(c) = &self.cardinalities {
            if c.t == 0 || c.u == 0 {
                out.push(Violation {
                    path: "cardinalities".into(),
                    message: "cardinalities must be >= 1".into(),
                });
            }
        }
        if self.optimizer.restarts == 0 {
            out.push(Violation {
                path: "optimizer.restarts".into(),
                message: "must be >= 1".into(),
            });
        }
        if self.optimizer.grid_resolution < 2 {
            out.push(Violation {
                path: "optimizer.grid_resolution".into(),
                message: "must be >= 2".into(),
            });
        }
        if self.codec.n == 0 {
            out.push(Violation { path: "codec.n".into(), message: "must be >= 1".into() });
        }
        if !(self.codec.delta > 0.0 && self.codec.delta < 1.0) {
            out.push(Violation {
                path: "codec.delta".into(),
                message: format!("delta {} outside (0, 1)", self.codec.delta),
            });
        }
        if !(self.codec.margin > 0.0) {
            out.push(Violation {
                path: "codec.margin".into(),
                message: "margin must be positive".into(),
            });
        }
        if let Some(sweep) = &self.sweep {
            if sweep.steps < 2 {
                out.push(Violation {
                    path: "sweep.steps".into(),
                    message: "must be >= 2".into(),
                });
            }
            if sweep.from > sweep.to {
                out.push(Violation {
                    path: "sweep.from".into(),
                    message: format!("range inverted: {} > {}", sweep.from, sweep.to),
                });
            }
        }
        out
    }

    pub fn source(&self) -> anyhow::Result<JointSource> {
        Ok(match &self.source {
            SourceSpec::BscPair { p_y, p_z } => JointSource::bsc_pair(p_y.0, p_z.0)?,
            SourceSpec::Inline { sizes, probs } => JointSource::from_dense(
                sizes[0],
                sizes[1],
                sizes[2],
                probs.iter().map(|p| p.0).collect(),
            )?,
        })
    }

    pub fn aux_pair(&self) -> anyhow::Result<Option<AuxiliaryPair>> {
        let Some(aux) = &self.aux else { return Ok(None) };
        let strip = |rows: &[Vec<Prob>]| -> Vec<Vec<f64>> {
            rows.iter()
                .map(|r| r.iter().map(|p| p.0).collect())
                .collect()
        };
        Ok(Some(AuxiliaryPair::from_rows(
            strip(&aux.u_given_x),
            strip(&aux.t_given_u),
        )?))
    }

    /// Auxiliary cardinalities: configured, or |X|+1 and |X|+2.
    pub fn cardinalities(&self, card_x: usize) -> (usize, usize) {
        match self.cardinalities {
            Some(c) => (c.t, c.u),
            None => (card_x + 1, card_x + 2),
        }
    }

    pub fn optimizer_config(&self) -> OptimizerConfig {
        OptimizerConfig {
            restarts: self.optimizer.restarts,
            max_iterations: self.optimizer.max_iterations,
            convergence_tol: self.optimizer.convergence_tol,
            grid_resolution: self.optimizer.grid_resolution,
            seed: self.optimizer.seed,
        }
    }

    pub fn codec_params(&self) -> CodecParams {
        CodecParams {
            n: self.codec.n,
            delta: self.codec.delta,
            margin: self.codec.margin,
            seed: self.codec.seed,
            trials: self.codec.trials,
            ..CodecParams::default()
        }
    }

    pub fn baseline(&self) -> Baseline {
        self.baseline.map(Baseline::from).unwrap_or(Baseline::Joint)
    }

    /// Canonical JSON with sorted object keys, the input to config digests.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        // serde_json::Value maps are BTreeMaps, so serialization is sorted
        serde_json::to_string(&value).expect("value serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_uniform_config_parses() {
        let text = r#"{
            "source": {"type": "inline", "sizes": [2, 2, 2],
                       "probs": [0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125]},
            "rates": {"r1": 1.0, "r2": 0.0}
        }"#;
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert!(cfg.source().is_ok());
    }

    #[test]
    fn probabilities_accept_decimal_strings() {
        let text = r#"{
            "source": {"type": "bsc-pair", "p_y": "0.1", "p_z": 0.2},
            "rates": {"r1": "1.0", "r2": 0}
        }"#;
        let cfg = ExperimentConfig::parse(text).unwrap();
        let src = cfg.source().unwrap();
        let direct = JointSource::bsc_pair(0.1, 0.2).unwrap();
        for (a, b) in src.pmf().values().iter().zip(direct.pmf().values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn bad_mass_names_the_field() {
        let text = r#"{
            "source": {"type": "inline", "sizes": [2, 2, 2],
                       "probs": [0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.2001]},
            "rates": {"r1": 1.0, "r2": 0.0}
        }"#;
        let err = ExperimentConfig::parse(text).unwrap_err();
        assert!(err.iter().any(|v| v.path == "source.probs"));
    }

    #[test]
    fn bsc_pair_expansion_matches_inline_table() {
        let text = r#"{"source": {"type": "bsc-pair", "p_y": 0.1, "p_z": 0.2},
                       "rates": {"r1": 1.0, "r2": 0.0}}"#;
        let cfg = ExperimentConfig::parse(text).unwrap();
        let src = cfg.source().unwrap();
        // p(x,y,z) = 0.5 * bsc(p_y)[x][y] * bsc(p_z)[x][z]
        let mut expected = Vec::new();
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    let py = if x == y { 0.9 } else { 0.1 };
                    let pz = if x == z { 0.8 } else { 0.2 };
                    expected.push(0.5 * py * pz);
                }
            }
        }
        for (a, b) in src.pmf().values().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn canonical_json_is_reorder_stable() {
        let a = r#"{"rates": {"r1": 1.0, "r2": 0.5},
                    "source": {"type": "bsc-pair", "p_y": 0.1, "p_z": 0.2}}"#;
        let b = r#"{"source": {"p_z": 0.2, "p_y": 0.1, "type": "bsc-pair"},
                    "rates": {"r2": 0.5, "r1": 1.0}}"#;
        let ca = ExperimentConfig::parse(a).unwrap().canonical_json();
        let cb = ExperimentConfig::parse(b).unwrap().canonical_json();
        assert_eq!(ca, cb);
    }

    #[test]
    fn round_trip_preserves_config() {
        let text = r#"{
            "source": {"type": "bsc-pair", "p_y": 0.1, "p_z": 0.2},
            "rates": {"r1": 0.3, "r2": 0.25},
            "aux": {"u_given_x": [[1.0, 0.0], [0.0, 1.0]], "t_given_u": [[1.0], [1.0]]},
            "codec": {"n": 12, "trials": 500}
        }"#;
        let cfg = ExperimentConfig::parse(text).unwrap();
        let serialized = serde_json::to_string(&cfg).unwrap();
        let reparsed = ExperimentConfig::parse(&serialized).unwrap();
        assert_eq!(cfg, reparsed);
    }
}
