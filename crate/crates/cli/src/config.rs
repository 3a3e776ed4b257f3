//! Flat key=value experiment configs and the experiment catalog.
//!
//! The config format is UTF-8 text, one `key=value` per line, `#` comments,
//! dotted keys, comma-separated lists for profiles. Diff-able and
//! language-neutral; the canonical form (sorted keys) is hashed into run
//! reports.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    VerifyKernel,
    Crossing,
    Transport,
    HeightProcess,
    Growth,
    Cluster,
    Domination,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::VerifyKernel => "verify-kernel",
            ExperimentKind::Crossing => "crossing",
            ExperimentKind::Transport => "transport",
            ExperimentKind::HeightProcess => "height-process",
            ExperimentKind::Growth => "growth",
            ExperimentKind::Cluster => "cluster",
            ExperimentKind::Domination => "domination",
        }
    }

    pub fn from_name(name: &str) -> Option<ExperimentKind> {
        Some(match name {
            "verify-kernel" => ExperimentKind::VerifyKernel,
            "crossing" => ExperimentKind::Crossing,
            "transport" => ExperimentKind::Transport,
            "height-process" => ExperimentKind::HeightProcess,
            "growth" => ExperimentKind::Growth,
            "cluster" => ExperimentKind::Cluster,
            "domination" => ExperimentKind::Domination,
            _ => return None,
        })
    }

    pub fn all() -> [ExperimentKind; 7] {
        [
            ExperimentKind::VerifyKernel,
            ExperimentKind::Crossing,
            ExperimentKind::Transport,
            ExperimentKind::HeightProcess,
            ExperimentKind::Growth,
            ExperimentKind::Cluster,
            ExperimentKind::Domination,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    /// Parse config text. `overrides` (from command-line flags) replace file
    /// values; the seed must be present in one of them.
    pub fn parse(text: &str, overrides: &[(String, String)]) -> Result<ExperimentConfig> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key=value", lineno + 1))?;
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        for (k, v) in overrides {
            values.insert(k.clone(), v.clone());
        }
        let name = values
            .get("experiment")
            .ok_or_else(|| anyhow!("missing required key `experiment`"))?;
        let experiment = ExperimentKind::from_name(name)
            .ok_or_else(|| anyhow!("unknown experiment `{name}`"))?;
        let config = ExperimentConfig { experiment, values };
        config
            .require("seed")
            .context("seed is mandatory; there is no wall-clock default")?;
        for field in descriptor(experiment).required {
            config.require(field.key)?;
        }
        Ok(config)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(|s| s.as_str())
            .ok_or_else(|| anyhow!("missing required key `{key}`"))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.require(key)?
            .parse()
            .with_context(|| format!("key `{key}` must be an unsigned integer"))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            Some(s) => s
                .parse()
                .with_context(|| format!("key `{key}` must be an unsigned integer")),
            None => Ok(default),
        }
    }

    pub fn i64(&self, key: &str) -> Result<i64> {
        self.require(key)?
            .parse()
            .with_context(|| format!("key `{key}` must be an integer"))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.require(key)?
            .parse()
            .with_context(|| format!("key `{key}` must be a real number"))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            Some(s) => s
                .parse()
                .with_context(|| format!("key `{key}` must be a real number")),
            None => Ok(default),
        }
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        self.require(key)?
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .with_context(|| format!("key `{key}` must be a comma list of reals"))
            })
            .collect()
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            Some("true") | Some("1") => Ok(true),
            Some("false") | Some("0") => Ok(false),
            Some(other) => bail!("key `{key}` must be true/false, got `{other}`"),
            None => Ok(default),
        }
    }

    /// Canonical text: sorted `key=value` lines, LF separated.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct FieldSpec {
    pub key: &'static str,
    pub example: &'static str,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ExperimentDescriptor {
    pub name: &'static str,
    pub module: &'static str,
    pub required: Vec<FieldSpec>,
    pub optional: Vec<FieldSpec>,
}

fn f(key: &'static str, example: &'static str) -> FieldSpec {
    FieldSpec { key, example }
}

/// Machine-readable catalog entry for one experiment kind.
pub fn descriptor(kind: ExperimentKind) -> ExperimentDescriptor {
    match kind {
        ExperimentKind::VerifyKernel => ExperimentDescriptor {
            name: "verify-kernel",
            module: "star_triangle",
            required: vec![f("experiment", "verify-kernel"), f("seed", "1")],
            optional: vec![
                f("mode", "cells"), // cells | sweep
                f("grid.points", "100"),
                f("trials", "1000000"), // sweep mode
                f("p0", "0.5"),         // sweep mode
                f("pair", "down"),      // sweep mode: down | up
            ],
        },
        ExperimentKind::Crossing => ExperimentDescriptor {
            name: "crossing",
            module: "crossing",
            required: vec![
                f("experiment", "crossing"),
                f("seed", "1"),
                f("trials", "10000"),
            ],
            optional: vec![
                f("mode", "estimate"), // estimate | anchor | oracle | inequality | him
                // estimate mode
                f("lattice.kind", "pureSquare"),
                f("lattice.x0", "-1"),
                f("lattice.x1", "18"),
                f("lattice.y0", "-1"),
                f("lattice.y1", "18"),
                f("lattice.interface", "0"),
                f("params.kind", "squarePair"),
                f("params.p0", "0.5"),
                f("params.p1", "0.5"),
                f("params.p2", "0"),
                f("params.ph", "0.5"),
                f("params.pv", "0.5"),
                f("params.baseRow", "-2"),
                f("params.q", "0.3,0.4,0.5"),
                f("params.qPrime", "0.5,0.4,0.3"),
                f("box.m", "8.5"),
                f("box.n", "16"),
                f("box.dx", "8.5"),
                f("box.dy", "0"),
                f("direction", "horizontal"),
                f("brute", "false"),
                f("expect.min", "0.49"),
                f("expect.max", "0.51"),
                // anchor / oracle / inequality modes
                f("n", "16"),
                f("patches", "20"),
                f("alpha", "3"),
                // him mode
                f("params.p", "0.2"),
                f("params.qLo", "0.2"),
                f("params.qHi", "0.8"),
                f("sizes", "8,16,32"),
            ],
        },
        ExperimentKind::Transport => ExperimentDescriptor {
            name: "transport",
            module: "paths",
            required: vec![
                f("experiment", "transport"),
                f("seed", "1"),
                f("paths", "40000"),
            ],
            optional: vec![],
        },
        ExperimentKind::HeightProcess => ExperimentDescriptor {
            name: "height-process",
            module: "growth",
            required: vec![
                f("experiment", "height-process"),
                f("seed", "1"),
                f("p0", "0.5"),
                f("n", "16"),
                f("replicas", "10000"),
            ],
            optional: vec![],
        },
        ExperimentKind::Growth => ExperimentDescriptor {
            name: "growth",
            module: "growth",
            required: vec![f("experiment", "growth"), f("seed", "1"), f("mode", "full")],
            optional: vec![
                f("instances", "1000"),
                f("n", "20"),
                f("p0", "0.5"),
                f("replicas", "10000"),
            ],
        },
        ExperimentKind::Cluster => ExperimentDescriptor {
            name: "cluster",
            module: "crossing",
            required: vec![
                f("experiment", "cluster"),
                f("seed", "1"),
                f("trials", "100000"),
                f("radiusCap", "32"),
                f("kappas", "-0.1,0,0.1"),
            ],
            optional: vec![f("contrast", "true")],
        },
        ExperimentKind::Domination => ExperimentDescriptor {
            name: "domination",
            module: "growth",
            required: vec![
                f("experiment", "domination"),
                f("seed", "1"),
                f("instances", "100"),
            ],
            optional: vec![],
        },
    }
}

pub fn catalog() -> Vec<ExperimentDescriptor> {
    ExperimentKind::all()
        .iter()
        .map(|&k| descriptor(k))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let text = "# comment\nexperiment=domination\nseed=5\ninstances=10\n";
        let cfg = ExperimentConfig::parse(text, &[]).unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Domination);
        assert_eq!(cfg.u64("seed").unwrap(), 5);
        let cfg = ExperimentConfig::parse(text, &[("seed".into(), "9".into())]).unwrap();
        assert_eq!(cfg.u64("seed").unwrap(), 9);
    }

    #[test]
    fn seed_is_mandatory() {
        let text = "experiment=domination\ninstances=10\n";
        assert!(ExperimentConfig::parse(text, &[]).is_err());
    }

    #[test]
    fn catalog_round_trips_through_parser() {
        let cat = catalog();
        assert_eq!(cat.len(), 7);
        for desc in cat {
            let mut text = String::new();
            for field in &desc.required {
                text.push_str(&format!("{}={}\n", field.key, field.example));
            }
            let cfg = ExperimentConfig::parse(&text, &[])
                .unwrap_or_else(|e| panic!("descriptor {} does not round-trip: {e}", desc.name));
            assert_eq!(cfg.experiment.name(), desc.name);
        }
    }
}
