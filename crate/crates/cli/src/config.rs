//! Run configuration: schema, parsing with field-path diagnostics,
//! semantic checks and sweep-parameter application.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use spinnet_core::analyzers::BsaModel;
use spinnet_core::cluster::EmissionConfig;
use spinnet_core::interface::{EmitterParams, LinkParams};
use spinnet_core::repeater::{Mode, ParityCode, RepeaterConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    InterfaceReport,
    BsaBench,
    ClusterGen,
    #[serde(rename = "repeater-2way")]
    #[value(name = "repeater-2way")]
    Repeater2Way,
    #[serde(rename = "repeater-1way")]
    #[value(name = "repeater-1way")]
    Repeater1Way,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::InterfaceReport => "interface-report",
            Command::BsaBench => "bsa-bench",
            Command::ClusterGen => "cluster-gen",
            Command::Repeater2Way => "repeater-2way",
            Command::Repeater1Way => "repeater-1way",
            Command::Sweep => "sweep",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// A parameter path and the values it takes, one output block per value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: String,
    pub values: Vec<f64>,
    /// Command to sweep; required when the run command is `sweep`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
}

fn default_trials() -> u64 {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub output_format: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepAxis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emitter: Option<EmitterParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<LinkParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bsa: Option<BsaModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emission: Option<EmissionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeater: Option<RepeaterConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<ParityCode>,
}

/// One violated constraint, located by its dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

/// Parses TOML text and re-checks every physical constraint.
pub fn validate_config(text: &str) -> Result<RunConfig, Vec<Diagnostic>> {
    let cfg = parse(text).map_err(|d| vec![d])?;
    let diags = cfg.check();
    if diags.is_empty() {
        Ok(cfg)
    } else {
        Err(diags)
    }
}

/// Schema-level parse only.
pub fn parse(text: &str) -> Result<RunConfig, Diagnostic> {
    let de = toml::Deserializer::parse(text).map_err(|e| Diagnostic::new("", e.message().to_string()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        Diagnostic::new(path, e.inner().message().to_string())
    })
}

fn prefixed(prefix: &str, v: Vec<(String, String)>) -> Vec<Diagnostic> {
    v.into_iter()
        .map(|(f, r)| Diagnostic::new(format!("{prefix}.{f}"), r))
        .collect()
}

impl RunConfig {
    /// The command whose rows are produced (the swept one for `sweep`).
    pub fn target(&self) -> Result<Command, Diagnostic> {
        match (self.command, self.sweep.as_ref().and_then(|s| s.command)) {
            (None, _) => Err(Diagnostic::new("command", "missing")),
            (Some(Command::Sweep), Some(Command::Sweep)) => {
                Err(Diagnostic::new("sweep.command", "cannot itself be `sweep`"))
            }
            (Some(Command::Sweep), Some(inner)) => Ok(inner),
            (Some(Command::Sweep), None) => Err(Diagnostic::new(
                "sweep.command",
                "required when command is `sweep`",
            )),
            (Some(c), Some(inner)) if inner != c => Err(Diagnostic::new(
                "sweep.command",
                format!("`{inner}` conflicts with command `{c}`"),
            )),
            (Some(c), _) => Ok(c),
        }
    }

    /// Every violated constraint; empty when the config can run.
    pub fn check(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.trials == 0 {
            out.push(Diagnostic::new("trials", "must be >= 1"));
        }
        let target = match self.target() {
            Ok(t) => t,
            Err(d) => {
                out.push(d);
                return out;
            }
        };
        if self.command == Some(Command::Sweep) && self.sweep.is_none() {
            out.push(Diagnostic::new("sweep", "required when command is `sweep`"));
        }
        out.extend(self.check_payload(target));
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                out.push(Diagnostic::new("sweep.values", "must not be empty"));
            }
            if out.is_empty() {
                for (i, v) in sweep.values.iter().enumerate() {
                    match self.with_parameter(&sweep.parameter, *v) {
                        Ok(c) => out.extend(c.check_payload(target).into_iter().map(|d| {
                            Diagnostic::new(d.path, format!("{} (sweep.values[{i}] = {v})", d.message))
                        })),
                        Err(d) => out.push(d),
                    }
                }
            }
        }
        out
    }

    fn check_payload(&self, target: Command) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let need = |present: bool, name: &str, out: &mut Vec<Diagnostic>| {
            if !present {
                out.push(Diagnostic::new(name, format!("section required by `{target}`")));
            }
            present
        };
        match target {
            Command::InterfaceReport => {
                if let Some(e) = &self.emitter {
                    out.extend(prefixed("emitter", stringify(e.violations())));
                } else {
                    need(false, "emitter", &mut out);
                }
                if let Some(l) = &self.link {
                    out.extend(prefixed("link", stringify(l.violations())));
                }
            }
            Command::BsaBench => {
                if let Some(b) = &self.bsa {
                    out.extend(prefixed("bsa", b.violations()));
                } else {
                    need(false, "bsa", &mut out);
                }
            }
            Command::ClusterGen => {
                if let Some(e) = &self.emission {
                    out.extend(prefixed("emission", e.violations()));
                    if e.n_photons + 1 > e.max_qubits {
                        out.push(Diagnostic::new(
                            "emission.n_photons",
                            format!("{} photons plus the spin exceed max_qubits = {}", e.n_photons, e.max_qubits),
                        ));
                    }
                } else {
                    need(false, "emission", &mut out);
                }
            }
            Command::Repeater2Way | Command::Repeater1Way => {
                let mode = if target == Command::Repeater2Way {
                    Mode::TwoWay
                } else {
                    Mode::OneWay
                };
                if let Some(r) = &self.repeater {
                    out.extend(prefixed("repeater", r.violations()));
                    if r.mode != mode {
                        out.push(Diagnostic::new(
                            "repeater.mode",
                            format!("`{target}` needs mode = {}", mode_name(mode)),
                        ));
                    }
                } else {
                    need(false, "repeater", &mut out);
                }
                if mode == Mode::OneWay {
                    match &self.code {
                        Some(c) => out.extend(prefixed("code", c.violations())),
                        None => {
                            need(false, "code", &mut out);
                        }
                    }
                }
            }
            Command::Sweep => unreachable!("target is never sweep"),
        }
        out
    }

    /// Copy with one parameter set. Coupled fields follow: an emitter
    /// `beta` keeps the total decay rate, and a repeater's total distance,
    /// link count and link length stay consistent.
    pub fn with_parameter(&self, path: &str, value: f64) -> Result<RunConfig, Diagnostic> {
        let err = |m: String| Diagnostic::new("sweep.parameter", m);
        let mut base = self.clone();
        base.sweep = None;
        let mut root = serde_json::to_value(&base).map_err(|e| err(e.to_string()))?;
        let segments: Vec<&str> = path.split('.').collect();
        let (leaf, parents) = segments.split_last().ok_or_else(|| err("empty path".into()))?;
        let mut parent = &mut root;
        for s in parents {
            parent = parent
                .get_mut(*s)
                .filter(|v| v.is_object())
                .ok_or_else(|| err(format!("unknown parameter `{path}`")))?;
        }
        let obj = parent.as_object_mut().ok_or_else(|| err(format!("unknown parameter `{path}`")))?;
        let num = |v: &Value, key: &str| -> Result<f64, Diagnostic> {
            v.get(key)
                .and_then(Value::as_f64)
                .ok_or_else(|| err(format!("`{key}` is not numeric in `{path}`")))
        };

        if *leaf == "beta" && obj.contains_key("gamma_1d") {
            let node = Value::Object(obj.clone());
            if node.get("geometry").and_then(Value::as_str) != Some("waveguide") {
                return Err(err(format!("`{path}` applies to waveguide emitters only")));
            }
            let total = num(&node, "gamma_1d")? + num(&node, "gamma_rad")? + num(&node, "gamma_nonrad")?;
            let g1d = value * total;
            let grad = total - g1d - num(&node, "gamma_nonrad")?;
            if !(0.0..=1.0).contains(&value) || grad < 0.0 {
                return Err(err(format!("`{path}` = {value} is not reachable at fixed total rate")));
            }
            obj.insert("gamma_1d".into(), json_f64(g1d));
            obj.insert("gamma_rad".into(), json_f64(grad));
        } else {
            let current = obj
                .get(*leaf)
                .ok_or_else(|| err(format!("unknown parameter `{path}`")))?;
            let replacement = match current {
                Value::Number(n) if n.is_u64() || n.is_i64() => {
                    if value.fract() != 0.0 || value < 0.0 {
                        return Err(err(format!("`{path}` takes non-negative integers, got {value}")));
                    }
                    Value::from(value as u64)
                }
                Value::Number(_) | Value::String(_) => json_f64(value),
                _ => return Err(err(format!("`{path}` is not a numeric parameter"))),
            };
            obj.insert(leaf.to_string(), replacement);
            if parents == ["repeater"] {
                couple_repeater(obj, leaf).map_err(err)?;
            }
        }
        let mut out: RunConfig = serde_json::from_value(root).map_err(|e| err(format!("`{path}`: {e}")))?;
        if path == "repeater.link.length_km" {
            couple_link_length(&mut out);
        }
        out.sweep = self.sweep.clone();
        Ok(out)
    }
}

/// Non-finite values use the `"inf"` spelling understood by the schema.
fn json_f64(v: f64) -> Value {
    serde_json::Number::from_f64(v)
        .map(Value::Number)
        .unwrap_or_else(|| Value::String("inf".into()))
}

fn couple_repeater(obj: &mut serde_json::Map<String, Value>, leaf: &str) -> Result<(), String> {
    let f = |obj: &serde_json::Map<String, Value>, k: &str| obj.get(k).and_then(Value::as_f64).unwrap_or(0.0);
    let n = f(obj, "n_links").max(1.0);
    let total = f(obj, "total_distance_km");
    let link = obj
        .get_mut("link")
        .and_then(Value::as_object_mut)
        .ok_or("repeater.link missing")?;
    match leaf {
        "total_distance_km" | "n_links" => {
            link.insert("length_km".into(), json_f64(total / n));
        }
        _ => {}
    }
    Ok(())
}

/// Link length sweeps keep the link count and move the total distance.
fn couple_link_length(cfg: &mut RunConfig) {
    if let Some(r) = cfg.repeater.as_mut() {
        r.total_distance_km = r.link.length_km * r.n_links as f64;
    }
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::TwoWay => "two_way",
        Mode::OneWay => "one_way",
    }
}

fn stringify(v: Vec<(&'static str, String)>) -> Vec<(String, String)> {
    v.into_iter().map(|(f, r)| (f.to_string(), r)).collect()
}
