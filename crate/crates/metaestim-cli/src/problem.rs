//! Problem-file parsing: a flat line-oriented key = value format and an
//! equivalent JSON object, accepted interchangeably.

use crate::CliError;
use metaestim::benchmarks::{self, BenchmarkFn};
use metaestim::dynamics::{period_tuning_cost, PPParams};
use metaestim::extmodel::{make_objective, CostKind, CostSpec, ExternalModelSpec, OutputMode};
use metaestim::{Error, Method, Objective, ParameterSpace};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

/// What the problem asks to be optimized.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveKind {
    /// An analytic benchmark surface, e.g. `benchmark:rosenbrock:2`.
    Benchmark { function: BenchmarkFn, dimension: usize },
    /// The predator-prey oscillation-period demo, e.g. `period-tuning:72`.
    PeriodTuning { target: f64 },
    /// An external simulation program described by the model keys.
    External,
}

/// One parsed problem file.
#[derive(Debug, Clone)]
pub struct Problem {
    pub objective: ObjectiveKind,
    pub parameters: Vec<(String, f64, f64)>,
    pub method: Method,
    /// Flat option overrides in file order (later entries win).
    pub options: Vec<(String, String)>,
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
    pub external: Option<ExternalConfig>,
}

/// External-model keys as written in the file; resolved into an
/// `ExternalModelSpec` relative to the file's directory.
#[derive(Debug, Clone, Default)]
pub struct ExternalConfig {
    pub command: Option<String>,
    pub working_dir: Option<PathBuf>,
    pub output: Option<String>,
    pub timeout: Option<f64>,
    pub reference: Option<PathBuf>,
    pub cost: Option<String>,
    pub cost_columns: Vec<(String, String)>,
    pub cost_command: Option<String>,
    pub skip_until: Option<f64>,
}

const VALID_KEYS: &str = "objective, param, method, option, seed, tolerance, command, \
                          working_dir, output, timeout, reference, cost, cost_column, \
                          cost_command, skip_until";

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

impl Problem {
    /// Reads and parses a problem file, deciding between the JSON and the
    /// key = value form by the first non-blank character.
    pub fn load(path: &Path) -> Result<Problem, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            Problem::from_json(&text)
        } else {
            Problem::from_kv(&text)
        }
    }

    pub fn from_kv(text: &str) -> Result<Problem, CliError> {
        let mut objective = None;
        let mut parameters = Vec::new();
        let mut method = None;
        let mut options = Vec::new();
        let mut seed = None;
        let mut tolerance = None;
        let mut ext = ExternalConfig::default();
        let mut has_ext = false;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let dup = |slot: bool| {
                if slot {
                    Err(invalid(format!("line {}: duplicate key `{key}`", lineno + 1)))
                } else {
                    Ok(())
                }
            };
            match key {
                "objective" => {
                    dup(objective.is_some())?;
                    objective = Some(parse_objective(value)?);
                }
                "param" => parameters.push(parse_param(value, lineno + 1)?),
                "method" => {
                    dup(method.is_some())?;
                    method = Some(Method::parse(value).map_err(|e| invalid(e.to_string()))?);
                }
                "option" => {
                    let (k, v) = value.split_once(',').ok_or_else(|| {
                        invalid(format!("line {}: expected `option = key,value`", lineno + 1))
                    })?;
                    options.push((k.trim().to_string(), v.trim().to_string()));
                }
                "seed" => {
                    dup(seed.is_some())?;
                    seed = Some(parse_number(value, "seed")?);
                }
                "tolerance" => {
                    dup(tolerance.is_some())?;
                    tolerance = Some(parse_number(value, "tolerance")?);
                }
                "command" => {
                    dup(ext.command.is_some())?;
                    ext.command = Some(value.to_string());
                    has_ext = true;
                }
                "working_dir" => {
                    dup(ext.working_dir.is_some())?;
                    ext.working_dir = Some(PathBuf::from(value));
                    has_ext = true;
                }
                "output" => {
                    dup(ext.output.is_some())?;
                    ext.output = Some(value.to_string());
                    has_ext = true;
                }
                "timeout" => {
                    dup(ext.timeout.is_some())?;
                    ext.timeout = Some(parse_number(value, "timeout")?);
                    has_ext = true;
                }
                "reference" => {
                    dup(ext.reference.is_some())?;
                    ext.reference = Some(PathBuf::from(value));
                    has_ext = true;
                }
                "cost" => {
                    dup(ext.cost.is_some())?;
                    ext.cost = Some(value.to_string());
                    has_ext = true;
                }
                "cost_column" => {
                    let (m, r) = value.split_once(',').ok_or_else(|| {
                        invalid(format!(
                            "line {}: expected `cost_column = model_column,reference_column`",
                            lineno + 1
                        ))
                    })?;
                    ext.cost_columns.push((m.trim().to_string(), r.trim().to_string()));
                    has_ext = true;
                }
                "cost_command" => {
                    dup(ext.cost_command.is_some())?;
                    ext.cost_command = Some(value.to_string());
                    has_ext = true;
                }
                "skip_until" => {
                    dup(ext.skip_until.is_some())?;
                    ext.skip_until = Some(parse_number(value, "skip_until")?);
                    has_ext = true;
                }
                other => {
                    return Err(invalid(format!(
                        "line {}: unknown key `{other}` (valid keys: {VALID_KEYS})",
                        lineno + 1
                    )));
                }
            }
        }

        let problem = Problem {
            objective: objective.ok_or_else(|| invalid("missing `objective` key"))?,
            parameters,
            method: method.ok_or_else(|| invalid("missing `method` key"))?,
            options,
            seed,
            tolerance,
            external: has_ext.then_some(ext),
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn from_json(text: &str) -> Result<Problem, CliError> {
        let json: JsonProblem = serde_json::from_str(text)
            .map_err(|e| invalid(format!("invalid JSON problem: {e}")))?;
        let options = json
            .options
            .into_iter()
            .map(|(k, v)| {
                let s = match v {
                    serde_json::Value::String(s) => s,
                    other => other.to_string(),
                };
                (k, s)
            })
            .collect();
        let problem = Problem {
            objective: parse_objective(&json.objective)?,
            parameters: json
                .parameters
                .into_iter()
                .map(|p| (p.name, p.min, p.max))
                .collect(),
            method: Method::parse(&json.method).map_err(|e| invalid(e.to_string()))?,
            options,
            seed: json.seed,
            tolerance: json.tolerance,
            external: json.external.map(|e| ExternalConfig {
                command: Some(e.command),
                working_dir: e.working_dir,
                output: e.output,
                timeout: e.timeout,
                reference: e.reference,
                cost: e.cost,
                cost_columns: e.cost_columns.into_iter().map(|[m, r]| (m, r)).collect(),
                cost_command: e.cost_command,
                skip_until: e.skip_until,
            }),
        };
        problem.validate()?;
        Ok(problem)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.parameters.is_empty() {
            return Err(invalid("problem defines no parameters"));
        }
        match &self.objective {
            ObjectiveKind::Benchmark { dimension, function } => {
                if *dimension != self.parameters.len() {
                    return Err(invalid(format!(
                        "objective benchmark:{function}:{dimension} expects {dimension} \
                         parameters but {} are defined",
                        self.parameters.len()
                    )));
                }
            }
            ObjectiveKind::PeriodTuning { .. } => {
                if self.parameters.len() != 4 {
                    return Err(invalid(format!(
                        "period-tuning expects the 4 rate parameters, got {}",
                        self.parameters.len()
                    )));
                }
            }
            ObjectiveKind::External => {
                let cmd = self.external.as_ref().and_then(|e| e.command.as_ref());
                if cmd.is_none() {
                    return Err(invalid("external objective needs a `command` key"));
                }
            }
        }
        if self.external.is_some() && self.objective != ObjectiveKind::External {
            return Err(invalid(
                "model keys (command, output, ...) are only valid with `objective = external`",
            ));
        }
        Ok(())
    }

    /// Builds the parameter space in file order.
    pub fn space(&self) -> Result<ParameterSpace, CliError> {
        let bounds: Vec<(&str, f64, f64)> = self
            .parameters
            .iter()
            .map(|(n, lo, hi)| (n.as_str(), *lo, *hi))
            .collect();
        ParameterSpace::from_bounds(&bounds).map_err(|e| invalid(e.to_string()))
    }

    /// Builds the runnable objective. `base_dir` anchors relative paths of
    /// external models (normally the problem file's directory).
    pub fn objective(&self, base_dir: &Path) -> Result<Objective, CliError> {
        let space = self.space()?;
        let mut obj = match &self.objective {
            ObjectiveKind::Benchmark { function, .. } => {
                let f = benchmark_fn(*function);
                Objective::from_fn(space, move |v: &[f64]| f(v))
                    .map_err(|e| invalid(e.to_string()))?
            }
            ObjectiveKind::PeriodTuning { target } => {
                let target = *target;
                Objective::from_fn(space, move |v: &[f64]| {
                    period_tuning_cost(&PPParams::new(v[0], v[1], v[2], v[3]), target)
                })
                .map_err(|e| invalid(e.to_string()))?
            }
            ObjectiveKind::External => {
                let spec = self.external_spec(base_dir)?;
                make_objective(spec, space).map_err(CliError::from_library)?
            }
        };
        if let Some(t) = self.tolerance {
            obj.set_tolerance(t);
        }
        Ok(obj)
    }

    fn external_spec(&self, base_dir: &Path) -> Result<ExternalModelSpec, CliError> {
        let ext = self.external.as_ref().expect("validated");
        let anchor = |p: &PathBuf| {
            if p.is_absolute() {
                p.clone()
            } else {
                base_dir.join(p)
            }
        };
        let output_mode = match ext.output.as_deref() {
            None | Some("stdout-csv") => OutputMode::StdoutCsv,
            Some(other) => match other.split_once(':') {
                Some(("file-csv", path)) => OutputMode::FileCsv(PathBuf::from(path.trim())),
                _ => {
                    return Err(invalid(format!(
                        "unknown output mode `{other}` (expected stdout-csv or file-csv:<path>)"
                    )))
                }
            },
        };
        let kind = match ext.cost.as_deref() {
            Some(k) => CostKind::parse(k).map_err(|e| invalid(e.to_string()))?,
            None if ext.cost_command.is_some() => CostKind::Command,
            None => {
                return Err(invalid(
                    "external objective needs a `cost` kind (rmsd-columns, nrmsd-columns, \
                     dtw-columns or command)",
                ))
            }
        };
        let mut cost = match kind {
            CostKind::Command => {
                let cmd = ext.cost_command.clone().ok_or_else(|| {
                    invalid("cost kind `command` needs a `cost_command` key")
                })?;
                CostSpec::command(cmd)
            }
            _ => CostSpec::columns(kind, ext.cost_columns.clone()),
        };
        cost.skip_until = ext.skip_until;
        Ok(ExternalModelSpec {
            command_template: ext.command.clone().expect("validated"),
            working_dir: ext
                .working_dir
                .as_ref()
                .map(&anchor)
                .unwrap_or_else(|| base_dir.to_path_buf()),
            output_mode,
            timeout: Duration::from_secs_f64(ext.timeout.unwrap_or(60.0)),
            reference: ext.reference.as_ref().map(&anchor),
            cost,
        })
    }
}

fn parse_objective(value: &str) -> Result<ObjectiveKind, CliError> {
    let mut parts = value.split(':');
    match parts.next().unwrap_or("") {
        "benchmark" => {
            let name = parts
                .next()
                .ok_or_else(|| invalid("expected benchmark:<name>:<dimension>"))?;
            let dim = parts
                .next()
                .ok_or_else(|| invalid("expected benchmark:<name>:<dimension>"))?;
            let function = BenchmarkFn::parse(name).map_err(|e| invalid(e.to_string()))?;
            let dimension = dim
                .parse()
                .map_err(|_| invalid(format!("bad benchmark dimension `{dim}`")))?;
            Ok(ObjectiveKind::Benchmark { function, dimension })
        }
        "period-tuning" => {
            let target = parts
                .next()
                .ok_or_else(|| invalid("expected period-tuning:<target>"))?;
            let target: f64 = parse_number(target, "period-tuning target")?;
            Ok(ObjectiveKind::PeriodTuning { target })
        }
        "external" => Ok(ObjectiveKind::External),
        other => Err(invalid(format!(
            "unknown objective `{other}` (expected benchmark:<name>:<dim>, \
             period-tuning:<target> or external)"
        ))),
    }
}

fn parse_param(value: &str, lineno: usize) -> Result<(String, f64, f64), CliError> {
    let fields: Vec<&str> = value.split(',').map(str::trim).collect();
    if fields.len() != 3 {
        return Err(invalid(format!(
            "line {lineno}: expected `param = name,min,max`"
        )));
    }
    let min = parse_number(fields[1], "param min")?;
    let max = parse_number(fields[2], "param max")?;
    Ok((fields[0].to_string(), min, max))
}

fn parse_number<T: std::str::FromStr>(text: &str, what: &str) -> Result<T, CliError> {
    text.parse()
        .map_err(|_| invalid(format!("bad {what} `{text}`")))
}

fn benchmark_fn(f: BenchmarkFn) -> fn(&[f64]) -> f64 {
    match f {
        BenchmarkFn::Rosenbrock => benchmarks::rosenbrock,
        BenchmarkFn::Cigar => benchmarks::cigar,
        BenchmarkFn::Schaffer => benchmarks::schaffer,
        BenchmarkFn::Griewank => benchmarks::griewank,
        BenchmarkFn::Bohachevsky => benchmarks::bohachevsky,
    }
}

impl CliError {
    pub(crate) fn from_library(e: Error) -> CliError {
        match e {
            Error::ModelSetup(msg) => CliError::Setup(format!("external model setup: {msg}")),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonProblem {
    objective: String,
    #[serde(default)]
    parameters: Vec<JsonParam>,
    method: String,
    #[serde(default)]
    options: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    tolerance: Option<f64>,
    #[serde(default)]
    external: Option<JsonExternal>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonParam {
    name: String,
    min: f64,
    max: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonExternal {
    command: String,
    #[serde(default)]
    working_dir: Option<PathBuf>,
    #[serde(default)]
    output: Option<String>,
    #[serde(default)]
    timeout: Option<f64>,
    #[serde(default)]
    reference: Option<PathBuf>,
    #[serde(default)]
    cost: Option<String>,
    #[serde(default)]
    cost_columns: Vec<[String; 2]>,
    #[serde(default)]
    cost_command: Option<String>,
    #[serde(default)]
    skip_until: Option<f64>,
}
