use crate::dynamics::{dtw_distance, nrmsd, rmsd, TimeSeries};
use crate::error::{Error, Result};
use crate::objective::{EvalContext, Evaluator, Objective};
use crate::space::ParameterSpace;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::Stdio;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};
use tempfile::NamedTempFile;

/// Where the model's CSV output comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutputMode {
    /// The process prints the CSV on stdout.
    StdoutCsv,
    /// The process writes the CSV to this path (relative to the working
    /// directory unless absolute).
    FileCsv(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    RmsdColumns,
    NrmsdColumns,
    DtwColumns,
    /// Delegate scoring to an external command that prints one number.
    Command,
}

impl CostKind {
    pub fn key(&self) -> &'static str {
        match self {
            CostKind::RmsdColumns => "rmsd-columns",
            CostKind::NrmsdColumns => "nrmsd-columns",
            CostKind::DtwColumns => "dtw-columns",
            CostKind::Command => "command",
        }
    }

    pub fn parse(key: &str) -> Result<Self> {
        match key {
            "rmsd-columns" => Ok(CostKind::RmsdColumns),
            "nrmsd-columns" => Ok(CostKind::NrmsdColumns),
            "dtw-columns" => Ok(CostKind::DtwColumns),
            "command" => Ok(CostKind::Command),
            _ => Err(Error::InvalidInput(format!(
                "unknown cost kind `{key}` (expected rmsd-columns, nrmsd-columns, dtw-columns or command)"
            ))),
        }
    }
}

/// How a model run is turned into a fitness value.
#[derive(Debug, Clone)]
pub struct CostSpec {
    pub kind: CostKind,
    /// (model column, reference column) pairs; their metric values are summed.
    pub columns: Vec<(String, String)>,
    /// Scorer template for `kind = command`, with `{model}` (and optionally
    /// `{reference}`) path placeholders. Must print a single real number.
    pub command: Option<String>,
    /// Drop leading rows: only rows with t strictly above this take part in
    /// the column metrics.
    pub skip_until: Option<f64>,
}

impl CostSpec {
    pub fn columns(kind: CostKind, columns: Vec<(String, String)>) -> Self {
        CostSpec {
            kind,
            columns,
            command: None,
            skip_until: None,
        }
    }

    pub fn command(template: impl Into<String>) -> Self {
        CostSpec {
            kind: CostKind::Command,
            columns: Vec::new(),
            command: Some(template.into()),
            skip_until: None,
        }
    }
}

/// An external simulation program exposed as an objective function.
#[derive(Debug, Clone)]
pub struct ExternalModelSpec {
    /// Shell command with `{name}` placeholders for each parameter, or a
    /// `{params_file}` placeholder taking the path of a one-row CSV carrying
    /// all parameters.
    pub command_template: String,
    pub working_dir: PathBuf,
    pub output_mode: OutputMode,
    pub timeout: Duration,
    /// Reference CSV compared against the model output by the column costs.
    pub reference: Option<PathBuf>,
    pub cost: CostSpec,
}

const PARAMS_FILE_PLACEHOLDER: &str = "{params_file}";

impl ExternalModelSpec {
    /// Checks this model description against the parameter space: every
    /// parameter needs exactly one placeholder (or the params file carries
    /// them all), and the cost settings must be internally consistent.
    pub fn validate(&self, space: &ParameterSpace) -> Result<()> {
        if self.timeout <= Duration::ZERO {
            return Err(Error::ModelSetup("timeout must be positive".into()));
        }
        let has_file = self.command_template.contains(PARAMS_FILE_PLACEHOLDER);
        if !has_file {
            for name in space.names() {
                let token = format!("{{{name}}}");
                let count = self.command_template.matches(&token).count();
                if count != 1 {
                    return Err(Error::ModelSetup(format!(
                        "parameter `{name}` must appear exactly once in the command template (found {count})"
                    )));
                }
            }
        }
        match self.cost.kind {
            CostKind::Command => {
                if self.cost.command.is_none() {
                    return Err(Error::ModelSetup(
                        "cost kind `command` needs a scorer command".into(),
                    ));
                }
            }
            _ => {
                if self.cost.columns.is_empty() {
                    return Err(Error::ModelSetup(
                        "column costs need at least one column pair".into(),
                    ));
                }
                if self.reference.is_none() {
                    return Err(Error::ModelSetup(
                        "column costs need a reference CSV".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Replaces `{name}` placeholders with shortest round-trip decimal values.
/// Any identifier-shaped `{...}` left afterwards (not preceded by `$`, which
/// would be shell expansion) is an uncovered parameter and gets rejected.
fn substitute(template: &str, params: &[(&str, f64)], params_file: Option<&Path>) -> std::result::Result<String, String> {
    let mut command = template.to_string();
    if let Some(path) = params_file {
        command = command.replace(PARAMS_FILE_PLACEHOLDER, &path.display().to_string());
    }
    for (name, value) in params {
        command = command.replace(&format!("{{{name}}}"), &value.to_string());
    }
    if let Some(name) = uncovered_placeholder(&command) {
        return Err(format!("parameter `{name}` has a placeholder but no value"));
    }
    Ok(command)
}

fn uncovered_placeholder(command: &str) -> Option<&str> {
    let bytes = command.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b != b'{' || (i > 0 && bytes[i - 1] == b'$') {
            continue;
        }
        let rest = &command[i + 1..];
        if let Some(end) = rest.find('}') {
            let token = &rest[..end];
            if !token.is_empty()
                && token
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_')
                && !token.chars().next().unwrap().is_ascii_digit()
            {
                return Some(token);
            }
        }
    }
    None
}

/// Writes the one-row params CSV consumed via `{params_file}`.
fn write_params_file(params: &[(&str, f64)]) -> std::result::Result<NamedTempFile, String> {
    let names: Vec<&str> = params.iter().map(|(n, _)| *n).collect();
    let values: Vec<String> = params.iter().map(|(_, v)| v.to_string()).collect();
    let body = format!("{}\n{}\n", names.join(","), values.join(","));
    let file = NamedTempFile::new().map_err(|e| format!("cannot create params file: {e}"))?;
    std::fs::write(file.path(), body).map_err(|e| format!("cannot write params file: {e}"))?;
    Ok(file)
}

#[cfg(unix)]
fn kill_process_group(child: &std::process::Child) {
    // the child was started as a process-group leader, so this reaps any
    // grandchildren it spawned as well
    unsafe {
        libc::killpg(child.id() as i32, libc::SIGKILL);
    }
}

#[cfg(not(unix))]
fn kill_process_group(child: &std::process::Child) {
    let _ = child;
}

/// Runs a shell command with a hard timeout and returns its stdout; stderr
/// is folded into the failure diagnostics. The whole process group is killed
/// on timeout so no children linger.
fn exec(
    command: &str,
    dir: &Path,
    eval_id: u64,
    timeout: Duration,
) -> std::result::Result<String, String> {
    let mut builder = std::process::Command::new("sh");
    builder
        .arg("-c")
        .arg(command)
        .current_dir(dir)
        .env("METAESTIM_EVAL_ID", eval_id.to_string())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        builder.process_group(0);
    }
    let mut child = builder
        .spawn()
        .map_err(|e| format!("cannot launch `{command}`: {e}"))?;

    let mut out_pipe = child.stdout.take().expect("stdout is piped");
    let mut err_pipe = child.stderr.take().expect("stderr is piped");
    let out_thread = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = out_pipe.read_to_end(&mut buf);
        buf
    });
    let err_thread = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = err_pipe.read_to_end(&mut buf);
        buf
    });

    let deadline = Instant::now() + timeout;
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) => {
                if Instant::now() >= deadline {
                    kill_process_group(&child);
                    let _ = child.wait();
                    let _ = out_thread.join();
                    let _ = err_thread.join();
                    return Err(format!(
                        "command timed out after {:.1}s",
                        timeout.as_secs_f64()
                    ));
                }
                std::thread::sleep(Duration::from_millis(5));
            }
            Err(e) => return Err(format!("cannot wait for command: {e}")),
        }
    };
    let stdout = String::from_utf8_lossy(&out_thread.join().unwrap_or_default()).into_owned();
    let stderr = String::from_utf8_lossy(&err_thread.join().unwrap_or_default()).into_owned();
    if !status.success() {
        let mut tail: String = stderr.chars().take(500).collect();
        if tail.is_empty() {
            tail.push_str("(no diagnostics on stderr)");
        }
        return Err(format!("command failed with {status}: {tail}"));
    }
    Ok(stdout)
}

/// Parses CSV text into a TimeSeries. A column literally named `t` becomes
/// the time axis; otherwise rows are indexed 0, 1, 2, ...
pub fn parse_csv_series(text: &str) -> std::result::Result<TimeSeries, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| format!("bad CSV header: {e}"))?
        .iter()
        .map(|h| h.to_string())
        .collect();
    if headers.is_empty() {
        return Err("CSV output has no columns".into());
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format!("bad CSV row {}: {e}", row + 2))?;
        if record.len() != headers.len() {
            return Err(format!(
                "CSV row {} has {} fields, header has {}",
                row + 2,
                record.len(),
                headers.len()
            ));
        }
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                format!(
                    "CSV row {} column `{}`: `{field}` is not a number",
                    row + 2,
                    headers[col]
                )
            })?;
            columns[col].push(value);
        }
    }
    let t_index = headers.iter().position(|h| h == "t");
    let n = columns.first().map_or(0, Vec::len);
    let t = match t_index {
        Some(i) => columns[i].clone(),
        None => (0..n).map(|i| i as f64).collect(),
    };
    let channels: Vec<(String, Vec<f64>)> = headers
        .into_iter()
        .zip(columns)
        .enumerate()
        .filter(|(i, _)| Some(*i) != t_index)
        .map(|(_, pair)| pair)
        .collect();
    TimeSeries::new(t, channels).map_err(|e| e.to_string())
}

/// Launches the model once and parses its CSV output.
pub fn run_model(
    spec: &ExternalModelSpec,
    params: &[(&str, f64)],
    eval_id: u64,
) -> std::result::Result<TimeSeries, String> {
    parse_csv_series(&run_raw(spec, params, eval_id)?)
}

/// Launches the model once and returns the raw CSV text.
fn run_raw(
    spec: &ExternalModelSpec,
    params: &[(&str, f64)],
    eval_id: u64,
) -> std::result::Result<String, String> {
    let params_file = if spec.command_template.contains(PARAMS_FILE_PLACEHOLDER) {
        Some(write_params_file(params)?)
    } else {
        None
    };
    let command = substitute(
        &spec.command_template,
        params,
        params_file.as_ref().map(|f| f.path()),
    )?;
    let stdout = exec(&command, &spec.working_dir, eval_id, spec.timeout)?;
    drop(params_file);
    match &spec.output_mode {
        OutputMode::StdoutCsv => Ok(stdout),
        OutputMode::FileCsv(path) => {
            let resolved = if path.is_absolute() {
                path.clone()
            } else {
                spec.working_dir.join(path)
            };
            std::fs::read_to_string(&resolved)
                .map_err(|e| format!("cannot read model output {}: {e}", resolved.display()))
        }
    }
}

struct ExternalEvaluator {
    spec: ExternalModelSpec,
    names: Vec<String>,
    reference: Option<TimeSeries>,
    warned_mismatch: AtomicBool,
}

impl ExternalEvaluator {
    fn score_columns(&self, model: &TimeSeries) -> std::result::Result<f64, String> {
        let reference = self
            .reference
            .as_ref()
            .expect("column costs validated to have a reference");
        let mut total = 0.0;
        for (model_col, ref_col) in &self.spec.cost.columns {
            let m = model
                .channel(model_col)
                .ok_or_else(|| format!("model output has no column `{model_col}`"))?;
            let r = reference
                .channel(ref_col)
                .ok_or_else(|| format!("reference has no column `{ref_col}`"))?;
            let (m, r) = match self.spec.cost.skip_until {
                Some(cutoff) => (
                    trim_until(m, &model.t, cutoff),
                    trim_until(r, &reference.t, cutoff),
                ),
                None => (m.to_vec(), r.to_vec()),
            };
            let n = m.len().min(r.len());
            if n == 0 {
                return Err(format!(
                    "no rows left to compare for columns `{model_col}`/`{ref_col}`"
                ));
            }
            if m.len() != r.len() && !self.warned_mismatch.swap(true, Ordering::Relaxed) {
                eprintln!(
                    "warning: model and reference lengths differ ({} vs {}); comparing the first {n} rows",
                    m.len(),
                    r.len()
                );
            }
            let value = match self.spec.cost.kind {
                CostKind::RmsdColumns => rmsd(&m[..n], &r[..n]),
                CostKind::NrmsdColumns => nrmsd(&m[..n], &r[..n]),
                CostKind::DtwColumns => dtw_distance(&m[..n], &r[..n]),
                CostKind::Command => unreachable!("command kind never scores columns"),
            }
            .map_err(|e| e.to_string())?;
            total += value;
        }
        Ok(total)
    }

    fn score_with_command(&self, csv_text: &str, eval_id: u64) -> std::result::Result<f64, String> {
        let scorer = self
            .spec
            .cost
            .command
            .as_ref()
            .expect("command cost validated to have a scorer");
        let model_file =
            NamedTempFile::new().map_err(|e| format!("cannot stage model output: {e}"))?;
        std::fs::write(model_file.path(), csv_text)
            .map_err(|e| format!("cannot stage model output: {e}"))?;
        let mut command = scorer.replace("{model}", &model_file.path().display().to_string());
        if let Some(reference) = &self.spec.reference {
            command = command.replace("{reference}", &reference.display().to_string());
        }
        let stdout = exec(&command, &self.spec.working_dir, eval_id, self.spec.timeout)?;
        drop(model_file);
        let text = stdout.trim();
        text.parse::<f64>()
            .map_err(|_| format!("scorer printed `{text}`, expected one number"))
    }
}

fn trim_until(values: &[f64], t: &[f64], cutoff: f64) -> Vec<f64> {
    values
        .iter()
        .zip(t)
        .filter(|(_, &ti)| ti > cutoff)
        .map(|(&v, _)| v)
        .collect()
}

impl Evaluator for ExternalEvaluator {
    fn eval(&self, values: &[f64], ctx: &EvalContext) -> std::result::Result<f64, String> {
        let params: Vec<(&str, f64)> = self
            .names
            .iter()
            .map(String::as_str)
            .zip(values.iter().copied())
            .collect();
        let csv_text = run_raw(&self.spec, &params, ctx.pset)?;
        match self.spec.cost.kind {
            CostKind::Command => self.score_with_command(&csv_text, ctx.pset),
            _ => self.score_columns(&parse_csv_series(&csv_text)?),
        }
    }
}

/// Wraps the external model as an objective over `space`. The reference CSV
/// (when the cost needs one) is loaded once, up front.
pub fn make_objective(spec: ExternalModelSpec, space: ParameterSpace) -> Result<Objective> {
    spec.validate(&space)?;
    let reference = match (spec.cost.kind, &spec.reference) {
        (CostKind::Command, _) | (_, None) => None,
        (_, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::ModelSetup(format!("cannot read reference {}: {e}", path.display()))
            })?;
            Some(parse_csv_series(&text).map_err(Error::ModelSetup)?)
        }
    };
    let names: Vec<String> = space.names().iter().map(|s| s.to_string()).collect();
    Objective::new(
        space,
        Box::new(ExternalEvaluator {
            spec,
            names,
            reference,
            warned_mismatch: AtomicBool::new(false),
        }),
    )
}
