//! Command-line front end: flat key=value configuration, solver
//! orchestration, and deterministic table emission.
//!
//! Outputs are self-describing: every emitted file starts with a metadata
//! block recording the command, all resolved parameters, the truncation,
//! and the tolerances, so a run can be reproduced from its output alone.
//! Identical configurations produce byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::floquet::{solve_floquet, Truncation};
use crate::model::{enumerate_static_levels, LevelKind, WellConfig};
use crate::observables::{density_profile, nondecay_probability};
use crate::spectra::{
    crossing_scan, seed_branches, solve_from_level, trace_branch, CrossingKind, SampleStatus,
    SeededRoot,
};

#[derive(Parser, Debug)]
#[command(
    name = "floquet-well",
    version,
    about = "Quasienergies and lifetimes of a square well with an oscillating barrier"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandName,
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override or supply a single key (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Sideband truncation override.
    #[arg(long, global = true)]
    pub sidebands: Option<usize>,
    /// Report energies (and frequencies) as ratios to V0.
    #[arg(long, global = true)]
    pub ratio: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandName {
    /// Bound states and resonances of the undriven well.
    Static,
    /// Driven quasienergy roots at fixed frequency.
    Solve,
    /// Branch continuation over a frequency range.
    Trace,
    /// Direct/avoided crossing classification over drive amplitudes.
    Crossings,
    /// Probability density profiles at chosen times.
    Density,
    /// Nondecay probability curves.
    Nondecay,
}

impl CommandName {
    fn as_str(&self) -> &'static str {
        match self {
            CommandName::Static => "static",
            CommandName::Solve => "solve",
            CommandName::Trace => "trace",
            CommandName::Crossings => "crossings",
            CommandName::Density => "density",
            CommandName::Nondecay => "nondecay",
        }
    }

    fn from_str(s: &str) -> Option<CommandName> {
        match s {
            "static" => Some(CommandName::Static),
            "solve" => Some(CommandName::Solve),
            "trace" => Some(CommandName::Trace),
            "crossings" => Some(CommandName::Crossings),
            "density" => Some(CommandName::Density),
            "nondecay" => Some(CommandName::Nondecay),
            _ => None,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    fn as_str(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Complex(Complex64),
    Text(String),
    Bool(bool),
    Empty,
}

/// A homogeneous record table.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    /// Columns declared complex-valued; they render as `re_*`/`im_*` pairs
    /// even when the table has no rows.
    complex: Vec<bool>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Table {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            complex: vec![false; columns.len()],
            rows: Vec::new(),
        }
    }

    pub fn mark_complex(mut self, name: &str) -> Table {
        if let Some(idx) = self.columns.iter().position(|c| c == name) {
            self.complex[idx] = true;
        }
        self
    }

    fn is_complex(&self, idx: usize) -> bool {
        self.complex[idx] || self.rows.iter().any(|r| matches!(r[idx], Value::Complex(_)))
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// 17-significant-digit formatting; round-trips every finite f64 exactly.
fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_quote(text: &str) -> String {
    if text.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

/// Render a table with its metadata header.
///
/// CSV: `# key = value` metadata lines, a header row, `.` decimal
/// separator, complex values split into `re_*`/`im_*` columns, `\n` line
/// endings. JSON: an object with a `metadata` map and a `rows` array of
/// objects mirroring the CSV columns.
pub fn render_table(table: &Table, format: OutputFormat, metadata: &[(String, String)]) -> String {
    match format {
        OutputFormat::Csv => {
            let mut out = String::new();
            for (key, value) in metadata {
                let _ = writeln!(out, "# {key} = {value}");
            }
            let mut header: Vec<String> = Vec::new();
            for (idx, name) in table.columns.iter().enumerate() {
                if table.is_complex(idx) {
                    header.push(format!("re_{name}"));
                    header.push(format!("im_{name}"));
                } else {
                    header.push(name.clone());
                }
            }
            let _ = writeln!(out, "{}", header.join(","));
            for row in &table.rows {
                let mut cells: Vec<String> = Vec::new();
                for value in row {
                    match value {
                        Value::Int(v) => cells.push(v.to_string()),
                        Value::Float(v) => cells.push(format_float(*v)),
                        Value::Complex(z) => {
                            cells.push(format_float(z.re));
                            cells.push(format_float(z.im));
                        }
                        Value::Text(s) => cells.push(csv_quote(s)),
                        Value::Bool(b) => cells.push(b.to_string()),
                        Value::Empty => cells.push(String::new()),
                    }
                }
                let _ = writeln!(out, "{}", cells.join(","));
            }
            out
        }
        OutputFormat::Json => {
            let mut meta = serde_json::Map::new();
            for (key, value) in metadata {
                meta.insert(key.clone(), serde_json::Value::String(value.clone()));
            }
            let mut rows = Vec::with_capacity(table.rows.len());
            for row in &table.rows {
                let mut object = serde_json::Map::new();
                for (name, value) in table.columns.iter().zip(row) {
                    match value {
                        Value::Int(v) => {
                            object.insert(name.clone(), serde_json::Value::from(*v));
                        }
                        Value::Float(v) => {
                            object.insert(name.clone(), serde_json::Value::from(*v));
                        }
                        Value::Complex(z) => {
                            object.insert(format!("re_{name}"), serde_json::Value::from(z.re));
                            object.insert(format!("im_{name}"), serde_json::Value::from(z.im));
                        }
                        Value::Text(s) => {
                            object.insert(name.clone(), serde_json::Value::String(s.clone()));
                        }
                        Value::Bool(b) => {
                            object.insert(name.clone(), serde_json::Value::Bool(*b));
                        }
                        Value::Empty => {
                            object.insert(name.clone(), serde_json::Value::Null);
                        }
                    }
                }
                rows.push(serde_json::Value::Object(object));
            }
            let document = serde_json::json!({
                "metadata": serde_json::Value::Object(meta),
                "rows": rows,
            });
            let mut text = serde_json::to_string_pretty(&document).expect("json serialization");
            text.push('\n');
            text
        }
    }
}

/// Write rendered output atomically: temp file in the target directory,
/// then rename over the destination.
pub fn emit_table(
    table: &Table,
    format: OutputFormat,
    path: &Path,
    metadata: &[(String, String)],
) -> Result<()> {
    let rendered = render_table(table, format, metadata);
    let tmp = path.with_extension("tmp");
    {
        let mut file = std::fs::File::create(&tmp)?;
        file.write_all(rendered.as_bytes())?;
        file.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Parsed flat `key = value` configuration text.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<KeyValues> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Validation(format!(
                    "config line {}: expected `key = value`, got `{raw}`",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(Error::Validation(format!(
                    "config line {}: empty key",
                    lineno + 1
                )));
            }
            entries.insert(key, value);
        }
        Ok(KeyValues { entries })
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.trim().to_string(), value.trim().to_string());
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    fn finish(self) -> Result<()> {
        if let Some((key, _)) = self.entries.into_iter().next() {
            return Err(Error::Validation(format!("unknown configuration key `{key}`")));
        }
        Ok(())
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Validation(format!("key `{key}`: `{value}` is not a number")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::Validation(format!("key `{key}`: `{value}` is not a non-negative integer")))
}

fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|part| parse_f64(key, part))
        .collect::<Result<Vec<f64>>>()
}

fn parse_i32_list(key: &str, value: &str) -> Result<Vec<i32>> {
    value
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<i32>()
                .map_err(|_| Error::Validation(format!("key `{key}`: `{part}` is not an integer")))
        })
        .collect()
}

fn parse_complex(key: &str, value: &str) -> Result<Complex64> {
    let parts: Vec<&str> = value.split(',').collect();
    match parts.as_slice() {
        [re] => Ok(Complex64::new(parse_f64(key, re)?, 0.0)),
        [re, im] => Ok(Complex64::new(parse_f64(key, re)?, parse_f64(key, im)?)),
        _ => Err(Error::Validation(format!(
            "key `{key}`: expected `re` or `re,im`, got `{value}`"
        ))),
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandName,
    pub well: WellConfig,
    pub sidebands: Option<usize>,
    pub format: OutputFormat,
    pub ratio: bool,
    pub out: Option<PathBuf>,
    // Command-specific settings; unused ones keep their defaults.
    pub grid_points: usize,
    pub guess: Option<Complex64>,
    pub omega_start: f64,
    pub omega_stop: f64,
    pub omega_step: f64,
    pub offsets: Option<Vec<i32>>,
    pub v1_values: Vec<f64>,
    pub times: Vec<f64>,
    pub x_max: f64,
    pub x_points: usize,
    pub root_index: usize,
    pub t_max: f64,
    pub t_points: usize,
}

impl RunConfig {
    /// Resolve a run configuration from parsed key=value pairs and flags.
    pub fn from_keys(
        command: CommandName,
        mut keys: KeyValues,
        format: OutputFormat,
        ratio: bool,
        sidebands: Option<usize>,
        out: Option<PathBuf>,
    ) -> Result<RunConfig> {
        let need = |name: &str, value: Option<String>| -> Result<String> {
            value.ok_or_else(|| Error::Validation(format!("missing required key `{name}`")))
        };

        let a = parse_f64("a", &need("a", keys.take("a"))?)?;
        let b = parse_f64("b", &need("b", keys.take("b"))?)?;
        let v0 = parse_f64("v0", &need("v0", keys.take("v0"))?)?;
        let v0_prime = parse_f64("v0_prime", &need("v0_prime", keys.take("v0_prime"))?)?;
        let v1 = keys.take("v1").map(|v| parse_f64("v1", &v)).transpose()?.unwrap_or(0.0);
        let omega = keys
            .take("omega")
            .map(|v| parse_f64("omega", &v))
            .transpose()?
            .unwrap_or(0.0);
        let mass = keys.take("mass").map(|v| parse_f64("mass", &v)).transpose()?.unwrap_or(1.0);
        let hbar = keys.take("hbar").map(|v| parse_f64("hbar", &v)).transpose()?.unwrap_or(1.0);

        let well = WellConfig {
            a,
            b,
            v0,
            v0_prime,
            v1,
            omega,
            mass,
            hbar,
        };

        let mut config = RunConfig {
            command,
            well,
            sidebands,
            format,
            ratio,
            out,
            grid_points: 512,
            guess: None,
            omega_start: 0.0,
            omega_stop: 0.0,
            omega_step: 0.005 * v0,
            offsets: None,
            v1_values: Vec::new(),
            times: vec![0.0],
            x_max: b,
            x_points: 513,
            root_index: 0,
            t_max: 20.0,
            t_points: 301,
        };

        if let Some(v) = keys.take("sidebands") {
            let n = parse_usize("sidebands", &v)?;
            if config.sidebands.is_none() {
                config.sidebands = Some(n);
            }
        }

        match command {
            CommandName::Static => {
                if let Some(v) = keys.take("grid_points") {
                    config.grid_points = parse_usize("grid_points", &v)?;
                }
            }
            CommandName::Solve => {
                if let Some(v) = keys.take("guess") {
                    config.guess = Some(parse_complex("guess", &v)?);
                }
            }
            CommandName::Trace => {
                config.omega_start =
                    parse_f64("omega_start", &need("omega_start", keys.take("omega_start"))?)?;
                config.omega_stop =
                    parse_f64("omega_stop", &need("omega_stop", keys.take("omega_stop"))?)?;
                if let Some(v) = keys.take("omega_step") {
                    config.omega_step = parse_f64("omega_step", &v)?;
                }
                if let Some(v) = keys.take("offsets") {
                    config.offsets = Some(parse_i32_list("offsets", &v)?);
                }
                if !(config.omega_stop > config.omega_start) {
                    return Err(Error::Validation(format!(
                        "empty frequency sweep: omega_start = {}, omega_stop = {}",
                        config.omega_start, config.omega_stop
                    )));
                }
                if !(config.omega_step > 0.0) {
                    return Err(Error::Validation("omega_step must be positive".into()));
                }
            }
            CommandName::Crossings => {
                config.omega_start =
                    parse_f64("omega_start", &need("omega_start", keys.take("omega_start"))?)?;
                config.omega_stop =
                    parse_f64("omega_stop", &need("omega_stop", keys.take("omega_stop"))?)?;
                config.v1_values =
                    parse_f64_list("v1_values", &need("v1_values", keys.take("v1_values"))?)?;
                if !(config.omega_stop > config.omega_start) {
                    return Err(Error::Validation(format!(
                        "empty frequency window: omega_start = {}, omega_stop = {}",
                        config.omega_start, config.omega_stop
                    )));
                }
                if config.v1_values.is_empty() {
                    return Err(Error::Validation("v1_values must not be empty".into()));
                }
            }
            CommandName::Density => {
                if let Some(v) = keys.take("times") {
                    config.times = parse_f64_list("times", &v)?;
                }
                if let Some(v) = keys.take("x_max") {
                    config.x_max = parse_f64("x_max", &v)?;
                }
                if let Some(v) = keys.take("x_points") {
                    config.x_points = parse_usize("x_points", &v)?;
                }
                if let Some(v) = keys.take("root_index") {
                    config.root_index = parse_usize("root_index", &v)?;
                }
                if let Some(v) = keys.take("guess") {
                    config.guess = Some(parse_complex("guess", &v)?);
                }
                if config.x_points < 2 || !(config.x_max > 0.0) {
                    return Err(Error::Validation(
                        "density needs x_points >= 2 and x_max > 0".into(),
                    ));
                }
            }
            CommandName::Nondecay => {
                if let Some(v) = keys.take("t_max") {
                    config.t_max = parse_f64("t_max", &v)?;
                }
                if let Some(v) = keys.take("t_points") {
                    config.t_points = parse_usize("t_points", &v)?;
                }
                if let Some(v) = keys.take("root_index") {
                    config.root_index = parse_usize("root_index", &v)?;
                }
                if let Some(v) = keys.take("guess") {
                    config.guess = Some(parse_complex("guess", &v)?);
                }
                if config.t_points < 2 || !(config.t_max > 0.0) {
                    return Err(Error::Validation(
                        "nondecay needs t_points >= 2 and t_max > 0".into(),
                    ));
                }
            }
        }

        keys.finish()?;
        match command {
            // Sweep commands supply the frequency per point; validate the
            // well at the sweep start instead of the (unused) omega key.
            CommandName::Trace | CommandName::Crossings => {
                if !(config.omega_start > 0.0) {
                    return Err(Error::Validation(format!(
                        "omega_start must be positive, got {}",
                        config.omega_start
                    )));
                }
                config.well.with_omega(config.omega_start).validate()?;
            }
            _ => config.well.validate()?,
        }
        Ok(config)
    }

    fn truncation(&self) -> Truncation {
        // Sweeps size the truncation at their lowest frequency, where the
        // drive strength (and so the required sideband count) peaks.
        let well = match self.command {
            CommandName::Trace | CommandName::Crossings => {
                self.well.with_omega(self.omega_start)
            }
            _ => self.well,
        };
        let base = Truncation::for_drive(&well);
        match self.sidebands {
            Some(n) => base.with_sidebands(n),
            None => base,
        }
    }

    fn energy_scale(&self) -> f64 {
        if self.ratio {
            self.well.v0
        } else {
            1.0
        }
    }

    /// Metadata block: every input needed to reproduce the run.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let mut meta: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| meta.push((k.to_string(), v));
        push("tool", "floquet-well".into());
        push("command", self.command.as_str().into());
        push("format", self.format.as_str().into());
        push("ratio", self.ratio.to_string());
        push("seedless", "true".into());
        push("a", format_float(self.well.a));
        push("b", format_float(self.well.b));
        push("v0", format_float(self.well.v0));
        push("v0_prime", format_float(self.well.v0_prime));
        push("v1", format_float(self.well.v1));
        push("omega", format_float(self.well.omega));
        push("mass", format_float(self.well.mass));
        push("hbar", format_float(self.well.hbar));
        let trunc = self.truncation();
        push("sidebands", trunc.sidebands.to_string());
        push("residual_tol", format_float(trunc.residual_tol));
        push("condition_warn", format_float(trunc.condition_warn));
        match self.command {
            CommandName::Static => {
                push("grid_points", self.grid_points.to_string());
            }
            CommandName::Solve => {
                if let Some(guess) = self.guess {
                    push(
                        "guess",
                        format!("{},{}", format_float(guess.re), format_float(guess.im)),
                    );
                }
            }
            CommandName::Trace => {
                push("omega_start", format_float(self.omega_start));
                push("omega_stop", format_float(self.omega_stop));
                push("omega_step", format_float(self.omega_step));
                if let Some(offsets) = &self.offsets {
                    let rendered: Vec<String> = offsets.iter().map(|o| o.to_string()).collect();
                    push("offsets", rendered.join(","));
                }
            }
            CommandName::Crossings => {
                push("omega_start", format_float(self.omega_start));
                push("omega_stop", format_float(self.omega_stop));
                let rendered: Vec<String> =
                    self.v1_values.iter().map(|v| format_float(*v)).collect();
                push("v1_values", rendered.join(","));
            }
            CommandName::Density => {
                let rendered: Vec<String> = self.times.iter().map(|v| format_float(*v)).collect();
                push("times", rendered.join(","));
                push("x_max", format_float(self.x_max));
                push("x_points", self.x_points.to_string());
                push("root_index", self.root_index.to_string());
                if let Some(guess) = self.guess {
                    push(
                        "guess",
                        format!("{},{}", format_float(guess.re), format_float(guess.im)),
                    );
                }
            }
            CommandName::Nondecay => {
                push("t_max", format_float(self.t_max));
                push("t_points", self.t_points.to_string());
                push("root_index", self.root_index.to_string());
                if let Some(guess) = self.guess {
                    push(
                        "guess",
                        format!("{},{}", format_float(guess.re), format_float(guess.im)),
                    );
                }
            }
        }
        meta
    }
}

/// Rebuild a run configuration from the metadata block of an emitted file
/// (the closure property: outputs are self-describing).
pub fn config_from_metadata(metadata: &[(String, String)]) -> Result<RunConfig> {
    let mut keys = KeyValues::default();
    let mut command = None;
    let mut format = OutputFormat::Csv;
    let mut ratio = false;
    for (key, value) in metadata {
        match key.as_str() {
            "tool" | "seedless" | "residual_tol" | "condition_warn" => {}
            "command" => {
                command = CommandName::from_str(value);
            }
            "format" => {
                format = match value.as_str() {
                    "json" => OutputFormat::Json,
                    _ => OutputFormat::Csv,
                };
            }
            "ratio" => ratio = value == "true",
            _ => keys.set(key, value),
        }
    }
    let command =
        command.ok_or_else(|| Error::Validation("metadata is missing `command`".into()))?;
    RunConfig::from_keys(command, keys, format, ratio, None, None)
}

/// Extract the `# key = value` metadata lines from a rendered CSV.
pub fn metadata_from_csv(text: &str) -> Vec<(String, String)> {
    let mut meta = Vec::new();
    for line in text.lines() {
        let Some(rest) = line.strip_prefix("# ") else {
            break;
        };
        if let Some((key, value)) = rest.split_once(" = ") {
            meta.push((key.to_string(), value.to_string()));
        }
    }
    meta
}

/// Solve the driven roots the way `solve`, `density`, and `nondecay` pick
/// them: from an explicit guess when given, otherwise one root per static
/// level seeded at its zone representative, sorted by real part.
fn default_roots(config: &RunConfig) -> Result<Vec<(i64, crate::floquet::FloquetRoot)>> {
    let trunc = config.truncation();
    if let Some(guess) = config.guess {
        let root = solve_floquet(&config.well, &trunc, guess)?;
        return Ok(vec![(-1, root)]);
    }
    let static_well = config.well.with_v1(0.0).with_omega(0.0);
    let levels = enumerate_static_levels(&static_well, 512)?;
    let mut roots: Vec<(i64, crate::floquet::FloquetRoot)> = Vec::new();
    for (index, level) in levels.iter().enumerate() {
        let Ok(root) = solve_from_level(&config.well, &trunc, level.energy) else {
            continue;
        };
        if roots
            .iter()
            .any(|(_, known)| (known.epsilon - root.epsilon).norm() < 1e-8)
        {
            continue;
        }
        roots.push((index as i64, root));
    }
    roots.sort_by(|x, y| x.1.epsilon.re.total_cmp(&y.1.epsilon.re));
    Ok(roots)
}

fn kind_text(kind: LevelKind) -> &'static str {
    match kind {
        LevelKind::Bound => "bound",
        LevelKind::Resonance => "resonance",
    }
}

fn run_static(config: &RunConfig) -> Result<Table> {
    let static_well = config.well.with_v1(0.0).with_omega(0.0);
    let levels = enumerate_static_levels(&static_well, config.grid_points)?;
    let scale = config.energy_scale();
    let mut table = Table::new(&["level", "kind", "energy"]).mark_complex("energy");
    for (index, level) in levels.iter().enumerate() {
        table.push(vec![
            Value::Int(index as i64),
            Value::Text(kind_text(level.kind).into()),
            Value::Complex(level.energy / scale),
        ]);
    }
    Ok(table)
}

fn run_solve(config: &RunConfig) -> Result<Table> {
    let roots = default_roots(config)?;
    if roots.is_empty() {
        return Err(Error::NonConvergence {
            iterations: 0,
            best_re: f64::NAN,
            best_im: f64::NAN,
            residual: f64::NAN,
        });
    }
    let scale = config.energy_scale();
    let mut table = Table::new(&["root", "parent_level", "epsilon", "residual", "physical"])
        .mark_complex("epsilon");
    for (index, (parent, root)) in roots.iter().enumerate() {
        let residual = root.residual()?.norm();
        table.push(vec![
            Value::Int(index as i64),
            Value::Int(*parent),
            Value::Complex(root.epsilon / scale),
            Value::Float(residual),
            Value::Bool(root.is_physical()),
        ]);
    }
    Ok(table)
}

fn run_trace(config: &RunConfig) -> Result<Table> {
    let trunc = config.truncation();
    let static_well = config.well.with_v1(0.0).with_omega(0.0);
    let levels = enumerate_static_levels(&static_well, 512)?;
    if levels.is_empty() {
        return Err(Error::Validation("no static levels to trace from".into()));
    }
    let scale = config.energy_scale();
    let zone = config.well.hbar * config.omega_start;

    let mut seeds: Vec<SeededRoot> = Vec::new();
    for (index, level) in levels.iter().enumerate() {
        let offsets: Vec<i32> = match &config.offsets {
            Some(list) => list.clone(),
            None => {
                // Default: the offset that puts this level inside the zone
                // at the start of the sweep.
                let (_, shifts) = crate::floquet::reduce_to_first_zone(level.energy, zone);
                vec![-(shifts as i32)]
            }
        };
        for seed in seed_branches(
            &config.well,
            &trunc,
            &levels[index..index + 1],
            config.omega_start,
            &offsets,
        ) {
            let mut seed = seed;
            seed.parent_index = index;
            seeds.push(seed);
        }
    }
    if seeds.is_empty() {
        return Err(Error::NonConvergence {
            iterations: 0,
            best_re: f64::NAN,
            best_im: f64::NAN,
            residual: f64::NAN,
        });
    }

    let mut table = Table::new(&[
        "branch",
        "parent_level",
        "offset",
        "omega",
        "epsilon",
        "re_epsilon_zone",
        "status",
    ])
    .mark_complex("epsilon");
    for (branch_index, seed) in seeds.iter().enumerate() {
        let branch = trace_branch(
            &config.well,
            &trunc,
            seed,
            (config.omega_start, config.omega_stop),
            config.omega_step,
        )?;
        for sample in &branch.samples {
            let zone_eps = branch.zone_epsilon(sample);
            let status = match sample.status {
                SampleStatus::Converged => "converged",
                SampleStatus::Interpolated => "interpolated",
            };
            table.push(vec![
                Value::Int(branch_index as i64),
                Value::Int(branch.id.parent_index as i64),
                Value::Int(branch.id.sideband_offset as i64),
                Value::Float(sample.omega / scale),
                Value::Complex(sample.epsilon / scale),
                Value::Float(zone_eps.re / scale),
                Value::Text(status.into()),
            ]);
        }
    }
    Ok(table)
}

fn run_crossings(config: &RunConfig) -> Result<Table> {
    let trunc = config.truncation();
    let entries = crossing_scan(
        &config.well,
        &trunc,
        &config.v1_values,
        (config.omega_start, config.omega_stop),
    )?;
    let scale = config.energy_scale();
    let mut table = Table::new(&[
        "v1",
        "kind",
        "omega_at",
        "min_gap",
        "exchanged_imaginary",
        "message",
    ]);
    for entry in &entries {
        match &entry.outcome {
            Ok(event) => table.push(vec![
                Value::Float(entry.v1 / scale),
                Value::Text(
                    match event.kind {
                        CrossingKind::Direct => "direct",
                        CrossingKind::Avoided => "avoided",
                    }
                    .into(),
                ),
                Value::Float(event.omega_at / scale),
                Value::Float(event.min_gap / scale),
                Value::Bool(event.exchanged_imaginary),
                Value::Text(String::new()),
            ]),
            Err(err) => table.push(vec![
                Value::Float(entry.v1 / scale),
                Value::Text("error".into()),
                Value::Empty,
                Value::Empty,
                Value::Empty,
                Value::Text(err.to_string()),
            ]),
        }
    }
    Ok(table)
}

fn pick_root(config: &RunConfig) -> Result<crate::floquet::FloquetRoot> {
    let roots = default_roots(config)?;
    if config.guess.is_some() {
        return Ok(roots.into_iter().next().expect("guess produced a root").1);
    }
    roots
        .into_iter()
        .nth(config.root_index)
        .map(|(_, root)| root)
        .ok_or_else(|| {
            Error::Validation(format!(
                "root_index {} is out of range for the solved roots",
                config.root_index
            ))
        })
}

fn run_density(config: &RunConfig) -> Result<Table> {
    let root = pick_root(config)?;
    let x_grid: Vec<f64> = (0..config.x_points)
        .map(|j| config.x_max * j as f64 / (config.x_points - 1) as f64)
        .collect();
    let mut table = Table::new(&["t", "x", "density"]);
    for &t in &config.times {
        let profile = density_profile(&root, &x_grid, t)?;
        for (x, value) in profile.x_grid.iter().zip(&profile.values) {
            table.push(vec![
                Value::Float(t),
                Value::Float(*x),
                Value::Float(*value),
            ]);
        }
    }
    Ok(table)
}

fn run_nondecay(config: &RunConfig) -> Result<Table> {
    let root = pick_root(config)?;
    let t_grid: Vec<f64> = (0..config.t_points)
        .map(|j| config.t_max * j as f64 / (config.t_points - 1) as f64)
        .collect();
    let curve = nondecay_probability(&root, &t_grid)?;
    let mut table = Table::new(&["t", "p", "p_bar", "h"]);
    for (j, &t) in curve.t_grid.iter().enumerate() {
        let decay = (2.0 * curve.im_epsilon * t / config.well.hbar).exp();
        table.push(vec![
            Value::Float(t),
            Value::Float(curve.p_values[j]),
            Value::Float(curve.p_bar_values[j]),
            Value::Float(curve.p_values[j] / decay),
        ]);
    }
    Ok(table)
}

/// Execute a resolved run configuration and emit its table.
pub fn run(config: &RunConfig) -> Result<()> {
    let table = match config.command {
        CommandName::Static => run_static(config)?,
        CommandName::Solve => run_solve(config)?,
        CommandName::Trace => run_trace(config)?,
        CommandName::Crossings => run_crossings(config)?,
        CommandName::Density => run_density(config)?,
        CommandName::Nondecay => run_nondecay(config)?,
    };
    let metadata = config.metadata();
    match &config.out {
        Some(path) => emit_table(&table, config.format, path, &metadata)?,
        None => {
            let rendered = render_table(&table, config.format, &metadata);
            std::io::stdout().write_all(rendered.as_bytes())?;
        }
    }
    Ok(())
}

/// Resolve CLI arguments into a run configuration.
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut keys = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            KeyValues::parse(&text)?
        }
        None => KeyValues::default(),
    };
    for assignment in &cli.set {
        let Some((key, value)) = assignment.split_once('=') else {
            return Err(Error::Validation(format!(
                "--set expects KEY=VALUE, got `{assignment}`"
            )));
        };
        keys.set(key, value);
    }
    RunConfig::from_keys(
        cli.command,
        keys,
        cli.format,
        cli.ratio,
        cli.sidebands,
        cli.out.clone(),
    )
}

/// Exit status for an error, per the documented contract: 2 for invalid
/// input, 3 for solver failures, 4 for I/O.
pub fn exit_status(err: &Error) -> i32 {
    match err {
        Error::Validation(_) | Error::Domain(_) => 2,
        Error::Io(_) => 4,
        _ => 3,
    }
}

/// Full CLI entry point; returns the process exit code.
pub fn run_cli(cli: &Cli) -> i32 {
    let config = match resolve(cli) {
        Ok(config) => config,
        Err(err) => {
            eprintln!("error: {err}");
            return exit_status(&err);
        }
    };
    match run(&config) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_status(&err)
        }
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn paper_keys() -> KeyValues {
        let mut keys = KeyValues::default();
        keys.set("a", "1");
        keys.set("b", "2");
        keys.set("v0", "15");
        keys.set("v0_prime", "7.5");
        keys
    }

    #[test]
    fn parses_flat_key_value_text() {
        let keys = KeyValues::parse("# comment\n a = 1 \n\nb=2\n").unwrap();
        let mut keys = keys;
        assert_eq!(keys.take("a").as_deref(), Some("1"));
        assert_eq!(keys.take("b").as_deref(), Some("2"));
    }

    #[test]
    fn reports_malformed_lines_with_their_number() {
        let err = KeyValues::parse("a = 1\nnot a pair\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn rejects_unknown_keys() {
        let mut keys = paper_keys();
        keys.set("bogus", "1");
        let err = RunConfig::from_keys(
            CommandName::Static,
            keys,
            OutputFormat::Csv,
            false,
            None,
            None,
        )
        .unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn missing_required_keys_are_named() {
        let err = RunConfig::from_keys(
            CommandName::Static,
            KeyValues::default(),
            OutputFormat::Csv,
            false,
            None,
            None,
        )
        .unwrap_err();
        assert!(err.to_string().contains('a'), "{err}");
    }

    #[test]
    fn empty_sweep_is_invalid() {
        let mut keys = paper_keys();
        keys.set("omega_start", "5");
        keys.set("omega_stop", "5");
        let err = RunConfig::from_keys(
            CommandName::Trace,
            keys,
            OutputFormat::Csv,
            false,
            None,
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn complex_guess_parses_both_forms() {
        assert_eq!(
            parse_complex("guess", "1.5").unwrap(),
            Complex64::new(1.5, 0.0)
        );
        assert_eq!(
            parse_complex("guess", "1.5,-0.25").unwrap(),
            Complex64::new(1.5, -0.25)
        );
        assert!(parse_complex("guess", "1,2,3").is_err());
    }

    #[test]
    fn float_formatting_round_trips_bit_exactly() {
        for value in [
            0.0,
            -0.0,
            1.0 / 3.0,
            std::f64::consts::PI,
            1e-300,
            -2.2250738585072014e-308,
            0.232123 * 15.0,
            f64::MAX,
        ] {
            let rendered = format_float(value);
            let parsed: f64 = rendered.parse().unwrap();
            assert_eq!(parsed.to_bits(), value.to_bits(), "{rendered}");
        }
    }

    #[test]
    fn complex_cells_split_into_two_csv_columns() {
        let mut table = Table::new(&["x", "z"]);
        table.push(vec![
            Value::Float(1.0),
            Value::Complex(Complex64::new(2.0, -3.0)),
        ]);
        let text = render_table(&table, OutputFormat::Csv, &[]);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "x,re_z,im_z");
        let cells: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(cells.len(), 3);
        assert_eq!(cells[1].parse::<f64>().unwrap(), 2.0);
        assert_eq!(cells[2].parse::<f64>().unwrap(), -3.0);
    }

    #[test]
    fn empty_table_renders_header_only() {
        let table = Table::new(&["alpha", "beta"]);
        let text = render_table(
            &table,
            OutputFormat::Csv,
            &[("command".into(), "static".into())],
        );
        assert_eq!(text, "# command = static\nalpha,beta\n");
    }

    #[test]
    fn csv_cells_with_commas_are_quoted() {
        let quoted = csv_quote("a, b \"c\"");
        assert_eq!(quoted, "\"a, b \"\"c\"\"\"");
        assert_eq!(csv_quote("plain"), "plain");
    }

    #[test]
    fn json_rows_mirror_the_columns() {
        let mut table = Table::new(&["n", "z", "ok"]);
        table.push(vec![
            Value::Int(3),
            Value::Complex(Complex64::new(0.5, 0.25)),
            Value::Bool(true),
        ]);
        let text = render_table(&table, OutputFormat::Json, &[("k".into(), "v".into())]);
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["metadata"]["k"], "v");
        assert_eq!(parsed["rows"][0]["n"], 3);
        assert_eq!(parsed["rows"][0]["re_z"], 0.5);
        assert_eq!(parsed["rows"][0]["im_z"], 0.25);
        assert_eq!(parsed["rows"][0]["ok"], true);
    }

    #[test]
    fn metadata_round_trips_into_an_equivalent_config() {
        let mut keys = paper_keys();
        keys.set("v1", "3");
        keys.set("omega", "9.3");
        keys.set("guess", "3.45,-0.02");
        let config = RunConfig::from_keys(
            CommandName::Solve,
            keys,
            OutputFormat::Json,
            true,
            Some(3),
            None,
        )
        .unwrap();
        let rebuilt = config_from_metadata(&config.metadata()).unwrap();
        assert_eq!(rebuilt.metadata(), config.metadata());
    }

    #[test]
    fn arbitrary_finite_floats_round_trip_through_the_formatter() {
        use proptest::prelude::*;
        let mut runner = proptest::test_runner::TestRunner::default();
        runner
            .run(&any::<u64>(), |bits| {
                let value = f64::from_bits(bits);
                prop_assume!(value.is_finite());
                let parsed: f64 = format_float(value).parse().unwrap();
                prop_assert_eq!(parsed.to_bits(), value.to_bits());
                Ok(())
            })
            .unwrap();
    }

    #[test]
    fn metadata_lines_parse_back_from_csv() {
        let table = Table::new(&["x"]);
        let meta = vec![
            ("command".to_string(), "static".to_string()),
            ("a".to_string(), format_float(1.0)),
        ];
        let text = render_table(&table, OutputFormat::Csv, &meta);
        assert_eq!(metadata_from_csv(&text), meta);
    }
}
