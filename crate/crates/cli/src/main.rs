use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::Serialize;

use fcm_cad::eval::{self, generate_synthetic, load_dataset, metrics_table, write_dataset, DatasetError, LabeledDataset};
use fcm_cad::fuzzy::OpinionFile;
use fcm_cad::model::{FieldIssue, ModelError, WeightSetDef};
use fcm_cad::{CadModel, ModelDefinition, PatientInput, ValidationError};
use fcm_cad_cli::api::{self, ApiError, PredictRequest, PredictResponse, WhatIfRequest};
use fcm_cad_cli::{service, weights};

const EXIT_VALIDATION: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "fcm-cad", version, about = "Coronary artery disease risk scoring with a fuzzy cognitive map")]
struct Cli {
    /// Model definition file; the bundled model when omitted.
    #[arg(long, global = true, env = "MODEL_PATH")]
    model: Option<PathBuf>,
    /// Weight-set file replacing the model's weights. Concepts it omits keep
    /// their model weight.
    #[arg(long, global = true)]
    weights: Option<PathBuf>,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score one patient file.
    Predict {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        threshold: Option<f64>,
    },
    /// Score a patient file with and without attribute overrides.
    Whatif {
        #[arg(long, short)]
        input: PathBuf,
        /// Attribute override, repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long, allow_hyphen_values = true)]
        threshold: Option<f64>,
    },
    /// Confusion matrix and metrics for a labeled CSV dataset.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        threshold: Option<f64>,
    },
    /// Metrics over a grid of thresholds.
    Sweep {
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated thresholds.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "points")]
        grid: Option<String>,
        /// Size of an evenly spaced grid over [-1, 1].
        #[arg(long)]
        points: Option<usize>,
        /// Print the sweep as CSV.
        #[arg(long, conflicts_with = "json")]
        csv: bool,
    },
    /// Turn an expert-opinion file into a weight-set file.
    Defuzzify {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Inspect or check model files.
    Model {
        #[command(subcommand)]
        action: ModelCommand,
    },
    /// Write a synthetic labeled dataset as CSV.
    Generate {
        #[arg(long, default_value_t = 303)]
        count: usize,
        #[arg(long, default_value_t = 187.0 / 303.0)]
        diseased_fraction: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "BIND_ADDR", default_value = "127.0.0.1:8080")]
        bind: String,
        /// Comma-separated origins allowed by CORS, or `*`.
        #[arg(long, env = "ALLOWED_ORIGINS", default_value = "http://localhost:5173")]
        allowed_origins: String,
        /// Dataset served by GET /sweep; a seeded synthetic cohort when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ModelCommand {
    /// Print the model.
    Show,
    /// Check a model file, or the selected model when no file is given.
    Validate { path: Option<PathBuf> },
}

#[derive(Debug)]
enum Failure {
    Validation { message: String, issues: Vec<FieldIssue> },
    Io(String),
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Failure::Validation { message: message.into(), issues: Vec::new() }
    }

    fn exit_code(&self) -> u8 {
        match self {
            Failure::Validation { .. } => EXIT_VALIDATION,
            Failure::Io(_) => EXIT_IO,
        }
    }
}

impl From<ValidationError> for Failure {
    fn from(e: ValidationError) -> Self {
        Failure::Validation { message: "invalid input".into(), issues: e.issues }
    }
}

impl From<ApiError> for Failure {
    fn from(e: ApiError) -> Self {
        match e {
            ApiError::Validation(v) => v.into(),
            ApiError::Internal(msg) => Failure::Io(msg),
        }
    }
}

fn model_failure(path: &Path, e: ModelError) -> Failure {
    match e {
        ModelError::Io(e) => Failure::Io(format!("{}: {e}", path.display())),
        ModelError::Json(e) => Failure::validation(format!("{}: {e}", path.display())),
        ModelError::Invalid(errs) => Failure::Validation {
            message: format!("{}: invalid model", path.display()),
            issues: errs.into_iter().map(|m| FieldIssue { field: "model".into(), message: m }).collect(),
        },
    }
}

fn dataset_failure(e: DatasetError) -> Failure {
    match e {
        DatasetError::Io(e) => Failure::Io(e.to_string()),
        DatasetError::Rows(rows) => Failure::Validation {
            message: format!("{} invalid row(s)", rows.len()),
            issues: rows
                .into_iter()
                .flat_map(|r| {
                    let line = r.line;
                    r.issues.into_iter().map(move |i| FieldIssue { field: format!("line {line}: {}", i.field), ..i })
                })
                .collect(),
        },
        other => Failure::validation(other.to_string()),
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Failure::validation(format!("{}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn load_model(cli: &Cli) -> Result<CadModel, Failure> {
    let model = match &cli.model {
        Some(p) => CadModel::load(p).map_err(|e| model_failure(p, e))?,
        None => CadModel::bundled(),
    };
    match &cli.weights {
        Some(p) => {
            let def: WeightSetDef = read_json(p)?;
            let w = weights::overlay(&model, &def)?;
            Ok(model.with_weights(w))
        }
        None => Ok(model),
    }
}

fn parse_overrides(pairs: &[String]) -> Result<PatientInput, Failure> {
    let mut input = PatientInput::new();
    let mut issues = Vec::new();
    for pair in pairs {
        match pair.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => input.insert(k.trim(), v.trim()),
            _ => issues.push(FieldIssue { field: pair.clone(), message: "expected KEY=VALUE".into() }),
        }
    }
    if issues.is_empty() {
        Ok(input)
    } else {
        Err(ValidationError { issues }.into())
    }
}

fn prediction_text(r: &PredictResponse) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<20}{}", "normalized score", r.normalized_score);
    let _ = writeln!(out, "{:<20}{}", "raw score", r.raw_score);
    let _ = writeln!(out, "{:<20}{}", "band", r.band_label);
    let _ = writeln!(out, "{:<20}{} (threshold {})", "classification", class_str(r), r.threshold);
    let fired = if r.fired_rules.is_empty() { "none".to_string() } else { r.fired_rules.join(", ") };
    let _ = writeln!(out, "{:<20}{fired}", "rules fired");
    let mut active: Vec<_> = r.contributions.iter().filter(|c| c.value != 0.0).collect();
    active.sort_by(|a, b| b.contribution.abs().total_cmp(&a.contribution.abs()));
    if !active.is_empty() {
        let _ = writeln!(out, "contributions");
        for c in active {
            let _ = writeln!(
                out,
                "  {:<4} {:<40} {:>4} x {:>7.4} = {:>+8.4}",
                c.concept.to_string(),
                c.name,
                c.value,
                c.weight,
                c.contribution
            );
        }
    }
    out
}

fn class_str(r: &PredictResponse) -> &'static str {
    match r.classification {
        fcm_cad::Classification::Diseased => "diseased",
        fcm_cad::Classification::Healthy => "healthy",
    }
}

fn sweep_text(r: &api::SweepResponse) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>10} {:>6} {:>6} {:>6} {:>6} {:>12} {:>12} {:>10}",
        "threshold", "tp", "fp", "fn", "tn", "sensitivity", "specificity", "youden"
    );
    for p in &r.sweep.points {
        let _ = writeln!(
            out,
            "{:>10.4} {:>6} {:>6} {:>6} {:>6} {:>12.4} {:>12.4} {:>10.4}",
            p.threshold,
            p.confusion.tp,
            p.confusion.fp,
            p.confusion.fn_,
            p.confusion.tn,
            p.metrics.sensitivity,
            p.metrics.specificity,
            p.youden
        );
    }
    match &r.sweep.recommended {
        Some(rec) => {
            let _ = writeln!(out, "recommended threshold {} (Youden {:.4})", rec.threshold, rec.youden);
        }
        None => {
            let _ = writeln!(out, "no recommendation: the dataset has only one class");
        }
    }
    out
}

fn model_text(model: &CadModel) -> String {
    let def = model.definition();
    let mut out = String::new();
    let _ = writeln!(out, "{} (schema {})", def.name, def.schema_version);
    let _ = writeln!(out, "default threshold {}", def.default_threshold);
    let _ = writeln!(out, "\nconcepts");
    for c in model.concepts() {
        let weight = if c.id.is_input() { format!("{:>7}", model.baseline_weights().get(c.id)) } else { "output".into() };
        let values: Vec<&str> = c.values.iter().map(|s| s.as_str()).collect();
        let _ = writeln!(out, "  {:<4} {:<40} {weight}  {}", c.id.to_string(), c.name, values.join(" | "));
    }
    let _ = writeln!(out, "\nrules");
    for r in model.rules() {
        let _ = writeln!(out, "  {:<32} {}", r.id, r.description);
    }
    let _ = writeln!(out, "\nbands");
    for b in model.bands().boundaries() {
        let _ = writeln!(out, "  >= {:<6} {}", b.lower, b.band.label());
    }
    out
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Predict { input, threshold } => {
            let model = load_model(cli)?;
            let patient: PatientInput = read_json(input)?;
            let r = api::handle_predict(&model, &PredictRequest { patient, threshold: *threshold })?;
            write_out(None, &if cli.json { to_json(&r) } else { prediction_text(&r) })
        }
        Command::Whatif { input, set, threshold } => {
            let model = load_model(cli)?;
            let patient: PatientInput = read_json(input)?;
            let overrides = parse_overrides(set)?;
            let r = api::handle_whatif(&model, &WhatIfRequest { patient, overrides, threshold: *threshold })?;
            if cli.json {
                return write_out(None, &to_json(&r));
            }
            let mut out = String::new();
            let _ = writeln!(out, "base\n{}", indent(&prediction_text(&r.base)));
            let _ = writeln!(out, "variant\n{}", indent(&prediction_text(&r.variant)));
            let _ = writeln!(out, "delta {:+}", r.delta);
            if r.base.band != r.variant.band {
                let _ = writeln!(out, "band changes: {} -> {}", r.base.band_label, r.variant.band_label);
            }
            if r.base.classification != r.variant.classification {
                let _ = writeln!(out, "classification changes: {} -> {}", class_str(&r.base), class_str(&r.variant));
            }
            write_out(None, &out)
        }
        Command::Evaluate { data, threshold } => {
            let model = load_model(cli)?;
            let dataset = load_dataset(data, model.concepts()).map_err(dataset_failure)?;
            let r = api::handle_evaluate(&model, &dataset, *threshold)?;
            if cli.json {
                return write_out(None, &to_json(&r));
            }
            let mut out = format!("{} records from {}, threshold {}\n", r.records, data.display(), r.threshold);
            out.push_str(&metrics_table(&r.confusion, &r.metrics));
            let _ = writeln!(out, "{:<22}{:>10.4}", "youden", r.youden);
            write_out(None, &out)
        }
        Command::Sweep { data, grid, points, csv } => {
            let model = load_model(cli)?;
            let dataset = load_dataset(data, model.concepts()).map_err(dataset_failure)?;
            let grid = match (grid, points) {
                (Some(text), _) => api::parse_grid(text)?,
                (None, Some(n)) => api::grid_of(*n)?,
                (None, None) => api::grid_of(eval::DEFAULT_GRID_POINTS)?,
            };
            let r = api::handle_sweep(&model, &dataset, &grid)?;
            if *csv {
                let mut buf = Vec::new();
                eval::write_sweep_csv(&mut buf, &r.sweep).map_err(|e| Failure::Io(e.to_string()))?;
                return write_out(None, &String::from_utf8(buf).expect("utf-8 CSV"));
            }
            write_out(None, &if cli.json { to_json(&r) } else { sweep_text(&r) })
        }
        Command::Defuzzify { input, output } => {
            let model = load_model(cli)?;
            let opinions: OpinionFile = read_json(input)?;
            let def = weights::defuzzify(&model, &opinions)?;
            write_out(output.as_deref(), &to_json(&def))?;
            if output.is_some() && !cli.json {
                for key in opinions.keys() {
                    println!("derived {key}");
                }
            }
            Ok(())
        }
        Command::Model { action: ModelCommand::Show } => {
            let model = load_model(cli)?;
            write_out(None, &if cli.json { to_json(model.definition()) } else { model_text(&model) })
        }
        Command::Model { action: ModelCommand::Validate { path } } => {
            let path = path.as_ref().or(cli.model.as_ref());
            let def = match path {
                Some(p) => ModelDefinition::load(p).map_err(|e| model_failure(p, e))?,
                None => ModelDefinition::bundled(),
            };
            let shown = path.map(|p| p.display().to_string()).unwrap_or_else(|| "bundled model".into());
            def.validate().map_err(|e| model_failure(Path::new(&shown), e))?;
            if cli.json {
                write_out(None, &to_json(&serde_json::json!({ "valid": true, "model": shown })))
            } else {
                write_out(None, "valid\n")
            }
        }
        Command::Generate { count, diseased_fraction, seed, output } => {
            let model = load_model(cli)?;
            let dataset = generate_synthetic(*count, *diseased_fraction, *seed)
                .map_err(|e| Failure::validation(e.to_string()))?;
            let mut buf = Vec::new();
            write_dataset(&mut buf, &dataset, model.concepts()).map_err(dataset_failure)?;
            write_out(output.as_deref(), &String::from_utf8(buf).expect("utf-8 CSV"))
        }
        Command::Serve { bind, allowed_origins, data } => {
            let model = load_model(cli)?;
            let dataset = match data {
                Some(p) => load_dataset(p, model.concepts()).map_err(dataset_failure)?,
                None => default_sweep_dataset(),
            };
            let cors = service::cors_layer(allowed_origins).map_err(Failure::validation)?;
            serve(model, dataset, bind, cors)
        }
    }
}

fn default_sweep_dataset() -> LabeledDataset {
    generate_synthetic(303, 187.0 / 303.0, 42).expect("valid generator arguments")
}

fn indent(text: &str) -> String {
    text.lines().map(|l| format!("  {l}")).collect::<Vec<_>>().join("\n")
}

fn serve(model: CadModel, dataset: LabeledDataset, bind: &str, cors: tower_http::cors::CorsLayer) -> Result<(), Failure> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    let state = service::AppState { model: Arc::new(model), dataset: Arc::new(dataset) };
    let app = service::router(state, cors);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
    runtime.block_on(async {
        let listener =
            tokio::net::TcpListener::bind(bind).await.map_err(|e| Failure::Io(format!("cannot bind {bind}: {e}")))?;
        tracing::info!("listening on {}", listener.local_addr().map(|a| a.to_string()).unwrap_or_else(|_| bind.into()));
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| Failure::Io(e.to_string()))
    })
}

fn report(failure: &Failure, json: bool) {
    if json {
        let body = match failure {
            Failure::Validation { message, issues } => {
                serde_json::json!({ "error": "validation", "message": message, "issues": issues })
            }
            Failure::Io(message) => serde_json::json!({ "error": "io", "message": message }),
        };
        println!("{}", serde_json::to_string_pretty(&body).expect("serializable"));
        return;
    }
    let mut err = std::io::stderr().lock();
    match failure {
        Failure::Validation { message, issues } => {
            let _ = writeln!(err, "error: {message}");
            for i in issues {
                let _ = writeln!(err, "  {}: {}", i.field, i.message);
            }
        }
        Failure::Io(message) => {
            let _ = writeln!(err, "error: {message}");
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            report(&f, cli.json);
            ExitCode::from(f.exit_code())
        }
    }
}
