//! Subcommand implementations.

use std::fs;
use std::io::Write;
use std::path::Path;

use logmend_encode::{apply_mask, derive_seed, strategy_by_name, EncoderSet, STRATEGY_NAMES};
use logmend_log::{
    generate_synthetic_log, infer_schema, parse_csv_log, split_log, write_csv_log,
    AttributeSchema, Cell, CsvOptions, EventLog, ProcessSpec, SchemaHints,
};
use logmend_model::{load_params, save_params, ModelConfig};
use logmend_train::{
    evaluate_multi_run, random_search, repair_log, train_model, SearchSpace, TrainConfig,
    TrainHistory,
};

use crate::args::{
    EvaluateArgs, GenerateArgs, MaskArgs, ModelArgs, RepairArgs, SchemaArgs, TrainArgs, TuneArgs,
};
use crate::CliError;

const SPLIT_RATIOS: (f64, f64, f64) = (0.6, 0.2, 0.2);

fn require_input(path: &Path) -> Result<(), CliError> {
    if !path.is_file() {
        return Err(CliError::Validation(format!("input file `{}` does not exist", path.display())));
    }
    Ok(())
}

fn require_out_dir(path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() && !parent.is_dir() {
            return Err(CliError::Validation(format!(
                "output directory `{}` does not exist",
                parent.display()
            )));
        }
    }
    Ok(())
}

fn load_schema(
    log_path: &Path,
    args: &SchemaArgs,
    missing_token: &str,
) -> Result<AttributeSchema, CliError> {
    if let Some(schema_path) = &args.schema {
        require_input(schema_path)?;
        let text = fs::read_to_string(schema_path)?;
        let schema: AttributeSchema = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("cannot parse schema file: {e}")))?;
        schema
            .validate()
            .map_err(|e| CliError::Validation(format!("invalid schema file: {e}")))?;
        Ok(schema)
    } else {
        let hints = SchemaHints {
            case_id_column: args.case_col.clone(),
            activity_column: args.activity_col.clone(),
            timestamp_column: args.timestamp_col.clone(),
            missing_token: missing_token.to_string(),
        };
        let file = fs::File::open(log_path)?;
        Ok(infer_schema(file, &hints)?)
    }
}

fn read_log(
    log_path: &Path,
    schema: &AttributeSchema,
    missing_token: &str,
) -> Result<EventLog, CliError> {
    let options = CsvOptions::with_token(missing_token);
    let file = fs::File::open(log_path)?;
    Ok(parse_csv_log(file, schema, &options)?)
}

fn model_config(args: &ModelArgs, aggregator: &str, seed: u64) -> Result<ModelConfig, CliError> {
    let cfg = ModelConfig {
        hidden_size: args.hidden,
        n_layers: args.layers,
        aggregator: aggregator.to_string(),
        seed,
    };
    cfg.validate()
        .map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(cfg)
}

fn load_train_config(path: &Path) -> Result<TrainConfig, CliError> {
    require_input(path)?;
    let text = fs::read_to_string(path)?;
    let cfg: TrainConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("cannot parse config file: {e}")))?;
    cfg.validate()
        .map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(cfg)
}

fn write_history(path: &Path, history: &TrainHistory) -> Result<(), CliError> {
    let mut out = String::from("epoch,train_loss,val_loss\n");
    for stats in &history.epochs {
        out.push_str(&format!("{},{},{}\n", stats.epoch, stats.train_loss, stats.val_loss));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn generate(args: &GenerateArgs) -> Result<(), CliError> {
    require_input(&args.spec)?;
    require_out_dir(&args.out)?;
    if args.traces == 0 {
        return Err(CliError::Validation("--traces must be at least 1".into()));
    }
    let text = fs::read_to_string(&args.spec)?;
    let spec = ProcessSpec::from_json(&text)
        .map_err(|e| CliError::Validation(format!("invalid process spec: {e}")))?;

    let log = generate_synthetic_log(&spec, args.traces, args.seed)?;
    let options = CsvOptions::with_token(&args.missing_token);
    let file = fs::File::create(&args.out)?;
    write_csv_log(&log, file, &options)?;
    eprintln!("wrote {} traces ({} events) to {}", log.n_traces(), log.n_events(), args.out.display());
    Ok(())
}

pub fn mask(args: &MaskArgs) -> Result<(), CliError> {
    require_input(&args.input)?;
    require_out_dir(&args.output)?;
    let strategy = strategy_by_name(&args.strategy, args.random_p).map_err(|_| {
        CliError::Validation(format!(
            "unknown strategy `{}` (expected one of {})",
            args.strategy,
            STRATEGY_NAMES.join(", ")
        ))
    })?;

    let schema = load_schema(&args.input, &args.schema, &args.missing_token)?;
    let mut log = read_log(&args.input, &schema, &args.missing_token)?;

    for (ti, trace) in log.traces.iter_mut().enumerate() {
        let flags = apply_mask(strategy.as_ref(), trace.len(), derive_seed(args.seed, 0, ti as u64));
        for (event, &remove) in trace.events.iter_mut().zip(&flags) {
            if remove {
                for cell in &mut event.cells {
                    *cell = Cell::Missing;
                }
            }
        }
    }

    let options = CsvOptions::with_token(&args.missing_token);
    let file = fs::File::create(&args.output)?;
    write_csv_log(&log, file, &options)?;
    Ok(())
}

pub fn tune(args: &TuneArgs) -> Result<(), CliError> {
    require_input(&args.log)?;
    require_out_dir(&args.out)?;
    if args.trials == 0 {
        return Err(CliError::Validation("--trials must be at least 1".into()));
    }
    let schema = load_schema(&args.log, &args.schema, &args.missing_token)?;
    let log = read_log(&args.log, &schema, &args.missing_token)?;
    let (train, val, _test) = split_log(&log, SPLIT_RATIOS, args.seed)?;
    let enc = EncoderSet::fit(&train).map_err(anyhow::Error::from)?;

    let template = TrainConfig {
        max_epochs: args.max_epochs,
        seed: args.seed,
        ..Default::default()
    };
    // Each trial samples its own aggregator; this one only seeds the layout.
    let base_aggregator = args.model.aggregator.as_deref().unwrap_or("mean").to_string();
    let model_cfg = model_config(&args.model, &base_aggregator, args.seed)?;

    let outcome = random_search(
        &SearchSpace::default(),
        args.trials,
        args.seed,
        &template,
        !args.deterministic,
        |cfg| {
            let (_, history) = train_model(&train, &val, &enc, cfg, &model_cfg, 0.5)?;
            let best = history
                .epochs
                .iter()
                .map(|e| e.val_loss)
                .fold(f64::INFINITY, f64::min);
            Ok(best)
        },
    )
    .map_err(anyhow::Error::from)?;

    eprintln!(
        "best of {} trials: val loss {:.6} (lr {:.5}, batch {}, decay {:.4}, aggregator {})",
        args.trials,
        outcome.best_loss,
        outcome.best.learning_rate,
        outcome.best.batch_size,
        outcome.best.weight_decay,
        outcome.best.aggregator
    );
    fs::write(&args.out, serde_json::to_string_pretty(&outcome.best).expect("serializable"))?;
    Ok(())
}

fn resolve_train_config(args: &TrainArgs) -> Result<TrainConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => load_train_config(path)?,
        None => TrainConfig::default(),
    };
    if let Some(lr) = args.learning_rate {
        cfg.learning_rate = lr;
    }
    if let Some(batch) = args.batch_size {
        cfg.batch_size = batch;
    }
    if let Some(decay) = args.weight_decay {
        cfg.weight_decay = decay;
    }
    if let Some(aggregator) = &args.model.aggregator {
        cfg.aggregator = aggregator.clone();
    }
    cfg.max_epochs = args.max_epochs;
    cfg.patience = (args.patience > 0).then_some(args.patience);
    cfg.seed = args.seed;
    cfg.validate().map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(cfg)
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    require_input(&args.log)?;
    let train_cfg = resolve_train_config(args)?;
    let model_cfg = model_config(&args.model, &train_cfg.aggregator, args.seed)?;
    if !(args.random_p > 0.0 && args.random_p < 1.0) {
        return Err(CliError::Validation("--random-p must lie in (0, 1)".into()));
    }

    let schema = load_schema(&args.log, &args.schema, &args.missing_token)?;
    let log = read_log(&args.log, &schema, &args.missing_token)?;
    let (train, val, _test) = split_log(&log, SPLIT_RATIOS, args.seed)?;
    let enc = EncoderSet::fit(&train).map_err(anyhow::Error::from)?;

    fs::create_dir_all(&args.out_dir)?;
    let (params, history) =
        train_model(&train, &val, &enc, &train_cfg, &model_cfg, args.random_p)
            .map_err(anyhow::Error::from)?;

    let mut params_file = fs::File::create(args.out_dir.join("params.bin"))?;
    let effective = ModelConfig { aggregator: train_cfg.aggregator.clone(), ..model_cfg };
    save_params(&params, &effective, &enc, &mut params_file).map_err(anyhow::Error::from)?;
    params_file.flush()?;

    fs::write(
        args.out_dir.join("encoders.json"),
        enc.to_json().map_err(anyhow::Error::from)?,
    )?;
    write_history(&args.out_dir.join("history.csv"), &history)?;

    let last = history.epochs.last().expect("at least one epoch");
    eprintln!(
        "trained {} epochs (best epoch {}): train loss {:.6}, val loss {:.6}",
        history.epochs.len(),
        history.best_epoch,
        last.train_loss,
        last.val_loss
    );
    Ok(())
}

pub fn evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    require_input(&args.log)?;
    require_out_dir(&args.out)?;
    if args.runs == 0 {
        return Err(CliError::Validation("--runs must be at least 1".into()));
    }
    let mut train_cfg = match &args.config {
        Some(path) => load_train_config(path)?,
        None => TrainConfig::default(),
    };
    train_cfg.max_epochs = args.max_epochs;
    train_cfg.seed = args.seed;
    if let Some(aggregator) = &args.model.aggregator {
        train_cfg.aggregator = aggregator.clone();
    }
    let model_cfg = model_config(&args.model, &train_cfg.aggregator, args.seed)?;

    let schema = load_schema(&args.log, &args.schema, &args.missing_token)?;
    let log = read_log(&args.log, &schema, &args.missing_token)?;
    let (train, val, test) = split_log(&log, SPLIT_RATIOS, args.seed)?;
    let enc = EncoderSet::fit(&train).map_err(anyhow::Error::from)?;

    let report = evaluate_multi_run(
        &train,
        &val,
        &test,
        &enc,
        &train_cfg,
        &model_cfg,
        args.runs,
        args.random_p,
        !args.deterministic,
    )
    .map_err(anyhow::Error::from)?;

    if let Some(dir) = &args.history_dir {
        fs::create_dir_all(dir)?;
        for (run, history) in report.histories.iter().enumerate() {
            write_history(&dir.join(format!("history_run{run:02}.csv")), history)?;
        }
    }

    fs::write(&args.out, serde_json::to_string_pretty(&report.to_json()).expect("serializable"))?;
    eprintln!(
        "evaluated {} runs in {:.1}s; report at {}",
        args.runs,
        report.wall_clock_seconds,
        args.out.display()
    );
    for (strategy, attrs) in &report.strategies {
        for (attribute, summary) in attrs {
            let raw = summary
                .raw_seconds
                .as_ref()
                .map(|r| format!(" (raw seconds: {:.3} +- {:.3})", r.mean, r.std))
                .unwrap_or_default();
            eprintln!(
                "  {strategy:7} {attribute:20} {}: {:.4} +- {:.4}{raw}",
                summary.metric, summary.mean, summary.std
            );
        }
    }
    Ok(())
}

pub fn repair(args: &RepairArgs) -> Result<(), CliError> {
    require_input(&args.log)?;
    require_out_dir(&args.out)?;
    let encoders_path = args.artifacts.join("encoders.json");
    let params_path = args.artifacts.join("params.bin");
    for path in [&encoders_path, &params_path] {
        if !path.is_file() {
            return Err(CliError::Validation(format!(
                "artifact `{}` does not exist",
                path.display()
            )));
        }
    }

    let enc = EncoderSet::from_json(&fs::read_to_string(&encoders_path)?)
        .map_err(|e| CliError::Validation(format!("invalid encoders file: {e}")))?;
    let params_file = fs::File::open(&params_path)?;
    let (params, model_cfg) = load_params(std::io::BufReader::new(params_file), &enc)
        .map_err(|e| CliError::Validation(format!("invalid params file: {e}")))?;

    let log = read_log(&args.log, &enc.schema, &args.missing_token)?;

    // A run of fully missing events longer than twice the layer count is
    // beyond the model's receptive field.
    let longest_gap = log
        .traces
        .iter()
        .map(|t| {
            let flags: Vec<bool> = t.events.iter().map(|e| e.fully_missing()).collect();
            logmend_encode::max_missing_run(&flags)
        })
        .max()
        .unwrap_or(0);
    if !logmend_encode::coverage_check(&vec![true; longest_gap], model_cfg.n_layers) {
        eprintln!(
            "warning: the log contains a run of {longest_gap} fully missing events; \
             a {}-layer model only propagates information across {} positions",
            model_cfg.n_layers,
            2 * model_cfg.n_layers
        );
    }

    let repaired = repair_log(&log, &params, &model_cfg, &enc).map_err(anyhow::Error::from)?;

    let options = CsvOptions::with_token(&args.missing_token);
    let file = fs::File::create(&args.out)?;
    write_csv_log(&repaired, file, &options)?;
    Ok(())
}
