mod args;

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use flowforge::autotune::{
    apply_params, default_selection_learner, default_space, random_search, select_features, trace_csv,
};
use flowforge::engine::{self, ExecutorConfig};
use flowforge::flowdata::{
    csv_header, default_label_map, generate_synthetic, load_csv, project_features, remove_outliers, summarize,
    write_csv, DatasetSummary, FlowSchema, LabelMap, LabeledRecord, DEFAULT_LABEL_COLUMN, DEFAULT_OUTLIER_K,
    SELECTED_FEATURES,
};
use flowforge::harness::{render_report, render_series, run_benchmark_on, DataSource, ExperimentPlan};
use flowforge::metrics::report;
use flowforge::model::evaluate;
use flowforge::{fit_model, Algorithm, AlgorithmLearner, TrainParams, TrainedModel};

use args::{Cli, Command, DataArgs, ExecArgs, TrainArgs};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// The reader went away (`flowforge gen | head`); not worth reporting.
fn broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|cause| {
        cause
            .downcast_ref::<io::Error>()
            .is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)
            || cause
                .downcast_ref::<flowforge::Error>()
                .is_some_and(flowforge::Error::is_broken_pipe)
    })
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest {
            data,
            remove_outliers: filter,
            out,
        } => ingest(&data, filter, out.as_deref()),
        Command::Gen {
            rows,
            noise_features,
            ratio,
            seed,
            out,
        } => {
            let (records, schema) = generate_synthetic(rows, noise_features, ratio, seed)?;
            emit_csv(&records, &schema, &default_label_map(), out.as_deref())
        }
        Command::Select {
            data,
            exec,
            folds,
            epsilon,
        } => {
            let loaded = load_data(&data, FeatureChoice::AllColumns)?;
            let table = engine::partition(loaded.records, exec.partitions)?;
            let result = select_features(
                &table,
                &loaded.feature_names,
                &default_selection_learner(),
                folds,
                data.seed,
                epsilon,
                &executor(&exec, data.seed)?,
            )?;
            for (set, score) in &result.score_trace {
                println!("{score:.4}\t{}", set.join(", "));
            }
            println!("selected: {}", result.selected_features.join(", "));
            Ok(())
        }
        Command::Tune {
            data,
            exec,
            algo,
            trials,
            folds,
            train,
            out,
        } => {
            let algorithm = Algorithm::from(algo);
            let loaded = load_data(&data, FeatureChoice::Default)?;
            let table = engine::partition(loaded.records, exec.partitions)?;
            let base = train_params(&train, data.seed);
            let result = random_search(
                &table,
                |set| Ok(AlgorithmLearner::new(algorithm, apply_params(&base, set)?)),
                &default_space(algorithm),
                trials,
                folds,
                data.seed,
                &executor(&exec, data.seed)?,
            )?;
            let best = result.best();
            println!(
                "best trial {}: {} mean weighted F1 {:.4} over {} folds",
                result.best_index,
                flowforge::autotune::format_params(&best.params),
                best.mean_score,
                best.fold_scores.len()
            );
            if let Some(path) = out {
                write_file(&path, &trace_csv(&result.trials)?)?;
            }
            Ok(())
        }
        Command::Train {
            data,
            exec,
            algo,
            train,
            out,
        } => {
            let algorithm = Algorithm::from(algo);
            let loaded = load_data(&data, FeatureChoice::Default)?;
            let rows = loaded.records.len();
            let table = engine::partition(loaded.records, exec.partitions)?;
            let params = train_params(&train, data.seed);
            let exec = executor(&exec, data.seed)?;
            let fitted = engine::timed(|| fit_model(algorithm, &params, &table, &exec));
            let trained = TrainedModel::new(loaded.feature_names, fitted.value?)?;
            trained.save(&out)?;
            println!(
                "trained {algorithm} on {rows} rows in {:.2} s, saved to {}",
                fitted.wall_seconds,
                out.display()
            );
            Ok(())
        }
        Command::Eval { model, data, exec } => {
            let trained = TrainedModel::load(&model)?;
            let loaded = load_data(&data, FeatureChoice::Fixed(trained.feature_names.clone()))?;
            let table = engine::partition(loaded.records, exec.partitions)?;
            let cm = evaluate(&trained.model, &table, &executor(&exec, data.seed)?)?;
            println!("{}", report(&cm));
            Ok(())
        }
        Command::Bench {
            data,
            algo,
            workers,
            partitions,
            repeats,
            holdout,
            eval_on_train,
            format,
            train,
            out,
        } => {
            let loaded = load_data(&data, FeatureChoice::Default)?;
            let source = match &data.data {
                Some(path) => DataSource::Csv {
                    path: path.clone(),
                    label_column: loaded.label_column.clone(),
                    label_map: loaded.label_map.clone(),
                    remove_outliers: false,
                },
                None => DataSource::Synthetic {
                    rows: data.rows,
                    noise_features: data.noise_features,
                    ratio: data.ratio,
                },
            };
            let plan = ExperimentPlan {
                features: loaded.feature_names.clone(),
                worker_counts: workers,
                partition_count: partitions,
                repeats,
                seed: data.seed,
                holdout_fraction: holdout,
                eval_on_train,
                params: train_params(&train, data.seed),
                ..ExperimentPlan::new(source, algo.into_iter().map(Algorithm::from).collect())
            };
            let (report, summary) = run_benchmark_on(&plan, loaded.records, loaded.feature_names)?;
            for row in report.rows.iter().filter(|r| r.error.is_some()) {
                eprintln!(
                    "warning: {} at {} workers (repeat {}) failed: {}",
                    row.algorithm,
                    row.workers,
                    row.repeat,
                    row.error.as_deref().unwrap_or_default()
                );
            }
            let text = render_report(&report, &summary, format.into())?;
            match out {
                Some(path) => {
                    write_file(&path, &text)?;
                    for speedup in &summary.algorithms {
                        write_file(&series_path(&path, speedup.algorithm), &render_series(speedup))?;
                    }
                }
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}

fn executor(exec: &ExecArgs, seed: u64) -> Result<ExecutorConfig> {
    Ok(ExecutorConfig::new(exec.workers, exec.partitions, seed)?)
}

fn train_params(t: &TrainArgs, seed: u64) -> TrainParams {
    let mut p = TrainParams::default();
    p.tree.seed = seed;
    if let Some(v) = t.max_depth {
        p.tree.max_depth = v;
    }
    if let Some(v) = t.max_bins {
        p.tree.max_bins = v;
    }
    if let Some(v) = t.impurity {
        p.tree.impurity = v.into();
    }
    if let Some(v) = t.trees {
        p.forest.n_trees = v;
    }
    if let Some(v) = t.stages {
        p.gbt_stages = v;
    }
    if let Some(v) = t.learning_rate {
        p.gbt_learning_rate = v;
    }
    if let Some(v) = t.smoothing {
        p.smoothing = v;
    }
    if let Some(v) = t.nb_variant {
        p.nb_variant = v.into();
    }
    if let Some(v) = t.iterations {
        p.gd.max_iterations = v;
    }
    if let Some(v) = t.step_size {
        p.gd.step_size = v;
    }
    if let Some(v) = t.l2 {
        p.gd.l2_penalty = v;
    }
    p
}

fn series_path(report: &Path, algorithm: Algorithm) -> PathBuf {
    let stem = report.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    report.with_file_name(format!("{stem}_{algorithm}_series.csv"))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit_csv(records: &[LabeledRecord], schema: &FlowSchema, label_map: &LabelMap, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_csv(io::BufWriter::new(file), records, schema, label_map)?;
        }
        None => write_csv(io::stdout().lock(), records, schema, label_map)?,
    }
    Ok(())
}

fn ingest(data: &DataArgs, filter: bool, out: Option<&Path>) -> Result<()> {
    if data.data.is_none() {
        bail!("ingest needs --data");
    }
    let loaded = load_data(data, FeatureChoice::Default)?;
    let mut stdout = io::stdout().lock();
    print_summary(&mut stdout, "loaded", &loaded.summary, &loaded.label_map)?;
    let mut records = loaded.records;
    if filter {
        let (kept, summary) = remove_outliers(records, DEFAULT_OUTLIER_K)?;
        print_summary(&mut stdout, "after outlier removal", &summary, &loaded.label_map)?;
        records = kept;
    }
    writeln!(stdout, "features: {}", loaded.feature_names.join(", "))?;
    if let Some(path) = out {
        let schema = FlowSchema::from_features(&loaded.feature_names, &loaded.label_column)?;
        emit_csv(&records, &schema, &loaded.label_map, Some(path))?;
    }
    Ok(())
}

fn print_summary(w: &mut impl Write, title: &str, s: &DatasetSummary, label_map: &LabelMap) -> Result<()> {
    let names: BTreeMap<u8, &str> = label_map.iter().map(|(k, &v)| (v, k.as_str())).collect();
    writeln!(w, "{title}: {} rows", s.total_rows)?;
    for (class, count) in &s.rows_per_class {
        writeln!(w, "  {}: {count}", names.get(class).copied().unwrap_or("?"))?;
    }
    writeln!(w, "dropped: {} rows", s.dropped_rows)?;
    for (reason, count) in &s.dropped_reasons {
        writeln!(w, "  {reason}: {count}")?;
    }
    Ok(())
}

enum FeatureChoice {
    /// `--features`, else the schema file, else the four selected features
    /// (CSV) or every generated column (synthetic).
    Default,
    /// As `Default`, but CSV input falls back to every non-label column.
    AllColumns,
    Fixed(Vec<String>),
}

struct Loaded {
    records: Vec<LabeledRecord>,
    feature_names: Vec<String>,
    label_column: String,
    label_map: LabelMap,
    summary: DatasetSummary,
}

#[derive(Default)]
struct SchemaFile {
    label: Option<String>,
    features: Vec<String>,
    label_map: LabelMap,
}

/// `key = value` lines; `#` starts a comment. Keys: `label`, `features`
/// (comma-separated), `benign` and `bot` (comma-separated label strings).
fn read_schema(path: &Path) -> Result<SchemaFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut schema = SchemaFile::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}:{}: expected `key = value`", path.display(), n + 1);
        };
        let list = || value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty());
        match key.trim() {
            "label" => schema.label = Some(value.trim().to_string()),
            "features" => schema.features = list().collect(),
            "benign" => schema
                .label_map
                .extend(list().map(|s| (s, flowforge::flowdata::BENIGN))),
            "bot" => schema.label_map.extend(list().map(|s| (s, flowforge::flowdata::BOT))),
            other => bail!("{}:{}: unknown key `{other}`", path.display(), n + 1),
        }
    }
    Ok(schema)
}

fn load_data(args: &DataArgs, choice: FeatureChoice) -> Result<Loaded> {
    let schema_file = match &args.schema {
        Some(path) => read_schema(path)?,
        None => SchemaFile::default(),
    };
    let label_column = args
        .label_col
        .clone()
        .or(schema_file.label)
        .unwrap_or_else(|| DEFAULT_LABEL_COLUMN.to_string());
    let label_map = if schema_file.label_map.is_empty() {
        default_label_map()
    } else {
        schema_file.label_map
    };
    let all_columns = matches!(choice, FeatureChoice::AllColumns);
    let requested = match choice {
        FeatureChoice::Fixed(names) => Some(names),
        _ if !args.features.is_empty() => Some(args.features.clone()),
        _ if !schema_file.features.is_empty() => Some(schema_file.features),
        _ => None,
    };

    let (records, feature_names, summary) = match &args.data {
        Some(path) => {
            let features = match requested {
                Some(f) => f,
                None if all_columns => csv_header(path)?.into_iter().filter(|c| *c != label_column).collect(),
                None => SELECTED_FEATURES.iter().map(|s| s.to_string()).collect(),
            };
            let schema = FlowSchema::from_features(&features, &label_column)?;
            let (records, summary) =
                load_csv(path, &schema, &label_map).with_context(|| format!("loading {}", path.display()))?;
            (records, features, summary)
        }
        None => {
            let (records, schema) = generate_synthetic(args.rows, args.noise_features, args.ratio, args.seed)?;
            let (records, schema) = match requested {
                Some(f) => project_features(&records, &f, &schema)?,
                None => (records, schema),
            };
            let summary = summarize(&records);
            (records, schema.feature_columns().to_vec(), summary)
        }
    };
    Ok(Loaded {
        records,
        feature_names,
        label_column,
        label_map,
        summary,
    })
}
