//! Command implementations.
//!
//! Shared conventions: commands that produce files run inside a locked
//! [`OutDir`] and end by writing a manifest; `twolevel eval` writes its
//! report to standard output instead (machine block first, then a blank
//! line, then the human-readable rendering).

use std::path::Path;

use classim::classifier::{self, TrainConfig};
use classim::counting::{self, ConfusionCounts};
use classim::io;
use classim::oracle::{OracleMode, Scenario};
use classim::pd;
use classim::predictions::PredictionMode;
use classim::similarity::{similarity_matrix, SimilarityMatrix};
use classim::twolevel::{evaluate, Router, SimilarSets, TwoLevelModel};
use classim::types::{ClassSet, LabeledFeatureSet, Split, SplitDataset};
use classim::{Error, Result};

use crate::artifacts::OutDir;
use crate::{
    Cli, Command, OracleCommand, OracleModeArg, OracleRunArgs, OracleSampleArgs, OutputFormat,
    PdArgs, SimArgs, SimMode, TwolevelBuildArgs, TwolevelCommand, TwolevelEvalArgs,
};

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Sim(args) => sim(cli, args),
        Command::Pd(args) => pd_cmd(cli, args),
        Command::Twolevel(TwolevelCommand::Build(args)) => twolevel_build(cli, args),
        Command::Twolevel(TwolevelCommand::Eval(args)) => twolevel_eval(cli, args),
        Command::Oracle(OracleCommand::Run(args)) => oracle_run(cli, args),
        Command::Oracle(OracleCommand::Sample(args)) => oracle_sample(cli, args),
    }
}

fn base_seed(cli: &Cli) -> u64 {
    cli.seed.unwrap_or(0)
}

/// The training configuration for commands without a config-file flag, and
/// the fallback when `sim` is run without `--train-config`.
fn default_train_config(cli: &Cli) -> TrainConfig {
    TrainConfig {
        seed: base_seed(cli),
        ..TrainConfig::default()
    }
}

fn load_train_config(path: &Path) -> Result<TrainConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::File {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    TrainConfig::from_toml(&text)
}

/// Rank every class's neighbors. `requested` is clamped to `K - 1`.
fn build_topk<F>(classes: &ClassSet, requested: usize, distance: bool, rank: F) -> Result<io::TopK>
where
    F: Fn(&str, usize) -> Result<Vec<(String, f64)>>,
{
    if requested == 0 {
        return Err(Error::InvalidParameter(
            "top-k must be at least 1".to_string(),
        ));
    }
    let k = requested.min(classes.len() - 1);
    if k < requested {
        log::info!("top-k clamped from {requested} to {k} ({} classes)", classes.len());
    }
    let rows = classes
        .labels()
        .iter()
        .map(|label| Ok((label.clone(), rank(label, k)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(io::TopK { k, distance, rows })
}

/// Write a matrix and its top-k table in the selected format.
fn write_tables(
    out: &mut OutDir,
    format: OutputFormat,
    classes: &ClassSet,
    values: &[f64],
    topk: &io::TopK,
) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            out.write("matrix.csv", &io::render_matrix_csv(classes, values, topk.distance))?;
            out.write("topk.csv", &io::render_topk_csv(topk))?;
        }
        OutputFormat::Json => {
            out.write("matrix.json", &io::render_matrix_json(classes, values, topk.distance))?;
            out.write("topk.json", &io::render_topk_json(topk))?;
        }
    }
    Ok(())
}

/// Count misclassification on the validation split, either from external
/// predictions or by training the configured classifier family on the train
/// split.
fn count_on_validation(
    cli: &Cli,
    args: &SimArgs,
    dataset: &SplitDataset,
    out: &mut OutDir,
) -> Result<(ConfusionCounts, Option<TrainConfig>)> {
    let eval = &dataset.validation;
    if let Some(pred_path) = &args.predictions {
        if args.train_config.is_some() {
            log::warn!("--train-config is ignored when --predictions is given");
        }
        out.record_input(pred_path)?;
        let mode = match args.mode {
            SimMode::Pairwise => PredictionMode::Pairwise,
            SimMode::Ovr => PredictionMode::Ovr,
            SimMode::Multi => PredictionMode::Multi,
        };
        let table = io::read_predictions(pred_path, mode, eval)?;
        let counts = match args.mode {
            SimMode::Pairwise => counting::count_misclass_pairwise_all(eval, &table)?,
            SimMode::Ovr => counting::count_misclass_ovr(eval, &table)?,
            SimMode::Multi => counting::count_misclass_multi(eval, &table)?,
        };
        return Ok((counts, None));
    }

    let config = match &args.train_config {
        Some(path) => {
            out.record_input(path)?;
            load_train_config(path)?
        }
        None => default_train_config(cli),
    };
    let train = &dataset.train;
    let counts = match args.mode {
        SimMode::Ovr => {
            let models = classifier::train_ovr_suite(train, &config)?;
            let table = classifier::ovr_prediction_table(&models, eval)?;
            counting::count_misclass_ovr(eval, &table)?
        }
        SimMode::Multi => {
            let model = classifier::train_multi(train, &config)?;
            let table = classifier::predict(&model, eval)?;
            counting::count_misclass_multi(eval, &table)?
        }
        SimMode::Pairwise => {
            let models = classifier::train_pairwise_suite(train, &config)?;
            let table = classifier::pairwise_prediction_table(&models, eval)?;
            counting::count_misclass_pairwise_all(eval, &table)?
        }
    };
    Ok((counts, Some(config)))
}

fn sim(cli: &Cli, args: &SimArgs) -> Result<()> {
    let mut out = OutDir::acquire(&args.out_dir)?;
    out.record_input(&args.features)?;
    let dataset = io::read_features(&args.features, base_seed(cli))?;
    let (counts, config) = count_on_validation(cli, args, &dataset, &mut out)?;
    let matrix = similarity_matrix(&counts)?;
    let topk = build_topk(matrix.classes(), args.top_k, false, |label, k| {
        matrix.top_k(label, k)
    })?;
    write_tables(&mut out, cli.format, matrix.classes(), matrix.values(), &topk)?;
    let mode = match args.mode {
        SimMode::Pairwise => "pairwise",
        SimMode::Ovr => "ovr",
        SimMode::Multi => "multi",
    };
    out.finish(
        cli.seed,
        cli.format.as_str(),
        serde_json::json!({
            "subcommand": "sim",
            "mode": mode,
            "top_k": topk.k,
            "external_predictions": args.predictions.is_some(),
            "train_config": config,
        }),
    )
}

fn pd_cmd(cli: &Cli, args: &PdArgs) -> Result<()> {
    let mut out = OutDir::acquire(&args.out_dir)?;
    out.record_input(&args.features)?;
    let dataset = io::read_features(&args.features, base_seed(cli))?;
    let matrix = pd::pd_matrix(&dataset.train)?;
    let topk = build_topk(matrix.classes(), args.top_k, true, |label, k| {
        matrix.top_k(label, k)
    })?;
    write_tables(&mut out, cli.format, matrix.classes(), matrix.values(), &topk)?;
    out.finish(
        cli.seed,
        cli.format.as_str(),
        serde_json::json!({
            "subcommand": "pd",
            "top_k": topk.k,
        }),
    )
}

fn twolevel_build(cli: &Cli, args: &TwolevelBuildArgs) -> Result<()> {
    let mut out = OutDir::acquire(&args.out_dir)?;
    out.record_input(&args.features)?;
    out.record_input(&args.sim)?;
    let dataset = io::read_features(&args.features, base_seed(cli))?;
    let matrix: SimilarityMatrix = io::read_matrix_csv(&args.sim)?.into_similarity()?;
    if matrix.classes() != dataset.classes() {
        return Err(Error::ClassSetMismatch);
    }
    let sets = SimilarSets::select(&matrix, args.threshold)?;
    let config = default_train_config(cli);
    let second_train =
        LabeledFeatureSet::concat(&[&dataset.train, &dataset.validation], Split::Train)?;
    let model = TwoLevelModel::build(&dataset.train, &second_train, &sets, &config)?;
    log::info!(
        "{} of {} classes have second-level models",
        model.second_level_count(),
        matrix.classes().len()
    );
    model.save_dir(out.dir())?;
    out.record_output("twolevel.json")?;
    out.record_output_dir("models")?;
    out.finish(
        cli.seed,
        cli.format.as_str(),
        serde_json::json!({
            "subcommand": "twolevel build",
            "threshold": args.threshold,
            "second_level_models": model.second_level_count(),
            "train_config": config,
        }),
    )
}

fn twolevel_eval(cli: &Cli, args: &TwolevelEvalArgs) -> Result<()> {
    let model = TwoLevelModel::load_dir(&args.model_dir)?;
    let dataset = io::read_features(&args.features, base_seed(cli))?;
    if dataset.classes() != model.classes() {
        return Err(Error::ClassSetMismatch);
    }
    let test = &dataset.test;
    let baseline = evaluate(&model.baseline(), test)?;
    let twolevel = evaluate(&model, test)?;
    let reports = [("baseline", &baseline), ("twolevel", &twolevel)];
    let machine = match cli.format {
        OutputFormat::Csv => io::render_eval_csv(&reports),
        OutputFormat::Json => io::render_eval_json(&reports),
    };
    print!("{machine}\n{}", io::render_eval_text(&reports));
    Ok(())
}

/// Parse the scenario, applying the global seed override if one was given.
fn load_scenario(cli: &Cli, path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::File {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    let scenario = Scenario::from_toml(&text)?;
    Ok(match cli.seed {
        Some(seed) => scenario.with_seed(seed),
        None => scenario,
    })
}

fn oracle_run(cli: &Cli, args: &OracleRunArgs) -> Result<()> {
    let mut out = OutDir::acquire(&args.out_dir)?;
    out.record_input(&args.scenario)?;
    let scenario = load_scenario(cli, &args.scenario)?;
    let mode = match args.mode {
        OracleModeArg::Ideal => OracleMode::Ideal,
        OracleModeArg::Ovr => OracleMode::Ovr,
        OracleModeArg::Multi => OracleMode::Multi,
    };
    let config = default_train_config(cli);
    let report = classim::oracle::validate_classim(&scenario, mode, &config)?;
    log::info!(
        "max deviation {:.6}, within bounds: {}",
        report.max_deviation(),
        report.within_bounds()
    );
    match cli.format {
        OutputFormat::Csv => out.write("validation.csv", &io::render_validation_csv(&report))?,
        OutputFormat::Json => out.write("validation.json", &io::render_validation_json(&report))?,
    }
    out.finish(
        cli.seed,
        cli.format.as_str(),
        serde_json::json!({
            "subcommand": "oracle run",
            "mode": mode.as_str(),
            "scenario_seed": scenario.seed(),
            "train_config": config,
        }),
    )
}

fn oracle_sample(cli: &Cli, args: &OracleSampleArgs) -> Result<()> {
    let mut out = OutDir::acquire(&args.out_dir)?;
    out.record_input(&args.scenario)?;
    let scenario = load_scenario(cli, &args.scenario)?;
    let dataset = scenario.sample()?;
    io::write_features(&dataset, &out.dir().join("features.csv"))?;
    out.record_output("features.csv")?;
    out.finish(
        cli.seed,
        cli.format.as_str(),
        serde_json::json!({
            "subcommand": "oracle sample",
            "scenario_seed": scenario.seed(),
            "samples": dataset.train.len() + dataset.validation.len() + dataset.test.len(),
        }),
    )
}
