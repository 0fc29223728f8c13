use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::ArgMatches;
use hmrs_core::classifier::MlpModel;
use hmrs_core::eval::{plot_data_csv, run_experiment};
use hmrs_core::ingest::{segment_users, CATALOG_GENRES};
use hmrs_core::profiles::PopularGenre;
use hmrs_core::som::SomModel;
use hmrs_core::{
    load_dataset, Config, Dataset, EvaluationReport, Prediction, Ratings, Recommender, Segment,
    Variant,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{resolve_config, CliError, CliResult};

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

/// Trained models of one segment, as saved by `train`.
#[derive(Debug, Serialize, Deserialize)]
pub struct SegmentBundle {
    pub format_version: u32,
    pub segment: Segment,
    pub master_seed: u64,
    pub config: Value,
    pub cluster_sizes: Vec<usize>,
    pub som: Option<SomModel>,
    pub mlp: Option<MlpModel>,
}

fn load(config: &Config) -> CliResult<Dataset> {
    Ok(load_dataset(
        &config.ratings_path,
        &config.users_path,
        &config.movies_path,
    )?)
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Creates `<output.dir>/<command>-<timestamp>`, suffixed when taken.
fn run_dir(config: &Config, command: &str) -> CliResult<PathBuf> {
    let stamp = chrono::Local::now().format("%Y%m%d-%H%M%S");
    let base = config.output_dir.join(format!("{command}-{stamp}"));
    let mut dir = base.clone();
    let mut n = 1;
    while dir.exists() {
        dir = PathBuf::from(format!("{}-{n}", base.display()));
        n += 1;
    }
    fs::create_dir_all(&dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    write(&dir.join("config.json"), &config.to_json())?;
    Ok(dir)
}

fn config_value(config: &Config) -> Value {
    serde_json::to_value(config.to_flat()).expect("config serializes")
}

pub fn inspect(config: &Config) -> CliResult<()> {
    let data = load(config)?;
    println!("{}", data.stats);
    if data.stats.duplicate_ratings > 0 {
        println!(
            "duplicate ratings replaced: {}",
            data.stats.duplicate_ratings
        );
    }
    println!("segments ({:?} age banding):", config.age_banding);
    for segment in Segment::ALL {
        let users = segment_users(&data.users, segment, config.age_banding);
        let ratings = data
            .ratings
            .iter()
            .filter(|(u, _, _)| users.contains(u))
            .count();
        println!(
            "  {:<10} {:>5} users {:>7} ratings",
            segment.name(),
            users.len(),
            ratings
        );
    }
    println!("genre coverage (movies, ratings):");
    for (i, name) in CATALOG_GENRES.iter().enumerate() {
        let movies: BTreeSet<u32> = data
            .movies
            .movies()
            .iter()
            .filter(|m| m.genre_flags.contains(i))
            .map(|m| m.movie_id)
            .collect();
        let ratings: u32 = movies.iter().map(|&m| data.ratings.degree(m)).sum();
        let popular = PopularGenre::ALL.iter().any(|g| g.catalog_index() == i);
        println!(
            "  {:<12} {:>5} {:>7}{}",
            name,
            movies.len(),
            ratings,
            if popular { "  *" } else { "" }
        );
    }
    println!("(* = profile genre)");
    Ok(())
}

pub fn train(config: &Config) -> CliResult<()> {
    config.validate()?;
    let data = load(config)?;
    let catalog = Arc::new(data.movies.clone());
    let dir = run_dir(config, "train")?;
    for &segment in &config.segments {
        let users = segment_users(&data.users, segment, config.age_banding);
        let model = Recommender::train(
            &data.ratings,
            &users,
            catalog.clone(),
            config.engine_params(segment.name()),
        )?;
        let bundle = SegmentBundle {
            format_version: BUNDLE_FORMAT_VERSION,
            segment,
            master_seed: config.seed,
            config: config_value(config),
            cluster_sizes: model.cluster_sizes(),
            som: model.som().cloned(),
            mlp: model.mlp().cloned(),
        };
        let json = serde_json::to_string_pretty(&bundle).expect("bundle serializes");
        write(&dir.join(format!("{}.json", segment.name())), &json)?;
        let mut csv = Vec::new();
        model
            .profiles()
            .write_csv(&mut csv)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        write(
            &dir.join(format!("{}_genres.csv", segment.name())),
            &String::from_utf8(csv).expect("csv is utf-8"),
        )?;
        println!(
            "{:<10} {:>4} users  clusters {:?}",
            segment.name(),
            model.ratings().n_users(),
            model.cluster_sizes()
        );
    }
    println!("output: {}", dir.display());
    Ok(())
}

fn load_bundle(dir: &Path, segment: Segment) -> CliResult<SegmentBundle> {
    let path = dir.join(format!("{}.json", segment.name()));
    let bundle: SegmentBundle = serde_json::from_str(&read(&path)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if bundle.format_version != BUNDLE_FORMAT_VERSION {
        return Err(CliError::Data(format!(
            "{}: unsupported format version {}",
            path.display(),
            bundle.format_version
        )));
    }
    Ok(bundle)
}

#[derive(Serialize)]
struct Recommendation<'a> {
    rank: usize,
    movie_id: u32,
    title: &'a str,
    predicted: f64,
    provenance: hmrs_core::Provenance,
}

pub fn recommend(matches: &ArgMatches) -> CliResult<()> {
    let models = matches.get_one::<PathBuf>("models").expect("required");
    let saved = Config::from_json(&read(&models.join("config.json"))?)
        .map_err(|e| CliError::Data(format!("{}: {e}", models.join("config.json").display())))?;
    let mut config = resolve_config(matches, Some(saved))?;
    if let Some(k) = matches.get_one::<String>("k") {
        config.set("recommend.k", k)?;
    }
    config.validate()?;
    let user = *matches.get_one::<u32>("user").expect("required");

    let data = load(&config)?;
    let record = data.user(user).ok_or(hmrs_core::Error::UnknownUser(user))?;
    let segment = match matches.get_one::<String>("segment") {
        Some(name) => name.parse::<Segment>()?,
        None => *config
            .segments
            .iter()
            .find(|s| s.contains(record, config.age_banding))
            .ok_or_else(|| {
                CliError::Usage(format!("user {user} is in none of the trained segments"))
            })?,
    };
    let users = segment_users(&data.users, segment, config.age_banding);
    if !users.contains(&user) {
        return Err(CliError::Usage(format!(
            "user {user} is not in segment {segment}"
        )));
    }
    let bundle = load_bundle(models, segment)?;
    let model = Recommender::from_models(
        &data.ratings,
        &users,
        Arc::new(data.movies.clone()),
        config.engine_params(segment.name()),
        bundle.som,
        bundle.mlp,
    )?;
    let session = model.session(user)?;
    let top: Vec<Prediction> = session.recommend(config.top_k)?;

    println!(
        "user {user}  segment {segment}  cluster {}  neighbors {}",
        session.cluster(),
        session.neighbors().len()
    );
    if top.is_empty() {
        println!("user {user} has rated every movie in the catalog; nothing to recommend");
    }
    let rows: Vec<Recommendation> = top
        .iter()
        .enumerate()
        .map(|(i, p)| Recommendation {
            rank: i + 1,
            movie_id: p.movie,
            title: data.movies.get(p.movie).map_or("", |m| m.title.as_str()),
            predicted: p.value,
            provenance: p.provenance,
        })
        .collect();
    for r in &rows {
        println!(
            "{:>3}  {:>5}  {:<50}  {:.4}  {}",
            r.rank,
            r.movie_id,
            r.title,
            r.predicted,
            serde_json::to_value(r.provenance)
                .expect("enum")
                .as_str()
                .unwrap_or("")
        );
    }
    let dir = run_dir(&config, "recommend")?;
    let out = serde_json::json!({
        "user": user,
        "segment": segment,
        "cluster": session.cluster(),
        "master_seed": config.seed,
        "config": config_value(&config),
        "recommendations": rows,
    });
    write(
        &dir.join("recommendations.json"),
        &serde_json::to_string_pretty(&out).expect("serializes"),
    )?;
    println!("output: {}", dir.display());
    Ok(())
}

fn print_report(report: &EvaluationReport) {
    println!("{}", report.summary_text());
    let folds: Vec<String> = report
        .fold_filtered_mae
        .iter()
        .map(|v| format!("{v:.4}"))
        .collect();
    println!("filtered MAE per fold: {}", folds.join(" "));
    println!();
}

pub fn evaluate(matches: &ArgMatches) -> CliResult<()> {
    let mut config = resolve_config(matches, None)?;
    if let Some(v) = matches.get_one::<String>("variant") {
        config.set("eval.variant", v)?;
    }
    let baselines: Vec<Variant> = match matches.get_one::<String>("baselines") {
        Some(list) => list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<Variant>().map_err(CliError::from))
            .collect::<CliResult<_>>()?,
        None => Vec::new(),
    };
    config.validate()?;
    let data = load(&config)?;

    let mut reports = vec![run_experiment(&data, &config)?];
    for &variant in baselines.iter().filter(|&&v| v != config.variant) {
        let c = Config {
            variant,
            ..config.clone()
        };
        reports.push(run_experiment(&data, &c)?);
    }

    let dir = run_dir(&config, "evaluate")?;
    for (i, report) in reports.iter().enumerate() {
        print_report(report);
        let suffix = if i == 0 {
            String::new()
        } else {
            format!("_{}", report.variant)
        };
        write(&dir.join(format!("report{suffix}.json")), &report.to_json())?;
        write(
            &dir.join(format!("summary{suffix}.csv")),
            &report.summary_csv(),
        )?;
    }
    let refs: Vec<&EvaluationReport> = reports.iter().collect();
    write(&dir.join("plot_data.csv"), &plot_data_csv(&refs))?;
    if reports.len() > 1 {
        let primary = &reports[0];
        for other in &reports[1..] {
            let wins = primary
                .fold_filtered_mae
                .iter()
                .zip(&other.fold_filtered_mae)
                .filter(|(a, b)| a <= b)
                .count();
            println!(
                "{} <= {} on {wins} of {} folds (filtered MAE)",
                primary.variant, other.variant, primary.folds
            );
        }
    }
    println!("output: {}", dir.display());
    Ok(())
}
