//! Cross-validated MAE evaluation.
//!
//! Rating records are split into folds. For every fold and repeat, one
//! recommender is trained per segment plus one over all users. Each test user
//! is then scored along the genre-case pipeline:
//!
//! 1. genre averages from the user's training ratings give the preferred
//!    genres (average at or above the threshold);
//! 2. the segment recommender's MAE on the user's test ratings in each
//!    preferred genre picks a best (lowest) and worst (highest) genre;
//! 3. the all-users recommender scores the same genre's test ratings (the
//!    movie case);
//! 4. genre-case MAE times movie-case MAE gives the combined figure.
//!
//! The report also carries the MAE over all preferred-genre test ratings
//! (filtered) and over every test rating (unfiltered).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cf::{Prediction, Provenance};
use crate::config::{derive_seed, Config};
use crate::engine::{Recommender, Variant};
use crate::error::{Error, Result};
use crate::ingest::{
    segment_users, Catalog, Dataset, MovieId, RatingMatrix, Ratings, Segment, UserId,
};
use crate::profiles::{preferred_genres, profile_from_row, PopularGenre};

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Published combined MAE per segment: (best, worst, overall).
pub const PUBLISHED_MAE: [(Segment, [f64; 3]); 4] = [
    (Segment::Male, [0.16043, 0.30656, 0.233495]),
    (Segment::Female, [0.23653, 0.45268, 0.344605]),
    (Segment::Age20To39, [0.16881, 0.29701, 0.23291]),
    (Segment::Age40To60, [0.23584, 0.44450, 0.34017]),
];

fn published_row(segment: Segment) -> Option<[f64; 3]> {
    PUBLISHED_MAE
        .iter()
        .find(|(s, _)| *s == segment)
        .map(|(_, v)| *v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestRating {
    pub user: UserId,
    pub movie: MovieId,
    pub rating: f64,
}

/// Assignment of every rating record, in [`RatingMatrix::iter`] order, to
/// one fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub seed: u64,
    pub n_folds: usize,
    pub assignment: Vec<usize>,
}

/// Uniform random partition of the rating records: a seeded shuffle dealt
/// round-robin, so fold sizes differ by at most one.
pub fn make_folds(matrix: &RatingMatrix, n_folds: usize, seed: u64) -> Result<FoldPlan> {
    if n_folds < 2 {
        return Err(Error::invalid("at least two folds are required"));
    }
    if n_folds > matrix.len() {
        return Err(Error::invalid(format!(
            "{n_folds} folds requested for {} ratings",
            matrix.len()
        )));
    }
    let mut order: Vec<usize> = (0..matrix.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignment = vec![0; matrix.len()];
    for (i, &record) in order.iter().enumerate() {
        assignment[record] = i % n_folds;
    }
    Ok(FoldPlan {
        seed,
        n_folds,
        assignment,
    })
}

impl FoldPlan {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_folds];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }

    /// Training matrix (all other folds) and test records of `fold`.
    pub fn split(
        &self,
        matrix: &RatingMatrix,
        fold: usize,
    ) -> Result<(RatingMatrix, Vec<TestRating>)> {
        if fold >= self.n_folds {
            return Err(Error::invalid(format!("fold {fold} out of range")));
        }
        if self.assignment.len() != matrix.len() {
            return Err(Error::invalid("fold plan was made for a different matrix"));
        }
        let train = matrix.select(|i, _, _| self.assignment[i] != fold);
        let test: Vec<TestRating> = matrix
            .iter()
            .zip(&self.assignment)
            .filter(|&(_, &f)| f == fold)
            .map(|((user, movie, rating), _)| TestRating {
                user,
                movie,
                rating,
            })
            .collect();
        if train.len() + test.len() != matrix.len() {
            return Err(Error::Leakage(format!("fold {fold} split lost records")));
        }
        Ok((train, test))
    }
}

/// Mean absolute error.
pub fn mae(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::DimensionMismatch {
            expected: actual.len(),
            actual: predicted.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::invalid("MAE of an empty list"));
    }
    let total: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a).abs())
        .sum();
    Ok(total / predicted.len() as f64)
}

pub fn combine_overall_mae(genre_case_mae: f64, movie_case_mae: f64) -> f64 {
    genre_case_mae * movie_case_mae
}

/// Per-genre MAEs of one user with the best and worst genres picked out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenreCase {
    /// In fixed genre order.
    pub per_genre: Vec<(PopularGenre, f64)>,
    pub best: PopularGenre,
    pub worst: PopularGenre,
}

impl GenreCase {
    pub fn mae_of(&self, genre: PopularGenre) -> Option<f64> {
        self.per_genre
            .iter()
            .find(|(g, _)| *g == genre)
            .map(|&(_, v)| v)
    }
}

/// Lowest MAE is the best case and highest the worst; ties go to the genre
/// listed first. `None` when no genre has a value.
pub fn genre_case_report(per_genre: &[(PopularGenre, f64)]) -> Option<GenreCase> {
    let mut per_genre = per_genre.to_vec();
    per_genre.sort_by_key(|&(g, _)| g.index());
    let (mut best, mut worst) = (*per_genre.first()?, *per_genre.first()?);
    for &(g, v) in &per_genre[1..] {
        if v < best.1 {
            best = (g, v);
        }
        if v > worst.1 {
            worst = (g, v);
        }
    }
    Some(GenreCase {
        per_genre,
        best: best.0,
        worst: worst.0,
    })
}

/// Anything that can score a user's ratings for a list of movies.
pub trait Predictor: Sync {
    fn predict_for(&self, user: UserId, movies: &[MovieId]) -> Result<Vec<Prediction>>;
}

impl Predictor for Recommender {
    fn predict_for(&self, user: UserId, movies: &[MovieId]) -> Result<Vec<Prediction>> {
        self.session(user)?.predict_many(movies)
    }
}

/// Fails if any test pair is present in a matrix a model was trained on.
pub fn audit_leakage(model: &Recommender, tests: &[TestRating]) -> Result<()> {
    for matrix in model.matrices() {
        if let Some(t) = tests
            .iter()
            .find(|t| matrix.rating(t.user, t.movie).is_some())
        {
            return Err(Error::Leakage(format!(
                "test rating ({}, {}) is in the training data",
                t.user, t.movie
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceCounts {
    pub collaborative: usize,
    pub cold_start_genre: usize,
    pub fallback_user_mean: usize,
}

impl ProvenanceCounts {
    fn add(&mut self, p: Provenance) {
        match p {
            Provenance::Collaborative => self.collaborative += 1,
            Provenance::ColdStartGenre => self.cold_start_genre += 1,
            Provenance::FallbackUserMean => self.fallback_user_mean += 1,
        }
    }

    fn merge(&mut self, other: &ProvenanceCounts) {
        self.collaborative += other.collaborative;
        self.cold_start_genre += other.cold_start_genre;
        self.fallback_user_mean += other.fallback_user_mean;
    }

    pub fn total(&self) -> usize {
        self.collaborative + self.cold_start_genre + self.fallback_user_mean
    }
}

/// A genre-case MAE, a movie-case MAE and their product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseRow {
    pub genre_case_mae: f64,
    pub movie_case_mae: f64,
    pub combined: f64,
}

impl CaseRow {
    pub fn new(genre_case_mae: f64, movie_case_mae: f64) -> Self {
        CaseRow {
            genre_case_mae,
            movie_case_mae,
            combined: combine_overall_mae(genre_case_mae, movie_case_mae),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Mean {
    sum: f64,
    n: usize,
}

impl Mean {
    fn push(&mut self, v: f64) {
        self.sum += v;
        self.n += 1;
    }

    fn value(self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            self.sum / self.n as f64
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct CaseAcc {
    genre: Mean,
    movie: Mean,
}

impl CaseAcc {
    fn push(&mut self, genre: f64, movie: f64) {
        self.genre.push(genre);
        self.movie.push(movie);
    }

    fn row(self) -> CaseRow {
        CaseRow::new(self.genre.value(), self.movie.value())
    }
}

/// Outcome of one population in one fold and repeat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationStats {
    pub users_evaluated: usize,
    pub users_skipped: usize,
    /// Means over evaluated users.
    pub best: CaseRow,
    pub worst: CaseRow,
    pub overall: CaseRow,
    /// MAE over every preferred-genre test rating of evaluated users.
    pub filtered_mae: f64,
    pub filtered_count: usize,
    /// MAE over every test rating of the population.
    pub unfiltered_mae: f64,
    pub unfiltered_count: usize,
    /// Mean over users of their MAE in each preferred genre.
    pub per_genre_mae: BTreeMap<PopularGenre, f64>,
    pub provenance: ProvenanceCounts,
}

fn abs_errors(preds: &[Prediction], actual: impl Iterator<Item = f64>) -> Vec<f64> {
    preds
        .iter()
        .zip(actual)
        .map(|(p, a)| (p.value - a).abs())
        .collect()
}

fn mean_of(errors: impl Iterator<Item = f64>) -> f64 {
    let mut m = Mean::default();
    errors.for_each(|e| m.push(e));
    m.value()
}

/// Scores the test ratings of `users` with `population` for the genre case
/// and `reference` for the movie case.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_population(
    train: &RatingMatrix,
    catalog: &Catalog,
    users: &BTreeSet<UserId>,
    tests_by_user: &BTreeMap<UserId, Vec<(MovieId, f64)>>,
    population: &dyn Predictor,
    reference: &dyn Predictor,
    threshold: f64,
) -> Result<PopulationStats> {
    let (mut best, mut worst, mut overall) =
        (CaseAcc::default(), CaseAcc::default(), CaseAcc::default());
    let (mut filtered, mut unfiltered) = (Mean::default(), Mean::default());
    let mut per_genre: BTreeMap<PopularGenre, Mean> = BTreeMap::new();
    let mut provenance = ProvenanceCounts::default();
    let (mut evaluated, mut skipped) = (0, 0);

    for (&user, tests) in tests_by_user.iter().filter(|(u, _)| users.contains(u)) {
        let movies: Vec<MovieId> = tests.iter().map(|&(m, _)| m).collect();
        let preds = population.predict_for(user, &movies)?;
        let errors = abs_errors(&preds, tests.iter().map(|&(_, r)| r));
        for (p, e) in preds.iter().zip(&errors) {
            provenance.add(p.provenance);
            unfiltered.push(*e);
        }

        let profile = profile_from_row(user, train.row(user).unwrap_or(&[]), catalog);
        let preferred = preferred_genres(&profile, threshold);
        // test positions per preferred genre; a movie counts for each of its genres
        let mut positions: BTreeMap<PopularGenre, Vec<usize>> = BTreeMap::new();
        let mut kept = Vec::new();
        for (i, &m) in movies.iter().enumerate() {
            let record = catalog.get(m).ok_or(Error::UnknownMovie(m))?;
            let mut any = false;
            for g in PopularGenre::of_movie(record).filter(|&g| preferred.contains(g)) {
                positions.entry(g).or_default().push(i);
                any = true;
            }
            if any {
                kept.push(i);
            }
        }

        let maes: Vec<(PopularGenre, f64)> = positions
            .iter()
            .map(|(&g, idx)| (g, mean_of(idx.iter().map(|&i| errors[i]))))
            .collect();
        let Some(case) = genre_case_report(&maes) else {
            skipped += 1;
            continue;
        };
        evaluated += 1;
        for &(g, v) in &case.per_genre {
            per_genre.entry(g).or_default().push(v);
        }

        let kept_movies: Vec<MovieId> = kept.iter().map(|&i| movies[i]).collect();
        let ref_preds = reference.predict_for(user, &kept_movies)?;
        let mut ref_error = vec![f64::NAN; movies.len()];
        for (&i, p) in kept.iter().zip(&ref_preds) {
            ref_error[i] = (p.value - tests[i].1).abs();
        }
        for &i in &kept {
            filtered.push(errors[i]);
        }

        let movie_case = |g: PopularGenre| mean_of(positions[&g].iter().map(|&i| ref_error[i]));
        best.push(
            case.mae_of(case.best).expect("best genre has a value"),
            movie_case(case.best),
        );
        worst.push(
            case.mae_of(case.worst).expect("worst genre has a value"),
            movie_case(case.worst),
        );
        overall.push(
            mean_of(kept.iter().map(|&i| errors[i])),
            mean_of(kept.iter().map(|&i| ref_error[i])),
        );
    }

    Ok(PopulationStats {
        users_evaluated: evaluated,
        users_skipped: skipped,
        best: best.row(),
        worst: worst.row(),
        overall: overall.row(),
        filtered_mae: filtered.value(),
        filtered_count: filtered.n,
        unfiltered_mae: unfiltered.value(),
        unfiltered_count: unfiltered.n,
        per_genre_mae: per_genre.into_iter().map(|(g, m)| (g, m.value())).collect(),
        provenance,
    })
}

/// One population in one fold and repeat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub fold: usize,
    pub repeat: usize,
    pub segment: Segment,
    pub som_seed: Option<u64>,
    pub cluster_sizes: Vec<usize>,
    pub stats: PopulationStats,
}

/// Summary of one segment, averaged over folds and repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub segment: Segment,
    pub label: String,
    pub best: CaseRow,
    pub worst: CaseRow,
    pub overall: CaseRow,
    /// `(best.combined + worst.combined) / 2`, the published overall row.
    pub best_worst_mean: f64,
    pub filtered_mae: f64,
    pub unfiltered_mae: f64,
    pub per_genre_mae: BTreeMap<PopularGenre, f64>,
    /// Totals over all runs.
    pub users_evaluated: usize,
    pub users_skipped: usize,
    pub provenance: ProvenanceCounts,
    /// Published (best, worst, overall) values for this segment.
    pub published: Option<[f64; 3]>,
}

impl SegmentReport {
    fn from_runs(segment: Segment, runs: &[&RunRecord]) -> Self {
        let avg = |f: &dyn Fn(&PopulationStats) -> f64| mean_of(runs.iter().map(|r| f(&r.stats)));
        let row = |f: &dyn Fn(&PopulationStats) -> CaseRow| {
            CaseRow::new(avg(&|s| f(s).genre_case_mae), avg(&|s| f(s).movie_case_mae))
        };
        let best = row(&|s| s.best);
        let worst = row(&|s| s.worst);
        let mut per_genre: BTreeMap<PopularGenre, Mean> = BTreeMap::new();
        let mut provenance = ProvenanceCounts::default();
        for r in runs {
            for (&g, &v) in &r.stats.per_genre_mae {
                per_genre.entry(g).or_default().push(v);
            }
            provenance.merge(&r.stats.provenance);
        }
        SegmentReport {
            segment,
            label: segment.label().to_string(),
            best,
            worst,
            overall: row(&|s| s.overall),
            best_worst_mean: (best.combined + worst.combined) / 2.0,
            filtered_mae: avg(&|s| s.filtered_mae),
            unfiltered_mae: avg(&|s| s.unfiltered_mae),
            per_genre_mae: per_genre.into_iter().map(|(g, m)| (g, m.value())).collect(),
            users_evaluated: runs.iter().map(|r| r.stats.users_evaluated).sum(),
            users_skipped: runs.iter().map(|r| r.stats.users_skipped).sum(),
            provenance,
            published: published_row(segment),
        }
    }

    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        [self.best, self.worst, self.overall]
            .into_iter()
            .flat_map(|r| [r.genre_case_mae, r.movie_case_mae, r.combined])
            .chain([self.best_worst_mean, self.filtered_mae, self.unfiltered_mae])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub format_version: u32,
    pub variant: Variant,
    pub master_seed: u64,
    pub folds: usize,
    pub repeats: usize,
    /// Repeats actually run: 1 for variants without random components.
    pub repeats_run: usize,
    pub fold_sizes: Vec<usize>,
    /// Effective configuration as flat dotted keys.
    pub config: BTreeMap<String, Value>,
    pub segments: Vec<SegmentReport>,
    /// Filtered MAE per fold, pooled over segments and repeats.
    pub fold_filtered_mae: Vec<f64>,
    pub fold_unfiltered_mae: Vec<f64>,
    pub runs: Vec<RunRecord>,
}

impl EvaluationReport {
    pub fn segment(&self, segment: Segment) -> Option<&SegmentReport> {
        self.segments.iter().find(|s| s.segment == segment)
    }

    /// Every reported figure is a finite number and every segment evaluated
    /// at least one user.
    pub fn is_complete(&self) -> bool {
        !self.segments.is_empty()
            && self
                .segments
                .iter()
                .all(|s| s.users_evaluated > 0 && s.values().all(f64::is_finite))
            && self
                .fold_filtered_mae
                .iter()
                .chain(&self.fold_unfiltered_mae)
                .all(|v| v.is_finite())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: EvaluationReport =
            serde_json::from_str(text).map_err(|e| Error::Model(format!("report: {e}")))?;
        if report.format_version != REPORT_FORMAT_VERSION {
            return Err(Error::Model(format!(
                "report format version {} is not supported",
                report.format_version
            )));
        }
        Ok(report)
    }

    /// Rows of `segment,case,genre_case_mae,movie_case_mae,combined,published_mae`.
    pub fn summary_csv(&self) -> String {
        let mut out =
            String::from("segment,case,genre_case_mae,movie_case_mae,combined,published_mae\n");
        for s in &self.segments {
            let published = |i: usize| s.published.map_or(String::new(), |p| p[i].to_string());
            for (i, (case, row)) in [("best", s.best), ("worst", s.worst), ("overall", s.overall)]
                .into_iter()
                .enumerate()
            {
                let published = if case == "overall" {
                    String::new()
                } else {
                    published(i)
                };
                let _ = writeln!(
                    out,
                    "{},{case},{},{},{},{published}",
                    s.segment, row.genre_case_mae, row.movie_case_mae, row.combined
                );
            }
            let _ = writeln!(
                out,
                "{},best_worst_mean,,,{},{}",
                s.segment,
                s.best_worst_mean,
                published(2)
            );
        }
        out
    }

    /// Measured combined MAEs next to the published ones.
    pub fn summary_text(&self) -> String {
        let mut out = format!("{:<18}", format!("{}", self.variant));
        for s in &self.segments {
            let _ = write!(out, "{:>30}", s.label);
        }
        out.push('\n');
        type Row = (&'static str, fn(&SegmentReport) -> f64, usize);
        let rows: [Row; 4] = [
            ("Best case", |s| s.best.combined, 0),
            ("Worst case", |s| s.worst.combined, 1),
            ("Overall (mean)", |s| s.best_worst_mean, 2),
            ("Overall (product)", |s| s.overall.combined, 3),
        ];
        for (name, value, i) in rows {
            let _ = write!(out, "{name:<18}");
            for s in &self.segments {
                let published = s
                    .published
                    .filter(|_| i < 3)
                    .map_or("      -".to_string(), |p| format!("{:>7.5}", p[i]));
                let _ = write!(
                    out,
                    "{:>30}",
                    format!("{:.5} (published {published})", value(s))
                );
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<18}", "Filtered MAE");
        for s in &self.segments {
            let _ = write!(out, "{:>30}", format!("{:.5}", s.filtered_mae));
        }
        out.push('\n');
        let _ = write!(out, "{:<18}", "Unfiltered MAE");
        for s in &self.segments {
            let _ = write!(out, "{:>30}", format!("{:.5}", s.unfiltered_mae));
        }
        out.push('\n');
        out
    }
}

/// Per-method, per-segment MAE series for plotting:
/// `variant,segment,metric,value`.
pub fn plot_data_csv(reports: &[&EvaluationReport]) -> String {
    let mut out = String::from("variant,segment,metric,value\n");
    for r in reports {
        for s in &r.segments {
            for (metric, value) in [
                ("best_combined", s.best.combined),
                ("worst_combined", s.worst.combined),
                ("overall_combined", s.overall.combined),
                ("best_worst_mean", s.best_worst_mean),
                ("filtered_mae", s.filtered_mae),
                ("unfiltered_mae", s.unfiltered_mae),
            ] {
                let _ = writeln!(out, "{},{},{metric},{value}", r.variant, s.segment);
            }
        }
    }
    out
}

fn group_by_user(tests: &[TestRating]) -> BTreeMap<UserId, Vec<(MovieId, f64)>> {
    let mut by_user: BTreeMap<UserId, Vec<(MovieId, f64)>> = BTreeMap::new();
    for t in tests {
        by_user.entry(t.user).or_default().push((t.movie, t.rating));
    }
    by_user
}

struct FoldData {
    train: RatingMatrix,
    tests: Vec<TestRating>,
    by_user: BTreeMap<UserId, Vec<(MovieId, f64)>>,
}

/// Runs the protocol with the variant named in `config`.
pub fn run_experiment(dataset: &Dataset, config: &Config) -> Result<EvaluationReport> {
    config.validate()?;
    let plan = make_folds(
        &dataset.ratings,
        config.folds,
        derive_seed(config.seed, "folds"),
    )?;
    let folds: Vec<FoldData> = (0..config.folds)
        .map(|f| {
            let (train, tests) = plan.split(&dataset.ratings, f)?;
            let by_user = group_by_user(&tests);
            Ok(FoldData {
                train,
                tests,
                by_user,
            })
        })
        .collect::<Result<_>>()?;

    let catalog = Arc::new(dataset.movies.clone());
    let everyone: BTreeSet<UserId> = dataset.users.iter().map(|u| u.user_id).collect();
    let populations: Vec<(Segment, BTreeSet<UserId>)> = config
        .segments
        .iter()
        .map(|&s| (s, segment_users(&dataset.users, s, config.age_banding)))
        .collect();
    let repeats_run = if config.variant.clustered() {
        config.repeats
    } else {
        1
    };
    let tasks: Vec<(usize, usize)> = (0..config.folds)
        .flat_map(|f| (0..repeats_run).map(move |r| (f, r)))
        .collect();

    let per_task: Vec<Vec<RunRecord>> = tasks
        .par_iter()
        .map(|&(fold, repeat)| {
            let data = &folds[fold];
            let tag = |name: &str| format!("{name}/fold{fold}/repeat{repeat}");
            let reference = Recommender::train(
                &data.train,
                &everyone,
                catalog.clone(),
                config.engine_params(&tag("all")),
            )?;
            if config.audit_leakage {
                audit_leakage(&reference, &data.tests)?;
            }
            populations
                .par_iter()
                .map(|(segment, users)| {
                    let params = config.engine_params(&tag(segment.name()));
                    let model = Recommender::train(&data.train, users, catalog.clone(), params)?;
                    if config.audit_leakage {
                        audit_leakage(&model, &data.tests)?;
                    }
                    let stats = evaluate_population(
                        &data.train,
                        &catalog,
                        users,
                        &data.by_user,
                        &model,
                        &reference,
                        config.preference_threshold,
                    )?;
                    log::info!(
                        "{} fold {fold} repeat {repeat} {segment}: filtered MAE {:.4}",
                        config.variant,
                        stats.filtered_mae
                    );
                    Ok(RunRecord {
                        fold,
                        repeat,
                        segment: *segment,
                        som_seed: model.som().map(|s| s.params.seed),
                        cluster_sizes: model.cluster_sizes(),
                        stats,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let runs: Vec<RunRecord> = per_task.into_iter().flatten().collect();

    let segments = populations
        .iter()
        .map(|(segment, _)| {
            let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.segment == *segment).collect();
            SegmentReport::from_runs(*segment, &mine)
        })
        .collect();
    let pooled = |fold: usize, pick: fn(&PopulationStats) -> (f64, usize)| {
        let (mut sum, mut n) = (0.0, 0);
        for r in runs.iter().filter(|r| r.fold == fold) {
            let (mae, count) = pick(&r.stats);
            if count > 0 {
                sum += mae * count as f64;
                n += count;
            }
        }
        if n == 0 {
            f64::NAN
        } else {
            sum / n as f64
        }
    };
    let fold_filtered_mae = (0..config.folds)
        .map(|f| pooled(f, |s| (s.filtered_mae, s.filtered_count)))
        .collect();
    let fold_unfiltered_mae = (0..config.folds)
        .map(|f| pooled(f, |s| (s.unfiltered_mae, s.unfiltered_count)))
        .collect();

    Ok(EvaluationReport {
        format_version: REPORT_FORMAT_VERSION,
        variant: config.variant,
        master_seed: config.seed,
        folds: config.folds,
        repeats: config.repeats,
        repeats_run,
        fold_sizes: plan.sizes(),
        config: config
            .to_flat()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        segments,
        fold_filtered_mae,
        fold_unfiltered_mae,
        runs,
    })
}

/// [`run_experiment`] with the variant replaced.
pub fn run_baseline(
    dataset: &Dataset,
    config: &Config,
    variant: Variant,
) -> Result<EvaluationReport> {
    let config = Config {
        variant,
        ..config.clone()
    };
    run_experiment(dataset, &config)
}
