//! User-based collaborative filtering with resource-allocation weighting.
//!
//! For an active user `u` and a neighbor `v`:
//!
//! ```text
//! sim(u, v)  = Σ_k (r_uk - μ_u)(r_vk - μ_v) / (sqrt(Σ_k (r_uk - μ_u)²) · sqrt(Σ_k (r_vk - μ_v)²))
//! ra(u, v)   = Σ_z 1 / k_z
//! pred(u, i) = μ_u + Σ_j (r_{v_j,i} - μ_{v_j}) · sim(u, v_j) · ra(u, v_j) / Σ_j |sim(u, v_j) · ra(u, v_j)|
//! ```
//!
//! `k` and `z` range over the movies both users rated, `μ` is a user's mean
//! over all of their ratings, and `k_z` is the number of users in the matrix
//! who rated `z`. The prediction sums over the selected neighbors that rated
//! `i`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{MovieId, MovieRecord, Ratings, UserId};
use crate::profiles::{GenreProfile, PopularGenre};

pub const MIN_RATING: f64 = 1.0;
pub const MAX_RATING: f64 = 5.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityKernel {
    /// Mean-centered correlation over co-rated movies.
    #[default]
    Pearson,
    /// Cosine of the raw co-rated rating vectors.
    Cosine,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    ResourceAllocation,
    /// Every neighbor weight is 1.
    Unit,
}

/// How many ranked candidates become neighbors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborRule {
    /// `ceil(|pool \ {active}| / 2)`.
    #[default]
    HalfOfPool,
    Fixed(usize),
    All,
}

impl NeighborRule {
    pub fn size(self, pool_without_active: usize) -> usize {
        match self {
            NeighborRule::HalfOfPool => pool_without_active.div_ceil(2),
            NeighborRule::Fixed(k) => k,
            NeighborRule::All => pool_without_active,
        }
    }
}

impl fmt::Display for NeighborRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NeighborRule::HalfOfPool => f.write_str("half"),
            NeighborRule::Fixed(k) => write!(f, "{k}"),
            NeighborRule::All => f.write_str("all"),
        }
    }
}

impl FromStr for NeighborRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half" => Ok(NeighborRule::HalfOfPool),
            "all" => Ok(NeighborRule::All),
            n => n
                .parse()
                .ok()
                .filter(|&k| k > 0)
                .map(NeighborRule::Fixed)
                .ok_or_else(|| {
                    Error::invalid(format!(
                        "neighbor rule must be \"half\", \"all\" or a positive count, got {s:?}"
                    ))
                }),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CfSettings {
    pub kernel: SimilarityKernel,
    pub weighting: Weighting,
    pub neighbors: NeighborRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScore {
    pub u: UserId,
    pub v: UserId,
    pub sim: f64,
    pub ra_weight: f64,
    pub co_rated_count: usize,
}

fn row_of<R: Ratings>(ratings: &R, user: UserId) -> Result<&[(MovieId, f64)]> {
    ratings.row(user).ok_or(Error::UnknownUser(user))
}

/// Walks the co-rated movies of two sorted rows.
fn co_rated<'a>(
    a: &'a [(MovieId, f64)],
    b: &'a [(MovieId, f64)],
) -> impl Iterator<Item = (MovieId, f64, f64)> + 'a {
    let (mut i, mut j) = (0, 0);
    std::iter::from_fn(move || {
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    let hit = (a[i].0, a[i].1, b[j].1);
                    i += 1;
                    j += 1;
                    return Some(hit);
                }
            }
        }
        None
    })
}

/// Similarity, RA weight and co-rated count in one pass over the two rows.
pub fn similarity<R: Ratings>(
    ratings: &R,
    u: UserId,
    v: UserId,
    kernel: SimilarityKernel,
) -> Result<SimilarityScore> {
    if u == v {
        return Err(Error::invalid(format!(
            "similarity of user {u} with itself"
        )));
    }
    let ru = row_of(ratings, u)?;
    let rv = row_of(ratings, v)?;
    let (mu, mv) = match kernel {
        SimilarityKernel::Pearson => (ratings.mean(u).unwrap(), ratings.mean(v).unwrap()),
        SimilarityKernel::Cosine => (0.0, 0.0),
    };
    let (mut dot, mut nu, mut nv, mut ra) = (0.0, 0.0, 0.0, 0.0);
    let mut count = 0;
    for (z, a, b) in co_rated(ru, rv) {
        let (da, db) = (a - mu, b - mv);
        dot += da * db;
        nu += da * da;
        nv += db * db;
        let k = ratings.degree(z);
        debug_assert!(k >= 2, "co-rated movie {z} has degree {k}");
        ra += 1.0 / f64::from(k);
        count += 1;
    }
    let sim = if count == 0 || nu == 0.0 || nv == 0.0 {
        0.0
    } else {
        (dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0)
    };
    Ok(SimilarityScore {
        u,
        v,
        sim,
        ra_weight: if count == 0 { 0.0 } else { ra },
        co_rated_count: count,
    })
}

/// Pearson correlation over co-rated movies with each user's overall mean.
/// Zero when nothing is co-rated or either deviation vector is zero.
pub fn pearson_sim<R: Ratings>(ratings: &R, u: UserId, v: UserId) -> Result<f64> {
    similarity(ratings, u, v, SimilarityKernel::Pearson).map(|s| s.sim)
}

pub fn cosine_sim<R: Ratings>(ratings: &R, u: UserId, v: UserId) -> Result<f64> {
    similarity(ratings, u, v, SimilarityKernel::Cosine).map(|s| s.sim)
}

/// Resource-allocation index: sum of `1 / k_z` over co-rated movies.
pub fn ra_weight<R: Ratings>(ratings: &R, u: UserId, v: UserId) -> Result<f64> {
    let ru = row_of(ratings, u)?;
    let rv = row_of(ratings, v)?;
    Ok(co_rated(ru, rv)
        .map(|(z, _, _)| 1.0 / f64::from(ratings.degree(z)))
        .sum())
}

/// Memoized symmetric similarity scores for one rating matrix and kernel.
///
/// The cache does not own the matrix; callers must always pass the same one.
/// Lookups take a shared lock and a miss computes outside any lock before
/// inserting under the write lock, so concurrent readers never block each
/// other.
#[derive(Debug, Default)]
pub struct SimilarityCache {
    kernel: SimilarityKernel,
    scores: RwLock<HashMap<(UserId, UserId), SimilarityScore>>,
}

impl SimilarityCache {
    pub fn new(kernel: SimilarityKernel) -> Self {
        SimilarityCache {
            kernel,
            scores: RwLock::default(),
        }
    }

    pub fn kernel(&self) -> SimilarityKernel {
        self.kernel
    }

    pub fn len(&self) -> usize {
        self.scores.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get<R: Ratings>(&self, ratings: &R, u: UserId, v: UserId) -> Result<SimilarityScore> {
        let key = (u.min(v), u.max(v));
        let cached = self.scores.read().unwrap().get(&key).copied();
        let score = match cached {
            Some(s) => s,
            None => {
                let s = similarity(ratings, key.0, key.1, self.kernel)?;
                self.scores.write().unwrap().entry(key).or_insert(s);
                s
            }
        };
        Ok(SimilarityScore { u, v, ..score })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub user: UserId,
    pub sim: f64,
    /// RA weight, or 1 under [`Weighting::Unit`].
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborSet {
    pub active_user: UserId,
    /// Sorted by similarity descending, ties by user id ascending.
    pub neighbors: Vec<Neighbor>,
    /// Target size before capping at the number of candidates.
    pub size: usize,
}

impl NeighborSet {
    pub fn empty(active_user: UserId) -> Self {
        NeighborSet {
            active_user,
            neighbors: Vec::new(),
            size: 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }
}

/// Ranks the pool members (other than the active user) that share at least
/// one rated movie with the active user and keeps the top `m`, where `m`
/// comes from the neighbor rule applied to the pool size.
pub fn select_neighbors<R: Ratings>(
    ratings: &R,
    pool: &[UserId],
    active: UserId,
    settings: CfSettings,
) -> Result<NeighborSet> {
    select_with(
        pool,
        active,
        settings,
        |v| similarity(ratings, active, v, settings.kernel),
        ratings.row(active).is_some(),
        |v| ratings.row(v).is_some(),
    )
}

/// [`select_neighbors`] reading scores through a cache built for `ratings`.
pub fn select_neighbors_cached<R: Ratings>(
    ratings: &R,
    cache: &SimilarityCache,
    pool: &[UserId],
    active: UserId,
    settings: CfSettings,
) -> Result<NeighborSet> {
    if cache.kernel() != settings.kernel {
        return Err(Error::invalid("cache kernel differs from settings"));
    }
    select_with(
        pool,
        active,
        settings,
        |v| cache.get(ratings, active, v),
        ratings.row(active).is_some(),
        |v| ratings.row(v).is_some(),
    )
}

fn select_with<S, H>(
    pool: &[UserId],
    active: UserId,
    settings: CfSettings,
    mut score: S,
    active_has_ratings: bool,
    has_ratings: H,
) -> Result<NeighborSet>
where
    S: FnMut(UserId) -> Result<SimilarityScore>,
    H: Fn(UserId) -> bool,
{
    let others = pool.iter().filter(|&&v| v != active).count();
    let size = settings.neighbors.size(others);
    if !active_has_ratings {
        return Ok(NeighborSet {
            size,
            ..NeighborSet::empty(active)
        });
    }
    let mut candidates = Vec::new();
    for &v in pool {
        if v == active || !has_ratings(v) {
            continue;
        }
        let s = score(v)?;
        if s.co_rated_count == 0 {
            continue;
        }
        let weight = match settings.weighting {
            Weighting::ResourceAllocation => s.ra_weight,
            Weighting::Unit => 1.0,
        };
        candidates.push(Neighbor {
            user: v,
            sim: s.sim,
            weight,
        });
    }
    candidates.sort_by(|a, b| b.sim.total_cmp(&a.sim).then(a.user.cmp(&b.user)));
    candidates.truncate(size);
    Ok(NeighborSet {
        active_user: active,
        neighbors: candidates,
        size,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Collaborative,
    ColdStartGenre,
    FallbackUserMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub user: UserId,
    pub movie: MovieId,
    /// Within `[1, 5]`.
    pub value: f64,
    pub provenance: Provenance,
}

pub fn clamp_rating(value: f64) -> f64 {
    value.clamp(MIN_RATING, MAX_RATING)
}

/// The unclamped neighborhood estimate, or `None` when the active user has
/// no ratings, no neighbor rated the movie, or all their weights vanish.
pub fn collaborative_estimate<R: Ratings>(
    ratings: &R,
    neighbors: &NeighborSet,
    movie: MovieId,
) -> Option<f64> {
    let mu = ratings.mean(neighbors.active_user)?;
    let (mut num, mut den) = (0.0, 0.0);
    for n in &neighbors.neighbors {
        let Some(r) = ratings.rating(n.user, movie) else {
            continue;
        };
        let mv = ratings.mean(n.user)?;
        let w = n.sim * n.weight;
        num += (r - mv) * w;
        den += w.abs();
    }
    (den > 0.0).then(|| mu + num / den)
}

/// Genre-based estimate for a movie the neighborhood cannot rate: the mean of
/// the user's averages over the movie's popular genres. Falls back to
/// `user_mean` when no such average exists.
pub fn cold_start_predict(
    profile: Option<&GenreProfile>,
    movie: &MovieRecord,
    user: UserId,
    user_mean: f64,
) -> Prediction {
    let averages: Vec<f64> = match profile {
        Some(p) => PopularGenre::of_movie(movie)
            .filter_map(|g| p.average(g))
            .collect(),
        None => Vec::new(),
    };
    let (value, provenance) = if averages.is_empty() {
        (user_mean, Provenance::FallbackUserMean)
    } else {
        (
            averages.iter().sum::<f64>() / averages.len() as f64,
            Provenance::ColdStartGenre,
        )
    };
    Prediction {
        user,
        movie: movie.movie_id,
        value: clamp_rating(value),
        provenance,
    }
}

/// Neighborhood prediction with the cold-start and user-mean fallbacks.
///
/// `default_mean` stands in for the user mean when the active user has no
/// ratings in `ratings`.
pub fn predict_rating<R: Ratings>(
    ratings: &R,
    neighbors: &NeighborSet,
    movie: &MovieRecord,
    profile: Option<&GenreProfile>,
    default_mean: f64,
) -> Prediction {
    let user = neighbors.active_user;
    if let Some(value) = collaborative_estimate(ratings, neighbors, movie.movie_id) {
        return Prediction {
            user,
            movie: movie.movie_id,
            value: clamp_rating(value),
            provenance: Provenance::Collaborative,
        };
    }
    let mean = ratings.mean(user).unwrap_or(default_mean);
    cold_start_predict(profile, movie, user, mean)
}

/// Best `k` predictions by value, ties by lower movie id.
pub fn top_k(mut predictions: Vec<Prediction>, k: usize) -> Result<Vec<Prediction>> {
    if k == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    predictions.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.movie.cmp(&b.movie)));
    predictions.truncate(k);
    Ok(predictions)
}
