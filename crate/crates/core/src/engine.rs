//! The assembled recommender for one user population (a demographic segment
//! or the whole catalog audience).
//!
//! Offline, [`Recommender::train`] restricts the training ratings to the
//! population, builds genre profiles, clusters them with a SOM and fits the
//! cluster classifier. Online, a [`Session`] classifies an active user,
//! selects neighbors inside the chosen cluster and predicts ratings.

use std::borrow::Cow;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cf::{
    predict_rating, select_neighbors, select_neighbors_cached, top_k, CfSettings, NeighborRule,
    NeighborSet, Prediction, SimilarityCache, SimilarityKernel, Weighting,
};
use crate::classifier::{mlp_train, MlpModel, MlpParams};
use crate::error::{Error, Result};
use crate::ingest::{Catalog, MovieId, RatingMatrix, Ratings, UserId, WithUser};
use crate::profiles::{build_genre_matrix, profile_from_row, GenreMatrix, GenreProfile};
use crate::som::{som_train, FeatureVector, SomModel, SomParams};

/// The full system and the comparison configurations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// SOM clusters, RA-weighted Pearson neighbors.
    #[default]
    Hmrs,
    /// Pearson k-NN over the whole population, unit weights.
    PearsonKnn,
    /// Cosine k-NN over the whole population, unit weights.
    CosineKnn,
    /// SOM clusters with unit weights.
    SomCfNoRa,
    /// RA-weighted Pearson over the whole population.
    RaNoSom,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Hmrs,
        Variant::PearsonKnn,
        Variant::CosineKnn,
        Variant::SomCfNoRa,
        Variant::RaNoSom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Hmrs => "hmrs",
            Variant::PearsonKnn => "pearson_knn",
            Variant::CosineKnn => "cosine_knn",
            Variant::SomCfNoRa => "som_cf_no_ra",
            Variant::RaNoSom => "ra_no_som",
        }
    }

    pub fn clustered(self) -> bool {
        matches!(self, Variant::Hmrs | Variant::SomCfNoRa)
    }

    pub fn cf_settings(self, neighbors: NeighborRule) -> CfSettings {
        let kernel = match self {
            Variant::CosineKnn => SimilarityKernel::Cosine,
            _ => SimilarityKernel::Pearson,
        };
        let weighting = match self {
            Variant::Hmrs | Variant::RaNoSom => Weighting::ResourceAllocation,
            _ => Weighting::Unit,
        };
        CfSettings {
            kernel,
            weighting,
            neighbors,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown variant {s:?}")))
    }
}

/// How an active user is mapped to a cluster.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterAssignment {
    #[default]
    Mlp,
    /// Nearest SOM prototype, skipping the classifier.
    Bmu,
}

/// Which matrix supplies the rater counts `k_z` of the RA weight.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeScope {
    #[default]
    Cluster,
    Segment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineParams {
    pub variant: Variant,
    pub som: SomParams,
    pub mlp: MlpParams,
    pub assignment: ClusterAssignment,
    pub neighbors: NeighborRule,
    pub degree_scope: DegreeScope,
}

impl Default for EngineParams {
    fn default() -> Self {
        EngineParams {
            variant: Variant::Hmrs,
            som: SomParams::default(),
            mlp: MlpParams::default(),
            assignment: ClusterAssignment::Mlp,
            neighbors: NeighborRule::HalfOfPool,
            degree_scope: DegreeScope::Cluster,
        }
    }
}

struct Cluster {
    members: Vec<UserId>,
    /// `None` when the population matrix is used.
    ratings: Option<RatingMatrix>,
    cache: SimilarityCache,
}

/// Trained recommender over one user population.
pub struct Recommender {
    catalog: Arc<Catalog>,
    ratings: RatingMatrix,
    profiles: GenreMatrix,
    som: Option<SomModel>,
    mlp: Option<MlpModel>,
    clusters: Vec<Cluster>,
    labels: HashMap<UserId, usize>,
    params: EngineParams,
    settings: CfSettings,
    global_mean: f64,
}

impl fmt::Debug for Recommender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Recommender")
            .field("variant", &self.params.variant)
            .field("users", &self.ratings.n_users())
            .field("ratings", &self.ratings.len())
            .field("cluster_sizes", &self.cluster_sizes())
            .finish()
    }
}

fn features_of(profiles: &GenreMatrix) -> Vec<FeatureVector> {
    profiles
        .profiles
        .iter()
        .map(|p| FeatureVector::new(p.user_id, p.features()))
        .collect()
}

impl Recommender {
    /// Trains on the ratings of `users` found in `train`. Users without
    /// training ratings take no part in clustering.
    pub fn train(
        train: &RatingMatrix,
        users: &BTreeSet<UserId>,
        catalog: Arc<Catalog>,
        params: EngineParams,
    ) -> Result<Self> {
        let ratings = train.restrict(users)?;
        if ratings.is_empty() {
            return Err(Error::Model("population has no training ratings".into()));
        }
        let (som, mlp) = if params.variant.clustered() {
            let profiles = build_genre_matrix(
                &ratings,
                &catalog,
                &ratings.users().iter().copied().collect(),
            );
            let features = features_of(&profiles);
            let som = som_train(&features, params.som)?;
            let mlp = match params.assignment {
                ClusterAssignment::Mlp => {
                    let xs: Vec<Vec<f64>> = features.iter().map(|f| f.values.clone()).collect();
                    let labels = features
                        .iter()
                        .map(|f| som.assign(&f.values))
                        .collect::<Result<Vec<_>>>()?;
                    Some(mlp_train(&xs, &labels, som.n_clusters(), params.mlp)?)
                }
                ClusterAssignment::Bmu => None,
            };
            (Some(som), mlp)
        } else {
            (None, None)
        };
        Self::assemble(ratings, catalog, params, som, mlp)
    }

    /// Rebuilds a recommender from previously trained models. Cluster
    /// membership is recomputed from the SOM.
    pub fn from_models(
        train: &RatingMatrix,
        users: &BTreeSet<UserId>,
        catalog: Arc<Catalog>,
        params: EngineParams,
        som: Option<SomModel>,
        mlp: Option<MlpModel>,
    ) -> Result<Self> {
        let ratings = train.restrict(users)?;
        if params.variant.clustered() && som.is_none() {
            return Err(Error::Model("clustered variant needs a SOM model".into()));
        }
        if params.assignment == ClusterAssignment::Mlp && som.is_some() && mlp.is_none() {
            return Err(Error::Model(
                "MLP assignment needs a classifier model".into(),
            ));
        }
        if let (Some(s), Some(m)) = (&som, &mlp) {
            if m.n_classes() != s.n_clusters() || m.input_dim() != s.dim() {
                return Err(Error::Model("SOM and classifier shapes disagree".into()));
            }
        }
        Self::assemble(ratings, catalog, params, som, mlp)
    }

    fn assemble(
        ratings: RatingMatrix,
        catalog: Arc<Catalog>,
        params: EngineParams,
        som: Option<SomModel>,
        mlp: Option<MlpModel>,
    ) -> Result<Self> {
        let everyone: BTreeSet<UserId> = ratings.users().iter().copied().collect();
        let profiles = build_genre_matrix(&ratings, &catalog, &everyone);
        let settings = params.variant.cf_settings(params.neighbors);
        let n_clusters = som.as_ref().map_or(1, SomModel::n_clusters);
        let mut labels = HashMap::new();
        let mut members = vec![Vec::new(); n_clusters];
        for p in &profiles.profiles {
            let c = match &som {
                Some(s) => s.assign(&p.features())?,
                None => 0,
            };
            labels.insert(p.user_id, c);
            members[c].push(p.user_id);
        }
        let own_matrix = som.is_some() && params.degree_scope == DegreeScope::Cluster;
        let clusters = members
            .into_iter()
            .map(|members| {
                let ratings = if own_matrix && !members.is_empty() {
                    Some(ratings.restrict(&members.iter().copied().collect())?)
                } else {
                    None
                };
                Ok(Cluster {
                    members,
                    ratings,
                    cache: SimilarityCache::new(settings.kernel),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let global_mean = ratings.global_mean().unwrap_or(3.0);
        Ok(Recommender {
            catalog,
            ratings,
            profiles,
            som,
            mlp,
            clusters,
            labels,
            params,
            settings,
            global_mean,
        })
    }

    pub fn params(&self) -> &EngineParams {
        &self.params
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    /// Training ratings of the population.
    pub fn ratings(&self) -> &RatingMatrix {
        &self.ratings
    }

    pub fn profiles(&self) -> &GenreMatrix {
        &self.profiles
    }

    pub fn som(&self) -> Option<&SomModel> {
        self.som.as_ref()
    }

    pub fn mlp(&self) -> Option<&MlpModel> {
        self.mlp.as_ref()
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.members.len()).collect()
    }

    /// Members of a cluster, ascending.
    pub fn cluster_members(&self, cluster: usize) -> Option<&[UserId]> {
        self.clusters.get(cluster).map(|c| c.members.as_slice())
    }

    /// The SOM cluster of a training user.
    pub fn label(&self, user: UserId) -> Option<usize> {
        self.labels.get(&user).copied()
    }

    /// Training matrices whose entries feed predictions: the population
    /// matrix and any per-cluster matrices.
    pub fn matrices(&self) -> impl Iterator<Item = &RatingMatrix> {
        std::iter::once(&self.ratings)
            .chain(self.clusters.iter().filter_map(|c| c.ratings.as_ref()))
    }

    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }

    /// Online cluster choice for a feature vector.
    pub fn classify(&self, features: &[f64]) -> Result<usize> {
        match (&self.som, &self.mlp, self.params.assignment) {
            (None, _, _) => Ok(0),
            (Some(_), Some(mlp), ClusterAssignment::Mlp) => Ok(mlp.classify(features)?.0),
            (Some(som), _, _) => som.assign(features),
        }
    }

    fn cluster_ratings(&self, cluster: usize) -> &RatingMatrix {
        self.clusters[cluster]
            .ratings
            .as_ref()
            .unwrap_or(&self.ratings)
    }

    /// Session for a user of the population, using their training ratings.
    /// A user with no training ratings gets an empty history.
    pub fn session(&self, user: UserId) -> Result<Session<'_>> {
        let row = self.ratings.row(user).unwrap_or(&[]);
        self.open(user, Cow::Borrowed(row))
    }

    /// Session for a user outside the population, described by their
    /// ratings as `(movie, rating)` pairs.
    pub fn session_with_ratings(
        &self,
        user: UserId,
        ratings: &[(MovieId, f64)],
    ) -> Result<Session<'_>> {
        if self.ratings.contains_user(user) {
            return Err(Error::invalid(format!(
                "user {user} is already part of the model; use its stored ratings"
            )));
        }
        let mut row = ratings.to_vec();
        row.sort_by_key(|&(m, _)| m);
        for pair in row.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::invalid(format!("movie {} rated twice", pair[0].0)));
            }
        }
        for &(m, r) in &row {
            if !self.catalog.contains(m) {
                return Err(Error::UnknownMovie(m));
            }
            if !(1.0..=5.0).contains(&r) {
                return Err(Error::invalid(format!(
                    "rating {r} for movie {m} outside [1, 5]"
                )));
            }
        }
        self.open(user, Cow::Owned(row))
    }

    fn open<'a>(&'a self, user: UserId, row: Cow<'a, [(MovieId, f64)]>) -> Result<Session<'a>> {
        let profile = profile_from_row(user, &row, &self.catalog);
        let cluster = self.classify(&profile.features())?;
        let base = self.cluster_ratings(cluster);
        let pool = &self.clusters[cluster].members;
        let neighbors = if base.row(user).is_some() {
            select_neighbors_cached(
                base,
                &self.clusters[cluster].cache,
                pool,
                user,
                self.settings,
            )?
        } else {
            select_neighbors(&WithUser::new(base, user, &row), pool, user, self.settings)?
        };
        Ok(Session {
            model: self,
            user,
            row,
            profile,
            cluster,
            neighbors,
        })
    }
}

/// An active user matched to a cluster, with neighbors selected.
pub struct Session<'a> {
    model: &'a Recommender,
    user: UserId,
    row: Cow<'a, [(MovieId, f64)]>,
    profile: GenreProfile,
    cluster: usize,
    neighbors: NeighborSet,
}

impl Session<'_> {
    pub fn user(&self) -> UserId {
        self.user
    }

    pub fn cluster(&self) -> usize {
        self.cluster
    }

    pub fn profile(&self) -> &GenreProfile {
        &self.profile
    }

    pub fn neighbors(&self) -> &NeighborSet {
        &self.neighbors
    }

    /// The user's known ratings, sorted by movie.
    pub fn history(&self) -> &[(MovieId, f64)] {
        &self.row
    }

    pub fn predict(&self, movie: MovieId) -> Result<Prediction> {
        let record = self
            .model
            .catalog
            .get(movie)
            .ok_or(Error::UnknownMovie(movie))?;
        let base = self.model.cluster_ratings(self.cluster);
        let view = WithUser::new(base, self.user, &self.row);
        Ok(predict_rating(
            &view,
            &self.neighbors,
            record,
            Some(&self.profile),
            self.model.global_mean,
        ))
    }

    pub fn predict_many(&self, movies: &[MovieId]) -> Result<Vec<Prediction>> {
        movies.iter().map(|&m| self.predict(m)).collect()
    }

    /// Predictions for every catalog movie the user has not rated.
    pub fn predict_unrated(&self) -> Result<Vec<Prediction>> {
        self.model
            .catalog
            .movies()
            .iter()
            .filter(|m| {
                self.row
                    .binary_search_by_key(&m.movie_id, |&(id, _)| id)
                    .is_err()
            })
            .map(|m| self.predict(m.movie_id))
            .collect()
    }

    /// Top `k` unrated movies. Empty when the user has rated everything.
    pub fn recommend(&self, k: usize) -> Result<Vec<Prediction>> {
        top_k(self.predict_unrated()?, k)
    }
}
