//! Run configuration.
//!
//! On disk a config is a flat JSON object keyed by dotted names such as
//! `"som.epochs"`; the same names are accepted as command-line flags. Missing
//! keys take their defaults, and every artifact written by a run embeds the
//! fully resolved config.
//!
//! Component seeds are derived from the master seed: the first eight bytes
//! (little endian) of `SHA-256(master_seed as u64 LE || component name)`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::cf::NeighborRule;
use crate::classifier::MlpParams;
use crate::engine::{ClusterAssignment, DegreeScope, EngineParams, Variant};
use crate::error::{Error, Result};
use crate::ingest::{AgeBanding, Segment};
use crate::som::SomParams;

pub fn derive_seed(master: u64, component: &str) -> u64 {
    let digest = Sha256::new()
        .chain_update(master.to_le_bytes())
        .chain_update(component.as_bytes())
        .finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub ratings_path: PathBuf,
    pub users_path: PathBuf,
    pub movies_path: PathBuf,
    pub segments: Vec<Segment>,
    pub age_banding: AgeBanding,
    pub n_clusters: usize,
    pub som_epochs: usize,
    pub som_learning_rate: f64,
    /// `None` means half the cluster count.
    pub som_radius: Option<f64>,
    pub mlp_hidden: usize,
    pub mlp_epochs: usize,
    pub mlp_learning_rate: f64,
    pub assignment: ClusterAssignment,
    pub preference_threshold: f64,
    pub neighbors: NeighborRule,
    pub degree_scope: DegreeScope,
    pub top_k: usize,
    pub folds: usize,
    pub repeats: usize,
    pub variant: Variant,
    pub audit_leakage: bool,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            ratings_path: "data/ml-100k/u.data".into(),
            users_path: "data/ml-100k/u.user".into(),
            movies_path: "data/ml-100k/u.item".into(),
            segments: Segment::ALL.to_vec(),
            age_banding: AgeBanding::Clamp,
            n_clusters: 2,
            som_epochs: 50,
            som_learning_rate: 0.5,
            som_radius: None,
            mlp_hidden: 10,
            mlp_epochs: 200,
            mlp_learning_rate: 0.1,
            assignment: ClusterAssignment::Mlp,
            preference_threshold: 4.0,
            neighbors: NeighborRule::HalfOfPool,
            degree_scope: DegreeScope::Cluster,
            top_k: 10,
            folds: 5,
            repeats: 10,
            variant: Variant::Hmrs,
            audit_leakage: true,
            seed: 42,
            output_dir: "runs".into(),
        }
    }
}

/// A documented configuration key.
#[derive(Debug, Clone, Copy)]
pub struct KeyDoc {
    pub key: &'static str,
    pub help: &'static str,
}

pub const KEYS: &[KeyDoc] = &[
    KeyDoc {
        key: "data.ratings",
        help: "ratings file (tab-separated)",
    },
    KeyDoc {
        key: "data.users",
        help: "users file (pipe-separated)",
    },
    KeyDoc {
        key: "data.movies",
        help: "movies file (pipe-separated)",
    },
    KeyDoc {
        key: "segments",
        help: "comma list of male,female,age_20_39,age_40_60",
    },
    KeyDoc {
        key: "age_banding",
        help: "clamp (every user gets a band) or strict (20-39 / 40-60 only)",
    },
    KeyDoc {
        key: "som.clusters",
        help: "number of SOM clusters N (>= 1)",
    },
    KeyDoc {
        key: "som.epochs",
        help: "SOM training epochs (>= 1)",
    },
    KeyDoc {
        key: "som.learning_rate",
        help: "initial SOM learning rate (0, 1]",
    },
    KeyDoc {
        key: "som.radius",
        help: "initial neighborhood radius, or \"auto\" for N/2",
    },
    KeyDoc {
        key: "mlp.hidden",
        help: "hidden units of the cluster classifier (>= 1)",
    },
    KeyDoc {
        key: "mlp.epochs",
        help: "classifier SGD epochs (>= 1)",
    },
    KeyDoc {
        key: "mlp.learning_rate",
        help: "classifier SGD learning rate (> 0)",
    },
    KeyDoc {
        key: "cluster.assignment",
        help: "mlp, or bmu to assign by nearest SOM prototype",
    },
    KeyDoc {
        key: "profile.threshold",
        help: "preferred-genre threshold in [1, 5], inclusive",
    },
    KeyDoc {
        key: "cf.neighbors",
        help: "half, all, or a fixed neighbor count",
    },
    KeyDoc {
        key: "cf.degree_scope",
        help: "rater degrees from the cluster or the whole segment",
    },
    KeyDoc {
        key: "recommend.k",
        help: "number of recommendations (>= 1)",
    },
    KeyDoc {
        key: "eval.folds",
        help: "cross-validation folds (>= 2)",
    },
    KeyDoc {
        key: "eval.repeats",
        help: "repeats per fold with fresh SOM/MLP seeds (>= 1)",
    },
    KeyDoc {
        key: "eval.variant",
        help: "hmrs, pearson_knn, cosine_knn, som_cf_no_ra or ra_no_som",
    },
    KeyDoc {
        key: "eval.audit_leakage",
        help: "check every fold for train/test leakage",
    },
    KeyDoc {
        key: "seed",
        help: "master seed",
    },
    KeyDoc {
        key: "output.dir",
        help: "directory for run outputs",
    },
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn enum_value<T: for<'de> Deserialize<'de>>(key: &str, value: &str) -> Result<T> {
    serde_json::from_value(Value::String(value.trim().to_string()))
        .map_err(|_| Error::Config(format!("{key}: unknown value {value:?}")))
}

fn enum_name<T: Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(Value::String(s)) => s,
        other => panic!("enum did not serialize to a string: {other:?}"),
    }
}

impl Config {
    /// Sets one dotted key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "data.ratings" => self.ratings_path = value.into(),
            "data.users" => self.users_path = value.into(),
            "data.movies" => self.movies_path = value.into(),
            "segments" => {
                self.segments = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse()
                            .map_err(|e: Error| Error::Config(format!("segments: {e}")))
                    })
                    .collect::<Result<_>>()?;
            }
            "age_banding" => self.age_banding = enum_value(key, value)?,
            "som.clusters" => self.n_clusters = parse(key, value)?,
            "som.epochs" => self.som_epochs = parse(key, value)?,
            "som.learning_rate" => self.som_learning_rate = parse(key, value)?,
            "som.radius" => {
                self.som_radius = match value.trim() {
                    "auto" | "" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "mlp.hidden" => self.mlp_hidden = parse(key, value)?,
            "mlp.epochs" => self.mlp_epochs = parse(key, value)?,
            "mlp.learning_rate" => self.mlp_learning_rate = parse(key, value)?,
            "cluster.assignment" => self.assignment = enum_value(key, value)?,
            "profile.threshold" => self.preference_threshold = parse(key, value)?,
            "cf.neighbors" => {
                self.neighbors = value
                    .trim()
                    .parse()
                    .map_err(|e: Error| Error::Config(format!("cf.neighbors: {e}")))?
            }
            "cf.degree_scope" => self.degree_scope = enum_value(key, value)?,
            "recommend.k" => self.top_k = parse(key, value)?,
            "eval.folds" => self.folds = parse(key, value)?,
            "eval.repeats" => self.repeats = parse(key, value)?,
            "eval.variant" => self.variant = enum_value(key, value)?,
            "eval.audit_leakage" => self.audit_leakage = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "output.dir" => self.output_dir = value.into(),
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// The value of every key, as written to config files.
    pub fn to_flat(&self) -> BTreeMap<&'static str, Value> {
        let path = |p: &PathBuf| Value::String(p.to_string_lossy().into_owned());
        let segments: Vec<&str> = self.segments.iter().map(|s| s.name()).collect();
        let mut m = BTreeMap::new();
        m.insert("data.ratings", path(&self.ratings_path));
        m.insert("data.users", path(&self.users_path));
        m.insert("data.movies", path(&self.movies_path));
        m.insert("segments", Value::String(segments.join(",")));
        m.insert("age_banding", Value::String(enum_name(&self.age_banding)));
        m.insert("som.clusters", self.n_clusters.into());
        m.insert("som.epochs", self.som_epochs.into());
        m.insert("som.learning_rate", self.som_learning_rate.into());
        m.insert(
            "som.radius",
            self.som_radius
                .map_or(Value::String("auto".into()), Value::from),
        );
        m.insert("mlp.hidden", self.mlp_hidden.into());
        m.insert("mlp.epochs", self.mlp_epochs.into());
        m.insert("mlp.learning_rate", self.mlp_learning_rate.into());
        m.insert(
            "cluster.assignment",
            Value::String(enum_name(&self.assignment)),
        );
        m.insert("profile.threshold", self.preference_threshold.into());
        m.insert("cf.neighbors", Value::String(self.neighbors.to_string()));
        m.insert(
            "cf.degree_scope",
            Value::String(enum_name(&self.degree_scope)),
        );
        m.insert("recommend.k", self.top_k.into());
        m.insert("eval.folds", self.folds.into());
        m.insert("eval.repeats", self.repeats.into());
        m.insert("eval.variant", Value::String(enum_name(&self.variant)));
        m.insert("eval.audit_leakage", self.audit_leakage.into());
        m.insert("seed", self.seed.into());
        m.insert("output.dir", path(&self.output_dir));
        m
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_flat()).expect("config serializes")
    }

    /// Reads a flat dotted-key JSON object on top of the defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut config = Config::default();
        config.merge_json(text)?;
        Ok(config)
    }

    pub fn merge_json(&mut self, text: &str) -> Result<()> {
        let map: BTreeMap<String, Value> =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))?;
        for (key, value) in map {
            let text = match value {
                Value::String(s) => s,
                Value::Number(n) => n.to_string(),
                Value::Bool(b) => b.to_string(),
                Value::Array(items) => items
                    .iter()
                    .map(|v| {
                        v.as_str()
                            .map(str::to_string)
                            .unwrap_or_else(|| v.to_string())
                    })
                    .collect::<Vec<_>>()
                    .join(","),
                Value::Null => continue,
                Value::Object(_) => {
                    return Err(Error::Config(format!("{key}: nested objects not allowed")))
                }
            };
            self.set(&key, &text)?;
        }
        Ok(())
    }

    /// Engine parameters for one trained component. The SOM and MLP seeds
    /// are derived from `som/<component>` and `mlp/<component>`.
    pub fn engine_params(&self, component: &str) -> EngineParams {
        EngineParams {
            variant: self.variant,
            som: SomParams {
                n_clusters: self.n_clusters,
                epochs: self.som_epochs,
                learning_rate: self.som_learning_rate,
                radius: self.som_radius,
                seed: derive_seed(self.seed, &format!("som/{component}")),
            },
            mlp: MlpParams {
                hidden: self.mlp_hidden,
                epochs: self.mlp_epochs,
                learning_rate: self.mlp_learning_rate,
                seed: derive_seed(self.seed, &format!("mlp/{component}")),
            },
            assignment: self.assignment,
            neighbors: self.neighbors,
            degree_scope: self.degree_scope,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.segments.is_empty() {
            return fail("segments: at least one segment required".into());
        }
        if self.n_clusters == 0 {
            return fail("som.clusters must be at least 1".into());
        }
        if self.som_epochs == 0 || self.mlp_epochs == 0 {
            return fail("som.epochs and mlp.epochs must be at least 1".into());
        }
        if !(self.som_learning_rate > 0.0 && self.som_learning_rate <= 1.0) {
            return fail(format!(
                "som.learning_rate {} outside (0, 1]",
                self.som_learning_rate
            ));
        }
        if let Some(r) = self.som_radius {
            if !(r.is_finite() && r >= 0.0) {
                return fail(format!("som.radius {r} must be a non-negative number"));
            }
        }
        if self.mlp_hidden == 0 {
            return fail("mlp.hidden must be at least 1".into());
        }
        if !(self.mlp_learning_rate > 0.0 && self.mlp_learning_rate.is_finite()) {
            return fail(format!(
                "mlp.learning_rate {} must be positive",
                self.mlp_learning_rate
            ));
        }
        if !(1.0..=5.0).contains(&self.preference_threshold) {
            return fail(format!(
                "profile.threshold {} outside [1, 5]",
                self.preference_threshold
            ));
        }
        if self.top_k == 0 {
            return fail("recommend.k must be at least 1".into());
        }
        if self.folds < 2 {
            return fail("eval.folds must be at least 2".into());
        }
        if self.repeats == 0 {
            return fail("eval.repeats must be at least 1".into());
        }
        Ok(())
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_json())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        Config::default().validate().unwrap();
    }

    #[test]
    fn json_round_trip() {
        let mut c = Config::default();
        c.set("som.radius", "0.75").unwrap();
        c.set("segments", "female,age_40_60").unwrap();
        c.set("cf.neighbors", "25").unwrap();
        c.set("eval.variant", "som_cf_no_ra").unwrap();
        let back = Config::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn every_key_is_settable_and_exported() {
        let c = Config::default();
        let flat = c.to_flat();
        assert_eq!(flat.len(), KEYS.len());
        for doc in KEYS {
            let v = &flat[doc.key];
            let text = v
                .as_str()
                .map(str::to_string)
                .unwrap_or_else(|| v.to_string());
            let mut d = Config::default();
            d.set(doc.key, &text).unwrap();
            assert_eq!(d, c, "{}", doc.key);
        }
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = Config::default();
        assert!(c.set("nope", "1").is_err());
        assert!(c.set("som.epochs", "-3").is_err());
        assert!(c.set("eval.variant", "magic").is_err());
        assert!(c.set("segments", "teen").is_err());
        c.set("profile.threshold", "6").unwrap();
        assert!(c.validate().is_err());
        let c = Config {
            folds: 1,
            ..Config::default()
        };
        assert!(c.validate().is_err());
        assert!(Config::from_json(r#"{"som": {"epochs": 3}}"#).is_err());
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = Config::from_json(r#"{"som.epochs": 7, "eval.audit_leakage": false}"#).unwrap();
        assert_eq!(c.som_epochs, 7);
        assert!(!c.audit_leakage);
        assert_eq!(c.mlp_epochs, 200);
    }

    #[test]
    fn seeds_are_stable_and_distinct() {
        assert_eq!(derive_seed(42, "som"), derive_seed(42, "som"));
        assert_ne!(derive_seed(42, "som"), derive_seed(42, "mlp"));
        assert_ne!(derive_seed(42, "som"), derive_seed(43, "som"));
    }
}
