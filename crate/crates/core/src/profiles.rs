//! Per-user average ratings over the five popular genres, and preferred-genre
//! detection for the content-based path.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Catalog, GenreFlags, MovieId, MovieRecord, Ratings, UserId};

pub const DEFAULT_PREFERENCE_THRESHOLD: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PopularGenre {
    Action,
    Adventure,
    Comedy,
    Drama,
    Romance,
}

impl PopularGenre {
    /// Fixed order used for profile vectors, serialization and tie-breaking.
    pub const ALL: [PopularGenre; 5] = [
        PopularGenre::Action,
        PopularGenre::Adventure,
        PopularGenre::Comedy,
        PopularGenre::Drama,
        PopularGenre::Romance,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Column of this genre in the catalog's genre flags.
    pub fn catalog_index(self) -> usize {
        match self {
            PopularGenre::Action => 1,
            PopularGenre::Adventure => 2,
            PopularGenre::Comedy => 5,
            PopularGenre::Drama => 8,
            PopularGenre::Romance => 14,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PopularGenre::Action => "Action",
            PopularGenre::Adventure => "Adventure",
            PopularGenre::Comedy => "Comedy",
            PopularGenre::Drama => "Drama",
            PopularGenre::Romance => "Romance",
        }
    }

    /// Popular genres flagged on a movie, in fixed order.
    pub fn of_flags(flags: GenreFlags) -> impl Iterator<Item = PopularGenre> {
        Self::ALL
            .into_iter()
            .filter(move |g| flags.contains(g.catalog_index()))
    }

    pub fn of_movie(movie: &MovieRecord) -> impl Iterator<Item = PopularGenre> {
        Self::of_flags(movie.genre_flags)
    }
}

impl fmt::Display for PopularGenre {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A user's average rating per popular genre. `None` means the user rated no
/// movie of that genre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenreProfile {
    pub user_id: UserId,
    pub averages: [Option<f64>; 5],
    pub rated_counts: [u32; 5],
}

impl GenreProfile {
    pub fn unrated(user_id: UserId) -> Self {
        GenreProfile {
            user_id,
            averages: [None; 5],
            rated_counts: [0; 5],
        }
    }

    /// Builds a profile from explicit averages; counts are set to 1 for the
    /// defined entries.
    pub fn from_averages(user_id: UserId, averages: [Option<f64>; 5]) -> Self {
        let rated_counts = averages.map(|a| u32::from(a.is_some()));
        GenreProfile {
            user_id,
            averages,
            rated_counts,
        }
    }

    pub fn average(&self, genre: PopularGenre) -> Option<f64> {
        self.averages[genre.index()]
    }

    /// Dense feature vector with unrated genres encoded as 0.0.
    pub fn features(&self) -> Vec<f64> {
        self.averages.iter().map(|a| a.unwrap_or(0.0)).collect()
    }
}

/// Profile of `user` computed from the user's ratings in `ratings`.
pub fn genre_profile<R: Ratings>(
    ratings: &R,
    movies: &Catalog,
    user: UserId,
) -> Result<GenreProfile> {
    let row = ratings.row(user).ok_or(Error::UnknownUser(user))?;
    Ok(profile_from_row(user, row, movies))
}

pub(crate) fn profile_from_row(
    user: UserId,
    row: &[(MovieId, f64)],
    movies: &Catalog,
) -> GenreProfile {
    let mut sums = [0.0; 5];
    let mut counts = [0u32; 5];
    for &(movie, rating) in row {
        let Some(record) = movies.get(movie) else {
            continue;
        };
        for g in PopularGenre::of_movie(record) {
            sums[g.index()] += rating;
            counts[g.index()] += 1;
        }
    }
    let mut averages = [None; 5];
    for g in 0..5 {
        if counts[g] > 0 {
            averages[g] = Some(sums[g] / f64::from(counts[g]));
        }
    }
    GenreProfile {
        user_id: user,
        averages,
        rated_counts: counts,
    }
}

/// Profiles for a set of users, ordered by user id. Users without ratings
/// get an all-unrated profile.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GenreMatrix {
    pub profiles: Vec<GenreProfile>,
}

impl GenreMatrix {
    pub fn get(&self, user: UserId) -> Option<&GenreProfile> {
        self.profiles
            .binary_search_by_key(&user, |p| p.user_id)
            .ok()
            .map(|i| &self.profiles[i])
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    /// Rows restricted to `users`.
    pub fn subset(&self, users: &BTreeSet<UserId>) -> GenreMatrix {
        GenreMatrix {
            profiles: self
                .profiles
                .iter()
                .filter(|p| users.contains(&p.user_id))
                .cloned()
                .collect(),
        }
    }

    /// CSV with a `user_id` column followed by one column per genre; unrated
    /// cells are `NA`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<&str> = PopularGenre::ALL.iter().map(|g| g.name()).collect();
        writeln!(out, "user_id,{}", header.join(","))?;
        for p in &self.profiles {
            let cells: Vec<String> = p
                .averages
                .iter()
                .map(|a| a.map_or_else(|| "NA".to_string(), |v| v.to_string()))
                .collect();
            writeln!(out, "{},{}", p.user_id, cells.join(","))?;
        }
        Ok(())
    }
}

pub fn build_genre_matrix<R: Ratings>(
    ratings: &R,
    movies: &Catalog,
    users: &BTreeSet<UserId>,
) -> GenreMatrix {
    let profiles = users
        .iter()
        .map(|&u| match ratings.row(u) {
            Some(row) => profile_from_row(u, row, movies),
            None => GenreProfile::unrated(u),
        })
        .collect();
    GenreMatrix { profiles }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferredGenres {
    pub user_id: UserId,
    /// In fixed genre order.
    pub genres: Vec<PopularGenre>,
}

impl PreferredGenres {
    pub fn contains(&self, genre: PopularGenre) -> bool {
        self.genres.contains(&genre)
    }
}

/// Genres whose average is at least `threshold` (inclusive).
pub fn preferred_genres(profile: &GenreProfile, threshold: f64) -> PreferredGenres {
    let genres = PopularGenre::ALL
        .into_iter()
        .filter(|&g| profile.average(g).is_some_and(|a| a >= threshold))
        .collect();
    PreferredGenres {
        user_id: profile.user_id,
        genres,
    }
}
