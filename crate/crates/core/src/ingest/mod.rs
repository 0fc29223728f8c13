//! MovieLens-100K ingestion.
//!
//! Three flat files make up a dataset:
//!
//! * ratings (`u.data`): `user_id \t movie_id \t rating \t timestamp`
//! * users (`u.user`): `user_id | age | gender | occupation | zip`
//! * movies (`u.item`): `movie_id | title | release date | video date | URL | 19 genre flags`
//!
//! Parsing is strict about structure and lenient about text: titles may carry
//! non-UTF-8 bytes and are decoded lossily.

mod matrix;
mod segment;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use matrix::{RatingMatrix, Ratings, WithUser};
pub use segment::{segment_users, AgeBanding, Segment, SegmentAxis};

pub type UserId = u32;
pub type MovieId = u32;

/// Genre labels of the movie catalog, in file column order.
pub const CATALOG_GENRES: [&str; 19] = [
    "unknown",
    "Action",
    "Adventure",
    "Animation",
    "Children's",
    "Comedy",
    "Crime",
    "Documentary",
    "Drama",
    "Fantasy",
    "Film-Noir",
    "Horror",
    "Musical",
    "Mystery",
    "Romance",
    "Sci-Fi",
    "Thriller",
    "War",
    "Western",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::Male => "M",
            Gender::Female => "F",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: UserId,
    pub age: u32,
    pub gender: Gender,
    pub occupation: String,
    pub zip: String,
}

/// Bit set over [`CATALOG_GENRES`]; bit `i` is genre `i`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GenreFlags(u32);

impl GenreFlags {
    pub const LEN: usize = CATALOG_GENRES.len();

    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut bits = 0;
        for i in indices {
            assert!(i < Self::LEN, "genre index {i} out of range");
            bits |= 1 << i;
        }
        GenreFlags(bits)
    }

    pub fn contains(self, index: usize) -> bool {
        index < Self::LEN && self.0 & (1 << index) != 0
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..Self::LEN).filter(move |&i| self.contains(i))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MovieRecord {
    pub movie_id: MovieId,
    pub title: String,
    pub genre_flags: GenreFlags,
}

/// Movie records indexed by id.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    movies: Vec<MovieRecord>,
    index: HashMap<MovieId, usize>,
}

impl Catalog {
    /// Fails on duplicate ids.
    pub fn new(mut movies: Vec<MovieRecord>) -> Result<Self> {
        movies.sort_by_key(|m| m.movie_id);
        let mut index = HashMap::with_capacity(movies.len());
        for (i, m) in movies.iter().enumerate() {
            if index.insert(m.movie_id, i).is_some() {
                return Err(Error::invalid(format!("duplicate movie id {}", m.movie_id)));
            }
        }
        Ok(Catalog { movies, index })
    }

    pub fn get(&self, movie: MovieId) -> Option<&MovieRecord> {
        self.index.get(&movie).map(|&i| &self.movies[i])
    }

    pub fn contains(&self, movie: MovieId) -> bool {
        self.index.contains_key(&movie)
    }

    pub fn len(&self) -> usize {
        self.movies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.movies.is_empty()
    }

    /// Records sorted by id.
    pub fn movies(&self) -> &[MovieRecord] {
        &self.movies
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadStats {
    pub users: usize,
    pub movies: usize,
    pub ratings: usize,
    /// Repeated (user, movie) pairs; the last occurrence was kept.
    pub duplicate_ratings: usize,
}

impl fmt::Display for LoadStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} users, {} movies, {} ratings",
            self.users, self.movies, self.ratings
        )
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub ratings: RatingMatrix,
    /// Sorted by user id.
    pub users: Vec<UserRecord>,
    pub movies: Catalog,
    pub stats: LoadStats,
}

impl Dataset {
    pub fn user(&self, user: UserId) -> Option<&UserRecord> {
        self.users
            .binary_search_by_key(&user, |u| u.user_id)
            .ok()
            .map(|i| &self.users[i])
    }
}

/// Loads and cross-validates the three dataset files.
pub fn load_dataset(
    ratings_path: impl AsRef<Path>,
    users_path: impl AsRef<Path>,
    movies_path: impl AsRef<Path>,
) -> Result<Dataset> {
    let users_path = users_path.as_ref();
    let movies_path = movies_path.as_ref();
    let ratings_path = ratings_path.as_ref();

    let users = parse_users(&read(users_path)?, users_path)?;
    let movies = Catalog::new(parse_movies(&read(movies_path)?, movies_path)?)?;
    let records = parse_ratings(&read(ratings_path)?, ratings_path)?;

    let known_users: HashSet<UserId> = users.iter().map(|u| u.user_id).collect();
    let mut seen = HashSet::with_capacity(records.len());
    let mut duplicate_ratings = 0;
    for r in &records {
        if !known_users.contains(&r.user_id) {
            return Err(Error::DanglingUser {
                path: ratings_path.to_path_buf(),
                line: r.line,
                user: r.user_id,
            });
        }
        if !movies.contains(r.movie_id) {
            return Err(Error::DanglingMovie {
                path: ratings_path.to_path_buf(),
                line: r.line,
                movie: r.movie_id,
            });
        }
        if !seen.insert((r.user_id, r.movie_id)) {
            duplicate_ratings += 1;
        }
    }
    if duplicate_ratings > 0 {
        log::warn!(
            "{}: {duplicate_ratings} duplicate (user, movie) ratings, kept the last of each",
            ratings_path.display()
        );
    }

    let ratings =
        RatingMatrix::from_triples(records.iter().map(|r| (r.user_id, r.movie_id, r.rating)))?;
    let stats = LoadStats {
        users: users.len(),
        movies: movies.len(),
        ratings: ratings.len(),
        duplicate_ratings,
    };
    Ok(Dataset {
        ratings,
        users,
        movies,
        stats,
    })
}

/// Loads `u.data`, `u.user` and `u.item` from a directory.
pub fn load_dir(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    load_dataset(dir.join("u.data"), dir.join("u.user"), dir.join("u.item"))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// One line of the ratings file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RatingRecord {
    pub user_id: UserId,
    pub movie_id: MovieId,
    pub rating: u8,
    pub timestamp: u64,
    /// 1-based line number in the source file.
    pub line: usize,
}

/// Non-blank lines with their 1-based line numbers, `\r` stripped.
fn lines(bytes: &[u8]) -> impl Iterator<Item = (usize, &[u8])> {
    bytes
        .split(|&b| b == b'\n')
        .enumerate()
        .map(|(i, line)| (i + 1, line.strip_suffix(b"\r").unwrap_or(line)))
        .filter(|(_, line)| !line.iter().all(u8::is_ascii_whitespace))
}

struct LineCtx<'a> {
    path: &'a Path,
    line: usize,
}

impl LineCtx<'_> {
    fn malformed(&self, reason: impl Into<String>) -> Error {
        Error::Malformed {
            path: self.path.to_path_buf(),
            line: self.line,
            reason: reason.into(),
        }
    }

    fn field<T: std::str::FromStr>(&self, raw: &[u8], name: &str) -> Result<T> {
        std::str::from_utf8(raw)
            .ok()
            .map(str::trim)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| {
                self.malformed(format!(
                    "bad {name} field {:?}",
                    String::from_utf8_lossy(raw)
                ))
            })
    }
}

pub fn parse_ratings(bytes: &[u8], path: &Path) -> Result<Vec<RatingRecord>> {
    let mut out = Vec::new();
    for (line, text) in lines(bytes) {
        let ctx = LineCtx { path, line };
        let fields: Vec<&[u8]> = text.split(|&b| b == b'\t').collect();
        if fields.len() != 4 {
            return Err(ctx.malformed(format!(
                "expected 4 tab-separated fields, found {}",
                fields.len()
            )));
        }
        let user_id = ctx.field(fields[0], "user_id")?;
        let movie_id = ctx.field(fields[1], "movie_id")?;
        let rating: i64 = ctx.field(fields[2], "rating")?;
        if !(1..=5).contains(&rating) {
            return Err(Error::RatingOutOfRange {
                path: path.to_path_buf(),
                line,
                value: rating.to_string(),
            });
        }
        let timestamp = ctx.field(fields[3], "timestamp")?;
        out.push(RatingRecord {
            user_id,
            movie_id,
            rating: rating as u8,
            timestamp,
            line,
        });
    }
    Ok(out)
}

/// Users sorted by id; duplicate ids are an error.
pub fn parse_users(bytes: &[u8], path: &Path) -> Result<Vec<UserRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (line, text) in lines(bytes) {
        let ctx = LineCtx { path, line };
        let fields: Vec<&[u8]> = text.split(|&b| b == b'|').collect();
        if fields.len() != 5 {
            return Err(ctx.malformed(format!(
                "expected 5 pipe-separated fields, found {}",
                fields.len()
            )));
        }
        let user_id: UserId = ctx.field(fields[0], "user_id")?;
        let age: u32 = ctx.field(fields[1], "age")?;
        if age < 1 {
            return Err(ctx.malformed("age must be at least 1"));
        }
        let gender = match fields[2] {
            b"M" | b"m" => Gender::Male,
            b"F" | b"f" => Gender::Female,
            other => {
                return Err(ctx.malformed(format!(
                    "gender must be M or F, found {:?}",
                    String::from_utf8_lossy(other)
                )))
            }
        };
        if !seen.insert(user_id) {
            return Err(ctx.malformed(format!("duplicate user id {user_id}")));
        }
        out.push(UserRecord {
            user_id,
            age,
            gender,
            occupation: String::from_utf8_lossy(fields[3]).into_owned(),
            zip: String::from_utf8_lossy(fields[4]).into_owned(),
        });
    }
    out.sort_by_key(|u| u.user_id);
    Ok(out)
}

pub fn parse_movies(bytes: &[u8], path: &Path) -> Result<Vec<MovieRecord>> {
    const FIXED: usize = 5;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (line, text) in lines(bytes) {
        let ctx = LineCtx { path, line };
        let fields: Vec<&[u8]> = text.split(|&b| b == b'|').collect();
        if fields.len() != FIXED + GenreFlags::LEN {
            return Err(ctx.malformed(format!(
                "expected {} pipe-separated fields, found {}",
                FIXED + GenreFlags::LEN,
                fields.len()
            )));
        }
        let movie_id: MovieId = ctx.field(fields[0], "movie_id")?;
        let mut flags = Vec::new();
        for (i, raw) in fields[FIXED..].iter().enumerate() {
            match *raw {
                b"1" => flags.push(i),
                b"0" => {}
                other => {
                    return Err(ctx.malformed(format!(
                        "genre flag {} must be 0 or 1, found {:?}",
                        CATALOG_GENRES[i],
                        String::from_utf8_lossy(other)
                    )))
                }
            }
        }
        if !seen.insert(movie_id) {
            return Err(ctx.malformed(format!("duplicate movie id {movie_id}")));
        }
        out.push(MovieRecord {
            movie_id,
            title: printable(fields[1]),
            genre_flags: GenreFlags::from_indices(flags),
        });
    }
    Ok(out)
}

/// Lossy UTF-8 with control characters dropped.
fn printable(raw: &[u8]) -> String {
    String::from_utf8_lossy(raw)
        .chars()
        .filter(|c| !c.is_control())
        .collect()
}
