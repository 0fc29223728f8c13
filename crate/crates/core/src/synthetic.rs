//! Seeded synthetic data for tests, benchmarks and the Python smoke test.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::ingest::{
    Catalog, Dataset, Gender, GenreFlags, LoadStats, MovieId, MovieRecord, RatingMatrix, UserId,
    UserRecord,
};
use crate::som::{FeatureVector, FEATURE_MAX};

/// Gaussian cloud of `n` points in 5-D around `(center, .., center)`, clamped
/// to the feature range. User ids start at `first_id`.
pub fn cloud(
    center: f64,
    spread: f64,
    n: usize,
    first_id: UserId,
    seed: u64,
) -> Vec<FeatureVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(center, spread).expect("finite spread");
    (0..n)
        .map(|i| {
            let values = (0..5)
                .map(|_| normal.sample(&mut rng).clamp(0.0, FEATURE_MAX))
                .collect();
            FeatureVector::new(first_id + i as UserId, values)
        })
        .collect()
}

/// 50 points around (1,..,1) with ids 0..50, then 50 around (5,..,5) with ids 50..100.
pub fn two_clouds(seed: u64) -> Vec<FeatureVector> {
    let mut points = cloud(1.0, 0.3, 50, 0, seed);
    points.extend(cloud(5.0, 0.3, 50, 50, seed.wrapping_add(1)));
    points
}

/// Random sparse rating matrix with user ids `1..=n_users`, movie ids
/// `1..=n_movies` and at most `max_ratings` entries.
pub fn random_matrix(n_users: u32, n_movies: u32, max_ratings: usize, seed: u64) -> RatingMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells = BTreeMap::<(UserId, MovieId), u8>::new();
    let target = max_ratings.min((n_users * n_movies) as usize);
    while cells.len() < target {
        let u = rng.gen_range(1..=n_users);
        let m = rng.gen_range(1..=n_movies);
        cells.insert((u, m), rng.gen_range(1..=5));
    }
    RatingMatrix::from_triples(cells.into_iter().map(|((u, m), r)| (u, m, r)))
        .expect("ratings in range")
}

/// A small MovieLens-shaped dataset: users of mixed age and gender, movies
/// with one or two catalog genres, and ratings driven by per-user genre taste
/// so that preferred genres exist.
pub fn dataset(n_users: u32, n_movies: u32, ratings_per_user: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let users: Vec<UserRecord> = (1..=n_users)
        .map(|user_id| UserRecord {
            user_id,
            age: rng.gen_range(15..=70),
            gender: if rng.gen_bool(0.6) {
                Gender::Male
            } else {
                Gender::Female
            },
            occupation: "other".into(),
            zip: format!("{:05}", rng.gen_range(0..100_000)),
        })
        .collect();
    let popular = [1, 2, 5, 8, 14];
    let movies: Vec<MovieRecord> = (1..=n_movies)
        .map(|movie_id| {
            let first = popular[rng.gen_range(0..popular.len())];
            let mut genres = vec![first];
            if rng.gen_bool(0.3) {
                genres.push(rng.gen_range(0..GenreFlags::LEN));
            }
            MovieRecord {
                movie_id,
                title: format!("Movie {movie_id}"),
                genre_flags: GenreFlags::from_indices(genres),
            }
        })
        .collect();
    let noise = Normal::new(0.0, 0.6).expect("finite spread");
    let mut cells = BTreeMap::<(UserId, MovieId), u8>::new();
    for user in &users {
        let base: f64 = rng.gen_range(2.5..4.0);
        let taste: Vec<f64> = (0..GenreFlags::LEN)
            .map(|_| rng.gen_range(-1.2..1.2))
            .collect();
        let count = ratings_per_user.min(n_movies as usize);
        let mut picked = 0;
        while picked < count {
            let movie = &movies[rng.gen_range(0..movies.len())];
            if cells.contains_key(&(user.user_id, movie.movie_id)) {
                continue;
            }
            let lift = movie.genre_flags.iter().map(|g| taste[g]).sum::<f64>()
                / movie.genre_flags.iter().count() as f64;
            let r = (base + lift + noise.sample(&mut rng))
                .round()
                .clamp(1.0, 5.0) as u8;
            cells.insert((user.user_id, movie.movie_id), r);
            picked += 1;
        }
    }
    let ratings = RatingMatrix::from_triples(cells.into_iter().map(|((u, m), r)| (u, m, r)))
        .expect("ratings in range");
    let movies = Catalog::new(movies).expect("unique ids");
    let stats = LoadStats {
        users: users.len(),
        movies: movies.len(),
        ratings: ratings.len(),
        duplicate_ratings: 0,
    };
    Dataset {
        ratings,
        users,
        movies,
        stats,
    }
}

/// Writes a dataset as `u.data`, `u.user` and `u.item` into `dir`.
pub fn write_files(data: &Dataset, dir: &Path) -> std::io::Result<()> {
    let mut ratings = String::new();
    for (u, m, r) in data.ratings.iter() {
        let _ = writeln!(ratings, "{u}\t{m}\t{r}\t881250949");
    }
    let mut users = String::new();
    for u in &data.users {
        let g = match u.gender {
            Gender::Male => 'M',
            Gender::Female => 'F',
        };
        let _ = writeln!(
            users,
            "{}|{}|{g}|{}|{}",
            u.user_id, u.age, u.occupation, u.zip
        );
    }
    let mut items = String::new();
    for m in data.movies.movies() {
        let flags: Vec<&str> = (0..GenreFlags::LEN)
            .map(|i| if m.genre_flags.contains(i) { "1" } else { "0" })
            .collect();
        let _ = writeln!(
            items,
            "{}|{}|01-Jan-1995|||{}",
            m.movie_id,
            m.title,
            flags.join("|")
        );
    }
    fs::create_dir_all(dir)?;
    fs::write(dir.join("u.data"), ratings)?;
    fs::write(dir.join("u.user"), users)?;
    fs::write(dir.join("u.item"), items)
}
