//! Independent reference implementations for integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use std::path::PathBuf;

/// Dense re-evaluation of the neighborhood prediction for one active user.
///
/// `triples` holds every rating of the pool members and of the active user.
/// Neighbors are the pool members other than `active` sharing a movie with
/// them, ranked by similarity (ties by id) and cut at half the pool, rounded
/// up. Returns `None` when no selected neighbor rated `movie` or all weights
/// vanish.
pub fn oracle_predict(
    triples: &[(u32, u32, f64)],
    pool: &[u32],
    active: u32,
    movie: u32,
    use_ra: bool,
) -> Option<f64> {
    let max_user = triples.iter().map(|t| t.0).max()? as usize;
    let max_movie = triples.iter().map(|t| t.1).max()?.max(movie) as usize;
    let mut r = vec![vec![None; max_movie + 1]; max_user + 1];
    for &(u, m, v) in triples {
        r[u as usize][m as usize] = Some(v);
    }

    let mean = |u: usize| -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0.0;
        for m in 0..=max_movie {
            if let Some(v) = r[u][m] {
                sum += v;
                n += 1.0;
            }
        }
        if n == 0.0 {
            None
        } else {
            Some(sum / n)
        }
    };
    let degree = |m: usize| -> f64 { (0..=max_user).filter(|&u| r[u][m].is_some()).count() as f64 };

    let a = active as usize;
    let mu_a = mean(a)?;

    let mut candidates: Vec<(u32, f64, f64)> = Vec::new();
    for &v in pool {
        if v == active {
            continue;
        }
        let vi = v as usize;
        let Some(mu_v) = mean(vi) else { continue };
        let mut num = 0.0;
        let mut den_a = 0.0;
        let mut den_v = 0.0;
        let mut ra = 0.0;
        let mut co = 0;
        for m in 0..=max_movie {
            if let (Some(x), Some(y)) = (r[a][m], r[vi][m]) {
                num += (x - mu_a) * (y - mu_v);
                den_a += (x - mu_a) * (x - mu_a);
                den_v += (y - mu_v) * (y - mu_v);
                ra += 1.0 / degree(m);
                co += 1;
            }
        }
        if co == 0 {
            continue;
        }
        let sim = if den_a == 0.0 || den_v == 0.0 {
            0.0
        } else {
            num / (den_a.sqrt() * den_v.sqrt())
        };
        candidates.push((v, sim, if use_ra { ra } else { 1.0 }));
    }
    candidates.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(&y.0)));
    let others = pool.iter().filter(|&&v| v != active).count();
    candidates.truncate(others.div_ceil(2));

    let mut num = 0.0;
    let mut den = 0.0;
    for (v, sim, w) in candidates {
        if let Some(rv) = r[v as usize][movie as usize] {
            num += (rv - mean(v as usize).unwrap()) * sim * w;
            den += (sim * w).abs();
        }
    }
    if den > 0.0 {
        Some(mu_a + num / den)
    } else {
        None
    }
}

/// Location of the MovieLens-100K files: `HMRS_DATA_DIR` or
/// `<workspace>/data/ml-100k`.
pub fn data_dir() -> Option<PathBuf> {
    let dir = std::env::var_os("HMRS_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/ml-100k"));
    dir.join("u.data").exists().then_some(dir)
}
