use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};

use super::{MovieId, UserId};

/// Read access to a user x movie rating table plus the statistics the
/// similarity kernels need.
///
/// Rows are sorted by movie id. `degree` is the number of users in the table
/// that rated the movie.
pub trait Ratings {
    fn row(&self, user: UserId) -> Option<&[(MovieId, f64)]>;
    fn mean(&self, user: UserId) -> Option<f64>;
    fn degree(&self, movie: MovieId) -> u32;

    fn rating(&self, user: UserId, movie: MovieId) -> Option<f64> {
        let row = self.row(user)?;
        row.binary_search_by_key(&movie, |&(m, _)| m)
            .ok()
            .map(|i| row[i].1)
    }
}

/// Sparse rating matrix with ratings in {1,..,5}.
///
/// Immutable once built: the per-user means and per-movie rater counts are
/// computed at construction and always agree with the stored entries.
/// Users only appear in the matrix if they have at least one rating.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingMatrix {
    users: Vec<UserId>,
    index: HashMap<UserId, usize>,
    rows: Vec<Vec<(MovieId, f64)>>,
    means: Vec<f64>,
    degrees: HashMap<MovieId, u32>,
    len: usize,
}

impl RatingMatrix {
    pub fn empty() -> Self {
        Self::from_sorted(BTreeMap::new())
    }

    /// Builds a matrix from `(user, movie, rating)` triples. When a pair
    /// occurs more than once the last occurrence wins.
    pub fn from_triples<I>(triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (UserId, MovieId, u8)>,
    {
        let mut cells = BTreeMap::new();
        for (user, movie, rating) in triples {
            if !(1..=5).contains(&rating) {
                return Err(Error::invalid(format!(
                    "rating {rating} for ({user}, {movie}) outside 1..=5"
                )));
            }
            cells.insert((user, movie), rating);
        }
        Ok(Self::from_sorted(cells))
    }

    fn from_sorted(cells: BTreeMap<(UserId, MovieId), u8>) -> Self {
        let mut users = Vec::new();
        let mut rows: Vec<Vec<(MovieId, f64)>> = Vec::new();
        let mut degrees: HashMap<MovieId, u32> = HashMap::new();
        for (&(user, movie), &rating) in &cells {
            if users.last() != Some(&user) {
                users.push(user);
                rows.push(Vec::new());
            }
            rows.last_mut().unwrap().push((movie, f64::from(rating)));
            *degrees.entry(movie).or_insert(0) += 1;
        }
        let means = rows
            .iter()
            .map(|row| row.iter().map(|&(_, r)| r).sum::<f64>() / row.len() as f64)
            .collect();
        let index = users.iter().enumerate().map(|(i, &u)| (u, i)).collect();
        RatingMatrix {
            users,
            index,
            rows,
            means,
            degrees,
            len: cells.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    /// Number of distinct movies with at least one rating.
    pub fn n_movies(&self) -> usize {
        self.degrees.len()
    }

    /// Users with at least one rating, ascending.
    pub fn users(&self) -> &[UserId] {
        &self.users
    }

    pub fn contains_user(&self, user: UserId) -> bool {
        self.index.contains_key(&user)
    }

    /// Sorted movie ids that carry at least one rating.
    pub fn movies(&self) -> Vec<MovieId> {
        let mut movies: Vec<MovieId> = self.degrees.keys().copied().collect();
        movies.sort_unstable();
        movies
    }

    pub fn global_mean(&self) -> Option<f64> {
        if self.len == 0 {
            return None;
        }
        let total: f64 = self.rows.iter().flatten().map(|&(_, r)| r).sum();
        Some(total / self.len as f64)
    }

    /// All entries ordered by user then movie.
    pub fn iter(&self) -> impl Iterator<Item = (UserId, MovieId, f64)> + '_ {
        self.users
            .iter()
            .zip(&self.rows)
            .flat_map(|(&u, row)| row.iter().map(move |&(m, r)| (u, m, r)))
    }

    /// Keeps the entries for which `keep(position, user, movie)` holds, where
    /// `position` is the entry's index in [`RatingMatrix::iter`] order.
    pub fn select<F>(&self, mut keep: F) -> RatingMatrix
    where
        F: FnMut(usize, UserId, MovieId) -> bool,
    {
        let cells = self
            .iter()
            .enumerate()
            .filter(|&(i, (u, m, _))| keep(i, u, m))
            .map(|(_, (u, m, r))| ((u, m), r as u8))
            .collect();
        Self::from_sorted(cells)
    }

    /// The sub-matrix holding exactly the ratings of `users`, with means and
    /// rater counts recomputed over it.
    pub fn restrict(&self, users: &BTreeSet<UserId>) -> Result<RatingMatrix> {
        if users.is_empty() {
            return Err(Error::EmptyUserSet);
        }
        Ok(self.select(|_, u, _| users.contains(&u)))
    }
}

impl Ratings for RatingMatrix {
    fn row(&self, user: UserId) -> Option<&[(MovieId, f64)]> {
        self.index.get(&user).map(|&i| self.rows[i].as_slice())
    }

    fn mean(&self, user: UserId) -> Option<f64> {
        self.index.get(&user).map(|&i| self.means[i])
    }

    fn degree(&self, movie: MovieId) -> u32 {
        self.degrees.get(&movie).copied().unwrap_or(0)
    }
}

/// A rating matrix seen with one extra user's row added.
///
/// Used when an active user is matched against a cluster they are not a
/// member of: the user's ratings take part in similarity and their movies
/// count toward the rater degrees, without copying the cluster matrix.
pub struct WithUser<'a, R> {
    base: &'a R,
    user: UserId,
    row: &'a [(MovieId, f64)],
    mean: Option<f64>,
    added: bool,
}

impl<'a, R: Ratings> WithUser<'a, R> {
    /// `row` must be sorted by movie id. If `base` already holds `user`, the
    /// view is identical to `base`.
    pub fn new(base: &'a R, user: UserId, row: &'a [(MovieId, f64)]) -> Self {
        let added = base.row(user).is_none() && !row.is_empty();
        let mean = if added {
            Some(row.iter().map(|&(_, r)| r).sum::<f64>() / row.len() as f64)
        } else {
            base.mean(user)
        };
        WithUser {
            base,
            user,
            row,
            mean,
            added,
        }
    }
}

impl<R: Ratings> Ratings for WithUser<'_, R> {
    fn row(&self, user: UserId) -> Option<&[(MovieId, f64)]> {
        if self.added && user == self.user {
            Some(self.row)
        } else {
            self.base.row(user)
        }
    }

    fn mean(&self, user: UserId) -> Option<f64> {
        if user == self.user {
            self.mean
        } else {
            self.base.mean(user)
        }
    }

    fn degree(&self, movie: MovieId) -> u32 {
        let extra = self.added && self.row.binary_search_by_key(&movie, |&(m, _)| m).is_ok();
        self.base.degree(movie) + u32::from(extra)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RatingMatrix {
        RatingMatrix::from_triples([(1, 10, 4), (1, 11, 2), (2, 10, 5), (3, 12, 1), (3, 10, 3)])
            .unwrap()
    }

    #[test]
    fn derived_indices() {
        let m = sample();
        assert_eq!(m.len(), 5);
        assert_eq!(m.users(), &[1, 2, 3]);
        assert_eq!(m.degree(10), 3);
        assert_eq!(m.degree(11), 1);
        assert_eq!(m.degree(99), 0);
        assert_eq!(m.mean(1), Some(3.0));
        assert_eq!(m.mean(4), None);
        assert_eq!(m.row(3).unwrap(), &[(10, 3.0), (12, 1.0)]);
        assert_eq!(m.rating(1, 11), Some(2.0));
        assert_eq!(m.rating(2, 11), None);
    }

    #[test]
    fn last_duplicate_wins() {
        let m = RatingMatrix::from_triples([(1, 10, 4), (1, 10, 2)]).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.rating(1, 10), Some(2.0));
        assert_eq!(m.degree(10), 1);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(RatingMatrix::from_triples([(1, 1, 0)]).is_err());
        assert!(RatingMatrix::from_triples([(1, 1, 6)]).is_err());
    }

    #[test]
    fn restrict_to_all_is_identity() {
        let m = sample();
        let all: BTreeSet<_> = m.users().iter().copied().collect();
        assert_eq!(m.restrict(&all).unwrap(), m);
    }

    #[test]
    fn restrict_single_user() {
        let m = RatingMatrix::from_triples((1..=5).map(|i| (7, i, 3)).chain([(8, 1, 2)])).unwrap();
        let only: BTreeSet<_> = [7].into_iter().collect();
        let r = m.restrict(&only).unwrap();
        assert_eq!(r.len(), 5);
        assert!(r.movies().iter().all(|&z| r.degree(z) == 1));
    }

    #[test]
    fn restrict_empty_set_is_error() {
        assert!(matches!(
            sample().restrict(&BTreeSet::new()),
            Err(Error::EmptyUserSet)
        ));
    }

    #[test]
    fn with_user_matches_rebuilt_matrix() {
        let base = sample();
        let extra = [(10, 2.0), (12, 5.0), (13, 4.0)];
        let view = WithUser::new(&base, 9, &extra);
        let rebuilt = RatingMatrix::from_triples(
            base.iter()
                .map(|(u, m, r)| (u, m, r as u8))
                .chain(extra.iter().map(|&(m, r)| (9, m, r as u8))),
        )
        .unwrap();
        for u in [1, 2, 3, 9] {
            assert_eq!(view.row(u), rebuilt.row(u));
            assert_eq!(view.mean(u), rebuilt.mean(u));
        }
        for z in 10..=14 {
            assert_eq!(view.degree(z), rebuilt.degree(z));
        }

        // already a member: no double counting
        let member = WithUser::new(&base, 1, base.row(1).unwrap());
        assert_eq!(member.degree(10), 3);
    }

    #[test]
    fn empty_matrix() {
        let m = RatingMatrix::empty();
        assert!(m.is_empty());
        assert_eq!(m.global_mean(), None);
    }
}
