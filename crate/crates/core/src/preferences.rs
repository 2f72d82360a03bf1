//! Complete ordinal preference lists for both groups.

use thiserror::Error;

use crate::rng::Rng;

/// One side of the market.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    Male,
    Female,
}

impl Group {
    pub const BOTH: [Group; 2] = [Group::Male, Group::Female];

    pub fn other(self) -> Group {
        match self {
            Group::Male => Group::Female,
            Group::Female => Group::Male,
        }
    }

    pub(crate) fn idx(self) -> usize {
        match self {
            Group::Male => 0,
            Group::Female => 1,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PreferenceError {
    #[error("both groups need at least one member")]
    EmptyGroup,
    #[error("{group:?} {member}: row has {len} entries, expected {expected}")]
    RowLength { group: Group, member: usize, len: usize, expected: usize },
    #[error("{group:?} {member}: row is not a permutation of the opposite group")]
    NotPermutation { group: Group, member: usize },
}

/// Rankings of the opposite group for every member of both groups, plus the
/// inverse tables used for O(1) rank lookups.
///
/// Rows are stored flat. Position 0 of a row is the most preferred partner;
/// ranks are 1-based so that a partner's rank is directly the member's energy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreferenceSystem {
    sizes: [usize; 2],
    prefs: [Vec<u32>; 2],
    rank_of: [Vec<u32>; 2],
}

impl PreferenceSystem {
    /// Builds a system from explicit rows, checking the permutation property.
    pub fn from_rows(male_rows: &[Vec<usize>], female_rows: &[Vec<usize>]) -> Result<Self, PreferenceError> {
        let n_males = male_rows.len();
        let n_females = female_rows.len();
        if n_males == 0 || n_females == 0 {
            return Err(PreferenceError::EmptyGroup);
        }
        let male = flatten(Group::Male, male_rows, n_females)?;
        let female = flatten(Group::Female, female_rows, n_males)?;
        Ok(Self::from_flat([n_males, n_females], [male, female]))
    }

    fn from_flat(sizes: [usize; 2], prefs: [Vec<u32>; 2]) -> Self {
        let rank_of = [invert(&prefs[0], sizes[1]), invert(&prefs[1], sizes[0])];
        Self { sizes, prefs, rank_of }
    }

    pub fn n_males(&self) -> usize {
        self.sizes[0]
    }

    pub fn n_females(&self) -> usize {
        self.sizes[1]
    }

    pub fn size(&self, group: Group) -> usize {
        self.sizes[group.idx()]
    }

    /// Preference row of one member, most preferred first.
    #[inline]
    pub fn row(&self, group: Group, member: usize) -> &[u32] {
        let width = self.sizes[group.other().idx()];
        &self.prefs[group.idx()][member * width..(member + 1) * width]
    }

    /// 1-based rank that `member` of `group` assigns to `other` of the opposite group.
    #[inline]
    pub fn rank(&self, group: Group, member: usize, other: usize) -> usize {
        let width = self.sizes[group.other().idx()];
        self.rank_of[group.idx()][member * width + other] as usize
    }

    pub fn rows(&self, group: Group) -> Vec<Vec<usize>> {
        (0..self.size(group)).map(|i| self.row(group, i).iter().map(|&j| j as usize).collect()).collect()
    }

    /// The same market with the group labels exchanged.
    pub fn transposed(&self) -> Self {
        Self {
            sizes: [self.sizes[1], self.sizes[0]],
            prefs: [self.prefs[1].clone(), self.prefs[0].clone()],
            rank_of: [self.rank_of[1].clone(), self.rank_of[0].clone()],
        }
    }
}

fn flatten(group: Group, rows: &[Vec<usize>], width: usize) -> Result<Vec<u32>, PreferenceError> {
    let mut flat = Vec::with_capacity(rows.len() * width);
    for (member, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(PreferenceError::RowLength { group, member, len: row.len(), expected: width });
        }
        let mut seen = vec![false; width];
        for &j in row {
            if j >= width || seen[j] {
                return Err(PreferenceError::NotPermutation { group, member });
            }
            seen[j] = true;
            flat.push(j as u32);
        }
    }
    Ok(flat)
}

fn invert(prefs: &[u32], width: usize) -> Vec<u32> {
    let mut rank_of = vec![0u32; prefs.len()];
    for (row_start, row) in prefs.chunks_exact(width).enumerate().map(|(i, r)| (i * width, r)) {
        for (pos, &j) in row.iter().enumerate() {
            rank_of[row_start + j as usize] = pos as u32 + 1;
        }
    }
    rank_of
}

/// Draws independent uniform rankings: every male row in index order, then
/// every female row.
pub fn generate_preferences(n_males: usize, n_females: usize, rng: &mut Rng) -> PreferenceSystem {
    assert!(n_males >= 1 && n_females >= 1, "both groups need at least one member");
    let male = random_rows(n_males, n_females, rng);
    let female = random_rows(n_females, n_males, rng);
    PreferenceSystem::from_flat([n_males, n_females], [male, female])
}

fn random_rows(count: usize, width: usize, rng: &mut Rng) -> Vec<u32> {
    let mut flat = Vec::with_capacity(count * width);
    for _ in 0..count {
        let start = flat.len();
        flat.extend(0..width as u32);
        rng.shuffle(&mut flat[start..]);
    }
    flat
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert_eq, proptest};

    fn check_invariants(p: &PreferenceSystem) {
        for group in Group::BOTH {
            let width = p.size(group.other());
            for i in 0..p.size(group) {
                let mut sorted: Vec<u32> = p.row(group, i).to_vec();
                sorted.sort_unstable();
                assert_eq!(sorted, (0..width as u32).collect::<Vec<_>>());
                for j in 0..width {
                    assert_eq!(p.row(group, i)[p.rank(group, i, j) - 1] as usize, j);
                }
            }
        }
    }

    #[test]
    fn single_female_market() {
        let p = generate_preferences(4, 1, &mut Rng::new(1));
        for m in 0..4 {
            assert_eq!(p.row(Group::Male, m), &[0]);
            assert_eq!(p.rank(Group::Male, m, 0), 1);
        }
        check_invariants(&p);
    }

    #[test]
    fn three_by_three() {
        check_invariants(&generate_preferences(3, 3, &mut Rng::new(2)));
    }

    #[test]
    fn top_choice_is_uniform() {
        let hits = (0..10_000u64)
            .filter(|&s| generate_preferences(3, 3, &mut Rng::new(s)).row(Group::Male, 0)[0] == 0)
            .count();
        let freq = hits as f64 / 10_000.0;
        assert!((freq - 1.0 / 3.0).abs() < 0.02, "{freq}");
    }

    #[test]
    fn from_rows_validates() {
        assert!(PreferenceSystem::from_rows(&[vec![0, 1]], &[vec![0], vec![0]]).is_ok());
        assert_eq!(
            PreferenceSystem::from_rows(&[vec![0, 0]], &[vec![0], vec![0]]),
            Err(PreferenceError::NotPermutation { group: Group::Male, member: 0 })
        );
        assert!(matches!(
            PreferenceSystem::from_rows(&[vec![0]], &[vec![0], vec![0]]),
            Err(PreferenceError::RowLength { .. })
        ));
        assert_eq!(PreferenceSystem::from_rows(&[], &[vec![]]), Err(PreferenceError::EmptyGroup));
    }

    #[test]
    fn transpose_swaps_groups() {
        let p = generate_preferences(3, 5, &mut Rng::new(9));
        let t = p.transposed();
        assert_eq!(t.n_males(), 5);
        assert_eq!(t.rows(Group::Male), p.rows(Group::Female));
        assert_eq!(t.rows(Group::Female), p.rows(Group::Male));
        assert_eq!(t.transposed(), p);
    }

    proptest! {
        #[test]
        fn generated_rows_are_inverted_permutations(n in 1usize..12, m in 1usize..12, seed: u64) {
            let p = generate_preferences(n, m, &mut Rng::new(seed));
            check_invariants(&p);
            prop_assert_eq!(&p, &generate_preferences(n, m, &mut Rng::new(seed)));
            let rebuilt = PreferenceSystem::from_rows(&p.rows(Group::Male), &p.rows(Group::Female)).unwrap();
            prop_assert_eq!(rebuilt, p);
        }
    }
}
