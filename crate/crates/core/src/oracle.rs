//! Ground truth for small markets.
//!
//! [`enumerate_stable`] lists every matching that pairs off the whole smaller
//! group and checks each one for blocking pairs by scanning preference rows
//! directly (no rank tables), so it shares nothing with the engine's scoring.
//! [`reference_gs`] is a plain stack-driven Gale-Shapley used for differential
//! testing at sizes enumeration cannot reach.

use thiserror::Error;

use crate::engine::{MatchResult, Matching};
use crate::preferences::{Group, PreferenceSystem};

/// Largest smaller-side size accepted by [`enumerate_stable`].
pub const MAX_ORACLE_SIZE: usize = 8;
/// Cap on the number of candidate matchings held in memory.
pub const MAX_CANDIDATES: u128 = 500_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance too large for enumeration: smaller side {smaller} > {MAX_ORACLE_SIZE}")]
    TooLarge { smaller: usize },
    #[error("instance too large for enumeration: {candidates} candidate matchings > {MAX_CANDIDATES}")]
    TooManyCandidates { candidates: u128 },
    #[error("no stable matching found")]
    NoStableMatching,
    #[error("{0:?}-optimal stable matching is not unique or disagrees between selectors")]
    NoOptimum(Group),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub matching: Matching,
    pub blocking_pairs: usize,
}

impl Candidate {
    pub fn is_stable(&self) -> bool {
        self.blocking_pairs == 0
    }
}

/// Every maximal-on-the-smaller-side matching, with its blocking-pair count
/// and the two extreme stable matchings.
#[derive(Clone, Debug)]
pub struct MatchingSet {
    pub candidates: Vec<Candidate>,
    /// Index into `candidates`.
    pub male_optimal: usize,
    pub female_optimal: usize,
}

impl MatchingSet {
    pub fn stable(&self) -> impl Iterator<Item = &Matching> {
        self.candidates.iter().filter(|c| c.is_stable()).map(|c| &c.matching)
    }

    pub fn male_optimal(&self) -> &Matching {
        &self.candidates[self.male_optimal].matching
    }

    pub fn female_optimal(&self) -> &Matching {
        &self.candidates[self.female_optimal].matching
    }
}

fn position(row: &[u32], target: usize) -> usize {
    row.iter().position(|&x| x as usize == target).expect("complete preference row")
}

/// Does `member` of `group` strictly prefer `other` to its situation in `matching`?
fn prefers(prefs: &PreferenceSystem, matching: &Matching, group: Group, member: usize, other: usize) -> bool {
    let current = match group {
        Group::Male => matching.male_partner[member],
        Group::Female => matching.female_partner[member],
    };
    match current {
        None => true,
        Some(c) => {
            let row = prefs.row(group, member);
            position(row, other) < position(row, c)
        }
    }
}

fn blocking_pairs(prefs: &PreferenceSystem, matching: &Matching) -> usize {
    let mut count = 0;
    for m in 0..prefs.n_males() {
        for f in 0..prefs.n_females() {
            if matching.male_partner[m] != Some(f)
                && prefers(prefs, matching, Group::Male, m, f)
                && prefers(prefs, matching, Group::Female, f, m)
            {
                count += 1;
            }
        }
    }
    count
}

fn falling_factorial(n: usize, k: usize) -> u128 {
    (n - k + 1..=n).map(|x| x as u128).product()
}

/// Injective maps from `0..small` into `0..large`, in lexicographic order.
fn injections(small: usize, large: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, used: &mut [bool], small: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == small {
            out.push(prefix.clone());
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                prefix.push(j);
                extend(prefix, used, small, out);
                prefix.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(small), &mut vec![false; large], small, &mut out);
    out
}

pub fn enumerate_stable(prefs: &PreferenceSystem) -> Result<MatchingSet, OracleError> {
    let (n, m) = (prefs.n_males(), prefs.n_females());
    let smaller = n.min(m);
    if smaller > MAX_ORACLE_SIZE {
        return Err(OracleError::TooLarge { smaller });
    }
    let candidates = falling_factorial(n.max(m), smaller);
    if candidates > MAX_CANDIDATES {
        return Err(OracleError::TooManyCandidates { candidates });
    }

    let candidates: Vec<Candidate> = injections(smaller, n.max(m))
        .into_iter()
        .map(|map| {
            let matching = if n <= m {
                Matching::from_male_side(map.into_iter().map(Some).collect(), m)
            } else {
                Matching::from_male_side(map.into_iter().map(Some).collect(), n).swapped()
            };
            Candidate { blocking_pairs: blocking_pairs(prefs, &matching), matching }
        })
        .collect();

    if !candidates.iter().any(Candidate::is_stable) {
        return Err(OracleError::NoStableMatching);
    }
    let male_optimal = optimum(prefs, &candidates, Group::Male)?;
    let female_optimal = optimum(prefs, &candidates, Group::Female)?;
    Ok(MatchingSet { candidates, male_optimal, female_optimal })
}

fn member_energy(prefs: &PreferenceSystem, matching: &Matching, group: Group, member: usize) -> usize {
    let partner = match group {
        Group::Male => matching.male_partner[member],
        Group::Female => matching.female_partner[member],
    };
    match partner {
        Some(p) => position(prefs.row(group, member), p) + 1,
        None => prefs.size(group.other()) + 1,
    }
}

/// Finds the stable matching best for every member of `group` at once, and
/// cross-checks it against the minimum-total-energy stable matching.
fn optimum(prefs: &PreferenceSystem, candidates: &[Candidate], group: Group) -> Result<usize, OracleError> {
    let stable: Vec<usize> = (0..candidates.len()).filter(|&i| candidates[i].is_stable()).collect();
    let energies: Vec<Vec<usize>> = stable
        .iter()
        .map(|&i| (0..prefs.size(group)).map(|k| member_energy(prefs, &candidates[i].matching, group, k)).collect())
        .collect();

    let dominant: Vec<usize> = (0..stable.len())
        .filter(|&a| (0..stable.len()).all(|b| energies[a].iter().zip(&energies[b]).all(|(x, y)| x <= y)))
        .collect();
    let totals: Vec<usize> = energies.iter().map(|e| e.iter().sum()).collect();
    let best_total = *totals.iter().min().expect("nonempty stable set");
    let min_total: Vec<usize> = (0..stable.len()).filter(|&a| totals[a] == best_total).collect();

    match (dominant.as_slice(), min_total.as_slice()) {
        ([a], [b]) if a == b => Ok(stable[*a]),
        _ => Err(OracleError::NoOptimum(group)),
    }
}

/// Textbook deferred acceptance with `proposing_group` proposing. Free
/// proposers are kept on a stack, so the proposal order differs from the
/// engine's FIFO queue.
pub fn reference_gs(prefs: &PreferenceSystem, proposing_group: Group) -> MatchResult {
    let receiving = proposing_group.other();
    let n_prop = prefs.size(proposing_group);
    let n_recv = prefs.size(receiving);

    let mut next = vec![0usize; n_prop];
    let mut held_by: Vec<Option<usize>> = vec![None; n_recv];
    let mut free: Vec<usize> = (0..n_prop).rev().collect();
    let mut proposals = 0u64;

    while let Some(p) = free.pop() {
        if next[p] == n_recv {
            continue;
        }
        let r = prefs.row(proposing_group, p)[next[p]] as usize;
        next[p] += 1;
        proposals += 1;
        match held_by[r] {
            None => held_by[r] = Some(p),
            Some(q) if prefs.rank(receiving, r, p) < prefs.rank(receiving, r, q) => {
                held_by[r] = Some(p);
                free.push(q);
            }
            Some(_) => free.push(p),
        }
    }

    let matching = match proposing_group {
        Group::Male => Matching::from_male_side(invert(&held_by, n_prop), n_recv),
        Group::Female => Matching::from_male_side(held_by, n_prop),
    };
    MatchResult::from_matching(matching, prefs, proposals)
}

fn invert(held_by: &[Option<usize>], n_prop: usize) -> Vec<Option<usize>> {
    let mut partner = vec![None; n_prop];
    for (r, p) in held_by.iter().enumerate() {
        if let Some(p) = p {
            partner[*p] = Some(r);
        }
    }
    partner
}
