//! Randomized cross-checks of the engine against the brute-force oracle.

use std::fmt;

use thiserror::Error;

use crate::activation::ActivationFlags;
use crate::engine::{count_blocking_pairs, initial_order, run_to_completion, MatchState, Matching, MemberRef};
use crate::oracle::{enumerate_stable, MAX_ORACLE_SIZE};
use crate::preferences::{generate_preferences, Group, PreferenceSystem};
use crate::rng::{derive_child_seed, Rng};

/// Engine under test: runs a market from an explicit initial queue.
pub type EngineFn = fn(&PreferenceSystem, &ActivationFlags, &[MemberRef]) -> Matching;

/// Number of extra queue shuffles used for the order-independence check.
pub const SHUFFLES: usize = 10;

pub fn engine_matching(prefs: &PreferenceSystem, flags: &ActivationFlags, order: &[MemberRef]) -> Matching {
    let mut state = MatchState::with_queue(prefs, flags, order);
    run_to_completion(&mut state, prefs, flags);
    state.into_matching()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub size: usize,
    pub seed: u64,
    pub reason: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "size {} seed {}: {}", self.size, self.seed, self.reason)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SizeSummary {
    pub size: usize,
    pub instances: usize,
    pub passed: usize,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub sizes: Vec<SizeSummary>,
    pub failures: Vec<Failure>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn table(&self) -> String {
        let mut out = String::from("size  instances  passed  failed\n");
        for s in &self.sizes {
            out.push_str(&format!(
                "{:>4}  {:>9}  {:>6}  {:>6}\n",
                s.size,
                s.instances,
                s.passed,
                s.instances - s.passed
            ));
        }
        out
    }
}

/// Checks one random `size`×`size` instance drawn from `seed`:
/// male-proposing run equals the oracle's male-optimal matching and has no
/// blocking pairs, the female-proposing run equals the female-optimal one,
/// the group-swapped market gives the swapped result, and ten queue
/// shuffles all give the same matching.
pub fn verify_instance(size: usize, seed: u64, engine: EngineFn) -> Result<(), String> {
    let mut rng = Rng::new(seed);
    let prefs = generate_preferences(size, size, &mut rng);
    let set = enumerate_stable(&prefs).map_err(|e| e.to_string())?;

    let males = ActivationFlags::one_sided(size, size, Group::Male);
    let mut order = initial_order(&males);
    rng.shuffle(&mut order);
    let matching = engine(&prefs, &males, &order);

    if &matching != set.male_optimal() {
        return Err(format!(
            "male-proposing result {:?} differs from male-optimal {:?}",
            matching.male_partner,
            set.male_optimal().male_partner
        ));
    }
    let blocking = count_blocking_pairs(&matching, &prefs);
    if blocking != 0 {
        return Err(format!("{blocking} blocking pairs"));
    }

    let females = ActivationFlags::one_sided(size, size, Group::Female);
    let mut female_order = initial_order(&females);
    rng.shuffle(&mut female_order);
    let female_run = engine(&prefs, &females, &female_order);
    if &female_run != set.female_optimal() {
        return Err("female-proposing result differs from female-optimal".into());
    }

    let mirrored_order: Vec<MemberRef> = order.iter().map(|m| m.swapped()).collect();
    let mirrored = engine(&prefs.transposed(), &males.swapped(), &mirrored_order);
    if mirrored.swapped() != matching {
        return Err("group-swapped market did not give the swapped matching".into());
    }

    for k in 0..SHUFFLES {
        rng.shuffle(&mut order);
        if engine(&prefs, &males, &order) != matching {
            return Err(format!("queue shuffle {k} changed the one-sided outcome"));
        }
    }
    Ok(())
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("max size must be between 2 and {MAX_ORACLE_SIZE} (got {0})")]
    SizeOutOfRange(usize),
}

/// Runs `instances` random instances for every size in `2..=max_size`.
/// Instance seeds are child seeds of `master_seed`, so any failure can be
/// replayed with [`verify_instance`].
pub fn verify_suite(
    instances: usize,
    max_size: usize,
    master_seed: u64,
    engine: EngineFn,
) -> Result<VerifyReport, VerifyError> {
    if !(2..=MAX_ORACLE_SIZE).contains(&max_size) {
        return Err(VerifyError::SizeOutOfRange(max_size));
    }
    let mut report = VerifyReport::default();
    for (size_idx, size) in (2..=max_size).enumerate() {
        let mut summary = SizeSummary { size, instances, passed: 0 };
        for k in 0..instances {
            let seed = derive_child_seed(master_seed, (size_idx * instances + k) as u64);
            match verify_instance(size, seed, engine) {
                Ok(()) => summary.passed += 1,
                Err(reason) => report.failures.push(Failure { size, seed, reason }),
            }
        }
        report.sizes.push(summary);
    }
    Ok(report)
}
