//! Generalized deferred acceptance with active members on both sides.
//!
//! Single active members wait in one FIFO queue shared by both groups. Each
//! dequeue makes exactly one proposal to the next untried candidate on the
//! proposer's list. Any recipient, active or passive, accepts a proposal iff
//! it strictly lowers its energy, dumping its current partner if it has one.
//! The run ends when the queue is empty, at which point every active member
//! that is still single has proposed to the whole opposite group.

use std::collections::VecDeque;

use crate::activation::ActivationFlags;
use crate::config::SimConfig;
use crate::preferences::{generate_preferences, Group, PreferenceSystem};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MemberRef {
    pub group: Group,
    pub index: usize,
}

impl MemberRef {
    pub fn male(index: usize) -> Self {
        Self { group: Group::Male, index }
    }

    pub fn female(index: usize) -> Self {
        Self { group: Group::Female, index }
    }

    /// The same member after the group labels are exchanged.
    pub fn swapped(self) -> Self {
        Self { group: self.group.other(), index: self.index }
    }
}

/// A partial one-to-one matching between the groups.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matching {
    pub male_partner: Vec<Option<usize>>,
    pub female_partner: Vec<Option<usize>>,
}

impl Matching {
    pub fn empty(n_males: usize, n_females: usize) -> Self {
        Self { male_partner: vec![None; n_males], female_partner: vec![None; n_females] }
    }

    /// Builds the matching from male-side assignments.
    pub fn from_male_side(male_partner: Vec<Option<usize>>, n_females: usize) -> Self {
        let mut female_partner = vec![None; n_females];
        for (m, f) in male_partner.iter().enumerate() {
            if let Some(f) = *f {
                assert!(female_partner[f].is_none(), "female {f} matched twice");
                female_partner[f] = Some(m);
            }
        }
        Self { male_partner, female_partner }
    }

    pub fn partner(&self, member: MemberRef) -> Option<usize> {
        self.side(member.group)[member.index]
    }

    pub fn side(&self, group: Group) -> &[Option<usize>] {
        match group {
            Group::Male => &self.male_partner,
            Group::Female => &self.female_partner,
        }
    }

    fn side_mut(&mut self, group: Group) -> &mut [Option<usize>] {
        match group {
            Group::Male => &mut self.male_partner,
            Group::Female => &mut self.female_partner,
        }
    }

    pub fn pair_count(&self) -> usize {
        self.male_partner.iter().filter(|p| p.is_some()).count()
    }

    pub fn is_symmetric(&self) -> bool {
        let forward = self.male_partner.iter().enumerate().all(|(m, f)| match f {
            Some(f) => self.female_partner.get(*f) == Some(&Some(m)),
            None => true,
        });
        let backward = self.female_partner.iter().enumerate().all(|(f, m)| match m {
            Some(m) => self.male_partner.get(*m) == Some(&Some(f)),
            None => true,
        });
        forward && backward
    }

    pub fn swapped(&self) -> Self {
        Self { male_partner: self.female_partner.clone(), female_partner: self.male_partner.clone() }
    }
}

/// Energy of one member: rank of its partner, or opposite size + 1 when single.
#[inline]
pub fn energy_of(matching: &Matching, prefs: &PreferenceSystem, member: MemberRef) -> usize {
    match matching.partner(member) {
        Some(p) => prefs.rank(member.group, member.index, p),
        None => prefs.size(member.group.other()) + 1,
    }
}

/// What one call to [`step`] did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepEvent {
    pub proposer: MemberRef,
    pub recipient: MemberRef,
    pub accepted: bool,
    /// Previous partner of the recipient, released by an acceptance.
    pub dumped: Option<MemberRef>,
}

#[derive(Clone, Debug)]
pub struct MatchState {
    matching: Matching,
    next_candidate: [Vec<u32>; 2],
    // Entries carry a ticket; an entry is live only while its member is
    // flagged queued and the ticket is current. Members matched while waiting
    // are unflagged in O(1) instead of being searched out of the deque.
    queue: VecDeque<(MemberRef, u32)>,
    queued: [Vec<bool>; 2],
    ticket: [Vec<u32>; 2],
    queue_len: usize,
    proposal_events: u64,
}

impl MatchState {
    /// Empty state with the queue in the given order. `order` must list
    /// exactly the active members, each once.
    pub fn with_queue(prefs: &PreferenceSystem, flags: &ActivationFlags, order: &[MemberRef]) -> Self {
        let sizes = [prefs.n_males(), prefs.n_females()];
        assert_eq!(flags.male_active.len(), sizes[0], "male flags sized for another market");
        assert_eq!(flags.female_active.len(), sizes[1], "female flags sized for another market");
        let mut state = Self {
            matching: Matching::empty(sizes[0], sizes[1]),
            next_candidate: [vec![0; sizes[0]], vec![0; sizes[1]]],
            queue: VecDeque::with_capacity(order.len()),
            queued: [vec![false; sizes[0]], vec![false; sizes[1]]],
            ticket: [vec![0; sizes[0]], vec![0; sizes[1]]],
            queue_len: 0,
            proposal_events: 0,
        };
        for &member in order {
            assert!(flags.get(member.group)[member.index], "{member:?} is not active");
            assert!(!state.queued[member.group.idx()][member.index], "{member:?} queued twice");
            state.push(member);
        }
        assert_eq!(
            state.queue_len,
            flags.count(Group::Male) + flags.count(Group::Female),
            "initial queue must hold every active member"
        );
        state
    }

    pub fn matching(&self) -> &Matching {
        &self.matching
    }

    pub fn into_matching(self) -> Matching {
        self.matching
    }

    pub fn proposal_events(&self) -> u64 {
        self.proposal_events
    }

    /// Proposals already made by `member`.
    pub fn next_candidate(&self, member: MemberRef) -> usize {
        self.next_candidate[member.group.idx()][member.index] as usize
    }

    pub fn queue_len(&self) -> usize {
        self.queue_len
    }

    pub fn is_done(&self) -> bool {
        self.queue_len == 0
    }

    /// Live queue contents, front first.
    pub fn queue(&self) -> Vec<MemberRef> {
        self.queue.iter().filter(|(m, t)| self.is_live(*m, *t)).map(|(m, _)| *m).collect()
    }

    fn is_live(&self, member: MemberRef, ticket: u32) -> bool {
        let g = member.group.idx();
        self.queued[g][member.index] && self.ticket[g][member.index] == ticket
    }

    fn push(&mut self, member: MemberRef) {
        let g = member.group.idx();
        self.ticket[g][member.index] = self.ticket[g][member.index].wrapping_add(1);
        self.queued[g][member.index] = true;
        self.queue.push_back((member, self.ticket[g][member.index]));
        self.queue_len += 1;
    }

    fn unqueue(&mut self, member: MemberRef) {
        let flag = &mut self.queued[member.group.idx()][member.index];
        if *flag {
            *flag = false;
            self.queue_len -= 1;
        }
    }

    fn pop(&mut self) -> Option<MemberRef> {
        while let Some((member, ticket)) = self.queue.pop_front() {
            if self.is_live(member, ticket) {
                self.unqueue(member);
                return Some(member);
            }
        }
        None
    }

    fn has_untried(&self, member: MemberRef, prefs: &PreferenceSystem) -> bool {
        self.next_candidate(member) < prefs.size(member.group.other())
    }

    /// Checks partner symmetry and queue membership. Meant for tests.
    pub fn check_invariants(&self, prefs: &PreferenceSystem, flags: &ActivationFlags) -> Result<(), String> {
        if !self.matching.is_symmetric() {
            return Err("partner arrays are not symmetric".into());
        }
        let queue = self.queue();
        if queue.len() != self.queue_len {
            return Err(format!("queue length {} but {} live entries", self.queue_len, queue.len()));
        }
        for m in queue {
            if !flags.get(m.group)[m.index] {
                return Err(format!("{m:?} queued but passive"));
            }
            if self.matching.partner(m).is_some() {
                return Err(format!("{m:?} queued but matched"));
            }
            if !self.has_untried(m, prefs) {
                return Err(format!("{m:?} queued with no candidates left"));
            }
        }
        let bound = 2 * prefs.n_males() as u64 * prefs.n_females() as u64;
        if self.proposal_events > bound {
            return Err(format!("{} proposals exceed {bound}", self.proposal_events));
        }
        Ok(())
    }
}

/// Initial state: queue holds every active member, males in index order then
/// females, after one Fisher-Yates shuffle driven by `rng`.
pub fn init_state(prefs: &PreferenceSystem, flags: &ActivationFlags, rng: &mut Rng) -> MatchState {
    let mut order = initial_order(flags);
    rng.shuffle(&mut order);
    MatchState::with_queue(prefs, flags, &order)
}

/// Active members before shuffling: males by index, then females by index.
pub fn initial_order(flags: &ActivationFlags) -> Vec<MemberRef> {
    let males = (0..flags.male_active.len()).filter(|&i| flags.male_active[i]).map(MemberRef::male);
    let females = (0..flags.female_active.len()).filter(|&i| flags.female_active[i]).map(MemberRef::female);
    males.chain(females).collect()
}

/// Dequeues one single active member and makes its next proposal.
///
/// Panics if the queue is empty; callers loop on [`MatchState::is_done`].
pub fn step(state: &mut MatchState, prefs: &PreferenceSystem, flags: &ActivationFlags) -> StepEvent {
    let proposer = state.pop().expect("step() called on an empty queue");
    let pg = proposer.group.idx();
    let cursor = state.next_candidate[pg][proposer.index] as usize;
    let recipient =
        MemberRef { group: proposer.group.other(), index: prefs.row(proposer.group, proposer.index)[cursor] as usize };
    state.next_candidate[pg][proposer.index] += 1;
    state.proposal_events += 1;

    let offered = prefs.rank(recipient.group, recipient.index, proposer.index);
    let accepted = offered < energy_of(&state.matching, prefs, recipient);
    let mut dumped = None;

    if accepted {
        if let Some(old) = state.matching.partner(recipient) {
            let old = MemberRef { group: proposer.group, index: old };
            state.matching.side_mut(old.group)[old.index] = None;
            if flags.get(old.group)[old.index] && state.has_untried(old, prefs) {
                state.push(old);
            }
            dumped = Some(old);
        }
        // A single active recipient stops waiting once it holds a partner.
        state.unqueue(recipient);
        state.matching.side_mut(recipient.group)[recipient.index] = Some(proposer.index);
        state.matching.side_mut(proposer.group)[proposer.index] = Some(recipient.index);
    } else if state.has_untried(proposer, prefs) {
        state.push(proposer);
    }

    StepEvent { proposer, recipient, accepted, dumped }
}

/// Final matching and the quantities reported per run.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchResult {
    pub matching: Matching,
    pub male_energy: Vec<usize>,
    pub female_energy: Vec<usize>,
    pub mean_male_energy: f64,
    pub mean_female_energy: f64,
    /// Population standard deviation of energies across the group's members.
    pub std_male_energy: f64,
    pub std_female_energy: f64,
    pub single_males: usize,
    pub single_females: usize,
    pub blocking_pairs: usize,
    pub proposal_events: u64,
}

impl MatchResult {
    pub fn from_matching(matching: Matching, prefs: &PreferenceSystem, proposal_events: u64) -> Self {
        let energies = |group: Group| -> Vec<usize> {
            (0..prefs.size(group)).map(|i| energy_of(&matching, prefs, MemberRef { group, index: i })).collect()
        };
        let male_energy = energies(Group::Male);
        let female_energy = energies(Group::Female);
        let (mean_male_energy, std_male_energy) = mean_std(&male_energy);
        let (mean_female_energy, std_female_energy) = mean_std(&female_energy);
        let pairs = matching.pair_count();
        Self {
            blocking_pairs: count_blocking_pairs(&matching, prefs),
            single_males: prefs.n_males() - pairs,
            single_females: prefs.n_females() - pairs,
            matching,
            male_energy,
            female_energy,
            mean_male_energy,
            mean_female_energy,
            std_male_energy,
            std_female_energy,
            proposal_events,
        }
    }

    pub fn energies(&self, group: Group) -> &[usize] {
        match group {
            Group::Male => &self.male_energy,
            Group::Female => &self.female_energy,
        }
    }
}

fn mean_std(values: &[usize]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<usize>() as f64 / n;
    let var = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Runs the queue dry and reports the outcome. The initial queue shuffle
/// consumes `rng`.
pub fn run_matching(prefs: &PreferenceSystem, flags: &ActivationFlags, rng: &mut Rng) -> MatchResult {
    let mut state = init_state(prefs, flags, rng);
    run_to_completion(&mut state, prefs, flags);
    let events = state.proposal_events;
    MatchResult::from_matching(state.into_matching(), prefs, events)
}

pub fn run_to_completion(state: &mut MatchState, prefs: &PreferenceSystem, flags: &ActivationFlags) {
    while !state.is_done() {
        step(state, prefs, flags);
    }
}

/// One full instance from `config.seed`: preferences, then activation flags,
/// then the queue shuffle, all from a single stream.
pub fn simulate(config: &SimConfig) -> MatchResult {
    let mut rng = Rng::new(config.seed);
    let prefs = generate_preferences(config.n_males, config.n_females, &mut rng);
    let flags = ActivationFlags::draw(config, &mut rng);
    run_matching(&prefs, &flags, &mut rng)
}

/// Pairs (m, f), not matched together, where both strictly prefer each other
/// to their current situation. Singles prefer anyone.
pub fn count_blocking_pairs(matching: &Matching, prefs: &PreferenceSystem) -> usize {
    let female_energy: Vec<usize> =
        (0..prefs.n_females()).map(|f| energy_of(matching, prefs, MemberRef::female(f))).collect();
    let mut count = 0;
    for m in 0..prefs.n_males() {
        let male_energy = energy_of(matching, prefs, MemberRef::male(m));
        // Only females m ranks strictly above his current partner can block.
        for &f in &prefs.row(Group::Male, m)[..male_energy - 1] {
            let f = f as usize;
            if prefs.rank(Group::Female, f, m) < female_energy[f] {
                count += 1;
            }
        }
    }
    count
}
