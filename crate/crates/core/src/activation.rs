//! Which members send proposals.

use crate::config::{ActivationMode, SimConfig};
use crate::preferences::Group;
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActivationFlags {
    pub male_active: Vec<bool>,
    pub female_active: Vec<bool>,
}

impl ActivationFlags {
    /// Draws male flags (fraction `beta`) first, then female flags (`alpha`).
    pub fn draw(config: &SimConfig, rng: &mut Rng) -> Self {
        let male_active = assign_active(config.n_males, config.beta, config.activation_mode, rng);
        let female_active = assign_active(config.n_females, config.alpha, config.activation_mode, rng);
        Self { male_active, female_active }
    }

    /// Flags with every member of `group` active and nobody on the other side.
    pub fn one_sided(n_males: usize, n_females: usize, group: Group) -> Self {
        Self {
            male_active: vec![group == Group::Male; n_males],
            female_active: vec![group == Group::Female; n_females],
        }
    }

    pub fn get(&self, group: Group) -> &[bool] {
        match group {
            Group::Male => &self.male_active,
            Group::Female => &self.female_active,
        }
    }

    pub fn count(&self, group: Group) -> usize {
        self.get(group).iter().filter(|&&a| a).count()
    }

    pub fn swapped(&self) -> Self {
        Self { male_active: self.female_active.clone(), female_active: self.male_active.clone() }
    }
}

/// Number of active members in exact-count mode: `round(p * size)`, halves
/// rounding away from zero.
pub fn exact_active_count(group_size: usize, p: f64) -> usize {
    ((p * group_size as f64).round() as usize).min(group_size)
}

pub fn assign_active(group_size: usize, p: f64, mode: ActivationMode, rng: &mut Rng) -> Vec<bool> {
    debug_assert!((0.0..=1.0).contains(&p));
    match mode {
        ActivationMode::Bernoulli => (0..group_size).map(|_| rng.bernoulli(p)).collect(),
        ActivationMode::ExactCount => {
            let k = exact_active_count(group_size, p);
            let mut indices: Vec<usize> = (0..group_size).collect();
            // Partial Fisher-Yates: the top k slots end up as a uniform k-subset.
            for i in (group_size - k..group_size).rev() {
                let j = rng.below_usize(i + 1);
                indices.swap(i, j);
            }
            let mut flags = vec![false; group_size];
            for &i in &indices[group_size - k..] {
                flags[i] = true;
            }
            flags
        }
    }
}
