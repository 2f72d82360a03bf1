//! Monte Carlo sweeps over female group size and activity presets.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io;

use rayon::prelude::*;
use thiserror::Error;

use crate::activation::ActivationFlags;
use crate::config::{check_probability, ActivationMode, ConfigError, SimConfig};
use crate::engine::run_matching;
use crate::preferences::generate_preferences;
use crate::rng::{derive_child_seed, Rng};

pub const CSV_HEADER: &str = "alpha,beta,n_males,n_females,rep,mean_male_energy,mean_female_energy,\
std_male_energy,std_female_energy,single_males,single_females,blocking_pairs,proposal_events,child_seed";

pub const DEFAULT_MALES: usize = 1000;
pub const DEFAULT_REPETITIONS: usize = 50;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("female sizes must be strictly increasing and at least 1")]
    BadFemaleSizes,
    #[error("a sweep needs at least one {0}")]
    Empty(&'static str),
    #[error("could not build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub n_males: usize,
    pub m_values: Vec<usize>,
    /// `(alpha, beta)` pairs.
    pub configs: Vec<(f64, f64)>,
    pub repetitions: usize,
    pub master_seed: u64,
    pub activation_mode: ActivationMode,
}

impl SweepSpec {
    /// Spec over the default female-size grid for `n_males`.
    pub fn new(n_males: usize, configs: Vec<(f64, f64)>, repetitions: usize, master_seed: u64) -> Self {
        Self {
            n_males,
            m_values: default_m_values(n_males),
            configs,
            repetitions,
            master_seed,
            activation_mode: ActivationMode::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.n_males == 0 {
            return Err(ConfigError::EmptyGroup { name: "n_males", value: 0 }.into());
        }
        if self.m_values.is_empty() {
            return Err(SweepError::Empty("female size"));
        }
        if self.m_values[0] == 0 || self.m_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SweepError::BadFemaleSizes);
        }
        if self.configs.is_empty() {
            return Err(SweepError::Empty("(alpha, beta) config"));
        }
        if self.repetitions == 0 {
            return Err(SweepError::Empty("repetition"));
        }
        for &(alpha, beta) in &self.configs {
            check_probability("alpha", alpha)?;
            check_probability("beta", beta)?;
        }
        Ok(())
    }

    pub fn job_count(&self) -> usize {
        self.configs.len() * self.m_values.len() * self.repetitions
    }

    /// Linear index of a (config, female size, repetition) triple; it feeds
    /// the child seed so each row can be regenerated on its own.
    pub fn triple_index(&self, config_idx: usize, m_idx: usize, rep: usize) -> u64 {
        ((config_idx * self.m_values.len() + m_idx) * self.repetitions + rep) as u64
    }
}

/// Female sizes 0.1N, 0.2N, ..., 2.0N, rounded half up, at least 1, with
/// duplicates (possible for tiny N) removed.
pub fn default_m_values(n_males: usize) -> Vec<usize> {
    let mut values: Vec<usize> = (1..=20).map(|k| ((k * n_males + 5) / 10).max(1)).collect();
    values.dedup();
    values
}

/// One repetition of one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub beta: f64,
    pub n_males: usize,
    pub n_females: usize,
    pub rep_index: usize,
    pub mean_male_energy: f64,
    pub mean_female_energy: f64,
    pub std_male_energy: f64,
    pub std_female_energy: f64,
    pub single_males: usize,
    pub single_females: usize,
    pub blocking_pairs: usize,
    pub proposal_events: u64,
    pub child_seed: u64,
}

impl SweepRow {
    pub fn write_csv_line(&self, out: &mut String) {
        // Writing to a String cannot fail.
        let _ = writeln!(
            out,
            "{:.6},{:.6},{},{},{},{:.6},{:.6},{:.6},{:.6},{},{},{},{},{}",
            self.alpha,
            self.beta,
            self.n_males,
            self.n_females,
            self.rep_index,
            self.mean_male_energy,
            self.mean_female_energy,
            self.std_male_energy,
            self.std_female_energy,
            self.single_males,
            self.single_females,
            self.blocking_pairs,
            self.proposal_events,
            self.child_seed
        );
    }
}

/// Runs one triple from its child seed: preferences, then activation flags,
/// then the queue shuffle.
pub fn run_triple(spec: &SweepSpec, config_idx: usize, m_idx: usize, rep: usize) -> SweepRow {
    let (alpha, beta) = spec.configs[config_idx];
    let n_females = spec.m_values[m_idx];
    let child_seed = derive_child_seed(spec.master_seed, spec.triple_index(config_idx, m_idx, rep));
    let config = SimConfig {
        n_males: spec.n_males,
        n_females,
        alpha,
        beta,
        seed: child_seed,
        activation_mode: spec.activation_mode,
    };
    let mut rng = Rng::new(child_seed);
    let prefs = generate_preferences(config.n_males, config.n_females, &mut rng);
    let flags = ActivationFlags::draw(&config, &mut rng);
    let result = run_matching(&prefs, &flags, &mut rng);
    SweepRow {
        alpha,
        beta,
        n_males: spec.n_males,
        n_females,
        rep_index: rep,
        mean_male_energy: result.mean_male_energy,
        mean_female_energy: result.mean_female_energy,
        std_male_energy: result.std_male_energy,
        std_female_energy: result.std_female_energy,
        single_males: result.single_males,
        single_females: result.single_females,
        blocking_pairs: result.blocking_pairs,
        proposal_events: result.proposal_events,
        child_seed,
    }
}

/// Runs every triple, in parallel on up to `workers` threads (0 = one per
/// logical CPU). Rows come back in canonical order: configs, then female
/// sizes, then repetitions.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<Vec<SweepRow>, SweepError> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    let (n_m, reps) = (spec.m_values.len(), spec.repetitions);
    let rows = pool.install(|| {
        (0..spec.job_count())
            .into_par_iter()
            .map(|job| run_triple(spec, job / (n_m * reps), job / reps % n_m, job % reps))
            .collect()
    });
    Ok(rows)
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(CSV_HEADER.len() + 1 + rows.len() * 120);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        row.write_csv_line(&mut out);
    }
    out
}

pub fn write_csv<W: io::Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    out.write_all(rows_to_csv(rows).as_bytes())?;
    out.flush()
}

/// Statistics over the repetitions of one `(alpha, beta, n_females)` point.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub alpha: f64,
    pub beta: f64,
    pub n_males: usize,
    pub n_females: usize,
    pub repetitions: usize,
    pub mean_male_energy: f64,
    /// Sample standard deviation across repetitions (0 for a single repetition).
    pub std_male_energy: f64,
    pub mean_female_energy: f64,
    pub std_female_energy: f64,
    pub mean_single_males: f64,
    pub mean_single_females: f64,
    pub mean_blocking_pairs: f64,
}

impl SummaryRow {
    pub fn se_male(&self) -> f64 {
        self.std_male_energy / (self.repetitions as f64).sqrt()
    }

    pub fn se_female(&self) -> f64 {
        self.std_female_energy / (self.repetitions as f64).sqrt()
    }

    pub fn total_energy(&self) -> f64 {
        self.mean_male_energy + self.mean_female_energy
    }
}

fn mean_and_sample_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups rows by `(alpha, beta, n_females)` in order of first appearance.
pub fn aggregate(rows: &[SweepRow]) -> Vec<SummaryRow> {
    let mut order: Vec<(u64, u64, usize, usize)> = Vec::new();
    let mut groups: HashMap<(u64, u64, usize, usize), Vec<&SweepRow>> = HashMap::new();
    for row in rows {
        let key = (row.alpha.to_bits(), row.beta.to_bits(), row.n_males, row.n_females);
        groups
            .entry(key)
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(row);
    }
    order
        .into_iter()
        .map(|key| {
            let g = &groups[&key];
            let (mean_male, std_male) = mean_and_sample_std(g.iter().map(|r| r.mean_male_energy));
            let (mean_female, std_female) = mean_and_sample_std(g.iter().map(|r| r.mean_female_energy));
            let avg = |f: fn(&SweepRow) -> f64| g.iter().map(|r| f(r)).sum::<f64>() / g.len() as f64;
            SummaryRow {
                alpha: g[0].alpha,
                beta: g[0].beta,
                n_males: g[0].n_males,
                n_females: g[0].n_females,
                repetitions: g.len(),
                mean_male_energy: mean_male,
                std_male_energy: std_male,
                mean_female_energy: mean_female,
                std_female_energy: std_female,
                mean_single_males: avg(|r| r.single_males as f64),
                mean_single_females: avg(|r| r.single_females as f64),
                mean_blocking_pairs: avg(|r| r.blocking_pairs as f64),
            }
        })
        .collect()
}

/// Standard error of the difference of two independent means.
pub fn pooled_se(se_a: f64, se_b: f64) -> f64 {
    (se_a * se_a + se_b * se_b).sqrt()
}

/// A named group of `(alpha, beta)` configurations reproduced together.
#[derive(Clone, Debug, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub configs: Vec<(f64, f64)>,
}

const VARIED: [f64; 4] = [0.1, 0.4, 0.6, 0.9];

/// The four reproduction grids: the extremes, females partly active with
/// all males active, complementary fractions, and males partly active with
/// all females active.
pub fn paper_presets() -> Vec<Preset> {
    vec![
        Preset { name: "extremes", configs: vec![(1.0, 1.0), (1.0, 0.0), (0.0, 1.0), (0.5, 0.5)] },
        Preset { name: "case1", configs: VARIED.iter().map(|&a| (a, 1.0)).collect() },
        Preset { name: "case2", configs: VARIED.iter().zip(VARIED.iter().rev()).map(|(&a, &b)| (a, b)).collect() },
        Preset { name: "case3", configs: VARIED.iter().map(|&b| (1.0, b)).collect() },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec() -> SweepSpec {
        SweepSpec {
            n_males: 10,
            m_values: vec![5, 10],
            configs: vec![(0.0, 1.0), (0.5, 0.5)],
            repetitions: 3,
            master_seed: 9,
            activation_mode: ActivationMode::Bernoulli,
        }
    }

    #[test]
    fn default_grid() {
        let g = default_m_values(1000);
        assert_eq!(g.len(), 20);
        assert_eq!((g[0], g[9], g[19]), (100, 1000, 2000));
        assert_eq!(default_m_values(5), vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10]);
        assert_eq!(default_m_values(1)[0], 1);
        for n in 1..60 {
            assert!(default_m_values(n).windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn validation() {
        assert!(tiny_spec().validate().is_ok());
        let mut s = tiny_spec();
        s.m_values = vec![5, 5];
        assert!(matches!(s.validate(), Err(SweepError::BadFemaleSizes)));
        let mut s = tiny_spec();
        s.repetitions = 0;
        assert!(s.validate().is_err());
        let mut s = tiny_spec();
        s.configs.push((1.2, 0.0));
        assert!(matches!(s.validate(), Err(SweepError::Config(_))));
    }

    #[test]
    fn single_job_single_row() {
        let spec = SweepSpec { m_values: vec![7], configs: vec![(0.0, 1.0)], repetitions: 1, ..tiny_spec() };
        assert_eq!(run_sweep(&spec, 1).unwrap().len(), 1);
    }

    #[test]
    fn canonical_row_order_and_seeds() {
        let spec = tiny_spec();
        let rows = run_sweep(&spec, 4).unwrap();
        assert_eq!(rows.len(), 12);
        let mut k = 0;
        for (ci, &(a, b)) in spec.configs.iter().enumerate() {
            for (mi, &m) in spec.m_values.iter().enumerate() {
                for rep in 0..3 {
                    let r = &rows[k];
                    assert_eq!((r.alpha, r.beta, r.n_females, r.rep_index), (a, b, m, rep));
                    assert_eq!(r.child_seed, derive_child_seed(9, spec.triple_index(ci, mi, rep)));
                    assert_eq!(*r, run_triple(&spec, ci, mi, rep));
                    k += 1;
                }
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let spec = tiny_spec();
        assert_eq!(rows_to_csv(&run_sweep(&spec, 1).unwrap()), rows_to_csv(&run_sweep(&spec, 8).unwrap()));
    }

    #[test]
    fn csv_format() {
        let row = SweepRow {
            alpha: 0.1,
            beta: 1.0,
            n_males: 3,
            n_females: 2,
            rep_index: 4,
            mean_male_energy: 2.0 / 3.0,
            mean_female_energy: 1.5,
            std_male_energy: 0.0,
            std_female_energy: 0.25,
            single_males: 1,
            single_females: 0,
            blocking_pairs: 0,
            proposal_events: 5,
            child_seed: u64::MAX,
        };
        let csv = rows_to_csv(&[row]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(
            lines.next(),
            Some("0.100000,1.000000,3,2,4,0.666667,1.500000,0.000000,0.250000,1,0,0,5,18446744073709551615")
        );
        assert!(CSV_HEADER.split(',').count() == 14);
    }

    #[test]
    fn aggregate_edge_cases() {
        assert!(aggregate(&[]).is_empty());
        let spec = SweepSpec { m_values: vec![7], configs: vec![(0.5, 0.5)], repetitions: 1, ..tiny_spec() };
        let row = run_triple(&spec, 0, 0, 0);
        let one = aggregate(std::slice::from_ref(&row));
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].mean_male_energy, row.mean_male_energy);
        assert_eq!(one[0].std_male_energy, 0.0);
        let two = aggregate(&[row.clone(), row.clone()]);
        assert_eq!(two[0].mean_female_energy, row.mean_female_energy);
        assert_eq!(two[0].std_female_energy, 0.0);
        assert_eq!(two[0].repetitions, 2);
    }

    #[test]
    fn aggregate_groups_in_order() {
        let rows = run_sweep(&tiny_spec(), 2).unwrap();
        let summary = aggregate(&rows);
        assert_eq!(summary.len(), 4);
        assert_eq!((summary[1].alpha, summary[1].n_females), (0.0, 10));
        assert_eq!((summary[2].alpha, summary[2].n_females), (0.5, 5));
        let manual: f64 = rows[3..6].iter().map(|r| r.mean_male_energy).sum::<f64>() / 3.0;
        assert!((summary[1].mean_male_energy - manual).abs() < 1e-12);
    }

    #[test]
    fn one_sided_equal_sizes_match_everyone() {
        let spec = SweepSpec { m_values: vec![10], configs: vec![(0.0, 1.0)], repetitions: 5, ..tiny_spec() };
        for row in run_sweep(&spec, 1).unwrap() {
            assert_eq!((row.single_males, row.single_females, row.blocking_pairs), (0, 0, 0));
        }
    }

    #[test]
    fn presets() {
        let p = paper_presets();
        let names: Vec<_> = p.iter().map(|p| p.name).collect();
        assert_eq!(names, ["extremes", "case1", "case2", "case3"]);
        assert!(p.iter().all(|p| p.configs.len() == 4));
        assert!(p[0].configs.contains(&(0.5, 0.5)));
        assert!(p[3].configs.iter().all(|&(a, _)| a == 1.0));
        assert_eq!(p[2].configs, vec![(0.1, 0.9), (0.4, 0.6), (0.6, 0.4), (0.9, 0.1)]);
    }
}
