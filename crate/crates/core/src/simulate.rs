//! Seeded Monte Carlo simulation of voting trajectories.
//!
//! # Random numbers
//!
//! Every replication (and every batch of [`estimate_mu_plus`]) owns one
//! ChaCha8 stream: the generator is seeded with `seed` through
//! `SeedableRng::seed_from_u64` and then switched to stream number
//! `replication` with `set_stream`. ChaCha offers `2^64` independent streams
//! per key, so results never depend on how work is scheduled. Normal variates
//! come from the ziggurat sampler of `rand_distr` (an exact rejection method)
//! scaled to `N(μ, σ²)`. Per-replication statistics are merged in index
//! order, which makes every output bit-identical for a given seed whatever
//! the number of worker threads.
//!
//! Rejected steps contribute zero increments, so the per-step means estimate
//! the unconditional expectations of the analytic module.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, ViseError};
use crate::model::{validate, Configuration, EnvironmentParams, SocietyParams, VotingRule};
use crate::special::first_count_above;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub society: SocietyParams,
    pub env: EnvironmentParams,
    pub steps: u64,
    pub replications: u32,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<Configuration> {
        if self.steps == 0 {
            return Err(ViseError::validation("steps", "must be at least 1"));
        }
        if self.replications == 0 {
            return Err(ViseError::validation("replications", "must be at least 1"));
        }
        validate(self.society, self.env)
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl MeanEstimate {
    /// `|mean - reference|` in standard errors; infinite when the error is
    /// zero and the values differ.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = (self.mean - reference).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }
}

/// Welford accumulator with Chan's pairwise merge.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    pub(crate) fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub(crate) fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        let w = other.count as f64 / n;
        self.mean += delta * w;
        self.m2 += other.m2 + delta * delta * self.count as f64 * w;
        self.count += other.count;
    }

    pub(crate) fn estimate(&self) -> MeanEstimate {
        let var = if self.count > 1 {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        } else {
            0.0
        };
        MeanEstimate {
            mean: self.mean,
            std_error: (var / self.count.max(1) as f64).sqrt(),
            samples: self.count,
        }
    }
}

/// Mean, minimum and maximum final capital over one role.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapitalSummary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct CapitalAccumulator {
    sum: f64,
    count: u64,
    min: f64,
    max: f64,
}

impl CapitalAccumulator {
    fn push_all(&mut self, xs: &[f64]) {
        for &x in xs {
            if self.count == 0 {
                self.min = x;
                self.max = x;
            } else {
                self.min = self.min.min(x);
                self.max = self.max.max(x);
            }
            self.sum += x;
            self.count += 1;
        }
    }

    fn merge(&mut self, other: &CapitalAccumulator) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        self.sum += other.sum;
        self.count += other.count;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
    }

    fn summary(&self) -> Option<CapitalSummary> {
        (self.count > 0).then(|| CapitalSummary {
            mean: self.sum / self.count as f64,
            min: self.min,
            max: self.max,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FinalCapitals {
    pub egoist: Option<CapitalSummary>,
    pub group: Option<CapitalSummary>,
}

/// Per-step empirical means over all replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryStats {
    /// `None` without egoists.
    pub mean_egoist_step: Option<MeanEstimate>,
    /// `None` without a group.
    pub mean_group_step: Option<MeanEstimate>,
    pub mean_society_step: MeanEstimate,
    pub acceptance_rate: f64,
    pub final_capitals: FinalCapitals,
    pub steps: u64,
    pub replications: u32,
}

/// One row of a trajectory dump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: u64,
    pub accepted: bool,
    pub egoist_yes: u32,
    pub group_yes: bool,
    /// Mean increment over egoists actually applied this step (0 if rejected).
    pub egoist_mean_increment: f64,
    pub group_mean_increment: f64,
    pub society_mean_increment: f64,
}

/// Header of [`write_trajectory_csv`] output.
pub const TRAJECTORY_HEADER: [&str; 7] = [
    "step",
    "accepted",
    "egoist_yes",
    "group_yes",
    "egoist_mean_increment",
    "group_mean_increment",
    "society_mean_increment",
];

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A single replication, advanced one proposal at a time.
pub struct Trajectory {
    rule: VotingRule,
    normal: Normal<f64>,
    rng: ChaCha8Rng,
    ell: usize,
    proposal: Vec<f64>,
    capitals: Vec<f64>,
    step: u64,
}

impl Trajectory {
    pub fn new(config: &SimulationConfig, replication: u32) -> Result<Self> {
        let cfg = config.validate()?;
        let n = cfg.society.n as usize;
        let normal =
            Normal::new(cfg.env.mu, cfg.env.sigma).map_err(|e| ViseError::validation("sigma", e.to_string()))?;
        Ok(Trajectory {
            rule: VotingRule::new(&cfg.society),
            normal,
            rng: stream_rng(config.seed, u64::from(replication)),
            ell: cfg.society.ell as usize,
            proposal: vec![0.0; n],
            capitals: vec![0.0; n],
            step: 0,
        })
    }

    /// Draws a proposal, votes on it, and applies it if accepted.
    pub fn advance(&mut self) -> StepRecord {
        for x in self.proposal.iter_mut() {
            *x = self.normal.sample(&mut self.rng);
        }
        let outcome = self.rule.tally(&self.proposal);
        let (mut ego_sum, mut group_sum) = (0.0, 0.0);
        if outcome.accepted {
            for (i, (c, &d)) in self.capitals.iter_mut().zip(&self.proposal).enumerate() {
                *c += d;
                if i < self.ell {
                    ego_sum += d;
                } else {
                    group_sum += d;
                }
            }
        }
        let n = self.proposal.len();
        let g = n - self.ell;
        let record = StepRecord {
            step: self.step,
            accepted: outcome.accepted,
            egoist_yes: outcome.egoist_yes,
            group_yes: outcome.group_yes,
            egoist_mean_increment: if self.ell > 0 { ego_sum / self.ell as f64 } else { 0.0 },
            group_mean_increment: if g > 0 { group_sum / g as f64 } else { 0.0 },
            society_mean_increment: (ego_sum + group_sum) / n as f64,
        };
        self.step += 1;
        record
    }

    /// The proposal drawn by the last call to [`Trajectory::advance`].
    pub fn last_proposal(&self) -> &[f64] {
        &self.proposal
    }

    pub fn capitals(&self) -> &[f64] {
        &self.capitals
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct ReplicationSummary {
    egoist: Moments,
    group: Moments,
    society: Moments,
    accepted: u64,
    egoist_capital: CapitalAccumulator,
    group_capital: CapitalAccumulator,
}

fn run_replication(config: &SimulationConfig, replication: u32) -> Result<ReplicationSummary> {
    let mut traj = Trajectory::new(config, replication)?;
    let mut s = ReplicationSummary::default();
    for _ in 0..config.steps {
        let r = traj.advance();
        s.egoist.push(r.egoist_mean_increment);
        s.group.push(r.group_mean_increment);
        s.society.push(r.society_mean_increment);
        s.accepted += u64::from(r.accepted);
    }
    let (ego, group) = traj.capitals().split_at(config.society.ell as usize);
    s.egoist_capital.push_all(ego);
    s.group_capital.push_all(group);
    Ok(s)
}

/// Runs all replications (concurrently) and merges them in index order.
pub fn run(config: &SimulationConfig) -> Result<TrajectoryStats> {
    let cfg = config.validate()?;
    let parts = (0..config.replications)
        .into_par_iter()
        .map(|r| run_replication(config, r))
        .collect::<Result<Vec<_>>>()?;
    let mut total = ReplicationSummary::default();
    for p in &parts {
        total.egoist.merge(&p.egoist);
        total.group.merge(&p.group);
        total.society.merge(&p.society);
        total.accepted += p.accepted;
        total.egoist_capital.merge(&p.egoist_capital);
        total.group_capital.merge(&p.group_capital);
    }
    let draws = config.steps * u64::from(config.replications);
    Ok(TrajectoryStats {
        mean_egoist_step: (cfg.society.ell > 0).then(|| total.egoist.estimate()),
        mean_group_step: (cfg.derived.g > 0).then(|| total.group.estimate()),
        mean_society_step: total.society.estimate(),
        acceptance_rate: total.accepted as f64 / draws as f64,
        final_capitals: FinalCapitals {
            egoist: total.egoist_capital.summary(),
            group: total.group_capital.summary(),
        },
        steps: config.steps,
        replications: config.replications,
    })
}

/// Step-by-step records of one replication.
pub fn trajectory_records(config: &SimulationConfig, replication: u32) -> Result<Vec<StepRecord>> {
    let mut traj = Trajectory::new(config, replication)?;
    Ok((0..config.steps).map(|_| traj.advance()).collect())
}

/// Writes records as CSV with the [`TRAJECTORY_HEADER`] columns.
pub fn write_trajectory_csv<W: Write>(writer: W, records: &[StepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Minimum sample count accepted by [`estimate_mu_plus`].
pub const MIN_MU_PLUS_SAMPLES: u64 = 10_000;
const MU_PLUS_BATCH: u64 = 1 << 16;

/// Monte Carlo estimate of `μ⁺(μ, σ, ℓ, ℓ₀)`: draw `ℓ` i.i.d. normals, accept
/// iff strictly more than `ℓ₀` are positive, and record the average
/// increment of the `ℓ` voters (0 when rejected).
pub fn estimate_mu_plus(mu: f64, sigma: f64, ell: u32, ell0: f64, samples: u64, seed: u64) -> Result<MeanEstimate> {
    if samples < MIN_MU_PLUS_SAMPLES {
        return Err(ViseError::validation(
            "samples",
            format!("{samples} is below the minimum of {MIN_MU_PLUS_SAMPLES}"),
        ));
    }
    if ell == 0 {
        return Err(ViseError::validation("ell", "needs at least one voter"));
    }
    if ell0.is_nan() {
        return Err(ViseError::validation("ell0", "is NaN"));
    }
    let normal = Normal::new(mu, sigma)
        .ok()
        .filter(|_| sigma > 0.0 && mu.is_finite())
        .ok_or_else(|| ViseError::validation("sigma", format!("mu = {mu}, sigma = {sigma}")))?;
    let required = first_count_above(ell0);
    if required > i64::from(ell) {
        return Ok(MeanEstimate {
            mean: 0.0,
            std_error: 0.0,
            samples,
        });
    }

    let batches = samples.div_ceil(MU_PLUS_BATCH);
    let parts: Vec<Moments> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b);
            let count = MU_PLUS_BATCH.min(samples - b * MU_PLUS_BATCH);
            let mut m = Moments::default();
            for _ in 0..count {
                let mut yes = 0i64;
                let mut sum = 0.0;
                for _ in 0..ell {
                    let x = normal.sample(&mut rng);
                    yes += i64::from(x > 0.0);
                    sum += x;
                }
                m.push(if yes >= required { sum / f64::from(ell) } else { 0.0 });
            }
            m
        })
        .collect();
    let mut total = Moments::default();
    for p in &parts {
        total.merge(p);
    }
    Ok(total.estimate())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(n: u32, ell: u32, alpha: f64, t: f64, mu: f64, steps: u64, reps: u32) -> SimulationConfig {
        SimulationConfig {
            society: SocietyParams::new(n, ell, alpha, t),
            env: EnvironmentParams::new(mu, 1.0).unwrap(),
            steps,
            replications: reps,
            seed: 7,
        }
    }

    #[test]
    fn moments_merge_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert_eq!(a.count, all.count);
        assert!((a.mean - all.mean).abs() < 1e-12);
        assert!((a.m2 - all.m2).abs() < 1e-8 * all.m2);
    }

    #[test]
    fn unanimity_threshold_blocks_everything() {
        let stats = run(&config(10, 5, 1.0, 0.0, 0.3, 2000, 2)).unwrap();
        assert_eq!(stats.acceptance_rate, 0.0);
        assert_eq!(stats.mean_society_step.mean, 0.0);
        assert_eq!(stats.mean_egoist_step.unwrap().std_error, 0.0);
        let caps = stats.final_capitals;
        assert_eq!(caps.egoist.unwrap().max, 0.0);
        assert_eq!(caps.group.unwrap().min, 0.0);
    }

    #[test]
    fn permissive_group_passes_everything() {
        let stats = run(&config(20, 0, 0.5, -1e6, 0.25, 20_000, 1)).unwrap();
        assert_eq!(stats.acceptance_rate, 1.0);
        let g = stats.mean_group_step.unwrap();
        assert!(g.z_score(0.25) < 4.0);
        assert!(stats.mean_egoist_step.is_none());
    }

    #[test]
    fn society_mean_is_weighted_average() {
        let stats = run(&config(10, 3, 0.5, 0.2, -0.1, 5000, 3)).unwrap();
        let e = stats.mean_egoist_step.unwrap().mean;
        let g = stats.mean_group_step.unwrap().mean;
        assert!((stats.mean_society_step.mean - (0.3 * e + 0.7 * g)).abs() < 1e-12);
    }

    #[test]
    fn zero_steps_rejected() {
        assert!(run(&config(10, 3, 0.5, 0.0, 0.0, 0, 1)).is_err());
        assert!(run(&config(10, 3, 0.5, 0.0, 0.0, 10, 0)).is_err());
        assert!(run(&config(10, 11, 0.5, 0.0, 0.0, 10, 1)).is_err());
    }

    #[test]
    fn mu_plus_estimate_edges() {
        let e = estimate_mu_plus(0.3, 1.0, 10, 10.0, 10_000, 1).unwrap();
        assert_eq!((e.mean, e.std_error), (0.0, 0.0));
        let e = estimate_mu_plus(0.3, 1.0, 10, -1.0, 50_000, 1).unwrap();
        assert!(e.z_score(0.3) < 4.0);
        assert!(estimate_mu_plus(0.3, 1.0, 10, 1.0, 9_999, 1).is_err());
        assert!(estimate_mu_plus(0.3, 0.0, 10, 1.0, 10_000, 1).is_err());
    }

    #[test]
    fn trajectory_csv_header() {
        let recs = trajectory_records(&config(6, 3, 0.5, 0.0, 0.0, 4, 1), 0).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), TRAJECTORY_HEADER.join(","));
        assert_eq!(text.lines().count(), 5);
    }
}
