//! Parameter records and the one-step voting rule.
//!
//! Participants `0..ell` are egoists and `ell..n` are group members. An
//! egoist supports a proposal iff its own increment is strictly positive;
//! the group supports it as a bloc iff the mean increment of its members
//! strictly exceeds the claims threshold `t`. A proposal passes iff the
//! number of supporters strictly exceeds `alpha·n`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ViseError};
use crate::special::first_count_above;

/// Relative tolerance used to snap `alpha·n` onto the integer lattice, so
/// that e.g. `0.57 * 100 = 56.999…` is treated as 57 votes.
const LATTICE_SNAP: f64 = 1e-9;

/// Mean and scale of the i.i.d. normal proposal increments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentParams {
    pub mu: f64,
    pub sigma: f64,
}

impl EnvironmentParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        let env = EnvironmentParams { mu, sigma };
        env.check()?;
        Ok(env)
    }

    fn check(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(ViseError::validation("mu", format!("{} is not finite", self.mu)));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(ViseError::validation(
                "sigma",
                format!("{} must be positive and finite", self.sigma),
            ));
        }
        Ok(())
    }

    pub fn mu_over_sigma(&self) -> f64 {
        self.mu / self.sigma
    }
}

/// Society composition, majority threshold and the group's claims threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SocietyParams {
    /// Society size.
    pub n: u32,
    /// Number of egoists; the remaining `n - ell` participants form the group.
    pub ell: u32,
    /// Strict relative majority threshold.
    pub alpha: f64,
    /// Group claims threshold, in capital units.
    pub t: f64,
}

impl SocietyParams {
    pub fn new(n: u32, ell: u32, alpha: f64, t: f64) -> Self {
        SocietyParams { n, ell, alpha, t }
    }

    /// Builds a society from an egoist share; `delta·n` must land on an
    /// integer (up to rounding noise).
    pub fn from_delta(n: u32, delta: f64, alpha: f64, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(ViseError::validation("delta", format!("{delta} is not in [0, 1]")));
        }
        let ell = delta * f64::from(n);
        let rounded = ell.round();
        if (ell - rounded).abs() > 1e-6 {
            return Err(ViseError::validation(
                "delta",
                format!("{delta}·{n} = {ell} is not a whole number of egoists"),
            ));
        }
        Ok(SocietyParams::new(n, rounded as u32, alpha, t))
    }

    pub fn with_t(self, t: f64) -> Self {
        SocietyParams { t, ..self }
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        SocietyParams { alpha, ..self }
    }

    /// Group size `g = n - ell`.
    pub fn g(&self) -> u32 {
        self.n - self.ell
    }

    /// Egoist share `δ = ell/n`.
    pub fn delta(&self) -> f64 {
        f64::from(self.ell) / f64::from(self.n)
    }

    /// `β = ell/g`; undefined without a group.
    pub fn beta(&self) -> Option<f64> {
        (self.g() > 0).then(|| f64::from(self.ell) / f64::from(self.g()))
    }

    /// `γ = α + δ - 1`, the egoist share needed once the group supports a proposal.
    pub fn gamma(&self) -> f64 {
        self.alpha + self.delta() - 1.0
    }

    /// `α·n` in votes, snapped to the integer lattice.
    pub fn alpha_votes(&self) -> f64 {
        alpha_votes(self.alpha, self.n)
    }

    /// `γ·n = α·n - g` in votes, computed from the snapped `α·n`.
    pub fn gamma_votes(&self) -> f64 {
        self.alpha_votes() - f64::from(self.g())
    }

    fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(ViseError::validation("n", "society must have at least one member"));
        }
        if self.ell > self.n {
            return Err(ViseError::validation(
                "ell",
                format!("{} egoists exceed society size {}", self.ell, self.n),
            ));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ViseError::validation(
                "alpha",
                format!("{} is not in [0, 1]", self.alpha),
            ));
        }
        if self.t.is_nan() {
            return Err(ViseError::validation("t", "claims threshold is NaN"));
        }
        Ok(())
    }
}

/// `α·n`, snapped onto the nearest integer when within rounding noise of it.
pub fn alpha_votes(alpha: f64, n: u32) -> f64 {
    let raw = alpha * f64::from(n);
    let rounded = raw.round();
    if (raw - rounded).abs() <= LATTICE_SNAP * raw.abs().max(1.0) {
        rounded
    } else {
        raw
    }
}

/// Shares derived from a validated society.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedShares {
    pub g: u32,
    pub delta: f64,
    pub beta: Option<f64>,
    pub gamma: f64,
    pub alpha_votes: f64,
    pub gamma_votes: f64,
}

/// A society and environment that passed [`validate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub society: SocietyParams,
    pub env: EnvironmentParams,
    pub derived: DerivedShares,
}

impl Configuration {
    /// Same configuration with a different claims threshold.
    pub fn with_t(&self, t: f64) -> Configuration {
        Configuration {
            society: self.society.with_t(t),
            ..*self
        }
    }
}

/// Checks parameter bounds and populates the derived shares.
pub fn validate(society: SocietyParams, env: EnvironmentParams) -> Result<Configuration> {
    society.check()?;
    env.check()?;
    let derived = DerivedShares {
        g: society.g(),
        delta: society.delta(),
        beta: society.beta(),
        gamma: society.gamma(),
        alpha_votes: society.alpha_votes(),
        gamma_votes: society.gamma_votes(),
    };
    Ok(Configuration { society, env, derived })
}

/// One draw of the environment: the increments offered to every participant.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    increments: Vec<f64>,
}

impl Proposal {
    pub fn new(increments: Vec<f64>) -> Result<Self> {
        if let Some(bad) = increments.iter().find(|x| !x.is_finite()) {
            return Err(ViseError::validation(
                "increments",
                format!("proposal contains non-finite value {bad}"),
            ));
        }
        Ok(Proposal { increments })
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }
}

/// The tally that decides a proposal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VoteOutcome {
    pub egoist_yes: u32,
    pub group_yes: bool,
    pub total_yes: u32,
    pub accepted: bool,
    /// Mean increment over group members; `None` without a group.
    pub group_mean: Option<f64>,
}

/// Precomputed voting rule for repeated tallies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VotingRule {
    n: u32,
    ell: u32,
    t: f64,
    required_yes: i64,
}

impl VotingRule {
    pub fn new(society: &SocietyParams) -> Self {
        VotingRule {
            n: society.n,
            ell: society.ell,
            t: society.t,
            required_yes: first_count_above(society.alpha_votes()),
        }
    }

    /// Smallest number of supporters that passes a proposal; may exceed `n`.
    pub fn required_yes(&self) -> i64 {
        self.required_yes
    }

    /// Tallies raw increments laid out egoists first. `increments.len()` must equal `n`.
    pub fn tally(&self, increments: &[f64]) -> VoteOutcome {
        debug_assert_eq!(increments.len(), self.n as usize);
        let (egoists, group) = increments.split_at(self.ell as usize);
        let egoist_yes = egoists.iter().filter(|&&x| x > 0.0).count() as u32;
        let group_mean = (!group.is_empty()).then(|| group.iter().sum::<f64>() / group.len() as f64);
        let group_yes = group_mean.is_some_and(|m| m > self.t);
        let total_yes = egoist_yes + if group_yes { self.n - self.ell } else { 0 };
        VoteOutcome {
            egoist_yes,
            group_yes,
            total_yes,
            accepted: i64::from(total_yes) >= self.required_yes,
            group_mean,
        }
    }
}

/// Applies the voting rule to a concrete proposal.
pub fn tally_votes(proposal: &Proposal, society: &SocietyParams) -> Result<VoteOutcome> {
    if proposal.len() != society.n as usize {
        return Err(ViseError::validation(
            "increments",
            format!("proposal has {} entries, society has {}", proposal.len(), society.n),
        ));
    }
    Ok(VotingRule::new(society).tally(proposal.increments()))
}

/// Adds the proposal to `capitals` iff it was accepted.
pub fn apply_step(capitals: &mut [f64], outcome: &VoteOutcome, proposal: &Proposal) -> Result<()> {
    if capitals.len() != proposal.len() {
        return Err(ViseError::validation(
            "capitals",
            format!(
                "{} capitals for a proposal of length {}",
                capitals.len(),
                proposal.len()
            ),
        ));
    }
    if outcome.accepted {
        for (c, d) in capitals.iter_mut().zip(proposal.increments()) {
            *c += d;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn env() -> EnvironmentParams {
        EnvironmentParams::new(-1.0, 10.0).unwrap()
    }

    #[test]
    fn derived_shares() {
        let cfg = validate(SocietyParams::new(100, 50, 0.5, 0.0), env()).unwrap();
        assert_eq!(cfg.derived.delta, 0.5);
        assert_eq!(cfg.derived.g, 50);
        assert_eq!(cfg.derived.beta, Some(1.0));
        assert_eq!(cfg.derived.gamma, 0.0);

        let cfg = validate(SocietyParams::new(100, 30, 0.6, 0.0), env()).unwrap();
        assert!((cfg.derived.gamma + 0.1).abs() < 1e-15);
        assert_eq!(cfg.derived.gamma_votes, -10.0);
    }

    #[test]
    fn validation_names_the_field() {
        let err = validate(SocietyParams::new(100, 101, 0.5, 0.0), env()).unwrap_err();
        assert!(matches!(err, ViseError::Validation { field: "ell", .. }));
        let err = validate(SocietyParams::new(100, 10, 1.2, 0.0), env()).unwrap_err();
        assert!(matches!(err, ViseError::Validation { field: "alpha", .. }));
        let err = validate(
            SocietyParams::new(100, 10, 0.5, 0.0),
            EnvironmentParams { mu: 0.0, sigma: 0.0 },
        )
        .unwrap_err();
        assert!(matches!(err, ViseError::Validation { field: "sigma", .. }));
        assert!(validate(SocietyParams::new(0, 0, 0.5, 0.0), env()).is_err());
    }

    #[test]
    fn alpha_votes_snaps_to_lattice() {
        assert_eq!(alpha_votes(0.57, 100), 57.0);
        assert_eq!(alpha_votes(0.29, 100), 29.0);
        assert_eq!(alpha_votes(0.455, 100), 45.5);
    }

    #[test]
    fn from_delta_rounds_to_whole_egoists() {
        assert_eq!(SocietyParams::from_delta(100, 0.57, 0.5, 0.0).unwrap().ell, 57);
        assert!(SocietyParams::from_delta(100, 0.575, 0.5, 0.0).is_err());
    }

    #[test]
    fn unanimous_support() {
        let society = SocietyParams::new(10, 4, 0.99, 0.0);
        let out = tally_votes(&Proposal::new(vec![1.0; 10]).unwrap(), &society).unwrap();
        assert_eq!(out.total_yes, 10);
        assert!(out.group_yes && out.accepted);
    }

    #[test]
    fn no_support_is_rejected_even_at_zero_threshold() {
        let society = SocietyParams::new(6, 3, 0.0, 0.5);
        let p = Proposal::new(vec![-1.0, 0.0, -2.0, 0.5, 0.5, 0.5]).unwrap();
        let out = tally_votes(&p, &society).unwrap();
        assert_eq!(out.total_yes, 0);
        assert!(!out.group_yes);
        assert!(!out.accepted);
    }

    #[test]
    fn hand_tally() {
        let society = SocietyParams::new(4, 2, 0.5, 2.0);
        let p = Proposal::new(vec![1.0, -1.0, 3.0, 3.0]).unwrap();
        let out = tally_votes(&p, &society).unwrap();
        assert_eq!(out.egoist_yes, 1);
        assert!(out.group_yes);
        assert_eq!(out.total_yes, 3);
        assert!(out.accepted);
        assert_eq!(out.group_mean, Some(3.0));
    }

    #[test]
    fn ties_are_strict() {
        // group mean equal to t does not support; total equal to alpha·n does not pass
        let society = SocietyParams::new(4, 2, 0.5, 3.0);
        let p = Proposal::new(vec![1.0, 1.0, 3.0, 3.0]).unwrap();
        let out = tally_votes(&p, &society).unwrap();
        assert!(!out.group_yes);
        assert_eq!(out.total_yes, 2);
        assert!(!out.accepted);
    }

    #[test]
    fn wrong_length_proposal() {
        let society = SocietyParams::new(4, 2, 0.5, 0.0);
        assert!(tally_votes(&Proposal::new(vec![1.0; 3]).unwrap(), &society).is_err());
        assert!(Proposal::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn apply_step_cases() {
        let p = Proposal::new(vec![2.0, -1.0]).unwrap();
        let society = SocietyParams::new(2, 2, 0.0, 0.0);
        let accepted = tally_votes(&p, &society).unwrap();
        assert!(accepted.accepted);
        let mut caps = vec![0.0, 0.0];
        apply_step(&mut caps, &accepted, &p).unwrap();
        assert_eq!(caps, vec![2.0, -1.0]);

        let rejected = VoteOutcome {
            accepted: false,
            ..accepted
        };
        apply_step(&mut caps, &rejected, &p).unwrap();
        assert_eq!(caps, vec![2.0, -1.0]);

        let zeros = Proposal::new(vec![0.0, 0.0]).unwrap();
        apply_step(
            &mut caps,
            &VoteOutcome {
                accepted: true,
                ..accepted
            },
            &zeros,
        )
        .unwrap();
        assert_eq!(caps, vec![2.0, -1.0]);
        assert!(apply_step(&mut [0.0], &accepted, &p).is_err());
    }

    #[test]
    fn threshold_one_is_unreachable() {
        let rule = VotingRule::new(&SocietyParams::new(10, 3, 1.0, -5.0));
        assert_eq!(rule.required_yes(), 11);
        assert!(!rule.tally(&[1.0; 10]).accepted);
    }

    proptest! {
        #[test]
        fn gamma_formulation_agrees_with_total_count(
            n in 1u32..40,
            ell_frac in 0.0f64..=1.0,
            alpha in 0.0f64..=1.0,
            t in -1.0f64..1.0,
            seed in proptest::collection::vec(-2.0f64..2.0, 40),
        ) {
            let ell = ((f64::from(n) * ell_frac).floor() as u32).min(n);
            let society = SocietyParams::new(n, ell, alpha, t);
            let p = Proposal::new(seed[..n as usize].to_vec()).unwrap();
            let out = tally_votes(&p, &society).unwrap();
            prop_assert_eq!(
                out.total_yes,
                out.egoist_yes + if out.group_yes { society.g() } else { 0 }
            );
            // acceptance through the effective egoist threshold
            let via_gamma = if out.group_yes {
                f64::from(out.egoist_yes) > society.gamma_votes()
            } else {
                f64::from(out.egoist_yes) > society.alpha_votes()
            };
            prop_assert_eq!(out.accepted, via_gamma);
            prop_assert_eq!(out.accepted, f64::from(out.total_yes) > society.alpha_votes());
        }

        #[test]
        fn more_support_never_rejects(
            n in 2u32..30,
            alpha in 0.0f64..1.0,
            xs in proptest::collection::vec(-1.0f64..1.0, 30),
            flip in 0usize..30,
        ) {
            let society = SocietyParams::new(n, n, alpha, 0.0);
            let mut inc = xs[..n as usize].to_vec();
            let before = tally_votes(&Proposal::new(inc.clone()).unwrap(), &society).unwrap();
            let i = flip % n as usize;
            inc[i] = inc[i].abs() + 0.5;
            let after = tally_votes(&Proposal::new(inc).unwrap(), &society).unwrap();
            prop_assert!(after.total_yes >= before.total_yes);
            prop_assert!(!before.accepted || after.accepted);
        }

        #[test]
        fn pure_egoist_society_ignores_t(
            alpha in 0.0f64..1.0,
            t1 in -5.0f64..5.0,
            t2 in -5.0f64..5.0,
            xs in proptest::collection::vec(-1.0f64..1.0, 12),
        ) {
            let p = Proposal::new(xs).unwrap();
            let a = tally_votes(&p, &SocietyParams::new(12, 12, alpha, t1)).unwrap();
            let b = tally_votes(&p, &SocietyParams::new(12, 12, alpha, t2)).unwrap();
            prop_assert_eq!(a, b);
            prop_assert_eq!(a.group_mean, None);
        }
    }
}
