//! Closed-form one-step expected capital increments.
//!
//! For a configuration with `g ≥ 1` group members the group supports a
//! proposal with probability `P = Φ(t̃)`, `t̃ = (μ - t)√g/σ`. Conditioning on
//! group support, an egoist gains `μ⁺(μ, σ, ℓ, γn)` (group supports) or
//! `μ⁺(μ, σ, ℓ, αn)` (group opposes) in expectation, while a group member
//! gains the group's truncated mean times the probability that enough egoists
//! join in.

use serde::Serialize;

use crate::error::{Result, ViseError};
use crate::model::{Configuration, EnvironmentParams};
use crate::special::{cdf, density, first_count_above, ln_pmf, upper_tail, Probability};

/// `P` (group supports) and `Q = 1 - P`, each computed directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportProbability {
    pub p: Probability,
    pub q: Probability,
}

/// `P = Φ((μ - t)√g/σ)`.
pub fn group_support_prob(env: &EnvironmentParams, g: u32, t: f64) -> Result<SupportProbability> {
    if g == 0 {
        return Err(ViseError::domain("group_support_prob", "group is empty"));
    }
    if t.is_nan() {
        return Err(ViseError::domain("group_support_prob", "t is NaN"));
    }
    let z = standardized_threshold(env, g, t);
    Ok(SupportProbability {
        p: Probability::saturating(cdf(z)),
        q: Probability::saturating(cdf(-z)),
    })
}

/// `t̃ = (μ - t)√g/σ`.
pub(crate) fn standardized_threshold(env: &EnvironmentParams, g: u32, t: f64) -> f64 {
    (env.mu - t) * f64::from(g).sqrt() / env.sigma
}

/// Expected one-step increment of a designated voter among `ell` egoists
/// when a proposal passes iff strictly more than `ell0` of them vote for it.
///
/// With `p = Φ(μ/σ)` and `k = floor(ell0) + 1`, conditioning on the number
/// `x` of supporters gives `Σ_{x ≥ k} b(x|ℓ)[μ + σφ(μ/σ)(x - ℓp)/(ℓpq)]`.
/// The sum of `(x - ℓp) b(x|ℓ)` over `x ≥ k` equals `ℓpq·b(k-1 | ℓ-1)`, so
/// this evaluates to `μ·F + σφ(μ/σ)·b(k-1 | ℓ-1)` where `F` is the upper
/// tail. That form has no `1/(pq)` factor and stays finite as `p → 0, 1`.
pub fn mu_plus(mu: f64, sigma: f64, ell: u32, ell0: f64) -> Result<f64> {
    if ell == 0 {
        return Err(ViseError::domain("mu_plus", "needs at least one voter"));
    }
    if !(sigma > 0.0 && sigma.is_finite()) || !mu.is_finite() {
        return Err(ViseError::domain("mu_plus", format!("mu = {mu}, sigma = {sigma}")));
    }
    if ell0.is_nan() {
        return Err(ViseError::domain("mu_plus", "ell0 is NaN"));
    }
    Ok(mu_plus_unchecked(mu, sigma, ell, ell0))
}

pub(crate) fn mu_plus_unchecked(mu: f64, sigma: f64, ell: u32, ell0: f64) -> f64 {
    let k = first_count_above(ell0);
    if k <= 0 {
        return mu;
    }
    if k > i64::from(ell) {
        return 0.0;
    }
    let z = mu / sigma;
    let (p, q) = (cdf(z), cdf(-z));
    let tail = upper_tail(ell0, ell, p, q);
    let boundary = ln_pmf((k - 1) as u32, ell - 1, p, q).exp();
    mu * tail + sigma * density(z) * boundary
}

/// The `t`-independent ingredients of the expectation formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RuleTerms {
    /// Single egoist's support probability `p = Φ(μ/σ)`.
    pub p_vote: f64,
    /// `F_{γn}`: probability that egoists add more than `γn` votes.
    pub tail_gamma: f64,
    /// `F_{αn}`: probability that egoists add more than `αn` votes.
    pub tail_alpha: f64,
    /// `μ⁺(μ, σ, ℓ, γn)`; `None` without egoists.
    pub mu_plus_gamma: Option<f64>,
    /// `μ⁺(μ, σ, ℓ, αn)`; `None` without egoists.
    pub mu_plus_alpha: Option<f64>,
}

pub fn rule_terms(cfg: &Configuration) -> RuleTerms {
    let EnvironmentParams { mu, sigma } = cfg.env;
    let ell = cfg.society.ell;
    let z = mu / sigma;
    let (p, q) = (cdf(z), cdf(-z));
    let gv = cfg.derived.gamma_votes;
    let av = cfg.derived.alpha_votes;
    let mp = |ell0| (ell > 0).then(|| mu_plus_unchecked(mu, sigma, ell, ell0));
    RuleTerms {
        p_vote: p,
        tail_gamma: upper_tail(gv, ell, p, q),
        tail_alpha: upper_tail(av, ell, p, q),
        mu_plus_gamma: mp(gv),
        mu_plus_alpha: mp(av),
    }
}

/// Analytic one-step expectations for one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectationReport {
    /// `M(d̃E)`; `None` when there are no egoists.
    pub egoist: Option<f64>,
    /// `M(d̃G)`; `None` when there is no group.
    pub group_member: Option<f64>,
    /// `M(d̃) = δ·M(d̃E) + (1 - δ)·M(d̃G)`.
    pub society: f64,
    /// `P`; `None` when there is no group.
    pub support_prob: Option<Probability>,
    /// `t̃`; `None` when there is no group.
    pub t_tilde: Option<f64>,
}

impl ExpectationReport {
    pub(crate) fn from_terms(cfg: &Configuration, terms: &RuleTerms) -> Self {
        let EnvironmentParams { mu, sigma } = cfg.env;
        let g = cfg.derived.g;
        let delta = cfg.derived.delta;

        if g == 0 {
            // Pure egoist society: the group never votes, only the αn cut matters.
            let egoist = terms.mu_plus_alpha.expect("g = 0 implies ell = n ≥ 1");
            return ExpectationReport {
                egoist: Some(egoist),
                group_member: None,
                society: egoist,
                support_prob: None,
                t_tilde: None,
            };
        }

        let z = standardized_threshold(&cfg.env, g, cfg.society.t);
        let (p, q, f) = (cdf(z), cdf(-z), density(z));
        let spread = sigma * f / f64::from(g).sqrt();
        let group = terms.tail_gamma * (mu * p + spread) + terms.tail_alpha * (mu * q - spread);
        let egoist = match (terms.mu_plus_gamma, terms.mu_plus_alpha) {
            (Some(mg), Some(ma)) => Some(mg * p + ma * q),
            _ => None,
        };
        let society = match egoist {
            Some(e) => delta * e + (1.0 - delta) * group,
            None => group,
        };
        ExpectationReport {
            egoist,
            group_member: Some(group),
            society,
            support_prob: Some(Probability::saturating(p)),
            t_tilde: Some(z),
        }
    }
}

/// `M(d̃E) = μ⁺(μ,σ,ℓ,γn)·P + μ⁺(μ,σ,ℓ,αn)·Q`. Requires `ell ≥ 1` and `g ≥ 1`.
pub fn expected_egoist_increment(cfg: &Configuration) -> Result<f64> {
    if cfg.society.ell == 0 || cfg.derived.g == 0 {
        return Err(ViseError::domain(
            "expected_egoist_increment",
            "needs at least one egoist and one group member",
        ));
    }
    Ok(expected_society_increment(cfg).egoist.expect("egoists present"))
}

/// `M(d̃G) = F_{γn}(μP + σf/√g) + F_{αn}(μQ - σf/√g)`. Requires `g ≥ 1`.
pub fn expected_group_increment(cfg: &Configuration) -> Result<f64> {
    if cfg.derived.g == 0 {
        return Err(ViseError::domain("expected_group_increment", "group is empty"));
    }
    Ok(expected_society_increment(cfg).group_member.expect("group present"))
}

/// Full report: egoist, group member and society-average expectations.
pub fn expected_society_increment(cfg: &Configuration) -> ExpectationReport {
    ExpectationReport::from_terms(cfg, &rule_terms(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate, SocietyParams};

    fn fig1(t: f64) -> Configuration {
        validate(
            SocietyParams::new(100, 50, 0.5, t),
            EnvironmentParams::new(-1.0, 10.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn mu_plus_edges() {
        assert_eq!(mu_plus(-0.3, 1.0, 10, 10.0).unwrap(), 0.0);
        assert_eq!(mu_plus(-0.3, 1.0, 10, 57.0).unwrap(), 0.0);
        assert_eq!(mu_plus(-0.3, 1.0, 10, -0.5).unwrap(), -0.3);
        assert_eq!(mu_plus(-0.3, 1.0, 10, -3.0).unwrap(), -0.3);
        assert!(mu_plus(0.0, 1.0, 0, 1.0).is_err());
        assert!(mu_plus(0.0, -1.0, 3, 1.0).is_err());
    }

    #[test]
    fn mu_plus_single_voter_is_truncated_mean_times_prob() {
        // one voter, passes iff its own increment is positive: E[X; X > 0]
        let (mu, sigma) = (0.4, 2.0);
        let expected = mu * cdf(mu / sigma) + sigma * density(mu / sigma);
        assert!((mu_plus(mu, sigma, 1, 0.0).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn mu_plus_extreme_environment_tends_to_limits() {
        // p is 1 to machine precision: everyone supports, so the mean passes through
        assert!((mu_plus(40.0, 1.0, 20, 10.0).unwrap() - 40.0).abs() < 1e-12);
        // p is 0: nobody supports
        assert!(mu_plus(-40.0, 1.0, 20, 10.0).unwrap().abs() < 1e-300);
    }

    #[test]
    fn support_prob_examples() {
        let env = EnvironmentParams::new(-1.0, 10.0).unwrap();
        let s = group_support_prob(&env, 50, -1.0).unwrap();
        assert_eq!(s.p.value(), 0.5);
        let s = group_support_prob(&env, 50, -1e9).unwrap();
        assert_eq!(s.p.value(), 1.0);
        let s = group_support_prob(&env, 50, 0.0).unwrap();
        assert!((s.p.value() - 0.239_750_061_093_476_73).abs() < 1e-14);
        assert!((s.p.value() + s.q.value() - 1.0).abs() < 1e-15);
        assert!(group_support_prob(&env, 0, 0.0).is_err());
    }

    #[test]
    fn limits_in_t() {
        let terms = rule_terms(&fig1(0.0));
        let high = expected_society_increment(&fig1(1e6));
        let low = expected_society_increment(&fig1(-1e6));
        assert_eq!(high.egoist.unwrap(), terms.mu_plus_alpha.unwrap());
        assert_eq!(low.egoist.unwrap(), terms.mu_plus_gamma.unwrap());
        assert_eq!(high.group_member.unwrap(), -terms.tail_alpha);
        assert_eq!(low.group_member.unwrap(), -terms.tail_gamma);
        let inf = expected_society_increment(&fig1(f64::INFINITY));
        assert_eq!(inf.group_member, high.group_member);
    }

    #[test]
    fn fig1_signs_at_zero_threshold() {
        let r = expected_society_increment(&fig1(0.0));
        assert!(r.group_member.unwrap() > 0.0);
        assert!(r.society < 0.0);
    }

    #[test]
    fn pure_egoist_report() {
        let cfg = validate(
            SocietyParams::new(100, 100, 0.5, 3.0),
            EnvironmentParams::new(-0.1, 1.0).unwrap(),
        )
        .unwrap();
        let r = expected_society_increment(&cfg);
        assert_eq!(r.group_member, None);
        assert_eq!(r.society, mu_plus(-0.1, 1.0, 100, 50.0).unwrap());
        assert!(expected_group_increment(&cfg).is_err());
        assert!(expected_egoist_increment(&cfg).is_err());
    }

    #[test]
    fn pure_group_report() {
        let cfg = validate(
            SocietyParams::new(20, 0, 0.5, 0.0),
            EnvironmentParams::new(-0.2, 1.0).unwrap(),
        )
        .unwrap();
        let r = expected_society_increment(&cfg);
        assert_eq!(r.egoist, None);
        assert_eq!(r.society, r.group_member.unwrap());
        // the group alone decides: E[mean; mean > 0]
        let s = 1.0 / 20f64.sqrt();
        let expected = -0.2 * cdf(-0.2 / s) + s * density(-0.2 / s);
        assert!((r.society - expected).abs() < 1e-15);
    }
}
