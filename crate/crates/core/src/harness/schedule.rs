//! Sample-size dependent settings (block half-width, window, start) and the
//! criterion descriptions that use them.

use serde::{Deserialize, Serialize};

use crate::criteria::{Criterion, Loss, PenaltyKind};
use crate::error::{Error, Result};
use crate::estimators::{default_block_size, default_recursive_start, default_window, integer_root_floor};

/// A rule mapping the sample size to an integer setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Schedule {
    Fixed(usize),
    Rule(ScheduleRule),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScheduleRule {
    /// `⌊T^{num/den}⌋`, computed in integers.
    Power { num: u32, den: u32 },
    /// `⌊fraction · T⌋`. Does not vanish relative to T.
    Fraction { fraction: f64 },
    /// `p_max + offset`, with `p_max` the largest candidate dimension.
    PmaxPlus { offset: usize },
}

impl Schedule {
    pub fn power(num: u32, den: u32) -> Self {
        Schedule::Rule(ScheduleRule::Power { num, den })
    }

    pub fn resolve(&self, t: usize, pmax: usize) -> Result<usize> {
        match self {
            Schedule::Fixed(v) => Ok(*v),
            Schedule::Rule(ScheduleRule::Power { num, den }) => {
                if *den == 0 || num > den {
                    return Err(Error::BadConfig(format!("power schedule {num}/{den} must lie in [0, 1]")));
                }
                Ok(integer_root_floor(t as u128, *num, *den) as usize)
            }
            Schedule::Rule(ScheduleRule::Fraction { fraction }) => {
                if !(0.0..1.0).contains(fraction) {
                    return Err(Error::BadConfig(format!("fraction schedule {fraction} must lie in [0, 1)")));
                }
                Ok((fraction * t as f64).floor() as usize)
            }
            Schedule::Rule(ScheduleRule::PmaxPlus { offset }) => Ok(pmax + offset),
        }
    }
}

/// Criterion family named in a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriterionKind {
    Loo,
    Hblock,
    Kfold,
    Aic,
    Bic,
    Hqic,
    Ric,
    FixedIc,
    Rolling,
    Recursive,
    #[serde(skip)]
    CustomIc(PenaltyKind),
}

fn default_k() -> Schedule {
    Schedule::Fixed(5)
}

/// One criterion of an experiment. Settings that depend on T are schedules;
/// absent schedules take the estimator defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionSpec {
    pub kind: CriterionKind,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub loss: Loss,
    /// h-block half-width; default `⌊T^{1/3}⌋`.
    #[serde(default)]
    pub h: Option<Schedule>,
    /// Number of folds; default 5.
    #[serde(default)]
    pub k: Option<Schedule>,
    /// Shuffles observations before forming folds (independent data only).
    #[serde(default)]
    pub shuffle_seed: Option<u64>,
    /// Rolling window; default `⌊T^{2/3}⌋`.
    #[serde(default)]
    pub window: Option<Schedule>,
    /// Recursive start; default `p_max + 10`.
    #[serde(default)]
    pub t0: Option<Schedule>,
    /// Penalty coefficient for `fixed-ic`.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// HQIC constant; default 2.01.
    #[serde(default)]
    pub c: Option<f64>,
}

/// A criterion with its T-dependent settings fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedCriterion {
    pub label: String,
    pub criterion: Criterion,
    pub loss: Loss,
    pub shuffle_seed: Option<u64>,
}

impl CriterionSpec {
    pub fn new(kind: CriterionKind) -> Self {
        Self {
            kind,
            label: None,
            loss: Loss::Squared,
            h: None,
            k: None,
            shuffle_seed: None,
            window: None,
            t0: None,
            lambda: None,
            c: None,
        }
    }

    pub fn labelled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        match &self.kind {
            CriterionKind::Loo => "loo".into(),
            CriterionKind::Hblock => "hblock".into(),
            CriterionKind::Kfold => "kfold".into(),
            CriterionKind::Aic => "aic".into(),
            CriterionKind::Bic => "bic".into(),
            CriterionKind::Hqic => "hqic".into(),
            CriterionKind::Ric => "ric".into(),
            CriterionKind::FixedIc => "fixed-ic".into(),
            CriterionKind::Rolling => "rolling".into(),
            CriterionKind::Recursive => "recursive".into(),
            CriterionKind::CustomIc(p) => p.to_string(),
        }
    }

    fn check_unused(&self) -> Result<()> {
        let k = &self.kind;
        let unused = [
            ("h", self.h.is_some() && *k != CriterionKind::Hblock),
            ("k", self.k.is_some() && *k != CriterionKind::Kfold),
            ("shuffle_seed", self.shuffle_seed.is_some() && *k != CriterionKind::Kfold),
            ("window", self.window.is_some() && *k != CriterionKind::Rolling),
            ("t0", self.t0.is_some() && *k != CriterionKind::Recursive),
            ("lambda", self.lambda.is_some() && *k != CriterionKind::FixedIc),
            ("c", self.c.is_some() && *k != CriterionKind::Hqic),
        ];
        match unused.iter().find(|(_, bad)| *bad) {
            Some((key, _)) => Err(Error::BadConfig(format!("key `{key}` does not apply to criterion `{}`", self.label()))),
            None => Ok(()),
        }
    }

    /// Fixes the settings for sample size `t` and largest candidate dimension
    /// `pmax`.
    pub fn resolve(&self, t: usize, pmax: usize) -> Result<ResolvedCriterion> {
        self.check_unused()?;
        let at = |s: &Option<Schedule>, default: usize| match s {
            Some(s) => s.resolve(t, pmax),
            None => Ok(default),
        };
        let criterion = match &self.kind {
            CriterionKind::Loo => Criterion::Loo,
            CriterionKind::Hblock => Criterion::HBlock { h: at(&self.h, default_block_size(t))? },
            CriterionKind::Kfold => Criterion::KFold { k: self.k.as_ref().unwrap_or(&default_k()).resolve(t, pmax)? },
            CriterionKind::Aic => Criterion::Ic(PenaltyKind::Aic),
            CriterionKind::Bic => Criterion::Ic(PenaltyKind::Bic),
            CriterionKind::Hqic => Criterion::Ic(match self.c {
                Some(c) => PenaltyKind::Hqic { c },
                None => PenaltyKind::hqic(),
            }),
            CriterionKind::Ric => Criterion::Ic(PenaltyKind::Ric),
            CriterionKind::FixedIc => Criterion::Ic(PenaltyKind::Fixed {
                lambda: self.lambda.ok_or_else(|| Error::BadConfig("fixed-ic needs key `lambda`".into()))?,
            }),
            CriterionKind::Rolling => Criterion::Rolling { window: at(&self.window, default_window(t))? },
            CriterionKind::Recursive => Criterion::Recursive { t0: at(&self.t0, default_recursive_start(pmax))? },
            CriterionKind::CustomIc(p) => Criterion::Ic(p.clone()),
        };
        Ok(ResolvedCriterion { label: self.label(), criterion, loss: self.loss, shuffle_seed: self.shuffle_seed })
    }
}

impl ResolvedCriterion {
    pub fn plain(criterion: Criterion) -> Self {
        Self { label: criterion.to_string(), criterion, loss: Loss::Squared, shuffle_seed: None }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedules() {
        let resolve = |kind| CriterionSpec::new(kind).resolve(1600, 4).unwrap().criterion;
        assert_eq!(resolve(CriterionKind::Hblock), Criterion::HBlock { h: 11 });
        assert_eq!(resolve(CriterionKind::Rolling), Criterion::Rolling { window: 136 });
        assert_eq!(resolve(CriterionKind::Recursive), Criterion::Recursive { t0: 14 });
        assert_eq!(resolve(CriterionKind::Kfold), Criterion::KFold { k: 5 });
    }

    #[test]
    fn explicit_schedules() {
        let mut spec = CriterionSpec::new(CriterionKind::Hblock);
        spec.h = Some(Schedule::Fixed(3));
        assert_eq!(spec.resolve(100, 2).unwrap().criterion, Criterion::HBlock { h: 3 });
        spec.h = Some(Schedule::Rule(ScheduleRule::Fraction { fraction: 0.05 }));
        assert_eq!(spec.resolve(100, 2).unwrap().criterion, Criterion::HBlock { h: 5 });
        spec.h = Some(Schedule::power(1, 2));
        assert_eq!(spec.resolve(99, 2).unwrap().criterion, Criterion::HBlock { h: 9 });
    }

    #[test]
    fn misplaced_keys_are_errors() {
        let mut spec = CriterionSpec::new(CriterionKind::Loo);
        spec.window = Some(Schedule::Fixed(10));
        let err = spec.resolve(100, 2).unwrap_err().to_string();
        assert!(err.contains("window"), "{err}");
        assert!(CriterionSpec::new(CriterionKind::FixedIc).resolve(100, 2).is_err());
    }
}
