//! Per-fixation weighted majority voting over several assignments of the same
//! trial, and the disagreement score derived from the vote shares.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correctors::Algorithm;
use crate::trial::{Assignment, Source};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WocError {
    #[error("voting pool is empty")]
    EmptyPool,
    #[error("inconsistent pool: {0}")]
    InconsistentPool(String),
    #[error("member weight must be at least 1")]
    ZeroWeight,
    #[error("no assignment from {from} for trial {trial_id}")]
    MissingSource { from: Source, trial_id: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VotingPool {
    members: Vec<(Assignment, u32)>,
}

impl VotingPool {
    pub fn new(members: Vec<(Assignment, u32)>) -> Result<Self, WocError> {
        let (first, _) = members.first().ok_or(WocError::EmptyPool)?;
        for (a, w) in &members {
            if *w == 0 {
                return Err(WocError::ZeroWeight);
            }
            if a.trial_id != first.trial_id {
                return Err(WocError::InconsistentPool(format!(
                    "trials {} and {}",
                    first.trial_id, a.trial_id
                )));
            }
            if a.lines.len() != first.lines.len() {
                return Err(WocError::InconsistentPool(format!(
                    "{} has {} fixations, {} has {}",
                    first.source,
                    first.lines.len(),
                    a.source,
                    a.lines.len()
                )));
            }
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[(Assignment, u32)] {
        &self.members
    }

    pub fn trial_id(&self) -> &str {
        &self.members[0].0.trial_id
    }

    pub fn fixation_count(&self) -> usize {
        self.members[0].0.lines.len()
    }

    pub fn total_weight(&self) -> u64 {
        self.members.iter().map(|(_, w)| u64::from(*w)).sum()
    }

    /// Weighted vote count per line at fixation `i`.
    pub fn tally(&self, i: usize) -> Vec<u64> {
        let top = self.members.iter().map(|(a, _)| a.lines[i]).max().unwrap_or(0);
        let mut t = vec![0u64; top + 1];
        for (a, w) in &self.members {
            t[a.lines[i]] += u64::from(*w);
        }
        t
    }
}

/// Index of the largest count; the lowest index wins ties.
fn winner(tally: &[u64]) -> (usize, u64) {
    tally
        .iter()
        .enumerate()
        .fold((0, 0), |b, (l, &c)| if c > b.1 { (l, c) } else { b })
}

pub fn vote(pool: &VotingPool) -> Assignment {
    let lines = (0..pool.fixation_count()).map(|i| winner(&pool.tally(i)).0).collect();
    Assignment::new(pool.trial_id(), lines, Source::Woc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Disagreement {
    /// `1 - winning share` per fixation.
    pub per_fixation: Vec<f64>,
    /// Mean over fixations; 0 for a trial without fixations.
    pub trial: f64,
}

pub fn disagreement(pool: &VotingPool) -> Disagreement {
    let total = pool.total_weight() as f64;
    let per_fixation: Vec<f64> = (0..pool.fixation_count())
        .map(|i| 1.0 - winner(&pool.tally(i)).1 as f64 / total)
        .collect();
    let trial = if per_fixation.is_empty() {
        0.0
    } else {
        per_fixation.iter().sum::<f64>() / per_fixation.len() as f64
    };
    Disagreement { per_fixation, trial }
}

/// One entry of a pool configuration: `{"source": "cluster", "weight": 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolEntry {
    pub source: Source,
    #[serde(default = "one")]
    pub weight: u32,
}

fn one() -> u32 {
    1
}

/// Which sources vote and with what weight.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PoolConfig(pub Vec<PoolEntry>);

impl PoolConfig {
    /// Every classical algorithm with one vote.
    pub fn classical() -> Self {
        PoolConfig(
            Algorithm::ALL
                .iter()
                .map(|&a| PoolEntry {
                    source: Source::Algorithm(a),
                    weight: 1,
                })
                .collect(),
        )
    }

    /// The classical pool plus the model ensemble with three votes.
    pub fn with_ensemble() -> Self {
        let mut c = Self::classical();
        c.0.push(PoolEntry {
            source: Source::Edist,
            weight: 3,
        });
        c
    }

    pub fn validate(&self) -> Result<(), WocError> {
        if self.0.is_empty() {
            return Err(WocError::EmptyPool);
        }
        if self.0.iter().any(|e| e.weight == 0) {
            return Err(WocError::ZeroWeight);
        }
        Ok(())
    }

    /// Builds the pool for one trial from the available assignments.
    pub fn resolve(&self, trial_id: &str, available: &BTreeMap<Source, Assignment>) -> Result<VotingPool, WocError> {
        self.validate()?;
        let members = self
            .0
            .iter()
            .map(|e| {
                available
                    .get(&e.source)
                    .cloned()
                    .map(|a| (a, e.weight))
                    .ok_or_else(|| WocError::MissingSource {
                        from: e.source,
                        trial_id: trial_id.to_string(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        VotingPool::new(members)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn member(lines: &[usize], w: u32) -> (Assignment, u32) {
        (Assignment::new("t", lines.to_vec(), Source::Human), w)
    }

    fn pool(m: &[(&[usize], u32)]) -> VotingPool {
        VotingPool::new(m.iter().map(|(l, w)| member(l, *w)).collect()).unwrap()
    }

    #[test]
    fn vote_examples() {
        assert_eq!(vote(&pool(&[(&[0], 1), (&[0], 1), (&[1], 1)])).lines, vec![0]);
        assert_eq!(vote(&pool(&[(&[0], 1), (&[1], 1)])).lines, vec![0]);
        assert_eq!(vote(&pool(&[(&[1], 1), (&[0], 1)])).lines, vec![0]);
    }

    #[test]
    fn ensemble_weight_against_classical_votes() {
        // Model says 4 with three votes; k classical members say 5, the rest say 4.
        for k in 0..=11usize {
            let mut m: Vec<(Assignment, u32)> = (0..11).map(|i| member(&[if i < k { 5 } else { 4 }], 1)).collect();
            m.push(member(&[4], 3));
            let got = vote(&VotingPool::new(m).unwrap()).lines[0];
            let for_five = k;
            let for_four = 11 - k + 3;
            assert_eq!(got, if for_five > for_four { 5 } else { 4 }, "k={k}");
        }
    }

    #[test]
    fn disagreement_examples() {
        assert_eq!(disagreement(&pool(&[(&[2, 1], 1), (&[2, 1], 4)])).per_fixation, vec![0.0, 0.0]);
        assert_eq!(disagreement(&pool(&[(&[0], 1), (&[1], 1)])).per_fixation, vec![0.5]);
        let d = disagreement(&pool(&[(&[0], 3), (&[1], 1), (&[2], 1)]));
        assert!((d.per_fixation[0] - 0.4).abs() < 1e-15);
        let d = disagreement(&pool(&[(&[0, 0], 1), (&[0, 1], 1)]));
        assert_eq!(d.trial, 0.25);
    }

    #[test]
    fn invalid_pools() {
        assert_eq!(VotingPool::new(vec![]), Err(WocError::EmptyPool));
        assert_eq!(VotingPool::new(vec![member(&[0], 0)]), Err(WocError::ZeroWeight));
        assert!(matches!(VotingPool::new(vec![member(&[0], 1), member(&[0, 1], 1)]), Err(WocError::InconsistentPool(_))));
        let other = (Assignment::new("u", vec![0], Source::Human), 1);
        assert!(matches!(VotingPool::new(vec![member(&[0], 1), other]), Err(WocError::InconsistentPool(_))));
    }

    #[test]
    fn config_json() {
        let c: PoolConfig = serde_json::from_str(r#"[{"source":"cluster","weight":1},{"source":"edist","weight":3}]"#).unwrap();
        assert_eq!(c.0[0].source, Source::Algorithm(Algorithm::Cluster));
        assert_eq!(c.0[1].weight, 3);
        assert!(serde_json::from_str::<PoolConfig>(r#"[{"source":"nope"}]"#).is_err());
        assert_eq!(PoolConfig::classical().0.len(), 11);
        let e = PoolConfig::with_ensemble();
        assert_eq!(e.0.last(), Some(&PoolEntry { source: Source::Edist, weight: 3 }));
        let round: PoolConfig = serde_json::from_str(&serde_json::to_string(&e).unwrap()).unwrap();
        assert_eq!(round, e);
    }

    #[test]
    fn resolve_reports_missing_sources() {
        let mut avail = BTreeMap::new();
        avail.insert(Source::Algorithm(Algorithm::Attach), Assignment::new("t", vec![1], Source::Algorithm(Algorithm::Attach)));
        let c = PoolConfig(vec![PoolEntry { source: Source::Algorithm(Algorithm::Attach), weight: 2 }]);
        assert_eq!(vote(&c.resolve("t", &avail).unwrap()).lines, vec![1]);
        assert!(matches!(PoolConfig::classical().resolve("t", &avail), Err(WocError::MissingSource { .. })));
    }
}
