//! Structure-recovery metrics and bivariate direction decisions.

use serde::{Deserialize, Serialize};

use crate::dataset::OrdinalDataset;
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::regression::FittedNodeModel;
use crate::score::{local_bic, ScoreCache, ScoreOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// First column causes the second.
    Forward,
    Backward,
}

impl Direction {
    pub fn flipped(self) -> Direction {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

/// A forced bivariate decision with its confidence
/// `C = BIC(backward) - BIC(forward)`; positive favors forward.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PairDecision {
    pub direction: Direction,
    pub confidence: f64,
    /// Set when both directions scored exactly equal (resolved to forward).
    pub tie: bool,
}

/// Structural Hamming distance: pairs adjacent in exactly one graph count 1,
/// pairs adjacent in both with opposite orientation count 1.
pub fn shd(g1: &Dag, g2: &Dag) -> Result<usize> {
    if g1.num_nodes() != g2.num_nodes() {
        return Err(Error::NodeCountMismatch {
            left: g1.num_nodes(),
            right: g2.num_nodes(),
        });
    }
    let p = g1.num_nodes();
    let mut dist = 0;
    for i in 1..=p {
        for j in i + 1..p + 1 {
            let in1 = (g1.has_edge(i, j), g1.has_edge(j, i));
            let in2 = (g2.has_edge(i, j), g2.has_edge(j, i));
            let adj1 = in1.0 || in1.1;
            let adj2 = in2.0 || in2.1;
            if adj1 != adj2 || (adj1 && in1 != in2) {
                dist += 1;
            }
        }
    }
    Ok(dist)
}

/// Fit both causal directions of a two-column dataset (root marginal plus
/// conditional regression each) and pick the smaller BIC.
pub fn forced_decision(data: &OrdinalDataset, opts: &ScoreOptions) -> Result<PairDecision> {
    if data.p() != 2 {
        return Err(Error::Validation(format!(
            "expected 2 columns, got {}",
            data.p()
        )));
    }
    let cache = ScoreCache::new();
    let bic_forward =
        local_bic(1, &[], data, opts, &cache)?.bic + local_bic(2, &[1], data, opts, &cache)?.bic;
    let bic_backward =
        local_bic(1, &[2], data, opts, &cache)?.bic + local_bic(2, &[], data, opts, &cache)?.bic;
    let confidence = bic_backward - bic_forward;
    let (direction, tie) = if confidence > 0.0 {
        (Direction::Forward, false)
    } else if confidence < 0.0 {
        (Direction::Backward, false)
    } else {
        (Direction::Forward, true)
    };
    Ok(PairDecision {
        direction,
        confidence,
        tie,
    })
}

/// Fraction of decisions matching the truth labels.
pub fn accuracy(decisions: &[PairDecision], truth: &[Direction]) -> Result<f64> {
    if decisions.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: decisions.len(),
            right: truth.len(),
        });
    }
    if decisions.is_empty() {
        return Err(Error::Validation("no decisions".into()));
    }
    let correct = decisions
        .iter()
        .zip(truth)
        .filter(|(d, &t)| d.direction == t)
        .count();
    Ok(correct as f64 / decisions.len() as f64)
}

/// ROC-AUC of the signed confidence for the forward class, with mid-rank
/// handling of tied confidences (Mann-Whitney form).
pub fn auc_ranked(decisions: &[PairDecision], truth: &[Direction]) -> Result<f64> {
    if decisions.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: decisions.len(),
            right: truth.len(),
        });
    }
    let n_pos = truth.iter().filter(|&&t| t == Direction::Forward).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateLabels);
    }
    let mut idx: Vec<usize> = (0..decisions.len()).collect();
    idx.sort_by(|&a, &b| decisions[a].confidence.total_cmp(&decisions[b].confidence));
    // average ranks over tie groups (ranks are 1-based)
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j < idx.len() && decisions[idx[j]].confidence == decisions[idx[i]].confidence {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            if truth[k] == Direction::Forward {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let n_pos_f = n_pos as f64;
    Ok((rank_sum_pos - n_pos_f * (n_pos_f + 1.0) / 2.0) / (n_pos_f * n_neg as f64))
}

/// Half the L1 distance between two probability tables of equal shape.
pub fn total_variation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    for table in [a, b] {
        let sum: f64 = table.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized { sum });
        }
        if table.iter().any(|&v| v < 0.0) {
            return Err(Error::Validation("negative probability entry".into()));
        }
    }
    Ok(0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

/// Joint table implied by a fitted root marginal and conditional regression:
/// entry `[s][l]` = P(cause = s) * P(effect = l | cause = s).
pub fn fitted_pair_joint(
    marginal: &FittedNodeModel,
    conditional: &FittedNodeModel,
) -> Result<Vec<Vec<f64>>> {
    let s_levels = conditional
        .spec
        .parent_levels
        .first()
        .copied()
        .ok_or_else(|| Error::Validation("conditional model has no parent".into()))?;
    if marginal.spec.target_levels != s_levels {
        return Err(Error::ShapeMismatch {
            left: marginal.spec.target_levels,
            right: s_levels,
        });
    }
    let p_cause = marginal.category_probs(&[])?;
    let mut table = Vec::with_capacity(s_levels);
    for s in 1..=s_levels {
        let cond = conditional.category_probs(&[s])?;
        table.push(cond.iter().map(|&c| c * p_cause[s - 1]).collect());
    }
    Ok(table)
}
