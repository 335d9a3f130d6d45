//! Regression trees grown by exact greedy split search on
//! gradient/hessian statistics.

use crate::matrix::Matrix;

/// Split-search and regularization settings for one tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    /// L2 regularization on leaf weights.
    pub lambda: f64,
    /// Minimum gain required to keep a split.
    pub gamma: f64,
    /// Minimum hessian mass per child.
    pub min_child_weight: f64,
}

/// A node of a regression tree. Rows with `x[feature] < threshold` go left.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        weight: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    /// Routes one row to its leaf weight.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { weight } => return *weight,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] < *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    /// Longest path length in edges.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

/// The winning split of an exact greedy search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Newton leaf weight `-G / (H + lambda)`.
pub fn leaf_weight(g_sum: f64, h_sum: f64, lambda: f64) -> f64 {
    -g_sum / (h_sum + lambda)
}

/// Candidate threshold between two consecutive distinct sorted values.
///
/// Kept `> a` and `<= b` even under floating-point rounding so the
/// partition `x < t` separates exactly the rows on each side of the gap.
fn midpoint(a: f64, b: f64) -> f64 {
    let t = 0.5 * a + 0.5 * b;
    if t > a {
        t
    } else {
        b
    }
}

/// Tie tolerance for the split comparison. Two features can induce the
/// same row partition, in which case their gains are equal in exact
/// arithmetic but differ by rounding noise from the different summation
/// orders; treating such gains as ties keeps the lowest-feature,
/// lowest-threshold winner deterministic.
const GAIN_TIE_EPS: f64 = 1e-10;

/// True when `gain` beats the incumbent by more than the tie tolerance.
pub(crate) fn improves(gain: f64, incumbent: Option<f64>) -> bool {
    match incumbent {
        None => true,
        Some(best) => gain > best + GAIN_TIE_EPS * best.abs().max(1.0),
    }
}

/// Exact greedy split search over every feature and every midpoint
/// between consecutive distinct sorted values.
///
/// Maximizes `0.5 * [G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)] - gamma`;
/// ties go to the lowest feature index, then the lowest threshold. Returns
/// `None` when no candidate has positive gain.
pub fn best_split(
    rows: &[usize],
    features: &Matrix,
    g: &[f64],
    h: &[f64],
    params: &TreeParams,
) -> Option<SplitChoice> {
    if rows.len() < 2 {
        return None;
    }
    let mut total_g = 0.0;
    let mut total_h = 0.0;
    for &r in rows {
        total_g += g[r];
        total_h += h[r];
    }
    let parent_score = total_g * total_g / (total_h + params.lambda);

    let mut best: Option<SplitChoice> = None;
    let mut sorted: Vec<(f64, f64, f64)> = Vec::with_capacity(rows.len());
    for feature in 0..features.cols() {
        sorted.clear();
        sorted.extend(rows.iter().map(|&r| (features.get(r, feature), g[r], h[r])));
        sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        let mut left_g = 0.0;
        let mut left_h = 0.0;
        for i in 0..sorted.len() - 1 {
            left_g += sorted[i].1;
            left_h += sorted[i].2;
            if sorted[i].0 == sorted[i + 1].0 {
                continue;
            }
            let right_g = total_g - left_g;
            let right_h = total_h - left_h;
            if left_h < params.min_child_weight || right_h < params.min_child_weight {
                continue;
            }
            let gain = 0.5
                * (left_g * left_g / (left_h + params.lambda)
                    + right_g * right_g / (right_h + params.lambda)
                    - parent_score)
                - params.gamma;
            if gain > 0.0 && improves(gain, best.map(|b| b.gain)) {
                best = Some(SplitChoice {
                    feature,
                    threshold: midpoint(sorted[i].0, sorted[i + 1].0),
                    gain,
                });
            }
        }
    }
    best
}

/// Grows one tree by recursive greedy splitting. Recursion stops at
/// `max_depth`, when no split has positive gain, or below two rows.
pub fn build_tree(
    rows: &[usize],
    features: &Matrix,
    g: &[f64],
    h: &[f64],
    params: &TreeParams,
) -> TreeNode {
    grow(rows, features, g, h, params, 0)
}

fn grow(
    rows: &[usize],
    features: &Matrix,
    g: &[f64],
    h: &[f64],
    params: &TreeParams,
    depth: usize,
) -> TreeNode {
    let as_leaf = |rows: &[usize]| {
        let mut g_sum = 0.0;
        let mut h_sum = 0.0;
        for &r in rows {
            g_sum += g[r];
            h_sum += h[r];
        }
        TreeNode::Leaf {
            weight: leaf_weight(g_sum, h_sum, params.lambda),
        }
    };

    if depth >= params.max_depth || rows.len() < 2 {
        return as_leaf(rows);
    }
    let Some(split) = best_split(rows, features, g, h, params) else {
        return as_leaf(rows);
    };

    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .iter()
        .partition(|&&r| features.get(r, split.feature) < split.threshold);
    debug_assert!(!left_rows.is_empty() && !right_rows.is_empty());

    TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(grow(&left_rows, features, g, h, params, depth + 1)),
        right: Box::new(grow(&right_rows, features, g, h, params, depth + 1)),
    }
}
