//! Greedy score-ordered matching and all-point interpolated average precision.

/// One prediction's confidence and its IoU against each ground-truth
/// instance of the same class.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPrediction {
    pub score: f64,
    pub ious: Vec<f64>,
}

/// Indices of `preds` sorted by descending score; ties keep input order.
pub fn rank_by_score(preds: &[ScoredPrediction]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[b].score.total_cmp(&preds[a].score));
    order
}

/// Matches predictions in the given order. Each takes the unmatched GT with
/// the highest IoU at or above `threshold` (lowest index on ties). Returns
/// one true-positive flag per entry of `order`.
pub fn greedy_match(
    preds: &[ScoredPrediction],
    order: &[usize],
    num_gt: usize,
    threshold: f64,
) -> Vec<bool> {
    let mut taken = vec![false; num_gt];
    order
        .iter()
        .map(|&i| {
            let mut best: Option<(usize, f64)> = None;
            for (g, &iou) in preds[i].ious.iter().enumerate().take(num_gt) {
                if taken[g] || iou < threshold {
                    continue;
                }
                if best.is_none_or(|(_, b)| iou > b) {
                    best = Some((g, iou));
                }
            }
            match best {
                Some((g, _)) => {
                    taken[g] = true;
                    true
                }
                None => false,
            }
        })
        .collect()
}

/// Area under the precision-recall curve with the precision envelope made
/// monotone non-increasing. Zero when there is no ground truth.
pub fn ap_from_flags(tp_flags: &[bool], num_gt: usize) -> f64 {
    if num_gt == 0 {
        return 0.0;
    }
    let mut tp = 0usize;
    let mut curve: Vec<(f64, f64)> = Vec::with_capacity(tp_flags.len());
    for (rank, &hit) in tp_flags.iter().enumerate() {
        tp += hit as usize;
        curve.push((tp as f64 / num_gt as f64, tp as f64 / (rank + 1) as f64));
    }
    for i in (0..curve.len().saturating_sub(1)).rev() {
        curve[i].1 = curve[i].1.max(curve[i + 1].1);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (recall, precision) in curve {
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    ap
}

pub fn average_precision(preds: &[ScoredPrediction], num_gt: usize, threshold: f64) -> f64 {
    let order = rank_by_score(preds);
    ap_from_flags(&greedy_match(preds, &order, num_gt, threshold), num_gt)
}
