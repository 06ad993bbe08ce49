//! Class-wise average precision over 3D instances with voxelized point IoU.
//!
//! `map` averages AP over IoU thresholds 0.50:0.05:0.95; `map50` and `map25`
//! use single thresholds. Class means run over classes with at least one
//! ground-truth instance. Values are fractions in `[0, 1]`.

mod ap;

use std::collections::{BTreeMap, BTreeSet, HashSet};

use nalgebra::Point3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use ap::{ap_from_flags, average_precision, greedy_match, rank_by_score, ScoredPrediction};

use crate::error::{Error, Result};
use crate::fusion::{SceneInstances, DEFAULT_VOXEL_SIZE};
use crate::projection::ObjectCloud;
use crate::voxel::{voxel_set, VoxelKey};

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthInstance {
    pub label: String,
    pub points: Vec<Point3<f64>>,
}

/// IoU thresholds 0.50, 0.55, …, 0.95.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub voxel_size: f64,
    /// Thresholds averaged into `map`.
    pub map_thresholds: Vec<f64>,
    /// Allowed prediction labels; defaults to the ground-truth labels.
    pub vocabulary: Option<BTreeSet<String>>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            voxel_size: DEFAULT_VOXEL_SIZE,
            map_thresholds: coco_thresholds(),
            vocabulary: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassAp {
    pub ap: f64,
    pub ap50: f64,
    pub ap25: f64,
    pub num_gt: usize,
    pub num_pred: usize,
    pub tp50: usize,
    pub tp25: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub map: f64,
    pub map50: f64,
    pub map25: f64,
    pub per_class: BTreeMap<String, ClassAp>,
    /// Number of scenes folded into this report.
    pub scenes: usize,
    /// How multi-scene reports are combined.
    pub averaging: String,
}

fn set_iou(a: &HashSet<VoxelKey>, b: &HashSet<VoxelKey>) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let inter = small.iter().filter(|k| large.contains(*k)).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Voxelizes both point sets on the same grid and returns
/// `|pred ∩ gt| / |pred ∪ gt|` over occupied voxels.
pub fn instance_iou(pred: &ObjectCloud, gt: &GroundTruthInstance, voxel_size: f64) -> f64 {
    assert!(voxel_size > 0.0, "voxel size must be positive");
    set_iou(
        &voxel_set(&pred.points, voxel_size),
        &voxel_set(&gt.points, voxel_size),
    )
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn evaluate_scene(
    pred: &SceneInstances,
    gt: &[GroundTruthInstance],
    config: &EvalConfig,
) -> Result<EvalReport> {
    if gt.is_empty() {
        return Err(Error::NothingToEvaluate);
    }
    let gt_labels: BTreeSet<String> = gt.iter().map(|g| g.label.clone()).collect();
    let vocabulary = config.vocabulary.as_ref().unwrap_or(&gt_labels);
    let unknown: BTreeSet<String> = pred
        .instances
        .iter()
        .map(|p| p.label().to_string())
        .filter(|l| !vocabulary.contains(l))
        .collect();
    if !unknown.is_empty() {
        return Err(Error::UnknownLabels(unknown.into_iter().collect()));
    }

    let gt_voxels: Vec<_> = gt
        .par_iter()
        .map(|g| voxel_set(&g.points, config.voxel_size))
        .collect();
    let pred_voxels: Vec<_> = pred
        .instances
        .par_iter()
        .map(|p| voxel_set(&p.cloud.points, config.voxel_size))
        .collect();

    let per_class: BTreeMap<String, ClassAp> = gt_labels
        .par_iter()
        .map(|label| {
            let gts: Vec<usize> = (0..gt.len()).filter(|&g| &gt[g].label == label).collect();
            let preds: Vec<ScoredPrediction> = pred
                .instances
                .iter()
                .enumerate()
                .filter(|(_, p)| p.label() == label)
                .map(|(i, p)| ScoredPrediction {
                    score: p.score(),
                    ious: gts
                        .iter()
                        .map(|&g| set_iou(&pred_voxels[i], &gt_voxels[g]))
                        .collect(),
                })
                .collect();
            let order = rank_by_score(&preds);
            let at = |t: f64| {
                let flags = greedy_match(&preds, &order, gts.len(), t);
                (
                    ap_from_flags(&flags, gts.len()),
                    flags.iter().filter(|&&f| f).count(),
                )
            };
            let (ap50, tp50) = at(0.5);
            let (ap25, tp25) = at(0.25);
            let ap = mean(config.map_thresholds.iter().map(|&t| at(t).0));
            let stats = ClassAp {
                ap,
                ap50,
                ap25,
                num_gt: gts.len(),
                num_pred: preds.len(),
                tp50,
                tp25,
            };
            (label.clone(), stats)
        })
        .collect();

    Ok(EvalReport {
        map: mean(per_class.values().map(|c| c.ap)),
        map50: mean(per_class.values().map(|c| c.ap50)),
        map25: mean(per_class.values().map(|c| c.ap25)),
        per_class,
        scenes: 1,
        averaging: "macro".into(),
    })
}

impl EvalReport {
    /// Scene-level macro average: each scene's mAP values weigh equally.
    /// Per-class entries average over the scenes containing that class.
    pub fn macro_average(reports: &[EvalReport]) -> Option<EvalReport> {
        if reports.is_empty() {
            return None;
        }
        let mut per_class: BTreeMap<String, (ClassAp, usize)> = BTreeMap::new();
        for r in reports {
            for (label, c) in &r.per_class {
                let entry = per_class.entry(label.clone()).or_insert((
                    ClassAp {
                        ap: 0.0,
                        ap50: 0.0,
                        ap25: 0.0,
                        num_gt: 0,
                        num_pred: 0,
                        tp50: 0,
                        tp25: 0,
                    },
                    0,
                ));
                entry.0.ap += c.ap;
                entry.0.ap50 += c.ap50;
                entry.0.ap25 += c.ap25;
                entry.0.num_gt += c.num_gt;
                entry.0.num_pred += c.num_pred;
                entry.0.tp50 += c.tp50;
                entry.0.tp25 += c.tp25;
                entry.1 += 1;
            }
        }
        let per_class = per_class
            .into_iter()
            .map(|(label, (mut c, n))| {
                c.ap /= n as f64;
                c.ap50 /= n as f64;
                c.ap25 /= n as f64;
                (label, c)
            })
            .collect();
        Some(EvalReport {
            map: mean(reports.iter().map(|r| r.map)),
            map50: mean(reports.iter().map(|r| r.map50)),
            map25: mean(reports.iter().map(|r| r.map25)),
            per_class,
            scenes: reports.iter().map(|r| r.scenes).sum(),
            averaging: "macro".into(),
        })
    }

    /// Fixed-width table, values ×100.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "# scenes: {} ({}-averaged across scenes)\n{:<20} {:>6} {:>6} {:>6} {:>5} {:>5} {:>5} {:>5}\n",
            self.scenes, self.averaging, "class", "AP", "AP50", "AP25", "gt", "pred", "tp50", "tp25"
        );
        for (label, c) in &self.per_class {
            out.push_str(&format!(
                "{:<20} {:>6.1} {:>6.1} {:>6.1} {:>5} {:>5} {:>5} {:>5}\n",
                label,
                100.0 * c.ap,
                100.0 * c.ap50,
                100.0 * c.ap25,
                c.num_gt,
                c.num_pred,
                c.tp50,
                c.tp25
            ));
        }
        out.push_str(&format!(
            "{:<20} {:>6.1} {:>6.1} {:>6.1}\n",
            "mean (mAP/50/25)",
            100.0 * self.map,
            100.0 * self.map50,
            100.0 * self.map25
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::{Box3D, ObjectInstance};

    fn segment(n: usize) -> Vec<Point3<f64>> {
        // points at voxel centers along x: 0.01, 0.03, ...
        (0..n)
            .map(|i| Point3::new(0.01 + 0.02 * i as f64, 0.01, 0.01))
            .collect()
    }

    fn cloud(label: &str, points: Vec<Point3<f64>>, score: f64) -> ObjectCloud {
        ObjectCloud {
            points,
            label: label.into(),
            score,
            source_frames: Default::default(),
        }
    }

    fn instances(items: Vec<ObjectCloud>) -> SceneInstances {
        SceneInstances {
            instances: items
                .into_iter()
                .map(|c| ObjectInstance {
                    bbox: Box3D::from_points(&c.points).unwrap(),
                    cloud: c,
                })
                .collect(),
        }
    }

    #[test]
    fn iou_identity_disjoint_and_half() {
        let gt = GroundTruthInstance {
            label: "rod".into(),
            points: segment(100),
        };
        assert_eq!(
            instance_iou(&cloud("rod", segment(100), 1.0), &gt, 0.02),
            1.0
        );
        let far: Vec<_> = segment(100)
            .iter()
            .map(|p| p + nalgebra::Vector3::new(0.0, 5.0, 0.0))
            .collect();
        assert_eq!(instance_iou(&cloud("rod", far, 1.0), &gt, 0.02), 0.0);
        // oracle: 50 of 100 occupied voxels shared, union 100
        let half = instance_iou(&cloud("rod", segment(50), 1.0), &gt, 0.02);
        assert!((half - 0.5).abs() <= 1.0 / 100.0);
    }

    #[test]
    fn perfect_predictions_score_one() {
        let gts = vec![
            GroundTruthInstance {
                label: "a".into(),
                points: segment(30),
            },
            GroundTruthInstance {
                label: "b".into(),
                points: segment(30)
                    .iter()
                    .map(|p| p + nalgebra::Vector3::new(0.0, 1.0, 0.0))
                    .collect(),
            },
        ];
        let pred = instances(
            gts.iter()
                .map(|g| cloud(&g.label, g.points.clone(), 1.0))
                .collect(),
        );
        let r = evaluate_scene(&pred, &gts, &EvalConfig::default()).unwrap();
        assert_eq!((r.map, r.map50, r.map25), (1.0, 1.0, 1.0));
        assert_eq!(r.per_class["a"].tp50, 1);
    }

    #[test]
    fn wrong_class_scores_zero() {
        let gts = vec![
            GroundTruthInstance {
                label: "a".into(),
                points: segment(30),
            },
            GroundTruthInstance {
                label: "b".into(),
                points: segment(30)
                    .iter()
                    .map(|p| p + nalgebra::Vector3::new(0.0, 1.0, 0.0))
                    .collect(),
            },
        ];
        // each prediction sits on the other class's instance
        let pred = instances(vec![
            cloud("b", gts[0].points.clone(), 1.0),
            cloud("a", gts[1].points.clone(), 1.0),
        ]);
        let r = evaluate_scene(&pred, &gts, &EvalConfig::default()).unwrap();
        assert_eq!((r.map, r.map50, r.map25), (0.0, 0.0, 0.0));
    }

    #[test]
    fn unknown_labels_and_empty_gt_are_errors() {
        let gts = vec![GroundTruthInstance {
            label: "a".into(),
            points: segment(3),
        }];
        let pred = instances(vec![cloud("zebra", segment(3), 1.0)]);
        match evaluate_scene(&pred, &gts, &EvalConfig::default()) {
            Err(Error::UnknownLabels(l)) => assert_eq!(l, vec!["zebra".to_string()]),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            evaluate_scene(&SceneInstances::default(), &[], &EvalConfig::default()),
            Err(Error::NothingToEvaluate)
        ));
    }

    #[test]
    fn iou_between_thresholds() {
        // gt: 10 voxels; pred: 4 of them -> IoU 0.4
        let gts = vec![GroundTruthInstance {
            label: "a".into(),
            points: segment(10),
        }];
        let pred = instances(vec![cloud("a", segment(4), 0.7)]);
        let r = evaluate_scene(&pred, &gts, &EvalConfig::default()).unwrap();
        let c = r.per_class["a"];
        assert_eq!((c.ap25, c.ap50, c.ap), (1.0, 0.0, 0.0));
    }

    #[test]
    fn macro_average_weighs_scenes_equally() {
        let mk = |m: f64| EvalReport {
            map: m,
            map50: m,
            map25: m,
            per_class: BTreeMap::from([(
                "a".to_string(),
                ClassAp {
                    ap: m,
                    ap50: m,
                    ap25: m,
                    num_gt: 1,
                    num_pred: 1,
                    tp50: 1,
                    tp25: 1,
                },
            )]),
            scenes: 1,
            averaging: "macro".into(),
        };
        let avg = EvalReport::macro_average(&[mk(1.0), mk(0.5)]).unwrap();
        assert_eq!((avg.map, avg.scenes), (0.75, 2));
        assert_eq!(avg.per_class["a"].num_gt, 2);
        assert!(avg.to_table().contains("75.0"));
    }
}
