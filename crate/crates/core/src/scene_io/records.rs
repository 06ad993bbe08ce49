//! JSON documents: the per-instance box list written by detection, and the
//! ground-truth index that points at per-instance PLY files.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use super::ply;
use crate::error::{Error, Result};
use crate::evaluation::GroundTruthInstance;
use crate::fusion::SceneInstances;
use crate::projection::{Box3D, ObjectCloud, ObjectInstance};

pub const BOXES_FILE: &str = "boxes.json";
pub const GT_INDEX: &str = "instances.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRecord {
    pub label: String,
    pub score: f64,
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub point_count: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub source_frames: Vec<String>,
    /// Cloud file relative to the document, when clouds were exported.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cloud: Option<String>,
}

impl BoxRecord {
    pub fn bbox(&self) -> Box3D {
        Box3D {
            min: Point3::from(self.min),
            max: Point3::from(self.max),
        }
    }

    pub fn from_instance(inst: &ObjectInstance, cloud: Option<String>) -> Self {
        Self {
            label: inst.cloud.label.clone(),
            score: inst.cloud.score,
            min: inst.bbox.min.coords.into(),
            max: inst.bbox.max.coords.into(),
            point_count: inst.cloud.points.len(),
            source_frames: inst.cloud.source_frames.iter().cloned().collect(),
            cloud,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct BoxesDocument {
    pub instances: Vec<BoxRecord>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable document");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
}

/// Writes one record per instance (label, score, corners, point count).
pub fn write_boxes(instances: &SceneInstances, path: &Path) -> Result<()> {
    let doc = BoxesDocument {
        instances: instances
            .instances
            .iter()
            .map(|i| BoxRecord::from_instance(i, None))
            .collect(),
    };
    write_json(path, &doc)
}

pub fn read_boxes(path: &Path) -> Result<Vec<BoxRecord>> {
    Ok(read_json::<BoxesDocument>(path)?.instances)
}

pub fn write_cloud_ply(cloud: &ObjectCloud, path: &Path) -> Result<()> {
    ply::write_points(path, &cloud.points)
}

fn cloud_name(i: usize) -> String {
    format!("instance_{i:03}.ply")
}

/// Exports `boxes.json` plus one PLY per instance into `dir`.
pub fn write_instances(instances: &SceneInstances, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut records = Vec::with_capacity(instances.len());
    for (i, inst) in instances.instances.iter().enumerate() {
        let name = cloud_name(i);
        write_cloud_ply(&inst.cloud, &dir.join(&name))?;
        records.push(BoxRecord::from_instance(inst, Some(name)));
    }
    let path = dir.join(BOXES_FILE);
    write_json(&path, &BoxesDocument { instances: records })?;
    Ok(path)
}

/// Reads a directory written by [`write_instances`].
pub fn load_instances(dir: &Path) -> Result<SceneInstances> {
    let path = dir.join(BOXES_FILE);
    let mut instances = Vec::new();
    for (i, rec) in read_boxes(&path)?.into_iter().enumerate() {
        let file = rec
            .cloud
            .clone()
            .ok_or_else(|| Error::parse(&path, format!("instance {i} has no cloud file")))?;
        let cloud_path = dir.join(&file);
        let points = ply::read_points(&cloud_path)?;
        if points.len() != rec.point_count {
            return Err(Error::parse(
                &cloud_path,
                format!("{} points, record says {}", points.len(), rec.point_count),
            ));
        }
        instances.push(ObjectInstance {
            bbox: rec.bbox(),
            cloud: ObjectCloud {
                points,
                label: rec.label,
                score: rec.score,
                source_frames: rec.source_frames.into_iter().collect::<BTreeSet<_>>(),
            },
        });
    }
    Ok(SceneInstances { instances })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GtRecord {
    label: String,
    points: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GtDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vocabulary: Option<Vec<String>>,
    instances: Vec<GtRecord>,
}

/// Writes `instances.json` and one PLY per ground-truth instance into `gt_dir`.
pub fn write_ground_truth(
    gt_dir: &Path,
    instances: &[GroundTruthInstance],
    vocabulary: Option<&[String]>,
) -> Result<()> {
    fs::create_dir_all(gt_dir).map_err(|e| Error::io(gt_dir, e))?;
    let mut records = Vec::with_capacity(instances.len());
    for (i, g) in instances.iter().enumerate() {
        let name = cloud_name(i);
        ply::write_points(&gt_dir.join(&name), &g.points)?;
        records.push(GtRecord {
            label: g.label.clone(),
            points: name,
        });
    }
    write_json(
        &gt_dir.join(GT_INDEX),
        &GtDocument {
            vocabulary: vocabulary.map(<[String]>::to_vec),
            instances: records,
        },
    )
}

pub fn read_ground_truth(gt_dir: &Path) -> Result<super::GroundTruth> {
    let path = gt_dir.join(GT_INDEX);
    let doc: GtDocument = read_json(&path)?;
    let mut instances = Vec::with_capacity(doc.instances.len());
    for (i, r) in doc.instances.into_iter().enumerate() {
        if r.label.trim().is_empty() {
            return Err(Error::validation(
                "gt",
                format!("instances[{i}].label"),
                "label is empty",
            ));
        }
        let points = ply::read_points(&gt_dir.join(&r.points))?;
        if points.is_empty() {
            return Err(Error::validation(
                "gt",
                format!("instances[{i}].points"),
                "no points",
            ));
        }
        instances.push(GroundTruthInstance {
            label: r.label,
            points,
        });
    }
    if let Some(vocab) = &doc.vocabulary {
        if let Some(g) = instances.iter().find(|g| !vocab.contains(&g.label)) {
            return Err(Error::validation(
                "gt",
                "vocabulary",
                format!("instance label '{}' is not in the vocabulary", g.label),
            ));
        }
    }
    Ok(super::GroundTruth {
        instances,
        vocabulary: doc.vocabulary,
    })
}
