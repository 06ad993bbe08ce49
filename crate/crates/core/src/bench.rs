//! Wall-clock timing of the geometry stages over an already-loaded scene.
//! File I/O is excluded; the detector and mask generator are inputs, so their
//! cost is not part of these numbers.

use std::time::Instant;

use serde::Serialize;

use crate::pipeline::{detect_scene, PipelineConfig};
use crate::scene_io::Scene;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRow {
    pub single_secs_per_scene: f64,
    pub single_secs_per_view: f64,
    pub parallel_secs_per_scene: f64,
    pub parallel_secs_per_view: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub views: usize,
    pub threads: usize,
    pub rows: Vec<BenchRow>,
    pub mean: BenchRow,
}

fn time_scene(scene: &Scene, config: &PipelineConfig, parallel: bool) -> f64 {
    let start = Instant::now();
    let (instances, _) = detect_scene(scene, config, parallel);
    let secs = start.elapsed().as_secs_f64();
    std::hint::black_box(instances);
    secs
}

pub fn bench_scene(scene: &Scene, config: &PipelineConfig, repeats: usize) -> BenchReport {
    let views = scene.frames.len().max(1) as f64;
    let rows: Vec<BenchRow> = (0..repeats)
        .map(|_| {
            let single = time_scene(scene, config, false);
            let parallel = time_scene(scene, config, true);
            BenchRow {
                single_secs_per_scene: single,
                single_secs_per_view: single / views,
                parallel_secs_per_scene: parallel,
                parallel_secs_per_view: parallel / views,
            }
        })
        .collect();
    let n = rows.len().max(1) as f64;
    let avg = |f: fn(&BenchRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let mean = BenchRow {
        single_secs_per_scene: avg(|r| r.single_secs_per_scene),
        single_secs_per_view: avg(|r| r.single_secs_per_view),
        parallel_secs_per_scene: avg(|r| r.parallel_secs_per_scene),
        parallel_secs_per_view: avg(|r| r.parallel_secs_per_view),
    };
    BenchReport {
        views: scene.frames.len(),
        threads: rayon::current_num_threads(),
        rows,
        mean,
    }
}

impl BenchReport {
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "# views: {}, threads: {} (geometry stages only, I/O excluded)\n{:<6} {:>14} {:>14} {:>14} {:>14}\n",
            self.views, self.threads, "run", "1T s/scene", "1T s/view", "par s/scene", "par s/view"
        );
        let line = |name: &str, r: &BenchRow| {
            format!(
                "{:<6} {:>14.6} {:>14.6} {:>14.6} {:>14.6}\n",
                name,
                r.single_secs_per_scene,
                r.single_secs_per_view,
                r.parallel_secs_per_scene,
                r.parallel_secs_per_view
            )
        };
        for (i, r) in self.rows.iter().enumerate() {
            out.push_str(&line(&(i + 1).to_string(), r));
        }
        out.push_str(&line("mean", &self.mean));
        out
    }
}

/// Best-effort CPU model string for reports.
pub fn hardware_description() -> String {
    let model = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|m| m.trim().to_string())
        })
        .unwrap_or_else(|| std::env::consts::ARCH.to_string());
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!("{model}, {cores} hardware threads")
}
