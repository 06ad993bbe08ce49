//! ASCII PLY point I/O (x, y, z vertex properties).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Point3;

use crate::error::{Error, Result};

/// Writes points as `property float` x/y/z. Refuses empty clouds.
pub fn write_points(path: &Path, points: &[Point3<f64>]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut out = String::with_capacity(96 + points.len() * 30);
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "element vertex {}", points.len());
    out.push_str("property float x\nproperty float y\nproperty float z\nend_header\n");
    for p in points {
        let _ = writeln!(out, "{} {} {}", p.x as f32, p.y as f32, p.z as f32);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_points(path: &Path) -> Result<Vec<Point3<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_points(&text).map_err(|m| Error::parse(path, m))
}

fn parse_points(text: &str) -> std::result::Result<Vec<Point3<f64>>, String> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err("missing 'ply' magic line".into());
    }
    let mut vertex_count = None;
    let mut in_vertex = false;
    let mut props: Vec<String> = Vec::new();
    loop {
        let line = lines
            .next()
            .ok_or("header not terminated by end_header")?
            .trim();
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["end_header"] => break,
            ["format", fmt, _] if *fmt != "ascii" => {
                return Err(format!("unsupported PLY format '{fmt}'"))
            }
            ["element", name, n] => {
                in_vertex = *name == "vertex";
                if in_vertex {
                    vertex_count = Some(
                        n.parse::<usize>()
                            .map_err(|_| format!("bad vertex count '{n}'"))?,
                    );
                } else if vertex_count.is_none() {
                    return Err("elements before 'vertex' are not supported".into());
                }
            }
            ["property", "list", ..] if in_vertex => {
                return Err("list properties on vertices are not supported".into())
            }
            ["property", _ty, name] if in_vertex => props.push(name.to_string()),
            _ => {}
        }
    }
    let n = vertex_count.ok_or("no vertex element in header")?;
    let col = |axis: &str| {
        props
            .iter()
            .position(|p| p == axis)
            .ok_or_else(|| format!("vertex property '{axis}' missing"))
    };
    let (ix, iy, iz) = (col("x")?, col("y")?, col("z")?);
    let mut points = Vec::with_capacity(n);
    for (i, line) in lines.filter(|l| !l.trim().is_empty()).take(n).enumerate() {
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|w| w.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| format!("vertex {i}: {e}"))?;
        if vals.len() != props.len() {
            return Err(format!(
                "vertex {i}: expected {} values, found {}",
                props.len(),
                vals.len()
            ));
        }
        points.push(Point3::new(vals[ix], vals[iy], vals[iz]));
    }
    if points.len() != n {
        return Err(format!(
            "header declares {n} vertices, found {}",
            points.len()
        ));
    }
    Ok(points)
}
