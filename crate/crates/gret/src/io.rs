//! Framework and configuration file I/O.
//!
//! Framework files are UTF-8 JSON:
//!
//! ```json
//! {"dimension": 2, "num_points": 3,
//!  "patches": [{"id": 1, "members": [{"point": 1, "coords": [0.0, 1.0]}]}]}
//! ```
//!
//! Configuration files: `{"dimension": d, "points": [[f64; d]; N]}`.
//!
//! Point and patch indices are 1-based on disk and converted to 0-based
//! internally. Saving emits members sorted by point index and patches by id,
//! so `load -> save -> load` is a fixed point.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Configuration, Edge, PatchFramework};

#[derive(Serialize, Deserialize)]
struct FrameworkDoc {
    dimension: usize,
    num_points: usize,
    patches: Vec<PatchDoc>,
}

#[derive(Serialize, Deserialize)]
struct PatchDoc {
    id: usize,
    members: Vec<MemberDoc>,
}

#[derive(Serialize, Deserialize)]
struct MemberDoc {
    point: usize,
    coords: Vec<f64>,
}

/// Parses a framework document, reporting schema violations with their
/// location in the document.
pub fn load_framework(bytes: &[u8]) -> Result<PatchFramework> {
    let doc: FrameworkDoc = serde_json::from_slice(bytes)?;
    let num_patches = doc.patches.len();
    let mut seen_ids = vec![false; num_patches];
    let mut edges = Vec::new();
    for (pi, patch) in doc.patches.iter().enumerate() {
        let location = format!("patches[{pi}]");
        if patch.id == 0 || patch.id > num_patches {
            return Err(Error::IndexOutOfRange {
                location,
                kind: "patch",
                index: patch.id,
                max: num_patches,
            });
        }
        if seen_ids[patch.id - 1] {
            return Err(Error::DuplicateEdge {
                location,
                point: 0,
                patch: patch.id,
            });
        }
        seen_ids[patch.id - 1] = true;
        for (mi, member) in patch.members.iter().enumerate() {
            let location = format!("patches[{pi}].members[{mi}]");
            if member.point == 0 || member.point > doc.num_points {
                return Err(Error::IndexOutOfRange {
                    location,
                    kind: "point",
                    index: member.point,
                    max: doc.num_points,
                });
            }
            if member.coords.len() != doc.dimension {
                return Err(Error::CoordinateLength {
                    location,
                    got: member.coords.len(),
                    expected: doc.dimension,
                });
            }
            edges.push(Edge {
                point: member.point - 1,
                patch: patch.id - 1,
                local: DVector::from_row_slice(&member.coords),
            });
        }
    }
    PatchFramework::new(doc.dimension, doc.num_points, num_patches, edges)
}

/// Serializes a framework in canonical order (patches by id, members by
/// point index), pretty-printed.
pub fn save_framework(fw: &PatchFramework) -> String {
    let patches = (0..fw.num_patches())
        .map(|i| PatchDoc {
            id: i + 1,
            members: fw
                .patch_edges(i)
                .map(|e| MemberDoc {
                    point: e.point + 1,
                    coords: e.local.iter().cloned().collect(),
                })
                .collect(),
        })
        .collect();
    let doc = FrameworkDoc {
        dimension: fw.dimension(),
        num_points: fw.num_points(),
        patches,
    };
    serde_json::to_string_pretty(&doc).expect("framework serialization cannot fail")
}

pub fn load_framework_file(path: &Path) -> Result<PatchFramework> {
    load_framework(&std::fs::read(path)?)
}

pub fn save_framework_file(path: &Path, fw: &PatchFramework) -> Result<()> {
    std::fs::write(path, save_framework(fw) + "\n")?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ConfigurationDoc {
    dimension: usize,
    points: Vec<Vec<f64>>,
}

pub fn load_configuration(bytes: &[u8]) -> Result<Configuration> {
    let doc: ConfigurationDoc = serde_json::from_slice(bytes)?;
    for (k, p) in doc.points.iter().enumerate() {
        if p.len() != doc.dimension {
            return Err(Error::CoordinateLength {
                location: format!("points[{k}]"),
                got: p.len(),
                expected: doc.dimension,
            });
        }
    }
    let coords = DMatrix::from_fn(doc.dimension, doc.points.len(), |r, c| doc.points[c][r]);
    Configuration::new(coords)
}

pub fn save_configuration(config: &Configuration) -> String {
    let doc = ConfigurationDoc {
        dimension: config.dimension(),
        points: (0..config.num_points())
            .map(|k| config.point(k).iter().cloned().collect())
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("configuration serialization cannot fail")
}

pub fn load_configuration_file(path: &Path) -> Result<Configuration> {
    load_configuration(&std::fs::read(path)?)
}

pub fn save_configuration_file(path: &Path, config: &Configuration) -> Result<()> {
    std::fs::write(path, save_configuration(config) + "\n")?;
    Ok(())
}

#[derive(Serialize)]
struct TransformDoc {
    #[serde(rename = "O")]
    orthogonal: Vec<Vec<f64>>,
    t: Vec<f64>,
}

#[derive(Serialize)]
struct ResultDiagnosticsDoc {
    method: String,
    lower_bound: f64,
    relaxation_rank: usize,
    stress_rank: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    spectral_margin: Option<f64>,
    tight: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
    warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rmsd: Option<f64>,
}

#[derive(Serialize)]
struct ResultDoc {
    coordinates: Vec<Vec<f64>>,
    transforms: Vec<TransformDoc>,
    objective: f64,
    diagnostics: ResultDiagnosticsDoc,
}

/// Serializes a registration result. Wall-clock time is deliberately left
/// out so identical invocations write identical bytes; `rmsd` is included
/// when a ground truth was supplied.
pub fn registration_to_json(
    result: &crate::registration::RegistrationResult,
    rmsd: Option<f64>,
) -> String {
    let coords = &result.coordinates;
    let doc = ResultDoc {
        coordinates: (0..coords.num_points())
            .map(|k| coords.point(k).iter().cloned().collect())
            .collect(),
        transforms: result
            .transforms
            .iter()
            .map(|t| TransformDoc {
                orthogonal: (0..t.orthogonal.nrows())
                    .map(|r| t.orthogonal.row(r).iter().cloned().collect())
                    .collect(),
                t: t.translation.iter().cloned().collect(),
            })
            .collect(),
        objective: result.objective,
        diagnostics: ResultDiagnosticsDoc {
            method: result.diagnostics.method.to_string(),
            lower_bound: result.diagnostics.lower_bound,
            relaxation_rank: result.diagnostics.relaxation_rank,
            stress_rank: result.diagnostics.stress_rank,
            spectral_margin: result.diagnostics.spectral_margin,
            tight: result.diagnostics.tight,
            iterations: result.diagnostics.iterations,
            warnings: result.diagnostics.warnings.clone(),
            rmsd,
        },
    };
    serde_json::to_string_pretty(&doc).expect("result serialization cannot fail")
}

/// Writes a dense matrix as CSV, one row per line.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|c| format!("{:.17e}", m[(r, c)]))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
