//! Synthetic framework generators for experiments and tests.
//!
//! Two families: *laterated* frameworks, where each patch shares at least
//! `overlap >= d + 1` points with the union of its predecessors (a
//! sufficient condition for exact recovery), and *clustered* frameworks,
//! where a point cloud is partitioned k-means style and each cluster is
//! augmented with its nearest foreign points to create overlap. A
//! grid-sampled letterform cloud stands in for structured scan data.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Configuration, PatchFramework, RigidTransform};
use crate::seeding::{derive_seed, rng_from};

/// A generated problem: the framework handed to solvers plus the ground
/// truth it was cut from.
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub framework: PatchFramework,
    pub truth: Configuration,
    pub transforms: Vec<RigidTransform>,
}

/// Random laterated framework: a configuration uniform in the unit cube,
/// patch 1 seeded with the first points, and every later patch combining
/// fresh points with `overlap` points drawn from its predecessors.
pub fn generate_lateration(
    num_points: usize,
    num_patches: usize,
    dimension: usize,
    overlap: usize,
    seed: u64,
) -> Result<GeneratedInstance> {
    if num_points == 0 || num_patches == 0 || dimension == 0 {
        return Err(Error::InfeasibleParams(
            "points, patches, and dimension must be positive".into(),
        ));
    }
    if overlap < dimension + 1 {
        return Err(Error::InfeasibleParams(format!(
            "overlap {overlap} is below d + 1 = {}",
            dimension + 1
        )));
    }
    let first = (dimension + 1)
        .max(overlap)
        .max(num_points.div_ceil(num_patches));
    if first > num_points {
        return Err(Error::InfeasibleParams(format!(
            "{num_points} points cannot seed a first patch of {first}"
        )));
    }
    if num_patches > 1 && num_points - first < num_patches - 1 {
        return Err(Error::InfeasibleParams(format!(
            "{num_points} points cannot populate {num_patches} patches after a first patch of {first}"
        )));
    }

    let mut config_rng = rng_from(derive_seed(seed, "config", &[]));
    let truth = Configuration::new(DMatrix::from_fn(dimension, num_points, |_, _| {
        config_rng.random::<f64>()
    }))?;

    let mut membership_rng = rng_from(derive_seed(seed, "membership", &[]));
    let mut members: Vec<Vec<usize>> = vec![(0..first).collect()];
    let mut used = first;
    for i in 1..num_patches {
        let remaining_patches = num_patches - i;
        let fresh = ((num_points - used) / remaining_patches).max(1);
        let fresh = if i == num_patches - 1 {
            num_points - used
        } else {
            fresh
        };
        let mut list: Vec<usize> = (used..used + fresh).collect();
        let mut pool: Vec<usize> = (0..used).collect();
        pool.shuffle(&mut membership_rng);
        list.extend_from_slice(&pool[..overlap]);
        list.sort_unstable();
        members.push(list);
        used += fresh;
    }

    let mut transform_rng = rng_from(derive_seed(seed, "transforms", &[]));
    let transforms: Vec<RigidTransform> = (0..num_patches)
        .map(|_| RigidTransform::random(dimension, &mut transform_rng))
        .collect();
    let framework = PatchFramework::from_patches(&truth, &members, &transforms)?;
    Ok(GeneratedInstance {
        framework,
        truth,
        transforms,
    })
}

/// Clustered framework over an existing point cloud: k-means partition into
/// `num_patches` clusters, each augmented by its `augment_count` nearest
/// foreign points, then observed through one random rigid transform per
/// patch.
pub fn generate_clustered(
    points: &Configuration,
    num_patches: usize,
    augment_count: usize,
    seed: u64,
) -> Result<GeneratedInstance> {
    let n = points.num_points();
    let d = points.dimension();
    if num_patches == 0 || num_patches > n {
        return Err(Error::InfeasibleParams(format!(
            "{num_patches} patches over {n} points"
        )));
    }

    const MAX_ATTEMPTS: usize = 10;
    let mut assignment = None;
    for attempt in 0..MAX_ATTEMPTS {
        if let Some(found) = kmeans(points, num_patches, seed, attempt as u64) {
            assignment = Some(found);
            break;
        }
    }
    let assignment = assignment.ok_or(Error::EmptyCluster(MAX_ATTEMPTS))?;

    let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); num_patches];
    for (k, &cluster) in assignment.iter().enumerate() {
        clusters[cluster].push(k);
    }
    let members: Vec<Vec<usize>> = clusters
        .iter()
        .enumerate()
        .map(|(i, cluster)| {
            let mut foreign: Vec<(f64, usize)> = (0..n)
                .filter(|k| assignment[*k] != i)
                .map(|k| {
                    let dist = cluster
                        .iter()
                        .map(|&c| (points.point(k) - points.point(c)).norm_squared())
                        .fold(f64::INFINITY, f64::min);
                    (dist, k)
                })
                .collect();
            foreign.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut list = cluster.clone();
            list.extend(foreign.iter().take(augment_count).map(|&(_, k)| k));
            list.sort_unstable();
            list
        })
        .collect();

    let mut transform_rng = rng_from(derive_seed(seed, "transforms", &[]));
    let transforms: Vec<RigidTransform> = (0..num_patches)
        .map(|_| RigidTransform::random(d, &mut transform_rng))
        .collect();
    let framework = PatchFramework::from_patches(points, &members, &transforms)?;
    Ok(GeneratedInstance {
        framework,
        truth: points.clone(),
        transforms,
    })
}

/// Lloyd iterations with a k-means++ start. Returns `None` when a cluster
/// comes up empty, so the caller can retry with a fresh sub-seed.
fn kmeans(points: &Configuration, m: usize, seed: u64, attempt: u64) -> Option<Vec<usize>> {
    let n = points.num_points();
    let mut rng = rng_from(derive_seed(seed, "kmeans", &[attempt]));

    let mut centers: Vec<DVector<f64>> = Vec::with_capacity(m);
    centers.push(points.point(rng.random_range(0..n)));
    while centers.len() < m {
        let weights: Vec<f64> = (0..n)
            .map(|k| {
                centers
                    .iter()
                    .map(|c| (points.point(k) - c).norm_squared())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (k, &w) in weights.iter().enumerate() {
                if target < w {
                    chosen = k;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(points.point(next));
    }

    let mut assignment = vec![0usize; n];
    for _ in 0..100 {
        let mut changed = false;
        for (k, slot) in assignment.iter_mut().enumerate() {
            let mut best = 0;
            let mut best_dist = f64::INFINITY;
            for (i, c) in centers.iter().enumerate() {
                let dist = (points.point(k) - c).norm_squared();
                if dist < best_dist {
                    best_dist = dist;
                    best = i;
                }
            }
            if *slot != best {
                *slot = best;
                changed = true;
            }
        }
        let mut counts = vec![0usize; m];
        let mut sums = vec![DVector::<f64>::zeros(points.dimension()); m];
        for (k, &slot) in assignment.iter().enumerate() {
            counts[slot] += 1;
            sums[slot] += points.point(k);
        }
        if counts.contains(&0) {
            return None;
        }
        for i in 0..m {
            centers[i] = &sums[i] / counts[i] as f64;
        }
        if !changed {
            break;
        }
    }
    Some(assignment)
}

/// Default glyph string for the letterform cloud.
pub const DEFAULT_LETTERFORM_TEXT: &str = "GRET";

const GLYPH_ROWS: usize = 7;
const GLYPH_COLS: usize = 5;
const GLYPH_DEPTH: usize = 2;

fn glyph(c: char) -> [&'static str; GLYPH_ROWS] {
    match c.to_ascii_uppercase() {
        'A' => [
            ".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#",
        ],
        'C' => [
            ".###.", "#...#", "#....", "#....", "#....", "#...#", ".###.",
        ],
        'D' => [
            "####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####.",
        ],
        'E' => [
            "#####", "#....", "#....", "####.", "#....", "#....", "#####",
        ],
        'G' => [
            ".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".###.",
        ],
        'M' => [
            "#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#",
        ],
        'P' => [
            "####.", "#...#", "#...#", "####.", "#....", "#....", "#....",
        ],
        'R' => [
            "####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#",
        ],
        'S' => [
            ".####", "#....", "#....", ".###.", "....#", "....#", "####.",
        ],
        'T' => [
            "#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#..",
        ],
        _ => [
            "#####", "#####", "#####", "#####", "#####", "#####", "#####",
        ],
    }
}

/// Grid-sampled point cloud shaped like block letters, in the plane
/// (`d = 2`) or extruded over two unit cells of depth (`d = 3`). Cells of
/// the glyph grid are subdivided just finely enough to reach `n` lattice
/// points; the surplus is discarded by a seeded draw, so exactly `n` points
/// come back.
pub fn letterform_points(
    text: &str,
    n: usize,
    dimension: usize,
    seed: u64,
) -> Result<Configuration> {
    if text.is_empty() || n == 0 {
        return Err(Error::InfeasibleParams(
            "letterform needs text and a positive point count".into(),
        ));
    }
    if !(dimension == 2 || dimension == 3) {
        return Err(Error::InfeasibleParams(format!(
            "letterform cloud supports d = 2 or 3, not {dimension}"
        )));
    }

    let depth = if dimension == 3 { GLYPH_DEPTH } else { 1 };
    let mut cells: Vec<(usize, usize, usize)> = Vec::new();
    for (li, ch) in text.chars().enumerate() {
        let rows = glyph(ch);
        for (row, line) in rows.iter().enumerate() {
            for (col, mark) in line.chars().enumerate() {
                if mark == '#' {
                    let x = li * (GLYPH_COLS + 1) + col;
                    let y = GLYPH_ROWS - row;
                    for z in 0..depth {
                        cells.push((x, y, z));
                    }
                }
            }
        }
    }
    // Baseline bar under the glyphs; it joins separated letters into one
    // connected solid so cluster augmentation can bridge them.
    let width = text.chars().count() * (GLYPH_COLS + 1) - 1;
    for x in 0..width {
        for z in 0..depth {
            cells.push((x, 0, z));
        }
    }

    let mut subdiv = 1usize;
    while cells.len() * subdiv.pow(dimension as u32) < n {
        subdiv += 1;
    }
    let mut lattice: Vec<DVector<f64>> = Vec::with_capacity(cells.len() * subdiv.pow(2));
    for &(x, y, z) in &cells {
        for ix in 0..subdiv {
            for iy in 0..subdiv {
                let px = x as f64 + (ix as f64 + 0.5) / subdiv as f64;
                let py = y as f64 + (iy as f64 + 0.5) / subdiv as f64;
                if dimension == 2 {
                    lattice.push(DVector::from_row_slice(&[px, py]));
                } else {
                    for iz in 0..subdiv {
                        let pz = z as f64 + (iz as f64 + 0.5) / subdiv as f64;
                        lattice.push(DVector::from_row_slice(&[px, py, pz]));
                    }
                }
            }
        }
    }

    let mut keep: Vec<usize> = (0..lattice.len()).collect();
    if lattice.len() > n {
        let mut rng = rng_from(derive_seed(seed, "letterform", &[]));
        keep.shuffle(&mut rng);
        keep.truncate(n);
        keep.sort_unstable();
    }
    let chosen: Vec<DVector<f64>> = keep.into_iter().map(|k| lattice[k].clone()).collect();
    Configuration::from_points(&chosen)
}
