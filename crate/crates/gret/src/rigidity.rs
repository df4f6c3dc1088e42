//! Randomized certification of exact recovery, and body-graph diagnostics.
//!
//! The patch framework is affinely rigid exactly when the patch-stress
//! matrix has rank `(M-1)d`, and that rank is invariant across generic
//! configurations on a fixed membership graph. The test therefore samples
//! random configurations in the unit cube, assigns each point's own
//! coordinates as its local coordinates in every patch containing it,
//! and measures the rank of the resulting raw stress matrix `C_0`.
//!
//! A positive certificate guarantees exact recovery for both the spectral
//! and the semidefinite pipeline on clean data. A negative certificate
//! rules out a spectral guarantee but says nothing about the semidefinite
//! one, whose exact-recovery condition (universal rigidity of the body
//! graph) is strictly weaker.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::assembly::SystemMatrices;
use crate::error::{Error, Result};
use crate::linalg::{numeric_rank, symmetric_eig, DEFAULT_RANK_TOL};
use crate::model::{Configuration, MembershipGraph, PatchFramework, RigidTransform};
use crate::seeding::{derive_seed, rng_from};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Positive,
    Negative,
}

/// Outcome of the randomized rank test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RigidityCertificate {
    pub measured_rank: usize,
    pub required_rank: usize,
    pub verdict: Verdict,
    pub seed: u64,
    pub trials: usize,
    pub per_trial_ranks: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Randomized rank test on a membership graph.
///
/// Runs `trials` independent draws (plus one tie-break draw if they
/// disagree, which for generic samples is a numerical borderline case and
/// is flagged). The verdict is positive only if every recorded trial
/// measures the full rank `(M-1)d`; a positive certificate must be sound,
/// so any deficient draw blocks it.
pub fn gret_rrt(
    graph: &MembershipGraph,
    dimension: usize,
    seed: u64,
    trials: usize,
) -> Result<RigidityCertificate> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    if dimension == 0 {
        return Err(Error::InvalidConfig("dimension must be positive".into()));
    }
    if !graph.is_connected() {
        return Err(Error::Disconnected);
    }
    let required_rank = (graph.num_patches - 1) * dimension;
    let members = graph.patch_members();

    let mut per_trial_ranks = Vec::with_capacity(trials);
    for trial in 0..trials {
        per_trial_ranks.push(raw_stress_rank(
            graph,
            &members,
            dimension,
            seed,
            trial as u64,
        )?);
    }

    let mut warnings = Vec::new();
    if per_trial_ranks.windows(2).any(|w| w[0] != w[1]) {
        warnings.push(
            "trial ranks disagree; sampling hit a rank borderline, running a tie-break trial"
                .into(),
        );
        let rank = raw_stress_rank(graph, &members, dimension, seed, trials as u64)?;
        per_trial_ranks.push(rank);
    }

    let measured_rank = *per_trial_ranks.iter().max().expect("at least one trial");
    let verdict = if per_trial_ranks.iter().all(|&r| r == required_rank) {
        Verdict::Positive
    } else {
        Verdict::Negative
    };
    Ok(RigidityCertificate {
        measured_rank,
        required_rank,
        verdict,
        seed,
        trials: per_trial_ranks.len(),
        per_trial_ranks,
        warnings,
    })
}

/// One trial: sample a configuration from the unit cube, use raw coordinates
/// as measurements, and measure `rank(C_0)`.
fn raw_stress_rank(
    graph: &MembershipGraph,
    members: &[Vec<usize>],
    dimension: usize,
    seed: u64,
    trial: u64,
) -> Result<usize> {
    let mut rng = rng_from(derive_seed(seed, "rrt-trial", &[trial]));
    let coords = DMatrix::from_fn(dimension, graph.num_points, |_, _| rng.random::<f64>());
    let config = Configuration::new(coords)?;
    let identities: Vec<RigidTransform> = (0..graph.num_patches)
        .map(|_| RigidTransform::identity(dimension))
        .collect();
    let fw = PatchFramework::from_patches(&config, members, &identities)?;
    let sys = SystemMatrices::assemble(&fw)?;
    Ok(numeric_rank(&symmetric_eig(&sys.stress)?, DEFAULT_RANK_TOL))
}

/// An edge of the body graph with its measured intra-patch distance.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyEdge {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
}

/// Graph on the points with an edge wherever two points share a patch,
/// weighted by the distance between their local coordinates. When an edge
/// appears in several patches the first patch's distance is stored and the
/// worst disagreement across patches is recorded; on clean data all
/// patch-wise distances agree.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyGraph {
    pub num_points: usize,
    pub edges: Vec<BodyEdge>,
    pub max_discrepancy: f64,
}

pub fn build_body_graph(fw: &PatchFramework) -> BodyGraph {
    let mut distances: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut max_discrepancy = 0.0f64;
    for i in 0..fw.num_patches() {
        let members: Vec<(usize, &DVector<f64>)> =
            fw.patch_edges(i).map(|e| (e.point, &e.local)).collect();
        for (ai, &(a, xa)) in members.iter().enumerate() {
            for &(b, xb) in members.iter().skip(ai + 1) {
                let key = if a < b { (a, b) } else { (b, a) };
                let dist = (xa - xb).norm();
                match distances.get(&key) {
                    None => {
                        distances.insert(key, dist);
                    }
                    Some(&first) => {
                        max_discrepancy = max_discrepancy.max((dist - first).abs());
                    }
                }
            }
        }
    }
    BodyGraph {
        num_points: fw.num_points(),
        edges: distances
            .into_iter()
            .map(|((a, b), distance)| BodyEdge { a, b, distance })
            .collect(),
        max_discrepancy,
    }
}
