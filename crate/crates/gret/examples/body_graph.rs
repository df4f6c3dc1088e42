//! Inspecting the body graph: the distance structure the patches induce on
//! the points.
//!
//! Points sharing a patch get an edge weighted by their intra-patch
//! distance. On clean data every patch agrees on these distances; under
//! noise the recorded discrepancy grows with the noise level.
//!
//! Run with: cargo run --release --example body_graph

use gret::generate::generate_lateration;
use gret::harness::{perturb_measurements, NoiseMode, NoiseSpec};
use gret::rigidity::build_body_graph;
use gret::seeding::derive_seed;

fn main() {
    let instance = generate_lateration(10, 3, 2, 3, 21).unwrap();
    for (li, eps) in [0.0, 0.05, 0.2].iter().enumerate() {
        let noisy = perturb_measurements(
            &instance.framework,
            &NoiseSpec {
                epsilon: *eps,
                mode: NoiseMode::Ball,
                seed: derive_seed(21, "body-noise", &[li as u64]),
            },
        )
        .unwrap();
        let body = build_body_graph(&noisy);
        let mean: f64 =
            body.edges.iter().map(|e| e.distance).sum::<f64>() / body.edges.len() as f64;
        println!(
            "eps {eps:<4}: {} body edges, mean distance {mean:.3}, max patch disagreement {:.3e}",
            body.edges.len(),
            body.max_discrepancy
        );
    }
}
