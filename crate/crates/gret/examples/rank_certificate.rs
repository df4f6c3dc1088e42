//! Certifying exact recovery from the membership graph alone.
//!
//! The randomized rank test needs no measurements: it samples a generic
//! configuration, builds the raw patch-stress matrix, and compares its rank
//! against (M-1)d. A laterated system passes; a chain of patches sharing
//! only two points per joint fails in the plane.
//!
//! Run with: cargo run --release --example rank_certificate

use gret::generate::generate_lateration;
use gret::model::MembershipGraph;
use gret::rigidity::gret_rrt;

fn main() {
    let instance = generate_lateration(10, 3, 2, 3, 11).unwrap();
    let cert = gret_rrt(&instance.framework.membership_graph(), 2, 11, 2).unwrap();
    println!("laterated system:");
    println!("{}\n", serde_json::to_string_pretty(&cert).unwrap());

    // Three patches chained through two shared points each.
    let members: [&[usize]; 3] = [&[0, 1, 2, 3], &[2, 3, 4, 5], &[4, 5, 6, 7]];
    let mut edges = Vec::new();
    for (i, list) in members.iter().enumerate() {
        for &k in *list {
            edges.push((k, i));
        }
    }
    let chain = MembershipGraph {
        num_points: 8,
        num_patches: 3,
        edges,
    };
    let cert = gret_rrt(&chain, 2, 11, 2).unwrap();
    println!("two-point chain:");
    println!("{}", serde_json::to_string_pretty(&cert).unwrap());
}
