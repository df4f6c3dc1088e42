//! Closed-form alignment of two overlapping scans.
//!
//! The two-patch registration problem has an exact SVD-based solution: the
//! best orthogonal map plus translation between corresponding points. This
//! is both the historical starting point of the whole pipeline and the
//! building block used to score reconstructions (RMSD).
//!
//! Run with: cargo run --release --example two_patch_alignment

use gret::linalg::kabsch_align;
use gret::model::RigidTransform;
use gret::seeding::{derive_seed, rng_from};
use nalgebra::DMatrix;
use rand::Rng;

fn main() {
    let mut rng = rng_from(derive_seed(42, "two-patch-example", &[]));
    let n = 12;

    // A reference scan and a rigidly moved copy with small measurement noise.
    let reference = DMatrix::from_fn(3, n, |_, _| rng.random_range(-1.0..1.0));
    let motion = RigidTransform::random(3, &mut rng);
    let mut moved = &motion.orthogonal * &reference;
    for mut col in moved.column_iter_mut() {
        col += &motion.translation;
    }
    let noisy = &moved + DMatrix::from_fn(3, n, |_, _| rng.random_range(-1e-3..1e-3));

    let aligned = kabsch_align(&reference, &noisy);
    println!("true rotation:\n{:.4}", motion.orthogonal);
    println!("recovered rotation:\n{:.4}", aligned.transform.orthogonal);
    println!(
        "rotation error      {:.3e}",
        (&aligned.transform.orthogonal - &motion.orthogonal).norm()
    );
    println!(
        "translation error   {:.3e}",
        (&aligned.transform.translation - &motion.translation).norm()
    );
    println!("residual            {:.3e}", aligned.residual);
    println!("minimizer unique    {}", aligned.unique);
}
