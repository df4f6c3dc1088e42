//! Spectral relaxation of the registration problem.
//!
//! The translation-eliminated objective `Tr(C O^T O)` is minimized over the
//! relaxed domain of `d x Md` matrices with orthogonal rows of norm
//! `sqrt(M)`. The minimizer is read off the bottom `d` eigenvectors of the
//! patch-stress matrix, every `d x d` block is rounded to its nearest
//! orthogonal matrix, and coordinates follow from `Z = O B L^+`. When the
//! unrounded blocks are already orthogonal the relaxation is tight and the
//! output is the global minimizer of the original non-convex problem.

use std::time::Instant;

use nalgebra::DMatrix;

use crate::assembly::SystemMatrices;
use crate::error::Result;
use crate::linalg::{numeric_rank, polar_round, symmetric_eig, Spectrum, DEFAULT_RANK_TOL};
use crate::model::PatchFramework;
use crate::registration::{finish_registration, Diagnostics, Method, RegistrationResult};

/// A block of the unrounded spectral solution counts as orthogonal when
/// `||W_i^T W_i - I||_F` is below this; if all blocks pass, the relaxation
/// is tight.
pub const BLOCK_ORTHOGONALITY_TOL: f64 = 1e-6;

/// Relative spectral-gap threshold below which the eigenvalue boundary at
/// position `d` is flagged as degenerate.
pub const GAP_DEGENERACY_TOL: f64 = 1e-10;

/// Spectral registration over Euclidean transforms.
pub fn gret_spec(fw: &PatchFramework) -> Result<RegistrationResult> {
    let sys = SystemMatrices::assemble(fw)?;
    gret_spec_with(fw, &sys)
}

/// Spectral registration against a pre-assembled system. Useful when several
/// solvers share one assembly.
pub fn gret_spec_with(fw: &PatchFramework, sys: &SystemMatrices) -> Result<RegistrationResult> {
    let start = Instant::now();
    let d = fw.dimension();
    let m = fw.num_patches();

    let spectrum = symmetric_eig(&sys.stress)?;
    let (w, tight) = spectral_blocks(&spectrum, d, m);
    let blocks: Vec<DMatrix<f64>> = (0..m)
        .map(|i| polar_round(&w.view((0, i * d), (d, d)).into_owned()))
        .collect();

    let lower_bound = m as f64 * spectrum.eigenvalues.iter().take(d).sum::<f64>();
    let spectral_margin = (m * d > d).then(|| spectrum.eigenvalues[d]);
    let mut warnings = Vec::new();
    if let Some(mu_next) = spectral_margin {
        let gap = mu_next - spectrum.eigenvalues[d - 1];
        if gap < GAP_DEGENERACY_TOL * spectrum.spectral_norm() {
            warnings.push(format!(
                "gap-degenerate: spectral gap {gap:.3e} at the eigenvalue boundary; \
                 the recovered transforms are poorly conditioned"
            ));
        }
    }

    let diagnostics = Diagnostics {
        method: Method::Spec,
        lower_bound,
        relaxation_rank: d,
        stress_rank: numeric_rank(&spectrum, DEFAULT_RANK_TOL),
        spectral_margin,
        tight,
        wall_ms: 0.0,
        iterations: None,
        warnings,
        objective_history: None,
    };
    let mut result = finish_registration(fw, sys, blocks, diagnostics)?;
    result.diagnostics.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(result)
}

/// The unrounded relaxation solution `W = sqrt(M) [r_1 ... r_d]^T` built
/// from the bottom `d` eigenvectors, plus the block-orthogonality verdict.
fn spectral_blocks(spectrum: &Spectrum, d: usize, m: usize) -> (DMatrix<f64>, bool) {
    let scale = (m as f64).sqrt();
    let mut w = DMatrix::zeros(d, m * d);
    for j in 0..d {
        w.row_mut(j)
            .copy_from(&(spectrum.eigenvectors.column(j).transpose() * scale));
    }
    let identity = DMatrix::identity(d, d);
    let tight = (0..m).all(|i| {
        let block = w.view((0, i * d), (d, d));
        (block.transpose() * block - &identity).norm() <= BLOCK_ORTHOGONALITY_TOL
    });
    (w, tight)
}
