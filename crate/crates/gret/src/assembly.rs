//! Assembly of the registration system: the membership-graph Laplacian `L`,
//! the coordinate coupling matrix `B`, the block-diagonal local Gram matrix
//! `D`, the Laplacian pseudoinverse, and the patch-stress matrix
//! `C = D - B L^+ B^T`.
//!
//! With `e_{ki} = e_k - e_{N+i}` in `R^{N+M}`, the sums over the edge set are
//!
//! ```text
//! L = sum e_{ki} e_{ki}^T
//! B = sum (e_i (x) I_d) x_{ki} e_{ki}^T
//! D = sum (e_i (x) I_d) x_{ki} x_{ki}^T (e_i (x) I_d)^T
//! ```
//!
//! Everything is stored dense; the targets here are desk scale (a few
//! thousand points, `M d` up to a couple hundred).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::PatchFramework;

/// Frobenius tolerance for the pseudoinverse identity
/// `L L^+ = I - ee^T/(N+M)`.
pub const PINV_IDENTITY_TOL: f64 = 1e-9;

/// `L`, `B`, `D` straight from the defining sums, before inversion.
#[derive(Debug, Clone)]
pub struct SystemCore {
    pub laplacian: DMatrix<f64>,
    pub coupling: DMatrix<f64>,
    pub local_gram: DMatrix<f64>,
    dimension: usize,
    num_points: usize,
    num_patches: usize,
}

impl SystemCore {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn num_patches(&self) -> usize {
        self.num_patches
    }
}

/// Builds `L`, `B`, `D` from a framework. Refuses disconnected frameworks:
/// the pseudoinverse identity, and with it the coordinate recovery formula,
/// only holds on a connected membership graph.
pub fn build_system(fw: &PatchFramework) -> Result<SystemCore> {
    if !fw.is_connected() {
        return Err(Error::Disconnected);
    }
    let d = fw.dimension();
    let n = fw.num_points();
    let m = fw.num_patches();
    let side = n + m;

    let mut laplacian = DMatrix::zeros(side, side);
    let mut coupling = DMatrix::zeros(m * d, side);
    let mut local_gram = DMatrix::zeros(m * d, m * d);

    for e in fw.edges() {
        let k = e.point;
        let i = n + e.patch;
        laplacian[(k, k)] += 1.0;
        laplacian[(i, i)] += 1.0;
        laplacian[(k, i)] -= 1.0;
        laplacian[(i, k)] -= 1.0;

        let row0 = e.patch * d;
        for r in 0..d {
            coupling[(row0 + r, k)] += e.local[r];
            coupling[(row0 + r, i)] -= e.local[r];
            for c in 0..d {
                local_gram[(row0 + r, row0 + c)] += e.local[r] * e.local[c];
            }
        }
    }

    Ok(SystemCore {
        laplacian,
        coupling,
        local_gram,
        dimension: d,
        num_points: n,
        num_patches: m,
    })
}

/// Moore-Penrose pseudoinverse of a connected-graph Laplacian through the
/// rank-one shift `L^+ = [L + ee^T/n]^{-1} - ee^T/n`.
///
/// The result is verified against `L L^+ = I - ee^T/n`; a violation signals
/// a (numerically) disconnected graph and is reported as an error.
pub fn laplacian_pinv(laplacian: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = laplacian.nrows();
    if n == 0 || laplacian.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "Laplacian must be square and non-empty, got {}x{}",
            laplacian.nrows(),
            laplacian.ncols()
        )));
    }
    let shift = 1.0 / n as f64;
    let ones = DMatrix::from_element(n, n, shift);
    let shifted = laplacian + &ones;
    let inverse = shifted.try_inverse().ok_or(Error::SingularLaplacian)?;
    let pinv = inverse - &ones;

    let projector = DMatrix::identity(n, n) - &ones;
    let defect = (laplacian * &pinv - projector).norm();
    if defect.is_nan() || defect > PINV_IDENTITY_TOL * (1.0 + laplacian.norm()) {
        return Err(Error::SingularLaplacian);
    }
    Ok(pinv)
}

/// The patch-stress matrix `C = D - B L^+ B^T`, symmetrized to kill
/// round-off asymmetry before it reaches the eigensolvers.
pub fn patch_stress(core: &SystemCore, laplacian_pinv: &DMatrix<f64>) -> DMatrix<f64> {
    let c = &core.local_gram - &core.coupling * laplacian_pinv * core.coupling.transpose();
    (&c + c.transpose()) * 0.5
}

/// Fully assembled system for one framework.
#[derive(Debug, Clone)]
pub struct SystemMatrices {
    pub laplacian: DMatrix<f64>,
    pub coupling: DMatrix<f64>,
    pub local_gram: DMatrix<f64>,
    pub laplacian_pinv: DMatrix<f64>,
    pub stress: DMatrix<f64>,
    dimension: usize,
    num_points: usize,
    num_patches: usize,
}

impl SystemMatrices {
    pub fn assemble(fw: &PatchFramework) -> Result<Self> {
        let core = build_system(fw)?;
        let pinv = laplacian_pinv(&core.laplacian)?;
        let stress = patch_stress(&core, &pinv);
        Ok(Self {
            laplacian: core.laplacian,
            coupling: core.coupling,
            local_gram: core.local_gram,
            laplacian_pinv: pinv,
            stress,
            dimension: core.dimension,
            num_points: core.num_points,
            num_patches: core.num_patches,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn num_patches(&self) -> usize {
        self.num_patches
    }

    /// The optimal positions-and-translations matrix for fixed transform
    /// blocks: `Z = O B L^+`, a `d x (N+M)` matrix whose first `N` columns
    /// are point coordinates and last `M` columns are patch translations.
    pub fn recover_coordinates(&self, blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
        let o = stack_blocks(blocks);
        o * &self.coupling * &self.laplacian_pinv
    }
}

/// Concatenates `M` blocks of size `d x d` into the `d x Md` transform row.
pub fn stack_blocks(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let d = blocks.first().map_or(0, DMatrix::nrows);
    let mut out = DMatrix::zeros(d, blocks.len() * d);
    for (i, b) in blocks.iter().enumerate() {
        out.view_mut((0, i * d), (d, d)).copy_from(b);
    }
    out
}

/// The registration objective
/// `phi = sum_{(k,i)} || x_k - O_i x_{ki} - t_i ||^2`, evaluated directly as
/// the sum over edges. `z` carries the positions in its first `N` columns
/// and the translations in the last `M`.
pub fn evaluate_objective(fw: &PatchFramework, z: &DMatrix<f64>, blocks: &[DMatrix<f64>]) -> f64 {
    let n = fw.num_points();
    let mut phi = 0.0;
    for e in fw.edges() {
        let x_k = z.column(e.point);
        let t_i = z.column(n + e.patch);
        let mapped = &blocks[e.patch] * &e.local;
        let mut term = 0.0;
        for r in 0..fw.dimension() {
            let diff = x_k[r] - mapped[r] - t_i[r];
            term += diff * diff;
        }
        phi += term;
    }
    phi
}

/// `Tr(C O^T O)` for a `d x Md` transform row; the translation-eliminated
/// form of the objective.
pub fn stress_objective(stress: &DMatrix<f64>, o: &DMatrix<f64>) -> f64 {
    let gram = o.transpose() * o;
    stress.zip_fold(&gram, 0.0, |acc, c, g| acc + c * g)
}
