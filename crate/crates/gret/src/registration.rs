//! Shared output types for the registration solvers.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::assembly::{evaluate_objective, SystemMatrices};
use crate::error::Result;
use crate::model::{Configuration, PatchFramework, RigidTransform};

/// Which pipeline produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Spectral relaxation with per-block orthogonal rounding.
    Spec,
    /// Semidefinite relaxation, eigenvector rounding, orthogonal rounding.
    Sdp,
    /// Manifold descent on the orthogonal-transform product, spectral start.
    Manopt,
    /// Manifold descent refining the semidefinite solution.
    SdpManopt,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Method::Spec => "spec",
            Method::Sdp => "sdp",
            Method::Manopt => "manopt",
            Method::SdpManopt => "sdp-manopt",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "spec" => Ok(Method::Spec),
            "sdp" => Ok(Method::Sdp),
            "manopt" => Ok(Method::Manopt),
            "sdp-manopt" => Ok(Method::SdpManopt),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

/// Solver-side measurements attached to a [`RegistrationResult`].
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub method: Method,
    /// Certified lower bound on the non-convex optimum: `M (mu_1 + ... +
    /// mu_d)` for the spectral relaxation, `Tr(C G*)` for the semidefinite
    /// one.
    pub lower_bound: f64,
    /// Rank of the relaxation solution at the rank-decision tolerance
    /// (`rank(G*)` for the SDP; `d` by construction for the others).
    pub relaxation_rank: usize,
    /// Numerical rank of the patch-stress matrix.
    pub stress_rank: usize,
    /// `(d+1)`-th smallest eigenvalue of the patch-stress matrix; `None`
    /// when the matrix has no such eigenvalue (`M = 1`). Stability bounds
    /// degrade as this approaches zero.
    pub spectral_margin: Option<f64>,
    /// Whether the relaxation was tight, i.e. rounding was a no-op and the
    /// output solves the original non-convex problem.
    pub tight: bool,
    /// Wall-clock solve time. Kept out of serialized results so identical
    /// runs produce identical files.
    pub wall_ms: f64,
    /// Iteration count for iterative methods.
    pub iterations: Option<usize>,
    pub warnings: Vec<String>,
    /// Objective value after every accepted manifold-descent step.
    pub objective_history: Option<Vec<f64>>,
}

/// Recovered transforms and coordinates, with the attained objective.
#[derive(Debug, Clone)]
pub struct RegistrationResult {
    pub transforms: Vec<RigidTransform>,
    pub coordinates: Configuration,
    pub objective: f64,
    pub diagnostics: Diagnostics,
}

/// Completes a solve from rounded orthogonal blocks: recovers
/// `Z = O B L^+`, reads coordinates from the first `N` columns and
/// translations from the last `M`, and evaluates the objective.
pub(crate) fn finish_registration(
    fw: &PatchFramework,
    sys: &SystemMatrices,
    blocks: Vec<DMatrix<f64>>,
    diagnostics: Diagnostics,
) -> Result<RegistrationResult> {
    let z = sys.recover_coordinates(&blocks);
    let d = fw.dimension();
    let n = fw.num_points();
    let coordinates = Configuration::new(z.view((0, 0), (d, n)).into_owned())?;
    let transforms = blocks
        .iter()
        .enumerate()
        .map(|(i, b)| RigidTransform::new(b.clone(), z.column(n + i).into_owned()))
        .collect::<Result<Vec<_>>>()?;
    let objective = evaluate_objective(fw, &z, &blocks);
    Ok(RegistrationResult {
        transforms,
        coordinates,
        objective,
        diagnostics,
    })
}
