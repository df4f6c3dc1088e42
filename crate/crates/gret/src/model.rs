//! Domain types: patch frameworks, configurations, rigid transforms,
//! and framework validation.
//!
//! A *patch framework* pairs a bipartite membership graph (points vs.
//! patches) with one local coordinate vector per edge: the coordinates of
//! point `k` as seen from the local frame of patch `i`. Indices are 1-based
//! in files and 0-based everywhere in this crate.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Orthogonality tolerance for [`RigidTransform`]: `||O^T O - I||_F` must
/// not exceed this value.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Relative singular-value threshold used when ranking patch coordinate
/// matrices for degeneracy.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// One membership edge `(point, patch)` together with the local coordinates
/// of the point in that patch's frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub point: usize,
    pub patch: usize,
    pub local: DVector<f64>,
}

/// Membership graph plus local coordinates; the problem input.
///
/// Edges are kept sorted by `(patch, point)` so that matrix assembly and
/// serialization are canonical.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchFramework {
    dimension: usize,
    num_points: usize,
    num_patches: usize,
    edges: Vec<Edge>,
}

impl PatchFramework {
    /// Builds a framework from 0-based edges, enforcing the type invariants:
    /// indices in range, no duplicate edges, every local vector of length
    /// `dimension`, and every point and patch covered by at least one edge.
    pub fn new(
        dimension: usize,
        num_points: usize,
        num_patches: usize,
        mut edges: Vec<Edge>,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        edges.sort_by_key(|e| (e.patch, e.point));
        let mut point_seen = vec![false; num_points];
        let mut patch_seen = vec![false; num_patches];
        for (pos, edge) in edges.iter().enumerate() {
            let location = format!("edge #{pos}");
            if edge.point >= num_points {
                return Err(Error::IndexOutOfRange {
                    location,
                    kind: "point",
                    index: edge.point + 1,
                    max: num_points,
                });
            }
            if edge.patch >= num_patches {
                return Err(Error::IndexOutOfRange {
                    location,
                    kind: "patch",
                    index: edge.patch + 1,
                    max: num_patches,
                });
            }
            if edge.local.len() != dimension {
                return Err(Error::CoordinateLength {
                    location,
                    got: edge.local.len(),
                    expected: dimension,
                });
            }
            if !edge.local.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite);
            }
            if pos > 0 && edges[pos - 1].patch == edge.patch && edges[pos - 1].point == edge.point {
                return Err(Error::DuplicateEdge {
                    location,
                    point: edge.point + 1,
                    patch: edge.patch + 1,
                });
            }
            point_seen[edge.point] = true;
            patch_seen[edge.patch] = true;
        }
        if let Some(k) = point_seen.iter().position(|&s| !s) {
            return Err(Error::UnusedPoint(k + 1));
        }
        if let Some(i) = patch_seen.iter().position(|&s| !s) {
            return Err(Error::EmptyPatch(i + 1));
        }
        Ok(Self {
            dimension,
            num_points,
            num_patches,
            edges,
        })
    }

    /// Builds the framework observed when `config` is cut into patches and
    /// each patch is expressed in its own rigid frame: for every listed
    /// member `k` of patch `i`, the local coordinates are
    /// `O_i^T (x_k - t_i)`.
    pub fn from_patches(
        config: &Configuration,
        members: &[Vec<usize>],
        transforms: &[RigidTransform],
    ) -> Result<Self> {
        if members.len() != transforms.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} member lists vs {} transforms",
                members.len(),
                transforms.len()
            )));
        }
        let d = config.dimension();
        let mut edges = Vec::new();
        for (i, (list, t)) in members.iter().zip(transforms).enumerate() {
            if t.dimension() != d {
                return Err(Error::DimensionMismatch(format!(
                    "transform {i} has dimension {}, expected {d}",
                    t.dimension()
                )));
            }
            for &k in list {
                let local = t.orthogonal.transpose() * (config.point(k) - &t.translation);
                edges.push(Edge {
                    point: k,
                    patch: i,
                    local,
                });
            }
        }
        Self::new(d, config.num_points(), members.len(), edges)
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

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges in canonical `(patch, point)` order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Member edges of one patch, in ascending point order.
    pub fn patch_edges(&self, patch: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.patch == patch)
    }

    /// Returns a copy with the local coordinates replaced edge by edge.
    /// `new_locals` must be aligned with [`Self::edges`].
    pub(crate) fn with_locals(&self, new_locals: Vec<DVector<f64>>) -> Result<Self> {
        if new_locals.len() != self.edges.len() {
            return Err(Error::DimensionMismatch(
                "replacement coordinate count differs from edge count".into(),
            ));
        }
        let edges = self
            .edges
            .iter()
            .zip(new_locals)
            .map(|(e, local)| Edge {
                point: e.point,
                patch: e.patch,
                local,
            })
            .collect();
        Self::new(self.dimension, self.num_points, self.num_patches, edges)
    }

    pub fn membership_graph(&self) -> MembershipGraph {
        MembershipGraph {
            num_points: self.num_points,
            num_patches: self.num_patches,
            edges: self.edges.iter().map(|e| (e.point, e.patch)).collect(),
        }
    }

    pub fn is_connected(&self) -> bool {
        self.membership_graph().is_connected()
    }
}

/// The membership graph alone, without local coordinates. This is all the
/// randomized rank test needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MembershipGraph {
    pub num_points: usize,
    pub num_patches: usize,
    /// `(point, patch)` pairs, 0-based, sorted by `(patch, point)`.
    pub edges: Vec<(usize, usize)>,
}

impl MembershipGraph {
    /// Connectivity of the bipartite graph, by union-find.
    pub fn is_connected(&self) -> bool {
        let n = self.num_points + self.num_patches;
        if n == 0 {
            return true;
        }
        let mut dsu = DisjointSets::new(n);
        for &(k, i) in &self.edges {
            dsu.union(k, self.num_points + i);
        }
        let root = dsu.find(0);
        (1..n).all(|v| dsu.find(v) == root)
    }

    /// Point lists per patch, ascending.
    pub fn patch_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.num_patches];
        for &(k, i) in &self.edges {
            members[i].push(k);
        }
        for list in &mut members {
            list.sort_unstable();
        }
        members
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, v: usize) -> usize {
        if self.parent[v] != v {
            let root = self.find(self.parent[v]);
            self.parent[v] = root;
        }
        self.parent[v]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Global coordinates of a point cloud: one length-`d` column per point.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    coords: DMatrix<f64>,
}

impl Configuration {
    /// Wraps a `d x N` coordinate matrix. All entries must be finite.
    pub fn new(coords: DMatrix<f64>) -> Result<Self> {
        if coords.nrows() == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        if !coords.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { coords })
    }

    pub fn from_points(points: &[DVector<f64>]) -> Result<Self> {
        let d = points.first().map_or(0, DVector::len);
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::DimensionMismatch("points of mixed dimension".into()));
        }
        let coords = DMatrix::from_fn(d, points.len(), |r, c| points[c][r]);
        Self::new(coords)
    }

    pub fn dimension(&self) -> usize {
        self.coords.nrows()
    }

    pub fn num_points(&self) -> usize {
        self.coords.ncols()
    }

    pub fn point(&self, k: usize) -> DVector<f64> {
        self.coords.column(k).into_owned()
    }

    /// The `d x N` coordinate matrix, columns are points.
    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    pub fn centroid(&self) -> DVector<f64> {
        let n = self.num_points().max(1) as f64;
        DVector::from_fn(self.dimension(), |r, _| self.coords.row(r).sum() / n)
    }
}

/// An element of the Euclidean group: `x -> O x + t` with `O` orthogonal.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidTransform {
    pub orthogonal: DMatrix<f64>,
    pub translation: DVector<f64>,
}

impl RigidTransform {
    /// Validates orthogonality (`||O^T O - I||_F <= 1e-10`) and shape.
    pub fn new(orthogonal: DMatrix<f64>, translation: DVector<f64>) -> Result<Self> {
        let d = orthogonal.nrows();
        if orthogonal.ncols() != d || translation.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "orthogonal part is {}x{}, translation has length {}",
                orthogonal.nrows(),
                orthogonal.ncols(),
                translation.len()
            )));
        }
        let defect = (orthogonal.transpose() * &orthogonal - DMatrix::identity(d, d)).norm();
        if !defect.is_finite() || defect > ORTHOGONALITY_TOL {
            return Err(Error::NotOrthogonal(defect));
        }
        Ok(Self {
            orthogonal,
            translation,
        })
    }

    pub fn identity(dimension: usize) -> Self {
        Self {
            orthogonal: DMatrix::identity(dimension, dimension),
            translation: DVector::zeros(dimension),
        }
    }

    /// Haar-random element of `O(d) x R^d`, with translations standard normal.
    pub fn random<R: Rng>(dimension: usize, rng: &mut R) -> Self {
        let gauss = DMatrix::from_fn(dimension, dimension, |_, _| rng.sample(StandardNormal));
        let qr = gauss.qr();
        let mut q = qr.q();
        let r = qr.r();
        // Fix the QR sign ambiguity so the distribution is Haar on O(d).
        for j in 0..dimension {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        let t = DVector::from_fn(dimension, |_, _| rng.sample(StandardNormal));
        Self {
            orthogonal: q,
            translation: t,
        }
    }

    pub fn dimension(&self) -> usize {
        self.translation.len()
    }

    pub fn apply_point(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.orthogonal * x + &self.translation
    }

    /// The group inverse `(O^T, -O^T t)`.
    pub fn inverse(&self) -> Self {
        let ot = self.orthogonal.transpose();
        let t = -(&ot * &self.translation);
        Self {
            orthogonal: ot,
            translation: t,
        }
    }
}

/// Applies a rigid transform to every point of a configuration.
pub fn apply_rigid(config: &Configuration, transform: &RigidTransform) -> Configuration {
    assert_eq!(
        config.dimension(),
        transform.dimension(),
        "configuration and transform dimensions disagree"
    );
    let mut coords = &transform.orthogonal * config.coords();
    for mut col in coords.column_iter_mut() {
        col += &transform.translation;
    }
    Configuration { coords }
}

/// A coded diagnostic carried by a [`ValidationReport`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: String,
    pub message: String,
}

impl Diagnostic {
    fn new(code: &str, message: String) -> Self {
        Self {
            code: code.into(),
            message,
        }
    }
}

/// Structural health report for a framework. Solvers decide what to refuse;
/// validation itself never fails.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub connected: bool,
    pub patch_sizes: Vec<usize>,
    pub degenerate_patches: Vec<usize>,
    pub errors: Vec<Diagnostic>,
    pub warnings: Vec<Diagnostic>,
}

/// Checks connectivity and per-patch non-degeneracy.
///
/// A patch is degenerate when the affine span of its local coordinates has
/// dimension below `d`, i.e. when the centered coordinate matrix has
/// numerical rank below `d` at a relative singular-value threshold of
/// [`DEGENERACY_TOL`].
pub fn validate_framework(fw: &PatchFramework) -> ValidationReport {
    let connected = fw.is_connected();
    let d = fw.dimension();
    let mut patch_sizes = vec![0usize; fw.num_patches()];
    for e in fw.edges() {
        patch_sizes[e.patch] += 1;
    }

    let mut degenerate_patches = Vec::new();
    let mut warnings = Vec::new();
    let mut errors = Vec::new();

    for i in 0..fw.num_patches() {
        let locals: Vec<&DVector<f64>> = fw.patch_edges(i).map(|e| &e.local).collect();
        let n = locals.len();
        let mut centered = DMatrix::zeros(d, n);
        let mean = locals.iter().fold(DVector::zeros(d), |acc, v| acc + *v) / n as f64;
        for (c, v) in locals.iter().enumerate() {
            centered.set_column(c, &(*v - &mean));
        }
        let singular = centered.svd(false, false).singular_values;
        let largest = singular.iter().cloned().fold(0.0, f64::max);
        let rank = singular
            .iter()
            .filter(|&&s| s > DEGENERACY_TOL * largest && largest > 0.0)
            .count();
        if rank < d {
            degenerate_patches.push(i);
            warnings.push(Diagnostic::new(
                "W-DEGENERATE-PATCH",
                format!(
                    "patch {} spans only {rank} of {d} dimensions; its transform is not unique",
                    i + 1
                ),
            ));
        }
        if n < d + 1 {
            warnings.push(Diagnostic::new(
                "W-PATCH-TOO-SMALL",
                format!("patch {} has {n} points, fewer than d+1 = {}", i + 1, d + 1),
            ));
        }
    }

    if !connected {
        errors.push(Diagnostic::new(
            "E-DISCONNECTED",
            "membership graph is disconnected; global coordinates are not determined".into(),
        ));
    }

    ValidationReport {
        connected,
        patch_sizes,
        degenerate_patches,
        errors,
        warnings,
    }
}
