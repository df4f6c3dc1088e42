//! Noise model, reconstruction metric, and the seeded sweep harness.
//!
//! A sweep runs a grid of noise levels times trials times methods on one
//! generated instance. Every cell derives its own sub-seed from the master
//! seed, so the emitted rows (and the CSV file written from them) are
//! reproducible regardless of execution order. Wall-clock timings are the
//! one exception: they are measured, not derived, and carry no promise of
//! stability between runs.

use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::assembly::SystemMatrices;
use crate::error::{Error, Result};
use crate::generate::{
    generate_clustered, generate_lateration, letterform_points, GeneratedInstance,
    DEFAULT_LETTERFORM_TEXT,
};
use crate::linalg::kabsch_align;
use crate::model::{Configuration, PatchFramework};
use crate::registration::{Method, RegistrationResult};
use crate::sdp::{gret_sdp_with, manifold_refine_with, SdpParams};
use crate::seeding::{derive_seed, rng_from};
use crate::spectral::gret_spec_with;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    /// Each coordinate perturbed uniformly in `[-eps, eps]`.
    #[default]
    Cube,
    /// Perturbation uniform in the Euclidean ball of radius `eps`, so the
    /// perturbation norm never exceeds `eps`.
    Ball,
}

/// Bounded perturbation of the local measurements.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub epsilon: f64,
    #[serde(default)]
    pub mode: NoiseMode,
    pub seed: u64,
}

/// Perturbs every local coordinate vector independently. Each edge owns a
/// derived sub-seed, so the result does not depend on iteration order, and
/// `epsilon = 0` returns the framework unchanged.
pub fn perturb_measurements(fw: &PatchFramework, spec: &NoiseSpec) -> Result<PatchFramework> {
    if !spec.epsilon.is_finite() || spec.epsilon < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "noise level must be finite and non-negative, got {}",
            spec.epsilon
        )));
    }
    if spec.epsilon == 0.0 {
        return Ok(fw.clone());
    }
    let d = fw.dimension();
    let locals: Vec<DVector<f64>> = fw
        .edges()
        .iter()
        .enumerate()
        .map(|(ei, e)| {
            let mut rng = rng_from(derive_seed(spec.seed, "noise-edge", &[ei as u64]));
            let delta = match spec.mode {
                NoiseMode::Cube => {
                    DVector::from_fn(d, |_, _| rng.random_range(-spec.epsilon..=spec.epsilon))
                }
                NoiseMode::Ball => {
                    let gauss = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let norm = gauss.norm();
                    if norm < 1e-300 {
                        DVector::zeros(d)
                    } else {
                        let radius = spec.epsilon * rng.random::<f64>().powf(1.0 / d as f64);
                        gauss * (radius / norm)
                    }
                }
            };
            &e.local + delta
        })
        .collect();
    fw.with_locals(locals)
}

/// Root-mean-square deviation after optimal rigid alignment (over all of
/// `O(d)`, reflections included, plus translations) of the truth onto the
/// result.
pub fn rmsd(result: &Configuration, truth: &Configuration) -> Result<f64> {
    if result.dimension() != truth.dimension() || result.num_points() != truth.num_points() {
        return Err(Error::DimensionMismatch(format!(
            "configurations are {}x{} vs {}x{}",
            result.dimension(),
            result.num_points(),
            truth.dimension(),
            truth.num_points()
        )));
    }
    let aligned = kabsch_align(truth.coords(), result.coords());
    Ok((aligned.residual / truth.num_points() as f64).sqrt())
}

/// Noise grid `start, start + step, ..., <= end`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EpsilonGrid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl EpsilonGrid {
    pub fn levels(&self) -> Result<Vec<f64>> {
        if !(self.start >= 0.0 && self.end >= self.start) {
            return Err(Error::InvalidConfig(format!(
                "bad noise grid [{}, {}]",
                self.start, self.end
            )));
        }
        if self.step <= 0.0 {
            if self.end == self.start {
                return Ok(vec![round_level(self.start)]);
            }
            return Err(Error::InvalidConfig("grid step must be positive".into()));
        }
        let count = ((self.end - self.start) / self.step + 1e-9).floor() as usize;
        Ok((0..=count)
            .map(|k| round_level(self.start + k as f64 * self.step))
            .collect())
    }
}

/// Snaps accumulated floating-point drift off a grid value.
fn round_level(x: f64) -> f64 {
    (x * 1e10).round() / 1e10
}

/// Instance generator selector for sweeps and the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GeneratorSpec {
    Lateration {
        num_points: usize,
        num_patches: usize,
        dimension: usize,
        overlap: usize,
    },
    Clustered {
        num_points: usize,
        num_patches: usize,
        dimension: usize,
        augment: usize,
        #[serde(default)]
        text: Option<String>,
    },
}

impl GeneratorSpec {
    pub fn generate(&self, seed: u64) -> Result<GeneratedInstance> {
        match self {
            GeneratorSpec::Lateration {
                num_points,
                num_patches,
                dimension,
                overlap,
            } => generate_lateration(*num_points, *num_patches, *dimension, *overlap, seed),
            GeneratorSpec::Clustered {
                num_points,
                num_patches,
                dimension,
                augment,
                text,
            } => {
                let text = text.as_deref().unwrap_or(DEFAULT_LETTERFORM_TEXT);
                let points = letterform_points(
                    text,
                    *num_points,
                    *dimension,
                    derive_seed(seed, "letterform-cloud", &[]),
                )?;
                generate_clustered(&points, *num_patches, *augment, seed)
            }
        }
    }
}

/// A full sweep description; serializable so sweeps can be driven from a
/// JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub epsilon: EpsilonGrid,
    pub trials: usize,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub noise_mode: NoiseMode,
    pub generator: GeneratorSpec,
    pub master_seed: u64,
    #[serde(default)]
    pub output: Option<std::path::PathBuf>,
    #[serde(default)]
    pub sdp: SdpParams,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods selected".into()));
        }
        self.epsilon.levels()?;
        self.sdp.validate()
    }
}

/// One sweep cell. `rank` is the relaxation rank for the semidefinite
/// method and the measured stress rank otherwise; failed cells carry the
/// error in `status` and NaN metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub trial: usize,
    pub method: Method,
    pub rmsd: f64,
    pub objective: f64,
    pub lower_bound: f64,
    pub rank: usize,
    pub tight: bool,
    pub wall_ms: f64,
    pub status: String,
}

pub const SWEEP_CSV_HEADER: &str =
    "epsilon,trial,method,rmsd,objective,lower_bound,rank,tight,wall_ms,status";

/// Runs the full grid. Rows come back sorted by `(epsilon, trial, method)`
/// and are fully determined by the config (wall times aside); per-cell
/// failures are recorded in their rows and never abort the sweep.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let instance = cfg
        .generator
        .generate(derive_seed(cfg.master_seed, "generator", &[]))?;
    let levels = cfg.epsilon.levels()?;

    let mut rows = Vec::with_capacity(levels.len() * cfg.trials * cfg.methods.len());
    for (li, &epsilon) in levels.iter().enumerate() {
        for trial in 0..cfg.trials {
            let noise = NoiseSpec {
                epsilon,
                mode: cfg.noise_mode,
                seed: derive_seed(cfg.master_seed, "noise", &[li as u64, trial as u64]),
            };
            let noisy = perturb_measurements(&instance.framework, &noise)?;
            let assembled = SystemMatrices::assemble(&noisy);
            for &method in &cfg.methods {
                rows.push(match &assembled {
                    Ok(sys) => run_cell(
                        &noisy,
                        sys,
                        &instance.truth,
                        method,
                        &cfg.sdp,
                        epsilon,
                        trial,
                    ),
                    Err(e) => failed_row(epsilon, trial, method, e.to_string()),
                });
            }
        }
    }
    rows.sort_by(|a, b| {
        a.epsilon
            .total_cmp(&b.epsilon)
            .then(a.trial.cmp(&b.trial))
            .then(a.method.to_string().cmp(&b.method.to_string()))
    });
    Ok(rows)
}

fn run_cell(
    fw: &PatchFramework,
    sys: &SystemMatrices,
    truth: &Configuration,
    method: Method,
    sdp: &SdpParams,
    epsilon: f64,
    trial: usize,
) -> SweepRow {
    let start = Instant::now();
    let outcome = solve_by_method(fw, sys, method, sdp);
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    match outcome.and_then(|result| Ok((rmsd(&result.coordinates, truth)?, result))) {
        Ok((rmsd, result)) => {
            let rank = match method {
                Method::Sdp => result.diagnostics.relaxation_rank,
                _ => result.diagnostics.stress_rank,
            };
            SweepRow {
                epsilon,
                trial,
                method,
                rmsd,
                objective: result.objective,
                lower_bound: result.diagnostics.lower_bound,
                rank,
                tight: result.diagnostics.tight,
                wall_ms,
                status: "ok".into(),
            }
        }
        Err(e) => failed_row(epsilon, trial, method, e.to_string()),
    }
}

fn solve_by_method(
    fw: &PatchFramework,
    sys: &SystemMatrices,
    method: Method,
    sdp: &SdpParams,
) -> Result<RegistrationResult> {
    match method {
        Method::Spec => gret_spec_with(fw, sys),
        Method::Sdp => gret_sdp_with(fw, sys, sdp),
        Method::Manopt => {
            let spec = gret_spec_with(fw, sys)?;
            let blocks: Vec<_> = spec
                .transforms
                .iter()
                .map(|t| t.orthogonal.clone())
                .collect();
            manifold_refine_with(fw, sys, &blocks, &Default::default(), Method::Manopt)
        }
        Method::SdpManopt => {
            let base = gret_sdp_with(fw, sys, sdp)?;
            let blocks: Vec<_> = base
                .transforms
                .iter()
                .map(|t| t.orthogonal.clone())
                .collect();
            manifold_refine_with(fw, sys, &blocks, &Default::default(), Method::SdpManopt)
        }
    }
}

fn failed_row(epsilon: f64, trial: usize, method: Method, status: String) -> SweepRow {
    SweepRow {
        epsilon,
        trial,
        method,
        rmsd: f64::NAN,
        objective: f64::NAN,
        lower_bound: f64::NAN,
        rank: 0,
        tight: false,
        wall_ms: 0.0,
        status: status.replace(',', ";"),
    }
}

/// Renders rows as CSV with the pinned header.
pub fn sweep_rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.9e},{:.9e},{:.9e},{},{},{:.3},{}\n",
            r.epsilon,
            r.trial,
            r.method,
            r.rmsd,
            r.objective,
            r.lower_bound,
            r.rank,
            r.tight,
            r.wall_ms,
            r.status
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{apply_rigid, RigidTransform};
    use nalgebra::DMatrix;

    #[test]
    fn zero_noise_is_identity() {
        let instance = generate_lateration(10, 3, 2, 3, 91).unwrap();
        let spec = NoiseSpec {
            epsilon: 0.0,
            mode: NoiseMode::Ball,
            seed: 1,
        };
        let noisy = perturb_measurements(&instance.framework, &spec).unwrap();
        assert_eq!(noisy, instance.framework);
    }

    #[test]
    fn ball_noise_respects_radius_exactly() {
        let instance = generate_lateration(40, 4, 3, 4, 93).unwrap();
        let spec = NoiseSpec {
            epsilon: 0.25,
            mode: NoiseMode::Ball,
            seed: 7,
        };
        let noisy = perturb_measurements(&instance.framework, &spec).unwrap();
        let mut max_norm = 0.0f64;
        for (a, b) in instance.framework.edges().iter().zip(noisy.edges()) {
            max_norm = max_norm.max((&a.local - &b.local).norm());
        }
        assert!(max_norm <= 0.25 + 1e-15);
        assert!(max_norm > 0.0);
    }

    #[test]
    fn cube_noise_statistics() {
        // d = 3: perturbation norm at most eps * sqrt(3), and each
        // coordinate's empirical mean vanishes at the 3-sigma level.
        let n = 100_000usize;
        let members = vec![(0..n).collect::<Vec<usize>>()];
        let truth = Configuration::new(DMatrix::zeros(3, n)).unwrap();
        let fw =
            PatchFramework::from_patches(&truth, &members, &[RigidTransform::identity(3)]).unwrap();
        let eps = 0.5;
        let noisy = perturb_measurements(
            &fw,
            &NoiseSpec {
                epsilon: eps,
                mode: NoiseMode::Cube,
                seed: 17,
            },
        )
        .unwrap();
        let mut mean = DVector::<f64>::zeros(3);
        let mut max_norm = 0.0f64;
        for e in noisy.edges() {
            mean += &e.local;
            max_norm = max_norm.max(e.local.norm());
        }
        mean /= n as f64;
        assert!(max_norm <= eps * 3f64.sqrt() + 1e-15);
        let sigma_mean = eps / 3f64.sqrt() / (n as f64).sqrt();
        for r in 0..3 {
            assert!(
                mean[r].abs() <= 3.0 * sigma_mean,
                "coordinate {r} mean {} exceeds 3 sigma {}",
                mean[r],
                3.0 * sigma_mean
            );
        }
    }

    #[test]
    fn rmsd_basics() {
        let mut rng = rng_from(derive_seed(19, "harness-test", &[0]));
        let truth = Configuration::new(DMatrix::from_fn(2, 9, |_, _| rng.random::<f64>())).unwrap();
        assert!(rmsd(&truth, &truth).unwrap() <= 1e-12);

        // Rigid motion of the truth, reflection included, is absorbed.
        let reflect = RigidTransform::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            DVector::from_row_slice(&[0.4, -2.0]),
        )
        .unwrap();
        let moved = apply_rigid(&truth, &reflect);
        assert!(rmsd(&moved, &truth).unwrap() <= 1e-12);

        // A common per-point shift is absorbed by the translation.
        let shift = RigidTransform::new(
            DMatrix::identity(2, 2),
            DVector::from_row_slice(&[0.123, 0.456]),
        )
        .unwrap();
        let shifted = apply_rigid(&truth, &shift);
        assert!(rmsd(&shifted, &truth).unwrap() <= 1e-12);
    }

    #[test]
    fn rmsd_is_rigid_invariant_in_either_argument() {
        let mut rng = rng_from(derive_seed(19, "harness-test", &[1]));
        let a = Configuration::new(DMatrix::from_fn(3, 7, |_, _| rng.random::<f64>())).unwrap();
        let b = Configuration::new(DMatrix::from_fn(3, 7, |_, _| rng.random::<f64>())).unwrap();
        let base = rmsd(&a, &b).unwrap();
        for _ in 0..5 {
            let t = RigidTransform::random(3, &mut rng);
            assert!((rmsd(&apply_rigid(&a, &t), &b).unwrap() - base).abs() <= 1e-10);
            assert!((rmsd(&a, &apply_rigid(&b, &t)).unwrap() - base).abs() <= 1e-10);
        }
    }

    #[test]
    fn rmsd_size_mismatch_is_reported() {
        let a = Configuration::new(DMatrix::zeros(2, 3)).unwrap();
        let b = Configuration::new(DMatrix::zeros(2, 4)).unwrap();
        assert!(matches!(rmsd(&a, &b), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn epsilon_grid_levels() {
        let grid = EpsilonGrid {
            start: 0.0,
            end: 0.5,
            step: 0.1,
        };
        assert_eq!(grid.levels().unwrap(), vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5]);
        let single = EpsilonGrid {
            start: 0.3,
            end: 0.3,
            step: 0.0,
        };
        assert_eq!(single.levels().unwrap(), vec![0.3]);
    }

    fn tiny_sweep_config() -> SweepConfig {
        SweepConfig {
            epsilon: EpsilonGrid {
                start: 0.0,
                end: 0.0,
                step: 0.0,
            },
            trials: 1,
            methods: vec![Method::Spec, Method::Sdp],
            noise_mode: NoiseMode::Cube,
            generator: GeneratorSpec::Lateration {
                num_points: 10,
                num_patches: 3,
                dimension: 2,
                overlap: 3,
            },
            master_seed: 2024,
            output: None,
            sdp: SdpParams::default(),
        }
    }

    #[test]
    fn zero_noise_sweep_recovers_exactly() {
        let rows = run_sweep(&tiny_sweep_config()).unwrap();
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert_eq!(row.status, "ok");
            assert!(row.rmsd <= 1e-5, "{} rmsd {}", row.method, row.rmsd);
            assert!(row.tight);
        }
    }

    #[test]
    fn sweep_is_deterministic_up_to_wall_time() {
        let cfg = tiny_sweep_config();
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.epsilon.to_bits(), y.epsilon.to_bits());
            assert_eq!(x.rmsd.to_bits(), y.rmsd.to_bits());
            assert_eq!(x.objective.to_bits(), y.objective.to_bits());
            assert_eq!(x.lower_bound.to_bits(), y.lower_bound.to_bits());
            assert_eq!((x.rank, x.tight, &x.status), (y.rank, y.tight, &y.status));
        }
        let strip = |csv: &str| -> String {
            csv.lines()
                .map(|line| {
                    let cols: Vec<&str> = line.split(',').collect();
                    cols.iter()
                        .enumerate()
                        .filter(|(i, _)| *i != 8)
                        .map(|(_, c)| *c)
                        .collect::<Vec<_>>()
                        .join(",")
                })
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(strip(&sweep_rows_to_csv(&a)), strip(&sweep_rows_to_csv(&b)));
    }
}
