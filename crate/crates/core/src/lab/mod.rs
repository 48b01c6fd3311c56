//! Experiment runners and reporting.
//!
//! Four experiment families sit behind the CLI:
//!
//! * `ball-oracle` - closed-form checks of the Kobayashi-Fuks invariants on
//!   the unit ball;
//! * `asymptotics` - boundary sweeps along the inward normal, comparing the
//!   scaled invariants against their boundary limits;
//! * `scaling` - blow-up sweeps comparing kernels and invariants of the
//!   rescaled domains against the Siegel half-space;
//! * `moments` - Beta-form moments against the quadrature oracle.
//!
//! Every emitted row is reproducible bit for bit for a fixed configuration:
//! sampling is seeded, summation orders are fixed, and rows are written in
//! index order regardless of which worker finished first.

pub mod config;
pub mod experiments;
pub mod report;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::GeometryError;
use crate::kernels::KernelError;
use crate::scaling::ScalingError;

pub use config::{DirectionSpec, DomainSpec, ExperimentConfig, Truncation};
pub use experiments::{
    eval_point, run_asymptotics, run_ball_oracle, run_moments, run_scaling, AsymptoticsReport,
    BallOracleReport, EvalReport, MomentsReport, ScalingReport,
};

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Scaling(#[from] ScalingError),
    #[error("configuration error: {what}")]
    Config { what: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("Levi form check failed at the boundary point (min eigenvalue {lambda:.3e})")]
    LeviCheck { lambda: f64 },
}

pub type LabResult<T> = Result<T, LabError>;

/// The six boundary-limit quantities of a sweep, in report order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    /// delta^{n+1} * det G_kf
    VolumeScaled,
    /// delta * ds_kf(z, X_N)
    NormalLength,
    /// sqrt(delta) * ds_kf(z, X_H)
    TangentLength,
    /// beta_kf = det G_kf / K
    CanonicalInvariant,
    /// holomorphic sectional curvature of the KF metric
    Sectional,
    /// Ricci curvature of the KF metric
    Ricci,
}

impl Quantity {
    pub const ALL: [Quantity; 6] = [
        Quantity::VolumeScaled,
        Quantity::NormalLength,
        Quantity::TangentLength,
        Quantity::CanonicalInvariant,
        Quantity::Sectional,
        Quantity::Ricci,
    ];

    pub fn code(&self) -> &'static str {
        match self {
            Quantity::VolumeScaled => "g_kf_scaled",
            Quantity::NormalLength => "ds_normal_scaled",
            Quantity::TangentLength => "ds_tangent_scaled",
            Quantity::CanonicalInvariant => "beta_kf",
            Quantity::Sectional => "hsc_kf",
            Quantity::Ricci => "ric_kf",
        }
    }

    pub fn parse(code: &str) -> Option<Quantity> {
        Quantity::ALL.iter().copied().find(|q| q.code() == code)
    }
}

/// Boundary limits of the six quantities for dimension n, given |X_N(p0)|,
/// the Levi form at (p0, X_H(p0)) and the Levi determinant at p0 (both with
/// unit-gradient normalization).
///
/// The volume limit carries the Levi determinant: the blow-up identity
/// `delta^{n+1} g_kf(zeta) = |det A|^2 g_kf,scaled(b*)` holds with
/// |det A|^2 = det L(p0), so the universal constant appears exactly when
/// det L(p0) = 1 (as on spheres). The remaining five limits are
/// Levi-determinant-free.
pub fn boundary_targets(
    n: usize,
    x_normal_norm: f64,
    levi_value: f64,
    levi_det: f64,
) -> [f64; 6] {
    let nf = n as f64;
    let volume_limit =
        ((nf + 1.0) * (nf + 2.0)).powi(n as i32) / 2f64.powi(n as i32 + 1) * levi_det;
    let beta_limit = ((nf + 1.0) * (nf + 2.0)).powi(n as i32) * std::f64::consts::PI.powi(n as i32)
        / crate::kernels::factorial(n);
    [
        volume_limit,
        0.5 * ((nf + 1.0) * (nf + 2.0)).sqrt() * x_normal_norm,
        (0.5 * (nf + 1.0) * (nf + 2.0) * levi_value).sqrt(),
        beta_limit,
        -2.0 / ((nf + 1.0) * (nf + 2.0)),
        -1.0 / (nf + 2.0),
    ]
}

/// Assumed leading-order error model for two-point extrapolation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorModel {
    Delta,
    SqrtDelta,
}

impl ErrorModel {
    pub fn code(&self) -> &'static str {
        match self {
            ErrorModel::Delta => "delta",
            ErrorModel::SqrtDelta => "sqrt_delta",
        }
    }
}

/// Two-point Richardson step: eliminate the assumed leading error term from
/// values at delta_prev and delta_cur = ratio * delta_prev.
pub fn richardson(prev: f64, cur: f64, ratio: f64, model: ErrorModel) -> f64 {
    let s = match model {
        ErrorModel::Delta => 1.0,
        ErrorModel::SqrtDelta => 0.5,
    };
    let k = ratio.powf(s);
    cur - (cur - prev) / (1.0 - 1.0 / k)
}

/// |value - target| / |target|, falling back to the absolute error when the
/// target vanishes.
pub fn relative_error(value: f64, target: f64) -> f64 {
    if target.abs() < 1e-14 {
        (value - target).abs()
    } else {
        ((value - target) / target).abs()
    }
}

/// Deterministic sample of interior points, uniform in the polyradius cube
/// and rejected to the ball of radius `rmax`.
pub fn seeded_ball_points(n: usize, count: usize, rmax: f64, seed: u64) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let z: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-rmax..rmax), rng.gen_range(-rmax..rmax)))
            .collect();
        if z.iter().map(|zi| zi.norm_sqr()).sum::<f64>() < rmax * rmax {
            out.push(z);
        }
    }
    out
}

/// Deterministic sample of nonzero direction vectors.
pub fn seeded_directions(n: usize, count: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            loop {
                let x: Vec<Complex64> = (0..n)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                if x.iter().map(|xi| xi.norm_sqr()).sum::<f64>() > 1e-2 {
                    return x;
                }
            }
        })
        .collect()
}

/// Monotone-decay check with multiplicative slack; entries below the floor
/// count as converged.
pub fn monotone_decay(errors: &[f64], slack: f64, floor: f64) -> bool {
    errors.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack) || w[1] <= floor)
}
