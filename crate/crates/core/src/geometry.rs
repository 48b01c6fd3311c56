//! Metric and curvature invariants derived from a Bergman kernel.
//!
//! Everything is computed from the jet of the Kahler potential at a point:
//! log K for the Bergman metric, and log(K^{n+1} g_b) for the Kobayashi-Fuks
//! metric. With a degree-6 log-kernel jet all quantities below are
//! available; the Bergman-only quantities need degree 4.
//!
//! Sign conventions: with P a potential,
//!
//! ```text
//! g_{a bbar}        = d^2 P / dz_a dzbar_b
//! Ric_{a bbar}      = -d^2 log det G / dz_a dzbar_b
//! R_{abar b c dbar} = -d^2 g_{b abar} / dz_c dzbar_d
//!                     + sum_{mu nu} g^{nu mubar}
//!                       (d g_{b mubar}/dz_c)(d g_{nu abar}/dzbar_d)
//! ```
//!
//! and the holomorphic sectional curvature divides the quartic contraction
//! of R by the squared metric form (i.e. the fourth power of the length).

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;
use thiserror::Error;

use crate::kernels::{KernelError, KernelProvider};
use crate::tol;
use crate::wjet::{jet_det, IndexPair, JetError, WJet};

/// Jet degree from which every invariant (including Kobayashi-Fuks
/// curvatures) can be extracted.
pub const FULL_DEGREE: usize = 6;

/// Jet degree sufficient for Bergman-only quantities.
pub const BERGMAN_DEGREE: usize = 4;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("jet degree {got} too low, need at least {needed}")]
    DegreeTooLow { needed: usize, got: usize },
    #[error("metric is not positive definite (kind {kind:?})")]
    NotPositiveDefinite { kind: MetricKind },
    #[error("the two routes to the Kobayashi-Fuks metric disagree by {defect:.3e}")]
    TwoRouteMismatch { defect: f64 },
    #[error("tangent vector must be nonzero")]
    ZeroVector,
}

pub type GeoResult<T> = Result<T, GeometryError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricKind {
    Bergman,
    KobayashiFuks,
}

/// Hermitian metric tensor at a point.
#[derive(Clone, Debug)]
pub struct MetricTensor {
    pub base: Vec<Complex64>,
    pub matrix: DMatrix<Complex64>,
    pub kind: MetricKind,
}

impl MetricTensor {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Squared length sum g_{a bbar} X^a conj(X^b); real for Hermitian G.
    pub fn length_sq(&self, x: &[Complex64]) -> f64 {
        let n = self.dim();
        let mut acc = Complex64::ZERO;
        for a in 0..n {
            for b in 0..n {
                acc += self.matrix[(a, b)] * x[a] * x[b].conj();
            }
        }
        acc.re
    }

    pub fn length(&self, x: &[Complex64]) -> f64 {
        self.length_sq(x).max(0.0).sqrt()
    }

    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.matrix.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
        let mut worst = 0.0f64;
        for a in 0..self.dim() {
            for b in 0..self.dim() {
                worst = worst.max((self.matrix[(a, b)] - self.matrix[(b, a)].conj()).norm());
            }
        }
        worst / scale
    }

    pub fn is_positive_definite(&self) -> bool {
        Cholesky::new(self.matrix.clone()).is_some()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Curvature coefficients of one metric kind at a point.
pub struct CurvatureData {
    pub base: Vec<Complex64>,
    pub kind: MetricKind,
    /// R_{abar b c dbar} at flat index ((a n + b) n + c) n + d.
    pub r4: Vec<Complex64>,
    pub metric: DMatrix<Complex64>,
    pub inverse: DMatrix<Complex64>,
    pub ricci: DMatrix<Complex64>,
}

impl CurvatureData {
    pub fn dim(&self) -> usize {
        self.metric.nrows()
    }

    pub fn r4_at(&self, a: usize, b: usize, c: usize, d: usize) -> Complex64 {
        let n = self.dim();
        self.r4[((a * n + b) * n + c) * n + d]
    }

    /// Largest violation of the Kahler symmetry
    /// R_{abar b c dbar} = conj(R_{bbar a d cbar}).
    pub fn kahler_symmetry_defect(&self) -> f64 {
        let n = self.dim();
        let scale = self.r4.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let lhs = self.r4_at(a, b, c, d);
                        let rhs = self.r4_at(b, a, d, c).conj();
                        worst = worst.max((lhs - rhs).norm());
                    }
                }
            }
        }
        worst / scale
    }

    /// G * G^{-1} deviation from the identity.
    pub fn inverse_defect(&self) -> f64 {
        let id = DMatrix::<Complex64>::identity(self.dim(), self.dim());
        ((&self.metric * &self.inverse) - id).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// All invariants of both metrics at one point, computed from a single
/// log-kernel jet. Building this once and reading many quantities off it is
/// the intended use; the free functions below are one-shot wrappers.
pub struct PointInvariants {
    n: usize,
    base: Vec<Complex64>,
    degree: usize,
    log_jet: WJet,
    g_b: DMatrix<Complex64>,
    /// det of the Hessian-jet matrix of log K; degree D-2.
    vol_b_jet: WJet,
    log_vol_b_jet: WJet,
    /// (n+1) log K + log g_b; degree D-2.
    kf_potential: Option<WJet>,
    g_kf: Option<DMatrix<Complex64>>,
    /// det of the Hessian-jet matrix of the KF potential; degree D-4.
    vol_kf_jet: Option<WJet>,
}

impl PointInvariants {
    pub fn new(provider: &dyn KernelProvider, z: &[Complex64], degree: usize) -> GeoResult<Self> {
        if degree < 2 {
            return Err(GeometryError::DegreeTooLow { needed: 2, got: degree });
        }
        let n = provider.dim();
        let log_jet = provider.log_jet(z, degree)?;
        let mut g_b = DMatrix::zeros(n, n);
        let mut hess = Vec::with_capacity(n);
        for a in 0..n {
            let mut row = Vec::with_capacity(n);
            for b in 0..n {
                g_b[(a, b)] = log_jet.extract_mixed(a, b)?;
                row.push(log_jet.derivative(&IndexPair::mixed(a, b, n))?);
            }
            hess.push(row);
        }
        let vol_b_jet = jet_det(&hess)?;
        let log_vol_b_jet = vol_b_jet.log()?;

        let (kf_potential, g_kf, vol_kf_jet) = if degree >= 4 {
            let potential = log_jet
                .truncated(degree - 2)
                .scale(Complex64::new(n as f64 + 1.0, 0.0))
                .try_add(&log_vol_b_jet)?;
            let mut g_kf = DMatrix::zeros(n, n);
            let mut kf_hess = Vec::with_capacity(n);
            for a in 0..n {
                let mut row = Vec::with_capacity(n);
                for b in 0..n {
                    g_kf[(a, b)] = potential.extract_mixed(a, b)?;
                    row.push(potential.derivative(&IndexPair::mixed(a, b, n))?);
                }
                kf_hess.push(row);
            }
            // cross-check against (n+1) g_b - Ric_b before trusting the
            // potential route
            let scale = g_kf.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
            let mut defect = 0.0f64;
            for a in 0..n {
                for b in 0..n {
                    let ric = -log_vol_b_jet.extract_mixed(a, b)?;
                    let direct = Complex64::new(n as f64 + 1.0, 0.0) * g_b[(a, b)] - ric;
                    defect = defect.max((direct - g_kf[(a, b)]).norm() / scale);
                }
            }
            if defect > tol::KF_TWO_ROUTE {
                return Err(GeometryError::TwoRouteMismatch { defect });
            }
            let vol_kf = jet_det(&kf_hess)?;
            (Some(potential), Some(g_kf), Some(vol_kf))
        } else {
            (None, None, None)
        };

        Ok(Self {
            n,
            base: z.to_vec(),
            degree,
            log_jet,
            g_b,
            vol_b_jet,
            log_vol_b_jet,
            kf_potential,
            g_kf,
            vol_kf_jet,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn base(&self) -> &[Complex64] {
        &self.base
    }

    pub fn log_kernel_jet(&self) -> &WJet {
        &self.log_jet
    }

    /// K(z, z) recovered from the potential jet.
    pub fn kernel_value(&self) -> f64 {
        self.log_jet.constant_term().re.exp()
    }

    pub fn metric(&self, kind: MetricKind) -> GeoResult<MetricTensor> {
        let matrix = match kind {
            MetricKind::Bergman => self.g_b.clone(),
            MetricKind::KobayashiFuks => self
                .g_kf
                .clone()
                .ok_or(GeometryError::DegreeTooLow { needed: 4, got: self.degree })?,
        };
        Ok(MetricTensor { base: self.base.clone(), matrix, kind })
    }

    /// Riemannian volume element det G of the requested metric.
    pub fn volume(&self, kind: MetricKind) -> GeoResult<f64> {
        match kind {
            MetricKind::Bergman => Ok(self.vol_b_jet.constant_term().re),
            MetricKind::KobayashiFuks => Ok(self
                .vol_kf_jet
                .as_ref()
                .ok_or(GeometryError::DegreeTooLow { needed: 4, got: self.degree })?
                .constant_term()
                .re),
        }
    }

    /// The canonical invariant beta = det G_h / K.
    pub fn canonical_invariant(&self, kind: MetricKind) -> GeoResult<f64> {
        Ok(self.volume(kind)? / self.kernel_value())
    }

    pub fn length(&self, x: &[Complex64], kind: MetricKind) -> GeoResult<f64> {
        Ok(self.metric(kind)?.length(x))
    }

    fn potential(&self, kind: MetricKind) -> GeoResult<&WJet> {
        match kind {
            MetricKind::Bergman => Ok(&self.log_jet),
            MetricKind::KobayashiFuks => self
                .kf_potential
                .as_ref()
                .ok_or(GeometryError::DegreeTooLow { needed: 4, got: self.degree }),
        }
    }

    fn log_volume_jet(&self, kind: MetricKind) -> GeoResult<WJet> {
        match kind {
            MetricKind::Bergman => Ok(self.log_vol_b_jet.clone()),
            MetricKind::KobayashiFuks => {
                let vol = self
                    .vol_kf_jet
                    .as_ref()
                    .ok_or(GeometryError::DegreeTooLow { needed: 4, got: self.degree })?;
                if vol.degree() < 2 {
                    return Err(GeometryError::DegreeTooLow { needed: 6, got: self.degree });
                }
                Ok(vol.log()?)
            }
        }
    }

    fn inverse_metric(&self, kind: MetricKind) -> GeoResult<DMatrix<Complex64>> {
        let metric = self.metric(kind)?;
        let chol = Cholesky::new(metric.matrix.clone())
            .ok_or(GeometryError::NotPositiveDefinite { kind })?;
        Ok(chol.inverse())
    }

    /// Ricci tensor Ric_{a bbar} = -dd log det G_h of the requested kind.
    pub fn ricci_tensor(&self, kind: MetricKind) -> GeoResult<DMatrix<Complex64>> {
        let log_vol = self.log_volume_jet(kind)?;
        if log_vol.degree() < 2 {
            return Err(GeometryError::DegreeTooLow {
                needed: if kind == MetricKind::Bergman { 4 } else { 6 },
                got: self.degree,
            });
        }
        let mut ric = DMatrix::zeros(self.n, self.n);
        for a in 0..self.n {
            for b in 0..self.n {
                ric[(a, b)] = -log_vol.extract_mixed(a, b)?;
            }
        }
        Ok(ric)
    }

    /// Ricci curvature in direction X: the Rayleigh quotient of the Ricci
    /// tensor against the metric.
    pub fn ricci_curvature(&self, x: &[Complex64], kind: MetricKind) -> GeoResult<f64> {
        if x.iter().all(|xi| xi.norm() == 0.0) {
            return Err(GeometryError::ZeroVector);
        }
        let ric = self.ricci_tensor(kind)?;
        let metric = self.metric(kind)?;
        let mut numer = Complex64::ZERO;
        for a in 0..self.n {
            for b in 0..self.n {
                numer += ric[(a, b)] * x[a] * x[b].conj();
            }
        }
        Ok(numer.re / metric.length_sq(x))
    }

    /// Full curvature table of the requested kind.
    pub fn curvature(&self, kind: MetricKind) -> GeoResult<CurvatureData> {
        let potential = self.potential(kind)?;
        if potential.degree() < 4 {
            return Err(GeometryError::DegreeTooLow {
                needed: if kind == MetricKind::Bergman { 4 } else { 6 },
                got: self.degree,
            });
        }
        let n = self.n;
        let metric = self.metric(kind)?.matrix;
        let inverse = self.inverse_metric(kind)?;

        // dg_{b mubar}/dz_c and dg_{nu abar}/dzbar_d from third-order
        // extractions of the potential
        let mut dz = vec![Complex64::ZERO; n * n * n]; // [b][mu][c]
        let mut dzbar = vec![Complex64::ZERO; n * n * n]; // [nu][a][d]
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut alpha = vec![0u8; n];
                    let mut beta = vec![0u8; n];
                    alpha[i] += 1;
                    alpha[k] += 1;
                    beta[j] += 1;
                    let idx = IndexPair { alpha, beta };
                    dz[(i * n + j) * n + k] = potential.extract(&idx)?;

                    let mut alpha = vec![0u8; n];
                    let mut beta = vec![0u8; n];
                    alpha[i] += 1;
                    beta[j] += 1;
                    beta[k] += 1;
                    let idx = IndexPair { alpha, beta };
                    dzbar[(i * n + j) * n + k] = potential.extract(&idx)?;
                }
            }
        }

        let mut r4 = vec![Complex64::ZERO; n * n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut alpha = vec![0u8; n];
                        let mut beta = vec![0u8; n];
                        alpha[b] += 1;
                        alpha[c] += 1;
                        beta[a] += 1;
                        beta[d] += 1;
                        let second = potential.extract(&IndexPair { alpha, beta })?;
                        let mut correction = Complex64::ZERO;
                        // with `inverse` the plain matrix inverse of
                        // (g_{a bbar})_{a,b}, the contraction g^{nu mubar}
                        // reads off its (mu, nu) entry; the opposite pairing
                        // fails the constant-curvature ball check at points
                        // where G has complex off-diagonal entries
                        for mu in 0..n {
                            for nu in 0..n {
                                correction += inverse[(mu, nu)]
                                    * dz[(b * n + mu) * n + c]
                                    * dzbar[(nu * n + a) * n + d];
                            }
                        }
                        r4[((a * n + b) * n + c) * n + d] = -second + correction;
                    }
                }
            }
        }

        let ricci = self.ricci_tensor(kind)?;
        Ok(CurvatureData { base: self.base.clone(), kind, r4, metric, inverse, ricci })
    }

    /// Holomorphic sectional curvature in direction X.
    pub fn sectional_curvature(&self, x: &[Complex64], kind: MetricKind) -> GeoResult<f64> {
        if x.iter().all(|xi| xi.norm() == 0.0) {
            return Err(GeometryError::ZeroVector);
        }
        let data = self.curvature(kind)?;
        let n = self.n;
        let mut numer = Complex64::ZERO;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        numer += data.r4_at(a, b, c, d) * x[a].conj() * x[b] * x[c] * x[d].conj();
                    }
                }
            }
        }
        let ds2 = self.metric(kind)?.length_sq(x);
        Ok(numer.re / (ds2 * ds2))
    }
}

pub fn bergman_metric(provider: &dyn KernelProvider, z: &[Complex64]) -> GeoResult<MetricTensor> {
    PointInvariants::new(provider, z, 2)?.metric(MetricKind::Bergman)
}

pub fn bergman_volume(provider: &dyn KernelProvider, z: &[Complex64]) -> GeoResult<f64> {
    PointInvariants::new(provider, z, 2)?.volume(MetricKind::Bergman)
}

/// Ricci data of the Bergman metric (tensor plus curvature table).
pub fn ricci_bergman(provider: &dyn KernelProvider, z: &[Complex64]) -> GeoResult<CurvatureData> {
    PointInvariants::new(provider, z, BERGMAN_DEGREE)?.curvature(MetricKind::Bergman)
}

pub fn kf_metric(provider: &dyn KernelProvider, z: &[Complex64]) -> GeoResult<MetricTensor> {
    PointInvariants::new(provider, z, BERGMAN_DEGREE)?.metric(MetricKind::KobayashiFuks)
}

pub fn kf_volume(provider: &dyn KernelProvider, z: &[Complex64]) -> GeoResult<f64> {
    PointInvariants::new(provider, z, BERGMAN_DEGREE)?.volume(MetricKind::KobayashiFuks)
}

pub fn canonical_invariant(
    provider: &dyn KernelProvider,
    z: &[Complex64],
    kind: MetricKind,
) -> GeoResult<f64> {
    PointInvariants::new(provider, z, BERGMAN_DEGREE)?.canonical_invariant(kind)
}

pub fn length(
    provider: &dyn KernelProvider,
    z: &[Complex64],
    x: &[Complex64],
    kind: MetricKind,
) -> GeoResult<f64> {
    let degree = match kind {
        MetricKind::Bergman => 2,
        MetricKind::KobayashiFuks => BERGMAN_DEGREE,
    };
    PointInvariants::new(provider, z, degree)?.length(x, kind)
}

pub fn hsc(
    provider: &dyn KernelProvider,
    z: &[Complex64],
    x: &[Complex64],
    kind: MetricKind,
) -> GeoResult<f64> {
    let degree = match kind {
        MetricKind::Bergman => BERGMAN_DEGREE,
        MetricKind::KobayashiFuks => FULL_DEGREE,
    };
    PointInvariants::new(provider, z, degree)?.sectional_curvature(x, kind)
}

pub fn ricci_curvature(
    provider: &dyn KernelProvider,
    z: &[Complex64],
    x: &[Complex64],
    kind: MetricKind,
) -> GeoResult<f64> {
    let degree = match kind {
        MetricKind::Bergman => BERGMAN_DEGREE,
        MetricKind::KobayashiFuks => FULL_DEGREE,
    };
    PointInvariants::new(provider, z, degree)?.ricci_curvature(x, kind)
}

#[cfg(test)]
mod tests;
