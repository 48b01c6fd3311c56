//! Boundary geometry and the anisotropic rescaling pipeline.
//!
//! A [`DomainModel`] couples a C^2 defining function r (with r < 0 inside
//! and nonvanishing gradient on the boundary) to a kernel provider. On top
//! of it this module provides
//!
//! * the nearest boundary point and distance, by Newton on the Lagrange
//!   system `z - p = s grad r(p), r(p) = 0`;
//! * the tangential/normal split of tangent vectors and the Levi form;
//! * the normalizing change of coordinates that moves a boundary point to
//!   the origin with unit gradient along Re z_n;
//! * the three-stage normalization (affine straightening, holomorphic
//!   quadratic shear, tangential Levi stretch) followed by the anisotropic
//!   dilation, assembled into a [`ScalingStep`] whose pushed-forward kernel
//!   lives on the blown-up domain; and
//! * the Cayley involution exchanging the Siegel half-space and the ball.
//!
//! As the distance delta shrinks, the blown-up domains converge to the
//! Siegel half-space `{2 Re z_n + |'z|^2 < 0}` and their kernels and
//! invariants converge to the Siegel ones; the lab module sweeps exactly
//! that.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::geometry::GeometryError;
use crate::kernels::{
    maps::Biholomorphism, transform_kernel, AffineMap, ComposedMap, DiagonalMap, KernelError,
    KernelProvider, ReinhardtKernel, ReinhardtSpec, ShearMap, SiegelKernel,
};
use crate::tol;
use crate::wjet::{JetError, WJet};

#[derive(Debug, Error)]
pub enum ScalingError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("point must be interior (r = {r:.3e})")]
    NotInterior { r: f64 },
    #[error("point must lie on the boundary (r = {r:.3e})")]
    NotOnBoundary { r: f64 },
    #[error("distance {delta:.3e} exceeds the uniqueness radius {radius:.3e}")]
    OutsideUniquenessRadius { delta: f64, radius: f64 },
    #[error("Newton iteration for the nearest boundary point failed: {what}")]
    NewtonFailure { what: String },
    #[error("defining-function gradient vanishes at the requested point")]
    ZeroGradient,
    #[error("strict pseudoconvexity violated: Levi eigenvalue {lambda:.3e}")]
    NotStrictlyPseudoconvex { lambda: f64 },
    #[error("vector is not complex-tangent at the boundary point (pairing {pairing:.3e})")]
    NotTangent { pairing: f64 },
    #[error("{what}")]
    Invalid { what: String },
}

pub type ScalingResult<T> = Result<T, ScalingError>;

/// C^2 defining function with Wirtinger gradient and complex Hessians.
pub trait DefiningFunction: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, z: &[Complex64]) -> f64;
    /// (dr/dz_1, ..., dr/dz_n).
    fn grad_z(&self, z: &[Complex64]) -> Vec<Complex64>;
    /// d^2 r / dz_i dz_j (symmetric).
    fn hess_zz(&self, z: &[Complex64]) -> DMatrix<Complex64>;
    /// d^2 r / dz_i dzbar_j (Hermitian).
    fn hess_zzbar(&self, z: &[Complex64]) -> DMatrix<Complex64>;
}

/// grad_{zbar} r = conj(grad_z r); as a real vector this is half the
/// Euclidean gradient, so it points outward.
pub fn grad_zbar(def: &dyn DefiningFunction, z: &[Complex64]) -> Vec<Complex64> {
    def.grad_z(z).iter().map(|g| g.conj()).collect()
}

struct BallDefining {
    n: usize,
}

impl DefiningFunction for BallDefining {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, z: &[Complex64]) -> f64 {
        z.iter().map(|zi| zi.norm_sqr()).sum::<f64>() - 1.0
    }

    fn grad_z(&self, z: &[Complex64]) -> Vec<Complex64> {
        z.iter().map(|zi| zi.conj()).collect()
    }

    fn hess_zz(&self, _z: &[Complex64]) -> DMatrix<Complex64> {
        DMatrix::zeros(self.n, self.n)
    }

    fn hess_zzbar(&self, _z: &[Complex64]) -> DMatrix<Complex64> {
        DMatrix::identity(self.n, self.n)
    }
}

/// r = sum_i (|z_i|^2)^{p_i} - 1 for positive real exponents.
struct EllipsoidDefining {
    p: Vec<f64>,
}

impl DefiningFunction for EllipsoidDefining {
    fn dim(&self) -> usize {
        self.p.len()
    }

    fn value(&self, z: &[Complex64]) -> f64 {
        z.iter().zip(&self.p).map(|(zi, &p)| zi.norm_sqr().powf(p)).sum::<f64>() - 1.0
    }

    fn grad_z(&self, z: &[Complex64]) -> Vec<Complex64> {
        z.iter()
            .zip(&self.p)
            .map(|(zi, &p)| {
                let t = zi.norm_sqr();
                if t == 0.0 {
                    if (p - 1.0).abs() < 1e-14 {
                        zi.conj()
                    } else {
                        Complex64::ZERO
                    }
                } else {
                    zi.conj() * p * t.powf(p - 1.0)
                }
            })
            .collect()
    }

    fn hess_zz(&self, z: &[Complex64]) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        for i in 0..n {
            let p = self.p[i];
            let t = z[i].norm_sqr();
            if t > 0.0 {
                h[(i, i)] = z[i].conj().powu(2) * p * (p - 1.0) * t.powf(p - 2.0);
            }
        }
        h
    }

    fn hess_zzbar(&self, z: &[Complex64]) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        for i in 0..n {
            let p = self.p[i];
            let t = z[i].norm_sqr();
            if t == 0.0 {
                if (p - 1.0).abs() < 1e-14 {
                    h[(i, i)] = Complex64::ONE;
                }
            } else {
                h[(i, i)] = Complex64::new(p * p * t.powf(p - 1.0), 0.0);
            }
        }
        h
    }
}

struct SiegelDefining {
    n: usize,
}

impl DefiningFunction for SiegelDefining {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, z: &[Complex64]) -> f64 {
        2.0 * z[self.n - 1].re + z[..self.n - 1].iter().map(|zi| zi.norm_sqr()).sum::<f64>()
    }

    fn grad_z(&self, z: &[Complex64]) -> Vec<Complex64> {
        let mut g: Vec<Complex64> = z[..self.n - 1].iter().map(|zi| zi.conj()).collect();
        g.push(Complex64::ONE);
        g
    }

    fn hess_zz(&self, _z: &[Complex64]) -> DMatrix<Complex64> {
        DMatrix::zeros(self.n, self.n)
    }

    fn hess_zzbar(&self, _z: &[Complex64]) -> DMatrix<Complex64> {
        let mut h = DMatrix::identity(self.n, self.n);
        h[(self.n - 1, self.n - 1)] = Complex64::ZERO;
        h
    }
}

/// Defining function pulled back through the affine substitution
/// z = M w + b and rescaled: r~(w) = scale * r(M w + b).
struct AffinePullbackDefining {
    inner: Arc<dyn DefiningFunction>,
    matrix: DMatrix<Complex64>,
    offset: DVector<Complex64>,
    scale: f64,
}

impl AffinePullbackDefining {
    fn pre_image(&self, w: &[Complex64]) -> Vec<Complex64> {
        let v = DVector::from_column_slice(w);
        (&self.matrix * v + &self.offset).iter().copied().collect()
    }
}

impl DefiningFunction for AffinePullbackDefining {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, w: &[Complex64]) -> f64 {
        self.scale * self.inner.value(&self.pre_image(w))
    }

    fn grad_z(&self, w: &[Complex64]) -> Vec<Complex64> {
        let g = DVector::from_vec(self.inner.grad_z(&self.pre_image(w)));
        (self.matrix.transpose() * g * Complex64::new(self.scale, 0.0)).iter().copied().collect()
    }

    fn hess_zz(&self, w: &[Complex64]) -> DMatrix<Complex64> {
        let h = self.inner.hess_zz(&self.pre_image(w));
        self.matrix.transpose() * h * &self.matrix * Complex64::new(self.scale, 0.0)
    }

    fn hess_zzbar(&self, w: &[Complex64]) -> DMatrix<Complex64> {
        let h = self.inner.hess_zzbar(&self.pre_image(w));
        self.matrix.transpose() * h * self.matrix.map(|m| m.conj()) * Complex64::new(self.scale, 0.0)
    }
}

/// A model domain: defining function, kernel provider, and the radius below
/// which the nearest boundary point is taken to be unique.
pub struct DomainModel {
    pub tag: String,
    pub defining: Arc<dyn DefiningFunction>,
    pub provider: Arc<dyn KernelProvider>,
    pub uniqueness_radius: f64,
}

impl DomainModel {
    pub fn ball(n: usize) -> Self {
        Self {
            tag: format!("ball({n})"),
            defining: Arc::new(BallDefining { n }),
            provider: crate::kernels::ball_kernel(n),
            uniqueness_radius: 0.2,
        }
    }

    pub fn siegel(n: usize) -> Self {
        Self {
            tag: format!("siegel({n})"),
            defining: Arc::new(SiegelDefining { n }),
            provider: crate::kernels::siegel_kernel(n),
            uniqueness_radius: 0.2,
        }
    }

    /// Complex ellipsoid with a truncated series kernel.
    pub fn ellipsoid(spec: ReinhardtSpec, truncation: usize) -> ScalingResult<Self> {
        let p = spec.exponents().to_vec();
        let kernel = ReinhardtKernel::new(spec, truncation)?;
        Ok(Self {
            tag: kernel.tag(),
            defining: Arc::new(EllipsoidDefining { p }),
            provider: Arc::new(kernel),
            uniqueness_radius: 0.05,
        })
    }

    /// Same domain, different kernel provider (used when swapping in an
    /// auto-truncated series or a pushed-forward kernel).
    pub fn with_provider(&self, provider: Arc<dyn KernelProvider>) -> Self {
        Self {
            tag: self.tag.clone(),
            defining: self.defining.clone(),
            provider,
            uniqueness_radius: self.uniqueness_radius,
        }
    }

    pub fn dim(&self) -> usize {
        self.defining.dim()
    }

    /// Push the whole model through an affine change of coordinates
    /// w = F(z), rescaling the defining function by `scale`.
    fn affine_image(&self, map: &AffineMap, scale: f64, tag: String) -> ScalingResult<Self> {
        let inverse = map
            .inverse_map()
            .ok_or_else(|| ScalingError::Invalid { what: "affine map not invertible".into() })?;
        let inv_matrix = map
            .matrix()
            .clone()
            .try_inverse()
            .ok_or_else(|| ScalingError::Invalid { what: "affine map not invertible".into() })?;
        let offset = DVector::from_vec(
            map.inverse(&vec![Complex64::ZERO; self.dim()])
                .ok_or_else(|| ScalingError::Invalid { what: "affine map not invertible".into() })?,
        );
        let defining = Arc::new(AffinePullbackDefining {
            inner: self.defining.clone(),
            matrix: inv_matrix,
            offset,
            scale,
        });
        let provider = transform_kernel(self.provider.clone(), inverse);
        Ok(Self { tag, defining, provider, uniqueness_radius: self.uniqueness_radius })
    }
}

/// Project a ray from the origin onto the boundary: the t > 0 with
/// r(t z) = 0. The model domains are star-shaped around 0, which makes this
/// a reliable Newton seed.
fn ray_to_boundary(def: &dyn DefiningFunction, direction: &[Complex64]) -> ScalingResult<f64> {
    let at = |t: f64| {
        let p: Vec<Complex64> = direction.iter().map(|d| d * t).collect();
        def.value(&p)
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut guard = 0;
    while at(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(ScalingError::NewtonFailure { what: "ray never leaves the domain".into() });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Intersection of the ray through `direction` with the boundary; the model
/// domains are star-shaped around the origin so this is well defined.
pub fn project_to_boundary(
    domain: &DomainModel,
    direction: &[Complex64],
) -> ScalingResult<Vec<Complex64>> {
    let t = ray_to_boundary(domain.defining.as_ref(), direction)?;
    Ok(direction.iter().map(|d| d * t).collect())
}

/// Nearest boundary point and distance for an interior point close to the
/// boundary. Newton on the Lagrange system
/// `z - p - s grad_zbar r(p) = 0, r(p) = 0` seeded by the radial
/// boundary intersection; the caller-provided uniqueness radius bounds the
/// admissible distance.
pub fn nearest_boundary_point(
    domain: &DomainModel,
    z: &[Complex64],
) -> ScalingResult<(Vec<Complex64>, f64)> {
    let def = domain.defining.as_ref();
    let n = domain.dim();
    let r_at_z = def.value(z);
    if r_at_z >= 0.0 {
        return Err(ScalingError::NotInterior { r: r_at_z });
    }

    // seed: walk outward along the gradient line until the boundary, then
    // bisect. Near the boundary this lands close to the foot.
    let mut p: Vec<Complex64> = {
        let g = grad_zbar(def, z);
        let gn: f64 = g.iter().map(|gi| gi.norm_sqr()).sum::<f64>().sqrt();
        if gn < 1e-12 {
            return Err(ScalingError::ZeroGradient);
        }
        let d: Vec<Complex64> = g.iter().map(|gi| gi / gn).collect();
        let at = |t: f64| {
            let q: Vec<Complex64> = z.iter().zip(&d).map(|(zi, di)| zi + di * t).collect();
            def.value(&q)
        };
        let mut hi = (-r_at_z / gn).max(1e-8);
        let mut lo = 0.0;
        let mut guard = 0;
        while at(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
            guard += 1;
            if guard > 60 {
                return Err(ScalingError::NewtonFailure {
                    what: "gradient line never reaches the boundary".into(),
                });
            }
        }
        for _ in 0..120 {
            let mid = 0.5 * (lo + hi);
            if at(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        z.iter().zip(&d).map(|(zi, di)| zi + di * t).collect()
    };
    let mut s = {
        let diff: f64 = z.iter().zip(&p).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let g: f64 = grad_zbar(def, &p).iter().map(|gi| gi.norm_sqr()).sum::<f64>().sqrt();
        -diff / g.max(1e-12)
    };

    // Newton on 2n+1 real unknowns (Re p, Im p, s)
    let mut converged = false;
    for _ in 0..60 {
        let g = grad_zbar(def, &p);
        let residual_c: Vec<Complex64> =
            (0..n).map(|i| z[i] - p[i] - g[i] * Complex64::new(s, 0.0)).collect();
        let r_val = def.value(&p);
        let res_norm = residual_c.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt().max(r_val.abs());
        if res_norm < 1e-14 {
            converged = true;
            break;
        }
        let a = def.hess_zzbar(&p); // A_{ij} = d2r/dz_i dzbar_j
        let b = def.hess_zz(&p);
        let gz = def.grad_z(&p);
        let mut jac = DMatrix::<f64>::zeros(2 * n + 1, 2 * n + 1);
        let mut rhs = DVector::<f64>::zeros(2 * n + 1);
        for i in 0..n {
            rhs[2 * i] = -residual_c[i].re;
            rhs[2 * i + 1] = -residual_c[i].im;
            for j in 0..n {
                // w_i = z_i - p_i - s gbar_i(p):
                //   dw_i/dp_j    = -delta_ij - s A_{ji}
                //   dw_i/dpbar_j = -s conj(B_{ji})
                let dp = -s * a[(j, i)] - if i == j { Complex64::ONE } else { Complex64::ZERO };
                let dpbar = -s * b[(j, i)].conj();
                jac[(2 * i, 2 * j)] = (dp + dpbar).re;
                jac[(2 * i, 2 * j + 1)] = -(dp - dpbar).im;
                jac[(2 * i + 1, 2 * j)] = (dp + dpbar).im;
                jac[(2 * i + 1, 2 * j + 1)] = (dp - dpbar).re;
            }
            jac[(2 * i, 2 * n)] = -g[i].re;
            jac[(2 * i + 1, 2 * n)] = -g[i].im;
        }
        rhs[2 * n] = -r_val;
        for j in 0..n {
            jac[(2 * n, 2 * j)] = 2.0 * gz[j].re;
            jac[(2 * n, 2 * j + 1)] = -2.0 * gz[j].im;
        }
        let step = jac.lu().solve(&rhs).ok_or_else(|| ScalingError::NewtonFailure {
            what: "singular Jacobian in the Lagrange system".into(),
        })?;
        for i in 0..n {
            p[i] += Complex64::new(step[2 * i], step[2 * i + 1]);
        }
        s += step[2 * n];
    }
    if !converged {
        return Err(ScalingError::NewtonFailure {
            what: format!("no convergence near seed {p:?}"),
        });
    }

    let delta: f64 = z.iter().zip(&p).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    if delta > domain.uniqueness_radius {
        return Err(ScalingError::OutsideUniquenessRadius {
            delta,
            radius: domain.uniqueness_radius,
        });
    }
    // stationarity: z - p parallel to the gradient
    let g = grad_zbar(def, &p);
    let gn: f64 = g.iter().map(|gi| gi.norm_sqr()).sum::<f64>().sqrt();
    let pairing: Complex64 =
        z.iter().zip(&p).zip(&g).map(|((zi, pi), gi)| (zi - pi) * (gi / gn).conj()).sum();
    let mut cross = 0.0f64;
    for i in 0..n {
        let residual = (z[i] - p[i]) - pairing * g[i] / gn;
        cross = cross.max(residual.norm());
    }
    if cross > tol::NEAREST_POINT * delta.max(1e-12) {
        return Err(ScalingError::NewtonFailure {
            what: format!("stationarity residual {cross:.3e} too large"),
        });
    }
    Ok((p, delta))
}

/// Outward unit normal nu = grad_zbar r / |grad_zbar r| at a boundary point.
pub fn unit_normal(domain: &DomainModel, p: &[Complex64]) -> ScalingResult<Vec<Complex64>> {
    let g = grad_zbar(domain.defining.as_ref(), p);
    let gn: f64 = g.iter().map(|gi| gi.norm_sqr()).sum::<f64>().sqrt();
    if gn < 1e-12 {
        return Err(ScalingError::ZeroGradient);
    }
    Ok(g.iter().map(|gi| gi / gn).collect())
}

/// Decomposition of a tangent vector at a point near the boundary into its
/// complex-normal and complex-tangential parts at the nearest boundary
/// point.
pub struct TangentSplit {
    pub foot: Vec<Complex64>,
    pub normal: Vec<Complex64>,
    pub tangential: Vec<Complex64>,
}

pub fn tangent_split(
    domain: &DomainModel,
    z: &[Complex64],
    x: &[Complex64],
) -> ScalingResult<TangentSplit> {
    let (foot, _) = nearest_boundary_point(domain, z)?;
    let nu = unit_normal(domain, &foot)?;
    let pairing: Complex64 = x.iter().zip(&nu).map(|(xi, ni)| xi * ni.conj()).sum();
    let normal: Vec<Complex64> = nu.iter().map(|ni| pairing * ni).collect();
    let tangential: Vec<Complex64> = x.iter().zip(&normal).map(|(xi, ni)| xi - ni).collect();
    Ok(TangentSplit { foot, normal, tangential })
}

/// Levi form of the boundary at p applied to a complex-tangent vector,
/// normalized so the defining function has unit gradient:
/// L(p, X) = sum d^2 r/dz_mu dzbar_nu X^mu conj(X^nu) / |grad_zbar r(p)|.
pub fn levi_form(domain: &DomainModel, p: &[Complex64], x_h: &[Complex64]) -> ScalingResult<f64> {
    let r = domain.defining.value(p);
    if r.abs() > 1e-8 {
        return Err(ScalingError::NotOnBoundary { r });
    }
    let nu = unit_normal(domain, p)?;
    let x_norm: f64 = x_h.iter().map(|xi| xi.norm_sqr()).sum::<f64>().sqrt();
    let pairing: Complex64 = x_h.iter().zip(&nu).map(|(xi, ni)| xi * ni.conj()).sum();
    if pairing.norm() > 1e-10 * x_norm.max(1e-30) {
        return Err(ScalingError::NotTangent { pairing: pairing.norm() });
    }
    let a = domain.defining.hess_zzbar(p);
    let mut acc = Complex64::ZERO;
    for mu in 0..domain.dim() {
        for nu_i in 0..domain.dim() {
            acc += a[(mu, nu_i)] * x_h[mu] * x_h[nu_i].conj();
        }
    }
    let g = grad_zbar(domain.defining.as_ref(), p);
    let gn: f64 = g.iter().map(|gi| gi.norm_sqr()).sum::<f64>().sqrt();
    Ok(acc.re / gn)
}

/// Smallest Levi eigenvalue on the complex tangent space at p (after unit
/// gradient normalization); positive iff the point is strictly
/// pseudoconvex.
pub fn levi_min_eigenvalue(domain: &DomainModel, p: &[Complex64]) -> ScalingResult<f64> {
    if domain.dim() == 1 {
        // no complex tangent directions; treat smooth boundary as strictly
        // pseudoconvex
        return Ok(f64::INFINITY);
    }
    Ok(levi_tangential_block(domain, p)?
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min))
}

/// Determinant of the Levi form on the complex tangent space at p, with
/// unit-gradient normalization. It rescales the boundary limit of the
/// metric volume element; 1 for the sphere, and by convention 1 when n = 1.
pub fn levi_determinant(domain: &DomainModel, p: &[Complex64]) -> ScalingResult<f64> {
    if domain.dim() == 1 {
        return Ok(1.0);
    }
    Ok(levi_tangential_block(domain, p)?
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .product())
}

/// Hermitian matrix of the unit-gradient Levi form in an orthonormal basis
/// of the complex tangent space at p.
fn levi_tangential_block(
    domain: &DomainModel,
    p: &[Complex64],
) -> ScalingResult<DMatrix<Complex64>> {
    let n = domain.dim();
    let nu = unit_normal(domain, p)?;
    // orthonormal basis of the orthogonal complement of nu by Gram-Schmidt
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(n - 1);
    for k in 0..n {
        let mut candidate = vec![Complex64::ZERO; n];
        candidate[k] = Complex64::ONE;
        let inner: Complex64 = candidate.iter().zip(&nu).map(|(ci, ni)| ci * ni.conj()).sum();
        for i in 0..n {
            candidate[i] -= inner * nu[i];
        }
        for b in &basis {
            let inner: Complex64 = candidate.iter().zip(b).map(|(ci, bi)| ci * bi.conj()).sum();
            for i in 0..n {
                candidate[i] -= inner * b[i];
            }
        }
        let norm: f64 = candidate.iter().map(|ci| ci.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            basis.push(candidate.iter().map(|ci| ci / norm).collect());
            if basis.len() == n - 1 {
                break;
            }
        }
    }
    let a = domain.defining.hess_zzbar(p);
    let g = grad_zbar(domain.defining.as_ref(), p);
    let gn: f64 = g.iter().map(|gi| gi.norm_sqr()).sum::<f64>().sqrt();
    let m = basis.len();
    let mut levi = DMatrix::<Complex64>::zeros(m, m);
    for r in 0..m {
        for c in 0..m {
            let mut acc = Complex64::ZERO;
            for mu in 0..n {
                for nu_i in 0..n {
                    acc += a[(mu, nu_i)] * basis[r][mu] * basis[c][nu_i].conj();
                }
            }
            levi[(r, c)] = acc / gn;
        }
    }
    Ok(levi)
}

/// Unitary sending the unit vector `g_hat` to e_n exactly.
fn unitary_to_last_axis(g_hat: &[Complex64]) -> DMatrix<Complex64> {
    let n = g_hat.len();
    let mut e_n = vec![Complex64::ZERO; n];
    e_n[n - 1] = Complex64::ONE;
    let tangential: f64 = g_hat[..n - 1].iter().map(|c| c.norm_sqr()).sum();
    if tangential < 1e-30 {
        // already along the last axis up to phase
        let phase = g_hat[n - 1];
        let mut u = DMatrix::identity(n, n);
        u[(n - 1, n - 1)] = phase.conj();
        return u;
    }
    let lambda = {
        let gn = g_hat[n - 1];
        if gn.norm() < 1e-30 {
            Complex64::ONE
        } else {
            gn / gn.norm()
        }
    };
    // reflection through w = g_hat + lambda e_n maps g_hat to -lambda e_n
    let mut w: Vec<Complex64> = g_hat.to_vec();
    w[n - 1] += lambda;
    let w_norm_sqr: f64 = w.iter().map(|c| c.norm_sqr()).sum();
    let mut refl = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            refl[(i, j)] -= 2.0 * w[i] * w[j].conj() / w_norm_sqr;
        }
    }
    // fix the phase so the image is exactly e_n
    let mut fix = DMatrix::identity(n, n);
    fix[(n - 1, n - 1)] = -lambda.conj();
    fix * refl
}

/// Rigid normalization at a boundary point: z -> U (z - p0), with the
/// defining function rescaled so that afterwards the point sits at the
/// origin with grad_zbar r = ('0, 1).
pub fn normalize_coordinates(
    domain: &DomainModel,
    p0: &[Complex64],
) -> ScalingResult<(AffineMap, DomainModel)> {
    let r = domain.defining.value(p0);
    if r.abs() > 1e-8 {
        return Err(ScalingError::NotOnBoundary { r });
    }
    let g = grad_zbar(domain.defining.as_ref(), p0);
    let gn: f64 = g.iter().map(|gi| gi.norm_sqr()).sum::<f64>().sqrt();
    if gn < 1e-12 {
        return Err(ScalingError::ZeroGradient);
    }
    let g_hat: Vec<Complex64> = g.iter().map(|gi| gi / gn).collect();
    let u = unitary_to_last_axis(&g_hat);
    let offset = -(&u * DVector::from_column_slice(p0));
    let map = AffineMap::new(u, offset)?;
    let image = domain.affine_image(&map, 1.0 / gn, format!("{}/normalized", domain.tag))?;
    Ok((map, image))
}

/// The straightening affine map w = P_p (z - p): tangential rows
/// dr/dzbar_n (z_mu - p_mu) - dr/dzbar_mu (z_n - p_n), last row
/// <grad_z r, z - p>.
pub fn phi1(domain: &DomainModel, p: &[Complex64]) -> ScalingResult<AffineMap> {
    let n = domain.dim();
    let gz = domain.defining.grad_z(p);
    let gzbar: Vec<Complex64> = gz.iter().map(|g| g.conj()).collect();
    if gz[n - 1].norm() < 1e-12 {
        return Err(ScalingError::ZeroGradient);
    }
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for mu in 0..n - 1 {
        m[(mu, mu)] = gzbar[n - 1];
        m[(mu, n - 1)] = -gzbar[mu];
    }
    for j in 0..n {
        m[(n - 1, j)] = gz[j];
    }
    let offset = -(&m * DVector::from_column_slice(p));
    Ok(AffineMap::new(m, offset)?)
}

/// The quadratic data of the defining function in straightened coordinates:
/// a1 = (1/2) (P^{-1})^t (d2r/dzdz) P^{-1} and
/// b1 = (P^{-1})^* (d2r/dzdzbar) P^{-1}.
pub fn quadratic_data(
    domain: &DomainModel,
    p: &[Complex64],
) -> ScalingResult<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let phi = phi1(domain, p)?;
    let p_inv = phi
        .matrix()
        .clone()
        .try_inverse()
        .ok_or_else(|| ScalingError::Invalid { what: "singular straightening matrix".into() })?;
    let hzz = domain.defining.hess_zz(p);
    let hzzbar = domain.defining.hess_zzbar(p);
    let a1 = p_inv.transpose() * hzz * &p_inv * Complex64::new(0.5, 0.0);
    let b1 = p_inv.adjoint() * hzzbar * &p_inv;
    Ok((a1, b1))
}

/// Shear removing the tangential-tangential holomorphic quadratic terms:
/// ('z, z_n + sum_{mu,nu < n} a1_{mu nu} z_mu z_nu).
pub fn phi2(a1: &DMatrix<Complex64>, n: usize) -> ShearMap {
    let block = a1.view((0, 0), (n - 1, n - 1)).into_owned();
    ShearMap::new(block, n)
}

/// Tangential stretch normalizing the Levi block to the identity: the map
/// ('z, z_n) -> (M 'z, z_n) with M the Hermitian square root of the Levi
/// block, so that substituting the inverse into the quadratic form yields
/// |'z|^2. Eigenvalues are sorted descending and eigenvector phases fixed
/// for determinism.
pub fn phi3(b1: &DMatrix<Complex64>, n: usize) -> ScalingResult<AffineMap> {
    if n == 1 {
        return Ok(AffineMap::identity(1));
    }
    // the sesquilinear form sum b1_{mu nu} v_mu conj(v_nu) equals
    // v^dagger (b1^T) v, so diagonalize the transpose
    let h = b1.view((0, 0), (n - 1, n - 1)).transpose().into_owned();
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n - 1).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let mut vectors = DMatrix::<Complex64>::zeros(n - 1, n - 1);
    let mut roots = Vec::with_capacity(n - 1);
    for (col, &src) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[src];
        if lambda <= 0.0 {
            return Err(ScalingError::NotStrictlyPseudoconvex { lambda });
        }
        roots.push(lambda.sqrt());
        let mut v = eig.eigenvectors.column(src).into_owned();
        if let Some(first) = v.iter().find(|c| c.norm() > 1e-12) {
            let phase = first / first.norm();
            v *= phase.conj();
        }
        vectors.set_column(col, &v);
    }
    // Hermitian square root W diag(sqrt lambda) W^dagger
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let mut acc = Complex64::ZERO;
            for (k, &root) in roots.iter().enumerate() {
                acc += vectors[(i, k)] * root * vectors[(j, k)].conj();
            }
            m[(i, j)] = acc;
        }
    }
    m[(n - 1, n - 1)] = Complex64::ONE;
    Ok(AffineMap::linear(m)?)
}

/// The anisotropic dilation ('z/sqrt(eta), z_n/eta).
pub fn dilation(eta: f64, n: usize) -> ScalingResult<DiagonalMap> {
    Ok(DiagonalMap::dilation(eta, n)?)
}

/// The Cayley involution H(z) = (sqrt2 'z/(z_n - 1), (z_n + 1)/(z_n - 1)),
/// exchanging the Siegel half-space and the unit ball, with H(b*) = 0.
pub struct CayleyMap {
    n: usize,
}

pub fn cayley(n: usize) -> CayleyMap {
    CayleyMap { n }
}

impl Biholomorphism for CayleyMap {
    fn dim(&self) -> usize {
        self.n
    }

    fn forward(&self, z: &[Complex64]) -> Result<Vec<Complex64>, KernelError> {
        let denom = z[self.n - 1] - Complex64::ONE;
        if denom.norm() < 1e-300 {
            return Err(KernelError::SingularMap { what: "Cayley map at z_n = 1".into() });
        }
        let sqrt2 = Complex64::new(2.0f64.sqrt(), 0.0);
        let mut out: Vec<Complex64> = z[..self.n - 1].iter().map(|zi| sqrt2 * zi / denom).collect();
        out.push((z[self.n - 1] + Complex64::ONE) / denom);
        Ok(out)
    }

    fn forward_jets(&self, zjets: &[WJet]) -> Result<Vec<WJet>, KernelError> {
        let denom_inv = zjets[self.n - 1].add_scalar(-Complex64::ONE).inv()?;
        let sqrt2 = Complex64::new(2.0f64.sqrt(), 0.0);
        let mut out = Vec::with_capacity(self.n);
        for zj in &zjets[..self.n - 1] {
            out.push(zj.scale(sqrt2).try_mul(&denom_inv)?);
        }
        out.push(zjets[self.n - 1].add_scalar(Complex64::ONE).try_mul(&denom_inv)?);
        Ok(out)
    }

    fn jac_det_jet_of(&self, zjets: &[WJet]) -> Result<WJet, KernelError> {
        // det = -2 * 2^{(n-1)/2} (z_n - 1)^{-(n+1)}
        let front = -2.0 * 2.0f64.powf((self.n as f64 - 1.0) / 2.0);
        let base = zjets[self.n - 1].add_scalar(-Complex64::ONE);
        Ok(base.powi(-(self.n as i32 + 1))?.scale(Complex64::new(front, 0.0)))
    }

    fn inverse_map(&self) -> Option<Arc<dyn Biholomorphism>> {
        Some(Arc::new(CayleyMap { n: self.n }))
    }
}

/// One step of the blow-up at scale delta: the normalizing maps, the
/// dilation, the composed scaling map and the kernel provider of the
/// blown-up domain.
pub struct ScalingStep {
    /// Interior probe point in original coordinates.
    pub zeta: Vec<Complex64>,
    /// Its boundary foot in original coordinates.
    pub foot: Vec<Complex64>,
    pub delta: f64,
    pub eta: f64,
    /// Straightening matrix P at the foot (normalized coordinates).
    pub p_matrix: DMatrix<Complex64>,
    /// Holomorphic quadratic coefficients at the foot.
    pub a1: DMatrix<Complex64>,
    /// Levi coefficients at the foot.
    pub b1: DMatrix<Complex64>,
    /// Derivative of the composed normalization at zeta.
    pub q_matrix: DMatrix<Complex64>,
    /// Full scaling map original domain -> blown-up domain.
    pub forward: Arc<dyn Biholomorphism>,
    pub inverse: Arc<dyn Biholomorphism>,
    /// Kernel provider of the blown-up domain.
    pub provider: Arc<dyn KernelProvider>,
    normalized_defining: Arc<dyn DefiningFunction>,
    psi_inverse: Arc<dyn Biholomorphism>,
}

impl ScalingStep {
    /// The blown-up defining function r~(z) = r_normalized(Psi^{-1} T^{-1} z)/eta
    /// evaluated pointwise; converges to 2 Re z_n + |'z|^2 on compacts.
    pub fn scaled_defining_value(&self, z: &[Complex64]) -> ScalingResult<f64> {
        let n = self.p_matrix.nrows();
        let mut w: Vec<Complex64> =
            z[..n - 1].iter().map(|zi| zi * Complex64::new(self.eta.sqrt(), 0.0)).collect();
        w.push(z[n - 1] * Complex64::new(self.eta, 0.0));
        let pre = self.psi_inverse.forward(&w)?;
        Ok(self.normalized_defining.value(&pre) / self.eta)
    }

    /// b* = ('0, -1), the image of zeta under the scaling map.
    pub fn base_point(&self) -> Vec<Complex64> {
        SiegelKernel::base_point(self.p_matrix.nrows())
    }
}

/// Assemble the scaling step for the inward normal probe at distance
/// `delta` from `p0`.
pub fn make_scaling_step(
    domain: &DomainModel,
    p0: &[Complex64],
    delta: f64,
) -> ScalingResult<ScalingStep> {
    let n = domain.dim();
    let nu = unit_normal(domain, p0)?;
    let zeta: Vec<Complex64> = p0.iter().zip(&nu).map(|(pi, ni)| pi - ni * delta).collect();

    let (nmap, ndom) = normalize_coordinates(domain, p0)?;
    let zeta_hat = nmap.forward(&zeta)?;
    let (foot_hat, delta_j) = nearest_boundary_point(&ndom, &zeta_hat)?;

    let grad_hat = grad_zbar(ndom.defining.as_ref(), &foot_hat);
    let grad_norm: f64 = grad_hat.iter().map(|g| g.norm_sqr()).sum::<f64>().sqrt();
    let eta = delta_j * grad_norm;

    let phi1_map = phi1(&ndom, &foot_hat)?;
    let (a1, b1) = quadratic_data(&ndom, &foot_hat)?;
    let phi2_map = phi2(&a1, n);
    let phi3_map = phi3(&b1, n)?;
    let t_map = dilation(eta, n)?;

    // Q = Psi'(zeta) with the shear derivative taken at Phi1(zeta)
    let w1 = phi1_map.forward(&zeta_hat)?;
    let q_matrix = phi3_map.matrix() * phi2_map.jacobian(&w1)? * phi1_map.matrix();

    let p_matrix = phi1_map.matrix().clone();
    let foot = nmap
        .inverse(&foot_hat)
        .ok_or_else(|| ScalingError::Invalid { what: "normalization not invertible".into() })?;
    let nmap_arc: Arc<dyn Biholomorphism> = Arc::new(nmap);
    let psi: Arc<dyn Biholomorphism> = Arc::new(ComposedMap::new(vec![
        Arc::new(phi1_map),
        Arc::new(phi2_map),
        Arc::new(phi3_map),
    ]));
    let psi_inverse = psi
        .inverse_map()
        .ok_or_else(|| ScalingError::Invalid { what: "normalization not invertible".into() })?;
    let forward: Arc<dyn Biholomorphism> = Arc::new(ComposedMap::new(vec![
        nmap_arc,
        psi,
        Arc::new(t_map),
    ]));
    let inverse = forward
        .inverse_map()
        .ok_or_else(|| ScalingError::Invalid { what: "scaling map not invertible".into() })?;
    let provider = transform_kernel(domain.provider.clone(), inverse.clone());

    let step = ScalingStep {
        zeta: zeta.clone(),
        foot,
        delta: delta_j,
        eta,
        p_matrix,
        a1,
        b1,
        q_matrix,
        forward,
        inverse,
        provider,
        normalized_defining: ndom.defining.clone(),
        psi_inverse,
    };

    // invariants baked into the construction
    let b_star = step.base_point();
    let image = step.forward.forward(&zeta)?;
    let drift: f64 =
        image.iter().zip(&b_star).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    if drift > tol::SCALING_STEP {
        return Err(ScalingError::Invalid {
            what: format!("scaling map sends the probe to {image:?}, drift {drift:.3e}"),
        });
    }
    if (step.eta / step.delta - grad_norm).abs() > tol::SCALING_STEP * grad_norm {
        return Err(ScalingError::Invalid { what: "eta/delta mismatch".into() });
    }
    Ok(step)
}
