//! Jet-evaluable biholomorphic maps.
//!
//! Every map exposes pointwise evaluation, evaluation on coordinate jets,
//! and the jet of its complex Jacobian determinant. The determinant jet is
//! supplied per map (closed form in each case here), so compositions never
//! need generic function composition of jets.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{KernelError, KernelResult};
use crate::wjet::{IndexPair, WJet};

pub trait Biholomorphism: Send + Sync {
    fn dim(&self) -> usize;

    fn forward(&self, z: &[Complex64]) -> KernelResult<Vec<Complex64>>;

    /// Apply the map to coordinate jets.
    fn forward_jets(&self, zjets: &[WJet]) -> KernelResult<Vec<WJet>>;

    /// Jet of det J_F expressed in the same coordinates as `zjets`.
    fn jac_det_jet_of(&self, zjets: &[WJet]) -> KernelResult<WJet>;

    fn inverse_map(&self) -> Option<Arc<dyn Biholomorphism>> {
        None
    }

    fn inverse(&self, w: &[Complex64]) -> Option<Vec<Complex64>> {
        self.inverse_map().and_then(|m| m.forward(w).ok())
    }

    /// Complex Jacobian matrix at a point, read off degree-1 jets.
    fn jacobian(&self, z: &[Complex64]) -> KernelResult<DMatrix<Complex64>> {
        let n = self.dim();
        let jets = self.forward_jets(&WJet::holo_vars(z, 1))?;
        let mut j = DMatrix::zeros(n, n);
        for (i, jet) in jets.iter().enumerate() {
            for col in 0..n {
                j[(i, col)] = jet.coeff(&IndexPair::holo(col, n))?;
            }
        }
        Ok(j)
    }

    fn jac_det(&self, z: &[Complex64]) -> KernelResult<Complex64> {
        Ok(self.jac_det_jet_of(&WJet::holo_vars(z, 0))?.constant_term())
    }
}

/// z -> M z + b.
pub struct AffineMap {
    matrix: DMatrix<Complex64>,
    offset: DVector<Complex64>,
    det: Complex64,
}

impl AffineMap {
    pub fn new(matrix: DMatrix<Complex64>, offset: DVector<Complex64>) -> KernelResult<Self> {
        let det = matrix.clone().lu().determinant();
        if det.norm() < 1e-300 {
            return Err(KernelError::SingularMap { what: "affine map with zero determinant".into() });
        }
        Ok(Self { matrix, offset, det })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: DMatrix::identity(n, n),
            offset: DVector::zeros(n),
            det: Complex64::ONE,
        }
    }

    /// Pure translation z -> z + b.
    pub fn translation(b: &[Complex64]) -> Self {
        Self {
            matrix: DMatrix::identity(b.len(), b.len()),
            offset: DVector::from_column_slice(b),
            det: Complex64::ONE,
        }
    }

    /// Linear part only, z -> M z.
    pub fn linear(matrix: DMatrix<Complex64>) -> KernelResult<Self> {
        let n = matrix.nrows();
        Self::new(matrix, DVector::zeros(n))
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn det(&self) -> Complex64 {
        self.det
    }
}

impl Biholomorphism for AffineMap {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn forward(&self, z: &[Complex64]) -> KernelResult<Vec<Complex64>> {
        let v = DVector::from_column_slice(z);
        Ok((&self.matrix * v + &self.offset).iter().copied().collect())
    }

    fn forward_jets(&self, zjets: &[WJet]) -> KernelResult<Vec<WJet>> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = WJet::constant(self.offset[i], zjets[0].dim(), zjets[0].degree());
            for (j, zj) in zjets.iter().enumerate() {
                acc = acc.try_add(&zj.scale(self.matrix[(i, j)]))?;
            }
            out.push(acc);
        }
        Ok(out)
    }

    fn jac_det_jet_of(&self, zjets: &[WJet]) -> KernelResult<WJet> {
        Ok(WJet::constant(self.det, zjets[0].dim(), zjets[0].degree()))
    }

    fn inverse_map(&self) -> Option<Arc<dyn Biholomorphism>> {
        let inv = self.matrix.clone().try_inverse()?;
        let offset = -(&inv * &self.offset);
        Some(Arc::new(AffineMap { matrix: inv, offset, det: self.det.inv() }))
    }

    fn jacobian(&self, _z: &[Complex64]) -> KernelResult<DMatrix<Complex64>> {
        Ok(self.matrix.clone())
    }

    fn jac_det(&self, _z: &[Complex64]) -> KernelResult<Complex64> {
        Ok(self.det)
    }
}

/// The polynomial shear ('z, z_n + sum_{mu,nu < n} a_{mu nu} z_mu z_nu),
/// which removes tangential-tangential holomorphic quadratic terms. It
/// fixes the Re z_n-axis and has unit Jacobian determinant.
pub struct ShearMap {
    /// (n-1) x (n-1) symmetric coefficient block.
    quad: DMatrix<Complex64>,
    n: usize,
}

impl ShearMap {
    pub fn new(quad: DMatrix<Complex64>, n: usize) -> Self {
        assert_eq!(quad.nrows(), n - 1);
        assert_eq!(quad.ncols(), n - 1);
        Self { quad, n }
    }

    pub fn identity(n: usize) -> Self {
        Self { quad: DMatrix::zeros(n - 1, n - 1), n }
    }

    fn quad_form(&self, z: &[Complex64]) -> Complex64 {
        let mut q = Complex64::ZERO;
        for mu in 0..self.n - 1 {
            for nu in 0..self.n - 1 {
                q += self.quad[(mu, nu)] * z[mu] * z[nu];
            }
        }
        q
    }
}

impl Biholomorphism for ShearMap {
    fn dim(&self) -> usize {
        self.n
    }

    fn forward(&self, z: &[Complex64]) -> KernelResult<Vec<Complex64>> {
        let mut out = z.to_vec();
        out[self.n - 1] += self.quad_form(z);
        Ok(out)
    }

    fn forward_jets(&self, zjets: &[WJet]) -> KernelResult<Vec<WJet>> {
        let mut out = zjets.to_vec();
        let mut q = WJet::zero(zjets[0].dim(), zjets[0].degree());
        for mu in 0..self.n - 1 {
            for nu in 0..self.n - 1 {
                let c = self.quad[(mu, nu)];
                if c.norm() > 0.0 {
                    q = q.try_add(&zjets[mu].try_mul(&zjets[nu])?.scale(c))?;
                }
            }
        }
        out[self.n - 1] = out[self.n - 1].try_add(&q)?;
        Ok(out)
    }

    fn jac_det_jet_of(&self, zjets: &[WJet]) -> KernelResult<WJet> {
        Ok(WJet::one(zjets[0].dim(), zjets[0].degree()))
    }

    fn inverse_map(&self) -> Option<Arc<dyn Biholomorphism>> {
        Some(Arc::new(ShearMap { quad: -self.quad.clone(), n: self.n }))
    }

    fn jac_det(&self, _z: &[Complex64]) -> KernelResult<Complex64> {
        Ok(Complex64::ONE)
    }
}

/// Coordinate-wise scaling z -> diag(d) z.
pub struct DiagonalMap {
    diag: Vec<Complex64>,
}

impl DiagonalMap {
    pub fn new(diag: Vec<Complex64>) -> KernelResult<Self> {
        if diag.iter().any(|d| d.norm() < 1e-300) {
            return Err(KernelError::SingularMap { what: "diagonal map with zero entry".into() });
        }
        Ok(Self { diag })
    }

    /// The anisotropic dilation ( 'z / sqrt(eta), z_n / eta ).
    pub fn dilation(eta: f64, n: usize) -> KernelResult<Self> {
        if eta <= 0.0 {
            return Err(KernelError::SingularMap { what: format!("dilation with eta = {eta}") });
        }
        let mut diag = vec![Complex64::new(1.0 / eta.sqrt(), 0.0); n];
        diag[n - 1] = Complex64::new(1.0 / eta, 0.0);
        Ok(Self { diag })
    }

    pub fn det(&self) -> Complex64 {
        self.diag.iter().product()
    }
}

impl Biholomorphism for DiagonalMap {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn forward(&self, z: &[Complex64]) -> KernelResult<Vec<Complex64>> {
        Ok(z.iter().zip(&self.diag).map(|(zi, di)| zi * di).collect())
    }

    fn forward_jets(&self, zjets: &[WJet]) -> KernelResult<Vec<WJet>> {
        Ok(zjets.iter().zip(&self.diag).map(|(zj, di)| zj.scale(*di)).collect())
    }

    fn jac_det_jet_of(&self, zjets: &[WJet]) -> KernelResult<WJet> {
        Ok(WJet::constant(self.det(), zjets[0].dim(), zjets[0].degree()))
    }

    fn inverse_map(&self) -> Option<Arc<dyn Biholomorphism>> {
        Some(Arc::new(DiagonalMap { diag: self.diag.iter().map(|d| d.inv()).collect() }))
    }

    fn jac_det(&self, _z: &[Complex64]) -> KernelResult<Complex64> {
        Ok(self.det())
    }
}

/// The standard ball automorphism that exchanges `a` and the origin; an
/// involution of the unit ball. Jacobian determinant
/// (-1)^n (1-|a|^2)^{(n+1)/2} (1 - <z, a>)^{-(n+1)}.
pub struct MobiusBall {
    a: Vec<Complex64>,
    n: usize,
    s: f64,
    a_norm_sqr: f64,
}

impl MobiusBall {
    pub fn new(a: Vec<Complex64>) -> KernelResult<Self> {
        let n = a.len();
        let a_norm_sqr: f64 = a.iter().map(|ai| ai.norm_sqr()).sum();
        if a_norm_sqr >= 1.0 {
            return Err(KernelError::SingularMap { what: "Mobius center outside the ball".into() });
        }
        Ok(Self { a, n, s: (1.0 - a_norm_sqr).sqrt(), a_norm_sqr })
    }
}

impl Biholomorphism for MobiusBall {
    fn dim(&self) -> usize {
        self.n
    }

    fn forward(&self, z: &[Complex64]) -> KernelResult<Vec<Complex64>> {
        if self.a_norm_sqr == 0.0 {
            return Ok(z.iter().map(|zi| -zi).collect());
        }
        let za: Complex64 = z.iter().zip(&self.a).map(|(zi, ai)| zi * ai.conj()).sum();
        let denom = Complex64::ONE - za;
        if denom.norm() < 1e-300 {
            return Err(KernelError::SingularMap { what: "Mobius denominator vanished".into() });
        }
        let proj = za / self.a_norm_sqr;
        Ok((0..self.n)
            .map(|i| (self.a[i] - proj * self.a[i] - self.s * (z[i] - proj * self.a[i])) / denom)
            .collect())
    }

    fn forward_jets(&self, zjets: &[WJet]) -> KernelResult<Vec<WJet>> {
        let (dim, degree) = (zjets[0].dim(), zjets[0].degree());
        if self.a_norm_sqr == 0.0 {
            return Ok(zjets.iter().map(|zj| zj.scale(-Complex64::ONE)).collect());
        }
        let mut za = WJet::zero(dim, degree);
        for (zj, ai) in zjets.iter().zip(&self.a) {
            za = za.try_add(&zj.scale(ai.conj()))?;
        }
        let denom_inv = WJet::one(dim, degree).try_sub(&za)?.inv()?;
        let proj = za.scale(Complex64::new(1.0 / self.a_norm_sqr, 0.0));
        let s = Complex64::new(self.s, 0.0);
        let mut out = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let tangent = zjets[i].try_sub(&proj.scale(self.a[i]))?;
            let numer = proj
                .scale(-self.a[i])
                .add_scalar(self.a[i])
                .try_sub(&tangent.scale(s))?;
            out.push(numer.try_mul(&denom_inv)?);
        }
        Ok(out)
    }

    fn jac_det_jet_of(&self, zjets: &[WJet]) -> KernelResult<WJet> {
        let (dim, degree) = (zjets[0].dim(), zjets[0].degree());
        let sign = if self.n % 2 == 0 { 1.0 } else { -1.0 };
        let front = sign * (1.0 - self.a_norm_sqr).powf((self.n as f64 + 1.0) / 2.0);
        let mut za = WJet::zero(dim, degree);
        for (zj, ai) in zjets.iter().zip(&self.a) {
            za = za.try_add(&zj.scale(ai.conj()))?;
        }
        let base = WJet::one(dim, degree).try_sub(&za)?;
        Ok(base.powi(-(self.n as i32 + 1))?.scale(Complex64::new(front, 0.0)))
    }

    fn inverse_map(&self) -> Option<Arc<dyn Biholomorphism>> {
        Some(Arc::new(MobiusBall {
            a: self.a.clone(),
            n: self.n,
            s: self.s,
            a_norm_sqr: self.a_norm_sqr,
        }))
    }
}

/// Maps applied left to right.
pub struct ComposedMap {
    maps: Vec<Arc<dyn Biholomorphism>>,
    n: usize,
}

impl ComposedMap {
    pub fn new(maps: Vec<Arc<dyn Biholomorphism>>) -> Self {
        assert!(!maps.is_empty());
        let n = maps[0].dim();
        assert!(maps.iter().all(|m| m.dim() == n));
        Self { maps, n }
    }
}

impl Biholomorphism for ComposedMap {
    fn dim(&self) -> usize {
        self.n
    }

    fn forward(&self, z: &[Complex64]) -> KernelResult<Vec<Complex64>> {
        let mut cur = z.to_vec();
        for m in &self.maps {
            cur = m.forward(&cur)?;
        }
        Ok(cur)
    }

    fn forward_jets(&self, zjets: &[WJet]) -> KernelResult<Vec<WJet>> {
        let mut cur = zjets.to_vec();
        for m in &self.maps {
            cur = m.forward_jets(&cur)?;
        }
        Ok(cur)
    }

    fn jac_det_jet_of(&self, zjets: &[WJet]) -> KernelResult<WJet> {
        let mut cur = zjets.to_vec();
        let mut det = WJet::one(zjets[0].dim(), zjets[0].degree());
        for m in &self.maps {
            det = det.try_mul(&m.jac_det_jet_of(&cur)?)?;
            cur = m.forward_jets(&cur)?;
        }
        Ok(det)
    }

    fn inverse_map(&self) -> Option<Arc<dyn Biholomorphism>> {
        let mut inv: Vec<Arc<dyn Biholomorphism>> = Vec::with_capacity(self.maps.len());
        for m in self.maps.iter().rev() {
            inv.push(m.inverse_map()?);
        }
        Some(Arc::new(ComposedMap { maps: inv, n: self.n }))
    }
}
