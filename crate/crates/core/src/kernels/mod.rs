//! Bergman kernel providers.
//!
//! A [`KernelProvider`] exposes the kernel K(z, w) of a bounded domain (off
//! the diagonal it is holomorphic in z and antiholomorphic in w) together
//! with the jet of log K at interior points. The jet is produced directly by
//! arithmetic on coordinate jets, so the same code path yields kernels of
//! pushed-forward domains: see [`transform_kernel`].
//!
//! Closed forms are implemented for the unit ball, the unit polydisc and the
//! Siegel half-space `{2 Re z_n + |'z|^2 < 0}`; bounded complete Reinhardt
//! domains (complex ellipsoids) get a truncated orthonormal-monomial series
//! in [`reinhardt`].

pub mod maps;
pub mod moments;
pub mod reinhardt;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::wjet::{JetError, WJet};

pub use maps::{AffineMap, Biholomorphism, ComposedMap, DiagonalMap, MobiusBall, ShearMap};
pub use moments::{MomentTable, ReinhardtSpec};
pub use reinhardt::ReinhardtKernel;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("point outside the domain of provider `{tag}`")]
    OutsideDomain { tag: String },
    #[error("dimension mismatch: provider expects {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("singular map: {what}")]
    SingularMap { what: String },
    #[error("invalid Reinhardt spec: {what}")]
    InvalidSpec { what: String },
    #[error("moment table validation failed: {what}")]
    MomentValidation { what: String },
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {what}")]
    Parse { what: String },
}

pub type KernelResult<T> = Result<T, KernelError>;

/// A Bergman kernel together with its log-kernel jets.
pub trait KernelProvider: Send + Sync {
    fn dim(&self) -> usize;

    fn tag(&self) -> String;

    fn contains(&self, z: &[Complex64]) -> bool;

    /// Off-diagonal kernel value K(z, w), antiholomorphic in the second slot.
    fn evaluate(&self, z: &[Complex64], w: &[Complex64]) -> KernelResult<Complex64>;

    /// Jet of log K given coordinate jets: `zjets[i]` is the jet of the i-th
    /// holomorphic-slot coordinate, `wjets[i]` the jet of the i-th
    /// conjugated-slot coordinate. On the diagonal these are the coordinate
    /// variables and their conjugates.
    fn log_jet_of(&self, zjets: &[WJet], wjets: &[WJet]) -> KernelResult<WJet>;

    /// Jet of log K(z, z) at an interior base point.
    fn log_jet(&self, z: &[Complex64], degree: usize) -> KernelResult<WJet> {
        if z.len() != self.dim() {
            return Err(KernelError::Dimension { expected: self.dim(), got: z.len() });
        }
        if !self.contains(z) {
            return Err(KernelError::OutsideDomain { tag: self.tag() });
        }
        self.log_jet_of(&WJet::holo_vars(z, degree), &WJet::anti_vars(z, degree))
    }

    /// Relative truncation-tail estimate at `z` for series-backed providers;
    /// `None` for exact kernels.
    fn tail_estimate(&self, z: &[Complex64]) -> Option<f64> {
        let _ = z;
        None
    }
}

fn hermitian_pairing(z: &[Complex64], w: &[Complex64]) -> Complex64 {
    z.iter().zip(w).map(|(zi, wi)| zi * wi.conj()).sum()
}

/// Unit ball: K(z, w) = (n!/pi^n)(1 - <z, w>)^{-(n+1)}.
pub struct BallKernel {
    n: usize,
    norm_const: f64,
}

impl BallKernel {
    pub fn new(n: usize) -> Self {
        Self { n, norm_const: factorial(n) / PI.powi(n as i32) }
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n as u64).product::<u64>() as f64
}

impl KernelProvider for BallKernel {
    fn dim(&self) -> usize {
        self.n
    }

    fn tag(&self) -> String {
        format!("ball({})", self.n)
    }

    fn contains(&self, z: &[Complex64]) -> bool {
        z.iter().map(|zi| zi.norm_sqr()).sum::<f64>() < 1.0
    }

    fn evaluate(&self, z: &[Complex64], w: &[Complex64]) -> KernelResult<Complex64> {
        if !self.contains(z) || !self.contains(w) {
            return Err(KernelError::OutsideDomain { tag: self.tag() });
        }
        let s = hermitian_pairing(z, w);
        Ok(self.norm_const * (Complex64::ONE - s).powi(-(self.n as i32 + 1)))
    }

    fn log_jet_of(&self, zjets: &[WJet], wjets: &[WJet]) -> KernelResult<WJet> {
        let (n, degree) = (zjets[0].dim(), zjets[0].degree());
        let mut s = WJet::zero(n, degree);
        for (zj, wj) in zjets.iter().zip(wjets) {
            s = s.try_add(&zj.try_mul(wj)?)?;
        }
        let one_minus = WJet::one(n, degree).try_sub(&s)?;
        let log_base = one_minus.log()?;
        Ok(log_base
            .scale(Complex64::new(-(self.n as f64 + 1.0), 0.0))
            .add_scalar(Complex64::new(self.norm_const.ln(), 0.0)))
    }
}

/// Unit polydisc: product of one-dimensional disc kernels.
pub struct PolydiscKernel {
    n: usize,
}

impl PolydiscKernel {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl KernelProvider for PolydiscKernel {
    fn dim(&self) -> usize {
        self.n
    }

    fn tag(&self) -> String {
        format!("polydisc({})", self.n)
    }

    fn contains(&self, z: &[Complex64]) -> bool {
        z.iter().all(|zi| zi.norm_sqr() < 1.0)
    }

    fn evaluate(&self, z: &[Complex64], w: &[Complex64]) -> KernelResult<Complex64> {
        if !self.contains(z) || !self.contains(w) {
            return Err(KernelError::OutsideDomain { tag: self.tag() });
        }
        let mut k = Complex64::ONE;
        for (zi, wi) in z.iter().zip(w) {
            k *= (Complex64::ONE - zi * wi.conj()).powi(-2) / PI;
        }
        Ok(k)
    }

    fn log_jet_of(&self, zjets: &[WJet], wjets: &[WJet]) -> KernelResult<WJet> {
        let (n, degree) = (zjets[0].dim(), zjets[0].degree());
        let mut acc = WJet::constant(
            Complex64::new(-(self.n as f64) * PI.ln(), 0.0),
            n,
            degree,
        );
        for (zj, wj) in zjets.iter().zip(wjets) {
            let one_minus = WJet::one(n, degree).try_sub(&zj.try_mul(wj)?)?;
            acc = acc.try_sub(&one_minus.log()?.scale(Complex64::new(2.0, 0.0)))?;
        }
        Ok(acc)
    }
}

/// Siegel half-space `{2 Re z_n + |'z|^2 < 0}`:
/// K(z, w) = (n!/pi^n) (-(z_n + conj w_n + <'z, 'w>))^{-(n+1)}.
///
/// This closed form is the hot path; the Cayley pushforward of the ball
/// kernel reproduces it and serves as a test oracle.
pub struct SiegelKernel {
    n: usize,
    norm_const: f64,
}

impl SiegelKernel {
    pub fn new(n: usize) -> Self {
        Self { n, norm_const: factorial(n) / PI.powi(n as i32) }
    }

    /// The interior base point b* = ('0, -1).
    pub fn base_point(n: usize) -> Vec<Complex64> {
        let mut b = vec![Complex64::ZERO; n];
        b[n - 1] = -Complex64::ONE;
        b
    }
}

impl KernelProvider for SiegelKernel {
    fn dim(&self) -> usize {
        self.n
    }

    fn tag(&self) -> String {
        format!("siegel({})", self.n)
    }

    fn contains(&self, z: &[Complex64]) -> bool {
        let tangential: f64 = z[..self.n - 1].iter().map(|zi| zi.norm_sqr()).sum();
        2.0 * z[self.n - 1].re + tangential < 0.0
    }

    fn evaluate(&self, z: &[Complex64], w: &[Complex64]) -> KernelResult<Complex64> {
        if !self.contains(z) || !self.contains(w) {
            return Err(KernelError::OutsideDomain { tag: self.tag() });
        }
        let s = hermitian_pairing(&z[..self.n - 1], &w[..self.n - 1]);
        let q = -(z[self.n - 1] + w[self.n - 1].conj() + s);
        Ok(self.norm_const * q.powi(-(self.n as i32 + 1)))
    }

    fn log_jet_of(&self, zjets: &[WJet], wjets: &[WJet]) -> KernelResult<WJet> {
        let mut q = zjets[self.n - 1].try_add(&wjets[self.n - 1])?;
        for i in 0..self.n - 1 {
            q = q.try_add(&zjets[i].try_mul(&wjets[i])?)?;
        }
        let q = q.scale(-Complex64::ONE);
        Ok(q
            .log()?
            .scale(Complex64::new(-(self.n as f64 + 1.0), 0.0))
            .add_scalar(Complex64::new(self.norm_const.ln(), 0.0)))
    }
}

/// Kernel of a domain pulled back through a biholomorphism `map` onto the
/// domain of `inner`:
/// K(z, w) = det JF(z) K_inner(F z, F w) conj(det JF(w)).
pub struct TransformedKernel {
    inner: Arc<dyn KernelProvider>,
    map: Arc<dyn Biholomorphism>,
}

impl TransformedKernel {
    pub fn new(inner: Arc<dyn KernelProvider>, map: Arc<dyn Biholomorphism>) -> Self {
        assert_eq!(inner.dim(), map.dim(), "map and kernel dimensions must agree");
        Self { inner, map }
    }
}

/// Pull the kernel of `inner`'s domain back through `map`, producing a
/// provider on the preimage domain.
pub fn transform_kernel(
    inner: Arc<dyn KernelProvider>,
    map: Arc<dyn Biholomorphism>,
) -> Arc<dyn KernelProvider> {
    Arc::new(TransformedKernel::new(inner, map))
}

impl KernelProvider for TransformedKernel {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn tag(&self) -> String {
        format!("pushforward({})", self.inner.tag())
    }

    fn contains(&self, z: &[Complex64]) -> bool {
        match self.map.forward(z) {
            Ok(fz) => self.inner.contains(&fz),
            Err(_) => false,
        }
    }

    fn evaluate(&self, z: &[Complex64], w: &[Complex64]) -> KernelResult<Complex64> {
        let fz = self.map.forward(z)?;
        let fw = self.map.forward(w)?;
        let det_z = self.map.jac_det(z)?;
        let det_w = self.map.jac_det(w)?;
        Ok(det_z * self.inner.evaluate(&fz, &fw)? * det_w.conj())
    }

    fn log_jet_of(&self, zjets: &[WJet], wjets: &[WJet]) -> KernelResult<WJet> {
        let fz = self.map.forward_jets(zjets)?;
        // wjets carry the conjugated slot; conjugate into the holomorphic
        // side, push forward, conjugate back.
        let w_holo: Vec<WJet> = wjets.iter().map(WJet::conj).collect();
        let fw = self.map.forward_jets(&w_holo)?;
        let fw_bar: Vec<WJet> = fw.iter().map(WJet::conj).collect();
        let base = self.inner.log_jet_of(&fz, &fw_bar)?;
        let log_det_z = self.map.jac_det_jet_of(zjets)?.log()?;
        let log_det_w = self.map.jac_det_jet_of(&w_holo)?.log()?.conj();
        Ok(base.try_add(&log_det_z)?.try_add(&log_det_w)?)
    }

    fn tail_estimate(&self, z: &[Complex64]) -> Option<f64> {
        let fz = self.map.forward(z).ok()?;
        self.inner.tail_estimate(&fz)
    }
}

pub fn ball_kernel(n: usize) -> Arc<dyn KernelProvider> {
    Arc::new(BallKernel::new(n))
}

pub fn polydisc_kernel(n: usize) -> Arc<dyn KernelProvider> {
    Arc::new(PolydiscKernel::new(n))
}

pub fn siegel_kernel(n: usize) -> Arc<dyn KernelProvider> {
    Arc::new(SiegelKernel::new(n))
}

#[cfg(test)]
mod tests;
