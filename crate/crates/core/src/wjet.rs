//! Exact truncated Taylor arithmetic in n holomorphic and n antiholomorphic
//! formal increments ("Wirtinger jets").
//!
//! A [`WJet`] of dimension n and degree D stores one complex coefficient for
//! every pair of multi-indices (alpha, beta) with |alpha| + |beta| <= D. It
//! represents the truncated expansion
//!
//! ```text
//! f(z + h, conj(z) + hbar) = sum_{|alpha|+|beta| <= D}
//!     c_{alpha,beta} h^alpha hbar^beta
//! ```
//!
//! so the mixed Wirtinger derivative d^alpha_z d^beta_zbar f equals
//! `c_{alpha,beta} * alpha! * beta!`. Arithmetic is exact truncation: the
//! coefficients of a product are the convolution of the factors' coefficients
//! with everything above degree D dropped. Division, exp, log and powers are
//! computed by Newton iteration on the jet ring, which doubles the attained
//! degree per step.
//!
//! Jets are immutable values and every operation is a pure function, so they
//! can be evaluated from any number of threads concurrently.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use thiserror::Error;

/// Errors from jet arithmetic.
#[derive(Debug, Error)]
pub enum JetError {
    #[error("jet shape mismatch: ({n1}, degree {d1}) vs ({n2}, degree {d2})")]
    ShapeMismatch { n1: usize, d1: usize, n2: usize, d2: usize },
    #[error("multi-index order {order} exceeds jet degree {degree}")]
    OrderTooHigh { order: usize, degree: usize },
    #[error("multi-index dimension {got} does not match jet dimension {dim}")]
    IndexDimension { got: usize, dim: usize },
    #[error("singular jet: constant term too small ({modulus:.3e})")]
    SingularJet { modulus: f64 },
    #[error("singular jet matrix: no usable pivot at elimination step {step}")]
    SingularMatrix { step: usize },
}

pub type JetResult<T> = Result<T, JetError>;

/// A pair of multi-indices: holomorphic orders `alpha`, antiholomorphic
/// orders `beta`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IndexPair {
    pub alpha: Vec<u8>,
    pub beta: Vec<u8>,
}

impl IndexPair {
    pub fn new(alpha: &[usize], beta: &[usize]) -> Self {
        Self {
            alpha: alpha.iter().map(|&a| a as u8).collect(),
            beta: beta.iter().map(|&b| b as u8).collect(),
        }
    }

    /// Pure holomorphic unit index e_i (0-based) in dimension n.
    pub fn holo(i: usize, n: usize) -> Self {
        let mut alpha = vec![0u8; n];
        alpha[i] = 1;
        Self { alpha, beta: vec![0u8; n] }
    }

    /// Pure antiholomorphic unit index e_i (0-based) in dimension n.
    pub fn anti(i: usize, n: usize) -> Self {
        let mut beta = vec![0u8; n];
        beta[i] = 1;
        Self { alpha: vec![0u8; n], beta }
    }

    /// The mixed second-order index (e_a, e_b) driving metric entries.
    pub fn mixed(a: usize, b: usize, n: usize) -> Self {
        let mut alpha = vec![0u8; n];
        let mut beta = vec![0u8; n];
        alpha[a] += 1;
        beta[b] += 1;
        Self { alpha, beta }
    }

    pub fn order(&self) -> usize {
        self.alpha.iter().map(|&a| a as usize).sum::<usize>()
            + self.beta.iter().map(|&b| b as usize).sum::<usize>()
    }

    fn flat(&self) -> Vec<u8> {
        let mut e = self.alpha.clone();
        e.extend_from_slice(&self.beta);
        e
    }

    /// alpha! * beta! as an f64 (exact for the small orders stored in jets).
    pub fn factorial(&self) -> f64 {
        fn fact(k: u8) -> f64 {
            (1..=k as u64).product::<u64>() as f64
        }
        self.alpha.iter().chain(self.beta.iter()).map(|&k| fact(k)).product()
    }
}

impl fmt::Debug for IndexPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}|{:?})", self.alpha, self.beta)
    }
}

/// Coefficient layout shared by every jet of a given (dimension, degree):
/// the graded list of exponent tuples of length 2n (alpha then beta), the
/// reverse lookup, the multiplication table and the conjugation permutation.
struct JetShape {
    n: usize,
    degree: usize,
    /// Flattened exponent tuples, `len()` = entries * 2n.
    exponents: Vec<u8>,
    index_of: HashMap<Vec<u8>, u32>,
    /// For output slot k, `mul_pairs[mul_offsets[k]..mul_offsets[k+1]]` lists
    /// the (i, j) input pairs whose exponents sum to slot k.
    mul_offsets: Vec<u32>,
    mul_pairs: Vec<(u32, u32)>,
    /// Slot of the exponent tuple with alpha and beta swapped.
    conj_perm: Vec<u32>,
}

impl JetShape {
    fn entries(&self) -> usize {
        self.index_of.len()
    }

    fn exponent(&self, k: usize) -> &[u8] {
        let w = 2 * self.n;
        &self.exponents[k * w..(k + 1) * w]
    }

    fn build(n: usize, degree: usize) -> Self {
        assert!(n >= 1, "jet dimension must be at least 1");
        let w = 2 * n;
        // Graded enumeration: by total degree, then lexicographic.
        let mut tuples: Vec<Vec<u8>> = Vec::new();
        let mut current = vec![0u8; w];
        for d in 0..=degree {
            enumerate_degree(&mut current, 0, d, &mut tuples);
        }
        let mut exponents = Vec::with_capacity(tuples.len() * w);
        let mut index_of = HashMap::with_capacity(tuples.len());
        for (k, t) in tuples.iter().enumerate() {
            exponents.extend_from_slice(t);
            index_of.insert(t.clone(), k as u32);
        }
        let m = tuples.len();
        let mut buckets: Vec<Vec<(u32, u32)>> = vec![Vec::new(); m];
        for i in 0..m {
            let di: usize = tuples[i].iter().map(|&e| e as usize).sum();
            for j in 0..m {
                let dj: usize = tuples[j].iter().map(|&e| e as usize).sum();
                if di + dj > degree {
                    continue;
                }
                let sum: Vec<u8> = tuples[i].iter().zip(&tuples[j]).map(|(a, b)| a + b).collect();
                let k = index_of[&sum] as usize;
                buckets[k].push((i as u32, j as u32));
            }
        }
        let mut mul_offsets = Vec::with_capacity(m + 1);
        let mut mul_pairs = Vec::new();
        mul_offsets.push(0u32);
        for bucket in &buckets {
            mul_pairs.extend_from_slice(bucket);
            mul_offsets.push(mul_pairs.len() as u32);
        }
        let conj_perm = tuples
            .iter()
            .map(|t| {
                let mut swapped = t[n..].to_vec();
                swapped.extend_from_slice(&t[..n]);
                index_of[&swapped]
            })
            .collect();
        Self { n, degree, exponents, index_of, mul_offsets, mul_pairs, conj_perm }
    }
}

fn enumerate_degree(current: &mut Vec<u8>, pos: usize, remaining: usize, out: &mut Vec<Vec<u8>>) {
    if pos == current.len() - 1 {
        current[pos] = remaining as u8;
        out.push(current.clone());
        current[pos] = 0;
        return;
    }
    for v in 0..=remaining {
        current[pos] = v as u8;
        enumerate_degree(current, pos + 1, remaining - v, out);
        current[pos] = 0;
    }
}

fn shape(n: usize, degree: usize) -> Arc<JetShape> {
    static REGISTRY: OnceLock<Mutex<HashMap<(usize, usize), Arc<JetShape>>>> = OnceLock::new();
    let registry = REGISTRY.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = registry.lock().unwrap();
    guard
        .entry((n, degree))
        .or_insert_with(|| Arc::new(JetShape::build(n, degree)))
        .clone()
}

/// Truncated Taylor table of a function of (z, conj z) at a base point.
#[derive(Clone)]
pub struct WJet {
    shape: Arc<JetShape>,
    coeffs: Vec<Complex64>,
}

impl WJet {
    /// Constant jet with value `c`.
    pub fn constant(c: Complex64, n: usize, degree: usize) -> Self {
        let shape = shape(n, degree);
        let mut coeffs = vec![Complex64::ZERO; shape.entries()];
        coeffs[0] = c;
        Self { shape, coeffs }
    }

    pub fn zero(n: usize, degree: usize) -> Self {
        Self::constant(Complex64::ZERO, n, degree)
    }

    pub fn one(n: usize, degree: usize) -> Self {
        Self::constant(Complex64::ONE, n, degree)
    }

    /// Jet of the i-th holomorphic coordinate, `base + h_i` (i is 0-based).
    pub fn holo_var(i: usize, base: Complex64, n: usize, degree: usize) -> Self {
        let mut jet = Self::constant(base, n, degree);
        if degree >= 1 {
            let idx = jet.shape.index_of[&IndexPair::holo(i, n).flat()] as usize;
            jet.coeffs[idx] = Complex64::ONE;
        }
        jet
    }

    /// Jet of the conjugate of the i-th coordinate, `base + hbar_i`. `base`
    /// should already be the conjugated value.
    pub fn anti_var(i: usize, base: Complex64, n: usize, degree: usize) -> Self {
        let mut jet = Self::constant(base, n, degree);
        if degree >= 1 {
            let idx = jet.shape.index_of[&IndexPair::anti(i, n).flat()] as usize;
            jet.coeffs[idx] = Complex64::ONE;
        }
        jet
    }

    /// Holomorphic coordinate jets (z_1 + h_1, ..., z_n + h_n) at `z`.
    pub fn holo_vars(z: &[Complex64], degree: usize) -> Vec<Self> {
        (0..z.len()).map(|i| Self::holo_var(i, z[i], z.len(), degree)).collect()
    }

    /// Antiholomorphic coordinate jets (conj z_1 + hbar_1, ...) at `z`.
    pub fn anti_vars(z: &[Complex64], degree: usize) -> Vec<Self> {
        (0..z.len()).map(|i| Self::anti_var(i, z[i].conj(), z.len(), degree)).collect()
    }

    pub fn dim(&self) -> usize {
        self.shape.n
    }

    pub fn degree(&self) -> usize {
        self.shape.degree
    }

    pub fn constant_term(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Raw coefficient at (alpha, beta), without factorial normalization.
    pub fn coeff(&self, idx: &IndexPair) -> JetResult<Complex64> {
        self.slot(idx).map(|k| self.coeffs[k])
    }

    /// The mixed partial derivative d^alpha_z d^beta_zbar at the base point:
    /// coefficient times alpha! beta!.
    pub fn extract(&self, idx: &IndexPair) -> JetResult<Complex64> {
        Ok(self.coeffs[self.slot(idx)?] * idx.factorial())
    }

    /// Shorthand for the metric-driving extraction d^2/dz_a dzbar_b.
    pub fn extract_mixed(&self, a: usize, b: usize) -> JetResult<Complex64> {
        self.extract(&IndexPair::mixed(a, b, self.dim()))
    }

    fn slot(&self, idx: &IndexPair) -> JetResult<usize> {
        if idx.alpha.len() != self.shape.n || idx.beta.len() != self.shape.n {
            return Err(JetError::IndexDimension {
                got: idx.alpha.len().max(idx.beta.len()),
                dim: self.shape.n,
            });
        }
        let order = idx.order();
        if order > self.shape.degree {
            return Err(JetError::OrderTooHigh { order, degree: self.shape.degree });
        }
        Ok(self.shape.index_of[&idx.flat()] as usize)
    }

    fn check_shape(&self, rhs: &Self) -> JetResult<()> {
        if Arc::ptr_eq(&self.shape, &rhs.shape) {
            return Ok(());
        }
        if self.shape.n == rhs.shape.n && self.shape.degree == rhs.shape.degree {
            return Ok(());
        }
        Err(JetError::ShapeMismatch {
            n1: self.shape.n,
            d1: self.shape.degree,
            n2: rhs.shape.n,
            d2: rhs.shape.degree,
        })
    }

    pub fn try_add(&self, rhs: &Self) -> JetResult<Self> {
        self.check_shape(rhs)?;
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self { shape: self.shape.clone(), coeffs })
    }

    pub fn try_sub(&self, rhs: &Self) -> JetResult<Self> {
        self.check_shape(rhs)?;
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        Ok(Self { shape: self.shape.clone(), coeffs })
    }

    pub fn try_mul(&self, rhs: &Self) -> JetResult<Self> {
        self.check_shape(rhs)?;
        let m = self.shape.entries();
        let mut coeffs = vec![Complex64::ZERO; m];
        for k in 0..m {
            let lo = self.shape.mul_offsets[k] as usize;
            let hi = self.shape.mul_offsets[k + 1] as usize;
            let mut acc = Complex64::ZERO;
            for &(i, j) in &self.shape.mul_pairs[lo..hi] {
                acc += self.coeffs[i as usize] * rhs.coeffs[j as usize];
            }
            coeffs[k] = acc;
        }
        Ok(Self { shape: self.shape.clone(), coeffs })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c * s).collect();
        Self { shape: self.shape.clone(), coeffs }
    }

    pub fn add_scalar(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// Jet of conj(f): coefficients conjugated with alpha and beta swapped.
    pub fn conj(&self) -> Self {
        let mut coeffs = vec![Complex64::ZERO; self.coeffs.len()];
        for (k, &p) in self.shape.conj_perm.iter().enumerate() {
            coeffs[p as usize] = self.coeffs[k].conj();
        }
        Self { shape: self.shape.clone(), coeffs }
    }

    /// Multiplicative inverse by Newton iteration, x <- x (2 - a x).
    pub fn inv(&self) -> JetResult<Self> {
        let a0 = self.constant_term();
        if a0.norm() < 1e-300 {
            return Err(JetError::SingularJet { modulus: a0.norm() });
        }
        let mut x = Self::constant(a0.inv(), self.shape.n, self.shape.degree);
        let two = Complex64::new(2.0, 0.0);
        for _ in 0..newton_steps(self.shape.degree) {
            let ax = self.try_mul(&x)?;
            x = x.try_mul(&ax.scale(-Complex64::ONE).add_scalar(two))?;
        }
        Ok(x)
    }

    pub fn try_div(&self, rhs: &Self) -> JetResult<Self> {
        self.try_mul(&rhs.inv()?)
    }

    /// exp(f). The nilpotent part is summed by its (finitely terminating)
    /// power series; the constant term factors out exactly.
    pub fn exp(&self) -> Self {
        let a0 = self.constant_term();
        let mut u = self.clone();
        u.coeffs[0] = Complex64::ZERO;
        // Horner on exp(u) = 1 + u(1 + u/2 (1 + u/3 (...)))
        let mut acc = Self::one(self.shape.n, self.shape.degree);
        for k in (1..=self.shape.degree).rev() {
            let scaled = u.scale(Complex64::new(1.0 / k as f64, 0.0));
            acc = acc.try_mul(&scaled).expect("same shape").add_scalar(Complex64::ONE);
        }
        acc.scale(a0.exp())
    }

    /// log(f) by Newton iteration on exp: y <- y - 1 + a exp(-y).
    pub fn log(&self) -> JetResult<Self> {
        let a0 = self.constant_term();
        if a0.norm() < 1e-300 {
            return Err(JetError::SingularJet { modulus: a0.norm() });
        }
        let mut y = Self::constant(a0.ln(), self.shape.n, self.shape.degree);
        for _ in 0..newton_steps(self.shape.degree) {
            let e = y.scale(-Complex64::ONE).exp();
            y = y.try_add(&self.try_mul(&e)?)?.add_scalar(-Complex64::ONE);
        }
        Ok(y)
    }

    /// Real power a^s = exp(s log a). Needs a nonzero constant term.
    pub fn powf(&self, s: f64) -> JetResult<Self> {
        Ok(self.log()?.scale(Complex64::new(s, 0.0)).exp())
    }

    /// Integer power by repeated squaring; negative exponents invert first.
    pub fn powi(&self, k: i32) -> JetResult<Self> {
        if k < 0 {
            return self.inv()?.powi(-k);
        }
        let mut result = Self::one(self.shape.n, self.shape.degree);
        let mut base = self.clone();
        let mut e = k as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.try_mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.try_mul(&base)?;
            }
        }
        Ok(result)
    }

    /// Jet of the mixed partial d^alpha_z d^beta_zbar f, of degree
    /// D - |alpha| - |beta|. Extracting at (gamma, delta) from the result
    /// agrees with extracting at (gamma + alpha, delta + beta) here.
    pub fn derivative(&self, idx: &IndexPair) -> JetResult<Self> {
        if idx.alpha.len() != self.shape.n || idx.beta.len() != self.shape.n {
            return Err(JetError::IndexDimension {
                got: idx.alpha.len().max(idx.beta.len()),
                dim: self.shape.n,
            });
        }
        let order = idx.order();
        if order > self.shape.degree {
            return Err(JetError::OrderTooHigh { order, degree: self.shape.degree });
        }
        let target = shape(self.shape.n, self.shape.degree - order);
        let offset = idx.flat();
        let mut coeffs = vec![Complex64::ZERO; target.entries()];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let mut src = target.exponent(k).to_vec();
            let mut factor = 1.0f64;
            for (s, &o) in src.iter_mut().zip(&offset) {
                // falling-factorial ratio (gamma+alpha)! / gamma!
                for extra in 1..=o {
                    factor *= (*s as u64 + extra as u64) as f64;
                }
                *s += o;
            }
            let slot = self.shape.index_of[&src] as usize;
            *c = self.coeffs[slot] * factor;
        }
        Ok(Self { shape: target, coeffs })
    }

    /// Copy truncated to a lower degree.
    pub fn truncated(&self, degree: usize) -> Self {
        if degree >= self.shape.degree {
            return self.clone();
        }
        let target = shape(self.shape.n, degree);
        let mut coeffs = vec![Complex64::ZERO; target.entries()];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let slot = self.shape.index_of[target.exponent(k)] as usize;
            *c = self.coeffs[slot];
        }
        Self { shape: target, coeffs }
    }

    /// Largest violation of coeff(beta, alpha) = conj(coeff(alpha, beta)),
    /// relative to the largest coefficient. Zero for jets of real-valued
    /// functions such as log K(z, z).
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
        self.shape
            .conj_perm
            .iter()
            .enumerate()
            .map(|(k, &p)| (self.coeffs[k] - self.coeffs[p as usize].conj()).norm())
            .fold(0.0, f64::max)
            / scale
    }

    /// Iterate (index pair, derivative value) over all stored orders.
    pub fn iter_derivatives(&self) -> impl Iterator<Item = (IndexPair, Complex64)> + '_ {
        (0..self.shape.entries()).map(move |k| {
            let e = self.shape.exponent(k);
            let idx = IndexPair { alpha: e[..self.shape.n].to_vec(), beta: e[self.shape.n..].to_vec() };
            let f = idx.factorial();
            (idx, self.coeffs[k] * f)
        })
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient difference against another jet of the same shape.
    pub fn max_diff(&self, rhs: &Self) -> f64 {
        self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

fn newton_steps(degree: usize) -> u32 {
    // attained degree after k steps is 2^k - 1
    let mut steps = 0;
    let mut reach = 0usize;
    while reach < degree {
        reach = 2 * reach + 1;
        steps += 1;
    }
    steps
}

impl fmt::Debug for WJet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WJet(n={}, D={})", self.shape.n, self.shape.degree)?;
        let mut shown = 0;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.norm() > 0.0 && shown < 12 {
                write!(f, " {:?}:{:.4}{:+.4}i", self.shape.exponent(k), c.re, c.im)?;
                shown += 1;
            }
        }
        Ok(())
    }
}

impl std::ops::Add for &WJet {
    type Output = WJet;
    fn add(self, rhs: &WJet) -> WJet {
        self.try_add(rhs).expect("jet shape mismatch")
    }
}

impl std::ops::Sub for &WJet {
    type Output = WJet;
    fn sub(self, rhs: &WJet) -> WJet {
        self.try_sub(rhs).expect("jet shape mismatch")
    }
}

impl std::ops::Mul for &WJet {
    type Output = WJet;
    fn mul(self, rhs: &WJet) -> WJet {
        self.try_mul(rhs).expect("jet shape mismatch")
    }
}

impl std::ops::Neg for &WJet {
    type Output = WJet;
    fn neg(self) -> WJet {
        self.scale(-Complex64::ONE)
    }
}

/// Determinant of a square matrix of jets, by Gaussian elimination with
/// pivoting on the constant-term modulus. Pivots must be units of the jet
/// ring, i.e. have nonzero constant term; for the Hessian matrices this
/// library builds they are positive.
pub fn jet_det(matrix: &[Vec<WJet>]) -> JetResult<WJet> {
    let n = matrix.len();
    assert!(n >= 1 && matrix.iter().all(|row| row.len() == n), "matrix must be square");
    let mut work: Vec<Vec<WJet>> = matrix.to_vec();
    let (dim, degree) = (work[0][0].dim(), work[0][0].degree());
    let mut det = WJet::one(dim, degree);
    let mut sign = 1.0;
    for k in 0..n {
        let pivot_row = (k..n)
            .max_by(|&a, &b| {
                let pa = work[a][k].constant_term().norm();
                let pb = work[b][k].constant_term().norm();
                pa.partial_cmp(&pb).unwrap()
            })
            .unwrap();
        if work[pivot_row][k].constant_term().norm() < 1e-300 {
            return Err(JetError::SingularMatrix { step: k });
        }
        if pivot_row != k {
            work.swap(pivot_row, k);
            sign = -sign;
        }
        let pivot = work[k][k].clone();
        let pivot_inv = pivot.inv()?;
        det = det.try_mul(&pivot)?;
        for i in (k + 1)..n {
            let factor = work[i][k].try_mul(&pivot_inv)?;
            for j in (k + 1)..n {
                let delta = factor.try_mul(&work[k][j])?;
                work[i][j] = work[i][j].try_sub(&delta)?;
            }
        }
    }
    Ok(det.scale(Complex64::new(sign, 0.0)))
}
