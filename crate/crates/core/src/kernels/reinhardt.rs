//! Truncated orthonormal-monomial kernel for complex ellipsoids.
//!
//! On a bounded complete Reinhardt domain the monomials z^alpha form an
//! orthogonal basis of the Bergman space, so
//!
//! ```text
//! K_N(z, w) = sum_{|alpha| <= N} z^alpha conj(w)^alpha / c_alpha
//! ```
//!
//! approximates the kernel, with `c_alpha` the moments of
//! [`super::ReinhardtSpec`]. Near the boundary the series converges like a
//! geometric series in the degree shells, so the truncation error is
//! estimated from the ratio of the last two shells and surfaced as a
//! non-fatal flag.
//!
//! Both the pointwise sum and the jet sum evaluate per-coordinate power
//! tables rescaled by |z_i|^2 and carry magnitudes in log space, which keeps
//! everything finite for truncation orders in the thousands.

use std::sync::Arc;

use num_complex::Complex64;

use super::moments::{MomentTable, ReinhardtSpec};
use super::{KernelError, KernelProvider, KernelResult};
use crate::wjet::WJet;

pub struct ReinhardtKernel {
    spec: ReinhardtSpec,
    truncation: usize,
    moments: Option<MomentTable>,
}

impl ReinhardtKernel {
    /// Build a provider with the given truncation order. The Beta-form
    /// moments are validated against the quadrature oracle before use.
    pub fn new(spec: ReinhardtSpec, truncation: usize) -> KernelResult<Self> {
        spec.validate_moments(6)?;
        Ok(Self { spec, truncation, moments: None })
    }

    /// Like [`ReinhardtKernel::new`] but consulting a cached moment table
    /// before falling back to the closed form.
    pub fn with_moment_table(
        spec: ReinhardtSpec,
        truncation: usize,
        table: MomentTable,
    ) -> KernelResult<Self> {
        spec.validate_moments(6)?;
        Ok(Self { spec, truncation, moments: Some(table) })
    }

    /// Pick the truncation automatically so that the tail estimate at every
    /// probe point stays at or below `tail_target`.
    pub fn auto(
        spec: ReinhardtSpec,
        probes: &[Vec<Complex64>],
        tail_target: f64,
    ) -> KernelResult<Self> {
        spec.validate_moments(6)?;
        let mut truncation = 64usize;
        loop {
            let candidate = Self { spec: spec.clone(), truncation, moments: None };
            let worst = probes
                .iter()
                .filter_map(|z| candidate.tail_estimate(z))
                .fold(0.0f64, f64::max);
            if worst <= tail_target {
                return Ok(candidate);
            }
            if truncation >= 50_000 {
                return Err(KernelError::InvalidSpec {
                    what: format!(
                        "series does not reach tail {tail_target:.1e} below truncation 50000 (got {worst:.1e})"
                    ),
                });
            }
            truncation = truncation * 3 / 2;
        }
    }

    pub fn spec(&self) -> &ReinhardtSpec {
        &self.spec
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    fn ln_moment(&self, alpha: &[usize]) -> f64 {
        if let Some(table) = &self.moments {
            if let Some(v) = table.get(alpha) {
                return v.ln();
            }
        }
        self.spec.ln_moment(alpha)
    }

    /// K(z, w) summed over degree shells d = 0..=max_degree; also returns
    /// the last two shell magnitudes for the tail heuristic.
    fn sum_pointwise(&self, z: &[Complex64], w: &[Complex64], max_degree: usize) -> (Complex64, f64, f64) {
        let n = self.spec.dim();
        // t_i = z_i conj(w_i) in polar pieces
        let ln_mag: Vec<f64> = (0..n).map(|i| (z[i] * w[i].conj()).norm().ln()).collect();
        let phase: Vec<f64> = (0..n).map(|i| (z[i] * w[i].conj()).arg()).collect();
        let zero: Vec<bool> = (0..n).map(|i| (z[i] * w[i].conj()).norm() == 0.0).collect();
        let mut total = Complex64::ZERO;
        let mut shell_prev = 0.0;
        let mut shell_last = 0.0;
        let mut alpha = vec![0usize; n];
        for d in 0..=max_degree {
            let mut shell = Complex64::ZERO;
            self.shell_pointwise(&mut alpha, 0, d, 0.0, 0.0, &ln_mag, &phase, &zero, &mut shell);
            total += shell;
            shell_prev = shell_last;
            shell_last = shell.norm();
        }
        (total, shell_prev, shell_last)
    }

    #[allow(clippy::too_many_arguments)]
    fn shell_pointwise(
        &self,
        alpha: &mut Vec<usize>,
        pos: usize,
        left: usize,
        ln_acc: f64,
        ph_acc: f64,
        ln_mag: &[f64],
        phase: &[f64],
        zero: &[bool],
        out: &mut Complex64,
    ) {
        let n = alpha.len();
        if pos == n - 1 {
            if zero[pos] && left > 0 {
                return;
            }
            alpha[pos] = left;
            // left = 0 must not touch ln_mag, which is -inf at a zero
            // coordinate
            let scale = if left > 0 { left as f64 * ln_mag[pos] } else { 0.0 };
            let ph = if left > 0 { ph_acc + left as f64 * phase[pos] } else { ph_acc };
            let ln_term = ln_acc + scale - self.ln_moment(alpha);
            *out += Complex64::from_polar(ln_term.exp(), ph);
            alpha[pos] = 0;
            return;
        }
        let top = if zero[pos] { 0 } else { left };
        for a in 0..=top {
            alpha[pos] = a;
            let scale = if a > 0 { a as f64 * ln_mag[pos] } else { 0.0 };
            let ph = if a > 0 { a as f64 * phase[pos] } else { 0.0 };
            self.shell_pointwise(
                alpha,
                pos + 1,
                left - a,
                ln_acc + scale,
                ph_acc + ph,
                ln_mag,
                phase,
                zero,
                out,
            );
            alpha[pos] = 0;
        }
    }

    /// Jet of the truncated kernel plus the last two degree-shell jets.
    fn kernel_jet_with_shells(
        &self,
        zjets: &[WJet],
        wjets: &[WJet],
    ) -> KernelResult<(WJet, WJet, WJet)> {
        let n = self.spec.dim();
        let (dim, degree) = (zjets[0].dim(), zjets[0].degree());
        let top = self.truncation;

        // Per-coordinate power tables of r_i = z_i w_i, rescaled by the
        // constant-term magnitude so coefficients stay representable.
        let mut tables: Vec<Vec<WJet>> = Vec::with_capacity(n);
        let mut ln_scale = vec![0.0f64; n];
        for i in 0..n {
            let r = zjets[i].try_mul(&wjets[i])?;
            let mag = r.constant_term().norm();
            let scaled = if mag > 1e-200 {
                ln_scale[i] = mag.ln();
                r.scale(Complex64::new(1.0 / mag, 0.0))
            } else {
                r
            };
            let mut table = Vec::with_capacity(top + 1);
            table.push(WJet::one(dim, degree));
            let mut dead = false;
            for _ in 1..=top {
                if dead {
                    table.push(WJet::zero(dim, degree));
                    continue;
                }
                let next = table.last().unwrap().try_mul(&scaled)?;
                if next.max_coeff_norm() == 0.0 {
                    dead = true;
                }
                table.push(next);
            }
            tables.push(table);
        }

        let mut alpha = vec![0usize; n];
        let total = self.horner(&tables, &ln_scale, &mut alpha, 0, top, 0.0, false)?;
        let shell_last = self.horner(&tables, &ln_scale, &mut alpha, 0, top, 0.0, true)?;
        let shell_prev = if top >= 1 {
            self.horner(&tables, &ln_scale, &mut alpha, 0, top - 1, 0.0, true)?
        } else {
            WJet::zero(dim, degree)
        };
        Ok((total, shell_prev, shell_last))
    }

    /// Accumulate sum_{|alpha| <= budget} (or exactly = budget when
    /// `exact_degree`) of prod_i tables[i][alpha_i] * weight(alpha).
    #[allow(clippy::too_many_arguments)]
    fn horner(
        &self,
        tables: &[Vec<WJet>],
        ln_scale: &[f64],
        alpha: &mut Vec<usize>,
        pos: usize,
        budget: usize,
        ln_acc: f64,
        exact_degree: bool,
    ) -> KernelResult<WJet> {
        let n = alpha.len();
        let (dim, degree) = (tables[0][0].dim(), tables[0][0].degree());
        if pos == n - 1 {
            let mut acc = WJet::zero(dim, degree);
            let range = if exact_degree { budget..=budget } else { 0..=budget };
            for k in range {
                alpha[pos] = k;
                let w = (ln_acc + k as f64 * ln_scale[pos] - self.ln_moment(alpha)).exp();
                alpha[pos] = 0;
                if w > 0.0 {
                    acc = acc.try_add(&tables[pos][k].scale(Complex64::new(w, 0.0)))?;
                }
            }
            return Ok(acc);
        }
        let mut acc = WJet::zero(dim, degree);
        for k in 0..=budget {
            alpha[pos] = k;
            let inner = self.horner(
                tables,
                ln_scale,
                alpha,
                pos + 1,
                budget - k,
                ln_acc + k as f64 * ln_scale[pos],
                exact_degree,
            )?;
            alpha[pos] = 0;
            if inner.max_coeff_norm() > 0.0 {
                acc = acc.try_add(&tables[pos][k].try_mul(&inner)?)?;
            }
        }
        Ok(acc)
    }

    fn tail_from_shells(total: &WJet, prev: &WJet, last: &WJet) -> f64 {
        let sum_abs = |jet: &WJet| -> f64 {
            jet.iter_derivatives().map(|(_, v)| v.norm()).sum()
        };
        let a_prev = sum_abs(prev);
        let a_last = sum_abs(last);
        if a_last == 0.0 {
            return 0.0;
        }
        if a_prev == 0.0 || a_last >= a_prev {
            return f64::INFINITY;
        }
        let q = a_last / a_prev;
        let amplify = q / (1.0 - q);
        let floor = total.max_coeff_norm() * 1e-6;
        let mut worst = 0.0f64;
        let totals: Vec<Complex64> = total.iter_derivatives().map(|(_, v)| v).collect();
        for (k, (_, tail_coeff)) in last.iter_derivatives().enumerate() {
            let denom = totals[k].norm().max(floor);
            let rel = tail_coeff.norm() * amplify / denom;
            worst = worst.max(rel);
        }
        worst
    }
}

impl KernelProvider for ReinhardtKernel {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn tag(&self) -> String {
        format!("ellipsoid(p={:?}, N={})", self.spec.exponents(), self.truncation)
    }

    fn contains(&self, z: &[Complex64]) -> bool {
        z.iter()
            .zip(self.spec.exponents())
            .map(|(zi, &p)| zi.norm_sqr().powf(p))
            .sum::<f64>()
            < 1.0
    }

    fn evaluate(&self, z: &[Complex64], w: &[Complex64]) -> KernelResult<Complex64> {
        if !self.contains(z) || !self.contains(w) {
            return Err(KernelError::OutsideDomain { tag: self.tag() });
        }
        Ok(self.sum_pointwise(z, w, self.truncation).0)
    }

    fn log_jet_of(&self, zjets: &[WJet], wjets: &[WJet]) -> KernelResult<WJet> {
        let (total, _, _) = self.kernel_jet_with_shells(zjets, wjets)?;
        Ok(total.log()?)
    }

    fn tail_estimate(&self, z: &[Complex64]) -> Option<f64> {
        if !self.contains(z) {
            return Some(f64::INFINITY);
        }
        let degree = crate::geometry::FULL_DEGREE;
        let zjets = WJet::holo_vars(z, degree);
        let wjets = WJet::anti_vars(z, degree);
        let (total, prev, last) = self.kernel_jet_with_shells(&zjets, &wjets).ok()?;
        Some(Self::tail_from_shells(&total, &prev, &last))
    }
}

/// Convenience: an `Arc`'d provider for `{ sum |z_i|^{2 p_i} < 1 }`.
pub fn reinhardt_kernel(spec: ReinhardtSpec, truncation: usize) -> KernelResult<Arc<dyn KernelProvider>> {
    Ok(Arc::new(ReinhardtKernel::new(spec, truncation)?))
}
