//! Monomial moments of complex ellipsoids.
//!
//! For the Reinhardt domain `{ sum_i |z_i|^{2 p_i} < 1 }` the squared L^2
//! norm of the monomial z^alpha has the closed Beta form
//!
//! ```text
//! c_alpha = pi^n (prod_i 1/p_i) (prod_i Gamma((alpha_i+1)/p_i))
//!           / Gamma(1 + sum_i (alpha_i+1)/p_i)
//! ```
//!
//! obtained by reducing the volume integral to a Dirichlet integral over the
//! unit simplex. The closed form is validated against an independent
//! double-exponential quadrature of the same Dirichlet integral before a
//! kernel series is allowed to use it.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use statrs::function::gamma::ln_gamma;

use super::{KernelError, KernelResult};
use crate::tol;

/// Exponent data of the domain `{ sum |z_i|^{2 p_i} < 1 }`.
#[derive(Clone, Debug)]
pub struct ReinhardtSpec {
    exponents: Vec<f64>,
}

impl ReinhardtSpec {
    pub fn new(exponents: Vec<f64>) -> KernelResult<Self> {
        if exponents.is_empty() {
            return Err(KernelError::InvalidSpec { what: "empty exponent list".into() });
        }
        if exponents.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(KernelError::InvalidSpec {
                what: format!("exponents must be positive reals, got {exponents:?}"),
            });
        }
        Ok(Self { exponents })
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    /// log of the moment c_alpha via the closed Beta form.
    pub fn ln_moment(&self, alpha: &[usize]) -> f64 {
        assert_eq!(alpha.len(), self.dim());
        let n = self.dim() as f64;
        let mut acc = n * PI.ln();
        let mut total_s = 0.0;
        for (&a, &p) in alpha.iter().zip(&self.exponents) {
            let s = (a as f64 + 1.0) / p;
            acc += ln_gamma(s) - p.ln();
            total_s += s;
        }
        acc - ln_gamma(1.0 + total_s)
    }

    /// The moment c_alpha = ||z^alpha||^2 over the domain.
    pub fn moment(&self, alpha: &[usize]) -> f64 {
        self.ln_moment(alpha).exp()
    }

    /// Independent quadrature oracle: the Dirichlet integral over the unit
    /// simplex evaluated by nested double-exponential quadrature.
    pub fn moment_quadrature(&self, alpha: &[usize], points_per_level: usize) -> f64 {
        assert_eq!(alpha.len(), self.dim());
        let s: Vec<f64> =
            alpha.iter().zip(&self.exponents).map(|(&a, &p)| (a as f64 + 1.0) / p).collect();
        let rule = TanhSinhRule::new(points_per_level);
        let mut front = (self.dim() as f64) * PI.ln();
        for &p in &self.exponents {
            front -= p.ln();
        }
        front.exp() * dirichlet(&s, 1.0, &rule)
    }

    /// Check the Beta form against quadrature for all |alpha| <= max_order.
    pub fn validate_moments(&self, max_order: usize) -> KernelResult<()> {
        let mut alpha = vec![0usize; self.dim()];
        self.validate_rec(&mut alpha, 0, max_order)
    }

    fn validate_rec(&self, alpha: &mut Vec<usize>, pos: usize, left: usize) -> KernelResult<()> {
        if pos == self.dim() {
            let closed = self.moment(alpha);
            let quad = self.moment_quadrature(alpha, 160);
            let rel = (closed - quad).abs() / quad.abs();
            if rel > tol::MOMENT_QUADRATURE {
                return Err(KernelError::MomentValidation {
                    what: format!(
                        "alpha = {alpha:?}: closed form {closed:.16e} vs quadrature {quad:.16e} (rel {rel:.3e})"
                    ),
                });
            }
            return Ok(());
        }
        for a in 0..=left {
            alpha[pos] = a;
            self.validate_rec(alpha, pos + 1, left - a)?;
            alpha[pos] = 0;
        }
        Ok(())
    }
}

/// Nested evaluation of int_{simplex, sum u < budget} prod u_i^{s_i - 1} du.
fn dirichlet(s: &[f64], budget: f64, rule: &TanhSinhRule) -> f64 {
    if s.is_empty() {
        return 1.0;
    }
    // u = budget * x, x in (0,1); the complement is supplied separately to
    // keep the remaining budget accurate near x = 1
    rule.integrate_01(|x, complement| {
        let u = budget * x;
        u.powf(s[0] - 1.0) * dirichlet(&s[1..], budget * complement, rule)
    }) * budget
}

/// Double-exponential (tanh-sinh) quadrature on (0, 1); handles the
/// integrable endpoint singularities u^{s-1} with s as small as 1/2. Nodes
/// carry both x and 1-x in cancellation-free sigmoid form.
pub struct TanhSinhRule {
    nodes: Vec<(f64, f64, f64)>,
}

impl TanhSinhRule {
    pub fn new(points: usize) -> Self {
        let half = (points / 2).max(10) as i64;
        let h = 4.2 / half as f64;
        let mut nodes = Vec::with_capacity(2 * half as usize + 1);
        for k in -half..=half {
            let t = k as f64 * h;
            let u = std::f64::consts::FRAC_PI_2 * t.sinh();
            // x = (1 + tanh u)/2 written as a sigmoid in 2u
            let x = 1.0 / (1.0 + (-2.0 * u).exp());
            let complement = 1.0 / (1.0 + (2.0 * u).exp());
            let w = h * std::f64::consts::FRAC_PI_2 * t.cosh() / u.cosh().powi(2) * 0.5;
            if x > 0.0 && complement > 0.0 && w.is_finite() && w > 1e-300 {
                nodes.push((x, complement, w));
            }
        }
        Self { nodes }
    }

    pub fn integrate_01<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().map(|&(x, complement, w)| w * f(x, complement)).sum()
    }
}

/// A cached moment table, exportable as CSV rows
/// `alpha_1,...,alpha_n,c_alpha` with 17 significant digits.
#[derive(Clone, Debug, Default)]
pub struct MomentTable {
    entries: BTreeMap<Vec<usize>, f64>,
}

impl MomentTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, alpha: Vec<usize>, value: f64) {
        self.entries.insert(alpha, value);
    }

    pub fn get(&self, alpha: &[usize]) -> Option<f64> {
        self.entries.get(alpha).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<usize>, f64)> {
        self.entries.iter().map(|(k, &v)| (k, v))
    }

    /// Tabulate all moments of a spec up to a total order.
    pub fn tabulate(spec: &ReinhardtSpec, max_order: usize) -> Self {
        let mut table = Self::new();
        let mut alpha = vec![0usize; spec.dim()];
        fn rec(
            spec: &ReinhardtSpec,
            alpha: &mut Vec<usize>,
            pos: usize,
            left: usize,
            out: &mut MomentTable,
        ) {
            if pos == alpha.len() {
                out.insert(alpha.clone(), spec.moment(alpha));
                return;
            }
            for a in 0..=left {
                alpha[pos] = a;
                rec(spec, alpha, pos + 1, left - a, out);
                alpha[pos] = 0;
            }
        }
        rec(spec, &mut alpha, 0, max_order, &mut table);
        table
    }

    pub fn write_csv(&self, path: &Path) -> KernelResult<()> {
        let file = std::fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        for (alpha, value) in self.iter() {
            for a in alpha {
                write!(w, "{a},")?;
            }
            writeln!(w, "{value:.16e}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path, dim: usize) -> KernelResult<Self> {
        let file = std::fs::File::open(path)?;
        let reader = std::io::BufReader::new(file);
        let mut table = Self::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').collect();
            if fields.len() != dim + 1 {
                return Err(KernelError::Parse {
                    what: format!("line {}: expected {} fields", lineno + 1, dim + 1),
                });
            }
            let alpha: Vec<usize> = fields[..dim]
                .iter()
                .map(|f| {
                    f.trim().parse::<usize>().map_err(|e| KernelError::Parse {
                        what: format!("line {}: {e}", lineno + 1),
                    })
                })
                .collect::<KernelResult<_>>()?;
            let value = fields[dim].trim().parse::<f64>().map_err(|e| KernelError::Parse {
                what: format!("line {}: {e}", lineno + 1),
            })?;
            if !(value > 0.0) {
                return Err(KernelError::MomentValidation {
                    what: format!("line {}: moment must be positive, got {value}", lineno + 1),
                });
            }
            table.insert(alpha, value);
        }
        Ok(table)
    }
}
