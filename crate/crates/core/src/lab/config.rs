//! Line-based experiment configuration.
//!
//! The format is `key = value` per line, UTF-8, `#` starts a comment. Keys
//! are exactly the [`ExperimentConfig`] fields; complex numbers are written
//! `a+bi`, lists are comma-separated.
//!
//! ```text
//! # boundary sweep on the unit ball
//! domain = ball 2
//! p0     = 0+0i, 1+0i
//! x      = 1+0i, 0+1i
//! delta0 = 0.1
//! ratio  = 0.5
//! count  = 8
//! output = sweep.csv
//! ```

use std::path::{Path, PathBuf};

use num_complex::Complex64;

use super::{ErrorModel, LabError, LabResult, Quantity};
use crate::tol;

#[derive(Clone, Debug, PartialEq)]
pub enum DomainSpec {
    Ball(usize),
    Polydisc(usize),
    Siegel(usize),
    Ellipsoid(Vec<f64>),
}

impl DomainSpec {
    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Ball(n) | DomainSpec::Polydisc(n) | DomainSpec::Siegel(n) => *n,
            DomainSpec::Ellipsoid(p) => p.len(),
        }
    }

    pub fn is_series(&self) -> bool {
        matches!(self, DomainSpec::Ellipsoid(_))
    }

    pub fn parse(text: &str) -> LabResult<Self> {
        let mut parts = text.split_whitespace();
        let kind = parts.next().ok_or_else(|| LabError::Config { what: "empty domain".into() })?;
        let rest = parts.next().ok_or_else(|| LabError::Config {
            what: format!("domain `{kind}` needs a parameter"),
        })?;
        if parts.next().is_some() {
            return Err(LabError::Config { what: format!("trailing tokens in domain `{text}`") });
        }
        let parse_n = |s: &str| -> LabResult<usize> {
            s.parse().map_err(|_| LabError::Config { what: format!("bad dimension `{s}`") })
        };
        match kind {
            "ball" => Ok(DomainSpec::Ball(parse_n(rest)?)),
            "polydisc" => Ok(DomainSpec::Polydisc(parse_n(rest)?)),
            "siegel" => Ok(DomainSpec::Siegel(parse_n(rest)?)),
            "ellipsoid" => {
                let p: Vec<f64> = rest
                    .split(',')
                    .map(|s| {
                        s.trim().parse().map_err(|_| LabError::Config {
                            what: format!("bad ellipsoid exponent `{s}`"),
                        })
                    })
                    .collect::<LabResult<_>>()?;
                Ok(DomainSpec::Ellipsoid(p))
            }
            other => Err(LabError::Config { what: format!("unknown domain kind `{other}`") }),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            DomainSpec::Ball(n) => format!("ball {n}"),
            DomainSpec::Polydisc(n) => format!("polydisc {n}"),
            DomainSpec::Siegel(n) => format!("siegel {n}"),
            DomainSpec::Ellipsoid(p) => format!(
                "ellipsoid {}",
                p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DirectionSpec {
    Explicit(Vec<Complex64>),
    Normal,
    Tangent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truncation {
    Auto,
    Fixed(usize),
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub p0: Vec<Complex64>,
    pub x: DirectionSpec,
    pub delta0: f64,
    pub ratio: f64,
    pub count: usize,
    pub quantities: Vec<Quantity>,
    pub output: Option<PathBuf>,
    pub tail_tol: f64,
    pub raw_tol: Option<f64>,
    pub extrap_tol: Option<f64>,
    pub error_model: Option<ErrorModel>,
    pub truncation: Truncation,
}

impl ExperimentConfig {
    /// Defaults for a domain: the dyadic schedule 0.1 * 2^{-j}, 8 rows, for
    /// exact kernels; a shallower 0.04 * 2^{-j}, 4 rows, for series kernels.
    pub fn defaults(domain: DomainSpec) -> Self {
        let series = domain.is_series();
        let n = domain.dim();
        let mut p0 = vec![Complex64::ZERO; n];
        p0[n - 1] = Complex64::ONE;
        Self {
            domain,
            p0,
            x: DirectionSpec::Normal,
            delta0: if series { 0.04 } else { 0.1 },
            ratio: 0.5,
            count: if series { 4 } else { 8 },
            quantities: Quantity::ALL.to_vec(),
            output: None,
            tail_tol: tol::TAIL_FLAG,
            raw_tol: None,
            extrap_tol: None,
            error_model: None,
            truncation: Truncation::Auto,
        }
    }

    /// The error model for extrapolation. On the real-analytic model
    /// domains every recorded quantity converges linearly in delta, so that
    /// is the default; sqrt(delta) is available for rougher boundaries.
    pub fn effective_error_model(&self) -> ErrorModel {
        self.error_model.unwrap_or(ErrorModel::Delta)
    }

    pub fn schedule(&self) -> Vec<f64> {
        (0..self.count).map(|j| self.delta0 * self.ratio.powi(j as i32)).collect()
    }

    pub fn validate(&self) -> LabResult<()> {
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(LabError::Config {
                what: format!("ratio must lie in (0, 1), got {}", self.ratio),
            });
        }
        if self.count == 0 {
            return Err(LabError::Config { what: "count must be positive".into() });
        }
        if self.delta0 <= 0.0 {
            return Err(LabError::Config { what: "delta0 must be positive".into() });
        }
        if self.p0.len() != self.domain.dim() {
            return Err(LabError::Config {
                what: format!(
                    "p0 has {} coordinates but the domain has dimension {}",
                    self.p0.len(),
                    self.domain.dim()
                ),
            });
        }
        if let DirectionSpec::Explicit(x) = &self.x {
            if x.len() != self.domain.dim() {
                return Err(LabError::Config { what: "x dimension mismatch".into() });
            }
            if x.iter().map(|c| c.norm_sqr()).sum::<f64>() == 0.0 {
                return Err(LabError::Config { what: "x must be nonzero".into() });
            }
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str_contents(&text)
    }

    pub fn from_str_contents(text: &str) -> LabResult<Self> {
        let mut domain: Option<DomainSpec> = None;
        let mut pairs: Vec<(String, String)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(k) => &raw[..k],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| LabError::Config {
                what: format!("line {}: expected `key = value`", lineno + 1),
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key == "domain" {
                domain = Some(DomainSpec::parse(&value)?);
            } else {
                pairs.push((key, value));
            }
        }
        let domain = domain.ok_or_else(|| LabError::Config { what: "missing `domain`".into() })?;
        let mut config = Self::defaults(domain);
        for (key, value) in pairs {
            match key.as_str() {
                "p0" => config.p0 = parse_complex_list(&value)?,
                "x" => {
                    config.x = match value.as_str() {
                        "normal" => DirectionSpec::Normal,
                        "tangent" => DirectionSpec::Tangent,
                        _ => DirectionSpec::Explicit(parse_complex_list(&value)?),
                    }
                }
                "delta0" => config.delta0 = parse_f64(&key, &value)?,
                "ratio" => config.ratio = parse_f64(&key, &value)?,
                "count" => {
                    config.count = value.parse().map_err(|_| LabError::Config {
                        what: format!("bad count `{value}`"),
                    })?
                }
                "quantities" => {
                    config.quantities = value
                        .split(',')
                        .map(|s| {
                            Quantity::parse(s.trim()).ok_or_else(|| LabError::Config {
                                what: format!("unknown quantity `{s}`"),
                            })
                        })
                        .collect::<LabResult<_>>()?
                }
                "output" => config.output = Some(PathBuf::from(value)),
                "tail_tol" => config.tail_tol = parse_f64(&key, &value)?,
                "raw_tol" => config.raw_tol = Some(parse_f64(&key, &value)?),
                "extrap_tol" => config.extrap_tol = Some(parse_f64(&key, &value)?),
                "error_model" => {
                    config.error_model = Some(match value.as_str() {
                        "delta" => ErrorModel::Delta,
                        "sqrt_delta" => ErrorModel::SqrtDelta,
                        other => {
                            return Err(LabError::Config {
                                what: format!("unknown error model `{other}`"),
                            })
                        }
                    })
                }
                "truncation" => {
                    config.truncation = if value == "auto" {
                        Truncation::Auto
                    } else {
                        Truncation::Fixed(value.parse().map_err(|_| LabError::Config {
                            what: format!("bad truncation `{value}`"),
                        })?)
                    }
                }
                other => {
                    return Err(LabError::Config { what: format!("unknown key `{other}`") });
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    /// The `key = value` echo written to metadata sidecars.
    pub fn echo(&self) -> Vec<String> {
        let mut lines = vec![
            format!("domain = {}", self.domain.describe()),
            format!("p0 = {}", format_complex_list(&self.p0)),
            match &self.x {
                DirectionSpec::Normal => "x = normal".to_string(),
                DirectionSpec::Tangent => "x = tangent".to_string(),
                DirectionSpec::Explicit(x) => format!("x = {}", format_complex_list(x)),
            },
            format!("delta0 = {}", self.delta0),
            format!("ratio = {}", self.ratio),
            format!("count = {}", self.count),
            format!(
                "quantities = {}",
                self.quantities.iter().map(|q| q.code()).collect::<Vec<_>>().join(",")
            ),
            format!("tail_tol = {:e}", self.tail_tol),
            format!("error_model = {}", self.effective_error_model().code()),
        ];
        match self.truncation {
            Truncation::Auto => lines.push("truncation = auto".into()),
            Truncation::Fixed(n) => lines.push(format!("truncation = {n}")),
        }
        if let Some(t) = self.raw_tol {
            lines.push(format!("raw_tol = {t:e}"));
        }
        if let Some(t) = self.extrap_tol {
            lines.push(format!("extrap_tol = {t:e}"));
        }
        lines
    }
}

fn parse_f64(key: &str, value: &str) -> LabResult<f64> {
    value.parse().map_err(|_| LabError::Config { what: format!("bad `{key}` value `{value}`") })
}

/// Parse `a+bi` with optional real or imaginary part: `1`, `-0.5i`,
/// `1.5e-3+2i`, `i`, `-i`.
pub fn parse_complex(text: &str) -> LabResult<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(LabError::Config { what: "empty complex literal".into() });
    }
    let bad = || LabError::Config { what: format!("bad complex literal `{text}`") };
    if let Some(body) = s.strip_suffix(['i', 'I']) {
        // split at the last sign that is not an exponent sign and not leading
        let bytes = body.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            let c = bytes[k] as char;
            if (c == '+' || c == '-') && !matches!(bytes[k - 1] as char, 'e' | 'E') {
                split = Some(k);
                break;
            }
        }
        let (re_str, im_str) = match split {
            Some(k) => (&body[..k], &body[k..]),
            None => ("", body),
        };
        let re = if re_str.is_empty() { 0.0 } else { re_str.parse().map_err(|_| bad())? };
        let im = match im_str {
            "" | "+" => 1.0,
            "-" => -1.0,
            other => other.parse().map_err(|_| bad())?,
        };
        Ok(Complex64::new(re, im))
    } else {
        Ok(Complex64::new(s.parse().map_err(|_| bad())?, 0.0))
    }
}

pub fn parse_complex_list(text: &str) -> LabResult<Vec<Complex64>> {
    text.split(',').map(parse_complex).collect()
}

pub fn format_complex(c: Complex64) -> String {
    format!("{}{:+}i", c.re, c.im)
}

pub fn format_complex_list(list: &[Complex64]) -> String {
    list.iter().map(|c| format_complex(*c)).collect::<Vec<_>>().join(", ")
}
