//! Run configuration: a TOML file, optionally overridden from the command line.
//!
//! Complex numbers are written `[re, im]` (a bare number is read as real).
//! Algebra elements are either `{ pauli = [c0, c1, c2, c3] }`, meaning
//! `c0·1 + c1σ¹ + c2σ² + c3σ³`, or `{ monomials = [[m, n, re, im], ...] }`.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64 as C64;
use qrg_core::algebra::{Backend, Element};
use qrg_core::calculus::Calculus;
use qrg_core::geometry::{flip_braid, Connection, Geometry, QuantumMetric};
use qrg_core::linalg::{CMat, ElemMatrix};
use qrg_core::spinor::{build_inner_connection, flip_sigma_s, Signs, SpinorBundle};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ComplexSpec {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexSpec {
    pub fn value(self) -> C64 {
        match self {
            ComplexSpec::Real(x) => C64::new(x, 0.0),
            ComplexSpec::Pair([a, b]) => C64::new(a, b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ElementSpec {
    Pauli {
        pauli: [ComplexSpec; 4],
    },
    Monomials {
        monomials: Vec<(i32, i32, f64, f64)>,
    },
}

pub type MatrixSpec = Vec<Vec<ComplexSpec>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Records,
    Csv,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, ComplexSpec>,
    pub inline: Option<InlineConfig>,
    pub truncation: Option<i32>,
    #[serde(default)]
    pub tolerance: ToleranceConfig,
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    /// Threshold for verifier checks.
    pub check: Option<f64>,
    /// Residual below which a solver start counts as converged.
    pub solve: Option<f64>,
    /// Relative tolerance for gauge clustering.
    pub cluster: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub layout: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, ComplexSpec>,
    pub starts: Option<usize>,
    pub seed: Option<u64>,
    pub max_iter: Option<usize>,
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<String>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgebraKind {
    Matrix2,
    Torus,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineConfig {
    pub algebra: AlgebraKind,
    /// Deformation parameter of the torus.
    pub theta: Option<f64>,
    /// `g_{ij}`; defaults to the identity on the torus and `σ²` on `M_2`.
    pub metric: Option<MatrixSpec>,
    pub lift: Option<MatrixSpec>,
    #[serde(default)]
    pub connection: ConnectionConfig,
    pub spinor: Option<SpinorConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionConfig {
    /// `N^i_{jk}` at index `(i n + j) n + k`; zero when absent.
    pub nabla: Option<Vec<ElementSpec>>,
    /// `σ^{ij}_{kl}` at index `((i n + j) n + k) n + l`; the flip when absent.
    pub braid: Option<Vec<ComplexSpec>>,
    /// Build the inner connection from the braid (inner calculi only).
    #[serde(default)]
    pub inner: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinorConfig {
    pub c: Vec<MatrixSpec>,
    /// `S_i` as matrices of algebra elements.
    pub s: Option<Vec<Vec<Vec<ElementSpec>>>>,
    /// `sigma_s[i][j]`; the flip when absent.
    pub sigma_s: Option<Vec<Vec<MatrixSpec>>>,
    /// Build `S_i` from `sigma_s` through the inner element.
    #[serde(default)]
    pub inner: bool,
    pub j: MatrixSpec,
    pub gamma: Option<MatrixSpec>,
    pub phi: Option<MatrixSpec>,
    pub kappa: Option<ComplexSpec>,
    pub signs: [i8; 3],
    pub mu: Option<MatrixSpec>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(format!("invalid config: {e}")))
    }
}

/// Reads `k=v` where `v` is a real number, `[re, im]` or `re+imi`.
pub fn parse_param(arg: &str) -> Result<(String, C64), ConfigError> {
    let Some((k, v)) = arg.split_once('=') else {
        return err(format!("--param expects key=value, got '{arg}'"));
    };
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() {
        return err(format!("--param has an empty key in '{arg}'"));
    }
    if let Ok(x) = v.parse::<f64>() {
        return Ok((k.to_string(), C64::new(x, 0.0)));
    }
    if let Some(inner) = v.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
        let parts: Vec<_> = inner.split(',').map(str::trim).collect();
        if let [a, b] = parts[..] {
            if let (Ok(a), Ok(b)) = (a.parse(), b.parse()) {
                return Ok((k.to_string(), C64::new(a, b)));
            }
        }
    }
    v.parse::<C64>()
        .map(|z| (k.to_string(), z))
        .map_err(|_| ConfigError(format!("cannot read '{v}' as a number for parameter '{k}'")))
}

fn matrix(spec: &MatrixSpec, n: usize, what: &str) -> Result<CMat, ConfigError> {
    if spec.len() != n || spec.iter().any(|r| r.len() != n) {
        return err(format!("{what} must be {n}×{n}"));
    }
    Ok(CMat::from_fn(n, n, |r, c| spec[r][c].value()))
}

fn element(spec: &ElementSpec, backend: Backend, what: &str) -> Result<Element, ConfigError> {
    match (spec, backend) {
        (ElementSpec::Pauli { pauli }, Backend::Matrix2) => {
            Ok(Element::from_pauli(pauli.map(ComplexSpec::value)))
        }
        (ElementSpec::Monomials { monomials }, Backend::Torus { theta }) => {
            Ok(Element::Torus(qrg_core::algebra::Laurent::from_terms(
                theta,
                monomials
                    .iter()
                    .map(|&(m, n, a, b)| ((m, n), C64::new(a, b))),
            )))
        }
        (ElementSpec::Pauli { .. }, _) => err(format!(
            "{what}: Pauli coefficients need the matrix2 algebra"
        )),
        (ElementSpec::Monomials { .. }, _) => {
            err(format!("{what}: monomials need the torus algebra"))
        }
    }
}

/// Geometry and optional spinor bundle described inline.
pub fn build_inline(cfg: &InlineConfig) -> Result<(Geometry, Option<SpinorBundle>), ConfigError> {
    let calculus = match cfg.algebra {
        AlgebraKind::Matrix2 => {
            if cfg.theta.is_some() {
                return err("theta only applies to the torus");
            }
            Calculus::matrix2()
        }
        AlgebraKind::Torus => {
            let theta = cfg.theta.unwrap_or(1.0);
            if !theta.is_finite() {
                return err("theta must be finite");
            }
            Calculus::torus(theta)
        }
    };
    let backend = calculus.backend;
    let n = calculus.n;
    let (g0, l0) = match cfg.algebra {
        AlgebraKind::Matrix2 => {
            let m = qrg_core::presets::m2_standard_metric();
            (m.g, m.lift)
        }
        AlgebraKind::Torus => {
            let m = qrg_core::presets::torus_metric(1.0, 1.0, 0.0)
                .map_err(|e| ConfigError(e.to_string()))?;
            (m.g, m.lift)
        }
    };
    let g = cfg
        .metric
        .as_ref()
        .map(|m| matrix(m, n, "metric"))
        .transpose()?
        .unwrap_or(g0);
    let lift = cfg
        .lift
        .as_ref()
        .map(|m| matrix(m, n, "lift"))
        .transpose()?
        .unwrap_or(l0);
    let metric = QuantumMetric::new(g, lift).map_err(|e| ConfigError(e.to_string()))?;

    let cc = &cfg.connection;
    let braid = match &cc.braid {
        Some(b) if b.len() == n.pow(4) => b.iter().map(|z| z.value()).collect(),
        Some(b) => return err(format!("braid needs {} entries, got {}", n.pow(4), b.len())),
        None => flip_braid(n),
    };
    let connection = if cc.inner {
        if cc.nabla.is_some() {
            return err("give either connection.nabla or connection.inner, not both");
        }
        Connection::inner(&calculus, braid, None)
    } else {
        let nabla = match &cc.nabla {
            Some(v) if v.len() == n.pow(3) => v
                .iter()
                .enumerate()
                .map(|(k, e)| element(e, backend, &format!("nabla[{k}]")))
                .collect::<Result<Vec<_>, _>>()?,
            Some(v) => return err(format!("nabla needs {} entries, got {}", n.pow(3), v.len())),
            None => vec![Element::zero(backend); n.pow(3)],
        };
        Connection::from_nabla(n, |i, j, k| nabla[(i * n + j) * n + k].clone(), braid)
    }
    .map_err(|e| ConfigError(e.to_string()))?;

    let bundle = cfg
        .spinor
        .as_ref()
        .map(|s| build_spinor(s, &calculus))
        .transpose()?;
    Ok((
        Geometry {
            calculus,
            metric,
            connection,
        },
        bundle,
    ))
}

fn build_spinor(s: &SpinorConfig, calculus: &Calculus) -> Result<SpinorBundle, ConfigError> {
    let n = calculus.n;
    let backend = calculus.backend;
    let ns = s.j.len();
    if ns == 0 {
        return err("spinor.j must be a nonempty square matrix");
    }
    if s.c.len() != n {
        return err(format!("spinor.c needs {n} matrices"));
    }
    let c =
        s.c.iter()
            .enumerate()
            .map(|(i, m)| matrix(m, ns, &format!("c[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
    let sigma_s = match &s.sigma_s {
        Some(rows) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return err(format!("spinor.sigma_s must be {n}×{n} blocks"));
            }
            rows.iter()
                .map(|r| {
                    r.iter()
                        .map(|m| matrix(m, ns, "sigma_s block"))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        None => flip_sigma_s(n, ns),
    };
    let conn = match (&s.s, s.inner) {
        (Some(_), true) => return err("give either spinor.s or spinor.inner, not both"),
        (Some(list), false) => {
            if list.len() != n {
                return err(format!("spinor.s needs {n} matrices"));
            }
            let mut out = Vec::with_capacity(n);
            for (i, rows) in list.iter().enumerate() {
                if rows.len() != ns || rows.iter().any(|r| r.len() != ns) {
                    return err(format!("s[{i}] must be {ns}×{ns}"));
                }
                let mut entries = Vec::with_capacity(ns * ns);
                for r in rows {
                    for e in r {
                        entries.push(element(e, backend, &format!("s[{i}]"))?);
                    }
                }
                out.push(ElemMatrix::from_fn(ns, ns, |r, c| {
                    entries[r * ns + c].clone()
                }));
            }
            out
        }
        (None, true) => build_inner_connection(calculus, &sigma_s, None)
            .map_err(|e| ConfigError(e.to_string()))?,
        (None, false) => vec![ElemMatrix::zeros(backend, ns, ns); n],
    };
    for sign in s.signs {
        if sign != 1 && sign != -1 {
            return err(format!("signs must be ±1, got {sign}"));
        }
    }
    let bundle = SpinorBundle {
        backend,
        c,
        s: conn,
        sigma_s,
        a: None,
        j: matrix(&s.j, ns, "j")?,
        gamma: s
            .gamma
            .as_ref()
            .map(|m| matrix(m, ns, "gamma"))
            .transpose()?,
        phi: s.phi.as_ref().map(|m| matrix(m, ns, "phi")).transpose()?,
        kappa: s.kappa.map_or(C64::new(1.0, 0.0), ComplexSpec::value),
        signs: Signs::new(s.signs[0], s.signs[1], s.signs[2]),
        mu: s
            .mu
            .as_ref()
            .map(|m| matrix(m, ns, "mu"))
            .transpose()?
            .unwrap_or_else(|| CMat::identity(ns, ns)),
    };
    bundle.validate().map_err(|e| ConfigError(e.to_string()))?;
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_accept_three_spellings() {
        assert_eq!(
            parse_param("x=0.5").unwrap(),
            ("x".into(), C64::new(0.5, 0.0))
        );
        assert_eq!(
            parse_param("rho=[0, 0.4]").unwrap(),
            ("rho".into(), C64::new(0.0, 0.4))
        );
        assert_eq!(
            parse_param("rho=0+0.4i").unwrap(),
            ("rho".into(), C64::new(0.0, 0.4))
        );
        assert!(parse_param("x").is_err());
        assert!(parse_param("=1").is_err());
        assert!(parse_param("x=abc").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("preset = \"m2_canonical\"\ncolour = 3\n").is_err());
        assert!(RunConfig::parse("[solver]\nstarts = 3\nstart = 4\n").is_err());
        assert!(RunConfig::parse("[tolerance]\ncheck = 1e-9\n").is_ok());
    }

    #[test]
    fn inline_torus_with_pauli_element_is_rejected() {
        let cfg = RunConfig::parse(
            "[inline]\nalgebra = \"torus\"\n[inline.connection]\nnabla = [{ pauli = [1, 0, 0, 0] }, {monomials = []}, {monomials = []}, {monomials = []}, {monomials = []}, {monomials = []}, {monomials = []}, {monomials = []}]\n",
        )
        .unwrap();
        assert!(build_inline(cfg.inline.as_ref().unwrap()).is_err());
    }
}
