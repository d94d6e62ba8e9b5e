//! Named configurations: every geometry and spinor bundle studied for the
//! noncommutative torus and for `M_2(C)` with its standard and alternate
//! metrics, each with a table of closed-form expectations.
//!
//! Parameters are complex numbers keyed by name; names follow the usual
//! variable names of the construction (`h12`, `mu`, `s`, `t`, `x`, ...).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::algebra::{c, re, Backend, Element, C64, I};
use crate::calculus::Calculus;
use crate::geometry::{
    connection_report, curvature, flip_braid, max_norm, ricci, Connection, Geometry, GeometryError,
    QuantumMetric,
};
use crate::linalg::{identity, mat2, max_abs, pauli_d, rmat2, CMat, ElemMatrix};
use crate::spinor::{
    adjoint_defects, axiom_residuals, build_inner_connection, clifford_check, curvature_action,
    dirac_apply, dirac_matrix, flip_sigma_s, gauge_transform, gram_matrix, hilbert_checks, j_type1,
    j_type2, lichnerowicz_residual, operator_matrix, spinor_laplacian, Signs, SpinorBundle,
    SpinorError,
};
use crate::verify::{verify, Realisation, VerificationReport};

pub type Params = BTreeMap<String, C64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PresetError {
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("preset '{preset}' has no parameter '{param}'")]
    UnknownParam { preset: String, param: String },
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Spinor(#[from] SpinorError),
    #[error("preset '{preset}' disagrees with its expectation '{name}': value {value:e}, tolerance {tol:e}")]
    ExpectationFailed {
        preset: String,
        name: String,
        value: f64,
        tol: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: C64,
    /// Real parameters reject a nonzero imaginary part.
    pub real: bool,
}

const fn rp(name: &'static str, default: f64) -> ParamSpec {
    ParamSpec {
        name,
        default: C64::new(default, 0.0),
        real: true,
    }
}

const fn cp(name: &'static str, re: f64, im: f64) -> ParamSpec {
    ParamSpec {
        name,
        default: C64::new(re, im),
        real: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static [ParamSpec],
}

const THETA: ParamSpec = rp("theta", 1.0);

pub const REGISTRY: &[PresetInfo] = &[
    PresetInfo {
        name: "torus_euclidean_wqlc",
        summary: "torus, quantum symmetric metric, torsion and cotorsion free connection (h21, h23 solved)",
        params: &[THETA, rp("c1", 1.0), rp("c2", 1.0), rp("c3", 0.0), rp("h11", 0.3), rp("h12", -0.2), rp("h13", 0.5), rp("h22", 0.1)],
    },
    PresetInfo {
        name: "torus_spectral",
        summary: "torus Dirac operator C^i = σ^i, flat connections, S_i = d_i",
        params: &[THETA, rp("eps", 1.0), rp("d1", 0.0), rp("d2", 0.0)],
    },
    PresetInfo {
        name: "torus_extended",
        summary: "torus with the two-parameter connection with torsion and diagonal S_i",
        params: &[THETA, rp("eps", 1.0), rp("h12", 0.4), rp("h21", -0.7), rp("d1", 0.0), rp("d2", 0.0)],
    },
    PresetInfo {
        name: "torus_general_spinor",
        summary: "torus spinor connection solving only the reality condition",
        params: &[THETA, rp("eps", 1.0), cp("a1", 0.2, 0.1), cp("a2", -0.3, 0.4), cp("b1", 0.5, -0.2), cp("b2", 0.1, 0.3)],
    },
    PresetInfo {
        name: "torus_mass",
        summary: "torus Dirac operator with mass term i m ψσ³ (ε = 1) or i m ψ (ε = -1)",
        params: &[THETA, rp("eps", 1.0), rp("m", 0.5)],
    },
    PresetInfo {
        name: "m2_standard_qlc",
        summary: "M2 standard metric with the one-parameter quantum Levi-Civita connection",
        params: &[rp("mu", 0.5)],
    },
    PresetInfo {
        name: "m2_thm42",
        summary: "M2 type II Clifford action with σ_S = ζ[C¹,C²] and type (2) J",
        params: &[
            cp("c0", 0.5, 0.0), cp("c1", -0.5, 0.0), cp("c2", 0.5, 0.0), cp("c3", 0.5, 0.0), cp("c4", 0.5, 0.0),
            cp("zeta11", 1.0, 0.0), cp("zeta12", 0.0, 0.0), cp("zeta21", 0.0, 0.0), cp("zeta22", -1.0, 0.0),
            cp("z", 0.0, 0.0), rp("eps_prime", 1.0), rp("mu", 0.0),
        ],
    },
    PresetInfo { name: "m2_ex41a", summary: "ζ = σ³, real type (1) J, nilpotent C^i (ε′ = 1)", params: &[rp("x", 0.3)] },
    PresetInfo { name: "m2_ex41b", summary: "ζ = σ³, real type (1) J, anticommuting C^i (ε′ = -1)", params: &[rp("x", 0.3)] },
    PresetInfo {
        name: "m2_ex42a",
        summary: "ζ = σ¹, two-parameter family",
        params: &[rp("x", 0.8), rp("y", -0.2), rp("eps_prime", 1.0), rp("root_sign", 1.0)],
    },
    PresetInfo {
        name: "m2_ex42b",
        summary: "ζ = σ¹, one-parameter family with |x| ≥ 1 (ε′ = -1)",
        params: &[rp("x", 1.3), rp("root_sign", 1.0), rp("inner_sign", 1.0)],
    },
    PresetInfo {
        name: "m2_ex42c",
        summary: "ζ = σ¹, one-parameter family with anticommuting C^i at x = ±1/2",
        params: &[rp("x", 0.35), rp("eps_prime", 1.0), rp("root_sign", 1.0)],
    },
    PresetInfo {
        name: "m2_exJ2",
        summary: "ζ = σ³, type (2) J, anticommuting real C^i",
        params: &[rp("x", 0.2), rp("y", 0.7), rp("eps_prime", 1.0), rp("branch", 1.0)],
    },
    PresetInfo { name: "m2_canonical", summary: "natural M2 spectral triple, J = σ³", params: &[rp("eps_prime", -1.0)] },
    PresetInfo {
        name: "m2_canonical_rotated",
        summary: "natural M2 spectral triple in the rotated spinor basis",
        params: &[rp("eps_prime", -1.0)],
    },
    PresetInfo {
        name: "m2_alt_qlc",
        summary: "M2 alternate (Lorentzian) metric with the ρ-family connection; ρ must be imaginary",
        params: &[cp("rho", 0.0, 0.4)],
    },
    PresetInfo {
        name: "m2_alt_cliffab",
        summary: "alternate metric, C^i solving the full Clifford relations (no compatible J, σ_S)",
        params: &[cp("a", 0.3, 0.0), cp("b", 0.8, 0.0), rp("sign", 1.0), cp("rho", 0.0, 0.0)],
    },
    PresetInfo {
        name: "m2_alt_family",
        summary: "alternate metric, four-parameter almost spectral triple",
        params: &[rp("s", 1.0), rp("t", 1.0), rp("x", 0.3), rp("y", 0.0), rp("gamma_sign", 1.0)],
    },
    PresetInfo {
        name: "m2_alt_hermitian_circle",
        summary: "alternate metric family on s² + t² = 2 with x = y = 0",
        params: &[rp("s", 1.0)],
    },
];

pub fn info(name: &str) -> Option<&'static PresetInfo> {
    REGISTRY.iter().find(|p| p.name == name)
}

/// Whether an expectation asks for a small or a large value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Below,
    Above,
}

#[derive(Debug, Clone)]
pub struct Expectation {
    pub name: &'static str,
    /// Closed form being compared against.
    pub statement: String,
    pub bound: Bound,
    pub tol: f64,
    /// Returns the defect (for `Below`) or the witness size (for `Above`).
    pub check: fn(&Preset) -> f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationOutcome {
    pub name: &'static str,
    pub statement: String,
    pub value: f64,
    pub tol: f64,
    pub bound: Bound,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub params: Params,
    pub geometry: Geometry,
    pub bundle: Option<SpinorBundle>,
    /// Default torus truncation window for Hilbert-level checks.
    pub window: i32,
    pub realisation: Option<Realisation>,
    pub expectations: Vec<Expectation>,
}

impl Preset {
    pub fn p(&self, name: &str) -> C64 {
        self.params[name]
    }

    pub fn r(&self, name: &str) -> f64 {
        self.params[name].re
    }

    pub fn bundle(&self) -> &SpinorBundle {
        self.bundle
            .as_ref()
            .expect("preset carries a spinor bundle")
    }

    pub fn verify(&self, tol: f64) -> Option<Result<VerificationReport, SpinorError>> {
        self.bundle
            .as_ref()
            .map(|b| verify(&self.geometry, b, self.window, tol))
    }

    pub fn evaluate_expectations(&self) -> Vec<ExpectationOutcome> {
        self.expectations
            .iter()
            .map(|e| {
                let value = (e.check)(self);
                let pass = match e.bound {
                    Bound::Below => value <= e.tol,
                    Bound::Above => value > e.tol,
                };
                ExpectationOutcome {
                    name: e.name,
                    statement: e.statement.clone(),
                    value,
                    tol: e.tol,
                    bound: e.bound,
                    pass,
                }
            })
            .collect()
    }

    /// Errors on the first expectation that does not hold.
    pub fn check_expectations(&self) -> Result<(), PresetError> {
        match self.evaluate_expectations().into_iter().find(|o| !o.pass) {
            None => Ok(()),
            Some(o) => Err(PresetError::ExpectationFailed {
                preset: self.name.to_string(),
                name: o.name.to_string(),
                value: o.value,
                tol: o.tol,
            }),
        }
    }
}

fn resolve(info: &PresetInfo, given: &Params) -> Result<Params, PresetError> {
    for k in given.keys() {
        if !info.params.iter().any(|p| p.name == k) {
            return Err(PresetError::UnknownParam {
                preset: info.name.to_string(),
                param: k.clone(),
            });
        }
    }
    let mut out = Params::new();
    for spec in info.params {
        let v = given.get(spec.name).copied().unwrap_or(spec.default);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(PresetError::Domain(format!("{} must be finite", spec.name)));
        }
        if spec.real && v.im != 0.0 {
            return Err(PresetError::Domain(format!("{} must be real", spec.name)));
        }
        out.insert(spec.name.to_string(), v);
    }
    Ok(out)
}

fn sign_param(p: &Params, name: &str) -> Result<i8, PresetError> {
    match p[name].re {
        v if v == 1.0 => Ok(1),
        v if v == -1.0 => Ok(-1),
        v => Err(PresetError::Domain(format!("{name} must be ±1, got {v}"))),
    }
}

fn nonzero(p: &Params, name: &str) -> Result<C64, PresetError> {
    let v = p[name];
    if v.norm() < 1e-12 {
        return Err(PresetError::Domain(format!("{name} must be nonzero")));
    }
    Ok(v)
}

/// Instantiates a preset with the given parameters (missing ones take defaults).
pub fn preset(name: &str, params: &Params) -> Result<Preset, PresetError> {
    let info = info(name).ok_or_else(|| PresetError::UnknownPreset(name.to_string()))?;
    let p = resolve(info, params)?;
    match name {
        "torus_euclidean_wqlc" => torus_euclidean_wqlc(p),
        "torus_spectral" => torus_spectral(p),
        "torus_extended" => torus_extended(p),
        "torus_general_spinor" => torus_general_spinor(p),
        "torus_mass" => torus_mass(p),
        "m2_standard_qlc" => m2_standard_qlc(p),
        "m2_thm42" => m2_thm42(p),
        "m2_ex41a" => m2_ex41(p, true),
        "m2_ex41b" => m2_ex41(p, false),
        "m2_ex42a" => m2_ex42a(p),
        "m2_ex42b" => m2_ex42b(p),
        "m2_ex42c" => m2_ex42c(p),
        "m2_exJ2" => m2_exj2(p),
        "m2_canonical" => m2_canonical(p, false),
        "m2_canonical_rotated" => m2_canonical(p, true),
        "m2_alt_qlc" => m2_alt_qlc(p),
        "m2_alt_cliffab" => m2_alt_cliffab(p),
        "m2_alt_family" => m2_alt_family(p),
        "m2_alt_hermitian_circle" => m2_alt_hermitian_circle(p),
        _ => Err(PresetError::UnknownPreset(name.to_string())),
    }
}

/// Preset with default parameters.
pub fn preset_default(name: &str) -> Result<Preset, PresetError> {
    preset(name, &Params::new())
}

/// Convenience constructor for parameter maps from real values.
pub fn params(pairs: &[(&str, f64)]) -> Params {
    pairs.iter().map(|(k, v)| (k.to_string(), re(*v))).collect()
}

// ---------------------------------------------------------------------------
// shared checks

fn exp(
    name: &'static str,
    statement: impl Into<String>,
    tol: f64,
    check: fn(&Preset) -> f64,
) -> Expectation {
    Expectation {
        name,
        statement: statement.into(),
        bound: Bound::Below,
        tol,
        check,
    }
}

fn exp_above(
    name: &'static str,
    statement: impl Into<String>,
    tol: f64,
    check: fn(&Preset) -> f64,
) -> Expectation {
    Expectation {
        name,
        statement: statement.into(),
        bound: Bound::Above,
        tol,
        check,
    }
}

fn local_axioms(p: &Preset) -> f64 {
    axiom_residuals(p.bundle(), &p.geometry.connection, &p.geometry.calculus).max()
}

fn residual_of(p: &Preset, names: &[&str]) -> f64 {
    axiom_residuals(p.bundle(), &p.geometry.connection, &p.geometry.calculus).max_of(names)
}

fn torsion_free(p: &Preset) -> f64 {
    let g = &p.geometry;
    connection_report(&g.connection, &g.metric, &g.calculus, 1e-12).torsion
}

fn qlc_defect(p: &Preset) -> f64 {
    let g = &p.geometry;
    let r = connection_report(&g.connection, &g.metric, &g.calculus, 1e-12);
    r.torsion.max(r.metric_compatibility)
}

fn wqlc_defect(p: &Preset) -> f64 {
    let g = &p.geometry;
    let r = connection_report(&g.connection, &g.metric, &g.calculus, 1e-12);
    r.torsion.max(r.cotorsion)
}

fn clifford_full(p: &Preset) -> f64 {
    clifford_check(p.bundle(), &p.geometry.metric, &p.geometry.calculus)
        .map_or(f64::INFINITY, |c| c.residual)
}

fn clifford_relaxed(p: &Preset) -> f64 {
    clifford_check(p.bundle(), &p.geometry.metric, &p.geometry.calculus)
        .map_or(f64::INFINITY, |c| c.relaxed_residual)
}

fn lichnerowicz(p: &Preset) -> f64 {
    let g = &p.geometry;
    lichnerowicz_residual(
        p.bundle(),
        &g.connection,
        &g.metric,
        &g.calculus,
        p.window.min(2),
    )
    .map_or(f64::INFINITY, |l| l.residual)
}

fn antihermitian(p: &Preset) -> f64 {
    hilbert_checks(p.bundle(), p.window).map_or(f64::INFINITY, |h| h.dirac.antihermitian)
}

fn neither_hermitian(p: &Preset) -> f64 {
    hilbert_checks(p.bundle(), p.window)
        .map_or(0.0, |h| h.dirac.hermitian.min(h.dirac.antihermitian))
}

fn j_isometry(p: &Preset) -> f64 {
    hilbert_checks(p.bundle(), p.window).map_or(f64::INFINITY, |h| h.j_isometry_sampled)
}

fn gamma_hermitian(p: &Preset) -> f64 {
    hilbert_checks(p.bundle(), p.window)
        .ok()
        .and_then(|h| h.gamma_hermitian)
        .unwrap_or(f64::INFINITY)
}

fn curvature_vs(p: &Preset, expected: impl Fn(usize, usize) -> Element) -> f64 {
    let g = &p.geometry;
    match curvature(&g.connection, &g.calculus) {
        Ok(rho) => {
            let mut worst: f64 = 0.0;
            for (i, row) in rho.iter().enumerate() {
                for (j, e) in row.iter().enumerate() {
                    worst = worst.max((e - &expected(i, j)).norm());
                }
            }
            worst
        }
        Err(_) => f64::INFINITY,
    }
}

fn ricci_vs(p: &Preset, expected: impl Fn(usize, usize) -> Element, scalar: Element) -> f64 {
    let g = &p.geometry;
    let Ok(rho) = curvature(&g.connection, &g.calculus) else {
        return f64::INFINITY;
    };
    let (ric, s) = ricci(&rho, &g.metric);
    let mut worst = (&s - &scalar).norm();
    for (b, row) in ric.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            worst = worst.max((e - &expected(b, j)).norm());
        }
    }
    worst
}

/// Largest difference between two spinor operators on basis spinors.
pub fn operator_defect(
    b: &SpinorBundle,
    window: i32,
    f: impl Fn(&[Element]) -> Vec<Element>,
    g: impl Fn(&[Element]) -> Vec<Element>,
) -> f64 {
    let ns = b.ns();
    let mut worst: f64 = 0.0;
    for a in Element::basis(b.backend, window) {
        for alpha in 0..ns {
            let mut psi = vec![Element::zero(b.backend); ns];
            psi[alpha] = a.clone();
            for (x, y) in f(&psi).iter().zip(g(&psi)) {
                worst = worst.max((x - &y).norm());
            }
        }
    }
    worst
}

/// `Σ_α f(ψ_α) m[α][β]` with complex `m`.
fn contract_c(psi: &[Element], m: &CMat, f: impl Fn(&Element) -> Element) -> Vec<Element> {
    let fp: Vec<Element> = psi.iter().map(f).collect();
    (0..m.ncols())
        .map(|beta| {
            let mut acc = Element::zero(psi[0].backend());
            for (alpha, p) in fp.iter().enumerate() {
                acc += &p.scale(m[(alpha, beta)]);
            }
            acc
        })
        .collect()
}

fn add_spinors(a: Vec<Element>, b: Vec<Element>) -> Vec<Element> {
    a.iter().zip(&b).map(|(x, y)| x + y).collect()
}

fn sigma(k: usize) -> Element {
    Element::sigma(k)
}

fn elem_matrix_defect(a: &ElemMatrix, b: &ElemMatrix) -> f64 {
    (a - b).norm()
}

fn cmat_elem(m: &CMat) -> ElemMatrix {
    ElemMatrix::from_cmat(Backend::Matrix2, m)
}

// ---------------------------------------------------------------------------
// torus

/// Torus metric `g = [[c1, c3], [c3, c2]]` with the standard lift.
pub fn torus_metric(c1: f64, c2: f64, c3: f64) -> Result<QuantumMetric, PresetError> {
    Ok(QuantumMetric::new(
        rmat2(c1, c3, c3, c2),
        rmat2(0.0, 0.5, -0.5, 0.0),
    )?)
}

/// `N^i_{jk}` for the torsion-free family `∇s^i = h^i_1 s¹s¹ + h^i_2 s²s² + h^i_3 (s¹s² + s²s¹)`.
pub fn torus_torsion_free(theta: f64, h: [[f64; 3]; 2]) -> Result<Connection, GeometryError> {
    let b = Backend::Torus { theta };
    Connection::from_nabla(
        2,
        |i, j, k| {
            let v = match (j, k) {
                (0, 0) => h[i][0],
                (1, 1) => h[i][1],
                _ => h[i][2],
            };
            Element::scalar(b, re(v))
        },
        flip_braid(2),
    )
}

/// Torus bundle with `C^i = σ^i`, flip `σ_S`, constant `S_i`, `J = σ¹` (ε = 1) or `σ²` (ε = -1), `γ = σ³`.
pub fn torus_bundle(theta: f64, eps: i8, s: [CMat; 2]) -> SpinorBundle {
    let backend = Backend::Torus { theta };
    SpinorBundle {
        backend,
        c: vec![pauli_d(1), pauli_d(2)],
        s: s.iter()
            .map(|m| ElemMatrix::from_cmat(backend, m))
            .collect(),
        sigma_s: flip_sigma_s(2, 2),
        a: None,
        j: if eps == 1 { pauli_d(1) } else { pauli_d(2) },
        gamma: Some(pauli_d(3)),
        phi: Some(identity(2)),
        kappa: re(1.0),
        signs: Signs::new(eps, eps, -1),
        mu: identity(2),
    }
}

fn torus_euclidean_wqlc(p: Params) -> Result<Preset, PresetError> {
    let (c1, c2, c3) = (p["c1"].re, p["c2"].re, p["c3"].re);
    if c2 == 0.0 || (c1 * c2 - c3 * c3).abs() < 1e-12 {
        return Err(PresetError::Domain("need c2 ≠ 0 and c1 c2 ≠ c3²".into()));
    }
    let calculus = Calculus::torus(p["theta"].re);
    let metric = torus_metric(c1, c2, c3)?;
    let h = wqlc_h(&p);
    let connection = torus_torsion_free(p["theta"].re, h)?;
    let expectations = vec![
        exp("wqlc", "torsion and cotorsion vanish", 1e-12, wqlc_defect),
        exp("curvature", "ρ = S [[c3, c2], [-c1, -c3]]", 1e-12, |p| {
            let (c1, c2, c3) = (p.r("c1"), p.r("c2"), p.r("c3"));
            let s = wqlc_scalar(p);
            let m = [[c3, c2], [-c1, -c3]];
            let b = p.geometry.calculus.backend;
            curvature_vs(p, |i, j| Element::scalar(b, re(s * m[i][j])))
        }),
        exp("ricci", "Ricci = S g / 2", 1e-12, |p| {
            let s = wqlc_scalar(p);
            let b = p.geometry.calculus.backend;
            let g = p.geometry.metric.g.clone();
            ricci_vs(
                p,
                |i, j| Element::scalar(b, g[(i, j)] * (s / 2.0)),
                Element::scalar(b, re(s)),
            )
        }),
    ];
    Ok(Preset {
        name: "torus_euclidean_wqlc",
        params: p,
        geometry: Geometry {
            calculus,
            metric,
            connection,
        },
        bundle: None,
        window: 2,
        realisation: None,
        expectations,
    })
}

fn wqlc_h(p: &Params) -> [[f64; 3]; 2] {
    let (c1, c2, c3) = (p["c1"].re, p["c2"].re, p["c3"].re);
    let (h11, h12, h13, h22) = (p["h11"].re, p["h12"].re, p["h13"].re, p["h22"].re);
    let h23 = (c1 * h12 + c3 * (h22 - h13)) / c2;
    let h21 = (c1 * h13 + c3 * (h23 - h11)) / c2;
    [[h11, h12, h13], [h21, h22, h23]]
}

fn wqlc_scalar(p: &Preset) -> f64 {
    let h = wqlc_h(&p.params);
    let (c1, c2, c3) = (p.r("c1"), p.r("c2"), p.r("c3"));
    if c3 != 0.0 {
        (h[0][1] * h[1][0] - h[0][2] * h[1][2]) / c3
    } else {
        h[1][2] * (h[1][2] - h[0][0]) / c1 + h[0][2] * (h[0][2] - h[1][1]) / c2
    }
}

fn torus_spectral(p: Params) -> Result<Preset, PresetError> {
    let eps = sign_param(&p, "eps")?;
    let theta = p["theta"].re;
    let (d1, d2) = (p["d1"].re, p["d2"].re);
    let calculus = Calculus::torus(theta);
    let metric = torus_metric(1.0, 1.0, 0.0)?;
    let connection = Connection::zero(calculus.backend, 2);
    let bundle = torus_bundle(theta, eps, [identity(2) * re(d1), identity(2) * re(d2)]);
    let flat = d1 == 0.0 && d2 == 0.0;
    let mut expectations = vec![
        exp("local_axioms", "all local axioms hold", 1e-12, local_axioms),
        exp(
            "qlc",
            "∇ = 0 is a quantum Levi-Civita connection",
            1e-12,
            qlc_defect,
        ),
        exp(
            "clifford",
            "C^iC^j + C^jC^i = 2g^{ij} with φ = id, κ = 1",
            1e-12,
            clifford_full,
        ),
        exp("curvature_action", "R_S = 0", 1e-12, |p| {
            let g = &p.geometry;
            curvature_action(p.bundle(), &g.connection, &g.metric, &g.calculus)
                .map_or(f64::INFINITY, |r| r.norm())
        }),
        exp("lichnerowicz", "D̸² = □ componentwise", 1e-12, lichnerowicz),
        exp(
            "j_isometry",
            "𝒥 is an antilinear isometry",
            1e-12,
            j_isometry,
        ),
        exp(
            "gamma_hermitian",
            "γ = σ³ is hermitian",
            1e-12,
            gamma_hermitian,
        ),
    ];
    if flat {
        expectations.push(exp(
            "antihermitian",
            "D̸ is antihermitian",
            1e-12,
            antihermitian,
        ));
    } else {
        expectations.push(exp_above(
            "not_antihermitian",
            "D̸ is not antihermitian when d ≠ 0",
            1e-3,
            antihermitian,
        ));
    }
    Ok(Preset {
        name: "torus_spectral",
        params: p,
        geometry: Geometry {
            calculus,
            metric,
            connection,
        },
        bundle: Some(bundle),
        window: 2,
        realisation: Some(if flat {
            Realisation::Full
        } else {
            Realisation::Geometric
        }),
        expectations,
    })
}

fn torus_extended(p: Params) -> Result<Preset, PresetError> {
    let eps = sign_param(&p, "eps")?;
    let theta = p["theta"].re;
    let (h12, h21) = (p["h12"].re, p["h21"].re);
    let (d1, d2) = (p["d1"].re, p["d2"].re);
    let calculus = Calculus::torus(theta);
    let backend = calculus.backend;
    let metric = torus_metric(1.0, 1.0, 0.0)?;
    let connection = Connection::from_nabla(
        2,
        |i, j, k| {
            let v = match (i, j, k) {
                (0, 1, 1) => h12,
                (0, 0, 1) => -h21,
                (1, 0, 0) => h21,
                (1, 1, 0) => -h12,
                _ => 0.0,
            };
            Element::scalar(backend, re(v))
        },
        flip_braid(2),
    )?;
    let s1 = identity(2) * re(d1) - pauli_d(3) * c(0.0, h21 / 2.0);
    let s2 = identity(2) * re(d2) + pauli_d(3) * c(0.0, h12 / 2.0);
    let bundle = torus_bundle(theta, eps, [s1, s2]);
    let expectations = vec![
        exp("local_axioms", "all local axioms hold", 1e-12, local_axioms),
        exp_above("torsion", "∇ has torsion unless h = 0", 1e-6, torsion_free),
        exp(
            "dirac_shift",
            "D̸ = (∂_i + d'_i)σ^i with d'_1 = d1 + h12/2, d'_2 = d2 + h21/2",
            1e-12,
            |p| {
                let mut reference = p.clone();
                let mut q = p.params.clone();
                q.insert("d1".into(), re(p.r("d1") + p.r("h12") / 2.0));
                q.insert("d2".into(), re(p.r("d2") + p.r("h21") / 2.0));
                q.remove("h12");
                q.remove("h21");
                let Ok(flat) = preset("torus_spectral", &q) else {
                    return f64::INFINITY;
                };
                reference.bundle = flat.bundle;
                let (a, b) = (
                    dirac_matrix(p.bundle(), p.window),
                    dirac_matrix(reference.bundle(), p.window),
                );
                match (a, b) {
                    (Ok(a), Ok(b)) => max_abs(&(a.matrix - b.matrix)),
                    _ => f64::INFINITY,
                }
            },
        ),
    ];
    Ok(Preset {
        name: "torus_extended",
        params: p,
        geometry: Geometry {
            calculus,
            metric,
            connection,
        },
        bundle: Some(bundle),
        window: 2,
        realisation: None,
        expectations,
    })
}

fn general_s(eps: i8, a: C64, b: C64) -> CMat {
    mat2(a, b, b.conj() * f64::from(eps), a.conj())
}

fn torus_general_spinor(p: Params) -> Result<Preset, PresetError> {
    let eps = sign_param(&p, "eps")?;
    let theta = p["theta"].re;
    let calculus = Calculus::torus(theta);
    let metric = torus_metric(1.0, 1.0, 0.0)?;
    let connection = Connection::zero(calculus.backend, 2);
    let bundle = torus_bundle(
        theta,
        eps,
        [
            general_s(eps, p["a1"], p["b1"]),
            general_s(eps, p["a2"], p["b2"]),
        ],
    );
    let expectations = vec![
        exp("reality", "JJ, SJ and CJ hold", 1e-12, |p| {
            residual_of(p, &["JJ", "SJ", "CJ"])
        }),
        exp("gamma_s", "[S_i, γ] = 0 iff b_i = 0", 1e-12, |p| {
            let r = residual_of(p, &["gamma_S"]);
            let b = p.p("b1").norm().max(p.p("b2").norm());
            if b == 0.0 {
                r
            } else if r > 1e-6 {
                0.0
            } else {
                f64::INFINITY
            }
        }),
    ];
    Ok(Preset {
        name: "torus_general_spinor",
        params: p,
        geometry: Geometry {
            calculus,
            metric,
            connection,
        },
        bundle: Some(bundle),
        window: 2,
        realisation: None,
        expectations,
    })
}

fn torus_mass(p: Params) -> Result<Preset, PresetError> {
    let eps = sign_param(&p, "eps")?;
    let theta = p["theta"].re;
    let m = p["m"].re;
    let calculus = Calculus::torus(theta);
    let metric = torus_metric(1.0, 1.0, 0.0)?;
    let connection = Connection::zero(calculus.backend, 2);
    let zero = C64::new(0.0, 0.0);
    let mut bundle = torus_bundle(
        theta,
        eps,
        [general_s(eps, zero, c(0.0, m)), general_s(eps, zero, zero)],
    );
    bundle.gamma = None;
    let expectations = vec![
        exp("reality", "JJ, SJ and CJ hold", 1e-12, |p| {
            residual_of(p, &["JJ", "SJ", "CJ"])
        }),
        exp("antihermitian", "D̸ is antihermitian", 1e-12, antihermitian),
        exp(
            "mass_term",
            "D̸ψ = ∂_iψσ^i + i m ψσ³ (ε = 1) or + i m ψ (ε = -1)",
            1e-12,
            |p| {
                let b = p.bundle();
                let m = p.r("m");
                let mass = if b.signs.eps == 1 {
                    pauli_d(3)
                } else {
                    identity(2)
                } * c(0.0, m);
                let mut free = b.clone();
                free.s = vec![
                    ElemMatrix::zeros(b.backend, 2, 2),
                    ElemMatrix::zeros(b.backend, 2, 2),
                ];
                operator_defect(
                    b,
                    1,
                    |psi| dirac_apply(b, psi),
                    |psi| {
                        add_spinors(
                            dirac_apply(&free, psi),
                            contract_c(psi, &mass, Element::clone),
                        )
                    },
                )
            },
        ),
    ];
    Ok(Preset {
        name: "torus_mass",
        params: p,
        geometry: Geometry {
            calculus,
            metric,
            connection,
        },
        bundle: Some(bundle),
        window: 2,
        realisation: None,
        expectations,
    })
}

// ---------------------------------------------------------------------------
// M2 standard geometry

fn levi(i: usize, j: usize) -> f64 {
    match (i, j) {
        (0, 1) => 1.0,
        (1, 0) => -1.0,
        _ => 0.0,
    }
}

fn m2_lift() -> CMat {
    identity(2) * (re(1.0) / c(0.0, 2.0))
}

pub fn m2_standard_metric() -> QuantumMetric {
    QuantumMetric::new(pauli_d(2), m2_lift()).expect("σ² is invertible")
}

pub fn m2_alt_metric() -> QuantumMetric {
    QuantumMetric::new(rmat2(-1.0, 0.0, 0.0, 1.0), m2_lift()).expect("diag(-1, 1) is invertible")
}

/// Braiding `σ^{ij}_{kl} = -δ_{jk}δ_{il} - 2iμ δ_{ij}δ_{ik} ε_{il}` of the μ-family.
pub fn mu_braid(mu: f64) -> Vec<C64> {
    let mut b = vec![C64::new(0.0, 0.0); 16];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    let mut v = C64::new(0.0, 0.0);
                    if j == k && i == l {
                        v -= 1.0;
                    }
                    if i == j && i == k {
                        v -= c(0.0, 2.0 * mu * levi(i, l));
                    }
                    b[((i * 2 + j) * 2 + k) * 2 + l] = v;
                }
            }
        }
    }
    b
}

/// Braiding of the ρ-family for the alternate metric.
pub fn rho_braid(rho: C64) -> Vec<C64> {
    let mut b = vec![C64::new(0.0, 0.0); 16];
    let idx = |i: usize, j: usize, k: usize, l: usize| ((i * 2 + j) * 2 + k) * 2 + l;
    for i in 0..2 {
        for j in 0..2 {
            if i != j {
                b[idx(i, j, i, j)] = re(1.0);
            } else {
                let ib = 1 - i;
                b[idx(i, i, ib, ib)] = re(-1.0);
                b[idx(i, i, ib, i)] = -c(0.0, 2.0) * rho;
            }
        }
    }
    b
}

pub fn m2_standard_geometry(mu: f64) -> Result<Geometry, GeometryError> {
    let calculus = Calculus::matrix2();
    let connection = Connection::inner(&calculus, mu_braid(mu), None)?;
    Ok(Geometry {
        calculus,
        metric: m2_standard_metric(),
        connection,
    })
}

pub fn m2_alt_geometry(rho: C64) -> Result<Geometry, GeometryError> {
    let calculus = Calculus::matrix2();
    let connection = Connection::inner(&calculus, rho_braid(rho), None)?;
    Ok(Geometry {
        calculus,
        metric: m2_alt_metric(),
        connection,
    })
}

fn m2_standard_qlc(p: Params) -> Result<Preset, PresetError> {
    let mu = p["mu"].re;
    let geometry = m2_standard_geometry(mu)?;
    let expectations = vec![
        exp(
            "qlc",
            "torsion free and metric compatible",
            1e-12,
            qlc_defect,
        ),
        exp(
            "connection_form",
            "N^i_{jk} = iσ^j δ_{ik} - μ δ_{ij} ε_{ik} σ^i",
            1e-12,
            |p| {
                let mu = p.r("mu");
                let conn = &p.geometry.connection;
                let mut worst: f64 = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        for k in 0..2 {
                            let mut e = Element::zero(Backend::Matrix2);
                            if i == k {
                                e += &sigma(j + 1).scale(I);
                            }
                            if i == j {
                                e += &sigma(i + 1).scale(re(-mu * levi(i, k)));
                            }
                            worst = worst.max((&conn.nabla(i, j, k) - &e).norm());
                        }
                    }
                }
                worst
            },
        ),
        exp(
            "curvature",
            "R(s^i) = -μ ε_{ij} Vol ⊗ s^j",
            1e-12,
            |p| {
                let mu = p.r("mu");
                curvature_vs(p, |i, j| {
                    Element::scalar(Backend::Matrix2, re(-mu * levi(i, j)))
                })
            },
        ),
        exp("ricci", "Ricci = (μ/2) g, S = -μ", 1e-12, |p| {
            let mu = p.r("mu");
            let g = p.geometry.metric.g.clone();
            ricci_vs(
                p,
                |i, j| Element::scalar(Backend::Matrix2, g[(i, j)] * (mu / 2.0)),
                Element::scalar(Backend::Matrix2, re(-mu)),
            )
        }),
    ];
    Ok(Preset {
        name: "m2_standard_qlc",
        params: p,
        geometry,
        bundle: None,
        window: 0,
        realisation: None,
        expectations,
    })
}

/// `[C¹, C²]`.
pub fn clifford_commutator(c: &[CMat]) -> CMat {
    &c[0] * &c[1] - &c[1] * &c[0]
}

/// `σ_S^i_j = ζ^i_j K` with `K = [C¹, C²]`.
pub fn zeta_sigma_s(zeta: &CMat, k: &CMat) -> Vec<Vec<CMat>> {
    (0..2)
        .map(|i| (0..2).map(|j| k * zeta[(i, j)]).collect())
        .collect()
}

/// Inner-type bundle on `M_2` with `σ_S` given and `S_i` built from it.
pub fn m2_inner_bundle(
    c: Vec<CMat>,
    sigma_s: Vec<Vec<CMat>>,
    j: CMat,
    gamma: Option<CMat>,
    phi: Option<CMat>,
    signs: Signs,
) -> Result<SpinorBundle, SpinorError> {
    let calc = Calculus::matrix2();
    let s = build_inner_connection(&calc, &sigma_s, None)?;
    Ok(SpinorBundle {
        backend: Backend::Matrix2,
        c,
        s,
        sigma_s,
        a: None,
        j,
        gamma,
        phi,
        kappa: re(1.0),
        signs,
        mu: identity(2),
    })
}

/// Type II Clifford matrix `[[c_a, c_b], [(c0 - c_a²)/c_b, -c_a]]`.
pub fn type2_c(c0: C64, ca: C64, cb: C64) -> CMat {
    mat2(ca, cb, (c0 - ca * ca) / cb, -ca)
}

fn canonical_gamma(k: &CMat) -> CMat {
    k / (-k.determinant()).sqrt()
}

fn m2_thm42(p: Params) -> Result<Preset, PresetError> {
    let ep = sign_param(&p, "eps_prime")?;
    let mu = p["mu"].re;
    let c2 = nonzero(&p, "c2")?;
    let c4 = nonzero(&p, "c4")?;
    let c = vec![type2_c(p["c0"], p["c1"], c2), type2_c(p["c0"], p["c3"], c4)];
    let k = clifford_commutator(&c);
    if k.determinant().norm() < 1e-12 {
        return Err(PresetError::Domain("[C¹, C²] must be invertible".into()));
    }
    let zeta = mat2(p["zeta11"], p["zeta12"], p["zeta21"], p["zeta22"]);
    let j = j_type2(1, p["z"])?;
    let bundle = m2_inner_bundle(
        c,
        zeta_sigma_s(&zeta, &k),
        j,
        Some(canonical_gamma(&k)),
        None,
        Signs::new(1, ep, 1),
    )?;
    let geometry = m2_standard_geometry(mu)?;
    let mut expectations = vec![exp(
        "qlc",
        "torsion free and metric compatible",
        1e-12,
        qlc_defect,
    )];
    if mu == 0.0 {
        expectations.push(exp(
            "covariance",
            "covariance holds for σ_S = ζ[C¹, C²] at μ = 0",
            1e-12,
            |p| residual_of(p, &["covariance", "inner_covariance"]),
        ));
        expectations.push(exp(
            "gamma",
            "γ = K/√(-det K) squares to 1 and anticommutes with C^i",
            1e-12,
            |p| {
                residual_of(
                    p,
                    &[
                        "gamma_square",
                        "gamma_anticommute",
                        "gamma_S",
                        "gamma_sigmaS",
                    ],
                )
            },
        ));
    } else {
        expectations.push(exp_above(
            "covariance",
            "covariance fails for μ ≠ 0",
            1e-6,
            |p| residual_of(p, &["covariance"]),
        ));
    }
    Ok(Preset {
        name: "m2_thm42",
        params: p,
        geometry,
        bundle: Some(bundle),
        window: 0,
        realisation: None,
        expectations,
    })
}

fn m2_local_expectations(extra: Vec<Expectation>) -> Vec<Expectation> {
    let mut out = vec![
        exp("local_axioms", "all local axioms hold", 1e-12, local_axioms),
        exp(
            "qlc",
            "μ = 0 connection is a quantum Levi-Civita connection",
            1e-12,
            qlc_defect,
        ),
    ];
    out.extend(extra);
    out
}

fn m2_solution_preset(
    name: &'static str,
    p: Params,
    c: Vec<CMat>,
    zeta: CMat,
    j: CMat,
    gamma: CMat,
    ep: i8,
    extra: Vec<Expectation>,
    realisation: Realisation,
) -> Result<Preset, PresetError> {
    let k = clifford_commutator(&c);
    let bundle = m2_inner_bundle(
        c,
        zeta_sigma_s(&zeta, &k),
        j,
        Some(gamma),
        None,
        Signs::new(1, ep, 1),
    )?;
    Ok(Preset {
        name,
        params: p,
        geometry: m2_standard_geometry(0.0)?,
        bundle: Some(bundle),
        window: 0,
        realisation: Some(realisation),
        expectations: m2_local_expectations(extra),
    })
}

fn anticommutator_of(p: &Preset) -> CMat {
    let c = &p.bundle().c;
    &c[0] * &c[1] + &c[1] * &c[0]
}

fn m2_ex41(p: Params, a: bool) -> Result<Preset, PresetError> {
    let x = p["x"].re;
    let j = j_type1(1, re(x), 2.0)?;
    let h = (x + 1.0) / 2.0;
    let l = (x - 1.0) / 2.0;
    if a {
        let c = vec![rmat2(h, 1.0, -h * h, -h), rmat2(l, 1.0, -l * l, -l)];
        let gamma = clifford_commutator(&c);
        let extra = vec![
            exp("nilpotent", "det C^i = 0", 1e-12, |p| {
                p.bundle()
                    .c
                    .iter()
                    .map(|c| c.determinant().norm())
                    .fold(0.0, f64::max)
            }),
            exp("det_k", "det [C¹, C²] = -1", 1e-12, |p| {
                (clifford_commutator(&p.bundle().c).determinant() + 1.0).norm()
            }),
            exp("anticommutator", "C¹C² + C²C¹ = -id", 1e-12, |p| {
                max_abs(&(anticommutator_of(p) + identity(2)))
            }),
            exp("gamma_is_j", "γ = [C¹, C²] = J", 1e-12, |p| {
                max_abs(&(clifford_commutator(&p.bundle().c) - &p.bundle().j))
            }),
            exp_above(
                "no_automorphism",
                "C²C¹ is singular, so no Clifford automorphism exists",
                0.0,
                |p| f64::from(u8::from(clifford_full(p).is_infinite())),
            ),
        ];
        m2_solution_preset(
            "m2_ex41a",
            p,
            c,
            pauli_d(3),
            j,
            gamma,
            1,
            extra,
            Realisation::Geometric,
        )
    } else {
        let c = vec![
            rmat2(h, 1.0, (1.0 - x * (x + 2.0)) / 4.0, -h),
            rmat2(l, 1.0, (1.0 - x * (x - 2.0)) / 4.0, -l),
        ];
        let gamma = clifford_commutator(&c) * (-I);
        let extra = vec![
            exp("det", "det C^i = -1/2", 1e-12, |p| {
                p.bundle()
                    .c
                    .iter()
                    .map(|c| (c.determinant() + 0.5).norm())
                    .fold(0.0, f64::max)
            }),
            exp("anticommutator", "C¹C² + C²C¹ = 0", 1e-12, |p| {
                max_abs(&anticommutator_of(p))
            }),
            exp(
                "clifford",
                "full Clifford relations with automorphism",
                1e-12,
                clifford_full,
            ),
            exp(
                "gamma_form",
                "γ = -i[[x, 2], [-(1+x²)/2, -x]]",
                1e-12,
                |p| {
                    let x = p.r("x");
                    let g = rmat2(x, 2.0, -(1.0 + x * x) / 2.0, -x) * (-I);
                    max_abs(&(p.bundle().gamma.clone().unwrap() - g))
                },
            ),
        ];
        m2_solution_preset(
            "m2_ex41b",
            p,
            c,
            pauli_d(3),
            j,
            gamma,
            -1,
            extra,
            Realisation::Geometric,
        )
    }
}

fn m2_ex42a(p: Params) -> Result<Preset, PresetError> {
    let (x, y) = (p["x"].re, p["y"].re);
    let ep = sign_param(&p, "eps_prime")?;
    let root = sign_param(&p, "root_sign")?;
    let dxy = x - y;
    if dxy == 0.0 {
        return Err(PresetError::Domain("need x ≠ y".into()));
    }
    let r2 = f64::from(root) * 2f64.sqrt();
    let a = (f64::from(ep) + x * x - y * y) / r2;
    let off = r2 * dxy;
    let j = rmat2(a, off, (1.0 - a * a) / off, -a);
    let lower = |v: f64| (dxy.powi(4) + 1.0) / (4.0 * dxy * dxy) - v * v;
    let c = vec![rmat2(x, 1.0, lower(x), -x), rmat2(y, 1.0, lower(y), -y)];
    let gamma = clifford_commutator(&c) * (-I);
    let extra = vec![
        exp(
            "anticommutator",
            "C¹C² + C²C¹ = ½(1/(x-y)² - (x-y)²) id",
            1e-12,
            |p| {
                let d = p.r("x") - p.r("y");
                max_abs(&(anticommutator_of(p) - identity(2) * re(0.5 * (1.0 / (d * d) - d * d))))
            },
        ),
        exp(
            "det",
            "det C²C¹ = ((x-y)⁴ + 1)² / (16 (x-y)⁴)",
            1e-12,
            |p| {
                let d = p.r("x") - p.r("y");
                let c = &p.bundle().c;
                ((&c[1] * &c[0]).determinant() - re((d.powi(4) + 1.0).powi(2) / (16.0 * d.powi(4))))
                    .norm()
            },
        ),
    ];
    m2_solution_preset(
        "m2_ex42a",
        p,
        c,
        pauli_d(1),
        j,
        gamma,
        ep,
        extra,
        Realisation::Geometric,
    )
}

fn m2_ex42b(p: Params) -> Result<Preset, PresetError> {
    let x = p["x"].re;
    if x.abs() < 1.0 {
        return Err(PresetError::Domain("need |x| ≥ 1".into()));
    }
    let root = f64::from(sign_param(&p, "root_sign")?);
    let inner = f64::from(sign_param(&p, "inner_sign")?);
    let q = inner * (x * x - 1.0).sqrt();
    let w2 = 4.0 * x * (x - q) - 2.0;
    if w2 <= 0.0 {
        return Err(PresetError::Domain(
            "J entry under the square root must be positive".into(),
        ));
    }
    let w = root * w2.sqrt();
    let j = rmat2(0.0, w, 1.0 / w, 0.0);
    let c = vec![rmat2(x, 1.0, -0.5, -x), rmat2(q, 1.0, 0.5, -q)];
    let gamma = clifford_commutator(&c) * (-I);
    let extra = vec![
        exp(
            "anticommutator",
            "C¹C² + C²C¹ = 2x√(x²-1) id",
            1e-12,
            |p| {
                let c = &p.bundle().c;
                let q = c[1][(0, 0)].re;
                max_abs(&(anticommutator_of(p) - identity(2) * re(2.0 * p.r("x") * q)))
            },
        ),
        exp("det", "det C²C¹ = 1/4 + x²(x²-1)", 1e-12, |p| {
            let x = p.r("x");
            let c = &p.bundle().c;
            ((&c[1] * &c[0]).determinant() - re(0.25 + x * x * (x * x - 1.0))).norm()
        }),
    ];
    m2_solution_preset(
        "m2_ex42b",
        p,
        c,
        pauli_d(1),
        j,
        gamma,
        -1,
        extra,
        Realisation::Geometric,
    )
}

fn m2_ex42c(p: Params) -> Result<Preset, PresetError> {
    let x = nonzero(&p, "x")?.re;
    let ep = sign_param(&p, "eps_prime")?;
    let root = f64::from(sign_param(&p, "root_sign")?);
    let r2 = root * 2f64.sqrt();
    let e = f64::from(ep);
    let j = rmat2(1.0 / r2, e * 2.0 * r2 * x, e / (4.0 * r2 * x), -1.0 / r2);
    let low = 1.0 / (16.0 * x * x);
    let c = vec![rmat2(x, 1.0, low, -x), rmat2(-x, 1.0, low, x)];
    let gamma = clifford_commutator(&c) * (-I);
    let extra = vec![
        exp(
            "anticommutator",
            "C¹C² + C²C¹ = (1/(8x²) - 2x²) id",
            1e-12,
            |p| {
                let x = p.r("x");
                max_abs(
                    &(anticommutator_of(p) - identity(2) * re(1.0 / (8.0 * x * x) - 2.0 * x * x)),
                )
            },
        ),
        exp("gamma_form", "γ = -i[[0, 4x], [-1/(4x), 0]]", 1e-12, |p| {
            let x = p.r("x");
            max_abs(
                &(p.bundle().gamma.clone().unwrap()
                    - rmat2(0.0, 4.0 * x, -1.0 / (4.0 * x), 0.0) * (-I)),
            )
        }),
    ];
    m2_solution_preset(
        "m2_ex42c",
        p,
        c,
        pauli_d(1),
        j,
        gamma,
        ep,
        extra,
        Realisation::Geometric,
    )
}

/// Data of the type (2) J example; `branch` selects the ± of the family.
pub fn exj2_data(x: f64, y: f64, ep: i8, branch: i8) -> (Vec<CMat>, CMat) {
    let b = f64::from(branch);
    let e = f64::from(ep);
    let xb = x + b;
    let j = rmat2(1.0, 0.0, -(2.0 * x + b) / y, -1.0);
    let c = vec![
        rmat2(x, y, (0.5 - x * x) / y, -x),
        rmat2(xb, y, (0.5 - xb * xb) / y, -xb) * re(e),
    ];
    (c, j)
}

fn m2_exj2(p: Params) -> Result<Preset, PresetError> {
    let (x, y) = (p["x"].re, nonzero(&p, "y")?.re);
    let ep = sign_param(&p, "eps_prime")?;
    let branch = sign_param(&p, "branch")?;
    let (c, j) = exj2_data(x, y, ep, branch);
    let gamma = clifford_commutator(&c) * (-I);
    let extra = vec![
        exp("anticommutator", "C¹C² + C²C¹ = 0", 1e-12, |p| {
            max_abs(&anticommutator_of(p))
        }),
        exp(
            "clifford",
            "full Clifford relations with automorphism",
            1e-12,
            clifford_full,
        ),
        exp(
            "gamma_form",
            "γ = -iε′[[-1∓2x, ∓2y], [±(2x(x±1)+1)/y, 1±2x]]",
            1e-12,
            |p| {
                let (x, y) = (p.r("x"), p.r("y"));
                let b = p.r("branch");
                let e = p.r("eps_prime");
                let g = rmat2(
                    -1.0 - b * 2.0 * x,
                    -b * 2.0 * y,
                    b * (2.0 * x * (x + b) + 1.0) / y,
                    1.0 + b * 2.0 * x,
                ) * C64::new(0.0, -e);
                max_abs(&(p.bundle().gamma.clone().unwrap() - g))
            },
        ),
    ];
    m2_solution_preset(
        "m2_exJ2",
        p,
        c,
        pauli_d(3),
        j,
        gamma,
        ep,
        extra,
        Realisation::Geometric,
    )
}

/// The spinor-basis rotation relating the two forms of the natural triple.
pub fn rotation_u() -> CMat {
    let a = (2.0 + 2f64.sqrt()).sqrt() / 2.0;
    let b = (2.0 - 2f64.sqrt()).sqrt() / 2.0;
    rmat2(a, b, -b, a)
}

/// Natural M2 triple in the `J = σ³` basis.
pub fn canonical_bundle(ep: i8) -> SpinorBundle {
    let e = f64::from(ep);
    let c = vec![
        (pauli_d(1) - pauli_d(3)) * re(0.5),
        (pauli_d(1) + pauli_d(3)) * re(0.5 * e),
    ];
    let k = clifford_commutator(&c);
    m2_inner_bundle(
        c,
        zeta_sigma_s(&pauli_d(3), &k),
        pauli_d(3),
        Some(pauli_d(2) * re(-e)),
        None,
        Signs::new(1, ep, 1),
    )
    .expect("M2 calculus is inner")
}

fn m2_canonical(p: Params, rotated: bool) -> Result<Preset, PresetError> {
    let ep = sign_param(&p, "eps_prime")?;
    let mut bundle = canonical_bundle(ep);
    if rotated {
        bundle = gauge_transform(&bundle, &rotation_u())?;
    }
    let mut expectations = vec![
        exp("local_axioms", "all local axioms hold", 1e-12, local_axioms),
        exp(
            "qlc",
            "μ = 0 connection is a quantum Levi-Civita connection",
            1e-12,
            qlc_defect,
        ),
        exp(
            "clifford",
            "full Clifford relations with automorphism",
            1e-12,
            clifford_full,
        ),
        exp("phi", "φ = -2ε′σ², κ = 1", 1e-12, |p| {
            let e = p.r("eps_prime");
            clifford_check(p.bundle(), &p.geometry.metric, &p.geometry.calculus)
                .map_or(f64::INFINITY, |c| {
                    max_abs(&(c.phi - pauli_d(2) * re(-2.0 * e)))
                })
                .max((p.bundle().kappa - 1.0).norm())
        }),
        exp(
            "s_connection",
            "S_1 = (i/2)σ¹[[1, ε′], [-ε′, 1]], S_2 = (i/2)σ²[[1, -ε′], [ε′, 1]]",
            1e-12,
            |p| {
                let e = p.r("eps_prime");
                let m1 = rmat2(1.0, e, -e, 1.0);
                let m2 = rmat2(1.0, -e, e, 1.0);
                let s1 = ElemMatrix::elem_times(&sigma(1).scale(c(0.0, 0.5)), &m1);
                let s2 = ElemMatrix::elem_times(&sigma(2).scale(c(0.0, 0.5)), &m2);
                elem_matrix_defect(&p.bundle().s[0], &s1)
                    .max(elem_matrix_defect(&p.bundle().s[1], &s2))
            },
        ),
        exp("curvature_action", "R_S = ε′σ²", 1e-12, |p| {
            let e = p.r("eps_prime");
            let g = &p.geometry;
            curvature_action(p.bundle(), &g.connection, &g.metric, &g.calculus)
                .map_or(f64::INFINITY, |r| {
                    elem_matrix_defect(&r, &cmat_elem(&(pauli_d(2) * re(e))))
                })
        }),
        exp(
            "dirac_squared",
            "D̸²ψ = -½ψ - ¼(σ¹ψσ² + σ²ψσ¹) + (ε′/4){σ³, ψ_α}σ²",
            1e-12,
            |p| {
                let b = p.bundle();
                let e = p.r("eps_prime");
                operator_defect(
                    b,
                    0,
                    |psi| dirac_apply(b, &dirac_apply(b, psi)),
                    |psi| {
                        let local: Vec<Element> = psi
                            .iter()
                            .map(|x| {
                                &x.scale(re(-0.5))
                                    - &(&(&(&sigma(1) * x) * &sigma(2))
                                        + &(&(&sigma(2) * x) * &sigma(1)))
                                        .scale(re(0.25))
                            })
                            .collect();
                        add_spinors(
                            local,
                            contract_c(psi, &pauli_d(2), |x| {
                                sigma(3).anticommutator(x).scale(re(e / 4.0))
                            }),
                        )
                    },
                )
            },
        ),
        exp(
            "spinor_laplacian",
            "□_Sψ = -½{σ³, ψ_β} + (ε′/2)(σ²ψ_α σ¹ + σ¹ψ_α σ²)(σ²)^α_β",
            1e-12,
            |p| {
                let b = p.bundle();
                let e = p.r("eps_prime");
                let g = &p.geometry;
                operator_defect(
                    b,
                    0,
                    |psi| spinor_laplacian(b, &g.connection, &g.metric, psi),
                    |psi| {
                        let local: Vec<Element> = psi
                            .iter()
                            .map(|x| sigma(3).anticommutator(x).scale(re(-0.5)))
                            .collect();
                        let mixed = contract_c(psi, &pauli_d(2), |x| {
                            (&(&(&sigma(2) * x) * &sigma(1)) + &(&(&sigma(1) * x) * &sigma(2)))
                                .scale(re(e / 2.0))
                        });
                        add_spinors(local, mixed)
                    },
                )
            },
        ),
        exp("lichnerowicz", "D̸²φ = □_S + R_S", 1e-12, lichnerowicz),
        exp(
            "antihermitian",
            "D̸ is antihermitian under ½Tr",
            1e-12,
            antihermitian,
        ),
        exp(
            "j_isometry",
            "𝒥 is an antilinear isometry",
            1e-12,
            j_isometry,
        ),
        exp("gamma_hermitian", "γ is hermitian", 1e-12, gamma_hermitian),
    ];
    if rotated {
        expectations.push(exp(
            "rotated_data",
            "C¹ = σ¹/√2, C² = ε′σ³/√2, J = (σ³ - σ¹)/√2, γ = -ε′σ²",
            1e-12,
            |p| {
                let e = p.r("eps_prime");
                let r = 1.0 / 2f64.sqrt();
                let b = p.bundle();
                max_abs(&(&b.c[0] - pauli_d(1) * re(r)))
                    .max(max_abs(&(&b.c[1] - pauli_d(3) * re(e * r))))
                    .max(max_abs(&(&b.j - (pauli_d(3) - pauli_d(1)) * re(r))))
                    .max(max_abs(&(b.gamma.clone().unwrap() + pauli_d(2) * re(e))))
            },
        ));
        expectations.push(exp(
            "dirac_closed_form",
            "D̸ψ = (i/2√2)((σ¹ψ + ψσ²)σ¹ + ε′(ψσ¹ + σ²ψ)σ³)",
            1e-12,
            |p| {
                let b = p.bundle();
                let e = p.r("eps_prime");
                let k = c(0.0, 1.0 / (2.0 * 2f64.sqrt()));
                operator_defect(
                    b,
                    0,
                    |psi| dirac_apply(b, psi),
                    |psi| {
                        let a = contract_c(psi, &pauli_d(1), |x| {
                            (&(&sigma(1) * x) + &(x * &sigma(2))).scale(k)
                        });
                        let bb = contract_c(psi, &pauli_d(3), |x| {
                            (&(x * &sigma(1)) + &(&sigma(2) * x)).scale(k * e)
                        });
                        add_spinors(a, bb)
                    },
                )
            },
        ));
    } else {
        expectations.push(exp(
            "dirac_closed_form",
            "D̸ψ = (i/4)((σ¹ψ + ψσ²)(σ¹ - σ³) + ε′(σ²ψ + ψσ¹)(σ¹ + σ³))",
            1e-12,
            |p| {
                let b = p.bundle();
                let e = p.r("eps_prime");
                let k = c(0.0, 0.25);
                operator_defect(
                    b,
                    0,
                    |psi| dirac_apply(b, psi),
                    |psi| {
                        let a = contract_c(psi, &(pauli_d(1) - pauli_d(3)), |x| {
                            (&(&sigma(1) * x) + &(x * &sigma(2))).scale(k)
                        });
                        let bb = contract_c(psi, &(pauli_d(1) + pauli_d(3)), |x| {
                            (&(&sigma(2) * x) + &(x * &sigma(1))).scale(k * e)
                        });
                        add_spinors(a, bb)
                    },
                )
            },
        ));
    }
    Ok(Preset {
        name: if rotated {
            "m2_canonical_rotated"
        } else {
            "m2_canonical"
        },
        params: p,
        geometry: m2_standard_geometry(0.0)?,
        bundle: Some(bundle),
        window: 0,
        realisation: Some(Realisation::Full),
        expectations,
    })
}

// ---------------------------------------------------------------------------
// M2 alternate geometry

fn imaginary_rho(p: &Params, name: &str) -> Result<C64, PresetError> {
    let rho = p[name];
    if rho.re != 0.0 {
        return Err(PresetError::Domain(format!(
            "{name} must be imaginary, got {rho}"
        )));
    }
    Ok(rho)
}

fn m2_alt_qlc(p: Params) -> Result<Preset, PresetError> {
    let rho = imaginary_rho(&p, "rho")?;
    let geometry = m2_alt_geometry(rho)?;
    let expectations = vec![
        exp(
            "qlc",
            "torsion free and metric compatible",
            1e-12,
            qlc_defect,
        ),
        exp(
            "curvature",
            "R(s^i) = -i(1 + ρ²) Vol ⊗ s^i",
            1e-12,
            |p| {
                let rho = p.p("rho");
                curvature_vs(p, |i, j| {
                    Element::scalar(
                        Backend::Matrix2,
                        if i == j {
                            -I * (1.0 + rho * rho)
                        } else {
                            C64::new(0.0, 0.0)
                        },
                    )
                })
            },
        ),
        exp(
            "ricci",
            "Ricci = -½(1 + ρ²)(s¹⊗s¹ + s²⊗s²), S = 0",
            1e-12,
            |p| {
                let rho = p.p("rho");
                ricci_vs(
                    p,
                    |i, j| {
                        Element::scalar(
                            Backend::Matrix2,
                            if i == j {
                                (1.0 + rho * rho) * -0.5
                            } else {
                                C64::new(0.0, 0.0)
                            },
                        )
                    },
                    Element::zero(Backend::Matrix2),
                )
            },
        ),
    ];
    Ok(Preset {
        name: "m2_alt_qlc",
        params: p,
        geometry,
        bundle: None,
        window: 0,
        realisation: None,
        expectations,
    })
}

/// Clifford matrices solving the full relations for the alternate metric.
pub fn cliffab(a: C64, b: C64, sign: f64) -> Vec<CMat> {
    let r = C64::new(2f64.sqrt(), 0.0);
    let c1 = mat2(r - a, b, a / b * (r - a), a) * (I * sign);
    let c2 = mat2(a, -b, -(a / b) * (r - a), r - a) * re(sign);
    vec![c1, c2]
}

fn m2_alt_cliffab(p: Params) -> Result<Preset, PresetError> {
    let b = nonzero(&p, "b")?;
    let sign = f64::from(sign_param(&p, "sign")?);
    let rho = imaginary_rho(&p, "rho")?;
    let c = cliffab(p["a"], b, sign);
    let bundle = SpinorBundle {
        backend: Backend::Matrix2,
        c,
        s: vec![
            ElemMatrix::zeros(Backend::Matrix2, 2, 2),
            ElemMatrix::zeros(Backend::Matrix2, 2, 2),
        ],
        sigma_s: flip_sigma_s(2, 2),
        a: None,
        j: identity(2),
        gamma: None,
        phi: Some(identity(2)),
        kappa: re(1.0),
        signs: Signs::new(1, 1, 1),
        mu: identity(2),
    };
    let expectations = vec![
        exp(
            "clifford",
            "C¹C² = C²C¹ = 0 and -(C¹)² + (C²)² = 2 with φ = id, κ = 1",
            1e-12,
            clifford_full,
        ),
        exp("traces", "Tr C¹ = ±i√2, Tr C² = ±√2", 1e-12, |p| {
            let s = p.r("sign");
            let c = &p.bundle().c;
            (c[0].trace() - C64::new(0.0, s * 2f64.sqrt()))
                .norm()
                .max((c[1].trace() - re(s * 2f64.sqrt())).norm())
        }),
    ];
    Ok(Preset {
        name: "m2_alt_cliffab",
        params: p,
        geometry: m2_alt_geometry(rho)?,
        bundle: Some(bundle),
        window: 0,
        realisation: None,
        expectations,
    })
}

/// Data `(C, σ_S, J, γ, ρ)` of the four-parameter family on the alternate metric.
pub fn alt_family_data(
    s: f64,
    t: f64,
    x: f64,
    y: f64,
    gamma_sign: f64,
) -> (Vec<CMat>, Vec<Vec<CMat>>, CMat, CMat, C64) {
    let n = s * s + t * t;
    let d = n * x * x + 2.0 * s * s;
    let ey = C64::from_polar(1.0, y);
    let c1 = mat2(re(x), ey * s, -re(d) / (ey * s * n), re(-x));
    let c2 = &c1 * c(0.0, -t / s);
    let q = ey * s * x * n / d;
    let zero = C64::new(0.0, 0.0);
    let one = re(1.0);
    let s11 = mat2(one, q, zero, zero);
    let s12 = mat2(zero, -q, zero, one) * c(0.0, s / t);
    let s21 = &s12 * re(t * t / (s * s));
    let sigma_s = vec![vec![s11.clone(), s12], vec![s21, -s11]];
    let j = mat2(one, zero, zero, C64::from_polar(1.0, 2.0 * y));
    let gamma = mat2(one, q * 2.0, zero, -one) * re(gamma_sign);
    let rho = c(0.0, 0.5 * (t / s - s / t));
    (vec![c1, c2], sigma_s, j, gamma, rho)
}

/// The two pieces `∂̸⁽¹⁾ψ = (i/2)[σ¹, ψ_α]C¹` and `∂̸⁽²⁾ψ = (i/2){σ², ψ_α}C¹`
/// as dense matrices on `M_2 ⊗ C²`.
pub fn alt_partial_operators(b: &SpinorBundle) -> Result<(CMat, CMat), SpinorError> {
    let c1 = b.c[0].clone();
    let d1 = operator_matrix(b, 0, |psi| {
        contract_c(psi, &c1, |x| sigma(1).commutator(x).scale(c(0.0, 0.5)))
    })?;
    let d2 = operator_matrix(b, 0, |psi| {
        contract_c(psi, &c1, |x| sigma(2).anticommutator(x).scale(c(0.0, 0.5)))
    })?;
    Ok((d1.matrix, d2.matrix))
}

/// Hermiticity defects `‖A‡ - A‖` of the two pieces of the alternate Dirac operator.
pub fn alt_partial_hermiticity(b: &SpinorBundle) -> Result<(f64, f64), SpinorError> {
    let (d1, d2) = alt_partial_operators(b)?;
    let g = gram_matrix(b, 0)?;
    let h = |m: &CMat| adjoint_defects(m, &g).map_or(f64::INFINITY, |d| d.hermitian);
    Ok((h(&d1), h(&d2)))
}

fn m2_alt_family_build(
    name: &'static str,
    p: Params,
    s: f64,
    t: f64,
    x: f64,
    y: f64,
    gs: f64,
) -> Result<Preset, PresetError> {
    if s == 0.0 || t == 0.0 {
        return Err(PresetError::Domain("need s, t ≠ 0".into()));
    }
    let (c, sigma_s, j, gamma, rho) = alt_family_data(s, t, x, y, gs);
    let mut bundle = m2_inner_bundle(
        c,
        sigma_s,
        j,
        Some(gamma),
        Some(identity(2)),
        Signs::new(1, 1, 1),
    )?;
    bundle.kappa = re(1.0);
    let mut expectations = vec![
        exp("local_axioms", "all local axioms hold", 1e-12, local_axioms),
        exp(
            "qlc",
            "ρ-connection is a quantum Levi-Civita connection",
            1e-12,
            qlc_defect,
        ),
        exp(
            "rho",
            "ρ = (i/2)(t/s - s/t) and 1 + ρ² = ¼(6 - s²/t² - t²/s²)",
            1e-12,
            |p| {
                let (s, t) = (p.r("s"), p.r("t"));
                let rho = C64::new(0.0, 0.5 * (t / s - s / t));
                let lhs = 1.0 + rho * rho;
                let rhs = 0.25 * (6.0 - s * s / (t * t) - t * t / (s * s));
                (lhs - rhs).norm().max(curvature_vs(p, |i, j| {
                    Element::scalar(
                        Backend::Matrix2,
                        if i == j { -I * rhs } else { C64::new(0.0, 0.0) },
                    )
                }))
            },
        ),
        exp(
            "clifford_half",
            "-(C¹)² + (C²)² = 2 with φ = id",
            1e-12,
            clifford_relaxed,
        ),
        exp_above("clifford_full_fails", "C¹C² = 0 fails", 1e-6, clifford_full),
        exp("sigma_c", "σ_S^j_i C^i = ±C^j", 1e-12, |p| {
            let b = p.bundle();
            let mut worst: f64 = 0.0;
            for jj in 0..2 {
                let mut acc = CMat::zeros(2, 2);
                for i in 0..2 {
                    acc += &b.sigma_s[jj][i] * &b.c[i];
                }
                let sgn = if jj == 0 { 1.0 } else { -1.0 };
                worst = worst.max(max_abs(&(acc - &b.c[jj] * re(sgn))));
            }
            worst
        }),
        exp(
            "dirac_split",
            "D̸ = ∂̸⁽¹⁾ - (it/s)∂̸⁽²⁾",
            1e-12,
            |p| {
                let b = p.bundle();
                let (s, t) = (p.r("s"), p.r("t"));
                let Ok((d1, d2)) = alt_partial_operators(b) else {
                    return f64::INFINITY;
                };
                let Ok(d) = dirac_matrix(b, 0) else {
                    return f64::INFINITY;
                };
                max_abs(&(d.matrix - d1 - d2 * C64::new(0.0, -t / s)))
            },
        ),
        exp(
            "j_isometry",
            "𝒥 is an antilinear isometry",
            1e-12,
            j_isometry,
        ),
        exp(
            "neither",
            "D̸ is neither hermitian nor antihermitian",
            1e-12,
            |p| {
                if neither_hermitian(p) > 1e-6 {
                    0.0
                } else {
                    1.0
                }
            },
        ),
    ];
    if x == 0.0 {
        expectations.push(exp(
            "gamma_hermitian",
            "γ = ±σ³ is hermitian at x = 0",
            1e-12,
            gamma_hermitian,
        ));
    } else {
        expectations.push(exp_above(
            "gamma_not_hermitian",
            "γ is not hermitian for x ≠ 0",
            1e-6,
            gamma_hermitian,
        ));
    }
    Ok(Preset {
        name,
        params: p,
        geometry: m2_alt_geometry(rho)?,
        bundle: Some(bundle),
        window: 0,
        realisation: Some(Realisation::Almost),
        expectations,
    })
}

fn m2_alt_family(p: Params) -> Result<Preset, PresetError> {
    let (s, t, x, y) = (p["s"].re, p["t"].re, p["x"].re, p["y"].re);
    let gs = f64::from(sign_param(&p, "gamma_sign")?);
    m2_alt_family_build("m2_alt_family", p, s, t, x, y, gs)
}

fn m2_alt_hermitian_circle(p: Params) -> Result<Preset, PresetError> {
    let s = p["s"].re;
    if s == 0.0 || s * s >= 2.0 {
        return Err(PresetError::Domain("need 0 < s² < 2".into()));
    }
    let t = (2.0 - s * s).sqrt();
    let mut full = p.clone();
    full.insert("t".into(), re(t));
    full.insert("x".into(), re(0.0));
    full.insert("y".into(), re(0.0));
    full.insert("gamma_sign".into(), re(1.0));
    let mut preset = m2_alt_family_build("m2_alt_hermitian_circle", full, s, t, 0.0, 0.0, 1.0)?;
    preset.expectations.push(exp(
        "circle_data",
        "C¹ = isσ², C² = tσ², J = id, γ = σ³",
        1e-12,
        |p| {
            let b = p.bundle();
            let (s, t) = (p.r("s"), p.r("t"));
            max_abs(&(&b.c[0] - pauli_d(2) * c(0.0, s)))
                .max(max_abs(&(&b.c[1] - pauli_d(2) * re(t))))
                .max(max_abs(&(&b.j - identity(2))))
                .max(max_abs(&(b.gamma.clone().unwrap() - pauli_d(3))))
        },
    ));
    preset.expectations.push(exp(
        "partials_hermitian",
        "∂̸⁽¹⁾ and ∂̸⁽²⁾ are hermitian",
        1e-12,
        |p| alt_partial_hermiticity(p.bundle()).map_or(f64::INFINITY, |(a, b)| a.max(b)),
    ));
    preset.expectations.push(exp(
        "c1_antihermitian",
        "C¹ is antihermitian and C² hermitian",
        1e-12,
        |p| {
            let c = &p.bundle().c;
            max_abs(&(c[0].adjoint() + &c[0])).max(max_abs(&(c[1].adjoint() - &c[1])))
        },
    ));
    Ok(preset)
}

/// Largest torsion over the torus torsion-free family (sanity helper for tests).
pub fn torus_family_torsion(theta: f64, h: [[f64; 3]; 2]) -> f64 {
    let c = Calculus::torus(theta);
    torus_torsion_free(theta, h).map_or(f64::INFINITY, |conn| {
        max_norm(&crate::geometry::torsion(&conn, &c))
    })
}
