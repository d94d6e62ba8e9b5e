//! Ready-made problems for the searches reported for the torus and for `M_2`.
//!
//! Each builder returns a [`SolveProblem`] whose assembly closure maps slot
//! values to a geometry and a bundle. Matrix slots of length `4k` hold `k`
//! 2×2 blocks, row-major; `σ_S^i_j` sits at block `2i + j`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::algebra::{re, Backend, Element, C64};
use crate::calculus::Calculus;
use crate::geometry::{flip_braid, Connection, Geometry};
use crate::linalg::{conj, identity, mat2, pauli_d, CMat};
use crate::presets::{
    alt_family_data, alt_partial_operators, clifford_commutator, exj2_data, m2_alt_geometry,
    m2_inner_bundle, m2_standard_geometry, torus_bundle, torus_metric, torus_torsion_free, type2_c,
    zeta_sigma_s, Params,
};
use crate::spinor::{adjoint, gram_matrix, j_type2, Signs, SpinorBundle};

use super::{Constraint, Model, Slot, SolveError, SolveProblem, Values};

/// Layout names accepted by [`layout`].
pub const LAYOUTS: [&str; 9] = [
    "torus_lemma32",
    "torus_prop34",
    "torus_j_phase",
    "m2_thm42",
    "m2_ex41",
    "m2_ex42",
    "m2_exj2",
    "appendix_full_clifford",
    "appendix_circle",
];

fn problem(
    name: &str,
    slots: Vec<Slot>,
    constraints: Vec<Constraint>,
    assemble: impl Fn(&Values) -> Result<Model, String> + Send + Sync + 'static,
) -> SolveProblem {
    SolveProblem {
        name: name.into(),
        slots,
        constraints,
        pins: BTreeMap::new(),
        assemble: Arc::new(assemble),
    }
}

fn torus_geometry(theta: f64, connection: Connection) -> Result<Geometry, String> {
    Ok(Geometry {
        calculus: Calculus::torus(theta),
        metric: torus_metric(1.0, 1.0, 0.0).map_err(|e| e.to_string())?,
        connection,
    })
}

fn torus_spinor_connection(v: &Values) -> [CMat; 2] {
    [v.mat2("S", 0), v.mat2("S", 1)]
}

/// Torsion-free connections `h` (six real numbers) together with constant
/// spinor connections `S_i`, subject to covariance and `SJ`.
pub fn torus_lemma32(theta: f64, eps: i8) -> SolveProblem {
    problem(
        "torus_lemma32",
        vec![Slot::real("h", 6), Slot::complex("S", 8)],
        vec![Constraint::Covariance, Constraint::SJ],
        move |v| {
            let h = v.get("h");
            let h = [[h[0].re, h[1].re, h[2].re], [h[3].re, h[4].re, h[5].re]];
            let conn = torus_torsion_free(theta, h).map_err(|e| e.to_string())?;
            Ok(Model {
                geometry: torus_geometry(theta, conn)?,
                bundle: torus_bundle(theta, eps, torus_spinor_connection(v)),
                inner: false,
                extra: Vec::new(),
            })
        },
    )
}

/// General constant Christoffel symbols `N^i_{jk}` (at `(2i + j)2 + k`) with
/// constant `S_i`, subject to covariance and `SJ`.
pub fn torus_prop34(theta: f64, eps: i8) -> SolveProblem {
    problem(
        "torus_prop34",
        vec![Slot::real("N", 8), Slot::complex("S", 8)],
        vec![Constraint::Covariance, Constraint::SJ],
        move |v| {
            let n = v.get("N");
            let b = Backend::Torus { theta };
            let conn = Connection::from_nabla(
                2,
                |i, j, k| Element::scalar(b, n[(2 * i + j) * 2 + k]),
                flip_braid(2),
            )
            .map_err(|e| e.to_string())?;
            Ok(Model {
                geometry: torus_geometry(theta, conn)?,
                bundle: torus_bundle(theta, eps, torus_spinor_connection(v)),
                inner: false,
                extra: Vec::new(),
            })
        },
    )
}

/// The flat torus triple with `J = q σ¹` (`ε = 1`) or `J = q σ²` (`ε = -1`)
/// and a free complex `q`; the solutions form the circle `|q| = 1`.
pub fn torus_j_phase(theta: f64, eps: i8) -> SolveProblem {
    problem(
        "torus_j_phase",
        vec![Slot::complex("q", 1)],
        vec![Constraint::JJ, Constraint::CJ, Constraint::SJ],
        move |v| {
            let mut bundle = torus_bundle(theta, eps, [CMat::zeros(2, 2), CMat::zeros(2, 2)]);
            bundle.j *= v.scalar("q");
            Ok(Model {
                geometry: torus_geometry(theta, Connection::zero(Backend::Torus { theta }, 2))?,
                bundle,
                inner: false,
                extra: Vec::new(),
            })
        },
    )
}

fn sigma_s_from(v: &Values, name: &str) -> Vec<Vec<CMat>> {
    (0..2)
        .map(|i| (0..2).map(|j| v.mat2(name, 2 * i + j)).collect())
        .collect()
}

/// Fixed Clifford data `C` and charge conjugation `J`; unknowns are the
/// braid parameter `mu` and all of `σ_S`, subject to covariance and `SJ` in
/// inner form.
pub fn m2_thm42(c: Vec<CMat>, j: CMat, eps_prime: i8) -> SolveProblem {
    problem(
        "m2_thm42",
        vec![Slot::real("mu", 1), Slot::complex("sigma_s", 16)],
        vec![Constraint::Covariance, Constraint::SJ, Constraint::CJ],
        move |v| {
            let geometry = m2_standard_geometry(v.real("mu")).map_err(|e| e.to_string())?;
            let bundle = m2_inner_bundle(
                c.clone(),
                sigma_s_from(v, "sigma_s"),
                j.clone(),
                None,
                None,
                Signs::new(1, eps_prime, 1),
            )
            .map_err(|e| e.to_string())?;
            Ok(Model {
                geometry,
                bundle,
                inner: true,
                extra: Vec::new(),
            })
        },
    )
}

/// Complex 2×2 matrix with independent standard normal entries.
pub fn random_gauge(seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = || {
        let (a, b): (f64, f64) = (
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
        );
        C64::new(a, b)
    };
    mat2(z(), z(), z(), z())
}

/// Type II data of the real type (2) family at `(x, y)`, conjugated by
/// [`random_gauge`] so that every entry is complex and generic.
pub fn thm42_data(
    x: f64,
    y: f64,
    eps_prime: i8,
    branch: i8,
    gauge_seed: u64,
) -> Result<(Vec<CMat>, CMat), SolveError> {
    if y == 0.0 {
        return Err(SolveError::Parameter("need y ≠ 0".into()));
    }
    let (c, j) = exj2_data(x, y, eps_prime, branch);
    let u = random_gauge(gauge_seed);
    let ui = u
        .clone()
        .try_inverse()
        .ok_or_else(|| SolveError::Parameter("singular gauge".into()))?;
    let c = c.iter().map(|m| &u * m * &ui).collect();
    let j = conj(&u) * j * ui;
    Ok((c, j))
}

/// `σ_S = ζ [C¹, C²]` on the `μ = 0` geometry.
fn zeta_model(c: Vec<CMat>, zeta: &CMat, j: CMat, eps_prime: i8) -> Result<Model, String> {
    let k = clifford_commutator(&c);
    let extra = vec![(
        "anticommutator",
        (&c[0] * &c[1] + &c[1] * &c[0]).iter().copied().collect(),
    )];
    let bundle = m2_inner_bundle(
        c,
        zeta_sigma_s(zeta, &k),
        j,
        None,
        None,
        Signs::new(1, eps_prime, 1),
    )
    .map_err(|e| e.to_string())?;
    Ok(Model {
        geometry: m2_standard_geometry(0.0).map_err(|e| e.to_string())?,
        bundle,
        inner: true,
        extra,
    })
}

fn real_type1_search(name: &str, zeta: CMat, eps_prime: i8, anticommute: bool) -> SolveProblem {
    let mut constraints = vec![
        Constraint::JJ,
        Constraint::SJ,
        Constraint::CJ,
        Constraint::Covariance,
    ];
    if anticommute {
        constraints.push(Constraint::Extra);
    }
    let slots = ["c0", "c1", "c3", "z", "r"]
        .iter()
        .map(|n| Slot::real(n, 1))
        .collect();
    problem(name, slots, constraints, move |v| {
        let (c0, c1, c3) = (v.scalar("c0"), v.scalar("c1"), v.scalar("c3"));
        let (z, r) = (v.real("z"), v.real("r"));
        if r.abs() < 1e-12 {
            return Err("J needs r ≠ 0".into());
        }
        let one = re(1.0);
        let j = mat2(re(z), re(r), re((1.0 - z * z) / r), re(-z));
        zeta_model(
            vec![type2_c(c0, c1, one), type2_c(c0, c3, one)],
            &zeta,
            j,
            eps_prime,
        )
    })
}

/// `ζ = σ³`, real type (1) `J` with `ε = 1`, real type II `C` with `c2 = c4 = 1`.
pub fn m2_ex41(eps_prime: i8) -> SolveProblem {
    real_type1_search("m2_ex41", pauli_d(3), eps_prime, false)
}

/// As [`m2_ex41`] with `ζ = σ¹`, additionally asking the `C^i` to anticommute.
pub fn m2_ex42(eps_prime: i8) -> SolveProblem {
    real_type1_search("m2_ex42", pauli_d(1), eps_prime, true)
}

/// `ζ = σ³`, `J = [[1, 0], [z, -1]]` with real `z`, real type II `C`.
pub fn m2_exj2(eps_prime: i8) -> SolveProblem {
    let slots = ["c0", "c1", "c2", "c3", "c4", "z"]
        .iter()
        .map(|n| Slot::real(n, 1))
        .collect();
    problem(
        "m2_exj2",
        slots,
        vec![
            Constraint::JJ,
            Constraint::SJ,
            Constraint::CJ,
            Constraint::Covariance,
        ],
        move |v| {
            let c: Vec<C64> = ["c0", "c1", "c2", "c3", "c4"]
                .iter()
                .map(|n| v.scalar(n))
                .collect();
            if c[2].norm() < 1e-12 || c[4].norm() < 1e-12 {
                return Err("type II data needs c2, c4 ≠ 0".into());
            }
            let j = j_type2(1, v.scalar("z")).map_err(|e| e.to_string())?;
            zeta_model(
                vec![type2_c(c[0], c[1], c[2]), type2_c(c[0], c[3], c[4])],
                &pauli_d(3),
                j,
                eps_prime,
            )
        },
    )
}

/// Alternate metric with braid parameter `rho` (pinned to the given value):
/// arbitrary complex `C`, `σ_S` and `J`, with the full Clifford relations for
/// `φ = id`, covariance, `CJ` and `JJ`. Unpinning `rho` lets the search move
/// along the family of geometries, with `rho` asked to stay imaginary.
pub fn appendix_full_clifford(eps: i8, eps_prime: i8, rho: C64) -> SolveProblem {
    let p = problem(
        "appendix_full_clifford",
        vec![
            Slot::complex("C", 8),
            Slot::complex("sigma_s", 16),
            Slot::complex("J", 4),
            Slot::complex("rho", 1),
        ],
        vec![
            Constraint::CliffordFull,
            Constraint::Covariance,
            Constraint::CJ,
            Constraint::JJ,
            Constraint::ImaginaryRho,
        ],
        move |v| {
            let rho = v.scalar("rho");
            let geometry = m2_alt_geometry(rho).map_err(|e| e.to_string())?;
            let c = vec![v.mat2("C", 0), v.mat2("C", 1)];
            let bundle = m2_inner_bundle(
                c,
                sigma_s_from(v, "sigma_s"),
                v.mat2("J", 0),
                None,
                Some(identity(2)),
                Signs::new(eps, eps_prime, 1),
            )
            .map_err(|e| e.to_string())?;
            Ok(Model {
                geometry,
                bundle,
                inner: true,
                extra: vec![("rho", vec![rho])],
            })
        },
    );
    p.pin("rho.re", rho.re).pin("rho.im", rho.im)
}

/// The four-parameter alternate family in `(s, t, x, y)`; the residual is the
/// hermiticity defect `A‡ - A` of both pieces of the Dirac operator.
/// Pin `x` and `y` to continue along the hermitian locus.
pub fn appendix_circle() -> SolveProblem {
    let slots = ["s", "t", "x", "y"]
        .iter()
        .map(|n| Slot::real(n, 1))
        .collect();
    problem("appendix_circle", slots, vec![Constraint::Extra], |v| {
        let (s, t) = (v.real("s"), v.real("t"));
        if s.abs() < 1e-9 || t.abs() < 1e-9 {
            return Err("need s, t ≠ 0".into());
        }
        let (c, sigma_s, j, gamma, rho) = alt_family_data(s, t, v.real("x"), v.real("y"), 1.0);
        let bundle = m2_inner_bundle(
            c,
            sigma_s,
            j,
            Some(gamma),
            Some(identity(2)),
            Signs::new(1, 1, 1),
        )
        .map_err(|e| e.to_string())?;
        let (d1, d2) = alt_partial_operators(&bundle).map_err(|e| e.to_string())?;
        let g = gram_matrix(&bundle, 0).map_err(|e| e.to_string())?;
        let defect =
            |m: &CMat| adjoint(m, &g).map(|a| (a - m).iter().copied().collect::<Vec<C64>>());
        let (h1, h2) = (
            defect(&d1).ok_or("singular gram")?,
            defect(&d2).ok_or("singular gram")?,
        );
        Ok(Model {
            geometry: m2_alt_geometry(rho).map_err(|e| e.to_string())?,
            bundle,
            inner: true,
            extra: vec![("hermitian_1", h1), ("hermitian_2", h2)],
        })
    })
}

fn get_real(p: &Params, key: &str, default: f64) -> Result<f64, SolveError> {
    match p.get(key) {
        None => Ok(default),
        Some(z) if z.im == 0.0 => Ok(z.re),
        Some(_) => Err(SolveError::Parameter(format!("'{key}' must be real"))),
    }
}

fn get_sign(p: &Params, key: &str, default: i8) -> Result<i8, SolveError> {
    match get_real(p, key, f64::from(default))? {
        1.0 => Ok(1),
        -1.0 => Ok(-1),
        v => Err(SolveError::Parameter(format!(
            "'{key}' must be ±1, got {v}"
        ))),
    }
}

/// Parameter names each layout accepts.
pub fn layout_params(name: &str) -> Option<&'static [&'static str]> {
    Some(match name {
        "torus_lemma32" | "torus_prop34" | "torus_j_phase" => &["theta", "eps"],
        "m2_thm42" => &["x", "y", "branch", "gauge_seed", "eps_prime"],
        "m2_ex41" | "m2_ex42" | "m2_exj2" => &["eps_prime"],
        "appendix_full_clifford" => &["eps", "eps_prime", "rho"],
        "appendix_circle" => &[],
        _ => return None,
    })
}

/// Builds a layout by name. Missing parameters take defaults: `theta = 1`,
/// signs `+1`, `rho = 0.4i`, and for `m2_thm42` the point `x = 0.3`, `y = 0.7`
/// with gauge seed 7.
pub fn layout(name: &str, p: &Params) -> Result<SolveProblem, SolveError> {
    let allowed = layout_params(name).ok_or_else(|| SolveError::UnknownLayout(name.into()))?;
    if let Some(k) = p.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(SolveError::Parameter(format!(
            "layout '{name}' has no parameter '{k}'"
        )));
    }
    let theta = get_real(p, "theta", 1.0)?;
    Ok(match name {
        "torus_lemma32" => torus_lemma32(theta, get_sign(p, "eps", 1)?),
        "torus_prop34" => torus_prop34(theta, get_sign(p, "eps", 1)?),
        "torus_j_phase" => torus_j_phase(theta, get_sign(p, "eps", 1)?),
        "m2_thm42" => {
            let ep = get_sign(p, "eps_prime", 1)?;
            let seed = get_real(p, "gauge_seed", 7.0)?;
            if seed < 0.0 || seed.fract() != 0.0 {
                return Err(SolveError::Parameter(
                    "'gauge_seed' must be a non-negative integer".into(),
                ));
            }
            let (c, j) = thm42_data(
                get_real(p, "x", 0.3)?,
                get_real(p, "y", 0.7)?,
                ep,
                get_sign(p, "branch", 1)?,
                seed as u64,
            )?;
            m2_thm42(c, j, ep)
        }
        "m2_ex41" => m2_ex41(get_sign(p, "eps_prime", 1)?),
        "m2_ex42" => m2_ex42(get_sign(p, "eps_prime", 1)?),
        "m2_exj2" => m2_exj2(get_sign(p, "eps_prime", 1)?),
        "appendix_full_clifford" => appendix_full_clifford(
            get_sign(p, "eps", 1)?,
            get_sign(p, "eps_prime", 1)?,
            p.get("rho").copied().unwrap_or(C64::new(0.0, 0.4)),
        ),
        "appendix_circle" => appendix_circle(),
        _ => unreachable!(),
    })
}

/// Sign patterns to enumerate for a layout: the given signs when set,
/// otherwise both values of each sign the layout depends on.
pub fn sign_variants(name: &str, p: &Params) -> Vec<Params> {
    let allowed = layout_params(name).unwrap_or(&[]);
    let mut out = vec![p.clone()];
    for key in ["eps", "eps_prime"] {
        if allowed.contains(&key) && !p.contains_key(key) {
            out = out
                .into_iter()
                .flat_map(|q| {
                    [1.0, -1.0].map(|s| {
                        let mut q = q.clone();
                        q.insert(key.into(), re(s));
                        q
                    })
                })
                .collect();
        }
    }
    out
}

/// The assembled bundle at a solution, for reporting and dedup.
pub fn bundle_at(p: &SolveProblem, free: &[f64]) -> Result<SpinorBundle, SolveError> {
    Ok(p.model(free)?.bundle)
}
