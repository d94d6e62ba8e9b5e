//! Clifford relations, the curvature action of the spinor connection and the
//! Lichnerowicz identity `D̸²φ = κ□_S + R_S`.

use crate::algebra::{Element, C64};
use crate::calculus::Calculus;
use crate::geometry::{max_norm, torsion, Connection, QuantumMetric};
use crate::linalg::{inverse, max_abs, CMat, ElemMatrix};
use crate::tol::SOLVE_SUCCESS;

use super::dirac::{dirac_apply, spinor_laplacian};
use super::{SpinorBundle, SpinorError};

#[derive(Debug, Clone, PartialEq)]
pub struct CliffordReport {
    pub phi: CMat,
    /// `true` when φ was solved for rather than supplied.
    pub phi_derived: bool,
    /// Action of `Vol` on spinors read off from the relations with `W^{ij} ≠ 0`.
    pub vol_action: CMat,
    /// Vanishing relations plus spread of the volume relations.
    pub residual: f64,
    /// Spread of the volume relations only.
    pub relaxed_residual: f64,
}

/// `M^{ij} = C^j C^i φ - κ g^{ij}`.
pub fn clifford_matrices(b: &SpinorBundle, g: &QuantumMetric, phi: &CMat) -> Vec<Vec<CMat>> {
    let n = b.n();
    let id = CMat::identity(b.ns(), b.ns());
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| &b.c[j] * &b.c[i] * phi - &id * (b.kappa * g.ginv[(i, j)]))
                .collect()
        })
        .collect()
}

fn derive_phi(b: &SpinorBundle, g: &QuantumMetric, c: &Calculus) -> Result<CMat, SpinorError> {
    let n = b.n();
    for i in 0..n {
        for j in 0..n {
            let gij = g.ginv[(i, j)];
            if c.wedge[i][j] == C64::new(0.0, 0.0) && gij.norm() > SOLVE_SUCCESS {
                let prod = &b.c[j] * &b.c[i];
                let inv = inverse(&prod)
                    .filter(|_| prod.determinant().norm() > crate::tol::DEGENERATE_DET);
                return inv.map(|p| p * (b.kappa * gij)).ok_or_else(|| {
                    SpinorError::NoPhi(format!("C^{}C^{} is singular", j + 1, i + 1))
                });
            }
        }
    }
    Err(SpinorError::NoPhi(
        "no relation with vanishing wedge and nonzero inverse metric".into(),
    ))
}

pub fn clifford_check(
    b: &SpinorBundle,
    g: &QuantumMetric,
    c: &Calculus,
) -> Result<CliffordReport, SpinorError> {
    let (phi, phi_derived) = match &b.phi {
        Some(p) => (p.clone(), false),
        None => (derive_phi(b, g, c)?, true),
    };
    let m = clifford_matrices(b, g, &phi);
    let n = b.n();
    let mut vanishing: f64 = 0.0;
    let mut vols = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let w = c.wedge[i][j];
            if w == C64::new(0.0, 0.0) {
                vanishing += max_abs(&m[i][j]);
            } else {
                vols.push(&m[i][j] / w);
            }
        }
    }
    let vol_action = vols
        .first()
        .cloned()
        .unwrap_or_else(|| CMat::zeros(b.ns(), b.ns()));
    let spread = vols
        .iter()
        .map(|v| max_abs(&(v - &vol_action)))
        .fold(0.0, f64::max);
    Ok(CliffordReport {
        phi,
        phi_derived,
        vol_action,
        residual: vanishing + spread,
        relaxed_residual: spread,
    })
}

/// Raw components of the Clifford relations: the vanishing relations (unless
/// `relaxed`) followed by the differences between the volume relations.
pub fn clifford_residual_components(
    b: &SpinorBundle,
    g: &QuantumMetric,
    c: &Calculus,
    relaxed: bool,
) -> Result<Vec<C64>, SpinorError> {
    let phi = match &b.phi {
        Some(p) => p.clone(),
        None => derive_phi(b, g, c)?,
    };
    let m = clifford_matrices(b, g, &phi);
    let n = b.n();
    let mut out = Vec::new();
    let mut vols: Vec<CMat> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let w = c.wedge[i][j];
            if w == C64::new(0.0, 0.0) {
                if !relaxed {
                    out.extend(m[i][j].iter().copied());
                }
            } else {
                vols.push(&m[i][j] / w);
            }
        }
    }
    if let Some((first, rest)) = vols.split_first() {
        for v in rest {
            out.extend((v - first).iter().copied());
        }
    }
    Ok(out)
}

/// Curvature action without the torsion precondition.
pub(crate) fn curvature_action_unchecked(
    b: &SpinorBundle,
    conn: &Connection,
    g: &QuantumMetric,
    phi: &CMat,
) -> ElemMatrix {
    let n = b.n();
    let ns = b.ns();
    let m = clifford_matrices(b, g, phi);
    let mut out = ElemMatrix::zeros(b.backend, ns, ns);
    for i in 0..n {
        for j in 0..n {
            let mut f = b.s[j].map(|e| e.partial(i).expect("direction in range"));
            for k in 0..n {
                let nk = conn.nabla(k, i, j);
                if !nk.is_zero(0.0) {
                    f = &f + &b.s[k].map(|e| e * &nk);
                }
            }
            f = &f - &b.s[i].mul(&b.s[j]);
            out = &out + &f.mul_c(&m[i][j]);
        }
    }
    out
}

/// `R_S = Σ (∂_i S_j + S_k N^k_{ij} - S_i S_j)(C^j C^i φ - κ g^{ij})`.
pub fn curvature_action(
    b: &SpinorBundle,
    conn: &Connection,
    g: &QuantumMetric,
    c: &Calculus,
) -> Result<ElemMatrix, SpinorError> {
    let t = max_norm(&torsion(conn, c));
    if t > SOLVE_SUCCESS {
        return Err(SpinorError::TorsionPrecondition(t));
    }
    let phi = clifford_check(b, g, c)?.phi;
    Ok(curvature_action_unchecked(b, conn, g, &phi))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LichnerowiczReport {
    pub residual: f64,
    /// Torsion-free connection and Clifford relations within tolerance.
    pub preconditions_met: bool,
    pub torsion: f64,
    pub clifford_residual: f64,
}

fn right_mul(psi: &[Element], m: &CMat) -> Vec<Element> {
    (0..m.ncols())
        .map(|col| {
            let mut acc = Element::zero(psi[0].backend());
            for (r, p) in psi.iter().enumerate() {
                acc += &p.scale(m[(r, col)]);
            }
            acc
        })
        .collect()
}

/// Largest defect of `(D̸²ψ)φ - κ□_Sψ - ψR_S` over basis spinors.
///
/// Always evaluated; `preconditions_met` tells whether the identity is
/// expected to hold.
pub fn lichnerowicz_residual(
    b: &SpinorBundle,
    conn: &Connection,
    g: &QuantumMetric,
    c: &Calculus,
    window: i32,
) -> Result<LichnerowiczReport, SpinorError> {
    let cl = clifford_check(b, g, c)?;
    let t = max_norm(&torsion(conn, c));
    let rs = curvature_action_unchecked(b, conn, g, &cl.phi);
    let ns = b.ns();
    let mut worst: f64 = 0.0;
    for a in Element::basis(b.backend, window) {
        for alpha in 0..ns {
            let mut psi = vec![Element::zero(b.backend); ns];
            psi[alpha] = a.clone();
            let d2 = right_mul(&dirac_apply(b, &dirac_apply(b, &psi)), &cl.phi);
            let lap = spinor_laplacian(b, conn, g, &psi);
            for beta in 0..ns {
                let mut r = &d2[beta] - &lap[beta].scale(b.kappa);
                for (gm, p) in psi.iter().enumerate() {
                    r -= &(p * &rs[(gm, beta)]);
                }
                worst = worst.max(r.norm());
            }
        }
    }
    Ok(LichnerowiczReport {
        residual: worst,
        preconditions_met: t <= SOLVE_SUCCESS && cl.residual <= SOLVE_SUCCESS,
        torsion: t,
        clifford_residual: cl.residual,
    })
}
