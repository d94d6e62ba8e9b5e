//! Spinor bundle data in a central spinor basis `{e^α}` and everything built from it.
//!
//! Spinors are rows `ψ = ψ_α e^α` acted on from the right by coefficient
//! matrices, so `(C^i)[α][β] = C^{iα}_β`, `(S_i)[α][β] = S^α_{iβ}` and
//! `σ_S^i_j[α][β] = σ_S^{αi}_{jβ}`.

mod axioms;
mod clifford;
mod dirac;
mod hilbert;

pub use axioms::{
    axiom_residual_blocks, axiom_residuals, cj_block, covariance_block, gamma_blocks, inner_blocks,
    jj_block, sj_block, AxiomReport, Residual, PRIMARY_AXIOMS,
};
pub use clifford::{
    clifford_check, clifford_matrices, clifford_residual_components, curvature_action,
    lichnerowicz_residual, CliffordReport, LichnerowiczReport,
};
pub use dirac::{dirac_apply, laplacian_coefficients, spinor_laplacian};
pub use hilbert::{
    adjoint, adjoint_defects, charge_conjugate, dirac_matrix, eigenvalues, gram_matrix,
    hilbert_checks, inner_product, operator_matrix, spectrum, AdjointDefects, HilbertReport,
    OperatorMatrix, Spectrum,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{Backend, Element, C64};
use crate::calculus::Calculus;
use crate::linalg::{conj, inverse, CMat, ElemMatrix};
use crate::tol::DEGENERATE_DET;

pub type Spinor = Vec<Element>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinorError {
    #[error("calculus is not inner")]
    NotInner,
    #[error("gauge matrix is singular")]
    SingularGauge,
    #[error("cannot determine the Clifford automorphism: {0}")]
    NoPhi(String),
    #[error("connection has torsion {0:e}; the curvature-action formula needs a torsion-free connection")]
    TorsionPrecondition(f64),
    #[error("invalid J parameters: {0}")]
    InvalidJ(String),
    #[error("truncation window must be at least 1 for the torus")]
    Truncation,
    #[error("inconsistent bundle: {0}")]
    Shape(String),
}

/// Sign parameters `(ε, ε′, ε″)`, each `±1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signs {
    pub eps: i8,
    pub eps_prime: i8,
    pub eps_dprime: i8,
}

impl Signs {
    pub fn new(eps: i8, eps_prime: i8, eps_dprime: i8) -> Self {
        Self {
            eps,
            eps_prime,
            eps_dprime,
        }
    }

    /// Signs as read for the hermitian operator `iD̸`, which flips `ε′`.
    pub fn hermitian_reading(&self) -> Signs {
        Signs {
            eps_prime: -self.eps_prime,
            ..*self
        }
    }

    /// All eight sign patterns.
    pub fn all() -> Vec<Signs> {
        let mut out = Vec::with_capacity(8);
        for eps in [1, -1] {
            for ep in [1, -1] {
                for epp in [1, -1] {
                    out.push(Signs::new(eps, ep, epp));
                }
            }
        }
        out
    }
}

pub(crate) fn sgn(s: i8) -> C64 {
    C64::new(f64::from(s), 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinorBundle {
    pub backend: Backend,
    /// Clifford action `C^i`.
    pub c: Vec<CMat>,
    /// Spinor connection coefficients `S_i`.
    pub s: Vec<ElemMatrix>,
    /// `sigma_s[i][j] = σ_S^i_j`.
    pub sigma_s: Vec<Vec<CMat>>,
    /// Inner deviation `A_i`, when the connection is written in inner form.
    pub a: Option<Vec<CMat>>,
    pub j: CMat,
    pub gamma: Option<CMat>,
    /// Clifford automorphism; derived from the Clifford relations when absent.
    pub phi: Option<CMat>,
    pub kappa: C64,
    pub signs: Signs,
    /// Positive hermitian measure on spinor indices.
    pub mu: CMat,
}

/// `σ_S = flip`: `σ_S^i_j = δ^i_j id`.
pub fn flip_sigma_s(n: usize, ns: usize) -> Vec<Vec<CMat>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        CMat::identity(ns, ns)
                    } else {
                        CMat::zeros(ns, ns)
                    }
                })
                .collect()
        })
        .collect()
}

impl SpinorBundle {
    pub fn ns(&self) -> usize {
        self.j.nrows()
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    /// Checks that all matrices have consistent sizes.
    pub fn validate(&self) -> Result<(), SpinorError> {
        let ns = self.ns();
        let n = self.n();
        let square = |m: &CMat| m.nrows() == ns && m.ncols() == ns;
        if !square(&self.j) || !square(&self.mu) || !self.c.iter().all(square) {
            return Err(SpinorError::Shape(
                "spinor matrices must be N_s × N_s".into(),
            ));
        }
        if self.s.len() != n || self.s.iter().any(|s| s.rows() != ns || s.cols() != ns) {
            return Err(SpinorError::Shape(
                "need one N_s × N_s connection matrix per direction".into(),
            ));
        }
        if self.sigma_s.len() != n
            || self
                .sigma_s
                .iter()
                .any(|r| r.len() != n || !r.iter().all(square))
        {
            return Err(SpinorError::Shape(
                "sigma_s must be n × n blocks of N_s × N_s".into(),
            ));
        }
        if let Some(a) = &self.a {
            if a.len() != n || !a.iter().all(square) {
                return Err(SpinorError::Shape(
                    "A must hold n matrices N_s × N_s".into(),
                ));
            }
        }
        if self.gamma.as_ref().is_some_and(|g| !square(g))
            || self.phi.as_ref().is_some_and(|p| !square(p))
        {
            return Err(SpinorError::Shape("gamma and phi must be N_s × N_s".into()));
        }
        Ok(())
    }

    /// `true` when every `S_i` entry is a multiple of the unit.
    pub fn constant_connection(&self, tol: f64) -> Option<Vec<CMat>> {
        self.s.iter().map(|s| s.as_constant(tol)).collect()
    }
}

/// `S^α_{iβ} = θ_i δ^α_β - θ_j σ_S^{αj}_{iβ} + A^α_{iβ}`.
pub fn build_inner_connection(
    c: &Calculus,
    sigma_s: &[Vec<CMat>],
    a: Option<&[CMat]>,
) -> Result<Vec<ElemMatrix>, SpinorError> {
    let theta = c.theta.as_ref().ok_or(SpinorError::NotInner)?;
    let ns = sigma_s[0][0].nrows();
    let out = (0..c.n)
        .map(|i| {
            ElemMatrix::from_fn(ns, ns, |r, col| {
                let mut acc = if r == col { theta[i].clone() } else { c.zero() };
                for (j, t) in theta.iter().enumerate() {
                    let z = sigma_s[j][i][(r, col)];
                    if z != C64::new(0.0, 0.0) {
                        acc += &t.scale(-z);
                    }
                }
                if let Some(a) = a {
                    acc += &Element::scalar(c.backend, a[i][(r, col)]);
                }
                acc
            })
        })
        .collect();
    Ok(out)
}

/// Global change of spinor basis by an invertible `u`.
///
/// The measure transforms as `μ ↦ ū μ uᵀ`, which keeps the Hilbert structure
/// (and hence all adjoint defects) invariant.
pub fn gauge_transform(b: &SpinorBundle, u: &CMat) -> Result<SpinorBundle, SpinorError> {
    if u.determinant().norm() < DEGENERATE_DET {
        return Err(SpinorError::SingularGauge);
    }
    let ui = inverse(u).ok_or(SpinorError::SingularGauge)?;
    let ub = conj(u);
    let conjg = |m: &CMat| u * m * &ui;
    Ok(SpinorBundle {
        backend: b.backend,
        c: b.c.iter().map(conjg).collect(),
        s: b.s
            .iter()
            .map(|s| ElemMatrix::c_mul(u, &s.mul_c(&ui)))
            .collect(),
        sigma_s: b
            .sigma_s
            .iter()
            .map(|r| r.iter().map(conjg).collect())
            .collect(),
        a: b.a.as_ref().map(|a| a.iter().map(conjg).collect()),
        j: &ub * &b.j * &ui,
        gamma: b.gamma.as_ref().map(conjg),
        phi: b.phi.as_ref().map(conjg),
        kappa: b.kappa,
        signs: b.signs,
        mu: &ub * &b.mu * u.transpose(),
    })
}

/// Type (1) charge conjugation `[[z, r], [(ε - |z|²)/r, -z̄]]`, `r > 0`.
pub fn j_type1(eps: i8, z: C64, r: f64) -> Result<CMat, SpinorError> {
    if r <= 0.0 || !r.is_finite() {
        return Err(SpinorError::InvalidJ(format!(
            "type (1) needs r > 0, got {r}"
        )));
    }
    let e = f64::from(eps);
    Ok(crate::linalg::mat2(
        z,
        C64::new(r, 0.0),
        C64::new((e - z.norm_sqr()) / r, 0.0),
        -z.conj(),
    ))
}

/// Type (2) charge conjugation `[[1, (ε - 1) z/|z|²], [z, -z/z̄]]`.
///
/// At `z = 0` with `ε = 1` the limit along the positive real ray is used,
/// giving `diag(1, -1)`; with `ε = -1` the point `z = 0` is rejected.
pub fn j_type2(eps: i8, z: C64) -> Result<CMat, SpinorError> {
    let one = C64::new(1.0, 0.0);
    if z.norm() == 0.0 {
        if eps == -1 {
            return Err(SpinorError::InvalidJ(
                "type (2) with ε = -1 needs z ≠ 0".into(),
            ));
        }
        return Ok(crate::linalg::mat2(
            one,
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            -one,
        ));
    }
    let e = f64::from(eps);
    Ok(crate::linalg::mat2(
        one,
        z * ((e - 1.0) / z.norm_sqr()),
        z,
        -z / z.conj(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{c, re};
    use crate::linalg::{identity, max_abs, rmat2};

    fn jj(j: &CMat) -> CMat {
        conj(j) * j
    }

    #[test]
    fn j_families() {
        let j = j_type1(-1, C64::new(0.0, 0.0), 1.0).unwrap();
        assert_eq!(j, rmat2(0.0, 1.0, -1.0, 0.0));
        assert!(max_abs(&(jj(&j) + identity(2))) < 1e-15);
        let j = j_type2(1, re(1.0)).unwrap();
        assert!(max_abs(&(j.clone() - rmat2(1.0, 0.0, 1.0, -1.0))) < 1e-15);
        assert!(max_abs(&(jj(&j) - identity(2))) < 1e-15);
        for eps in [1i8, -1] {
            for z in [c(0.3, -0.8), c(-1.2, 0.1), c(0.0, 2.0)] {
                let e = f64::from(eps);
                for j in [j_type1(eps, z, 0.7).unwrap(), j_type2(eps, z).unwrap()] {
                    assert!(max_abs(&(jj(&j) - identity(2) * re(e))) < 1e-13);
                    let jp = j.map(|x| x * C64::from_polar(1.0, 0.4));
                    assert!(max_abs(&(jj(&jp) - identity(2) * re(e))) < 1e-13);
                }
            }
        }
        assert!(j_type2(-1, C64::new(0.0, 0.0)).is_err());
        assert!(j_type1(1, re(0.0), 0.0).is_err());
        let lim = j_type2(1, C64::new(0.0, 0.0)).unwrap();
        assert!(max_abs(&(jj(&lim) - identity(2))) < 1e-15);
    }

    #[test]
    fn flip_sigma_cancels_theta() {
        let c = Calculus::matrix2();
        let s = build_inner_connection(&c, &flip_sigma_s(2, 2), None).unwrap();
        assert!(s.iter().all(|m| m.norm() < 1e-15));
        assert!(build_inner_connection(&Calculus::torus(0.1), &flip_sigma_s(2, 2), None).is_err());
    }

    #[test]
    fn sign_readings() {
        let s = Signs::new(1, -1, 1);
        assert_eq!(s.hermitian_reading(), Signs::new(1, 1, 1));
        assert_eq!(Signs::all().len(), 8);
    }
}
