//! One-shot verification of a spinor bundle over a geometry, combining the
//! local axioms, Clifford relations, Lichnerowicz identity and Hilbert checks
//! into a realisation class.

use serde::{Deserialize, Serialize};

use crate::geometry::{connection_report, ConnectionReport, Geometry};
use crate::spinor::{
    axiom_residuals, clifford_check, hilbert_checks, lichnerowicz_residual, AxiomReport,
    CliffordReport, HilbertReport, LichnerowiczReport, SpinorBundle, SpinorError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Realisation {
    /// Local axioms, full Clifford relations and a (anti)hermitian Dirac operator.
    Full,
    /// Local axioms hold; Clifford or Hilbert level incomplete.
    Geometric,
    /// Local axioms, only the volume half of the Clifford relations and an
    /// isometric `J`, with a Dirac operator neither hermitian nor antihermitian.
    Almost,
    Fails,
}

impl Realisation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Realisation::Full => "full",
            Realisation::Geometric => "geometric",
            Realisation::Almost => "almost",
            Realisation::Fails => "fails",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub tol: f64,
    pub axioms: AxiomReport,
    pub connection: ConnectionReport,
    pub clifford: Result<CliffordReport, SpinorError>,
    pub lichnerowicz: Option<LichnerowiczReport>,
    pub hilbert: HilbertReport,
    pub realisation: Realisation,
    /// γ present and all its checks pass.
    pub even: bool,
}

impl VerificationReport {
    pub fn local_ok(&self) -> bool {
        self.axioms.max() <= self.tol
    }

    pub fn clifford_full_ok(&self) -> bool {
        self.clifford.as_ref().is_ok_and(|c| c.residual <= self.tol)
    }

    pub fn clifford_relaxed_ok(&self) -> bool {
        self.clifford
            .as_ref()
            .is_ok_and(|c| c.relaxed_residual <= self.tol)
    }

    pub fn dirac_antihermitian(&self) -> bool {
        self.hilbert.dirac.antihermitian <= self.tol
    }

    pub fn dirac_hermitian(&self) -> bool {
        self.hilbert.dirac.hermitian <= self.tol
    }

    pub fn j_isometric(&self) -> bool {
        self.hilbert.j_isometry_sampled <= self.tol
    }

    pub fn gamma_hermitian(&self) -> Option<bool> {
        self.hilbert.gamma_hermitian.map(|d| d <= self.tol)
    }

    /// Every requested check passes: local axioms, Clifford relations in the
    /// strongest form available and the Lichnerowicz identity when it applies.
    pub fn passes(&self) -> bool {
        matches!(
            self.realisation,
            Realisation::Full | Realisation::Almost | Realisation::Geometric
        ) && self
            .lichnerowicz
            .as_ref()
            .is_none_or(|l| !l.preconditions_met || l.residual <= self.tol)
    }
}

pub fn classify(r: &VerificationReport) -> Realisation {
    if !r.local_ok() {
        return Realisation::Fails;
    }
    let hilbert_ok = (r.dirac_antihermitian() || r.dirac_hermitian())
        && r.j_isometric()
        && r.gamma_hermitian().unwrap_or(true);
    if r.clifford_full_ok() && hilbert_ok {
        Realisation::Full
    } else if !r.clifford_full_ok()
        && r.clifford_relaxed_ok()
        && r.j_isometric()
        && !(r.dirac_antihermitian() || r.dirac_hermitian())
    {
        Realisation::Almost
    } else {
        Realisation::Geometric
    }
}

pub fn verify(
    geom: &Geometry,
    b: &SpinorBundle,
    window: i32,
    tol: f64,
) -> Result<VerificationReport, SpinorError> {
    b.validate()?;
    let axioms = axiom_residuals(b, &geom.connection, &geom.calculus);
    let connection = connection_report(&geom.connection, &geom.metric, &geom.calculus, tol);
    let clifford = clifford_check(b, &geom.metric, &geom.calculus);
    let lichnerowicz = match &clifford {
        Ok(_) => Some(lichnerowicz_residual(
            b,
            &geom.connection,
            &geom.metric,
            &geom.calculus,
            window.min(2),
        )?),
        Err(_) => None,
    };
    let hilbert = hilbert_checks(b, window)?;
    let mut report = VerificationReport {
        tol,
        axioms,
        connection,
        clifford,
        lichnerowicz,
        hilbert,
        realisation: Realisation::Fails,
        even: false,
    };
    report.realisation = classify(&report);
    report.even = b.gamma.is_some()
        && report
            .axioms
            .entries
            .iter()
            .filter(|(n, _)| n.starts_with("gamma"))
            .all(|(_, v)| *v <= tol)
        && report.gamma_hermitian().unwrap_or(false);
    Ok(report)
}
