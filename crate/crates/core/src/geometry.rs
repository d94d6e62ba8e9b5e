//! Quantum metrics and bimodule connections in a central basis.
//!
//! A connection is stored through `Γ^i_{jk}` with `∇s^i = -½ Γ^i_{jk} s^j ⊗ s^k`
//! and the braiding `σ(s^i ⊗ s^j) = σ^{ij}_{kl} s^k ⊗ s^l`. Most formulas are
//! cleaner in terms of `N^i_{jk} = -½ Γ^i_{jk}`, exposed as [`Connection::nabla`].
//!
//! Coefficients pass freely through basis symbols and braidings because the
//! basis is central, so every algebra product below is taken in the order in
//! which the factors appear in the defining tensor expression.

use thiserror::Error;

use crate::algebra::{Backend, Element, C64};
use crate::calculus::{Calculus, CalculusError};
use crate::linalg::{inverse, max_abs, CMat};
use crate::tol::DEGENERATE_DET;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate metric: |det g| = {0:e}")]
    DegenerateMetric(f64),
    #[error("metric is {got}×{got}, calculus has {want} directions")]
    MetricSize { got: usize, want: usize },
    #[error("connection data has length {got}, expected {want}")]
    ConnectionSize { got: usize, want: usize },
    #[error("braiding is not invertible")]
    SingularBraid,
    #[error(transparent)]
    Calculus(#[from] CalculusError),
}

/// `g = g_{ij} s^i ⊗ s^j` with inverse `(s^i, s^j) = g^{ij}` and a lift
/// `i(Vol) = ℓ^{ij} s^i ⊗ s^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumMetric {
    pub g: CMat,
    pub ginv: CMat,
    pub lift: CMat,
}

impl QuantumMetric {
    pub fn new(g: CMat, lift: CMat) -> Result<Self, GeometryError> {
        let det = g.determinant();
        if det.norm() < DEGENERATE_DET {
            return Err(GeometryError::DegenerateMetric(det.norm()));
        }
        let ginv = inverse(&g).ok_or(GeometryError::DegenerateMetric(det.norm()))?;
        Ok(Self { g, ginv, lift })
    }

    pub fn n(&self) -> usize {
        self.g.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub hermiticity_defect: f64,
    pub inverse_defect: f64,
    /// `‖g_{ij} W^{ij}‖`, zero when the metric is quantum symmetric.
    pub quantum_symmetry_defect: f64,
}

pub fn metric_checks(g: &QuantumMetric, c: &Calculus) -> Result<MetricReport, GeometryError> {
    let n = g.n();
    if n != c.n {
        return Err(GeometryError::MetricSize { got: n, want: c.n });
    }
    let herm = max_abs(&(&g.g - g.g.adjoint()));
    let inv = max_abs(&(&g.ginv * &g.g - CMat::identity(n, n)));
    let mut wedge = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            wedge += g.g[(i, j)] * c.wedge[i][j];
        }
    }
    Ok(MetricReport {
        hermiticity_defect: herm,
        inverse_defect: inv,
        quantum_symmetry_defect: wedge.norm(),
    })
}

/// Calculus, metric and connection bundled together.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub calculus: Calculus,
    pub metric: QuantumMetric,
    pub connection: Connection,
}

/// Bimodule connection on Ω¹ in the central basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub n: usize,
    /// `Γ^i_{jk}` at index `(i n + j) n + k`.
    pub gamma: Vec<Element>,
    /// `σ^{ij}_{kl}` at index `((i n + j) n + k) n + l`.
    pub braid: Vec<C64>,
}

/// The flip braiding `σ^{ij}_{kl} = δ_{il} δ_{jk}`.
pub fn flip_braid(n: usize) -> Vec<C64> {
    let mut b = vec![C64::new(0.0, 0.0); n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            b[((i * n + j) * n + j) * n + i] = C64::new(1.0, 0.0);
        }
    }
    b
}

impl Connection {
    pub fn new(n: usize, gamma: Vec<Element>, braid: Vec<C64>) -> Result<Self, GeometryError> {
        if gamma.len() != n * n * n {
            return Err(GeometryError::ConnectionSize {
                got: gamma.len(),
                want: n * n * n,
            });
        }
        if braid.len() != n * n * n * n {
            return Err(GeometryError::ConnectionSize {
                got: braid.len(),
                want: n * n * n * n,
            });
        }
        let out = Self { n, gamma, braid };
        if out.braid_matrix().determinant().norm() < DEGENERATE_DET {
            return Err(GeometryError::SingularBraid);
        }
        Ok(out)
    }

    /// Builds the connection from `N^i_{jk}`, the coefficient of `s^j ⊗ s^k` in `∇s^i`.
    pub fn from_nabla(
        n: usize,
        nabla: impl Fn(usize, usize, usize) -> Element,
        braid: Vec<C64>,
    ) -> Result<Self, GeometryError> {
        let mut gamma = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    gamma.push(nabla(i, j, k).scale(C64::new(-2.0, 0.0)));
                }
            }
        }
        Self::new(n, gamma, braid)
    }

    /// `∇ s^i = 0` with the flip braiding.
    pub fn zero(backend: Backend, n: usize) -> Self {
        Self {
            n,
            gamma: vec![Element::zero(backend); n * n * n],
            braid: flip_braid(n),
        }
    }

    /// Inner connection `∇s^i = θ ⊗ s^i - σ(s^i ⊗ θ) - α(s^i)`, i.e.
    /// `N^i_{jk} = θ_j δ^i_k - θ_m σ^{im}_{jk} + α^i_{jk}`.
    pub fn inner(
        c: &Calculus,
        braid: Vec<C64>,
        alpha: Option<&dyn Fn(usize, usize, usize) -> C64>,
    ) -> Result<Self, GeometryError> {
        let theta = c.theta.as_ref().ok_or(CalculusError::NotInner)?;
        let n = c.n;
        let idx = |i: usize, j: usize, k: usize, l: usize| ((i * n + j) * n + k) * n + l;
        let nabla = |i: usize, j: usize, k: usize| {
            let mut acc = if i == k { theta[j].clone() } else { c.zero() };
            for (m, t) in theta.iter().enumerate() {
                let s = braid[idx(i, m, j, k)];
                if s != C64::new(0.0, 0.0) {
                    acc += &t.scale(-s);
                }
            }
            if let Some(a) = alpha {
                acc += &Element::scalar(c.backend, a(i, j, k));
            }
            acc
        };
        Self::from_nabla(n, nabla, braid.clone())
    }

    pub fn gamma(&self, i: usize, j: usize, k: usize) -> &Element {
        &self.gamma[(i * self.n + j) * self.n + k]
    }

    /// `N^i_{jk} = -½ Γ^i_{jk}`.
    pub fn nabla(&self, i: usize, j: usize, k: usize) -> Element {
        self.gamma(i, j, k).scale(C64::new(-0.5, 0.0))
    }

    pub fn sigma(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        let n = self.n;
        self.braid[((i * n + j) * n + k) * n + l]
    }

    /// The braiding as an `n² × n²` matrix, row `(k,l)`, column `(i,j)`.
    pub fn braid_matrix(&self) -> CMat {
        let n = self.n;
        CMat::from_fn(n * n, n * n, |r, c| self.sigma(c / n, c % n, r / n, r % n))
    }

    pub fn is_flip(&self, tol: f64) -> bool {
        self.braid
            .iter()
            .zip(flip_braid(self.n))
            .all(|(a, b)| (a - b).norm() <= tol)
    }

    pub fn backend(&self) -> Backend {
        self.gamma[0].backend()
    }
}

/// Vol coefficient of `T(s^i) = ∧∇s^i - ds^i`.
pub fn torsion(conn: &Connection, c: &Calculus) -> Vec<Element> {
    let n = conn.n;
    (0..n)
        .map(|i| {
            let mut acc = -&c.dbasis[i];
            for j in 0..n {
                for k in 0..n {
                    let w = c.wedge[j][k];
                    if w != C64::new(0.0, 0.0) {
                        acc += &conn.nabla(i, j, k).scale(w);
                    }
                }
            }
            acc
        })
        .collect()
}

pub fn max_norm<'a>(it: impl IntoIterator<Item = &'a Element>) -> f64 {
    it.into_iter().map(Element::norm).fold(0.0, f64::max)
}

/// Coefficients of `Vol ⊗ s^r` in `(d ⊗ id - id ∧ ∇) g`.
pub fn cotorsion(conn: &Connection, g: &QuantumMetric, c: &Calculus) -> Vec<Element> {
    let n = conn.n;
    (0..n)
        .map(|r| {
            let mut acc = c.zero();
            for i in 0..n {
                acc += &c.dbasis[i].scale(g.g[(i, r)]);
                for j in 0..n {
                    let gij = g.g[(i, j)];
                    if gij == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for a in 0..n {
                        let w = c.wedge[i][a];
                        if w != C64::new(0.0, 0.0) {
                            acc += &conn.nabla(j, a, r).scale(-gij * w);
                        }
                    }
                }
            }
            acc
        })
        .collect()
}

/// Components `(p,q,r)` of `(∇ ⊗ id + (σ ⊗ id)(id ⊗ ∇)) g` at index `(p n + q) n + r`.
pub fn metric_compatibility(conn: &Connection, g: &QuantumMetric) -> Vec<Element> {
    let n = conn.n;
    let backend = conn.backend();
    let mut out = Vec::with_capacity(n * n * n);
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                let mut acc = Element::zero(backend);
                for i in 0..n {
                    let gir = g.g[(i, r)];
                    if gir != C64::new(0.0, 0.0) {
                        acc += &conn.nabla(i, p, q).scale(gir);
                    }
                    for j in 0..n {
                        let gij = g.g[(i, j)];
                        if gij == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for a in 0..n {
                            let s = conn.sigma(i, a, p, q);
                            if s != C64::new(0.0, 0.0) {
                                acc += &conn.nabla(j, a, r).scale(gij * s);
                            }
                        }
                    }
                }
                out.push(acc);
            }
        }
    }
    out
}

/// Curvature `R(s^i) = ρ^i_j Vol ⊗ s^j`; returns `ρ[i][j]`.
pub fn curvature(conn: &Connection, c: &Calculus) -> Result<Vec<Vec<Element>>, GeometryError> {
    let n = conn.n;
    let mut rho = vec![vec![c.zero(); n]; n];
    for (i, row) in rho.iter_mut().enumerate() {
        for (d, out) in row.iter_mut().enumerate() {
            let mut acc = c.zero();
            // (d ⊗ id) of N^i_{ad} s^a ⊗ s^d
            for a in 0..n {
                let nad = conn.nabla(i, a, d);
                for cc in 0..n {
                    let w = c.wedge[cc][a];
                    if w != C64::new(0.0, 0.0) {
                        acc += &nad.partial(cc).map_err(CalculusError::from)?.scale(w);
                    }
                }
                acc += &(&nad * &c.dbasis[a]);
            }
            // -(id ∧ ∇) of N^i_{ab} s^a ⊗ s^b
            for a in 0..n {
                for b in 0..n {
                    let nab = conn.nabla(i, a, b);
                    if nab.is_zero(0.0) {
                        continue;
                    }
                    for cc in 0..n {
                        let w = c.wedge[a][cc];
                        if w != C64::new(0.0, 0.0) {
                            acc += &(&nab * &conn.nabla(b, cc, d)).scale(-w);
                        }
                    }
                }
            }
            *out = acc;
        }
    }
    Ok(rho)
}

/// Ricci tensor and scalar from curvature coefficients.
///
/// `Ricci = ((,) ⊗ id)(id ⊗ i ⊗ id)(id ⊗ R) g`, which in components reads
/// `Ricci_{bj} = g_{pq} g^{pa} ℓ^{ab} ρ^q_j`, and `S = g^{bj} Ricci_{bj}`.
/// Returns `(Ricci[b][j], S)`.
pub fn ricci(rho: &[Vec<Element>], g: &QuantumMetric) -> (Vec<Vec<Element>>, Element) {
    let n = g.n();
    let backend = rho[0][0].backend();
    // m[q][b] = Σ_{p,a} g_{pq} g^{pa} ℓ^{ab}
    let m = g.g.transpose() * &g.ginv * &g.lift;
    let mut ric = vec![vec![Element::zero(backend); n]; n];
    for (b, row) in ric.iter_mut().enumerate() {
        for (j, out) in row.iter_mut().enumerate() {
            let mut acc = Element::zero(backend);
            for (q, rq) in rho.iter().enumerate() {
                acc += &rq[j].scale(m[(q, b)]);
            }
            *out = acc;
        }
    }
    let mut s = Element::zero(backend);
    for (b, row) in ric.iter().enumerate() {
        for (j, r) in row.iter().enumerate() {
            s += &r.scale(g.ginv[(b, j)]);
        }
    }
    (ric, s)
}

/// `□a = g^{ij} ∂_i ∂_j a + (∂_j a) g^{kl} N^j_{kl}`.
pub fn scalar_laplacian(a: &Element, conn: &Connection, g: &QuantumMetric) -> Element {
    let n = conn.n;
    let mut acc = Element::zero(a.backend());
    let da: Vec<Element> = (0..n)
        .map(|j| a.partial(j).expect("direction in range"))
        .collect();
    for i in 0..n {
        for (j, daj) in da.iter().enumerate() {
            let gij = g.ginv[(i, j)];
            if gij != C64::new(0.0, 0.0) {
                acc += &daj.partial(i).expect("direction in range").scale(gij);
            }
        }
    }
    for (j, daj) in da.iter().enumerate() {
        let mut contr = Element::zero(a.backend());
        for k in 0..n {
            for l in 0..n {
                let gkl = g.ginv[(k, l)];
                if gkl != C64::new(0.0, 0.0) {
                    contr += &conn.nabla(j, k, l).scale(gkl);
                }
            }
        }
        acc += &(daj * &contr);
    }
    acc
}

/// Star-preserving check in the flip-braiding case: every `Γ^i_{jk}` must be
/// self-adjoint. Returns `None` when the braiding is not the flip.
pub fn star_preserving_defect(conn: &Connection, tol: f64) -> Option<f64> {
    if !conn.is_flip(tol) {
        return None;
    }
    Some(
        conn.gamma
            .iter()
            .map(|g| (&g.star() - g).norm())
            .fold(0.0, f64::max),
    )
}

/// Summary of the Levi-Civita style checks on a connection.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionReport {
    pub torsion: f64,
    pub cotorsion: f64,
    pub metric_compatibility: f64,
    /// `None` when the braiding is not the flip.
    pub star_preserving: Option<f64>,
}

impl ConnectionReport {
    pub fn is_qlc(&self, tol: f64) -> bool {
        self.torsion <= tol && self.metric_compatibility <= tol
    }

    pub fn is_wqlc(&self, tol: f64) -> bool {
        self.torsion <= tol && self.cotorsion <= tol
    }
}

pub fn connection_report(
    conn: &Connection,
    g: &QuantumMetric,
    c: &Calculus,
    tol: f64,
) -> ConnectionReport {
    ConnectionReport {
        torsion: max_norm(&torsion(conn, c)),
        cotorsion: max_norm(&cotorsion(conn, g, c)),
        metric_compatibility: max_norm(&metric_compatibility(conn, g)),
        star_preserving: star_preserving_defect(conn, tol),
    }
}
