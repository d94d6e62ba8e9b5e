//! Hilbert-space level: operator matrices on a truncated basis, the inner
//! product defined by a measure `μ`, adjoint defects and spectra.

use nalgebra::{Schur, SymmetricEigen};

use crate::algebra::{Backend, Element, C64, I};
use crate::linalg::{conj, inverse, max_abs, CMat};

use super::dirac::dirac_apply;
use super::{sgn, Signs, SpinorBundle, SpinorError};

/// Dense matrix of an operator; column `k` is the image of basis spinor `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub matrix: CMat,
    /// Columns whose image has components outside the truncation window.
    pub leaked_columns: Vec<usize>,
}

impl OperatorMatrix {
    pub fn leaks(&self) -> bool {
        !self.leaked_columns.is_empty()
    }
}

fn check_window(backend: Backend, window: i32) -> Result<(), SpinorError> {
    match backend {
        Backend::Torus { .. } if window < 1 => Err(SpinorError::Truncation),
        _ => Ok(()),
    }
}

/// Coordinates in `Element::basis` order plus the size of anything outside it.
fn coordinates(e: &Element, window: i32) -> (Vec<C64>, f64) {
    match e {
        Element::Matrix2(m) => (vec![m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]], 0.0),
        Element::Torus(l) => {
            let side = (2 * window + 1) as usize;
            let mut out = vec![C64::new(0.0, 0.0); side * side];
            let mut leak: f64 = 0.0;
            for ((m, n), v) in l.terms() {
                if m.abs() <= window && n.abs() <= window {
                    out[(m + window) as usize * side + (n + window) as usize] = v;
                } else {
                    leak = leak.max(v.norm());
                }
            }
            (out, leak)
        }
    }
}

fn basis_spinor(a: &Element, alpha: usize, ns: usize) -> Vec<Element> {
    let mut psi = vec![Element::zero(a.backend()); ns];
    psi[alpha] = a.clone();
    psi
}

/// Matrix of `f` on the basis `{e_a ⊗ e^α}` indexed `a·N_s + α`.
pub fn operator_matrix(
    b: &SpinorBundle,
    window: i32,
    f: impl Fn(&[Element]) -> Vec<Element>,
) -> Result<OperatorMatrix, SpinorError> {
    check_window(b.backend, window)?;
    let ns = b.ns();
    let basis = Element::basis(b.backend, window);
    let dim = basis.len() * ns;
    let mut matrix = CMat::zeros(dim, dim);
    let mut leaked_columns = Vec::new();
    for (ai, a) in basis.iter().enumerate() {
        for alpha in 0..ns {
            let col = ai * ns + alpha;
            let image = f(&basis_spinor(a, alpha, ns));
            let mut leak: f64 = 0.0;
            for (beta, comp) in image.iter().enumerate() {
                let (coords, l) = coordinates(comp, window);
                leak = leak.max(l);
                for (bi, z) in coords.into_iter().enumerate() {
                    matrix[(bi * ns + beta, col)] = z;
                }
            }
            if leak > 0.0 {
                leaked_columns.push(col);
            }
        }
    }
    Ok(OperatorMatrix {
        matrix,
        leaked_columns,
    })
}

pub fn dirac_matrix(b: &SpinorBundle, window: i32) -> Result<OperatorMatrix, SpinorError> {
    operator_matrix(b, window, |psi| dirac_apply(b, psi))
}

/// `⟨φ, ψ⟩ = Σ ∫ φ_α* ψ_β μ^{αβ}`.
pub fn inner_product(b: &SpinorBundle, phi: &[Element], psi: &[Element]) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (alpha, p) in phi.iter().enumerate() {
        let ps = p.star();
        for (beta, q) in psi.iter().enumerate() {
            let m = b.mu[(alpha, beta)];
            if m != C64::new(0.0, 0.0) {
                acc += (&ps * q).integral() * m;
            }
        }
    }
    acc
}

/// Gram matrix `G[(a,α),(b,β)] = ∫(e_a* e_b) μ^{αβ}`.
pub fn gram_matrix(b: &SpinorBundle, window: i32) -> Result<CMat, SpinorError> {
    check_window(b.backend, window)?;
    let basis = Element::basis(b.backend, window);
    let ns = b.ns();
    let dim = basis.len() * ns;
    let mut g = CMat::zeros(dim, dim);
    for (ai, a) in basis.iter().enumerate() {
        let astar = a.star();
        for (bi, e) in basis.iter().enumerate() {
            let z = (&astar * e).integral();
            if z == C64::new(0.0, 0.0) {
                continue;
            }
            for alpha in 0..ns {
                for beta in 0..ns {
                    g[(ai * ns + alpha, bi * ns + beta)] = z * b.mu[(alpha, beta)];
                }
            }
        }
    }
    Ok(g)
}

/// Adjoint `G⁻¹ Mᴴ G` with respect to the Gram matrix.
pub fn adjoint(m: &CMat, gram: &CMat) -> Option<CMat> {
    inverse(gram).map(|gi| gi * m.adjoint() * gram)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjointDefects {
    /// `‖M‡ + M‖`.
    pub antihermitian: f64,
    /// `‖M‡ - M‖`.
    pub hermitian: f64,
}

pub fn adjoint_defects(m: &CMat, gram: &CMat) -> Option<AdjointDefects> {
    let a = adjoint(m, gram)?;
    Some(AdjointDefects {
        antihermitian: max_abs(&(&a + m)),
        hermitian: max_abs(&(&a - m)),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Eigenvalues of `iD̸` sorted by real then imaginary part.
    pub values: Vec<C64>,
    /// Distinct values with multiplicities.
    pub multiplicities: Vec<(C64, usize)>,
    pub leaked_columns: Vec<usize>,
    /// `true` when `iD̸` was self-adjoint and a hermitian eigensolver was used.
    pub hermitian: bool,
}

const HERMITIAN_SWITCH: f64 = 1e-9;
const CLUSTER: f64 = 1e-8;

fn sqrt_and_inverse_sqrt(g: &CMat) -> Option<(CMat, CMat)> {
    let h = (g + g.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return None;
    }
    let v = &eig.eigenvectors;
    let diag =
        |f: fn(f64) -> f64| CMat::from_diagonal(&eig.eigenvalues.map(|l| C64::new(f(l), 0.0)));
    let s = v * diag(f64::sqrt) * v.adjoint();
    let si = v * diag(|l| 1.0 / l.sqrt()) * v.adjoint();
    Some((s, si))
}

/// Eigenvalues of a square complex matrix, hermitian with respect to `gram` if possible.
pub fn eigenvalues(m: &CMat, gram: &CMat) -> (Vec<C64>, bool) {
    if m.nrows() == 0 {
        return (Vec::new(), true);
    }
    let herm = adjoint(m, gram)
        .map(|a| max_abs(&(a - m)))
        .is_some_and(|d| d < HERMITIAN_SWITCH * (1.0 + max_abs(m)));
    if herm {
        if let Some((s, si)) = sqrt_and_inverse_sqrt(gram) {
            let h = &s * m * &si;
            let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
            let vals = SymmetricEigen::new(h)
                .eigenvalues
                .iter()
                .map(|&l| C64::new(l, 0.0))
                .collect();
            return (vals, true);
        }
    }
    let vals = Schur::try_new(m.clone(), f64::EPSILON, 100_000)
        .map(|s| s.unpack().1.diagonal().iter().copied().collect())
        .unwrap_or_else(|| {
            m.clone()
                .schur()
                .unpack()
                .1
                .diagonal()
                .iter()
                .copied()
                .collect()
        });
    (vals, false)
}

fn sort_and_group(mut values: Vec<C64>) -> (Vec<C64>, Vec<(C64, usize)>) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut groups: Vec<(C64, usize)> = Vec::new();
    for &v in &values {
        match groups.last_mut() {
            Some((rep, k)) if (*rep - v).norm() < CLUSTER => *k += 1,
            _ => groups.push((v, 1)),
        }
    }
    (values, groups)
}

/// Sorted eigenvalues of `iD̸` on the truncated space.
pub fn spectrum(b: &SpinorBundle, window: i32) -> Result<Spectrum, SpinorError> {
    let op = dirac_matrix(b, window)?;
    let gram = gram_matrix(b, window)?;
    let (vals, hermitian) = eigenvalues(&(&op.matrix * I), &gram);
    let (values, multiplicities) = sort_and_group(vals);
    Ok(Spectrum {
        values,
        multiplicities,
        leaked_columns: op.leaked_columns,
        hermitian,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HilbertReport {
    pub dirac: AdjointDefects,
    /// Coefficient-level test, available when every `S_i` is constant.
    pub algebraic_dirac: Option<AdjointDefects>,
    /// `‖ε μ Jᵀ - J μ‖`.
    pub j_isometry_algebraic: f64,
    /// Largest defect of `⟨𝒥ψ, 𝒥φ⟩ = ⟨φ, ψ⟩` over basis pairs.
    pub j_isometry_sampled: f64,
    /// `‖γ‡ - γ‖` on the truncated space.
    pub gamma_hermitian: Option<f64>,
    /// `‖γD̸ + D̸γ‖` on the truncated space.
    pub gamma_dirac_anticommute: Option<f64>,
    pub leaked_columns: Vec<usize>,
    pub signs: Signs,
    /// Signs as read for the self-adjoint operator `iD̸`.
    pub hermitian_signs: Signs,
}

/// `(𝒥ψ)_β = Σ_α ψ_α* J^α_β`.
pub fn charge_conjugate(b: &SpinorBundle, psi: &[Element]) -> Vec<Element> {
    let ns = b.ns();
    (0..ns)
        .map(|beta| {
            let mut acc = Element::zero(b.backend);
            for (alpha, p) in psi.iter().enumerate() {
                let z = b.j[(alpha, beta)];
                if z != C64::new(0.0, 0.0) {
                    acc += &p.star().scale(z);
                }
            }
            acc
        })
        .collect()
}

fn algebraic_dirac(b: &SpinorBundle) -> Option<AdjointDefects> {
    let s = b.constant_connection(1e-14)?;
    let mu = &b.mu;
    let mut ah: f64 = 0.0;
    let mut h: f64 = 0.0;
    for ci in &b.c {
        // derivative part: antihermitian iff C̄ μ = μ Cᵀ
        ah = ah.max(max_abs(&(conj(ci) * mu - mu * ci.transpose())));
        h = h.max(max_abs(&(conj(ci) * mu + mu * ci.transpose())));
    }
    let mut k = CMat::zeros(b.ns(), b.ns());
    for (si, ci) in s.iter().zip(&b.c) {
        k += si * ci;
    }
    ah = ah.max(max_abs(&(conj(&k) * mu + mu * k.transpose())));
    h = h.max(max_abs(&(conj(&k) * mu - mu * k.transpose())));
    Some(AdjointDefects {
        antihermitian: ah,
        hermitian: h,
    })
}

pub fn hilbert_checks(b: &SpinorBundle, window: i32) -> Result<HilbertReport, SpinorError> {
    let op = dirac_matrix(b, window)?;
    let gram = gram_matrix(b, window)?;
    let dirac = adjoint_defects(&op.matrix, &gram)
        .ok_or_else(|| SpinorError::Shape("measure gives a singular Gram matrix".into()))?;

    let j_isometry_algebraic =
        max_abs(&(&b.mu * b.j.transpose() * sgn(b.signs.eps) - &b.j * &b.mu));

    let ns = b.ns();
    let sample: Vec<Vec<Element>> = Element::basis(b.backend, window.min(1))
        .iter()
        .flat_map(|a| (0..ns).map(move |alpha| basis_spinor(a, alpha, ns)))
        .collect();
    let conjugated: Vec<Vec<Element>> = sample.iter().map(|p| charge_conjugate(b, p)).collect();
    let mut j_isometry_sampled: f64 = 0.0;
    for (p, jp) in sample.iter().zip(&conjugated) {
        for (q, jq) in sample.iter().zip(&conjugated) {
            let d = inner_product(b, jp, jq) - inner_product(b, q, p);
            j_isometry_sampled = j_isometry_sampled.max(d.norm());
        }
    }

    let (gamma_hermitian, gamma_dirac_anticommute) = match &b.gamma {
        Some(g) => {
            let gm = operator_matrix(b, window, |psi| {
                (0..ns)
                    .map(|beta| {
                        let mut acc = Element::zero(b.backend);
                        for (alpha, p) in psi.iter().enumerate() {
                            acc += &p.scale(g[(alpha, beta)]);
                        }
                        acc
                    })
                    .collect()
            })?
            .matrix;
            let herm = adjoint(&gm, &gram).map(|a| max_abs(&(a - &gm)));
            let anti = max_abs(&(&gm * &op.matrix + &op.matrix * &gm));
            (herm, Some(anti))
        }
        None => (None, None),
    };

    Ok(HilbertReport {
        dirac,
        algebraic_dirac: algebraic_dirac(b),
        j_isometry_algebraic,
        j_isometry_sampled,
        gamma_hermitian,
        gamma_dirac_anticommute,
        leaked_columns: op.leaked_columns,
        signs: b.signs,
        hermitian_signs: b.signs.hermitian_reading(),
    })
}
