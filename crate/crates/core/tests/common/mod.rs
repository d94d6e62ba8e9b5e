//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls the library's expanded formulas. The spinor Laplacian
//! and curvature are rebuilt by composing connections literally, and spectra
//! are recomputed from matrices assembled by hand.
#![allow(dead_code)]

use nalgebra::{DMatrix, Matrix2};
use qrg_core::algebra::{Backend, Element, C64};
use qrg_core::calculus::{Calculus, OneForm};
use qrg_core::geometry::{Connection, QuantumMetric};
use qrg_core::linalg::CMat;
use qrg_core::SpinorBundle;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

pub fn cn<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-ish random unitary from the QR factor of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let a = CMat::from_fn(n, n, |_, _| cn(rng));
    let qr = a.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = CMat::from_diagonal(&r.diagonal().map(|z| {
        if z.norm() > 0.0 {
            z / z.norm()
        } else {
            C64::new(1.0, 0.0)
        }
    }));
    q * phases
}

pub fn random_spinor<R: Rng + ?Sized>(b: &SpinorBundle, window: i32, rng: &mut R) -> Vec<Element> {
    (0..b.ns())
        .map(|_| Element::random(b.backend, window, rng))
        .collect()
}

pub fn max_diff(a: &[Element], b: &[Element]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Spinor times element-valued matrix: `(ψM)_α = Σ_β ψ_β M[β][α]`.
fn times(psi: &[Element], m: &qrg_core::linalg::ElemMatrix) -> Vec<Element> {
    (0..m.cols())
        .map(|a| {
            let mut acc = Element::zero(psi[0].backend());
            for (beta, p) in psi.iter().enumerate() {
                acc += &(p * &m[(beta, a)]);
            }
            acc
        })
        .collect()
}

/// `χ_i = ∂_iψ + ψS_i`, the components of `∇_Sψ = s^i ⊗ χ_i`.
fn covariant(b: &SpinorBundle, psi: &[Element]) -> Vec<Vec<Element>> {
    (0..b.n())
        .map(|i| {
            let ps = times(psi, &b.s[i]);
            psi.iter()
                .zip(ps)
                .map(|(p, q)| &p.partial(i).unwrap() + &q)
                .collect()
        })
        .collect()
}

/// `□_S = ( , )∇_{Ω¹⊗S}∇_S` by direct composition, with
/// `∇(χ s^i ⊗ e^α) = dχ ⊗ s^i ⊗ e^α + χ ∇s^i ⊗ e^α + χ σ(s^i ⊗ s^m) ⊗ S_m e^α`.
pub fn spinor_laplacian_direct(
    b: &SpinorBundle,
    conn: &Connection,
    g: &QuantumMetric,
    psi: &[Element],
) -> Vec<Element> {
    let n = b.n();
    let ns = b.ns();
    let chi = covariant(b, psi);
    let mut out = vec![Element::zero(b.backend); ns];
    for (gm, o) in out.iter_mut().enumerate() {
        for j in 0..n {
            for k in 0..n {
                let gjk = g.ginv[(j, k)];
                // dχ_k paired with s^k
                *o += &chi[k][gm].partial(j).unwrap().scale(gjk);
                // ∇s^i = N^i_{jk} s^j ⊗ s^k
                for (i, ch) in chi.iter().enumerate() {
                    *o += &(&ch[gm] * &conn.nabla(i, j, k)).scale(gjk);
                }
            }
        }
        for (i, ch) in chi.iter().enumerate() {
            for m in 0..n {
                let mut w = zero();
                for k in 0..n {
                    for l in 0..n {
                        w += conn.sigma(i, m, k, l) * g.ginv[(k, l)];
                    }
                }
                if w == zero() {
                    continue;
                }
                for (alpha, c) in ch.iter().enumerate() {
                    *o += &(c * &b.s[m][(alpha, gm)]).scale(w);
                }
            }
        }
    }
    out
}

/// `ψ ↦ ▷R_{∇_S}(ψ)` with `R = (d ⊗ id - id ∧ ∇_S)∇_S` computed on forms and
/// Vol acting through `vol`. Valid for a one-dimensional top degree.
pub fn curvature_direct(
    b: &SpinorBundle,
    calc: &Calculus,
    vol: &CMat,
    psi: &[Element],
) -> Vec<Element> {
    let n = b.n();
    let ns = b.ns();
    let chi = covariant(b, psi);
    let f: Vec<Element> = (0..ns)
        .map(|gm| {
            let form = OneForm((0..n).map(|i| chi[i][gm].clone()).collect());
            let mut acc = calc.d1(&form).unwrap().0;
            for (i, ch) in chi.iter().enumerate() {
                for m in 0..n {
                    let w = calc.wedge[i][m];
                    if w == zero() {
                        continue;
                    }
                    for (alpha, c) in ch.iter().enumerate() {
                        acc -= &(c * &b.s[m][(alpha, gm)]).scale(w);
                    }
                }
            }
            acc
        })
        .collect();
    (0..ns)
        .map(|d| {
            let mut acc = Element::zero(b.backend);
            for (gm, fg) in f.iter().enumerate() {
                acc += &fg.scale(vol[(gm, d)]);
            }
            acc
        })
        .collect()
}

/// Action of Vol on spinors read off from `C^jC^iφ - κg^{ij} = W^{ij} V`.
pub fn vol_action(b: &SpinorBundle, g: &QuantumMetric, calc: &Calculus, phi: &CMat) -> CMat {
    for i in 0..b.n() {
        for j in 0..b.n() {
            let w = calc.wedge[i][j];
            if w != zero() {
                let id = CMat::identity(b.ns(), b.ns());
                return (&b.c[j] * &b.c[i] * phi - id * (b.kappa * g.ginv[(i, j)])) / w;
            }
        }
    }
    panic!("calculus has no nonzero wedge");
}

/// Sorted `±√(m² + n²)` over `|m|, |n| ≤ window`, each lattice point once per sign.
pub fn torus_lattice_spectrum(window: i32) -> Vec<f64> {
    let mut out = Vec::new();
    for m in -window..=window {
        for n in -window..=window {
            let r = f64::from(m * m + n * n).sqrt();
            out.push(r);
            out.push(-r);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Number of lattice points with `m² + n² = r2` inside the window.
pub fn lattice_count(window: i32, r2: i32) -> usize {
    let mut k = 0;
    for m in -window..=window {
        for n in -window..=window {
            if m * m + n * n == r2 {
                k += 1;
            }
        }
    }
    k
}

fn inner_derivation(i: usize, a: &Matrix2<C64>) -> Matrix2<C64> {
    let s = qrg_core::algebra::pauli(i + 1);
    (s * a - a * s) * C64::new(0.0, 0.5)
}

/// `iD̸` on `M_2 ⊗ C^{N_s}` assembled from matrix units, column `a·N_s + α`.
pub fn m2_dirac_dense(b: &SpinorBundle) -> DMatrix<C64> {
    let ns = b.ns();
    let dim = 4 * ns;
    let mut out = DMatrix::zeros(dim, dim);
    for a in 0..4 {
        let mut unit = Matrix2::zeros();
        unit[(a / 2, a % 2)] = C64::new(1.0, 0.0);
        for alpha in 0..ns {
            let col = a * ns + alpha;
            let mut image = vec![Matrix2::<C64>::zeros(); ns];
            for i in 0..b.n() {
                let mut cov = vec![Matrix2::<C64>::zeros(); ns];
                cov[alpha] += inner_derivation(i, &unit);
                for (beta, cb) in cov.iter_mut().enumerate() {
                    let s = b.s[i][(alpha, beta)].as_matrix().expect("matrix backend");
                    *cb += unit * s;
                }
                for (beta, cb) in cov.iter().enumerate() {
                    for (gm, im) in image.iter_mut().enumerate() {
                        *im += cb * b.c[i][(beta, gm)];
                    }
                }
            }
            for (gm, im) in image.iter().enumerate() {
                for r in 0..4 {
                    out[(r * ns + gm, col)] = im[(r / 2, r % 2)] * C64::new(0.0, 1.0);
                }
            }
        }
    }
    out
}

pub fn sorted_re(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

pub fn torus_backend(theta: f64) -> Backend {
    Backend::Torus { theta }
}
