use crate::algebra::{Element, C64};
use crate::geometry::{scalar_laplacian, Connection, QuantumMetric};
use crate::linalg::ElemMatrix;

use super::{Spinor, SpinorBundle};

/// `(D̸ψ)_γ = (∂_i ψ_α + ψ_β S_i[β][α]) C^i[α][γ]`.
pub fn dirac_apply(b: &SpinorBundle, psi: &[Element]) -> Spinor {
    let ns = b.ns();
    let mut out = vec![Element::zero(b.backend); ns];
    for i in 0..b.n() {
        for alpha in 0..ns {
            let mut cov = psi[alpha].partial(i).expect("direction in range");
            for (beta, p) in psi.iter().enumerate() {
                let s = &b.s[i][(beta, alpha)];
                if !s.is_zero(0.0) && !p.is_zero(0.0) {
                    cov += &(p * s);
                }
            }
            if cov.is_zero(0.0) {
                continue;
            }
            for (gm, o) in out.iter_mut().enumerate() {
                let z = b.c[i][(alpha, gm)];
                if z != C64::new(0.0, 0.0) {
                    *o += &cov.scale(z);
                }
            }
        }
    }
    out
}

/// Coefficients of the expanded spinor Laplacian: the zeroth-order matrix `L`
/// and `h[i][j] = g^{ij} + g^{kl} σ^{ij}_{kl}` multiplying `(∂_i ψ) S_j`.
pub fn laplacian_coefficients(
    b: &SpinorBundle,
    conn: &Connection,
    g: &QuantumMetric,
) -> (ElemMatrix, Vec<Vec<C64>>) {
    let n = b.n();
    let ns = b.ns();
    let mut gs = vec![vec![C64::new(0.0, 0.0); n]; n];
    for (i, row) in gs.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            for k in 0..n {
                for l in 0..n {
                    *v += g.ginv[(k, l)] * conn.sigma(i, j, k, l);
                }
            }
        }
    }
    let mut l = ElemMatrix::zeros(b.backend, ns, ns);
    for i in 0..n {
        for j in 0..n {
            let gij = g.ginv[(i, j)];
            if gij != C64::new(0.0, 0.0) {
                l = &l + &b.s[j].map(|e| e.partial(i).expect("direction in range").scale(gij));
            }
            if gs[i][j] != C64::new(0.0, 0.0) {
                l = &l + &b.s[i].mul(&b.s[j]).scale(gs[i][j]);
            }
        }
    }
    for j in 0..n {
        let mut contr = Element::zero(b.backend);
        for k in 0..n {
            for m in 0..n {
                contr += &conn.nabla(j, k, m).scale(g.ginv[(k, m)]);
            }
        }
        if !contr.is_zero(0.0) {
            l = &l + &b.s[j].map(|e| e * &contr);
        }
    }
    let h = (0..n)
        .map(|i| (0..n).map(|j| g.ginv[(i, j)] + gs[i][j]).collect())
        .collect();
    (l, h)
}

/// `(□_Sψ)_α = □ψ_α + ψ_β L^β_α + (∂_i ψ_β) h[i][j] S_j[β][α]`.
pub fn spinor_laplacian(
    b: &SpinorBundle,
    conn: &Connection,
    g: &QuantumMetric,
    psi: &[Element],
) -> Spinor {
    let (l, h) = laplacian_coefficients(b, conn, g);
    let n = b.n();
    let ns = b.ns();
    let dpsi: Vec<Vec<Element>> = (0..n)
        .map(|i| {
            psi.iter()
                .map(|p| p.partial(i).expect("direction in range"))
                .collect()
        })
        .collect();
    (0..ns)
        .map(|alpha| {
            let mut acc = scalar_laplacian(&psi[alpha], conn, g);
            for beta in 0..ns {
                acc += &(&psi[beta] * &l[(beta, alpha)]);
                for i in 0..n {
                    for j in 0..n {
                        if h[i][j] != C64::new(0.0, 0.0) {
                            acc += &(&dpsi[i][beta] * &b.s[j][(beta, alpha)]).scale(h[i][j]);
                        }
                    }
                }
            }
            acc
        })
        .collect()
}
