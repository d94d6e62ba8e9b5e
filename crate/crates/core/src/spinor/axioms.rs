//! Local tensorial axioms of a geometrically realised spectral triple.

use crate::algebra::{Element, C64};
use crate::calculus::Calculus;
use crate::geometry::Connection;
use crate::linalg::{conj, CMat, ElemMatrix};

use super::{sgn, SpinorBundle};

/// Residual block: named raw components, complex or algebra valued.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub name: &'static str,
    pub scalars: Vec<C64>,
    pub elems: Vec<Element>,
}

impl Residual {
    pub(crate) fn new(name: &'static str) -> Self {
        Self {
            name,
            scalars: Vec::new(),
            elems: Vec::new(),
        }
    }

    pub(crate) fn push_c(&mut self, m: &CMat) {
        self.scalars.extend(m.iter().copied());
    }

    pub(crate) fn push_e(&mut self, m: &ElemMatrix) {
        self.elems.extend(m.entries().iter().cloned());
    }

    pub fn norm(&self) -> f64 {
        let a = self.scalars.iter().map(|z| z.norm()).fold(0.0, f64::max);
        self.elems.iter().map(Element::norm).fold(a, f64::max)
    }
}

/// Residuals that decide a local tensorial realisation.
pub const PRIMARY_AXIOMS: [&str; 4] = ["JJ", "SJ", "CJ", "covariance"];

/// Named residual norms.
#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub entries: Vec<(String, f64)>,
}

impl AxiomReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().map(|(_, v)| *v).fold(0.0, f64::max)
    }

    /// Largest residual among the named subset (missing names are ignored).
    pub fn max_of(&self, names: &[&str]) -> f64 {
        names.iter().filter_map(|n| self.get(n)).fold(0.0, f64::max)
    }

    /// Largest of the charge-conjugation, connection and even-structure residuals.
    pub fn local_max(&self) -> f64 {
        self.entries
            .iter()
            .filter(|(n, _)| !n.starts_with("inner_"))
            .map(|(_, v)| *v)
            .fold(0.0, f64::max)
    }
}

pub fn jj_block(b: &SpinorBundle) -> Residual {
    let mut r = Residual::new("JJ");
    let ns = b.ns();
    r.push_c(&(conj(&b.j) * &b.j - CMat::identity(ns, ns) * sgn(b.signs.eps)));
    r
}

/// `Σ_i S̄_i J σ_S^i_j - J S_j` for each `j`.
pub fn sj_block(b: &SpinorBundle) -> Residual {
    let mut r = Residual::new("SJ");
    let n = b.n();
    let sbar: Vec<ElemMatrix> = b.s.iter().map(ElemMatrix::star_entries).collect();
    for j in 0..n {
        let mut acc = ElemMatrix::c_mul(&b.j, &b.s[j]).scale(C64::new(-1.0, 0.0));
        for (i, sb) in sbar.iter().enumerate() {
            acc = &acc + &sb.mul_c(&(&b.j * &b.sigma_s[i][j]));
        }
        r.push_e(&acc);
    }
    r
}

/// `C̄^i J - ε′ J σ_S^i_j C^j`.
pub fn cj_block(b: &SpinorBundle) -> Residual {
    let mut r = Residual::new("CJ");
    let n = b.n();
    for i in 0..n {
        let mut rhs = CMat::zeros(b.ns(), b.ns());
        for j in 0..n {
            rhs += &b.sigma_s[i][j] * &b.c[j];
        }
        r.push_c(&(conj(&b.c[i]) * &b.j - &b.j * rhs * sgn(b.signs.eps_prime)));
    }
    r
}

/// `C^i S_j - σ^{ik}_{jl} S_k C^l - N^i_{jk} C^k` with `N = -½Γ`.
pub fn covariance_block(b: &SpinorBundle, conn: &Connection) -> Residual {
    let mut r = Residual::new("covariance");
    let n = b.n();
    for i in 0..n {
        for j in 0..n {
            let mut acc = ElemMatrix::c_mul(&b.c[i], &b.s[j]);
            for k in 0..n {
                for l in 0..n {
                    let s = conn.sigma(i, k, j, l);
                    if s != C64::new(0.0, 0.0) {
                        acc = &acc - &b.s[k].mul_c(&(&b.c[l] * s));
                    }
                }
                let nijk = conn.nabla(i, j, k);
                if !nijk.is_zero(0.0) {
                    acc = &acc - &ElemMatrix::elem_times(&nijk, &b.c[k]);
                }
            }
            r.push_e(&acc);
        }
    }
    r
}

/// Even-structure residuals; empty when the bundle has no γ.
pub fn gamma_blocks(b: &SpinorBundle) -> Vec<Residual> {
    let Some(g) = &b.gamma else { return Vec::new() };
    let ns = b.ns();
    let mut sq = Residual::new("gamma_square");
    sq.push_c(&(g * g - CMat::identity(ns, ns)));
    let mut ac = Residual::new("gamma_anticommute");
    for c in &b.c {
        ac.push_c(&(c * g + g * c));
    }
    let mut gj = Residual::new("gamma_J");
    gj.push_c(&(conj(g) * &b.j - &b.j * g * sgn(b.signs.eps_dprime)));
    let mut gs = Residual::new("gamma_S");
    for s in &b.s {
        gs.push_e(&(&s.mul_c(g) - &ElemMatrix::c_mul(g, s)));
    }
    let mut gss = Residual::new("gamma_sigmaS");
    for row in &b.sigma_s {
        for m in row {
            gss.push_c(&(m * g - g * m));
        }
    }
    let mut ga = Residual::new("gamma_A");
    if let Some(a) = &b.a {
        for m in a {
            ga.push_c(&(m * g - g * m));
        }
    }
    vec![sq, ac, gj, gs, gss, ga]
}

/// Reductions valid when both connections are of inner form.
pub fn inner_blocks(b: &SpinorBundle, conn: &Connection) -> Vec<Residual> {
    let n = b.n();
    let ns = b.ns();
    let mut cov = Residual::new("inner_covariance");
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut acc = &b.c[i] * &b.sigma_s[k][j];
                for m in 0..n {
                    for l in 0..n {
                        let s = conn.sigma(i, m, j, l);
                        if s != C64::new(0.0, 0.0) {
                            acc -= &b.sigma_s[k][m] * &b.c[l] * s;
                        }
                    }
                }
                cov.push_c(&acc);
            }
        }
    }
    let mut sj = Residual::new("inner_SJ");
    for j in 0..n {
        for k in 0..n {
            let mut acc = if j == k {
                b.j.clone()
            } else {
                CMat::zeros(ns, ns)
            };
            for i in 0..n {
                acc -= conj(&b.sigma_s[k][i]) * &b.j * &b.sigma_s[i][j];
            }
            sj.push_c(&acc);
        }
    }
    let mut ca = Residual::new("inner_CA");
    let mut ja = Residual::new("inner_JA");
    if let Some(a) = &b.a {
        for i in 0..n {
            for j in 0..n {
                let mut acc = &b.c[i] * &a[j];
                for k in 0..n {
                    for l in 0..n {
                        let s = conn.sigma(i, k, j, l);
                        if s != C64::new(0.0, 0.0) {
                            acc -= &a[k] * &b.c[l] * s;
                        }
                    }
                }
                ca.push_c(&acc);
            }
        }
        for j in 0..n {
            let mut acc = &b.j * &a[j];
            for i in 0..n {
                acc -= conj(&a[i]) * &b.j * &b.sigma_s[i][j];
            }
            ja.push_c(&acc);
        }
    }
    vec![cov, sj, ca, ja]
}

/// All residual blocks with raw components.
pub fn axiom_residual_blocks(b: &SpinorBundle, conn: &Connection, c: &Calculus) -> Vec<Residual> {
    let mut out = vec![
        jj_block(b),
        sj_block(b),
        cj_block(b),
        covariance_block(b, conn),
    ];
    out.extend(gamma_blocks(b));
    if c.is_inner() {
        out.extend(inner_blocks(b, conn));
    }
    out
}

pub fn axiom_residuals(b: &SpinorBundle, conn: &Connection, c: &Calculus) -> AxiomReport {
    AxiomReport {
        entries: axiom_residual_blocks(b, conn, c)
            .iter()
            .map(|r| (r.name.to_string(), r.norm()))
            .collect(),
    }
}
