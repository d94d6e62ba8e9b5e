//! Coordinate algebras: 2×2 complex matrices and the algebraic noncommutative torus.
//!
//! Both backends carry a star structure, the two basic derivations `∂_0, ∂_1`
//! dual to the central self-adjoint 1-form basis, and a normalised trace.
//!
//! * `Matrix2`: `∂_i a = (i/2)[σ_{i+1}, a]` and `∫ a = ½ Tr a`.
//! * `Torus`: Laurent polynomials in unitaries `u, v` with `v u = e^{iθ} u v`,
//!   `∂_0 (u^m v^n) = i m u^m v^n`, `∂_1 (u^m v^n) = i n u^m v^n` and
//!   `∫ u^m v^n = δ_{m0} δ_{n0}`.
//!
//! Direction indices are zero-based throughout the crate.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tol::PRUNE;

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("backend mismatch: {0} vs {1}")]
    BackendMismatch(Backend, Backend),
    #[error("direction index {0} out of range (calculus has 2 directions)")]
    DirectionOutOfRange(usize),
}

/// Which coordinate algebra an element lives in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    Matrix2,
    /// Deformation angle in radians.
    Torus {
        theta: f64,
    },
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::Matrix2 => write!(f, "M2(C)"),
            Backend::Torus { theta } => write!(f, "C_theta[T^2](theta={theta})"),
        }
    }
}

/// Pauli matrices, index 0 is the identity.
pub fn pauli(k: usize) -> Matrix2<C64> {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    match k {
        0 => Matrix2::new(o, z, z, o),
        1 => Matrix2::new(z, o, o, z),
        2 => Matrix2::new(z, -I, I, z),
        3 => Matrix2::new(o, z, z, -o),
        _ => panic!("pauli index {k} out of range"),
    }
}

/// Finitely supported Laurent polynomial `Σ c_{mn} u^m v^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Laurent {
    theta: f64,
    coeffs: BTreeMap<(i32, i32), C64>,
}

impl Laurent {
    pub fn zero(theta: f64) -> Self {
        Self {
            theta,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn monomial(theta: f64, m: i32, n: i32, coeff: C64) -> Self {
        let mut out = Self::zero(theta);
        out.insert(m, n, coeff);
        out
    }

    pub fn from_terms(theta: f64, terms: impl IntoIterator<Item = ((i32, i32), C64)>) -> Self {
        let mut out = Self::zero(theta);
        for ((m, n), v) in terms {
            out.insert(m, n, v);
        }
        out
    }

    fn insert(&mut self, m: i32, n: i32, v: C64) {
        let e = self.coeffs.entry((m, n)).or_insert(C64::new(0.0, 0.0));
        *e += v;
        if e.norm() < PRUNE {
            self.coeffs.remove(&(m, n));
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn coeff(&self, m: i32, n: i32) -> C64 {
        self.coeffs.get(&(m, n)).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = ((i32, i32), C64)> + '_ {
        self.coeffs.iter().map(|(k, v)| (*k, *v))
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    /// Largest `max(|m|, |n|)` over the support, 0 for the zero polynomial.
    pub fn degree(&self) -> i32 {
        self.coeffs
            .keys()
            .map(|(m, n)| m.abs().max(n.abs()))
            .max()
            .unwrap_or(0)
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.theta);
        for (&(m, n), &a) in &self.coeffs {
            for (&(p, q), &b) in &other.coeffs {
                // v^n u^p = e^{iθ n p} u^p v^n
                let phase = C64::from_polar(1.0, self.theta * f64::from(n) * f64::from(p));
                out.insert(m + p, n + q, a * b * phase);
            }
        }
        out
    }

    fn star(&self) -> Self {
        let mut out = Self::zero(self.theta);
        for (&(m, n), &a) in &self.coeffs {
            let phase = C64::from_polar(1.0, self.theta * f64::from(m) * f64::from(n));
            out.insert(-m, -n, a.conj() * phase);
        }
        out
    }
}

/// Element of one of the two coordinate algebras.
#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Matrix2(Matrix2<C64>),
    Torus(Laurent),
}

impl Element {
    pub fn zero(backend: Backend) -> Self {
        match backend {
            Backend::Matrix2 => Element::Matrix2(Matrix2::zeros()),
            Backend::Torus { theta } => Element::Torus(Laurent::zero(theta)),
        }
    }

    pub fn one(backend: Backend) -> Self {
        Self::scalar(backend, C64::new(1.0, 0.0))
    }

    pub fn scalar(backend: Backend, v: C64) -> Self {
        match backend {
            Backend::Matrix2 => Element::Matrix2(pauli(0) * v),
            Backend::Torus { theta } => Element::Torus(Laurent::monomial(theta, 0, 0, v)),
        }
    }

    /// `Σ_k coeffs[k] σ_k` with `σ_0 = 1`.
    pub fn from_pauli(coeffs: [C64; 4]) -> Self {
        let mut m = Matrix2::zeros();
        for (k, v) in coeffs.iter().enumerate() {
            m += pauli(k) * *v;
        }
        Element::Matrix2(m)
    }

    pub fn sigma(k: usize) -> Self {
        Element::Matrix2(pauli(k))
    }

    pub fn monomial(theta: f64, m: i32, n: i32, coeff: C64) -> Self {
        Element::Torus(Laurent::monomial(theta, m, n, coeff))
    }

    pub fn backend(&self) -> Backend {
        match self {
            Element::Matrix2(_) => Backend::Matrix2,
            Element::Torus(l) => Backend::Torus { theta: l.theta },
        }
    }

    pub fn as_matrix(&self) -> Option<&Matrix2<C64>> {
        match self {
            Element::Matrix2(m) => Some(m),
            Element::Torus(_) => None,
        }
    }

    pub fn as_laurent(&self) -> Option<&Laurent> {
        match self {
            Element::Torus(l) => Some(l),
            Element::Matrix2(_) => None,
        }
    }

    /// Pauli coefficients `(a_0, a_1, a_2, a_3)` of a matrix element.
    pub fn to_pauli(&self) -> Option<[C64; 4]> {
        let m = self.as_matrix()?;
        let mut out = [C64::new(0.0, 0.0); 4];
        for (k, o) in out.iter_mut().enumerate() {
            *o = (pauli(k) * m).trace() * 0.5;
        }
        Some(out)
    }

    fn check(&self, other: &Self) -> Result<(), AlgebraError> {
        let (a, b) = (self.backend(), other.backend());
        if a == b {
            Ok(())
        } else {
            Err(AlgebraError::BackendMismatch(a, b))
        }
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check(other)?;
        Ok(match (self, other) {
            (Element::Matrix2(a), Element::Matrix2(b)) => Element::Matrix2(a * b),
            (Element::Torus(a), Element::Torus(b)) => Element::Torus(a.mul(b)),
            _ => unreachable!(),
        })
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check(other)?;
        Ok(match (self, other) {
            (Element::Matrix2(a), Element::Matrix2(b)) => Element::Matrix2(a + b),
            (Element::Torus(a), Element::Torus(b)) => {
                let mut out = a.clone();
                for (k, v) in b.terms() {
                    out.insert(k.0, k.1, v);
                }
                Element::Torus(out)
            }
            _ => unreachable!(),
        })
    }

    pub fn scale(&self, s: C64) -> Self {
        match self {
            Element::Matrix2(a) => Element::Matrix2(a * s),
            Element::Torus(l) => {
                let mut out = Laurent::zero(l.theta);
                for (k, v) in l.terms() {
                    out.insert(k.0, k.1, v * s);
                }
                Element::Torus(out)
            }
        }
    }

    pub fn star(&self) -> Self {
        match self {
            Element::Matrix2(a) => Element::Matrix2(a.adjoint()),
            Element::Torus(l) => Element::Torus(l.star()),
        }
    }

    /// Basic derivation along direction `i` (0 or 1).
    pub fn partial(&self, i: usize) -> Result<Self, AlgebraError> {
        if i > 1 {
            return Err(AlgebraError::DirectionOutOfRange(i));
        }
        Ok(match self {
            Element::Matrix2(a) => {
                let s = pauli(i + 1);
                Element::Matrix2((s * a - a * s) * (I * 0.5))
            }
            Element::Torus(l) => {
                let mut out = Laurent::zero(l.theta);
                for ((m, n), v) in l.terms() {
                    let k = if i == 0 { m } else { n };
                    out.insert(m, n, v * I * f64::from(k));
                }
                Element::Torus(out)
            }
        })
    }

    /// Normalised trace: `½ Tr` on matrices, constant term on the torus.
    pub fn integral(&self) -> C64 {
        match self {
            Element::Matrix2(a) => a.trace() * 0.5,
            Element::Torus(l) => l.coeff(0, 0),
        }
    }

    /// Max-abs over matrix entries or Laurent coefficients.
    pub fn norm(&self) -> f64 {
        match self {
            Element::Matrix2(a) => a.iter().map(|z| z.norm()).fold(0.0, f64::max),
            Element::Torus(l) => l.terms().map(|(_, v)| v.norm()).fold(0.0, f64::max),
        }
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.norm() <= tol
    }

    /// Scalar value if the element is a multiple of the unit (within `tol`).
    pub fn as_scalar(&self, tol: f64) -> Option<C64> {
        let z = self.integral();
        let rest = self - &Element::scalar(self.backend(), z);
        rest.is_zero(tol).then_some(z)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        &(self * other) + &(other * self)
    }

    /// Vector-space basis used for matrix assembly and sampled checks.
    ///
    /// Matrix units `E_{00}, E_{01}, E_{10}, E_{11}` for `Matrix2`; monomials
    /// with `|m|, |n| ≤ window` in lexicographic `(m, n)` order for the torus.
    pub fn basis(backend: Backend, window: i32) -> Vec<Element> {
        match backend {
            Backend::Matrix2 => (0..4)
                .map(|k| {
                    let mut m = Matrix2::zeros();
                    m[(k / 2, k % 2)] = C64::new(1.0, 0.0);
                    Element::Matrix2(m)
                })
                .collect(),
            Backend::Torus { theta } => {
                let mut out = Vec::new();
                for m in -window..=window {
                    for n in -window..=window {
                        out.push(Element::monomial(theta, m, n, C64::new(1.0, 0.0)));
                    }
                }
                out
            }
        }
    }

    /// Random element with standard-normal complex coefficients.
    ///
    /// Torus elements are supported on `|m|, |n| ≤ window`.
    pub fn random<R: Rng + ?Sized>(backend: Backend, window: i32, rng: &mut R) -> Self {
        let mut draw = || C64::new(rng.sample(StandardNormal), StandardNormal.sample(rng));
        match backend {
            Backend::Matrix2 => Element::Matrix2(Matrix2::from_fn(|_, _| draw())),
            Backend::Torus { theta } => {
                let mut out = Laurent::zero(theta);
                for m in -window..=window {
                    for n in -window..=window {
                        out.insert(m, n, draw());
                    }
                }
                Element::Torus(out)
            }
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Matrix2(_) => {
                let p = self.to_pauli().unwrap_or_default();
                write!(f, "{}·1 + {}·σ1 + {}·σ2 + {}·σ3", p[0], p[1], p[2], p[3])
            }
            Element::Torus(l) => {
                if l.support_len() == 0 {
                    return write!(f, "0");
                }
                let parts: Vec<String> = l
                    .terms()
                    .map(|((m, n), v)| format!("({v}) u^{m} v^{n}"))
                    .collect();
                write!(f, "{}", parts.join(" + "))
            }
        }
    }
}

// Operator impls panic on backend mismatch; use the `try_*` methods when
// operands come from unvalidated input.

impl Add for &Element {
    type Output = Element;
    fn add(self, rhs: &Element) -> Element {
        self.try_add(rhs).expect("element backend mismatch")
    }
}

impl Add for Element {
    type Output = Element;
    fn add(self, rhs: Element) -> Element {
        &self + &rhs
    }
}

impl AddAssign<&Element> for Element {
    fn add_assign(&mut self, rhs: &Element) {
        match (&mut *self, rhs) {
            (Element::Matrix2(a), Element::Matrix2(b)) => *a += b,
            (Element::Torus(a), Element::Torus(b)) if a.theta == b.theta => {
                for (k, v) in b.terms() {
                    a.insert(k.0, k.1, v);
                }
            }
            _ => panic!("element backend mismatch"),
        }
    }
}

impl SubAssign<&Element> for Element {
    fn sub_assign(&mut self, rhs: &Element) {
        *self += &rhs.scale(C64::new(-1.0, 0.0));
    }
}

impl Sub for &Element {
    type Output = Element;
    fn sub(self, rhs: &Element) -> Element {
        self.try_add(&rhs.scale(C64::new(-1.0, 0.0)))
            .expect("element backend mismatch")
    }
}

impl Sub for Element {
    type Output = Element;
    fn sub(self, rhs: Element) -> Element {
        &self - &rhs
    }
}

impl Neg for &Element {
    type Output = Element;
    fn neg(self) -> Element {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for &Element {
    type Output = Element;
    fn mul(self, rhs: &Element) -> Element {
        self.try_mul(rhs).expect("element backend mismatch")
    }
}

impl Mul for Element {
    type Output = Element;
    fn mul(self, rhs: Element) -> Element {
        &self * &rhs
    }
}

impl Mul<C64> for &Element {
    type Output = Element;
    fn mul(self, rhs: C64) -> Element {
        self.scale(rhs)
    }
}

impl Mul<C64> for Element {
    type Output = Element;
    fn mul(self, rhs: C64) -> Element {
        self.scale(rhs)
    }
}

/// Checks `v u = e^{iθ} u v` for the torus product convention.
pub fn torus_relation_defect(theta: f64) -> f64 {
    let u = Element::monomial(theta, 1, 0, re(1.0));
    let v = Element::monomial(theta, 0, 1, re(1.0));
    let lhs = &v * &u;
    let rhs = (&u * &v).scale(C64::from_polar(1.0, theta));
    (&lhs - &rhs).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TH: f64 = 0.731;

    fn mono(m: i32, n: i32) -> Element {
        Element::monomial(TH, m, n, re(1.0))
    }

    #[test]
    fn pauli_product() {
        let p = &Element::sigma(1) * &Element::sigma(2);
        let want = Element::sigma(3).scale(I);
        assert!((&p - &want).norm() < 1e-15);
    }

    #[test]
    fn torus_commutation_phase() {
        let vu = &mono(0, 1) * &mono(1, 0);
        let l = vu.as_laurent().unwrap();
        assert_eq!(l.support_len(), 1);
        assert!((l.coeff(1, 1) - C64::from_polar(1.0, TH)).norm() < 1e-15);
        assert!(torus_relation_defect(TH) < 1e-15);
    }

    #[test]
    fn unitarity_of_u() {
        let p = &mono(1, 0) * &mono(-1, 0);
        assert!((&p - &Element::one(Backend::Torus { theta: TH })).norm() < 1e-15);
    }

    #[test]
    fn star_examples() {
        assert!((&Element::sigma(2).star() - &Element::sigma(2)).norm() < 1e-15);
        // (uv)* = e^{iθ} u^{-1} v^{-1}, and agrees with v* u*
        let uv = &mono(1, 0) * &mono(0, 1);
        let want = Element::monomial(TH, -1, -1, C64::from_polar(1.0, TH));
        assert!((&uv.star() - &want).norm() < 1e-14);
        let anti = &mono(0, 1).star() * &mono(1, 0).star();
        assert!((&uv.star() - &anti).norm() < 1e-14);
        let z = c(0.3, -1.2);
        let s = Element::scalar(Backend::Matrix2, z).star();
        assert!((&s - &Element::scalar(Backend::Matrix2, z.conj())).norm() < 1e-15);
    }

    #[test]
    fn partial_examples() {
        let a = Element::monomial(TH, 2, 1, re(1.0));
        let d = a.partial(0).unwrap();
        assert!((&d - &a.scale(c(0.0, 2.0))).norm() < 1e-15);
        let d = Element::sigma(2).partial(0).unwrap();
        assert!((&d + &Element::sigma(3)).norm() < 1e-15);
        for b in [Backend::Matrix2, Backend::Torus { theta: TH }] {
            assert!(Element::one(b).partial(1).unwrap().is_zero(0.0));
        }
        assert_eq!(
            Element::sigma(1).partial(2),
            Err(AlgebraError::DirectionOutOfRange(2))
        );
    }

    #[test]
    fn integral_examples() {
        let a = &Element::scalar(Backend::Torus { theta: TH }, re(3.0)) + &mono(1, 2);
        assert!((a.integral() - re(3.0)).norm() < 1e-15);
        assert!(Element::sigma(3).integral().norm() < 1e-15);
        assert_eq!(Element::one(Backend::Matrix2).integral(), re(1.0));
        assert_eq!(
            Element::one(Backend::Torus { theta: TH }).integral(),
            re(1.0)
        );
    }

    #[test]
    fn backend_mismatch_is_an_error() {
        let a = Element::sigma(1);
        let b = mono(1, 0);
        assert!(matches!(
            a.try_mul(&b),
            Err(AlgebraError::BackendMismatch(..))
        ));
        let b2 = Element::monomial(0.1, 1, 0, re(1.0));
        assert!(b.try_mul(&b2).is_err());
    }

    #[test]
    fn pruning_keeps_support_finite() {
        let a = &mono(1, 0) + &Element::monomial(TH, 1, 0, re(-1.0 + 1e-16));
        assert_eq!(a.as_laurent().unwrap().support_len(), 0);
    }

    #[test]
    fn derivations_are_star_compatible_on_torus() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Element::random(Backend::Torus { theta: TH }, 2, &mut rng);
        for i in 0..2 {
            let lhs = a.partial(i).unwrap().star();
            let rhs = a.star().partial(i).unwrap();
            assert!((&lhs - &rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn pauli_roundtrip() {
        let p = [c(1.0, 0.5), c(-0.2, 0.0), c(0.0, 3.0), c(0.7, -0.7)];
        let back = Element::from_pauli(p).to_pauli().unwrap();
        for k in 0..4 {
            assert!((back[k] - p[k]).norm() < 1e-15);
        }
    }
}
