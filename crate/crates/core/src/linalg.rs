//! Small dense helpers: complex matrices and matrices with algebra entries.

use std::ops::{Add, Index, IndexMut, Sub};

use nalgebra::DMatrix;

use crate::algebra::{Backend, Element, C64};

pub type CMat = DMatrix<C64>;

/// Builds a 2×2 complex matrix from its rows.
pub fn mat2(a: C64, b: C64, c: C64, d: C64) -> CMat {
    CMat::from_row_slice(2, 2, &[a, b, c, d])
}

/// Real 2×2 matrix from its rows.
pub fn rmat2(a: f64, b: f64, c: f64, d: f64) -> CMat {
    mat2(
        C64::new(a, 0.0),
        C64::new(b, 0.0),
        C64::new(c, 0.0),
        C64::new(d, 0.0),
    )
}

/// Pauli matrix as a dynamic matrix (index 0 is the identity).
pub fn pauli_d(k: usize) -> CMat {
    let p = crate::algebra::pauli(k);
    CMat::from_fn(2, 2, |r, c| p[(r, c)])
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Entrywise complex conjugate (the over-line, not the adjoint).
pub fn conj(m: &CMat) -> CMat {
    m.map(|z| z.conj())
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    m.clone().try_inverse()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Matrix whose entries are algebra elements, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ElemMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Element>,
}

impl ElemMatrix {
    pub fn zeros(backend: Backend, rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Element::zero(backend); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Element) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Embeds a complex matrix as scalar multiples of the unit.
    pub fn from_cmat(backend: Backend, m: &CMat) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |r, c| {
            Element::scalar(backend, m[(r, c)])
        })
    }

    /// `a · m` with `a` an algebra element and `m` complex.
    pub fn elem_times(a: &Element, m: &CMat) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |r, c| a.scale(m[(r, c)]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[Element] {
        &self.data
    }

    /// `self · m` for a complex matrix `m`.
    pub fn mul_c(&self, m: &CMat) -> Self {
        assert_eq!(self.cols, m.nrows());
        Self::from_fn(self.rows, m.ncols(), |r, c| {
            let mut acc = self[(r, 0)].scale(m[(0, c)]);
            for k in 1..self.cols {
                acc += &self[(r, k)].scale(m[(k, c)]);
            }
            acc
        })
    }

    /// `m · self` for a complex matrix `m`.
    pub fn c_mul(m: &CMat, s: &Self) -> Self {
        assert_eq!(m.ncols(), s.rows);
        Self::from_fn(m.nrows(), s.cols, |r, c| {
            let mut acc = s[(0, c)].scale(m[(r, 0)]);
            for k in 1..s.rows {
                acc += &s[(k, c)].scale(m[(r, k)]);
            }
            acc
        })
    }

    /// Matrix product with algebra products taken in written order.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        Self::from_fn(self.rows, other.cols, |r, c| {
            let mut acc = &self[(r, 0)] * &other[(0, c)];
            for k in 1..self.cols {
                acc += &(&self[(r, k)] * &other[(k, c)]);
            }
            acc
        })
    }

    pub fn scale(&self, z: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|e| e.scale(z)).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(&Element) -> Element) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Entrywise star: the over-line of a matrix with algebra entries.
    pub fn star_entries(&self) -> Self {
        self.map(Element::star)
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(Element::norm).fold(0.0, f64::max)
    }

    /// Complex matrix if every entry is a multiple of the unit.
    pub fn as_constant(&self, tol: f64) -> Option<CMat> {
        let mut out = CMat::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(r, c)] = self[(r, c)].as_scalar(tol)?;
            }
        }
        Some(out)
    }
}

impl Index<(usize, usize)> for ElemMatrix {
    type Output = Element;
    fn index(&self, (r, c): (usize, usize)) -> &Element {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ElemMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Element {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ElemMatrix {
    type Output = ElemMatrix;
    fn add(self, rhs: &ElemMatrix) -> ElemMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ElemMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ElemMatrix {
    type Output = ElemMatrix;
    fn sub(self, rhs: &ElemMatrix) -> ElemMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ElemMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}
