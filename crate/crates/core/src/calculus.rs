//! First-order calculus with a central self-adjoint basis `{s^i}`.
//!
//! Forms keep their coefficients to the left of basis symbols. Since the
//! basis is central this loses nothing, and every structure map acts on
//! indices only. The top degree is one-dimensional and spanned by `Vol`, with
//! `s^i ∧ s^j = W^{ij} Vol` and `d s^i = dbasis^i Vol`.

use thiserror::Error;

use crate::algebra::{AlgebraError, Backend, Element, C64, I};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalculusError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("form has {got} components, calculus has {want}")]
    ComponentCount { got: usize, want: usize },
    #[error("calculus is not inner")]
    NotInner,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calculus {
    pub backend: Backend,
    pub n: usize,
    /// `wedge[i][j] = W^{ij}`.
    pub wedge: Vec<Vec<C64>>,
    /// Vol coefficient of `d s^i`.
    pub dbasis: Vec<Element>,
    /// Components `θ_i` of the inner element, if the calculus is inner.
    pub theta: Option<Vec<Element>>,
}

/// `ω = Σ ω_i s^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneForm(pub Vec<Element>);

/// `ω = ω_vol Vol`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoForm(pub Element);

impl Calculus {
    /// Standard calculus on the noncommutative torus: Grassmann, `d s^i = 0`, not inner.
    pub fn torus(theta: f64) -> Self {
        let backend = Backend::Torus { theta };
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Self {
            backend,
            n: 2,
            wedge: vec![vec![zero, one], vec![-one, zero]],
            dbasis: vec![Element::zero(backend); 2],
            theta: None,
        }
    }

    /// The 2D inner calculus on `M_2(C)` in the self-adjoint basis.
    pub fn matrix2() -> Self {
        let zero = C64::new(0.0, 0.0);
        Self {
            backend: Backend::Matrix2,
            n: 2,
            wedge: vec![vec![I, zero], vec![zero, I]],
            dbasis: vec![-&Element::sigma(1), -&Element::sigma(2)],
            theta: Some(vec![
                Element::sigma(1).scale(I * 0.5),
                Element::sigma(2).scale(I * 0.5),
            ]),
        }
    }

    pub fn is_inner(&self) -> bool {
        self.theta.is_some()
    }

    pub fn zero(&self) -> Element {
        Element::zero(self.backend)
    }

    fn check_len(&self, len: usize) -> Result<(), CalculusError> {
        if len == self.n {
            Ok(())
        } else {
            Err(CalculusError::ComponentCount {
                got: len,
                want: self.n,
            })
        }
    }

    /// `d a = (∂_i a) s^i`.
    pub fn d0(&self, a: &Element) -> Result<OneForm, CalculusError> {
        let comps = (0..self.n)
            .map(|i| a.partial(i))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(OneForm(comps))
    }

    /// `d(ω_i s^i) = (∂_j ω_i) s^j ∧ s^i + ω_i d s^i`.
    pub fn d1(&self, w: &OneForm) -> Result<TwoForm, CalculusError> {
        self.check_len(w.0.len())?;
        let mut vol = self.zero();
        for i in 0..self.n {
            for j in 0..self.n {
                let wji = self.wedge[j][i];
                if wji != C64::new(0.0, 0.0) {
                    vol += &w.0[i].partial(j)?.scale(wji);
                }
            }
            vol += &(&w.0[i] * &self.dbasis[i]);
        }
        Ok(TwoForm(vol))
    }

    /// `ω ∧ η = ω_i η_j W^{ij} Vol`.
    pub fn wedge(&self, w: &OneForm, e: &OneForm) -> Result<TwoForm, CalculusError> {
        self.check_len(w.0.len())?;
        self.check_len(e.0.len())?;
        let mut vol = self.zero();
        for i in 0..self.n {
            for j in 0..self.n {
                let wij = self.wedge[i][j];
                if wij != C64::new(0.0, 0.0) {
                    vol += &w.0[i].try_mul(&e.0[j])?.scale(wij);
                }
            }
        }
        Ok(TwoForm(vol))
    }

    /// Basis 1-form `s^i`.
    pub fn basis_form(&self, i: usize) -> OneForm {
        let mut comps = vec![self.zero(); self.n];
        comps[i] = Element::one(self.backend);
        OneForm(comps)
    }

    /// Residual of `d = [θ, ·}` on algebra basis elements and basis 1-forms.
    pub fn check_inner(&self, window: i32) -> InnerReport {
        let Some(theta) = &self.theta else {
            return InnerReport {
                inner: false,
                residual: None,
            };
        };
        let mut worst: f64 = 0.0;
        for a in Element::basis(self.backend, window) {
            for i in 0..self.n {
                let lhs = theta[i].commutator(&a);
                let rhs = a.partial(i).expect("direction in range");
                worst = worst.max((&lhs - &rhs).norm());
            }
        }
        // {θ, s^i} = θ_j (W^{ji} + W^{ij}) Vol
        for i in 0..self.n {
            let mut vol = self.zero();
            for (j, t) in theta.iter().enumerate() {
                vol += &t.scale(self.wedge[j][i] + self.wedge[i][j]);
            }
            worst = worst.max((&vol - &self.dbasis[i]).norm());
        }
        InnerReport {
            inner: true,
            residual: Some(worst),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerReport {
    pub inner: bool,
    /// Largest defect of `d = [θ, ·}`, `None` when no θ is configured.
    pub residual: Option<f64>,
}

impl OneForm {
    pub fn left_mul(&self, a: &Element) -> OneForm {
        OneForm(self.0.iter().map(|w| a * w).collect())
    }
}
