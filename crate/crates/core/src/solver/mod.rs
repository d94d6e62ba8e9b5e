//! Numerical search for spectral-triple data.
//!
//! A [`SolveProblem`] names its unknowns as slots (real, or complex and split
//! into real and imaginary coordinates), chooses which residual blocks to
//! stack, and pins any coordinates that should stay fixed. The problem owns an
//! assembly closure that turns slot values into a geometry and a spinor bundle;
//! the residual blocks are then evaluated by the geometry and spinor modules.

mod continuation;
mod dedup;
pub mod layouts;
mod lm;
mod multistart;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{Element, C64};
use crate::geometry::{cotorsion, metric_compatibility, torsion, Geometry};
use crate::linalg::CMat;
use crate::spinor::{
    cj_block, clifford_residual_components, covariance_block, gamma_blocks, inner_blocks, jj_block,
    sj_block, SpinorBundle,
};

pub use continuation::{continue_family, ContinuationOptions, ContinuationReport, Halt, PathPoint};
pub use dedup::{cluster_ids, dedup_gauge, invariants, Cluster};
pub use lm::{fd_jacobian, solve_lm, LmOptions, LmResult};
pub use multistart::{
    multistart, starting_point, MultistartOptions, MultistartReport, StartRecord,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("unknown slot '{0}'")]
    UnknownSlot(String),
    #[error("unknown coordinate '{0}'")]
    UnknownCoordinate(String),
    #[error("expected {want} free coordinates, got {got}")]
    Dimension { got: usize, want: usize },
    #[error("constraint {0:?} is not available for this problem")]
    Selection(Constraint),
    #[error("cannot assemble the model: {0}")]
    Assembly(String),
    #[error("starting point is not a solution (residual {0:e})")]
    NotASolution(f64),
    #[error("unknown layout '{0}'")]
    UnknownLayout(String),
    #[error("bad layout parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotKind {
    Real,
    Complex,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub name: String,
    pub kind: SlotKind,
    pub len: usize,
}

impl Slot {
    pub fn real(name: &str, len: usize) -> Self {
        Self {
            name: name.into(),
            kind: SlotKind::Real,
            len,
        }
    }

    pub fn complex(name: &str, len: usize) -> Self {
        Self {
            name: name.into(),
            kind: SlotKind::Complex,
            len,
        }
    }

    fn real_dim(&self) -> usize {
        match self.kind {
            SlotKind::Real => self.len,
            SlotKind::Complex => 2 * self.len,
        }
    }

    fn coordinate_names(&self) -> Vec<String> {
        let base = |k: usize| {
            if self.len == 1 {
                self.name.clone()
            } else {
                format!("{}[{k}]", self.name)
            }
        };
        let mut out = Vec::with_capacity(self.real_dim());
        for k in 0..self.len {
            match self.kind {
                SlotKind::Real => out.push(base(k)),
                SlotKind::Complex => {
                    out.push(format!("{}.re", base(k)));
                    out.push(format!("{}.im", base(k)));
                }
            }
        }
        out
    }
}

/// Residual blocks that can be stacked into a problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Constraint {
    #[serde(rename = "JJ")]
    JJ,
    #[serde(rename = "SJ")]
    SJ,
    #[serde(rename = "CJ")]
    CJ,
    #[serde(rename = "gamma")]
    Gamma,
    #[serde(rename = "covariance")]
    Covariance,
    #[serde(rename = "clifford_full")]
    CliffordFull,
    #[serde(rename = "clifford_half")]
    CliffordHalf,
    #[serde(rename = "qlc")]
    Qlc,
    #[serde(rename = "wqlc")]
    Wqlc,
    #[serde(rename = "imaginary_rho")]
    ImaginaryRho,
    #[serde(rename = "symmetric_J")]
    SymmetricJ,
    /// Layout-specific blocks supplied by the assembly closure.
    #[serde(rename = "extra")]
    Extra,
}

/// Slot values after pins have been applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Values {
    map: BTreeMap<String, Vec<C64>>,
}

impl Values {
    pub fn get(&self, name: &str) -> &[C64] {
        self.map
            .get(name)
            .map(Vec::as_slice)
            .unwrap_or_else(|| panic!("layout has no slot '{name}'"))
    }

    pub fn scalar(&self, name: &str) -> C64 {
        self.get(name)[0]
    }

    pub fn real(&self, name: &str) -> f64 {
        self.get(name)[0].re
    }

    /// Entry `k` of a real or complex slot, as a complex number.
    pub fn at(&self, name: &str, k: usize) -> C64 {
        self.get(name)[k]
    }

    /// Four consecutive entries of a slot, read row-major as a 2×2 matrix.
    pub fn mat2(&self, name: &str, block: usize) -> CMat {
        CMat::from_row_slice(2, 2, &self.get(name)[4 * block..4 * block + 4])
    }
}

/// What the assembly closure produces from slot values.
#[derive(Debug, Clone)]
pub struct Model {
    pub geometry: Geometry,
    pub bundle: SpinorBundle,
    /// Use the reduced inner-form blocks for covariance and `SJ`.
    pub inner: bool,
    pub extra: Vec<(&'static str, Vec<C64>)>,
}

pub type Assembler = Arc<dyn Fn(&Values) -> Result<Model, String> + Send + Sync>;

#[derive(Clone)]
pub struct SolveProblem {
    pub name: String,
    pub slots: Vec<Slot>,
    pub constraints: Vec<Constraint>,
    /// Fixed coordinate values, keyed by coordinate name.
    pub pins: BTreeMap<String, f64>,
    pub assemble: Assembler,
}

impl fmt::Debug for SolveProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolveProblem")
            .field("name", &self.name)
            .field("slots", &self.slots)
            .field("constraints", &self.constraints)
            .field("pins", &self.pins)
            .finish_non_exhaustive()
    }
}

/// Sizes of a problem; `underdetermined` flags fewer equations than unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimensions {
    pub residual: usize,
    pub unknowns: usize,
    pub underdetermined: bool,
}

impl SolveProblem {
    /// Every coordinate name, pinned or not, in layout order.
    pub fn coordinate_names(&self) -> Vec<String> {
        self.slots.iter().flat_map(Slot::coordinate_names).collect()
    }

    /// Names of the coordinates the solver moves.
    pub fn free_names(&self) -> Vec<String> {
        self.coordinate_names()
            .into_iter()
            .filter(|n| !self.pins.contains_key(n))
            .collect()
    }

    pub fn free_dim(&self) -> usize {
        self.free_names().len()
    }

    /// Checks that pins refer to existing coordinates.
    pub fn validate(&self) -> Result<(), SolveError> {
        let names = self.coordinate_names();
        for k in self.pins.keys() {
            if !names.contains(k) {
                return Err(SolveError::UnknownCoordinate(k.clone()));
            }
        }
        Ok(())
    }

    pub fn pin(mut self, coordinate: &str, value: f64) -> Self {
        self.pins.insert(coordinate.into(), value);
        self
    }

    pub fn unpin(mut self, coordinate: &str) -> Self {
        self.pins.remove(coordinate);
        self
    }

    /// Index of a free coordinate.
    pub fn free_index(&self, coordinate: &str) -> Result<usize, SolveError> {
        self.free_names()
            .iter()
            .position(|n| n == coordinate)
            .ok_or_else(|| SolveError::UnknownCoordinate(coordinate.into()))
    }

    /// Full coordinate vector from the free one.
    pub fn expand(&self, free: &[f64]) -> Result<Vec<f64>, SolveError> {
        Evaluator::new(self).expand(free)
    }

    /// Free coordinates from a full vector.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.coordinate_names()
            .iter()
            .zip(full)
            .filter(|(n, _)| !self.pins.contains_key(*n))
            .map(|(_, v)| *v)
            .collect()
    }

    pub fn values(&self, free: &[f64]) -> Result<Values, SolveError> {
        Evaluator::new(self).values(free)
    }

    pub fn model(&self, free: &[f64]) -> Result<Model, SolveError> {
        let v = self.values(free)?;
        (self.assemble)(&v).map_err(SolveError::Assembly)
    }

    /// Residual and unknown counts, evaluated at `free`.
    pub fn dimensions(&self, free: &[f64]) -> Result<Dimensions, SolveError> {
        let r = build_residual(self, free)?;
        let unknowns = self.free_dim();
        Ok(Dimensions {
            residual: r.len(),
            unknowns,
            underdetermined: r.len() < unknowns,
        })
    }
}

/// A problem with its pin layout resolved once, for repeated evaluation.
pub struct Evaluator<'a> {
    problem: &'a SolveProblem,
    /// `Some(v)` for pinned coordinates.
    layout: Vec<Option<f64>>,
    free: usize,
}

impl<'a> Evaluator<'a> {
    pub fn new(problem: &'a SolveProblem) -> Self {
        let layout: Vec<Option<f64>> = problem
            .coordinate_names()
            .iter()
            .map(|n| problem.pins.get(n).copied())
            .collect();
        let free = layout.iter().filter(|v| v.is_none()).count();
        Self {
            problem,
            layout,
            free,
        }
    }

    pub fn expand(&self, free: &[f64]) -> Result<Vec<f64>, SolveError> {
        if free.len() != self.free {
            return Err(SolveError::Dimension {
                got: free.len(),
                want: self.free,
            });
        }
        let mut it = free.iter();
        Ok(self
            .layout
            .iter()
            .map(|pin| pin.unwrap_or_else(|| *it.next().unwrap()))
            .collect())
    }

    pub fn values(&self, free: &[f64]) -> Result<Values, SolveError> {
        let full = self.expand(free)?;
        let mut map = BTreeMap::new();
        let mut pos = 0;
        for s in &self.problem.slots {
            let v: Vec<C64> = match s.kind {
                SlotKind::Real => full[pos..pos + s.len]
                    .iter()
                    .map(|&x| C64::new(x, 0.0))
                    .collect(),
                SlotKind::Complex => full[pos..pos + 2 * s.len]
                    .chunks(2)
                    .map(|p| C64::new(p[0], p[1]))
                    .collect(),
            };
            pos += s.real_dim();
            map.insert(s.name.clone(), v);
        }
        Ok(Values { map })
    }

    pub fn model(&self, free: &[f64]) -> Result<Model, SolveError> {
        let v = self.values(free)?;
        (self.problem.assemble)(&v).map_err(SolveError::Assembly)
    }

    pub fn residual(&self, free: &[f64]) -> Result<Vec<f64>, SolveError> {
        Ok(realify(&model_residual(
            &self.model(free)?,
            &self.problem.constraints,
        )?))
    }
}

/// Realified coordinates of an algebra element: matrix entries on `M_2`,
/// Laurent coefficients with `|m|, |n| ≤ 1` on the torus.
fn element_coords(e: &Element, out: &mut Vec<C64>) {
    if let Some(m) = e.as_matrix() {
        out.extend(m.iter().copied());
    } else if let Some(l) = e.as_laurent() {
        for m in -1..=1 {
            for n in -1..=1 {
                out.push(l.coeff(m, n));
            }
        }
    }
}

fn push_block(out: &mut Vec<C64>, scalars: &[C64], elems: &[Element]) {
    out.extend_from_slice(scalars);
    for e in elems {
        element_coords(e, out);
    }
}

/// Complex residual components of every selected block for an assembled model.
pub fn model_residual(m: &Model, constraints: &[Constraint]) -> Result<Vec<C64>, SolveError> {
    let b = &m.bundle;
    let g = &m.geometry;
    let mut out = Vec::new();
    let inner = if m.inner
        && constraints
            .iter()
            .any(|c| matches!(c, Constraint::Covariance | Constraint::SJ))
    {
        Some(inner_blocks(b, &g.connection))
    } else {
        None
    };
    for c in constraints {
        match c {
            Constraint::JJ => {
                let r = jj_block(b);
                push_block(&mut out, &r.scalars, &r.elems);
            }
            Constraint::SJ => {
                let r = match &inner {
                    Some(blocks) => blocks[1].clone(),
                    None => sj_block(b),
                };
                push_block(&mut out, &r.scalars, &r.elems);
            }
            Constraint::CJ => {
                let r = cj_block(b);
                push_block(&mut out, &r.scalars, &r.elems);
            }
            Constraint::Gamma => {
                if b.gamma.is_none() {
                    return Err(SolveError::Selection(*c));
                }
                for r in gamma_blocks(b) {
                    push_block(&mut out, &r.scalars, &r.elems);
                }
            }
            Constraint::Covariance => {
                let r = match &inner {
                    Some(blocks) => blocks[0].clone(),
                    None => covariance_block(b, &g.connection),
                };
                push_block(&mut out, &r.scalars, &r.elems);
            }
            Constraint::CliffordFull | Constraint::CliffordHalf => {
                let v = clifford_residual_components(
                    b,
                    &g.metric,
                    &g.calculus,
                    *c == Constraint::CliffordHalf,
                )
                .map_err(|e| SolveError::Assembly(e.to_string()))?;
                out.extend(v);
            }
            Constraint::Qlc => {
                push_block(&mut out, &[], &torsion(&g.connection, &g.calculus));
                push_block(
                    &mut out,
                    &[],
                    &metric_compatibility(&g.connection, &g.metric),
                );
            }
            Constraint::Wqlc => {
                push_block(&mut out, &[], &torsion(&g.connection, &g.calculus));
                push_block(
                    &mut out,
                    &[],
                    &cotorsion(&g.connection, &g.metric, &g.calculus),
                );
            }
            Constraint::ImaginaryRho => {
                let (_, rho) = m
                    .extra
                    .iter()
                    .find(|(n, _)| *n == "rho")
                    .ok_or(SolveError::Selection(*c))?;
                out.extend(rho.iter().map(|z| C64::new(z.re, 0.0)));
            }
            Constraint::SymmetricJ => out.extend((&b.j - b.j.transpose()).iter().copied()),
            Constraint::Extra => {
                for (name, v) in &m.extra {
                    if *name != "rho" {
                        out.extend(v.iter().copied());
                    }
                }
            }
        }
    }
    Ok(out)
}

fn realify(v: &[C64]) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

/// Realified residual vector of `p` at the free coordinates `free`.
pub fn build_residual(p: &SolveProblem, free: &[f64]) -> Result<Vec<f64>, SolveError> {
    Evaluator::new(p).residual(free)
}

/// Euclidean norm.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
