//! Conic programs over zero, nonnegative and second-order cones.
//!
//! A program is
//!
//! ```text
//! minimize    cᵀx + offset
//! subject to  eq_i(x) = 0
//!             (head_j(x), tail_j(x)) ∈ K_j
//! ```
//!
//! where every `eq_i`, `head_j` and entry of `tail_j` is an affine
//! expression in the decision vector. A nonnegative block has an empty tail
//! (`head ≥ 0`), a second-order block requires `‖tail‖₂ ≤ head`.

mod cones;
mod expr;
mod solver;
mod transforms;

pub use expr::{LinExpr, Var};
pub use solver::{solve, Residuals, Solution, SolveStatus, SolverConfig};
pub use transforms::{hyperbolic_to_soc, quadratic_epigraph, QuadraticObjective};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConeKind {
    NonNegative,
    SecondOrder,
}

/// Handle to a cone block inside a program.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BlockId(pub usize);

#[derive(Clone, Debug, PartialEq)]
pub struct ConeBlock {
    pub kind: ConeKind,
    pub head: LinExpr,
    pub tail: Vec<LinExpr>,
}

impl ConeBlock {
    pub fn dim(&self) -> usize {
        1 + self.tail.len()
    }

    /// Amount by which `x` violates the block; nonpositive when feasible.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let head = self.head.eval(x);
        match self.kind {
            ConeKind::NonNegative => -head,
            ConeKind::SecondOrder => {
                let norm = self
                    .tail
                    .iter()
                    .map(|e| e.eval(x).powi(2))
                    .sum::<f64>()
                    .sqrt();
                norm - head
            }
        }
    }
}

/// An immutable conic program. Build one with [`ProgramBuilder`].
#[derive(Clone, Debug, PartialEq)]
pub struct ConicProgram {
    num_vars: usize,
    objective: Vec<f64>,
    offset: f64,
    equalities: Vec<LinExpr>,
    blocks: Vec<ConeBlock>,
}

impl ConicProgram {
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn equalities(&self) -> &[LinExpr] {
        &self.equalities
    }

    pub fn blocks(&self) -> &[ConeBlock] {
        &self.blocks
    }

    pub fn block(&self, id: BlockId) -> &ConeBlock {
        &self.blocks[id.0]
    }

    pub fn num_soc_blocks(&self) -> usize {
        self.blocks
            .iter()
            .filter(|b| b.kind == ConeKind::SecondOrder)
            .count()
    }

    /// Same program with the objective constant shifted by `shift`.
    pub fn with_offset_shift(&self, shift: f64) -> ConicProgram {
        let mut p = self.clone();
        p.offset += shift;
        p
    }

    pub fn evaluate_objective(&self, x: &[f64]) -> f64 {
        self.objective
            .iter()
            .zip(x)
            .map(|(c, v)| c * v)
            .sum::<f64>()
            + self.offset
    }

    /// Largest violation of any equality (absolute) or cone block at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let eq = self
            .equalities
            .iter()
            .map(|e| e.eval(x).abs())
            .fold(0.0, f64::max);
        self.blocks
            .iter()
            .map(|b| b.violation(x))
            .fold(eq, f64::max)
    }
}

/// Incremental construction of a [`ConicProgram`].
#[derive(Clone, Debug, Default)]
pub struct ProgramBuilder {
    num_vars: usize,
    objective: Vec<f64>,
    offset: f64,
    equalities: Vec<LinExpr>,
    blocks: Vec<ConeBlock>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn add_var(&mut self) -> Var {
        let v = Var(self.num_vars);
        self.num_vars += 1;
        self.objective.push(0.0);
        v
    }

    pub fn add_vars(&mut self, n: usize) -> Vec<Var> {
        (0..n).map(|_| self.add_var()).collect()
    }

    /// Adds `expr` to the objective; its constant goes to the offset.
    pub fn add_objective(&mut self, expr: impl Into<LinExpr>) {
        let expr = expr.into();
        for &(i, a) in &expr.terms {
            if i < self.objective.len() {
                self.objective[i] += a;
            } else {
                // caught again by `build`
                self.objective.resize(i + 1, 0.0);
                self.objective[i] += a;
            }
        }
        self.offset += expr.constant;
    }

    /// `lhs = rhs`.
    pub fn add_eq(&mut self, lhs: impl Into<LinExpr>, rhs: impl Into<LinExpr>) {
        let e = lhs.into() - rhs.into();
        self.equalities.push(e);
    }

    /// `expr ≥ 0`.
    pub fn add_nonneg(&mut self, expr: impl Into<LinExpr>) -> BlockId {
        self.push_block(ConeBlock {
            kind: ConeKind::NonNegative,
            head: expr.into(),
            tail: Vec::new(),
        })
    }

    /// `lhs ≤ rhs`.
    pub fn add_le(&mut self, lhs: impl Into<LinExpr>, rhs: impl Into<LinExpr>) -> BlockId {
        self.add_nonneg(rhs.into() - lhs.into())
    }

    /// `‖tail‖₂ ≤ head`.
    pub fn add_soc(&mut self, head: impl Into<LinExpr>, tail: Vec<LinExpr>) -> BlockId {
        self.push_block(ConeBlock {
            kind: ConeKind::SecondOrder,
            head: head.into(),
            tail,
        })
    }

    fn push_block(&mut self, block: ConeBlock) -> BlockId {
        self.blocks.push(block);
        BlockId(self.blocks.len() - 1)
    }

    pub fn build(self) -> Result<ConicProgram> {
        let n = self.num_vars;
        let check = |e: &LinExpr, what: &str| -> Result<()> {
            match e.max_index() {
                Some(i) if i >= n => Err(Error::DimensionMismatch {
                    context: format!("{what} references variable {i}"),
                    expected: n,
                    got: i + 1,
                }),
                _ => Ok(()),
            }
        };
        if self.objective.len() != n {
            return Err(Error::DimensionMismatch {
                context: "objective".into(),
                expected: n,
                got: self.objective.len(),
            });
        }
        for e in &self.equalities {
            check(e, "equality")?;
        }
        for b in &self.blocks {
            check(&b.head, "cone head")?;
            for t in &b.tail {
                check(t, "cone tail")?;
            }
            match b.kind {
                ConeKind::SecondOrder if b.tail.is_empty() => {
                    return Err(Error::InvalidSpec(
                        "second-order block needs a norm part of dimension ≥ 1".into(),
                    ))
                }
                ConeKind::NonNegative if !b.tail.is_empty() => {
                    return Err(Error::InvalidSpec(
                        "nonnegative block cannot carry a norm part".into(),
                    ))
                }
                _ => {}
            }
        }
        Ok(ConicProgram {
            num_vars: n,
            objective: self.objective,
            offset: self.offset,
            equalities: self.equalities,
            blocks: self.blocks,
        })
    }
}
