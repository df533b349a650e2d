//! JSON problem files.
//!
//! ```json
//! { "kind": "lqc", "horizon": 1,
//!   "a": [{"rows": 1, "cols": 1, "data": [1.0]}], ...,
//!   "gamma": 0.1 }
//! ```
//!
//! Per-step matrices are lists holding either one entry (used at every
//! step) or one entry per step. Unknown keys are rejected.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::SolveStatus;
use crate::lqc::{AmbiguitySpec, ControlPlan, LqcSpec, Polyhedron};
use crate::mpc::{MpcSolution, MpcSpec};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
}

type Result<T> = std::result::Result<T, ProblemError>;

fn field_err(field: impl Into<String>, message: impl Into<String>) -> ProblemError {
    ProblemError::Field {
        field: field.into(),
        message: message.into(),
    }
}

/// Dense matrix stored row-major with explicit dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn from_dmatrix(m: &DMatrix<f64>) -> Matrix {
        Matrix {
            rows: m.nrows(),
            cols: m.ncols(),
            data: (0..m.nrows())
                .flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)]))
                .collect(),
        }
    }

    pub fn to_dmatrix(&self, field: &str) -> Result<DMatrix<f64>> {
        if self.rows * self.cols != self.data.len() {
            return Err(field_err(
                field,
                format!(
                    "declared {}x{} but data has {} entries",
                    self.rows,
                    self.cols,
                    self.data.len()
                ),
            ));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyhedronFile {
    pub g: Matrix,
    pub h: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmbiguityFile {
    pub h: Matrix,
    pub mu: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LqcFile {
    pub horizon: usize,
    pub a: Vec<Matrix>,
    pub b: Vec<Matrix>,
    pub c: Vec<Matrix>,
    pub q: Vec<Matrix>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub q_lin: Vec<Vec<f64>>,
    pub r: Vec<Matrix>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub r_lin: Vec<Vec<f64>>,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_set: Option<PolyhedronFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambiguity: Option<AmbiguityFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpcFile {
    pub horizon: usize,
    pub a: Matrix,
    pub b: Matrix,
    pub e: Matrix,
    pub f: Vec<f64>,
    pub g: Matrix,
    pub h: Vec<f64>,
    pub k: Matrix,
    pub p: Matrix,
    pub q: Matrix,
    pub r: Matrix,
    pub q_f: Matrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_init: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProblemFile {
    Lqc(LqcFile),
    Mpc(MpcFile),
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<ProblemFile> {
        serde_json::from_str(text).map_err(|e| ProblemError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialize")
    }

    pub fn read(path: &Path) -> Result<ProblemFile> {
        let text = std::fs::read_to_string(path).map_err(|source| ProblemError::Io {
            path: path.display().to_string(),
            source,
        })?;
        ProblemFile::from_json(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|source| ProblemError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ProblemFile::Lqc(_) => "lqc",
            ProblemFile::Mpc(_) => "mpc",
        }
    }
}

fn per_step(list: &[Matrix], n: usize, field: &str) -> Result<Vec<DMatrix<f64>>> {
    match list.len() {
        1 => Ok(vec![list[0].to_dmatrix(&format!("{field}[0]"))?; n]),
        len if len == n => list
            .iter()
            .enumerate()
            .map(|(k, m)| m.to_dmatrix(&format!("{field}[{k}]")))
            .collect(),
        len => Err(field_err(
            field,
            format!("expected 1 or {n} matrices, got {len}"),
        )),
    }
}

fn per_step_vec(list: &[Vec<f64>], n: usize, dim: usize, field: &str) -> Result<Vec<DVector<f64>>> {
    let out: Vec<DVector<f64>> = match list.len() {
        0 => vec![DVector::zeros(dim); n],
        1 => vec![DVector::from_vec(list[0].clone()); n],
        len if len == n => list.iter().map(|v| DVector::from_vec(v.clone())).collect(),
        len => {
            return Err(field_err(
                field,
                format!("expected 0, 1 or {n} vectors, got {len}"),
            ))
        }
    };
    if let Some((k, v)) = out.iter().enumerate().find(|(_, v)| v.len() != dim) {
        return Err(field_err(
            format!("{field}[{k}]"),
            format!("expected length {dim}, got {}", v.len()),
        ));
    }
    Ok(out)
}

impl LqcFile {
    pub fn to_spec(&self) -> Result<LqcSpec> {
        let n = self.horizon;
        if n == 0 {
            return Err(field_err("horizon", "must be at least 1"));
        }
        let a = per_step(&self.a, n, "a")?;
        let b = per_step(&self.b, n, "b")?;
        let nx = a[0].nrows();
        let nu = b[0].ncols();
        let input_set = match &self.input_set {
            Some(p) => {
                let g = p.g.to_dmatrix("input_set.g")?;
                if g.nrows() != p.h.len() {
                    return Err(field_err(
                        "input_set.h",
                        format!("expected {} entries, got {}", g.nrows(), p.h.len()),
                    ));
                }
                Polyhedron::new(g, DVector::from_vec(p.h.clone()))
                    .map_err(|e| field_err("input_set", e.to_string()))?
            }
            None => Polyhedron::whole_space(n * nu),
        };
        let spec = LqcSpec {
            horizon: n,
            c: per_step(&self.c, n, "c")?,
            q: per_step(&self.q, n, "q")?,
            q_lin: per_step_vec(&self.q_lin, n, nx, "q_lin")?,
            r: per_step(&self.r, n, "r")?,
            r_lin: per_step_vec(&self.r_lin, n, nu, "r_lin")?,
            a,
            b,
            gamma: self.gamma,
            input_set,
        };
        spec.validate()
            .map_err(|e| field_err("lqc", e.to_string()))?;
        Ok(spec)
    }

    pub fn ambiguity_spec(&self, num_disturbances: usize) -> Result<AmbiguitySpec> {
        match &self.ambiguity {
            None => Ok(AmbiguitySpec::support_only(num_disturbances)),
            Some(a) => {
                let h = a.h.to_dmatrix("ambiguity.h")?;
                if h.ncols() != num_disturbances {
                    return Err(field_err(
                        "ambiguity.h",
                        format!("expected {num_disturbances} columns, got {}", h.ncols()),
                    ));
                }
                if h.nrows() != a.mu.len() {
                    return Err(field_err(
                        "ambiguity.mu",
                        format!("expected {} entries, got {}", h.nrows(), a.mu.len()),
                    ));
                }
                Ok(AmbiguitySpec {
                    h,
                    mu: DVector::from_vec(a.mu.clone()),
                })
            }
        }
    }

    pub fn from_spec(
        spec: &LqcSpec,
        amb: Option<&AmbiguitySpec>,
        x0: Option<&DVector<f64>>,
    ) -> LqcFile {
        let mats = |ms: &[DMatrix<f64>]| ms.iter().map(Matrix::from_dmatrix).collect();
        let vecs = |vs: &[DVector<f64>]| vs.iter().map(|v| v.as_slice().to_vec()).collect();
        LqcFile {
            horizon: spec.horizon,
            a: mats(&spec.a),
            b: mats(&spec.b),
            c: mats(&spec.c),
            q: mats(&spec.q),
            q_lin: vecs(&spec.q_lin),
            r: mats(&spec.r),
            r_lin: vecs(&spec.r_lin),
            gamma: spec.gamma,
            input_set: if spec.input_set.g.nrows() == 0 {
                None
            } else {
                Some(PolyhedronFile {
                    g: Matrix::from_dmatrix(&spec.input_set.g),
                    h: spec.input_set.h.as_slice().to_vec(),
                })
            },
            ambiguity: amb.map(|a| AmbiguityFile {
                h: Matrix::from_dmatrix(&a.h),
                mu: a.mu.as_slice().to_vec(),
            }),
            x0: x0.map(|v| v.as_slice().to_vec()),
        }
    }
}

impl MpcFile {
    pub fn to_spec(&self) -> Result<MpcSpec> {
        let spec = MpcSpec {
            a: self.a.to_dmatrix("a")?,
            b: self.b.to_dmatrix("b")?,
            e: self.e.to_dmatrix("e")?,
            f: DVector::from_vec(self.f.clone()),
            g: self.g.to_dmatrix("g")?,
            h: DVector::from_vec(self.h.clone()),
            k: self.k.to_dmatrix("k")?,
            p: self.p.to_dmatrix("p")?,
            horizon: self.horizon,
            q: self.q.to_dmatrix("q")?,
            r: self.r.to_dmatrix("r")?,
            q_f: self.q_f.to_dmatrix("q_f")?,
        };
        spec.validate()
            .map_err(|e| field_err("mpc", e.to_string()))?;
        Ok(spec)
    }

    pub fn from_spec(spec: &MpcSpec, x_init: Option<&DVector<f64>>) -> MpcFile {
        let m = Matrix::from_dmatrix;
        MpcFile {
            horizon: spec.horizon,
            a: m(&spec.a),
            b: m(&spec.b),
            e: m(&spec.e),
            f: spec.f.as_slice().to_vec(),
            g: m(&spec.g),
            h: spec.h.as_slice().to_vec(),
            k: m(&spec.k),
            p: m(&spec.p),
            q: m(&spec.q),
            r: m(&spec.r),
            q_f: m(&spec.q_f),
            x_init: x_init.map(|v| v.as_slice().to_vec()),
        }
    }
}

/// What `solve` writes and `verify` reads back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ResultFile {
    Lqc(LqcResult),
    Mpc(MpcResult),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LqcResult {
    pub mode: String,
    pub status: SolveStatus,
    pub objective: f64,
    pub x0: Vec<f64>,
    pub u: Vec<f64>,
    pub lambda: f64,
    pub t: Vec<f64>,
    pub phi: f64,
    pub beta: Vec<f64>,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpcResult {
    pub status: SolveStatus,
    pub objective: f64,
    pub iterations: usize,
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub center: Vec<f64>,
    pub radius: f64,
    pub lambda_hat: f64,
    pub t_hat: Vec<f64>,
    pub degenerate_radius: bool,
}

fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.as_slice().to_vec()
}

impl LqcResult {
    pub fn from_plan(mode: &str, x0: &DVector<f64>, plan: &ControlPlan) -> LqcResult {
        LqcResult {
            mode: mode.to_string(),
            status: plan.status,
            objective: plan.objective,
            x0: to_vec(x0),
            u: to_vec(&plan.u),
            lambda: plan.lambda,
            t: to_vec(&plan.t),
            phi: plan.phi,
            beta: to_vec(&plan.beta),
            iterations: plan.iterations,
        }
    }

    pub fn plan(&self) -> ControlPlan {
        ControlPlan {
            status: self.status,
            u: DVector::from_vec(self.u.clone()),
            objective: self.objective,
            lambda: self.lambda,
            t: DVector::from_vec(self.t.clone()),
            phi: self.phi,
            beta: DVector::from_vec(self.beta.clone()),
            iterations: self.iterations,
        }
    }
}

impl MpcResult {
    pub fn from_solution(sol: &MpcSolution) -> MpcResult {
        MpcResult {
            status: sol.status,
            objective: sol.objective,
            iterations: sol.iterations,
            states: sol.states.iter().map(to_vec).collect(),
            inputs: sol.inputs.iter().map(to_vec).collect(),
            center: to_vec(&sol.center),
            radius: sol.radius,
            lambda_hat: sol.lambda_hat,
            t_hat: to_vec(&sol.t_hat),
            degenerate_radius: sol.degenerate_radius,
        }
    }

    pub fn solution(&self) -> MpcSolution {
        let vecs = |vs: &[Vec<f64>]| vs.iter().map(|v| DVector::from_vec(v.clone())).collect();
        MpcSolution {
            status: self.status,
            objective: self.objective,
            iterations: self.iterations,
            inputs: vecs(&self.inputs),
            states: vecs(&self.states),
            center: DVector::from_vec(self.center.clone()),
            radius: self.radius,
            lambda_hat: self.lambda_hat,
            t_hat: DVector::from_vec(self.t_hat.clone()),
            degenerate_radius: self.degenerate_radius,
        }
    }
}

impl ResultFile {
    pub fn from_json(text: &str) -> Result<ResultFile> {
        serde_json::from_str(text).map_err(|e| ProblemError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result files always serialize")
    }

    pub fn read(path: &Path) -> Result<ResultFile> {
        let text = std::fs::read_to_string(path).map_err(|source| ProblemError::Io {
            path: path.display().to_string(),
            source,
        })?;
        ResultFile::from_json(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|source| ProblemError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_benchmark_round_trips() {
        let spec = LqcSpec::scalar_benchmark(3);
        let file = ProblemFile::Lqc(LqcFile::from_spec(
            &spec,
            None,
            Some(&DVector::from_element(1, -1.0)),
        ));
        let back = ProblemFile::from_json(&file.to_json()).unwrap();
        assert_eq!(back, file);
        match back {
            ProblemFile::Lqc(l) => assert_eq!(l.to_spec().unwrap(), spec),
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = r#"{"kind":"lqc","horizon":1,"a":[{"rows":1,"cols":1,"data":[1]}],
            "b":[{"rows":1,"cols":1,"data":[1]}],"c":[{"rows":1,"cols":1,"data":[1]}],
            "q":[{"rows":1,"cols":1,"data":[1]}],"r":[{"rows":1,"cols":1,"data":[1]}],
            "gamma":0.1,"extra":1}"#;
        let err = ProblemFile::from_json(text).unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
        let inner = r#"{"kind":"lqc","horizon":1,"a":[{"rows":1,"cols":1,"data":[1],"x":0}]}"#;
        assert!(ProblemFile::from_json(inner).is_err());
    }

    #[test]
    fn names_the_bad_matrix() {
        let text = r#"{"kind":"lqc","horizon":2,"a":[{"rows":1,"cols":1,"data":[1]}],
            "b":[{"rows":1,"cols":1,"data":[1]}],"c":[{"rows":1,"cols":1,"data":[1]}],
            "q":[{"rows":1,"cols":1,"data":[1]},{"rows":2,"cols":1,"data":[1]}],
            "r":[{"rows":1,"cols":1,"data":[1]}],"gamma":0.1}"#;
        match ProblemFile::from_json(text).unwrap() {
            ProblemFile::Lqc(l) => {
                let err = l.to_spec().unwrap_err().to_string();
                assert!(err.contains("q[1]"), "{err}");
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn full_precision_survives() {
        let m = Matrix {
            rows: 1,
            cols: 3,
            data: vec![0.1 + 0.2, std::f64::consts::PI, 1e-300],
        };
        let text = serde_json::to_string(&m).unwrap();
        let back: Matrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }
}
