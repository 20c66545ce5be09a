//! JSON problem files and their compiled form.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use spps_core::basis::{BoundaryForm, BvpSpec, IvpSpec};

use crate::error::AppError;
use crate::expr::{parse_expression, Expr};

pub const DEFAULT_GRID_M: usize = spps_core::grid::DEFAULT_GRID_M;
pub const DEFAULT_N_POWERS: usize = spps_core::powers::DEFAULT_N_POWERS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    /// `-u'' + q u = 0`.
    Schrodinger,
    /// `-u'' + ω² q u = 0`.
    HelmholtzLike,
    /// `(p u')' + q u = ω² u`.
    SturmLiouville,
}

impl Equation {
    pub fn name(self) -> &'static str {
        match self {
            Equation::Schrodinger => "schrodinger",
            Equation::HelmholtzLike => "helmholtz_like",
            Equation::SturmLiouville => "sturm_liouville",
        }
    }
}

/// A real part given as a number or an expression string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RealSpec {
    Number(f64),
    Expr(String),
}

/// A coefficient: a real number, a real expression, or `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientSpec {
    Real(RealSpec),
    Complex([RealSpec; 2]),
}

/// A complex constant: a number or `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarSpec {
    Real(f64),
    Complex([f64; 2]),
}

impl ScalarSpec {
    pub fn value(self) -> Complex64 {
        match self {
            ScalarSpec::Real(v) => Complex64::new(v, 0.0),
            ScalarSpec::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

impl Default for ScalarSpec {
    fn default() -> Self {
        ScalarSpec::Real(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedCondition {
    Dirichlet,
    Neumann,
}

/// `α u + β u' = γ`, or the homogeneous Dirichlet/Neumann shorthands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundarySpec {
    Named(NamedCondition),
    Form {
        alpha: ScalarSpec,
        beta: ScalarSpec,
        #[serde(default)]
        gamma: ScalarSpec,
    },
}

impl BoundarySpec {
    pub fn form(self) -> Result<BoundaryForm, AppError> {
        Ok(match self {
            BoundarySpec::Named(NamedCondition::Dirichlet) => BoundaryForm::dirichlet(0.0),
            BoundarySpec::Named(NamedCondition::Neumann) => BoundaryForm::neumann(0.0),
            BoundarySpec::Form { alpha, beta, gamma } => {
                BoundaryForm::new(alpha.value(), beta.value(), gamma.value())?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Task {
    Ivp {
        u0: ScalarSpec,
        du0: ScalarSpec,
    },
    Bvp {
        left: BoundarySpec,
        right: BoundarySpec,
    },
    Eig {
        left: BoundarySpec,
        right: BoundarySpec,
        max_abs_omega: f64,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Ivp { .. } => "ivp",
            Task::Bvp { .. } => "bvp",
            Task::Eig { .. } => "eig",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub equation: Equation,
    #[serde(default, alias = "p_expr", skip_serializing_if = "Option::is_none")]
    pub p: Option<CoefficientSpec>,
    #[serde(alias = "q_expr")]
    pub q: CoefficientSpec,
    #[serde(default, alias = "g0_expr", skip_serializing_if = "Option::is_none")]
    pub g0: Option<CoefficientSpec>,
    /// Closed-form solution used for error reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<CoefficientSpec>,
    #[serde(alias = "a")]
    pub interval_a: f64,
    #[serde(default = "default_grid_m")]
    pub grid_m: usize,
    #[serde(default = "default_n_powers")]
    pub n_powers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<[f64; 2]>,
    pub task: Task,
}

fn default_grid_m() -> usize {
    DEFAULT_GRID_M
}

fn default_n_powers() -> usize {
    DEFAULT_N_POWERS
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self, AppError> {
        serde_json::from_str(text).map_err(|e| AppError::Problem {
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn compile(&self) -> Result<Compiled, AppError> {
        if !(self.interval_a.is_finite() && self.interval_a > 0.0) {
            return Err(AppError::invalid("interval_a must be finite and positive"));
        }
        if let Task::Eig { max_abs_omega, .. } = self.task {
            if !(max_abs_omega.is_finite() && max_abs_omega >= 0.0) {
                return Err(AppError::invalid(
                    "max_abs_omega must be finite and non-negative",
                ));
            }
        }
        let omega = self.omega.map(|[re, im]| Complex64::new(re, im));
        if omega.is_some_and(|w| !(w.re.is_finite() && w.im.is_finite())) {
            return Err(AppError::invalid("omega must be finite"));
        }
        let p = match (&self.p, self.equation) {
            (Some(spec), Equation::SturmLiouville) => Coefficient::compile("p", spec)?,
            (Some(_), _) => {
                return Err(AppError::invalid(format!(
                    "p is only used by sturm_liouville problems, not {}",
                    self.equation.name()
                )))
            }
            (None, _) => Coefficient::constant(1.0),
        };
        let opt = |field: &'static str, spec: &Option<CoefficientSpec>| {
            spec.as_ref()
                .map(|s| Coefficient::compile(field, s))
                .transpose()
        };
        Ok(Compiled {
            equation: self.equation,
            p,
            q: Coefficient::compile("q", &self.q)?,
            g0: opt("g0", &self.g0)?,
            exact: opt("exact", &self.exact)?,
            interval_a: self.interval_a,
            grid_m: self.grid_m,
            n_powers: self.n_powers,
            omega,
            task: self.task.clone(),
        })
    }
}

/// A parsed coefficient `re(x) + i im(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub re: Expr,
    pub im: Option<Expr>,
}

impl Coefficient {
    pub fn constant(v: f64) -> Self {
        Coefficient {
            re: Expr::Num(v),
            im: None,
        }
    }

    pub fn compile(field: &'static str, spec: &CoefficientSpec) -> Result<Self, AppError> {
        let part = |r: &RealSpec| match r {
            RealSpec::Number(v) => Ok(Expr::Num(*v)),
            RealSpec::Expr(s) => {
                parse_expression(s).map_err(|source| AppError::Expression { field, source })
            }
        };
        Ok(match spec {
            CoefficientSpec::Real(r) => Coefficient {
                re: part(r)?,
                im: None,
            },
            CoefficientSpec::Complex([r, i]) => Coefficient {
                re: part(r)?,
                im: Some(part(i)?),
            },
        })
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        Complex64::new(self.re.eval(x), self.im.as_ref().map_or(0.0, |e| e.eval(x)))
    }

    pub fn derivative(&self) -> Coefficient {
        Coefficient {
            re: self.re.derivative(),
            im: self.im.as_ref().map(Expr::derivative),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.re.is_constant() && self.im.as_ref().is_none_or(Expr::is_constant)
    }

    pub fn negated(&self) -> Coefficient {
        Coefficient {
            re: Expr::Neg(Box::new(self.re.clone())),
            im: self.im.clone().map(|e| Expr::Neg(Box::new(e))),
        }
    }
}

/// A validated problem with parsed expressions.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub equation: Equation,
    pub p: Coefficient,
    pub q: Coefficient,
    pub g0: Option<Coefficient>,
    pub exact: Option<Coefficient>,
    pub interval_a: f64,
    pub grid_m: usize,
    pub n_powers: usize,
    pub omega: Option<Complex64>,
    pub task: Task,
}

impl Compiled {
    pub fn ivp(&self) -> Result<IvpSpec, AppError> {
        match self.task {
            Task::Ivp { u0, du0 } => Ok(IvpSpec::new(u0.value(), du0.value())),
            ref t => Err(AppError::task_mismatch("ivp", t)),
        }
    }

    pub fn bvp(&self) -> Result<BvpSpec, AppError> {
        match self.task {
            Task::Bvp { left, right } => Ok(BvpSpec {
                left: left.form()?,
                right: right.form()?,
            }),
            ref t => Err(AppError::task_mismatch("bvp", t)),
        }
    }

    pub fn eig(&self) -> Result<(BvpSpec, f64), AppError> {
        match self.task {
            Task::Eig {
                left,
                right,
                max_abs_omega,
            } => Ok((
                BvpSpec {
                    left: left.form()?,
                    right: right.form()?,
                },
                max_abs_omega,
            )),
            ref t => Err(AppError::task_mismatch("eig", t)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const IVP: &str = r#"{
        "equation": "schrodinger",
        "q": "-1",
        "interval_a": 1,
        "task": {"kind": "ivp", "u0": 1, "du0": -1}
    }"#;

    #[test]
    fn defaults() {
        let p = ProblemFile::from_json(IVP).unwrap();
        assert_eq!(p.grid_m, 10_000);
        assert_eq!(p.n_powers, 64);
        assert_eq!(p.omega, None);
        let c = p.compile().unwrap();
        assert_eq!(c.q.eval(0.3), Complex64::new(-1.0, 0.0));
        assert_eq!(c.ivp().unwrap(), IvpSpec::real(1.0, -1.0));
        assert!(c.bvp().is_err());
    }

    #[test]
    fn coefficient_forms() {
        let text = r#"{
            "equation": "sturm_liouville",
            "p_expr": ["1 + x", 2],
            "q": 3.5,
            "g0": "exp(x)",
            "interval_a": 2,
            "grid_m": 100,
            "n_powers": 10,
            "omega": [1, -2],
            "task": {"kind": "eig", "left": "dirichlet",
                     "right": {"alpha": [0, 1], "beta": 1}, "max_abs_omega": 5}
        }"#;
        let c = ProblemFile::from_json(text).unwrap().compile().unwrap();
        assert_eq!(c.p.eval(0.5), Complex64::new(1.5, 2.0));
        assert_eq!(c.q.eval(0.0), Complex64::new(3.5, 0.0));
        assert_eq!(c.omega, Some(Complex64::new(1.0, -2.0)));
        let (bc, max) = c.eig().unwrap();
        assert_eq!(max, 5.0);
        assert_eq!(bc.left, BoundaryForm::dirichlet(0.0));
        assert_eq!(bc.right.alpha, Complex64::new(0.0, 1.0));
        assert_eq!(bc.right.gamma, Complex64::new(0.0, 0.0));
        let dg0 = c.g0.unwrap().derivative();
        assert_eq!(dg0.eval(0.0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn expression_errors_name_the_field() {
        let text = IVP.replace("\"-1\"", "\"1 + y\"");
        let err = ProblemFile::from_json(&text)
            .unwrap()
            .compile()
            .unwrap_err();
        assert_eq!(err.kind(), "unknown_identifier");
        assert!(err.to_string().contains("q"), "{err}");
    }

    #[test]
    fn rejects_bad_fields() {
        assert!(ProblemFile::from_json(&IVP.replace("\"q\"", "\"qq\"")).is_err());
        let bad_a = IVP.replace("\"interval_a\": 1", "\"interval_a\": -1");
        let err = ProblemFile::from_json(&bad_a)
            .unwrap()
            .compile()
            .unwrap_err();
        assert_eq!(err.kind(), "invalid_problem");
        let with_p = IVP.replace("\"q\"", "\"p\": 2, \"q\"");
        assert!(ProblemFile::from_json(&with_p).unwrap().compile().is_err());
        let trivial = IVP.replace(
            r#"{"kind": "ivp", "u0": 1, "du0": -1}"#,
            r#"{"kind": "bvp", "left": {"alpha": 0, "beta": 0}, "right": "neumann"}"#,
        );
        let c = ProblemFile::from_json(&trivial).unwrap().compile().unwrap();
        assert_eq!(c.bvp().unwrap_err().kind(), "trivial_boundary_form");
    }

    #[test]
    fn round_trip() {
        let p = ProblemFile::from_json(IVP).unwrap();
        let again = ProblemFile::from_json(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(p, again);
    }
}
