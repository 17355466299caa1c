use std::fmt::Write;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub lb: f64,
    pub ub: f64,
    pub obj: f64,
    pub kind: VarKind,
    pub name: String,
}

/// A sparse linear constraint `sum coeffs (relation) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
    pub name: String,
}

impl Row {
    pub fn new(coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> Self {
        Row { coeffs, relation, rhs, name: String::new() }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(k, a)| a * x[k]).sum()
    }

    /// Amount by which `x` violates the row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }

    /// Bounds on the row activity implied by the relation.
    pub(crate) fn activity_bounds(&self) -> (f64, f64) {
        match self.relation {
            Relation::Le => (f64::NEG_INFINITY, self.rhs),
            Relation::Ge => (self.rhs, f64::INFINITY),
            Relation::Eq => (self.rhs, self.rhs),
        }
    }
}

/// A mixed binary linear program.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub sense: Sense,
    pub vars: Vec<Variable>,
    pub rows: Vec<Row>,
}

impl Model {
    pub fn new(sense: Sense) -> Self {
        Model { sense, vars: Vec::new(), rows: Vec::new() }
    }

    pub fn add_var(&mut self, lb: f64, ub: f64, obj: f64, kind: VarKind) -> usize {
        let name = format!("v{}", self.vars.len());
        self.add_named_var(name, lb, ub, obj, kind)
    }

    pub fn add_named_var(&mut self, name: impl Into<String>, lb: f64, ub: f64, obj: f64, kind: VarKind) -> usize {
        let (lb, ub) = match kind {
            VarKind::Binary => (lb.max(0.0), ub.min(1.0)),
            VarKind::Continuous => (lb, ub),
        };
        self.vars.push(Variable { lb, ub, obj, kind, name: name.into() });
        self.vars.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> usize {
        self.push_row(Row::new(coeffs, relation, rhs))
    }

    pub fn push_row(&mut self, row: Row) -> usize {
        self.rows.push(row);
        self.rows.len() - 1
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.coeffs.len()).sum()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.vars.iter().zip(x).map(|(v, x)| v.obj * x).sum()
    }

    pub fn integer_vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.vars.iter().enumerate().filter(|(_, v)| v.kind == VarKind::Binary).map(|(k, _)| k)
    }

    /// Checks indices, finiteness and bound consistency.
    pub fn validate(&self) -> Result<()> {
        for (k, v) in self.vars.iter().enumerate() {
            if v.lb.is_nan() || v.ub.is_nan() || v.obj.is_nan() || !v.obj.is_finite() {
                return Err(Error::Solver(format!("variable {k} has an invalid bound or cost")));
            }
            if v.kind == VarKind::Binary && !(v.lb.is_finite() && v.ub.is_finite()) {
                return Err(Error::Solver(format!("binary variable {k} needs finite bounds")));
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            if !r.rhs.is_finite() {
                return Err(Error::Solver(format!("row {i} has a non-finite right-hand side")));
            }
            for &(k, a) in &r.coeffs {
                if k >= self.vars.len() || !a.is_finite() {
                    return Err(Error::DimensionMismatch(format!("row {i} references variable {k} with coefficient {a}")));
                }
            }
        }
        Ok(())
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let bounds = self
            .vars
            .iter()
            .zip(x)
            .map(|(v, &x)| (v.lb - x).max(x - v.ub).max(0.0))
            .fold(0.0, f64::max);
        self.rows.iter().map(|r| r.violation(x)).fold(bounds, f64::max)
    }

    /// Text in the CPLEX LP format.
    pub fn to_lp_format(&self) -> String {
        fn term(out: &mut String, first: bool, a: f64, name: &str) {
            match (a < 0.0, first) {
                (true, _) => write!(out, " - {} {name}", -a),
                (false, true) => write!(out, " {a} {name}"),
                (false, false) => write!(out, " + {a} {name}"),
            }
            .expect("writing to a string cannot fail");
        }
        let mut out = String::new();
        out.push_str(match self.sense {
            Sense::Minimize => "Minimize\n obj:",
            Sense::Maximize => "Maximize\n obj:",
        });
        let mut first = true;
        for v in self.vars.iter().filter(|v| v.obj != 0.0) {
            term(&mut out, first, v.obj, &v.name);
            first = false;
        }
        if first {
            out.push_str(" 0");
        }
        out.push_str("\nSubject To\n");
        for (i, r) in self.rows.iter().enumerate() {
            let name = if r.name.is_empty() { format!("r{i}") } else { r.name.clone() };
            let _ = write!(out, " {name}:");
            for (n, &(k, a)) in r.coeffs.iter().enumerate() {
                term(&mut out, n == 0, a, &self.vars[k].name);
            }
            if r.coeffs.is_empty() {
                out.push_str(" 0 ");
                out.push_str(self.vars.first().map_or("v0", |v| v.name.as_str()));
            }
            let rel = match r.relation {
                Relation::Le => "<=",
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            let _ = writeln!(out, " {rel} {}", r.rhs);
        }
        out.push_str("Bounds\n");
        for v in &self.vars {
            match (v.lb.is_finite(), v.ub.is_finite()) {
                (true, true) => {
                    let _ = writeln!(out, " {} <= {} <= {}", v.lb, v.name, v.ub);
                }
                (true, false) => {
                    let _ = writeln!(out, " {} >= {}", v.name, v.lb);
                }
                (false, true) => {
                    let _ = writeln!(out, " -inf <= {} <= {}", v.name, v.ub);
                }
                (false, false) => {
                    let _ = writeln!(out, " {} free", v.name);
                }
            }
        }
        let binaries: Vec<&str> =
            self.vars.iter().filter(|v| v.kind == VarKind::Binary).map(|v| v.name.as_str()).collect();
        if !binaries.is_empty() {
            out.push_str("Binaries\n");
            for chunk in binaries.chunks(8) {
                let _ = writeln!(out, " {}", chunk.join(" "));
            }
        }
        out.push_str("End\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_export_lists_every_section() {
        let mut m = Model::new(Sense::Maximize);
        let a = m.add_named_var("a", 0.0, 1.0, 10.0, VarKind::Binary);
        let b = m.add_named_var("b", 0.0, f64::INFINITY, -6.0, VarKind::Continuous);
        m.push_row(Row::new(vec![(a, 5.0), (b, -4.0)], Relation::Le, 8.0).named("cap"));
        let text = m.to_lp_format();
        assert!(text.starts_with("Maximize\n obj: 10 a - 6 b\n"));
        assert!(text.contains(" cap: 5 a - 4 b <= 8\n"));
        assert!(text.contains(" 0 <= a <= 1\n"));
        assert!(text.contains(" b >= 0\n"));
        assert!(text.contains("Binaries\n a\n"));
        assert!(text.ends_with("End\n"));
    }

    #[test]
    fn validation_catches_bad_indices() {
        let mut m = Model::new(Sense::Minimize);
        m.add_var(0.0, 1.0, 1.0, VarKind::Continuous);
        m.add_row(vec![(3, 1.0)], Relation::Le, 1.0);
        assert!(m.validate().is_err());
    }

    #[test]
    fn violation_measures() {
        let r = Row::new(vec![(0, 1.0), (1, 2.0)], Relation::Ge, 4.0);
        assert_eq!(r.violation(&[1.0, 1.0]), 1.0);
        assert_eq!(r.violation(&[2.0, 1.0]), 0.0);
    }
}
