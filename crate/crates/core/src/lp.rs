//! Linear programs in row form, solved with the `minilp` simplex backend.
//!
//! Every row carries the constraint class and horizon step it came from so
//! that solver output can be mapped back to the scheduling model.

use std::fmt;
use std::io::{self, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintClass {
    Ramp,
    Capacity,
    SelfSufficiency,
    Arbitrage,
    Peak,
    Backup,
    Dynamics,
    /// Rows added by the solver itself, e.g. an objective bound.
    Auxiliary,
}

impl fmt::Display for ConstraintClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintClass::Ramp => "ramp",
            ConstraintClass::Capacity => "capacity",
            ConstraintClass::SelfSufficiency => "self-sufficiency",
            ConstraintClass::Arbitrage => "arbitrage",
            ConstraintClass::Peak => "peak",
            ConstraintClass::Backup => "backup",
            ConstraintClass::Dynamics => "dynamics",
            ConstraintClass::Auxiliary => "auxiliary",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarDomain {
    NonNegative,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub class: ConstraintClass,
    pub step: usize,
}

impl Row {
    fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates this row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.lhs(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Minimise `objective·x` subject to `rows` and variable domains.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    names: Vec<String>,
    domains: Vec<VarDomain>,
    objective: Vec<f64>,
    rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, domain: VarDomain, cost: f64) -> usize {
        self.names.push(name.into());
        self.domains.push(domain);
        self.objective.push(cost);
        self.names.len() - 1
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
        class: ConstraintClass,
        step: usize,
    ) {
        debug_assert!(coeffs.iter().all(|&(j, _)| j < self.names.len()));
        self.rows.push(Row {
            name: name.into(),
            coeffs,
            sense,
            rhs,
            class,
            step,
        });
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn num_inequalities(&self) -> usize {
        self.rows.iter().filter(|r| r.sense != Sense::Eq).count()
    }

    pub fn num_equalities(&self) -> usize {
        self.rows.iter().filter(|r| r.sense == Sense::Eq).count()
    }

    pub fn var_name(&self, j: usize) -> &str {
        &self.names[j]
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn set_objective(&mut self, objective: Vec<f64>) {
        assert_eq!(objective.len(), self.names.len());
        self.objective = objective;
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation over rows and domains, with the offending row if any.
    pub fn max_violation(&self, x: &[f64]) -> (f64, Option<&Row>) {
        let mut worst = (0.0, None);
        for (j, d) in self.domains.iter().enumerate() {
            if *d == VarDomain::NonNegative && -x[j] > worst.0 {
                worst = (-x[j], None);
            }
        }
        for row in &self.rows {
            let v = row.violation(x);
            if v > worst.0 {
                worst = (v, Some(row));
            }
        }
        worst
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        let n = self.num_vars();
        let mut lo: Vec<f64> = self
            .domains
            .iter()
            .map(|d| match d {
                VarDomain::NonNegative => 0.0,
                VarDomain::Free => f64::NEG_INFINITY,
            })
            .collect();
        let mut hi = vec![f64::INFINITY; n];

        // Single-variable rows become bounds; the simplex handles those natively.
        let mut general = Vec::new();
        for row in &self.rows {
            let nz: Vec<_> = row.coeffs.iter().filter(|(_, a)| *a != 0.0).collect();
            match nz.as_slice() {
                [] => {
                    let ok = match row.sense {
                        Sense::Le => 0.0 <= row.rhs,
                        Sense::Ge => 0.0 >= row.rhs,
                        Sense::Eq => row.rhs == 0.0,
                    };
                    if !ok {
                        return Ok(LpOutcome::Infeasible);
                    }
                }
                [&(j, a)] => {
                    let bound = row.rhs / a;
                    let (upper, lower) = match (row.sense, a > 0.0) {
                        (Sense::Le, true) | (Sense::Ge, false) => (Some(bound), None),
                        (Sense::Le, false) | (Sense::Ge, true) => (None, Some(bound)),
                        (Sense::Eq, _) => (Some(bound), Some(bound)),
                    };
                    if let Some(u) = upper {
                        hi[j] = hi[j].min(u);
                    }
                    if let Some(l) = lower {
                        lo[j] = lo[j].max(l);
                    }
                }
                _ => general.push(row),
            }
        }
        for j in 0..n {
            if lo[j] > hi[j] {
                if lo[j] - hi[j] > 1e-9 * (1.0 + hi[j].abs()) {
                    return Ok(LpOutcome::Infeasible);
                }
                hi[j] = lo[j];
            }
        }

        let mut problem = minilp::Problem::new(minilp::OptimizationDirection::Minimize);
        let vars: Vec<minilp::Variable> = (0..n)
            .map(|j| problem.add_var(self.objective[j], (lo[j], hi[j])))
            .collect();
        for row in general {
            let expr: Vec<(minilp::Variable, f64)> = row
                .coeffs
                .iter()
                .filter(|(_, a)| *a != 0.0)
                .map(|&(j, a)| (vars[j], a))
                .collect();
            let op = match row.sense {
                Sense::Le => minilp::ComparisonOp::Le,
                Sense::Ge => minilp::ComparisonOp::Ge,
                Sense::Eq => minilp::ComparisonOp::Eq,
            };
            problem.add_constraint(expr.as_slice(), op, row.rhs);
        }

        match problem.solve() {
            Ok(solution) => {
                let x: Vec<f64> = vars.iter().map(|&v| solution[v]).collect();
                let objective = self.objective_value(&x);
                // minilp can hand back an infinite vertex instead of reporting unboundedness.
                if !objective.is_finite() || x.iter().any(|v| !v.is_finite()) {
                    return Ok(LpOutcome::Unbounded);
                }
                Ok(LpOutcome::Optimal { x, objective })
            }
            Err(minilp::Error::Infeasible) => Ok(LpOutcome::Infeasible),
            Err(minilp::Error::Unbounded) => Ok(LpOutcome::Unbounded),
        }
    }

    /// Writes the program in CPLEX LP text format.
    pub fn write_lp_format<W: Write>(&self, mut out: W) -> io::Result<()> {
        fn terms<W: Write>(
            out: &mut W,
            names: &[String],
            coeffs: &[(usize, f64)],
        ) -> io::Result<()> {
            if coeffs.is_empty() {
                return write!(
                    out,
                    " 0 {}",
                    names.first().map(String::as_str).unwrap_or("x")
                );
            }
            for (k, &(j, a)) in coeffs.iter().enumerate() {
                if k > 0 && k % 6 == 0 {
                    write!(out, "\n   ")?;
                }
                let sign = if a < 0.0 { '-' } else { '+' };
                write!(out, " {sign} {} {}", a.abs(), names[j])?;
            }
            Ok(())
        }

        writeln!(
            out,
            "\\ storage co-optimization LP: {} variables, {} rows",
            self.num_vars(),
            self.rows.len()
        )?;
        writeln!(out, "Minimize")?;
        write!(out, " obj:")?;
        let obj: Vec<(usize, f64)> = self
            .objective
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, &c)| (j, c))
            .collect();
        terms(&mut out, &self.names, &obj)?;
        writeln!(out)?;
        writeln!(out, "Subject To")?;
        for row in &self.rows {
            write!(out, " {}:", row.name)?;
            terms(&mut out, &self.names, &row.coeffs)?;
            let op = match row.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            writeln!(out, " {op} {}", row.rhs)?;
        }
        writeln!(out, "Bounds")?;
        for (name, d) in self.names.iter().zip(&self.domains) {
            if *d == VarDomain::Free {
                writeln!(out, " {name} free")?;
            }
        }
        writeln!(out, "End")
    }
}

impl LpOutcome {
    pub fn into_optimal(self) -> Result<(Vec<f64>, f64)> {
        match self {
            LpOutcome::Optimal { x, objective } => Ok((x, objective)),
            LpOutcome::Infeasible => Err(Error::Solver("program is infeasible".into())),
            LpOutcome::Unbounded => Err(Error::Solver("program is unbounded".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_program() {
        // min -x - 2y  s.t. x + y <= 4, 2x + y >= 2, y <= 3
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", VarDomain::NonNegative, -1.0);
        let y = lp.add_var("y", VarDomain::NonNegative, -2.0);
        lp.add_row(
            "c1",
            vec![(x, 1.0), (y, 1.0)],
            Sense::Le,
            4.0,
            ConstraintClass::Auxiliary,
            0,
        );
        lp.add_row(
            "c2",
            vec![(x, 2.0), (y, 1.0)],
            Sense::Ge,
            2.0,
            ConstraintClass::Auxiliary,
            0,
        );
        lp.add_row(
            "c3",
            vec![(y, 1.0)],
            Sense::Le,
            3.0,
            ConstraintClass::Auxiliary,
            0,
        );
        let (sol, obj) = lp.solve().unwrap().into_optimal().unwrap();
        assert!((obj + 7.0).abs() < 1e-9);
        assert!((sol[x] - 1.0).abs() < 1e-9 && (sol[y] - 3.0).abs() < 1e-9);
        assert!(lp.max_violation(&sol).0 < 1e-9);
    }

    #[test]
    fn detects_infeasible_bounds_and_rows() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", VarDomain::Free, 1.0);
        lp.add_row(
            "lo",
            vec![(x, 1.0)],
            Sense::Ge,
            2.0,
            ConstraintClass::Capacity,
            0,
        );
        lp.add_row(
            "hi",
            vec![(x, -1.0)],
            Sense::Ge,
            -1.0,
            ConstraintClass::Capacity,
            0,
        );
        assert_eq!(lp.solve().unwrap(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", VarDomain::NonNegative, 1.0);
        let y = lp.add_var("y", VarDomain::NonNegative, 1.0);
        lp.add_row(
            "sum",
            vec![(x, 1.0), (y, 1.0)],
            Sense::Le,
            -1.0,
            ConstraintClass::Peak,
            0,
        );
        assert_eq!(lp.solve().unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", VarDomain::Free, 1.0);
        let y = lp.add_var("y", VarDomain::NonNegative, 0.0);
        lp.add_row(
            "r",
            vec![(x, 1.0), (y, 1.0)],
            Sense::Le,
            1.0,
            ConstraintClass::Auxiliary,
            0,
        );
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn lp_format_dump() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x_0", VarDomain::Free, 0.5);
        let y = lp.add_var("y_0", VarDomain::NonNegative, 0.0);
        lp.add_row(
            "r_0",
            vec![(x, 1.0), (y, -2.0)],
            Sense::Eq,
            1.5,
            ConstraintClass::Dynamics,
            0,
        );
        let mut buf = Vec::new();
        lp.write_lp_format(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("Minimize\n obj: + 0.5 x_0\n"));
        assert!(text.contains(" r_0: + 1 x_0 - 2 y_0 = 1.5\n"));
        assert!(text.contains("Bounds\n x_0 free\nEnd"));
    }
}
