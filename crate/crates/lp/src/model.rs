use crate::LpError;

/// Sense of a linear constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

/// One sparse constraint row `sum_j coeffs[j].1 * x[coeffs[j].0]  (sense)  rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A maximization problem
///
/// ```text
/// max  c'x
/// s.t. A x (<=, >=, =) b
///      lo <= x <= hi
/// ```
///
/// Lower bounds may be `-inf` and upper bounds `+inf`. New variables start
/// with bounds `[0, +inf)` and a zero objective coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            objective: vec![0.0; num_vars],
            lower: vec![0.0; num_vars],
            upper: vec![f64::INFINITY; num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn lower_bounds(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper_bounds(&self) -> &[f64] {
        &self.upper
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) {
        self.objective[var] = coeff;
    }

    pub fn set_objective_vec(&mut self, coeffs: Vec<f64>) -> Result<(), LpError> {
        if coeffs.len() != self.num_vars() {
            return Err(LpError::Malformed(format!(
                "objective has {} entries for {} variables",
                coeffs.len(),
                self.num_vars()
            )));
        }
        self.objective = coeffs;
        Ok(())
    }

    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) {
        self.lower[var] = lo;
        self.upper[var] = hi;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.constraints.push(Constraint { coeffs, sense, rhs });
        self.constraints.len() - 1
    }

    /// Objective value `c'x`.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Multiply every objective coefficient by `factor`.
    pub fn scale_objective(&mut self, factor: f64) {
        for c in &mut self.objective {
            *c *= factor;
        }
    }

    /// Checks dimensions, finiteness and bound ordering.
    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        for (j, c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(LpError::Malformed(format!("objective coefficient {j} is not finite")));
            }
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(LpError::Malformed(format!("variable {j} has invalid bounds [{lo}, {hi}]")));
            }
            if lo > hi {
                return Err(LpError::Malformed(format!("variable {j} has lower bound {lo} above upper bound {hi}")));
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::Malformed(format!("row {i} has non-finite right-hand side")));
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(LpError::Malformed(format!("row {i} references variable {j} of {n}")));
                }
                if !a.is_finite() {
                    return Err(LpError::Malformed(format!("row {i} has a non-finite coefficient")));
                }
            }
        }
        Ok(())
    }
}
