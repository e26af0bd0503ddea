//! Two-phase bounded-variable revised simplex.
//!
//! Every row gets a logical variable (`a_i x + s_i = b_i`) whose bounds encode
//! the row sense. Rows whose starting residual violates the logical's bounds
//! receive an artificial column; phase one drives the artificials to zero and
//! then fixes them at zero for phase two.
//!
//! Pricing is Dantzig's largest reduced cost with a lowest-index tie-break,
//! switching to Bland's rule after a streak of degenerate pivots.

use crate::lu::BasisFactor;
use crate::model::{LinearProgram, Sense};
use crate::{LpError, LpSolution, SolveOptions, Status};

const PIVOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free variable resting at zero.
    FreeZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

enum StepOutcome {
    Optimal,
    Unbounded,
    Moved { degenerate: bool },
}

struct Candidate {
    var: usize,
    reduced_cost: f64,
}

pub(crate) fn solve(lp: &LinearProgram, opts: &SolveOptions) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let mut solver = Solver::new(lp, opts)?;
    solver.run()
}

struct Solver<'a> {
    lp: &'a LinearProgram,
    opts: SolveOptions,
    m: usize,
    n: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    rhs: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Objective of the current phase, over all variables.
    cost: Vec<f64>,
    /// Original objective extended with zeros, used for phase-one tie-breaks.
    cost2: Vec<f64>,
    /// For each artificial: its row and sign.
    artificials: Vec<(usize, f64)>,
    x: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    factor: BasisFactor,
    iterations: usize,
    degenerate_streak: usize,
    primal_tol: f64,
    dual_tol: f64,
}

impl<'a> Solver<'a> {
    fn new(lp: &'a LinearProgram, opts: &SolveOptions) -> Result<Self, LpError> {
        let m = lp.num_constraints();
        let n = lp.num_vars();

        let mut counts = vec![0usize; n + 1];
        for row in lp.constraints() {
            for &(j, _) in &row.coeffs {
                counts[j + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let nnz = col_start[n];
        let mut col_row = vec![0usize; nnz];
        let mut col_val = vec![0.0f64; nnz];
        let mut fill = counts;
        for (i, row) in lp.constraints().iter().enumerate() {
            for &(j, a) in &row.coeffs {
                let p = fill[j];
                col_row[p] = i;
                col_val[p] = a;
                fill[j] += 1;
            }
        }

        let rhs: Vec<f64> = lp.constraints().iter().map(|r| r.rhs).collect();
        let mut lo = lp.lower_bounds().to_vec();
        let mut hi = lp.upper_bounds().to_vec();
        for row in lp.constraints() {
            let (l, h) = match row.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lo.push(l);
            hi.push(h);
        }

        // Nonbasic starting values for structurals.
        let mut x = vec![0.0; n + m];
        let mut state = vec![VarState::AtLower; n + m];
        for j in 0..n {
            if lo[j].is_finite() {
                x[j] = lo[j];
                state[j] = VarState::AtLower;
            } else if hi[j].is_finite() {
                x[j] = hi[j];
                state[j] = VarState::AtUpper;
            } else {
                x[j] = 0.0;
                state[j] = VarState::FreeZero;
            }
        }

        let mut residual = rhs.clone();
        for j in 0..n {
            if x[j] != 0.0 {
                for p in col_start[j]..col_start[j + 1] {
                    residual[col_row[p]] -= col_val[p] * x[j];
                }
            }
        }

        let mut artificials = Vec::new();
        let mut basis = Vec::with_capacity(m);
        let mut basis_cols = Vec::with_capacity(m);
        for i in 0..m {
            let s = n + i;
            let r = residual[i];
            if r >= lo[s] && r <= hi[s] {
                x[s] = r;
                state[s] = VarState::Basic(i);
                basis.push(s);
                basis_cols.push(vec![(i, 1.0)]);
            } else {
                let s0 = if r < lo[s] { lo[s] } else { hi[s] };
                x[s] = s0;
                state[s] = if s0 == lo[s] { VarState::AtLower } else { VarState::AtUpper };
                let sign = if r - s0 > 0.0 { 1.0 } else { -1.0 };
                let a = lo.len();
                lo.push(0.0);
                hi.push(f64::INFINITY);
                x.push((r - s0).abs());
                state.push(VarState::Basic(i));
                artificials.push((i, sign));
                basis.push(a);
                basis_cols.push(vec![(i, sign)]);
            }
        }
        let total = lo.len();
        let factor = BasisFactor::factor(m, &basis_cols).map_err(|_| LpError::Numerical("initial basis is singular".into()))?;

        let mut cost2 = lp.objective().to_vec();
        cost2.resize(total, 0.0);
        let mut cost = vec![0.0; total];
        for c in cost.iter_mut().skip(n + m) {
            *c = -1.0;
        }

        let bscale = rhs.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
        let cscale = lp.objective().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let cscale = if cscale > 0.0 { cscale } else { 1.0 };

        Ok(Self {
            lp,
            opts: opts.clone(),
            m,
            n,
            col_start,
            col_row,
            col_val,
            rhs,
            lo,
            hi,
            cost,
            cost2,
            artificials,
            x,
            state,
            basis,
            factor,
            iterations: 0,
            degenerate_streak: 0,
            primal_tol: opts.feas_tol * 1e-3 * bscale,
            dual_tol: opts.opt_tol * 1e-3 * cscale,
        })
    }

    fn run(&mut self) -> Result<LpSolution, LpError> {
        if !self.artificials.is_empty() {
            self.dual_tol = self.opts.opt_tol * 1e-3;
            match self.iterate(Phase::One)? {
                Some(Status::IterationLimit) => return Ok(self.finish(Status::IterationLimit)),
                Some(_) | None => {}
            }
            let infeasibility: f64 = (self.n + self.m..self.lo.len()).map(|a| self.x[a]).sum();
            let bscale = self.rhs.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
            if infeasibility > self.opts.feas_tol * bscale {
                return Ok(self.finish(Status::Infeasible));
            }
            for a in self.n + self.m..self.lo.len() {
                self.hi[a] = 0.0;
                if !matches!(self.state[a], VarState::Basic(_)) {
                    self.x[a] = 0.0;
                    self.state[a] = VarState::AtLower;
                }
            }
            self.recompute_basics();
        }
        let cscale = self.lp.objective().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        self.dual_tol = self.opts.opt_tol * 1e-3 * if cscale > 0.0 { cscale } else { 1.0 };
        self.cost = self.cost2.clone();
        self.degenerate_streak = 0;
        let status = self.iterate(Phase::Two)?.unwrap_or(Status::Optimal);
        Ok(self.finish(status))
    }

    /// Runs pivots until the phase terminates. Returns `None` on phase
    /// optimality, or a terminal status.
    fn iterate(&mut self, phase: Phase) -> Result<Option<Status>, LpError> {
        loop {
            if self.iterations >= self.opts.max_iters {
                return Ok(Some(Status::IterationLimit));
            }
            match self.step(phase)? {
                StepOutcome::Optimal => return Ok(None),
                StepOutcome::Unbounded => return Ok(Some(Status::Unbounded)),
                StepOutcome::Moved { degenerate } => {
                    self.iterations += 1;
                    if degenerate {
                        self.degenerate_streak += 1;
                    } else {
                        self.degenerate_streak = 0;
                    }
                }
            }
        }
    }

    fn bland(&self) -> bool {
        self.degenerate_streak >= self.opts.bland_after
    }

    fn duals(&self) -> Vec<f64> {
        let mut y: Vec<f64> = self.basis.iter().map(|&v| self.cost[v]).collect();
        self.factor.btran(&mut y);
        y
    }

    fn reduced_cost(&self, var: usize, y: &[f64]) -> f64 {
        let mut d = self.cost[var];
        if var < self.n {
            for p in self.col_start[var]..self.col_start[var + 1] {
                d -= y[self.col_row[p]] * self.col_val[p];
            }
        } else if var < self.n + self.m {
            d -= y[var - self.n];
        } else {
            let (row, sign) = self.artificials[var - self.n - self.m];
            d -= y[row] * sign;
        }
        d
    }

    fn column(&self, var: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if var < self.n {
            for p in self.col_start[var]..self.col_start[var + 1] {
                out[self.col_row[p]] += self.col_val[p];
            }
        } else if var < self.n + self.m {
            out[var - self.n] = 1.0;
        } else {
            let (row, sign) = self.artificials[var - self.n - self.m];
            out[row] = sign;
        }
    }

    fn price(&self, phase: Phase, y: &[f64]) -> Option<Candidate> {
        let bland = self.bland();
        let mut best: Option<Candidate> = None;
        let mut best_score = 0.0;
        let mut best_tie = f64::NEG_INFINITY;
        for var in 0..self.lo.len() {
            let st = self.state[var];
            if matches!(st, VarState::Basic(_)) || self.lo[var] == self.hi[var] {
                continue;
            }
            let d = self.reduced_cost(var, y);
            let improving = match st {
                VarState::AtLower => d > self.dual_tol,
                VarState::AtUpper => d < -self.dual_tol,
                VarState::FreeZero => d.abs() > self.dual_tol,
                VarState::Basic(_) => false,
            };
            if !improving {
                continue;
            }
            if bland {
                return Some(Candidate { var, reduced_cost: d });
            }
            let score = d.abs();
            let tie = if phase == Phase::One { d.signum() * self.cost2[var] } else { 0.0 };
            if score > best_score || (score == best_score && tie > best_tie) {
                best_score = score;
                best_tie = tie;
                best = Some(Candidate { var, reduced_cost: d });
            }
        }
        best
    }

    fn step(&mut self, phase: Phase) -> Result<StepOutcome, LpError> {
        let y = self.duals();
        let Some(Candidate { var: q, reduced_cost: d }) = self.price(phase, &y) else {
            return Ok(StepOutcome::Optimal);
        };
        let dir = if d > 0.0 { 1.0 } else { -1.0 };
        let mut alpha = vec![0.0; self.m];
        self.column(q, &mut alpha);
        self.factor.ftran(&mut alpha);

        let range = self.hi[q] - self.lo[q];
        let (theta, leaving) = if self.bland() {
            self.ratio_test_bland(&alpha, dir)
        } else {
            self.ratio_test_harris(&alpha, dir)
        };
        let (theta, leaving) = match (theta, leaving) {
            (t, Some(_)) if range.is_finite() && range <= t => (range, None),
            (t, l) if t.is_finite() => (t, l),
            _ if range.is_finite() => (range, None),
            _ => return Ok(StepOutcome::Unbounded),
        };

        self.x[q] += dir * theta;
        for (i, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                let v = self.basis[i];
                self.x[v] -= dir * a * theta;
            }
        }

        match leaving {
            None => {
                self.state[q] = if dir > 0.0 { VarState::AtUpper } else { VarState::AtLower };
                self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
            }
            Some(r) => {
                let out = self.basis[r];
                let delta = -dir * alpha[r];
                if delta < 0.0 {
                    self.x[out] = self.lo[out];
                    self.state[out] = VarState::AtLower;
                } else {
                    self.x[out] = self.hi[out];
                    self.state[out] = VarState::AtUpper;
                }
                self.basis[r] = q;
                self.state[q] = VarState::Basic(r);
                self.factor.update(r, &alpha);
                if self.factor.num_updates() >= self.opts.refactor_interval {
                    self.refactor()?;
                }
            }
        }
        Ok(StepOutcome::Moved { degenerate: theta <= self.primal_tol })
    }

    /// Two-pass ratio test: the first pass finds the step allowed with
    /// bounds relaxed by the primal tolerance, the second picks the largest
    /// pivot among rows that block within that step.
    fn ratio_test_harris(&self, alpha: &[f64], dir: f64) -> (f64, Option<usize>) {
        let mut theta_max = f64::INFINITY;
        for (i, &a) in alpha.iter().enumerate() {
            let delta = -dir * a;
            if delta.abs() <= PIVOT_TOL {
                continue;
            }
            let v = self.basis[i];
            let limit = if delta < 0.0 {
                if !self.lo[v].is_finite() {
                    continue;
                }
                (self.x[v] - self.lo[v] + self.primal_tol) / -delta
            } else {
                if !self.hi[v].is_finite() {
                    continue;
                }
                (self.hi[v] - self.x[v] + self.primal_tol) / delta
            };
            theta_max = theta_max.min(limit);
        }
        if !theta_max.is_finite() {
            return (f64::INFINITY, None);
        }
        let mut best: Option<(usize, f64, f64)> = None;
        for (i, &a) in alpha.iter().enumerate() {
            let delta = -dir * a;
            if delta.abs() <= PIVOT_TOL {
                continue;
            }
            let v = self.basis[i];
            let ratio = if delta < 0.0 {
                if !self.lo[v].is_finite() {
                    continue;
                }
                (self.x[v] - self.lo[v]) / -delta
            } else {
                if !self.hi[v].is_finite() {
                    continue;
                }
                (self.hi[v] - self.x[v]) / delta
            };
            if ratio <= theta_max {
                let better = match best {
                    None => true,
                    Some((bi, bmag, _)) => delta.abs() > bmag || (delta.abs() == bmag && self.basis[i] < self.basis[bi]),
                };
                if better {
                    best = Some((i, delta.abs(), ratio));
                }
            }
        }
        match best {
            Some((i, _, ratio)) => (ratio.max(0.0), Some(i)),
            None => (f64::INFINITY, None),
        }
    }

    fn ratio_test_bland(&self, alpha: &[f64], dir: f64) -> (f64, Option<usize>) {
        let mut best: Option<(usize, f64)> = None;
        for (i, &a) in alpha.iter().enumerate() {
            let delta = -dir * a;
            if delta.abs() <= PIVOT_TOL {
                continue;
            }
            let v = self.basis[i];
            let ratio = if delta < 0.0 {
                if !self.lo[v].is_finite() {
                    continue;
                }
                (self.x[v] - self.lo[v]) / -delta
            } else {
                if !self.hi[v].is_finite() {
                    continue;
                }
                (self.hi[v] - self.x[v]) / delta
            };
            let ratio = ratio.max(0.0);
            let better = match best {
                None => true,
                Some((bi, br)) => ratio < br || (ratio == br && v < self.basis[bi]),
            };
            if better {
                best = Some((i, ratio));
            }
        }
        match best {
            Some((i, r)) => (r, Some(i)),
            None => (f64::INFINITY, None),
        }
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let mut cols = Vec::with_capacity(self.m);
        let mut buf = vec![0.0; self.m];
        for &v in &self.basis {
            self.column(v, &mut buf);
            cols.push(buf.iter().enumerate().filter(|(_, &a)| a != 0.0).map(|(i, &a)| (i, a)).collect::<Vec<_>>());
        }
        self.factor = BasisFactor::factor(self.m, &cols)
            .map_err(|s| LpError::Numerical(format!("basis became singular at position {}", s.position)))?;
        self.recompute_basics();
        Ok(())
    }

    /// `x_B = B^{-1} (b - N x_N)` from scratch.
    fn recompute_basics(&mut self) {
        let mut r = self.rhs.clone();
        for var in 0..self.lo.len() {
            if matches!(self.state[var], VarState::Basic(_)) {
                continue;
            }
            let xv = self.x[var];
            if xv == 0.0 {
                continue;
            }
            if var < self.n {
                for p in self.col_start[var]..self.col_start[var + 1] {
                    r[self.col_row[p]] -= self.col_val[p] * xv;
                }
            } else if var < self.n + self.m {
                r[var - self.n] -= xv;
            } else {
                let (row, sign) = self.artificials[var - self.n - self.m];
                r[row] -= sign * xv;
            }
        }
        self.factor.ftran(&mut r);
        for (i, &v) in self.basis.iter().enumerate() {
            self.x[v] = r[i];
        }
    }

    fn finish(&mut self, status: Status) -> LpSolution {
        // A failed refactorization leaves the eta-updated iterate in place.
        let _ = self.refactor();
        let y = self.duals();
        let mut primal: Vec<f64> = self.x[..self.n].to_vec();
        if status == Status::Optimal {
            for (j, v) in primal.iter_mut().enumerate() {
                let (lo, hi) = (self.lo[j], self.hi[j]);
                if *v < lo && lo - *v <= self.opts.feas_tol {
                    *v = lo;
                }
                if *v > hi && *v - hi <= self.opts.feas_tol {
                    *v = hi;
                }
            }
        }
        let objective_value = self.lp.objective_value(&primal);

        // Dual bound b'y + sum_j sup_{x_j in [lo, hi]} d_j x_j over structurals
        // and logicals, with wrong-signed reduced costs on infinite bounds
        // projected to zero and reported as dual infeasibility.
        let mut dual_objective: f64 = self.rhs.iter().zip(&y).map(|(b, v)| b * v).sum();
        let mut dual_infeasibility = 0.0f64;
        for var in 0..self.n + self.m {
            let d = if var < self.n { self.reduced_cost(var, &y) } else { -y[var - self.n] };
            let (lo, hi) = (self.lo[var], self.hi[var]);
            let contribution = if d > 0.0 {
                if hi.is_finite() {
                    d * hi
                } else {
                    dual_infeasibility = dual_infeasibility.max(d);
                    0.0
                }
            } else if d < 0.0 {
                if lo.is_finite() {
                    d * lo
                } else {
                    dual_infeasibility = dual_infeasibility.max(-d);
                    0.0
                }
            } else {
                0.0
            };
            dual_objective += contribution;
        }

        let mut activity = vec![0.0; self.m];
        for (j, &v) in primal.iter().enumerate() {
            for p in self.col_start[j]..self.col_start[j + 1] {
                activity[self.col_row[p]] += self.col_val[p] * v;
            }
        }
        let mut primal_residual = 0.0f64;
        for (i, row) in self.lp.constraints().iter().enumerate() {
            let r = activity[i] - self.rhs[i];
            let viol = match row.sense {
                Sense::Le => r.max(0.0),
                Sense::Ge => (-r).max(0.0),
                Sense::Eq => r.abs(),
            };
            primal_residual = primal_residual.max(viol);
        }
        for (j, &v) in primal.iter().enumerate() {
            primal_residual = primal_residual.max(self.lo[j] - v).max(v - self.hi[j]);
        }

        LpSolution {
            status,
            primal,
            dual: y,
            objective_value,
            duality_gap: dual_objective - objective_value,
            primal_residual,
            dual_infeasibility,
            iterations: self.iterations,
        }
    }
}
