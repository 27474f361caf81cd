//! Flow-program builders, a solver front end, feasibility checking, capacity
//! shrinkage, frame construction, and the expected-optimal upper bound.
//!
//! All programs are maximization LPs over nonnegative variables. Loop links
//! have no capacity rows at all (their capacity is unbounded), so every bound
//! stored here is finite.

mod builders;
mod frames;
mod table;

pub use builders::{build_ei, build_es, build_fns, build_fnsp, build_fs};
pub use frames::{build_frames, FramePlan};
pub use table::{
    check_forwarding_table, check_time_varying_table, ForwardingTable, TimeVaryingForwardingTable,
};

use crate::error::LpError;
use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use std::collections::HashMap;

/// Residual tolerance for feasibility checks on solved programs.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Relative objective tolerance the solver is held to.
pub const OBJECTIVE_REL_TOL: f64 = 1e-6;
/// Values in [-CLIP_TOL, 0) are clipped to zero; anything below is an error.
pub const CLIP_TOL: f64 = 1e-10;

/// Identity of an LP variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKey {
    /// Stationary forwarding variable `f[type][link][age]`.
    Flow { ptype: usize, link: usize, age: u32 },
    /// Time-varying forwarding variable `f[type][link][age][arrival slot]`.
    TimedFlow {
        ptype: usize,
        link: usize,
        age: u32,
        slot: usize,
    },
    /// Route-schedule probability `x[type][route][arrival slot]` (slot 0 in
    /// the stationary program).
    Route { ptype: usize, route: usize, slot: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
}

/// What a constraint row encodes; capacity rows are the shrink targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowTag {
    Admit { ptype: usize, slot: usize },
    Conservation { ptype: usize, node: usize, age: u32, slot: usize },
    Capacity { link: usize, slot: usize },
}

#[derive(Debug, Clone)]
pub struct LpConstraint {
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub bound: f64,
    pub tag: RowTag,
}

/// A maximization LP over nonnegative variables.
#[derive(Debug, Clone)]
pub struct LpProblem {
    objective: Vec<f64>,
    constraints: Vec<LpConstraint>,
    keys: Vec<VarKey>,
    index: HashMap<VarKey, usize>,
}

impl LpProblem {
    pub fn new() -> Self {
        LpProblem {
            objective: Vec::new(),
            constraints: Vec::new(),
            keys: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn var(&mut self, key: VarKey) -> usize {
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.keys.len();
        self.keys.push(key);
        self.index.insert(key, i);
        self.objective.push(0.0);
        i
    }

    pub fn lookup(&self, key: VarKey) -> Option<usize> {
        self.index.get(&key).copied()
    }

    pub fn var_count(&self) -> usize {
        self.keys.len()
    }

    pub fn keys(&self) -> &[VarKey] {
        &self.keys
    }

    pub fn constraints(&self) -> &[LpConstraint] {
        &self.constraints
    }

    pub fn add_objective(&mut self, var: usize, coeff: f64) {
        self.objective[var] += coeff;
    }

    pub fn add_constraint(
        &mut self,
        terms: Vec<(usize, f64)>,
        relation: Relation,
        bound: f64,
        tag: RowTag,
    ) {
        debug_assert!(bound.is_finite());
        self.constraints.push(LpConstraint {
            terms,
            relation,
            bound,
            tag,
        });
    }

    /// Every variable must appear in the objective or some constraint.
    pub fn validate(&self) -> Result<(), LpError> {
        let mut used: Vec<bool> = self.objective.iter().map(|c| *c != 0.0).collect();
        for c in &self.constraints {
            for (v, _) in &c.terms {
                used[*v] = true;
            }
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(LpError::SolverFailure(format!(
                "variable {i} ({:?}) appears in no constraint or objective",
                self.keys[i]
            )));
        }
        Ok(())
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective
            .iter()
            .zip(values)
            .map(|(c, v)| c * v)
            .sum()
    }

    /// Worst violations over all rows: `(max equality residual, max
    /// inequality excess, most negative variable)`.
    pub fn residuals(&self, values: &[f64]) -> (f64, f64, f64) {
        let mut eq = 0.0f64;
        let mut ineq = 0.0f64;
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|(v, a)| a * values[*v]).sum();
            match c.relation {
                Relation::Eq => eq = eq.max((lhs - c.bound).abs()),
                Relation::Le => ineq = ineq.max(lhs - c.bound),
            }
        }
        let neg = values.iter().copied().fold(0.0f64, |m, v| m.min(v));
        (eq, ineq, neg)
    }
}

impl Default for LpProblem {
    fn default() -> Self {
        Self::new()
    }
}

/// Primal solution with the recomputed (maximization) objective.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
}

impl LpSolution {
    pub fn value(&self, problem: &LpProblem, key: VarKey) -> f64 {
        problem.lookup(key).map_or(0.0, |i| self.values[i])
    }
}

/// Solves the program with a deterministic interior-point method, clips
/// sub-`CLIP_TOL` negatives to zero, and verifies residuals to
/// [`RESIDUAL_TOL`] before returning.
pub fn solve(problem: &LpProblem) -> Result<LpSolution, LpError> {
    problem.validate()?;
    let n = problem.var_count();
    if n == 0 {
        return Ok(LpSolution {
            values: Vec::new(),
            objective: 0.0,
        });
    }

    // Clarabel minimizes q'x subject to Ax + s = b, s in cone; rows are laid
    // out as equalities, then <= rows, then -x <= 0 for nonnegativity.
    let q: Vec<f64> = problem.objective.iter().map(|c| -c).collect();
    let eq_rows: Vec<&LpConstraint> = problem
        .constraints
        .iter()
        .filter(|c| c.relation == Relation::Eq)
        .collect();
    let le_rows: Vec<&LpConstraint> = problem
        .constraints
        .iter()
        .filter(|c| c.relation == Relation::Le)
        .collect();
    let mut row_no = 0usize;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    for c in eq_rows.iter().chain(le_rows.iter()) {
        for (v, a) in &c.terms {
            triplets.push((row_no, *v, *a));
        }
        b.push(c.bound);
        row_no += 1;
    }
    for v in 0..n {
        triplets.push((row_no, v, -1.0));
        b.push(0.0);
        row_no += 1;
    }
    let m = row_no;
    let a = csc_from_triplets(m, n, triplets);
    let p = CscMatrix::zeros((n, n));
    let cones = [
        SupportedConeT::ZeroConeT(eq_rows.len()),
        SupportedConeT::NonnegativeConeT(le_rows.len() + n),
    ];
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_feas(1e-10)
        .tol_gap_abs(1e-10)
        .tol_gap_rel(1e-10)
        .max_iter(200)
        .build()
        .map_err(|e| LpError::SolverFailure(format!("settings: {e}")))?;
    let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings);
    solver.solve();

    match solver.solution.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => {}
        other => {
            return Err(LpError::SolverFailure(format!(
                "status {other:?} after {} iterations",
                solver.solution.iterations
            )))
        }
    }
    let mut values = solver.solution.x.clone();
    for v in values.iter_mut() {
        // clip IPM noise; anything below -CLIP_TOL survives for the residual
        // check to report
        if *v < 0.0 && *v >= -CLIP_TOL {
            *v = 0.0;
        }
    }
    let (eq_res, ineq_res, neg) = problem.residuals(&values);
    if eq_res > RESIDUAL_TOL || ineq_res > RESIDUAL_TOL || neg < -CLIP_TOL {
        return Err(LpError::SolverFailure(format!(
            "residuals exceed tolerance: eq {eq_res:.3e}, ineq {ineq_res:.3e}, min var {neg:.3e}"
        )));
    }
    let objective = problem.objective_value(&values);
    Ok(LpSolution { values, objective })
}

fn csc_from_triplets(m: usize, n: usize, mut triplets: Vec<(usize, usize, f64)>) -> CscMatrix<f64> {
    triplets.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
    let mut colptr = vec![0usize; n + 1];
    let mut rowval: Vec<usize> = Vec::with_capacity(triplets.len());
    let mut nzval: Vec<f64> = Vec::with_capacity(triplets.len());
    let mut i = 0;
    for c in 0..n {
        while i < triplets.len() && triplets[i].1 == c {
            let r = triplets[i].0;
            let mut v = triplets[i].2;
            i += 1;
            while i < triplets.len() && triplets[i].1 == c && triplets[i].0 == r {
                v += triplets[i].2;
                i += 1;
            }
            rowval.push(r);
            nzval.push(v);
        }
        colptr[c + 1] = rowval.len();
    }
    CscMatrix::new(m, n, colptr, rowval, nzval)
}

/// Multiplies every capacity bound by `eta`, leaving other rows untouched.
pub fn shrink_capacities(problem: &LpProblem, eta: f64) -> Result<LpProblem, LpError> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(LpError::InvalidEta(eta));
    }
    let mut out = problem.clone();
    for c in out.constraints.iter_mut() {
        if matches!(c.tag, RowTag::Capacity { .. }) {
            c.bound *= eta;
        }
    }
    Ok(out)
}

/// Upper bound on the expected optimal reward over a horizon of `t_len`
/// slots, from the stationary optimum at zero shrink:
/// `t_len * w_fs / (1 - 2 d_max^2 / t_len)`. Requires `t_len > 2 d_max^2`.
pub fn upper_bound_expected_optimal(
    w_fs_eps0: f64,
    t_len: usize,
    d_max: u32,
) -> Result<f64, LpError> {
    let need = 2 * (d_max as usize).pow(2);
    if t_len <= need {
        return Err(LpError::HorizonTooShort { need, got: t_len });
    }
    let t = t_len as f64;
    Ok(t * w_fs_eps0 / (1.0 - 2.0 * (d_max as f64).powi(2) / t))
}
