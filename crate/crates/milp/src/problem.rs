use thiserror::Error;

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Sparse matrix as row-major sorted triplets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        SparseMatrix {
            n_rows,
            n_cols,
            entries: Vec::new(),
        }
    }

    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut entries: Vec<(usize, usize, f64)>,
    ) -> Result<Self, MilpError> {
        for &(r, c, _) in &entries {
            if r >= n_rows || c >= n_cols {
                return Err(MilpError::InvalidProblem(format!(
                    "triplet ({r},{c}) out of {n_rows}x{n_cols}"
                )));
            }
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        if entries.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(MilpError::InvalidProblem("duplicate triplet".into()));
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            entries,
        })
    }

    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.n_rows && col < self.n_cols);
        if val != 0.0 {
            self.entries.push((row, col, val));
        }
    }

    /// Appends an empty row and returns its index.
    pub fn add_row(&mut self) -> usize {
        self.n_rows += 1;
        self.n_rows - 1
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Dense row-vector products y = A x.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }
}

/// Solver status per the standard-form contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NodeLimit,
    TimeLimit,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::IterationLimit => "iteration_limit",
            Status::NodeLimit => "node_limit",
            Status::TimeLimit => "time_limit",
        };
        f.write_str(s)
    }
}

/// min c.x  s.t.  A x <= b,  A_eq x = b_eq,  lb <= x <= ub,  x_I integer.
#[derive(Debug, Clone)]
pub struct MilpProblem {
    pub c: Vec<f64>,
    pub a_ub: SparseMatrix,
    pub b_ub: Vec<f64>,
    pub a_eq: SparseMatrix,
    pub b_eq: Vec<f64>,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    /// Sorted indices of integer variables.
    pub integer_vars: Vec<usize>,
}

impl MilpProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        c: Vec<f64>,
        a_ub: SparseMatrix,
        b_ub: Vec<f64>,
        a_eq: SparseMatrix,
        b_eq: Vec<f64>,
        lb: Vec<f64>,
        ub: Vec<f64>,
        mut integer_vars: Vec<usize>,
    ) -> Result<Self, MilpError> {
        let n = c.len();
        if lb.len() != n || ub.len() != n {
            return Err(MilpError::InvalidProblem("bound length mismatch".into()));
        }
        if a_ub.n_cols != n || a_eq.n_cols != n {
            return Err(MilpError::InvalidProblem("matrix width mismatch".into()));
        }
        if a_ub.n_rows != b_ub.len() || a_eq.n_rows != b_eq.len() {
            return Err(MilpError::InvalidProblem("rhs length mismatch".into()));
        }
        for j in 0..n {
            if !lb[j].is_finite() || !ub[j].is_finite() {
                return Err(MilpError::InvalidProblem(format!("bound on x{j} not finite")));
            }
            if lb[j] > ub[j] {
                return Err(MilpError::InvalidProblem(format!("lb > ub on x{j}")));
            }
        }
        integer_vars.sort_unstable();
        integer_vars.dedup();
        if integer_vars.iter().any(|&j| j >= n) {
            return Err(MilpError::InvalidProblem("integer index out of range".into()));
        }
        Ok(MilpProblem {
            c,
            a_ub,
            b_ub,
            a_eq,
            b_eq,
            lb,
            ub,
            integer_vars,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.c.len()
    }

    /// Maximum violation of rows, bounds and integrality at `x`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let mut v: f64 = 0.0;
        for (r, ax) in self.a_ub.mul_vec(x).into_iter().enumerate() {
            v = v.max(ax - self.b_ub[r]);
        }
        for (r, ax) in self.a_eq.mul_vec(x).into_iter().enumerate() {
            v = v.max((ax - self.b_eq[r]).abs());
        }
        for j in 0..x.len() {
            v = v.max(self.lb[j] - x[j]).max(x[j] - self.ub[j]);
        }
        v
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }
}

#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub status: Status,
    /// Best known point; meaningful for Optimal and for limit statuses with
    /// an incumbent. Empty when no point is available.
    pub x: Vec<f64>,
    pub objective: f64,
    pub nodes_explored: u64,
}

impl MilpSolution {
    pub fn has_point(&self) -> bool {
        !self.x.is_empty()
    }
}
