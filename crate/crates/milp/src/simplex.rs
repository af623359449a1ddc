//! Bounded-variable primal simplex (revised form).
//!
//! Every row gets a logical variable: slack in [0, inf) for `<=` rows,
//! artificial fixed at [0, 0] for `=` rows, so the all-logical basis is the
//! identity and phase 1 minimises the bound violations of basic variables.
//! The basis inverse is applied through a dense LU of the "bump" (the rows
//! not owned by a basic logical) plus a product-form eta file, which keeps
//! iterations cheap when most basic variables are logicals.

use crate::problem::{MilpProblem, MilpSolution, Status};

const TOL_PIVOT: f64 = 1e-9;
const TOL_DJ: f64 = 1e-9;
const TOL_BOUND: f64 = 1e-9;
const TOL_RATIO_TIE: f64 = 1e-9;
const TOL_HARRIS: f64 = 1e-7;
const TOL_FEAS_LP: f64 = 1e-6;
const REFACTOR_EVERY: usize = 16;
const STALL_LIMIT: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VStat {
    Basic(usize),
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub objective: f64,
    /// Structural part of the solution.
    pub x: Vec<f64>,
}

/// Sparse LU of the bump matrix D (bump rows x spike columns) with
/// Markowitz pivot selection and threshold partial pivoting. Row/column
/// singletons eliminate with no fill, so sparse bases factor in near-linear
/// time; only genuinely coupled blocks accumulate fill-in.
struct BumpLu {
    /// (row, col, pivot value) in elimination order.
    pivots: Vec<(usize, usize, f64)>,
    // L: row ops per elimination step, b[row] -= mult * b[pivot row]
    l_starts: Vec<usize>,
    l_rows: Vec<usize>,
    l_vals: Vec<f64>,
    // U: surviving entries of each pivot row (pivot entry excluded)
    u_starts: Vec<usize>,
    u_cols: Vec<usize>,
    u_vals: Vec<f64>,
}

impl BumpLu {
    fn build(k: usize, entries: &[(usize, usize, f64)]) -> Option<BumpLu> {
        // working rows; col_rows may hold stale row ids, filtered on scan
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
        let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); k];
        let mut col_cnt = vec![0usize; k];
        for &(r, c, v) in entries {
            rows[r].push((c, v));
            col_rows[c].push(r);
            col_cnt[c] += 1;
        }
        let mut lu = BumpLu {
            pivots: Vec::with_capacity(k),
            l_starts: vec![0],
            l_rows: Vec::new(),
            l_vals: Vec::new(),
            u_starts: vec![0],
            u_cols: Vec::new(),
            u_vals: Vec::new(),
        };
        let mut row_alive = vec![true; k];
        let mut col_alive = vec![true; k];
        let mut row_cnt: Vec<usize> = rows.iter().map(|r| r.len()).collect();
        let mut scratch = vec![0.0f64; k];
        let mut stamp = vec![0u32; k];
        let mut tick = 0u32;
        for _ in 0..k {
            // pivot column: fewest active entries (Markowitz on columns)
            let mut pc = usize::MAX;
            let mut best_cnt = usize::MAX;
            for c in 0..k {
                if col_alive[c] && col_cnt[c] < best_cnt {
                    best_cnt = col_cnt[c];
                    pc = c;
                    if best_cnt <= 1 {
                        break;
                    }
                }
            }
            if pc == usize::MAX || best_cnt == 0 {
                return None; // structurally singular
            }
            // pivot row: acceptable magnitude, then fewest entries
            let mut vmax = 0.0f64;
            for &r in &col_rows[pc] {
                if row_alive[r] {
                    for &(c, v) in &rows[r] {
                        if c == pc {
                            vmax = vmax.max(v.abs());
                            break;
                        }
                    }
                }
            }
            if vmax < 1e-12 {
                return None;
            }
            let mut pr = usize::MAX;
            let mut pr_cnt = usize::MAX;
            let mut pv = 0.0;
            for &r in &col_rows[pc] {
                if !row_alive[r] || row_cnt[r] >= pr_cnt {
                    continue;
                }
                for &(c, v) in &rows[r] {
                    if c == pc {
                        if v.abs() >= 0.1 * vmax {
                            pr = r;
                            pr_cnt = row_cnt[r];
                            pv = v;
                        }
                        break;
                    }
                }
            }
            if pr == usize::MAX {
                return None;
            }
            row_alive[pr] = false;
            col_alive[pc] = false;
            // load pivot row into scratch
            tick += 1;
            for &(c, v) in &rows[pr] {
                scratch[c] = v;
                stamp[c] = tick;
            }
            for &(c, _) in &rows[pr] {
                if col_alive[c] {
                    col_cnt[c] -= 1;
                } else if c == pc {
                    col_cnt[c] -= 1;
                }
            }
            // eliminate pc from the remaining rows
            let targets: Vec<usize> = col_rows[pc]
                .iter()
                .copied()
                .filter(|&r| row_alive[r])
                .collect();
            for r in targets {
                let Some(pos) = rows[r].iter().position(|&(c, _)| c == pc) else {
                    continue; // stale col_rows entry
                };
                let mult = rows[r][pos].1 / pv;
                lu.l_rows.push(r);
                lu.l_vals.push(mult);
                rows[r].swap_remove(pos);
                col_cnt[pc] -= 1;
                let mut merged = Vec::with_capacity(rows[r].len() + rows[pr].len());
                tick += 1;
                for &(c, v) in &rows[r] {
                    stamp[c] = tick;
                    scratch[c] = v;
                }
                for &(c, v) in &rows[pr] {
                    if c == pc {
                        continue;
                    }
                    if stamp[c] == tick {
                        scratch[c] -= mult * v;
                    } else {
                        stamp[c] = tick;
                        scratch[c] = -mult * v;
                        if col_alive[c] {
                            col_rows[c].push(r);
                            col_cnt[c] += 1;
                        }
                    }
                }
                for &(c, _) in &rows[r] {
                    if stamp[c] == tick {
                        merged.push((c, scratch[c]));
                        stamp[c] = 0;
                    }
                }
                for &(c, v) in &rows[pr] {
                    if c != pc && stamp[c] == tick {
                        merged.push((c, scratch[c]));
                        let _ = v;
                    }
                }
                row_cnt[r] = merged.len();
                rows[r] = merged;
            }
            lu.l_starts.push(lu.l_rows.len());
            // store the U part of the pivot row
            for &(c, v) in &rows[pr] {
                if c != pc {
                    lu.u_cols.push(c);
                    lu.u_vals.push(v);
                }
            }
            lu.u_starts.push(lu.u_cols.len());
            lu.pivots.push((pr, pc, pv));
            rows[pr].clear();
        }
        Some(lu)
    }

    /// z with D z = b; z must be zeroed, b is consumed as scratch.
    fn solve(&self, b: &mut [f64], z: &mut [f64]) {
        for (t, &(pr, _, _)) in self.pivots.iter().enumerate() {
            let bp = b[pr];
            if bp != 0.0 {
                for i in self.l_starts[t]..self.l_starts[t + 1] {
                    b[self.l_rows[i]] -= self.l_vals[i] * bp;
                }
            }
        }
        for (t, &(pr, pc, pv)) in self.pivots.iter().enumerate().rev() {
            let mut s = b[pr];
            for i in self.u_starts[t]..self.u_starts[t + 1] {
                s -= self.u_vals[i] * z[self.u_cols[i]];
            }
            z[pc] = s / pv;
        }
    }

    /// t with D\u{1d40} t = c; t must be zeroed, c is consumed as scratch.
    fn solve_transpose(&self, c: &mut [f64], t: &mut [f64]) {
        for (step, &(pr, pc, pv)) in self.pivots.iter().enumerate() {
            let y = c[pc] / pv;
            t[pr] = y;
            if y != 0.0 {
                for i in self.u_starts[step]..self.u_starts[step + 1] {
                    c[self.u_cols[i]] -= self.u_vals[i] * y;
                }
            }
        }
        for (step, &(pr, _, _)) in self.pivots.iter().enumerate().rev() {
            let mut s = t[pr];
            for i in self.l_starts[step]..self.l_starts[step + 1] {
                s -= self.l_vals[i] * t[self.l_rows[i]];
            }
            t[pr] = s;
        }
    }
}

struct Eta {
    slot: usize,
    wp: f64,
    w: Vec<(usize, f64)>,
}

pub struct Simplex {
    m: usize,
    n_struct: usize,
    n_total: usize,
    // structural columns, column-major
    col_starts: Vec<usize>,
    col_rows: Vec<usize>,
    col_vals: Vec<f64>,
    rhs: Vec<f64>,
    cost: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    x: Vec<f64>,
    vstat: Vec<VStat>,
    basic: Vec<usize>,
    // factorization (snapshot of the basis at refactor time)
    spike_slots: Vec<usize>,
    spike_vars: Vec<usize>,
    bump_rows: Vec<usize>,
    covered: Vec<usize>, // row -> slot of basic logical, usize::MAX if bump row
    lu: Option<BumpLu>,
    etas: Vec<Eta>,
    pub iteration_limit: usize,
    /// Wall-clock cutoff; expiring mid-solve surfaces as `IterationLimit`.
    pub deadline: Option<std::time::Instant>,
    /// Whether the current basis ended a solve dual feasible (optimal), so
    /// the next solve can start with dual simplex iterations.
    dual_ready: bool,
}

impl Simplex {
    /// Builds the solver for a problem; integer restrictions are ignored.
    pub fn new(p: &MilpProblem) -> Simplex {
        let n = p.n_vars();
        let m = p.a_ub.n_rows + p.a_eq.n_rows;
        let n_total = n + m;
        // column-major structural matrix over stacked rows [a_ub; a_eq]
        let mut counts = vec![0usize; n];
        for &(_, c, _) in p.a_ub.entries() {
            counts[c] += 1;
        }
        for &(_, c, _) in p.a_eq.entries() {
            counts[c] += 1;
        }
        let mut col_starts = vec![0usize; n + 1];
        for j in 0..n {
            col_starts[j + 1] = col_starts[j] + counts[j];
        }
        let nnz = col_starts[n];
        let mut col_rows = vec![0usize; nnz];
        let mut col_vals = vec![0.0; nnz];
        let mut fill = col_starts.clone();
        for &(r, c, v) in p.a_ub.entries() {
            col_rows[fill[c]] = r;
            col_vals[fill[c]] = v;
            fill[c] += 1;
        }
        let off = p.a_ub.n_rows;
        for &(r, c, v) in p.a_eq.entries() {
            col_rows[fill[c]] = r + off;
            col_vals[fill[c]] = v;
            fill[c] += 1;
        }
        let mut rhs = p.b_ub.clone();
        rhs.extend_from_slice(&p.b_eq);
        let mut lb = p.lb.clone();
        let mut ub = p.ub.clone();
        for r in 0..m {
            lb.push(0.0);
            ub.push(if r < p.a_ub.n_rows { f64::INFINITY } else { 0.0 });
        }
        let mut s = Simplex {
            m,
            n_struct: n,
            n_total,
            col_starts,
            col_rows,
            col_vals,
            rhs,
            cost: p.c.clone(),
            lb,
            ub,
            x: vec![0.0; n_total],
            vstat: vec![VStat::Lower; n_total],
            basic: Vec::new(),
            spike_slots: Vec::new(),
            spike_vars: Vec::new(),
            bump_rows: Vec::new(),
            covered: vec![usize::MAX; m],
            lu: None,
            etas: Vec::new(),
            iteration_limit: 200_000,
            deadline: None,
            dual_ready: false,
        };
        s.reset_basis();
        s
    }

    /// Overwrites the structural bounds (used per branch-and-bound node).
    pub fn set_bounds(&mut self, lb: &[f64], ub: &[f64]) {
        debug_assert_eq!(lb.len(), self.n_struct);
        self.lb[..self.n_struct].copy_from_slice(lb);
        self.ub[..self.n_struct].copy_from_slice(ub);
    }

    /// Discards the warm basis; the next solve starts cold.
    pub fn reset(&mut self) {
        self.dual_ready = false;
        self.reset_basis();
    }

    /// Snapshot of the basis (with its bound-side assignment) for restore.
    pub fn save_basis(&self) -> (Vec<usize>, Vec<bool>) {
        let at_upper = (0..self.n_total)
            .map(|v| matches!(self.vstat[v], VStat::Upper))
            .collect();
        (self.basic.clone(), at_upper)
    }

    /// Restores a snapshot taken by `save_basis`.
    pub fn load_basis(&mut self, snap: &(Vec<usize>, Vec<bool>)) {
        self.basic = snap.0.clone();
        for v in 0..self.n_total {
            self.vstat[v] = if snap.1[v] { VStat::Upper } else { VStat::Lower };
        }
        for (slot, &v) in self.basic.iter().enumerate() {
            self.vstat[v] = VStat::Basic(slot);
        }
        if self.refactor().is_err() {
            self.reset_basis();
        } else {
            self.dual_ready = true;
        }
    }

    fn reset_basis(&mut self) {
        self.basic = (self.n_struct..self.n_total).collect();
        for v in 0..self.n_total {
            self.vstat[v] = VStat::Lower;
        }
        for (slot, &v) in self.basic.iter().enumerate() {
            self.vstat[v] = VStat::Basic(slot);
        }
        self.refactor().expect("all-logical basis is the identity");
    }

    fn refactor(&mut self) -> Result<(), ()> {
        self.etas.clear();
        self.spike_slots.clear();
        self.spike_vars.clear();
        self.covered.iter_mut().for_each(|c| *c = usize::MAX);
        for (slot, &v) in self.basic.iter().enumerate() {
            if v >= self.n_struct {
                let r = v - self.n_struct;
                if self.covered[r] != usize::MAX {
                    return Err(());
                }
                self.covered[r] = slot;
            } else {
                self.spike_slots.push(slot);
                self.spike_vars.push(v);
            }
        }
        self.bump_rows = (0..self.m).filter(|&r| self.covered[r] == usize::MAX).collect();
        let k = self.bump_rows.len();
        if k != self.spike_slots.len() {
            return Err(());
        }
        if k == 0 {
            self.lu = None;
            return Ok(());
        }
        let mut row_to_bump = vec![usize::MAX; self.m];
        for (i, &r) in self.bump_rows.iter().enumerate() {
            row_to_bump[r] = i;
        }
        let mut entries = Vec::new();
        for (j, &v) in self.spike_vars.iter().enumerate() {
            let (s, e) = (self.col_starts[v], self.col_starts[v + 1]);
            for idx in s..e {
                let bi = row_to_bump[self.col_rows[idx]];
                if bi != usize::MAX {
                    entries.push((bi, j, self.col_vals[idx]));
                }
            }
        }
        match BumpLu::build(k, &entries) {
            Some(lu) => {
                if std::env::var_os("MILP_STATS").is_some() {
                    eprintln!("refactor k={k} lnnz={} unnz={}", lu.l_rows.len(), lu.u_cols.len());
                }
                self.lu = Some(lu);
                Ok(())
            }
            None => Err(()),
        }
    }

    /// z (slot space) with B z = a (row space). `a` is consumed as scratch.
    fn ftran(&self, mut a: Vec<f64>) -> Vec<f64> {
        let k = self.bump_rows.len();
        let mut z = vec![0.0; self.m];
        if k > 0 {
            let mut ab: Vec<f64> = self.bump_rows.iter().map(|&r| a[r]).collect();
            let mut at = vec![0.0; k];
            self.lu.as_ref().unwrap().solve(&mut ab, &mut at);
            for (j, &slot) in self.spike_slots.iter().enumerate() {
                z[slot] = at[j];
                let v = self.spike_vars[j];
                if at[j] != 0.0 {
                    let (s, e) = (self.col_starts[v], self.col_starts[v + 1]);
                    for idx in s..e {
                        a[self.col_rows[idx]] -= self.col_vals[idx] * at[j];
                    }
                }
            }
        }
        for r in 0..self.m {
            if self.covered[r] != usize::MAX {
                z[self.covered[r]] = a[r];
            }
        }
        for eta in &self.etas {
            let zp = z[eta.slot] / eta.wp;
            if zp != 0.0 {
                for &(i, w) in &eta.w {
                    z[i] -= w * zp;
                }
            }
            z[eta.slot] = zp;
        }
        z
    }

    /// y (row space) with yᵀ B = c (slot space). `c` is consumed as scratch.
    fn btran(&self, mut c: Vec<f64>) -> Vec<f64> {
        for eta in self.etas.iter().rev() {
            let mut s = c[eta.slot];
            for &(i, w) in &eta.w {
                s -= w * c[i];
            }
            c[eta.slot] = s / eta.wp;
        }
        let mut y = vec![0.0; self.m];
        for r in 0..self.m {
            if self.covered[r] != usize::MAX {
                y[r] = c[self.covered[r]];
            }
        }
        let k = self.bump_rows.len();
        if k > 0 {
            let mut tc: Vec<f64> = self
                .spike_slots
                .iter()
                .enumerate()
                .map(|(j, &slot)| {
                    let v = self.spike_vars[j];
                    let mut s = c[slot];
                    let (cs, ce) = (self.col_starts[v], self.col_starts[v + 1]);
                    for idx in cs..ce {
                        let r = self.col_rows[idx];
                        if self.covered[r] != usize::MAX {
                            s -= self.col_vals[idx] * y[r];
                        }
                    }
                    s
                })
                .collect();
            let mut t = vec![0.0; k];
            self.lu.as_ref().unwrap().solve_transpose(&mut tc, &mut t);
            for (i, &r) in self.bump_rows.iter().enumerate() {
                y[r] = t[i];
            }
        }
        y
    }

    fn column(&self, v: usize) -> Vec<f64> {
        let mut a = vec![0.0; self.m];
        if v < self.n_struct {
            let (s, e) = (self.col_starts[v], self.col_starts[v + 1]);
            for idx in s..e {
                a[self.col_rows[idx]] = self.col_vals[idx];
            }
        } else {
            a[v - self.n_struct] = 1.0;
        }
        a
    }

    fn dot_column(&self, y: &[f64], v: usize) -> f64 {
        if v < self.n_struct {
            let (s, e) = (self.col_starts[v], self.col_starts[v + 1]);
            (s..e).map(|idx| y[self.col_rows[idx]] * self.col_vals[idx]).sum()
        } else {
            y[v - self.n_struct]
        }
    }

    /// Recomputes x for the current basis: nonbasic at their bound, basic
    /// from a fresh solve.
    fn recompute_x(&mut self) {
        let mut a = self.rhs.clone();
        for v in 0..self.n_total {
            match self.vstat[v] {
                VStat::Basic(_) => {}
                VStat::Lower => {
                    self.x[v] = self.lb[v];
                }
                VStat::Upper => {
                    self.x[v] = if self.ub[v].is_finite() { self.ub[v] } else { self.lb[v] };
                }
            }
            if !matches!(self.vstat[v], VStat::Basic(_)) && self.x[v] != 0.0 {
                if v < self.n_struct {
                    let (s, e) = (self.col_starts[v], self.col_starts[v + 1]);
                    for idx in s..e {
                        a[self.col_rows[idx]] -= self.col_vals[idx] * self.x[v];
                    }
                } else {
                    a[v - self.n_struct] -= self.x[v];
                }
            }
        }
        let z = self.ftran(a);
        for (slot, &v) in self.basic.iter().enumerate() {
            self.x[v] = z[slot];
        }
    }

    fn infeasibility(&self) -> f64 {
        self.basic
            .iter()
            .map(|&v| (self.lb[v] - self.x[v]).max(self.x[v] - self.ub[v]).max(0.0))
            .sum()
    }

    fn objective(&self) -> f64 {
        (0..self.n_struct).map(|v| self.cost[v] * self.x[v]).sum()
    }

    /// Re-optimizes from the current basis.
    ///
    /// A basis left optimal by the previous solve stays dual feasible when
    /// only bounds change, so dual simplex iterations restore primal
    /// feasibility first; the primal phases then finish (and are the
    /// correctness backstop when the dual warm start stalls).
    pub fn solve(&mut self) -> LpOutcome {
        if self.lu.is_none() || self.etas.len() >= REFACTOR_EVERY {
            if self.refactor().is_err() {
                self.reset_basis();
            }
        }
        self.recompute_x();
        let stats = std::env::var_os("MILP_STATS").is_some();
        let mut iterations = 0usize;
        let mut dual_iters = 0usize;
        let warm = self.dual_ready;
        if !warm && self.cold_dual_start() {
            self.recompute_x();
            self.dual_ready = true;
        }
        // the dual pass must never exhaust the global iteration limit: on
        // budget exhaustion it hands over to the primal phases, which are
        // the correctness backstop
        let budget = if warm { 1_500 } else { self.iteration_limit / 2 };
        if self.dual_ready {
            self.dual_ready = false;
            match self.dual_optimize(budget, &mut iterations) {
                LpStatus::Optimal => {}
                s => return self.outcome(s),
            }
            dual_iters = iterations;
            if self.infeasibility() > TOL_FEAS_LP {
                // dual warm start stalled; a cold restart beats repairing a
                // half-converged basis with primal phase 1
                self.reset_basis();
                self.recompute_x();
            }
        }
        let mut p1 = 0usize;
        for phase in [1, 2] {
            if phase == 2 && self.infeasibility() > TOL_FEAS_LP {
                // phase 1 declared done without feasibility: infeasible
                return self.outcome(LpStatus::Infeasible);
            }
            match self.optimize(phase, &mut iterations) {
                LpStatus::Optimal => {}
                s => return self.outcome(s),
            }
            if phase == 1 {
                p1 = iterations;
            }
        }
        self.dual_ready = true;
        if stats {
            let p2 = iterations - p1;
            let p1o = p1 - dual_iters;
            eprintln!("solve iters={iterations} dual={dual_iters} p1={p1o} p2={p2}");
        }
        self.outcome(LpStatus::Optimal)
    }

    fn outcome(&self, status: LpStatus) -> LpOutcome {
        LpOutcome {
            status,
            objective: self.objective(),
            x: self.x[..self.n_struct].to_vec(),
        }
    }

    /// Places every variable on the bound its cost prefers over the
    /// all-logical basis, which is dual feasible by construction — the whole
    /// solve then runs as dual simplex with no phase 1. Requires a finite
    /// bound on the preferred side of each variable.
    fn cold_dual_start(&mut self) -> bool {
        for v in 0..self.n_struct {
            let want_upper = self.cost[v] < 0.0;
            let finite = if want_upper { self.ub[v] } else { self.lb[v] };
            if !finite.is_finite() {
                return false;
            }
        }
        self.reset_basis();
        for v in 0..self.n_struct {
            self.vstat[v] = if self.cost[v] < 0.0 { VStat::Upper } else { VStat::Lower };
        }
        true
    }

    /// Dual simplex warm-start: drives out bound violations of basic
    /// variables while keeping reduced costs feasible. Purely an
    /// accelerator — it gives up (returning `Optimal`) rather than drawing
    /// conclusions, leaving the verdict to the primal phases.
    fn dual_optimize(&mut self, budget: usize, iterations: &mut usize) -> LpStatus {
        const DUAL_STALL: usize = 2_000;
        let mut done = 0usize;
        // reduced costs, maintained incrementally across pivots
        let cb0: Vec<f64> = self
            .basic
            .iter()
            .map(|&v| if v < self.n_struct { self.cost[v] } else { 0.0 })
            .collect();
        let y0 = self.btran(cb0);
        let mut d = vec![0.0; self.n_total];
        for v in 0..self.n_total {
            if !matches!(self.vstat[v], VStat::Basic(_)) {
                let cj = if v < self.n_struct { self.cost[v] } else { 0.0 };
                d[v] = cj - self.dot_column(&y0, v);
            }
        }
        let mut alpha = vec![0.0; self.n_total];
        let mut degen = 0usize;
        loop {
            if *iterations >= self.iteration_limit {
                return LpStatus::IterationLimit;
            }
            if let Some(d) = self.deadline {
                if std::time::Instant::now() >= d {
                    return LpStatus::IterationLimit;
                }
            }
            if done >= budget || degen >= DUAL_STALL {
                return LpStatus::Optimal;
            }
            if self.etas.len() >= REFACTOR_EVERY {
                if self.refactor().is_err() {
                    self.reset_basis();
                    return LpStatus::Optimal;
                }
                self.recompute_x();
            }
            // most violated basic variable leaves
            let mut slot_out = usize::MAX;
            let mut worst = 1e-9;
            let mut below = false;
            for (slot, &v) in self.basic.iter().enumerate() {
                let lo = self.lb[v] - self.x[v];
                let hi = self.x[v] - self.ub[v];
                if lo > worst {
                    worst = lo;
                    slot_out = slot;
                    below = true;
                }
                if hi > worst {
                    worst = hi;
                    slot_out = slot;
                    below = false;
                }
            }
            if slot_out == usize::MAX {
                return LpStatus::Optimal; // primal feasible
            }
            // pivot row
            let mut er = vec![0.0; self.m];
            er[slot_out] = 1.0;
            let rho = self.btran(er);
            let mut enter = usize::MAX;
            let mut best_ratio = f64::INFINITY;
            let mut best_alpha = 0.0f64;
            for v in 0..self.n_total {
                let stat = self.vstat[v];
                if matches!(stat, VStat::Basic(_)) {
                    alpha[v] = 0.0;
                    continue;
                }
                let a = self.dot_column(&rho, v);
                alpha[v] = a;
                if a.abs() < TOL_PIVOT || self.ub[v] - self.lb[v] < 1e-14 {
                    continue;
                }
                // entering var must push x_B[slot_out] toward its bound
                let ok = match (below, stat) {
                    (true, VStat::Lower) => a < 0.0,
                    (true, VStat::Upper) => a > 0.0,
                    (false, VStat::Lower) => a > 0.0,
                    (false, VStat::Upper) => a < 0.0,
                    _ => unreachable!(),
                };
                if !ok {
                    continue;
                }
                let ratio = d[v].abs() / a.abs();
                if ratio < best_ratio - TOL_RATIO_TIE
                    || (ratio <= best_ratio + TOL_RATIO_TIE && a.abs() > best_alpha.abs())
                {
                    best_ratio = ratio;
                    best_alpha = a;
                    enter = v;
                }
            }
            if enter == usize::MAX {
                // no eligible column: likely infeasible; let phase 1 decide
                return LpStatus::Optimal;
            }
            let out = self.basic[slot_out];
            let target = if below { self.lb[out] } else { self.ub[out] };
            let w = self.ftran(self.column(enter));
            let wp = w[slot_out];
            if wp.abs() < TOL_PIVOT {
                return LpStatus::Optimal; // numerical disagreement; bail out
            }
            let delta = (self.x[out] - target) / wp;
            degen = if delta.abs() > 1e-12 { 0 } else { degen + 1 };
            for slot in 0..self.m {
                if w[slot] != 0.0 {
                    let v = self.basic[slot];
                    self.x[v] -= delta * w[slot];
                }
            }
            self.x[enter] += delta;
            self.vstat[out] = if below { VStat::Lower } else { VStat::Upper };
            self.x[out] = target;
            self.basic[slot_out] = enter;
            self.vstat[enter] = VStat::Basic(slot_out);
            // d_j' = d_j - (d_e / alpha_e) alpha_j over the new nonbasic set
            let factor = d[enter] / best_alpha;
            for v in 0..self.n_total {
                if !matches!(self.vstat[v], VStat::Basic(_)) && alpha[v] != 0.0 {
                    d[v] -= factor * alpha[v];
                }
            }
            d[out] = -factor;
            d[enter] = 0.0;
            let sparse: Vec<(usize, f64)> = w
                .iter()
                .enumerate()
                .filter(|&(i, &v)| i != slot_out && v.abs() > 1e-13)
                .map(|(i, &v)| (i, v))
                .collect();
            self.etas.push(Eta {
                slot: slot_out,
                wp,
                w: sparse,
            });
            *iterations += 1;
            done += 1;
        }
    }

    fn optimize(&mut self, phase: u8, iterations: &mut usize) -> LpStatus {
        let mut bland = false;
        let mut stall = 0usize;
        loop {
            if *iterations >= self.iteration_limit {
                return LpStatus::IterationLimit;
            }
            if let Some(d) = self.deadline {
                if std::time::Instant::now() >= d {
                    return LpStatus::IterationLimit;
                }
            }
            if self.etas.len() >= REFACTOR_EVERY {
                if self.refactor().is_err() {
                    self.reset_basis();
                }
                self.recompute_x();
            }
            if phase == 1 && self.infeasibility() <= TOL_FEAS_LP {
                return LpStatus::Optimal;
            }
            // basis costs
            let cb: Vec<f64> = self
                .basic
                .iter()
                .map(|&v| {
                    if phase == 1 {
                        if self.x[v] > self.ub[v] + TOL_BOUND {
                            1.0
                        } else if self.x[v] < self.lb[v] - TOL_BOUND {
                            -1.0
                        } else {
                            0.0
                        }
                    } else if v < self.n_struct {
                        self.cost[v]
                    } else {
                        0.0
                    }
                })
                .collect();
            let y = self.btran(cb);
            // pricing
            let mut enter = usize::MAX;
            let mut best = TOL_DJ;
            for v in 0..self.n_total {
                let stat = self.vstat[v];
                if matches!(stat, VStat::Basic(_)) {
                    continue;
                }
                if self.ub[v] - self.lb[v] < 1e-14 {
                    continue; // fixed variable never enters
                }
                let cj = if phase == 2 && v < self.n_struct { self.cost[v] } else { 0.0 };
                let dj = cj - self.dot_column(&y, v);
                let score = match stat {
                    VStat::Lower => -dj,
                    VStat::Upper => dj,
                    VStat::Basic(_) => unreachable!(),
                };
                if score > best {
                    best = score;
                    enter = v;
                    if bland {
                        break; // lowest eligible index
                    }
                }
            }
            if enter == usize::MAX {
                if phase == 1 && self.infeasibility() > TOL_FEAS_LP {
                    return LpStatus::Infeasible;
                }
                return LpStatus::Optimal;
            }
            let t: f64 = if matches!(self.vstat[enter], VStat::Lower) { 1.0 } else { -1.0 };
            let w = self.ftran(self.column(enter));
            // Harris two-pass ratio test: pass 1 finds the step allowed with
            // bounds relaxed by a small tolerance, pass 2 takes the largest
            // pivot whose true cap fits. Degenerate vertices then admit a
            // well-conditioned pivot instead of forcing a zero-step crawl.
            let cap_for = |slot: usize, wv: f64| -> Option<(f64, bool)> {
                let v = self.basic[slot];
                let rate = -t * wv;
                let (cap, at_upper) = if phase == 1 && self.x[v] < self.lb[v] - TOL_BOUND {
                    if rate > 0.0 {
                        ((self.lb[v] - self.x[v]) / rate, false)
                    } else {
                        return None; // moves further below; phase-1 objective tracks it
                    }
                } else if phase == 1 && self.x[v] > self.ub[v] + TOL_BOUND {
                    if rate < 0.0 {
                        ((self.ub[v] - self.x[v]) / rate, true)
                    } else {
                        return None;
                    }
                } else if rate > 0.0 {
                    if self.ub[v].is_finite() {
                        ((self.ub[v] - self.x[v]) / rate, true)
                    } else {
                        return None;
                    }
                } else if self.lb[v].is_finite() {
                    ((self.lb[v] - self.x[v]) / rate, false)
                } else {
                    return None;
                };
                Some((cap.max(0.0), at_upper))
            };
            let mut limit1 = self.ub[enter] - self.lb[enter];
            for slot in 0..self.m {
                let wv = w[slot];
                if wv.abs() < TOL_PIVOT {
                    continue;
                }
                if let Some((cap, _)) = cap_for(slot, wv) {
                    let relaxed = cap + TOL_HARRIS / wv.abs();
                    if relaxed < limit1 {
                        limit1 = relaxed;
                    }
                }
            }
            if !limit1.is_finite() {
                return LpStatus::Unbounded;
            }
            let mut leave: Option<(usize, bool)> = None; // (slot, leaves at upper)
            let mut leave_w = 0.0f64;
            let mut limit = self.ub[enter] - self.lb[enter];
            if bland {
                // exact ratio test, lowest slot index on ties: keeps Bland's
                // termination guarantee, which the Harris pass would break
                for slot in 0..self.m {
                    let wv = w[slot];
                    if wv.abs() < TOL_PIVOT {
                        continue;
                    }
                    if let Some((cap, at_upper)) = cap_for(slot, wv) {
                        if cap < limit - TOL_RATIO_TIE {
                            leave = Some((slot, at_upper));
                            leave_w = wv;
                            limit = cap;
                        }
                    }
                }
                let _ = leave_w;
            } else {
                for slot in 0..self.m {
                    let wv = w[slot];
                    if wv.abs() < TOL_PIVOT || wv.abs() <= leave_w.abs() {
                        continue;
                    }
                    if let Some((cap, at_upper)) = cap_for(slot, wv) {
                        if cap <= limit1 {
                            leave = Some((slot, at_upper));
                            leave_w = wv;
                            limit = cap;
                        }
                    }
                }
            }
            let delta = limit.max(0.0);
            // apply the move
            self.x[enter] += t * delta;
            if delta != 0.0 {
                for slot in 0..self.m {
                    if w[slot] != 0.0 {
                        let v = self.basic[slot];
                        self.x[v] -= t * delta * w[slot];
                    }
                }
            }
            *iterations += 1;
            // steps at the Harris tolerance scale are stalls too: a bounce
            // of ~1e-7 back and forth must still trip the Bland switch
            stall = if delta > 1e-6 { 0 } else { stall + 1 };
            if stall > STALL_LIMIT {
                bland = true;
            } else if delta > 1e-6 {
                bland = false;
            }
            match leave {
                None => {
                    // bound flip, no basis change
                    self.vstat[enter] = match self.vstat[enter] {
                        VStat::Lower => VStat::Upper,
                        VStat::Upper => VStat::Lower,
                        VStat::Basic(_) => unreachable!(),
                    };
                    self.x[enter] = if matches!(self.vstat[enter], VStat::Upper) {
                        self.ub[enter]
                    } else {
                        self.lb[enter]
                    };
                }
                Some((slot, at_upper)) => {
                    let out = self.basic[slot];
                    self.vstat[out] = if at_upper { VStat::Upper } else { VStat::Lower };
                    self.x[out] = if at_upper { self.ub[out] } else { self.lb[out] };
                    self.basic[slot] = enter;
                    self.vstat[enter] = VStat::Basic(slot);
                    let wp = w[slot];
                    let sparse: Vec<(usize, f64)> = w
                        .iter()
                        .enumerate()
                        .filter(|&(i, &v)| i != slot && v.abs() > 1e-13)
                        .map(|(i, &v)| (i, v))
                        .collect();
                    self.etas.push(Eta { slot, wp, w: sparse });
                }
            }
        }
    }
}

/// Solves the LP relaxation of `p` (integer restrictions dropped).
pub fn solve_lp(p: &MilpProblem) -> MilpSolution {
    let mut s = Simplex::new(p);
    let out = s.solve();
    lp_outcome_to_solution(out)
}

pub(crate) fn lp_outcome_to_solution(out: LpOutcome) -> MilpSolution {
    let status = match out.status {
        LpStatus::Optimal => Status::Optimal,
        LpStatus::Infeasible => Status::Infeasible,
        LpStatus::Unbounded => Status::Unbounded,
        LpStatus::IterationLimit => Status::IterationLimit,
    };
    let x = if matches!(status, Status::Optimal) { out.x } else { Vec::new() };
    MilpSolution {
        status,
        objective: out.objective,
        x,
        nodes_explored: 0,
    }
}
