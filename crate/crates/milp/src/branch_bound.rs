//! Best-bound branch-and-bound over the LP relaxation.
//!
//! Node selection is best-bound with depth-first tie-break; branching picks
//! the most-fractional integer variable (ties to the lowest index). A
//! maximum-value diving heuristic supplies incumbents early, which matters
//! on big-M formulations whose relaxation bounds are weak.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::problem::{MilpProblem, MilpSolution, Status};
use crate::simplex::{LpStatus, Simplex};
use crate::{TOL_GAP, TOL_INT};

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub node_limit: u64,
    pub time_limit: Option<Duration>,
    pub lp_iteration_limit: usize,
    /// Run the diving heuristic for incumbents (deterministic).
    pub dive_heuristic: bool,
    /// Dive again every this many explored nodes.
    pub dive_every: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            node_limit: 1_000_000,
            time_limit: None,
            lp_iteration_limit: 25_000,
            dive_heuristic: true,
            dive_every: 1,
        }
    }
}

struct NodeRecord {
    parent: usize,
    var: usize,
    lo: f64,
    hi: f64,
    depth: u32,
}

/// Heap key: lowest bound first, then deepest, then oldest id.
struct OpenNode {
    bound: f64,
    depth: u32,
    id: u64,
    node: usize,
}

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for OpenNode {}
impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OpenNode {
    // BinaryHeap is a max-heap: "greater" means explored earlier.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

struct Incumbent {
    x: Vec<f64>,
    objective: f64,
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > 1e-12 {
            return x < y;
        }
    }
    false
}

struct Search<'a> {
    p: &'a MilpProblem,
    cfg: &'a SolverConfig,
    simplex: Simplex,
    nodes: Vec<NodeRecord>,
    incumbent: Option<Incumbent>,
    started: Instant,
    lb_buf: Vec<f64>,
    ub_buf: Vec<f64>,
}

impl<'a> Search<'a> {
    fn node_bounds(&mut self, node: usize) {
        self.lb_buf.copy_from_slice(&self.p.lb);
        self.ub_buf.copy_from_slice(&self.p.ub);
        let mut cur = node;
        while cur != usize::MAX {
            let rec = &self.nodes[cur];
            if rec.var != usize::MAX {
                self.lb_buf[rec.var] = self.lb_buf[rec.var].max(rec.lo);
                self.ub_buf[rec.var] = self.ub_buf[rec.var].min(rec.hi);
            }
            cur = rec.parent;
        }
    }

    fn fractional_var(&self, x: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for &j in &self.p.integer_vars {
            let f = x[j] - x[j].floor();
            let dist = f.min(1.0 - f);
            if dist > TOL_INT && best.map_or(true, |(_, d)| dist > d + 1e-15) {
                best = Some((j, dist));
            }
        }
        best
    }

    fn offer_incumbent(&mut self, x: Vec<f64>, objective: f64) {
        let take = match &self.incumbent {
            None => true,
            Some(inc) => {
                objective < inc.objective - TOL_GAP
                    || ((objective - inc.objective).abs() <= TOL_GAP && lex_less(&x, &inc.x))
            }
        };
        if take {
            if std::env::var_os("MILP_STATS").is_some() {
                eprintln!("incumbent {objective}");
            }
            self.incumbent = Some(Incumbent { x, objective });
        }
    }

    /// Lookahead diving: repeatedly round a fractional integer variable up,
    /// re-solving until the point is integral or the dive dead-ends. At each
    /// step the top fractional candidates (by value) are probed and the
    /// first fix that does not degrade the LP objective is kept; if every
    /// probe degrades it, the least-degrading one is kept. The extra probe
    /// LPs are warm-started and cheap next to a blind wrong turn.
    fn dive(&mut self, node: usize) {
        let snap = self.simplex.save_basis();
        self.dive_inner(node);
        self.simplex.load_basis(&snap);
    }

    const DIVE_PROBES: usize = 4;

    fn dive_inner(&mut self, node: usize) {
        self.node_bounds(node);
        let mut lb = self.lb_buf.clone();
        let mut ub = self.ub_buf.clone();
        self.simplex.set_bounds(&lb, &ub);
        let mut out = self.simplex.solve();
        for _ in 0..self.p.integer_vars.len() + 1 {
            if out.status != LpStatus::Optimal {
                return;
            }
            if let Some(inc) = &self.incumbent {
                if out.objective >= inc.objective - TOL_GAP {
                    return;
                }
            }
            if self.fractional_var(&out.x).is_none() {
                let mut x = out.x;
                round_integers(self.p, &mut x);
                self.offer_incumbent(x, out.objective);
                return;
            }
            // candidate fixes: fractional integer vars by descending value
            let mut cands: Vec<(usize, f64)> = self
                .p
                .integer_vars
                .iter()
                .copied()
                .filter(|&j| {
                    let f = out.x[j] - out.x[j].floor();
                    f.min(1.0 - f) > TOL_INT
                })
                .map(|j| (j, out.x[j]))
                .collect();
            cands.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            cands.truncate(Self::DIVE_PROBES);
            let mut fallback: Option<(usize, f64, crate::simplex::LpOutcome)> = None;
            let mut accepted = false;
            for &(j, xj) in &cands {
                let v = xj.ceil().min(ub[j]).max(lb[j]);
                let (old_lo, old_hi) = (lb[j], ub[j]);
                lb[j] = v;
                ub[j] = v;
                self.simplex.set_bounds(&lb, &ub);
                let probe = self.simplex.solve();
                let ok = probe.status == LpStatus::Optimal;
                if ok && probe.objective <= out.objective + 1e-9 {
                    out = probe;
                    accepted = true;
                    break;
                }
                if ok
                    && fallback
                        .as_ref()
                        .map_or(true, |(_, obj, _)| probe.objective < *obj)
                {
                    fallback = Some((j, probe.objective, probe));
                }
                lb[j] = old_lo;
                ub[j] = old_hi;
            }
            if accepted {
                continue;
            }
            // every upward probe degrades: push the fractional mass away
            // instead, fixing the current fractional vars to 0. Constraint
            // rows of Sigma=1 type then relocate the mass, walking toward a
            // placement that keeps the objective; each step is a handful of
            // warm iterations.
            let frac: Vec<usize> = self
                .p
                .integer_vars
                .iter()
                .copied()
                .filter(|&j| {
                    let f = out.x[j] - out.x[j].floor();
                    f.min(1.0 - f) > TOL_INT && lb[j] <= 0.0
                })
                .collect();
            if !frac.is_empty() {
                let saved: Vec<(usize, f64, f64)> =
                    frac.iter().map(|&j| (j, lb[j], ub[j])).collect();
                for &j in &frac {
                    let v = out.x[j].floor().max(lb[j]);
                    lb[j] = v;
                    ub[j] = v;
                }
                self.simplex.set_bounds(&lb, &ub);
                let probe = self.simplex.solve();
                if probe.status == LpStatus::Optimal
                    && probe.objective <= out.objective + 1e-9
                {
                    out = probe;
                    continue;
                }
                for (j, lo, hi) in saved {
                    lb[j] = lo;
                    ub[j] = hi;
                }
            }
            match fallback {
                Some((j, _, probe)) => {
                    let v = out.x[j].ceil().min(ub[j]).max(lb[j]);
                    lb[j] = v;
                    ub[j] = v;
                    out = probe;
                }
                None => return, // every probe went infeasible or stalled
            }
        }
    }
}

fn round_integers(p: &MilpProblem, x: &mut [f64]) {
    for &j in &p.integer_vars {
        x[j] = x[j].round();
    }
}

/// Branch-and-bound solve of a mixed-integer problem.
pub fn solve_milp(p: &MilpProblem, cfg: &SolverConfig) -> MilpSolution {
    let n = p.n_vars();
    let started = Instant::now();
    let mut simplex = Simplex::new(p);
    simplex.iteration_limit = cfg.lp_iteration_limit;
    simplex.deadline = cfg.time_limit.map(|tl| started + tl);
    let mut search = Search {
        p,
        cfg,
        simplex,
        nodes: Vec::new(),
        incumbent: None,
        started,
        lb_buf: vec![0.0; n],
        ub_buf: vec![0.0; n],
    };
    search.nodes.push(NodeRecord {
        parent: usize::MAX,
        var: usize::MAX,
        lo: 0.0,
        hi: 0.0,
        depth: 0,
    });
    let mut heap = BinaryHeap::new();
    heap.push(OpenNode {
        bound: f64::NEG_INFINITY,
        depth: 0,
        id: 0,
        node: 0,
    });
    let mut next_id = 1u64;
    let mut nodes_explored = 0u64;
    let mut limit_status: Option<Status> = None;
    let mut root_infeasible = false;
    let mut iteration_limited = false;

    while let Some(open) = heap.pop() {
        if let Some(inc) = &search.incumbent {
            if open.bound >= inc.objective - TOL_GAP {
                continue; // pruned by bound
            }
        }
        if nodes_explored >= search.cfg.node_limit {
            limit_status = Some(Status::NodeLimit);
            break;
        }
        if let Some(tl) = search.cfg.time_limit {
            if search.started.elapsed() >= tl {
                limit_status = Some(Status::TimeLimit);
                break;
            }
        }
        nodes_explored += 1;
        search.node_bounds(open.node);
        let (lb, ub) = (search.lb_buf.clone(), search.ub_buf.clone());
        search.simplex.set_bounds(&lb, &ub);
        let mut out = search.simplex.solve();
        if out.status == LpStatus::IterationLimit {
            // a stalled warm start; a cold solve is usually cheap and clean
            search.simplex.reset();
            out = search.simplex.solve();
        }
        match out.status {
            LpStatus::Infeasible => {
                if open.node == 0 {
                    root_infeasible = true;
                }
                continue;
            }
            LpStatus::Unbounded => {
                return MilpSolution {
                    status: Status::Unbounded,
                    x: Vec::new(),
                    objective: f64::NEG_INFINITY,
                    nodes_explored,
                };
            }
            LpStatus::IterationLimit => {
                if let Some(tl) = search.cfg.time_limit {
                    if search.started.elapsed() >= tl {
                        limit_status = Some(Status::TimeLimit);
                        break;
                    }
                }
                iteration_limited = true;
                continue;
            }
            LpStatus::Optimal => {}
        }
        if let Some(inc) = &search.incumbent {
            if out.objective >= inc.objective - TOL_GAP {
                continue;
            }
        }
        match search.fractional_var(&out.x) {
            None => {
                let mut x = out.x;
                round_integers(p, &mut x);
                search.offer_incumbent(x, out.objective);
            }
            Some((j, _)) => {
                let depth = search.nodes[open.node].depth + 1;
                let floor = out.x[j].floor();
                // ceil child first: among equal bounds the deeper-first,
                // older-id order then explores the "variable on" subtree
                // before the loose "variable off" one, which surfaces
                // useful incumbents far sooner on big-M models
                for (lo, hi) in [(floor + 1.0, ub[j]), (lb[j], floor)] {
                    if lo > hi {
                        continue;
                    }
                    search.nodes.push(NodeRecord {
                        parent: open.node,
                        var: j,
                        lo,
                        hi,
                        depth,
                    });
                    heap.push(OpenNode {
                        bound: out.objective,
                        depth,
                        id: next_id,
                        node: search.nodes.len() - 1,
                    });
                    next_id += 1;
                }
                if search.cfg.dive_heuristic
                    && (nodes_explored == 1 || nodes_explored % search.cfg.dive_every == 0)
                {
                    search.dive(open.node);
                }
            }
        }
    }

    match (search.incumbent, limit_status) {
        (Some(inc), limit) => MilpSolution {
            status: limit.unwrap_or(if iteration_limited {
                Status::IterationLimit
            } else {
                Status::Optimal
            }),
            objective: inc.objective,
            x: inc.x,
            nodes_explored,
        },
        (None, Some(limit)) => MilpSolution {
            status: limit,
            x: Vec::new(),
            objective: f64::NEG_INFINITY,
            nodes_explored,
        },
        (None, None) => MilpSolution {
            status: if root_infeasible || !iteration_limited {
                Status::Infeasible
            } else {
                Status::IterationLimit
            },
            x: Vec::new(),
            objective: f64::INFINITY,
            nodes_explored,
        },
    }
}
