//! Solver checks against independent oracles: exhaustive vertex enumeration
//! for LPs and exhaustive binary enumeration for MILPs.

use milp::{parse_problem, solve_lp, solve_milp, write_problem, MilpProblem, SolverConfig, SparseMatrix, Status};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn problem(
    c: Vec<f64>,
    a_ub: Vec<(usize, usize, f64)>,
    b_ub: Vec<f64>,
    a_eq: Vec<(usize, usize, f64)>,
    b_eq: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    ints: Vec<usize>,
) -> MilpProblem {
    let n = c.len();
    MilpProblem::new(
        c,
        SparseMatrix::from_triplets(b_ub.len(), n, a_ub).unwrap(),
        b_ub,
        SparseMatrix::from_triplets(b_eq.len(), n, a_eq).unwrap(),
        b_eq,
        lb,
        ub,
        ints,
    )
    .unwrap()
}

/// Independent LP oracle: enumerate candidate vertices. A vertex is fixed by
/// choosing which rows are tight and which variables sit at which bound; we
/// enumerate all choices of `r` tight rows and `n - r` bound assignments and
/// solve the resulting square system by Gaussian elimination.
fn lp_oracle(p: &MilpProblem) -> Option<(f64, Vec<f64>)> {
    let n = p.n_vars();
    let mut rows: Vec<(Vec<f64>, f64, bool)> = Vec::new(); // (coeffs, rhs, is_eq)
    for r in 0..p.b_ub.len() {
        let mut a = vec![0.0; n];
        for &(ri, ci, v) in p.a_ub.entries() {
            if ri == r {
                a[ci] = v;
            }
        }
        rows.push((a, p.b_ub[r], false));
    }
    for r in 0..p.b_eq.len() {
        let mut a = vec![0.0; n];
        for &(ri, ci, v) in p.a_eq.entries() {
            if ri == r {
                a[ci] = v;
            }
        }
        rows.push((a, p.b_eq[r], true));
    }
    let m = rows.len();
    let mut best: Option<(f64, Vec<f64>)> = None;

    // iterate subsets of rows forced tight (equality rows must be included)
    for tight_mask in 0u32..(1 << m) {
        let tight: Vec<usize> = (0..m).filter(|&i| tight_mask >> i & 1 == 1).collect();
        if rows.iter().enumerate().any(|(i, r)| r.2 && tight_mask >> i & 1 == 0) {
            continue;
        }
        if tight.len() > n {
            continue;
        }
        let free = n - tight.len();
        // choose bound assignment for `free` variables: iterate which vars
        // are at bounds (the lexicographically first `free`-subsets of vars)
        for var_mask in 0u32..(1 << n) {
            if (var_mask.count_ones() as usize) != free {
                continue;
            }
            for bound_mask in 0u32..(1 << free) {
                // assemble square system
                let mut a = vec![0.0; n * n];
                let mut b = vec![0.0; n];
                let mut row = 0;
                for &t in &tight {
                    a[row * n..row * n + n].copy_from_slice(&rows[t].0);
                    b[row] = rows[t].1;
                    row += 1;
                }
                let mut bi = 0;
                for j in 0..n {
                    if var_mask >> j & 1 == 1 {
                        a[row * n + j] = 1.0;
                        b[row] = if bound_mask >> bi & 1 == 1 { p.ub[j] } else { p.lb[j] };
                        bi += 1;
                        row += 1;
                    }
                }
                if let Some(x) = gauss_solve(n, a, b) {
                    if p.violation(&x) <= 1e-7 {
                        let obj = p.objective(&x);
                        if best.as_ref().map_or(true, |(o, _)| obj < o - 1e-10) {
                            best = Some((obj, x));
                        }
                    }
                }
            }
        }
    }
    best
}

fn gauss_solve(n: usize, mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))?;
        if a[p * n + k].abs() < 1e-10 {
            return None;
        }
        if p != k {
            for c in 0..n {
                a.swap(k * n + c, p * n + c);
            }
            b.swap(k, p);
        }
        for r in k + 1..n {
            let f = a[r * n + k] / a[k * n + k];
            if f != 0.0 {
                for c in k..n {
                    a[r * n + c] -= f * a[k * n + c];
                }
                b[r] -= f * b[k];
            }
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for c in k + 1..n {
            s -= a[k * n + c] * b[c];
        }
        b[k] = s / a[k * n + k];
    }
    Some(b)
}

#[test]
fn bound_active_optimum() {
    let p = problem(vec![-1.0], vec![], vec![], vec![], vec![], vec![0.0], vec![2.0], vec![]);
    let s = solve_lp(&p);
    assert_eq!(s.status, Status::Optimal);
    assert!((s.x[0] - 2.0).abs() < 1e-9);
    assert!((s.objective + 2.0).abs() < 1e-9);
}

#[test]
fn symmetric_vertex() {
    // min x1+x2 s.t. x1+x2 >= 1 (as -x1-x2 <= -1), x in [0,1]^2
    let p = problem(
        vec![1.0, 1.0],
        vec![(0, 0, -1.0), (0, 1, -1.0)],
        vec![-1.0],
        vec![],
        vec![],
        vec![0.0, 0.0],
        vec![1.0, 1.0],
        vec![],
    );
    let s = solve_lp(&p);
    assert_eq!(s.status, Status::Optimal);
    assert!((s.objective - 1.0).abs() < 1e-9);
}

#[test]
fn equality_rows_enter_via_phase_one() {
    // min x1 s.t. x1 + x2 = 3, x2 <= 2, x in [0, 10]
    let p = problem(
        vec![1.0, 0.0],
        vec![(0, 1, 1.0)],
        vec![2.0],
        vec![(0, 0, 1.0), (0, 1, 1.0)],
        vec![3.0],
        vec![0.0, 0.0],
        vec![10.0, 10.0],
        vec![],
    );
    let s = solve_lp(&p);
    assert_eq!(s.status, Status::Optimal);
    assert!((s.objective - 1.0).abs() < 1e-9, "obj {}", s.objective);
}

#[test]
fn infeasible_lp_detected() {
    // x1 + x2 = 5 with x in [0,1]^2
    let p = problem(
        vec![1.0, 1.0],
        vec![],
        vec![],
        vec![(0, 0, 1.0), (0, 1, 1.0)],
        vec![5.0],
        vec![0.0, 0.0],
        vec![1.0, 1.0],
        vec![],
    );
    assert_eq!(solve_lp(&p).status, Status::Infeasible);
}

fn random_lp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> MilpProblem {
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let mut trip = Vec::new();
    for r in 0..m {
        for j in 0..n {
            if rng.gen_bool(0.6) {
                trip.push((r, j, rng.gen_range(-2.0..2.0_f64)));
            }
        }
    }
    // rhs chosen so x = 0 is feasible: b >= 0
    let b: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..4.0)).collect();
    let lb: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..0.0_f64)).collect();
    let ub: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.5_f64)).collect();
    problem(c, trip, b, vec![], vec![], lb, ub, vec![])
}

#[test]
fn random_lps_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..40 {
        let p = random_lp(&mut rng, 4, 3);
        let s = solve_lp(&p);
        let oracle = lp_oracle(&p);
        match oracle {
            Some((obj, _)) => {
                assert_eq!(s.status, Status::Optimal, "case {case}");
                assert!(
                    (s.objective - obj).abs() < 1e-8,
                    "case {case}: simplex {} oracle {}",
                    s.objective,
                    obj
                );
                assert!(p.violation(&s.x) <= 1e-7);
            }
            None => assert_ne!(s.status, Status::Optimal, "case {case}"),
        }
    }
}

#[test]
fn wider_random_lps_match_vertex_enumeration() {
    // 5 rows x 8 vars per the operation contract, fewer cases (oracle cost)
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..8 {
        let p = random_lp(&mut rng, 5, 4);
        let s = solve_lp(&p);
        let (obj, _) = lp_oracle(&p).expect("x=0 feasible by construction");
        assert_eq!(s.status, Status::Optimal, "case {case}");
        assert!(
            (s.objective - obj).abs() < 1e-8,
            "case {case}: simplex {} oracle {}",
            s.objective,
            obj
        );
    }
}

#[test]
fn simple_binary_milp() {
    // min -x1-x2 s.t. x1+x2 <= 1, binary -> -1
    let p = problem(
        vec![-1.0, -1.0],
        vec![(0, 0, 1.0), (0, 1, 1.0)],
        vec![1.0],
        vec![],
        vec![],
        vec![0.0, 0.0],
        vec![1.0, 1.0],
        vec![0, 1],
    );
    let s = solve_milp(&p, &SolverConfig::default());
    assert_eq!(s.status, Status::Optimal);
    assert!((s.objective + 1.0).abs() < 1e-9);
}

#[test]
fn knapsack_by_brute_force() {
    // max 5x1+4x2+3x3 s.t. 2x1+3x2+x3 <= 4 -> value 8 at (1,0,1)
    let p = problem(
        vec![-5.0, -4.0, -3.0],
        vec![(0, 0, 2.0), (0, 1, 3.0), (0, 2, 1.0)],
        vec![4.0],
        vec![],
        vec![],
        vec![0.0; 3],
        vec![1.0; 3],
        vec![0, 1, 2],
    );
    let s = solve_milp(&p, &SolverConfig::default());
    assert_eq!(s.status, Status::Optimal);
    assert!((s.objective + 8.0).abs() < 1e-9);
    assert_eq!(
        s.x.iter().map(|v| v.round() as i32).collect::<Vec<_>>(),
        vec![1, 0, 1]
    );
}

fn milp_enumeration_oracle(p: &MilpProblem) -> Option<f64> {
    let nb = p.integer_vars.len();
    assert!(nb == p.n_vars(), "oracle assumes pure binary");
    let mut best: Option<f64> = None;
    for mask in 0u64..(1 << nb) {
        let x: Vec<f64> = (0..nb).map(|j| ((mask >> j) & 1) as f64).collect();
        if p.violation(&x) <= 1e-9 {
            let obj = p.objective(&x);
            if best.map_or(true, |b| obj < b) {
                best = Some(obj);
            }
        }
    }
    best
}

#[test]
fn random_binary_milps_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..100 {
        let nb = rng.gen_range(3..=12);
        let m = rng.gen_range(1..=10);
        let c: Vec<f64> = (0..nb).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let mut trip = Vec::new();
        let mut b = Vec::new();
        for r in 0..m {
            let mut rowsum = 0.0;
            for j in 0..nb {
                if rng.gen_bool(0.5) {
                    let v = rng.gen_range(-3.0..3.0_f64);
                    trip.push((r, j, v));
                    rowsum += v.max(0.0);
                }
            }
            // keep a reasonable share of feasible points
            b.push(rng.gen_range(0.0..1.0) * rowsum.max(1.0));
        }
        let p = problem(c, trip, b, vec![], vec![], vec![0.0; nb], vec![1.0; nb], (0..nb).collect());
        let s = solve_milp(&p, &SolverConfig::default());
        match milp_enumeration_oracle(&p) {
            Some(obj) => {
                assert_eq!(s.status, Status::Optimal, "case {case}");
                assert!(
                    (s.objective - obj).abs() < 1e-7,
                    "case {case}: bnb {} enum {}",
                    s.objective,
                    obj
                );
                // LP relaxation is a valid lower bound
                let rel = solve_lp(&p);
                assert!(rel.objective <= s.objective + 1e-7, "weak duality, case {case}");
            }
            None => assert_eq!(s.status, Status::Infeasible, "case {case}"),
        }
    }
}

#[test]
fn determinism_across_runs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = {
        let nb = 10;
        let c: Vec<f64> = (0..nb).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let mut trip = Vec::new();
        for j in 0..nb {
            trip.push((0, j, rng.gen_range(0.0..2.0)));
        }
        problem(c, trip, vec![4.0], vec![], vec![], vec![0.0; nb], vec![1.0; nb], (0..nb).collect())
    };
    let a = solve_milp(&p, &SolverConfig::default());
    let b = solve_milp(&p, &SolverConfig::default());
    assert_eq!(a.nodes_explored, b.nodes_explored);
    assert_eq!(a.x, b.x);
}

#[test]
fn dump_load_round_trip() {
    let p = problem(
        vec![-5.0, -4.0, -3.0],
        vec![(0, 0, 2.0), (0, 1, 3.0), (0, 2, 1.0)],
        vec![4.0],
        vec![(0, 0, 1.0), (0, 2, 1.0)],
        vec![1.0],
        vec![0.0; 3],
        vec![1.0; 3],
        vec![0, 2],
    );
    let text = write_problem(&p);
    let q = parse_problem(&text).unwrap();
    assert_eq!(p.c, q.c);
    assert_eq!(p.a_ub, q.a_ub);
    assert_eq!(p.b_ub, q.b_ub);
    assert_eq!(p.a_eq, q.a_eq);
    assert_eq!(p.b_eq, q.b_eq);
    assert_eq!(p.lb, q.lb);
    assert_eq!(p.ub, q.ub);
    assert_eq!(p.integer_vars, q.integer_vars);
    let s1 = solve_milp(&p, &SolverConfig::default());
    let s2 = solve_milp(&q, &SolverConfig::default());
    assert_eq!(s1.objective, s2.objective);
}

#[test]
fn node_limit_reported() {
    // a MILP that needs branching, with node_limit 1
    let p = problem(
        vec![-1.0, -1.0, -1.0],
        vec![(0, 0, 2.0), (0, 1, 2.0), (0, 2, 2.0)],
        vec![3.0],
        vec![],
        vec![],
        vec![0.0; 3],
        vec![1.0; 3],
        vec![0, 1, 2],
    );
    let cfg = SolverConfig {
        node_limit: 1,
        dive_heuristic: false,
        ..SolverConfig::default()
    };
    let s = solve_milp(&p, &cfg);
    assert_eq!(s.status, Status::NodeLimit);
}
