//! Line-oriented problem dump/load for debugging and hand cross-checks.
//!
//! Format:
//! ```text
//! milp <n_vars> <n_ub_rows> <n_eq_rows>
//! c <j> <value>            # one line per nonzero cost entry
//! a <i> <j> <value>        # inequality triplets
//! b <i> <value>
//! aeq <i> <j> <value>      # equality triplets
//! beq <i> <value>
//! bnd <j> <lb> <ub>
//! int <j>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::problem::{MilpError, MilpProblem, SparseMatrix};

pub fn write_problem(p: &MilpProblem) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "milp {} {} {}", p.n_vars(), p.b_ub.len(), p.b_eq.len());
    for (j, &v) in p.c.iter().enumerate() {
        if v != 0.0 {
            let _ = writeln!(s, "c {j} {v:.17e}");
        }
    }
    for &(r, c, v) in p.a_ub.entries() {
        let _ = writeln!(s, "a {r} {c} {v:.17e}");
    }
    for (r, &v) in p.b_ub.iter().enumerate() {
        let _ = writeln!(s, "b {r} {v:.17e}");
    }
    for &(r, c, v) in p.a_eq.entries() {
        let _ = writeln!(s, "aeq {r} {c} {v:.17e}");
    }
    for (r, &v) in p.b_eq.iter().enumerate() {
        let _ = writeln!(s, "beq {r} {v:.17e}");
    }
    for j in 0..p.n_vars() {
        let _ = writeln!(s, "bnd {} {:.17e} {:.17e}", j, p.lb[j], p.ub[j]);
    }
    for &j in &p.integer_vars {
        let _ = writeln!(s, "int {j}");
    }
    s
}

pub fn parse_problem(text: &str) -> Result<MilpProblem, MilpError> {
    let err = |line: usize, msg: &str| MilpError::Parse {
        line: line + 1,
        msg: msg.to_string(),
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (ln, header) = lines.next().ok_or_else(|| err(0, "empty input"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 4 || h[0] != "milp" {
        return Err(err(ln, "expected header `milp <n> <n_ub> <n_eq>`"));
    }
    let n: usize = h[1].parse().map_err(|_| err(ln, "bad n_vars"))?;
    let m_ub: usize = h[2].parse().map_err(|_| err(ln, "bad n_ub"))?;
    let m_eq: usize = h[3].parse().map_err(|_| err(ln, "bad n_eq"))?;

    let mut c = vec![0.0; n];
    let mut a_ub = Vec::new();
    let mut b_ub = vec![0.0; m_ub];
    let mut a_eq = Vec::new();
    let mut b_eq = vec![0.0; m_eq];
    let mut lb = vec![0.0; n];
    let mut ub = vec![0.0; n];
    let mut ints = Vec::new();

    for (ln, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        let get_usize = |i: usize| -> Result<usize, MilpError> {
            f.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err(ln, "bad index"))
        };
        let get_f64 = |i: usize| -> Result<f64, MilpError> {
            f.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err(ln, "bad value"))
        };
        let check = |i: usize, len: usize| -> Result<usize, MilpError> {
            if i < len {
                Ok(i)
            } else {
                Err(err(ln, "index out of range"))
            }
        };
        match f[0] {
            "c" => c[check(get_usize(1)?, n)?] = get_f64(2)?,
            "a" => a_ub.push((get_usize(1)?, get_usize(2)?, get_f64(3)?)),
            "b" => b_ub[check(get_usize(1)?, m_ub)?] = get_f64(2)?,
            "aeq" => a_eq.push((get_usize(1)?, get_usize(2)?, get_f64(3)?)),
            "beq" => b_eq[check(get_usize(1)?, m_eq)?] = get_f64(2)?,
            "bnd" => {
                let j = check(get_usize(1)?, n)?;
                lb[j] = get_f64(2)?;
                ub[j] = get_f64(3)?;
            }
            "int" => ints.push(check(get_usize(1)?, n)?),
            other => return Err(err(ln, &format!("unknown record `{other}`"))),
        }
    }
    MilpProblem::new(
        c,
        SparseMatrix::from_triplets(m_ub, n, a_ub)?,
        b_ub,
        SparseMatrix::from_triplets(m_eq, n, a_eq)?,
        b_eq,
        lb,
        ub,
        ints,
    )
}

pub fn load_problem(path: &Path) -> Result<MilpProblem, MilpError> {
    parse_problem(&std::fs::read_to_string(path)?)
}
