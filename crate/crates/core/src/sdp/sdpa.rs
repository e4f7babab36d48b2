//! Sparse SDPA text format (`.dat-s`).
//!
//! The file encodes SDPA's dual form `max ⟨F0, Y⟩ s.t. ⟨F_i, Y⟩ = c_i`,
//! written here with `F0 = −C`, `F_i = A_i`, `c_i = b_i`. The optimal value
//! reported by an SDPA-compatible solver is therefore the negated minimum.

use std::io::Write;

use super::SdpProblem;

pub fn write_sdpa(problem: &SdpProblem, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "* max <F0,Y> with F0 = -C; optimum is the negated minimum")?;
    writeln!(out, "{}", problem.constraints.len())?;
    writeln!(out, "{}", problem.block_sizes.len())?;
    let sizes: Vec<String> = problem.block_sizes.iter().map(|n| n.to_string()).collect();
    writeln!(out, "{}", sizes.join(" "))?;
    let rhs: Vec<String> = problem.constraints.iter().map(|c| format!("{:e}", c.rhs)).collect();
    writeln!(out, "{}", rhs.join(" "))?;
    for (b, c) in problem.objective.iter().enumerate() {
        for j in 0..c.ncols() {
            for i in 0..=j {
                let v = c[(i, j)];
                if v != 0.0 {
                    writeln!(out, "0 {} {} {} {:e}", b + 1, i + 1, j + 1, -v)?;
                }
            }
        }
    }
    for (k, con) in problem.constraints.iter().enumerate() {
        for (b, a) in &con.blocks {
            for &(i, j, v) in a.entries() {
                writeln!(out, "{} {} {} {} {:e}", k + 1, b + 1, i + 1, j + 1, v)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::{Constraint, SymSparse};
    use nalgebra::DMatrix;

    #[test]
    fn small_dump() {
        let c = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let p = SdpProblem::new(vec![2], vec![c], vec![Constraint::new(vec![(0, SymSparse::identity(2))], 1.0)]);
        let mut buf = Vec::new();
        write_sdpa(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(&lines[1..5], &["1", "1", "2", "1e0"]);
        assert_eq!(lines[5], "0 1 1 2 -1e0");
        assert_eq!(&lines[6..], &["1 1 1 1 1e0", "1 1 2 2 1e0"]);
    }
}
