//! Plain-text serialization of a [`ConicProblem`], for offline inspection
//! and replay with other solvers.
//!
//! ```text
//! CONIC 1
//! VARS <n>
//! <name>                 n lines
//! OBJ <offset> <nnz>
//! <j> <value>            nnz lines
//! A <rows> <nnz>
//! <i> <j> <value>
//! B <nnz>
//! <i> <value>
//! G <rows> <nnz>
//! <i> <j> <value>
//! H <nnz>
//! <i> <value>
//! CONES <count>
//! nonneg|soc|psd <size>
//! ```
//!
//! Values are written with Rust's shortest round-trip formatting, so a
//! written problem reads back bit-for-bit.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::{ConicError, Result};
use crate::problem::{Cone, ConicProblem};

pub fn write_problem<W: Write>(problem: &ConicProblem, mut out: W) -> Result<()> {
    problem.validate()?;
    let mut s = String::new();
    let _ = writeln!(s, "CONIC 1");
    let _ = writeln!(s, "VARS {}", problem.num_vars());
    for name in &problem.var_names {
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(ConicError::Malformed(format!("variable name {name:?} is not a token")));
        }
        let _ = writeln!(s, "{name}");
    }
    let obj: Vec<_> = nonzeros_vec(&problem.objective);
    let _ = writeln!(s, "OBJ {:?} {}", problem.objective_offset, obj.len());
    for (j, v) in obj {
        let _ = writeln!(s, "{j} {v:?}");
    }
    write_matrix(&mut s, "A", &problem.a);
    write_vector(&mut s, "B", &problem.b);
    write_matrix(&mut s, "G", &problem.g);
    write_vector(&mut s, "H", &problem.h);
    let _ = writeln!(s, "CONES {}", problem.cones.len());
    for c in &problem.cones {
        let _ = match *c {
            Cone::NonNeg(d) => writeln!(s, "nonneg {d}"),
            Cone::Soc(d) => writeln!(s, "soc {d}"),
            Cone::Psd(k) => writeln!(s, "psd {k}"),
        };
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

pub fn read_problem<R: BufRead>(input: R) -> Result<ConicProblem> {
    let mut lines = Lines { inner: input.lines(), line: 0 };

    let head = lines.next_tokens()?;
    if head != ["CONIC", "1"] {
        return Err(lines.err("expected header `CONIC 1`"));
    }
    let n = lines.keyword_usize("VARS")?;
    let mut var_names = Vec::with_capacity(n);
    for _ in 0..n {
        let t = lines.next_tokens()?;
        if t.len() != 1 {
            return Err(lines.err("expected one variable name"));
        }
        var_names.push(t[0].clone());
    }

    let t = lines.next_tokens()?;
    if t.len() != 3 || t[0] != "OBJ" {
        return Err(lines.err("expected `OBJ <offset> <nnz>`"));
    }
    let objective_offset = lines.parse_f64(&t[1])?;
    let nnz = lines.parse_usize(&t[2])?;
    let mut objective = DVector::zeros(n);
    for _ in 0..nnz {
        let (j, v) = lines.index_value(n)?;
        objective[j] = v;
    }

    let a = lines.matrix("A", n)?;
    let b = lines.vector("B", a.nrows())?;
    let g = lines.matrix("G", n)?;
    let h = lines.vector("H", g.nrows())?;

    let count = lines.keyword_usize("CONES")?;
    let mut cones = Vec::with_capacity(count);
    for _ in 0..count {
        let t = lines.next_tokens()?;
        if t.len() != 2 {
            return Err(lines.err("expected `<kind> <size>`"));
        }
        let d = lines.parse_usize(&t[1])?;
        cones.push(match t[0].as_str() {
            "nonneg" => Cone::NonNeg(d),
            "soc" => Cone::Soc(d),
            "psd" => Cone::Psd(d),
            other => return Err(lines.err(&format!("unknown cone kind `{other}`"))),
        });
    }
    let problem = ConicProblem { objective, objective_offset, a, b, g, h, cones, var_names };
    problem.validate()?;
    Ok(problem)
}

fn nonzeros_vec(v: &DVector<f64>) -> Vec<(usize, f64)> {
    v.iter().enumerate().filter(|(_, x)| **x != 0.0).map(|(i, x)| (i, *x)).collect()
}

fn write_vector(s: &mut String, key: &str, v: &DVector<f64>) {
    let nz = nonzeros_vec(v);
    let _ = writeln!(s, "{key} {}", nz.len());
    for (i, x) in nz {
        let _ = writeln!(s, "{i} {x:?}");
    }
}

fn write_matrix(s: &mut String, key: &str, m: &DMatrix<f64>) {
    let mut nz = Vec::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if m[(i, j)] != 0.0 {
                nz.push((i, j, m[(i, j)]));
            }
        }
    }
    let _ = writeln!(s, "{key} {} {}", m.nrows(), nz.len());
    for (i, j, x) in nz {
        let _ = writeln!(s, "{i} {j} {x:?}");
    }
}

struct Lines<I> {
    inner: I,
    line: usize,
}

impl<I: Iterator<Item = std::io::Result<String>>> Lines<I> {
    fn err(&self, msg: &str) -> ConicError {
        ConicError::Parse { line: self.line, msg: msg.to_string() }
    }

    fn next_tokens(&mut self) -> Result<Vec<String>> {
        loop {
            let Some(line) = self.inner.next() else {
                return Err(self.err("unexpected end of input"));
            };
            self.line += 1;
            let line = line?;
            let t: Vec<String> = line.split_whitespace().map(str::to_string).collect();
            if !t.is_empty() {
                return Ok(t);
            }
        }
    }

    fn parse_usize(&self, t: &str) -> Result<usize> {
        t.parse().map_err(|_| self.err(&format!("bad integer `{t}`")))
    }

    fn parse_f64(&self, t: &str) -> Result<f64> {
        let v: f64 = t.parse().map_err(|_| self.err(&format!("bad number `{t}`")))?;
        if !v.is_finite() {
            return Err(self.err("non-finite number"));
        }
        Ok(v)
    }

    fn keyword_usize(&mut self, key: &str) -> Result<usize> {
        let t = self.next_tokens()?;
        if t.len() != 2 || t[0] != key {
            return Err(self.err(&format!("expected `{key} <count>`")));
        }
        self.parse_usize(&t[1])
    }

    fn index_value(&mut self, len: usize) -> Result<(usize, f64)> {
        let t = self.next_tokens()?;
        if t.len() != 2 {
            return Err(self.err("expected `<index> <value>`"));
        }
        let i = self.parse_usize(&t[0])?;
        if i >= len {
            return Err(self.err(&format!("index {i} out of range {len}")));
        }
        Ok((i, self.parse_f64(&t[1])?))
    }

    fn vector(&mut self, key: &str, len: usize) -> Result<DVector<f64>> {
        let nnz = self.keyword_usize(key)?;
        let mut v = DVector::zeros(len);
        for _ in 0..nnz {
            let (i, x) = self.index_value(len)?;
            v[i] = x;
        }
        Ok(v)
    }

    fn matrix(&mut self, key: &str, cols: usize) -> Result<DMatrix<f64>> {
        let t = self.next_tokens()?;
        if t.len() != 3 || t[0] != key {
            return Err(self.err(&format!("expected `{key} <rows> <nnz>`")));
        }
        let rows = self.parse_usize(&t[1])?;
        let nnz = self.parse_usize(&t[2])?;
        let mut m = DMatrix::zeros(rows, cols);
        for _ in 0..nnz {
            let t = self.next_tokens()?;
            if t.len() != 3 {
                return Err(self.err("expected `<row> <col> <value>`"));
            }
            let i = self.parse_usize(&t[0])?;
            let j = self.parse_usize(&t[1])?;
            if i >= rows || j >= cols {
                return Err(self.err(&format!("entry ({i}, {j}) outside {rows}x{cols}")));
            }
            m[(i, j)] = self.parse_f64(&t[2])?;
        }
        Ok(m)
    }
}
