//! Standard-form conic programs and a small modeling layer that assembles them.
//!
//! A [`ConicProblem`] reads
//!
//! ```text
//! maximize    objective' x + objective_offset
//! subject to  A x = b
//!             h - G x  in  K = K_1 x ... x K_r
//! ```
//!
//! where each `K_i` is a nonnegative orthant, a second-order cone or a cone of
//! real symmetric PSD matrices stored in `svec` form (lower triangle, column
//! major, off-diagonals scaled by sqrt(2) so the inner product is preserved).

use std::collections::BTreeSet;
use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{ConicError, Result};
use crate::expr::{CLinExpr, LinExpr, Var};

/// One factor of the cone product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    /// `s >= 0` elementwise, of the given length.
    NonNeg(usize),
    /// `s_0 >= ||s_1..||`, of the given total length.
    Soc(usize),
    /// Real symmetric PSD matrices of the given order.
    Psd(usize),
}

impl Cone {
    /// Number of slack entries the cone occupies.
    pub fn dim(&self) -> usize {
        match *self {
            Cone::NonNeg(n) | Cone::Soc(n) => n,
            Cone::Psd(k) => k * (k + 1) / 2,
        }
    }

    /// Barrier degree.
    pub fn degree(&self) -> usize {
        match *self {
            Cone::NonNeg(n) => n,
            Cone::Soc(_) => 1,
            Cone::Psd(k) => k,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConicProblem {
    pub objective: DVector<f64>,
    pub objective_offset: f64,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
    pub cones: Vec<Cone>,
    pub var_names: Vec<String>,
}

impl ConicProblem {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_eq(&self) -> usize {
        self.b.len()
    }

    pub fn cone_dim(&self) -> usize {
        self.cones.iter().map(Cone::dim).sum()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.var_names.iter().position(|n| n == name)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let p = self.num_eq();
        let m = self.cone_dim();
        if self.a.nrows() != p || self.a.ncols() != n {
            return Err(ConicError::Dimension(format!(
                "A is {}x{}, expected {}x{}",
                self.a.nrows(),
                self.a.ncols(),
                p,
                n
            )));
        }
        if self.g.nrows() != m || self.g.ncols() != n || self.h.len() != m {
            return Err(ConicError::Dimension(format!(
                "G is {}x{} with h of length {}, cones cover {} rows over {} variables",
                self.g.nrows(),
                self.g.ncols(),
                self.h.len(),
                m,
                n
            )));
        }
        if self.var_names.len() != n {
            return Err(ConicError::Dimension(format!(
                "{} names for {} variables",
                self.var_names.len(),
                n
            )));
        }
        let mut seen = BTreeSet::new();
        for name in &self.var_names {
            if !seen.insert(name.as_str()) {
                return Err(ConicError::DuplicateName(name.clone()));
            }
        }
        for cone in &self.cones {
            let ok = match *cone {
                Cone::NonNeg(d) => d > 0,
                Cone::Soc(d) => d > 0,
                Cone::Psd(k) => k > 0,
            };
            if !ok {
                return Err(ConicError::Malformed(format!("empty cone {cone:?}")));
            }
        }
        let finite = self.objective.iter().chain(self.a.iter()).chain(self.b.iter());
        if finite.chain(self.g.iter()).chain(self.h.iter()).any(|v| !v.is_finite()) {
            return Err(ConicError::Malformed("non-finite coefficient".into()));
        }
        Ok(())
    }

    /// Objective value (maximize convention) at `x`.
    pub fn objective_value(&self, x: &DVector<f64>) -> f64 {
        self.objective.dot(x) + self.objective_offset
    }
}

/// Index of entry `(i, j)`, `i >= j`, inside the svec of an order-`k` matrix.
pub fn svec_index(k: usize, i: usize, j: usize) -> usize {
    debug_assert!(i >= j && i < k);
    // columns 0..j hold k + (k-1) + ... + (k-j+1) entries
    j * k - j * j.saturating_sub(1) / 2 + (i - j)
}

pub fn svec(m: &DMatrix<f64>) -> DVector<f64> {
    let k = m.nrows();
    let mut out = DVector::zeros(k * (k + 1) / 2);
    let mut idx = 0;
    for j in 0..k {
        for i in j..k {
            out[idx] = if i == j { m[(i, j)] } else { SQRT_2 * 0.5 * (m[(i, j)] + m[(j, i)]) };
            idx += 1;
        }
    }
    out
}

pub fn smat(v: &[f64], k: usize) -> DMatrix<f64> {
    debug_assert_eq!(v.len(), k * (k + 1) / 2);
    let mut out = DMatrix::zeros(k, k);
    let mut idx = 0;
    for j in 0..k {
        for i in j..k {
            if i == j {
                out[(i, i)] = v[idx];
            } else {
                let x = v[idx] / SQRT_2;
                out[(i, j)] = x;
                out[(j, i)] = x;
            }
            idx += 1;
        }
    }
    out
}

/// Real embedding `[[Re H, -Im H], [Im H, Re H]]` of a Hermitian matrix.
///
/// The embedding has the eigenvalues of `H`, each with doubled multiplicity,
/// so `H >= 0` iff the embedding is PSD.
pub fn hermitian_embed(h: &DMatrix<Complex64>) -> Result<DMatrix<f64>> {
    let k = h.nrows();
    if h.ncols() != k {
        return Err(ConicError::Dimension(format!("{}x{} is not square", k, h.ncols())));
    }
    let scale = h.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut asym: f64 = 0.0;
    for i in 0..k {
        for j in 0..=i {
            asym = asym.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    if asym > 1e-10 * scale {
        return Err(ConicError::NotHermitian(asym));
    }
    let mut out = DMatrix::zeros(2 * k, 2 * k);
    for i in 0..k {
        for j in 0..k {
            let z = h[(i, j)];
            out[(i, j)] = z.re;
            out[(i + k, j + k)] = z.re;
            out[(i, j + k)] = -z.im;
            out[(i + k, j)] = z.im;
        }
    }
    Ok(out)
}

/// Incrementally assembles a [`ConicProblem`] from affine expressions.
#[derive(Debug, Default, Clone)]
pub struct ProblemBuilder {
    names: Vec<String>,
    eq_rows: Vec<LinExpr>,
    cone_rows: Vec<(Cone, Vec<LinExpr>)>,
    objective: LinExpr,
}

impl ProblemBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(&mut self, name: impl Into<String>) -> Var {
        self.names.push(name.into());
        Var(self.names.len() - 1)
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn maximize(&mut self, objective: LinExpr) {
        self.objective = objective;
    }

    /// `expr == 0`
    pub fn eq(&mut self, expr: LinExpr) {
        self.eq_rows.push(expr);
    }

    /// `expr >= 0`
    pub fn nonneg(&mut self, expr: LinExpr) {
        match self.cone_rows.last_mut() {
            Some((Cone::NonNeg(d), rows)) => {
                *d += 1;
                rows.push(expr);
            }
            _ => self.cone_rows.push((Cone::NonNeg(1), vec![expr])),
        }
    }

    /// `lhs >= rhs`
    pub fn ge(&mut self, lhs: LinExpr, rhs: LinExpr) {
        self.nonneg(lhs - rhs);
    }

    /// `||xs|| <= t`
    pub fn soc(&mut self, t: LinExpr, xs: Vec<LinExpr>) {
        let mut rows = Vec::with_capacity(xs.len() + 1);
        rows.push(t);
        rows.extend(xs);
        self.cone_rows.push((Cone::Soc(rows.len()), rows));
    }

    /// `||xs||^2 <= u * v` with `u, v >= 0`.
    pub fn rotated_soc(&mut self, u: LinExpr, v: LinExpr, xs: Vec<LinExpr>) {
        let t = (u.clone() + &v) * 0.5;
        let d = (u - v) * 0.5;
        let mut rest = Vec::with_capacity(xs.len() + 1);
        rest.push(d);
        rest.extend(xs);
        self.soc(t, rest);
    }

    /// `||xs||^2 <= rhs`
    pub fn sum_squares_le(&mut self, xs: Vec<LinExpr>, rhs: LinExpr) {
        self.rotated_soc(rhs, LinExpr::constant(1.0), xs);
    }

    /// Symmetric matrix of affine entries is PSD. Only the lower triangle is read.
    pub fn psd(&mut self, m: &[Vec<LinExpr>]) {
        let k = m.len();
        let mut rows = Vec::with_capacity(k * (k + 1) / 2);
        for j in 0..k {
            for i in j..k {
                if i == j {
                    rows.push(m[i][j].clone());
                } else {
                    rows.push(m[i][j].scaled(SQRT_2));
                }
            }
        }
        self.cone_rows.push((Cone::Psd(k), rows));
    }

    /// Hermitian matrix of complex affine entries is PSD, via the real embedding.
    /// Only the lower triangle is read; the diagonal's imaginary part is ignored.
    pub fn hermitian_psd(&mut self, m: &[Vec<CLinExpr>]) {
        let k = m.len();
        let n = 2 * k;
        let mut real = vec![vec![LinExpr::zero(); n]; n];
        for i in 0..k {
            for j in 0..=i {
                let z = &m[i][j];
                real[i][j] = z.re.clone();
                real[i + k][j + k] = z.re.clone();
                // lower-left block holds Im H; its (i, j) and (j, i) entries
                // are Im H_ij and Im H_ji = -Im H_ij.
                real[i + k][j] = z.im.clone();
                if i != j {
                    real[j + k][i] = -z.im.clone();
                }
            }
        }
        self.psd(&real);
    }

    pub fn build(self) -> ConicProblem {
        let n = self.names.len();
        let p = self.eq_rows.len();
        let m: usize = self.cone_rows.iter().map(|(c, _)| c.dim()).sum();
        let mut a = DMatrix::zeros(p, n);
        let mut b = DVector::zeros(p);
        for (r, e) in self.eq_rows.iter().enumerate() {
            for &(j, c) in e.terms() {
                a[(r, j)] = c;
            }
            b[r] = -e.constant_term();
        }
        let mut g = DMatrix::zeros(m, n);
        let mut h = DVector::zeros(m);
        let mut cones = Vec::with_capacity(self.cone_rows.len());
        let mut r = 0;
        for (cone, rows) in self.cone_rows {
            for e in rows {
                for &(j, c) in e.terms() {
                    g[(r, j)] = -c;
                }
                h[r] = e.constant_term();
                r += 1;
            }
            cones.push(cone);
        }
        let mut objective = DVector::zeros(n);
        for &(j, c) in self.objective.terms() {
            objective[j] = c;
        }
        ConicProblem {
            objective,
            objective_offset: self.objective.constant_term(),
            a,
            b,
            g,
            h,
            cones,
            var_names: self.names,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    #[test]
    fn svec_roundtrip_preserves_inner_product() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 5.0, 6.0, 3.0, 6.0, 9.0]);
        let b = DMatrix::from_row_slice(3, 3, &[0.5, -1.0, 0.0, -1.0, 2.0, 4.0, 0.0, 4.0, 1.0]);
        let ip = a.component_mul(&b).sum();
        assert!((svec(&a).dot(&svec(&b)) - ip).abs() < 1e-12);
        assert!((smat(svec(&a).as_slice(), 3) - &a).norm() < 1e-12);
    }

    #[test]
    fn embed_identity() {
        let h = DMatrix::<Complex64>::identity(3, 3);
        let e = hermitian_embed(&h).unwrap();
        assert_eq!(e, DMatrix::<f64>::identity(6, 6));
    }

    #[test]
    fn embed_off_diagonal_imaginary() {
        let j = Complex64::new(0.0, 1.0);
        let h = DMatrix::from_row_slice(2, 2, &[Complex64::new(0.0, 0.0), j, -j, Complex64::new(0.0, 0.0)]);
        let e = hermitian_embed(&h).unwrap();
        let mut eig: Vec<f64> = SymmetricEigen::new(e).eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected = [-1.0, -1.0, 1.0, 1.0];
        for (a, b) in eig.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{eig:?}");
        }
    }

    #[test]
    fn embed_rejects_non_hermitian() {
        let h = DMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)],
        );
        assert!(matches!(hermitian_embed(&h), Err(ConicError::NotHermitian(_))));
    }

    #[test]
    fn builder_hermitian_matches_embed() {
        // constant Hermitian block: builder rows must equal svec(embed(H))
        let h = DMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(2.0, 0.0), Complex64::new(0.5, 1.5), Complex64::new(0.5, -1.5), Complex64::new(3.0, 0.0)],
        );
        let mut b = ProblemBuilder::new();
        let rows: Vec<Vec<CLinExpr>> =
            (0..2).map(|i| (0..2).map(|j| CLinExpr::constant(h[(i, j)])).collect()).collect();
        b.hermitian_psd(&rows);
        let p = b.build();
        let expected = svec(&hermitian_embed(&h).unwrap());
        assert!((p.h - expected).norm() < 1e-12);
        assert_eq!(p.cones, vec![Cone::Psd(4)]);
    }

    #[test]
    fn validate_catches_duplicate_names() {
        let mut b = ProblemBuilder::new();
        let x = b.var("x");
        b.var("x");
        b.nonneg(LinExpr::var(x));
        assert!(matches!(b.build().validate(), Err(ConicError::DuplicateName(_))));
    }
}
