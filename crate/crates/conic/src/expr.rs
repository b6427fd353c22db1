//! Affine expressions over the decision-variable vector of a [`ProblemBuilder`].
//!
//! [`ProblemBuilder`]: crate::ProblemBuilder

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;

/// Handle to one real decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }

    /// Only meant for tests and tools that assemble assignments by hand.
    pub fn from_index(index: usize) -> Self {
        Var(index)
    }
}

/// Real affine expression `constant + sum(coef * var)`.
///
/// Terms are kept sorted by variable index with no duplicates, so two
/// expressions built the same way compare equal and iterate identically.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    terms: Vec<(usize, f64)>,
    constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        LinExpr { terms: Vec::new(), constant: c }
    }

    pub fn var(v: Var) -> Self {
        LinExpr { terms: vec![(v.0, 1.0)], constant: 0.0 }
    }

    pub fn term(v: Var, coef: f64) -> Self {
        if coef == 0.0 {
            return Self::zero();
        }
        LinExpr { terms: vec![(v.0, coef)], constant: 0.0 }
    }

    pub fn terms(&self) -> &[(usize, f64)] {
        &self.terms
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, v: Var, coef: f64) {
        if coef == 0.0 {
            return;
        }
        match self.terms.binary_search_by_key(&v.0, |t| t.0) {
            Ok(pos) => {
                self.terms[pos].1 += coef;
                if self.terms[pos].1 == 0.0 {
                    self.terms.remove(pos);
                }
            }
            Err(pos) => self.terms.insert(pos, (v.0, coef)),
        }
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    /// `self += scale * other`
    pub fn axpy(&mut self, scale: f64, other: &LinExpr) {
        if scale == 0.0 {
            return;
        }
        self.constant += scale * other.constant;
        if other.terms.is_empty() {
            return;
        }
        let mut merged = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < other.terms.len() {
            let take_left = j >= other.terms.len()
                || (i < self.terms.len() && self.terms[i].0 < other.terms[j].0);
            let take_right = i >= self.terms.len()
                || (j < other.terms.len() && other.terms[j].0 < self.terms[i].0);
            if take_left {
                merged.push(self.terms[i]);
                i += 1;
            } else if take_right {
                merged.push((other.terms[j].0, scale * other.terms[j].1));
                j += 1;
            } else {
                let c = self.terms[i].1 + scale * other.terms[j].1;
                if c != 0.0 {
                    merged.push((self.terms[i].0, c));
                }
                i += 1;
                j += 1;
            }
        }
        self.terms = merged;
    }

    pub fn scaled(&self, s: f64) -> LinExpr {
        if s == 0.0 {
            return LinExpr::zero();
        }
        LinExpr {
            terms: self.terms.iter().map(|&(i, c)| (i, c * s)).collect(),
            constant: self.constant * s,
        }
    }

    /// Value under an assignment indexed by variable id.
    pub fn eval(&self, values: &[f64]) -> f64 {
        self.terms.iter().fold(self.constant, |acc, &(i, c)| acc + c * values[i])
    }

    pub fn max_var_index(&self) -> Option<usize> {
        self.terms.last().map(|t| t.0)
    }
}

impl From<f64> for LinExpr {
    fn from(c: f64) -> Self {
        LinExpr::constant(c)
    }
}

impl From<Var> for LinExpr {
    fn from(v: Var) -> Self {
        LinExpr::var(v)
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self.axpy(1.0, &rhs);
        self
    }
}

impl Add<&LinExpr> for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: &LinExpr) -> LinExpr {
        self.axpy(1.0, rhs);
        self
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: LinExpr) -> LinExpr {
        self.axpy(-1.0, &rhs);
        self
    }
}

impl Sub<&LinExpr> for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: &LinExpr) -> LinExpr {
        self.axpy(-1.0, rhs);
        self
    }
}

impl AddAssign<&LinExpr> for LinExpr {
    fn add_assign(&mut self, rhs: &LinExpr) {
        self.axpy(1.0, rhs);
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(self, rhs: f64) -> LinExpr {
        self.scaled(rhs)
    }
}

impl Mul<f64> for &LinExpr {
    type Output = LinExpr;
    fn mul(self, rhs: f64) -> LinExpr {
        self.scaled(rhs)
    }
}

/// Complex affine expression, stored as a pair of real expressions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CLinExpr {
    pub re: LinExpr,
    pub im: LinExpr,
}

impl CLinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex64) -> Self {
        CLinExpr { re: LinExpr::constant(c.re), im: LinExpr::constant(c.im) }
    }

    pub fn real(re: LinExpr) -> Self {
        CLinExpr { re, im: LinExpr::zero() }
    }

    pub fn new(re: LinExpr, im: LinExpr) -> Self {
        CLinExpr { re, im }
    }

    pub fn conj(&self) -> CLinExpr {
        CLinExpr { re: self.re.clone(), im: -self.im.clone() }
    }

    /// `self += c * other` for a complex constant `c`.
    pub fn axpy(&mut self, c: Complex64, other: &CLinExpr) {
        // (a + jb)(x + jy) = (ax - by) + j(ay + bx)
        self.re.axpy(c.re, &other.re);
        self.re.axpy(-c.im, &other.im);
        self.im.axpy(c.re, &other.im);
        self.im.axpy(c.im, &other.re);
    }

    pub fn scaled(&self, c: Complex64) -> CLinExpr {
        let mut out = CLinExpr::zero();
        out.axpy(c, self);
        out
    }

    pub fn add_constant(&mut self, c: Complex64) {
        self.re.add_constant(c.re);
        self.im.add_constant(c.im);
    }

    pub fn eval(&self, values: &[f64]) -> Complex64 {
        Complex64::new(self.re.eval(values), self.im.eval(values))
    }
}

impl Add for CLinExpr {
    type Output = CLinExpr;
    fn add(mut self, rhs: CLinExpr) -> CLinExpr {
        self.re.axpy(1.0, &rhs.re);
        self.im.axpy(1.0, &rhs.im);
        self
    }
}

impl Sub for CLinExpr {
    type Output = CLinExpr;
    fn sub(mut self, rhs: CLinExpr) -> CLinExpr {
        self.re.axpy(-1.0, &rhs.re);
        self.im.axpy(-1.0, &rhs.im);
        self
    }
}
