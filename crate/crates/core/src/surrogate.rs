//! Builders for the robust and SCA constructs: S-procedure and Schur LMIs,
//! the bilinear product bound, the rank-one Taylor surrogate, steering-vector
//! linearizations and the quadratic cosine minorant.
//!
//! Matrix-valued builders return an [`LmiBlock`] of complex affine entries
//! over variables of a [`conic::ProblemBuilder`].

use std::f64::consts::LN_2;

use conic::{CLinExpr, LinExpr, ProblemBuilder};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::CVector;

pub type CMatExpr = Vec<Vec<CLinExpr>>;

/// Hermitian-matrix-valued affine map of decision variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiBlock {
    entries: CMatExpr,
}

fn clin_close(a: &CLinExpr, b: &CLinExpr, tol: f64) -> bool {
    lin_close(&a.re, &b.re, tol) && lin_close(&a.im, &b.im, tol)
}

fn lin_close(a: &LinExpr, b: &LinExpr, tol: f64) -> bool {
    let mut d = a.clone();
    d.axpy(-1.0, b);
    let scale = 1.0
        + a.terms().iter().chain(b.terms()).map(|t| t.1.abs()).fold(0.0, f64::max)
        + a.constant_term().abs().max(b.constant_term().abs());
    d.constant_term().abs() <= tol * scale && d.terms().iter().all(|t| t.1.abs() <= tol * scale)
}

impl LmiBlock {
    /// Checks that the entries form a square map that is Hermitian for every
    /// real assignment, i.e. `M_ji = conj(M_ij)` coefficientwise.
    pub fn new(entries: CMatExpr) -> Result<Self> {
        let k = entries.len();
        if entries.iter().any(|r| r.len() != k) {
            return Err(Error::Argument("LMI block must be square".into()));
        }
        for i in 0..k {
            for j in 0..=i {
                if !clin_close(&entries[j][i], &entries[i][j].conj(), 1e-9) {
                    return Err(Error::Argument(format!("LMI block not Hermitian at ({i}, {j})")));
                }
            }
        }
        Ok(LmiBlock { entries })
    }

    /// Constant block.
    pub fn constant(m: &DMatrix<Complex64>) -> Result<Self> {
        let entries = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| CLinExpr::constant(m[(i, j)])).collect())
            .collect();
        Self::new(entries)
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &CLinExpr {
        &self.entries[i][j]
    }

    pub fn eval(&self, values: &[f64]) -> DMatrix<Complex64> {
        let k = self.dim();
        DMatrix::from_fn(k, k, |i, j| self.entries[i][j].eval(values))
    }

    /// `D M D` for a positive diagonal `D`; preserves the PSD property.
    pub fn congruence(&self, d: &[f64]) -> LmiBlock {
        let entries = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, e)| e.scaled(Complex64::from(d[i] * d[j])))
                    .collect()
            })
            .collect();
        LmiBlock { entries }
    }

    /// Add `self >= 0` to the problem (through the real embedding).
    pub fn add_to(&self, builder: &mut ProblemBuilder) {
        builder.hermitian_psd(&self.entries);
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    let sym = (m + m.adjoint()).map(|v| v * 0.5);
    SymmetricEigen::new(sym).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

fn identity_plus(a: &[Vec<CLinExpr>], lambda: &LinExpr) -> CMatExpr {
    let mut out = a.to_vec();
    for (i, row) in out.iter_mut().enumerate() {
        row[i].re.axpy(1.0, lambda);
    }
    out
}

/// `[[A + lambda I, b], [b^H, c - lambda xi^2]]`. Its PSD-ness certifies
/// `e^H A e + 2 Re(b^H e) + c >= 0` for every `||e|| <= xi` (and `lambda >= 0`).
pub fn s_procedure_lmi(
    a: &[Vec<CLinExpr>],
    b: &[CLinExpr],
    c: LinExpr,
    xi: f64,
    lambda: LinExpr,
) -> Result<LmiBlock> {
    let m = a.len();
    if b.len() != m {
        return Err(Error::Argument(format!("b has length {}, A is {m}x{m}", b.len())));
    }
    if !(xi >= 0.0) {
        return Err(Error::Argument(format!("radius {xi} must be nonnegative")));
    }
    LmiBlock::new(a.to_vec())?;
    let mut entries = identity_plus(a, &lambda);
    for (i, row) in entries.iter_mut().enumerate() {
        row.push(b[i].clone());
    }
    let mut last: Vec<CLinExpr> = b.iter().map(CLinExpr::conj).collect();
    let mut corner = c;
    corner.axpy(-xi * xi, &lambda);
    last.push(CLinExpr::real(corner));
    entries.push(last);
    LmiBlock::new(entries)
}

/// Numeric block `[[A, B], [B^H, C]]` together with the Schur-complement
/// characterization of its PSD-ness.
#[derive(Debug, Clone)]
pub struct SchurPsd {
    pub block: LmiBlock,
    a: DMatrix<Complex64>,
    b: DMatrix<Complex64>,
    c: DMatrix<Complex64>,
}

pub fn schur_psd(
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
    c: &DMatrix<Complex64>,
) -> Result<SchurPsd> {
    let (p, q) = (a.nrows(), c.nrows());
    if a.ncols() != p || c.ncols() != q || b.nrows() != p || b.ncols() != q {
        return Err(Error::Argument(format!(
            "blocks {}x{}, {}x{}, {}x{} are not conformal",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols(),
            c.nrows(),
            c.ncols()
        )));
    }
    let mut full = DMatrix::zeros(p + q, p + q);
    full.view_mut((0, 0), (p, p)).copy_from(a);
    full.view_mut((0, p), (p, q)).copy_from(b);
    full.view_mut((p, 0), (q, p)).copy_from(&b.adjoint());
    full.view_mut((p, p), (q, q)).copy_from(c);
    Ok(SchurPsd { block: LmiBlock::constant(&full)?, a: a.clone(), b: b.clone(), c: c.clone() })
}

impl SchurPsd {
    pub fn block_is_psd(&self, tol: f64) -> bool {
        min_eigenvalue(&self.block.eval(&[])) >= -tol
    }

    /// `A >= 0` and `C - B^H A^{-1} B >= 0`; `None` when `A` is singular.
    pub fn complement_is_psd(&self, tol: f64) -> Option<bool> {
        let ainv = self.a.clone().try_inverse()?;
        let comp = &self.c - self.b.adjoint() * ainv * &self.b;
        Some(min_eigenvalue(&self.a) >= -tol && min_eigenvalue(&comp) >= -tol)
    }
}

/// Coefficients of `x_i x_j <= c_i x_i^2 + c_j x_j^2`, tight at `(x_i0, x_j0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductBound {
    pub ci: f64,
    pub cj: f64,
}

impl ProductBound {
    pub fn bound(&self, xi: f64, xj: f64) -> f64 {
        self.ci * xi * xi + self.cj * xj * xj
    }
}

pub fn product_upper_bound(xi0: f64, xj0: f64) -> Result<ProductBound> {
    if !(xi0 > 0.0 && xj0 > 0.0) {
        return Err(Error::Argument(format!("local point ({xi0}, {xj0}) must be positive")));
    }
    Ok(ProductBound { ci: 0.5 * xj0 / xi0, cj: 0.5 * xi0 / xj0 })
}

/// `W = w w0^H + w0 w^H - w0 w0^H`, affine in `w`; `w w^H - W = (w-w0)(w-w0)^H`.
pub fn taylor_rank1(w: &[CLinExpr], w0: &CVector) -> CMatExpr {
    let m = w.len();
    (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut e = w[i].scaled(w0[j].conj());
                    e.axpy(w0[i], &w[j].conj());
                    e.add_constant(-(w0[i] * w0[j].conj()));
                    e
                })
                .collect()
        })
        .collect()
}

pub fn taylor_rank1_value(w: &CVector, w0: &CVector) -> DMatrix<Complex64> {
    w * w0.adjoint() + w0 * w.adjoint() - w0 * w0.adjoint()
}

/// Constant complex vector as expressions.
pub fn const_cvec(v: &CVector) -> Vec<CLinExpr> {
    v.iter().map(|&c| CLinExpr::constant(c)).collect()
}

fn mat_vec(a: &[Vec<CLinExpr>], h: &CVector) -> Vec<CLinExpr> {
    a.iter()
        .map(|row| {
            let mut acc = CLinExpr::zero();
            for (e, &hj) in row.iter().zip(h.iter()) {
                acc.axpy(hj, e);
            }
            acc
        })
        .collect()
}

/// `h^H v` for constant `h`.
pub fn dotc_const(h: &CVector, v: &[CLinExpr]) -> CLinExpr {
    let mut acc = CLinExpr::zero();
    for (&hi, e) in h.iter().zip(v) {
        acc.axpy(hi.conj(), e);
    }
    acc
}

/// Signal LMI `[[W + lambda I, W h], [h^H W, h^H W h - alpha - lambda xi^2]]`
/// with `W` the rank-one Taylor surrogate of `w w^H` at `w0`.
pub fn beamforming_signal_lmi(
    w: &[CLinExpr],
    h: &CVector,
    xi: f64,
    alpha: LinExpr,
    lambda: LinExpr,
    w0: &CVector,
) -> Result<LmiBlock> {
    let wc = taylor_rank1(w, w0);
    let b = mat_vec(&wc, h);
    let c = dotc_const(h, &b).re - alpha;
    s_procedure_lmi(&wc, &b, c, xi, lambda)
}

/// Interference LMI
/// `[[beta - noise - varpi, h^H W, 0], [W^H h, I, xi W^H], [0, xi W, varpi I]]`
/// where `W` stacks the other users' beams as columns (`others[j]` is one beam).
pub fn interference_lmi(
    others: &[Vec<CLinExpr>],
    h: &CVector,
    xi: f64,
    beta: LinExpr,
    varpi: LinExpr,
    noise: f64,
) -> Result<LmiBlock> {
    let hw: Vec<CLinExpr> = others.iter().map(|w| dotc_const(h, w)).collect();
    interference_lmi_from_products(&hw, others, h.len(), xi, beta, varpi, noise)
}

/// Same block with the row `h^H W` supplied directly (entry `j` is `h^H w_j`),
/// e.g. as a linearization in the antenna positions.
pub fn interference_lmi_from_products(
    hw: &[CLinExpr],
    others: &[Vec<CLinExpr>],
    m: usize,
    xi: f64,
    beta: LinExpr,
    varpi: LinExpr,
    noise: f64,
) -> Result<LmiBlock> {
    let kk = others.len();
    if hw.len() != kk {
        return Err(Error::Argument("one product per interfering beam required".into()));
    }
    if others.iter().any(|w| w.len() != m) {
        return Err(Error::Argument("beam length differs from channel length".into()));
    }
    let dim = 1 + kk + m;
    let mut e = vec![vec![CLinExpr::zero(); dim]; dim];
    let mut corner = beta;
    corner.add_constant(-noise);
    corner.axpy(-1.0, &varpi);
    e[0][0] = CLinExpr::real(corner);
    for (j, w) in others.iter().enumerate() {
        e[1 + j][0] = hw[j].conj();
        e[0][1 + j] = hw[j].clone();
        e[1 + j][1 + j] = CLinExpr::constant(Complex64::from(1.0));
        for (p, wp) in w.iter().enumerate() {
            let v = wp.scaled(Complex64::from(xi));
            e[1 + kk + p][1 + j] = v.clone();
            e[1 + j][1 + kk + p] = v.conj();
        }
    }
    for p in 0..m {
        e[1 + kk + p][1 + kk + p] = CLinExpr::real(varpi.clone());
    }
    LmiBlock::new(e)
}

/// `w w^H = chi u u^H` with `chi = ||w||^2`; `u` is `None` for `w = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank1 {
    pub chi: f64,
    pub u: Option<CVector>,
}

pub fn rank1_decomp(w: &CVector) -> Rank1 {
    let n = w.norm();
    if n == 0.0 {
        return Rank1 { chi: 0.0, u: None };
    }
    Rank1 { chi: n * n, u: Some(w.map(|v| v / n)) }
}

/// First-order expansions in `x` around `x0` of the steering-dependent
/// terms, with `a(x)_p = exp(-j rate x_p)`:
/// `v ~ w w^H a`, `v_bar ~ a^H w w^H`, `a_tilde[i] ~ a^H w_i`, `b_tilde = conj(a_tilde)`.
#[derive(Debug, Clone)]
pub struct SteeringLin {
    pub v: Vec<CLinExpr>,
    pub v_bar: Vec<CLinExpr>,
    pub a_tilde: Vec<CLinExpr>,
    pub b_tilde: Vec<CLinExpr>,
}

pub fn steering_linearizations(
    w: &CVector,
    others: &[CVector],
    rate: f64,
    x: &[LinExpr],
    x0: &[f64],
) -> SteeringLin {
    let m = w.len();
    let j = Complex64::i();
    let delta: Vec<LinExpr> = x.iter().zip(x0).map(|(e, &c)| e.clone() - LinExpr::constant(c)).collect();

    // u^H a(x) ~ sum_p a0_p (1 - j rate delta_p), a0_p = conj(u_p) e^{-j rate x0_p}
    let r1 = rank1_decomp(w);
    let v = match &r1.u {
        None => vec![CLinExpr::zero(); m],
        Some(u) => {
            let mut s = CLinExpr::zero();
            for p in 0..m {
                let a0 = u[p].conj() * Complex64::from_polar(1.0, -rate * x0[p]);
                s.add_constant(a0);
                s.axpy(-j * rate * a0, &CLinExpr::real(delta[p].clone()));
            }
            (0..m).map(|i| s.scaled(u[i] * r1.chi)).collect()
        }
    };
    let v_bar = v.iter().map(CLinExpr::conj).collect();

    let a_tilde: Vec<CLinExpr> = others
        .iter()
        .map(|wi| {
            let mut s = CLinExpr::zero();
            for p in 0..m {
                let a0 = wi[p] * Complex64::from_polar(1.0, rate * x0[p]);
                s.add_constant(a0);
                s.axpy(j * rate * a0, &CLinExpr::real(delta[p].clone()));
            }
            s
        })
        .collect();
    let b_tilde = a_tilde.iter().map(CLinExpr::conj).collect();
    SteeringLin { v, v_bar, a_tilde, b_tilde }
}

/// `cos a >= cos a0 - sin a0 (a - a0) - (a - a0)^2 / 2`.
pub fn cos_minorant(a0: f64, a: f64) -> f64 {
    let d = a - a0;
    a0.cos() - a0.sin() * d - 0.5 * d * d
}

/// Concave quadratic minorant of `|a(x)^H w|^2`, tight at `x0`:
/// `q(x) = x' X x / 2 + y' x + z`.
#[derive(Debug, Clone)]
pub struct CosSurrogate {
    pub x_mat: DMatrix<f64>,
    pub y: DVector<f64>,
    pub z: f64,
    rate: f64,
    mags: Vec<f64>,
    phases: Vec<f64>,
    x0: Vec<f64>,
    f0: f64,
    grad: DVector<f64>,
}

pub fn cos_quadratic_surrogate(w: &CVector, rate: f64, x0: &[f64]) -> CosSurrogate {
    let m = w.len();
    let mags: Vec<f64> = w.iter().map(|c| c.norm()).collect();
    let phases: Vec<f64> = w.iter().map(|c| c.arg()).collect();
    let eta: f64 = mags.iter().sum();
    // Theta_pq = rate (x_p - x_q) + (arg w_p - arg w_q)
    let theta = |p: usize, q: usize| rate * (x0[p] - x0[q]) + phases[p] - phases[q];
    let mut f0 = 0.0;
    let mut grad = DVector::zeros(m);
    for p in 0..m {
        for q in 0..m {
            let c = mags[p] * mags[q];
            let t = theta(p, q);
            f0 += c * t.cos();
            grad[p] -= 2.0 * rate * c * t.sin();
        }
    }
    let wt = DVector::from_vec(mags.clone());
    let lap = DMatrix::from_diagonal(&wt.map(|v| eta * v)) - &wt * wt.transpose();
    let x_mat = lap * (-2.0 * rate * rate);
    let x0v = DVector::from_vec(x0.to_vec());
    let y = &grad - &x_mat * &x0v;
    let z = f0 - grad.dot(&x0v) + 0.5 * x0v.dot(&(&x_mat * &x0v));
    CosSurrogate { x_mat, y, z, rate, mags, phases, x0: x0.to_vec(), f0, grad }
}

impl CosSurrogate {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let xv = DVector::from_vec(x.to_vec());
        0.5 * xv.dot(&(&self.x_mat * &xv)) + self.y.dot(&xv) + self.z
    }

    /// `|a(x)^H w|^2` evaluated exactly.
    pub fn exact(&self, x: &[f64]) -> f64 {
        let s: Complex64 = (0..x.len())
            .map(|p| Complex64::from_polar(self.mags[p], self.rate * x[p] + self.phases[p]))
            .sum();
        s.norm_sqr()
    }

    pub fn value_at_local_point(&self) -> f64 {
        self.f0
    }

    /// Terms `t` and right-hand side `r` with `q(x) - rho >= 0` equivalent to
    /// `||t||^2 <= r - rho`.
    pub fn sum_squares_form(&self, x: &[LinExpr]) -> (Vec<LinExpr>, LinExpr) {
        let m = x.len();
        let delta: Vec<LinExpr> =
            x.iter().zip(&self.x0).map(|(e, &c)| e.clone() - LinExpr::constant(c)).collect();
        // the curvature is a weighted graph Laplacian in the displacements
        let mut terms = Vec::with_capacity(m * (m.saturating_sub(1)) / 2);
        for p in 0..m {
            for q in p + 1..m {
                let c = self.rate * (self.mags[p] * self.mags[q]).sqrt();
                if c != 0.0 {
                    terms.push((delta[p].clone() - &delta[q]) * c);
                }
            }
        }
        let mut rhs = LinExpr::constant(self.f0);
        for p in 0..m {
            rhs.axpy(self.grad[p], &delta[p]);
        }
        (terms, rhs)
    }
}

/// Concave quadratic minorant of `log2(1 + g)` on `g >= 0`, tight at `g0`:
/// `q(g) = c0 + c1 g + c2 g^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMinorant {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl LogMinorant {
    pub fn eval(&self, g: f64) -> f64 {
        self.c0 + self.c1 * g + self.c2 * g * g
    }
}

pub fn log_minorant(g0: f64) -> Result<LogMinorant> {
    if !(g0 >= 0.0 && g0.is_finite()) {
        return Err(Error::Argument(format!("local SINR {g0} must be nonnegative")));
    }
    // log2(1+g0) + (g-g0)/((1+g0) ln2) - (g-g0)^2/(2 ln2)
    let s = 1.0 / ((1.0 + g0) * LN_2);
    let k = 1.0 / (2.0 * LN_2);
    Ok(LogMinorant {
        c0: (1.0 + g0).log2() - s * g0 - k * g0 * g0,
        c1: s + 2.0 * k * g0,
        c2: -k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use conic::Var;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn s_procedure_identity_block() {
        let a = vec![
            vec![CLinExpr::constant(c(1.0, 0.0)), CLinExpr::zero()],
            vec![CLinExpr::zero(), CLinExpr::constant(c(1.0, 0.0))],
        ];
        let b = vec![CLinExpr::zero(), CLinExpr::zero()];
        let blk = s_procedure_lmi(&a, &b, LinExpr::zero(), 1.0, LinExpr::zero()).unwrap();
        let m = blk.eval(&[]);
        assert_eq!(m[(0, 0)], c(1.0, 0.0));
        assert_eq!(m[(2, 2)], c(0.0, 0.0));
        assert!(min_eigenvalue(&m) >= 0.0);
    }

    #[test]
    fn s_procedure_rejects_non_hermitian() {
        let a = vec![
            vec![CLinExpr::constant(c(1.0, 0.0)), CLinExpr::constant(c(0.0, 1.0))],
            vec![CLinExpr::constant(c(0.0, 1.0)), CLinExpr::constant(c(1.0, 0.0))],
        ];
        let b = vec![CLinExpr::zero(), CLinExpr::zero()];
        assert!(s_procedure_lmi(&a, &b, LinExpr::zero(), 1.0, LinExpr::zero()).is_err());
    }

    #[test]
    fn s_procedure_negative_identity_has_no_multiplier() {
        let lam = Var::from_index(0);
        let a = vec![vec![CLinExpr::constant(c(-1.0, 0.0))]];
        let b = vec![CLinExpr::zero()];
        let blk = s_procedure_lmi(&a, &b, LinExpr::zero(), 1.0, LinExpr::var(lam)).unwrap();
        // [[l - 1, 0], [0, -l]] is never PSD for l >= 0
        for i in 0..=1000 {
            let l = i as f64 * 0.01;
            assert!(min_eigenvalue(&blk.eval(&[l])) < 0.0);
        }
    }

    #[test]
    fn schur_examples() {
        let one = |v: f64| DMatrix::from_element(1, 1, c(v, 0.0));
        let s = schur_psd(&one(2.0), &one(1.0), &one(1.0)).unwrap();
        assert!(s.block_is_psd(1e-12));
        assert_eq!(s.complement_is_psd(1e-12), Some(true));
        let s = schur_psd(&one(1.0), &one(2.0), &one(1.0)).unwrap();
        assert!(!s.block_is_psd(1e-12));
        assert_eq!(s.complement_is_psd(1e-12), Some(false));
        let id = DMatrix::<Complex64>::identity(2, 2);
        let z = DMatrix::<Complex64>::zeros(2, 2);
        let s = schur_psd(&id, &z, &id).unwrap();
        assert!(s.block_is_psd(0.0));
        assert_eq!(s.complement_is_psd(0.0), Some(true));
        assert!(schur_psd(&id, &one(1.0), &id).is_err());
    }

    #[test]
    fn product_bound_examples() {
        let b = product_upper_bound(2.0, 2.0).unwrap();
        assert_eq!(b.bound(2.0, 2.0), 4.0);
        assert_eq!(b.bound(1.0, 4.0), 8.5);
        assert!(product_upper_bound(0.0, 1.0).is_err());
    }

    #[test]
    fn taylor_rank1_examples() {
        let w0 = DVector::from_vec(vec![c(1.0, 2.0), c(-0.5, 0.3)]);
        let t = taylor_rank1_value(&w0, &w0);
        assert!((t - &w0 * w0.adjoint()).norm() < 1e-15);
        let z = DVector::from_element(2, c(0.0, 0.0));
        let w = DVector::from_vec(vec![c(0.3, 0.1), c(0.2, -0.7)]);
        assert_eq!(taylor_rank1_value(&w, &z).norm(), 0.0);
        // expression form agrees with the numeric form
        let vars: Vec<CLinExpr> = (0..2)
            .map(|i| {
                CLinExpr::new(LinExpr::var(Var::from_index(2 * i)), LinExpr::var(Var::from_index(2 * i + 1)))
            })
            .collect();
        let e = taylor_rank1(&vars, &w0);
        let vals = [0.3, 0.1, 0.2, -0.7];
        let num = taylor_rank1_value(&w, &w0);
        for i in 0..2 {
            for j in 0..2 {
                assert!((e[i][j].eval(&vals) - num[(i, j)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn interference_lmi_single_user_and_nominal() {
        let b = Var::from_index(0);
        let p = Var::from_index(1);
        let h = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        let blk = interference_lmi(&[], &h, 0.5, LinExpr::var(b), LinExpr::var(p), 0.1).unwrap();
        let m = blk.eval(&[0.3, 0.1]);
        assert!((m[(0, 0)].re - 0.1).abs() < 1e-15);
        assert_eq!(m[(1, 1)], c(0.1, 0.0));
        // xi = 0, varpi = 0: PSD iff beta - noise >= |h^H w|^2
        let w = DVector::from_vec(vec![c(0.5, 0.0), c(0.0, 0.5)]);
        let blk = interference_lmi(&[const_cvec(&w)], &h, 0.0, LinExpr::var(b), LinExpr::zero(), 0.1).unwrap();
        let need = h.dotc(&w).norm_sqr() + 0.1;
        assert!(min_eigenvalue(&blk.eval(&[need + 1e-9, 0.0])) >= -1e-12);
        assert!(min_eigenvalue(&blk.eval(&[need - 1e-6, 0.0])) < 0.0);
    }

    #[test]
    fn rank1_examples() {
        let w = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        let r = rank1_decomp(&w);
        assert!((r.chi - 2.0).abs() < 1e-15);
        let u = r.u.unwrap();
        assert!((u[1] - c(0.0, 1.0 / 2f64.sqrt())).norm() < 1e-15);
        assert_eq!(rank1_decomp(&DVector::from_element(2, c(0.0, 0.0))).u, None);
    }

    #[test]
    fn cos_minorant_scalar() {
        let v = cos_minorant(0.0, PI);
        assert!((v - (1.0 - PI * PI / 2.0)).abs() < 1e-15);
        assert!(v <= PI.cos());
    }

    #[test]
    fn log_minorant_examples() {
        let q = log_minorant(1.0).unwrap();
        assert!((q.eval(1.0) - 1.0).abs() < 1e-15);
        // 1 + 2/(2 ln2) - 4/(2 ln2) = 1 - 1/ln2
        assert!((q.eval(3.0) - (1.0 - 1.0 / LN_2)).abs() < 1e-12);
        assert!(q.eval(3.0) <= 2.0);
        assert!(log_minorant(-0.1).is_err());
    }
}
