//! Jordan-algebra operations and Nesterov-Todd scalings for the symmetric
//! cones a [`ConicProblem`](crate::ConicProblem) may use.
//!
//! All vectors here are full slack-length vectors; each cone reads and writes
//! only its own slice.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::problem::{smat, svec, Cone};

#[derive(Debug, Clone)]
pub(crate) struct ConeSet {
    cones: Vec<Cone>,
    offsets: Vec<usize>,
    dim: usize,
    degree: usize,
}

/// NT scaling `W` of one cone, with `W z = W^{-T} s = lambda`.
#[derive(Debug, Clone)]
pub(crate) enum Scaling {
    NonNeg { d: Vec<f64>, lambda: Vec<f64> },
    Soc { v: DVector<f64>, beta: f64, lambda: DVector<f64> },
    Psd { r: DMatrix<f64>, rinv: DMatrix<f64>, lambda: Vec<f64> },
}

impl ConeSet {
    pub fn new(cones: &[Cone]) -> Self {
        let mut offsets = Vec::with_capacity(cones.len());
        let mut dim = 0;
        for c in cones {
            offsets.push(dim);
            dim += c.dim();
        }
        let degree = cones.iter().map(Cone::degree).sum();
        ConeSet { cones: cones.to_vec(), offsets, dim, degree }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    fn blocks(&self) -> impl Iterator<Item = (Cone, std::ops::Range<usize>)> + '_ {
        self.cones.iter().zip(&self.offsets).map(|(c, &o)| (*c, o..o + c.dim()))
    }

    /// Jordan identity `e`.
    pub fn unit(&self) -> DVector<f64> {
        let mut e = DVector::zeros(self.dim);
        for (cone, r) in self.blocks() {
            match cone {
                Cone::NonNeg(_) => e.rows_mut(r.start, r.len()).fill(1.0),
                Cone::Soc(_) => e[r.start] = 1.0,
                Cone::Psd(k) => {
                    let mut idx = r.start;
                    for j in 0..k {
                        e[idx] = 1.0;
                        idx += k - j;
                    }
                }
            }
        }
        e
    }

    /// Smallest `t` such that `u + t e` lies on the cone boundary, negated:
    /// positive values mean `u` is interior with that margin.
    pub fn margin(&self, u: &DVector<f64>) -> f64 {
        let mut m = f64::INFINITY;
        for (cone, r) in self.blocks() {
            let s = &u.as_slice()[r];
            let v = match cone {
                Cone::NonNeg(_) => s.iter().copied().fold(f64::INFINITY, f64::min),
                Cone::Soc(_) => s[0] - norm(&s[1..]),
                Cone::Psd(k) => min_eig(&smat(s, k)),
            };
            m = m.min(v);
        }
        m
    }

    /// `u o v`
    pub fn jordan_prod(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for (cone, r) in self.blocks() {
            let a = &u.as_slice()[r.clone()];
            let b = &v.as_slice()[r.clone()];
            let o = &mut out.as_mut_slice()[r];
            match cone {
                Cone::NonNeg(_) => {
                    for i in 0..a.len() {
                        o[i] = a[i] * b[i];
                    }
                }
                Cone::Soc(_) => {
                    o[0] = dot(a, b);
                    for i in 1..a.len() {
                        o[i] = a[0] * b[i] + b[0] * a[i];
                    }
                }
                Cone::Psd(k) => {
                    let ma = smat(a, k);
                    let mb = smat(b, k);
                    let p = (&ma * &mb + &mb * &ma) * 0.5;
                    o.copy_from_slice(svec(&p).as_slice());
                }
            }
        }
        out
    }

    /// Compute the NT scaling at a strictly interior pair. `None` when either
    /// point has left the interior numerically.
    pub fn nt_scaling(&self, s: &DVector<f64>, z: &DVector<f64>) -> Option<Vec<Scaling>> {
        let mut out = Vec::with_capacity(self.cones.len());
        for (cone, r) in self.blocks() {
            let sb = &s.as_slice()[r.clone()];
            let zb = &z.as_slice()[r];
            out.push(match cone {
                Cone::NonNeg(_) => {
                    if sb.iter().chain(zb).any(|&v| !(v > 0.0)) {
                        return None;
                    }
                    let d = sb.iter().zip(zb).map(|(a, b)| (a / b).sqrt()).collect();
                    let lambda = sb.iter().zip(zb).map(|(a, b)| (a * b).sqrt()).collect();
                    Scaling::NonNeg { d, lambda }
                }
                Cone::Soc(_) => soc_scaling(sb, zb)?,
                Cone::Psd(k) => psd_scaling(sb, zb, k)?,
            });
        }
        Some(out)
    }

    pub fn lambda(&self, sc: &[Scaling]) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for ((cone, r), w) in self.blocks().zip(sc) {
            let o = &mut out.as_mut_slice()[r];
            match (cone, w) {
                (_, Scaling::NonNeg { lambda, .. }) => o.copy_from_slice(lambda),
                (_, Scaling::Soc { lambda, .. }) => o.copy_from_slice(lambda.as_slice()),
                (Cone::Psd(k), Scaling::Psd { lambda, .. }) => {
                    let mut idx = 0;
                    for j in 0..k {
                        o[idx] = lambda[j];
                        idx += k - j;
                    }
                }
                _ => unreachable!("scaling does not match cone"),
            }
        }
        out
    }

    /// Apply one of `W`, `W^T`, `W^{-1}`, `W^{-T}` to a slack-length vector.
    pub fn apply(&self, sc: &[Scaling], op: WOp, u: &[f64], out: &mut [f64]) {
        for ((cone, r), w) in self.blocks().zip(sc) {
            apply_block(cone, w, op, &u[r.clone()], &mut out[r]);
        }
    }

    pub fn apply_vec(&self, sc: &[Scaling], op: WOp, u: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        self.apply(sc, op, u.as_slice(), out.as_mut_slice());
        out
    }

    /// Apply `W^{-T}` to every column of `g`, skipping the blocks where a
    /// column is identically zero.
    pub fn scale_columns_inv_t(&self, sc: &[Scaling], g: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(g.nrows(), g.ncols());
        for ((cone, r), w) in self.blocks().zip(sc) {
            for j in 0..g.ncols() {
                let col = g.column(j);
                let src = &col.as_slice()[r.clone()];
                if src.iter().all(|&v| v == 0.0) {
                    continue;
                }
                let mut dst = vec![0.0; r.len()];
                apply_block(cone, w, WOp::InvT, src, &mut dst);
                out.view_mut((r.start, j), (r.len(), 1)).copy_from_slice(&dst);
            }
        }
        out
    }

    /// `lambda \ v`: the `u` with `lambda o u = v`.
    pub fn jordan_div(&self, sc: &[Scaling], v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for ((cone, r), w) in self.blocks().zip(sc) {
            let b = &v.as_slice()[r.clone()];
            let o = &mut out.as_mut_slice()[r];
            match (cone, w) {
                (_, Scaling::NonNeg { lambda, .. }) => {
                    for i in 0..b.len() {
                        o[i] = b[i] / lambda[i];
                    }
                }
                (_, Scaling::Soc { lambda, .. }) => {
                    let l = lambda.as_slice();
                    let det = jdet(l);
                    let x0 = (l[0] * b[0] - dot(&l[1..], &b[1..])) / det;
                    o[0] = x0;
                    for i in 1..b.len() {
                        o[i] = (b[i] - x0 * l[i]) / l[0];
                    }
                }
                (Cone::Psd(k), Scaling::Psd { lambda, .. }) => {
                    let mut idx = 0;
                    for j in 0..k {
                        for i in j..k {
                            o[idx] = 2.0 * b[idx] / (lambda[i] + lambda[j]);
                            idx += 1;
                        }
                    }
                }
                _ => unreachable!("scaling does not match cone"),
            }
        }
        out
    }

    /// Largest `alpha` with `lambda + alpha d` in the cone (possibly infinite).
    pub fn max_step(&self, sc: &[Scaling], d: &DVector<f64>) -> f64 {
        let mut alpha = f64::INFINITY;
        for ((cone, r), w) in self.blocks().zip(sc) {
            let db = &d.as_slice()[r];
            let a = match (cone, w) {
                (_, Scaling::NonNeg { lambda, .. }) => lambda
                    .iter()
                    .zip(db)
                    .filter(|(_, &di)| di < 0.0)
                    .map(|(l, di)| -l / di)
                    .fold(f64::INFINITY, f64::min),
                (_, Scaling::Soc { lambda, .. }) => soc_step(lambda.as_slice(), db),
                (Cone::Psd(k), Scaling::Psd { lambda, .. }) => {
                    let mut m = smat(db, k);
                    for i in 0..k {
                        for j in 0..k {
                            m[(i, j)] /= (lambda[i] * lambda[j]).sqrt();
                        }
                    }
                    let e = min_eig(&m);
                    if e < 0.0 {
                        -1.0 / e
                    } else {
                        f64::INFINITY
                    }
                }
                _ => unreachable!("scaling does not match cone"),
            };
            alpha = alpha.min(a);
        }
        alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum WOp {
    W,
    WT,
    Inv,
    InvT,
}

fn apply_block(cone: Cone, w: &Scaling, op: WOp, u: &[f64], out: &mut [f64]) {
    match w {
        Scaling::NonNeg { d, .. } => {
            for i in 0..u.len() {
                out[i] = match op {
                    WOp::W | WOp::WT => d[i] * u[i],
                    WOp::Inv | WOp::InvT => u[i] / d[i],
                };
            }
        }
        Scaling::Soc { v, beta, .. } => {
            // W = beta (2 v v' - J), W^{-1} = (2 J v v' J - J) / beta; both symmetric.
            let v = v.as_slice();
            match op {
                WOp::W | WOp::WT => {
                    let vu = dot(v, u);
                    for i in 0..u.len() {
                        let ju = if i == 0 { u[0] } else { -u[i] };
                        out[i] = beta * (2.0 * v[i] * vu - ju);
                    }
                }
                WOp::Inv | WOp::InvT => {
                    // v' J u
                    let vju = v[0] * u[0] - dot(&v[1..], &u[1..]);
                    for i in 0..u.len() {
                        let jv = if i == 0 { v[0] } else { -v[i] };
                        let ju = if i == 0 { u[0] } else { -u[i] };
                        out[i] = (2.0 * jv * vju - ju) / beta;
                    }
                }
            }
        }
        Scaling::Psd { r, rinv, .. } => {
            let k = match cone {
                Cone::Psd(k) => k,
                _ => unreachable!("scaling does not match cone"),
            };
            let m = smat(u, k);
            let res = match op {
                // W(U) = R' U R
                WOp::W => r.transpose() * m * r,
                // W'(U) = R U R'
                WOp::WT => r * m * r.transpose(),
                // W^{-1}(U) = R^{-T} U R^{-1}
                WOp::Inv => rinv.transpose() * m * rinv,
                // W^{-T}(U) = R^{-1} U R^{-T}
                WOp::InvT => rinv * m * rinv.transpose(),
            };
            out.copy_from_slice(svec(&res).as_slice());
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `u_0^2 - ||u_1||^2`, computed as a product to limit cancellation.
fn jdet(u: &[f64]) -> f64 {
    let n1 = norm(&u[1..]);
    (u[0] - n1) * (u[0] + n1)
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

fn soc_scaling(s: &[f64], z: &[f64]) -> Option<Scaling> {
    let ds = jdet(s);
    let dz = jdet(z);
    if !(ds > 0.0 && dz > 0.0 && s[0] > 0.0 && z[0] > 0.0) {
        return None;
    }
    let aa = ds.sqrt();
    let bb = dz.sqrt();
    let n = s.len();
    let sn: Vec<f64> = s.iter().map(|v| v / aa).collect();
    let zn: Vec<f64> = z.iter().map(|v| v / bb).collect();
    let gamma = ((dot(&sn, &zn) + 1.0) / 2.0).sqrt();
    // wbar = (sbar + J zbar) / (2 gamma)
    let mut wbar = vec![0.0; n];
    wbar[0] = (sn[0] + zn[0]) / (2.0 * gamma);
    for i in 1..n {
        wbar[i] = (sn[i] - zn[i]) / (2.0 * gamma);
    }
    let denom = (2.0 * (wbar[0] + 1.0)).sqrt();
    let mut v = DVector::from_vec(wbar);
    v[0] += 1.0;
    v /= denom;
    let beta = (aa / bb).sqrt();
    let mut lambda = vec![0.0; n];
    let sc_tmp = Scaling::Soc { v: v.clone(), beta, lambda: DVector::zeros(n) };
    apply_block(Cone::Soc(n), &sc_tmp, WOp::W, z, &mut lambda);
    Some(Scaling::Soc { v, beta, lambda: DVector::from_vec(lambda) })
}

fn psd_scaling(s: &[f64], z: &[f64], k: usize) -> Option<Scaling> {
    let sm = smat(s, k);
    let zm = smat(z, k);
    let ls = sm.cholesky()?.l();
    let lz = zm.cholesky()?.l();
    let svd = (lz.transpose() * &ls).svd(true, true);
    let u = svd.u?;
    let vt = svd.v_t?;
    let sig = svd.singular_values;
    if sig.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return None;
    }
    let inv_sqrt = DMatrix::from_diagonal(&sig.map(|x| 1.0 / x.sqrt()));
    let r = &ls * vt.transpose() * &inv_sqrt;
    let rinv = &inv_sqrt * u.transpose() * lz.transpose();
    Some(Scaling::Psd { r, rinv, lambda: sig.iter().copied().collect() })
}

/// Step to the boundary of the second-order cone from interior `l` along `d`.
fn soc_step(l: &[f64], d: &[f64]) -> f64 {
    // f(a) = c + 2 b a + q a^2 with f(0) > 0; first positive root.
    let c = jdet(l);
    let b = l[0] * d[0] - dot(&l[1..], &d[1..]);
    let q = jdet(d);
    if q == 0.0 {
        return if b < 0.0 { -c / (2.0 * b) } else { f64::INFINITY };
    }
    let disc = b * b - q * c;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    let sq = disc.sqrt();
    let t = -(b + b.signum() * sq);
    let roots = if t == 0.0 { [f64::INFINITY, f64::INFINITY] } else { [t / q, c / t] };
    roots.iter().copied().filter(|&r| r > 0.0).fold(f64::INFINITY, f64::min)
}
