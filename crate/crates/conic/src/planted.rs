//! Random conic programs with a known optimum, built from a planted
//! strictly complementary primal-dual pair (KKT construction).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{svec, Cone, ConicProblem};

/// Instance with a known primal-dual optimal pair.
pub struct Planted {
    pub problem: ConicProblem,
    pub optimum: f64,
}

fn random_orthogonal(k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
    m.qr().q()
}

/// Minimization instance over `cones` with `n` variables and `p` equality
/// rows; `optimum` is the planted objective value.
pub fn planted_instance(seed: u64, cones: &[Cone], n: usize, p: usize) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Vec::new();
    let mut z = Vec::new();
    for cone in cones {
        match *cone {
            Cone::NonNeg(d) => {
                for _ in 0..d {
                    let v = rng.random_range(0.1..2.0);
                    if rng.random_bool(0.5) {
                        s.push(v);
                        z.push(0.0);
                    } else {
                        s.push(0.0);
                        z.push(v);
                    }
                }
            }
            Cone::Soc(d) => {
                let u = DVector::from_fn(d - 1, |_, _| rng.random_range(-1.0..1.0)).normalize();
                let a = rng.random_range(0.1..2.0);
                let bb = rng.random_range(0.1..2.0);
                s.push(a);
                s.extend(u.iter().map(|v| a * v));
                z.push(bb);
                z.extend(u.iter().map(|v| -bb * v));
            }
            Cone::Psd(k) => {
                let q = random_orthogonal(k, &mut rng);
                let r = rng.random_range(1..k);
                let ds = DVector::from_fn(k, |i, _| if i < r { rng.random_range(0.1..2.0) } else { 0.0 });
                let dz = DVector::from_fn(k, |i, _| if i >= r { rng.random_range(0.1..2.0) } else { 0.0 });
                let sm = &q * DMatrix::from_diagonal(&ds) * q.transpose();
                let zm = &q * DMatrix::from_diagonal(&dz) * q.transpose();
                s.extend(svec(&sm).iter());
                z.extend(svec(&zm).iter());
            }
        }
    }
    let m = s.len();
    let s = DVector::from_vec(s);
    let z = DVector::from_vec(z);
    let g = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
    let a = DMatrix::from_fn(p, n, |_, _| rng.random_range(-1.0..1.0));
    let x = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let y = DVector::from_fn(p, |_, _| rng.random_range(-1.0..1.0));
    let h = &g * &x + &s;
    let b = &a * &x;
    let c = -(a.transpose() * &y + g.transpose() * &z);
    let problem = ConicProblem {
        objective: -&c,
        objective_offset: 0.0,
        a,
        b,
        g,
        h,
        cones: cones.to_vec(),
        var_names: (0..n).map(|i| format!("v{i}")).collect(),
    };
    Planted { optimum: -c.dot(&x), problem }
}

/// Cone layouts cycled through by index: (cones, variables, equalities).
pub fn instance_shapes(i: u64) -> (Vec<Cone>, usize, usize) {
    match i % 4 {
        0 => (vec![Cone::Psd(6), Cone::NonNeg(3)], 8, 2),
        1 => (vec![Cone::Soc(4), Cone::Soc(3), Cone::NonNeg(2)], 5, 1),
        2 => (vec![Cone::Psd(4), Cone::Psd(8), Cone::Soc(5)], 12, 3),
        _ => (vec![Cone::NonNeg(4), Cone::Psd(10), Cone::Soc(6)], 15, 0),
    }
}
