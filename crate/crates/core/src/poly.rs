//! Univariate polynomials over F_q, low degree first. Used for characteristic
//! polynomials and the Jordan–Chevalley decomposition.

use crate::linalg::Mat;
use crate::scalars::{Fe, FieldSpec};

pub type Poly = Vec<Fe>;

pub fn trim(a: &mut Poly) {
    while a.last().is_some_and(|c| c.is_zero()) {
        a.pop();
    }
}

pub fn deg(a: &Poly) -> Option<usize> {
    a.iter().rposition(|c| !c.is_zero())
}

pub fn mul(f: &FieldSpec, a: &Poly, b: &Poly) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut r = vec![Fe::ZERO; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            r[i + j] = f.add(r[i + j], f.mul(x, y));
        }
    }
    trim(&mut r);
    r
}

/// (quotient, remainder); b must be nonzero.
pub fn divrem(f: &FieldSpec, a: &Poly, b: &Poly) -> (Poly, Poly) {
    let db = deg(b).expect("division by zero polynomial");
    let inv = f.inv(b[db]).unwrap();
    let mut r = a.clone();
    trim(&mut r);
    if r.len() <= db {
        return (Vec::new(), r);
    }
    let mut q = vec![Fe::ZERO; r.len() - db];
    while let Some(dr) = deg(&r) {
        if dr < db {
            break;
        }
        let c = f.mul(r[dr], inv);
        q[dr - db] = c;
        for k in 0..=db {
            r[dr - db + k] = f.sub(r[dr - db + k], f.mul(c, b[k]));
        }
        trim(&mut r);
    }
    trim(&mut q);
    (q, r)
}

pub fn monic(f: &FieldSpec, a: &Poly) -> Poly {
    match deg(a) {
        None => Vec::new(),
        Some(d) => {
            let inv = f.inv(a[d]).unwrap();
            a[..=d].iter().map(|&c| f.mul(c, inv)).collect()
        }
    }
}

pub fn gcd(f: &FieldSpec, a: &Poly, b: &Poly) -> Poly {
    let mut x = a.clone();
    let mut y = b.clone();
    trim(&mut x);
    trim(&mut y);
    while !y.is_empty() {
        let (_, r) = divrem(f, &x, &y);
        x = y;
        y = r;
    }
    monic(f, &x)
}

pub fn derivative(f: &FieldSpec, a: &Poly) -> Poly {
    let mut r: Poly = a.iter().enumerate().skip(1).map(|(i, &c)| f.mul(c, f.from_int(i as i64))).collect();
    trim(&mut r);
    r
}

/// p-th root of a polynomial in X^p (all exponents divisible by p).
fn pth_root(f: &FieldSpec, a: &Poly) -> Poly {
    let p = f.p() as usize;
    // inverse Frobenius on F_{p^M} is x ↦ x^{p^{M-1}}
    let e = f.p().pow(f.degree() - 1);
    let mut r: Poly = a.iter().step_by(p).map(|&c| f.pow(c, e)).collect();
    trim(&mut r);
    r
}

/// Product of the distinct monic irreducible factors of a.
pub fn radical(f: &FieldSpec, a: &Poly) -> Poly {
    let a = monic(f, a);
    if deg(&a).unwrap_or(0) == 0 {
        return vec![Fe::ONE];
    }
    let da = derivative(f, &a);
    if da.is_empty() {
        return radical(f, &pth_root(f, &a));
    }
    let g = gcd(f, &a, &da);
    let (w, _) = divrem(f, &a, &g);
    let rg = radical(f, &g);
    // lcm(w, rad g)
    let common = gcd(f, &w, &rg);
    let (t, _) = divrem(f, &mul(f, &w, &rg), &common);
    monic(f, &t)
}

/// a(A) by Horner's rule.
pub fn eval_mat(f: &FieldSpec, a: &Poly, m: &Mat) -> Mat {
    let n = m.rows;
    let mut r = Mat::zeros(f, n, n);
    for &c in a.iter().rev() {
        r = r.mul(m);
        for i in 0..n {
            let v = f.add(r.get(i, i), c);
            r.set(i, i, v);
        }
    }
    r
}
