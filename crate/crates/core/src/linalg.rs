//! Dense linear algebra over a `FieldSpec`.

use crate::error::{Error, Result};
use crate::scalars::{Fe, FieldSpec};

#[derive(Clone, PartialEq, Eq)]
pub struct Mat {
    pub field: FieldSpec,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Fe>,
}

impl std::fmt::Debug for Mat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Mat {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.field.fmt_fe(self.get(r, c))).collect();
            writeln!(f, "  [{}]", row.join(" "))?;
        }
        Ok(())
    }
}

impl Mat {
    pub fn zeros(field: &FieldSpec, rows: usize, cols: usize) -> Self {
        Mat { field: field.clone(), rows, cols, data: vec![Fe::ZERO; rows * cols] }
    }

    pub fn identity(field: &FieldSpec, n: usize) -> Self {
        let mut m = Mat::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, Fe::ONE);
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_cols(field: &FieldSpec, rows: usize, cols: &[Vec<Fe>]) -> Self {
        let mut m = Mat::zeros(field, rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for (i, &v) in c.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Fe {
        self.data[r * self.cols + c]
    }
    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Fe) {
        self.data[r * self.cols + c] = v;
    }

    pub fn col(&self, c: usize) -> Vec<Fe> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn mul(&self, o: &Mat) -> Mat {
        assert_eq!(self.cols, o.rows, "dimension mismatch in matrix product");
        let f = &self.field;
        let mut out = Mat::zeros(f, self.rows, o.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * o.cols..(i + 1) * o.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                let brow = &o.data[k * o.cols..(k + 1) * o.cols];
                for (x, &b) in orow.iter_mut().zip(brow) {
                    if !b.is_zero() {
                        *x = f.add(*x, f.mul(a, b));
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Fe]) -> Vec<Fe> {
        let f = &self.field;
        (0..self.rows)
            .map(|i| {
                let mut acc = Fe::ZERO;
                for (k, &x) in v.iter().enumerate() {
                    let a = self.data[i * self.cols + k];
                    if !a.is_zero() && !x.is_zero() {
                        acc = f.add(acc, f.mul(a, x));
                    }
                }
                acc
            })
            .collect()
    }

    pub fn add(&self, o: &Mat) -> Mat {
        let f = &self.field;
        let data = self.data.iter().zip(&o.data).map(|(&a, &b)| f.add(a, b)).collect();
        Mat { field: f.clone(), rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, o: &Mat) -> Mat {
        let f = &self.field;
        let data = self.data.iter().zip(&o.data).map(|(&a, &b)| f.sub(a, b)).collect();
        Mat { field: f.clone(), rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, c: Fe) -> Mat {
        let f = &self.field;
        let data = self.data.iter().map(|&a| f.mul(a, c)).collect();
        Mat { field: f.clone(), rows: self.rows, cols: self.cols, data }
    }

    pub fn commutator(&self, o: &Mat) -> Mat {
        self.mul(o).sub(&o.mul(self))
    }

    pub fn pow(&self, mut e: u64) -> Mat {
        let mut r = Mat::identity(&self.field, self.rows);
        let mut b = self.clone();
        let mut first = true;
        while e > 0 {
            if e & 1 == 1 {
                r = if first { b.clone() } else { r.mul(&b) };
                first = false;
            }
            e >>= 1;
            if e > 0 {
                b = b.mul(&b);
            }
        }
        r
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(&self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Row-reduced echelon form in place; returns pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let f = self.field.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(pr) = (r..self.rows).find(|&i| !self.get(i, c).is_zero()) else {
                continue;
            };
            if pr != r {
                for j in 0..self.cols {
                    self.data.swap(pr * self.cols + j, r * self.cols + j);
                }
            }
            let inv = f.inv(self.get(r, c)).unwrap();
            for j in c..self.cols {
                let v = self.get(r, j);
                self.set(r, j, f.mul(v, inv));
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let factor = self.get(i, c);
                if factor.is_zero() {
                    continue;
                }
                for j in c..self.cols {
                    let v = f.sub(self.get(i, j), f.mul(factor, self.get(r, j)));
                    self.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    pub fn inverse(&self) -> Result<Mat> {
        if !self.is_square() {
            return Err(Error::InvalidParameter("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut aug = Mat::zeros(&self.field, n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j));
            }
            aug.set(i, n + i, Fe::ONE);
        }
        let piv = aug.rref();
        if piv.len() < n || piv[n - 1] != n - 1 {
            return Err(Error::Precondition("matrix is singular".into()));
        }
        let mut inv = Mat::zeros(&self.field, n, n);
        for i in 0..n {
            for j in 0..n {
                inv.set(i, j, aug.get(i, n + j));
            }
        }
        Ok(inv)
    }

    /// Basis of the right kernel.
    pub fn nullspace(&self) -> Vec<Vec<Fe>> {
        let mut m = self.clone();
        let piv = m.rref();
        let f = &self.field;
        let free: Vec<usize> = (0..self.cols).filter(|c| !piv.contains(c)).collect();
        free.iter()
            .map(|&fc| {
                let mut v = vec![Fe::ZERO; self.cols];
                v[fc] = Fe::ONE;
                for (r, &pc) in piv.iter().enumerate() {
                    v[pc] = f.neg(m.get(r, fc));
                }
                v
            })
            .collect()
    }

    /// Some solution x of self·x = b, if one exists.
    pub fn solve(&self, b: &[Fe]) -> Option<Vec<Fe>> {
        let mut aug = Mat::zeros(&self.field, self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j));
            }
            aug.set(i, self.cols, b[i]);
        }
        let piv = aug.rref();
        if piv.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![Fe::ZERO; self.cols];
        for (r, &c) in piv.iter().enumerate() {
            x[c] = aug.get(r, self.cols);
        }
        Some(x)
    }

    /// Characteristic polynomial det(tI - A), low degree first, via reduction
    /// to Hessenberg form.
    pub fn charpoly(&self) -> Vec<Fe> {
        assert!(self.is_square());
        let f = &self.field;
        let n = self.rows;
        let mut h = self.clone();
        // Hessenberg reduction by similarity transforms.
        for c in 0..n.saturating_sub(2) {
            let Some(pr) = (c + 1..n).find(|&i| !h.get(i, c).is_zero()) else {
                continue;
            };
            if pr != c + 1 {
                let r = c + 1;
                for j in 0..n {
                    h.data.swap(pr * n + j, r * n + j);
                }
                for i in 0..n {
                    h.data.swap(i * n + pr, i * n + r);
                }
            }
            let inv = f.inv(h.get(c + 1, c)).unwrap();
            for i in c + 2..n {
                let t = f.mul(h.get(i, c), inv);
                if t.is_zero() {
                    continue;
                }
                // row_i -= t row_{c+1}
                for j in 0..n {
                    let v = f.sub(h.get(i, j), f.mul(t, h.get(c + 1, j)));
                    h.set(i, j, v);
                }
                // col_{c+1} += t col_i
                for k in 0..n {
                    let v = f.add(h.get(k, c + 1), f.mul(t, h.get(k, i)));
                    h.set(k, c + 1, v);
                }
            }
        }
        // Recurrence for characteristic polynomials of leading principal blocks.
        let mut polys: Vec<Vec<Fe>> = vec![vec![Fe::ONE]];
        for k in 0..n {
            // p_{k+1} = (t - h_kk) p_k - Σ_{i<k} h_ik (Π_{j=i+1}^{k} h_{j,j-1}) p_i
            let mut next = vec![Fe::ZERO; k + 2];
            for (d, &c) in polys[k].iter().enumerate() {
                next[d + 1] = f.add(next[d + 1], c);
                next[d] = f.sub(next[d], f.mul(h.get(k, k), c));
            }
            let mut prod = Fe::ONE;
            for i in (0..k).rev() {
                prod = f.mul(prod, h.get(i + 1, i));
                if prod.is_zero() {
                    break;
                }
                let coef = f.mul(h.get(i, k), prod);
                if coef.is_zero() {
                    continue;
                }
                for (d, &c) in polys[i].iter().enumerate() {
                    next[d] = f.sub(next[d], f.mul(coef, c));
                }
            }
            polys.push(next);
        }
        polys.pop().unwrap()
    }
}

/// Incrementally built echelon basis with coordinates relative to the
/// accepted (linearly independent) input vectors.
#[derive(Clone)]
pub struct Span {
    pub field: FieldSpec,
    pub dim: usize,
    rows: Vec<Vec<Fe>>,
    pivots: Vec<usize>,
    // rows[k] = Σ_j combos[k][j] basis[j]
    combos: Vec<Vec<Fe>>,
    basis: Vec<Vec<Fe>>,
}

impl Span {
    pub fn new(field: &FieldSpec, dim: usize) -> Self {
        Span {
            field: field.clone(),
            dim,
            rows: Vec::new(),
            pivots: Vec::new(),
            combos: Vec::new(),
            basis: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn basis(&self) -> &[Vec<Fe>] {
        &self.basis
    }

    /// Reduces v; returns the residue and the combination of basis vectors removed.
    fn reduce(&self, v: &[Fe]) -> (Vec<Fe>, Vec<Fe>) {
        let f = &self.field;
        let mut r = v.to_vec();
        let mut coef = vec![Fe::ZERO; self.basis.len()];
        for (k, row) in self.rows.iter().enumerate() {
            let c = r[self.pivots[k]];
            if c.is_zero() {
                continue;
            }
            for (x, &y) in r.iter_mut().zip(row) {
                if !y.is_zero() {
                    *x = f.sub(*x, f.mul(c, y));
                }
            }
            for (x, &y) in coef.iter_mut().zip(&self.combos[k]) {
                if !y.is_zero() {
                    *x = f.add(*x, f.mul(c, y));
                }
            }
        }
        (r, coef)
    }

    pub fn contains(&self, v: &[Fe]) -> bool {
        self.reduce(v).0.iter().all(|x| x.is_zero())
    }

    /// Coordinates of v in terms of `basis()`, if v lies in the span.
    pub fn decompose(&self, v: &[Fe]) -> Option<Vec<Fe>> {
        let (r, coef) = self.reduce(v);
        r.iter().all(|x| x.is_zero()).then_some(coef)
    }

    /// Adds v if independent; returns whether the rank grew.
    pub fn insert(&mut self, v: &[Fe]) -> bool {
        assert_eq!(v.len(), self.dim);
        let f = self.field.clone();
        let (mut r, coef) = self.reduce(v);
        let Some(piv) = r.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = f.inv(r[piv]).unwrap();
        for x in r.iter_mut() {
            *x = f.mul(*x, inv);
        }
        // r = (v - Σ coef_j b_j) * inv
        let mut combo: Vec<Fe> = coef.iter().map(|&c| f.neg(f.mul(c, inv))).collect();
        combo.push(inv);
        for c in self.combos.iter_mut() {
            c.push(Fe::ZERO);
        }
        self.rows.push(r);
        self.pivots.push(piv);
        self.combos.push(combo);
        self.basis.push(v.to_vec());
        true
    }
}

pub fn vec_add(f: &FieldSpec, a: &[Fe], b: &[Fe]) -> Vec<Fe> {
    a.iter().zip(b).map(|(&x, &y)| f.add(x, y)).collect()
}

pub fn vec_sub(f: &FieldSpec, a: &[Fe], b: &[Fe]) -> Vec<Fe> {
    a.iter().zip(b).map(|(&x, &y)| f.sub(x, y)).collect()
}

pub fn vec_scale(f: &FieldSpec, c: Fe, a: &[Fe]) -> Vec<Fe> {
    a.iter().map(|&x| f.mul(c, x)).collect()
}

pub fn rank_of(f: &FieldSpec, dim: usize, vecs: &[Vec<Fe>]) -> usize {
    let mut s = Span::new(f, dim);
    for v in vecs {
        s.insert(v);
    }
    s.rank()
}
