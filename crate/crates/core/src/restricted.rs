//! Restricted structure computed through faithful operator realizations.

use crate::cartan_algebras::DerivationElement;
use crate::divided_power::{AlgebraShape, DPElement};
use crate::error::{Error, Result};
use crate::linalg::{vec_add, vec_scale, Mat, Span};
use crate::poly;
use crate::scalars::{Fe, FieldSpec};

/// A Lie algebra with a faithful restricted representation. Elements are coordinate
/// vectors in a fixed basis.
pub trait Realization: Sync {
    fn field(&self) -> &FieldSpec;
    /// Dimension of the algebra (length of coordinate vectors).
    fn dim(&self) -> usize;
    /// Dimension of the module the algebra acts on.
    fn module_dim(&self) -> usize;
    fn basis_tag(&self) -> String;
    fn operator(&self, x: &[Fe]) -> Mat;
    /// Coordinates of an operator lying in the image of the algebra.
    fn decompose(&self, a: &Mat) -> Result<Vec<Fe>>;
    fn bracket(&self, x: &[Fe], y: &[Fe]) -> Vec<Fe> {
        let c = self.operator(x).commutator(&self.operator(y));
        self.decompose(&c).expect("bracket closes in a Lie algebra")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorMatrix {
    pub mat: Mat,
    pub basis_tag: String,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.mat.rows
    }
}

/// W(m;1) = Der O(m;1) acting on O(m;1).
#[derive(Clone, Debug)]
pub struct WittRealization {
    pub shape: AlgebraShape,
}

impl WittRealization {
    pub fn new(shape: &AlgebraShape) -> Result<Self> {
        if !shape.is_restricted() {
            return Err(Error::InvalidParameter(
                "W(m;n) is restricted only for n = (1,…,1); use the p-envelope for other heights".into(),
            ));
        }
        Ok(WittRealization { shape: shape.clone() })
    }

    pub fn element(&self, x: &[Fe]) -> DerivationElement {
        DerivationElement::from_vec(&self.shape, x)
    }
}

impl Realization for WittRealization {
    fn field(&self) -> &FieldSpec {
        self.shape.field()
    }
    fn dim(&self) -> usize {
        self.shape.m() * self.shape.dim()
    }
    fn module_dim(&self) -> usize {
        self.shape.dim()
    }
    fn basis_tag(&self) -> String {
        format!("monomials of {}", self.shape.serialize())
    }
    fn operator(&self, x: &[Fe]) -> Mat {
        self.element(x).operator()
    }
    fn decompose(&self, a: &Mat) -> Result<Vec<Fe>> {
        let d = derivation_from_operator(&self.shape, a)?;
        Ok(d.to_vec())
    }
    fn bracket(&self, x: &[Fe], y: &[Fe]) -> Vec<Fe> {
        self.element(x).bracket(&self.element(y)).to_vec()
    }
}

/// Reads a derivation off its values on x_1, …, x_m and checks it reproduces the operator.
pub fn derivation_from_operator(shape: &AlgebraShape, a: &Mat) -> Result<DerivationElement> {
    let f = (0..shape.m())
        .map(|i| DPElement::from_dense(shape, &a.col(shape.stride(i))))
        .collect();
    let d = DerivationElement { shape: shape.clone(), f };
    if &d.operator() != a {
        return Err(Error::NotInSpan("operator is not a derivation of O(m;1)".into()));
    }
    Ok(d)
}

/// Subalgebra of gl(V) given by a basis of matrices.
#[derive(Clone)]
pub struct MatrixAlgebra {
    pub field: FieldSpec,
    pub module_dim: usize,
    pub basis: Vec<Mat>,
    pub tag: String,
    span: Span,
}

impl MatrixAlgebra {
    pub fn new(field: &FieldSpec, module_dim: usize, basis: Vec<Mat>, tag: &str) -> Result<Self> {
        let mut span = Span::new(field, module_dim * module_dim);
        for b in &basis {
            if !span.insert(&b.data) {
                return Err(Error::InvalidParameter("matrix basis is linearly dependent".into()));
            }
        }
        Ok(MatrixAlgebra { field: field.clone(), module_dim, basis, tag: tag.to_string(), span })
    }

    pub fn contains(&self, a: &Mat) -> bool {
        self.span.contains(&a.data)
    }
}

impl Realization for MatrixAlgebra {
    fn field(&self) -> &FieldSpec {
        &self.field
    }
    fn dim(&self) -> usize {
        self.basis.len()
    }
    fn module_dim(&self) -> usize {
        self.module_dim
    }
    fn basis_tag(&self) -> String {
        self.tag.clone()
    }
    fn operator(&self, x: &[Fe]) -> Mat {
        let mut acc = Mat::zeros(&self.field, self.module_dim, self.module_dim);
        for (c, b) in x.iter().zip(&self.basis) {
            if !c.is_zero() {
                acc = acc.add(&b.scale(*c));
            }
        }
        acc
    }
    fn decompose(&self, a: &Mat) -> Result<Vec<Fe>> {
        self.span
            .decompose(&a.data)
            .ok_or_else(|| Error::NotInSpan(format!("operator outside {}", self.tag)))
    }
}

pub fn as_operator<R: Realization + ?Sized>(r: &R, x: &[Fe]) -> OperatorMatrix {
    OperatorMatrix { mat: r.operator(x), basis_tag: r.basis_tag() }
}

/// x^{[p]}: operator p-th power decomposed back into the algebra.
pub fn pth_power<R: Realization + ?Sized>(r: &R, x: &[Fe]) -> Result<Vec<Fe>> {
    let a = r.operator(x).pow(r.field().p());
    r.decompose(&a)
}

/// x^{[p]^k}.
pub fn pth_power_iter<R: Realization + ?Sized>(r: &R, x: &[Fe], k: u32) -> Result<Vec<Fe>> {
    let a = r.operator(x).pow(r.field().p().pow(k));
    r.decompose(&a)
}

/// The terms s_1, …, s_{p−1} of Jacobson's formula, from
/// (ad(tx+y))^{p−1}(x) = Σ i·s_i(x,y) t^{i−1}.
pub fn jacobson_si<R: Realization + ?Sized>(r: &R, x: &[Fe], y: &[Fe]) -> Vec<Vec<Fe>> {
    let f = r.field();
    let p = f.p() as usize;
    let n = r.dim();
    // coefficients of t^k, k = 0..p−1
    let mut cur: Vec<Vec<Fe>> = vec![x.to_vec()];
    for _ in 0..p - 1 {
        let mut next = vec![vec![Fe::ZERO; n]; cur.len() + 1];
        for (k, w) in cur.iter().enumerate() {
            if w.iter().all(|c| c.is_zero()) {
                continue;
            }
            let tx = r.bracket(x, w);
            let ty = r.bracket(y, w);
            next[k + 1] = vec_add(f, &next[k + 1], &tx);
            next[k] = vec_add(f, &next[k], &ty);
        }
        cur = next;
    }
    (1..p)
        .map(|i| {
            let inv = f.inv(f.from_int(i as i64)).unwrap();
            vec_scale(f, inv, &cur[i - 1])
        })
        .collect()
}

pub fn is_nilpotent<R: Realization + ?Sized>(r: &R, x: &[Fe]) -> bool {
    nilpotency_index(r, x).is_some()
}

/// Least N with x^{[p]^N} = 0, or `None` when x is not nilpotent.
pub fn nilpotency_index<R: Realization + ?Sized>(r: &R, x: &[Fe]) -> Option<u32> {
    operator_nilpotency_index(&r.operator(x))
}

pub fn operator_nilpotency_index(a: &Mat) -> Option<u32> {
    let p = a.field.p();
    let d = a.rows as u64;
    let mut cur = a.clone();
    let mut n = 0u32;
    let mut reach = 1u64;
    loop {
        if cur.is_zero() {
            return Some(n);
        }
        if reach >= d.max(1) {
            return None;
        }
        cur = cur.pow(p);
        reach = reach.saturating_mul(p);
        n += 1;
    }
}

/// Additive Jordan decomposition A = S + N of a matrix by Chevalley's iteration
/// S ← S − r(S) r′(S)^{−1}, r the radical of the characteristic polynomial.
pub fn jordan_chevalley_matrix(a: &Mat) -> Result<(Mat, Mat)> {
    let f = a.field.clone();
    let chi = a.charpoly();
    let r = poly::radical(&f, &chi);
    let dr = poly::derivative(&f, &r);
    let mut s = a.clone();
    for _ in 0..64 {
        let rs = poly::eval_mat(&f, &r, &s);
        if rs.is_zero() {
            let n = a.sub(&s);
            return Ok((s, n));
        }
        let drs = poly::eval_mat(&f, &dr, &s).inverse()?;
        s = s.sub(&rs.mul(&drs));
    }
    Err(Error::Internal("Chevalley iteration did not converge".into()))
}

/// Independent route: A^{p^N} = S^{p^N} once p^N exceeds the dimension, and S is
/// recovered from the Frobenius period of that power.
pub fn jordan_chevalley_periodic(a: &Mat) -> (Mat, Mat) {
    let p = a.field.p();
    let d = a.rows as u64;
    let mut big_n = 0u32;
    while p.pow(big_n) < d.max(1) {
        big_n += 1;
    }
    let b = a.pow(p.pow(big_n));
    // period T: B^{p^T} = B
    let mut t = 1u32;
    let mut cur = b.pow(p);
    while cur != b {
        cur = cur.pow(p);
        t += 1;
    }
    let mut c = 1u32;
    while t * c < big_n {
        c += 1;
    }
    let mut s = b.clone();
    for _ in 0..(t * c - big_n) {
        s = s.pow(p);
    }
    let n = a.sub(&s);
    (s, n)
}

/// (x_s, x_n) in coordinates.
pub fn jordan_chevalley<R: Realization + ?Sized>(r: &R, x: &[Fe]) -> Result<(Vec<Fe>, Vec<Fe>)> {
    let (s, n) = jordan_chevalley_matrix(&r.operator(x))?;
    let xs = r
        .decompose(&s)
        .map_err(|e| Error::Internal(format!("semisimple part outside the algebra: {e}")))?;
    let xn = r
        .decompose(&n)
        .map_err(|e| Error::Internal(format!("nilpotent part outside the algebra: {e}")))?;
    Ok((xs, xn))
}

/// Basis of the smallest subspace of gl(V) containing the generators and closed
/// under commutators and p-th powers.
pub fn p_closure(field: &FieldSpec, gens: &[Mat]) -> Vec<Mat> {
    let Some(first) = gens.first() else {
        return Vec::new();
    };
    let d = first.rows;
    let p = field.p();
    let mut span = Span::new(field, d * d);
    let mut basis: Vec<Mat> = Vec::new();
    for g in gens {
        if span.insert(&g.data) {
            basis.push(g.clone());
        }
    }
    let mut i = 0;
    while i < basis.len() {
        let pw = basis[i].pow(p);
        if span.insert(&pw.data) {
            basis.push(pw);
        }
        for j in 0..i {
            let c = basis[j].commutator(&basis[i]);
            if span.insert(&c.data) {
                basis.push(c);
            }
        }
        i += 1;
    }
    basis
}

/// Re-checks closure of a matrix basis under commutators and p-th powers.
pub fn is_p_closed(field: &FieldSpec, basis: &[Mat]) -> bool {
    let Some(first) = basis.first() else {
        return true;
    };
    let d = first.rows;
    let mut span = Span::new(field, d * d);
    for b in basis {
        span.insert(&b.data);
    }
    let p = field.p();
    basis.iter().all(|b| span.contains(&b.pow(p).data))
        && basis
            .iter()
            .enumerate()
            .all(|(i, a)| basis[..i].iter().all(|b| span.contains(&a.commutator(b).data)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PsiCoefficients {
    pub e: u32,
    pub s: u32,
    pub psi: Vec<Fe>,
    /// Least k ≥ 1 with x^{[p]^k} in the span of the earlier powers.
    pub first_dependent_power: Option<u32>,
}

/// Solves x^{[p]^{e+s}} = Σ_{i<s} ψ_i x^{[p]^{e+i}}.
pub fn psi_relation<R: Realization + ?Sized>(r: &R, x: &[Fe], e: u32, s: u32) -> Result<PsiCoefficients> {
    if s == 0 {
        return Err(Error::InvalidParameter("s must be positive".into()));
    }
    let f = r.field();
    let p = f.p();
    let a = r.operator(x);
    let mut powers = vec![a];
    let limit = (e + s).max(2 * r.module_dim() as u32 + 1);
    let mut span = Span::new(f, powers[0].data.len());
    span.insert(&powers[0].data);
    let mut first_dep = None;
    for k in 1..=limit {
        let next = powers.last().unwrap().pow(p);
        if first_dep.is_none() && !span.insert(&next.data) {
            first_dep = Some(k);
        }
        powers.push(next);
        if k >= e + s && first_dep.is_some() {
            break;
        }
    }
    let cols: Vec<Vec<Fe>> = (0..s).map(|i| powers[(e + i) as usize].data.clone()).collect();
    let m = Mat::from_cols(f, cols[0].len(), &cols);
    let target = &powers[(e + s) as usize].data;
    let psi = m.solve(target).ok_or_else(|| {
        Error::NotInSpan(format!(
            "no relation of shape (e={e}, s={s}); first dependent p-power at {first_dep:?}"
        ))
    })?;
    Ok(PsiCoefficients { e, s, psi, first_dependent_power: first_dep })
}

/// dim span{x^{[p]^i} : i ≥ N} for N large: the rank of the torus generated by x_s.
pub fn semisimple_rank<R: Realization + ?Sized>(r: &R, x: &[Fe]) -> usize {
    operator_semisimple_rank(&r.operator(x), 2 * r.dim())
}

/// Raises A to a p^N ≥ size first, so the nilpotent part is gone, then counts
/// independent p-powers (at most `cap`).
pub fn operator_semisimple_rank(a: &Mat, cap: usize) -> usize {
    let f = &a.field;
    let p = f.p();
    let mut cur = a.clone();
    let mut reach = 1usize;
    while reach < a.rows.max(1) {
        cur = cur.pow(p);
        reach = reach.saturating_mul(p as usize);
    }
    let mut span = Span::new(f, a.data.len());
    for _ in 0..cap.max(1) {
        if !span.insert(&cur.data) {
            break;
        }
        cur = cur.pow(p);
    }
    span.rank()
}

/// Kernel of D on O(m;1) is exactly the constants.
pub fn is_regular_witt(d: &DerivationElement) -> bool {
    d.operator().rank() + 1 == d.shape.dim()
}

/// Algebra-level constants (e, s) for the relation x^{[p]^{e+s}} = Σ ψ_i x^{[p]^{e+i}}.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgebraFamily {
    /// W(m;1): e = 0, s = m.
    Witt { m: u32 },
    /// sl_2⊗O(1;1)⋊k∂: e = 1, s = 1.
    Sl2Semidirect,
    /// W(1;n)_p: s = n, e supplied by the caller.
    ZassenhausEnvelope { n: u32 },
}

impl AlgebraFamily {
    pub fn constants(&self, e_override: Option<u32>) -> Result<(u32, u32)> {
        match (*self, e_override) {
            (AlgebraFamily::Witt { m }, None | Some(0)) => Ok((0, m)),
            (AlgebraFamily::Sl2Semidirect, None | Some(1)) => Ok((1, 1)),
            (AlgebraFamily::ZassenhausEnvelope { n }, Some(e)) => Ok((e, n)),
            (AlgebraFamily::ZassenhausEnvelope { .. }, None) => {
                Err(Error::InvalidParameter("e must be supplied for W(1;n)_p".into()))
            }
            (fam, Some(e)) => Err(Error::InvalidParameter(format!("e = {e} is inconsistent with {fam:?}"))),
        }
    }
}
