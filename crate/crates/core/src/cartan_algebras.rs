//! W(m;n) and its special, Hamiltonian and contact subalgebras; the restricted algebra sl_2.

use std::fmt;

use crate::divided_power::{AlgebraShape, DPElement};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalars::{Fe, FieldSpec};

/// D = Σ f_i ∂_i in W(m;n).
#[derive(Clone, PartialEq, Eq)]
pub struct DerivationElement {
    pub shape: AlgebraShape,
    pub f: Vec<DPElement>,
}

impl fmt::Debug for DerivationElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .f
            .iter()
            .enumerate()
            .filter(|(_, g)| !g.is_zero())
            .map(|(i, g)| format!("({})∂{}", g.pretty(), i + 1))
            .collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

impl DerivationElement {
    pub fn zero(shape: &AlgebraShape) -> Self {
        DerivationElement { shape: shape.clone(), f: vec![DPElement::zero(shape); shape.m()] }
    }

    /// g·∂_i (0-based i).
    pub fn term(g: &DPElement, i: usize) -> Self {
        let mut d = Self::zero(&g.shape);
        d.f[i] = g.clone();
        d
    }

    /// ∂_i (0-based).
    pub fn partial(shape: &AlgebraShape, i: usize) -> Self {
        Self::term(&DPElement::one(shape), i)
    }

    pub fn m(&self) -> usize {
        self.shape.m()
    }

    pub fn field(&self) -> &FieldSpec {
        self.shape.field()
    }

    pub fn is_zero(&self) -> bool {
        self.f.iter().all(|g| g.is_zero())
    }

    pub fn add(&self, o: &Self) -> Self {
        DerivationElement { shape: self.shape.clone(), f: self.f.iter().zip(&o.f).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        DerivationElement { shape: self.shape.clone(), f: self.f.iter().zip(&o.f).map(|(a, b)| a.sub(b)).collect() }
    }

    pub fn neg(&self) -> Self {
        DerivationElement { shape: self.shape.clone(), f: self.f.iter().map(|a| a.neg()).collect() }
    }

    pub fn scale(&self, c: Fe) -> Self {
        DerivationElement { shape: self.shape.clone(), f: self.f.iter().map(|a| a.scale(c)).collect() }
    }

    /// g·D for g in O(m;n).
    pub fn lmul(&self, g: &DPElement) -> Self {
        DerivationElement { shape: self.shape.clone(), f: self.f.iter().map(|a| g.mul(a)).collect() }
    }

    /// D(g) = Σ f_i ∂_i(g).
    pub fn apply(&self, g: &DPElement) -> DPElement {
        let mut out = DPElement::zero(&self.shape);
        for (i, fi) in self.f.iter().enumerate() {
            if fi.is_zero() {
                continue;
            }
            let d = g.partial(i);
            if !d.is_zero() {
                out = out.add(&fi.mul(&d));
            }
        }
        out
    }

    /// [D, E] with components D(g_j) − E(f_j).
    pub fn bracket(&self, o: &Self) -> Self {
        let f = (0..self.m()).map(|j| self.apply(&o.f[j]).sub(&o.apply(&self.f[j]))).collect();
        DerivationElement { shape: self.shape.clone(), f }
    }

    /// Coordinates in the basis x^(a)∂_i, block i holding the dense coefficients of f_i.
    pub fn to_vec(&self) -> Vec<Fe> {
        let mut v = Vec::with_capacity(self.m() * self.shape.dim());
        for g in &self.f {
            v.extend(g.to_dense());
        }
        v
    }

    pub fn from_vec(shape: &AlgebraShape, v: &[Fe]) -> Self {
        let d = shape.dim();
        DerivationElement {
            shape: shape.clone(),
            f: (0..shape.m()).map(|i| DPElement::from_dense(shape, &v[i * d..(i + 1) * d])).collect(),
        }
    }

    /// Matrix of the action on O(m;n) in the monomial basis.
    pub fn operator(&self) -> Mat {
        let dim = self.shape.dim();
        let fs = self.shape.field();
        let mut mat = Mat::zeros(fs, dim, dim);
        for (i, fi) in self.f.iter().enumerate() {
            if fi.is_zero() {
                continue;
            }
            let st = self.shape.stride(i);
            for col in 0..dim {
                if self.shape.digits(col)[i] == 0 {
                    continue;
                }
                // ∂_i x^(col) = x^(col - ε_i); multiply by f_i.
                let src = col - st;
                for (&r, &c) in &fi.coeffs {
                    if let Some(k) = self.shape.mul_coeff(r, src) {
                        if !k.is_zero() {
                            let row = r + src;
                            let v = fs.add(mat.get(row, col), fs.mul(k, c));
                            mat.set(row, col, v);
                        }
                    }
                }
            }
        }
        mat
    }

    /// Largest l with D ∈ W_(l), i.e. min_i deg(f_i) − 1; `None` for zero.
    pub fn filtration_degree(&self) -> Option<i64> {
        self.f.iter().filter_map(|g| g.filtration_degree()).min().map(|d| d as i64 - 1)
    }

    /// Blocks joined by `;∂<i>=`.
    pub fn serialize(&self) -> String {
        self.f
            .iter()
            .enumerate()
            .map(|(i, g)| format!("∂{}={}", i + 1, g.serialize()))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn parse(field: &FieldSpec, s: &str) -> Result<Self> {
        let mut blocks = Vec::new();
        for (k, part) in s.trim().split(";∂").enumerate() {
            let part = if k == 0 {
                part.strip_prefix('∂').ok_or_else(|| Error::Parse(format!("bad derivation `{s}`")))?
            } else {
                part
            };
            let (idx, body) = part.split_once('=').ok_or_else(|| Error::Parse(format!("bad block `{part}`")))?;
            let idx: usize = idx.trim().parse().map_err(|_| Error::Parse(format!("bad index `{idx}`")))?;
            if idx != k + 1 {
                return Err(Error::Parse(format!("block {idx} out of order")));
            }
            blocks.push(DPElement::parse(field, body)?);
        }
        let shape = blocks.first().ok_or_else(|| Error::Parse("empty derivation".into()))?.shape.clone();
        if blocks.len() != shape.m() || blocks.iter().any(|b| b.shape != shape) {
            return Err(Error::Parse("derivation blocks disagree with the shape".into()));
        }
        Ok(DerivationElement { shape, f: blocks })
    }
}

fn check_shape(a: &AlgebraShape, b: &AlgebraShape) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch(format!("{a:?} vs {b:?}")));
    }
    Ok(())
}

pub fn witt_bracket(d: &DerivationElement, e: &DerivationElement) -> Result<DerivationElement> {
    check_shape(&d.shape, &e.shape)?;
    Ok(d.bracket(e))
}

pub fn witt_apply(d: &DerivationElement, f: &DPElement) -> Result<DPElement> {
    check_shape(&d.shape, &f.shape)?;
    Ok(d.apply(f))
}

pub fn derivation_filtration_degree(d: &DerivationElement) -> Result<i64> {
    d.filtration_degree().ok_or(Error::ZeroElement)
}

/// Σ ∂_i(f_i).
pub fn divergence(d: &DerivationElement) -> DPElement {
    let mut out = DPElement::zero(&d.shape);
    for (i, g) in d.f.iter().enumerate() {
        out = out.add(&g.partial(i));
    }
    out
}

/// D_{i,j}(f) = ∂_j(f)∂_i − ∂_i(f)∂_j, indices 1-based as in the usual notation.
pub fn special_d_ij(i: usize, j: usize, f: &DPElement) -> Result<DerivationElement> {
    let m = f.shape.m();
    if i == 0 || j == 0 || i > m || j > m {
        return Err(Error::IndexOutOfRange(format!("D_{{{i},{j}}} with m = {m}")));
    }
    let mut d = DerivationElement::zero(&f.shape);
    if i == j {
        return Ok(d);
    }
    d.f[i - 1] = f.partial(j - 1);
    d.f[j - 1] = f.partial(i - 1).neg();
    Ok(d)
}

/// σ(j) and j′ for the symplectic pairing on 2r variables (1-based j).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HamiltonianIndex {
    pub r: usize,
    pub j: usize,
}

impl HamiltonianIndex {
    pub fn new(r: usize, j: usize) -> Result<Self> {
        if j == 0 || j > 2 * r {
            return Err(Error::IndexOutOfRange(format!("j = {j} outside 1..={}", 2 * r)));
        }
        Ok(HamiltonianIndex { r, j })
    }
    pub fn sigma(&self) -> i64 {
        if self.j <= self.r {
            1
        } else {
            -1
        }
    }
    pub fn prime(&self) -> usize {
        if self.j <= self.r {
            self.j + self.r
        } else {
            self.j - self.r
        }
    }
}

fn need_p_gt_2(f: &FieldSpec) -> Result<()> {
    if f.p() <= 2 {
        return Err(Error::InvalidParameter("characteristic must exceed 2".into()));
    }
    Ok(())
}

/// D_H(f) = Σ σ(i)∂_i(f)∂_{i′}.
pub fn hamiltonian_d_h(f: &DPElement) -> Result<DerivationElement> {
    let m = f.shape.m();
    if !m.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("D_H needs an even number of variables, got {m}")));
    }
    need_p_gt_2(f.field())?;
    let r = m / 2;
    let fs = f.field();
    let mut d = DerivationElement::zero(&f.shape);
    for i in 1..=m {
        let h = HamiltonianIndex { r, j: i };
        d.f[h.prime() - 1] = f.partial(i - 1).scale(fs.from_int(h.sigma()));
    }
    Ok(d)
}

/// {f, g} = D_H(f)(g).
pub fn poisson_bracket(f: &DPElement, g: &DPElement) -> Result<DPElement> {
    check_shape(&f.shape, &g.shape)?;
    Ok(hamiltonian_d_h(f)?.apply(g))
}

/// D_K(f) = Σ_{j≤2r}(σ(j)∂_j(f) + x_{j′}∂_{2r+1}(f))∂_{j′} + (2f − Σ_{j≤2r} x_j∂_j(f))∂_{2r+1}.
pub fn contact_d_k(f: &DPElement) -> Result<DerivationElement> {
    let m = f.shape.m();
    if m.is_multiple_of(2) || m < 3 {
        return Err(Error::InvalidParameter(format!("D_K needs an odd number ≥ 3 of variables, got {m}")));
    }
    need_p_gt_2(f.field())?;
    let r = (m - 1) / 2;
    let fs = f.field();
    let dt = f.partial(m - 1);
    let mut d = DerivationElement::zero(&f.shape);
    let mut last = f.scale(fs.from_int(2));
    for j in 1..=2 * r {
        let h = HamiltonianIndex { r, j };
        let jp = h.prime();
        let c = f.partial(j - 1).scale(fs.from_int(h.sigma())).add(&dt.mul_var(jp - 1));
        d.f[jp - 1] = d.f[jp - 1].add(&c);
        last = last.sub(&f.partial(j - 1).mul_var(j - 1));
    }
    d.f[m - 1] = last;
    Ok(d)
}

/// ⟨f, g⟩ = D_K(f)(g) − 2g∂_{2r+1}(f).
pub fn contact_bracket(f: &DPElement, g: &DPElement) -> Result<DPElement> {
    check_shape(&f.shape, &g.shape)?;
    let m = f.shape.m();
    let fs = f.field();
    let dk = contact_d_k(f)?;
    Ok(dk.apply(g).sub(&g.mul(&f.partial(m - 1)).scale(fs.from_int(2))))
}

/// Bracket on W(m;n) computed from the basis formula
/// [x^(a)∂_i, x^(b)∂_j] = C(a+b−ε_i, a)x^(a+b−ε_i)∂_j − C(a+b−ε_j, b)x^(a+b−ε_j)∂_i.
pub fn witt_bracket_basis_formula(d: &DerivationElement, e: &DerivationElement) -> DerivationElement {
    let shape = &d.shape;
    let fs = shape.field();
    let m = shape.m();
    let mut out = DerivationElement::zero(shape);
    for i in 0..m {
        for (&ra, &ca) in &d.f[i].coeffs {
            for j in 0..m {
                for (&rb, &cb) in &e.f[j].coeffs {
                    let c = fs.mul(ca, cb);
                    let a = shape.digits(ra);
                    let b = shape.digits(rb);
                    // first term: needs b_i ≥ 1 (x^(a+b−ε_i) with C(a+b−ε_i, a))
                    if b[i] >= 1 {
                        let src = rb - shape.stride(i);
                        if let Some(k) = shape.mul_coeff(ra, src) {
                            out.f[j].add_term(ra + src, fs.mul(k, c));
                        }
                    }
                    if a[j] >= 1 {
                        let src = ra - shape.stride(j);
                        if let Some(k) = shape.mul_coeff(src, rb) {
                            out.f[i].add_term(src + rb, fs.neg(fs.mul(k, c)));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Element c_e·e + c_f·f + c_h·h of sl_2.
#[derive(Clone, PartialEq, Eq)]
pub struct Sl2Element {
    pub field: FieldSpec,
    pub coords: [Fe; 3],
}

impl fmt::Debug for Sl2Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c: Vec<String> = self.coords.iter().map(|&x| self.field.fmt_fe(x)).collect();
        write!(f, "{}e + {}f + {}h", c[0], c[1], c[2])
    }
}

impl Sl2Element {
    pub fn new(field: &FieldSpec, ce: Fe, cf: Fe, ch: Fe) -> Self {
        Sl2Element { field: field.clone(), coords: [ce, cf, ch] }
    }
    pub fn e(field: &FieldSpec) -> Self {
        Self::new(field, Fe::ONE, Fe::ZERO, Fe::ZERO)
    }
    pub fn f(field: &FieldSpec) -> Self {
        Self::new(field, Fe::ZERO, Fe::ONE, Fe::ZERO)
    }
    pub fn h(field: &FieldSpec) -> Self {
        Self::new(field, Fe::ZERO, Fe::ZERO, Fe::ONE)
    }

    /// Natural 2×2 representation: e = E12, f = E21, h = diag(1,−1).
    pub fn matrix(&self) -> Mat {
        let fs = &self.field;
        let [ce, cf, ch] = self.coords;
        let mut m = Mat::zeros(fs, 2, 2);
        m.set(0, 0, ch);
        m.set(1, 1, fs.neg(ch));
        m.set(0, 1, ce);
        m.set(1, 0, cf);
        m
    }

    /// Reads a traceless 2×2 matrix back.
    pub fn from_matrix(m: &Mat) -> Result<Self> {
        let fs = &m.field;
        if !fs.add(m.get(0, 0), m.get(1, 1)).is_zero() {
            return Err(Error::NotInSpan("matrix is not traceless".into()));
        }
        Ok(Self::new(fs, m.get(0, 1), m.get(1, 0), m.get(0, 0)))
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|x| x.is_zero())
    }
}

pub fn sl2_bracket(x: &Sl2Element, y: &Sl2Element) -> Sl2Element {
    let fs = &x.field;
    let [a1, b1, c1] = x.coords;
    let [a2, b2, c2] = y.coords;
    let two = fs.from_int(2);
    // [e,f]=h, [h,e]=2e, [h,f]=−2f
    let ce = fs.mul(two, fs.sub(fs.mul(c1, a2), fs.mul(a1, c2)));
    let cf = fs.mul(two, fs.sub(fs.mul(b1, c2), fs.mul(c1, b2)));
    let ch = fs.sub(fs.mul(a1, b2), fs.mul(b1, a2));
    Sl2Element::new(fs, ce, cf, ch)
}

/// p-map as the p-th power of the 2×2 matrix.
pub fn sl2_pth(x: &Sl2Element) -> Sl2Element {
    Sl2Element::from_matrix(&x.matrix().pow(x.field.p())).expect("p-th power of a traceless matrix is traceless for odd p")
}

pub fn sl2_is_nilpotent(x: &Sl2Element) -> bool {
    sl2_pth(x).is_zero()
}

/// Structure constants of sl_2 in the ordered basis (e, f, h): c[i][j] = [b_i, b_j].
pub fn sl2_structure(field: &FieldSpec) -> Vec<Vec<Vec<Fe>>> {
    let basis = [Sl2Element::e(field), Sl2Element::f(field), Sl2Element::h(field)];
    basis
        .iter()
        .map(|x| basis.iter().map(|y| sl2_bracket(x, y).coords.to_vec()).collect())
        .collect()
}

/// 𝒟 = ∂_1 + x_1^{p−1}∂_2 + … + x_1^{p−1}⋯x_{n−1}^{p−1}∂_n with ordinary powers.
pub fn regular_nilpotent(shape: &AlgebraShape) -> DerivationElement {
    let m = shape.m();
    let p = shape.p() as usize;
    let mut d = DerivationElement::partial(shape, 0);
    for l in 1..m {
        let mut a = vec![0usize; m];
        for x in a.iter_mut().take(l) {
            *x = p - 1;
        }
        d.f[l] = DPElement::ordinary_monomial(shape, &a, Fe::ONE);
    }
    d
}

/// Spanning set {D_{i,j}(x^(a)) : i < j, all a}.
pub fn special_spanning_set(shape: &AlgebraShape) -> Vec<DerivationElement> {
    let m = shape.m();
    let mut out = Vec::new();
    for r in 0..shape.dim() {
        let f = DPElement::monomial_rank(shape, r, Fe::ONE);
        for i in 1..=m {
            for j in i + 1..=m {
                out.push(special_d_ij(i, j, &f).expect("indices in range"));
            }
        }
    }
    out
}

/// {D_H(x^(a)) : 0 < a < τ}, the basis of H(2r;n)^(2).
pub fn hamiltonian_spanning_set(shape: &AlgebraShape) -> Result<Vec<DerivationElement>> {
    let top = shape.dim() - 1;
    (1..top).map(|r| hamiltonian_d_h(&DPElement::monomial_rank(shape, r, Fe::ONE))).collect()
}

/// {D_K(x^(a))} over all a.
pub fn contact_spanning_set(shape: &AlgebraShape) -> Result<Vec<DerivationElement>> {
    (0..shape.dim()).map(|r| contact_d_k(&DPElement::monomial_rank(shape, r, Fe::ONE))).collect()
}

/// Dimension of the span of a set of derivations.
pub fn span_dimension(shape: &AlgebraShape, set: &[DerivationElement]) -> usize {
    let dim = shape.m() * shape.dim();
    let vecs: Vec<Vec<Fe>> = set.iter().map(|d| d.to_vec()).collect();
    crate::linalg::rank_of(shape.field(), dim, &vecs)
}
