//! Semisimple semidirect products L = (S⊗O(m;1)) ⋊ D with D ⊆ W(m;1) transitive.
//!
//! Elements act faithfully on S⊗O(m;1): s⊗f by (ad s)⊗(mult f), d by Id⊗d. The
//! p-map, exp(ad) and the nilpotency test all go through that action.

use std::fmt;

use crate::automorphisms::{
    demushkin_reduce, premet_regular_reduce, regular_nilpotent_in, top_monomial_in, witt_pth, witt_pth_iter, Chain,
    ExpAd, Move, PremetOutcome,
};
use crate::cartan_algebras::{sl2_is_nilpotent, sl2_structure, DerivationElement, Sl2Element};
use crate::divided_power::{AlgebraShape, DPElement};
use crate::error::{Error, Result};
use crate::linalg::{Mat, Span};
use crate::maybe_rayon::map_indices;
use crate::restricted::{operator_nilpotency_index, Realization};
use crate::rng::SplitMix64;
use crate::scalars::{Fe, FieldSpec};

/// Nilpotency test on S-coordinates.
pub type NilHook = fn(&FieldSpec, &[Fe]) -> bool;

/// A simple restricted Lie algebra with ad S = Der S, given by structure constants.
#[derive(Clone)]
pub struct SAlgebra {
    field: FieldSpec,
    name: String,
    consts: Vec<Vec<Vec<Fe>>>,
    pmap: Vec<Vec<Fe>>,
    ad_span: Span,
    nil_hook: Option<NilHook>,
}

impl fmt::Debug for SAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SAlgebra({}, dim {})", self.name, self.dim())
    }
}

impl SAlgebra {
    /// `consts[i][j]` are the coordinates of [b_i, b_j]; `pmap[i]` those of b_i^{[p]}.
    pub fn from_structure(field: &FieldSpec, name: &str, consts: Vec<Vec<Vec<Fe>>>, pmap: Vec<Vec<Fe>>) -> Result<Self> {
        let n = consts.len();
        let bad = |m: &str| Err(Error::InvalidParameter(format!("{name}: {m}")));
        if n == 0 || pmap.len() != n || consts.iter().any(|r| r.len() != n || r.iter().any(|c| c.len() != n)) {
            return bad("structure constants have the wrong shape");
        }
        if pmap.iter().any(|v| v.len() != n) {
            return bad("p-map table has the wrong shape");
        }
        for i in 0..n {
            for j in 0..n {
                let neg: Vec<Fe> = consts[j][i].iter().map(|&c| field.neg(c)).collect();
                if consts[i][j] != neg {
                    return bad("bracket is not antisymmetric");
                }
            }
        }
        let mut s = SAlgebra {
            field: field.clone(),
            name: name.to_string(),
            consts,
            pmap: Vec::new(),
            ad_span: Span::new(field, n * n),
            nil_hook: None,
        };
        let basis: Vec<Vec<Fe>> = (0..n).map(|i| s.basis_vec(i)).collect();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let a = s.bracket(&basis[i], &s.bracket(&basis[j], &basis[k]));
                    let b = s.bracket(&basis[j], &s.bracket(&basis[k], &basis[i]));
                    let c = s.bracket(&basis[k], &s.bracket(&basis[i], &basis[j]));
                    if (0..n).any(|t| !field.add(field.add(a[t], b[t]), c[t]).is_zero()) {
                        return bad("Jacobi identity fails");
                    }
                }
            }
        }
        for b in &basis {
            let ad = s.ad(b);
            if !s.ad_span.insert(&ad.data) {
                return bad("the adjoint representation is not faithful");
            }
        }
        let p = field.p();
        for (i, b) in basis.iter().enumerate() {
            if s.ad(&pmap[i]) != s.ad(b).pow(p) {
                return bad(&format!("ad(b_{i}^[p]) ≠ (ad b_{i})^p"));
            }
        }
        s.pmap = pmap;
        Ok(s)
    }

    /// sl_2 in the basis (e, f, h) with e^{[p]} = f^{[p]} = 0, h^{[p]} = h.
    pub fn sl2(field: &FieldSpec) -> Self {
        let z = vec![Fe::ZERO; 3];
        let pmap = vec![z.clone(), z, vec![Fe::ZERO, Fe::ZERO, Fe::ONE]];
        let mut s = Self::from_structure(field, "sl2", sl2_structure(field), pmap).expect("sl2 structure constants");
        s.nil_hook = Some(|f, x| sl2_is_nilpotent(&Sl2Element::new(f, x[0], x[1], x[2])));
        s
    }

    pub fn with_nil_hook(mut self, hook: NilHook) -> Self {
        self.nil_hook = Some(hook);
        self
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }
    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn dim(&self) -> usize {
        self.consts.len()
    }

    pub fn basis_vec(&self, i: usize) -> Vec<Fe> {
        let mut v = vec![Fe::ZERO; self.dim()];
        v[i] = Fe::ONE;
        v
    }

    pub fn pmap_table(&self) -> &[Vec<Fe>] {
        &self.pmap
    }

    pub fn bracket(&self, x: &[Fe], y: &[Fe]) -> Vec<Fe> {
        let f = &self.field;
        let n = self.dim();
        let mut out = vec![Fe::ZERO; n];
        for i in 0..n {
            if x[i].is_zero() {
                continue;
            }
            for j in 0..n {
                if y[j].is_zero() {
                    continue;
                }
                let c = f.mul(x[i], y[j]);
                for (o, &k) in out.iter_mut().zip(&self.consts[i][j]) {
                    if !k.is_zero() {
                        *o = f.add(*o, f.mul(c, k));
                    }
                }
            }
        }
        out
    }

    pub fn ad(&self, x: &[Fe]) -> Mat {
        let n = self.dim();
        let cols: Vec<Vec<Fe>> = (0..n).map(|j| self.bracket(x, &self.basis_vec(j))).collect();
        Mat::from_cols(&self.field, n, &cols)
    }

    /// x^{[p]}, read off (ad x)^p.
    pub fn pth(&self, x: &[Fe]) -> Result<Vec<Fe>> {
        let a = self.ad(x).pow(self.field.p());
        self.ad_span
            .decompose(&a.data)
            .ok_or_else(|| Error::Internal(format!("(ad x)^p is not inner in {}", self.name)))
    }

    /// The hook if present, otherwise x^{[p]^k} = 0 with p^k ≥ dim S.
    pub fn is_nilpotent(&self, x: &[Fe]) -> bool {
        if let Some(h) = self.nil_hook {
            return h(&self.field, x);
        }
        self.is_nilpotent_by_pth(x)
    }

    pub fn is_nilpotent_by_pth(&self, x: &[Fe]) -> bool {
        let p = self.field.p() as usize;
        let mut cur = x.to_vec();
        let mut reach = 1usize;
        while reach < self.dim() {
            cur = match self.pth(&cur) {
                Ok(c) => c,
                Err(_) => return false,
            };
            reach *= p;
        }
        cur.iter().all(|c| c.is_zero())
    }
}

/// Σ_i b_i⊗tensor[i] + tail.
#[derive(Clone, PartialEq, Eq)]
pub struct SemidirectElement {
    pub tensor: Vec<DPElement>,
    pub tail: DerivationElement,
}

impl fmt::Debug for SemidirectElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .tensor
            .iter()
            .enumerate()
            .filter(|(_, g)| !g.is_zero())
            .map(|(i, g)| format!("b{i}⊗({})", g.pretty()))
            .collect();
        write!(f, "[{}] + {:?}", parts.join(" + "), self.tail)
    }
}

impl SemidirectElement {
    pub fn shape(&self) -> &AlgebraShape {
        &self.tail.shape
    }

    pub fn field(&self) -> &FieldSpec {
        self.tail.field()
    }

    pub fn is_zero(&self) -> bool {
        self.tail.is_zero() && self.tensor.iter().all(|g| g.is_zero())
    }

    pub fn is_tensor(&self) -> bool {
        self.tail.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        SemidirectElement {
            tensor: self.tensor.iter().zip(&o.tensor).map(|(a, b)| a.add(b)).collect(),
            tail: self.tail.add(&o.tail),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        SemidirectElement { tensor: self.tensor.iter().map(|g| g.neg()).collect(), tail: self.tail.neg() }
    }

    pub fn scale(&self, c: Fe) -> Self {
        SemidirectElement { tensor: self.tensor.iter().map(|g| g.scale(c)).collect(), tail: self.tail.scale(c) }
    }

    /// s_0: constant terms of the tensor components.
    pub fn constant_part(&self) -> Vec<Fe> {
        self.tensor.iter().map(|g| g.constant_term()).collect()
    }

    /// (s̃, f) when the tensor part is s̃⊗f and the tail vanishes.
    pub fn as_pure_tensor(&self) -> Option<(Vec<Fe>, DPElement)> {
        if !self.tail.is_zero() {
            return None;
        }
        let field = self.field().clone();
        let Some(g) = self.tensor.iter().find(|g| !g.is_zero()) else {
            return Some((vec![Fe::ZERO; self.tensor.len()], DPElement::zero(self.shape())));
        };
        let (&r0, &c0) = g.coeffs.iter().next().unwrap();
        let inv = field.inv(c0).unwrap();
        let mut s = Vec::with_capacity(self.tensor.len());
        for h in &self.tensor {
            let c = field.mul(h.coeff(r0), inv);
            if h != &g.scale(c) {
                return None;
            }
            s.push(c);
        }
        Some((s, g.clone()))
    }

    /// `tensor{<idx>=<poly>,...};tail{<derivation>}` with 0-based S-basis indices.
    pub fn serialize(&self) -> String {
        let parts: Vec<String> = self
            .tensor
            .iter()
            .enumerate()
            .filter(|(_, g)| !g.is_zero())
            .map(|(i, g)| format!("{i}={}", g.serialize()))
            .collect();
        format!("tensor{{{}}};tail{{{}}}", parts.join(","), self.tail.serialize())
    }
}

/// L = (S⊗O(m;1)) ⋊ D with D given by a basis.
#[derive(Clone)]
pub struct SemidirectAlgebra {
    s: SAlgebra,
    shape: AlgebraShape,
    d_basis: Vec<DerivationElement>,
    d_span: Span,
    name: String,
}

impl fmt::Debug for SemidirectAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (dim {})", self.name, self.dim())
    }
}

impl PartialEq for SemidirectAlgebra {
    fn eq(&self, o: &Self) -> bool {
        self.name == o.name && self.shape == o.shape && self.d_basis == o.d_basis && self.s.consts == o.s.consts
    }
}

impl SemidirectAlgebra {
    /// Checks that D is a restricted subalgebra and transitive: D + W_(0) = W(m;1).
    pub fn new(s: SAlgebra, shape: &AlgebraShape, d_basis: Vec<DerivationElement>, name: &str) -> Result<Self> {
        if !shape.is_restricted() {
            return Err(Error::InvalidParameter("O(m;1) is required".into()));
        }
        if shape.field() != s.field() {
            return Err(Error::ShapeMismatch("S and O(m;1) live over different fields".into()));
        }
        if shape.p() == 2 {
            return Err(Error::InvalidParameter("p > 2 is required".into()));
        }
        let wdim = shape.m() * shape.dim();
        let mut d_span = Span::new(shape.field(), wdim);
        for d in &d_basis {
            if &d.shape != shape {
                return Err(Error::ShapeMismatch("D basis element over another O(m;1)".into()));
            }
            if !d_span.insert(&d.to_vec()) {
                return Err(Error::InvalidParameter("D basis is linearly dependent".into()));
            }
        }
        for (i, a) in d_basis.iter().enumerate() {
            if !d_span.contains(&witt_pth(a)?.to_vec()) {
                return Err(Error::InvalidParameter(format!("D is not p-closed at basis element {i}")));
            }
            for b in &d_basis[..i] {
                if !d_span.contains(&a.bracket(b).to_vec()) {
                    return Err(Error::InvalidParameter("D is not closed under the bracket".into()));
                }
            }
        }
        let mut hull = d_span.clone();
        for i in 0..shape.m() {
            for r in 1..shape.dim() {
                hull.insert(&DerivationElement::term(&DPElement::monomial_rank(shape, r, Fe::ONE), i).to_vec());
            }
        }
        if hull.rank() != wdim {
            return Err(Error::InvalidParameter(format!(
                "D is not transitive: dim(D + W_(0)) = {} < {wdim}",
                hull.rank()
            )));
        }
        Ok(SemidirectAlgebra { s, shape: shape.clone(), d_basis, d_span, name: name.to_string() })
    }

    /// sl_2⊗O(1;1) ⋊ k∂, of dimension 3p + 1.
    pub fn sl2_o1(field: &FieldSpec) -> Result<Self> {
        let shape = AlgebraShape::restricted(field, 1)?;
        let d = vec![DerivationElement::partial(&shape, 0)];
        Self::new(SAlgebra::sl2(field), &shape, d, "sl2⊗O(1;1)⋊k∂")
    }

    /// sl_2⊗O(m;1) ⋊ W(m;1).
    pub fn sl2_witt(field: &FieldSpec, m: usize) -> Result<Self> {
        let shape = AlgebraShape::restricted(field, m)?;
        let mut d = Vec::new();
        for i in 0..m {
            for r in 0..shape.dim() {
                d.push(DerivationElement::term(&DPElement::monomial_rank(&shape, r, Fe::ONE), i));
            }
        }
        Self::new(SAlgebra::sl2(field), &shape, d, &format!("sl2⊗O({m};1)⋊W({m};1)"))
    }

    pub fn s(&self) -> &SAlgebra {
        &self.s
    }
    pub fn shape(&self) -> &AlgebraShape {
        &self.shape
    }
    pub fn field(&self) -> &FieldSpec {
        self.shape.field()
    }
    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn d_basis(&self) -> &[DerivationElement] {
        &self.d_basis
    }
    pub fn dim(&self) -> usize {
        self.s.dim() * self.shape.dim() + self.d_basis.len()
    }
    pub fn module_dim(&self) -> usize {
        self.s.dim() * self.shape.dim()
    }

    pub fn zero(&self) -> SemidirectElement {
        SemidirectElement {
            tensor: vec![DPElement::zero(&self.shape); self.s.dim()],
            tail: DerivationElement::zero(&self.shape),
        }
    }

    pub fn from_tail(&self, d: &DerivationElement) -> SemidirectElement {
        let mut a = self.zero();
        a.tail = d.clone();
        a
    }

    /// s⊗f.
    pub fn pure_tensor(&self, s: &[Fe], f: &DPElement) -> SemidirectElement {
        let mut a = self.zero();
        for (t, &c) in a.tensor.iter_mut().zip(s) {
            *t = f.scale(c);
        }
        a
    }

    pub fn contains_tail(&self, d: &DerivationElement) -> bool {
        d.shape == self.shape && self.d_span.contains(&d.to_vec())
    }

    pub fn check(&self, a: &SemidirectElement) -> Result<()> {
        if a.tensor.len() != self.s.dim()
            || a.tail.shape != self.shape
            || a.tensor.iter().any(|g| g.shape != self.shape)
        {
            return Err(Error::ShapeMismatch(format!("element does not belong to {}", self.name)));
        }
        if !self.contains_tail(&a.tail) {
            return Err(Error::NotInSpan(format!("tail is not in D of {}", self.name)));
        }
        Ok(())
    }

    fn check_shapes(&self, a: &SemidirectElement) -> Result<()> {
        if a.tensor.len() != self.s.dim() || a.tail.shape != self.shape {
            return Err(Error::ShapeMismatch(format!("element does not belong to {}", self.name)));
        }
        Ok(())
    }

    /// [s⊗f, t⊗g] = [s,t]⊗fg, [d, t⊗g] = t⊗d(g), [d, e] in W(m;1).
    pub fn bracket(&self, a: &SemidirectElement, b: &SemidirectElement) -> SemidirectElement {
        let n = self.s.dim();
        let mut tensor: Vec<DPElement> = (0..n)
            .map(|k| a.tail.apply(&b.tensor[k]).sub(&b.tail.apply(&a.tensor[k])))
            .collect();
        for i in 0..n {
            if a.tensor[i].is_zero() {
                continue;
            }
            for j in 0..n {
                if b.tensor[j].is_zero() || self.s.consts[i][j].iter().all(|c| c.is_zero()) {
                    continue;
                }
                let prod = a.tensor[i].mul(&b.tensor[j]);
                for (k, &c) in self.s.consts[i][j].iter().enumerate() {
                    if !c.is_zero() {
                        tensor[k] = tensor[k].add(&prod.scale(c));
                    }
                }
            }
        }
        SemidirectElement { tensor, tail: a.tail.bracket(&b.tail) }
    }

    /// Operator on S⊗O(m;1); basis b_j⊗x^(r) sits at index j·p^m + r.
    pub fn operator(&self, a: &SemidirectElement) -> Mat {
        let f = self.field();
        let pm = self.shape.dim();
        let n = self.s.dim();
        let mut out = Mat::zeros(f, n * pm, n * pm);
        for (i, g) in a.tensor.iter().enumerate() {
            if g.is_zero() {
                continue;
            }
            for j in 0..n {
                for (k, &c) in self.s.consts[i][j].iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    for (&rg, &cg) in &g.coeffs {
                        let cc = f.mul(c, cg);
                        for r in 0..pm {
                            if let Some(m) = self.shape.mul_coeff(rg, r) {
                                if m.is_zero() {
                                    continue;
                                }
                                let row = k * pm + rg + r;
                                let col = j * pm + r;
                                let v = f.add(out.get(row, col), f.mul(cc, m));
                                out.set(row, col, v);
                            }
                        }
                    }
                }
            }
        }
        if !a.tail.is_zero() {
            let d = a.tail.operator();
            for j in 0..n {
                for r in 0..pm {
                    for c in 0..pm {
                        let v = d.get(r, c);
                        if !v.is_zero() {
                            let row = j * pm + r;
                            let col = j * pm + c;
                            out.set(row, col, f.add(out.get(row, col), v));
                        }
                    }
                }
            }
        }
        out
    }

    /// Reads an element of (S⊗O(m;1)) ⋊ W(m;1) back from its operator.
    pub fn from_operator(&self, a: &Mat) -> Result<SemidirectElement> {
        let f = self.field();
        let pm = self.shape.dim();
        let n = self.s.dim();
        if a.rows != n * pm || a.cols != n * pm {
            return Err(Error::ShapeMismatch("operator size".into()));
        }
        let mut out = self.zero();
        // b_j⊗1 ↦ Σ_r [t_r, b_j]⊗x^(r); the tail kills constants.
        for r in 0..pm {
            let cols: Vec<Vec<Fe>> = (0..n).map(|j| (0..n).map(|k| a.get(k * pm + r, j * pm)).collect()).collect();
            let m = Mat::from_cols(f, n, &cols);
            if m.is_zero() {
                continue;
            }
            let t = self
                .s
                .ad_span
                .decompose(&m.data)
                .ok_or_else(|| Error::NotInSpan("operator is not S-linear over O".into()))?;
            for (i, &c) in t.iter().enumerate() {
                out.tensor[i].add_term(r, c);
            }
        }
        let rest = a.sub(&self.operator(&out));
        let tail_f = (0..self.shape.m())
            .map(|i| DPElement::from_dense(&self.shape, &(0..pm).map(|r| rest.get(r, self.shape.stride(i))).collect::<Vec<_>>()))
            .collect();
        out.tail = DerivationElement { shape: self.shape.clone(), f: tail_f };
        if self.operator(&out) != *a {
            return Err(Error::NotInSpan("operator is not in (S⊗O(m;1))⋊W(m;1)".into()));
        }
        Ok(out)
    }

    /// a^{[p]} through the faithful action.
    pub fn pth(&self, a: &SemidirectElement) -> Result<SemidirectElement> {
        self.check_shapes(a)?;
        self.from_operator(&self.operator(a).pow(self.field().p()))
    }

    pub fn pth_iter(&self, a: &SemidirectElement, k: u32) -> Result<SemidirectElement> {
        self.check_shapes(a)?;
        self.from_operator(&self.operator(a).pow(self.field().p().pow(k)))
    }

    /// Least N with a^{[p]^N} = 0.
    pub fn nilpotency_index(&self, a: &SemidirectElement) -> Option<u32> {
        operator_nilpotency_index(&self.operator(a))
    }

    pub fn to_vec(&self, a: &SemidirectElement) -> Result<Vec<Fe>> {
        self.check_shapes(a)?;
        let mut v = Vec::with_capacity(self.dim());
        for g in &a.tensor {
            v.extend(g.to_dense());
        }
        let t = self
            .d_span
            .decompose(&a.tail.to_vec())
            .ok_or_else(|| Error::NotInSpan("tail is not in D".into()))?;
        v.extend(t);
        Ok(v)
    }

    pub fn from_vec(&self, v: &[Fe]) -> SemidirectElement {
        let pm = self.shape.dim();
        let n = self.s.dim();
        let tensor = (0..n).map(|i| DPElement::from_dense(&self.shape, &v[i * pm..(i + 1) * pm])).collect();
        let mut tail = DerivationElement::zero(&self.shape);
        for (d, &c) in self.d_basis.iter().zip(&v[n * pm..]) {
            if !c.is_zero() {
                tail = tail.add(&d.scale(c));
            }
        }
        SemidirectElement { tensor, tail }
    }

    /// Coordinates nonzero with probability num/den.
    pub fn random(&self, rng: &mut SplitMix64, num: u64, den: u64) -> SemidirectElement {
        self.from_vec(&rng.sparse_fe_vec(self.field(), self.dim(), num, den))
    }

    pub fn parse(&self, s: &str) -> Result<SemidirectElement> {
        let s = s.trim();
        let bad = || Error::Parse(format!("bad semidirect element `{s}`"));
        let body = s.strip_prefix("tensor{").ok_or_else(bad)?;
        let (tensor_body, rest) = body.split_once("};tail{").ok_or_else(bad)?;
        let tail_body = rest.strip_suffix('}').ok_or_else(bad)?;
        let tail = DerivationElement::parse(self.field(), tail_body)?;
        let mut out = self.from_tail(&tail);
        self.check_shapes(&out)?;
        let mut items: Vec<(usize, String)> = Vec::new();
        for tok in tensor_body.split(',').filter(|t| !t.trim().is_empty()) {
            let head = tok.split_once('=').filter(|(i, _)| i.trim().chars().all(|c| c.is_ascii_digit()) && !i.trim().is_empty());
            match head {
                Some((i, g)) => items.push((i.trim().parse().map_err(|_| bad())?, g.to_string())),
                None => {
                    let last = items.last_mut().ok_or_else(bad)?;
                    last.1.push(',');
                    last.1.push_str(tok);
                }
            }
        }
        for (i, g) in items {
            if i >= self.s.dim() {
                return Err(Error::Parse(format!("S index {i} out of range")));
            }
            let g = DPElement::parse(self.field(), g.trim())?;
            if g.shape != self.shape {
                return Err(Error::ShapeMismatch("tensor component over another O(m;1)".into()));
            }
            out.tensor[i] = out.tensor[i].add(&g);
        }
        Ok(out)
    }
}

impl Realization for SemidirectAlgebra {
    fn field(&self) -> &FieldSpec {
        self.shape.field()
    }
    fn dim(&self) -> usize {
        SemidirectAlgebra::dim(self)
    }
    fn module_dim(&self) -> usize {
        SemidirectAlgebra::module_dim(self)
    }
    fn basis_tag(&self) -> String {
        format!("{}: b_i⊗x^(r) then D basis", self.name)
    }
    fn operator(&self, x: &[Fe]) -> Mat {
        SemidirectAlgebra::operator(self, &self.from_vec(x))
    }
    fn decompose(&self, a: &Mat) -> Result<Vec<Fe>> {
        self.to_vec(&self.from_operator(a)?)
    }
    fn bracket(&self, x: &[Fe], y: &[Fe]) -> Vec<Fe> {
        let c = SemidirectAlgebra::bracket(self, &self.from_vec(x), &self.from_vec(y));
        self.to_vec(&c).expect("L is closed under the bracket")
    }
}

pub fn semi_bracket(l: &SemidirectAlgebra, a: &SemidirectElement, b: &SemidirectElement) -> Result<SemidirectElement> {
    l.check_shapes(a)?;
    l.check_shapes(b)?;
    Ok(l.bracket(a, b))
}

pub fn semi_pth(l: &SemidirectAlgebra, a: &SemidirectElement) -> Result<SemidirectElement> {
    l.pth(a)
}

/// (y⊗g)^{[p]} = y^{[p]}⊗g^p.
pub fn pure_tensor_pth(l: &SemidirectElement, s: &SAlgebra) -> Result<SemidirectElement> {
    let (y, g) = l
        .as_pure_tensor()
        .ok_or_else(|| Error::Precondition("not a pure tensor".into()))?;
    let yp = s.pth(&y)?;
    let gp = g.pow(s.field().p());
    Ok(SemidirectElement { tensor: yp.iter().map(|&c| gp.scale(c)).collect(), tail: l.tail.clone() })
}

fn exp_precondition(l: &SemidirectAlgebra, s: &[Fe], f: &DPElement) -> Result<()> {
    if f.constant_term().is_zero() || l.s.is_nilpotent(s) {
        Ok(())
    } else {
        Err(Error::Precondition("exp(ad(s⊗f)) needs f ∈ m or s nilpotent".into()))
    }
}

/// exp(ad u)(target) for u = s̃⊗f, as exp(A)·X·exp(−A) on S⊗O(m;1).
pub fn semi_exp_ad(l: &SemidirectAlgebra, u: &SemidirectElement, target: &SemidirectElement) -> Result<SemidirectElement> {
    l.check_shapes(u)?;
    l.check_shapes(target)?;
    let (s, f) = u
        .as_pure_tensor()
        .ok_or_else(|| Error::Precondition("exp(ad u) needs u = s̃⊗f".into()))?;
    if u.is_zero() {
        return Ok(target.clone());
    }
    exp_precondition(l, &s, &f)?;
    let e = ExpAd::new(&l.operator(u))?;
    l.from_operator(&e.conjugate(&l.operator(target)))
}

/// Closed form: b⊗g ↦ Σ_j (ad s̃)^j(b)/j!⊗f^j g and d ↦ d − s̃⊗d(f) − s̃^{[p]}⊗f^{p−1}d(f).
pub fn semi_exp_ad_formula(
    l: &SemidirectAlgebra,
    s: &[Fe],
    f: &DPElement,
    target: &SemidirectElement,
) -> Result<SemidirectElement> {
    l.check_shapes(target)?;
    if s.len() != l.s.dim() || f.shape != l.shape {
        return Err(Error::ShapeMismatch("exp(ad) generator".into()));
    }
    exp_precondition(l, s, f)?;
    let field = l.field().clone();
    let p = field.p() as usize;
    let n = l.s.dim();
    let mut out = l.from_tail(&target.tail);
    for (i, g) in target.tensor.iter().enumerate() {
        if g.is_zero() {
            continue;
        }
        let mut b = l.s.basis_vec(i);
        let mut poly = g.clone();
        let mut fact = Fe::ONE;
        for j in 0..p {
            if j > 0 {
                b = l.s.bracket(s, &b);
                poly = poly.mul(f);
                fact = field.mul(fact, field.from_int(j as i64));
            }
            let inv = field.inv(fact).unwrap();
            for (k, &c) in b.iter().enumerate() {
                if !c.is_zero() {
                    out.tensor[k] = out.tensor[k].add(&poly.scale(field.mul(c, inv)));
                }
            }
        }
    }
    let df = target.tail.apply(f);
    if !df.is_zero() {
        let sp = l.s.pth(s)?;
        let top = f.pow(p as u64 - 1).mul(&df);
        for k in 0..n {
            out.tensor[k] = out.tensor[k].sub(&df.scale(s[k])).sub(&top.scale(sp[k]));
        }
    }
    Ok(out)
}

/// d_0 = ∂_1 + x_1^{p−1}∂_2 + ⋯ + x_1^{p−1}⋯x_{s−1}^{p−1}∂_s.
pub fn d0(shape: &AlgebraShape, s: usize) -> DerivationElement {
    regular_nilpotent_in(shape, s)
}

/// Whether every monomial of f lies in I = (x_{s+1}, …, x_m).
pub fn in_ideal(f: &DPElement, s: usize) -> bool {
    f.coeffs.keys().all(|&r| f.shape.digits(r)[s..].iter().any(|&d| d > 0))
}

fn in_os(shape: &AlgebraShape, r: usize, s: usize) -> bool {
    shape.digits(r)[s..].iter().all(|&d| d == 0)
}

/// u ∈ (I∂_1 + ⋯ + I∂_m) ∩ W(m;1)_(p−1).
pub fn in_iw_p1(u: &DerivationElement, s: usize) -> bool {
    let p = u.shape.p() as usize;
    u.f.iter()
        .all(|g| in_ideal(g, s) && g.coeffs.keys().all(|&r| u.shape.index(r).degree() >= p))
}

/// Smallest s with z − d_0 ∈ (I∂_1 + ⋯ + I∂_m) ∩ W(m;1)_(p−1).
pub fn tail_form_s(z: &DerivationElement) -> Option<usize> {
    (1..=z.m()).find(|&s| in_iw_p1(&z.sub(&d0(&z.shape, s)), s))
}

fn factorial_inv(field: &FieldSpec, a: &[u32]) -> Fe {
    let mut c = Fe::ONE;
    for &ai in a {
        for j in 1..=ai {
            c = field.mul(c, field.from_int(j as i64));
        }
    }
    field.inv(c).expect("exponents below p")
}

/// Coefficient vectors s_A of the ordinary monomials x^A ∈ O(s;1) in the tensor part.
fn os_coefficients(a: &SemidirectElement, s: usize) -> Vec<(usize, Vec<Fe>)> {
    let shape = a.shape();
    let field = shape.field();
    let n = a.tensor.len();
    let mut ranks: Vec<usize> = a
        .tensor
        .iter()
        .flat_map(|g| g.coeffs.keys().copied())
        .filter(|&r| in_os(shape, r, s))
        .collect();
    ranks.sort_unstable();
    ranks.dedup();
    ranks
        .into_iter()
        .map(|r| {
            let inv = factorial_inv(field, shape.digits(r));
            (r, (0..n).map(|i| field.mul(a.tensor[i].coeff(r), inv)).collect())
        })
        .collect()
}

/// Rank of x_1^{p−1}⋯x_s^{p−1}.
fn top_rank(shape: &AlgebraShape, s: usize) -> usize {
    let p = shape.p() as usize;
    let mut a = vec![0; shape.m()];
    for x in a.iter_mut().take(s) {
        *x = p - 1;
    }
    shape.rank_of(&a).unwrap()
}

#[derive(Clone, Debug)]
pub struct SemiReduction {
    pub chain: Chain,
    pub form: SemidirectElement,
    pub s: usize,
    /// s_0′ with D_1 = s_0′⊗x_1^{p−1}⋯x_s^{p−1} + v′ + z.
    pub s0: Vec<Fe>,
}

/// Clears the DegLex-least tensor monomial of O(s;1) by exp(ad(s̃⊗f)) until only
/// x_1^{p−1}⋯x_s^{p−1} is left. The tail must be d_0 + u.
pub fn semi_reduce(l: &SemidirectAlgebra, a: &SemidirectElement) -> Result<SemiReduction> {
    l.check_shapes(a)?;
    let shape = l.shape.clone();
    let field = l.field().clone();
    let p = field.p();
    let s = tail_form_s(&a.tail)
        .ok_or_else(|| Error::Precondition("tail is not of the form d_0 + u".into()))?;
    let top = top_rank(&shape, s);
    let p_deg = |r: usize| shape.index(r).p_degree(s, p);
    let mut chain = Chain::default();
    let mut cur = a.clone();
    let mut last: Option<u64> = None;
    loop {
        let coeffs = os_coefficients(&cur, s);
        let Some((r, s_a)) = coeffs
            .into_iter()
            .filter(|(_, v)| v.iter().any(|c| !c.is_zero()))
            .min_by_key(|&(r, _)| p_deg(r))
        else {
            break;
        };
        if r == top {
            break;
        }
        let k = p_deg(r);
        if last.is_some_and(|prev| k <= prev) {
            return Err(Error::Internal(format!("|·|_p degree did not increase past {k}")));
        }
        last = Some(k);
        let digits = shape.digits(r).to_vec();
        let rr = (0..s).find(|&i| digits[i] < p as u32 - 1).expect("below the top monomial");
        let mut e = vec![0usize; shape.m()];
        for i in rr..s {
            e[i] = digits[i] as usize;
        }
        e[rr] += 1;
        let f = DPElement::ordinary_monomial(&shape, &e, Fe::ONE);
        let c = field.inv(field.from_int(e[rr] as i64)).unwrap();
        let st: Vec<Fe> = s_a.iter().map(|&x| field.mul(c, x)).collect();
        let u = l.pure_tensor(&st, &f);
        cur = semi_exp_ad(l, &u, &cur)?;
        chain.moves.push(Move::ExpAd(u.serialize()));
    }
    if cur.tail != a.tail {
        return Err(Error::Internal("exp(ad) moves changed the tail".into()));
    }
    if !cur.tensor.iter().all(|g| g.coeffs.keys().all(|&r| r == top || !in_os(&shape, r, s))) {
        return Err(Error::Internal("reduced tensor part has O(s;1) terms below the top".into()));
    }
    let inv = factorial_inv(&field, shape.digits(top));
    let s0 = cur.tensor.iter().map(|g| field.mul(g.coeff(top), inv)).collect();
    Ok(SemiReduction { chain, form: cur, s, s0 })
}

/// Id_S⊗σ for a move σ of O(m;1).
fn apply_module_move(l: &SemidirectAlgebra, mv: &Move, a: &SemidirectElement) -> Result<SemidirectElement> {
    let sigma = mv.truncated(&l.shape)?;
    Ok(SemidirectElement {
        tensor: a.tensor.iter().map(|g| sigma.apply(g)).collect(),
        tail: sigma.conjugate(&a.tail)?,
    })
}

/// Applies swap/scale/shift moves as Id_S⊗σ and exp(ad) moves as written.
pub fn semi_apply_chain(l: &SemidirectAlgebra, chain: &Chain, a: &SemidirectElement) -> Result<SemidirectElement> {
    let mut cur = a.clone();
    for mv in &chain.moves {
        cur = match mv {
            Move::ExpAd(u) => semi_exp_ad(l, &l.parse(u)?, &cur)?,
            _ => apply_module_move(l, mv, &cur)?,
        };
    }
    Ok(cur)
}

/// Conjugates a nilpotent tail z ∉ W_(0) into the form d_0 + u by automorphisms of
/// O(m;1). Covers s = 1 (via the Demushkin form) and s = m (via the regular form).
pub fn tail_normalization(z: &DerivationElement) -> Result<Chain> {
    if tail_form_s(z).is_some() {
        return Ok(Chain::default());
    }
    if z.filtration_degree() != Some(-1) {
        return Err(Error::Precondition("tail lies in W_(0)".into()));
    }
    let red = demushkin_reduce(z)?;
    if tail_form_s(&red.form).is_some() {
        return Ok(red.chain);
    }
    if z.m() <= 3 && z.operator().pow(z.shape.p().pow(z.m() as u32)).is_zero() {
        if let PremetOutcome::Regular(r) = premet_regular_reduce(z)? {
            return Ok(r.chain);
        }
    }
    Err(Error::Precondition(format!(
        "no d_0 + u form found for the tail (needs 1 < s < m), Demushkin form {:?}",
        red.form
    )))
}

/// Tail normalization followed by `semi_reduce`; one chain for both.
pub fn semi_normalize(l: &SemidirectAlgebra, a: &SemidirectElement) -> Result<SemiReduction> {
    l.check_shapes(a)?;
    let pre = tail_normalization(&a.tail)?;
    let moved = semi_apply_chain(l, &pre, a)?;
    let mut red = semi_reduce(l, &moved)?;
    let mut chain = pre;
    chain.extend(std::mem::take(&mut red.chain));
    red.chain = chain;
    Ok(red)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CriterionRoute {
    /// The image in D is not nilpotent.
    TailNotNilpotent,
    /// Tail in W_(0): decided by s_0.
    TailInW0,
    /// Reduced to D_1 with the given s and chain length: decided by s_0′.
    Reduced { s: usize, moves: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NilpotencyVerdict {
    pub direct: bool,
    pub criterion: bool,
    pub route: CriterionRoute,
    /// s_0 or s_0′, whichever the route used.
    pub witness: Vec<Fe>,
}

pub fn semi_is_nilpotent_direct(l: &SemidirectAlgebra, a: &SemidirectElement) -> bool {
    l.nilpotency_index(a).is_some()
}

/// The criterion verdict without the direct test.
pub fn semi_nilpotency_criterion(l: &SemidirectAlgebra, a: &SemidirectElement) -> Result<(bool, CriterionRoute, Vec<Fe>)> {
    l.check_shapes(a)?;
    if operator_nilpotency_index(&a.tail.operator()).is_none() {
        return Ok((false, CriterionRoute::TailNotNilpotent, Vec::new()));
    }
    if a.tail.filtration_degree().is_none_or(|d| d >= 0) {
        let s0 = a.constant_part();
        return Ok((l.s.is_nilpotent(&s0), CriterionRoute::TailInW0, s0));
    }
    let red = semi_normalize(l, a)?;
    let verdict = l.s.is_nilpotent(&red.s0);
    Ok((verdict, CriterionRoute::Reduced { s: red.s, moves: red.chain.len() }, red.s0))
}

/// Direct operator nilpotency and the criterion; disagreement is an error.
pub fn semi_is_nilpotent(l: &SemidirectAlgebra, a: &SemidirectElement) -> Result<NilpotencyVerdict> {
    let direct = semi_is_nilpotent_direct(l, a);
    let (criterion, route, witness) = semi_nilpotency_criterion(l, a)?;
    if direct != criterion {
        return Err(Error::Internal(format!(
            "nilpotency verdicts disagree (direct {direct}, criterion {criterion} via {route:?}) on {}",
            a.serialize()
        )));
    }
    Ok(NilpotencyVerdict { direct, criterion, route, witness })
}

/// `semi_is_nilpotent` over a batch, both verdicts computed per element in parallel.
pub fn semi_is_nilpotent_batch(l: &SemidirectAlgebra, elems: &[SemidirectElement]) -> Vec<Result<NilpotencyVerdict>> {
    map_indices(elems.len(), |i| semi_is_nilpotent(l, &elems[i]))
}

/// Random u ∈ (I∂_1 + ⋯ + I∂_m) ∩ W(m;1)_(p−1).
pub fn random_iw_p1(shape: &AlgebraShape, s: usize, rng: &mut SplitMix64, num: u64, den: u64) -> DerivationElement {
    let p = shape.p() as usize;
    let f = shape.field();
    let mut u = DerivationElement::zero(shape);
    for g in u.f.iter_mut() {
        for r in 0..shape.dim() {
            if shape.index(r).degree() >= p && !in_os(shape, r, s) && rng.below(den) < num {
                g.add_term(r, rng.nonzero_fe(f));
            }
        }
    }
    u
}

/// z = d_0 + u with random u.
pub fn random_z(shape: &AlgebraShape, s: usize, rng: &mut SplitMix64) -> DerivationElement {
    d0(shape, s).add(&random_iw_p1(shape, s, rng, 1, 4))
}

/// z^{[p]^s} ∈ W(m;1)_(0).
pub fn zps_in_w0(z: &DerivationElement, s: usize) -> Result<bool> {
    let w = witt_pth_iter(z, s as u32)?;
    Ok(w.filtration_degree().is_none_or(|d| d >= 0))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MSpaceReport {
    pub dim: usize,
    /// M ⊕ k·x_1^{p−1}⋯x_s^{p−1} = O(m;1).
    pub complement_ok: bool,
}

/// M = I + z(m).
pub fn m_space_report(z: &DerivationElement, s: usize) -> MSpaceReport {
    let shape = &z.shape;
    let mut span = Span::new(shape.field(), shape.dim());
    for r in 1..shape.dim() {
        let x = DPElement::monomial_rank(shape, r, Fe::ONE);
        if !in_os(shape, r, s) {
            span.insert(&x.to_dense());
        }
        span.insert(&z.apply(&x).to_dense());
    }
    let dim = span.rank();
    span.insert(&top_monomial_in(shape, s).to_dense());
    MSpaceReport { dim, complement_ok: dim + 1 == shape.dim() && span.rank() == shape.dim() }
}

/// W = I∂_1 + ⋯ + I∂_m on random members: inside W_(0), closed under the bracket,
/// the p-map and ad d_0.
pub fn iw_closure_check(shape: &AlgebraShape, s: usize, rng: &mut SplitMix64, samples: usize) -> Result<bool> {
    let in_w = |d: &DerivationElement| d.f.iter().all(|g| in_ideal(g, s));
    let random_w = |rng: &mut SplitMix64| {
        let mut u = DerivationElement::zero(shape);
        for g in u.f.iter_mut() {
            for r in 0..shape.dim() {
                if !in_os(shape, r, s) && rng.below(3) == 0 {
                    g.add_term(r, rng.nonzero_fe(shape.field()));
                }
            }
        }
        u
    };
    let d = d0(shape, s);
    for _ in 0..samples {
        let a = random_w(rng);
        let b = random_w(rng);
        let ok = a.filtration_degree().is_none_or(|k| k >= 0)
            && in_w(&a.bracket(&b))
            && in_w(&witt_pth(&a)?)
            && in_w(&d.bracket(&a));
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}
