//! The Zassenhaus algebra W(1;n), its minimal p-envelope L_p = W(1;n) + Σ k∂^{p^i},
//! the e_α presentation over F_q, and the reductions of nilpotent elements.

use std::collections::HashMap;

use crate::automorphisms::{AdmissibleAutomorphism, Chain, Move, Reduction};
use crate::cartan_algebras::DerivationElement;
use crate::divided_power::{AlgebraShape, DPElement};
use crate::error::{Error, Result};
use crate::linalg::{rank_of, vec_add, vec_scale, Mat, Span};
use crate::restricted::{derivation_from_operator, operator_semisimple_rank, p_closure, MatrixAlgebra, Realization};
use crate::rng::SplitMix64;
use crate::scalars::{Fe, FieldSpec};

/// O(1;n) over the given field.
pub fn envelope_shape(field: &FieldSpec, n: u32) -> Result<AlgebraShape> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    AlgebraShape::new(field, &[n])
}

/// ∂^k on O(1;n): x^(a) ↦ x^(a−k).
pub fn shift_down(f: &DPElement, k: usize) -> DPElement {
    let mut out = DPElement::zero(&f.shape);
    for (&r, &c) in f.coeffs.range(k..) {
        out.coeffs.insert(r - k, c);
    }
    out
}

/// Matrix of ∂^k on O(1;n).
pub fn shift_operator(shape: &AlgebraShape, k: usize) -> Mat {
    let d = shape.dim();
    let mut m = Mat::zeros(shape.field(), d, d);
    for a in k..d {
        m.set(a - k, a, Fe::ONE);
    }
    m
}

/// f∂ + Σ_{i=1}^{n−1} α_i ∂^{p^i}.
#[derive(Clone, PartialEq, Eq)]
pub struct PEnvelopeElement {
    pub poly: DPElement,
    /// `tails[i-1]` is the coefficient of ∂^{p^i}.
    pub tails: Vec<Fe>,
}

impl std::fmt::Debug for PEnvelopeElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let fs = self.poly.field();
        write!(f, "({})∂", self.poly.pretty())?;
        let p = fs.p();
        for (i, &c) in self.tails.iter().enumerate() {
            if !c.is_zero() {
                write!(f, " + {}·∂^{}", fs.fmt_fe(c), p.pow(i as u32 + 1))?;
            }
        }
        Ok(())
    }
}

impl PEnvelopeElement {
    pub fn zero(shape: &AlgebraShape) -> Self {
        PEnvelopeElement { poly: DPElement::zero(shape), tails: vec![Fe::ZERO; shape.heights()[0] as usize - 1] }
    }

    pub fn from_poly(poly: &DPElement) -> Self {
        let mut e = Self::zero(&poly.shape);
        e.poly = poly.clone();
        e
    }

    /// c·x^(a)∂.
    pub fn term(shape: &AlgebraShape, a: usize, c: Fe) -> Self {
        Self::from_poly(&DPElement::monomial_rank(shape, a, c))
    }

    /// ∂^{p^i}; zero for i ≥ n.
    pub fn dpow(shape: &AlgebraShape, i: usize) -> Self {
        let mut e = Self::zero(shape);
        if i == 0 {
            e.poly = DPElement::one(shape);
        } else if i <= e.tails.len() {
            e.tails[i - 1] = Fe::ONE;
        }
        e
    }

    /// ∂ + Σ λ_i ∂^{p^i}.
    pub fn torus_sum(shape: &AlgebraShape, lambdas: &[Fe]) -> Self {
        let mut e = Self::dpow(shape, 0);
        for (t, &l) in e.tails.iter_mut().zip(lambdas) {
            *t = l;
        }
        e
    }

    pub fn shape(&self) -> &AlgebraShape {
        &self.poly.shape
    }

    pub fn field(&self) -> &FieldSpec {
        self.poly.field()
    }

    pub fn n(&self) -> usize {
        self.tails.len() + 1
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero() && self.tails.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, o: &Self) -> Self {
        let f = self.field();
        PEnvelopeElement {
            poly: self.poly.add(&o.poly),
            tails: self.tails.iter().zip(&o.tails).map(|(&a, &b)| f.add(a, b)).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(self.field().neg(Fe::ONE))
    }

    pub fn scale(&self, c: Fe) -> Self {
        let f = self.field();
        PEnvelopeElement { poly: self.poly.scale(c), tails: self.tails.iter().map(|&a| f.mul(a, c)).collect() }
    }

    /// Coefficient of ∂^{p^i} (i = 0 is the constant term of the polynomial part).
    pub fn beta(&self, i: usize) -> Fe {
        if i == 0 {
            self.poly.constant_term()
        } else {
            self.tails.get(i - 1).copied().unwrap_or(Fe::ZERO)
        }
    }

    /// Dense coordinates: poly coefficients, then the tails.
    pub fn to_vec(&self) -> Vec<Fe> {
        let mut v = self.poly.to_dense();
        v.extend_from_slice(&self.tails);
        v
    }

    pub fn from_vec(shape: &AlgebraShape, v: &[Fe]) -> Self {
        let d = shape.dim();
        PEnvelopeElement { poly: DPElement::from_dense(shape, &v[..d]), tails: v[d..].to_vec() }
    }

    /// Action on O(1;n).
    pub fn operator(&self) -> Mat {
        let shape = self.shape();
        let mut m = DerivationElement::term(&self.poly, 0).operator();
        let p = shape.p() as usize;
        let f = self.field();
        for (i, &c) in self.tails.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let k = p.pow(i as u32 + 1);
            for a in k..shape.dim() {
                let v = f.add(m.get(a - k, a), c);
                m.set(a - k, a, v);
            }
        }
        m
    }

    /// Membership in L_(0) = span{x^(a)∂ : a ≥ 1}; any nonzero tail lies outside.
    pub fn in_l0(&self) -> bool {
        self.tails.iter().all(|c| c.is_zero()) && self.poly.constant_term().is_zero()
    }

    /// Membership in L_(j) = span{x^(a)∂ : a ≥ j+1}.
    pub fn in_filtration(&self, j: usize) -> bool {
        self.tails.iter().all(|c| c.is_zero()) && self.poly.coeffs.keys().all(|&r| r > j)
    }

    /// Application as a derivation of O(1;n).
    pub fn apply(&self, g: &DPElement) -> DPElement {
        let mut out = self.poly.mul(&g.partial(0));
        let p = self.shape().p() as usize;
        for (i, &c) in self.tails.iter().enumerate() {
            if !c.is_zero() {
                out = out.add(&shift_down(g, p.pow(i as u32 + 1)).scale(c));
            }
        }
        out
    }

    pub fn serialize(&self) -> String {
        format!("poly{{{}}};tails{{{}}}", self.poly.serialize(), self.field().fmt_list(&self.tails))
    }

    pub fn parse(field: &FieldSpec, s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad envelope element `{s}`"));
        let rest = s.trim().strip_prefix("poly{").ok_or_else(bad)?;
        let (poly, tails) = rest.split_once("};tails{").ok_or_else(bad)?;
        let tails = tails.strip_suffix('}').ok_or_else(bad)?;
        let poly = DPElement::parse(field, poly)?;
        if poly.shape.m() != 1 {
            return Err(Error::ShapeMismatch("envelope elements live over O(1;n)".into()));
        }
        let tails = field.parse_list(tails)?;
        let e = PEnvelopeElement { poly, tails };
        if e.tails.len() + 1 != e.shape().heights()[0] as usize {
            return Err(Error::Parse(format!("expected {} tails", e.shape().heights()[0] - 1)));
        }
        Ok(e)
    }
}

/// [A, B] in L_p.
pub fn lp_bracket(a: &PEnvelopeElement, b: &PEnvelopeElement) -> Result<PEnvelopeElement> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch("envelope elements over different O(1;n)".into()));
    }
    let shape = a.shape();
    let p = shape.p() as usize;
    let (f, g) = (&a.poly, &b.poly);
    let mut poly = f.mul(&g.partial(0)).sub(&g.mul(&f.partial(0)));
    for i in 0..a.tails.len() {
        let k = p.pow(i as u32 + 1);
        if !a.tails[i].is_zero() {
            poly = poly.add(&shift_down(g, k).scale(a.tails[i]));
        }
        if !b.tails[i].is_zero() {
            poly = poly.sub(&shift_down(f, k).scale(b.tails[i]));
        }
    }
    Ok(PEnvelopeElement::from_poly(&poly))
}

/// Reads an element of L_p off an operator on O(1;n) and checks it reproduces the operator.
pub fn lp_decompose(shape: &AlgebraShape, m: &Mat) -> Result<PEnvelopeElement> {
    let n = shape.heights()[0] as usize;
    let p = shape.p() as usize;
    let poly = DPElement::from_dense(shape, &m.col(1));
    let mut e = PEnvelopeElement::from_poly(&poly);
    let rest = m.sub(&e.operator());
    for j in 1..n {
        e.tails[j - 1] = rest.get(0, p.pow(j as u32));
    }
    if &e.operator() != m {
        return Err(Error::NotInSpan("operator escapes L_p".into()));
    }
    Ok(e)
}

/// A^{[p]} computed as the operator p-th power.
pub fn lp_pth(a: &PEnvelopeElement) -> Result<PEnvelopeElement> {
    lp_decompose(a.shape(), &a.operator().pow(a.shape().p()))
}

/// A^{[p]^k}.
pub fn lp_pth_iter(a: &PEnvelopeElement, k: u32) -> Result<PEnvelopeElement> {
    let mut cur = a.clone();
    for _ in 0..k {
        cur = lp_pth(&cur)?;
    }
    Ok(cur)
}

/// L_p acting on O(1;n), coordinates as in `PEnvelopeElement::to_vec`.
#[derive(Clone, Debug)]
pub struct LpRealization {
    pub shape: AlgebraShape,
}

impl LpRealization {
    pub fn new(field: &FieldSpec, n: u32) -> Result<Self> {
        Ok(LpRealization { shape: envelope_shape(field, n)? })
    }

    pub fn element(&self, v: &[Fe]) -> PEnvelopeElement {
        PEnvelopeElement::from_vec(&self.shape, v)
    }

    pub fn basis(&self) -> Vec<PEnvelopeElement> {
        let d = Realization::dim(self);
        (0..d)
            .map(|i| {
                let mut v = vec![Fe::ZERO; d];
                v[i] = Fe::ONE;
                self.element(&v)
            })
            .collect()
    }
}

impl Realization for LpRealization {
    fn field(&self) -> &FieldSpec {
        self.shape.field()
    }
    fn dim(&self) -> usize {
        self.shape.dim() + self.shape.heights()[0] as usize - 1
    }
    fn module_dim(&self) -> usize {
        self.shape.dim()
    }
    fn basis_tag(&self) -> String {
        format!("x^(a)∂ and ∂^(p^i) over {}", self.shape.serialize())
    }
    fn operator(&self, x: &[Fe]) -> Mat {
        self.element(x).operator()
    }
    fn decompose(&self, a: &Mat) -> Result<Vec<Fe>> {
        Ok(lp_decompose(&self.shape, a)?.to_vec())
    }
    fn bracket(&self, x: &[Fe], y: &[Fe]) -> Vec<Fe> {
        lp_bracket(&self.element(x), &self.element(y)).expect("same shape").to_vec()
    }
}

/// Random element of L_p with each coordinate nonzero with probability num/den.
pub fn random_lp_element(shape: &AlgebraShape, rng: &mut SplitMix64, num: u64, den: u64) -> PEnvelopeElement {
    let d = shape.dim() + shape.heights()[0] as usize - 1;
    PEnvelopeElement::from_vec(shape, &rng.sparse_fe_vec(shape.field(), d, num, den))
}

/// D^{p^n} = 0, the nilpotency condition in L_p.
pub fn lp_is_nilpotent(d: &PEnvelopeElement) -> bool {
    let p = d.shape().p();
    let n = d.n() as u32;
    d.operator().pow(p.pow(n)).is_zero()
}

// ---------------------------------------------------------------------------
// Regular/singular classification and the reductions.

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NilpotentTag {
    Regular,
    Singular,
}

#[derive(Clone, Debug)]
pub struct NilpotentClass {
    pub tag: NilpotentTag,
    /// D^{[p]^{n−1}}.
    pub witness: PEnvelopeElement,
    pub witness_in_l0: bool,
    /// Yao–Shu chain for regular inputs α_0∂ + f∂ without tails.
    pub reduction: Option<Reduction<PEnvelopeElement>>,
}

pub fn classify_nilpotent(d: &PEnvelopeElement) -> Result<NilpotentClass> {
    if !lp_is_nilpotent(d) {
        return Err(Error::Precondition("element is not nilpotent: D^{p^n} ≠ 0".into()));
    }
    let n = d.n() as u32;
    let witness = lp_pth_iter(d, n - 1)?;
    let in_l0 = witness.in_l0();
    let tag = if in_l0 { NilpotentTag::Singular } else { NilpotentTag::Regular };
    let reduction = if tag == NilpotentTag::Regular
        && d.tails.iter().all(|c| c.is_zero())
        && !d.poly.constant_term().is_zero()
    {
        Some(yao_shu_reduce(d)?)
    } else {
        None
    };
    Ok(NilpotentClass { tag, witness, witness_in_l0: in_l0, reduction })
}

fn is_p_power(k: usize, p: usize) -> bool {
    let mut v = 1;
    while v < k {
        v *= p;
    }
    v == k
}

fn apply_step(
    chain: &mut Chain,
    cur: &PEnvelopeElement,
    phi: AdmissibleAutomorphism,
) -> Result<PEnvelopeElement> {
    let next = phi.apply_lp(cur)?;
    chain.moves.push(Move::Admissible(phi));
    Ok(next)
}

/// Brings α_0∂ + f∂ to ∂ + Σ_i l_i x^(p^i−1)∂ by admissible automorphisms.
pub fn yao_shu_reduce(d: &PEnvelopeElement) -> Result<Reduction<PEnvelopeElement>> {
    if d.tails.iter().any(|c| !c.is_zero()) {
        return Err(Error::Precondition("yao_shu_reduce expects an element of W(1;n)".into()));
    }
    let shape = d.shape().clone();
    let a0 = d.poly.constant_term();
    if a0.is_zero() {
        return Err(Error::Precondition("α_0 = 0".into()));
    }
    let p = shape.p() as usize;
    let top = shape.dim() - 1;
    let mut chain = Chain::default();
    let mut cur = d.clone();
    if a0 != Fe::ONE {
        let phi = AdmissibleAutomorphism::new(&DPElement::monomial_rank(&shape, 1, a0))?;
        cur = apply_step(&mut chain, &cur, phi)?;
    }
    for k in 1..top {
        let mu = cur.poly.coeff(k);
        if mu.is_zero() || is_p_power(k + 1, p) {
            continue;
        }
        let mut y = DPElement::var(&shape, 0);
        y.add_term(k + 1, mu);
        cur = apply_step(&mut chain, &cur, AdmissibleAutomorphism::new(&y)?)?;
        if !cur.poly.coeff(k).is_zero() {
            return Err(Error::Internal(format!("coefficient of x^({k}) survived its clearing step")));
        }
    }
    let ok = cur.poly.constant_term() == Fe::ONE
        && cur.poly.coeffs.keys().all(|&r| r == 0 || is_p_power(r + 1, p))
        && cur.tails.iter().all(|c| c.is_zero());
    if !ok {
        return Err(Error::Internal(format!("Yao–Shu form not reached: {cur:?}")));
    }
    Ok(Reduction { chain, form: cur })
}

/// Brings ∂^{p^t} + Σ_{i<t} β_i∂^{p^i} + g∂ to ∂^{p^t} + Σβ_i∂^{p^i} + x^(p^n−p^t)h∂.
pub fn tyurin_reduce(d: &PEnvelopeElement, t: usize) -> Result<Reduction<PEnvelopeElement>> {
    let shape = d.shape().clone();
    let n = d.n();
    let p = shape.p() as usize;
    if p <= 3 {
        return Err(Error::InvalidParameter("tyurin_reduce needs p > 3".into()));
    }
    if t == 0 || t >= n {
        return Err(Error::InvalidParameter(format!("t = {t} outside 1..n−1")));
    }
    if d.tails[t - 1] != Fe::ONE || d.tails[t..].iter().any(|c| !c.is_zero()) {
        return Err(Error::Precondition("element is not of the form ∂^{p^t} + lower tails + g∂".into()));
    }
    let pt = p.pow(t as u32);
    let q = shape.dim();
    let mut chain = Chain::default();
    let mut cur = d.clone();
    for l in 1..q - pt {
        let gamma = cur.poly.coeff(l);
        if gamma.is_zero() {
            continue;
        }
        if is_p_power(pt + l, p) {
            return Err(Error::NonAdmissibleStep(format!(
                "clearing x^({l}) needs x ↦ x + γx^({}), a p-power exponent",
                pt + l
            )));
        }
        let mut y = DPElement::var(&shape, 0);
        y.add_term(pt + l, gamma);
        let before = cur.clone();
        cur = apply_step(&mut chain, &cur, AdmissibleAutomorphism::new(&y)?)?;
        let kept = (0..l).all(|r| cur.poly.coeff(r) == before.poly.coeff(r)) && cur.tails == before.tails;
        if !cur.poly.coeff(l).is_zero() || !kept {
            return Err(Error::Internal(format!("Tyurin step at x^({l}) disturbed lower terms")));
        }
    }
    if cur.poly.coeffs.keys().any(|&r| r != 0 && r < q - pt) {
        return Err(Error::Internal("Tyurin form not reached".into()));
    }
    Ok(Reduction { chain, form: cur })
}

/// Random nilpotent element of L_p: a mix of L_(1) elements, conjugates of
/// ∂ + Σλ_i∂^{p^i}, and rejection samples.
pub fn sample_nilpotent(shape: &AlgebraShape, rng: &mut SplitMix64) -> Result<PEnvelopeElement> {
    let f = shape.field().clone();
    let n = shape.heights()[0] as usize;
    let dim = shape.dim();
    match rng.below(3) {
        0 => {
            let mut v = rng.sparse_fe_vec(&f, dim, 1, 2);
            v[0] = Fe::ZERO;
            v[1] = Fe::ZERO;
            Ok(PEnvelopeElement::from_poly(&DPElement::from_dense(shape, &v)))
        }
        1 => {
            let lambdas = rng.fe_vec(&f, n - 1);
            let phi = AdmissibleAutomorphism::random(shape, rng);
            phi.apply_lp(&PEnvelopeElement::torus_sum(shape, &lambdas))
        }
        _ => {
            for _ in 0..2000 {
                let d = random_lp_element(shape, rng, 1, 3);
                if !d.is_zero() && lp_is_nilpotent(&d) {
                    return Ok(d);
                }
            }
            let phi = AdmissibleAutomorphism::random(shape, rng);
            phi.apply_lp(&PEnvelopeElement::dpow(shape, n - 1))
        }
    }
}

// ---------------------------------------------------------------------------
// Checks in the f∂ presentation.

/// dim of the centralizer of ∂ + Σλ_i∂^{p^i} in L and in L_p.
pub fn torus_centralizer_dims(shape: &AlgebraShape, lambdas: &[Fe]) -> Result<(usize, usize)> {
    let r = LpRealization { shape: shape.clone() };
    let d = PEnvelopeElement::torus_sum(shape, lambdas);
    let cols: Vec<Vec<Fe>> = r.basis().iter().map(|b| lp_bracket(&d, b).map(|c| c.to_vec())).collect::<Result<_>>()?;
    let dim = r.dim();
    let full = Mat::from_cols(shape.field(), dim, &cols);
    let in_l = Mat::from_cols(shape.field(), dim, &cols[..shape.dim()]);
    Ok((shape.dim() - in_l.rank(), dim - full.rank()))
}

/// Image in W(n;1) under O(1;n) ≅ O(n;1), x^(a) ↦ Π x_i^{(a_{i−1})} over the base-p digits.
pub fn iota_embed(d: &PEnvelopeElement) -> Result<DerivationElement> {
    let target = AlgebraShape::restricted(d.field(), d.n())?;
    derivation_from_operator(&target, &d.operator())
}

/// 𝒟_1 = ∂_1 + Σ_{l=1}^{n−1} (−1)^l x_1^{p−1}⋯x_l^{p−1}∂_{l+1}.
pub fn iota_partial_formula(field: &FieldSpec, n: usize) -> Result<DerivationElement> {
    let shape = AlgebraShape::restricted(field, n)?;
    let p = shape.p() as usize;
    let mut d = DerivationElement::partial(&shape, 0);
    for l in 1..n {
        let mut a = vec![0usize; n];
        for x in a.iter_mut().take(l) {
            *x = p - 1;
        }
        let sign = if l % 2 == 0 { Fe::ONE } else { field.neg(Fe::ONE) };
        d.f[l] = DPElement::ordinary_monomial(&shape, &a, sign);
    }
    Ok(d)
}

#[derive(Clone, Debug)]
pub struct IotaReport {
    pub partial_matches: bool,
    pub top_terms_match: bool,
    pub homomorphism_pairs: usize,
    pub homomorphism_ok: bool,
    pub nilpotency_transfer_ok: bool,
}

/// Checks ι(∂) = 𝒟_1, ι(l x^(p^i−1)∂) = (−1)^i l x_1^{p−1}⋯x_i^{p−1}∂_1, the
/// homomorphism property and nilpotency transfer on random pairs.
pub fn iota_check(field: &FieldSpec, n: u32, pairs: usize, seed: u64) -> Result<IotaReport> {
    let shape = envelope_shape(field, n)?;
    let n = n as usize;
    let p = shape.p() as usize;
    let partial_matches = iota_embed(&PEnvelopeElement::dpow(&shape, 0))? == iota_partial_formula(field, n)?;
    let target = AlgebraShape::restricted(field, n)?;
    let mut top_terms_match = true;
    for i in 1..=n {
        let l = field.from_int(i as i64 + 1);
        let src = PEnvelopeElement::term(&shape, p.pow(i as u32) - 1, l);
        let mut a = vec![0usize; n];
        for x in a.iter_mut().take(i) {
            *x = p - 1;
        }
        let sign = if i % 2 == 0 { l } else { field.neg(l) };
        let want = DerivationElement::term(&DPElement::ordinary_monomial(&target, &a, sign), 0);
        top_terms_match &= iota_embed(&src)? == want;
    }
    let r = LpRealization { shape: shape.clone() };
    let results = crate::maybe_rayon::map_indices(pairs, |k| -> Result<(bool, bool)> {
        let mut rng = SplitMix64::substream(seed, k as u64);
        let a = random_lp_element(&shape, &mut rng, 1, 2);
        let b = random_lp_element(&shape, &mut rng, 1, 2);
        let ia = iota_embed(&a)?;
        let ib = iota_embed(&b)?;
        let hom = iota_embed(&lp_bracket(&a, &b)?)? == ia.bracket(&ib)
            && iota_embed(&lp_pth(&a)?)? == derivation_from_operator(&target, &ia.operator().pow(p as u64))?;
        let nil = crate::restricted::is_nilpotent(&r, &a.to_vec())
            == ia.operator().pow((p as u64).pow(n as u32)).is_zero();
        Ok((hom, nil))
    });
    let mut hom_ok = true;
    let mut nil_ok = true;
    for res in results {
        let (h, nl) = res?;
        hom_ok &= h;
        nil_ok &= nl;
    }
    Ok(IotaReport {
        partial_matches,
        top_terms_match,
        homomorphism_pairs: pairs,
        homomorphism_ok: hom_ok,
        nilpotency_transfer_ok: nil_ok,
    })
}

#[derive(Clone, Debug)]
pub struct LieGReport {
    pub dim: usize,
    pub expected: usize,
    pub tangents_match: bool,
    pub p_power_exponents_rejected: bool,
}

/// Tangent vectors at t = 0 of the admissible families x ↦ x + t x^(j), j ≠ p^l,
/// recovered by interpolation over the field and compared with x^(j)∂.
pub fn lie_g_check(field: &FieldSpec, n: u32) -> Result<LieGReport> {
    let shape = envelope_shape(field, n)?;
    let q_field = field.order();
    let dim = shape.dim();
    if (q_field as usize) < dim {
        return Err(Error::InvalidParameter("interpolation needs |F| ≥ p^n".into()));
    }
    let p = shape.p() as usize;
    let js: Vec<usize> = (1..dim).filter(|&j| j == 1 || !is_p_power(j, p)).collect();
    let rejected = (1..n as usize).all(|l| {
        let mut y = DPElement::var(&shape, 0);
        y.add_term(p.pow(l as u32), Fe::ONE);
        AdmissibleAutomorphism::new(&y).is_err()
    });
    let outcomes = crate::maybe_rayon::map_indices(js.len(), |k| -> Result<(bool, Vec<Fe>)> {
        let j = js[k];
        let mut c1 = Mat::zeros(field, dim, dim);
        for t in field.elements().skip(1) {
            let mut y = DPElement::var(&shape, 0);
            y.add_term(j, t);
            let table = crate::divided_power::dp_divided_power_table(&y)?;
            let cols: Vec<Vec<Fe>> = table.iter().map(|g| g.to_dense()).collect();
            let pt = Mat::from_cols(field, dim, &cols);
            c1 = c1.add(&pt.scale(field.pow(t, q_field - 2)));
        }
        let c1 = c1.scale(field.neg(Fe::ONE));
        let want = PEnvelopeElement::term(&shape, j, Fe::ONE).operator();
        Ok((c1 == want, c1.data))
    });
    let mut all = true;
    let mut vecs = Vec::new();
    for o in outcomes {
        let (ok, v) = o?;
        all &= ok;
        vecs.push(v);
    }
    Ok(LieGReport {
        dim: rank_of(field, dim * dim, &vecs),
        expected: dim - n as usize,
        tangents_match: all,
        p_power_exponents_rejected: rejected,
    })
}

// ---------------------------------------------------------------------------
// The e_α presentation.

/// W(1;n) with basis e_α, α ∈ F_q ⊂ F_{p^M}, and [e_α, e_β] = (β−α)e_{α+β}.
#[derive(Clone, Debug)]
pub struct ZassenhausEAlgebra {
    pub field: FieldSpec,
    pub n: u32,
    pub q: usize,
    /// F_q in ascending code order; `elems[0] = 0`.
    pub elems: Vec<Fe>,
    index: HashMap<Fe, usize>,
    /// Generator of F_q^*.
    pub xi: Fe,
}

pub fn zass_e_algebra(p: u64, n: u32, m: u32) -> Result<ZassenhausEAlgebra> {
    if m < n {
        return Err(Error::InvalidParameter(format!("M = {m} < n = {n}: F_q does not embed")));
    }
    if !m.is_multiple_of(n) {
        return Err(Error::InvalidParameter(format!("F_{{p^{n}}} is a subfield of F_{{p^{m}}} only when n | M")));
    }
    let field = FieldSpec::new(p, m)?;
    ZassenhausEAlgebra::new(&field, n)
}

impl ZassenhausEAlgebra {
    pub fn new(field: &FieldSpec, n: u32) -> Result<Self> {
        let elems = field.subfield(n)?;
        let index = elems.iter().enumerate().map(|(i, &a)| (a, i)).collect();
        let q = elems.len();
        let xi = field.pow(field.primitive(), (field.order() - 1) / (q as u64 - 1));
        Ok(ZassenhausEAlgebra { field: field.clone(), n, q, elems, index, xi })
    }

    pub fn index_of(&self, a: Fe) -> usize {
        self.index[&a]
    }

    pub fn basis_vec(&self, alpha: Fe) -> Vec<Fe> {
        let mut v = vec![Fe::ZERO; self.q];
        v[self.index_of(alpha)] = Fe::ONE;
        v
    }

    pub fn bracket(&self, x: &[Fe], y: &[Fe]) -> Vec<Fe> {
        let f = &self.field;
        let mut out = vec![Fe::ZERO; self.q];
        for (i, &cx) in x.iter().enumerate() {
            if cx.is_zero() {
                continue;
            }
            for (j, &cy) in y.iter().enumerate() {
                if cy.is_zero() {
                    continue;
                }
                let (a, b) = (self.elems[i], self.elems[j]);
                let c = f.mul(f.mul(cx, cy), f.sub(b, a));
                let k = self.index_of(f.add(a, b));
                out[k] = f.add(out[k], c);
            }
        }
        out
    }

    /// ad x on L in the e_α basis.
    pub fn ad(&self, x: &[Fe]) -> Mat {
        let cols: Vec<Vec<Fe>> = (0..self.q).map(|j| self.bracket(x, &self.unit(j))).collect();
        Mat::from_cols(&self.field, self.q, &cols)
    }

    fn unit(&self, j: usize) -> Vec<Fe> {
        let mut v = vec![Fe::ZERO; self.q];
        v[j] = Fe::ONE;
        v
    }

    pub fn ad_basis(&self) -> Vec<Mat> {
        (0..self.q).map(|j| self.ad(&self.unit(j))).collect()
    }

    /// The p-envelope as ad-operators; the first q basis elements are ad e_α.
    pub fn envelope(&self) -> Result<MatrixAlgebra> {
        let basis = p_closure(&self.field, &self.ad_basis());
        MatrixAlgebra::new(&self.field, self.q, basis, "p-closure of ad e_α")
    }

    /// σ(e_α) = ξ^{−1} e_{ξα}.
    pub fn sigma(&self) -> Mat {
        let f = &self.field;
        let xi_inv = f.inv(self.xi).expect("ξ ≠ 0");
        let mut m = Mat::zeros(f, self.q, self.q);
        for (j, &a) in self.elems.iter().enumerate() {
            m.set(self.index_of(f.mul(self.xi, a)), j, xi_inv);
        }
        m
    }
}

#[derive(Clone, Debug)]
pub struct TorusReport {
    pub periodic: bool,
    pub independent: bool,
    pub commuting: bool,
    pub semisimple_rank: usize,
    pub powers_in_envelope: bool,
}

/// ad e_0, (ad e_0)^p, …, (ad e_0)^{p^{n−1}}.
pub fn e0_torus_powers(z: &ZassenhausEAlgebra) -> Vec<Mat> {
    let p = z.field.p();
    let mut out = vec![z.ad(&z.basis_vec(Fe::ZERO))];
    for _ in 1..z.n {
        let next = out.last().unwrap().pow(p);
        out.push(next);
    }
    out
}

pub fn e0_torus(z: &ZassenhausEAlgebra) -> Result<TorusReport> {
    let p = z.field.p();
    let powers = e0_torus_powers(z);
    let a = &powers[0];
    let periodic = a.pow(p.pow(z.n)) == *a;
    let independent = rank_of(&z.field, z.q * z.q, &powers.iter().map(|m| m.data.clone()).collect::<Vec<_>>())
        == z.n as usize;
    let commuting = powers.iter().all(|x| powers.iter().all(|y| x.commutator(y).is_zero()));
    let env = z.envelope()?;
    let powers_in_envelope = powers.iter().all(|m| env.contains(m));
    Ok(TorusReport {
        periodic,
        independent,
        commuting,
        semisimple_rank: operator_semisimple_rank(a, 2 * z.q),
        powers_in_envelope,
    })
}

#[derive(Clone, Debug)]
pub struct SigmaReport {
    pub automorphism: bool,
    pub order_ok: bool,
    /// (i, dim ker(σ − ξ^i)) for 0 ≤ i ≤ q−2.
    pub multiplicities: Vec<(usize, usize)>,
    pub multiplicities_ok: bool,
}

pub fn sigma_grading_check(z: &ZassenhausEAlgebra) -> SigmaReport {
    let f = &z.field;
    let s = z.sigma();
    let automorphism = (0..z.q).all(|i| {
        (0..z.q).all(|j| {
            let (a, b) = (z.unit(i), z.unit(j));
            s.mul_vec(&z.bracket(&a, &b)) == z.bracket(&s.mul_vec(&a), &s.mul_vec(&b))
        })
    });
    let order_ok = s.pow(z.q as u64 - 1) == Mat::identity(f, z.q);
    let id = Mat::identity(f, z.q);
    let multiplicities: Vec<(usize, usize)> = (0..z.q - 1)
        .map(|i| {
            let c = f.pow(z.xi, i as u64);
            (i, s.sub(&id.scale(c)).nullspace().len())
        })
        .collect();
    let multiplicities_ok = multiplicities.iter().all(|&(i, m)| m == if i == z.q - 2 { 2 } else { 1 });
    SigmaReport { automorphism, order_ok, multiplicities, multiplicities_ok }
}

/// Graded data of σ: L[i] for 0 ≤ i ≤ q−3, the top vector v, and L_(0).
#[derive(Clone, Debug)]
pub struct EFiltration {
    pub graded: Vec<Vec<Fe>>,
    pub v: Vec<Fe>,
    pub l0: Vec<Vec<Fe>>,
    /// Lines of L[−1] whose sum with the graded pieces is a subalgebra.
    pub closed_lines: usize,
    /// σ-fixed toral element.
    pub u: Vec<Fe>,
}

fn is_subalgebra(z: &ZassenhausEAlgebra, basis: &[Vec<Fe>]) -> bool {
    let mut span = Span::new(&z.field, z.q);
    for b in basis {
        span.insert(b);
    }
    basis.iter().enumerate().all(|(i, a)| basis[i + 1..].iter().all(|b| span.contains(&z.bracket(a, b))))
}

/// Locates L_(0) as ⊕_{i=0}^{q−3} L[i] ⊕ kv, with v the unique line of L[−1] that closes up.
pub fn e_filtration(z: &ZassenhausEAlgebra) -> Result<EFiltration> {
    let f = &z.field;
    let s = z.sigma();
    let id = Mat::identity(f, z.q);
    let mut graded = Vec::new();
    for i in 0..z.q - 2 {
        let ker = s.sub(&id.scale(f.pow(z.xi, i as u64))).nullspace();
        if ker.len() != 1 {
            return Err(Error::Internal(format!("σ-eigenspace L[{i}] has dimension {}", ker.len())));
        }
        graded.push(ker[0].clone());
    }
    let minus = s.sub(&id.scale(f.pow(z.xi, z.q as u64 - 2))).nullspace();
    if minus.len() != 2 {
        return Err(Error::Internal(format!("L[−1] has dimension {}", minus.len())));
    }
    let mut lines = vec![minus[1].clone()];
    for c in f.elements() {
        lines.push(vec_add(f, &minus[0], &vec_scale(f, c, &minus[1])));
    }
    let closed: Vec<Vec<Fe>> = crate::maybe_rayon::map_indices(lines.len(), |k| {
        let mut basis = graded.clone();
        basis.push(lines[k].clone());
        is_subalgebra(z, &basis)
    })
    .into_iter()
    .zip(&lines)
    .filter(|(ok, _)| *ok)
    .map(|(_, l)| l.clone())
    .collect();
    if closed.len() != 1 {
        return Err(Error::Internal(format!("{} lines of L[−1] close L_(0)", closed.len())));
    }
    let v = closed[0].clone();
    let mut l0 = graded.clone();
    l0.push(v.clone());
    let u = toral_normalize(z, &graded[0])?;
    Ok(EFiltration { graded, v, l0, closed_lines: closed.len(), u })
}

/// Scales u0 so that (ad u)^p = ad u.
fn toral_normalize(z: &ZassenhausEAlgebra, u0: &[Fe]) -> Result<Vec<Fe>> {
    let f = &z.field;
    let a = z.ad(u0);
    let ap = a.pow(f.p());
    let k = a.data.iter().position(|c| !c.is_zero()).ok_or_else(|| Error::Internal("u0 is central".into()))?;
    let c = f.div(ap.data[k], a.data[k]).unwrap();
    if ap != a.scale(c) || c.is_zero() {
        return Err(Error::Internal("ad u0 is not a multiple of a toral element".into()));
    }
    let target = f.inv(c).unwrap();
    let t = f
        .elements()
        .find(|&t| f.pow(t, f.p() - 1) == target)
        .ok_or_else(|| Error::Internal("no (p−1)-th root for the toral scaling".into()))?;
    let u = vec_scale(f, t, u0);
    let au = z.ad(&u);
    if au.pow(f.p()) != au {
        return Err(Error::Internal("normalized u is not toral".into()));
    }
    Ok(u)
}

#[derive(Clone, Debug)]
pub struct SeparationReport {
    pub points: u64,
    pub nilpotent: u64,
    pub singular: u64,
    /// Coordinates (λ_0, …, λ_{n−1}, μ) of nonzero singular points.
    pub witnesses: Vec<Vec<Fe>>,
    pub only_zero: bool,
}

/// Enumerates V = span{e_0^{p^i}} ⊕ ku over the field and counts points of N_sing.
pub fn singular_separation_check(p: u64, n: u32, m: u32) -> Result<SeparationReport> {
    let z = zass_e_algebra(p, n, m)?;
    let filt = e_filtration(&z)?;
    separation_on(&z, &filt, false)
}

/// Same enumeration without rayon.
pub fn singular_separation_check_seq(p: u64, n: u32, m: u32) -> Result<SeparationReport> {
    let z = zass_e_algebra(p, n, m)?;
    let filt = e_filtration(&z)?;
    separation_on(&z, &filt, true)
}

pub fn separation_on(z: &ZassenhausEAlgebra, filt: &EFiltration, sequential: bool) -> Result<SeparationReport> {
    let f = &z.field;
    let fq = f.order();
    let dims = z.n as usize + 1;
    let points = fq
        .checked_pow(dims as u32)
        .filter(|&v| v <= 10_000_000)
        .ok_or_else(|| Error::SizeGuard(format!("{fq}^{dims} points")))?;
    let mut gens = e0_torus_powers(z);
    gens.push(z.ad(&filt.u));
    let mut l0 = Span::new(f, z.q * z.q);
    for b in &filt.l0 {
        l0.insert(&z.ad(b).data);
    }
    let pn1 = f.p().pow(z.n - 1);
    let p = f.p();
    let eval = |k: usize| -> Option<(bool, Option<Vec<Fe>>)> {
        let mut rest = k as u64;
        let mut coords = Vec::with_capacity(dims);
        let mut y = Mat::zeros(f, z.q, z.q);
        for g in &gens {
            let c = Fe((rest % fq) as u32);
            rest /= fq;
            coords.push(c);
            if !c.is_zero() {
                y = y.add(&g.scale(c));
            }
        }
        let y1 = y.pow(pn1);
        if !y1.pow(p).is_zero() {
            return None;
        }
        let singular = l0.contains(&y1.data);
        let nonzero = coords.iter().any(|c| !c.is_zero());
        Some((singular, (singular && nonzero).then_some(coords)))
    };
    let results: Vec<Option<(bool, Option<Vec<Fe>>)>> = if sequential {
        crate::maybe_rayon::map_indices_seq(points as usize, eval)
    } else {
        crate::maybe_rayon::map_indices(points as usize, eval)
    };
    let mut rep = SeparationReport { points, nilpotent: 0, singular: 0, witnesses: Vec::new(), only_zero: true };
    for r in results.into_iter().flatten() {
        rep.nilpotent += 1;
        if r.0 {
            rep.singular += 1;
        }
        if let Some(w) = r.1 {
            rep.witnesses.push(w);
        }
    }
    rep.only_zero = rep.witnesses.is_empty() && rep.singular == 1;
    Ok(rep)
}

/// dim of the p-envelope in the e-presentation.
pub fn e_envelope_dim(z: &ZassenhausEAlgebra) -> Result<usize> {
    Ok(z.envelope()?.basis.len())
}
