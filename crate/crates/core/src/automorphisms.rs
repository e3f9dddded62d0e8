//! Admissible automorphisms of O(1;n), automorphisms of O(m;1), conjugation of
//! derivations, exp(ad) automorphisms and the Demushkin/Premet reductions in W(n;1).

use crate::cartan_algebras::DerivationElement;
use crate::divided_power::{dp_divided_power_table, dp_inverse, AlgebraShape, DPElement};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::restricted::derivation_from_operator;
use crate::rng::SplitMix64;
use crate::scalars::{Fe, FieldSpec};
use crate::zassenhaus::{lp_decompose, lp_pth_iter, PEnvelopeElement};

fn is_p_power(k: usize, p: usize) -> bool {
    let mut v = 1;
    while v < k {
        v *= p;
    }
    v == k
}

/// Φ with Φ(x) = y = Σ α_i x^(i), extended by Φ(x^(a)) = y^(a).
#[derive(Clone, PartialEq, Eq)]
pub struct AdmissibleAutomorphism {
    pub y: DPElement,
    mat: Mat,
    inv: Mat,
}

impl std::fmt::Debug for AdmissibleAutomorphism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Φ(x) = {}", self.y.pretty())
    }
}

impl AdmissibleAutomorphism {
    pub fn new(y: &DPElement) -> Result<Self> {
        let shape = &y.shape;
        if shape.m() != 1 {
            return Err(Error::ShapeMismatch("admissible automorphisms act on O(1;n)".into()));
        }
        if !y.constant_term().is_zero() {
            return Err(Error::InvalidParameter("Φ(x) must lie in the maximal ideal".into()));
        }
        if y.coeff(1).is_zero() {
            return Err(Error::InvalidParameter("α_1 = 0".into()));
        }
        let p = shape.p() as usize;
        if let Some(&r) = y.coeffs.keys().find(|&&r| r > 1 && is_p_power(r, p)) {
            return Err(Error::InvalidParameter(format!("α_{r} ≠ 0 at a p-power index")));
        }
        let table = dp_divided_power_table(y)?;
        let cols: Vec<Vec<Fe>> = table.iter().map(|g| g.to_dense()).collect();
        let mat = Mat::from_cols(shape.field(), shape.dim(), &cols);
        let inv = mat.inverse()?;
        Ok(AdmissibleAutomorphism { y: y.clone(), mat, inv })
    }

    /// From α_1, …, α_{p^n−1}.
    pub fn from_coeffs(shape: &AlgebraShape, coeffs: &[Fe]) -> Result<Self> {
        if coeffs.len() + 1 != shape.dim() {
            return Err(Error::InvalidParameter(format!("expected {} coefficients", shape.dim() - 1)));
        }
        let mut y = DPElement::zero(shape);
        for (i, &c) in coeffs.iter().enumerate() {
            y.add_term(i + 1, c);
        }
        Self::new(&y)
    }

    pub fn identity(shape: &AlgebraShape) -> Self {
        Self::new(&DPElement::var(shape, 0)).expect("x is admissible")
    }

    pub fn random(shape: &AlgebraShape, rng: &mut SplitMix64) -> Self {
        let f = shape.field();
        let p = shape.p() as usize;
        let mut y = DPElement::monomial_rank(shape, 1, rng.nonzero_fe(f));
        for r in 2..shape.dim() {
            if !is_p_power(r, p) && rng.below(2) == 0 {
                y.add_term(r, rng.fe(f));
            }
        }
        Self::new(&y).expect("valid by construction")
    }

    pub fn shape(&self) -> &AlgebraShape {
        &self.y.shape
    }

    pub fn coeffs(&self) -> Vec<Fe> {
        self.y.to_dense()[1..].to_vec()
    }

    pub fn matrix(&self) -> &Mat {
        &self.mat
    }

    pub fn inverse_matrix(&self) -> &Mat {
        &self.inv
    }

    pub fn apply_poly(&self, f: &DPElement) -> DPElement {
        DPElement::from_dense(&f.shape, &self.mat.mul_vec(&f.to_dense()))
    }

    pub fn inverse_apply_poly(&self, f: &DPElement) -> DPElement {
        DPElement::from_dense(&f.shape, &self.inv.mul_vec(&f.to_dense()))
    }

    /// Φ(f∂ + Σα_i∂^{p^i}) = (y′)^{−1}Φ(f)∂ + Σ α_i Φ(∂)^{[p]^i}, Φ(∂) = (y′)^{−1}∂.
    pub fn apply_lp(&self, d: &PEnvelopeElement) -> Result<PEnvelopeElement> {
        let yinv = dp_inverse(&self.y.partial(0))?;
        let mut out = PEnvelopeElement::from_poly(&yinv.mul(&self.apply_poly(&d.poly)));
        let phi_d = PEnvelopeElement::from_poly(&yinv);
        for (i, &c) in d.tails.iter().enumerate() {
            if !c.is_zero() {
                out = out.add(&lp_pth_iter(&phi_d, i as u32 + 1)?.scale(c));
            }
        }
        Ok(out)
    }

    /// Φ∘D∘Φ^{−1} computed on operators.
    pub fn conjugate_operator(&self, d: &PEnvelopeElement) -> Result<PEnvelopeElement> {
        lp_decompose(self.shape(), &self.mat.mul(&d.operator()).mul(&self.inv))
    }
}

/// σ with σ(x_i) = f_i on O(m;1), extended multiplicatively.
#[derive(Clone, PartialEq, Eq)]
pub struct TruncatedAutomorphism {
    pub shape: AlgebraShape,
    pub images: Vec<DPElement>,
    mat: Mat,
    inv: Mat,
}

impl std::fmt::Debug for TruncatedAutomorphism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> =
            self.images.iter().enumerate().map(|(i, g)| format!("x{} ↦ {}", i + 1, g.pretty())).collect();
        write!(f, "σ[{}]", parts.join("; "))
    }
}

impl TruncatedAutomorphism {
    pub fn new(images: &[DPElement]) -> Result<Self> {
        let shape = images.first().ok_or_else(|| Error::InvalidParameter("no images".into()))?.shape.clone();
        if !shape.is_restricted() || images.len() != shape.m() || images.iter().any(|g| g.shape != shape) {
            return Err(Error::ShapeMismatch("images must be m elements of O(m;1)".into()));
        }
        let f = shape.field().clone();
        let m = shape.m();
        if images.iter().any(|g| !g.constant_term().is_zero()) {
            return Err(Error::InvalidParameter("images must lie in the maximal ideal".into()));
        }
        let mut jac = Mat::zeros(&f, m, m);
        for (i, g) in images.iter().enumerate() {
            for j in 0..m {
                jac.set(i, j, g.coeff(shape.stride(j)));
            }
        }
        if jac.rank() < m {
            return Err(Error::InvalidParameter("Jacobian is not a unit".into()));
        }
        let p = shape.p() as usize;
        let mut pw: Vec<Vec<DPElement>> = Vec::with_capacity(m);
        for g in images {
            let mut row = vec![DPElement::one(&shape)];
            for e in 1..p {
                let ie = f.inv(f.from_int(e as i64)).unwrap();
                let next = row[e - 1].mul(g).scale(ie);
                row.push(next);
            }
            pw.push(row);
        }
        let dim = shape.dim();
        let cols: Vec<Vec<Fe>> = (0..dim)
            .map(|r| {
                let mut acc = DPElement::one(&shape);
                for (i, &a) in shape.digits(r).iter().enumerate() {
                    if a > 0 {
                        acc = acc.mul(&pw[i][a as usize]);
                    }
                }
                acc.to_dense()
            })
            .collect();
        let mat = Mat::from_cols(&f, dim, &cols);
        let inv = mat.inverse()?;
        Ok(TruncatedAutomorphism { shape, images: images.to_vec(), mat, inv })
    }

    pub fn identity(shape: &AlgebraShape) -> Self {
        Self::new(&(0..shape.m()).map(|i| DPElement::var(shape, i)).collect::<Vec<_>>()).expect("identity")
    }

    /// x_i ↔ x_j (0-based).
    pub fn swap(shape: &AlgebraShape, i: usize, j: usize) -> Result<Self> {
        let mut im: Vec<DPElement> = (0..shape.m()).map(|k| DPElement::var(shape, k)).collect();
        check_index(shape, i)?;
        check_index(shape, j)?;
        im.swap(i, j);
        Self::new(&im)
    }

    /// x_i ↦ c x_i.
    pub fn scaling(shape: &AlgebraShape, i: usize, c: Fe) -> Result<Self> {
        check_index(shape, i)?;
        let mut im: Vec<DPElement> = (0..shape.m()).map(|k| DPElement::var(shape, k)).collect();
        im[i] = im[i].scale(c);
        Self::new(&im)
    }

    /// x_i ↦ x_i + g.
    pub fn shift(shape: &AlgebraShape, i: usize, g: &DPElement) -> Result<Self> {
        check_index(shape, i)?;
        let mut im: Vec<DPElement> = (0..shape.m()).map(|k| DPElement::var(shape, k)).collect();
        im[i] = im[i].add(g);
        Self::new(&im)
    }

    /// Random element: invertible linear part plus sparse higher terms.
    pub fn random(shape: &AlgebraShape, rng: &mut SplitMix64) -> Self {
        let f = shape.field();
        let m = shape.m();
        loop {
            let im: Vec<DPElement> = (0..m)
                .map(|_| {
                    let mut g = DPElement::zero(shape);
                    for j in 0..m {
                        g.add_term(shape.stride(j), rng.fe(f));
                    }
                    for r in 1..shape.dim() {
                        if shape.digits(r).iter().map(|&d| d as usize).sum::<usize>() >= 2 && rng.below(4) == 0 {
                            g.add_term(r, rng.fe(f));
                        }
                    }
                    g
                })
                .collect();
            if let Ok(s) = Self::new(&im) {
                return s;
            }
        }
    }

    pub fn matrix(&self) -> &Mat {
        &self.mat
    }

    pub fn apply(&self, f: &DPElement) -> DPElement {
        DPElement::from_dense(&self.shape, &self.mat.mul_vec(&f.to_dense()))
    }

    pub fn inverse_apply(&self, f: &DPElement) -> DPElement {
        DPElement::from_dense(&self.shape, &self.inv.mul_vec(&f.to_dense()))
    }

    /// σ^{−1}(x_j).
    pub fn inverse_images(&self) -> Vec<DPElement> {
        (0..self.shape.m())
            .map(|j| DPElement::from_dense(&self.shape, &self.inv.col(self.shape.stride(j))))
            .collect()
    }

    pub fn inverse(&self) -> Result<Self> {
        Self::new(&self.inverse_images())
    }

    /// D^σ = Σ_{i,j} g_i^σ (∂_i σ^{−1}(x_j))^σ ∂_j.
    pub fn conjugate(&self, d: &DerivationElement) -> Result<DerivationElement> {
        if d.shape != self.shape {
            return Err(Error::ShapeMismatch("derivation and automorphism over different O(m;1)".into()));
        }
        let inv_im = self.inverse_images();
        let m = self.shape.m();
        let gs: Vec<DPElement> = d.f.iter().map(|g| self.apply(g)).collect();
        let mut out = DerivationElement::zero(&self.shape);
        for j in 0..m {
            let mut acc = DPElement::zero(&self.shape);
            for (i, gi) in gs.iter().enumerate() {
                if gi.is_zero() {
                    continue;
                }
                let dij = inv_im[j].partial(i);
                if !dij.is_zero() {
                    acc = acc.add(&gi.mul(&self.apply(&dij)));
                }
            }
            out.f[j] = acc;
        }
        Ok(out)
    }

    /// σ∘D∘σ^{−1} computed on operators.
    pub fn conjugate_operator(&self, d: &DerivationElement) -> Result<DerivationElement> {
        derivation_from_operator(&self.shape, &self.mat.mul(&d.operator()).mul(&self.inv))
    }
}

fn check_index(shape: &AlgebraShape, i: usize) -> Result<()> {
    if i >= shape.m() {
        return Err(Error::IndexOutOfRange(format!("variable {} of {}", i + 1, shape.m())));
    }
    Ok(())
}

pub fn truncated_conjugate(sigma: &TruncatedAutomorphism, d: &DerivationElement) -> Result<DerivationElement> {
    sigma.conjugate(d)
}

pub fn admissible_apply_poly(phi: &AdmissibleAutomorphism, f: &DPElement) -> Result<DPElement> {
    if &f.shape != phi.shape() {
        return Err(Error::ShapeMismatch("polynomial and Φ over different O(1;n)".into()));
    }
    Ok(phi.apply_poly(f))
}

pub fn admissible_apply_lp(phi: &AdmissibleAutomorphism, d: &PEnvelopeElement) -> Result<PEnvelopeElement> {
    if d.shape() != phi.shape() {
        return Err(Error::ShapeMismatch("element and Φ over different O(1;n)".into()));
    }
    phi.apply_lp(d)
}

/// exp(A) = Σ_{k<p} A^k/k! for an operator with A^p = 0; acts by conjugation.
#[derive(Clone, Debug)]
pub struct ExpAd {
    pub exp: Mat,
    pub exp_inv: Mat,
}

impl ExpAd {
    pub fn new(a: &Mat) -> Result<Self> {
        let f = a.field.clone();
        let p = f.p();
        let ap = a.pow(p);
        if !ap.is_zero() {
            let nz = ap.data.iter().filter(|c| !c.is_zero()).count();
            return Err(Error::Precondition(format!("(ad u)^p ≠ 0: {nz} nonzero entries in the p-th power")));
        }
        let series = |sign: Fe| {
            let mut acc = Mat::identity(&f, a.rows);
            let mut term = Mat::identity(&f, a.rows);
            for k in 1..p {
                let c = f.mul(sign, f.inv(f.from_int(k as i64)).unwrap());
                term = term.mul(a).scale(c);
                acc = acc.add(&term);
            }
            acc
        };
        let exp = series(Fe::ONE);
        let exp_inv = series(f.neg(Fe::ONE));
        if exp.mul(&exp_inv) != Mat::identity(&f, a.rows) {
            return Err(Error::Internal("exp(A)·exp(−A) ≠ 1".into()));
        }
        Ok(ExpAd { exp, exp_inv })
    }

    /// exp(A) X exp(−A).
    pub fn conjugate(&self, x: &Mat) -> Mat {
        self.exp.mul(x).mul(&self.exp_inv)
    }

    pub fn apply_vec(&self, v: &[Fe]) -> Vec<Fe> {
        self.exp.mul_vec(v)
    }
}

/// Elementary automorphism recorded in a reduction chain. Indices are 0-based in
/// memory and 1-based when serialized.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Move {
    Swap(usize, usize),
    Scale(usize, Fe),
    Shift(usize, DPElement),
    Admissible(AdmissibleAutomorphism),
    /// Serialized semidirect element u; the move is exp(ad u).
    ExpAd(String),
}

impl Move {
    pub fn serialize(&self, field: &FieldSpec) -> String {
        match self {
            Move::Swap(i, j) => format!("swap({},{})", i + 1, j + 1),
            Move::Scale(i, c) => format!("scale({},{})", i + 1, field.fmt_list(&[*c])),
            Move::Shift(i, g) => format!("shift({},{})", i + 1, g.serialize()),
            Move::Admissible(phi) => format!("admissible({})", field.fmt_list(&phi.coeffs())),
            Move::ExpAd(s) => format!("expad({s})"),
        }
    }

    /// `shape` is needed to rebuild admissible moves.
    pub fn parse(field: &FieldSpec, shape: Option<&AlgebraShape>, s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("bad move `{s}`"));
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let body = rest.strip_suffix(')').ok_or_else(bad)?;
        let idx = |t: &str| -> Result<usize> {
            let v: usize = t.trim().parse().map_err(|_| bad())?;
            v.checked_sub(1).ok_or_else(bad)
        };
        match name {
            "swap" => {
                let (a, b) = body.split_once(',').ok_or_else(bad)?;
                Ok(Move::Swap(idx(a)?, idx(b)?))
            }
            "scale" => {
                let (a, c) = body.split_once(',').ok_or_else(bad)?;
                let c = field.parse_list(c)?;
                if c.len() != 1 {
                    return Err(bad());
                }
                Ok(Move::Scale(idx(a)?, c[0]))
            }
            "shift" => {
                let (a, g) = body.split_once(',').ok_or_else(bad)?;
                Ok(Move::Shift(idx(a)?, DPElement::parse(field, g.trim())?))
            }
            "admissible" => {
                let shape = shape.ok_or_else(|| Error::Parse("admissible move needs the ambient O(1;n)".into()))?;
                Ok(Move::Admissible(AdmissibleAutomorphism::from_coeffs(shape, &field.parse_list(body)?)?))
            }
            "expad" => Ok(Move::ExpAd(body.to_string())),
            _ => Err(bad()),
        }
    }

    pub fn truncated(&self, shape: &AlgebraShape) -> Result<TruncatedAutomorphism> {
        match self {
            Move::Swap(i, j) => TruncatedAutomorphism::swap(shape, *i, *j),
            Move::Scale(i, c) => TruncatedAutomorphism::scaling(shape, *i, *c),
            Move::Shift(i, g) => TruncatedAutomorphism::shift(shape, *i, g),
            _ => Err(Error::InvalidParameter(format!("{self:?} is not an automorphism of O(m;1)"))),
        }
    }
}

/// Ordered list of moves, applied left to right.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Chain {
    pub moves: Vec<Move>,
}

impl Chain {
    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn extend(&mut self, o: Chain) {
        self.moves.extend(o.moves);
    }

    pub fn to_strings(&self, field: &FieldSpec) -> Vec<String> {
        self.moves.iter().map(|m| m.serialize(field)).collect()
    }

    pub fn to_json(&self, field: &FieldSpec) -> String {
        serde_json::to_string(&self.to_strings(field)).expect("strings serialize")
    }

    pub fn from_json(field: &FieldSpec, shape: Option<&AlgebraShape>, s: &str) -> Result<Self> {
        let items: Vec<String> = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let moves = items.iter().map(|m| Move::parse(field, shape, m)).collect::<Result<_>>()?;
        Ok(Chain { moves })
    }

    pub fn apply_witt(&self, d: &DerivationElement) -> Result<DerivationElement> {
        let mut cur = d.clone();
        for mv in &self.moves {
            cur = mv.truncated(&d.shape)?.conjugate(&cur)?;
        }
        Ok(cur)
    }

    pub fn apply_lp(&self, d: &PEnvelopeElement) -> Result<PEnvelopeElement> {
        let mut cur = d.clone();
        for mv in &self.moves {
            match mv {
                Move::Admissible(phi) => cur = phi.apply_lp(&cur)?,
                _ => return Err(Error::InvalidParameter(format!("{mv:?} does not act on L_p"))),
            }
        }
        Ok(cur)
    }
}

/// A reduction: the chain and the form it produces.
#[derive(Clone, Debug)]
pub struct Reduction<T> {
    pub chain: Chain,
    pub form: T,
}

// ---------------------------------------------------------------------------
// Reductions in W(n;1).

/// D^{[p]} in W(m;1).
pub fn witt_pth(d: &DerivationElement) -> Result<DerivationElement> {
    derivation_from_operator(&d.shape, &d.operator().pow(d.shape.p()))
}

pub fn witt_pth_iter(d: &DerivationElement, k: u32) -> Result<DerivationElement> {
    derivation_from_operator(&d.shape, &d.operator().pow(d.shape.p().pow(k)))
}

/// ∂_1 + x_1^{p−1}∂_2 + ⋯ + x_1^{p−1}⋯x_{k−1}^{p−1}∂_k inside W(m;1).
pub fn regular_nilpotent_in(shape: &AlgebraShape, k: usize) -> DerivationElement {
    let p = shape.p() as usize;
    let mut d = DerivationElement::partial(shape, 0);
    for l in 1..k {
        let mut a = vec![0usize; shape.m()];
        for x in a.iter_mut().take(l) {
            *x = p - 1;
        }
        d.f[l] = DPElement::ordinary_monomial(shape, &a, Fe::ONE);
    }
    d
}

/// x_1^{p−1}⋯x_k^{p−1} with ordinary powers.
pub fn top_monomial_in(shape: &AlgebraShape, k: usize) -> DPElement {
    let p = shape.p() as usize;
    let mut a = vec![0usize; shape.m()];
    for x in a.iter_mut().take(k) {
        *x = p - 1;
    }
    DPElement::ordinary_monomial(shape, &a, Fe::ONE)
}

fn push_move(chain: &mut Chain, cur: &DerivationElement, mv: Move) -> Result<DerivationElement> {
    let sigma = mv.truncated(&cur.shape)?;
    let next = sigma.conjugate(cur)?;
    chain.moves.push(mv);
    Ok(next)
}

/// Terms of f whose x_1-exponent is below p−1.
fn below_top_in_x1(f: &DPElement) -> DPElement {
    let p = f.shape.p() as u32;
    let mut out = DPElement::zero(&f.shape);
    for (&r, &c) in &f.coeffs {
        if f.shape.digits(r)[0] < p - 1 {
            out.coeffs.insert(r, c);
        }
    }
    out
}

/// ∫ dx_1: x^(a) ↦ x^(a+ε_1), for f without x_1^(p−1) terms.
fn integrate_x1(f: &DPElement) -> DPElement {
    let mut out = DPElement::zero(&f.shape);
    for (&r, &c) in &f.coeffs {
        out.coeffs.insert(r + 1, c);
    }
    out
}

/// Conjugates z ∉ W_(0) to ∂_1 + x_1^{p−1}Σφ_i∂_i with φ_i free of x_1.
pub fn demushkin_reduce(z: &DerivationElement) -> Result<Reduction<DerivationElement>> {
    demushkin_reduce_in(z, z.m())
}

/// Demushkin reduction using only the first k variables; z must not involve the others.
pub fn demushkin_reduce_in(z: &DerivationElement, k: usize) -> Result<Reduction<DerivationElement>> {
    let shape = z.shape.clone();
    if !shape.is_restricted() {
        return Err(Error::ShapeMismatch("demushkin_reduce works in W(m;1)".into()));
    }
    if k == 0 || k > shape.m() {
        return Err(Error::InvalidParameter(format!("k = {k}")));
    }
    let f = shape.field().clone();
    let p = shape.p() as usize;
    let mut chain = Chain::default();
    let mut cur = z.clone();
    let mu = (0..k)
        .find(|&i| !cur.f[i].constant_term().is_zero())
        .ok_or_else(|| Error::Precondition("z ∈ W_(0)".into()))?;
    if mu != 0 {
        cur = push_move(&mut chain, &cur, Move::Swap(0, mu))?;
    }
    let c = cur.f[0].constant_term();
    if c != Fe::ONE {
        cur = push_move(&mut chain, &cur, Move::Scale(0, c))?;
    }
    for j in 1..k {
        let a = cur.f[j].constant_term();
        if !a.is_zero() {
            cur = push_move(&mut chain, &cur, Move::Shift(j, DPElement::var(&shape, 0).scale(a)))?;
        }
    }
    if cur.f[0].constant_term() != Fe::ONE || (1..k).any(|j| !cur.f[j].constant_term().is_zero()) {
        return Err(Error::Internal("constant terms not normalized".into()));
    }
    for d in 1..=k * (p - 1) {
        for i in 0..k {
            let h = below_top_in_x1(&cur.f[i].homogeneous_part(d));
            if h.is_zero() {
                continue;
            }
            cur = push_move(&mut chain, &cur, Move::Shift(i, integrate_x1(&h)))?;
        }
        for i in 0..k {
            if !below_top_in_x1(&cur.f[i].homogeneous_part(d)).is_zero() {
                return Err(Error::Internal(format!("degree {d} of ∂_{} not cleared", i + 1)));
            }
        }
    }
    let mut rest = cur.f[0].clone();
    rest.add_term(0, f.neg(Fe::ONE));
    let ok = below_top_in_x1(&rest).is_zero()
        && (1..k).all(|i| below_top_in_x1(&cur.f[i]).is_zero());
    if !ok {
        return Err(Error::Internal("Demushkin form not reached".into()));
    }
    Ok(Reduction { chain, form: cur })
}

/// φ_i of a Demushkin form ∂_1 + x_1^{p−1}Σφ_i∂_i (ordinary x_1^{p−1}).
pub fn demushkin_phis(form: &DerivationElement) -> Vec<DPElement> {
    let shape = &form.shape;
    let f = shape.field();
    let p = shape.p() as usize;
    // x_1^{p−1} = (p−1)!·x_1^(p−1) = −x_1^(p−1)
    let minus_one = f.neg(Fe::ONE);
    form.f
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let mut out = DPElement::zero(shape);
            for (&r, &c) in &g.coeffs {
                if i == 0 && r == 0 {
                    continue;
                }
                out.add_term(r - (p - 1), f.mul(c, minus_one));
            }
            out
        })
        .collect()
}

#[derive(Clone, Debug)]
pub enum PremetOutcome {
    Regular(Reduction<DerivationElement>),
    /// y^{[p]^{n−1}} ∈ W_(0).
    Singular { witness: DerivationElement },
}

/// Conjugates a nilpotent y with y^{p^{n−1}} ∉ W(n;1)_(0) to 𝒟.
pub fn premet_regular_reduce(y: &DerivationElement) -> Result<PremetOutcome> {
    let shape = y.shape.clone();
    let n = shape.m();
    if !shape.is_restricted() {
        return Err(Error::ShapeMismatch("premet_regular_reduce works in W(n;1)".into()));
    }
    if n > 3 {
        return Err(Error::InvalidParameter(format!("n = {n} > 3 is not supported")));
    }
    let p = shape.p();
    if !y.operator().pow(p.pow(n as u32)).is_zero() {
        return Err(Error::Precondition("y is not nilpotent".into()));
    }
    let z = witt_pth_iter(y, n as u32 - 1)?;
    if z.filtration_degree() != Some(-1) {
        return Ok(PremetOutcome::Singular { witness: z });
    }
    if *y == regular_nilpotent_in(&shape, n) {
        return Ok(PremetOutcome::Regular(Reduction { chain: Chain::default(), form: y.clone() }));
    }
    let chain = regular_in(y, n)?;
    let form = chain.apply_witt(y)?;
    if form != regular_nilpotent_in(&shape, n) {
        return Err(Error::Internal("Premet chain does not land on 𝒟".into()));
    }
    Ok(PremetOutcome::Regular(Reduction { chain, form }))
}

fn regular_in(y: &DerivationElement, k: usize) -> Result<Chain> {
    let shape = y.shape.clone();
    let f = shape.field().clone();
    let p = shape.p() as usize;
    let z = witt_pth_iter(y, k as u32 - 1)?;
    let red = demushkin_reduce_in(&z, k)?;
    if red.form != DerivationElement::partial(&shape, 0) {
        return Err(Error::Internal(format!("y^(p^{}) did not reduce to ∂_1: {:?}", k - 1, red.form)));
    }
    let mut chain = red.chain;
    let mut cur = chain.apply_witt(y)?;
    if k == 1 {
        return Ok(chain);
    }
    cur = push_move(&mut chain, &cur, Move::Swap(0, k - 1))?;
    if cur.f.iter().any(|g| !g.partial(k - 1).is_zero()) {
        return Err(Error::Internal("centralizer of ∂_k not free of x_k".into()));
    }
    let mut y1 = cur.clone();
    y1.f[k - 1] = DPElement::zero(&shape);
    let sub = regular_in(&y1, k - 1)?;
    cur = sub.apply_witt(&cur)?;
    chain.extend(sub);
    let d0 = regular_nilpotent_in(&shape, k - 1);
    if cur.f[..k - 1] != d0.f[..k - 1] {
        return Err(Error::Internal("lower block is not 𝒟_0".into()));
    }
    let psi = cur.f[k - 1].clone();
    // Work on monomials in x_1..x_{k−1}: ranks below p^{k−1}.
    let sub_dim = p.pow(k as u32 - 1);
    let full = d0.operator();
    let mut op = Mat::zeros(&f, sub_dim, sub_dim);
    for r in 0..sub_dim {
        for c in 0..sub_dim {
            op.set(r, c, full.get(r, c));
        }
    }
    let psi_v = psi.to_dense()[..sub_dim].to_vec();
    let lowered = op.pow(sub_dim as u64 - 1).mul_vec(&psi_v);
    let sign = if (k - 1).is_multiple_of(2) { Fe::ONE } else { f.neg(Fe::ONE) };
    let alpha = f.mul(sign, lowered[0]);
    if alpha.is_zero() {
        return Err(Error::Internal("𝒟_0^{top}(ψ) is not a unit".into()));
    }
    let top = top_monomial_in(&shape, k - 1).scale(alpha);
    let rhs: Vec<Fe> = psi.sub(&top).to_dense()[..sub_dim].to_vec();
    let mut phi_v = op.solve(&rhs).ok_or_else(|| Error::Internal("ψ − α·top not in the image of 𝒟_0".into()))?;
    phi_v[0] = Fe::ZERO;
    phi_v.resize(shape.dim(), Fe::ZERO);
    let phi = DPElement::from_dense(&shape, &phi_v);
    if !phi.is_zero() {
        cur = push_move(&mut chain, &cur, Move::Shift(k - 1, phi))?;
    }
    if alpha != Fe::ONE {
        cur = push_move(&mut chain, &cur, Move::Scale(k - 1, alpha))?;
    }
    if cur != regular_nilpotent_in(&shape, k) {
        return Err(Error::Internal(format!("level {k} did not reach 𝒟: {cur:?}")));
    }
    Ok(chain)
}
