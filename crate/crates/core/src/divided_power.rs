//! The divided power algebra O(m;n) with basis x^(a), 0 ≤ a_i < p^{n_i}.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalars::{lucas, Fe, FieldSpec};

struct ShapeInner {
    field: FieldSpec,
    m: usize,
    n: Vec<u32>,
    split: Option<usize>,
    bounds: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
    // digits[r*m + i] = i-th exponent of the monomial with rank r
    digits: Vec<u32>,
    // binom[i][a*bound_i + b] = C(a+b, a) mod p, or 0 when a+b ≥ bound_i
    binom: Vec<Vec<Fe>>,
}

/// Shape of O(m;n): number of variables, heights and the ground field.
#[derive(Clone)]
pub struct AlgebraShape(Arc<ShapeInner>);

impl PartialEq for AlgebraShape {
    fn eq(&self, o: &Self) -> bool {
        Arc::ptr_eq(&self.0, &o.0) || (self.0.n == o.0.n && self.0.field == o.0.field)
    }
}
impl Eq for AlgebraShape {}

impl fmt::Debug for AlgebraShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "O({};{:?}) over F_{}^{}", self.0.m, self.0.n, self.0.field.p(), self.0.field.degree())
    }
}

const MAX_DIM: usize = 1 << 20;

impl AlgebraShape {
    pub fn new(field: &FieldSpec, n: &[u32]) -> Result<Self> {
        Self::with_split(field, n, None)
    }

    /// O(m;1) with m variables.
    pub fn restricted(field: &FieldSpec, m: usize) -> Result<Self> {
        Self::new(field, &vec![1; m])
    }

    pub fn with_split(field: &FieldSpec, n: &[u32], split: Option<usize>) -> Result<Self> {
        if n.is_empty() || n.contains(&0) {
            return Err(Error::InvalidParameter(format!("bad heights {n:?}")));
        }
        let m = n.len();
        if let Some(s) = split {
            if s == 0 || s > m {
                return Err(Error::InvalidParameter(format!("split {s} outside 1..={m}")));
            }
        }
        let p = field.p() as usize;
        let mut bounds = Vec::with_capacity(m);
        let mut strides = Vec::with_capacity(m);
        let mut dim = 1usize;
        for &h in n {
            let b = p
                .checked_pow(h)
                .ok_or_else(|| Error::InvalidParameter("algebra too large".into()))?;
            strides.push(dim);
            bounds.push(b);
            dim = dim
                .checked_mul(b)
                .filter(|&d| d <= MAX_DIM)
                .ok_or_else(|| Error::InvalidParameter(format!("dim of O({m};{n:?}) exceeds {MAX_DIM}")))?;
        }
        let mut digits = vec![0u32; dim * m];
        for r in 0..dim {
            let mut v = r;
            for i in 0..m {
                digits[r * m + i] = (v % bounds[i]) as u32;
                v /= bounds[i];
            }
        }
        let mut cache: HashMap<usize, Vec<Fe>> = HashMap::new();
        let binom = bounds
            .iter()
            .map(|&b| {
                cache
                    .entry(b)
                    .or_insert_with(|| {
                        let mut t = vec![Fe::ZERO; b * b];
                        for a in 0..b {
                            for c in 0..b - a {
                                t[a * b + c] = Fe(lucas((a + c) as u64, a as u64, p as u64) as u32);
                            }
                        }
                        t
                    })
                    .clone()
            })
            .collect();
        Ok(AlgebraShape(Arc::new(ShapeInner {
            field: field.clone(),
            m,
            n: n.to_vec(),
            split,
            bounds,
            strides,
            dim,
            digits,
            binom,
        })))
    }

    pub fn field(&self) -> &FieldSpec {
        &self.0.field
    }
    pub fn m(&self) -> usize {
        self.0.m
    }
    pub fn heights(&self) -> &[u32] {
        &self.0.n
    }
    pub fn split(&self) -> Option<usize> {
        self.0.split
    }
    pub fn dim(&self) -> usize {
        self.0.dim
    }
    pub fn bound(&self, i: usize) -> usize {
        self.0.bounds[i]
    }
    pub fn p(&self) -> u64 {
        self.0.field.p()
    }
    pub fn is_restricted(&self) -> bool {
        self.0.n.iter().all(|&h| h == 1)
    }

    #[inline]
    pub fn digits(&self, rank: usize) -> &[u32] {
        &self.0.digits[rank * self.0.m..(rank + 1) * self.0.m]
    }

    pub fn index(&self, rank: usize) -> MultiIndex {
        MultiIndex(self.digits(rank).iter().map(|&d| d as usize).collect())
    }

    pub fn rank_of(&self, a: &[usize]) -> Option<usize> {
        if a.len() != self.0.m {
            return None;
        }
        let mut r = 0;
        for i in 0..self.0.m {
            if a[i] >= self.0.bounds[i] {
                return None;
            }
            r += a[i] * self.0.strides[i];
        }
        Some(r)
    }

    pub fn stride(&self, i: usize) -> usize {
        self.0.strides[i]
    }

    /// Product coefficient of x^(a)·x^(b) for ranks a, b; `None` when the product vanishes
    /// because an exponent leaves its bound.
    #[inline]
    pub fn mul_coeff(&self, ra: usize, rb: usize) -> Option<Fe> {
        let f = &self.0.field;
        let m = self.0.m;
        let da = &self.0.digits[ra * m..(ra + 1) * m];
        let db = &self.0.digits[rb * m..(rb + 1) * m];
        let mut c = Fe::ONE;
        for i in 0..m {
            let (a, b) = (da[i] as usize, db[i] as usize);
            let bound = self.0.bounds[i];
            if a + b >= bound {
                return None;
            }
            let t = self.0.binom[i][a * bound + b];
            if t.is_zero() {
                return Some(Fe::ZERO);
            }
            c = f.mul(c, t);
        }
        Some(c)
    }

    pub fn serialize(&self) -> String {
        let n: Vec<String> = self.0.n.iter().map(|h| h.to_string()).collect();
        format!("O({};{})", self.0.m, n.join(","))
    }

    /// Parses `O(m;n1,...,nm)`.
    pub fn parse(field: &FieldSpec, s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix("O(")
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(|| Error::Parse(format!("bad shape `{s}`")))?;
        let (m, n) = inner
            .split_once(';')
            .ok_or_else(|| Error::Parse(format!("bad shape `{s}`")))?;
        let m: usize = m.trim().parse().map_err(|_| Error::Parse(format!("bad m in `{s}`")))?;
        let n: Vec<u32> = n
            .split(',')
            .map(|x| x.trim().parse::<u32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse(format!("bad heights in `{s}`")))?;
        if n.len() != m {
            return Err(Error::Parse(format!("shape `{s}` has {} heights for m = {m}", n.len())));
        }
        AlgebraShape::new(field, &n)
    }
}

/// Exponent vector a of a monomial x^(a).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    /// Standard degree |a|.
    pub fn degree(&self) -> usize {
        self.0.iter().sum()
    }

    /// |a|_p = Σ_{i≤s} a_i p^{i-1} + p^s Σ_{i>s} a_i.
    pub fn p_degree(&self, s: usize, p: u64) -> u64 {
        let mut d = 0u64;
        let mut w = 1u64;
        for (i, &a) in self.0.iter().enumerate() {
            if i < s {
                d += a as u64 * w;
                w *= p;
            } else {
                d += a as u64 * w;
            }
        }
        d
    }
}

/// DegLex comparison: |·|_p first, then the lexicographic order that compares the
/// largest index at which the exponents differ.
pub fn deglex_compare(a: &MultiIndex, b: &MultiIndex, s: usize, p: u64) -> Ordering {
    a.p_degree(s, p).cmp(&b.p_degree(s, p)).then_with(|| {
        for i in (0..a.0.len()).rev() {
            if a.0[i] != b.0[i] {
                return a.0[i].cmp(&b.0[i]);
            }
        }
        Ordering::Equal
    })
}

/// Element of O(m;n), stored as a sparse map from monomial rank to coefficient.
#[derive(Clone, PartialEq, Eq)]
pub struct DPElement {
    pub shape: AlgebraShape,
    pub coeffs: BTreeMap<usize, Fe>,
}

impl fmt::Debug for DPElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pretty())
    }
}

impl DPElement {
    pub fn zero(shape: &AlgebraShape) -> Self {
        DPElement { shape: shape.clone(), coeffs: BTreeMap::new() }
    }

    pub fn one(shape: &AlgebraShape) -> Self {
        Self::constant(shape, Fe::ONE)
    }

    pub fn constant(shape: &AlgebraShape, c: Fe) -> Self {
        Self::monomial_rank(shape, 0, c)
    }

    pub fn monomial_rank(shape: &AlgebraShape, rank: usize, c: Fe) -> Self {
        let mut e = Self::zero(shape);
        if !c.is_zero() {
            e.coeffs.insert(rank, c);
        }
        e
    }

    /// c·x^(a); zero when a is out of bounds.
    pub fn monomial(shape: &AlgebraShape, a: &[usize], c: Fe) -> Self {
        match shape.rank_of(a) {
            Some(r) => Self::monomial_rank(shape, r, c),
            None => Self::zero(shape),
        }
    }

    /// The generator x_i (0-based i).
    pub fn var(shape: &AlgebraShape, i: usize) -> Self {
        Self::monomial_rank(shape, shape.stride(i), Fe::ONE)
    }

    /// Ordinary monomial x^A = Π x_i^{a_i} = Π a_i!·x_i^(a_i).
    pub fn ordinary_monomial(shape: &AlgebraShape, a: &[usize], c: Fe) -> Self {
        let f = shape.field();
        let mut coef = c;
        for &ai in a {
            for j in 1..=ai {
                coef = f.mul(coef, f.from_int(j as i64));
            }
        }
        Self::monomial(shape, a, coef)
    }

    pub fn from_dense(shape: &AlgebraShape, v: &[Fe]) -> Self {
        let coeffs = v.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(r, &c)| (r, c)).collect();
        DPElement { shape: shape.clone(), coeffs }
    }

    pub fn to_dense(&self) -> Vec<Fe> {
        let mut v = vec![Fe::ZERO; self.shape.dim()];
        for (&r, &c) in &self.coeffs {
            v[r] = c;
        }
        v
    }

    pub fn field(&self) -> &FieldSpec {
        self.shape.field()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, rank: usize) -> Fe {
        self.coeffs.get(&rank).copied().unwrap_or(Fe::ZERO)
    }

    pub fn coeff_at(&self, a: &[usize]) -> Fe {
        self.shape.rank_of(a).map(|r| self.coeff(r)).unwrap_or(Fe::ZERO)
    }

    pub fn constant_term(&self) -> Fe {
        self.coeff(0)
    }

    fn check(&self, o: &DPElement) -> Result<()> {
        if self.shape != o.shape {
            return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", self.shape, o.shape)));
        }
        Ok(())
    }

    pub fn add_term(&mut self, rank: usize, c: Fe) {
        if c.is_zero() {
            return;
        }
        let f = self.shape.field().clone();
        match self.coeffs.get_mut(&rank) {
            Some(x) => {
                *x = f.add(*x, c);
                if x.is_zero() {
                    self.coeffs.remove(&rank);
                }
            }
            None => {
                self.coeffs.insert(rank, c);
            }
        }
    }

    pub fn add(&self, o: &DPElement) -> DPElement {
        assert!(self.shape == o.shape, "shape mismatch");
        let mut r = self.clone();
        for (&k, &c) in &o.coeffs {
            r.add_term(k, c);
        }
        r
    }

    pub fn sub(&self, o: &DPElement) -> DPElement {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> DPElement {
        let f = self.shape.field();
        DPElement {
            shape: self.shape.clone(),
            coeffs: self.coeffs.iter().map(|(&k, &c)| (k, f.neg(c))).collect(),
        }
    }

    pub fn scale(&self, c: Fe) -> DPElement {
        if c.is_zero() {
            return DPElement::zero(&self.shape);
        }
        let f = self.shape.field();
        DPElement {
            shape: self.shape.clone(),
            coeffs: self.coeffs.iter().map(|(&k, &x)| (k, f.mul(x, c))).collect(),
        }
    }

    /// Product; panics on shape mismatch (see `dp_mul` for the checked form).
    pub fn mul(&self, o: &DPElement) -> DPElement {
        assert!(self.shape == o.shape, "shape mismatch");
        let f = self.shape.field();
        let mut acc = vec![Fe::ZERO; self.shape.dim()];
        let mut touched = false;
        for (&ra, &ca) in &self.coeffs {
            for (&rb, &cb) in &o.coeffs {
                if let Some(c) = self.shape.mul_coeff(ra, rb) {
                    if !c.is_zero() {
                        let r = ra + rb;
                        acc[r] = f.add(acc[r], f.mul(c, f.mul(ca, cb)));
                        touched = true;
                    }
                }
            }
        }
        if !touched {
            return DPElement::zero(&self.shape);
        }
        DPElement::from_dense(&self.shape, &acc)
    }

    pub fn pow(&self, e: u64) -> DPElement {
        let mut r = DPElement::one(&self.shape);
        for _ in 0..e {
            r = r.mul(self);
            if r.is_zero() {
                break;
            }
        }
        r
    }

    /// Minimal standard degree over the support; `None` for zero.
    pub fn filtration_degree(&self) -> Option<usize> {
        self.coeffs.keys().map(|&r| self.shape.digits(r).iter().map(|&d| d as usize).sum()).min()
    }

    /// Homogeneous component of standard degree d.
    pub fn homogeneous_part(&self, d: usize) -> DPElement {
        DPElement {
            shape: self.shape.clone(),
            coeffs: self
                .coeffs
                .iter()
                .filter(|(&r, _)| self.shape.digits(r).iter().map(|&x| x as usize).sum::<usize>() == d)
                .map(|(&r, &c)| (r, c))
                .collect(),
        }
    }

    /// ∂_i (0-based): x^(a) ↦ x^(a-ε_i).
    pub fn partial(&self, i: usize) -> DPElement {
        let st = self.shape.stride(i);
        let mut out = DPElement::zero(&self.shape);
        for (&r, &c) in &self.coeffs {
            if self.shape.digits(r)[i] > 0 {
                out.coeffs.insert(r - st, c);
            }
        }
        out
    }

    /// Multiplication by x_i (0-based): x_i·x^(a) = (a_i+1)x^(a+ε_i).
    pub fn mul_var(&self, i: usize) -> DPElement {
        let f = self.shape.field();
        let st = self.shape.stride(i);
        let mut out = DPElement::zero(&self.shape);
        for (&r, &c) in &self.coeffs {
            let a = self.shape.digits(r)[i] as usize;
            if a + 1 < self.shape.bound(i) {
                out.add_term(r + st, f.mul(c, f.from_int(a as i64 + 1)));
            }
        }
        out
    }

    pub fn serialize(&self) -> String {
        let f = self.shape.field();
        let terms: Vec<String> = self.coeffs.iter().map(|(r, &c)| format!("{r}:{}", f.fmt_fe(c))).collect();
        format!("{}|{}", self.shape.serialize(), terms.join(","))
    }

    pub fn parse(field: &FieldSpec, s: &str) -> Result<Self> {
        let (sh, body) = s.split_once('|').ok_or_else(|| Error::Parse(format!("bad element `{s}`")))?;
        let shape = AlgebraShape::parse(field, sh)?;
        Self::parse_body(&shape, body)
    }

    /// Parses the `<rank>:<coeff>,...` part. Extension-field coefficients carry their
    /// own commas; a token without `:` continues the previous coefficient.
    pub fn parse_body(shape: &AlgebraShape, body: &str) -> Result<Self> {
        let f = shape.field();
        let mut e = DPElement::zero(shape);
        let body = body.trim();
        if body.is_empty() {
            return Ok(e);
        }
        // Terms are `rank:c` for prime fields and `rank:c0,c1,...` for extensions;
        // split on the next `rank:` marker.
        let mut items: Vec<(usize, String)> = Vec::new();
        for tok in body.split(',') {
            if let Some((r, c)) = tok.split_once(':') {
                let r = r.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad rank `{r}`")))?;
                items.push((r, c.trim().to_string()));
            } else if let Some(last) = items.last_mut() {
                last.1.push(',');
                last.1.push_str(tok.trim());
            } else {
                return Err(Error::Parse(format!("bad term `{tok}`")));
            }
        }
        for (r, c) in items {
            if r >= shape.dim() {
                return Err(Error::Parse(format!("rank {r} out of range")));
            }
            e.add_term(r, f.parse_fe(&c)?);
        }
        Ok(e)
    }

    /// Human-readable form such as `2·x^(2,0) + x^(0,1)`.
    pub fn pretty(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let f = self.shape.field();
        self.coeffs
            .iter()
            .map(|(&r, &c)| {
                let a = self.shape.index(r);
                let ex: Vec<String> = a.0.iter().map(|x| x.to_string()).collect();
                format!("{}·x^({})", f.fmt_fe(c), ex.join(","))
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// Checked product.
pub fn dp_mul(f: &DPElement, g: &DPElement) -> Result<DPElement> {
    f.check(g)?;
    Ok(f.mul(g))
}

/// Filtration degree: minimal |a| over the support. Zero is an error.
pub fn dp_filtration_degree(f: &DPElement) -> Result<usize> {
    f.filtration_degree().ok_or(Error::ZeroElement)
}

/// Filtration degree with `None` standing for +∞ on the zero element.
pub fn dp_filtration_degree_or_inf(f: &DPElement) -> Option<usize> {
    f.filtration_degree()
}

/// Inverse of a unit by a Neumann series on its nilpotent part.
pub fn dp_inverse(f: &DPElement) -> Result<DPElement> {
    let fs = f.field();
    let c = f.constant_term();
    let ci = fs.inv(c).ok_or(Error::NotAUnit)?;
    // f = c(1 + n)
    let mut n = f.scale(ci);
    n.coeffs.remove(&0);
    let neg_n = n.neg();
    let mut term = DPElement::one(&f.shape);
    let mut sum = term.clone();
    loop {
        term = term.mul(&neg_n);
        if term.is_zero() {
            break;
        }
        sum = sum.add(&term);
    }
    Ok(sum.scale(ci))
}

/// (rs)!/(r!(s!)^r) reduced mod p, evaluated exactly in big integers.
fn dp_ratio_mod_p(r: u64, s: u64, p: u64) -> u64 {
    let fact = |n: u64| -> BigUint {
        let mut acc = BigUint::one();
        for k in 2..=n {
            acc *= k;
        }
        acc
    };
    let num = fact(r * s);
    let mut den = fact(r);
    let fs = fact(s);
    for _ in 0..r {
        den *= &fs;
    }
    let q = num / den;
    (q % p).to_u64().unwrap_or(0)
}

/// f^(r) for f in the maximal ideal of O(1;n), by rules (iii)–(vi) of a divided power system.
pub fn dp_divided_power(f: &DPElement, r: u64) -> Result<DPElement> {
    if f.shape.m() != 1 {
        return Err(Error::ShapeMismatch("divided powers are only provided on O(1;n)".into()));
    }
    if !f.constant_term().is_zero() {
        return Err(Error::Precondition("divided powers need zero constant term".into()));
    }
    let mut cache: HashMap<(u64, u64), u64> = HashMap::new();
    Ok(divided_power_rec(f, r, &mut cache))
}

fn divided_power_rec(f: &DPElement, r: u64, cache: &mut HashMap<(u64, u64), u64>) -> DPElement {
    let shape = &f.shape;
    let fs = shape.field();
    let p = fs.p();
    let bound = shape.bound(0) as u64;
    let r = r as usize;
    // table[j] = (sum of the terms processed so far)^(j); adding c·x^(s) uses
    // (g + c x^(s))^(j) = Σ_l (c x^(s))^(l) g^(j-l).
    let mut table: Vec<DPElement> = (0..=r)
        .map(|j| if j == 0 { DPElement::one(shape) } else { DPElement::zero(shape) })
        .collect();
    for (&s, &c) in &f.coeffs {
        let s = s as u64;
        let mut lead = Vec::with_capacity(r + 1);
        for l in 0..=r as u64 {
            if l == 0 {
                lead.push(DPElement::one(shape));
                continue;
            }
            if l * s >= bound {
                lead.push(DPElement::zero(shape));
                continue;
            }
            let ratio = *cache.entry((l, s)).or_insert_with(|| dp_ratio_mod_p(l, s, p));
            let coef = fs.mul(fs.pow(c, l), fs.from_int(ratio as i64));
            lead.push(DPElement::monomial_rank(shape, (l * s) as usize, coef));
        }
        let mut next = Vec::with_capacity(r + 1);
        for j in 0..=r {
            let mut acc = DPElement::zero(shape);
            for l in 0..=j {
                if lead[l].is_zero() || table[j - l].is_zero() {
                    continue;
                }
                acc = acc.add(&lead[l].mul(&table[j - l]));
            }
            next.push(acc);
        }
        table = next;
    }
    table.pop().unwrap()
}

/// All divided powers f^(a), 0 ≤ a < p^n, of f in the maximal ideal of O(1;n).
///
/// Uses f^(a) = Π_j (f^(p^j))^{a_j} / a_j! for the base-p digits a_j of a, with
/// f^(p^j) = (f^(p^{j-1}))^(p) from the recursive rules.
pub fn dp_divided_power_table(f: &DPElement) -> Result<Vec<DPElement>> {
    if f.shape.m() != 1 {
        return Err(Error::ShapeMismatch("divided powers are only provided on O(1;n)".into()));
    }
    if !f.constant_term().is_zero() {
        return Err(Error::Precondition("divided powers need zero constant term".into()));
    }
    let shape = &f.shape;
    let fs = shape.field();
    let p = fs.p() as usize;
    let n = shape.heights()[0] as usize;
    let mut cache = HashMap::new();
    let mut ppow = vec![f.clone()];
    for _ in 1..n {
        let prev = ppow.last().unwrap();
        ppow.push(divided_power_rec(prev, p as u64, &mut cache));
    }
    // small[j][c] = (f^(p^j))^(c) = (f^(p^j))^c / c!
    let mut small: Vec<Vec<DPElement>> = Vec::with_capacity(n);
    for g in &ppow {
        let mut row = vec![DPElement::one(shape)];
        for c in 1..p {
            let inv_c = fs.inv(fs.from_int(c as i64)).unwrap();
            let next = row[c - 1].mul(g).scale(inv_c);
            row.push(next);
        }
        small.push(row);
    }
    let dim = shape.dim();
    let mut out = Vec::with_capacity(dim);
    for a in 0..dim {
        let mut v = a;
        let mut acc = DPElement::one(shape);
        for row in &small {
            let d = v % p;
            v /= p;
            if d > 0 {
                acc = acc.mul(&row[d]);
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// Exact char-0 oracle for (rs)!/(r!(s!)^r) as Π_{j=1}^{r} C(js-1, s-1).
pub fn dp_ratio_product_form(r: u64, s: u64) -> BigUint {
    let mut acc = BigUint::one();
    for j in 1..=r {
        let top = j * s - 1;
        let mut b = BigUint::one();
        for k in 0..(s - 1) {
            b = b * (top - k) / (k + 1);
        }
        acc *= b;
    }
    if acc.is_zero() {
        BigUint::one()
    } else {
        acc
    }
}
