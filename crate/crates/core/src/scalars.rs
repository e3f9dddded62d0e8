//! Finite fields F_{p^M}, p-adic digits and binomial coefficients mod p.
//!
//! Field elements are stored as `Fe`, a compact code `Σ c_i p^i` of the
//! coefficient vector `(c_0, …, c_{M-1})` in the basis `1, X, …, X^{M-1}`
//! of `F_p[X]/(irr)`. The codes `0..p` are the prime subfield.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Compact field element code. Only meaningful together with its `FieldSpec`.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fe(pub u32);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

const TABLE_LIMIT: u64 = 1024;
const FIELD_LIMIT: u64 = 1 << 24;

struct Inner {
    p: u64,
    m: u32,
    q: u64,
    irr: Vec<u64>,
    // Full tables for small q.
    add_tab: Vec<u32>,
    mul_tab: Vec<u32>,
    // Discrete log tables for extension fields; exp has length 2(q-1).
    log: Vec<u32>,
    exp: Vec<u32>,
}

/// A finite field F_{p^M} with the deterministic defining polynomial.
#[derive(Clone)]
pub struct FieldSpec(Arc<Inner>);

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.p == other.0.p && self.0.m == other.0.m)
    }
}
impl Eq for FieldSpec {}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldSpec({})", self.serialize())
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    r
}

// Dense polynomials over F_p, low degree first, used only for the irreducible search
// and table construction.
fn poly_trim(a: &mut Vec<u64>) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

fn poly_mulmod(a: &[u64], b: &[u64], f: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut r = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            r[i + j] = (r[i + j] + mulmod(x, y, p)) % p;
        }
    }
    poly_rem(&mut r, f, p);
    r
}

// f is monic.
fn poly_rem(r: &mut Vec<u64>, f: &[u64], p: u64) {
    let d = f.len() - 1;
    poly_trim(r);
    while r.len() > d {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - d;
        for (i, &c) in f.iter().enumerate() {
            r[shift + i] = (r[shift + i] + p - mulmod(lead, c, p)) % p;
        }
        poly_trim(r);
    }
}

fn poly_gcd(mut a: Vec<u64>, mut b: Vec<u64>, p: u64) -> Vec<u64> {
    poly_trim(&mut a);
    poly_trim(&mut b);
    while !b.is_empty() {
        // make b monic
        let inv = powmod(*b.last().unwrap(), p - 2, p);
        for c in b.iter_mut() {
            *c = mulmod(*c, inv, p);
        }
        poly_rem(&mut a, &b, p);
        std::mem::swap(&mut a, &mut b);
    }
    a
}

fn poly_powmod(base: &[u64], mut e: u64, f: &[u64], p: u64) -> Vec<u64> {
    let mut r = vec![1u64];
    let mut b = base.to_vec();
    poly_rem(&mut b, f, p);
    while e > 0 {
        if e & 1 == 1 {
            r = poly_mulmod(&r, &b, f, p);
        }
        b = poly_mulmod(&b, &b, f, p);
        e >>= 1;
    }
    r
}

/// Rabin-style test: f of degree d is irreducible iff gcd(f, X^{p^i} - X) = 1 for i ≤ d/2.
fn is_irreducible(f: &[u64], p: u64) -> bool {
    let d = f.len() - 1;
    if d == 1 {
        return true;
    }
    let x = vec![0u64, 1];
    let mut xp = x.clone();
    for _ in 1..=d / 2 {
        xp = poly_powmod(&xp, p, f, p);
        let mut h = xp.clone();
        h.resize(h.len().max(2), 0);
        h[1] = (h[1] + p - 1) % p;
        let g = poly_gcd(f.to_vec(), h, p);
        if g.len() > 1 {
            return false;
        }
    }
    true
}

/// Lexicographically smallest monic irreducible of degree `m` under the
/// coefficient-tuple order (c_0, c_1, …, c_{m-1}).
pub fn smallest_irreducible(p: u64, m: u32) -> Vec<u64> {
    let m = m as usize;
    let total = p.pow(m as u32);
    for code in 0..total {
        let mut f = Vec::with_capacity(m + 1);
        let mut c = code;
        // c_0 is the most significant position of the lexicographic order.
        let mut digits = vec![0u64; m];
        for i in (0..m).rev() {
            digits[i] = c % p;
            c /= p;
        }
        f.extend_from_slice(&digits);
        f.push(1);
        if m > 1 && f[0] == 0 {
            continue;
        }
        if is_irreducible(&f, p) {
            return f;
        }
    }
    unreachable!("an irreducible polynomial of every degree exists")
}

impl FieldSpec {
    /// Builds F_{p^M} with the deterministic irreducible polynomial.
    pub fn new(p: u64, m: u32) -> Result<Self> {
        if !is_prime(p) || p < 3 {
            return Err(Error::NotPrime(p));
        }
        if m == 0 {
            return Err(Error::InvalidParameter("extension degree must be ≥ 1".into()));
        }
        let q = p
            .checked_pow(m)
            .filter(|&q| q <= FIELD_LIMIT || (m == 1 && q < (1 << 31)))
            .ok_or_else(|| Error::InvalidParameter(format!("field of order {p}^{m} too large")))?;
        let irr = smallest_irreducible(p, m);
        let mut inner = Inner {
            p,
            m,
            q,
            irr,
            add_tab: Vec::new(),
            mul_tab: Vec::new(),
            log: Vec::new(),
            exp: Vec::new(),
        };
        if m > 1 {
            build_log_tables(&mut inner);
        }
        if q <= TABLE_LIMIT {
            let qs = q as usize;
            let tmp = FieldSpec(Arc::new(inner));
            let mut add_tab = vec![0u32; qs * qs];
            let mut mul_tab = vec![0u32; qs * qs];
            for a in 0..qs {
                for b in 0..qs {
                    add_tab[a * qs + b] = tmp.add_slow(Fe(a as u32), Fe(b as u32)).0;
                    mul_tab[a * qs + b] = tmp.mul_slow(Fe(a as u32), Fe(b as u32)).0;
                }
            }
            let mut inner = Arc::try_unwrap(tmp.0).ok().expect("unique");
            inner.add_tab = add_tab;
            inner.mul_tab = mul_tab;
            return Ok(FieldSpec(Arc::new(inner)));
        }
        Ok(FieldSpec(Arc::new(inner)))
    }

    pub fn p(&self) -> u64 {
        self.0.p
    }
    pub fn degree(&self) -> u32 {
        self.0.m
    }
    pub fn order(&self) -> u64 {
        self.0.q
    }
    pub fn irr(&self) -> &[u64] {
        &self.0.irr
    }

    pub fn serialize(&self) -> String {
        let irr: Vec<String> = self.0.irr.iter().map(|c| c.to_string()).collect();
        format!("p={};M={};irr={}", self.0.p, self.0.m, irr.join(","))
    }

    pub fn parse(s: &str) -> Result<Self> {
        let mut p = None;
        let mut m = None;
        let mut irr = None;
        for part in s.trim().split(';') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad field component `{part}`")))?;
            match k.trim() {
                "p" => p = v.trim().parse::<u64>().ok(),
                "M" => m = v.trim().parse::<u32>().ok(),
                "irr" => {
                    irr = v
                        .split(',')
                        .map(|c| c.trim().parse::<u64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .ok()
                }
                _ => return Err(Error::Parse(format!("unknown field key `{k}`"))),
            }
        }
        let (p, m) = match (p, m) {
            (Some(p), Some(m)) => (p, m),
            _ => return Err(Error::Parse("field spec needs p and M".into())),
        };
        let f = FieldSpec::new(p, m)?;
        if let Some(irr) = irr {
            if irr != f.0.irr {
                return Err(Error::Parse(format!(
                    "irr {irr:?} differs from the canonical {:?}",
                    f.0.irr
                )));
            }
        }
        Ok(f)
    }

    #[inline]
    pub fn zero(&self) -> Fe {
        Fe::ZERO
    }
    #[inline]
    pub fn one(&self) -> Fe {
        Fe::ONE
    }

    /// Image of an integer in the prime subfield.
    pub fn from_int(&self, v: i64) -> Fe {
        Fe(v.rem_euclid(self.0.p as i64) as u32)
    }

    pub fn from_coeffs(&self, c: &[u64]) -> Result<Fe> {
        if c.len() != self.0.m as usize || c.iter().any(|&x| x >= self.0.p) {
            return Err(Error::Parse(format!("bad coefficient vector {c:?}")));
        }
        let mut v = 0u64;
        for &x in c.iter().rev() {
            v = v * self.0.p + x;
        }
        Ok(Fe(v as u32))
    }

    pub fn coeffs(&self, a: Fe) -> Vec<u64> {
        let mut v = a.0 as u64;
        (0..self.0.m)
            .map(|_| {
                let d = v % self.0.p;
                v /= self.0.p;
                d
            })
            .collect()
    }

    /// All elements in code order.
    pub fn elements(&self) -> impl Iterator<Item = Fe> {
        (0..self.0.q as u32).map(Fe)
    }

    /// Element of the prime subfield as an integer in [0, p), if it lies there.
    pub fn as_prime(&self, a: Fe) -> Option<u64> {
        ((a.0 as u64) < self.0.p).then_some(a.0 as u64)
    }

    fn add_slow(&self, a: Fe, b: Fe) -> Fe {
        let p = self.0.p;
        if self.0.m == 1 {
            return Fe(((a.0 as u64 + b.0 as u64) % p) as u32);
        }
        let (mut x, mut y) = (a.0 as u64, b.0 as u64);
        let mut r = 0u64;
        let mut w = 1u64;
        for _ in 0..self.0.m {
            r += ((x % p + y % p) % p) * w;
            x /= p;
            y /= p;
            w *= p;
        }
        Fe(r as u32)
    }

    fn mul_slow(&self, a: Fe, b: Fe) -> Fe {
        if self.0.m == 1 {
            return Fe(mulmod(a.0 as u64, b.0 as u64, self.0.p) as u32);
        }
        if a.is_zero() || b.is_zero() {
            return Fe::ZERO;
        }
        let q1 = (self.0.q - 1) as usize;
        let la = self.0.log[a.0 as usize] as usize;
        let lb = self.0.log[b.0 as usize] as usize;
        Fe(self.0.exp[(la + lb) % q1])
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        if !self.0.add_tab.is_empty() {
            return Fe(self.0.add_tab[a.0 as usize * self.0.q as usize + b.0 as usize]);
        }
        self.add_slow(a, b)
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        if !self.0.mul_tab.is_empty() {
            return Fe(self.0.mul_tab[a.0 as usize * self.0.q as usize + b.0 as usize]);
        }
        self.mul_slow(a, b)
    }

    pub fn neg(&self, a: Fe) -> Fe {
        let p = self.0.p;
        if self.0.m == 1 {
            return Fe(((p - a.0 as u64) % p) as u32);
        }
        let mut x = a.0 as u64;
        let mut r = 0u64;
        let mut w = 1u64;
        for _ in 0..self.0.m {
            r += ((p - x % p) % p) * w;
            x /= p;
            w *= p;
        }
        Fe(r as u32)
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        self.add(a, self.neg(b))
    }

    pub fn pow(&self, a: Fe, mut e: u64) -> Fe {
        let mut r = Fe::ONE;
        let mut b = a;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        r
    }

    pub fn inv(&self, a: Fe) -> Option<Fe> {
        if a.is_zero() {
            return None;
        }
        if self.0.m == 1 {
            return Some(Fe(powmod(a.0 as u64, self.0.p - 2, self.0.p) as u32));
        }
        let q1 = (self.0.q - 1) as usize;
        let la = self.0.log[a.0 as usize] as usize;
        Some(Fe(self.0.exp[(q1 - la) % q1]))
    }

    pub fn div(&self, a: Fe, b: Fe) -> Option<Fe> {
        self.inv(b).map(|bi| self.mul(a, bi))
    }

    /// Frobenius x ↦ x^p.
    pub fn frob(&self, a: Fe) -> Fe {
        self.pow(a, self.0.p)
    }

    /// Generator of the multiplicative group.
    pub fn primitive(&self) -> Fe {
        if self.0.m > 1 {
            return Fe(self.0.exp[1]);
        }
        let p = self.0.p;
        let factors = prime_factors(p - 1);
        (2..p)
            .find(|&g| factors.iter().all(|&r| powmod(g, (p - 1) / r, p) != 1))
            .map(|g| Fe(g as u32))
            .unwrap_or(Fe::ONE)
    }

    /// Elements of the subfield F_{p^d}, which exists iff d divides M.
    pub fn subfield(&self, d: u32) -> Result<Vec<Fe>> {
        if d == 0 || !self.0.m.is_multiple_of(d) {
            return Err(Error::InvalidParameter(format!(
                "F_{{p^{d}}} is not a subfield of F_{{p^{}}}",
                self.0.m
            )));
        }
        let e = self.0.p.pow(d);
        Ok(self.elements().filter(|&x| self.pow(x, e) == x).collect())
    }

    pub fn element(&self, v: Fe) -> FieldElement {
        FieldElement { spec: self.clone(), v }
    }

    pub fn fmt_fe(&self, a: Fe) -> String {
        if self.0.m == 1 {
            a.0.to_string()
        } else {
            self.coeffs(a).iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
        }
    }

    /// Comma-separated list; extension-field entries are parenthesized.
    pub fn fmt_list(&self, v: &[Fe]) -> String {
        let parts: Vec<String> = if self.0.m == 1 {
            v.iter().map(|&a| self.fmt_fe(a)).collect()
        } else {
            v.iter().map(|&a| format!("({})", self.fmt_fe(a))).collect()
        };
        parts.join(",")
    }

    pub fn parse_list(&self, s: &str) -> Result<Vec<Fe>> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Vec::new());
        }
        if self.0.m == 1 {
            return s.split(',').map(|t| self.parse_fe(t)).collect();
        }
        let mut out = Vec::new();
        let mut rest = s;
        while !rest.is_empty() {
            let body = rest
                .strip_prefix('(')
                .and_then(|r| r.split_once(')'))
                .ok_or_else(|| Error::Parse(format!("bad element list `{s}`")))?;
            out.push(self.parse_fe(body.0)?);
            rest = body.1.trim_start_matches(',').trim();
        }
        Ok(out)
    }

    pub fn parse_fe(&self, s: &str) -> Result<Fe> {
        let c = s
            .split(',')
            .map(|x| x.trim().parse::<u64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("bad field element `{s}`: {e}")))?;
        self.from_coeffs(&c)
    }
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn build_log_tables(inner: &mut Inner) {
    let p = inner.p;
    let q = inner.q as usize;
    let m = inner.m as usize;
    let encode = |c: &[u64]| -> u32 {
        let mut v = 0u64;
        for i in (0..m).rev() {
            v = v * p + c.get(i).copied().unwrap_or(0);
        }
        v as u32
    };
    let decode = |mut v: u64| -> Vec<u64> {
        (0..m)
            .map(|_| {
                let d = v % p;
                v /= p;
                d
            })
            .collect()
    };
    let factors = prime_factors(q as u64 - 1);
    let irr = inner.irr.clone();
    let mut gen = None;
    for code in 2..q as u64 {
        let g = decode(code);
        let ok = factors.iter().all(|&r| {
            let mut t = poly_powmod(&g, (q as u64 - 1) / r, &irr, p);
            poly_trim(&mut t);
            t != vec![1]
        });
        if ok {
            gen = Some(g);
            break;
        }
    }
    let g = gen.expect("multiplicative group is cyclic");
    let mut exp = vec![0u32; 2 * (q - 1)];
    let mut log = vec![0u32; q];
    let mut cur = vec![1u64];
    for i in 0..q - 1 {
        let c = encode(&cur);
        exp[i] = c;
        exp[i + q - 1] = c;
        log[c as usize] = i as u32;
        cur = poly_mulmod(&cur, &g, &irr, p);
    }
    inner.exp = exp;
    inner.log = log;
}

/// Field element bundled with its field, for ergonomic arithmetic.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldElement {
    pub spec: FieldSpec,
    pub v: Fe,
}

impl FieldElement {
    pub fn coeffs(&self) -> Vec<u64> {
        self.spec.coeffs(self.v)
    }
    pub fn is_zero(&self) -> bool {
        self.v.is_zero()
    }
    pub fn inv(&self) -> Option<FieldElement> {
        self.spec.inv(self.v).map(|v| self.spec.element(v))
    }
    pub fn pow(&self, e: u64) -> FieldElement {
        self.spec.element(self.spec.pow(self.v, e))
    }
    pub fn serialize(&self) -> String {
        self.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
    }
    pub fn parse(spec: &FieldSpec, s: &str) -> Result<Self> {
        Ok(spec.element(spec.parse_fe(s)?))
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.serialize())
    }
}

impl Add for &FieldElement {
    type Output = FieldElement;
    fn add(self, o: &FieldElement) -> FieldElement {
        self.spec.element(self.spec.add(self.v, o.v))
    }
}
impl Sub for &FieldElement {
    type Output = FieldElement;
    fn sub(self, o: &FieldElement) -> FieldElement {
        self.spec.element(self.spec.sub(self.v, o.v))
    }
}
impl Mul for &FieldElement {
    type Output = FieldElement;
    fn mul(self, o: &FieldElement) -> FieldElement {
        self.spec.element(self.spec.mul(self.v, o.v))
    }
}
impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        self.spec.element(self.spec.neg(self.v))
    }
}

/// Builds the field F_{p^M}.
pub fn ext_field_make(p: u64, m: u32) -> Result<FieldSpec> {
    FieldSpec::new(p, m)
}

/// Base-p expansion of a nonnegative integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PAdicDigits {
    pub value: u64,
    pub base: u64,
    /// Low digit first; empty for zero.
    pub digits: Vec<u64>,
}

pub fn p_adic_digits(a: u64, p: u64) -> PAdicDigits {
    let mut digits = Vec::new();
    let mut v = a;
    while v > 0 {
        digits.push(v % p);
        v /= p;
    }
    PAdicDigits { value: a, base: p, digits }
}

fn small_binom_mod(a: u64, b: u64, p: u64) -> u64 {
    if b > a {
        return 0;
    }
    let b = b.min(a - b);
    let mut num = 1u64;
    let mut den = 1u64;
    for j in 0..b {
        num = mulmod(num, (a - j) % p, p);
        den = mulmod(den, (j + 1) % p, p);
    }
    mulmod(num, powmod(den, p - 2, p), p)
}

/// C(a, b) mod p by Lucas' theorem.
pub fn binom_mod_p(a: u64, b: u64, p: u64) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    Ok(lucas(a, b, p))
}

/// Lucas product without the primality check; callers guarantee p prime.
#[inline]
pub(crate) fn lucas(mut a: u64, mut b: u64, p: u64) -> u64 {
    if b > a {
        return 0;
    }
    let mut r = 1u64;
    while b > 0 {
        let (ai, bi) = (a % p, b % p);
        if bi > ai {
            return 0;
        }
        r = mulmod(r, small_binom_mod(ai, bi, p), p);
        a /= p;
        b /= p;
    }
    r
}
