use modlie::scalars::{binom_mod_p, ext_field_make, p_adic_digits, FieldSpec};
use modlie::{Error, Fe};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use proptest::prelude::*;

fn big_binom(a: u64, b: u64) -> BigUint {
    let mut num = BigUint::from(1u32);
    for k in 0..b {
        num = num * (a - k) / (k + 1);
    }
    num
}

#[test]
fn lucas_matches_big_integers_below_p4() {
    let p = 5u64;
    for a in 0..p.pow(4) {
        // Row of Pascal's triangle built incrementally as the oracle.
        let mut row = BigUint::from(1u32);
        for b in 0..=a {
            if b > 0 {
                row = row * (a - b + 1) / b;
            }
            let expect = (&row % p).to_u64().unwrap();
            assert_eq!(binom_mod_p(a, b, p).unwrap(), expect, "C({a},{b}) mod {p}");
        }
    }
}

#[test]
fn lucas_examples() {
    // p^r − p^s + i over p^r − p^s, r = 2, s = 1
    for i in 0..5 {
        assert_eq!(binom_mod_p(25 - 5 + i, 25 - 5, 5).unwrap(), 1);
    }
    for a in [0, 1, 17, 1000] {
        assert_eq!(binom_mod_p(a, 0, 7).unwrap(), 1);
    }
    assert_eq!(big_binom(19, 4), BigUint::from(3876u32));
    assert_eq!(binom_mod_p(19, 4, 5).unwrap(), 3876 % 5);
    assert_eq!(binom_mod_p(3, 4, 5).unwrap(), 0);
    assert_eq!(binom_mod_p(5, 2, 6), Err(Error::NotPrime(6)));
}

#[test]
fn p_adic_digit_examples() {
    assert!(p_adic_digits(0, 5).digits.is_empty());
    assert_eq!(p_adic_digits(19, 5).digits, vec![4, 3]);
    for (r, s) in [(2u32, 1u32), (3, 1), (3, 0), (4, 2)] {
        let d = p_adic_digits(5u64.pow(r) - 5u64.pow(s), 5).digits;
        for (j, &x) in d.iter().enumerate() {
            let j = j as u32;
            assert_eq!(x, if j >= s && j < r { 4 } else { 0 });
        }
        assert_eq!(d.len() as u32, r);
    }
}

#[test]
fn smallest_quadratic_over_f5() {
    // Oracle: a monic quadratic is irreducible iff it has no root in F_5.
    let mut found = None;
    'outer: for c0 in 0..5u64 {
        for c1 in 0..5u64 {
            if (0..5u64).all(|x| (x * x + c1 * x + c0) % 5 != 0) {
                found = Some(vec![c0, c1, 1]);
                break 'outer;
            }
        }
    }
    let f = ext_field_make(5, 2).unwrap();
    assert_eq!(Some(f.irr().to_vec()), found);
    assert_eq!(f.serialize(), "p=5;M=2;irr=1,1,1");
    assert_eq!(FieldSpec::parse(&f.serialize()).unwrap(), f);
}

#[test]
fn prime_field_is_degree_one() {
    let f = ext_field_make(5, 1).unwrap();
    assert_eq!(f.irr(), &[0, 1]);
    assert_eq!(f.order(), 5);
    assert!(ext_field_make(9, 1).is_err());
    assert!(ext_field_make(2, 1).is_err());
}

#[test]
fn multiplicative_group_order() {
    for (p, m) in [(5, 2), (3, 3), (7, 2), (5, 1)] {
        let f = ext_field_make(p, m).unwrap();
        let q = f.order();
        for x in f.elements().skip(1) {
            assert_eq!(f.pow(x, q - 1), Fe::ONE);
        }
        let g = f.primitive();
        let mut seen = std::collections::HashSet::new();
        let mut c = Fe::ONE;
        for _ in 0..q - 1 {
            seen.insert(c);
            c = f.mul(c, g);
        }
        assert_eq!(seen.len() as u64, q - 1);
    }
}

#[test]
fn subfields_and_serialization() {
    let f = ext_field_make(5, 2).unwrap();
    assert_eq!(f.subfield(1).unwrap().len(), 5);
    assert_eq!(f.subfield(2).unwrap().len(), 25);
    assert!(f.subfield(3).is_err());
    for x in f.elements() {
        let e = f.element(x);
        assert_eq!(modlie::FieldElement::parse(&f, &e.serialize()).unwrap(), e);
    }
}

#[test]
fn large_field_without_tables() {
    let f = ext_field_make(5, 5).unwrap();
    assert_eq!(f.order(), 3125);
    let a = f.from_coeffs(&[1, 2, 3, 4, 0]).unwrap();
    let ai = f.inv(a).unwrap();
    assert_eq!(f.mul(a, ai), Fe::ONE);
    let g = ext_field_make(1_000_003, 1).unwrap();
    let x = g.from_int(123_456);
    assert_eq!(g.mul(x, g.inv(x).unwrap()), Fe::ONE);
}

fn field_strategy() -> impl Strategy<Value = (u64, u32)> {
    prop_oneof![Just((5, 1)), Just((5, 2)), Just((3, 3)), Just((7, 2)), Just((11, 1)), Just((5, 5))]
}

proptest! {
    #[test]
    fn field_axioms((p, m) in field_strategy(), a in any::<u32>(), b in any::<u32>(), c in any::<u32>()) {
        let f = ext_field_make(p, m).unwrap();
        let q = f.order() as u32;
        let (a, b, c) = (Fe(a % q), Fe(b % q), Fe(c % q));
        prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
        prop_assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
        prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        prop_assert_eq!(f.mul(a, b), f.mul(b, a));
        prop_assert_eq!(f.add(a, f.neg(a)), Fe::ZERO);
        if !a.is_zero() {
            prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), Fe::ONE);
        }
    }

    #[test]
    fn frobenius_is_additive((p, m) in field_strategy(), a in any::<u32>(), b in any::<u32>()) {
        let f = ext_field_make(p, m).unwrap();
        let q = f.order() as u32;
        let (a, b) = (Fe(a % q), Fe(b % q));
        prop_assert_eq!(f.frob(f.add(a, b)), f.add(f.frob(a), f.frob(b)));
    }

    #[test]
    fn p_adic_roundtrip(a in 0u64..1_000_000, p in prop_oneof![Just(3u64), Just(5), Just(7)]) {
        let d = p_adic_digits(a, p);
        let v = d.digits.iter().rev().fold(0u64, |acc, &x| acc * p + x);
        prop_assert_eq!(v, a);
        prop_assert!(d.digits.last().is_none_or(|&x| x != 0));
        prop_assert!(d.digits.iter().all(|&x| x < p));
    }
}
