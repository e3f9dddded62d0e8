use std::cmp::Ordering;

use modlie::divided_power::*;
use modlie::rng::SplitMix64;
use modlie::scalars::binom_mod_p;
use modlie::{Error, Fe, FieldSpec};
use num_traits::ToPrimitive;
use proptest::prelude::*;

fn shape(p: u64, n: &[u32]) -> AlgebraShape {
    AlgebraShape::new(&FieldSpec::new(p, 1).unwrap(), n).unwrap()
}

fn random_elem(s: &AlgebraShape, rng: &mut SplitMix64, in_m: bool) -> DPElement {
    let mut f = DPElement::from_dense(s, &rng.sparse_fe_vec(s.field(), s.dim(), 1, 3));
    if in_m {
        f.coeffs.remove(&0);
    }
    f
}

#[test]
fn product_examples() {
    let s = shape(5, &[1]);
    let x = DPElement::var(&s, 0);
    assert_eq!(dp_mul(&x, &x).unwrap(), DPElement::monomial(&s, &[2], Fe(2)));
    let mut rng = SplitMix64::new(1);
    let f = random_elem(&s, &mut rng, false);
    assert_eq!(dp_mul(&DPElement::one(&s), &f).unwrap(), f);
    // x^(p^n−p^t)·x^(η) = x^(p^n−p^t+η) for η < p^t
    let s2 = shape(5, &[2]);
    for eta in 0..5 {
        let got = dp_mul(&DPElement::monomial(&s2, &[20], Fe::ONE), &DPElement::monomial(&s2, &[eta], Fe::ONE)).unwrap();
        assert_eq!(got, DPElement::monomial(&s2, &[20 + eta], Fe::ONE));
    }
    // products past the bound vanish
    assert!(dp_mul(&DPElement::monomial(&s, &[3], Fe::ONE), &DPElement::monomial(&s, &[2], Fe::ONE))
        .unwrap()
        .is_zero());
    assert!(matches!(dp_mul(&x, &DPElement::one(&s2)), Err(Error::ShapeMismatch(_))));
}

#[test]
fn ordinary_monomials() {
    // x^a = a!·x^(a); x^{p−1} = −x^(p−1)
    let s = shape(7, &[1]);
    let x = DPElement::var(&s, 0);
    for a in 0..7 {
        assert_eq!(x.pow(a as u64), DPElement::ordinary_monomial(&s, &[a], Fe::ONE));
    }
    assert_eq!(DPElement::ordinary_monomial(&s, &[6], Fe::ONE), DPElement::monomial(&s, &[6], Fe(6)));
}

#[test]
fn divided_power_examples() {
    let s = shape(5, &[2]);
    let x = DPElement::var(&s, 0);
    let mut rng = SplitMix64::new(2);
    let f = random_elem(&s, &mut rng, true);
    assert_eq!(dp_divided_power(&f, 0).unwrap(), DPElement::one(&s));
    assert_eq!(dp_divided_power(&f, 1).unwrap(), f);
    for r in 0..25 {
        assert_eq!(dp_divided_power(&x, r).unwrap(), DPElement::monomial(&s, &[r as usize], Fe::ONE));
    }
    // char-0 expansion: (x + x²/2)²/2 = x²/2 + x³/2 + x⁴/8 = x^(2) + 3x^(3) + 3x^(4)
    let g = x.add(&DPElement::monomial(&s, &[2], Fe::ONE));
    let mut want = DPElement::zero(&s);
    for (a, c) in [(2, 1), (3, 3), (4, 3)] {
        want = want.add(&DPElement::monomial(&s, &[a], Fe(c)));
    }
    assert_eq!(dp_divided_power(&g, 2).unwrap(), want);
    assert!(matches!(dp_divided_power(&DPElement::one(&s), 2), Err(Error::Precondition(_))));
    assert!(dp_divided_power(&DPElement::var(&shape(5, &[1, 1]), 0), 2).is_err());
}

#[test]
fn factorial_ratio_matches_product_form() {
    // (x^(s))^(r) = (rs)!/(r!(s!)^r) x^(rs)
    let p = 5;
    let s = shape(p, &[2]);
    for a in 1..25u64 {
        for r in 1..25u64 {
            if r * a >= 25 {
                continue;
            }
            let got = dp_divided_power(&DPElement::monomial(&s, &[a as usize], Fe::ONE), r).unwrap();
            let want = (dp_ratio_product_form(r, a) % p).to_u64().unwrap();
            assert_eq!(got.coeff((r * a) as usize), Fe(want as u32), "r={r} s={a}");
        }
    }
}

#[test]
fn divided_power_table_agrees() {
    let s = shape(3, &[3]);
    let mut rng = SplitMix64::new(3);
    for _ in 0..5 {
        let f = random_elem(&s, &mut rng, true);
        let t = dp_divided_power_table(&f).unwrap();
        for (a, g) in t.iter().enumerate() {
            assert_eq!(g, &dp_divided_power(&f, a as u64).unwrap());
        }
    }
}

#[test]
fn filtration_examples() {
    let s = shape(5, &[1, 1]);
    let one_x = DPElement::one(&s).add(&DPElement::var(&s, 0));
    assert_eq!(dp_filtration_degree(&one_x).unwrap(), 0);
    let top = DPElement::ordinary_monomial(&s, &[4, 4], Fe::ONE);
    assert_eq!(dp_filtration_degree(&top).unwrap(), 8);
    assert!(matches!(dp_filtration_degree(&DPElement::zero(&s)), Err(Error::ZeroElement)));
    assert_eq!(dp_filtration_degree_or_inf(&DPElement::zero(&s)), None);
}

#[test]
fn inverse_examples() {
    let s = shape(5, &[1, 2]);
    let one = DPElement::one(&s);
    assert_eq!(dp_inverse(&one).unwrap(), one);
    let mut rng = SplitMix64::new(4);
    for _ in 0..10 {
        let f = random_elem(&s, &mut rng, true).add(&DPElement::constant(&s, rng.nonzero_fe(s.field())));
        assert_eq!(dp_mul(&f, &dp_inverse(&f).unwrap()).unwrap(), one);
    }
    assert!(matches!(dp_inverse(&DPElement::var(&s, 0)), Err(Error::NotAUnit)));
}

#[test]
fn deglex_examples() {
    let p = 5;
    for s in 1..=3 {
        let mut a = vec![0; 4];
        for x in a.iter_mut().take(s) {
            *x = 4;
        }
        assert_eq!(MultiIndex(a.clone()).p_degree(s, p), p.pow(s as u32) - 1);
        assert_eq!(deglex_compare(&MultiIndex(a.clone()), &MultiIndex(a), s, p), Ordering::Equal);
    }
    // x_1^{p−1}x_2^{p−1}x_3 ≺ x_1^{p−1}x_2^{p−1}x_4 at s = 2
    let a = MultiIndex(vec![4, 4, 1, 0]);
    let b = MultiIndex(vec![4, 4, 0, 1]);
    assert_eq!(a.p_degree(2, p), b.p_degree(2, p));
    assert_eq!(deglex_compare(&a, &b, 2, p), Ordering::Less);
    // x_3 and x_1^{p−1}x_2^{p−1} sit just above Q_0
    assert_eq!(MultiIndex(vec![0, 0, 1, 0]).p_degree(2, p), 25);
}

#[test]
fn serialization_and_shapes() {
    let f = FieldSpec::new(5, 2).unwrap();
    let s = AlgebraShape::new(&f, &[1, 2]).unwrap();
    assert_eq!(s.dim(), 125);
    assert_eq!(AlgebraShape::parse(&f, &s.serialize()).unwrap(), s);
    let mut rng = SplitMix64::new(5);
    for _ in 0..10 {
        let g = random_elem(&s, &mut rng, false);
        assert_eq!(DPElement::parse(&f, &g.serialize()).unwrap(), g);
    }
    assert!(AlgebraShape::new(&f, &[1, 0]).is_err());
    assert!(DPElement::parse(&f, "O(1;1)|9:1").is_err());
}

fn shape_strategy() -> impl Strategy<Value = AlgebraShape> {
    prop_oneof![Just(shape(5, &[1, 1])), Just(shape(3, &[2, 1])), Just(shape(7, &[1])), Just(shape(3, &[1, 1, 1]))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(s in shape_strategy(), seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let f = random_elem(&s, &mut rng, false);
        let g = random_elem(&s, &mut rng, false);
        let h = random_elem(&s, &mut rng, false);
        prop_assert_eq!(f.mul(&g), g.mul(&f));
        prop_assert_eq!(f.mul(&g).mul(&h), f.mul(&g.mul(&h)));
        prop_assert_eq!(f.mul(&g.add(&h)), f.mul(&g).add(&f.mul(&h)));
        prop_assert_eq!(DPElement::one(&s).mul(&f), f.clone());
        let fm = random_elem(&s, &mut rng, true);
        prop_assert!(fm.pow(s.p()).is_zero());
        let prod = fm.mul(&g);
        if let (Some(a), Some(b), Some(c)) = (fm.filtration_degree(), g.filtration_degree(), prod.filtration_degree()) {
            prop_assert!(c >= a + b);
        }
    }

    #[test]
    fn divided_power_axioms(seed in any::<u64>(), r in 0u64..6, t in 0u64..6) {
        let s = shape(5, &[2]);
        let fs = s.field().clone();
        let mut rng = SplitMix64::new(seed);
        let f = random_elem(&s, &mut rng, true);
        let g = random_elem(&s, &mut rng, true);
        let c = rng.fe(&fs);
        let dp = |h: &DPElement, k: u64| dp_divided_power(h, k).unwrap();
        // (cf)^(r) = c^r f^(r)
        prop_assert_eq!(dp(&f.scale(c), r), dp(&f, r).scale(fs.pow(c, r)));
        // f^(r) f^(t) = C(r+t, r) f^(r+t)
        let b = binom_mod_p(r + t, r, 5).unwrap();
        prop_assert_eq!(dp(&f, r).mul(&dp(&f, t)), dp(&f, r + t).scale(fs.from_int(b as i64)));
        // (f+g)^(r) = Σ f^(l) g^(r−l)
        let mut sum = DPElement::zero(&s);
        for l in 0..=r {
            sum = sum.add(&dp(&f, l).mul(&dp(&g, r - l)));
        }
        prop_assert_eq!(dp(&f.add(&g), r), sum);
        // (fg)^(r) = f^r g^(r)
        prop_assert_eq!(dp(&f.mul(&g), r), f.pow(r).mul(&dp(&g, r)));
        // (f^(r))^(t) = (rt)!/(r!(r!)^t)… with r ≥ 1
        if r >= 1 {
            let ratio = (dp_ratio_product_form(t, r) % 5u32).to_u64().unwrap();
            prop_assert_eq!(dp(&dp(&f, r), t), dp(&f, r * t).scale(fs.from_int(ratio as i64)));
        }
        // below p, f^(r) = f^r / r!
        if r < 5 {
            let mut fact = 1i64;
            for k in 1..=r as i64 { fact *= k; }
            prop_assert_eq!(dp(&f, r), f.pow(r).scale(fs.inv(fs.from_int(fact)).unwrap()));
        }
    }

    #[test]
    fn deglex_is_monomial_order(a in prop::collection::vec(0usize..5, 4), b in prop::collection::vec(0usize..5, 4), c in prop::collection::vec(0usize..5, 4), s in 1usize..=4) {
        let p = 5;
        let (ma, mb) = (MultiIndex(a.clone()), MultiIndex(b.clone()));
        let ab = deglex_compare(&ma, &mb, s, p);
        prop_assert_eq!(ab, deglex_compare(&mb, &ma, s, p).reverse());
        prop_assert_eq!(ab == Ordering::Equal, a == b);
        prop_assert_ne!(deglex_compare(&MultiIndex(vec![0; 4]), &ma, s, p), Ordering::Greater);
        let sum: Vec<usize> = a.iter().zip(&c).map(|(x, y)| x + y).collect();
        if sum.iter().all(|&x| x < 5) {
            prop_assert_eq!(MultiIndex(sum.clone()).p_degree(s, p), ma.p_degree(s, p) + MultiIndex(c.clone()).p_degree(s, p));
            let sum_b: Vec<usize> = b.iter().zip(&c).map(|(x, y)| x + y).collect();
            if sum_b.iter().all(|&x| x < 5) {
                prop_assert_eq!(deglex_compare(&MultiIndex(sum), &MultiIndex(sum_b), s, p), ab);
            }
        }
    }
}
