use modlie::automorphisms::{Move, TruncatedAutomorphism};
use modlie::cartan_algebras::DerivationElement;
use modlie::divided_power::{AlgebraShape, DPElement};
use modlie::restricted::Realization;
use modlie::rng::SplitMix64;
use modlie::semidirect::*;
use modlie::{Error, Fe, FieldSpec};
use proptest::prelude::*;

const E: [u32; 3] = [1, 0, 0];
const F: [u32; 3] = [0, 1, 0];
const H: [u32; 3] = [0, 0, 1];

fn fe3(v: [u32; 3]) -> Vec<Fe> {
    v.iter().map(|&c| Fe(c)).collect()
}

fn ord(shape: &AlgebraShape, a: &[usize]) -> DPElement {
    DPElement::ordinary_monomial(shape, a, Fe::ONE)
}

fn o1(p: u64) -> SemidirectAlgebra {
    SemidirectAlgebra::sl2_o1(&FieldSpec::new(p, 1).unwrap()).unwrap()
}

fn witt(p: u64, m: usize) -> SemidirectAlgebra {
    SemidirectAlgebra::sl2_witt(&FieldSpec::new(p, 1).unwrap(), m).unwrap()
}

#[test]
fn dimensions() {
    assert_eq!(o1(5).dim(), 16);
    assert_eq!(o1(7).dim(), 22);
    assert_eq!(witt(5, 1).dim(), 20);
    assert_eq!(witt(3, 2).dim(), 27 + 18);
    assert_eq!(witt(3, 2).module_dim(), 27);
}

#[test]
fn bracket_examples() {
    let l = o1(5);
    let shape = l.shape().clone();
    let one = DPElement::one(&shape);
    let e1 = l.pure_tensor(&fe3(E), &one);
    let f1 = l.pure_tensor(&fe3(F), &one);
    assert_eq!(l.bracket(&e1, &f1), l.pure_tensor(&fe3(H), &one));
    // [y⊗g, ∂] = −y⊗∂g
    let g = ord(&shape, &[3]).add(&DPElement::var(&shape, 0));
    let dd = l.from_tail(&DerivationElement::partial(&shape, 0));
    let yg = l.pure_tensor(&fe3([1, 2, 3]), &g);
    assert_eq!(l.bracket(&yg, &dd), l.pure_tensor(&fe3([1, 2, 3]), &g.partial(0).neg()));
    // the Realization bracket is the commutator of operators
    let mut rng = SplitMix64::new(9);
    for _ in 0..5 {
        let a = l.random(&mut rng, 1, 2);
        let b = l.random(&mut rng, 1, 2);
        assert_eq!(l.operator(&l.bracket(&a, &b)), l.operator(&a).commutator(&l.operator(&b)));
    }
}

#[test]
fn pth_examples() {
    for p in [3, 5, 7] {
        let l = o1(p);
        let shape = l.shape().clone();
        let one = DPElement::one(&shape);
        let h1 = l.pure_tensor(&fe3(H), &one);
        assert_eq!(l.pth(&h1).unwrap(), h1);
        let ex = l.pure_tensor(&fe3(E), &DPElement::var(&shape, 0));
        assert!(l.pth(&ex).unwrap().is_zero());
        // nilpotent-in-S times unit also has zero p-th power
        let eu = l.pure_tensor(&fe3(E), &one.add(&DPElement::var(&shape, 0)));
        assert!(l.pth(&eu).unwrap().is_zero());
        let hx = l.pure_tensor(&fe3(H), &DPElement::var(&shape, 0));
        assert_eq!(l.pth(&hx).unwrap(), pure_tensor_pth(&hx, l.s()).unwrap());
    }
}

#[test]
fn sl2_d_pth_formula() {
    // (h⊗g + λ∂)^p = h⊗(a_0^p − λ^{p−1} a_{p−1}) for g = Σ a_i x^i
    let l = o1(5);
    let shape = l.shape().clone();
    let f = l.field().clone();
    let mut rng = SplitMix64::new(11);
    for _ in 0..30 {
        let a = rng.fe_vec(&f, 5);
        let lam = rng.fe(&f);
        let mut g = DPElement::zero(&shape);
        for (i, &c) in a.iter().enumerate() {
            g = g.add(&ord(&shape, &[i]).scale(c));
        }
        let x = l.pure_tensor(&fe3(H), &g).add(&l.from_tail(&DerivationElement::partial(&shape, 0).scale(lam)));
        let c = f.sub(f.pow(a[0], 5), f.mul(f.pow(lam, 4), a[4]));
        assert_eq!(l.pth(&x).unwrap(), l.pure_tensor(&fe3(H), &DPElement::constant(&shape, c)));
    }
}

#[test]
fn autg1_pth() {
    // (λ∂ + b⊗x^{p−1})^p = −λ^{p−1} b⊗1
    let l = o1(5);
    let shape = l.shape().clone();
    let f = l.field().clone();
    let mut rng = SplitMix64::new(12);
    for _ in 0..20 {
        let b = rng.fe_vec(&f, 3);
        let lam = rng.fe(&f);
        let x = l
            .pure_tensor(&b, &ord(&shape, &[4]))
            .add(&l.from_tail(&DerivationElement::partial(&shape, 0).scale(lam)));
        let c = f.neg(f.pow(lam, 4));
        let want = l.pure_tensor(&b, &DPElement::constant(&shape, c));
        assert_eq!(l.pth(&x).unwrap(), want);
        let nil = lam.is_zero() || l.s().is_nilpotent(&b);
        assert_eq!(semi_is_nilpotent_direct(&l, &x), nil);
    }
}

#[test]
fn exp_ad_identity_and_routes() {
    let l = witt(5, 1);
    let shape = l.shape().clone();
    let mut rng = SplitMix64::new(13);
    let t = l.random(&mut rng, 1, 2);
    assert_eq!(semi_exp_ad(&l, &l.zero(), &t).unwrap(), t);
    for _ in 0..15 {
        let t = l.random(&mut rng, 1, 2);
        // f ∈ m, arbitrary s
        let s = rng.fe_vec(l.field(), 3);
        let mut fpoly = DPElement::from_dense(&shape, &rng.fe_vec(l.field(), 5));
        fpoly.coeffs.remove(&0);
        let u = l.pure_tensor(&s, &fpoly);
        assert_eq!(semi_exp_ad(&l, &u, &t).unwrap(), semi_exp_ad_formula(&l, &s, &fpoly, &t).unwrap());
        // nilpotent s, unit f
        let g = fpoly.add(&DPElement::one(&shape));
        let u = l.pure_tensor(&fe3(E), &g);
        assert_eq!(semi_exp_ad(&l, &u, &t).unwrap(), semi_exp_ad_formula(&l, &fe3(E), &g, &t).unwrap());
    }
    let bad = l.pure_tensor(&fe3(H), &DPElement::one(&shape));
    assert!(matches!(semi_exp_ad(&l, &bad, &t), Err(Error::Precondition(_))));
    assert!(matches!(semi_exp_ad_formula(&l, &fe3(H), &DPElement::one(&shape), &t), Err(Error::Precondition(_))));
}

#[test]
fn exp_ad_is_an_automorphism() {
    let l = witt(3, 2);
    let shape = l.shape().clone();
    let mut rng = SplitMix64::new(14);
    for _ in 0..5 {
        let s = rng.fe_vec(l.field(), 3);
        let u = l.pure_tensor(&s, &DPElement::var(&shape, 1).add(&ord(&shape, &[1, 1])));
        let a = l.random(&mut rng, 1, 4);
        let b = l.random(&mut rng, 1, 4);
        let ea = semi_exp_ad(&l, &u, &a).unwrap();
        let eb = semi_exp_ad(&l, &u, &b).unwrap();
        assert_eq!(semi_exp_ad(&l, &u, &l.bracket(&a, &b)).unwrap(), l.bracket(&ea, &eb));
        assert_eq!(semi_exp_ad(&l, &u, &l.pth(&a).unwrap()).unwrap(), l.pth(&ea).unwrap());
    }
}

#[test]
fn reduce_examples() {
    let l = o1(5);
    let shape = l.shape().clone();
    let dd = DerivationElement::partial(&shape, 0);
    let r = semi_reduce(&l, &l.from_tail(&dd)).unwrap();
    assert!(r.chain.is_empty());
    assert_eq!(r.s, 1);
    assert!(r.s0.iter().all(|c| c.is_zero()));
    // e⊗1 + ∂: the first move uses f = x
    let a = l.pure_tensor(&fe3(E), &DPElement::one(&shape)).add(&l.from_tail(&dd));
    let r = semi_reduce(&l, &a).unwrap();
    let Move::ExpAd(u) = &r.chain.moves[0] else { panic!() };
    assert_eq!(l.parse(u).unwrap(), l.pure_tensor(&fe3(E), &DPElement::var(&shape, 0)));
    assert_eq!(semi_apply_chain(&l, &r.chain, &a).unwrap(), r.form);
    // b⊗x^{p−1} + ∂ is already reduced with s_0′ = b
    let b = fe3([2, 3, 1]);
    let a = l.pure_tensor(&b, &ord(&shape, &[4])).add(&l.from_tail(&dd));
    let r = semi_reduce(&l, &a).unwrap();
    assert!(r.chain.is_empty());
    assert_eq!(r.s0, b);
    // tail in W_(0) is rejected
    assert!(matches!(semi_reduce(&l, &l.zero()), Err(Error::Precondition(_))));
}

#[test]
fn nilpotency_examples() {
    let l = o1(5);
    let shape = l.shape().clone();
    let dd = l.from_tail(&DerivationElement::partial(&shape, 0));
    let one = DPElement::one(&shape);
    let v = semi_is_nilpotent(&l, &l.pure_tensor(&fe3(H), &one).add(&dd)).unwrap();
    assert!(!v.direct);
    assert!(matches!(v.route, CriterionRoute::Reduced { s: 1, .. }));
    let v = semi_is_nilpotent(&l, &l.pure_tensor(&fe3(E), &one).add(&dd)).unwrap();
    assert!(v.direct);
    let v = semi_is_nilpotent(&l, &l.pure_tensor(&fe3(E), &one)).unwrap();
    assert!(v.direct && v.route == CriterionRoute::TailInW0);
    let v = semi_is_nilpotent(&l, &l.pure_tensor(&fe3(H), &DPElement::var(&shape, 0))).unwrap();
    assert!(v.direct && v.route == CriterionRoute::TailInW0);
    let w = witt(5, 1);
    let mut x = DerivationElement::zero(w.shape());
    x.f[0] = DPElement::var(w.shape(), 0);
    let v = semi_is_nilpotent(&w, &w.from_tail(&x)).unwrap();
    assert!(!v.direct && v.route == CriterionRoute::TailNotNilpotent);
}

#[test]
fn nilpotency_on_conjugated_tails() {
    // tails in W(2;1) moved off normal form by automorphisms of O(2;1)
    let l = witt(3, 2);
    let shape = l.shape().clone();
    let mut rng = SplitMix64::new(15);
    let mut reduced = 0;
    for i in 0..40 {
        let s = 1 + (i % 2);
        let z = random_z(&shape, s, &mut rng);
        let sigma = TruncatedAutomorphism::random(&shape, &mut rng);
        let mut a = l.from_tail(&sigma.conjugate(&z).unwrap());
        for g in a.tensor.iter_mut() {
            *g = DPElement::from_dense(&shape, &rng.sparse_fe_vec(l.field(), shape.dim(), 1, 3));
        }
        if rng.below(2) == 0 {
            let c = rng.fe(l.field());
            a = a.add(&l.pure_tensor(&fe3([c.0, 0, 0]), &DPElement::one(&shape)));
        }
        let v = semi_is_nilpotent(&l, &a).unwrap();
        if matches!(v.route, CriterionRoute::Reduced { .. }) {
            reduced += 1;
        }
    }
    assert!(reduced > 30);
}

#[test]
fn d1_pth_power_formula() {
    // D_1^{[p]^s} ≡ z^{[p]^s} + (−1)^s s_0′⊗1 modulo S⊗m
    let l = witt(3, 2);
    let shape = l.shape().clone();
    let f = l.field().clone();
    let mut rng = SplitMix64::new(16);
    for s in 1..=2usize {
        let top = modlie::automorphisms::top_monomial_in(&shape, s);
        for _ in 0..5 {
            let z = random_z(&shape, s, &mut rng);
            let s0 = rng.fe_vec(&f, 3);
            let mut v = l.zero();
            for g in v.tensor.iter_mut() {
                for r in 0..shape.dim() {
                    if shape.digits(r)[s..].iter().any(|&d| d > 0) && rng.below(3) == 0 {
                        g.add_term(r, rng.nonzero_fe(&f));
                    }
                }
            }
            let d1 = l.pure_tensor(&s0, &top).add(&v).add(&l.from_tail(&z));
            let pw = l.pth_iter(&d1, s as u32).unwrap();
            assert_eq!(pw.tail, modlie::automorphisms::witt_pth_iter(&z, s as u32).unwrap());
            let sign = if s % 2 == 0 { Fe::ONE } else { f.neg(Fe::ONE) };
            let want: Vec<Fe> = s0.iter().map(|&c| f.mul(sign, c)).collect();
            assert_eq!(pw.constant_part(), want);
            let r = semi_reduce(&l, &d1).unwrap();
            assert!(r.chain.is_empty());
            assert_eq!(r.s0, s0);
        }
    }
}

#[test]
fn tail_structure_properties() {
    for (p, m) in [(3, 2), (5, 2), (3, 3)] {
        let shape = AlgebraShape::restricted(&FieldSpec::new(p, 1).unwrap(), m).unwrap();
        let mut rng = SplitMix64::new(p * 7 + m as u64);
        for s in 1..=m {
            assert_eq!(tail_form_s(&d0(&shape, s)), Some(s));
            assert!(iw_closure_check(&shape, s, &mut rng, 10).unwrap());
            for _ in 0..4 {
                let z = random_z(&shape, s, &mut rng);
                assert_eq!(tail_form_s(&z), Some(s));
                assert!(zps_in_w0(&z, s).unwrap());
                let rep = m_space_report(&z, s);
                assert_eq!(rep.dim, shape.dim() - 1);
                assert!(rep.complement_ok);
            }
        }
    }
}

#[test]
fn serialization_round_trip() {
    let l = witt(5, 2);
    let mut rng = SplitMix64::new(17);
    for _ in 0..10 {
        let a = l.random(&mut rng, 1, 8);
        assert_eq!(l.parse(&a.serialize()).unwrap(), a);
    }
    assert_eq!(l.parse(&l.zero().serialize()).unwrap(), l.zero());
    assert!(l.parse("tensor{7=x};tail{}").is_err());
    assert!(l.parse("garbage").is_err());
}

#[test]
fn invalid_algebras_rejected() {
    let f = FieldSpec::new(5, 1).unwrap();
    let shape = AlgebraShape::restricted(&f, 2).unwrap();
    // k∂_1 is not transitive on O(2;1)
    let d = vec![DerivationElement::partial(&shape, 0)];
    assert!(SemidirectAlgebra::new(SAlgebra::sl2(&f), &shape, d, "bad").is_err());
    // x∂ alone is not transitive
    let s1 = AlgebraShape::restricted(&f, 1).unwrap();
    let mut xd = DerivationElement::zero(&s1);
    xd.f[0] = DPElement::var(&s1, 0);
    assert!(SemidirectAlgebra::new(SAlgebra::sl2(&f), &s1, vec![xd], "bad").is_err());
    // a non-Lie table
    let mut c = modlie::cartan_algebras::sl2_structure(&f);
    c[0][1][2] = Fe(2);
    assert!(SAlgebra::from_structure(&f, "bad", c, vec![vec![Fe::ZERO; 3]; 3]).is_err());
}

#[test]
fn batch_matches_sequential() {
    let l = o1(5);
    let mut rng = SplitMix64::new(18);
    let elems: Vec<_> = (0..20).map(|_| l.random(&mut rng, 1, 2)).collect();
    let batch = semi_is_nilpotent_batch(&l, &elems);
    for (a, v) in elems.iter().zip(batch) {
        assert_eq!(v.unwrap(), semi_is_nilpotent(&l, a).unwrap());
    }
}

fn algebra(which: u8) -> SemidirectAlgebra {
    if which == 0 {
        o1(5)
    } else {
        witt(3, 2)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn restricted_axioms(seed in any::<u64>(), which in 0u8..2) {
        let l = algebra(which);
        let mut rng = SplitMix64::new(seed);
        let a = l.random(&mut rng, 1, 3);
        let b = l.random(&mut rng, 1, 3);
        let c = rng.fe(l.field());
        let f = l.field().clone();
        // (ca)^[p] = c^p a^[p]
        prop_assert_eq!(l.pth(&a.scale(c)).unwrap(), l.pth(&a).unwrap().scale(f.pow(c, f.p())));
        // ad(a^[p]) = (ad a)^p on b
        let mut it = b.clone();
        for _ in 0..f.p() {
            it = l.bracket(&a, &it);
        }
        prop_assert_eq!(l.bracket(&l.pth(&a).unwrap(), &b), it);
        // Realization coordinates round-trip
        let v = l.to_vec(&a).unwrap();
        prop_assert_eq!(Realization::decompose(&l, &Realization::operator(&l, &v)).unwrap(), v);
        // a^{[p]^2} = 0 for nilpotent a
        if semi_is_nilpotent(&l, &a).unwrap().direct {
            prop_assert!(l.pth_iter(&a, 2).unwrap().is_zero());
        }
    }

    #[test]
    fn nilpotency_routes_agree(seed in any::<u64>()) {
        let l = o1(5);
        let shape = l.shape().clone();
        let mut rng = SplitMix64::new(seed);
        let mut a = l.random(&mut rng, 1, 2);
        if rng.below(2) == 0 {
            let lam = rng.nonzero_fe(l.field());
            a.tail = DerivationElement::partial(&shape, 0).scale(lam);
            a.tensor[0].add_term(0, rng.fe(l.field()));
        }
        prop_assert!(semi_is_nilpotent(&l, &a).is_ok());
    }
}
