//! The twelve acceptance criteria, one PASS/FAIL line each.

use std::time::Instant;

use modlie::automorphisms::{
    demushkin_reduce, premet_regular_reduce, AdmissibleAutomorphism, PremetOutcome, TruncatedAutomorphism,
};
use modlie::cartan_algebras::{
    contact_bracket, contact_d_k, contact_spanning_set, hamiltonian_d_h, hamiltonian_spanning_set, poisson_bracket,
    regular_nilpotent, special_spanning_set, span_dimension, DerivationElement,
};
use modlie::cli::semidirect_mixed;
use modlie::divided_power::{AlgebraShape, DPElement};
use modlie::linalg::{vec_add, Mat};
use modlie::restricted::{jacobson_si, p_closure, psi_relation, pth_power, Realization, WittRealization};
use modlie::rng::SplitMix64;
use modlie::scalars::binom_mod_p;
use modlie::semidirect::{
    random_z, semi_exp_ad, semi_is_nilpotent_direct, semi_nilpotency_criterion, semi_reduce, CriterionRoute,
    SemidirectAlgebra,
};
use modlie::zassenhaus::{
    classify_nilpotent, e0_torus, envelope_shape, lie_g_check, sample_nilpotent, sigma_grading_check,
    singular_separation_check, tyurin_reduce, yao_shu_reduce, zass_e_algebra, NilpotentTag, PEnvelopeElement,
};
use modlie::{Fe, FieldSpec, Result};
use num_bigint::BigUint;
use num_traits::ToPrimitive;

type Criterion = fn() -> Result<(bool, String)>;

fn f5() -> FieldSpec {
    FieldSpec::new(5, 1).unwrap()
}

fn witt(m: usize) -> WittRealization {
    WittRealization::new(&AlgebraShape::restricted(&f5(), m).unwrap()).unwrap()
}

fn sparse_poly(shape: &AlgebraShape, rng: &mut SplitMix64, num: u64, den: u64) -> DPElement {
    DPElement::from_dense(shape, &rng.sparse_fe_vec(shape.field(), shape.dim(), num, den))
}

fn c1() -> Result<(bool, String)> {
    let w = witt(2);
    let shape = &w.shape;
    let d = regular_nilpotent(shape);
    // l = 0 is 𝒟 itself; l = 1 gives −∂_2
    let d_p = DerivationElement::from_vec(shape, &pth_power(&w, &d.to_vec())?);
    let mut ok = d_p == DerivationElement::partial(shape, 1).neg();
    let a = d.operator();
    ok &= a.pow(25).is_zero();
    let top = DPElement::ordinary_monomial(shape, &[4, 4], Fe::ONE).to_dense();
    ok &= a.pow(24).mul_vec(&top) == DPElement::one(shape).to_dense();
    let mut cur = Mat::identity(&f5(), 25);
    for k in 0..=25 {
        ok &= cur.rank() == 25 - k;
        cur = cur.mul(&a);
    }
    Ok((ok, "𝒟^p = −∂_2, 𝒟^25 = 0, 𝒟^24(x^δ) = 1, rank(𝒟^k) = 25 − k".into()))
}

fn c2() -> Result<(bool, String)> {
    let p = 5u64;
    let mut checked = 0u64;
    for a in 0..625u64 {
        let mut row = BigUint::from(1u32);
        for b in 0..=a {
            if b > 0 {
                row = row * (a - b + 1) / b;
            }
            if binom_mod_p(a, b, p)? != (&row % p).to_u64().unwrap() {
                return Ok((false, format!("C({a},{b})")));
            }
            checked += 1;
        }
    }
    let mut ok = true;
    for (r, s) in [(2u32, 1u32), (3, 1), (3, 2), (4, 2)] {
        let base = p.pow(r) - p.pow(s);
        for i in 0..p.pow(s) {
            ok &= binom_mod_p(base + i, base, p)? == 1;
        }
    }
    Ok((ok, format!("{checked} binomials")))
}

fn c3() -> Result<(bool, String)> {
    let w = witt(2);
    let f = f5();
    let mut ok = true;
    for k in 0..1000 {
        let mut rng = SplitMix64::substream(3, k);
        let x = rng.fe_vec(&f, w.dim());
        let y = rng.fe_vec(&f, w.dim());
        let mut rhs = vec_add(&f, &pth_power(&w, &x)?, &pth_power(&w, &y)?);
        for s in jacobson_si(&w, &x, &y) {
            rhs = vec_add(&f, &rhs, &s);
        }
        ok &= pth_power(&w, &vec_add(&f, &x, &y))? == rhs;
    }
    Ok((ok, "1000 pairs".into()))
}

fn c4() -> Result<(bool, String)> {
    let shape = AlgebraShape::new(&f5(), &[2])?;
    let n = DerivationElement::zero(&shape).to_vec().len();
    let ops: Vec<Mat> = (0..n)
        .map(|i| {
            let mut v = vec![Fe::ZERO; n];
            v[i] = Fe::ONE;
            DerivationElement::from_vec(&shape, &v).operator()
        })
        .collect();
    let dim = p_closure(&f5(), &ops).len();
    Ok((dim == 26, format!("dim {dim}")))
}

fn c5() -> Result<(bool, String)> {
    let o2 = AlgebraShape::restricted(&f5(), 2)?;
    let o3 = AlgebraShape::restricted(&f5(), 3)?;
    let s = span_dimension(&o3, &special_spanning_set(&o3));
    let h = span_dimension(&o2, &hamiltonian_spanning_set(&o2)?);
    let k = span_dimension(&o3, &contact_spanning_set(&o3)?);
    Ok((s == 248 && h == 23 && k == 125, format!("S {s}, H {h}, K {k}")))
}

fn c6() -> Result<(bool, String)> {
    let o2 = AlgebraShape::restricted(&f5(), 2)?;
    let o3 = AlgebraShape::restricted(&f5(), 3)?;
    let mut rng = SplitMix64::new(6);
    let mut ok = true;
    for _ in 0..500 {
        let a = sparse_poly(&o2, &mut rng, 1, 3);
        let b = sparse_poly(&o2, &mut rng, 1, 3);
        ok &= hamiltonian_d_h(&a)?.bracket(&hamiltonian_d_h(&b)?) == hamiltonian_d_h(&poisson_bracket(&a, &b)?)?;
    }
    for _ in 0..500 {
        let a = sparse_poly(&o3, &mut rng, 1, 10);
        let b = sparse_poly(&o3, &mut rng, 1, 10);
        ok &= contact_d_k(&contact_bracket(&a, &b)?)? == contact_d_k(&a)?.bracket(&contact_d_k(&b)?);
    }
    Ok((ok, "500 H pairs, 500 K pairs".into()))
}

fn c7() -> Result<(bool, String)> {
    let l = SemidirectAlgebra::sl2_o1(&f5())?;
    let mut ok = true;
    let (mut nil, mut in_w0, mut reduced) = (0, 0, 0);
    for k in 0..2000 {
        let a = semidirect_mixed(&l, &mut SplitMix64::substream(7, k))?;
        let direct = semi_is_nilpotent_direct(&l, &a);
        let (crit, route, _) = semi_nilpotency_criterion(&l, &a)?;
        ok &= direct == crit;
        match route {
            CriterionRoute::TailInW0 => in_w0 += 1,
            CriterionRoute::Reduced { .. } => reduced += 1,
            CriterionRoute::TailNotNilpotent => {}
        }
        if direct {
            nil += 1;
            ok &= l.pth_iter(&a, 2)?.is_zero();
        }
    }
    ok &= nil > 0 && nil < 2000 && in_w0 > 0 && reduced > 0;
    Ok((ok, format!("{nil} nilpotent; {in_w0} via s_0, {reduced} via s_0′")))
}

fn c8() -> Result<(bool, String)> {
    let f = f5();
    let mut ok = true;
    // exp(ad(y⊗g))(d) = d − y⊗d(g) − y^[p]⊗g^{p−1}d(g)
    let check = |l: &SemidirectAlgebra, y: &[Fe], g: &DPElement, d: &DerivationElement| -> Result<bool> {
        let dg = d.apply(g);
        let yp = l.s().pth(y)?;
        let want = l
            .from_tail(d)
            .sub(&l.pure_tensor(y, &dg))
            .sub(&l.pure_tensor(&yp, &g.pow(4).mul(&dg)));
        Ok(semi_exp_ad(l, &l.pure_tensor(y, g), &l.from_tail(d))? == want)
    };
    let l1 = SemidirectAlgebra::sl2_o1(&f)?;
    let l2 = SemidirectAlgebra::sl2_witt(&f, 2)?;
    let mut rng = SplitMix64::new(8);
    for k in 0..200 {
        let (l, d) = if k % 2 == 0 {
            (&l1, DerivationElement::partial(l1.shape(), 0))
        } else {
            let shape = l2.shape();
            let n = DerivationElement::zero(shape).to_vec().len();
            (&l2, DerivationElement::from_vec(shape, &rng.sparse_fe_vec(&f, n, 1, 4)))
        };
        let shape = l.shape().clone();
        let y = rng.fe_vec(&f, 3);
        let mut g = sparse_poly(&shape, &mut rng, 1, 2);
        g.coeffs.remove(&0);
        ok &= check(l, &y, &g, &d)?;
    }
    Ok((ok, "200 pairs".into()))
}

fn c9() -> Result<(bool, String)> {
    let w = witt(1);
    let f = f5();
    let total = 5usize.pow(5);
    let point = |k: usize| -> Vec<Fe> {
        let mut v = Vec::new();
        let mut r = k;
        for _ in 0..5 {
            v.push(Fe((r % 5) as u32));
            r /= 5;
        }
        v
    };
    let index = |v: &[Fe]| v.iter().rev().fold(0usize, |acc, c| acc * 5 + c.0 as usize);
    let mut direct = vec![false; total];
    let mut psi_count = 0;
    for (k, slot) in direct.iter_mut().enumerate() {
        let v = point(k);
        *slot = w.operator(&v).pow(5).is_zero();
        if psi_relation(&w, &v, 0, 1)?.psi[0].is_zero() {
            psi_count += 1;
        }
    }
    let count = direct.iter().filter(|&&b| b).count();
    let conical = (0..total).filter(|&k| direct[k]).all(|k| {
        let v = point(k);
        (2..5).all(|c| direct[index(&v.iter().map(|&x| f.mul(Fe(c), x)).collect::<Vec<_>>())])
    });
    Ok((count == psi_count && conical && direct[0], format!("{count} of {total} nilpotent, ψ_0 count {psi_count}")))
}

fn c10() -> Result<(bool, String)> {
    let z = zass_e_algebra(5, 2, 2)?;
    let t = e0_torus(&z)?;
    let s = sigma_grading_check(&z);
    let lie = lie_g_check(&FieldSpec::new(5, 2)?, 2)?;
    let sep = singular_separation_check(5, 2, 2)?;
    let ok = t.periodic
        && t.independent
        && s.automorphism
        && s.multiplicities_ok
        && lie.dim == 23
        && sep.points == 15625
        && sep.only_zero;
    Ok((ok, format!("Lie(G) {}, {} points, {} singular", lie.dim, sep.points, sep.singular)))
}

fn c11() -> Result<(bool, String)> {
    let f = f5();
    let w2 = AlgebraShape::restricted(&f, 2)?;
    let o12 = envelope_shape(&f, 2)?;
    let l = SemidirectAlgebra::sl2_witt(&f, 2)?;
    let dd = regular_nilpotent(&w2);
    let n = DerivationElement::zero(&w2).to_vec().len();
    let mut ok = true;
    for k in 0..100 {
        let mut rng = SplitMix64::substream(11, k);
        // Demushkin: ∂_1 + x_1^{p−1}Σφ_i∂_i
        let mut z = DerivationElement::from_vec(&w2, &rng.sparse_fe_vec(&f, n, 1, 3));
        z.f[0].coeffs.insert(0, rng.nonzero_fe(&f));
        let r = demushkin_reduce(&z)?;
        ok &= r.chain.apply_witt(&z)? == r.form;
        ok &= r.form.f[0].constant_term() == Fe::ONE
            && r.form.f.iter().all(|g| g.coeffs.keys().all(|&c| c == 0 || w2.digits(c)[0] == 4));
        // Premet: back to 𝒟
        let y = TruncatedAutomorphism::random(&w2, &mut rng).conjugate(&dd)?;
        ok &= match premet_regular_reduce(&y)? {
            PremetOutcome::Regular(r) => r.form == dd && r.chain.apply_witt(&y)? == dd,
            PremetOutcome::Singular { .. } => false,
        };
        // Yao–Shu: ∂ + Σ l_i x^(p^i−1)∂
        let mut v = rng.sparse_fe_vec(&f, 25, 1, 2);
        v[0] = rng.nonzero_fe(&f);
        let d = PEnvelopeElement::from_poly(&DPElement::from_dense(&o12, &v));
        let r = yao_shu_reduce(&d)?;
        ok &= r.chain.apply_lp(&d)? == r.form;
        ok &= r.form.poly.coeffs.keys().all(|&c| [0, 4, 24].contains(&c)) && r.form.poly.coeff(0) == Fe::ONE;
        // Tyurin: ∂^p + β_0∂ + x^(20)h∂
        let mut d = PEnvelopeElement::dpow(&o12, 1);
        d.poly = DPElement::from_dense(&o12, &rng.fe_vec(&f, 25));
        let r = tyurin_reduce(&d, 1)?;
        ok &= r.chain.apply_lp(&d)? == r.form;
        ok &= r.form.tails == d.tails && r.form.poly.coeffs.keys().all(|&c| c == 0 || c >= 20);
        // semidirect, s = 1: O(1;1) part is s_0′⊗x_1^{p−1}
        let mut a = l.random(&mut rng, 1, 3);
        a.tail = random_z(l.shape(), 1, &mut rng);
        let r = semi_reduce(&l, &a)?;
        ok &= r.s == 1 && modlie::semidirect::semi_apply_chain(&l, &r.chain, &a)? == r.form;
        ok &= r.form.tail == a.tail;
        ok &= r.form.tensor.iter().all(|g| g.coeffs.keys().all(|&c| l.shape().digits(c)[1] != 0 || c == 4));
    }
    Ok((ok, "100 runs of each reduction".into()))
}

fn c12() -> Result<(bool, String)> {
    let shape = envelope_shape(&f5(), 2)?;
    let mut ok = true;
    let mut regular = 0;
    for k in 0..200 {
        let mut rng = SplitMix64::substream(12, k);
        let d = sample_nilpotent(&shape, &mut rng)?;
        let tag = classify_nilpotent(&d)?.tag;
        if tag == NilpotentTag::Regular {
            regular += 1;
        }
        let phi = AdmissibleAutomorphism::random(&shape, &mut rng);
        ok &= classify_nilpotent(&phi.apply_lp(&d)?)?.tag == tag;
    }
    ok &= regular > 0 && regular < 200;
    Ok((ok, format!("{regular} regular, {} singular", 200 - regular)))
}

fn main() {
    let criteria: [(&str, Criterion); 12] = [
        ("𝒟 in W(2;1): p-powers, Jordan block, ranks", c1),
        ("Lucas sweep below 625 and the ≡ 1 instances", c2),
        ("Jacobson formula on 1000 pairs in W(2;1)", c3),
        ("p-closure of W(1;2) has dimension 26", c4),
        ("S, H, K dimensions 248, 23, 125", c5),
        ("D_H and D_K preserve brackets", c6),
        ("semidirect nilpotency criterion on 2000 elements", c7),
        ("exp(ad) closed forms on 200 pairs", c8),
        ("W(1;1) brute force over F_5", c9),
        ("Zassenhaus suite at p = 5, n = 2, M = 2", c10),
        ("reduction round trips", c11),
        ("classes invariant under admissible automorphisms", c12),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("{tag} {:>2}. {name}: {detail} ({:.2} s)", i + 1, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of 12 passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
