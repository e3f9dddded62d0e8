use std::process::Command;

use modlie::cli::{run_args, SCHEMA};
use modlie::zassenhaus::{classify_nilpotent, NilpotentTag, PEnvelopeElement};
use modlie::FieldSpec;
use serde_json::Value;

fn modlie(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_modlie")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap())
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let (code, out) = modlie(&all);
    (code, serde_json::from_str(&out).unwrap_or(Value::Null))
}

#[test]
fn construct_dimensions() {
    for (args, dim) in [
        (vec!["construct", "--family", "witt", "--m", "2", "--n", "1,1"], 50),
        (vec!["construct", "--family", "zassenhaus", "--n", "2"], 26),
        (vec!["construct", "--family", "sl2-semidirect"], 16),
    ] {
        let (code, v) = json(&args);
        assert_eq!(code, 0, "{args:?}");
        assert_eq!(v["schema"], SCHEMA);
        assert_eq!(v["fields"]["dim"], dim);
        assert_eq!(v["ok"], true);
    }
}

#[test]
fn count_w11_brute_force() {
    let (code, v) = json(&["count", "--family", "witt", "--m", "1"]);
    assert_eq!(code, 0);
    let f = &v["fields"];
    assert_eq!(f["total"], 3125);
    assert_eq!(f["nilpotent"], f["criterion_count"]);
    assert_eq!(f["agree"], true);
    // q^{dim − 1} nilpotent points
    assert_eq!(f["nilpotent"], 625);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn size_guard_and_usage_errors() {
    assert_eq!(modlie(&["count", "--m", "2"]).0, 2);
    assert_eq!(modlie(&["count", "--p", "4"]).0, 2);
    assert_eq!(modlie(&["construct", "--family", "zassenhaus", "--p", "3"]).0, 2);
    assert_eq!(modlie(&["construct", "--family", "zassenhaus-e", "--n", "2", "--M", "3"]).0, 2);
    assert_eq!(modlie(&["frobnicate"]).0, 2);
    assert_eq!(modlie(&["reduce", "premet", "--family", "zassenhaus"]).0, 2);
    assert_eq!(modlie(&["reduce", "yao-shu", "--family", "zassenhaus", "--element", "nonsense"]).0, 2);
    let (code, out) = modlie(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("construct"));
}

#[test]
fn precondition_failures_exit_one() {
    // α_0 = 0 violates the Yao–Shu precondition
    let (code, _) = modlie(&["reduce", "yao-shu", "--family", "zassenhaus", "--element", "poly{O(1;2)|1:1};tails{0}"]);
    assert_eq!(code, 1);
}

#[test]
fn reports_are_deterministic() {
    let args = ["sample", "nilpotent", "--family", "zassenhaus", "--count", "6", "--seed", "17"];
    let a = modlie(&args);
    let b = modlie(&args);
    assert_eq!(a, b);
    let one = run_args(["modlie", "count", "--mode", "sample", "--samples", "300", "--m", "2", "--workers", "1"]);
    let three = run_args(["modlie", "count", "--mode", "sample", "--samples", "300", "--m", "2", "--workers", "3"]);
    assert_eq!(one.code, 0);
    assert_eq!(one.stdout, three.stdout);
    let other = modlie(&["sample", "nilpotent", "--family", "zassenhaus", "--count", "6", "--seed", "18"]);
    assert_ne!(a.1, other.1);
}

#[test]
fn text_and_json_carry_the_same_checks() {
    let (_, text) = modlie(&["construct", "--family", "zassenhaus"]);
    let (_, v) = json(&["construct", "--family", "zassenhaus"]);
    for c in v["checks"].as_array().unwrap() {
        assert!(text.contains(c["name"].as_str().unwrap()));
    }
    for (k, _) in v["fields"].as_object().unwrap() {
        assert!(text.contains(&format!("{k}:")));
    }
}

#[test]
fn reduce_examples() {
    // identity inputs give identity chains
    let (code, v) = json(&["reduce", "premet", "--m", "2", "--element", "∂1=O(2;1,1)|0:1;∂2=O(2;1,1)|4:4"]);
    assert_eq!(code, 0);
    assert_eq!(v["fields"]["chain_length"], 0);
    let (code, v) = json(&["reduce", "demushkin", "--m", "2", "--element", "∂1=O(2;1,1)|0:1;∂2=O(2;1,1)|"]);
    assert_eq!(code, 0);
    assert_eq!(v["fields"]["chain_length"], 0);
    // random conjugates of 𝒟 come back to 𝒟
    for seed in ["1", "2", "3"] {
        let (code, v) = json(&["reduce", "premet", "--m", "2", "--seed", seed]);
        assert_eq!(code, 0);
        assert_eq!(v["fields"]["form"], "∂1=O(2;1,1)|0:1;∂2=O(2;1,1)|4:4");
    }
    // ∂^p + x∂ in W(1;2)_p: the form keeps only x^(20)·h terms
    let (code, v) = json(&["reduce", "tyurin", "--family", "zassenhaus", "--element", "poly{O(1;2)|1:1};tails{1}"]);
    assert_eq!(code, 0);
    let form = PEnvelopeElement::parse(&FieldSpec::new(5, 1).unwrap(), v["fields"]["form"].as_str().unwrap()).unwrap();
    assert_eq!(form.tails, vec![modlie::Fe::ONE]);
    assert!(!form.poly.is_zero());
    assert!(form.poly.coeffs.keys().all(|&k| k >= 20));
    for which in ["yao-shu", "tyurin"] {
        assert_eq!(json(&["reduce", which, "--family", "zassenhaus", "--seed", "9"]).0, 0);
    }
    assert_eq!(json(&["reduce", "semidirect", "--family", "sl2-semidirect", "--seed", "9"]).0, 0);
    assert_eq!(json(&["reduce", "semidirect", "--family", "sl2-witt", "--m", "2", "--seed", "9"]).0, 0);
}

#[test]
fn sample_constraints() {
    let f = FieldSpec::new(5, 1).unwrap();
    for (c, tag) in [("regular-nilpotent", NilpotentTag::Regular), ("singular-nilpotent", NilpotentTag::Singular)] {
        let (code, v) = json(&["sample", c, "--family", "zassenhaus", "--count", "8"]);
        assert_eq!(code, 0);
        let elems = v["fields"]["elements"].as_array().unwrap();
        assert_eq!(elems.len(), 8);
        for e in elems {
            let d = PEnvelopeElement::parse(&f, e.as_str().unwrap()).unwrap();
            assert_eq!(classify_nilpotent(&d).unwrap().tag, tag);
        }
    }
    let (code, v) = json(&["sample", "nilpotent", "--family", "sl2-semidirect", "--count", "5"]);
    assert_eq!(code, 0);
    assert_eq!(v["ok"], true);
    let (code, v) = json(&["sample", "any", "--m", "2", "--count", "4"]);
    assert_eq!(code, 0);
    assert_eq!(v["fields"]["attempts"], 4);
    assert_eq!(modlie(&["sample", "regular-nilpotent", "--family", "sl2-semidirect"]).0, 2);
    // an impossible budget is reported, not looped on
    assert_eq!(modlie(&["sample", "singular-nilpotent", "--m", "2", "--budget", "1", "--count", "20"]).0, 1);
}

#[test]
fn verify_suites() {
    for suite in ["scalars", "cartan", "zassenhaus"] {
        let (code, out) = modlie(&["verify", "--suite", suite]);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("[PASS]") && !out.contains("[FAIL]"));
    }
    let (code, out) = modlie(&["verify", "--suite", "zassenhaus", "--p", "3"]);
    assert_eq!(code, 0);
    assert!(out.contains("skipped_zassenhaus"));
}
