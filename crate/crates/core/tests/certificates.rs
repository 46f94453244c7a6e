use liouville_signs::arith::{Sign, DEFAULT_PRIME_CAP};
use liouville_signs::construct::{construct_m, construct_prime_pair, verify_certificate, verify_prime_pair, CLAUSES};
use liouville_signs::report::{parse_certificate, CertificateDocument, LoadedCertificate};
use serde_json::{json, Value};

fn certificate_json(d: u64, t: Sign) -> Value {
    let cert = construct_m(d, t, DEFAULT_PRIME_CAP).unwrap();
    let report = verify_certificate(&cert);
    assert!(report.passed(), "{:?}", report.failures());
    serde_json::to_value(CertificateDocument { certificate: cert, checks: report.clauses }).unwrap()
}

fn failures_of(v: &Value) -> Vec<String> {
    match parse_certificate(&v.to_string()).unwrap() {
        LoadedCertificate::M(c) => verify_certificate(&c).failures().into_iter().map(String::from).collect(),
        LoadedCertificate::PrimePair(c) => verify_prime_pair(&c).failures().into_iter().map(String::from).collect(),
    }
}

#[test]
fn json_round_trip_is_lossless() {
    for (d, t) in [(6, Sign::Plus), (15, Sign::Plus), (30, Sign::Minus), (105, Sign::Minus)] {
        let cert = construct_m(d, t, DEFAULT_PRIME_CAP).unwrap();
        let text = serde_json::to_string(&cert).unwrap();
        let LoadedCertificate::M(back) = parse_certificate(&text).unwrap() else { panic!("wrong kind") };
        assert_eq!(*back, cert);
    }
}

#[test]
fn big_integers_are_decimal_strings() {
    let v = certificate_json(15, Sign::Plus);
    assert!(v["M"].is_string() && v["D"].is_string());
    assert!(v["pell_evidence"]["x"].is_string());
    assert!(v["predicted_form"]["c"].as_str().unwrap().starts_with('-'));
}

#[test]
fn checks_cover_every_clause() {
    let v = certificate_json(6, Sign::Plus);
    let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["clause"].as_str().unwrap()).collect();
    assert_eq!(names, CLAUSES);
}

#[test]
fn recorded_checks_are_ignored_on_verify() {
    let mut v = certificate_json(6, Sign::Plus);
    v["checks"] = json!([{ "clause": "consistency", "passed": false, "detail": "forged" }]);
    assert!(failures_of(&v).is_empty());
}

/// One tampering per certificate field, each paired with the clause that must catch it.
fn tamperings() -> Vec<(&'static str, fn(&mut Value), &'static str)> {
    vec![
        ("d", |v| v["d"] = json!("21"), "consistency"),
        ("d_primes", |v| v["d_primes"] = json!([3, 5]), "rejected_orderings"),
        ("d_primes extra", |v| v["d_primes"] = json!([5, 3, 7]), "consistency"),
        ("t", |v| v["t"] = json!(-1), "consistency"),
        ("s", |v| v["s"] = json!(1), "consistency"),
        ("lambda_d", |v| v["lambda_d"] = json!(-1), "consistency"),
        ("lambda_m", |v| v["lambda_m"] = json!(1), "liouville_sign"),
        ("m_primes", |v| v["m_primes"] = json!([61]), "consistency"),
        ("e1", |v| v["e1"] = json!(71), "consistency"),
        ("e2", |v| v["e2"] = json!(227), "consistency"),
        ("M", |v| v["M"] = json!("525602"), "consistency"),
        ("D", |v| v["D"] = json!("7884016"), "consistency"),
        ("predicted_form", |v| v["predicted_form"]["a"] = json!("15"), "consistency"),
        ("pell a", |v| v["pell_evidence"]["a"] = json!("15"), "pell_evidence"),
        ("pell b", |v| v["pell_evidence"]["b"] = json!("525601"), "pell_evidence"),
        ("pell eps", |v| v["pell_evidence"]["eps"] = json!(-1), "pell_evidence"),
        ("pell x", |v| bump(&mut v["pell_evidence"]["x"]), "pell_evidence"),
        ("pell y", |v| bump(&mut v["pell_evidence"]["y"]), "pell_evidence"),
        ("rejected e1", |v| v["rejected_orderings"][0]["e1"] = json!(79), "rejected_orderings"),
        ("rejected forms", |v| v["rejected_orderings"][0]["principal_forms"] = json!([]), "rejected_orderings"),
        ("rejected dropped", |v| v["rejected_orderings"] = json!([]), "rejected_orderings"),
    ]
}

fn bump(x: &mut Value) {
    let n: num_bigint::BigInt = x.as_str().unwrap().parse().unwrap();
    *x = json!((n + 1u32).to_string());
}

#[test]
fn every_single_field_tamper_is_caught_by_its_clause() {
    let original = certificate_json(15, Sign::Plus);
    assert_eq!(original["rejected_orderings"].as_array().unwrap().len(), 1);
    for (name, tamper, clause) in tamperings() {
        let mut v = original.clone();
        tamper(&mut v);
        assert_ne!(v, original, "{name}: tampering changed nothing");
        let failures = failures_of(&v);
        assert!(failures.iter().any(|f| f == clause), "{name}: expected {clause}, got {failures:?}");
    }
}

#[test]
fn six_regression_tamperings() {
    let original = certificate_json(6, Sign::Plus);
    let mut v = original.clone();
    v["e2"] = json!(13);
    assert!(failures_of(&v).contains(&"constructed_primes".to_string()));
    let mut v = original;
    v["lambda_m"] = json!(1);
    assert_eq!(failures_of(&v), vec!["liouville_sign"]);
}

#[test]
fn prime_pair_tamperings() {
    let cert = construct_prime_pair(7, DEFAULT_PRIME_CAP).unwrap();
    let original = serde_json::to_value(&cert).unwrap();
    assert!(failures_of(&original).is_empty());
    let cases: Vec<(fn(&mut Value), &str)> = vec![
        (|v| v["e1"] = json!(11), "consistency"),
        (|v| v["m"] = json!("88"), "consistency"),
        (|v| bump(&mut v["evidence"]["y"]), "pell_evidence"),
    ];
    for (tamper, clause) in cases {
        let mut v = original.clone();
        tamper(&mut v);
        assert!(failures_of(&v).iter().any(|f| f == clause), "{clause}");
    }
}

#[test]
fn malformed_documents_are_invalid_input() {
    assert!(parse_certificate("[1, 2").is_err());
    assert!(parse_certificate("{\"d\": \"6\"}").is_err());
    assert!(parse_certificate("{\"schema_version\": \"1.0.0\", \"result\": {}}").is_err());
}
