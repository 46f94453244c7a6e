//! JSON documents and the `liouville` command-line front end.
//!
//! Every command can print a JSON envelope
//! `{schema_version, command, input, result, timing}`; big integers inside it are
//! decimal strings. Exit codes: 0 success, 2 invalid input, 3 verification
//! failure, 4 resource cap, 5 internal assertion.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use num_bigint::{BigInt, BigUint};
use num_traits::Signed;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::arith::{Sign, DEFAULT_PRIME_CAP};
use crate::construct::{
    construct_m, construct_prime_pair, verify_certificate, verify_prime_pair, ClauseResult, MCertificate,
    PrimePairCertificate, VerificationReport,
};
use crate::error::Error;
use crate::factor::factorize;
use crate::forms::{enumerate_ambiguous_candidates, QuadForm};
use crate::genus::{assigned_characters, generic_values};
use crate::pell::{fundamental_solution, principal_class_ambiguous, solve_generalized};
use crate::witness::{minus_witnesses_with, plus_witnesses_with, sign_change_report, WitnessOptions};

pub const SCHEMA_VERSION: &str = "1.0.0";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: String,
    pub command: String,
    pub input: Value,
    pub result: T,
    pub timing: Timing,
}

/// A certificate together with the verifier's clause results.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateDocument {
    #[serde(flatten)]
    pub certificate: MCertificate,
    #[serde(default)]
    pub checks: Vec<ClauseResult>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PrimePairDocument {
    #[serde(flatten)]
    pub certificate: PrimePairCertificate,
    #[serde(default)]
    pub checks: Vec<ClauseResult>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    InvalidInput = 2,
    VerificationFailed = 3,
    ResourceCap = 4,
    Internal = 5,
}

pub fn exit_code_for(e: &Error) -> ExitCode {
    match e {
        Error::InvalidArgument(_) | Error::NonCoprimeModuli { .. } | Error::Infeasible { .. } => ExitCode::InvalidInput,
        Error::SearchExhausted { .. } | Error::FactorBudgetExhausted { .. } | Error::RepresentationNotFound { .. } => {
            ExitCode::ResourceCap
        }
        Error::SolverDisagreement { .. }
        | Error::ExactnessViolated { .. }
        | Error::ConclusionFails { .. }
        | Error::Internal(_) => ExitCode::Internal,
    }
}

#[derive(Debug, Parser)]
#[command(name = "liouville", version, about = "Verified sign witnesses for the Liouville function on n^2 + d")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Liouville function and factorization of n >= 1.
    Lambda {
        n: String,
        #[arg(long)]
        json: bool,
    },
    /// Build and verify the auxiliary integer M for a square-free composite d.
    #[command(name = "construct-m")]
    ConstructM {
        d: u64,
        /// The sign t (+1 or -1).
        #[arg(long, allow_hyphen_values = true)]
        t: i8,
        #[arg(long)]
        json: bool,
        /// Largest prime the constructed-prime search may reach.
        #[arg(long, env = "LIOUVILLE_CAP", default_value_t = DEFAULT_PRIME_CAP)]
        cap: u64,
    },
    /// Build and verify the prime pair (e1, e2) for a prime p = 3 (mod 4).
    #[command(name = "prime-pair")]
    PrimePair {
        p: u64,
        #[arg(long)]
        json: bool,
        #[arg(long, env = "LIOUVILLE_CAP", default_value_t = DEFAULT_PRIME_CAP)]
        cap: u64,
    },
    /// Emit verified witnesses n with lambda(n^2 + d) equal to the requested sign.
    #[command(allow_negative_numbers = true)]
    Witness {
        d: i64,
        #[arg(long, allow_hyphen_values = true, default_value_t = -1)]
        sign: i8,
        #[arg(long, default_value_t = 3)]
        count: usize,
        #[arg(long)]
        json: bool,
        #[arg(long, env = "LIOUVILLE_CAP", default_value_t = DEFAULT_PRIME_CAP)]
        cap: u64,
        /// Largest n the brute-force scan may reach.
        #[arg(long, default_value_t = 10_000_000)]
        bound: u64,
    },
    /// Assigned characters of 4D and generic values of a form (or of every ambiguous candidate).
    Genus {
        d: String,
        /// Coefficients a,b,c.
        #[arg(long, allow_hyphen_values = true)]
        form: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Fundamental Pell solution of D, or a solution of a x^2 - b y^2 = eps.
    Pell {
        d: Option<String>,
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        b: Option<String>,
        #[arg(long, allow_hyphen_values = true, default_value_t = 1)]
        eps: i8,
        #[arg(long)]
        json: bool,
    },
    /// Re-verify a certificate file written by construct-m or prime-pair.
    Verify {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Count the signs of lambda(n^2 + d) for 0 <= n <= bound.
    #[command(allow_negative_numbers = true)]
    Signs {
        d: i64,
        #[arg(long, default_value_t = 100_000)]
        bound: u64,
        #[arg(long)]
        json: bool,
    },
}

/// What a command printed and how it exits.
#[derive(Debug, Default)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Ctx {
    start: Instant,
    command: &'static str,
    input: Value,
    json: bool,
}

impl Ctx {
    fn new(command: &'static str, input: Value, json: bool) -> Self {
        Ctx { start: Instant::now(), command, input, json }
    }

    fn emit<T: Serialize>(&self, result: &T, text: String, code: ExitCode) -> Outcome {
        let stdout = if self.json {
            let env = Envelope {
                schema_version: SCHEMA_VERSION.to_string(),
                command: self.command.to_string(),
                input: self.input.clone(),
                result,
                timing: Timing { elapsed_ms: self.start.elapsed().as_secs_f64() * 1e3 },
            };
            serde_json::to_string_pretty(&env).expect("serializable") + "\n"
        } else {
            text
        };
        Outcome { code: code as i32, stdout, stderr: String::new() }
    }
}

fn fail(e: &Error) -> Outcome {
    Outcome { code: exit_code_for(e) as i32, stdout: String::new(), stderr: format!("error: {e}\n") }
}

fn invalid(msg: impl Into<String>) -> Outcome {
    fail(&Error::InvalidArgument(msg.into()))
}

fn parse_sign(v: i8) -> Result<Sign, Outcome> {
    Sign::from_i8(v).ok_or_else(|| invalid(format!("sign must be 1 or -1, got {v}")))
}

fn parse_big(s: &str) -> Result<BigInt, Outcome> {
    s.trim().parse::<BigInt>().map_err(|_| invalid(format!("not an integer: {s:?}")))
}

fn report_text(report: &VerificationReport) -> String {
    let mut out = String::new();
    for c in &report.clauses {
        let _ = writeln!(out, "  [{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.clause, c.detail);
    }
    out
}

fn signs(v: &[Sign]) -> String {
    v.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ")
}

pub fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Lambda { n, json } => cmd_lambda(&n, json),
        Command::ConstructM { d, t, json, cap } => cmd_construct_m(d, t, json, cap),
        Command::PrimePair { p, json, cap } => cmd_prime_pair(p, json, cap),
        Command::Witness { d, sign, count, json, cap, bound } => cmd_witness(d, sign, count, json, cap, bound),
        Command::Genus { d, form, json } => cmd_genus(&d, form.as_deref(), json),
        Command::Pell { d, a, b, eps, json } => cmd_pell(d.as_deref(), a.as_deref(), b.as_deref(), eps, json),
        Command::Verify { file, json } => cmd_verify(&file, json),
        Command::Signs { d, bound, json } => cmd_signs(d, bound, json),
    }
}

/// Parses arguments and runs; clap usage errors exit with code 2.
pub fn run_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { ExitCode::InvalidInput as i32 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            }
        }
    }
}

pub fn cmd_lambda(n: &str, json: bool) -> Outcome {
    let n = match parse_big(n) {
        Ok(n) => n,
        Err(o) => return o,
    };
    let ctx = Ctx::new("lambda", json!({ "n": n.to_string() }), json);
    if !n.is_positive() {
        return invalid(format!("n must be at least 1, got {n}"));
    }
    match factorize(&n) {
        Ok(f) => {
            let lam = f.liouville();
            let text = format!("lambda({n}) = {lam}\n{n} = {f}\n");
            ctx.emit(&json!({ "n": n.to_string(), "lambda": lam, "omega": f.omega(), "factorization": f }), text, ExitCode::Success)
        }
        Err(e) => fail(&e),
    }
}

fn certificate_text(c: &MCertificate, report: &VerificationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "d = {} labelled {:?}, t = {}, s = {}, lambda(d) = {}", c.d, c.d_primes, c.t, c.s, c.lambda_d);
    let _ = writeln!(out, "m = {:?}, e1 = {}, e2 = {}", c.m_primes, c.e1, c.e2);
    let _ = writeln!(out, "M = {}, lambda(M) = {}, D = dM = {}", c.M, c.lambda_m, c.D);
    let _ = writeln!(out, "predicted principal form {}", c.predicted_form);
    let ev = &c.pell_evidence;
    let digits = ev.x.to_string().len().max(ev.y.to_string().len());
    if digits <= 60 {
        let _ = writeln!(out, "evidence {}*{}^2 - {}*{}^2 = 1", ev.a, ev.x, ev.b, ev.y);
    } else {
        let _ = writeln!(out, "evidence {}x^2 - {}y^2 = 1 with {digits}-digit x, y", ev.a, ev.b);
    }
    for r in &c.rejected_orderings {
        let forms: Vec<String> = r.principal_forms.iter().map(|f| f.to_string()).collect();
        let _ = writeln!(out, "rejected labelling {:?}: principal genus holds [{}]", r.d_primes, forms.join(", "));
    }
    let _ = writeln!(out, "verification: {}", if report.passed() { "PASS" } else { "FAIL" });
    out + &report_text(report)
}

pub fn cmd_construct_m(d: u64, t: i8, json: bool, cap: u64) -> Outcome {
    let t = match parse_sign(t) {
        Ok(t) => t,
        Err(o) => return o,
    };
    let ctx = Ctx::new("construct-m", json!({ "d": d.to_string(), "t": t, "cap": cap.to_string() }), json);
    let cert = match construct_m(d, t, cap) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let report = verify_certificate(&cert);
    let code = if report.passed() { ExitCode::Success } else { ExitCode::VerificationFailed };
    let text = certificate_text(&cert, &report);
    let doc = CertificateDocument { certificate: cert, checks: report.clauses };
    ctx.emit(&doc, text, code)
}

pub fn cmd_prime_pair(p: u64, json: bool, cap: u64) -> Outcome {
    let ctx = Ctx::new("prime-pair", json!({ "p": p.to_string(), "cap": cap.to_string() }), json);
    let cert = match construct_prime_pair(p, cap) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let report = verify_prime_pair(&cert);
    let code = if report.passed() { ExitCode::Success } else { ExitCode::VerificationFailed };
    let text = format!(
        "p = {}, e1 = {}, e2 = {}, m = {}\nevidence {}k^2 - {}y^2 = 1 (k = {}, y = {})\nverification: {}\n{}",
        cert.p,
        cert.e1,
        cert.e2,
        cert.m,
        cert.p,
        cert.m,
        cert.evidence.x,
        cert.evidence.y,
        if report.passed() { "PASS" } else { "FAIL" },
        report_text(&report)
    );
    ctx.emit(&PrimePairDocument { certificate: cert, checks: report.clauses }, text, code)
}

pub fn cmd_witness(d: i64, sign: i8, count: usize, json: bool, cap: u64, bound: u64) -> Outcome {
    let sign = match parse_sign(sign) {
        Ok(s) => s,
        Err(o) => return o,
    };
    if count == 0 {
        return invalid("count must be positive");
    }
    let input = json!({ "d": d.to_string(), "sign": sign, "count": count, "cap": cap.to_string(), "bound": bound.to_string() });
    let ctx = Ctx::new("witness", input, json);
    let opts = WitnessOptions { prime_cap: cap, brute_bound: bound };
    let batch = match sign {
        Sign::Minus => minus_witnesses_with(d, count, &opts),
        Sign::Plus => plus_witnesses_with(d, count, &opts),
    };
    let batch = match batch {
        Ok(b) => b,
        Err(e) => return fail(&e),
    };
    let mut text = format!(
        "d = {} = {} * {}^2, branch {:?}\n",
        batch.plan.d, batch.plan.core, batch.plan.scale, batch.plan.branch
    );
    if let Some(why) = &batch.fallback {
        let _ = writeln!(text, "brute-force scan: {why}");
    }
    for w in &batch.witnesses {
        let n = w.n.to_string();
        let shown = if n.len() > 60 { format!("<{} digits>", n.len()) } else { n };
        let ev = &w.evidence;
        let proof = if ev.square_root == BigInt::from(1) {
            ev.factored.to_string()
        } else {
            format!("({}) * k^2", ev.factored)
        };
        let _ = writeln!(
            text,
            "n = {shown}: lambda = {}, n^2 + d = {proof} [{:?}{}]",
            w.lambda,
            w.provenance,
            if w.verified { ", verified" } else { ", UNVERIFIED" }
        );
    }
    let all_verified = batch.witnesses.iter().all(|w| w.verified);
    ctx.emit(&batch, text, if all_verified { ExitCode::Success } else { ExitCode::VerificationFailed })
}

fn parse_form(s: &str) -> Result<QuadForm, Outcome> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(invalid(format!("form must be a,b,c; got {s:?}")));
    }
    let a = parse_big(parts[0])?;
    let b = parse_big(parts[1])?;
    let c = parse_big(parts[2])?;
    QuadForm::new(a, b, c).map_err(|e| fail(&e))
}

fn parse_positive(s: &str) -> Result<BigUint, Outcome> {
    let v = parse_big(s)?;
    if !v.is_positive() {
        return Err(invalid(format!("expected a positive integer, got {v}")));
    }
    Ok(v.magnitude().clone())
}

pub fn cmd_genus(d: &str, form: Option<&str>, json: bool) -> Outcome {
    let dd = match parse_positive(d) {
        Ok(v) => v,
        Err(o) => return o,
    };
    let ctx = Ctx::new("genus", json!({ "D": dd.to_string(), "form": form }), json);
    let sys = match assigned_characters(&dd) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    let forms = match form {
        Some(f) => match parse_form(f) {
            Ok(f) => vec![f],
            Err(o) => return o,
        },
        None => match enumerate_ambiguous_candidates(&dd) {
            Ok(c) => c.all().cloned().collect(),
            Err(e) => return fail(&e),
        },
    };
    let mut text = format!("assigned characters of 4*{dd}: {sys}\n");
    let mut rows = Vec::new();
    for f in &forms {
        let g = match generic_values(f, &sys) {
            Ok(g) => g,
            Err(e) => return fail(&e),
        };
        let _ = writeln!(
            text,
            "{f}: ({}) via theta = {} at ({}, {}){}",
            signs(&g.values),
            g.theta,
            g.x,
            g.y,
            if g.is_principal() { " principal genus" } else { "" }
        );
        rows.push(json!({ "form": f, "generic_values": g, "principal_genus": g.is_principal() }));
    }
    ctx.emit(&json!({ "characters": sys.labels(), "system": sys, "forms": rows }), text, ExitCode::Success)
}

pub fn cmd_pell(d: Option<&str>, a: Option<&str>, b: Option<&str>, eps: i8, json: bool) -> Outcome {
    match (d, a, b) {
        (Some(d), None, None) => {
            let dd = match parse_positive(d) {
                Ok(v) => v,
                Err(o) => return o,
            };
            let ctx = Ctx::new("pell", json!({ "D": dd.to_string() }), json);
            let fund = match fundamental_solution(&dd) {
                Ok(f) => f,
                Err(e) => return fail(&e),
            };
            let mut text = format!("t^2 - {dd} u^2 = 1: (t, u) = ({}, {}), unit norm {}\n", fund.t, fund.u, fund.unit_norm);
            if let Some((x, y)) = &fund.neg_solution {
                let _ = writeln!(text, "x^2 - {dd} y^2 = -1: ({x}, {y})");
            }
            let mut principal = Value::Null;
            let sqfree = factorize(&BigInt::from(dd.clone())).map(|f| f.is_squarefree()).unwrap_or(false);
            if sqfree && dd > BigUint::from(1u32) {
                match principal_class_ambiguous(&dd) {
                    Ok(Some(p)) => {
                        let _ = writeln!(text, "principal-class ambiguous form {} represents 1 at ({}, {})", p.form, p.alpha, p.beta);
                        principal = serde_json::to_value(&p).expect("serializable");
                    }
                    Ok(None) => {}
                    Err(e) => return fail(&e),
                }
            }
            ctx.emit(&json!({ "fundamental": fund, "principal_ambiguous": principal }), text, ExitCode::Success)
        }
        (None, Some(a), Some(b)) => {
            let (a, b) = match (parse_big(a), parse_big(b)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(o), _) | (_, Err(o)) => return o,
            };
            let ctx = Ctx::new("pell", json!({ "a": a.to_string(), "b": b.to_string(), "eps": eps }), json);
            match solve_generalized(&a, &b, eps) {
                Ok(Some(s)) => {
                    let text = format!("{a}x^2 - {b}y^2 = {eps}: (x, y) = ({}, {})\n", s.x, s.y);
                    ctx.emit(&json!({ "solution": s }), text, ExitCode::Success)
                }
                Ok(None) => {
                    let text = format!("{a}x^2 - {b}y^2 = {eps}: no solution\n");
                    ctx.emit(&json!({ "solution": null }), text, ExitCode::Success)
                }
                Err(e) => fail(&e),
            }
        }
        _ => invalid("give either D, or --a and --b"),
    }
}

/// A certificate read from disk: a bare certificate or a command envelope.
pub enum LoadedCertificate {
    M(Box<MCertificate>),
    PrimePair(PrimePairCertificate),
}

pub fn parse_certificate(text: &str) -> Result<LoadedCertificate, Error> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::invalid(format!("malformed JSON: {e}")))?;
    let body = match value.get("result") {
        Some(r) if value.get("schema_version").is_some() => r.clone(),
        _ => value,
    };
    if body.get("p").is_some() {
        let c = serde_json::from_value(body).map_err(|e| Error::invalid(format!("not a prime-pair certificate: {e}")))?;
        return Ok(LoadedCertificate::PrimePair(c));
    }
    let c = serde_json::from_value(body).map_err(|e| Error::invalid(format!("not a certificate: {e}")))?;
    Ok(LoadedCertificate::M(Box::new(c)))
}

pub fn cmd_verify(file: &std::path::Path, json: bool) -> Outcome {
    let ctx = Ctx::new("verify", json!({ "file": file.display().to_string() }), json);
    let text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => return invalid(format!("cannot read {}: {e}", file.display())),
    };
    let report = match parse_certificate(&text) {
        Ok(LoadedCertificate::M(c)) => verify_certificate(&c),
        Ok(LoadedCertificate::PrimePair(c)) => verify_prime_pair(&c),
        Err(e) => return fail(&e),
    };
    let failures = report.failures().join(", ");
    let mut out = if report.passed() {
        "verification: PASS\n".to_string()
    } else {
        format!("verification: FAIL ({failures})\n")
    };
    out += &report_text(&report);
    let code = if report.passed() { ExitCode::Success } else { ExitCode::VerificationFailed };
    let mut o = ctx.emit(&report, out, code);
    if !report.passed() {
        o.stderr = format!("verification failed: {failures}\n");
    }
    o
}

pub fn cmd_signs(d: i64, bound: u64, json: bool) -> Outcome {
    let ctx = Ctx::new("signs", json!({ "d": d.to_string(), "bound": bound.to_string() }), json);
    match sign_change_report(d, bound) {
        Ok(r) => {
            let text = format!(
                "n in [0, {bound}], d = {d}: lambda = -1 for {} values, +1 for {} values, {} skipped; first sign change at n = {}\n",
                r.count_minus,
                r.count_plus,
                r.skipped,
                r.first_change_n.map(|n| n.to_string()).unwrap_or_else(|| "none".into())
            );
            ctx.emit(&r, text, ExitCode::Success)
        }
        Err(e) => fail(&e),
    }
}
