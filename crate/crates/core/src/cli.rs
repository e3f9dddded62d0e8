//! Command-line driver: construct, count, reduce, sample, verify.

use std::ffi::OsString;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde_json::{json, Map, Value};

use crate::automorphisms::{
    demushkin_reduce, premet_regular_reduce, witt_pth_iter, AdmissibleAutomorphism, Chain, PremetOutcome,
    TruncatedAutomorphism,
};
use crate::cartan_algebras::{
    contact_bracket, contact_d_k, contact_spanning_set, hamiltonian_d_h, hamiltonian_spanning_set, poisson_bracket,
    regular_nilpotent, sl2_is_nilpotent, sl2_pth, special_spanning_set, span_dimension,
    witt_bracket_basis_formula, DerivationElement, Sl2Element,
};
use crate::divided_power::{dp_divided_power, dp_divided_power_table, dp_inverse, AlgebraShape, DPElement};
use crate::linalg::{vec_add, Mat};
use crate::maybe_rayon::{map_indices, with_workers};
use crate::restricted::{
    is_nilpotent, is_p_closed, jacobson_si, jordan_chevalley, jordan_chevalley_matrix, p_closure, psi_relation, pth_power, pth_power_iter,
    Realization, WittRealization,
};
use crate::rng::SplitMix64;
use crate::scalars::{binom_mod_p, p_adic_digits, FieldSpec};
use crate::semidirect::{
    iw_closure_check, m_space_report, random_z, semi_apply_chain, semi_exp_ad, semi_exp_ad_formula,
    semi_is_nilpotent, semi_is_nilpotent_direct, semi_nilpotency_criterion, semi_normalize, semi_reduce, zps_in_w0,
    SemidirectAlgebra, SemidirectElement,
};
use crate::zassenhaus::{
    classify_nilpotent, e0_torus, e_filtration, envelope_shape, iota_check, lie_g_check, lp_is_nilpotent,
    sample_nilpotent, separation_on, sigma_grading_check, tyurin_reduce, yao_shu_reduce, zass_e_algebra,
    LpRealization, NilpotentTag, PEnvelopeElement, ZassenhausEAlgebra,
};
use crate::{Error, Fe, Result};

pub const SCHEMA: &str = "modlie.report/1";
pub const WORKERS_ENV: &str = "MODLIE_WORKERS";
/// Upper bound on the number of points `count --mode enumerate` will test.
pub const ENUMERATION_LIMIT: u64 = 10_000_000;

#[derive(Parser, Debug)]
#[command(name = "modlie", version, about = "Nilpotent elements of restricted Lie algebras over finite fields")]
pub struct Cli {
    #[command(flatten)]
    pub opts: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Characteristic.
    #[arg(long, global = true, default_value_t = 5)]
    pub p: u64,
    /// Degree of the field extension: scalars are F_{p^M}.
    #[arg(long = "M", global = true, default_value_t = 1)]
    pub big_m: u32,
    #[arg(long, global = true, value_enum, default_value_t = Family::Witt)]
    pub family: Family,
    /// Number of variables.
    #[arg(long, global = true, default_value_t = 1)]
    pub m: usize,
    /// Heights, comma separated. For the Zassenhaus families, the single height n.
    #[arg(long, global = true, value_delimiter = ',')]
    pub n: Vec<u32>,
    /// Tail index for the Tyurin reduction.
    #[arg(long, global = true, default_value_t = 1)]
    pub t: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = WORKERS_ENV, default_value_t = 0)]
    pub workers: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Build the algebra and check its dimension.
    Construct,
    /// Count nilpotent points by two independent routes.
    Count {
        #[arg(long, value_enum, default_value_t = Mode::Enumerate)]
        mode: Mode,
        /// Number of points in sample mode.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Run a normal-form reduction and replay its chain.
    Reduce {
        #[arg(value_enum)]
        which: Which,
        /// Input element in the family's text format; a seeded random input if absent.
        #[arg(long)]
        element: Option<String>,
    },
    /// Draw elements satisfying a constraint.
    Sample {
        #[arg(value_enum, default_value_t = Constraint::Any)]
        constraint: Constraint,
        #[arg(long, default_value_t = 5)]
        count: usize,
        /// Attempts allowed per element.
        #[arg(long, default_value_t = 2000)]
        budget: usize,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// W(m;n), heights from --n.
    Witt,
    /// The p-envelope W(1;n)_p.
    Zassenhaus,
    /// W(1;n) in the e_α basis over F_{p^M}.
    ZassenhausE,
    /// sl_2⊗O(1;1)⋊k∂.
    Sl2Semidirect,
    /// sl_2⊗O(m;1)⋊W(m;1).
    Sl2Witt,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Enumerate,
    Sample,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Demushkin,
    Premet,
    YaoShu,
    Tyurin,
    Semidirect,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constraint {
    Any,
    Nilpotent,
    RegularNilpotent,
    SingularNilpotent,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    All,
    Scalars,
    Cartan,
    Restricted,
    Automorphisms,
    Semidirect,
    Zassenhaus,
}

fn enum_name<T: ValueEnum>(v: T) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

// ---------------------------------------------------------------------------
// Session configuration.

#[derive(Clone, Debug)]
pub struct SessionConfig {
    pub field: FieldSpec,
    pub family: Family,
    pub m: usize,
    pub heights: Vec<u32>,
    pub t: usize,
    pub seed: u64,
    pub format: Format,
    pub workers: usize,
}

impl SessionConfig {
    pub fn from_opts(o: &GlobalOpts) -> Result<Self> {
        let field = FieldSpec::new(o.p, o.big_m)?;
        let p = o.p;
        let single = |default: u32| -> Result<u32> {
            match o.n.as_slice() {
                [] => Ok(default),
                [n] => Ok(*n),
                _ => Err(Error::InvalidParameter("this family takes a single height n".into())),
            }
        };
        let (m, heights) = match o.family {
            Family::Witt => {
                if o.m == 0 {
                    return Err(Error::InvalidParameter("m must be positive".into()));
                }
                let h = match o.n.as_slice() {
                    [] => vec![1; o.m],
                    [n] => vec![*n; o.m],
                    hs if hs.len() == o.m => hs.to_vec(),
                    hs => {
                        return Err(Error::InvalidParameter(format!("{} heights given for m = {}", hs.len(), o.m)))
                    }
                };
                if h.contains(&0) {
                    return Err(Error::InvalidParameter("heights must be positive".into()));
                }
                (o.m, h)
            }
            Family::Zassenhaus | Family::ZassenhausE => {
                if p <= 3 {
                    return Err(Error::InvalidParameter("the Zassenhaus families need p > 3".into()));
                }
                let n = single(2)?;
                if n < 2 {
                    return Err(Error::InvalidParameter("the Zassenhaus families need n ≥ 2".into()));
                }
                if o.family == Family::ZassenhausE && !o.big_m.is_multiple_of(n) {
                    return Err(Error::InvalidParameter(format!("the e_α basis needs n | M (n = {n}, M = {})", o.big_m)));
                }
                (1, vec![n])
            }
            Family::Sl2Semidirect | Family::Sl2Witt => {
                if p <= 2 {
                    return Err(Error::InvalidParameter("semidirect families need p > 2".into()));
                }
                if single(1)? != 1 {
                    return Err(Error::InvalidParameter("semidirect families use O(m;1)".into()));
                }
                let m = if o.family == Family::Sl2Semidirect { 1 } else { o.m };
                if m == 0 || m > 3 {
                    return Err(Error::InvalidParameter("sl2-witt supports 1 ≤ m ≤ 3".into()));
                }
                (m, vec![1; m])
            }
        };
        Ok(SessionConfig {
            field,
            family: o.family,
            m,
            heights,
            t: o.t,
            seed: o.seed,
            format: o.format,
            workers: o.workers,
        })
    }

    pub fn p(&self) -> u64 {
        self.field.p()
    }

    pub fn q(&self) -> u64 {
        self.field.order()
    }

    fn to_json(&self) -> Value {
        json!({
            "p": self.p(),
            "M": self.field.degree(),
            "family": enum_name(self.family),
            "m": self.m,
            "n": self.heights,
            "seed": self.seed,
        })
    }

    fn shape(&self) -> Result<AlgebraShape> {
        AlgebraShape::new(&self.field, &self.heights)
    }

    fn target(&self) -> Result<Target> {
        match self.family {
            Family::Witt => Ok(Target::Witt(WittRealization::new(&self.shape()?)?)),
            Family::Zassenhaus => Ok(Target::Lp(LpRealization::new(&self.field, self.heights[0])?)),
            Family::Sl2Semidirect => Ok(Target::Semi(SemidirectAlgebra::sl2_o1(&self.field)?)),
            Family::Sl2Witt => Ok(Target::Semi(SemidirectAlgebra::sl2_witt(&self.field, self.m)?)),
            Family::ZassenhausE => Err(Error::InvalidParameter(
                "the e_α family supports construct only; use --family zassenhaus".into(),
            )),
        }
    }
}

/// A realized algebra with its elements as coordinate vectors.
enum Target {
    Witt(WittRealization),
    Lp(LpRealization),
    Semi(SemidirectAlgebra),
}

impl Target {
    fn realization(&self) -> &dyn Realization {
        match self {
            Target::Witt(r) => r,
            Target::Lp(r) => r,
            Target::Semi(l) => l,
        }
    }

    fn dim(&self) -> usize {
        self.realization().dim()
    }

    fn field(&self) -> &FieldSpec {
        self.realization().field()
    }

    /// Operator nilpotency with the module-dimension bound.
    fn direct(&self, v: &[Fe]) -> bool {
        match self {
            Target::Semi(l) => semi_is_nilpotent_direct(l, &l.from_vec(v)),
            _ => is_nilpotent(self.realization(), v),
        }
    }

    fn criterion_name(&self) -> &'static str {
        match self {
            Target::Witt(_) => "psi-vanishing",
            Target::Lp(_) => "p^n-power",
            Target::Semi(_) => "s0-criterion",
        }
    }

    /// Nilpotency decided by the algebra's own criterion.
    fn criterion(&self, v: &[Fe]) -> Result<bool> {
        match self {
            Target::Witt(r) => {
                let psi = psi_relation(r, v, 0, r.shape.m() as u32)?;
                Ok(psi.psi.iter().all(|c| c.is_zero()))
            }
            Target::Lp(r) => Ok(lp_is_nilpotent(&r.element(v))),
            Target::Semi(l) => Ok(semi_nilpotency_criterion(l, &l.from_vec(v))?.0),
        }
    }

    /// The constant s with dim N = dim g − s, where known.
    fn codim(&self) -> Option<usize> {
        match self {
            Target::Witt(r) => Some(r.shape.m()),
            Target::Lp(r) => Some(r.shape.heights()[0] as usize),
            Target::Semi(l) if l.shape().m() == 1 && l.d_basis().len() == 1 => Some(1),
            Target::Semi(_) => None,
        }
    }

    fn serialize(&self, v: &[Fe]) -> String {
        match self {
            Target::Witt(r) => r.element(v).serialize(),
            Target::Lp(r) => r.element(v).serialize(),
            Target::Semi(l) => l.from_vec(v).serialize(),
        }
    }

    fn parse(&self, s: &str) -> Result<Vec<Fe>> {
        let f = self.field();
        let v = match self {
            Target::Witt(r) => {
                let d = DerivationElement::parse(f, s)?;
                if d.shape != r.shape {
                    return Err(Error::ShapeMismatch("element does not live in this W(m;1)".into()));
                }
                d.to_vec()
            }
            Target::Lp(r) => {
                let d = PEnvelopeElement::parse(f, s)?;
                if d.shape() != &r.shape {
                    return Err(Error::ShapeMismatch("element does not live in this W(1;n)_p".into()));
                }
                d.to_vec()
            }
            Target::Semi(l) => l.to_vec(&l.parse(s)?)?,
        };
        Ok(v)
    }
}

// ---------------------------------------------------------------------------
// Reports.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub command: String,
    pub config: Value,
    pub fields: Vec<(String, Value)>,
    pub checks: Vec<Check>,
}

impl Report {
    fn new(command: &str, cfg: &SessionConfig) -> Self {
        Report { command: command.into(), config: cfg.to_json(), fields: Vec::new(), checks: Vec::new() }
    }

    fn field(&mut self, key: &str, v: impl Into<Value>) {
        self.fields.push((key.into(), v.into()));
    }

    fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> Value {
        let mut fields = Map::new();
        for (k, v) in &self.fields {
            fields.insert(k.clone(), v.clone());
        }
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| json!({"name": c.name, "passed": c.passed, "detail": c.detail}))
            .collect();
        json!({
            "schema": SCHEMA,
            "command": self.command,
            "config": self.config,
            "fields": fields,
            "checks": checks,
            "ok": self.ok(),
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("modlie {}\n", self.command);
        if let Value::Object(cfg) = &self.config {
            let parts: Vec<String> = cfg.iter().map(|(k, v)| format!("{k}={}", scalar_text(v))).collect();
            out += &format!("config: {}\n", parts.join(" "));
        }
        for (k, v) in &self.fields {
            match v {
                Value::Array(items) if items.iter().any(|x| !x.is_number()) => {
                    out += &format!("{k}:\n");
                    for x in items {
                        out += &format!("  - {}\n", scalar_text(x));
                    }
                }
                _ => out += &format!("{k}: {}\n", scalar_text(v)),
            }
        }
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            if c.detail.is_empty() {
                out += &format!("[{tag}] {}\n", c.name);
            } else {
                out += &format!("[{tag}] {}: {}\n", c.name, c.detail);
            }
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        out += &format!("result: {} ({passed}/{} checks passed)\n", if self.ok() { "ok" } else { "FAILED" }, self.checks.len());
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.to_text(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.to_json()).expect("report serializes");
                s.push('\n');
                s
            }
        }
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

// ---------------------------------------------------------------------------
// Entry points.

pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    Outcome { code: 0, stdout: text, stderr: String::new() }
                }
                _ => Outcome { code: 2, stdout: String::new(), stderr: text },
            };
        }
    };
    let cfg = match SessionConfig::from_opts(&cli.opts) {
        Ok(c) => c,
        Err(e) => return Outcome { code: 2, stdout: String::new(), stderr: format!("error: {e}\n") },
    };
    let start = Instant::now();
    let result = with_workers(cfg.workers, || execute(&cfg, &cli.command));
    let elapsed = start.elapsed();
    match result {
        Ok(report) => Outcome {
            code: if report.ok() { 0 } else { 1 },
            stdout: report.render(cfg.format),
            stderr: format!("elapsed: {} ms\n", elapsed.as_millis()),
        },
        Err(e) => Outcome { code: exit_code(&e), stdout: String::new(), stderr: format!("error: {e}\n") },
    }
}

pub fn run() -> i32 {
    let out = run_args(std::env::args_os());
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    out.code
}

/// 2 for bad input, 1 for a failed check or precondition.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotPrime(_)
        | Error::InvalidParameter(_)
        | Error::Parse(_)
        | Error::SizeGuard(_)
        | Error::ShapeMismatch(_) => 2,
        _ => 1,
    }
}

pub fn execute(cfg: &SessionConfig, cmd: &Command) -> Result<Report> {
    match cmd {
        Command::Construct => cmd_construct(cfg),
        Command::Count { mode, samples } => cmd_count(cfg, *mode, *samples),
        Command::Reduce { which, element } => cmd_reduce(cfg, *which, element.as_deref()),
        Command::Sample { constraint, count, budget } => cmd_sample(cfg, *constraint, *count, *budget),
        Command::Verify { suite } => cmd_verify(cfg, *suite),
    }
}

// ---------------------------------------------------------------------------
// construct

pub fn cmd_construct(cfg: &SessionConfig) -> Result<Report> {
    let mut rep = Report::new("construct", cfg);
    let p = cfg.p() as usize;
    match cfg.family {
        Family::Witt => {
            let shape = cfg.shape()?;
            let dim = DerivationElement::zero(&shape).to_vec().len();
            let total: u32 = cfg.heights.iter().sum();
            let expect = cfg.m * p.pow(total);
            let top: usize = (0..cfg.m).map(|i| shape.bound(i) - 1).sum();
            let hs: Vec<String> = cfg.heights.iter().map(|h| h.to_string()).collect();
            rep.field("algebra", format!("W({};{})", cfg.m, hs.join(",")));
            rep.field("dim", dim);
            rep.field("module_dim", shape.dim());
            rep.field("grading", format!("-1..{}", top as i64 - 1));
            rep.check("dim = m·p^|n|", dim == expect, format!("{dim} vs {expect}"));
            if shape.is_restricted() {
                if shape.dim() <= 64 {
                    let r = WittRealization::new(&shape)?;
                    let ops = basis_operators(&r);
                    rep.check("W(m;1) is p-closed in End O(m;1)", is_p_closed(&cfg.field, &ops), "");
                }
            } else if cfg.m == 1 && shape.dim() <= 64 {
                let ops: Vec<Mat> = (0..dim)
                    .map(|i| {
                        let mut v = vec![Fe::ZERO; dim];
                        v[i] = Fe::ONE;
                        DerivationElement::from_vec(&shape, &v).operator()
                    })
                    .collect();
                let env = p_closure(&cfg.field, &ops).len();
                let n = cfg.heights[0] as usize;
                let want = p.pow(n as u32) + n - 1;
                rep.field("p_envelope_dim", env);
                rep.check("p-closure has dim p^n + n − 1", env == want, format!("{env} vs {want}"));
            }
        }
        Family::Zassenhaus => {
            let n = cfg.heights[0];
            let r = LpRealization::new(&cfg.field, n)?;
            let want = p.pow(n) + n as usize - 1;
            rep.field("algebra", format!("W(1;{n})_p"));
            rep.field("dim", r.dim());
            rep.field("module_dim", r.module_dim());
            rep.field("grading", format!("-1..{} plus {} tails", p.pow(n) - 2, n - 1));
            rep.check("dim = p^n + n − 1", r.dim() == want, format!("{} vs {want}", r.dim()));
            if r.module_dim() <= 64 {
                rep.check("W(1;n)_p is p-closed", is_p_closed(&cfg.field, &basis_operators(&r)), "");
            }
        }
        Family::ZassenhausE => {
            let z = ZassenhausEAlgebra::new(&cfg.field, cfg.heights[0])?;
            rep.field("algebra", format!("W(1;{}) in the e_α basis", cfg.heights[0]));
            rep.field("dim", z.q);
            rep.check("dim = p^n", z.q == p.pow(cfg.heights[0]), "");
            let t = e0_torus(&z)?;
            rep.check("e_0 is toral of period p^n", t.periodic && t.independent, "");
            let s = sigma_grading_check(&z);
            rep.check("σ is an automorphism of order q − 1", s.automorphism && s.order_ok, "");
        }
        Family::Sl2Semidirect | Family::Sl2Witt => {
            let l = match cfg.target()? {
                Target::Semi(l) => l,
                _ => unreachable!(),
            };
            let pm = p.pow(cfg.m as u32);
            let (label, want) = match cfg.family {
                Family::Sl2Semidirect => ("dim = 3p + 1", 3 * p + 1),
                _ => ("dim = 3p^m + m·p^m", 3 * pm + cfg.m * pm),
            };
            rep.field("algebra", l.name().to_string());
            rep.field("dim", l.dim());
            rep.field("module_dim", l.module_dim());
            rep.field("grading", format!("-1..{}", cfg.m * (p - 1)));
            rep.check(label, l.dim() == want, format!("{} vs {want}", l.dim()));
        }
    }
    Ok(rep)
}

fn basis_operators(r: &dyn Realization) -> Vec<Mat> {
    (0..r.dim())
        .map(|i| {
            let mut v = vec![Fe::ZERO; r.dim()];
            v[i] = Fe::ONE;
            r.operator(&v)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// count

#[derive(Clone, Debug, PartialEq)]
pub struct CountReport {
    pub total: u64,
    pub nilpotent: u64,
    pub criterion_count: u64,
    pub criterion: String,
    /// Both counts are equal.
    pub agree: bool,
    /// Points where the two routes disagree.
    pub mismatches: u64,
    pub conical: bool,
    pub zero_counted: bool,
    pub log_q_estimate: Option<f64>,
    pub expected_component_dim: Option<usize>,
    pub elapsed_ms: u128,
}

fn decode(index: u64, q: u64, dim: usize) -> Vec<Fe> {
    let mut v = Vec::with_capacity(dim);
    let mut k = index;
    for _ in 0..dim {
        v.push(Fe((k % q) as u32));
        k /= q;
    }
    v
}

fn encode(v: &[Fe], q: u64) -> u64 {
    v.iter().rev().fold(0, |acc, c| acc * q + c.0 as u64)
}

fn scale_vec(f: &FieldSpec, c: Fe, v: &[Fe]) -> Vec<Fe> {
    v.iter().map(|&x| f.mul(c, x)).collect()
}

pub fn count_nilpotent(cfg: &SessionConfig, mode: Mode, samples: usize) -> Result<CountReport> {
    let target = cfg.target()?;
    let f = target.field().clone();
    let q = f.order();
    let dim = target.dim();
    let start = Instant::now();
    let total = match mode {
        Mode::Enumerate => {
            let points = (q as f64).powi(dim as i32);
            if points > ENUMERATION_LIMIT as f64 {
                return Err(Error::SizeGuard(format!(
                    "q^dim = {q}^{dim} exceeds {ENUMERATION_LIMIT}; use --mode sample"
                )));
            }
            q.pow(dim as u32)
        }
        Mode::Sample => samples as u64,
    };
    let point = |k: u64| -> Vec<Fe> {
        match mode {
            Mode::Enumerate => decode(k, q, dim),
            Mode::Sample => SplitMix64::substream(cfg.seed, k).fe_vec(&f, dim),
        }
    };
    let results = map_indices(total as usize, |k| -> Result<(bool, bool)> {
        let v = point(k as u64);
        Ok((target.direct(&v), target.criterion(&v)?))
    });
    let mut flags = Vec::with_capacity(results.len());
    for r in results {
        flags.push(r?);
    }
    let nilpotent = flags.iter().filter(|x| x.0).count() as u64;
    let criterion_count = flags.iter().filter(|x| x.1).count() as u64;
    let mismatches = flags.iter().filter(|x| x.0 != x.1).count() as u64;
    let conical = match mode {
        Mode::Enumerate => {
            let units: Vec<Fe> = f.elements().skip(2).collect();
            let bad = map_indices(flags.len(), |k| {
                if !flags[k].0 {
                    return false;
                }
                let v = decode(k as u64, q, dim);
                units.iter().any(|&c| !flags[encode(&scale_vec(&f, c, &v), q) as usize].0)
            });
            !bad.iter().any(|&b| b)
        }
        Mode::Sample => {
            let bad = map_indices(flags.len(), |k| {
                if !flags[k].0 {
                    return false;
                }
                let v = point(k as u64);
                let mut rng = SplitMix64::substream(cfg.seed ^ 0x5ca1_ab1e, k as u64);
                !target.direct(&scale_vec(&f, rng.nonzero_fe(&f), &v))
            });
            !bad.iter().any(|&b| b)
        }
    };
    let zero_counted = target.direct(&vec![Fe::ZERO; dim]) && target.criterion(&vec![Fe::ZERO; dim])?;
    let lnq = (q as f64).ln();
    let log_q_estimate = (nilpotent > 0).then(|| match mode {
        Mode::Enumerate => (nilpotent as f64).ln() / lnq,
        Mode::Sample => dim as f64 + (nilpotent as f64 / total as f64).ln() / lnq,
    });
    Ok(CountReport {
        total,
        nilpotent,
        criterion_count,
        criterion: target.criterion_name().into(),
        agree: nilpotent == criterion_count,
        mismatches,
        conical,
        zero_counted,
        log_q_estimate,
        expected_component_dim: target.codim().map(|s| dim - s),
        elapsed_ms: start.elapsed().as_millis(),
    })
}

pub fn cmd_count(cfg: &SessionConfig, mode: Mode, samples: usize) -> Result<Report> {
    let c = count_nilpotent(cfg, mode, samples)?;
    let mut rep = Report::new("count", cfg);
    rep.field("mode", enum_name(mode));
    rep.field("total", c.total);
    rep.field("nilpotent", c.nilpotent);
    rep.field("criterion", c.criterion.clone());
    rep.field("criterion_count", c.criterion_count);
    rep.field("agree", c.agree);
    rep.field("log_q_estimate", c.log_q_estimate.map(|x| format!("{x:.3}")).unwrap_or_else(|| "n/a".into()));
    if let Some(d) = c.expected_component_dim {
        rep.field("expected_component_dim", d);
    }
    rep.check("direct count equals criterion count", c.agree, format!("{} vs {}", c.nilpotent, c.criterion_count));
    rep.check("routes agree pointwise", c.mismatches == 0, format!("{} mismatches", c.mismatches));
    rep.check("nilpotent set is conical", c.conical, "");
    rep.check("zero is counted", c.zero_counted, "");
    Ok(rep)
}

// ---------------------------------------------------------------------------
// reduce

fn random_derivation(shape: &AlgebraShape, rng: &mut SplitMix64) -> DerivationElement {
    let n = DerivationElement::zero(shape).to_vec().len();
    DerivationElement::from_vec(shape, &rng.sparse_fe_vec(shape.field(), n, 1, 3))
}

fn default_input(cfg: &SessionConfig, which: Which, rng: &mut SplitMix64) -> Result<String> {
    let f = cfg.field.clone();
    Ok(match which {
        Which::Demushkin => {
            let shape = cfg.shape()?;
            let mut z = random_derivation(&shape, rng);
            let i = rng.below(cfg.m as u64) as usize;
            z.f[i].coeffs.insert(0, rng.nonzero_fe(&f));
            z.serialize()
        }
        Which::Premet => {
            let shape = cfg.shape()?;
            let s = TruncatedAutomorphism::random(&shape, rng);
            s.conjugate(&regular_nilpotent(&shape))?.serialize()
        }
        Which::YaoShu => {
            let shape = envelope_shape(&f, cfg.heights[0])?;
            let mut v = rng.sparse_fe_vec(&f, shape.dim(), 1, 2);
            v[0] = rng.nonzero_fe(&f);
            PEnvelopeElement::from_poly(&DPElement::from_dense(&shape, &v)).serialize()
        }
        Which::Tyurin => {
            let shape = envelope_shape(&f, cfg.heights[0])?;
            let mut d = PEnvelopeElement::dpow(&shape, cfg.t);
            d.poly = DPElement::from_dense(&shape, &rng.fe_vec(&f, shape.dim()));
            d.serialize()
        }
        Which::Semidirect => {
            let l = semidirect_of(cfg)?;
            let mut a = l.random(rng, 1, 2);
            a.tail = random_z(l.shape(), 1, rng);
            a.serialize()
        }
    })
}

fn semidirect_of(cfg: &SessionConfig) -> Result<SemidirectAlgebra> {
    match cfg.target()? {
        Target::Semi(l) => Ok(l),
        _ => Err(Error::InvalidParameter("needs --family sl2-semidirect or sl2-witt".into())),
    }
}

fn require(cfg: &SessionConfig, fams: &[Family], what: &str) -> Result<()> {
    if fams.contains(&cfg.family) {
        Ok(())
    } else {
        let names: Vec<String> = fams.iter().map(|f| enum_name(*f)).collect();
        Err(Error::InvalidParameter(format!("{what} needs --family {}", names.join(" or "))))
    }
}

pub fn cmd_reduce(cfg: &SessionConfig, which: Which, element: Option<&str>) -> Result<Report> {
    match which {
        Which::Demushkin | Which::Premet => require(cfg, &[Family::Witt], "this reduction")?,
        Which::YaoShu | Which::Tyurin => require(cfg, &[Family::Zassenhaus], "this reduction")?,
        Which::Semidirect => require(cfg, &[Family::Sl2Semidirect, Family::Sl2Witt], "this reduction")?,
    }
    if matches!(which, Which::Demushkin | Which::Premet) && !cfg.shape()?.is_restricted() {
        return Err(Error::InvalidParameter("this reduction works in W(m;1)".into()));
    }
    let mut rng = SplitMix64::new(cfg.seed);
    let input = match element {
        Some(s) => s.to_string(),
        None => default_input(cfg, which, &mut rng)?,
    };
    let f = cfg.field.clone();
    let mut rep = Report::new("reduce", cfg);
    rep.field("which", enum_name(which));
    rep.field("input", input.clone());
    let emit_chain = |rep: &mut Report, chain: &Chain| {
        rep.field("chain_length", chain.len());
        rep.field("chain", Value::from(chain.to_strings(&f)));
    };
    match which {
        Which::Demushkin => {
            let z = DerivationElement::parse(&f, &input)?;
            let red = demushkin_reduce(&z)?;
            emit_chain(&mut rep, &red.chain);
            rep.field("form", red.form.serialize());
            let shape_ok = red.form.f[0].constant_term() == Fe::ONE
                && red.form.f.iter().all(|g| g.coeffs.keys().all(|&k| k == 0 || z.shape.digits(k)[0] as u64 == f.p() - 1))
                && red.form.f.iter().skip(1).all(|g| g.constant_term().is_zero());
            rep.check("form is ∂_1 + x_1^(p−1)Σφ_i∂_i", shape_ok, "");
            replay_checks(&mut rep, &f, Some(&z.shape), &red.chain, |c| Ok(c.apply_witt(&z)? == red.form));
        }
        Which::Premet => {
            let y = DerivationElement::parse(&f, &input)?;
            match premet_regular_reduce(&y)? {
                PremetOutcome::Regular(red) => {
                    rep.field("class", "regular");
                    emit_chain(&mut rep, &red.chain);
                    rep.field("form", red.form.serialize());
                    rep.check("form is 𝒟", red.form == regular_nilpotent(&y.shape), "");
                    replay_checks(&mut rep, &f, Some(&y.shape), &red.chain, |c| Ok(c.apply_witt(&y)? == red.form));
                }
                PremetOutcome::Singular { witness } => {
                    rep.field("class", "singular");
                    rep.field("witness", witness.serialize());
                    rep.check("y^[p]^(n−1) lies in W_(0)", witness.filtration_degree().is_none_or(|d| d >= 0), "");
                }
            }
        }
        Which::YaoShu => {
            let d = PEnvelopeElement::parse(&f, &input)?;
            let red = yao_shu_reduce(&d)?;
            emit_chain(&mut rep, &red.chain);
            rep.field("form", red.form.serialize());
            let p = f.p() as usize;
            let ok = red.form.poly.constant_term() == Fe::ONE
                && red.form.poly.coeffs.keys().all(|&r| r == 0 || is_p_power(r + 1, p));
            rep.check("form is ∂ + Σ l_i x^(p^i−1)∂", ok, "");
            let sh = d.shape().clone();
            replay_checks(&mut rep, &f, Some(&sh), &red.chain, |c| Ok(c.apply_lp(&d)? == red.form));
        }
        Which::Tyurin => {
            let d = PEnvelopeElement::parse(&f, &input)?;
            let red = tyurin_reduce(&d, cfg.t)?;
            emit_chain(&mut rep, &red.chain);
            rep.field("form", red.form.serialize());
            let q = d.shape().dim();
            let pt = (f.p() as usize).pow(cfg.t as u32);
            let ok = red.form.tails == d.tails && red.form.poly.coeffs.keys().all(|&r| r == 0 || r >= q - pt);
            rep.check(&format!("form is ∂^(p^t) + Σβ_i∂^(p^i) + β_0∂ + x^({})h∂", q - pt), ok, "");
            let sh = d.shape().clone();
            replay_checks(&mut rep, &f, Some(&sh), &red.chain, |c| Ok(c.apply_lp(&d)? == red.form));
        }
        Which::Semidirect => {
            let l = semidirect_of(cfg)?;
            let a = l.parse(&input)?;
            let red = semi_normalize(&l, &a)?;
            emit_chain(&mut rep, &red.chain);
            rep.field("form", red.form.serialize());
            rep.field("s", red.s);
            rep.field("s0", f.fmt_list(&red.s0));
            // monomials in x_1, …, x_s alone must be the top one
            let top_only = red.form.tensor.iter().all(|g| {
                g.coeffs.keys().all(|&k| {
                    let idx = l.shape().index(k);
                    idx.0[red.s..].iter().any(|&x| x != 0) || idx.0[..red.s].iter().all(|&x| x as u64 == f.p() - 1)
                })
            });
            rep.check("O(s;1) part of the tensor is S⊗x_1^(p−1)⋯x_s^(p−1)", top_only, "");
            let verdict = semi_is_nilpotent(&l, &a)?;
            rep.field("nilpotent", verdict.direct);
            rep.check("criterion agrees with the direct test", verdict.direct == verdict.criterion, "");
            replay_checks(&mut rep, &f, Some(l.shape()), &red.chain, |c| Ok(semi_apply_chain(&l, c, &a)? == red.form));
        }
    }
    Ok(rep)
}

fn is_p_power(k: usize, p: usize) -> bool {
    let mut v = 1;
    while v < k {
        v *= p;
    }
    v == k
}

fn replay_checks(
    rep: &mut Report,
    f: &FieldSpec,
    shape: Option<&AlgebraShape>,
    chain: &Chain,
    replay: impl Fn(&Chain) -> Result<bool>,
) {
    let direct = replay(chain);
    rep.check("chain replays to the form", matches!(direct, Ok(true)), err_detail(&direct));
    let reparsed = Chain::from_json(f, shape, &chain.to_json(f));
    let ok = match &reparsed {
        Ok(c) => c == chain && matches!(replay(c), Ok(true)),
        Err(_) => false,
    };
    rep.check("serialized chain re-parses and replays", ok, "");
}

fn err_detail<T>(r: &Result<T>) -> String {
    match r {
        Err(e) => e.to_string(),
        Ok(_) => String::new(),
    }
}

// ---------------------------------------------------------------------------
// sample

/// Whether `v` satisfies the constraint; `None` when the family cannot decide it.
fn satisfies(target: &Target, c: Constraint, v: &[Fe]) -> Result<bool> {
    if c == Constraint::Any {
        return Ok(true);
    }
    if !target.direct(v) {
        return Ok(false);
    }
    let regular = match target {
        Target::Witt(r) => {
            let d = r.element(v);
            witt_pth_iter(&d, r.shape.m() as u32 - 1)?.filtration_degree() == Some(-1)
        }
        Target::Lp(r) => classify_nilpotent(&r.element(v))?.tag == NilpotentTag::Regular,
        Target::Semi(l) => {
            if c == Constraint::Nilpotent {
                let verdict = semi_is_nilpotent(l, &l.from_vec(v))?;
                return Ok(verdict.criterion);
            }
            return Err(Error::InvalidParameter("regular/singular classes are defined for witt and zassenhaus".into()));
        }
    };
    Ok(match c {
        Constraint::RegularNilpotent => regular,
        Constraint::SingularNilpotent => !regular,
        _ => true,
    })
}

fn propose(target: &Target, c: Constraint, rng: &mut SplitMix64) -> Result<Vec<Fe>> {
    let f = target.field();
    match (target, c) {
        (_, Constraint::Any) => Ok(rng.fe_vec(f, target.dim())),
        (Target::Lp(r), _) => Ok(sample_nilpotent(&r.shape, rng)?.to_vec()),
        (Target::Witt(r), Constraint::RegularNilpotent) if rng.below(2) == 0 => {
            let s = TruncatedAutomorphism::random(&r.shape, rng);
            Ok(s.conjugate(&regular_nilpotent(&r.shape))?.to_vec())
        }
        _ => Ok(rng.sparse_fe_vec(f, target.dim(), 1, 2)),
    }
}

pub fn sample_elements(cfg: &SessionConfig, c: Constraint, count: usize, budget: usize) -> Result<Vec<(Vec<Fe>, usize)>> {
    let target = cfg.target()?;
    let out = map_indices(count, |k| -> Result<(Vec<Fe>, usize)> {
        let mut rng = SplitMix64::substream(cfg.seed, k as u64);
        for attempt in 1..=budget.max(1) {
            let v = propose(&target, c, &mut rng)?;
            if satisfies(&target, c, &v)? {
                return Ok((v, attempt));
            }
        }
        Err(Error::Precondition(format!(
            "no {} element found within {budget} attempts",
            enum_name(c)
        )))
    });
    out.into_iter().collect()
}

pub fn cmd_sample(cfg: &SessionConfig, c: Constraint, count: usize, budget: usize) -> Result<Report> {
    let target = cfg.target()?;
    if c != Constraint::Any && c != Constraint::Nilpotent && matches!(target, Target::Semi(_)) {
        return Err(Error::InvalidParameter("regular/singular classes are defined for witt and zassenhaus".into()));
    }
    let items = sample_elements(cfg, c, count, budget)?;
    let mut rep = Report::new("sample", cfg);
    rep.field("constraint", enum_name(c));
    let strings: Vec<String> = items.iter().map(|(v, _)| target.serialize(v)).collect();
    rep.field("attempts", items.iter().map(|x| x.1).sum::<usize>());
    rep.field("elements", Value::from(strings.clone()));
    let mut round_trip = true;
    let mut verified = true;
    for (s, (v, _)) in strings.iter().zip(&items) {
        match target.parse(s) {
            Ok(w) => {
                round_trip &= &w == v;
                verified &= satisfies(&target, c, &w)?;
            }
            Err(_) => round_trip = false,
        }
    }
    rep.check("every element re-parses to itself", round_trip, "");
    rep.check("every element re-verifies its constraint", verified, "");
    if c == Constraint::Nilpotent {
        if let Target::Semi(l) = &target {
            let agree = items
                .iter()
                .all(|(v, _)| semi_is_nilpotent(l, &l.from_vec(v)).map(|x| x.direct && x.criterion).unwrap_or(false));
            rep.check("criterion and direct test agree on every element", agree, "");
        }
    }
    Ok(rep)
}

// ---------------------------------------------------------------------------
// verify

fn run_check(rep: &mut Report, name: &str, f: impl FnOnce() -> Result<(bool, String)>) {
    match f() {
        Ok((ok, detail)) => rep.check(name, ok, detail),
        Err(e) => rep.check(name, false, format!("error: {e}")),
    }
}

fn big_binom(a: u64, b: u64) -> BigUint {
    let mut num = BigUint::from(1u32);
    for k in 0..b {
        num = num * (a - k) / (k + 1);
    }
    num
}

fn unit(n: usize, i: usize) -> Vec<Fe> {
    let mut v = vec![Fe::ZERO; n];
    v[i] = Fe::ONE;
    v
}

pub fn cmd_verify(cfg: &SessionConfig, suite: Suite) -> Result<Report> {
    let mut rep = Report::new("verify", cfg);
    rep.field("suite", enum_name(suite));
    let all = suite == Suite::All;
    if all || suite == Suite::Scalars {
        verify_scalars(cfg, &mut rep)?;
    }
    if all || suite == Suite::Cartan {
        verify_cartan(cfg, &mut rep)?;
    }
    if all || suite == Suite::Restricted {
        verify_restricted(cfg, &mut rep)?;
    }
    if all || suite == Suite::Automorphisms {
        verify_automorphisms(cfg, &mut rep)?;
    }
    if all || suite == Suite::Semidirect {
        if cfg.p() > 2 {
            verify_semidirect(cfg, &mut rep)?;
        } else {
            rep.field("skipped_semidirect", "needs p > 2");
        }
    }
    if all || suite == Suite::Zassenhaus {
        if cfg.p() > 3 {
            verify_zassenhaus(cfg, &mut rep)?;
        } else {
            rep.field("skipped_zassenhaus", "needs p > 3");
        }
    }
    Ok(rep)
}

fn verify_scalars(cfg: &SessionConfig, rep: &mut Report) -> Result<()> {
    let p = cfg.p();
    let limit = p.pow(4).min(700);
    run_check(rep, "scalars: Lucas binomials agree with big integers", || {
        for a in 0..limit {
            let mut row = BigUint::from(1u32);
            for b in 0..=a {
                if b > 0 {
                    row = row * (a - b + 1) / b;
                }
                if binom_mod_p(a, b, p)? != (&row % p).to_u64().unwrap_or(u64::MAX) {
                    return Ok((false, format!("C({a},{b})")));
                }
            }
        }
        Ok((true, format!("all 0 ≤ b ≤ a < {limit}")))
    });
    run_check(rep, "scalars: C(p^r − p^s + i, p^r − p^s) ≡ 1", || {
        let mut ok = true;
        for (r, s) in [(2u32, 1u32), (3, 1), (3, 2)] {
            let base = p.pow(r) - p.pow(s);
            for i in 0..p.pow(s) {
                ok &= binom_mod_p(base + i, base, p)? == 1;
                ok &= (big_binom(base + i, base) % p).to_u64() == Some(1);
            }
        }
        Ok((ok, String::new()))
    });
    run_check(rep, "scalars: p-adic digits reconstruct a", || {
        let ok = (0..5000u64).all(|a| {
            let d = p_adic_digits(a, p);
            d.digits.iter().rev().fold(0u64, |acc, &x| acc * p + x) == a
        });
        Ok((ok, String::new()))
    });
    run_check(rep, "scalars: F_{p^M} axioms on random triples", || {
        let f = FieldSpec::new(p, cfg.field.degree().max(2))?;
        let mut rng = SplitMix64::new(cfg.seed);
        let mut ok = true;
        for _ in 0..500 {
            let (a, b, c) = (rng.fe(&f), rng.fe(&f), rng.fe(&f));
            ok &= f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c));
            ok &= f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c));
            ok &= f.frob(f.add(a, b)) == f.add(f.frob(a), f.frob(b));
            if !a.is_zero() {
                ok &= f.inv(a).map(|i| f.mul(a, i)) == Some(Fe::ONE);
            }
        }
        Ok((ok, format!("F_{}", f.order())))
    });
    Ok(())
}

fn verify_cartan(cfg: &SessionConfig, rep: &mut Report) -> Result<()> {
    let f = FieldSpec::new(cfg.p(), 1)?;
    let p = cfg.p() as usize;
    let o2 = AlgebraShape::restricted(&f, 2)?;
    let o3 = AlgebraShape::restricted(&f, 3)?;
    run_check(rep, "divided powers: commutative associative products", || {
        let mut rng = SplitMix64::new(cfg.seed);
        let mut ok = true;
        for _ in 0..60 {
            let a = DPElement::from_dense(&o2, &rng.sparse_fe_vec(&f, o2.dim(), 1, 3));
            let b = DPElement::from_dense(&o2, &rng.sparse_fe_vec(&f, o2.dim(), 1, 3));
            let c = DPElement::from_dense(&o2, &rng.sparse_fe_vec(&f, o2.dim(), 1, 3));
            ok &= a.mul(&b) == b.mul(&a) && a.mul(&b).mul(&c) == a.mul(&b.mul(&c));
        }
        Ok((ok, String::new()))
    });
    run_check(rep, "divided powers: f^(r) table, recursion and inverses", || {
        let o12 = AlgebraShape::new(&f, &[2])?;
        let mut rng = SplitMix64::new(cfg.seed ^ 1);
        let mut ok = true;
        for _ in 0..30 {
            let mut g = DPElement::from_dense(&o12, &rng.fe_vec(&f, o12.dim()));
            g.coeffs.remove(&0);
            let table = dp_divided_power_table(&g)?;
            for (r, t) in table.iter().enumerate().take(p) {
                ok &= dp_divided_power(&g, r as u64)? == *t;
            }
            // r!·f^(r) = f^r for r < p
            for r in 0..p as u64 {
                let mut fact = Fe::ONE;
                for k in 1..=r {
                    fact = f.mul(fact, f.from_int(k as i64));
                }
                ok &= table[r as usize].scale(fact) == g.pow(r);
            }
            let u = g.add(&DPElement::one(&o12));
            ok &= u.mul(&dp_inverse(&u)?) == DPElement::one(&o12);
        }
        Ok((ok, String::new()))
    });
    run_check(rep, "witt: bracket matches the basis formula and Jacobi", || {
        let mut rng = SplitMix64::new(cfg.seed ^ 2);
        let mut ok = true;
        for _ in 0..40 {
            let a = random_derivation(&o2, &mut rng);
            let b = random_derivation(&o2, &mut rng);
            let c = random_derivation(&o2, &mut rng);
            ok &= a.bracket(&b) == witt_bracket_basis_formula(&a, &b);
            let jac = a.bracket(&b.bracket(&c)).add(&b.bracket(&c.bracket(&a))).add(&c.bracket(&a.bracket(&b)));
            ok &= jac.is_zero();
            if let (Some(da), Some(db)) = (a.filtration_degree(), b.filtration_degree()) {
                ok &= a.bracket(&b).filtration_degree().is_none_or(|d| d >= da + db);
            }
        }
        Ok((ok, String::new()))
    });
    run_check(rep, "cartan: S, H, K spanning dimensions", || {
        let s = span_dimension(&o3, &special_spanning_set(&o3));
        let h = span_dimension(&o2, &hamiltonian_spanning_set(&o2)?);
        let k = span_dimension(&o3, &contact_spanning_set(&o3)?);
        let want_s = 2 * (p.pow(3) - 1);
        let want_h = p.pow(2) - 2;
        let want_k = if 6 % p == 0 { p.pow(3) - 1 } else { p.pow(3) };
        Ok((s == want_s && h == want_h && k == want_k, format!("S {s}, H {h}, K {k}")))
    });
    run_check(rep, "cartan: D_H and D_K preserve brackets", || {
        let mut rng = SplitMix64::new(cfg.seed ^ 3);
        let mut ok = true;
        for _ in 0..40 {
            let a = DPElement::from_dense(&o2, &rng.sparse_fe_vec(&f, o2.dim(), 1, 3));
            let b = DPElement::from_dense(&o2, &rng.sparse_fe_vec(&f, o2.dim(), 1, 3));
            ok &= hamiltonian_d_h(&a)?.bracket(&hamiltonian_d_h(&b)?) == hamiltonian_d_h(&poisson_bracket(&a, &b)?)?;
            let a = DPElement::from_dense(&o3, &rng.sparse_fe_vec(&f, o3.dim(), 1, 8));
            let b = DPElement::from_dense(&o3, &rng.sparse_fe_vec(&f, o3.dim(), 1, 8));
            ok &= contact_d_k(&contact_bracket(&a, &b)?)? == contact_d_k(&a)?.bracket(&contact_d_k(&b)?);
        }
        Ok((ok, String::new()))
    });
    run_check(rep, "sl2: e^[p] = 0, h^[p] = h", || {
        let ok = sl2_pth(&Sl2Element::e(&f)).is_zero()
            && sl2_pth(&Sl2Element::h(&f)) == Sl2Element::h(&f)
            && sl2_is_nilpotent(&Sl2Element::f(&f))
            && !sl2_is_nilpotent(&Sl2Element::h(&f));
        Ok((ok, String::new()))
    });
    Ok(())
}

fn verify_restricted(cfg: &SessionConfig, rep: &mut Report) -> Result<()> {
    let f = FieldSpec::new(cfg.p(), 1)?;
    let p = cfg.p() as usize;
    let w2 = WittRealization::new(&AlgebraShape::restricted(&f, 2)?)?;
    run_check(rep, "restricted: 𝒟 in W(2;1) is one Jordan block", || {
        let shape = &w2.shape;
        let d = regular_nilpotent(shape);
        let a = d.operator();
        let n = shape.dim();
        let dp = DerivationElement::from_vec(shape, &pth_power(&w2, &d.to_vec())?);
        let mut ok = dp == DerivationElement::partial(shape, 1).neg();
        ok &= a.pow(n as u64).is_zero();
        let top = DPElement::ordinary_monomial(shape, &[p - 1, p - 1], Fe::ONE);
        ok &= a.pow(n as u64 - 1).mul_vec(&top.to_dense()) == DPElement::one(shape).to_dense();
        let mut cur = Mat::identity(&f, n);
        for k in 0..=n {
            ok &= cur.rank() == n - k;
            cur = cur.mul(&a);
        }
        Ok((ok, String::new()))
    });
    run_check(rep, "restricted: Jacobson formula on random pairs in W(2;1)", || {
        let results = map_indices(100, |k| -> Result<bool> {
            let mut rng = SplitMix64::substream(cfg.seed, k as u64);
            let x = rng.fe_vec(&f, w2.dim());
            let y = rng.fe_vec(&f, w2.dim());
            let mut rhs = vec_add(&f, &pth_power(&w2, &x)?, &pth_power(&w2, &y)?);
            for s in jacobson_si(&w2, &x, &y) {
                rhs = vec_add(&f, &rhs, &s);
            }
            Ok(pth_power(&w2, &vec_add(&f, &x, &y))? == rhs)
        });
        let ok = results.into_iter().collect::<Result<Vec<bool>>>()?.iter().all(|&b| b);
        Ok((ok, "100 pairs".into()))
    });
    run_check(rep, "restricted: p-closure of W(1;2) has dim p^2 + 1", || {
        let shape = AlgebraShape::new(&f, &[2])?;
        let dim = DerivationElement::zero(&shape).to_vec().len();
        let ops: Vec<Mat> = (0..dim).map(|i| DerivationElement::from_vec(&shape, &unit(dim, i)).operator()).collect();
        let env = p_closure(&f, &ops).len();
        Ok((env == p * p + 1, format!("{env}")))
    });
    run_check(rep, "restricted: Jordan-Chevalley parts commute and split", || {
        let mut rng = SplitMix64::new(cfg.seed ^ 4);
        let mut ok = true;
        for _ in 0..20 {
            let x = rng.sparse_fe_vec(&f, w2.dim(), 1, 4);
            let (s, n) = jordan_chevalley(&w2, &x)?;
            ok &= vec_add(&f, &s, &n) == x;
            ok &= w2.bracket(&s, &n).iter().all(|c| c.is_zero());
            ok &= is_nilpotent(&w2, &n);
            let (ms, mn) = jordan_chevalley_matrix(&w2.operator(&x))?;
            ok &= ms == w2.operator(&s) && mn == w2.operator(&n);
        }
        Ok((ok, String::new()))
    });
    run_check(rep, "restricted: ψ relation holds on random elements", || {
        let mut rng = SplitMix64::new(cfg.seed ^ 5);
        let mut ok = true;
        for _ in 0..20 {
            let x = rng.sparse_fe_vec(&f, w2.dim(), 1, 3);
            let psi = psi_relation(&w2, &x, 0, 2)?;
            let lhs = pth_power_iter(&w2, &x, 2)?;
            let mut rhs = vec![Fe::ZERO; w2.dim()];
            for (i, &c) in psi.psi.iter().enumerate() {
                let xi = pth_power_iter(&w2, &x, i as u32)?;
                rhs = vec_add(&f, &rhs, &xi.iter().map(|&v| f.mul(c, v)).collect::<Vec<_>>());
            }
            ok &= lhs == rhs;
        }
        Ok((ok, String::new()))
    });
    run_check(rep, "restricted: W(1;1) brute-force nilpotent count", || {
        let mut sub = cfg.clone();
        sub.family = Family::Witt;
        sub.field = f.clone();
        sub.m = 1;
        sub.heights = vec![1];
        let c = count_nilpotent(&sub, Mode::Enumerate, 0)?;
        let ok = c.agree && c.mismatches == 0 && c.conical && c.zero_counted;
        Ok((ok, format!("{} of {} nilpotent", c.nilpotent, c.total)))
    });
    Ok(())
}

fn verify_automorphisms(cfg: &SessionConfig, rep: &mut Report) -> Result<()> {
    let f = FieldSpec::new(cfg.p(), 1)?;
    let shape = AlgebraShape::restricted(&f, 2)?;
    run_check(rep, "automorphisms: conjugation is a Lie homomorphism", || {
        let mut rng = SplitMix64::new(cfg.seed ^ 6);
        let mut ok = true;
        for _ in 0..20 {
            let s = TruncatedAutomorphism::random(&shape, &mut rng);
            let a = random_derivation(&shape, &mut rng);
            let b = random_derivation(&shape, &mut rng);
            ok &= s.conjugate(&a.bracket(&b))? == s.conjugate(&a)?.bracket(&s.conjugate(&b)?);
            ok &= s.conjugate(&a)? == s.conjugate_operator(&a)?;
        }
        Ok((ok, String::new()))
    });
    run_check(rep, "automorphisms: Demushkin chains replay", || {
        let mut sub = cfg.clone();
        sub.family = Family::Witt;
        sub.field = f.clone();
        sub.m = 2;
        sub.heights = vec![1, 1];
        let mut ok = true;
        for k in 0..20 {
            let mut rng = SplitMix64::substream(cfg.seed, k);
            let z = DerivationElement::parse(&f, &default_input(&sub, Which::Demushkin, &mut rng)?)?;
            let red = demushkin_reduce(&z)?;
            ok &= red.chain.apply_witt(&z)? == red.form;
            ok &= Chain::from_json(&f, None, &red.chain.to_json(&f))? == red.chain;
        }
        Ok((ok, "20 runs".into()))
    });
    run_check(rep, "automorphisms: Premet reduction recovers 𝒟", || {
        let d = regular_nilpotent(&shape);
        let mut ok = true;
        for k in 0..20 {
            let mut rng = SplitMix64::substream(cfg.seed ^ 7, k);
            let y = TruncatedAutomorphism::random(&shape, &mut rng).conjugate(&d)?;
            ok &= match premet_regular_reduce(&y)? {
                PremetOutcome::Regular(r) => r.form == d && r.chain.apply_witt(&y)? == d,
                PremetOutcome::Singular { .. } => false,
            };
        }
        Ok((ok, "20 runs".into()))
    });
    Ok(())
}

fn verify_semidirect(cfg: &SessionConfig, rep: &mut Report) -> Result<()> {
    let f = FieldSpec::new(cfg.p(), 1)?;
    let p = cfg.p() as usize;
    let l = SemidirectAlgebra::sl2_o1(&f)?;
    let shape = l.shape().clone();
    run_check(rep, "semidirect: dim sl2⊗O(1;1)⋊k∂ = 3p + 1", || Ok((l.dim() == 3 * p + 1, format!("{}", l.dim()))));
    run_check(rep, "semidirect: direct nilpotency matches the s_0 criteria", || {
        let elems: Vec<SemidirectElement> = (0..200)
            .map(|k| semidirect_mixed(&l, &mut SplitMix64::substream(cfg.seed, k)))
            .collect::<Result<_>>()?;
        let verdicts = crate::semidirect::semi_is_nilpotent_batch(&l, &elems);
        let mut nil = 0;
        let mut ok = true;
        for (a, v) in elems.iter().zip(verdicts) {
            let v = v?;
            if v.direct {
                nil += 1;
                ok &= l.pth_iter(a, 2)?.is_zero();
            }
        }
        Ok((ok, format!("{nil} of 200 nilpotent")))
    });
    run_check(rep, "semidirect: exp(ad) routes agree", || {
        let mut rng = SplitMix64::new(cfg.seed ^ 8);
        let mut ok = true;
        for _ in 0..30 {
            let t = l.random(&mut rng, 1, 2);
            let s = rng.fe_vec(&f, 3);
            let mut g = DPElement::from_dense(&shape, &rng.fe_vec(&f, shape.dim()));
            g.coeffs.remove(&0);
            ok &= semi_exp_ad(&l, &l.pure_tensor(&s, &g), &t)? == semi_exp_ad_formula(&l, &s, &g, &t)?;
        }
        Ok((ok, "30 pairs".into()))
    });
    let l2 = SemidirectAlgebra::sl2_witt(&f, 2)?;
    run_check(rep, "semidirect: reductions in sl2⊗O(2;1)⋊W(2;1) replay", || {
        let mut ok = true;
        for k in 0..10 {
            let mut rng = SplitMix64::substream(cfg.seed ^ 9, k);
            let mut a = l2.random(&mut rng, 1, 3);
            a.tail = random_z(l2.shape(), 1, &mut rng);
            let red = semi_reduce(&l2, &a)?;
            ok &= semi_apply_chain(&l2, &red.chain, &a)? == red.form;
        }
        Ok((ok, "10 runs".into()))
    });
    run_check(rep, "semidirect: tail structure (z^(p^s) ∈ W_(0), M-space, closure)", || {
        let sh2 = l2.shape().clone();
        let mut rng = SplitMix64::new(cfg.seed ^ 10);
        let mut ok = true;
        for s in 1..=2 {
            for _ in 0..5 {
                let z = random_z(&sh2, s, &mut rng);
                ok &= zps_in_w0(&z, s)?;
                ok &= m_space_report(&z, s).complement_ok;
            }
            ok &= iw_closure_check(&sh2, s, &mut rng, 5)?;
        }
        Ok((ok, String::new()))
    });
    Ok(())
}

/// Random elements of sl2⊗O(1;1)⋊k∂ mixed with conjugates of known nilpotents.
pub fn semidirect_mixed(l: &SemidirectAlgebra, rng: &mut SplitMix64) -> Result<SemidirectElement> {
    let f = l.field().clone();
    let shape = l.shape().clone();
    let dim = shape.dim();
    Ok(match rng.below(3) {
        0 => l.random(rng, 1, 2),
        1 => {
            // λ∂ + e⊗g is nilpotent; move it by exp(ad(s⊗h)) with h ∈ m
            let lam = rng.fe(&f);
            let g = DPElement::from_dense(&shape, &rng.fe_vec(&f, dim));
            let base = l.from_tail(&DerivationElement::partial(&shape, 0).scale(lam)).add(&l.pure_tensor(&[Fe::ONE, Fe::ZERO, Fe::ZERO], &g));
            let s = rng.fe_vec(&f, 3);
            let mut h = DPElement::from_dense(&shape, &rng.fe_vec(&f, dim));
            h.coeffs.remove(&0);
            semi_exp_ad(l, &l.pure_tensor(&s, &h), &base)?
        }
        _ => {
            let mut a = l.random(rng, 1, 2);
            a.tail = DerivationElement::partial(&shape, 0).scale(rng.nonzero_fe(&f));
            a
        }
    })
}

fn verify_zassenhaus(cfg: &SessionConfig, rep: &mut Report) -> Result<()> {
    let p = cfg.p();
    let n = if cfg.family == Family::Zassenhaus || cfg.family == Family::ZassenhausE { cfg.heights[0] } else { 2 };
    let big_m = if cfg.field.degree().is_multiple_of(n) { cfg.field.degree() } else { n };
    let z = zass_e_algebra(p, n, big_m)?;
    run_check(rep, "zassenhaus: e_0 is toral with independent p-powers", || {
        let t = e0_torus(&z)?;
        Ok((t.periodic && t.independent && t.commuting && t.powers_in_envelope, format!("rank {}", t.semisimple_rank)))
    });
    run_check(rep, "zassenhaus: σ is an automorphism with the expected eigenspaces", || {
        let s = sigma_grading_check(&z);
        Ok((s.automorphism && s.order_ok && s.multiplicities_ok, String::new()))
    });
    run_check(rep, "zassenhaus: dim Lie(G) = p^n − n", || {
        let r = lie_g_check(&FieldSpec::new(p, n)?, n)?;
        Ok((r.dim == r.expected && r.tangents_match && r.p_power_exponents_rejected, format!("{}", r.dim)))
    });
    let points = (z.field.order() as f64).powi(n as i32 + 1);
    if points <= ENUMERATION_LIMIT as f64 {
        run_check(rep, "zassenhaus: V ∩ N_sing = {0}", || {
            let filt = e_filtration(&z)?;
            let r = separation_on(&z, &filt, false)?;
            Ok((r.only_zero, format!("{} points", r.points)))
        });
    } else {
        rep.field("skipped_separation", format!("{points} points exceed the enumeration limit"));
    }
    let field = FieldSpec::new(p, 1)?;
    let shape = envelope_shape(&field, n)?;
    run_check(rep, "zassenhaus: classes are invariant under admissible automorphisms", || {
        let mut ok = true;
        for k in 0..40 {
            let mut rng = SplitMix64::substream(cfg.seed ^ 11, k);
            let d = sample_nilpotent(&shape, &mut rng)?;
            let phi = AdmissibleAutomorphism::random(&shape, &mut rng);
            ok &= classify_nilpotent(&d)?.tag == classify_nilpotent(&phi.apply_lp(&d)?)?.tag;
        }
        Ok((ok, "40 elements".into()))
    });
    run_check(rep, "zassenhaus: Yao-Shu and Tyurin chains replay", || {
        let mut sub = cfg.clone();
        sub.family = Family::Zassenhaus;
        sub.field = field.clone();
        sub.heights = vec![n];
        let mut ok = true;
        for k in 0..15 {
            let mut rng = SplitMix64::substream(cfg.seed ^ 12, k);
            let d = PEnvelopeElement::parse(&field, &default_input(&sub, Which::YaoShu, &mut rng)?)?;
            let r = yao_shu_reduce(&d)?;
            ok &= r.chain.apply_lp(&d)? == r.form;
            let d = PEnvelopeElement::parse(&field, &default_input(&sub, Which::Tyurin, &mut rng)?)?;
            match tyurin_reduce(&d, 1) {
                Ok(r) => ok &= r.chain.apply_lp(&d)? == r.form,
                Err(Error::NonAdmissibleStep(_)) => {}
                Err(e) => return Err(e),
            }
        }
        Ok((ok, "15 runs each".into()))
    });
    run_check(rep, "zassenhaus: ι embeds W(1;n)_p into W(n;1)", || {
        let r = iota_check(&field, n, 15, cfg.seed)?;
        Ok((r.partial_matches && r.top_terms_match && r.homomorphism_ok && r.nilpotency_transfer_ok, String::new()))
    });
    Ok(())
}
