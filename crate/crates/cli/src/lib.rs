//! Command-line front end. Every report is a JSON object carrying the
//! schema tag and the resolved configuration, or a CSV table with a fixed
//! header.

use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use sievecraft::avgprod::{self, LocalFactorSpec, MultiplierSpec};
use sievecraft::census::{self, BoxConvention, CensusOptions, DeltaMethod};
use sievecraft::eulerprod::{self, EulerEstimate};
use sievecraft::exponents;
use sievecraft::lattice::Sector;
use sievecraft::numutil;
use sievecraft::par;
use sievecraft::poly::{BinForm, IntPoly};
use sievecraft::soil::{self, Mask, SoilFn, SoilSpec};
use sievecraft::Error;

pub const SCHEMA: &str = "sievecraft/1";
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const THREADS_ENV: &str = "SIEVECRAFT_THREADS";

#[derive(Parser, Debug)]
#[command(name = "sievecraft", version, about = "Square-free values of polynomials and binary forms")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Global {
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Significant digits for floating-point output.
    #[arg(long, global = true, default_value_t = 12)]
    pub digits: u32,
    /// Worker threads; overrides SIEVECRAFT_THREADS.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub threads: Option<usize>,
    /// Seed for randomly generated inputs.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Include wall-clock timings (breaks byte-identical output).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    FullBox,
    PositiveQuadrant,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Sieve,
    Progressions,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    One,
    Squarefree,
    SquareSign,
    ValuationSign,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Target {
    /// Univariate polynomial in x, e.g. "x^3+2".
    #[arg(long, conflicts_with = "form")]
    pub poly: Option<String>,
    /// Binary form in x and z, e.g. "x^3+2z^3".
    #[arg(long)]
    pub form: Option<String>,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Euler-product density with a rigorous enclosure.
    Density {
        #[command(flatten)]
        target: Target,
        #[arg(long = "B", default_value_t = 10_000)]
        #[serde(rename = "B")]
        b: u64,
        #[arg(long, default_value_t = 2)]
        m: u32,
        /// Forms: count coprime pairs only.
        #[arg(long)]
        coprime: bool,
    },
    /// Brute-force count of power-free values with the main term.
    Census {
        #[command(flatten)]
        target: Target,
        #[arg(long = "N")]
        #[serde(rename = "N")]
        n: u64,
        #[arg(long, default_value_t = 2)]
        m: u32,
        #[arg(long = "B", default_value_t = 10_000)]
        #[serde(rename = "B")]
        b: u64,
        #[arg(long, value_enum, default_value_t = Convention::FullBox)]
        convention: Convention,
        /// Sector between two rays, "x1,y1:x2,y2".
        #[arg(long)]
        sector: Option<String>,
        #[arg(long)]
        coprime: bool,
    },
    /// Values divisible by the square of a large prime.
    Delta {
        #[command(flatten)]
        target: Target,
        #[arg(long = "N")]
        #[serde(rename = "N")]
        n: u64,
        /// Primes above this count; defaults to sqrt(N) or N for forms.
        #[arg(long)]
        threshold: Option<u64>,
        #[arg(long, value_enum, default_value_t = Method::Sieve)]
        method: Method,
    },
    /// Twist counts S(d) for a binary form.
    Twists {
        #[arg(long)]
        form: String,
        #[arg(long = "N")]
        #[serde(rename = "N")]
        n: u64,
    },
    /// Cycle-average and exponent tables of the transitive sextic groups.
    Tables {
        /// "kissing" for the kissing-number constant, or a number.
        #[arg(long, default_value = "kissing")]
        alpha: String,
    },
    /// Average of a product of local factors against its prediction.
    Avgprod {
        #[command(flatten)]
        target: Target,
        #[arg(long = "N")]
        #[serde(rename = "N")]
        n: u64,
        #[arg(long = "B", default_value_t = 1_000)]
        #[serde(rename = "B")]
        b: u64,
        #[arg(long, value_enum, default_value_t = Family::Squarefree)]
        family: Family,
        /// Progression multiplier "a:m".
        #[arg(long, conflicts_with = "mobius")]
        progression: Option<String>,
        /// Möbius multiplier (no prediction).
        #[arg(long)]
        mobius: bool,
        /// Forms: sector "x1,y1:x2,y2".
        #[arg(long)]
        sector: Option<String>,
        /// Also measure the large-prime term and test the inequality.
        #[arg(long)]
        check: bool,
    },
    /// Sieve inequalities on a polynomial soil or on random soils.
    Sievecheck {
        #[arg(long)]
        poly: Option<String>,
        #[arg(long = "N", default_value_t = 1_000)]
        #[serde(rename = "N")]
        n: u64,
        /// Sieve primes up to this bound.
        #[arg(long, default_value_t = 13)]
        primes: u64,
        /// Random soils instead of a polynomial soil.
        #[arg(long)]
        random: Option<usize>,
    },
    /// Splitting types of primes, optionally with the R(α, d) sum.
    Splitting {
        #[arg(long)]
        poly: String,
        /// Comma-separated primes.
        #[arg(long, conflicts_with = "up_to")]
        primes: Option<String>,
        #[arg(long)]
        up_to: Option<u64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long = "X", default_value_t = 100_000)]
        #[serde(rename = "X")]
        x: u64,
    },
}

/// A report ready for printing.
enum Output {
    Json(Value),
    Csv(String),
}

/// Usage errors are reported by the front end; everything else comes from
/// the library.
#[derive(Debug)]
enum Fail {
    Usage(String),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn usage(msg: impl Into<String>) -> Fail {
    Fail::Usage(msg.into())
}

fn parse_sector(s: &str) -> Result<Sector, Error> {
    let bad = || Error::Parse { pos: 0, msg: format!("sector must look like x1,y1:x2,y2, got {s:?}") };
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let ray = |t: &str| -> Result<(i64, i64), Error> {
        let (x, y) = t.split_once(',').ok_or_else(bad)?;
        Ok((x.trim().parse().map_err(|_| bad())?, y.trim().parse().map_err(|_| bad())?))
    };
    Sector::between(ray(a)?, ray(b)?)
}

fn target(t: &Target) -> Result<Result<IntPoly, BinForm>, Fail> {
    match (&t.poly, &t.form) {
        (Some(p), None) => Ok(Ok(IntPoly::parse(p)?)),
        (None, Some(f)) => Ok(Err(BinForm::parse(f)?)),
        _ => Err(usage("give exactly one of --poly or --form")),
    }
}

fn estimate_json(e: &EulerEstimate) -> Value {
    json!({
        "lower": e.lower_f64(),
        "upper": e.upper_f64(),
        "truncated": eulerprod::to_f64(&e.truncated),
        "B": e.b,
        "status": e.status,
        "factors": e.factors.len(),
    })
}

fn family(f: Family) -> LocalFactorSpec {
    match f {
        Family::One => LocalFactorSpec::one(),
        Family::Squarefree => LocalFactorSpec::squarefree_indicator(),
        Family::SquareSign => LocalFactorSpec::square_sign(),
        Family::ValuationSign => LocalFactorSpec::valuation_sign(),
    }
}

fn to_json<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("reports serialize")
}

fn random_soil(rng: &mut ChaCha8Rng) -> Result<SoilSpec, Error> {
    let k = rng.gen_range(1..=6usize);
    let weights: Vec<u64> = (0..k).map(|_| rng.gen_range(2..=12u64)).collect();
    let size = rng.gen_range(1..=300usize);
    let r: Vec<Mask> = (0..size).map(|_| rng.gen_range(0..1u64 << k)).collect();
    let table: Vec<i64> = (0..size << k).map(|_| rng.gen_range(-1..=1i64)).collect();
    let f: SoilFn = std::sync::Arc::new(move |a, d| num_complex::Complex::new(table[(a << k) | d as usize], 0));
    SoilSpec::new(weights, r, f, 1, 1.0)
}

fn sieve_rows(soil: &SoilSpec) -> Result<(Vec<Value>, u64), Error> {
    let prof = soil.profile()?;
    let mut rows = Vec::new();
    let mut violations = 0;
    for m in prof.breakpoints() {
        let (e, bound) = (prof.error(m), prof.ridd_bound(m));
        if e > bound * (1.0 + 1e-9) + 1e-9 {
            violations += 1;
        }
        rows.push(json!({"M": m, "error": e, "ridd_bound": bound}));
    }
    Ok((rows, violations))
}

fn dispatch(cmd: &Command, g: &Global) -> Result<Output, Fail> {
    let parallel = par::DEFAULT_PARALLEL;
    match cmd {
        Command::Density { target: t, b, m, coprime } => {
            let est = match target(t)? {
                Ok(p) => eulerprod::density_univ(&p, *b, *m)?,
                Err(f) => eulerprod::density_form(&f, *b, *coprime)?,
            };
            Ok(Output::Json(estimate_json(&est)))
        }
        Command::Census { target: t, n, m, b, convention, sector, coprime } => {
            let opts = CensusOptions { euler_b: *b, trial_bound: None, parallel, timing: g.timing };
            let rep = match target(t)? {
                Ok(p) => census::count_powerfree_values_with(&p, *n, *m, &opts)?,
                Err(f) => {
                    let conv = match convention {
                        Convention::FullBox => BoxConvention::FullBox,
                        Convention::PositiveQuadrant => BoxConvention::PositiveQuadrant,
                    };
                    let sec = sector.as_deref().map(parse_sector).transpose()?;
                    census::count_squarefree_form_with(&f, *n, conv, sec.as_ref(), *coprime, &opts)?
                }
            };
            let mut v = to_json(&rep);
            v["main"] = json!(rep.main());
            v["discrepancy_rel"] = json!(rep.discrepancy_rel());
            Ok(Output::Json(v))
        }
        Command::Delta { target: t, n, threshold, method } => match target(t)? {
            Ok(p) => {
                let th = threshold.unwrap_or(numutil::isqrt(*n as u128) as u64);
                let meth = match method {
                    Method::Sieve => DeltaMethod::Sieve,
                    Method::Progressions => DeltaMethod::Progressions,
                };
                let count = census::delta_census_univ_with(&p, *n, th, meth, parallel)?;
                Ok(Output::Json(json!({"poly": p.to_string(), "n": n, "threshold": th, "count": count})))
            }
            Err(f) => {
                let rep = census::delta_census_form_with(&f, *n, threshold.unwrap_or(*n), parallel)?;
                Ok(Output::Json(to_json(&rep)))
            }
        },
        Command::Twists { form, n } => {
            let t = census::twist_census_with(&BinForm::parse(form)?, *n, parallel)?;
            if g.format == Some(Format::Json) {
                Ok(Output::Json(to_json(&t)))
            } else {
                Ok(Output::Csv(t.to_csv()))
            }
        }
        Command::Tables { alpha } => {
            let a = match alpha.as_str() {
                "kissing" => exponents::alpha_constant(),
                s => s.parse::<f64>().map_err(|_| usage(format!("--alpha must be \"kissing\" or a number, got {s:?}")))?,
            };
            let rows = exponents::tables(a)?;
            if g.format == Some(Format::Json) {
                return Ok(Output::Json(json!({"alpha": a, "rows": to_json(&rows)})));
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::resource(e.to_string());
            w.write_record(["group", "order", "coeff_1", "coeff_2^a", "coeff_2^2a", "coeff_2^3a", "coeff_2^4a", "delta", "beta"])
                .map_err(io)?;
            for r in &rows {
                let mut rec = vec![r.group.clone(), r.order.to_string()];
                rec.extend(r.coefficients.iter().map(|(n, d)| if *d == 1 { n.to_string() } else { format!("{n}/{d}") }));
                rec.push(round(r.delta, g.digits).to_string());
                rec.push(round(r.beta, g.digits).to_string());
                w.write_record(&rec).map_err(io)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::resource(e.to_string()))?;
            Ok(Output::Csv(String::from_utf8(bytes).expect("csv is utf-8")))
        }
        Command::Avgprod { target: t, n, b, family: fam, progression, mobius, sector, check } => {
            let u = family(*fam);
            match target(t)? {
                Ok(p) => {
                    if *check {
                        if progression.is_some() || *mobius {
                            return Err(usage("--check applies to the plain average"));
                        }
                        return Ok(Output::Json(to_json(&avgprod::poncho_check(&p, &u, *n, *b)?)));
                    }
                    let mult = match (progression, mobius) {
                        (Some(s), _) => {
                            let (a, m) = s
                                .split_once(':')
                                .and_then(|(a, m)| Some((a.trim().parse().ok()?, m.trim().parse().ok()?)))
                                .ok_or_else(|| Error::Parse { pos: 0, msg: format!("progression must be a:m, got {s:?}") })?;
                            Some(MultiplierSpec::progression(a, m)?)
                        }
                        (None, true) => Some(MultiplierSpec::mobius()),
                        (None, false) => None,
                    };
                    let rep = match mult {
                        Some(mu) => avgprod::average_with_multiplier_with(&p, &u, &mu, *n, *b, parallel)?,
                        None => avgprod::empirical_average_with(&p, &u, *n, *b, parallel)?,
                    };
                    Ok(Output::Json(to_json(&rep)))
                }
                Err(f) => {
                    let sec = sector.as_deref().map(parse_sector).transpose()?;
                    let rep = avgprod::empirical_average_form_with(&f, &u, *n, sec.as_ref(), None, *b, parallel)?;
                    Ok(Output::Json(to_json(&rep)))
                }
            }
        }
        Command::Sievecheck { poly, n, primes, random } => {
            if let Some(count) = random {
                let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
                let mut total = 0;
                let mut soils = Vec::new();
                for i in 0..*count {
                    let s = random_soil(&mut rng)?;
                    let (rows, v) = sieve_rows(&s)?;
                    total += v;
                    soils.push(json!({"index": i, "primes": s.prime_count(), "size": s.r.len(), "violations": v, "rows": rows.len()}));
                }
                return Ok(Output::Json(json!({"seed": g.seed, "soils": soils, "violations": total})));
            }
            let p = IntPoly::parse(poly.as_deref().ok_or_else(|| usage("give --poly or --random"))?)?;
            let ps = numutil::primes_up_to(*primes);
            let s = soil::squarefree_value_soil(&p, *n, &ps)?;
            let k = soil::squarefree_value_constants(&p, &s, *n, &ps)?;
            let (rows, violations) = sieve_rows(&s)?;
            let mut yugo = Vec::new();
            let mut yugo_fail = 0;
            for m in s.profile()?.breakpoints() {
                let rep = soil::yugo_bound(&s, &k, m)?;
                if !rep.holds() {
                    yugo_fail += 1;
                }
                yugo.push(json!({"M": m, "error": rep.error(), "bound": rep.bound, "terms": rep.terms}));
            }
            Ok(Output::Json(json!({
                "poly": p.to_string(), "n": n, "primes": ps,
                "ridd": rows, "ridd_violations": violations,
                "yugo": yugo, "yugo_violations": yugo_fail,
            })))
        }
        Command::Splitting { poly, primes, up_to, alpha, x } => {
            let p = IntPoly::parse(poly)?;
            let list: Vec<u64> = match (primes, up_to) {
                (Some(s), _) => s
                    .split(',')
                    .map(|t| t.trim().parse::<u64>().map_err(|_| Error::Parse { pos: 0, msg: format!("bad prime {t:?}") }))
                    .collect::<Result<_, _>>()?,
                (None, Some(n)) => numutil::primes_up_to(*n),
                (None, None) => return Err(usage("give --primes or --up-to")),
            };
            let mut rows = Vec::new();
            for q in list {
                match census::splitting_type(&p, q) {
                    Ok(t) => rows.push(json!({"p": q, "type": t})),
                    // ramified primes are listed without a type
                    Err(Error::Domain(m)) if up_to.is_some() => rows.push(json!({"p": q, "type": null, "note": m})),
                    Err(e) => return Err(e.into()),
                }
            }
            let mut v = json!({"poly": p.to_string(), "primes": rows});
            if let Some(a) = alpha {
                v["r_alpha"] = to_json(&census::r_alpha_sum_with(&p, *a, *x, parallel)?);
            }
            Ok(Output::Json(v))
        }
    }
}

/// Rounds to `digits` significant digits.
pub fn round(x: f64, digits: u32) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if !x.is_finite() || digits == 0 {
        return x;
    }
    format!("{:.*e}", (digits - 1) as usize, x).parse().unwrap_or(x)
}

fn round_all(v: &mut Value, digits: u32) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(|x| round(x, digits)).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(|x| round_all(x, digits)),
        Value::Object(o) => o.values_mut().for_each(|x| round_all(x, digits)),
        _ => {}
    }
}

fn text(v: &Value, indent: usize, out: &mut String) {
    match v {
        Value::Object(o) => {
            for (k, x) in o {
                if x.is_object() || x.is_array() {
                    out.push_str(&format!("{:indent$}{k}:\n", ""));
                    text(x, indent + 2, out);
                } else {
                    out.push_str(&format!("{:indent$}{k}: {x}\n", ""));
                }
            }
        }
        Value::Array(a) => {
            for x in a {
                if x.is_object() || x.is_array() {
                    out.push_str(&format!("{:indent$}-\n", ""));
                    text(x, indent + 2, out);
                } else {
                    out.push_str(&format!("{:indent$}- {x}\n", ""));
                }
            }
        }
        x => out.push_str(&format!("{:indent$}{x}\n", "")),
    }
}

fn exit_code(e: &Fail) -> i32 {
    match e {
        Fail::Usage(_) => EXIT_USAGE,
        Fail::Core(Error::Resource(_)) => EXIT_RESOURCE,
        Fail::Core(_) => EXIT_DOMAIN,
    }
}

fn threads(g: &Global) -> Result<Option<usize>, Fail> {
    if let Some(t) = g.threads {
        return Ok(Some(t));
    }
    match std::env::var(THREADS_ENV) {
        Ok(s) => s.trim().parse().map(Some).map_err(|_| usage(format!("{THREADS_ENV} must be a positive integer"))),
        Err(_) => Ok(None),
    }
}

/// Parses `argv` (program name first), runs the command and writes the
/// report; returns the process exit code.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    let result = threads(&cli.global).and_then(|t| {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = t {
            if t == 0 {
                return Err(usage("thread count must be positive"));
            }
            b = b.num_threads(t);
        }
        let pool = b.build().map_err(|e| Error::resource(e.to_string()))?;
        pool.install(|| dispatch(&cli.command, &cli.global))
    });
    match result {
        Ok(Output::Csv(s)) if cli.global.format != Some(Format::Json) => {
            let _ = out.write_all(s.as_bytes());
            0
        }
        Ok(Output::Csv(_)) => unreachable!("json requests never produce csv"),
        Ok(Output::Json(mut report)) => {
            round_all(&mut report, cli.global.digits);
            let doc = json!({"schema": SCHEMA, "config": &cli.command, "options": &cli.global, "report": report});
            let body = match cli.global.format {
                Some(Format::Text) => {
                    let mut s = String::new();
                    text(&doc, 0, &mut s);
                    s
                }
                Some(Format::Csv) => {
                    let _ = writeln!(err, "csv output is only available for tables and twists");
                    return EXIT_USAGE;
                }
                _ => serde_json::to_string_pretty(&doc).expect("json") + "\n",
            };
            let _ = out.write_all(body.as_bytes());
            0
        }
        Err(e) => {
            match &e {
                Fail::Usage(m) => writeln!(err, "usage error: {m}"),
                Fail::Core(c) => writeln!(err, "error: {c}"),
            }
            .ok();
            exit_code(&e)
        }
    }
}
