//! Command-line front end. `run` returns the process exit code: 0 on success, 1 on bad input,
//! 2 when a verified identity fails or the oracle disagrees with the closed formula.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::arith::{format_rational, int, parse_rational, rat, Rational};
use crate::cm::{degree_formula, BruteForceOracle, CMDegree};
use crate::eisenstein::{eisenstein_qexp, EisensteinPackage};
use crate::error::Error;
use crate::imq::{evaluate_loglinear, ImQField};
use crate::lattice::{Coset, QuadLattice};
use crate::ledger::{inject_sign_fault, verify_ledger, EmbeddingContext, LedgerRow};
use crate::loglinear::LogLinear;
use crate::qseries::{theta_series, PrincipalPart};

pub const PRECISION_ENV: &str = "SPECCY_PRECISION";
const DEFAULT_PRECISION: usize = 30;

#[derive(Parser, Debug)]
#[command(name = "speccy", version, about = "CM degrees, Eisenstein coefficients and theta series for quadratic lattices")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Significant digits for numeric values (default: $SPECCY_PRECISION or 30).
    #[arg(long, global = true)]
    precision: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Discriminant group of a lattice.
    Disc {
        #[arg(long)]
        lattice: PathBuf,
    },
    /// Representation numbers of a positive definite lattice.
    Theta {
        #[arg(long)]
        lattice: PathBuf,
        #[arg(long, default_value = "4")]
        cutoff: String,
    },
    /// Coefficients a+(m, mu) for a negative definite binary lattice.
    Eisenstein {
        #[arg(long)]
        lattice: PathBuf,
        #[arg(long, default_value = "2")]
        cutoff: String,
    },
    /// Degrees of CM cycles, optionally checked against the quaternion point count.
    Degrees {
        #[arg(long)]
        lattice: PathBuf,
        #[arg(long, conflicts_with = "m_max")]
        m: Option<String>,
        #[arg(long)]
        m_max: Option<String>,
        /// Coset index or representative "(a, b)".
        #[arg(long)]
        mu: Option<String>,
        #[arg(long)]
        oracle: bool,
    },
    /// Class number, L(chi, 0) and L'/L(chi, 0).
    Chowla {
        #[arg(long, allow_hyphen_values = true)]
        d: i64,
    },
    /// Checks the degree ledger for a principal part.
    Verify {
        #[arg(long)]
        lattice: PathBuf,
        #[arg(long)]
        sub: PathBuf,
        /// JSON object {"m,mu": c, "0,0": c00}, inline or as @file.
        #[arg(long)]
        pp: String,
        #[arg(long)]
        cutoff: Option<String>,
        /// Negate one Eisenstein coefficient before checking.
        #[arg(long)]
        inject_fault: bool,
    },
}

/// `{"gram": [[int]], "name": string}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct LatticeFile {
    pub gram: Vec<Vec<i64>>,
    #[serde(default)]
    pub name: String,
}

/// `{"basis": [[int]]}`, columns in ambient coordinates.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SublatticeFile {
    pub basis: Vec<Vec<i64>>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{field}: {source}")]
    Io { field: String, source: std::io::Error },
    #[error("{field}: {message}")]
    Parse { field: String, message: String },
    #[error("{field}: {source}")]
    Library { field: String, source: Error },
    #[error("{0}")]
    Usage(String),
}

type CliResult<T> = std::result::Result<T, CliError>;

fn lib(field: &str) -> impl FnOnce(Error) -> CliError + '_ {
    move |source| CliError::Library { field: field.to_string(), source }
}

fn parse_err(field: &str, message: impl ToString) -> CliError {
    CliError::Parse { field: field.to_string(), message: message.to_string() }
}

struct Outcome {
    body: String,
    mismatch: bool,
}

/// Runs the command line `args` (including the program name).
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            let _ = out.write_all(outcome.body.as_bytes());
            if outcome.mismatch {
                let _ = writeln!(err, "identity mismatch");
                2
            } else {
                0
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn precision(cli: &Cli) -> CliResult<usize> {
    if let Some(p) = cli.precision {
        return Ok(p);
    }
    match std::env::var(PRECISION_ENV) {
        Ok(s) => s.trim().parse().map_err(|_| parse_err(PRECISION_ENV, format!("'{s}' is not a digit count"))),
        Err(_) => Ok(DEFAULT_PRECISION),
    }
}

fn execute(cli: &Cli) -> CliResult<Outcome> {
    let digits = precision(cli)?;
    let fmt = cli.format;
    let done = |body| Ok(Outcome { body, mismatch: false });
    match &cli.command {
        Command::Disc { lattice } => done(disc(&read_lattice(lattice)?, fmt)?),
        Command::Theta { lattice, cutoff } => done(theta(&read_lattice(lattice)?, parse_field("cutoff", cutoff)?, fmt)?),
        Command::Eisenstein { lattice, cutoff } => {
            done(eisenstein(&read_lattice(lattice)?, parse_field("cutoff", cutoff)?, digits, fmt)?)
        }
        Command::Degrees { lattice, m, m_max, mu, oracle } => {
            let l0 = read_lattice(lattice)?;
            let ms = match (m, m_max) {
                (Some(m), None) => MRange::Single(parse_field("m", m)?),
                (None, Some(m)) => MRange::UpTo(parse_field("m-max", m)?),
                _ => return Err(CliError::Usage("exactly one of --m and --m-max is required".into())),
            };
            degrees(&l0, ms, mu.as_deref(), *oracle, digits, fmt)
        }
        Command::Chowla { d } => done(chowla(*d, digits, fmt)?),
        Command::Verify { lattice, sub, pp, cutoff, inject_fault } => {
            let cutoff = cutoff.as_deref().map(|c| parse_field("cutoff", c)).transpose()?;
            verify(&read_lattice(lattice)?, &read_sub(sub)?, pp, cutoff, *inject_fault, digits, fmt)
        }
    }
}

fn parse_field(field: &str, s: &str) -> CliResult<Rational> {
    parse_rational(s).map_err(|e| parse_err(field, e))
}

fn read_text(field: &str, path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { field: format!("{field} {}", path.display()), source })
}

fn read_lattice(path: &Path) -> CliResult<QuadLattice> {
    let text = read_text("lattice", path)?;
    let file: LatticeFile = serde_json::from_str(&text).map_err(|e| parse_err("lattice", e))?;
    QuadLattice::new(file.gram).map_err(lib("lattice.gram"))
}

fn read_sub(path: &Path) -> CliResult<Vec<Vec<i64>>> {
    let text = read_text("sub", path)?;
    let file: SublatticeFile = serde_json::from_str(&text).map_err(|e| parse_err("sub", e))?;
    Ok(file.basis)
}

fn numeric(x: &LogLinear, digits: usize) -> CliResult<Value> {
    if x.is_zero() {
        return Ok(Value::String("0".into()));
    }
    Ok(match evaluate_loglinear(x, digits).map_err(lib("precision"))? {
        Some(s) => Value::String(s),
        None => Value::Null,
    })
}

fn value_json(x: &LogLinear, digits: usize) -> CliResult<Value> {
    Ok(json!({ "symbolic": x.to_string(), "numeric": numeric(x, digits)?, "exact": x }))
}

fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn to_csv(header: &[&str], rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| parse_err("csv", e);
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| parse_err("csv", e))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn disc(l: &QuadLattice, fmt: Format) -> CliResult<String> {
    let g = l.discriminant_group();
    let cosets: Vec<Value> = g
        .elements()
        .iter()
        .enumerate()
        .map(|(i, mu)| {
            json!({
                "index": i,
                "representative": mu.to_string(),
                "q": format_rational(&g.q(mu)),
                "order": g.order_of(mu),
            })
        })
        .collect();
    match fmt {
        Format::Json => {
            let (p, q) = l.signature();
            Ok(to_json(&json!({
                "gram": l.gram(),
                "signature": [p, q],
                "det": l.det(),
                "elementary_divisors": g.elementary_divisors(),
                "order": g.order(),
                "level": g.level(),
                "maximal": l.is_maximal(),
                "cosets": cosets,
            })))
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> =
                cosets.iter().map(|c| ["index", "representative", "q", "order"].iter().map(|k| cell(&c[*k])).collect()).collect();
            to_csv(&["index", "representative", "q", "order"], &rows)
        }
    }
}

fn theta(l: &QuadLattice, cutoff: Rational, fmt: Format) -> CliResult<String> {
    let t = theta_series(l, cutoff).map_err(lib("lattice"))?;
    let g = t.group();
    let reps: Vec<String> = g.elements().iter().map(|c| c.to_string()).collect();
    match fmt {
        Format::Json => {
            let coeffs: Vec<Value> = t
                .coefficients()
                .iter()
                .map(|(m, v)| json!({ "m": format_rational(m), "counts": v.iter().map(|c| c.to_integer()).collect::<Vec<_>>() }))
                .collect();
            Ok(to_json(&json!({ "cutoff": format_rational(&cutoff), "cosets": reps, "coefficients": coeffs })))
        }
        Format::Csv => {
            let mut rows = Vec::new();
            for (m, v) in t.coefficients() {
                for (i, c) in v.iter().enumerate() {
                    if !c.is_zero() {
                        rows.push(vec![format_rational(m), i.to_string(), reps[i].clone(), c.to_string()]);
                    }
                }
            }
            to_csv(&["m", "mu", "representative", "count"], &rows)
        }
    }
}

fn package(l0: &QuadLattice) -> CliResult<EisensteinPackage> {
    EisensteinPackage::new(l0.clone()).map_err(lib("lattice"))
}

fn field_json(k: &ImQField) -> Value {
    json!({ "d": k.disc(), "h": k.class_number(), "w": k.units() })
}

fn eisenstein(l0: &QuadLattice, cutoff: Rational, digits: usize, fmt: Format) -> CliResult<String> {
    let pkg = package(l0)?;
    let table = eisenstein_qexp(&pkg, cutoff).map_err(lib("cutoff"))?;
    let g = pkg.disc_group();
    let mut entries = Vec::new();
    for (m, row) in table.coefficients() {
        for (i, a) in row.iter().enumerate() {
            if !a.is_zero() {
                entries.push((m, i, g.element(i), value_json(a, digits)?));
            }
        }
    }
    match fmt {
        Format::Json => {
            let coeffs: Vec<Value> = entries
                .iter()
                .map(|(m, i, mu, v)| json!({ "m": format_rational(m), "mu": i, "representative": mu.to_string(), "value": v }))
                .collect();
            Ok(to_json(&json!({ "field": field_json(pkg.field()), "cutoff": format_rational(&cutoff), "coefficients": coeffs })))
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = entries
                .iter()
                .map(|(m, i, mu, v)| vec![format_rational(m), i.to_string(), mu.to_string(), cell(&v["symbolic"]), cell(&v["numeric"])])
                .collect();
            to_csv(&["m", "mu", "representative", "symbolic", "numeric"], &rows)
        }
    }
}

enum MRange {
    Single(Rational),
    UpTo(Rational),
}

fn degrees(l0: &QuadLattice, ms: MRange, mu: Option<&str>, oracle: bool, digits: usize, fmt: Format) -> CliResult<Outcome> {
    let pkg = package(l0)?;
    let g = pkg.disc_group().clone();
    let cosets: Vec<Coset> = match mu {
        Some(s) => vec![g.parse_coset(s).map_err(lib("mu"))?],
        None => g.elements(),
    };
    let step = pkg.field().abs_disc() as i64;
    let pairs: Vec<(Rational, Coset)> = match ms {
        MRange::Single(m) => cosets.iter().map(|c| (m, c.clone())).collect(),
        MRange::UpTo(top) => {
            let last = (top * int(step)).floor().to_integer();
            (1..=last)
                .flat_map(|k| cosets.iter().map(move |c| (rat(k, step), c.clone())))
                .filter(|(m, c)| crate::arith::frac(*m) == g.q(c))
                .collect()
        }
    };
    let mut brute = if oracle { Some(BruteForceOracle::new(l0.clone()).map_err(lib("oracle"))?) } else { None };
    let mut rows = Vec::new();
    let mut mismatch = false;
    for (m, c) in pairs {
        let f = degree_formula(&pkg, m, &c).map_err(lib("m"))?;
        let o = match brute.as_mut() {
            None => None,
            Some(b) => Some(match b.degree(m, &c) {
                Ok(d) => {
                    mismatch |= d.degree != f.degree;
                    Ok(d)
                }
                Err(Error::Precondition(why)) => Err(why),
                Err(e) => return Err(lib("oracle")(e)),
            }),
        };
        rows.push(degree_row(&g.index_of(&c), &f, o, digits)?);
    }
    let body = match fmt {
        Format::Json => to_json(&json!({ "field": field_json(pkg.field()), "rows": rows })),
        Format::Csv => {
            let header = ["m", "mu", "prime", "weighted_count", "degree", "numeric", "oracle"];
            let table: Vec<Vec<String>> = rows.iter().map(|r| header.iter().map(|k| cell(&r[*k])).collect()).collect();
            to_csv(&header, &table)?
        }
    };
    Ok(Outcome { body, mismatch })
}

fn degree_row(mu: &usize, f: &CMDegree, oracle: Option<std::result::Result<CMDegree, String>>, digits: usize) -> CliResult<Value> {
    let mut row = json!({
        "m": format_rational(&f.m),
        "mu": mu,
        "prime": f.prime,
        "weighted_count": format_rational(&f.weighted_count),
        "degree": f.degree.to_string(),
        "numeric": numeric(&f.degree, digits)?,
    });
    if let Some(o) = oracle {
        row["oracle"] = match o {
            Ok(d) => Value::String(d.degree.to_string()),
            Err(why) => Value::String(format!("n/a: {why}")),
        };
    }
    Ok(row)
}

fn chowla(d: i64, digits: usize, fmt: Format) -> CliResult<String> {
    let k = ImQField::from_discriminant(d).map_err(lib("d"))?;
    let data = k.l_derivative_data(digits).map_err(lib("precision"))?;
    let pkg_constant = crate::eisenstein::principal_binary_lattice(d)
        .and_then(EisensteinPackage::new)
        .map(|p| p.constant_term())
        .ok();
    let mut report = json!({
        "d": d,
        "h": k.class_number(),
        "w": k.units(),
        "l_at_zero": format_rational(&data.l_value),
        "l_prime_at_zero": data.l_prime,
        "log_derivative": data.log_derivative,
        "digits": digits,
    });
    if let Some(c) = &pkg_constant {
        report["a_plus_0_0"] = value_json(c, digits)?;
    }
    match fmt {
        Format::Json => Ok(to_json(&report)),
        Format::Csv => {
            let header = ["d", "h", "w", "l_at_zero", "l_prime_at_zero", "log_derivative"];
            to_csv(&header, &[header.iter().map(|k| cell(&report[*k])).collect()])
        }
    }
}

/// Parses `{"m,mu": c, "0,0": c00}` where `mu` is a coset index or representative.
fn parse_pp(spec: &str, group: &crate::lattice::DiscriminantGroup) -> CliResult<PrincipalPart> {
    let text = match spec.strip_prefix('@') {
        Some(path) => read_text("pp", Path::new(path))?,
        None => spec.to_string(),
    };
    let map: serde_json::Map<String, Value> = serde_json::from_str(&text).map_err(|e| parse_err("pp", e))?;
    let mut pp = PrincipalPart::new(group);
    for (key, v) in &map {
        let field = format!("pp[{key}]");
        let c = match v {
            Value::Number(n) => parse_rational(&n.to_string()),
            Value::String(s) => parse_rational(s),
            _ => return Err(parse_err(&field, "coefficient must be a number or \"num/den\"")),
        }
        .map_err(|e| parse_err(&field, e))?;
        let (m, mu) = key.split_once(',').ok_or_else(|| parse_err(&field, "key must be \"m,mu\""))?;
        let m = parse_rational(m.trim()).map_err(|e| parse_err(&field, e))?;
        let mu = group.parse_coset(mu).map_err(lib(&field))?;
        if m.is_zero() {
            if mu != group.zero() {
                return Err(parse_err(&field, "constant term only at the zero coset"));
            }
            pp.set_constant(pp.constant() + c);
        } else {
            pp.add_term(m, &mu, c).map_err(lib(&field))?;
        }
    }
    pp.check_integral().map_err(lib("pp"))?;
    Ok(pp)
}

fn row_json(r: &LedgerRow, digits: usize) -> CliResult<Value> {
    Ok(json!({
        "identity": r.identity,
        "label": r.label,
        "left": value_json(&r.left, digits)?,
        "right": value_json(&r.right, digits)?,
        "match": r.matches,
    }))
}

fn verify(
    l: &QuadLattice,
    sub: &[Vec<i64>],
    pp_spec: &str,
    cutoff: Option<Rational>,
    fault: bool,
    digits: usize,
    fmt: Format,
) -> CliResult<Outcome> {
    let pp = parse_pp(pp_spec, &l.discriminant_group())?;
    let top = pp.terms().keys().map(|(m, _)| *m).max().unwrap_or_else(Rational::zero);
    let cutoff = cutoff.unwrap_or(top).max(top);
    let mut ctx = EmbeddingContext::new(l.clone(), sub, cutoff).map_err(lib("lattice/sub"))?;
    let injected = if fault { inject_sign_fault(&mut ctx, &pp).map_err(lib("inject-fault"))? } else { None };
    let report = verify_ledger(&ctx, &pp).map_err(lib("pp"))?;
    let mismatch = !report.all_match();
    let rows: Vec<Value> = report.rows.iter().map(|r| row_json(r, digits)).collect::<CliResult<_>>()?;
    let t = &report.totals;
    let body = match fmt {
        Format::Json => to_json(&json!({
            "field": field_json(ctx.package().field()),
            "index": ctx.embedding().index(),
            "principal_part": pp,
            "injected_fault": injected.map(|(m, mu)| json!({ "m": format_rational(&m), "mu": mu.to_string() })),
            "rows": rows,
            "totals": {
                "t_hat_degree": value_json(&t.t_hat_degree, digits)?,
                "ct": value_json(&t.ct, digits)?,
                "lhs": t.lhs.to_string(),
                "rhs": t.rhs.to_string(),
                "residual": value_json(&t.residual, digits)?,
                "lprime_coefficient": format_rational(&t.lprime_coefficient),
                "lprime_status": t.lprime_status,
            },
            "all_match": !mismatch,
        })),
        Format::Csv => {
            let mut table: Vec<Vec<String>> = report
                .rows
                .iter()
                .zip(&rows)
                .map(|(r, j)| {
                    vec![
                        format!("{:?}", r.identity),
                        r.label.clone(),
                        r.left.to_string(),
                        r.right.to_string(),
                        cell(&j["left"]["numeric"]),
                        r.matches.to_string(),
                    ]
                })
                .collect();
            table.push(vec![
                "residual".into(),
                "lhs - rhs".into(),
                t.residual.to_string(),
                "0".into(),
                cell(&numeric(&t.residual, digits)?),
                t.residual.is_zero().to_string(),
            ]);
            to_csv(&["identity", "label", "left", "right", "left_numeric", "match"], &table)?
        }
    };
    Ok(Outcome { body, mismatch })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("speccy").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn chowla_report() {
        let (code, out, _) = run_str(&["--precision", "20", "chowla", "--d", "-7"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["h"], 1);
        assert_eq!(v["l_at_zero"], "1/1");
    }

    #[test]
    fn bad_flags_are_input_errors() {
        assert_eq!(run_str(&["disc"]).0, 1);
        assert_eq!(run_str(&["chowla", "--d", "-12"]).0, 1);
        assert_eq!(run_str(&["disc", "--lattice", "/nonexistent.json"]).0, 1);
        assert_eq!(run_str(&["--help"]).0, 0);
    }
}
