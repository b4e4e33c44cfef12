//! Exact values `r₀ + Σ rₚ·log p + Σ r_s·s` over a fixed set of transcendental symbols.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::arith::{factorize, format_rational, parse_rational, rational_to_f64, Rational};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    /// Euler's constant γ.
    EulerGamma,
    /// log π.
    LogPi,
    /// `L′(χ_d,0)/L(χ_d,0)` for the Kronecker character of discriminant `d`.
    LogDerivL(i64),
    /// The central derivative `L′(ξ(f),Θ_Λ,0)`, never evaluated.
    CentralDerivative,
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::EulerGamma => f.write_str("gamma"),
            Symbol::LogPi => f.write_str("log_pi"),
            Symbol::LogDerivL(d) => write!(f, "Lp/L({d})"),
            Symbol::CentralDerivative => f.write_str("Lp(xi_f,Theta,0)"),
        }
    }
}

impl FromStr for Symbol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(Symbol::EulerGamma),
            "log_pi" => Ok(Symbol::LogPi),
            "Lp(xi_f,Theta,0)" => Ok(Symbol::CentralDerivative),
            _ => s
                .strip_prefix("Lp/L(")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|d| d.parse().ok())
                .map(Symbol::LogDerivL)
                .ok_or_else(|| Error::Input(format!("unknown symbol '{s}'"))),
        }
    }
}

/// Canonical form: no zero coefficients stored, logs only of primes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct LogLinear {
    rational: Rational,
    logs: BTreeMap<u64, Rational>,
    symbols: BTreeMap<Symbol, Rational>,
}

impl LogLinear {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(r: Rational) -> Self {
        LogLinear { rational: r, ..Self::default() }
    }

    /// `log p` for a prime `p`.
    pub fn log_prime(p: u64) -> Self {
        let mut logs = BTreeMap::new();
        logs.insert(p, Rational::one());
        LogLinear { logs, ..Self::default() }
    }

    /// `log r` for a positive rational, expanded over primes.
    pub fn log_rational(r: Rational) -> Self {
        assert!(r.is_positive(), "logarithm of a non-positive number");
        let mut out = Self::zero();
        for (p, e) in factorize(*r.numer() as u64) {
            out += Self::log_prime(p) * Rational::from_integer(e as i64);
        }
        for (p, e) in factorize(*r.denom() as u64) {
            out += Self::log_prime(p) * Rational::from_integer(-(e as i64));
        }
        out
    }

    pub fn symbol(s: Symbol) -> Self {
        let mut symbols = BTreeMap::new();
        symbols.insert(s, Rational::one());
        LogLinear { symbols, ..Self::default() }
    }

    pub fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.logs.is_empty() && self.symbols.is_empty()
    }

    pub fn rational_part(&self) -> Rational {
        self.rational
    }

    pub fn log_terms(&self) -> &BTreeMap<u64, Rational> {
        &self.logs
    }

    pub fn symbol_terms(&self) -> &BTreeMap<Symbol, Rational> {
        &self.symbols
    }

    pub fn log_coefficient(&self, p: u64) -> Rational {
        self.logs.get(&p).copied().unwrap_or_else(Rational::zero)
    }

    pub fn symbol_coefficient(&self, s: Symbol) -> Rational {
        self.symbols.get(&s).copied().unwrap_or_else(Rational::zero)
    }

    /// True when the value is a rational multiple of `log p` and nothing else.
    pub fn is_multiple_of_log(&self, p: u64) -> bool {
        self.rational.is_zero() && self.symbols.is_empty() && self.logs.keys().all(|&q| q == p)
    }

    pub fn without_symbol(&self, s: Symbol) -> Self {
        let mut out = self.clone();
        out.symbols.remove(&s);
        out
    }

    /// Numeric value, given values for the symbols that occur.
    pub fn to_f64(&self, symbol_value: impl Fn(Symbol) -> Option<f64>) -> Option<f64> {
        let mut v = rational_to_f64(&self.rational);
        for (p, c) in &self.logs {
            v += rational_to_f64(c) * (*p as f64).ln();
        }
        for (s, c) in &self.symbols {
            v += rational_to_f64(c) * symbol_value(*s)?;
        }
        Some(v)
    }

    fn add_in(&mut self, other: &LogLinear, scale: Rational) {
        self.rational += other.rational * scale;
        for (p, c) in &other.logs {
            let e = self.logs.entry(*p).or_insert_with(Rational::zero);
            *e += *c * scale;
            if e.is_zero() {
                self.logs.remove(p);
            }
        }
        for (s, c) in &other.symbols {
            let e = self.symbols.entry(*s).or_insert_with(Rational::zero);
            *e += *c * scale;
            if e.is_zero() {
                self.symbols.remove(s);
            }
        }
    }
}

impl Add for LogLinear {
    type Output = LogLinear;
    fn add(mut self, rhs: LogLinear) -> LogLinear {
        self.add_in(&rhs, Rational::one());
        self
    }
}

impl<'a> Add<&'a LogLinear> for LogLinear {
    type Output = LogLinear;
    fn add(mut self, rhs: &'a LogLinear) -> LogLinear {
        self.add_in(rhs, Rational::one());
        self
    }
}

impl AddAssign for LogLinear {
    fn add_assign(&mut self, rhs: LogLinear) {
        self.add_in(&rhs, Rational::one());
    }
}

impl<'a> AddAssign<&'a LogLinear> for LogLinear {
    fn add_assign(&mut self, rhs: &'a LogLinear) {
        self.add_in(rhs, Rational::one());
    }
}

impl Sub for LogLinear {
    type Output = LogLinear;
    fn sub(mut self, rhs: LogLinear) -> LogLinear {
        self.add_in(&rhs, -Rational::one());
        self
    }
}

impl Neg for LogLinear {
    type Output = LogLinear;
    fn neg(self) -> LogLinear {
        self * -Rational::one()
    }
}

impl Mul<Rational> for LogLinear {
    type Output = LogLinear;
    fn mul(self, k: Rational) -> LogLinear {
        if k.is_zero() {
            return LogLinear::zero();
        }
        LogLinear {
            rational: self.rational * k,
            logs: self.logs.into_iter().map(|(p, c)| (p, c * k)).collect(),
            symbols: self.symbols.into_iter().map(|(s, c)| (s, c * k)).collect(),
        }
    }
}

impl Mul<Rational> for &LogLinear {
    type Output = LogLinear;
    fn mul(self, k: Rational) -> LogLinear {
        self.clone() * k
    }
}

impl std::iter::Sum for LogLinear {
    fn sum<I: Iterator<Item = LogLinear>>(iter: I) -> LogLinear {
        iter.fold(LogLinear::zero(), |a, b| a + b)
    }
}

impl fmt::Display for LogLinear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<(Rational, String)> = Vec::new();
        if !self.rational.is_zero() {
            parts.push((self.rational, String::new()));
        }
        for (p, c) in &self.logs {
            parts.push((*c, format!("log {p}")));
        }
        for (s, c) in &self.symbols {
            parts.push((*c, s.to_string()));
        }
        if parts.is_empty() {
            return f.write_str("0");
        }
        for (i, (c, name)) in parts.iter().enumerate() {
            let mag = c.abs();
            if i == 0 {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if c.is_negative() { " - " } else { " + " })?;
            }
            let coeff = if mag.is_integer() { mag.numer().to_string() } else { format!("{}/{}", mag.numer(), mag.denom()) };
            match (name.is_empty(), mag.is_one()) {
                (true, _) => f.write_str(&coeff)?,
                (false, true) => f.write_str(name)?,
                (false, false) => write!(f, "{coeff}*{name}")?,
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct LogLinearJson {
    rational: String,
    logs: BTreeMap<String, String>,
    symbols: BTreeMap<String, String>,
}

impl Serialize for LogLinear {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LogLinearJson {
            rational: format_rational(&self.rational),
            logs: self.logs.iter().map(|(p, c)| (p.to_string(), format_rational(c))).collect(),
            symbols: self.symbols.iter().map(|(k, c)| (k.to_string(), format_rational(c))).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LogLinear {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = LogLinearJson::deserialize(d)?;
        let mut out = LogLinear::constant(parse_rational(&raw.rational).map_err(D::Error::custom)?);
        for (p, c) in raw.logs {
            let p: u64 = p.parse().map_err(D::Error::custom)?;
            let c = parse_rational(&c).map_err(D::Error::custom)?;
            out += LogLinear::log_rational(Rational::from_integer(p as i64)) * c;
        }
        for (k, c) in raw.symbols {
            let k: Symbol = k.parse().map_err(D::Error::custom)?;
            let c = parse_rational(&c).map_err(D::Error::custom)?;
            out += LogLinear::symbol(k) * c;
        }
        Ok(out)
    }
}
