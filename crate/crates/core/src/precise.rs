//! Arbitrary-precision real constants: `log Γ` at rationals, Euler's constant, `π`, `log n`.

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

const RM: RoundingMode = RoundingMode::ToEven;
/// Largest supported request, in decimal digits.
pub const MAX_DIGITS: usize = 2000;

/// A working context at `2·digits + 10` decimal digits.
pub struct Precise {
    digits: usize,
    bits: usize,
    cc: Consts,
    bernoulli: Vec<BigRational>,
}

impl Precise {
    pub fn new(digits: usize) -> Result<Self> {
        if digits == 0 || digits > MAX_DIGITS {
            return Err(Error::Precision(format!("{digits} digits requested, supported range 1..={MAX_DIGITS}")));
        }
        let working = 2 * digits + 10;
        let bits = (working as f64 * std::f64::consts::LOG2_10).ceil() as usize + 64;
        let cc = Consts::new().map_err(|e| Error::Precision(format!("{e:?}")))?;
        Ok(Precise { digits, bits, cc, bernoulli: Vec::new() })
    }

    pub fn digits(&self) -> usize {
        self.digits
    }

    pub fn working_digits(&self) -> usize {
        2 * self.digits + 10
    }

    pub fn int(&self, n: i64) -> BigFloat {
        BigFloat::from_i64(n, self.bits)
    }

    pub fn big_int(&mut self, n: &BigInt) -> BigFloat {
        BigFloat::parse(&n.to_string(), Radix::Dec, self.bits, RM, &mut self.cc)
    }

    pub fn rational(&mut self, r: &BigRational) -> BigFloat {
        let n = self.big_int(r.numer());
        let d = self.big_int(r.denom());
        n.div(&d, self.bits, RM)
    }

    pub fn small_rational(&self, n: i64, d: i64) -> BigFloat {
        self.int(n).div(&self.int(d), self.bits, RM)
    }

    pub fn parse_decimal(&mut self, s: &str) -> BigFloat {
        BigFloat::parse(s, Radix::Dec, self.bits, RM, &mut self.cc)
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.bits, RM)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.bits, RM)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.bits, RM)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.bits, RM)
    }

    pub fn ln(&mut self, a: &BigFloat) -> BigFloat {
        a.ln(self.bits, RM, &mut self.cc)
    }

    pub fn pi(&mut self) -> BigFloat {
        self.cc.pi(self.bits, RM)
    }

    pub fn ln_int(&mut self, n: u64) -> BigFloat {
        let x = BigFloat::from_u64(n, self.bits);
        self.ln(&x)
    }

    fn ensure_bernoulli(&mut self, count: usize) {
        // B_0, B_2, B_4, … via the Akiyama–Tanigawa recurrence
        let need = 2 * count + 1;
        if self.bernoulli.len() > count {
            return;
        }
        let mut a: Vec<BigRational> = Vec::with_capacity(need + 1);
        let mut out = Vec::with_capacity(count + 1);
        for m in 0..=need {
            a.push(BigRational::new(BigInt::one(), BigInt::from(m as u64 + 1)));
            for j in (1..=m).rev() {
                let diff = &a[j - 1] - &a[j];
                a[j - 1] = diff * BigRational::from_integer(BigInt::from(j as u64));
            }
            if m % 2 == 0 {
                out.push(a[0].clone());
            }
        }
        self.bernoulli = out;
    }

    /// Shift so that the asymptotic series at `x + N` reaches the working precision.
    fn shift(&self) -> u64 {
        (self.working_digits() as f64 * 0.6).ceil() as u64 + 10
    }

    fn series_terms(&self) -> usize {
        self.working_digits()
    }

    /// `log Γ(a/q)` for positive `a/q`.
    pub fn ln_gamma(&mut self, a: i64, q: i64) -> BigFloat {
        assert!(a > 0 && q > 0, "log-gamma needs a positive argument");
        let n = self.shift();
        let terms = self.series_terms();
        self.ensure_bernoulli(terms + 1);
        // log Γ(x) = log Γ(x+N) − log Π_{k<N}(x+k), with Π = P/q^N exactly
        let mut prod = BigInt::one();
        for k in 0..n as i64 {
            prod *= BigInt::from(a + k * q);
        }
        let ln_prod = {
            let p = self.big_int(&prod);
            let lp = self.ln(&p);
            let lq = self.ln_int(q as u64);
            self.sub(&lp, &self.mul(&self.int(n as i64), &lq))
        };
        let z = self.small_rational(a + n as i64 * q, q);
        let ln_z = self.ln(&z);
        let pi = self.pi();
        let two_pi = self.mul(&self.int(2), &pi);
        let ln_two_pi = self.ln(&two_pi);
        let half_ln_2pi = self.div(&ln_two_pi, &self.int(2));
        let mut s = self.sub(&self.mul(&self.sub(&z, &self.small_rational(1, 2)), &ln_z), &z);
        s = self.add(&s, &half_ln_2pi);
        let z2 = self.mul(&z, &z);
        let mut zpow = z.clone();
        let eps = self.epsilon();
        for k in 1..=terms {
            let b = self.bernoulli[k].clone();
            let coeff = b / BigRational::from_integer(BigInt::from((2 * k * (2 * k - 1)) as u64));
            let c = self.rational(&coeff);
            let term = self.div(&c, &zpow);
            s = self.add(&s, &term);
            if term.abs() < eps {
                break;
            }
            zpow = self.mul(&zpow, &z2);
        }
        self.sub(&s, &ln_prod)
    }

    /// Euler's constant `γ = −ψ(1)`.
    pub fn euler_gamma(&mut self) -> BigFloat {
        let n = self.shift();
        let terms = self.series_terms();
        self.ensure_bernoulli(terms + 1);
        // ψ(1) = ψ(1+N) − H_N
        let mut h = BigRational::zero();
        for k in 1..=n {
            h += BigRational::new(BigInt::one(), BigInt::from(k));
        }
        let z = self.int(1 + n as i64);
        let ln_z = self.ln(&z);
        let mut psi = self.sub(&ln_z, &self.div(&self.int(1), &self.mul(&self.int(2), &z)));
        let z2 = self.mul(&z, &z);
        let mut zpow = z2.clone();
        let eps = self.epsilon();
        for k in 1..=terms {
            let coeff = self.bernoulli[k].clone() / BigRational::from_integer(BigInt::from(2 * k as u64));
            let c = self.rational(&coeff);
            let term = self.div(&c, &zpow);
            psi = self.sub(&psi, &term);
            if term.abs() < eps {
                break;
            }
            zpow = self.mul(&zpow, &z2);
        }
        let hf = self.rational(&h);
        let psi1 = self.sub(&psi, &hf);
        psi1.neg()
    }

    fn epsilon(&self) -> BigFloat {
        let ten = BigFloat::from_i64(10, self.bits);
        let p = ten.powi(self.working_digits() + 5, self.bits, RM);
        BigFloat::from_i64(1, self.bits).div(&p, self.bits, RM)
    }

    /// Decimal rendering with `digits` significant digits.
    pub fn render(&mut self, x: &BigFloat) -> String {
        render_digits(x, self.digits, &mut self.cc)
    }

    pub fn to_f64(&mut self, x: &BigFloat) -> f64 {
        let s = x.format(Radix::Dec, RM, &mut self.cc).unwrap_or_default();
        s.parse().unwrap_or(f64::NAN)
    }
}

/// Rounds the decimal expansion of `x` to `digits` significant digits, `d.ddd…e±N`.
fn render_digits(x: &BigFloat, digits: usize, cc: &mut Consts) -> String {
    if x.is_zero() {
        return "0".into();
    }
    let s = x.format(Radix::Dec, RM, cc).unwrap_or_else(|_| "NaN".into());
    let (mant, exp) = s.split_once('e').unwrap_or((&s, "0"));
    let negative = mant.starts_with('-');
    let ds: Vec<u8> = mant.bytes().filter(|b| b.is_ascii_digit()).map(|b| b - b'0').collect();
    let mut exp: i64 = exp.parse().unwrap_or(0);
    let mut kept: Vec<u8> = ds.iter().take(digits).cloned().collect();
    while kept.len() < digits {
        kept.push(0);
    }
    if ds.get(digits).is_some_and(|&d| d >= 5) {
        let mut i = kept.len();
        loop {
            if i == 0 {
                kept.insert(0, 1);
                kept.pop();
                exp += 1;
                break;
            }
            i -= 1;
            if kept[i] == 9 {
                kept[i] = 0;
            } else {
                kept[i] += 1;
                break;
            }
        }
    }
    let body: String = kept.iter().map(|d| (b'0' + d) as char).collect();
    let (head, tail) = body.split_at(1);
    let sign = if negative { "-" } else { "" };
    if tail.is_empty() {
        format!("{sign}{head}e{exp}")
    } else {
        format!("{sign}{head}.{tail}e{exp}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euler_constant_to_forty_digits() {
        let mut p = Precise::new(40).unwrap();
        let g = p.euler_gamma();
        assert_eq!(p.render(&g), "5.772156649015328606065120900824024310422e-1");
    }

    #[test]
    fn log_gamma_half_is_half_log_pi() {
        let mut p = Precise::new(30).unwrap();
        let lg = p.ln_gamma(1, 2);
        let pi = p.pi();
        let ln_pi = p.ln(&pi);
        let expected = p.div(&ln_pi, &p.int(2));
        let diff = p.sub(&lg, &expected);
        assert!(diff.abs() < p.epsilon().mul(&p.int(1_000_000_000), p.bits, RM));
    }

    #[test]
    fn log_gamma_matches_factorial() {
        let mut p = Precise::new(25).unwrap();
        // Γ(5) = 24
        let lg = p.ln_gamma(5, 1);
        let expected = p.ln_int(24);
        assert_eq!(p.render(&lg), p.render(&expected));
    }

    #[test]
    fn rejects_absurd_precision() {
        assert!(matches!(Precise::new(0), Err(Error::Precision(_))));
        assert!(matches!(Precise::new(MAX_DIGITS + 1), Err(Error::Precision(_))));
    }
}
