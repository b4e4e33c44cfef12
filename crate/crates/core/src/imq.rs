//! Imaginary quadratic fields of odd discriminant: class numbers, ideal counts, local symbols,
//! and values of `L(χ_d, s)`.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::arith::{divisors, int, kronecker, prime_divisors, rat, Rational};
use crate::error::{Error, Result};
use crate::intmat::Q128;
use crate::lattice::{visit_ball, QuadLattice};
use crate::loglinear::{LogLinear, Symbol};
use crate::precise::Precise;
use crate::qseries::VVFormQ;

/// Largest argument accepted by [`ImQField::rho_bruteforce`].
pub const RHO_ORACLE_BOUND: u64 = 10_000;

/// `ℚ(√d)` for a negative odd fundamental discriminant `d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ImQField {
    d: i64,
    h: u64,
    w: u64,
    /// Reduced forms `(a, b, c)` with `b² − 4ac = d`.
    forms: Vec<(i64, i64, i64)>,
}

impl ImQField {
    pub fn from_discriminant(d: i64) -> Result<Self> {
        if d >= 0 || d.rem_euclid(4) != 1 || !crate::arith::is_squarefree(d.unsigned_abs()) {
            return Err(Error::Input(format!("{d} is not a negative odd fundamental discriminant")));
        }
        let forms = reduced_forms(d);
        let w = if d == -3 { 6 } else { 2 };
        Ok(ImQField { d, h: forms.len() as u64, w, forms })
    }

    pub fn disc(&self) -> i64 {
        self.d
    }

    pub fn abs_disc(&self) -> u64 {
        self.d.unsigned_abs()
    }

    pub fn class_number(&self) -> u64 {
        self.h
    }

    pub fn units(&self) -> u64 {
        self.w
    }

    pub fn reduced_forms(&self) -> &[(i64, i64, i64)] {
        &self.forms
    }

    /// `h/w` as an exact rational.
    pub fn h_over_w(&self) -> Rational {
        rat(self.h as i64, self.w as i64)
    }

    pub fn chi(&self, n: i64) -> i8 {
        kronecker(self.d, n)
    }

    pub fn splitting(&self, p: u64) -> Splitting {
        match self.chi(p as i64) {
            1 => Splitting::Split,
            -1 => Splitting::Inert,
            _ => Splitting::Ramified,
        }
    }

    /// Number of ideals of norm `m`; zero unless `m` is a positive integer.
    pub fn rho(&self, m: Rational) -> u64 {
        if !m.is_integer() || !m.is_positive() {
            return 0;
        }
        let m = *m.numer() as u64;
        let s: i64 = divisors(m).into_iter().map(|e| self.chi(e as i64) as i64).sum();
        s as u64
    }

    /// `ρ(m)` recounted as `(1/w)·Σ_f #{f(x,y) = m}` over the reduced forms.
    pub fn rho_bruteforce(&self, m: u64) -> Result<u64> {
        if m > RHO_ORACLE_BOUND {
            return Err(Error::BoundExceeded(format!("rho oracle limited to m <= {RHO_ORACLE_BOUND}")));
        }
        Ok(self.rho_bruteforce_table(m)?[m as usize])
    }

    /// `ρ(0..=bound)` by form representation counts; entry 0 is left at 0.
    pub fn rho_bruteforce_table(&self, bound: u64) -> Result<Vec<u64>> {
        if bound > RHO_ORACLE_BOUND {
            return Err(Error::BoundExceeded(format!("rho oracle limited to m <= {RHO_ORACLE_BOUND}")));
        }
        let mut reps = vec![0u64; bound as usize + 1];
        for &(a, b, c) in &self.forms {
            let gram = vec![vec![2 * a, b], vec![b, 2 * c]];
            let zero = [Rational::zero(), Rational::zero()];
            visit_ball(&gram, &zero, int(bound as i64), &mut |_, q| {
                let q = *q.numer() as usize;
                if q > 0 {
                    reps[q] += 1;
                }
            })?;
        }
        Ok(reps.into_iter().map(|r| r / self.w).collect())
    }

    /// `L(χ,0) = −(1/|d|)·Σ_{a=1}^{|d|} χ(a)·a`.
    pub fn l_at_zero(&self) -> Rational {
        let n = self.d.abs();
        let s: i64 = (1..=n).map(|a| self.chi(a) as i64 * a).sum();
        rat(-s, n)
    }

    /// `L(χ,s)` by Hurwitz zeta values; `s = 1` is handled through the limit-free sum since
    /// `Σχ(a) = 0` cancels the pole.
    pub fn l_chi(&self, s: Complex64) -> Complex64 {
        let q = self.d.abs();
        let qf = q as f64;
        let mut total = Complex64::zero();
        for a in 1..q {
            let c = self.chi(a);
            if c != 0 {
                total += hurwitz_zeta(s, a as f64 / qf) * c as f64;
            }
        }
        total * Complex64::new(qf, 0.0).powc(-s)
    }

    /// `Λ(s) = (|d|/π)^{(s+1)/2}·Γ((s+1)/2)·L(χ,s)`.
    pub fn completed_l(&self, s: Complex64) -> Complex64 {
        let half = (s + 1.0) / 2.0;
        let base = Complex64::new(self.abs_disc() as f64 / PI, 0.0);
        (half * base.ln() + ln_gamma_complex(half)).exp() * self.l_chi(s)
    }

    /// `L(χ,0)` and `L′(χ,0)/L(χ,0)` at the requested number of digits, cached per `(d, digits)`.
    pub fn l_derivative_data(&self, digits: usize) -> Result<Arc<LDerivativeData>> {
        static CACHE: OnceLock<Mutex<HashMap<(i64, usize), Arc<LDerivativeData>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(hit) = cache.lock().expect("cache poisoned").get(&(self.d, digits)) {
            return Ok(hit.clone());
        }
        let primary = self.log_derivative_digits(digits, 0)?;
        let check = self.log_derivative_digits(digits, 8)?;
        if !agree_to_digits(&primary.0, &check.0) || !agree_to_digits(&primary.1, &check.1) {
            return Err(Error::Precision(format!("L'(chi,0) for d = {} unstable at {digits} digits", self.d)));
        }
        let data = Arc::new(LDerivativeData {
            d: self.d,
            digits,
            l_value: self.l_at_zero(),
            l_prime: primary.0,
            log_derivative: primary.1,
        });
        cache.lock().expect("cache poisoned").insert((self.d, digits), data.clone());
        Ok(data)
    }

    fn log_derivative_digits(&self, digits: usize, guard: usize) -> Result<(String, String)> {
        let mut p = Precise::new(digits + guard)?;
        let q = self.d.abs();
        let l0 = self.l_at_zero();
        // L′(χ,0) = Σ χ(a)·log Γ(a/q) − log q·L(χ,0)
        let mut acc = p.int(0);
        for a in 1..q {
            let c = self.chi(a);
            if c == 0 {
                continue;
            }
            let lg = p.ln_gamma(a, q);
            acc = if c > 0 { p.add(&acc, &lg) } else { p.sub(&acc, &lg) };
        }
        let l0f = p.small_rational(*l0.numer(), *l0.denom());
        let lq = p.ln_int(q as u64);
        let lprime = p.sub(&acc, &p.mul(&lq, &l0f));
        let ratio = p.div(&lprime, &l0f);
        let mut out = Precise::new(digits)?;
        Ok((out.render(&lprime), out.render(&ratio)))
    }
}

fn agree_to_digits(a: &str, b: &str) -> bool {
    // adjacent roundings of the same value differ by one unit in the last place
    fn parts(s: &str) -> Option<(num_bigint::BigInt, String)> {
        let (mant, exp) = s.split_once('e')?;
        let digits: String = mant.chars().filter(|c| c.is_ascii_digit() || *c == '-').collect();
        Some((digits.parse().ok()?, exp.to_string()))
    }
    match (parts(a), parts(b)) {
        (Some((x, ea)), Some((y, eb))) => ea == eb && (x - y).abs() <= num_bigint::BigInt::one(),
        _ => a == b,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Splitting {
    Split,
    Inert,
    Ramified,
}

/// High-precision data at `s = 0`, values rendered as decimal strings `d.ddd…e±N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LDerivativeData {
    pub d: i64,
    pub digits: usize,
    #[serde(with = "crate::arith::serde_rational")]
    pub l_value: Rational,
    pub l_prime: String,
    pub log_derivative: String,
}

impl LDerivativeData {
    pub fn log_derivative_f64(&self) -> f64 {
        self.log_derivative.parse().unwrap_or(f64::NAN)
    }
}

fn reduced_forms(d: i64) -> Vec<(i64, i64, i64)> {
    let mut out = Vec::new();
    let mut a = 1;
    // reduced forms have a ≤ √(|d|/3)
    while 3 * a * a <= -d {
        for b in -a + 1..=a {
            let num = b * b - d;
            if num % (4 * a) != 0 {
                continue;
            }
            let c = num / (4 * a);
            if c < a || (c == a && b < 0) {
                continue;
            }
            out.push((a, b, c));
        }
        a += 1;
    }
    out
}

/// A place of ℚ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Place {
    Finite(u64),
    Infinity,
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Finite(p) => write!(f, "{p}"),
            Place::Infinity => f.write_str("inf"),
        }
    }
}

/// Integer in the square class of a nonzero rational.
fn square_class(r: Rational) -> i128 {
    *r.numer() as i128 * *r.denom() as i128
}

fn split_p(n: i128, p: i128) -> (u32, i128) {
    let mut n = n;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    (v, n)
}

fn legendre_i128(a: i128, p: i128) -> i8 {
    let a = a.rem_euclid(p);
    crate::arith::legendre(a as i64, p as u64)
}

/// The Hilbert symbol `(a, b)_v`.
pub fn hilbert_symbol(a: Rational, b: Rational, place: Place) -> i8 {
    assert!(!a.is_zero() && !b.is_zero(), "Hilbert symbol of zero");
    let p = match place {
        Place::Infinity => return if a.is_negative() && b.is_negative() { -1 } else { 1 },
        Place::Finite(p) => p as i128,
    };
    let (alpha, u) = split_p(square_class(a), p);
    let (beta, v) = split_p(square_class(b), p);
    if p == 2 {
        let eps = |x: i128| (x.rem_euclid(4) == 3) as u32;
        let omega = |x: i128| matches!(x.rem_euclid(8), 3 | 5) as u32;
        let e = eps(u) * eps(v) + alpha * omega(v) + beta * omega(u);
        return if e % 2 == 0 { 1 } else { -1 };
    }
    let mut s: i8 = if (alpha * beta) % 2 == 1 && p % 4 == 3 { -1 } else { 1 };
    if beta % 2 == 1 {
        s *= legendre_i128(u, p);
    }
    if alpha % 2 == 1 {
        s *= legendre_i128(v, p);
    }
    s
}

/// Diagonal entries `a₁, …, aₙ` with `Q ≅ Σ aᵢxᵢ²` over ℚ, for `Q(x) = ½xᵀGx`.
pub fn diagonalize(gram: &[Vec<i64>]) -> Vec<Rational> {
    let n = gram.len();
    let mut a: Vec<Vec<Q128>> = gram
        .iter()
        .map(|r| r.iter().map(|&x| Q128::new(x as i128, 2)).collect())
        .collect();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if a[i][i].is_zero() {
            let j = (i + 1..n).find(|&j| !a[i][j].is_zero()).expect("degenerate form");
            // replace e_i by e_i + e_j, which has Q = a_jj + 2a_ij
            let t = if (a[j][j] + a[i][j] * 2).is_zero() { -Q128::one() } else { Q128::one() };
            for k in 0..n {
                let v = a[j][k] * t;
                a[i][k] += v;
            }
            for k in 0..n {
                let v = a[k][j] * t;
                a[k][i] += v;
            }
        }
        let piv = a[i][i];
        for j in i + 1..n {
            let f = a[j][i] / piv;
            for k in 0..n {
                let v = a[i][k] * f;
                a[j][k] -= v;
            }
            for k in 0..n {
                let v = a[k][i] * f;
                a[k][j] -= v;
            }
        }
        out.push(Rational::new(*piv.numer() as i64, *piv.denom() as i64));
    }
    out
}

/// Whether `Σ aᵢxᵢ²` (rank 3) is isotropic over `ℚ_p`.
pub fn ternary_isotropic(diag: &[Rational; 3], p: u64) -> bool {
    let place = Place::Finite(p);
    let mut hasse = 1;
    for i in 0..3 {
        for j in i + 1..3 {
            hasse *= hilbert_symbol(diag[i], diag[j], place);
        }
    }
    let det = diag[0] * diag[1] * diag[2];
    hasse == hilbert_symbol(int(-1), -det, place)
}

/// Finite primes at which the negative definite binary lattice `L0` fails to represent `m`.
pub fn diff_set(l0: &QuadLattice, m: Rational) -> Result<Vec<u64>> {
    if !m.is_positive() {
        return Err(Error::Precondition("Diff(m) needs m > 0".into()));
    }
    if l0.rank() != 2 || !l0.is_negative_definite() {
        return Err(Error::Precondition("Diff(m) needs a negative definite binary lattice".into()));
    }
    let d = diagonalize(l0.gram());
    let diag = [d[0], d[1], -m];
    let mut candidates: Vec<u64> = vec![2];
    for n in [l0.disc(), m.numer().unsigned_abs(), m.denom().unsigned_abs()] {
        if n > 1 {
            candidates.extend(prime_divisors(n));
        }
    }
    for x in &d {
        for n in [x.numer().unsigned_abs(), x.denom().unsigned_abs()] {
            if n > 1 {
                candidates.extend(prime_divisors(n));
            }
        }
    }
    candidates.sort_unstable();
    candidates.dedup();
    Ok(candidates.into_iter().filter(|&p| !ternary_isotropic(&diag, p)).collect())
}

const BERNOULLI_EVEN: [f64; 12] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
];

/// Hurwitz `ζ(s, x)` for `0 < x ≤ 1` and `s ≠ 1` by Euler–Maclaurin summation.
pub fn hurwitz_zeta(s: Complex64, x: f64) -> Complex64 {
    let n = 30 + (s.im.abs() as usize);
    let mut sum = Complex64::zero();
    for k in 0..n {
        sum += Complex64::new(k as f64 + x, 0.0).powc(-s);
    }
    let big = Complex64::new(n as f64 + x, 0.0);
    sum += big.powc(1.0 - s) / (s - 1.0);
    sum += big.powc(-s) * 0.5;
    // Σ B_{2k}/(2k)! · s(s+1)…(s+2k−2) · N^{−s−2k+1}
    let mut rising = s;
    let mut fact = 2.0;
    let mut pow = big.powc(-s - 1.0);
    let inv_sq = 1.0 / (big * big);
    for (k, b) in BERNOULLI_EVEN.iter().enumerate() {
        sum += rising * pow * (*b / fact);
        let k2 = 2.0 * (k as f64 + 1.0);
        rising = rising * (s + k2 - 1.0) * (s + k2);
        fact *= (k2 + 1.0) * (k2 + 2.0);
        pow *= inv_sq;
    }
    sum
}

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Principal branch of `log Γ(z)` for `Re z > 0` (Lanczos, g = 7).
pub fn ln_gamma_complex(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // reflection keeps the approximation in its accurate range
        let pi = Complex64::new(PI, 0.0);
        return pi.ln() - (pi * z).sin().ln() - ln_gamma_complex(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        x += *c / (z + i as f64);
    }
    let t = z + 7.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// `L(F, Θ_Λ, s)` truncated at `cutoff`, with a certified bound on the omitted tail.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankinSelbergValue {
    pub re: f64,
    pub im: f64,
    pub tail_bound: f64,
}

/// Polynomial growth `|b_F(m)_μ| ≤ constant·m^exponent` supplied with the coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthBound {
    pub constant: f64,
    pub exponent: f64,
}

/// `Γ((s+n)/2)·Σ_{0<m≤M} {b̄_F(m), R_Λ(m)}/(4πm)^{(s+n)/2}` plus tail estimate.
///
/// `coeffs` is indexed by the cosets of `Λ`, in the same order as `theta`.
pub fn rankin_selberg_l(
    coeffs: &BTreeMap<Rational, Vec<Complex64>>,
    growth: GrowthBound,
    theta: &VVFormQ,
    s: Complex64,
    cutoff: Rational,
) -> Result<RankinSelbergValue> {
    let lambda = theta.group().lattice();
    let n = lambda.rank() as f64;
    let sp = (s + n) / 2.0;
    let beta = sp.re - growth.exponent - n / 2.0;
    if beta <= 1.0 {
        return Err(Error::OutsideCertifiedRegion(format!(
            "Re(s) = {} too small for coefficient growth m^{}",
            s.re, growth.exponent
        )));
    }
    if cutoff > theta.cutoff() {
        return Err(Error::MissingCoefficient(crate::arith::format_rational(&cutoff)));
    }
    let gamma = ln_gamma_complex(sp).exp();
    let mut total = Complex64::zero();
    for (m, b) in coeffs.range(..=cutoff) {
        if !m.is_positive() {
            continue;
        }
        let Some(r) = theta.at(*m)? else { continue };
        let pairing: Complex64 = b.iter().zip(r).map(|(x, y)| x.conj() * crate::arith::rational_to_f64(y)).sum();
        let mf = crate::arith::rational_to_f64(m);
        total += pairing * Complex64::new(4.0 * PI * mf, 0.0).powc(-sp);
    }
    total *= gamma;
    let tail = rankin_selberg_tail(lambda, growth, sp.re, crate::arith::rational_to_f64(&cutoff)) * gamma.norm();
    Ok(RankinSelbergValue { re: total.re, im: total.im, tail_bound: tail })
}

fn rankin_selberg_tail(lambda: &QuadLattice, growth: GrowthBound, sigma: f64, cutoff: f64) -> f64 {
    let n = lambda.rank() as i32;
    let lam = 0.999 * crate::qseries::smallest_eigenvalue(lambda.gram());
    let count = |t: f64| (2.0 * (2.0 * t / lam).sqrt() + 1.0).powi(n);
    let f = |t: f64| growth.constant * t.powf(growth.exponent) * (4.0 * PI * t).powf(-sigma);
    let start = cutoff.max(1.0);
    let mut tail = 0.0;
    let steps = 4000;
    for j in 0..steps {
        let a = start + j as f64;
        tail += count(a + 1.0) * f(a);
    }
    // beyond the explicit range: N(t) ≤ (3√(2t/λ))ⁿ and t+1 ≤ 2t
    let beta = sigma - growth.exponent - n as f64 / 2.0;
    let k = (3.0 * (2.0 / lam).sqrt()).powi(n) * 2f64.powf(n as f64 / 2.0);
    let a = start + steps as f64 - 1.0;
    tail += growth.constant * (4.0 * PI).powf(-sigma) * k * a.powf(1.0 - beta) / (beta - 1.0);
    // the coefficient at the cutoff itself is included in the sum; the explicit range starts
    // at max(cutoff, 1) and so over-counts, which keeps the bound valid
    tail
}

/// Numeric value of a degree, with every symbol other than the central derivative resolved.
pub fn evaluate_loglinear(x: &LogLinear, digits: usize) -> Result<Option<String>> {
    if x.symbol_coefficient(Symbol::CentralDerivative) != Rational::zero() {
        return Ok(None);
    }
    let mut p = Precise::new(digits)?;
    let to_big = |p: &mut Precise, r: &Rational| p.small_rational(*r.numer(), *r.denom());
    let mut acc = to_big(&mut p, &x.rational_part());
    for (q, c) in x.log_terms() {
        let l = p.ln_int(*q);
        let c = to_big(&mut p, c);
        acc = p.add(&acc, &p.mul(&c, &l));
    }
    for (s, c) in x.symbol_terms() {
        let v = match s {
            Symbol::EulerGamma => p.euler_gamma(),
            Symbol::LogPi => {
                let pi = p.pi();
                p.ln(&pi)
            }
            Symbol::LogDerivL(d) => {
                let data = ImQField::from_discriminant(*d)?.l_derivative_data(digits + 10)?;
                p.parse_decimal(&data.log_derivative)
            }
            Symbol::CentralDerivative => unreachable!(),
        };
        let c = to_big(&mut p, c);
        acc = p.add(&acc, &p.mul(&c, &v));
    }
    Ok(Some(p.render(&acc)))
}

/// `ρ(m)` from the splitting type of each prime factor.
pub fn rho_multiplicative_formula(field: &ImQField, m: u64) -> u64 {
    let mut out = 1u64;
    for (p, e) in crate::arith::factorize(m) {
        out *= match field.splitting(p) {
            Splitting::Split => e as u64 + 1,
            Splitting::Inert => (e % 2 == 0) as u64,
            Splitting::Ramified => 1,
        };
    }
    out
}
