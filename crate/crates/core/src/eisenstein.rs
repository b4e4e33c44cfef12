//! Holomorphic-part coefficients `a⁺(m, μ)` of the central derivative of the incoherent
//! Eisenstein series attached to a negative definite binary lattice.

use num_traits::{Signed, Zero};

use crate::arith::{format_rational, frac, int, ord_p, prime_divisors, rat, Rational};
use crate::error::{Error, Result};
use crate::imq::{diff_set, ImQField, Splitting};
use crate::lattice::{even_clifford_binary, Coset, DiscriminantGroup, QuadLattice};
use crate::loglinear::{LogLinear, Symbol};
use crate::qseries::{QExpansion, TailModel};
use crate::weil::Variant;

/// `L₀` together with the field `k = C⁺(L₀) ⊗ ℚ` and its discriminant group.
#[derive(Clone, Debug)]
pub struct EisensteinPackage {
    l0: QuadLattice,
    field: ImQField,
    disc0: DiscriminantGroup,
}

/// The pieces entering `a⁺(m, μ)` for `m > 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalData {
    pub diff: Vec<u64>,
    pub congruent: bool,
}

impl EisensteinPackage {
    pub fn new(l0: QuadLattice) -> Result<Self> {
        let cl = even_clifford_binary(&l0)?;
        if !cl.odd || !cl.fundamental {
            return Err(Error::Precondition(format!(
                "even Clifford algebra has discriminant {}, need an odd fundamental discriminant",
                cl.d
            )));
        }
        let field = ImQField::from_discriminant(cl.d)?;
        let disc0 = l0.discriminant_group();
        Ok(EisensteinPackage { l0, field, disc0 })
    }

    pub fn lattice(&self) -> &QuadLattice {
        &self.l0
    }

    pub fn field(&self) -> &ImQField {
        &self.field
    }

    pub fn disc_group(&self) -> &DiscriminantGroup {
        &self.disc0
    }

    /// Number of primes `ℓ | disc(L₀)` at which the `ℓ`-primary part of `μ` vanishes.
    pub fn s_mu(&self, mu: &Coset) -> u32 {
        prime_divisors(self.l0.disc())
            .into_iter()
            .filter(|&l| self.disc0.primary_part_vanishes(mu, l))
            .count() as u32
    }

    /// `γ + log 4π − log|d| − 2·L′(χ,0)/L(χ,0)`.
    pub fn constant_term(&self) -> LogLinear {
        let d = self.field.disc();
        LogLinear::symbol(Symbol::EulerGamma)
            + LogLinear::log_rational(int(4))
            + LogLinear::symbol(Symbol::LogPi)
            - LogLinear::log_rational(int(d.abs()))
            - LogLinear::symbol(Symbol::LogDerivL(d)) * int(2)
    }

    pub fn local_data(&self, m: Rational, mu: &Coset) -> Result<LocalData> {
        Ok(LocalData { diff: diff_set(&self.l0, m)?, congruent: frac(m) == self.disc0.q(mu) })
    }

    /// `ε` for a non-split prime: 1 when inert, 0 when ramified.
    pub fn epsilon(&self, p: u64) -> u32 {
        match self.field.splitting(p) {
            Splitting::Inert => 1,
            _ => 0,
        }
    }

    pub fn a_plus(&self, m: Rational, mu: &Coset) -> Result<LogLinear> {
        if m.is_negative() {
            return Ok(LogLinear::zero());
        }
        if m.is_zero() {
            return Ok(if *mu == self.disc0.zero() { self.constant_term() } else { LogLinear::zero() });
        }
        let local = self.local_data(m, mu)?;
        if !local.congruent || local.diff.len() != 1 {
            return Ok(LogLinear::zero());
        }
        let p = local.diff[0];
        let k = &self.field;
        let arg = m * int(k.abs_disc() as i64) / int((p as i64).pow(self.epsilon(p)));
        let rho = k.rho(arg) as i64;
        let ord = ord_p(m * int(p as i64), p);
        let coeff = -rat(k.units() as i64, 2 * k.class_number() as i64)
            * int(rho)
            * int(ord)
            * int(1i64 << self.s_mu(mu));
        Ok(LogLinear::log_prime(p) * coeff)
    }
}

/// `𝓔_{L₀}` up to `q^cutoff`, indexed by the cosets of `L₀`; all-zero exponents are omitted.
pub fn eisenstein_qexp(pkg: &EisensteinPackage, cutoff: Rational) -> Result<QExpansion<LogLinear>> {
    if cutoff.is_negative() {
        return Err(Error::Precondition(format!("cutoff {} is negative", format_rational(&cutoff))));
    }
    let g = pkg.disc_group();
    let mut out = QExpansion::new(int(1), Variant::Contragredient, g.clone(), cutoff, TailModel::Unknown);
    let step = pkg.field().abs_disc() as i64;
    let cosets = g.elements();
    let last = (cutoff * int(step)).floor().to_integer();
    for k in 0..=last {
        let m = rat(k, step);
        let row: Vec<LogLinear> = cosets.iter().map(|mu| pkg.a_plus(m, mu)).collect::<Result<_>>()?;
        if row.iter().any(|x| !x.is_zero()) {
            out.set(m, row);
        }
    }
    Ok(out)
}

/// The lattice `[[-2,-1],[-1,(d-1)/2]]`, i.e. minus the norm form on `ℤ[(1+√d)/2]`.
pub fn principal_binary_lattice(d: i64) -> Result<QuadLattice> {
    if d >= 0 || d.rem_euclid(4) != 1 {
        return Err(Error::Input(format!("{d} is not a negative discriminant congruent to 1 mod 4")));
    }
    QuadLattice::new(vec![vec![-2, -1], vec![-1, (d - 1) / 2]])
}
