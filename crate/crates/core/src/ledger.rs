//! The arithmetic-degree ledger for `L₀ ⊕ Λ ⊂ L`: pullbacks of special divisors to the CM
//! cycle, the cotautological degree, and the exact finite-part identities behind the
//! CM-value formula.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::arith::{format_rational, int, Rational};
use crate::cm::degree_formula;
use crate::eisenstein::{eisenstein_qexp, EisensteinPackage};
use crate::error::{Error, Result};
use crate::lattice::{enumerate_coset_vectors, orthogonal_complement, Coset, QuadLattice, SublatticeEmbedding};
use crate::loglinear::{LogLinear, Symbol};
use crate::qseries::{constant_term_pairing, theta_series, PrincipalPart, QExpansion, VVFormQ};

/// `L₀ ⊕ Λ ⊂ L` with the Eisenstein table of `L₀` and the theta table of `Λ` up to `cutoff`.
#[derive(Clone, Debug)]
pub struct EmbeddingContext {
    emb: SublatticeEmbedding,
    pkg: EisensteinPackage,
    eis: QExpansion<LogLinear>,
    theta: VVFormQ,
    cutoff: Rational,
}

impl EmbeddingContext {
    /// `sub_basis` lists the columns spanning `L₀` in ambient coordinates.
    pub fn new(ambient: QuadLattice, sub_basis: &[Vec<i64>], cutoff: Rational) -> Result<Self> {
        if !ambient.is_maximal() {
            return Err(Error::Precondition("ambient lattice is not maximal".into()));
        }
        let emb = orthogonal_complement(&ambient, sub_basis)?;
        let l0 = emb.sub();
        if l0.rank() != 2 || !l0.is_negative_definite() {
            return Err(Error::Precondition("L0 must be negative definite of rank 2".into()));
        }
        if !emb.complement().is_positive_definite() {
            return Err(Error::Precondition("complement of L0 is not positive definite".into()));
        }
        let pkg = EisensteinPackage::new(l0.clone())?;
        let eis = eisenstein_qexp(&pkg, cutoff)?;
        let theta = theta_series(emb.complement(), cutoff)?;
        Ok(EmbeddingContext { emb, pkg, eis, theta, cutoff })
    }

    pub fn embedding(&self) -> &SublatticeEmbedding {
        &self.emb
    }

    pub fn package(&self) -> &EisensteinPackage {
        &self.pkg
    }

    pub fn eisenstein_table(&self) -> &QExpansion<LogLinear> {
        &self.eis
    }

    pub fn theta_table(&self) -> &VVFormQ {
        &self.theta
    }

    pub fn cutoff(&self) -> Rational {
        self.cutoff
    }

    /// `a⁺(m, μ₁)` read from the stored table.
    pub fn a_plus(&self, m: Rational, mu1: &Coset) -> Result<LogLinear> {
        let i = self.eis.group().index_of(mu1);
        Ok(self.eis.at(m)?.map(|row| row[i].clone()).unwrap_or_else(LogLinear::zero))
    }

    /// `R_Λ(m, μ₂)` read from the stored table.
    pub fn rep(&self, m: Rational, mu2: &Coset) -> Result<u64> {
        let i = self.theta.group().index_of(mu2);
        Ok(self.theta.at(m)?.map(|row| row[i].to_integer() as u64).unwrap_or(0))
    }

    /// Negates `a⁺(m, μ₁)` in the stored table, returning the old value.
    pub fn corrupt_eisenstein(&mut self, m: Rational, mu1: &Coset) -> Result<LogLinear> {
        let i = self.eis.group().index_of(mu1);
        let mut row = self.eis.at(m)?.cloned().ok_or_else(|| Error::MissingCoefficient(format_rational(&m)))?;
        let old = row[i].clone();
        row[i] = -old.clone();
        self.eis.set(m, row);
        Ok(old)
    }

    fn ambient_coset(&self, mu: usize) -> Coset {
        self.emb.ambient().discriminant_group().element(mu)
    }
}

/// `{λ ∈ Λ^∨ : Q(λ) = m, λ ∈ μ + L}` in `Λ`-coordinates, sorted.
pub fn lambda_mmu(ctx: &EmbeddingContext, m: Rational, mu: &Coset) -> Result<Vec<Vec<Rational>>> {
    if !m.is_positive() {
        return Err(Error::Precondition(format!("m = {} must be positive", format_rational(&m))));
    }
    let zero0 = ctx.pkg.disc_group().zero();
    let mut out = Vec::new();
    for (mu1, mu2) in ctx.emb.glue_cosets(mu) {
        if mu1 == zero0 {
            out.extend(enumerate_coset_vectors(ctx.emb.complement(), &mu2, m)?);
        }
    }
    out.sort();
    Ok(out)
}

/// One term `𝒵₀(m₁, μ₁) × Λ_{m₂, μ₂}` of the pullback of `𝒵(m, μ)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PullbackRow {
    pub m1: Rational,
    pub mu1: Coset,
    pub m2: Rational,
    pub mu2: Coset,
    pub rep: u64,
}

/// All splittings `m = m₁ + m₂` over the glue pairs of `μ` with `R_Λ(m₂, μ₂) ≠ 0`.
pub fn pullback_table(ctx: &EmbeddingContext, m: Rational, mu: &Coset) -> Result<Vec<PullbackRow>> {
    if !m.is_positive() {
        return Err(Error::Precondition(format!("m = {} must be positive", format_rational(&m))));
    }
    if m > ctx.cutoff {
        return Err(Error::MissingCoefficient(format_rational(&m)));
    }
    let zero0 = ctx.pkg.disc_group().zero();
    let mut rows = Vec::new();
    for (mu1, mu2) in ctx.emb.glue_cosets(mu) {
        for (m2, _) in ctx.theta.coefficients().range(..=m) {
            let rep = ctx.rep(*m2, &mu2)?;
            let m1 = m - *m2;
            if rep == 0 || (m1.is_zero() && mu1 != zero0) {
                continue;
            }
            rows.push(PullbackRow { m1, mu1: mu1.clone(), m2: *m2, mu2: mu2.clone(), rep });
        }
    }
    rows.sort_by(|a, b| b.m1.cmp(&a.m1).then_with(|| (&a.mu1, &a.mu2).cmp(&(&b.mu1, &b.mu2))));
    Ok(rows)
}

/// `(h/w)·(2L′/L(χ,0) + log|d| − log 4π − γ)`.
pub fn cotaut_degree(ctx: &EmbeddingContext) -> LogLinear {
    let k = ctx.pkg.field();
    let d = k.disc();
    let inner = LogLinear::symbol(Symbol::LogDerivL(d)) * int(2) + LogLinear::log_rational(int(d.abs()))
        - LogLinear::log_rational(int(4))
        - LogLinear::symbol(Symbol::LogPi)
        - LogLinear::symbol(Symbol::EulerGamma);
    inner * k.h_over_w()
}

/// `Σ_{rows, m₁ > 0} R_Λ(m₂, μ₂) · deg 𝒵₀(m₁, μ₁)`.
pub fn finite_heart_degree(ctx: &EmbeddingContext, m: Rational, mu: &Coset) -> Result<LogLinear> {
    let mut total = LogLinear::zero();
    for row in pullback_table(ctx, m, mu)? {
        if row.m1.is_positive() {
            total += degree_formula(&ctx.pkg, row.m1, &row.mu1)?.degree * int(row.rep as i64);
        }
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Identity {
    /// `deg 𝒵₀(m₁, μ₁) = −(h/w)·a⁺(m₁, μ₁)`.
    A,
    /// Finite part of the pullback of one principal-part term.
    B,
    /// Constant term of `{f⁺, 𝓔 ⊗ Θ}` against the row decomposition.
    C,
    /// Cotautological slots.
    D,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerRow {
    pub identity: Identity,
    pub label: String,
    pub left: LogLinear,
    pub right: LogLinear,
    #[serde(rename = "match")]
    pub matches: bool,
}

impl LedgerRow {
    fn new(identity: Identity, label: String, left: LogLinear, right: LogLinear) -> Self {
        let matches = left == right;
        LedgerRow { identity, label, left, right, matches }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerTotals {
    pub t_hat_degree: LogLinear,
    pub ct: LogLinear,
    /// `[Ẑ(f):𝒴] + c⁺(0,0)·[T̂:𝒴]`, with the archimedean part in terms of `L′`.
    pub lhs: LogLinear,
    /// `−(h/w)·L′(ξ(f), Θ_Λ, 0)`.
    pub rhs: LogLinear,
    pub residual: LogLinear,
    #[serde(with = "crate::arith::serde_rational")]
    pub lprime_coefficient: Rational,
    pub lprime_status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerReport {
    pub rows: Vec<LedgerRow>,
    pub totals: LedgerTotals,
}

impl LedgerReport {
    pub fn all_match(&self) -> bool {
        self.rows.iter().all(|r| r.matches) && self.totals.residual.is_zero()
    }

    pub fn mismatches(&self) -> impl Iterator<Item = &LedgerRow> {
        self.rows.iter().filter(|r| !r.matches)
    }
}

fn label(m: Rational, mu: &Coset) -> String {
    format!("m={}, mu={mu}", format_rational(&m))
}

/// Checks identities (A)–(D) and assembles the conclusion with `L′` as the only unknown.
pub fn verify_ledger(ctx: &EmbeddingContext, pp: &PrincipalPart) -> Result<LedgerReport> {
    let ambient = ctx.emb.ambient().discriminant_group();
    if pp.group() != &ambient {
        return Err(Error::GroupMismatch);
    }
    pp.check_integral()?;
    let hw = ctx.pkg.field().h_over_w();
    let t_hat = cotaut_degree(ctx);
    let mut rows = Vec::new();

    let terms: Vec<(Rational, Coset, Rational)> =
        pp.terms().iter().map(|(&(m, i), &c)| (m, ctx.ambient_coset(i), c)).collect();
    let tables: Vec<Vec<PullbackRow>> =
        terms.iter().map(|(m, mu, _)| pullback_table(ctx, *m, mu)).collect::<Result<_>>()?;

    // (A) at every reachable (m₁, μ₁) with m₁ > 0
    let reachable: BTreeSet<(Rational, Coset)> =
        tables.iter().flatten().filter(|r| r.m1.is_positive()).map(|r| (r.m1, r.mu1.clone())).collect();
    for (m1, mu1) in &reachable {
        let deg = degree_formula(&ctx.pkg, *m1, mu1)?.degree;
        rows.push(LedgerRow::new(Identity::A, label(*m1, mu1), deg, ctx.a_plus(*m1, mu1)? * (-hw)));
    }

    let mut expected_ct = LogLinear::zero();
    let zero0 = ctx.pkg.disc_group().zero();
    let zero1 = ctx.theta.group().zero();
    let constant_slot = ctx.a_plus(int(0), &zero0)? * (pp.constant() * int(ctx.rep(int(0), &zero1)? as i64));
    expected_ct += constant_slot.clone();

    let mut heart_total = LogLinear::zero();
    let mut improper_total = LogLinear::zero();
    for ((m, mu, c), table) in terms.iter().zip(&tables) {
        // (B)
        let heart = finite_heart_degree(ctx, *m, mu)?;
        let mut eis_side = LogLinear::zero();
        let mut full = LogLinear::zero();
        let mut improper = LogLinear::zero();
        for row in table {
            let term = ctx.a_plus(row.m1, &row.mu1)? * int(row.rep as i64);
            if row.m1.is_positive() {
                eis_side += term.clone();
            } else {
                improper += term.clone();
            }
            full += term;
        }
        rows.push(LedgerRow::new(Identity::B, label(*m, mu), heart.clone(), eis_side * (-hw)));
        expected_ct += full * *c;

        // (D), improper slot
        let count = lambda_mmu(ctx, *m, mu)?.len() as i64;
        let improper_deg = t_hat.clone() * int(count);
        rows.push(LedgerRow::new(
            Identity::D,
            format!("{}, #Lambda={count}", label(*m, mu)),
            improper_deg.clone(),
            improper * (-hw),
        ));
        heart_total += heart * *c;
        improper_total += improper_deg * *c;
    }

    // (C)
    let ct = constant_term_pairing(pp, &ctx.eis, &ctx.theta, &ctx.emb)?;
    rows.push(LedgerRow::new(Identity::C, "constant term".into(), ct.clone(), expected_ct));

    // (D), constant slot
    let constant_deg = t_hat.clone() * pp.constant();
    rows.push(LedgerRow::new(Identity::D, "c(0,0)".into(), constant_deg.clone(), constant_slot * (-hw)));

    // the archimedean part enters through the CM value formula: (h/w)·(−L′ + CT)
    let lprime = LogLinear::symbol(Symbol::CentralDerivative);
    let green = (ct.clone() - lprime.clone()) * hw;
    let lhs = heart_total + improper_total + green + constant_deg;
    let rhs = lprime * (-hw);
    let residual = lhs.clone() - rhs.clone();
    Ok(LedgerReport {
        rows,
        totals: LedgerTotals {
            t_hat_degree: t_hat,
            ct,
            lhs,
            rhs,
            residual,
            lprime_coefficient: -hw,
            lprime_status: "assumed: CM value formula for the Green function".into(),
        },
    })
}

/// Negates the first reachable `a⁺(m₁, μ₁)` with `m₁ > 0` and nonzero value.
pub fn inject_sign_fault(ctx: &mut EmbeddingContext, pp: &PrincipalPart) -> Result<Option<(Rational, Coset)>> {
    for &(m, i) in pp.terms().keys() {
        let mu = ctx.ambient_coset(i);
        for row in pullback_table(ctx, m, &mu)? {
            if row.m1.is_positive() && !ctx.a_plus(row.m1, &row.mu1)?.is_zero() {
                ctx.corrupt_eisenstein(row.m1, &row.mu1)?;
                return Ok(Some((row.m1, row.mu1)));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;
    use crate::qseries::hejhal_principal_part;

    fn block_ctx() -> EmbeddingContext {
        let l = QuadLattice::new(vec![vec![-2, -1, 0], vec![-1, -4, 0], vec![0, 0, 2]]).unwrap();
        EmbeddingContext::new(l, &[vec![1, 0, 0], vec![0, 1, 0]], int(4)).unwrap()
    }

    #[test]
    fn block_lambda_matches_complement_enumeration() {
        let ctx = block_ctx();
        let amb = ctx.embedding().ambient().discriminant_group();
        for mu in amb.elements() {
            for k in 1..=16 {
                let m = rat(k, 4);
                let pairs = ctx.embedding().glue_cosets(&mu);
                assert_eq!(pairs.len(), 1);
                let (mu1, mu2) = &pairs[0];
                let got = lambda_mmu(&ctx, m, &mu).unwrap();
                if *mu1 == ctx.package().disc_group().zero() {
                    assert_eq!(got, enumerate_coset_vectors(ctx.embedding().complement(), mu2, m).unwrap());
                } else {
                    assert!(got.is_empty());
                }
            }
        }
    }

    #[test]
    fn worked_block_example() {
        let ctx = block_ctx();
        let amb = ctx.embedding().ambient().discriminant_group();
        let zero = amb.zero();
        let rows = pullback_table(&ctx, int(1), &zero).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].m1, rows[0].rep), (int(1), 1));
        assert_eq!((rows[1].m1, rows[1].rep), (int(0), 2));
        assert_eq!(finite_heart_degree(&ctx, int(1), &zero).unwrap(), LogLinear::log_prime(7));
        let improper: u64 = rows.iter().filter(|r| r.m1.is_zero()).map(|r| r.rep).sum();
        assert_eq!(improper as usize, lambda_mmu(&ctx, int(1), &zero).unwrap().len());

        let pp = hejhal_principal_part(&amb, int(1), &zero).unwrap();
        let report = verify_ledger(&ctx, &pp).unwrap();
        assert!(report.all_match(), "{report:#?}");
        assert!(report.totals.residual.is_zero());
        assert_eq!(report.totals.lprime_coefficient, rat(-1, 2));
        assert_eq!(report.totals.rhs, LogLinear::symbol(Symbol::CentralDerivative) * rat(-1, 2));
    }

    #[test]
    fn cotautological_degree_is_minus_constant_term() {
        let ctx = block_ctx();
        let hw = ctx.package().field().h_over_w();
        let a00 = ctx.package().a_plus(int(0), &ctx.package().disc_group().zero()).unwrap();
        assert_eq!(cotaut_degree(&ctx), a00 * (-hw));
    }

    #[test]
    fn constant_only_principal_part() {
        let ctx = block_ctx();
        let mut pp = PrincipalPart::new(&ctx.embedding().ambient().discriminant_group());
        pp.set_constant(int(1));
        let report = verify_ledger(&ctx, &pp).unwrap();
        assert!(report.all_match());
        assert!(report.rows.iter().all(|r| r.identity != Identity::B));
    }

    #[test]
    fn sign_fault_is_localized() {
        let mut ctx = block_ctx();
        let amb = ctx.embedding().ambient().discriminant_group();
        let pp = hejhal_principal_part(&amb, int(1), &amb.zero()).unwrap();
        let hit = inject_sign_fault(&mut ctx, &pp).unwrap().unwrap();
        assert_eq!(hit.0, int(1));
        let report = verify_ledger(&ctx, &pp).unwrap();
        assert!(!report.all_match());
        assert!(!report.totals.residual.is_zero());
        let bad: Vec<Identity> = report.mismatches().map(|r| r.identity).collect();
        assert!(bad.contains(&Identity::A) && bad.contains(&Identity::B));
        assert!(!bad.contains(&Identity::D));
    }

    #[test]
    fn glued_lambda_matches_search_in_dual() {
        let l = QuadLattice::new(vec![vec![-2, -1, -1], vec![-1, -4, -2], vec![-1, -2, 2]]).unwrap();
        let ctx = EmbeddingContext::new(l.clone(), &[vec![1, 0, 0], vec![0, 1, 0]], int(3)).unwrap();
        let emb = ctx.embedding();
        assert_eq!(emb.index(), 7);
        assert!(emb.check_index_identity());
        let amb = l.discriminant_group();
        let lam = emb.complement();
        let zero0 = vec![Rational::zero(); 2];
        // every vector of Λ^∨ of norm ≤ 3, keyed by norm and ambient coset
        let mut direct: std::collections::BTreeMap<(Rational, Coset), Vec<Vec<Rational>>> = Default::default();
        for nu in lam.discriminant_group().elements() {
            crate::lattice::visit_ball(lam.gram(), nu.representative(), int(3), &mut |v, q| {
                if let Ok(c) = amb.coset(&emb.join(&zero0, v)) {
                    direct.entry((q, c)).or_default().push(v.to_vec());
                }
            })
            .unwrap();
        }
        let mut nonempty = 0;
        for mu in amb.elements() {
            for k in 1..=3 * 308 {
                let m = rat(k, 308);
                let mut want = direct.get(&(m, mu.clone())).cloned().unwrap_or_default();
                want.sort();
                let got = lambda_mmu(&ctx, m, &mu).unwrap();
                nonempty += usize::from(!got.is_empty());
                assert_eq!(got, want);
            }
        }
        assert!(nonempty > 0);
    }
}
