//! Vector-valued q-expansions with rational exponents: theta series, pairings,
//! extension by zero, constant terms and Hejhal–Poincaré principal parts.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::arith::{format_rational, frac, int, rat, rational_to_f64, Rational};
use crate::error::{Error, Result};
use crate::lattice::{norm_counts, Coset, DiscriminantGroup, QuadLattice, SublatticeEmbedding};
use crate::loglinear::LogLinear;
use crate::weil::{Gen, MetaWord, Variant, WeilRep};

/// How the truncated tail of an expansion is bounded.
#[derive(Clone, Debug, PartialEq)]
pub enum TailModel {
    /// The expansion is the full form (finite Laurent polynomial).
    Exact,
    /// Theta series of a positive definite lattice of the given rank and smallest Gram eigenvalue.
    Theta { rank: usize, lambda_min: f64 },
    /// Nothing is known about the omitted coefficients.
    Unknown,
}

/// A q-expansion `Σ_m c(m) q^m` with `c(m)` a function on a discriminant group.
#[derive(Clone, Debug)]
pub struct QExpansion<C> {
    weight: Rational,
    variant: Variant,
    group: DiscriminantGroup,
    coeffs: BTreeMap<Rational, Vec<C>>,
    cutoff: Rational,
    tail: TailModel,
}

pub type VVFormQ = QExpansion<Rational>;

impl<C: Clone + PartialEq> QExpansion<C> {
    pub fn new(weight: Rational, variant: Variant, group: DiscriminantGroup, cutoff: Rational, tail: TailModel) -> Self {
        QExpansion { weight, variant, group, coeffs: BTreeMap::new(), cutoff, tail }
    }

    pub fn weight(&self) -> Rational {
        self.weight
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn group(&self) -> &DiscriminantGroup {
        &self.group
    }

    /// Exponents up to this bound are complete; absent ones are zero.
    pub fn cutoff(&self) -> Rational {
        self.cutoff
    }

    pub fn tail(&self) -> &TailModel {
        &self.tail
    }

    pub fn coefficients(&self) -> &BTreeMap<Rational, Vec<C>> {
        &self.coeffs
    }

    pub fn set(&mut self, m: Rational, v: Vec<C>) {
        assert_eq!(v.len(), self.group.order());
        self.coeffs.insert(m, v);
    }

    pub fn min_exponent(&self) -> Option<Rational> {
        self.coeffs.keys().next().copied()
    }

    /// Coefficient vector at `m`, `None` for zero, error past the cutoff.
    pub fn at(&self, m: Rational) -> Result<Option<&Vec<C>>> {
        if m > self.cutoff {
            return Err(Error::MissingCoefficient(format_rational(&m)));
        }
        Ok(self.coeffs.get(&m))
    }

    pub fn same_group(&self, other: &DiscriminantGroup) -> bool {
        self.group.lattice().gram() == other.lattice().gram()
    }
}

impl VVFormQ {
    /// Support law and ±μ symmetry for every stored coefficient.
    pub fn check_invariants(&self) -> Result<()> {
        let cosets = self.group.elements();
        for (m, v) in &self.coeffs {
            for (i, mu) in cosets.iter().enumerate() {
                if v[i].is_zero() {
                    continue;
                }
                let expected = match self.variant {
                    Variant::Omega => frac(-self.group.q(mu)),
                    _ => self.group.q(mu),
                };
                if frac(*m) != expected {
                    return Err(Error::SupportLaw(format!("coefficient at ({}, {mu})", format_rational(m))));
                }
                let j = self.group.index_of(&self.group.neg(mu));
                if v[j] != v[i] {
                    return Err(Error::SupportLaw(format!("asymmetric coefficient at ({}, {mu})", format_rational(m))));
                }
            }
        }
        Ok(())
    }

    /// `Σ c(m) e(mτ)` together with a bound on the omitted tail.
    pub fn evaluate(&self, tau: Complex64) -> Result<(Vec<Complex64>, f64)> {
        if tau.im <= 0.0 {
            return Err(Error::NotUpperHalfPlane);
        }
        let mut out = vec![Complex64::zero(); self.group.order()];
        for (m, v) in &self.coeffs {
            let e = (Complex64::new(0.0, 2.0 * PI) * tau * rational_to_f64(m)).exp();
            for (o, c) in out.iter_mut().zip(v) {
                if !c.is_zero() {
                    *o += e * rational_to_f64(c);
                }
            }
        }
        let bound = match &self.tail {
            TailModel::Exact => 0.0,
            TailModel::Unknown => f64::INFINITY,
            TailModel::Theta { rank, lambda_min } => theta_tail_bound(*rank, *lambda_min, rational_to_f64(&self.cutoff), tau.im),
        };
        Ok((out, bound))
    }
}

/// Bound for `Σ_{m>M} R(m,μ)·e^{−2πmy}` using `#{Q ≤ t} ≤ (2√(2t/λ)+1)^n`.
pub fn theta_tail_bound(rank: usize, lambda_min: f64, cutoff: f64, y: f64) -> f64 {
    let count = |t: f64| (2.0 * (2.0 * t / lambda_min).sqrt() + 1.0).powi(rank as i32);
    let decay = (-2.0 * PI * y).exp();
    let mut total = 0.0;
    let mut j = 0u32;
    loop {
        let t = cutoff + j as f64;
        let term = count(t + 1.0) * (-2.0 * PI * y * t).exp();
        let ratio = count(t + 2.0) / count(t + 1.0) * decay;
        total += term;
        if ratio < 1.0 && term * ratio / (1.0 - ratio) < 1e-6 * total.max(1e-300) {
            return total + term * ratio / (1.0 - ratio);
        }
        j += 1;
        if j > 1_000_000 {
            return f64::INFINITY;
        }
    }
}

/// Smallest eigenvalue of a symmetric integer matrix.
pub fn smallest_eigenvalue(gram: &[Vec<i64>]) -> f64 {
    let n = gram.len();
    if n == 0 {
        return f64::INFINITY;
    }
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| gram[i][j] as f64);
    m.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// `R_Λ(m, μ)`.
pub fn rep_number(lambda: &QuadLattice, m: Rational, mu: &Coset) -> Result<u64> {
    if !lambda.is_positive_definite() {
        return Err(Error::IndefiniteEnumeration);
    }
    if m.is_negative() {
        return Ok(0);
    }
    Ok(crate::lattice::enumerate_coset_vectors(lambda, mu, m)?.len() as u64)
}

/// `Θ_Λ` up to exponent `cutoff`, as a form for the contragredient representation.
pub fn theta_series(lambda: &QuadLattice, cutoff: Rational) -> Result<VVFormQ> {
    if !lambda.is_positive_definite() {
        return Err(Error::IndefiniteEnumeration);
    }
    let group = lambda.discriminant_group();
    let cosets = group.elements();
    let mut table: BTreeMap<Rational, Vec<Rational>> = BTreeMap::new();
    for (i, mu) in cosets.iter().enumerate() {
        for (m, count) in norm_counts(lambda, mu, cutoff)? {
            table.entry(m).or_insert_with(|| vec![Rational::zero(); cosets.len()])[i] = int(count as i64);
        }
    }
    let tail = TailModel::Theta { rank: lambda.rank(), lambda_min: 0.999 * smallest_eigenvalue(lambda.gram()) };
    let mut f = QExpansion::new(rat(lambda.rank() as i64, 2), Variant::Contragredient, group, cutoff, tail);
    for (m, v) in table {
        f.set(m, v);
    }
    Ok(f)
}

/// Smallest integer cutoff whose theta tail bound at `Im τ ≥ y` is below `eps`.
pub fn theta_cutoff(lambda: &QuadLattice, y: f64, eps: f64) -> u64 {
    let lam = 0.999 * smallest_eigenvalue(lambda.gram());
    let mut m = 1u64;
    while theta_tail_bound(lambda.rank(), lam, m as f64, y) > eps {
        m += 1;
    }
    m
}

/// Points `τ_k = g_k⋯g_n τ` visited when a word acts on `τ`, innermost first.
fn act(g: Gen, tau: Complex64) -> Complex64 {
    match g {
        Gen::S => -tau.inv(),
        Gen::T => tau + 1.0,
        Gen::TInv => tau - 1.0,
    }
}

/// `γτ` and the weight-`k` automorphy factor composed generator by generator,
/// with `j(S,τ) = (√τ)^{2k}` on the principal branch and `j(T^{±1},τ) = 1`.
pub fn act_with_factor(word: &MetaWord, tau: Complex64, two_k: u32) -> (Complex64, Complex64) {
    let mut t = tau;
    let mut j = Complex64::new(1.0, 0.0);
    for &g in word.gens().iter().rev() {
        if g == Gen::S {
            j *= t.sqrt().powu(two_k);
        }
        t = act(g, t);
    }
    (t, j)
}

/// `‖Θ(γτ) − j(γ,τ)·ω^∨(γ)Θ(τ)‖` and the combined truncation bound.
pub fn theta_transformation_defect(theta: &VVFormQ, rep: &WeilRep, word: &MetaWord, tau: Complex64) -> Result<(f64, f64)> {
    if !theta.same_group(rep.disc()) {
        return Err(Error::GroupMismatch);
    }
    let two_k = (theta.weight() * 2).to_integer() as u32;
    let (gt, j) = act_with_factor(word, tau, two_k);
    let (lhs, e1) = theta.evaluate(gt)?;
    let (base, e2) = theta.evaluate(tau)?;
    let rhs = rep.apply(Variant::Contragredient, word, &base)?;
    let defect = lhs
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - j * b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok((defect, (e1 + j.norm() * e2) * (rep.dim() as f64).sqrt()))
}

/// `{f, g}(m) = Σ_{m₁+m₂=m} Σ_μ c_f(m₁,μ)·c_g(m₂,μ)`.
pub fn pair<C>(f: &QExpansion<C>, g: &VVFormQ) -> Result<BTreeMap<Rational, C>>
where
    C: Clone + PartialEq + Default + std::ops::AddAssign + std::ops::Mul<Rational, Output = C> + IsZero,
{
    if !f.same_group(g.group()) {
        return Err(Error::GroupMismatch);
    }
    let mut out: BTreeMap<Rational, C> = BTreeMap::new();
    for (m1, a) in f.coefficients() {
        for (m2, b) in g.coefficients() {
            let mut acc = C::default();
            for (x, y) in a.iter().zip(b) {
                if !y.is_zero() && !x.is_zero_value() {
                    acc += x.clone() * *y;
                }
            }
            if !acc.is_zero_value() {
                *out.entry(*m1 + *m2).or_default() += acc;
            }
        }
    }
    out.retain(|_, v| !v.is_zero_value());
    Ok(out)
}

/// Zero test shared by rational and log-linear coefficients.
pub trait IsZero {
    fn is_zero_value(&self) -> bool;
}

impl IsZero for Rational {
    fn is_zero_value(&self) -> bool {
        self.is_zero()
    }
}

impl IsZero for LogLinear {
    fn is_zero_value(&self) -> bool {
        self.is_zero()
    }
}

/// Discriminant group of `L₀ ⊕ Λ` and the map from glue pairs to its cosets.
pub fn split_group(emb: &SublatticeEmbedding) -> DiscriminantGroup {
    emb.sub().direct_sum(emb.complement()).discriminant_group()
}

fn pair_to_sum_coset(sum: &DiscriminantGroup, a: &Coset, b: &Coset) -> Coset {
    let v: Vec<Rational> = a.representative().iter().chain(b.representative()).cloned().collect();
    sum.coset(&v).expect("glue pair lies in the dual of the split lattice")
}

/// Extension by zero along `L^∨ ⊂ L₀^∨ ⊕ Λ^∨`.
pub fn extend_by_zero(f: &VVFormQ, emb: &SublatticeEmbedding) -> Result<VVFormQ> {
    let ambient = emb.ambient().discriminant_group();
    if !f.same_group(&ambient) {
        return Err(Error::GroupMismatch);
    }
    let sum = split_group(emb);
    let images: Vec<Vec<usize>> = ambient
        .elements()
        .iter()
        .map(|mu| {
            emb.glue_cosets(mu)
                .iter()
                .map(|(a, b)| sum.index_of(&pair_to_sum_coset(&sum, a, b)))
                .collect()
        })
        .collect();
    let mut out = QExpansion::new(f.weight, f.variant, sum.clone(), f.cutoff, f.tail.clone());
    for (m, v) in f.coefficients() {
        let mut w = vec![Rational::zero(); sum.order()];
        for (i, c) in v.iter().enumerate() {
            for &j in &images[i] {
                w[j] = *c;
            }
        }
        out.set(*m, w);
    }
    Ok(out)
}

/// Holomorphic principal data of a harmonic form: `c⁺(−m, μ)` for `m > 0` and `c⁺(0,0)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrincipalPart {
    #[serde(skip)]
    group: DiscriminantGroup,
    /// `(m, coset index) ↦ c⁺(−m, μ)`.
    #[serde(serialize_with = "serialize_terms")]
    terms: BTreeMap<(Rational, usize), Rational>,
    #[serde(with = "crate::arith::serde_rational")]
    constant: Rational,
}

fn serialize_terms<S: serde::Serializer>(
    terms: &BTreeMap<(Rational, usize), Rational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(terms.len()))?;
    for ((m, mu), c) in terms {
        map.serialize_entry(&format!("{},{}", format_rational(m), mu), &format_rational(c))?;
    }
    map.end()
}

impl PrincipalPart {
    pub fn new(group: &DiscriminantGroup) -> Self {
        PrincipalPart { group: group.clone(), terms: BTreeMap::new(), constant: Rational::zero() }
    }

    pub fn group(&self) -> &DiscriminantGroup {
        &self.group
    }

    pub fn terms(&self) -> &BTreeMap<(Rational, usize), Rational> {
        &self.terms
    }

    pub fn constant(&self) -> Rational {
        self.constant
    }

    pub fn set_constant(&mut self, c: Rational) {
        self.constant = c;
    }

    /// Adds `c·q^{−m}φ_μ`, enforcing `m > 0` and `m ≡ Q(μ) mod ℤ`.
    pub fn add_term(&mut self, m: Rational, mu: &Coset, c: Rational) -> Result<()> {
        if !m.is_positive() {
            return Err(Error::Precondition("principal part exponents must be negative".into()));
        }
        let g = self.group();
        if frac(m) != g.q(mu) {
            return Err(Error::SupportLaw(format!(
                "q^-{} at {mu}: Q(mu) = {} mod 1",
                format_rational(&m),
                format_rational(&g.q(mu))
            )));
        }
        let key = (m, g.index_of(mu));
        let e = self.terms.entry(key).or_insert_with(Rational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&key);
        }
        Ok(())
    }

    pub fn coefficient(&self, m: Rational, mu: &Coset) -> Rational {
        self.terms.get(&(m, self.group().index_of(mu))).copied().unwrap_or_else(Rational::zero)
    }

    /// Symmetric under `μ ↦ −μ`, with integral sums over each `{μ, −μ}` and integral constant.
    pub fn check_integral(&self) -> Result<()> {
        let g = self.group();
        if !self.constant.is_integer() {
            return Err(Error::Precondition("c(0,0) is not integral".into()));
        }
        for (&(m, i), c) in &self.terms {
            let mu = g.element(i);
            let j = g.index_of(&g.neg(&mu));
            let partner = self.terms.get(&(m, j)).copied().unwrap_or_else(Rational::zero);
            if partner != *c {
                return Err(Error::SupportLaw(format!("principal part not symmetric at ({}, {mu})", format_rational(&m))));
            }
            let class_sum = if i == j { *c } else { *c + partner };
            if !class_sum.is_integer() {
                return Err(Error::Precondition(format!("principal part not integral at ({}, {mu})", format_rational(&m))));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, k: Rational) -> PrincipalPart {
        let mut out = PrincipalPart::new(self.group());
        out.constant = self.constant * k;
        for (key, c) in &self.terms {
            let v = *c * k;
            if !v.is_zero() {
                out.terms.insert(*key, v);
            }
        }
        out
    }

    pub fn plus(&self, other: &PrincipalPart) -> Result<PrincipalPart> {
        if self.group() != other.group() {
            return Err(Error::GroupMismatch);
        }
        let mut out = self.clone();
        out.constant += other.constant;
        for (key, c) in &other.terms {
            let e = out.terms.entry(*key).or_insert_with(Rational::zero);
            *e += *c;
            if e.is_zero() {
                out.terms.remove(key);
            }
        }
        Ok(out)
    }
}

/// Principal part `½(q^{−m}φ_μ + q^{−m}φ_{−μ})` of the Hejhal–Poincaré series `F_{m,μ}`.
pub fn hejhal_principal_part(group: &DiscriminantGroup, m: Rational, mu: &Coset) -> Result<PrincipalPart> {
    let mut pp = PrincipalPart::new(group);
    let neg = group.neg(mu);
    if neg == *mu {
        pp.add_term(m, mu, int(1))?;
    } else {
        pp.add_term(m, mu, rat(1, 2))?;
        pp.add_term(m, &neg, rat(1, 2))?;
    }
    Ok(pp)
}

/// `CT{f⁺, 𝓔 ⊗ Θ} = Σ_{m₁+m₂+m₃=0} {c⁺(m₁), a⁺(m₂) ⊗ R(m₃)}` via extension by zero.
///
/// `eis` is indexed by the cosets of `L₀`, `theta` by those of `Λ`.
pub fn constant_term_pairing(
    pp: &PrincipalPart,
    eis: &QExpansion<LogLinear>,
    theta: &VVFormQ,
    emb: &SublatticeEmbedding,
) -> Result<LogLinear> {
    let ambient = emb.ambient().discriminant_group();
    if pp.group() != &ambient || !eis.same_group(&emb.sub().discriminant_group()) || !theta.same_group(&emb.complement().discriminant_group()) {
        return Err(Error::GroupMismatch);
    }
    let d0 = eis.group();
    let d1 = theta.group();
    let mut total = LogLinear::zero();
    let zero_pairs = emb.glue_cosets(&ambient.zero());
    let mut terms: Vec<(Rational, Coset, Rational)> =
        vec![(Rational::zero(), ambient.zero(), pp.constant())];
    for (&(m, i), c) in pp.terms() {
        terms.push((m, ambient.element(i), *c));
    }
    for (m, mu, c) in terms {
        if c.is_zero() {
            continue;
        }
        let pairs = if m.is_zero() { zero_pairs.clone() } else { emb.glue_cosets(&mu) };
        for (mu1, mu2) in pairs {
            let i1 = d0.index_of(&mu1);
            let i2 = d1.index_of(&mu2);
            // m₂ runs over the Eisenstein exponents in [0, m]; m₃ = m − m₂ must be a theta exponent
            for m3 in theta_exponents_upto(theta, m)? {
                let m2 = m - m3;
                let Some(a) = eis.at(m2)? else { continue };
                let Some(r) = theta.at(m3)? else { continue };
                if r[i2].is_zero() || a[i1].is_zero() {
                    continue;
                }
                total += a[i1].clone() * (c * r[i2]);
            }
        }
    }
    Ok(total)
}

fn theta_exponents_upto(theta: &VVFormQ, m: Rational) -> Result<Vec<Rational>> {
    if m > theta.cutoff() {
        return Err(Error::MissingCoefficient(format_rational(&m)));
    }
    Ok(theta.coefficients().range(..=m).map(|(k, _)| *k).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat(g: Vec<Vec<i64>>) -> QuadLattice {
        QuadLattice::new(g).unwrap()
    }

    #[test]
    fn rep_numbers() {
        let z = lat(vec![vec![2]]);
        let d = z.discriminant_group();
        assert_eq!(rep_number(&z, int(0), &d.zero()).unwrap(), 1);
        assert_eq!(rep_number(&z, rat(1, 4), &d.element(1)).unwrap(), 2);
        let a2 = lat(vec![vec![2, 1], vec![1, 2]]);
        assert_eq!(rep_number(&a2, int(1), &a2.discriminant_group().zero()).unwrap(), 6);
    }

    #[test]
    fn theta_of_a1() {
        let z = lat(vec![vec![2]]);
        let t = theta_series(&z, int(1)).unwrap();
        let keys: Vec<Rational> = t.coefficients().keys().cloned().collect();
        assert_eq!(keys, vec![int(0), rat(1, 4), int(1)]);
        assert_eq!(t.coefficients()[&int(0)], vec![int(1), int(0)]);
        assert_eq!(t.coefficients()[&rat(1, 4)], vec![int(0), int(2)]);
        assert_eq!(t.coefficients()[&int(1)], vec![int(2), int(0)]);
        assert_eq!(theta_series(&z, int(0)).unwrap().coefficients().len(), 1);
        t.check_invariants().unwrap();
    }

    #[test]
    fn evaluate_rejects_lower_half_plane() {
        let t = theta_series(&lat(vec![vec![2]]), int(4)).unwrap();
        assert_eq!(t.evaluate(Complex64::new(0.0, -1.0)).unwrap_err(), Error::NotUpperHalfPlane);
    }

    #[test]
    fn hejhal_parts() {
        let l0 = lat(vec![vec![-2, -1], vec![-1, -4]]);
        let d = l0.discriminant_group();
        let pp = hejhal_principal_part(&d, int(1), &d.zero()).unwrap();
        assert_eq!(pp.terms().len(), 1);
        assert_eq!(pp.coefficient(int(1), &d.zero()), int(1));
        let mu = d.element(1);
        let m = d.q(&mu) + 1;
        let pp = hejhal_principal_part(&d, m, &mu).unwrap();
        assert_eq!(pp.coefficient(m, &mu), rat(1, 2));
        assert_eq!(pp.coefficient(m, &d.neg(&mu)), rat(1, 2));
        pp.check_integral().unwrap();
        assert!(matches!(hejhal_principal_part(&d, int(1), &mu), Err(Error::SupportLaw(_))));
    }

    #[test]
    fn automorphy_factor_of_s() {
        let tau = Complex64::new(0.3, 1.1);
        let (t, j) = act_with_factor(&"S".parse().unwrap(), tau, 2);
        assert!((t + tau.inv()).norm() < 1e-15);
        assert!((j - tau).norm() < 1e-15);
    }

    #[test]
    fn theta_transforms_under_generators() {
        for g in [vec![vec![2]], vec![vec![2, 1], vec![1, 2]], vec![vec![2, 0], vec![0, 4]]] {
            let l = lat(g);
            let rep = WeilRep::new(&l).unwrap();
            let m = theta_cutoff(&l, 0.1, 1e-13);
            let theta = theta_series(&l, int(m as i64)).unwrap();
            for word in ["T", "S", "ST", "TS", "STS"] {
                let w: MetaWord = word.parse().unwrap();
                let (defect, tail) = theta_transformation_defect(&theta, &rep, &w, Complex64::new(0.21, 0.83)).unwrap();
                assert!(defect < 1e-9, "{word}: defect {defect}");
                assert!(tail < 1e-9);
            }
        }
    }
}
