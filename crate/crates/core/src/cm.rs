//! Degrees of the CM cycles `𝒵₀(m, μ)`: a closed formula and a point-counting oracle that works
//! inside an explicit maximal order of the definite quaternion algebra ramified at `p`.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};

use crate::arith::{format_rational, int, ord_p, Rational};
use crate::eisenstein::EisensteinPackage;
use crate::error::{Error, Result};
use crate::intmat::{kernel_basis, row_space_basis, smith, IMat, QMat, Q128};
use crate::lattice::{q128_to_rational, rational_to_q128, visit_ball, Coset, QuadLattice};
use crate::loglinear::LogLinear;
use crate::quaternion::{conjugate_linear_basis, embed_cm, maximal_order_containing, Quat, QuaternionAlgebra};

/// Degree of `𝒵₀(m, μ)`: `weighted_count · log p`, where the weighted count already includes
/// the `log N(𝔭)/log p` factor.
#[derive(Clone, Debug, PartialEq)]
pub struct CMDegree {
    pub m: Rational,
    pub mu: Coset,
    pub prime: Option<u64>,
    pub weighted_count: Rational,
    pub degree: LogLinear,
}

impl CMDegree {
    fn zero(m: Rational, mu: &Coset, prime: Option<u64>) -> Self {
        CMDegree { m, mu: mu.clone(), prime, weighted_count: Rational::zero(), degree: LogLinear::zero() }
    }

    fn with_count(m: Rational, mu: &Coset, p: u64, weighted_count: Rational) -> Self {
        CMDegree { m, mu: mu.clone(), prime: Some(p), weighted_count, degree: LogLinear::log_prime(p) * weighted_count }
    }
}

fn require_positive(m: Rational) -> Result<()> {
    if m.is_positive() {
        Ok(())
    } else {
        Err(Error::Precondition(format!("m = {} must be positive", format_rational(&m))))
    }
}

/// `2^{s(μ)−1} · ord_p(pm) · ρ(m|d|/p^ε) · log p` when `Diff(m) = {p}` and `Q(μ) ≡ m`, else 0.
pub fn degree_formula(pkg: &EisensteinPackage, m: Rational, mu: &Coset) -> Result<CMDegree> {
    require_positive(m)?;
    let local = pkg.local_data(m, mu)?;
    if local.diff.len() != 1 {
        return Ok(CMDegree::zero(m, mu, None));
    }
    let p = local.diff[0];
    if !local.congruent {
        return Ok(CMDegree::zero(m, mu, Some(p)));
    }
    let ord = ord_p(m * int(p as i64), p);
    let k = pkg.field();
    let rho = k.rho(m * int(k.abs_disc() as i64) / int((p as i64).pow(pkg.epsilon(p))));
    if ord <= 0 || rho == 0 {
        return Ok(CMDegree::zero(m, mu, Some(p)));
    }
    let pow = Rational::new(1i64 << pkg.s_mu(mu), 2);
    Ok(CMDegree::with_count(m, mu, p, pow * int(ord) * int(rho as i64)))
}

type V2 = [Q128; 2];

/// An element `r + s·√d` of `k`, acting on `V₀ = L₀ ⊗ ℚ` through the even Clifford algebra.
#[derive(Clone, Copy, Debug)]
struct FieldElt {
    r: Q128,
    s: Q128,
}

/// The data at one prime: the order, the CM element, and the tensor lattices in `V₀ ⊕ V₀`.
struct PrimeData {
    /// Columns are a basis of the image of `O ⊗_{O_k} L₀` in `V₀ ⊕ V₀`.
    tensor_basis: Vec<[Q128; 4]>,
    /// Basis of `M ⊗_{O_k} L₀^∨` inside the second copy of `V₀`.
    dual_conj: Vec<V2>,
    /// `Nrd(x₀)` for the chosen conjugate-linear generator.
    nrd_x0: Q128,
}

/// Counts special quasi-endomorphisms; restricted to class number one.
pub struct BruteForceOracle {
    pkg: EisensteinPackage,
    /// `√d` on `V₀`, as a matrix acting on column vectors.
    sqrt_d: [[Q128; 2]; 2],
    cache: HashMap<u64, PrimeData>,
}

impl BruteForceOracle {
    pub fn new(l0: QuadLattice) -> Result<Self> {
        let pkg = EisensteinPackage::new(l0)?;
        if pkg.field().class_number() != 1 {
            return Err(Error::Precondition(format!(
                "oracle needs class number 1, Q(sqrt {}) has {}",
                pkg.field().disc(),
                pkg.field().class_number()
            )));
        }
        let g = pkg.lattice().gram();
        let (a, b, c) = (g[0][0] as i128 / 2, g[0][1] as i128, g[1][1] as i128 / 2);
        // e₁e₂ acts by [[b, c], [−a, 0]] with trace b; √d = 2·e₁e₂ − b
        let sqrt_d = [[Q128::from(b), Q128::from(2 * c)], [Q128::from(-2 * a), Q128::from(-b)]];
        Ok(BruteForceOracle { pkg, sqrt_d, cache: HashMap::new() })
    }

    pub fn package(&self) -> &EisensteinPackage {
        &self.pkg
    }

    fn act(&self, x: FieldElt, v: &V2) -> V2 {
        let s = &self.sqrt_d;
        [x.r * v[0] + x.s * (s[0][0] * v[0] + s[0][1] * v[1]), x.r * v[1] + x.s * (s[1][0] * v[0] + s[1][1] * v[1])]
    }

    fn prime_data(&mut self, p: u64) -> Result<&PrimeData> {
        if !self.cache.contains_key(&p) {
            let data = self.build(p)?;
            self.cache.insert(p, data);
        }
        Ok(&self.cache[&p])
    }

    fn build(&self, p: u64) -> Result<PrimeData> {
        let field = self.pkg.field();
        let d = field.disc() as i128;
        let (alg, order) = maximal_order_containing(field, p)?;
        let alpha = embed_cm(&order, field)?;
        let delta = alg.sub(&alg.scale(&alpha, Q128::from(2)), &alg.scalar(Q128::from(d)));
        let conj = conjugate_linear_basis(&order, &alpha)?;
        let x0 = conj[0];
        let split = Splitter::new(alg, delta, x0)?;
        let e = [[Q128::one(), Q128::zero()], [Q128::zero(), Q128::one()]];

        let mut gens = Vec::new();
        for o in order.basis() {
            let (b1, b2) = split.split(o)?;
            for v in &e {
                let top = self.act(b1, v);
                let bot = self.act(b2, v);
                gens.push(vec![top[0], top[1], bot[0], bot[1]]);
            }
        }
        let tensor_basis: Vec<[Q128; 4]> =
            lattice_span(&gens).into_iter().map(|v| [v[0], v[1], v[2], v[3]]).collect();
        if tensor_basis.len() != 4 {
            return Err(Error::Saturation("tensor lattice does not have rank 4".into()));
        }

        let ginv = gram_inverse(self.pkg.lattice())?;
        let dual: Vec<V2> = (0..2).map(|j| [ginv.row(0)[j], ginv.row(1)[j]]).collect();
        let mut dgens = Vec::new();
        for x in &conj {
            let (b1, b2) = split.split(x)?;
            if !b1.r.is_zero() || !b1.s.is_zero() {
                return Err(Error::Saturation("conjugate-linear element has a commuting part".into()));
            }
            for f in &dual {
                let v = self.act(b2, f);
                dgens.push(vec![v[0], v[1]]);
            }
        }
        let dual_conj: Vec<V2> = lattice_span(&dgens).into_iter().map(|v| [v[0], v[1]]).collect();
        Ok(PrimeData { tensor_basis, dual_conj, nrd_x0: alg.nrd(&x0) })
    }

    /// Weighted count `ord_p(pm) · #{x ∈ V_μ : Q(x) = m} / w`, with `p` the unique element of `Diff(m)`.
    pub fn degree(&mut self, m: Rational, mu: &Coset) -> Result<CMDegree> {
        require_positive(m)?;
        let diff = self.pkg.local_data(m, mu)?.diff;
        if diff.len() != 1 {
            return Err(Error::Precondition(format!("Diff({}) = {:?} is not a single prime", format_rational(&m), diff)));
        }
        let p = diff[0];
        let ord = ord_p(m, p);
        if ord < 0 {
            return Err(Error::Precondition(format!("ord_{p}(m) = {ord} is negative")));
        }
        let units = self.pkg.field().units() as i64;
        let gram = self.pkg.lattice().gram().to_vec();
        let muv: Vec<Q128> = mu.representative().iter().map(rational_to_q128).collect();
        let data = self.prime_data(p)?;
        let count = count_special(data, &gram, &muv, m)?;
        let weighted = Rational::new(count as i64, units) * int(ord + 1);
        Ok(if weighted.is_zero() { CMDegree::zero(m, mu, Some(p)) } else { CMDegree::with_count(m, mu, p, weighted) })
    }
}

/// One-shot form of [`BruteForceOracle::degree`].
pub fn degree_bruteforce(l0: &QuadLattice, m: Rational, mu: &Coset) -> Result<CMDegree> {
    BruteForceOracle::new(l0.clone())?.degree(m, mu)
}

/// Splits `y ∈ B` as `β₁ + x₀·β₂` with `β₁, β₂ ∈ k = ℚ(δ)`.
struct Splitter {
    alg: QuaternionAlgebra,
    delta: Quat,
    delta_inv: Quat,
    x0_inv: Quat,
}

impl Splitter {
    fn new(alg: QuaternionAlgebra, delta: Quat, x0: Quat) -> Result<Self> {
        let delta_inv = alg.inverse(&delta).ok_or_else(|| Error::Saturation("sqrt d is zero".into()))?;
        let x0_inv = alg.inverse(&x0).ok_or_else(|| Error::Saturation("conjugate-linear generator is zero".into()))?;
        Ok(Splitter { alg, delta, delta_inv, x0_inv })
    }

    fn to_field(&self, z: &Quat) -> Result<FieldElt> {
        let r = z[0];
        let rest = [Q128::zero(), z[1], z[2], z[3]];
        let c = (1..4).find(|&c| !self.delta[c].is_zero()).expect("delta is not scalar");
        let s = rest[c] / self.delta[c];
        if (1..4).any(|k| rest[k] != s * self.delta[k]) {
            return Err(Error::Saturation("element does not lie in the CM field".into()));
        }
        Ok(FieldElt { r, s })
    }

    fn split(&self, y: &Quat) -> Result<(FieldElt, FieldElt)> {
        let a = &self.alg;
        let half = Q128::new(1, 2);
        let twisted = a.mul(&a.mul(&self.delta, y), &self.delta_inv);
        let yk = a.scale(&a.add(y, &twisted), half);
        let yp = a.sub(y, &yk);
        let b2 = a.mul(&self.x0_inv, &yp);
        Ok((self.to_field(&yk)?, self.to_field(&b2)?))
    }
}

fn gram_inverse(l: &QuadLattice) -> Result<QMat> {
    let rows: Vec<Vec<Q128>> = l.gram().iter().map(|r| r.iter().map(|&x| Q128::from(x as i128)).collect()).collect();
    QMat::from_rows(&rows).inverse().ok_or(Error::DegenerateLattice)
}

fn common_denominator<'a>(xs: impl IntoIterator<Item = &'a Q128>) -> i128 {
    xs.into_iter().fold(1i128, |acc, c| num_integer::lcm(acc, *c.denom()))
}

/// ℤ-basis of the lattice spanned by rational vectors.
fn lattice_span(gens: &[Vec<Q128>]) -> Vec<Vec<Q128>> {
    let den = common_denominator(gens.iter().flatten());
    let rows: Vec<Vec<i128>> = gens.iter().map(|v| v.iter().map(|c| (*c * Q128::from(den)).to_integer()).collect()).collect();
    row_space_basis(&rows).into_iter().map(|r| r.into_iter().map(|x| Q128::new(x, den)).collect()).collect()
}

/// Solves `x = Σ zᵢ bᵢ` for integer `z`, or `None`.
fn integer_coordinates(basis: &[V2], x: &V2) -> Option<Vec<i128>> {
    let m = QMat::from_rows(&[vec![basis[0][0], basis[1][0]], vec![basis[0][1], basis[1][1]]]);
    let z = m.solve(x)?;
    z.iter().all(|c| c.is_integer()).then(|| z.iter().map(|c| c.to_integer()).collect())
}

/// `#{x ∈ V_μ : Q(x) = m}` where `V_μ = {x ∈ M ⊗ L₀^∨ : x − 1⊗μ ∈ O ⊗ L₀}`.
fn count_special(data: &PrimeData, gram: &[Vec<i64>], mu: &[Q128], m: Rational) -> Result<usize> {
    let basis = &data.tensor_basis;
    let den = common_denominator(basis.iter().flatten().chain(mu.iter()));
    // top rows of the basis matrix, scaled to integers
    let top = IMat::from_rows(
        &(0..2).map(|r| basis.iter().map(|b| (b[r] * Q128::from(den)).to_integer()).collect::<Vec<i128>>()).collect::<Vec<_>>(),
    );
    let rhs: Vec<i128> = mu.iter().map(|c| (-*c * Q128::from(den)).to_integer()).collect();
    let bottom = |z: &[i128]| -> V2 {
        let mut w = [Q128::zero(); 2];
        for (zi, b) in z.iter().zip(basis) {
            w[0] += b[2] * Q128::from(*zi);
            w[1] += b[3] * Q128::from(*zi);
        }
        w
    };

    let Some(z0) = solve_integer(&top, &rhs) else { return Ok(0) };
    let w0 = bottom(&z0);
    let kernel: Vec<V2> = kernel_basis(&top).iter().map(|z| bottom(z)).collect();
    if kernel.len() != 2 {
        return Err(Error::Saturation("conjugate-linear part of the tensor lattice is not of rank 2".into()));
    }
    for k in &kernel {
        if integer_coordinates(&data.dual_conj, k).is_none() {
            return Err(Error::Saturation("tensor lattice is not contained in the dual lattice".into()));
        }
    }
    if integer_coordinates(&data.dual_conj, &w0).is_none() {
        return Ok(0);
    }

    // Q on the coset: −Nrd(x₀)·½(Kz)ᵀG(Kz), z ∈ K⁻¹w₀ + ℤ²
    let g: Vec<Vec<Q128>> = gram.iter().map(|r| r.iter().map(|&x| Q128::from(x as i128)).collect()).collect();
    let bil = |u: &V2, v: &V2| -> Q128 {
        let mut s = Q128::zero();
        for i in 0..2 {
            for j in 0..2 {
                s += u[i] * g[i][j] * v[j];
            }
        }
        s
    };
    let gz: Vec<Vec<Q128>> =
        (0..2).map(|i| (0..2).map(|j| -data.nrd_x0 * bil(&kernel[i], &kernel[j])).collect()).collect();
    let scale = common_denominator(gz.iter().flatten());
    let gz_int: Vec<Vec<i64>> = gz
        .iter()
        .map(|r| {
            r.iter()
                .map(|x| i64::try_from((*x * Q128::from(scale)).to_integer()).map_err(|_| Error::Overflow("special lattice gram")))
                .collect()
        })
        .collect::<Result<_>>()?;
    let kmat = QMat::from_rows(&[vec![kernel[0][0], kernel[1][0]], vec![kernel[0][1], kernel[1][1]]]);
    let shift: Vec<Rational> = kmat
        .solve(&w0)
        .ok_or_else(|| Error::Saturation("singular special lattice".into()))?
        .into_iter()
        .map(q128_to_rational)
        .collect();
    let target = m * Rational::from_integer(scale as i64);
    let mut count = 0usize;
    visit_ball(&gz_int, &shift, target, &mut |_, v| {
        if v == target {
            count += 1;
        }
    })?;
    Ok(count)
}

/// Some `z ∈ ℤⁿ` with `A z = b`, via Smith normal form.
fn solve_integer(a: &IMat, b: &[i128]) -> Option<Vec<i128>> {
    let s = smith(a);
    let ub = s.u.mul_vec(b);
    let mut y = vec![0i128; a.cols()];
    for (i, &c) in ub.iter().enumerate() {
        if i < s.rank {
            if c % s.diag[i] != 0 {
                return None;
            }
            y[i] = c / s.diag[i];
        } else if c != 0 {
            return None;
        }
    }
    Some(s.v.mul_vec(&y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;
    use crate::eisenstein::principal_binary_lattice;

    fn pkg(d: i64) -> EisensteinPackage {
        EisensteinPackage::new(principal_binary_lattice(d).unwrap()).unwrap()
    }

    #[test]
    fn formula_at_seven() {
        let p = pkg(-7);
        let zero = p.disc_group().zero();
        let deg = degree_formula(&p, int(1), &zero).unwrap();
        assert_eq!(deg.prime, Some(7));
        assert_eq!(deg.weighted_count, int(1));
        assert_eq!(deg.degree, LogLinear::log_prime(7));
        assert!(matches!(degree_formula(&p, int(0), &zero), Err(Error::Precondition(_))));
    }

    #[test]
    fn formula_vanishes_off_support() {
        let p = pkg(-7);
        let g = p.disc_group();
        // Q(μ) ≢ m
        let mu = g.elements().into_iter().find(|mu| g.q(mu) != Rational::zero()).unwrap();
        assert!(degree_formula(&p, int(1), &mu).unwrap().degree.is_zero());
        let big = (1..500)
            .map(|k| rat(k, 7))
            .find(|&m| p.local_data(m, &g.zero()).unwrap().diff.len() >= 3)
            .unwrap();
        let deg = degree_formula(&p, big, &g.zero()).unwrap();
        assert!(deg.degree.is_zero() && deg.weighted_count.is_zero());
    }

    #[test]
    fn formula_matches_eisenstein_coefficients() {
        for d in [-3, -7, -15] {
            let p = pkg(d);
            let hw = p.field().h_over_w();
            for k in 1..=60 {
                let m = rat(k, d.abs());
                for mu in p.disc_group().elements() {
                    let deg = degree_formula(&p, m, &mu).unwrap();
                    assert_eq!(deg.degree, p.a_plus(m, &mu).unwrap() * (-hw));
                    assert_eq!(deg.degree.is_zero(), deg.weighted_count.is_zero());
                }
            }
        }
    }

    #[test]
    fn oracle_at_seven() {
        let l0 = principal_binary_lattice(-7).unwrap();
        let zero = l0.discriminant_group().zero();
        let deg = degree_bruteforce(&l0, int(1), &zero).unwrap();
        assert_eq!(deg.degree, LogLinear::log_prime(7));
    }

    #[test]
    fn oracle_agrees_with_formula_for_eleven() {
        let l0 = principal_binary_lattice(-11).unwrap();
        let mut oracle = BruteForceOracle::new(l0).unwrap();
        let p = pkg(-11);
        let zero = p.disc_group().zero();
        let deg = oracle.degree(int(1), &zero).unwrap();
        assert_eq!(deg.prime, Some(11));
        assert_eq!(deg, degree_formula(&p, int(1), &zero).unwrap());
        for k in 1..=33 {
            let m = rat(k, 11);
            for mu in p.disc_group().elements() {
                let local = p.local_data(m, &mu).unwrap();
                if local.diff.len() == 1 && ord_p(m, local.diff[0]) >= 0 {
                    assert_eq!(oracle.degree(m, &mu).unwrap(), degree_formula(&p, m, &mu).unwrap(), "m = {m}");
                }
            }
        }
    }

    #[test]
    fn oracle_rejects_bad_input() {
        let l0 = principal_binary_lattice(-15).unwrap();
        assert!(matches!(BruteForceOracle::new(l0), Err(Error::Precondition(_))));
        let l0 = principal_binary_lattice(-7).unwrap();
        let zero = l0.discriminant_group().zero();
        // Diff(2) has more than one prime or is split
        let mut o = BruteForceOracle::new(l0).unwrap();
        let bad = (1..50).map(|k| rat(k, 7)).find(|&m| o.package().local_data(m, &zero).unwrap().diff.len() > 1).unwrap();
        assert!(matches!(o.degree(bad, &zero), Err(Error::Precondition(_))));
    }
}
