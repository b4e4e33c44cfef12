//! Definite quaternion algebras over ℚ, their orders, and maximal orders found by saturation.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::arith::{prime_divisors, Rational};
use crate::error::{Error, Result};
use crate::imq::{hilbert_symbol, ImQField, Place};
use crate::intmat::{kernel_basis, row_space_basis, IMat, QMat, Q128};
use crate::lattice::visit_ball;

/// Coordinates on the standard basis `1, i, j, ij`.
pub type Quat = [Q128; 4];

fn q(n: i128) -> Q128 {
    Q128::from_integer(n)
}

fn to_q128(r: Rational) -> Q128 {
    Q128::new(*r.numer() as i128, *r.denom() as i128)
}

/// `(a, b)_ℚ` with `i² = a`, `j² = b`, `ij = −ji`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct QuaternionAlgebra {
    #[serde(with = "crate::arith::serde_rational")]
    a: Rational,
    #[serde(with = "crate::arith::serde_rational")]
    b: Rational,
}

impl QuaternionAlgebra {
    pub fn new(a: Rational, b: Rational) -> Result<Self> {
        if a.is_zero() || b.is_zero() {
            return Err(Error::Input("quaternion algebra needs nonzero structure constants".into()));
        }
        Ok(QuaternionAlgebra { a, b })
    }

    pub fn a(&self) -> Rational {
        self.a
    }

    pub fn b(&self) -> Rational {
        self.b
    }

    /// Places where `(a, b)_v = −1`.
    pub fn ramification(&self) -> Vec<Place> {
        let mut primes = vec![2u64];
        for r in [self.a, self.b] {
            for n in [r.numer().unsigned_abs(), r.denom().unsigned_abs()] {
                if n > 1 {
                    primes.extend(prime_divisors(n));
                }
            }
        }
        primes.sort_unstable();
        primes.dedup();
        let mut out: Vec<Place> = primes
            .into_iter()
            .map(Place::Finite)
            .filter(|&v| hilbert_symbol(self.a, self.b, v) == -1)
            .collect();
        if hilbert_symbol(self.a, self.b, Place::Infinity) == -1 {
            out.push(Place::Infinity);
        }
        out
    }

    /// Product of the finite ramified primes.
    pub fn finite_discriminant(&self) -> u64 {
        self.ramification()
            .into_iter()
            .map(|v| match v {
                Place::Finite(p) => p,
                Place::Infinity => 1,
            })
            .product()
    }

    pub fn one(&self) -> Quat {
        [Q128::one(), Q128::zero(), Q128::zero(), Q128::zero()]
    }

    pub fn scalar(&self, r: Q128) -> Quat {
        [r, Q128::zero(), Q128::zero(), Q128::zero()]
    }

    pub fn mul(&self, x: &Quat, y: &Quat) -> Quat {
        let a = to_q128(self.a);
        let b = to_q128(self.b);
        [
            x[0] * y[0] + a * x[1] * y[1] + b * x[2] * y[2] - a * b * x[3] * y[3],
            x[0] * y[1] + x[1] * y[0] - b * x[2] * y[3] + b * x[3] * y[2],
            x[0] * y[2] + x[2] * y[0] + a * x[1] * y[3] - a * x[3] * y[1],
            x[0] * y[3] + x[3] * y[0] + x[1] * y[2] - x[2] * y[1],
        ]
    }

    pub fn conj(&self, x: &Quat) -> Quat {
        [x[0], -x[1], -x[2], -x[3]]
    }

    pub fn trd(&self, x: &Quat) -> Q128 {
        x[0] * q(2)
    }

    pub fn nrd(&self, x: &Quat) -> Q128 {
        let a = to_q128(self.a);
        let b = to_q128(self.b);
        x[0] * x[0] - a * x[1] * x[1] - b * x[2] * x[2] + a * b * x[3] * x[3]
    }

    pub fn add(&self, x: &Quat, y: &Quat) -> Quat {
        [x[0] + y[0], x[1] + y[1], x[2] + y[2], x[3] + y[3]]
    }

    pub fn sub(&self, x: &Quat, y: &Quat) -> Quat {
        [x[0] - y[0], x[1] - y[1], x[2] - y[2], x[3] - y[3]]
    }

    pub fn scale(&self, x: &Quat, r: Q128) -> Quat {
        [x[0] * r, x[1] * r, x[2] * r, x[3] * r]
    }

    pub fn inverse(&self, x: &Quat) -> Option<Quat> {
        let n = self.nrd(x);
        (!n.is_zero()).then(|| self.scale(&self.conj(x), n.recip()))
    }
}

/// A full-rank ℤ-lattice in the algebra, given by four basis elements.
#[derive(Clone, Debug, PartialEq)]
pub struct QuaternionOrder {
    algebra: QuaternionAlgebra,
    basis: [Quat; 4],
}

impl QuaternionOrder {
    /// Checks that the lattice contains 1, is closed under multiplication, and is integral.
    pub fn new(algebra: QuaternionAlgebra, basis: [Quat; 4]) -> Result<Self> {
        let o = QuaternionOrder { algebra, basis };
        if o.basis_matrix().inverse().is_none() {
            return Err(Error::Input("order basis is not of full rank".into()));
        }
        if !o.contains(&algebra.one()) {
            return Err(Error::Input("lattice does not contain 1".into()));
        }
        for x in &o.basis {
            for y in &o.basis {
                if !o.contains(&algebra.mul(x, y)) {
                    return Err(Error::Input("lattice is not closed under multiplication".into()));
                }
            }
        }
        Ok(o)
    }

    pub fn algebra(&self) -> &QuaternionAlgebra {
        &self.algebra
    }

    pub fn basis(&self) -> &[Quat; 4] {
        &self.basis
    }

    /// Rows are basis elements.
    fn basis_matrix(&self) -> QMat {
        QMat::from_rows(&self.basis.iter().map(|x| x.to_vec()).collect::<Vec<_>>())
    }

    /// Coordinates of `x` on the order basis.
    pub fn coordinates(&self, x: &Quat) -> Vec<Q128> {
        let m = self.basis_matrix().transpose();
        m.solve(x).expect("order basis is invertible")
    }

    pub fn contains(&self, x: &Quat) -> bool {
        self.coordinates(x).iter().all(|c| c.is_integer())
    }

    pub fn element(&self, coords: &[i128]) -> Quat {
        let mut out = [Q128::zero(); 4];
        for (c, e) in coords.iter().zip(&self.basis) {
            for k in 0..4 {
                out[k] += e[k] * q(*c);
            }
        }
        out
    }

    /// `trd(e_i·ē_j)`, the Gram matrix of `2·nrd`.
    pub fn norm_gram(&self) -> Vec<Vec<Q128>> {
        let a = &self.algebra;
        self.basis.iter().map(|x| self.basis.iter().map(|y| a.trd(&a.mul(x, &a.conj(y)))).collect()).collect()
    }

    /// `trd(e_i·e_j)`.
    pub fn trace_gram(&self) -> Vec<Vec<Q128>> {
        let a = &self.algebra;
        self.basis.iter().map(|x| self.basis.iter().map(|y| a.trd(&a.mul(x, y))).collect()).collect()
    }

    /// `|det trd(e_i e_j)|`, equal to the square of the reduced discriminant.
    pub fn discriminant(&self) -> Q128 {
        let g = QMat::from_rows(&self.trace_gram());
        det_q(&g).abs()
    }

    pub fn reduced_discriminant(&self) -> Option<u64> {
        let d = self.discriminant();
        if !d.is_integer() {
            return None;
        }
        let n = d.to_integer() as u128;
        let r = crate::arith::isqrt(n);
        (r * r == n).then_some(r as u64)
    }

    pub fn is_maximal(&self) -> bool {
        self.reduced_discriminant() == Some(self.algebra.finite_discriminant())
    }

    fn integer_norm_gram(&self) -> Result<Vec<Vec<i64>>> {
        self.norm_gram()
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|x| {
                        if x.is_integer() {
                            i64::try_from(x.to_integer()).map_err(|_| Error::Overflow("order norm form"))
                        } else {
                            Err(Error::Saturation("order is not integral".into()))
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Elements of reduced norm exactly `n`, as order coordinates.
    pub fn elements_of_norm(&self, n: i64) -> Result<Vec<Vec<i128>>> {
        let gram = self.integer_norm_gram()?;
        let zero = vec![Rational::zero(); 4];
        let mut out = Vec::new();
        visit_ball(&gram, &zero, Rational::from_integer(n), &mut |x, v| {
            if v == Rational::from_integer(n) {
                out.push(x.iter().map(|c| *c.numer() as i128).collect());
            }
        })?;
        Ok(out)
    }
}

fn det_q(m: &QMat) -> Q128 {
    let n = m.rows();
    let mut a: Vec<Vec<Q128>> = (0..n).map(|i| m.row(i)).collect();
    let mut det = Q128::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !a[r][c].is_zero()) else { return Q128::zero() };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                let v = a[c][k] * f;
                a[r][k] -= v;
            }
        }
    }
    det
}

/// ℤ-span of `gens` as four basis elements; `None` if the span is not of rank 4.
fn span(gens: &[Quat]) -> Option<[Quat; 4]> {
    let den = gens.iter().flat_map(|x| x.iter()).fold(1i128, |acc, c| num_integer::lcm(acc, *c.denom()));
    let rows: Vec<Vec<i128>> =
        gens.iter().map(|x| x.iter().map(|c| (*c * q(den)).to_integer()).collect()).collect();
    let basis = row_space_basis(&rows);
    if basis.len() != 4 {
        return None;
    }
    let mut out = [[Q128::zero(); 4]; 4];
    for (i, r) in basis.iter().enumerate() {
        for k in 0..4 {
            out[i][k] = Q128::new(r[k], den);
        }
    }
    Some(out)
}

/// Multiplicative closure of a lattice containing 1, failing if denominators exceed `limit`.
fn ring_closure(alg: &QuaternionAlgebra, gens: &[Quat], limit: i128) -> Option<[Quat; 4]> {
    let mut basis = span(gens)?;
    loop {
        let mut all: Vec<Quat> = basis.to_vec();
        for x in &basis {
            for y in &basis {
                all.push(alg.mul(x, y));
            }
        }
        if all.iter().flat_map(|x| x.iter()).any(|c| *c.denom() > limit) {
            return None;
        }
        let next = span(&all)?;
        if next == basis {
            return Some(basis);
        }
        basis = next;
    }
}

/// Null space of an integer matrix modulo a prime, as a list of basis vectors.
fn null_space_mod(rows: &[Vec<i128>], p: i128) -> Vec<Vec<i128>> {
    let n = rows[0].len();
    let mut a: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|x| x.rem_euclid(p)).collect()).collect();
    let inv = |x: i128| -> i128 {
        let mut r = 1i128;
        let mut b = x;
        let mut e = p - 2;
        while e > 0 {
            if e & 1 == 1 {
                r = r * b % p;
            }
            b = b * b % p;
            e >>= 1;
        }
        r
    };
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(piv) = (row..a.len()).find(|&r| a[r][col] != 0) else { continue };
        a.swap(row, piv);
        let f = inv(a[row][col]);
        for k in 0..n {
            a[row][k] = a[row][k] * f % p;
        }
        for r in 0..a.len() {
            if r != row && a[r][col] != 0 {
                let g = a[r][col];
                for k in 0..n {
                    a[r][k] = (a[r][k] - g * a[row][k]).rem_euclid(p);
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![0i128; n];
            v[f] = 1;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = (-a[r][f]).rem_euclid(p);
            }
            v
        })
        .collect()
}

/// Enlarges an order until its reduced discriminant equals that of the algebra.
///
/// Each step looks for an integral `x ∈ (1/ℓ)O ∩ O^♯` outside `O`, with `ℓ` a prime dividing
/// the discriminant defect, and replaces `O` by the ring it generates with `x`.
pub fn saturate(order: QuaternionOrder) -> Result<QuaternionOrder> {
    let alg = order.algebra;
    let target = alg.finite_discriminant();
    let mut o = order;
    for _ in 0..64 {
        let Some(rd) = o.reduced_discriminant() else {
            return Err(Error::Saturation("order discriminant is not a square integer".into()));
        };
        if rd == target {
            return Ok(o);
        }
        if rd % target != 0 {
            return Err(Error::Saturation(format!("reduced discriminant {rd} not divisible by {target}")));
        }
        let defect = rd / target;
        let mut grown = None;
        'primes: for l in prime_divisors(defect) {
            let li = l as i128;
            let tg: Vec<Vec<i128>> = o
                .trace_gram()
                .into_iter()
                .map(|r| r.into_iter().map(|x| x.to_integer()).collect())
                .collect();
            let null = null_space_mod(&tg, li);
            let dim = null.len() as u32;
            if dim == 0 {
                continue;
            }
            let total = li.pow(dim);
            for idx in 1..total {
                let mut coeffs = vec![0i128; 4];
                let mut rest = idx;
                for v in &null {
                    let c = rest % li;
                    rest /= li;
                    for k in 0..4 {
                        coeffs[k] += c * v[k];
                    }
                }
                let x = alg.scale(&o.element(&coeffs), Q128::new(1, li));
                if o.contains(&x) || !alg.nrd(&x).is_integer() || !alg.trd(&x).is_integer() {
                    continue;
                }
                let mut gens: Vec<Quat> = o.basis.to_vec();
                gens.push(x);
                let den_limit = o.basis.iter().flat_map(|e| e.iter()).map(|c| *c.denom()).max().unwrap_or(1) * li;
                if let Some(basis) = ring_closure(&alg, &gens, den_limit) {
                    if let Ok(bigger) = QuaternionOrder::new(alg, basis) {
                        if bigger.reduced_discriminant().is_some_and(|r| r < rd && r % target == 0) {
                            grown = Some(bigger);
                            break 'primes;
                        }
                    }
                }
            }
        }
        match grown {
            Some(b) => o = b,
            None => return Err(Error::Saturation(format!("no integral enlargement found at defect {defect}"))),
        }
    }
    Err(Error::Saturation("iteration limit reached".into()))
}

/// `ℤ⟨1, i, j, ij⟩`.
pub fn standard_order(alg: QuaternionAlgebra) -> Result<QuaternionOrder> {
    let e = |k: usize| {
        let mut x = [Q128::zero(); 4];
        x[k] = Q128::one();
        x
    };
    QuaternionOrder::new(alg, [e(0), e(1), e(2), e(3)])
}

/// The definite algebra ramified exactly at `{p, ∞}` with a maximal order.
pub fn construct_bpinfty(p: u64) -> Result<(QuaternionAlgebra, QuaternionOrder)> {
    if !crate::arith::is_prime(p) {
        return Err(Error::Input(format!("{p} is not prime")));
    }
    let (a, b): (i64, i64) = if p == 2 {
        (-1, -1)
    } else if p % 4 == 3 {
        (-1, -(p as i64))
    } else if p % 8 == 5 {
        (-2, -(p as i64))
    } else {
        let q = (3..)
            .step_by(4)
            .find(|&q: &u64| crate::arith::is_prime(q) && crate::arith::legendre(p as i64, q) == -1)
            .expect("a prime q exists");
        (-(p as i64), -(q as i64))
    };
    let alg = QuaternionAlgebra::new(Rational::from_integer(a), Rational::from_integer(b))?;
    check_ramification(&alg, p)?;
    let order = saturate(standard_order(alg)?)?;
    Ok((alg, order))
}

fn check_ramification(alg: &QuaternionAlgebra, p: u64) -> Result<()> {
    if alg.ramification() != vec![Place::Finite(p), Place::Infinity] {
        return Err(Error::Saturation(format!("algebra ({}, {}) is not ramified exactly at {{{p}, inf}}", alg.a, alg.b)));
    }
    Ok(())
}

/// A maximal order of `B_{p,∞} = (d, η)` containing `O_k + O_k·j`, for `p` non-split in `k`.
pub fn maximal_order_containing(field: &ImQField, p: u64) -> Result<(QuaternionAlgebra, QuaternionOrder)> {
    if field.chi(p as i64) == 1 {
        return Err(Error::NoEmbedding(format!("{p} splits in Q(sqrt {})", field.disc())));
    }
    let d = Rational::from_integer(field.disc());
    let eta = (1..10_000i64)
        .map(|n| Rational::from_integer(-n))
        .find(|&e| {
            QuaternionAlgebra::new(d, e).map(|a| a.ramification() == vec![Place::Finite(p), Place::Infinity]).unwrap_or(false)
        })
        .ok_or_else(|| Error::Saturation(format!("no eta found for p = {p}")))?;
    let alg = QuaternionAlgebra::new(d, eta)?;
    let half = Q128::new(1, 2);
    let omega = [half, half, Q128::zero(), Q128::zero()];
    let j = [Q128::zero(), Q128::zero(), Q128::one(), Q128::zero()];
    let basis = [alg.one(), omega, j, alg.mul(&omega, &j)];
    let order = saturate(QuaternionOrder::new(alg, basis)?)?;
    Ok((alg, order))
}

/// An element `α` of the order with `trd α = d` and `nrd α = (d² − d)/4`.
///
/// Searches `δ = 2α − d`, which has trace 0 and norm `|d|`.
pub fn embed_cm(order: &QuaternionOrder, field: &ImQField) -> Result<Quat> {
    let d = field.disc();
    let alg = order.algebra();
    for coords in order.elements_of_norm(-d)? {
        let delta = order.element(&coords);
        if !alg.trd(&delta).is_zero() {
            continue;
        }
        let alpha = alg.scale(&alg.add(&delta, &alg.scalar(q(d as i128))), Q128::new(1, 2));
        if order.contains(&alpha) {
            return Ok(alpha);
        }
    }
    Err(Error::NoEmbedding(format!("no element of trace {d} and norm {} in the order", (d * d - d) / 4)))
}

/// `{x ∈ O : xα = ᾱx}` as order elements spanning a rank-2 sublattice.
pub fn conjugate_linear_basis(order: &QuaternionOrder, alpha: &Quat) -> Result<Vec<Quat>> {
    let alg = order.algebra();
    let abar = alg.conj(alpha);
    let mut cols = Vec::with_capacity(4);
    for e in order.basis() {
        let image = alg.sub(&alg.mul(e, alpha), &alg.mul(&abar, e));
        let c = order.coordinates(&image);
        if c.iter().any(|x| !x.is_integer()) {
            return Err(Error::Saturation("embedding does not preserve the order".into()));
        }
        cols.push(c.into_iter().map(|x| x.to_integer()).collect::<Vec<i128>>());
    }
    let m = IMat::from_cols(&cols);
    Ok(kernel_basis(&m).into_iter().map(|v| order.element(&v)).collect())
}
