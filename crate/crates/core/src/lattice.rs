//! Integral quadratic lattices, discriminant groups, complements, glue and
//! exact enumeration of coset vectors.

use std::fmt;

use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::arith::{format_rational, frac, is_fundamental_discriminant, lcm, Rational};
use crate::error::{Error, Result};
use crate::intmat::{is_primitive_system, kernel_basis, row_space_basis, smith, IMat, QMat, Q128};

/// An integral lattice given by the Gram matrix of its bilinear form, `[x,x] = 2Q(x)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadLattice {
    gram: Vec<Vec<i64>>,
    signature: (usize, usize),
}

impl QuadLattice {
    /// Builds an even nondegenerate lattice. Rank zero is allowed and has trivial dual.
    pub fn new(gram: Vec<Vec<i64>>) -> Result<Self> {
        let n = gram.len();
        for (i, row) in gram.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidLattice("gram matrix is not square".into()));
            }
            if row[i] % 2 != 0 {
                return Err(Error::InvalidLattice(format!("odd diagonal entry at {i}")));
            }
            for j in 0..i {
                if gram[j][i] != row[j] {
                    return Err(Error::InvalidLattice("gram matrix is not symmetric".into()));
                }
            }
        }
        if n > 0 && IMat::from_rows(&gram).det() == 0 {
            return Err(Error::DegenerateLattice);
        }
        let signature = inertia(&gram);
        Ok(QuadLattice { gram, signature })
    }

    pub fn gram(&self) -> &[Vec<i64>] {
        &self.gram
    }

    pub fn rank(&self) -> usize {
        self.gram.len()
    }

    pub fn signature(&self) -> (usize, usize) {
        self.signature
    }

    /// `(p − q) mod 8`.
    pub fn sig8(&self) -> u8 {
        (self.signature.0 as i64 - self.signature.1 as i64).rem_euclid(8) as u8
    }

    pub fn det(&self) -> i64 {
        if self.rank() == 0 {
            return 1;
        }
        to_i64(IMat::from_rows(&self.gram).det())
    }

    /// |det(gram)|.
    pub fn disc(&self) -> u64 {
        self.det().unsigned_abs()
    }

    pub fn bilinear(&self, x: &[Rational], y: &[Rational]) -> Rational {
        let mut s = Rational::zero();
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for (j, yj) in y.iter().enumerate() {
                s += *xi * *yj * self.gram[i][j];
            }
        }
        s
    }

    pub fn q(&self, x: &[Rational]) -> Rational {
        self.bilinear(x, x) / 2
    }

    pub fn q_int(&self, x: &[i64]) -> i64 {
        let mut s = 0;
        for i in 0..x.len() {
            s += x[i] * x[i] * self.gram[i][i] / 2;
            for j in 0..i {
                s += x[i] * x[j] * self.gram[i][j];
            }
        }
        s
    }

    pub fn is_positive_definite(&self) -> bool {
        self.signature == (self.rank(), 0)
    }

    pub fn is_negative_definite(&self) -> bool {
        self.signature == (0, self.rank())
    }

    /// The lattice with form `−Q`.
    pub fn negated(&self) -> QuadLattice {
        QuadLattice {
            gram: self.gram.iter().map(|r| r.iter().map(|x| -x).collect()).collect(),
            signature: (self.signature.1, self.signature.0),
        }
    }

    pub fn direct_sum(&self, other: &QuadLattice) -> QuadLattice {
        let (a, b) = (self.rank(), other.rank());
        let mut gram = vec![vec![0; a + b]; a + b];
        for i in 0..a {
            gram[i][..a].copy_from_slice(&self.gram[i]);
        }
        for i in 0..b {
            gram[a + i][a..].copy_from_slice(&other.gram[i]);
        }
        QuadLattice {
            gram,
            signature: (self.signature.0 + other.signature.0, self.signature.1 + other.signature.1),
        }
    }

    /// The lattice `L + Σ ℤ·gᵢ` for glue vectors `gᵢ ∈ L^∨`, with its basis in the old coordinates.
    pub fn overlattice(&self, glue: &[Vec<Rational>]) -> Result<(QuadLattice, Vec<Vec<Rational>>)> {
        let n = self.rank();
        let den = glue.iter().flatten().fold(1i64, |acc, r| acc.lcm(r.denom()));
        let mut rows: Vec<Vec<i128>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { den as i128 } else { 0 }).collect())
            .collect();
        for g in glue {
            if g.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: g.len() });
            }
            rows.push(g.iter().map(|r| (*r * den).to_integer() as i128).collect());
        }
        let basis: Vec<Vec<Rational>> = row_space_basis(&rows)
            .into_iter()
            .map(|r| r.into_iter().map(|x| Rational::new(x as i64, den)).collect())
            .collect();
        let mut gram = vec![vec![0i64; n]; n];
        for i in 0..n {
            for j in 0..n {
                let b = self.bilinear(&basis[i], &basis[j]);
                if !b.is_integer() {
                    return Err(Error::InvalidLattice("glue is not integral".into()));
                }
                gram[i][j] = b.to_integer();
            }
        }
        Ok((QuadLattice::new(gram)?, basis))
    }

    pub fn discriminant_group(&self) -> DiscriminantGroup {
        DiscriminantGroup::new(self)
    }

    /// No nonzero isotropic element in `L^∨/L`.
    pub fn is_maximal(&self) -> bool {
        let d = self.discriminant_group();
        (1..d.order()).all(|i| !d.q(&d.element(i)).is_zero())
    }
}

fn to_i64(x: i128) -> i64 {
    i64::try_from(x).expect("value exceeds i64")
}

fn inertia(gram: &[Vec<i64>]) -> (usize, usize) {
    let n = gram.len();
    let mut a: Vec<Vec<Q128>> = gram
        .iter()
        .map(|r| r.iter().map(|&x| Q128::from_integer(x as i128)).collect())
        .collect();
    let swap = |a: &mut Vec<Vec<Q128>>, i: usize, j: usize| {
        a.swap(i, j);
        for row in a.iter_mut() {
            row.swap(i, j);
        }
    };
    for i in 0..n {
        if a[i][i].is_zero() {
            if let Some(j) = (i + 1..n).find(|&j| !a[j][j].is_zero()) {
                swap(&mut a, i, j);
            } else if let Some(j) = (i + 1..n).find(|&j| !a[i][j].is_zero()) {
                for k in 0..n {
                    let v = a[j][k];
                    a[i][k] += v;
                }
                for k in 0..n {
                    let v = a[k][j];
                    a[k][i] += v;
                }
            } else {
                continue;
            }
        }
        let p = a[i][i];
        for j in i + 1..n {
            let f = a[j][i] / p;
            if f.is_zero() {
                continue;
            }
            for k in 0..n {
                let v = a[i][k];
                a[j][k] -= f * v;
            }
            for k in 0..n {
                let v = a[k][i];
                a[k][j] -= f * v;
            }
        }
    }
    let pos = (0..n).filter(|&i| a[i][i].is_positive()).count();
    let neg = (0..n).filter(|&i| a[i][i].is_negative()).count();
    (pos, neg)
}

/// An element of `L^∨/L`, stored by its canonical representative with coordinates in `[0,1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coset {
    rep: Vec<Rational>,
}

impl Coset {
    pub fn representative(&self) -> &[Rational] {
        &self.rep
    }
}

impl fmt::Display for Coset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.rep.iter().map(format_rational).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// The finite quadratic module `L^∨/L`.
///
/// Elements are indexed in mixed radix over the nontrivial elementary divisors,
/// the first divisor being most significant; index 0 is the zero coset.
#[derive(Clone, Debug)]
pub struct DiscriminantGroup {
    lattice: QuadLattice,
    divisors: Vec<i64>,
    generators: Vec<Vec<Rational>>,
    /// Rows of `D·V⁻¹` for the nontrivial divisors; applied to `μ` they give its coordinates.
    coord_rows: Vec<Vec<i64>>,
}

impl DiscriminantGroup {
    fn new(l: &QuadLattice) -> Self {
        let n = l.rank();
        if n == 0 {
            return DiscriminantGroup {
                lattice: l.clone(),
                divisors: Vec::new(),
                generators: Vec::new(),
                coord_rows: Vec::new(),
            };
        }
        let s = smith(&IMat::from_rows(&l.gram));
        let mut divisors = Vec::new();
        let mut generators = Vec::new();
        let mut coord_rows = Vec::new();
        for i in 0..n {
            let d = to_i64(s.diag[i]);
            if d == 1 {
                continue;
            }
            divisors.push(d);
            generators.push(
                s.v.col(i).into_iter().map(|x| frac(Rational::new(to_i64(x), d))).collect(),
            );
            coord_rows.push(s.v_inv.row(i).into_iter().map(to_i64).collect());
        }
        DiscriminantGroup { lattice: l.clone(), divisors, generators, coord_rows }
    }

    pub fn lattice(&self) -> &QuadLattice {
        &self.lattice
    }

    /// Nontrivial elementary divisors `d₁ | d₂ | …`.
    pub fn elementary_divisors(&self) -> &[i64] {
        &self.divisors
    }

    pub fn generators(&self) -> &[Vec<Rational>] {
        &self.generators
    }

    pub fn order(&self) -> usize {
        self.divisors.iter().product::<i64>() as usize
    }

    pub fn zero(&self) -> Coset {
        Coset { rep: vec![Rational::zero(); self.lattice.rank()] }
    }

    /// Coordinates of `μ ∈ L^∨` with respect to the generators.
    pub fn coordinates(&self, mu: &[Rational]) -> Result<Vec<i64>> {
        let n = self.lattice.rank();
        if mu.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: mu.len() });
        }
        let dual = self.lattice.gram.iter().all(|row| {
            row.iter().zip(mu).fold(Rational::zero(), |a, (&g, m)| a + *m * g).is_integer()
        });
        if !dual {
            return Err(Error::UnknownCoset(render(mu)));
        }
        Ok(self
            .coord_rows
            .iter()
            .zip(&self.divisors)
            .map(|(row, &d)| {
                let a = row.iter().zip(mu).fold(Rational::zero(), |acc, (&r, m)| acc + *m * r) * d;
                a.to_integer().rem_euclid(d)
            })
            .collect())
    }

    pub fn coset(&self, mu: &[Rational]) -> Result<Coset> {
        let c = self.coordinates(mu)?;
        Ok(self.from_coordinates(&c))
    }

    pub fn from_coordinates(&self, coords: &[i64]) -> Coset {
        let mut rep = vec![Rational::zero(); self.lattice.rank()];
        for (g, &a) in self.generators.iter().zip(coords) {
            for (r, x) in rep.iter_mut().zip(g) {
                *r += *x * a;
            }
        }
        Coset { rep: rep.into_iter().map(frac).collect() }
    }

    pub fn index_of(&self, mu: &Coset) -> usize {
        let c = self.coordinates(&mu.rep).expect("coset of this group");
        c.iter().zip(&self.divisors).fold(0usize, |acc, (&a, &d)| acc * d as usize + a as usize)
    }

    pub fn element(&self, mut index: usize) -> Coset {
        let mut coords = vec![0i64; self.divisors.len()];
        for (k, &d) in self.divisors.iter().enumerate().rev() {
            coords[k] = (index % d as usize) as i64;
            index /= d as usize;
        }
        self.from_coordinates(&coords)
    }

    pub fn elements(&self) -> Vec<Coset> {
        (0..self.order()).map(|i| self.element(i)).collect()
    }

    /// `Q(μ) mod ℤ` in `[0,1)`.
    pub fn q(&self, mu: &Coset) -> Rational {
        frac(self.lattice.q(&mu.rep))
    }

    /// `[μ,ν] mod ℤ` in `[0,1)`.
    pub fn b(&self, mu: &Coset, nu: &Coset) -> Rational {
        frac(self.lattice.bilinear(&mu.rep, &nu.rep))
    }

    pub fn add(&self, mu: &Coset, nu: &Coset) -> Coset {
        Coset { rep: mu.rep.iter().zip(&nu.rep).map(|(a, b)| frac(*a + *b)).collect() }
    }

    pub fn neg(&self, mu: &Coset) -> Coset {
        Coset { rep: mu.rep.iter().map(|a| frac(-*a)).collect() }
    }

    pub fn order_of(&self, mu: &Coset) -> i64 {
        mu.rep.iter().fold(1i64, |acc, r| lcm(acc, *r.denom()))
    }

    /// True when the ℓ-primary component of μ vanishes.
    pub fn primary_part_vanishes(&self, mu: &Coset, ell: u64) -> bool {
        self.order_of(mu) % ell as i64 != 0
    }

    /// Smallest `N` with `N·Q(μ) ∈ ℤ` for every μ.
    pub fn level(&self) -> i64 {
        let mut n = 1i64;
        let gens: Vec<Coset> =
            self.generators.iter().map(|g| Coset { rep: g.clone() }).collect();
        for (i, g) in gens.iter().enumerate() {
            n = lcm(n, *self.q(g).denom());
            for h in &gens[..i] {
                n = lcm(n, *self.b(g, h).denom());
            }
        }
        n
    }

    /// Parses a coset given either as an index or as a comma-separated rational vector.
    pub fn parse_coset(&self, s: &str) -> Result<Coset> {
        let s = s.trim();
        if let Ok(i) = s.parse::<usize>() {
            if i < self.order() {
                return Ok(self.element(i));
            }
            return Err(Error::UnknownCoset(s.to_string()));
        }
        let inner = s.trim_start_matches('(').trim_end_matches(')');
        let v = inner
            .split(',')
            .map(crate::arith::parse_rational)
            .collect::<Result<Vec<_>>>()?;
        self.coset(&v)
    }
}

impl PartialEq for DiscriminantGroup {
    /// Groups are equal when they come from the same Gram matrix, so coset indices agree.
    fn eq(&self, other: &Self) -> bool {
        self.lattice.gram == other.lattice.gram
    }
}

fn render(v: &[Rational]) -> String {
    let parts: Vec<String> = v.iter().map(format_rational).collect();
    format!("({})", parts.join(", "))
}

/// `L₀ ⊂ L` together with its orthogonal complement `Λ`.
#[derive(Clone, Debug)]
pub struct SublatticeEmbedding {
    ambient: QuadLattice,
    sub_basis: Vec<Vec<i64>>,
    sub: QuadLattice,
    complement_basis: Vec<Vec<i64>>,
    complement: QuadLattice,
    index: u64,
}

impl SublatticeEmbedding {
    pub fn ambient(&self) -> &QuadLattice {
        &self.ambient
    }

    /// Columns spanning `L₀`, in ambient coordinates.
    pub fn sub_basis(&self) -> &[Vec<i64>] {
        &self.sub_basis
    }

    pub fn sub(&self) -> &QuadLattice {
        &self.sub
    }

    /// Columns spanning `Λ`, in ambient coordinates.
    pub fn complement_basis(&self) -> &[Vec<i64>] {
        &self.complement_basis
    }

    pub fn complement(&self) -> &QuadLattice {
        &self.complement
    }

    /// `[L : L₀ ⊕ Λ]`.
    pub fn index(&self) -> u64 {
        self.index
    }

    fn joint_basis(&self) -> IMat {
        let cols: Vec<Vec<i64>> =
            self.sub_basis.iter().chain(&self.complement_basis).cloned().collect();
        IMat::from_cols(&cols)
    }

    /// Splits an ambient rational vector into `(L₀-coordinates, Λ-coordinates)`.
    pub fn split(&self, x: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
        let inv = self.joint_basis().to_rational().inverse().expect("nonsingular joint basis");
        let y = inv.mul_vec(&x.iter().map(to_q128).collect::<Vec<_>>());
        let y: Vec<Rational> = y.into_iter().map(from_q128).collect();
        let k = self.sub_basis.len();
        (y[..k].to_vec(), y[k..].to_vec())
    }

    /// Ambient coordinates of `B·y₁ + C·y₂`.
    pub fn join(&self, y1: &[Rational], y2: &[Rational]) -> Vec<Rational> {
        let n = self.ambient.rank();
        let mut x = vec![Rational::zero(); n];
        for (col, c) in self.sub_basis.iter().zip(y1).chain(self.complement_basis.iter().zip(y2)) {
            for i in 0..n {
                x[i] += *c * col[i];
            }
        }
        x
    }

    /// Representatives of `(μ + L)/(L₀ ⊕ Λ)` as pairs of cosets.
    pub fn glue_cosets(&self, mu: &Coset) -> Vec<(Coset, Coset)> {
        let m = self.joint_basis();
        let s = smith(&m);
        let d0 = self.sub.discriminant_group();
        let d1 = self.complement.discriminant_group();
        let (base1, base2) = self.split(&mu.rep);
        let n = m.rows();
        let divisors: Vec<i64> = s.diag.iter().map(|&d| to_i64(d)).collect();
        let mut out = Vec::with_capacity(self.index as usize);
        let mut a = vec![0i64; n];
        loop {
            let mut y1 = base1.clone();
            let mut y2 = base2.clone();
            let k = y1.len();
            for i in 0..n {
                if a[i] == 0 {
                    continue;
                }
                let t = Rational::new(a[i], divisors[i]);
                for r in 0..n {
                    let v = t * to_i64(s.v[(r, i)]);
                    if r < k {
                        y1[r] += v;
                    } else {
                        y2[r - k] += v;
                    }
                }
            }
            let c1 = d0.coset(&y1).expect("projection lies in the dual of L0");
            let c2 = d1.coset(&y2).expect("projection lies in the dual of the complement");
            out.push((c1, c2));
            let mut i = n;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                a[i] += 1;
                if a[i] < divisors[i] {
                    break;
                }
                a[i] = 0;
            }
        }
    }

    /// `disc(L₀)·disc(Λ) = disc(L)·index²`.
    pub fn check_index_identity(&self) -> bool {
        let lhs = self.sub.disc() as u128 * self.complement.disc() as u128;
        let rhs = self.ambient.disc() as u128 * (self.index as u128).pow(2);
        lhs == rhs
    }
}

fn to_q128(r: &Rational) -> Q128 {
    Q128::new(*r.numer() as i128, *r.denom() as i128)
}

fn from_q128(r: Q128) -> Rational {
    Rational::new(to_i64(*r.numer()), to_i64(*r.denom()))
}

/// Computes `Λ = L₀^⊥` for the sublattice spanned by the given columns.
pub fn orthogonal_complement(l: &QuadLattice, sub_basis: &[Vec<i64>]) -> Result<SublatticeEmbedding> {
    let n = l.rank();
    for col in sub_basis {
        if col.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: col.len() });
        }
    }
    let k = sub_basis.len();
    if k == 0 || k > n {
        return Err(Error::NonPrimitiveSublattice);
    }
    let cols128: Vec<Vec<i128>> =
        sub_basis.iter().map(|c| c.iter().map(|&x| x as i128).collect()).collect();
    if !is_primitive_system(&cols128) {
        return Err(Error::NonPrimitiveSublattice);
    }
    let g = IMat::from_rows(l.gram());
    let b = IMat::from_cols(sub_basis);
    let sub_gram = b.transpose().mul(&g).mul(&b);
    let sub = QuadLattice::new(rows_i64(&sub_gram))?;
    let complement_basis: Vec<Vec<i64>> = kernel_basis(&b.transpose().mul(&g))
        .into_iter()
        .map(|v| v.into_iter().map(to_i64).collect())
        .collect();
    let complement = if complement_basis.is_empty() {
        QuadLattice::new(Vec::new())?
    } else {
        let c = IMat::from_cols(&complement_basis);
        QuadLattice::new(rows_i64(&c.transpose().mul(&g).mul(&c)))?
    };
    let joint: Vec<Vec<i64>> = sub_basis.iter().chain(&complement_basis).cloned().collect();
    let index = IMat::from_cols(&joint).det().unsigned_abs() as u64;
    Ok(SublatticeEmbedding {
        ambient: l.clone(),
        sub_basis: sub_basis.to_vec(),
        sub,
        complement_basis,
        complement,
        index,
    })
}

fn rows_i64(m: &IMat) -> Vec<Vec<i64>> {
    (0..m.rows()).map(|i| m.row(i).into_iter().map(to_i64).collect()).collect()
}

/// Exact Fincke–Pohst data for `Q(x) = ½·xᵀGx` with `G` positive definite.
struct Pohst {
    diag: Vec<Q128>,
    /// `mu[i][j]` for `j > i`.
    mu: Vec<Vec<Q128>>,
}

impl Pohst {
    fn new(gram: &[Vec<i64>]) -> Self {
        let n = gram.len();
        let mut q: Vec<Vec<Q128>> = gram
            .iter()
            .map(|r| r.iter().map(|&x| Q128::new(x as i128, 2)).collect())
            .collect();
        for i in 0..n {
            for j in i + 1..n {
                q[j][i] = q[i][j];
                q[i][j] = q[i][j] / q[i][i];
            }
            for k in i + 1..n {
                for l in k..n {
                    let v = q[k][i] * q[i][l];
                    q[k][l] -= v;
                }
            }
        }
        let diag = (0..n).map(|i| q[i][i]).collect();
        Pohst { diag, mu: q }
    }
}

/// Visits every `x ∈ shift + ℤⁿ` with `Q(x) ≤ bound`, passing `(x, Q(x))`.
///
/// `gram` must be symmetric positive definite with integer entries (parity unrestricted).
pub fn visit_ball(
    gram: &[Vec<i64>],
    shift: &[Rational],
    bound: Rational,
    visit: &mut dyn FnMut(&[Rational], Rational),
) -> Result<()> {
    let n = gram.len();
    if shift.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: shift.len() });
    }
    if n > 0 && !is_posdef_gram(gram) {
        return Err(Error::IndefiniteEnumeration);
    }
    if bound.is_negative() {
        return Ok(());
    }
    let p = Pohst::new(gram);
    let shift: Vec<Q128> = shift.iter().map(to_q128).collect();
    let mut x = vec![Q128::zero(); n];
    let mut out = vec![Rational::zero(); n];
    descend(&p, &shift, n, to_q128(&bound), Q128::zero(), &mut x, &mut out, visit);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn descend(
    p: &Pohst,
    shift: &[Q128],
    level: usize,
    bound: Q128,
    used: Q128,
    x: &mut Vec<Q128>,
    out: &mut Vec<Rational>,
    visit: &mut dyn FnMut(&[Rational], Rational),
) {
    if level == 0 {
        for (o, v) in out.iter_mut().zip(x.iter()) {
            *o = from_q128(*v);
        }
        visit(out, from_q128(used));
        return;
    }
    let i = level - 1;
    let n = x.len();
    let mut c = Q128::zero();
    for j in i + 1..n {
        c += p.mu[i][j] * x[j];
    }
    let rem = bound - used;
    let qi = p.diag[i];
    // x_i = shift_i + y, need qi·(x_i + c)² ≤ rem
    let center = -(c + shift[i]);
    let radius = (q_to_f64(&rem) / q_to_f64(&qi)).max(0.0).sqrt();
    let cf = q_to_f64(&center);
    let lo = (cf - radius).floor() as i128 - 1;
    let hi = (cf + radius).ceil() as i128 + 1;
    for y in lo..=hi {
        let xi = shift[i] + Q128::from_integer(y);
        let t = xi + c;
        let contrib = qi * t * t;
        if contrib > rem {
            continue;
        }
        x[i] = xi;
        descend(p, shift, i, bound, used + contrib, x, out, visit);
    }
    x[i] = Q128::zero();
}

fn q_to_f64(r: &Q128) -> f64 {
    r.numer().to_f64().unwrap_or(f64::MAX) / r.denom().to_f64().unwrap_or(1.0)
}

fn is_posdef_gram(gram: &[Vec<i64>]) -> bool {
    let n = gram.len();
    (1..=n).all(|k| {
        let minor: Vec<Vec<i64>> = gram[..k].iter().map(|r| r[..k].to_vec()).collect();
        IMat::from_rows(&minor).det() > 0
    })
}

/// All `x ∈ shift + ℤⁿ` with `Q(x) = target`, sorted lexicographically.
pub fn enumerate_shifted(gram: &[Vec<i64>], shift: &[Rational], target: Rational) -> Result<Vec<Vec<Rational>>> {
    let mut found = Vec::new();
    visit_ball(gram, shift, target, &mut |x, q| {
        if q == target {
            found.push(x.to_vec());
        }
    })?;
    found.sort();
    Ok(found)
}

/// `{x ∈ μ + Λ : Q(x) = m}` in lexicographic order.
pub fn enumerate_coset_vectors(lambda: &QuadLattice, mu: &Coset, m: Rational) -> Result<Vec<Vec<Rational>>> {
    if !lambda.is_positive_definite() {
        return Err(Error::IndefiniteEnumeration);
    }
    if m.is_negative() {
        return Ok(Vec::new());
    }
    enumerate_shifted(lambda.gram(), &mu.rep, m)
}

/// Number of vectors of each norm in `μ + Λ` up to `bound`, keyed by `Q(x)`.
pub fn norm_counts(
    lambda: &QuadLattice,
    mu: &Coset,
    bound: Rational,
) -> Result<std::collections::BTreeMap<Rational, u64>> {
    if !lambda.is_positive_definite() {
        return Err(Error::IndefiniteEnumeration);
    }
    let mut counts = std::collections::BTreeMap::new();
    visit_ball(lambda.gram(), &mu.rep, bound, &mut |_, q| {
        *counts.entry(q).or_insert(0u64) += 1;
    })?;
    Ok(counts)
}

/// The discriminant of `C⁺(L₀) = ℤ[ω]` for a negative definite binary lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CliffordDisc {
    pub d: i64,
    pub fundamental: bool,
    pub odd: bool,
}

pub fn even_clifford_binary(l0: &QuadLattice) -> Result<CliffordDisc> {
    if l0.rank() != 2 || !l0.is_negative_definite() {
        return Err(Error::Precondition("even Clifford discriminant needs a negative definite binary lattice".into()));
    }
    let g = l0.gram();
    let d = g[0][1] * g[0][1] - g[0][0] * g[1][1];
    Ok(CliffordDisc { d, fundamental: is_fundamental_discriminant(d), odd: d % 2 != 0 })
}

/// Converts a rational matrix of rational column vectors into ambient form; used by callers
/// that keep `QMat` data.
pub fn qmat_cols(m: &QMat) -> Vec<Vec<Rational>> {
    (0..m.cols()).map(|j| m.col(j).into_iter().map(from_q128).collect()).collect()
}

pub(crate) fn rational_to_q128(r: &Rational) -> Q128 {
    to_q128(r)
}

pub(crate) fn q128_to_rational(r: Q128) -> Rational {
    from_q128(r)
}
