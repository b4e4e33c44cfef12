//! Exact matrices over `ℤ[ζ_N]` carrying an explicit power of `1/√D`.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::arith::{factorize, lcm, squarefree_part};

/// Integer coefficients of the `n`-th cyclotomic polynomial, lowest degree first.
pub fn cyclotomic_poly(n: usize) -> Vec<i64> {
    fn go(n: usize, memo: &mut HashMap<usize, Vec<i64>>) -> Vec<i64> {
        if let Some(p) = memo.get(&n) {
            return p.clone();
        }
        // x^n − 1
        let mut num = vec![0i64; n + 1];
        num[0] = -1;
        num[n] = 1;
        for d in 1..n {
            if n.is_multiple_of(d) {
                let den = go(d, memo);
                num = divide_exact(&num, &den);
            }
        }
        memo.insert(n, num.clone());
        num
    }
    go(n, &mut HashMap::new())
}

fn divide_exact(num: &[i64], den: &[i64]) -> Vec<i64> {
    let dn = den.len() - 1;
    let mut rem = num.to_vec();
    let mut q = vec![0i64; num.len() - dn];
    for i in (0..q.len()).rev() {
        let c = rem[i + dn];
        q[i] = c;
        for (j, &d) in den.iter().enumerate() {
            rem[i + j] -= c * d;
        }
    }
    debug_assert!(rem.iter().all(|&x| x == 0));
    q
}

/// `ℤ[ζ_N]` realised as `ℤ[x]/(Φ_N)`, elements given as length-`N` coefficient vectors.
#[derive(Clone, Debug)]
pub struct Cyclotomic {
    n: usize,
    phi: Vec<i64>,
}

impl Cyclotomic {
    pub fn new(n: usize) -> Self {
        Cyclotomic { n, phi: cyclotomic_poly(n) }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn zero(&self) -> Vec<i64> {
        vec![0; self.n]
    }

    /// `c·ζ^a`.
    pub fn monomial(&self, a: i64, c: i64) -> Vec<i64> {
        let mut v = self.zero();
        v[a.rem_euclid(self.n as i64) as usize] = c;
        v
    }

    pub fn mul(&self, a: &[i64], b: &[i64]) -> Vec<i64> {
        let mut out = self.zero();
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                if y != 0 {
                    out[(i + j) % self.n] += x * y;
                }
            }
        }
        out
    }

    pub fn conj(&self, a: &[i64]) -> Vec<i64> {
        let mut out = self.zero();
        for (i, &x) in a.iter().enumerate() {
            out[(self.n - i) % self.n] = x;
        }
        out
    }

    /// Remainder modulo `Φ_N`; zero exactly when the element vanishes.
    pub fn reduce(&self, a: &[i64]) -> Vec<i64> {
        let deg = self.phi.len() - 1;
        let mut r = a.to_vec();
        for i in (deg..r.len()).rev() {
            let c = r[i];
            if c == 0 {
                continue;
            }
            for (j, &p) in self.phi.iter().enumerate() {
                r[i - deg + j] -= c * p;
            }
        }
        r.truncate(deg);
        r
    }

    pub fn is_zero(&self, a: &[i64]) -> bool {
        self.reduce(a).iter().all(|&x| x == 0)
    }

    pub fn eq(&self, a: &[i64], b: &[i64]) -> bool {
        let d: Vec<i64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.is_zero(&d)
    }

    pub fn to_complex(&self, a: &[i64]) -> Complex64 {
        a.iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| Complex64::from_polar(c as f64, 2.0 * PI * i as f64 / self.n as f64))
            .sum()
    }

    /// The positive square root of a positive integer `s`, provided `4·sqf(s) | N`.
    pub fn sqrt(&self, s: u64) -> Option<Vec<i64>> {
        let core = squarefree_part(s as i64) as u64;
        let outer = crate::arith::isqrt((s / core) as u128) as i64;
        let mut root = self.monomial(0, outer);
        for (p, _) in factorize(core) {
            let r = self.sqrt_prime(p)?;
            root = self.mul(&root, &r);
        }
        let mut sq = self.mul(&root, &root);
        sq[0] -= s as i64;
        if !self.is_zero(&sq) {
            return None;
        }
        let z = self.to_complex(&root);
        if z.re <= 0.0 || (z.re - (s as f64).sqrt()).abs() > 1e-6 * (s as f64).sqrt().max(1.0) {
            return None;
        }
        Some(root)
    }

    fn sqrt_prime(&self, p: u64) -> Option<Vec<i64>> {
        let n = self.n as i64;
        if p == 2 {
            if n % 8 != 0 {
                return None;
            }
            let e = n / 8;
            let mut v = self.monomial(e, 1);
            v[(n - e) as usize] += 1;
            return Some(v);
        }
        let p = p as i64;
        if n % (4 * p) != 0 {
            return None;
        }
        let step = n / p;
        let mut g = self.zero();
        for a in 1..p {
            g[((a * step) % n) as usize] += crate::arith::legendre(a, p as u64) as i64;
        }
        if p % 4 == 1 {
            Some(g)
        } else {
            // g² = −p, so √p = −i·g
            let minus_i = self.monomial(3 * n / 4, 1);
            Some(self.mul(&minus_i, &g))
        }
    }
}

/// Square matrix with entries `x/√D^k`, `x ∈ ℤ[ζ_N]`.
#[derive(Clone, Debug)]
pub struct CycloMatrix {
    dim: usize,
    /// Power of `1/√D` shared by every entry.
    k: u32,
    entries: Vec<Vec<i64>>,
}

impl CycloMatrix {
    pub fn zeros(ring: &Cyclotomic, dim: usize, k: u32) -> Self {
        CycloMatrix { dim, k, entries: vec![ring.zero(); dim * dim] }
    }

    pub fn identity(ring: &Cyclotomic, dim: usize) -> Self {
        let mut m = Self::zeros(ring, dim, 0);
        for i in 0..dim {
            m.entries[i * dim + i][0] = 1;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sqrt_power(&self) -> u32 {
        self.k
    }

    pub fn entry(&self, row: usize, col: usize) -> &[i64] {
        &self.entries[row * self.dim + col]
    }

    pub fn entry_mut(&mut self, row: usize, col: usize) -> &mut Vec<i64> {
        &mut self.entries[row * self.dim + col]
    }

    pub fn mul(&self, ring: &Cyclotomic, other: &CycloMatrix) -> CycloMatrix {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(ring, n, self.k + other.k);
        for i in 0..n {
            for l in 0..n {
                let a = self.entry(i, l);
                if a.iter().all(|&x| x == 0) {
                    continue;
                }
                for j in 0..n {
                    let b = other.entry(l, j);
                    let target = &mut out.entries[i * n + j];
                    for (s, &x) in a.iter().enumerate() {
                        if x == 0 {
                            continue;
                        }
                        for (t, &y) in b.iter().enumerate() {
                            if y != 0 {
                                target[(s + t) % ring.order()] += x * y;
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> CycloMatrix {
        let n = self.dim;
        let mut t = self.clone();
        for i in 0..n {
            for j in 0..n {
                t.entries[j * n + i] = self.entries[i * n + j].clone();
            }
        }
        t
    }

    pub fn conj(&self, ring: &Cyclotomic) -> CycloMatrix {
        CycloMatrix {
            dim: self.dim,
            k: self.k,
            entries: self.entries.iter().map(|e| ring.conj(e)).collect(),
        }
    }

    pub fn conj_transpose(&self, ring: &Cyclotomic) -> CycloMatrix {
        self.conj(ring).transpose()
    }

    fn scaled(&self, ring: &Cyclotomic, factor: &[i64], extra_k: u32) -> CycloMatrix {
        CycloMatrix {
            dim: self.dim,
            k: self.k + extra_k,
            entries: self.entries.iter().map(|e| ring.mul(e, factor)).collect(),
        }
    }

    /// Exact equality, given `√D` as an element of the ring.
    pub fn exact_eq(&self, ring: &Cyclotomic, other: &CycloMatrix, d: u64, sqrt_d: &[i64]) -> bool {
        if self.dim != other.dim {
            return false;
        }
        let (lo, hi) = if self.k <= other.k { (self, other) } else { (other, self) };
        let gap = hi.k - lo.k;
        // x/√D^a = y/√D^b  ⇔  x·√D^(b−a) = y
        let mut factor = ring.monomial(0, 1);
        if gap % 2 == 1 {
            factor = ring.mul(&factor, sqrt_d);
        }
        let even = (d as i64).pow(gap / 2);
        factor = factor.iter().map(|&x| x * even).collect();
        let lifted = lo.scaled(ring, &factor, gap);
        lifted.entries.iter().zip(&hi.entries).all(|(a, b)| ring.eq(a, b))
    }

    pub fn to_complex(&self, ring: &Cyclotomic, d: u64) -> Vec<Vec<Complex64>> {
        let scale = (d as f64).sqrt().powi(-(self.k as i32));
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| ring.to_complex(self.entry(i, j)) * scale).collect())
            .collect()
    }
}

/// Smallest `N` such that `ℤ[ζ_N]` holds the entries of a Weil representation with the given
/// level and discriminant, together with `√D`.
pub fn weil_ring_order(level: i64, disc: u64) -> usize {
    let mut n = lcm(8, level);
    let core = squarefree_part(disc as i64);
    if core > 1 {
        n = lcm(n, 4 * core);
    }
    n as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cyclotomic_polynomials() {
        assert_eq!(cyclotomic_poly(1), vec![-1, 1]);
        assert_eq!(cyclotomic_poly(4), vec![1, 0, 1]);
        assert_eq!(cyclotomic_poly(8), vec![1, 0, 0, 0, 1]);
        assert_eq!(cyclotomic_poly(12), vec![1, 0, -1, 0, 1]);
        assert_eq!(cyclotomic_poly(7).len(), 7);
    }

    #[test]
    fn square_roots_are_positive_and_exact() {
        for (n, s) in [(8usize, 2u64), (28, 7), (12, 3), (56, 14), (8, 8), (40, 5), (60, 45)] {
            let r = Cyclotomic::new(n);
            let root = r.sqrt(s).unwrap_or_else(|| panic!("no sqrt of {s} in Q(zeta_{n})"));
            assert!((r.to_complex(&root).re - (s as f64).sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn reduction_detects_vanishing_sums() {
        let r = Cyclotomic::new(7);
        let all: Vec<i64> = vec![1; 7];
        assert!(r.is_zero(&all));
        assert!(!r.is_zero(&r.monomial(3, 1)));
    }
}
