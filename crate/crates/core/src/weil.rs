//! The Weil representation `ω_L = ρ_{−L}` on functions on `L^∨/L`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::Rational;
use crate::cyclo::{weil_ring_order, CycloMatrix, Cyclotomic};
use crate::error::{Error, Result};
use crate::lattice::{Coset, DiscriminantGroup, QuadLattice};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gen {
    S,
    T,
    TInv,
}

/// A word `g₁g₂…g_k` in the generators, standing for the product in that order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct MetaWord(pub Vec<Gen>);

impl MetaWord {
    pub fn new(gens: Vec<Gen>) -> Self {
        MetaWord(gens)
    }

    pub fn gens(&self) -> &[Gen] {
        &self.0
    }

    /// Cancels adjacent `T T⁻¹` pairs.
    pub fn reduced(&self) -> MetaWord {
        let mut out: Vec<Gen> = Vec::new();
        for &g in &self.0 {
            match (out.last(), g) {
                (Some(Gen::T), Gen::TInv) | (Some(Gen::TInv), Gen::T) => {
                    out.pop();
                }
                _ => out.push(g),
            }
        }
        MetaWord(out)
    }

    /// The image in `SL₂(ℤ)` as `[[a,b],[c,d]]`.
    pub fn matrix(&self) -> [[i64; 2]; 2] {
        let mut m = [[1, 0], [0, 1]];
        for g in &self.0 {
            let h = match g {
                Gen::S => [[0, -1], [1, 0]],
                Gen::T => [[1, 1], [0, 1]],
                Gen::TInv => [[1, -1], [0, 1]],
            };
            m = [
                [m[0][0] * h[0][0] + m[0][1] * h[1][0], m[0][0] * h[0][1] + m[0][1] * h[1][1]],
                [m[1][0] * h[0][0] + m[1][1] * h[1][0], m[1][0] * h[0][1] + m[1][1] * h[1][1]],
            ];
        }
        m
    }
}

impl FromStr for MetaWord {
    type Err = Error;

    /// `S`, `T` and `t` (for `T⁻¹`); spaces and commas ignored.
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !c.is_whitespace() && *c != ',')
            .map(|c| match c {
                'S' => Ok(Gen::S),
                'T' => Ok(Gen::T),
                't' => Ok(Gen::TInv),
                other => Err(Error::Input(format!("unknown generator '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(MetaWord)
    }
}

impl fmt::Display for MetaWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.0 {
            f.write_str(match g {
                Gen::S => "S",
                Gen::T => "T",
                Gen::TInv => "t",
            })?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Omega,
    Conjugate,
    Contragredient,
}

#[derive(Clone, Debug)]
pub struct WeilRep {
    disc: DiscriminantGroup,
    sig8: u8,
    ring: Cyclotomic,
    sqrt_d: Vec<i64>,
    cosets: Vec<Coset>,
    neg: Vec<usize>,
}

impl WeilRep {
    pub fn new(lattice: &QuadLattice) -> Result<Self> {
        Self::from_group(lattice.discriminant_group(), lattice.sig8())
    }

    /// Weil representation attached to a discriminant form and a signature class mod 8.
    pub fn from_group(disc: DiscriminantGroup, sig8: u8) -> Result<Self> {
        let order = disc.order() as u64;
        let ring = Cyclotomic::new(weil_ring_order(disc.level(), order));
        let sqrt_d = ring
            .sqrt(order)
            .ok_or_else(|| Error::Precondition("square root of the group order not found".into()))?;
        let cosets = disc.elements();
        let neg = cosets.iter().map(|c| disc.index_of(&disc.neg(c))).collect();
        Ok(WeilRep { sig8: sig8 % 8, disc, ring, sqrt_d, cosets, neg })
    }

    pub fn disc(&self) -> &DiscriminantGroup {
        &self.disc
    }

    pub fn dim(&self) -> usize {
        self.cosets.len()
    }

    pub fn sig8(&self) -> u8 {
        self.sig8
    }

    pub fn ring(&self) -> &Cyclotomic {
        &self.ring
    }

    pub fn cosets(&self) -> &[Coset] {
        &self.cosets
    }

    /// Index of `−μ` for the coset at index `i`.
    pub fn neg_index(&self, i: usize) -> usize {
        self.neg[i]
    }

    fn root(&self, x: Rational) -> Vec<i64> {
        let n = self.ring.order() as i64;
        let a = x * n;
        debug_assert!(a.is_integer());
        self.ring.monomial(a.to_integer(), 1)
    }

    fn eighth(&self, k: i64) -> Rational {
        Rational::new(k, 8)
    }

    /// `ω(T)φ_μ = e(−Q(μ))φ_μ`.
    pub fn omega_t(&self) -> CycloMatrix {
        self.diagonal(-1)
    }

    pub fn omega_t_inv(&self) -> CycloMatrix {
        self.diagonal(1)
    }

    fn diagonal(&self, sign: i64) -> CycloMatrix {
        let mut m = CycloMatrix::zeros(&self.ring, self.dim(), 0);
        for (i, c) in self.cosets.iter().enumerate() {
            *m.entry_mut(i, i) = self.root(self.disc.q(c) * sign);
        }
        m
    }

    /// `ω(S)_{ν,μ} = e(sig/8)·e([μ,ν])/√|D|`.
    pub fn omega_s(&self) -> CycloMatrix {
        let n = self.dim();
        let mut m = CycloMatrix::zeros(&self.ring, n, 1);
        let phase = self.eighth(self.sig8 as i64);
        for (mu_i, mu) in self.cosets.iter().enumerate() {
            for (nu_i, nu) in self.cosets.iter().enumerate() {
                *m.entry_mut(nu_i, mu_i) = self.root(phase + self.disc.b(mu, nu));
            }
        }
        m
    }

    /// `ω(Z)φ_μ = e(sig/4)φ_{−μ}`.
    pub fn omega_z(&self) -> CycloMatrix {
        let n = self.dim();
        let mut m = CycloMatrix::zeros(&self.ring, n, 0);
        let phase = self.eighth(2 * self.sig8 as i64);
        for mu_i in 0..n {
            *m.entry_mut(self.neg[mu_i], mu_i) = self.root(phase);
        }
        m
    }

    pub fn generator(&self, g: Gen) -> CycloMatrix {
        match g {
            Gen::S => self.omega_s(),
            Gen::T => self.omega_t(),
            Gen::TInv => self.omega_t_inv(),
        }
    }

    /// The generator matrix in the requested variant.
    pub fn variant_generator(&self, variant: Variant, g: Gen) -> CycloMatrix {
        let m = self.generator(g);
        match variant {
            Variant::Omega => m,
            Variant::Conjugate => m.conj(&self.ring),
            // inverse-transpose; the inverse of a unitary generator is its adjoint
            Variant::Contragredient => m.conj_transpose(&self.ring).transpose(),
        }
    }

    pub fn word_matrix(&self, variant: Variant, word: &MetaWord) -> CycloMatrix {
        word.gens().iter().fold(CycloMatrix::identity(&self.ring, self.dim()), |acc, &g| {
            acc.mul(&self.ring, &self.variant_generator(variant, g))
        })
    }

    pub fn exact_eq(&self, a: &CycloMatrix, b: &CycloMatrix) -> bool {
        a.exact_eq(&self.ring, b, self.dim() as u64, &self.sqrt_d)
    }

    pub fn is_unitary(&self, m: &CycloMatrix) -> bool {
        let p = m.conj_transpose(&self.ring).mul(&self.ring, m);
        self.exact_eq(&p, &CycloMatrix::identity(&self.ring, self.dim()))
    }

    /// `e((p−q)/2)` times the identity, the expected value of `ω(Z)²`.
    pub fn z_squared_expected(&self) -> CycloMatrix {
        let mut m = CycloMatrix::identity(&self.ring, self.dim());
        let phase = self.root(self.eighth(4 * self.sig8 as i64));
        for i in 0..self.dim() {
            *m.entry_mut(i, i) = phase.clone();
        }
        m
    }

    pub fn complex_generator(&self, variant: Variant, g: Gen) -> Vec<Vec<Complex64>> {
        self.variant_generator(variant, g).to_complex(&self.ring, self.dim() as u64)
    }

    /// `ρ(g₁)⋯ρ(g_k)·v` for the chosen variant `ρ`.
    pub fn apply(&self, variant: Variant, word: &MetaWord, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        let mut out = v.to_vec();
        for &g in word.gens().iter().rev() {
            let m = self.complex_generator(variant, g);
            out = m.iter().map(|row| row.iter().zip(&out).map(|(a, b)| a * b).sum()).collect();
        }
        Ok(out)
    }
}
