//! Small dense integer and rational matrices: Smith normal form, kernels,
//! row spaces, exact determinants and inverses.

use std::ops::{Index, IndexMut};

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

pub type Q128 = Ratio<i128>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IMat {
    rows: usize,
    cols: usize,
    data: Vec<i128>,
}

impl IMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IMat { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    pub fn from_rows<T: Copy + Into<i128>>(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged matrix");
            for (j, &x) in row.iter().enumerate() {
                m[(i, j)] = x.into();
            }
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_cols<T: Copy + Into<i128>>(cols: &[Vec<T>]) -> Self {
        Self::from_rows(cols).transpose()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> Vec<i128> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn col(&self, j: usize) -> Vec<i128> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &IMat) -> IMat {
        assert_eq!(self.cols, other.rows, "shape mismatch");
        let mut out = IMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[i128]) -> Vec<i128> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Exact determinant via fraction-free Bareiss elimination.
    pub fn det(&self) -> i128 {
        assert_eq!(self.rows, self.cols, "determinant of non-square matrix");
        let n = self.rows;
        if n == 0 {
            return 1;
        }
        let mut a = self.clone();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n - 1 {
            if a[(k, k)] == 0 {
                match (k + 1..n).find(|&i| a[(i, k)] != 0) {
                    Some(i) => {
                        a.swap_rows(i, k);
                        sign = -sign;
                    }
                    None => return 0,
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    a[(i, j)] = (a[(i, j)] * a[(k, k)] - a[(i, k)] * a[(k, j)]) / prev;
                }
            }
            prev = a[(k, k)];
        }
        sign * a[(n - 1, n - 1)]
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[dst] += k * row[src]
    fn add_row(&mut self, dst: usize, src: usize, k: i128) {
        for j in 0..self.cols {
            let v = self[(src, j)];
            self[(dst, j)] += k * v;
        }
    }

    /// col[dst] += k * col[src]
    fn add_col(&mut self, dst: usize, src: usize, k: i128) {
        for i in 0..self.rows {
            let v = self[(i, src)];
            self[(i, dst)] += k * v;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            self[(i, j)] = -self[(i, j)];
        }
    }

    pub fn to_rational(&self) -> QMat {
        QMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| Q128::from_integer(x)).collect(),
        }
    }
}

impl Index<(usize, usize)> for IMat {
    type Output = i128;
    fn index(&self, (i, j): (usize, usize)) -> &i128 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for IMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut i128 {
        &mut self.data[i * self.cols + j]
    }
}

/// Smith normal form `U · A · V = D` with `U`, `V` unimodular.
#[derive(Clone, Debug)]
pub struct Smith {
    pub u: IMat,
    pub v: IMat,
    pub v_inv: IMat,
    /// Diagonal of D, length min(rows, cols); nonzero entries first, each dividing the next.
    pub diag: Vec<i128>,
    pub rank: usize,
}

pub fn smith(a: &IMat) -> Smith {
    let (m, n) = (a.rows, a.cols);
    let mut d = a.clone();
    let mut u = IMat::identity(m);
    let mut v = IMat::identity(n);
    let mut v_inv = IMat::identity(n);
    let steps = m.min(n);
    let mut rank = 0;
    for t in 0..steps {
        loop {
            let mut best: Option<(usize, usize)> = None;
            for i in t..m {
                for j in t..n {
                    let x = d[(i, j)];
                    if x != 0 && best.is_none_or(|(bi, bj)| x.abs() < d[(bi, bj)].abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else {
                return finish(u, v, v_inv, d, rank);
            };
            d.swap_rows(t, bi);
            u.swap_rows(t, bi);
            d.swap_cols(t, bj);
            v.swap_cols(t, bj);
            v_inv.swap_rows(t, bj);

            let pivot = d[(t, t)];
            let mut clean = true;
            for i in t + 1..m {
                let q = d[(i, t)].div_euclid(pivot);
                if q != 0 {
                    d.add_row(i, t, -q);
                    u.add_row(i, t, -q);
                }
                if d[(i, t)] != 0 {
                    clean = false;
                }
            }
            for j in t + 1..n {
                let q = d[(t, j)].div_euclid(pivot);
                if q != 0 {
                    d.add_col(j, t, -q);
                    v.add_col(j, t, -q);
                    v_inv.add_row(t, j, q);
                }
                if d[(t, j)] != 0 {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            let offender = (t + 1..m).find(|&i| (t + 1..n).any(|j| d[(i, j)] % pivot != 0));
            if let Some(i) = offender {
                d.add_row(t, i, 1);
                u.add_row(t, i, 1);
                continue;
            }
            break;
        }
        if d[(t, t)] < 0 {
            d.negate_row(t);
            u.negate_row(t);
        }
        rank += 1;
    }
    finish(u, v, v_inv, d, rank)
}

fn finish(u: IMat, v: IMat, v_inv: IMat, d: IMat, rank: usize) -> Smith {
    let diag = (0..d.rows.min(d.cols)).map(|i| d[(i, i)]).collect();
    Smith { u, v, v_inv, diag, rank }
}

/// Saturated ℤ-basis of `{x ∈ ℤⁿ : A x = 0}`.
pub fn kernel_basis(a: &IMat) -> Vec<Vec<i128>> {
    let s = smith(a);
    (s.rank..a.cols).map(|j| s.v.col(j)).collect()
}

/// ℤ-basis of the row space spanned by `rows`.
pub fn row_space_basis(rows: &[Vec<i128>]) -> Vec<Vec<i128>> {
    if rows.is_empty() {
        return Vec::new();
    }
    let a = IMat::from_rows(rows);
    let s = smith(&a);
    (0..s.rank)
        .map(|i| s.v_inv.row(i).into_iter().map(|x| x * s.diag[i]).collect())
        .collect()
}

/// Greatest common divisor of the maximal minors, via Smith form.
pub fn is_primitive_system(cols: &[Vec<i128>]) -> bool {
    let a = IMat::from_cols(cols);
    let s = smith(&a);
    s.rank == cols.len() && s.diag[..s.rank].iter().all(|&x| x == 1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct QMat {
    rows: usize,
    cols: usize,
    data: Vec<Q128>,
}

impl QMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMat { rows, cols, data: vec![Q128::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Q128::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn from_rows(rows: &[Vec<Q128>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                m[(i, j)] = *x;
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &[Q128]) -> Vec<Q128> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).fold(Q128::zero(), |acc, j| acc + self[(i, j)] * v[j]))
            .collect()
    }

    pub fn row(&self, i: usize) -> Vec<Q128> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn col(&self, j: usize) -> Vec<Q128> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> QMat {
        let mut t = QMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Gauss–Jordan inverse; `None` when singular.
    pub fn inverse(&self) -> Option<QMat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = QMat::identity(n);
        for c in 0..n {
            let p = (c..n).find(|&r| !a[(r, c)].is_zero())?;
            if p != c {
                for j in 0..n {
                    a.data.swap(p * n + j, c * n + j);
                    inv.data.swap(p * n + j, c * n + j);
                }
            }
            let piv = a[(c, c)];
            for j in 0..n {
                a[(c, j)] /= piv;
                inv[(c, j)] /= piv;
            }
            for r in 0..n {
                if r != c && !a[(r, c)].is_zero() {
                    let f = a[(r, c)];
                    for j in 0..n {
                        let (x, y) = (a[(c, j)], inv[(c, j)]);
                        a[(r, j)] -= f * x;
                        inv[(r, j)] -= f * y;
                    }
                }
            }
        }
        Some(inv)
    }

    /// Solves `self · x = b` for square nonsingular `self`.
    pub fn solve(&self, b: &[Q128]) -> Option<Vec<Q128>> {
        Some(self.inverse()?.mul_vec(b))
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|x| x.is_integer())
    }

    pub fn max_abs(&self) -> Q128 {
        self.data.iter().map(|x| x.abs()).fold(Q128::zero(), |a, b| if b > a { b } else { a })
    }
}

impl Index<(usize, usize)> for QMat {
    type Output = Q128;
    fn index(&self, (i, j): (usize, usize)) -> &Q128 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for QMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Q128 {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_smith(a: &IMat) {
        let s = smith(a);
        let d = s.u.mul(a).mul(&s.v);
        for i in 0..d.rows() {
            for j in 0..d.cols() {
                if i == j {
                    assert_eq!(d[(i, j)], s.diag[i]);
                } else {
                    assert_eq!(d[(i, j)], 0);
                }
            }
        }
        assert_eq!(s.v.mul(&s.v_inv), IMat::identity(a.cols()));
        assert_eq!(s.u.det().abs(), 1);
        for w in s.diag[..s.rank].windows(2) {
            assert_eq!(w[1] % w[0], 0);
        }
    }

    #[test]
    fn smith_of_small_matrices() {
        check_smith(&IMat::from_rows(&[vec![2i64, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]]));
        check_smith(&IMat::from_rows(&[vec![-2i64, -1], vec![-1, -4]]));
        check_smith(&IMat::from_rows(&[vec![0i64, 1], vec![1, 0]]));
        check_smith(&IMat::from_rows(&[vec![4i64, 6, 0, 2], vec![6, 10, 3, 1]]));
        let s = smith(&IMat::from_rows(&[vec![2i64, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]]));
        assert_eq!(s.diag, vec![2, 6, 12]);
    }

    #[test]
    fn determinants() {
        assert_eq!(IMat::from_rows(&[vec![-2i64, -1], vec![-1, -4]]).det(), 7);
        assert_eq!(IMat::from_rows(&[vec![0i64, 1], vec![1, 0]]).det(), -1);
        let a = IMat::from_rows(&[vec![0i64, 2, 1], vec![1, 0, 3], vec![4, 1, 0]]);
        assert_eq!(a.det(), 25);
    }

    #[test]
    fn kernel_is_saturated() {
        let a = IMat::from_rows(&[vec![2i64, 4, 6]]);
        let k = kernel_basis(&a);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert_eq!(a.mul_vec(v), vec![0]);
        }
        assert!(is_primitive_system(&k));
    }

    #[test]
    fn row_space() {
        let rows = vec![vec![2i128, 0], vec![0, 2], vec![1, 1]];
        let b = row_space_basis(&rows);
        assert_eq!(b.len(), 2);
        assert_eq!(IMat::from_rows(&b).det().abs(), 2);
    }

    #[test]
    fn rational_inverse() {
        let a = IMat::from_rows(&[vec![-2i64, -1], vec![-1, -4]]).to_rational();
        let inv = a.inverse().unwrap();
        assert_eq!(inv[(0, 0)], Q128::new(-4, 7));
        assert_eq!(inv[(0, 1)], Q128::new(1, 7));
    }
}
