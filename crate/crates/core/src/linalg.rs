//! Small dense linear algebra: exact determinants over commutative rings,
//! rational rank, and complex/real solvers used by the numerical code.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::poly::SparsePoly;

/// The operations the exact determinant routines need.
pub trait RingElem: Clone {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn is_zero_elem(&self) -> bool;
    fn add_elem(&self, other: &Self) -> Self;
    fn sub_elem(&self, other: &Self) -> Self;
    fn mul_elem(&self, other: &Self) -> Self;
    fn neg_elem(&self) -> Self;
    /// `self / other` when the quotient exists in the ring.
    fn div_exact(&self, other: &Self) -> Option<Self>;
}

impl RingElem for BigRational {
    fn zero_like(&self) -> Self {
        BigRational::zero()
    }
    fn one_like(&self) -> Self {
        BigRational::one()
    }
    fn is_zero_elem(&self) -> bool {
        self.is_zero()
    }
    fn add_elem(&self, other: &Self) -> Self {
        self + other
    }
    fn sub_elem(&self, other: &Self) -> Self {
        self - other
    }
    fn mul_elem(&self, other: &Self) -> Self {
        self * other
    }
    fn neg_elem(&self) -> Self {
        -self.clone()
    }
    fn div_exact(&self, other: &Self) -> Option<Self> {
        if other.is_zero() {
            None
        } else {
            Some(self / other)
        }
    }
}

impl RingElem for SparsePoly {
    fn zero_like(&self) -> Self {
        SparsePoly::zero(self.arena())
    }
    fn one_like(&self) -> Self {
        SparsePoly::one(self.arena())
    }
    fn is_zero_elem(&self) -> bool {
        self.is_zero()
    }
    fn add_elem(&self, other: &Self) -> Self {
        self + other
    }
    fn sub_elem(&self, other: &Self) -> Self {
        self - other
    }
    fn mul_elem(&self, other: &Self) -> Self {
        self * other
    }
    fn neg_elem(&self) -> Self {
        -self
    }
    fn div_exact(&self, other: &Self) -> Option<Self> {
        self.exact_div(other).ok()
    }
}

impl RingElem for Complex64 {
    fn zero_like(&self) -> Self {
        Complex64::zero()
    }
    fn one_like(&self) -> Self {
        Complex64::one()
    }
    fn is_zero_elem(&self) -> bool {
        self.is_zero()
    }
    fn add_elem(&self, other: &Self) -> Self {
        self + other
    }
    fn sub_elem(&self, other: &Self) -> Self {
        self - other
    }
    fn mul_elem(&self, other: &Self) -> Self {
        self * other
    }
    fn neg_elem(&self) -> Self {
        -self
    }
    fn div_exact(&self, other: &Self) -> Option<Self> {
        if other.is_zero() {
            None
        } else {
            Some(self / other)
        }
    }
}

fn check_square<T>(m: &[Vec<T>]) {
    let n = m.len();
    assert!(m.iter().all(|r| r.len() == n), "matrix must be square");
}

/// Cofactor (Laplace) expansion, memoized over the set of used columns:
/// `O(2^n n)` ring multiplications.
pub fn det_laplace<T: RingElem>(m: &[Vec<T>]) -> T {
    check_square(m);
    let n = m.len();
    assert!(n > 0, "empty matrix");
    assert!(n <= 20, "cofactor expansion is limited to n <= 20");
    let proto = &m[0][0];
    let mut dp: Vec<Option<T>> = vec![None; 1 << n];
    dp[0] = Some(proto.one_like());
    for mask in 0usize..(1 << n) {
        let Some(acc) = dp[mask].take() else { continue };
        let row = mask.count_ones() as usize;
        if row == n {
            dp[mask] = Some(acc);
            continue;
        }
        for c in 0..n {
            if mask & (1 << c) != 0 || m[row][c].is_zero_elem() {
                continue;
            }
            // columns already used to the right of c give the inversion count
            let inversions = (mask >> (c + 1)).count_ones();
            let mut term = acc.mul_elem(&m[row][c]);
            if inversions % 2 == 1 {
                term = term.neg_elem();
            }
            let next = mask | (1 << c);
            dp[next] = Some(match dp[next].take() {
                Some(v) => v.add_elem(&term),
                None => term,
            });
        }
    }
    dp[(1 << n) - 1].take().unwrap_or_else(|| proto.zero_like())
}

/// Fraction-free Bareiss elimination; every division is exact.
pub fn det_bareiss<T: RingElem>(m: &[Vec<T>]) -> T {
    check_square(m);
    let n = m.len();
    assert!(n > 0, "empty matrix");
    let mut a: Vec<Vec<T>> = m.to_vec();
    let mut sign_flip = false;
    let mut prev = a[0][0].one_like();
    for k in 0..n.saturating_sub(1) {
        if a[k][k].is_zero_elem() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero_elem()) {
                Some(i) => {
                    a.swap(i, k);
                    sign_flip = !sign_flip;
                }
                None => return a[0][0].zero_like(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = a[k][k]
                    .mul_elem(&a[i][j])
                    .sub_elem(&a[i][k].mul_elem(&a[k][j]));
                a[i][j] = num
                    .div_exact(&prev)
                    .expect("Bareiss division must be exact in an integral domain");
            }
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    if sign_flip {
        d.neg_elem()
    } else {
        d
    }
}

/// Rank over the rationals by Gaussian elimination.
pub fn rational_rank(m: &[Vec<BigRational>]) -> usize {
    let mut a: Vec<Vec<BigRational>> = m.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| !a[r][c].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        let pivot = a[rank][c].clone();
        for r in 0..rows {
            if r != rank && !a[r][c].is_zero() {
                let f = &a[r][c] / &pivot;
                for k in c..cols {
                    let delta = &f * &a[rank][k];
                    a[r][k] -= delta;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Solves `A x = b` in place by LU with partial pivoting (row-major `A`).
/// Rows are equilibrated first; returns `None` when a pivot of the scaled
/// matrix falls below `1e-13`. Magnitudes are `|re| + |im|` throughout.
pub fn complex_solve(a: &mut [Complex64], b: &mut [Complex64], n: usize) -> Option<()> {
    // equilibrate rows so the pivot threshold is relative to each equation
    for i in 0..n {
        let m = a[i * n..(i + 1) * n]
            .iter()
            .map(|z| z.l1_norm())
            .fold(0.0, f64::max);
        if m == 0.0 || !m.is_finite() {
            return None;
        }
        let r = 1.0 / m;
        for z in &mut a[i * n..(i + 1) * n] {
            *z *= r;
        }
        b[i] *= r;
    }
    let tiny = 1e-13;
    for k in 0..n {
        let mut p = k;
        let mut best = a[k * n + k].l1_norm();
        for i in k + 1..n {
            let v = a[i * n + k].l1_norm();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best <= tiny {
            return None;
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            b.swap(k, p);
        }
        let inv = a[k * n + k].inv();
        for i in k + 1..n {
            let f = a[i * n + k] * inv;
            if f == Complex64::zero() {
                continue;
            }
            for j in k + 1..n {
                let v = a[k * n + j];
                a[i * n + j] -= f * v;
            }
            let bk = b[k];
            b[i] -= f * bk;
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in k + 1..n {
            s -= a[k * n + j] * b[j];
        }
        b[k] = s / a[k * n + k];
    }
    Some(())
}

/// Smallest pivot magnitude of an LU factorization with full pivoting.
pub fn complex_min_pivot(a: &[Complex64], n: usize) -> f64 {
    let mut a = a.to_vec();
    let mut smallest = f64::INFINITY;
    let mut rows: Vec<usize> = (0..n).collect();
    let mut cols: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut pi, mut pj, mut best) = (k, k, -1.0);
        for i in k..n {
            for j in k..n {
                let v = a[rows[i] * n + cols[j]].norm();
                if v > best {
                    best = v;
                    pi = i;
                    pj = j;
                }
            }
        }
        rows.swap(k, pi);
        cols.swap(k, pj);
        smallest = smallest.min(best);
        if best == 0.0 {
            return 0.0;
        }
        let piv = a[rows[k] * n + cols[k]];
        for i in k + 1..n {
            let f = a[rows[i] * n + cols[k]] / piv;
            for j in k + 1..n {
                let v = a[rows[k] * n + cols[j]];
                a[rows[i] * n + cols[j]] -= f * v;
            }
        }
    }
    smallest
}

/// Cholesky factor `L` of a symmetric matrix, or `None` if some pivot is
/// below `pivot_tol` (relative to the largest diagonal entry).
pub fn cholesky(a: &[Vec<f64>], pivot_tol: f64) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let scale = (0..n)
        .map(|i| a[i][i].abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        // NaN must fail as well
        if d.partial_cmp(&(pivot_tol * scale)) != Some(core::cmp::Ordering::Greater) {
            return None;
        }
        let djj = libm::sqrt(d);
        l[j][j] = djj;
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / djj;
        }
    }
    Some(l)
}

/// Inverse of a symmetric positive definite matrix via its Cholesky factor.
pub fn spd_inverse(a: &[Vec<f64>], pivot_tol: f64) -> Option<Vec<Vec<f64>>> {
    let l = cholesky(a, pivot_tol)?;
    let n = a.len();
    let mut inv = vec![vec![0.0; n]; n];
    for c in 0..n {
        // forward then backward substitution on the unit vector e_c
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= l[i][k] * y[k];
            }
            y[i] = s / l[i][i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[k][i] * inv[k][c];
            }
            inv[i][c] = s / l[i][i];
        }
    }
    Some(inv)
}

pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    let inner = b.len();
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for k in 0..inner {
            let aik = a[i][k];
            for j in 0..m {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{integer, VarArena};

    fn q(v: &[&[i64]]) -> Vec<Vec<BigRational>> {
        v.iter()
            .map(|r| r.iter().map(|&x| integer(x)).collect())
            .collect()
    }

    #[test]
    fn rational_determinants_agree() {
        let m = q(&[
            &[2, -1, 0, 3],
            &[1, 4, 2, -2],
            &[0, 5, 1, 1],
            &[7, 0, -3, 2],
        ]);
        let d1 = det_laplace(&m);
        let d2 = det_bareiss(&m);
        assert_eq!(d1, d2);
        let zero_pivot = q(&[&[0, 1], &[1, 0]]);
        assert_eq!(det_bareiss(&zero_pivot), integer(-1));
        assert_eq!(det_laplace(&zero_pivot), integer(-1));
        let singular = q(&[&[1, 2], &[2, 4]]);
        assert_eq!(det_bareiss(&singular), integer(0));
    }

    #[test]
    fn polynomial_determinants_agree() {
        let a = VarArena::new(["x", "y", "z"]).unwrap();
        let (x, y, z) = (a.var(0), a.var(1), a.var(2));
        let m = vec![
            vec![&x + &y, -&y, SparsePoly::zero(&a)],
            vec![-&y, &y + &z, -&z],
            vec![SparsePoly::zero(&a), -&z, &z + &x],
        ];
        assert_eq!(det_laplace(&m), det_bareiss(&m));
    }

    #[test]
    fn rank() {
        assert_eq!(rational_rank(&q(&[&[1, 2, 3], &[2, 4, 6], &[0, 1, 1]])), 2);
        assert_eq!(rational_rank(&q(&[&[0, 0], &[0, 0]])), 0);
    }

    #[test]
    fn complex_system() {
        let mut a = vec![
            Complex64::new(1.0, 1.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(3.0, 0.5),
        ];
        let orig = a.clone();
        let x = [Complex64::new(0.5, -0.2), Complex64::new(-1.0, 2.0)];
        let mut b = vec![
            orig[0] * x[0] + orig[1] * x[1],
            orig[2] * x[0] + orig[3] * x[1],
        ];
        complex_solve(&mut a, &mut b, 2).unwrap();
        assert!((b[0] - x[0]).norm() < 1e-12 && (b[1] - x[1]).norm() < 1e-12);
        let mut s = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(4.0, 0.0),
        ];
        let mut rhs = vec![Complex64::zero(); 2];
        assert!(complex_solve(&mut s, &mut rhs, 2).is_none());
        assert!(complex_min_pivot(&orig, 2) > 0.1);
    }

    #[test]
    fn cholesky_and_inverse() {
        let a = vec![vec![4.0, 2.0], vec![2.0, 3.0]];
        let inv = spd_inverse(&a, 1e-10).unwrap();
        let id = mat_mul(&a, &inv);
        assert!((id[0][0] - 1.0).abs() < 1e-12 && id[0][1].abs() < 1e-12);
        assert!(cholesky(&[vec![1.0, 2.0], vec![2.0, 1.0]], 1e-10).is_none());
    }
}
