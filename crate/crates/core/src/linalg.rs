//! Exact rational linear algebra: fraction-free rank, reduced row echelon
//! form, kernels and determinants, plus a floating-point SVD rank.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type RatMatrix = Vec<Vec<BigRational>>;

/// Scale each row by the lcm of its denominators.
fn integer_rows(m: &RatMatrix) -> Vec<Vec<BigInt>> {
    m.iter()
        .map(|row| {
            let l = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            row.iter().map(|x| (x * BigRational::from_integer(l.clone())).to_integer()).collect()
        })
        .collect()
}

/// Rank by fraction-free (Bareiss) elimination.
pub fn rank(m: &RatMatrix) -> usize {
    let mut a = integer_rows(m);
    let rows = a.len();
    if rows == 0 {
        return 0;
    }
    let cols = a[0].len();
    let mut r = 0;
    let mut prev = BigInt::one();
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        for i in r + 1..rows {
            for j in c + 1..cols {
                let v = &a[r][c] * &a[i][j] - &a[i][c] * &a[r][j];
                a[i][j] = v / &prev;
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[r][c].clone();
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

/// Reduced row echelon form; returns the pivot columns.
pub fn rref(m: &mut RatMatrix) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in c..cols {
                    let d = &f * &m[r][j];
                    m[i][j] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Basis of the right kernel, one vector per free column.
pub fn kernel(m: &RatMatrix, cols: usize) -> Vec<Vec<BigRational>> {
    let mut a = m.clone();
    let pivots = rref(&mut a);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); cols];
            v[f] = BigRational::one();
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -a[r][f].clone();
            }
            v
        })
        .collect()
}

/// Exact determinant of a square matrix.
pub fn det(m: &RatMatrix) -> BigRational {
    let n = m.len();
    let mut a = m.clone();
    let mut d = BigRational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else { return BigRational::zero() };
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= &a[c][c];
        let inv = a[c][c].recip();
        for i in c + 1..n {
            if a[i][c].is_zero() {
                continue;
            }
            let f = &a[i][c] * &inv;
            for j in c..n {
                let v = &f * &a[c][j];
                a[i][j] -= v;
            }
        }
    }
    d
}

pub fn mat_vec(m: &RatMatrix, v: &[BigRational]) -> Vec<BigRational> {
    m.iter()
        .map(|row| row.iter().zip(v).fold(BigRational::zero(), |acc, (a, b)| acc + a * b))
        .collect()
}

/// Numerical rank from singular values of the row-normalized matrix.
pub fn float_rank(m: &[Vec<f64>], threshold: f64) -> usize {
    let rows: Vec<&Vec<f64>> = m.iter().filter(|r| r.iter().any(|x| *x != 0.0)).collect();
    if rows.is_empty() {
        return 0;
    }
    let cols = rows[0].len();
    let mut dm = DMatrix::<f64>::zeros(rows.len(), cols);
    for (i, r) in rows.iter().enumerate() {
        let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (j, x) in r.iter().enumerate() {
            dm[(i, j)] = x / norm;
        }
    }
    dm.singular_values().iter().filter(|s| **s > threshold).count()
}

pub fn to_f64(m: &RatMatrix) -> Vec<Vec<f64>> {
    m.iter()
        .map(|r| r.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect())
        .collect()
}

/// Signs of the eigenvalues of a symmetric matrix: (positive, negative, zero)
/// with `|lambda| <= tol * max|lambda|` counted as zero.
pub fn signature(m: &[Vec<f64>], tol: f64) -> (usize, usize, usize, Vec<f64>) {
    let n = m.len();
    let dm = DMatrix::<f64>::from_fn(n, n, |i, j| 0.5 * (m[i][j] + m[j][i]));
    let ev: Vec<f64> = dm.symmetric_eigenvalues().iter().copied().collect();
    let scale = ev.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let cut = tol * scale.max(f64::MIN_POSITIVE);
    let pos = ev.iter().filter(|x| **x > cut).count();
    let neg = ev.iter().filter(|x| **x < -cut).count();
    (pos, neg, n - pos - neg, ev)
}

pub fn is_zero_vec(v: &[BigRational]) -> bool {
    v.iter().all(|x| x.is_zero())
}

pub fn abs_max(v: &[BigRational]) -> BigRational {
    v.iter().map(|x| x.abs()).max().unwrap_or_else(BigRational::zero)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn m(rows: &[&[i64]]) -> RatMatrix {
        rows.iter().map(|r| r.iter().map(|x| q(*x)).collect()).collect()
    }

    #[test]
    fn rank_and_kernel() {
        let a = m(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        assert_eq!(rank(&a), 2);
        let k = kernel(&a, 3);
        assert_eq!(k.len(), 1);
        assert!(is_zero_vec(&mat_vec(&a, &k[0])));
    }

    #[test]
    fn determinant() {
        let a = m(&[&[2, 1], &[1, 3]]);
        assert_eq!(det(&a), q(5));
        let b = m(&[&[0, 1], &[1, 0]]);
        assert_eq!(det(&b), q(-1));
    }

    #[test]
    fn rational_entries() {
        let half = BigRational::new(1.into(), 2.into());
        let a = vec![vec![half.clone(), q(1)], vec![q(1), q(2)]];
        assert_eq!(rank(&a), 1);
        assert_eq!(float_rank(&to_f64(&a), 1e-8), 1);
    }

    #[test]
    fn signature_of_indefinite() {
        let (p, n, z, _) = signature(&[vec![0.0, 1.0], vec![1.0, 0.0]], 1e-9);
        assert_eq!((p, n, z), (1, 1, 0));
    }
}
