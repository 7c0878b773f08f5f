//! Dense linear-autoencoder decoding `X̂ = A C⁻¹ Aᵀ X`, with `C = AᵀA`.
//!
//! This is deliberately the slow matrix computation. It exists to check the
//! bucket-average decoder against, and runs over any [`Field`], so exact
//! rationals give an entry-for-entry comparison.

use crate::error::{invalid, Error, Result};
use crate::scalar::Field;

/// `N x m` 0/1 indicator matrix with exactly one 1 per row, stored as the
/// column index of each row's 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseMapping {
    rows: Vec<usize>,
    m: usize,
}

impl DenseMapping {
    pub fn new(rows: Vec<usize>, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(invalid("mapping needs at least one bucket"));
        }
        if let Some(r) = rows.iter().position(|&c| c >= m) {
            return Err(invalid(format!(
                "row {r} maps to bucket {} of {m}",
                rows[r]
            )));
        }
        Ok(Self { rows, m })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: (0..n).collect(),
            m: n.max(1),
        }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    /// Row-major `A`.
    pub fn matrix<T: Field>(&self) -> Vec<Vec<T>> {
        self.rows
            .iter()
            .map(|&c| {
                (0..self.m)
                    .map(|j| if j == c { T::one() } else { T::zero() })
                    .collect()
            })
            .collect()
    }
}

fn transpose<T: Field>(a: &[Vec<T>], cols: usize) -> Vec<Vec<T>> {
    (0..cols)
        .map(|j| a.iter().map(|row| row[j].clone()).collect())
        .collect()
}

fn matmul<T: Field>(a: &[Vec<T>], b: &[Vec<T>]) -> Vec<Vec<T>> {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    (0..inner).fold(T::zero(), |acc, k| acc + row[k].clone() * b[k][j].clone())
                })
                .collect()
        })
        .collect()
}

/// Gauss-Jordan inverse. Fails on a singular matrix.
fn invert<T: Field>(mut a: Vec<Vec<T>>) -> Result<Vec<Vec<T>>> {
    let n = a.len();
    let mut inv: Vec<Vec<T>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { T::one() } else { T::zero() })
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::Inconsistent("singular Gram matrix".into()))?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col].clone();
        for j in 0..n {
            a[col][j] = a[col][j].clone() / p.clone();
            inv[col][j] = inv[col][j].clone() / p.clone();
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in 0..n {
                a[r][j] = a[r][j].clone() - f.clone() * a[col][j].clone();
                inv[r][j] = inv[r][j].clone() - f.clone() * inv[col][j].clone();
            }
        }
    }
    Ok(inv)
}

/// Encoder `I = AᵀX`, then decoder `X̂ = A C⁻¹ I`, with the inverse taken
/// over the non-empty buckets only.
pub fn autoencoder_oracle<T: Field>(mapping: &DenseMapping, x: &[T]) -> Result<Vec<T>> {
    if x.len() != mapping.n() {
        return Err(invalid(format!(
            "{} values for {} rows",
            x.len(),
            mapping.n()
        )));
    }
    let a = mapping.matrix::<T>();
    let at = transpose(&a, mapping.m());
    let c = matmul(&at, &a);
    let used: Vec<usize> = (0..mapping.m()).filter(|&j| !c[j][j].is_zero()).collect();

    let xcol: Vec<Vec<T>> = x.iter().map(|v| vec![v.clone()]).collect();
    let encoded = matmul(&at, &xcol);

    let c_used: Vec<Vec<T>> = used
        .iter()
        .map(|&i| used.iter().map(|&j| c[i][j].clone()).collect())
        .collect();
    let c_inv = invert(c_used)?;
    let i_used: Vec<Vec<T>> = used.iter().map(|&j| encoded[j].clone()).collect();
    let a_used: Vec<Vec<T>> = a
        .iter()
        .map(|row| used.iter().map(|&j| row[j].clone()).collect())
        .collect();
    let decoded = matmul(&a_used, &matmul(&c_inv, &i_used));
    Ok(decoded.into_iter().map(|mut r| r.remove(0)).collect())
}
