//! Compressed sparse row storage and an envelope Cholesky solver with
//! reverse Cuthill-McKee ordering.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::space::DofMap;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the coupling pattern of `dofmap` (sorted columns).
    pub fn with_pattern(dofmap: &DofMap) -> Self {
        let n = dofmap.n_dofs();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for k in 0..dofmap.n_elements() {
            let dofs = dofmap.element(k);
            for &i in dofs {
                rows[i].extend_from_slice(dofs);
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) out of bounds");
            rows[i].push((j, v));
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for row in &mut rows {
            row.sort_by_key(|e| e.0);
            for &(j, v) in row.iter() {
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |p| vals[p])
    }

    /// Adds `v` to entry `(i, j)`, which must be in the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        let p = self.col_idx[r.clone()]
            .binary_search(&j)
            .unwrap_or_else(|_| panic!("entry ({i}, {j}) is outside the sparsity pattern"));
        self.values[r.start + p] += v;
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
            })
            .collect()
    }

    /// `x^T A x`
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// `max |A_ij - A_ji|` over the stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Principal submatrix on the rows/columns where `keep` is true.
    pub fn restrict(&self, keep: &[bool]) -> (CsrMatrix, Vec<usize>) {
        let mut new_index = vec![usize::MAX; self.n];
        let mut old_index = Vec::new();
        for (i, &k) in keep.iter().enumerate() {
            if k {
                new_index[i] = old_index.len();
                old_index.push(i);
            }
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for &i in &old_index {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if keep[j] {
                    col_idx.push(new_index[j]);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        (
            CsrMatrix {
                n: old_index.len(),
                row_ptr,
                col_idx,
                values,
            },
            old_index,
        )
    }
}

/// Reverse Cuthill-McKee permutation: `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(i) = queue.pop_front() {
            order.push(i);
            let mut nbrs: Vec<usize> = a.row(i).0.iter().copied().filter(|&j| !visited[j]).collect();
            nbrs.sort_by_key(|&j| (degree[j], j));
            for j in nbrs {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope (skyline) Cholesky factor `P A P^T = L L^T`.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    /// Row `i` of `L` covers columns `first[i]..=i`, stored contiguously.
    start: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for &j in a.row(old).0 {
                let jn = inv[j];
                if jn < first[new] {
                    first[new] = jn;
                }
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + (i - first[i] + 1));
        }
        let mut data = vec![0.0; start[n]];
        for (new, &old) in perm.iter().enumerate() {
            let (cols, vals) = a.row(old);
            for (&j, &v) in cols.iter().zip(vals) {
                let jn = inv[j];
                if jn <= new {
                    data[start[new] + jn - first[new]] += v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let ri = start[i];
            for j in fi..i {
                let fj = first[j];
                let rj = start[j];
                let lo = fi.max(fj);
                let mut s = data[ri + j - fi];
                let li = &data[ri + lo - fi..ri + j - fi];
                let lj = &data[rj + lo - fj..rj + j - fj];
                s -= li.iter().zip(lj).map(|(x, y)| x * y).sum::<f64>();
                data[ri + j - fi] = s / data[rj + j - fj];
            }
            let row = &data[ri..ri + i - fi];
            let pivot = data[ri + i - fi] - row.iter().map(|x| x * x).sum::<f64>();
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(Error::NotPositiveDefinite { row: perm[i], pivot });
            }
            data[ri + i - fi] = pivot.sqrt();
        }
        Ok(EnvelopeCholesky { perm, first, start, data })
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let (fi, ri) = (self.first[i], self.start[i]);
            let s: f64 = self.data[ri..ri + i - fi].iter().zip(&y[fi..i]).map(|(l, v)| l * v).sum();
            y[i] = (y[i] - s) / self.data[ri + i - fi];
        }
        for i in (0..n).rev() {
            let (fi, ri) = (self.first[i], self.start[i]);
            y[i] /= self.data[ri + i - fi];
            let yi = y[i];
            for (l, v) in self.data[ri..ri + i - fi].iter().zip(&mut y[fi..i]) {
                *v -= l * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves an SPD system by Cholesky with up to two steps of iterative
/// refinement. Returns the solution and its relative residual.
pub fn solve_spd(a: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let chol = EnvelopeCholesky::factor(a)?;
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; b.len()], 0.0));
    }
    let mut x = chol.solve(b);
    let mut rel = f64::INFINITY;
    for _ in 0..3 {
        let r: Vec<f64> = a.mul_vec(&x).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
        rel = norm(&r) / bnorm;
        if rel <= 1e-14 {
            break;
        }
        let dx = chol.solve(&r);
        x.iter_mut().zip(dx).for_each(|(xi, d)| *xi += d);
    }
    let r: Vec<f64> = a.mul_vec(&x).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
    rel = rel.min(norm(&r) / bnorm);
    Ok((x, rel))
}
