//! Basis factorization for the revised simplex.
//!
//! The basis is factored densely (`P B Q = L U`) with threshold partial
//! pivoting, then `L` and `U` are compressed to sparse storage so the
//! triangular solves only touch nonzeros. Basis changes between
//! refactorizations are kept as a product-form eta file.

/// Relative threshold for accepting a pivot candidate in a column.
const PIVOT_THRESHOLD: f64 = 0.1;
/// Absolute magnitude below which a column is treated as dependent.
const SINGULAR_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Singular {
    /// Basis position whose column could not be pivoted.
    pub position: usize,
}

#[derive(Debug, Clone)]
struct LuFactor {
    col_order: Vec<usize>,
    row_perm: Vec<usize>,
    l_cols: Vec<Vec<(usize, f64)>>,
    u_diag: Vec<f64>,
    u_rows: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone)]
struct Eta {
    position: usize,
    pivot: f64,
    others: Vec<(usize, f64)>,
}

/// Factored basis matrix plus eta updates.
#[derive(Debug, Clone)]
pub(crate) struct BasisFactor {
    m: usize,
    lu: LuFactor,
    etas: Vec<Eta>,
}

impl BasisFactor {
    /// Factor the basis whose `k`-th column is `columns[k]` (sparse, by row).
    pub fn factor(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self, Singular> {
        debug_assert_eq!(columns.len(), m);
        let lu = factor_dense(m, columns)?;
        Ok(Self { m, lu, etas: Vec::new() })
    }

    pub fn num_updates(&self) -> usize {
        self.etas.len()
    }

    /// Solve `B x = rhs`, `rhs` indexed by row, result by basis position.
    pub fn ftran(&self, rhs: &mut [f64]) {
        let lu = &self.lu;
        let m = self.m;
        let mut w: Vec<f64> = lu.row_perm.iter().map(|&r| rhs[r]).collect();
        for k in 0..m {
            let wk = w[k];
            if wk != 0.0 {
                for &(i, l) in &lu.l_cols[k] {
                    w[i] -= l * wk;
                }
            }
        }
        for k in (0..m).rev() {
            let mut s = w[k];
            for &(j, u) in &lu.u_rows[k] {
                s -= u * w[j];
            }
            w[k] = s / lu.u_diag[k];
        }
        for (k, &pos) in lu.col_order.iter().enumerate() {
            rhs[pos] = w[k];
        }
        for eta in &self.etas {
            let xr = rhs[eta.position] / eta.pivot;
            if xr != 0.0 {
                for &(i, a) in &eta.others {
                    rhs[i] -= a * xr;
                }
            }
            rhs[eta.position] = xr;
        }
    }

    /// Solve `B' y = c`, `c` indexed by basis position, result by row.
    pub fn btran(&self, c: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut s = c[eta.position];
            for &(i, a) in &eta.others {
                s -= a * c[i];
            }
            c[eta.position] = s / eta.pivot;
        }
        let lu = &self.lu;
        let m = self.m;
        let mut w: Vec<f64> = lu.col_order.iter().map(|&pos| c[pos]).collect();
        for k in 0..m {
            let wk = w[k] / lu.u_diag[k];
            w[k] = wk;
            if wk != 0.0 {
                for &(j, u) in &lu.u_rows[k] {
                    w[j] -= u * wk;
                }
            }
        }
        for k in (0..m).rev() {
            let mut s = w[k];
            for &(i, l) in &lu.l_cols[k] {
                s -= l * w[i];
            }
            w[k] = s;
        }
        for (k, &r) in lu.row_perm.iter().enumerate() {
            c[r] = w[k];
        }
    }

    /// Record the replacement of basis column `position` by a column whose
    /// FTRAN image is `alpha`.
    pub fn update(&mut self, position: usize, alpha: &[f64]) {
        let others = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &a)| i != position && a != 0.0)
            .map(|(i, &a)| (i, a))
            .collect();
        self.etas.push(Eta { position, pivot: alpha[position], others });
    }
}

fn factor_dense(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<LuFactor, Singular> {
    // Sparsest columns first: slack columns pivot without fill.
    let mut col_order: Vec<usize> = (0..m).collect();
    col_order.sort_by_key(|&k| (columns[k].len(), k));

    let mut a = vec![0.0f64; m * m];
    let mut row_nnz = vec![0usize; m];
    for (k, &pos) in col_order.iter().enumerate() {
        for &(i, v) in &columns[pos] {
            if a[i * m + k] == 0.0 && v != 0.0 {
                row_nnz[i] += 1;
            }
            a[i * m + k] += v;
        }
    }
    let mut row_perm: Vec<usize> = (0..m).collect();
    let mut u_rows = Vec::with_capacity(m);
    let mut u_diag = Vec::with_capacity(m);
    let mut pivot_row_nz: Vec<usize> = Vec::with_capacity(m);

    for k in 0..m {
        let mut amax = 0.0f64;
        for i in k..m {
            amax = amax.max(a[i * m + k].abs());
        }
        if amax < SINGULAR_TOL {
            return Err(Singular { position: col_order[k] });
        }
        let mut best = usize::MAX;
        let mut best_count = usize::MAX;
        for i in k..m {
            let v = a[i * m + k].abs();
            if v >= PIVOT_THRESHOLD * amax && row_nnz[i] < best_count {
                best = i;
                best_count = row_nnz[i];
            }
        }
        if best != k {
            let (lo, hi) = a.split_at_mut(best * m);
            lo[k * m..k * m + m].swap_with_slice(&mut hi[..m]);
            row_perm.swap(k, best);
            row_nnz.swap(k, best);
        }
        let pivot = a[k * m + k];
        pivot_row_nz.clear();
        for j in k + 1..m {
            if a[k * m + j] != 0.0 {
                pivot_row_nz.push(j);
            }
        }
        for i in k + 1..m {
            let aik = a[i * m + k];
            if aik == 0.0 {
                continue;
            }
            let l = aik / pivot;
            a[i * m + k] = l;
            for &j in &pivot_row_nz {
                let idx = i * m + j;
                if a[idx] == 0.0 {
                    row_nnz[i] += 1;
                }
                a[idx] -= l * a[k * m + j];
            }
        }
        u_diag.push(pivot);
        u_rows.push(pivot_row_nz.iter().map(|&j| (j, a[k * m + j])).filter(|&(_, v)| v != 0.0).collect());
    }

    let mut l_cols = vec![Vec::new(); m];
    for (k, col) in l_cols.iter_mut().enumerate() {
        for i in k + 1..m {
            let v = a[i * m + k];
            if v != 0.0 {
                col.push((i, v));
            }
        }
    }
    Ok(LuFactor { col_order, row_perm, l_cols, u_diag, u_rows })
}
