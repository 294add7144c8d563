//! Compressed-row sparse systems and the solvers used for the pressure and
//! concentration equations.
//!
//! Three solution routes are available: preconditioned Krylov iterations
//! (conjugate gradients for symmetric systems, BiCGStab otherwise), a banded
//! LU factorization with partial pivoting, and a dense LU that serves as the
//! reference for small systems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a square matrix from `(row, col, value)` triplets. Duplicates
    /// are summed and columns are sorted within each row.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; n + 1];
        for &(r, c, _) in triplets {
            if r >= n || c >= n {
                return Err(Error::IndexOutOfRange {
                    row: r,
                    col: c,
                    dim: n,
                });
            }
            counts[r + 1] += 1;
        }
        for i in 0usize..n {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut entries = vec![(0usize, 0.0f64); triplets.len()];
        for &(r, c, v) in triplets {
            entries[next[r]] = (c, v);
            next[r] += 1;
        }

        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for r in 0..n {
            let row = &mut entries[counts[r]..counts[r + 1]];
            row.sort_by_key(|e| e.0);
            for &(c, v) in row.iter() {
                if cols.len() > row_ptr[r] && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(CsrMatrix {
            n,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n,
            row_ptr: (0..=n).collect(),
            cols: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[range.clone()].binary_search(&c) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *out = acc;
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n]; self.n];
        for (r, row) in a.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        a
    }

    /// Lower and upper bandwidths.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut lower = 0;
        let mut upper = 0;
        for r in 0..self.n {
            for (c, _) in self.row(r) {
                if c < r {
                    lower = lower.max(r - c);
                } else {
                    upper = upper.max(c - r);
                }
            }
        }
        (lower, upper)
    }

    /// Symmetric permutation `B[i][j] = A[perm[i]][perm[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> CsrMatrix {
        let mut inverse = vec![0; self.n];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let mut trip = Vec::with_capacity(self.nnz());
        for (new_r, &old_r) in perm.iter().enumerate() {
            for (c, v) in self.row(old_r) {
                trip.push((new_r, inverse[c], v));
            }
        }
        CsrMatrix::from_triplets(self.n, &trip).expect("permutation keeps indices in range")
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|r| {
            self.row(r)
                .all(|(c, v)| (v - self.get(c, r)).abs() <= tol * v.abs().max(1e-300))
        })
    }
}

/// A square system `A x = b`.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Set by assemblers that know the matrix is symmetric positive definite.
    pub symmetric: bool,
}

impl SparseSystem {
    pub fn new(matrix: CsrMatrix, rhs: Vec<f64>) -> Self {
        assert_eq!(matrix.dim(), rhs.len());
        SparseSystem {
            matrix,
            rhs,
            symmetric: false,
        }
    }

    pub fn assemble(n: usize, triplets: &[(usize, usize, f64)], rhs: Vec<f64>) -> Result<Self> {
        if rhs.len() != n {
            return Err(Error::config(format!(
                "right-hand side has length {} but system dimension is {n}",
                rhs.len()
            )));
        }
        Ok(Self::new(CsrMatrix::from_triplets(n, triplets)?, rhs))
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut ax = vec![0.0; self.dim()];
        self.matrix.mul_vec(x, &mut ax);
        self.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect()
    }

    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        norm2(&self.residual(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    /// CG for symmetric systems, BiCGStab otherwise, Jacobi preconditioned.
    IterativeKrylov,
    /// Banded LU with partial pivoting.
    #[default]
    BandedDirect,
    DenseDirect,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSolveControls {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Defaults to `10 n` when absent.
    pub max_iterations: Option<usize>,
    pub method: SolveMethod,
}

impl Default for LinearSolveControls {
    fn default() -> Self {
        LinearSolveControls {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_iterations: None,
            method: SolveMethod::default(),
        }
    }
}

impl LinearSolveControls {
    pub fn with_method(self, method: SolveMethod) -> Self {
        LinearSolveControls { method, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::invalid("linear", "tolerances must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: f64,
    pub target: f64,
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves the system. `guess` seeds the Krylov iterations and is ignored by
/// the direct methods.
pub fn solve(
    system: &SparseSystem,
    controls: &LinearSolveControls,
    guess: Option<&[f64]>,
) -> Result<(Vec<f64>, SolveReport)> {
    solve_ordered(system, controls, guess, None)
}

/// As [`solve`], with an optional cell ordering (`perm[new] = old`) applied
/// before a banded factorization to shrink the bandwidth.
pub fn solve_ordered(
    system: &SparseSystem,
    controls: &LinearSolveControls,
    guess: Option<&[f64]>,
    ordering: Option<&[usize]>,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = system.dim();
    let target = controls.abs_tol.max(controls.rel_tol * norm2(&system.rhs));
    let x = match controls.method {
        SolveMethod::IterativeKrylov => {
            let max_it = controls.max_iterations.unwrap_or(10 * n.max(1));
            return if system.symmetric {
                conjugate_gradient(system, target, max_it, guess)
            } else {
                bicgstab(system, target, max_it, guess)
            };
        }
        SolveMethod::DenseDirect => dense_lu_solve(&system.matrix.to_dense(), &system.rhs)?,
        SolveMethod::BandedDirect => match ordering {
            Some(perm) => {
                let a = system.matrix.permuted(perm);
                let b: Vec<f64> = perm.iter().map(|&o| system.rhs[o]).collect();
                let y = banded_lu_solve(&a, &b)?;
                let mut x = vec![0.0; n];
                for (new, &old) in perm.iter().enumerate() {
                    x[old] = y[new];
                }
                x
            }
            None => banded_lu_solve(&system.matrix, &system.rhs)?,
        },
    };
    let residual = system.residual_norm(&x);
    if !residual.is_finite() || residual > target {
        return Err(Error::LinearSolver {
            iterations: 1,
            residual,
            target,
            history: vec![residual],
        });
    }
    Ok((
        x,
        SolveReport {
            iterations: 1,
            residual,
            target,
        },
    ))
}

fn jacobi(system: &SparseSystem) -> Result<Vec<f64>> {
    system
        .matrix
        .diagonal()
        .iter()
        .enumerate()
        .map(|(i, &d)| if d != 0.0 { Ok(1.0 / d) } else { Err(Error::Singular(i)) })
        .collect()
}

fn conjugate_gradient(
    system: &SparseSystem,
    target: f64,
    max_it: usize,
    guess: Option<&[f64]>,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = system.dim();
    let a = &system.matrix;
    let inv_diag = jacobi(system)?;
    let mut x = guess.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = system.residual(&x);
    let mut history = vec![norm2(&r)];
    if history[0] <= target {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                residual: history[0],
                target,
            },
        ));
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_it {
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap == 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0usize..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rn = norm2(&r);
        history.push(rn);
        if rn <= target {
            // confirm against the true residual
            let true_rn = system.residual_norm(&x);
            if true_rn <= target {
                return Ok((
                    x,
                    SolveReport {
                        iterations: it,
                        residual: true_rn,
                        target,
                    },
                ));
            }
            r = system.residual(&x);
        }
        for i in 0usize..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0usize..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::LinearSolver {
        iterations: history.len() - 1,
        residual: *history.last().unwrap(),
        target,
        history,
    })
}

fn bicgstab(
    system: &SparseSystem,
    target: f64,
    max_it: usize,
    guess: Option<&[f64]>,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = system.dim();
    let a = &system.matrix;
    let inv_diag = jacobi(system)?;
    let mut x = guess.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = system.residual(&x);
    let mut history = vec![norm2(&r)];
    if history[0] <= target {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                residual: history[0],
                target,
            },
        ));
    }
    let mut r_hat = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];

    for it in 1..=max_it {
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < 1e-300 {
            // breakdown: restart from the current iterate
            r = system.residual(&x);
            r_hat.copy_from_slice(&r);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            v.iter_mut().for_each(|e| *e = 0.0);
            p.iter_mut().for_each(|e| *e = 0.0);
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0usize..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            p_hat[i] = p[i] * inv_diag[i];
        }
        a.mul_vec(&p_hat, &mut v);
        alpha = rho / dot(&r_hat, &v);
        for i in 0usize..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm2(&s) <= target {
            for i in 0usize..n {
                x[i] += alpha * p_hat[i];
            }
            let rn = system.residual_norm(&x);
            history.push(rn);
            if rn <= target {
                return Ok((
                    x,
                    SolveReport {
                        iterations: it,
                        residual: rn,
                        target,
                    },
                ));
            }
            r = system.residual(&x);
            continue;
        }
        for i in 0usize..n {
            s_hat[i] = s[i] * inv_diag[i];
        }
        a.mul_vec(&s_hat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0usize..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        let rn = norm2(&r);
        history.push(rn);
        if rn <= target {
            let true_rn = system.residual_norm(&x);
            if true_rn <= target {
                return Ok((
                    x,
                    SolveReport {
                        iterations: it,
                        residual: true_rn,
                        target,
                    },
                ));
            }
            r = system.residual(&x);
        }
        if omega == 0.0 {
            break;
        }
    }
    Err(Error::LinearSolver {
        iterations: history.len() - 1,
        residual: *history.last().unwrap(),
        target,
        history,
    })
}

/// Dense LU with partial pivoting.
pub fn dense_lu_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x = b.to_vec();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))
            .unwrap();
        if m[p][k] == 0.0 {
            return Err(Error::Singular(k));
        }
        m.swap(k, p);
        x.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            if f != 0.0 {
                for j in k..n {
                    m[i][j] -= f * m[k][j];
                }
                x[i] -= f * x[k];
            }
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| m[k][j] * x[j]).sum();
        x[k] = (x[k] - s) / m[k][k];
    }
    Ok(x)
}

/// Banded LU with partial pivoting, eliminating on the right-hand side as it
/// goes. Row `r` is stored over absolute columns `r - kl ..= r + kl + ku`.
pub fn banded_lu_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.dim();
    let (kl, ku) = a.bandwidths();
    let width = 2 * kl + ku + 1;
    let mut band = vec![0.0; n * width];
    let idx = |r: usize, c: usize| r * width + (c + kl - r);
    for r in 0..n {
        for (c, v) in a.row(r) {
            band[idx(r, c)] = v;
        }
    }
    let mut x = b.to_vec();
    let reach = kl + ku;

    for k in 0..n {
        let last_row = (k + kl).min(n - 1);
        let last_col = (k + reach).min(n - 1);
        let mut p = k;
        let mut best = band[idx(k, k)].abs();
        for r in k + 1..=last_row {
            let v = band[idx(r, k)].abs();
            if v > best {
                best = v;
                p = r;
            }
        }
        if best == 0.0 {
            return Err(Error::Singular(k));
        }
        if p != k {
            for c in k..=last_col {
                band.swap(idx(k, c), idx(p, c));
            }
            x.swap(k, p);
        }
        let pivot = band[idx(k, k)];
        for r in k + 1..=last_row {
            let f = band[idx(r, k)] / pivot;
            if f == 0.0 {
                continue;
            }
            band[idx(r, k)] = 0.0;
            let (upper, lower) = band.split_at_mut(r * width);
            let pivot_row = &upper[idx(k, k + 1)..=idx(k, last_col)];
            let row = &mut lower[k + 1 + kl - r..=last_col + kl - r];
            for (dst, &src) in row.iter_mut().zip(pivot_row) {
                *dst -= f * src;
            }
            x[r] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let last_col = (k + reach).min(n - 1);
        let mut s = x[k];
        for c in k + 1..=last_col {
            s -= band[idx(k, c)] * x[c];
        }
        x[k] = s / band[idx(k, k)];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        norm2(&d) / norm2(b)
    }

    #[test]
    fn single_entry() {
        let s = SparseSystem::assemble(1, &[(0, 0, 1.0)], vec![3.0]).unwrap();
        assert_eq!(s.matrix.nnz(), 1);
        assert_eq!(s.matrix.get(0, 0), 1.0);
    }

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(1, &[(0, 0, 1.0), (0, 0, 1.0)]).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 0), 2.0);
    }

    #[test]
    fn shuffled_tridiagonal_is_canonical() {
        let ordered = vec![
            (0, 0, 2.0),
            (0, 1, -1.0),
            (1, 0, -1.0),
            (1, 1, 2.0),
            (1, 2, -1.0),
            (2, 1, -1.0),
            (2, 2, 2.0),
        ];
        let shuffled = vec![
            ordered[4], ordered[0], ordered[6], ordered[2], ordered[5], ordered[1], ordered[3],
        ];
        let a = CsrMatrix::from_triplets(3, &ordered).unwrap();
        let b = CsrMatrix::from_triplets(3, &shuffled).unwrap();
        assert_eq!(a, b);
        for r in 0..3 {
            let cols: Vec<_> = b.row(r).map(|e| e.0).collect();
            assert!(cols.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(matches!(
            CsrMatrix::from_triplets(2, &[(2, 0, 1.0)]),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn identity_returns_rhs() {
        let b = vec![1.5, -2.0, 7.25, 0.0];
        let mut s = SparseSystem::new(CsrMatrix::identity(4), b.clone());
        for method in [
            SolveMethod::IterativeKrylov,
            SolveMethod::BandedDirect,
            SolveMethod::DenseDirect,
        ] {
            for sym in [true, false] {
                s.symmetric = sym;
                let c = LinearSolveControls::default().with_method(method);
                let (x, _) = solve(&s, &c, None).unwrap();
                assert_relative_eq!(x.as_slice(), b.as_slice(), max_relative = 1e-14);
            }
        }
    }

    /// Cell-centered 1D Poisson on [0, 1] with Dirichlet ends; the
    /// right-hand side is manufactured from `u = x (1 - x)`.
    #[test]
    fn poisson_manufactured_solution() {
        let n = 10;
        let h = 1.0 / n as f64;
        let exact: Vec<f64> = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) * h;
                x * (1.0 - x)
            })
            .collect();
        let mut trip = Vec::new();
        for i in 0usize..n {
            let mut diag = 0.0;
            for j in [i.wrapping_sub(1), i + 1] {
                if j < n {
                    trip.push((i, j, -1.0));
                    diag += 1.0;
                } else {
                    // half-cell distance to the boundary
                    diag += 2.0;
                }
            }
            trip.push((i, i, diag));
        }
        let mut sys = SparseSystem::assemble(n, &trip, vec![0.0; n]).unwrap();
        sys.matrix.mul_vec(&exact, &mut sys.rhs);
        sys.symmetric = true;
        for method in [
            SolveMethod::IterativeKrylov,
            SolveMethod::BandedDirect,
            SolveMethod::DenseDirect,
        ] {
            let c = LinearSolveControls {
                rel_tol: 1e-12,
                ..LinearSolveControls::default().with_method(method)
            };
            let (x, rep) = solve(&sys, &c, None).unwrap();
            assert!(rel_err(&x, &exact) < 1e-8, "{method:?}");
            assert!(rep.residual <= rep.target);
        }
    }

    fn random_spd(n: usize, seed: u64) -> SparseSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trip = Vec::new();
        let mut diag = vec![0.0; n];
        for i in 0usize..n {
            for j in i + 1..n {
                if rng.gen_bool(0.1) {
                    let v = -rng.gen_range(0.1..1.0);
                    trip.push((i, j, v));
                    trip.push((j, i, v));
                    diag[i] -= v;
                    diag[j] -= v;
                }
            }
        }
        for (i, d) in diag.iter().enumerate() {
            trip.push((i, i, d + rng.gen_range(0.5..2.0)));
        }
        let b = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut s = SparseSystem::assemble(n, &trip, b).unwrap();
        s.symmetric = true;
        s
    }

    #[test]
    fn spd_random_matches_dense() {
        let s = random_spd(50, 7);
        let dense = dense_lu_solve(&s.matrix.to_dense(), &s.rhs).unwrap();
        for method in [SolveMethod::IterativeKrylov, SolveMethod::BandedDirect] {
            let c = LinearSolveControls::default().with_method(method);
            let (x, _) = solve(&s, &c, None).unwrap();
            assert!(rel_err(&x, &dense) < 1e-8, "{method:?}");
        }
    }

    #[test]
    fn nonsymmetric_bicgstab_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 120;
        let mut trip = Vec::new();
        for i in 0usize..n {
            let mut off = 0.0;
            for j in [i.wrapping_sub(1), i + 1, i.wrapping_sub(11), i + 11] {
                if j < n {
                    let v = -rng.gen_range(0.0..1.0);
                    off -= v;
                    trip.push((i, j, v));
                }
            }
            trip.push((i, i, off + rng.gen_range(0.01..0.5)));
        }
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = SparseSystem::assemble(n, &trip, b).unwrap();
        assert!(!s.matrix.is_symmetric(1e-12));
        let dense = dense_lu_solve(&s.matrix.to_dense(), &s.rhs).unwrap();
        let c = LinearSolveControls::default();
        for method in [SolveMethod::IterativeKrylov, SolveMethod::BandedDirect] {
            let (x, _) = solve(&s, &c.with_method(method), None).unwrap();
            assert!(rel_err(&x, &dense) < 1e-8, "{method:?}");
        }
    }

    #[test]
    fn banded_needs_pivoting() {
        // zero leading pivot forces a row swap inside the band
        let trip = [
            (0, 0, 0.0),
            (0, 1, 1.0),
            (1, 0, 2.0),
            (1, 1, 1.0),
            (1, 2, 1.0),
            (2, 1, 1.0),
            (2, 2, 3.0),
        ];
        let a = CsrMatrix::from_triplets(3, &trip).unwrap();
        let b = [1.0, 2.0, 3.0];
        let x = banded_lu_solve(&a, &b).unwrap();
        let d = dense_lu_solve(&a.to_dense(), &b).unwrap();
        assert_relative_eq!(x.as_slice(), d.as_slice(), max_relative = 1e-14);
    }

    #[test]
    fn ordering_shrinks_band_and_keeps_solution() {
        let s = random_spd(30, 11);
        let perm: Vec<usize> = (0..30).rev().collect();
        let c = LinearSolveControls::default();
        let (x1, _) = solve_ordered(&s, &c, None, Some(&perm)).unwrap();
        let (x2, _) = solve(&s, &c, None).unwrap();
        assert!(rel_err(&x1, &x2) < 1e-12);
    }

    #[test]
    fn nonconvergence_reports_history() {
        let s = random_spd(40, 5);
        let c = LinearSolveControls {
            max_iterations: Some(2),
            rel_tol: 1e-14,
            ..LinearSolveControls::default().with_method(SolveMethod::IterativeKrylov)
        };
        match solve(&s, &c, None) {
            Err(Error::LinearSolver { history, .. }) => assert_eq!(history.len(), 3),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn singular_detected() {
        let a = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 0, 1.0)]).unwrap();
        assert!(matches!(banded_lu_solve(&a, &[1.0, 1.0]), Err(Error::Singular(1))));
    }

    proptest::proptest! {
        #[test]
        fn krylov_and_dense_agree(seed in 0u64..1000, n in 2usize..200) {
            let s = random_spd(n, seed);
            let dense = dense_lu_solve(&s.matrix.to_dense(), &s.rhs).unwrap();
            let c = LinearSolveControls { rel_tol: 1e-12, ..Default::default() };
            let (x, _) = solve(&s, &c.with_method(SolveMethod::IterativeKrylov), None).unwrap();
            proptest::prop_assert!(rel_err(&x, &dense) < 1e-8);
            let (x, rep) = solve(&s, &c, None).unwrap();
            proptest::prop_assert!(rel_err(&x, &dense) < 1e-8);
            proptest::prop_assert!(s.residual_norm(&x) <= rep.target);
        }
    }
}
