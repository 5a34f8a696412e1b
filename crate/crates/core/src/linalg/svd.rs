//! Truncated singular value decomposition.
//!
//! Small problems go through one-sided Jacobi on the dense matrix. Larger
//! sparse problems use Golub–Kahan–Lanczos with full reorthogonalization and
//! a Rayleigh–Ritz step, growing the Krylov basis until the leading triplets
//! pass a residual check. Every path is deterministic: the Krylov start vector
//! is the normalized all-ones vector and breakdowns restart from canonical
//! basis vectors in index order.

use alloc::vec;
use alloc::vec::Vec;

use super::{CsrMatrix, DenseMatrix};
use crate::error::{Error, Result};
use crate::math;

/// Thin SVD `A ≈ U diag(s) Vᵀ`; singular vectors are stored as columns and
/// singular values are non-increasing. Columns of `u` belonging to a zero
/// singular value are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    fn truncate(mut self, k: usize) -> Svd {
        let k = k.min(self.s.len());
        self.s.truncate(k);
        self.u = take_columns(&self.u, k);
        self.v = take_columns(&self.v, k);
        self
    }

    fn swap(self) -> Svd {
        Svd {
            u: self.v,
            s: self.s,
            v: self.u,
        }
    }
}

fn take_columns(m: &DenseMatrix, k: usize) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(m.rows(), k);
    for r in 0..m.rows() {
        out.row_mut(r).copy_from_slice(&m.row(r)[..k]);
    }
    out
}

const JACOBI_MAX_SWEEPS: usize = 80;
const DENSE_MAX_MIN_DIM: usize = 80;

/// Full thin SVD of a dense matrix by one-sided (Hestenes) Jacobi rotations.
pub fn jacobi_svd(a: &DenseMatrix) -> Svd {
    if a.rows() < a.cols() {
        return jacobi_svd(&a.transpose()).swap();
    }
    let n = a.rows();
    let c = a.cols();
    let mut cols: Vec<Vec<f64>> = (0..c).map(|j| a.column(j)).collect();
    let mut vcols: Vec<Vec<f64>> = (0..c)
        .map(|j| {
            let mut e = vec![0.0; c];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..c {
            for q in p + 1..c {
                let alpha = math::dot(&cols[p], &cols[p]);
                let beta = math::dot(&cols[q], &cols[q]);
                let gamma = math::dot(&cols[p], &cols[q]);
                if gamma == 0.0 || math::abs(gamma) <= 1e-15 * math::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + math::sqrt(1.0 + zeta * zeta))
                } else {
                    -1.0 / (-zeta + math::sqrt(1.0 + zeta * zeta))
                };
                let cs = 1.0 / math::sqrt(1.0 + t * t);
                let sn = cs * t;
                rotate(&mut cols, p, q, cs, sn);
                rotate(&mut vcols, p, q, cs, sn);
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<f64> = cols.iter().map(|col| math::norm(col)).collect();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&x, &y| sigma[y].total_cmp(&sigma[x]).then(x.cmp(&y)));
    let smax = order.first().map_or(0.0, |&j| sigma[j]);

    let mut u = DenseMatrix::zeros(n, c);
    let mut v = DenseMatrix::zeros(c, c);
    let mut s = Vec::with_capacity(c);
    for (out, &j) in order.iter().enumerate() {
        let sj = sigma[j];
        s.push(sj);
        if sj > smax * 1e-15 && sj > 0.0 {
            for i in 0..n {
                u.set(i, out, cols[j][i] / sj);
            }
        }
        for i in 0..c {
            v.set(i, out, vcols[j][i]);
        }
    }
    Svd { u, s, v }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, cs: f64, sn: f64) {
    let (left, right) = cols.split_at_mut(q);
    let cp = &mut left[p];
    let cq = &mut right[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let a = *x;
        let b = *y;
        *x = cs * a - sn * b;
        *y = sn * a + cs * b;
    }
}

/// The `k` leading singular triplets of a sparse matrix.
pub fn truncated_svd(a: &CsrMatrix, k: usize) -> Result<Svd> {
    let (n, m) = (a.rows(), a.cols());
    let min_dim = n.min(m);
    if k == 0 || k > min_dim {
        return Err(Error::Parameter(alloc::format!(
            "rank {k} outside [1, {min_dim}] for a {n}x{m} matrix"
        )));
    }
    if min_dim <= DENSE_MAX_MIN_DIM {
        return Ok(jacobi_svd(&a.to_dense()).truncate(k));
    }
    // the V-side Krylov basis lives in the smaller dimension so a full basis is exact
    let op = Operator {
        a,
        transposed: m > n,
    };
    let mut p = min_dim.min(2 * k + 20);
    loop {
        let (svd, converged) = lanczos(&op, k, p);
        if converged {
            return Ok(if op.transposed { svd.swap() } else { svd });
        }
        if p == min_dim {
            return Err(Error::Numeric(alloc::format!(
                "truncated SVD of rank {k} did not converge with a full Krylov basis"
            )));
        }
        p = min_dim.min(2 * p);
    }
}

struct Operator<'a> {
    a: &'a CsrMatrix,
    transposed: bool,
}

impl Operator<'_> {
    fn v_dim(&self) -> usize {
        if self.transposed {
            self.a.rows()
        } else {
            self.a.cols()
        }
    }

    fn u_dim(&self) -> usize {
        if self.transposed {
            self.a.cols()
        } else {
            self.a.rows()
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        if self.transposed {
            self.a.tmatvec(x)
        } else {
            self.a.matvec(x)
        }
    }

    fn apply_t(&self, y: &[f64]) -> Vec<f64> {
        if self.transposed {
            self.a.matvec(y)
        } else {
            self.a.tmatvec(y)
        }
    }
}

/// Classical Gram–Schmidt applied twice; returns the remaining norm.
fn orthogonalize(x: &mut [f64], basis: &[Vec<f64>]) -> f64 {
    for _ in 0..2 {
        for b in basis {
            let proj = math::dot(x, b);
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi -= proj * bi;
            }
        }
    }
    math::norm(x)
}

/// Next canonical basis vector with a substantial component outside `basis`.
fn fresh_vector(dim: usize, basis: &[Vec<f64>], next: &mut usize) -> Option<Vec<f64>> {
    while *next < dim {
        let mut e = vec![0.0; dim];
        e[*next] = 1.0;
        *next += 1;
        let nrm = orthogonalize(&mut e, basis);
        if nrm > 0.5 {
            e.iter_mut().for_each(|x| *x /= nrm);
            return Some(e);
        }
    }
    None
}

fn lanczos(op: &Operator<'_>, k: usize, p: usize) -> (Svd, bool) {
    let vdim = op.v_dim();
    let udim = op.u_dim();
    let scale = math::sqrt(op.a.frobenius_norm_sq());
    let tiny = scale * 1e-12;

    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut us: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut avs: Vec<Vec<f64>> = Vec::with_capacity(p);
    let (mut next_v, mut next_u) = (0usize, 0usize);

    for j in 0..p {
        let v = if j == 0 {
            let x = 1.0 / math::sqrt(vdim as f64);
            vec![x; vdim]
        } else {
            let mut w = op.apply_t(&us[j - 1]);
            let nrm = orthogonalize(&mut w, &vs);
            if nrm > tiny {
                w.iter_mut().for_each(|x| *x /= nrm);
                w
            } else {
                match fresh_vector(vdim, &vs, &mut next_v) {
                    Some(e) => e,
                    None => break,
                }
            }
        };
        let av = op.apply(&v);
        let mut u = av.clone();
        let nrm = orthogonalize(&mut u, &us);
        let u = if nrm > tiny {
            u.iter_mut().for_each(|x| *x /= nrm);
            u
        } else {
            match fresh_vector(udim, &us, &mut next_u) {
                Some(e) => e,
                None => break,
            }
        };
        vs.push(v);
        us.push(u);
        avs.push(av);
    }

    let p = vs.len();
    let mut b = DenseMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            b.set(i, j, math::dot(&us[i], &avs[j]));
        }
    }
    let small = jacobi_svd(&b);
    let r = k.min(p);

    let mut u = DenseMatrix::zeros(udim, r);
    let mut v = DenseMatrix::zeros(vdim, r);
    for c in 0..r {
        for l in 0..p {
            let xl = small.u.get(l, c);
            if xl != 0.0 {
                for (i, &ui) in us[l].iter().enumerate() {
                    u.set(i, c, u.get(i, c) + xl * ui);
                }
            }
            let yl = small.v.get(l, c);
            if yl != 0.0 {
                for (i, &vi) in vs[l].iter().enumerate() {
                    v.set(i, c, v.get(i, c) + yl * vi);
                }
            }
        }
    }
    let s: Vec<f64> = small.s[..r].to_vec();

    let smax = s.first().copied().unwrap_or(0.0);
    let tol = 1e-9 * smax.max(f64::MIN_POSITIVE);
    let converged = r == k
        && (0..r).all(|c| {
            let uc = u.column(c);
            let vc = v.column(c);
            let atu = op.apply_t(&uc);
            let res: f64 = atu
                .iter()
                .zip(&vc)
                .map(|(x, y)| {
                    let d = x - s[c] * y;
                    d * d
                })
                .sum();
            math::sqrt(res) <= tol
        });
    (Svd { u, s, v }, converged)
}
