//! Non-negative matrix factorization `A ≈ W H` with NNDSVD initialization.
//!
//! Rows of `H` are topics over the vocabulary and rows of `W` are document
//! memberships. The default solver is HALS (exact coordinate minimization of
//! one factor column at a time); Lee–Seung multiplicative updates are kept as
//! an alternative. Both minimize the Frobenius objective monotonically.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{truncated_svd, CsrMatrix, DenseMatrix};
use crate::math;

/// Scale applied to the mean nonzero entry of `A` to fill NNDSVD zeros.
pub const NNDSVD_FILL_SCALE: f64 = 1e-2;
const CONVERGENCE_EPS: f64 = 1e-12;
const OFF_SUPPORT_RESOLUTION: f64 = 1e-8;
const HALS_MAX_INNER: usize = 10;
/// Inner sweeps stop once a sweep moves the block by less than 1% (in norm)
/// of the first sweep.
const HALS_INNER_STOP: f64 = 1e-4;
/// Lower bound for HALS coordinates so that no component collapses to zero.
const HALS_FLOOR: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    Nndsvd,
    Random { seed: u64 },
}

/// Solver for the Frobenius objective. Both rules keep the factors
/// non-negative and never increase the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateRule {
    /// Hierarchical alternating least squares with repeated inner sweeps.
    #[default]
    Hals,
    /// Lee–Seung multiplicative updates.
    Multiplicative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmfConfig {
    pub init: Init,
    pub rule: UpdateRule,
    pub max_iter: usize,
    /// Stop once the relative change of the reconstruction error drops below this.
    pub tol: f64,
}

impl Default for NmfConfig {
    fn default() -> Self {
        NmfConfig {
            init: Init::Nndsvd,
            rule: UpdateRule::Hals,
            max_iter: 200,
            tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    /// `n × k` document/topic weights.
    pub w: DenseMatrix,
    /// `k × m` topic/term weights.
    pub h: DenseMatrix,
    pub k: usize,
    pub iterations_run: usize,
    /// `‖A − WH‖_F` for the returned factors.
    pub final_error: f64,
    /// Reconstruction error of the initial factors followed by one entry per iteration.
    pub objective_trace: Vec<f64>,
}

impl Factorization {
    pub fn top_terms(&self, vocabulary: &[String], topic_index: usize, t: usize) -> Result<TopicDescriptor> {
        top_terms(&self.h, vocabulary, topic_index, t)
    }

    /// Descriptors for every topic, truncated to `t` terms (or the vocabulary size).
    pub fn descriptors(&self, vocabulary: &[String], t: usize) -> Result<Vec<TopicDescriptor>> {
        let t = t.min(vocabulary.len());
        (0..self.k).map(|i| self.top_terms(vocabulary, i, t)).collect()
    }
}

/// A topic's terms ranked by descending weight.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicDescriptor {
    pub topic_index: usize,
    pub terms: Vec<(String, f64)>,
}

impl TopicDescriptor {
    pub fn term_names(&self) -> Vec<&str> {
        self.terms.iter().map(|(t, _)| t.as_str()).collect()
    }
}

fn check_rank(a: &CsrMatrix, k: usize) -> Result<()> {
    let limit = a.rows().min(a.cols());
    if k == 0 || k > limit {
        return Err(Error::Parameter(alloc::format!(
            "k = {k} outside [1, {limit}] for a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    if a.nnz() > 0 && a.min_value() < 0.0 {
        return Err(Error::Parameter("matrix has negative entries".into()));
    }
    Ok(())
}

/// NNDSVD factors before zero-filling.
pub fn nndsvd_unfilled(a: &CsrMatrix, k: usize) -> Result<(DenseMatrix, DenseMatrix)> {
    check_rank(a, k)?;
    let svd = truncated_svd(a, k)?;
    let (n, m) = (a.rows(), a.cols());
    let mut w = DenseMatrix::zeros(n, k);
    let mut h = DenseMatrix::zeros(k, m);

    for j in 0..k {
        let x = svd.u.column(j);
        let y = svd.v.column(j);
        let sigma = svd.s[j];
        if j == 0 {
            // the leading pair of a non-negative matrix is single-signed
            let scale = math::sqrt(sigma);
            for (i, xi) in x.iter().enumerate() {
                w.set(i, 0, scale * math::abs(*xi));
            }
            for (i, yi) in y.iter().enumerate() {
                h.set(0, i, scale * math::abs(*yi));
            }
            continue;
        }
        let pos = |v: &[f64]| -> Vec<f64> { v.iter().map(|&e| e.max(0.0)).collect() };
        let neg = |v: &[f64]| -> Vec<f64> { v.iter().map(|&e| (-e).max(0.0)).collect() };
        let (xp, xn, yp, yn) = (pos(&x), neg(&x), pos(&y), neg(&y));
        let (nxp, nyp) = (math::norm(&xp), math::norm(&yp));
        let (nxn, nyn) = (math::norm(&xn), math::norm(&yn));
        let mp = nxp * nyp;
        let mn = nxn * nyn;
        let (u, v, nu, nv, mass) = if mp > mn {
            (xp, yp, nxp, nyp, mp)
        } else {
            (xn, yn, nxn, nyn, mn)
        };
        if mass == 0.0 {
            continue;
        }
        let lbd = math::sqrt(sigma * mass);
        for (i, ui) in u.iter().enumerate() {
            w.set(i, j, lbd * ui / nu);
        }
        for (i, vi) in v.iter().enumerate() {
            h.set(j, i, lbd * vi / nv);
        }
    }
    Ok((w, h))
}

/// NNDSVD initial factors with zero entries replaced by a small positive fill
/// so multiplicative updates can move them.
pub fn nndsvd_init(a: &CsrMatrix, k: usize) -> Result<(DenseMatrix, DenseMatrix)> {
    let (mut w, mut h) = nndsvd_unfilled(a, k)?;
    let fill = nndsvd_fill_value(a);
    for m in [&mut w, &mut h] {
        for v in m.as_mut_slice() {
            if *v == 0.0 {
                *v = fill;
            }
        }
    }
    Ok((w, h))
}

/// Mean of the nonzero entries of `a` times [`NNDSVD_FILL_SCALE`].
pub fn nndsvd_fill_value(a: &CsrMatrix) -> f64 {
    if a.nnz() == 0 {
        return 0.0;
    }
    let sum: f64 = a.triplets().map(|(_, _, v)| v).sum();
    sum / a.nnz() as f64 * NNDSVD_FILL_SCALE
}

/// Uniform random factors scaled to the mean entry of `a`.
pub fn random_init(a: &CsrMatrix, k: usize, seed: u64) -> Result<(DenseMatrix, DenseMatrix)> {
    check_rank(a, k)?;
    let total: f64 = a.triplets().map(|(_, _, v)| v).sum();
    let mean = total / (a.rows() * a.cols()) as f64;
    let scale = math::sqrt(mean / k as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = DenseMatrix::zeros(a.rows(), k);
    let mut h = DenseMatrix::zeros(k, a.cols());
    for v in w.as_mut_slice().iter_mut().chain(h.as_mut_slice()) {
        *v = scale * rng.random_range(1e-3..1.0);
    }
    Ok((w, h))
}

/// Fit `A ≈ W H` with `k` topics.
pub fn factorize(a: &CsrMatrix, k: usize, config: &NmfConfig) -> Result<Factorization> {
    if config.max_iter == 0 {
        return Err(Error::Parameter("max_iter must be at least 1".into()));
    }
    if config.tol.is_nan() || config.tol <= 0.0 {
        return Err(Error::Parameter("tol must be positive".into()));
    }
    let (mut w, mut h) = match config.init {
        Init::Nndsvd => nndsvd_init(a, k)?,
        Init::Random { seed } => random_init(a, k, seed)?,
    };

    let mut trace = Vec::with_capacity(config.max_iter + 1);
    let mut prev = objective(a, &w, &h);
    trace.push(prev);
    let mut iterations_run = 0;

    for it in 1..=config.max_iter {
        match config.rule {
            UpdateRule::Hals => hals_update(a, &mut w, &mut h),
            UpdateRule::Multiplicative => {
                mu_update_h(a, &w, &mut h);
                mu_update_w(a, &mut w, &h);
            }
        }
        if !w.is_finite() || !h.is_finite() {
            return Err(Error::Numeric(alloc::format!(
                "non-finite factor values at iteration {it}"
            )));
        }
        let err = objective(a, &w, &h);
        trace.push(err);
        iterations_run = it;
        let change = math::abs(prev - err) / prev.max(CONVERGENCE_EPS);
        prev = err;
        if change < config.tol {
            break;
        }
    }

    let final_error = reconstruction_error(a, &w, &h)?;
    Ok(Factorization {
        w,
        h,
        k,
        iterations_run,
        final_error,
        objective_trace: trace,
    })
}

/// Inner sweep budget for one HALS block update: cheap sweeps are repeated
/// while the cost of forming the block's gradient terms dominates.
fn inner_sweeps(nnz: usize, rows: usize, k: usize) -> usize {
    let rho = 1.0 + (nnz + rows * k) as f64 / ((rows * k + rows) as f64);
    let sweeps = 1.0 + 0.5 * rho;
    (sweeps as usize).clamp(1, HALS_MAX_INNER)
}

/// Cyclic exact coordinate minimization of `‖R − X Gᵀ‖` over the columns of
/// `x` (`rows × k`), given `cross = R G` (`rows × k`) and `gram = GᵀG`.
fn hals_block(x: &mut DenseMatrix, cross: &DenseMatrix, gram: &DenseMatrix, sweeps: usize) {
    let k = x.cols();
    let mut first = 0.0;
    for sweep in 0..sweeps {
        let mut delta = 0.0;
        for l in 0..k {
            let d = gram.get(l, l);
            if d <= 0.0 {
                continue;
            }
            let grow = gram.row(l);
            for i in 0..x.rows() {
                let xi = x.row_mut(i);
                let g = cross.get(i, l) - math::dot(grow, xi);
                let old = xi[l];
                let new = (old + g / d).max(HALS_FLOOR);
                delta += (new - old) * (new - old);
                xi[l] = new;
            }
        }
        if sweep == 0 {
            first = delta;
        } else if delta <= HALS_INNER_STOP * first {
            break;
        }
    }
}

fn hals_update(a: &CsrMatrix, w: &mut DenseMatrix, h: &mut DenseMatrix) {
    let k = w.cols();
    // H step works on Hᵀ (m × k): minimize ‖Aᵀ − Hᵀ Wᵀ‖
    let atw = a.tmul_dense(w);
    let wtw = w.gram();
    let mut ht = h.transpose();
    hals_block(&mut ht, &atw, &wtw, inner_sweeps(a.nnz(), a.cols(), k));
    *h = ht.transpose();

    let aht = a.mul_dense_t(h);
    let hht = h.outer_gram();
    hals_block(w, &aht, &hht, inner_sweeps(a.nnz(), a.rows(), k));
}

/// `H ← H ⊙ (WᵀA) ⊘ (WᵀW H)`
fn mu_update_h(a: &CsrMatrix, w: &DenseMatrix, h: &mut DenseMatrix) {
    let k = h.rows();
    let m = h.cols();
    let atw = a.tmul_dense(w);
    let wtw = w.gram();
    let den = wtw.matmul(h).expect("k x k times k x m");
    for l in 0..k {
        let hrow = h.row_mut(l);
        let drow = den.row(l);
        for j in 0..m {
            let d = drow[j];
            if d > 0.0 {
                hrow[j] *= atw.get(j, l) / d;
            }
        }
    }
}

/// `W ← W ⊙ (AHᵀ) ⊘ (W HHᵀ)`
fn mu_update_w(a: &CsrMatrix, w: &mut DenseMatrix, h: &DenseMatrix) {
    let aht = a.mul_dense_t(h);
    let hht = h.outer_gram();
    let den = w.matmul(&hht).expect("n x k times k x k");
    for i in 0..w.rows() {
        let wrow = w.row_mut(i);
        let drow = den.row(i);
        let nrow = aht.row(i);
        for l in 0..wrow.len() {
            if drow[l] > 0.0 {
                wrow[l] *= nrow[l] / drow[l];
            }
        }
    }
}

/// Reconstruction error used for the convergence trace. Sums over the stored
/// entries directly; the mass of `WH` on the zeros of `A` is enumerated when
/// `A` is mostly dense and obtained by subtraction otherwise.
fn objective(a: &CsrMatrix, w: &DenseMatrix, h: &DenseMatrix) -> f64 {
    let (n, m) = (a.rows(), a.cols());
    let ht = h.transpose();
    let mut on_support = 0.0;
    let mut wh_on_support_sq = 0.0;
    for i in 0..n {
        let wi = w.row(i);
        let (idx, vals) = a.row(i);
        for (&c, &v) in idx.iter().zip(vals) {
            let p = math::dot(wi, ht.row(c));
            on_support += (v - p) * (v - p);
            wh_on_support_sq += p * p;
        }
    }
    let off_support = if a.nnz() * 2 > n * m {
        off_support_mass(a, w, &ht)
    } else {
        let wtw = w.gram();
        let hht = h.outer_gram();
        let wh_sq = math::dot(wtw.as_slice(), hht.as_slice());
        let diff = wh_sq - wh_on_support_sq;
        // below this the subtraction has no significant digits left
        if diff < OFF_SUPPORT_RESOLUTION * wh_sq {
            off_support_mass(a, w, &ht)
        } else {
            diff
        }
    };
    math::sqrt(on_support + off_support)
}

fn off_support_mass(a: &CsrMatrix, w: &DenseMatrix, ht: &DenseMatrix) -> f64 {
    let mut sum = 0.0;
    for i in 0..a.rows() {
        let wi = w.row(i);
        let (idx, _) = a.row(i);
        let mut next = idx.iter().peekable();
        for c in 0..a.cols() {
            if next.peek() == Some(&&c) {
                next.next();
                continue;
            }
            let p = math::dot(wi, ht.row(c));
            sum += p * p;
        }
    }
    sum
}

/// Frobenius norm `‖A − WH‖_F`, evaluated entry by entry.
pub fn reconstruction_error(a: &CsrMatrix, w: &DenseMatrix, h: &DenseMatrix) -> Result<f64> {
    if w.rows() != a.rows() || h.cols() != a.cols() || w.cols() != h.rows() {
        return Err(Error::Parameter(alloc::format!(
            "shapes do not conform: A {}x{}, W {}x{}, H {}x{}",
            a.rows(),
            a.cols(),
            w.rows(),
            w.cols(),
            h.rows(),
            h.cols()
        )));
    }
    let ht = h.transpose();
    let mut total = 0.0;
    let mut row = alloc::vec![0.0; a.cols()];
    for i in 0..a.rows() {
        let wi = w.row(i);
        for (c, slot) in row.iter_mut().enumerate() {
            *slot = math::dot(wi, ht.row(c));
        }
        let (idx, vals) = a.row(i);
        for (&c, &v) in idx.iter().zip(vals) {
            row[c] -= v;
        }
        total += row.iter().map(|d| d * d).sum::<f64>();
    }
    Ok(math::sqrt(total))
}

/// The `t` largest entries of row `topic_index` of `h`, ties broken by
/// ascending term string. Terms with zero weight are not part of a topic and
/// are left out, so a descriptor may be shorter than `t`.
pub fn top_terms(h: &DenseMatrix, vocabulary: &[String], topic_index: usize, t: usize) -> Result<TopicDescriptor> {
    if topic_index >= h.rows() {
        return Err(Error::Parameter(alloc::format!(
            "topic {topic_index} out of range for k = {}",
            h.rows()
        )));
    }
    if vocabulary.len() != h.cols() {
        return Err(Error::Parameter(alloc::format!(
            "vocabulary has {} terms but H has {} columns",
            vocabulary.len(),
            h.cols()
        )));
    }
    if t == 0 || t > vocabulary.len() {
        return Err(Error::Parameter(alloc::format!(
            "t = {t} outside [1, {}]",
            vocabulary.len()
        )));
    }
    let row = h.row(topic_index);
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&x, &y| {
        row[y]
            .total_cmp(&row[x])
            .then_with(|| vocabulary[x].cmp(&vocabulary[y]))
    });
    let terms = order
        .into_iter()
        .take(t)
        .filter(|&j| row[j] > 0.0)
        .map(|j| (vocabulary[j].clone(), row[j]))
        .collect();
    Ok(TopicDescriptor { topic_index, terms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn vocab(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn diagonal_nndsvd_reconstructs_before_fill() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 3.0), (1, 1, 2.0)]).unwrap();
        let (w, h) = nndsvd_unfilled(&a, 2).unwrap();
        let wh = w.matmul(&h).unwrap();
        assert!((wh.get(0, 0) - 3.0).abs() < 1e-12);
        assert!((wh.get(1, 1) - 2.0).abs() < 1e-12);
        assert_eq!(wh.get(0, 1), 0.0);
        assert!(reconstruction_error(&a, &w, &h).unwrap() < 1e-12);
        // filled factors have no zeros left
        let (wf, hf) = nndsvd_init(&a, 2).unwrap();
        assert!(wf.min_value() > 0.0 && hf.min_value() > 0.0);
        assert!((nndsvd_fill_value(&a) - 0.025).abs() < 1e-15);
    }

    #[test]
    fn rank_one_nndsvd_is_exact() {
        // outer([1,2],[1,1,1])
        let a = CsrMatrix::from_triplets(
            2,
            3,
            &[(0, 0, 1.0), (0, 1, 1.0), (0, 2, 1.0), (1, 0, 2.0), (1, 1, 2.0), (1, 2, 2.0)],
        )
        .unwrap();
        let (w, h) = nndsvd_init(&a, 1).unwrap();
        assert!((w.get(1, 0) / w.get(0, 0) - 2.0).abs() < 1e-9);
        assert!((h.get(0, 2) / h.get(0, 0) - 1.0).abs() < 1e-9);
        assert!(reconstruction_error(&a, &w, &h).unwrap() < 1e-9);
    }

    #[test]
    fn nndsvd_is_bitwise_deterministic() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 1.0), (0, 1, 0.5), (1, 1, 2.0), (2, 0, 0.3), (2, 2, 1.5)],
        )
        .unwrap();
        assert_eq!(nndsvd_init(&a, 2).unwrap(), nndsvd_init(&a, 2).unwrap());
    }

    #[test]
    fn parameter_errors() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 1.0)]).unwrap();
        let bad_iter = NmfConfig {
            max_iter: 0,
            ..NmfConfig::default()
        };
        assert!(matches!(factorize(&a, 1, &bad_iter), Err(Error::Parameter(_))));
        assert!(matches!(
            factorize(&a, 3, &NmfConfig::default()),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(nndsvd_init(&a, 0), Err(Error::Parameter(_))));
        let neg = CsrMatrix::from_triplets(2, 2, &[(0, 0, -1.0), (1, 1, 1.0)]).unwrap();
        assert!(nndsvd_init(&neg, 1).is_err());
    }

    #[test]
    fn reconstruction_error_cases() {
        let a = CsrMatrix::from_triplets(1, 1, &[(0, 0, 1.0)]).unwrap();
        let w = DenseMatrix::from_rows(&[vec![1.0]]).unwrap();
        let h = DenseMatrix::from_rows(&[vec![0.0]]).unwrap();
        assert_eq!(reconstruction_error(&a, &w, &h).unwrap(), 1.0);

        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 3.0), (0, 1, 4.0)]).unwrap();
        let zw = DenseMatrix::zeros(2, 1);
        let zh = DenseMatrix::zeros(1, 2);
        assert_eq!(reconstruction_error(&a, &zw, &zh).unwrap(), 5.0);
        assert!(reconstruction_error(&a, &DenseMatrix::zeros(3, 1), &zh).is_err());
    }

    #[test]
    fn top_terms_sorts_and_breaks_ties() {
        let h = DenseMatrix::from_rows(&[vec![0.5, 0.1, 0.9]]).unwrap();
        let d = top_terms(&h, &vocab(&["a", "b", "c"]), 0, 2).unwrap();
        assert_eq!(d.terms, vec![("c".to_string(), 0.9), ("a".to_string(), 0.5)]);

        let h = DenseMatrix::from_rows(&[vec![0.5, 0.5]]).unwrap();
        let d = top_terms(&h, &vocab(&["zebra", "apple"]), 0, 1).unwrap();
        assert_eq!(d.term_names(), vec!["apple"]);

        let h = DenseMatrix::from_rows(&[vec![0.2, 0.3, 0.1]]).unwrap();
        let d = top_terms(&h, &vocab(&["x", "y", "z"]), 0, 3).unwrap();
        assert_eq!(d.term_names(), vec!["y", "x", "z"]);

        let h0 = DenseMatrix::from_rows(&[vec![0.0, 0.3, 0.0]]).unwrap();
        assert_eq!(top_terms(&h0, &vocab(&["x", "y", "z"]), 0, 3).unwrap().term_names(), vec!["y"]);

        assert!(top_terms(&h, &vocab(&["x", "y", "z"]), 1, 1).is_err());
        assert!(top_terms(&h, &vocab(&["x", "y", "z"]), 0, 4).is_err());
        assert!(top_terms(&h, &vocab(&["x", "y", "z"]), 0, 0).is_err());
    }

    #[test]
    fn rank_one_fit_does_not_increase_objective() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 1.0), (0, 1, 0.2), (1, 1, 2.0), (2, 0, 0.3), (2, 2, 1.5), (1, 2, 0.4)],
        )
        .unwrap();
        let f = factorize(&a, 1, &NmfConfig::default()).unwrap();
        assert!(f.final_error <= f.objective_trace[0] + 1e-9);
        for pair in f.objective_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9);
        }
    }
}
