//! Sample-based distances between per-timestep empirical distributions.
//!
//! Samples are rows of an `n x d` matrix. High-dimensional samples are first
//! reduced with a Gaussian random projection, then compared with sliced
//! Wasserstein, an unbiased kernel MMD, or a classifier two-sample test.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::rng::{gaussian, substream};

pub const DEFAULT_EPSILON: f64 = 0.2;
pub const DEFAULT_PROJECTIONS: usize = 128;
pub const DEFAULT_FOLDS: usize = 5;

/// Target dimension `ceil(8 ln n / eps²)`, capped at `d`.
pub fn jl_dimension(n: usize, d: usize, epsilon: f64) -> usize {
    let m = (8.0 * (n as f64).ln() / (epsilon * epsilon)).ceil() as usize;
    m.clamp(1, d.max(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedSampleSet {
    /// `n x m` projected samples.
    pub samples: Array2<f64>,
    pub original_dim: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub timestep: Option<usize>,
}

impl ProjectedSampleSet {
    pub fn n(&self) -> usize {
        self.samples.nrows()
    }

    pub fn m(&self) -> usize {
        self.samples.ncols()
    }
}

/// Gaussian projection matrix `P / sqrt(m)` of shape `m x d`.
pub fn jl_matrix(m: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = substream(seed, "jl-projection", 0);
    let scale = 1.0 / (m as f64).sqrt();
    Array2::from_shape_simple_fn((m, d), || gaussian(&mut rng) * scale)
}

/// Project `n x d` samples to `m = jl_dimension(n, d, epsilon)` dimensions.
pub fn jl_project(samples: ArrayView2<f64>, epsilon: f64, seed: u64) -> Result<ProjectedSampleSet> {
    let (n, d) = samples.dim();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "projection needs at least 2 samples, got {n}"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let p = jl_matrix(jl_dimension(n, d, epsilon), d, seed);
    Ok(ProjectedSampleSet {
        samples: samples.dot(&p.t()),
        original_dim: d,
        epsilon,
        seed,
        timestep: None,
    })
}

fn check_dims(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Result<()> {
    if a.ncols() != b.ncols() {
        return Err(Error::InvalidParameter(format!(
            "sample dimensions differ: {} vs {}",
            a.ncols(),
            b.ncols()
        )));
    }
    Ok(())
}

/// Rows of `x` kept when equalizing sample counts to `n`. Depends only on the
/// set sizes and the seed, so swapping the arguments of a distance keeps it exact.
fn subsample(x: ArrayView2<'_, f64>, n: usize, seed: u64) -> Array2<f64> {
    if x.nrows() == n {
        return x.to_owned();
    }
    let mut idx: Vec<usize> = (0..x.nrows()).collect();
    idx.shuffle(&mut substream(seed, "equalize-counts", x.nrows() as u64));
    idx.truncate(n);
    idx.sort_unstable();
    x.select(Axis(0), &idx)
}

fn equalize(a: ArrayView2<f64>, b: ArrayView2<f64>, seed: u64) -> (Array2<f64>, Array2<f64>) {
    let n = a.nrows().min(b.nrows());
    (subsample(a, n, seed), subsample(b, n, seed))
}

/// Mean over `n_proj` random unit directions of the 1D Wasserstein-1 distance
/// between the projected samples. The larger set is subsampled to equal size.
pub fn sliced_wasserstein(
    a: ArrayView2<f64>,
    b: ArrayView2<f64>,
    n_proj: usize,
    seed: u64,
) -> Result<f64> {
    if n_proj == 0 {
        return Err(Error::InvalidParameter("n_proj must be at least 1".into()));
    }
    check_dims(&a, &b)?;
    if a.nrows() == 0 || b.nrows() == 0 {
        return Err(Error::InvalidParameter(
            "sliced Wasserstein needs non-empty sample sets".into(),
        ));
    }
    let (a, b) = equalize(a, b, seed);
    let m = a.ncols();
    let mut rng = substream(seed, "sw-directions", 0);
    let mut dirs = Array2::from_shape_simple_fn((n_proj, m), || gaussian(&mut rng));
    for mut row in dirs.rows_mut() {
        let norm = row.dot(&row).sqrt();
        row.mapv_inplace(|v| v / norm);
    }
    let pa = a.dot(&dirs.t());
    let pb = b.dot(&dirs.t());
    let n = pa.nrows() as f64;
    let total: f64 = (0..n_proj)
        .map(|j| {
            let mut x = pa.column(j).to_vec();
            let mut y = pb.column(j).to_vec();
            x.sort_by(f64::total_cmp);
            y.sort_by(f64::total_cmp);
            x.iter().zip(&y).map(|(u, v)| (u - v).abs()).sum::<f64>() / n
        })
        .sum();
    Ok(total / n_proj as f64)
}

/// Kernel bandwidth choice for `mmd`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bandwidth {
    /// Median Euclidean distance over all pairs of the pooled sample.
    Median,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmdEstimate {
    /// Unbiased estimate of MMD².
    pub value: f64,
    /// Plug-in standard error of the U-statistic.
    pub std_error: f64,
    pub bandwidth: f64,
}

fn sq_dist(x: ndarray::ArrayView1<f64>, y: ndarray::ArrayView1<f64>) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn median_distance(pooled: &[ndarray::ArrayView1<f64>]) -> f64 {
    let mut d = Vec::with_capacity(pooled.len() * pooled.len().saturating_sub(1) / 2);
    for i in 0..pooled.len() {
        for j in i + 1..pooled.len() {
            d.push(sq_dist(pooled[i], pooled[j]).sqrt());
        }
    }
    d.sort_by(f64::total_cmp);
    let k = d.len();
    if k % 2 == 1 {
        d[k / 2]
    } else {
        0.5 * (d[k / 2 - 1] + d[k / 2])
    }
}

/// Unbiased Gaussian-kernel MMD² with `k(x, y) = exp(-|x - y|² / (2 h²))`.
///
/// Within-set means skip the diagonal; the cross term averages every pair.
pub fn mmd(a: ArrayView2<f64>, b: ArrayView2<f64>, bandwidth: Bandwidth) -> Result<MmdEstimate> {
    check_dims(&a, &b)?;
    let (n, m) = (a.nrows(), b.nrows());
    if n < 2 || m < 2 {
        return Err(Error::InvalidParameter(format!(
            "MMD needs at least 2 samples per set, got {n} and {m}"
        )));
    }
    let ra: Vec<_> = a.rows().into_iter().collect();
    let rb: Vec<_> = b.rows().into_iter().collect();
    let h = match bandwidth {
        Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() => h,
        Bandwidth::Fixed(h) => {
            return Err(Error::InvalidParameter(format!(
                "bandwidth must be positive, got {h}"
            )))
        }
        Bandwidth::Median => {
            let pooled: Vec<_> = ra.iter().chain(&rb).copied().collect();
            let med = median_distance(&pooled);
            if med > 0.0 {
                med
            } else {
                1.0
            }
        }
    };
    let k = |x: ndarray::ArrayView1<f64>, y: ndarray::ArrayView1<f64>| {
        (-sq_dist(x, y) / (2.0 * h * h)).exp()
    };
    let gram = |p: &[ndarray::ArrayView1<f64>], q: &[ndarray::ArrayView1<f64>]| {
        Array2::from_shape_fn((p.len(), q.len()), |(i, j)| k(p[i], q[j]))
    };
    let kaa = gram(&ra, &ra);
    let kbb = gram(&rb, &rb);
    let kab = gram(&ra, &rb);
    let off_mean = |g: &Array2<f64>| {
        let s = g.sum() - g.diag().sum();
        s / (g.nrows() * (g.nrows() - 1)) as f64
    };
    let value = off_mean(&kaa) + off_mean(&kbb) - 2.0 * kab.mean().unwrap_or(0.0);

    // Variance from per-sample contributions (first order) plus the pairwise
    // term, which dominates when the two distributions coincide.
    let row_terms = |g: &Array2<f64>, cross: ArrayView2<f64>| -> Vec<f64> {
        let n = g.nrows();
        (0..n)
            .map(|i| {
                (g.row(i).sum() - g[[i, i]]) / (n - 1) as f64 - cross.row(i).mean().unwrap_or(0.0)
            })
            .collect()
    };
    let var = |v: &[f64]| {
        let mu = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (v.len() - 1) as f64
    };
    let ta = row_terms(&kaa, kab.view());
    let tb = row_terms(&kbb, kab.t());
    let pair_var = {
        let all: Vec<f64> = kaa
            .iter()
            .chain(kbb.iter())
            .chain(kab.iter())
            .copied()
            .collect();
        var(&all)
    };
    let std_error = (4.0 * var(&ta) / n as f64
        + 4.0 * var(&tb) / m as f64
        + 2.0
            * pair_var
            * (1.0 / (n * (n - 1)) as f64 + 1.0 / (m * (m - 1)) as f64 + 2.0 / (n * m) as f64))
        .sqrt();
    Ok(MmdEstimate {
        value,
        std_error,
        bandwidth: h,
    })
}

const C2ST_RIDGE: f64 = 1e-3;
const C2ST_ITERS: usize = 300;

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Two-class data with class 0 rows first and class 1 rows second. Sums over
/// the classes are formed separately and added at the end so exchanging the
/// classes reproduces the same floating-point values.
struct TwoClass<'a> {
    x: [ArrayView2<'a, f64>; 2],
}

impl TwoClass<'_> {
    fn col_sums(&self, f: impl Fn(f64) -> f64 + Copy) -> Array1<f64> {
        let s = |x: &ArrayView2<f64>| x.map(|&v| f(v)).sum_axis(Axis(0));
        s(&self.x[0]) + s(&self.x[1])
    }

    fn count(&self) -> usize {
        self.x[0].nrows() + self.x[1].nrows()
    }
}

/// Logistic regression by gradient descent with a fixed step from the largest
/// eigenvalue of the standardized Gram matrix. Returns `(weights, bias, mean, std)`.
fn fit_logistic(data: &TwoClass) -> (Array1<f64>, f64, Array1<f64>, Array1<f64>) {
    let n = data.count() as f64;
    let mean = data.col_sums(|v| v) / n;
    let var = {
        let s0 = (&data.x[0] - &mean).mapv(|v| v * v).sum_axis(Axis(0));
        let s1 = (&data.x[1] - &mean).mapv(|v| v * v).sum_axis(Axis(0));
        (s0 + s1) / n
    };
    let std = var.mapv(|v| if v > 0.0 { v.sqrt() } else { 1.0 });
    let z = [(&data.x[0] - &mean) / &std, (&data.x[1] - &mean) / &std];
    let d = mean.len();

    let mut v = Array1::from_elem(d, 1.0 / (d as f64).sqrt());
    let mut lambda = 1.0;
    for _ in 0..30 {
        let w = z[0].t().dot(&z[0].dot(&v)) + z[1].t().dot(&z[1].dot(&v));
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            break;
        }
        lambda = norm / n;
        v = w / norm;
    }
    let step = 4.0 / (lambda + 1.0 + 4.0 * C2ST_RIDGE);

    let mut w = Array1::<f64>::zeros(d);
    let mut b = 0.0;
    for _ in 0..C2ST_ITERS {
        // Residual sigma(z) - y written so class 1 mirrors class 0 exactly.
        let r0 = z[0].dot(&w).mapv(|s| logistic(s + b));
        let r1 = z[1].dot(&w).mapv(|s| -logistic(-(s + b)));
        let gw = (z[0].t().dot(&r0) + z[1].t().dot(&r1)) / n + C2ST_RIDGE * &w;
        let gb = (r0.sum() + r1.sum()) / n;
        w = w - step * gw;
        b -= step * gb;
    }
    (w, b, mean, std)
}

/// Mean held-out accuracy of a logistic classifier over `folds` folds.
///
/// Sets are subsampled to equal size and share one fold assignment by row index,
/// so `c2st(a, b)` and `c2st(b, a)` agree exactly for the same seed.
pub fn c2st(a: ArrayView2<f64>, b: ArrayView2<f64>, folds: usize, seed: u64) -> Result<f64> {
    check_dims(&a, &b)?;
    if folds < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    let n = a.nrows().min(b.nrows());
    if n < folds {
        return Err(Error::InvalidParameter(format!(
            "C2ST needs at least {folds} samples per class, got {n}"
        )));
    }
    let (a, b) = equalize(a, b, seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut substream(seed, "c2st-folds", n as u64));
    let mut fold_of = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % folds;
    }
    let accs: Vec<f64> = (0..folds)
        .into_par_iter()
        .map(|k| {
            let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != k).collect();
            let test: Vec<usize> = (0..n).filter(|&i| fold_of[i] == k).collect();
            let (ta, tb) = (a.select(Axis(0), &train), b.select(Axis(0), &train));
            let (w, bias, mean, std) = fit_logistic(&TwoClass {
                x: [ta.view(), tb.view()],
            });
            let score = |x: &Array2<f64>| ((x - &mean) / &std).dot(&w).mapv(|s| s + bias);
            let s0 = score(&a.select(Axis(0), &test));
            let s1 = score(&b.select(Axis(0), &test));
            let correct =
                s0.iter().filter(|&&s| s < 0.0).count() + s1.iter().filter(|&&s| s > 0.0).count();
            correct as f64 / (2 * test.len()) as f64
        })
        .collect();
    Ok(accs.iter().sum::<f64>() / folds as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Heuristic {
    #[serde(rename = "sw")]
    SlicedWasserstein,
    Mmd,
    C2st,
}

impl Heuristic {
    pub const ALL: [Heuristic; 3] = [
        Heuristic::SlicedWasserstein,
        Heuristic::Mmd,
        Heuristic::C2st,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Heuristic::SlicedWasserstein => "sw",
            Heuristic::Mmd => "mmd",
            Heuristic::C2st => "c2st",
        }
    }

    pub fn evaluate(self, a: ArrayView2<f64>, b: ArrayView2<f64>, seed: u64) -> Result<f64> {
        match self {
            Heuristic::SlicedWasserstein => sliced_wasserstein(a, b, DEFAULT_PROJECTIONS, seed),
            Heuristic::Mmd => Ok(mmd(a, b, Bandwidth::Median)?.value),
            Heuristic::C2st => c2st(a, b, DEFAULT_FOLDS, seed),
        }
    }
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Heuristic {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Heuristic::ALL
            .into_iter()
            .find(|h| h.name() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown distance heuristic {s:?} (expected sw, mmd or c2st)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// `D(rho_t, rho_{t+1})`.
    Successive,
    /// `D(N(0, I), rho_{t+1})`.
    Gaussian,
}

impl Comparison {
    pub fn name(self) -> &'static str {
        match self {
            Comparison::Successive => "successive",
            Comparison::Gaussian => "gaussian",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Index of the earlier frame; the later frame is `t + 1`.
    pub t: usize,
    pub mean: f64,
    pub std: f64,
    pub heuristic: Heuristic,
    pub comparison: Comparison,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveConfig {
    pub heuristic: Heuristic,
    pub epsilon: f64,
    pub folds: usize,
    /// Fraction of samples kept in each fold.
    pub keep: f64,
    pub seed: u64,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self {
            heuristic: Heuristic::SlicedWasserstein,
            epsilon: DEFAULT_EPSILON,
            folds: DEFAULT_FOLDS,
            keep: 0.8,
            seed: 0,
        }
    }
}

/// Subtract the mean and divide by the standard deviation over every entry.
/// A constant sample set is only centered.
pub fn standardize(x: &mut Array2<f64>) {
    let n = x.len() as f64;
    let mean = x.sum() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
    x.mapv_inplace(|v| (v - mean) / sd);
}

fn frame_digest(f: &Field) -> [u8; 32] {
    let mut h = Sha256::new();
    for v in f.as_slice() {
        h.update(v.to_le_bytes());
    }
    h.finalize().into()
}

/// Distances between consecutive per-timestep distributions of a trajectory set,
/// and between a standard Gaussian and each later timestep.
///
/// Each timestep's samples are standardized, then all sets are projected with one
/// shared random matrix. For each fold a seeded `keep` fraction of trajectories
/// forms the empirical distributions; points report the mean and standard
/// deviation over folds. Trajectories are put in a canonical order first, so the
/// result does not depend on their order in the input.
pub fn distance_curves(trajectories: &[Vec<Field>], cfg: &CurveConfig) -> Result<Vec<CurvePoint>> {
    let n = trajectories.len();
    if n < 2 * cfg.folds.max(1) {
        return Err(Error::InvalidParameter(format!(
            "distance curves need at least {} trajectories, got {n}",
            2 * cfg.folds.max(1)
        )));
    }
    if cfg.folds == 0 || !(cfg.keep > 0.0 && cfg.keep <= 1.0) {
        return Err(Error::InvalidParameter(
            "folds must be positive and keep in (0, 1]".into(),
        ));
    }
    let nt = trajectories[0].len();
    if nt < 2 || trajectories.iter().any(|t| t.len() != nt) {
        return Err(Error::InvalidParameter(
            "trajectories must share a length of at least 2 frames".into(),
        ));
    }
    let shape = trajectories[0][0].shape();
    for t in trajectories {
        for f in t {
            if f.shape() != shape {
                return Err(Error::ShapeMismatch {
                    expected: shape,
                    found: f.shape(),
                });
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_cached_key(|&i| frame_digest(&trajectories[i][0]));

    let d = shape.0 * shape.1;
    let n_keep = ((cfg.keep * n as f64).round() as usize).clamp(2, n);
    let p = jl_matrix(jl_dimension(2 * n_keep, d, cfg.epsilon), d, cfg.seed);

    let projected: Vec<Array2<f64>> = (0..nt)
        .into_par_iter()
        .map(|t| {
            let mut x =
                Array2::from_shape_fn((n, d), |(i, j)| trajectories[order[i]][t].as_slice()[j]);
            standardize(&mut x);
            x.dot(&p.t())
        })
        .collect();

    let subsets: Vec<Vec<usize>> = (0..cfg.folds)
        .map(|k| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut substream(cfg.seed, "curve-fold", k as u64));
            idx.truncate(n_keep);
            idx.sort_unstable();
            idx
        })
        .collect();

    let per_t: Vec<Result<[CurvePoint; 2]>> = (0..nt - 1)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(cfg.seed, "gaussian-reference", t as u64);
            let noise = Array2::from_shape_simple_fn((n, d), || gaussian(&mut rng)).dot(&p.t());
            let mut succ = Vec::with_capacity(cfg.folds);
            let mut gauss = Vec::with_capacity(cfg.folds);
            for (k, idx) in subsets.iter().enumerate() {
                let seed = crate::rng::derive_seed(
                    cfg.seed,
                    "curve-heuristic",
                    (t * cfg.folds + k) as u64,
                );
                let now = projected[t].select(Axis(0), idx);
                let next = projected[t + 1].select(Axis(0), idx);
                let g = noise.select(Axis(0), idx);
                succ.push(cfg.heuristic.evaluate(now.view(), next.view(), seed)?);
                gauss.push(cfg.heuristic.evaluate(g.view(), next.view(), seed)?);
            }
            let point = |vals: &[f64], comparison| {
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let var =
                    vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
                CurvePoint {
                    t,
                    mean,
                    std: var.sqrt(),
                    heuristic: cfg.heuristic,
                    comparison,
                }
            };
            Ok([
                point(&succ, Comparison::Successive),
                point(&gauss, Comparison::Gaussian),
            ])
        })
        .collect();
    let mut out = Vec::with_capacity(2 * (nt - 1));
    for r in per_t {
        out.extend(r?);
    }
    Ok(out)
}

/// CSV with columns `t,mean,std,heuristic,comparison`.
pub fn curves_csv(points: &[CurvePoint]) -> String {
    let mut s = String::from("t,mean,std,heuristic,comparison\n");
    for p in points {
        let _ = writeln!(
            s,
            "{},{:e},{:e},{},{}",
            p.t,
            p.mean,
            p.std,
            p.heuristic.name(),
            p.comparison.name()
        );
    }
    s
}

/// Stack one frame per trajectory into an `n x d` sample matrix.
pub fn samples_at(trajectories: &[Vec<Field>], t: usize) -> Result<Array2<f64>> {
    let first = trajectories
        .first()
        .and_then(|tr| tr.get(t))
        .ok_or_else(|| Error::InvalidParameter(format!("no frame {t} to sample")))?;
    let d = first.len();
    let mut out = Array2::zeros((trajectories.len(), d));
    for (mut row, tr) in out.rows_mut().into_iter().zip(trajectories) {
        let f = tr.get(t).ok_or_else(|| {
            Error::InvalidParameter(format!("trajectory too short for frame {t}"))
        })?;
        first.ensure_same_shape(f)?;
        row.assign(&ndarray::ArrayView1::from(f.as_slice()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn jl_dimension_formula() {
        assert_eq!(jl_dimension(1000, 4096, 0.2), 1382);
        assert_eq!(jl_dimension(1000, 500, 0.2), 500);
    }

    #[test]
    fn sw_one_dimensional_matching() {
        let a = array![[0.0], [1.0]];
        let b = array![[1.0], [2.0]];
        let v = sliced_wasserstein(a.view(), b.view(), 16, 3).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "{v}");
        assert!(sliced_wasserstein(a.view(), b.view(), 0, 3).is_err());
    }

    #[test]
    fn heuristic_names_round_trip() {
        for h in Heuristic::ALL {
            assert_eq!(h.name().parse::<Heuristic>().unwrap(), h);
        }
        assert!("fid".parse::<Heuristic>().is_err());
    }

    #[test]
    fn csv_layout() {
        let p = CurvePoint {
            t: 3,
            mean: 0.5,
            std: 0.25,
            heuristic: Heuristic::Mmd,
            comparison: Comparison::Gaussian,
        };
        let csv = curves_csv(&[p]);
        assert_eq!(
            csv,
            "t,mean,std,heuristic,comparison\n3,5e-1,2.5e-1,mmd,gaussian\n"
        );
    }
}
