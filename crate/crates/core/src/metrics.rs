//! Deterministic and probabilistic evaluation metrics for rollouts and ensembles.
//!
//! Trajectories are passed as slices of frames. Every function checks that its
//! inputs agree in shape and length before reducing anything.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::spectral::{wavenumber, Fft2};

/// Stabilizer in the variance-scaled RMSE denominator.
pub const VRMSE_EPS: f64 = 1e-6;
/// Value reported for a band whose predicted power is zero while the true power is not.
pub const SRMSE_SENTINEL: f64 = 10.0;
pub const N_BANDS: usize = 3;

fn check_pair(pred: &[Field], truth: &[Field]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::InvalidParameter(format!(
            "trajectory lengths differ: prediction has {} frames, truth has {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidParameter("empty trajectory".into()));
    }
    for (p, t) in pred.iter().zip(truth) {
        t.ensure_same_shape(p)?;
    }
    Ok(())
}

fn rms_diff(a: &Field, b: &Field) -> f64 {
    let s: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    (s / a.len() as f64).sqrt()
}

fn rms_about_mean(f: &Field) -> f64 {
    let m = f.mean();
    let s: f64 = f.as_slice().iter().map(|x| (x - m) * (x - m)).sum();
    (s / f.len() as f64).sqrt()
}

fn time_mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Per-frame `rms(pred - truth) / (rms(truth - mean(truth)) + eps)`.
pub fn vrmse_series(pred: &[Field], truth: &[Field]) -> Result<Vec<f64>> {
    check_pair(pred, truth)?;
    Ok(pred
        .iter()
        .zip(truth)
        .map(|(p, t)| rms_diff(p, t) / (rms_about_mean(t) + VRMSE_EPS))
        .collect())
}

pub fn vrmse(pred: &[Field], truth: &[Field]) -> Result<f64> {
    Ok(time_mean(&vrmse_series(pred, truth)?))
}

/// Per-frame relative L2 error. An all-zero truth frame uses `VRMSE_EPS` as its norm.
pub fn nrmse_series(pred: &[Field], truth: &[Field]) -> Result<Vec<f64>> {
    check_pair(pred, truth)?;
    Ok(pred
        .iter()
        .zip(truth)
        .map(|(p, t)| {
            let norm = t.rms();
            rms_diff(p, t) / if norm > 0.0 { norm } else { VRMSE_EPS }
        })
        .collect())
}

pub fn nrmse(pred: &[Field], truth: &[Field]) -> Result<f64> {
    Ok(time_mean(&nrmse_series(pred, truth)?))
}

/// Isotropic power spectrum binned by rounded radial wavenumber.
///
/// `power[k]` sums `|F(kx, ky)|² / N²` over coefficients with
/// `round(sqrt(kx² + ky²)) == k`, where `F` is the unnormalized DFT and `N` the
/// number of grid points. With that scaling the total power equals the mean of
/// the squared field.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSpectrum {
    pub power: Vec<f64>,
}

impl RadialSpectrum {
    pub fn wavenumbers(&self) -> impl Iterator<Item = usize> {
        0..self.power.len()
    }

    pub fn total(&self) -> f64 {
        self.power.iter().sum()
    }
}

fn radial_bin(i: usize, j: usize, n: usize) -> usize {
    let (a, b) = (wavenumber(i, n) as f64, wavenumber(j, n) as f64);
    (a * a + b * b).sqrt().round() as usize
}

fn max_radial_bin(n: usize) -> usize {
    radial_bin(n / 2, n / 2, n)
}

fn spectrum_with(fft: &Fft2, field: &Field) -> RadialSpectrum {
    let n = field.rows();
    let coeffs = fft.forward_real(field.as_slice());
    let scale = ((n * n) as f64).powi(2);
    let mut power = vec![0.0; max_radial_bin(n) + 1];
    for (idx, c) in coeffs.iter().enumerate() {
        power[radial_bin(idx / n, idx % n, n)] += c.norm_sqr() / scale;
    }
    RadialSpectrum { power }
}

fn ensure_square(field: &Field) -> Result<usize> {
    let (r, c) = field.shape();
    if r != c || r == 0 {
        return Err(Error::InvalidParameter(format!(
            "power spectrum needs a square field, got {r}x{c}"
        )));
    }
    Ok(r)
}

pub fn radial_power_spectrum(field: &Field) -> Result<RadialSpectrum> {
    let n = ensure_square(field)?;
    Ok(spectrum_with(&Fft2::new(n), field))
}

/// Three log-spaced bands over radial wavenumbers `1..=n/2`.
///
/// Edges are `(n/2)^(b/3)` for `b = 0..=3`. Bin `k` belongs to band `b` when
/// `edge[b] <= k < edge[b+1]`; the top band also takes every bin beyond `n/2`
/// (the corners of the square spectrum). The constant mode is excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumBands {
    pub edges: [f64; N_BANDS + 1],
}

impl SpectrumBands {
    pub fn for_grid(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidParameter(format!(
                "grid too small for spectral bands: {n}"
            )));
        }
        let top = (n / 2) as f64;
        let mut edges = [0.0; N_BANDS + 1];
        for (b, e) in edges.iter_mut().enumerate() {
            *e = top.powf(b as f64 / N_BANDS as f64);
        }
        Ok(Self { edges })
    }

    /// Band index of radial bin `k`, or `None` for the constant mode.
    pub fn band_of(&self, k: usize) -> Option<usize> {
        if k == 0 {
            return None;
        }
        let kf = k as f64;
        Some(
            (1..N_BANDS)
                .rev()
                .find(|&b| kf >= self.edges[b])
                .unwrap_or(0),
        )
    }

    /// Radial bins of each band up to `max_bin` inclusive.
    pub fn members(&self, max_bin: usize) -> [Vec<usize>; N_BANDS] {
        let mut out: [Vec<usize>; N_BANDS] = Default::default();
        for k in 1..=max_bin {
            if let Some(b) = self.band_of(k) {
                out[b].push(k);
            }
        }
        out
    }

    pub fn band_power(&self, s: &RadialSpectrum) -> [f64; N_BANDS] {
        let mut out = [0.0; N_BANDS];
        for (k, p) in s.power.iter().enumerate() {
            if let Some(b) = self.band_of(k) {
                out[b] += p;
            }
        }
        out
    }
}

/// How spectral power is aggregated inside a band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SrmseMode {
    /// Sum power over the band, then take one ratio per band and time.
    #[default]
    Pooled,
    /// Ratio per radial bin, then root-mean-square over the bins of the band.
    PerBin,
}

impl FromStr for SrmseMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pooled" => Ok(Self::Pooled),
            "per-bin" => Ok(Self::PerBin),
            other => Err(Error::InvalidParameter(format!(
                "unknown SRMSE mode {other:?}"
            ))),
        }
    }
}

fn relative_power_error(p_true: f64, p_pred: f64) -> f64 {
    if p_pred > 0.0 {
        (1.0 - p_true / p_pred).abs()
    } else if p_true > 0.0 {
        SRMSE_SENTINEL
    } else {
        0.0
    }
}

/// Per-frame relative band-power errors `|1 - p_true / p_pred|`.
pub fn srmse_series(
    pred: &[Field],
    truth: &[Field],
    mode: SrmseMode,
) -> Result<Vec<[f64; N_BANDS]>> {
    check_pair(pred, truth)?;
    let n = ensure_square(&truth[0])?;
    let fft = Fft2::new(n);
    let bands = SpectrumBands::for_grid(n)?;
    let members = bands.members(max_radial_bin(n));
    Ok(pred
        .iter()
        .zip(truth)
        .map(|(p, t)| {
            let (sp, st) = (spectrum_with(&fft, p), spectrum_with(&fft, t));
            match mode {
                SrmseMode::Pooled => {
                    let (bp, bt) = (bands.band_power(&sp), bands.band_power(&st));
                    std::array::from_fn(|b| relative_power_error(bt[b], bp[b]))
                }
                SrmseMode::PerBin => std::array::from_fn(|b| {
                    let bins = &members[b];
                    let ss: f64 = bins
                        .iter()
                        .map(|&k| relative_power_error(st.power[k], sp.power[k]).powi(2))
                        .sum();
                    (ss / bins.len().max(1) as f64).sqrt()
                }),
            }
        })
        .collect())
}

/// Time-averaged SRMSE in the low, mid and high bands.
pub fn srmse_bands(pred: &[Field], truth: &[Field], mode: SrmseMode) -> Result<[f64; N_BANDS]> {
    let series = srmse_series(pred, truth, mode)?;
    let nt = series.len() as f64;
    Ok(std::array::from_fn(|b| {
        series.iter().map(|r| r[b]).sum::<f64>() / nt
    }))
}

/// Latitude/longitude grid with cell-edge latitudes in radians (rows are latitudes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatGrid {
    pub n_lat: usize,
    pub n_lon: usize,
    pub lat_upper: Vec<f64>,
    pub lat_lower: Vec<f64>,
}

impl LatGrid {
    pub fn new(n_lon: usize, lat_lower: Vec<f64>, lat_upper: Vec<f64>) -> Result<Self> {
        if lat_lower.len() != lat_upper.len() || lat_lower.is_empty() || n_lon == 0 {
            return Err(Error::InvalidParameter(
                "latitude edges must be non-empty and paired".into(),
            ));
        }
        if lat_lower.iter().zip(&lat_upper).any(|(l, u)| !(u > l)) {
            return Err(Error::InvalidParameter(
                "each upper latitude edge must exceed its lower edge".into(),
            ));
        }
        Ok(Self {
            n_lat: lat_lower.len(),
            n_lon,
            lat_upper,
            lat_lower,
        })
    }

    /// Equal-angle rows spanning the south to north pole.
    pub fn equiangular(n_lat: usize, n_lon: usize) -> Result<Self> {
        let h = 2.0 * FRAC_PI_2 / n_lat.max(1) as f64;
        let lower = (0..n_lat).map(|i| -FRAC_PI_2 + i as f64 * h).collect();
        let upper = (0..n_lat)
            .map(|i| -FRAC_PI_2 + (i + 1) as f64 * h)
            .collect();
        Self::new(n_lon, lower, upper)
    }

    /// Equal-area rows, so every weight is 1 up to rounding. Models a flat domain.
    pub fn equal_area(n_lat: usize, n_lon: usize) -> Result<Self> {
        let edge = |i: usize| {
            (-1.0 + 2.0 * i as f64 / n_lat.max(1) as f64)
                .clamp(-1.0, 1.0)
                .asin()
        };
        let lower = (0..n_lat).map(edge).collect();
        let upper = (0..n_lat).map(|i| edge(i + 1)).collect();
        Self::new(n_lon, lower, upper)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_lat, self.n_lon)
    }
}

/// Row weights `(sin u_i - sin l_i) / mean_j (sin u_j - sin l_j)`; they average to 1.
pub fn lat_weights(grid: &LatGrid) -> Vec<f64> {
    let raw: Vec<f64> = grid
        .lat_upper
        .iter()
        .zip(&grid.lat_lower)
        .map(|(u, l)| u.sin() - l.sin())
        .collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    raw.into_iter().map(|r| r / mean).collect()
}

fn check_grid(f: &Field, grid: &LatGrid) -> Result<()> {
    if f.shape() != grid.shape() {
        return Err(Error::ShapeMismatch {
            expected: grid.shape(),
            found: f.shape(),
        });
    }
    Ok(())
}

fn weighted_mean(f: &Field, w: &[f64], g: impl Fn(f64) -> f64) -> f64 {
    let cols = f.cols();
    let s: f64 = f
        .as_slice()
        .chunks_exact(cols)
        .zip(w)
        .map(|(row, wi)| wi * row.iter().map(|&v| g(v)).sum::<f64>())
        .sum();
    s / f.len() as f64
}

fn lerr(pred: &Field, truth: &Field, grid: &LatGrid, g: impl Fn(f64) -> f64) -> Result<f64> {
    check_grid(truth, grid)?;
    truth.ensure_same_shape(pred)?;
    let diff = pred.zip_map(truth, |a, b| a - b);
    Ok(weighted_mean(&diff, &lat_weights(grid), g))
}

pub fn lrmse(pred: &Field, truth: &Field, grid: &LatGrid) -> Result<f64> {
    Ok(lerr(pred, truth, grid, |d| d * d)?.sqrt())
}

pub fn lmae(pred: &Field, truth: &Field, grid: &LatGrid) -> Result<f64> {
    lerr(pred, truth, grid, f64::abs)
}

/// `lrmse` of the time means of two rollouts.
pub fn climatological_bias(pred: &[Field], truth: &[Field], grid: &LatGrid) -> Result<f64> {
    check_pair(pred, truth)?;
    let avg = |frames: &[Field]| {
        let mut acc = Field::zeros(frames[0].rows(), frames[0].cols());
        for f in frames {
            acc.axpy(1.0, f);
        }
        acc.scale(1.0 / frames.len() as f64)
    };
    lrmse(&avg(pred), &avg(truth), grid)
}

/// `M` member rollouts and the observed trajectory they forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleForecast {
    pub members: Vec<Vec<Field>>,
    pub observation: Vec<Field>,
}

impl EnsembleForecast {
    pub fn new(members: Vec<Vec<Field>>, observation: Vec<Field>) -> Result<Self> {
        if members.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "an ensemble needs at least 2 members, got {}",
                members.len()
            )));
        }
        for m in &members {
            check_pair(m, &observation)?;
        }
        Ok(Self {
            members,
            observation,
        })
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn lead_times(&self) -> usize {
        self.observation.len()
    }

    fn at(&self, t: usize, grid: &LatGrid) -> Result<(Vec<&Field>, &Field)> {
        let obs = self.observation.get(t).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "lead time {t} beyond forecast length {}",
                self.lead_times()
            ))
        })?;
        check_grid(obs, grid)?;
        Ok((self.members.iter().map(|m| &m[t]).collect(), obs))
    }
}

/// Fair CRPS at lead time `t` with latitude-weighted absolute errors.
///
/// The pair term `sum_{m,n} |x_m - x_n|` is evaluated per grid point from the
/// sorted members as `2 sum_k (2k - M + 1) x_(k)`.
pub fn crps(ens: &EnsembleForecast, t: usize, grid: &LatGrid) -> Result<f64> {
    let (members, obs) = ens.at(t, grid)?;
    let m = members.len();
    let w = lat_weights(grid);
    let skill = members
        .iter()
        .map(|f| lmae(f, obs, grid))
        .sum::<Result<f64>>()?
        / m as f64;

    let (rows, cols) = obs.shape();
    let mut column = vec![0.0; m];
    let mut pair = 0.0;
    for r in 0..rows {
        let mut row_sum = 0.0;
        for c in 0..cols {
            for (slot, f) in column.iter_mut().zip(&members) {
                *slot = f.get(r, c);
            }
            column.sort_by(f64::total_cmp);
            row_sum += column
                .iter()
                .enumerate()
                .map(|(k, x)| (2.0 * k as f64 - m as f64 + 1.0) * x)
                .sum::<f64>()
                * 2.0;
        }
        pair += w[r] * row_sum;
    }
    pair /= (rows * cols) as f64;
    Ok(skill - pair / (2.0 * (m * (m - 1)) as f64))
}

/// Ensemble spread over the RMSE of the ensemble mean at lead time `t`.
///
/// Spread is `sqrt(mean_ij w_i var_m f(i, j))` with the unbiased member variance,
/// normalized by the grid size so a uniform grid gives a plain std/RMSE ratio.
pub fn ssr(ens: &EnsembleForecast, t: usize, grid: &LatGrid) -> Result<f64> {
    let (members, obs) = ens.at(t, grid)?;
    let m = members.len() as f64;
    let (rows, cols) = obs.shape();
    let mean = Field::from_fn(rows, cols, |r, c| {
        members.iter().map(|f| f.get(r, c)).sum::<f64>() / m
    });
    let var = Field::from_fn(rows, cols, |r, c| {
        let mu = mean.get(r, c);
        members
            .iter()
            .map(|f| (f.get(r, c) - mu).powi(2))
            .sum::<f64>()
            / (m - 1.0)
    });
    let spread = weighted_mean(&var, &lat_weights(grid), |v| v).sqrt();
    let skill = lrmse(&mean, obs, grid)?;
    Ok(if skill > 0.0 {
        spread / skill
    } else if spread > 0.0 {
        f64::INFINITY
    } else {
        0.0
    })
}

/// Initialization times for lead-time averaging: every `every` steps, keeping
/// only starts that leave room for a forecast of `horizon` steps.
pub fn init_times(n_steps: usize, every: usize, horizon: usize) -> Vec<usize> {
    if every == 0 || n_steps <= horizon {
        return Vec::new();
    }
    (0..n_steps - horizon).step_by(every).collect()
}

/// Steps between deterministic forecast starts at 6-hour data (one day).
pub const DETERMINISTIC_INIT_EVERY: usize = 4;
/// Steps between ensemble forecast starts at 6-hour data (three days).
pub const ENSEMBLE_INIT_EVERY: usize = 12;

/// Average per-lead-time series across forecast initializations.
pub fn lead_time_average(series: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = series
        .first()
        .ok_or_else(|| Error::InvalidParameter("no forecasts to average".into()))?;
    if series.iter().any(|s| s.len() != first.len()) {
        return Err(Error::InvalidParameter(
            "forecasts have different lengths".into(),
        ));
    }
    Ok((0..first.len())
        .map(|k| series.iter().map(|s| s[k]).sum::<f64>() / series.len() as f64)
        .collect())
}

/// Metrics available to deterministic rollout reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Vrmse,
    Nrmse,
    Srmse,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Vrmse, Metric::Nrmse, Metric::Srmse];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Vrmse => "vrmse",
            Metric::Nrmse => "nrmse",
            Metric::Srmse => "srmse",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown metric {s:?}")))
    }
}

pub const BAND_NAMES: [&str; N_BANDS] = ["low", "mid", "high"];

/// One value per metric per lead time, plus time-averaged summaries.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Column names after `t`.
    pub columns: Vec<String>,
    /// `rows[t][c]` is column `c` at lead time `t`.
    pub rows: Vec<Vec<f64>>,
    pub summary: BTreeMap<String, f64>,
}

impl MetricReport {
    /// Per-lead-time metrics for a set of rollouts against their truths, averaged
    /// over rollouts at each lead time. Frame 0 (the shared initial condition) is
    /// skipped when `skip_initial` is set.
    pub fn from_rollouts(
        preds: &[Vec<Field>],
        truths: &[Vec<Field>],
        metrics: &[Metric],
        mode: SrmseMode,
        skip_initial: bool,
    ) -> Result<Self> {
        if metrics.is_empty() {
            return Err(Error::InvalidParameter("metric set is empty".into()));
        }
        if preds.len() != truths.len() || preds.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "need matching non-empty rollout sets, got {} predictions and {} truths",
                preds.len(),
                truths.len()
            )));
        }
        let mut metrics = metrics.to_vec();
        metrics.sort();
        metrics.dedup();
        let start = usize::from(skip_initial);
        let mut columns = Vec::new();
        for m in &metrics {
            match m {
                Metric::Srmse => columns.extend(BAND_NAMES.iter().map(|b| format!("srmse_{b}"))),
                other => columns.push(other.name().to_string()),
            }
        }
        let mut per_rollout = Vec::with_capacity(preds.len());
        for (p, t) in preds.iter().zip(truths) {
            check_pair(p, t)?;
            if p.len() <= start {
                return Err(Error::InvalidParameter(
                    "rollout has no frames to score".into(),
                ));
            }
            let (p, t) = (&p[start..], &t[start..]);
            let mut cols: Vec<Vec<f64>> = Vec::new();
            for m in &metrics {
                match m {
                    Metric::Vrmse => cols.push(vrmse_series(p, t)?),
                    Metric::Nrmse => cols.push(nrmse_series(p, t)?),
                    Metric::Srmse => {
                        let s = srmse_series(p, t, mode)?;
                        for b in 0..N_BANDS {
                            cols.push(s.iter().map(|r| r[b]).collect());
                        }
                    }
                }
            }
            per_rollout.push(cols);
        }
        let nt = per_rollout[0][0].len();
        if per_rollout.iter().any(|c| c[0].len() != nt) {
            return Err(Error::InvalidParameter(
                "rollouts have different lengths".into(),
            ));
        }
        let rows: Vec<Vec<f64>> = (0..nt)
            .map(|k| {
                (0..columns.len())
                    .map(|c| {
                        per_rollout.iter().map(|r| r[c][k]).sum::<f64>() / per_rollout.len() as f64
                    })
                    .collect()
            })
            .collect();
        let summary = columns
            .iter()
            .enumerate()
            .map(|(c, name)| {
                (
                    name.clone(),
                    rows.iter().map(|r| r[c]).sum::<f64>() / nt as f64,
                )
            })
            .collect();
        Ok(Self {
            columns,
            rows,
            summary,
        })
    }

    /// CSV with a header row `t,<columns>` and one row per lead time.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for c in &self.columns {
            s.push(',');
            s.push_str(c);
        }
        s.push('\n');
        for (t, row) in self.rows.iter().enumerate() {
            let _ = write!(s, "{t}");
            for v in row {
                let _ = write!(s, ",{v:e}");
            }
            s.push('\n');
        }
        s
    }

    pub fn write(&self, csv_path: &Path, json_path: &Path) -> Result<()> {
        write_bytes(csv_path, self.to_csv().as_bytes())?;
        let json = serde_json::to_vec_pretty(self)?;
        write_bytes(json_path, &json)
    }
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(n: usize, frames: usize, f: impl Fn(usize, usize, usize) -> f64) -> Vec<Field> {
        (0..frames)
            .map(|t| Field::from_fn(n, n, |r, c| f(t, r, c)))
            .collect()
    }

    #[test]
    fn band_edges_for_sixteen_radial_bins() {
        let b = SpectrumBands::for_grid(32).unwrap();
        assert_eq!(b.edges[0], 1.0);
        assert_eq!(b.edges[3], 16.0);
        let m = b.members(16);
        assert_eq!(m[0], vec![1, 2]);
        assert_eq!(m[1], vec![3, 4, 5, 6]);
        assert_eq!(m[2], (7..=16).collect::<Vec<_>>());
        assert_eq!(b.band_of(0), None);
        assert_eq!(b.band_of(22), Some(2));
    }

    #[test]
    fn lead_time_helpers() {
        assert_eq!(init_times(10, 3, 4), vec![0, 3]);
        assert!(init_times(4, 1, 4).is_empty());
        let avg = lead_time_average(&[vec![1.0, 2.0], vec![3.0, 6.0]]).unwrap();
        assert_eq!(avg, vec![2.0, 4.0]);
        assert!(lead_time_average(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn report_layout() {
        let truth = traj(16, 4, |t, r, c| ((t + 1) * (r + 2 * c)) as f64);
        let pred = traj(16, 4, |t, r, c| 2.0 * ((t + 1) * (r + 2 * c)) as f64);
        let rep = MetricReport::from_rollouts(
            &[pred],
            &[truth],
            &[Metric::Srmse, Metric::Nrmse, Metric::Vrmse],
            SrmseMode::Pooled,
            true,
        )
        .unwrap();
        assert_eq!(
            rep.columns,
            ["vrmse", "nrmse", "srmse_low", "srmse_mid", "srmse_high"]
        );
        assert_eq!(rep.rows.len(), 3);
        assert!((rep.summary["nrmse"] - 1.0).abs() < 1e-12);
        assert!((rep.summary["srmse_low"] - 0.75).abs() < 1e-12);
        let csv = rep.to_csv();
        assert!(csv.starts_with("t,vrmse,nrmse,srmse_low,srmse_mid,srmse_high\n"));
        assert_eq!(csv.lines().count(), 4);
        assert!(
            MetricReport::from_rollouts(&[], &[], &[Metric::Vrmse], SrmseMode::Pooled, false)
                .is_err()
        );
    }

    #[test]
    fn empty_metric_set_is_rejected() {
        let t = traj(16, 2, |_, _, _| 1.0);
        let err = MetricReport::from_rollouts(
            std::slice::from_ref(&t),
            std::slice::from_ref(&t),
            &[],
            SrmseMode::Pooled,
            false,
        )
        .unwrap_err();
        assert!(err.to_string().contains("empty"));
    }
}
