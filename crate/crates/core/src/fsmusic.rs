//! Frequency-spatial MUSIC: snapshot stacking, covariance and subspace split,
//! model order, range-angle spectrum and peak extraction. A conventional
//! (antenna-only) MUSIC baseline lives here too.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::codes::HopPlan;
use crate::error::{Error, Result};
use crate::waveform::{element_phase, ArrayConfig, FmcwConfig, SPEED_OF_LIGHT};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Demodulated observation windows cut into hop segments.
/// `windows[w][m]` is the N_f x N_h block of antenna `m` in window `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedSignal {
    pub n_a: usize,
    pub n_f: usize,
    pub n_h: usize,
    pub windows: Vec<Vec<DMatrix<Complex64>>>,
}

impl SegmentedSignal {
    fn validate(&self) -> Result<()> {
        if self.windows.is_empty() || self.n_a == 0 || self.n_f == 0 || self.n_h == 0 {
            return Err(Error::ShapeMismatch("empty segmented signal".into()));
        }
        for (w, win) in self.windows.iter().enumerate() {
            if win.len() != self.n_a {
                return Err(Error::ShapeMismatch(format!(
                    "window {w} has {} antennas, expected {}",
                    win.len(),
                    self.n_a
                )));
            }
            for (m, block) in win.iter().enumerate() {
                if block.shape() != (self.n_f, self.n_h) {
                    return Err(Error::ShapeMismatch(format!(
                        "window {w} antenna {m} block is {:?}, expected ({}, {})",
                        block.shape(),
                        self.n_f,
                        self.n_h
                    )));
                }
            }
        }
        Ok(())
    }

    /// Window average laid out as n_a x (n_f * n_h), segments back to back.
    pub fn mean_window(&self) -> DMatrix<Complex64> {
        let n = self.n_f * self.n_h;
        let mut out = DMatrix::from_element(self.n_a, n, ZERO);
        let scale = 1.0 / self.windows.len() as f64;
        for win in &self.windows {
            for (m, block) in win.iter().enumerate() {
                for s in 0..self.n_f {
                    for k in 0..self.n_h {
                        out[(m, s * self.n_h + k)] += block[(s, k)] * scale;
                    }
                }
            }
        }
        out
    }

    /// Coherent average over repeats: window `w` is averaged with every window
    /// `w + k * stride`, leaving `stride` windows. Meant for returns that repeat
    /// unchanged every `stride` windows, e.g. once per chirp. Also returns the
    /// per-sample noise power left in the averages, estimated from the scatter
    /// of the repeats about their mean over samples that carry signal (zero
    /// without repeats, or when the scatter is at rounding level).
    pub fn integrate(&self, stride: usize) -> Result<(SegmentedSignal, f64)> {
        self.validate()?;
        let n_w = self.windows.len();
        if stride == 0 || n_w % stride != 0 {
            return Err(Error::ShapeMismatch(format!("{n_w} windows do not split into repeats of {stride}")));
        }
        let reps = n_w / stride;
        let scale = Complex64::new(1.0 / reps as f64, 0.0);
        let (mut dev, mut power, mut count) = (0.0, 0.0, 0usize);
        let mut windows = Vec::with_capacity(stride);
        for r in 0..stride {
            let group: Vec<&Vec<DMatrix<Complex64>>> = self.windows.iter().skip(r).step_by(stride).collect();
            let mean: Vec<DMatrix<Complex64>> = (0..self.n_a)
                .map(|m| {
                    let mut acc = DMatrix::from_element(self.n_f, self.n_h, ZERO);
                    for win in &group {
                        acc += &win[m];
                    }
                    acc * scale
                })
                .collect();
            for (m, avg) in mean.iter().enumerate() {
                for (i, a) in avg.iter().enumerate() {
                    if group.iter().all(|win| win[m][i] == ZERO) {
                        continue;
                    }
                    count += 1;
                    power += a.norm_sqr();
                    dev += group.iter().map(|win| (win[m][i] - a).norm_sqr()).sum::<f64>();
                }
            }
            windows.push(mean);
        }
        let noise = if reps > 1 && count > 0 {
            dev / (count as f64 * (reps - 1) as f64) / reps as f64
        } else {
            0.0
        };
        // identical repeats leave only rounding in the scatter
        let noise = if noise <= 1e-13 * power / count.max(1) as f64 { 0.0 } else { noise };
        let seg = SegmentedSignal {
            n_a: self.n_a,
            n_f: self.n_f,
            n_h: self.n_h,
            windows,
        };
        Ok((seg, noise))
    }

    /// All windows laid end to end as the segments of a single window.
    pub fn concat_windows(&self) -> SegmentedSignal {
        let n_f = self.n_f * self.windows.len();
        let window = (0..self.n_a)
            .map(|m| DMatrix::from_fn(n_f, self.n_h, |s, k| self.windows[s / self.n_f][m][(s % self.n_f, k)]))
            .collect();
        SegmentedSignal {
            n_a: self.n_a,
            n_f,
            n_h: self.n_h,
            windows: vec![window],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FsSnapshotMatrix {
    /// (n_a * n_f) x (n_h * windows); row (m, s) sits at index m * n_f + s.
    pub entries: DMatrix<Complex64>,
    pub n_a: usize,
    pub n_f: usize,
    pub n_h: usize,
}

/// Stack segments antenna-major, hop-minor; windows append columns.
pub fn build_fs_matrix(seg: &SegmentedSignal) -> Result<FsSnapshotMatrix> {
    seg.validate()?;
    let rows = seg.n_a * seg.n_f;
    let cols = seg.n_h * seg.windows.len();
    let mut entries = DMatrix::from_element(rows, cols, ZERO);
    for (w, win) in seg.windows.iter().enumerate() {
        for (m, block) in win.iter().enumerate() {
            for s in 0..seg.n_f {
                for k in 0..seg.n_h {
                    entries[(m * seg.n_f + s, w * seg.n_h + k)] = block[(s, k)];
                }
            }
        }
    }
    Ok(FsSnapshotMatrix {
        entries,
        n_a: seg.n_a,
        n_f: seg.n_f,
        n_h: seg.n_h,
    })
}

impl FsSnapshotMatrix {
    /// Inverse of [`build_fs_matrix`].
    pub fn unstack(&self) -> SegmentedSignal {
        let n_windows = self.entries.ncols() / self.n_h;
        let windows = (0..n_windows)
            .map(|w| {
                (0..self.n_a)
                    .map(|m| {
                        DMatrix::from_fn(self.n_f, self.n_h, |s, k| {
                            self.entries[(m * self.n_f + s, w * self.n_h + k)]
                        })
                    })
                    .collect()
            })
            .collect();
        SegmentedSignal {
            n_a: self.n_a,
            n_f: self.n_f,
            n_h: self.n_h,
            windows,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    pub matrix: DMatrix<Complex64>,
    /// Descending, clamped at zero.
    pub eigvals: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `eigvals`.
    pub eigvecs: DMatrix<Complex64>,
}

impl CovarianceEstimate {
    pub fn dim(&self) -> usize {
        self.eigvals.len()
    }

    /// First `i_paths` eigenvector columns.
    pub fn signal_subspace(&self, i_paths: usize) -> DMatrix<Complex64> {
        self.eigvecs.columns(0, i_paths).into_owned()
    }

    pub fn noise_subspace(&self, i_paths: usize) -> DMatrix<Complex64> {
        self.eigvecs.columns(i_paths, self.dim() - i_paths).into_owned()
    }
}

/// Hermitian decomposition of an explicitly formed covariance.
pub fn covariance_from_matrix(matrix: DMatrix<Complex64>) -> CovarianceEstimate {
    let eig = SymmetricEigen::new(matrix.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigvals = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let eigvecs = DMatrix::from_fn(matrix.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    CovarianceEstimate {
        matrix,
        eigvals,
        eigvecs,
    }
}

/// Sample covariance over all snapshot columns.
pub fn estimate_covariance(m: &FsSnapshotMatrix) -> Result<CovarianceEstimate> {
    let cols = m.entries.ncols();
    if m.n_h < 2 || cols < 2 {
        return Err(Error::TooFewSnapshots(cols));
    }
    let r = &m.entries * m.entries.adjoint() / Complex64::new(cols as f64, 0.0);
    // enforce exact Hermitian symmetry against rounding
    let r = (&r + r.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(covariance_from_matrix(r))
}

pub const DEFAULT_GAP_RATIO: f64 = 10.0;

/// floor(2 * N_a * N_f / 3).
pub fn max_resolvable_paths(n_a: usize, n_f: usize) -> usize {
    2 * n_a * n_f / 3
}

/// Largest I with eigval_I / eigval_{I+1} >= `gap_ratio`, capped at
/// [`max_resolvable_paths`]. Eigenvalues below 1e-13 of the largest are
/// treated as exact zeros.
pub fn estimate_num_paths(eigvals: &[f64], n_a: usize, n_f: usize, gap_ratio: f64) -> usize {
    let n = eigvals.len();
    if n == 0 || !(eigvals[0] > 0.0) {
        return 0;
    }
    let floor = eigvals[0] * 1e-13;
    let cap = max_resolvable_paths(n_a, n_f).min(n.saturating_sub(1));
    let mut best = 0;
    for i in 1..n {
        let hi = eigvals[i - 1];
        let lo = eigvals[i];
        if hi <= floor {
            break;
        }
        if lo <= floor || hi / lo >= gap_ratio {
            best = i;
        }
    }
    // rank-deficient tail: everything above the floor is signal
    best.min(cap)
}

/// Minimum description length order for `snapshots` independent columns
/// (Wax and Kailath). Meant for full-rank, noisy covariances.
pub fn mdl_num_paths(eigvals: &[f64], snapshots: usize) -> usize {
    let p = eigvals.len();
    if p == 0 || snapshots == 0 || !(eigvals[p - 1] > 0.0) {
        return 0;
    }
    let n = snapshots as f64;
    let mut best = (f64::INFINITY, 0);
    for k in 0..p {
        let tail = &eigvals[k..];
        let m = tail.len() as f64;
        let log_geo = tail.iter().map(|e| e.ln()).sum::<f64>() / m;
        let log_ari = (tail.iter().sum::<f64>() / m).ln();
        let kf = k as f64;
        let score = n * m * (log_ari - log_geo) + 0.5 * kf * (2.0 * p as f64 - kf) * n.ln();
        if score < best.0 {
            best = (score, k);
        }
    }
    best.1
}

/// Model order used by the estimators. A rank-deficient covariance (tail at the
/// 1e-13 floor) goes by the eigen gap; a full-rank one by the larger of the gap
/// rule and [`mdl_num_paths`].
pub fn select_num_paths(eigvals: &[f64], n_a: usize, n_f: usize, snapshots: usize, gap_ratio: f64) -> usize {
    let gap = estimate_num_paths(eigvals, n_a, n_f, gap_ratio);
    let Some(&last) = eigvals.last() else { return 0 };
    if last <= eigvals[0] * 1e-13 {
        return gap;
    }
    let cap = max_resolvable_paths(n_a, n_f).min(eigvals.len().saturating_sub(1));
    gap.max(mdl_num_paths(eigvals, snapshots)).min(cap)
}

/// Model order for a known per-sample noise power: eigenvalues above the
/// Marchenko-Pastur edge of white noise, noise * (1 + sqrt(p / n))^2, times
/// `margin`. `active` is the number of snapshot columns that carry samples and
/// `total` the divisor used for the covariance. Capped at
/// [`max_resolvable_paths`].
pub fn noise_num_paths(eigvals: &[f64], noise: f64, active: usize, total: usize, n_a: usize, n_f: usize, margin: f64) -> usize {
    if active == 0 || total == 0 {
        return 0;
    }
    let p = eigvals.len() as f64;
    let edge = noise * active as f64 / total as f64 * (1.0 + (p / active as f64).sqrt()).powi(2) * margin;
    let cap = max_resolvable_paths(n_a, n_f).min(eigvals.len().saturating_sub(1));
    eigvals.iter().take_while(|&&e| e > edge).count().min(cap)
}

/// Order for the estimators: [`noise_num_paths`] when a noise power is known
/// and resolvable above rounding, [`select_num_paths`] otherwise.
fn model_order(
    eigvals: &[f64],
    x: &DMatrix<Complex64>,
    n_a: usize,
    n_f: usize,
    cfg: &EstimatorConfig,
    noise: Option<f64>,
) -> usize {
    let top = eigvals.first().copied().unwrap_or(0.0);
    let i = match noise {
        Some(s) if s > top * 1e-13 => {
            let active = (0..x.ncols()).filter(|&c| x.column(c).iter().any(|v| *v != ZERO)).count();
            noise_num_paths(eigvals, s, active, x.ncols(), n_a, n_f, cfg.noise_margin)
        }
        _ => select_num_paths(eigvals, n_a, n_f, x.ncols(), cfg.gap_ratio),
    };
    i.min(cfg.max_paths)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub d_min: f64,
    pub d_max: f64,
    pub d_step: f64,
    pub eta_min_deg: f64,
    pub eta_max_deg: f64,
    pub eta_step_deg: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            d_min: 0.5,
            d_max: 10.0,
            d_step: 0.01,
            eta_min_deg: -60.0,
            eta_max_deg: 60.0,
            eta_step_deg: 0.25,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_step > 0.0) || !(self.d_max > self.d_min) || !(self.d_min >= 0.0) {
            return Err(Error::config("grid.d", "need 0 <= d_min < d_max and d_step > 0"));
        }
        if !(self.eta_step_deg > 0.0)
            || !(self.eta_max_deg > self.eta_min_deg)
            || self.eta_min_deg < -90.0
            || self.eta_max_deg > 90.0
        {
            return Err(Error::config("grid.eta", "need -90 <= eta_min < eta_max <= 90 and step > 0"));
        }
        Ok(())
    }

    fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| lo + i as f64 * step).collect()
    }

    pub fn d_axis(&self) -> Vec<f64> {
        Self::axis(self.d_min, self.d_max, self.d_step)
    }

    /// Angles in radians.
    pub fn eta_axis(&self) -> Vec<f64> {
        Self::axis(self.eta_min_deg, self.eta_max_deg, self.eta_step_deg)
            .into_iter()
            .map(f64::to_radians)
            .collect()
    }

    pub fn eta_step(&self) -> f64 {
        self.eta_step_deg.to_radians()
    }
}

/// Phase model of one segmented window.
///
/// A path at one-way distance d and angle eta contributes, at antenna m and
/// window sample n (segment s = n / N_h), the phase
/// `2 pi beat(d) n / fs - 2 pi f_s d / c + psi_m(eta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringModel {
    pub n_a: usize,
    pub spacing: f64,
    pub wavelength: f64,
    pub sample_rate: f64,
    pub slope: f64,
    pub seg_len: usize,
    /// Tag carrier of each segment; zeros for unmodulated returns.
    pub seg_freqs: Vec<f64>,
}

impl SteeringModel {
    /// Model for a demodulated TLC window following `plan` (first N_f slots).
    pub fn for_plan(fmcw: &FmcwConfig, arr: &ArrayConfig, plan: &HopPlan) -> Self {
        let seg_freqs = (0..plan.n_channels()).map(|s| plan.slot_freq(s)).collect();
        Self::new(fmcw, arr, plan.hop_period_samples, seg_freqs)
    }

    pub fn new(fmcw: &FmcwConfig, arr: &ArrayConfig, seg_len: usize, seg_freqs: Vec<f64>) -> Self {
        Self {
            n_a: arr.n_antennas,
            spacing: arr.spacing,
            wavelength: fmcw.wavelength(),
            sample_rate: fmcw.sample_rate_hz,
            slope: fmcw.slope(),
            seg_len,
            seg_freqs,
        }
    }

    pub fn n_f(&self) -> usize {
        self.seg_freqs.len()
    }

    pub fn dim(&self) -> usize {
        self.n_a * self.n_f()
    }

    pub fn beat(&self, d: f64) -> f64 {
        self.slope * 2.0 * d / SPEED_OF_LIGHT
    }

    pub fn spatial(&self, eta: f64) -> Vec<Complex64> {
        (0..self.n_a)
            .map(|m| Complex64::from_polar(1.0, element_phase(self.spacing, m, eta, self.wavelength)))
            .collect()
    }

    /// Range factor of each segment.
    pub fn range_factors(&self, d: f64) -> Vec<Complex64> {
        let beat = self.beat(d);
        self.seg_freqs
            .iter()
            .enumerate()
            .map(|(s, &f)| {
                let ph = 2.0 * PI * beat * (s * self.seg_len) as f64 / self.sample_rate
                    - 2.0 * PI * f * d / SPEED_OF_LIGHT;
                Complex64::from_polar(1.0, ph)
            })
            .collect()
    }

    /// Range factor of every sample of a full window.
    pub fn sample_factors(&self, d: f64) -> Vec<Complex64> {
        let beat = self.beat(d);
        (0..self.seg_len * self.n_f())
            .map(|n| {
                let f = self.seg_freqs[n / self.seg_len];
                let ph = 2.0 * PI * beat * n as f64 / self.sample_rate - 2.0 * PI * f * d / SPEED_OF_LIGHT;
                Complex64::from_polar(1.0, ph)
            })
            .collect()
    }

    /// Range shift after which the segment-rate phase repeats, c fs / (2 slope N_h).
    /// Apart from the tiny carrier term the subspace spectrum is periodic in it.
    pub fn alias_period(&self) -> f64 {
        SPEED_OF_LIGHT * self.sample_rate / (2.0 * self.slope * self.seg_len as f64)
    }

    /// a(d, eta), antenna-major and hop-minor like the snapshot rows.
    pub fn vector(&self, d: f64, eta: f64) -> DVector<Complex64> {
        let sp = self.spatial(eta);
        let rf = self.range_factors(d);
        DVector::from_fn(self.dim(), |i, _| sp[i / self.n_f()] * rf[i % self.n_f()])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum2D {
    pub grid_d: Vec<f64>,
    /// Radians.
    pub grid_eta: Vec<f64>,
    /// values[(i_d, i_eta)].
    pub values: DMatrix<f64>,
}

impl Spectrum2D {
    pub fn argmax(&self) -> (f64, f64) {
        let (mut bi, mut bj, mut bv) = (0, 0, f64::NEG_INFINITY);
        for j in 0..self.values.ncols() {
            for i in 0..self.values.nrows() {
                if self.values[(i, j)] > bv {
                    (bi, bj, bv) = (i, j, self.values[(i, j)]);
                }
            }
        }
        (self.grid_d[bi], self.grid_eta[bj])
    }

    /// `d_m,eta_deg,value` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["d_m", "eta_deg", "value"])?;
        for (i, d) in self.grid_d.iter().enumerate() {
            for (j, eta) in self.grid_eta.iter().enumerate() {
                w.write_record([
                    format!("{d:.4}"),
                    format!("{:.4}", eta.to_degrees()),
                    format!("{:.6e}", self.values[(i, j)]),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Pointwise MUSIC pseudo-spectrum sharing precomputed projections.
struct MusicEval<'a> {
    model: &'a SteeringModel,
    us: DMatrix<Complex64>,
}

impl<'a> MusicEval<'a> {
    fn new(cov: &CovarianceEstimate, i_paths: usize, model: &'a SteeringModel) -> Result<Self> {
        let dim = model.dim();
        if cov.dim() != dim {
            return Err(Error::ShapeMismatch(format!(
                "covariance is {}-dimensional, steering model {dim}",
                cov.dim()
            )));
        }
        if i_paths >= dim {
            return Err(Error::ModelOrderTooLarge { i_paths, dim });
        }
        Ok(Self {
            model,
            us: cov.signal_subspace(i_paths),
        })
    }

    /// B[k][m] = sum_s conj(U_s[(m, s), k]) r_s(d).
    fn project_range(&self, d: f64) -> Vec<Vec<Complex64>> {
        let rf = self.model.range_factors(d);
        let n_f = self.model.n_f();
        (0..self.us.ncols())
            .map(|k| {
                (0..self.model.n_a)
                    .map(|m| (0..n_f).map(|s| self.us[(m * n_f + s, k)].conj() * rf[s]).sum())
                    .collect()
            })
            .collect()
    }

    fn value(&self, b: &[Vec<Complex64>], sp: &[Complex64]) -> f64 {
        let norm = self.model.dim() as f64;
        let proj: f64 = b
            .iter()
            .map(|bk| bk.iter().zip(sp).map(|(x, y)| x * y).sum::<Complex64>().norm_sqr())
            .sum();
        1.0 / (norm - proj).max(norm * 1e-14)
    }

    fn at(&self, d: f64, eta: f64) -> f64 {
        self.value(&self.project_range(d), &self.model.spatial(eta))
    }
}

/// Spatial vectors of an angle axis split into real and imaginary planes,
/// antenna-major, for the vectorized grid loops below.
struct SpatialPlanes {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl SpatialPlanes {
    fn new(model: &SteeringModel, etas: &[f64]) -> Self {
        let sp: Vec<Vec<Complex64>> = etas.iter().map(|&e| model.spatial(e)).collect();
        Self {
            re: (0..model.n_a).map(|m| sp.iter().map(|v| v[m].re).collect()).collect(),
            im: (0..model.n_a).map(|m| sp.iter().map(|v| v[m].im).collect()).collect(),
        }
    }

    /// out[j] = sum_k |sum_m rows[k][m] sp_j[m]|^2.
    fn project_power(&self, rows: &[Vec<Complex64>], out: &mut [f64]) {
        let n = out.len();
        out.fill(0.0);
        let mut acc_re = vec![0.0; n];
        let mut acc_im = vec![0.0; n];
        for row in rows {
            acc_re.fill(0.0);
            acc_im.fill(0.0);
            for (m, b) in row.iter().enumerate() {
                let (sr, si) = (&self.re[m], &self.im[m]);
                for j in 0..n {
                    acc_re[j] += b.re * sr[j] - b.im * si[j];
                    acc_im[j] += b.re * si[j] + b.im * sr[j];
                }
            }
            for j in 0..n {
                out[j] += acc_re[j] * acc_re[j] + acc_im[j] * acc_im[j];
            }
        }
    }
}

/// P(d, eta) = 1 / (a^H U_n U_n^H a), via ||a||^2 - ||U_s^H a||^2.
pub fn music_spectrum(
    cov: &CovarianceEstimate,
    i_paths: usize,
    model: &SteeringModel,
    grid: &GridConfig,
) -> Result<Spectrum2D> {
    let eval = MusicEval::new(cov, i_paths, model)?;
    let grid_d = grid.d_axis();
    let grid_eta = grid.eta_axis();
    let planes = SpatialPlanes::new(model, &grid_eta);
    let norm = model.dim() as f64;
    let ne = grid_eta.len();
    let mut flat = vec![0.0; grid_d.len() * ne];
    for (row, &d) in flat.chunks_mut(ne).zip(&grid_d) {
        planes.project_power(&eval.project_range(d), row);
        for p in row.iter_mut() {
            *p = 1.0 / (norm - *p).max(norm * 1e-14);
        }
    }
    let values = DMatrix::from_row_slice(grid_d.len(), ne, &flat);
    Ok(Spectrum2D {
        grid_d,
        grid_eta,
        values,
    })
}

/// Beamformer power of a single window, normalized to a peak of 1.
pub fn bartlett_spectrum(window: &DMatrix<Complex64>, model: &SteeringModel, grid: &GridConfig) -> Result<Spectrum2D> {
    let n = model.seg_len * model.n_f();
    if window.shape() != (model.n_a, n) {
        return Err(Error::ShapeMismatch(format!(
            "window is {:?}, model expects ({}, {n})",
            window.shape(),
            model.n_a
        )));
    }
    let grid_d = grid.d_axis();
    let grid_eta = grid.eta_axis();
    let planes = SpatialPlanes::new(model, &grid_eta);
    let ne = grid_eta.len();
    let mut flat = vec![0.0; grid_d.len() * ne];
    for (row, &d) in flat.chunks_mut(ne).zip(&grid_d) {
        // |a^H y|^2 = |sum_m a_m conj(y_m)|^2
        let y: Vec<Complex64> = bartlett_range_proj(window, model, d).iter().map(|v| v.conj()).collect();
        planes.project_power(&[y], row);
    }
    let mut values = DMatrix::from_row_slice(grid_d.len(), ne, &flat);
    let peak = values.max();
    if peak > 0.0 {
        values /= peak;
    }
    Ok(Spectrum2D {
        grid_d,
        grid_eta,
        values,
    })
}

fn bartlett_range_proj(window: &DMatrix<Complex64>, model: &SteeringModel, d: f64) -> Vec<Complex64> {
    let rf = model.sample_factors(d);
    (0..model.n_a)
        .map(|m| (0..rf.len()).map(|n| window[(m, n)] * rf[n].conj()).sum())
        .collect()
}

fn bartlett_at(window: &DMatrix<Complex64>, model: &SteeringModel, d: f64, eta: f64) -> f64 {
    let y = bartlett_range_proj(window, model, d);
    model
        .spatial(eta)
        .iter()
        .zip(&y)
        .map(|(a, b)| a.conj() * b)
        .sum::<Complex64>()
        .norm_sqr()
}

/// MUSIC spectrum multiplied by the normalized beamformer power of the
/// window average. The beamformer term spans the whole window and so
/// suppresses the range aliases of the segment-rate steering phase.
pub fn gated_music_spectrum(
    seg: &SegmentedSignal,
    cov: &CovarianceEstimate,
    i_paths: usize,
    model: &SteeringModel,
    grid: &GridConfig,
) -> Result<Spectrum2D> {
    let mut spec = music_spectrum(cov, i_paths, model, grid)?;
    let gate = bartlett_spectrum(&seg.mean_window(), model, grid)?;
    spec.values.component_mul_assign(&gate.values);
    Ok(spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumPeak {
    pub d: f64,
    pub eta: f64,
    pub value: f64,
    /// Signal eigenvalue paired by rank; 0 when none is available.
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakPick {
    pub peaks: Vec<SpectrumPeak>,
    pub shortfall: bool,
}

/// The `i_paths` highest interior cells that beat all 8 neighbours strictly.
/// Ties order by lower d, then lower eta. Strengths come from `eigvals` by rank.
pub fn pick_peaks(spec: &Spectrum2D, i_paths: usize, eigvals: &[f64]) -> PeakPick {
    let v = &spec.values;
    let (nd, ne) = v.shape();
    let mut found = Vec::new();
    for i in 1..nd.saturating_sub(1) {
        for j in 1..ne.saturating_sub(1) {
            let c = v[(i, j)];
            let is_max = (i - 1..=i + 1)
                .flat_map(|a| (j - 1..=j + 1).map(move |b| (a, b)))
                .filter(|&(a, b)| (a, b) != (i, j))
                .all(|(a, b)| v[(a, b)] < c);
            if is_max {
                found.push((i, j, c));
            }
        }
    }
    found.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    found.truncate(i_paths);
    let shortfall = found.len() < i_paths;
    let peaks = found
        .into_iter()
        .enumerate()
        .map(|(rank, (i, j, value))| SpectrumPeak {
            d: spec.grid_d[i],
            eta: spec.grid_eta[j],
            value,
            strength: eigvals.get(rank).copied().unwrap_or(0.0),
        })
        .collect();
    PeakPick { peaks, shortfall }
}

/// Shrinking-pattern search around a grid peak.
fn refine_peak(f: impl Fn(f64, f64) -> f64, d0: f64, e0: f64, step_d: f64, step_e: f64) -> (f64, f64) {
    let (mut d, mut e) = (d0, e0);
    let (mut sd, mut se) = (step_d, step_e);
    let mut best = f(d, e);
    for _ in 0..6 {
        let (cd, ce) = (d, e);
        for a in -2..=2 {
            for b in -2..=2 {
                let (td, te) = (cd + a as f64 * sd / 2.0, ce + b as f64 * se / 2.0);
                let v = f(td, te);
                if v > best {
                    (best, d, e) = (v, td, te);
                }
            }
        }
        sd /= 2.5;
        se /= 2.5;
    }
    (d, e)
}

/// One located path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathEstimate {
    pub distance: f64,
    pub aoa: f64,
    pub strength: f64,
    /// Spectrum value relative to the spectrum median, dB.
    pub prominence_db: f64,
}

/// Tuning shared by both estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub gap_ratio: f64,
    /// Upper bound on the model order on top of the resolvability cap.
    pub max_paths: usize,
    pub refine: bool,
    /// Factor on the noise eigenvalue edge when the noise power is known.
    pub noise_margin: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            gap_ratio: DEFAULT_GAP_RATIO,
            max_paths: 12,
            refine: true,
            noise_margin: 1.5,
        }
    }
}

fn median(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Vectorized full-window response of a path, antenna-major, zero where
/// `support` is false.
fn window_response(model: &SteeringModel, d: f64, eta: f64, support: &[bool]) -> Vec<Complex64> {
    let sp = model.spatial(eta);
    let rf: Vec<Complex64> = model
        .sample_factors(d)
        .iter()
        .zip(support)
        .map(|(&r, &on)| if on { r } else { ZERO })
        .collect();
    sp.iter().flat_map(|a| rf.iter().map(move |r| a * r)).collect()
}

/// Samples carrying signal. The demodulated window is exactly zero where the
/// tag gate is off, so this reads the gate pattern back from the data.
fn window_support(window: &DMatrix<Complex64>) -> Vec<bool> {
    (0..window.ncols()).map(|n| window.column(n).iter().any(|v| *v != ZERO)).collect()
}

/// Least-squares amplitudes of `paths` in `y` and the residual energy.
fn ls_fit(y: &DVector<Complex64>, model: &SteeringModel, paths: &[(f64, f64)], support: &[bool]) -> (Vec<Complex64>, f64) {
    let cols: Vec<Vec<Complex64>> = paths.iter().map(|&(d, e)| window_response(model, d, e, support)).collect();
    ls_fit_cols(y, &cols)
}

/// [`ls_fit`] on precomputed columns. Normal equations by Cholesky, with the
/// pseudo-inverse as fallback for near-collinear columns.
fn ls_fit_cols<C: AsRef<[Complex64]>>(y: &DVector<Complex64>, cols: &[C]) -> (Vec<Complex64>, f64) {
    let k = cols.len();
    let dot = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, z)| x.conj() * z).sum::<Complex64>();
    let gram = DMatrix::from_fn(k, k, |i, j| dot(cols[i].as_ref(), cols[j].as_ref()));
    let rhs = DVector::from_fn(k, |i, _| dot(cols[i].as_ref(), y.as_slice()));
    let diag_max = (0..k).map(|i| gram[(i, i)].re).fold(0.0, f64::max);
    // a tiny pivot means a column nearly inside the span of the others
    let amps = match gram.clone().cholesky() {
        Some(ch) if (0..k).all(|i| ch.l_dirty()[(i, i)].norm_sqr() > diag_max * 1e-10) => Some(ch.solve(&rhs)),
        _ => gram.pseudo_inverse(1e-12).ok().map(|g| g * &rhs),
    };
    let Some(c) = amps else {
        return (vec![ZERO; k], f64::INFINITY);
    };
    let mut r = y.clone();
    for (col, a) in cols.iter().zip(c.iter()) {
        for (ri, v) in r.iter_mut().zip(col.as_ref()) {
            *ri -= v * a;
        }
    }
    (c.iter().copied().collect(), r.norm_squared())
}

fn flatten_window(window: &DMatrix<Complex64>) -> DVector<Complex64> {
    DVector::from_fn(window.len(), |i, _| window[(i / window.ncols(), i % window.ncols())])
}

/// Local joint least-squares polish of all paths on the window: cyclic
/// pattern searches on the fit residual, one path at a time, reaching a few
/// grid steps from the start.
fn polish_paths(window: &DMatrix<Complex64>, model: &SteeringModel, grid: &GridConfig, paths: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let y = flatten_window(window);
    let support = window_support(window);
    let mut cur = paths.to_vec();
    let mut cols: Vec<Vec<Complex64>> = cur.iter().map(|&(d, e)| window_response(model, d, e, &support)).collect();
    for _ in 0..2 {
        for i in 0..cur.len() {
            let f = |d: f64, e: f64| {
                let moved = window_response(model, d, e, &support);
                let trial: Vec<&[Complex64]> =
                    (0..cols.len()).map(|j| if j == i { &moved[..] } else { &cols[j][..] }).collect();
                -ls_fit_cols(&y, &trial).1
            };
            cur[i] = refine_peak(f, cur[i].0, cur[i].1, 3.0 * grid.d_step, 3.0 * grid.eta_step());
            cols[i] = window_response(model, cur[i].0, cur[i].1, &support);
        }
    }
    cur
}

/// Test statistic for one more path at `cue` on top of `known` paths in a
/// single averaged window `window` with per-sample noise power `noise`: the
/// drop in least-squares residual when the cue joins the fit, over the noise
/// power. With no path at the cue and exact known paths it is exponential
/// with unit mean.
pub fn added_path_statistic(
    window: &DMatrix<Complex64>,
    model: &SteeringModel,
    known: &[(f64, f64)],
    cue: (f64, f64),
    noise: f64,
) -> f64 {
    let y = flatten_window(window);
    let support = window_support(window);
    let r0 = if known.is_empty() {
        y.norm_squared()
    } else {
        ls_fit(&y, model, known, &support).1
    };
    let mut all = known.to_vec();
    all.push(cue);
    let r1 = ls_fit(&y, model, &all, &support).1;
    ((r0 - r1) / noise.max(f64::MIN_POSITIVE)).max(0.0)
}

/// Choose each path's range alias d + kP so that all paths together best
/// explain the averaged window. Greedy coordinate passes starting from the
/// single-path beamformer choice.
fn resolve_aliases(
    window: &DMatrix<Complex64>,
    model: &SteeringModel,
    grid: &GridConfig,
    folded: &[(f64, f64)],
) -> Vec<(f64, f64)> {
    let period = model.alias_period();
    let cands: Vec<Vec<f64>> = folded
        .iter()
        .map(|&(d, _)| {
            let k_lo = ((grid.d_min - d) / period).ceil() as i64;
            let k_hi = ((grid.d_max - d) / period).floor() as i64;
            let c: Vec<f64> = (k_lo..=k_hi).map(|k| d + k as f64 * period).collect();
            if c.is_empty() { vec![d] } else { c }
        })
        .collect();
    let mut cur: Vec<(f64, f64)> = folded
        .iter()
        .zip(&cands)
        .map(|(&(_, e), c)| {
            let d = c
                .iter()
                .copied()
                .max_by(|&a, &b| bartlett_at(window, model, a, e).total_cmp(&bartlett_at(window, model, b, e)))
                .unwrap_or(c[0]);
            (d, e)
        })
        .collect();
    let y = flatten_window(window);
    let support = window_support(window);
    let mut best = ls_fit(&y, model, &cur, &support).1;
    for _ in 0..3 {
        let mut changed = false;
        for i in 0..cur.len() {
            for &d in &cands[i] {
                if d == cur[i].0 {
                    continue;
                }
                let mut trial = cur.clone();
                trial[i].0 = d;
                let r = ls_fit(&y, model, &trial, &support).1;
                if r < best * (1.0 - 1e-9) {
                    best = r;
                    cur = trial;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    cur
}

/// FS-MUSIC paths without the full-grid spectrum: covariance, model order,
/// subspace peaks over one alias period, alias choice by a joint fit of the
/// averaged window, local refinement. Prominence is the gated spectrum value
/// at the path over the gated spectrum median, both taken on a coarse grid.
pub fn fs_music_paths(
    seg: &SegmentedSignal,
    model: &SteeringModel,
    grid: &GridConfig,
    cfg: &EstimatorConfig,
) -> Result<Vec<PathEstimate>> {
    fs_music_paths_with_noise(seg, None, model, grid, cfg)
}

/// [`fs_music_paths`] with the model order taken against a known per-sample
/// noise power, e.g. from [`SegmentedSignal::integrate`].
pub fn fs_music_paths_with_noise(
    seg: &SegmentedSignal,
    noise: Option<f64>,
    model: &SteeringModel,
    grid: &GridConfig,
    cfg: &EstimatorConfig,
) -> Result<Vec<PathEstimate>> {
    grid.validate()?;
    let fsm = build_fs_matrix(seg)?;
    let cov = estimate_covariance(&fsm)?;
    let i_paths = model_order(&cov.eigvals, &fsm.entries, seg.n_a, seg.n_f, cfg, noise);
    paths_from_cov(seg, &cov, i_paths, model, grid, cfg)
}

fn paths_from_cov(
    seg: &SegmentedSignal,
    cov: &CovarianceEstimate,
    i_paths: usize,
    model: &SteeringModel,
    grid: &GridConfig,
    cfg: &EstimatorConfig,
) -> Result<Vec<PathEstimate>> {
    if i_paths == 0 {
        return Ok(Vec::new());
    }
    let period = model.alias_period();
    let span = grid.d_max - grid.d_min;
    let fold = model.n_f() > 1 && period < span;
    let folded_grid = if fold {
        let margin = (0.1 * period).max(5.0 * grid.d_step);
        GridConfig {
            d_max: (grid.d_min + period + margin).min(grid.d_max),
            ..*grid
        }
    } else {
        *grid
    };
    let music = music_spectrum(cov, i_paths, model, &folded_grid)?;
    let picked = pick_peaks(&music, 3 * i_paths, &cov.eigvals);
    // the margin repeats the start of the period; keep one copy per alias family
    let near = |a: &SpectrumPeak, b: &SpectrumPeak| {
        let dd = a.d - b.d;
        let wrapped = if fold { dd - (dd / period).round() * period } else { dd };
        wrapped.abs() <= 2.0 * grid.d_step && (a.eta - b.eta).abs() <= 2.0 * grid.eta_step()
    };
    let mut kept: Vec<SpectrumPeak> = Vec::new();
    for p in picked.peaks {
        if kept.len() < i_paths && !kept.iter().any(|k| near(k, &p)) {
            kept.push(p);
        }
    }
    let eval = MusicEval::new(cov, i_paths, model)?;
    let folded: Vec<(f64, f64)> = kept
        .iter()
        .map(|p| {
            if cfg.refine {
                refine_peak(|d, e| eval.at(d, e), p.d, p.eta, grid.d_step, grid.eta_step())
            } else {
                (p.d, p.eta)
            }
        })
        .collect();
    let window = seg.mean_window();
    let located = if fold {
        resolve_aliases(&window, model, grid, &folded)
    } else {
        folded
    };
    let located = if cfg.refine {
        polish_paths(&window, model, grid, &located)
    } else {
        located
    };

    let coarse = GridConfig {
        d_step: grid.d_step * 5.0,
        eta_step_deg: grid.eta_step_deg * 4.0,
        ..*grid
    };
    let c_music = music_spectrum(cov, i_paths, model, &coarse)?;
    let c_bart = bartlett_spectrum(&window, model, &coarse)?;
    // bartlett_spectrum is normalized; recover its scale for point values
    let b_peak = raw_bartlett_peak(&window, model, &coarse);
    let med = median(c_music.values.iter().zip(c_bart.values.iter()).map(|(m, b)| m * b)).max(f64::MIN_POSITIVE);

    // eigenvalues pair with paths in order of fitted power
    let (amps, _) = ls_fit(&flatten_window(&window), model, &located, &window_support(&window));
    let mut order: Vec<usize> = (0..located.len()).collect();
    order.sort_by(|&a, &b| amps[b].norm_sqr().total_cmp(&amps[a].norm_sqr()).then(a.cmp(&b)));
    Ok(order
        .iter()
        .enumerate()
        .map(|(rank, &k)| {
            let (d, eta) = located[k];
            let gated = eval.at(d, eta) * bartlett_at(&window, model, d, eta) / b_peak.max(f64::MIN_POSITIVE);
            PathEstimate {
                distance: d,
                aoa: eta,
                strength: cov.eigvals.get(rank).copied().unwrap_or(0.0),
                prominence_db: 10.0 * (gated / med).log10(),
            }
        })
        .collect())
}

fn raw_bartlett_peak(window: &DMatrix<Complex64>, model: &SteeringModel, grid: &GridConfig) -> f64 {
    let etas = grid.eta_axis();
    let planes = SpatialPlanes::new(model, &etas);
    let mut row = vec![0.0; etas.len()];
    let mut peak: f64 = 0.0;
    for d in grid.d_axis() {
        let y: Vec<Complex64> = bartlett_range_proj(window, model, d).iter().map(|v| v.conj()).collect();
        planes.project_power(&[y], &mut row);
        peak = row.iter().fold(peak, |m, &v| m.max(v));
    }
    peak
}

/// [`fs_music_paths`] plus the full-grid gated spectrum for inspection.
pub fn fs_music_estimate(
    seg: &SegmentedSignal,
    noise: Option<f64>,
    model: &SteeringModel,
    grid: &GridConfig,
    cfg: &EstimatorConfig,
) -> Result<(Vec<PathEstimate>, Spectrum2D)> {
    grid.validate()?;
    let fsm = build_fs_matrix(seg)?;
    let cov = estimate_covariance(&fsm)?;
    let i_paths = model_order(&cov.eigvals, &fsm.entries, seg.n_a, seg.n_f, cfg, noise);
    let spec = gated_music_spectrum(seg, &cov, i_paths, model, grid)?;
    Ok((paths_from_cov(seg, &cov, i_paths, model, grid, cfg)?, spec))
}

/// Antenna-only MUSIC angle pseudo-spectrum with the window samples as snapshots.
fn angle_music(x: &DMatrix<Complex64>, i_paths: usize, model: &SteeringModel, etas: &[f64]) -> Result<Vec<f64>> {
    let n_a = model.n_a;
    if i_paths >= n_a {
        return Err(Error::ModelOrderTooLarge { i_paths, dim: n_a });
    }
    let cov = covariance_from_matrix(x * x.adjoint() / Complex64::new(x.ncols() as f64, 0.0));
    let us = cov.signal_subspace(i_paths);
    Ok(etas
        .iter()
        .map(|&e| {
            let a = DVector::from_vec(model.spatial(e));
            let proj = (us.adjoint() * &a).norm_squared();
            1.0 / (n_a as f64 - proj).max(n_a as f64 * 1e-14)
        })
        .collect())
}

fn antenna_snapshots(seg: &SegmentedSignal) -> DMatrix<Complex64> {
    let n = seg.n_f * seg.n_h;
    let mut x = DMatrix::from_element(seg.n_a, n * seg.windows.len(), ZERO);
    for (w, win) in seg.windows.iter().enumerate() {
        for (m, block) in win.iter().enumerate() {
            for s in 0..seg.n_f {
                for k in 0..seg.n_h {
                    x[(m, w * n + s * seg.n_h + k)] = block[(s, k)];
                }
            }
        }
    }
    x
}

/// Conventional MUSIC spectrum: the antenna-only angle pseudo-spectrum times
/// the normalized beamformer power, so range is only as sharp as the window allows.
pub fn conventional_music(
    seg: &SegmentedSignal,
    i_paths: usize,
    model: &SteeringModel,
    grid: &GridConfig,
) -> Result<Spectrum2D> {
    let etas = grid.eta_axis();
    let p_angle = angle_music(&antenna_snapshots(seg), i_paths, model, &etas)?;
    let mut spec = bartlett_spectrum(&seg.mean_window(), model, grid)?;
    for j in 0..etas.len() {
        for i in 0..spec.grid_d.len() {
            spec.values[(i, j)] *= p_angle[j];
        }
    }
    Ok(spec)
}

/// Conventional chain: angles from 1-D MUSIC, per-path signals separated by
/// least squares on those angles, then a periodogram range search per path.
pub fn conventional_estimate(
    seg: &SegmentedSignal,
    model: &SteeringModel,
    grid: &GridConfig,
    cfg: &EstimatorConfig,
) -> Result<Vec<PathEstimate>> {
    conventional_estimate_with_noise(seg, None, model, grid, cfg)
}

/// [`conventional_estimate`] with a known per-sample noise power for the model order.
pub fn conventional_estimate_with_noise(
    seg: &SegmentedSignal,
    noise: Option<f64>,
    model: &SteeringModel,
    grid: &GridConfig,
    cfg: &EstimatorConfig,
) -> Result<Vec<PathEstimate>> {
    seg.validate()?;
    let x = antenna_snapshots(seg);
    let cov = covariance_from_matrix(&x * x.adjoint() / Complex64::new(x.ncols() as f64, 0.0));
    let i_paths = model_order(&cov.eigvals, &x, seg.n_a, 1, cfg, noise);
    if i_paths == 0 {
        return Ok(Vec::new());
    }
    let etas = grid.eta_axis();
    let p = angle_music(&x, i_paths, model, &etas)?;
    let mut maxima: Vec<usize> = (1..p.len().saturating_sub(1))
        .filter(|&j| p[j] > p[j - 1] && p[j] > p[j + 1])
        .collect();
    maxima.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    maxima.truncate(i_paths);
    if maxima.is_empty() {
        return Ok(Vec::new());
    }
    let med = median(p.iter().copied()).max(f64::MIN_POSITIVE);
    let angles: Vec<f64> = maxima
        .iter()
        .map(|&j| {
            if cfg.refine {
                let us = cov.signal_subspace(i_paths);
                let f = |e: f64| {
                    let a = DVector::from_vec(model.spatial(e));
                    1.0 / (model.n_a as f64 - (us.adjoint() * &a).norm_squared()).max(1e-14)
                };
                refine_peak(|_, e| f(e), 0.0, etas[j], 0.0, grid.eta_step()).1
            } else {
                etas[j]
            }
        })
        .collect();
    let window = seg.mean_window();
    let a = DMatrix::from_fn(model.n_a, angles.len(), |m, k| model.spatial(angles[k])[m]);
    let pinv = a
        .clone()
        .pseudo_inverse(1e-10)
        .map_err(|e| Error::DegenerateGeometry(e.to_string()))?;
    let sep = pinv * &window;
    let d_axis = grid.d_axis();
    let range_power = |k: usize, d: f64| {
        let rf = model.sample_factors(d);
        (0..rf.len()).map(|n| sep[(k, n)] * rf[n].conj()).sum::<Complex64>().norm_sqr()
    };
    let out = maxima
        .iter()
        .enumerate()
        .map(|(k, &j)| {
            let best = d_axis
                .iter()
                .copied()
                .max_by(|&a, &b| range_power(k, a).total_cmp(&range_power(k, b)))
                .unwrap_or(grid.d_min);
            let d = if cfg.refine {
                refine_peak(|d, _| range_power(k, d), best, 0.0, grid.d_step, 0.0).0
            } else {
                best
            };
            PathEstimate {
                distance: d,
                aoa: angles[k],
                strength: cov.eigvals.get(k).copied().unwrap_or(0.0),
                prominence_db: 10.0 * (p[j] / med).log10(),
            }
        })
        .collect();
    Ok(out)
}
