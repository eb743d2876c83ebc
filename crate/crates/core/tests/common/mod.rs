#![allow(dead_code)]
//! Synthetic segmented signals shared by the integration tests.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use nlos_lab::fsmusic::*;
use nlos_lab::waveform::{ArrayConfig, FmcwConfig, SPEED_OF_LIGHT};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const N_H: usize = 30;
pub const FREQS: [f64; 3] = [2e3, 5e3, 10e3];

pub fn model(n_f: usize) -> SteeringModel {
    SteeringModel::new(&FmcwConfig::default(), &ArrayConfig::default(), N_H, FREQS[..n_f].to_vec())
}

/// Written out from the phase model directly rather than via SteeringModel.
pub fn path_sample(d: f64, eta: f64, m: usize, n: usize, n_f_freqs: &[f64]) -> Complex64 {
    let fm = FmcwConfig::default();
    let beat = fm.bandwidth_hz / fm.chirp_s * 2.0 * d / SPEED_OF_LIGHT;
    let f = n_f_freqs[n / N_H];
    let lambda = SPEED_OF_LIGHT / fm.carrier_hz;
    let ph = 2.0 * PI * beat * n as f64 / fm.sample_rate_hz - 2.0 * PI * f * d / SPEED_OF_LIGHT
        + PI * m as f64 * (lambda / 2.0) / (lambda / 2.0) * eta.sin();
    Complex64::from_polar(1.0, ph)
}

/// Noiseless paths (d, eta, complex amplitude), repeated over `windows` with
/// optional white noise of standard deviation `sigma`.
pub fn synth(paths: &[(f64, f64, Complex64)], n_f: usize, windows: usize, sigma: f64, seed: u64) -> SegmentedSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_a = 8;
    let wins = (0..windows)
        .map(|_| {
            (0..n_a)
                .map(|m| {
                    DMatrix::from_fn(n_f, N_H, |s, k| {
                        let n = s * N_H + k;
                        let clean: Complex64 =
                            paths.iter().map(|&(d, e, a)| a * path_sample(d, e, m, n, &FREQS[..n_f])).sum();
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        clean + Complex64::new(re, im) * (sigma / 2f64.sqrt())
                    })
                })
                .collect()
        })
        .collect();
    SegmentedSignal {
        n_a,
        n_f,
        n_h: N_H,
        windows: wins,
    }
}

/// Independent source signals on each steering vector: a(d_i, eta_i) s_i(n),
/// with s_i white and unit power. Gives full-rank source covariance.
pub fn mixture(paths: &[(f64, f64)], n_f: usize, cols: usize, seed: u64) -> SegmentedSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steer: Vec<Vec<Complex64>> = paths
        .iter()
        .map(|&(d, e)| {
            (0..8 * n_f)
                .map(|r| path_sample(d, e, r / n_f, (r % n_f) * N_H, &FREQS[..n_f]))
                .collect()
        })
        .collect();
    let mut block = vec![vec![vec![Complex64::new(0.0, 0.0); cols]; n_f]; 8];
    for c in 0..cols {
        for a in &steer {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let sig = Complex64::new(re, im) / 2f64.sqrt();
            for (r, v) in a.iter().enumerate() {
                block[r / n_f][r % n_f][c] += v * sig;
            }
        }
    }
    SegmentedSignal {
        n_a: 8,
        n_f,
        n_h: cols,
        windows: vec![block
            .iter()
            .map(|rows| DMatrix::from_fn(n_f, cols, |s, c| rows[s][c]))
            .collect()],
    }
}


/// Adds complex white noise of standard deviation `sigma` in place.
pub fn add_white(seg: &mut SegmentedSignal, sigma: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for win in &mut seg.windows {
        for block in win.iter_mut() {
            for v in block.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *v += Complex64::new(re, im) * (sigma / 2f64.sqrt());
            }
        }
    }
}

/// Splits every window into windows of `n_h` columns, dropping any remainder.
pub fn rewindow(seg: &SegmentedSignal, n_h: usize) -> SegmentedSignal {
    let mut windows = Vec::new();
    for win in &seg.windows {
        for w in 0..seg.n_h / n_h {
            windows.push(win.iter().map(|b| b.columns(w * n_h, n_h).into_owned()).collect());
        }
    }
    SegmentedSignal {
        n_a: seg.n_a,
        n_f: seg.n_f,
        n_h,
        windows,
    }
}
