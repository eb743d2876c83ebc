//! Tag-side code generation: spreading codes, hop plans, the TLC waveform,
//! baseline modulations, correlation profiles and the tag power model.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// On/off spreading code. Chips are 0 (tag off) or 1 (tag reflecting).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DsssCode {
    pub chips: Vec<u8>,
}

impl DsssCode {
    pub fn new(chips: Vec<u8>) -> Result<Self> {
        if chips.len() < 2 {
            return Err(Error::config("code.chips", "need at least 2 chips"));
        }
        if chips.iter().any(|&c| c > 1) {
            return Err(Error::config("code.chips", "chips must be 0 or 1"));
        }
        if chips.iter().all(|&c| c == 0) {
            return Err(Error::config("code.chips", "all-zero code"));
        }
        Ok(Self { chips })
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    /// 1 -> +1, 0 -> -1.
    pub fn bipolar(&self) -> Vec<f64> {
        self.chips.iter().map(|&c| if c == 1 { 1.0 } else { -1.0 }).collect()
    }
}

// Primitive polynomials as exponent lists (highest degree first, constant term last).
// Odd degrees list a preferred pair for Gold construction.
const PRIMITIVE: [&[u32]; 8] = [
    &[3, 1, 0],
    &[4, 1, 0],
    &[5, 2, 0],
    &[6, 1, 0],
    &[7, 3, 0],
    &[8, 4, 3, 2, 0],
    &[9, 4, 0],
    &[10, 3, 0],
];
const PREFERRED_PARTNER: [(u32, &[u32]); 4] = [
    (3, &[3, 2, 0]),
    (5, &[5, 4, 3, 2, 0]),
    (7, &[7, 3, 2, 1, 0]),
    (9, &[9, 6, 4, 3, 0]),
];

/// Maximal-length sequence from the characteristic polynomial `poly`.
pub fn m_sequence(poly: &[u32]) -> Vec<u8> {
    let n = poly[0] as usize;
    let len = (1usize << n) - 1;
    let taps: Vec<usize> = poly[1..].iter().map(|&e| e as usize).collect();
    let mut s = vec![0u8; len + n];
    s[0] = 1;
    for k in 0..len {
        s[k + n] = taps.iter().fold(0, |acc, &t| acc ^ s[k + t]);
    }
    s.truncate(len);
    s
}

fn degree_for_length(length: usize) -> Result<u32> {
    (3..=10u32)
        .find(|&n| (1usize << n) - 1 == length)
        .ok_or(Error::UnsupportedCodeLength(length))
}

/// Every member of the shipped family for a given code length.
///
/// Odd degree: Gold family (2^n + 1 members). Even degree: small Kasami set
/// (2^(n/2) members), which covers the length-15 case where no preferred
/// pair exists.
pub fn code_family(length: usize) -> Result<Vec<DsssCode>> {
    let n = degree_for_length(length)?;
    let u = m_sequence(PRIMITIVE[(n - 3) as usize]);
    let mut family = Vec::new();
    if n % 2 == 1 {
        let partner = PREFERRED_PARTNER
            .iter()
            .find(|(deg, _)| *deg == n)
            .map(|(_, p)| *p)
            .expect("preferred pair for every odd degree");
        let v = m_sequence(partner);
        family.push(u.clone());
        family.push(v.clone());
        for shift in 0..length {
            family.push((0..length).map(|k| u[k] ^ v[(k + shift) % length]).collect());
        }
    } else {
        let q = (1usize << (n / 2)) + 1;
        let period = (1usize << (n / 2)) - 1;
        let w: Vec<u8> = (0..length).map(|k| u[(k * q) % length]).collect();
        family.push(u.clone());
        for shift in 0..period {
            family.push((0..length).map(|k| u[k] ^ w[(k + shift) % length]).collect());
        }
    }
    family.into_iter().map(DsssCode::new).collect()
}

/// Family member selected by `family_seed` (modulo the family size).
pub fn generate_dsss_code(family_seed: u64, length: usize) -> Result<DsssCode> {
    let family = code_family(length)?;
    let idx = (family_seed % family.len() as u64) as usize;
    Ok(family[idx].clone())
}

/// Cyclic correlation: value at lag k is sum_n a(n) * b((n + k) mod L).
pub fn correlation_profile(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let l = a.len();
    Ok((0..l)
        .map(|k| (0..l).map(|n| a[n] * b[(n + k) % l]).sum())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopPlan {
    pub channel_freqs: Vec<f64>,
    pub index_seq: Vec<usize>,
    pub hop_period_samples: usize,
    pub seed: u64,
}

impl HopPlan {
    pub fn n_channels(&self) -> usize {
        self.channel_freqs.len()
    }

    /// Carrier of hop slot `slot`; the index sequence repeats cyclically.
    pub fn slot_freq(&self, slot: usize) -> f64 {
        self.channel_freqs[self.index_seq[slot % self.index_seq.len()]]
    }

    pub fn occupancy(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_channels()];
        for &i in &self.index_seq {
            counts[i] += 1;
        }
        counts
    }
}

/// Pseudorandom channel index sequence (ChaCha8 stream keyed by `seed`).
pub fn generate_hop_plan(
    seed: u64,
    channel_freqs: &[f64],
    n_hops: usize,
    hop_period_samples: usize,
) -> Result<HopPlan> {
    if channel_freqs.is_empty() {
        return Err(Error::EmptyChannels);
    }
    for (i, &f) in channel_freqs.iter().enumerate() {
        if !(f > 0.0) || channel_freqs[..i].contains(&f) {
            return Err(Error::config(
                "codes.channels_hz",
                "channel frequencies must be positive and distinct",
            ));
        }
    }
    if n_hops == 0 || hop_period_samples == 0 {
        return Err(Error::config("codes.n_hops", "need at least one hop of one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_f = channel_freqs.len();
    let index_seq = (0..n_hops).map(|_| rng.random_range(0..n_f)).collect();
    Ok(HopPlan {
        channel_freqs: channel_freqs.to_vec(),
        index_seq,
        hop_period_samples,
        seed,
    })
}

/// Sampled tag modulation `g(n) * cos(2 pi f_H(n) n / fs)`.
///
/// `gate` and `carrier_hz` keep the two factors separately so the radar side
/// can rebuild the single-sideband form seen after dechirping.
#[derive(Debug, Clone, PartialEq)]
pub struct TlcSequence {
    pub samples: Vec<f64>,
    pub gate: Vec<f64>,
    pub carrier_hz: Vec<f64>,
    pub sample_rate: f64,
    /// Samples per hop slot (N_h).
    pub hop_period: usize,
    /// Hop slots per repetition (N_f).
    pub slots_per_rep: usize,
    pub repetitions: usize,
    /// Carrier of each hop slot, in time order.
    pub slot_freqs: Vec<f64>,
}

impl TlcSequence {
    pub fn total_len(&self) -> usize {
        self.samples.len()
    }

    /// Length of one repetition, N_f * N_h.
    pub fn period_len(&self) -> usize {
        self.hop_period * self.slots_per_rep
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    /// Complex single-sideband form with the carrier delayed by `delay_s`.
    pub fn analytic(&self, n: usize, delay_s: f64) -> Complex64 {
        let g = self.gate[n];
        if g == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let t = n as f64 / self.sample_rate - delay_s;
        Complex64::from_polar(g, 2.0 * PI * self.carrier_hz[n] * t)
    }

    /// Energy of the analytic form, i.e. the number of "on" samples.
    pub fn analytic_energy(&self) -> f64 {
        self.gate.iter().map(|g| g * g).sum()
    }

    fn from_parts(
        gate: Vec<f64>,
        carrier_hz: Vec<f64>,
        sample_rate: f64,
        hop_period: usize,
        slots_per_rep: usize,
        repetitions: usize,
        slot_freqs: Vec<f64>,
    ) -> Self {
        let samples = gate
            .iter()
            .zip(&carrier_hz)
            .enumerate()
            .map(|(n, (&g, &f))| g * (2.0 * PI * f * n as f64 / sample_rate).cos())
            .collect();
        Self {
            samples,
            gate,
            carrier_hz,
            sample_rate,
            hop_period,
            slots_per_rep,
            repetitions,
            slot_freqs,
        }
    }
}

/// One full code per hop slot; slots follow the plan's index sequence.
pub fn build_tlc_waveform(
    code: &DsssCode,
    plan: &HopPlan,
    sample_rate: f64,
    repetitions: usize,
) -> Result<TlcSequence> {
    let n_h = plan.hop_period_samples;
    if n_h % code.len() != 0 || n_h == 0 {
        return Err(Error::ChipDivisibility {
            hop_period: n_h,
            code_len: code.len(),
        });
    }
    if repetitions == 0 {
        return Err(Error::config("codes.repetitions", "must be at least 1"));
    }
    let spc = n_h / code.len();
    let n_f = plan.n_channels();
    let slots = repetitions * n_f;
    let total = slots * n_h;
    let mut gate = Vec::with_capacity(total);
    let mut carrier = Vec::with_capacity(total);
    let slot_freqs: Vec<f64> = (0..slots).map(|s| plan.slot_freq(s)).collect();
    for &f in &slot_freqs {
        for k in 0..n_h {
            gate.push(code.chips[k / spc] as f64);
            carrier.push(f);
        }
    }
    Ok(TlcSequence::from_parts(
        gate,
        carrier,
        sample_rate,
        n_h,
        n_f,
        repetitions,
        slot_freqs,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Modulation {
    Hfd,
    DsssOnly,
    Fsk,
}

impl std::str::FromStr for Modulation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "HFD" => Ok(Modulation::Hfd),
            "DSSS_ONLY" | "DSSS" => Ok(Modulation::DsssOnly),
            "FSK" => Ok(Modulation::Fsk),
            other => Err(Error::config("method.modulation", format!("unknown kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BaselineParams {
    /// On/off square wave toggling at `toggle_hz`.
    Fsk {
        toggle_hz: f64,
        total_len: usize,
        sample_rate: f64,
    },
    /// Spreading code on one fixed carrier, one code per `hop_period` samples.
    DsssOnly {
        code: DsssCode,
        carrier_hz: f64,
        hop_period: usize,
        code_periods: usize,
        sample_rate: f64,
    },
}

pub fn build_baseline_waveform(kind: Modulation, params: &BaselineParams) -> Result<TlcSequence> {
    match (kind, params) {
        (
            Modulation::Fsk,
            BaselineParams::Fsk {
                toggle_hz,
                total_len,
                sample_rate,
            },
        ) => {
            if !(*toggle_hz > 0.0) || *total_len == 0 {
                return Err(Error::config("fsk", "toggle frequency and length must be positive"));
            }
            let gate: Vec<f64> = (0..*total_len)
                .map(|n| {
                    let half_periods = (2.0 * toggle_hz * n as f64 / sample_rate).floor() as i64;
                    if half_periods % 2 == 0 {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            Ok(TlcSequence::from_parts(
                gate,
                vec![0.0; *total_len],
                *sample_rate,
                *total_len,
                1,
                1,
                vec![0.0],
            ))
        }
        (
            Modulation::DsssOnly,
            BaselineParams::DsssOnly {
                code,
                carrier_hz,
                hop_period,
                code_periods,
                sample_rate,
            },
        ) => {
            let plan = HopPlan {
                channel_freqs: vec![*carrier_hz],
                index_seq: vec![0],
                hop_period_samples: *hop_period,
                seed: 0,
            };
            build_tlc_waveform(code, &plan, *sample_rate, *code_periods)
        }
        (kind, _) => Err(Error::config(
            "method.modulation",
            format!("{kind:?} is not a baseline matching the supplied parameters"),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile {
    /// Tag draw per hop carrier, keyed by the carrier in whole Hz.
    pub per_freq_mw: BTreeMap<u64, f64>,
    pub duty_tlc: f64,
}

impl Default for PowerProfile {
    fn default() -> Self {
        Self {
            per_freq_mw: BTreeMap::from([(2000, 0.348), (5000, 0.373), (10000, 0.506)]),
            duty_tlc: 0.1,
        }
    }
}

/// TLC and RLC phase lengths of one HFD cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HfdSchedule {
    pub tlc_duration: f64,
    pub rlc_duration: f64,
}

impl HfdSchedule {
    pub fn duty(&self) -> f64 {
        self.tlc_duration / (self.tlc_duration + self.rlc_duration)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerReport {
    pub avg_tlc_mw: f64,
    pub avg_overall_uw: f64,
    pub lifetime_years: f64,
}

const HOURS_PER_YEAR: f64 = 24.0 * 365.0;

/// Average tag draw. The duty cycle comes from `schedule`; the RLC phase draws nothing.
pub fn power_model(
    profile: &PowerProfile,
    plan: &HopPlan,
    schedule: &HfdSchedule,
    battery_mwh: f64,
) -> Result<PowerReport> {
    let occ = plan.occupancy();
    let total: usize = occ.iter().sum();
    let mut avg_tlc_mw = 0.0;
    for (i, &count) in occ.iter().enumerate() {
        let key = plan.channel_freqs[i].round() as u64;
        let p = *profile
            .per_freq_mw
            .get(&key)
            .ok_or_else(|| Error::config("power.per_freq_mw", format!("no entry for {key} Hz")))?;
        avg_tlc_mw += p * count as f64 / total as f64;
    }
    let avg_overall_uw = avg_tlc_mw * schedule.duty() * 1000.0;
    let lifetime_years = battery_mwh / (avg_overall_uw / 1000.0) / HOURS_PER_YEAR;
    Ok(PowerReport {
        avg_tlc_mw,
        avg_overall_uw,
        lifetime_years,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// O(L^2) reference, written independently of `correlation_profile`.
    fn brute_xcorr(a: &[f64], b: &[f64]) -> Vec<f64> {
        let l = a.len();
        let mut out = vec![0.0; l];
        for (k, o) in out.iter_mut().enumerate() {
            let shifted: Vec<f64> = b.iter().cycle().skip(k).take(l).copied().collect();
            *o = a.iter().zip(&shifted).map(|(x, y)| x * y).sum();
        }
        out
    }

    fn max_abs_xcorr(a: &DsssCode, b: &DsssCode) -> f64 {
        correlation_profile(&a.bipolar(), &b.bipolar())
            .unwrap()
            .into_iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    #[test]
    fn m_sequences_are_maximal() {
        for poly in PRIMITIVE.iter().chain(PREFERRED_PARTNER.iter().map(|(_, p)| p)) {
            let s = m_sequence(poly);
            let l = s.len();
            let ones = s.iter().filter(|&&c| c == 1).count();
            assert_eq!(ones, (l + 1) / 2, "poly {poly:?}");
            let bip: Vec<f64> = s.iter().map(|&c| if c == 1 { 1.0 } else { -1.0 }).collect();
            let ac = correlation_profile(&bip, &bip).unwrap();
            assert_eq!(ac[0], l as f64);
            assert!(ac[1..].iter().all(|&v| v == -1.0), "poly {poly:?}");
        }
    }

    #[test]
    fn family_cross_correlation_bounds() {
        for n in 3..=8u32 {
            let l = (1usize << n) - 1;
            let fam = code_family(l).unwrap();
            let bound = if n % 2 == 1 {
                (1usize << ((n + 1) / 2)) + 1
            } else {
                (1usize << (n / 2)) + 1
            } as f64;
            for i in 0..fam.len() {
                for j in (i + 1)..fam.len() {
                    assert!(max_abs_xcorr(&fam[i], &fam[j]) <= bound, "n={n} pair ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn length_15_family() {
        let fam = code_family(15).unwrap();
        assert_eq!(fam.len(), 4);
        let mut worst: f64 = 0.0;
        for i in 0..fam.len() {
            for j in (i + 1)..fam.len() {
                worst = worst.max(max_abs_xcorr(&fam[i], &fam[j]));
            }
        }
        // small Kasami bound 2^(n/2) + 1 = 5
        assert_eq!(worst, 5.0);
        assert!(worst / 15.0 <= 0.6);
        let a = generate_dsss_code(0, 15).unwrap();
        let b = generate_dsss_code(1, 15).unwrap();
        assert!(max_abs_xcorr(&a, &b) <= 9.0);
        for code in &fam {
            let ac = correlation_profile(&code.bipolar(), &code.bipolar()).unwrap();
            assert_eq!(ac[0], 15.0);
        }
        assert_eq!(generate_dsss_code(7, 15).unwrap(), generate_dsss_code(7, 15).unwrap());
    }

    #[test]
    fn unsupported_lengths() {
        assert_eq!(generate_dsss_code(0, 16), Err(Error::UnsupportedCodeLength(16)));
        assert_eq!(generate_dsss_code(0, 3), Err(Error::UnsupportedCodeLength(3)));
    }

    #[test]
    fn correlation_profile_cases() {
        let a = [1.0, 1.0, -1.0, -1.0];
        let b = [1.0, -1.0, 1.0, -1.0];
        assert_eq!(correlation_profile(&a, &a).unwrap()[0], 4.0);
        assert_eq!(correlation_profile(&a, &b).unwrap()[0], 0.0);
        assert_eq!(correlation_profile(&a, &b[..3]), Err(Error::LengthMismatch(4, 3)));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let x: Vec<f64> = (0..15).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
            let y: Vec<f64> = (0..15).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
            assert_eq!(correlation_profile(&x, &y).unwrap(), brute_xcorr(&x, &y));
        }
    }

    #[test]
    fn hop_plan_statistics() {
        let one = generate_hop_plan(3, &[2e3], 50, 30).unwrap();
        assert!(one.index_seq.iter().all(|&i| i == 0));
        let plan = generate_hop_plan(42, &[2e3, 5e3, 10e3], 300, 30).unwrap();
        // binomial(300, 1/3): sigma = sqrt(300 * 1/3 * 2/3) ~ 8.2, so 3 sigma < 30
        for count in plan.occupancy() {
            assert!((70..=130).contains(&count), "count {count}");
        }
        assert_eq!(plan, generate_hop_plan(42, &[2e3, 5e3, 10e3], 300, 30).unwrap());
        assert_eq!(generate_hop_plan(1, &[], 3, 30), Err(Error::EmptyChannels));
        assert!(generate_hop_plan(1, &[2e3, 2e3], 3, 30).is_err());
    }

    #[test]
    fn tlc_waveform_structure() {
        let ones = DsssCode::new(vec![1; 15]).unwrap();
        let plan = generate_hop_plan(0, &[2e3], 1, 30).unwrap();
        let w = build_tlc_waveform(&ones, &plan, 50e3, 2).unwrap();
        assert_eq!(w.total_len(), 60);
        for (n, s) in w.samples.iter().enumerate() {
            assert_relative_eq!(*s, (2.0 * PI * 2e3 * n as f64 / 50e3).cos(), epsilon = 1e-12);
        }

        let code = generate_dsss_code(1, 15).unwrap();
        let plan = generate_hop_plan(9, &[2e3, 5e3, 10e3], 3, 30).unwrap();
        let w = build_tlc_waveform(&code, &plan, 50e3, 1).unwrap();
        assert_eq!(w.total_len(), 90);
        for n in 0..90 {
            let chip = code.chips[(n % 30) / 2];
            if chip == 0 {
                assert_eq!(w.samples[n], 0.0);
            }
            assert!(w.samples[n].abs() <= 1.0);
        }
        let cos2: f64 = (0..90)
            .filter(|&n| code.chips[(n % 30) / 2] == 1)
            .map(|n| {
                let c = (2.0 * PI * w.carrier_hz[n] * n as f64 / 50e3).cos();
                c * c
            })
            .sum();
        assert_eq!(w.energy(), cos2);

        let bad = generate_hop_plan(9, &[2e3], 3, 31).unwrap();
        assert_eq!(
            build_tlc_waveform(&code, &bad, 50e3, 1),
            Err(Error::ChipDivisibility {
                hop_period: 31,
                code_len: 15
            })
        );
    }

    #[test]
    fn tlc_spectrum_concentrates_at_channels() {
        // single-sideband form: energy sits near the carrier of each slot
        let code = generate_dsss_code(2, 15).unwrap();
        let plan = HopPlan {
            channel_freqs: vec![2e3, 10e3],
            index_seq: vec![0, 1],
            hop_period_samples: 150,
            seed: 0,
        };
        let w = build_tlc_waveform(&code, &plan, 50e3, 1).unwrap();
        for (slot, &f) in plan.channel_freqs.iter().enumerate() {
            let range = slot * 150..(slot + 1) * 150;
            let dtft = |freq: f64| {
                range
                    .clone()
                    .map(|n| {
                        Complex64::from_polar(w.samples[n], -2.0 * PI * freq * n as f64 / 50e3)
                    })
                    .sum::<Complex64>()
                    .norm()
            };
            let at_carrier = dtft(f);
            let grid: Vec<f64> = (0..250).map(|k| k as f64 * 100.0).collect();
            let best = grid.iter().copied().max_by(|a, b| dtft(*a).total_cmp(&dtft(*b))).unwrap();
            assert!((best - f).abs() <= 100.0 + 1e-9, "slot {slot}: peak {best} vs {f}");
            assert!(at_carrier > 0.0);
        }
    }

    #[test]
    fn baselines() {
        let fsk = build_baseline_waveform(
            Modulation::Fsk,
            &BaselineParams::Fsk {
                toggle_hz: 1e3,
                total_len: 5000,
                sample_rate: 50e3,
            },
        )
        .unwrap();
        let transitions = fsk.gate.windows(2).filter(|w| w[0] != w[1]).count();
        // 0.1 s at 1 kHz -> 2f * T = 200 transitions (one fewer inside the window)
        assert!((199..=200).contains(&transitions), "{transitions}");

        let ones = DsssCode::new(vec![1; 15]).unwrap();
        let dsss = build_baseline_waveform(
            Modulation::DsssOnly,
            &BaselineParams::DsssOnly {
                code: ones.clone(),
                carrier_hz: 5e3,
                hop_period: 30,
                code_periods: 3,
                sample_rate: 50e3,
            },
        )
        .unwrap();
        assert!(dsss.gate.iter().all(|&g| g == 1.0));
        assert!(dsss.carrier_hz.iter().all(|&f| f == 5e3));

        let code = generate_dsss_code(3, 15).unwrap();
        let via_baseline = build_baseline_waveform(
            Modulation::DsssOnly,
            &BaselineParams::DsssOnly {
                code: code.clone(),
                carrier_hz: 5e3,
                hop_period: 30,
                code_periods: 2,
                sample_rate: 50e3,
            },
        )
        .unwrap();
        let plan = HopPlan {
            channel_freqs: vec![5e3],
            index_seq: vec![0],
            hop_period_samples: 30,
            seed: 0,
        };
        assert_eq!(via_baseline, build_tlc_waveform(&code, &plan, 50e3, 2).unwrap());

        assert!(build_baseline_waveform(
            Modulation::Hfd,
            &BaselineParams::Fsk {
                toggle_hz: 1e3,
                total_len: 10,
                sample_rate: 50e3
            }
        )
        .is_err());
        assert!("BPSK".parse::<Modulation>().is_err());
    }

    #[test]
    fn power_figures() {
        let profile = PowerProfile::default();
        let plan = HopPlan {
            channel_freqs: vec![2e3, 5e3, 10e3],
            index_seq: vec![0, 1, 2],
            hop_period_samples: 30,
            seed: 0,
        };
        let sched = HfdSchedule {
            tlc_duration: 1.0,
            rlc_duration: 9.0,
        };
        let r = power_model(&profile, &plan, &sched, 3000.0).unwrap();
        assert_relative_eq!(r.avg_tlc_mw, (0.348 + 0.373 + 0.506) / 3.0, max_relative = 1e-12);
        assert!((r.avg_tlc_mw - 0.41).abs() < 0.005);
        assert_relative_eq!(r.avg_overall_uw, r.avg_tlc_mw * 100.0, max_relative = 1e-12);
        let hours = 3000.0 / (r.avg_overall_uw / 1000.0);
        assert_relative_eq!(r.lifetime_years, hours / 8760.0, max_relative = 1e-12);

        let always = HfdSchedule {
            tlc_duration: 1.0,
            rlc_duration: 0.0,
        };
        let r = power_model(&profile, &plan, &always, 3000.0).unwrap();
        assert_relative_eq!(r.avg_overall_uw, r.avg_tlc_mw * 1000.0, max_relative = 1e-12);
    }
}
