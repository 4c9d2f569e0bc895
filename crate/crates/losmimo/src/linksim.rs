//! Impaired waveform-level capture synthesis.
//!
//! Receive stream model per Rx channel m:
//! y_m(t) = [ sum_n (x_n cyclically convolved with the pair taps) ] rotated by
//! e^{j (cfo t + phase walks)} plus circular complex Gaussian noise. The
//! carrier frequency offset uses the global sample index, phase continuous
//! across blocks.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::{synthesize_los_channel, GainProfile, LinkGeometry};
use crate::numerics::ComplexMatrix;
use crate::training::TrainingSet;
use crate::{Complex, Error, Result};

/// One extra multipath tap for a single Tx-Rx pair.
#[derive(Debug, Clone, Copy)]
pub struct ExtraTap {
    pub rx: usize,
    pub tx: usize,
    pub delay: usize,
    pub gain: Complex,
}

/// Impairments applied on top of the geometric LOS channel.
#[derive(Debug, Clone)]
pub struct ImpairmentConfig {
    /// Per-entry average SNR in dB (mean |h_mn|^2 / sigma^2); +infinity
    /// disables noise.
    pub snr_db: f64,
    /// Normalized carrier frequency offset, radians per sample, shared by all
    /// antenna pairs.
    pub cfo: f64,
    /// Peak-to-peak relative spread of the per-pair amplitudes a_mn.
    pub gain_spread: f64,
    /// Variance per sample of independent Wiener phase walks, one walk per Tx
    /// and per Rx module. 0 disables.
    pub phase_noise_linewidth: f64,
    /// Additional multipath taps beyond the LOS tap.
    pub extra_taps: Vec<ExtraTap>,
    /// Integer sample delay applied cyclically to the Rx channels recorded by
    /// the second recorder (channel indices >= ceil(M/2)).
    pub recorder_skew: i64,
    pub rng_seed: u64,
    /// RNG stream index; disjoint streams give independent realizations.
    pub rng_stream: u64,
}

impl Default for ImpairmentConfig {
    fn default() -> Self {
        Self {
            snr_db: f64::INFINITY,
            cfo: 0.0,
            gain_spread: 0.0,
            phase_noise_linewidth: 0.0,
            extra_taps: Vec::new(),
            recorder_skew: 0,
            rng_seed: 0,
            rng_stream: 0,
        }
    }
}

impl ImpairmentConfig {
    fn validate(&self, m: usize, n: usize, l_t: usize) -> Result<()> {
        if self.snr_db.is_nan() {
            return Err(Error::InvalidInput("snr_db is NaN".into()));
        }
        if !(self.cfo > -std::f64::consts::PI && self.cfo < std::f64::consts::PI) {
            return Err(Error::InvalidInput("cfo must lie in (-pi, pi)".into()));
        }
        if !(0.0..1.0).contains(&self.gain_spread) {
            return Err(Error::InvalidInput("gain_spread must lie in [0, 1)".into()));
        }
        if self.phase_noise_linewidth < 0.0 || !self.phase_noise_linewidth.is_finite() {
            return Err(Error::InvalidInput("phase_noise_linewidth must be >= 0".into()));
        }
        for tap in &self.extra_taps {
            if tap.rx >= m || tap.tx >= n {
                return Err(Error::InvalidInput(format!(
                    "extra tap addresses pair ({}, {}) outside {}x{}",
                    tap.rx, tap.tx, m, n
                )));
            }
            if tap.delay >= l_t {
                return Err(Error::InvalidInput(format!(
                    "extra tap delay {} >= block length {}",
                    tap.delay, l_t
                )));
            }
        }
        Ok(())
    }
}

/// Exact quantities the simulator embedded in a capture.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// LOS tap matrix actually embedded: geometry synthesis times drawn gains.
    pub h_los: ComplexMatrix<f64>,
    /// Drawn amplitudes a_mn, row-major M x N.
    pub gains: Vec<f64>,
    pub cfo: f64,
    /// Noise variance per complex sample; 0 when noise is disabled.
    pub noise_variance: f64,
}

/// Recorded receive streams, one per Rx channel.
#[derive(Debug, Clone)]
pub struct Capture {
    pub channels: Vec<Vec<Complex>>,
    pub blocks: usize,
    pub samples_per_block: usize,
    pub oversampling: usize,
    pub ground_truth: Option<GroundTruth>,
}

impl Capture {
    pub fn rx_count(&self) -> usize {
        self.channels.len()
    }

    pub fn samples_per_channel(&self) -> usize {
        self.blocks * self.samples_per_block
    }

    /// Block `l` of channel `m`.
    pub fn block(&self, m: usize, l: usize) -> &[Complex] {
        let lt = self.samples_per_block;
        &self.channels[m][l * lt..(l + 1) * lt]
    }
}

/// Adds circular complex Gaussian noise of total variance `sigma2` per sample.
pub fn add_awgn(stream: &mut [Complex], sigma2: f64, rng: &mut impl Rng) -> Result<()> {
    if sigma2 < 0.0 || !sigma2.is_finite() {
        return Err(Error::InvalidInput("noise variance must be finite and >= 0".into()));
    }
    if sigma2 == 0.0 {
        return Ok(());
    }
    let dist = Normal::new(0.0, (sigma2 / 2.0).sqrt())
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    for v in stream.iter_mut() {
        *v += Complex::new(dist.sample(rng), dist.sample(rng));
    }
    Ok(())
}

/// Simulates `blocks` repetitions of the training transmission through the
/// geometric LOS channel with the configured impairments.
///
/// Pure given (inputs, seed, stream): identical arguments give bit-identical
/// captures.
pub fn simulate_capture(
    geometry: &LinkGeometry<f64>,
    training: &TrainingSet,
    impairments: &ImpairmentConfig,
    blocks: usize,
) -> Result<Capture> {
    let m = geometry.rx_count();
    let n = geometry.tx_count();
    if training.n() != n {
        return Err(Error::InvalidInput(format!(
            "training set has {} waveforms, geometry has {} Tx antennas",
            training.n(),
            n
        )));
    }
    if blocks < 2 {
        return Err(Error::InvalidInput(
            "need at least 2 blocks (the CFO estimator differences consecutive blocks)".into(),
        ));
    }
    let l_t = training.l_t();
    impairments.validate(m, n, l_t)?;

    let mut rng = ChaCha12Rng::seed_from_u64(impairments.rng_seed);
    rng.set_stream(impairments.rng_stream);

    // fixed draw order: gains, phase walks, then per-channel noise
    let spread = impairments.gain_spread;
    let gains: Vec<f64> = (0..m * n)
        .map(|_| {
            if spread == 0.0 {
                1.0
            } else {
                rng.gen_range(1.0 - spread / 2.0..1.0 + spread / 2.0)
            }
        })
        .collect();

    let geom = synthesize_los_channel(geometry, &GainProfile::unit(m, n))?;
    let mut h_los = ComplexMatrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            h_los[(i, j)] = geom[(i, j)] * gains[i * n + j];
        }
    }

    let total = blocks * l_t;
    let walks = if impairments.phase_noise_linewidth > 0.0 {
        let dist = Normal::new(0.0, impairments.phase_noise_linewidth.sqrt()).unwrap();
        let walk = |rng: &mut ChaCha12Rng| {
            let mut phase = 0.0;
            let mut w = Vec::with_capacity(total);
            for _ in 0..total {
                w.push(phase);
                phase += dist.sample(rng);
            }
            w
        };
        let tx_walks: Vec<Vec<f64>> = (0..n).map(|_| walk(&mut rng)).collect();
        let rx_walks: Vec<Vec<f64>> = (0..m).map(|_| walk(&mut rng)).collect();
        Some((tx_walks, rx_walks))
    } else {
        None
    };

    // per-pair tap responses: LOS at delay 0 plus configured extras
    let mut taps: Vec<Vec<(usize, Complex)>> = vec![Vec::new(); m * n];
    for i in 0..m {
        for j in 0..n {
            taps[i * n + j].push((0, h_los[(i, j)]));
        }
    }
    for t in &impairments.extra_taps {
        taps[t.rx * n + t.tx].push((t.delay, t.gain));
    }

    // one periodic clean block per (channel, Tx), sparse-tap convolution
    let mut contrib: Vec<Vec<Vec<Complex>>> = Vec::with_capacity(m);
    for i in 0..m {
        let mut per_tx = Vec::with_capacity(n);
        for j in 0..n {
            let x = training.waveform(j);
            let mut block = vec![Complex::new(0.0, 0.0); l_t];
            for &(delay, gain) in &taps[i * n + j] {
                for t in 0..l_t {
                    block[t] += gain * x[(t + l_t - delay) % l_t];
                }
            }
            per_tx.push(block);
        }
        contrib.push(per_tx);
    }

    let sigma2 = if impairments.snr_db.is_finite() {
        let mean_pow: f64 =
            h_los.entries().iter().map(|z| z.norm_sqr()).sum::<f64>() / (m * n) as f64;
        mean_pow / 10f64.powf(impairments.snr_db / 10.0)
    } else {
        0.0
    };

    let mut channels: Vec<Vec<Complex>> = Vec::with_capacity(m);
    for i in 0..m {
        let mut stream = Vec::with_capacity(total);
        for t in 0..total {
            let bt = t % l_t;
            let mut s = Complex::new(0.0, 0.0);
            match &walks {
                Some((tx_walks, _)) => {
                    for j in 0..n {
                        s += contrib[i][j][bt] * Complex::from_polar(1.0, tx_walks[j][t]);
                    }
                }
                None => {
                    for j in 0..n {
                        s += contrib[i][j][bt];
                    }
                }
            }
            let mut phase = impairments.cfo * t as f64;
            if let Some((_, rx_walks)) = &walks {
                phase += rx_walks[i][t];
            }
            stream.push(s * Complex::from_polar(1.0, phase));
        }
        channels.push(stream);
    }

    // second-recorder timing skew, cyclic over the whole stream
    if impairments.recorder_skew != 0 {
        let first = (m + 1) / 2;
        let skew = impairments.recorder_skew.rem_euclid(total as i64) as usize;
        for ch in channels.iter_mut().skip(first) {
            ch.rotate_right(skew);
        }
    }

    for ch in channels.iter_mut() {
        add_awgn(ch, sigma2, &mut rng)?;
    }

    Ok(Capture {
        channels,
        blocks,
        samples_per_block: l_t,
        oversampling: training.oversampling(),
        ground_truth: Some(GroundTruth {
            h_los,
            gains,
            cfo: impairments.cfo,
            noise_variance: sigma2,
        }),
    })
}
