//! The receive processing chain: align, correlate, estimate the frequency
//! offset, estimate the channel, extract the LOS tap, normalize, estimate
//! noise and SNR.

use crate::linksim::Capture;
use crate::numerics::ComplexMatrix;
use crate::training::{CorrelatorOutput, TrainingMode, TrainingSet};
use crate::{Complex, Error, Result};

/// Knobs for [`run_pipeline`].
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Number of significant taps; `None` selects taps above 6x the median
    /// first-pass correlation magnitude (minimum 1).
    pub l_c: Option<usize>,
    /// Average de-rotated correlations over all blocks (sqrt(L) noise
    /// reduction); `false` uses only the first block.
    pub average_blocks: bool,
    /// Run [`align_captures`] before estimation.
    pub align: bool,
    pub reference_channel: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            l_c: None,
            average_blocks: true,
            align: true,
            reference_channel: 0,
        }
    }
}

/// Everything the pipeline estimated from one capture.
#[derive(Debug, Clone)]
pub struct ChannelEstimateReport {
    /// Impulse-response estimates, row-major M x N, each of length L_t.
    pub impulse_responses: Vec<Vec<Complex>>,
    pub los_matrix: ComplexMatrix<f64>,
    /// Entrywise phase-only normalization of `los_matrix`.
    pub los_matrix_norm: ComplexMatrix<f64>,
    /// Estimated frequency offset, radians per sample.
    pub cfo_estimate: f64,
    /// Per-pair noise variance referred to the sample domain (comparable to
    /// the simulator's per-sample sigma^2), row-major M x N.
    pub noise_estimates: Vec<f64>,
    /// Mean per-entry linear SNR.
    pub snr_estimate: f64,
    pub significant_taps: usize,
    /// Lags treated as significant, strongest first.
    pub tap_lags: Vec<usize>,
    /// Cyclic shifts applied per Rx channel during alignment (0 if disabled).
    pub alignment_shifts: Vec<i64>,
}

/// Cyclically shifts every Rx channel so its strongest first-block correlation
/// peak (against training waveform 0) lands on the reference channel's lag.
///
/// Shifts are resolved modulo the training delay window, centered, so the
/// recovered shift is the smallest-magnitude explanation of the peak offset.
pub fn align_captures(
    capture: &Capture,
    training: &TrainingSet,
    reference_channel: usize,
) -> Result<(Capture, Vec<i64>)> {
    if reference_channel >= capture.rx_count() {
        return Err(Error::InvalidInput("reference channel out of range".into()));
    }
    if capture.samples_per_block != training.l_t() {
        return Err(Error::InvalidInput("capture block length != training length".into()));
    }
    let modulus = training.window() as i64;
    let mut lags = Vec::with_capacity(capture.rx_count());
    for m in 0..capture.rx_count() {
        let c = training.correlate(capture.block(m, 0), 0)?;
        let mut mags: Vec<f64> = c.c.iter().map(|v| v.norm()).collect();
        let (lag, peak) = c.peak();
        mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = mags[mags.len() / 2];
        if peak.norm() < 3.0 * median {
            return Err(Error::SyncFailure(format!(
                "channel {m}: peak-to-median correlation ratio {:.2} < 3",
                peak.norm() / median
            )));
        }
        lags.push(lag as i64);
    }
    let reference = lags[reference_channel];
    let total = capture.samples_per_channel() as i64;
    let mut out = capture.clone();
    let mut shifts = Vec::with_capacity(lags.len());
    for (m, &lag) in lags.iter().enumerate() {
        // excess delay relative to the reference, centered in (-W/2, W/2]
        let mut d = (lag - reference).rem_euclid(modulus);
        if d > modulus / 2 {
            d -= modulus;
        }
        let shift = -d;
        shifts.push(shift);
        let rot = shift.rem_euclid(total) as usize;
        out.channels[m].rotate_right(rot);
    }
    Ok((out, shifts))
}

fn centered_mod(x: f64, period: f64) -> f64 {
    (x + period / 2.0).rem_euclid(period) - period / 2.0
}

fn cfo_from_lags(outputs: &[Vec<CorrelatorOutput>], lags: &[usize]) -> Result<f64> {
    if outputs.is_empty() || lags.is_empty() {
        return Err(Error::InvalidInput("no correlator outputs or taps".into()));
    }
    let blocks = outputs[0].len();
    if blocks < 2 {
        return Err(Error::InvalidInput(
            "frequency-offset estimation needs at least 2 consecutive blocks".into(),
        ));
    }
    let l_t = outputs[0][0].len() as f64;
    // phasor-domain combining: summing c_{l+1} conj(c_l) weights each term by
    // the tap energy, so weak taps (noise-dominated phases) cannot swamp the
    // average the way they would in a plain mean of arg ratios
    let mut acc = Complex::new(0.0, 0.0);
    let mut used = 0usize;
    for per_pair in outputs {
        for l in 0..blocks - 1 {
            let ca = &per_pair[l];
            let cb = &per_pair[l + 1];
            // weak-correlation guard: floor from the median magnitude, with an
            // absolute term so numerically-zero lags never contribute
            let mut mags: Vec<f64> = ca.c.iter().map(|v| v.norm()).collect();
            mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let peak = mags[mags.len() - 1];
            let floor = (10.0 * mags[mags.len() / 2]).max(1e-9 * peak);
            for &lag in lags {
                let a = ca.c[lag];
                let b = cb.c[lag];
                if a.norm() <= floor || b.norm() <= floor {
                    continue;
                }
                acc += b * a.conj();
                used += 1;
            }
        }
    }
    if used == 0 || acc.norm() == 0.0 {
        return Err(Error::EstimationFailure(
            "all correlation taps below the noise-floor guard".into(),
        ));
    }
    Ok(acc.arg() / l_t)
}

/// Frequency-offset estimate from per-pair, per-block correlator outputs.
///
/// Combines the per-block phase increments arg(c_{l+1} conj(c_l)) / L_t over
/// all pairs, consecutive block pairs, and the `l_c` strongest tap lags,
/// weighting each term by its correlation energy. Sign convention: a capture generated with
/// +cfo yields +estimate (the correlator peak phase advances by L_t * cfo per
/// block). Unambiguous for |cfo| < pi / L_t.
pub fn estimate_cfo(outputs: &[Vec<CorrelatorOutput>], l_c: usize) -> Result<f64> {
    if outputs.is_empty() || outputs[0].is_empty() {
        return Err(Error::InvalidInput("no correlator outputs".into()));
    }
    if l_c == 0 {
        return Err(Error::InvalidInput("need at least one significant tap".into()));
    }
    let l_t = outputs[0][0].len();
    let mut agg = vec![0.0f64; l_t];
    for per_pair in outputs {
        for c in per_pair {
            for (a, v) in agg.iter_mut().zip(c.c.iter()) {
                *a += v.norm();
            }
        }
    }
    let mut order: Vec<usize> = (0..l_t).collect();
    order.sort_by(|&i, &j| agg[j].partial_cmp(&agg[i]).unwrap());
    cfo_from_lags(outputs, &order[..l_c.min(l_t)])
}

/// Impulse-response estimate for one Tx-Rx pair.
///
/// De-rotates the channel stream by e^{-j cfo t} (t the global sample index),
/// correlates each block against waveform `antenna`, and averages over blocks
/// (or uses only the first when `average_blocks` is false). In the ideal
/// training mode with N > 1 the taps outside the per-antenna delay window are
/// forced to zero, where other antennas' responses alias.
pub fn estimate_channel(
    y_channel: &[Complex],
    training: &TrainingSet,
    antenna: usize,
    cfo: f64,
    average_blocks: bool,
) -> Result<Vec<Complex>> {
    if !cfo.is_finite() {
        return Err(Error::InvalidInput("non-finite frequency offset".into()));
    }
    let l_t = training.l_t();
    if y_channel.is_empty() || y_channel.len() % l_t != 0 {
        return Err(Error::InvalidInput(format!(
            "stream length {} is not a multiple of the block length {}",
            y_channel.len(),
            l_t
        )));
    }
    let blocks = if average_blocks { y_channel.len() / l_t } else { 1 };
    let mut acc = vec![Complex::new(0.0, 0.0); l_t];
    for l in 0..blocks {
        let derot: Vec<Complex> = (0..l_t)
            .map(|t| {
                let g = l * l_t + t;
                y_channel[g] * Complex::from_polar(1.0, -cfo * g as f64)
            })
            .collect();
        let c = training.correlate(&derot, antenna)?;
        for (a, v) in acc.iter_mut().zip(c.c.iter()) {
            *a += v;
        }
    }
    let scale = 1.0 / blocks as f64;
    for a in acc.iter_mut() {
        *a *= scale;
    }
    if training.mode() == TrainingMode::IdealOrthogonal && training.n() > 1 {
        for a in acc.iter_mut().skip(training.window()) {
            *a = Complex::new(0.0, 0.0);
        }
    }
    Ok(acc)
}

/// Index and value of the maximum-magnitude tap; ties break to the smallest
/// index.
pub fn extract_los(h: &[Complex]) -> Result<(usize, Complex)> {
    if h.is_empty() || h.iter().all(|v| v.norm_sqr() == 0.0) {
        return Err(Error::InvalidInput("all-zero impulse response".into()));
    }
    let mut best = 0usize;
    for (i, v) in h.iter().enumerate() {
        if v.norm_sqr() > h[best].norm_sqr() {
            best = i;
        }
    }
    Ok((best, h[best]))
}

/// Entrywise h / |h|; isolates the phase relations between channel entries.
pub fn normalize_phase_only(h: &ComplexMatrix<f64>) -> Result<ComplexMatrix<f64>> {
    let mut out = ComplexMatrix::zeros(h.rows(), h.cols());
    for i in 0..h.rows() {
        for j in 0..h.cols() {
            let v = h[(i, j)];
            let r = v.norm();
            if r == 0.0 {
                return Err(Error::InvalidInput(format!("zero entry at ({i}, {j})")));
            }
            out[(i, j)] = v / r;
        }
    }
    Ok(out)
}

/// Mean squared magnitude over all but the `l_c` strongest taps of `h`
/// (tap-domain variance).
pub fn estimate_noise(h: &[Complex], l_c: usize) -> Result<f64> {
    if l_c >= h.len() {
        return Err(Error::InvalidInput(format!(
            "l_c = {l_c} leaves no taps out of {}",
            h.len()
        )));
    }
    let mut pow: Vec<f64> = h.iter().map(|v| v.norm_sqr()).collect();
    pow.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(pow[l_c..].iter().sum::<f64>() / (h.len() - l_c) as f64)
}

/// Mean over antenna pairs of |h_mn|^2 / sigma^2_mn, linear scale.
/// A zero noise estimate yields the +infinity sentinel.
pub fn estimate_snr(h_los: &ComplexMatrix<f64>, noise: &[f64]) -> Result<f64> {
    let m = h_los.rows();
    let n = h_los.cols();
    if noise.len() != m * n {
        return Err(Error::InvalidInput("noise matrix dimension mismatch".into()));
    }
    if noise.iter().any(|&s| s < 0.0) {
        return Err(Error::InvalidInput("negative noise estimate".into()));
    }
    if noise.iter().any(|&s| s == 0.0) {
        return Ok(f64::INFINITY);
    }
    let mut sum = 0.0;
    for i in 0..m {
        for j in 0..n {
            sum += h_los[(i, j)].norm_sqr() / noise[i * n + j];
        }
    }
    Ok(sum / (m * n) as f64)
}

fn stage<'a>(label: &'a str) -> impl Fn(Error) -> Error + 'a {
    move |e| match e {
        Error::InvalidInput(s) => Error::InvalidInput(format!("{label}: {s}")),
        Error::EstimationFailure(s) => Error::EstimationFailure(format!("{label}: {s}")),
        Error::SyncFailure(s) => Error::SyncFailure(format!("{label}: {s}")),
        other => other,
    }
}

/// Full estimation chain: align, correlate, select significant taps, estimate
/// the frequency offset, the per-pair impulse responses, the LOS matrix and
/// its phase-only normalization, noise, and SNR.
pub fn run_pipeline(
    capture: &Capture,
    training: &TrainingSet,
    config: &PipelineConfig,
) -> Result<ChannelEstimateReport> {
    let m = capture.rx_count();
    let n = training.n();
    if capture.samples_per_block != training.l_t() {
        return Err(Error::InvalidInput(
            "capture block length does not match the training set".into(),
        ));
    }
    let l_t = training.l_t();
    let window = training.window();

    let (aligned, shifts);
    let cap: &Capture = if config.align {
        let res = align_captures(capture, training, config.reference_channel)
            .map_err(stage("align"))?;
        aligned = res.0;
        shifts = res.1;
        &aligned
    } else {
        shifts = vec![0; m];
        capture
    };

    // first pass: raw correlations, used for tap selection and the CFO
    let mut first_pass: Vec<Vec<CorrelatorOutput>> = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            let per_block: Vec<CorrelatorOutput> = (0..cap.blocks)
                .map(|l| training.correlate(cap.block(i, l), j))
                .collect::<Result<_>>()
                .map_err(stage("correlate"))?;
            first_pass.push(per_block);
        }
    }

    // aggregate magnitude per lag inside the valid delay window
    let mut agg = vec![0.0f64; window];
    for per_pair in &first_pass {
        for c in per_pair {
            for (a, v) in agg.iter_mut().zip(c.c.iter()) {
                *a += v.norm();
            }
        }
    }
    let mut order: Vec<usize> = (0..window).collect();
    order.sort_by(|&i, &j| agg[j].partial_cmp(&agg[i]).unwrap());
    let l_c = match config.l_c {
        Some(k) => {
            if k == 0 || k >= l_t {
                return Err(Error::InvalidInput(format!("l_c = {k} out of range")));
            }
            k.min(window)
        }
        None => {
            let mut sorted = agg.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = sorted[sorted.len() / 2];
            let peak = sorted[sorted.len() - 1];
            let thresh = (6.0 * median).max(1e-12 * peak);
            agg.iter().filter(|&&a| a > thresh).count().max(1)
        }
    };
    let tap_lags: Vec<usize> = order[..l_c].to_vec();

    let cfo_estimate = cfo_from_lags(&first_pass, &tap_lags).map_err(stage("cfo"))?;

    let mut impulse_responses = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            impulse_responses.push(
                estimate_channel(
                    &cap.channels[i],
                    training,
                    j,
                    cfo_estimate,
                    config.average_blocks,
                )
                .map_err(stage("channel"))?,
            );
        }
    }

    let mut los_matrix = ComplexMatrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let (_, v) = extract_los(&impulse_responses[i * n + j]).map_err(stage("los"))?;
            los_matrix[(i, j)] = v;
        }
    }
    let los_matrix_norm = normalize_phase_only(&los_matrix).map_err(stage("normalize"))?;

    // tap-domain noise over the valid window, referred back to the sample
    // domain: the correlator divides noise power by L_t and block averaging
    // by another factor of L
    let averaged = if config.average_blocks { cap.blocks } else { 1 };
    let refer = l_t as f64 * averaged as f64;
    let mut noise_estimates = Vec::with_capacity(m * n);
    for resp in &impulse_responses {
        let tap_var = estimate_noise(&resp[..window], l_c).map_err(stage("noise"))?;
        noise_estimates.push(tap_var * refer);
    }

    let snr_estimate = estimate_snr(&los_matrix, &noise_estimates).map_err(stage("snr"))?;

    Ok(ChannelEstimateReport {
        impulse_responses,
        los_matrix,
        los_matrix_norm,
        cfo_estimate,
        noise_estimates,
        snr_estimate,
        significant_taps: l_c,
        tap_lags,
        alignment_shifts: shifts,
    })
}

/// Smallest-magnitude residual of `x` modulo `period` (helper for tests and
/// sweep bookkeeping on cyclic quantities).
pub fn wrap_to_centered(x: f64, period: f64) -> f64 {
    centered_mod(x, period)
}
