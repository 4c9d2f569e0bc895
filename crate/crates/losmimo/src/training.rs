//! Mutually quasi-orthogonal training waveforms and the cyclic correlation
//! operator.
//!
//! Two modes share one interface: maximal-length sequences from distinct
//! primitive polynomials (realistic, small cross-correlation floor) and an
//! ideal mode built from cyclic shifts of a perfect-autocorrelation chirp,
//! separated in the delay domain (exact estimator algebra for channels whose
//! taps fit inside the per-antenna delay window).
//!
//! Block lengths: `l_chips` = 2^degree - 1 chips, `l_t` = l_chips *
//! oversampling samples. The estimation equations all operate on `l_t`.

use std::sync::Arc;

use num_complex::Complex as NumComplex;
use rustfft::{Fft, FftPlanner};

use crate::{Complex, Error, Result};

/// Primitive polynomial table, degrees 3..12. Polynomials are bit masks with
/// the x^degree and x^0 coefficients set. Each list is ordered so that the
/// first sequences have the smallest pairwise periodic cross-correlation; the
/// matching `bounds` entry gives the maximum pairwise cross-correlation (chip
/// units) over the first k+1 sequences.
///
/// For degree 10 the first three polynomials form a preferred triple with the
/// classic bound 2^6 + 1 = 65; no four degree-10 m-sequences achieve it.
const POLY_TABLE: &[(usize, &[u64], &[u32])] = &[
    (3, &[0xb, 0xd], &[0, 5]),
    (4, &[0x13, 0x19], &[0, 7]),
    (5, &[0x25, 0x2f, 0x37, 0x29, 0x3b, 0x3d], &[0, 9, 9, 11, 11, 11]),
    (6, &[0x43, 0x5b, 0x61, 0x6d, 0x73, 0x67], &[0, 17, 23, 23, 23, 23]),
    (7, &[0x83, 0x91, 0xf7, 0xb9, 0xe5, 0xab], &[0, 17, 17, 17, 17, 17]),
    (8, &[0x14d, 0x169, 0x1e7, 0x12d, 0x1cf, 0x165], &[0, 31, 47, 63, 63, 63]),
    (9, &[0x211, 0x21b, 0x269, 0x27d, 0x221, 0x2f9], &[0, 33, 55, 55, 65, 65]),
    (10, &[0x465, 0x557, 0x763, 0x615, 0x5a1, 0x643], &[0, 65, 65, 95, 97, 111]),
    (11, &[0x847, 0x8b1, 0xab3, 0xfa7, 0xd03, 0xb93], &[0, 65, 65, 65, 127, 127]),
    (12, &[0x10eb, 0x1ae1, 0x1af5, 0x15eb, 0x1123, 0x1237], &[0, 127, 191, 191, 257, 257]),
];

fn table_entry(degree: usize) -> Result<(&'static [u64], &'static [u32])> {
    POLY_TABLE
        .iter()
        .find(|(d, _, _)| *d == degree)
        .map(|(_, p, b)| (*p, *b))
        .ok_or_else(|| Error::InvalidInput(format!("no polynomial table for degree {degree}")))
}

/// Documented pairwise cross-correlation bound (chip units) for the first
/// `n` shipped sequences of a degree.
pub fn cross_correlation_bound(degree: usize, n: usize) -> Result<u32> {
    let (polys, bounds) = table_entry(degree)?;
    if n == 0 || n > polys.len() {
        return Err(Error::Capacity(format!(
            "degree {degree} ships {} sequences, {n} requested",
            polys.len()
        )));
    }
    Ok(bounds[n - 1])
}

/// Maximal-length LFSR sequence as +-1 chips, mapped {0 -> +1, 1 -> -1}.
///
/// The polynomial is validated by running the register through a full cycle;
/// a short period rejects non-primitive polynomials.
pub fn generate_mseq(degree: usize, polynomial: u64, initial_state: u64) -> Result<Vec<f64>> {
    if degree < 2 || degree > 31 {
        return Err(Error::InvalidInput(format!("degree {degree} out of range")));
    }
    if initial_state == 0 || initial_state >= (1u64 << degree) {
        return Err(Error::InvalidInput("initial state must be a nonzero register value".into()));
    }
    if polynomial & 1 == 0 || polynomial >> degree != 1 {
        return Err(Error::InvalidInput(
            "polynomial mask must set the x^degree and x^0 bits".into(),
        ));
    }
    let n = (1u64 << degree) - 1;
    let feedback = polynomial >> 1;
    // Galois LFSR; the state cycle has full period iff the polynomial is
    // primitive over GF(2).
    let mut state = initial_state;
    let mut chips = Vec::with_capacity(n as usize);
    let mut period = 0u64;
    for step in 1..=n {
        let bit = state & 1;
        chips.push(if bit == 0 { 1.0 } else { -1.0 });
        state >>= 1;
        if bit == 1 {
            state ^= feedback;
        }
        if state == initial_state && period == 0 {
            period = step;
        }
    }
    if period != n {
        return Err(Error::InvalidInput(format!(
            "polynomial {polynomial:#x} is not primitive: period {period} < {n}"
        )));
    }
    Ok(chips)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainingMode {
    MSequence,
    IdealOrthogonal,
}

/// Correlator output, one complex value per lag (length `l_t`).
#[derive(Debug, Clone)]
pub struct CorrelatorOutput {
    pub c: Vec<Complex>,
}

impl CorrelatorOutput {
    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    /// Lag and value of the maximum-magnitude entry; ties break low.
    pub fn peak(&self) -> (usize, Complex) {
        let mut best = 0usize;
        for (i, v) in self.c.iter().enumerate() {
            if v.norm_sqr() > self.c[best].norm_sqr() {
                best = i;
            }
        }
        (best, self.c[best])
    }
}

/// N quasi-orthogonal oversampled training waveforms plus cached FFT plans
/// for the cyclic correlation operator.
pub struct TrainingSet {
    mode: TrainingMode,
    degree: usize,
    oversampling: usize,
    chips: Vec<Vec<f64>>,
    waveforms: Vec<Vec<Complex>>,
    spectra: Vec<Vec<Complex>>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for TrainingSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrainingSet")
            .field("mode", &self.mode)
            .field("n", &self.n())
            .field("degree", &self.degree)
            .field("oversampling", &self.oversampling)
            .finish()
    }
}

fn plan(len: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut planner = FftPlanner::new();
    (planner.plan_fft_forward(len), planner.plan_fft_inverse(len))
}

impl TrainingSet {
    /// m-sequence mode: one waveform per shipped primitive polynomial.
    pub fn msequence(n: usize, degree: usize, oversampling: usize) -> Result<Self> {
        if n == 0 || oversampling == 0 {
            return Err(Error::InvalidInput("need n >= 1 and oversampling >= 1".into()));
        }
        let (polys, _) = table_entry(degree)?;
        if n > polys.len() {
            return Err(Error::Capacity(format!(
                "degree {degree} supports at most {} waveforms, {n} requested",
                polys.len()
            )));
        }
        let chips: Vec<Vec<f64>> = polys[..n]
            .iter()
            .map(|&p| generate_mseq(degree, p, 1))
            .collect::<Result<_>>()?;
        let waveforms: Vec<Vec<Complex>> = chips
            .iter()
            .map(|seq| {
                let mut w = Vec::with_capacity(seq.len() * oversampling);
                for &chip in seq {
                    for _ in 0..oversampling {
                        w.push(Complex::new(chip, 0.0));
                    }
                }
                w
            })
            .collect();
        Self::finish(TrainingMode::MSequence, degree, oversampling, chips, waveforms)
    }

    /// Ideal mode: cyclic shifts of one unit-modulus perfect-autocorrelation
    /// chirp, spaced l_t / n lags apart.
    pub fn ideal(n: usize, degree: usize, oversampling: usize) -> Result<Self> {
        if n == 0 || oversampling == 0 {
            return Err(Error::InvalidInput("need n >= 1 and oversampling >= 1".into()));
        }
        let l_chips = (1usize << degree) - 1;
        let l_t = l_chips * oversampling;
        if n > l_t {
            return Err(Error::Capacity("more waveforms than delay bins".into()));
        }
        let base = zadoff_chu(l_t);
        let waveforms: Vec<Vec<Complex>> = (0..n)
            .map(|i| {
                let shift = i * (l_t / n);
                (0..l_t)
                    .map(|t| base[(t + l_t - shift) % l_t])
                    .collect()
            })
            .collect();
        Self::finish(TrainingMode::IdealOrthogonal, degree, oversampling, Vec::new(), waveforms)
    }

    fn finish(
        mode: TrainingMode,
        degree: usize,
        oversampling: usize,
        chips: Vec<Vec<f64>>,
        waveforms: Vec<Vec<Complex>>,
    ) -> Result<Self> {
        let l_t = waveforms[0].len();
        let (fft, ifft) = plan(l_t);
        let spectra = waveforms
            .iter()
            .map(|w| {
                let mut buf = w.clone();
                fft.process(&mut buf);
                buf
            })
            .collect();
        Ok(Self {
            mode,
            degree,
            oversampling,
            chips,
            waveforms,
            spectra,
            fft,
            ifft,
        })
    }

    pub fn mode(&self) -> TrainingMode {
        self.mode
    }

    pub fn n(&self) -> usize {
        self.waveforms.len()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn oversampling(&self) -> usize {
        self.oversampling
    }

    pub fn l_chips(&self) -> usize {
        (1usize << self.degree) - 1
    }

    /// Block length in samples.
    pub fn l_t(&self) -> usize {
        self.waveforms[0].len()
    }

    pub fn chip_sequences(&self) -> &[Vec<f64>] {
        &self.chips
    }

    pub fn waveform(&self, n: usize) -> &[Complex] {
        &self.waveforms[n]
    }

    /// Valid delay window per antenna. Full block for m-sequences; l_t / n in
    /// ideal mode, where other antennas' responses alias outside the window.
    pub fn window(&self) -> usize {
        match self.mode {
            TrainingMode::MSequence => self.l_t(),
            TrainingMode::IdealOrthogonal => {
                if self.n() > 1 {
                    self.l_t() / self.n()
                } else {
                    self.l_t()
                }
            }
        }
    }

    /// c(tau) = (1/l_t) sum_t conj(x_n(t - tau)) y(t), tau = 0..l_t-1.
    ///
    /// A unit-gain single-tap channel with the matched waveform yields peak
    /// magnitude 1 at the tap delay.
    pub fn correlate(&self, y_block: &[Complex], antenna: usize) -> Result<CorrelatorOutput> {
        let l_t = self.l_t();
        if y_block.len() != l_t {
            return Err(Error::InvalidInput(format!(
                "block length {} != training length {}",
                y_block.len(),
                l_t
            )));
        }
        let mut buf = y_block.to_vec();
        self.fft.process(&mut buf);
        let spectrum = &self.spectra[antenna];
        for (v, x) in buf.iter_mut().zip(spectrum.iter()) {
            *v *= x.conj();
        }
        self.ifft.process(&mut buf);
        let scale = 1.0 / (l_t as f64 * l_t as f64);
        for v in &mut buf {
            *v *= scale;
        }
        Ok(CorrelatorOutput { c: buf })
    }
}

/// Unit-modulus chirp with perfect periodic autocorrelation (Zadoff-Chu,
/// root 1; the quadratic form depends on the parity of the length).
fn zadoff_chu(len: usize) -> Vec<Complex> {
    let l = len as u64;
    (0..l)
        .map(|t| {
            // reduce the quadratic mod 2L before going to float
            let q = if l % 2 == 0 {
                (t * t) % (2 * l)
            } else {
                (t * (t + 1)) % (2 * l)
            };
            let phase = -std::f64::consts::PI * q as f64 / l as f64;
            NumComplex::from_polar(1.0, phase)
        })
        .collect()
}

/// One-off cyclic correlation for callers without a [`TrainingSet`].
pub fn cyclic_correlate(y_block: &[Complex], waveform: &[Complex]) -> Result<CorrelatorOutput> {
    if y_block.len() != waveform.len() {
        return Err(Error::InvalidInput("length mismatch".into()));
    }
    let l_t = waveform.len();
    let (fft, ifft) = plan(l_t);
    let mut xs = waveform.to_vec();
    fft.process(&mut xs);
    let mut buf = y_block.to_vec();
    fft.process(&mut buf);
    for (v, x) in buf.iter_mut().zip(xs.iter()) {
        *v *= x.conj();
    }
    ifft.process(&mut buf);
    let scale = 1.0 / (l_t as f64 * l_t as f64);
    for v in &mut buf {
        *v *= scale;
    }
    Ok(CorrelatorOutput { c: buf })
}

/// Convenience constructor matching the estimator's realistic default.
pub fn build_training_set(n: usize, degree: usize, oversampling: usize) -> Result<TrainingSet> {
    TrainingSet::msequence(n, degree, oversampling)
}
