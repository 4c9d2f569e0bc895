//! Antenna array layouts, exact inter-antenna ranges, theoretical LOS channel
//! synthesis, and spacing solvers.
//!
//! Ranges are exact Euclidean distances everywhere; the parabolic (Fresnel)
//! approximation only seeds the spacing solver.

use num_complex::Complex;
use num_traits::Float;

use crate::metrics::condition_number;
use crate::numerics::ComplexMatrix;
use crate::{Error, Result};

/// Which array an operation addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Tx,
    Rx,
}

/// Spacing class solved for by [`solve_spacing`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpacingKind {
    Optimal,
    Ill,
}

/// 3D positions of the transmit and receive antennas plus the carrier
/// wavelength. Arrays extend along +x; the link axis is +z.
#[derive(Debug, Clone)]
pub struct LinkGeometry<T> {
    tx: Vec<[T; 3]>,
    rx: Vec<[T; 3]>,
    wavelength: T,
}

fn dist<T: Float>(a: &[T; 3], b: &[T; 3]) -> T {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

impl<T: Float> LinkGeometry<T> {
    /// Validates the far-field invariant: every Tx-Rx pair separated by more
    /// than 100 wavelengths.
    pub fn new(tx: Vec<[T; 3]>, rx: Vec<[T; 3]>, wavelength: T) -> Result<Self> {
        if tx.is_empty() || rx.is_empty() {
            return Err(Error::InvalidInput("need at least one antenna per side".into()));
        }
        if wavelength <= T::zero() {
            return Err(Error::InvalidInput("wavelength must be positive".into()));
        }
        let g = Self { tx, rx, wavelength };
        let min_range = T::from(100.0).unwrap() * wavelength;
        for t in &g.tx {
            for r in &g.rx {
                if dist(t, r) <= min_range {
                    return Err(Error::InvalidInput(
                        "antenna pair closer than 100 wavelengths (near field)".into(),
                    ));
                }
            }
        }
        Ok(g)
    }

    pub fn tx_count(&self) -> usize {
        self.tx.len()
    }

    pub fn rx_count(&self) -> usize {
        self.rx.len()
    }

    pub fn wavelength(&self) -> T {
        self.wavelength
    }

    pub fn tx_positions(&self) -> &[[T; 3]] {
        &self.tx
    }

    pub fn rx_positions(&self) -> &[[T; 3]] {
        &self.rx
    }

    /// Exact Euclidean range between transmit antenna `n` and receive
    /// antenna `m`.
    pub fn range(&self, m: usize, n: usize) -> T {
        dist(&self.tx[n], &self.rx[m])
    }

    /// Swaps the roles of the two arrays.
    pub fn transposed(&self) -> Self {
        Self {
            tx: self.rx.clone(),
            rx: self.tx.clone(),
            wavelength: self.wavelength,
        }
    }
}

/// Per-pair linear amplitude coefficients, M x N.
#[derive(Debug, Clone)]
pub struct GainProfile<T> {
    rows: usize,
    cols: usize,
    a: Vec<T>,
}

impl<T: Float> GainProfile<T> {
    pub fn new(rows: usize, cols: usize, a: Vec<T>) -> Result<Self> {
        if a.len() != rows * cols {
            return Err(Error::InvalidInput("gain profile dimension mismatch".into()));
        }
        if a.iter().any(|&g| !(g > T::zero())) {
            return Err(Error::InvalidInput("gains must be positive".into()));
        }
        Ok(Self { rows, cols, a })
    }

    pub fn unit(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            a: vec![T::one(); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, m: usize, n: usize) -> T {
        self.a[m * self.cols + n]
    }
}

/// Two parallel uniform linear arrays facing each other at range `r`, antenna
/// 0 of each array on the common boresight axis, both arrays extending in +x.
pub fn uniform_broadside_link<T: Float>(
    r: T,
    d_tx: T,
    d_rx: T,
    n: usize,
    m: usize,
    wavelength: T,
) -> Result<LinkGeometry<T>> {
    if r <= T::zero() {
        return Err(Error::InvalidInput("range must be positive".into()));
    }
    if d_tx < T::zero() || d_rx < T::zero() {
        return Err(Error::InvalidInput("spacings must be non-negative".into()));
    }
    let tx = (0..n)
        .map(|i| [T::from(i).unwrap() * d_tx, T::zero(), T::zero()])
        .collect();
    let rx = (0..m)
        .map(|j| [T::from(j).unwrap() * d_rx, T::zero(), r])
        .collect();
    LinkGeometry::new(tx, rx, wavelength)
}

/// Copy of the geometry with one antenna translated by `delta` along +x.
pub fn offset_antenna<T: Float>(
    geometry: &LinkGeometry<T>,
    side: Side,
    index: usize,
    delta: T,
) -> Result<LinkGeometry<T>> {
    let mut g = geometry.clone();
    let arr = match side {
        Side::Tx => &mut g.tx,
        Side::Rx => &mut g.rx,
    };
    let pos = arr
        .get_mut(index)
        .ok_or_else(|| Error::InvalidInput(format!("antenna index {index} out of range")))?;
    pos[0] = pos[0] + delta;
    Ok(g)
}

/// Theoretical LOS channel matrix: entry (m, n) = a_mn exp(-j 2 pi r_mn / lambda).
pub fn synthesize_los_channel<T: Float>(
    geometry: &LinkGeometry<T>,
    gains: &GainProfile<T>,
) -> Result<ComplexMatrix<T>> {
    let m = geometry.rx_count();
    let n = geometry.tx_count();
    if gains.rows() != m || gains.cols() != n {
        return Err(Error::InvalidInput(format!(
            "gain profile is {}x{}, geometry is {}x{}",
            gains.rows(),
            gains.cols(),
            m,
            n
        )));
    }
    let two_pi = T::from(2.0 * std::f64::consts::PI).unwrap();
    let mut h = ComplexMatrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let phase = -two_pi * geometry.range(i, j) / geometry.wavelength();
            h[(i, j)] = Complex::from_polar(gains.get(i, j), phase);
        }
    }
    Ok(h)
}

/// Theory condition number of the unit-gain LOS channel for each offset.
pub fn theoretical_condition_sweep<T: Float>(
    base: &LinkGeometry<T>,
    side: Side,
    index: usize,
    deltas: &[T],
) -> Result<Vec<(T, T)>> {
    if deltas.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidInput("non-finite offset".into()));
    }
    let gains = GainProfile::unit(base.rx_count(), base.tx_count());
    deltas
        .iter()
        .map(|&d| {
            let g = offset_antenna(base, side, index, d)?;
            let h = synthesize_los_channel(&g, &gains)?;
            Ok((d, condition_number(&h)?))
        })
        .collect()
}

fn kappa_at_spacing<T: Float>(r: T, wavelength: T, n: usize, d: T) -> Result<T> {
    let g = uniform_broadside_link(r, d, d, n, n, wavelength)?;
    let h = synthesize_los_channel(&g, &GainProfile::unit(n, n))?;
    condition_number(&h)
}

/// Golden-section minimization of `f` on [a, b].
fn golden_min<T: Float>(mut a: T, mut b: T, mut f: impl FnMut(T) -> T) -> T {
    let gr = T::from((5f64.sqrt() - 1.0) / 2.0).unwrap();
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    (a + b) / (T::one() + T::one())
}

/// Solves for an optimal (kappa = 1) or ill-conditioned (kappa -> inf) equal
/// Tx/Rx spacing at range `r`.
///
/// Closed-form parabolic seeds — optimal: d = sqrt(lambda R (kN+1)/N),
/// ill: d = sqrt(lambda R k), k >= 1 — refined by golden-section search on the
/// exact-geometry condition number within +-2% of the seed.
pub fn solve_spacing<T: Float>(
    r: T,
    wavelength: T,
    n: usize,
    kind: SpacingKind,
    order: usize,
) -> Result<T> {
    if r <= T::zero() {
        return Err(Error::InvalidInput("range must be positive".into()));
    }
    if n < 2 {
        return Err(Error::InvalidInput("spacing criterion needs N >= 2".into()));
    }
    let nf = T::from(n).unwrap();
    let seed = match kind {
        SpacingKind::Optimal => {
            let k = T::from(order * n + 1).unwrap();
            (wavelength * r * k / nf).sqrt()
        }
        SpacingKind::Ill => {
            let k = order.max(1);
            (wavelength * r * T::from(k).unwrap()).sqrt()
        }
    };
    let lo = seed * T::from(0.98).unwrap();
    let hi = seed * T::from(1.02).unwrap();
    let d = match kind {
        SpacingKind::Optimal => golden_min(lo, hi, |d| {
            kappa_at_spacing(r, wavelength, n, d).unwrap_or_else(|_| T::infinity())
        }),
        // The ill point is where the smallest singular value vanishes.
        SpacingKind::Ill => golden_min(lo, hi, |d| {
            let g = match uniform_broadside_link(r, d, d, n, n, wavelength) {
                Ok(g) => g,
                Err(_) => return T::infinity(),
            };
            let h = match synthesize_los_channel(&g, &GainProfile::unit(n, n)) {
                Ok(h) => h,
                Err(_) => return T::infinity(),
            };
            match crate::numerics::singular_values(&h) {
                Ok(sv) => sv[sv.len() - 1],
                Err(_) => T::infinity(),
            }
        }),
    };
    let kappa = kappa_at_spacing(r, wavelength, n, d)?;
    let ok = match kind {
        SpacingKind::Optimal => kappa < T::from(1.001).unwrap(),
        SpacingKind::Ill => kappa > T::from(1000.0).unwrap(),
    };
    if !ok {
        return Err(Error::SolverFailure(format!(
            "no {:?} spacing root in bracket around seed",
            kind
        )));
    }
    Ok(d)
}
