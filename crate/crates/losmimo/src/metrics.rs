//! Condition number, capacity and Monte Carlo aggregation.

use num_complex::Complex;
use num_traits::Float;

use crate::numerics::{
    empirical_cdf, log_det_hermitian_psd, pairwise_mean, singular_values, ComplexMatrix,
    EmpiricalDistribution,
};
use crate::{Error, Result};

/// Cap applied to infinite condition numbers before averaging.
pub const INFINITY_CAP: f64 = 1e6;

/// Per-realization metrics collected by the sweep harness.
#[derive(Debug, Clone, Copy)]
pub struct MetricSample {
    pub kappa_raw: f64,
    pub kappa_norm: f64,
    pub capacity_bits: f64,
    pub snr_linear: f64,
}

/// Ratio of largest to smallest singular value; +infinity for rank-deficient
/// input (the sweep harness caps the sentinel when averaging).
pub fn condition_number<T: Float>(h: &ComplexMatrix<T>) -> Result<T> {
    let sv = singular_values(h)?;
    let s_max = sv[0];
    let s_min = sv[sv.len() - 1];
    if s_max == T::zero() {
        return Err(Error::InvalidInput("zero matrix has no condition number".into()));
    }
    if s_min < T::from(1e-12).unwrap() * s_max {
        return Ok(T::infinity());
    }
    Ok(s_max / s_min)
}

/// Channel capacity in bit/s/Hz at linear SNR `rho`.
///
/// The channel is first rescaled to unit mean entry power, so orthogonal
/// unit-modulus channels reach M log2(1 + N rho).
pub fn capacity<T: Float>(h: &ComplexMatrix<T>, rho: T) -> Result<T> {
    if rho < T::zero() {
        return Err(Error::InvalidInput("negative SNR".into()));
    }
    let m = h.rows();
    let n = h.cols();
    let mut power = T::zero();
    for z in h.entries() {
        power = power + z.norm_sqr();
    }
    power = power / T::from(m * n).unwrap();
    if power == T::zero() {
        return Err(Error::InvalidInput("zero channel matrix".into()));
    }
    let scale = (T::one() / power).sqrt();
    let h_tilde = h.scale(Complex::new(scale, T::zero()));
    let mut a = h_tilde.mul(&h_tilde.conj_transpose());
    for i in 0..m {
        a[(i, i)] = a[(i, i)] * Complex::new(rho, T::zero()) + Complex::new(T::one(), T::zero());
        for j in 0..m {
            if j != i {
                a[(i, j)] = a[(i, j)] * Complex::new(rho, T::zero());
            }
        }
    }
    log_det_hermitian_psd(&a)
}

/// Orthogonal-channel capacity bound M log2(1 + N rho) for M = N.
pub fn max_capacity<T: Float>(m: usize, n: usize, rho: T) -> Result<T> {
    if m != n {
        return Err(Error::Unsupported(
            "max_capacity assumes equal array sizes (M = N)".into(),
        ));
    }
    if rho < T::zero() {
        return Err(Error::InvalidInput("negative SNR".into()));
    }
    Ok(T::from(m).unwrap() * (T::one() + T::from(n).unwrap() * rho).log2())
}

/// Aggregates of one sweep point.
#[derive(Debug, Clone)]
pub struct AggregateMetrics {
    pub mean_kappa_raw: f64,
    pub mean_kappa_norm: f64,
    pub mean_capacity: f64,
    pub mean_snr_linear: f64,
    pub mean_snr_db: f64,
    pub kappa_raw_cdf: EmpiricalDistribution<f64>,
    pub kappa_norm_cdf: EmpiricalDistribution<f64>,
    pub count: usize,
}

fn capped(x: f64) -> f64 {
    if x.is_finite() {
        x.min(INFINITY_CAP)
    } else {
        INFINITY_CAP
    }
}

/// Means (infinity-capped) and empirical CDFs over a realization set.
pub fn aggregate(samples: &[MetricSample]) -> Result<AggregateMetrics> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("no samples to aggregate".into()));
    }
    let kr: Vec<f64> = samples.iter().map(|s| capped(s.kappa_raw)).collect();
    let kn: Vec<f64> = samples.iter().map(|s| capped(s.kappa_norm)).collect();
    let cap: Vec<f64> = samples.iter().map(|s| capped(s.capacity_bits)).collect();
    let snr: Vec<f64> = samples.iter().map(|s| capped(s.snr_linear)).collect();
    let snr_db: Vec<f64> = snr.iter().map(|&r| 10.0 * r.log10()).collect();
    Ok(AggregateMetrics {
        mean_kappa_raw: pairwise_mean(&kr),
        mean_kappa_norm: pairwise_mean(&kn),
        mean_capacity: pairwise_mean(&cap),
        mean_snr_linear: pairwise_mean(&snr),
        mean_snr_db: pairwise_mean(&snr_db),
        kappa_raw_cdf: empirical_cdf(&kr)?,
        kappa_norm_cdf: empirical_cdf(&kn)?,
        count: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    type C = num_complex::Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn condition_number_orthogonal() {
        let h = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(-1.0, 0.0)],
        ]);
        assert_relative_eq!(condition_number(&h).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn condition_number_known_phase() {
        // closed form sqrt((2+sqrt 2)/(2-sqrt 2)) = 1 + sqrt 2
        let h = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 1.0)],
        ]);
        assert_relative_eq!(
            condition_number(&h).unwrap(),
            1.0 + 2f64.sqrt(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn condition_number_keyhole() {
        let h = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(1.0, 0.0)],
        ]);
        assert!(condition_number(&h).unwrap().is_infinite());
    }

    #[test]
    fn condition_number_zero_matrix() {
        let h = ComplexMatrix::from_rows(&[vec![c(0.0, 0.0)]]);
        assert!(condition_number(&h).is_err());
    }

    fn orthogonal_2x2() -> ComplexMatrix<f64> {
        ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(-1.0, 0.0)],
        ])
    }

    #[test]
    fn capacity_orthogonal_closed_form() {
        let rho = 10f64.powf(2.435);
        let cap = capacity(&orthogonal_2x2(), rho).unwrap();
        assert_relative_eq!(cap, 2.0 * (1.0 + 2.0 * rho).log2(), max_relative = 1e-9);
        assert!((cap - 18.17).abs() < 0.02);
    }

    #[test]
    fn capacity_rank_one() {
        // normalized keyhole has single eigenvalue MN rho
        let h = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(1.0, 0.0)],
        ]);
        let cap = capacity(&h, 10.0).unwrap();
        assert_relative_eq!(cap, (1.0 + 40.0f64).log2(), epsilon = 1e-6);
    }

    #[test]
    fn capacity_gauge_invariance() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..20 {
            let mut h = ComplexMatrix::zeros(2, 2);
            for i in 0..2 {
                for j in 0..2 {
                    h[(i, j)] = C::from_polar(
                        rng.gen_range(0.5..2.0),
                        rng.gen_range(-3.14..3.14),
                    );
                }
            }
            let rho = 50.0;
            let base_cap = capacity(&h, rho).unwrap();
            let base_kappa = condition_number(&h).unwrap();
            let mut d1 = ComplexMatrix::zeros(2, 2);
            let mut d2 = ComplexMatrix::zeros(2, 2);
            for i in 0..2 {
                d1[(i, i)] = C::from_polar(1.0, rng.gen_range(-3.14..3.14));
                d2[(i, i)] = C::from_polar(1.0, rng.gen_range(-3.14..3.14));
            }
            let g = d1.mul(&h).mul(&d2);
            assert_relative_eq!(capacity(&g, rho).unwrap(), base_cap, epsilon = 1e-9);
            assert_relative_eq!(
                condition_number(&g).unwrap(),
                base_kappa,
                max_relative = 1e-9
            );
            // positive real rescaling absorbed by normalization
            let scaled = h.scale(c(3.7, 0.0));
            assert_relative_eq!(capacity(&scaled, rho).unwrap(), base_cap, epsilon = 1e-9);
            assert_relative_eq!(
                condition_number(&scaled).unwrap(),
                base_kappa,
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn capacity_maximized_at_unit_condition() {
        // 2x2 unit-modulus channels parametrized by one phase: capacity peaks
        // exactly where kappa = 1
        let rho = 100.0;
        let mut best_cap = f64::NEG_INFINITY;
        let mut best_kappa = f64::NAN;
        for k in 0..=400 {
            let phi = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * k as f64 / 400.0;
            let h = ComplexMatrix::from_rows(&[
                vec![c(1.0, 0.0), c(1.0, 0.0)],
                vec![c(1.0, 0.0), C::from_polar(1.0, phi)],
            ]);
            let cap = capacity(&h, rho).unwrap();
            if cap > best_cap {
                best_cap = cap;
                best_kappa = condition_number(&h).unwrap();
            }
        }
        assert_relative_eq!(best_kappa, 1.0, max_relative = 1e-9);
        assert_relative_eq!(
            best_cap,
            max_capacity(2, 2, rho).unwrap(),
            max_relative = 1e-9
        );
    }

    #[test]
    fn capacity_monotone_in_snr() {
        let h = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.3, 0.2)],
            vec![c(0.1, -0.4), c(0.9, 0.0)],
        ]);
        let mut prev = capacity(&h, 0.0).unwrap();
        for k in 1..50 {
            let cur = capacity(&h, k as f64).unwrap();
            assert!(cur > prev);
            prev = cur;
        }
    }

    #[test]
    fn max_capacity_values() {
        assert!((max_capacity(2, 2, 10f64.powf(2.435)).unwrap() - 18.17).abs() < 0.02);
        assert!((max_capacity(3, 3, 10f64.powf(2.46)).unwrap() - 29.28).abs() < 0.02);
        assert_relative_eq!(max_capacity(2, 2, 0.0).unwrap(), 0.0);
        assert!(max_capacity::<f64>(2, 3, 1.0).is_err());
    }

    #[test]
    fn aggregate_basics() {
        let s = |k: f64| MetricSample {
            kappa_raw: k,
            kappa_norm: k,
            capacity_bits: 1.0,
            snr_linear: 10.0,
        };
        let one = aggregate(&[s(2.0)]).unwrap();
        assert_eq!(one.mean_kappa_raw, 2.0);
        assert_eq!(one.count, 1);
        let two = aggregate(&[s(1.0), s(3.0)]).unwrap();
        assert_relative_eq!(two.mean_kappa_raw, 2.0);
        let inf = aggregate(&[s(f64::INFINITY), s(1.0)]).unwrap();
        assert_relative_eq!(inf.mean_kappa_raw, (INFINITY_CAP + 1.0) / 2.0);
        assert!(aggregate(&[]).is_err());
    }
}
