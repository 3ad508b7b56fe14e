//! Fourier transforms of self-similar measures via truncated products.
//!
//! The stationary measure of a digit system with digit weights `p` satisfies
//! a rescaling identity whose Fourier side is an infinite product: each
//! factor is the weighted exponential sum over the digits, evaluated at the
//! frequency divided by a power of the base. This module evaluates truncated
//! products, bounds the truncation error, and checks the scaling invariance
//! that makes slab projections of the measure non-absolutely-continuous.
//! Everything here is diagnostic; no certificate depends on it.

use num_complex::Complex64;

use crate::digit_system::DigitSystem;
use crate::entropy::validate_weights;
use crate::projection::Direction;
use crate::Result;

const TAU: f64 = std::f64::consts::TAU;

/// One factor of the product: `phi(xi) = sum_i p_i exp(-2 pi i digit_i . xi)`.
#[derive(Debug, Clone)]
pub struct TransferFactor {
    base: u32,
    digits: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TransferFactor {
    pub fn new(system: &DigitSystem, weights: &[f64]) -> Result<Self> {
        validate_weights(system, weights, 1e-9)?;
        Ok(Self::from_digits(
            system.base(),
            system.digits().to_vec(),
            weights.to_vec(),
        ))
    }

    pub fn uniform(system: &DigitSystem) -> Self {
        let k = system.digit_count();
        Self::from_digits(
            system.base(),
            system.digits().to_vec(),
            vec![1.0 / k as f64; k],
        )
    }

    /// Builds the factor from a raw digit list, bypassing the digit-system
    /// validator. Useful for control measures such as the full grid, whose
    /// transform must vanish at nonzero integer frequencies.
    pub fn from_digits(base: u32, digits: Vec<Vec<u32>>, weights: Vec<f64>) -> Self {
        assert_eq!(digits.len(), weights.len(), "one weight per digit");
        assert!(!digits.is_empty(), "digit list must be nonempty");
        let digits = digits
            .into_iter()
            .map(|d| d.into_iter().map(f64::from).collect())
            .collect();
        TransferFactor { base, digits, weights }
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn dim(&self) -> usize {
        self.digits[0].len()
    }

    /// Evaluates the factor at a real frequency vector.
    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        assert_eq!(xi.len(), self.dim(), "frequency dimension mismatch");
        let mut sum = Complex64::new(0.0, 0.0);
        for (digit, &w) in self.digits.iter().zip(&self.weights) {
            let dot: f64 = digit.iter().zip(xi).map(|(d, x)| d * x).sum();
            sum += w * Complex64::cis(-TAU * dot);
        }
        sum
    }

    /// Mean Euclidean norm of the digits, the constant in the truncation
    /// bound.
    pub fn mean_digit_norm(&self) -> f64 {
        let total: f64 = self
            .digits
            .iter()
            .zip(&self.weights)
            .map(|(d, &w)| w * d.iter().map(|c| c * c).sum::<f64>().sqrt())
            .sum();
        total
    }
}

/// Truncated product `prod_{k=1..depth} phi(xi / N^k)`.
pub fn mu_hat(factor: &TransferFactor, xi: &[f64], depth: u32) -> Complex64 {
    assert!(depth >= 1, "depth must be at least 1");
    let n = factor.base() as f64;
    let mut x: Vec<f64> = xi.to_vec();
    let mut product = Complex64::new(1.0, 0.0);
    for _ in 0..depth {
        for c in &mut x {
            *c /= n;
        }
        product *= factor.eval(&x);
    }
    product
}

/// Bound on the modulus of the neglected tail. Each omitted factor differs
/// from 1 by at most `2 pi |digit . xi| / N^k` in the mean, and the factors
/// are unit-bounded, so the tail contributes at most the geometric sum
/// `2 pi |xi| E|digit| / (N^depth (N - 1))`.
pub fn truncation_bound(factor: &TransferFactor, xi: &[f64], depth: u32) -> f64 {
    let n = factor.base() as f64;
    let norm = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
    TAU * norm * factor.mean_digit_norm() / (n.powi(depth as i32) * (n - 1.0))
}

/// Result of comparing the transform at an integer frequency and at its
/// base-N multiple.
#[derive(Debug, Clone)]
pub struct InvarianceReport {
    pub frequency: Vec<i64>,
    pub value: Complex64,
    pub scaled_value: Complex64,
    pub difference: f64,
    pub truncation_bound: f64,
}

impl InvarianceReport {
    /// True when the observed defect is explained by truncation alone, with
    /// a small allowance for rounding in the product.
    pub fn passed(&self) -> bool {
        self.difference <= self.truncation_bound + 1e-10
    }
}

/// Evaluates the transform at `z . v` and at `N z . v` with the same depth.
/// At integer frequencies the factor equals 1, so multiplying the frequency
/// by the base only shifts the truncation window by one step: the reported
/// difference must be at truncation-error scale.
pub fn check_scaling_invariance(
    factor: &TransferFactor,
    v: &Direction,
    z: i64,
    depth: u32,
) -> InvarianceReport {
    assert!(z != 0, "the zero frequency is invariant trivially");
    let frequency: Vec<i64> = v.components().iter().map(|&c| c * z).collect();
    let xi: Vec<f64> = frequency.iter().map(|&c| c as f64).collect();
    let scaled: Vec<f64> = xi.iter().map(|&c| c * factor.base() as f64).collect();
    let value = mu_hat(factor, &xi, depth);
    let scaled_value = mu_hat(factor, &scaled, depth);
    InvarianceReport {
        frequency,
        value,
        scaled_value,
        difference: (value - scaled_value).norm(),
        truncation_bound: truncation_bound(factor, &xi, depth),
    }
}

/// One surviving frequency of a non-vanishing scan.
#[derive(Debug, Clone)]
pub struct ScanEntry {
    pub direction: Direction,
    pub multiple: i64,
    pub modulus: f64,
}

/// Scans `|mu_hat(z v)|` for `v` in the given set and `1 <= z <= z_max`,
/// keeping entries above the threshold. A nonempty result is numerical
/// evidence that the projected measures have Fourier coefficients bounded
/// away from zero, hence are not absolutely continuous.
pub fn nonvanishing_scan(
    factor: &TransferFactor,
    directions: &[Direction],
    z_max: i64,
    depth: u32,
    threshold: f64,
) -> Vec<ScanEntry> {
    assert!(z_max >= 1, "scan needs at least one multiple");
    let mut entries = Vec::new();
    for v in directions {
        for z in 1..=z_max {
            let xi: Vec<f64> = v.components().iter().map(|&c| (c * z) as f64).collect();
            let modulus = mu_hat(factor, &xi, depth).norm();
            if modulus > threshold {
                entries.push(ScanEntry { direction: v.clone(), multiple: z, modulus });
            }
        }
    }
    entries
}
