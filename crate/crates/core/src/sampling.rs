//! Seeded random matrices for property campaigns.
//!
//! Every generator draws from a [`ChaCha8Rng`]; campaigns derive one
//! sub-seed per trial with [`sub_seed`] so results do not depend on the
//! order in which trials are scheduled.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::eigh;
use crate::matrix::ComplexMatrix;

pub type SeededRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    Density,
    Effect,
    Unitary,
    HermitianContraction,
}

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Deterministic per-trial seed (splitmix64 finalizer over seed and index).
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gaussian(rng: &mut SeededRng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Square matrix of i.i.d. standard complex Gaussians.
pub fn ginibre(dim: usize, rng: &mut SeededRng) -> ComplexMatrix {
    let m = DMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    ComplexMatrix::wrap(m)
}

/// Haar-random unit vector.
pub fn haar_pure_state(dim: usize, rng: &mut SeededRng) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..dim).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// G G† / Tr(G G†) for Ginibre G.
pub fn random_density(dim: usize, rng: &mut SeededRng) -> ComplexMatrix {
    let g = ginibre(dim, rng);
    let h = &g * &g.adjoint();
    let tr = h.trace().re;
    h.scale(1.0 / tr).hermitian_part()
}

/// Random PSD matrix (G G†), unnormalized.
pub fn random_psd(dim: usize, rng: &mut SeededRng) -> ComplexMatrix {
    let g = ginibre(dim, rng);
    (&g * &g.adjoint()).hermitian_part()
}

/// PSD with operator norm in (0, 1].
pub fn random_effect(dim: usize, rng: &mut SeededRng) -> Result<ComplexMatrix> {
    let h = random_psd(dim, rng);
    let top = eigh(&h)?.max();
    let u: f64 = 1.0 - rng.gen::<f64>();
    Ok(h.scale(u / top).hermitian_part())
}

/// Haar unitary: QR of a Ginibre matrix with the phases of R's diagonal
/// folded back into Q.
pub fn random_unitary(dim: usize, rng: &mut SeededRng) -> ComplexMatrix {
    let g = ginibre(dim, rng).into_nalgebra();
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let phased = DMatrix::from_fn(dim, dim, |i, j| {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        q[(i, j)] * phase
    });
    ComplexMatrix::wrap(phased)
}

/// Hermitian with operator norm in (0, 1].
pub fn random_hermitian_contraction(dim: usize, rng: &mut SeededRng) -> Result<ComplexMatrix> {
    let h = ginibre(dim, rng).hermitian_part();
    let eig = eigh(&h)?;
    let radius = eig.min().abs().max(eig.max().abs());
    let u: f64 = 1.0 - rng.gen::<f64>();
    Ok(h.scale(u / radius).hermitian_part())
}

/// One random matrix of the requested kind, reproducible from `seed`.
pub fn sample_random(kind: SampleKind, dim: usize, seed: u64) -> Result<ComplexMatrix> {
    if dim == 0 {
        return Err(Error::OutOfRange("dimension must be at least 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    match kind {
        SampleKind::Density => Ok(random_density(dim, &mut rng)),
        SampleKind::Effect => random_effect(dim, &mut rng),
        SampleKind::Unitary => Ok(random_unitary(dim, &mut rng)),
        SampleKind::HermitianContraction => random_hermitian_contraction(dim, &mut rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{is_hermitian, is_psd, loewner_leq, operator_norm_hermitian};
    use crate::tolerance::ToleranceConfig;

    #[test]
    fn density_is_state() {
        let t = ToleranceConfig::default();
        for seed in 0..20 {
            let rho = sample_random(SampleKind::Density, 2, seed).unwrap();
            assert!((rho.trace().re - 1.0).abs() <= 1e-12);
            assert!(eigh(&rho).unwrap().min() >= 0.0 - 1e-15);
            assert!(is_psd(&rho, &t).unwrap());
        }
    }

    #[test]
    fn unitary_is_unitary() {
        for seed in 0..20 {
            let u = sample_random(SampleKind::Unitary, 3, seed).unwrap();
            let dev = (&u.adjoint() * &u)
                .max_abs_diff(&ComplexMatrix::identity(3))
                .unwrap();
            assert!(dev <= 1e-10, "seed {seed}: {dev}");
        }
    }

    #[test]
    fn effect_between_zero_and_identity() {
        let t = ToleranceConfig::default();
        for seed in 0..20 {
            let e = sample_random(SampleKind::Effect, 4, seed).unwrap();
            assert!(loewner_leq(&ComplexMatrix::zeros(4), &e, &t).unwrap());
            assert!(loewner_leq(&e, &ComplexMatrix::identity(4), &t).unwrap());
        }
    }

    #[test]
    fn contraction_is_hermitian_and_bounded() {
        let t = ToleranceConfig::default();
        for seed in 0..20 {
            let h = sample_random(SampleKind::HermitianContraction, 3, seed).unwrap();
            assert!(is_hermitian(&h, &t));
            assert!(operator_norm_hermitian(&h, &t).unwrap() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        for kind in [
            SampleKind::Density,
            SampleKind::Effect,
            SampleKind::Unitary,
            SampleKind::HermitianContraction,
        ] {
            let a = sample_random(kind, 3, 77).unwrap();
            let b = sample_random(kind, 3, 77).unwrap();
            assert_eq!(a, b);
            let c = sample_random(kind, 3, 78).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn sub_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| sub_seed(7, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }
}
