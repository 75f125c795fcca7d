#![allow(dead_code)]

//! Random instance generators and independent reference computations shared
//! by the integration tests. Nothing here calls into the library's own
//! correlation or s-function code.

use eprb::model::{BellLocalParams, BellRealParams, DetectorProbs, GenericParams};
use eprb::{Rational, Scalar};
use rand::Rng;
use rand_chacha::ChaCha20Rng;

pub fn q(n: i64, d: i64) -> Rational {
    Rational::ratio(n, d)
}

/// A random pmf of length N with small integer weights; some entries may be zero.
pub fn rational_pmf<const N: usize>(rng: &mut ChaCha20Rng, zero_chance: f64) -> [Rational; N] {
    loop {
        let w: [i64; N] =
            std::array::from_fn(|_| if rng.gen_bool(zero_chance) { 0 } else { rng.gen_range(1..=30) });
        let total: i64 = w.iter().sum();
        if total > 0 {
            return w.map(|v| q(v, total));
        }
    }
}

pub fn f64_pmf<const N: usize>(rng: &mut ChaCha20Rng) -> [f64; N] {
    let w: [f64; N] = std::array::from_fn(|_| -rng.gen::<f64>().max(1e-300).ln());
    let total: f64 = w.iter().sum();
    w.map(|v| v / total)
}

pub fn rational_rho(rng: &mut ChaCha20Rng) -> BellRealParams<Rational> {
    BellRealParams::new(rational_pmf(rng, 0.3)).unwrap()
}

pub fn f64_rho(rng: &mut ChaCha20Rng) -> BellRealParams<f64> {
    BellRealParams::new(f64_pmf(rng)).unwrap()
}

pub fn rational_delta(rng: &mut ChaCha20Rng) -> DetectorProbs<Rational> {
    DetectorProbs::new(rational_pmf(rng, 0.0)).unwrap()
}

pub fn f64_delta(rng: &mut ChaCha20Rng) -> DetectorProbs<f64> {
    let d: [f64; 4] = f64_pmf(rng);
    DetectorProbs::new(d.map(|v| 0.02 + 0.92 * v)).unwrap()
}

pub fn rational_local(rng: &mut ChaCha20Rng) -> BellLocalParams<Rational> {
    let mut p = || q(rng.gen_range(0..=12), 12);
    BellLocalParams::from_minus_probs(p(), p(), p(), p()).unwrap()
}

pub fn f64_local(rng: &mut ChaCha20Rng) -> BellLocalParams<f64> {
    let mut p = || rng.gen::<f64>();
    BellLocalParams::from_minus_probs(p(), p(), p(), p()).unwrap()
}

/// Random γ: an independent pmf in each setting column.
pub fn f64_generic(rng: &mut ChaCha20Rng) -> GenericParams<f64> {
    let cols: [[f64; 4]; 4] = std::array::from_fn(|_| f64_pmf(rng));
    GenericParams::new(std::array::from_fn(|k| cols[k % 4][k / 4])).unwrap()
}

/// (w, x, y, z) straight from γ: same-sign blocks minus mixed-sign blocks.
pub fn oracle_correlations<T: Scalar>(gamma: &[T; 16]) -> [f64; 4] {
    std::array::from_fn(|j| {
        gamma[j].to_f64() - gamma[4 + j].to_f64() - gamma[8 + j].to_f64() + gamma[12 + j].to_f64()
    })
}

/// The four CHSH combinations written out term by term.
pub fn oracle_s(c: [f64; 4]) -> [f64; 4] {
    let [w, x, y, z] = c;
    [-w + x + y + z, w - x + y + z, w + x - y + z, w + x + y - z]
}

pub fn oracle_chsh(c: [f64; 4]) -> bool {
    oracle_s(c).iter().all(|s| s.abs() <= 2.0)
}

/// γ of a hidden-quadruple pmf from the outcome rule: A is A₁ under setting
/// a and A₂ under a', B likewise. Index k = 4·block + setting.
pub fn oracle_bell_real_gamma(rho: &[Rational; 16]) -> [Rational; 16] {
    let mut g: [Rational; 16] = std::array::from_fn(|_| q(0, 1));
    for (h, p) in rho.iter().enumerate() {
        let (a1, a2, b1, b2) = ((h >> 3) & 1, (h >> 2) & 1, (h >> 1) & 1, h & 1);
        for setting in 0..4 {
            let a = if setting < 2 { a1 } else { a2 };
            let b = if setting % 2 == 0 { b1 } else { b2 };
            let k = 4 * (2 * a + b) + setting;
            g[k] = g[k].clone() + p.clone();
        }
    }
    g
}
