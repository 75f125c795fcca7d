//! Model instances, generic parameters, correlations and s-functions.
//!
//! Index conventions used throughout the crate:
//!
//! * A setting pair `(D_A, D_B)` has index `0..4` in the order
//!   ab = (-1,-1), ab' = (-1,+1), a'b = (+1,-1), a'b' = (+1,+1).
//! * An outcome pair `(A, B)` has block index `0..4` in the same order
//!   (-,-), (-,+), (+,-), (+,+).
//! * `gamma[4 * block + setting]` is `P(A, B | D_A, D_B)`.

use std::f64::consts::SQRT_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fine::REALITY_ROWS;
use crate::scalar::Scalar;

/// Absolute tolerance on float pmf sums.
pub const SUM_TOL: f64 = 1e-12;
/// Float entries below this are rejected; entries in `[NEG_TOL, 0)` are clipped to zero.
pub const NEG_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Spin {
    Minus,
    Plus,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Minus, Spin::Plus];

    pub fn value(self) -> i64 {
        match self {
            Spin::Minus => -1,
            Spin::Plus => 1,
        }
    }

    pub fn bit(self) -> usize {
        match self {
            Spin::Minus => 0,
            Spin::Plus => 1,
        }
    }

    pub fn from_bit(bit: usize) -> Spin {
        if bit == 0 {
            Spin::Minus
        } else {
            Spin::Plus
        }
    }

    pub fn from_value(v: i64) -> Option<Spin> {
        match v {
            -1 => Some(Spin::Minus),
            1 => Some(Spin::Plus),
            _ => None,
        }
    }
}

/// Index of the setting pair `(u, v)`.
pub fn setting_index(u: Spin, v: Spin) -> usize {
    2 * u.bit() + v.bit()
}

/// Index of the outcome pair `(s, t)`.
pub fn block_index(s: Spin, t: Spin) -> usize {
    2 * s.bit() + t.bit()
}

/// Zero-based index into γ of `P(A=s, B=t | D_A=u, D_B=v)`.
pub fn gamma_index(s: Spin, t: Spin, u: Spin, v: Spin) -> usize {
    4 * block_index(s, t) + setting_index(u, v)
}

/// Inverse of [`gamma_index`]: `(s, t, u, v)`.
pub fn gamma_assignment(k: usize) -> (Spin, Spin, Spin, Spin) {
    let block = k / 4;
    let setting = k % 4;
    (
        Spin::from_bit(block / 2),
        Spin::from_bit(block % 2),
        Spin::from_bit(setting / 2),
        Spin::from_bit(setting % 2),
    )
}

pub const SETTING_NAMES: [&str; 4] = ["ab", "ab'", "a'b", "a'b'"];

/// Sign matrix mapping correlations to s-functions.
pub const S_MATRIX: [[i64; 4]; 4] = [[-1, 1, 1, 1], [1, -1, 1, 1], [1, 1, -1, 1], [1, 1, 1, -1]];

fn check_unit_entries<T: Scalar>(what: &'static str, xs: &mut [T]) -> Result<()> {
    for (i, x) in xs.iter_mut().enumerate() {
        let f = x.to_f64();
        if !T::EXACT && !f.is_finite() {
            return Err(Error::NonFinite(what));
        }
        if x.sign_tol(NEG_TOL) == std::cmp::Ordering::Less {
            return Err(Error::Negative { what, index: i + 1, value: f });
        }
        if *x < T::zero() {
            *x = T::zero();
        }
        if (x.clone() - T::one()).sign_tol(SUM_TOL) == std::cmp::Ordering::Greater {
            return Err(Error::AboveOne { what, index: i + 1, value: f });
        }
    }
    Ok(())
}

fn sum<T: Scalar>(xs: &[T]) -> T {
    xs.iter().cloned().fold(T::zero(), |a, b| a + b)
}

fn check_sum_one<T: Scalar>(what: &'static str, xs: &[T]) -> Result<()> {
    let total = sum(xs);
    if !total.near(&T::one(), SUM_TOL) {
        return Err(Error::BadSum { what, sum: total.to_f64() });
    }
    Ok(())
}

/// The 16 generic parameters γ.
#[derive(Debug, Clone, PartialEq)]
pub struct GenericParams<T> {
    gamma: [T; 16],
}

impl<T: Scalar> GenericParams<T> {
    pub fn new(mut gamma: [T; 16]) -> Result<Self> {
        check_unit_entries("gamma", &mut gamma)?;
        for setting in 0..4 {
            let col: T = (0..4).map(|b| gamma[4 * b + setting].clone()).fold(T::zero(), |a, b| a + b);
            if !col.near(&T::one(), SUM_TOL) {
                return Err(Error::BadColumn { setting: setting + 1, sum: col.to_f64() });
            }
        }
        Ok(GenericParams { gamma })
    }

    pub(crate) fn new_unchecked(gamma: [T; 16]) -> Self {
        GenericParams { gamma }
    }

    /// Every γ equal to ¼.
    pub fn minimal() -> Self {
        GenericParams { gamma: std::array::from_fn(|_| T::ratio(1, 4)) }
    }

    pub fn as_array(&self) -> &[T; 16] {
        &self.gamma
    }

    pub fn into_array(self) -> [T; 16] {
        self.gamma
    }

    pub fn get(&self, s: Spin, t: Spin, u: Spin, v: Spin) -> &T {
        &self.gamma[gamma_index(s, t, u, v)]
    }

    pub fn to_f64(&self) -> GenericParams<f64> {
        GenericParams { gamma: std::array::from_fn(|k| self.gamma[k].to_f64()) }
    }

    /// Number of entries treated as nonzero (`|γ| > tol` for floats, exact for rationals).
    pub fn support(&self, tol: f64) -> [bool; 16] {
        std::array::from_fn(|k| !self.gamma[k].is_zero_tol(tol))
    }
}

/// Joint setting-pair probabilities δ.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorProbs<T> {
    delta: [T; 4],
}

impl<T: Scalar> DetectorProbs<T> {
    pub fn new(delta: [T; 4]) -> Result<Self> {
        for (i, d) in delta.iter().enumerate() {
            if !T::EXACT && !d.to_f64().is_finite() {
                return Err(Error::NonFinite("delta"));
            }
            if *d <= T::zero() || *d >= T::one() {
                return Err(Error::DetectorRange { index: i + 1, value: d.to_f64() });
            }
        }
        check_sum_one("delta", &delta)?;
        Ok(DetectorProbs { delta })
    }

    pub fn uniform() -> Self {
        DetectorProbs { delta: std::array::from_fn(|_| T::ratio(1, 4)) }
    }

    pub fn as_array(&self) -> &[T; 4] {
        &self.delta
    }

    pub fn get(&self, u: Spin, v: Spin) -> &T {
        &self.delta[setting_index(u, v)]
    }
}

impl<T: Scalar> Default for DetectorProbs<T> {
    fn default() -> Self {
        Self::uniform()
    }
}

/// QM measurement-difference angles. Only θ₂, θ₃, θ₄ are stored; θ₁ is their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QmAngles {
    theta: [f64; 3],
}

impl QmAngles {
    pub fn from_radians(theta2: f64, theta3: f64, theta4: f64) -> Result<Self> {
        if ![theta2, theta3, theta4].iter().all(|t| t.is_finite()) {
            return Err(Error::NonFinite("theta"));
        }
        Ok(QmAngles { theta: [theta2, theta3, theta4] })
    }

    pub fn from_degrees(theta2: f64, theta3: f64, theta4: f64) -> Result<Self> {
        Self::from_radians(theta2.to_radians(), theta3.to_radians(), theta4.to_radians())
    }

    /// Accepts all four angles in degrees and checks θ₁ = θ₂+θ₃+θ₄ modulo 180°,
    /// the period of every QM probability.
    pub fn from_degrees_checked(theta1: f64, theta2: f64, theta3: f64, theta4: f64) -> Result<Self> {
        let angles = Self::from_degrees(theta2, theta3, theta4)?;
        if !theta1.is_finite() {
            return Err(Error::NonFinite("theta1"));
        }
        let diff = theta1.to_radians() - angles.theta1();
        let turns = (diff / std::f64::consts::PI).round();
        if (diff - turns * std::f64::consts::PI).abs() > 1e-12 {
            return Err(Error::AngleConstraint {
                theta1_deg: theta1,
                sum_deg: angles.theta1().to_degrees(),
            });
        }
        Ok(angles)
    }

    pub fn theta1(&self) -> f64 {
        self.theta.iter().sum()
    }

    /// θ_k in radians for k = 1..=4.
    pub fn theta(&self, k: usize) -> f64 {
        match k {
            1 => self.theta1(),
            2..=4 => self.theta[k - 2],
            _ => panic!("theta index {k} out of range 1..=4"),
        }
    }

    pub fn all_radians(&self) -> [f64; 4] {
        [self.theta1(), self.theta[0], self.theta[1], self.theta[2]]
    }

    pub fn all_degrees(&self) -> [f64; 4] {
        self.all_radians().map(f64::to_degrees)
    }

    /// Correlations (cos2θ₁, …, cos2θ₄).
    pub fn correlations(&self) -> [f64; 4] {
        self.all_radians().map(|t| (2.0 * t).cos())
    }
}

/// A pmf over the 16 hidden quadruples (A₁,A₂,B₁,B₂).
#[derive(Debug, Clone, PartialEq)]
pub struct BellRealParams<T> {
    rho: [T; 16],
}

impl<T: Scalar> BellRealParams<T> {
    pub fn new(mut rho: [T; 16]) -> Result<Self> {
        check_unit_entries("rho", &mut rho)?;
        check_sum_one("rho", &rho)?;
        Ok(BellRealParams { rho })
    }

    pub fn as_array(&self) -> &[T; 16] {
        &self.rho
    }
}

/// One-sided outcome probabilities: α₁=P(A=-|D_A=-), α₂=P(A=-|D_A=+),
/// α₃=P(A=+|D_A=-), α₄=P(A=+|D_A=+), and likewise β for Bob.
#[derive(Debug, Clone, PartialEq)]
pub struct BellLocalParams<T> {
    alpha: [T; 4],
    beta: [T; 4],
}

impl<T: Scalar> BellLocalParams<T> {
    pub fn new(mut alpha: [T; 4], mut beta: [T; 4]) -> Result<Self> {
        check_unit_entries("alpha", &mut alpha)?;
        check_unit_entries("beta", &mut beta)?;
        for (which, v) in [("alpha", &alpha), ("beta", &beta)] {
            for (i, j) in [(0, 2), (1, 3)] {
                if !(v[i].clone() + v[j].clone()).near(&T::one(), SUM_TOL) {
                    return Err(Error::OneSided {
                        which,
                        first: v[i].to_f64(),
                        second: v[j].to_f64(),
                    });
                }
            }
        }
        Ok(BellLocalParams { alpha, beta })
    }

    /// Builds the parameters from P(A=-|D_A=-), P(A=-|D_A=+), P(B=-|D_B=-), P(B=-|D_B=+).
    pub fn from_minus_probs(a1: T, a2: T, b1: T, b2: T) -> Result<Self> {
        let one = T::one;
        Self::new(
            [a1.clone(), a2.clone(), one() - a1, one() - a2],
            [b1.clone(), b2.clone(), one() - b1, one() - b2],
        )
    }

    pub fn alpha(&self) -> &[T; 4] {
        &self.alpha
    }

    pub fn beta(&self) -> &[T; 4] {
        &self.beta
    }

    /// P(A=s | D_A=u).
    pub fn alice(&self, s: Spin, u: Spin) -> &T {
        &self.alpha[2 * s.bit() + u.bit()]
    }

    /// P(B=t | D_B=v).
    pub fn bob(&self, t: Spin, v: Spin) -> &T {
        &self.beta[2 * t.bit() + v.bit()]
    }
}

/// A deterministic instance: one selected γ index per setting column (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct DeterministicInstance {
    selection: [usize; 4],
}

impl DeterministicInstance {
    pub fn new(selection: [usize; 4]) -> Result<Self> {
        for (slot, &j) in selection.iter().enumerate() {
            let allowed = [slot + 1, slot + 5, slot + 9, slot + 13];
            if !allowed.contains(&j) {
                return Err(Error::BadSelection { slot: slot + 1, value: j, allowed });
            }
        }
        Ok(DeterministicInstance { selection })
    }

    /// All 256 instances, lexicographic in (j₁, j₂, j₃, j₄).
    pub fn all() -> impl Iterator<Item = DeterministicInstance> {
        (0..256usize).map(|n| {
            let blocks = [n / 64, (n / 16) % 4, (n / 4) % 4, n % 4];
            DeterministicInstance { selection: std::array::from_fn(|k| 4 * blocks[k] + k + 1) }
        })
    }

    pub fn selection(&self) -> [usize; 4] {
        self.selection
    }

    /// Outcome pair produced at setting index `setting`.
    pub fn outcomes(&self, setting: usize) -> (Spin, Spin) {
        let block = (self.selection[setting] - 1) / 4;
        (Spin::from_bit(block / 2), Spin::from_bit(block % 2))
    }

    pub fn gamma<T: Scalar>(&self) -> GenericParams<T> {
        let mut g: [T; 16] = std::array::from_fn(|_| T::zero());
        for &j in &self.selection {
            g[j - 1] = T::one();
        }
        GenericParams::new_unchecked(g)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelInstance<T> {
    Qm(QmAngles),
    BellReal(BellRealParams<T>),
    BellLocal(BellLocalParams<T>),
    Generic(GenericParams<T>),
    Minimal,
    Deterministic(DeterministicInstance),
}

impl<T: Scalar> ModelInstance<T> {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelInstance::Qm(_) => "qm",
            ModelInstance::BellReal(_) => "bellreal",
            ModelInstance::BellLocal(_) => "belllocal",
            ModelInstance::Generic(_) => "generic",
            ModelInstance::Minimal => "minimal",
            ModelInstance::Deterministic(_) => "deterministic",
        }
    }

    pub fn to_generic(&self) -> GenericParams<T> {
        match self {
            ModelInstance::Qm(angles) => qm_gamma(angles),
            ModelInstance::BellReal(p) => bell_real_gamma(p),
            ModelInstance::BellLocal(p) => bell_local_gamma(p),
            ModelInstance::Generic(g) => g.clone(),
            ModelInstance::Minimal => GenericParams::minimal(),
            ModelInstance::Deterministic(d) => d.gamma(),
        }
    }
}

/// γ of a QM instance: ½cos²θ_k on the (-,-) and (+,+) blocks, ½sin²θ_k on the
/// mixed blocks. The sine term is computed as ½ − ½cos²θ_k so that every
/// setting column sums to exactly one, including for rational scalars.
pub fn qm_gamma<T: Scalar>(angles: &QmAngles) -> GenericParams<T> {
    let half = T::ratio(1, 2);
    let mut g: [T; 16] = std::array::from_fn(|_| T::zero());
    for setting in 0..4 {
        let c = angles.theta(setting + 1).cos();
        let same = half.clone() * T::from_f64(c * c);
        let diff = half.clone() - same.clone();
        g[setting] = same.clone();
        g[4 + setting] = diff.clone();
        g[8 + setting] = diff;
        g[12 + setting] = same;
    }
    GenericParams::new_unchecked(g)
}

pub fn bell_real_gamma<T: Scalar>(p: &BellRealParams<T>) -> GenericParams<T> {
    let rho = p.as_array();
    GenericParams::new_unchecked(std::array::from_fn(|k| {
        REALITY_ROWS[k].iter().fold(T::zero(), |acc, &col| acc + rho[col - 1].clone())
    }))
}

pub fn bell_local_gamma<T: Scalar>(p: &BellLocalParams<T>) -> GenericParams<T> {
    GenericParams::new_unchecked(std::array::from_fn(|k| {
        let (s, t, u, v) = gamma_assignment(k);
        p.alice(s, u).clone() * p.bob(t, v).clone()
    }))
}

/// Conditional expectations E[AB | setting] = (w, x, y, z).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationVector<T> {
    c: [T; 4],
}

impl<T: Scalar> CorrelationVector<T> {
    pub fn new(c: [T; 4]) -> Result<Self> {
        let one = T::one();
        for (i, v) in c.iter().enumerate() {
            if !T::EXACT && !v.to_f64().is_finite() {
                return Err(Error::NonFinite("correlation"));
            }
            if (v.abs() - one.clone()).sign_tol(SUM_TOL) == std::cmp::Ordering::Greater {
                return Err(Error::OutOfRange { what: "correlation", index: i + 1, value: v.to_f64() });
            }
        }
        Ok(CorrelationVector { c })
    }

    pub(crate) fn new_unchecked(c: [T; 4]) -> Self {
        CorrelationVector { c }
    }

    pub fn as_array(&self) -> &[T; 4] {
        &self.c
    }

    pub fn w(&self) -> &T {
        &self.c[0]
    }
    pub fn x(&self) -> &T {
        &self.c[1]
    }
    pub fn y(&self) -> &T {
        &self.c[2]
    }
    pub fn z(&self) -> &T {
        &self.c[3]
    }

    pub fn to_f64(&self) -> [f64; 4] {
        std::array::from_fn(|k| self.c[k].to_f64())
    }
}

/// The four CHSH combinations s = S·c.
#[derive(Debug, Clone, PartialEq)]
pub struct SVector<T> {
    s: [T; 4],
}

impl<T: Scalar> SVector<T> {
    pub fn as_array(&self) -> &[T; 4] {
        &self.s
    }

    pub fn get(&self, k: usize) -> &T {
        &self.s[k - 1]
    }

    /// max_k |s_k|.
    pub fn max_abs(&self) -> T {
        self.s.iter().map(Scalar::abs).fold(T::zero(), Scalar::max)
    }

    pub fn to_f64(&self) -> [f64; 4] {
        std::array::from_fn(|k| self.s[k].to_f64())
    }
}

pub fn correlations<T: Scalar>(gamma: &GenericParams<T>) -> CorrelationVector<T> {
    let g = gamma.as_array();
    CorrelationVector::new_unchecked(std::array::from_fn(|j| {
        g[j].clone() - g[4 + j].clone() - g[8 + j].clone() + g[12 + j].clone()
    }))
}

pub fn s_functions<T: Scalar>(c: &CorrelationVector<T>) -> SVector<T> {
    let c = c.as_array();
    SVector {
        s: std::array::from_fn(|k| {
            (0..4).fold(T::zero(), |acc, j| acc + T::from_i64(S_MATRIX[k][j]) * c[j].clone())
        }),
    }
}

/// Index (1-based) and value of the first s-function with |s_k| > 2 + tol.
pub fn first_chsh_violation<T: Scalar>(c: &CorrelationVector<T>, tol: f64) -> Option<(usize, T)> {
    let two = T::from_i64(2);
    s_functions(c)
        .s
        .into_iter()
        .enumerate()
        .find(|(_, s)| (s.abs() - two.clone()).sign_tol(tol) == std::cmp::Ordering::Greater)
        .map(|(k, s)| (k + 1, s))
}

pub fn chsh_satisfied<T: Scalar>(c: &CorrelationVector<T>, tol: f64) -> bool {
    first_chsh_violation(c, tol).is_none()
}

/// 1-based indices k with |s_k| > 2√2 + tol.
pub fn tsirelson_report<T: Scalar>(c: &CorrelationVector<T>, tol: f64) -> Vec<usize> {
    let bound = 2.0 * SQRT_2 + tol;
    s_functions(c)
        .to_f64()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.abs() > bound)
        .map(|(k, _)| k + 1)
        .collect()
}

/// Joint pmf over the 16 operational cells (A, B, D_A, D_B), indexed like γ.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf<T> {
    p: [T; 16],
}

impl<T: Scalar> JointPmf<T> {
    pub fn as_array(&self) -> &[T; 16] {
        &self.p
    }

    pub fn get(&self, s: Spin, t: Spin, u: Spin, v: Spin) -> &T {
        &self.p[gamma_index(s, t, u, v)]
    }

    pub(crate) fn from_cells(p: [T; 16]) -> Self {
        JointPmf { p }
    }

    /// Marginal P(D_A=u, D_B=v) indexed by setting.
    pub fn setting_marginal(&self) -> [T; 4] {
        std::array::from_fn(|setting| {
            (0..4).fold(T::zero(), |acc, b| acc + self.p[4 * b + setting].clone())
        })
    }
}

pub fn joint_pmf<T: Scalar>(gamma: &GenericParams<T>, delta: &DetectorProbs<T>) -> JointPmf<T> {
    let g = gamma.as_array();
    let d = delta.as_array();
    JointPmf { p: std::array::from_fn(|k| g[k].clone() * d[k % 4].clone()) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn rho_e3_e5() -> BellRealParams<Rational> {
        let mut rho: [Rational; 16] = std::array::from_fn(|_| q(0, 1));
        rho[2] = q(1, 2);
        rho[4] = q(1, 2);
        BellRealParams::new(rho).unwrap()
    }

    #[test]
    fn index_roundtrip() {
        for k in 0..16 {
            let (s, t, u, v) = gamma_assignment(k);
            assert_eq!(gamma_index(s, t, u, v), k);
        }
        assert_eq!(gamma_index(Spin::Plus, Spin::Minus, Spin::Minus, Spin::Plus), 9);
    }

    #[test]
    fn bell_real_example_gamma_and_correlations() {
        let g = ModelInstance::BellReal(rho_e3_e5()).to_generic();
        let expected = [1, 2, 0, 1, 1, 0, 1, 0, 0, 0, 1, 1, 0, 0, 0, 0].map(|n| q(n, 2));
        assert_eq!(g.as_array(), &expected);
        assert_eq!(correlations(&g).as_array(), &[0, 1, -1, 0].map(|n| q(n, 1)));
    }

    #[test]
    fn qm_zero_angles() {
        let g: GenericParams<Rational> = ModelInstance::Qm(QmAngles::from_degrees(0.0, 0.0, 0.0).unwrap()).to_generic();
        let h = q(1, 2);
        let z = q(0, 1);
        let mut expected: [Rational; 16] = std::array::from_fn(|_| z.clone());
        for k in [0, 1, 2, 3, 12, 13, 14, 15] {
            expected[k] = h.clone();
        }
        assert_eq!(g.as_array(), &expected);
    }

    #[test]
    fn qm_columns_sum_exactly() {
        let a = QmAngles::from_degrees(67.5, 22.5, 22.5).unwrap();
        let g: GenericParams<Rational> = qm_gamma(&a);
        assert!(GenericParams::new(g.into_array()).is_ok());
    }

    #[test]
    fn s_function_examples() {
        let s = s_functions(&CorrelationVector::new([1.0; 4]).unwrap());
        assert_eq!(s.as_array(), &[2.0; 4]);
        let r = 1.0 / SQRT_2;
        let s = s_functions(&CorrelationVector::new([-r, r, r, r]).unwrap()).to_f64();
        assert!((s[0] - 2.0 * SQRT_2).abs() < 1e-12);
        assert!(s[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn chsh_and_tsirelson_examples() {
        let c = |a: [f64; 4]| CorrelationVector::new(a).unwrap();
        assert!(chsh_satisfied(&c([1.0; 4]), 0.0));
        assert!(!chsh_satisfied(&c([-1.0, 1.0, 1.0, 1.0]), 1e-9));
        assert!(chsh_satisfied(&c([0.0; 4]), 0.0));
        let r = 1.0 / SQRT_2;
        assert!(tsirelson_report(&c([-r, r, r, r]), 1e-9).is_empty());
        assert_eq!(tsirelson_report(&c([-1.0, 1.0, 1.0, 1.0]), 1e-9), vec![1]);
        assert_eq!(tsirelson_report(&c([0.0, 1.0, 1.0, 1.0]), 1e-9), vec![1]);
    }

    #[test]
    fn joint_pmf_examples() {
        let j = joint_pmf(&GenericParams::<Rational>::minimal(), &DetectorProbs::uniform());
        assert!(j.as_array().iter().all(|p| *p == q(1, 16)));
        let g = ModelInstance::BellReal(rho_e3_e5()).to_generic();
        let j = joint_pmf(&g, &DetectorProbs::uniform());
        assert_eq!(*j.get(Spin::Minus, Spin::Minus, Spin::Minus, Spin::Plus), q(1, 4));
        let delta = DetectorProbs::new([q(7, 10), q(1, 10), q(1, 10), q(1, 10)]).unwrap();
        assert_eq!(joint_pmf(&g, &delta).setting_marginal(), *delta.as_array());
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        let mut g = [0.25; 16];
        g[0] = 0.3;
        assert!(matches!(GenericParams::new(g), Err(Error::BadColumn { setting: 1, .. })));
        g[0] = -1e-16;
        g[4] = 0.25 + 0.25 + 1e-16;
        assert!(GenericParams::new(g).is_ok());
        assert!(DetectorProbs::new([0.0, 0.5, 0.25, 0.25]).is_err());
        assert!(BellLocalParams::new([0.5, 0.5, 0.4, 0.5], [0.5; 4]).is_err());
        assert!(DeterministicInstance::new([1, 2, 3, 5]).is_err());
        assert!(QmAngles::from_degrees_checked(180.0, 0.0, 90.0, 90.0).is_ok());
        assert!(QmAngles::from_degrees_checked(10.0, 0.0, 0.0, 0.0).is_err());
        assert!(CorrelationVector::new([1.5, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn deterministic_enumeration_order() {
        let all: Vec<_> = DeterministicInstance::all().collect();
        assert_eq!(all.len(), 256);
        assert_eq!(all[0].selection(), [1, 2, 3, 4]);
        assert_eq!(all[1].selection(), [1, 2, 3, 8]);
        assert_eq!(all[255].selection(), [13, 14, 15, 16]);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }
}
