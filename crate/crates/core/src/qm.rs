//! QM-specific analysis: the s̄ functions and their extrema, recognising QM
//! instances from γ, and deciding which model types achieve a correlation vector.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use thiserror::Error;

use crate::fine::fine_construct;
use crate::locality::check_fc;
use crate::model::{
    bell_local_gamma, correlations, qm_gamma, BellLocalParams, CorrelationVector, DetectorProbs, GenericParams,
    QmAngles, Spin, S_MATRIX,
};
use crate::scalar::Scalar;

/// Agreement required between a witness and the correlations it should reproduce.
pub const WITNESS_TOL: f64 = 1e-9;
/// |wz − xy| threshold for the rank-one test.
pub const DETERMINANT_TOL: f64 = 1e-12;

const GRAD_STOP: f64 = 1e-8;
const MAX_ITERATIONS: usize = 200;
const FD_STEP: f64 = 1e-6;

fn s_row(k: usize) -> [f64; 4] {
    assert!((1..=4).contains(&k), "s-function index {k} out of range 1..=4");
    S_MATRIX[k - 1].map(|v| v as f64)
}

/// s̄_k(θ₂, θ₃, θ₄) with angles in radians.
pub fn sbar(k: usize, theta: [f64; 3]) -> f64 {
    let s = s_row(k);
    let t1: f64 = theta.iter().sum();
    s[0] * (2.0 * t1).cos() + (0..3).map(|i| s[i + 1] * (2.0 * theta[i]).cos()).sum::<f64>()
}

pub fn sbar_gradient(k: usize, theta: [f64; 3]) -> [f64; 3] {
    let s = s_row(k);
    let common = -2.0 * s[0] * (2.0 * theta.iter().sum::<f64>()).sin();
    std::array::from_fn(|i| common - 2.0 * s[i + 1] * (2.0 * theta[i]).sin())
}

pub fn sbar_hessian(k: usize, theta: [f64; 3]) -> [[f64; 3]; 3] {
    let s = s_row(k);
    let common = -4.0 * s[0] * (2.0 * theta.iter().sum::<f64>()).cos();
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            if i == j {
                common - 4.0 * s[i + 1] * (2.0 * theta[i]).cos()
            } else {
                common
            }
        })
    })
}

/// Central finite-difference gradient of s̄_k.
pub fn sbar_fd_gradient(k: usize, theta: [f64; 3], step: f64) -> [f64; 3] {
    std::array::from_fn(|i| {
        let mut hi = theta;
        let mut lo = theta;
        hi[i] += step;
        lo[i] -= step;
        (sbar(k, hi) - sbar(k, lo)) / (2.0 * step)
    })
}

fn norm(v: [f64; 3]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Maps an angle in degrees into (−90, 90].
fn normalize_degrees(d: f64) -> f64 {
    let r = d.rem_euclid(180.0);
    if r > 90.0 {
        r - 180.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremum {
    /// (θ₂, θ₃, θ₄) in degrees, each in (−90, 90].
    pub angles_deg: [f64; 3],
    pub value: f64,
    pub gradient_norm: f64,
    /// Largest |analytic − finite-difference| gradient component at the point.
    pub fd_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremumResult {
    pub k: usize,
    pub max: Extremum,
    pub min: Extremum,
    /// Every distinct converged maximiser found by the multi-start search.
    pub argmax_set: Vec<[f64; 3]>,
    pub argmin_set: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Copy)]
enum Direction {
    Max,
    Min,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Max => 1.0,
            Direction::Min => -1.0,
        }
    }
}

/// Newton iteration on ±s̄_k with a backtracking gradient step whenever the
/// Newton step fails to improve the objective.
fn refine(k: usize, start: [f64; 3], dir: Direction) -> [f64; 3] {
    let sg = dir.sign();
    let f = |t: [f64; 3]| sg * sbar(k, t);
    let mut x = start;
    for _ in 0..MAX_ITERATIONS {
        let g = sbar_gradient(k, x).map(|v| sg * v);
        if norm(g) < GRAD_STOP {
            break;
        }
        let h = sbar_hessian(k, x);
        let hm = Matrix3::from_fn(|i, j| sg * h[i][j]);
        let gv = Vector3::new(g[0], g[1], g[2]);
        let newton = hm.lu().solve(&(-gv)).map(|d| [x[0] + d[0], x[1] + d[1], x[2] + d[2]]);
        let fx = f(x);
        match newton {
            Some(next) if f(next) >= fx - 1e-15 => x = next,
            _ => {
                let mut step = 0.25;
                let mut next = x;
                while step > 1e-12 {
                    next = std::array::from_fn(|i| x[i] + step * g[i]);
                    if f(next) > fx {
                        break;
                    }
                    step *= 0.5;
                }
                x = next;
            }
        }
    }
    x
}

fn extremum_at(k: usize, theta: [f64; 3]) -> Extremum {
    let g = sbar_gradient(k, theta);
    let fd = sbar_fd_gradient(k, theta, FD_STEP);
    Extremum {
        angles_deg: theta.map(|t| normalize_degrees(t.to_degrees())),
        value: sbar(k, theta),
        gradient_norm: norm(g),
        fd_deviation: (0..3).map(|i| (g[i] - fd[i]).abs()).fold(0.0, f64::max),
    }
}

fn mesh(step_deg: f64) -> Vec<f64> {
    let n = (180.0 / step_deg).round() as usize;
    (0..=n).map(|i| (-90.0 + i as f64 * step_deg).to_radians()).collect()
}

/// Global extrema of s̄_k: a 5° grid seeds the best starting points, a fixed
/// number of seeded random starts is added, and each start is refined locally.
pub fn extremize_sbar(k: usize, seed: u64) -> ExtremumResult {
    const GRID_STARTS: usize = 8;
    const RANDOM_STARTS: usize = 16;
    let axis = mesh(5.0);
    let mut grid = Vec::with_capacity(axis.len().pow(3));
    for &a in &axis {
        for &b in &axis {
            for &c in &axis {
                grid.push(([a, b, c], sbar(k, [a, b, c])));
            }
        }
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let random: Vec<[f64; 3]> = (0..RANDOM_STARTS)
        .map(|_| std::array::from_fn(|_| rng.gen_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2)))
        .collect();

    let search = |dir: Direction| {
        let sg = dir.sign();
        let mut ranked = grid.clone();
        ranked.sort_by(|a, b| (sg * b.1).total_cmp(&(sg * a.1)));
        let starts = ranked.iter().take(GRID_STARTS).map(|p| p.0).chain(random.iter().copied());
        let found: Vec<Extremum> = starts.map(|s| extremum_at(k, refine(k, s, dir))).collect();
        let best = found
            .iter()
            .copied()
            .max_by(|a, b| (sg * a.value).total_cmp(&(sg * b.value)))
            .expect("at least one start");
        let mut set: Vec<[f64; 3]> = Vec::new();
        for e in &found {
            if (e.value - best.value).abs() < 1e-9
                && !set.iter().any(|s| (0..3).all(|i| (s[i] - e.angles_deg[i]).abs() < 1e-5))
            {
                set.push(e.angles_deg);
            }
        }
        set.sort_by(|a, b| a.partial_cmp(b).expect("finite angles"));
        (best, set)
    };
    let (max, argmax_set) = search(Direction::Max);
    let (min, argmin_set) = search(Direction::Min);
    ExtremumResult { k, max, min, argmax_set, argmin_set }
}

/// Largest |s̄_k| over a uniform mesh of [−90°, 90°]³.
pub fn grid_bound(k: usize, step_deg: f64) -> f64 {
    let axis = mesh(step_deg);
    let mut worst: f64 = 0.0;
    for &a in &axis {
        for &b in &axis {
            for &c in &axis {
                worst = worst.max(sbar(k, [a, b, c]).abs());
            }
        }
    }
    worst
}

/// Why a γ is not a QM instance.
#[derive(Debug, Clone, PartialEq, Error, Serialize)]
pub enum NotQm {
    #[error("correlations {correlations:?} are not (cos2θ1, cos2θ2, cos2θ3, cos2θ4) with θ1 = θ2 + θ3 + θ4")]
    Correlations { correlations: [f64; 4] },
    #[error("{party}'s P(outcome={outcome} | setting={setting}) = {value} under delta {delta:?}, expected 1/2")]
    OneSided {
        party: &'static str,
        outcome: i64,
        setting: i64,
        value: f64,
        delta: [f64; 4],
    },
    #[error("gamma rebuilt from the recovered angles deviates by {deviation}")]
    Reconstruction { deviation: f64 },
}

fn one_sided_check<T: Scalar>(gamma: &GenericParams<T>, delta: &DetectorProbs<T>, tol: f64) -> Result<(), NotQm> {
    let half = T::ratio(1, 2);
    for x in Spin::BOTH {
        for setting in Spin::BOTH {
            // Alice: P(A=x | D_A=setting); Bob: P(B=x | D_B=setting).
            for party in ["alice", "bob"] {
                let mut num = T::zero();
                let mut den = T::zero();
                for other_setting in Spin::BOTH {
                    let (u, v) = if party == "alice" { (setting, other_setting) } else { (other_setting, setting) };
                    let d = delta.get(u, v).clone();
                    den = den + d.clone();
                    for other in Spin::BOTH {
                        let (s, t) = if party == "alice" { (x, other) } else { (other, x) };
                        num = num + gamma.get(s, t, u, v).clone() * d.clone();
                    }
                }
                let p = num / den;
                if !p.near(&half, tol) {
                    return Err(NotQm::OneSided {
                        party,
                        outcome: x.value(),
                        setting: setting.value(),
                        value: p.to_f64(),
                        delta: delta.as_array().clone().map(|d| d.to_f64()),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Recovers QM angles from γ, or reports the first failed requirement:
/// QM-shaped correlations first, then one-sided conditionals of ½ under both
/// uniform and skewed δ, then agreement of the rebuilt γ within 1e-9.
pub fn qm_characterize<T: Scalar>(gamma: &GenericParams<T>, tol: f64) -> Result<QmAngles, NotQm> {
    let c = correlations(gamma).to_f64();
    let angles = is_qm_achievable(c).ok_or(NotQm::Correlations { correlations: c })?;
    one_sided_check(gamma, &DetectorProbs::uniform(), tol)?;
    one_sided_check(gamma, &crate::locality::skewed_delta(), tol)?;
    let rebuilt = qm_gamma::<f64>(&angles);
    let deviation = gamma
        .to_f64()
        .as_array()
        .iter()
        .zip(rebuilt.as_array())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if deviation > WITNESS_TOL {
        return Err(NotQm::Reconstruction { deviation });
    }
    Ok(angles)
}

/// Searches the eight sign branches θ_i = ±½·arccos(p_i) for (x, y, z) and
/// keeps the one whose cos2(θ₂+θ₃+θ₄) is closest to w. cos2θ has period π,
/// so these branches cover every solution.
pub fn is_qm_achievable(p: [f64; 4]) -> Option<QmAngles> {
    if p.iter().any(|v| !v.is_finite() || v.abs() > 1.0 + 1e-12) {
        return None;
    }
    let half_acos: [f64; 3] = std::array::from_fn(|i| 0.5 * p[i + 1].clamp(-1.0, 1.0).acos());
    let mut best: Option<([f64; 3], f64)> = None;
    for mask in 0..8 {
        let theta: [f64; 3] = std::array::from_fn(|i| if mask >> (2 - i) & 1 == 1 { -half_acos[i] } else { half_acos[i] });
        let miss = ((2.0 * theta.iter().sum::<f64>()).cos() - p[0]).abs();
        if best.map_or(true, |(_, m)| miss < m) {
            best = Some((theta, miss));
        }
    }
    best.filter(|&(_, miss)| miss <= WITNESS_TOL)
        .and_then(|(t, _)| QmAngles::from_radians(t[0], t[1], t[2]).ok())
}

/// Bell-local achievability as the rank-one test on [[w, x], [y, z]].
///
/// A witness factors the matrix as u·vᵀ with u = (α₁−α₃, α₂−α₄) and
/// v = (β₁−β₃, β₂−β₄). Dividing by the largest-magnitude entry m and
/// rescaling both factors by √|m| keeps every component inside [−1, 1].
pub fn is_bell_local_achievable(p: [f64; 4]) -> Option<BellLocalParams<f64>> {
    if p.iter().any(|v| !v.is_finite() || v.abs() > 1.0 + 1e-12) {
        return None;
    }
    let [w, x, y, z] = p;
    if (w * z - x * y).abs() > DETERMINANT_TOL {
        return None;
    }
    let m = [[w, x], [y, z]];
    let (i, j) = (0..4)
        .map(|n| (n / 2, n % 2))
        .max_by(|&(a, b), &(c, d)| m[a][b].abs().total_cmp(&m[c][d].abs()))
        .expect("four entries");
    let pivot = m[i][j];
    let (u, v) = if pivot == 0.0 {
        ([0.0; 2], [0.0; 2])
    } else {
        let scale = pivot.abs().sqrt();
        (
            [m[0][j] / scale, m[1][j] / scale],
            [m[i][0] / pivot * scale, m[i][1] / pivot * scale],
        )
    };
    let u = u.map(|c| c.clamp(-1.0, 1.0));
    let v = v.map(|c| c.clamp(-1.0, 1.0));
    let params = BellLocalParams::from_minus_probs(
        (1.0 + u[0]) / 2.0,
        (1.0 + u[1]) / 2.0,
        (1.0 + v[0]) / 2.0,
        (1.0 + v[1]) / 2.0,
    )
    .ok()?;
    let back = correlations(&bell_local_gamma(&params)).to_f64();
    back.iter().zip(&p).all(|(a, b)| (a - b).abs() <= WITNESS_TOL).then_some(params)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BellLocalWitness {
    pub alpha: [f64; 4],
    pub beta: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AchievabilityVerdict {
    pub p: [f64; 4],
    pub qm: bool,
    pub bell_real: bool,
    pub bell_local: bool,
    /// (θ₁, θ₂, θ₃, θ₄) in degrees.
    pub qm_witness: Option<[f64; 4]>,
    /// Hidden-quadruple pmf ρ.
    pub bell_real_witness: Option<[f64; 16]>,
    pub bell_local_witness: Option<BellLocalWitness>,
}

pub fn achievability(p: [f64; 4]) -> AchievabilityVerdict {
    let qm = is_qm_achievable(p);
    let br = CorrelationVector::new(p).ok().and_then(|c| fine_construct(&c).ok()).filter(|r| {
        let back = correlations(&r.gamma).to_f64();
        back.iter().zip(&p).all(|(a, b)| (a - b).abs() <= WITNESS_TOL)
    });
    let bl = is_bell_local_achievable(p);
    AchievabilityVerdict {
        p,
        qm: qm.is_some(),
        bell_real: br.is_some(),
        bell_local: bl.is_some(),
        qm_witness: qm.map(|a| a.all_degrees()),
        bell_real_witness: br.map(|r| *r.rho.as_array()),
        bell_local_witness: bl.map(|b| BellLocalWitness { alpha: *b.alpha(), beta: *b.beta() }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthRow {
    /// 1-based row number.
    pub row: usize,
    pub qm: bool,
    pub bell_real: bool,
    pub bell_local: bool,
    /// False for the rows with Bell-local but not Bell-real, which cannot occur.
    pub realizable: bool,
    pub examples: Vec<AchievabilityVerdict>,
}

/// The eight (QM, Bell real, Bell local) combinations, each with example
/// correlation vectors and their computed verdicts.
pub fn equivalence_truth_table() -> Vec<TruthRow> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let third = 1.0 / 3.0;
    let examples: [Vec<[f64; 4]>; 8] = [
        vec![[0.0, 0.0, 0.0, 0.0], [-1.0, 1.0, -1.0, 1.0]],
        vec![[0.0, 1.0, -1.0, 0.0]],
        vec![],
        vec![[-r, r, r, r]],
        vec![[0.0, 0.0, 0.0, 1.0]],
        vec![[-1.0, -third, -third, third]],
        vec![],
        vec![[0.0, 1.0, -1.0, -1.0]],
    ];
    examples
        .into_iter()
        .enumerate()
        .map(|(i, ps)| {
            let (qm, bell_real, bell_local) = (i < 4, i % 4 < 2, i % 2 == 0);
            TruthRow {
                row: i + 1,
                qm,
                bell_real,
                bell_local,
                realizable: bell_real || !bell_local,
                examples: ps.into_iter().map(achievability).collect(),
            }
        })
        .collect()
}

/// Number of assignments at which the QM instance violates the factorization
/// condition under uniform δ.
pub fn qm_fc_failure_report(angles: &QmAngles, tol: f64) -> usize {
    check_fc(&qm_gamma::<f64>(angles), &DetectorProbs::uniform(), tol).failures
}
