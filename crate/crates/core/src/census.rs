//! Exhaustive classification of deterministic instances and the outcome /
//! measurement predictability patterns.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use crate::fine::is_instance_bell_real;
use crate::locality::{check_fc, Flag, ZERO_TOL};
use crate::model::{
    chsh_satisfied, correlations, gamma_index, qm_gamma, CorrelationVector, DeterministicInstance, DetectorProbs,
    GenericParams, QmAngles, Spin,
};
use crate::scalar::{Rational, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DetClassification {
    pub instance: DeterministicInstance,
    /// Bell local (factorization holds).
    pub type1: bool,
    /// All eight CHSH inequalities hold.
    pub type2: bool,
    pub type3: bool,
    pub bell_real: bool,
    pub outcome_predictable: bool,
    pub measurement_predictable: bool,
}

fn classify(d: DeterministicInstance) -> DetClassification {
    let g = d.gamma::<Rational>();
    let type1 = check_fc(&g, &DetectorProbs::uniform(), 0.0).flag == Flag::Holds;
    let type2 = chsh_satisfied(&correlations(&g), 0.0);
    DetClassification {
        instance: d,
        type1,
        type2,
        type3: true,
        bell_real: type2 && is_instance_bell_real(&g),
        outcome_predictable: is_outcome_predictable(&g, 0.0),
        measurement_predictable: is_measurement_predictable(&g, 0.0),
    }
}

/// All 256 deterministic instances, in lexicographic selection order.
pub fn enumerate_deterministic() -> Vec<DetClassification> {
    let all: Vec<DeterministicInstance> = DeterministicInstance::all().collect();
    all.into_par_iter().map(classify).collect()
}

/// The distinct correlation vectors of the Bell-local deterministic instances, sorted.
pub fn distinct_type1_correlations() -> Vec<CorrelationVector<Rational>> {
    let set: BTreeSet<[i64; 4]> = enumerate_deterministic()
        .iter()
        .filter(|c| c.type1)
        .map(|c| correlations(&c.instance.gamma::<Rational>()).to_f64().map(|v| v as i64))
        .collect();
    set.into_iter()
        .map(|c| CorrelationVector::new(c.map(Rational::from_i64)).expect("entries are ±1"))
        .collect()
}

/// Whether each Alice (outcome, setting) pair is related to at most one value
/// of Bob's outcome (`bob_setting = false`) or Bob's setting (`true`).
fn support_is_function<T: Scalar>(gamma: &GenericParams<T>, tol: f64, bob_setting: bool) -> bool {
    let support = gamma.support(tol);
    for s in Spin::BOTH {
        for u in Spin::BOTH {
            let mut image = [false; 2];
            for t in Spin::BOTH {
                for v in Spin::BOTH {
                    if support[gamma_index(s, t, u, v)] {
                        image[if bob_setting { v.bit() } else { t.bit() }] = true;
                    }
                }
            }
            if image[0] && image[1] {
                return false;
            }
        }
    }
    true
}

pub fn is_outcome_predictable<T: Scalar>(gamma: &GenericParams<T>, tol: f64) -> bool {
    support_is_function(gamma, tol, false)
}

pub fn is_measurement_predictable<T: Scalar>(gamma: &GenericParams<T>, tol: f64) -> bool {
    support_is_function(gamma, tol, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternKind {
    Outcome,
    Measurement,
}

/// A zero pattern: γ indices forced to zero, the rest free subject to unit column sums.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PredPattern {
    pub kind: PatternKind,
    pub id: usize,
    /// Sorted 1-based γ indices that are zero.
    pub zeros: Vec<usize>,
}

impl PredPattern {
    pub fn matches<T: Scalar>(&self, gamma: &GenericParams<T>, tol: f64) -> bool {
        let support = gamma.support(tol);
        self.zeros.iter().all(|&k| !support[k - 1])
    }

    /// Free (not forced to zero) 1-based indices of each setting column.
    pub fn free_by_column(&self) -> [Vec<usize>; 4] {
        free_by_column(&self.zeros)
    }

    /// Draws the free entries of each column uniformly from the simplex.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Option<GenericParams<f64>> {
        sample_free(&self.free_by_column(), rng)
    }
}

fn free_by_column(zeros: &[usize]) -> [Vec<usize>; 4] {
    std::array::from_fn(|col| (0..4).map(|b| 4 * b + col + 1).filter(|k| !zeros.contains(k)).collect())
}

fn sample_free<R: Rng>(free: &[Vec<usize>; 4], rng: &mut R) -> Option<GenericParams<f64>> {
    let mut g = [0.0; 16];
    for col in free {
        if col.is_empty() {
            return None;
        }
        let draws: Vec<f64> = col.iter().map(|_| Exp1.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        for (&k, d) in col.iter().zip(draws) {
            g[k - 1] = d / total;
        }
    }
    GenericParams::new(g).ok()
}

/// The 16 outcome-predictability patterns. Pattern `id` encodes four binary
/// choices, most significant first, one per Alice (outcome, setting) pair
/// (−,−), (−,+), (+,−), (+,+); a set bit zeroes the B = −1 pair of entries.
pub fn outcome_patterns() -> Vec<PredPattern> {
    const LINES: [([usize; 2], [usize; 2]); 4] = [([1, 2], [5, 6]), ([3, 4], [7, 8]), ([9, 10], [13, 14]), ([11, 12], [15, 16])];
    (0..16)
        .map(|n| {
            let mut zeros: Vec<usize> = LINES
                .iter()
                .enumerate()
                .flat_map(|(line, (b_minus, b_plus))| {
                    if (n >> (3 - line)) & 1 == 1 {
                        *b_minus
                    } else {
                        *b_plus
                    }
                })
                .collect();
            zeros.sort_unstable();
            PredPattern { kind: PatternKind::Outcome, id: n + 1, zeros }
        })
        .collect()
}

/// The 4 measurement-predictability patterns.
pub fn measurement_patterns() -> Vec<PredPattern> {
    let table: [[usize; 8]; 4] = [
        [2, 6, 4, 8, 9, 13, 11, 15],
        [2, 6, 3, 7, 9, 13, 12, 16],
        [1, 5, 4, 8, 10, 14, 11, 15],
        [1, 5, 3, 7, 10, 14, 12, 16],
    ];
    table
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let mut zeros = z.to_vec();
            zeros.sort_unstable();
            PredPattern { kind: PatternKind::Measurement, id: i + 1, zeros }
        })
        .collect()
}

/// Ids of the patterns of `patterns` matched by γ.
pub fn matching_patterns<T: Scalar>(patterns: &[PredPattern], gamma: &GenericParams<T>, tol: f64) -> Vec<usize> {
    patterns.iter().filter(|p| p.matches(gamma, tol)).map(|p| p.id).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TypeCounts {
    pub type3: usize,
    pub type2: usize,
    pub type1: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PredictabilityCensus {
    pub outcome: TypeCounts,
    pub measurement: TypeCounts,
    /// Positions (1-based, in type-1 enumeration order) of the outcome-predictable type-1 instances.
    pub outcome_type1_positions: Vec<usize>,
}

pub fn predictability_census(records: &[DetClassification]) -> PredictabilityCensus {
    let count = |f: &dyn Fn(&DetClassification) -> bool| TypeCounts {
        type3: records.iter().filter(|c| f(c)).count(),
        type2: records.iter().filter(|c| c.type2 && f(c)).count(),
        type1: records.iter().filter(|c| c.type1 && f(c)).count(),
    };
    let outcome_type1_positions = records
        .iter()
        .filter(|c| c.type1)
        .enumerate()
        .filter(|(_, c)| c.outcome_predictable)
        .map(|(i, _)| i + 1)
        .collect();
    PredictabilityCensus {
        outcome: count(&|c| c.outcome_predictable),
        measurement: count(&|c| c.measurement_predictable),
        outcome_type1_positions,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "lowercase")]
pub enum Intersection {
    /// Some setting column has no admissible entry.
    Empty,
    /// Every column has exactly one admissible entry, forced to 1.
    Deterministic { selection: [usize; 4] },
    /// Free entries remain; the implication would be violated.
    Free { free: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntersectionReport {
    pub pairs: Vec<(usize, usize, Intersection)>,
    pub random_supports_tested: usize,
    pub random_counterexamples: usize,
    pub sampled_instances: usize,
}

impl IntersectionReport {
    pub fn implication_holds(&self) -> bool {
        self.random_counterexamples == 0 && self.pairs.iter().all(|(_, _, r)| !matches!(r, Intersection::Free { .. }))
    }
}

pub fn intersect(outcome: &PredPattern, measurement: &PredPattern) -> Intersection {
    let zeros: Vec<usize> = outcome.zeros.iter().chain(&measurement.zeros).copied().collect();
    let free = free_by_column(&zeros);
    if free.iter().any(Vec::is_empty) {
        Intersection::Empty
    } else if free.iter().all(|c| c.len() == 1) {
        Intersection::Deterministic { selection: std::array::from_fn(|c| free[c][0]) }
    } else {
        Intersection::Free { free: free.concat() }
    }
}

/// Checks that every γ both outcome and measurement predictable is deterministic:
/// exhaustively over the 16×4 pattern pairs, then on `random_supports` random
/// supports with uniform weights, sampling `samples_per_pair` instances per
/// nonempty pair.
pub fn outcome_and_measurement_implies_deterministic(
    random_supports: usize,
    samples_per_pair: usize,
    seed: u64,
) -> IntersectionReport {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    let mut sampled = 0;
    let mut counterexamples = 0;
    for o in outcome_patterns() {
        for m in measurement_patterns() {
            let r = intersect(&o, &m);
            if !matches!(r, Intersection::Empty) {
                let zeros: Vec<usize> = o.zeros.iter().chain(&m.zeros).copied().collect();
                for _ in 0..samples_per_pair {
                    if let Some(g) = sample_free(&free_by_column(&zeros), &mut rng) {
                        sampled += 1;
                        let both = is_outcome_predictable(&g, ZERO_TOL) && is_measurement_predictable(&g, ZERO_TOL);
                        if both && !is_deterministic(&g, ZERO_TOL) {
                            counterexamples += 1;
                        }
                    }
                }
            }
            pairs.push((o.id, m.id, r));
        }
    }
    let mut tested = 0;
    for _ in 0..random_supports {
        let mask: u16 = rng.gen();
        let free: [Vec<usize>; 4] =
            std::array::from_fn(|col| (0..4).map(|b| 4 * b + col + 1).filter(|k| mask >> (k - 1) & 1 == 1).collect());
        if free.iter().any(Vec::is_empty) {
            continue;
        }
        let g: [Rational; 16] = std::array::from_fn(|k| {
            let col = &free[k % 4];
            if col.contains(&(k + 1)) {
                Rational::ratio(1, col.len() as i64)
            } else {
                Rational::zero()
            }
        });
        let g = GenericParams::new(g).expect("uniform columns");
        tested += 1;
        if is_outcome_predictable(&g, 0.0) && is_measurement_predictable(&g, 0.0) && !is_deterministic(&g, 0.0) {
            counterexamples += 1;
        }
    }
    IntersectionReport { pairs, random_supports_tested: tested, random_counterexamples: counterexamples, sampled_instances: sampled }
}

/// Every entry is 0 or 1.
pub fn is_deterministic<T: Scalar>(gamma: &GenericParams<T>, tol: f64) -> bool {
    gamma.as_array().iter().all(|v| v.is_zero_tol(tol) || v.near(&T::one(), tol))
}

/// Per-setting state of a QM instance: cos²θ_k = 1, = 0, or strictly between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QmSettingState {
    /// θ_k ≡ 0 (mod 180°): outcomes always equal.
    Same,
    /// θ_k ≡ 90° (mod 180°): outcomes always differ.
    Opposite,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QmPredictableInstance {
    pub states: [QmSettingState; 4],
    pub gamma: Vec<String>,
    pub outcome_pattern: usize,
    /// (θ₁, θ₂, θ₃, θ₄) in degrees.
    pub witness_degrees: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QmOutcomePredictable {
    pub instances: Vec<QmPredictableInstance>,
    /// State combinations with a mixed setting that are outcome predictable (each would be a continuum).
    pub continuum_families: usize,
}

fn state_gamma(states: &[QmSettingState; 4]) -> Option<GenericParams<Rational>> {
    let half = Rational::ratio(1, 2);
    let mut g: [Rational; 16] = std::array::from_fn(|_| Rational::zero());
    for (k, st) in states.iter().enumerate() {
        let (same, diff) = match st {
            QmSettingState::Same => (half.clone(), Rational::zero()),
            QmSettingState::Opposite => (Rational::zero(), half.clone()),
            QmSettingState::Mixed => return None,
        };
        g[k] = same.clone();
        g[12 + k] = same;
        g[4 + k] = diff.clone();
        g[8 + k] = diff;
    }
    Some(GenericParams::new(g).expect("columns sum to one"))
}

/// Whether some θ₂, θ₃, θ₄ realise the given per-setting states with θ₁ = θ₂+θ₃+θ₄.
fn states_realisable(states: &[QmSettingState; 4]) -> bool {
    let rest = &states[1..];
    let mixed = rest.iter().filter(|s| **s == QmSettingState::Mixed).count();
    let opposite = rest.iter().filter(|s| **s == QmSettingState::Opposite).count();
    match mixed {
        0 => {
            let expected = if opposite % 2 == 0 { QmSettingState::Same } else { QmSettingState::Opposite };
            states[0] == expected
        }
        1 => states[0] == QmSettingState::Mixed,
        _ => true,
    }
}

/// Exhaustive search over the 3⁴ per-setting state combinations for QM
/// instances that are outcome predictable.
pub fn qm_outcome_predictable_instances() -> QmOutcomePredictable {
    use QmSettingState::{Mixed, Opposite, Same};
    let options = [Same, Opposite, Mixed];
    let mut instances = Vec::new();
    let mut continuum_families = 0;
    let patterns = outcome_patterns();
    for n in 0..81 {
        let states: [QmSettingState; 4] = std::array::from_fn(|k| options[(n / 3usize.pow(3 - k as u32)) % 3]);
        if !states_realisable(&states) {
            continue;
        }
        match state_gamma(&states) {
            Some(g) => {
                if !is_outcome_predictable(&g, 0.0) {
                    continue;
                }
                let deg = |s: QmSettingState| if s == Opposite { 90.0 } else { 0.0 };
                let (t2, t3, t4) = (deg(states[1]), deg(states[2]), deg(states[3]));
                let ids = matching_patterns(&patterns, &g, 0.0);
                instances.push(QmPredictableInstance {
                    states,
                    gamma: g.as_array().iter().map(crate::scalar::format_rational).collect(),
                    outcome_pattern: ids[0],
                    witness_degrees: [t2 + t3 + t4, t2, t3, t4],
                });
            }
            None => {
                // A mixed setting has all four of its entries positive, so
                // check the support with a representative interior value.
                let probe: [f64; 4] = states.map(|s| match s {
                    Same => 1.0,
                    Opposite => 0.0,
                    Mixed => 0.5,
                });
                let g = GenericParams::new(std::array::from_fn(|k| {
                    let c2 = probe[k % 4];
                    if !(4..12).contains(&k) {
                        0.5 * c2
                    } else {
                        0.5 * (1.0 - c2)
                    }
                }))
                .expect("valid probe");
                if is_outcome_predictable(&g, ZERO_TOL) {
                    continuum_families += 1;
                }
            }
        }
    }
    QmOutcomePredictable { instances, continuum_families }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternContradiction {
    pub pattern: usize,
    /// γ forced by the pattern plus every QM entry being at most ½.
    pub forced_gamma: Vec<String>,
    pub blocks_one_four_equal: bool,
    pub blocks_two_three_equal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoCommunicationReport {
    pub contradictions: Vec<PatternContradiction>,
    pub sweep_points: usize,
    pub sweep_hits: usize,
}

impl NoCommunicationReport {
    pub fn holds(&self) -> bool {
        self.sweep_hits == 0
            && self.contradictions.iter().all(|c| !(c.blocks_one_four_equal && c.blocks_two_three_equal))
    }
}

/// For each measurement pattern, forces the free entries using the QM bound
/// γ ≤ ½ and shows the QM block symmetry breaks; then sweeps random QM angles.
pub fn no_communication_check(sweep_points: usize, seed: u64) -> NoCommunicationReport {
    let half = Rational::ratio(1, 2);
    let contradictions = measurement_patterns()
        .iter()
        .map(|p| {
            let mut g: [Rational; 16] = std::array::from_fn(|_| Rational::zero());
            for col in p.free_by_column() {
                // Two free entries, each at most ½, summing to 1: both equal ½.
                assert_eq!(col.len(), 2, "measurement patterns leave two entries per column");
                for k in col {
                    g[k - 1] = half.clone();
                }
            }
            PatternContradiction {
                pattern: p.id,
                forced_gamma: g.iter().map(crate::scalar::format_rational).collect(),
                blocks_one_four_equal: g[0..4] == g[12..16],
                blocks_two_three_equal: g[4..8] == g[8..12],
            }
        })
        .collect();

    const SHARDS: u64 = 64;
    let per_shard = sweep_points.div_ceil(SHARDS as usize);
    let sweep_hits = (0..SHARDS)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed ^ shard.wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let start = shard as usize * per_shard;
            let n = per_shard.min(sweep_points.saturating_sub(start));
            (0..n)
                .filter(|_| {
                    let t: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-90.0..=90.0));
                    let a = QmAngles::from_degrees(t[0], t[1], t[2]).expect("finite");
                    is_measurement_predictable(&qm_gamma::<f64>(&a), ZERO_TOL)
                })
                .count()
        })
        .sum();
    NoCommunicationReport { contradictions, sweep_points, sweep_hits }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusCounts {
    pub deterministic_type3: usize,
    pub deterministic_type2: usize,
    pub deterministic_type1: usize,
    pub type2_not_type1: usize,
    pub type2_not_bell_real: usize,
    pub distinct_type1_correlations: usize,
    pub outcome_predictable: TypeCounts,
    pub measurement_predictable: TypeCounts,
    pub qm_outcome_predictable: usize,
    pub qm_measurement_predictable: usize,
}

pub fn census_counts(sweep_points: usize, seed: u64) -> CensusCounts {
    let records = enumerate_deterministic();
    let pred = predictability_census(&records);
    let nc = no_communication_check(sweep_points, seed);
    let qm_meas = if nc.holds() { 0 } else { nc.sweep_hits.max(1) };
    CensusCounts {
        deterministic_type3: records.iter().filter(|c| c.type3).count(),
        deterministic_type2: records.iter().filter(|c| c.type2).count(),
        deterministic_type1: records.iter().filter(|c| c.type1).count(),
        type2_not_type1: records.iter().filter(|c| c.type2 && !c.type1).count(),
        type2_not_bell_real: records.iter().filter(|c| c.type2 && !c.bell_real).count(),
        distinct_type1_correlations: distinct_type1_correlations().len(),
        outcome_predictable: pred.outcome,
        measurement_predictable: pred.measurement,
        qm_outcome_predictable: qm_outcome_predictable_instances().instances.len(),
        qm_measurement_predictable: qm_meas,
    }
}
