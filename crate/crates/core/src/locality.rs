//! Conditional probabilities over the operational joint pmf and the four
//! locality conditions: factorization (FC), remote context independence
//! (RCI), remote outcome independence (ROI) and local causality (LC).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{gamma_index, joint_pmf, setting_index, DetectorProbs, GenericParams, JointPmf, Spin};
use crate::scalar::Scalar;

/// Absolute tolerance on conditional-probability identities for float inputs.
pub const IDENTITY_TOL: f64 = 1e-9;
/// Float probabilities at or below this magnitude count as zero.
pub const ZERO_TOL: f64 = 1e-12;

/// Outcome of a locality test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Flag {
    Holds,
    Fails,
    Undefined,
}

/// One value of (A, B, D_A, D_B) = (s, t, u, v).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    pub s: Spin,
    pub t: Spin,
    pub u: Spin,
    pub v: Spin,
}

impl Assignment {
    /// All 16 assignments in lexicographic (s, t, u, v) order, −1 first.
    pub fn all() -> impl Iterator<Item = Assignment> {
        (0..16).map(|n| Assignment {
            s: Spin::from_bit((n >> 3) & 1),
            t: Spin::from_bit((n >> 2) & 1),
            u: Spin::from_bit((n >> 1) & 1),
            v: Spin::from_bit(n & 1),
        })
    }

    pub fn values(&self) -> [i64; 4] {
        [self.s.value(), self.t.value(), self.u.value(), self.v.value()]
    }
}

impl Serialize for Assignment {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.values().serialize(serializer)
    }
}

/// A partial assignment to (A, B, D_A, D_B).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Event {
    pub a: Option<Spin>,
    pub b: Option<Spin>,
    pub da: Option<Spin>,
    pub db: Option<Spin>,
}

impl Event {
    fn contains(&self, s: Spin, t: Spin, u: Spin, v: Spin) -> bool {
        self.a.map_or(true, |x| x == s)
            && self.b.map_or(true, |x| x == t)
            && self.da.map_or(true, |x| x == u)
            && self.db.map_or(true, |x| x == v)
    }
}

/// P(target | given) with `target` over outcomes only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConditionalQuery {
    target: Event,
    given: Event,
}

impl ConditionalQuery {
    pub fn new(target: Event, given: Event) -> Result<Self> {
        if target.da.is_some() || target.db.is_some() {
            return Err(Error::InvalidQuery("target may only fix A and B"));
        }
        if target.a.is_none() && target.b.is_none() {
            return Err(Error::InvalidQuery("target fixes no variable"));
        }
        if (target.a.is_some() && given.a.is_some()) || (target.b.is_some() && given.b.is_some()) {
            return Err(Error::InvalidQuery("target and given share a variable"));
        }
        Ok(ConditionalQuery { target, given })
    }
}

fn event_probability<T: Scalar>(joint: &JointPmf<T>, e: &Event) -> T {
    let mut total = T::zero();
    for a in Assignment::all() {
        if e.contains(a.s, a.t, a.u, a.v) {
            total = total + joint.get(a.s, a.t, a.u, a.v).clone();
        }
    }
    total
}

/// P(target | given), or `None` when P(given) is zero.
pub fn conditional<T: Scalar>(joint: &JointPmf<T>, q: &ConditionalQuery) -> Option<T> {
    let denom = event_probability(joint, &q.given);
    if denom.is_zero_tol(ZERO_TOL) {
        return None;
    }
    let both = Event {
        a: q.target.a.or(q.given.a),
        b: q.target.b.or(q.given.b),
        da: q.given.da,
        db: q.given.db,
    };
    Some(event_probability(joint, &both) / denom)
}

/// Marginals of a joint pmf needed by every locality test.
struct Marginals<T> {
    joint: JointPmf<T>,
    /// P(u, v) by setting index.
    uv: [T; 4],
    /// P(A=s, u, v) by [s][setting].
    suv: [[T; 4]; 2],
    /// P(B=t, u, v) by [t][setting].
    tuv: [[T; 4]; 2],
    /// P(A=s | u) by [s][u].
    s_given_u: [[T; 2]; 2],
    /// P(B=t | v) by [t][v].
    t_given_v: [[T; 2]; 2],
}

impl<T: Scalar> Marginals<T> {
    fn new(gamma: &GenericParams<T>, delta: &DetectorProbs<T>) -> Self {
        let joint = joint_pmf(gamma, delta);
        let uv = joint.setting_marginal();
        let cell = |s: Spin, t: Spin, setting: usize| joint.as_array()[gamma_index(s, t, Spin::Minus, Spin::Minus) + setting].clone();
        let suv: [[T; 4]; 2] = std::array::from_fn(|sb| {
            let s = Spin::from_bit(sb);
            std::array::from_fn(|k| cell(s, Spin::Minus, k) + cell(s, Spin::Plus, k))
        });
        let tuv: [[T; 4]; 2] = std::array::from_fn(|tb| {
            let t = Spin::from_bit(tb);
            std::array::from_fn(|k| cell(Spin::Minus, t, k) + cell(Spin::Plus, t, k))
        });
        let s_given_u = std::array::from_fn(|sb| {
            std::array::from_fn(|ub| {
                let k0 = 2 * ub;
                let num = suv[sb][k0].clone() + suv[sb][k0 + 1].clone();
                num / (uv[k0].clone() + uv[k0 + 1].clone())
            })
        });
        let t_given_v = std::array::from_fn(|tb| {
            std::array::from_fn(|vb| {
                let num = tuv[tb][vb].clone() + tuv[tb][2 + vb].clone();
                num / (uv[vb].clone() + uv[2 + vb].clone())
            })
        });
        Marginals { joint, uv, suv, tuv, s_given_u, t_given_v }
    }

    fn joint(&self, a: &Assignment) -> T {
        self.joint.get(a.s, a.t, a.u, a.v).clone()
    }

    fn k(a: &Assignment) -> usize {
        setting_index(a.u, a.v)
    }

    fn p_s_u(&self, a: &Assignment) -> T {
        self.s_given_u[a.s.bit()][a.u.bit()].clone()
    }

    fn p_t_v(&self, a: &Assignment) -> T {
        self.t_given_v[a.t.bit()][a.v.bit()].clone()
    }

    fn p_s_uv(&self, a: &Assignment) -> T {
        self.suv[a.s.bit()][Self::k(a)].clone() / self.uv[Self::k(a)].clone()
    }

    fn p_t_uv(&self, a: &Assignment) -> T {
        self.tuv[a.t.bit()][Self::k(a)].clone() / self.uv[Self::k(a)].clone()
    }

    /// True when P(A=s, u, v) or P(B=t, u, v) is zero.
    fn three_way_undefined(&self, a: &Assignment) -> bool {
        self.suv[a.s.bit()][Self::k(a)].is_zero_tol(ZERO_TOL) || self.tuv[a.t.bit()][Self::k(a)].is_zero_tol(ZERO_TOL)
    }

    fn p_s_tuv(&self, a: &Assignment) -> T {
        self.joint(a) / self.tuv[a.t.bit()][Self::k(a)].clone()
    }

    fn p_t_suv(&self, a: &Assignment) -> T {
        self.joint(a) / self.suv[a.s.bit()][Self::k(a)].clone()
    }
}

/// Result of one locality test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConditionReport {
    pub flag: Flag,
    /// First assignment (lexicographic) that violates or undefines the condition.
    pub witness: Option<Assignment>,
    /// Number of assignments at which the condition fails (or is undefined).
    pub failures: usize,
}

fn scan<T: Scalar>(
    m: &Marginals<T>,
    needs_three_way: bool,
    holds_at: impl Fn(&Marginals<T>, &Assignment) -> bool,
) -> ConditionReport {
    if needs_three_way {
        let undefined: Vec<Assignment> = Assignment::all().filter(|a| m.three_way_undefined(a)).collect();
        if let Some(&first) = undefined.first() {
            return ConditionReport { flag: Flag::Undefined, witness: Some(first), failures: undefined.len() };
        }
    }
    let failing: Vec<Assignment> = Assignment::all().filter(|a| !holds_at(m, a)).collect();
    ConditionReport {
        flag: if failing.is_empty() { Flag::Holds } else { Flag::Fails },
        witness: failing.first().copied(),
        failures: failing.len(),
    }
}

fn fc<T: Scalar>(m: &Marginals<T>, tol: f64) -> ConditionReport {
    scan(m, false, |m, a| {
        let lhs = m.joint(a) / m.uv[Marginals::<T>::k(a)].clone();
        lhs.near(&(m.p_s_u(a) * m.p_t_v(a)), tol)
    })
}

fn rci<T: Scalar>(m: &Marginals<T>, tol: f64) -> ConditionReport {
    scan(m, false, |m, a| m.p_s_uv(a).near(&m.p_s_u(a), tol) && m.p_t_uv(a).near(&m.p_t_v(a), tol))
}

fn roi<T: Scalar>(m: &Marginals<T>, tol: f64) -> ConditionReport {
    scan(m, true, |m, a| m.p_s_tuv(a).near(&m.p_s_uv(a), tol) && m.p_t_suv(a).near(&m.p_t_uv(a), tol))
}

fn lc<T: Scalar>(m: &Marginals<T>, tol: f64) -> ConditionReport {
    scan(m, true, |m, a| m.p_s_tuv(a).near(&m.p_s_u(a), tol) && m.p_t_suv(a).near(&m.p_t_v(a), tol))
}

pub fn check_fc<T: Scalar>(gamma: &GenericParams<T>, delta: &DetectorProbs<T>, tol: f64) -> ConditionReport {
    fc(&Marginals::new(gamma, delta), tol)
}

pub fn check_rci<T: Scalar>(gamma: &GenericParams<T>, delta: &DetectorProbs<T>, tol: f64) -> ConditionReport {
    rci(&Marginals::new(gamma, delta), tol)
}

pub fn check_roi<T: Scalar>(gamma: &GenericParams<T>, delta: &DetectorProbs<T>, tol: f64) -> ConditionReport {
    roi(&Marginals::new(gamma, delta), tol)
}

pub fn check_lc<T: Scalar>(gamma: &GenericParams<T>, delta: &DetectorProbs<T>, tol: f64) -> ConditionReport {
    lc(&Marginals::new(gamma, delta), tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LocalityReport {
    pub fc: ConditionReport,
    pub rci: ConditionReport,
    pub roi: ConditionReport,
    pub lc: ConditionReport,
}

pub fn locality_report<T: Scalar>(gamma: &GenericParams<T>, delta: &DetectorProbs<T>, tol: f64) -> LocalityReport {
    let m = Marginals::new(gamma, delta);
    LocalityReport { fc: fc(&m, tol), rci: rci(&m, tol), roi: roi(&m, tol), lc: lc(&m, tol) }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WellDefinedness {
    /// Number of nonzero γ entries.
    pub nonzero: usize,
    /// Whether every denominator of the three-variable conditionals is positive.
    pub eligible: bool,
    /// γ index pairs (1-based) whose sums must be positive but are zero.
    pub zero_pairs: Vec<(usize, usize)>,
}

/// The 16 γ index pairs (1-based) whose sums are the three-variable denominators.
pub fn denominator_pairs() -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(16);
    for setting in 0..4 {
        for x in Spin::BOTH {
            // P(B=x, u, v): sum over A.
            pairs.push((4 * x.bit() + setting + 1, 4 * (2 + x.bit()) + setting + 1));
            // P(A=x, u, v): sum over B.
            pairs.push((4 * (2 * x.bit()) + setting + 1, 4 * (2 * x.bit() + 1) + setting + 1));
        }
    }
    pairs
}

pub fn well_definedness<T: Scalar>(gamma: &GenericParams<T>) -> WellDefinedness {
    let g = gamma.as_array();
    let nonzero = g.iter().filter(|v| !v.is_zero_tol(ZERO_TOL)).count();
    let zero_pairs: Vec<(usize, usize)> = denominator_pairs()
        .into_iter()
        .filter(|&(i, j)| (g[i - 1].clone() + g[j - 1].clone()).is_zero_tol(ZERO_TOL))
        .collect();
    WellDefinedness { nonzero, eligible: zero_pairs.is_empty(), zero_pairs }
}

/// The alternative setting distribution used to probe δ-dependence.
pub fn skewed_delta<T: Scalar>() -> DetectorProbs<T> {
    DetectorProbs::new([T::ratio(7, 10), T::ratio(1, 10), T::ratio(1, 10), T::ratio(1, 10)])
        .expect("skewed delta is a valid distribution")
}

/// Whether P(A=s | D_A=u) or P(B=t | D_B=v) changes between uniform and skewed δ.
pub fn delta_sensitivity<T: Scalar>(gamma: &GenericParams<T>, tol: f64) -> bool {
    let a = Marginals::new(gamma, &DetectorProbs::uniform());
    let b = Marginals::new(gamma, &skewed_delta());
    let differs = |x: &[[T; 2]; 2], y: &[[T; 2]; 2]| {
        x.iter().flatten().zip(y.iter().flatten()).any(|(p, q)| !p.near(q, tol))
    };
    differs(&a.s_given_u, &b.s_given_u) || differs(&a.t_given_v, &b.t_given_v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::model::{DeterministicInstance, ModelInstance, QmAngles};
    use crate::scalar::Rational;

    fn uniform() -> DetectorProbs<Rational> {
        DetectorProbs::uniform()
    }

    #[test]
    fn conditional_examples() {
        let j = joint_pmf(&GenericParams::<Rational>::minimal(), &uniform());
        let q = ConditionalQuery::new(
            Event { a: Some(Spin::Minus), ..Event::default() },
            Event { da: Some(Spin::Minus), db: Some(Spin::Minus), ..Event::default() },
        )
        .unwrap();
        assert_eq!(conditional(&j, &q), Some(Rational::ratio(1, 2)));

        let det = DeterministicInstance::new([5, 2, 3, 4]).unwrap().gamma::<Rational>();
        let j = joint_pmf(&det, &uniform());
        let q = ConditionalQuery::new(
            Event { b: Some(Spin::Plus), ..Event::default() },
            Event { a: Some(Spin::Minus), da: Some(Spin::Minus), db: Some(Spin::Minus), ..Event::default() },
        )
        .unwrap();
        assert_eq!(conditional(&j, &q), Some(Rational::ratio(1, 1)));
        let q = ConditionalQuery::new(
            Event { b: Some(Spin::Plus), ..Event::default() },
            Event { a: Some(Spin::Plus), da: Some(Spin::Minus), db: Some(Spin::Minus), ..Event::default() },
        )
        .unwrap();
        assert_eq!(conditional(&j, &q), None);

        let bad = Event { da: Some(Spin::Plus), ..Event::default() };
        assert!(ConditionalQuery::new(bad, Event::default()).is_err());
    }

    #[test]
    fn qm_one_sided_conditionals_are_half() {
        let g: GenericParams<f64> = ModelInstance::Qm(QmAngles::from_degrees(10.0, 33.0, -70.0).unwrap()).to_generic();
        let j = joint_pmf(&g, &DetectorProbs::uniform());
        for u in Spin::BOTH {
            for v in Spin::BOTH {
                let q = ConditionalQuery::new(
                    Event { a: Some(Spin::Minus), ..Event::default() },
                    Event { da: Some(u), db: Some(v), ..Event::default() },
                )
                .unwrap();
                assert!((conditional(&j, &q).unwrap() - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn qm_tsirelson_instance_fails_fc_everywhere() {
        let g: GenericParams<f64> = catalog::qm_tsirelson_max().to_generic();
        let r = check_fc(&g, &DetectorProbs::uniform(), IDENTITY_TOL);
        assert_eq!((r.flag, r.failures), (Flag::Fails, 16));
    }

    #[test]
    fn minimal_holds_everything() {
        let r = locality_report(&GenericParams::<Rational>::minimal(), &uniform(), 0.0);
        for c in [r.fc, r.rci, r.roi, r.lc] {
            assert_eq!(c.flag, Flag::Holds);
        }
    }

    #[test]
    fn rci_extreme_instance() {
        let g = catalog::rci_chsh_extreme::<Rational>();
        let r = locality_report(&g, &uniform(), 0.0);
        assert_eq!(r.rci.flag, Flag::Holds);
        assert_eq!(r.roi.flag, Flag::Fails);
    }

    #[test]
    fn table_pmfs() {
        let g = ModelInstance::BellReal(catalog::roi_lc_rho::<Rational>()).to_generic();
        let r = locality_report(&g, &uniform(), 0.0);
        assert_eq!([r.fc.flag, r.rci.flag, r.roi.flag, r.lc.flag], [Flag::Holds; 4]);

        let g = ModelInstance::BellReal(catalog::fc_without_lc_rho::<Rational>()).to_generic();
        let r = locality_report(&g, &uniform(), 0.0);
        assert_eq!(r.fc.flag, Flag::Holds);
        assert_eq!(r.roi.flag, Flag::Undefined);
        assert_eq!(r.lc.flag, Flag::Undefined);
        assert!(!well_definedness(&g).eligible);
    }

    #[test]
    fn well_definedness_examples() {
        let w = well_definedness(&GenericParams::<Rational>::minimal());
        assert_eq!((w.nonzero, w.eligible), (16, true));
        for d in DeterministicInstance::all().take(20) {
            let w = well_definedness(&d.gamma::<Rational>());
            assert_eq!((w.nonzero, w.eligible), (4, false));
        }
        let pairs = denominator_pairs();
        assert_eq!(pairs.len(), 16);
        assert!(pairs.contains(&(1, 9)) && pairs.contains(&(1, 5)));
    }

    #[test]
    fn delta_sensitivity_examples() {
        assert!(!delta_sensitivity(&GenericParams::<Rational>::minimal(), 0.0));
        let qm: GenericParams<f64> = catalog::qm_tsirelson_max().to_generic();
        assert!(!delta_sensitivity(&qm, IDENTITY_TOL));
        // A at ab is always −1, at ab' always +1: P(A=−|D_A=−) depends on δ.
        let det = DeterministicInstance::new([1, 14, 3, 4]).unwrap().gamma::<Rational>();
        assert!(delta_sensitivity(&det, 0.0));
        assert_eq!(check_rci(&det, &uniform(), 0.0).flag, Flag::Fails);
    }

    #[test]
    fn roi_family_regimes() {
        let delta = DetectorProbs::<f64>::uniform();
        for (eps, s1) in [(0.4, 0.16), (0.1, 2.56), (0.05, 3.24)] {
            let g = catalog::roi_family(eps).unwrap();
            let s = crate::model::s_functions(&crate::model::correlations(&g)).to_f64();
            assert!((s[0] - s1).abs() < 1e-12, "eps {eps}: s1 {}", s[0]);
            assert_eq!(check_roi(&g, &delta, IDENTITY_TOL).flag, Flag::Holds);
            assert_eq!(check_rci(&g, &delta, IDENTITY_TOL).flag, Flag::Fails);
        }
    }
}
