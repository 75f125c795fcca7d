//! Named model instances used as fixtures, CLI presets and counterexamples.

use crate::error::{Error, Result};
use crate::model::{gamma_index, BellRealParams, GenericParams, ModelInstance, QmAngles, Spin};
use crate::scalar::Scalar;

fn r<T: Scalar>(n: i64, d: i64) -> T {
    T::ratio(n, d)
}

/// QM at θ = (67.5°, 22.5°, 22.5°, 22.5°): s₁ = 2√2.
pub fn qm_tsirelson_max<T: Scalar>() -> ModelInstance<T> {
    ModelInstance::Qm(QmAngles::from_degrees(22.5, 22.5, 22.5).expect("finite angles"))
}

/// QM at θ = (135°, 45°, 45°, 45°), whose γ is the all-¼ minimal instance.
pub fn qm_minimal_angles() -> QmAngles {
    QmAngles::from_degrees(45.0, 45.0, 45.0).expect("finite angles")
}

/// Bell-real pmf with ρ₃ = ρ₅ = ½; its correlations (0, 1, −1, 0) admit no
/// Bell-local realisation.
pub fn bell_real_not_local_rho<T: Scalar>() -> BellRealParams<T> {
    let mut rho: [T; 16] = std::array::from_fn(|_| T::zero());
    rho[2] = r(1, 2);
    rho[4] = r(1, 2);
    BellRealParams::new(rho).expect("valid pmf")
}

/// Deterministic γ with correlations (1, 1, 1, 1) that has no Bell-real preimage.
pub fn chsh_but_not_bell_real<T: Scalar>() -> GenericParams<T> {
    let mut g: [T; 16] = std::array::from_fn(|_| T::zero());
    for k in [0, 1, 2, 15] {
        g[k] = T::one();
    }
    GenericParams::new(g).expect("valid gamma")
}

/// A Bell-real pmf satisfying FC, RCI, ROI and LC with every conditional defined.
pub fn roi_lc_rho<T: Scalar>() -> BellRealParams<T> {
    let v = [
        (5, 162),
        (1, 162),
        (25, 162),
        (5, 162),
        (5, 324),
        (1, 324),
        (25, 324),
        (5, 324),
        (5, 81),
        (1, 81),
        (25, 81),
        (5, 81),
        (5, 162),
        (1, 162),
        (25, 162),
        (5, 162),
    ];
    BellRealParams::new(v.map(|(n, d)| r(n, d))).expect("valid pmf")
}

/// A Bell-real pmf with A₂ = +1 always: FC holds but ROI and LC have undefined conditionals.
pub fn fc_without_lc_rho<T: Scalar>() -> BellRealParams<T> {
    let mut rho: [T; 16] = std::array::from_fn(|_| T::zero());
    rho[4] = r(5, 18);
    rho[5] = r(1, 18);
    rho[12] = r(5, 9);
    rho[13] = r(1, 9);
    BellRealParams::new(rho).expect("valid pmf")
}

/// RCI holds (every one-sided marginal is ½) while s₁ = 4:
/// anticorrelated at ab, perfectly correlated at the other three settings.
pub fn rci_chsh_extreme<T: Scalar>() -> GenericParams<T> {
    let mut g: [T; 16] = std::array::from_fn(|_| T::zero());
    for k in [4, 8, 1, 13, 2, 14, 3, 15] {
        g[k] = r(1, 2);
    }
    GenericParams::new(g).expect("valid gamma")
}

/// Outcomes independent within every setting pair, with P(A=+1) = 1 − ε
/// everywhere and P(B=+1) = ε at ab, 1 − ε elsewhere. With m = 1 − 2ε the
/// correlations are (−m², m², m², m²), so s₁ = 4m². ROI holds; RCI fails
/// because Bob's marginal depends on Alice's setting.
pub fn roi_family(eps: f64) -> Result<GenericParams<f64>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange { what: "epsilon", index: 1, value: eps });
    }
    let mut g = [0.0; 16];
    for u in Spin::BOTH {
        for v in Spin::BOTH {
            let a_plus = 1.0 - eps;
            let b_plus = if (u, v) == (Spin::Minus, Spin::Minus) { eps } else { 1.0 - eps };
            for s in Spin::BOTH {
                for t in Spin::BOTH {
                    let pa = if s == Spin::Plus { a_plus } else { 1.0 - a_plus };
                    let pb = if t == Spin::Plus { b_plus } else { 1.0 - b_plus };
                    g[gamma_index(s, t, u, v)] = pa * pb;
                }
            }
        }
    }
    GenericParams::new(g)
}
