//! Hidden prepared outcomes (A₁,A₂,B₁,B₂) and the combined pmf over
//! operational plus hidden variables.

use serde::Serialize;

use crate::model::{
    gamma_assignment, gamma_index, setting_index, BellLocalParams, BellRealParams, DetectorProbs, JointPmf, Spin,
};
use crate::scalar::Scalar;

/// A prepared-outcome quadruple. Index order is lexicographic in
/// (A₁, A₂, B₁, B₂) with −1 before +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct HiddenQuadruple {
    pub a1: Spin,
    pub a2: Spin,
    pub b1: Spin,
    pub b2: Spin,
}

impl HiddenQuadruple {
    /// Zero-based position in the ρ vector.
    pub fn index(&self) -> usize {
        8 * self.a1.bit() + 4 * self.a2.bit() + 2 * self.b1.bit() + self.b2.bit()
    }

    pub fn from_index(k: usize) -> Self {
        assert!(k < 16, "hidden quadruple index {k} out of range");
        HiddenQuadruple {
            a1: Spin::from_bit((k >> 3) & 1),
            a2: Spin::from_bit((k >> 2) & 1),
            b1: Spin::from_bit((k >> 1) & 1),
            b2: Spin::from_bit(k & 1),
        }
    }

    pub fn all() -> impl Iterator<Item = HiddenQuadruple> {
        (0..16).map(Self::from_index)
    }

    /// Alice's outcome when she measures with setting `u`.
    pub fn alice(&self, u: Spin) -> Spin {
        match u {
            Spin::Minus => self.a1,
            Spin::Plus => self.a2,
        }
    }

    /// Bob's outcome when he measures with setting `v`.
    pub fn bob(&self, v: Spin) -> Spin {
        match v {
            Spin::Minus => self.b1,
            Spin::Plus => self.b2,
        }
    }
}

/// The reality matrix rebuilt from the outcome rule: entry (k, j) is 1 when
/// quadruple j produces the outcome pair of γ_k at γ_k's setting pair.
pub fn generated_reality_matrix() -> [[u8; 16]; 16] {
    std::array::from_fn(|k| {
        let (s, t, u, v) = gamma_assignment(k);
        std::array::from_fn(|j| {
            let h = HiddenQuadruple::from_index(j);
            u8::from(h.alice(u) == s && h.bob(v) == t)
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinedRow<T> {
    pub a: Spin,
    pub b: Spin,
    pub da: Spin,
    pub db: Spin,
    pub hidden: HiddenQuadruple,
    pub probability: T,
}

/// The 64 outcome-consistent rows, ordered by hidden quadruple then setting pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedPmf<T> {
    rows: Vec<CombinedRow<T>>,
}

impl<T: Scalar> CombinedPmf<T> {
    pub fn rows(&self) -> &[CombinedRow<T>] {
        &self.rows
    }

    /// Row by 1-based number.
    pub fn row(&self, n: usize) -> &CombinedRow<T> {
        &self.rows[n - 1]
    }

    /// Probability of a full assignment; zero when the outcomes disagree with the hidden quadruple.
    pub fn probability(&self, a: Spin, b: Spin, da: Spin, db: Spin, hidden: HiddenQuadruple) -> T {
        let row = &self.rows[4 * hidden.index() + setting_index(da, db)];
        if row.a == a && row.b == b {
            row.probability.clone()
        } else {
            T::zero()
        }
    }

    pub fn total(&self) -> T {
        self.rows.iter().fold(T::zero(), |acc, r| acc + r.probability.clone())
    }
}

pub fn combined_pmf<T: Scalar>(rho: &BellRealParams<T>, delta: &DetectorProbs<T>) -> CombinedPmf<T> {
    let mut rows = Vec::with_capacity(64);
    for hidden in HiddenQuadruple::all() {
        for da in Spin::BOTH {
            for db in Spin::BOTH {
                rows.push(CombinedRow {
                    a: hidden.alice(da),
                    b: hidden.bob(db),
                    da,
                    db,
                    hidden,
                    probability: rho.as_array()[hidden.index()].clone() * delta.get(da, db).clone(),
                });
            }
        }
    }
    CombinedPmf { rows }
}

/// Sums out the hidden variables.
pub fn marginalize_operational<T: Scalar>(combined: &CombinedPmf<T>) -> JointPmf<T> {
    let mut cells: [T; 16] = std::array::from_fn(|_| T::zero());
    for r in &combined.rows {
        let k = gamma_index(r.a, r.b, r.da, r.db);
        cells[k] = cells[k].clone() + r.probability.clone();
    }
    JointPmf::from_cells(cells)
}

/// Sums out the operational variables, recovering ρ.
pub fn hidden_marginal<T: Scalar>(combined: &CombinedPmf<T>) -> [T; 16] {
    let mut rho: [T; 16] = std::array::from_fn(|_| T::zero());
    for r in &combined.rows {
        let k = r.hidden.index();
        rho[k] = rho[k].clone() + r.probability.clone();
    }
    rho
}

/// The product pmf ρ = P(A₁)P(A₂)P(B₁)P(B₂) whose Bell-real γ equals the Bell-local γ.
pub fn bell_local_embed<T: Scalar>(p: &BellLocalParams<T>) -> BellRealParams<T> {
    let rho: [T; 16] = std::array::from_fn(|k| {
        let h = HiddenQuadruple::from_index(k);
        p.alice(h.a1, Spin::Minus).clone()
            * p.alice(h.a2, Spin::Plus).clone()
            * p.bob(h.b1, Spin::Minus).clone()
            * p.bob(h.b2, Spin::Plus).clone()
    });
    BellRealParams::new(rho).expect("product of one-sided pmfs is a pmf")
}
