//! CHSH ⇒ Bell-real construction: vertex matrix V(w), magic matrix M(w),
//! reality matrix R and the pipeline p → λ → ρ = λM → γ = Rρ.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::lp::{minimize, LpOutcome, LpTolerance};
use crate::model::{
    bell_real_gamma, first_chsh_violation, s_functions, BellRealParams, CorrelationVector, GenericParams,
};
use crate::scalar::Scalar;

/// Float inputs within this distance of ±1 select the four-column matrices.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Nonzero columns (1-based) of each row of the reality matrix R.
pub const REALITY_ROWS: [[usize; 4]; 16] = [
    [1, 2, 5, 6],
    [1, 3, 5, 7],
    [1, 2, 9, 10],
    [1, 3, 9, 11],
    [3, 4, 7, 8],
    [2, 4, 6, 8],
    [3, 4, 11, 12],
    [2, 4, 10, 12],
    [9, 10, 13, 14],
    [9, 11, 13, 15],
    [5, 6, 13, 14],
    [5, 7, 13, 15],
    [11, 12, 15, 16],
    [10, 12, 14, 16],
    [7, 8, 15, 16],
    [6, 8, 14, 16],
];

/// The 16×16 0/1 reality matrix.
pub fn reality_matrix() -> [[u8; 16]; 16] {
    let mut r = [[0u8; 16]; 16];
    for (row, cols) in r.iter_mut().zip(REALITY_ROWS.iter()) {
        for &c in cols {
            row[c - 1] = 1;
        }
    }
    r
}

/// The 4×16 correlation matrix C with c = Cγ.
pub fn correlation_matrix() -> [[i8; 16]; 4] {
    let mut c = [[0i8; 16]; 4];
    for (j, row) in c.iter_mut().enumerate() {
        row[j] = 1;
        row[4 + j] = -1;
        row[8 + j] = -1;
        row[12 + j] = 1;
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sym {
    W,
    NegW,
    One,
    NegOne,
}

use Sym::{NegOne as M1, NegW as NW, One as P1, W};

const V_INTERIOR: [[Sym; 12]; 4] = [
    [W, W, W, W, W, W, W, W, W, W, W, W],
    [W, M1, P1, NW, W, P1, M1, NW, P1, P1, M1, M1],
    [P1, NW, W, M1, M1, NW, W, P1, M1, P1, P1, M1],
    [P1, P1, P1, P1, M1, M1, M1, M1, NW, W, NW, W],
];

const V_MINUS: [[i8; 4]; 4] = [[-1, -1, -1, -1], [-1, 1, -1, 1], [1, -1, -1, 1], [1, 1, -1, -1]];
const V_PLUS: [[i8; 4]; 4] = [[1, 1, 1, 1], [1, -1, 1, -1], [1, -1, -1, 1], [1, 1, -1, -1]];

/// Magic matrix rows for interior w: (column of (1+w)/2, column of (1-w)/2), 1-based.
const M_INTERIOR: [(usize, usize); 12] = [
    (1, 9),
    (6, 9),
    (1, 14),
    (11, 14),
    (12, 13),
    (5, 10),
    (2, 13),
    (2, 10),
    (12, 14),
    (1, 10),
    (2, 9),
    (11, 13),
];
const M_MINUS: [usize; 4] = [9, 14, 13, 10];
const M_PLUS: [usize; 4] = [16, 11, 12, 15];

/// Which of the three matrix shapes applies at `w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WCase {
    MinusOne,
    Interior,
    PlusOne,
}

pub fn w_case<T: Scalar>(w: &T) -> Result<WCase> {
    let one = T::one();
    if !T::EXACT && !w.to_f64().is_finite() {
        return Err(Error::NonFinite("w"));
    }
    if (w.abs() - one.clone()).sign_tol(BOUNDARY_TOL) == Ordering::Greater {
        return Err(Error::OutOfRange { what: "w", index: 1, value: w.to_f64() });
    }
    Ok(if w.near(&one, BOUNDARY_TOL) {
        WCase::PlusOne
    } else if w.near(&-one, BOUNDARY_TOL) {
        WCase::MinusOne
    } else {
        WCase::Interior
    })
}

/// Extreme points of the CHSH body at fixed w, one column per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexMatrix<T> {
    pub columns: Vec<[T; 4]>,
}

impl<T: Scalar> VertexMatrix<T> {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// V·λ.
    pub fn combine(&self, lambda: &[T]) -> [T; 4] {
        std::array::from_fn(|r| {
            self.columns
                .iter()
                .zip(lambda)
                .fold(T::zero(), |acc, (col, l)| acc + col[r].clone() * l.clone())
        })
    }
}

pub fn vertex_matrix<T: Scalar>(w: &T) -> Result<VertexMatrix<T>> {
    let fixed = |m: &[[i8; 4]; 4]| VertexMatrix {
        columns: (0..4).map(|c| std::array::from_fn(|r| T::from_i64(m[r][c] as i64))).collect(),
    };
    Ok(match w_case(w)? {
        WCase::MinusOne => fixed(&V_MINUS),
        WCase::PlusOne => fixed(&V_PLUS),
        WCase::Interior => VertexMatrix {
            columns: (0..12)
                .map(|c| {
                    std::array::from_fn(|r| match V_INTERIOR[r][c] {
                        Sym::W => w.clone(),
                        Sym::NegW => -w.clone(),
                        Sym::One => T::one(),
                        Sym::NegOne => -T::one(),
                    })
                })
                .collect(),
        },
    })
}

/// Row-stochastic matrix mapping λ to ρ = λM.
#[derive(Debug, Clone, PartialEq)]
pub struct MagicMatrix<T> {
    pub rows: Vec<[T; 16]>,
}

pub fn magic_matrix<T: Scalar>(w: &T) -> Result<MagicMatrix<T>> {
    let unit = |col: usize| -> [T; 16] {
        std::array::from_fn(|k| if k + 1 == col { T::one() } else { T::zero() })
    };
    Ok(match w_case(w)? {
        WCase::MinusOne => MagicMatrix { rows: M_MINUS.iter().map(|&c| unit(c)).collect() },
        WCase::PlusOne => MagicMatrix { rows: M_PLUS.iter().map(|&c| unit(c)).collect() },
        WCase::Interior => {
            let half = T::ratio(1, 2);
            let a = half.clone() * (T::one() + w.clone());
            let b = half * (T::one() - w.clone());
            MagicMatrix {
                rows: M_INTERIOR
                    .iter()
                    .map(|&(ca, cb)| {
                        std::array::from_fn(|k| {
                            if k + 1 == ca {
                                a.clone()
                            } else if k + 1 == cb {
                                b.clone()
                            } else {
                                T::zero()
                            }
                        })
                    })
                    .collect(),
            }
        }
    })
}

/// Convex weights over the columns of V(w).
#[derive(Debug, Clone, PartialEq)]
pub struct Lambda<T> {
    pub weights: Vec<T>,
}

/// Writes `p` as a convex combination of the columns of V(w).
///
/// Lemma-level existence leaves λ non-unique; this returns the minimiser of
/// Σ i·λ_i, which is a canonical but otherwise arbitrary choice.
pub fn decompose<T: Scalar>(p: &CorrelationVector<T>) -> Result<Lambda<T>> {
    let v = vertex_matrix(p.w())?;
    let n = v.len();
    let mut a: Vec<Vec<T>> = (0..4).map(|r| v.columns.iter().map(|col| col[r].clone()).collect()).collect();
    a.push(vec![T::one(); n]);
    let mut b: Vec<T> = p.as_array().to_vec();
    b.push(T::one());
    let cost: Vec<T> = (1..=n as i64).map(T::from_i64).collect();
    match minimize(&a, &b, &cost, &LpTolerance::default()) {
        LpOutcome::Optimal { x, .. } => Ok(Lambda { weights: x }),
        LpOutcome::Infeasible | LpOutcome::Unbounded => Err(infeasible(p)),
    }
}

fn infeasible<T: Scalar>(p: &CorrelationVector<T>) -> Error {
    let (index, value) = first_chsh_violation(p, 0.0).map(|(k, s)| (k, s.to_f64())).unwrap_or_else(|| {
        let s = s_functions(p).to_f64();
        let k = (0..4).max_by(|&i, &j| s[i].abs().total_cmp(&s[j].abs())).unwrap_or(0);
        (k + 1, s[k])
    });
    Error::Infeasible { index, value }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FineResult<T> {
    pub lambda: Lambda<T>,
    pub rho: BellRealParams<T>,
    pub gamma: GenericParams<T>,
}

/// Builds a Bell-real instance reproducing the correlations `p`.
pub fn fine_construct<T: Scalar>(p: &CorrelationVector<T>) -> Result<FineResult<T>> {
    let lambda = decompose(p)?;
    let m = magic_matrix(p.w())?;
    let rho: [T; 16] = std::array::from_fn(|k| {
        m.rows
            .iter()
            .zip(&lambda.weights)
            .fold(T::zero(), |acc, (row, l)| acc + l.clone() * row[k].clone())
    });
    let rho = BellRealParams::new(rho)?;
    let gamma = bell_real_gamma(&rho);
    Ok(FineResult { lambda, rho, gamma })
}

/// C·R·M(w)ᵀ as a list of columns.
pub fn crm_transpose<T: Scalar>(w: &T) -> Result<Vec<[T; 4]>> {
    let c = correlation_matrix();
    let r = reality_matrix();
    let m = magic_matrix(w)?;
    let cr: [[i64; 16]; 4] = std::array::from_fn(|i| {
        std::array::from_fn(|k| (0..16).map(|j| c[i][j] as i64 * r[j][k] as i64).sum())
    });
    Ok(m.rows
        .iter()
        .map(|row| {
            std::array::from_fn(|i| {
                (0..16).fold(T::zero(), |acc, k| acc + T::from_i64(cr[i][k]) * row[k].clone())
            })
        })
        .collect())
}

/// Largest |(C·R·M(w)ᵀ − V(w))_ij| over every `w` in the grid.
pub fn verify_crm_identity<T: Scalar>(grid: &[T]) -> Result<T> {
    let mut worst = T::zero();
    for w in grid {
        let lhs = crm_transpose(w)?;
        let v = vertex_matrix(w)?;
        for (a, b) in lhs.iter().zip(&v.columns) {
            for i in 0..4 {
                worst = worst.max((a[i].clone() - b[i].clone()).abs());
            }
        }
    }
    Ok(worst)
}

/// w = −1, +1 and the 101 interior points −1 + 2k/102, k = 1..=101.
pub fn default_w_grid<T: Scalar>() -> Vec<T> {
    let mut grid = vec![T::from_i64(-1), T::one()];
    grid.extend((1..=101).map(|k| T::from_i64(-1) + T::ratio(2 * k, 102)));
    grid
}

/// Bell-real achievability of a correlation vector, which coincides with CHSH.
pub fn is_bell_real_achievable<T: Scalar>(p: &CorrelationVector<T>, tol: f64) -> bool {
    first_chsh_violation(p, tol).is_none()
}

/// Searches for a hidden-variable pmf ρ with Rρ = γ.
pub fn bell_real_preimage<T: Scalar>(gamma: &GenericParams<T>) -> Option<BellRealParams<T>> {
    let r = reality_matrix();
    let mut a: Vec<Vec<T>> = r.iter().map(|row| row.iter().map(|&v| T::from_i64(v as i64)).collect()).collect();
    a.push(vec![T::one(); 16]);
    let mut b: Vec<T> = gamma.as_array().to_vec();
    b.push(T::one());
    let cost = vec![T::zero(); 16];
    match minimize(&a, &b, &cost, &LpTolerance::default()) {
        LpOutcome::Optimal { x, .. } => {
            let total = x.iter().cloned().fold(T::zero(), |acc, v| acc + v);
            let rho: [T; 16] = std::array::from_fn(|k| x[k].clone() / total.clone());
            BellRealParams::new(rho).ok()
        }
        _ => None,
    }
}

pub fn is_instance_bell_real<T: Scalar>(gamma: &GenericParams<T>) -> bool {
    bell_real_preimage(gamma).is_some()
}
