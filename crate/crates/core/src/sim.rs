//! Seeded Monte Carlo EPRB trials and estimators.
//!
//! Trials are split into fixed-size shards. Shard `j` draws from ChaCha20
//! seeded with the user seed and switched to stream `j`, so the record stream
//! is the same whether shards run sequentially or in parallel.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::model::{gamma_assignment, gamma_index, joint_pmf, DetectorProbs, GenericParams, JointPmf, Spin, S_MATRIX, SETTING_NAMES};

/// Trials per shard.
pub const SHARD_SIZE: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub u: Spin,
    pub v: Spin,
    pub s: Spin,
    pub t: Spin,
}

impl TrialRecord {
    fn cell(&self) -> usize {
        gamma_index(self.s, self.t, self.u, self.v)
    }
}

/// Inverse-CDF sampler over the 16 cells P(A,B,D_A,D_B).
#[derive(Debug, Clone)]
pub struct Simulator {
    cdf: [f64; 16],
    joint: JointPmf<f64>,
}

impl Simulator {
    pub fn new(gamma: &GenericParams<f64>, delta: &DetectorProbs<f64>) -> Self {
        let joint = joint_pmf(gamma, delta);
        let mut cdf = [0.0; 16];
        let mut acc = 0.0;
        for (k, p) in joint.as_array().iter().enumerate() {
            acc += p;
            cdf[k] = acc;
        }
        // Guard the last positive cell against round-off in the running sum.
        if let Some(last) = joint.as_array().iter().rposition(|&p| p > 0.0) {
            cdf[last..].iter_mut().for_each(|c| *c = f64::INFINITY);
        }
        Simulator { cdf, joint }
    }

    pub fn joint(&self) -> &JointPmf<f64> {
        &self.joint
    }

    fn draw(&self, rng: &mut ChaCha20Rng, trial: u64) -> TrialRecord {
        let r: f64 = rng.gen();
        let k = self.cdf.partition_point(|&c| c <= r).min(15);
        let (s, t, u, v) = gamma_assignment(k);
        TrialRecord { trial, u, v, s, t }
    }

    fn shard_rng(seed: u64, shard: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(shard);
        rng
    }

    fn shard_range(n: u64, shard: u64) -> std::ops::Range<u64> {
        let start = shard * SHARD_SIZE;
        start..(start + SHARD_SIZE).min(n)
    }

    fn shard_count(n: u64) -> u64 {
        n.div_ceil(SHARD_SIZE)
    }

    /// The record stream of `n` trials, generated lazily.
    pub fn records(&self, n: u64, seed: u64) -> impl Iterator<Item = TrialRecord> + '_ {
        (0..Self::shard_count(n)).flat_map(move |shard| {
            let mut rng = Self::shard_rng(seed, shard);
            Self::shard_range(n, shard).map(move |trial| self.draw(&mut rng, trial))
        })
    }

    /// Tallies `n` trials across shards in parallel; equal to tallying [`Self::records`].
    pub fn tally(&self, n: u64, seed: u64) -> Tally {
        (0..Self::shard_count(n))
            .into_par_iter()
            .map(|shard| {
                let mut rng = Self::shard_rng(seed, shard);
                let mut tally = Tally::default();
                for trial in Self::shard_range(n, shard) {
                    tally.add(&self.draw(&mut rng, trial));
                }
                tally
            })
            .reduce(Tally::default, Tally::merge)
    }
}

/// Counts per (s, t, u, v) cell. Merging is elementwise addition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub cells: [u64; 16],
}

impl Tally {
    pub fn add(&mut self, r: &TrialRecord) {
        self.cells[r.cell()] += 1;
    }

    pub fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.cells.iter_mut().zip(other.cells) {
            *a += b;
        }
        self
    }

    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a TrialRecord>) -> Tally {
        let mut t = Tally::default();
        records.into_iter().for_each(|r| t.add(r));
        t
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().sum()
    }

    /// Trials per setting pair, in ab, ab', a'b, a'b' order.
    pub fn pair_counts(&self) -> [u64; 4] {
        std::array::from_fn(|setting| (0..4).map(|block| self.cells[4 * block + setting]).sum())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub trials: u64,
    pub pair_counts: [u64; 4],
    pub correlations: [f64; 4],
    /// sqrt((1 − ĉ²)/n) per setting pair.
    pub standard_errors: [f64; 4],
    pub s: [f64; 4],
    pub s_standard_errors: [f64; 4],
    /// Number of standard errors required to call a CHSH violation.
    pub z: f64,
    /// 1-based indices k with |ŝ_k| − 2 > z·se(ŝ_k).
    pub chsh_violations: Vec<usize>,
}

impl EstimateReport {
    pub fn violates_chsh(&self) -> bool {
        !self.chsh_violations.is_empty()
    }
}

pub fn estimate(tally: &Tally, z: f64) -> Result<EstimateReport> {
    let pair_counts = tally.pair_counts();
    for (k, &count) in pair_counts.iter().enumerate() {
        if count < 2 {
            return Err(Error::MissingSettingPair { pair: SETTING_NAMES[k], count });
        }
    }
    let correlations: [f64; 4] = std::array::from_fn(|setting| {
        let c = |block: usize| tally.cells[4 * block + setting] as f64;
        (c(0) - c(1) - c(2) + c(3)) / pair_counts[setting] as f64
    });
    let standard_errors: [f64; 4] =
        std::array::from_fn(|k| ((1.0 - correlations[k].powi(2)).max(0.0) / pair_counts[k] as f64).sqrt());
    let s: [f64; 4] =
        std::array::from_fn(|k| (0..4).map(|j| S_MATRIX[k][j] as f64 * correlations[j]).sum());
    let se_total = standard_errors.iter().map(|e| e * e).sum::<f64>().sqrt();
    let s_standard_errors = [se_total; 4];
    let chsh_violations = (0..4).filter(|&k| s[k].abs() - 2.0 > z * s_standard_errors[k]).map(|k| k + 1).collect();
    Ok(EstimateReport {
        trials: tally.total(),
        pair_counts,
        correlations,
        standard_errors,
        s,
        s_standard_errors,
        z,
        chsh_violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GoodnessOfFit {
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson χ² of the observed cell counts against the model pmf. Cells the
/// model assigns zero are excluded; a hit in one of them gives p = 0.
pub fn goodness_of_fit(tally: &Tally, joint: &JointPmf<f64>) -> GoodnessOfFit {
    let n = tally.total() as f64;
    let mut chi2 = 0.0;
    let mut used = 0usize;
    let mut impossible = false;
    for (obs, &p) in tally.cells.iter().zip(joint.as_array()) {
        if p > 0.0 {
            let e = n * p;
            chi2 += (*obs as f64 - e).powi(2) / e;
            used += 1;
        } else if *obs > 0 {
            impossible = true;
        }
    }
    let dof = used.saturating_sub(1);
    let p_value = if impossible {
        0.0
    } else if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64).map(|d| d.sf(chi2)).unwrap_or(0.0)
    };
    GoodnessOfFit { chi2, dof, p_value }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    trial: u64,
    u: i64,
    v: i64,
    s: i64,
    t: i64,
}

/// Writes records as CSV with header `trial,u,v,s,t`.
pub fn write_csv<W: Write>(records: impl IntoIterator<Item = TrialRecord>, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let io = |e: csv::Error| Error::TrialRecord { line: 0, message: e.to_string() };
    w.write_record(["trial", "u", "v", "s", "t"]).map_err(io)?;
    for r in records {
        w.serialize(CsvRow { trial: r.trial, u: r.u.value(), v: r.v.value(), s: r.s.value(), t: r.t.value() })
            .map_err(io)?;
    }
    w.flush().map_err(|e| Error::TrialRecord { line: 0, message: e.to_string() })
}

/// Parses CSV records with header `trial,u,v,s,t`; every value must be ±1.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| Error::TrialRecord { line: 1, message: e.to_string() })?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["trial", "u", "v", "s", "t"] {
        return Err(Error::TrialRecord { line: 1, message: "expected header trial,u,v,s,t".into() });
    }
    let mut out = Vec::new();
    for row in reader.deserialize::<CsvRow>() {
        let row = row.map_err(|e| Error::TrialRecord {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = out.len() as u64 + 2;
        let spin = |name: &str, v: i64| {
            Spin::from_value(v).ok_or_else(|| Error::TrialRecord { line, message: format!("{name} = {v} is not -1 or 1") })
        };
        out.push(TrialRecord {
            trial: row.trial,
            u: spin("u", row.u)?,
            v: spin("v", row.v)?,
            s: spin("s", row.s)?,
            t: spin("t", row.t)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DeterministicInstance;

    #[test]
    fn sharded_tally_equals_stream() {
        let sim = Simulator::new(&GenericParams::minimal(), &DetectorProbs::uniform());
        let n = 3 * SHARD_SIZE / 2;
        let seq: Vec<TrialRecord> = sim.records(n, 11).collect();
        assert_eq!(seq.len() as u64, n);
        assert_eq!(Tally::from_records(&seq), sim.tally(n, 11));
        assert_eq!(seq, sim.records(n, 11).collect::<Vec<_>>());
        assert_ne!(sim.tally(n, 11), sim.tally(n, 12));
    }

    #[test]
    fn deterministic_outcomes_follow_settings() {
        let d = DeterministicInstance::new([1, 2, 3, 4]).unwrap();
        let sim = Simulator::new(&d.gamma(), &DetectorProbs::uniform());
        for r in sim.records(2000, 3) {
            let setting = crate::model::setting_index(r.u, r.v);
            assert_eq!((r.s, r.t), d.outcomes(setting));
        }
    }

    #[test]
    fn exact_frequencies_give_exact_correlations() {
        let mut tally = Tally::default();
        for (k, n) in [3u64, 1, 0, 2, 1, 1, 2, 0, 1, 1, 2, 0, 3, 1, 0, 2].into_iter().enumerate() {
            tally.cells[k] = n;
        }
        let r = estimate(&tally, 5.0).unwrap();
        assert_eq!(r.pair_counts, [8, 4, 4, 4]);
        assert_eq!(r.correlations, [(3.0 - 1.0 - 1.0 + 3.0) / 8.0, 0.0, -1.0, 1.0]);
    }

    #[test]
    fn missing_pair_is_an_error() {
        let mut tally = Tally::default();
        tally.cells[0] = 5;
        tally.cells[1] = 5;
        tally.cells[2] = 5;
        tally.cells[3] = 1;
        assert_eq!(estimate(&tally, 5.0), Err(Error::MissingSettingPair { pair: "a'b'", count: 1 }));
    }

    #[test]
    fn csv_round_trip() {
        let sim = Simulator::new(&GenericParams::minimal(), &DetectorProbs::uniform());
        let records: Vec<TrialRecord> = sim.records(50, 1).collect();
        let mut buf = Vec::new();
        write_csv(records.iter().copied(), &mut buf).unwrap();
        assert!(buf.starts_with(b"trial,u,v,s,t\n"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), records);
        let bad = "trial,u,v,s,t\n0,1,1,0,1\n";
        assert!(matches!(read_csv(bad.as_bytes()), Err(Error::TrialRecord { line: 2, .. })));
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
