//! Finite-shot experiments: noise channels around the ideal gate, seeded
//! multinomial sampling of truth tables, and conversion of counts back to
//! probability tables.
//!
//! Reproducibility contract:
//! - generator: ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`);
//! - uniform draw: `u = (next_u64() >> 11) · 2⁻⁵³`, in `[0, 1)`;
//! - one draw per shot; the outcome is the first index whose left-to-right
//!   cumulative probability exceeds `u`;
//! - within one setting, inputs are sampled in order 00, 01, 10, 11 from a
//!   single stream;
//! - across the canonical settings (F1, F2, F3 order), each setting uses its
//!   own stream seeded with `seed ^ SETTING_SALTS[k]`.

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{pauli_pair, superop_from_spec, Pauli, SuperOperator, WeightedKrausSpec, PHYSICAL_TOL};
use crate::channels::{cnot_unitary, werner_mixture};
use crate::error::{Error, Result};
use crate::fidelity::{truth_table, BasisSetting, ProbabilityTable, LABELS, TP_TOL};

/// Per-setting sub-seed salts, in F1, F2, F3 order.
pub const SETTING_SALTS: [u64; 3] = [0x5A5A_0000_0000_0001, 0x5A5A_0000_0000_0002, 0x5A5A_0000_0000_0003];

pub fn setting_seed(seed: u64, setting_index: usize) -> u64 {
    seed ^ SETTING_SALTS[setting_index]
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// `p·E_CNOT + (1 − p)·D` with `p` the strength.
    Werner,
    /// Ideal gate, then Z on qubit one and X on qubit two, each independently
    /// with probability `s/2`. Reaches `D` at `s = 1`.
    ZxDephase,
    /// `(1 − s)·E_CNOT(ρ) + s·I/4`.
    Depolarize,
    /// Ideal gate, then X on each qubit independently with probability `s`.
    LocalFlip,
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseModel::Werner => "werner",
            NoiseModel::ZxDephase => "zx_dephase",
            NoiseModel::Depolarize => "depolarize",
            NoiseModel::LocalFlip => "local_flip",
        })
    }
}

impl FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "werner" => Ok(NoiseModel::Werner),
            "zx_dephase" => Ok(NoiseModel::ZxDephase),
            "depolarize" => Ok(NoiseModel::Depolarize),
            "local_flip" => Ok(NoiseModel::LocalFlip),
            other => Err(Error::UnknownNoiseModel(other.to_string())),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub model: NoiseModel,
    pub strength: f64,
}

/// Two independent Pauli errors `p1` and `p2`, applied with probabilities
/// `q1` and `q2` after the ideal gate.
fn gate_then_pauli_errors(p1: (Pauli, Pauli), q1: f64, p2: (Pauli, Pauli), q2: f64) -> SuperOperator {
    let i = pauli_pair(Pauli::I, Pauli::I);
    let e1 = pauli_pair(p1.0, p1.1);
    let e2 = pauli_pair(p2.0, p2.1);
    let spec = WeightedKrausSpec::new()
        .with_term((1.0 - q1) * (1.0 - q2), vec![i])
        .with_term(q1 * (1.0 - q2), vec![e1])
        .with_term((1.0 - q1) * q2, vec![e2])
        .with_term(q1 * q2, vec![e1 * e2]);
    superop_from_spec(&spec.after_unitary(&cnot_unitary()))
}

pub fn build_noisy_channel(params: &NoiseParams) -> Result<SuperOperator> {
    let s = params.strength;
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::OutOfRange { name: "strength", value: s });
    }
    Ok(match params.model {
        NoiseModel::Werner => werner_mixture(s)?,
        NoiseModel::ZxDephase => {
            gate_then_pauli_errors((Pauli::Z, Pauli::I), s / 2.0, (Pauli::I, Pauli::X), s / 2.0)
        }
        NoiseModel::Depolarize => {
            // I/4·tr(ρ) = (1/16) Σ_P P ρ P over all 16 two-qubit Paulis.
            let paulis: Vec<_> = Pauli::ALL
                .iter()
                .flat_map(|&a| Pauli::ALL.iter().map(move |&b| pauli_pair(a, b)))
                .collect();
            let spec = WeightedKrausSpec::new()
                .with_term(1.0 - s, vec![pauli_pair(Pauli::I, Pauli::I)])
                .with_term(s / 16.0, paulis);
            superop_from_spec(&spec.after_unitary(&cnot_unitary()))
        }
        NoiseModel::LocalFlip => gate_then_pauli_errors((Pauli::X, Pauli::I), s, (Pauli::I, Pauli::X), s),
    })
}

/// Shot counts for one prepared input of one setting.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsRecord {
    pub setting: BasisSetting,
    pub input: u8,
    /// Indexed by outcome label 00, 01, 10, 11.
    pub counts: [u64; 4],
}

impl CountsRecord {
    pub fn shots(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Index of the first cumulative probability above `u`. Rounding can leave
/// the total slightly below 1; draws past it go to the last outcome with
/// nonzero probability.
fn draw(cdf: &[f64; 4], last_nonzero: usize, u: f64) -> usize {
    cdf.iter().position(|&c| c > u).unwrap_or(last_nonzero)
}

fn sample_row(row: &[f64; 4], shots: u64, rng: &mut ChaCha8Rng) -> [u64; 4] {
    let probs = row.map(|p| p.max(0.0));
    let mut cdf = [0.0; 4];
    let mut acc = 0.0;
    for (c, p) in cdf.iter_mut().zip(probs) {
        acc += p;
        *c = acc;
    }
    let last_nonzero = probs.iter().rposition(|&p| p > 0.0).unwrap_or(3);
    let mut counts = [0u64; 4];
    for _ in 0..shots {
        counts[draw(&cdf, last_nonzero, uniform(rng))] += 1;
    }
    counts
}

/// One multinomial sample of `shots_per_input` shots for each of the four
/// inputs of `setting`, from a stream seeded with `seed`.
pub fn sample_counts(
    s: &SuperOperator,
    setting: BasisSetting,
    shots_per_input: u64,
    seed: u64,
) -> Result<Vec<CountsRecord>> {
    if shots_per_input == 0 {
        return Err(Error::Counts("shots per input must be at least 1".into()));
    }
    s.require_tp(TP_TOL)?;
    s.require_cp(PHYSICAL_TOL)?;
    let table = truth_table(s, setting)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(LABELS
        .into_iter()
        .map(|input| CountsRecord {
            setting,
            input,
            counts: sample_row(table.row(input), shots_per_input, &mut rng),
        })
        .collect())
}

/// Samples the three canonical settings with their derived sub-seeds.
pub fn sample_canonical(s: &SuperOperator, shots_per_input: u64, seed: u64) -> Result<[Vec<CountsRecord>; 3]> {
    let mut out: [Vec<CountsRecord>; 3] = Default::default();
    for (k, setting) in BasisSetting::CANONICAL.into_iter().enumerate() {
        out[k] = sample_counts(s, setting, shots_per_input, setting_seed(seed, k))?;
    }
    Ok(out)
}

/// Rows of relative frequencies, each normalized by its own shot count.
pub fn counts_to_table(records: &[CountsRecord]) -> Result<ProbabilityTable> {
    let first = records
        .first()
        .ok_or_else(|| Error::Counts("no records".into()))?;
    let setting = first.setting;
    let mut rows: [Option<[f64; 4]>; 4] = [None; 4];
    for r in records {
        if r.setting != setting {
            return Err(Error::Counts(format!(
                "records mix settings {setting} and {}",
                r.setting
            )));
        }
        if r.input > 3 {
            return Err(Error::Counts(format!("input label {} out of range", r.input)));
        }
        let shots = r.shots();
        if shots == 0 {
            return Err(Error::Counts(format!(
                "input {} of setting {setting} has zero shots",
                crate::fidelity::label_string(r.input)
            )));
        }
        let slot = &mut rows[r.input as usize];
        if slot.is_some() {
            return Err(Error::Counts(format!(
                "duplicate input {} in setting {setting}",
                crate::fidelity::label_string(r.input)
            )));
        }
        *slot = Some(r.counts.map(|c| c as f64 / shots as f64));
    }
    let mut probs = [[0.0; 4]; 4];
    for (i, row) in rows.iter().enumerate() {
        probs[i] = row.ok_or_else(|| {
            Error::Counts(format!(
                "missing input {} in setting {setting}",
                crate::fidelity::label_string(i as u8)
            ))
        })?;
    }
    ProbabilityTable::new(setting, probs)
}
