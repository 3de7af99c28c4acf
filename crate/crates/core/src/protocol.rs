//! Executable PBC00 and R04 protocol state machines: pulse-by-pulse
//! simulation, sifting, test-bit error estimation (PBC00), and
//! inconclusive-count estimation (R04).
//!
//! Encoding: for trit r Alice uses the ordered basis pair
//! (ψ_(r+1), ψ_(r+2)) with 1-based cyclic indexing, sending the first member
//! for bit 0 and the second for bit 1. Bob announces his POVM outcome class;
//! an outcome ψ̄_j with j inside the announced basis is conclusive.
//!
//! Per-pulse randomness is consumed in a fixed order (r, b, channel branch,
//! loss, POVM u) from a counter-based stream addressed by (seed, pulse
//! index), so identical seeds reproduce bit-identical results under any work
//! partitioning.

use serde::{Deserialize, Serialize};

use crate::channel::{AttackModel, ChannelOutput};
use crate::qubit::{bob_povm, sample_povm, trine_state, DensityMatrix, Povm};
use crate::rng::{Stream, StreamDomain};
use crate::{Error, Result};

/// Outcome-to-bit convention for conclusive events.
///
/// `Exclusion` is the corrected mapping: outcome ψ̄_j means "Alice did not
/// send ψ_j", so the bit is the other basis member. It reproduces the
/// entanglement-picture reduction exactly. `Literal` is the table as printed
/// in the original protocol description; it assigns the opposite bit, yields
/// a 100% error rate on a noiseless channel, and is retained only to
/// demonstrate that inconsistency.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum BitMapping {
    #[default]
    #[serde(rename = "exclusion")]
    Exclusion,
    #[serde(rename = "literal-paper")]
    Literal,
}

/// 1-based indices of the two basis members (first, second) for trit r.
pub fn basis_members(r: u8) -> (u8, u8) {
    let r = r % 3;
    (r + 1, (r + 1) % 3 + 1)
}

/// Index of the state Alice sends for (r, b): the (b+1)-th member of the
/// basis pair.
pub fn sent_state_index(r: u8, b: u8) -> u8 {
    let (first, second) = basis_members(r);
    if b == 0 {
        first
    } else {
        second
    }
}

/// Which trine protocol a run executes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProtocolKind {
    #[serde(rename = "pbc00")]
    Pbc00,
    #[serde(rename = "r04")]
    R04,
}

/// What happened to one transmitted pulse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PulseOutcome {
    Lost,
    /// Bob's POVM outcome ψ̄_j, j ∈ 1..=3.
    Dual(u8),
}

/// Per-pulse record: Alice's randomness, the state index she sent, and Bob's
/// outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PulseRecord {
    pub index: u64,
    pub trit: u8,
    pub bit: u8,
    pub sent_state: u8,
    pub outcome: PulseOutcome,
}

/// Classification of a pulse after Alice reveals the trit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SiftOutcome {
    Conclusive(u8),
    Inconclusive,
    Lost,
}

/// Maps Bob's outcome ψ̄_j at announced trit r to a sift classification,
/// under the default exclusion convention.
pub fn conclusive_map(r: u8, outcome_j: u8) -> SiftOutcome {
    conclusive_map_with(r, outcome_j, BitMapping::Exclusion)
}

/// As [`conclusive_map`], with an explicit outcome-to-bit convention.
pub fn conclusive_map_with(r: u8, outcome_j: u8, mapping: BitMapping) -> SiftOutcome {
    let (first, second) = basis_members(r);
    let bit_for_first = match mapping {
        BitMapping::Exclusion => 1,
        BitMapping::Literal => 0,
    };
    if outcome_j == first {
        SiftOutcome::Conclusive(bit_for_first)
    } else if outcome_j == second {
        SiftOutcome::Conclusive(1 - bit_for_first)
    } else {
        SiftOutcome::Inconclusive
    }
}

/// Aggregate counters and derived ratios for one protocol run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunStats {
    pub n_sent: u64,
    pub n_lost: u64,
    pub n_received: u64,
    pub n_conclusive: u64,
    pub n_inconclusive: u64,
    pub n_test: u64,
    pub n_key: u64,
    pub n_test_errors: u64,
    /// Errors over all conclusive pulses (the simulator can referee).
    pub n_conclusive_errors: u64,
    /// Test-bit error estimate (PBC00; equals the full conclusive error rate
    /// for R04 where no bits are sacrificed).
    pub e_err_estimate: f64,
    /// One-sided 95% upper bound when the test sample shows zero errors.
    pub e_err_upper95: Option<f64>,
    /// Directly counted error rate over all conclusive pulses.
    pub e_conclusive_observed: f64,
    /// Inconclusive fraction I among received pulses (losses excluded).
    pub inconclusive_fraction_i: f64,
    /// The estimate (1−2I)/(1−I), clamped to [0, 1].
    pub e_est_r04: f64,
    /// True when the raw R04 estimate fell outside [0, 1] and was clamped.
    pub e_est_clamped: bool,
    pub p_conc_observed: f64,
    pub seed: u64,
}

/// One protocol execution: statistics plus both parties' raw key bits.
#[derive(Clone, Debug)]
pub struct ProtocolRun {
    pub stats: RunStats,
    pub alice_key: Vec<u8>,
    pub bob_key: Vec<u8>,
}

/// Simulates the pulse loop shared by both protocols and returns the full
/// transcript.
pub fn simulate_pulses(
    n_pulses: u64,
    channel: &AttackModel,
    seed: u64,
) -> Result<Vec<PulseRecord>> {
    if n_pulses == 0 {
        return Err(Error::Config("n_pulses must be at least 1".into()));
    }
    let povm = bob_povm();
    let mut records = Vec::with_capacity(n_pulses as usize);
    for i in 0..n_pulses {
        let mut stream = Stream::new(seed, StreamDomain::Pulse, i);
        let r = stream.next_below(3) as u8;
        let b = stream.next_bit();
        let sent = sent_state_index(r, b);
        let state = trine_state(sent as usize)?;
        let outcome = match channel.apply(&state, &mut stream)? {
            ChannelOutput::Lost { .. } => PulseOutcome::Lost,
            ChannelOutput::State(received) => {
                let rho = DensityMatrix::from_pure(&received).map_err(|_| {
                    Error::InvalidState("channel returned a non-normalizable state".into())
                })?;
                let j = measure_bob(&povm, &rho, stream.next_f64())?;
                PulseOutcome::Dual(j)
            }
        };
        records.push(PulseRecord {
            index: i,
            trit: r,
            bit: b,
            sent_state: sent,
            outcome,
        });
    }
    Ok(records)
}

fn measure_bob(povm: &Povm, rho: &DensityMatrix, u: f64) -> Result<u8> {
    Ok(sample_povm(povm, rho, u)? as u8 + 1)
}

/// Sifted view of a transcript: per-class pulse indices plus the paired
/// (alice_bit, bob_bit) for conclusive pulses, in transcript order.
#[derive(Clone, Debug, Default)]
pub struct SiftResult {
    pub conclusive: Vec<(u64, u8, u8)>,
    pub inconclusive_indices: Vec<u64>,
    pub lost_indices: Vec<u64>,
}

/// Partitions pulses into lost / inconclusive / conclusive and pairs the
/// conclusive bits, preserving order.
pub fn sift(records: &[PulseRecord], mapping: BitMapping) -> SiftResult {
    let mut out = SiftResult::default();
    for rec in records {
        match rec.outcome {
            PulseOutcome::Lost => out.lost_indices.push(rec.index),
            PulseOutcome::Dual(j) => match conclusive_map_with(rec.trit, j, mapping) {
                SiftOutcome::Conclusive(bob_bit) => {
                    out.conclusive.push((rec.index, rec.bit, bob_bit))
                }
                SiftOutcome::Inconclusive => out.inconclusive_indices.push(rec.index),
                SiftOutcome::Lost => unreachable!("dual outcome cannot be lost"),
            },
        }
    }
    out
}

/// The R04 estimator (1−2I)/(1−I), clamped into [0, 1].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InconclusiveEstimate {
    pub value: f64,
    pub clamped: bool,
}

/// Estimates the conclusive-bit error rate from the inconclusive fraction I
/// (losses excluded). I = 1 means there were no conclusive events and the
/// estimate is undefined.
pub fn estimate_from_inconclusive(i: f64) -> Result<InconclusiveEstimate> {
    if !(0.0..=1.0).contains(&i) || !i.is_finite() {
        return Err(Error::OutOfDomain {
            what: "inconclusive fraction",
            value: i,
            lo: 0.0,
            hi: 1.0,
        });
    }
    if i == 1.0 {
        return Err(Error::AllInconclusive);
    }
    let raw = (1.0 - 2.0 * i) / (1.0 - i);
    let value = raw.clamp(0.0, 1.0);
    Ok(InconclusiveEstimate {
        value,
        clamped: raw != value,
    })
}

fn base_stats(records: &[PulseRecord], sifted: &SiftResult, seed: u64) -> Result<RunStats> {
    let n_sent = records.len() as u64;
    let n_lost = sifted.lost_indices.len() as u64;
    let n_received = n_sent - n_lost;
    if n_received == 0 {
        return Err(Error::NoReceivedPulses);
    }
    let n_conclusive = sifted.conclusive.len() as u64;
    let n_inconclusive = sifted.inconclusive_indices.len() as u64;
    let n_conclusive_errors = sifted.conclusive.iter().filter(|(_, a, b)| a != b).count() as u64;
    let i = n_inconclusive as f64 / n_received as f64;
    let (e_est_r04, e_est_clamped) = match estimate_from_inconclusive(i) {
        Ok(est) => (est.value, est.clamped),
        Err(_) => (f64::NAN, false),
    };
    Ok(RunStats {
        n_sent,
        n_lost,
        n_received,
        n_conclusive,
        n_inconclusive,
        n_test: 0,
        n_key: n_conclusive,
        n_test_errors: 0,
        n_conclusive_errors,
        e_err_estimate: 0.0,
        e_err_upper95: None,
        e_conclusive_observed: if n_conclusive > 0 {
            n_conclusive_errors as f64 / n_conclusive as f64
        } else {
            f64::NAN
        },
        inconclusive_fraction_i: i,
        e_est_r04,
        e_est_clamped,
        p_conc_observed: n_conclusive as f64 / n_received as f64,
        seed,
    })
}

/// Runs PBC00: simulate, sift, sacrifice ⌈test_fraction·n_conclusive⌉ random
/// test bits to estimate the error rate, keep the rest as raw key.
pub fn run_pbc00(
    n_pulses: u64,
    channel: &AttackModel,
    test_fraction: f64,
    seed: u64,
) -> Result<ProtocolRun> {
    run_pbc00_with(
        n_pulses,
        channel,
        test_fraction,
        seed,
        BitMapping::Exclusion,
    )
}

/// As [`run_pbc00`] with an explicit outcome-to-bit convention.
pub fn run_pbc00_with(
    n_pulses: u64,
    channel: &AttackModel,
    test_fraction: f64,
    seed: u64,
    mapping: BitMapping,
) -> Result<ProtocolRun> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test_fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let records = simulate_pulses(n_pulses, channel, seed)?;
    let sifted = sift(&records, mapping);
    let mut stats = base_stats(&records, &sifted, seed)?;
    let n_conclusive = sifted.conclusive.len();
    if n_conclusive == 0 {
        return Err(Error::NoConclusiveEvents);
    }

    let n_test = (test_fraction * n_conclusive as f64).ceil() as usize;
    let n_test = n_test.min(n_conclusive);
    // Partial Fisher-Yates over conclusive positions, on its own stream.
    let mut order: Vec<usize> = (0..n_conclusive).collect();
    let mut sel = Stream::new(seed, StreamDomain::TestSelection, 0);
    for k in 0..n_test {
        let pick = k + sel.next_below((n_conclusive - k) as u64) as usize;
        order.swap(k, pick);
    }
    let mut is_test = vec![false; n_conclusive];
    for &k in &order[..n_test] {
        is_test[k] = true;
    }

    let mut n_test_errors = 0u64;
    let mut alice_key = Vec::with_capacity(n_conclusive - n_test);
    let mut bob_key = Vec::with_capacity(n_conclusive - n_test);
    for (pos, (_, a, b)) in sifted.conclusive.iter().enumerate() {
        if is_test[pos] {
            if a != b {
                n_test_errors += 1;
            }
        } else {
            alice_key.push(*a);
            bob_key.push(*b);
        }
    }

    stats.n_test = n_test as u64;
    stats.n_key = (n_conclusive - n_test) as u64;
    stats.n_test_errors = n_test_errors;
    stats.e_err_estimate = n_test_errors as f64 / n_test as f64;
    stats.e_err_upper95 = if n_test_errors == 0 {
        // Zero observed errors still only bounds the rate: one-sided
        // exact binomial upper limit at 95%.
        Some(1.0 - 0.05f64.powf(1.0 / n_test as f64))
    } else {
        None
    };

    Ok(ProtocolRun {
        stats,
        alice_key,
        bob_key,
    })
}

/// Runs R04: the same pulse loop with no test bits. Every conclusive result
/// is key; the error rate is estimated from the inconclusive fraction.
pub fn run_r04(n_pulses: u64, channel: &AttackModel, seed: u64) -> Result<ProtocolRun> {
    run_r04_with(n_pulses, channel, seed, BitMapping::Exclusion)
}

/// As [`run_r04`] with an explicit outcome-to-bit convention.
pub fn run_r04_with(
    n_pulses: u64,
    channel: &AttackModel,
    seed: u64,
    mapping: BitMapping,
) -> Result<ProtocolRun> {
    let records = simulate_pulses(n_pulses, channel, seed)?;
    let sifted = sift(&records, mapping);
    let mut stats = base_stats(&records, &sifted, seed)?;
    stats.e_err_estimate = stats.e_est_r04;
    let alice_key: Vec<u8> = sifted.conclusive.iter().map(|(_, a, _)| *a).collect();
    let bob_key: Vec<u8> = sifted.conclusive.iter().map(|(_, _, b)| *b).collect();
    Ok(ProtocolRun {
        stats,
        alice_key,
        bob_key,
    })
}

// ---------------------------------------------------------------------------
// Classical announcement ordering
// ---------------------------------------------------------------------------

/// Kinds of classical announcements exchanged during a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnnouncementKind {
    /// Bob: all measurements are done.
    MeasurementsDone,
    /// Alice: the trit string.
    TritReveal,
    /// Bob: per-pulse conclusive/inconclusive classification.
    SiftClassification,
}

/// A classical announcement with a logical timestamp.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Announcement {
    pub at: u64,
    pub kind: AnnouncementKind,
}

/// Checks the protocol's announcement ordering: Bob's measurement-complete
/// message strictly precedes Alice's trit reveal, which strictly precedes the
/// sift classifications. Missing stages are vacuously ordered.
pub fn message_order_check(transcript: &[Announcement]) -> bool {
    let extent = |kind: AnnouncementKind| {
        let times = transcript.iter().filter(|a| a.kind == kind).map(|a| a.at);
        let min = times.clone().min();
        let max = times.max();
        (min, max)
    };
    let (_, done_max) = extent(AnnouncementKind::MeasurementsDone);
    let (trit_min, trit_max) = extent(AnnouncementKind::TritReveal);
    let (sift_min, _) = extent(AnnouncementKind::SiftClassification);
    if let (Some(d), Some(t)) = (done_max, trit_min) {
        if d >= t {
            return false;
        }
    }
    if let (Some(t), Some(s)) = (trit_max, sift_min) {
        if t >= s {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Transcript export
// ---------------------------------------------------------------------------

/// Fixed CSV header for transcript export.
pub const TRANSCRIPT_CSV_HEADER: &str =
    "index,r,b,sent_state,outcome,classification,alice_bit,bob_bit";

/// Renders a transcript as CSV with one row per pulse. Lost and inconclusive
/// rows leave the bit columns empty.
pub fn transcript_to_csv(records: &[PulseRecord], mapping: BitMapping) -> String {
    let mut out = String::with_capacity(records.len() * 24 + 64);
    out.push_str(TRANSCRIPT_CSV_HEADER);
    out.push('\n');
    for rec in records {
        let (outcome, class, alice, bob) = match rec.outcome {
            PulseOutcome::Lost => ("lost".to_string(), "lost", String::new(), String::new()),
            PulseOutcome::Dual(j) => match conclusive_map_with(rec.trit, j, mapping) {
                SiftOutcome::Conclusive(bit) => (
                    j.to_string(),
                    "conclusive",
                    rec.bit.to_string(),
                    bit.to_string(),
                ),
                _ => (j.to_string(), "inconclusive", String::new(), String::new()),
            },
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            rec.index, rec.trit, rec.bit, rec.sent_state, outcome, class, alice, bob
        ));
    }
    out
}
