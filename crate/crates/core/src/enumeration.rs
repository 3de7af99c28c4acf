//! Exact enumeration over the prepare-and-measure picture.
//!
//! For a given attack this walks every (trit, bit, channel branch, POVM
//! outcome) combination with exact probabilities, yielding closed-form
//! conclusive/inconclusive/error rates. It is the independent counterpart of
//! the entanglement-picture computation in [`crate::security`]: the two
//! routes share no code path beyond the basic linear algebra, so their
//! agreement is a real check.

use crate::channel::AttackModel;
use crate::protocol::{conclusive_map_with, sent_state_index, BitMapping, SiftOutcome};
use crate::qubit::{bob_povm, trine_state};
use crate::{Error, Result};

/// Exact per-run rates for an attack, averaged over uniform (r, b).
#[derive(Clone, Copy, Debug)]
pub struct EnumerationReport {
    /// Probability a pulse is lost (Bernoulli loss plus any Kraus deficit).
    pub p_lost: f64,
    /// Conclusive fraction among received pulses.
    pub p_conclusive: f64,
    /// Inconclusive fraction I among received pulses.
    pub p_inconclusive: f64,
    /// Error-free conclusive fraction among received pulses.
    pub p_good: f64,
    /// Error rate conditioned on a conclusive outcome.
    pub e_bit: f64,
}

/// Enumerates the attack exactly under the given outcome-to-bit convention.
pub fn enumerate_attack(model: &AttackModel, mapping: BitMapping) -> Result<EnumerationReport> {
    let povm = bob_povm();
    let branches = model.to_kraus_branches();

    // Joint probabilities over the (r, b) average, before Bernoulli loss.
    let mut p_good = 0.0;
    let mut p_err = 0.0;
    let mut p_inc = 0.0;
    let mut survival = 0.0;

    for r in 0..3u8 {
        for b in 0..2u8 {
            let sent = trine_state(sent_state_index(r, b) as usize)?;
            let mut density = crate::qubit::Mat2::zero();
            for (w, e) in &branches {
                let post = e.mul_vec(&sent.amps);
                density = density.add(&crate::qubit::Mat2::outer(&post, &post).scale(*w));
            }
            survival += density.trace().re / 6.0;
            for (k, effect) in povm.effects().iter().enumerate() {
                let pj = effect.mul(&density).trace().re / 6.0;
                match conclusive_map_with(r, k as u8 + 1, mapping) {
                    SiftOutcome::Conclusive(bit) => {
                        if bit == b {
                            p_good += pj;
                        } else {
                            p_err += pj;
                        }
                    }
                    SiftOutcome::Inconclusive => p_inc += pj,
                    SiftOutcome::Lost => unreachable!(),
                }
            }
        }
    }

    if survival <= 0.0 {
        return Err(Error::NoReceivedPulses);
    }
    let q = model.loss_prob();
    let p_lost = q + (1.0 - q) * (1.0 - survival);
    let p_conclusive = (p_good + p_err) / survival;
    if p_good + p_err <= 0.0 {
        return Err(Error::NoConclusiveEvents);
    }
    Ok(EnumerationReport {
        p_lost,
        p_conclusive,
        p_inconclusive: p_inc / survival,
        p_good: p_good / survival,
        e_bit: p_err / (p_good + p_err),
    })
}

/// Enumerates under the default exclusion convention.
pub fn enumerate(model: &AttackModel) -> Result<EnumerationReport> {
    enumerate_attack(model, BitMapping::Exclusion)
}
