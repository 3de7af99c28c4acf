//! Channel and eavesdropper models applied between Alice and Bob: Bernoulli
//! loss, depolarizing and Pauli mixtures, arbitrary weighted Kraus sets, and
//! intercept/resend strategies.
//!
//! A weighted Kraus set must satisfy Σ wᵢ Eᵢ†Eᵢ ≤ 1. A strict deficit is
//! interpreted as state-dependent loss: the simulator folds it into the Lost
//! outcome, matching a detector that fires only when a qubit arrives.

use crate::qubit::{
    apply_kraus, bob_povm, pauli_x, pauli_y, pauli_z, sample_povm, trine_dual, DensityMatrix,
    KrausOperator, Mat2, PureState,
};
use crate::rng::Stream;
use crate::{Error, Result, ALGEBRA_TOL};

/// One weighted branch of a Kraus mixture.
#[derive(Clone, Debug)]
pub struct KrausBranch {
    pub weight: f64,
    pub op: KrausOperator,
}

#[derive(Clone, Debug)]
enum AttackKind {
    /// Weighted Kraus mixture; `deficit` = 1 − Σ w E†E (PSD, possibly zero).
    Kraus {
        branches: Vec<KrausBranch>,
        deficit: Mat2,
    },
    /// Eve measures the trine POVM and resends `resend[j-1]` on outcome j.
    InterceptResend { resend: [PureState; 3] },
}

/// An eavesdropping channel: a Kraus mixture or an intercept/resend strategy,
/// optionally composed with Bernoulli qubit loss.
#[derive(Clone, Debug)]
pub struct AttackModel {
    kind: AttackKind,
    loss_prob: f64,
    warnings: Vec<String>,
}

/// Result of sending one qubit through the channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChannelOutput {
    /// No qubit arrives. `annihilated` marks state-dependent loss from a
    /// trace-decreasing Kraus set rather than Bernoulli loss.
    Lost { annihilated: bool },
    /// The (normalized) state Bob receives.
    State(PureState),
}

fn check_probability(what: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(Error::OutOfDomain {
            what,
            value: p,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(())
}

impl AttackModel {
    fn from_branches(branches: Vec<KrausBranch>, warnings: Vec<String>) -> Result<Self> {
        for b in &branches {
            if b.weight < 0.0 || !b.weight.is_finite() {
                return Err(Error::OutOfDomain {
                    what: "kraus branch weight",
                    value: b.weight,
                    lo: 0.0,
                    hi: f64::INFINITY,
                });
            }
        }
        let mut gram = Mat2::zero();
        for b in &branches {
            let m = b.op.matrix();
            gram = gram.add(&m.adjoint().mul(m).scale(b.weight));
        }
        let (_, hi) = gram.hermitian_eigenvalues();
        if hi > 1.0 + ALGEBRA_TOL {
            return Err(Error::ContractionViolated { eigenvalue: hi });
        }
        let deficit = Mat2::identity().sub(&gram);
        Ok(AttackModel {
            kind: AttackKind::Kraus { branches, deficit },
            loss_prob: 0.0,
            warnings,
        })
    }

    /// The identity channel: no eavesdropping, no loss.
    pub fn none() -> Self {
        AttackModel::from_branches(
            vec![KrausBranch {
                weight: 1.0,
                op: KrausOperator::identity(),
            }],
            Vec::new(),
        )
        .expect("identity is a contraction")
    }

    /// Pure Bernoulli loss with probability `q`.
    pub fn loss(q: f64) -> Result<Self> {
        AttackModel::none().with_loss(q)
    }

    /// The depolarizing channel ρ ↦ (1−p)ρ + (p/3) Σ σ_a ρ σ_a. Bloch vectors
    /// contract by η = 1 − 4p/3, so p > 3/4 over-rotates (η < 0); such p is
    /// accepted with a warning.
    pub fn depolarizing(p: f64) -> Result<Self> {
        check_probability("depolarizing p", p)?;
        let mut warnings = Vec::new();
        if p > 0.75 {
            warnings.push(format!(
                "depolarizing p = {p} exceeds 3/4: Bloch contraction eta = {} is negative",
                1.0 - 4.0 * p / 3.0
            ));
        }
        AttackModel::pauli_weights(1.0 - p, p / 3.0, p / 3.0, p / 3.0, warnings)
    }

    /// The other common depolarizing parameterization, ρ ↦ (1−p)ρ + p·1/2:
    /// the state is replaced by the maximally mixed state with probability p,
    /// so Bloch vectors contract by η = 1 − p. Kept separately named because
    /// cross-protocol threshold figures are sensitive to which convention a
    /// given p refers to.
    pub fn depolarizing_replacement(p: f64) -> Result<Self> {
        check_probability("depolarizing replacement p", p)?;
        AttackModel::pauli_weights(1.0 - 0.75 * p, p / 4.0, p / 4.0, p / 4.0, Vec::new())
    }

    /// General Pauli mixture with flip probabilities (p_x, p_y, p_z).
    pub fn pauli_mixture(px: f64, py: f64, pz: f64) -> Result<Self> {
        for (what, p) in [("p_x", px), ("p_y", py), ("p_z", pz)] {
            if p < 0.0 || !p.is_finite() {
                return Err(Error::OutOfDomain {
                    what: "pauli weight",
                    value: p,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
            let _ = what;
        }
        let rest = 1.0 - px - py - pz;
        if rest < -ALGEBRA_TOL {
            return Err(Error::OutOfDomain {
                what: "p_x + p_y + p_z",
                value: px + py + pz,
                lo: 0.0,
                hi: 1.0,
            });
        }
        AttackModel::pauli_weights(rest.max(0.0), px, py, pz, Vec::new())
    }

    fn pauli_weights(pi: f64, px: f64, py: f64, pz: f64, warnings: Vec<String>) -> Result<Self> {
        let branches = vec![
            KrausBranch {
                weight: pi,
                op: KrausOperator::identity(),
            },
            KrausBranch {
                weight: px,
                op: KrausOperator::new(pauli_x())?,
            },
            KrausBranch {
                weight: py,
                op: KrausOperator::new(pauli_y())?,
            },
            KrausBranch {
                weight: pz,
                op: KrausOperator::new(pauli_z())?,
            },
        ];
        AttackModel::from_branches(branches, warnings)
    }

    /// A validated arbitrary weighted Kraus set. A strict trace deficit is
    /// kept and reported as state-dependent loss.
    pub fn custom_kraus(branches: Vec<(f64, KrausOperator)>) -> Result<Self> {
        let branches = branches
            .into_iter()
            .map(|(weight, op)| KrausBranch { weight, op })
            .collect();
        AttackModel::from_branches(branches, Vec::new())
    }

    /// Intercept/resend with an explicit resend map: Eve measures the trine
    /// POVM and resends `resend[j-1]` (unit norm required) on outcome j.
    pub fn intercept_resend(resend: [PureState; 3]) -> Result<Self> {
        for s in &resend {
            let n = s.norm_sq();
            if (n - 1.0).abs() > ALGEBRA_TOL {
                return Err(Error::NonUnitResendState(n));
            }
        }
        Ok(AttackModel {
            kind: AttackKind::InterceptResend { resend },
            loss_prob: 0.0,
            warnings: Vec::new(),
        })
    }

    /// The canonical dual-resend strategy: outcome j ↦ ψ̄_j.
    pub fn intercept_resend_dual() -> Self {
        let resend = [
            trine_dual(1).expect("fixed index"),
            trine_dual(2).expect("fixed index"),
            trine_dual(3).expect("fixed index"),
        ];
        AttackModel::intercept_resend(resend).expect("duals are unit norm")
    }

    /// Composes Bernoulli loss with probability `q` on top of the model.
    pub fn with_loss(mut self, q: f64) -> Result<Self> {
        check_probability("loss probability", q)?;
        self.loss_prob = q;
        Ok(self)
    }

    pub fn loss_prob(&self) -> f64 {
        self.loss_prob
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn is_intercept_resend(&self) -> bool {
        matches!(self.kind, AttackKind::InterceptResend { .. })
    }

    /// The trace deficit 1 − Σ w E†E interpreted as state-dependent loss;
    /// `None` when the Kraus set is trace-preserving. Intercept/resend is
    /// always trace-preserving.
    pub fn loss_deficit(&self) -> Option<Mat2> {
        match &self.kind {
            AttackKind::Kraus { deficit, .. } => {
                let (_, hi) = deficit.hermitian_eigenvalues();
                if hi > ALGEBRA_TOL {
                    Some(*deficit)
                } else {
                    None
                }
            }
            AttackKind::InterceptResend { .. } => None,
        }
    }

    /// The model as a weighted Kraus list with intercept/resend expanded to
    /// its measure-and-resend form E_j = √(2/3)|resend_j⟩⟨ψ̄_j|. Bernoulli
    /// loss is not included.
    pub fn to_kraus_branches(&self) -> Vec<(f64, Mat2)> {
        match &self.kind {
            AttackKind::Kraus { branches, .. } => branches
                .iter()
                .map(|b| (b.weight, *b.op.matrix()))
                .collect(),
            AttackKind::InterceptResend { resend } => {
                let scale = (2.0f64 / 3.0).sqrt();
                (0..3)
                    .map(|j| {
                        let dual = trine_dual(j + 1).expect("fixed index");
                        (1.0, Mat2::outer(&resend[j].amps, &dual.amps).scale(scale))
                    })
                    .collect()
            }
        }
    }

    /// Sends one unit-norm state through the channel, drawing the Kraus (or
    /// Eve-measurement) branch first and the Bernoulli loss second from the
    /// given stream.
    pub fn apply(&self, s: &PureState, stream: &mut Stream) -> Result<ChannelOutput> {
        let u_branch = stream.next_f64();
        let u_loss = stream.next_f64();

        let post = match &self.kind {
            AttackKind::Kraus { branches, .. } => {
                let posts: Vec<PureState> =
                    branches.iter().map(|b| apply_kraus(&b.op, s)).collect();
                let probs: Vec<f64> = branches
                    .iter()
                    .zip(&posts)
                    .map(|(b, p)| b.weight * p.norm_sq())
                    .collect();
                let survival: f64 = probs.iter().sum();
                if survival <= 0.0 {
                    return Ok(ChannelOutput::Lost { annihilated: true });
                }
                let mut acc = 0.0;
                let mut chosen = None;
                for (k, p) in probs.iter().enumerate() {
                    acc += p;
                    if u_branch < acc {
                        chosen = Some(k);
                        break;
                    }
                }
                match chosen {
                    Some(k) => posts[k].normalized().expect("positive branch probability"),
                    // u_branch landed in the trace deficit: the state was
                    // absorbed by the channel.
                    None => return Ok(ChannelOutput::Lost { annihilated: true }),
                }
            }
            AttackKind::InterceptResend { resend } => {
                let rho = DensityMatrix::from_pure(s).map_err(|_| {
                    Error::InvalidState("intercept/resend input must be unit norm".into())
                })?;
                let j = sample_povm(&bob_povm(), &rho, u_branch)?;
                resend[j]
            }
        };

        if u_loss < self.loss_prob {
            return Ok(ChannelOutput::Lost { annihilated: false });
        }
        Ok(ChannelOutput::State(post))
    }

    /// Exact output density Σ wᵢ Eᵢ |s⟩⟨s| Eᵢ†, subnormalized by the survival
    /// probability of the Kraus set (Bernoulli loss is not applied).
    /// Intercept/resend is expanded to its measure-and-resend Kraus form.
    pub fn density(&self, s: &PureState) -> Mat2 {
        let mut out = Mat2::zero();
        for (w, e) in self.to_kraus_branches() {
            let post = e.mul_vec(&s.amps);
            out = out.add(&Mat2::outer(&post, &post).scale(w));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::{filter_op, trine_state};
    use crate::rng::{Stream, StreamDomain};

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol:e})");
    }

    #[test]
    fn depolarizing_zero_is_identity_channel() {
        let model = AttackModel::depolarizing(0.0).unwrap();
        let s = trine_state(2).unwrap();
        let rho = model.density(&s);
        assert!(rho.max_abs_diff(&s.projector()) <= ALGEBRA_TOL);
        assert!(model.warnings().is_empty());
    }

    #[test]
    fn depolarizing_three_quarters_is_maximally_mixing() {
        let model = AttackModel::depolarizing(0.75).unwrap();
        for j in 1..=3 {
            let rho = model.density(&trine_state(j).unwrap());
            assert!(rho.max_abs_diff(&Mat2::identity().scale(0.5)) <= ALGEBRA_TOL);
        }
    }

    #[test]
    fn depolarizing_bloch_contraction() {
        // output = η ρ + (1−η) 1/2 with η = 1 − 4p/3; p = 0.3 gives η = 0.6.
        let p = 0.3;
        let eta = 1.0 - 4.0 * p / 3.0;
        let model = AttackModel::depolarizing(p).unwrap();
        let s = trine_state(1).unwrap();
        let expected = s
            .projector()
            .scale(eta)
            .add(&Mat2::identity().scale(0.5 * (1.0 - eta)));
        assert!(model.density(&s).max_abs_diff(&expected) <= ALGEBRA_TOL);
    }

    #[test]
    fn depolarizing_replacement_contraction() {
        // η = 1 − p: full replacement at p = 1 and agreement with the
        // Pauli-mixture convention at p' = 3p/4.
        let p = 0.4;
        let model = AttackModel::depolarizing_replacement(p).unwrap();
        let s = trine_state(1).unwrap();
        let expected = s
            .projector()
            .scale(1.0 - p)
            .add(&Mat2::identity().scale(0.5 * p));
        assert!(model.density(&s).max_abs_diff(&expected) <= ALGEBRA_TOL);

        let equivalent = AttackModel::depolarizing(0.75 * p).unwrap();
        assert!(model
            .density(&s)
            .max_abs_diff(&equivalent.density(&s))
            .le(&ALGEBRA_TOL));

        let full = AttackModel::depolarizing_replacement(1.0).unwrap();
        assert!(full
            .density(&s)
            .max_abs_diff(&Mat2::identity().scale(0.5))
            .le(&ALGEBRA_TOL));
    }

    #[test]
    fn depolarizing_domain_and_warning() {
        assert!(AttackModel::depolarizing(-0.1).is_err());
        assert!(AttackModel::depolarizing(1.1).is_err());
        let m = AttackModel::depolarizing(0.9).unwrap();
        assert_eq!(m.warnings().len(), 1);
    }

    #[test]
    fn pauli_mixture_matches_depolarizing_branch_for_branch() {
        let p = 0.3;
        let a = AttackModel::pauli_mixture(p / 3.0, p / 3.0, p / 3.0).unwrap();
        let b = AttackModel::depolarizing(p).unwrap();
        let ab = a.to_kraus_branches();
        let bb = b.to_kraus_branches();
        assert_eq!(ab.len(), bb.len());
        for ((wa, ea), (wb, eb)) in ab.iter().zip(&bb) {
            assert_close(*wa, *wb, 1e-15);
            assert!(ea.max_abs_diff(eb) <= 1e-15);
        }
    }

    #[test]
    fn pauli_mixture_edge_cases() {
        let det = AttackModel::pauli_mixture(1.0, 0.0, 0.0).unwrap();
        let s = trine_state(1).unwrap();
        let out = det.density(&s);
        assert!(out.max_abs_diff(&trine_state(2).unwrap().projector()) <= ALGEBRA_TOL);
        let trivial = AttackModel::pauli_mixture(0.0, 0.0, 0.0).unwrap();
        assert!(trivial.density(&s).max_abs_diff(&s.projector()) <= ALGEBRA_TOL);
        assert!(AttackModel::pauli_mixture(0.6, 0.6, 0.0).is_err());
        assert!(AttackModel::pauli_mixture(-0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn custom_kraus_accepts_filter_and_reports_deficit() {
        let model = AttackModel::custom_kraus(vec![(1.0, filter_op())]).unwrap();
        let deficit = model.loss_deficit().expect("filter is trace-decreasing");
        let expected = trine_dual(3).unwrap().projector().scale(2.0 / 3.0);
        assert!(deficit.max_abs_diff(&expected) <= ALGEBRA_TOL);
    }

    #[test]
    fn custom_kraus_rejects_expansion() {
        let double = KrausOperator::new(Mat2::identity().scale(2.0));
        assert!(double.is_err());
        // Weighted sum can still violate the bound with individually valid ops.
        let err = AttackModel::custom_kraus(vec![
            (1.0, KrausOperator::identity()),
            (1.0, KrausOperator::identity()),
        ])
        .unwrap_err();
        match err {
            Error::ContractionViolated { eigenvalue } => assert_close(eigenvalue, 2.0, 1e-12),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn custom_kraus_trace_preserving_mixture() {
        let m = AttackModel::custom_kraus(vec![
            (0.5, KrausOperator::identity()),
            (0.5, KrausOperator::pauli_z()),
        ])
        .unwrap();
        assert!(m.loss_deficit().is_none());
    }

    #[test]
    fn apply_identity_returns_input() {
        let model = AttackModel::none();
        let s = trine_state(2).unwrap();
        let mut stream = Stream::new(1, StreamDomain::Battery, 0);
        match model.apply(&s, &mut stream).unwrap() {
            ChannelOutput::State(out) => {
                assert!(out.coincides_up_to_phase(&s, ALGEBRA_TOL))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn apply_full_depolarizing_averages_to_maximally_mixed() {
        let model = AttackModel::depolarizing(0.75).unwrap();
        let s = trine_state(1).unwrap();
        let n = 1_000_000u64;
        let mut mean = Mat2::zero();
        let mut stream = Stream::new(5, StreamDomain::Battery, 3);
        for _ in 0..n {
            match model.apply(&s, &mut stream).unwrap() {
                ChannelOutput::State(out) => mean = mean.add(&out.projector()),
                ChannelOutput::Lost { .. } => panic!("trace-preserving channel lost a qubit"),
            }
        }
        mean = mean.scale(1.0 / n as f64);
        // 4σ elementwise: each matrix entry is an average of bounded terms
        // with variance ≤ 1/4 per sample.
        let tol = 4.0 * (0.25 / n as f64).sqrt();
        assert!(mean.max_abs_diff(&Mat2::identity().scale(0.5)) <= tol);
    }

    #[test]
    fn monte_carlo_matches_density_for_generic_mixture() {
        let model = AttackModel::custom_kraus(vec![
            (0.7, KrausOperator::identity()),
            (0.2, KrausOperator::pauli_x()),
            (0.1, KrausOperator::pauli_y()),
        ])
        .unwrap();
        let s = trine_state(3).unwrap();
        let exact = model.density(&s);
        let n = 1_000_000u64;
        let mut mean = Mat2::zero();
        let mut stream = Stream::new(6, StreamDomain::Battery, 4);
        for _ in 0..n {
            match model.apply(&s, &mut stream).unwrap() {
                ChannelOutput::State(out) => mean = mean.add(&out.projector()),
                ChannelOutput::Lost { .. } => {}
            }
        }
        mean = mean.scale(1.0 / n as f64);
        let tol = 4.0 * (0.25 / n as f64).sqrt();
        assert!(
            mean.max_abs_diff(&exact) <= tol,
            "{}",
            mean.max_abs_diff(&exact)
        );
    }

    #[test]
    fn intercept_resend_dual_on_trine_state() {
        // Eve on ψ_1 yields outcomes 2 and 3 with probability 1/2 each, so
        // Bob receives ψ̄_2 or ψ̄_3.
        let model = AttackModel::intercept_resend_dual();
        let s = trine_state(1).unwrap();
        let mut counts = [0u64; 3];
        let n = 100_000u64;
        let mut stream = Stream::new(8, StreamDomain::Battery, 5);
        for _ in 0..n {
            match model.apply(&s, &mut stream).unwrap() {
                ChannelOutput::State(out) => {
                    for j in 1..=3 {
                        if out.coincides_up_to_phase(&trine_dual(j).unwrap(), 1e-9) {
                            counts[j - 1] += 1;
                        }
                    }
                }
                ChannelOutput::Lost { .. } => panic!("lossless"),
            }
        }
        assert_eq!(counts[0], 0);
        let sigma = (0.25f64 / n as f64).sqrt();
        for (k, &count) in counts.iter().enumerate().skip(1) {
            let freq = count as f64 / n as f64;
            assert!((freq - 0.5).abs() <= 4.0 * sigma, "outcome {k}: {freq}");
        }
    }

    #[test]
    fn intercept_resend_rejects_non_unit_states() {
        let bad = [
            PureState::from_reals(0.5, 0.0),
            trine_dual(2).unwrap(),
            trine_dual(3).unwrap(),
        ];
        assert!(matches!(
            AttackModel::intercept_resend(bad),
            Err(Error::NonUnitResendState(_))
        ));
    }

    #[test]
    fn intercept_resend_kraus_expansion_is_trace_preserving() {
        let model = AttackModel::intercept_resend_dual();
        let mut gram = Mat2::zero();
        for (w, e) in model.to_kraus_branches() {
            gram = gram.add(&e.adjoint().mul(&e).scale(w));
        }
        assert!(gram.max_abs_diff(&Mat2::identity()) <= ALGEBRA_TOL);
    }

    #[test]
    fn loss_composition_preserves_conditional_state() {
        let model = AttackModel::depolarizing(0.2)
            .unwrap()
            .with_loss(0.4)
            .unwrap();
        let s = trine_state(1).unwrap();
        // density() excludes Bernoulli loss: identical with and without it.
        let base = AttackModel::depolarizing(0.2).unwrap().density(&s);
        assert!(model.density(&s).max_abs_diff(&base) <= 1e-15);

        let n = 200_000u64;
        let mut lost = 0u64;
        let mut stream = Stream::new(9, StreamDomain::Battery, 6);
        for _ in 0..n {
            if matches!(
                model.apply(&s, &mut stream).unwrap(),
                ChannelOutput::Lost { .. }
            ) {
                lost += 1;
            }
        }
        let freq = lost as f64 / n as f64;
        let sigma = (0.4f64 * 0.6 / n as f64).sqrt();
        assert!((freq - 0.4).abs() <= 4.0 * sigma, "loss freq {freq}");
    }

    #[test]
    fn annihilating_channel_reports_flagged_loss() {
        let zero = KrausOperator::new(Mat2::zero()).unwrap();
        let model = AttackModel::custom_kraus(vec![(1.0, zero)]).unwrap();
        let s = trine_state(1).unwrap();
        let mut stream = Stream::new(10, StreamDomain::Battery, 7);
        assert_eq!(
            model.apply(&s, &mut stream).unwrap(),
            ChannelOutput::Lost { annihilated: true }
        );
    }

    #[test]
    fn state_dependent_loss_from_filter_kraus() {
        // Single branch F: ψ̄_3 is annihilated with probability 2/3.
        let model = AttackModel::custom_kraus(vec![(1.0, filter_op())]).unwrap();
        let s = trine_dual(3).unwrap();
        let n = 100_000u64;
        let mut annihilated = 0u64;
        let mut stream = Stream::new(11, StreamDomain::Battery, 8);
        for _ in 0..n {
            if matches!(
                model.apply(&s, &mut stream).unwrap(),
                ChannelOutput::Lost { annihilated: true }
            ) {
                annihilated += 1;
            }
        }
        let freq = annihilated as f64 / n as f64;
        let sigma = (2.0f64 / 3.0 * 1.0 / 3.0 / n as f64).sqrt();
        assert!((freq - 2.0 / 3.0).abs() <= 4.0 * sigma, "{freq}");
        // {(1, F)} on ψ_1: output density has trace ‖Fψ_1‖² = 1/2.
        assert_close(
            model.density(&trine_state(1).unwrap()).trace().re,
            0.5,
            ALGEBRA_TOL,
        );
    }
}
