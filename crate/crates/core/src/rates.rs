//! Analytic and Monte Carlo coincidence-rate estimation: Poisson pair
//! statistics per pulse, per-photon detection efficiency, post-selection
//! success probabilities for double- and triple-pair emissions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use crate::detection::DetectionPattern;
use crate::error::{Error, Result};
use crate::exec::{indexed_map, indexed_map_seq, mix_seed};
use crate::experiments::{postselected_ghz, GhzParams};
use crate::photon_sources::poisson_pmf;

/// Rate parameters: pulse rate in 1/s, mean pairs per pulse, per-photon
/// collection-and-detection probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    pub pulse_rate: f64,
    pub pair_mean: f64,
    pub efficiency: f64,
}

impl RateParams {
    pub fn new(pulse_rate: f64, pair_mean: f64, efficiency: f64) -> Result<Self> {
        if !pulse_rate.is_finite() || pulse_rate < 0.0 {
            return Err(Error::invalid("pulse_rate", "must be finite and >= 0"));
        }
        if !pair_mean.is_finite() || pair_mean < 0.0 {
            return Err(Error::invalid("pair_mean", "must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&efficiency) {
            return Err(Error::invalid("efficiency", "must be in [0, 1]"));
        }
        Ok(RateParams {
            pulse_rate,
            pair_mean,
            efficiency,
        })
    }

    /// Paper-scale defaults: 7.6e7 pulses/s, 4e-4 pairs/pulse, 10% detection.
    pub fn paper_defaults() -> Self {
        RateParams {
            pulse_rate: 7.6e7,
            pair_mean: 4e-4,
            efficiency: 0.1,
        }
    }
}

/// Seeded Monte Carlo tally over a simulated run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountReport {
    pub duration_ms: u64,
    pub fourfold_double: u64,
    pub fourfold_triple: u64,
    pub singles: u64,
    pub twofolds: u64,
    pub seed: u64,
}

impl CountReport {
    pub fn duration_s(&self) -> f64 {
        self.duration_ms as f64 / 1e3
    }
}

/// Rate model with post-selection probabilities computed from the circuit
/// model rather than hardcoded.
#[derive(Debug, Clone)]
pub struct RateModel {
    pub params: RateParams,
    postselect_prob_double: f64,
    /// Sum over classical routing configurations of P(config) times the
    /// number of two-photon loss choices that leave exactly one photon per
    /// output; multiply by eta^4 (1 - eta)^2 for the fourfold probability.
    triple_cover_weight: f64,
}

impl RateModel {
    pub fn new(params: RateParams) -> Result<Self> {
        // quantum post-selection probability of the ideal zero-delay circuit
        let mut ghz = GhzParams::paper_defaults();
        ghz.source.pump_sigma = 0.0;
        ghz.mc_samples = 1;
        let (p_double, _) = postselected_ghz(&ghz, 0.0, 0.0)?;
        Ok(RateModel {
            params,
            postselect_prob_double: p_double,
            triple_cover_weight: triple_cover_weight(),
        })
    }

    /// Probability that an ideal double-pair emission passes the fourfold
    /// pattern (before detection efficiency).
    pub fn postselect_prob_double(&self) -> f64 {
        self.postselect_prob_double
    }

    /// Probability that a triple-pair emission yields the fourfold pattern,
    /// with two of the six photons lost (includes efficiency factors).
    pub fn postselect_prob_triple(&self) -> f64 {
        let eta = self.params.efficiency;
        self.triple_cover_weight * eta.powi(4) * (1.0 - eta) * (1.0 - eta)
    }

    /// Double-pair contribution to the fourfold probability per pulse.
    pub fn double_term(&self) -> f64 {
        poisson_pmf(self.params.pair_mean, 2)
            * self.postselect_prob_double
            * self.params.efficiency.powi(4)
    }

    /// Triple-pair contribution to the fourfold probability per pulse.
    pub fn triple_term(&self) -> f64 {
        poisson_pmf(self.params.pair_mean, 3) * self.postselect_prob_triple()
    }

    pub fn fourfold_prob_per_pulse(&self) -> f64 {
        self.double_term() + self.triple_term()
    }

    /// Expected fourfold coincidences per second.
    pub fn expected_fourfold_rate(&self) -> f64 {
        self.params.pulse_rate * self.fourfold_prob_per_pulse()
    }

    /// Mean pairs per pulse for which the double-pair term alone reaches
    /// `target` fourfold probability per pulse. Fixed-point iteration on the
    /// Poisson factor.
    pub fn pair_mean_for_fourfold_prob(
        target: f64,
        efficiency: f64,
        postselect_prob_double: f64,
    ) -> Result<f64> {
        if target <= 0.0 || efficiency <= 0.0 || postselect_prob_double <= 0.0 {
            return Err(Error::invalid(
                "target",
                "target, efficiency and postselect probability must be > 0",
            ));
        }
        let scale = postselect_prob_double * efficiency.powi(4);
        let mut mu = (2.0 * target / scale).sqrt();
        for _ in 0..32 {
            mu = (2.0 * target / (scale * (-mu).exp())).sqrt();
        }
        Ok(mu)
    }

    /// Monte Carlo simulation of `duration_s` seconds. Double- and
    /// triple-pair pulses are sampled explicitly (Poisson thinning over the
    /// full pulse train); singles and twofolds from single-pair pulses are
    /// tallied with exact Binomial statistics. Event batches run concurrently
    /// when the `parallel` feature is enabled; results are identical either
    /// way.
    pub fn simulate_counts(&self, duration_s: f64, seed: u64) -> Result<CountReport> {
        self.simulate_impl(duration_s, seed, true)
    }

    /// Sequential reference implementation of [`simulate_counts`].
    pub fn simulate_counts_seq(&self, duration_s: f64, seed: u64) -> Result<CountReport> {
        self.simulate_impl(duration_s, seed, false)
    }

    fn simulate_impl(&self, duration_s: f64, seed: u64, parallel: bool) -> Result<CountReport> {
        if !duration_s.is_finite() || duration_s <= 0.0 {
            return Err(Error::invalid("duration_s", "must be > 0"));
        }
        let eta = self.params.efficiency;
        let mu = self.params.pair_mean;
        let n_pulses = self.params.pulse_rate * duration_s;

        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0, 0));
        let n_double = sample_poisson(n_pulses * poisson_pmf(mu, 2), &mut rng);
        let n_triple = sample_poisson(n_pulses * poisson_pmf(mu, 3), &mut rng);
        let n_single = sample_poisson(n_pulses * poisson_pmf(mu, 1), &mut rng);

        // singles: each of the 2 photons of a single-pair pulse detected
        // independently; twofolds: both photons of a pair detected
        let singles = sample_binomial(2 * n_single, eta, &mut rng);
        let twofolds = sample_binomial(n_single, eta * eta, &mut rng);

        // double-pair fourfolds: all four photons detected, then the quantum
        // post-selection outcome
        let p_double = self.postselect_prob_double;
        let fourfold_double = batched_bernoulli(n_double, seed, 1, parallel, |rng| {
            (0..4).all(|_| rng.gen_bool(eta)) && rng.gen_bool(p_double)
        });

        // triple-pair fourfolds: classical routing of the six photons,
        // per-photon detection, fourfold requires the detected photons to
        // occupy the outputs one each
        let configs = triple_routing_table();
        let fourfold_triple = batched_bernoulli(n_triple, seed, 2, parallel, |rng| {
            let r: f64 = rng.gen();
            let mut acc = 0.0;
            let mut chosen = &configs[0].1;
            for (p, occ) in &configs {
                acc += p;
                if r < acc {
                    chosen = occ;
                    break;
                }
            }
            let mut detected = [0u8; 4];
            let mut n_detected = 0u32;
            for (path, &count) in chosen.iter().enumerate() {
                for _ in 0..count {
                    if rng.gen_bool(eta) {
                        detected[path] += 1;
                        n_detected += 1;
                    }
                }
            }
            n_detected == 4 && detected.iter().all(|&c| c == 1)
        });

        Ok(CountReport {
            duration_ms: (duration_s * 1e3).round() as u64,
            fourfold_double,
            fourfold_triple,
            singles,
            twofolds,
            seed,
        })
    }
}

fn sample_poisson(mean: f64, rng: &mut impl Rng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

fn sample_binomial(n: u64, p: f64, rng: &mut impl Rng) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    Binomial::new(n, p.min(1.0)).expect("valid p").sample(rng)
}

const BATCH: u64 = 4096;

/// Counts successes of `trial` over `n` independent events, batched so that
/// batches can run concurrently with per-batch deterministic RNG substreams.
/// Counts are additive, so the merge is order-independent.
fn batched_bernoulli<F>(n: u64, seed: u64, stream: u64, parallel: bool, trial: F) -> u64
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    if n == 0 {
        return 0;
    }
    let n_batches = n.div_ceil(BATCH) as usize;
    let run_batch = |batch: usize| {
        let lo = batch as u64 * BATCH;
        let hi = (lo + BATCH).min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, stream, batch as u64));
        let mut hits = 0u64;
        for _ in lo..hi {
            if trial(&mut rng) {
                hits += 1;
            }
        }
        hits
    };
    let hits = if parallel {
        indexed_map(n_batches, run_batch)
    } else {
        indexed_map_seq(n_batches, run_batch)
    };
    hits.into_iter().sum()
}

/// Exhaustive classical routing distribution for three pairs: probability
/// and occupation counts over the outputs (T, 1, 2, 3).
fn triple_routing_table() -> Vec<(f64, [u8; 4])> {
    // per-pair outcomes: (probability, [paths of its two photons])
    // pair branch HaVb: H -> T, V_b -> 2 or 3; branch VaHb: V_a -> 1 or 2,
    // H_b -> 1 or 3; each pair branch has probability 1/2
    let pair_outcomes: Vec<(f64, [usize; 2])> = vec![
        (0.25, [0, 2]), // T, 2
        (0.25, [0, 3]), // T, 3
        (0.125, [1, 1]),
        (0.125, [1, 3]),
        (0.125, [2, 1]),
        (0.125, [2, 3]),
    ];
    let mut table = Vec::new();
    for a in &pair_outcomes {
        for b in &pair_outcomes {
            for c in &pair_outcomes {
                let mut occ = [0u8; 4];
                for path in a.1.iter().chain(&b.1).chain(&c.1) {
                    occ[*path] += 1;
                }
                table.push((a.0 * b.0 * c.0, occ));
            }
        }
    }
    table
}

/// Sum over configurations of P(config) times the number of two-photon loss
/// choices leaving exactly one photon per output.
fn triple_cover_weight() -> f64 {
    triple_routing_table()
        .into_iter()
        .map(|(p, occ)| {
            if occ.contains(&0) {
                return 0.0;
            }
            // total 6 photons over 4 covered outputs: extras are either one
            // path with 3 (3 choices of the lost pair) or two paths with 2
            // (2 x 2 choices)
            let n_good: u64 = match occ.iter().filter(|&&c| c == 3).count() {
                1 => 3,
                0 => {
                    debug_assert_eq!(occ.iter().filter(|&&c| c == 2).count(), 2);
                    4
                }
                _ => unreachable!("six photons cannot give two triples over covered outputs"),
            };
            p * n_good as f64
        })
        .sum()
}

/// One fourfold pattern per the detection contract (used by callers wanting
/// the shared pattern definition).
pub fn fourfold_pattern() -> DetectionPattern {
    DetectionPattern::pass_through(&["T", "1", "2", "3"])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(pair_mean: f64, efficiency: f64) -> RateModel {
        RateModel::new(RateParams::new(7.6e7, pair_mean, efficiency).unwrap()).unwrap()
    }

    #[test]
    fn postselect_prob_double_comes_from_the_circuit() {
        let m = model(4e-4, 0.1);
        assert!((m.postselect_prob_double() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn zero_efficiency_gives_zero_rate() {
        let m = model(4e-4, 0.0);
        assert_eq!(m.fourfold_prob_per_pulse(), 0.0);
    }

    #[test]
    fn doubling_pair_mean_quadruples_the_double_term() {
        let m1 = model(2e-4, 0.1);
        let m2 = model(4e-4, 0.1);
        let ratio = m2.double_term() / m1.double_term();
        assert!((ratio - 4.0).abs() < 1e-2, "ratio {ratio}");
    }

    #[test]
    fn monotone_in_pair_mean_and_efficiency() {
        let base = model(4e-4, 0.1);
        assert!(model(8e-4, 0.1).fourfold_prob_per_pulse() > base.fourfold_prob_per_pulse());
        assert!(model(4e-4, 0.2).fourfold_prob_per_pulse() > base.fourfold_prob_per_pulse());
    }

    #[test]
    fn fourfold_vanishes_quadratically_vs_linear_twofold() {
        // fourfold ~ mu^2, pair (twofold) rate ~ mu
        let a = model(1e-4, 0.1);
        let b = model(1e-5, 0.1);
        let fourfold_ratio = a.fourfold_prob_per_pulse() / b.fourfold_prob_per_pulse();
        assert!((fourfold_ratio - 100.0).abs() / 100.0 < 0.05);
    }

    #[test]
    fn calibration_reproduces_target_probability() {
        let mu = RateModel::pair_mean_for_fourfold_prob(1e-10, 0.1, 0.25).unwrap();
        let m = model(mu, 0.1);
        assert!((m.double_term() - 1e-10).abs() / 1e-10 < 1e-9);
        // expected interval ~ 132 s at 7.6e7 pulses/s
        let interval: f64 = 1.0 / (7.6e7 * 1e-10);
        assert!((interval - 131.58).abs() < 0.1);
    }

    #[test]
    fn triple_cover_weight_is_sane() {
        let w = triple_cover_weight();
        assert!(w > 0.0 && w < 6.0, "cover weight {w}");
    }

    #[test]
    fn simulation_is_deterministic() {
        let m = model(0.02, 0.5);
        let a = m.simulate_counts(5.0, 99).unwrap();
        let b = m.simulate_counts(5.0, 99).unwrap();
        assert_eq!(a, b);
        let c = m.simulate_counts_seq(5.0, 99).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn simulation_matches_analytic_rate() {
        let m = model(0.02, 0.5);
        let duration = 2.0;
        let report = m.simulate_counts(duration, 7).unwrap();
        let expected = m.params.pulse_rate
            * duration
            * poisson_pmf(m.params.pair_mean, 2)
            * m.postselect_prob_double()
            * m.params.efficiency.powi(4);
        let sigma = expected.sqrt();
        let got = report.fourfold_double as f64;
        assert!(
            (got - expected).abs() < 3.0 * sigma,
            "got {got}, expected {expected} +- {sigma}"
        );
    }
}
