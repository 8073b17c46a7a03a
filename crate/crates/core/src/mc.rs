//! Event-level Monte Carlo of the local model with hidden-state-dependent
//! acceptance.
//!
//! Each event draws one of the four initial pair configurations uniformly,
//! realizes a like-flavor tag with probability P_i(t_a, t_b), and is accepted
//! with probability a_i. The fraction of events that are both like-flavor
//! and accepted estimates (1/4) sum a_i P_i.
//!
//! Events are generated in fixed-size blocks. Block `b` draws from a ChaCha8
//! stream keyed by (seed, b), so results do not depend on how blocks are
//! scheduled across threads.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::constants::OscillationParams;
use crate::error::{Error, Result};
use crate::lrm::{joint_probabilities, lrm_like_joint, EfficiencyWeights, InitialPair, RhoProfile};
use crate::qm::TimePair;

pub const BLOCK_SIZE: u64 = 1 << 16;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub params: OscillationParams,
    pub rho: RhoProfile,
    pub weights: EfficiencyWeights,
    pub t: TimePair,
    pub n_events: u64,
    pub seed: u64,
}

/// One generated event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EventRecord {
    pub initial_pair: InitialPair,
    pub like_flavor: bool,
    pub accepted: bool,
}

/// Tallies for one initial configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct PairCounts {
    pub drawn: u64,
    pub like: u64,
    pub accepted: u64,
    pub accepted_like: u64,
}

impl PairCounts {
    fn merge(self, o: PairCounts) -> PairCounts {
        PairCounts {
            drawn: self.drawn + o.drawn,
            like: self.like + o.like,
            accepted: self.accepted + o.accepted,
            accepted_like: self.accepted_like + o.accepted_like,
        }
    }

    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.drawn > 0).then(|| self.accepted as f64 / self.drawn as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimOutcome {
    /// Accepted like-flavor events over all events.
    pub estimate: f64,
    /// Binomial standard error of `estimate`.
    pub stderr: f64,
    pub n_events: u64,
    pub counts: [PairCounts; 4],
}

/// Probabilities driving the event stream, checked to be valid.
fn event_probabilities(config: &SimConfig) -> Result<([f64; 4], [f64; 4])> {
    if config.n_events == 0 {
        return Err(Error::InvalidParameter("n_events must be at least 1".into()));
    }
    let p = joint_probabilities(&config.params, &config.rho, config.t)?;
    for (i, &v) in p.iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::NotAProbability {
                pair: i + 1,
                value: v,
                t_a: config.t.t_a,
                t_b: config.t.t_b,
            });
        }
    }
    Ok((p, config.weights.at(config.t)?))
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

fn draw(rng: &mut ChaCha8Rng, p: &[f64; 4], a: &[f64; 4]) -> EventRecord {
    let i = (rng.next_u64() >> 62) as usize;
    let like_flavor = rng.random::<f64>() < p[i];
    let accepted = rng.random::<f64>() < a[i];
    EventRecord {
        initial_pair: InitialPair::ALL[i],
        like_flavor,
        accepted,
    }
}

fn run_block(seed: u64, block: u64, n: u64, p: &[f64; 4], a: &[f64; 4]) -> [PairCounts; 4] {
    let mut rng = block_rng(seed, block);
    let mut counts = [PairCounts::default(); 4];
    for _ in 0..n {
        let e = draw(&mut rng, p, a);
        let c = &mut counts[e.initial_pair.index() - 1];
        c.drawn += 1;
        c.like += e.like_flavor as u64;
        c.accepted += e.accepted as u64;
        c.accepted_like += (e.like_flavor && e.accepted) as u64;
    }
    counts
}

/// The first `limit` events of the stream, in order.
pub fn events(config: &SimConfig, limit: u64) -> Result<Vec<EventRecord>> {
    let (p, a) = event_probabilities(config)?;
    let n = limit.min(config.n_events);
    let mut out = Vec::with_capacity(n as usize);
    let mut block = 0;
    while (out.len() as u64) < n {
        let mut rng = block_rng(config.seed, block);
        let take = BLOCK_SIZE.min(n - out.len() as u64);
        out.extend((0..take).map(|_| draw(&mut rng, &p, &a)));
        block += 1;
    }
    Ok(out)
}

pub fn simulate(config: &SimConfig) -> Result<SimOutcome> {
    let (p, a) = event_probabilities(config)?;
    let n = config.n_events;
    let blocks = n.div_ceil(BLOCK_SIZE);
    let counts = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let size = BLOCK_SIZE.min(n - b * BLOCK_SIZE);
            run_block(config.seed, b, size, &p, &a)
        })
        .reduce(
            || [PairCounts::default(); 4],
            |x, y| [0, 1, 2, 3].map(|i| x[i].merge(y[i])),
        );
    let hits: u64 = counts.iter().map(|c| c.accepted_like).sum();
    let estimate = hits as f64 / n as f64;
    Ok(SimOutcome {
        estimate,
        stderr: (estimate * (1.0 - estimate) / n as f64).sqrt(),
        n_events: n,
        counts,
    })
}

/// Per-configuration acceptance of a simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcceptanceBias {
    /// Empirical acceptance rate per initial pair (None if never drawn).
    pub rates: [Option<f64>; 4],
    /// The weights the rates converge to.
    pub weights: [f64; 4],
    pub counts: [PairCounts; 4],
}

pub fn acceptance_bias_report(config: &SimConfig) -> Result<AcceptanceBias> {
    let out = simulate(config)?;
    Ok(AcceptanceBias {
        rates: out.counts.map(|c| c.acceptance_rate()),
        weights: config.weights.at(config.t)?,
        counts: out.counts,
    })
}

/// The value `simulate` estimates.
pub fn analytic_value(config: &SimConfig) -> Result<f64> {
    lrm_like_joint(&config.params, &config.rho, &config.weights, config.t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{species_params, Species};
    use crate::lrm::Preset;

    fn config(weights: [f64; 4], n: u64, seed: u64) -> SimConfig {
        let p = species_params(Species::Kaon);
        SimConfig {
            params: p,
            rho: RhoProfile::Zero,
            weights: EfficiencyWeights::constant(weights).unwrap(),
            t: TimePair::new(1.0 / p.gamma_s, 2.0 / p.gamma_s).unwrap(),
            n_events: n,
            seed,
        }
    }

    #[test]
    fn zero_weights_give_zero() {
        let out = simulate(&config([0.0; 4], 100_000, 1)).unwrap();
        assert_eq!(out.estimate, 0.0);
        assert_eq!(out.stderr, 0.0);
    }

    #[test]
    fn reproducible_stream() {
        let c = config(Preset::Fig3.weights(), 200_000, 42);
        assert_eq!(simulate(&c).unwrap(), simulate(&c).unwrap());
        assert_eq!(events(&c, 1000).unwrap(), events(&c, 1000).unwrap());
        let other = SimConfig { seed: 43, ..c.clone() };
        assert_ne!(simulate(&c).unwrap(), simulate(&other).unwrap());
    }

    #[test]
    fn stream_matches_counts() {
        // The sequential event stream and the blocked tallies agree.
        let c = config(Preset::Fig3.weights(), 150_000, 9);
        let evs = events(&c, u64::MAX).unwrap();
        assert_eq!(evs.len(), 150_000);
        let out = simulate(&c).unwrap();
        for pair in InitialPair::ALL {
            let drawn = evs.iter().filter(|e| e.initial_pair == pair).count() as u64;
            assert_eq!(drawn, out.counts[pair.index() - 1].drawn);
        }
        let hits = evs.iter().filter(|e| e.like_flavor && e.accepted).count() as u64;
        assert_eq!(hits, out.counts.iter().map(|c| c.accepted_like).sum::<u64>());
    }

    #[test]
    fn unit_weights_match_model() {
        let c = config([1.0; 4], 1_000_000, 2024);
        let out = simulate(&c).unwrap();
        let exact = analytic_value(&c).unwrap();
        assert!((out.estimate - exact).abs() < 4.0 * out.stderr, "{} vs {exact}", out.estimate);
    }

    #[test]
    fn acceptance_rates_follow_weights() {
        let c = config(Preset::Fig3.weights(), 400_000, 5);
        let r = acceptance_bias_report(&c).unwrap();
        let rates = r.rates.map(|x| x.unwrap());
        assert!(rates[0] > rates[1] && rates[1] > rates[3] && rates[3] > rates[2], "{rates:?}");
        for (rate, (w, c)) in rates.iter().zip(r.weights.iter().zip(&r.counts)) {
            let se = (w * (1.0 - w) / c.drawn as f64).sqrt();
            assert!((rate - w).abs() <= 5.0 * se + 1e-12);
        }

        let equal = acceptance_bias_report(&config([0.3; 4], 400_000, 6)).unwrap();
        for rate in equal.rates {
            assert!((rate.unwrap() - 0.3).abs() < 0.005);
        }
    }

    #[test]
    fn single_event() {
        let r = acceptance_bias_report(&config([0.5; 4], 1, 3)).unwrap();
        assert_eq!(r.counts.iter().map(|c| c.drawn).sum::<u64>(), 1);
        assert_eq!(r.rates.iter().filter(|x| x.is_some()).count(), 1);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(simulate(&config([0.5; 4], 0, 3)).is_err());
        // rho = 0 drives some P_i negative late on the kaon curve.
        let p = species_params(Species::Kaon);
        let c = SimConfig {
            t: TimePair::new(4.5 / p.gamma_s, 9.0 / p.gamma_s).unwrap(),
            ..config([0.5; 4], 10, 3)
        };
        assert!(matches!(simulate(&c), Err(Error::NotAProbability { .. })));
    }
}
