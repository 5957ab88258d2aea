//! Forward/backward channel impairment at sample granularity: a per-component
//! integer delay followed by additive Gaussian noise.
//!
//! Randomness comes from ChaCha8 streams keyed by the configured seed
//! (stream 0 for noise, stream 1 for the delay walk). Gaussian samples use
//! the Marsaglia polar method on 53-bit uniforms; both draws of a pair are
//! used. Changing any of this changes every recorded trace.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("sample {got} out of order, expected {expected}")]
    OutOfOrderSample { expected: u64, got: u64 },
    #[error("invalid channel configuration: {0}")]
    InvalidConfig(String),
}

/// Noise variance, either shared by all components or given per component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Variance {
    Uniform(f64),
    PerComponent([f64; 3]),
}

impl Default for Variance {
    fn default() -> Self {
        Variance::Uniform(0.0)
    }
}

impl Variance {
    pub fn components(&self) -> [f64; 3] {
        match *self {
            Variance::Uniform(v) => [v; 3],
            Variance::PerComponent(v) => v,
        }
    }
}

/// Delay in samples, `d_i(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum DelayProfile {
    Constant {
        samples: usize,
    },
    /// Starts at `min`; each sample moves by -1, 0 or +1, clamped to `[min, max]`.
    RandomWalk {
        min: usize,
        max: usize,
    },
}

impl Default for DelayProfile {
    fn default() -> Self {
        DelayProfile::Constant { samples: 0 }
    }
}

impl DelayProfile {
    pub fn max_delay(&self) -> usize {
        match *self {
            DelayProfile::Constant { samples } => samples,
            DelayProfile::RandomWalk { max, .. } => max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub sigma2: Variance,
    pub delay: DelayProfile,
    pub seed: u64,
    /// Emitted until the first delayed sample arrives. `None` holds the
    /// first input.
    pub initial_hold: Option<[f64; 3]>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self::transparent()
    }
}

impl ChannelConfig {
    /// No delay, no noise.
    pub fn transparent() -> Self {
        Self {
            sigma2: Variance::Uniform(0.0),
            delay: DelayProfile::Constant { samples: 0 },
            seed: 0,
            initial_hold: None,
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        for v in self.sigma2.components() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ChannelError::InvalidConfig(format!(
                    "sigma2 must be finite and non-negative, got {v}"
                )));
            }
        }
        if let DelayProfile::RandomWalk { min, max } = self.delay {
            if min > max {
                return Err(ChannelError::InvalidConfig(format!(
                    "delay walk bounds reversed: min {min} > max {max}"
                )));
            }
        }
        if let Some(h) = self.initial_hold {
            if h.iter().any(|v| !v.is_finite()) {
                return Err(ChannelError::InvalidConfig(
                    "initial_hold must be finite".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn is_transparent(&self) -> bool {
        self.sigma2.components() == [0.0; 3] && self.delay.max_delay() == 0
    }
}

/// Gaussian source with a fixed, documented generation method.
#[derive(Debug, Clone)]
struct PolarGaussian {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl PolarGaussian {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0);
        Self { rng, spare: None }
    }

    fn uniform(&mut self) -> f64 {
        // 53 random bits mapped onto [-1, 1).
        let bits = self.rng.gen::<u64>() >> 11;
        (bits as f64) * (1.0 / (1u64 << 52) as f64) - 1.0
    }

    fn standard(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = self.uniform();
            let v = self.uniform();
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let scale = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * scale);
                return u * scale;
            }
        }
    }
}

/// Mutable state of one channel direction. Not shareable across threads
/// while stepping; distinct instances are independent.
#[derive(Debug, Clone)]
pub struct ChannelState {
    config: ChannelConfig,
    sigma: [f64; 3],
    history: Vec<[f64; 3]>,
    delays: [usize; 3],
    noise: PolarGaussian,
    walk: ChaCha8Rng,
    hold: Option<[f64; 3]>,
    next_n: u64,
}

impl ChannelState {
    pub fn new(config: ChannelConfig) -> Result<Self, ChannelError> {
        config.validate()?;
        let len = config.delay.max_delay() + 1;
        let mut walk = ChaCha8Rng::seed_from_u64(config.seed);
        walk.set_stream(1);
        let start = match config.delay {
            DelayProfile::Constant { samples } => samples,
            DelayProfile::RandomWalk { min, .. } => min,
        };
        Ok(Self {
            sigma: config.sigma2.components().map(f64::sqrt),
            history: vec![[0.0; 3]; len],
            delays: [start; 3],
            noise: PolarGaussian::new(config.seed),
            walk,
            hold: config.initial_hold,
            next_n: 0,
            config,
        })
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.config
    }

    /// Length of the history ring; fixed at construction.
    pub fn capacity(&self) -> usize {
        self.history.len()
    }

    /// Delays applied at the most recent step.
    pub fn current_delays(&self) -> [usize; 3] {
        self.delays
    }

    /// Push `input` (the sample at index `n`) and return the channel output
    /// at `n`. Indices must be 0, 1, 2, ...
    pub fn step(&mut self, input: [f64; 3], n: u64) -> Result<[f64; 3], ChannelError> {
        if n != self.next_n {
            return Err(ChannelError::OutOfOrderSample {
                expected: self.next_n,
                got: n,
            });
        }
        self.next_n += 1;
        let hold = *self.hold.get_or_insert(input);

        let len = self.history.len();
        self.history[(n % len as u64) as usize] = input;
        self.advance_delays(n);

        let mut out = [0.0; 3];
        for i in 0..3 {
            let d = self.delays[i] as u64;
            let noise = if self.sigma[i] > 0.0 {
                self.sigma[i] * self.noise.standard()
            } else {
                0.0
            };
            out[i] = if n < d {
                hold[i]
            } else {
                let v = self.history[((n - d) % len as u64) as usize][i];
                if self.sigma[i] > 0.0 {
                    v + noise
                } else {
                    v
                }
            };
        }
        Ok(out)
    }

    fn advance_delays(&mut self, n: u64) {
        if let DelayProfile::RandomWalk { min, max } = self.config.delay {
            if n == 0 {
                return;
            }
            for d in self.delays.iter_mut() {
                let step: i64 = self.walk.gen_range(-1..=1);
                *d = (*d as i64 + step).clamp(min as i64, max as i64) as usize;
            }
        }
    }
}

/// Run a whole sequence through a fresh channel.
pub fn run_channel(
    config: &ChannelConfig,
    input: &[[f64; 3]],
) -> Result<Vec<[f64; 3]>, ChannelError> {
    let mut state = ChannelState::new(config.clone())?;
    input
        .iter()
        .enumerate()
        .map(|(n, s)| state.step(*s, n as u64))
        .collect()
}
