//! Random environments `(ε_n, δ_n)`: finite-support laws, gamma margins and a
//! Markov-modulated example, all behind the seeded [`EnvStream`].

pub mod dist;
mod scalar;

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use dist::{gamma_sample, gig_log_density, gig_sample, GigSampler};
pub use scalar::ScalarLaw;

/// One draw of the buy rate `epsilon` and the sell rate `delta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvPair {
    pub epsilon: f64,
    pub delta: f64,
}

impl EnvPair {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && delta > 0.0 && epsilon.is_finite() && delta.is_finite()) {
            return Err(invalid(format!("rates must be positive, got ({epsilon}, {delta})")));
        }
        Ok(EnvPair { epsilon, delta })
    }

    /// Round-trip rate `γ = εδ`.
    #[inline]
    pub fn gamma(&self) -> f64 {
        self.epsilon * self.delta
    }

    pub fn swapped(&self) -> EnvPair {
        EnvPair {
            epsilon: self.delta,
            delta: self.epsilon,
        }
    }

    fn extent(&self) -> f64 {
        [self.epsilon, self.delta, 1.0 / self.epsilon, 1.0 / self.delta]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// A support point with its probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub pair: EnvPair,
    pub prob: f64,
}

/// The BERN(ε, δ; η) model: each rate is its low value or `high` with probability ½.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernSpec {
    pub eps_low: f64,
    pub delta_low: f64,
    pub high: f64,
}

impl BernSpec {
    pub fn new(eps_low: f64, delta_low: f64, high: f64) -> Result<Self> {
        let s = BernSpec {
            eps_low,
            delta_low,
            high,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !unit(self.eps_low) || !unit(self.delta_low) || !(self.high > 1.0 && self.high.is_finite()) {
            return Err(invalid(format!(
                "BERN needs eps_low, delta_low in (0,1) and high > 1, got ({}, {}, {})",
                self.eps_low, self.delta_low, self.high
            )));
        }
        Ok(())
    }

    /// `γ = (ε+η)(δ+η)/4`.
    pub fn gamma(&self) -> f64 {
        0.25 * (self.eps_low + self.high) * (self.delta_low + self.high)
    }
}

/// The four equally likely atoms of a BERN model.
pub fn bern_atoms(spec: &BernSpec) -> Result<Vec<Atom>> {
    spec.validate()?;
    let mut atoms = Vec::with_capacity(4);
    for &e in &[spec.eps_low, spec.high] {
        for &d in &[spec.delta_low, spec.high] {
            atoms.push(Atom {
                pair: EnvPair { epsilon: e, delta: d },
                prob: 0.25,
            });
        }
    }
    Ok(atoms)
}

/// Gamma margins with shape `h`: `ε ~ f_{h,2/r}`, `δ ~ f_{h,2/s}`, independent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GigSpec {
    pub shape_h: f64,
    pub rate_r: f64,
    pub rate_s: f64,
}

impl GigSpec {
    pub fn new(shape_h: f64, rate_r: f64, rate_s: f64) -> Result<Self> {
        if !(shape_h > 0.0 && rate_r > 0.0 && rate_s > 0.0) {
            return Err(invalid(format!(
                "gamma spec needs h, r, s > 0, got ({shape_h}, {rate_r}, {rate_s})"
            )));
        }
        Ok(GigSpec {
            shape_h,
            rate_r,
            rate_s,
        })
    }

    pub fn eps_scale(&self) -> f64 {
        2.0 / self.rate_r
    }

    pub fn delta_scale(&self) -> f64 {
        2.0 / self.rate_s
    }
}

/// Two regimes, each an i.i.d. atom law, switched by a Markov chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovSpec {
    pub regimes: [Vec<Atom>; 2],
    /// `switch[i]` is the probability of leaving regime `i` after a draw.
    pub switch: [f64; 2],
}

impl MarkovSpec {
    pub fn new(regimes: [Vec<Atom>; 2], switch: [f64; 2]) -> Result<Self> {
        for r in &regimes {
            check_atoms(r)?;
        }
        if !switch.iter().all(|&p| p > 0.0 && p <= 1.0) {
            return Err(invalid("regime switch probabilities must lie in (0, 1]"));
        }
        Ok(MarkovSpec { regimes, switch })
    }

    /// The shipped example: BERN(0.3,0.2;2) and BERN(0.6,0.5;1.5) regimes, sticky switching.
    pub fn example() -> Self {
        let a = bern_atoms(&BernSpec::new(0.3, 0.2, 2.0).unwrap()).unwrap();
        let b = bern_atoms(&BernSpec::new(0.6, 0.5, 1.5).unwrap()).unwrap();
        MarkovSpec::new([a, b], [0.1, 0.2]).unwrap()
    }

    pub fn stationary(&self) -> [f64; 2] {
        let s = self.switch[0] + self.switch[1];
        [self.switch[1] / s, self.switch[0] / s]
    }

    fn transition(&self, from: usize, to: usize) -> f64 {
        if from == to {
            1.0 - self.switch[from]
        } else {
            self.switch[from]
        }
    }
}

fn check_atoms(atoms: &[Atom]) -> Result<()> {
    if atoms.is_empty() {
        return Err(invalid("atom list is empty"));
    }
    let mut total = 0.0;
    for a in atoms {
        EnvPair::new(a.pair.epsilon, a.pair.delta)?;
        if !(a.prob > 0.0) {
            return Err(invalid("atom probabilities must be positive"));
        }
        total += a.prob;
    }
    if (total - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("atom probabilities sum to {total}, not 1")));
    }
    Ok(())
}

/// The law a base stream draws from.
#[derive(Clone, Debug, PartialEq)]
pub enum EnvLaw {
    Finite(Vec<Atom>),
    Gamma(GigSpec),
    Markov(MarkovSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StreamKind {
    FiniteSupport,
    GammaGig,
    CustomErgodic,
}

#[derive(Clone, Debug)]
enum Source {
    Base {
        law: Arc<EnvLaw>,
        rng: ChaCha8Rng,
        regime: usize,
    },
    /// Emits `(δ_n, ε_{n+1})` from the inner stream.
    Dual { inner: Box<EnvStream>, pending: EnvPair },
}

/// A seeded stationary ergodic source of [`EnvPair`]s.
///
/// Streams are single-consumer. [`EnvStream::fork`] derives an independent
/// stream for parallel use; replaying from the same seed reproduces the draws.
#[derive(Clone, Debug)]
pub struct EnvStream {
    source: Source,
    seed: u64,
    stream_id: u64,
    bound_c: f64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl EnvStream {
    fn base(law: EnvLaw, seed: u64, stream_id: u64) -> Self {
        let bound_c = match &law {
            EnvLaw::Finite(atoms) => atoms_bound(atoms),
            EnvLaw::Markov(m) => atoms_bound(&m.regimes[0]).max(atoms_bound(&m.regimes[1])),
            EnvLaw::Gamma(_) => f64::INFINITY,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        let regime = match &law {
            EnvLaw::Markov(m) => usize::from(rng.random::<f64>() >= m.stationary()[0]),
            _ => 0,
        };
        EnvStream {
            source: Source::Base {
                law: Arc::new(law),
                rng,
                regime,
            },
            seed,
            stream_id,
            bound_c,
        }
    }

    pub fn finite(atoms: Vec<Atom>, seed: u64) -> Result<Self> {
        check_atoms(&atoms)?;
        Ok(Self::base(EnvLaw::Finite(atoms), seed, 0))
    }

    pub fn bern(spec: &BernSpec, seed: u64) -> Result<Self> {
        Self::finite(bern_atoms(spec)?, seed)
    }

    pub fn constant(pair: EnvPair, seed: u64) -> Result<Self> {
        Self::finite(vec![Atom { pair, prob: 1.0 }], seed)
    }

    pub fn gamma(spec: &GigSpec, seed: u64) -> Result<Self> {
        GigSpec::new(spec.shape_h, spec.rate_r, spec.rate_s)?;
        Ok(Self::base(EnvLaw::Gamma(*spec), seed, 0))
    }

    pub fn markov(spec: MarkovSpec, seed: u64) -> Result<Self> {
        let spec = MarkovSpec::new(spec.regimes, spec.switch)?;
        Ok(Self::base(EnvLaw::Markov(spec), seed, 0))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Declared support bound `C` (infinite for gamma margins).
    pub fn bound_c(&self) -> f64 {
        self.bound_c
    }

    pub fn kind(&self) -> StreamKind {
        match &self.source {
            Source::Base { law, .. } => match **law {
                EnvLaw::Finite(_) => StreamKind::FiniteSupport,
                EnvLaw::Gamma(_) => StreamKind::GammaGig,
                EnvLaw::Markov(_) => StreamKind::CustomErgodic,
            },
            Source::Dual { inner, .. } => match inner.kind() {
                StreamKind::FiniteSupport if inner.is_iid() => StreamKind::FiniteSupport,
                StreamKind::GammaGig => StreamKind::GammaGig,
                _ => StreamKind::CustomErgodic,
            },
        }
    }

    /// Whether consecutive pairs are independent and identically distributed.
    pub fn is_iid(&self) -> bool {
        match &self.source {
            Source::Base { law, .. } => !matches!(**law, EnvLaw::Markov(_)),
            Source::Dual { inner, .. } => inner.is_iid(),
        }
    }

    /// Atom list of the one-step law, when it is finite.
    pub fn atoms(&self) -> Option<Vec<Atom>> {
        self.windows(1).ok().map(|w| {
            w.into_iter()
                .map(|(pairs, prob)| Atom { pair: pairs[0], prob })
                .collect()
        })
    }

    /// Gamma margins, looking through duals (the dual of independent gamma
    /// margins swaps their roles).
    pub fn gamma_spec(&self) -> Option<GigSpec> {
        match &self.source {
            Source::Base { law, .. } => match **law {
                EnvLaw::Gamma(g) => Some(g),
                _ => None,
            },
            Source::Dual { inner, .. } => inner.gamma_spec().map(|g| GigSpec {
                shape_h: g.shape_h,
                rate_r: g.rate_s,
                rate_s: g.rate_r,
            }),
        }
    }

    /// Independent stream derived from this one's seed and `index`.
    pub fn fork(&self, index: u64) -> EnvStream {
        let id = splitmix(self.stream_id ^ splitmix(index.wrapping_add(1)));
        match &self.source {
            Source::Base { law, .. } => {
                let mut s = Self::base((**law).clone(), self.seed, id);
                s.stream_id = id;
                s
            }
            Source::Dual { inner, .. } => dual_stream(inner.fork(index)),
        }
    }

    /// Fresh stream with the same law and a different seed.
    pub fn reseeded(&self, seed: u64) -> EnvStream {
        match &self.source {
            Source::Base { law, .. } => Self::base((**law).clone(), seed, 0),
            Source::Dual { inner, .. } => dual_stream(inner.reseeded(seed)),
        }
    }

    /// Next draw.
    pub fn next_pair(&mut self) -> EnvPair {
        let p = match &mut self.source {
            Source::Base { law, rng, regime } => match &**law {
                EnvLaw::Finite(atoms) => draw_atom(atoms, rng),
                EnvLaw::Gamma(g) => EnvPair {
                    epsilon: gamma_sample(g.shape_h, g.eps_scale(), rng),
                    delta: gamma_sample(g.shape_h, g.delta_scale(), rng),
                },
                EnvLaw::Markov(m) => {
                    let p = draw_atom(&m.regimes[*regime], rng);
                    if rng.random::<f64>() < m.switch[*regime] {
                        *regime = 1 - *regime;
                    }
                    p
                }
            },
            Source::Dual { inner, pending } => {
                let next = inner.next_pair();
                let out = EnvPair {
                    epsilon: pending.delta,
                    delta: next.epsilon,
                };
                *pending = next;
                out
            }
        };
        debug_assert!(p.extent() < self.bound_c, "draw {p:?} violates bound {}", self.bound_c);
        p
    }

    pub fn take_pairs(&mut self, n: usize) -> Vec<EnvPair> {
        (0..n).map(|_| self.next_pair()).collect()
    }

    /// Exact joint law of `k` consecutive stationary draws, with equal
    /// windows merged. Fails for continuous laws.
    pub fn windows(&self, k: usize) -> Result<Vec<(Vec<EnvPair>, f64)>> {
        let raw = match &self.source {
            Source::Base { law, .. } => base_windows(law, k)?,
            Source::Dual { inner, .. } => inner
                .windows(k + 1)?
                .into_iter()
                .map(|(w, p)| {
                    let d = (0..k)
                        .map(|i| EnvPair {
                            epsilon: w[i].delta,
                            delta: w[i + 1].epsilon,
                        })
                        .collect();
                    (d, p)
                })
                .collect(),
        };
        Ok(merge_windows(raw))
    }

    pub fn is_finite_support(&self) -> bool {
        self.bound_c.is_finite()
    }
}

impl Iterator for EnvStream {
    type Item = EnvPair;

    fn next(&mut self) -> Option<EnvPair> {
        Some(self.next_pair())
    }
}

/// The stream `(δ_n, ε_{n+1})`. For i.i.d. pairs with independent margins it
/// has the law of the margin-swapped stream.
pub fn dual_stream(mut stream: EnvStream) -> EnvStream {
    let pending = stream.next_pair();
    let bound_c = stream.bound_c;
    let seed = stream.seed;
    let stream_id = stream.stream_id;
    EnvStream {
        source: Source::Dual {
            inner: Box::new(stream),
            pending,
        },
        seed,
        stream_id,
        bound_c,
    }
}

fn atoms_bound(atoms: &[Atom]) -> f64 {
    atoms.iter().map(|a| a.pair.extent()).fold(1.0, f64::max) * (1.0 + 1e-9)
}

fn draw_atom(atoms: &[Atom], rng: &mut ChaCha8Rng) -> EnvPair {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for a in atoms {
        acc += a.prob;
        if u < acc {
            return a.pair;
        }
    }
    atoms[atoms.len() - 1].pair
}

fn base_windows(law: &EnvLaw, k: usize) -> Result<Vec<(Vec<EnvPair>, f64)>> {
    match law {
        EnvLaw::Gamma(_) => Err(Error::NeedsFiniteSupport),
        EnvLaw::Finite(atoms) => {
            let mut out: Vec<(Vec<EnvPair>, f64)> = vec![(Vec::new(), 1.0)];
            for _ in 0..k {
                let mut next = Vec::with_capacity(out.len() * atoms.len());
                for (w, p) in &out {
                    for a in atoms {
                        let mut w2 = w.clone();
                        w2.push(a.pair);
                        next.push((w2, p * a.prob));
                    }
                }
                out = next;
            }
            Ok(out)
        }
        EnvLaw::Markov(m) => {
            // Track the regime that generates the next draw.
            let pi = m.stationary();
            let mut out: Vec<(Vec<EnvPair>, usize, f64)> =
                vec![(Vec::new(), 0, pi[0]), (Vec::new(), 1, pi[1])];
            for _ in 0..k {
                let mut next = Vec::new();
                for (w, r, p) in &out {
                    for a in &m.regimes[*r] {
                        for to in 0..2 {
                            let mut w2 = w.clone();
                            w2.push(a.pair);
                            next.push((w2, to, p * a.prob * m.transition(*r, to)));
                        }
                    }
                }
                out = next;
            }
            Ok(out.into_iter().map(|(w, _, p)| (w, p)).collect())
        }
    }
}

fn merge_windows(raw: Vec<(Vec<EnvPair>, f64)>) -> Vec<(Vec<EnvPair>, f64)> {
    let mut map: BTreeMap<Vec<(u64, u64)>, (Vec<EnvPair>, f64)> = BTreeMap::new();
    for (w, p) in raw {
        let key = w.iter().map(|q| (q.epsilon.to_bits(), q.delta.to_bits())).collect();
        map.entry(key).or_insert_with(|| (w, 0.0)).1 += p;
    }
    map.into_values().collect()
}

/// One-step moments of the environment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    /// `E ε`.
    pub alpha: f64,
    /// `E δ`.
    pub beta: f64,
    /// `E εδ`.
    pub gamma: f64,
    /// `E 1/γ_0`.
    pub mean_inv_gamma: f64,
    /// `E ln γ_0`.
    pub mean_log_gamma: f64,
    pub cov_eps_delta: f64,
    /// Standard errors in the same order, present for Monte Carlo estimates.
    pub stderr: Option<[f64; 6]>,
}

/// Exact moments for finite-support streams; Monte Carlo with standard
/// errors when `budget` draws are supplied for continuous laws.
pub fn env_moments(stream: &EnvStream, budget: Option<usize>) -> Result<Moments> {
    if let Some(atoms) = stream.atoms() {
        let e = |f: &dyn Fn(&EnvPair) -> f64| atoms.iter().map(|a| a.prob * f(&a.pair)).sum::<f64>();
        let alpha = e(&|p| p.epsilon);
        let beta = e(&|p| p.delta);
        let gamma = e(&|p| p.gamma());
        return Ok(Moments {
            alpha,
            beta,
            gamma,
            mean_inv_gamma: e(&|p| 1.0 / p.gamma()),
            mean_log_gamma: e(&|p| p.gamma().ln()),
            cov_eps_delta: gamma - alpha * beta,
            stderr: None,
        });
    }
    let n = match budget {
        Some(n) if n >= 2 => n,
        _ => return Err(Error::UnboundedSupport),
    };
    let mut s = stream.fork(0x6d6f_6d65);
    let mut sums = [0.0f64; 6];
    let mut sq = [0.0f64; 6];
    for _ in 0..n {
        let p = s.next_pair();
        let g = p.gamma();
        let v = [p.epsilon, p.delta, g, 1.0 / g, g.ln(), 0.0];
        for i in 0..5 {
            sums[i] += v[i];
            sq[i] += v[i] * v[i];
        }
    }
    let nf = n as f64;
    let mean = |i: usize| sums[i] / nf;
    let se = |i: usize| ((sq[i] / nf - mean(i).powi(2)).max(0.0) / (nf - 1.0)).sqrt();
    let (alpha, beta, gamma) = (mean(0), mean(1), mean(2));
    // The covariance estimate inherits roughly the error of E εδ.
    Ok(Moments {
        alpha,
        beta,
        gamma,
        mean_inv_gamma: mean(3),
        mean_log_gamma: mean(4),
        cov_eps_delta: gamma - alpha * beta,
        stderr: Some([se(0), se(1), se(2), se(3), se(4), se(2)]),
    })
}
