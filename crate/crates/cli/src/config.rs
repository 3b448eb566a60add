//! Experiment configuration: a TOML file overridden by command-line flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use collector::env::MarkovSpec;
use collector::{BernSpec, EnvPair, EnvStream, GigSpec, Policy};
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_SEED: u64 = 0x5eed_2024;
pub const SEED_VAR: &str = "COLLECTOR_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Two-point law BERN(eps, delta; eta).
    Bern,
    /// Independent gamma margins with shape h and rates r, s.
    Gamma,
    /// Two BERN regimes switched by a Markov chain.
    Markov,
    /// A single atom (eps, delta).
    Constant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum MethodArg {
    /// Transfer operator for finite i.i.d. laws, direct simulation otherwise.
    Auto,
    Transfer,
    Direct,
    Cf,
    CfDual,
    Ratio,
    Boundary,
    Gig,
    GigQuadrature,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamSection {
    pub kind: Option<Model>,
    pub eps_low: Option<f64>,
    pub delta_low: Option<f64>,
    pub high: Option<f64>,
    pub h: Option<f64>,
    pub r: Option<f64>,
    pub s: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    pub lambda: Option<f64>,
    pub theta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    pub methods: Option<Vec<MethodArg>>,
    pub iters: Option<u64>,
    pub rel_tol: Option<f64>,
    pub replications: Option<usize>,
    pub depth: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub resolution: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub csv: Option<PathBuf>,
    pub png: Option<PathBuf>,
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub stream: StreamSection,
    #[serde(default)]
    pub policy: PolicySection,
    #[serde(default)]
    pub estimator: EstimatorSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Flags shared by every experiment command.
#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// TOML config with [stream], [policy], [estimator], [grid], [output] sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Environment model [default: bern].
    #[arg(long, value_enum)]
    pub model: Option<Model>,
    /// Low buy rate of BERN, or the constant buy rate [default: 0.3].
    #[arg(long)]
    pub eps: Option<f64>,
    /// Low sell rate of BERN, or the constant sell rate [default: 0.2].
    #[arg(long)]
    pub delta: Option<f64>,
    /// High value of BERN [default: 2].
    #[arg(long)]
    pub eta: Option<f64>,
    /// Gamma shape [default: 4.5].
    #[arg(long)]
    pub h: Option<f64>,
    /// Gamma rate of the buy margin [default: 8].
    #[arg(long)]
    pub r: Option<f64>,
    /// Gamma rate of the sell margin [default: 8].
    #[arg(long)]
    pub s: Option<f64>,
    /// Stream seed; falls back to the config, then $COLLECTOR_SEED, then a fixed default.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run on one thread.
    #[arg(long)]
    pub sequential: bool,
}

/// Settings after merging flags over the file over defaults.
#[derive(Debug)]
pub struct Resolved {
    pub model: Model,
    pub eps: f64,
    pub delta: f64,
    pub eta: f64,
    pub h: f64,
    pub r: f64,
    pub s: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub file: FileConfig,
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("${SEED_VAR} is not an unsigned integer: {v:?}"))),
        Err(_) => Ok(None),
    }
}

impl CommonArgs {
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let st = &file.stream;
        let seed = match self.seed.or(st.seed) {
            Some(s) => s,
            None => env_seed()?.unwrap_or(DEFAULT_SEED),
        };
        Ok(Resolved {
            model: self.model.or(st.kind).unwrap_or(Model::Bern),
            eps: self.eps.or(st.eps_low).unwrap_or(0.3),
            delta: self.delta.or(st.delta_low).unwrap_or(0.2),
            eta: self.eta.or(st.high).unwrap_or(2.0),
            h: self.h.or(st.h).unwrap_or(4.5),
            r: self.r.or(st.r).unwrap_or(8.0),
            s: self.s.or(st.s).unwrap_or(8.0),
            seed,
            out: self.out.clone().or_else(|| file.output.csv.clone()),
            file,
        })
    }
}

impl Resolved {
    pub fn stream(&self) -> Result<EnvStream, CliError> {
        let s = match self.model {
            Model::Bern => BernSpec::new(self.eps, self.delta, self.eta).and_then(|b| EnvStream::bern(&b, self.seed)),
            Model::Gamma => GigSpec::new(self.h, self.r, self.s).and_then(|g| EnvStream::gamma(&g, self.seed)),
            Model::Markov => EnvStream::markov(MarkovSpec::example(), self.seed),
            Model::Constant => EnvPair::new(self.eps, self.delta).and_then(|p| EnvStream::constant(p, self.seed)),
        };
        s.map_err(|e| CliError::Usage(format!("stream: {e}")))
    }

    pub fn gig_spec(&self) -> Result<GigSpec, CliError> {
        GigSpec::new(self.h, self.r, self.s).map_err(|e| CliError::Usage(format!("stream: {e}")))
    }

    pub fn policy(&self, lambda: Option<f64>, theta: Option<f64>) -> Result<Policy, CliError> {
        let l = lambda.or(self.file.policy.lambda);
        let t = theta.or(self.file.policy.theta);
        match (l, t) {
            (Some(l), Some(t)) => Policy::new(l, t).map_err(|e| CliError::Usage(e.to_string())),
            _ => Err(CliError::Usage("a policy needs both --lambda and --theta".into())),
        }
    }
}
