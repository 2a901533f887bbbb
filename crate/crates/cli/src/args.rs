//! Command-line flags and the JSON config file that mirrors them.
//!
//! Every flag is optional at parse time so that a config file can supply it;
//! defaults are applied only after the file and the flags are merged.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Map, Value};

#[derive(Parser, Debug)]
#[command(
    name = "kext",
    version,
    about = "Upper bounds on distillable key and private capacity from k-unextendibility"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct GlobalArgs {
    /// JSON file with default values for any flag; flags given on the command line win.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Worker threads for grid evaluation (default: logical cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Solver tolerance (overrides KEXT_SOLVER_TOL).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Svg,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Largest pass probability of a privacy test over k-extendible states.
    PrivacyMax(PrivacyMaxArgs),
    /// One-shot key bound for isotropic states over an F grid.
    #[command(alias = "fig1")]
    KeyOneshot(KeyOneshotArgs),
    /// n-copy key bounds and rates for an isotropic state.
    #[command(alias = "fig2")]
    KeyNshot(KeyNshotArgs),
    /// Lower bound on the copies of an isotropic state needed for one secret bit.
    #[command(alias = "fig3")]
    MinCopies(MinCopiesArgs),
    /// n-use private capacity bounds for an erasure channel.
    #[command(alias = "fig4a")]
    Privcap(PrivcapArgs),
    /// Lower bound on the erasure channel uses needed for one private bit.
    #[command(alias = "fig4b")]
    MinUses(MinUsesArgs),
    /// Channel divergences and the capacity bounds they give.
    Channel(ChannelArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Control {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtMode {
    Twirled,
    Generators,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OneshotMethod {
    Sdp,
    Bernoulli,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelMethod {
    Hyp,
    Geo,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    Erasure,
    ChoiFile,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct PrivacyMaxArgs {
    /// Key dimension.
    #[arg(long)]
    pub d: Option<usize>,
    /// Number of B copies in the extension.
    #[arg(long)]
    pub k: Option<usize>,
    /// Dimension of Alice's shield (default 1 for the identity twist, 2 for a random one).
    #[arg(long)]
    pub shield_a: Option<usize>,
    /// Dimension of Bob's shield.
    #[arg(long)]
    pub shield_b: Option<usize>,
    /// Use the identity twisting unitary (the default).
    #[arg(long, conflicts_with = "random_twist")]
    pub identity_twist: bool,
    /// Draw Haar-random shield unitaries from --seed.
    #[arg(long)]
    pub random_twist: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Key register that controls the twist.
    #[arg(long, value_enum)]
    pub control: Option<Control>,
    /// Impose permutation invariance by averaging marginals or by generator constraints.
    #[arg(long, value_enum)]
    pub mode: Option<ExtMode>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct KeyOneshotArgs {
    /// Isotropic fidelity grid.
    #[arg(long)]
    #[serde(deserialize_with = "lenient")]
    pub fidelity: Option<String>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Extension orders, e.g. `2,3,inf`.
    #[arg(long)]
    #[serde(deserialize_with = "lenient")]
    pub k: Option<String>,
    /// Error tolerances.
    #[arg(long)]
    #[serde(deserialize_with = "lenient")]
    pub eps: Option<String>,
    #[arg(long, value_enum)]
    pub method: Option<OneshotMethod>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct KeyNshotArgs {
    #[arg(long)]
    pub fidelity: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    #[serde(deserialize_with = "lenient")]
    pub k: Option<String>,
    /// Copy counts, e.g. `1:120`.
    #[arg(long)]
    #[serde(deserialize_with = "lenient")]
    pub n: Option<String>,
    /// Use this per-copy sandwiched divergence instead of the isotropic hypothesis-testing path.
    #[arg(long)]
    pub per_copy_bits: Option<f64>,
    /// Rényi order of --per-copy-bits (default inf).
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct MinCopiesArgs {
    #[arg(long)]
    #[serde(deserialize_with = "lenient")]
    pub fidelity: Option<String>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    #[serde(deserialize_with = "lenient")]
    pub eps: Option<String>,
    #[arg(long)]
    #[serde(deserialize_with = "lenient")]
    pub k: Option<String>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct PrivcapArgs {
    /// Erasure probability.
    #[arg(long)]
    pub p: Option<f64>,
    /// Input dimension of the erasure channel (geo and max methods).
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    #[serde(deserialize_with = "lenient")]
    pub k: Option<String>,
    #[arg(long)]
    #[serde(deserialize_with = "lenient")]
    pub n: Option<String>,
    #[arg(long, value_enum)]
    pub method: Option<ChannelMethod>,
    /// Geometric order index, alpha = 1 + 2^-ell.
    #[arg(long)]
    pub ell: Option<u32>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct MinUsesArgs {
    #[arg(long)]
    #[serde(deserialize_with = "lenient")]
    pub p: Option<String>,
    #[arg(long)]
    #[serde(deserialize_with = "lenient")]
    pub eps: Option<String>,
    #[arg(long)]
    #[serde(deserialize_with = "lenient")]
    pub k: Option<String>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct ChannelArgs {
    #[arg(long, value_enum)]
    pub channel: Option<ChannelKind>,
    /// Erasure probability.
    #[arg(long)]
    pub p: Option<f64>,
    /// Input dimension of the erasure channel.
    #[arg(long)]
    pub d: Option<usize>,
    /// Choi matrix as JSON `{dim_in, dim_out, re, im}`.
    #[arg(long)]
    pub choi: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub method: Option<ChannelMethod>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub ell: Option<u32>,
    /// Channel uses for the geo and max bounds.
    #[arg(long)]
    #[serde(deserialize_with = "lenient")]
    pub n: Option<String>,
}

/// Accepts a string, a number, or an array of those (joined with commas).
fn lenient<'de, D: Deserializer<'de>>(de: D) -> Result<Option<String>, D::Error> {
    fn scalar(v: &Value) -> Option<String> {
        match v {
            Value::String(s) => Some(s.clone()),
            Value::Number(n) => Some(n.to_string()),
            _ => None,
        }
    }
    let v = Value::deserialize(de)?;
    match &v {
        Value::Null => Ok(None),
        Value::Array(items) => items
            .iter()
            .map(scalar)
            .collect::<Option<Vec<_>>>()
            .map(|parts| Some(parts.join(",")))
            .ok_or_else(|| serde::de::Error::custom("list entries must be strings or numbers")),
        other => scalar(other).map(Some).ok_or_else(|| serde::de::Error::custom("expected a string or number")),
    }
}

/// Overlay the flags that were given onto the config-file values and rebuild `T`.
pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, file: &Map<String, Value>) -> Result<T, String> {
    let given = serde_json::to_value(flags).map_err(|e| e.to_string())?;
    let Value::Object(given) = given else {
        return Err("flags did not serialize to an object".into());
    };
    let mut merged = Map::new();
    for (key, value) in file {
        if given.contains_key(key) {
            merged.insert(key.clone(), value.clone());
        }
    }
    for (key, value) in given {
        if !matches!(value, Value::Null | Value::Bool(false)) {
            merged.insert(key, value);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| format!("config: {e}"))
}

/// Keys that `T` understands, used to reject typos in a config file.
pub fn known_keys<T: Serialize + Default>() -> Vec<String> {
    match serde_json::to_value(T::default()) {
        Ok(Value::Object(m)) => m.keys().cloned().collect(),
        _ => Vec::new(),
    }
}
