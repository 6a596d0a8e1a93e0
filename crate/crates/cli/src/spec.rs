//! Strategy specifications and run setup shared by the subcommands.

use anyhow::{bail, Context, Result};
use parareach::{diagonal_template_sets, random_template_sets, ModelDef, Parallelotope,
    ReachConfig};
use std::str::FromStr;

/// One reachability strategy: the number of non-axis template sets and how
/// they are generated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrategySpec {
    Diagonal(usize),
    Random(usize),
    Dynamic(usize, usize),
}

impl StrategySpec {
    pub fn label(&self) -> String {
        match self {
            StrategySpec::Diagonal(k) => format!("static-diagonal={k}"),
            StrategySpec::Random(k) => format!("static-random={k}"),
            StrategySpec::Dynamic(l_lin, l_pca) => format!("dynamic={l_lin},{l_pca}"),
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, StrategySpec::Random(_))
    }
}

impl FromStr for StrategySpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = s
            .split_once('=')
            .with_context(|| format!("strategy '{s}' is missing '=': expected e.g. dynamic=2,3"))?;
        match kind {
            "static-diagonal" => Ok(StrategySpec::Diagonal(value.parse()?)),
            "static-random" => Ok(StrategySpec::Random(value.parse()?)),
            "dynamic" => {
                let (l_lin, l_pca) = value
                    .split_once(',')
                    .with_context(|| format!("dynamic strategy '{value}' needs L_LIN,L_PCA"))?;
                Ok(StrategySpec::Dynamic(l_lin.parse()?, l_pca.parse()?))
            }
            other => bail!("unknown strategy kind '{other}'"),
        }
    }
}

/// Builds the solver configuration for a strategy on a model.
pub fn build_config(
    strategy: &StrategySpec,
    model: &ModelDef,
    subdivision: u32,
    seed: u64,
) -> Result<ReachConfig> {
    let mut cfg = match strategy {
        StrategySpec::Diagonal(k) => {
            let sets = diagonal_template_sets(model.dim, *k, seed)?;
            ReachConfig::static_mode(model.default_steps, sets)
        }
        StrategySpec::Random(k) => {
            let sets = random_template_sets(model.dim, *k, seed);
            ReachConfig::static_mode(model.default_steps, sets)
        }
        StrategySpec::Dynamic(l_lin, l_pca) => {
            ReachConfig::dynamic_mode(model.default_steps, *l_lin, *l_pca)
        }
    };
    cfg.subdivision_depth = subdivision;
    cfg.rng_seed = seed;
    Ok(cfg)
}

/// Initial parallelotope from the model's box, optionally grown about its
/// center. A scale of exactly 1.0 uses the stored bounds verbatim;
/// zero-width coordinates stay zero-width at any scale.
pub fn initial_parallelotope(model: &ModelDef, scale: f64) -> Result<Parallelotope> {
    let (lows, highs): (Vec<f64>, Vec<f64>) = model
        .initial_box
        .iter()
        .map(|&(lo, hi)| {
            if scale == 1.0 || hi <= lo {
                (lo, hi)
            } else {
                let center = 0.5 * (lo + hi);
                let half = 0.5 * (hi - lo) * scale;
                (center - half, center + half)
            }
        })
        .unzip();
    Ok(Parallelotope::from_box(&lows, &highs)?)
}
