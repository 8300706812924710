//! Flat key=value config files.
//!
//! One `key=value` pair per line; `#` starts a comment. Vectors are
//! comma-separated decimals; per-group matrices separate rows with `;`.
//! World keys name [`WorldConfig`] fields exactly. Experiment files add the
//! harness keys on top (see the README for the full key set).

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::experiment::{ExperimentConfig, WorldSource};
use crate::optim::{SearchSettings, Strategy};
use crate::pipeline::RetrievalPolicy;
use crate::world::WorldConfig;

fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut pairs = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}", i + 1), "expected key=value"))?;
        let key = key.trim().to_string();
        if pairs.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::config(key, "duplicate key"));
        }
    }
    Ok(pairs)
}

struct Fields {
    pairs: BTreeMap<String, String>,
}

impl Fields {
    fn take(&mut self, key: &str) -> Option<String> {
        self.pairs.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<String> {
        self.take(key)
            .ok_or_else(|| Error::config(key, "missing required key"))
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| Error::config(key, format!("cannot parse `{raw}`"))),
        }
    }

    fn parse_or<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    fn finish(self) -> Result<()> {
        if let Some(key) = self.pairs.into_keys().next() {
            return Err(Error::config(key, "unknown key"));
        }
        Ok(())
    }
}

fn parse_vector(key: &str, raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::config(key, format!("cannot parse `{v}` as a number")))
        })
        .collect()
}

fn parse_matrix(key: &str, raw: &str) -> Result<Vec<Vec<f64>>> {
    raw.split(';').map(|row| parse_vector(key, row)).collect()
}

fn parse_index_list(key: &str, raw: &str) -> Result<Vec<usize>> {
    raw.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::config(key, format!("cannot parse `{v}` as an index")))
        })
        .collect()
}

fn format_vector(v: &[f64]) -> String {
    v.iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn format_matrix(m: &[Vec<f64>]) -> String {
    m.iter()
        .map(|row| format_vector(row))
        .collect::<Vec<_>>()
        .join(";")
}

fn world_from_fields(fields: &mut Fields) -> Result<WorldConfig> {
    let config = WorldConfig {
        n_contexts: fields
            .parse("n_contexts")?
            .ok_or_else(|| Error::config("n_contexts", "missing required key"))?,
        n_items: fields
            .parse("n_items")?
            .ok_or_else(|| Error::config("n_items", "missing required key"))?,
        n_labels: fields
            .parse("n_labels")?
            .ok_or_else(|| Error::config("n_labels", "missing required key"))?,
        group_prevalence: parse_vector("group_prevalence", &fields.required("group_prevalence")?)?,
        context_dist: parse_matrix("context_dist", &fields.required("context_dist")?)?,
        true_prefs: parse_matrix("true_prefs", &fields.required("true_prefs")?)?,
        miscalibration: fields.parse_or("miscalibration", 0.0)?,
        latent_dim: fields.parse_or("latent_dim", 4)?,
        seed: fields.parse_or("seed", 0)?,
    };
    config.validate()?;
    Ok(config)
}

/// Parses a sidecar world config.
pub fn parse_world_config(text: &str) -> Result<WorldConfig> {
    let mut fields = Fields {
        pairs: parse_pairs(text)?,
    };
    let config = world_from_fields(&mut fields)?;
    fields.finish()?;
    Ok(config)
}

/// Serializes a world config to the sidecar format.
pub fn world_config_text(config: &WorldConfig) -> String {
    format!(
        "n_contexts={}\nn_items={}\nn_labels={}\ngroup_prevalence={}\ncontext_dist={}\ntrue_prefs={}\nmiscalibration={}\nlatent_dim={}\nseed={}\n",
        config.n_contexts,
        config.n_items,
        config.n_labels,
        format_vector(&config.group_prevalence),
        format_matrix(&config.context_dist),
        format_matrix(&config.true_prefs),
        config.miscalibration,
        config.latent_dim,
        config.seed,
    )
}

/// Parses a full experiment config: the world (inline or via ingest paths),
/// the retrieval policy, the strategy list, and the loop sizes.
pub fn parse_experiment_config(text: &str) -> Result<ExperimentConfig> {
    let mut fields = Fields {
        pairs: parse_pairs(text)?,
    };

    let world = match (fields.take("ingest_table"), fields.take("ingest_config")) {
        (Some(table), Some(sidecar)) => WorldSource::Ingest {
            table: PathBuf::from(table),
            sidecar: PathBuf::from(sidecar),
        },
        (None, None) => WorldSource::Generate(world_from_fields(&mut fields)?),
        _ => {
            return Err(Error::config(
                "ingest_table",
                "ingest_table and ingest_config must be provided together",
            ))
        }
    };

    let m = fields.parse_or("m", 20usize)?;
    let policy = match fields.take("policy").as_deref().unwrap_or("oracle_top_m") {
        "oracle_top_m" => RetrievalPolicy::oracle_top_m(m),
        "single_label_top_m" => {
            let label = fields
                .parse("policy_label")?
                .ok_or_else(|| Error::config("policy_label", "required for single_label_top_m"))?;
            RetrievalPolicy::single_label_top_m(m, label)
        }
        "random" => RetrievalPolicy::random(m),
        "group_degraded" => {
            let contexts = parse_index_list(
                "policy_target_contexts",
                &fields.required("policy_target_contexts")?,
            )?;
            let keep: f64 = fields
                .parse("policy_keep_fraction")?
                .ok_or_else(|| Error::config("policy_keep_fraction", "required for group_degraded"))?;
            RetrievalPolicy::group_degraded(m, contexts, keep)
        }
        other => {
            return Err(Error::config("policy", format!("unknown policy `{other}`")));
        }
    };

    let mut strategies = match fields.take("strategies") {
        None => vec![Strategy::RandomSearch, Strategy::Ei, Strategy::FairEhvi],
        Some(raw) => raw
            .split(',')
            .map(|name| match name.trim() {
                "random" => Ok(Strategy::RandomSearch),
                "ei" => Ok(Strategy::Ei),
                "fair_ehvi" => Ok(Strategy::FairEhvi),
                other => Err(Error::config(
                    "strategies",
                    format!("unknown strategy `{other}` (expected random, ei, fair_ehvi)"),
                )),
            })
            .collect::<Result<Vec<_>>>()?,
    };
    if let Some(gamma) = fields.parse::<f64>("eic_gamma")? {
        strategies.push(Strategy::ConstrainedEi { gamma });
    }

    let search = SearchSettings {
        q: fields.parse_or("q", 10usize)?,
        pool_size: fields.parse_or("pool_size", 512usize)?,
        n_mc: fields.parse_or("n_mc", 64usize)?,
        ..SearchSettings::default()
    };

    let config = ExperimentConfig {
        world,
        policy,
        strategies,
        n_trials: fields.parse_or("n_trials", 20usize)?,
        n_iterations: fields.parse_or("n_iterations", 20usize)?,
        batch_size: fields.parse_or("batch_size", 200usize)?,
        search,
        master_seed: fields.parse_or("master_seed", 42u64)?,
    };
    fields.finish()?;
    config.validate()?;
    Ok(config)
}
