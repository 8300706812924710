//! Dense score-table export and ingestion.
//!
//! The on-disk format is a CSV with a metadata line, a column header, and
//! one row per (context, item, label) cell:
//!
//! ```text
//! #contexts=4,items=12,labels=2
//! context,item,label,score,true_prob
//! 0,0,0,0.4132...,0.4132...
//! ```
//!
//! Preferences and distributions are not part of the table; they come from a
//! sidecar config in the flat key=value form of [`crate::config`]. This is
//! the offline-replay path: any external model's scores can be dropped in.

use std::fs;
use std::path::Path;

use crate::config::{parse_world_config, world_config_text};
use crate::error::{Error, Result};
use crate::world::{clamp_prob, World};

/// Writes the world's tensors as a dense score table. Floats are written in
/// shortest round-trip form, so export followed by ingest reproduces the
/// tensors bit for bit.
pub fn export_score_table(world: &World, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!(
        "#contexts={},items={},labels={}\n",
        world.n_contexts(),
        world.n_items(),
        world.n_labels()
    ));
    out.push_str("context,item,label,score,true_prob\n");
    for x in 0..world.n_contexts() {
        for j in 0..world.n_items() {
            for k in 0..world.n_labels() {
                out.push_str(&format!(
                    "{x},{j},{k},{},{}\n",
                    world.scorer_output(x, j, k),
                    world.outcome_prob(x, j, k)
                ));
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes the sidecar config next to an exported table.
pub fn export_sidecar_config(world: &World, path: &Path) -> Result<()> {
    fs::write(path, world_config_text(world.config()))?;
    Ok(())
}

/// Ingests a dense score table plus its sidecar config into a [`World`].
///
/// The table must contain exactly one row per (context, item, label) cell;
/// duplicates, gaps, out-of-range indices, and scores outside `[0,1]` are
/// reported with their line number. Values on the closed boundary are pulled
/// into the open interval the world requires.
pub fn ingest_score_table(table: &Path, sidecar: &Path) -> Result<World> {
    let text = fs::read_to_string(table)?;
    let ingest_err = |line: usize, message: String| Error::Ingest {
        path: table.to_path_buf(),
        line,
        message,
    };

    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| ingest_err(1, "empty file".into()))?;
    let dims = parse_header(header).map_err(|m| ingest_err(1, m))?;
    let (nx, nj, nk) = dims;
    let cells = nx * nj * nk;

    let mut scores = vec![0.0; cells];
    let mut probs = vec![0.0; cells];
    let mut seen = vec![false; cells];
    let mut n_rows = 0usize;

    for (i, line) in lines {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line == "context,item,label,score,true_prob" {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(ingest_err(line_no, format!("expected 5 fields, got {}", fields.len())));
        }
        let x: usize = parse_field(fields[0], "context").map_err(|m| ingest_err(line_no, m))?;
        let j: usize = parse_field(fields[1], "item").map_err(|m| ingest_err(line_no, m))?;
        let k: usize = parse_field(fields[2], "label").map_err(|m| ingest_err(line_no, m))?;
        let score: f64 = parse_field(fields[3], "score").map_err(|m| ingest_err(line_no, m))?;
        let prob: f64 = parse_field(fields[4], "true_prob").map_err(|m| ingest_err(line_no, m))?;

        if x >= nx || j >= nj || k >= nk {
            return Err(ingest_err(
                line_no,
                format!("index ({x},{j},{k}) outside ({nx},{nj},{nk})"),
            ));
        }
        for (name, v) in [("score", score), ("true_prob", prob)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ingest_err(line_no, format!("{name} {v} outside [0,1]")));
            }
        }
        let cell = (x * nj + j) * nk + k;
        if seen[cell] {
            return Err(ingest_err(line_no, format!("duplicate key ({x},{j},{k})")));
        }
        seen[cell] = true;
        scores[cell] = clamp_prob(score);
        probs[cell] = clamp_prob(prob);
        n_rows += 1;
    }

    if n_rows != cells {
        return Err(ingest_err(
            0,
            format!("table is not dense: {n_rows} rows, expected {cells}"),
        ));
    }

    let config = parse_world_config(&fs::read_to_string(sidecar)?)?;
    if config.n_contexts != nx || config.n_items != nj || config.n_labels != nk {
        return Err(Error::config(
            "sidecar",
            format!(
                "sidecar dims ({},{},{}) disagree with table header ({nx},{nj},{nk})",
                config.n_contexts, config.n_items, config.n_labels
            ),
        ));
    }
    World::from_parts(config, probs, scores)
}

fn parse_header(line: &str) -> std::result::Result<(usize, usize, usize), String> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| "header must start with '#'".to_string())?;
    let mut dims = [None::<usize>; 3];
    for part in body.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| format!("malformed header part `{part}`"))?;
        let slot = match key.trim() {
            "contexts" => 0,
            "items" => 1,
            "labels" => 2,
            other => return Err(format!("unknown header key `{other}`")),
        };
        dims[slot] = Some(
            value
                .trim()
                .parse()
                .map_err(|_| format!("bad header value `{value}`"))?,
        );
    }
    match dims {
        [Some(a), Some(b), Some(c)] => Ok((a, b, c)),
        _ => Err("header must set contexts, items, and labels".into()),
    }
}

fn parse_field<T: std::str::FromStr>(raw: &str, name: &str) -> std::result::Result<T, String> {
    raw.trim()
        .parse()
        .map_err(|_| format!("cannot parse {name} from `{raw}`"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::WorldConfig;

    fn config() -> WorldConfig {
        WorldConfig {
            n_contexts: 3,
            n_items: 5,
            n_labels: 2,
            group_prevalence: vec![0.8, 0.2],
            context_dist: vec![vec![0.5, 0.3, 0.2], vec![0.2, 0.3, 0.5]],
            true_prefs: vec![vec![0.9, 0.1], vec![0.1, 0.9]],
            miscalibration: 0.25,
            latent_dim: 2,
            seed: 33,
        }
    }

    #[test]
    fn export_then_ingest_reproduces_the_tensors() {
        let world = World::generate(&config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let table = dir.path().join("scores.csv");
        let sidecar = dir.path().join("world.config");
        export_score_table(&world, &table).unwrap();
        export_sidecar_config(&world, &sidecar).unwrap();

        let back = ingest_score_table(&table, &sidecar).unwrap();
        assert_eq!(&world, &back);
    }

    #[test]
    fn duplicate_keys_report_the_line() {
        let world = World::generate(&config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let table = dir.path().join("scores.csv");
        let sidecar = dir.path().join("world.config");
        export_score_table(&world, &table).unwrap();
        export_sidecar_config(&world, &sidecar).unwrap();

        let mut text = fs::read_to_string(&table).unwrap();
        let dup = text.lines().nth(2).unwrap().to_string();
        text.push_str(&dup);
        text.push('\n');
        fs::write(&table, text).unwrap();

        match ingest_score_table(&table, &sidecar) {
            Err(Error::Ingest { line, message, .. }) => {
                assert!(message.contains("duplicate"), "{message}");
                assert!(line > 2);
            }
            other => panic!("expected ingest error, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_scores_are_rejected() {
        let world = World::generate(&config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let table = dir.path().join("scores.csv");
        let sidecar = dir.path().join("world.config");
        export_score_table(&world, &table).unwrap();
        export_sidecar_config(&world, &sidecar).unwrap();

        let text = fs::read_to_string(&table).unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        lines[2] = "0,0,0,1.3,0.5".to_string();
        fs::write(&table, lines.join("\n")).unwrap();

        match ingest_score_table(&table, &sidecar) {
            Err(Error::Ingest { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("outside [0,1]"), "{message}");
            }
            other => panic!("expected ingest error, got {other:?}"),
        }
    }

    #[test]
    fn missing_rows_fail_the_density_check() {
        let world = World::generate(&config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let table = dir.path().join("scores.csv");
        let sidecar = dir.path().join("world.config");
        export_score_table(&world, &table).unwrap();
        export_sidecar_config(&world, &sidecar).unwrap();

        let text = fs::read_to_string(&table).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        fs::write(&table, lines[..lines.len() - 1].join("\n")).unwrap();

        match ingest_score_table(&table, &sidecar) {
            Err(Error::Ingest { message, .. }) => assert!(message.contains("dense"), "{message}"),
            other => panic!("expected ingest error, got {other:?}"),
        }
    }
}
