//! Ablation runner: paired evaluation of the full method against its
//! no-partition variant on identical seeds and layouts.

use super::build::{build_layout, build_scenario};
use super::config::ExperimentConfig;
use super::sweep::maddpg_config_from;
use super::{fmt6, resolve_zeta, write_csv, HarnessError, OutPaths};
use crate::agents::{run_episode, MaddpgTeam, Mode};
use crate::cost::{cross_server_cost, system_cost};
use crate::derive_seed;
use crate::env::Env;
use crate::partition::{hicut, Partition};
use std::path::{Path, PathBuf};

pub const ABLATE_HEADER: &str = "arm,dataset,seed,cost,cross_server_mJ";

fn load_team(
    dir: Option<&Path>,
    which: &str,
    config: &ExperimentConfig,
) -> Result<MaddpgTeam, HarnessError> {
    let dir = dir.ok_or_else(|| {
        HarnessError::MissingCheckpoint(format!("ablation needs a `{which}` config entry"))
    })?;
    MaddpgTeam::load(dir, maddpg_config_from(config), 0)
        .map_err(|e| HarnessError::MissingCheckpoint(format!("{which}: {e}")))
}

/// Evaluates both arms on every (dataset, seed) pair and writes
/// `ablate.csv` with per-run rows plus per-(arm, dataset) mean rows.
pub fn run_ablation(config: &ExperimentConfig, out: &OutPaths) -> Result<PathBuf, HarnessError> {
    let mut drlgo = load_team(config.checkpoint_drlgo.as_deref(), "checkpoint_drlgo", config)?;
    let mut drl_only = load_team(
        config.checkpoint_drl_only.as_deref(),
        "checkpoint_drl_only",
        config,
    )?;
    let slots = config.effective_slots();

    // Dataset list; an empty list falls back to the configured dataset
    // (or the synthetic generator).
    let datasets: Vec<(String, Option<PathBuf>)> = if config.ablate_datasets.is_empty() {
        vec![(config.dataset_name(), config.dataset_path.clone())]
    } else {
        config
            .ablate_datasets
            .iter()
            .map(|p| {
                (
                    p.file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| "dataset".into()),
                    Some(p.clone()),
                )
            })
            .collect()
    };

    let mut rows = Vec::new();
    for (name, path) in &datasets {
        let mut per_dataset_config = config.clone();
        per_dataset_config.dataset_path = path.clone();
        let mut sums = [[0.0f64; 2]; 2];
        for &seed in &config.seeds {
            let pair_seed = derive_seed(seed, &format!("ablate-{name}"));
            let scenario = build_scenario(config, slots, config.n_users, pair_seed)?;
            let layout = build_layout(
                &per_dataset_config,
                config.n_users,
                config.n_assoc,
                slots,
                pair_seed,
            )?;

            // Full arm: partitioned environment.
            let (partition, _) = hicut(&layout)?;
            let zeta = resolve_zeta(config, &scenario, &layout);
            let mut env = Env::reset(scenario.clone(), layout.clone(), partition, zeta)?;
            let decision = run_episode(&mut env, &mut drlgo, Mode::Eval)?.decision;
            let full_cost = system_cost(&scenario, &layout, &decision)?.cost;
            let full_cross = cross_server_cost(&scenario, &layout, &decision);

            // Ablated arm: single subgraph, no penalty.
            let mut env = Env::reset(
                scenario.clone(),
                layout.clone(),
                Partition::single(&layout),
                0.0,
            )?;
            let decision = run_episode(&mut env, &mut drl_only, Mode::Eval)?.decision;
            let only_cost = system_cost(&scenario, &layout, &decision)?.cost;
            let only_cross = cross_server_cost(&scenario, &layout, &decision);

            rows.push(format!(
                "drlgo,{name},{seed},{},{}",
                fmt6(full_cost),
                fmt6(full_cross)
            ));
            rows.push(format!(
                "drl_only,{name},{seed},{},{}",
                fmt6(only_cost),
                fmt6(only_cross)
            ));
            sums[0][0] += full_cost;
            sums[0][1] += full_cross;
            sums[1][0] += only_cost;
            sums[1][1] += only_cross;
        }
        let n = config.seeds.len() as f64;
        rows.push(format!(
            "drlgo,{name},mean,{},{}",
            fmt6(sums[0][0] / n),
            fmt6(sums[0][1] / n)
        ));
        rows.push(format!(
            "drl_only,{name},mean,{},{}",
            fmt6(sums[1][0] / n),
            fmt6(sums[1][1] / n)
        ));
    }

    let path = out.ablate_csv();
    write_csv(&path, ABLATE_HEADER, &rows)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::Method;
    use crate::harness::run_training;

    #[test]
    fn ablation_pairs_seeds_and_reports_means() {
        let dir = tempfile::tempdir().unwrap();

        // Train two tiny arms first.
        let mut train_config = ExperimentConfig::default();
        train_config.n_users = 6;
        train_config.n_assoc = 8;
        train_config.task_kb = 100.0;
        train_config.episodes = 2;
        train_config.batch_size = 8;
        train_config.hidden = vec![10, 10];
        train_config.user_slots = 8;
        train_config.method = Method::Drlgo;
        let full = run_training(&train_config, &OutPaths::new(&dir.path().join("full"))).unwrap();
        train_config.method = Method::DrlOnly;
        let only = run_training(&train_config, &OutPaths::new(&dir.path().join("only"))).unwrap();

        let mut config = train_config.clone();
        config.method = Method::Drlgo;
        config.seeds = vec![1, 2, 3];
        config.checkpoint_drlgo = Some(full.checkpoint_dir);
        config.checkpoint_drl_only = Some(only.checkpoint_dir);
        let out = OutPaths::new(&dir.path().join("ablate"));
        let path = run_ablation(&config, &out).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], ABLATE_HEADER);
        // 3 seeds x 2 arms + 2 mean rows.
        assert_eq!(lines.len(), 1 + 8);
        // Seeds appear once per arm: identical pairing.
        for seed in ["1", "2", "3"] {
            let hits = lines
                .iter()
                .filter(|l| l.split(',').nth(2) == Some(seed))
                .count();
            assert_eq!(hits, 2, "seed {seed} should appear in both arms");
        }
        assert_eq!(
            lines.iter().filter(|l| l.contains(",mean,")).count(),
            2
        );
    }

    #[test]
    fn missing_checkpoints_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let config = ExperimentConfig::default();
        let out = OutPaths::new(dir.path());
        let err = run_ablation(&config, &out).unwrap_err();
        assert!(matches!(err, HarnessError::MissingCheckpoint(_)));
    }
}
