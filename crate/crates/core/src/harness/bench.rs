//! Partition benchmark: times the layer-cut partitioner against the
//! iterated min-cut baseline over synthetic sparse and non-sparse ladders.

use super::config::{ExperimentConfig, LadderPoint};
use super::{write_csv, HarnessError, OutPaths};
use crate::data::gen_synthetic;
use crate::derive_seed;
use crate::partition::{cut_edge_count, hicut, mincut_partition};
use std::path::PathBuf;
use std::time::Instant;

pub const BENCH_HEADER: &str = "algo,n_vertices,n_edges,runtime_ms,cut_edges";

/// Requested edge counts above the simple-graph maximum are clamped; the
/// row's `n_edges` records the clamped value actually generated.
pub fn clamp_edges(point: LadderPoint) -> LadderPoint {
    let max = point.n_vertices * point.n_vertices.saturating_sub(1) / 2;
    LadderPoint {
        n_vertices: point.n_vertices,
        n_edges: point.n_edges.min(max),
    }
}

fn median_ms(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        0.5 * (samples[n / 2 - 1] + samples[n / 2])
    }
}

/// One benchmark measurement.
#[derive(Debug, Clone)]
pub struct BenchRecord {
    pub algo: &'static str,
    pub n_vertices: usize,
    pub n_edges: usize,
    pub runtime_ms: f64,
    pub cut_edges: usize,
}

/// Times both partitioners on one generated instance, median over
/// `runs` repetitions.
pub fn bench_point(
    point: LadderPoint,
    n_servers: usize,
    weight_range: (i64, i64),
    runs: usize,
    seed: u64,
) -> Result<Vec<BenchRecord>, HarnessError> {
    let point = clamp_edges(point);
    let (layout, weights) = gen_synthetic(
        point.n_vertices,
        point.n_edges,
        weight_range,
        (1000.0, 1000.0),
        derive_seed(seed, &format!("bench-{}-{}", point.n_vertices, point.n_edges)),
    )?;

    let mut hicut_times = Vec::with_capacity(runs);
    let mut hicut_cut = 0;
    for _ in 0..runs {
        let start = Instant::now();
        let (partition, _) = hicut(&layout)?;
        hicut_times.push(start.elapsed().as_secs_f64() * 1e3);
        hicut_cut = cut_edge_count(&layout, &partition);
    }

    let mut mincut_times = Vec::with_capacity(runs);
    let mut mincut_cut = 0;
    for run in 0..runs {
        let start = Instant::now();
        let partition = mincut_partition(
            &layout,
            &weights,
            n_servers,
            derive_seed(seed, &format!("mincut-run{run}")),
        )?;
        mincut_times.push(start.elapsed().as_secs_f64() * 1e3);
        mincut_cut = cut_edge_count(&layout, &partition);
    }

    Ok(vec![
        BenchRecord {
            algo: "hicut",
            n_vertices: point.n_vertices,
            n_edges: point.n_edges,
            runtime_ms: median_ms(hicut_times),
            cut_edges: hicut_cut,
        },
        BenchRecord {
            algo: "mincut",
            n_vertices: point.n_vertices,
            n_edges: point.n_edges,
            runtime_ms: median_ms(mincut_times),
            cut_edges: mincut_cut,
        },
    ])
}

/// Runs the configured ladders and writes `bench.csv`. The runtime column
/// is a wall-clock measurement and is the one column that varies between
/// reruns; everything else is seed-determined.
pub fn run_partition_bench(
    config: &ExperimentConfig,
    out: &OutPaths,
) -> Result<PathBuf, HarnessError> {
    let mut rows = Vec::new();
    let ladders = config
        .bench_sparse
        .iter()
        .chain(config.bench_non_sparse.iter());
    for &point in ladders {
        let records = bench_point(
            point,
            config.bench_servers,
            (config.bench_weight_min, config.bench_weight_max),
            config.bench_runs.max(1),
            config.bench_seed,
        )?;
        for r in records {
            rows.push(format!(
                "{},{},{},{:.3},{}",
                r.algo, r.n_vertices, r.n_edges, r.runtime_ms, r.cut_edges
            ));
        }
    }
    let path = out.bench_csv();
    write_csv(&path, BENCH_HEADER, &rows)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamps_impossible_densities() {
        let clamped = clamp_edges(LadderPoint {
            n_vertices: 500,
            n_edges: 500_100,
        });
        assert_eq!(clamped.n_edges, 124_750);
    }

    #[test]
    fn bench_point_produces_both_rows() {
        let records = bench_point(
            LadderPoint {
                n_vertices: 200,
                n_edges: 800,
            },
            5,
            (1, 100),
            3,
            1,
        )
        .unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].algo, "hicut");
        assert_eq!(records[1].algo, "mincut");
        assert!(records.iter().all(|r| r.runtime_ms >= 0.0));
        assert!(records.iter().all(|r| r.n_edges == 800));
    }

    #[test]
    fn bench_csv_structure() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutPaths::new(dir.path());
        let mut config = ExperimentConfig::default();
        config.bench_sparse = vec![LadderPoint {
            n_vertices: 100,
            n_edges: 300,
        }];
        config.bench_non_sparse = vec![LadderPoint {
            n_vertices: 60,
            n_edges: 5_000,
        }];
        config.bench_runs = 1;
        config.bench_servers = 4;
        let path = run_partition_bench(&config, &out).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], BENCH_HEADER);
        assert_eq!(lines.len(), 1 + 4);
        // The dense point is clamped to the complete graph.
        assert!(lines[3].contains(",60,1770,"));
    }
}
