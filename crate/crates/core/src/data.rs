//! Dataset handling: a line-oriented citation-graph format, seeded
//! sub-scenario sampling, and synthetic weighted graphs for partitioner
//! benchmarks.
//!
//! Citation-graph file format (text, line oriented):
//! ```text
//! GRAPH <n_docs> <n_edges> <feature_dim> <n_classes>
//! <src> <dst>            (n_edges lines, 0-based, may repeat/reverse)
//! <label>                (n_docs lines)
//! ```

use crate::graph::GraphLayout;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("header declares {expected} {what}, file has {found}")]
    CountMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("cannot sample {requested} docs from a graph of {available}")]
    SampleTooLarge {
        requested: usize,
        available: usize,
    },
    #[error("{requested} edges exceed the simple-graph maximum {max} for {n} vertices")]
    TooManyEdges {
        requested: usize,
        max: usize,
        n: usize,
    },
}

/// A citation network: documents as vertices, citation links as undirected
/// deduplicated edges. Labels are carried along but never drive any cost.
#[derive(Debug, Clone, PartialEq)]
pub struct CitationGraph {
    pub n_docs: usize,
    pub edges: Vec<(usize, usize)>,
    pub feature_dim: usize,
    pub n_classes: usize,
    pub labels: Vec<u32>,
}

/// Parses the citation-graph format. Directed duplicates and self-citations
/// in the link list are dropped; the declared counts must match the body.
pub fn load_citation_graph(path: &Path) -> Result<CitationGraph, DataError> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let (line_no, header) = lines
        .next()
        .ok_or_else(|| DataError::Parse {
            line: 1,
            msg: "empty file".into(),
        })
        .and_then(|(i, r)| r.map(|s| (i + 1, s)).map_err(DataError::from))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "GRAPH" {
        return Err(DataError::Parse {
            line: line_no,
            msg: "expected header `GRAPH <n_docs> <n_edges> <feature_dim> <n_classes>`".into(),
        });
    }
    let parse_usize = |s: &str, line: usize| {
        s.parse::<usize>().map_err(|_| DataError::Parse {
            line,
            msg: format!("`{s}` is not a count"),
        })
    };
    let n_docs = parse_usize(fields[1], line_no)?;
    let n_edge_lines = parse_usize(fields[2], line_no)?;
    let feature_dim = parse_usize(fields[3], line_no)?;
    let n_classes = parse_usize(fields[4], line_no)?;

    let mut edge_set = BTreeSet::new();
    let mut edge_lines_read = 0usize;
    let mut labels = Vec::with_capacity(n_docs);
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if edge_lines_read < n_edge_lines {
            let mut it = trimmed.split_whitespace();
            let src = parse_usize(it.next().unwrap_or(""), line_no)?;
            let dst = it
                .next()
                .ok_or_else(|| DataError::Parse {
                    line: line_no,
                    msg: "edge line needs `<src> <dst>`".into(),
                })
                .and_then(|s| parse_usize(s, line_no))?;
            if it.next().is_some() {
                return Err(DataError::Parse {
                    line: line_no,
                    msg: "trailing fields on edge line".into(),
                });
            }
            if src >= n_docs || dst >= n_docs {
                return Err(DataError::Parse {
                    line: line_no,
                    msg: format!("edge ({src}, {dst}) outside document range"),
                });
            }
            if src != dst {
                edge_set.insert((src.min(dst), src.max(dst)));
            }
            edge_lines_read += 1;
        } else {
            if labels.len() == n_docs {
                return Err(DataError::Parse {
                    line: line_no,
                    msg: "unexpected content after the label block".into(),
                });
            }
            labels.push(trimmed.parse::<u32>().map_err(|_| DataError::Parse {
                line: line_no,
                msg: format!("`{trimmed}` is not a label"),
            })?);
        }
    }
    if edge_lines_read != n_edge_lines {
        return Err(DataError::CountMismatch {
            what: "edge lines",
            expected: n_edge_lines,
            found: edge_lines_read,
        });
    }
    if labels.len() != n_docs {
        return Err(DataError::CountMismatch {
            what: "labels",
            expected: n_docs,
            found: labels.len(),
        });
    }
    Ok(CitationGraph {
        n_docs,
        edges: edge_set.into_iter().collect(),
        feature_dim,
        n_classes,
        labels,
    })
}

/// Writes a graph in the same format (one directed line per stored edge).
pub fn save_citation_graph(graph: &CitationGraph, path: &Path) -> Result<(), DataError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        out,
        "GRAPH {} {} {} {}",
        graph.n_docs,
        graph.edges.len(),
        graph.feature_dim,
        graph.n_classes
    )?;
    for &(a, b) in &graph.edges {
        writeln!(out, "{a} {b}")?;
    }
    for &l in &graph.labels {
        writeln!(out, "{l}")?;
    }
    Ok(())
}

/// Task size rule: one kilobit per feature dimension, capped at 1500.
pub fn task_size_from_dim(feature_dim: usize) -> f64 {
    feature_dim.min(1500) as f64
}

/// Seeded sub-scenario sample: `n_docs` uniformly chosen documents with
/// their induced citation links, randomly thinned to at most `n_links`.
/// When the induced sample has fewer links than requested, `fill_links`
/// tops it up with synthetic links among the sampled documents.
/// Positions are drawn uniformly on the plane; every user gets the
/// dataset's dimension-derived task size.
#[allow(clippy::too_many_arguments)]
pub fn sample_scenario(
    graph: &CitationGraph,
    n_docs: usize,
    n_links: usize,
    plane: (f64, f64),
    slots: usize,
    fill_links: bool,
    seed: u64,
) -> Result<GraphLayout, DataError> {
    if n_docs > graph.n_docs {
        return Err(DataError::SampleTooLarge {
            requested: n_docs,
            available: graph.n_docs,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs: Vec<usize> = (0..graph.n_docs).collect();
    docs.shuffle(&mut rng);
    docs.truncate(n_docs);
    docs.sort_unstable();
    let mut vertex_of = vec![usize::MAX; graph.n_docs];
    for (v, &doc) in docs.iter().enumerate() {
        vertex_of[doc] = v;
    }

    let mut induced: Vec<(usize, usize)> = graph
        .edges
        .iter()
        .filter_map(|&(a, b)| {
            let (va, vb) = (vertex_of[a], vertex_of[b]);
            (va != usize::MAX && vb != usize::MAX).then_some((va.min(vb), va.max(vb)))
        })
        .collect();
    if induced.len() > n_links {
        induced.shuffle(&mut rng);
        induced.truncate(n_links);
        induced.sort_unstable();
    } else if fill_links && n_docs >= 2 {
        let max_edges = n_docs * (n_docs - 1) / 2;
        let target = n_links.min(max_edges);
        let mut have: BTreeSet<(usize, usize)> = induced.iter().copied().collect();
        while have.len() < target {
            let i = rng.gen_range(0..n_docs);
            let j = rng.gen_range(0..n_docs);
            if i != j {
                have.insert((i.min(j), i.max(j)));
            }
        }
        induced = have.into_iter().collect();
    }

    let positions: Vec<(f64, f64)> = (0..n_docs)
        .map(|_| (rng.gen_range(0.0..plane.0), rng.gen_range(0.0..plane.1)))
        .collect();
    let task_kb = vec![task_size_from_dim(graph.feature_dim); n_docs];
    GraphLayout::with_capacity(slots.max(n_docs), n_docs, &induced, &positions, &task_kb)
        .map_err(|e| DataError::Parse {
            line: 0,
            msg: format!("sampled layout invalid: {e}"),
        })
}

/// Seeded uniform simple graph with exactly `n_edges` edges and integer
/// weights in `weight_range` (inclusive). Edge slots are drawn without
/// replacement, so no rejection loops are involved.
pub fn gen_synthetic(
    n_vertices: usize,
    n_edges: usize,
    weight_range: (i64, i64),
    plane: (f64, f64),
    seed: u64,
) -> Result<(GraphLayout, Vec<i64>), DataError> {
    let max = n_vertices.saturating_mul(n_vertices.saturating_sub(1)) / 2;
    if n_edges > max {
        return Err(DataError::TooManyEdges {
            requested: n_edges,
            max,
            n: n_vertices,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Floyd's sampling: k distinct slots from [0, max) without rejection.
    let mut chosen: std::collections::HashSet<u64> =
        std::collections::HashSet::with_capacity(n_edges * 2);
    let max_u = max as u64;
    let k = n_edges as u64;
    for j in (max_u - k)..max_u {
        let t = rng.gen_range(0..=j);
        if !chosen.insert(t) {
            chosen.insert(j);
        }
    }
    let mut slots: Vec<u64> = chosen.into_iter().collect();
    slots.sort_unstable();

    // Slot -> pair decoding: slot s of row i covers pairs (i, i+1..n).
    let mut edges = Vec::with_capacity(n_edges);
    let mut row = 0u64;
    let mut row_start = 0u64;
    let n_u = n_vertices as u64;
    for s in slots {
        while s >= row_start + (n_u - 1 - row) {
            row_start += n_u - 1 - row;
            row += 1;
        }
        let col = row + 1 + (s - row_start);
        edges.push((row as usize, col as usize));
    }

    let weights: Vec<i64> = (0..n_edges)
        .map(|_| rng.gen_range(weight_range.0..=weight_range.1))
        .collect();
    let positions: Vec<(f64, f64)> = (0..n_vertices)
        .map(|_| (rng.gen_range(0.0..plane.0), rng.gen_range(0.0..plane.1)))
        .collect();
    let layout = GraphLayout::new(n_vertices, &edges, &positions, &vec![1.0; n_vertices])
        .expect("generated edges are valid by construction");
    // Reorder weights to match the layout's canonical edge order.
    let layout_edges = layout.edges();
    debug_assert_eq!(layout_edges.len(), n_edges);
    let mut order: std::collections::HashMap<(usize, usize), usize> =
        std::collections::HashMap::with_capacity(n_edges);
    for (idx, &e) in edges.iter().enumerate() {
        order.insert(e, idx);
    }
    let weights: Vec<i64> = layout_edges.iter().map(|e| weights[order[e]]).collect();
    Ok((layout, weights))
}
