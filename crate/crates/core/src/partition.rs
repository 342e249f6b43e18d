//! Graph partitioning: the hierarchical BFS layer-cut partitioner that
//! produces weakly associated subgraphs, an iterated s-t min-cut
//! partitioner used as a runtime/quality baseline, and cut metrics.

use crate::graph::GraphLayout;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PartitionError {
    #[error("start vertex {0} is inactive or already assigned")]
    InactiveStart(usize),
    #[error("layout has no active vertices")]
    EmptyGraph,
    #[error("at least 2 servers required, got {0}")]
    InsufficientServers(usize),
    #[error("partition invalid: {0}")]
    Invalid(String),
}

/// Disjoint subgraphs covering all active vertices. Subgraph order follows
/// discovery order; vertex lists are ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    subgraphs: Vec<Vec<usize>>,
    assignment: Vec<Option<usize>>,
}

impl Partition {
    fn from_assignment(assignment: Vec<Option<usize>>, n_subgraphs: usize) -> Self {
        let mut subgraphs = vec![Vec::new(); n_subgraphs];
        for (v, a) in assignment.iter().enumerate() {
            if let Some(c) = a {
                subgraphs[*c].push(v);
            }
        }
        Self {
            subgraphs,
            assignment,
        }
    }

    /// All active vertices of `layout` in a single subgraph.
    pub fn single(layout: &GraphLayout) -> Self {
        let mut assignment = vec![None; layout.capacity()];
        for v in layout.active_vertices() {
            assignment[v] = Some(0);
        }
        Partition::from_assignment(assignment, 1)
    }

    pub fn subgraphs(&self) -> &[Vec<usize>] {
        &self.subgraphs
    }

    pub fn len(&self) -> usize {
        self.subgraphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subgraphs.is_empty()
    }

    /// Subgraph index of a vertex, if assigned.
    pub fn subgraph_of(&self, v: usize) -> Option<usize> {
        self.assignment.get(v).copied().flatten()
    }

    /// Every active vertex in exactly one non-empty subgraph, and nothing else.
    pub fn validate(&self, layout: &GraphLayout) -> Result<(), PartitionError> {
        let mut seen = vec![false; layout.capacity()];
        for (c, part) in self.subgraphs.iter().enumerate() {
            if part.is_empty() {
                return Err(PartitionError::Invalid(format!("subgraph {c} is empty")));
            }
            for &v in part {
                if !layout.is_active(v) {
                    return Err(PartitionError::Invalid(format!(
                        "subgraph {c} contains inactive vertex {v}"
                    )));
                }
                if seen[v] {
                    return Err(PartitionError::Invalid(format!(
                        "vertex {v} assigned more than once"
                    )));
                }
                seen[v] = true;
                if self.assignment[v] != Some(c) {
                    return Err(PartitionError::Invalid(format!(
                        "assignment of {v} disagrees with subgraph list"
                    )));
                }
            }
        }
        for v in layout.active_vertices() {
            if !seen[v] {
                return Err(PartitionError::Invalid(format!("vertex {v} unassigned")));
            }
        }
        Ok(())
    }
}

/// Branch taken at a layer boundary during one layer-cut traversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutAction {
    /// Layer absorbed into the subgraph (first layer, or non-decreasing count).
    Continue,
    /// Strict decrease: layer recorded as the pending segment.
    RecordSeg,
    /// Strict increase after a recorded segment: segment flushed, traversal exits.
    FlushSegExit,
    /// No edges leave the layer: pending segment and layer flushed, traversal exits.
    TerminalFlush,
}

/// One audited traversal: the start vertex and the per-layer decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct CutTrace {
    pub start: usize,
    /// (layer number, edge count to the next layer, branch taken).
    pub layers: Vec<(usize, usize, CutAction)>,
}

impl CutTrace {
    /// The d-sequence across recorded layers.
    pub fn edge_counts(&self) -> Vec<usize> {
        self.layers.iter().map(|&(_, d, _)| d).collect()
    }

    /// Replays the branch conditions: records only on strict decrease,
    /// segment flushes only on a later strict increase with a pending
    /// segment, terminal flushes only at d = 0.
    pub fn check_sound(&self) -> Result<(), String> {
        let mut d_prev: Option<usize> = None;
        let mut seg_pending = false;
        for (idx, &(layer, d, action)) in self.layers.iter().enumerate() {
            if layer != idx + 1 {
                return Err(format!("layer numbering broken at entry {idx}"));
            }
            match action {
                CutAction::TerminalFlush => {
                    if d != 0 {
                        return Err(format!("terminal flush with d = {d} at layer {layer}"));
                    }
                    if idx + 1 != self.layers.len() {
                        return Err("terminal flush is not the last entry".into());
                    }
                }
                CutAction::Continue => {
                    if d == 0 {
                        return Err(format!("continue with d = 0 at layer {layer}"));
                    }
                    if let Some(p) = d_prev {
                        if d < p {
                            return Err(format!(
                                "continue despite decrease {p} -> {d} at layer {layer}"
                            ));
                        }
                        if seg_pending && d > p {
                            return Err(format!(
                                "continue despite increase past segment at layer {layer}"
                            ));
                        }
                    }
                    d_prev = Some(d);
                }
                CutAction::RecordSeg => {
                    let p = d_prev.ok_or_else(|| "record at the first layer".to_string())?;
                    if d >= p {
                        return Err(format!(
                            "record without strict decrease ({p} -> {d}) at layer {layer}"
                        ));
                    }
                    seg_pending = true;
                    d_prev = Some(d);
                }
                CutAction::FlushSegExit => {
                    let p = d_prev.ok_or_else(|| "flush at the first layer".to_string())?;
                    if !seg_pending {
                        return Err(format!("flush without recorded segment at layer {layer}"));
                    }
                    if d <= p {
                        return Err(format!(
                            "flush without strict increase ({p} -> {d}) at layer {layer}"
                        ));
                    }
                    if idx + 1 != self.layers.len() {
                        return Err("flush exit is not the last entry".into());
                    }
                }
            }
        }
        Ok(())
    }
}

/// BFS bookkeeping shared by the layer-cut calls of one `hicut` run.
struct LayerCutState {
    /// Discovery stamp per vertex: generation tag + BFS depth.
    seen_gen: Vec<u64>,
    depth: Vec<usize>,
    generation: u64,
    queue: std::collections::VecDeque<usize>,
}

impl LayerCutState {
    fn new(capacity: usize) -> Self {
        Self {
            seen_gen: vec![0; capacity],
            depth: vec![0; capacity],
            generation: 0,
            queue: std::collections::VecDeque::new(),
        }
    }

    fn seen(&self, v: usize) -> bool {
        self.seen_gen[v] == self.generation
    }

    fn mark(&mut self, v: usize, depth: usize) {
        self.seen_gen[v] = self.generation;
        self.depth[v] = depth;
    }
}

/// One hierarchical traversal cut from `start`, against the set of vertices
/// already assigned to earlier subgraphs.
///
/// The traversal walks BFS layers and counts `d_n`, the number of edges
/// leading from layer `n` to unassigned vertices of layer `n + 1`. At each
/// layer boundary: a strict decrease records the layer as the pending
/// segment; a later strict increase flushes the segment into the subgraph
/// and exits; `d_n = 0` flushes the segment plus the current layer and
/// exits. Layers with non-decreasing counts are absorbed and traversal
/// continues. Vertices traversed beyond the cut line stay unassigned.
pub fn layer_cut(
    layout: &GraphLayout,
    start: usize,
    assigned: &[bool],
) -> Result<(Vec<usize>, CutTrace), PartitionError> {
    if !layout.is_active(start) || assigned[start] {
        return Err(PartitionError::InactiveStart(start));
    }
    let mut state = LayerCutState::new(layout.capacity());
    let mut sub = Vec::new();
    state.generation = 1;
    layer_cut_inner(layout, start, assigned, &mut state, &mut sub)
        .map(|trace| (sub, trace))
}

fn layer_cut_inner(
    layout: &GraphLayout,
    start: usize,
    assigned: &[bool],
    state: &mut LayerCutState,
    subgraph: &mut Vec<usize>,
) -> Result<CutTrace, PartitionError> {
    let mut trace = CutTrace {
        start,
        layers: Vec::new(),
    };

    state.queue.clear();
    state.queue.push_back(start);
    state.mark(start, 1);
    subgraph.push(start);

    let mut layer = 1usize;
    let mut remaining_in_layer = 1usize;
    let mut d_prev = 0usize;
    let mut d_cur = 0usize;
    let mut v_cur: Vec<usize> = Vec::new();
    let mut v_seg: Vec<usize> = Vec::new();

    while let Some(v) = state.queue.pop_front() {
        if layer > 1 {
            // The start vertex (the whole first layer) is already in the
            // subgraph; tracking it in v_cur would add it twice on a flush.
            v_cur.push(v);
        }
        remaining_in_layer -= 1;
        for &u in layout.neighbors(v) {
            if assigned[u] {
                continue;
            }
            if !state.seen(u) {
                state.mark(u, layer + 1);
                state.queue.push_back(u);
                d_cur += 1;
            } else if state.depth[u] == layer + 1 {
                // Another edge into the next layer.
                d_cur += 1;
            }
            // Edges back into this or earlier layers say nothing about
            // the association with the layer ahead.
        }
        if remaining_in_layer > 0 {
            continue;
        }

        // Layer boundary.
        remaining_in_layer = state.queue.len();
        if d_cur == 0 {
            trace.layers.push((layer, 0, CutAction::TerminalFlush));
            subgraph.append(&mut v_seg);
            subgraph.append(&mut v_cur);
            return Ok(trace);
        }
        if layer == 1 {
            trace.layers.push((layer, d_cur, CutAction::Continue));
            d_prev = d_cur;
        } else if d_prev <= d_cur {
            if !v_seg.is_empty() && d_prev < d_cur {
                trace.layers.push((layer, d_cur, CutAction::FlushSegExit));
                subgraph.append(&mut v_seg);
                return Ok(trace);
            }
            trace.layers.push((layer, d_cur, CutAction::Continue));
            d_prev = d_cur;
            subgraph.append(&mut v_cur);
        } else {
            trace.layers.push((layer, d_cur, CutAction::RecordSeg));
            if !v_seg.is_empty() {
                subgraph.append(&mut v_seg);
            }
            v_seg = std::mem::take(&mut v_cur);
            d_prev = d_cur;
        }
        layer += 1;
        d_cur = 0;
    }

    // Unreachable with the next-layer edge count (d = 0 empties the queue),
    // kept as a safety net: flush whatever is pending.
    subgraph.append(&mut v_seg);
    subgraph.append(&mut v_cur);
    Ok(trace)
}

/// Cuts the whole layout into weakly associated subgraphs by seeding a
/// layer-cut traversal at every still-unassigned vertex in ascending index
/// order. Returns the partition and one trace per traversal.
pub fn hicut(layout: &GraphLayout) -> Result<(Partition, Vec<CutTrace>), PartitionError> {
    if layout.active_count() == 0 {
        return Err(PartitionError::EmptyGraph);
    }
    let capacity = layout.capacity();
    let mut assigned = vec![false; capacity];
    let mut assignment: Vec<Option<usize>> = vec![None; capacity];
    let mut traces = Vec::new();
    let mut state = LayerCutState::new(capacity);
    let mut n_subgraphs = 0usize;

    for v in layout.active_vertices() {
        if assigned[v] {
            continue;
        }
        state.generation += 1;
        let mut sub = Vec::new();
        let trace = layer_cut_inner(layout, v, &assigned, &mut state, &mut sub)?;
        for &u in &sub {
            assigned[u] = true;
            assignment[u] = Some(n_subgraphs);
        }
        n_subgraphs += 1;
        traces.push(trace);
    }

    let mut partition = Partition::from_assignment(assignment, n_subgraphs);
    for part in &mut partition.subgraphs {
        part.sort_unstable();
    }
    Ok((partition, traces))
}

/// Number of edges whose endpoints lie in different subgraphs.
pub fn cut_edge_count(layout: &GraphLayout, partition: &Partition) -> usize {
    let mut count = 0;
    for (i, j) in layout.edges() {
        if partition.subgraph_of(i) != partition.subgraph_of(j) {
            count += 1;
        }
    }
    count
}

// ---------------------------------------------------------------------------
// Max-flow / min-cut baseline
// ---------------------------------------------------------------------------

/// Dinic max-flow over an undirected graph given as weighted edges.
struct FlowNetwork {
    // Arc storage: to, capacity; reverse arc is index ^ 1.
    to: Vec<usize>,
    cap: Vec<i64>,
    head: Vec<Vec<usize>>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl FlowNetwork {
    fn new(n: usize) -> Self {
        Self {
            to: Vec::new(),
            cap: Vec::new(),
            head: vec![Vec::new(); n],
            level: vec![-1; n],
            iter: vec![0; n],
        }
    }

    /// Undirected edge: both directions get the full capacity.
    fn add_undirected(&mut self, a: usize, b: usize, capacity: i64) {
        let idx = self.to.len();
        self.to.push(b);
        self.cap.push(capacity);
        self.to.push(a);
        self.cap.push(capacity);
        self.head[a].push(idx);
        self.head[b].push(idx + 1);
    }

    fn add_directed(&mut self, a: usize, b: usize, capacity: i64) {
        let idx = self.to.len();
        self.to.push(b);
        self.cap.push(capacity);
        self.to.push(a);
        self.cap.push(0);
        self.head[a].push(idx);
        self.head[b].push(idx + 1);
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.fill(-1);
        let mut q = std::collections::VecDeque::new();
        self.level[s] = 0;
        q.push_back(s);
        while let Some(v) = q.pop_front() {
            for &e in &self.head[v] {
                let u = self.to[e];
                if self.cap[e] > 0 && self.level[u] < 0 {
                    self.level[u] = self.level[v] + 1;
                    q.push_back(u);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, v: usize, t: usize, f: i64) -> i64 {
        if v == t {
            return f;
        }
        while self.iter[v] < self.head[v].len() {
            let e = self.head[v][self.iter[v]];
            let u = self.to[e];
            if self.cap[e] > 0 && self.level[u] == self.level[v] + 1 {
                let d = self.dfs(u, t, f.min(self.cap[e]));
                if d > 0 {
                    self.cap[e] -= d;
                    self.cap[e ^ 1] += d;
                    return d;
                }
            }
            self.iter[v] += 1;
        }
        0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let mut flow = 0;
        while self.bfs(s, t) {
            self.iter.fill(0);
            loop {
                let f = self.dfs(s, t, i64::MAX);
                if f == 0 {
                    break;
                }
                flow += f;
            }
        }
        flow
    }

    /// Vertices reachable from `s` in the residual network (the source side
    /// of a minimum cut once max flow has been pushed).
    fn source_side(&self, s: usize) -> Vec<bool> {
        let mut side = vec![false; self.head.len()];
        let mut q = std::collections::VecDeque::new();
        side[s] = true;
        q.push_back(s);
        while let Some(v) = q.pop_front() {
            for &e in &self.head[v] {
                let u = self.to[e];
                if self.cap[e] > 0 && !side[u] {
                    side[u] = true;
                    q.push_back(u);
                }
            }
        }
        side
    }
}

/// Minimum s-t cut of an undirected weighted graph on `n` vertices.
/// Returns the cut value and the source-side membership.
pub fn st_min_cut(
    n: usize,
    edges: &[(usize, usize, i64)],
    s: usize,
    t: usize,
) -> (i64, Vec<bool>) {
    let mut net = FlowNetwork::new(n);
    for &(a, b, w) in edges {
        net.add_undirected(a, b, w);
    }
    let value = net.max_flow(s, t);
    (value, net.source_side(s))
}

/// Iterated s-t min-cut partitioner, used as the comparison baseline.
///
/// `n_servers` anchor points are dropped uniformly at random over the
/// bounding box of the layout positions; each is tied to its nearest
/// still-unclaimed vertex. Server pairs are then visited in lexicographic
/// order; for each pair the union of their current regions plus all
/// unassigned vertices is re-split along the minimum cut between the two
/// anchor vertices. Vertices the flow never touches fall to the sink side.
pub fn mincut_partition(
    layout: &GraphLayout,
    edge_weights: &[i64],
    n_servers: usize,
    seed: u64,
) -> Result<Partition, PartitionError> {
    if n_servers < 2 {
        return Err(PartitionError::InsufficientServers(n_servers));
    }
    if layout.active_count() == 0 {
        return Err(PartitionError::EmptyGraph);
    }
    let edges = layout.edges();
    assert_eq!(
        edges.len(),
        edge_weights.len(),
        "one weight per layout edge"
    );

    let active: Vec<usize> = layout.active_vertices().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Bounding box of the active vertices, degenerate boxes allowed.
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &v in &active {
        let (x, y) = layout.position(v);
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }

    let n_anchors = n_servers.min(active.len());
    let mut anchors: Vec<usize> = Vec::with_capacity(n_anchors);
    let mut claimed = vec![false; layout.capacity()];
    for _ in 0..n_anchors {
        use rand::Rng;
        let px = if x1 > x0 { rng.gen_range(x0..=x1) } else { x0 };
        let py = if y1 > y0 { rng.gen_range(y0..=y1) } else { y0 };
        let nearest = active
            .iter()
            .copied()
            .filter(|&v| !claimed[v])
            .min_by(|&a, &b| {
                let da = dist2(layout.position(a), (px, py));
                let db = dist2(layout.position(b), (px, py));
                da.partial_cmp(&db).unwrap().then(a.cmp(&b))
            })
            .expect("an unclaimed vertex exists");
        claimed[nearest] = true;
        anchors.push(nearest);
    }

    let mut assignment: Vec<Option<usize>> = vec![None; layout.capacity()];
    for (k, &a) in anchors.iter().enumerate() {
        assignment[a] = Some(k);
    }

    if n_anchors == 1 {
        for &v in &active {
            assignment[v] = Some(0);
        }
        return Ok(Partition::from_assignment(assignment, 1));
    }

    // Dense vertex ids for the flow network are rebuilt per pair.
    let mut in_play = vec![false; layout.capacity()];
    let mut dense_id = vec![usize::MAX; layout.capacity()];
    for k in 0..n_anchors {
        for l in (k + 1)..n_anchors {
            // Region k, region l, and everything unassigned.
            let mut members = Vec::new();
            for &v in &active {
                let a = assignment[v];
                if a == Some(k) || a == Some(l) || a.is_none() {
                    in_play[v] = true;
                    dense_id[v] = members.len();
                    members.push(v);
                }
            }
            let mut net = FlowNetwork::new(members.len() + 2);
            let s = members.len();
            let t = members.len() + 1;
            for (e_idx, &(a, b)) in edges.iter().enumerate() {
                if in_play[a] && in_play[b] {
                    net.add_undirected(dense_id[a], dense_id[b], edge_weights[e_idx]);
                }
            }
            net.add_directed(s, dense_id[anchors[k]], i64::MAX / 4);
            net.add_directed(dense_id[anchors[l]], t, i64::MAX / 4);
            net.max_flow(s, t);
            let side = net.source_side(s);
            for &v in &members {
                assignment[v] = Some(if side[dense_id[v]] { k } else { l });
                in_play[v] = false;
                dense_id[v] = usize::MAX;
            }
        }
    }

    // Regions may have been emptied by later re-splits; keep only the
    // non-empty ones, renumbered in first-appearance order.
    let mut remap = vec![usize::MAX; n_anchors];
    let mut next = 0usize;
    for &v in &active {
        let r = assignment[v].expect("all active vertices assigned");
        if remap[r] == usize::MAX {
            remap[r] = next;
            next += 1;
        }
        assignment[v] = Some(remap[r]);
    }
    Ok(Partition::from_assignment(assignment, next))
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    dx * dx + dy * dy
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn grid_positions(n: usize) -> Vec<(f64, f64)> {
        (0..n).map(|i| ((i % 5) as f64, (i / 5) as f64)).collect()
    }

    /// 20-vertex layout whose first traversal from vertex 0 walks the
    /// d-sequence (3, 2, 1, 4) and whose full cut yields 5 subgraphs.
    pub(crate) fn five_block_layout() -> GraphLayout {
        let edges = [
            (0, 1),
            (0, 2),
            (0, 5),
            (1, 3),
            (2, 4),
            (3, 6),
            (6, 7),
            (6, 8),
            (6, 9),
            (6, 10),
            (10, 11),
            (11, 12),
            (11, 13),
            (12, 13),
            (13, 14),
            (14, 15),
            (14, 16),
            (15, 16),
            (16, 17),
            (17, 18),
            (17, 19),
        ];
        GraphLayout::new(20, &edges, &grid_positions(20), &vec![8.0; 20]).unwrap()
    }

    #[test]
    fn layer_cut_walks_the_golden_sequence() {
        let layout = five_block_layout();
        let assigned = vec![false; layout.capacity()];
        let (sub, trace) = layer_cut(&layout, 0, &assigned).unwrap();
        let mut sorted = sub.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(trace.edge_counts(), vec![3, 2, 1, 4]);
        assert_eq!(
            trace.layers.last().unwrap().2,
            CutAction::FlushSegExit
        );
        trace.check_sound().unwrap();
    }

    #[test]
    fn layer_cut_isolated_vertex_terminal_flush() {
        let layout = GraphLayout::new(1, &[], &[(0.0, 0.0)], &[1.0]).unwrap();
        let (sub, trace) = layer_cut(&layout, 0, &[false]).unwrap();
        assert_eq!(sub, vec![0]);
        assert_eq!(trace.layers, vec![(1, 0, CutAction::TerminalFlush)]);
    }

    #[test]
    fn layer_cut_path_graph_absorbs_everything() {
        // a-b-c-d-e: one edge leaves every layer, never a decrease
        // followed by an increase.
        let layout = GraphLayout::new(
            5,
            &[(0, 1), (1, 2), (2, 3), (3, 4)],
            &grid_positions(5),
            &vec![1.0; 5],
        )
        .unwrap();
        let (sub, trace) = layer_cut(&layout, 0, &vec![false; 5]).unwrap();
        let mut sorted = sub;
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3, 4]);
        let counts = trace.edge_counts();
        assert_eq!(counts[..4], [1, 1, 1, 1]);
        assert_eq!(*counts.last().unwrap(), 0);
        trace.check_sound().unwrap();
    }

    #[test]
    fn layer_cut_rejects_bad_start() {
        let layout = five_block_layout();
        let mut assigned = vec![false; 20];
        assigned[0] = true;
        assert_eq!(
            layer_cut(&layout, 0, &assigned),
            Err(PartitionError::InactiveStart(0))
        );
    }

    #[test]
    fn hicut_cuts_the_fixture_into_five_subgraphs() {
        let layout = five_block_layout();
        let (partition, traces) = hicut(&layout).unwrap();
        partition.validate(&layout).unwrap();
        assert_eq!(partition.len(), 5);
        assert_eq!(partition.subgraphs()[0], vec![0, 1, 2, 3, 4, 5]);
        for trace in &traces {
            trace.check_sound().unwrap();
        }
    }

    #[test]
    fn hicut_edgeless_graph_gives_singletons() {
        let layout = GraphLayout::new(7, &[], &grid_positions(7), &vec![1.0; 7]).unwrap();
        let (partition, _) = hicut(&layout).unwrap();
        assert_eq!(partition.len(), 7);
        partition.validate(&layout).unwrap();
    }

    #[test]
    fn hicut_covers_random_layouts_exactly_once() {
        let mut rng = StdRng::seed_from_u64(99);
        for _ in 0..20 {
            let n = rng.gen_range(2..50);
            let mut edges = std::collections::BTreeSet::new();
            let target = rng.gen_range(0..(n * 2));
            for _ in 0..target {
                let i = rng.gen_range(0..n);
                let j = rng.gen_range(0..n);
                if i != j {
                    edges.insert((i.min(j), i.max(j)));
                }
            }
            let edges: Vec<_> = edges.into_iter().collect();
            let layout =
                GraphLayout::new(n, &edges, &(0..n).map(|i| (i as f64, 0.0)).collect::<Vec<_>>(), &vec![1.0; n])
                    .unwrap();
            let (partition, traces) = hicut(&layout).unwrap();
            partition.validate(&layout).unwrap();
            let assigned_total: usize = partition.subgraphs().iter().map(|s| s.len()).sum();
            assert_eq!(assigned_total, layout.active_count());
            for t in &traces {
                t.check_sound().unwrap();
            }
        }
    }

    #[test]
    fn hicut_is_deterministic() {
        let layout = five_block_layout();
        let (a, _) = hicut(&layout).unwrap();
        let (b, _) = hicut(&layout).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cut_edge_count_trivial_cases() {
        let layout = five_block_layout();
        let single = Partition::single(&layout);
        assert_eq!(cut_edge_count(&layout, &single), 0);

        let singletons = Partition::from_assignment(
            (0..20).map(Some).collect(),
            20,
        );
        assert_eq!(cut_edge_count(&layout, &singletons), layout.edge_count());
    }

    #[test]
    fn cut_edge_count_matches_exhaustive_scan() {
        let layout = five_block_layout();
        let (partition, _) = hicut(&layout).unwrap();
        let mut brute = 0;
        for (i, j) in layout.edges() {
            let ci = partition.subgraph_of(i);
            let cj = partition.subgraph_of(j);
            if ci != cj {
                brute += 1;
            }
        }
        assert_eq!(cut_edge_count(&layout, &partition), brute);
    }

    #[test]
    fn st_min_cut_single_edge() {
        let (value, side) = st_min_cut(2, &[(0, 1, 5)], 0, 1);
        assert_eq!(value, 5);
        assert!(side[0] && !side[1]);
    }

    #[test]
    fn st_min_cut_bridge_bowtie() {
        // Two triangles joined by a weight-1 bridge between 1 and 2.
        let edges = [
            (0, 1, 10),
            (0, 4, 10),
            (1, 4, 10),
            (1, 2, 1),
            (2, 3, 10),
            (2, 5, 10),
            (3, 5, 10),
        ];
        let (value, side) = st_min_cut(6, &edges, 0, 3);
        assert_eq!(value, 1);
        assert!(side[0] && side[1] && side[4]);
        assert!(!side[2] && !side[3] && !side[5]);
    }

    /// Exhaustive minimum s-t cut by enumerating every bipartition.
    fn brute_force_min_cut(n: usize, edges: &[(usize, usize, i64)], s: usize, t: usize) -> i64 {
        let mut best = i64::MAX;
        for subset in 0u32..(1 << n) {
            if subset & (1 << s) == 0 || subset & (1 << t) != 0 {
                continue;
            }
            let mut cut = 0;
            for &(a, b, w) in edges {
                if ((subset >> a) & 1) != ((subset >> b) & 1) {
                    cut += w;
                }
            }
            best = best.min(cut);
        }
        best
    }

    #[test]
    fn st_min_cut_matches_enumeration_on_small_graphs() {
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..40 {
            let n = rng.gen_range(2..=9);
            let mut edges = Vec::new();
            for a in 0..n {
                for b in (a + 1)..n {
                    if rng.gen_bool(0.45) {
                        edges.push((a, b, rng.gen_range(1..=20)));
                    }
                }
            }
            let s = 0;
            let t = n - 1;
            let (value, _) = st_min_cut(n, &edges, s, t);
            assert_eq!(value, brute_force_min_cut(n, &edges, s, t));
        }
    }

    #[test]
    fn mincut_partition_two_vertices() {
        let layout = GraphLayout::new(2, &[(0, 1)], &[(0.0, 0.0), (10.0, 0.0)], &[1.0; 2]).unwrap();
        let partition = mincut_partition(&layout, &[5], 2, 1).unwrap();
        partition.validate(&layout).unwrap();
        assert_eq!(partition.len(), 2);
        assert_eq!(cut_edge_count(&layout, &partition), 1);
    }

    #[test]
    fn mincut_partition_splits_on_the_bridge() {
        // Bowtie: heavy triangles, weight-1 bridge.
        let edges = [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (3, 5), (4, 5)];
        let weights = [10, 10, 10, 1, 10, 10, 10];
        let positions = [
            (0.0, 0.0),
            (0.0, 2.0),
            (1.0, 1.0),
            (9.0, 1.0),
            (10.0, 0.0),
            (10.0, 2.0),
        ];
        let layout = GraphLayout::new(6, &edges, &positions, &[1.0; 6]).unwrap();
        // The weight list must be ordered like layout.edges().
        let layout_edges = layout.edges();
        let w: Vec<i64> = layout_edges
            .iter()
            .map(|&(i, j)| {
                let k = edges
                    .iter()
                    .position(|&(a, b)| (a.min(b), a.max(b)) == (i, j))
                    .unwrap();
                weights[k]
            })
            .collect();
        let partition = mincut_partition(&layout, &w, 2, 3).unwrap();
        partition.validate(&layout).unwrap();
        assert_eq!(partition.len(), 2);
        assert_eq!(cut_edge_count(&layout, &partition), 1);
    }

    #[test]
    fn mincut_partition_rejects_single_server() {
        let layout = GraphLayout::new(2, &[(0, 1)], &[(0.0, 0.0), (1.0, 0.0)], &[1.0; 2]).unwrap();
        assert_eq!(
            mincut_partition(&layout, &[1], 1, 0),
            Err(PartitionError::InsufficientServers(1))
        );
    }

    #[test]
    fn mincut_partition_large_instance_is_valid() {
        let mut rng = StdRng::seed_from_u64(5);
        let n = 500;
        let mut edges = std::collections::BTreeSet::new();
        while edges.len() < 5010 {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if i != j {
                edges.insert((i.min(j), i.max(j)));
            }
        }
        let edges: Vec<_> = edges.into_iter().collect();
        let pos: Vec<_> = (0..n)
            .map(|_| (rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
            .collect();
        let layout = GraphLayout::new(n, &edges, &pos, &vec![1.0; n]).unwrap();
        let weights: Vec<i64> = (0..layout.edge_count())
            .map(|_| rng.gen_range(1..=100))
            .collect();
        let partition = mincut_partition(&layout, &weights, 25, 7).unwrap();
        partition.validate(&layout).unwrap();
    }
}
