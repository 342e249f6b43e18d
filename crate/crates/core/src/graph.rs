//! Dynamic user graph: slot mask, positions, association edges, and the
//! timestep mutation events that add/remove/move/rewire users.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("edge ({0}, {1}) references a vertex outside the active range")]
    IndexOutOfRange(usize, usize),
    #[error("self loop on vertex {0}")]
    SelfLoop(usize),
    #[error("mask conflict at slot {slot}: {reason}")]
    MaskConflict { slot: usize, reason: &'static str },
    #[error("vertex {0} is not active")]
    InactiveVertex(usize),
    #[error("{0}")]
    LengthMismatch(&'static str),
}

/// The user graph at one timestep.
///
/// Slots are stable identities in `[0, capacity)`; `mask[i]` says whether
/// slot `i` currently holds a user. Edges exist only between active slots,
/// are undirected, deduplicated, and stored with sorted adjacency lists so
/// iteration order is reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphLayout {
    mask: Vec<bool>,
    positions: Vec<(f64, f64)>,
    task_kb: Vec<f64>,
    adjacency: Vec<Vec<usize>>,
    n_edges: usize,
}

/// One timestep mutation. Payloads are fully materialized (slots, edges,
/// deltas) so that applying an event is pure and replayable; any randomness
/// happens upstream when the payload is generated, and `seed` records the
/// stream that produced it.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphEvent {
    AddUsers {
        /// (slot, position, task size kb); slots must currently be free.
        users: Vec<(usize, (f64, f64), f64)>,
        /// Edges referencing final slot indices (new or existing active).
        edges: Vec<(usize, usize)>,
        seed: u64,
    },
    RemoveUsers {
        slots: Vec<usize>,
        seed: u64,
    },
    /// Position deltas per slot.
    Move {
        deltas: Vec<(usize, f64, f64)>,
        seed: u64,
    },
    /// Edge replacement among active vertices.
    Rewire {
        add: Vec<(usize, usize)>,
        remove: Vec<(usize, usize)>,
        seed: u64,
    },
}

fn normalize_edge(i: usize, j: usize) -> Result<(usize, usize), GraphError> {
    if i == j {
        return Err(GraphError::SelfLoop(i));
    }
    Ok((i.min(j), i.max(j)))
}

impl GraphLayout {
    /// Builds a layout whose capacity equals the active count.
    pub fn new(
        n_active: usize,
        edges: &[(usize, usize)],
        positions: &[(f64, f64)],
        task_kb: &[f64],
    ) -> Result<Self, GraphError> {
        Self::with_capacity(n_active, n_active, edges, positions, task_kb)
    }

    /// Builds a layout with `capacity` slots, the first `n_active` of them
    /// occupied. Extra slots are free for later `AddUsers` events.
    pub fn with_capacity(
        capacity: usize,
        n_active: usize,
        edges: &[(usize, usize)],
        positions: &[(f64, f64)],
        task_kb: &[f64],
    ) -> Result<Self, GraphError> {
        if n_active > capacity {
            return Err(GraphError::LengthMismatch("n_active exceeds capacity"));
        }
        if positions.len() != n_active || task_kb.len() != n_active {
            return Err(GraphError::LengthMismatch(
                "positions/task sizes must have one entry per active vertex",
            ));
        }
        let mut mask = vec![false; capacity];
        mask[..n_active].fill(true);
        let mut pos = vec![(0.0, 0.0); capacity];
        pos[..n_active].copy_from_slice(positions);
        let mut kb = vec![0.0; capacity];
        kb[..n_active].copy_from_slice(task_kb);

        let mut layout = Self {
            mask,
            positions: pos,
            task_kb: kb,
            adjacency: vec![Vec::new(); capacity],
            n_edges: 0,
        };
        for &(i, j) in edges {
            if i >= n_active || j >= n_active {
                return Err(GraphError::IndexOutOfRange(i, j));
            }
            layout.insert_edge(i, j)?;
        }
        Ok(layout)
    }

    fn insert_edge(&mut self, i: usize, j: usize) -> Result<(), GraphError> {
        let (a, b) = normalize_edge(i, j)?;
        if let Err(slot) = self.adjacency[a].binary_search(&b) {
            self.adjacency[a].insert(slot, b);
            let slot_b = self.adjacency[b].binary_search(&a).unwrap_err();
            self.adjacency[b].insert(slot_b, a);
            self.n_edges += 1;
        }
        Ok(())
    }

    fn delete_edge(&mut self, i: usize, j: usize) {
        let (a, b) = match normalize_edge(i, j) {
            Ok(e) => e,
            Err(_) => return,
        };
        if let Ok(slot) = self.adjacency[a].binary_search(&b) {
            self.adjacency[a].remove(slot);
            let slot_b = self.adjacency[b].binary_search(&a).unwrap();
            self.adjacency[b].remove(slot_b);
            self.n_edges -= 1;
        }
    }

    pub fn capacity(&self) -> usize {
        self.mask.len()
    }

    pub fn is_active(&self, i: usize) -> bool {
        i < self.mask.len() && self.mask[i]
    }

    pub fn active_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Active slot indices in ascending order.
    pub fn active_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| i)
    }

    /// Lowest-index free slots, the order in which new users are placed.
    pub fn free_slots(&self, k: usize) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| !m)
            .map(|(i, _)| i)
            .take(k)
            .collect()
    }

    pub fn position(&self, i: usize) -> (f64, f64) {
        self.positions[i]
    }

    pub fn task_kb(&self, i: usize) -> f64 {
        self.task_kb[i]
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn edge_count(&self) -> usize {
        self.n_edges
    }

    /// Edges as sorted (i, j) pairs with i < j.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.n_edges);
        for (i, nbrs) in self.adjacency.iter().enumerate() {
            for &j in nbrs {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Number of active neighbors of an active vertex.
    pub fn active_degree(&self, i: usize) -> Result<usize, GraphError> {
        if !self.is_active(i) {
            return Err(GraphError::InactiveVertex(i));
        }
        Ok(self.adjacency[i].len())
    }

    /// Applies a mutation event, producing the next layout. Deterministic:
    /// the same (layout, event) pair always yields the same result.
    pub fn apply_event(&self, event: &GraphEvent) -> Result<Self, GraphError> {
        let mut next = self.clone();
        match event {
            GraphEvent::AddUsers { users, edges, .. } => {
                for &(slot, pos, kb) in users {
                    if slot >= next.mask.len() {
                        return Err(GraphError::IndexOutOfRange(slot, slot));
                    }
                    if next.mask[slot] {
                        return Err(GraphError::MaskConflict {
                            slot,
                            reason: "AddUsers targets an occupied slot",
                        });
                    }
                    next.mask[slot] = true;
                    next.positions[slot] = pos;
                    next.task_kb[slot] = kb;
                }
                for &(i, j) in edges {
                    if !next.is_active(i) || !next.is_active(j) {
                        return Err(GraphError::IndexOutOfRange(i, j));
                    }
                    next.insert_edge(i, j)?;
                }
            }
            GraphEvent::RemoveUsers { slots, .. } => {
                for &slot in slots {
                    if slot >= next.mask.len() || !next.mask[slot] {
                        return Err(GraphError::MaskConflict {
                            slot,
                            reason: "RemoveUsers targets an empty slot",
                        });
                    }
                    next.mask[slot] = false;
                    next.task_kb[slot] = 0.0;
                    for j in std::mem::take(&mut next.adjacency[slot]) {
                        let back = next.adjacency[j].binary_search(&slot).unwrap();
                        next.adjacency[j].remove(back);
                        next.n_edges -= 1;
                    }
                }
            }
            GraphEvent::Move { deltas, .. } => {
                for &(slot, dx, dy) in deltas {
                    if !next.is_active(slot) {
                        return Err(GraphError::InactiveVertex(slot));
                    }
                    next.positions[slot].0 += dx;
                    next.positions[slot].1 += dy;
                }
            }
            GraphEvent::Rewire { add, remove, .. } => {
                for &(i, j) in remove {
                    if !next.is_active(i) || !next.is_active(j) {
                        return Err(GraphError::IndexOutOfRange(i, j));
                    }
                    next.delete_edge(i, j);
                }
                for &(i, j) in add {
                    if !next.is_active(i) || !next.is_active(j) {
                        return Err(GraphError::IndexOutOfRange(i, j));
                    }
                    next.insert_edge(i, j)?;
                }
            }
        }
        Ok(next)
    }

    /// Checks the structural invariants: no edge touches a masked-out slot,
    /// adjacency is symmetric/sorted, and the edge counter is consistent.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut half_edges = 0;
        for (i, nbrs) in self.adjacency.iter().enumerate() {
            if !nbrs.is_empty() && !self.mask[i] {
                return Err(format!("inactive vertex {i} has edges"));
            }
            let mut prev = None;
            for &j in nbrs {
                if j == i {
                    return Err(format!("self loop at {i}"));
                }
                if !self.mask[j] {
                    return Err(format!("edge ({i}, {j}) touches inactive {j}"));
                }
                if prev.map_or(false, |p| p >= j) {
                    return Err(format!("adjacency of {i} not strictly sorted"));
                }
                if self.adjacency[j].binary_search(&i).is_err() {
                    return Err(format!("edge ({i}, {j}) missing reverse entry"));
                }
                prev = Some(j);
                half_edges += 1;
            }
        }
        if half_edges != 2 * self.n_edges {
            return Err(format!(
                "edge counter {} disagrees with adjacency ({half_edges} half-edges)",
                self.n_edges
            ));
        }
        Ok(())
    }
}
