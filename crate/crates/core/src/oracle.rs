//! Exact shortest-path references on a map's static (wind-free) graph.
//!
//! Vertices are state indices; there is an edge `s -> t` whenever some
//! action's intended move from `s` lands on `t != s`. Three independent
//! algorithms are provided so they can be checked against each other.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use crate::mapio::{CellCoord, Direction, GridMap};

/// Neighbouring states of `state`, without self-loops.
pub fn neighbors(map: &GridMap, state: usize) -> impl Iterator<Item = usize> + '_ {
    Direction::ALL.into_iter().map(move |d| map.next_state(state, d)).filter(move |&t| t != state)
}

/// Unweighted step counts from `source` to every state; `None` when
/// unreachable.
pub fn bfs_distances(map: &GridMap, source: usize) -> Vec<Option<u32>> {
    let mut dist = vec![None; map.num_states()];
    let mut queue = VecDeque::new();
    dist[source] = Some(0);
    queue.push_back(source);
    while let Some(s) = queue.pop_front() {
        let d = dist[s].unwrap();
        for t in neighbors(map, s) {
            if dist[t].is_none() {
                dist[t] = Some(d + 1);
                queue.push_back(t);
            }
        }
    }
    dist
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    cost: f64,
    state: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed for a min-heap
        other.cost.total_cmp(&self.cost).then_with(|| other.state.cmp(&self.state))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source weighted distances with every edge costing `edge_weight`.
pub fn dijkstra(map: &GridMap, source: usize, edge_weight: f64) -> Vec<Option<f64>> {
    assert!(edge_weight > 0.0, "edge weight must be positive");
    let mut dist: Vec<Option<f64>> = vec![None; map.num_states()];
    let mut heap = BinaryHeap::new();
    dist[source] = Some(0.0);
    heap.push(HeapEntry { cost: 0.0, state: source });
    while let Some(HeapEntry { cost, state }) = heap.pop() {
        if dist[state].is_some_and(|d| cost > d) {
            continue;
        }
        for t in neighbors(map, state) {
            let candidate = cost + edge_weight;
            if dist[t].is_none_or(|d| candidate < d) {
                dist[t] = Some(candidate);
                heap.push(HeapEntry { cost: candidate, state: t });
            }
        }
    }
    dist
}

/// All-pairs distances between the states of one map.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTable {
    n: usize,
    // f64::INFINITY marks an unreachable pair
    dist: Vec<f64>,
    states: Vec<CellCoord>,
    width: usize,
    state_of_cell: Vec<Option<usize>>,
}

impl DistanceTable {
    fn new(map: &GridMap) -> DistanceTable {
        let n = map.num_states();
        let mut state_of_cell = vec![None; map.width() * map.height()];
        for (i, c) in map.states().iter().enumerate() {
            state_of_cell[c.y * map.width() + c.x] = Some(i);
        }
        DistanceTable {
            n,
            dist: vec![f64::INFINITY; n * n],
            states: map.states().to_vec(),
            width: map.width(),
            state_of_cell,
        }
    }

    /// BFS from every source, scaled by `edge_weight`.
    pub fn from_bfs(map: &GridMap, edge_weight: f64) -> DistanceTable {
        let mut table = DistanceTable::new(map);
        for s in 0..table.n {
            for (t, d) in bfs_distances(map, s).into_iter().enumerate() {
                if let Some(d) = d {
                    table.dist[s * table.n + t] = d as f64 * edge_weight;
                }
            }
        }
        table
    }

    pub fn num_states(&self) -> usize {
        self.n
    }

    pub fn get(&self, from: usize, to: usize) -> Option<f64> {
        let d = self.dist[from * self.n + to];
        d.is_finite().then_some(d)
    }

    fn index(&self, c: CellCoord) -> Option<usize> {
        if c.x >= self.width {
            return None;
        }
        self.state_of_cell.get(c.y * self.width + c.x).copied().flatten()
    }

    /// Distance between two cells; `None` if either is a wall or the pair
    /// is disconnected.
    pub fn between(&self, from: CellCoord, to: CellCoord) -> Option<f64> {
        self.get(self.index(from)?, self.index(to)?)
    }

    pub fn coords(&self) -> &[CellCoord] {
        &self.states
    }
}

/// Classic Floyd-Warshall over the free-cell graph.
pub fn floyd_warshall(map: &GridMap, edge_weight: f64) -> DistanceTable {
    assert!(edge_weight > 0.0, "edge weight must be positive");
    let mut table = DistanceTable::new(map);
    let n = table.n;
    for s in 0..n {
        table.dist[s * n + s] = 0.0;
        for t in neighbors(map, s) {
            table.dist[s * n + t] = edge_weight;
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = table.dist[i * n + k];
            if dik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let via = dik + table.dist[k * n + j];
                if via < table.dist[i * n + j] {
                    table.dist[i * n + j] = via;
                }
            }
        }
    }
    table
}
