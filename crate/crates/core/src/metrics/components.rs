//! Proximity graphs and their connected components.

use crate::geometry::{TorusSpec, Vec2};
use crate::spatial::{CellGrid, SpatialError};

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug, Default)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
    sets: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        let mut uf = Self::default();
        uf.reset(n);
        uf
    }

    /// Back to `n` singletons, reusing the allocation.
    pub fn reset(&mut self, n: usize) {
        self.parent.clear();
        self.parent.extend(0..n as u32);
        self.size.clear();
        self.size.resize(n, 1);
        self.sets = n;
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] as usize != i {
            let grand = self.parent[self.parent[i] as usize];
            self.parent[i] = grand;
            i = grand as usize;
        }
        i
    }

    /// Merges the sets of `a` and `b`; false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        self.sets -= 1;
        true
    }

    /// Number of disjoint sets.
    pub fn set_count(&self) -> usize {
        self.sets
    }
}

/// Undirected graph linking agents at torus distance `≤ r_s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProximityGraph {
    pub vertex_count: usize,
    /// Edges `(i, j)` with `i < j`.
    pub edges: Vec<(usize, usize)>,
}

impl ProximityGraph {
    /// Builds the graph through a cell grid of side `≥ r_s`.
    pub fn build(positions: &[Vec2], world: TorusSpec, r_s: f64) -> Result<Self, SpatialError> {
        let grid = CellGrid::rebuild(positions, world, r_s)?;
        let mut edges = Vec::new();
        for (i, p) in positions.iter().enumerate() {
            grid.visit_within(*p, r_s, Some(i), |j, _, _| {
                if i < j {
                    edges.push((i, j));
                }
            })?;
        }
        edges.sort_unstable();
        Ok(Self {
            vertex_count: positions.len(),
            edges,
        })
    }
}

/// Number of connected components of `graph`.
pub fn connected_components(graph: &ProximityGraph) -> usize {
    let mut uf = UnionFind::new(graph.vertex_count);
    for &(a, b) in &graph.edges {
        uf.union(a, b);
    }
    uf.set_count()
}

/// Reusable per-tick component counter working straight off a cell grid.
#[derive(Clone, Debug, Default)]
pub struct ComponentCounter {
    uf: UnionFind,
}

impl ComponentCounter {
    /// Components of the graph over all agents in `grid` (ids `0..n`).
    pub fn count(&mut self, grid: &CellGrid, positions: &[Vec2], r_s: f64) -> usize {
        self.uf.reset(positions.len());
        for (i, p) in positions.iter().enumerate() {
            if self.uf.set_count() == 1 {
                break;
            }
            let uf = &mut self.uf;
            grid.visit_within(*p, r_s, Some(i), |j, _, _| {
                if i < j {
                    uf.union(i, j);
                }
            })
            .expect("grid cell size covers r_s");
        }
        self.uf.set_count()
    }
}
