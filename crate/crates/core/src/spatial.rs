//! Uniform cell grid for neighbor queries on the torus.
//!
//! The grid is rebuilt from scratch every tick. Entries are kept sorted by
//! `(cell, id)`, and a query visits the 3×3 block of cells around the query
//! point. Worlds too small for a 3×3 block of cells at least `cell_size`
//! wide fall back to an exhaustive scan.

use thiserror::Error;

use crate::geometry::{TorusSpec, Vec2};

#[derive(Debug, Error, PartialEq)]
pub enum SpatialError {
    #[error("cell size must be positive and finite, got {0}")]
    BadCellSize(f64),
    #[error("query radius {radius} exceeds cell size {cell_size}")]
    RadiusTooLarge { radius: f64, cell_size: f64 },
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    cell: u32,
    id: u32,
    pos: Vec2,
}

#[derive(Clone, Debug)]
pub struct CellGrid {
    world: TorusSpec,
    cell_size: f64,
    /// Cells per side; zero means exhaustive scan.
    dim: u32,
    cell_side: f64,
    entries: Vec<Entry>,
}

impl CellGrid {
    /// Empty grid; fill with [`CellGrid::refill`].
    pub fn new(world: TorusSpec, cell_size: f64) -> Result<Self, SpatialError> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(SpatialError::BadCellSize(cell_size));
        }
        let per_side = (world.side_length() / cell_size).floor();
        let dim = if per_side >= 3.0 {
            per_side.min(u16::MAX as f64) as u32
        } else {
            0
        };
        let cell_side = if dim > 0 {
            world.side_length() / dim as f64
        } else {
            world.side_length()
        };
        Ok(Self {
            world,
            cell_size,
            dim,
            cell_side,
            entries: Vec::new(),
        })
    }

    /// Grid over `positions`, with agent id = index.
    pub fn rebuild(
        positions: &[Vec2],
        world: TorusSpec,
        cell_size: f64,
    ) -> Result<Self, SpatialError> {
        let mut grid = Self::new(world, cell_size)?;
        grid.refill(positions.iter().copied().enumerate());
        Ok(grid)
    }

    /// Replaces the contents with the given `(id, position)` pairs.
    pub fn refill(&mut self, items: impl IntoIterator<Item = (usize, Vec2)>) {
        self.entries.clear();
        for (id, p) in items {
            let p = self.world.wrap(p);
            let cell = self.cell_of(p);
            self.entries.push(Entry {
                cell,
                id: id as u32,
                pos: p,
            });
        }
        self.entries
            .sort_unstable_by_key(|e| (e.cell, e.id));
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn world(&self) -> &TorusSpec {
        &self.world
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Cells per side, or `None` in exhaustive-scan mode.
    pub fn dimension(&self) -> Option<u32> {
        (self.dim > 0).then_some(self.dim)
    }

    /// Occupied cells as `(cx, cy, ids)`, in cell order.
    pub fn occupied_cells(&self) -> Vec<(u32, u32, Vec<usize>)> {
        let mut out: Vec<(u32, u32, Vec<usize>)> = Vec::new();
        for e in &self.entries {
            let (cx, cy) = self.cell_coords(e.cell);
            match out.last_mut() {
                Some(last) if (last.0, last.1) == (cx, cy) => last.2.push(e.id as usize),
                _ => out.push((cx, cy, vec![e.id as usize])),
            }
        }
        out
    }

    #[inline]
    fn cell_coords(&self, cell: u32) -> (u32, u32) {
        if self.dim == 0 {
            (0, 0)
        } else {
            (cell % self.dim, cell / self.dim)
        }
    }

    #[inline]
    fn axis_cell(&self, c: f64) -> u32 {
        let i = (c / self.cell_side) as u32;
        i.min(self.dim - 1)
    }

    #[inline]
    fn cell_of(&self, p: Vec2) -> u32 {
        if self.dim == 0 {
            0
        } else {
            self.axis_cell(p.y) * self.dim + self.axis_cell(p.x)
        }
    }

    #[inline]
    fn cell_range(&self, cell: u32) -> &[Entry] {
        let lo = self.entries.partition_point(|e| e.cell < cell);
        let hi = lo + self.entries[lo..].partition_point(|e| e.cell == cell);
        &self.entries[lo..hi]
    }

    /// Calls `visit(id, offset, distance)` for every entry within `radius`
    /// (inclusive) of `center`, skipping `exclude`.
    ///
    /// `offset` is the minimal-image displacement from `center` to the entry.
    #[inline]
    pub fn visit_within<F>(
        &self,
        center: Vec2,
        radius: f64,
        exclude: Option<usize>,
        mut visit: F,
    ) -> Result<(), SpatialError>
    where
        F: FnMut(usize, Vec2, f64),
    {
        if radius > self.cell_size {
            return Err(SpatialError::RadiusTooLarge {
                radius,
                cell_size: self.cell_size,
            });
        }
        let center = self.world.wrap(center);
        let r2 = radius * radius;
        let exclude = exclude.map(|e| e as u32);
        let mut check = |e: &Entry| {
            if Some(e.id) == exclude {
                return;
            }
            let d = self.world.delta(center, e.pos);
            let d2 = d.norm_sq();
            if d2 <= r2 {
                visit(e.id as usize, d, d2.sqrt());
            }
        };
        if self.dim == 0 {
            self.entries.iter().for_each(&mut check);
            return Ok(());
        }
        let cx = self.axis_cell(center.x);
        let cy = self.axis_cell(center.y);
        let dim = self.dim;
        for dy in [dim - 1, 0, 1] {
            let y = (cy + dy) % dim;
            for dx in [dim - 1, 0, 1] {
                let x = (cx + dx) % dim;
                for e in self.cell_range(y * dim + x) {
                    check(e);
                }
            }
        }
        Ok(())
    }

    /// Entries within `radius` of `center` as `(id, distance)`.
    pub fn neighbors_within(
        &self,
        center: Vec2,
        radius: f64,
        exclude: Option<usize>,
    ) -> Result<Vec<(usize, f64)>, SpatialError> {
        let mut out = Vec::new();
        self.visit_within(center, radius, exclude, |id, _, d| out.push((id, d)))?;
        Ok(out)
    }

    /// Closest entry within `radius` of `center`, ties to the smaller id.
    pub fn nearest_within(
        &self,
        center: Vec2,
        radius: f64,
    ) -> Result<Option<(usize, f64)>, SpatialError> {
        let mut best: Option<(usize, f64)> = None;
        self.visit_within(center, radius, None, |id, _, d| match best {
            Some((bid, bd)) if bd < d || (bd == d && bid < id) => {}
            _ => best = Some((id, d)),
        })?;
        Ok(best)
    }
}

/// Quadratic reference scan: ids within `radius` of `center`, sorted.
pub fn brute_force_within(
    positions: &[Vec2],
    world: &TorusSpec,
    center: Vec2,
    radius: f64,
    exclude: Option<usize>,
) -> Vec<usize> {
    positions
        .iter()
        .enumerate()
        .filter(|&(i, p)| Some(i) != exclude && world.distance(center, *p) <= radius)
        .map(|(i, _)| i)
        .collect()
}
