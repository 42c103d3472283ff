//! Area coverage on a square raster of `r_t/2` cells.

use serde::{Deserialize, Serialize};

use crate::geometry::{TorusSpec, Vec2};

/// How an agent marks cells as covered.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageMode {
    /// Every cell whose center lies within `r_t` of the agent.
    #[default]
    Footprint,
    /// Only the cell containing the agent's position.
    Point,
}

#[derive(Clone, Debug)]
pub struct CoverageGrid {
    world: TorusSpec,
    mode: CoverageMode,
    r_t: f64,
    cell_side: f64,
    cells_per_side: usize,
    bits: Vec<u64>,
    covered: u64,
    history: Vec<u32>,
}

impl CoverageGrid {
    /// Raster with `m = ceil(L / (r_t/2))` cells per side.
    pub fn new(world: TorusSpec, r_t: f64, mode: CoverageMode) -> Self {
        let cell_side = r_t / 2.0;
        let cells_per_side = (world.side_length() / cell_side).ceil() as usize;
        let total = cells_per_side * cells_per_side;
        Self {
            world,
            mode,
            r_t,
            cell_side,
            cells_per_side,
            bits: vec![0; total.div_ceil(64)],
            covered: 0,
            history: Vec::new(),
        }
    }

    pub fn cells_per_side(&self) -> usize {
        self.cells_per_side
    }

    /// `M`, the number of cells.
    pub fn total_cells(&self) -> u64 {
        (self.cells_per_side * self.cells_per_side) as u64
    }

    /// `m_t` for the latest update.
    pub fn covered(&self) -> u64 {
        self.covered
    }

    pub fn history(&self) -> &[u32] {
        &self.history
    }

    pub fn into_history(self) -> Vec<u32> {
        self.history
    }

    /// Cardinality recomputed from the bitset.
    pub fn popcount(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_covered(&self, ix: usize, iy: usize) -> bool {
        let k = iy * self.cells_per_side + ix;
        self.bits[k / 64] & (1 << (k % 64)) != 0
    }

    #[inline]
    fn mark(&mut self, ix: usize, iy: usize) {
        let k = iy * self.cells_per_side + ix;
        let (w, b) = (k / 64, 1u64 << (k % 64));
        if self.bits[w] & b == 0 {
            self.bits[w] |= b;
            self.covered += 1;
        }
    }

    fn mark_agent(&mut self, p: Vec2) {
        let m = self.cells_per_side as i64;
        let cs = self.cell_side;
        let p = self.world.wrap(p);
        match self.mode {
            CoverageMode::Point => {
                let ix = ((p.x / cs) as i64).min(m - 1) as usize;
                let iy = ((p.y / cs) as i64).min(m - 1) as usize;
                self.mark(ix, iy);
            }
            CoverageMode::Footprint => {
                let r = self.r_t;
                let r2 = r * r;
                let lo_x = ((p.x - r) / cs - 0.5).floor() as i64;
                let hi_x = ((p.x + r) / cs - 0.5).ceil() as i64;
                let lo_y = ((p.y - r) / cs - 0.5).floor() as i64;
                let hi_y = ((p.y + r) / cs - 0.5).ceil() as i64;
                for ky in lo_y..=hi_y {
                    let iy = ky.rem_euclid(m) as usize;
                    let cy = (iy as f64 + 0.5) * cs;
                    for kx in lo_x..=hi_x {
                        let ix = kx.rem_euclid(m) as usize;
                        let cx = (ix as f64 + 0.5) * cs;
                        if self.world.distance_sq(p, Vec2::new(cx, cy)) <= r2 {
                            self.mark(ix, iy);
                        }
                    }
                }
            }
        }
    }

    /// Marks cells for the given positions and appends `m_t` to the history.
    pub fn update<'a>(&mut self, positions: impl IntoIterator<Item = &'a Vec2>) {
        for p in positions {
            self.mark_agent(*p);
        }
        self.history.push(self.covered as u32);
    }
}

/// First time (seconds) at which `m_t / M ≥ fraction`, or `None` if the run
/// never got there.
pub fn first_reaching(history: &[u32], total_cells: u64, fraction: f64, c_f: f64) -> Option<f64> {
    if fraction <= 0.0 {
        return Some(0.0);
    }
    let needed = fraction * total_cells as f64;
    history
        .iter()
        .position(|&m| m as f64 >= needed)
        .map(|t| t as f64 / c_f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::unit_from_angle;

    fn world() -> TorusSpec {
        TorusSpec::new(2000.0).unwrap()
    }

    #[test]
    fn dimensions() {
        let g = CoverageGrid::new(TorusSpec::new(20_000.0).unwrap(), 10.0, CoverageMode::Footprint);
        assert_eq!(g.cells_per_side(), 4000);
        assert_eq!(g.total_cells(), 16_000_000);
        let g = CoverageGrid::new(TorusSpec::new(21.0).unwrap(), 10.0, CoverageMode::Footprint);
        assert_eq!(g.cells_per_side(), 5);
    }

    #[test]
    fn stationary_agent_covers_its_disc_once() {
        let mut g = CoverageGrid::new(world(), 10.0, CoverageMode::Footprint);
        let p = Vec2::new(1000.0, 1000.0);
        g.update([&p]);
        let first = g.covered();
        // cell centers on the 5 m lattice offset by 2.5 within 10 m
        let mut expect = 0;
        for i in 0..400 {
            for j in 0..400 {
                let c = Vec2::new((i as f64 + 0.5) * 5.0, (j as f64 + 0.5) * 5.0);
                if world().distance(p, c) <= 10.0 {
                    expect += 1;
                    assert!(g.is_covered(i, j));
                }
            }
        }
        assert_eq!(first, expect);
        for _ in 0..5 {
            g.update([&p]);
        }
        assert_eq!(g.history(), &[first as u32; 6]);
        assert_eq!(g.popcount(), first);
    }

    #[test]
    fn footprint_wraps_across_seam() {
        let mut g = CoverageGrid::new(world(), 10.0, CoverageMode::Footprint);
        let corner = Vec2::new(0.0, 0.0);
        g.update([&corner]);
        let mut h = CoverageGrid::new(world(), 10.0, CoverageMode::Footprint);
        h.update([&Vec2::new(1000.0, 1000.0)]);
        assert_eq!(g.covered(), h.covered());
        assert!(g.is_covered(399, 399) && g.is_covered(0, 0));
    }

    #[test]
    fn point_mode_marks_one_cell() {
        let mut g = CoverageGrid::new(world(), 10.0, CoverageMode::Point);
        g.update([&Vec2::new(12.0, 7.0)]);
        assert_eq!(g.covered(), 1);
        assert!(g.is_covered(2, 1));
    }

    #[test]
    fn straight_mover_matches_swept_strip() {
        let (r_t, v, c_f, ticks) = (10.0, 10.0, 1.0, 1000usize);
        let w = TorusSpec::new(20_000.0).unwrap();
        let mut g = CoverageGrid::new(w, r_t, CoverageMode::Footprint);
        let dir = unit_from_angle(17.0);
        let mut p = Vec2::new(3000.0, 4000.0);
        g.update([&p]);
        let mut prev = g.covered();
        for _ in 0..ticks {
            p = w.wrap(p + dir * (v / c_f));
            g.update([&p]);
            assert!(g.covered() >= prev);
            prev = g.covered();
        }
        let area = g.covered() as f64 * (r_t / 2.0) * (r_t / 2.0);
        let expect = 2.0 * r_t * v * ticks as f64 / c_f + std::f64::consts::PI * r_t * r_t;
        assert!((area - expect).abs() / expect < 0.05, "{area} vs {expect}");
    }

    #[test]
    fn first_reaching_scans_history() {
        let h = [0, 10, 40, 50, 90];
        assert_eq!(first_reaching(&h, 100, 0.0, 1.0), Some(0.0));
        assert_eq!(first_reaching(&h, 100, 0.5, 1.0), Some(3.0));
        assert_eq!(first_reaching(&h, 100, 0.5, 10.0), Some(0.3));
        assert_eq!(first_reaching(&h, 100, 0.95, 1.0), None);
    }
}
