//! Uniform-grid hash of agent positions.

use crate::geom::{Rect, Vec2};

/// Bucket grid over a bounded region. Agent ids are dense `usize`s; each
/// indexed agent lives in exactly one cell. Positions outside the region
/// are clamped into the border cells.
#[derive(Debug, Clone)]
pub struct OccupancyIndex {
    origin: Vec2,
    cell_size: f64,
    cols: usize,
    rows: usize,
    cells: Vec<Vec<(usize, Vec2)>>,
    slot: Vec<Option<usize>>,
    len: usize,
}

impl OccupancyIndex {
    pub fn new(bounds: Rect, cell_size: f64) -> Self {
        assert!(cell_size > 0.0, "cell size must be positive");
        let cols = ((bounds.width() / cell_size).ceil() as usize).max(1);
        let rows = ((bounds.height() / cell_size).ceil() as usize).max(1);
        Self {
            origin: bounds.min,
            cell_size,
            cols,
            rows,
            cells: vec![Vec::new(); cols * rows],
            slot: Vec::new(),
            len: 0,
        }
    }

    pub fn from_points<I>(bounds: Rect, cell_size: f64, points: I) -> Self
    where
        I: IntoIterator<Item = (usize, Vec2)>,
    {
        let mut index = Self::new(bounds, cell_size);
        for (id, p) in points {
            index.insert(id, p);
        }
        index
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, id: usize) -> bool {
        self.slot.get(id).copied().flatten().is_some()
    }

    fn coord(&self, v: f64, origin: f64, n: usize) -> usize {
        let c = ((v - origin) / self.cell_size).floor();
        if c <= 0.0 {
            0
        } else {
            (c as usize).min(n - 1)
        }
    }

    fn cell_of(&self, p: Vec2) -> usize {
        self.coord(p.y, self.origin.y, self.rows) * self.cols + self.coord(p.x, self.origin.x, self.cols)
    }

    /// Inserts `id` at `p`, replacing any previous entry for the same id.
    pub fn insert(&mut self, id: usize, p: Vec2) {
        self.remove(id);
        if self.slot.len() <= id {
            self.slot.resize(id + 1, None);
        }
        let cell = self.cell_of(p);
        self.cells[cell].push((id, p));
        self.slot[id] = Some(cell);
        self.len += 1;
    }

    pub fn remove(&mut self, id: usize) -> bool {
        let Some(cell) = self.slot.get(id).copied().flatten() else {
            return false;
        };
        let bucket = &mut self.cells[cell];
        if let Some(i) = bucket.iter().position(|&(a, _)| a == id) {
            bucket.swap_remove(i);
        }
        self.slot[id] = None;
        self.len -= 1;
        true
    }

    pub fn update(&mut self, id: usize, p: Vec2) {
        if let Some(cell) = self.slot.get(id).copied().flatten() {
            let target = self.cell_of(p);
            if target == cell {
                if let Some(e) = self.cells[cell].iter_mut().find(|e| e.0 == id) {
                    e.1 = p;
                }
                return;
            }
        }
        self.insert(id, p);
    }

    /// Calls `f(id, position)` for every indexed agent within distance `r`
    /// of `pos`. Visit order is cell-major and not meant to be relied upon.
    pub fn for_each_within<F: FnMut(usize, Vec2)>(&self, pos: Vec2, r: f64, mut f: F) {
        if r < 0.0 || self.len == 0 {
            return;
        }
        let r_sq = r * r;
        let c0 = self.coord(pos.x - r, self.origin.x, self.cols);
        let c1 = self.coord(pos.x + r, self.origin.x, self.cols);
        let r0 = self.coord(pos.y - r, self.origin.y, self.rows);
        let r1 = self.coord(pos.y + r, self.origin.y, self.rows);
        for row in r0..=r1 {
            for col in c0..=c1 {
                for &(id, p) in &self.cells[row * self.cols + col] {
                    if p.distance_sq(pos) <= r_sq {
                        f(id, p);
                    }
                }
            }
        }
    }

    /// Agents within Euclidean distance `r` of `pos`, sorted by
    /// `(distance, id)`.
    pub fn neighbors_within(&self, pos: Vec2, r: f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        self.for_each_within(pos, r, |id, p| out.push((id, p.distance(pos))));
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounds() -> Rect {
        Rect::new(0.0, 0.0, 10.0, 10.0)
    }

    #[test]
    fn zero_radius_without_exact_hit_is_empty() {
        let idx = OccupancyIndex::from_points(bounds(), 1.0, [(0, Vec2::new(1.0, 1.0))]);
        assert!(idx.neighbors_within(Vec2::new(1.5, 1.0), 0.0).is_empty());
        assert_eq!(idx.neighbors_within(Vec2::new(1.0, 1.0), 0.0), vec![(0, 0.0)]);
    }

    #[test]
    fn sorted_by_distance_inclusive_radius() {
        let q = Vec2::new(5.0, 5.0);
        let idx = OccupancyIndex::from_points(
            bounds(),
            1.0,
            [
                (7, Vec2::new(7.0, 5.0)),
                (3, Vec2::new(5.0, 6.0)),
                (9, Vec2::new(5.5, 5.0)),
            ],
        );
        assert_eq!(idx.neighbors_within(q, 1.0), vec![(9, 0.5), (3, 1.0)]);
    }

    #[test]
    fn ties_broken_by_id() {
        let q = Vec2::new(5.0, 5.0);
        let idx = OccupancyIndex::from_points(bounds(), 2.0, [(4, Vec2::new(6.0, 5.0)), (2, Vec2::new(4.0, 5.0))]);
        let ids: Vec<_> = idx.neighbors_within(q, 1.0).iter().map(|e| e.0).collect();
        assert_eq!(ids, vec![2, 4]);
    }

    #[test]
    fn update_and_remove_keep_one_entry_per_agent() {
        let mut idx = OccupancyIndex::new(bounds(), 1.0);
        idx.insert(0, Vec2::new(0.5, 0.5));
        idx.update(0, Vec2::new(9.5, 9.5));
        assert_eq!(idx.len(), 1);
        assert!(idx.neighbors_within(Vec2::new(0.5, 0.5), 1.0).is_empty());
        assert_eq!(idx.neighbors_within(Vec2::new(9.5, 9.5), 0.1).len(), 1);
        assert!(idx.remove(0));
        assert!(!idx.remove(0));
        assert!(idx.is_empty());
    }

    #[test]
    fn out_of_bounds_points_are_still_found() {
        let idx = OccupancyIndex::from_points(bounds(), 1.0, [(1, Vec2::new(-0.5, 11.0))]);
        assert_eq!(idx.neighbors_within(Vec2::new(0.0, 10.5), 1.0).len(), 1);
    }
}
