use serde::{Deserialize, Serialize};

use super::{MapId, StageSide};

/// Side length of the square patch grid.
pub const GRID_SIZE: i32 = 51;

/// Subarea tiles along each axis.
const TILES: i32 = 10;
const TILE: i32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Patch {
    pub x: i32,
    pub y: i32,
}

impl Patch {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn in_grid(self) -> bool {
        (0..GRID_SIZE).contains(&self.x) && (0..GRID_SIZE).contains(&self.y)
    }

    pub fn index(self) -> usize {
        (self.y * GRID_SIZE + self.x) as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::new(i as i32 % GRID_SIZE, i as i32 / GRID_SIZE)
    }

    pub fn distance_sq(self, other: Patch) -> i32 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Inclusive rectangle of patches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchRect {
    pub x0: i32,
    pub x1: i32,
    pub y0: i32,
    pub y1: i32,
}

impl PatchRect {
    pub const fn new(x0: i32, x1: i32, y0: i32, y1: i32) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn contains(&self, p: Patch) -> bool {
        (self.x0..=self.x1).contains(&p.x) && (self.y0..=self.y1).contains(&p.y)
    }

    /// Squared Euclidean distance from `p` to the nearest patch inside.
    pub fn distance_sq(&self, p: Patch) -> i32 {
        let dx = (self.x0 - p.x).max(0).max(p.x - self.x1);
        let dy = (self.y0 - p.y).max(0).max(p.y - self.y1);
        dx * dx + dy * dy
    }

    pub fn patches(&self) -> impl Iterator<Item = Patch> + '_ {
        (self.y0..=self.y1).flat_map(move |y| (self.x0..=self.x1).map(move |x| Patch::new(x, y)))
    }
}

/// Fixed geometry of one map. Stages are impassable; so are the bar and
/// restroom patches themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapLayout {
    pub left_stage: PatchRect,
    pub right_stage: PatchRect,
    pub bar: Patch,
    pub restroom: Patch,
}

impl MapLayout {
    /// Default layouts. Origin is the bottom-left patch, `y` grows upwards.
    ///
    /// | map | left stage          | right stage          |
    /// |-----|---------------------|----------------------|
    /// | A   | x 0..=2, y 20..=30  | x 48..=50, y 20..=30 |
    /// | B   | x 0..=2, y 20..=30  | x 40..=50, y 0..=10  |
    /// | C   | x 0..=2, y 40..=50  | x 48..=50, y 0..=10  |
    ///
    /// Map C keeps the wall-strip stages of map A but pushes them into
    /// opposite corners, so its stages are the farthest apart of the three.
    ///
    /// The bar sits at (25, 2) and the restroom at (25, 48) on every map.
    pub fn for_map(map: MapId) -> Self {
        let (left_stage, right_stage) = match map {
            MapId::A => (PatchRect::new(0, 2, 20, 30), PatchRect::new(48, 50, 20, 30)),
            MapId::B => (PatchRect::new(0, 2, 20, 30), PatchRect::new(40, 50, 0, 10)),
            MapId::C => (PatchRect::new(0, 2, 40, 50), PatchRect::new(48, 50, 0, 10)),
        };
        Self {
            left_stage,
            right_stage,
            bar: Patch::new(25, 2),
            restroom: Patch::new(25, 48),
        }
    }

    pub fn stage(&self, side: StageSide) -> &PatchRect {
        match side {
            StageSide::Left => &self.left_stage,
            StageSide::Right => &self.right_stage,
        }
    }

    pub fn is_blocked(&self, p: Patch) -> bool {
        self.left_stage.contains(p) || self.right_stage.contains(p) || p == self.bar || p == self.restroom
    }
}

/// Partition of the grid into a 10×10 arrangement of tiles. Tiles are 5
/// patches wide except the last row and column, which are 6 wide so the
/// 51-patch side is covered exactly.
#[derive(Debug, Clone)]
pub struct Subareas {
    of_patch: Vec<u16>,
    walkable: Vec<u32>,
}

impl Subareas {
    pub const COUNT: usize = (TILES * TILES) as usize;

    pub fn new(layout: &MapLayout) -> Self {
        let mut of_patch = Vec::with_capacity((GRID_SIZE * GRID_SIZE) as usize);
        let mut walkable = vec![0u32; Self::COUNT];
        for i in 0..(GRID_SIZE * GRID_SIZE) as usize {
            let p = Patch::from_index(i);
            let s = Self::tile_of(p);
            of_patch.push(s as u16);
            if !layout.is_blocked(p) {
                walkable[s] += 1;
            }
        }
        Self { of_patch, walkable }
    }

    fn tile_of(p: Patch) -> usize {
        let tx = (p.x / TILE).min(TILES - 1);
        let ty = (p.y / TILE).min(TILES - 1);
        (ty * TILES + tx) as usize
    }

    pub fn of(&self, p: Patch) -> usize {
        self.of_patch[p.index()] as usize
    }

    /// Patches in subarea `s` that agents can stand on.
    pub fn walkable(&self, s: usize) -> u32 {
        self.walkable[s]
    }

    /// Total patches in subarea `s`, walkable or not.
    pub fn size(s: usize) -> u32 {
        let (tx, ty) = (s as i32 % TILES, s as i32 / TILES);
        let w = |t: i32| {
            if t == TILES - 1 {
                GRID_SIZE - TILE * (TILES - 1)
            } else {
                TILE
            }
        };
        (w(tx) * w(ty)) as u32
    }

    /// 4-connected neighbours of subarea `s`.
    pub fn neighbors(s: usize) -> impl Iterator<Item = usize> {
        let (tx, ty) = (s as i32 % TILES, s as i32 / TILES);
        [(0, 1), (1, 0), (0, -1), (-1, 0)]
            .into_iter()
            .map(move |(dx, dy)| (tx + dx, ty + dy))
            .filter(|&(x, y)| (0..TILES).contains(&x) && (0..TILES).contains(&y))
            .map(|(x, y)| (y * TILES + x) as usize)
    }
}
