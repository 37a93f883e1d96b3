use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::types::Point;
use super::world::World;

/// Configuration-space occupancy grid: a cell is free when the agent disc
/// centred on it clears every obstacle and wall.
#[derive(Debug, Clone)]
pub struct OccupancyGrid {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    free: Vec<bool>,
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier {
    f: f64,
    idx: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on f, ties on index for determinism.
        other.f.total_cmp(&self.f).then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

impl OccupancyGrid {
    /// Grid with cells of half the agent radius.
    pub fn for_world(world: &World) -> Self {
        Self::with_cell(world, world.agent_radius() / 2.0)
    }

    pub fn with_cell(world: &World, cell: f64) -> Self {
        let b = world.bounds();
        let nx = (b.width() / cell).ceil().max(1.0) as usize;
        let ny = (b.height() / cell).ceil().max(1.0) as usize;
        let origin = Point::new(b.min_x, b.min_y);
        let mut grid = Self {
            origin,
            cell,
            nx,
            ny,
            free: vec![false; nx * ny],
        };
        for j in 0..ny {
            for i in 0..nx {
                let c = grid.center(i, j);
                grid.free[j * nx + i] = world.is_free(c);
            }
        }
        grid
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn center(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin.x + (i as f64 + 0.5) * self.cell,
            self.origin.y + (j as f64 + 0.5) * self.cell,
        )
    }

    pub fn is_free_cell(&self, i: usize, j: usize) -> bool {
        self.free[j * self.nx + i]
    }

    pub fn free_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).map(move |i| (i, j)))
            .filter(|&(i, j)| self.is_free_cell(i, j))
    }

    pub fn free_count(&self) -> usize {
        self.free.iter().filter(|&&f| f).count()
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let i = ((p.x - self.origin.x) / self.cell).floor().clamp(0.0, (self.nx - 1) as f64);
        let j = ((p.y - self.origin.y) / self.cell).floor().clamp(0.0, (self.ny - 1) as f64);
        (i as usize, j as usize)
    }

    /// Nearest free cell to `p`, searching outward ring by ring.
    fn nearest_free(&self, p: Point) -> Option<usize> {
        let (ci, cj) = self.cell_of(p);
        let max_ring = self.nx.max(self.ny);
        for ring in 0..=max_ring {
            let mut best: Option<(f64, usize)> = None;
            let lo_i = ci.saturating_sub(ring);
            let hi_i = (ci + ring).min(self.nx - 1);
            let lo_j = cj.saturating_sub(ring);
            let hi_j = (cj + ring).min(self.ny - 1);
            for j in lo_j..=hi_j {
                for i in lo_i..=hi_i {
                    let on_ring = i.abs_diff(ci) == ring || j.abs_diff(cj) == ring;
                    if !on_ring || !self.is_free_cell(i, j) {
                        continue;
                    }
                    let d = self.center(i, j).distance(p);
                    if best.map_or(true, |(bd, _)| d < bd) {
                        best = Some((d, j * self.nx + i));
                    }
                }
            }
            if let Some((_, idx)) = best {
                return Some(idx);
            }
        }
        None
    }

    /// Any-angle path length between two free points: 8-connected A* on the
    /// grid, then shortcut wherever the straight segment is collision-free.
    pub fn path_length(&self, world: &World, from: Point, to: Point) -> f64 {
        if segment_free(world, from, to) {
            return from.distance(to);
        }
        let (Some(s), Some(g)) = (self.nearest_free(from), self.nearest_free(to)) else {
            return f64::INFINITY;
        };
        let Some(cells) = self.astar(s, g) else {
            return f64::INFINITY;
        };
        let mut points = Vec::with_capacity(cells.len() + 2);
        points.push(from);
        points.extend(cells.iter().map(|&idx| self.center(idx % self.nx, idx / self.nx)));
        points.push(to);

        let mut length = 0.0;
        let mut anchor = points[0];
        let mut i = 1;
        while i < points.len() - 1 {
            if segment_free(world, anchor, points[i + 1]) {
                i += 1;
            } else {
                length += anchor.distance(points[i]);
                anchor = points[i];
                i += 1;
            }
        }
        length + anchor.distance(to)
    }

    fn astar(&self, start: usize, goal: usize) -> Option<Vec<usize>> {
        let n = self.free.len();
        let (gx, gy) = (goal % self.nx, goal / self.nx);
        let h = |idx: usize| {
            let dx = (idx % self.nx).abs_diff(gx) as f64;
            let dy = (idx / self.nx).abs_diff(gy) as f64;
            self.cell * ((dx - dy).abs() + SQRT2 * dx.min(dy))
        };
        let mut cost = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let mut closed = vec![false; n];
        let mut heap = BinaryHeap::new();
        cost[start] = 0.0;
        heap.push(Frontier { f: h(start), idx: start });
        while let Some(Frontier { idx, .. }) = heap.pop() {
            if closed[idx] {
                continue;
            }
            if idx == goal {
                let mut path = vec![goal];
                let mut cur = goal;
                while cur != start {
                    cur = parent[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            closed[idx] = true;
            let (i, j) = ((idx % self.nx) as isize, (idx / self.nx) as isize);
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)] {
                let (ni, nj) = (i + di, j + dj);
                if ni < 0 || nj < 0 || ni >= self.nx as isize || nj >= self.ny as isize {
                    continue;
                }
                let (ni, nj) = (ni as usize, nj as usize);
                if !self.is_free_cell(ni, nj) {
                    continue;
                }
                let diagonal = di != 0 && dj != 0;
                if diagonal
                    && !(self.is_free_cell(ni, j as usize) && self.is_free_cell(i as usize, nj))
                {
                    continue;
                }
                let next = nj * self.nx + ni;
                let step = if diagonal { SQRT2 * self.cell } else { self.cell };
                let c = cost[idx] + step;
                if c < cost[next] {
                    cost[next] = c;
                    parent[next] = idx;
                    heap.push(Frontier { f: c + h(next), idx: next });
                }
            }
        }
        None
    }
}

/// Exact check that the agent disc can slide along the segment `a → b`.
pub(crate) fn segment_free(world: &World, a: Point, b: Point) -> bool {
    let r = world.agent_radius();
    let bounds = world.bounds();
    if bounds.clearance(a) < r || bounds.clearance(b) < r {
        return false;
    }
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    world.obstacles().iter().all(|c| {
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((c.x - a.x) * dx + (c.y - a.y) * dy) / len2).clamp(0.0, 1.0)
        };
        let closest = Point::new(a.x + t * dx, a.y + t * dy);
        closest.distance(c.center()) >= c.radius + r - 1e-9
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{Circle, WorldSpec};

    #[test]
    fn wall_forces_detour() {
        let mut spec = WorldSpec::empty(12.0, 12.0);
        spec.obstacles.push(Circle { x: 6.0, y: 6.0, radius: 2.5 });
        let w = World::new(spec).unwrap();
        let (a, b) = (Point::new(2.0, 6.0), Point::new(10.0, 6.0));
        let d = w.geodesic(a, b).unwrap();
        assert!(d > a.distance(b) + 0.5, "{d}");
        // Analytic shortest path around an inflated disc of radius R:
        // two tangents plus the wrapped arc.
        let rr: f64 = 2.75;
        let l: f64 = 4.0;
        let tangent = (l * l - rr * rr).sqrt();
        let arc = rr * (std::f64::consts::PI - 2.0 * (rr / l).acos());
        let exact = 2.0 * tangent + arc;
        assert!(d >= exact - 1e-6 && d < exact * 1.03, "{d} vs {exact}");
    }

    #[test]
    fn enclosed_goal_is_disconnected() {
        let mut spec = WorldSpec::empty(10.0, 10.0);
        // Ring of overlapping obstacles around (5, 5).
        for k in 0..12 {
            let a = k as f64 * std::f64::consts::TAU / 12.0;
            spec.obstacles.push(Circle {
                x: 5.0 + 3.0 * a.cos(),
                y: 5.0 + 3.0 * a.sin(),
                radius: 1.0,
            });
        }
        let w = World::new(spec).unwrap();
        let d = w.geodesic(Point::new(5.0, 5.0), Point::new(0.5, 0.5)).unwrap();
        assert!(d.is_infinite());
    }
}
