use crate::sim::{OccupancyGrid, Point, Pose, World, V_MAX};

/// Default coverage disc radius, metres.
pub const COVERAGE_RADIUS: f64 = 2.0;
/// Resolution of the evaluation grid, metres.
pub const COVERAGE_CELL: f64 = 0.1;

/// Incremental union-of-discs coverage over a world's free space.
#[derive(Debug, Clone)]
pub struct CoverageMap {
    grid: OccupancyGrid,
    radius: f64,
    seen: Vec<bool>,
    covered: usize,
    free: usize,
}

impl CoverageMap {
    pub fn new(world: &World, radius: f64) -> Self {
        Self::with_cell(world, radius, COVERAGE_CELL)
    }

    pub fn with_cell(world: &World, radius: f64, cell: f64) -> Self {
        let grid = OccupancyGrid::with_cell(world, cell);
        let (nx, ny) = grid.dims();
        let free = grid.free_count();
        Self {
            grid,
            radius,
            seen: vec![false; nx * ny],
            covered: 0,
            free,
        }
    }

    pub fn visit(&mut self, p: Point) {
        let (nx, ny) = self.grid.dims();
        let cell = self.grid.cell_size();
        let o = self.grid.center(0, 0);
        let span = |c: f64, origin: f64, n: usize| {
            let lo = ((c - self.radius - origin) / cell).floor().max(0.0) as usize;
            let hi = (((c + self.radius - origin) / cell).ceil().max(0.0) as usize).min(n - 1);
            (lo, hi)
        };
        let (i0, i1) = span(p.x, o.x, nx);
        let (j0, j1) = span(p.y, o.y, ny);
        let r2 = self.radius * self.radius;
        for j in j0..=j1 {
            for i in i0..=i1 {
                let idx = j * nx + i;
                if self.seen[idx] || !self.grid.is_free_cell(i, j) {
                    continue;
                }
                let c = self.grid.center(i, j);
                let (dx, dy) = (c.x - p.x, c.y - p.y);
                if dx * dx + dy * dy <= r2 {
                    self.seen[idx] = true;
                    self.covered += 1;
                }
            }
        }
    }

    pub fn fraction(&self) -> f64 {
        if self.free == 0 {
            0.0
        } else {
            self.covered as f64 / self.free as f64
        }
    }

    /// Covered area in square metres.
    pub fn area(&self) -> f64 {
        self.covered as f64 * self.grid.cell_size().powi(2)
    }
}

/// Fraction of free space within `radius` of some pose in `trace`.
pub fn coverage(trace: &[Pose], world: &World, radius: f64) -> f64 {
    let mut map = CoverageMap::new(world, radius);
    for p in trace {
        map.visit(p.position());
    }
    map.fraction()
}

/// `(step, coverage)` sampled every `every` steps and at the end. Entry `i` of
/// `trace` is the pose after `i` steps.
pub fn coverage_curve(trace: &[Pose], world: &World, radius: f64, every: usize) -> Vec<(usize, f64)> {
    let every = every.max(1);
    let mut map = CoverageMap::new(world, radius);
    let mut out = Vec::new();
    for (step, p) in trace.iter().enumerate() {
        map.visit(p.position());
        if step % every == 0 || step + 1 == trace.len() {
            out.push((step, map.fraction()));
        }
    }
    out
}

/// Steps needed to cover `geodesic` metres at full speed.
pub fn optimal_steps(geodesic: f64, dt: f64) -> usize {
    ((geodesic / (V_MAX * dt)).ceil() as usize).max(1)
}

/// Success weighted by completion time.
pub fn sct(success: bool, t_agent: usize, t_optimal: usize) -> f64 {
    assert!(t_optimal >= 1, "optimal time must be at least one step");
    if !success {
        return 0.0;
    }
    t_optimal as f64 / t_agent.max(t_optimal) as f64
}

/// Median of `values`; the mean of the middle pair for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Ranks starting at 1, ties sharing their average rank.
fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman rank correlation; `None` for fewer than two points or a constant input.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    if x.len() < 2 {
        return None;
    }
    let rho = pearson(&ranks(x), &ranks(y));
    rho.is_finite().then_some(rho)
}
