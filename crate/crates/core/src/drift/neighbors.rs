use crate::geometry::Point;
use std::collections::HashMap;

/// Uniform cell list with cell side `range`; a query returns every point
/// within `range` of x (and possibly a few more, filtered by the caller).
pub struct CellGrid {
    range: f64,
    dim: usize,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl CellGrid {
    pub fn new(points: &[Point], range: f64) -> Self {
        let dim = points.first().map_or(1, Point::dim);
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(range, p)).or_default().push(i);
        }
        Self { range, dim, cells }
    }

    fn key(range: f64, p: &Point) -> (i64, i64) {
        let c = p.coords();
        let kx = (c[0] / range).floor() as i64;
        let ky = if c.len() > 1 { (c[1] / range).floor() as i64 } else { 0 };
        (kx, ky)
    }

    /// Candidate neighbour indices of `x`, in a fixed order.
    pub fn candidates(&self, x: &Point) -> impl Iterator<Item = usize> + '_ {
        let (kx, ky) = Self::key(self.range, x);
        let dys: &[i64] = if self.dim == 1 { &[0] } else { &[-1, 0, 1] };
        [-1i64, 0, 1]
            .into_iter()
            .flat_map(move |dx| dys.iter().map(move |dy| (kx + dx, ky + dy)))
            .filter_map(|k| self.cells.get(&k))
            .flatten()
            .copied()
    }
}
