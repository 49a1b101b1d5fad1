//! Exhaustive 1-D cover oracle. Points on a line; a station at `s` covers
//! `u` when `|u - s| <= r`, and stations chained by gaps of at most `d`
//! cover everything from `first - r` to `last + r`. Every increasing
//! sequence of grid stations is considered, memoised on (last station,
//! first uncovered point). The grid is exact when points, `r` and `d`
//! share it.

use std::collections::HashMap;

const EPS: f64 = 1e-9;

struct Search<'a> {
    points: &'a [f64],
    grid: Vec<f64>,
    r: f64,
    d: f64,
    memo: HashMap<(usize, usize), usize>,
}

impl Search<'_> {
    /// First point index right of `reach`, from `i`.
    fn skip(&self, mut i: usize, reach: f64) -> usize {
        while i < self.points.len() && self.points[i] <= reach + EPS {
            i += 1;
        }
        i
    }

    /// Fewest further stations after a station at `grid[last]`, with
    /// `points[i..]` uncovered. `usize::MAX` when impossible.
    fn best(&mut self, last: usize, i: usize) -> usize {
        if i == self.points.len() {
            return 0;
        }
        if let Some(&v) = self.memo.get(&(last, i)) {
            return v;
        }
        let mut best = usize::MAX;
        for g in last + 1..self.grid.len() {
            let s = self.grid[g];
            let chained = s - self.grid[last] <= self.d + EPS;
            // A fresh chain must not skip over points[i].
            if !chained && s - self.r > self.points[i] + EPS {
                break;
            }
            let rest = self.best(g, self.skip(i, s + self.r));
            if rest != usize::MAX {
                best = best.min(rest + 1);
            }
        }
        self.memo.insert((last, i), best);
        best
    }
}

/// Fewest stations covering every point.
pub fn min_stations(points: &[f64], r: f64, d: f64, step: f64) -> usize {
    let mut sorted = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    let Some(&lo) = sorted.first() else { return 0 };
    let hi = sorted[sorted.len() - 1] + r;
    let grid: Vec<f64> = (0..).map(|i| lo - r + step * i as f64).take_while(|&s| s <= hi + EPS).collect();
    let mut search = Search { points: &sorted, grid, r, d, memo: HashMap::new() };
    let mut best = usize::MAX;
    for g in 0..search.grid.len() {
        let s = search.grid[g];
        if s - r > sorted[0] + EPS {
            break;
        }
        let rest = search.best(g, search.skip(0, s + r));
        if rest != usize::MAX {
            best = best.min(rest + 1);
        }
    }
    best
}
