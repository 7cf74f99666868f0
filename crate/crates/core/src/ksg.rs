//! Box-assisted k-nearest-neighbor mutual-information estimation.
//!
//! Points live in the unit square after rank transformation. A fixed-size
//! box grid buckets them per cell, per column, and per row; neighbor queries
//! expand cell rings outward until no unexplored cell can hold a closer
//! point, and marginal counts scan the column/row strips covered by the
//! neighborhood rectangle. The estimate itself combines digamma terms of
//! the per-point marginal counts.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{AmicError, Result};

pub const EULER_MASCHERONI: f64 = 0.5772156649015329;

/// Largest argument evaluated by the exact harmonic recurrence; above it the
/// asymptotic expansion is already accurate to well under 1e-12.
const DIGAMMA_EXACT_MAX: u64 = 64;

/// Digamma at a positive integer argument.
pub fn digamma(n: u64) -> f64 {
    assert!(n >= 1, "digamma argument must be a positive count");
    if n <= DIGAMMA_EXACT_MAX {
        let mut psi = -EULER_MASCHERONI;
        for j in 1..n {
            psi += 1.0 / j as f64;
        }
        psi
    } else {
        let x = n as f64;
        let x2 = x * x;
        x.ln() - 1.0 / (2.0 * x) - 1.0 / (12.0 * x2) + 1.0 / (120.0 * x2 * x2)
    }
}

/// Memoized digamma over integer counts. Entries are produced by [`digamma`]
/// itself, so cached and direct evaluations agree bit-for-bit.
#[derive(Debug, Clone)]
pub struct PsiTable {
    vals: Vec<f64>,
}

impl PsiTable {
    pub fn new() -> Self {
        PsiTable { vals: vec![f64::NAN] }
    }

    pub fn get(&mut self, n: u32) -> f64 {
        let n = n as usize;
        while self.vals.len() <= n {
            self.vals.push(digamma(self.vals.len() as u64));
        }
        self.vals[n]
    }
}

impl Default for PsiTable {
    fn default() -> Self {
        Self::new()
    }
}

/// Chebyshev (max-norm) distance between two points.
#[inline]
pub fn max_norm(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

// ===== box grid =====

/// Uniform grid over the unit square holding point indices per cell, plus
/// per-column and per-row resident lists for strip scans.
#[derive(Debug, Clone)]
pub struct BoxGrid {
    c: usize,
    cells: Vec<Vec<u32>>,
    cols: Vec<Vec<u32>>,
    rows: Vec<Vec<u32>>,
    len: usize,
}

impl BoxGrid {
    pub fn with_cells(cells_per_axis: usize) -> Self {
        let c = cells_per_axis.max(1);
        BoxGrid {
            c,
            cells: vec![Vec::new(); c * c],
            cols: vec![Vec::new(); c],
            rows: vec![Vec::new(); c],
            len: 0,
        }
    }

    /// Grid sized for the largest window it will hold: ceil(sqrt(n_max))
    /// cells per axis, so a full window averages about one point per cell.
    pub fn for_window(n_max: usize) -> Self {
        Self::with_cells((n_max as f64).sqrt().ceil() as usize)
    }

    pub fn cells_per_axis(&self) -> usize {
        self.c
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Cell index along one axis. Coordinates outside [0,1] clamp to the
    /// border cells, which keeps strip lookups safe near the edges.
    #[inline]
    pub fn cell_of(&self, coord: f64) -> usize {
        let raw = (coord * self.c as f64).floor();
        (raw as i64).clamp(0, self.c as i64 - 1) as usize
    }

    pub fn insert(&mut self, idx: u32, u: f64, v: f64) {
        let (cx, cy) = (self.cell_of(u), self.cell_of(v));
        self.cells[cy * self.c + cx].push(idx);
        self.cols[cx].push(idx);
        self.rows[cy].push(idx);
        self.len += 1;
    }

    pub fn remove(&mut self, idx: u32, u: f64, v: f64) {
        let (cx, cy) = (self.cell_of(u), self.cell_of(v));
        let c = self.c;
        fn drop_from(list: &mut Vec<u32>, idx: u32) {
            let pos = list
                .iter()
                .position(|&j| j == idx)
                .expect("point missing from grid bucket");
            list.swap_remove(pos);
        }
        drop_from(&mut self.cells[cy * c + cx], idx);
        drop_from(&mut self.cols[cx], idx);
        drop_from(&mut self.rows[cy], idx);
        self.len -= 1;
    }

    pub fn col(&self, cx: usize) -> &[u32] {
        &self.cols[cx]
    }

    pub fn row(&self, cy: usize) -> &[u32] {
        &self.rows[cy]
    }

    /// Visits every cell whose Chebyshev ring index around (cx, cy) is
    /// exactly `r`, clipped to the grid.
    fn for_ring(&self, cx: i64, cy: i64, r: i64, mut f: impl FnMut(&[u32])) {
        let c = self.c as i64;
        let inside = |x: i64, y: i64| x >= 0 && x < c && y >= 0 && y < c;
        if r == 0 {
            if inside(cx, cy) {
                f(&self.cells[(cy * c + cx) as usize]);
            }
            return;
        }
        for x in cx - r..=cx + r {
            if inside(x, cy - r) {
                f(&self.cells[((cy - r) * c + x) as usize]);
            }
            if inside(x, cy + r) {
                f(&self.cells[((cy + r) * c + x) as usize]);
            }
        }
        for y in cy - r + 1..=cy + r - 1 {
            if inside(cx - r, y) {
                f(&self.cells[(y * c + cx - r) as usize]);
            }
            if inside(cx + r, y) {
                f(&self.cells[(y * c + cx + r) as usize]);
            }
        }
    }
}

// ===== neighbor search =====

/// Candidate neighbor ordered by (distance, index); the index breaks exact
/// distance ties deterministically.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Cand {
    d: f64,
    idx: u32,
}

impl Eq for Cand {}

impl Ord for Cand {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d.total_cmp(&other.d).then(self.idx.cmp(&other.idx))
    }
}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The k-nearest neighborhood of a point: the ranking kth neighbor under
/// (distance, index) order plus the per-axis extents of the smallest
/// axis-aligned rectangle containing all k neighbors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborInfo {
    pub kth_idx: u32,
    pub d_x: f64,
    pub d_y: f64,
}

/// Inclusive marginal band populations around a point (the point itself
/// excluded). Every one of the k neighbors lies in both bands, so both
/// counts are at least k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MarginalCounts {
    pub n_x: u32,
    pub n_y: u32,
}

/// Finds the k nearest neighbors of member `i` under the max-norm, expanding
/// cell rings until no unexplored cell can hold a candidate that beats the
/// current kth. Distance ties resolve by ascending sample index.
pub fn knn_query(grid: &BoxGrid, u: &[f64], v: &[f64], i: u32, k: usize) -> Result<NeighborInfo> {
    let n = grid.len();
    if n < k + 1 {
        return Err(AmicError::InsufficientPoints { needed: k + 1, got: n });
    }
    let (ui, vi) = (u[i as usize], v[i as usize]);
    let c = grid.cells_per_axis();
    let w = 1.0 / c as f64;
    let (cx, cy) = (grid.cell_of(ui) as i64, grid.cell_of(vi) as i64);

    let mut heap: BinaryHeap<Cand> = BinaryHeap::with_capacity(k + 1);
    let mut r: i64 = 0;
    loop {
        grid.for_ring(cx, cy, r, |cell| {
            for &j in cell {
                if j == i {
                    continue;
                }
                let d = max_norm((ui, vi), (u[j as usize], v[j as usize]));
                let cand = Cand { d, idx: j };
                if heap.len() < k {
                    heap.push(cand);
                } else if cand < *heap.peek().expect("non-empty heap") {
                    heap.pop();
                    heap.push(cand);
                }
            }
        });

        let x0 = (cx - r).max(0);
        let x1 = (cx + r).min(c as i64 - 1);
        let y0 = (cy - r).max(0);
        let y1 = (cy + r).min(c as i64 - 1);
        let covered_all = x0 == 0 && y0 == 0 && x1 == c as i64 - 1 && y1 == c as i64 - 1;
        if heap.len() == k {
            // Distance from the query point to the nearest unexplored cell,
            // shrunk by a relative epsilon so a rounding error in the cell
            // arithmetic can never discard an exact-tie candidate.
            let mut bound = f64::INFINITY;
            if x0 > 0 {
                bound = bound.min(ui - x0 as f64 * w);
            }
            if x1 < c as i64 - 1 {
                bound = bound.min((x1 + 1) as f64 * w - ui);
            }
            if y0 > 0 {
                bound = bound.min(vi - y0 as f64 * w);
            }
            if y1 < c as i64 - 1 {
                bound = bound.min((y1 + 1) as f64 * w - vi);
            }
            let kth = heap.peek().expect("full heap").d;
            if covered_all || kth < bound * (1.0 - 1e-12) {
                break;
            }
        } else if covered_all {
            break;
        }
        r += 1;
    }

    let kth_idx = heap.peek().expect("k candidates").idx;
    let mut d_x = 0.0f64;
    let mut d_y = 0.0f64;
    for cand in heap.iter() {
        d_x = d_x.max((ui - u[cand.idx as usize]).abs());
        d_y = d_y.max((vi - v[cand.idx as usize]).abs());
    }
    Ok(NeighborInfo { kth_idx, d_x, d_y })
}

/// Counts members within the per-axis bands `|u_j - u_i| <= d_x` and
/// `|v_j - v_i| <= d_y` (boundary inclusive, `i` excluded), scanning one
/// column/row strip per axis with the exact predicate applied per resident.
pub fn marginal_counts(
    grid: &BoxGrid,
    u: &[f64],
    v: &[f64],
    i: u32,
    info: &NeighborInfo,
) -> MarginalCounts {
    let ui = u[i as usize];
    let vi = v[i as usize];
    let c = grid.cells_per_axis();

    // One extra cell of slack on each side absorbs any rounding in the band
    // endpoints; membership itself is decided by the exact predicate.
    let lo = grid.cell_of(ui - info.d_x).saturating_sub(1);
    let hi = (grid.cell_of(ui + info.d_x) + 1).min(c - 1);
    let mut n_x = 0u32;
    for col in lo..=hi {
        for &j in grid.col(col) {
            if j != i && (u[j as usize] - ui).abs() <= info.d_x {
                n_x += 1;
            }
        }
    }

    let lo = grid.cell_of(vi - info.d_y).saturating_sub(1);
    let hi = (grid.cell_of(vi + info.d_y) + 1).min(c - 1);
    let mut n_y = 0u32;
    for row in lo..=hi {
        for &j in grid.row(row) {
            if j != i && (v[j as usize] - vi).abs() <= info.d_y {
                n_y += 1;
            }
        }
    }

    MarginalCounts { n_x, n_y }
}

// ===== the estimator =====

/// Mutual information in nats: the raw digamma combination and its
/// non-negative clamp. Raw values can dip slightly below zero for weakly
/// dependent data; downstream thresholds use the clamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiEstimate {
    pub raw: f64,
    pub clamped: f64,
}

/// Assembles the estimate from accumulated digamma sums. Batch and
/// incremental paths both finish here so the final combine rounds the same
/// way everywhere.
pub fn mi_from_sums(k: usize, n: usize, sum_psi_nx: f64, sum_psi_ny: f64) -> MiEstimate {
    let raw = digamma(k as u64) - 1.0 / k as f64 - (sum_psi_nx + sum_psi_ny) / n as f64
        + digamma(n as u64);
    MiEstimate { raw, clamped: raw.max(0.0) }
}

/// Batch estimate over rank coordinates: builds a grid sized to the window,
/// resolves every neighborhood and both marginal counts, and combines.
pub fn ksg_mi(u: &[f64], v: &[f64], k: usize) -> Result<MiEstimate> {
    assert_eq!(u.len(), v.len(), "coordinate slices must pair up");
    let n = u.len();
    if k == 0 {
        return Err(AmicError::InvalidConfig("k must be at least 1".into()));
    }
    if n < k + 2 {
        return Err(AmicError::InsufficientPoints { needed: k + 2, got: n });
    }
    let mut grid = BoxGrid::for_window(n);
    for i in 0..n {
        grid.insert(i as u32, u[i], v[i]);
    }
    let mut psi = PsiTable::new();
    let mut sum_x = 0.0;
    let mut sum_y = 0.0;
    for i in 0..n {
        let info = knn_query(&grid, u, v, i as u32, k)?;
        let counts = marginal_counts(&grid, u, v, i as u32, &info);
        debug_assert!(counts.n_x as usize >= k && counts.n_y as usize >= k);
        sum_x += psi.get(counts.n_x);
        sum_y += psi.get(counts.n_y);
    }
    Ok(mi_from_sums(k, n, sum_x, sum_y))
}

// ===== entropy quantities =====

/// Plug-in histogram entropy of values in [0,1] over `bins` equal-width
/// bins, in nats. Empty bins contribute nothing; the result lies in
/// [0, ln bins].
pub fn plugin_entropy(values: &[f64], bins: usize) -> f64 {
    assert!(!values.is_empty(), "entropy of an empty sample");
    assert!(bins >= 1, "need at least one bin");
    let mut counts = vec![0usize; bins];
    for &x in values {
        let raw = (x * bins as f64).floor();
        let b = (raw as i64).clamp(0, bins as i64 - 1) as usize;
        counts[b] += 1;
    }
    let n = values.len() as f64;
    let mut h = 0.0;
    for &cnt in &counts {
        if cnt > 0 {
            let p = cnt as f64 / n;
            h -= p * p.ln();
        }
    }
    h
}

/// Default bin count for window histograms: ceil(sqrt(n)).
pub fn entropy_bins(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).max(1)
}

/// Joint window entropy H_w = h_x + h_y - I, clamped into [0, ln n].
pub fn window_entropy(h_x: f64, h_y: f64, mi_clamped: f64, n: usize) -> f64 {
    (h_x + h_y - mi_clamped).clamp(0.0, (n as f64).ln())
}

/// Normalized window entropy H_w / ln n, in [0,1].
pub fn normalized_entropy(h_w: f64, n: usize) -> f64 {
    debug_assert!(n >= 2);
    (h_w / (n as f64).ln()).clamp(0.0, 1.0)
}

/// MI normalized by the maximum achievable entropy ln n.
pub fn nmi_max(mi_clamped: f64, n: usize) -> f64 {
    debug_assert!(n >= 2);
    (mi_clamped / (n as f64).ln()).clamp(0.0, 1.0)
}

/// MI normalized by the window entropy; zero when the window entropy is zero.
pub fn nmi_entropy(mi_clamped: f64, h_w: f64) -> f64 {
    if h_w == 0.0 {
        0.0
    } else {
        (mi_clamped / h_w).clamp(0.0, 1.0)
    }
}

/// Picks the smallest k whose forward-looking MI spread (max minus min over
/// the remaining ks) stays within 10% of the profile's mean MI. The largest
/// candidate always qualifies, so the scan is total.
pub fn tune_k(u: &[f64], v: &[f64], ks: std::ops::RangeInclusive<usize>) -> Result<usize> {
    let (lo, hi) = (*ks.start(), *ks.end());
    if lo == 0 || lo > hi {
        return Err(AmicError::InvalidConfig("empty or zero-based k range".into()));
    }
    let profile: Vec<f64> = (lo..=hi)
        .map(|k| ksg_mi(u, v, k).map(|e| e.clamped))
        .collect::<Result<_>>()?;
    let mean = profile.iter().sum::<f64>() / profile.len() as f64;
    for (off, k) in (lo..=hi).enumerate() {
        let tail = &profile[off..];
        let max = tail.iter().cloned().fold(f64::MIN, f64::max);
        let min = tail.iter().cloned().fold(f64::MAX, f64::min);
        if max - min <= 0.1 * mean {
            return Ok(k);
        }
    }
    Ok(hi)
}
