//! Sliding-window estimator state maintained incrementally.
//!
//! A window over a ranked pair keeps, per member point, its ranking kth
//! neighbor, the per-axis extents of its neighborhood, and both marginal
//! band counts. When points enter or leave, only the points whose bands the
//! change touches are revisited: a change that displaces someone's kth
//! neighbor triggers a fresh neighbor search for that point, while a change
//! that merely lands in (or leaves) a marginal band adjusts the counts in
//! place. Every record therefore always equals what a from-scratch search
//! on the current membership would produce, and the window's estimate is a
//! pure function of the record set — independent of the history that led
//! there.

use std::collections::{BTreeSet, HashMap};
use std::ops::Range;

use crate::error::{AmicError, Result};
use crate::ingest::RankedPair;
use crate::ksg::{knn_query, marginal_counts, mi_from_sums, BoxGrid, MiEstimate, PsiTable};

/// Cached neighborhood summary for one window member. A record exists
/// exactly while it is valid, and then its fields match a from-scratch
/// neighbor search plus marginal count on the current members: `kth_idx`
/// the ranking kth neighbor under (distance, index) order, `d_x`/`d_y` the
/// per-axis spans of the k-neighborhood, `n_x`/`n_y` the inclusive band
/// populations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointRecord {
    pub kth_idx: u32,
    pub d_x: f64,
    pub d_y: f64,
    pub n_x: u32,
    pub n_y: u32,
}

/// Axis-aligned rectangle spanned by a point's neighborhood, clipped to the
/// unit square. Membership changes inside it are the ones that can displace
/// the point's neighbor set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub l: f64,
    pub r: f64,
    pub b: f64,
    pub t: f64,
}

impl Rect {
    pub fn around(u: f64, v: f64, d_x: f64, d_y: f64) -> Rect {
        Rect {
            l: (u - d_x).max(0.0),
            r: (u + d_x).min(1.0),
            b: (v - d_y).max(0.0),
            t: (v + d_y).min(1.0),
        }
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        self.l <= u && u <= self.r && self.b <= v && v <= self.t
    }
}

/// Per-axis closed bands around a point; another point contributes to this
/// point's `n_x` exactly when `contains_x` holds for its u-coordinate, and
/// to `n_y` exactly when `contains_y` holds for its v. Membership is kept
/// in center/half-width form so it rounds identically to the counting
/// predicate; the interval views are for display.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bands {
    pub x_center: f64,
    pub x_half: f64,
    pub y_center: f64,
    pub y_half: f64,
}

impl Bands {
    pub fn x_interval(&self) -> (f64, f64) {
        (self.x_center - self.x_half, self.x_center + self.x_half)
    }

    pub fn y_interval(&self) -> (f64, f64) {
        (self.y_center - self.y_half, self.y_center + self.y_half)
    }

    pub fn contains_x(&self, u: f64) -> bool {
        (u - self.x_center).abs() <= self.x_half
    }

    pub fn contains_y(&self, v: f64) -> bool {
        (v - self.y_center).abs() <= self.y_half
    }
}

/// `(d1, i1) < (d2, i2)` under distance-then-index order — the tie rule the
/// neighbor search itself uses.
#[inline]
fn lex_less(d1: f64, i1: u32, d2: f64, i2: u32) -> bool {
    match d1.total_cmp(&d2) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => i1 < i2,
    }
}

#[inline]
fn lex_le(d1: f64, i1: u32, d2: f64, i2: u32) -> bool {
    match d1.total_cmp(&d2) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => i1 <= i2,
    }
}

/// One sliding window's live estimator state over a shared ranked pair.
///
/// Window membership is tracked by global sample index. While the window
/// holds fewer than k+2 points its records are dropped and maintenance is
/// deferred; `settle` rebuilds everything once the window is evaluable
/// again. `bound_dx`/`bound_dy` are monotone upper bounds on all members'
/// neighborhood extents between settles; they size the strip scans that
/// discover which members an insertion or removal can affect.
pub struct WindowState<'a> {
    pair: &'a RankedPair,
    k: usize,
    range: Range<usize>,
    members: BTreeSet<u32>,
    records: HashMap<u32, PointRecord>,
    grid: BoxGrid,
    psi: PsiTable,
    bound_dx: f64,
    bound_dy: f64,
    deferred: bool,
    scratch: Vec<u32>,
}

impl<'a> WindowState<'a> {
    /// Builds a settled window over `range` with a grid of
    /// `cells_per_axis` cells per side (size it for the largest window the
    /// scan will hold, so sliding never re-buckets points).
    pub fn init(
        pair: &'a RankedPair,
        range: Range<usize>,
        k: usize,
        cells_per_axis: usize,
    ) -> Result<WindowState<'a>> {
        if k == 0 {
            return Err(AmicError::InvalidConfig("k must be at least 1".into()));
        }
        if range.start >= range.end || range.end > pair.len() {
            return Err(AmicError::InvalidConfig(format!(
                "window range {range:?} does not fit a series of length {}",
                pair.len()
            )));
        }
        if range.len() < k + 2 {
            return Err(AmicError::TooShort { needed: k + 2, got: range.len() });
        }
        let mut state = WindowState {
            pair,
            k,
            range: range.clone(),
            members: BTreeSet::new(),
            records: HashMap::new(),
            grid: BoxGrid::with_cells(cells_per_axis),
            psi: PsiTable::new(),
            bound_dx: 0.0,
            bound_dy: 0.0,
            deferred: true,
            scratch: Vec::new(),
        };
        for i in range {
            let i = i as u32;
            state.members.insert(i);
            state.grid.insert(i, pair.u[i as usize], pair.v[i as usize]);
        }
        state.settle()?;
        Ok(state)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Nominal [s, e) range, updated by `init` and `slide_to`.
    pub fn range(&self) -> Range<usize> {
        self.range.clone()
    }

    pub fn members(&self) -> impl Iterator<Item = u32> + '_ {
        self.members.iter().copied()
    }

    pub fn record(&self, i: u32) -> Option<&PointRecord> {
        self.records.get(&i)
    }

    /// Rectangle within which membership changes can displace `i`'s
    /// neighbor set.
    pub fn neighborhood_rect(&self, i: u32) -> Result<Rect> {
        let r = self.records.get(&i).ok_or(AmicError::MissingPoint { idx: i })?;
        Ok(Rect::around(self.pair.u[i as usize], self.pair.v[i as usize], r.d_x, r.d_y))
    }

    /// Closed per-axis bands whose occupancy `i`'s marginal counts measure.
    pub fn count_bands(&self, i: u32) -> Result<Bands> {
        let r = self.records.get(&i).ok_or(AmicError::MissingPoint { idx: i })?;
        let (u, v) = (self.pair.u[i as usize], self.pair.v[i as usize]);
        Ok(Bands { x_center: u, x_half: r.d_x, y_center: v, y_half: r.d_y })
    }

    #[inline]
    fn coords(&self, i: u32) -> (f64, f64) {
        (self.pair.u[i as usize], self.pair.v[i as usize])
    }

    fn fresh_record(&mut self, i: u32) -> Result<PointRecord> {
        let info = knn_query(&self.grid, &self.pair.u, &self.pair.v, i, self.k)?;
        let counts = marginal_counts(&self.grid, &self.pair.u, &self.pair.v, i, &info);
        debug_assert!(counts.n_x as usize >= self.k && counts.n_y as usize >= self.k);
        Ok(PointRecord {
            kth_idx: info.kth_idx,
            d_x: info.d_x,
            d_y: info.d_y,
            n_x: counts.n_x,
            n_y: counts.n_y,
        })
    }

    #[inline]
    fn push_bounds(&mut self, rec: &PointRecord) {
        self.bound_dx = self.bound_dx.max(rec.d_x);
        self.bound_dy = self.bound_dy.max(rec.d_y);
    }

    fn enter_deferred(&mut self) {
        self.records.clear();
        self.deferred = true;
        self.bound_dx = 0.0;
        self.bound_dy = 0.0;
    }

    /// Fills `scratch` with every member (other than `i`) that could count
    /// `i` in one of its bands: all residents of the column strip within
    /// `bound_dx` of `i`'s u and of the row strip within `bound_dy` of its
    /// v. The bounds dominate every member's real band widths, so the union
    /// is a superset of the truly affected set; callers re-test each
    /// candidate with its exact band predicates.
    fn collect_band_candidates(&mut self, i: u32) {
        let (ui, vi) = self.coords(i);
        let c = self.grid.cells_per_axis();
        self.scratch.clear();

        let lo = self.grid.cell_of(ui - self.bound_dx).saturating_sub(1);
        let hi = (self.grid.cell_of(ui + self.bound_dx) + 1).min(c - 1);
        for col in lo..=hi {
            self.scratch.extend(self.grid.col(col).iter().filter(|&&j| j != i));
        }
        let lo = self.grid.cell_of(vi - self.bound_dy).saturating_sub(1);
        let hi = (self.grid.cell_of(vi + self.bound_dy) + 1).min(c - 1);
        for row in lo..=hi {
            self.scratch.extend(self.grid.row(row).iter().filter(|&&j| j != i));
        }
        self.scratch.sort_unstable();
        self.scratch.dedup();
    }

    /// Inserts sample `i`, computes its record, and revisits every member
    /// the insertion can affect: a member for which `i` now ranks ahead of
    /// its kth neighbor gets a full re-search, a member that merely gains
    /// `i` in a band gets the matching count(s) incremented.
    pub fn add_point(&mut self, i: u32) -> Result<()> {
        if i as usize >= self.pair.len() {
            return Err(AmicError::InvalidConfig(format!(
                "sample {i} is outside the series (length {})",
                self.pair.len()
            )));
        }
        if !self.members.insert(i) {
            return Err(AmicError::DuplicatePoint { idx: i });
        }
        let (ui, vi) = self.coords(i);
        self.grid.insert(i, ui, vi);
        if self.deferred {
            return Ok(());
        }

        let rec = self.fresh_record(i)?;
        self.push_bounds(&rec);
        self.records.insert(i, rec);

        self.collect_band_candidates(i);
        let cands = std::mem::take(&mut self.scratch);
        for &j in &cands {
            let r = self.records[&j];
            let (uj, vj) = self.coords(j);
            let du = (ui - uj).abs();
            let dv = (vi - vj).abs();
            let in_x = du <= r.d_x;
            let in_y = dv <= r.d_y;
            if !in_x && !in_y {
                continue;
            }
            if lex_less(du.max(dv), i, r.d_x.max(r.d_y), r.kth_idx) {
                // The newcomer displaces j's ranking kth neighbor.
                let nr = self.fresh_record(j)?;
                self.push_bounds(&nr);
                self.records.insert(j, nr);
            } else {
                let e = self.records.get_mut(&j).expect("candidate is a member");
                if in_x {
                    e.n_x += 1;
                }
                if in_y {
                    e.n_y += 1;
                }
            }
        }
        self.scratch = cands;
        Ok(())
    }

    /// Removes sample `i` and revisits every member the removal can affect:
    /// a member whose k-neighborhood contained `i` gets a full re-search
    /// against the shrunk window, a member that merely loses `i` from a
    /// band gets the matching count(s) decremented.
    pub fn remove_point(&mut self, i: u32) -> Result<()> {
        if !self.members.contains(&i) {
            return Err(AmicError::MissingPoint { idx: i });
        }
        let (ui, vi) = self.coords(i);
        if self.deferred {
            self.members.remove(&i);
            self.grid.remove(i, ui, vi);
            return Ok(());
        }
        if self.members.len() - 1 < self.k + 2 {
            // Too small to keep records live; defer until the window grows back.
            self.members.remove(&i);
            self.grid.remove(i, ui, vi);
            self.enter_deferred();
            return Ok(());
        }

        self.collect_band_candidates(i);
        let cands = std::mem::take(&mut self.scratch);
        self.members.remove(&i);
        self.grid.remove(i, ui, vi);
        self.records.remove(&i);
        for &j in &cands {
            let r = self.records[&j];
            let (uj, vj) = self.coords(j);
            let du = (ui - uj).abs();
            let dv = (vi - vj).abs();
            let in_x = du <= r.d_x;
            let in_y = dv <= r.d_y;
            if !in_x && !in_y {
                continue;
            }
            if lex_le(du.max(dv), i, r.d_x.max(r.d_y), r.kth_idx) {
                // i was in j's k-neighborhood; the neighborhood must regrow.
                let nr = self.fresh_record(j)?;
                self.push_bounds(&nr);
                self.records.insert(j, nr);
            } else {
                let e = self.records.get_mut(&j).expect("candidate is a member");
                if in_x {
                    e.n_x -= 1;
                }
                if in_y {
                    e.n_y -= 1;
                }
            }
        }
        self.scratch = cands;
        Ok(())
    }

    /// Moves the window to `new_range`: members outside it leave, samples
    /// inside it join, untouched overlap keeps its records. When the
    /// overlap is too small to stay evaluable — or the turnover is large
    /// enough that incremental repair would cost more than starting over —
    /// the window rebuilds wholesale; both paths yield identical records.
    /// Returns the settled estimate for the new window.
    pub fn slide_to(&mut self, new_range: Range<usize>) -> Result<MiEstimate> {
        if new_range.start >= new_range.end || new_range.end > self.pair.len() {
            return Err(AmicError::InvalidConfig(format!(
                "window range {new_range:?} does not fit a series of length {}",
                self.pair.len()
            )));
        }
        let new_len = new_range.len();
        if new_len < self.k + 2 {
            return Err(AmicError::TooShort { needed: self.k + 2, got: new_len });
        }
        let (s, e) = (new_range.start as u32, new_range.end as u32);
        let removals: Vec<u32> =
            self.members.iter().copied().filter(|&m| m < s || m >= e).collect();
        let additions: Vec<u32> = (s..e).filter(|m| !self.members.contains(m)).collect();
        self.range = new_range;

        let overlap = self.members.len() - removals.len();
        let changed = removals.len() + additions.len();
        if changed == 0 {
            return self.settle();
        }
        // Each changed point costs roughly its own search plus about one
        // re-search per neighborhood it intersects; past this break-even the
        // from-scratch rebuild is cheaper.
        let rebuild = self.deferred
            || overlap < self.k + 2
            || changed * (2 * self.k + 2) >= new_len;
        if rebuild {
            self.enter_deferred();
            for &m in &removals {
                let (u, v) = self.coords(m);
                self.members.remove(&m);
                self.grid.remove(m, u, v);
            }
            for &m in &additions {
                let (u, v) = self.coords(m);
                self.members.insert(m);
                self.grid.insert(m, u, v);
            }
            return self.settle();
        }
        for &m in &removals {
            self.remove_point(m)?;
        }
        for &m in &additions {
            self.add_point(m)?;
        }
        self.settle()
    }

    /// Brings the window to a fully evaluated state and returns its
    /// estimate. Deferred windows recompute every record from scratch;
    /// settled windows just refresh the extent bounds. The digamma sums are
    /// always re-accumulated here in ascending member order, so the result
    /// depends only on the record set, never on operation history.
    pub fn settle(&mut self) -> Result<MiEstimate> {
        let n = self.members.len();
        if n < self.k + 2 {
            return Err(AmicError::TooShort { needed: self.k + 2, got: n });
        }
        if self.deferred {
            let members: Vec<u32> = self.members.iter().copied().collect();
            for &i in &members {
                let rec = self.fresh_record(i)?;
                self.records.insert(i, rec);
            }
            self.deferred = false;
        }
        debug_assert_eq!(self.records.len(), n);

        let mut bound_dx = 0.0f64;
        let mut bound_dy = 0.0f64;
        let mut sum_psi_nx = 0.0f64;
        let mut sum_psi_ny = 0.0f64;
        let members: Vec<u32> = self.members.iter().copied().collect();
        for &i in &members {
            let rec = self.records[&i];
            bound_dx = bound_dx.max(rec.d_x);
            bound_dy = bound_dy.max(rec.d_y);
            sum_psi_nx += self.psi.get(rec.n_x);
            sum_psi_ny += self.psi.get(rec.n_y);
        }
        self.bound_dx = bound_dx;
        self.bound_dy = bound_dy;
        Ok(mi_from_sums(self.k, n, sum_psi_nx, sum_psi_ny))
    }
}
