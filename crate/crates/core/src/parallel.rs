//! Partitioned execution of the layered search.
//!
//! The series is cut into overlapping partitions — each looks back one
//! window size so spans straddling a cut are still found — which are
//! scanned independently on a thread pool. Per-layer results are reduced in
//! partition order, selected ground is subtracted from the left-out set,
//! and the remainder is re-partitioned at the next (finer) size. A single
//! merge pass at the end coalesces overlapping or touching spans and
//! recomputes every final span's statistics from scratch, so the reported
//! output is a pure function of the selected-span set, independent of how
//! the work was split.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{AmicError, Result};
use crate::ingest::RankedPair;
use crate::search::{
    finalize_windows, scan_layer, SearchConfig, SearchResult, ThresholdStrategy, WindowResult,
};

/// Splits `[0, n_total)` into partitions of `per` windows of `size` each,
/// every partition extended one window back (clamped at 0) so relations
/// crossing the cut are seen by the next partition.
pub fn make_partitions(n_total: usize, size: usize, per: usize) -> Result<Vec<Range<usize>>> {
    if size == 0 || per == 0 {
        return Err(AmicError::InvalidConfig(
            "partition window size and windows-per-partition must be positive".into(),
        ));
    }
    if size > n_total {
        return Err(AmicError::InvalidConfig(format!(
            "partition window size {size} exceeds the {n_total} available points"
        )));
    }
    let stride = per * size;
    let mut parts = Vec::new();
    let mut i = 0usize;
    while i < n_total {
        parts.push(i.saturating_sub(size)..(i + stride).min(n_total));
        i += stride;
    }
    Ok(parts)
}

/// Sorts spans by start (longer first on ties) and unions every overlapping
/// or touching run, keeping the coarsest contributor's granularity.
/// Idempotent and insensitive to input order.
pub(crate) fn coalesce_spans(mut spans: Vec<(usize, usize, usize)>) -> Vec<(usize, usize, usize)> {
    spans.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut out: Vec<(usize, usize, usize)> = Vec::new();
    for (s, e, g) in spans {
        if let Some(last) = out.last_mut() {
            if s <= last.1 {
                last.1 = last.1.max(e);
                last.2 = last.2.max(g);
                continue;
            }
        }
        out.push((s, e, g));
    }
    out
}

/// Sorts intervals and unions overlapping or touching runs, dropping empty
/// ones.
pub(crate) fn normalize_intervals(mut intervals: Vec<Range<usize>>) -> Vec<Range<usize>> {
    intervals.retain(|r| !r.is_empty());
    intervals.sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)));
    let mut out: Vec<Range<usize>> = Vec::new();
    for r in intervals {
        if let Some(last) = out.last_mut() {
            if r.start <= last.end {
                last.end = last.end.max(r.end);
                continue;
            }
        }
        out.push(r);
    }
    out
}

/// Removes `minus` (sorted, disjoint) from `base` (sorted, disjoint).
pub(crate) fn subtract_intervals(
    base: Vec<Range<usize>>,
    minus: &[Range<usize>],
) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut lower = 0usize;
    for r in base {
        let mut cur = r.start;
        while lower < minus.len() && minus[lower].end <= cur {
            lower += 1;
        }
        let mut j = lower;
        while cur < r.end {
            if j >= minus.len() || minus[j].start >= r.end {
                out.push(cur..r.end);
                break;
            }
            let m = &minus[j];
            if m.start > cur {
                out.push(cur..m.start);
            }
            cur = cur.max(m.end);
            j += 1;
        }
    }
    out
}

/// Coalesces overlapping or touching windows into union spans and
/// recomputes every resulting span's statistics over its full extent.
/// Idempotent and insensitive to input order.
pub fn merge_windows(
    windows: &[WindowResult],
    pair: &RankedPair,
    k: usize,
) -> Result<Vec<WindowResult>> {
    finalize_windows(
        windows.iter().map(|w| (w.s_idx, w.e_idx, w.granularity)).collect(),
        pair,
        k,
    )
}

/// How many windows each partition should hold so roughly `partitions`
/// map tasks cover `len` points at window size `g`.
fn windows_per_partition(len: usize, g: usize, partitions: usize) -> usize {
    len.div_ceil(partitions * g).max(1)
}

/// Runs the layered search with each layer mapped over overlapping
/// partitions on a `workers`-thread pool. Reduction is deterministic
/// (partition order), selected ground is subtracted from the left-out set,
/// and the remainder is re-partitioned at the next size. Output matches the
/// sequential search span-for-span.
pub fn recursive_parallel_search(
    pair: &RankedPair,
    config: &SearchConfig,
    workers: usize,
) -> Result<SearchResult> {
    config.validate()?;
    if workers == 0 {
        return Err(AmicError::InvalidConfig("worker count must be at least 1".into()));
    }
    if matches!(config.strategy, ThresholdStrategy::CoverageTarget { .. }) {
        return Err(AmicError::InvalidConfig(
            "coverage targets must be tuned before a partitioned search".into(),
        ));
    }
    let n = pair.len();
    if n < config.ladder.g_min() {
        return Err(AmicError::TooShort { needed: config.ladder.g_min(), got: n });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| AmicError::InvalidConfig(format!("thread pool: {e}")))?;
    let cells = config.grid_cells();

    let mut raw: Vec<(usize, usize, usize)> = Vec::new();
    let mut leftout: Vec<Range<usize>> = vec![0..n];
    let mut layers_run = Vec::new();

    for &g in config.ladder.sizes() {
        let slide = config.slide_for(g);
        let mut tasks: Vec<Range<usize>> = Vec::new();
        let mut next_leftout: Vec<Range<usize>> = Vec::new();
        for interval in leftout {
            if interval.len() < g {
                next_leftout.push(interval);
                continue;
            }
            let per = windows_per_partition(interval.len(), g, config.partitions);
            for p in make_partitions(interval.len(), g, per)? {
                tasks.push(interval.start + p.start..interval.start + p.end);
            }
        }
        if tasks.is_empty() {
            leftout = next_leftout;
            continue;
        }
        layers_run.push(g);

        let strategy = config.strategy;
        let k = config.k;
        let mapped: Vec<Result<_>> = pool.install(|| {
            tasks
                .par_iter()
                .map(|seg| scan_layer(pair, seg.clone(), g, slide, &strategy, k, cells))
                .collect()
        });

        let mut layer_selected: Vec<Range<usize>> = Vec::new();
        for task_result in mapped {
            let (wins, lo) = task_result?;
            for w in &wins {
                layer_selected.push(w.s_idx..w.e_idx);
            }
            raw.extend(wins.into_iter().map(|w| (w.s_idx, w.e_idx, w.granularity)));
            next_leftout.extend(lo);
        }
        // Overlap regions are scanned twice; ground selected by either copy
        // must not survive as leftout.
        let selected = normalize_intervals(layer_selected);
        leftout = subtract_intervals(normalize_intervals(next_leftout), &selected);
    }

    let windows = finalize_windows(raw, pair, config.k)?;
    Ok(SearchResult { windows, leftout, layers_run })
}
