//! Layered top-down sliding-window search with pluggable pass thresholds.
//!
//! The search walks a strictly decreasing ladder of window sizes. At each
//! size it slides a window across every segment still unexplained: a window
//! that passes the threshold is kept and the scan jumps past it, a window
//! that fails shifts forward by the slide step and its ground joins the
//! left-out set, which the next (finer) ladder size then re-examines. What
//! remains at the bottom is genuinely unexplained data. Selected spans are
//! coalesced and every final span's statistics are recomputed from scratch
//! at report time, so the output is a pure function of the span set.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::assoc::{self, Sign};
use crate::error::{AmicError, Result};
use crate::ingest::RankedPair;
use crate::ksg::{
    entropy_bins, ksg_mi, nmi_entropy, nmi_max, normalized_entropy, plugin_entropy,
    window_entropy, MiEstimate,
};
use crate::parallel::{coalesce_spans, normalize_intervals};
use crate::window::WindowState;

/// Strictly decreasing list of window sizes, coarsest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GranularityLadder {
    sizes: Vec<usize>,
}

impl GranularityLadder {
    pub fn new(sizes: Vec<usize>) -> Result<GranularityLadder> {
        if sizes.is_empty() {
            return Err(AmicError::InvalidConfig("granularity ladder is empty".into()));
        }
        if sizes.windows(2).any(|w| w[1] >= w[0]) {
            return Err(AmicError::InvalidConfig(format!(
                "granularity ladder {sizes:?} must be strictly decreasing"
            )));
        }
        if sizes[sizes.len() - 1] == 0 {
            return Err(AmicError::InvalidConfig("window sizes must be positive".into()));
        }
        Ok(GranularityLadder { sizes })
    }

    /// Ladder that halves from `g_max` down to the last size still at least
    /// `g_min`.
    pub fn halving(g_max: usize, g_min: usize) -> Result<GranularityLadder> {
        if g_min == 0 || g_max < g_min {
            return Err(AmicError::InvalidConfig(format!(
                "invalid ladder bounds: g_max {g_max}, g_min {g_min}"
            )));
        }
        let mut sizes = Vec::new();
        let mut g = g_max;
        while g >= g_min {
            sizes.push(g);
            g /= 2;
        }
        GranularityLadder::new(sizes)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn g_max(&self) -> usize {
        self.sizes[0]
    }

    pub fn g_min(&self) -> usize {
        self.sizes[self.sizes.len() - 1]
    }
}

/// Which denominator normalizes MI in the two-step gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    /// MI / ln(n): against the maximum entropy a window of n samples can have.
    MaxEntropy,
    /// MI / H_w: against the window's own estimated entropy.
    WindowEntropy,
}

/// Base strategy a coverage tuner adjusts: the free parameter is the MI bar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoverageInner {
    Absolute,
    TwoStep { sigma_h: f64, norm: NormKind },
}

/// Window acceptance rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdStrategy {
    /// Accept when clamped MI ≥ sigma (in nats).
    Absolute { sigma: f64 },
    /// Step 1: normalized window entropy ≥ sigma_h (busy enough to matter).
    /// Step 2: the chosen normalized MI ≥ sigma_i. Step-1 failure rejects
    /// without evaluating step 2.
    TwoStep { sigma_h: f64, sigma_i: f64, norm: NormKind },
    /// Bisect the inner strategy's MI bar until data coverage lands within
    /// 0.05 of `target`. Resolved by the tuner before any scanning.
    CoverageTarget { target: f64, inner: CoverageInner },
}

impl ThresholdStrategy {
    fn validate(&self) -> Result<()> {
        let unit = |v: f64, name: &str| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(AmicError::InvalidConfig(format!("{name} must lie in [0,1], got {v}")))
            }
        };
        match *self {
            ThresholdStrategy::Absolute { sigma } => {
                if sigma >= 0.0 {
                    Ok(())
                } else {
                    Err(AmicError::InvalidConfig(format!(
                        "absolute threshold must be non-negative, got {sigma}"
                    )))
                }
            }
            ThresholdStrategy::TwoStep { sigma_h, sigma_i, .. } => {
                unit(sigma_h, "sigma_h")?;
                unit(sigma_i, "sigma_i")
            }
            ThresholdStrategy::CoverageTarget { target, inner } => {
                unit(target, "coverage target")?;
                if let CoverageInner::TwoStep { sigma_h, .. } = inner {
                    unit(sigma_h, "sigma_h")?;
                }
                Ok(())
            }
        }
    }
}

/// Full search configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub k: usize,
    pub ladder: GranularityLadder,
    /// Slide step as a fraction of the window size: slide = max(1, ⌈g·frac⌉).
    pub slide_frac: f64,
    pub strategy: ThresholdStrategy,
    /// Smallest window worth evaluating; the ladder must not go below it.
    pub min_window: usize,
    /// Map-task count for the partitioned search (1 = sequential layout).
    pub partitions: usize,
}

pub const DEFAULT_MIN_WINDOW: usize = 24;

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(AmicError::InvalidConfig("k must be at least 1".into()));
        }
        if !(self.slide_frac > 0.0 && self.slide_frac <= 1.0) {
            return Err(AmicError::InvalidConfig(format!(
                "slide fraction must lie in (0,1], got {}",
                self.slide_frac
            )));
        }
        if self.partitions == 0 {
            return Err(AmicError::InvalidConfig("partition count must be at least 1".into()));
        }
        let floor = self.min_window.max(self.k + 2);
        if self.ladder.g_min() < floor {
            return Err(AmicError::InvalidConfig(format!(
                "finest window size {} is below the minimum usable size {floor}",
                self.ladder.g_min()
            )));
        }
        self.strategy.validate()
    }

    pub fn slide_for(&self, g: usize) -> usize {
        ((g as f64 * self.slide_frac).ceil() as usize).max(1)
    }

    /// Grid resolution shared by every window in this search: sized once
    /// for the coarsest window so cell assignment never changes.
    pub fn grid_cells(&self) -> usize {
        (self.ladder.g_max() as f64).sqrt().ceil() as usize
    }
}

/// One reported window with its statistics, in output field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowResult {
    pub s_idx: usize,
    pub e_idx: usize,
    pub start_ts: i64,
    pub end_ts: i64,
    pub granularity: usize,
    pub mi_raw: f64,
    pub mi: f64,
    pub h_w: f64,
    pub h_norm: f64,
    pub nmi1: f64,
    pub nmi2: f64,
    pub mu: f64,
    pub sign: Sign,
    pub confidence: f64,
}

/// A selected span before statistics are attached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawWindow {
    pub s_idx: usize,
    pub e_idx: usize,
    pub granularity: usize,
}

/// Outcome of a layered (or partitioned) search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub windows: Vec<WindowResult>,
    pub leftout: Vec<Range<usize>>,
    pub layers_run: Vec<usize>,
}

/// The quantities a threshold can look at, all computed on one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateStats {
    /// Clamped MI in nats.
    pub mi: f64,
    pub h_w: f64,
    pub h_norm: f64,
    pub nmi1: f64,
    pub nmi2: f64,
}

/// Window-entropy quantities for a rank-domain window of length `n`.
fn entropy_stats(pair: &RankedPair, range: Range<usize>, mi_clamped: f64) -> (f64, f64) {
    let n = range.len();
    let bins = entropy_bins(n);
    let h_x = plugin_entropy(&pair.u[range.clone()], bins);
    let h_y = plugin_entropy(&pair.v[range], bins);
    let h_w = window_entropy(h_x, h_y, mi_clamped, n);
    (h_w, normalized_entropy(h_w, n))
}

fn gate_stats(pair: &RankedPair, range: Range<usize>, mi: MiEstimate) -> GateStats {
    let n = range.len();
    let (h_w, h_norm) = entropy_stats(pair, range, mi.clamped);
    GateStats {
        mi: mi.clamped,
        h_w,
        h_norm,
        nmi1: nmi_max(mi.clamped, n),
        nmi2: nmi_entropy(mi.clamped, h_w),
    }
}

/// Applies an acceptance rule to one window's statistics. Coverage
/// strategies must be resolved into their inner form before scanning, so
/// passing one here is a programming error.
pub fn evaluate_threshold(strategy: &ThresholdStrategy, stats: &GateStats) -> bool {
    match *strategy {
        ThresholdStrategy::Absolute { sigma } => stats.mi >= sigma,
        ThresholdStrategy::TwoStep { sigma_h, sigma_i, norm } => {
            stats.h_norm >= sigma_h
                && match norm {
                    NormKind::MaxEntropy => stats.nmi1 >= sigma_i,
                    NormKind::WindowEntropy => stats.nmi2 >= sigma_i,
                }
        }
        ThresholdStrategy::CoverageTarget { .. } => {
            panic!("coverage strategies are resolved before window evaluation")
        }
    }
}

/// Slides a window of size `g` across one segment. A passing window is
/// recorded and the scan resumes immediately after it; a failing window
/// advances by `slide` and leaves its ground in the left-out set. Segments
/// shorter than `g` go entirely to leftout. Selected windows and leftout
/// intervals exactly partition the segment.
pub fn scan_layer(
    pair: &RankedPair,
    segment: Range<usize>,
    g: usize,
    slide: usize,
    strategy: &ThresholdStrategy,
    k: usize,
    grid_cells: usize,
) -> Result<(Vec<RawWindow>, Vec<Range<usize>>)> {
    if slide == 0 {
        return Err(AmicError::InvalidConfig("slide must be at least 1".into()));
    }
    if matches!(strategy, ThresholdStrategy::CoverageTarget { .. }) {
        return Err(AmicError::InvalidConfig(
            "coverage strategies must be resolved before scanning".into(),
        ));
    }
    if segment.len() < g {
        return Ok((Vec::new(), vec![segment]));
    }

    let mut selected = Vec::new();
    let mut leftout = Vec::new();
    let mut state: Option<WindowState> = None;
    let mut s = segment.start;
    let mut leftout_start = segment.start;

    while s + g <= segment.end {
        let mi = match state.as_mut() {
            None => {
                let mut w = WindowState::init(pair, s..s + g, k, grid_cells)?;
                let mi = w.settle()?;
                state = Some(w);
                mi
            }
            Some(w) => w.slide_to(s..s + g)?,
        };
        let passes = match strategy {
            ThresholdStrategy::Absolute { sigma } => mi.clamped >= *sigma,
            _ => evaluate_threshold(strategy, &gate_stats(pair, s..s + g, mi)),
        };
        if passes {
            selected.push(RawWindow { s_idx: s, e_idx: s + g, granularity: g });
            if leftout_start < s {
                leftout.push(leftout_start..s);
            }
            s += g;
            leftout_start = s;
        } else {
            s += slide;
        }
    }
    if leftout_start < segment.end {
        leftout.push(leftout_start..segment.end);
    }
    Ok((selected, leftout))
}

/// Computes the full report-time statistics of one span from scratch:
/// batch MI over the rank coordinates, histogram entropies, normalized MIs,
/// and the association classification over the raw values.
pub fn compute_window_stats(
    pair: &RankedPair,
    s_idx: usize,
    e_idx: usize,
    granularity: usize,
    k: usize,
) -> Result<WindowResult> {
    if s_idx >= e_idx || e_idx > pair.len() {
        return Err(AmicError::InvalidConfig(format!(
            "window [{s_idx},{e_idx}) does not fit a series of length {}",
            pair.len()
        )));
    }
    let n = e_idx - s_idx;
    let mi = ksg_mi(&pair.u[s_idx..e_idx], &pair.v[s_idx..e_idx], k)?;
    let (h_w, h_norm) = entropy_stats(pair, s_idx..e_idx, mi.clamped);
    let stats = assoc::assess(&pair.source.x[s_idx..e_idx], &pair.source.y[s_idx..e_idx])?;
    Ok(WindowResult {
        s_idx,
        e_idx,
        start_ts: pair.timestamps()[s_idx],
        end_ts: pair.timestamps()[e_idx - 1],
        granularity,
        mi_raw: mi.raw,
        mi: mi.clamped,
        h_w,
        h_norm,
        nmi1: nmi_max(mi.clamped, n),
        nmi2: nmi_entropy(mi.clamped, h_w),
        mu: stats.mu,
        sign: stats.sign,
        confidence: stats.confidence,
    })
}

/// Coalesces raw spans and attaches report-time statistics to each final
/// span — the single exit path every search variant shares.
pub(crate) fn finalize_windows(
    spans: Vec<(usize, usize, usize)>,
    pair: &RankedPair,
    k: usize,
) -> Result<Vec<WindowResult>> {
    coalesce_spans(spans)
        .into_iter()
        .map(|(s, e, g)| compute_window_stats(pair, s, e, g, k))
        .collect()
}

/// Runs the full ladder sequentially over the whole series. Each layer
/// scans every interval the previous layers left unexplained (intervals
/// shorter than the current size pass straight through to finer layers).
/// Coverage strategies are resolved by the tuner first.
pub fn layered_search(pair: &RankedPair, config: &SearchConfig) -> Result<SearchResult> {
    config.validate()?;
    if let ThresholdStrategy::CoverageTarget { target, .. } = config.strategy {
        return Ok(tune_sigma_for_coverage(pair, config, target)?.1);
    }
    let n = pair.len();
    if n < config.ladder.g_min() {
        return Err(AmicError::TooShort { needed: config.ladder.g_min(), got: n });
    }
    let cells = config.grid_cells();
    let mut raw: Vec<RawWindow> = Vec::new();
    let mut leftout: Vec<Range<usize>> = vec![0..n];
    let mut layers_run = Vec::new();

    for &g in config.ladder.sizes() {
        let slide = config.slide_for(g);
        let mut next_leftout = Vec::new();
        let mut scanned_any = false;
        for seg in leftout {
            if seg.len() < g {
                next_leftout.push(seg);
                continue;
            }
            scanned_any = true;
            let (wins, lo) =
                scan_layer(pair, seg, g, slide, &config.strategy, config.k, cells)?;
            raw.extend(wins);
            next_leftout.extend(lo);
        }
        leftout = normalize_intervals(next_leftout);
        if scanned_any {
            layers_run.push(g);
        }
    }

    let windows =
        finalize_windows(raw.into_iter().map(|w| (w.s_idx, w.e_idx, w.granularity)).collect(), pair, config.k)?;
    Ok(SearchResult { windows, leftout, layers_run })
}

/// Fraction of the series covered by reported windows.
pub fn data_coverage(result: &SearchResult, n: usize) -> f64 {
    assert!(n > 0, "coverage of an empty series");
    let covered: usize = result.windows.iter().map(|w| w.e_idx - w.s_idx).sum();
    covered as f64 / n as f64
}

/// Bisects the MI bar of the strategy's inner form until the coverage lands
/// within 0.05 of `target` (at most 20 search runs), returning the best bar
/// found and its result. Coverage is quantized by window sizes, so the
/// closest achievable outcome is returned when the target itself is
/// unreachable.
pub fn tune_sigma_for_coverage(
    pair: &RankedPair,
    config: &SearchConfig,
    target: f64,
) -> Result<(f64, SearchResult)> {
    if !(0.0..=1.0).contains(&target) {
        return Err(AmicError::InvalidConfig(format!(
            "coverage target must lie in [0,1], got {target}"
        )));
    }
    let inner = match config.strategy {
        ThresholdStrategy::CoverageTarget { inner, .. } => inner,
        ThresholdStrategy::Absolute { .. } => CoverageInner::Absolute,
        ThresholdStrategy::TwoStep { sigma_h, norm, .. } => {
            CoverageInner::TwoStep { sigma_h, norm }
        }
    };
    let resolve = |bar: f64| -> ThresholdStrategy {
        match inner {
            CoverageInner::Absolute => ThresholdStrategy::Absolute { sigma: bar },
            CoverageInner::TwoStep { sigma_h, norm } => {
                ThresholdStrategy::TwoStep { sigma_h, sigma_i: bar, norm }
            }
        }
    };
    let mut lo = 0.0f64;
    let mut hi = match inner {
        // Normalized bars live in [0,1]; absolute bars in nats are capped
        // by the whole series' MI plus slack.
        CoverageInner::Absolute => ksg_mi(&pair.u, &pair.v, config.k)?.clamped + 1.0,
        CoverageInner::TwoStep { .. } => 1.0,
    };
    let mut best: Option<(f64, f64, SearchResult)> = None;
    for _ in 0..20 {
        let mid = 0.5 * (lo + hi);
        let tuned = SearchConfig { strategy: resolve(mid), ..config.clone() };
        let result = layered_search(pair, &tuned)?;
        let cov = data_coverage(&result, pair.len());
        let err = (cov - target).abs();
        if best.as_ref().is_none_or(|(e, _, _)| err < *e) {
            best = Some((err, mid, result));
        }
        if err <= 0.05 {
            break;
        }
        if cov > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (_, sigma, result) = best.expect("at least one bisection iteration");
    Ok((sigma, result))
}

/// Sorts windows for presentation: strongest MI first, ties broken by
/// earlier start.
pub fn rank_windows(mut windows: Vec<WindowResult>) -> Vec<WindowResult> {
    windows.sort_by(|a, b| b.mi.total_cmp(&a.mi).then(a.s_idx.cmp(&b.s_idx)));
    windows
}
