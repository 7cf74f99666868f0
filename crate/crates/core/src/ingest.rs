//! Loading, cleaning, resampling, aligning, and rank-transforming time series.
//!
//! The pipeline takes raw two-column CSV files to analysis-ready pairs:
//! parse in file order, deduplicate and re-express on a regular time grid
//! with linear interpolation, optionally aggregate to a coarser resolution,
//! intersect two series on shared timestamps, and finally map both value
//! arrays to average ranks scaled into [0,1]. Rank coordinates are computed
//! once over the whole series, so window contents never change as windows
//! slide, and any strictly increasing distortion of the raw values leaves
//! every downstream result bit-identical.

use std::path::Path;
use std::sync::Arc;

use chrono::DateTime;

use crate::error::{AmicError, Result};

/// A single time series as loaded (possibly unsorted, possibly duplicated)
/// or after cleaning (strictly ascending regular grid, finite values).
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub timestamps: Vec<i64>,
    pub values: Vec<f64>,
}

impl RawSeries {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

/// Two equal-length series aligned on shared ascending timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPair {
    pub timestamps: Vec<i64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl SeriesPair {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }
}

/// Rank-domain view of a pair: `u`, `v` hold the average ranks of `x`, `y`
/// rescaled into [0,1]. The source pair stays reachable for raw-value
/// consumers (association counting, reports).
#[derive(Debug, Clone)]
pub struct RankedPair {
    pub source: Arc<SeriesPair>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl RankedPair {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.source.timestamps
    }
}

enum TsKind {
    Epoch,
    Rfc3339,
}

fn parse_timestamp(field: &str) -> Option<(i64, TsKind)> {
    if let Ok(t) = field.parse::<i64>() {
        return Some((t, TsKind::Epoch));
    }
    DateTime::parse_from_rfc3339(field)
        .ok()
        .map(|dt| (dt.timestamp(), TsKind::Rfc3339))
}

/// Loads a `timestamp,value` CSV. Timestamps are bare integer epoch seconds
/// or RFC 3339 datetimes; one file must stick to one form. Rows come back
/// in file order, uncleaned.
pub fn load_series(path: &Path) -> Result<RawSeries> {
    let text = std::fs::read_to_string(path).map_err(|source| AmicError::Io {
        path: path.to_path_buf(),
        source,
    })?;

    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    let mut kind: Option<TsKind> = None;
    let mut saw_any_line = false;

    for (lineno, line) in text.lines().enumerate() {
        let row = lineno + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.splitn(2, ',');
        let ts_field = fields.next().unwrap_or("").trim();
        let val_field = fields.next().map(str::trim);

        // A leading row whose first field is not a timestamp is the header.
        if !saw_any_line {
            saw_any_line = true;
            if parse_timestamp(ts_field).is_none() {
                continue;
            }
        }

        let Some((ts, this_kind)) = parse_timestamp(ts_field) else {
            return Err(AmicError::Parse {
                path: path.to_path_buf(),
                row,
                msg: format!("unparseable timestamp {ts_field:?}"),
            });
        };
        match (&kind, &this_kind) {
            (None, _) => kind = Some(this_kind),
            (Some(TsKind::Epoch), TsKind::Epoch) => {}
            (Some(TsKind::Rfc3339), TsKind::Rfc3339) => {}
            _ => return Err(AmicError::MixedTimestamps { row }),
        }

        let Some(val_field) = val_field else {
            return Err(AmicError::Parse {
                path: path.to_path_buf(),
                row,
                msg: "expected two columns: timestamp,value".into(),
            });
        };
        let value: f64 = val_field.parse().map_err(|_| AmicError::Parse {
            path: path.to_path_buf(),
            row,
            msg: format!("unparseable value {val_field:?}"),
        })?;
        if !value.is_finite() {
            return Err(AmicError::Parse {
                path: path.to_path_buf(),
                row,
                msg: format!("non-finite value {val_field:?}"),
            });
        }
        timestamps.push(ts);
        values.push(value);
    }

    if timestamps.is_empty() {
        return Err(AmicError::EmptySeries);
    }
    Ok(RawSeries { timestamps, values })
}

/// Smallest positive gap between distinct timestamps — the natural grid
/// step of an irregularly sampled series.
pub fn infer_grid_step(series: &RawSeries) -> Result<i64> {
    let mut ts = series.timestamps.clone();
    ts.sort_unstable();
    ts.dedup();
    ts.windows(2).map(|w| w[1] - w[0]).min().ok_or(AmicError::ZeroGridStep)
}

/// Sorts, deduplicates (first occurrence per timestamp wins), and
/// re-expresses the series on the regular grid `min..=max` stepped by
/// `grid_step`. Grid points without an exact sample take the linear
/// interpolation between the nearest samples on either side; nothing is
/// extrapolated because the grid starts and ends on real samples.
pub fn clean(series: &RawSeries, grid_step: i64) -> Result<RawSeries> {
    if grid_step <= 0 {
        return Err(AmicError::ZeroGridStep);
    }
    if series.is_empty() {
        return Err(AmicError::EmptySeries);
    }

    let mut order: Vec<usize> = (0..series.len()).collect();
    order.sort_by_key(|&i| (series.timestamps[i], i));
    let mut ts: Vec<i64> = Vec::with_capacity(series.len());
    let mut vals: Vec<f64> = Vec::with_capacity(series.len());
    for &i in &order {
        if ts.last() == Some(&series.timestamps[i]) {
            continue;
        }
        ts.push(series.timestamps[i]);
        vals.push(series.values[i]);
    }

    if ts.len() < 2 {
        return Err(AmicError::TooShort { needed: 2, got: ts.len() });
    }

    let (t0, t_end) = (ts[0], *ts.last().expect("non-empty"));
    let n_grid = ((t_end - t0) / grid_step + 1) as usize;
    let mut out_ts = Vec::with_capacity(n_grid);
    let mut out_vals = Vec::with_capacity(n_grid);
    let mut hi = 0usize;
    for m in 0..n_grid as i64 {
        let t = t0 + m * grid_step;
        while ts[hi] < t {
            hi += 1;
        }
        if ts[hi] == t {
            out_ts.push(t);
            out_vals.push(vals[hi]);
        } else {
            let (t_lo, t_hi) = (ts[hi - 1], ts[hi]);
            let (v_lo, v_hi) = (vals[hi - 1], vals[hi]);
            let frac = (t - t_lo) as f64 / (t_hi - t_lo) as f64;
            out_ts.push(t);
            out_vals.push(v_lo + (v_hi - v_lo) * frac);
        }
    }
    Ok(RawSeries { timestamps: out_ts, values: out_vals })
}

/// How a resample bucket combines its samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregator {
    Mean,
    Sum,
}

/// Aggregates samples into buckets `[t, t + resolution)` anchored at the
/// first timestamp; each bucket reports its start time, empty buckets do
/// not appear. Resolution must be at least the native step so buckets never
/// split below the data's granularity.
pub fn resample(series: &RawSeries, resolution: i64, aggregator: Aggregator) -> Result<RawSeries> {
    if resolution <= 0 {
        return Err(AmicError::ZeroGridStep);
    }
    if series.is_empty() {
        return Err(AmicError::EmptySeries);
    }
    let native = series
        .timestamps
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&d| d > 0)
        .min();
    if let Some(step) = native {
        if resolution < step {
            return Err(AmicError::ResolutionTooFine { resolution, step });
        }
    }

    let anchor = series.timestamps[0];
    let mut out_ts = Vec::new();
    let mut out_vals = Vec::new();
    let mut bucket: Option<(i64, f64, usize)> = None;
    for (&t, &v) in series.timestamps.iter().zip(&series.values) {
        let m = (t - anchor) / resolution;
        match &mut bucket {
            Some((cur, sum, count)) if *cur == m => {
                *sum += v;
                *count += 1;
            }
            _ => {
                if let Some((m, sum, count)) = bucket.take() {
                    out_ts.push(anchor + m * resolution);
                    out_vals.push(match aggregator {
                        Aggregator::Mean => sum / count as f64,
                        Aggregator::Sum => sum,
                    });
                }
                bucket = Some((m, v, 1));
            }
        }
    }
    if let Some((m, sum, count)) = bucket {
        out_ts.push(anchor + m * resolution);
        out_vals.push(match aggregator {
            Aggregator::Mean => sum / count as f64,
            Aggregator::Sum => sum,
        });
    }
    Ok(RawSeries { timestamps: out_ts, values: out_vals })
}

/// Restricts two cleaned series to their shared timestamps via a two-pointer
/// merge. The result needs at least two common samples.
pub fn align_pair(a: &RawSeries, b: &RawSeries) -> Result<SeriesPair> {
    let mut timestamps = Vec::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() && j < b.len() {
        match a.timestamps[i].cmp(&b.timestamps[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                timestamps.push(a.timestamps[i]);
                x.push(a.values[i]);
                y.push(b.values[j]);
                i += 1;
                j += 1;
            }
        }
    }
    if timestamps.is_empty() {
        return Err(AmicError::EmptyIntersection);
    }
    if timestamps.len() < 2 {
        return Err(AmicError::TooShort { needed: 2, got: timestamps.len() });
    }
    Ok(SeriesPair { timestamps, x, y })
}

/// Average ranks of `values` rescaled to [0,1]: rank 1 maps to 0, rank N to
/// 1, and ties share the mean of the ranks they span. Only the ordering of
/// the values matters, so any strictly increasing transform of the input
/// leaves the output bit-identical.
pub fn unit_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n == 1 {
        return vec![0.5];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0f64; n];
    let scale = (n - 1) as f64;
    let mut start = 0usize;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end (0-based) hold equal values; their average
        // 1-based rank is (start + end + 1) / 2.
        let avg_rank = (start + end + 1) as f64 / 2.0;
        let u = (avg_rank - 1.0) / scale;
        for &idx in &order[start..end] {
            out[idx] = u;
        }
        start = end;
    }
    out
}

/// Maps a pair into the rank domain, computing each axis's average ranks
/// once over the full series.
pub fn rank_transform(pair: SeriesPair) -> Result<RankedPair> {
    if pair.len() < 2 {
        return Err(AmicError::TooShort { needed: 2, got: pair.len() });
    }
    let u = unit_ranks(&pair.x);
    let v = unit_ranks(&pair.y);
    Ok(RankedPair { source: Arc::new(pair), u, v })
}
