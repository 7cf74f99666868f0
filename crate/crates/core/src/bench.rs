//! Timing harness comparing the incremental sliding window against
//! independent per-window recomputation on the same scan schedule.

use std::time::Instant;

use crate::error::Result;
use crate::ingest::{rank_transform, RankedPair};
use crate::ksg::ksg_mi;
use crate::synth::{gen_relation, RelationKind, DEFAULT_NOISE};
use crate::window::WindowState;

/// One measured series size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchPoint {
    pub n: usize,
    pub incremental_ms: f64,
    pub brute_ms: f64,
    /// Sum of window MI values — identical between the two scans.
    pub checksum: f64,
}

impl BenchPoint {
    pub fn speedup(&self) -> f64 {
        self.brute_ms / self.incremental_ms
    }
}

/// Walks every window of size `g` stepped by `slide`, maintaining one
/// incrementally updated state. Returns (elapsed ms, MI checksum).
pub fn scan_incremental(pair: &RankedPair, g: usize, slide: usize, k: usize) -> Result<(f64, f64)> {
    let cells = (g as f64).sqrt().ceil() as usize;
    let start = Instant::now();
    let mut state = WindowState::init(pair, 0..g, k, cells)?;
    let mut checksum = state.settle()?.clamped;
    let mut s = slide;
    while s + g <= pair.len() {
        checksum += state.slide_to(s..s + g)?.clamped;
        s += slide;
    }
    Ok((start.elapsed().as_secs_f64() * 1e3, checksum))
}

/// The same walk with every window estimated from scratch.
pub fn scan_brute(pair: &RankedPair, g: usize, slide: usize, k: usize) -> Result<(f64, f64)> {
    let start = Instant::now();
    let mut checksum = 0.0;
    let mut s = 0usize;
    while s + g <= pair.len() {
        checksum += ksg_mi(&pair.u[s..s + g], &pair.v[s..s + g], k)?.clamped;
        s += slide;
    }
    Ok((start.elapsed().as_secs_f64() * 1e3, checksum))
}

/// Runs both scans over independent data at each requested size.
pub fn run_bench(sizes: &[usize], g: usize, slide: usize, k: usize, seed: u64) -> Result<Vec<BenchPoint>> {
    let mut points = Vec::with_capacity(sizes.len());
    for (i, &n) in sizes.iter().enumerate() {
        let pair = rank_transform(gen_relation(
            RelationKind::Independent,
            n,
            DEFAULT_NOISE,
            seed.wrapping_add(i as u64),
        )?)?;
        let (incremental_ms, check_a) = scan_incremental(&pair, g, slide, k)?;
        let (brute_ms, check_b) = scan_brute(&pair, g, slide, k)?;
        debug_assert_eq!(check_a.to_bits(), check_b.to_bits());
        points.push(BenchPoint { n, incremental_ms, brute_ms, checksum: check_a });
    }
    Ok(points)
}
