//! Synthetic relation generators with ground truth, plus the Pearson and
//! distance-correlation baselines used to compare metrics.
//!
//! Ten relation shapes cover the comparison matrix: two null cases
//! (independent, with and without injected dependent outliers), two linear
//! cases (clean and outlier-weakened), and six nonlinear shapes that defeat
//! linear metrics (exponential, quadratic, diamond, circle, sine, cross).
//! Relations can be composed into one long pair with independent-noise gaps
//! and a recorded span list, which gives search tests an exact ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{AmicError, Result};
use crate::ingest::SeriesPair;

/// Noise standard deviation used when callers don't pick one.
pub const DEFAULT_NOISE: f64 = 0.05;

/// Fraction of samples replaced in the outlier variants.
const OUTLIER_FRACTION: f64 = 0.10;

/// Radius of the diamond and circle shapes around (0.5, 0.5).
const SHAPE_RADIUS: f64 = 0.4;

/// Shape of a generated dependency between the two series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    Independent,
    IndependentOutliers,
    Linear,
    LinearOutliers,
    Exponential,
    Quadratic,
    Diamond,
    Circle,
    Sine,
    Cross,
}

impl RelationKind {
    pub const ALL: [RelationKind; 10] = [
        RelationKind::Independent,
        RelationKind::IndependentOutliers,
        RelationKind::Linear,
        RelationKind::LinearOutliers,
        RelationKind::Exponential,
        RelationKind::Quadratic,
        RelationKind::Diamond,
        RelationKind::Circle,
        RelationKind::Sine,
        RelationKind::Cross,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RelationKind::Independent => "independent",
            RelationKind::IndependentOutliers => "independent_outliers",
            RelationKind::Linear => "linear",
            RelationKind::LinearOutliers => "linear_outliers",
            RelationKind::Exponential => "exponential",
            RelationKind::Quadratic => "quadratic",
            RelationKind::Diamond => "diamond",
            RelationKind::Circle => "circle",
            RelationKind::Sine => "sine",
            RelationKind::Cross => "cross",
        }
    }
}

impl std::fmt::Display for RelationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RelationKind {
    type Err = AmicError;

    fn from_str(s: &str) -> Result<RelationKind> {
        RelationKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| AmicError::InvalidConfig(format!("unknown relation kind {s:?}")))
    }
}

/// Half-open index span `[s_idx, e_idx)` where a generated relation lives
/// inside a composed pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthSpan {
    pub kind: RelationKind,
    pub s_idx: usize,
    pub e_idx: usize,
}

struct Noise {
    dist: Option<Normal<f64>>,
}

impl Noise {
    fn new(noise: f64) -> Result<Noise> {
        if !(noise >= 0.0) {
            return Err(AmicError::InvalidConfig(format!(
                "noise must be non-negative, got {noise}"
            )));
        }
        let dist = if noise > 0.0 {
            Some(Normal::new(0.0, noise).expect("finite positive std dev"))
        } else {
            None
        };
        Ok(Noise { dist })
    }

    #[inline]
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match &self.dist {
            Some(d) => d.sample(rng),
            None => 0.0,
        }
    }
}

/// Generates `n` samples of the given relation with Gaussian noise of the
/// given standard deviation. Deterministic in (kind, n, noise, seed);
/// timestamps run 0..n.
pub fn gen_relation(kind: RelationKind, n: usize, noise: f64, seed: u64) -> Result<SeriesPair> {
    if n < 10 {
        return Err(AmicError::TooShort { needed: 10, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = Noise::new(noise)?;
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);

    match kind {
        RelationKind::Independent | RelationKind::IndependentOutliers => {
            for _ in 0..n {
                x.push(rng.random::<f64>());
                y.push(rng.random::<f64>());
            }
            if kind == RelationKind::IndependentOutliers {
                for i in 0..n {
                    if rng.random::<f64>() < OUTLIER_FRACTION {
                        y[i] = x[i] + eps.sample(&mut rng);
                    }
                }
            }
        }
        RelationKind::Linear | RelationKind::LinearOutliers => {
            for _ in 0..n {
                let t = rng.random::<f64>();
                x.push(t);
                y.push(t + eps.sample(&mut rng));
            }
            if kind == RelationKind::LinearOutliers {
                for i in 0..n {
                    if rng.random::<f64>() < OUTLIER_FRACTION {
                        y[i] = rng.random::<f64>();
                    }
                }
            }
        }
        RelationKind::Exponential => {
            let denom = 3f64.exp() - 1.0;
            for _ in 0..n {
                let t = rng.random::<f64>();
                x.push(t);
                y.push(((3.0 * t).exp() - 1.0) / denom + eps.sample(&mut rng));
            }
        }
        RelationKind::Quadratic => {
            for _ in 0..n {
                let t = rng.random::<f64>();
                x.push(t);
                y.push(4.0 * (t - 0.5) * (t - 0.5) + eps.sample(&mut rng));
            }
        }
        RelationKind::Diamond => {
            // Walk the perimeter |x-0.5| + |y-0.5| = r by arc parameter in
            // [0,4): one unit per edge, vertices on the axes.
            let verts = [
                (0.5 + SHAPE_RADIUS, 0.5),
                (0.5, 0.5 + SHAPE_RADIUS),
                (0.5 - SHAPE_RADIUS, 0.5),
                (0.5, 0.5 - SHAPE_RADIUS),
            ];
            for _ in 0..n {
                let s = rng.random::<f64>() * 4.0;
                let side = (s as usize).min(3);
                let f = s - side as f64;
                let (ax, ay) = verts[side];
                let (bx, by) = verts[(side + 1) % 4];
                x.push(ax + (bx - ax) * f + eps.sample(&mut rng));
                y.push(ay + (by - ay) * f + eps.sample(&mut rng));
            }
        }
        RelationKind::Circle => {
            for _ in 0..n {
                let theta = rng.random::<f64>() * std::f64::consts::TAU;
                x.push(0.5 + SHAPE_RADIUS * theta.cos() + eps.sample(&mut rng));
                y.push(0.5 + SHAPE_RADIUS * theta.sin() + eps.sample(&mut rng));
            }
        }
        RelationKind::Sine => {
            // Six full periods across the unit interval: busy enough that a
            // linear fit sees almost nothing.
            let omega = 12.0 * std::f64::consts::PI;
            for _ in 0..n {
                let t = rng.random::<f64>();
                x.push(t);
                y.push(0.5 + 0.4 * (omega * t).sin() + eps.sample(&mut rng));
            }
        }
        RelationKind::Cross => {
            for _ in 0..n {
                let t = rng.random::<f64>();
                let rising = rng.random::<f64>() < 0.5;
                x.push(t);
                y.push(if rising { t } else { 1.0 - t } + eps.sample(&mut rng));
            }
        }
    }

    Ok(SeriesPair { timestamps: (0..n as i64).collect(), x, y })
}

/// Concatenates relations of `n_each` samples separated by `gap` samples of
/// independent uniform noise, reseeding each segment from a master stream.
/// Returns the composed pair plus the half-open span of every relation.
pub fn compose(
    relations: &[RelationKind],
    n_each: usize,
    gap: usize,
    noise: f64,
    seed: u64,
) -> Result<(SeriesPair, Vec<GroundTruthSpan>)> {
    if relations.is_empty() {
        return Err(AmicError::InvalidConfig("need at least one relation to compose".into()));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut spans = Vec::with_capacity(relations.len());

    for (pos, &kind) in relations.iter().enumerate() {
        if pos > 0 {
            let mut gap_rng = ChaCha8Rng::seed_from_u64(master.random());
            for _ in 0..gap {
                x.push(gap_rng.random::<f64>());
                y.push(gap_rng.random::<f64>());
            }
        }
        let seg = gen_relation(kind, n_each, noise, master.random())?;
        let s_idx = x.len();
        x.extend_from_slice(&seg.x);
        y.extend_from_slice(&seg.y);
        spans.push(GroundTruthSpan { kind, s_idx, e_idx: x.len() });
    }

    let n = x.len();
    Ok((SeriesPair { timestamps: (0..n as i64).collect(), x, y }, spans))
}

/// Sample Pearson correlation coefficient, clamped into [-1, 1].
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    assert_eq!(x.len(), y.len(), "series must pair up");
    let n = x.len();
    if n < 2 {
        return Err(AmicError::TooShort { needed: 2, got: n });
    }
    let mean_x = x.iter().sum::<f64>() / n as f64;
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        let dx = x[i] - mean_x;
        let dy = y[i] - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AmicError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Distance correlation from doubly-centered pairwise distances, in [0,1].
/// Runs in O(n²) time but O(n) memory: row means are precomputed, then the
/// centered products are accumulated streamingly. Degenerate series with
/// zero distance variance yield 0.
pub fn dcor(x: &[f64], y: &[f64]) -> Result<f64> {
    assert_eq!(x.len(), y.len(), "series must pair up");
    let n = x.len();
    if n < 2 {
        return Err(AmicError::TooShort { needed: 2, got: n });
    }
    let nf = n as f64;

    let mut row_a = vec![0.0f64; n];
    let mut row_b = vec![0.0f64; n];
    for i in 0..n {
        let mut sa = 0.0;
        let mut sb = 0.0;
        for j in 0..n {
            sa += (x[i] - x[j]).abs();
            sb += (y[i] - y[j]).abs();
        }
        row_a[i] = sa / nf;
        row_b[i] = sb / nf;
    }
    let grand_a = row_a.iter().sum::<f64>() / nf;
    let grand_b = row_b.iter().sum::<f64>() / nf;

    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for i in 0..n {
        for j in 0..n {
            let a = (x[i] - x[j]).abs() - row_a[i] - row_a[j] + grand_a;
            let b = (y[i] - y[j]).abs() - row_b[i] - row_b[j] + grand_b;
            cov += a * b;
            var_a += a * a;
            var_b += b * b;
        }
    }
    let n2 = nf * nf;
    let cov = (cov / n2).max(0.0);
    let var_a = var_a / n2;
    let var_b = var_b / n2;
    if var_a <= 0.0 || var_b <= 0.0 {
        return Ok(0.0);
    }
    Ok((cov / (var_a * var_b).sqrt()).sqrt().clamp(0.0, 1.0))
}
