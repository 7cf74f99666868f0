//! Direction-of-association classification over a window's raw values.
//!
//! Consecutive sample pairs vote: both values strictly rising or both
//! strictly falling is a concordant step, strictly opposite movements a
//! discordant one, and any tie in either coordinate abstains. The balance
//! of votes normalized by the maximum possible count gives a degree in
//! [-1, 1], classified into a sign with a confidence score. Raw values are
//! used directly; any strictly increasing rescaling of either series leaves
//! every field unchanged.

use serde::{Deserialize, Serialize};

use crate::error::{AmicError, Result};

/// Direction of co-movement across a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
    Neither,
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sign::Positive => "positive",
            Sign::Negative => "negative",
            Sign::Neither => "neither",
        })
    }
}

/// Window association summary: concordant steps `pp`, discordant steps
/// `np`, their normalized balance `mu`, and the classified sign with its
/// confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssociationStats {
    pub pp: u32,
    pub np: u32,
    pub mu: f64,
    pub sign: Sign,
    pub confidence: f64,
}

/// Counts concordant (`pp`) and discordant (`np`) consecutive steps under
/// strict inequalities; steps with a tie in either coordinate count toward
/// neither, so `pp + np <= n - 1`.
pub fn count_periods(x: &[f64], y: &[f64]) -> Result<(u32, u32)> {
    assert_eq!(x.len(), y.len(), "window slices must pair up");
    let n = x.len();
    if n < 2 {
        return Err(AmicError::TooShort { needed: 2, got: n });
    }
    let mut pp = 0u32;
    let mut np = 0u32;
    for i in 0..n - 1 {
        let dx_up = x[i] < x[i + 1];
        let dx_down = x[i] > x[i + 1];
        let dy_up = y[i] < y[i + 1];
        let dy_down = y[i] > y[i + 1];
        if (dx_up && dy_up) || (dx_down && dy_down) {
            pp += 1;
        } else if (dx_up && dy_down) || (dx_down && dy_up) {
            np += 1;
        }
    }
    Ok((pp, np))
}

/// Normalized balance of concordant over discordant steps,
/// `(pp - np) / (n - 1)`, always in [-1, 1].
pub fn association_degree(pp: u32, np: u32, n: usize) -> f64 {
    assert!(n >= 2, "degree needs at least two samples");
    debug_assert!((pp + np) as usize <= n - 1);
    (pp as f64 - np as f64) / (n - 1) as f64
}

/// Classifies the association: positive when `mu > 0` with confidence
/// `|pp - np| / pp`, negative when `mu < 0` with confidence
/// `|pp - np| / np`, neither when `mu = 0` with confidence `1 - |mu|`.
pub fn classify(pp: u32, np: u32, mu: f64) -> (Sign, f64) {
    if mu > 0.0 {
        assert!(pp >= 1, "positive balance requires a concordant step");
        (Sign::Positive, (pp as f64 - np as f64).abs() / pp as f64)
    } else if mu < 0.0 {
        assert!(np >= 1, "negative balance requires a discordant step");
        (Sign::Negative, (pp as f64 - np as f64).abs() / np as f64)
    } else {
        (Sign::Neither, 1.0 - mu.abs())
    }
}

/// Full association assessment of one window of raw values.
pub fn assess(x: &[f64], y: &[f64]) -> Result<AssociationStats> {
    let (pp, np) = count_periods(x, y)?;
    let mu = association_degree(pp, np, x.len());
    let (sign, confidence) = classify(pp, np, mu);
    Ok(AssociationStats { pp, np, mu, sign, confidence })
}
