//! The eight pairwise measures shared by the text, location and embedding
//! features: cosine, euclidean, correlation, chebyshev, bray_curtis,
//! canberra, manhattan and sq_euclidean, in that order.
//!
//! Cosine and correlation are emitted in similarity form.

pub const MEASURE_NAMES: [&str; 8] = [
    "cosine",
    "euclidean",
    "correlation",
    "chebyshev",
    "bray_curtis",
    "canberra",
    "manhattan",
    "sq_euclidean",
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Distances {
    pub values: [f64; 8],
    /// Set when cosine or correlation had a zero-norm operand and was
    /// reported as 0.
    pub degenerate: bool,
}

impl Distances {
    pub fn cosine(&self) -> f64 {
        self.values[0]
    }
    pub fn euclidean(&self) -> f64 {
        self.values[1]
    }
    pub fn correlation(&self) -> f64 {
        self.values[2]
    }
    pub fn chebyshev(&self) -> f64 {
        self.values[3]
    }
    pub fn bray_curtis(&self) -> f64 {
        self.values[4]
    }
    pub fn canberra(&self) -> f64 {
        self.values[5]
    }
    pub fn manhattan(&self) -> f64 {
        self.values[6]
    }
    pub fn sq_euclidean(&self) -> f64 {
        self.values[7]
    }
}

fn similarity(dot: f64, norm_sq_a: f64, norm_sq_b: f64) -> Option<f64> {
    if norm_sq_a == 0.0 || norm_sq_b == 0.0 {
        return None;
    }
    Some((dot / (norm_sq_a.sqrt() * norm_sq_b.sqrt())).clamp(-1.0, 1.0))
}

/// Computes all eight measures. Canberra terms with both coordinates zero
/// contribute nothing; bray_curtis of two zero vectors is 0.
///
/// Panics if the slices differ in length.
pub fn pairwise(a: &[f64], b: &[f64]) -> Distances {
    assert_eq!(a.len(), b.len(), "pairwise distance on vectors of different length");
    let n = a.len() as f64;
    let mean_a = if a.is_empty() { 0.0 } else { a.iter().sum::<f64>() / n };
    let mean_b = if b.is_empty() { 0.0 } else { b.iter().sum::<f64>() / n };

    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    let (mut cdot, mut cna, mut cnb) = (0.0, 0.0, 0.0);
    let (mut cheb, mut manhattan, mut abs_sum, mut canberra, mut sq) = (0.0f64, 0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
        let (cx, cy) = (x - mean_a, y - mean_b);
        cdot += cx * cy;
        cna += cx * cx;
        cnb += cy * cy;
        let diff = (x - y).abs();
        cheb = cheb.max(diff);
        manhattan += diff;
        abs_sum += (x + y).abs();
        let denom = x.abs() + y.abs();
        if denom > 0.0 {
            canberra += diff / denom;
        }
        sq += diff * diff;
    }
    let cosine = similarity(dot, na, nb);
    let correlation = similarity(cdot, cna, cnb);
    let bray_curtis = if abs_sum > 0.0 { manhattan / abs_sum } else { 0.0 };
    Distances {
        values: [
            cosine.unwrap_or(0.0),
            sq.sqrt(),
            correlation.unwrap_or(0.0),
            cheb,
            bray_curtis,
            canberra,
            manhattan,
            sq,
        ],
        degenerate: cosine.is_none() || correlation.is_none(),
    }
}
