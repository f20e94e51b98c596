//! Log-domain averaging shared by the classical and generalized formalisms.

/// `log2(mean(2^e))` over `e`, shifted by the maximum so that no term
/// overflows. Partial sums are combined pairwise for an order that does not
/// depend on how callers split the work.
pub(crate) fn log2_mean_exp2(e: &[f64]) -> f64 {
    if e.is_empty() {
        return f64::NAN;
    }
    let m = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s = pairwise_sum(e, m);
    m + (s / e.len() as f64).log2()
}

fn pairwise_sum(e: &[f64], m: f64) -> f64 {
    if e.len() <= 32 {
        return e.iter().map(|&x| (x - m).exp2()).sum();
    }
    let mid = e.len() / 2;
    pairwise_sum(&e[..mid], m) + pairwise_sum(&e[mid..], m)
}
