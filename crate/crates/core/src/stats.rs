/// Mean computed around the first element, so a constant slice yields that
/// constant exactly.
pub(crate) fn mean(xs: &[f64]) -> f64 {
    let Some(&first) = xs.first() else {
        return f64::NAN;
    };
    first + xs.iter().map(|x| x - first).sum::<f64>() / xs.len() as f64
}

/// Population (divide-by-n) standard deviation.
pub(crate) fn population_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}
