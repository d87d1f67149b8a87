//! Brute-force counterparts of the statistics in `crate::stats`.

/// AUC by counting every positive/negative pair.
pub fn auc_pairs(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let mut wins = 0.0;
    let mut pairs = 0usize;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    (pairs > 0).then(|| wins / pairs as f64)
}

/// Pearson coefficient from all pairwise differences:
/// `Σ (xi-xj)(yi-yj) / sqrt(Σ (xi-xj)² Σ (yi-yj)²)`, no means involved.
pub fn pearson_pairwise(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Two-tailed t-test p-value by Simpson integration of the t density.
///
/// Substituting `t = sqrt(ν) tan θ` turns the density into `cos^(ν-1) θ`, so
/// `p = ∫_{θ0}^{π/2} cos^(ν-1) / ∫_0^{π/2} cos^(ν-1)` with
/// `θ0 = atan(|t| / sqrt(ν))`. The integrand is bounded and smooth.
pub fn p_value_integrated(r: f64, n: usize) -> f64 {
    let nu = (n - 2) as f64;
    let r = r.abs();
    if r >= 1.0 {
        return 0.0;
    }
    let t = r * (nu / (1.0 - r * r)).sqrt();
    let theta0 = (t / nu.sqrt()).atan();
    let half_pi = std::f64::consts::FRAC_PI_2;
    let f = |th: f64| th.cos().powf(nu - 1.0);
    simpson(f, theta0, half_pi, 20_000) / simpson(f, 0.0, half_pi, 20_000)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}
