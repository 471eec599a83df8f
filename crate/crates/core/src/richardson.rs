//! Richardson extrapolation of sequences sampled on a geometric ladder.

/// Extrapolated limits of a sequence a_j ≈ a + c_1 h_j + … + c_m h_j^m with
/// h_{j+1} = h_j / ratio.
///
/// Entry j of the result uses a_{j-m..=j}; entries with j < m use the highest
/// order available.
pub fn extrapolate(seq: &[f64], ratio: f64, order: usize) -> Vec<f64> {
    let mut table: Vec<Vec<f64>> = vec![seq.to_vec()];
    for k in 1..=order {
        let prev = &table[k - 1];
        let f = ratio.powi(k as i32);
        let next: Vec<f64> = (0..seq.len())
            .map(|j| {
                if j >= k {
                    (f * prev[j] - prev[j - 1]) / (f - 1.0)
                } else {
                    prev[j]
                }
            })
            .collect();
        table.push(next);
    }
    (0..seq.len()).map(|j| table[j.min(order)][j]).collect()
}

/// Vector version of [`extrapolate`], componentwise.
pub fn extrapolate_vectors<const N: usize>(seq: &[[f64; N]], ratio: f64, order: usize) -> Vec<[f64; N]> {
    let mut out = vec![[0.0; N]; seq.len()];
    for c in 0..N {
        let comp: Vec<f64> = seq.iter().map(|v| v[c]).collect();
        for (o, e) in out.iter_mut().zip(extrapolate(&comp, ratio, order)) {
            o[c] = e;
        }
    }
    out
}

/// Successive differences |e_j − e_{j−1}|.
pub fn residuals(estimates: &[f64]) -> Vec<f64> {
    estimates.windows(2).map(|w| (w[1] - w[0]).abs()).collect()
}

/// True when each of the last `count` residual ratios r_{j−1}/r_j is at least
/// `factor`, treating residuals at or below `floor` as converged.
pub fn contracts(res: &[f64], factor: f64, count: usize, floor: f64) -> bool {
    if res.is_empty() {
        return false;
    }
    if *res.last().unwrap() <= floor {
        return true;
    }
    if res.len() < count + 1 {
        return false;
    }
    res[res.len() - count - 1..]
        .windows(2)
        .all(|w| w[1] <= floor || w[0] >= factor * w[1])
}
