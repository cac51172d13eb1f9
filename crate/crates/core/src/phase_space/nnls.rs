/// Lawson–Hanson active-set solver for `min ½xᵀGx − bᵀx` subject to `x ≥ 0`,
/// i.e. non-negative least squares given the normal equations.
///
/// `g` is a dense symmetric `n×n` matrix, row-major.
pub fn nnls_gram(g: &[f64], b: &[f64], max_iter: usize) -> Vec<f64> {
    let n = b.len();
    assert_eq!(g.len(), n * n);
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return vec![0.0; n];
    }
    let tol = 1e-12 * scale;
    let ridge = 1e-13 * (0..n).map(|i| g[i * n + i]).fold(0.0, f64::max);
    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];
    let mut excluded = vec![false; n];
    for _ in 0..max_iter {
        let grad = residual_gradient(g, b, &x);
        let next = (0..n)
            .filter(|&j| !passive[j] && !excluded[j] && grad[j] > tol)
            .max_by(|&a, &c| grad[a].total_cmp(&grad[c]));
        let Some(t) = next else { break };
        passive[t] = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let Some(z) = solve_subset(g, b, &idx, ridge) else {
                // Numerically dependent on the passive set; never retry it.
                passive[t] = false;
                excluded[t] = true;
                break;
            };
            if z.iter().all(|&v| v > 0.0) {
                for (k, &j) in idx.iter().enumerate() {
                    x[j] = z[k];
                }
                break;
            }
            let mut alpha = 1.0f64;
            for (k, &j) in idx.iter().enumerate() {
                if z[k] <= 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - z[k]));
                }
            }
            for (k, &j) in idx.iter().enumerate() {
                x[j] += alpha * (z[k] - x[j]);
                if x[j] <= 1e-15 * scale {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    x
}

fn residual_gradient(g: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let n = b.len();
    (0..n)
        .map(|i| b[i] - (0..n).map(|j| g[i * n + j] * x[j]).sum::<f64>())
        .collect()
}

fn solve_subset(g: &[f64], b: &[f64], idx: &[usize], ridge: f64) -> Option<Vec<f64>> {
    let n = b.len();
    let p = idx.len();
    let mut l = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let mut s = g[idx[i] * n + idx[j]];
            if i == j {
                s += ridge;
            }
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * p + i] = s.sqrt();
            } else {
                l[i * p + j] = s / l[j * p + j];
            }
        }
    }
    let mut y: Vec<f64> = idx.iter().map(|&j| b[j]).collect();
    for i in 0..p {
        for k in 0..i {
            y[i] -= l[i * p + k] * y[k];
        }
        y[i] /= l[i * p + i];
    }
    for i in (0..p).rev() {
        for k in i + 1..p {
            y[i] -= l[k * p + i] * y[k];
        }
        y[i] /= l[i * p + i];
    }
    Some(y)
}
