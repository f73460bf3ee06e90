/// Natural cubic spline through `(xs, ys)` (strictly increasing `xs`),
/// evaluated at the integer positions `0..n`.
pub(crate) fn natural_cubic_on_grid(xs: &[f64], ys: &[f64], n: usize) -> Vec<f64> {
    debug_assert_eq!(xs.len(), ys.len());
    let k = xs.len();
    if k == 0 {
        return vec![0.0; n];
    }
    if k == 1 {
        return vec![ys[0]; n];
    }
    let m = second_derivatives(xs, ys);
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for t in 0..n {
        let t = t as f64;
        while seg + 2 < k && t > xs[seg + 1] {
            seg += 1;
        }
        let (x0, x1) = (xs[seg], xs[seg + 1]);
        let h = x1 - x0;
        let a = (x1 - t) / h;
        let b = (t - x0) / h;
        let v = a * ys[seg]
            + b * ys[seg + 1]
            + ((a * a * a - a) * m[seg] + (b * b * b - b) * m[seg + 1]) * h * h / 6.0;
        out.push(v);
    }
    out
}

/// Second derivatives at the knots with zero curvature at both ends
/// (Thomas algorithm on the tridiagonal system).
fn second_derivatives(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let k = xs.len();
    let mut m = vec![0.0; k];
    if k < 3 {
        return m;
    }
    let inner = k - 2;
    let mut diag = vec![0.0; inner];
    let mut upper = vec![0.0; inner];
    let mut rhs = vec![0.0; inner];
    for i in 1..k - 1 {
        let h0 = xs[i] - xs[i - 1];
        let h1 = xs[i + 1] - xs[i];
        diag[i - 1] = 2.0 * (h0 + h1);
        upper[i - 1] = h1;
        rhs[i - 1] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
    }
    // forward sweep; sub-diagonal entry of row r is h0 of that row
    for r in 1..inner {
        let sub = xs[r + 1] - xs[r];
        let w = sub / diag[r - 1];
        diag[r] -= w * upper[r - 1];
        rhs[r] -= w * rhs[r - 1];
    }
    m[inner] = rhs[inner - 1] / diag[inner - 1];
    for r in (0..inner - 1).rev() {
        m[r + 1] = (rhs[r] - upper[r] * m[r + 2]) / diag[r];
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_knots() {
        let xs = [0.0, 3.0, 7.0, 10.0, 15.0];
        let ys = [1.0, -2.0, 0.5, 4.0, 3.0];
        let v = natural_cubic_on_grid(&xs, &ys, 16);
        for (x, y) in xs.iter().zip(ys) {
            assert!((v[*x as usize] - y).abs() < 1e-12);
        }
    }

    #[test]
    fn reproduces_straight_lines() {
        let xs = [-2.0, 1.0, 4.0, 9.0, 12.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 * x - 1.0).collect();
        let v = natural_cubic_on_grid(&xs, &ys, 12);
        for (t, val) in v.iter().enumerate() {
            assert!((val - (0.5 * t as f64 - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn smooth_function_is_well_approximated() {
        let xs: Vec<f64> = (0..=20).map(|i| i as f64 * 5.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x / 15.0).sin()).collect();
        let v = natural_cubic_on_grid(&xs, &ys, 90);
        for (t, val) in v.iter().enumerate().skip(10).take(70) {
            assert!((val - (t as f64 / 15.0).sin()).abs() < 1e-3);
        }
    }
}
