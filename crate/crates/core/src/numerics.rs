//! Small numerical helpers: quadrature and low-discrepancy sequences.

/// Composite Simpson rule on a uniform grid of `values` with spacing `h`.
///
/// Falls back to the trapezoid rule when the number of intervals is odd.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let intervals = n - 1;
    if intervals % 2 == 1 {
        return trapezoid(values, h);
    }
    let mut acc = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * h / 3.0
}

pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    h * (0.5 * (values[0] + values[values.len() - 1]) + inner)
}

/// Radical inverse of `index` in `base` (van der Corput).
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// `k`-th point of the Halton sequence in `[0, 1)^dim` (dim <= 12).
pub fn halton(k: u64, dim: usize) -> Vec<f64> {
    (0..dim).map(|d| radical_inverse(k + 1, PRIMES[d % PRIMES.len()])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_exact_on_cubics() {
        let n = 20;
        let h = 2.0 / n as f64;
        let vals: Vec<f64> = (0..=n)
            .map(|i| {
                let t = i as f64 * h;
                t * t * t - t
            })
            .collect();
        // integral of t^3 - t over [0, 2] = 4 - 2
        assert!((simpson(&vals, h) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn halton_in_unit_cube() {
        for k in 0..100 {
            for c in halton(k, 3) {
                assert!((0.0..1.0).contains(&c));
            }
        }
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }
}
