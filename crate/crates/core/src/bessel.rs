//! Bessel functions of the first kind for integer order.
//!
//! Evaluated with Miller's downward recurrence, normalized through the
//! identity `J_0(x) + 2 Σ_k J_2k(x) = 1`. The recurrence is stable in the
//! downward direction for every order, so a single sweep yields the whole
//! table `J_0..J_n`.

/// Below this argument the two-term power series is exact to f64 precision
/// and the recurrence coefficients `2k/x` would overflow.
const SERIES_CUTOFF: f64 = 1e-6;
const RESCALE_ABOVE: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

/// `J_order(x)` for any integer order and real argument.
pub fn bessel_j(order: i32, x: f64) -> f64 {
    let n = order.unsigned_abs() as usize;
    let value = bessel_j_table(n, x.abs())[n];
    let odd_order = n % 2 == 1;
    // J_{-n}(x) = (-1)^n J_n(x) and J_n(-x) = (-1)^n J_n(x).
    let flip = odd_order && ((order < 0) != (x < 0.0));
    if flip {
        -value
    } else {
        value
    }
}

/// `[J_0(x), J_1(x), ..., J_max_order(x)]`.
pub fn bessel_j_table(max_order: usize, x: f64) -> Vec<f64> {
    if !x.is_finite() {
        return vec![f64::NAN; max_order + 1];
    }
    let ax = x.abs();
    let mut table = if ax < SERIES_CUTOFF {
        small_argument_table(max_order, ax)
    } else {
        miller_table(max_order, ax)
    };
    if x < 0.0 {
        for (n, v) in table.iter_mut().enumerate() {
            if n % 2 == 1 {
                *v = -*v;
            }
        }
    }
    table
}

fn small_argument_table(max_order: usize, x: f64) -> Vec<f64> {
    let half = 0.5 * x;
    let mut term = 1.0; // (x/2)^n / n!
    (0..=max_order)
        .map(|n| {
            if n > 0 {
                term *= half / n as f64;
            }
            term * (1.0 - half * half / (n as f64 + 1.0))
        })
        .collect()
}

fn miller_table(max_order: usize, x: f64) -> Vec<f64> {
    let reach = (max_order as f64).max(x);
    let mut start = (reach + 30.0 + 2.0 * (40.0 * reach).sqrt()).ceil() as usize;
    start += start % 2;

    let mut table = vec![0.0; max_order + 1];
    let two_over_x = 2.0 / x;
    let mut upper = 0.0; // J_{k+1}
    let mut current = 1e-30; // J_k
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let lower = k as f64 * two_over_x * current - upper;
        upper = current;
        current = lower;
        // `current` now holds J_{k-1}.
        let idx = k - 1;
        if current.abs() > RESCALE_ABOVE {
            current *= RESCALE_BY;
            upper *= RESCALE_BY;
            norm *= RESCALE_BY;
            for v in table.iter_mut() {
                *v *= RESCALE_BY;
            }
        }
        if idx <= max_order {
            table[idx] = current;
        }
        if idx > 0 && idx % 2 == 0 {
            norm += 2.0 * current;
        }
    }
    norm += current;
    for v in table.iter_mut() {
        *v /= norm;
    }
    table
}
