//! Small floating-point helpers shared by the probability vectors.

/// Neumaier-compensated sum.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Left-to-right floating sum, the order used to state "sums to exactly 1".
pub fn sequential_sum(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |acc, v| acc + v)
}

/// Replace the last entry so that the left-to-right sum is exactly 1.0.
///
/// The last entry becomes `1 - s` for the prefix sum `s`, then moves by single
/// ulps until the sequential sum lands on 1.0.
pub fn close_to_unit_sum(values: &mut [f64]) {
    let Some((last, head)) = values.split_last_mut() else {
        return;
    };
    let s = sequential_sum(head);
    let mut v = 1.0 - s;
    for _ in 0..64 {
        let total = s + v;
        if total == 1.0 {
            break;
        }
        v = if total > 1.0 { v.next_down() } else { v.next_up() };
    }
    *last = v;
}

/// `m` equal probabilities summing to exactly 1.0 (left to right).
pub fn uniform_probs(m: usize) -> Vec<f64> {
    let mut p = vec![1.0 / m as f64; m];
    close_to_unit_sum(&mut p);
    p
}
