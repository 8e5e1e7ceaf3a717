//! Small numerical helpers shared by the likelihood code.

/// `ln(2π) / 2`.
pub const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Sum of a short slice that does not depend on the order of its elements.
///
/// Values are added in ascending order, so permuting the classes of a model
/// permutes the inputs without changing a single bit of the result.
pub fn order_free_sum(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.iter().sum()
}

/// `ln Σ exp(v)` with the max-shift trick. Returns `-inf` when every input is `-inf`.
///
/// Like [`order_free_sum`] the result is independent of input order.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let mut stack = [0.0f64; 16];
    let mut heap = Vec::new();
    let shifted: &mut [f64] = if values.len() <= stack.len() {
        &mut stack[..values.len()]
    } else {
        heap.resize(values.len(), 0.0);
        &mut heap
    };
    for (s, v) in shifted.iter_mut().zip(values) {
        *s = (v - max).exp();
    }
    shifted.sort_unstable_by(f64::total_cmp);
    max + shifted.iter().sum::<f64>().ln()
}

/// Normalizes log weights in place into probabilities and returns their log-sum.
pub fn normalize_log_weights(log_weights: &[f64], out: &mut [f64]) -> f64 {
    let lse = log_sum_exp(log_weights);
    for (o, &l) in out.iter_mut().zip(log_weights) {
        *o = (l - lse).exp();
    }
    lse
}

/// Compensated (Neumaier) summation, used for long reductions over instances.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::default();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Log density of `N(mean, sd²)` at `x`.
#[inline]
pub fn log_normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let t = (x - mean) / sd;
    -0.5 * t * t - sd.ln() - HALF_LN_2PI
}

/// Density of `N(mean, sd²)` at `x`.
pub fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    log_normal_pdf(x, mean, sd).exp()
}

/// Dot product with four independent partial sums (vectorizes; fixed order).
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let (rest_a, rest_b) = (chunks_a.remainder(), chunks_b.remainder());
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for l in 0..4 {
            acc[l] += ca[l] * cb[l];
        }
    }
    let mut tail = 0.0;
    for (x, y) in rest_a.iter().zip(rest_b) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
