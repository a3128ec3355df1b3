use rand::Rng;

/// Source of every random choice in the simulator.
///
/// Sampling runs back this with a seeded RNG; exact runs back it with an
/// enumerator that walks every branch and tracks the branch weight.
pub trait Coins {
    /// Uniform choice in `0..n`.
    fn uniform(&mut self, n: usize) -> usize;

    /// Choice of index `i` with probability `weights[i] / sum(weights)`.
    fn weighted(&mut self, weights: &[f64]) -> usize;
}

impl<R: Rng> Coins for R {
    fn uniform(&mut self, n: usize) -> usize {
        self.gen_range(0..n)
    }

    fn weighted(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut r = self.gen::<f64>() * total;
        let mut last = 0;
        for (i, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            last = i;
            if r < w {
                return i;
            }
            r -= w;
        }
        last
    }
}
