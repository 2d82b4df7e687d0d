//! Data-parallel map with a sequential fallback.
//!
//! Work is always split into indexed tasks and results are returned in index
//! order, so reductions over them are bit-identical whichever strategy ran.
//! Without the `parallel` feature, [`Execution::Parallel`] runs sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// `(0..n).map(f)`, collected in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
            #[cfg(not(feature = "parallel"))]
            Execution::Parallel => (0..n).map(f).collect(),
        }
    }
}

/// Caps the global worker pool. Returns `false` when the pool was already
/// initialized or parallelism is compiled out.
pub fn set_threads(n: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        false
    }
}

/// Running count, mean and sum of squared deviations.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
    }

    /// Pooled moments of two disjoint samples.
    pub fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2
            + other.m2
            + delta * delta * (self.count as f64 * other.count as f64) / count as f64;
        Moments { count, mean, m2 }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree() {
        let f = |i: usize| (i as f64).sqrt();
        assert_eq!(
            Execution::Sequential.map(1000, f),
            Execution::Parallel.map(1000, f)
        );
    }

    #[test]
    fn merged_moments_match_direct() {
        let data: Vec<f64> = (0..101).map(|i| ((i * 37) % 11) as f64 * 0.25).collect();
        let mut direct = Moments::default();
        data.iter().for_each(|&v| direct.push(v));

        let pooled = data
            .chunks(17)
            .map(|c| {
                let mut m = Moments::default();
                c.iter().for_each(|&v| m.push(v));
                m
            })
            .fold(Moments::default(), Moments::merge);

        assert_eq!(pooled.count, direct.count);
        assert!((pooled.mean - direct.mean).abs() < 1e-12);
        assert!((pooled.variance() - direct.variance()).abs() < 1e-12);
    }

    #[test]
    fn constant_sample_has_zero_error() {
        let mut m = Moments::default();
        (0..10).for_each(|_| m.push(0.75));
        assert_eq!(m.mean, 0.75);
        assert_eq!(m.stderr(), 0.0);
    }
}
