//! One-pass moment accumulators and per-output-time ensemble statistics.

/// Count, mean and centred second moment (Welford), mergeable with Chan's
/// pairwise update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let (na, nb) = (self.n as f64, other.n as f64);
        self.mean += d * nb / n as f64;
        self.m2 += other.m2 + d * d * na * nb / n as f64;
        self.n = n;
    }

    /// Unbiased sample variance (0 for fewer than two values).
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    /// Mean of x² (population form).
    pub fn second_moment(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            self.m2 / self.n as f64 + self.mean * self.mean
        }
    }

    pub fn stderr_of_mean(&self) -> f64 {
        if self.n < 2 {
            f64::NAN
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// Number of batches used for batch-means standard errors.
pub const DEFAULT_BATCHES: usize = 20;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PointStats {
    pub q: Moments,
    pub v: Moments,
}

impl PointStats {
    fn merge(&mut self, other: &PointStats) {
        self.q.merge(&other.q);
        self.v.merge(&other.v);
    }
}

/// Streaming statistics of Q and Q̇ at each output time. Trajectory i goes
/// to batch i mod B; the spread of per-batch variances gives the standard
/// error of the variance.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    times: Vec<f64>,
    /// batches[b][k] for batch b and output time k.
    batches: Vec<Vec<PointStats>>,
    failed: usize,
}

/// One output row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatsRow {
    pub t: f64,
    pub q_mean: f64,
    pub q_mean_stderr: f64,
    pub q_var: f64,
    pub q_var_stderr: f64,
    /// ⟨Q²⟩ about zero, with its batch-means standard error.
    pub q2: f64,
    pub q2_stderr: f64,
    pub v_mean: f64,
    pub v_var: f64,
    pub v_var_stderr: f64,
    pub count: u64,
}

impl EnsembleStats {
    pub fn new(times: Vec<f64>, n_batches: usize) -> Self {
        let n_batches = n_batches.max(1);
        let batches = vec![vec![PointStats::default(); times.len()]; n_batches];
        Self {
            times,
            batches,
            failed: 0,
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_batches(&self) -> usize {
        self.batches.len()
    }

    pub fn record(&mut self, trajectory: usize, time_index: usize, q: f64, v: f64) {
        let b = trajectory % self.batches.len();
        let p = &mut self.batches[b][time_index];
        p.q.push(q);
        p.v.push(v);
    }

    pub fn record_failure(&mut self) {
        self.failed += 1;
    }

    pub fn failed(&self) -> usize {
        self.failed
    }

    /// Merges another accumulator over the same output times.
    pub fn merge(&mut self, other: &EnsembleStats) {
        assert_eq!(self.times.len(), other.times.len(), "output grids differ");
        assert_eq!(self.batches.len(), other.batches.len(), "batch counts differ");
        for (mine, theirs) in self.batches.iter_mut().zip(&other.batches) {
            for (a, b) in mine.iter_mut().zip(theirs) {
                a.merge(b);
            }
        }
        self.failed += other.failed;
    }

    /// Statistics of batch `b` at output time k.
    pub fn batch(&self, b: usize, k: usize) -> &PointStats {
        &self.batches[b][k]
    }

    /// Pooled statistics at output time k.
    pub fn pooled(&self, k: usize) -> PointStats {
        let mut p = PointStats::default();
        for b in &self.batches {
            p.merge(&b[k]);
        }
        p
    }

    /// Completed trajectories (taken at the initial time).
    pub fn count(&self) -> u64 {
        if self.times.is_empty() {
            0
        } else {
            self.pooled(0).q.n
        }
    }

    fn batch_stderr(&self, k: usize, pick: impl Fn(&PointStats) -> f64) -> f64 {
        let vals: Moments = self
            .batches
            .iter()
            .filter(|b| b[k].q.n >= 2)
            .map(|b| pick(&b[k]))
            .collect();
        vals.stderr_of_mean()
    }

    pub fn row(&self, k: usize) -> StatsRow {
        let p = self.pooled(k);
        StatsRow {
            t: self.times[k],
            q_mean: p.q.mean,
            q_mean_stderr: p.q.stderr_of_mean(),
            q_var: p.q.variance(),
            q_var_stderr: self.batch_stderr(k, |s| s.q.variance()),
            q2: p.q.second_moment(),
            q2_stderr: self.batch_stderr(k, |s| s.q.second_moment()),
            v_mean: p.v.mean,
            v_var: p.v.variance(),
            v_var_stderr: self.batch_stderr(k, |s| s.v.variance()),
            count: p.q.n,
        }
    }

    pub fn rows(&self) -> Vec<StatsRow> {
        (0..self.times.len()).map(|k| self.row(k)).collect()
    }
}
