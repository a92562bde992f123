//! Order-stable reductions used for Monte Carlo aggregation.
//!
//! Replica results are always collected in index order and reduced with
//! pairwise summation, so the reported numbers do not depend on how many
//! threads produced them.

/// Pairwise (cascade) summation; block size 16 at the leaves.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStdErr {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

pub fn mean_std_err(values: &[f64]) -> MeanStdErr {
    let n = values.len();
    if n == 0 {
        return MeanStdErr {
            mean: f64::NAN,
            std_error: f64::NAN,
            n,
        };
    }
    let mean = pairwise_sum(values) / n as f64;
    if n == 1 {
        return MeanStdErr {
            mean,
            std_error: 0.0,
            n,
        };
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    MeanStdErr {
        mean,
        std_error: (var / n as f64).sqrt(),
        n,
    }
}

/// Unbiased sample variance.
pub fn sample_variance(values: &[f64]) -> f64 {
    let s = mean_std_err(values);
    s.std_error * s.std_error * s.n as f64
}

/// Pearson correlation of two equally long samples.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = pairwise_sum(x) / n;
    let my = pairwise_sum(y) / n;
    let cov: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let vx: Vec<f64> = x.iter().map(|a| (a - mx) * (a - mx)).collect();
    let vy: Vec<f64> = y.iter().map(|b| (b - my) * (b - my)).collect();
    pairwise_sum(&cov) / (pairwise_sum(&vx) * pairwise_sum(&vy)).sqrt()
}

/// Format a float with 17 significant digits so it round-trips through text.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 5050.0);
    }

    #[test]
    fn mean_and_error_of_constant_sample() {
        let s = mean_std_err(&[2.0; 10]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std_error, 0.0);
    }

    #[test]
    fn fmt17_round_trips() {
        for x in [0.1, 1.0 / 3.0, std::f64::consts::PI, -1e-300, 6.02e23] {
            assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
        }
    }
}
