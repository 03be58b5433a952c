//! Randomised quasi-Monte-Carlo: shifted Halton points, seeded streams and
//! replicate-based error bars.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

const PRIMES: [u32; 40] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109,
    113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173,
];

/// Largest supported point dimension.
pub const MAX_DIM: usize = PRIMES.len();

/// Number of randomised replicates behind every reported standard error.
pub const REPLICATES: usize = 16;

/// FNV-1a hash, used to derive per-task stream ids.
pub fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Deterministic RNG for `(seed, task)`.
pub fn stream_rng(seed: u64, task: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(task));
    rng
}

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    r
}

/// Halton point `index` (1-based to skip the origin) with a Cranley-Patterson
/// shift applied, written into `out`.
pub fn shifted_halton(index: u64, shift: &[f64], out: &mut [f64]) {
    for (j, o) in out.iter_mut().enumerate() {
        let mut v = radical_inverse(index, PRIMES[j]) + shift[j];
        if v >= 1.0 {
            v -= 1.0;
        }
        // keep strictly inside (0, 1) so inverse-CDF maps stay finite
        *o = v.clamp(1e-15, 1.0 - 1e-15);
    }
}

/// Mean and standard error of `f` over the unit cube `[0,1)^dim` from
/// [`REPLICATES`] independently shifted Halton blocks of `n` points each.
///
/// Replicates run in parallel; the result does not depend on scheduling.
pub fn replicated_mean<F>(dim: usize, n: usize, seed: u64, task: &str, f: F) -> (f64, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    assert!(dim <= MAX_DIM, "QMC dimension {dim} above {MAX_DIM}");
    let mut rng = stream_rng(seed, task);
    let shifts: Vec<Vec<f64>> = (0..REPLICATES).map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect()).collect();
    let means: Vec<f64> = shifts
        .par_iter()
        .map(|shift| {
            let mut u = vec![0.0; dim];
            let mut acc = 0.0;
            for i in 1..=n as u64 {
                shifted_halton(i, shift, &mut u);
                acc += f(&u);
            }
            acc / n as f64
        })
        .collect();
    mean_and_stderr(&means)
}

/// Vector-valued [`replicated_mean`]: `f` writes `k` outputs per point.
/// Returns per-output `(mean, stderr)`.
pub fn replicated_mean_vec<F>(dim: usize, n: usize, k: usize, seed: u64, task: &str, f: F) -> Vec<(f64, f64)>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    assert!(dim <= MAX_DIM, "QMC dimension {dim} above {MAX_DIM}");
    let mut rng = stream_rng(seed, task);
    let shifts: Vec<Vec<f64>> = (0..REPLICATES).map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect()).collect();
    let means: Vec<Vec<f64>> = shifts
        .par_iter()
        .map(|shift| {
            let mut u = vec![0.0; dim];
            let mut out = vec![0.0; k];
            let mut acc = vec![0.0; k];
            for i in 1..=n as u64 {
                shifted_halton(i, shift, &mut u);
                out.iter_mut().for_each(|o| *o = 0.0);
                f(&u, &mut out);
                acc.iter_mut().zip(&out).for_each(|(a, o)| *a += o);
            }
            acc.into_iter().map(|a| a / n as f64).collect()
        })
        .collect();
    (0..k).map(|j| mean_and_stderr(&means.iter().map(|m| m[j]).collect::<Vec<_>>())).collect()
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Maps `dim + 1` cube coordinates to a uniform point in the unit ball of
/// dimension `dim` (Gaussian direction, radius `u^{1/dim}`).
pub fn cube_to_ball(u: &[f64], out: &mut [f64]) {
    let dim = out.len();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut norm2 = 0.0;
    for (o, &ui) in out.iter_mut().zip(u) {
        *o = normal.inverse_cdf(ui);
        norm2 += *o * *o;
    }
    let r = u[dim].powf(1.0 / dim as f64) / norm2.sqrt().max(1e-300);
    for o in out.iter_mut() {
        *o *= r;
    }
}

/// Volume of the unit ball in `dim` dimensions.
pub fn unit_ball_volume(dim: usize) -> f64 {
    let d = dim as f64;
    std::f64::consts::PI.powf(d / 2.0) / statrs::function::gamma::gamma(d / 2.0 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base2() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - (2.0 / 3.0 + 1.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn integrates_smooth_function() {
        let (m, se) = replicated_mean(3, 4096, 7, "smooth", |u| u[0] * u[1] + u[2] * u[2]);
        let exact = 0.25 + 1.0 / 3.0;
        assert!((m - exact).abs() < 4.0 * se, "{m} {exact} {se}");
        assert!(se < 1e-3);
    }

    #[test]
    fn deterministic_given_seed_and_task() {
        let a = replicated_mean(2, 256, 11, "t", |u| (u[0] - u[1]).abs());
        let b = replicated_mean(2, 256, 11, "t", |u| (u[0] - u[1]).abs());
        assert_eq!(a, b);
        let c = replicated_mean(2, 256, 11, "other", |u| (u[0] - u[1]).abs());
        assert_ne!(a, c);
    }

    #[test]
    fn ball_points_inside() {
        let mut x = [0.0; 3];
        let mut u = [0.0; 4];
        for i in 1..500 {
            shifted_halton(i, &[0.1, 0.2, 0.3, 0.4], &mut u);
            cube_to_ball(&u, &mut x);
            assert!(x.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-13);
        assert!((unit_ball_volume(3) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-13);
    }
}
