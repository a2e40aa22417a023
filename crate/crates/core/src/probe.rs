//! Low-discrepancy probe points on the unit cube.
//!
//! Invariant checks (partition of unity, response bounds) evaluate the
//! objects under test on a Kronecker sequence `frac(shift + n * alpha)` with
//! the generalized golden-ratio directions, preceded by the cube corners so
//! that boundary faces are always exercised.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Root of `x^(d+1) = x + 1`, the generalized golden ratio.
fn harmonious(dim: usize) -> f64 {
    let mut x = 2.0_f64;
    for _ in 0..64 {
        x = (1.0 + x).powf(1.0 / (dim as f64 + 1.0));
    }
    x
}

/// Deterministic probe set of `count` points in `[0,1]^dim`.
#[derive(Debug, Clone)]
pub struct ProbeSet {
    dim: usize,
    count: usize,
    alpha: Vec<f64>,
    shift: Vec<f64>,
    corners: usize,
}

impl ProbeSet {
    pub fn new(dim: usize, count: usize, seed: u64) -> Self {
        let g = harmonious(dim);
        let alpha = (1..=dim).map(|i| g.powi(-(i as i32))).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..dim).map(|_| rng.random::<f64>()).collect();
        let corners = if dim < 16 {
            (1usize << dim).min(count)
        } else {
            0
        };
        Self {
            dim,
            count,
            alpha,
            shift,
            corners,
        }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Writes probe `n` into `out`.
    pub fn point_into(&self, n: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        if n < self.corners {
            for (i, o) in out.iter_mut().enumerate() {
                *o = ((n >> i) & 1) as f64;
            }
            return;
        }
        let k = (n - self.corners + 1) as f64;
        for ((o, a), s) in out.iter_mut().zip(&self.alpha).zip(&self.shift) {
            *o = (s + k * a).fract();
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.count).map(move |n| {
            let mut p = vec![0.0; self.dim];
            self.point_into(n, &mut p);
            p
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probes_stay_in_cube_and_start_at_corners() {
        let probes = ProbeSet::new(2, 100, 7);
        let pts: Vec<_> = probes.iter().collect();
        assert_eq!(pts.len(), 100);
        assert_eq!(pts[0], vec![0.0, 0.0]);
        assert_eq!(pts[3], vec![1.0, 1.0]);
        assert!(pts.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn one_dimensional_probes_fill_the_interval() {
        let probes = ProbeSet::new(1, 1000, 3);
        let mut bins = [0usize; 10];
        for p in probes.iter() {
            bins[((p[0] * 10.0) as usize).min(9)] += 1;
        }
        assert!(bins.iter().all(|&b| (95..=105).contains(&b)), "{bins:?}");
    }
}
