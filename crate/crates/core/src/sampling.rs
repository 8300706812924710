//! Point-set generation over the unit box: quasi-uniform pools for
//! acquisition search, uniform draws for random search, and the regular
//! grids used by the exact oracles.

use rand::Rng;

use crate::seeding::rng_from;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Maximum box dimension supported by the Halton generator.
pub const MAX_DIM: usize = PRIMES.len();

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    out
}

/// `n` low-discrepancy points in `[0,1)^dim`: a Halton sequence under a
/// seeded Cranley-Patterson rotation, so distinct seeds give distinct but
/// equally well-spread pools.
pub fn halton_points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(dim >= 1 && dim <= MAX_DIM, "dimension {dim} out of range");
    let mut rng = rng_from(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    (0..n)
        .map(|i| {
            (0..dim)
                .map(|d| {
                    let v = radical_inverse(i as u64 + 1, PRIMES[d]) + shift[d];
                    v - v.floor()
                })
                .collect()
        })
        .collect()
}

/// `n` i.i.d. uniform points in `[0,1)^dim`.
pub fn uniform_points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_from(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect()
}

/// Regular grid with `points_per_axis` levels per axis over `[0,1]^dim`,
/// omitting the all-zero corner (serving weights need one positive entry).
pub fn alpha_grid(dim: usize, points_per_axis: usize) -> Vec<Vec<f64>> {
    assert!(points_per_axis >= 2, "grid needs at least two levels");
    let levels: Vec<f64> = (0..points_per_axis)
        .map(|i| i as f64 / (points_per_axis - 1) as f64)
        .collect();
    let mut out = Vec::with_capacity(points_per_axis.pow(dim as u32).saturating_sub(1));
    let mut idx = vec![0usize; dim];
    loop {
        if idx.iter().any(|&i| i > 0) {
            out.push(idx.iter().map(|&i| levels[i]).collect());
        }
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < points_per_axis {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == dim {
                return out;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_points_live_in_the_box_and_are_seed_deterministic() {
        let a = halton_points(64, 3, 9);
        let b = halton_points(64, 3, 9);
        let c = halton_points(64, 3, 10);
        assert_eq!(a, b);
        assert_ne!(a, c);
        for p in &a {
            assert!(p.iter().all(|&x| (0.0..1.0).contains(&x)));
        }
    }

    #[test]
    fn halton_points_spread_across_quadrants() {
        let pts = halton_points(256, 2, 4);
        let mut counts = [0usize; 4];
        for p in &pts {
            let q = (p[0] >= 0.5) as usize * 2 + (p[1] >= 0.5) as usize;
            counts[q] += 1;
        }
        for &c in &counts {
            assert!((40..=88).contains(&c), "quadrant counts skewed: {counts:?}");
        }
    }

    #[test]
    fn alpha_grid_skips_origin_and_has_full_cardinality() {
        let g = alpha_grid(2, 21);
        assert_eq!(g.len(), 21 * 21 - 1);
        assert!(g.iter().all(|p| p.iter().any(|&x| x > 0.0)));
        assert!(g.iter().any(|p| p == &vec![1.0, 1.0]));
    }
}
