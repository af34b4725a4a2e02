//! Capped ℓ1 point sets: per-coordinate line build/clean, bucket hashing and
//! lazy snaking with cap `M/d`.

use rand::Rng;

use crate::build_clean::{line_build_clean, StageParams};
use crate::error::{invalid, Result};
use crate::metric::{Embedding, PointSet};
use crate::rng::RngSeed;
use crate::snake::{boost_average, lazy_snake_fixed};

pub const DEFAULT_C: usize = 128;

/// Concatenated per-coordinate build/clean vectors, length `8 d^2` each.
pub fn build_z(points: &PointSet, m: f64, seed: RngSeed) -> Result<Vec<Vec<f64>>> {
    if !(m > 0.0) || !m.is_finite() {
        return invalid(format!("cap must be positive, got {m}"));
    }
    let d = points.dim();
    let mut z = vec![Vec::with_capacity(8 * d * d); points.len()];
    let base = seed.named("z");
    for q in 0..d {
        let col: Vec<f64> = points.points().iter().map(|p| p[q]).collect();
        let block = line_build_clean(&col, m, d, base.derive(q as u64))?;
        for (zi, v) in z.iter_mut().zip(block) {
            zi.extend(v);
        }
    }
    Ok(z)
}

/// Two-level value of the `z` vectors, `M / (100 d)`.
pub fn z_level(m: f64, d: usize) -> f64 {
    StageParams::new(d).piece_len(m)
}

/// One copy: `k = c d` buckets, each snaked with cap `m / d`.
pub fn capped_l1_embed(points: &PointSet, m: f64, c: usize, seed: RngSeed) -> Result<Embedding> {
    if c == 0 {
        return invalid("bucket constant must be positive");
    }
    let z = build_z(points, m, seed)?;
    let d = points.dim();
    let k = c * d;
    let width = 8 * d * d;
    let mut hrng = seed.named("l1-hash").rng();
    let hash: Vec<usize> = (0..width).map(|_| hrng.gen_range(0..k)).collect();

    let n = points.len();
    let mut locs = vec![vec![0.0; n]; k];
    for (i, zi) in z.iter().enumerate() {
        for (q, &x) in zi.iter().enumerate() {
            locs[hash[q]][i] += x;
        }
    }
    let snake = seed.named("l1-snake");
    let cap = m / d as f64;
    let mut rows = vec![vec![0.0; k]; n];
    for (p, loc) in locs.iter().enumerate() {
        let vals = lazy_snake_fixed(loc, cap, snake.derive(p as u64))?;
        for (row, x) in rows.iter_mut().zip(vals) {
            row[p] = x;
        }
    }
    Embedding::new(rows)
}

pub fn capped_l1_boosted(points: &PointSet, m: f64, c: usize, copies: usize, seed: RngSeed) -> Result<Embedding> {
    boost_average(copies, seed, |s| capped_l1_embed(points, m, c, s))
}

/// Per-run bound: `‖x_i - x_j‖₁` when it is at most `m`, else `c m`.
pub fn per_run_bound(dist: f64, m: f64, c: usize) -> f64 {
    if dist <= m {
        dist
    } else {
        c as f64 * m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_points_coincide() {
        let p = PointSet::new(vec![vec![0.2, 0.4], vec![0.2, 0.4], vec![0.9, 0.1]]).unwrap();
        let e = capped_l1_embed(&p, 1.0, DEFAULT_C, RngSeed::new(2)).unwrap();
        assert_eq!(e.dim(), 256);
        assert_eq!(e.distance(0, 1), 0.0);
    }

    #[test]
    fn one_dimensional_z_is_one_block() {
        let p = PointSet::new(vec![vec![0.0], vec![0.37], vec![2.0]]).unwrap();
        let z = build_z(&p, 1.0, RngSeed::new(1)).unwrap();
        let lvl = z_level(1.0, 1);
        for zi in &z {
            assert_eq!(zi.len(), 8);
            assert!(zi.iter().filter(|&&x| x != 0.0 && x != lvl).count() <= 1);
        }
    }
}
