//! Seeded k-means with farthest-point initialization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Cluster index per input point.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub iterations: usize,
    /// False when `MAX_ITERATIONS` was reached with assignments still moving.
    pub converged: bool,
    /// Number of times an emptied cluster was re-seeded.
    pub reseeds: usize,
}

impl KMeansResult {
    pub fn inertia(&self, points: &[Vec<f64>]) -> f64 {
        points.iter().zip(&self.assignments).map(|(p, &c)| sq_dist(p, &self.centroids[c])).sum()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// First centre drawn from the seeded RNG, each next centre the point farthest from
/// the centres chosen so far (ties to the lowest index).
fn farthest_point_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut min_d: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let mut next = None;
        let mut far = -1.0;
        for (i, d) in min_d.iter().enumerate() {
            if *d > far && !chosen.contains(&i) {
                far = *d;
                next = Some(i);
            }
        }
        let next = next.expect("n >= k");
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            min_d[i] = min_d[i].min(sq_dist(p, &points[next]));
        }
    }
    chosen
}

/// Lloyd iterations until assignments stop changing. Requires `1 <= k <= points.len()`.
///
/// An emptied cluster is re-seeded with the point farthest from its current
/// centroid among clusters holding more than one point, so every returned
/// cluster is non-empty.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> KMeansResult {
    assert!(k >= 1 && k <= points.len(), "k must be in 1..=n");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<Vec<f64>> =
        farthest_point_init(points, k, &mut rng).into_iter().map(|i| points[i].clone()).collect();
    let dim = points[0].len();
    let mut assignments = vec![usize::MAX; points.len()];
    let mut reseeds = 0;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();

        // keep every cluster populated
        loop {
            let mut sizes = vec![0usize; k];
            next.iter().for_each(|&c| sizes[c] += 1);
            let Some(empty) = sizes.iter().position(|&s| s == 0) else {
                break;
            };
            let donor = (0..points.len())
                .filter(|&i| sizes[next[i]] > 1)
                .max_by(|&a, &b| {
                    sq_dist(&points[a], &centroids[next[a]])
                        .total_cmp(&sq_dist(&points[b], &centroids[next[b]]))
                        .then(b.cmp(&a))
                })
                .expect("some cluster has two points when one is empty");
            next[donor] = empty;
            centroids[empty] = points[donor].clone();
            reseeds += 1;
        }

        if next == assignments {
            converged = true;
            break;
        }
        assignments = next;

        let mut sums = vec![vec![0.0; dim]; k];
        let mut sizes = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignments) {
            sizes[c] += 1;
            sums[c].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        for c in 0..k {
            centroids[c] = sums[c].iter().map(|s| s / sizes[c] as f64).collect();
        }
    }
    if !converged {
        log::warn!("k-means stopped after {MAX_ITERATIONS} iterations without converging");
    }
    KMeansResult { assignments, centroids, iterations, converged, reseeds }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_points() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![10.0, 10.0],
            vec![10.1, 10.0],
            vec![-10.0, 10.0],
            vec![-10.0, 10.1],
        ];
        for seed in 0..20 {
            let r = kmeans(&pts, 3, seed);
            assert!(r.converged);
            assert_eq!(r.assignments[0], r.assignments[1]);
            assert_eq!(r.assignments[2], r.assignments[3]);
            assert_eq!(r.assignments[4], r.assignments[5]);
            assert_ne!(r.assignments[0], r.assignments[2]);
            assert_ne!(r.assignments[0], r.assignments[4]);
            assert_ne!(r.assignments[2], r.assignments[4]);
        }
    }

    #[test]
    fn duplicate_points_still_fill_k_clusters() {
        let pts = vec![vec![1.0], vec![1.0], vec![1.0], vec![1.0]];
        let r = kmeans(&pts, 3, 5);
        let mut used = r.assignments.clone();
        used.sort();
        used.dedup();
        assert_eq!(used, vec![0, 1, 2]);
    }

    #[test]
    fn deterministic() {
        let pts: Vec<Vec<f64>> = (0..40).map(|i| vec![(i * 7 % 13) as f64, (i % 5) as f64]).collect();
        assert_eq!(kmeans(&pts, 3, 9), kmeans(&pts, 3, 9));
    }
}
