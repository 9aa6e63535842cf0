// SPDX-License-Identifier: Apache-2.0

//! Fixed-point Lloyd's K-means in which squared-distance accumulation and
//! centroid coordinate sums go through the adder under test.

use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{bits_for, AppError};
use crate::adder::{low_mask, AdderConfig};
use crate::exec::Exec;

/// Real coordinates are multiplied by this and rounded.
pub const FIXED_POINT_SCALE: f64 = 1000.0;
pub const DEFAULT_MAX_ITER: u32 = 100;
/// Seed of the built-in dataset.
pub const BUNDLED_DATASET_SEED: u64 = 150;

/// Points in fixed point, all with the same dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    points: Vec<Vec<u64>>,
    dims: usize,
}

impl Dataset {
    pub fn new(points: Vec<Vec<u64>>) -> Result<Self, AppError> {
        let dims = points.first().map_or(0, Vec::len);
        if dims == 0 {
            return Err(AppError::InvalidParam("dataset is empty".into()));
        }
        if let Some(i) = points.iter().position(|p| p.len() != dims) {
            return Err(AppError::Csv {
                row: i + 1,
                message: format!("expected {dims} coordinates, found {}", points[i].len()),
            });
        }
        Ok(Dataset { points, dims })
    }

    /// Scales real coordinates by [`FIXED_POINT_SCALE`]. Coordinates must be
    /// non-negative since the adders are unsigned.
    pub fn from_real(rows: &[Vec<f64>]) -> Result<Self, AppError> {
        let mut points = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            let mut p = Vec::with_capacity(row.len());
            for &v in row {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(AppError::Csv {
                        row: i + 1,
                        message: format!("coordinate {v} is not a finite non-negative number"),
                    });
                }
                p.push((v * FIXED_POINT_SCALE).round() as u64);
            }
            points.push(p);
        }
        Self::new(points)
    }

    pub fn points(&self) -> &[Vec<u64>] {
        &self.points
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn max_coordinate(&self) -> u64 {
        self.points.iter().flatten().copied().max().unwrap_or(0)
    }
}

/// Headerless CSV, one point per row. Errors name the 1-based row.
pub fn parse_csv(reader: impl Read) -> Result<Dataset, AppError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| AppError::Csv {
            row: i + 1,
            message: e.to_string(),
        })?;
        let row = rec
            .iter()
            .filter(|f| !f.is_empty())
            .map(|f| {
                f.parse::<f64>().map_err(|_| AppError::Csv {
                    row: i + 1,
                    message: format!("`{f}` is not a number"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if !row.is_empty() {
            rows.push(row);
        }
    }
    Dataset::from_real(&rows)
}

/// Per-class means and standard deviations of the four Iris measurements.
const IRIS_LIKE_CLASSES: [([f64; 4], [f64; 4]); 3] = [
    ([5.006, 3.428, 1.462, 0.246], [0.352, 0.379, 0.174, 0.105]),
    ([5.936, 2.770, 4.260, 1.326], [0.516, 0.314, 0.470, 0.198]),
    ([6.588, 2.974, 5.552, 2.026], [0.636, 0.322, 0.552, 0.275]),
];

/// 150 four-dimensional points in three Gaussian classes of 50 with
/// Iris-like statistics, rounded to one decimal as in the original data.
pub fn iris_like_dataset(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(150);
    for (means, sds) in IRIS_LIKE_CLASSES {
        for _ in 0..50 {
            rows.push(
                means
                    .iter()
                    .zip(sds.iter())
                    .map(|(&m, &s)| {
                        let v = Normal::new(m, s).expect("valid sd").sample(&mut rng);
                        (v.max(0.1) * 10.0).round() / 10.0
                    })
                    .collect::<Vec<_>>(),
            );
        }
    }
    Dataset::from_real(&rows).expect("generated coordinates are valid")
}

/// The dataset used when no CSV is given.
pub fn bundled_dataset() -> Dataset {
    iris_like_dataset(BUNDLED_DATASET_SEED)
}

/// Outcome of one Lloyd's run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LloydRun {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<u64>>,
    pub iterations: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub config: AdderConfig,
    pub seed: u64,
    pub assignments: Vec<usize>,
    /// Fixed-point centroids (divide by [`FIXED_POINT_SCALE`]).
    pub centroids: Vec<Vec<u64>>,
    pub iterations: u32,
    /// Fraction of points whose cluster, after best label matching, equals
    /// the exact-addition baseline run with the same seed.
    pub agreement: f64,
    /// Mean Euclidean distance between matched centroids, in real units.
    pub centroid_distance: f64,
}

#[inline]
fn exact_sq_distance(p: &[u64], c: &[u64]) -> u128 {
    p.iter()
        .zip(c)
        .map(|(&x, &y)| (x.abs_diff(y) as u128).pow(2))
        .sum()
}

/// K-means++ seeding with exact arithmetic, so every adder starts from the
/// same centroids for a given seed.
fn seed_centroids(data: &Dataset, clusters: usize, seed: u64) -> Vec<Vec<u64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = data.points();
    let mut centroids = vec![pts[rng.random_range(0..pts.len())].clone()];
    while centroids.len() < clusters {
        let d2: Vec<u128> = pts
            .iter()
            .map(|p| {
                centroids
                    .iter()
                    .map(|c| exact_sq_distance(p, c))
                    .min()
                    .expect("at least one centroid")
            })
            .collect();
        let total: u128 = d2.iter().sum();
        let pick = if total == 0 {
            rng.random_range(0..pts.len())
        } else {
            let mut target = rng.random_range(0..total);
            d2.iter()
                .position(|&d| {
                    if target < d {
                        true
                    } else {
                        target -= d;
                        false
                    }
                })
                .expect("target below total")
        };
        centroids.push(pts[pick].clone());
    }
    centroids
}

struct ApproxArith<'a> {
    config: &'a AdderConfig,
    mask: u128,
}

impl ApproxArith<'_> {
    #[inline]
    fn add(&self, a: u64, b: u64) -> u64 {
        (self.config.add_extended(a, b) & self.mask) as u64
    }

    fn sq_distance(&self, p: &[u64], c: &[u64]) -> u64 {
        p.iter().zip(c).fold(0, |acc, (&x, &y)| {
            let d = x.abs_diff(y);
            self.add(acc, d * d)
        })
    }
}

fn check_widths(data: &Dataset, config: &AdderConfig) -> Result<(), AppError> {
    let max = data.max_coordinate() as u128;
    let dist = max * max * data.dims() as u128;
    let sum = max * data.len() as u128;
    let needed = bits_for(dist.max(sum));
    if needed > config.width() {
        return Err(AppError::AccumulatorOverflow {
            needed,
            width: config.width(),
        });
    }
    Ok(())
}

/// Lloyd's algorithm from k-means++ seeds. Stops at an assignment fixpoint
/// or after `max_iter` assignment steps. Empty clusters keep their centroid.
pub fn lloyd(
    data: &Dataset,
    clusters: usize,
    config: &AdderConfig,
    max_iter: u32,
    seed: u64,
    exec: Exec,
) -> Result<LloydRun, AppError> {
    if clusters == 0 || max_iter == 0 {
        return Err(AppError::InvalidParam(
            "clusters and max_iter must be at least 1".into(),
        ));
    }
    if clusters > data.len() {
        return Err(AppError::TooManyClusters {
            clusters,
            points: data.len(),
        });
    }
    check_widths(data, config)?;
    let arith = ApproxArith {
        config,
        mask: low_mask(config.width()) as u128,
    };
    let pts = data.points();

    let assign = |centroids: &[Vec<u64>]| -> Vec<usize> {
        exec.map(pts.len(), |i| {
            let mut best = (u64::MAX, 0);
            for (j, c) in centroids.iter().enumerate() {
                let d = arith.sq_distance(&pts[i], c);
                if d < best.0 {
                    best = (d, j);
                }
            }
            best.1
        })
    };
    let update = |assignments: &[usize], old: &[Vec<u64>]| -> Vec<Vec<u64>> {
        let mut sums = vec![vec![0u64; data.dims()]; clusters];
        let mut counts = vec![0u64; clusters];
        // ascending point index
        for (p, &j) in pts.iter().zip(assignments) {
            counts[j] += 1;
            for (s, &x) in sums[j].iter_mut().zip(p) {
                *s = arith.add(*s, x);
            }
        }
        sums.into_iter()
            .zip(counts)
            .zip(old)
            .map(|((s, n), prev)| {
                if n == 0 {
                    prev.clone()
                } else {
                    s.into_iter().map(|v| (v + n / 2) / n).collect()
                }
            })
            .collect()
    };

    let mut centroids = seed_centroids(data, clusters, seed);
    let mut assignments = assign(&centroids);
    let mut iterations = 1;
    while iterations < max_iter {
        let next_centroids = update(&assignments, &centroids);
        let next = assign(&next_centroids);
        iterations += 1;
        centroids = next_centroids;
        if next == assignments {
            break;
        }
        assignments = next;
    }
    Ok(LloydRun {
        assignments,
        centroids,
        iterations,
    })
}

fn confusion(a: &[usize], b: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut m = vec![vec![0; k]; k];
    for (&x, &y) in a.iter().zip(b) {
        m[x][y] += 1;
    }
    m
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("pivot");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Label map from `a` to `b` maximising agreeing points. Exhaustive up to
/// eight clusters, greedy beyond.
pub fn best_label_matching(a: &[usize], b: &[usize], k: usize) -> Vec<usize> {
    let m = confusion(a, b, k);
    if k <= 8 {
        let mut perm: Vec<usize> = (0..k).collect();
        let mut best = (0, perm.clone());
        loop {
            let score: usize = perm.iter().enumerate().map(|(i, &j)| m[i][j]).sum();
            if score > best.0 {
                best = (score, perm.clone());
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        return best.1;
    }
    let mut map = vec![usize::MAX; k];
    let mut used = vec![false; k];
    let mut cells: Vec<(usize, usize, usize)> = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| (m[i][j], i, j))
        .collect();
    cells.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    for (_, i, j) in cells {
        if map[i] == usize::MAX && !used[j] {
            map[i] = j;
            used[j] = true;
        }
    }
    map
}

pub fn kmeans(
    data: &Dataset,
    clusters: usize,
    config: &AdderConfig,
    max_iter: u32,
    seed: u64,
) -> Result<ClusteringResult, AppError> {
    kmeans_with(data, clusters, config, max_iter, seed, Exec::default())
}

/// Runs `config` and the exact baseline from the same seed and compares them.
pub fn kmeans_with(
    data: &Dataset,
    clusters: usize,
    config: &AdderConfig,
    max_iter: u32,
    seed: u64,
    exec: Exec,
) -> Result<ClusteringResult, AppError> {
    let run = lloyd(data, clusters, config, max_iter, seed, exec)?;
    let baseline_cfg = AdderConfig::exact(config.width())?;
    let baseline = lloyd(data, clusters, &baseline_cfg, max_iter, seed, exec)?;

    let map = best_label_matching(&run.assignments, &baseline.assignments, clusters);
    let agree = run
        .assignments
        .iter()
        .zip(&baseline.assignments)
        .filter(|(&a, &b)| map[a] == b)
        .count();
    let centroid_distance = run
        .centroids
        .iter()
        .enumerate()
        .map(|(i, c)| (exact_sq_distance(c, &baseline.centroids[map[i]]) as f64).sqrt())
        .sum::<f64>()
        / clusters as f64
        / FIXED_POINT_SCALE;

    Ok(ClusteringResult {
        config: *config,
        seed,
        assignments: run.assignments,
        centroids: run.centroids,
        iterations: run.iterations,
        agreement: agree as f64 / data.len() as f64,
        centroid_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_shape() {
        let d = bundled_dataset();
        assert_eq!(d.len(), 150);
        assert_eq!(d.dims(), 4);
        assert_eq!(d, bundled_dataset());
        assert!(d.points().iter().flatten().all(|&v| v % 100 == 0));
    }

    #[test]
    fn csv_parsing() {
        let d = parse_csv("5.1, 3.5,1.4,0.2\n4.9,3.0,1.4,0.2\n\n".as_bytes()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.points()[0], vec![5100, 3500, 1400, 200]);

        let err = parse_csv("1,2\n3,x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, AppError::Csv { row: 2, .. }), "{err}");
        let err = parse_csv("1,2\n3,-4\n".as_bytes()).unwrap_err();
        assert!(matches!(err, AppError::Csv { row: 2, .. }));
        assert!(parse_csv("1,2\n3\n".as_bytes()).is_err());
        assert!(parse_csv("".as_bytes()).is_err());
    }

    #[test]
    fn exact_agrees_with_itself() {
        let d = bundled_dataset();
        let cfg = AdderConfig::exact(32).unwrap();
        let r = kmeans(&d, 3, &cfg, DEFAULT_MAX_ITER, 7).unwrap();
        assert_eq!(r.agreement, 1.0);
        assert_eq!(r.centroid_distance, 0.0);
        assert!(r.assignments.iter().all(|&a| a < 3));
        assert_eq!(r.assignments.len(), 150);
    }

    #[test]
    fn rejects_bad_requests() {
        let d = Dataset::new(vec![vec![1, 2], vec![3, 4]]).unwrap();
        let cfg = AdderConfig::cesa(32, 8).unwrap();
        assert!(matches!(
            kmeans(&d, 3, &cfg, 10, 0),
            Err(AppError::TooManyClusters { clusters: 3, points: 2 })
        ));
        assert!(kmeans(&d, 0, &cfg, 10, 0).is_err());
        let narrow = AdderConfig::cesa(8, 4).unwrap();
        let big = Dataset::new(vec![vec![5000, 5000], vec![1, 1]]).unwrap();
        assert!(matches!(
            kmeans(&big, 2, &narrow, 10, 0),
            Err(AppError::AccumulatorOverflow { .. })
        ));
    }

    #[test]
    fn matching_recovers_permutation() {
        let a = vec![0, 0, 1, 1, 2, 2];
        let b = vec![2, 2, 0, 0, 1, 1];
        assert_eq!(best_label_matching(&a, &b, 3), vec![2, 0, 1]);
        let many_a: Vec<usize> = (0..20).collect();
        let many_b: Vec<usize> = (0..20).map(|i| (i + 1) % 20).collect();
        let map = best_label_matching(&many_a, &many_b, 20);
        assert!(many_a.iter().zip(&many_b).all(|(&x, &y)| map[x] == y));
    }

    #[test]
    fn well_separated_clusters_are_exact_for_every_variant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let centers = [[5_000u64, 5_000], [30_000, 5_000], [17_500, 30_000]];
        let mut pts = Vec::new();
        for c in centers {
            for _ in 0..40 {
                pts.push(c.iter().map(|&v| v - 500 + rng.random_range(0..1000)).collect());
            }
        }
        let d = Dataset::new(pts).unwrap();
        for v in ["32:16:cesa", "32:16:cesa-perl", "32:16:exact"] {
            let cfg: AdderConfig = v.parse().unwrap();
            let r = kmeans(&d, 3, &cfg, DEFAULT_MAX_ITER, 1).unwrap();
            assert_eq!(r.agreement, 1.0, "{v}");
        }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let d = bundled_dataset();
        let cfg = AdderConfig::cesa(32, 4).unwrap();
        assert_eq!(
            kmeans_with(&d, 3, &cfg, 50, 9, Exec::Sequential).unwrap(),
            kmeans_with(&d, 3, &cfg, 50, 9, Exec::Parallel).unwrap()
        );
    }
}
