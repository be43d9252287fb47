use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ScenarioError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iters: 300,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    /// Cluster index per input row, in input order.
    pub assignment: Vec<usize>,
    pub wcss: f64,
    /// Fraction of rows per cluster.
    pub weights: Vec<f64>,
    /// wcss after every Lloyd update of the winning restart.
    pub trace: Vec<f64>,
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

pub fn distinct_rows(points: &[Vec<f64>]) -> usize {
    let mut sorted: Vec<&Vec<f64>> = points.iter().collect();
    sorted.sort_by(|a, b| lex_cmp(a, b));
    sorted.dedup_by(|a, b| lex_cmp(a, b).is_eq());
    sorted.len()
}

pub fn wcss(points: &[Vec<f64>], centroids: &[Vec<f64>], assignment: &[usize]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &c)| sq_dist(p, &centroids[c]))
        .sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centre) in centroids.iter().enumerate() {
        let d = sq_dist(p, centre);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

fn means(
    points: &[Vec<f64>],
    assignment: &[usize],
    k: usize,
    dim: usize,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignment) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        if n > 0 {
            s.iter_mut().for_each(|v| *v /= n as f64);
        }
    }
    (sums, counts)
}

fn seed_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut idx = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    idx = i;
                    break;
                }
                target -= d;
            }
            // guard against landing on a zero-weight row through rounding
            if d2[idx] == 0.0 {
                idx = (0..n).rev().find(|&i| d2[i] > 0.0).expect("total > 0");
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        let c = points[pick].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

struct Run {
    centroids: Vec<Vec<f64>>,
    assignment: Vec<usize>,
    wcss: f64,
    trace: Vec<f64>,
}

fn lloyd(points: &[Vec<f64>], k: usize, max_iters: usize, rng: &mut ChaCha8Rng) -> Run {
    let dim = points[0].len();
    let mut centroids = seed_plus_plus(points, k, rng);
    let mut assignment: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
    let mut trace = Vec::new();
    for iter in 0..max_iters {
        let (mut next, mut counts) = means(points, &assignment, k, dim);
        // reseed empty clusters with the row farthest from its own centroid
        while let Some(empty) = counts.iter().position(|&n| n == 0) {
            let far = (0..points.len())
                .filter(|&i| counts[assignment[i]] > 1)
                .max_by(|&a, &b| {
                    sq_dist(&points[a], &next[assignment[a]])
                        .total_cmp(&sq_dist(&points[b], &next[assignment[b]]))
                        .then(b.cmp(&a))
                })
                .expect("distinct rows >= k leaves a cluster with two rows");
            assignment[far] = empty;
            (next, counts) = means(points, &assignment, k, dim);
        }
        centroids = next;
        trace.push(wcss(points, &centroids, &assignment));
        if iter + 1 == max_iters {
            break;
        }
        // a row only moves when another centroid is strictly closer
        let reassigned: Vec<usize> = points
            .iter()
            .zip(&assignment)
            .map(|(p, &cur)| {
                let c = nearest(p, &centroids);
                if sq_dist(p, &centroids[c]) < sq_dist(p, &centroids[cur]) {
                    c
                } else {
                    cur
                }
            })
            .collect();
        if reassigned == assignment {
            break;
        }
        assignment = reassigned;
    }
    let total = wcss(points, &centroids, &assignment);
    Run {
        centroids,
        assignment,
        wcss: total,
        trace,
    }
}

/// Best-of-restarts Lloyd clustering with k-means++ seeding.
///
/// Rows are put in lexicographic order before seeding so the result does not
/// depend on input order. Restart `r` uses seed `seed + r`.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    opts: &KMeansOptions,
) -> Result<Clustering, ScenarioError> {
    if k == 0 {
        return Err(ScenarioError::Input("k must be at least 1".into()));
    }
    if points.is_empty() {
        return Err(ScenarioError::Input("no rows to cluster".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(ScenarioError::Input("rows have different lengths".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(ScenarioError::Input(
            "rows contain non-finite values".into(),
        ));
    }
    let distinct = distinct_rows(points);
    if distinct < k {
        return Err(ScenarioError::TooFewDistinct { k, distinct });
    }

    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| lex_cmp(&points[a], &points[b]).then(a.cmp(&b)));
    let canonical: Vec<Vec<f64>> = order.iter().map(|&i| points[i].clone()).collect();

    let mut best: Option<Run> = None;
    for r in 0..opts.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(r as u64));
        let run = lloyd(&canonical, k, opts.max_iters.max(1), &mut rng);
        if best.as_ref().is_none_or(|b| run.wcss < b.wcss) {
            best = Some(run);
        }
    }
    let run = best.expect("at least one restart");

    let mut assignment = vec![0; points.len()];
    for (pos, &i) in order.iter().enumerate() {
        assignment[i] = run.assignment[pos];
    }
    let n = points.len() as f64;
    let mut counts = vec![0usize; k];
    for &c in &assignment {
        counts[c] += 1;
    }
    Ok(Clustering {
        k,
        centroids: run.centroids,
        assignment,
        wcss: run.wcss,
        weights: counts.iter().map(|&c| c as f64 / n).collect(),
        trace: run.trace,
    })
}

/// Elbow rule on a wcss profile indexed from k = 1.
///
/// Picks the k in 2..len-1 with the largest second difference; ties go to the
/// smaller k. A zero first entry means the data are degenerate and gives 1.
pub fn elbow_from_profile(profile: &[f64]) -> usize {
    if profile.first().is_none_or(|&w| w == 0.0) || profile.len() < 3 {
        return 1;
    }
    let mut best_k = 2;
    let mut best = f64::NEG_INFINITY;
    for k in 2..profile.len() {
        let d2 = profile[k - 2] - 2.0 * profile[k - 1] + profile[k];
        if d2 > best {
            best = d2;
            best_k = k;
        }
    }
    best_k
}

/// Wcss for k = 1..=k_max, stopping early (with a shorter profile) on degenerate data.
pub fn wcss_profile(
    points: &[Vec<f64>],
    k_max: usize,
    opts: &KMeansOptions,
) -> Result<Vec<f64>, ScenarioError> {
    let first = kmeans(points, 1, opts)?;
    if first.wcss == 0.0 {
        return Ok(vec![0.0]);
    }
    let mut profile = vec![first.wcss];
    for k in 2..=k_max {
        profile.push(kmeans(points, k, opts)?.wcss);
    }
    Ok(profile)
}

pub fn select_k_elbow(
    points: &[Vec<f64>],
    k_max: usize,
    opts: &KMeansOptions,
) -> Result<usize, ScenarioError> {
    if k_max < 3 {
        return Err(ScenarioError::Input(format!(
            "k_max must be at least 3, got {k_max}"
        )));
    }
    Ok(elbow_from_profile(&wcss_profile(points, k_max, opts)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn separated_pairs() {
        let c = kmeans(&col(&[0.0, 0.0, 10.0, 10.0]), 2, &KMeansOptions::default()).unwrap();
        let mut cs: Vec<f64> = c.centroids.iter().map(|v| v[0]).collect();
        cs.sort_by(f64::total_cmp);
        assert_eq!(cs, vec![0.0, 10.0]);
        assert_eq!(c.weights, vec![0.5, 0.5]);
        assert_eq!(c.wcss, 0.0);
    }

    #[test]
    fn single_cluster_is_mean() {
        let c = kmeans(&col(&[1.0, 2.0, 3.0]), 1, &KMeansOptions::default()).unwrap();
        assert_eq!(c.centroids, vec![vec![2.0]]);
        assert_eq!(c.wcss, 2.0);
        assert_eq!(c.weights, vec![1.0]);
    }

    #[test]
    fn too_few_distinct_rows() {
        let err = kmeans(&col(&[1.0, 1.0, 2.0]), 3, &KMeansOptions::default()).unwrap_err();
        assert!(matches!(
            err,
            ScenarioError::TooFewDistinct { k: 3, distinct: 2 }
        ));
    }

    #[test]
    fn elbow_profile_example() {
        assert_eq!(elbow_from_profile(&[100.0, 20.0, 18.0, 17.0, 16.5]), 2);
        assert_eq!(elbow_from_profile(&[0.0]), 1);
        // equal second differences at k = 2 and k = 3
        assert_eq!(elbow_from_profile(&[10.0, 5.0, 1.0, -2.0, -4.0]), 2);
    }

    #[test]
    fn identical_rows_select_one() {
        let pts = col(&[4.0; 12]);
        assert_eq!(
            select_k_elbow(&pts, 6, &KMeansOptions::default()).unwrap(),
            1
        );
    }

    #[test]
    fn empty_cluster_is_repaired() {
        // two restarts of a bad start still give non-empty clusters
        let pts = col(&[0.0, 0.0, 0.0, 0.0, 1.0, 100.0]);
        let c = kmeans(
            &pts,
            3,
            &KMeansOptions {
                restarts: 1,
                max_iters: 50,
                seed: 3,
            },
        )
        .unwrap();
        assert!(c.weights.iter().all(|&w| w > 0.0));
    }
}
