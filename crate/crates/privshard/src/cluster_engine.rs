//! K-means partitioning of document vectors and cluster-restricted ranked
//! search.
//!
//! Fitting uses Lloyd's iteration with k-means++ seeding from an explicit
//! seed, so a model is a deterministic function of (vectors, k, max_iter,
//! seed). Distances are Euclidean during fitting; ranking within the
//! selected cluster is by cosine similarity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::vector_index::{cosine_similarity, TfIdfVector};

/// A fitted partition: k centroids in vocabulary space plus the assignment
/// of every document to its nearest centroid.
#[derive(Debug, Clone)]
pub struct ClusterModel {
    k: usize,
    dim: usize,
    centroids: Vec<Vec<f64>>,
    assignments: Vec<u32>,
    members: Vec<Vec<u32>>,
    iterations_run: usize,
    final_sse: f64,
    sse_history: Vec<f64>,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn assignments(&self) -> &[u32] {
        &self.assignments
    }

    pub fn assignment(&self, doc: usize) -> u32 {
        self.assignments[doc]
    }

    /// Documents assigned to a cluster, ascending.
    pub fn members(&self, cluster: u32) -> &[u32] {
        &self.members[cluster as usize]
    }

    pub fn iterations_run(&self) -> usize {
        self.iterations_run
    }

    /// Sum of squared distances from each point to its assigned centroid at
    /// convergence.
    pub fn final_sse(&self) -> f64 {
        self.final_sse
    }

    /// SSE recorded after each assignment step; non-increasing under
    /// Lloyd's. Not persisted.
    pub fn sse_history(&self) -> &[f64] {
        &self.sse_history
    }

    /// Rebuilds a model from persisted centroids and assignments.
    /// `iterations_run`, `final_sse`, and the SSE history are not persisted.
    pub fn from_parts(centroids: Vec<Vec<f64>>, assignments: Vec<u32>) -> ClusterModel {
        let k = centroids.len();
        let dim = centroids.first().map_or(0, Vec::len);
        let members = collect_members(k, &assignments);
        ClusterModel {
            k,
            dim,
            centroids,
            assignments,
            members,
            iterations_run: 0,
            final_sse: 0.0,
            sse_history: Vec::new(),
        }
    }
}

fn collect_members(k: usize, assignments: &[u32]) -> Vec<Vec<u32>> {
    let mut members = vec![Vec::new(); k];
    for (doc, &cluster) in assignments.iter().enumerate() {
        members[cluster as usize].push(doc as u32);
    }
    members
}

fn squared_norm(c: &[f64]) -> f64 {
    c.iter().map(|x| x * x).sum()
}

/// Squared Euclidean distance between a sparse vector and a dense centroid,
/// using `‖v‖² − 2·v·c + ‖c‖²` with the centroid norm precomputed.
fn distance_sq(v: &TfIdfVector, centroid: &[f64], centroid_sq: f64) -> f64 {
    let mut cross = 0.0;
    for &(id, w) in v.entries() {
        cross += w * centroid[id as usize];
    }
    (v.norm() * v.norm() - 2.0 * cross + centroid_sq).max(0.0)
}

/// Nearest centroid id for a vector; ties break to the lowest id.
fn nearest_centroid(v: &TfIdfVector, centroids: &[Vec<f64>], norms: &[f64]) -> (u32, f64) {
    let mut best = 0u32;
    let mut best_d = f64::INFINITY;
    for (id, (c, &sq)) in centroids.iter().zip(norms.iter()).enumerate() {
        let d = distance_sq(v, c, sq);
        if d < best_d {
            best_d = d;
            best = id as u32;
        }
    }
    (best, best_d)
}

fn densify(v: &TfIdfVector, dim: usize) -> Vec<f64> {
    let mut dense = vec![0.0; dim];
    for &(id, w) in v.entries() {
        dense[id as usize] = w;
    }
    dense
}

/// Fits k clusters over the given vectors with k-means++ seeding and Lloyd's
/// iteration. Stops when assignments are stable or after `max_iter` rounds.
///
/// `dim` is the vocabulary size the vectors live in. An emptied cluster is
/// reseeded with the point farthest from its assigned centroid, keeping the
/// fit deterministic for a given seed.
pub fn kmeans_fit(
    vectors: &[TfIdfVector],
    dim: usize,
    k: usize,
    max_iter: usize,
    seed: u64,
) -> Result<ClusterModel> {
    if k < 1 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k > vectors.len() {
        return Err(Error::InvalidArgument(format!(
            "k ({k}) exceeds the number of vectors ({})",
            vectors.len()
        )));
    }
    if max_iter < 1 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(vectors, dim, k, &mut rng);
    let mut assignments: Vec<u32> = vec![0; vectors.len()];
    let mut sse_history = Vec::new();
    let mut iterations = 0usize;

    for _ in 0..max_iter {
        iterations += 1;
        let norms: Vec<f64> = centroids.iter().map(|c| squared_norm(c)).collect();

        let mut changed = false;
        let mut sse = 0.0;
        for (i, v) in vectors.iter().enumerate() {
            let (best, d) = nearest_centroid(v, &centroids, &norms);
            sse += d;
            if assignments[i] != best {
                assignments[i] = best;
                changed = true;
            }
        }

        repair_empty_clusters(vectors, &centroids, &norms, &mut assignments, k);

        if let Some(&prev) = sse_history.last() {
            debug_assert!(
                sse <= prev * (1.0 + 1e-9) + 1e-12,
                "SSE increased: {prev} -> {sse}"
            );
        }
        sse_history.push(sse);

        if !changed && iterations > 1 {
            break;
        }

        // Update step: each centroid becomes the mean of its members.
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, v) in vectors.iter().enumerate() {
            let c = assignments[i] as usize;
            counts[c] += 1;
            for &(id, w) in v.entries() {
                sums[c][id as usize] += w;
            }
        }
        for (c, sum) in sums.iter_mut().enumerate() {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for x in sum.iter_mut() {
                    *x *= inv;
                }
            } else {
                sum.copy_from_slice(&centroids[c]);
            }
        }
        centroids = sums;
    }

    let final_sse = *sse_history.last().expect("at least one iteration ran");
    let members = collect_members(k, &assignments);
    Ok(ClusterModel {
        k,
        dim,
        centroids,
        assignments,
        members,
        iterations_run: iterations,
        final_sse,
        sse_history,
    })
}

/// k-means++ seeding: the first centroid is uniform, each further one is
/// drawn with probability proportional to its squared distance from the
/// nearest already-chosen centroid.
fn plus_plus_init(
    vectors: &[TfIdfVector],
    dim: usize,
    k: usize,
    rng: &mut ChaCha20Rng,
) -> Vec<Vec<f64>> {
    let first = rng.gen_range(0..vectors.len());
    let mut centroids = vec![densify(&vectors[first], dim)];
    let mut nearest_d: Vec<f64> = {
        let sq = squared_norm(&centroids[0]);
        vectors
            .iter()
            .map(|v| distance_sq(v, &centroids[0], sq))
            .collect()
    };

    while centroids.len() < k {
        let total: f64 = nearest_d.iter().sum();
        let choice = if total <= 0.0 {
            // Every point coincides with a centroid; fall back to uniform.
            rng.gen_range(0..vectors.len())
        } else {
            let mut r = rng.gen::<f64>() * total;
            let mut picked = vectors.len() - 1;
            for (i, &d) in nearest_d.iter().enumerate() {
                r -= d;
                if r <= 0.0 {
                    picked = i;
                    break;
                }
            }
            picked
        };
        let dense = densify(&vectors[choice], dim);
        let sq = squared_norm(&dense);
        for (i, v) in vectors.iter().enumerate() {
            let d = distance_sq(v, &dense, sq);
            if d < nearest_d[i] {
                nearest_d[i] = d;
            }
        }
        centroids.push(dense);
    }
    centroids
}

/// Reassigns the point farthest from its own centroid to each emptied
/// cluster, lowest cluster id first. Ties break to the lowest point index.
fn repair_empty_clusters(
    vectors: &[TfIdfVector],
    centroids: &[Vec<f64>],
    norms: &[f64],
    assignments: &mut [u32],
    k: usize,
) {
    let mut counts = vec![0usize; k];
    for &a in assignments.iter() {
        counts[a as usize] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut far_i = None;
        let mut far_d = -1.0;
        for (i, v) in vectors.iter().enumerate() {
            let c = assignments[i] as usize;
            if counts[c] <= 1 {
                continue;
            }
            let d = distance_sq(v, &centroids[c], norms[c]);
            if d > far_d {
                far_d = d;
                far_i = Some(i);
            }
        }
        if let Some(i) = far_i {
            counts[assignments[i] as usize] -= 1;
            assignments[i] = empty as u32;
            counts[empty] = 1;
        }
    }
}

/// Cluster id whose centroid is nearest (Euclidean) to the query; ties break
/// to the lowest id. A zero query lands on the smallest-norm centroid.
pub fn assign_cluster(q: &TfIdfVector, model: &ClusterModel) -> u32 {
    let norms: Vec<f64> = model.centroids.iter().map(|c| squared_norm(c)).collect();
    nearest_centroid(q, &model.centroids, &norms).0
}

/// Ranked results restricted to the query's cluster, plus the number of
/// similarity evaluations performed (bounded by the candidate set size).
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub hits: Vec<(u32, f64)>,
    pub evaluated: usize,
}

/// Scores the documents of the query's nearest cluster by cosine similarity
/// and returns at most `top_n`, best first, ties by ascending doc id.
/// Zero-score candidates are omitted.
pub fn ranked_search(
    q: &TfIdfVector,
    model: &ClusterModel,
    vectors: &[TfIdfVector],
    top_n: usize,
) -> SearchOutcome {
    ranked_search_probe(q, model, vectors, top_n, 1)
}

/// As [`ranked_search`], but searches the `probe` nearest clusters (by
/// centroid distance) as a recall knob. `probe` is clamped to [1, k].
pub fn ranked_search_probe(
    q: &TfIdfVector,
    model: &ClusterModel,
    vectors: &[TfIdfVector],
    top_n: usize,
    probe: usize,
) -> SearchOutcome {
    let probe = probe.clamp(1, model.k);
    let norms: Vec<f64> = model.centroids.iter().map(|c| squared_norm(c)).collect();
    let mut order: Vec<(u32, f64)> = (0..model.k as u32)
        .map(|id| (id, distance_sq(q, &model.centroids[id as usize], norms[id as usize])))
        .collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

    let mut hits = Vec::new();
    let mut evaluated = 0usize;
    for &(cluster, _) in order.iter().take(probe) {
        for &doc in model.members(cluster) {
            evaluated += 1;
            let score = cosine_similarity(q, &vectors[doc as usize]);
            if score > 0.0 {
                hits.push((doc, score));
            }
        }
    }
    hits.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    hits.truncate(top_n);
    SearchOutcome { hits, evaluated }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_d(points: &[f64]) -> Vec<TfIdfVector> {
        points
            .iter()
            .map(|&x| TfIdfVector::from_entries(vec![(0, x)]))
            .collect()
    }

    /// Brute-force minimum-SSE bipartition of 1-D points.
    fn best_two_partition(points: &[f64]) -> (Vec<usize>, f64) {
        let n = points.len();
        let mut best_mask = 0usize;
        let mut best_sse = f64::INFINITY;
        for mask in 1..(1 << n) - 1 {
            let (mut sums, mut counts) = ([0.0f64; 2], [0usize; 2]);
            for (i, &p) in points.iter().enumerate() {
                let side = (mask >> i) & 1;
                sums[side] += p;
                counts[side] += 1;
            }
            if counts[0] == 0 || counts[1] == 0 {
                continue;
            }
            let means = [sums[0] / counts[0] as f64, sums[1] / counts[1] as f64];
            let sse: f64 = points
                .iter()
                .enumerate()
                .map(|(i, &p)| {
                    let m = means[(mask >> i) & 1];
                    (p - m) * (p - m)
                })
                .sum();
            if sse < best_sse {
                best_sse = sse;
                best_mask = mask;
            }
        }
        let sides = (0..n).map(|i| (best_mask >> i) & 1).collect();
        (sides, best_sse)
    }

    #[test]
    fn recovers_brute_force_partition_in_1d() {
        let points = [0.0, 0.1, 10.0, 10.1];
        let (oracle_sides, oracle_sse) = best_two_partition(&points);
        // Oracle confirms {0,1} vs {2,3}.
        assert_eq!(oracle_sides[0], oracle_sides[1]);
        assert_eq!(oracle_sides[2], oracle_sides[3]);
        assert_ne!(oracle_sides[0], oracle_sides[2]);
        assert!((oracle_sse - 0.01).abs() < 1e-12);

        let model = kmeans_fit(&one_d(&points), 1, 2, 50, 42).unwrap();
        let a = model.assignment(0);
        assert_eq!(model.assignment(1), a);
        let b = model.assignment(2);
        assert_eq!(model.assignment(3), b);
        assert_ne!(a, b);
        assert!((model.final_sse() - oracle_sse).abs() < 1e-12);

        let mut cents: Vec<f64> = model.centroids().iter().map(|c| c[0]).collect();
        cents.sort_by(f64::total_cmp);
        assert!((cents[0] - 0.05).abs() < 1e-12);
        assert!((cents[1] - 10.05).abs() < 1e-12);
    }

    #[test]
    fn k_one_yields_single_cluster_with_mean_centroid() {
        let vectors = one_d(&[1.0, 2.0, 3.0]);
        let model = kmeans_fit(&vectors, 1, 1, 50, 0).unwrap();
        assert!(model.assignments().iter().all(|&a| a == 0));
        assert!((model.centroids()[0][0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn k_equals_n_gives_zero_sse() {
        let vectors = one_d(&[1.0, 5.0, 9.0]);
        let model = kmeans_fit(&vectors, 1, 3, 50, 7).unwrap();
        assert!(model.final_sse() < 1e-12);
        let mut clusters: Vec<u32> = model.assignments().to_vec();
        clusters.sort_unstable();
        clusters.dedup();
        assert_eq!(clusters.len(), 3);
    }

    #[test]
    fn fit_is_deterministic() {
        let vectors = one_d(&[0.0, 0.3, 4.0, 4.4, 9.0, 9.9]);
        let a = kmeans_fit(&vectors, 1, 3, 50, 123).unwrap();
        let b = kmeans_fit(&vectors, 1, 3, 50, 123).unwrap();
        assert_eq!(a.assignments(), b.assignments());
        assert_eq!(a.centroids(), b.centroids());
        assert_eq!(a.iterations_run(), b.iterations_run());
    }

    #[test]
    fn invalid_arguments_rejected() {
        let vectors = one_d(&[1.0, 2.0]);
        assert!(kmeans_fit(&vectors, 1, 0, 10, 0).is_err());
        assert!(kmeans_fit(&vectors, 1, 3, 10, 0).is_err());
        assert!(kmeans_fit(&vectors, 1, 2, 0, 0).is_err());
    }

    #[test]
    fn sse_history_is_non_increasing() {
        let points: Vec<f64> = (0..40).map(|i| (i % 7) as f64 + (i as f64) * 0.01).collect();
        let model = kmeans_fit(&one_d(&points), 1, 4, 100, 5).unwrap();
        let history = model.sse_history();
        assert!(!history.is_empty());
        for w in history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-12, "history {history:?}");
        }
    }

    #[test]
    fn assign_cluster_exact_centroid() {
        let vectors = one_d(&[0.0, 0.1, 10.0, 10.1]);
        let model = kmeans_fit(&vectors, 1, 2, 50, 42).unwrap();
        for (c, centroid) in model.centroids().iter().enumerate() {
            let q = TfIdfVector::from_entries(vec![(0, centroid[0])]);
            assert_eq!(assign_cluster(&q, &model), c as u32);
        }
    }

    #[test]
    fn zero_query_goes_to_smallest_norm_centroid() {
        let model = ClusterModel::from_parts(vec![vec![3.0, 0.0], vec![1.0, 1.0]], vec![0, 1]);
        // ‖c0‖² = 9, ‖c1‖² = 2 → cluster 1.
        assert_eq!(assign_cluster(&TfIdfVector::zero(), &model), 1);
    }

    #[test]
    fn equidistant_query_breaks_tie_to_lower_id() {
        let model = ClusterModel::from_parts(vec![vec![1.0], vec![3.0]], vec![0, 1]);
        let q = TfIdfVector::from_entries(vec![(0, 2.0)]);
        assert_eq!(assign_cluster(&q, &model), 0);
    }

    #[test]
    fn ranked_search_scores_self_first() {
        let vectors = vec![
            TfIdfVector::from_entries(vec![(0, 1.0), (1, 0.2)]),
            TfIdfVector::from_entries(vec![(0, 0.1), (2, 1.0)]),
            TfIdfVector::from_entries(vec![(3, 1.0)]),
        ];
        let model = kmeans_fit(&vectors, 4, 1, 50, 1).unwrap();
        let out = ranked_search(&vectors[1].clone(), &model, &vectors, 3);
        assert_eq!(out.hits[0].0, 1);
        assert!((out.hits[0].1 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ranked_search_respects_candidate_bound() {
        let vectors = one_d(&[0.0, 0.1, 0.2, 10.0, 10.1]);
        let model = kmeans_fit(&vectors, 1, 2, 50, 9).unwrap();
        let q = TfIdfVector::from_entries(vec![(0, 10.05)]);
        let cluster = assign_cluster(&q, &model);
        let out = ranked_search(&q, &model, &vectors, 10);
        assert_eq!(out.evaluated, model.members(cluster).len());
        assert!(out.evaluated <= vectors.len());
    }

    #[test]
    fn ranked_search_orders_by_score_then_id() {
        let vectors = vec![
            TfIdfVector::from_entries(vec![(0, 1.0)]),
            TfIdfVector::from_entries(vec![(0, 2.0)]),
            TfIdfVector::from_entries(vec![(0, 1.0), (1, 1.0)]),
        ];
        let model = kmeans_fit(&vectors, 2, 1, 50, 3).unwrap();
        let q = TfIdfVector::from_entries(vec![(0, 1.0)]);
        let out = ranked_search(&q, &model, &vectors, 10);
        // Docs 0 and 1 are colinear with q (score 1); tie breaks by id.
        assert_eq!(out.hits[0].0, 0);
        assert_eq!(out.hits[1].0, 1);
        for w in out.hits.windows(2) {
            assert!(w[0].1 >= w[1].1);
        }
    }

    #[test]
    fn probe_all_clusters_covers_corpus() {
        let vectors = one_d(&[0.0, 0.1, 10.0, 10.1]);
        let model = kmeans_fit(&vectors, 1, 2, 50, 42).unwrap();
        let q = TfIdfVector::from_entries(vec![(0, 5.0)]);
        let out = ranked_search_probe(&q, &model, &vectors, 10, 2);
        assert_eq!(out.evaluated, vectors.len());
    }

    #[test]
    fn empty_cluster_repair_keeps_k_nonempty() {
        // Nine identical points and one outlier force empty clusters during
        // seeding; repair must leave every cluster populated.
        let mut points = vec![1.0; 9];
        points.push(50.0);
        let model = kmeans_fit(&one_d(&points), 1, 3, 50, 11).unwrap();
        for c in 0..3u32 {
            assert!(!model.members(c).is_empty(), "cluster {c} empty");
        }
    }
}
