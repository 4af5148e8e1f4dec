//! Euclidean minimum spanning tree lengths.
//!
//! Only tree lengths are exposed, not edges: the spanning-tree pre-rank of a
//! point is the MST length of the remaining points, and the minimum length is
//! unique even when several trees attain it. All minimum spanning trees share
//! the same multiset of edge weights, so lengths are accumulated in sorted
//! order to make the result independent of construction order.

use crate::case::PreRankVector;
use crate::error::{Error, Result};

/// Pairwise Euclidean distances among a set of points.
///
/// Stored as a full symmetric matrix so the tree-growing scan stays
/// branch-free; the diagonal is zero.
#[derive(Clone, Debug)]
pub struct DistanceCache {
    n: usize,
    dist: Vec<f64>,
}

impl DistanceCache {
    /// Compute all pairwise distances for `points`, each of equal dimension.
    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let n = points.len();
        if n < 2 {
            return Err(Error::TooFewPoints { min: 2, got: n });
        }
        let d = points[0].as_ref().len();
        for p in points {
            if p.as_ref().len() != d {
                return Err(Error::InvalidCase(
                    "points of unequal dimension in distance cache".into(),
                ));
            }
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            let pi = points[i].as_ref();
            for j in (i + 1)..n {
                let pj = points[j].as_ref();
                let mut sq = 0.0;
                for k in 0..d {
                    let diff = pi[k] - pj[k];
                    sq += diff * diff;
                }
                let w = sq.sqrt();
                dist[i * n + j] = w;
                dist[j * n + i] = w;
            }
        }
        Ok(Self { n, dist })
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Euclidean distance between points `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    /// Distances from point `i` to every point.
    fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }
}

/// Scratch buffers reused across the per-removal tree computations.
struct PrimScratch {
    pending: Vec<u32>,
    best: Vec<f64>,
    edges: Vec<f64>,
}

impl PrimScratch {
    fn new(n: usize) -> Self {
        Self {
            pending: Vec::with_capacity(n),
            best: Vec::with_capacity(n),
            edges: Vec::with_capacity(n),
        }
    }

    /// Total MST length over the cache's points, excluding `skip` if set.
    ///
    /// Dense tree growing over compact pending-node arrays. Edge weights are
    /// sorted before summation so equal point multisets produce bit-identical
    /// lengths regardless of the order the tree was grown in.
    fn tree_length(&mut self, cache: &DistanceCache, skip: Option<usize>) -> f64 {
        let start = match skip {
            Some(0) => 1,
            _ => 0,
        };
        let start_row = cache.row(start);
        self.pending.clear();
        self.best.clear();
        for (j, &dist) in start_row.iter().enumerate() {
            if j != start && Some(j) != skip {
                self.pending.push(j as u32);
                self.best.push(dist);
            }
        }
        self.edges.clear();
        let mut remaining = self.pending.len();
        while remaining > 0 {
            // Two-pass selection: a vectorizable minimum, then its position.
            let best = &self.best[..remaining];
            let mut nearest = f64::INFINITY;
            for &candidate in best {
                nearest = nearest.min(candidate);
            }
            let position = best
                .iter()
                .position(|&candidate| candidate == nearest)
                .expect("minimum is attained");
            self.edges.push(nearest);
            let new_node = self.pending[position] as usize;
            remaining -= 1;
            self.pending.swap(position, remaining);
            self.best.swap(position, remaining);
            let new_row = cache.row(new_node);
            for i in 0..remaining {
                let candidate = new_row[self.pending[i] as usize];
                self.best[i] = self.best[i].min(candidate);
            }
        }
        self.edges.sort_unstable_by(f64::total_cmp);
        self.edges.iter().sum()
    }
}

/// Total Euclidean MST length over at least two points.
pub fn mst_length<P: AsRef<[f64]>>(points: &[P]) -> Result<f64> {
    let cache = DistanceCache::from_points(points)?;
    Ok(PrimScratch::new(cache.len()).tree_length(&cache, None))
}

/// MST length of the point set with each point removed in turn.
///
/// Entry `i` is the tree length over the remaining `m − 1` points; distances
/// are computed once and shared across all removals. Requires `m ≥ 3` so
/// every reduced set still spans an edge.
pub fn mst_length_all_removals(cache: &DistanceCache) -> Result<PreRankVector> {
    let n = cache.len();
    if n < 3 {
        return Err(Error::TooFewPoints { min: 3, got: n });
    }
    let mut scratch = PrimScratch::new(n);
    let values = (0..n)
        .map(|skip| scratch.tree_length(cache, Some(skip)))
        .collect();
    PreRankVector::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_points(rng: &mut impl Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect()
    }

    /// Kruskal construction used as an independent cross-check.
    fn kruskal_length(cache: &DistanceCache) -> f64 {
        struct Forest(Vec<usize>);
        impl Forest {
            fn root(&mut self, mut x: usize) -> usize {
                while self.0[x] != x {
                    self.0[x] = self.0[self.0[x]];
                    x = self.0[x];
                }
                x
            }
        }
        let n = cache.len();
        let mut edges: Vec<(f64, usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| (cache.distance(i, j), i, j))
            .collect();
        edges.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut forest = Forest((0..n).collect());
        let mut total = 0.0;
        for (w, i, j) in edges {
            let (ri, rj) = (forest.root(i), forest.root(j));
            if ri != rj {
                forest.0[ri] = rj;
                total += w;
            }
        }
        total
    }

    /// Minimum length over every labeled spanning tree, via sequence decoding.
    fn exhaustive_min_tree_length(cache: &DistanceCache) -> f64 {
        let n = cache.len();
        assert!((2..=6).contains(&n));
        if n == 2 {
            return cache.distance(0, 1);
        }
        let seq_len = n - 2;
        let total_seqs = n.pow(seq_len as u32);
        let mut best = f64::INFINITY;
        for code in 0..total_seqs {
            let mut seq = vec![0usize; seq_len];
            let mut c = code;
            for s in seq.iter_mut() {
                *s = c % n;
                c /= n;
            }
            let mut degree = vec![1usize; n];
            for &s in &seq {
                degree[s] += 1;
            }
            let mut length = 0.0;
            for &s in &seq {
                let leaf = (0..n).find(|&j| degree[j] == 1).unwrap();
                length += cache.distance(leaf, s);
                degree[leaf] = 0;
                degree[s] -= 1;
            }
            let mut last = (0..n).filter(|&j| degree[j] == 1);
            let (a, b) = (last.next().unwrap(), last.next().unwrap());
            length += cache.distance(a, b);
            best = best.min(length);
        }
        best
    }

    #[test]
    fn collinear_chain() {
        let points = vec![vec![0.0], vec![1.0], vec![10.0]];
        assert_relative_eq!(mst_length(&points).unwrap(), 10.0);
    }

    #[test]
    fn unit_square_uses_three_sides() {
        let points = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ];
        assert_relative_eq!(mst_length(&points).unwrap(), 3.0);
    }

    #[test]
    fn coincident_points_have_zero_length() {
        let points = vec![vec![2.0, 2.0], vec![2.0, 2.0]];
        assert_relative_eq!(mst_length(&points).unwrap(), 0.0);
    }

    #[test]
    fn too_few_points_rejected() {
        assert!(matches!(
            mst_length(&[vec![0.0]]),
            Err(Error::TooFewPoints { min: 2, got: 1 })
        ));
        let cache = DistanceCache::from_points(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(matches!(
            mst_length_all_removals(&cache),
            Err(Error::TooFewPoints { min: 3, got: 2 })
        ));
    }

    #[test]
    fn removals_match_expected_chain_values() {
        let cache =
            DistanceCache::from_points(&[vec![0.0], vec![1.0], vec![10.0]]).unwrap();
        let preranks = mst_length_all_removals(&cache).unwrap();
        assert_eq!(preranks.values(), &[9.0, 10.0, 1.0]);
    }

    #[test]
    fn removals_of_coincident_points_are_zero() {
        let cache =
            DistanceCache::from_points(&[vec![3.0], vec![3.0], vec![3.0]]).unwrap();
        let preranks = mst_length_all_removals(&cache).unwrap();
        assert_eq!(preranks.values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn removals_agree_with_from_scratch_trees() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let points = random_points(&mut rng, 6, 3);
            let cache = DistanceCache::from_points(&points).unwrap();
            let all = mst_length_all_removals(&cache).unwrap();
            for skip in 0..points.len() {
                let rest: Vec<Vec<f64>> = points
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .map(|(_, p)| p.clone())
                    .collect();
                assert_eq!(all.values()[skip], mst_length(&rest).unwrap());
            }
        }
    }

    #[test]
    fn two_greedy_constructions_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in [3usize, 5, 9, 16] {
            for _ in 0..10 {
                let points = random_points(&mut rng, n, 2);
                let cache = DistanceCache::from_points(&points).unwrap();
                let prim = PrimScratch::new(n).tree_length(&cache, None);
                // Equal multisets of edge weights summed in ascending order.
                assert_eq!(prim, kruskal_length(&cache));
            }
        }
    }

    #[test]
    fn matches_exhaustive_enumeration_for_small_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [3usize, 4, 5, 6] {
            for _ in 0..5 {
                let points = random_points(&mut rng, n, 2);
                let cache = DistanceCache::from_points(&points).unwrap();
                let prim = PrimScratch::new(n).tree_length(&cache, None);
                let brute = exhaustive_min_tree_length(&cache);
                assert_relative_eq!(prim, brute, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn isometries_preserve_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let points = random_points(&mut rng, 8, 2);
        let base = mst_length(&points).unwrap();
        let angle: f64 = 0.73;
        let (sin, cos) = angle.sin_cos();
        let moved: Vec<Vec<f64>> = points
            .iter()
            .map(|p| {
                vec![
                    cos * p[0] - sin * p[1] + 4.0,
                    sin * p[0] + cos * p[1] - 2.5,
                ]
            })
            .collect();
        let transformed = mst_length(&moved).unwrap();
        assert!((transformed - base).abs() < 1e-9 * (1.0 + base));
    }

    #[test]
    fn scaling_scales_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let points = random_points(&mut rng, 7, 3);
        let base = mst_length(&points).unwrap();
        let scale = 3.25;
        let scaled: Vec<Vec<f64>> = points
            .iter()
            .map(|p| p.iter().map(|v| v * scale).collect())
            .collect();
        assert_relative_eq!(
            mst_length(&scaled).unwrap(),
            scale * base,
            max_relative = 1e-12
        );
    }

    #[test]
    fn adding_a_point_cannot_shorten_past_largest_edge() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..25 {
            let mut points = random_points(&mut rng, 7, 2);
            let base_cache = DistanceCache::from_points(&points).unwrap();
            let mut scratch = PrimScratch::new(points.len());
            let base = scratch.tree_length(&base_cache, None);
            let largest_edge = *scratch
                .edges
                .last()
                .expect("tree over >= 2 points has edges");
            points.push(vec![rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)]);
            let grown = mst_length(&points).unwrap();
            assert!(
                base - grown <= largest_edge + 1e-12,
                "length dropped from {base} to {grown}, largest edge {largest_edge}"
            );
        }
    }
}
