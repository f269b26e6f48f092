//! Non-dominated set extraction for two maximized objectives.

use alloc::vec::Vec;

/// Indices of the maximal non-dominated points: no other point is greater or
/// equal in both coordinates and strictly greater in at least one. Duplicate
/// points on the front are all retained. The result is in input order.
///
/// Runs in O(n log n) via a sorted sweep.
pub fn non_dominated_indices(points: &[(f64, f64)]) -> Vec<usize> {
    debug_assert!(points.iter().all(|p| p.0.is_finite() && p.1.is_finite()));
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[b]
            .0
            .partial_cmp(&points[a].0)
            .unwrap()
            .then(points[b].1.partial_cmp(&points[a].1).unwrap())
    });

    let mut front = Vec::new();
    let mut best_second = f64::NEG_INFINITY;
    let mut i = 0;
    while i < order.len() {
        // group of equal first coordinates, sorted by second descending
        let first = points[order[i]].0;
        let group_max = points[order[i]].1;
        let mut j = i;
        while j < order.len() && points[order[j]].0 == first {
            // only points tied at the group maximum can be non-dominated,
            // and only when a strictly greater first coordinate has not
            // already reached that second coordinate
            if points[order[j]].1 == group_max && group_max > best_second {
                front.push(order[j]);
            }
            j += 1;
        }
        best_second = best_second.max(group_max);
        i = j;
    }
    front.sort_unstable();
    front
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// O(n^2) dominance oracle.
    fn brute_force(points: &[(f64, f64)]) -> Vec<usize> {
        (0..points.len())
            .filter(|&i| {
                !points.iter().enumerate().any(|(j, q)| {
                    j != i
                        && q.0 >= points[i].0
                        && q.1 >= points[i].1
                        && (q.0 > points[i].0 || q.1 > points[i].1)
                })
            })
            .collect()
    }

    #[test]
    fn small_front_matches_brute_force() {
        let points = vec![(1.0, 1.0), (2.0, 0.0), (0.0, 2.0), (0.5, 0.5)];
        assert_eq!(non_dominated_indices(&points), vec![0, 1, 2]);
        assert_eq!(non_dominated_indices(&points), brute_force(&points));
    }

    #[test]
    fn single_point_is_its_own_front() {
        assert_eq!(non_dominated_indices(&[(3.0, -1.0)]), vec![0]);
    }

    #[test]
    fn duplicates_on_the_front_are_all_retained() {
        let points = vec![(1.0, 1.0), (1.0, 1.0), (0.0, 0.0)];
        assert_eq!(non_dominated_indices(&points), vec![0, 1]);
    }

    #[test]
    fn equal_first_coordinate_keeps_only_the_top_second() {
        let points = vec![(1.0, 2.0), (1.0, 1.0), (0.0, 3.0)];
        assert_eq!(non_dominated_indices(&points), vec![0, 2]);
    }

    #[test]
    fn random_instances_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for case in 0..50 {
            let n = rng.gen_range(1..=300);
            // coarse grid to force plenty of ties
            let points: Vec<(f64, f64)> = (0..n)
                .map(|_| {
                    (
                        (rng.gen_range(0..20) as f64) * 0.5,
                        (rng.gen_range(0..20) as f64) * 0.5,
                    )
                })
                .collect();
            assert_eq!(
                non_dominated_indices(&points),
                brute_force(&points),
                "case {case}"
            );
        }
    }
}
