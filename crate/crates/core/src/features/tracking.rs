//! Aligns cluster indices across inner-fold runs.
//!
//! Every run trains its own encoder, so latent spaces are not comparable
//! directly; what is comparable is co-membership of the instances both runs
//! clustered. The alignment permutation maximizes the co-assignment counts on
//! those shared instances (Hungarian on the negated contingency matrix).

use crate::cluster::hungarian;
use crate::dec::ClusterModel;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// One inner-fold run pinned to the reference indexing.
#[derive(Debug, Clone)]
pub struct TrackedRun<T> {
    pub run_index: usize,
    pub model: ClusterModel<T>,
    /// Global instance ids of the rows the model was fit on.
    pub instance_ids: Vec<usize>,
    /// `alignment[own_cluster] = reference_cluster`.
    pub alignment: Vec<usize>,
    pub trackable: bool,
}

impl<T: Scalar> TrackedRun<T> {
    /// The reference run itself: identity alignment.
    pub fn reference(run_index: usize, model: ClusterModel<T>, instance_ids: Vec<usize>) -> Self {
        let s = model.s();
        TrackedRun {
            run_index,
            model,
            instance_ids,
            alignment: (0..s).collect(),
            trackable: true,
        }
    }
}

/// Result of matching a run against the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment<T> {
    /// `perm[current_cluster] = reference_cluster`.
    pub perm: Vec<usize>,
    /// Whether the accuracy proxy clears [`trackability_threshold`].
    pub trackable: bool,
    /// Fraction of shared instances that agree after alignment.
    pub overlap: T,
}

/// Minimum clustering accuracy for reliable tracking: `r% + (100/s)%`,
/// as a fraction. 0.35 for `r = 10, s = 4`; 0.20 for `r = 10, s = 10`.
pub fn trackability_threshold<T: Scalar>(r: usize, s: usize) -> T {
    T::from_usize(r).expect("folds") / T::from_f64_lossy(100.0)
        + T::one() / T::from_usize(s).expect("clusters")
}

/// Matches `current`'s clusters to the reference run's clusters on the
/// instances both runs trained on.
///
/// `acc_proxy` feeds the trackability check: pass the labeled clustering
/// accuracy when labels exist; otherwise the modal overlap fraction with the
/// reference stands in. A run below the threshold still gets a permutation,
/// flagged untrackable.
pub fn track_clusters<T: Scalar>(
    reference: &TrackedRun<T>,
    current: &ClusterModel<T>,
    current_ids: &[usize],
    r: usize,
    acc_proxy: Option<T>,
) -> Result<Alignment<T>> {
    let s = reference.model.s();
    if current.s() != s {
        return Err(Error::Shape(format!(
            "runs cluster into {} and {} groups",
            s,
            current.s()
        )));
    }
    if current_ids.len() != current.hard.n() {
        return Err(Error::Shape("one instance id per clustered row".into()));
    }
    let max_id = reference
        .instance_ids
        .iter()
        .chain(current_ids.iter())
        .copied()
        .max()
        .unwrap_or(0);
    let mut ref_cluster: Vec<Option<usize>> = vec![None; max_id + 1];
    for (row, &gid) in reference.instance_ids.iter().enumerate() {
        ref_cluster[gid] = Some(reference.model.hard.cluster_of(row));
    }
    // contingency of shared instances: counts[current][reference]
    let mut counts = Matrix::<T>::zeros(s, s);
    let mut shared = 0usize;
    for (row, &gid) in current_ids.iter().enumerate() {
        if let Some(ref_c) = ref_cluster[gid] {
            let cur_c = current.hard.cluster_of(row);
            counts.set(cur_c, ref_c, counts.get(cur_c, ref_c) + T::one());
            shared += 1;
        }
    }
    if shared == 0 {
        return Err(Error::Empty("runs share no instances to track on".into()));
    }
    let perm = hungarian(&counts.map(|v| -v))?;
    let matched = perm
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (c, &r_)| acc + counts.get(c, r_));
    let overlap = matched / T::from_usize(shared).expect("shared count");
    let proxy = acc_proxy.unwrap_or(overlap);
    let trackable = proxy >= trackability_threshold(r, s);
    Ok(Alignment {
        perm,
        trackable,
        overlap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::HardClustering;
    use crate::dec::ClusterModel;
    use crate::nn::{Activation, Network};

    fn model_with(assignment: Vec<usize>, s: usize) -> ClusterModel<f64> {
        let hard = HardClustering::new(assignment, s).unwrap();
        ClusterModel {
            encoder: Network::zeros(&[2, 2], vec![Activation::Linear]).unwrap(),
            centroids: Matrix::zeros(s, 2),
            hard: hard.clone(),
            kmeans_init: hard,
            converged: true,
        }
    }

    #[test]
    fn identical_memberships_give_the_identity() {
        let ids: Vec<usize> = (0..9).collect();
        let reference = TrackedRun::reference(0, model_with(vec![0, 0, 0, 1, 1, 1, 2, 2, 2], 3), ids.clone());
        let current = model_with(vec![0, 0, 0, 1, 1, 1, 2, 2, 2], 3);
        let out = track_clusters(&reference, &current, &ids, 10, None).unwrap();
        assert_eq!(out.perm, vec![0, 1, 2]);
        assert!(out.trackable);
        assert_eq!(out.overlap, 1.0);
    }

    #[test]
    fn swapped_labels_give_the_transposition() {
        let ids: Vec<usize> = (0..6).collect();
        let reference = TrackedRun::reference(0, model_with(vec![0, 0, 0, 1, 1, 1], 2), ids.clone());
        let current = model_with(vec![1, 1, 1, 0, 0, 0], 2);
        let out = track_clusters(&reference, &current, &ids, 10, None).unwrap();
        assert_eq!(out.perm, vec![1, 0]);
        assert_eq!(out.overlap, 1.0);
    }

    #[test]
    fn partial_overlap_counts_only_shared_instances() {
        let reference = TrackedRun::reference(
            0,
            model_with(vec![0, 0, 1, 1], 2),
            vec![0, 1, 2, 3],
        );
        let current = model_with(vec![0, 1, 1], 2);
        // Shared instances are 2 and 3: reference puts both in cluster 1,
        // current splits them, so the best bijection matches exactly one.
        let out = track_clusters(&reference, &current, &[2, 3, 9], 10, None).unwrap();
        assert_eq!(out.overlap, 0.5);
    }

    #[test]
    fn matches_brute_force_overlap_on_random_memberships() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(123);
        let perms3: Vec<Vec<usize>> = vec![
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0],
        ];
        for _ in 0..30 {
            let n = 12;
            let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let b: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let ids: Vec<usize> = (0..n).collect();
            let reference = TrackedRun::reference(0, model_with(a.clone(), 3), ids.clone());
            let current = model_with(b.clone(), 3);
            let out = track_clusters(&reference, &current, &ids, 10, None).unwrap();
            let best: usize = perms3
                .iter()
                .map(|p| (0..n).filter(|&i| p[b[i]] == a[i]).count())
                .max()
                .unwrap();
            let got = (0..n).filter(|&i| out.perm[b[i]] == a[i]).count();
            assert_eq!(got, best, "a={a:?} b={b:?} perm={:?}", out.perm);
        }
    }

    #[test]
    fn threshold_values() {
        assert!((trackability_threshold::<f64>(10, 4) - 0.35).abs() < 1e-12);
        assert!((trackability_threshold::<f64>(10, 10) - 0.20).abs() < 1e-12);
    }

    #[test]
    fn low_accuracy_runs_are_flagged() {
        let ids: Vec<usize> = (0..6).collect();
        let reference = TrackedRun::reference(0, model_with(vec![0, 0, 0, 1, 1, 1], 2), ids.clone());
        let current = model_with(vec![0, 0, 0, 1, 1, 1], 2);
        let out = track_clusters(&reference, &current, &ids, 10, Some(0.3)).unwrap();
        assert!(!out.trackable, "proxy 0.3 < threshold 0.6 for s=2");
        let out = track_clusters(&reference, &current, &ids, 10, Some(0.8)).unwrap();
        assert!(out.trackable);
    }

    #[test]
    fn disjoint_runs_cannot_be_tracked() {
        let reference = TrackedRun::reference(0, model_with(vec![0, 1], 2), vec![0, 1]);
        let current = model_with(vec![0, 1], 2);
        assert!(track_clusters(&reference, &current, &[5, 6], 10, None).is_err());
    }
}
