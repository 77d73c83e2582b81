//! Queue ordering policies and the window cut.
//!
//! The base policy orders the waiting queue; only the first `w` jobs (the
//! window) are eligible to start at a scheduling instance, which preserves
//! the base ordering to a degree while still letting the solver pack jobs.

use serde::{Deserialize, Serialize};

use crate::trace::Job;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueuePolicy {
    Fcfs,
    Wfp,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowConfig {
    /// Window size, at least 1. Default 20.
    pub size: usize,
    pub policy: QueuePolicy,
    /// Exponent of the WFP wait-ratio term. 3 is the conventional value.
    pub wfp_exponent: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self { size: 20, policy: QueuePolicy::Fcfs, wfp_exponent: 3.0 }
    }
}

/// The first `w` jobs of the policy-ordered queue, as of `time`.
#[derive(Debug, Clone)]
pub struct Window {
    pub jobs: Vec<Job>,
    pub time: f64,
}

impl Window {
    pub fn empty(time: f64) -> Self {
        Self { jobs: Vec::new(), time }
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }
}

/// Sort ascending by (submit_time, id).
pub fn order_fcfs(queue: &[Job]) -> Vec<Job> {
    let mut out = queue.to_vec();
    out.sort_by(|a, b| {
        a.submit_time
            .total_cmp(&b.submit_time)
            .then_with(|| a.id.cmp(&b.id))
    });
    out
}

/// WFP score: nodes requested, weighted by how long the job has waited
/// relative to its requested walltime.
fn wfp_score(job: &Job, now: f64, exponent: f64) -> f64 {
    let wait = (now - job.submit_time).max(0.0);
    job.demand[0] * (wait / job.requested_walltime).powf(exponent)
}

/// Sort descending by WFP score; ties fall back to FCFS order.
pub fn order_wfp(queue: &[Job], now: f64, exponent: f64) -> Vec<Job> {
    let mut out = queue.to_vec();
    out.sort_by(|a, b| {
        wfp_score(b, now, exponent)
            .total_cmp(&wfp_score(a, now, exponent))
            .then_with(|| a.submit_time.total_cmp(&b.submit_time))
            .then_with(|| a.id.cmp(&b.id))
    });
    out
}

/// Cut the window: the first `min(w, len)` entries of the ordered queue,
/// order preserved.
pub fn take_window(ordered: &[Job], cfg: &WindowConfig, time: f64) -> Window {
    let take = cfg.size.min(ordered.len());
    Window { jobs: ordered[..take].to_vec(), time }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn job(id: u64, submit: f64, walltime: f64, nodes: f64) -> Job {
        Job {
            id,
            submit_time: submit,
            requested_walltime: walltime,
            actual_runtime: walltime,
            demand: vec![nodes, 0.0],
        }
    }

    #[test]
    fn fcfs_empty() {
        assert!(order_fcfs(&[]).is_empty());
    }

    #[test]
    fn fcfs_sorts_by_submit() {
        let queue = vec![job(1, 5.0, 10.0, 1.0), job(2, 1.0, 10.0, 1.0), job(3, 3.0, 10.0, 1.0)];
        let submits: Vec<f64> = order_fcfs(&queue).iter().map(|j| j.submit_time).collect();
        assert_eq!(submits, vec![1.0, 3.0, 5.0]);
    }

    #[test]
    fn fcfs_breaks_ties_by_id() {
        let queue = vec![job(9, 4.0, 10.0, 1.0), job(2, 4.0, 10.0, 1.0)];
        let ids: Vec<u64> = order_fcfs(&queue).iter().map(|j| j.id).collect();
        assert_eq!(ids, vec![2, 9]);
    }

    #[test]
    fn wfp_single_job() {
        let queue = vec![job(1, 0.0, 100.0, 4.0)];
        assert_eq!(order_wfp(&queue, 50.0, 3.0)[0].id, 1);
    }

    #[test]
    fn wfp_prefers_larger_job_at_equal_wait_ratio() {
        // A: 1 node, B: 8 nodes, both waited their full walltime.
        // Scores 1 vs 8, so B goes first.
        let queue = vec![job(1, 0.0, 100.0, 1.0), job(2, 0.0, 100.0, 8.0)];
        let ids: Vec<u64> = order_wfp(&queue, 100.0, 3.0).iter().map(|j| j.id).collect();
        assert_eq!(ids, vec![2, 1]);
    }

    #[test]
    fn wfp_equal_scores_fall_back_to_fcfs() {
        // Identical submits, walltimes and sizes give identical scores.
        let queue = vec![job(5, 1.0, 100.0, 4.0), job(3, 1.0, 100.0, 4.0)];
        let ids: Vec<u64> = order_wfp(&queue, 51.0, 3.0).iter().map(|j| j.id).collect();
        assert_eq!(ids, vec![3, 5]);
    }

    #[test]
    fn window_is_prefix() {
        let queue: Vec<Job> = (1..=10).map(|i| job(i, i as f64, 10.0, 1.0)).collect();
        let cfg = WindowConfig { size: 4, ..WindowConfig::default() };
        let w = take_window(&order_fcfs(&queue), &cfg, 11.0);
        let ids: Vec<u64> = w.jobs.iter().map(|j| j.id).collect();
        assert_eq!(ids, vec![1, 2, 3, 4]);
    }

    #[test]
    fn window_shorter_queue_takes_all() {
        let queue = vec![job(1, 0.0, 10.0, 1.0), job(2, 1.0, 10.0, 1.0)];
        let cfg = WindowConfig { size: 5, ..WindowConfig::default() };
        assert_eq!(take_window(&queue, &cfg, 2.0).len(), 2);
    }

    #[test]
    fn window_empty_queue() {
        let cfg = WindowConfig::default();
        assert!(take_window(&[], &cfg, 0.0).is_empty());
    }

    proptest! {
        #[test]
        fn orderings_are_permutations(ids in proptest::collection::vec(0u64..1000, 0..30)) {
            let mut seen = std::collections::HashSet::new();
            let queue: Vec<Job> = ids
                .iter()
                .filter(|id| seen.insert(**id))
                .map(|&id| job(id, (id % 7) as f64, 10.0 + (id % 5) as f64, 1.0 + (id % 3) as f64))
                .collect();
            let mut want: Vec<u64> = queue.iter().map(|j| j.id).collect();
            want.sort_unstable();

            let mut got_fcfs: Vec<u64> = order_fcfs(&queue).iter().map(|j| j.id).collect();
            got_fcfs.sort_unstable();
            prop_assert_eq!(&want, &got_fcfs);

            let mut got_wfp: Vec<u64> = order_wfp(&queue, 100.0, 3.0).iter().map(|j| j.id).collect();
            got_wfp.sort_unstable();
            prop_assert_eq!(&want, &got_wfp);
        }
    }
}
