use super::collect::Trajectory;
use super::dataset::Quadruple;

/// Hindsight relabeling: every ordered pair `(t, g)` with
/// `t < g ≤ t + t_max` becomes `(o_t, o_g, a_t, g − t)`. The terminal
/// observation takes part like any other future observation.
pub fn relabel(traj: &Trajectory, t_max: usize) -> Vec<Quadruple> {
    assert!(t_max >= 1, "relabel window must be at least one step");
    let n = traj.steps.len();
    let mut out = Vec::new();
    for (t, step) in traj.steps.iter().enumerate() {
        for g in t + 1..=(t + t_max).min(n) {
            out.push(Quadruple {
                o: step.o.clone(),
                g: traj.observation(g).clone(),
                a: step.a,
                d: (g - t) as u32,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::TrajectoryStep;
    use crate::sim::{Action, Observation};
    use proptest::prelude::*;

    /// Observation `i` carries its own index so pairs can be recovered.
    fn indexed(len: usize) -> Trajectory {
        let obs = |i: usize| Observation::new(vec![i as f64 / 1000.0; 8]);
        Trajectory {
            steps: (0..len - 1)
                .map(|i| TrajectoryStep {
                    o: obs(i),
                    a: Action::new(0.5, i as f64 / 1000.0),
                })
                .collect(),
            terminal: obs(len - 1),
            collided: false,
        }
    }

    fn index_of(o: &Observation) -> usize {
        (o.rays()[0] * 1000.0).round() as usize
    }

    #[test]
    fn three_observations() {
        let q = relabel(&indexed(3), 50);
        let mut d: Vec<u32> = q.iter().map(|q| q.d).collect();
        d.sort();
        assert_eq!(d, vec![1, 1, 2]);
    }

    #[test]
    fn unit_window() {
        let q = relabel(&indexed(10), 1);
        assert_eq!(q.len(), 9);
        assert!(q.iter().all(|q| q.d == 1));
    }

    #[test]
    fn full_window_counts() {
        // Closed form: L(L−1)/2 pairs, and gap k occurs L−k times.
        let len = 17;
        let q = relabel(&indexed(len), 100);
        assert_eq!(q.len(), len * (len - 1) / 2);
        for k in 1..len {
            let count = q.iter().filter(|q| q.d as usize == k).count();
            assert_eq!(count, len - k);
        }
    }

    proptest! {
        #[test]
        fn gaps_match_indices(len in 2usize..60, t_max in 1usize..40) {
            let traj = indexed(len);
            let quads = relabel(&traj, t_max);
            let expected: usize = (0..len - 1).map(|t| t_max.min(len - 1 - t)).sum();
            prop_assert_eq!(quads.len(), expected);
            for q in &quads {
                let (t, g) = (index_of(&q.o), index_of(&q.g));
                prop_assert_eq!(q.d as usize, g - t);
                prop_assert!(q.d >= 1 && q.d as usize <= t_max);
                prop_assert_eq!(q.a, traj.steps[t].a);
            }
        }
    }
}
