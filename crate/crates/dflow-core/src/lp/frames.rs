//! Variable-length frame construction for frame-based time-varying solves.
//!
//! The horizon is cut into mini-frames of `d_max` slots, grouped into cycles
//! of `N = ceil(1 + 2/eps)` mini-frames. Idling the minimum-reward mini-frame
//! of each cycle bounds the boundary losses while capping frame length at
//! `(2 + 4/eps) * d_max` slots.

use crate::error::LpError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FramePlan {
    /// N, mini-frames per cycle.
    pub mini_frames_per_cycle: usize,
    /// Global indices (over the two cycles) of the idled mini-frames.
    pub idle: [usize; 2],
    /// Maximal runs of non-idle mini-frames, as inclusive index ranges.
    pub frames: Vec<(usize, usize)>,
    /// Length of the longest frame, in slots.
    pub max_frame_slots: usize,
}

/// Marks the minimum-reward mini-frame of each cycle idle (ties break to the
/// lowest index) and returns the maximal runs between idles. `rewards` holds
/// the per-mini-frame rewards of exactly two cycles.
pub fn build_frames(rewards: &[f64], eps: f64, d_max: u32) -> Result<FramePlan, LpError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(LpError::InvalidEta(eps));
    }
    let n = (1.0 + 2.0 / eps).ceil() as usize;
    if rewards.len() != 2 * n {
        return Err(LpError::BadCycleShape {
            expected: n,
            got: rewards.len(),
        });
    }
    let argmin = |cycle: &[f64], offset: usize| -> usize {
        let mut best = 0usize;
        for (i, &r) in cycle.iter().enumerate() {
            if r < cycle[best] {
                best = i;
            }
        }
        offset + best
    };
    let idle = [argmin(&rewards[..n], 0), argmin(&rewards[n..], n)];
    let mut frames = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..2 * n {
        if idle.contains(&i) {
            if let Some(s) = start.take() {
                frames.push((s, i - 1));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        frames.push((s, 2 * n - 1));
    }
    let max_frame_slots = frames
        .iter()
        .map(|(s, e)| (e - s + 1) * d_max as usize)
        .max()
        .unwrap_or(0);
    debug_assert!(max_frame_slots as f64 <= (2.0 + 4.0 / eps) * f64::from(d_max) + 1e-9);
    Ok(FramePlan {
        mini_frames_per_cycle: n,
        idle,
        frames,
        max_frame_slots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_min_reward_mini_frames() {
        let rewards = [5.0, 1.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 1.0, 5.0];
        // N = 5 needs eps = 0.5
        let plan = build_frames(&rewards, 0.5, 3).unwrap();
        assert_eq!(plan.mini_frames_per_cycle, 5);
        assert_eq!(plan.idle, [1, 8]);
        assert!(plan.frames.contains(&(2, 7)));
        assert_eq!(plan.frames, vec![(0, 0), (2, 7), (9, 9)]);
        assert_eq!(plan.max_frame_slots, 6 * 3);
    }

    #[test]
    fn ties_idle_the_first_mini_frame() {
        let rewards = [2.0; 6];
        let plan = build_frames(&rewards, 1.0, 2).unwrap();
        assert_eq!(plan.mini_frames_per_cycle, 3);
        assert_eq!(plan.idle, [0, 3]);
        assert_eq!(plan.frames, vec![(1, 2), (4, 5)]);
    }

    #[test]
    fn cycle_length_formula() {
        assert_eq!(build_frames(&[0.0; 6], 1.0, 1).unwrap().mini_frames_per_cycle, 3);
        assert_eq!(build_frames(&[0.0; 10], 0.5, 1).unwrap().mini_frames_per_cycle, 5);
        // fractional 2/eps rounds the cycle up
        assert_eq!(build_frames(&[0.0; 8], 0.8, 1).unwrap().mini_frames_per_cycle, 4);
    }

    #[test]
    fn rejects_wrong_shape() {
        assert!(matches!(
            build_frames(&[0.0; 7], 1.0, 1),
            Err(LpError::BadCycleShape { expected: 3, got: 7 })
        ));
    }

    #[test]
    fn frame_length_respects_bound() {
        // worst case: idles at the far ends of each cycle
        let mut rewards = vec![5.0; 10];
        rewards[0] = 1.0;
        rewards[9] = 1.0;
        let plan = build_frames(&rewards, 0.5, 4).unwrap();
        assert_eq!(plan.frames, vec![(1, 8)]);
        let bound = (2.0 + 4.0 / 0.5) * 4.0;
        assert!(plan.max_frame_slots as f64 <= bound);
    }
}
