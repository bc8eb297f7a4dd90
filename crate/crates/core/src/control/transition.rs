//! Time schedule for the channel leakage `eps`, used to move a forming
//! controller between follower behaviour (eps = 0) and droop behaviour
//! (eps large) while running.

use serde::{Deserialize, Serialize};

use super::ControlError;

/// How one scheduled move reaches its target.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SegmentShape {
    /// Constant slew at `rate` (1/s^2 units of eps per second).
    Ramp { rate: f64 },
    /// Cubic smoothstep over `duration` seconds: continuous derivative at
    /// both ends.
    Smoothstep { duration: f64 },
    /// Instantaneous change at the start time.
    Jump,
}

/// One scheduled move of the leakage.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TransitionSegment {
    pub start: f64,
    pub target: f64,
    pub shape: SegmentShape,
}

impl TransitionSegment {
    fn end(&self, from: f64) -> f64 {
        match self.shape {
            SegmentShape::Ramp { rate } => self.start + (self.target - from).abs() / rate,
            SegmentShape::Smoothstep { duration } => self.start + duration,
            SegmentShape::Jump => self.start,
        }
    }

    fn value_at(&self, from: f64, t: f64) -> f64 {
        match self.shape {
            SegmentShape::Ramp { rate } => {
                let step = rate * (t - self.start);
                if self.target >= from {
                    (from + step).min(self.target)
                } else {
                    (from - step).max(self.target)
                }
            }
            SegmentShape::Smoothstep { duration } => {
                let s = ((t - self.start) / duration).clamp(0.0, 1.0);
                from + (self.target - from) * s * s * (3.0 - 2.0 * s)
            }
            SegmentShape::Jump => self.target,
        }
    }
}

/// Piecewise schedule: an initial value followed by ordered, gap-separated
/// moves. Values are right-continuous at jump instants.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct TransitionSchedule {
    pub initial: f64,
    #[serde(default)]
    pub segments: Vec<TransitionSegment>,
}

impl TransitionSchedule {
    pub fn constant(eps: f64) -> TransitionSchedule {
        TransitionSchedule {
            initial: eps,
            segments: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        if !(self.initial >= 0.0) || !self.initial.is_finite() {
            return Err(ControlError::InvalidSchedule(format!(
                "initial leakage must be finite and non-negative, got {}",
                self.initial
            )));
        }
        let mut from = self.initial;
        let mut prev_end = f64::NEG_INFINITY;
        for (k, seg) in self.segments.iter().enumerate() {
            if !(seg.target >= 0.0) || !seg.target.is_finite() || !seg.start.is_finite() {
                return Err(ControlError::InvalidSchedule(format!(
                    "segment {k} has invalid start or target"
                )));
            }
            match seg.shape {
                SegmentShape::Ramp { rate } if !(rate > 0.0) || !rate.is_finite() => {
                    return Err(ControlError::InvalidSchedule(format!(
                        "segment {k} ramp rate must be positive, got {rate}"
                    )));
                }
                SegmentShape::Smoothstep { duration } if !(duration > 0.0) || !duration.is_finite() => {
                    return Err(ControlError::InvalidSchedule(format!(
                        "segment {k} duration must be positive, got {duration}"
                    )));
                }
                _ => {}
            }
            if seg.start < prev_end {
                return Err(ControlError::InvalidSchedule(format!(
                    "segment {k} starts at {} before the previous move ends at {prev_end}",
                    seg.start
                )));
            }
            prev_end = seg.end(from);
            from = seg.target;
        }
        Ok(())
    }

    /// Leakage value at time `t`.
    pub fn epsilon_at(&self, t: f64) -> f64 {
        let mut from = self.initial;
        for seg in &self.segments {
            if t < seg.start {
                return from;
            }
            if t < seg.end(from) {
                return seg.value_at(from, t);
            }
            from = seg.target;
        }
        from
    }

    /// Largest leakage the schedule ever commands.
    pub fn max_epsilon(&self) -> f64 {
        self.segments
            .iter()
            .fold(self.initial, |m, s| m.max(s.target))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(start: f64, target: f64, rate: f64) -> TransitionSegment {
        TransitionSegment {
            start,
            target,
            shape: SegmentShape::Ramp { rate },
        }
    }

    #[test]
    fn constant_schedule() {
        let s = TransitionSchedule::constant(200.0);
        s.validate().unwrap();
        assert_eq!(s.epsilon_at(-5.0), 200.0);
        assert_eq!(s.epsilon_at(100.0), 200.0);
    }

    #[test]
    fn single_ramp_profile() {
        let s = TransitionSchedule {
            initial: 0.0,
            segments: vec![ramp(2.0, 200.0, 100.0)],
        };
        s.validate().unwrap();
        assert_eq!(s.epsilon_at(1.9), 0.0);
        assert_eq!(s.epsilon_at(2.0), 0.0);
        assert!((s.epsilon_at(3.0) - 100.0).abs() < 1e-12);
        assert!((s.epsilon_at(4.0) - 200.0).abs() < 1e-12);
        assert_eq!(s.epsilon_at(10.0), 200.0);
    }

    #[test]
    fn up_then_down_ramps() {
        let s = TransitionSchedule {
            initial: 0.0,
            segments: vec![ramp(2.0, 200.0, 100.0), ramp(7.0, 0.0, 100.0)],
        };
        s.validate().unwrap();
        assert!((s.epsilon_at(5.0) - 200.0).abs() < 1e-12);
        assert!((s.epsilon_at(7.5) - 150.0).abs() < 1e-12);
        assert_eq!(s.epsilon_at(9.0), 0.0);
        assert_eq!(s.epsilon_at(12.0), 0.0);
        assert_eq!(s.max_epsilon(), 200.0);
    }

    #[test]
    fn jump_is_right_continuous() {
        let s = TransitionSchedule {
            initial: 50.0,
            segments: vec![TransitionSegment {
                start: 1.0,
                target: 0.0,
                shape: SegmentShape::Jump,
            }],
        };
        s.validate().unwrap();
        assert_eq!(s.epsilon_at(0.999_999), 50.0);
        assert_eq!(s.epsilon_at(1.0), 0.0);
    }

    #[test]
    fn smoothstep_hits_midpoint_and_has_flat_ends() {
        let s = TransitionSchedule {
            initial: 0.0,
            segments: vec![TransitionSegment {
                start: 1.0,
                target: 100.0,
                shape: SegmentShape::Smoothstep { duration: 2.0 },
            }],
        };
        s.validate().unwrap();
        assert!((s.epsilon_at(2.0) - 50.0).abs() < 1e-12);
        // Slope near the ends is far below the mean slope.
        let h = 1e-6;
        let slope_start = (s.epsilon_at(1.0 + h) - s.epsilon_at(1.0)) / h;
        let slope_mid = (s.epsilon_at(2.0 + h) - s.epsilon_at(2.0)) / h;
        assert!(slope_start < 0.01 * slope_mid);
    }

    #[test]
    fn overlapping_segments_rejected() {
        let s = TransitionSchedule {
            initial: 0.0,
            // First ramp ends at t = 4, second starts inside it.
            segments: vec![ramp(2.0, 200.0, 100.0), ramp(3.5, 0.0, 100.0)],
        };
        assert!(matches!(s.validate(), Err(ControlError::InvalidSchedule(_))));
    }

    #[test]
    fn negative_leakage_rejected() {
        let s = TransitionSchedule::constant(-1.0);
        assert!(s.validate().is_err());
        let s = TransitionSchedule {
            initial: 0.0,
            segments: vec![ramp(1.0, -5.0, 100.0)],
        };
        assert!(s.validate().is_err());
    }
}
