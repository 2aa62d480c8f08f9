//! Update-period timeline.
//!
//! The horizon of `T` slots is cut into `I` periods of `T_i` slots each. The
//! decision is fixed inside a period. Every period emits one or more gradient
//! feedbacks at known slots; each feedback arrives after a delay, and any
//! feedback that arrives at or after the start of the next period is dropped.

use std::collections::BTreeMap;

use thiserror::Error;

/// Errors raised while building a [`PeriodSchedule`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("schedule needs at least one period")]
    Empty,
    #[error("period {period} has zero duration")]
    ZeroDuration { period: usize },
    #[error("period {period}: feedback offset {offset} lies outside a period of {duration} slots")]
    SlotOutsidePeriod {
        period: usize,
        offset: usize,
        duration: usize,
    },
    #[error("period {period}: feedback offsets must be strictly increasing")]
    UnorderedOffsets { period: usize },
    #[error("period {period} has no feedback before drops")]
    NoFeedback { period: usize },
    #[error("period {period}: negative delay {delay}")]
    NegativeDelay { period: usize, delay: i64 },
    #[error("delay list for period {period} has {got} entries, expected {expected}")]
    DelayCount { period: usize, got: usize, expected: usize },
    #[error("period index {index} out of range (schedule has {periods} periods)")]
    IndexOutOfRange { index: usize, periods: usize },
}

/// Where the feedbacks of each period are emitted, as offsets from the
/// period start.
#[derive(Debug, Clone, PartialEq)]
pub enum FeedbackPattern {
    /// One feedback at the first slot of every period.
    PeriodStart,
    /// A feedback at every slot.
    EverySlot,
    /// The same offsets in every period.
    Offsets(Vec<usize>),
    /// Offsets chosen by period duration; durations without an entry fall
    /// back to the period start.
    ByDuration(BTreeMap<usize, Vec<usize>>),
    /// One offset list per period.
    Explicit(Vec<Vec<usize>>),
}

/// Delay, in slots, between emission and arrival of each feedback.
#[derive(Debug, Clone, PartialEq)]
pub enum DelayModel {
    Zero,
    Constant(i64),
    /// One delay list per period, matching the feedback offsets.
    Explicit(Vec<Vec<i64>>),
}

/// One gradient feedback on the timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Feedback {
    pub period: usize,
    pub emitted_slot: usize,
    pub arrival_slot: usize,
}

impl Feedback {
    pub fn delay(&self) -> usize {
        self.arrival_slot - self.emitted_slot
    }
}

/// Immutable period timeline with feedback emission and arrival slots.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodSchedule {
    durations: Vec<usize>,
    starts: Vec<usize>,
    feedbacks: Vec<Vec<Feedback>>,
    horizon: usize,
}

impl PeriodSchedule {
    pub fn new(durations: &[usize], pattern: &FeedbackPattern, delays: &DelayModel) -> Result<Self, ScheduleError> {
        if durations.is_empty() {
            return Err(ScheduleError::Empty);
        }
        let mut starts = Vec::with_capacity(durations.len());
        let mut t = 0;
        for (period, &d) in durations.iter().enumerate() {
            if d == 0 {
                return Err(ScheduleError::ZeroDuration { period });
            }
            starts.push(t);
            t += d;
        }
        let horizon = t;

        let mut feedbacks = Vec::with_capacity(durations.len());
        for (period, &duration) in durations.iter().enumerate() {
            let offsets = offsets_for(pattern, period, duration);
            if offsets.is_empty() {
                return Err(ScheduleError::NoFeedback { period });
            }
            if offsets.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ScheduleError::UnorderedOffsets { period });
            }
            if let Some(&offset) = offsets.iter().find(|&&o| o >= duration) {
                return Err(ScheduleError::SlotOutsidePeriod {
                    period,
                    offset,
                    duration,
                });
            }
            let period_delays: Vec<i64> = match delays {
                DelayModel::Zero => vec![0; offsets.len()],
                DelayModel::Constant(d) => vec![*d; offsets.len()],
                DelayModel::Explicit(per_period) => {
                    let list = per_period.get(period).cloned().unwrap_or_default();
                    if list.len() != offsets.len() {
                        return Err(ScheduleError::DelayCount {
                            period,
                            got: list.len(),
                            expected: offsets.len(),
                        });
                    }
                    list
                }
            };
            let mut list = Vec::with_capacity(offsets.len());
            for (&offset, &delay) in offsets.iter().zip(&period_delays) {
                if delay < 0 {
                    return Err(ScheduleError::NegativeDelay { period, delay });
                }
                let emitted_slot = starts[period] + offset;
                list.push(Feedback {
                    period,
                    emitted_slot,
                    arrival_slot: emitted_slot + delay as usize,
                });
            }
            feedbacks.push(list);
        }

        let schedule = Self {
            durations: durations.to_vec(),
            starts,
            feedbacks,
            horizon,
        };
        for i in schedule.starved_periods() {
            log::warn!("period {i} has no deliverable feedback; the decision will be held");
        }
        Ok(schedule)
    }

    /// Repeats `pattern` until exactly `horizon` slots are covered; the last
    /// period is shortened when the pattern does not divide the horizon.
    pub fn repeat_durations(pattern: &[usize], horizon: usize) -> Vec<usize> {
        let mut out = Vec::new();
        if pattern.is_empty() || pattern.contains(&0) {
            return out;
        }
        let mut covered = 0;
        for &d in pattern.iter().cycle() {
            if covered >= horizon {
                break;
            }
            let d = d.min(horizon - covered);
            out.push(d);
            covered += d;
        }
        out
    }

    pub fn num_periods(&self) -> usize {
        self.durations.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn durations(&self) -> &[usize] {
        &self.durations
    }

    pub fn duration(&self, i: usize) -> usize {
        self.durations[i]
    }

    /// Duration of the period following `i`; the last period is paired with
    /// itself.
    pub fn next_duration(&self, i: usize) -> usize {
        *self.durations.get(i + 1).unwrap_or(&self.durations[i])
    }

    pub fn max_duration(&self) -> usize {
        self.durations.iter().copied().max().unwrap_or(0)
    }

    pub fn start(&self, i: usize) -> usize {
        self.starts[i]
    }

    /// Slots covered by period `i`.
    pub fn slots(&self, i: usize) -> std::ops::Range<usize> {
        self.starts[i]..self.starts[i] + self.durations[i]
    }

    /// All feedbacks emitted in period `i`, in emission order, including
    /// those that will be dropped.
    pub fn emitted(&self, i: usize) -> &[Feedback] {
        &self.feedbacks[i]
    }

    /// Feedbacks of period `i` that arrive before the next decision epoch,
    /// in arrival order (ties keep emission order).
    pub fn deliverable_feedbacks(&self, i: usize) -> Result<Vec<Feedback>, ScheduleError> {
        if i >= self.num_periods() {
            return Err(ScheduleError::IndexOutOfRange {
                index: i,
                periods: self.num_periods(),
            });
        }
        let next_epoch = self.starts[i] + self.durations[i];
        let mut out: Vec<Feedback> = self.feedbacks[i]
            .iter()
            .filter(|f| f.arrival_slot < next_epoch)
            .copied()
            .collect();
        out.sort_by_key(|f| f.arrival_slot);
        Ok(out)
    }

    /// Emission slots of the deliverable feedbacks of period `i`.
    pub fn delivered_slots(&self, i: usize) -> Vec<usize> {
        self.deliverable_feedbacks(i)
            .map(|fs| fs.iter().map(|f| f.emitted_slot).collect())
            .unwrap_or_default()
    }

    /// `S_i`, the number of surviving feedbacks of period `i`.
    pub fn delivered_count(&self, i: usize) -> usize {
        self.delivered_slots(i).len()
    }

    /// Periods whose feedbacks were all dropped.
    pub fn starved_periods(&self) -> Vec<usize> {
        (0..self.num_periods())
            .filter(|&i| self.delivered_count(i) == 0)
            .collect()
    }
}

fn offsets_for(pattern: &FeedbackPattern, period: usize, duration: usize) -> Vec<usize> {
    match pattern {
        FeedbackPattern::PeriodStart => vec![0],
        FeedbackPattern::EverySlot => (0..duration).collect(),
        FeedbackPattern::Offsets(o) => o.clone(),
        FeedbackPattern::ByDuration(map) => map.get(&duration).cloned().unwrap_or_else(|| vec![0]),
        FeedbackPattern::Explicit(per_period) => per_period.get(period).cloned().unwrap_or_default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alternating_8_4() -> FeedbackPattern {
        let mut map = BTreeMap::new();
        map.insert(8, vec![0, 4]);
        map.insert(4, vec![0]);
        FeedbackPattern::ByDuration(map)
    }

    #[test]
    fn per_slot_schedule() {
        let s = PeriodSchedule::new(&[1, 1, 1], &FeedbackPattern::PeriodStart, &DelayModel::Zero).unwrap();
        assert_eq!(s.horizon(), 3);
        assert_eq!(s.max_duration(), 1);
        assert!((0..3).all(|i| s.delivered_count(i) == 1));
    }

    #[test]
    fn alternating_durations_give_alternating_feedback_counts() {
        let s = PeriodSchedule::new(&[8, 4, 8, 4], &alternating_8_4(), &DelayModel::Zero).unwrap();
        let counts: Vec<_> = (0..4).map(|i| s.delivered_count(i)).collect();
        assert_eq!(counts, vec![2, 1, 2, 1]);
        assert_eq!(s.horizon(), 24);
    }

    #[test]
    fn late_feedback_is_dropped_but_schedule_builds() {
        let s = PeriodSchedule::new(&[2], &FeedbackPattern::Offsets(vec![1]), &DelayModel::Constant(2)).unwrap();
        assert_eq!(s.emitted(0)[0].arrival_slot, 3);
        assert_eq!(s.delivered_count(0), 0);
        assert_eq!(s.starved_periods(), vec![0]);
    }

    #[test]
    fn delays_within_period_deliver_everything() {
        let s = PeriodSchedule::new(&[8], &FeedbackPattern::Offsets(vec![0, 4]), &DelayModel::Constant(1)).unwrap();
        assert_eq!(s.delivered_slots(0), vec![0, 4]);
    }

    #[test]
    fn arrival_after_period_end_is_empty() {
        let s = PeriodSchedule::new(&[4], &FeedbackPattern::Offsets(vec![3]), &DelayModel::Constant(2)).unwrap();
        assert!(s.deliverable_feedbacks(0).unwrap().is_empty());
    }

    #[test]
    fn out_of_order_arrivals_are_sorted_by_arrival() {
        let s = PeriodSchedule::new(
            &[8],
            &FeedbackPattern::Offsets(vec![0, 4]),
            &DelayModel::Explicit(vec![vec![6, 1]]),
        )
        .unwrap();
        // offset 0 arrives at 6, offset 4 arrives at 5
        assert_eq!(s.delivered_slots(0), vec![4, 0]);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            PeriodSchedule::new(&[], &FeedbackPattern::PeriodStart, &DelayModel::Zero),
            Err(ScheduleError::Empty)
        );
        assert!(matches!(
            PeriodSchedule::new(&[4], &FeedbackPattern::Offsets(vec![4]), &DelayModel::Zero),
            Err(ScheduleError::SlotOutsidePeriod { offset: 4, .. })
        ));
        assert!(matches!(
            PeriodSchedule::new(&[4], &FeedbackPattern::PeriodStart, &DelayModel::Constant(-1)),
            Err(ScheduleError::NegativeDelay { delay: -1, .. })
        ));
        assert!(matches!(
            PeriodSchedule::new(&[3, 0], &FeedbackPattern::PeriodStart, &DelayModel::Zero),
            Err(ScheduleError::ZeroDuration { period: 1 })
        ));
        let s = PeriodSchedule::new(&[3], &FeedbackPattern::PeriodStart, &DelayModel::Zero).unwrap();
        assert!(matches!(
            s.deliverable_feedbacks(1),
            Err(ScheduleError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn repeat_durations_covers_horizon() {
        let d = PeriodSchedule::repeat_durations(&[8, 4], 400);
        assert_eq!(d.iter().sum::<usize>(), 400);
        assert_eq!(*d.last().unwrap(), 4);
        assert_eq!(PeriodSchedule::repeat_durations(&[16], 400).len(), 25);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn durations_sum_to_horizon(durations in prop::collection::vec(1usize..12, 1..40)) {
                let s = PeriodSchedule::new(&durations, &FeedbackPattern::PeriodStart, &DelayModel::Zero).unwrap();
                prop_assert_eq!(s.horizon(), durations.iter().sum::<usize>());
                prop_assert_eq!(s.max_duration(), *durations.iter().max().unwrap());
                for i in 0..s.num_periods() {
                    for f in s.emitted(i) {
                        prop_assert!(s.slots(i).contains(&f.emitted_slot));
                        prop_assert!(f.arrival_slot >= f.emitted_slot);
                    }
                }
            }

            #[test]
            fn longer_delay_never_adds_deliveries(
                duration in 1usize..10,
                delays in prop::collection::vec(0i64..12, 10),
                which in 0usize..10,
                bump in 1i64..5,
            ) {
                let offsets: Vec<usize> = (0..duration).collect();
                let base: Vec<i64> = delays[..duration].to_vec();
                let mut bumped = base.clone();
                let k = which % duration;
                bumped[k] += bump;
                let pattern = FeedbackPattern::Offsets(offsets);
                let a = PeriodSchedule::new(&[duration], &pattern, &DelayModel::Explicit(vec![base])).unwrap();
                let b = PeriodSchedule::new(&[duration], &pattern, &DelayModel::Explicit(vec![bumped])).unwrap();
                let sa: std::collections::BTreeSet<_> = a.delivered_slots(0).into_iter().collect();
                let sb: std::collections::BTreeSet<_> = b.delivered_slots(0).into_iter().collect();
                prop_assert!(sb.is_subset(&sa));
            }
        }
    }
}
