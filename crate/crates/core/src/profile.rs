//! Discrete per-resource usage timeline shared by placement and execution.

use crate::instance::{Instance, Time};

#[derive(Debug, Clone)]
pub(crate) struct ResourceProfile {
    capacity: Vec<u32>,
    /// `usage[r][t]`; calendar windows are pre-filled at full capacity.
    usage: Vec<Vec<u32>>,
}

impl ResourceProfile {
    pub(crate) fn new(instance: &Instance) -> Self {
        let capacity: Vec<u32> = instance.resources.iter().map(|r| r.capacity).collect();
        let mut usage = vec![Vec::new(); capacity.len()];
        for w in &instance.unavailability {
            let line = &mut usage[w.resource];
            let end = w.end as usize;
            if line.len() < end {
                line.resize(end, 0);
            }
            for slot in &mut line[w.start as usize..end] {
                *slot = capacity[w.resource];
            }
        }
        Self { capacity, usage }
    }

    /// `None` if `demands` fit on `[start, start + duration)`; otherwise the
    /// latest conflicting time in that interval.
    pub(crate) fn conflict(&self, demands: &[u32], start: Time, duration: Time) -> Option<Time> {
        let mut latest: Option<Time> = None;
        for (r, &demand) in demands.iter().enumerate() {
            if demand == 0 {
                continue;
            }
            let line = &self.usage[r];
            let cap = self.capacity[r];
            let lo = start as usize;
            let hi = ((start + duration) as usize).min(line.len());
            for t in (lo..hi).rev() {
                if line[t] + demand > cap {
                    let t = t as Time;
                    if latest.is_none_or(|l| t > l) {
                        latest = Some(t);
                    }
                    break;
                }
            }
        }
        latest
    }

    /// Earliest start `>= from` where the demands fit for the whole duration.
    pub(crate) fn earliest_fit(&self, demands: &[u32], from: Time, duration: Time) -> Time {
        let mut t = from;
        while let Some(clash) = self.conflict(demands, t, duration) {
            t = clash + 1;
        }
        t
    }

    pub(crate) fn add(&mut self, demands: &[u32], start: Time, duration: Time) {
        let end = (start + duration) as usize;
        for (r, &demand) in demands.iter().enumerate() {
            if demand == 0 || duration == 0 {
                continue;
            }
            let line = &mut self.usage[r];
            if line.len() < end {
                line.resize(end, 0);
            }
            for slot in &mut line[start as usize..end] {
                *slot += demand;
            }
        }
    }

    pub(crate) fn remove(&mut self, demands: &[u32], start: Time, duration: Time) {
        let end = (start + duration) as usize;
        for (r, &demand) in demands.iter().enumerate() {
            if demand == 0 || duration == 0 {
                continue;
            }
            for slot in &mut self.usage[r][start as usize..end] {
                *slot -= demand;
            }
        }
    }
}
