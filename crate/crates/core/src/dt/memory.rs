//! Fused observation memory feeding the twin's estimators.

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// What one LE-UAV reports after a slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    /// Global slot counter (monotone across episodes).
    pub slot: u64,
    pub reporter: usize,
    pub location: Vec2,
    /// `(gu index, measured gain in dB)`.
    pub gains_db: Vec<(usize, f64)>,
    /// EA position as observed (possibly noisy).
    pub ea_observed: Vec2,
}

impl ObservationRecord {
    pub fn validate(&self, area_side: f64) -> Result<()> {
        let inside = |p: Vec2| p.is_finite() && (0.0..=area_side).contains(&p.x) && (0.0..=area_side).contains(&p.y);
        if !inside(self.location) {
            return Err(Error::Config(format!("record location {:?} outside the area", self.location)));
        }
        if self.gains_db.iter().any(|(_, g)| !g.is_finite()) || !self.ea_observed.is_finite() {
            return Err(Error::NonFinite("observation record".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationMemory {
    /// Channel records, oldest first.
    pub records: VecDeque<ObservationRecord>,
    /// EA track `(slot, observed position)`, oldest first.
    pub ea_track: VecDeque<(u64, Vec2)>,
    pub window: usize,
    pub fusion_radius: f64,
    pub area_side: f64,
}

impl ObservationMemory {
    pub fn new(window: usize, fusion_radius: f64, area_side: f64) -> Self {
        ObservationMemory { records: VecDeque::new(), ea_track: VecDeque::new(), window, fusion_radius, area_side }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Replaces every stored record within the fusion radius of the new
    /// reporter location by the new record, then evicts the oldest records
    /// beyond the window. The EA observation is appended to the EA track
    /// unless that slot is already present.
    pub fn fuse(&mut self, record: ObservationRecord) -> Result<()> {
        record.validate(self.area_side)?;
        let r = self.fusion_radius;
        self.records.retain(|m| m.location.dist(record.location) > r);
        if self.ea_track.back().is_none_or(|&(s, _)| s < record.slot) {
            self.ea_track.push_back((record.slot, record.ea_observed));
        }
        self.records.push_back(record);
        while self.records.len() > self.window {
            self.records.pop_front();
        }
        while self.ea_track.len() > self.window {
            self.ea_track.pop_front();
        }
        Ok(())
    }

    /// Channel training pairs `([uav x, uav y, gu x, gu y], gain dB)`.
    pub fn channel_pairs(&self, gu_positions: &[Vec2]) -> Vec<([f64; 4], f64)> {
        let mut out = Vec::new();
        for m in &self.records {
            for &(q, g) in &m.gains_db {
                if let Some(k) = gu_positions.get(q) {
                    out.push(([m.location.x, m.location.y, k.x, k.y], g));
                }
            }
        }
        out
    }

    /// EA motion pairs `(position, displacement to the next slot)` from
    /// consecutive slots.
    pub fn motion_pairs(&self) -> Vec<(Vec2, Vec2)> {
        self.ea_track
            .iter()
            .zip(self.ea_track.iter().skip(1))
            .filter(|(a, b)| b.0 == a.0 + 1)
            .map(|(a, b)| (a.1, b.1 - a.1))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(slot: u64, x: f64, y: f64) -> ObservationRecord {
        ObservationRecord { slot, reporter: 0, location: Vec2::new(x, y), gains_db: vec![(0, -90.0)], ea_observed: Vec2::new(5.0, 5.0) }
    }

    #[test]
    fn far_record_is_appended() {
        let mut m = ObservationMemory::new(100, 25.0, 2000.0);
        m.fuse(rec(0, 100.0, 100.0)).unwrap();
        m.fuse(rec(1, 130.0, 100.0)).unwrap();
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn near_record_replaces() {
        let mut m = ObservationMemory::new(100, 25.0, 2000.0);
        m.fuse(rec(0, 100.0, 100.0)).unwrap();
        m.fuse(rec(1, 110.0, 100.0)).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.records[0].slot, 1);
    }

    #[test]
    fn two_near_records_collapse_into_one() {
        let mut m = ObservationMemory::new(100, 25.0, 2000.0);
        m.fuse(rec(0, 100.0, 100.0)).unwrap();
        m.fuse(rec(1, 100.0, 130.0)).unwrap();
        assert_eq!(m.len(), 2);
        m.fuse(rec(2, 100.0, 115.0)).unwrap();
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn re_reporting_is_idempotent_in_size() {
        let mut m = ObservationMemory::new(100, 25.0, 2000.0);
        m.fuse(rec(0, 100.0, 100.0)).unwrap();
        m.fuse(rec(0, 100.0, 100.0)).unwrap();
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn window_evicts_oldest() {
        let mut m = ObservationMemory::new(3, 1.0, 2000.0);
        for i in 0..5 {
            m.fuse(rec(i, 10.0 * i as f64, 0.0)).unwrap();
        }
        assert_eq!(m.len(), 3);
        assert_eq!(m.records[0].slot, 2);
    }

    #[test]
    fn outside_record_rejected() {
        let mut m = ObservationMemory::new(3, 1.0, 2000.0);
        assert!(m.fuse(rec(0, -1.0, 0.0)).is_err());
    }

    #[test]
    fn motion_pairs_need_consecutive_slots() {
        let mut m = ObservationMemory::new(10, 1.0, 2000.0);
        for (s, x) in [(0u64, 0.0), (1, 4.0), (3, 12.0), (4, 20.0)] {
            let mut r = rec(s, 100.0 + x, 100.0);
            r.ea_observed = Vec2::new(x, 0.0);
            m.fuse(r).unwrap();
        }
        let p = m.motion_pairs();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].1, Vec2::new(4.0, 0.0));
        assert_eq!(p[1].1, Vec2::new(8.0, 0.0));
    }
}
