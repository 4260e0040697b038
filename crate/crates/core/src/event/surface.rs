use super::{Event, Timestamp, VirtualEvent};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurfaceKind {
    /// Surface of active events: every sensed event.
    Sae,
    /// Surface of active corner events.
    Sace,
    /// Surface of active virtual events.
    Save,
}

/// Per-pixel latest timestamp.
///
/// Cells that never fired hold `None`, so an event at `t = 0` is
/// distinguishable from an empty cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeSurface {
    width: u32,
    height: u32,
    kind: SurfaceKind,
    cells: Vec<Option<Timestamp>>,
    occupied: usize,
}

impl TimeSurface {
    pub fn new(width: u32, height: u32, kind: SurfaceKind) -> Self {
        assert!(width > 0 && height > 0, "surface dimensions must be positive");
        Self {
            width,
            height,
            kind,
            cells: vec![None; width as usize * height as usize],
            occupied: 0,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    /// Number of cells that have fired at least once.
    pub fn occupied(&self) -> usize {
        self.occupied
    }

    pub fn contains(&self, u: i64, v: i64) -> bool {
        u >= 0 && v >= 0 && u < self.width as i64 && v < self.height as i64
    }

    #[inline]
    pub fn get(&self, u: u32, v: u32) -> Option<Timestamp> {
        if u >= self.width || v >= self.height {
            return None;
        }
        self.cells[(v * self.width + u) as usize]
    }

    /// Same as [`get`](Self::get) but accepts signed coordinates; anything
    /// off the sensor reads as empty.
    #[inline]
    pub fn get_signed(&self, u: i64, v: i64) -> Option<Timestamp> {
        if !self.contains(u, v) {
            return None;
        }
        self.cells[(v as usize) * self.width as usize + u as usize]
    }

    /// Stores `t` at `(u, v)`.
    ///
    /// Fails on off-sensor coordinates and on a timestamp older than the one
    /// already stored, leaving the surface untouched.
    pub fn update(&mut self, u: i64, v: i64, t: Timestamp) -> Result<()> {
        if !self.contains(u, v) {
            return Err(Error::OutOfBounds {
                u,
                v,
                width: self.width,
                height: self.height,
            });
        }
        let cell = &mut self.cells[(v as usize) * self.width as usize + u as usize];
        match *cell {
            Some(last) if t < last => return Err(Error::StreamOrder { t, last }),
            Some(_) => {}
            None => self.occupied += 1,
        }
        *cell = Some(t);
        Ok(())
    }

    pub fn apply(&mut self, event: &Event) -> Result<()> {
        self.update(event.u as i64, event.v as i64, event.t)
    }

    /// Stamps a virtual event at its nearest pixel.
    pub fn apply_virtual(&mut self, event: &VirtualEvent) -> Result<()> {
        self.update(event.x.round() as i64, event.y.round() as i64, event.t)
    }

    /// All cells whose latest timestamp lies within `horizon` of `now`, oldest
    /// first. Ties keep row-major order.
    pub fn snapshot_recent(&self, now: Timestamp, horizon: Timestamp) -> Vec<(u16, u16, Timestamp)> {
        assert!(horizon > 0, "snapshot horizon must be positive");
        let mut out: Vec<(u16, u16, Timestamp)> = self
            .iter_occupied()
            .filter(|&(_, _, t)| t.saturating_add(horizon) >= now)
            .collect();
        out.sort_by_key(|&(_, _, t)| t);
        out
    }

    /// Occupied cells in row-major order.
    pub fn iter_occupied(&self) -> impl Iterator<Item = (u16, u16, Timestamp)> + '_ {
        let w = self.width as usize;
        self.cells
            .iter()
            .enumerate()
            .filter_map(move |(i, c)| c.map(|t| ((i % w) as u16, (i / w) as u16, t)))
    }

    pub fn clear(&mut self) {
        self.cells.iter_mut().for_each(|c| *c = None);
        self.occupied = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{Polarity, VirtualKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn ev(u: u16, v: u16, t: Timestamp) -> Event {
        Event::new(u, v, t, Polarity::Positive)
    }

    #[test]
    fn first_write_occupies_one_cell() {
        let mut s = TimeSurface::new(240, 180, SurfaceKind::Sae);
        s.apply(&ev(10, 20, 500)).unwrap();
        assert_eq!(s.get(10, 20), Some(500));
        assert_eq!(s.occupied(), 1);
        assert_eq!(s.iter_occupied().count(), 1);
    }

    #[test]
    fn later_write_overwrites() {
        let mut s = TimeSurface::new(240, 180, SurfaceKind::Sae);
        s.apply(&ev(10, 20, 500)).unwrap();
        s.apply(&ev(10, 20, 900)).unwrap();
        assert_eq!(s.get(10, 20), Some(900));
        assert_eq!(s.occupied(), 1);
    }

    #[test]
    fn zero_timestamp_is_not_empty() {
        let mut s = TimeSurface::new(4, 4, SurfaceKind::Sae);
        assert_eq!(s.get(1, 1), None);
        s.apply(&ev(1, 1, 0)).unwrap();
        assert_eq!(s.get(1, 1), Some(0));
    }

    #[test]
    fn out_of_bounds_is_rejected() {
        let mut s = TimeSurface::new(240, 180, SurfaceKind::Sae);
        assert!(matches!(
            s.apply(&ev(240, 0, 1)),
            Err(Error::OutOfBounds { u: 240, .. })
        ));
        assert!(s.update(-1, 5, 1).is_err());
        let off = VirtualEvent::new(5.0, 180.2, 3, VirtualKind::RandomTarget);
        assert!(s.apply_virtual(&off).is_err());
        assert_eq!(s.occupied(), 0);
    }

    #[test]
    fn older_timestamp_is_rejected() {
        let mut s = TimeSurface::new(8, 8, SurfaceKind::Sace);
        s.update(3, 3, 100).unwrap();
        assert!(matches!(
            s.update(3, 3, 99),
            Err(Error::StreamOrder { t: 99, last: 100 })
        ));
        assert_eq!(s.get(3, 3), Some(100));
        // Equal timestamps are allowed.
        s.update(3, 3, 100).unwrap();
    }

    #[test]
    fn only_target_cell_changes() {
        let mut s = TimeSurface::new(16, 12, SurfaceKind::Sae);
        s.update(1, 1, 5).unwrap();
        s.update(7, 3, 6).unwrap();
        let before = s.clone();
        s.update(9, 9, 50).unwrap();
        for v in 0..12 {
            for u in 0..16 {
                if (u, v) != (9, 9) {
                    assert_eq!(s.get(u, v), before.get(u, v));
                }
            }
        }
    }

    #[test]
    fn occupancy_matches_distinct_pixel_oracle() {
        // 1000 events on a 9-pixel horizontal segment.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut s = TimeSurface::new(240, 180, SurfaceKind::Sae);
        let mut oracle = HashSet::new();
        let mut t = 0;
        for _ in 0..1000 {
            t += rng.random_range(0..3u64);
            let u = 100 + rng.random_range(0..9u16);
            let v = 50;
            s.apply(&ev(u, v, t)).unwrap();
            oracle.insert((u, v));
        }
        assert_eq!(s.occupied(), oracle.len());
        let seen: HashSet<_> = s.iter_occupied().map(|(u, v, _)| (u, v)).collect();
        assert_eq!(seen, oracle);
    }

    #[test]
    fn snapshot_windows_by_horizon() {
        let mut s = TimeSurface::new(32, 32, SurfaceKind::Sae);
        s.update(2, 3, 100).unwrap(); // A
        s.update(20, 9, 5000).unwrap(); // B
        assert_eq!(s.snapshot_recent(5000, 1000), vec![(20, 9, 5000)]);
        let all = s.snapshot_recent(5000, 1_000_000);
        assert_eq!(all, vec![(2, 3, 100), (20, 9, 5000)]);
        // Snapshot does not mutate.
        assert_eq!(s.occupied(), 2);
    }

    #[test]
    fn snapshot_sorted_oldest_first_with_row_major_ties() {
        let mut s = TimeSurface::new(8, 8, SurfaceKind::Sae);
        s.update(5, 5, 30).unwrap();
        s.update(1, 2, 10).unwrap();
        s.update(0, 2, 10).unwrap();
        s.update(7, 0, 20).unwrap();
        let snap = s.snapshot_recent(30, 100);
        assert_eq!(snap, vec![(0, 2, 10), (1, 2, 10), (7, 0, 20), (5, 5, 30)]);
    }

    #[test]
    fn identical_streams_give_identical_surfaces() {
        let events: Vec<_> = (0..500u64)
            .map(|i| ev((i * 7 % 240) as u16, (i * 13 % 180) as u16, i * 3))
            .collect();
        let mut a = TimeSurface::new(240, 180, SurfaceKind::Sae);
        let mut b = TimeSurface::new(240, 180, SurfaceKind::Sae);
        for e in &events {
            a.apply(e).unwrap();
            b.apply(e).unwrap();
        }
        assert_eq!(a, b);
    }
}
