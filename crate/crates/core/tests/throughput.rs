//! Timing checks. Each measurement takes the best of several runs so a busy
//! machine only makes the numbers worse in the same direction for both
//! sides of a comparison.

use std::hint::black_box;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ebvs::event::{read_events, write_events, Event, Polarity, SurfaceKind, TimeSurface};
use ebvs::harris::{HarrisConfig, HarrisDetector};
use ebvs::heatmap::{CornerHeatMap, HeatMapConfig, Peak, PeakSet};
use ebvs::tracking::{TrackedFeatureSet, TrackerConfig};

fn best_of<F: FnMut()>(runs: usize, mut f: F) -> Duration {
    (0..runs)
        .map(|_| {
            let start = Instant::now();
            f();
            start.elapsed()
        })
        .min()
        .unwrap()
}

fn random_events(n: usize, width: u32, height: u32, seed: u64) -> Vec<Event> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            Event::new(
                rng.random_range(0..width) as u16,
                rng.random_range(0..height) as u16,
                i as u64 * 10,
                if rng.random() { Polarity::Positive } else { Polarity::Negative },
            )
        })
        .collect()
}

#[test]
fn harris_cost_does_not_grow_with_sensor() {
    let det = HarrisDetector::new(HarrisConfig::default()).unwrap();
    let per_event = |width: u32, height: u32| {
        // The surface is dense, so every patch has the same amount of work.
        let mut sae = TimeSurface::new(width, height, SurfaceKind::Sae);
        for e in random_events((width * height * 4) as usize, width, height, 1) {
            sae.apply(&e).unwrap();
        }
        let probe = random_events(20_000, width, height, 2);
        let d = best_of(5, || {
            for e in &probe {
                black_box(det.classify_event(&sae, e));
            }
        });
        d.as_secs_f64() / probe.len() as f64
    };
    let small = per_event(240, 180);
    let large = per_event(640, 480);
    let ratio = large / small;
    assert!(
        (0.5..=2.0).contains(&ratio),
        "per-event cost {:.0} ns at 240x180, {:.0} ns at 640x480",
        small * 1e9,
        large * 1e9
    );
}

#[test]
fn tracking_outpaces_heatmap_detection() {
    let peaks = PeakSet {
        peaks: [(80, 60), (160, 60), (160, 120), (80, 120)]
            .iter()
            .map(|&(x, y)| Peak { x, y, value: 1.0 })
            .collect(),
    };
    // Corner events scattered within 3 px of the tracked corners.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let events: Vec<Event> = (0..4000)
        .map(|i| {
            let p = &peaks.peaks[i % 4];
            Event::new(
                (p.x as i32 + rng.random_range(-3..=3)) as u16,
                (p.y as i32 + rng.random_range(-3..=3)) as u16,
                i as u64 * 10,
                Polarity::Positive,
            )
        })
        .collect();

    let track = best_of(5, || {
        let mut set = TrackedFeatureSet::seeded(TrackerConfig::default(), &peaks, 0).unwrap();
        for e in &events {
            black_box(set.assimilate_corner([e.u as f64, e.v as f64], e.t));
        }
    });
    let sample = &events[..400];
    let detect = best_of(3, || {
        let mut map = CornerHeatMap::new(240, 180, HeatMapConfig::default()).unwrap();
        for e in sample {
            map.deposit(e.u, e.v, e.t).unwrap();
            black_box(map.extract_peaks());
        }
    });
    let track_rate = events.len() as f64 / track.as_secs_f64();
    let detect_rate = sample.len() as f64 / detect.as_secs_f64();
    assert!(
        track_rate >= 10.0 * detect_rate,
        "tracking {track_rate:.3e} ev/s, heat-map detection {detect_rate:.3e} ev/s"
    );
}

#[test]
fn parser_keeps_up_with_a_sensor() {
    let events = random_events(500_000, 240, 180, 4);
    let mut bytes = Vec::new();
    write_events(&mut bytes, 240, 180, &events).unwrap();
    let mut parsed = None;
    let d = best_of(3, || parsed = Some(read_events(bytes.as_slice()).unwrap()));
    assert_eq!(parsed.unwrap().events, events);
    // A busy scene on a 240x180 sensor is on the order of 1e6 events/s.
    let rate = events.len() as f64 / d.as_secs_f64();
    assert!(rate >= 1e6, "parsed {rate:.3e} events/s");
}
