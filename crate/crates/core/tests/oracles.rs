//! Closed-form and brute-force oracles written independently of the library.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use holovlc::cgh::{self, far_field, Hologram, TargetPattern, Window};
use holovlc::channel::{self, los_gain, EmitterModel, ImpulseResponse, TraceSettings, Tracer};
use holovlc::metrics::{self, bandwidth_3db, delay_spread, mean_delay};
use holovlc::scene::{self, build_room_a, Receiver, Scene};
use holovlc::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::{analytic_los, brute_far_field, random_phases, two_pass};

#[test]
fn far_field_matches_brute_force_dft() {
    for (m, n, pr, pc, seed) in [
        (8, 8, 8, 8, 1),
        (4, 8, 8, 16, 2),
        (8, 4, 16, 8, 3),
        (2, 2, 4, 4, 4),
    ] {
        let mut h = random_phases(m, n, seed);
        h.pitch_r = 0.7;
        h.pitch_s = 1.3;
        let fast = far_field(&h, pr, pc).unwrap();
        let slow = brute_far_field(&h, pr, pc);
        let scale = slow.iter().map(|g| g.norm()).fold(0.0, f64::max);
        for (a, b) in fast.field.iter().zip(&slow) {
            assert!((a - b).norm() <= 1e-10 * scale, "{a} vs {b}");
        }
    }
}

#[test]
fn phase_ramp_shifts_the_peak() {
    // M = N = 8, ramp of delta = 2 samples along x
    let (m, delta) = (8usize, 2.0);
    let phases = (0..m * m)
        .map(|i| {
            let k = (i / m) as f64 - (m / 2) as f64;
            2.0 * PI * k * delta / m as f64
        })
        .collect();
    let h = Hologram::phase_only(m, m, phases).unwrap();
    let ff = far_field(&h, m, m).unwrap();
    let slow = brute_far_field(&h, m, m);
    let intensity = ff.intensity();
    let peak = (0..intensity.len())
        .max_by(|&a, &b| intensity[a].total_cmp(&intensity[b]))
        .unwrap();
    // DC sits at (4, 4); a +2 ramp moves it to p = -2, i.e. row 2
    assert_eq!((peak / m, peak % m), (2, 4));
    assert_relative_eq!(intensity[peak], slow[peak].norm_sqr(), max_relative = 1e-10);
}

#[test]
fn parseval_for_random_phases() {
    for seed in 0..5 {
        let h = random_phases(16, 16, seed);
        let ff = far_field(&h, 64, 64).unwrap();
        assert_relative_eq!(
            ff.array_factor_energy() / (64.0 * 64.0),
            h.energy(),
            max_relative = 1e-9
        );
    }
}

#[test]
fn cost_matches_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = random_phases(4, 4, 11);
    let ff = far_field(&h, 4, 4).unwrap();
    let target = TargetPattern::uniform_window(4, 4, Window::centered(4, 4, 2, 2), 0.3).unwrap();
    let total: f64 = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .map(|(i, j)| ff.field[i * 4 + j].norm_sqr())
        .sum();
    let mut sq = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let t = if (1..3).contains(&i) && (1..3).contains(&j) {
                0.25
            } else {
                0.0
            };
            let g = ff.field[i * 4 + j].norm_sqr() / total;
            sq += (t - g) * (t - g);
        }
    }
    assert_relative_eq!(
        cgh::cost(&ff, &target).unwrap(),
        sq.sqrt(),
        max_relative = 1e-12
    );

    // all-zero reconstruction against a P-pixel flat target gives 1/sqrt(P)
    let flat: Vec<f64> = (0..16).map(|_| rng.gen_range(0.0..1.0)).collect();
    let zero = vec![0.0; 16];
    let uniform = vec![1.0 / 16.0; 16];
    assert_relative_eq!(
        cgh::cost_of_intensity(&zero, &uniform).unwrap(),
        0.25,
        max_relative = 1e-12
    );
    let norm: f64 = flat.iter().sum();
    let same: Vec<f64> = flat.iter().map(|v| v / norm).collect();
    assert!(cgh::cost_of_intensity(&flat, &same).unwrap() < 1e-15);
}

fn empty_box() -> Scene {
    let mut s = build_room_a();
    for surf in &mut s.surfaces {
        surf.rho = 0.0;
    }
    s
}

#[test]
fn order_zero_trace_equals_analytic_los() {
    let scene = build_room_a();
    let tracer = Tracer::with_pitches(&scene, 0.5, 1.0).unwrap();
    for (x, y, id) in [(1.0, 1.0, 1), (2.0, 2.0, 1), (1.5, 3.7, 2), (3.3, 6.1, 8)] {
        let rx = Receiver::at(x, y);
        let l = scene.luminaire(id).unwrap();
        let settings = TraceSettings {
            max_order: 0,
            dt: 1e-11,
        };
        let ir = tracer
            .impulse_response(l, &EmitterModel::Lambertian, &rx, &settings)
            .unwrap();
        assert_relative_eq!(
            ir.received_power(),
            analytic_los(l, &rx),
            max_relative = 1e-9
        );
    }
}

#[test]
fn los_gain_textbook_case() {
    let mut rx = Receiver::new(Vec3::new(0.0, 0.0, 1.0));
    rx.area_m2 = 1e-4;
    let g = los_gain(Vec3::new(0.0, 0.0, 3.0), Vec3::DOWN, 1.0, &rx).unwrap();
    assert_relative_eq!(g.gain, 7.958e-6, max_relative = 1e-3);
    assert_relative_eq!(g.delay, 6.67e-9, max_relative = 1e-3);
}

#[test]
fn dark_walls_reduce_to_line_of_sight() {
    let scene = empty_box();
    let tracer = Tracer::with_pitches(&scene, 0.25, 0.5).unwrap();
    let l = scene.luminaire(1).unwrap();
    let rx = Receiver::at(1.4, 1.9);
    let o0 = tracer
        .impulse_response(
            l,
            &EmitterModel::Lambertian,
            &rx,
            &TraceSettings {
                max_order: 0,
                dt: 1e-11,
            },
        )
        .unwrap();
    let o2 = tracer
        .impulse_response(
            l,
            &EmitterModel::Lambertian,
            &rx,
            &TraceSettings {
                max_order: 2,
                dt: 1e-11,
            },
        )
        .unwrap();
    assert_eq!(o0.bins, o2.bins);
}

#[test]
fn partition_examples() {
    let scene = build_room_a();
    let p = scene::partition(&scene, 0.05, 0.20).unwrap();
    assert_eq!(p.first.len(), 54_400);
    assert_eq!(p.second.len(), 3_400);
    let area: f64 = p.first.iter().map(|e| e.area).sum();
    assert_relative_eq!(
        area,
        2.0 * (8.0 * 3.0) + 2.0 * (4.0 * 3.0) + 2.0 * (8.0 * 4.0),
        max_relative = 1e-9
    );
    assert!(scene::partition(&scene, 0.0, 0.2).is_err());
}

#[test]
fn delay_moments_match_two_pass_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let dt = 1e-11;
        let bins: Vec<f64> = (0..300)
            .map(|_| {
                if rng.gen_bool(0.2) {
                    rng.gen_range(0.0..1e-7)
                } else {
                    0.0
                }
            })
            .collect();
        let ir = ImpulseResponse::new(dt, 0.0, bins.clone()).unwrap();
        let taps: Vec<(f64, f64)> = bins
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(k, p)| (k as f64 * dt, *p))
            .collect();
        let (mu, d) = two_pass(&taps);
        assert_relative_eq!(mean_delay(&ir).unwrap(), mu, max_relative = 1e-12);
        assert_relative_eq!(delay_spread(&ir).unwrap(), d, max_relative = 1e-12);
    }
}

#[test]
fn hand_evaluated_delay_examples() {
    let mut b = vec![0.0; 101];
    b[0] = 1.0;
    b[100] = 1.0;
    let ir = ImpulseResponse::new(1e-11, 0.0, b).unwrap();
    assert_relative_eq!(mean_delay(&ir).unwrap(), 0.5e-9, max_relative = 1e-12);
    assert_relative_eq!(delay_spread(&ir).unwrap(), 0.5e-9, max_relative = 1e-12);
}

#[test]
fn two_path_bandwidth_closed_form() {
    // |H| = 2|cos(pi f T)|; the -3 dB optical crossing solves cos(pi f T) = 10^-0.3
    let t = 1e-9;
    let expect = (10f64.powf(-0.3)).acos() / (PI * t);
    let mut b = vec![0.0; 101];
    b[0] = 1.0;
    b[100] = 1.0;
    let ir = ImpulseResponse::new(1e-11, 0.0, b).unwrap();
    let bw = bandwidth_3db(&ir).unwrap();
    assert!(!bw.saturated);
    assert!(
        (bw.hz - expect).abs() / expect <= 1e-3,
        "{} vs {expect}",
        bw.hz
    );
    assert!((bw.hz / 1e9 - 0.333).abs() < 1e-3);
}

#[test]
fn data_rate_examples() {
    assert!((metrics::ook_data_rate(1.21e9) / 1e9 - 1.7286).abs() < 1e-4);
    assert!((metrics::ook_data_rate(2.2e9) / 1e9 - 3.1429).abs() < 1e-4);
    assert_relative_eq!(metrics::ook_data_rate(0.7e9), 1e9, max_relative = 1e-12);
}

#[test]
fn binary_and_csv_exports_agree() {
    let dir = tempfile::tempdir().unwrap();
    let scene = build_room_a();
    let ir = channel::impulse_response(
        &scene,
        scene.luminaire(1).unwrap(),
        &EmitterModel::Lambertian,
        &Receiver::at(1.0, 1.0),
        &TraceSettings {
            max_order: 1,
            dt: 1e-11,
        },
    )
    .unwrap();
    ir.write_csv(&dir.path().join("ir.csv")).unwrap();
    ir.write_binary(&dir.path().join("ir.bin")).unwrap();
    let mut rd = csv::Reader::from_path(dir.path().join("ir.csv")).unwrap();
    assert_eq!(rd.headers().unwrap(), vec!["t_seconds", "power_watts"]);
    let rows: Vec<(f64, f64)> = rd
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect();
    let bytes = std::fs::read(dir.path().join("ir.bin")).unwrap();
    assert_eq!(bytes.len(), rows.len() * 16);
    for (pair, (t, p)) in bytes.chunks_exact(16).zip(&rows) {
        assert_eq!(f64::from_le_bytes(pair[..8].try_into().unwrap()), *t);
        assert_eq!(f64::from_le_bytes(pair[8..].try_into().unwrap()), *p);
    }
    let total: f64 = rows.iter().map(|r| r.1).sum();
    assert_relative_eq!(total, ir.received_power(), max_relative = 1e-12);
}
