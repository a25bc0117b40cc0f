use std::collections::HashMap;
use std::f64::consts::PI;

use holovlc::cgh::{self, far_field, AnnealSchedule, Hologram, TargetPattern, Window};
use holovlc::channel::{BeamPattern, EmitterModel, ImpulseResponse, TraceSettings, Tracer};
use holovlc::metrics::{self, delay_spread, mean_delay};
use holovlc::photometry::{illuminance_at, Redirection};
use holovlc::sbls::{self, select_best, NoiseModel, ProbeReport, SelectionState};
use holovlc::scene::{self, build_room_a, build_room_b, Receiver, RoomBLayout};
use holovlc::Vec3;
use proptest::prelude::*;

fn small_target() -> TargetPattern {
    TargetPattern::uniform_window(16, 16, Window::centered(16, 16, 4, 4), 0.3).unwrap()
}

fn small_schedule(seed: u64) -> AnnealSchedule {
    AnnealSchedule {
        initial_temperature: None,
        cooling: 0.7,
        iterations_per_stage: 64,
        stop_ratio: 1e-2,
        seed,
        record_moves: true,
    }
}

fn interior() -> impl Strategy<Value = Vec3> {
    (0.05..3.95f64, 0.05..7.95f64, 0.05..2.95f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn taps() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, 2..40)
        .prop_filter("some power", |v| v.iter().any(|&p| p > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tiling_conserves_surface_area(pitch in 0.07..1.3f64, furnished in any::<bool>()) {
        let s = if furnished { build_room_b(&RoomBLayout::default()).unwrap() } else { build_room_a() };
        let mut sums: HashMap<usize, f64> = HashMap::new();
        for e in scene::tile(&s, pitch).unwrap() {
            *sums.entry(e.surface).or_default() += e.area;
        }
        for (i, surf) in s.surfaces.iter().enumerate() {
            let got = sums.get(&i).copied().unwrap_or(0.0);
            let want = if surf.inset { 0.0 } else { surf.area() };
            prop_assert!((got - want).abs() <= 1e-9 * want.max(1.0), "surface {i}: {got} vs {want}");
        }
    }

    #[test]
    fn visibility_is_symmetric(p in interior(), q in interior()) {
        let s = build_room_b(&RoomBLayout::default()).unwrap();
        prop_assert_eq!(scene::visible(p, q, &s), scene::visible(q, p, &s));
    }

    #[test]
    fn responses_are_finite_and_nonnegative(x in 0.1..3.9f64, y in 0.1..7.9f64, id in 1u32..=8, order in 0u8..=2) {
        let s = build_room_b(&RoomBLayout::default()).unwrap();
        let tracer = Tracer::with_pitches(&s, 0.25, 0.5).unwrap();
        let l = s.luminaire(id).unwrap();
        let rx = Receiver::at(x, y);
        let settings = TraceSettings { max_order: order, dt: 1e-11 };
        for model in [EmitterModel::Lambertian, EmitterModel::Cgh(BeamPattern::uniform(0.3, l, 16).unwrap())] {
            let ir = tracer.impulse_response(l, &model, &rx, &settings).unwrap();
            prop_assert!(ir.bins.iter().all(|b| b.is_finite() && *b >= 0.0));
        }
    }

    #[test]
    fn delay_moments_shift_and_scale(bins in taps(), shift in 0.0..1e-8f64, gain in 1e-6..1e6f64, stretch in 0.1..10.0f64) {
        let dt = 1e-11;
        let base = ImpulseResponse::new(dt, 0.0, bins.clone()).unwrap();
        let (mu, d) = (mean_delay(&base).unwrap(), delay_spread(&base).unwrap());
        let shifted = ImpulseResponse::new(dt, shift, bins.clone()).unwrap();
        prop_assert!((delay_spread(&shifted).unwrap() - d).abs() <= 1e-9 * (d + 1e-15));
        prop_assert!((mean_delay(&shifted).unwrap() - (mu + shift)).abs() <= 1e-9 * (mu + shift));
        let louder = ImpulseResponse::new(dt, 0.0, bins.iter().map(|b| b * gain).collect()).unwrap();
        prop_assert!((delay_spread(&louder).unwrap() - d).abs() <= 1e-9 * (d + 1e-15));
        let slower = ImpulseResponse::new(dt * stretch, 0.0, bins).unwrap();
        prop_assert!((delay_spread(&slower).unwrap() - d * stretch).abs() <= 1e-9 * (d * stretch + 1e-15));
    }

    #[test]
    fn gain_of_equal_powers_is_zero(p in 1e-15..1.0f64) {
        prop_assert_eq!(metrics::power_gain_db(p, p).unwrap(), 0.0);
    }

    #[test]
    fn data_rate_is_monotone(a in 0.0..1e11f64, b in 0.0..1e11f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(metrics::ook_data_rate(lo) <= metrics::ook_data_rate(hi));
    }

    #[test]
    fn selection_ignores_common_scale(snrs in prop::collection::vec(0.0..1e6f64, 1..10), k in 1e-3..1e3f64) {
        let reports: Vec<ProbeReport> = snrs.iter().enumerate()
            .map(|(i, &s)| ProbeReport { luminaire_id: i as u32 + 1, snr: s, received_power_w: 0.0 })
            .collect();
        let scaled: Vec<ProbeReport> = reports.iter().map(|r| ProbeReport { snr: r.snr * k, ..*r }).collect();
        prop_assert_eq!(select_best(&reports).unwrap(), select_best(&scaled).unwrap());
    }

    #[test]
    fn snr_winner_is_power_winner(powers in prop::collection::vec(1e-10..1e-6f64, 1..10)) {
        let noise = NoiseModel::default();
        let reports: Vec<ProbeReport> = powers.iter().enumerate().map(|(i, &p)| {
            let ir = ImpulseResponse::new(1e-11, 0.0, vec![p]).unwrap();
            ProbeReport { luminaire_id: i as u32 + 1, snr: sbls::snr(&ir, &noise).unwrap(), received_power_w: p }
        }).collect();
        let best = powers.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let first_max = powers.iter().position(|&p| p >= best * (1.0 - 1e-10)).unwrap() as u32 + 1;
        prop_assert_eq!(select_best(&reports).unwrap(), first_max);
    }

    #[test]
    fn probing_runs_in_ascending_id_order(mut ids in prop::collection::hash_set(1u32..50, 1..10).prop_map(|s| s.into_iter().collect::<Vec<_>>()), seed in any::<u64>()) {
        let mut state = SelectionState::new();
        let mut active = state.start(&ids).unwrap();
        let mut order = vec![active];
        let snr_of = |id: u32| ((id as u64).wrapping_mul(seed | 1) % 1000) as f64;
        while let Some(next) = state.report(ProbeReport { luminaire_id: active, snr: snr_of(active), received_power_w: 0.0 }).unwrap() {
            active = next;
            order.push(next);
        }
        ids.sort_unstable();
        prop_assert_eq!(&order, &ids);
        prop_assert_eq!(state.selected(), Some(select_best(state.reports()).unwrap()));
    }

    #[test]
    fn illuminance_is_linear_in_flux(x in 0.0..4.0f64, y in 0.0..8.0f64, k in 0.1..10.0f64) {
        let s = build_room_a();
        let mut brighter = s.luminaires.clone();
        for l in &mut brighter {
            l.flux_lm *= k;
        }
        let p = Vec3::new(x, y, 1.0);
        let a = illuminance_at(p, &s.luminaires, None);
        prop_assert!((illuminance_at(p, &brighter, None) - k * a).abs() <= 1e-9 * k * a);
    }

    #[test]
    fn redirection_darkens_points_outside_the_cell(x in 0.0..4.0f64, y in 2.5..8.0f64, f1 in 0.0..0.5f64, df in 0.01..0.5f64) {
        let s = build_room_a();
        let l = s.luminaire(1).unwrap();
        let at = |f: f64| {
            let r = Redirection { luminaire_id: 1, beam: BeamPattern::uniform(f, l, 16).unwrap() };
            illuminance_at(Vec3::new(x, y, 1.0), &s.luminaires, Some(&r))
        };
        prop_assert!(at(f1 + df) < at(f1));
    }

    #[test]
    fn parseval_holds(rows in 1usize..9, cols in 1usize..9, pr in 3u32..6, pc in 3u32..6, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let phases = (0..rows * cols).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let h = Hologram::phase_only(rows, cols, phases).unwrap();
        let (p, q) = (1usize << pr, 1usize << pc);
        let ff = far_field(&h, p, q).unwrap();
        let lhs = ff.array_factor_energy() / (p * q) as f64;
        prop_assert!((lhs - h.energy()).abs() <= 1e-9 * h.energy());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn annealing_keeps_phase_only_and_best_never_rises(seed in any::<u64>()) {
        let out = cgh::optimize(&small_target(), &small_schedule(seed), 8, 8).unwrap();
        prop_assert!(out.hologram.is_phase_only());
        prop_assert!(out.hologram.phases.iter().all(|p| (0.0..2.0 * PI).contains(p)));
        prop_assert!(out.best_cf <= out.initial_cf);
        for w in out.trace.windows(2) {
            prop_assert!(w[1].best_cf <= w[0].best_cf);
        }
        let mut best = out.initial_cf;
        for m in &out.moves {
            best = best.min(m.cf_after);
        }
        prop_assert!((best - out.best_cf).abs() <= 1e-12);
    }

    #[test]
    fn zero_temperature_rejects_every_uphill_move(seed in any::<u64>()) {
        let mut sched = AnnealSchedule::greedy(400, seed);
        sched.record_moves = true;
        let out = cgh::optimize(&small_target(), &sched, 8, 8).unwrap();
        prop_assert!(!out.moves.is_empty());
        for m in &out.moves {
            prop_assert!(!m.accepted || m.delta <= 0.0, "{m:?}");
        }
    }

    #[test]
    fn fixed_seed_reruns_are_identical(seed in any::<u64>()) {
        let a = cgh::optimize(&small_target(), &small_schedule(seed), 8, 8).unwrap();
        let b = cgh::optimize(&small_target(), &small_schedule(seed), 8, 8).unwrap();
        prop_assert_eq!(a.hologram.phases, b.hologram.phases);
        prop_assert_eq!(a.best_cf.to_bits(), b.best_cf.to_bits());
        prop_assert_eq!(a.trace, b.trace);
    }
}

#[test]
fn uphill_acceptance_falls_as_the_system_cools() {
    let mut hot = 0.0;
    let mut cold = 0.0;
    for seed in 0..8 {
        let mut sched = small_schedule(seed);
        sched.iterations_per_stage = 256;
        let out = cgh::optimize(&small_target(), &sched, 8, 8).unwrap();
        let rate = |s: &[cgh::StageRecord]| {
            let (a, p) = s.iter().fold((0, 0), |(a, p), r| {
                (a + r.uphill_accepted, p + r.uphill_proposed)
            });
            a as f64 / p.max(1) as f64
        };
        let half = out.trace.len() / 2;
        hot += rate(&out.trace[..half]);
        cold += rate(&out.trace[half..]);
    }
    assert!(cold < hot, "{cold} vs {hot}");
}
