use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relaysel::channel::*;

const N: usize = 100_000;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let sa: f64 = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>().sqrt();
    let sb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum::<f64>().sqrt();
    cov / (sa * sb)
}

#[test]
fn fades_have_unit_mean_power() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ray: Vec<f64> = (0..N).map(|_| rayleigh_power(&mut rng)).collect();
    assert!((0.99..=1.01).contains(&mean(&ray)), "{}", mean(&ray));
    assert!((variance(&ray) - 1.0).abs() < 0.03);
    for k_db in [0.0, 10.0] {
        let k = db_to_linear(k_db);
        let ric: Vec<f64> = (0..N).map(|_| rician_power(k, &mut rng)).collect();
        assert!(
            (0.99..=1.01).contains(&mean(&ric)),
            "K {k_db} dB: {}",
            mean(&ric)
        );
        let expected = (2.0 * k + 1.0) / (k + 1.0).powi(2);
        assert!(
            (variance(&ric) / expected - 1.0).abs() < 0.03,
            "K {k_db} dB"
        );
    }
    assert_eq!(rician_power(f64::INFINITY, &mut rng), 1.0);
}

#[test]
fn synthetic_instances_have_the_requested_mean_snr() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (nj, nk, snr) = (4, 8, 1000.0);
    let mut p = Vec::new();
    let mut c = Vec::new();
    for _ in 0..N / (nj * nk) + 1 {
        let inst = draw_synthetic_rayleigh(nj, nk, snr, &mut rng).unwrap();
        p.extend_from_slice(inst.relay_matrix());
        c.extend_from_slice(inst.direct());
    }
    assert!((mean(&p) / (snr / nj as f64) - 1.0).abs() < 0.02);
    assert!((mean(&c) / (snr / nk as f64) - 1.0).abs() < 0.04);
}

#[test]
fn link_classes_are_uncorrelated() {
    let cfg = ScenarioConfig::default();
    let (mut a, mut b, mut s) = (Vec::new(), Vec::new(), Vec::new());
    let placement = Placement::new(&cfg, vec![[0.7, 0.0]]);
    for i in 0..20_000 {
        let streams = Streams::new(5, i);
        let small = draw_small_scale(4, 1, &cfg, &streams);
        a.push(small.bs_user[0]);
        b.push(small.relay_user[0]);
        s.push(draw_large_scale(&placement, &cfg, &streams).bs_user[0].log10());
    }
    assert!(correlation(&a, &b).abs() < 0.02);
    assert!(correlation(&a, &s).abs() < 0.02);
    // Neighbouring trials do not share draws either.
    assert!(correlation(&a[1..], &a[..a.len() - 1]).abs() < 0.02);
}

#[test]
fn shadowing_has_the_configured_spread() {
    let cfg = ScenarioConfig::default();
    let placement = Placement::new(&cfg, vec![[0.8, 0.3]]);
    let (mut user, mut los) = (Vec::new(), Vec::new());
    for i in 0..20_000 {
        let g = draw_large_scale(&placement, &cfg, &Streams::new(9, i));
        user.push(10.0 * g.bs_user[0].log10());
        los.push(10.0 * g.bs_relay[0].log10());
    }
    assert!((variance(&user).sqrt() / 8.0 - 1.0).abs() < 0.03);
    assert!((variance(&los).sqrt() / 3.4 - 1.0).abs() < 0.03);
    let d = 0.8f64.hypot(0.3);
    assert!((mean(&user) + path_loss_dB(d, LinkKind::BsUser, &cfg)).abs() < 0.2);
}

#[test]
fn zero_spread_gives_path_loss_only() {
    let cfg = ScenarioConfig {
        shadowing_sigma_db: 0.0,
        los_shadowing_sigma_db: 0.0,
        ..ScenarioConfig::default()
    };
    let placement = Placement::new(&cfg, vec![[0.3, 0.4], [-0.9, 0.0]]);
    let a = draw_large_scale(&placement, &cfg, &Streams::new(1, 0));
    let b = draw_large_scale(&placement, &cfg, &Streams::new(2, 7));
    assert_eq!(a, b);
    let expected = db_to_linear(-path_loss_dB(0.5, LinkKind::BsUser, &cfg));
    assert!((a.bs_user[0] / expected - 1.0).abs() < 1e-12);
    let ring = cfg.relay_ring_fraction * cfg.cell_radius_km;
    for g in &a.bs_relay {
        assert!(
            (g / db_to_linear(-path_loss_dB(ring, LinkKind::BsRelay, &cfg)) - 1.0).abs() < 1e-12
        );
    }
}

#[test]
fn draws_depend_only_on_seed_and_index() {
    let cfg = ScenarioConfig::default();
    let placement = Placement::new(&cfg, vec![[0.2, 0.1], [0.5, -0.5], [-0.1, 0.9]]);
    let power = PowerSplit::shared(&cfg, 3);
    let draw =
        |seed, path| draw_instance(&placement, &cfg, &power, &Streams::at(seed, path)).unwrap();
    assert_eq!(draw(4, [1, 2, 3]), draw(4, [1, 2, 3]));
    assert_ne!(draw(4, [1, 2, 3]), draw(4, [1, 2, 4]));
    assert_ne!(draw(4, [1, 2, 3]), draw(5, [1, 2, 3]));
    assert_ne!(draw(4, [0, 0, 0]), draw(4, [0, 0, 1]));
}

#[test]
fn path_loss_is_piecewise_linear_in_distance() {
    let cfg = ScenarioConfig::default();
    let pl = |d| path_loss_dB(d, LinkKind::BsUser, &cfg);
    for d in [0.1, 0.3, 0.6] {
        assert!((pl(d + 0.01) - pl(d) - 0.2).abs() < 1e-9);
    }
    for d in [0.7, 1.5, 2.9] {
        assert!((pl(d + 0.01) - pl(d) - 0.38).abs() < 1e-9);
    }
    let flat = ScenarioConfig {
        rooftop_to_street: false,
        path_loss_intercept_db: Some(100.0),
        ..cfg.clone()
    };
    assert_eq!(path_loss_dB(0.0, LinkKind::RelayUser, &flat), 100.0);
}

#[test]
fn relays_sit_on_the_ring_and_users_fill_the_annulus() {
    let cfg = ScenarioConfig {
        cell_radius_km: 2.0,
        num_relays: 6,
        ..ScenarioConfig::default()
    };
    let relays = relay_positions(&cfg);
    assert_eq!(relays.len(), 6);
    for (i, r) in relays.iter().enumerate() {
        assert!((r[0].hypot(r[1]) - 0.8).abs() < 1e-12);
        let next = relays[(i + 1) % 6];
        assert!(((r[0] - next[0]).hypot(r[1] - next[1]) - 0.8).abs() < 1e-12);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts = uniform_annulus(1.0, 3.0, N, &mut rng);
    let radii: Vec<f64> = pts.iter().map(|p| p[0].hypot(p[1])).collect();
    assert!(radii.iter().all(|r| (1.0..=3.0).contains(r)));
    // Half the area lies inside sqrt(5).
    let inner = radii.iter().filter(|r| **r < 5f64.sqrt()).count() as f64 / N as f64;
    assert!((inner - 0.5).abs() < 0.01);
    let right = pts.iter().filter(|p| p[0] > 0.0).count() as f64 / N as f64;
    assert!((right - 0.5).abs() < 0.01);
}
