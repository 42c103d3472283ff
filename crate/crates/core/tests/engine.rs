use groupsearch::behavior::{BehaviorState, StateTag};
use groupsearch::engine::{AgentState, Recording, Simulation};
use groupsearch::geometry::{unit_from_angle, wrap_degrees};
use groupsearch::io::manifest::sha256_hex;
use groupsearch::rng::RngStream;
use groupsearch::{run_simulation, SimConfig, TorusSpec, Vec2};

fn full_recording() -> Recording {
    Recording {
        components: true,
        census: true,
        trajectory: true,
        coverage: true,
    }
}

fn metrics_cfg(n: usize, ticks: u64) -> SimConfig {
    SimConfig {
        agents: n,
        targets_enabled: false,
        max_ticks: Some(ticks),
        record: full_recording(),
        ..SimConfig::default()
    }
}

#[test]
fn straight_line_without_noise() {
    let cfg = SimConfig {
        sigma: 0.0,
        ..metrics_cfg(1, 100)
    };
    let start = Vec2::new(1000.0, 2000.0);
    let mut sim =
        Simulation::with_layout(cfg, vec![AgentState::searching(0, start, 30.0)], vec![]).unwrap();
    sim.run_to_end();
    let a = sim.agents()[0];
    let expect = start + unit_from_angle(30.0) * 1000.0;
    assert!((a.position - expect).norm() < 1e-9, "{:?}", a.position);
    assert_eq!(a.heading, 30.0);
}

#[test]
fn crosses_the_seam() {
    let cfg = SimConfig {
        sigma: 0.0,
        ..metrics_cfg(1, 1)
    };
    let mut sim = Simulation::with_layout(
        cfg,
        vec![AgentState::searching(0, Vec2::new(19_995.0, 100.0), 0.0)],
        vec![],
    )
    .unwrap();
    sim.step();
    let p = sim.agents()[0].position;
    assert!((p.x - 5.0).abs() < 1e-9 && (p.y - 100.0).abs() < 1e-9, "{p:?}");
}

#[test]
fn correlated_walk_matches_replayed_noise() {
    let sigma = 3.0;
    let cfg = SimConfig {
        sigma,
        seed: 77,
        ..metrics_cfg(2, 200)
    };
    let world = cfg.world();
    let starts = [(Vec2::new(500.0, 500.0), 10.0), (Vec2::new(9000.0, 100.0), 250.0)];
    let layout = starts
        .iter()
        .enumerate()
        .map(|(i, &(p, h))| AgentState::searching(i, p, h))
        .collect();
    let mut sim = Simulation::with_layout(cfg.clone(), layout, vec![]).unwrap();
    sim.run_to_end();
    for (i, &(p0, h0)) in starts.iter().enumerate() {
        // independent replay of the agent's own stream
        let mut rng = RngStream::new(77, i as u64 + 1);
        let (mut p, mut h) = (p0, h0);
        for t in 0..200 {
            if t > 0 {
                h += sigma * rng.standard_normal();
            }
            p = world.wrap(p + unit_from_angle(h) * 10.0);
        }
        let a = sim.agents()[i];
        assert!(world.distance(a.position, p) < 1e-6, "agent {i}");
        assert!((a.heading - wrap_degrees(h)).abs() < 1e-9);
    }
}

#[test]
fn every_search_step_has_exact_length_and_unit_heading() {
    let cfg = SimConfig {
        rho: 0.5,
        sigma: 5.0,
        seed: 3,
        ..metrics_cfg(30, 300)
    };
    let world = cfg.world();
    let log = run_simulation(&cfg).unwrap();
    let frames = log.trajectory.unwrap();
    let n = cfg.agents;
    for t in 1..=300usize {
        for i in 0..n {
            let (a, b) = (&frames[(t - 1) * n + i], &frames[t * n + i]);
            assert_eq!((b.tick, b.agent), (t as u64, i));
            let d = world.distance(Vec2::new(a.x, a.y), Vec2::new(b.x, b.y));
            assert!((d - 10.0).abs() < 1e-9, "tick {t} agent {i}: {d}");
            assert!((0.0..360.0).contains(&b.heading));
            let u = unit_from_angle(b.heading);
            assert!((u.norm() - 1.0).abs() < 1e-9);
            // heading is the displacement direction
            let disp = world.delta(Vec2::new(a.x, a.y), Vec2::new(b.x, b.y)) * 0.1;
            assert!((disp - u).norm() < 1e-6);
        }
    }
}

#[test]
fn bitwise_deterministic() {
    let cfg = SimConfig {
        rho: 0.3,
        side_length: 3000.0,
        agents: 12,
        seed: 99,
        record: full_recording(),
        ..SimConfig::default()
    };
    let a = serde_json::to_vec(&run_simulation(&cfg).unwrap()).unwrap();
    let b = serde_json::to_vec(&run_simulation(&cfg).unwrap()).unwrap();
    assert_eq!(sha256_hex(&a), sha256_hex(&b));
    let other = serde_json::to_vec(&run_simulation(&SimConfig { seed: 100, ..cfg }).unwrap()).unwrap();
    assert_ne!(a, other);
}

#[test]
fn metrics_mode_runs_the_full_budget_without_arrivals() {
    let log = run_simulation(&SimConfig {
        rho: 0.4,
        ..metrics_cfg(20, 500)
    })
    .unwrap();
    assert_eq!(log.ticks_run, 500);
    assert!(log.targets.is_empty());
    assert!(log.arrival_ticks.iter().all(Option::is_none));
    assert_eq!(log.components.len(), 501);
    let cov = log.coverage.unwrap();
    assert_eq!(cov.history.len(), 501);
    assert!(cov.history.windows(2).all(|w| w[0] <= w[1]));
}

fn smoke(rho: f64, seed: u64) -> SimConfig {
    SimConfig {
        side_length: 2000.0,
        agents: 10,
        targets: 1,
        rho,
        seed,
        record: full_recording(),
        ..SimConfig::default()
    }
}

#[test]
fn smoke_runs_finish_with_consistent_logs() {
    for rho in [0.0, 0.3, 0.6] {
        for seed in 0..4 {
            let cfg = smoke(rho, seed);
            let log = run_simulation(&cfg).unwrap();
            assert!(!log.is_censored(), "rho {rho} seed {seed} censored");
            let n = cfg.agents as u32;
            assert_eq!(log.census.len() as u64, log.ticks_run + 1);
            let mut prev_arrived = 0;
            for c in &log.census {
                assert_eq!(c.total(), n);
                assert!(c.arrived >= prev_arrived);
                prev_arrived = c.arrived;
            }
            assert_eq!(log.census.last().unwrap().arrived, n);
            // arrival order follows detection times
            let times: Vec<u64> = log
                .arrival_order
                .iter()
                .map(|&i| log.arrival_ticks[i].unwrap())
                .collect();
            assert!(times.windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(log.arrival_order.len(), cfg.agents);
            // arrived agents sit on their target from then on
            let frames = log.trajectory.as_ref().unwrap();
            let target = log.targets[0];
            for f in frames.iter().filter(|f| f.state == StateTag::Arrived) {
                assert_eq!(Vec2::new(f.x, f.y), target);
            }
        }
    }
}

#[test]
fn detection_tick_is_first_time_within_target_radius() {
    let cfg = smoke(0.0, 11);
    let world = cfg.world();
    let log = run_simulation(&cfg).unwrap();
    let frames = log.trajectory.as_ref().unwrap();
    let target = log.targets[0];
    for i in 0..cfg.agents {
        let first = frames
            .iter()
            .filter(|f| f.agent == i)
            .find(|f| world.distance(Vec2::new(f.x, f.y), target) <= cfg.r_t)
            .map(|f| f.tick);
        assert_eq!(first, log.arrival_ticks[i], "agent {i}");
    }
}

#[test]
fn equal_radii_never_lock() {
    for seed in 0..6 {
        let cfg = SimConfig {
            r_s: 10.0,
            r_t: 10.0,
            rho: 0.5,
            ..smoke(0.5, seed)
        };
        let log = run_simulation(&cfg).unwrap();
        assert!(log.census.iter().all(|c| c.lock == 0), "seed {seed}");
    }
}

#[test]
fn followers_lock_when_radii_differ() {
    let locked = (0..6).any(|seed| {
        let log = run_simulation(&smoke(0.0, seed)).unwrap();
        log.census.iter().any(|c| c.lock > 0)
    });
    assert!(locked);
}

#[test]
fn initial_layout_is_a_small_disc_around_the_center() {
    let cfg = SimConfig {
        seed: 2024,
        ..SimConfig::default()
    };
    let sim = Simulation::new(cfg.clone()).unwrap();
    let world = cfg.world();
    for a in sim.agents() {
        assert!(world.distance(a.position, world.center()) <= cfg.r_s / 2.0);
        assert!((0.0..360.0).contains(&a.heading));
        assert_eq!(a.behavior, BehaviorState::Search);
    }
    let t = sim.targets()[0];
    assert!((0.0..20_000.0).contains(&t.x) && (0.0..20_000.0).contains(&t.y));
    let bytes = serde_json::to_vec(&(sim.agents(), sim.targets())).unwrap();
    assert_eq!(sha256_hex(&bytes), LAYOUT_2024);
}

/// Layout digest for seed 2024 with default parameters.
const LAYOUT_2024: &str = "5924bcdc895247336a03686ee9b4c1ad636af600ef7250b00bda0ad11c3d5f0d";

#[test]
fn layout_rejects_wrong_sizes() {
    let cfg = metrics_cfg(2, 1);
    assert!(Simulation::with_layout(cfg, vec![AgentState::searching(0, Vec2::ZERO, 0.0)], vec![]).is_err());
}

#[test]
fn world_is_a_torus() {
    let w = TorusSpec::new(20_000.0).unwrap();
    assert_eq!(w.wrap(Vec2::new(20_005.0, -5.0)), Vec2::new(5.0, 19_995.0));
}

fn bfs_components(points: &[Vec2], world: &TorusSpec, r: f64) -> u32 {
    let mut seen = vec![false; points.len()];
    let mut count = 0;
    for s in 0..points.len() {
        if seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(i) = stack.pop() {
            for j in 0..points.len() {
                if !seen[j] && world.distance(points[i], points[j]) <= r {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    count
}

#[test]
fn component_series_matches_bfs_over_all_agents() {
    for (rho, seed) in [(0.0, 1), (0.3, 2), (0.6, 3)] {
        let cfg = SimConfig {
            targets: 3,
            ..smoke(rho, seed)
        };
        let world = cfg.world();
        let log = run_simulation(&cfg).unwrap();
        let frames = log.trajectory.as_ref().unwrap();
        let n = cfg.agents;
        for (t, &c) in log.components.iter().enumerate() {
            let pts: Vec<Vec2> = frames[t * n..(t + 1) * n].iter().map(|f| Vec2::new(f.x, f.y)).collect();
            assert_eq!(c, bfs_components(&pts, &world, cfg.r_s), "rho {rho} tick {t}");
        }
    }
}
