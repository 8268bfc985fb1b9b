use complement_sampling::game::{run_game, verify_transcript, Backend, GameConfig, PlayerKind};

fn config(n: usize, rounds: usize, j: usize, player: PlayerKind, backend: Backend, seed: u64) -> GameConfig {
    GameConfig {
        n,
        rounds,
        samples_per_round: j,
        player,
        backend,
        master_seed: seed,
    }
}

#[test]
fn quantum_complement_never_loses() {
    for (n, backend) in [(8, Backend::RandomTable), (16, Backend::Saes)] {
        let t = run_game(&config(n, 10_000, 1, PlayerKind::QuantumComplement, backend, 77)).unwrap();
        assert_eq!(t.summary.wins, 10_000, "n = {n}");
    }
}

#[test]
fn classical_win_rate_tracks_distinct_samples() {
    // Per round, P[win] = (N - K)/(N - distinct); compare the total to its mean.
    for (j, seed) in [(1, 1), (4, 2), (40, 3)] {
        let c = config(16, 100_000, j, PlayerKind::ClassicalRandomGuess, Backend::Saes, seed);
        let t = run_game(&c).unwrap();
        let (mut mean, mut var) = (0.0, 0.0);
        for r in &t.records {
            let mut s = r.samples.clone().unwrap();
            s.sort();
            s.dedup();
            let p = 32768.0 / (65536.0 - s.len() as f64);
            mean += p;
            var += p * (1.0 - p);
        }
        let wins = t.summary.wins as f64;
        assert!((wins - mean).abs() <= 5.0 * var.sqrt(), "j = {j}: {wins} vs {mean}");
    }
}

#[test]
fn classical_all_rounds_rate_by_aggregation() {
    // 2000 games of 20 rounds. The all-win event has probability about 2^-20,
    // so it is checked through the pooled per-round rate it is a power of.
    let p = 32768.0 / 65535.0;
    let games = 2000;
    let mut wins = 0usize;
    let mut all_won = 0usize;
    for g in 0..games {
        let t = run_game(&config(16, 20, 1, PlayerKind::ClassicalRandomGuess, Backend::Saes, 10_000 + g)).unwrap();
        wins += t.summary.wins;
        all_won += t.summary.all_won as usize;
    }
    let rounds = (games * 20) as f64;
    let rate = wins as f64 / rounds;
    let sigma = (p * (1.0 - p) / rounds).sqrt();
    assert!((rate - p).abs() <= 5.0 * sigma);
    // The 5σ band on the per-round rate, raised to the 20th power, must contain
    // the analytic all-rounds probability (about 2^-20).
    let target = p.powi(20);
    assert!((rate - 5.0 * sigma).powi(20) <= target && target <= (rate + 5.0 * sigma).powi(20));
    assert!((target.log2() + 20.0).abs() < 1e-3);
    // Expected count is about 0.002; more than a couple would be suspicious.
    assert!(all_won <= 2);
}

#[test]
fn zero_error_and_coupon_players_at_half() {
    let t = run_game(&config(16, 300, 1, PlayerKind::QuantumZeroError, Backend::Saes, 4)).unwrap();
    assert!(t.summary.all_won);
    let rounds = 20_000;
    let t = run_game(&config(8, rounds, 1, PlayerKind::CouponCollector, Backend::RandomTable, 5)).unwrap();
    let sigma = (rounds as f64 * 0.25).sqrt();
    assert!((t.summary.wins as f64 - rounds as f64 / 2.0).abs() <= 5.0 * sigma);
    assert!(!t.summary.threshold_met);
    assert!(verify_transcript(&t, &t.config).unwrap());
}
