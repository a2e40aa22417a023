use pou_cli::{run, ExperimentConfig, ExperimentKind, Settings, Status};

fn report(kind: ExperimentKind, settings: Settings) -> pou_cli::Report {
    run(&ExperimentConfig::resolve(kind, settings).unwrap()).unwrap()
}

#[test]
fn single_cell_noiseless_constant_has_zero_error() {
    let r = report(
        ExperimentKind::ExpVariance,
        Settings {
            problem: Some("constant-1d".into()),
            n: Some(vec![1]),
            m: Some(vec![8, 16, 32, 64]),
            replications: Some(20),
            ..Default::default()
        },
    );
    assert!(r.reals("mean_sq").unwrap().iter().all(|&v| v == 0.0));
    assert_eq!(r.check("slope").unwrap().status, Status::Skipped);
    assert_eq!(r.check("ratio-spread").unwrap().status, Status::Skipped);
    assert!(r.passed());
}

#[test]
fn rate_on_constant_truth_skips_the_fit() {
    let r = report(
        ExperimentKind::ExpRate,
        Settings {
            problem: Some("constant-1d".into()),
            s: Some(1.0),
            m: Some(vec![256, 512, 1024]),
            replications: Some(50),
            ..Default::default()
        },
    );
    assert!(r.reals("mean_sq").unwrap().iter().all(|&v| v < 1e-12));
    assert_eq!(r.check("slope").unwrap().status, Status::Skipped);
    assert_eq!(r.check("bias-below-total").unwrap().status, Status::Pass);
}

#[test]
fn rate_grid_keeps_n_below_m() {
    let r = report(
        ExperimentKind::ExpRate,
        Settings {
            m: Some(vec![4, 8, 16, 32]),
            replications: Some(20),
            ..Default::default()
        },
    );
    let n = r.reals("N").unwrap();
    let m = r.reals("m").unwrap();
    assert!(n.iter().zip(&m).all(|(n, m)| n <= m), "{n:?}");
}

#[test]
fn tail_is_empty_beyond_twice_the_bound() {
    let r = report(
        ExperimentKind::ExpTail,
        Settings {
            m: Some(vec![16]),
            n: Some(vec![4]),
            eta: Some(vec![0.05, 0.1, 0.2, 2.0, 2.5]),
            replications: Some(2000),
            ..Default::default()
        },
    );
    let eta = r.reals("eta").unwrap();
    let freq = r.reals("freq").unwrap();
    for (e, f) in eta.iter().zip(&freq) {
        if *e >= 2.0 {
            assert_eq!(*f, 0.0);
        }
    }
    assert_eq!(r.check("beyond-2A").unwrap().status, Status::Pass);
    assert_eq!(r.check("bound-validity").unwrap().status, Status::Pass);
}

#[test]
fn bernstein_deviations_vanish_out_of_range() {
    let r = report(
        ExperimentKind::ExpBernstein,
        Settings {
            m: Some(vec![16]),
            level: Some(1),
            eps: Some(vec![0.05, 0.5, 1.6, 2.5]),
            replications: Some(2000),
            ..Default::default()
        },
    );
    let eps = r.reals("eps").unwrap();
    let alpha = r.reals("alpha_freq").unwrap();
    let rho = r.reals("rho_freq").unwrap();
    for i in 0..eps.len() {
        if eps[i] > 1.5 {
            assert_eq!(alpha[i], 0.0);
            assert_eq!(rho[i], 0.0);
        }
    }
    assert_eq!(r.check("trivial-zero").unwrap().status, Status::Pass);
    assert!(r.passed());
}

#[test]
fn bernstein_single_cell() {
    let r = report(
        ExperimentKind::ExpBernstein,
        Settings {
            m: Some(vec![64]),
            cell: Some(3),
            replications: Some(100),
            ..Default::default()
        },
    );
    assert_eq!(r.rows.len(), 5);
    assert!(r.reals("cell").unwrap().iter().all(|&c| c == 3.0));
}

#[test]
fn oracle_flags_constant_truth_with_empty_cells() {
    let r = report(
        ExperimentKind::Oracle,
        Settings {
            problem: Some("two-atom-constant".into()),
            replications: Some(1000),
            ..Default::default()
        },
    );
    assert_eq!(r.check("constant-zero").unwrap().status, Status::Skipped);
    let exact = r.reals("exact").unwrap();
    for (m, e) in (1..=4).zip(exact) {
        assert!((e - 2.0 * 0.5f64.powi(m) * 0.125).abs() < 1e-15);
    }
}

#[test]
fn validate_reports_every_family() {
    let r = report(
        ExperimentKind::Validate,
        Settings {
            dim: Some(2),
            mc_points: Some(500),
            ..Default::default()
        },
    );
    assert_eq!(r.rows.len(), 5);
    assert!(r.passed());
    let sizes = r.reals("N").unwrap();
    assert_eq!(sizes, vec![1.0, 4.0, 16.0, 64.0, 256.0]);
}
