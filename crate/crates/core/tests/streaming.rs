use sicshadow::estimators::{estimate_purity, estimate_renyi2, FidelityTracker};
use sicshadow::povm::ShotSampler;
use sicshadow::qstate::library;
use sicshadow::stream::{game, read_shots, run_online, shotfile, write_shots, OnlineConfig, Quantity, ShotFileHeader};
use sicshadow::{rng, Bipartition, FrameName, ShotRecord, SicFrame};

fn ame_shots(m: u64, seed: u64) -> Vec<sicshadow::SicShot> {
    let psi = library::make_ame5();
    ShotSampler::pure(&psi).sample_sic_many(&SicFrame::standard(), m, &mut rng::stream(seed, rng::streams::SAMPLING))
}

#[test]
fn online_estimates_equal_offline_ones() {
    let f = SicFrame::standard();
    let shots = ame_shots(3000, 2);
    let psi = library::make_ame5();
    let part = Bipartition::new(&[1, 3], 5).unwrap();
    let mut cfg = OnlineConfig::new(vec![
        Quantity::Fidelity {
            label: "ame5".into(),
            target: psi.clone(),
        },
        Quantity::Purity { subset: vec![0, 1, 2, 3, 4] },
        Quantity::Renyi { part: part.clone() },
    ]);
    cfg.stopping = None;
    cfg.full_batch = Some(10);
    cfg.interval = 250;
    let out = run_online(&f, 5, shots.iter().cloned().map(Ok), &cfg, |_| Ok(())).unwrap();
    assert_eq!(out.shots, 3000);
    assert!(!out.converged);
    let rows = out.last_rows();
    let mut ft = FidelityTracker::new(&f, &psi);
    shots.iter().for_each(|s| ft.add(s));
    let offline = [
        ft.estimate().unwrap().value,
        estimate_purity(&f, &shots, &[0, 1, 2, 3, 4], 10).unwrap().value,
        estimate_renyi2(&f, &shots, &part, 1).unwrap().value,
    ];
    for (r, v) in rows.iter().zip(offline) {
        assert!((r.value - v).abs() < 1e-9, "{} {} vs {v}", r.quantity, r.value);
    }
}

#[test]
fn ame5_stream_reaches_expected_entropies() {
    let f = SicFrame::standard();
    let shots = ame_shots(20_000, 7);
    let mut q: Vec<Quantity> = vec![Quantity::Fidelity {
        label: "ame5".into(),
        target: library::make_ame5(),
    }];
    q.extend(
        sicshadow::estimators::all_bipartitions(5, 2)
            .unwrap()
            .into_iter()
            .map(|part| Quantity::Renyi { part }),
    );
    let mut cfg = OnlineConfig::new(q);
    cfg.stopping = None;
    let out = run_online(&f, 5, shots.into_iter().map(Ok), &cfg, |_| Ok(())).unwrap();
    let rows = out.last_rows();
    assert_eq!(rows.len(), 16);
    assert!((rows[0].value - 1.0).abs() < 0.02);
    for r in &rows[1..] {
        let side = r.subset.split('|').next().unwrap().split(',').count();
        let want = side.min(5 - side) as f64;
        assert!((r.value - want).abs() < 0.1, "{} {}", r.subset, r.value);
    }
}

#[test]
fn source_errors_abort_the_run() {
    let f = SicFrame::standard();
    let cfg = OnlineConfig::new(vec![Quantity::Purity { subset: vec![0] }]);
    let src = vec![
        Ok(sicshadow::SicShot::new(vec![0, 1]).unwrap()),
        Err(sicshadow::Error::Parse {
            line: 4,
            msg: "bad digit".into(),
        }),
    ];
    assert!(run_online(&f, 2, src, &cfg, |_| Ok(())).is_err());
    let wrong = vec![Ok(sicshadow::SicShot::new(vec![0, 1, 2]).unwrap())];
    assert!(run_online(&f, 2, wrong, &cfg, |_| Ok(())).is_err());
}

#[test]
fn shot_files_round_trip_and_report_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("shots.tomo");
    let header = ShotFileHeader {
        n_qubits: 5,
        povm: shotfile::PovmLabel::Sic,
        frame: FrameName::Standard,
        seed: 3,
        batch: 1,
    };
    let recs: Vec<ShotRecord> = ame_shots(100_000, 3).into_iter().map(ShotRecord::Sic).collect();
    write_shots(&path, &header, &recs).unwrap();
    let (h, back) = read_shots(&path).unwrap();
    assert_eq!(h, header);
    assert_eq!(back, recs);

    let bad = dir.path().join("bad.tomo");
    std::fs::write(
        &bad,
        "#TOMO v1\n{\"n_qubits\":4,\"povm\":\"sic\",\"frame\":\"standard\",\"seed\":0,\"batch\":1}\n0123\n0142\n",
    )
    .unwrap();
    match read_shots(&bad) {
        Err(sicshadow::Error::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("expected a parse error, got {other:?}"),
    }
    let empty = dir.path().join("empty.tomo");
    std::fs::write(
        &empty,
        "#TOMO v1\n{\"n_qubits\":2,\"povm\":\"sic\",\"frame\":\"rotated\",\"seed\":0,\"batch\":1}\n",
    )
    .unwrap();
    assert!(read_shots(&empty).unwrap().1.is_empty());
}

#[test]
fn games_are_deterministic_and_candidates_orthogonal() {
    let c = game::candidates();
    for i in 0..16 {
        for j in 0..16 {
            if i != j {
                let f = c[i].to_density().fidelity_pure(&c[j]).unwrap();
                assert!(f.abs() < 1e-12);
            }
        }
    }
    for seed in 0..5 {
        let a = game::run_game(seed, 5, game::DEFAULT_SHOT_CAP).unwrap();
        let b = game::run_game(seed, 5, game::DEFAULT_SHOT_CAP).unwrap();
        assert_eq!((a.secret, a.winner, a.shots), (b.secret, b.winner, b.shots));
        assert_eq!(a.transcript.len() as u64, a.shots);
    }
    let quick = game::run_game(1, 1, game::DEFAULT_SHOT_CAP).unwrap();
    assert!(quick.winner.is_some());
}
