use rlgl_web::{mdp_report, replay_frames, solve_report};

#[test]
fn two_wheels_matches_exact() {
    let r = solve_report("two-wheels", false, 0.0, "theta:1", 1e-12).unwrap();
    let exact = r.exact.expect("small chain");
    assert!(r.pi.iter().zip(&exact).all(|(a, b)| (a - b).abs() < 1e-10));
    // cost never decreases along either curve
    for c in [&r.rlgl, &r.power] {
        assert!(c.points.windows(2).all(|w| w[1].0 >= w[0].0));
    }
}

#[test]
fn replay_conserves_cash_and_keeps_identity() {
    let frames = replay_frames("two-wheels", false, 0.0, "rand:4", 3, 50).unwrap();
    assert_eq!(frames.len(), 51);
    let l1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
    for f in &frames {
        assert!(f.cash.iter().sum::<f64>().abs() < 1e-13);
    }
    assert!(frames.windows(2).all(|w| l1(&w[1].cash) <= l1(&w[0].cash) + 1e-15));
    assert!(frames.iter().skip(1).all(|f| f.green.len() == 1));
    assert!(replay_frames("two-wheels", false, 0.0, "rr", 12, 1).is_err());
}

#[test]
fn policy_report_is_json_ready() {
    let r = mdp_report([50, 20, 10], 0.1, 0.01, 1e-8, 300, 21).unwrap();
    let text = serde_json::to_string(&r).unwrap();
    assert!(text.contains("\"trajectory\""));
    assert!(r.trajectory.iter().all(|&(a, _, z2)| (1..=7).contains(&a) && z2.abs() <= 2.0 + 1e-9));
    assert!(mdp_report([10, 20, 5], 0.1, 0.01, 1e-8, 300, 21).is_err());
}
