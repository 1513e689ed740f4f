use approx::assert_relative_eq;
use sfedsim::engine::{dc_operating_point, solve_linear, transient, DenseMatrix, SolverError, SolverOptions};
use sfedsim::netlist::{parse_netlist, ModelLibrary};

fn lib() -> ModelLibrary {
    ModelLibrary::with_default(sfedsim::SFedParams::default())
}

#[test]
fn divider_operating_point() {
    let c = parse_netlist("V1 a 0 1.2\nR1 a b 1k\nR2 b 0 3k\n.op\n").unwrap();
    let op = dc_operating_point(&c, &lib(), &SolverOptions::default()).unwrap();
    assert_relative_eq!(op.voltage("b").unwrap(), 0.9, max_relative = 1e-6);
    assert_relative_eq!(op.voltage("a").unwrap(), 1.2, max_relative = 1e-9);
    // source current magnitude 1.2 V / 4 kOhm
    assert_relative_eq!(op.current("V1").unwrap().abs(), 0.3e-3, max_relative = 1e-6);
}

#[test]
fn rc_charging_matches_exponential() {
    // current step of 1 uA into 1 kOhm || 1 pF, rise centred at 0.5 ps
    let c = parse_netlist("I1 0 b pulse(1u 100n 200n 1p 1p 1 0)\nR1 b 0 1k\nC1 b 0 1p\n").unwrap();
    let w = transient(&c, &lib(), &SolverOptions::default(), 5e-9, 1e-12).unwrap();
    let v = w.node_trace("b").unwrap();
    let tau = 1e-9;
    for (k, &t) in w.times.iter().enumerate() {
        if t < 0.05e-9 {
            continue;
        }
        let want = 1e-3 * (1.0 - (-(t - 0.5e-12) / tau).exp());
        assert!(
            (v[k] - want).abs() <= 1e-3 * want.abs() + 2e-9,
            "t={t:e} got {} want {want}",
            v[k]
        );
    }
}

#[test]
fn charge_integration_on_capacitor() {
    let c = parse_netlist("I1 0 m pulse(250n 1n 10n 1p 1p 1 0)\nC1 m 0 1f\n").unwrap();
    let w = transient(&c, &lib(), &SolverOptions::default(), 2e-9, 1e-12).unwrap();
    let v = w.node_trace("m").unwrap();
    let last = *v.last().unwrap();
    // 250 nA for (1 ns - 1 ps) into 1 fF, gmin leak negligible
    assert_relative_eq!(last, 250e-9 * (1e-9 - 1e-12) / 1e-15, max_relative = 1e-3);
}

#[test]
fn invalid_transient_interval_rejected() {
    let c = parse_netlist("R1 a 0 1k\nV1 a 0 1\n").unwrap();
    let err = transient(&c, &lib(), &SolverOptions::default(), 1e-9, 2e-9).unwrap_err();
    assert!(matches!(err, SolverError::InvalidOptions(_)));
}

#[test]
fn lu_solves_diagonally_dominant_system() {
    let n = 12;
    let mut a = DenseMatrix::<f64>::zeros(n);
    let mut seed = 12345u64;
    let mut rnd = || {
        seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            if i != j {
                a[(i, j)] = rnd();
                row += a[(i, j)].abs();
            }
        }
        a[(i, i)] = row + 1.0;
    }
    let b: Vec<f64> = (0..n).map(|_| rnd()).collect();
    let x = solve_linear(&a, &b).unwrap();
    let ax = a.mul_vec(&x);
    for i in 0..n {
        assert!((ax[i] - b[i]).abs() < 1e-12);
    }
}
