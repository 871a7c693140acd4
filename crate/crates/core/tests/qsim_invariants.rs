mod support {
    pub mod statevector;
}

use dqfl_core::qnn::{CircuitSpec, EncodingLayout};
use dqfl_core::qsim::{run_circuit, simulate_dense, DensityMatrix, GateKind, NoiseConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::statevector::{density_entry, expectations_z, random_circuit, statevector};

fn check_physical(rho: &DensityMatrix, context: &str) {
    let tr = rho.trace();
    assert!((tr.re - 1.0).abs() < 1e-12 && tr.im.abs() < 1e-12, "{context}: trace {tr}");
    assert!(rho.hermiticity_error() < 1e-12, "{context}: hermiticity {}", rho.hermiticity_error());
    for i in 0..rho.dim() {
        assert!(rho.entry(i, i).re > -1e-12, "{context}: negative population");
    }
    let p = rho.purity();
    assert!(p <= 1.0 + 1e-12 && p >= 1.0 / rho.dim() as f64 - 1e-12, "{context}: purity {p}");
}

#[test]
fn every_step_stays_physical() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..100 {
        let n_gates = rng.random_range(5..40);
        let (circuit, params) = random_circuit(&mut rng, 4, n_gates);
        let noise = NoiseConfig {
            p_depol_1q: rng.random_range(0.0..0.2),
            p_depol_2q: rng.random_range(0.0..0.3),
            p_meas_flip: 0.01,
            enabled: true,
        };
        let mut rho = DensityMatrix::new(4).unwrap();
        for (k, g) in circuit.variational.iter().enumerate() {
            rho.apply_gate_in_place(g, params[k], &NoiseConfig::off()).unwrap();
            check_physical(&rho, &format!("trial {trial} gate {k}"));
            let p = noise.gate_depolarizing(g.kind);
            rho.depolarize(&g.qubits(), p).unwrap();
            check_physical(&rho, &format!("trial {trial} channel {k}"));
        }
    }
}

#[test]
fn noise_free_matches_statevector_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..100 {
        let n_gates = rng.random_range(1..30);
        let (circuit, params) = random_circuit(&mut rng, 4, n_gates);
        let rho = simulate_dense(&params, &[], &circuit, &NoiseConfig::off()).unwrap();
        let psi = statevector(&circuit, &params, &[]);
        for r in 0..16 {
            for c in 0..16 {
                let d = (rho.entry(r, c) - density_entry(&psi, r, c)).norm();
                assert!(d < 1e-10, "entry ({r},{c}) off by {d}");
            }
        }
    }
}

#[test]
fn full_circuit_outputs_match_oracle() {
    let layout = EncodingLayout::default();
    let circuit = CircuitSpec::default().compile(&layout).unwrap();
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params: Vec<f64> = (0..96).map(|_| rng.random_range(-3.2..3.2)).collect();
        let feats: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..=1.0)).collect();
        let x = layout.encode(&feats).unwrap();
        let out = run_circuit(&params, &x, &circuit, &NoiseConfig::off()).unwrap();
        let expected = expectations_z(&statevector(&circuit, &params, &x), 4);
        for (a, b) in out.iter().zip(&expected) {
            assert!((-1.0..=1.0).contains(a));
            assert!((a - b).abs() < 1e-10, "seed {seed}: {a} vs {b}");
        }
    }
}

#[test]
fn noisy_outputs_contract_toward_zero() {
    let layout = EncodingLayout::default();
    let circuit = CircuitSpec::default().compile(&layout).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params: Vec<f64> = (0..96).map(|_| rng.random_range(-0.5..0.5)).collect();
    let x = layout.encode(&[0.1; 8]).unwrap();
    let clean = run_circuit(&params, &x, &circuit, &NoiseConfig::off()).unwrap();
    let heavy = NoiseConfig {
        p_depol_1q: 0.05,
        p_depol_2q: 0.1,
        p_meas_flip: 0.05,
        enabled: true,
    };
    let noisy = run_circuit(&params, &x, &circuit, &heavy).unwrap();
    let norm = |v: &[f64]| v.iter().map(|z| z * z).sum::<f64>();
    assert!(norm(&noisy) < norm(&clean));
}

#[test]
fn oracle_self_check() {
    // RX(pi) flips qubit 0, then CRX(pi) controlled on it flips qubit 1
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (mut circuit, _) = random_circuit(&mut rng, 2, 2);
    circuit.variational[0] = dqfl_core::GateOp::single(GateKind::Rx, 0, dqfl_core::qsim::AngleSource::Param(0));
    circuit.variational[1] = dqfl_core::GateOp::crx(0, 1, dqfl_core::qsim::AngleSource::Param(1));
    let psi = statevector(&circuit, &[std::f64::consts::PI, std::f64::consts::PI], &[]);
    let z = expectations_z(&psi, 2);
    assert!((z[0] + 1.0).abs() < 1e-12 && (z[1] + 1.0).abs() < 1e-12);
}
