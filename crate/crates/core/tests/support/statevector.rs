//! Brute-force statevector reference for noise-free circuits.
//!
//! Every gate is expanded to its full `2^n x 2^n` unitary
//! `cos(t/2) I - i sin(t/2) P` (controlled variants act as identity on the
//! control-0 subspace) and applied by matrix-vector product. Deliberately
//! slow and written without reference to the simulator under test.

#![allow(dead_code)]

use dqfl_core::qsim::{AngleSource, Circuit, GateKind, GateOp};
use num_complex::Complex64 as C;
use rand::Rng;

type Mat2 = [[C; 2]; 2];

fn pauli(kind: GateKind) -> Mat2 {
    let (o, z, i) = (C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 1.0));
    match kind {
        GateKind::Rx | GateKind::Crx => [[z, o], [o, z]],
        GateKind::Ry => [[z, -i], [i, z]],
        GateKind::Rz => [[o, z], [z, -o]],
    }
}

fn rotation(kind: GateKind, theta: f64) -> Mat2 {
    let p = pauli(kind);
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let mut m = [[C::new(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for k in 0..2 {
            let id = if r == k { c } else { 0.0 };
            m[r][k] = C::new(id, 0.0) - C::new(0.0, s) * p[r][k];
        }
    }
    m
}

/// Full unitary of one gate on `n` qubits.
pub fn gate_matrix(gate: &GateOp, theta: f64, n: usize) -> Vec<Vec<C>> {
    let dim = 1 << n;
    let u = rotation(gate.kind, theta);
    let t = gate.target;
    let mut m = vec![vec![C::new(0.0, 0.0); dim]; dim];
    for row in 0..dim {
        for col in 0..dim {
            if (row & !(1 << t)) != (col & !(1 << t)) {
                continue;
            }
            let active = gate.control.is_none_or(|c| col & (1 << c) != 0);
            m[row][col] = if active {
                u[(row >> t) & 1][(col >> t) & 1]
            } else if row == col {
                C::new(1.0, 0.0)
            } else {
                C::new(0.0, 0.0)
            };
        }
    }
    m
}

/// Final state of `circuit` from `|0...0>`.
pub fn statevector(circuit: &Circuit, params: &[f64], inputs: &[f64]) -> Vec<C> {
    let dim = 1 << circuit.n_qubits;
    let mut psi = vec![C::new(0.0, 0.0); dim];
    psi[0] = C::new(1.0, 0.0);
    for g in circuit.encoding.iter().chain(&circuit.variational) {
        let theta = match g.angle {
            AngleSource::Param(k) => params[k],
            AngleSource::Input(j) => inputs[j],
        };
        let u = gate_matrix(g, theta, circuit.n_qubits);
        psi = (0..dim).map(|r| (0..dim).map(|k| u[r][k] * psi[k]).sum()).collect();
    }
    psi
}

/// `|psi><psi|` entry.
pub fn density_entry(psi: &[C], row: usize, col: usize) -> C {
    psi[row] * psi[col].conj()
}

/// `<Z_q>` for every qubit.
pub fn expectations_z(psi: &[C], n: usize) -> Vec<f64> {
    (0..n)
        .map(|q| {
            psi.iter()
                .enumerate()
                .map(|(i, a)| if i & (1 << q) == 0 { a.norm_sqr() } else { -a.norm_sqr() })
                .sum()
        })
        .collect()
}

/// Random gate list over every gate kind, with its parameter vector.
pub fn random_circuit<R: Rng>(rng: &mut R, n_qubits: usize, n_gates: usize) -> (Circuit, Vec<f64>) {
    let kinds = [GateKind::Rx, GateKind::Ry, GateKind::Rz, GateKind::Crx];
    let variational: Vec<GateOp> = (0..n_gates)
        .map(|k| {
            let kind = kinds[rng.random_range(0..kinds.len())];
            let target = rng.random_range(0..n_qubits);
            if kind == GateKind::Crx {
                let control = (target + rng.random_range(1..n_qubits)) % n_qubits;
                GateOp::crx(control, target, AngleSource::Param(k))
            } else {
                GateOp::single(kind, target, AngleSource::Param(k))
            }
        })
        .collect();
    let params = (0..n_gates).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
    let circuit = Circuit {
        n_qubits,
        n_params: n_gates,
        n_inputs: 0,
        encoding: vec![],
        variational,
    };
    (circuit, params)
}
