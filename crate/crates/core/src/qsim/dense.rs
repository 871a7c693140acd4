use num_complex::Complex64;

use super::{check_qubits, GateKind, GateOp, NoiseConfig};
use crate::error::{Error, Result};

type C = Complex64;

/// Dense density matrix of an `n`-qubit register, row-major.
///
/// Basis index bit `q` is the computational value of qubit `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    dim: usize,
    entries: Vec<C>,
}

impl DensityMatrix {
    /// `|0...0><0...0|`.
    pub fn new(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        let mut entries = vec![C::new(0.0, 0.0); dim * dim];
        entries[0] = C::new(1.0, 0.0);
        Ok(DensityMatrix {
            n_qubits,
            dim,
            entries,
        })
    }

    /// Builds a state from raw row-major entries. No physicality checks.
    pub fn from_entries(n_qubits: usize, entries: Vec<C>) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if entries.len() != dim * dim {
            return Err(Error::config(format!(
                "expected {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Ok(DensityMatrix {
            n_qubits,
            dim,
            entries,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> C {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[C] {
        &self.entries
    }

    pub fn trace(&self) -> C {
        (0..self.dim).map(|i| self.entry(i, i)).sum()
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        // rho Hermitian: tr(rho rho) = sum |rho_ij|^2
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest `|rho_ij - conj(rho_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self.entry(i, j) - self.entry(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Pure functional form: returns the evolved state.
    pub fn apply_gate(&self, gate: &GateOp, angle: f64, noise: &NoiseConfig) -> Result<Self> {
        let mut next = self.clone();
        next.apply_gate_in_place(gate, angle, noise)?;
        Ok(next)
    }

    /// `rho <- U rho U^dagger`, then the gate's depolarizing channel if noise is on.
    pub fn apply_gate_in_place(
        &mut self,
        gate: &GateOp,
        angle: f64,
        noise: &NoiseConfig,
    ) -> Result<()> {
        gate.validate(self.n_qubits)?;
        if !angle.is_finite() {
            return Err(Error::numeric(format!("non-finite gate angle {angle}")));
        }
        let u = rotation(gate.kind, angle);
        self.conjugate_by(&u, gate.target, gate.control);
        let p = noise.gate_depolarizing(gate.kind);
        if p > 0.0 {
            self.depolarize(&gate.qubits(), p)?;
        }
        Ok(())
    }

    /// Applies `u` to `target` (only where `control` is 1 if given) on both sides.
    fn conjugate_by(&mut self, u: &[[C; 2]; 2], target: usize, control: Option<usize>) {
        let dim = self.dim;
        let tbit = 1usize << target;
        let active = |i: usize| control.is_none_or(|c| i & (1 << c) != 0);
        // rows: rho <- U rho
        for i0 in (0..dim).filter(|i| i & tbit == 0 && active(*i)) {
            let i1 = i0 | tbit;
            for j in 0..dim {
                let a = self.entries[i0 * dim + j];
                let b = self.entries[i1 * dim + j];
                self.entries[i0 * dim + j] = u[0][0] * a + u[0][1] * b;
                self.entries[i1 * dim + j] = u[1][0] * a + u[1][1] * b;
            }
        }
        // columns: rho <- rho U^dagger
        for j0 in (0..dim).filter(|j| j & tbit == 0 && active(*j)) {
            let j1 = j0 | tbit;
            for i in 0..dim {
                let a = self.entries[i * dim + j0];
                let b = self.entries[i * dim + j1];
                self.entries[i * dim + j0] = a * u[0][0].conj() + b * u[0][1].conj();
                self.entries[i * dim + j1] = a * u[1][0].conj() + b * u[1][1].conj();
            }
        }
    }

    /// `rho <- (1 - p) rho + p (I/2^k (x) tr_qubits rho)` over the listed qubits.
    pub fn depolarize(&mut self, qubits: &[usize], p: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::config(format!("depolarizing probability {p}")));
        }
        if qubits.iter().any(|&q| q >= self.n_qubits) {
            return Err(Error::config(format!("qubits {qubits:?} out of range")));
        }
        let mask: usize = qubits.iter().map(|q| 1usize << q).sum();
        let patterns: Vec<usize> = (0..self.dim).filter(|s| s & !mask == 0).collect();
        let weight = 1.0 / patterns.len() as f64;
        let dim = self.dim;
        let old = self.entries.clone();
        for i in 0..dim {
            for j in 0..dim {
                let mut v = old[i * dim + j] * (1.0 - p);
                if i & mask == j & mask {
                    let (ib, jb) = (i & !mask, j & !mask);
                    let traced: C = patterns
                        .iter()
                        .map(|s| old[(ib | s) * dim + (jb | s)])
                        .sum();
                    v += traced * (p * weight);
                }
                self.entries[i * dim + j] = v;
            }
        }
        Ok(())
    }

    /// `tr(rho Z_qubit)`, contracted by the readout bit-flip when noise is on.
    pub fn expectation_z(&self, qubit: usize, noise: &NoiseConfig) -> Result<f64> {
        if qubit >= self.n_qubits {
            return Err(Error::config(format!(
                "qubit {qubit} out of range for {} qubits",
                self.n_qubits
            )));
        }
        let z: f64 = (0..self.dim)
            .map(|i| {
                let sign = if i & (1 << qubit) == 0 { 1.0 } else { -1.0 };
                sign * self.entry(i, i).re
            })
            .sum();
        Ok(noise.readout_factor() * z)
    }
}

/// `exp(-i angle G / 2)` restricted to the target qubit.
fn rotation(kind: GateKind, angle: f64) -> [[C; 2]; 2] {
    let (s, c) = (angle / 2.0).sin_cos();
    let zero = C::new(0.0, 0.0);
    match kind {
        GateKind::Rx | GateKind::Crx => [
            [C::new(c, 0.0), C::new(0.0, -s)],
            [C::new(0.0, -s), C::new(c, 0.0)],
        ],
        GateKind::Ry => [[C::new(c, 0.0), C::new(-s, 0.0)], [C::new(s, 0.0), C::new(c, 0.0)]],
        GateKind::Rz => [[C::new(c, -s), zero], [zero, C::new(c, s)]],
    }
}
