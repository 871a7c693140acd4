use num_complex::Complex64;

use super::{check_qubits, AngleSource, Circuit, DensityMatrix, GateKind, NoiseConfig};
use crate::error::{Error, Result};

// Pauli digits. A string on n qubits is the base-4 number sum_q d_q 4^q.
const PX: u8 = 1;
const PY: u8 = 2;
const PZ: u8 = 3;

fn digit(index: usize, qubit: usize) -> u8 {
    ((index >> (2 * qubit)) & 3) as u8
}

/// Single-qubit product `a b = i^phase c`.
fn mul1(a: u8, b: u8) -> (u8, u8) {
    if a == 0 || b == 0 || a == b {
        return (a ^ b, 0);
    }
    let cyclic = matches!((a, b), (PX, PY) | (PY, PZ) | (PZ, PX));
    (a ^ b, if cyclic { 1 } else { 3 })
}

/// Planar rotations induced by conjugation with `exp(-i phi P / 2)`.
///
/// Every string `Q` anticommuting with `P` pairs with `R = -i P Q / s`
/// (`s = +-1`) and the coefficients rotate as
/// `c_Q <- cos c_Q - s sin c_R`, `c_R <- cos c_R + s sin c_Q`.
#[derive(Debug, Clone)]
struct RotationTable {
    generator: Vec<u8>,
    q: Vec<u32>,
    r: Vec<u32>,
    s: Vec<f64>,
}

impl RotationTable {
    fn new(generator: Vec<u8>) -> Self {
        let n = generator.len();
        let (mut q, mut r, mut s) = (Vec::new(), Vec::new(), Vec::new());
        for idx in 0..1usize << (2 * n) {
            let mut phase = 0u8;
            let mut other = 0usize;
            for (qubit, &g) in generator.iter().enumerate() {
                let (d, ph) = mul1(g, digit(idx, qubit));
                phase = (phase + ph) % 4;
                other |= (d as usize) << (2 * qubit);
            }
            if phase % 2 == 1 && idx < other {
                q.push(idx as u32);
                r.push(other as u32);
                s.push(if phase == 1 { 1.0 } else { -1.0 });
            }
        }
        RotationTable { generator, q, r, s }
    }

    fn rotate(&self, c: &mut [f64], cos: f64, sin: f64) {
        for k in 0..self.q.len() {
            let (qi, ri) = (self.q[k] as usize, self.r[k] as usize);
            let ss = self.s[k] * sin;
            let (cq, cr) = (c[qi], c[ri]);
            c[qi] = cos * cq - ss * cr;
            c[ri] = cos * cr + ss * cq;
        }
    }

    /// Transpose of [`Self::rotate`], used to move observables backwards.
    fn rotate_adjoint(&self, o: &mut [f64], cos: f64, sin: f64) {
        for k in 0..self.q.len() {
            let (qi, ri) = (self.q[k] as usize, self.r[k] as usize);
            let ss = self.s[k] * sin;
            let (oq, or) = (o[qi], o[ri]);
            o[qi] = cos * oq + ss * or;
            o[ri] = cos * or - ss * oq;
        }
    }

    /// `<o, G c>` where `G` is the derivative generator of the rotation.
    fn generator_overlap(&self, o: &[f64], c: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.q.len() {
            let (qi, ri) = (self.q[k] as usize, self.r[k] as usize);
            acc += self.s[k] * (o[ri] * c[qi] - o[qi] * c[ri]);
        }
        acc
    }
}

/// Generator digits for a rotation gate, with the angle multiplier.
///
/// CRX(theta) = exp(-i theta/4 X_t) exp(+i theta/4 Z_c X_t): two commuting
/// Pauli rotations by theta/2 and -theta/2.
fn generators(kind: GateKind, target: usize, control: Option<usize>, n: usize) -> Vec<(Vec<u8>, f64)> {
    let single = |d: u8| {
        let mut g = vec![0u8; n];
        g[target] = d;
        g
    };
    match kind {
        GateKind::Rx => vec![(single(PX), 1.0)],
        GateKind::Ry => vec![(single(PY), 1.0)],
        GateKind::Rz => vec![(single(PZ), 1.0)],
        GateKind::Crx => {
            let mut zx = single(PX);
            zx[control.expect("validated CRX has a control")] = PZ;
            vec![(single(PX), 0.5), (zx, -0.5)]
        }
    }
}

fn depolarizing_factors(n: usize, qubits: &[usize], p: f64) -> Vec<f64> {
    (0..1usize << (2 * n))
        .map(|idx| {
            if qubits.iter().any(|&q| digit(idx, q) != 0) {
                1.0 - p
            } else {
                1.0
            }
        })
        .collect()
}

/// A state in the Pauli basis: `rho = 2^-n sum_P c_P P`, so `c_P = tr(rho P)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliState {
    n_qubits: usize,
    coeffs: Vec<f64>,
}

impl PauliState {
    pub fn ground(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let mut coeffs = vec![0.0; 1 << (2 * n_qubits)];
        // |0><0| = (I + Z)/2 on every qubit
        for (idx, c) in coeffs.iter_mut().enumerate() {
            if (0..n_qubits).all(|q| matches!(digit(idx, q), 0 | PZ)) {
                *c = 1.0;
            }
        }
        Ok(PauliState { n_qubits, coeffs })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `tr(rho Z_qubit)` with no readout noise.
    pub fn expectation_z(&self, qubit: usize) -> f64 {
        self.coeffs[(PZ as usize) << (2 * qubit)]
    }

    pub fn trace(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn to_density_matrix(&self) -> DensityMatrix {
        let n = self.n_qubits;
        let dim = 1usize << n;
        let norm = 1.0 / dim as f64;
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (idx, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let flip: usize = (0..n)
                .filter(|&q| matches!(digit(idx, q), PX | PY))
                .map(|q| 1 << q)
                .sum();
            for row in 0..dim {
                let col = row ^ flip;
                let mut v = Complex64::new(c * norm, 0.0);
                for q in 0..n {
                    let bit = (row >> q) & 1;
                    match digit(idx, q) {
                        PY => v *= if bit == 0 { Complex64::new(0.0, -1.0) } else { Complex64::new(0.0, 1.0) },
                        PZ if bit == 1 => v = -v,
                        _ => {}
                    }
                }
                entries[row * dim + col] += v;
            }
        }
        DensityMatrix::from_entries(n, entries).expect("qubit count already checked")
    }

    pub fn from_density_matrix(rho: &DensityMatrix) -> Self {
        let n = rho.n_qubits();
        let dim = rho.dim();
        let coeffs = (0..1usize << (2 * n))
            .map(|idx| {
                let flip: usize = (0..n)
                    .filter(|&q| matches!(digit(idx, q), PX | PY))
                    .map(|q| 1 << q)
                    .sum();
                // tr(rho P) = sum_row rho[row][col] P[col][row], col = row ^ flip
                let mut acc = Complex64::new(0.0, 0.0);
                for row in 0..dim {
                    let col = row ^ flip;
                    let mut p = Complex64::new(1.0, 0.0);
                    for q in 0..n {
                        let bit = (col >> q) & 1;
                        match digit(idx, q) {
                            PY => p *= if bit == 0 { Complex64::new(0.0, -1.0) } else { Complex64::new(0.0, 1.0) },
                            PZ if bit == 1 => p = -p,
                            _ => {}
                        }
                    }
                    acc += rho.entry(row, col) * p;
                }
                acc.re
            })
            .collect();
        PauliState { n_qubits: n, coeffs }
    }
}

#[derive(Debug, Clone)]
enum Op {
    Rotate { table: usize, param: usize, scale: f64 },
    Scale { factors: usize },
}

#[derive(Debug, Clone)]
struct EncodingOp {
    qubit: usize,
    table: usize,
    input: usize,
    keep: f64,
}

/// A circuit compiled to Pauli-basis sweeps for one noise setting.
#[derive(Debug, Clone)]
pub struct PauliEngine {
    n_qubits: usize,
    n_params: usize,
    n_inputs: usize,
    dim: usize,
    tables: Vec<RotationTable>,
    bloch_tables: Vec<RotationTable>,
    scalings: Vec<Vec<f64>>,
    encoding: Vec<EncodingOp>,
    ops: Vec<Op>,
    readout: f64,
}

impl PauliEngine {
    pub fn new(circuit: &Circuit, noise: &NoiseConfig) -> Result<Self> {
        circuit.validate()?;
        noise.validate()?;
        let n = circuit.n_qubits;
        let bloch_tables: Vec<RotationTable> = [PX, PY, PZ]
            .iter()
            .map(|&d| RotationTable::new(vec![d]))
            .collect();
        let encoding = circuit
            .encoding
            .iter()
            .map(|g| {
                let AngleSource::Input(input) = g.angle else {
                    unreachable!("validated encoding gate")
                };
                let table = match g.kind {
                    GateKind::Rx => 0,
                    GateKind::Ry => 1,
                    _ => 2,
                };
                EncodingOp {
                    qubit: g.target,
                    table,
                    input,
                    keep: 1.0 - noise.gate_depolarizing(g.kind),
                }
            })
            .collect();

        let mut engine = PauliEngine {
            n_qubits: n,
            n_params: circuit.n_params,
            n_inputs: circuit.n_inputs,
            dim: 1 << (2 * n),
            tables: Vec::new(),
            bloch_tables,
            scalings: Vec::new(),
            encoding,
            ops: Vec::new(),
            readout: noise.readout_factor(),
        };
        for g in &circuit.variational {
            let AngleSource::Param(param) = g.angle else {
                unreachable!("validated variational gate")
            };
            for (generator, scale) in generators(g.kind, g.target, g.control, n) {
                let table = engine.table_for(generator);
                engine.ops.push(Op::Rotate { table, param, scale });
            }
            let p = noise.gate_depolarizing(g.kind);
            if p > 0.0 {
                engine.scalings.push(depolarizing_factors(n, &g.qubits(), p));
                engine.ops.push(Op::Scale {
                    factors: engine.scalings.len() - 1,
                });
            }
        }
        Ok(engine)
    }

    fn table_for(&mut self, generator: Vec<u8>) -> usize {
        if let Some(i) = self.tables.iter().position(|t| t.generator == generator) {
            return i;
        }
        self.tables.push(RotationTable::new(generator));
        self.tables.len() - 1
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Encoded product state as Pauli coefficients, encoding noise included.
    pub fn encode(&self, inputs: &[f64]) -> Result<PauliState> {
        if inputs.len() != self.n_inputs {
            return Err(Error::config(format!(
                "expected {} encoding angles, got {}",
                self.n_inputs,
                inputs.len()
            )));
        }
        if let Some(bad) = inputs.iter().find(|a| !a.is_finite()) {
            return Err(Error::numeric(format!("non-finite encoding angle {bad}")));
        }
        let mut bloch = vec![[1.0, 0.0, 0.0, 1.0]; self.n_qubits];
        for op in &self.encoding {
            let (sin, cos) = inputs[op.input].sin_cos();
            let v = &mut bloch[op.qubit];
            self.bloch_tables[op.table].rotate(v, cos, sin);
            for c in &mut v[1..] {
                *c *= op.keep;
            }
        }
        let mut coeffs = vec![0.0; self.dim];
        coeffs[0] = 1.0;
        let mut len = 1usize;
        for v in &bloch {
            for d in (1..4).rev() {
                for k in 0..len {
                    coeffs[d * len + k] = coeffs[k] * v[d];
                }
            }
            len *= 4;
        }
        Ok(PauliState {
            n_qubits: self.n_qubits,
            coeffs,
        })
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params {
            return Err(Error::config(format!(
                "expected {} parameters, got {}",
                self.n_params,
                params.len()
            )));
        }
        if let Some(bad) = params.iter().find(|a| !a.is_finite()) {
            return Err(Error::numeric(format!("non-finite parameter {bad}")));
        }
        Ok(())
    }

    /// Full Schrodinger-picture evolution of `|0...0>`.
    pub fn evolve(&self, params: &[f64], inputs: &[f64]) -> Result<PauliState> {
        self.check_params(params)?;
        let mut state = self.encode(inputs)?;
        for op in &self.ops {
            self.apply(op, params, &mut state.coeffs);
        }
        Ok(state)
    }

    fn apply(&self, op: &Op, params: &[f64], c: &mut [f64]) {
        match *op {
            Op::Rotate { table, param, scale } => {
                let (sin, cos) = (params[param] * scale).sin_cos();
                self.tables[table].rotate(c, cos, sin);
            }
            Op::Scale { factors } => {
                for (x, f) in c.iter_mut().zip(&self.scalings[factors]) {
                    *x *= f;
                }
            }
        }
    }

    /// Fixes the parameters and precomputes the Heisenberg-picture readout
    /// observables of the first `n_outputs` qubits at every rotation.
    pub fn bind(&self, params: &[f64], n_outputs: usize) -> Result<BoundCircuit<'_>> {
        self.check_params(params)?;
        if n_outputs == 0 || n_outputs > self.n_qubits {
            return Err(Error::config(format!(
                "readout of {n_outputs} qubits on a {}-qubit register",
                self.n_qubits
            )));
        }
        let trig: Vec<(f64, f64)> = self
            .ops
            .iter()
            .map(|op| match *op {
                Op::Rotate { param, scale, .. } => {
                    let (s, c) = (params[param] * scale).sin_cos();
                    (c, s)
                }
                Op::Scale { .. } => (1.0, 0.0),
            })
            .collect();
        // slot 0 is the encoded input; slot k+1 follows the k-th rotation.
        let mut slot_of = vec![usize::MAX; self.ops.len()];
        let mut n_slots = 1;
        for (j, op) in self.ops.iter().enumerate() {
            if matches!(op, Op::Rotate { .. }) {
                slot_of[j] = n_slots;
                n_slots += 1;
            }
        }
        let dim = self.dim;
        let mut observables = vec![0.0; n_outputs * n_slots * dim];
        for out in 0..n_outputs {
            let base = out * n_slots * dim;
            let mut o = vec![0.0; dim];
            o[(PZ as usize) << (2 * out)] = self.readout;
            for (j, op) in self.ops.iter().enumerate().rev() {
                match *op {
                    Op::Rotate { table, .. } => {
                        let at = base + slot_of[j] * dim;
                        observables[at..at + dim].copy_from_slice(&o);
                        let (c, s) = trig[j];
                        self.tables[table].rotate_adjoint(&mut o, c, s);
                    }
                    Op::Scale { factors } => {
                        for (x, f) in o.iter_mut().zip(&self.scalings[factors]) {
                            *x *= f;
                        }
                    }
                }
            }
            observables[base..base + dim].copy_from_slice(&o);
        }
        Ok(BoundCircuit {
            engine: self,
            n_outputs,
            n_slots,
            trig,
            observables,
        })
    }
}

/// An engine with parameters fixed; evaluates readouts and batch gradients.
#[derive(Debug)]
pub struct BoundCircuit<'a> {
    engine: &'a PauliEngine,
    n_outputs: usize,
    n_slots: usize,
    trig: Vec<(f64, f64)>,
    observables: Vec<f64>,
}

impl<'a> BoundCircuit<'a> {
    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    fn observable(&self, out: usize, slot: usize) -> &[f64] {
        let dim = self.engine.dim;
        let at = (out * self.n_slots + slot) * dim;
        &self.observables[at..at + dim]
    }

    pub fn encode(&self, inputs: &[f64]) -> Result<PauliState> {
        self.engine.encode(inputs)
    }

    /// Readout `<Z_i>` (bit-flip contraction included) for an encoded input.
    pub fn readout_encoded(&self, encoded: &PauliState) -> Vec<f64> {
        (0..self.n_outputs)
            .map(|out| {
                self.observable(out, 0)
                    .iter()
                    .zip(&encoded.coeffs)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn readout(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.readout_encoded(&self.encode(inputs)?))
    }

    pub fn accumulator(&self) -> GradientAccumulator {
        GradientAccumulator {
            weighted: vec![vec![0.0; self.engine.dim]; self.n_outputs],
            dim: self.engine.dim,
        }
    }

    /// Gradient of `sum_samples sum_i w_si <Z_i>` where the accumulator holds
    /// `sum_s w_si * encoded_s` per output. Readout is linear in the encoded
    /// state, so one forward sweep per output serves the whole batch.
    pub fn gradient(&self, acc: &GradientAccumulator) -> Vec<f64> {
        let engine = self.engine;
        let mut grad = vec![0.0; engine.n_params];
        for (out, weighted) in acc.weighted.iter().enumerate() {
            if weighted.iter().all(|&w| w == 0.0) {
                continue;
            }
            let mut c = weighted.clone();
            let mut slot = 0;
            for (j, op) in engine.ops.iter().enumerate() {
                match *op {
                    Op::Rotate { table, param, scale } => {
                        let (cos, sin) = self.trig[j];
                        engine.tables[table].rotate(&mut c, cos, sin);
                        slot += 1;
                        let o = self.observable(out, slot);
                        grad[param] += scale * engine.tables[table].generator_overlap(o, &c);
                    }
                    Op::Scale { factors } => {
                        for (x, f) in c.iter_mut().zip(&engine.scalings[factors]) {
                            *x *= f;
                        }
                    }
                }
            }
        }
        grad
    }
}

/// Per-output weighted sums of encoded states for a batch.
#[derive(Debug, Clone)]
pub struct GradientAccumulator {
    weighted: Vec<Vec<f64>>,
    dim: usize,
}

impl GradientAccumulator {
    /// Adds one sample with readout weights `d_out` (e.g. `d loss / d <Z_i>`).
    pub fn add(&mut self, encoded: &PauliState, d_out: &[f64]) -> Result<()> {
        if d_out.len() != self.weighted.len() || encoded.coeffs.len() != self.dim {
            return Err(Error::config(format!(
                "accumulator expects {} readout weights",
                self.weighted.len()
            )));
        }
        for (acc, &w) in self.weighted.iter_mut().zip(d_out) {
            if w == 0.0 {
                continue;
            }
            for (a, e) in acc.iter_mut().zip(&encoded.coeffs) {
                *a += w * e;
            }
        }
        Ok(())
    }
}
