//! Ordered-neurons LSTM: a standard LSTM whose forget and input gates are
//! modulated by monotone "master" gates built with the cumax activation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{LstmGates, LstmParams};
use crate::error::{Error, Result};
use crate::tensorgrad::{Bound, Dropout, ParamId, ParamStore, Tape, Tensor, Var};

/// `cumsum(softmax(x))`: nondecreasing, in `[0, 1]`, last entry 1.
pub fn cumax(tape: &mut Tape, x: Var) -> Var {
    tape.cumax(x)
}

/// How the master input gate is formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MasterInput {
    /// `ĩ = 1 − cumax(W_i·[x; h] + b_i)` with its own parameters.
    #[default]
    Independent,
    /// `ĩ = 1 − f̃`, reusing the master forget gate. The input master
    /// parameters stay registered but receive no gradient.
    ComplementOfForget,
}

/// Affine map feeding one master gate, at chunk resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct MasterParams {
    pub w_x: ParamId,
    pub w_h: ParamId,
    pub bias: ParamId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OnLstmCellParams {
    pub standard: LstmParams,
    pub master_forget: MasterParams,
    pub master_input: MasterParams,
    pub chunk: usize,
    pub mode: MasterInput,
}

/// Everything computed in one step. `master_forget`/`master_input` are at
/// full width `D_m` (chunk entries already repeated).
#[derive(Clone, Copy, Debug)]
pub struct OnLstmStep {
    pub gates: LstmGates,
    pub master_forget: Var,
    pub master_input: Var,
    pub overlap: Var,
    pub forget: Var,
    pub input: Var,
    pub c: Var,
    pub h: Var,
}

impl MasterParams {
    fn register<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        input: usize,
        hidden: usize,
        width: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let k = 1.0 / (hidden as f64).sqrt();
        Ok(MasterParams {
            w_x: store.add(format!("{prefix}.w_x"), Tensor::uniform(&[width, input], k, rng))?,
            w_h: store.add(format!("{prefix}.w_h"), Tensor::uniform(&[width, hidden], k, rng))?,
            bias: store.add(format!("{prefix}.bias"), Tensor::zeros(&[width]))?,
        })
    }

    fn preactivation(&self, tape: &mut Tape, bound: &Bound, x: Var, h: Var) -> Result<Var> {
        let zx = tape.matmul(bound.var(self.w_x), x)?;
        let zh = tape.matmul(bound.var(self.w_h), h)?;
        let z = tape.add(zx, zh)?;
        tape.add(z, bound.var(self.bias))
    }
}

impl OnLstmCellParams {
    pub fn register<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        input: usize,
        hidden: usize,
        chunk: usize,
        mode: MasterInput,
        rng: &mut R,
    ) -> Result<Self> {
        if chunk == 0 || hidden % chunk != 0 {
            return Err(Error::Config(format!(
                "chunk factor {chunk} must divide the hidden size {hidden}"
            )));
        }
        let width = hidden / chunk;
        Ok(OnLstmCellParams {
            standard: LstmParams::register(store, &format!("{prefix}.std"), input, hidden, rng)?,
            master_forget: MasterParams::register(store, &format!("{prefix}.mf"), input, hidden, width, rng)?,
            master_input: MasterParams::register(store, &format!("{prefix}.mi"), input, hidden, width, rng)?,
            chunk,
            mode,
        })
    }

    pub fn input(&self) -> usize {
        self.standard.input
    }

    pub fn hidden(&self) -> usize {
        self.standard.hidden
    }

    /// Master gates `(f̃, ĩ)` at full width.
    pub fn master_gates(&self, tape: &mut Tape, bound: &Bound, x: Var, h: Var) -> Result<(Var, Var)> {
        let zf = self.master_forget.preactivation(tape, bound, x, h)?;
        let cf = cumax(tape, zf);
        let ci = match self.mode {
            MasterInput::Independent => {
                let zi = self.master_input.preactivation(tape, bound, x, h)?;
                cumax(tape, zi)
            }
            MasterInput::ComplementOfForget => cf,
        };
        let mi = tape.one_minus(ci);
        Ok((tape.repeat(cf, self.chunk)?, tape.repeat(mi, self.chunk)?))
    }

    pub fn step(&self, tape: &mut Tape, bound: &Bound, x: Var, h: Var, c: Var) -> Result<OnLstmStep> {
        let gates = self.standard.gates(tape, bound, x, h)?;
        let (mf, mi) = self.master_gates(tape, bound, x, h)?;
        self.combine(tape, gates, mf, mi, c)
    }

    /// Like [`step`](Self::step) but with the master gates supplied.
    pub fn step_with_master(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        x: Var,
        h: Var,
        c: Var,
        master_forget: Var,
        master_input: Var,
    ) -> Result<OnLstmStep> {
        let gates = self.standard.gates(tape, bound, x, h)?;
        for m in [master_forget, master_input] {
            if tape.shape(m) != [self.hidden()] {
                return Err(Error::Shape {
                    op: "master gate",
                    left: tape.shape(m).to_vec(),
                    right: vec![self.hidden()],
                });
            }
        }
        self.combine(tape, gates, master_forget, master_input, c)
    }

    fn combine(&self, tape: &mut Tape, g: LstmGates, mf: Var, mi: Var, c_prev: Var) -> Result<OnLstmStep> {
        if tape.shape(c_prev) != [self.hidden()] {
            return Err(Error::Shape {
                op: "on-lstm cell",
                left: tape.shape(c_prev).to_vec(),
                right: vec![self.hidden()],
            });
        }
        // f̂ = f⊙ω + (f̃ − ω), written as f̃ − ω⊙(1 − f) so that rounding
        // cannot push it above f̃ or below 0; likewise for î.
        let w = tape.mul(mf, mi)?;
        let f_off = tape.one_minus(g.forget);
        let f_cut = tape.mul(w, f_off)?;
        let forget = tape.sub(mf, f_cut)?;
        let i_off = tape.one_minus(g.input);
        let i_cut = tape.mul(w, i_off)?;
        let input = tape.sub(mi, i_cut)?;
        let keep = tape.mul(forget, c_prev)?;
        let write = tape.mul(input, g.candidate)?;
        let c = tape.add(keep, write)?;
        let squashed = tape.tanh(c);
        let h = tape.mul(g.output, squashed)?;
        Ok(OnLstmStep {
            gates: g,
            master_forget: mf,
            master_input: mi,
            overlap: w,
            forget,
            input,
            c,
            h,
        })
    }
}

/// Stacked ON-LSTM; layer 0 reads the inputs, layer `k` reads layer `k-1`'s
/// hidden states.
#[derive(Clone, Debug, PartialEq)]
pub struct OnLstm {
    pub layers: Vec<OnLstmCellParams>,
}

pub struct OnLstmOutput {
    /// Top-layer hidden state per time step.
    pub outputs: Vec<Var>,
    /// `steps[k][t]` for layer `k`, time `t`.
    pub steps: Vec<Vec<OnLstmStep>>,
    /// Final `(h, c)` of each layer.
    pub last: Vec<(Var, Var)>,
}

impl OnLstm {
    pub fn register<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        input: usize,
        hidden: usize,
        layers: usize,
        chunk: usize,
        mode: MasterInput,
        rng: &mut R,
    ) -> Result<Self> {
        if layers == 0 || input == 0 || hidden == 0 {
            return Err(Error::Config(format!(
                "{prefix}: layers, input and hidden sizes must be positive"
            )));
        }
        let layers = (0..layers)
            .map(|k| {
                let width = if k == 0 { input } else { hidden };
                OnLstmCellParams::register(store, &format!("{prefix}.l{k}"), width, hidden, chunk, mode, rng)
            })
            .collect::<Result<_>>()?;
        Ok(OnLstm { layers })
    }

    pub fn hidden(&self) -> usize {
        self.layers[0].hidden()
    }

    /// Run over `inputs` from zero state, or from `init` (one `(h, c)` per
    /// layer). Dropout is applied between layers.
    pub fn forward(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        inputs: &[Var],
        init: Option<&[(Var, Var)]>,
        dropout: &mut Dropout,
    ) -> Result<OnLstmOutput> {
        if inputs.is_empty() {
            return Err(Error::contract("ON-LSTM over an empty sequence"));
        }
        if let Some(init) = init {
            if init.len() != self.layers.len() {
                return Err(Error::contract(format!(
                    "{} initial states for {} layers",
                    init.len(),
                    self.layers.len()
                )));
            }
        }
        for pair in self.layers.windows(2) {
            if pair[1].input() != pair[0].hidden() {
                return Err(Error::Config("ON-LSTM layer sizes do not chain".into()));
            }
        }
        let mut xs = inputs.to_vec();
        let mut steps = Vec::with_capacity(self.layers.len());
        let mut last = Vec::with_capacity(self.layers.len());
        for (k, layer) in self.layers.iter().enumerate() {
            if k > 0 {
                xs = xs.into_iter().map(|x| dropout.apply(tape, x)).collect();
            }
            let (mut h, mut c) = match init {
                Some(init) => init[k],
                None => {
                    let z = tape.constant(Tensor::zeros(&[layer.hidden()]));
                    (z, z)
                }
            };
            let mut layer_steps = Vec::with_capacity(xs.len());
            for &x in &xs {
                let s = layer.step(tape, bound, x, h, c)?;
                h = s.h;
                c = s.c;
                layer_steps.push(s);
            }
            xs = layer_steps.iter().map(|s| s.h).collect();
            steps.push(layer_steps);
            last.push((h, c));
        }
        Ok(OnLstmOutput {
            outputs: xs,
            steps,
            last,
        })
    }
}
