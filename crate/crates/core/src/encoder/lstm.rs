use rand::Rng;

use crate::error::{Error, Result};
use crate::tensorgrad::{Bound, Dropout, ParamId, ParamStore, Tape, Tensor, Var};

/// One direction of one LSTM layer. The four gates are packed row-wise in
/// the order input, forget, output, candidate: `w_x` is `[4h × input]`,
/// `w_h` is `[4h × h]`, `bias` is `[4h]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    pub input: usize,
    pub hidden: usize,
    pub w_x: ParamId,
    pub w_h: ParamId,
    pub bias: ParamId,
}

/// Gate activations of one step.
#[derive(Clone, Copy, Debug)]
pub struct LstmGates {
    pub input: Var,
    pub forget: Var,
    pub output: Var,
    pub candidate: Var,
}

impl LstmParams {
    pub fn register<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        input: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let k = 1.0 / (hidden as f64).sqrt();
        Ok(LstmParams {
            input,
            hidden,
            w_x: store.add(format!("{prefix}.w_x"), Tensor::uniform(&[4 * hidden, input], k, rng))?,
            w_h: store.add(format!("{prefix}.w_h"), Tensor::uniform(&[4 * hidden, hidden], k, rng))?,
            bias: store.add(format!("{prefix}.bias"), Tensor::zeros(&[4 * hidden]))?,
        })
    }

    fn check(&self, tape: &Tape, x: Var, h: Var) -> Result<()> {
        if tape.shape(x) != [self.input] {
            return Err(Error::Shape {
                op: "lstm input",
                left: tape.shape(x).to_vec(),
                right: vec![self.input],
            });
        }
        if tape.shape(h) != [self.hidden] {
            return Err(Error::Shape {
                op: "lstm state",
                left: tape.shape(h).to_vec(),
                right: vec![self.hidden],
            });
        }
        Ok(())
    }

    /// `i, f, o = σ(W·[h; x] + b)` and `g = tanh(W·[h; x] + b)`.
    pub fn gates(&self, tape: &mut Tape, bound: &Bound, x: Var, h: Var) -> Result<LstmGates> {
        self.check(tape, x, h)?;
        let zx = tape.matmul(bound.var(self.w_x), x)?;
        let zh = tape.matmul(bound.var(self.w_h), h)?;
        let z = tape.add(zx, zh)?;
        let z = tape.add(z, bound.var(self.bias))?;
        let n = self.hidden;
        let zi = tape.narrow(z, 0, n)?;
        let zf = tape.narrow(z, n, n)?;
        let zo = tape.narrow(z, 2 * n, n)?;
        let zg = tape.narrow(z, 3 * n, n)?;
        Ok(LstmGates {
            input: tape.sigmoid(zi),
            forget: tape.sigmoid(zf),
            output: tape.sigmoid(zo),
            candidate: tape.tanh(zg),
        })
    }

    /// One LSTM step: `c = f⊙c_prev + i⊙g`, `h = o⊙tanh(c)`.
    pub fn step(&self, tape: &mut Tape, bound: &Bound, x: Var, h: Var, c: Var) -> Result<(Var, Var)> {
        let g = self.gates(tape, bound, x, h)?;
        if tape.shape(c) != [self.hidden] {
            return Err(Error::Shape {
                op: "lstm cell",
                left: tape.shape(c).to_vec(),
                right: vec![self.hidden],
            });
        }
        let keep = tape.mul(g.forget, c)?;
        let write = tape.mul(g.input, g.candidate)?;
        let c_next = tape.add(keep, write)?;
        let squashed = tape.tanh(c_next);
        let h_next = tape.mul(g.output, squashed)?;
        Ok((h_next, c_next))
    }

    /// Run over a sequence from a zero state; returns the hidden states.
    pub fn run(&self, tape: &mut Tape, bound: &Bound, inputs: &[Var]) -> Result<Vec<Var>> {
        let mut h = tape.constant(Tensor::zeros(&[self.hidden]));
        let mut c = h;
        let mut out = Vec::with_capacity(inputs.len());
        for &x in inputs {
            (h, c) = self.step(tape, bound, x, h, c)?;
            out.push(h);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiLayer {
    pub forward: LstmParams,
    pub backward: LstmParams,
}

/// Stacked bidirectional LSTM; layer `k` reads the concatenated forward and
/// backward states of layer `k-1`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiLstm {
    pub layers: Vec<BiLayer>,
}

pub struct BiLstmOutput {
    /// Top-layer `[forward; backward]` state at every position.
    pub states: Vec<Var>,
    /// Top-layer forward state after the last position.
    pub last_forward: Var,
    /// Top-layer backward state after reading back to the first position.
    pub last_backward: Var,
}

impl BiLstm {
    pub fn register<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        input: usize,
        hidden: usize,
        layers: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if layers == 0 || hidden == 0 || input == 0 {
            return Err(Error::Config(format!(
                "{prefix}: layers, hidden and input sizes must be positive"
            )));
        }
        let layers = (0..layers)
            .map(|k| {
                let width = if k == 0 { input } else { 2 * hidden };
                Ok(BiLayer {
                    forward: LstmParams::register(store, &format!("{prefix}.l{k}.fwd"), width, hidden, rng)?,
                    backward: LstmParams::register(store, &format!("{prefix}.l{k}.bwd"), width, hidden, rng)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(BiLstm { layers })
    }

    pub fn hidden(&self) -> usize {
        self.layers[0].forward.hidden
    }

    pub fn output_dim(&self) -> usize {
        2 * self.hidden()
    }

    pub fn run(&self, tape: &mut Tape, bound: &Bound, inputs: &[Var], dropout: &mut Dropout) -> Result<BiLstmOutput> {
        if inputs.is_empty() {
            return Err(Error::contract("bidirectional LSTM over an empty sequence"));
        }
        let mut xs: Vec<Var> = inputs.to_vec();
        let mut last = (xs[0], xs[0]);
        for (k, layer) in self.layers.iter().enumerate() {
            if k > 0 {
                xs = xs.into_iter().map(|x| dropout.apply(tape, x)).collect();
            }
            let fwd = layer.forward.run(tape, bound, &xs)?;
            let rev: Vec<Var> = xs.iter().rev().copied().collect();
            let mut bwd = layer.backward.run(tape, bound, &rev)?;
            bwd.reverse();
            last = (*fwd.last().expect("nonempty"), bwd[0]);
            xs = fwd
                .iter()
                .zip(&bwd)
                .map(|(f, b)| tape.concat(&[*f, *b], 0))
                .collect::<Result<_>>()?;
        }
        Ok(BiLstmOutput {
            states: xs,
            last_forward: last.0,
            last_backward: last.1,
        })
    }
}
