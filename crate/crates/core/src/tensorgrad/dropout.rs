use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Tape, Tensor, Var};

/// Inverted dropout with its own seeded stream; a rate of zero (or
/// [`Dropout::disabled`]) is the identity and records nothing.
pub struct Dropout {
    rate: f64,
    rng: ChaCha8Rng,
}

impl Dropout {
    pub fn new(rate: f64, seed: u64) -> Self {
        Dropout {
            rate,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn disabled() -> Self {
        Self::new(0.0, 0)
    }

    pub fn is_active(&self) -> bool {
        self.rate > 0.0
    }

    pub fn apply(&mut self, tape: &mut Tape, x: Var) -> Var {
        if self.rate <= 0.0 {
            return x;
        }
        let keep = 1.0 - self.rate;
        let n = tape.value(x).len();
        let mask: Vec<f64> = (0..n)
            .map(|_| if self.rng.gen_bool(keep) { 1.0 / keep } else { 0.0 })
            .collect();
        let shape = tape.shape(x).to_vec();
        let m = tape.constant(Tensor::new(shape, mask).expect("mask matches input"));
        tape.mul(x, m).expect("mask matches input")
    }
}
