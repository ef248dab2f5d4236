//! Counter-based random streams keyed by `(seed, stream id)`.
//!
//! Every sampled column draws from its own ChaCha stream, so a column's
//! values depend only on the seed, the role of the matrix in the design
//! and the parameter's stream id. Dropping a parameter from a space does
//! not perturb the columns of the parameters that remain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Role of a sample matrix within a design.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamRole {
    Plain = 0,
    PickA = 1,
    PickB = 2,
}

pub(crate) fn stream(seed: u64, role: StreamRole, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((role as u64) << 32) | (id & 0xffff_ffff));
    rng
}

/// Uniform draw on `[0, 1)`.
#[inline]
pub(crate) fn unit(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen::<f64>()
}
