//! Brownian-motion side of the laboratory: grid paths, binned local times,
//! the Révész walk-from-Brownian-path coupling, the self-intersection
//! functional α, small-ball probabilities and Chung-type LIL statistics.

mod alpha;
mod lil;
mod local_time;
mod path;
mod revesz;
mod small_ball;

pub use alpha::*;
pub use lil::*;
pub use local_time::*;
pub use path::*;
pub use revesz::*;
pub use small_ball::*;
