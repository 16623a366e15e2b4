//! Vectors, 2-D DFT, circular convolution and the linear-operator contract.

mod fft;
mod op;
mod signal;

pub use fft::{circ_conv, dft2, idft2, idft2_real, register_kernel, Fft2};
pub use op::{
    adjoint_check, operator_norm, Composed, Convolution, DenseMatrix, Diagonal, Downsample, Identity, LinearOp,
};
pub use signal::{Signal, Spectrum};
