//! Layer primitives with explicit forward/backward passes.

mod activation;
mod batch_norm;
mod conv;

pub use activation::{
    dropout_backward, dropout_forward, leaky_relu_backward, leaky_relu_forward, tanh_backward,
    tanh_forward,
};
pub use batch_norm::{
    batch_norm_backward, batch_norm_forward, BatchNormCache, BatchNormGrads, BnMode, BN_EPS,
    BN_MOMENTUM,
};
pub use conv::{
    conv2d_backward, conv2d_forward, conv_transpose2d_backward, conv_transpose2d_forward,
    Conv2dCache, ConvGrads, ConvTranspose2dCache,
};
