//! Explicit network builders for each stage of the coding scheme and the
//! assembled approximators.

pub mod assemble;
pub mod clamp;
pub mod encoder;
pub mod memorizer;
pub mod pl;
pub mod quantizer;
pub mod staircase;

pub use assemble::{assemble_lp_net, assemble_lp_net_with, assemble_uniform_net, lp_analytic_bound, LpArtifacts};
pub use clamp::build_clamp_net;
pub use encoder::{build_relu_encoder_net, default_encoder_parameters, EncoderArtifacts};
pub use memorizer::{build_memorizer_from_pairs, build_memorizer_net};
pub use pl::{build_pl_net, build_pl_pair_net, build_pl_vector_net, PLScalarFunction, PlCurve};
pub use quantizer::{build_step_encoder_net, build_step_quantizer_net};
pub use staircase::{build_decoder_net, build_staircase_pair_net, default_decoder_delta};
