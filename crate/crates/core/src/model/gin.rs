use rand::Rng;

use crate::activation::Activation;
use crate::autodiff::{ParamId, ParamStore, Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::layers::{Linear, Mlp};

/// Parameters of one GIN convolution with edge features.
#[derive(Clone, Copy, Debug)]
pub struct GinParams {
    /// Learnable self-weight offset, initialized to 0.
    pub eps: ParamId,
    /// Single-layer message perceptron.
    pub message: Linear,
    pub update: Mlp,
}

impl GinParams {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, rng: &mut R, name: &str, dim: usize) -> Self {
        let message = Linear::new(store, rng, &format!("{name}.message"), dim, dim);
        // summed messages grow with the neighbor count; start them small
        let gain = 1.0 / (dim as f64).sqrt();
        let w = store.get_mut(message.weight);
        w.value = w.value.map(|v| v * gain);
        GinParams {
            eps: store.add(format!("{name}.eps"), Tensor::scalar(0.0)),
            message,
            update: Mlp::new(store, rng, &format!("{name}.update"), dim, dim, dim),
        }
    }
}

/// `h_i' = MLP((1 + eps) h_i + Σ_{j→i} act(P(e_ji + h_j)))`.
///
/// Edge `k` runs from `src[k]` to `dst[k]` and carries row `k` of `edge_feats`;
/// messages are summed at the destination. Nodes with no incoming edge get an
/// empty sum.
#[allow(clippy::too_many_arguments)]
pub fn gin_conv(
    tape: &mut Tape,
    store: &ParamStore,
    params: &GinParams,
    nodes: Var,
    edge_feats: Var,
    src: &[usize],
    dst: &[usize],
    act: Activation,
) -> Result<Var> {
    let (n, d) = tape.value(nodes).dims2();
    let (m, de) = tape.value(edge_feats).dims2();
    if de != d || m != src.len() || m != dst.len() {
        return Err(Error::ShapeMismatch {
            op: "gin_conv",
            left: vec![n, d],
            right: vec![m, de],
        });
    }
    let w = tape.param(store, params.message.weight);
    let ew = tape.matmul(edge_feats, w)?;
    gin_conv_projected(tape, store, params, nodes, ew, None, src, dst, act)
}

/// [`gin_conv`] with the edge term already multiplied by the message weight
/// (`edge_proj = e W`). `extra_bias` is added to the message bias.
#[allow(clippy::too_many_arguments)]
pub fn gin_conv_projected(
    tape: &mut Tape,
    store: &ParamStore,
    params: &GinParams,
    nodes: Var,
    edge_proj: Var,
    extra_bias: Option<Var>,
    src: &[usize],
    dst: &[usize],
    act: Activation,
) -> Result<Var> {
    let n = tape.value(nodes).rows();
    // P(e + h) = eW + hW + b, so the node term is projected before gathering
    let w = tape.param(store, params.message.weight);
    let mut b = tape.param(store, params.message.bias);
    if let Some(extra) = extra_bias {
        b = tape.add(b, extra)?;
    }
    let hw = tape.matmul(nodes, w)?;
    let agg = tape.edge_message(edge_proj, hw, b, src, dst, n, act)?;

    let eps = tape.param(store, params.eps);
    let self_weight = tape.add_scalar(eps, 1.0)?;
    let own = tape.scale_by(nodes, self_weight)?;
    let pre = tape.add(own, agg)?;
    params.update.forward(tape, store, pre, act)
}
