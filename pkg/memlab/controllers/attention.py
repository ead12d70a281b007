# memlab/controllers/attention.py
import logging
from typing import Optional, Tuple

import numpy as np

from core.autodiff import Tensor, as_tensor, matmul, reshape, softmax, swap_last, tanh
from core.exceptions import ArgumentError, ShapeError
from core.nn import Module, init_param

logger = logging.getLogger(__name__)


class BahdanauAttention(Module):
    """additive scorer e_j = v^T tanh(s W + h_j U [+ extra V])"""

    def __init__(self, query_size: int, key_size: int, attn_size: int,
                 rng: np.random.Generator, extra_size: int = 0):
        self.query_size = query_size
        self.key_size = key_size
        self.W = init_param(rng, (query_size, attn_size))
        self.U = init_param(rng, (key_size, attn_size))
        self.V = init_param(rng, (extra_size, attn_size)) if extra_size else None
        self.v = init_param(rng, (attn_size, 1))

    def __call__(self, dec_state: Tensor, enc_states: Tensor,
                 extra: Optional[Tensor] = None) -> Tuple[Tensor, Tensor]:
        return bahdanau_attention(self, dec_state, enc_states, extra)


def bahdanau_attention(attn: BahdanauAttention, dec_state: Tensor, enc_states: Tensor,
                       extra: Optional[Tensor] = None) -> Tuple[Tensor, Tensor]:
    """returns (context, alpha); accepts (d,) + (L, d) or batched (B, d) + (B, L, d)"""
    dec_state, enc_states = as_tensor(dec_state), as_tensor(enc_states)
    unbatched = dec_state.ndim == 1
    if unbatched:
        dec_state = reshape(dec_state, (1, dec_state.shape[0]))
        enc_states = reshape(enc_states, (1,) + enc_states.shape)
        if extra is not None:
            extra = reshape(as_tensor(extra), (1, extra.shape[-1]))

    batch, length = enc_states.shape[0], enc_states.shape[1]
    if length == 0:
        raise ArgumentError("attention over an empty sequence")
    if enc_states.shape[-1] != attn.key_size or dec_state.shape[-1] != attn.query_size:
        raise ShapeError("attention operand widths do not match the scorer")

    query = matmul(dec_state, attn.W)
    if extra is not None and attn.V is not None:
        query = query + matmul(extra, attn.V)
    hidden = tanh(matmul(enc_states, attn.U) + reshape(query, (batch, 1, query.shape[-1])))
    scores = reshape(matmul(hidden, attn.v), (batch, length))
    alpha = softmax(scores, axis=-1)
    context = reshape(matmul(reshape(alpha, (batch, 1, length)), enc_states),
                      (batch, enc_states.shape[-1]))

    if unbatched:
        return reshape(context, (context.shape[-1],)), reshape(alpha, (length,))
    return context, alpha


def scaled_dot_attention(Q: Tensor, K: Tensor, V: Tensor) -> Tensor:
    """softmax(Q K^T / sqrt(d_k)) V, row-wise"""
    Q, K, V = as_tensor(Q), as_tensor(K), as_tensor(V)
    if Q.shape[-1] != K.shape[-1]:
        raise ShapeError(f"query/key dims differ: {Q.shape[-1]} vs {K.shape[-1]}")
    if K.shape[-2] != V.shape[-2]:
        raise ShapeError(f"key/value row counts differ: {K.shape[-2]} vs {V.shape[-2]}")
    scores = matmul(Q, swap_last(K)) / np.sqrt(Q.shape[-1])
    return matmul(softmax(scores, axis=-1), V)
