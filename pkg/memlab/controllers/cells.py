# memlab/controllers/cells.py
"""
recurrent cells used as memory controllers and baselines.

states are row vectors (batch, hidden); weight matrices are stored (in, out)
so h W is the column-convention W h transposed. 1-d inputs are treated as a
batch of one and squeezed back on the way out.
"""
import logging
from typing import Tuple

import numpy as np

from core.autodiff import Tensor, as_tensor, matmul, reshape, sigmoid, softmax, tanh
from core.constants import LSTM_FORGET_BIAS
from core.exceptions import ArgumentError
from core.nn import Module, init_param, zeros_param
from core.validators.tensor_validators import validate_last_dim

logger = logging.getLogger(__name__)

LSTM_GATES = ('f', 'i', 'o', 'c')
GRU_GATES = ('r', 'z')
OUTPUT_KINDS = ('softmax', 'identity')


def _as_batch(x: Tensor) -> Tuple[Tensor, bool]:
    x = as_tensor(x)
    if x.ndim == 1:
        return reshape(x, (1, x.shape[0])), True
    return x, False


def _unbatch(x: Tensor, squeeze: bool) -> Tensor:
    return reshape(x, (x.shape[-1],)) if squeeze else x


class RnnCell(Module):
    """elman cell: h = f(h_prev W + x U + b), o = g(h V + c)"""

    def __init__(self, input_size: int, hidden_size: int, output_size: int,
                 rng: np.random.Generator, output: str = 'softmax'):
        if output not in OUTPUT_KINDS:
            raise ArgumentError(f"unknown output nonlinearity {output}")
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.output_size = output_size
        self.output = output
        self.W = init_param(rng, (hidden_size, hidden_size))
        self.U = init_param(rng, (input_size, hidden_size))
        self.b = zeros_param((hidden_size,))
        self.V = init_param(rng, (hidden_size, output_size))
        self.c = zeros_param((output_size,))

    def initial_state(self, batch: int) -> Tensor:
        return Tensor(np.zeros((batch, self.hidden_size)))

    def __call__(self, x: Tensor, h_prev: Tensor) -> Tuple[Tensor, Tensor]:
        return elman_step(self, x, h_prev)


def elman_step(cell: RnnCell, x: Tensor, h_prev: Tensor) -> Tuple[Tensor, Tensor]:
    x, squeeze = _as_batch(x)
    h_prev, _ = _as_batch(h_prev)
    validate_last_dim(x, cell.input_size, 'x')
    validate_last_dim(h_prev, cell.hidden_size, 'h_prev')

    h = tanh(matmul(h_prev, cell.W) + matmul(x, cell.U) + cell.b)
    logits = matmul(h, cell.V) + cell.c
    o = softmax(logits) if cell.output == 'softmax' else logits
    return _unbatch(h, squeeze), _unbatch(o, squeeze)


class LstmCell(Module):
    """lstm with the four gates stacked along the output axis in (f, i, o, c) order"""

    def __init__(self, input_size: int, hidden_size: int, rng: np.random.Generator,
                 forget_bias: float = LSTM_FORGET_BIAS):
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.W = init_param(rng, (input_size, 4 * hidden_size))
        self.U = init_param(rng, (hidden_size, 4 * hidden_size))
        self.b = zeros_param((4 * hidden_size,))
        self.b.data[self.gate_slice('f')] = forget_bias

    def gate_slice(self, gate: str) -> slice:
        k = LSTM_GATES.index(gate)
        return slice(k * self.hidden_size, (k + 1) * self.hidden_size)

    def gate_params(self, gate: str) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """views of (W_gate, U_gate, b_gate)"""
        s = self.gate_slice(gate)
        return self.W.data[:, s], self.U.data[:, s], self.b.data[s]

    def set_gate_bias(self, gate: str, value: float):
        self.b.data[self.gate_slice(gate)] = value

    def initial_state(self, batch: int) -> Tuple[Tensor, Tensor]:
        zeros = np.zeros((batch, self.hidden_size))
        return Tensor(zeros), Tensor(zeros.copy())

    def __call__(self, x: Tensor, h_prev: Tensor, c_prev: Tensor) -> Tuple[Tensor, Tensor]:
        return lstm_step(self, x, h_prev, c_prev)


def lstm_step(cell: LstmCell, x: Tensor, h_prev: Tensor, c_prev: Tensor) -> Tuple[Tensor, Tensor]:
    x, squeeze = _as_batch(x)
    h_prev, _ = _as_batch(h_prev)
    c_prev, _ = _as_batch(c_prev)
    validate_last_dim(x, cell.input_size, 'x')
    validate_last_dim(h_prev, cell.hidden_size, 'h_prev')
    validate_last_dim(c_prev, cell.hidden_size, 'c_prev')

    z = matmul(x, cell.W) + matmul(h_prev, cell.U) + cell.b
    f = sigmoid(z[:, cell.gate_slice('f')])
    i = sigmoid(z[:, cell.gate_slice('i')])
    o = sigmoid(z[:, cell.gate_slice('o')])
    c_tilde = tanh(z[:, cell.gate_slice('c')])

    c = f * c_prev + i * c_tilde
    h = o * tanh(c)
    return _unbatch(h, squeeze), _unbatch(c, squeeze)


class GruCell(Module):
    """gru; reset and update gates stacked (r, z), candidate kept separate"""

    def __init__(self, input_size: int, hidden_size: int, rng: np.random.Generator):
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.W_rz = init_param(rng, (input_size, 2 * hidden_size))
        self.U_rz = init_param(rng, (hidden_size, 2 * hidden_size))
        self.b_rz = zeros_param((2 * hidden_size,))
        self.W_h = init_param(rng, (input_size, hidden_size))
        self.U_h = init_param(rng, (hidden_size, hidden_size))
        self.b_h = zeros_param((hidden_size,))

    def gate_slice(self, gate: str) -> slice:
        k = GRU_GATES.index(gate)
        return slice(k * self.hidden_size, (k + 1) * self.hidden_size)

    def set_gate_bias(self, gate: str, value: float):
        self.b_rz.data[self.gate_slice(gate)] = value

    def initial_state(self, batch: int) -> Tensor:
        return Tensor(np.zeros((batch, self.hidden_size)))

    def __call__(self, x: Tensor, h_prev: Tensor) -> Tensor:
        return gru_step(self, x, h_prev)


def gru_step(cell: GruCell, x: Tensor, h_prev: Tensor) -> Tensor:
    x, squeeze = _as_batch(x)
    h_prev, _ = _as_batch(h_prev)
    validate_last_dim(x, cell.input_size, 'x')
    validate_last_dim(h_prev, cell.hidden_size, 'h_prev')

    gates = matmul(x, cell.W_rz) + matmul(h_prev, cell.U_rz) + cell.b_rz
    r = sigmoid(gates[:, cell.gate_slice('r')])
    z = sigmoid(gates[:, cell.gate_slice('z')])
    h_tilde = tanh(matmul(x, cell.W_h) + matmul(r * h_prev, cell.U_h) + cell.b_h)
    h = z * h_prev + (1.0 - z) * h_tilde
    return _unbatch(h, squeeze)
