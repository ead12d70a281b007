# memlab/core/autodiff.py
"""
dense float64 tensors with a define-by-run reverse-mode tape.

every op that involves a tensor requiring grad is appended to the active
tape of the current thread; backward() walks that tape in reverse. a tape is
only active inside tape_scope(); outside one, ops record nothing, as under
no_grad(). tapes are thread-confined, parameters are leaves that outlive any
single tape.
"""
import logging
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import settings
from core.constants import ACTIVATIONS, NORM_EPS
from core.exceptions import ArgumentError, DomainError, ShapeError

logger = logging.getLogger(__name__)

ArrayLike = Union['Tensor', np.ndarray, float, int, Sequence[float]]
BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


class Tensor:
    """float64 array plus gradient slot and its place on the tape"""

    __slots__ = ('data', 'grad', 'requires_grad', 'name', 'node_id',
                 '_parents', '_backward', '_op', '_tape', '__weakref__')

    __array_priority__ = 1000

    def __init__(self, data, requires_grad: bool = False, name: str = None):
        self.data = np.array(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self.node_id: Optional[int] = None
        self._parents: Tuple['Tensor', ...] = ()
        self._backward: Optional[BackwardFn] = None
        self._op = 'leaf'
        self._tape: Optional['Tape'] = None

    def __repr__(self):
        label = f", name={self.name}" if self.name else ''
        return f"Tensor(shape={self.shape}, op={self._op}{label})"

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    # arithmetic
    def __add__(self, other): return add(self, other)
    def __radd__(self, other): return add(other, self)
    def __sub__(self, other): return sub(self, other)
    def __rsub__(self, other): return sub(other, self)
    def __mul__(self, other): return mul(self, other)
    def __rmul__(self, other): return mul(other, self)
    def __truediv__(self, other): return div(self, other)
    def __rtruediv__(self, other): return div(other, self)
    def __neg__(self): return neg(self)
    def __pow__(self, exponent: float): return power(self, exponent)
    def __matmul__(self, other): return matmul(self, other)
    def __getitem__(self, index): return getitem(self, index)

    def sum(self, axis=None, keepdims=False): return tsum(self, axis, keepdims)
    def mean(self, axis=None, keepdims=False): return mean(self, axis, keepdims)
    def max(self, axis=-1, keepdims=False): return tmax(self, axis, keepdims)
    def reshape(self, *shape): return reshape(self, shape[0] if len(shape) == 1 and isinstance(shape[0], tuple) else shape)
    def transpose(self, *axes): return transpose(self, axes or None)
    def exp(self): return exp(self)
    def log(self): return log(self)
    def sqrt(self): return sqrt(self)
    def detach(self): return detach(self)

    @property
    def T(self):
        return transpose(self, None)


# ------------------------------------------
# tape
# ------------------------------------------

class Tape:
    """ordered record of primitive ops; parents always precede children"""

    def __init__(self):
        self.nodes: List[Tensor] = []

    def __len__(self):
        return len(self.nodes)

    def record(self, tensor: Tensor) -> int:
        tensor.node_id = len(self.nodes)
        tensor._tape = self
        self.nodes.append(tensor)
        return tensor.node_id

    def backward(self, loss: Tensor):
        """reverse sweep from loss; every node on this tape gets a grad"""
        adjoints = {id(loss): np.ones_like(loss.data)}
        leaves = {}

        for node in reversed(self.nodes):
            g = adjoints.pop(id(node), None)
            if g is None:
                node.grad = np.zeros_like(node.data)
                continue
            node.grad = g
            parent_grads = node._backward(g)
            for parent, pg in zip(node._parents, parent_grads):
                if pg is None or not parent.requires_grad:
                    continue
                pg = _unbroadcast(pg, parent.data.shape)
                key = id(parent)
                if parent._tape is self and parent.node_id is not None:
                    adjoints[key] = adjoints[key] + pg if key in adjoints else pg
                elif key in leaves:
                    leaves[key] = (parent, leaves[key][1] + pg)
                else:
                    leaves[key] = (parent, pg)

        for parent, g in leaves.values():
            parent.grad = g


_local = threading.local()


def get_tape() -> Optional[Tape]:
    """active tape of the calling thread, None outside tape_scope"""
    return getattr(_local, 'tape', None)


def grad_enabled() -> bool:
    return getattr(_local, 'grad_enabled', True)


@contextmanager
def tape_scope():
    """fresh tape for one forward/backward pass"""
    previous = getattr(_local, 'tape', None)
    tape = Tape()
    _local.tape = tape
    try:
        yield tape
    finally:
        _local.tape = previous


@contextmanager
def no_grad():
    previous = grad_enabled()
    _local.grad_enabled = False
    try:
        yield
    finally:
        _local.grad_enabled = previous


def backward(loss: Tensor):
    """populate .grad for everything on loss's tape and the leaves it reaches"""
    if loss.size != 1:
        raise ArgumentError(f"loss must be a scalar, got shape {loss.shape}")
    if loss._tape is None:
        # nothing recorded: loss does not depend on any parameter
        loss.grad = np.ones_like(loss.data)
        return
    loss._tape.backward(loss)


# ------------------------------------------
# op plumbing
# ------------------------------------------

def as_tensor(x: ArrayLike) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def make_op(data: np.ndarray, parents: Sequence[Tensor], backward_fn: BackwardFn,
            op: str = 'custom') -> Tensor:
    """wrap a forward value as a tape node; backward_fn maps out-grad to parent grads"""
    out = Tensor(data)
    out._op = op
    if settings.CHECK_FINITE and not np.isfinite(out.data).all():
        raise DomainError(f"non-finite values produced by {op}")
    tape = get_tape()
    if tape is not None and grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
        tape.record(out)
    return out


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _expand_reduced(g: np.ndarray, shape, axis, keepdims) -> np.ndarray:
    if axis is not None and not keepdims:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        axes = tuple(a % len(shape) for a in axes)
        for a in sorted(axes):
            g = np.expand_dims(g, a)
    return np.broadcast_to(g, shape)


# ------------------------------------------
# elementwise arithmetic
# ------------------------------------------

def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return make_op(a.data + b.data, (a, b), lambda g: (g, g), 'add')


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return make_op(a.data - b.data, (a, b), lambda g: (g, -g), 'sub')


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return make_op(a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data), 'mul')


def div(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return make_op(a.data / b.data, (a, b),
                   lambda g: (g / b.data, -g * a.data / (b.data ** 2)), 'div')


def neg(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    return make_op(-a.data, (a,), lambda g: (-g,), 'neg')


def power(a: ArrayLike, exponent: float) -> Tensor:
    a = as_tensor(a)
    return make_op(a.data ** exponent, (a,),
                   lambda g: (g * exponent * a.data ** (exponent - 1),), 'pow')


def exp(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)
    return make_op(out, (a,), lambda g: (g * out,), 'exp')


def log(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    if np.any(a.data <= 0):
        raise DomainError("log of a nonpositive value")
    return make_op(np.log(a.data), (a,), lambda g: (g / a.data,), 'log')


def sqrt(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    out = np.sqrt(a.data)
    return make_op(out, (a,), lambda g: (g * 0.5 / out,), 'sqrt')


def detach(a: ArrayLike) -> Tensor:
    return Tensor(as_tensor(a).data.copy())


# ------------------------------------------
# reductions and shape ops
# ------------------------------------------

def tsum(a: ArrayLike, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    shape = a.shape
    return make_op(a.data.sum(axis=axis, keepdims=keepdims), (a,),
                   lambda g: (_expand_reduced(g, shape, axis, keepdims),), 'sum')


def mean(a: ArrayLike, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    count = a.size if axis is None else np.prod([a.shape[ax] for ax in np.atleast_1d(axis)])
    return tsum(a, axis, keepdims) / float(count)


def tmax(a: ArrayLike, axis: int = -1, keepdims: bool = False) -> Tensor:
    """max along axis; gradient goes to the first maximal entry"""
    a = as_tensor(a)
    idx = np.expand_dims(np.argmax(a.data, axis=axis), axis)
    out = np.take_along_axis(a.data, idx, axis=axis)
    if not keepdims:
        out = np.squeeze(out, axis=axis)

    def _backward(g):
        grad = np.zeros_like(a.data)
        g = g if keepdims else np.expand_dims(g, axis)
        np.put_along_axis(grad, idx, g, axis=axis)
        return (grad,)

    return make_op(out, (a,), _backward, 'max')


def reshape(a: ArrayLike, shape) -> Tensor:
    a = as_tensor(a)
    old = a.shape
    return make_op(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),), 'reshape')


def transpose(a: ArrayLike, axes=None) -> Tensor:
    a = as_tensor(a)
    if axes is None:
        axes = tuple(range(a.ndim))[::-1]
    inverse = tuple(np.argsort(axes))
    return make_op(a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),), 'transpose')


def swap_last(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    axes = list(range(a.ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return transpose(a, tuple(axes))


def getitem(a: ArrayLike, index) -> Tensor:
    a = as_tensor(a)

    def _backward(g):
        grad = np.zeros_like(a.data)
        np.add.at(grad, index, g)
        return (grad,)

    return make_op(a.data[index], (a,), _backward, 'getitem')


def concat(tensors: Sequence[ArrayLike], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ArgumentError("concat of an empty list")
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]
    return make_op(np.concatenate([t.data for t in tensors], axis=axis), tensors,
                   lambda g: tuple(np.split(g, splits, axis=axis)), 'concat')


def stack(tensors: Sequence[ArrayLike], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ArgumentError("stack of an empty list")

    def _backward(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(tensors)))

    return make_op(np.stack([t.data for t in tensors], axis=axis), tensors, _backward, 'stack')


def roll(a: ArrayLike, shift: int, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    return make_op(np.roll(a.data, shift, axis=axis), (a,),
                   lambda g: (np.roll(g, -shift, axis=axis),), 'roll')


def permute_last(a: ArrayLike, order: np.ndarray) -> Tensor:
    """gather along the last axis with a constant index array (no grad through order)"""
    a = as_tensor(a)
    order = np.asarray(order)

    def _backward(g):
        grad = np.zeros_like(a.data)
        np.put_along_axis(grad, order, g, axis=-1)
        return (grad,)

    return make_op(np.take_along_axis(a.data, order, axis=-1), (a,), _backward, 'permute')


def cumprod_exclusive(a: ArrayLike) -> Tensor:
    """out[..., j] = prod_{i<j} a[..., i]; exact gradient even where a has zeros"""
    a = as_tensor(a)
    x = a.data
    n = x.shape[-1]
    ones = np.ones(x.shape[:-1] + (1,))
    out = np.concatenate([ones, np.cumprod(x, axis=-1)[..., :-1]], axis=-1)

    def _backward(g):
        # leave-one-out exclusive products: loo[..., k, j] = prod_{i<j, i!=k} x_i
        tiled = np.repeat(x[..., None, :], n, axis=-2)
        diag = np.arange(n)
        tiled[..., diag, diag] = 1.0
        loo = np.concatenate([np.ones(tiled.shape[:-1] + (1,)),
                              np.cumprod(tiled, axis=-1)[..., :-1]], axis=-1)
        mask = np.triu(np.ones((n, n)), k=1)
        return (np.einsum('...kj,...j->...k', loo * mask, g),)

    return make_op(out, (a,), _backward, 'cumprod_exclusive')


# ------------------------------------------
# linear algebra
# ------------------------------------------

def matmul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs operands with >= 2 dims, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul inner extents differ: {a.shape} @ {b.shape}")
    return make_op(a.data @ b.data, (a, b),
                   lambda g: (g @ np.swapaxes(b.data, -1, -2), np.swapaxes(a.data, -1, -2) @ g),
                   'matmul')


# ------------------------------------------
# activations and normalizers
# ------------------------------------------

def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def apply_activation(kind: str, x: ArrayLike) -> Tensor:
    """elementwise sigmoid | tanh | relu | softplus"""
    x = as_tensor(x)
    if kind not in ACTIVATIONS:
        raise ArgumentError(f"unknown activation {kind}")
    if not np.isfinite(x.data).all():
        raise DomainError(f"non-finite input to {kind}")

    if kind == 'sigmoid':
        out = _sigmoid(x.data)
        return make_op(out, (x,), lambda g: (g * out * (1.0 - out),), kind)
    if kind == 'tanh':
        out = np.tanh(x.data)
        return make_op(out, (x,), lambda g: (g * (1.0 - out ** 2),), kind)
    if kind == 'relu':
        mask = x.data > 0
        return make_op(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,), kind)
    out = np.logaddexp(0.0, x.data)
    return make_op(out, (x,), lambda g: (g * _sigmoid(x.data),), kind)


def sigmoid(x): return apply_activation('sigmoid', x)
def tanh(x): return apply_activation('tanh', x)
def relu(x): return apply_activation('relu', x)
def softplus(x): return apply_activation('softplus', x)


def softmax(x: ArrayLike, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    if x.size == 0 or x.shape[axis] == 0:
        raise ArgumentError("softmax of an empty vector")
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)
    return make_op(out, (x,),
                   lambda g: (out * (g - (g * out).sum(axis=axis, keepdims=True)),), 'softmax')


def log_softmax(x: ArrayLike, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - lse
    probs = np.exp(out)
    return make_op(out, (x,),
                   lambda g: (g - probs * g.sum(axis=axis, keepdims=True),), 'log_softmax')


def logsumexp(x: ArrayLike, axis: int = -1, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    m = x.data.max(axis=axis, keepdims=True)
    lse = m + np.log(np.exp(x.data - m).sum(axis=axis, keepdims=True))
    weights = np.exp(x.data - lse)
    out = lse if keepdims else np.squeeze(lse, axis=axis)

    def _backward(g):
        g = g if keepdims else np.expand_dims(g, axis)
        return (g * weights,)

    return make_op(out, (x,), _backward, 'logsumexp')


def softmax_with_strength(scores: ArrayLike, beta: ArrayLike, axis: int = -1) -> Tensor:
    """softmax(beta * scores) along axis, beta >= 0"""
    scores, beta = as_tensor(scores), as_tensor(beta)
    if scores.size == 0:
        raise ArgumentError("softmax_with_strength of an empty vector")
    if np.any(beta.data < 0):
        raise ArgumentError("strength beta must be >= 0")
    return softmax(scores * beta, axis=axis)


def norm(x: ArrayLike, axis: int = -1, keepdims: bool = False) -> Tensor:
    """euclidean norm, smoothed at zero so the gradient stays finite"""
    x = as_tensor(x)
    return sqrt(tsum(x * x, axis=axis, keepdims=keepdims) + NORM_EPS ** 2)


def cosine_similarity(u: ArrayLike, v: ArrayLike, axis: int = -1) -> Tuple[Tensor, np.ndarray]:
    """cosine along axis (broadcasting); zero-norm inputs give 0 and a degenerate flag"""
    u, v = as_tensor(u), as_tensor(v)
    degenerate = np.logical_or((u.data ** 2).sum(axis=axis) == 0, (v.data ** 2).sum(axis=axis) == 0)
    if np.any(degenerate):
        logger.debug("⚠️ zero-norm input to cosine_similarity, returning 0")
    dot = tsum(u * v, axis=axis)
    return dot / (norm(u, axis=axis) * norm(v, axis=axis)), degenerate


# ------------------------------------------
# gradient checking
# ------------------------------------------

@dataclass
class GradCheckReport:
    """tape gradient vs central differences"""
    max_rel_error: float
    rel_errors: np.ndarray
    analytic: np.ndarray
    numeric: np.ndarray

    @property
    def passed(self) -> bool:
        return self.max_rel_error < 1e-4


def finite_diff_check(f: Callable[[Tensor], Tensor], x: Tensor, eps: float = 1e-5,
                      floor: float = 1e-6) -> GradCheckReport:
    """compare the tape gradient of scalar f at x with central differences per coordinate"""
    if eps <= 0:
        raise ArgumentError("eps must be > 0")
    x.requires_grad = True
    x.grad = None

    with tape_scope():
        out = f(x)
        backward(out)
    analytic = np.zeros_like(x.data) if x.grad is None else x.grad.copy()

    numeric = np.zeros_like(x.data)
    flat = x.data.reshape(-1)
    num_flat = numeric.reshape(-1)
    with no_grad():
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + eps
            f_plus = f(x).item()
            flat[i] = original - eps
            f_minus = f(x).item()
            flat[i] = original
            num_flat[i] = (f_plus - f_minus) / (2.0 * eps)

    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    rel = np.abs(analytic - numeric) / denom
    return GradCheckReport(float(rel.max()) if rel.size else 0.0, rel, analytic, numeric)
