# memlab/core/nn.py
"""parameter containers shared by controllers and memory modules"""
import logging
from collections import OrderedDict
from typing import Dict, Iterator, Tuple

import numpy as np

from core.autodiff import Tensor, matmul
from core.constants import INIT_SCALE
from core.exceptions import ShapeError

logger = logging.getLogger(__name__)


def init_param(rng: np.random.Generator, shape: Tuple[int, ...], scale: float = INIT_SCALE,
               name: str = None) -> Tensor:
    """uniform(-scale, scale) leaf that requires grad"""
    return Tensor(rng.uniform(-scale, scale, size=shape), requires_grad=True, name=name)


def zeros_param(shape: Tuple[int, ...], name: str = None) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True, name=name)


class Module:
    """walks attributes in definition order to find parameters and submodules"""

    def named_parameters(self, prefix: str = '') -> Iterator[Tuple[str, Tensor]]:
        for attr, value in vars(self).items():
            if attr.startswith('_'):
                continue
            path = f"{prefix}{attr}"
            if isinstance(value, Tensor) and value.requires_grad:
                yield path, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{path}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{path}.{i}.")
                    elif isinstance(item, Tensor) and item.requires_grad:
                        yield f"{path}.{i}", item

    def parameters(self) -> 'OrderedDict[str, Tensor]':
        return OrderedDict(self.named_parameters())

    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.parameters().values()))

    def zero_grad(self):
        for param in self.parameters().values():
            param.zero_grad()

    def state_dict(self) -> Dict[str, np.ndarray]:
        return OrderedDict((name, p.data.copy()) for name, p in self.parameters().items())

    def load_state_dict(self, state: Dict[str, np.ndarray]):
        params = self.parameters()
        missing = set(params) - set(state)
        if missing:
            raise ShapeError(f"state is missing parameters: {sorted(missing)}")
        for name, param in params.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != param.shape:
                raise ShapeError(f"shape mismatch for {name}: {value.shape} vs {param.shape}")
            param.data = value.copy()


class Linear(Module):
    """y = x W + b with W stored (in, out)"""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator,
                 bias: bool = True):
        self.in_features = in_features
        self.out_features = out_features
        self.W = init_param(rng, (in_features, out_features))
        self.b = zeros_param((out_features,)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.in_features:
            raise ShapeError(f"linear expects {self.in_features} features, got {x.shape[-1]}")
        out = matmul(x, self.W)
        return out + self.b if self.b is not None else out


class Embedding(Module):
    """token ids -> rows of W via a one-hot product, so gradients reach W"""

    def __init__(self, vocab_size: int, embed_size: int, rng: np.random.Generator):
        self.vocab_size = vocab_size
        self.embed_size = embed_size
        self.W = init_param(rng, (vocab_size, embed_size))

    def one_hot(self, tokens) -> np.ndarray:
        tokens = np.asarray(tokens, dtype=int).reshape(-1)
        if np.any(tokens < 0) or np.any(tokens >= self.vocab_size):
            raise ShapeError(f"token ids must lie in [0, {self.vocab_size})")
        onehot = np.zeros((tokens.size, self.vocab_size))
        onehot[np.arange(tokens.size), tokens] = 1.0
        return onehot

    def __call__(self, tokens) -> Tensor:
        return matmul(Tensor(self.one_hot(tokens)), self.W)
