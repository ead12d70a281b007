# memlab/core/validators/tensor_validators.py
import numpy as np

from core.exceptions import ArgumentError, DomainError, ShapeError


def validate_last_dim(tensor, expected: int, label: str = 'input'):
    """check the feature axis has the expected width"""
    if tensor.shape[-1] != expected:
        raise ShapeError(f"{label} has width {tensor.shape[-1]}, expected {expected}")


def validate_unit_interval(values, label: str = 'value'):
    """every entry inside [0, 1]"""
    data = np.asarray(getattr(values, 'data', values))
    if np.any(data < 0) or np.any(data > 1):
        raise ArgumentError(f"{label} must lie in [0, 1]")


def validate_positive(values, label: str = 'value'):
    data = np.asarray(getattr(values, 'data', values))
    if np.any(data <= 0):
        raise DomainError(f"{label} must be strictly positive")


def validate_binary(values, label: str = 'input'):
    """0/1 valued"""
    data = np.asarray(values)
    if not np.isin(data, (0, 1)).all():
        raise ArgumentError(f"{label} must be binary (0/1)")


def validate_bipolar(values, label: str = 'pattern'):
    data = np.asarray(values)
    if not np.isin(data, (-1, 1)).all():
        raise ArgumentError(f"{label} must be +1/-1 valued")
