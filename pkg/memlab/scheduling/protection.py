# memlab/scheduling/protection.py
from typing import Any, Callable, Optional

from ntm.memory import SlotWrite, apply_slot_write


def write_protected_update(memory: Any, emission: Any, t: int, input_length: int,
                           writer: Optional[Callable[[Any, Any], Any]] = None) -> Any:
    """write while t <= input_length, otherwise hand back the same memory object"""
    if t > input_length:
        return memory
    writer = writer or apply_slot_write
    return writer(memory, emission)


__all__ = ['write_protected_update', 'SlotWrite']
