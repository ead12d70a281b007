# memlab/core/services/storage_service.py
"""
checkpoint files and run directories.

layout: magic (8 bytes) | format version (uint32 le) | header length
(uint64 le) | json header | float64 le payload. the header lists every
array by name, shape and offset, and carries a sha256 of the payload.
"""
import hashlib
import json
import logging
import struct
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from config.settings import CHECKPOINT_FORMAT_VERSION, CHECKPOINT_MAGIC
from core.exceptions import CorruptCheckpointError, VersionError
from core.services.optimizer import OptimizerState

logger = logging.getLogger(__name__)

_PREFIX = struct.Struct('<IQ')


@dataclass
class Checkpoint:
    params: 'OrderedDict[str, np.ndarray]'
    step: int
    config_hash: str
    optimizer: Optional[OptimizerState] = None
    meta: Dict[str, Any] = field(default_factory=dict)


def _canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(',', ':')).encode('utf-8')


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    arrays = OrderedDict((f"param/{name}", value) for name, value in ckpt.params.items())
    if ckpt.optimizer is not None:
        for name, value in ckpt.optimizer.to_arrays().items():
            arrays[f"opt/{name}"] = value

    entries, chunks, offset = [], [], 0
    for name, value in arrays.items():
        flat = np.ascontiguousarray(value, dtype='<f8').reshape(-1)
        entries.append({'name': name, 'shape': list(np.shape(value)), 'offset': offset, 'count': int(flat.size)})
        chunks.append(flat.tobytes())
        offset += flat.size
    payload = b''.join(chunks)

    optimizer = None
    if ckpt.optimizer is not None:
        opt = ckpt.optimizer
        optimizer = {'kind': opt.kind, 'hyper': opt.hyper, 'step': opt.step,
                     'skipped_steps': opt.skipped_steps}
    header = _canonical_json({
        'format_version': CHECKPOINT_FORMAT_VERSION,
        'config_hash': ckpt.config_hash,
        'step': int(ckpt.step),
        'tensors': entries,
        'optimizer': optimizer,
        'meta': ckpt.meta,
        'payload_sha256': hashlib.sha256(payload).hexdigest(),
    })
    return CHECKPOINT_MAGIC + _PREFIX.pack(CHECKPOINT_FORMAT_VERSION, len(header)) + header + payload


def decode_checkpoint(blob: bytes, expected_config_hash: Optional[str] = None) -> Checkpoint:
    start = len(CHECKPOINT_MAGIC)
    if len(blob) < start + _PREFIX.size or blob[:start] != CHECKPOINT_MAGIC:
        raise CorruptCheckpointError("not a memlab checkpoint (bad magic or truncated prefix)")
    version, header_len = _PREFIX.unpack_from(blob, start)
    if version != CHECKPOINT_FORMAT_VERSION:
        raise VersionError(f"checkpoint format version {version}, this build reads {CHECKPOINT_FORMAT_VERSION}")

    body = start + _PREFIX.size
    try:
        header = json.loads(blob[body:body + header_len].decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptCheckpointError(f"checkpoint header is unreadable: {exc}") from exc

    payload = blob[body + header_len:]
    if hashlib.sha256(payload).hexdigest() != header.get('payload_sha256'):
        raise CorruptCheckpointError("checkpoint payload does not match its checksum")
    if expected_config_hash is not None and header['config_hash'] != expected_config_hash:
        raise VersionError(f"checkpoint was written for config {header['config_hash'][:12]}, "
                           f"expected {expected_config_hash[:12]}")

    values = np.frombuffer(payload, dtype='<f8')
    params, opt_arrays = OrderedDict(), {}
    for entry in header['tensors']:
        end = entry['offset'] + entry['count']
        if end > values.size:
            raise CorruptCheckpointError(f"tensor {entry['name']} runs past the payload")
        value = values[entry['offset']:end].astype(np.float64).reshape(entry['shape'])
        group, name = entry['name'].split('/', 1)
        if group == 'param':
            params[name] = value
        else:
            opt_arrays[name] = value

    optimizer = None
    if header.get('optimizer'):
        info = header['optimizer']
        optimizer = OptimizerState(info['kind'], info['hyper'], step=info['step'],
                                   skipped_steps=info['skipped_steps'])
        optimizer.load_arrays(opt_arrays)
    return Checkpoint(params, header['step'], header['config_hash'], optimizer, header.get('meta') or {})


def save_checkpoint(path: Path, ckpt: Checkpoint) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blob = encode_checkpoint(ckpt)
    path.write_bytes(blob)
    logger.info(f"✅ checkpoint saved: {path} ({len(blob)} bytes, step {ckpt.step})")
    return path


def load_checkpoint(path: Path, expected_config_hash: Optional[str] = None) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    return decode_checkpoint(path.read_bytes(), expected_config_hash)


class RunStorage:
    """files of one run directory: config copy, metrics csv, checkpoints, eval summaries"""

    CONFIG_FILE = 'config.json'
    METRICS_FILE = 'metrics.csv'
    CHECKPOINT_FILE = 'checkpoint.bin'
    INITIAL_CHECKPOINT_FILE = 'checkpoint_initial.bin'

    def __init__(self, run_dir: Path):
        self.run_dir = Path(run_dir)

    def prepare(self) -> 'RunStorage':
        self.run_dir.mkdir(parents=True, exist_ok=True)
        return self

    @property
    def metrics_path(self) -> Path:
        return self.run_dir / self.METRICS_FILE

    @property
    def checkpoint_path(self) -> Path:
        return self.run_dir / self.CHECKPOINT_FILE

    @property
    def initial_checkpoint_path(self) -> Path:
        return self.run_dir / self.INITIAL_CHECKPOINT_FILE

    def write_config(self, payload: Dict[str, Any]) -> Path:
        path = self.run_dir / self.CONFIG_FILE
        path.write_text(json.dumps(payload, sort_keys=True, indent=2) + '\n', encoding='utf-8')
        return path

    def write_json(self, name: str, payload: Dict[str, Any]) -> Path:
        path = self.run_dir / name
        path.write_text(json.dumps(payload, sort_keys=True, indent=2) + '\n', encoding='utf-8')
        return path
