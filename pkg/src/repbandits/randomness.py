"""Label-addressable deterministic random streams.

Every stream is keyed by hashing ``(master_seed, experiment_id, path)`` into a
128-bit Philox key. Philox is counter based, so the 64-bit word at cursor
position ``k`` is a pure function of the key and ``k``: streams can be replayed,
rewound, and derived in any order without affecting one another.

Two runs of a paired experiment share the ``shared`` stream (the algorithm's
internal randomness) and get distinct ``env`` streams (reward noise).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

Label = Union[str, int]

_U64_MAX = (1 << 64) - 1
_INV_2_53 = 2.0 ** -53


@dataclass(frozen=True)
class SeedPlan:
    master_seed: int
    experiment_id: str = "default"

    def __post_init__(self):
        if not isinstance(self.master_seed, (int, np.integer)) or isinstance(self.master_seed, bool):
            raise TypeError("master_seed must be an integer")
        if not 0 <= int(self.master_seed) <= _U64_MAX:
            raise ValueError("master_seed must be a 64-bit unsigned integer")


def _normalize_path(path: Sequence[Label]) -> tuple:
    out = []
    for label in path:
        if isinstance(label, bool):
            raise TypeError("boolean stream labels are ambiguous")
        if isinstance(label, (int, np.integer)):
            out.append(int(label))
        elif isinstance(label, str):
            out.append(label)
        else:
            raise TypeError(f"stream label must be str or int, got {type(label).__name__}")
    return tuple(out)


def _key_for(plan: SeedPlan, path: tuple) -> int:
    # json keeps 0 and "0" distinct
    material = json.dumps([int(plan.master_seed), plan.experiment_id, list(path)],
                          separators=(",", ":"))
    digest = hashlib.blake2b(material.encode("utf-8"), digest_size=16,
                             person=b"repbandits-rng").digest()
    return int.from_bytes(digest, "little")


class StreamHandle:
    """Cursor into one counter-mode stream.

    Drawing advances the cursor; :meth:`seek` moves it. Output at a given
    cursor never depends on how the cursor got there.
    """

    __slots__ = ("plan", "path", "cursor", "_key", "_gen", "_gen_pos")

    def __init__(self, plan: SeedPlan, path: Sequence[Label], cursor: int = 0):
        path = _normalize_path(path)
        if not path:
            raise ValueError("stream path must be non-empty")
        self.plan = plan
        self.path = path
        self.cursor = int(cursor)
        self._key = _key_for(plan, path)
        self._gen = None
        self._gen_pos = -1

    def __repr__(self):
        return f"StreamHandle(path={list(self.path)!r}, cursor={self.cursor})"

    def __getstate__(self):
        return {"plan": self.plan, "path": self.path, "cursor": self.cursor}

    def __setstate__(self, state):
        self.__init__(state["plan"], state["path"], state["cursor"])

    def child(self, *labels: Label) -> "StreamHandle":
        """Stream at ``path + labels``, cursor 0. Independent of this cursor."""
        return StreamHandle(self.plan, self.path + _normalize_path(labels))

    def seek(self, cursor: int) -> "StreamHandle":
        if cursor < 0:
            raise ValueError("cursor must be non-negative")
        self.cursor = int(cursor)
        return self

    def _raw(self, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError("draw count must be non-negative")
        if self._gen is None or self._gen_pos != self.cursor:
            block, offset = divmod(self.cursor, 4)
            self._gen = Philox(key=self._key, counter=block)
            if offset:
                self._gen.random_raw(offset)
        out = self._gen.random_raw(n)
        self.cursor += n
        self._gen_pos = self.cursor
        return out

    def u64(self, n: int | None = None):
        raw = self._raw(1 if n is None else n)
        return int(raw[0]) if n is None else raw

    def uniform(self, n: int | None = None):
        """Uniforms on [0, 1) with 53 bits of resolution."""
        raw = self._raw(1 if n is None else n)
        u = (raw >> np.uint64(11)).astype(np.float64) * _INV_2_53
        return float(u[0]) if n is None else u

    def normal(self, n: int | None = None):
        """Standard normals by inverse CDF, one uniform per draw."""
        raw = self._raw(1 if n is None else n)
        u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53
        z = ndtri(u)
        return float(z[0]) if n is None else z


def derive_stream(plan: SeedPlan, path: Sequence[Label]) -> StreamHandle:
    return StreamHandle(plan, path)


def paired_streams(plan: SeedPlan, trial_id: int):
    """Streams for the two runs of one trial: ``(shared, env_a, env_b)``."""
    if trial_id < 0:
        raise ValueError("trial_id must be non-negative")
    trial_id = int(trial_id)
    return (
        derive_stream(plan, ["shared", trial_id]),
        derive_stream(plan, ["env", trial_id, "a"]),
        derive_stream(plan, ["env", trial_id, "b"]),
    )
