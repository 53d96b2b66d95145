"""Trained actor wrapper: state normalisation, action mapping, persistence."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..dynamics import A_MAX, A_MIN, KinematicState
from .mlp import Mlp

POLICY_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Normalizer:
    v_scale: float = 25.0  # m/s, the speed limit
    gap_scale: float = 100.0  # m
    t_scale: float = 2.0  # s
    a_min: float = A_MIN
    a_max: float = A_MAX

    def state(self, s: KinematicState) -> np.ndarray:
        return np.array([s.v / self.v_scale, s.dv / self.v_scale,
                         s.gap / self.gap_scale, s.time_gap / self.t_scale])

    def states(self, arr: np.ndarray) -> np.ndarray:
        scale = np.array([self.v_scale, self.v_scale, self.gap_scale, self.t_scale])
        return np.asarray(arr, dtype=float) / scale

    def denormalize_state(self, z: np.ndarray) -> KinematicState:
        v, dv, gap, T = np.asarray(z, dtype=float) * [self.v_scale, self.v_scale,
                                                      self.gap_scale, self.t_scale]
        return KinematicState(float(v), float(dv), float(gap), float(T))

    def action(self, u):
        """Map ``[-1, 1]`` to ``[a_min, a_max]``."""
        return self.a_min + (np.asarray(u) + 1.0) * 0.5 * (self.a_max - self.a_min)

    def unaction(self, a):
        return 2.0 * (np.asarray(a) - self.a_min) / (self.a_max - self.a_min) - 1.0


def normalize_state(state: KinematicState, norm: Normalizer = Normalizer()) -> np.ndarray:
    return norm.state(state)


class Policy:
    """Deterministic actor mapping car-following states to acceleration.

    ``act`` is what rollouts call; ``select_action`` adds optional
    exploration noise in the normalised action space.
    """

    def __init__(self, actor: Mlp, norm: Normalizer = Normalizer(),
                 explore_sigma: float = 0.1, meta: Optional[dict] = None):
        self.actor = actor
        self.norm = norm
        self.explore_sigma = explore_sigma
        self.meta = dict(meta or {})

    def raw(self, state: KinematicState) -> float:
        z = self.norm.state(state)[None, :]
        return float(self.actor.forward(z)[0, 0])

    def act(self, state: KinematicState) -> float:
        return float(self.norm.action(self.raw(state)))

    def select_action(self, state: KinematicState, explore: bool = False,
                      rng: Optional[np.random.Generator] = None,
                      sigma: Optional[float] = None) -> float:
        u = self.raw(state)
        if explore:
            sigma = self.explore_sigma if sigma is None else sigma
            if sigma > 0:
                u = u + sigma * rng.standard_normal()
        u = min(max(u, -1.0), 1.0)
        return float(self.norm.action(u))

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for p in self.actor.params:
            h.update(np.ascontiguousarray(p).tobytes())
        h.update(json.dumps(asdict(self.norm), sort_keys=True).encode())
        return h.hexdigest()[:16]

    def save(self, path) -> Path:
        path = Path(path)
        header = {
            "format_version": POLICY_FORMAT_VERSION,
            "sizes": list(self.actor.sizes),
            "out_activation": self.actor.out_activation,
            "normalizer": asdict(self.norm),
            "explore_sigma": self.explore_sigma,
            "meta": self.meta,
        }
        arrays = {k: v for k, v in self.actor.state_dict().items()}
        with open(path, "wb") as fh:
            np.savez(fh, header=np.array(json.dumps(header, sort_keys=True)), **arrays)
        return path

    @classmethod
    def load(cls, path) -> "Policy":
        with np.load(path, allow_pickle=False) as data:
            header = json.loads(str(data["header"]))
            if header.get("format_version") != POLICY_FORMAT_VERSION:
                raise ValueError(f"unsupported policy format {header.get('format_version')}")
            state = {k: data[k] for k in data.files if k != "header"}
        actor = Mlp.from_state(header["sizes"], header["out_activation"], state)
        return cls(actor, Normalizer(**header["normalizer"]), header["explore_sigma"],
                   header.get("meta"))


class ConstantPolicy:
    """Controller that always outputs the same acceleration."""

    def __init__(self, accel: float):
        self.accel = float(accel)

    def act(self, state: KinematicState) -> float:
        return self.accel
