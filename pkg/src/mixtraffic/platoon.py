"""Sequential platoon rollouts: each follower's output leads the next."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

from .baselines import IdmParams, idm_accel
from .dynamics import KinematicState, Trajectory, clamp_accel, step

RL = "RL"
IDM = "IDM"


class PlatoonCollision(RuntimeError):
    """A follower hit its leader during a run that must stay collision-free."""

    def __init__(self, vehicle_index: int, time: float, message: str = ""):
        self.vehicle_index = vehicle_index
        self.time = time
        super().__init__(message or f"follower {vehicle_index} collided at t={time:.1f} s")


@dataclass(frozen=True)
class CompositionEntry:
    controller: str
    time_gap: float
    share: float

    def __post_init__(self):
        if self.controller not in (RL, IDM):
            raise ValueError(f"controller must be {RL!r} or {IDM!r}")
        if self.time_gap <= 0:
            raise ValueError("time gap must be positive")
        if not 0 <= self.share <= 1:
            raise ValueError("share must lie in [0, 1]")


@dataclass(frozen=True)
class CompositionSpec:
    """Controller mix of a platoon.

    ``entries`` is a sequence of :class:`CompositionEntry` (or dicts with
    the same keys); shares must sum to one.
    """

    entries: tuple
    n_followers: int = 100
    seed: int = 0

    def __post_init__(self):
        entries = tuple(e if isinstance(e, CompositionEntry) else CompositionEntry(**e)
                        for e in self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise ValueError("composition needs at least one entry")
        if abs(sum(e.share for e in entries) - 1.0) > 1e-9:
            raise ValueError("composition shares must sum to 1")
        if self.n_followers < 1:
            raise ValueError("need at least one follower")

    @classmethod
    def uniform(cls, controller: str, time_gap: float, n_followers: int = 100,
                seed: int = 0) -> "CompositionSpec":
        return cls((CompositionEntry(controller, time_gap, 1.0),), n_followers, seed)

    def counts(self) -> List[int]:
        """Largest-remainder conversion of shares to vehicle counts."""
        raw = [e.share * self.n_followers for e in self.entries]
        counts = [int(math.floor(r + 1e-9)) for r in raw]
        rest = self.n_followers - sum(counts)
        order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - counts[i]), i))
        for i in order[:rest]:
            counts[i] += 1
        return counts

    def assignments(self, rng: np.random.Generator) -> List[Tuple[str, float]]:
        slots = []
        for entry, c in zip(self.entries, self.counts()):
            slots.extend([(entry.controller, entry.time_gap)] * c)
        perm = rng.permutation(len(slots))
        return [slots[i] for i in perm]

    def to_dict(self) -> dict:
        return {"n_followers": self.n_followers, "seed": self.seed,
                "entries": [asdict(e) for e in self.entries]}


@dataclass(frozen=True)
class FollowerInit:
    gap: float
    v: float
    a: float


@dataclass(frozen=True)
class CollisionEvent:
    vehicle_index: int
    time: float
    controller: str
    time_gap: float


@dataclass
class FollowerRecord:
    trajectory: Trajectory
    controller: str
    time_gap: float
    init_gap: float = float("nan")


@dataclass
class PlatoonResult:
    leader: Trajectory
    followers: List[FollowerRecord]
    collision_events: List[CollisionEvent] = field(default_factory=list)
    seed: int = 0

    @property
    def trajectories(self) -> List[Trajectory]:
        return [self.leader] + [f.trajectory for f in self.followers]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PlatoonResult):
            return NotImplemented
        return (self.leader == other.leader and len(self.followers) == len(other.followers)
                and all(a.trajectory == b.trajectory and a.controller == b.controller
                        and a.time_gap == b.time_gap
                        for a, b in zip(self.followers, other.followers))
                and self.collision_events == other.collision_events)


def init_follower(leader: Trajectory, rng: np.random.Generator,
                  gap_range: Tuple[float, float] = (10.0, 50.0)) -> FollowerInit:
    """Random initial gap; speed and acceleration copied from the leader."""
    if len(leader) < 1:
        raise ValueError("leader has no samples")
    lo, hi = gap_range
    return FollowerInit(float(rng.uniform(lo, hi)), float(leader.v[0]), float(leader.a[0]))


Controller = Union[IdmParams, object]


def _controller_fn(controller, time_gap: float):
    if isinstance(controller, IdmParams):
        p = controller.with_time_gap(time_gap)
        return lambda s: idm_accel(s.v, s.dv, s.gap, p)
    if not hasattr(controller, "act"):
        raise TypeError("controller must be IdmParams or expose act(state)")
    return controller.act


def rollout_follower(controller: Controller, leader: Trajectory, time_gap: float,
                     init: FollowerInit) -> Tuple[Trajectory, Optional[float]]:
    """Drive one follower behind ``leader``.

    Returns the follower trajectory and the collision time (``None`` if
    the run stayed collision-free). On collision the trajectory is cut at
    the last sample with a positive gap.
    """
    if leader is None or len(leader) < 2:
        raise ValueError("leader trajectory is too short")
    act = _controller_fn(controller, time_gap)
    dt = leader.dt
    n = len(leader)
    lv = leader.v
    v = np.empty(n)
    a = np.empty(n)
    state = KinematicState(init.v, float(lv[0]) - init.v, init.gap, time_gap)
    v[0] = init.v
    collided_at = None
    last = n - 1
    for k in range(n - 1):
        new = step(state, act(state), float(lv[k + 1]), dt)
        a[k] = (new.v - state.v) / dt
        if new.gap <= 0:
            collided_at = float(leader.t[k + 1])
            last = k
            break
        v[k + 1] = new.v
        state = new
    if collided_at is None:
        a_cmd = clamp_accel(act(state))
        a[last] = 0.0 if (state.v == 0.0 and a_cmd < 0) else a_cmd
    m = last + 1
    if m < 2:
        raise PlatoonCollision(-1, collided_at or 0.0, "collision before the first step")
    traj = Trajectory.from_speeds(v[:m], dt, x0=float(leader.x[0]) - init.gap,
                                  t0=float(leader.t[0]), a=a[:m])
    return traj, collided_at


def build_platoon(leader: Trajectory, spec: CompositionSpec, policy=None,
                  idm: IdmParams = IdmParams(), gap_range: Tuple[float, float] = (10.0, 50.0),
                  abort_on_collision: bool = True) -> PlatoonResult:
    """Assign controllers per ``spec`` and roll the followers out in order."""
    rng = np.random.default_rng(spec.seed)
    plan = spec.assignments(rng)
    followers: List[FollowerRecord] = []
    events: List[CollisionEvent] = []
    current = leader
    for i, (kind, T) in enumerate(plan):
        if kind == RL and policy is None:
            raise ValueError("composition contains RL vehicles but no policy was given")
        init = init_follower(current, rng, gap_range)
        controller = policy if kind == RL else idm
        try:
            traj, hit = rollout_follower(controller, current, T, init)
        except PlatoonCollision as exc:
            raise PlatoonCollision(i, exc.time) from exc
        except ValueError as exc:
            raise ValueError(f"follower {i}: {exc}") from exc
        if hit is not None:
            events.append(CollisionEvent(i, hit, kind, T))
            if abort_on_collision:
                raise PlatoonCollision(i, hit, f"follower {i} ({kind}, T={T}) collided at t={hit:.1f} s")
        followers.append(FollowerRecord(traj, kind, T, init.gap))
        current = traj
    return PlatoonResult(leader, followers, events, spec.seed)
