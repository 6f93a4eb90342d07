"""Network topology, time-slot scheduling and noisy/lossy quantum channels."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

from numpy.random import Generator

from .quantum import EncodingOp, TwoQubitState, apply_encoding


class ConfigError(ValueError):
    """Invalid run configuration or network description."""


class Segment(enum.Enum):
    ALICE_TO_BOB = "alice_to_bob"
    BOB_TO_CAROL = "bob_to_carol"
    CAROL_TO_ALICE = "carol_to_alice"


def _check_prob(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class ChannelModel:
    loss_prob: float = 0.0
    flip_x_prob: float = 0.0
    flip_z_prob: float = 0.0

    def __post_init__(self):
        for name in ("loss_prob", "flip_x_prob", "flip_z_prob"):
            _check_prob(name, getattr(self, name))

    @property
    def is_identity(self) -> bool:
        return self.loss_prob == 0.0 and self.flip_x_prob == 0.0 and self.flip_z_prob == 0.0


@dataclass(frozen=True)
class Channels:
    """One channel model per logical segment of the three-party loop."""

    alice_to_bob: ChannelModel = field(default_factory=ChannelModel)
    bob_to_carol: ChannelModel = field(default_factory=ChannelModel)
    carol_to_alice: ChannelModel = field(default_factory=ChannelModel)

    def __getitem__(self, segment: Segment) -> ChannelModel:
        return getattr(self, segment.value)


def transmit(state: TwoQubitState, channel: ChannelModel, rng: Generator) -> TwoQubitState | None:
    """Carry the traveling particle over one segment; ``None`` means lost.

    X and Z errors are drawn independently after the loss draw.
    """
    if channel.is_identity:
        return state
    if channel.loss_prob and rng.random() < channel.loss_prob:
        return None
    if channel.flip_x_prob and rng.random() < channel.flip_x_prob:
        state = apply_encoding(state, EncodingOp.U2)
    if channel.flip_z_prob and rng.random() < channel.flip_z_prob:
        state = apply_encoding(state, EncodingOp.U3)
    return state


class Shape(enum.Enum):
    LOOP = "loop"
    STAR = "star"


class Role(enum.Enum):
    SERVER = "server"
    USER = "user"


@dataclass(frozen=True)
class Node:
    node_id: str
    role: Role
    server_id: str | None = None


@dataclass(frozen=True)
class Topology:
    """Loop: ``nodes`` is the cyclic order. Star: servers are hubs for their
    users and are joined to each other through the backbone."""

    shape: Shape
    nodes: tuple[Node, ...]

    def __post_init__(self):
        ids = [n.node_id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate node ids")
        servers = {n.node_id for n in self.nodes if n.role is Role.SERVER}
        if not servers:
            raise ConfigError("topology needs at least one server")
        for n in self.nodes:
            if n.role is Role.USER and n.server_id not in servers:
                raise ConfigError(f"user {n.node_id!r} has no valid owning server")
            if n.role is Role.SERVER and n.server_id is not None:
                raise ConfigError(f"server {n.node_id!r} cannot have an owner")

    def node(self, node_id: str) -> Node:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise ConfigError(f"unknown node {node_id!r}")

    def user(self, node_id: str) -> Node:
        n = self.node(node_id)
        if n.role is not Role.USER:
            raise ConfigError(f"{node_id!r} is a server, not a user")
        return n

    @classmethod
    def single_branch(cls, shape: Shape = Shape.STAR) -> "Topology":
        return cls(
            shape,
            (
                Node("alice", Role.SERVER),
                Node("bob", Role.USER, "alice"),
                Node("carol", Role.USER, "alice"),
            ),
        )


@dataclass(frozen=True)
class SegmentPath:
    segment: Segment
    path: tuple[str, ...]


@dataclass(frozen=True)
class Route:
    server: str
    relay: str | None
    segments: tuple[SegmentPath, ...]


def _loop_path(order: list[str], src: str, dst: str) -> tuple[str, ...]:
    i, n = order.index(src), len(order)
    path = [src]
    while path[-1] != dst:
        i = (i + 1) % n
        path.append(order[i])
    return tuple(path)


def route(topology: Topology, sender: str, receiver: str) -> Route:
    """Three-segment subsystem path server -> sender -> receiver -> server."""
    bob, carol = topology.user(sender), topology.user(receiver)
    if sender == receiver:
        raise ConfigError("sender and receiver must differ")
    server = bob.server_id
    relay = carol.server_id if carol.server_id != server else None

    if topology.shape is Shape.LOOP:
        order = [n.node_id for n in topology.nodes]
        legs = [(server, sender), (sender, receiver), (receiver, server)]
        paths = [_loop_path(order, a, b) for a, b in legs]
    else:
        hub = (server,) if relay is None else (server, relay)
        paths = [
            (server, sender),
            (sender, *hub, receiver),
            # return leg follows the granted path back
            (receiver, *reversed(hub)),
        ]
    return Route(
        server,
        relay,
        tuple(SegmentPath(seg, tuple(p)) for seg, p in zip(Segment, paths)),
    )


@dataclass(frozen=True)
class SlotAssignment:
    slot_id: int
    sender: str
    receiver: str
    server: str
    relay: str | None = None

    @property
    def servers(self) -> frozenset[str]:
        return frozenset(s for s in (self.server, self.relay) if s is not None)


@dataclass(frozen=True)
class TimeSlotSchedule:
    slots: tuple[SlotAssignment, ...]

    def is_valid(self) -> bool:
        seen: set[tuple[int, str]] = set()
        for a in self.slots:
            for s in a.servers:
                if (a.slot_id, s) in seen:
                    return False
                seen.add((a.slot_id, s))
        return True


def schedule(topology: Topology, requests: list[tuple[str, str]]) -> TimeSlotSchedule:
    """Give each request the earliest slot in which none of its servers is busy.

    A cross-branch request occupies the receiver's server as well, since that
    server grants the channel for the slot.
    """
    busy: dict[int, set[str]] = {}
    out = []
    for sender, receiver in requests:
        r = route(topology, sender, receiver)
        needed = {r.server} | ({r.relay} if r.relay else set())
        slot = 0
        while busy.get(slot, set()) & needed:
            slot += 1
        busy.setdefault(slot, set()).update(needed)
        out.append(SlotAssignment(slot, sender, receiver, r.server, r.relay))
    return TimeSlotSchedule(tuple(out))
