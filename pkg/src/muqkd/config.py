"""Run configuration: a JSON document with nested sections."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .adversaries import AdversaryKind, AdversaryModel
from .analysis import DEFAULT_THRESHOLD, SampleClass
from .network import ChannelModel, Channels, ConfigError, Node, Role, Segment, Shape, Topology
from .roles import ModeProbabilities
from .session import SessionSettings

MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class TopologySpec:
    topology: Topology = field(default_factory=Topology.single_branch)
    requests: tuple[tuple[str, str], ...] = (("bob", "carol"),)

    def __post_init__(self):
        if not self.requests:
            raise ConfigError("topology needs at least one sender/receiver request")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    rounds_per_session: int = 10_000
    sessions: int = 1
    workers: int = 1
    reveal_fraction: float = 0.1
    probabilities: ModeProbabilities = field(default_factory=ModeProbabilities)
    channels: Channels = field(default_factory=Channels)
    adversary: AdversaryModel = field(default_factory=AdversaryModel)
    thresholds: tuple[tuple[SampleClass, float], ...] = tuple((c, DEFAULT_THRESHOLD) for c in SampleClass)
    topology: TopologySpec = field(default_factory=TopologySpec)
    report_path: str | None = "report.json"
    transcript_path: str | None = None

    def __post_init__(self):
        if not isinstance(self.seed, int) or not 0 <= self.seed <= MAX_SEED:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.rounds_per_session < 1:
            raise ConfigError("rounds_per_session must be at least 1")
        if self.sessions < 0:
            raise ConfigError("sessions cannot be negative")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if not 0.0 <= self.reveal_fraction <= 1.0:
            raise ConfigError("reveal_fraction must lie in [0, 1]")
        for cls, t in self.thresholds:
            if not 0.0 <= t <= 1.0:
                raise ConfigError(f"threshold for {cls.value} must lie in [0, 1]")

    def session_settings(self) -> SessionSettings:
        return SessionSettings(
            rounds=self.rounds_per_session,
            probabilities=self.probabilities,
            channels=self.channels,
            adversary=self.adversary,
            thresholds=dict(self.thresholds),
            reveal_fraction=self.reveal_fraction,
        )

    def to_dict(self) -> dict:
        topo = self.topology.topology
        return {
            "seed": self.seed,
            "rounds_per_session": self.rounds_per_session,
            "sessions": self.sessions,
            "workers": self.workers,
            "reveal_fraction": self.reveal_fraction,
            "probabilities": asdict(self.probabilities),
            "channels": {s.value: asdict(self.channels[s]) for s in Segment},
            "adversary": {
                "kind": self.adversary.kind.value,
                "segment": self.adversary.segment.value,
                "attack_fraction": self.adversary.attack_fraction,
            },
            "thresholds": {c.value: t for c, t in self.thresholds},
            "topology": {
                "shape": topo.shape.value,
                "nodes": [
                    {"id": n.node_id, "role": n.role.value, **({"server": n.server_id} if n.server_id else {})}
                    for n in topo.nodes
                ],
                "requests": [list(r) for r in self.topology.requests],
            },
            "output": {"report": self.report_path, "transcript": self.transcript_path},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        try:
            return _from_dict(d)
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ConfigError(f"malformed config: {exc}") from exc

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _strict(section: dict, allowed: set[str], where: str) -> dict:
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be a mapping")
    extra = set(section) - allowed
    if extra:
        raise ConfigError(f"unknown keys in {where}: {sorted(extra)}")
    return section


def _int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer")
    return value


def _from_dict(d: dict) -> RunConfig:
    top = {
        "seed", "rounds_per_session", "sessions", "workers", "reveal_fraction",
        "probabilities", "channels", "adversary", "thresholds", "topology", "output",
    }
    _strict(d, top, "config")
    kw: dict = {}
    for key in ("seed", "rounds_per_session", "sessions", "workers"):
        if key in d:
            kw[key] = _int(d[key], key)
    if "reveal_fraction" in d:
        kw["reveal_fraction"] = float(d["reveal_fraction"])
    if "probabilities" in d:
        p = _strict(d["probabilities"], {"p_control_bob", "p_decoy_bob", "p_control_carol"}, "probabilities")
        kw["probabilities"] = ModeProbabilities(**{k: float(v) for k, v in p.items()})
    if "channels" in d:
        ch = _strict(d["channels"], {s.value for s in Segment}, "channels")
        models = {}
        for seg, spec in ch.items():
            spec = _strict(spec, {"loss_prob", "flip_x_prob", "flip_z_prob"}, f"channels.{seg}")
            models[seg] = ChannelModel(**{k: float(v) for k, v in spec.items()})
        kw["channels"] = Channels(**models)
    if "adversary" in d:
        a = _strict(d["adversary"], {"kind", "segment", "attack_fraction"}, "adversary")
        kw["adversary"] = AdversaryModel(
            kind=AdversaryKind(a.get("kind", "none")),
            segment=Segment(a.get("segment", Segment.BOB_TO_CAROL.value)),
            attack_fraction=float(a.get("attack_fraction", 1.0)),
        )
    if "thresholds" in d:
        t = _strict(d["thresholds"], {c.value for c in SampleClass}, "thresholds")
        kw["thresholds"] = tuple((c, float(t.get(c.value, DEFAULT_THRESHOLD))) for c in SampleClass)
    if "topology" in d:
        t = _strict(d["topology"], {"shape", "nodes", "requests"}, "topology")
        nodes = tuple(
            Node(n["id"], Role(n["role"]), n.get("server"))
            for n in (_strict(n, {"id", "role", "server"}, "topology.nodes") for n in t["nodes"])
        )
        topo = Topology(Shape(t.get("shape", "star")), nodes)
        requests = tuple((str(s), str(r)) for s, r in t.get("requests", [("bob", "carol")]))
        kw["topology"] = TopologySpec(topo, requests)
    if "output" in d:
        o = _strict(d["output"], {"report", "transcript"}, "output")
        kw["report_path"] = o.get("report")
        kw["transcript_path"] = o.get("transcript")
    return RunConfig(**kw)


def load(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return RunConfig.from_dict(data)
