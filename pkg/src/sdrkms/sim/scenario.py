"""Scenario files: line-oriented sections of ``key = value`` pairs.

configparser is not used because timeline keys (ticks) repeat and every
error must carry its line number.
"""

from dataclasses import dataclass, field, fields

from ..errors import ConfigError, FormatError
from ..identity.capabilities import ROLES
from ..labels import NATO_SECRET, ClassificationLabel
from ..lifecycle import DEFAULT_ASM_PERIOD, DEFAULT_OSM_PERIOD

EVENT_KINDS = ("PACKAGE_UPDATE", "NET_JOIN", "COMPROMISE", "ROLLOVER", "SYNC", "MANUAL_TRANSFER",
               "ALGORITHM_UPDATE")
CHANNEL_NAMES = ("x", "y", "wired", "manual")
SECTIONS = ("scenario", "channels", "nodes", "kdms", "nets", "timeline")
NET_LABEL = NATO_SECRET


@dataclass(frozen=True)
class ChannelModel:
    loss: float = 0.0
    latency: int = 1


DEFAULT_CHANNELS = {"x": ChannelModel(0.0, 1), "y": ChannelModel(0.0, 2),
                    "wired": ChannelModel(0.0, 1), "manual": ChannelModel(0.0, 10)}


@dataclass(frozen=True)
class NodeSpec:
    node_id: str
    role: str
    clearance: ClassificationLabel | None = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class NetSpec:
    net_id: str
    lead: str
    members: tuple
    shares: int = 1
    generators: tuple = ()


@dataclass(frozen=True)
class TimelineEvent:
    tick: int
    kind: str
    params: tuple = ()          # ((key, value), ...) in file order
    line: int = field(default=0, compare=False)

    def get(self, key, default=None):
        return dict(self.params).get(key, default)

    def ids(self, key) -> list[str]:
        raw = self.get(key)
        return [v.strip() for v in raw.split(",") if v.strip()] if raw else []


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    seed: int = 0
    security_bits: int = 32
    gmr_depth: int = 8
    join_timeout: int = 20
    max_retries: int = 3
    retry_backoff: int = 5
    cert_validity: int = 100_000
    asm_period: int = DEFAULT_ASM_PERIOD
    osm_period: int = DEFAULT_OSM_PERIOD
    rollover_authority: str = "RSMS"
    channels: dict = field(default_factory=lambda: dict(DEFAULT_CHANNELS))
    nodes: dict = field(default_factory=dict)       # id -> NodeSpec
    kdms: dict = field(default_factory=dict)        # parent -> tuple of children
    nets: dict = field(default_factory=dict)        # id -> NetSpec
    timeline: tuple = ()

    def ids_with_role(self, role: str) -> list[str]:
        return [n.node_id for n in self.nodes.values() if n.role == role]


_INT_KEYS = ("seed", "security_bits", "gmr_depth", "join_timeout", "max_retries", "retry_backoff",
             "cert_validity", "asm_period", "osm_period")


def _split_list(value: str) -> tuple:
    return tuple(v.strip() for v in value.split(",") if v.strip())


def _parse_lines(text: str, errors: list):
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in SECTIONS:
                errors.append(f"line {lineno}: unknown section [{section}]")
            continue
        key, sep, value = line.partition("=")
        if not sep:
            errors.append(f"line {lineno}: expected 'key = value'")
            continue
        if section is None:
            errors.append(f"line {lineno}: entry outside any section")
            continue
        yield section, key.strip(), value.strip(), lineno


def validate_config(text: str) -> ScenarioConfig:
    """Parse and check a scenario; raises ConfigError listing every problem."""
    errors: list[str] = []
    cfg = ScenarioConfig()
    channels = dict(DEFAULT_CHANNELS)
    net_fields: dict[str, dict] = {}
    net_lines: dict[str, int] = {}
    kdms_lines: dict[str, int] = {}
    timeline = []
    for section, key, value, lineno in _parse_lines(text, errors):
        where = f"line {lineno}"
        if section == "scenario":
            if key in _INT_KEYS:
                try:
                    setattr(cfg, key, int(value))
                except ValueError:
                    errors.append(f"{where}: {key} must be an integer, got {value!r}")
            elif key in ("name", "rollover_authority"):
                setattr(cfg, key, value)
            else:
                errors.append(f"{where}: unknown scenario key {key!r}")
        elif section == "channels":
            name, _, attr = key.partition(".")
            if name not in CHANNEL_NAMES or attr not in ("loss", "latency"):
                errors.append(f"{where}: unknown channel setting {key!r}")
                continue
            cur = channels[name]
            try:
                if attr == "loss":
                    loss = float(value)
                    if not 0.0 <= loss <= 1.0:
                        errors.append(f"{where}: loss probability {value} outside [0, 1]")
                    elif name == "manual" and loss:
                        errors.append(f"{where}: manual links are lossless")
                    channels[name] = ChannelModel(loss, cur.latency)
                else:
                    latency = int(value)
                    if latency < 1:
                        errors.append(f"{where}: latency must be at least 1 tick")
                    channels[name] = ChannelModel(cur.loss, latency)
            except ValueError:
                errors.append(f"{where}: {key} must be numeric, got {value!r}")
        elif section == "nodes":
            parts = value.split()
            role = parts[0].upper() if parts else ""
            if role not in ROLES or role == "OPERATOR":
                errors.append(f"{where}: node {key!r} has unknown role {role or '(none)'!r}")
                continue
            clearance = None
            for opt in parts[1:]:
                k, _, v = opt.partition("=")
                if k == "clearance":
                    try:
                        clearance = ClassificationLabel.parse(v)
                    except FormatError as exc:
                        errors.append(f"{where}: {exc}")
                else:
                    errors.append(f"{where}: unknown node option {k!r}")
            if role == "DEVICE" and clearance is None:
                clearance = NET_LABEL
            if key in cfg.nodes:
                errors.append(f"{where}: node {key!r} defined twice")
            cfg.nodes[key] = NodeSpec(key, role, clearance, lineno)
        elif section == "kdms":
            if key in cfg.kdms:
                errors.append(f"{where}: station {key!r} listed twice")
            cfg.kdms[key] = _split_list(value)
            kdms_lines[key] = lineno
        elif section == "nets":
            net, _, attr = key.partition(".")
            if attr not in ("lead", "members", "shares", "generators"):
                errors.append(f"{where}: unknown net setting {key!r}")
                continue
            net_fields.setdefault(net, {})[attr] = (value, lineno)
            net_lines.setdefault(net, lineno)
        elif section == "timeline":
            try:
                tick = int(key)
            except ValueError:
                errors.append(f"{where}: timeline key must be a tick, got {key!r}")
                continue
            kind, *opts = value.split()
            params = []
            for opt in opts:
                k, sep, v = opt.partition("=")
                if not sep:
                    errors.append(f"{where}: expected key=value, got {opt!r}")
                params.append((k, v))
            timeline.append(TimelineEvent(tick, kind, tuple(params), lineno))
    cfg.channels = channels

    for net, attrs in net_fields.items():
        where = f"line {net_lines[net]}"
        try:
            shares = int(attrs.get("shares", ("1", 0))[0])
            if shares < 1:
                raise ValueError
        except ValueError:
            errors.append(f"{where}: net {net}: shares must be a positive integer")
            shares = 1
        if "lead" not in attrs:
            errors.append(f"{where}: net {net} has no lead")
        lead = attrs.get("lead", ("", 0))[0]
        members = _split_list(attrs.get("members", ("", 0))[0])
        gens = _split_list(attrs.get("generators", ("", 0))[0])
        cfg.nets[net] = NetSpec(net, lead, members or (lead,), shares, gens)
        if gens and len(gens) != shares:
            errors.append(f"{where}: net {net} lists {len(gens)} generators for {shares} shares")
    cfg.timeline = tuple(timeline)
    errors.extend(_check_references(cfg, kdms_lines, net_lines))
    if errors:
        raise ConfigError(errors)
    return cfg


def _check_references(cfg: ScenarioConfig, kdms_lines: dict, net_lines: dict) -> list[str]:
    errors = []
    nodes = cfg.nodes

    def role_of(node_id):
        return nodes[node_id].role if node_id in nodes else None

    def need(node_id, roles, where, what):
        if node_id not in nodes:
            errors.append(f"{where}: {what} refers to undefined node {node_id!r}")
        elif roles and nodes[node_id].role not in roles:
            errors.append(f"{where}: {what} {node_id!r} must be {'/'.join(roles)}, is {nodes[node_id].role}")

    if cfg.security_bits not in (32, 512, 1024, 2048):
        errors.append(f"scenario: security_bits {cfg.security_bits} not in 32/512/1024/2048")
    if not 1 <= cfg.gmr_depth <= 20:
        errors.append("scenario: gmr_depth must lie in [1, 20]")
    if cfg.asm_period <= cfg.osm_period:
        errors.append("scenario: asm_period must exceed osm_period")
    if cfg.rollover_authority not in ROLES:
        errors.append(f"scenario: rollover_authority {cfg.rollover_authority!r} is not a role")
    if cfg.join_timeout < 1 or cfg.max_retries < 0 or cfg.retry_backoff < 1:
        errors.append("scenario: join_timeout and retry_backoff must be positive, max_retries non-negative")
    if len(cfg.ids_with_role("RSMS")) != 1:
        errors.append(f"nodes: exactly one RSMS required, found {len(cfg.ids_with_role('RSMS'))}")

    parents: dict[str, str] = {}
    for station, children in cfg.kdms.items():
        where = f"line {kdms_lines.get(station, 0)}"
        need(station, ("KDMS",), where, "KDMS station")
        for child in children:
            need(child, ("KDMS", "DEVICE"), where, f"child of {station}")
            if child in parents:
                errors.append(f"{where}: {child!r} has two parents ({parents[child]}, {station})")
            parents[child] = station
    if cfg.kdms:
        roots = [s for s in cfg.kdms if s not in parents]
        if len(roots) != 1:
            errors.append(f"kdms: expected one root station, found {len(roots)}")
        for start in cfg.kdms:
            seen, cur = set(), start
            while cur in parents:
                if cur in seen:
                    errors.append(f"kdms: cycle through {cur!r}")
                    break
                seen.add(cur)
                cur = parents[cur]

    for net in cfg.nets.values():
        where = f"line {net_lines.get(net.net_id, 0)}"
        need(net.lead, ("DEVICE",), where, f"net {net.net_id} lead")
        for m in net.members:
            need(m, ("DEVICE",), where, f"net {net.net_id} member")
        if net.lead not in net.members:
            errors.append(f"{where}: net {net.net_id} lead must be a member")
        for g in net.generators:
            need(g, ("NGDM",), where, f"net {net.net_id} generator")

    last = None
    for ev in cfg.timeline:
        where = f"line {ev.line}"
        if last is not None and ev.tick < last:
            errors.append(f"{where}: tick {ev.tick} is earlier than the previous event ({last})")
        last = ev.tick if last is None else max(last, ev.tick)
        if ev.tick < 0:
            errors.append(f"{where}: negative tick")
        if ev.kind not in EVENT_KINDS:
            errors.append(f"{where}: unknown event kind {ev.kind!r}")
            continue
        p = dict(ev.params)
        net = p.get("net")
        if ev.kind in ("NET_JOIN", "COMPROMISE", "ROLLOVER") or (ev.kind == "MANUAL_TRANSFER" and net):
            if net not in cfg.nets:
                errors.append(f"{where}: {ev.kind} names undefined net {net!r}")
        if ev.kind == "PACKAGE_UPDATE" or ev.kind == "ALGORITHM_UPDATE":
            for t in ev.ids("targets"):
                need(t, ("DEVICE",), where, f"{ev.kind} target")
            if ev.kind == "ALGORITHM_UPDATE":
                try:
                    if int(p.get("suite_id", "")) < 2:
                        errors.append(f"{where}: suite_id must be at least 2")
                except ValueError:
                    errors.append(f"{where}: ALGORITHM_UPDATE needs an integer suite_id")
        elif ev.kind == "NET_JOIN":
            need(p.get("joiner", ""), ("DEVICE",), where, "NET_JOIN joiner")
        elif ev.kind == "COMPROMISE":
            if "authorized_by" in p:
                need(p["authorized_by"], (), where, "COMPROMISE authorizer")
        elif ev.kind == "SYNC":
            need(p.get("a", ""), ("RNMS",), where, "SYNC peer a")
            need(p.get("b", ""), ("RNMS",), where, "SYNC peer b")
        elif ev.kind == "MANUAL_TRANSFER":
            src, dst = p.get("from", ""), p.get("to", "")
            need(src, ("RSMS", "NGDM"), where, "MANUAL_TRANSFER source")
            need(dst, ("RNMS", "KDMS"), where, "MANUAL_TRANSFER destination")
            if role_of(src) == "NGDM":
                if p.get("state", "ACTIVE") not in ("ACTIVE", "STANDBY"):
                    errors.append(f"{where}: state must be ACTIVE or STANDBY")
                if net in cfg.nets and src not in cfg.nets[net].generators:
                    errors.append(f"{where}: {src!r} is not a generator for net {net!r}")
                for t in ev.ids("targets"):
                    need(t, ("DEVICE",), where, "MANUAL_TRANSFER target")
                if "slot" not in p:
                    errors.append(f"{where}: NGDM transfers need slot=")
    return errors


def format_config(cfg: ScenarioConfig) -> str:
    """Text that parses back to an equivalent config."""
    out = ["[scenario]"]
    for f in fields(cfg):
        if f.name in _INT_KEYS or f.name in ("name", "rollover_authority"):
            out.append(f"{f.name} = {getattr(cfg, f.name)}")
    out += ["", "[channels]"]
    for name in CHANNEL_NAMES:
        ch = cfg.channels[name]
        if name != "manual":
            out.append(f"{name}.loss = {ch.loss!r}")
        out.append(f"{name}.latency = {ch.latency}")
    out += ["", "[nodes]"]
    for n in cfg.nodes.values():
        extra = f" clearance={n.clearance}" if n.clearance is not None else ""
        out.append(f"{n.node_id} = {n.role}{extra}")
    out += ["", "[kdms]"]
    for parent, children in cfg.kdms.items():
        out.append(f"{parent} = {', '.join(children)}")
    out += ["", "[nets]"]
    for net in cfg.nets.values():
        out.append(f"{net.net_id}.lead = {net.lead}")
        out.append(f"{net.net_id}.members = {', '.join(net.members)}")
        out.append(f"{net.net_id}.shares = {net.shares}")
        if net.generators:
            out.append(f"{net.net_id}.generators = {', '.join(net.generators)}")
    out += ["", "[timeline]"]
    for ev in cfg.timeline:
        opts = "".join(f" {k}={v}" for k, v in ev.params)
        out.append(f"{ev.tick} = {ev.kind}{opts}")
    return "\n".join(out) + "\n"


def load_scenario(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return validate_config(fh.read())
