"""Netlist data model, text parser and renderer for grounded-element circuits.

The representable class is deliberately narrow: grounded resistors, grounded
capacitors and five-terminal DVCC elements, with named output probes.  Ground
is always spelled "0" and node names are case-sensitive identifiers.

Text grammar (line oriented, "*" starts a comment line, blanks ignored)::

    R<id> <node> 0 <value>
    C<id> <node> 0 <value>
    X<id> DVCC Y1=<node> Y2=<node> X=<node> Z1=<node> Z2=<node>
          [alpha1=<v>] [alpha2=<v>] [beta1=<v>] [beta2=<v>]
          [vsat=<v>] [sat=hard|tanh|none]
    .out <label> <node>

Values take an optional engineering suffix from {f, p, n, u, m, k, meg, g}.
Suffixes are case-insensitive; "m" is always milli and mega is spelled
"meg" (matched on the full suffix token), so there is no M/m ambiguity.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .dvcc import GAIN_MAX, DvccParams, SatModel

GROUND = "0"

SUFFIXES = {
    "f": 1e-15,
    "p": 1e-12,
    "n": 1e-9,
    "u": 1e-6,
    "m": 1e-3,
    "k": 1e3,
    "meg": 1e6,
    "g": 1e9,
}

_VALUE_RE = re.compile(r"^([+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)([A-Za-z]*)$")


class NetlistError(ValueError):
    """Syntax or validation failure; carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class TerminalMap:
    """Node assignment for the five conveyor terminals (roles may share nodes)."""

    y1: str
    y2: str
    x: str
    z1: str
    z2: str

    def as_dict(self) -> dict[str, str]:
        return {"y1": self.y1, "y2": self.y2, "x": self.x, "z1": self.z1, "z2": self.z2}


@dataclass(frozen=True)
class Resistor:
    name: str
    node: str
    ohms: float


@dataclass(frozen=True)
class Capacitor:
    name: str
    node: str
    farads: float


@dataclass(frozen=True)
class Dvcc:
    name: str
    terminals: TerminalMap
    params: DvccParams


Element = Resistor | Capacitor | Dvcc


@dataclass(frozen=True)
class Probe:
    label: str
    node: str


@dataclass(frozen=True)
class Netlist:
    """An ordered collection of elements plus output probes.

    Node names are implied by use; `nodes` lists them (ground excluded) in
    first-use order, which downstream analyses rely on for deterministic
    row/state ordering.
    """

    elements: tuple[Element, ...]
    probes: tuple[Probe, ...] = ()

    @property
    def nodes(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for e in self.elements:
            for n in _element_nodes(e):
                if n != GROUND:
                    seen.setdefault(n)
        return tuple(seen)

    def dvccs(self) -> tuple[Dvcc, ...]:
        return tuple(e for e in self.elements if isinstance(e, Dvcc))

    def resistors(self) -> tuple[Resistor, ...]:
        return tuple(e for e in self.elements if isinstance(e, Resistor))

    def capacitors(self) -> tuple[Capacitor, ...]:
        return tuple(e for e in self.elements if isinstance(e, Capacitor))


def _element_nodes(e: Element) -> tuple[str, ...]:
    if isinstance(e, Dvcc):
        t = e.terminals
        return (t.y1, t.y2, t.x, t.z1, t.z2)
    return (e.node,)


def parse_value(token: str, line: int | None = None) -> float:
    """Parse a decimal number with an optional engineering suffix."""
    m = _VALUE_RE.match(token)
    if not m:
        raise NetlistError(f"bad numeric value {token!r}", line)
    base = float(m.group(1))
    suffix = m.group(2).lower()
    if not suffix:
        return base
    try:
        return base * SUFFIXES[suffix]
    except KeyError:
        raise NetlistError(f"unknown unit suffix {m.group(2)!r} in {token!r}", line) from None


def _parse_passive(tokens: list[str], line: int):
    if len(tokens) != 4:
        raise NetlistError(f"expected '<name> <node> 0 <value>', got {len(tokens)} tokens", line)
    name, node, gnd, value = tokens
    if gnd != GROUND or node == GROUND:
        raise NetlistError(
            f"passive element {name!r} must have exactly one non-ground terminal "
            "(grounded-element circuit class)", line)
    return name, node, parse_value(value, line)


_DVCC_ROLE_KEYS = ("y1", "y2", "x", "z1", "z2")
_DVCC_PARAM_KEYS = ("alpha1", "alpha2", "beta1", "beta2", "vsat", "sat")


def _parse_dvcc(tokens: list[str], line: int) -> Dvcc:
    if len(tokens) < 2 or tokens[1].upper() != "DVCC":
        raise NetlistError("X-element must be of type DVCC", line)
    name = tokens[0]
    kv: dict[str, str] = {}
    for tok in tokens[2:]:
        if "=" not in tok:
            raise NetlistError(f"expected key=value, got {tok!r}", line)
        key, _, val = tok.partition("=")
        key = key.lower()
        if key not in _DVCC_ROLE_KEYS and key not in _DVCC_PARAM_KEYS:
            raise NetlistError(f"unknown DVCC attribute {key!r}", line)
        if key in kv:
            raise NetlistError(f"duplicate DVCC attribute {key!r}", line)
        kv[key] = val
    missing = [k for k in _DVCC_ROLE_KEYS if k not in kv]
    if missing:
        raise NetlistError(f"missing terminal role(s): {', '.join(k.upper() for k in missing)}", line)
    terminals = TerminalMap(y1=kv["y1"], y2=kv["y2"], x=kv["x"], z1=kv["z1"], z2=kv["z2"])
    defaults = DvccParams()
    sat = defaults.sat_model
    if "sat" in kv:
        try:
            sat = SatModel(kv["sat"].lower())
        except ValueError:
            raise NetlistError(f"sat must be one of hard|tanh|none, got {kv['sat']!r}", line) from None
    params = DvccParams(
        beta1=parse_value(kv["beta1"], line) if "beta1" in kv else defaults.beta1,
        beta2=parse_value(kv["beta2"], line) if "beta2" in kv else defaults.beta2,
        alpha1=parse_value(kv["alpha1"], line) if "alpha1" in kv else defaults.alpha1,
        alpha2=parse_value(kv["alpha2"], line) if "alpha2" in kv else defaults.alpha2,
        v_sat=parse_value(kv["vsat"], line) if "vsat" in kv else defaults.v_sat,
        sat_model=sat,
    )
    return Dvcc(name, terminals, params)


def parse(text: str) -> Netlist:
    """Parse netlist source into a validated Netlist.

    Raises NetlistError with a line number for syntax problems, or with the
    collected violation list when the assembled netlist fails `validate`.
    """
    elements: list[Element] = []
    probes: list[Probe] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("*"):
            continue
        tokens = stripped.split()
        head = tokens[0]
        if head.startswith("."):
            if head.lower() != ".out":
                raise NetlistError(f"unknown directive {head!r}", lineno)
            if len(tokens) != 3:
                raise NetlistError("expected '.out <label> <node>'", lineno)
            probes.append(Probe(tokens[1], tokens[2]))
        elif head[0] in "Rr":
            name, node, ohms = _parse_passive(tokens, lineno)
            elements.append(Resistor(name, node, ohms))
        elif head[0] in "Cc":
            name, node, farads = _parse_passive(tokens, lineno)
            elements.append(Capacitor(name, node, farads))
        elif head[0] in "Xx":
            elements.append(_parse_dvcc(tokens, lineno))
        else:
            raise NetlistError(f"unknown element {head!r}", lineno)
    netlist = Netlist(tuple(elements), tuple(probes))
    problems = validate(netlist)
    if problems:
        raise NetlistError("; ".join(problems))
    return netlist


def render(netlist: Netlist) -> str:
    """Render back to netlist source.  parse(render(n)) == n for valid n.

    Values are written as plain decimals (repr of the float) so the
    round-trip is exact.
    """
    lines = []
    for e in netlist.elements:
        if isinstance(e, Resistor):
            lines.append(f"{e.name} {e.node} 0 {e.ohms!r}")
        elif isinstance(e, Capacitor):
            lines.append(f"{e.name} {e.node} 0 {e.farads!r}")
        else:
            t, p = e.terminals, e.params
            lines.append(
                f"{e.name} DVCC Y1={t.y1} Y2={t.y2} X={t.x} Z1={t.z1} Z2={t.z2}"
                f" alpha1={p.alpha1!r} alpha2={p.alpha2!r}"
                f" beta1={p.beta1!r} beta2={p.beta2!r}"
                f" vsat={p.v_sat!r} sat={p.sat_model.value}"
            )
    for pr in netlist.probes:
        lines.append(f".out {pr.label} {pr.node}")
    return "\n".join(lines) + "\n"


def validate(netlist: Netlist) -> list[str]:
    """Check all structural invariants; returns the list of violations.

    An empty list means the netlist is well formed.  Never raises.
    """
    problems: list[str] = []
    names: set[str] = set()
    for e in netlist.elements:
        if e.name in names:
            problems.append(f"duplicate element name {e.name!r}")
        names.add(e.name)
        if isinstance(e, Resistor) and not e.ohms > 0:
            problems.append(f"resistor {e.name!r} has nonpositive value {e.ohms!r}")
        if isinstance(e, Capacitor) and not e.farads > 0:
            problems.append(f"capacitor {e.name!r} has nonpositive value {e.farads!r}")
        if isinstance(e, Dvcc):
            problems.extend(_check_dvcc(e, netlist))

    labels: set[str] = set()
    known = set(netlist.nodes) | {GROUND}
    for pr in netlist.probes:
        if pr.label in labels:
            problems.append(f"duplicate probe label {pr.label!r}")
        labels.add(pr.label)
        if pr.node not in known:
            problems.append(f"probe {pr.label!r} references unknown node {pr.node!r}")

    if not any(isinstance(e, Capacitor) for e in netlist.elements):
        problems.append("no dynamic elements (at least one capacitor required)")
    return problems


def _check_dvcc(e: Dvcc, netlist: Netlist) -> list[str]:
    problems = []
    if e.terminals.x == GROUND:
        problems.append(f"DVCC {e.name!r}: X terminal grounded")
    else:
        has_r = any(isinstance(o, Resistor) and o.node == e.terminals.x
                    for o in netlist.elements)
        if not has_r:
            problems.append(
                f"DVCC {e.name!r}: X node {e.terminals.x!r} has no grounded resistor "
                "(X-node current would be undefined)")
    p = e.params
    for label, gain in (("beta1", p.beta1), ("beta2", p.beta2),
                        ("alpha1", p.alpha1), ("alpha2", p.alpha2)):
        if not 0 < gain <= GAIN_MAX:
            problems.append(f"DVCC {e.name!r}: {label}={gain!r} outside (0, {GAIN_MAX}]")
    if p.sat_model is not SatModel.NONE and not p.v_sat > 0:
        problems.append(f"DVCC {e.name!r}: vsat={p.v_sat!r} must be positive")
    return problems


def canonical_quadrature_netlist(r1: float, r2: float, c1: float, c2: float,
                                 params: DvccParams | None = None) -> Netlist:
    """Build the single-conveyor grounded-component quadrature oscillator.

    Node n1 carries grounded R1 and C1 and connects to Y1 and Z2; node n2
    carries grounded C2 and connects to Y2 and Z1; node n3 is the X terminal
    with grounded R2.  Probes: V01 taps n3 (the conveyor output) and V02
    taps n2 (the integrated output).  This wiring is the unique assignment
    (up to relabeling) whose damping term pairs alpha1 with the 1/(R2*C2)
    rate; see docs/oscillator.md for the derivation.
    """
    if params is None:
        params = DvccParams()
    for label, v in (("r1", r1), ("r2", r2), ("c1", c1), ("c2", c2)):
        if not v > 0:
            raise ValueError(f"{label} must be positive, got {v!r}")
    elements = (
        Resistor("R1", "n1", r1),
        Capacitor("C1", "n1", c1),
        Capacitor("C2", "n2", c2),
        Resistor("R2", "n3", r2),
        Dvcc("X1", TerminalMap(y1="n1", y2="n2", x="n3", z1="n2", z2="n1"), params),
    )
    probes = (Probe("V01", "n3"), Probe("V02", "n2"))
    return Netlist(elements, probes)
