"""Experiment descriptions and their JSON file format.

A Scenario bundles everything one run needs: system dimension, a
timeline of unitary segments, named projector sites pinned to stages,
pre/post states, pointer placements, declared complete projector sets
for sum-rule checks, and the numerical tolerance. Scenarios validate
themselves on construction and are immutable afterwards.

The built-in family models a three-path interferometer: paths 1..3
propagate freely (identity segments), sites E/F sit on paths 2/3 early,
D on path 1 and the crossing O later, mirrored by E'/F' and the second
crossing O'. Crossings project onto the in-phase combination
(|2>+|3>)/sqrt(2); a rank-2 variant of the crossing projector is
provided for comparing back-action models.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    NON_NORMALIZED_STATE,
    NON_PROJECTOR_SITE,
    NON_UNITARY_SEGMENT,
    SCHEMA,
    UNKNOWN_SITE,
    UNKNOWN_STAGE,
    ContractError,
    ScenarioError,
)
from .pointer import WEAK, PointerSpec
from .qcore import Ket, Operator, basis_ket, identity, ket, operator, projector_from_ket
from .twosv import PrePost, Timeline, identity_timeline, transition_amplitude

# Separators used by labels in reports and composite basis names.
RESERVED_LABEL_CHARS = "+|=,"

DEFAULT_TOLERANCE = 1e-10

KIND_KET = "ket"
KIND_MATRIX = "matrix"


@dataclass(frozen=True, eq=False)
class Site:
    """A named projector pinned to a timeline stage.

    kind/data record how the projector was defined ("ket": rank-1 from
    a vector, "matrix": explicit) so files round-trip exactly.
    """

    label: str
    stage: str
    projector: Operator
    kind: str
    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=complex)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)


def site_from_ket(label: str, stage: str, u: Ket) -> Site:
    return Site(label=label, stage=stage, projector=projector_from_ket(u), kind=KIND_KET, data=u.amps)


def site_from_matrix(label: str, stage: str, proj: Operator) -> Site:
    return Site(label=label, stage=stage, projector=proj, kind=KIND_MATRIX, data=proj.matrix)


@dataclass(frozen=True)
class SumRule:
    """Declared complete projector set: sites whose projectors sum to 1."""

    sites: tuple[str, ...]
    stage: str


@dataclass(frozen=True, eq=False)
class Scenario:
    """One fully specified pre/postselected experiment.

    System basis directions are named "1".."dim". All invariants are
    checked at construction; violations raise ScenarioError with a
    stable code and the offending element named.
    """

    dim: int
    timeline: Timeline
    prepost: PrePost
    sites: tuple[Site, ...]
    pointers: tuple[PointerSpec, ...] = ()
    sum_rules: tuple[SumRule, ...] = ()
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        object.__setattr__(self, "pointers", tuple(self.pointers))
        object.__setattr__(self, "sum_rules", tuple(self.sum_rules))
        if not isinstance(self.dim, int) or self.dim < 1:
            raise ScenarioError(SCHEMA, f"dim must be a positive integer, got {self.dim!r}")
        if not (isinstance(self.tolerance, float) and 0 < self.tolerance < 1):
            raise ScenarioError(SCHEMA, f"tolerance must be in (0, 1), got {self.tolerance!r}")
        if len(self.timeline.stages) < 2:
            raise ScenarioError(SCHEMA, "timeline needs at least two stages")
        if self.timeline.dim != self.dim:
            raise ScenarioError(
                SCHEMA, f"timeline dimension {self.timeline.dim} differs from dim {self.dim}"
            )
        if self.prepost.pre.dim != self.dim:
            raise ScenarioError(
                SCHEMA, f"pre/post dimension {self.prepost.pre.dim} differs from dim {self.dim}"
            )
        seen = set()
        for site in self.sites:
            if not site.label or any(c in site.label for c in RESERVED_LABEL_CHARS):
                raise ScenarioError(
                    SCHEMA, f"site label {site.label!r} is empty or uses a reserved character"
                )
            if site.label in seen:
                raise ScenarioError(SCHEMA, f"duplicate site label {site.label!r}")
            seen.add(site.label)
            if site.stage not in self.timeline.stages:
                raise ScenarioError(
                    UNKNOWN_STAGE, f"site {site.label!r} pinned to unknown stage {site.stage!r}"
                )
            if site.projector.dim != self.dim:
                raise ScenarioError(
                    SCHEMA, f"site {site.label!r} projector has dimension {site.projector.dim}"
                )
            if not site.projector.is_projector():
                raise ScenarioError(
                    NON_PROJECTOR_SITE, f"site {site.label!r} operator is not a projector"
                )
        pointer_sites = set()
        for ps in self.pointers:
            if ps.site not in seen:
                raise ScenarioError(UNKNOWN_SITE, f"pointer references undeclared site {ps.site!r}")
            if ps.site in pointer_sites:
                raise ScenarioError(SCHEMA, f"two pointers at site {ps.site!r}")
            pointer_sites.add(ps.site)
        for rule in self.sum_rules:
            if rule.stage not in self.timeline.stages:
                raise ScenarioError(UNKNOWN_STAGE, f"sum rule at unknown stage {rule.stage!r}")
            total = np.zeros((self.dim, self.dim), dtype=complex)
            for label in rule.sites:
                if label not in seen:
                    raise ScenarioError(UNKNOWN_SITE, f"sum rule references undeclared site {label!r}")
                total = total + self.site(label).projector.matrix
            if float(np.max(np.abs(total - np.eye(self.dim)))) > 1e-10:
                raise ScenarioError(
                    SCHEMA, f"sum rule {list(rule.sites)} does not resolve the identity"
                )

    @property
    def system_labels(self) -> tuple[str, ...]:
        return tuple(str(i + 1) for i in range(self.dim))

    def site(self, label: str) -> Site:
        for s in self.sites:
            if s.label == label:
                return s
        raise ScenarioError(UNKNOWN_SITE, f"no site named {label!r}")

    def postselection_amplitude(self) -> complex:
        return transition_amplitude(
            self.timeline,
            self.prepost,
            identity(self.dim, self.system_labels),
            self.timeline.final,
            require_projector=False,
        )

    def is_degenerate(self) -> bool:
        return abs(self.postselection_amplitude()) <= self.tolerance

    def with_overrides(self, tolerance: float | None = None, g: float | None = None) -> Scenario:
        """Copy with a new tolerance and/or weak coupling strength g."""
        out = self
        if tolerance is not None:
            out = replace(out, tolerance=float(tolerance))
        if g is not None:
            new_pointers = tuple(
                replace(ps, g=float(g)) if ps.kind == WEAK else ps for ps in out.pointers
            )
            out = replace(out, pointers=new_pointers)
        return out

    @property
    def checksum(self) -> str:
        canonical = json.dumps(to_dict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _three_path_parts():
    labels = ("1", "2", "3")
    stages = ("t_i", "t_1", "t_2", "t_3", "t_4", "t_f")
    tl = identity_timeline(stages, 3, labels)
    s3 = 1.0 / np.sqrt(3.0)
    s2 = 1.0 / np.sqrt(2.0)
    pre = ket([s3, s3, s3], labels)
    post = ket([s3, s3, -s3], labels)
    crossing = ket([0.0, s2, s2], labels)
    return labels, tl, PrePost(pre, post), crossing


def default_three_path(pointers=()) -> Scenario:
    """Reference three-path scenario with rank-1 crossing projectors.

    Paths are prepared in an equal superposition and postselected on
    (|1>+|2>-|3>)/sqrt(3). Sites: E/F on paths 2/3 at t_1, D on path 1
    and crossing O at t_2, E'/F' at t_3, second crossing O' at t_4.
    """
    labels, tl, pp, crossing = _three_path_parts()
    sites = (
        site_from_ket("E", "t_1", basis_ket(3, 1, labels)),
        site_from_ket("F", "t_1", basis_ket(3, 2, labels)),
        site_from_ket("D", "t_2", basis_ket(3, 0, labels)),
        site_from_ket("O", "t_2", crossing),
        site_from_ket("E'", "t_3", basis_ket(3, 1, labels)),
        site_from_ket("F'", "t_3", basis_ket(3, 2, labels)),
        site_from_ket("O'", "t_4", crossing),
    )
    rules = (SumRule(("D", "E", "F"), "t_1"), SumRule(("D", "E'", "F'"), "t_3"))
    return Scenario(
        dim=3,
        timeline=tl,
        prepost=pp,
        sites=sites,
        pointers=tuple(pointers),
        sum_rules=rules,
    )


def three_path_rank2_crossing(pointers=()) -> Scenario:
    """Variant modeling crossings as the rank-2 projector onto paths 2+3.

    Gives the same (zero) weak values at O and O' as the rank-1 model
    but different strong-coupling back-action.
    """
    labels, tl, pp, _ = _three_path_parts()
    both = operator(np.diag([0.0, 1.0, 1.0]), labels)
    sites = (
        site_from_ket("E", "t_1", basis_ket(3, 1, labels)),
        site_from_ket("F", "t_1", basis_ket(3, 2, labels)),
        site_from_ket("D", "t_2", basis_ket(3, 0, labels)),
        site_from_matrix("O", "t_2", both),
        site_from_ket("E'", "t_3", basis_ket(3, 1, labels)),
        site_from_ket("F'", "t_3", basis_ket(3, 2, labels)),
        site_from_matrix("O'", "t_4", both),
    )
    rules = (SumRule(("D", "E", "F"), "t_1"), SumRule(("D", "E'", "F'"), "t_3"))
    return Scenario(
        dim=3,
        timeline=tl,
        prepost=pp,
        sites=sites,
        pointers=tuple(pointers),
        sum_rules=rules,
    )


def _strong(*sites: str) -> tuple[PointerSpec, ...]:
    return tuple(PointerSpec(site=s, kind="strong") for s in sites)


def _all_weak(g: float = 0.01) -> tuple[PointerSpec, ...]:
    order = ("E", "F", "D", "O", "E'", "F'", "O'")
    return tuple(PointerSpec(site=s, kind="weak", g=g) for s in order)


BUILTIN_NAMES = (
    "three-path",
    "three-path-fig1",
    "three-path-fig1-oprime",
    "three-path-fig2",
    "three-path-allweak",
)


def builtin(name: str) -> Scenario:
    """Look up a built-in scenario by its public name."""
    if name == "three-path":
        return default_three_path()
    if name == "three-path-fig1":
        return default_three_path(_strong("D", "O"))
    if name == "three-path-fig1-oprime":
        return default_three_path(_strong("D", "O", "O'"))
    if name == "three-path-fig2":
        return default_three_path(_strong("D", "O", "E'", "F'"))
    if name == "three-path-allweak":
        return default_three_path(_all_weak())
    raise ScenarioError(
        SCHEMA, f"unknown built-in scenario {name!r}, choose from {', '.join(BUILTIN_NAMES)}"
    )


# --- JSON serialization ---------------------------------------------------


def _pairs_from_vector(vec: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in vec]


def _pairs_from_matrix(mat: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in mat.reshape(-1)]


def to_dict(sc: Scenario) -> dict:
    """Plain-JSON form of a scenario, key order fixed."""
    segments = []
    for k, seg in enumerate(sc.timeline.segments):
        segments.append(
            {
                "from": sc.timeline.stages[k],
                "to": sc.timeline.stages[k + 1],
                "matrix": _pairs_from_matrix(seg.matrix),
            }
        )
    sites = []
    for s in sc.sites:
        data = _pairs_from_vector(s.data) if s.kind == KIND_KET else _pairs_from_matrix(s.data)
        sites.append({"label": s.label, "stage": s.stage, "kind": s.kind, "data": data})
    pointers = []
    for ps in sc.pointers:
        pointers.append(
            {
                "site": ps.site,
                "kind": ps.kind,
                "g": float(ps.g),
                "sigma": float(ps.sigma),
                "grid_size": int(ps.grid_size),
                "grid_extent": float(ps.grid_extent),
            }
        )
    out = {
        "dim": sc.dim,
        "stages": list(sc.timeline.stages),
        "segments": segments,
        "pre": _pairs_from_vector(sc.prepost.pre.amps),
        "post": _pairs_from_vector(sc.prepost.post.amps),
        "sites": sites,
        "pointers": pointers,
    }
    if sc.sum_rules:
        out["sum_rules"] = [{"sites": list(r.sites), "stage": r.stage} for r in sc.sum_rules]
    out["tolerance"] = sc.tolerance
    return out


def _want(d: dict, key: str, types, where: str):
    if key not in d:
        raise ScenarioError(SCHEMA, f"{where} is missing required key {key!r}")
    val = d[key]
    if not isinstance(val, types):
        raise ScenarioError(SCHEMA, f"{where}.{key} has the wrong type")
    return val


def _parse_pair(x, where: str) -> complex:
    ok = (
        isinstance(x, (list, tuple))
        and len(x) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x)
    )
    if not ok:
        raise ScenarioError(SCHEMA, f"{where} must be a [re, im] pair, got {x!r}")
    return complex(float(x[0]), float(x[1]))


def _parse_vector(x, n: int, where: str) -> np.ndarray:
    if not isinstance(x, list) or len(x) != n:
        raise ScenarioError(SCHEMA, f"{where} must be a list of {n} [re, im] pairs")
    return np.array([_parse_pair(p, f"{where}[{i}]") for i, p in enumerate(x)], dtype=complex)


def _parse_matrix(x, n: int, where: str) -> np.ndarray:
    if not isinstance(x, list) or len(x) != n * n:
        raise ScenarioError(SCHEMA, f"{where} must be a row-major list of {n * n} [re, im] pairs")
    flat = np.array([_parse_pair(p, f"{where}[{i}]") for i, p in enumerate(x)], dtype=complex)
    return flat.reshape(n, n)


_TOP_KEYS = {"dim", "stages", "segments", "pre", "post", "sites", "pointers", "sum_rules", "tolerance"}


def from_dict(d: dict) -> Scenario:
    """Build and validate a Scenario from its plain-JSON form."""
    if not isinstance(d, dict):
        raise ScenarioError(SCHEMA, "scenario file must hold a JSON object at top level")
    for key in d:
        if key not in _TOP_KEYS:
            raise ScenarioError(SCHEMA, f"unknown top-level key {key!r}")
    dim = _want(d, "dim", int, "scenario")
    if isinstance(dim, bool) or dim < 1:
        raise ScenarioError(SCHEMA, f"dim must be a positive integer, got {dim!r}")
    stages = _want(d, "stages", list, "scenario")
    if len(stages) < 2 or not all(isinstance(s, str) and s for s in stages):
        raise ScenarioError(SCHEMA, "stages must be a list of at least two non-empty names")
    if len(set(stages)) != len(stages):
        raise ScenarioError(SCHEMA, "duplicate stage names")
    labels = tuple(str(i + 1) for i in range(dim))

    raw_segments = _want(d, "segments", list, "scenario")
    if len(raw_segments) != len(stages) - 1:
        raise ScenarioError(
            SCHEMA, f"{len(stages)} stages need {len(stages) - 1} segments, got {len(raw_segments)}"
        )
    matrices: dict[int, np.ndarray] = {}
    for i, entry in enumerate(raw_segments):
        if not isinstance(entry, dict):
            raise ScenarioError(SCHEMA, f"segments[{i}] must be an object")
        frm = _want(entry, "from", str, f"segments[{i}]")
        to = _want(entry, "to", str, f"segments[{i}]")
        name = f"segment {frm}->{to}"
        k = None
        for j in range(len(stages) - 1):
            if stages[j] == frm and stages[j + 1] == to:
                k = j
                break
        if k is None:
            raise ScenarioError(SCHEMA, f"{name} does not join consecutive stages")
        if k in matrices:
            raise ScenarioError(SCHEMA, f"{name} appears twice")
        mat = _parse_matrix(_want(entry, "matrix", list, name), dim, f"{name} matrix")
        gram = mat.conj().T @ mat
        if float(np.max(np.abs(gram - np.eye(dim)))) > 1e-10:
            raise ScenarioError(NON_UNITARY_SEGMENT, f"non-unitary segment: {name}")
        matrices[k] = mat
    timeline = Timeline(
        tuple(stages), tuple(operator(matrices[k], labels) for k in range(len(stages) - 1))
    )

    states = {}
    for key in ("pre", "post"):
        vec = _parse_vector(_want(d, key, list, "scenario"), dim, key)
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > 1e-12:
            raise ScenarioError(
                NON_NORMALIZED_STATE, f"{key} state has norm {norm:.12g}, expected 1"
            )
        states[key] = ket(vec, labels)
    prepost = PrePost(states["pre"], states["post"])

    sites = []
    for i, entry in enumerate(_want(d, "sites", list, "scenario")):
        if not isinstance(entry, dict):
            raise ScenarioError(SCHEMA, f"sites[{i}] must be an object")
        label = _want(entry, "label", str, f"sites[{i}]")
        stage = _want(entry, "stage", str, f"sites[{i}]")
        kind = _want(entry, "kind", str, f"sites[{i}]")
        where = f"site {label!r}"
        if kind == KIND_KET:
            vec = _parse_vector(_want(entry, "data", list, where), dim, f"{where} data")
            if float(np.linalg.norm(vec)) <= 1e-12:
                raise ScenarioError(NON_PROJECTOR_SITE, f"{where} ket is the zero vector")
            sites.append(site_from_ket(label, stage, ket(vec, labels)))
        elif kind == KIND_MATRIX:
            mat = _parse_matrix(_want(entry, "data", list, where), dim, f"{where} data")
            op = operator(mat, labels)
            if not op.is_projector():
                raise ScenarioError(NON_PROJECTOR_SITE, f"{where} matrix is not a projector")
            sites.append(site_from_matrix(label, stage, op))
        else:
            raise ScenarioError(SCHEMA, f"{where} kind must be 'ket' or 'matrix', got {kind!r}")

    pointers = []
    raw_pointers = d.get("pointers", [])
    if not isinstance(raw_pointers, list):
        raise ScenarioError(SCHEMA, "pointers must be a list")
    for i, entry in enumerate(raw_pointers):
        if not isinstance(entry, dict):
            raise ScenarioError(SCHEMA, f"pointers[{i}] must be an object")
        psite = _want(entry, "site", str, f"pointers[{i}]")
        pkind = _want(entry, "kind", str, f"pointers[{i}]")
        kwargs = {}
        for key, conv in (("g", float), ("sigma", float), ("grid_size", int), ("grid_extent", float)):
            if key in entry:
                val = entry[key]
                if isinstance(val, bool) or not isinstance(val, (int, float)):
                    raise ScenarioError(SCHEMA, f"pointer at {psite!r}: {key} must be a number")
                kwargs[key] = conv(val)
        try:
            pointers.append(PointerSpec(site=psite, kind=pkind, **kwargs))
        except ContractError as exc:
            raise ScenarioError(SCHEMA, str(exc)) from exc

    rules = []
    raw_rules = d.get("sum_rules", [])
    if not isinstance(raw_rules, list):
        raise ScenarioError(SCHEMA, "sum_rules must be a list")
    for i, entry in enumerate(raw_rules):
        if not isinstance(entry, dict):
            raise ScenarioError(SCHEMA, f"sum_rules[{i}] must be an object")
        rsites = _want(entry, "sites", list, f"sum_rules[{i}]")
        rstage = _want(entry, "stage", str, f"sum_rules[{i}]")
        if not all(isinstance(s, str) for s in rsites):
            raise ScenarioError(SCHEMA, f"sum_rules[{i}].sites must be site labels")
        rules.append(SumRule(tuple(rsites), rstage))

    tolerance = d.get("tolerance", DEFAULT_TOLERANCE)
    if isinstance(tolerance, bool) or not isinstance(tolerance, (int, float)):
        raise ScenarioError(SCHEMA, f"tolerance must be a number, got {tolerance!r}")

    return Scenario(
        dim=dim,
        timeline=timeline,
        prepost=prepost,
        sites=tuple(sites),
        pointers=tuple(pointers),
        sum_rules=tuple(rules),
        tolerance=float(tolerance),
    )


def dumps(sc: Scenario) -> str:
    return json.dumps(to_dict(sc), indent=2)


def loads(text: str) -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(SCHEMA, f"not valid JSON: {exc}") from exc
    return from_dict(data)


def save(sc: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(sc) + "\n")


def load(source) -> Scenario:
    """Load a scenario from a file path or a JSON string.

    Strings starting with "{" are parsed directly; anything else is
    treated as a path. I/O errors propagate as OSError.
    """
    text = str(source)
    if text.lstrip().startswith("{"):
        return loads(text)
    with open(os.fspath(source), "r", encoding="utf-8") as fh:
        return loads(fh.read())


def resolve(source: str) -> Scenario:
    """Resolve a CLI-style source: "builtin:NAME" or a file path."""
    if source.startswith("builtin:"):
        return builtin(source[len("builtin:") :])
    return load(source)
