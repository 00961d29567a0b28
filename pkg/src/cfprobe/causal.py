"""Attribute graph with planted correlations, and ancestral sampling of records.

The graph is the true data-generating process for the synthetic datasets: nodes are
the six probe attributes, roots carry marginal distributions and edges either a full
conditional-probability table (single categorical parent) or a scalar linear-effect
coefficient (exponential tilt between value indices, composable across parents).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._util import canonical_json, derive_seed
from .records import AGE_BIN_RANGES, ATTRIBUTE_CLASSES, AttributeRecord

PROB_TOL = 1e-9

NODE_VALUES = {
    "sex": list(ATTRIBUTE_CLASSES["sex"]),
    "race": list(ATTRIBUTE_CLASSES["race"]),
    "age_bin": list(ATTRIBUTE_CLASSES["age_bin"]),
    "pleural_effusion": ["absent", "present"],
    "cardiomegaly": ["absent", "present"],
    "device": list(ATTRIBUTE_CLASSES["device"]),
}


class SpecValidationError(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    parent: str
    child: str
    # exactly one of cpt / effect is set
    cpt: dict | None = None  # parent value -> {child value: prob}
    effect: float | None = None

    def to_dict(self) -> dict:
        d = {"parent": self.parent, "child": self.child}
        if self.cpt is not None:
            d["cpt"] = self.cpt
        if self.effect is not None:
            d["effect"] = self.effect
        return d


@dataclass(frozen=True)
class CausalSpec:
    """Directed acyclic attribute graph; marginals for roots, CPT or tilt per edge."""

    nodes: tuple[str, ...]
    edges: tuple[Edge, ...] = ()
    marginals: dict = field(default_factory=dict)  # node -> {value: prob}

    def __post_init__(self):
        self.validate()

    # -- validation ---------------------------------------------------------

    def validate(self) -> None:
        for node in self.nodes:
            if node not in NODE_VALUES:
                raise SpecValidationError(f"unknown node {node!r}")
        if len(set(self.nodes)) != len(self.nodes):
            raise SpecValidationError("duplicate node names")
        missing = set(ATTRIBUTE_CLASSES) - set(self.nodes)
        if missing:
            raise SpecValidationError(f"spec must declare every probe attribute; missing {sorted(missing)}")

        for e in self.edges:
            if e.parent not in self.nodes or e.child not in self.nodes:
                raise SpecValidationError(f"edge {e.parent}->{e.child} references undeclared node")
            if (e.cpt is None) == (e.effect is None):
                raise SpecValidationError(f"edge {e.parent}->{e.child} needs exactly one of cpt/effect")
            if e.cpt is not None:
                self._validate_cpt(e)

        by_child: dict[str, list[Edge]] = {}
        for e in self.edges:
            by_child.setdefault(e.child, []).append(e)
        for child, incoming in by_child.items():
            cpts = [e for e in incoming if e.cpt is not None]
            if cpts and len(incoming) > 1:
                raise SpecValidationError(
                    f"node {child!r} mixes a CPT edge with other parents; use effect edges for multi-parent nodes"
                )

        for node in self.nodes:
            if node not in by_child or all(e.effect is not None for e in by_child.get(node, [])):
                # roots and tilt-children both need a base distribution
                if node not in self.marginals:
                    raise SpecValidationError(f"node {node!r} needs a marginal distribution")
                self._validate_dist(node, self.marginals[node])

        self.topological_order()  # raises on cycles

    def _validate_cpt(self, e: Edge) -> None:
        parent_vals = set(NODE_VALUES[e.parent])
        if set(e.cpt) != parent_vals:
            raise SpecValidationError(
                f"CPT on {e.parent}->{e.child} must enumerate all parent values {sorted(parent_vals)}"
            )
        for pv, dist in e.cpt.items():
            self._validate_dist(f"{e.child}|{e.parent}={pv}", dist, node=e.child)

    def _validate_dist(self, label: str, dist: dict, node: str | None = None) -> None:
        node = node or label
        if set(dist) != set(NODE_VALUES[node]):
            raise SpecValidationError(f"distribution for {label} must cover values {NODE_VALUES[node]}")
        total = sum(dist.values())
        if abs(total - 1.0) > PROB_TOL:
            raise SpecValidationError(f"distribution for {label} sums to {total!r}, not 1")
        if any(p < 0 for p in dist.values()):
            raise SpecValidationError(f"distribution for {label} has negative probability")

    def topological_order(self) -> list[str]:
        children = {n: [] for n in self.nodes}
        indeg = {n: 0 for n in self.nodes}
        for e in self.edges:
            children[e.parent].append(e.child)
            indeg[e.child] += 1
        queue = [n for n in self.nodes if indeg[n] == 0]
        order = []
        while queue:
            n = queue.pop(0)
            order.append(n)
            for c in children[n]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        if len(order) != len(self.nodes):
            cyclic = sorted(set(self.nodes) - set(order))
            raise SpecValidationError(f"attribute graph has a cycle through {cyclic}")
        return order

    # -- conditional distribution -------------------------------------------

    def distribution(self, node: str, parents: dict) -> np.ndarray:
        """P(node | sampled parent values), over NODE_VALUES[node] order."""
        values = NODE_VALUES[node]
        incoming = [e for e in self.edges if e.child == node]
        cpt_edges = [e for e in incoming if e.cpt is not None]
        if cpt_edges:
            dist = cpt_edges[0].cpt[parents[cpt_edges[0].parent]]
            return np.array([dist[v] for v in values], dtype=np.float64)
        base = self.marginals[node]
        logp = np.log(np.maximum([base[v] for v in values], 1e-300))
        for e in incoming:  # all effect edges
            pv = parents[e.parent]
            pvals = NODE_VALUES[e.parent]
            enc_p = pvals.index(pv) / max(len(pvals) - 1, 1)
            enc_c = np.arange(len(values)) / max(len(values) - 1, 1)
            logp = logp + e.effect * enc_p * enc_c
        p = np.exp(logp - logp.max())
        return p / p.sum()

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "edges": [e.to_dict() for e in self.edges],
            "marginals": self.marginals,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CausalSpec":
        edges = tuple(
            Edge(parent=e["parent"], child=e["child"], cpt=e.get("cpt"), effect=e.get("effect"))
            for e in d.get("edges", [])
        )
        return cls(nodes=tuple(d["nodes"]), edges=edges, marginals=d.get("marginals", {}))

    def canonical(self) -> str:
        return canonical_json(self.to_dict())


def sample_attributes(spec: CausalSpec, n: int, seed: int) -> list[AttributeRecord]:
    """Ancestral sampling of n records in topological order; deterministic given seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    spec.validate()
    order = spec.topological_order()
    rng = np.random.Generator(np.random.PCG64(derive_seed("sample_attributes", seed)))
    records = []
    for i in range(n):
        assignment: dict[str, str] = {}
        for node in order:
            dist = spec.distribution(node, assignment)
            idx = rng.choice(len(dist), p=dist)
            assignment[node] = NODE_VALUES[node][idx]
        lo, hi = AGE_BIN_RANGES[assignment["age_bin"]]
        age = int(rng.integers(lo, hi + 1))
        findings = [f for f in ("pleural_effusion", "cardiomegaly") if assignment[f] == "present"]
        records.append(
            AttributeRecord(
                id=f"r{i:06d}",
                age=age,
                sex=assignment["sex"],
                race=assignment["race"],
                findings=tuple(findings),
                device=assignment["device"],
                seed=derive_seed("render", seed, i),
            )
        )
    return records


# -- bundled presets ---------------------------------------------------------

_BASE_MARGINALS = {
    "sex": {"male": 0.538, "female": 0.462},
    "race": {"asian": 0.040, "white": 0.762, "black": 0.198},
    "age_bin": {"young": 1 / 3, "middle": 1 / 3, "old": 1 / 3},
    "pleural_effusion": {"absent": 0.795, "present": 0.205},
    "cardiomegaly": {"absent": 0.65, "present": 0.35},
}


def independent_spec() -> CausalSpec:
    """Edge-free control graph; every attribute sampled independently."""
    marginals = dict(_BASE_MARGINALS)
    marginals["device"] = {"none": 0.55, "pacemaker": 0.25, "tube": 0.20}
    return CausalSpec(nodes=tuple(NODE_VALUES), edges=(), marginals=marginals)


def biased_spec(p_pacer_given_cardio: float = 0.9, p_pacer_given_no_cardio: float = 0.1) -> CausalSpec:
    """Control graph plus a planted cardiomegaly->device link."""
    edge = Edge(
        parent="cardiomegaly",
        child="device",
        cpt={
            "present": {"none": 1.0 - p_pacer_given_cardio - 0.02, "pacemaker": p_pacer_given_cardio, "tube": 0.02},
            "absent": {"none": 1.0 - p_pacer_given_no_cardio - 0.15, "pacemaker": p_pacer_given_no_cardio, "tube": 0.15},
        },
    )
    return CausalSpec(nodes=tuple(NODE_VALUES), edges=(edge,), marginals=dict(_BASE_MARGINALS))


PRESETS = {"control": independent_spec, "independent": independent_spec, "biased": biased_spec}


def load_spec(source: str | Path) -> CausalSpec:
    """Load a spec from a preset name or a JSON/YAML file."""
    name = str(source)
    if name in PRESETS:
        return PRESETS[name]()
    path = Path(source)
    text = path.read_text()
    if path.suffix in (".yaml", ".yml"):
        import yaml

        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    return CausalSpec.from_dict(data)
