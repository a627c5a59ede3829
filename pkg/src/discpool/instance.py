"""Pooling instance data: validation, seeded generation and JSON persistence."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "SCHEMA_VERSION",
    "InstanceFormatError",
    "PoolingInstance",
    "ValidationReport",
    "SplitMix64",
    "validate_instance",
    "generate_instance",
    "read_instance",
    "write_instance",
    "load_instance",
    "save_instance",
]

SCHEMA_VERSION = "pooling-instance/1"

_MASK64 = (1 << 64) - 1


class InstanceFormatError(ValueError):
    """Malformed instance document (JSON syntax or schema)."""


class SplitMix64:
    """64-bit SplitMix generator.

    Recurrence: ``state += 0x9E3779B97F4A7C15``; output is ``state`` mixed by
    ``z = (z ^ z >> 30) * 0xBF58476D1CE4E5B9``,
    ``z = (z ^ z >> 27) * 0x94D049BB133111EB``, ``z ^ z >> 31`` (mod 2^64).
    Uniform doubles take the top 53 bits.
    """

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform on [0, 1)."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()


def _frozen(a, shape) -> np.ndarray:
    arr = np.array(a, dtype=float).reshape(shape)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PoolingInstance:
    """Single-layer pooling network.

    Arrays are indexed in the order of the id tuples: ``upsilon[j, k]``,
    ``pi[i, l]``, ``psi[k, l]``, ``sigma[i, j]``.  ``sigma`` (stream to pool
    pipeline capacity) is optional and only used by the pq discretization.
    """

    streams: tuple
    pools: tuple
    products: tuple
    properties: tuple
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    upsilon: np.ndarray
    pi: np.ndarray
    psi: np.ndarray
    omega: np.ndarray
    sigma: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        for attr in ("streams", "pools", "products", "properties"):
            object.__setattr__(self, attr, tuple(str(s) for s in getattr(self, attr)))
        nI, nJ, nK, nL = self.shape
        set_ = object.__setattr__
        try:
            set_(self, "alpha", _frozen(self.alpha, (nI,)))
            set_(self, "beta", _frozen(self.beta, (nK,)))
            set_(self, "gamma", _frozen(self.gamma, (nJ,)))
            set_(self, "upsilon", _frozen(self.upsilon, (nJ, nK)))
            set_(self, "pi", _frozen(self.pi, (nI, nL)))
            set_(self, "psi", _frozen(self.psi, (nK, nL)))
            set_(self, "omega", _frozen(self.omega, (nK,)))
            if self.sigma is not None:
                set_(self, "sigma", _frozen(self.sigma, (nI, nJ)))
        except ValueError as exc:
            raise ValueError(f"parameter shape does not match index sets: {exc}") from None

    @property
    def shape(self) -> tuple:
        return len(self.streams), len(self.pools), len(self.products), len(self.properties)

    def __eq__(self, other):
        if not isinstance(other, PoolingInstance):
            return NotImplemented
        if (self.streams, self.pools, self.products, self.properties, self.name) != (
            other.streams, other.pools, other.products, other.properties, other.name
        ):
            return False
        if (self.sigma is None) != (other.sigma is None):
            return False
        names = ["alpha", "beta", "gamma", "upsilon", "pi", "psi", "omega"]
        if self.sigma is not None:
            names.append("sigma")
        return all(np.array_equal(getattr(self, a), getattr(other, a)) for a in names)

    __hash__ = None

    def replace(self, **changes) -> "PoolingInstance":
        fields = {
            a: getattr(self, a)
            for a in ("streams", "pools", "products", "properties", "alpha", "beta", "gamma",
                      "upsilon", "pi", "psi", "omega", "sigma", "name")
        }
        fields.update(changes)
        return PoolingInstance(**fields)


@dataclass
class ValidationReport:
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


_SIGN_LABELS = {
    "alpha": "cost",
    "beta": "price",
    "gamma": "pool capacity",
    "upsilon": "pipeline capacity",
    "pi": "property value",
    "psi": "specification",
    "omega": "demand",
    "sigma": "stream pipeline capacity",
}


def _index_labels(inst: PoolingInstance, name: str):
    axes = {
        "alpha": (inst.streams,),
        "beta": (inst.products,),
        "gamma": (inst.pools,),
        "upsilon": (inst.pools, inst.products),
        "pi": (inst.streams, inst.properties),
        "psi": (inst.products, inst.properties),
        "omega": (inst.products,),
        "sigma": (inst.streams, inst.pools),
    }[name]
    return axes


def validate_instance(inst: PoolingInstance) -> ValidationReport:
    report = ValidationReport()
    for label, ids in (("streams", inst.streams), ("pools", inst.pools), ("products", inst.products)):
        if not ids:
            report.errors.append(f"empty index set: {label}")
    for label, ids in (("streams", inst.streams), ("pools", inst.pools),
                       ("products", inst.products), ("properties", inst.properties)):
        if len(set(ids)) != len(ids):
            report.errors.append(f"duplicate ids in {label}")
    for name, what in _SIGN_LABELS.items():
        arr = getattr(inst, name)
        if arr is None:
            continue
        axes = _index_labels(inst, name)
        for idx in np.ndindex(arr.shape):
            v = arr[idx]
            key = ",".join(axes[d][t] for d, t in enumerate(idx))
            if not math.isfinite(v):
                report.errors.append(f"non-finite {what} {name}[{key}]")
            elif v < 0:
                report.errors.append(f"negative {what} {name}[{key}]")
    for j, pool in enumerate(inst.pools):
        for k, prod in enumerate(inst.products):
            if inst.upsilon[j, k] >= inst.gamma[j]:
                report.warnings.append(f"trivial bound at ({pool},{prod}): upsilon >= gamma")
    if inst.sigma is not None:
        for i, s in enumerate(inst.streams):
            for j, pool in enumerate(inst.pools):
                if inst.sigma[i, j] >= inst.gamma[j]:
                    report.warnings.append(f"trivial stream bound at ({s},{pool}): sigma >= gamma")
    return report


def generate_instance(dims: Sequence[int], seed: int) -> PoolingInstance:
    """Random instance with nontrivial pipeline bounds.

    ``dims`` is ``(streams, pools, products, properties)``.  Draw order is
    fixed (gamma, upsilon, sigma, alpha, beta, pi, psi, omega; row-major) so
    a seed reproduces the same instance on any platform.
    """
    if len(dims) != 4:
        raise ValueError("dims must be (streams, pools, products, properties)")
    nI, nJ, nK, nL = (int(d) for d in dims)
    if min(nI, nJ, nK) < 1 or nL < 0:
        raise ValueError(f"invalid dims {tuple(dims)}")
    rng = SplitMix64(seed)
    u = rng.uniform
    gamma = [u(50, 150) for _ in range(nJ)]
    upsilon = [[gamma[j] * u(0.2, 0.8) for _ in range(nK)] for j in range(nJ)]
    sigma = [[gamma[j] * u(0.2, 0.8) for j in range(nJ)] for _ in range(nI)]
    alpha = [u(5, 15) for _ in range(nI)]
    beta = [u(10, 25) for _ in range(nK)]
    pi = [[u(0, 3) for _ in range(nL)] for _ in range(nI)]
    lowest = [min(pi[i][l] for i in range(nI)) for l in range(nL)]
    psi = [[max(u(1, 2.5), lowest[l]) for l in range(nL)] for _ in range(nK)]
    omega = [u(30, 120) for _ in range(nK)]
    return PoolingInstance(
        streams=[f"i{i + 1}" for i in range(nI)],
        pools=[f"j{j + 1}" for j in range(nJ)],
        products=[f"k{k + 1}" for k in range(nK)],
        properties=[f"l{l + 1}" for l in range(nL)],
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        upsilon=upsilon,
        pi=pi,
        psi=psi,
        omega=omega,
        sigma=sigma,
        name=f"gen-{nI}x{nJ}x{nK}x{nL}-s{seed}",
    )


# --- JSON persistence -------------------------------------------------------

_TABLES = {
    # name: (row axis, column axis or None)
    "alpha": ("streams", None),
    "beta": ("products", None),
    "gamma": ("pools", None),
    "upsilon": ("pools", "products"),
    "pi": ("streams", "properties"),
    "psi": ("products", "properties"),
    "omega": ("products", None),
    "sigma": ("streams", "pools"),
}


def write_instance(inst: PoolingInstance) -> str:
    doc = {"version": SCHEMA_VERSION}
    if inst.name:
        doc["name"] = inst.name
    for axis in ("streams", "pools", "products", "properties"):
        doc[axis] = list(getattr(inst, axis))
    for name, (rows, cols) in _TABLES.items():
        arr = getattr(inst, name)
        if arr is None:
            continue
        row_ids = getattr(inst, rows)
        if cols is None:
            doc[name] = {r: float(arr[a]) for a, r in enumerate(row_ids)}
        else:
            col_ids = getattr(inst, cols)
            doc[name] = {
                r: {c: float(arr[a, b]) for b, c in enumerate(col_ids)} for a, r in enumerate(row_ids)
            }
    return json.dumps(doc, indent=2) + "\n"


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceFormatError(f"field {where}: expected a number, got {value!r}")
    return float(value)


def _lookup(table, key: str, where: str):
    if not isinstance(table, dict):
        raise InstanceFormatError(f"field {where}: expected an object keyed by id")
    if key not in table:
        raise InstanceFormatError(f"field {where}: missing entry for {key!r}")
    return table[key]


def read_instance(text: str) -> PoolingInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise InstanceFormatError("top level must be an object")
    version = doc.get("version")
    if version != SCHEMA_VERSION:
        raise InstanceFormatError(f"field version: expected {SCHEMA_VERSION!r}, got {version!r}")
    ids = {}
    for axis in ("streams", "pools", "products", "properties"):
        if axis not in doc:
            raise InstanceFormatError(f"missing field {axis!r}")
        vals = doc[axis]
        if not isinstance(vals, list) or not all(isinstance(v, str) for v in vals):
            raise InstanceFormatError(f"field {axis}: expected a list of string ids")
        ids[axis] = vals
    tables = {}
    for name, (rows, cols) in _TABLES.items():
        if name not in doc:
            if name == "sigma":
                tables[name] = None
                continue
            raise InstanceFormatError(f"missing field {name!r}")
        raw = doc[name]
        if cols is None:
            tables[name] = [_number(_lookup(raw, r, name), f"{name}[{r}]") for r in ids[rows]]
        else:
            tables[name] = [
                [
                    _number(_lookup(_lookup(raw, r, name), c, f"{name}[{r}]"), f"{name}[{r}][{c}]")
                    for c in ids[cols]
                ]
                for r in ids[rows]
            ]
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise InstanceFormatError("field name: expected a string")
    return PoolingInstance(name=name, **ids, **tables)


def load_instance(path) -> PoolingInstance:
    with open(path, encoding="utf-8") as fh:
        inst = read_instance(fh.read())
    if not inst.name:
        inst = inst.replace(name=Path(path).stem)
    return inst


def save_instance(inst: PoolingInstance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(write_instance(inst))
