"""Device specification: schema, validation, serialization, bundled data.

A DeviceSpec is the single source of truth for predictions: grid geometry,
per-qubit frequencies/anharmonicities (optionally charging/Josephson
energies), the coupling edge list, enclosure parameters, and analysis
configuration.  JSON is canonical; a CSV reader is provided for the
flat per-qubit characterization-table shape.

Validation is strict and line-diagnosed: duplicate indices, dangling
edges, non-negative anharmonicities, and grid-inconsistent indices are
rejected with the offending record named.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field, asdict
from importlib import resources

from .enclosure import EnclosureSpec

__all__ = [
    "QubitRecord",
    "CouplingEdge",
    "AnalysisConfig",
    "DeviceSpec",
    "SchemaError",
    "load_device_spec",
    "parse_device_spec",
    "device_spec_to_json",
    "load_device_table_csv",
    "bundled_device_4x4",
    "content_digest",
    "nearest_neighbor_pairs",
]


class SchemaError(ValueError):
    """A device spec violated its schema; message names the record."""


@dataclass(frozen=True)
class QubitRecord:
    index: int
    omega_mhz: float
    alpha_mhz: float
    ec_mhz: float | None = None
    ej_mhz: float | None = None


@dataclass(frozen=True)
class CouplingEdge:
    i: int
    j: int
    j_mhz: float | None = None
    ec_mhz: float | None = None   # mutual charging energy, alternative to j_mhz


@dataclass(frozen=True)
class AnalysisConfig:
    threshold_khz: float = 1.0
    outlier_pairs: tuple = ()
    pole_tolerance_mhz: float = 1.0


@dataclass
class DeviceSpec:
    rows: int
    cols: int
    pitch_mm: float
    qubits: list
    edges: list
    enclosure: EnclosureSpec | None = None
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)

    def __post_init__(self):
        self.validate()

    @property
    def n(self) -> int:
        return len(self.qubits)

    def qubit(self, index: int) -> QubitRecord:
        return self._by_index[index]

    def validate(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise SchemaError("grid shape must be at least 1x1")
        if self.pitch_mm <= 0:
            raise SchemaError(f"lattice pitch must be positive, got {self.pitch_mm}")
        seen = {}
        for pos, q in enumerate(self.qubits):
            if q.index in seen:
                raise SchemaError(
                    f"qubit record {pos}: duplicate index {q.index} "
                    f"(first at record {seen[q.index]})")
            seen[q.index] = pos
            if not 0 <= q.index < self.rows * self.cols:
                raise SchemaError(
                    f"qubit record {pos}: index {q.index} outside the "
                    f"{self.rows}x{self.cols} grid")
            if not (q.omega_mhz > 0 and q.omega_mhz == q.omega_mhz):
                raise SchemaError(f"qubit {q.index}: frequency must be positive/finite")
            if q.alpha_mhz >= 0:
                raise SchemaError(
                    f"qubit {q.index}: anharmonicity must be negative "
                    f"(transmon convention), got {q.alpha_mhz:+g} MHz")
            if (q.ec_mhz is None) != (q.ej_mhz is None):
                raise SchemaError(f"qubit {q.index}: provide both ec/ej or neither")
        for pos, e in enumerate(self.edges):
            if e.i == e.j:
                raise SchemaError(f"edge record {pos}: self-edge on {e.i}")
            for end in (e.i, e.j):
                if end not in seen:
                    raise SchemaError(f"edge record {pos}: dangling endpoint {end}")
            if e.j_mhz is None and e.ec_mhz is None:
                raise SchemaError(f"edge record {pos}: needs j_mhz or ec_mhz")
        self._by_index = {q.index: q for q in self.qubits}

    def omegas(self):
        return [q.omega_mhz for q in sorted(self.qubits, key=lambda q: q.index)]

    def alphas(self):
        return [q.alpha_mhz for q in sorted(self.qubits, key=lambda q: q.index)]


def nearest_neighbor_pairs(rows: int, cols: int) -> list[tuple[int, int]]:
    pairs = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                pairs.append((i, i + 1))
            if r + 1 < rows:
                pairs.append((i, i + cols))
    return sorted(pairs)


def parse_device_spec(text: str) -> DeviceSpec:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as err:
        raise SchemaError(f"not valid JSON: line {err.lineno}: {err.msg}") from None
    try:
        grid = obj["grid"]
        qubits = [QubitRecord(index=int(q["index"]), omega_mhz=float(q["omega_mhz"]),
                              alpha_mhz=float(q["alpha_mhz"]),
                              ec_mhz=_opt(q, "ec_mhz"), ej_mhz=_opt(q, "ej_mhz"))
                  for q in obj["qubits"]]
        edges = [CouplingEdge(i=int(e["i"]), j=int(e["j"]),
                              j_mhz=_opt(e, "j_mhz"), ec_mhz=_opt(e, "ec_mhz"))
                 for e in obj.get("edges", [])]
    except (KeyError, TypeError, ValueError) as err:
        raise SchemaError(f"malformed device spec: {err!r}") from None
    enclosure = None
    if obj.get("enclosure"):
        enc = obj["enclosure"]
        enclosure = EnclosureSpec(
            pitch_mm=float(enc["pitch_mm"]), beta=float(enc["beta"]),
            omega0_mhz=float(enc["omega0_mhz"]),
            n=enc.get("n"), m=enc.get("m"),
            boundary_l_ratio=float(enc.get("boundary_l_ratio", 0.0)))
    cfg = obj.get("analysis", {})
    analysis = AnalysisConfig(
        threshold_khz=float(cfg.get("threshold_khz", 1.0)),
        outlier_pairs=tuple(tuple(int(v) for v in p) for p in cfg.get("outlier_pairs", [])),
        pole_tolerance_mhz=float(cfg.get("pole_tolerance_mhz", 1.0)))
    return DeviceSpec(rows=int(grid["rows"]), cols=int(grid["cols"]),
                      pitch_mm=float(obj["pitch_mm"]), qubits=qubits, edges=edges,
                      enclosure=enclosure, analysis=analysis)


def _opt(record, key):
    return float(record[key]) if record.get(key) is not None else None


def load_device_spec(path) -> DeviceSpec:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if str(path).endswith(".csv"):
        return load_device_table_csv(text)
    return parse_device_spec(text)


def device_spec_to_json(spec: DeviceSpec) -> str:
    obj = {
        "grid": {"rows": spec.rows, "cols": spec.cols},
        "pitch_mm": spec.pitch_mm,
        "qubits": [_strip(asdict(q)) for q in spec.qubits],
        "edges": [_strip(asdict(e)) for e in spec.edges],
        "enclosure": None if spec.enclosure is None else {
            "pitch_mm": spec.enclosure.pitch_mm, "beta": spec.enclosure.beta,
            "omega0_mhz": spec.enclosure.omega0_mhz,
            "n": spec.enclosure.n, "m": spec.enclosure.m,
            "boundary_l_ratio": spec.enclosure.boundary_l_ratio},
        "analysis": {"threshold_khz": spec.analysis.threshold_khz,
                     "outlier_pairs": [list(p) for p in spec.analysis.outlier_pairs],
                     "pole_tolerance_mhz": spec.analysis.pole_tolerance_mhz},
    }
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _strip(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None}


DEVICE_TABLE_COLUMNS = ("qubit", "wr_mhz", "wq_mhz", "qi", "kext_mhz", "chi_khz",
                        "alpha_mhz", "t1_us", "t2r_us", "t2e_us")


def load_device_table_csv(text: str, rows: int = 4, cols: int = 4,
                          pitch_mm: float = 2.0,
                          nn_j_mhz: float | None = None) -> DeviceSpec:
    """Read the flat characterization-table CSV into a DeviceSpec.

    Expected columns: qubit,wr_mhz,wq_mhz,qi,kext_mhz,chi_khz,alpha_mhz,
    t1_us,t2r_us,t2e_us.  Qubit labels may be 'Q1'-style (1-based) or plain
    indices.  Coherence/readout columns are accepted and ignored.  With
    ``nn_j_mhz`` set, uniform nearest-neighbor edges are added.
    """
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or "wq_mhz" not in reader.fieldnames:
        raise SchemaError(
            f"device table must carry columns {','.join(DEVICE_TABLE_COLUMNS)}")
    qubits = []
    for line, rec in enumerate(reader, start=2):
        label = rec["qubit"].strip()
        if label.upper().startswith("Q"):
            index = int(label[1:]) - 1
        else:
            index = int(label)
        try:
            qubits.append(QubitRecord(index=index, omega_mhz=float(rec["wq_mhz"]),
                                      alpha_mhz=float(rec["alpha_mhz"])))
        except (KeyError, ValueError) as err:
            raise SchemaError(f"device table line {line}: {err!r}") from None
    edges = []
    if nn_j_mhz is not None:
        edges = [CouplingEdge(i=i, j=j, j_mhz=nn_j_mhz)
                 for i, j in nearest_neighbor_pairs(rows, cols)]
    return DeviceSpec(rows=rows, cols=cols, pitch_mm=pitch_mm,
                      qubits=qubits, edges=edges)


def bundled_device_4x4() -> DeviceSpec:
    """The packaged 16-qubit reference device (4x4 grid, 2 mm pitch)."""
    text = resources.files("xtalk.data").joinpath("device_4x4.json").read_text()
    return parse_device_spec(text)


def content_digest(spec: DeviceSpec) -> str:
    """sha256 over the canonicalized JSON form (sorted keys, repr floats)."""
    canonical = json.dumps(json.loads(device_spec_to_json(spec)),
                           sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()
