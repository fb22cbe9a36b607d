"""Facility-location (ambulance placement) instances and their QUBO encodings.

Three encodings are provided:

* ``ComplementSingle`` -- one ambulance over L sites, one qubit per site where
  a ``0`` marks the ambulance; the cost sums pairwise distances among the
  ``1``s plus a Hamming-weight penalty targeting weight c = L - 1.
* ``StartDest`` -- m ambulances with explicit start and destination one-hot
  blocks (2*m*L qubits); squared constraints force one start per ambulance and
  single service per site.
* ``PositionLinear`` -- one qubit per site where a ``1`` marks an ambulance;
  the cost is a linear field of summed distances plus an optional cardinality
  penalty.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .qubo import QuboModel, SpectrumEntry, bits_from_string, enumerate_spectrum, string_from_index


@dataclass
class FacilityProblem:
    """Problem instance: geometry, ambulance count, metric and penalty weight.

    geometry is ``("line", L)`` or ``("grid", rows, cols)`` with unit-spaced
    integer coordinates.  Exactly one of lambda_ / lambda_ratio must be set;
    lambda_ratio expresses the penalty as a multiple of the largest pairwise
    distance.
    """

    geometry: tuple
    ambulances: int = 1
    metric: str = "squared-euclidean"
    lambda_: float | None = None
    lambda_ratio: float | None = None
    forbid_colocation: bool = False

    def __post_init__(self) -> None:
        if self.geometry[0] not in ("line", "grid"):
            raise ValueError(f"unknown geometry {self.geometry!r}")
        if self.metric not in ("squared-euclidean", "euclidean", "manhattan"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if (self.lambda_ is None) == (self.lambda_ratio is None):
            raise ValueError("exactly one of lambda_ / lambda_ratio must be set")
        if not 1 <= self.ambulances <= self.num_locations:
            raise ValueError("need num_locations >= ambulances >= 1")

    @property
    def num_locations(self) -> int:
        if self.geometry[0] == "line":
            return self.geometry[1]
        return self.geometry[1] * self.geometry[2]

    def coordinates(self) -> np.ndarray:
        """Integer (x, y) coordinates of every location, row-major for grids."""
        if self.geometry[0] == "line":
            return np.array([(i, 0) for i in range(self.geometry[1])])
        rows, cols = self.geometry[1], self.geometry[2]
        return np.array([(r, c) for r in range(rows) for c in range(cols)])

    def penalty_weight(self) -> float:
        if self.lambda_ is not None:
            return float(self.lambda_)
        return float(self.lambda_ratio) * float(distance_matrix(self).max())


def distance_matrix(problem: FacilityProblem) -> np.ndarray:
    """Symmetric all-pairs distance matrix under the problem's metric."""
    xy = problem.coordinates().astype(float)
    diff = xy[:, None, :] - xy[None, :, :]
    if problem.metric == "squared-euclidean":
        return (diff**2).sum(axis=-1)
    if problem.metric == "euclidean":
        return np.sqrt((diff**2).sum(axis=-1))
    return np.abs(diff).sum(axis=-1)


@dataclass
class Encoding:
    """Variable layout and feasibility metadata produced by an encoder.

    qubit_roles maps each qubit to a tag tuple:
    ``("location", i)`` for single-block encodings,
    ``("start", a, i)`` / ``("dest", a, i)`` for StartDest.
    hamming_targets is a list of ((first_qubit, last_qubit+1), weight) pairs.
    objective is the penalty-free part of the encoded model.
    """

    variant: str
    n_qubits: int
    qubit_roles: list[tuple]
    hamming_targets: list[tuple[tuple[int, int], int]]
    problem: FacilityProblem
    objective: QuboModel
    c: int | None = None

    def __post_init__(self) -> None:
        if len(self.qubit_roles) != self.n_qubits:
            raise ValueError("qubit_roles must cover every qubit exactly once")


@dataclass
class Placement:
    positions: list[int]
    assignments: list[int]
    total_distance: float


def encode_single_complement(problem: FacilityProblem) -> tuple[QuboModel, Encoding]:
    """One-ambulance encoding over L qubits where a `0` marks the ambulance.

    C(s) = sum_{i<j} s_i D_ij s_j + lambda * sum s_i P_ij s_j with
    D_ij = -dist(i, j), P_ii = 1 - 2c, P_{i<j} = 2 and c = L - 1.
    """
    if problem.ambulances != 1:
        raise ValueError("ComplementSingle requires exactly one ambulance")
    L = problem.num_locations
    lam = problem.penalty_weight()
    dist = distance_matrix(problem)
    c = L - 1

    linear = {i: lam * (1.0 - 2.0 * c) for i in range(L)}
    quadratic = {}
    obj_quadratic = {}
    for i in range(L):
        for j in range(i + 1, L):
            obj_quadratic[(i, j)] = -float(dist[i, j])
            quadratic[(i, j)] = -float(dist[i, j]) + 2.0 * lam
    model = QuboModel(n=L, linear=linear, quadratic=quadratic)
    objective = QuboModel(n=L, quadratic=obj_quadratic)
    enc = Encoding(
        variant="ComplementSingle",
        n_qubits=L,
        qubit_roles=[("location", i) for i in range(L)],
        hamming_targets=[((0, L), c)],
        problem=problem,
        objective=objective,
        c=c,
    )
    return model, enc


def encode_start_dest(problem: FacilityProblem) -> tuple[QuboModel, Encoding]:
    """Start/destination one-hot encoding over 2*m*L qubits.

    Layout: start blocks for each ambulance, then dest blocks for each
    ambulance.  Objective sums start(a,i)*dest(a,l)*dist(i,l); squared
    constraints force one start per ambulance and one server per site; the
    constant terms of the squares are kept in the offset so proper feasible
    states cost exactly their total distance.
    """
    L = problem.num_locations
    m = problem.ambulances
    lam = problem.penalty_weight()
    dist = distance_matrix(problem)

    def start_q(a: int, i: int) -> int:
        return a * L + i

    def dest_q(a: int, i: int) -> int:
        return m * L + a * L + i

    n = 2 * m * L
    linear: dict[int, float] = {}
    quadratic: dict[tuple[int, int], float] = {}
    obj_quadratic: dict[tuple[int, int], float] = {}

    def add_quad(d: dict, i: int, j: int, coeff: float) -> None:
        if i == j:
            raise ValueError("diagonal quadratic term")
        key = (i, j) if i < j else (j, i)
        d[key] = d.get(key, 0.0) + coeff

    # objective: distance from each ambulance start to each site it serves
    for a in range(m):
        for i in range(L):
            for l in range(L):
                if dist[i, l] != 0.0:
                    add_quad(obj_quadratic, start_q(a, i), dest_q(a, l), float(dist[i, l]))
    quadratic.update(obj_quadratic)

    # (sum_i start(a,i) - 1)^2 = 1 - sum_i start + 2 sum_{i<j} start_i start_j
    offset = 0.0
    for a in range(m):
        offset += lam
        for i in range(L):
            linear[start_q(a, i)] = linear.get(start_q(a, i), 0.0) - lam
            for j in range(i + 1, L):
                add_quad(quadratic, start_q(a, i), start_q(a, j), 2.0 * lam)
    # (sum_a dest(a,l) - 1)^2 per site
    for l in range(L):
        offset += lam
        for a in range(m):
            linear[dest_q(a, l)] = linear.get(dest_q(a, l), 0.0) - lam
            for b in range(a + 1, m):
                add_quad(quadratic, dest_q(a, l), dest_q(b, l), 2.0 * lam)

    if problem.forbid_colocation:
        for i in range(L):
            for a in range(m):
                for b in range(a + 1, m):
                    add_quad(quadratic, start_q(a, i), start_q(b, i), lam)

    roles = [("start", a, i) for a in range(m) for i in range(L)]
    roles += [("dest", a, i) for a in range(m) for i in range(L)]
    targets = [((a * L, (a + 1) * L), 1) for a in range(m)]
    targets.append(((m * L, 2 * m * L), L))

    model = QuboModel(n=n, linear=linear, quadratic=quadratic, offset=offset)
    objective = QuboModel(n=n, quadratic=obj_quadratic)
    enc = Encoding(
        variant="StartDest",
        n_qubits=n,
        qubit_roles=roles,
        hamming_targets=targets,
        problem=problem,
        objective=objective,
    )
    return model, enc


def encode_position_linear(
    problem: FacilityProblem, include_penalty: bool = True
) -> tuple[QuboModel, Encoding]:
    """Relaxed-metric encoding: a `1` marks an ambulance, cost is a linear field.

    field_i = sum_l dist(i, l); the cardinality penalty lambda*(sum s - m)^2 is
    omitted when an XY mixer enforces the weight instead.
    """
    L = problem.num_locations
    m = problem.ambulances
    dist = distance_matrix(problem)
    fields = dist.sum(axis=1)

    linear = {i: float(fields[i]) for i in range(L)}
    quadratic: dict[tuple[int, int], float] = {}
    offset = 0.0
    if include_penalty:
        lam = problem.penalty_weight()
        # (sum s - m)^2 = m^2 + (1 - 2m) sum s + 2 sum_{i<j} s_i s_j
        offset += lam * m * m
        for i in range(L):
            linear[i] = linear.get(i, 0.0) + lam * (1.0 - 2.0 * m)
            for j in range(i + 1, L):
                quadratic[(i, j)] = 2.0 * lam
    model = QuboModel(n=L, linear=linear, quadratic=quadratic, offset=offset)
    objective = QuboModel(n=L, linear={i: float(fields[i]) for i in range(L)})
    enc = Encoding(
        variant="PositionLinear",
        n_qubits=L,
        qubit_roles=[("location", i) for i in range(L)],
        hamming_targets=[((0, L), m)],
        problem=problem,
        objective=objective,
    )
    return model, enc


def is_feasible(encoding: Encoding, s: str | Sequence[int]) -> bool:
    """True iff every Hamming-weight target of the encoding holds."""
    bits = bits_from_string(s) if isinstance(s, str) else np.asarray(s)
    if len(bits) != encoding.n_qubits:
        raise ValueError(f"state length {len(bits)} != {encoding.n_qubits}")
    return all(int(bits[lo:hi].sum()) == w for (lo, hi), w in encoding.hamming_targets)


def feasible_indices(encoding: Encoding) -> Iterator[int]:
    """Generate all feasible basis indices without scanning the full space."""
    block_choices = []
    for (lo, hi), w in encoding.hamming_targets:
        choices = []
        for ones in itertools.combinations(range(lo, hi), w):
            choices.append(sum(1 << q for q in ones))
        block_choices.append(choices)
    for combo in itertools.product(*block_choices):
        yield sum(combo)


def decode_solution(encoding: Encoding, s: str) -> Placement:
    """Extract ambulance positions and per-site assignments from a feasible state."""
    if not is_feasible(encoding, s):
        raise ValueError(f"cannot decode infeasible state {s!r}")
    bits = bits_from_string(s)
    problem = encoding.problem
    dist = distance_matrix(problem)
    L = problem.num_locations

    if encoding.variant == "ComplementSingle":
        pos = int(np.flatnonzero(bits == 0)[0])
        total = float(dist[pos].sum())
        return Placement(positions=[pos], assignments=[0] * L, total_distance=total)

    if encoding.variant == "PositionLinear":
        positions = [int(i) for i in np.flatnonzero(bits == 1)]
        total = float(sum(dist[p].sum() for p in positions))
        # every site contributes to every ambulance's field; assignment is formal
        return Placement(positions=positions, assignments=[0] * L, total_distance=total)

    m = problem.ambulances
    positions = [int(np.flatnonzero(bits[a * L : (a + 1) * L])[0]) for a in range(m)]
    assignments = []
    for l in range(L):
        servers = [a for a in range(m) if bits[m * L + a * L + l]]
        if len(servers) != 1:
            raise ValueError(f"site {l} served {len(servers)} times in {s!r}")
        assignments.append(servers[0])
    total = float(sum(dist[positions[assignments[l]], l] for l in range(L)))
    return Placement(positions=positions, assignments=assignments, total_distance=total)


def feasible_spectrum(model: QuboModel, encoding: Encoding) -> list[SpectrumEntry]:
    """Spectrum over the feasible sector with the penalty floor removed.

    Each feasible state's energy is the full model energy minus the constant
    min-over-feasible penalty contribution (full minus objective).  For
    encodings whose penalty is constant on the sector this removes the penalty
    entirely; otherwise intra-sector penalty variation is kept so the ground
    set matches the full cost function.
    """
    states = list(feasible_indices(encoding))
    full = np.array([_energy_of_index(model, i) for i in states])
    obj = np.array([_energy_of_index(encoding.objective, i) for i in states])
    floor = float((full - obj).min())
    return enumerate_spectrum(model, states=states, energies=full - floor)


def _energy_of_index(model: QuboModel, index: int) -> float:
    e = model.offset
    for i, c in model.linear.items():
        e += c * ((index >> i) & 1)
    for (i, j), c in model.quadratic.items():
        e += c * ((index >> i) & 1) * ((index >> j) & 1)
    return float(e)


# --- problem description files ----------------------------------------------

def problem_to_text(problem: FacilityProblem) -> str:
    lines = [f"geometry {problem.geometry[0]}"]
    if problem.geometry[0] == "line":
        lines.append(f"cols {problem.geometry[1]}")
    else:
        lines.append(f"rows {problem.geometry[1]}")
        lines.append(f"cols {problem.geometry[2]}")
    lines.append(f"ambulances {problem.ambulances}")
    lines.append(f"metric {problem.metric}")
    if problem.lambda_ is not None:
        lines.append(f"lambda {problem.lambda_!r}")
    else:
        lines.append(f"lambda_ratio {problem.lambda_ratio!r}")
    lines.append(f"forbid_colocation {str(problem.forbid_colocation).lower()}")
    return "\n".join(lines) + "\n"


def problem_from_text(text: str) -> FacilityProblem:
    kv: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition(" ")
        if not value:
            key, _, value = line.partition("=")
        kv[key.strip()] = value.strip()
    geom_kind = kv.get("geometry", "grid")
    if geom_kind == "line":
        geometry = ("line", int(kv["cols"]))
    else:
        geometry = ("grid", int(kv["rows"]), int(kv["cols"]))
    return FacilityProblem(
        geometry=geometry,
        ambulances=int(kv.get("ambulances", "1")),
        metric=kv.get("metric", "squared-euclidean"),
        lambda_=float(kv["lambda"]) if "lambda" in kv else None,
        lambda_ratio=float(kv["lambda_ratio"]) if "lambda_ratio" in kv else None,
        forbid_colocation=kv.get("forbid_colocation", "false").lower() in ("true", "1", "yes"),
    )


# --- paper problem variants --------------------------------------------------

def problem_variant(name: str, lam: float | None = None, lambda_ratio: float | None = None) -> FacilityProblem:
    """The desk-scale study instances A-E (line geometries, squared euclidean)."""
    table = {
        "A": (("line", 5), 1),
        "B": (("line", 4), 2),
        "C": (("line", 8), 2),
        "D": (("line", 17), 1),
        "E": (("line", 5), 2),
    }
    if name not in table:
        raise ValueError(f"unknown problem variant {name!r}")
    geometry, m = table[name]
    if lam is None and lambda_ratio is None:
        lambda_ratio = 1.0
    return FacilityProblem(geometry=geometry, ambulances=m, lambda_=lam, lambda_ratio=lambda_ratio)
