"""QUBO and Ising cost models, exact evaluation, conversion and brute-force spectra.

Bit convention used everywhere in this package: bit i of a basis index is
qubit/variable i (least-significant bit = variable 0).  When a state is
rendered as a string, variable 0 is the leftmost character.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

SPECTRUM_CAP = 26


class CapacityError(Exception):
    """Raised when a brute-force operation exceeds its size cap."""


@dataclass
class QuboModel:
    """Quadratic binary cost  offset + sum_i linear[i] s_i + sum_{i<j} quadratic[i,j] s_i s_j.

    Variables s_i in {0, 1}.  Quadratic keys are strictly upper triangular;
    zero coefficients are never stored.
    """

    n: int
    linear: dict[int, float] = field(default_factory=dict)
    quadratic: dict[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self) -> None:
        for i in self.linear:
            if not 0 <= i < self.n:
                raise ValueError(f"linear index {i} out of range for n={self.n}")
        for i, j in self.quadratic:
            if not (0 <= i < j < self.n):
                raise ValueError(f"quadratic key {(i, j)} not strictly upper triangular")
        self.linear = {i: float(c) for i, c in self.linear.items() if c != 0.0}
        self.quadratic = {k: float(c) for k, c in self.quadratic.items() if c != 0.0}


@dataclass
class IsingModel:
    """Spin cost  offset + sum_i h[i] z_i + sum_{i<j} J[i,j] z_i z_j  with z_i in {-1,+1}."""

    n: int
    h: dict[int, float] = field(default_factory=dict)
    J: dict[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self) -> None:
        for i in self.h:
            if not 0 <= i < self.n:
                raise ValueError(f"field index {i} out of range for n={self.n}")
        for i, j in self.J:
            if not (0 <= i < j < self.n):
                raise ValueError(f"coupling key {(i, j)} not strictly upper triangular")
        self.h = {i: float(c) for i, c in self.h.items() if c != 0.0}
        self.J = {k: float(c) for k, c in self.J.items() if c != 0.0}


@dataclass
class SpectrumEntry:
    energy: float
    states: list[str]


def bits_from_string(s: str) -> np.ndarray:
    if any(c not in "01" for c in s):
        raise ValueError(f"not a bitstring: {s!r}")
    return np.array([int(c) for c in s], dtype=np.int8)


def string_from_index(index: int, n: int) -> str:
    """Render basis index as a bitstring, variable 0 leftmost."""
    return "".join(str((index >> i) & 1) for i in range(n))


def index_from_string(s: str) -> int:
    return sum(int(c) << i for i, c in enumerate(s))


def energy_qubo(model: QuboModel, s: str | Sequence[int] | np.ndarray) -> float:
    """Evaluate the QUBO cost for one binary assignment."""
    bits = bits_from_string(s) if isinstance(s, str) else np.asarray(s)
    if len(bits) != model.n:
        raise ValueError(f"state length {len(bits)} != n={model.n}")
    e = model.offset
    for i, c in model.linear.items():
        e += c * bits[i]
    for (i, j), c in model.quadratic.items():
        e += c * bits[i] * bits[j]
    return float(e)


def energy_ising(model: IsingModel, z: Sequence[int] | np.ndarray) -> float:
    """Evaluate the Ising cost for one spin assignment in {-1,+1}^n."""
    spins = np.asarray(z)
    if len(spins) != model.n:
        raise ValueError(f"state length {len(spins)} != n={model.n}")
    e = model.offset
    for i, c in model.h.items():
        e += c * spins[i]
    for (i, j), c in model.J.items():
        e += c * spins[i] * spins[j]
    return float(e)


def qubo_to_ising(model: QuboModel) -> IsingModel:
    """Substitute s_i = (1 - z_i)/2; energies agree state-for-state under z = 1 - 2s.

    A single edge s0*s1 with coefficient 1 maps to J01 = 0.25,
    h0 = h1 = -0.25, offset 0.25.
    """
    h: dict[int, float] = {i: 0.0 for i in range(model.n)}
    J: dict[tuple[int, int], float] = {}
    offset = model.offset
    for i, c in model.linear.items():
        # c * (1 - z_i)/2
        h[i] -= c / 2.0
        offset += c / 2.0
    for (i, j), c in model.quadratic.items():
        # c * (1 - z_i)(1 - z_j)/4
        J[(i, j)] = J.get((i, j), 0.0) + c / 4.0
        h[i] -= c / 4.0
        h[j] -= c / 4.0
        offset += c / 4.0
    return IsingModel(n=model.n, h=h, J=J, offset=offset)


def ising_to_qubo(model: IsingModel) -> QuboModel:
    """Inverse map (z_i = 1 - 2 s_i); round trips preserve energies exactly."""
    linear: dict[int, float] = {i: 0.0 for i in range(model.n)}
    quadratic: dict[tuple[int, int], float] = {}
    offset = model.offset
    for i, c in model.h.items():
        linear[i] -= 2.0 * c
        offset += c
    for (i, j), c in model.J.items():
        quadratic[(i, j)] = quadratic.get((i, j), 0.0) + 4.0 * c
        linear[i] -= 2.0 * c
        linear[j] -= 2.0 * c
        offset += c
    return QuboModel(n=model.n, linear=linear, quadratic=quadratic, offset=offset)


def energy_vector(model: QuboModel | IsingModel, n_override: int | None = None) -> np.ndarray:
    """Energies of all 2^n basis states, indexed by basis index.

    Shared kernel for spectra and diagonal phase evolution.
    """
    n = model.n if n_override is None else n_override
    dim = 1 << n
    energies = np.full(dim, float(model.offset))
    idx = np.arange(dim)
    if isinstance(model, QuboModel):
        bit = lambda i: ((idx >> i) & 1).astype(float)  # noqa: E731
        for i, c in model.linear.items():
            energies += c * bit(i)
        for (i, j), c in model.quadratic.items():
            energies += c * bit(i) * bit(j)
    else:
        spin = lambda i: 1.0 - 2.0 * ((idx >> i) & 1)  # noqa: E731
        for i, c in model.h.items():
            energies += c * spin(i)
        for (i, j), c in model.J.items():
            energies += c * spin(i) * spin(j)
    return energies


def enumerate_spectrum(
    model: QuboModel,
    feasible: Callable[[str], bool] | None = None,
    *,
    states: Iterable[int] | None = None,
    energies: np.ndarray | None = None,
) -> list[SpectrumEntry]:
    """Exact sorted spectrum over all 2^n states (or the feasible subset), ties grouped.

    `states`/`energies` let callers restrict to a precomputed subset without
    touching the full space (used for large constrained sectors).
    """
    if states is None:
        if model.n > SPECTRUM_CAP:
            raise CapacityError(f"n={model.n} exceeds spectrum cap {SPECTRUM_CAP}")
        all_e = energy_vector(model)
        indices = np.arange(1 << model.n)
        if feasible is not None:
            mask = np.array([feasible(string_from_index(i, model.n)) for i in indices])
            indices = indices[mask]
        values = all_e[indices]
    else:
        indices = np.asarray(list(states))
        if energies is not None:
            values = np.asarray(energies, dtype=float)
        else:
            values = np.array([energy_qubo(model, string_from_index(i, model.n)) for i in indices])
        if feasible is not None:
            mask = np.array([feasible(string_from_index(i, model.n)) for i in indices])
            indices, values = indices[mask], values[mask]

    order = np.argsort(values, kind="stable")
    entries: list[SpectrumEntry] = []
    for k in order:
        e = float(values[k])
        s = string_from_index(int(indices[k]), model.n)
        if entries and entries[-1].energy == e:
            entries[-1].states.append(s)
        else:
            entries.append(SpectrumEntry(energy=e, states=[s]))
    return entries


# --- flat text serialization -------------------------------------------------

def model_to_text(model: QuboModel | IsingModel) -> str:
    """Serialize to the flat line format: n / offset / lin i c / quad i j c.

    Ising models reuse the same line tags (lin = field, quad = coupling) with a
    leading `kind` line so round trips restore the right type.
    """
    kind = "qubo" if isinstance(model, QuboModel) else "ising"
    lines = [f"kind {kind}", f"n {model.n}", f"offset {model.offset!r}"]
    lin = model.linear if isinstance(model, QuboModel) else model.h
    quad = model.quadratic if isinstance(model, QuboModel) else model.J
    for i in sorted(lin):
        lines.append(f"lin {i} {lin[i]!r}")
    for i, j in sorted(quad):
        lines.append(f"quad {i} {j} {quad[(i, j)]!r}")
    return "\n".join(lines) + "\n"


def model_from_text(text: str) -> QuboModel | IsingModel:
    kind = "qubo"
    n = None
    offset = 0.0
    linear: dict[int, float] = {}
    quadratic: dict[tuple[int, int], float] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tag, *rest = line.split()
        if tag == "kind":
            kind = rest[0]
        elif tag == "n":
            n = int(rest[0])
        elif tag == "offset":
            offset = float(rest[0])
        elif tag == "lin":
            linear[int(rest[0])] = float(rest[1])
        elif tag == "quad":
            quadratic[(int(rest[0]), int(rest[1]))] = float(rest[2])
        else:
            raise ValueError(f"unknown model line: {raw!r}")
    if n is None:
        raise ValueError("model text missing `n` line")
    if kind == "qubo":
        return QuboModel(n=n, linear=linear, quadratic=quadratic, offset=offset)
    if kind == "ising":
        return IsingModel(n=n, h=linear, J=quadratic, offset=offset)
    raise ValueError(f"unknown model kind {kind!r}")
