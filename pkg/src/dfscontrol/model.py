"""Lindbladian model definition, parsing, and the trapped-ion example family.

A model is a drift Hamiltonian, a list of control Hamiltonians, and a list of
noise channels (rate, operator) on an N-dimensional Hilbert space.  Operators
can be given densely or as sums of normalized Pauli strings; the Pauli form is
kept alongside the dense form when available so downstream conversions can
stay sparse.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .paulis import PauliString, PauliSum, sum_to_matrix, z_string, zz_string

HERM_RTOL = 1e-10


class ModelError(ValueError):
    """Invalid model document or parameters; the message names the offending field."""


def _check_hermitian(M: np.ndarray, name: str) -> None:
    tol = HERM_RTOL * max(1.0, np.linalg.norm(M))
    resid = np.max(np.abs(M - M.conj().T)) if M.size else 0.0
    if resid > tol:
        raise ModelError(f"{name}: matrix is not Hermitian (max |X - X^dag| = {resid:.3e})")


@dataclass
class Operator:
    """Dense matrix plus, when it came from Pauli strings, the generating sum."""

    matrix: np.ndarray
    pauli_sum: PauliSum | None = None

    @classmethod
    def from_pauli_sum(cls, terms: PauliSum, n_qubits: int) -> "Operator":
        return cls(sum_to_matrix(terms, n_qubits), dict(terms))


@dataclass
class LindbladModel:
    hilbert_dim: int
    drift: Operator
    controls: list[Operator] = field(default_factory=list)
    noise_channels: list[tuple[float, Operator]] = field(default_factory=list)

    @property
    def n_controls(self) -> int:
        return len(self.controls)

    @property
    def n_noise(self) -> int:
        return len(self.noise_channels)

    @property
    def n_qubits(self) -> int | None:
        n = int(round(np.log2(self.hilbert_dim)))
        return n if 2**n == self.hilbert_dim else None

    def validate(self) -> "LindbladModel":
        N = self.hilbert_dim
        if N < 2:
            raise ModelError(f"hilbert_dim: must be >= 2, got {N}")
        if self.drift.matrix.shape != (N, N):
            raise ModelError(f"drift: expected {N}x{N}, got {self.drift.matrix.shape}")
        _check_hermitian(self.drift.matrix, "drift")
        for k, op in enumerate(self.controls):
            if op.matrix.shape != (N, N):
                raise ModelError(f"controls[{k}]: expected {N}x{N}, got {op.matrix.shape}")
            _check_hermitian(op.matrix, f"controls[{k}]")
        for j, (rate, op) in enumerate(self.noise_channels):
            if rate < 0:
                raise ModelError(f"noise[{j}].rate: must be nonnegative, got {rate}")
            if op.matrix.shape != (N, N):
                raise ModelError(f"noise[{j}].operator: expected {N}x{N}, got {op.matrix.shape}")
        return self


# ---------------------------------------------------------------------------
# JSON model documents

def _complex_entry(x, name: str) -> complex:
    if not (isinstance(x, (list, tuple)) and len(x) == 2):
        raise ModelError(f"{name}: complex entries must be [re, im] pairs, got {x!r}")
    return complex(float(x[0]), float(x[1]))


def _parse_operator(spec, name: str, N: int, n_qubits: int | None) -> Operator:
    if not isinstance(spec, dict):
        raise ModelError(f"{name}: operator spec must be an object, got {type(spec).__name__}")
    if "dense" in spec:
        rows = spec["dense"]
        try:
            M = np.array(
                [[_complex_entry(x, name) for x in row] for row in rows], dtype=complex
            )
        except (TypeError, ModelError) as exc:
            raise ModelError(f"{name}: malformed dense matrix ({exc})") from exc
        if M.shape != (N, N):
            raise ModelError(f"{name}: dense matrix is {M.shape}, expected {N}x{N}")
        return Operator(M)
    if "pauli_sum" in spec:
        if n_qubits is None:
            raise ModelError(f"{name}: pauli_sum requires a power-of-two hilbert_dim")
        terms: PauliSum = {}
        for i, t in enumerate(spec["pauli_sum"]):
            try:
                coeff = float(t["coeff"])
                s = PauliString(str(t["string"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise ModelError(f"{name}.pauli_sum[{i}]: {exc}") from exc
            if len(s) != n_qubits:
                raise ModelError(
                    f"{name}.pauli_sum[{i}]: string length {len(s)} != qubit count {n_qubits}"
                )
            terms[s.symbols] = terms.get(s.symbols, 0.0) + coeff
        return Operator.from_pauli_sum(terms, n_qubits)
    raise ModelError(f"{name}: operator spec needs 'dense' or 'pauli_sum'")


def parse_model(text: str) -> LindbladModel:
    """Parse and validate a JSON model document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"document: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ModelError("document: top level must be an object")
    try:
        N = int(doc["hilbert_dim"])
    except (KeyError, TypeError, ValueError):
        raise ModelError("hilbert_dim: missing or not an integer") from None
    n_qubits = int(round(np.log2(N))) if N >= 2 and 2 ** int(round(np.log2(N))) == N else None
    if "qubits" in doc and doc["qubits"] is not None:
        if n_qubits is None or int(doc["qubits"]) != n_qubits:
            raise ModelError(f"qubits: {doc['qubits']} inconsistent with hilbert_dim {N}")
    if "drift" not in doc:
        raise ModelError("drift: missing")
    drift = _parse_operator(doc["drift"], "drift", N, n_qubits)
    controls = [
        _parse_operator(spec, f"controls[{k}]", N, n_qubits)
        for k, spec in enumerate(doc.get("controls", []))
    ]
    noise = []
    for j, ch in enumerate(doc.get("noise", [])):
        if not isinstance(ch, dict) or "rate" not in ch or "operator" not in ch:
            raise ModelError(f"noise[{j}]: needs 'rate' and 'operator'")
        noise.append(
            (float(ch["rate"]), _parse_operator(ch["operator"], f"noise[{j}].operator", N, n_qubits))
        )
    return LindbladModel(N, drift, controls, noise).validate()


def model_to_document(model: LindbladModel) -> dict:
    """Inverse of parse_model, preferring the Pauli form when present."""

    def op_spec(op: Operator) -> dict:
        if op.pauli_sum is not None:
            return {
                "pauli_sum": [
                    {"coeff": float(np.real(c)), "string": s}
                    for s, c in sorted(op.pauli_sum.items())
                ]
            }
        return {"dense": [[[float(x.real), float(x.imag)] for x in row] for row in op.matrix]}

    doc = {
        "hilbert_dim": model.hilbert_dim,
        "drift": op_spec(model.drift),
        "controls": [op_spec(c) for c in model.controls],
        "noise": [{"rate": r, "operator": op_spec(op)} for r, op in model.noise_channels],
    }
    if model.n_qubits is not None:
        doc["qubits"] = model.n_qubits
    return doc


# ---------------------------------------------------------------------------
# Pauli-string helpers exposed at the model level

def pauli_string_to_operator(p: PauliString | str) -> np.ndarray:
    """Realize a Pauli string as its unit-Frobenius-norm Hermitian matrix."""
    if isinstance(p, str):
        p = PauliString(p)
    return p.to_matrix()


# ---------------------------------------------------------------------------
# Trapped-ion collective-dephasing family

@dataclass(frozen=True)
class IonModelParams:
    n: int
    nu: float
    mu: float
    gamma_z: float

    def validate(self) -> "IonModelParams":
        if self.n < 2:
            raise ModelError(f"n: qubit count must be >= 2, got {self.n}")
        if not self.gamma_z > 0:
            raise ModelError(f"gamma_z: must be positive, got {self.gamma_z}")
        return self


def build_ion_model(p: IonModelParams) -> LindbladModel:
    """Ion-chain model: bus qubit 1, register qubits 2..n, collective dephasing.

    Drift couples the register to a uniform field plus bus-register ZZ terms;
    the single noise channel dephases the register collectively.
    """
    p.validate()
    n = p.n
    drift: PauliSum = {}
    for j in range(2, n + 1):
        drift[z_string(n, j)] = drift.get(z_string(n, j), 0.0) + np.pi * p.nu
        drift[zz_string(n, 1, j)] = drift.get(zz_string(n, 1, j), 0.0) + np.pi * p.mu / 2.0
    dephase: PauliSum = {z_string(n, j): 1.0 for j in range(2, n + 1)}
    return LindbladModel(
        hilbert_dim=2**n,
        drift=Operator.from_pauli_sum(drift, n),
        controls=[],
        noise_channels=[(p.gamma_z, Operator.from_pauli_sum(dephase, n))],
    ).validate()


def attach_controls(model: LindbladModel, strings: list[PauliString | str]) -> LindbladModel:
    """Return a copy of the model with control Hamiltonians in the given order.

    When callers pass an unordered pool, they should sort lexicographically
    first; channel indices are meaningful downstream (DIFS rows).
    """
    n = model.n_qubits
    if n is None:
        raise ModelError("controls: Pauli-string controls need a power-of-two hilbert_dim")
    ops = []
    for s in strings:
        ps = PauliString(s) if isinstance(s, str) else s
        if len(ps) != n:
            raise ModelError(f"controls: string {ps} has length {len(ps)}, expected {n}")
        ops.append(Operator.from_pauli_sum({ps.symbols: 1.0}, n))
    return LindbladModel(model.hilbert_dim, model.drift, ops, list(model.noise_channels)).validate()


# q-values grade how each single-qubit factor loads the shared bus mode
_Q_VALUE = {"I": 1, "X": 1, "Y": 0, "Z": -1}


def q_value(symbol: str) -> int:
    return _Q_VALUE[symbol]


def q_signature(p: PauliString | str) -> tuple[int, ...]:
    """Sorted q-values of the register positions (2..n)."""
    s = p.symbols if isinstance(p, PauliString) else str(p)
    if len(s) < 2:
        raise ModelError("q_signature: string must cover bus + at least one register qubit")
    return tuple(sorted(_Q_VALUE[c] for c in s[1:]))


def pool_size_formula(n: int) -> int:
    """Closed-form pool size, rounded to the nearest integer."""
    val = 0.125 * 4.0**n + 2.0 ** (n / 2.0 - 1.0) * np.cos(np.pi * n / 4.0)
    return int(round(val))


def enumerate_control_pool(n: int) -> list[PauliString]:
    """All strings whose bus action is consistent with the register q-sum.

    The bus factor's q-value must equal the register q-sum mod 4, and that
    common residue must be -1 or 0 mod 4 (bus acting as I or X couples to
    spurious bus modes and is excluded).  Returned in lexicographic order.
    """
    if n < 2:
        raise ModelError(f"n: pool needs n >= 2, got {n}")
    out = []
    for tail in itertools.product(SYMBOLS_SORTED, repeat=n - 1):
        qsum = sum(_Q_VALUE[c] for c in tail) % 4
        if qsum == 0:
            out.append(PauliString("Y" + "".join(tail)))
        elif qsum == 3:  # -1 mod 4
            out.append(PauliString("Z" + "".join(tail)))
    out.sort(key=lambda p: p.symbols)
    return out


SYMBOLS_SORTED = "IXYZ"


def validate_resource_set(
    resources: list[PauliString | str], max_nc: int, max_neff: int | None = None
) -> tuple[bool, list[str]]:
    """Check count and bus-signature rules for a candidate control set.

    The effective-channel bound (max_neff) is only checkable after the DIFS is
    computed; it is reported downstream, not here.
    """
    del max_neff
    strings = [PauliString(s) if isinstance(s, str) else s for s in resources]
    reasons = []
    if len(strings) > max_nc:
        reasons.append(f"resource count {len(strings)} exceeds limit {max_nc}")
    n = len(strings[0]) if strings else 0
    pool = {p.symbols for p in enumerate_control_pool(n)} if n >= 2 else set()
    seen_y: dict[tuple[int, ...], str] = {}
    for p in strings:
        if p.symbols not in pool:
            reasons.append(f"{p} is not in the admissible pool")
        if p.symbols[0] == "Y":
            sig = q_signature(p)
            if sig in seen_y:
                reasons.append(
                    f"{p} duplicates the Y-bus q-signature {list(sig)} of {seen_y[sig]}"
                )
            else:
                seen_y[sig] = p.symbols
    return (not reasons), reasons
