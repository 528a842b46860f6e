"""Pauli-string algebra over unit-Frobenius-norm factors.

Operators on n qubits are represented as sparse sums of Pauli strings,
``dict[PauliString, complex]``.  Every single-qubit factor is scaled to unit
Frobenius norm (I, X, Y, Z each divided by sqrt(2)), so a full n-qubit string
also has Frobenius norm 1 and the strings form a trace-orthonormal basis of
the n-qubit operator space.  Products of two strings reduce to a single
string times a scalar, which keeps all algebra sparse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SYMBOLS = "IXYZ"
_SYM_INDEX = {s: i for i, s in enumerate(SYMBOLS)}

_SQ2 = np.sqrt(2.0)

# single-qubit matrices at unit Frobenius norm
PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex) / _SQ2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex) / _SQ2,
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex) / _SQ2,
    "Z": np.array([[1, 0], [0, -1]], dtype=complex) / _SQ2,
}

# unnormalized product table: s_a s_b = w * s_t
_MUL_TARGET = [[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]]
_MUL_PHASE = [
    [1, 1, 1, 1],
    [1, 1, 1j, -1j],
    [1, -1j, 1, 1j],
    [1, 1j, -1j, 1],
]


class PauliStringError(ValueError):
    pass


@dataclass(frozen=True)
class PauliString:
    """Ordered symbols over {I, X, Y, Z}; realizes a unit-norm Hermitian matrix."""

    symbols: str

    def __post_init__(self):
        if not self.symbols:
            raise PauliStringError("empty Pauli string")
        bad = set(self.symbols) - set(SYMBOLS)
        if bad:
            raise PauliStringError(f"invalid Pauli symbols {sorted(bad)!r} in {self.symbols!r}")

    def __len__(self) -> int:
        return len(self.symbols)

    def __str__(self) -> str:
        return self.symbols

    @property
    def codes(self) -> tuple[int, ...]:
        return tuple(_SYM_INDEX[c] for c in self.symbols)

    def index(self) -> int:
        """Position in the lexicographic I<X<Y<Z enumeration of equal-length strings."""
        idx = 0
        for c in self.symbols:
            idx = idx * 4 + _SYM_INDEX[c]
        return idx

    @classmethod
    def from_index(cls, idx: int, n: int) -> "PauliString":
        syms = []
        for _ in range(n):
            syms.append(SYMBOLS[idx % 4])
            idx //= 4
        return cls("".join(reversed(syms)))

    def to_matrix(self) -> np.ndarray:
        """Kronecker product of the unit-norm factors (first symbol = leftmost factor)."""
        out = np.array([[1.0]], dtype=complex)
        for c in self.symbols:
            out = np.kron(out, PAULI_MATRICES[c])
        return out


def string_product(a: str, b: str) -> tuple[complex, str]:
    """Product of two normalized strings: returns (coeff, string) with product = coeff * string.

    Each factor contributes 1/sqrt(2), so |coeff| = 2**(-n/2).
    """
    if len(a) != len(b):
        raise PauliStringError(f"length mismatch: {a!r} vs {b!r}")
    phase = complex(1.0)
    out = []
    for ca, cb in zip(a, b):
        ia, ib = _SYM_INDEX[ca], _SYM_INDEX[cb]
        out.append(SYMBOLS[_MUL_TARGET[ia][ib]])
        phase *= _MUL_PHASE[ia][ib]
    return phase * 2.0 ** (-len(a) / 2.0), "".join(out)


PauliSum = dict  # dict[str, complex]


def sum_mul(a: PauliSum, b: PauliSum, prune: float = 1e-15) -> PauliSum:
    out: PauliSum = {}
    for sa, ca in a.items():
        for sb, cb in b.items():
            w, t = string_product(sa, sb)
            out[t] = out.get(t, 0.0) + ca * cb * w
    return {k: v for k, v in out.items() if abs(v) > prune}


def sum_add(a: PauliSum, b: PauliSum, coeff: complex = 1.0, prune: float = 1e-15) -> PauliSum:
    out = dict(a)
    for s, c in b.items():
        out[s] = out.get(s, 0.0) + coeff * c
    return {k: v for k, v in out.items() if abs(v) > prune}


def sum_adjoint(a: PauliSum) -> PauliSum:
    # strings are Hermitian, so only coefficients conjugate
    return {s: np.conj(c) for s, c in a.items()}


def sum_to_matrix(a: PauliSum, n: int) -> np.ndarray:
    out = np.zeros((2**n, 2**n), dtype=complex)
    for s, c in a.items():
        out += c * PauliString(s).to_matrix()
    return out


def matrix_to_sum(M: np.ndarray, prune: float = 1e-12) -> PauliSum:
    """Expand a 2^n x 2^n matrix in the normalized Pauli-string basis."""
    N = M.shape[0]
    n = int(round(np.log2(N)))
    if 2**n != N or M.shape != (N, N):
        raise PauliStringError(f"matrix of shape {M.shape} is not 2^n x 2^n")
    # fold into a rank-2n tensor and contract each qubit with the four factors
    T = M.reshape((2,) * (2 * n))
    # move axes so qubit k occupies (row_k, col_k) adjacent pairs
    order = [None] * 2 * n
    for k in range(n):
        order[2 * k] = k
        order[2 * k + 1] = n + k
    T = np.transpose(T, order).reshape((4,) * n)
    # basis change on each 4-dim leg: coefficient c_s = tr(F_s^dag M) per leg
    legs = np.stack([PAULI_MATRICES[s].conj().reshape(-1) for s in SYMBOLS])
    for k in range(n):
        T = np.tensordot(legs, T, axes=([1], [k]))
        # tensordot prepends the new axis; rotate it back to position k
        T = np.moveaxis(T, 0, k)
    out: PauliSum = {}
    it = np.nditer(T, flags=["multi_index"])
    for val in it:
        v = complex(val)
        if abs(v) > prune:
            s = "".join(SYMBOLS[i] for i in it.multi_index)
            out[s] = v
    return out


def z_string(n: int, j: int) -> str:
    """Z on qubit j (1-based), identity elsewhere."""
    return "I" * (j - 1) + "Z" + "I" * (n - j)


def zz_string(n: int, i: int, j: int) -> str:
    s = ["I"] * n
    s[i - 1] = "Z"
    s[j - 1] = "Z"
    return "".join(s)
