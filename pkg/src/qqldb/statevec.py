"""Complex state-vector engine: allocation, gate application, post-selection,
sampling.

Bit convention (binding for the whole package): qubit 0 is the MOST
significant bit of a basis index, so the ket ``|x0 x1 ... x_{m-1}>`` read left
to right is the binary expansion of the index.  Temporary/flag qubits always
sit at the end of the register, i.e. in the least significant bits.
"""

from __future__ import annotations

from collections import Counter
from typing import Sequence

import numpy as np

from .errors import CapacityError, ImpossibleOutcomeError, ValidationError
from .gates import CnotGate, GateMatrix, is_unitary

DEFAULT_MAX_QUBITS = 22
DEFAULT_EPSILON = 1e-12
NORM_TOL = 1e-9

_MASK64 = (1 << 64) - 1


class Xorshift64Star:
    """xorshift64* generator (shift triple 12/25/27, multiplier 0x2545F4914F6CDD1D).

    All sampling in this package draws from this generator so that fixed-seed
    transcripts are reproducible across independent implementations.  A zero
    seed is replaced by a fixed nonzero constant because the all-zero state is
    a fixed point of the shift register.
    """

    MULTIPLIER = 0x2545F4914F6CDD1D

    def __init__(self, seed: int):
        self._state = seed & _MASK64
        if self._state == 0:
            self._state = 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        s = self._state
        s ^= s >> 12
        s = (s ^ (s << 25)) & _MASK64
        s ^= s >> 27
        self._state = s
        return (s * self.MULTIPLIER) & _MASK64

    def next_float(self) -> float:
        """Uniform double in [0, 1) built from the top 53 bits."""
        return (self.next_u64() >> 11) / float(1 << 53)


def apply_matrix(
    amps: np.ndarray,
    matrix: np.ndarray,
    targets: Sequence[int],
    num_qubits: int,
    pos_controls: Sequence[int] = (),
    neg_controls: Sequence[int] = (),
) -> None:
    """Apply a ``2^k x 2^k`` matrix to ``targets`` in place, restricted to the
    subspace where ``pos_controls`` are 1 and ``neg_controls`` are 0.

    Works on views/strides of the amplitude buffer; never materialises a
    ``2^m x 2^m`` operator.  ``targets[0]`` is the most significant bit of the
    gate's local index.
    """
    k = len(targets)
    moved = [*pos_controls, *neg_controls, *targets]
    tensor = amps.reshape((2,) * num_qubits)
    view = np.moveaxis(tensor, moved, range(len(moved)))
    sel = (1,) * len(pos_controls) + (0,) * len(neg_controls)
    block = view[sel]
    view[sel] = (matrix @ block.reshape(1 << k, -1)).reshape(block.shape)


class StateVector:
    """Normalized register of ``2^m`` complex amplitudes over ``m`` qubits.

    Mutating operations transform the buffer in place and return ``self``.
    A state has at most one writer at a time; all kernels are deterministic.
    """

    __slots__ = ("num_qubits", "amps")

    def __init__(self, num_qubits: int, amps: np.ndarray):
        self.num_qubits = num_qubits
        self.amps = amps

    @classmethod
    def zero(cls, num_qubits: int, max_qubits: int = DEFAULT_MAX_QUBITS) -> "StateVector":
        """|0...0>: amplitude 1 on basis index 0."""
        if num_qubits < 1 or num_qubits > max_qubits:
            raise CapacityError(
                f"register of {num_qubits} qubits outside the allowed range 1..{max_qubits}"
            )
        amps = np.zeros(1 << num_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def from_amplitudes(cls, values, normalize: bool = False) -> "StateVector":
        amps = np.array(values, dtype=np.complex128)
        size = amps.size
        if size < 2 or size & (size - 1):
            raise ValueError(f"amplitude count {size} is not a power of two >= 2")
        if not np.all(np.isfinite(amps.view(np.float64))):
            raise ValueError("amplitudes must be finite")
        norm = np.linalg.norm(amps)
        if normalize:
            if norm == 0:
                raise ValueError("cannot normalize the zero vector")
            amps = amps / norm
        elif abs(norm - 1.0) > NORM_TOL:
            raise ValidationError(f"state norm {norm} is not 1 within {NORM_TOL}")
        return cls(size.bit_length() - 1, amps)

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amps.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def _assert_norm(self):
        norm = self.norm()
        if abs(norm - 1.0) > NORM_TOL:
            raise ValidationError(f"norm drifted to {norm}; unitarity bug upstream")

    def _check_qubits(self, qubits: Sequence[int], label: str):
        seen = set()
        for q in qubits:
            if q < 0 or q >= self.num_qubits:
                raise ValueError(f"{label} qubit {q} out of range for {self.num_qubits} qubits")
            if q in seen:
                raise ValueError(f"duplicate {label} qubit {q}")
            seen.add(q)

    @staticmethod
    def _as_matrix(gate) -> np.ndarray:
        if isinstance(gate, GateMatrix):
            return gate.matrix
        mat = np.asarray(gate, dtype=np.complex128)
        if not is_unitary(mat):
            raise ValidationError("matrix is not unitary within tolerance")
        return mat

    def apply_unitary(self, gate, targets: Sequence[int]) -> "StateVector":
        """Apply a gate to the ordered target qubits, identity elsewhere."""
        matrix = self._as_matrix(gate)
        targets = list(targets)
        self._check_qubits(targets, "target")
        if matrix.shape[0] != 1 << len(targets):
            raise ValueError(
                f"gate over {matrix.shape[0]} rows does not fit {len(targets)} targets"
            )
        apply_matrix(self.amps, matrix, targets, self.num_qubits)
        self._assert_norm()
        return self

    def apply_controlled(
        self,
        gate,
        pos_controls: Sequence[int] = (),
        neg_controls: Sequence[int] = (),
        targets: Sequence[int] = (),
    ) -> "StateVector":
        """Apply a gate where every positive control is 1 and every negative
        control is 0; identity on the rest of the space."""
        matrix = self._as_matrix(gate)
        pos = sorted(pos_controls)
        neg = sorted(neg_controls)
        targets = list(targets)
        self._check_qubits([*pos, *neg, *targets], "control/target")
        if matrix.shape[0] != 1 << len(targets):
            raise ValueError(
                f"gate over {matrix.shape[0]} rows does not fit {len(targets)} targets"
            )
        apply_matrix(self.amps, matrix, targets, self.num_qubits, pos, neg)
        self._assert_norm()
        return self

    def apply_cnot(self, gate: CnotGate) -> "StateVector":
        """Fast path for a multi-controlled NOT: a pure index-pair swap."""
        self._check_qubits([*gate.controls, gate.target], "cnot")
        m = self.num_qubits
        indices = np.arange(self.amps.size)
        mask = np.ones(self.amps.size, dtype=bool)
        for q in gate.controls:
            mask &= (indices >> (m - 1 - q)) & 1 == 1
        target_bit = 1 << (m - 1 - gate.target)
        low = indices[mask & ((indices & target_bit) == 0)]
        high = low | target_bit
        tmp = self.amps[low].copy()
        self.amps[low] = self.amps[high]
        self.amps[high] = tmp
        return self

    def probability_of(self, qubit: int, bit: int) -> float:
        """Total probability mass on components where ``qubit`` equals ``bit``."""
        self._check_qubits([qubit], "measured")
        if bit not in (0, 1):
            raise ValueError("bit must be 0 or 1")
        view = self.amps.reshape(1 << qubit, 2, -1)
        slice_ = view[:, bit, :]
        return float(np.sum(slice_.real**2 + slice_.imag**2))

    def postselect(self, qubit: int, bit: int, epsilon: float = DEFAULT_EPSILON) -> float:
        """Project ``qubit`` onto ``bit``, renormalize, and return the
        pre-projection probability of that outcome."""
        prob = self.probability_of(qubit, bit)
        if prob < epsilon:
            raise ImpossibleOutcomeError(
                f"outcome {bit} on qubit {qubit} has probability {prob:.3e} < {epsilon:.3e}"
            )
        view = self.amps.reshape(1 << qubit, 2, -1)
        view[:, 1 - bit, :] = 0.0
        self.amps /= np.sqrt(prob)
        return prob

    def sample(self, shots: int, seed: int) -> Counter:
        """Draw ``shots`` i.i.d. basis indices from ``|amps|^2`` using the
        documented xorshift64* generator; deterministic for a fixed seed."""
        if shots < 1:
            raise ValueError("shots must be >= 1")
        probs = self.amps.real**2 + self.amps.imag**2
        cumulative = np.cumsum(probs)
        rng = Xorshift64Star(seed)
        draws = np.fromiter((rng.next_float() for _ in range(shots)), dtype=np.float64, count=shots)
        picks = np.searchsorted(cumulative, draws, side="right")
        np.clip(picks, 0, probs.size - 1, out=picks)
        return Counter(picks.tolist())

    def tensor(self, other: "StateVector", max_qubits: int = DEFAULT_MAX_QUBITS) -> "StateVector":
        """Combined register: ``self`` supplies the high bits, ``other`` the low."""
        total = self.num_qubits + other.num_qubits
        if total > max_qubits:
            raise CapacityError(f"tensor of {total} qubits exceeds capacity {max_qubits}")
        return StateVector(total, np.kron(self.amps, other.amps))

    def support(self, tol: float = 1e-9) -> list[int]:
        """Basis indices with non-negligible amplitude, ascending."""
        mags = self.amps.real**2 + self.amps.imag**2
        return np.nonzero(mags > tol * tol)[0].tolist()

    def __repr__(self) -> str:
        terms = []
        for idx in self.support(tol=1e-6)[:8]:
            amp = self.amps[idx]
            terms.append(f"{amp:.3g}|{idx:0{self.num_qubits}b}>")
        body = " + ".join(terms) if terms else "0"
        return f"StateVector({self.num_qubits} qubits: {body})"


def new_zero_state(num_qubits: int, max_qubits: int = DEFAULT_MAX_QUBITS) -> StateVector:
    return StateVector.zero(num_qubits, max_qubits)


def tensor_states(a: StateVector, b: StateVector, max_qubits: int = DEFAULT_MAX_QUBITS) -> StateVector:
    return a.tensor(b, max_qubits)
