"""Reduced states held by the cheating party after using an ideal box.

The box keeps everything in the computational basis: on inputs ``|i>|j>``
it writes outcome ``k`` with amplitude ``sqrt(p(k|i,j))`` to both parties'
outcome registers (two-sided) or to the receiver's register only
(one-sided).  Amplitudes are fixed to the nonnegative real root; the
effect of complex phases on the amplitudes is not explored.

Two independent construction routes are provided for the two-sided case:
:func:`alice_reduced_state` assembles the reduced operator directly from
the closed-form entries, while :func:`purified_reduced_state` materializes
all four registers and traces the other party out.  They must agree
entrywise; the test suite enforces this.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import qmat
from .funcspec import FunctionSpec, transpose
from .tolerances import active


@dataclass(frozen=True)
class StateFamily:
    """One state per possible input of the party being guessed."""

    states: tuple[qmat.DensityState, ...]
    input_dim: int
    outcome_dim: int

    def __post_init__(self):
        if not self.states:
            raise ValueError("state family must contain at least one state")
        dims = {s.dim for s in self.states}
        if len(dims) != 1:
            raise ValueError(f"family states have inconsistent dimensions {dims}")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def dim(self) -> int:
        return self.states[0].dim


def amplitude_vector(amplitudes: Sequence[complex], n: int) -> np.ndarray:
    a = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if a.shape != (n,):
        raise ValueError(f"expected {n} amplitudes, got {a.shape[0]}")
    norm = float(np.linalg.norm(a))
    if abs(norm - 1.0) > active().trace:
        raise ValueError(f"input superposition norm {norm:.12g} is not 1")
    return a


def uniform_superposition(n: int) -> np.ndarray:
    return np.full(n, 1.0 / np.sqrt(n), dtype=complex)


def alice_reduced_state(f: FunctionSpec, amplitudes: Sequence[complex], j: int) -> qmat.DensityState:
    """Alice's reduced state after a superposed input against Bob's input j.

    Register order is (input, outcome); the operator is block-diagonal in
    the outcome label, with block k equal to the outer product of the
    vector ``a_i * sqrt(p(k|i,j))``.
    """
    if f.sided != "two":
        raise ValueError("superposed-input reduced states require a two-sided function")
    if not 0 <= j < f.bob_arity:
        raise ValueError(f"honest input {j} out of range [0, {f.bob_arity})")
    a = amplitude_vector(amplitudes, f.alice_arity)
    n, kdim = f.alice_arity, f.outcome_count
    m = np.zeros((n * kdim, n * kdim), dtype=complex)
    for k in range(kdim):
        c = a * np.sqrt([float(f.prob(k, i, j)) for i in range(n)])
        m[k::kdim, k::kdim] += np.outer(c, c.conj())
    return qmat.DensityState(m, (n, kdim))


def alice_reduced_state_one_sided(f: FunctionSpec, i: int, j: int) -> qmat.DensityState:
    """The receiver's pure outcome-register state after an honest input i."""
    if f.sided != "one":
        raise ValueError("one-sided reduced states require a one-sided function")
    if not 0 <= i < f.alice_arity:
        raise ValueError(f"honest input {i} out of range [0, {f.alice_arity})")
    if not 0 <= j < f.bob_arity:
        raise ValueError(f"partner input {j} out of range [0, {f.bob_arity})")
    amps = np.sqrt([float(f.prob(k, i, j)) for k in range(f.outcome_count)])
    return qmat.pure_state(amps, (f.outcome_count,))


def purified_reduced_state(f: FunctionSpec, amplitudes: Sequence[complex], j: int) -> qmat.DensityState:
    """Independent route: build the full four-register pure state and trace
    out the other party's registers."""
    if f.sided != "two":
        raise ValueError("purification route requires a two-sided function")
    a = amplitude_vector(amplitudes, f.alice_arity)
    n, nb, kdim = f.alice_arity, f.bob_arity, f.outcome_count
    ket = np.zeros(n * nb * kdim * kdim, dtype=complex)
    for i in range(n):
        for k in range(kdim):
            idx = ((i * nb + j) * kdim + k) * kdim + k
            ket[idx] = a[i] * np.sqrt(float(f.prob(k, i, j)))
    full = qmat.pure_state(ket, (n, nb, kdim, kdim))
    return qmat.partial_trace(full, keep=(0, 2))


def output_family(f: FunctionSpec, alice_input, role: str = "alice") -> StateFamily:
    """States indexed by the guessed party's input, for the given cheater.

    ``role`` names the cheating party; cheating Bob against ``f`` is
    cheating Alice against the transposed table.  For two-sided functions
    ``alice_input`` is an amplitude vector; for one-sided functions it is
    the cheater's honest input index (the cheater must be the receiver).
    """
    if role == "bob":
        f = transpose(f)
    elif role != "alice":
        raise ValueError(f"role must be 'alice' or 'bob', got {role!r}")
    if f.sided == "two":
        states = tuple(
            alice_reduced_state(f, alice_input, j) for j in range(f.bob_arity)
        )
        return StateFamily(states, f.alice_arity, f.outcome_count)
    i = int(alice_input)
    states = tuple(
        alice_reduced_state_one_sided(f, i, j) for j in range(f.bob_arity)
    )
    return StateFamily(states, 1, f.outcome_count)
