"""Exact multi-mode oscillator algebra with normal-ordered storage.

Every operator is a finite sum of normal-ordered monomials

    c * prod_m (B†_m)^{j_m} (B_m)^{k_m},

one ladder pair per *mode*.  Modes are arbitrary hashable, sortable labels
(tuples of strings/ints throughout this package); ladder pairs on distinct
modes commute, and ``[B_m, B†_m] = 1``.

Two trace rules are provided in closed form, both obtained by summing the
geometric series over occupation numbers and analytically continuing to any
weight ``q != 1``:

* ``normalized``:  <q^N (B†)^k B^k> / <q^N>  =  k! (q/(1-q))^k
* ``plain``:       Tr q^N (B†)^k B^k         =  k! q^k / (1-q)^{k+1}

The number-basis convention is non-unitary: ``|k+1> = B†|k>``, so ``B†`` has
matrix entry ``(k+1, k) = 1`` and ``B`` has entry ``(k-1, k) = k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

Mode = Tuple  # hashable, mutually sortable labels
# a term key: ((mode, n_create, n_annihilate), ...) sorted by mode
TermKey = Tuple[Tuple[Mode, int, int], ...]

COEFF_TOL = 1e-14


class NormalOrderedOp:
    """A finite sum of normal-ordered ladder monomials with complex coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Dict[TermKey, complex] | None = None):
        self.terms: Dict[TermKey, complex] = {}
        if terms:
            for key, c in terms.items():
                c = complex(c)
                if abs(c) > COEFF_TOL:
                    self.terms[key] = c

    # -- constructors ------------------------------------------------------

    @classmethod
    def scalar(cls, c: complex) -> "NormalOrderedOp":
        return cls({(): complex(c)})

    @classmethod
    def creator(cls, mode: Mode) -> "NormalOrderedOp":
        return cls({((mode, 1, 0),): 1.0})

    @classmethod
    def annihilator(cls, mode: Mode) -> "NormalOrderedOp":
        return cls({((mode, 0, 1),): 1.0})

    @classmethod
    def number(cls, mode: Mode) -> "NormalOrderedOp":
        """The number operator ``B† B`` on one mode."""
        return cls({((mode, 1, 1),): 1.0})

    @classmethod
    def zero(cls) -> "NormalOrderedOp":
        return cls({})

    # -- structure queries --------------------------------------------------

    def is_zero(self, tol: float = COEFF_TOL) -> bool:
        return all(abs(c) <= tol for c in self.terms.values())

    def max_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def modes(self) -> FrozenSet[Mode]:
        out = set()
        for key in self.terms:
            for mode, _, _ in key:
                out.add(mode)
        return frozenset(out)

    def creation_degree(self) -> int:
        """Largest total number of creators in any single term."""
        return max((sum(j for _, j, _ in key) for key in self.terms), default=0)

    def degree(self) -> int:
        """Largest total ladder-operator count in any single term."""
        return max((sum(j + k for _, j, k in key) for key in self.terms), default=0)

    def scalar_part(self) -> complex:
        return self.terms.get((), 0.0)

    def min_excitation_shift(self) -> int:
        """Smallest net excitation change ``sum(j - k)`` over the stored terms."""
        return min((sum(j - k for _, j, k in key) for key in self.terms), default=0)

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        terms = dict(self.terms)
        for key, c in other.terms.items():
            terms[key] = terms.get(key, 0.0) + c
        return NormalOrderedOp(terms)

    __radd__ = __add__

    def __neg__(self):
        return NormalOrderedOp({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            return NormalOrderedOp({k: c * other for k, c in self.terms.items()})
        if not isinstance(other, NormalOrderedOp):
            return NotImplemented
        out: Dict[TermKey, complex] = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                _accumulate_product(k1, k2, c1 * c2, out)
        return NormalOrderedOp(out)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex)):
            return self * other
        return NotImplemented

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not defined")
        out = NormalOrderedOp.scalar(1.0)
        for _ in range(k):
            out = out * self
        return out

    def commutator(self, other: "NormalOrderedOp") -> "NormalOrderedOp":
        return self * other - other * self

    def __repr__(self) -> str:
        return f"NormalOrderedOp({len(self.terms)} terms)"


def _coerce(x) -> NormalOrderedOp:
    if isinstance(x, NormalOrderedOp):
        return x
    if isinstance(x, (int, float, complex)):
        return NormalOrderedOp.scalar(x)
    raise TypeError(f"cannot coerce {type(x)!r} to NormalOrderedOp")


def _accumulate_product(k1: TermKey, k2: TermKey, coeff: complex,
                        out: Dict[TermKey, complex]) -> None:
    """Normal-order the product of two monomials and accumulate into ``out``.

    Per shared mode, ``B^{k} B†^{j} = sum_i i! C(k,i) C(j,i) B†^{j-i} B^{k-i}``.
    """
    d1 = {m: (j, k) for m, j, k in k1}
    d2 = {m: (j, k) for m, j, k in k2}
    modes = sorted(set(d1) | set(d2))
    # per-mode alternatives: list of ((j, k), weight)
    options: List[List[Tuple[Tuple[int, int], float]]] = []
    for m in modes:
        j1, a1 = d1.get(m, (0, 0))
        j2, a2 = d2.get(m, (0, 0))
        alts = []
        for i in range(min(a1, j2) + 1):
            w = math.comb(a1, i) * math.comb(j2, i) * math.factorial(i)
            alts.append(((j1 + j2 - i, a1 + a2 - i), float(w)))
        options.append(alts)

    def walk(idx: int, acc: List[Tuple[Mode, int, int]], w: float) -> None:
        if idx == len(modes):
            key = tuple((m, j, k) for m, j, k in acc if j or k)
            out[key] = out.get(key, 0.0) + coeff * w
            return
        m = modes[idx]
        for (j, k), wi in options[idx]:
            acc.append((m, j, k))
            walk(idx + 1, acc, w * wi)
            acc.pop()

    walk(0, [], 1.0)


# -- closed-form weighted traces ---------------------------------------------


def _mode_factor(j: int, k: int, q: complex, plain: bool) -> complex:
    """Closed-form single-mode trace of ``q^N (B†)^j B^k`` (ratio rule if not plain)."""
    if j != k:
        return 0.0
    g = q / (1.0 - q)
    val = math.factorial(k) * g ** k
    if plain:
        val /= (1.0 - q)
    return val


def weighted_trace(x: NormalOrderedOp, q: Mapping[Mode, complex],
                   plain_modes: FrozenSet[Mode] | frozenset = frozenset()) -> complex:
    """Exact trace of ``x`` against per-mode weights ``q_m^{N_m}``.

    Modes in ``plain_modes`` use the plain (un-normalized) geometric trace and
    contribute their partition factor ``1/(1-q)`` even when absent from a
    monomial; all other weighted modes use the normalized ratio rule, under
    which an absent mode contributes 1.  A mode appearing in ``x`` without a
    weight would be an untwisted (divergent) trace and raises ``ValueError``.
    """
    for m in plain_modes:
        if m not in q:
            raise ValueError(f"plain-trace mode {m!r} has no weight")
    total = 0.0 + 0.0j
    for key, c in x.terms.items():
        seen = set()
        f = c
        for mode, j, k in key:
            if mode not in q:
                raise ValueError(f"mode {mode!r} carries no twist weight; trace diverges")
            f *= _mode_factor(j, k, q[mode], mode in plain_modes)
            if f == 0.0:
                break
            seen.add(mode)
        else:
            for mode in plain_modes:
                if mode not in seen:
                    f *= 1.0 / (1.0 - q[mode])
            total += f
            continue
    return total


def normalized_trace(x: NormalOrderedOp, q: Mapping[Mode, complex]) -> complex:
    """Normalized trace with every mode weighted by the ratio rule."""
    return weighted_trace(x, q, frozenset())


# -- truncated, damped numeric traces (independent cross-check path) ---------


def damped_numeric_trace(x: NormalOrderedOp, q: Mapping[Mode, complex],
                         n_max: int, eta: float = 0.0) -> complex:
    """Normalized trace by direct truncated summation with weights ``q e^{-eta}``.

    This is the convergent-series route: for ``|q e^{-eta}| < 1`` it tends to
    the closed-form :func:`normalized_trace` as ``eta -> 0+`` and
    ``n_max -> infinity``.  It shares no code with the closed form.
    """
    damped = {m: qm * math.exp(-eta) for m, qm in q.items()}
    for m, qm in damped.items():
        if abs(qm) >= 1.0:
            raise ValueError(f"non-convergent weight {qm!r} for mode {m!r}")
    occ = np.arange(n_max + 1, dtype=float)
    total = 0.0 + 0.0j
    for key, c in x.terms.items():
        f = complex(c)
        for mode, j, k in key:
            if j != k:
                f = 0.0
                break
            w = damped[mode] ** occ
            # <m| (B†)^k B^k |m> = m (m-1) ... (m-k+1)
            diag = np.ones_like(occ)
            for i in range(k):
                diag *= np.maximum(occ - i, 0.0)
            f *= np.sum(w * diag) / np.sum(w)
        total += f
    return total


def _rational_extrapolate(xs: Sequence[float], ys: Sequence[complex],
                          x0: float = 0.0) -> complex:
    """Bulirsch-Stoer rational extrapolation of samples to ``x0``."""
    n = len(xs)
    prev: List[complex] = [0.0] * n
    cur: List[complex] = list(ys)
    for k in range(1, n):
        nxt: List[complex] = []
        for i in range(n - k):
            diff = cur[i + 1] - cur[i]
            inner = cur[i + 1] - prev[i + 1]
            factor = (xs[i] - x0) / (xs[i + k] - x0)
            if inner == 0:
                nxt.append(cur[i + 1])
                continue
            den = factor * (1 - diff / inner) - 1
            nxt.append(cur[i + 1] + (diff / den if den != 0 else 0.0))
        prev, cur = cur, nxt
    return cur[0]


def extrapolated_trace(x: NormalOrderedOp, q: Mapping[Mode, complex],
                       etas: Sequence[float] | None = None,
                       n_max: int | None = None) -> complex:
    """Rational extrapolation of the damped numeric trace to eta = 0.

    The default schedule is geometric, ``0.2 * 2^{-j}``; the truncation depth
    is chosen so the discarded geometric tail is negligible at the smallest
    damping used.  Each per-mode factor of the damped trace is a rational
    function of ``e^{-eta}``, so Bulirsch-Stoer rational extrapolation
    converges much faster here than polynomial (Neville) extrapolation.
    """
    if etas is None:
        etas = [0.2 / 2 ** j for j in range(6)]
    etas = sorted(etas, reverse=True)
    deg = max(x.degree(), 2)
    vals = []
    for eta in etas:
        n = n_max if n_max is not None else int((40 + 14 * deg) / eta)
        vals.append(damped_numeric_trace(x, q, n, eta))
    return _rational_extrapolate(list(etas), vals, 0.0)


# -- automorphism between the two number-basis representations ----------------


def automorphism_image(x: NormalOrderedOp) -> NormalOrderedOp:
    """Apply the algebra automorphism ``B -> -B†, B† -> B`` and re-normal-order.

    It exchanges the two inequivalent number-basis representations of the
    ladder pair and flips the sign of ``B†B + 1/2``.
    """
    out = NormalOrderedOp.zero()
    for key, c in x.terms.items():
        term = NormalOrderedOp.scalar(c)
        for mode, j, k in key:
            b = NormalOrderedOp.annihilator(mode)
            bd = NormalOrderedOp.creator(mode)
            term = term * (b ** j) * ((-bd) ** k)
        out = out + term
    return out


# -- truncated Fock spaces and matrices ---------------------------------------


@dataclass(frozen=True)
class FockTruncation:
    """Total-excitation cutoff with a boundary guard.

    States with total occupation ``<= n_max`` span the truncated space; matrix
    identities built from operators of total ladder degree ``<= buffer`` are
    exact on the sub-basis with occupation ``<= n_max - buffer``.
    """
    n_max: int
    buffer: int = 0

    def __post_init__(self):
        if not 0 <= self.buffer < self.n_max:
            raise ValueError("require 0 <= buffer < n_max")


class FockSpace:
    """Occupation-number basis over a fixed mode list, capped in total excitation."""

    def __init__(self, modes: Sequence[Mode], n_max: int):
        self.modes: Tuple[Mode, ...] = tuple(sorted(set(modes)))
        if len(self.modes) != len(modes):
            raise ValueError("duplicate modes in Fock space")
        self.n_max = int(n_max)
        self.states: List[Tuple[int, ...]] = list(self._enumerate(len(self.modes), self.n_max))
        self.index: Dict[Tuple[int, ...], int] = {s: i for i, s in enumerate(self.states)}
        self.dim = len(self.states)
        self._mode_pos = {m: i for i, m in enumerate(self.modes)}

    @staticmethod
    def _enumerate(k: int, cap: int):
        if k == 0:
            yield ()
            return
        for head in range(cap + 1):
            for tail in FockSpace._enumerate(k - 1, cap - head):
                yield (head,) + tail

    def buffered_indices(self, buffer: int) -> List[int]:
        """Indices of states guaranteed exact under products of degree <= buffer."""
        cap = self.n_max - buffer
        return [i for i, s in enumerate(self.states) if sum(s) <= cap]

    def occupation_weights(self, q: Mapping[Mode, complex]) -> np.ndarray:
        """Diagonal of ``prod_m q_m^{N_m}`` over the basis (weight 1 for missing modes)."""
        out = np.ones(self.dim, dtype=complex)
        for m, qm in q.items():
            if m not in self._mode_pos:
                continue
            p = self._mode_pos[m]
            for i, s in enumerate(self.states):
                out[i] *= qm ** s[p]
        return out


def fock_matrix(x: NormalOrderedOp, space: FockSpace, rep: str = "+") -> sp.csr_matrix:
    """Matrix of ``x`` on the truncated basis; amplitudes leaving the cap are dropped.

    ``rep="-"`` materializes the second representation via the algebra
    automorphism.
    """
    if rep == "-":
        x = automorphism_image(x)
    elif rep != "+":
        raise ValueError("rep must be '+' or '-'")
    rows: List[int] = []
    cols: List[int] = []
    vals: List[complex] = []
    pos = space._mode_pos
    for key, c in x.terms.items():
        acting = [(pos[m], j, k) for m, j, k in key if m in pos]
        if len(acting) != len(key):
            missing = [m for m, _, _ in key if m not in pos]
            raise ValueError(f"operator acts on modes outside the space: {missing}")
        for col, state in enumerate(space.states):
            amp = c
            new = list(state)
            ok = True
            for p, j, k in acting:
                m = new[p]
                if m < k:
                    ok = False
                    break
                # B^k then B†^j in the |k+1> = B†|k> convention
                for i in range(k):
                    amp *= (m - i)
                new[p] = m - k + j
            if not ok:
                continue
            tnew = tuple(new)
            row = space.index.get(tnew)
            if row is None:
                continue  # truncated away
            rows.append(row)
            cols.append(col)
            vals.append(amp)
    return sp.csr_matrix((vals, (rows, cols)), shape=(space.dim, space.dim), dtype=complex)


def nilpotent_exp(x: NormalOrderedOp, space: FockSpace) -> sp.csr_matrix:
    """Exact matrix exponential of an excitation-raising operator on the cap.

    Every term of ``x`` must strictly raise total excitation, which makes the
    truncated matrix nilpotent and the series finite.
    """
    if x.min_excitation_shift() < 1:
        raise ValueError("exponent must strictly raise total excitation")
    a = fock_matrix(x, space)
    out = sp.identity(space.dim, dtype=complex, format="csr")
    power = sp.identity(space.dim, dtype=complex, format="csr")
    k = 1
    while True:
        power = (power @ a) / k
        if power.count_nonzero() == 0:
            break
        out = out + power
        k += 1
        if k > space.n_max + 2:
            raise RuntimeError("exponential series failed to terminate")
    return sp.csr_matrix(out)


# -- small matrices over the oscillator algebra -------------------------------


class CarrierOp:
    """A ``d x d`` matrix with :class:`NormalOrderedOp` entries.

    Models operators on (finite carrier) ⊗ (Fock space); ``d = 1`` recovers a
    bare algebra element.
    """

    __slots__ = ("d", "mat")

    def __init__(self, d: int, mat: Sequence[Sequence[NormalOrderedOp]] | None = None):
        self.d = int(d)
        if mat is None:
            z = NormalOrderedOp.zero()
            self.mat = [[z for _ in range(d)] for _ in range(d)]
        else:
            self.mat = [[_coerce(mat[i][j]) for j in range(d)] for i in range(d)]

    @classmethod
    def identity(cls, d: int) -> "CarrierOp":
        out = cls(d)
        for i in range(d):
            out.mat[i][i] = NormalOrderedOp.scalar(1.0)
        return out

    @classmethod
    def from_scalar_op(cls, x: NormalOrderedOp | complex, d: int = 1) -> "CarrierOp":
        """``x`` times the identity on the finite carrier."""
        x = _coerce(x)
        out = cls(d)
        for i in range(d):
            out.mat[i][i] = x
        return out

    @classmethod
    def matrix_unit(cls, d: int, i: int, j: int,
                    x: NormalOrderedOp | complex = 1.0) -> "CarrierOp":
        out = cls(d)
        out.mat[i][j] = _coerce(x)
        return out

    def __add__(self, other: "CarrierOp") -> "CarrierOp":
        if self.d != other.d:
            raise ValueError("carrier dimension mismatch")
        return CarrierOp(self.d, [[self.mat[i][j] + other.mat[i][j]
                                   for j in range(self.d)] for i in range(self.d)])

    def __sub__(self, other: "CarrierOp") -> "CarrierOp":
        return self + other.scale(-1.0)

    def scale(self, c) -> "CarrierOp":
        return CarrierOp(self.d, [[self.mat[i][j] * c for j in range(self.d)]
                                  for i in range(self.d)])

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, NormalOrderedOp)):
            return self.scale(other)
        if not isinstance(other, CarrierOp):
            return NotImplemented
        if self.d != other.d:
            raise ValueError("carrier dimension mismatch")
        out = CarrierOp(self.d)
        for i in range(self.d):
            for j in range(self.d):
                acc = NormalOrderedOp.zero()
                for k in range(self.d):
                    acc = acc + self.mat[i][k] * other.mat[k][j]
                out.mat[i][j] = acc
        return out

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex)):
            return self.scale(other)
        return NotImplemented

    def is_zero(self, tol: float = COEFF_TOL) -> bool:
        return all(self.mat[i][j].is_zero(tol) for i in range(self.d) for j in range(self.d))

    def max_coeff(self) -> float:
        return max(self.mat[i][j].max_coeff() for i in range(self.d) for j in range(self.d))

    def modes(self) -> FrozenSet[Mode]:
        out = set()
        for row in self.mat:
            for e in row:
                out |= e.modes()
        return frozenset(out)

    def weighted_trace(self, carrier_weights: Sequence[complex],
                       q: Mapping[Mode, complex],
                       plain_modes: FrozenSet[Mode] | frozenset = frozenset()) -> complex:
        """Trace against diag(carrier_weights) ⊗ per-mode occupation weights."""
        if len(carrier_weights) != self.d:
            raise ValueError("carrier weight length mismatch")
        return sum(carrier_weights[i] * weighted_trace(self.mat[i][i], q, plain_modes)
                   for i in range(self.d))

    def to_matrix(self, space: FockSpace) -> sp.csr_matrix:
        """Dense carrier index (slow-running) ⊗ Fock basis (fast-running)."""
        blocks = [[fock_matrix(self.mat[i][j], space) for j in range(self.d)]
                  for i in range(self.d)]
        return sp.csr_matrix(sp.bmat(blocks, format="csr"))

    def __repr__(self) -> str:
        return f"CarrierOp(d={self.d})"
