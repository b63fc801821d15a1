"""Zeros of the reduced block polynomials and the paired-shift chains.

At reduction level ``r`` the diagonal block polynomial for block row ``i``
(``i`` a multiple of ``2**r``) has as zeros the eigenvalues of
``-Rn[i-(2**r-1) : i+(2**r-1)]``. They are computed here by bisection
directly from that principal submatrix, never through the level
recurrence, so errors do not accumulate from one level to the next.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .errors import IndexOutOfGrid, LengthMismatch
from .tridiag import (
    UNIT_ROUNDOFF,
    EigenRequest,
    SubmatrixWindow,
    TridiagonalMatrix,
    bisect_with_work,
    symmetrize_similarity,
)

Key = Tuple[int, int]


def level_count(n: int) -> int:
    """Return ``k`` with ``n = 2**k - 1``."""
    k = (n + 1).bit_length() - 1
    if n < 1 or 2 ** k - 1 != n:
        raise ValueError(f"block count {n} is not of the form 2**k - 1")
    return k


def level_indices(r: int, n: int, odd_only: bool = False) -> List[int]:
    """Block indices alive at level ``r``: multiples of ``2**r`` in ``1..n``.

    With ``odd_only`` only the odd multiples are returned; those are the rows
    eliminated at level ``r`` (and solved for during back-substitution).
    """
    s = 2 ** r
    step = 2 * s if odd_only else s
    return list(range(s, n + 1, step))


def window_for(r: int, i: int, n: int) -> SubmatrixWindow:
    """Rows of ``Rn`` whose negated principal submatrix carries the zeros of
    the level-``r`` block polynomial at block ``i``."""
    s = 2 ** r
    if r < 0 or i < 1 or i > n or i % s:
        raise IndexOutOfGrid(f"block {i} is not a level-{r} index for n={n}")
    return SubmatrixWindow(max(1, i - (s - 1)), min(n, i + (s - 1)))


def merge_product_zeros(left, right) -> np.ndarray:
    """Zeros of a product polynomial, sorted descending (ties stay adjacent)."""
    merged = np.concatenate([np.asarray(left, dtype=float), np.asarray(right, dtype=float)])
    return -np.sort(-merged, kind="stable")


@dataclass(frozen=True)
class PairedChain:
    """Shift pairs ``(theta_j, phi_j)`` plus the unpaired ``final_shift``.

    Applying the chain to ``b`` computes
    ``prod (B - mu_j)^-1 prod (B - lambda_j) b`` as a sequence of shifted
    tridiagonal solves.
    """

    pairs: Tuple[Tuple[float, float], ...]
    final_shift: float

    @property
    def thetas(self) -> np.ndarray:
        return np.array([p[0] for p in self.pairs])

    @property
    def phis(self) -> np.ndarray:
        return np.array([p[1] for p in self.pairs])

    def __len__(self):
        return len(self.pairs)


def pair_shifts(mu, lam) -> PairedChain:
    """Pair ``theta_j = mu_{j+1}`` with ``phi_j = lambda_j``.

    Both sequences are sorted descending (largest, i.e. closest to zero,
    first); ``mu_1`` is left over as the final shift.
    """
    mu = [float(v) for v in mu]
    lam = [float(v) for v in lam]
    if len(mu) != len(lam) + 1:
        raise LengthMismatch(f"need len(mu) == len(lambda) + 1, got {len(mu)} and {len(lam)}")
    pairs = tuple((mu[j + 1], lam[j]) for j in range(len(lam)))
    return PairedChain(pairs, mu[0])


@dataclass(frozen=True)
class CouplingCoefficients:
    """Products ``alpha_i^(r) = prod_{j=i-2^r+1}^{i} a_j`` and
    ``gamma_i^(r) = prod_{j=i}^{i+2^r-1} c_j`` with ``a_1 = c_n = 0``."""

    a: Tuple[float, ...]  # 1-based: a[0] is padding, a[1] == 0
    c: Tuple[float, ...]  # 1-based: c[0] is padding, c[n] == 0
    k: int

    @classmethod
    def from_matrix(cls, Rn: TridiagonalMatrix) -> "CouplingCoefficients":
        n = Rn.order
        a = (0.0, 0.0) + tuple(Rn.sub.tolist())
        c = (0.0,) + tuple(Rn.sup.tolist()) + (0.0,)
        return cls(a, c, level_count(n))

    @property
    def n(self) -> int:
        return len(self.a) - 1

    def a_factors(self, r: int, i: int) -> List[float]:
        """``a_{i-2^r+1}, ..., a_i`` in increasing index order."""
        return list(self.a[max(i - 2 ** r + 1, 1):i + 1])

    def c_factors(self, r: int, i: int) -> List[float]:
        """``c_i, ..., c_{i+2^r-1}`` in increasing index order."""
        return list(self.c[i:min(i + 2 ** r - 1, self.n) + 1])

    def alpha(self, r: int, i: int) -> float:
        return float(np.prod(self.a_factors(r, i)))

    def gamma(self, r: int, i: int) -> float:
        return float(np.prod(self.c_factors(r, i)))

    def table(self) -> Tuple[Dict[Key, float], Dict[Key, float]]:
        alpha, gamma = {}, {}
        for r in range(self.k):
            for i in level_indices(r, self.n):
                alpha[(r, i)] = self.alpha(r, i)
                gamma[(r, i)] = self.gamma(r, i)
        return alpha, gamma


@dataclass(frozen=True, eq=False)
class ZeroTable:
    """Descending zeros ``mu`` of the block polynomial for each ``(r, i)``."""

    k: int
    entries: Dict[Key, np.ndarray]
    kappa: float = UNIT_ROUNDOFF
    work: int = field(default=0, compare=False)

    @property
    def n(self) -> int:
        return 2 ** self.k - 1

    def __getitem__(self, key: Key) -> np.ndarray:
        try:
            return self.entries[key]
        except KeyError:
            raise IndexOutOfGrid(f"no zeros stored for (r, i) = {key}") from None

    def __contains__(self, key):
        return key in self.entries

    def keys(self):
        return sorted(self.entries)

    def chain(self, r: int, i: int) -> PairedChain:
        """Paired chain for ``(B_i^(r))^-1 B_{i-h}^(r-1) B_{i+h}^(r-1)``."""
        mu = self[(r, i)]
        if r == 0:
            return pair_shifts(mu, [])
        h = 2 ** (r - 1)
        return pair_shifts(mu, merge_product_zeros(self[(r - 1, i - h)], self[(r - 1, i + h)]))

    # -- serialization ----------------------------------------------------
    def to_json_obj(self) -> dict:
        return {f"{r}:{i}": self.entries[(r, i)].tolist() for r, i in self.keys()}

    @classmethod
    def from_json_obj(cls, obj: dict, kappa: float = UNIT_ROUNDOFF) -> "ZeroTable":
        entries = {}
        for key, values in obj.items():
            r, i = (int(part) for part in key.split(":"))
            arr = np.array(values, dtype=float)
            arr.setflags(write=False)
            entries[(r, i)] = arr
        if not entries:
            raise ValueError("empty zero table")
        k = max(r for r, _ in entries) + 1
        return cls(k, entries, kappa)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_obj(), fh)

    @classmethod
    def load(cls, path) -> "ZeroTable":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json_obj(json.load(fh))


def required_keys(k: int, all_windows: bool = False) -> List[Key]:
    """Table entries consumed by reduction and back-substitution.

    Only odd multiples of ``2**r`` are ever factored at level ``r``; pass
    ``all_windows`` to get every multiple.
    """
    n = 2 ** k - 1
    return [(r, i) for r in range(k) for i in level_indices(r, n, odd_only=not all_windows)]


def window_zeros(S: TridiagonalMatrix, r: int, i: int, kappa: float) -> Tuple[np.ndarray, int]:
    n = S.order
    w = window_for(r, i, n)
    interior = 2 ** (r + 1) - 1
    assert w.size == interior or w.lo == 1 or w.hi == n, (r, i, w)
    eigs, work = bisect_with_work(S.window(w.lo, w.hi), EigenRequest(kappa))
    mu = -eigs  # ascending eigenvalues -> descending zeros
    mu.setflags(write=False)
    return mu, work


def build_zero_table(Rn: TridiagonalMatrix, k: Optional[int] = None, kappa: float = UNIT_ROUNDOFF,
                     threads: int = 1, all_windows: bool = False) -> ZeroTable:
    """Compute the zero table of ``Rn`` by bisection on principal submatrices.

    A nonsymmetric ``Rn`` is first symmetrized by a diagonal similarity,
    which leaves the eigenvalues of every principal submatrix unchanged.
    """
    if k is None:
        k = level_count(Rn.order)
    if Rn.order != 2 ** k - 1:
        raise ValueError(f"Rn has order {Rn.order}, expected 2**{k} - 1")
    S = Rn if Rn.is_symmetric else symmetrize_similarity(Rn)[1]
    keys = required_keys(k, all_windows)

    def one(key):
        return window_zeros(S, key[0], key[1], kappa)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, keys))
    else:
        results = [one(key) for key in keys]
    entries = {key: mu for key, (mu, _) in zip(keys, results)}
    return ZeroTable(k, entries, kappa, sum(w for _, w in results))


def chain_lemma_terms(mu, lam) -> np.ndarray:
    """``|mu_{l+1} - lambda_l| / |mu_{l+1}| + |mu_l| / |mu_{l+1}|`` for each l."""
    mu = np.asarray(mu, dtype=float)
    lam = np.asarray(lam, dtype=float)
    return np.abs(mu[1:] - lam) / np.abs(mu[1:]) + np.abs(mu[:-1]) / np.abs(mu[1:])


def iter_chain_inputs(table: ZeroTable) -> Iterable[Tuple[Key, np.ndarray, np.ndarray]]:
    """Yield ``((r, i), mu, lambda)`` for every chained entry with ``r >= 1``."""
    for r, i in table.keys():
        if r == 0:
            continue
        h = 2 ** (r - 1)
        yield (r, i), table[(r, i)], merge_product_zeros(table[(r - 1, i - h)], table[(r - 1, i + h)])
