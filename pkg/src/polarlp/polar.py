"""Polar transform, code construction, encoding, and parity-check extraction.

A code of blocklength ``N = 2**m`` is defined by its set of frozen input
indices; frozen bits are always 0.  The transform includes the bit-reversal
permutation, so ``x = u @ G_N`` with ``G_N = B_N @ G_2^{kron m}``.
"""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .gf2 import Gf2Matrix

G2 = Gf2Matrix([[1, 0], [1, 1]])


def bit_reverse(i: int, m: int) -> int:
    """Index whose m-bit binary expansion is that of ``i`` reversed."""
    if not 0 <= i < (1 << m):
        raise ValueError(f"index {i} out of range for m={m}")
    out = 0
    for _ in range(m):
        out = (out << 1) | (i & 1)
        i >>= 1
    return out


def bit_reversal_permutation(m: int) -> np.ndarray:
    return np.array([bit_reverse(i, m) for i in range(1 << m)], dtype=np.int64)


@lru_cache(maxsize=None)
def build_transform(m: int) -> Gf2Matrix:
    """The N x N polar transform G_N = B_N @ G_2^{kron m} for N = 2**m."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    kron_power = G2
    for _ in range(m - 1):
        kron_power = kron_power.kron(G2)
    # Left-multiplying by B_N reorders rows by bit reversal.
    return Gf2Matrix(kron_power.to_array()[bit_reversal_permutation(m)])


class PolarCode:
    """An (N, k) polar code given by blocklength exponent and frozen set.

    Parameters
    ----------
    m : int
        log2 of the blocklength; N = 2**m.
    frozen : iterable of int
        Input (u-domain) indices fixed to 0.  The remaining k = N - len(frozen)
        positions carry information bits.

    Attributes
    ----------
    N, k, m : int
    rate : float
    frozen : tuple of int, sorted ascending
    info_indices : tuple of int, sorted ascending
    """

    def __init__(self, m: int, frozen: Iterable[int]) -> None:
        if m < 1:
            raise ValueError(f"m must be >= 1, got {m}")
        self.m = m
        self.N = 1 << m
        fr = sorted(set(int(i) for i in frozen))
        if fr and (fr[0] < 0 or fr[-1] >= self.N):
            raise ValueError(f"frozen indices must lie in [0, {self.N})")
        self.frozen = tuple(fr)
        self.info_indices = tuple(i for i in range(self.N) if i not in set(fr))
        self.k = len(self.info_indices)
        self.rate = self.k / self.N
        self._bitrev = bit_reversal_permutation(m)

    @classmethod
    def construct(cls, m: int, k: int, design_snr_db: float = 3.0) -> "PolarCode":
        """Build a code by freezing the N-k least reliable input positions."""
        return cls(m, construct_frozen_set(m, k, design_snr_db))

    @classmethod
    def from_frozen_file(cls, m: int, path) -> "PolarCode":
        return cls(m, read_frozen_file(path))

    def __repr__(self) -> str:
        return f"PolarCode(N={self.N}, k={self.k})"

    def encode(self, info_bits: Sequence[int]) -> np.ndarray:
        """Map k information bits to a length-N codeword.

        Information bits are placed at the non-frozen u-indices (ascending),
        frozen positions are 0, and the result is u @ G_N computed through
        the stage butterflies.
        """
        info = np.asarray(info_bits, dtype=np.uint8)
        if info.ndim != 1 or info.shape[0] != self.k:
            raise ValueError(f"expected {self.k} information bits, got shape {info.shape}")
        u = np.zeros(self.N, dtype=np.uint8)
        u[list(self.info_indices)] = info & 1
        return self.transform_input(u)

    def transform_input(self, u: Sequence[int]) -> np.ndarray:
        """Apply x = u @ G_N to a full-length input vector."""
        u = np.asarray(u, dtype=np.uint8) & 1
        if u.shape != (self.N,):
            raise ValueError(f"expected length-{self.N} input, got {u.shape}")
        x = u[self._bitrev].copy()  # u @ B_N
        for level in range(self.m):
            half = 1 << level
            step = half << 1
            for j in range(0, self.N, step):
                x[j : j + half] ^= x[j + half : j + step]
        return x

    def parity_check_matrix(self) -> Gf2Matrix:
        """(N-k) x N parity-check matrix from the frozen columns of G_N.

        G_N is an involution, so u = x @ G_N and the frozen coordinates of u
        vanish exactly on codewords; each frozen column of G_N transposed is
        one parity check.

        Raises
        ------
        ValueError
            If the frozen set is empty (a rate-1 code has no parity checks).
        """
        if not self.frozen:
            raise ValueError("rate-1 code has an empty parity-check matrix")
        g = build_transform(self.m).to_array()
        return Gf2Matrix(g[:, list(self.frozen)].T)

    def codebook(self) -> np.ndarray:
        """All 2**k codewords as a (2**k, N) array (small codes only)."""
        if self.k > 20:
            raise ValueError(f"codebook of 2^{self.k} codewords is too large to enumerate")
        words = np.zeros((1 << self.k, self.N), dtype=np.uint8)
        for idx in range(1 << self.k):
            info = np.array([(idx >> b) & 1 for b in range(self.k)], dtype=np.uint8)
            words[idx] = self.encode(info)
        return words


# -- construction by Gaussian-approximation density evolution ---------------
#
# Four-segment approximation of phi(x) = 1 - E[tanh(L/2)] for L ~ N(x, 2x),
# with closed-form segment inverses.  Reliabilities are LLR means of the
# synthesized bit channels at the design SNR.

_SEG1 = 9.2254
_SEG2 = 0.7420
_SEG3 = 0.1910


def _phi(x: float) -> float:
    if x <= 0.0:
        return 1.0
    if x > _SEG1:
        return float(np.exp(-0.2832 * x - 0.4254))
    if x > _SEG2:
        return float(np.exp(-0.4527 * x**0.86 + 0.0218))
    if x > _SEG3:
        return float(0.9981 * np.exp(0.05315 * x * x - 0.4795 * x))
    return float(np.exp(0.1047 * x * x - 0.4992 * x))


def _phi_inv(y: float) -> float:
    if y >= 1.0:
        return 0.0
    if y < _phi(_SEG1):
        return -(np.log(y) + 0.4254) / 0.2832
    if y < _phi(_SEG2):
        return float(((0.0218 - np.log(y)) / 0.4527) ** (1.0 / 0.86))
    if y < _phi(_SEG3):
        a, b, c = 0.05315, -0.4795, -float(np.log(y / 0.9981))
    else:
        a, b, c = 0.1047, -0.4992, -float(np.log(y))
    # Smaller quadratic root: both segments are decreasing left of the vertex.
    return float((-b - np.sqrt(b * b - 4.0 * a * c)) / (2.0 * a))


def _check_combine(t: float) -> float:
    # Mean degradation through a check (minus) branch; linear tail avoids
    # exponent underflow for large means.
    if t > 11.673:
        return t - 2.4476
    p = _phi(t)
    return _phi_inv(1.0 - (1.0 - p) ** 2)


def channel_reliabilities(m: int, design_snr_db: float) -> np.ndarray:
    """LLR means of the N synthesized channels, indexed by u-position.

    ``design_snr_db`` is Es/N0 in dB of the BAWGN design channel.
    """
    es_n0 = 10.0 ** (design_snr_db / 10.0)
    mu = [4.0 * es_n0]
    for _ in range(m):
        nxt = []
        for t in mu:
            nxt.append(_check_combine(t))
            nxt.append(2.0 * t)
        mu = nxt
    mu_arr = np.array(mu)
    # The recursion above indexes channels in the transform's natural order;
    # u-positions see them through the bit-reversal permutation.
    return mu_arr[bit_reversal_permutation(m)]


def construct_frozen_set(m: int, k: int, design_snr_db: float = 3.0) -> tuple[int, ...]:
    """The N-k u-indices with lowest reliability at the design SNR.

    Deterministic: ties (which do not occur for positive SNR) would break
    toward lower indices.
    """
    n = 1 << m
    if not 0 <= k <= n:
        raise ValueError(f"k must be in [0, {n}], got {k}")
    rel = channel_reliabilities(m, design_snr_db)
    order = np.argsort(rel, kind="stable")
    return tuple(sorted(int(i) for i in order[: n - k]))


# -- frozen-set files --------------------------------------------------------


def read_frozen_file(path) -> list[int]:
    """Read a frozen-set file: one decimal u-index per line, '#' comments."""
    indices = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            indices.append(int(stripped))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: not a decimal index: {stripped!r}") from exc
    if len(set(indices)) != len(indices):
        raise ValueError(f"{path}: duplicate frozen indices")
    return sorted(indices)


def write_frozen_file(path, frozen: Iterable[int], header: str | None = None) -> None:
    lines = []
    if header:
        lines.extend(f"# {h}" for h in header.splitlines())
    lines.extend(str(i) for i in sorted(frozen))
    Path(path).write_text("\n".join(lines) + "\n")
