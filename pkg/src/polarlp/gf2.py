"""Dense GF(2) matrix arithmetic on bit-packed storage.

Rows are stored as little-endian bitsets in 64-bit words, so row XOR and
row-space operations vectorize over machine words.  Polar parity-check
matrices are high density, which is why a dense packed layout is used
instead of a sparse one.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

_WORD = 64


class Gf2Matrix:
    """A rows x cols matrix over GF(2).

    Instances are immutable from the caller's perspective: all operations
    allocate fresh matrices, so values can be shared freely across threads.

    Parameters
    ----------
    array : array-like of shape (rows, cols)
        Binary entries; anything nonzero is taken as 1.
    """

    __slots__ = ("rows", "cols", "_words")

    def __init__(self, array) -> None:
        arr = np.atleast_2d(np.asarray(array))
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D array, got ndim={arr.ndim}")
        # Zero-row matrices are allowed (a fully reduced rate-1 graph has no
        # checks); zero columns are not.
        if arr.shape[1] < 1:
            raise ValueError(f"matrix must have >= 1 column, got shape {arr.shape}")
        self.rows, self.cols = arr.shape
        self._words = _pack(arr)

    # -- constructors ------------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> "Gf2Matrix":
        return cls(np.eye(n, dtype=np.uint8))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "Gf2Matrix":
        return cls(np.zeros((rows, cols), dtype=np.uint8))

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]]) -> "Gf2Matrix":
        return cls(np.array([list(r) for r in rows], dtype=np.uint8))

    @classmethod
    def _from_words(cls, rows: int, cols: int, words: np.ndarray) -> "Gf2Matrix":
        m = cls.__new__(cls)
        m.rows, m.cols = rows, cols
        m._words = words
        return m

    # -- accessors ---------------------------------------------------------

    def to_array(self) -> np.ndarray:
        """Unpack to a (rows, cols) uint8 array."""
        bits = np.unpackbits(self._words.view(np.uint8), axis=1, bitorder="little")
        return np.ascontiguousarray(bits[:, : self.cols])

    def row_support(self, i: int) -> np.ndarray:
        """Column indices with a 1 in row ``i``."""
        return np.nonzero(self.to_array()[i])[0]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Gf2Matrix)
            and self.shape == other.shape
            and bool(np.array_equal(self._words, other._words))
        )

    def __hash__(self) -> int:
        return hash((self.shape, self._words.tobytes()))

    def __repr__(self) -> str:
        return f"Gf2Matrix({self.rows}x{self.cols})"

    # -- arithmetic --------------------------------------------------------

    def mat_mul(self, other: "Gf2Matrix") -> "Gf2Matrix":
        """Matrix product with addition mod 2.

        Raises
        ------
        ValueError
            If ``self.cols != other.rows``.
        """
        if self.cols != other.rows:
            raise ValueError(
                f"dimension mismatch: {self.rows}x{self.cols} @ {other.rows}x{other.cols}"
            )
        # C[i, j] = parity(<row i of self, column j of other>); columns of
        # `other` are materialized as packed rows of its transpose.
        bt = _pack(other.to_array().T)
        out = np.zeros((self.rows, other.cols), dtype=np.uint8)
        for i in range(self.rows):
            acc = np.bitwise_count(self._words[i] & bt).sum(axis=1)
            out[i] = acc & 1
        return Gf2Matrix(out)

    def kron(self, other: "Gf2Matrix") -> "Gf2Matrix":
        """Kronecker product over GF(2); dimensions multiply."""
        return Gf2Matrix(np.kron(self.to_array(), other.to_array()))

    def mat_vec(self, v: Sequence[int]) -> np.ndarray:
        """Product (self @ v) mod 2 for a binary vector ``v`` of length cols."""
        v = np.asarray(v)
        if v.ndim != 1 or v.shape[0] != self.cols:
            raise ValueError(f"vector length {v.shape} incompatible with {self.cols} columns")
        vw = _pack(v.reshape(1, -1))[0]
        return (np.bitwise_count(self._words & vw).sum(axis=1) & 1).astype(np.uint8)

    def row_reduce(self, pivot_column_order: Sequence[int] = ()) -> "Gf2Matrix":
        """Reduced row-echelon form with a caller-chosen pivot preference.

        Pivot columns are chosen greedily following ``pivot_column_order``
        first, then any remaining columns in ascending order.  The GF(2) row
        space is preserved; rank-deficient inputs keep their zero rows at the
        bottom so callers can read the rank off the result.

        Parameters
        ----------
        pivot_column_order : sequence of int
            Distinct column indices to try first, in order.
        """
        order = list(pivot_column_order)
        if len(set(order)) != len(order):
            raise ValueError("pivot_column_order contains duplicate indices")
        for c in order:
            if not 0 <= c < self.cols:
                raise ValueError(f"pivot column {c} out of range for {self.cols} columns")
        seen = set(order)
        order.extend(c for c in range(self.cols) if c not in seen)

        words = self._words.copy()
        nrows = self.rows
        done = 0
        for col in order:
            if done == nrows:
                break
            w, b = divmod(col, _WORD)
            colbits = (words[:, w] >> np.uint64(b)) & np.uint64(1)
            cand = np.nonzero(colbits[done:])[0]
            if cand.size == 0:
                continue
            piv = done + int(cand[0])
            if piv != done:
                words[[done, piv]] = words[[piv, done]]
                colbits[[done, piv]] = colbits[[piv, done]]
            mask = colbits.astype(bool)
            mask[done] = False
            if mask.any():
                words[mask] ^= words[done]
            done += 1
        return Gf2Matrix._from_words(self.rows, self.cols, words)

    def rank(self) -> int:
        reduced = self.row_reduce()._words
        return int(np.count_nonzero(reduced.any(axis=1)))

    def nonzero_rows(self) -> "Gf2Matrix":
        """Copy with all-zero rows dropped (raises if every row is zero)."""
        keep = self._words.any(axis=1)
        if not keep.any():
            raise ValueError("matrix has no nonzero rows")
        return Gf2Matrix(self.to_array()[keep])

    def stack(self, other: "Gf2Matrix") -> "Gf2Matrix":
        """Vertical concatenation."""
        if self.cols != other.cols:
            raise ValueError("column counts differ")
        return Gf2Matrix(np.vstack([self.to_array(), other.to_array()]))


def _pack(arr: np.ndarray) -> np.ndarray:
    bits = (np.asarray(arr) & 1).astype(np.uint8)
    nwords = (bits.shape[1] + _WORD - 1) // _WORD
    padded = np.zeros((bits.shape[0], nwords * _WORD), dtype=np.uint8)
    padded[:, : bits.shape[1]] = bits
    return np.packbits(padded, axis=1, bitorder="little").view(np.uint64)


def mat_mul(a: Gf2Matrix, b: Gf2Matrix) -> Gf2Matrix:
    return a.mat_mul(b)


def kron(a: Gf2Matrix, b: Gf2Matrix) -> Gf2Matrix:
    return a.kron(b)


def mat_vec_mod2(m: Gf2Matrix, v: Sequence[int]) -> np.ndarray:
    return m.mat_vec(v)


def row_reduce(m: Gf2Matrix, pivot_column_order: Sequence[int] = ()) -> Gf2Matrix:
    return m.row_reduce(pivot_column_order)
