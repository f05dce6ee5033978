"""In-band energy of pulses via a Hermitian Toeplitz band matrix.

The matrix entry (m, n) is the integral of exp(+j 2 pi f (m - n)) over
the band, so for a pulse p the quadratic form p^H M p equals the energy
of its spectrum P(f) = sum_n p(n) exp(-j 2 pi f n) inside the band.  The
closed-form lag integrals keep the optimizer free of quadrature error.
Only the first row is stored; products use FFT-based Toeplitz matvecs
and arbitrary sub-blocks are materialized by lag lookup.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import matmul_toeplitz, toeplitz

from .core import BandSet
from .errors import ValidationError


def phi_lags(band: BandSet, lags) -> np.ndarray:
    """Band integrals of exp(-j 2 pi f lag), vectorized over integer lags."""
    lags = np.asarray(lags)
    out = np.zeros(lags.shape, dtype=complex)
    nz = lags != 0
    m = lags[nz]
    for lo, hi in band.intervals:
        out[~nz] += hi - lo
        num = np.exp(-2j * np.pi * lo * m) - np.exp(-2j * np.pi * hi * m)
        out[nz] += num / (2j * np.pi * m)
    return out


def phi_entry(band: BandSet, lag: int) -> complex:
    """One Toeplitz generator value; conjugate-symmetric in the lag."""
    return complex(phi_lags(band, np.array([int(lag)]))[0])


@dataclass(frozen=True)
class BandMatrix:
    """Hermitian Toeplitz band matrix, stored as its first row.

    Entry (m, n) equals first_row[n - m] for n >= m and the conjugate of
    first_row[m - n] otherwise.  first_row[0] is the band measure.
    """

    first_row: np.ndarray
    size: int

    def __post_init__(self):
        row = np.asarray(self.first_row, dtype=complex)
        if row.shape != (self.size,):
            raise ValidationError("first_row length must equal size")
        row.setflags(write=False)
        object.__setattr__(self, "first_row", row)

    @property
    def measure(self) -> float:
        return float(self.first_row[0].real)

    def full(self) -> np.ndarray:
        """Dense matrix; intended for small sizes and tests."""
        return toeplitz(np.conj(self.first_row), self.first_row)

    def submatrix(self, rows, cols) -> np.ndarray:
        """Dense sub-block via lag lookup (no full matrix materialized)."""
        rows = np.asarray(rows, dtype=int)
        cols = np.asarray(cols, dtype=int)
        ext = np.concatenate([np.conj(self.first_row[:0:-1]), self.first_row])
        return ext[(cols[None, :] - rows[:, None]) + self.size - 1]

    def matmul(self, x: np.ndarray) -> np.ndarray:
        """Matrix product with a vector or a stack of columns."""
        x = np.asarray(x, dtype=complex)
        if x.shape[0] != self.size:
            raise ValidationError(
                f"operand has leading dimension {x.shape[0]}, expected {self.size}"
            )
        return matmul_toeplitz((np.conj(self.first_row), self.first_row), x)

    def quad(self, p: np.ndarray) -> float:
        """Real value of p^H M p (clamped to >= 0)."""
        p = np.asarray(p, dtype=complex)
        if p.shape != (self.size,):
            raise ValidationError(f"pulse length {p.shape} does not match {self.size}")
        val = np.vdot(p, self.matmul(p)).real
        return max(val, 0.0)


def phi_matrix(band: BandSet, pulse_len: int) -> BandMatrix:
    """Band matrix of the given size from the closed-form lag integrals."""
    if pulse_len < 1:
        raise ValidationError("pulse_len must be >= 1")
    row = phi_lags(band, np.arange(pulse_len))
    return BandMatrix(first_row=row, size=pulse_len)


def band_energy(pulse: np.ndarray, phi: BandMatrix) -> float:
    """Energy of the pulse's spectrum inside the band of ``phi``."""
    return phi.quad(pulse)


def band_power(pulses: np.ndarray, phi: BandMatrix, sigma2,
               symbol_period: int) -> float:
    """Signal power inside the band: sum of sigma_k^2 E_k / symbol_period.

    ``pulses`` holds one pulse per column; ``sigma2`` the matching
    per-carrier symbol variances.
    """
    pulses = np.atleast_2d(np.asarray(pulses, dtype=complex))
    if pulses.shape[0] != phi.size:
        pulses = pulses.T
    sigma2 = np.broadcast_to(np.asarray(sigma2, dtype=float), (pulses.shape[1],))
    total = 0.0
    for j in range(pulses.shape[1]):
        total += sigma2[j] * phi.quad(pulses[:, j])
    return total / symbol_period
