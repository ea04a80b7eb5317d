"""Conversions between coincidence percentages, svodesh distances, and times.

The svodesh (Svod) is the hundredth part of the time unit fixed by setting
the log retention rate of the basic vocabulary to -1 per unit.  On that
scale a coincidence percentage C maps to the distance

    L = -100 * ln(C / 100)

and back via C = 100 * exp(-L / 100).  For directly related isolects L is
the time separation; for two synchronous relatives it is the distance
through their common ancestor, so L/2 is the divergence time.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError
from .modes import PRECISE, check_mode, quantize
from .model import CoincidenceMatrix, DistanceMatrix


def coincidence_to_svodesh(c: float, mode: str = PRECISE) -> float:
    """Svodesh distance for a coincidence percentage in (0, 100]."""
    check_mode(mode)
    if not np.isfinite(c) or c <= 0:
        raise DomainError(f"coincidence must be > 0 (got {c}); distance is infinite at 0")
    if c > 100:
        raise DomainError(f"coincidence must be <= 100 (got {c})")
    return quantize(-100.0 * math.log(c / 100.0), mode)


def svodesh_to_coincidence(length: float, mode: str = PRECISE) -> float:
    """Coincidence percentage for a nonnegative svodesh distance."""
    check_mode(mode)
    if not np.isfinite(length) or length < 0:
        raise DomainError(f"svodesh distance must be finite and >= 0 (got {length})")
    return quantize(100.0 * math.exp(-length / 100.0), mode)


def divergence_time(
    c: float, t1: float = 0.0, t2: float = 0.0, mode: str = PRECISE
) -> float:
    """Divergence time before present of two attested languages.

    ``t1`` and ``t2`` are the attestation depths of the two languages in
    svodesh (0 for contemporary ones); the distance through the common
    ancestor plus both depths, halved.
    """
    check_mode(mode)
    if t1 < 0 or t2 < 0:
        raise DomainError("attestation depths must be >= 0")
    length = coincidence_to_svodesh(c, PRECISE)
    return quantize((length + t1 + t2) / 2.0, mode)


def pair_count(k: int) -> int:
    """Number of distinct unordered pairs among k languages."""
    if k < 2:
        raise DomainError(f"need at least 2 languages (got {k})")
    return k * (k - 1) // 2


def matrix_to_distances(matrix: CoincidenceMatrix, mode: str = PRECISE) -> DistanceMatrix:
    """Elementwise conversion of coincidences to svodesh distances."""
    check_mode(mode)
    k = len(matrix.languages)
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            c = matrix.values[i, j]
            if np.isnan(c):
                out[i, j] = out[j, i] = np.nan
                continue
            try:
                out[i, j] = out[j, i] = coincidence_to_svodesh(c, mode)
            except DomainError as exc:
                labels = matrix.languages.labels
                raise DomainError(
                    f"pair ({labels[i]}, {labels[j]}): {exc}"
                ) from None
    return DistanceMatrix(matrix.languages, out)


def matrix_to_coincidences(matrix: DistanceMatrix, mode: str = PRECISE) -> CoincidenceMatrix:
    """Elementwise conversion of svodesh distances to coincidences."""
    check_mode(mode)
    k = len(matrix.languages)
    out = np.full((k, k), 100.0)
    for i in range(k):
        for j in range(i + 1, k):
            l = matrix.values[i, j]
            if np.isnan(l):
                out[i, j] = out[j, i] = np.nan
                continue
            try:
                c = svodesh_to_coincidence(l, mode)
            except DomainError as exc:
                labels = matrix.languages.labels
                raise DomainError(
                    f"pair ({labels[i]}, {labels[j]}): {exc}"
                ) from None
            if c == 0.0:
                # Integer rounding of a sub-half-percent coincidence would
                # leave the (0, 100] range; keep the fractional value.
                c = svodesh_to_coincidence(l, PRECISE)
            out[i, j] = out[j, i] = c
    return CoincidenceMatrix(matrix.languages, out)
