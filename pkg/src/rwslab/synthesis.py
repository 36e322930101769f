"""Partial-sum evaluation on dyadic grids, plus the Fourier-side comparisons.

Wavelet synthesis accumulates one scale at a time from the tabulated mother
wavelet: the scale-j kernel sampled at step 2^-R is an exact slice of the
table (R <= r_psi keeps every lookup on a grid point), and each coefficient
adds one shifted copy of it.  Scales are summed in increasing j and, within
a scale, translates in increasing k, so the floating-point result is a pure
function of the field and never of chunking; parallelism only farms out
whole scales, whose contributions are reduced serially afterwards.

The Fourier side (sawtooth partial sums, the sine expansion of Brownian
motion) is summed term by term.  At the grid sizes used here the direct
O(M 2^R) cost stays in the tens of seconds at worst and keeps a single
unambiguous summation order.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .fields import CoefficientField, field_digest
from .laws import COEFFICIENT_STREAM, RandomLaw, draw_array, gaussian, law_string
from .util import canonical_json, parallel_map, write_csv
from .wavelets import MotherWaveletTable, periodized_grid

# Stream tag for the Gaussian mode draws of the Brownian sine expansion.
FOURIER_MODE_STREAM = "fourier-mode"

_PROVENANCE_KEYS = ("field", "law", "seed", "truncation")


@dataclass(frozen=True, eq=False)
class SamplePath:
    """Grid samples values[m] ~ f(m 2^-resolution) with their provenance.

    Provenance names the generating field (content digest or series name),
    the law actually applied ("deterministic" when none), the seed, and the
    truncation index: enough to regenerate the path bit for bit.
    """

    resolution: int
    values: np.ndarray = field(repr=False)
    provenance: dict

    def __post_init__(self):
        if self.resolution < 0:
            raise InvalidParameterError(f"resolution must be nonnegative, got {self.resolution}")
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != (2**self.resolution,):
            raise InvalidParameterError(
                f"expected 2^{self.resolution} samples, got array of shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise InvalidParameterError("sample path contains non-finite values")
        missing = [key for key in _PROVENANCE_KEYS if key not in self.provenance]
        if missing:
            raise InvalidParameterError(f"provenance is missing {missing}")

    def grid_x(self) -> np.ndarray:
        return np.arange(self.values.size) * 2.0**-self.resolution


def _check_resolutions(field_: CoefficientField, table: MotherWaveletTable,
                       j_trunc: int, resolution: int) -> None:
    if not 0 <= j_trunc <= field_.j_max:
        raise InvalidParameterError(
            f"truncation scale {j_trunc} outside 0..{field_.j_max}"
        )
    if j_trunc > resolution - 4:
        raise InvalidParameterError(
            f"resolution {resolution} too coarse for truncation {j_trunc} "
            f"(needs at least {j_trunc + 4})"
        )
    if resolution > table.r_psi:
        raise InvalidParameterError(
            f"resolution {resolution} exceeds the table depth {table.r_psi}"
        )


def _scale_contribution(field_: CoefficientField, table: MotherWaveletTable,
                        j: int, resolution: int) -> np.ndarray:
    """Scale-j partial sum on the grid, one slice-add per nonzero translate."""
    size = 2**resolution
    out = np.zeros(size)
    c = field_.levels[j]
    live = np.flatnonzero(c)
    if live.size == 0:
        return out
    kernel = periodized_grid(table, j, resolution)
    stride = 2 ** (resolution - j)
    # The kernel vanishes past support_length * stride; keep only the head
    # (the whole circle when 2^j <= support_length and wraps fold over).
    span = min(size, table.support_length * stride + 1)
    head = kernel[:span]
    for k in live:
        start = int(k) * stride
        stop = start + span
        if stop <= size:
            out[start:stop] += c[k] * head
        else:
            cut = size - start
            out[start:] += c[k] * head[:cut]
            out[: stop - size] += c[k] * head[cut:]
    return out


def synthesize(field_: CoefficientField, table: MotherWaveletTable,
               j_trunc: int, resolution: int) -> SamplePath:
    """Evaluate coarse + sum_{j <= j_trunc} sum_k c_{j,k} psi_{j,k} on the grid."""
    _check_resolutions(field_, table, j_trunc, resolution)
    parts = parallel_map(
        lambda j: _scale_contribution(field_, table, j, resolution),
        range(j_trunc + 1),
    )
    values = np.full(2**resolution, float(field_.coarse))
    for part in parts:  # ascending j, fixed reduction order
        values += part
    provenance = {
        "field": field_digest(field_),
        "law": "deterministic",
        "seed": None,
        "truncation": int(j_trunc),
    }
    return SamplePath(resolution, values, provenance)


def randomized_field(field_: CoefficientField, law: RandomLaw, seed: int) -> CoefficientField:
    """Every coefficient multiplied by its matching coef-stream draw."""
    levels = [
        lv * draw_array(law, seed, COEFFICIENT_STREAM, j, np.arange(lv.size))
        for j, lv in enumerate(field_.levels)
    ]
    return CoefficientField(field_.j_max, field_.coarse, levels)


def randomized_synthesize(field_: CoefficientField, table: MotherWaveletTable,
                          law: RandomLaw, seed: int,
                          j_trunc: int, resolution: int) -> SamplePath:
    """Synthesis of the field with coefficients multiplied by law draws.

    The provenance records the digest of the deterministic input field, so
    (field, law, seed, truncation) identifies the output exactly.
    """
    _check_resolutions(field_, table, j_trunc, resolution)
    base_id = field_digest(field_)
    kept = CoefficientField(j_trunc, field_.coarse, field_.levels[: j_trunc + 1])
    path = synthesize(randomized_field(kept, law, seed), table, j_trunc, resolution)
    provenance = {
        "field": base_id,
        "law": law_string(law),
        "seed": int(seed),
        "truncation": int(j_trunc),
    }
    return SamplePath(resolution, path.values, provenance)


# -------------------------------------------------------------- Fourier side

def fourier_sawtooth(m_terms: int, resolution: int) -> SamplePath:
    """Partial sum -sum_{m <= M} sin(2 pi m x)/(pi m) of the sawtooth."""
    if m_terms < 1:
        raise InvalidParameterError(f"need at least one mode, got {m_terms}")
    if resolution < 0:
        raise InvalidParameterError(f"resolution must be nonnegative, got {resolution}")
    xs = np.arange(2**resolution) * 2.0**-resolution
    values = np.zeros(xs.size)
    for m in range(1, m_terms + 1):
        values -= np.sin((2.0 * math.pi * m) * xs) / (math.pi * m)
    provenance = {
        "field": "fourier-sawtooth",
        "law": "deterministic",
        "seed": None,
        "truncation": int(m_terms),
    }
    return SamplePath(resolution, values, provenance)


def wiener_brownian(m_terms: int, resolution: int, seed: int) -> SamplePath:
    """Truncated sine expansion of Brownian motion.

    sqrt(2) chi_0 x plus M sine modes chi_m sin(2 pi m x)/(pi m) with
    standard Gaussian draws from the fourier-mode stream; zero modes leave
    just the random linear term.  The path starts at 0 by construction.
    """
    if m_terms < 0:
        raise InvalidParameterError(f"mode count must be nonnegative, got {m_terms}")
    if resolution < 0:
        raise InvalidParameterError(f"resolution must be nonnegative, got {resolution}")
    xs = np.arange(2**resolution) * 2.0**-resolution
    chi = draw_array(gaussian(), seed, FOURIER_MODE_STREAM, 0, np.arange(m_terms + 1))
    values = (math.sqrt(2.0) * chi[0]) * xs
    for m in range(1, m_terms + 1):
        values += (chi[m] / (math.pi * m)) * np.sin((2.0 * math.pi * m) * xs)
    provenance = {
        "field": "wiener-brownian",
        "law": "gaussian",
        "seed": int(seed),
        "truncation": int(m_terms),
    }
    return SamplePath(resolution, values, provenance)


@dataclass(frozen=True, eq=False)
class BlockEnergySummary:
    """Dyadic-block l2 norms with the smoothing-condition bookkeeping."""

    values: np.ndarray
    decreasing: bool
    l1_partial_sum: float


def dyadic_block_energies(coeffs) -> BlockEnergySummary:
    """Block norms s_j over the modes 2^j <= |n| < 2^{j+1}.

    ``coeffs`` is a centered Fourier coefficient array of odd length 2N+1
    (mode n at index N+n, complex entries welcome).  Blocks the array only
    partially covers are summed over what is present, so the l1 figure is a
    partial sum by construction.
    """
    a = np.asarray(coeffs)
    if a.ndim != 1 or a.size % 2 == 0:
        raise InvalidParameterError(
            f"need an odd-length centered coefficient array, got shape {a.shape}"
        )
    n_top = a.size // 2
    energy = np.abs(a).astype(float) ** 2
    folded = energy[n_top + 1 :] + energy[n_top - 1 :: -1]
    out = []
    j = 0
    while 2**j <= n_top:
        block = folded[2**j - 1 : min(2 ** (j + 1) - 1, n_top)]
        out.append(math.sqrt(float(np.sum(block))))
        j += 1
    values = np.asarray(out)
    decreasing = bool(np.all(np.diff(values) <= 0.0)) if values.size else True
    return BlockEnergySummary(
        values=values,
        decreasing=decreasing,
        l1_partial_sum=float(np.sum(values)),
    )


# ------------------------------------------------------------------ export

def export_path_csv(path_: SamplePath, destination, comment: str | None = None) -> None:
    """Write (x, value) rows at 12 digits plus a provenance sidecar JSON."""
    write_csv(destination, [("x", path_.grid_x()), ("value", path_.values)],
              digits=12, comment=comment)
    base, _ = os.path.splitext(str(destination))
    with open(base + ".json", "w", encoding="utf-8") as fh:
        fh.write(canonical_json({"resolution": path_.resolution,
                                 "provenance": path_.provenance}))
        fh.write("\n")
