"""Periodized orthonormal wavelet machinery on the unit torus.

The basis here is deliberately not L^2-normalized.  With

    psi_{j,k}(x) = sum_l Psi(2^j (x - l) - k),

every dilate keeps the same height, so coefficient magnitudes compare
directly with function values; the matching analysis integral carries the
2^j weight instead: c_{j,k} = 2^j * integral_0^1 f psi_{j,k} dx.

Mother scaling functions and wavelets are tabulated on the dyadic grid
2^{-r_psi} by exact two-scale refinement: values at the integers come from
the unit eigenvector of the downsampled filter matrix, and each refinement
level fills in the odd dyadics from the previous one.  For a valid
orthonormal filter the refinement reproduces the coarse values identically,
which is monitored (not assumed): corrupted taps make the reproduction
error grow with depth and raise a numerical failure instead of returning a
quietly wrong table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .daubechies import DAUBECHIES_TAPS
from .errors import InvalidParameterError, NumericalFailureError

SQRT2 = math.sqrt(2.0)

# Finest granularity (as a dyadic level) for the positivity/negativity
# interval search, and the widest dyadic width considered.
INTERVAL_GRANULARITY = 6
_WIDEST_LEVEL = -4

# Refinement reproduction error below this floor counts as converged.
_CONVERGENCE_FLOOR = 1e-12


@dataclass(frozen=True)
class ScalingFilter:
    """Orthonormal low-pass filter with its vanishing-moment count."""

    family: str
    vanishing_moments: int
    taps: tuple[float, ...]

    @property
    def support_length(self) -> int:
        """Length of the scaling-function support [0, 2N-1]."""
        return 2 * self.vanishing_moments - 1

    def highpass_taps(self) -> tuple[float, ...]:
        """Quadrature-mirror high-pass taps g_i = (-1)^i h_{2N-1-i}."""
        n = len(self.taps)
        return tuple((-1.0) ** i * self.taps[n - 1 - i] for i in range(n))


@dataclass(frozen=True)
class DyadicInterval:
    """Half-open dyadic interval [index * 2^-level, (index+1) * 2^-level)."""

    index: int
    level: int

    @property
    def left(self) -> float:
        return self.index * 2.0 ** -self.level

    @property
    def right(self) -> float:
        return (self.index + 1) * 2.0 ** -self.level

    @property
    def width(self) -> float:
        return 2.0 ** -self.level

    def scaled(self, j: int, k: int) -> tuple[float, float]:
        """Endpoints of {x : 2^j x - k in self}, before any torus wrap."""
        return ((k + self.left) * 2.0 ** -j, (k + self.right) * 2.0 ** -j)

    def half(self) -> tuple[float, float]:
        """Endpoints of the concentric interval of half the width."""
        quarter = self.width / 4.0
        return (self.left + quarter, self.right - quarter)


@dataclass(frozen=True, eq=False)
class MotherWaveletTable:
    """Scaling function and mother wavelet tabulated at step 2^-r_psi."""

    filter: ScalingFilter
    r_psi: int
    phi: np.ndarray = field(repr=False)
    psi: np.ndarray = field(repr=False)
    sup_norm: float
    positivity_interval: DyadicInterval
    positivity_floor: float
    negativity_interval: DyadicInterval
    negativity_ceiling: float
    refinement_diffs: tuple[float, ...] = field(repr=False)

    @property
    def support_length(self) -> int:
        return self.filter.support_length

    @property
    def grid_step(self) -> float:
        return 2.0 ** -self.r_psi

    def grid_x(self) -> np.ndarray:
        return np.arange(self.psi.size) * self.grid_step

    def psi_at(self, t) -> np.ndarray:
        """Nearest-grid-point value of the mother wavelet at t (vectorized)."""
        return _lookup(self.psi, t, self.r_psi)

    def phi_at(self, t) -> np.ndarray:
        return _lookup(self.phi, t, self.r_psi)


def build_filter(family: str, vanishing_moments: int) -> ScalingFilter:
    """Return the orthonormal filter for the requested family.

    ``haar`` is the one-vanishing-moment filter; requesting ``haar`` with any
    other moment count is rejected rather than silently reinterpreted.
    """
    if family not in ("haar", "daubechies"):
        raise InvalidParameterError(
            f"unknown filter family {family!r}; expected 'haar' or 'daubechies'"
        )
    n = vanishing_moments
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= 20:
        raise InvalidParameterError(
            f"vanishing moments must be an integer in 1..20, got {n!r}"
        )
    if family == "haar" and n != 1:
        raise InvalidParameterError("the haar filter has exactly 1 vanishing moment")
    return ScalingFilter(family=family, vanishing_moments=int(n), taps=DAUBECHIES_TAPS[n])


def cascade_evaluate(filt: ScalingFilter, r_psi: int = 12) -> MotherWaveletTable:
    """Tabulate phi and psi on the grid of step 2^-r_psi over [0, 2N-1].

    Raises a numerical failure if the refinement reproduction error grows
    over the last three levels instead of staying at rounding level.
    """
    if not isinstance(r_psi, (int, np.integer)) or r_psi < 4:
        raise InvalidParameterError(f"refinement depth must be an integer >= 4, got {r_psi!r}")
    r_psi = int(r_psi)
    taps = np.asarray(filt.taps)
    length = filt.support_length

    if filt.taps == DAUBECHIES_TAPS[1]:
        # Unit box: closed form, exact on every grid point (the generic
        # refinement would smear sqrt(2)*h rounding across levels).
        phi, psi, diffs = _haar_tables(r_psi)
    else:
        # Convergence diagnostic: iterate the two-scale operator from a box
        # start and watch the common-grid sup-differences between successive
        # levels.  The production table below starts from the exact integer
        # eigenvector instead, which is self-consistent by construction and
        # therefore blind to bad taps; the box iteration is not.
        diffs = []
        probe = np.zeros(length + 1)
        probe[0] = 1.0
        for r in range(r_psi):
            nxt = _refine(probe, taps, length, r)
            diffs.append(float(np.max(np.abs(nxt[::2] - probe))))
            probe = nxt
        if diffs[-1] > _CONVERGENCE_FLOOR and diffs[-1] >= diffs[-2] >= diffs[-3]:
            raise NumericalFailureError(
                "two-scale refinement is not converging: common-grid differences were "
                f"{diffs[-3]:.3e}, {diffs[-2]:.3e}, {diffs[-1]:.3e} over the last three levels"
            )
        phi = _integer_values(taps, length)
        for r in range(r_psi):
            nxt = _refine(phi, taps, length, r)
            nxt[::2] = phi  # keep the exact coarse values
            phi = nxt
        psi = _wavelet_from_phi(phi, filt.highpass_taps(), length, r_psi)

    pos, pos_floor = _best_signed_interval(psi, length, r_psi)
    neg, neg_floor = _best_signed_interval(-psi, length, r_psi)
    if pos is None or neg is None:
        raise NumericalFailureError(
            "no dyadic interval at the search granularity has a one-signed wavelet"
        )
    return MotherWaveletTable(
        filter=filt,
        r_psi=r_psi,
        phi=phi,
        psi=psi,
        sup_norm=float(np.max(np.abs(psi))),
        positivity_interval=pos,
        positivity_floor=pos_floor,
        negativity_interval=neg,
        negativity_ceiling=-neg_floor,
        refinement_diffs=tuple(diffs),
    )


def eval_periodized(table: MotherWaveletTable, j: int, k: int, x) -> np.ndarray | float:
    """Evaluate the periodized wavelet psi_{j,k} at torus points x.

    The wrap sum has at most ceil(support / 2^j) + 1 live translates; each is
    a nearest-grid-point table lookup (exact whenever the evaluation points
    lie on a dyadic grid no finer than 2^-(r_psi + j)).
    """
    if j < 0:
        raise InvalidParameterError(f"scale must be nonnegative, got {j}")
    if not 0 <= k < 2**j:
        raise InvalidParameterError(f"position {k} outside [0, 2^{j})")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0.0) or np.any(x_arr >= 1.0):
        raise InvalidParameterError("evaluation points must lie in [0, 1)")
    t = 2.0**j * x_arr - k
    length = table.support_length
    total = np.zeros_like(t)
    # Translates t + w 2^j that can land in [0, support]:
    w_lo = math.ceil(-float(np.max(t)) / 2**j) if t.size else 0
    w_hi = math.floor((length - float(np.min(t))) / 2**j) if t.size else -1
    for w in range(w_lo, w_hi + 1):
        total += table.psi_at(t + w * 2.0**j)
    if np.isscalar(x) or x_arr.ndim == 0:
        return float(total)
    return total


def periodized_grid(table: MotherWaveletTable, j: int, resolution: int) -> np.ndarray:
    """psi_{j,0} periodized, sampled at every grid point m 2^-resolution.

    Lookups are exact slices of the table when resolution <= r_psi + j and
    rounded to the nearest table point otherwise.
    """
    if j < 0 or resolution < 0:
        raise InvalidParameterError("scale and resolution must be nonnegative")
    size = 2**resolution
    length = table.support_length
    out = np.zeros(size)
    shift = table.r_psi + j - resolution
    wraps = range(0, length // 2**j + 1)
    for w in wraps:
        # Sample Psi(m 2^{j-resolution} + w 2^j) over the live index range.
        base = w * 2 ** (table.r_psi + j)
        if shift >= 0:
            step = 2**shift
            last = length * 2**table.r_psi - base
            if last < 0:
                continue
            m_hi = min(size - 1, last // step)
            out[: m_hi + 1] += table.psi[base : base + m_hi * step + 1 : step]
        else:
            idx = np.rint(np.arange(size) * 2.0**shift).astype(np.int64) + base
            mask = idx <= length * 2**table.r_psi
            out[mask] += table.psi[idx[mask]]
    return out


def export_table_csv(table: MotherWaveletTable, path) -> None:
    """Write (grid_x, phi, psi) rows at 15 significant digits."""
    from .util import write_csv

    write_csv(
        path,
        [("grid_x", table.grid_x()), ("phi", table.phi), ("psi", table.psi)],
        digits=15,
    )


def _haar_tables(r_psi: int):
    size = 2**r_psi
    phi = np.ones(size + 1)
    phi[-1] = 0.0
    psi = np.ones(size + 1)
    psi[size // 2 :] = -1.0
    psi[-1] = 0.0
    return phi, psi, [0.0] * r_psi


def _lookup(values: np.ndarray, t, r_psi: int) -> np.ndarray:
    t_arr = np.asarray(t, dtype=float)
    idx = np.rint(t_arr * 2.0**r_psi).astype(np.int64)
    valid = (idx >= 0) & (idx < values.size)
    out = np.zeros_like(t_arr)
    out[valid] = values[idx[valid]]
    return out


def _integer_values(taps: np.ndarray, length: int) -> np.ndarray:
    """Exact phi values at the integers 0..support, unit-sum normalized."""
    vals = np.zeros(length + 1)
    if length == 1:
        # Unit box: right-continuous convention at the jump.
        vals[0] = 1.0
        return vals
    interior = np.arange(1, length)
    mat = np.zeros((length - 1, length - 1))
    for a, i in enumerate(interior):
        for b, m in enumerate(interior):
            idx = 2 * i - m
            if 0 <= idx < taps.size:
                mat[a, b] = SQRT2 * taps[idx]
    eigvals, eigvecs = np.linalg.eig(mat)
    pick = int(np.argmin(np.abs(eigvals - 1.0)))
    if abs(eigvals[pick] - 1.0) > 1e-8:
        raise NumericalFailureError(
            f"no unit eigenvalue in the refinement matrix (closest {eigvals[pick]:.6g})"
        )
    vec = np.real(eigvecs[:, pick])
    total = vec.sum()
    if abs(total) < 1e-12:
        raise NumericalFailureError("degenerate integer-point eigenvector")
    vals[1:length] = vec / total
    return vals


def _refine(values: np.ndarray, taps: np.ndarray, length: int, r: int) -> np.ndarray:
    """Apply the two-scale sum once: level-r grid values to level r+1."""
    out = np.zeros(length * 2 ** (r + 1) + 1)
    for k, h in enumerate(taps):
        lo = k * 2**r
        out[lo : lo + values.size] += (SQRT2 * h) * values
    return out


def _wavelet_from_phi(phi: np.ndarray, gtaps, length: int, r_psi: int) -> np.ndarray:
    m = 2**r_psi
    psi = np.zeros(length * m + 1)
    top = length * m
    for k, g in enumerate(gtaps):
        # psi(i/m) needs phi(2i/m - k), i.e. source index 2i - k m.
        i0 = (k * m + 1) // 2
        i1 = min(top, (length + k) * m // 2)
        if i1 < i0:
            continue
        s0 = 2 * i0 - k * m
        psi[i0 : i1 + 1] += (SQRT2 * g) * phi[s0 : s0 + 2 * (i1 - i0) + 1 : 2]
    return psi


def _best_signed_interval(values: np.ndarray, length: int, r_psi: int):
    """Widest dyadic interval maximizing the floor of ``values``.

    Candidates are half-open dyadic intervals no finer than the search
    granularity; selection is lexicographic (largest floor, then widest,
    then leftmost) so the result is reproducible for a given table.
    """
    per_bin = 2 ** (r_psi - INTERVAL_GRANULARITY)
    n_bins = length * 2**INTERVAL_GRANULARITY
    mins = values[: n_bins * per_bin].reshape(n_bins, per_bin).min(axis=1)
    best = None  # (floor, -level, -index)
    best_iv = None
    level = INTERVAL_GRANULARITY
    while True:
        for idx in np.flatnonzero(mins > 0.0):
            key = (mins[idx], -level, -int(idx))
            if best is None or key > best:
                best = key
                best_iv = DyadicInterval(index=int(idx), level=level)
        if mins.size < 2 or level <= _WIDEST_LEVEL:
            break
        pairs = mins.size // 2
        mins = np.minimum(mins[0 : 2 * pairs : 2], mins[1 : 2 * pairs : 2])
        level -= 1
    if best is None:
        return None, 0.0
    return best_iv, float(best[0])
