"""Sample-path diagnostics: analysis, sup profiles, slope and modulus fits.

The analysis side mirrors synthesis: a coefficient is the left-endpoint
Riemann sum of path times weighted wavelet on the sample grid, evaluated
through the same periodized kernel slices.  A Haar round trip is therefore
exact to rounding, while a smooth-wavelet round trip is limited only by
cross-scale quadrature leakage; the four spare resolution levels keep that
leakage at the percent scale.

Sup profiles accumulate partial sums in the synthesis reduction order
(scales ascending), so every recorded sup matches a separately synthesized
path bit for bit, for any worker count.

Almost-sure divergence or boundedness is never decided here: the profiles
and fits report observed statistics against the rates that the symbolic
criteria predict, and the caller reads them side by side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, InvalidParameterError
from .fields import CoefficientField, ScaleEnvelope, holder_fit, scale_envelope
from .laws import RandomLaw, law_string
from .synthesis import SamplePath, _scale_contribution, randomized_field
from .util import parallel_map, write_csv
from .wavelets import MotherWaveletTable, periodized_grid

# ---------------------------------------------------------------- analysis

def _analysis_level(path_: SamplePath, table: MotherWaveletTable, j: int) -> np.ndarray:
    """All scale-j coefficients of the grid quadrature in one pass.

    With m = q * stride + r the kernel offset (m - k * stride) mod 2^R
    splits into a block shift d = (q - k) mod 2^j and the in-block index r,
    so the sum folds into depth-many row dot products against the kernel
    head (zero past the support, padded to whole blocks).
    """
    size = path_.values.size
    count = 2**j
    stride = size // count
    kernel = periodized_grid(table, j, path_.resolution)
    span = min(size, table.support_length * stride + 1)
    depth = -(-span // stride)
    head = np.zeros(depth * stride)
    head[:span] = kernel[:span]
    fmat = path_.values.reshape(count, stride)
    kmat = head.reshape(depth, stride)
    out = np.zeros(count)
    idx = np.arange(count)
    for d in range(depth):
        out += fmat[(idx + d) % count] @ kmat[d]
    return out * 2.0 ** (j - path_.resolution)


def analysis_field(path_: SamplePath, table: MotherWaveletTable,
                   j_hi: int) -> CoefficientField:
    """Quadrature analysis of a sample path down to scale ``j_hi``.

    The coarse part is the grid mean (the wavelet sums cancel it out
    exactly on dyadic grids).
    """
    if j_hi < 0 or j_hi > path_.resolution - 4:
        raise InvalidParameterError(
            f"analysis to scale {j_hi} needs resolution {j_hi + 4}, "
            f"got {path_.resolution}")
    levels = parallel_map(lambda j: _analysis_level(path_, table, j),
                          list(range(j_hi + 1)))
    return CoefficientField(j_hi, float(np.mean(path_.values)), levels)


def empirical_scale_envelope(path_: SamplePath, table: MotherWaveletTable,
                             j_hi: int) -> ScaleEnvelope:
    """Per-scale sup of the measured coefficients."""
    return scale_envelope(analysis_field(path_, table, j_hi))


# ------------------------------------------------------------- sup profile

@dataclass(frozen=True, eq=False)
class SupGrowthProfile:
    """Observed partial-sum sups at each truncation, globally and per cell.

    ``local_sups[i][q]`` is the sup of |path| over the q-th dyadic cell at
    the profile depth when the series is cut at ``truncations[i]``.  Sups
    are recorded as observed; nothing forces them to grow with the
    truncation, signed series do drop back down.
    """

    truncations: tuple[int, ...]
    global_sups: np.ndarray
    local_sups: np.ndarray
    depth: int
    resolution: int
    law: str
    seed: int | None


def sup_growth(field_: CoefficientField, table: MotherWaveletTable,
               law: RandomLaw | None, seed: int | None,
               truncations, depth: int) -> SupGrowthProfile:
    """Sup profile of the (optionally randomized) series on the table grid.

    Truncations are deduplicated and walked in ascending order, each scale
    added once, so the snapshot at J equals synthesize(..., J, R) exactly.
    """
    cuts = sorted({int(t) for t in truncations})
    if not cuts:
        raise InvalidParameterError("at least one truncation scale is required")
    if cuts[0] < 0 or cuts[-1] > field_.j_max:
        raise InvalidParameterError(
            f"truncations must lie in 0..{field_.j_max}, got {cuts}")
    if cuts[-1] > table.r_psi - 4:
        raise InvalidParameterError(
            f"truncation {cuts[-1]} needs table resolution {cuts[-1] + 4}, "
            f"got {table.r_psi}")
    if not 0 <= depth <= table.r_psi:
        raise InvalidParameterError(f"cell depth must lie in 0..{table.r_psi}")
    if (law is None) != (seed is None):
        raise InvalidParameterError("law and seed go together")

    src = field_
    if law is not None:
        kept = CoefficientField(cuts[-1], field_.coarse,
                                field_.levels[: cuts[-1] + 1])
        src = randomized_field(kept, law, seed)

    resolution = table.r_psi
    cells = 2**depth
    values = np.full(2**resolution, float(src.coarse))
    global_sups, local_sups = [], []
    done = 0
    for j_trunc in cuts:
        while done <= j_trunc:
            values += _scale_contribution(src, table, done, resolution)
            done += 1
        magnitudes = np.abs(values)
        global_sups.append(float(magnitudes.max()))
        local_sups.append(magnitudes.reshape(cells, -1).max(axis=1))
    return SupGrowthProfile(
        truncations=tuple(cuts),
        global_sups=np.asarray(global_sups),
        local_sups=np.vstack(local_sups),
        depth=depth,
        resolution=resolution,
        law="deterministic" if law is None else law_string(law),
        seed=None if seed is None else int(seed),
    )


# -------------------------------------------------------------- slope fits

def hmin_estimate(env: ScaleEnvelope, j_lo: int, j_hi: int) -> float:
    """Lower uniform regularity exponent read off the envelope decay.

    Minus the least-squares slope of log2 omega_j against j over
    [j_lo, j_hi]; the span must cover at least four scale steps for the
    slope to mean anything.
    """
    if j_hi - j_lo < 4:
        raise InsufficientDataError("slope fit needs a scale span of at least 4")
    return holder_fit(env, j_lo, j_hi).alpha


# ------------------------------------------------------------ modulus fits

@dataclass(frozen=True)
class PowerLogModulus:
    """theta(h) = h^alpha * |log h|^(1/gamma); gamma None drops the log."""

    alpha: float
    gamma: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha >= 0.0):
            raise InvalidParameterError("modulus exponent must be finite and nonnegative")
        if self.gamma is not None and (self.gamma == 0.0 or not math.isfinite(self.gamma)):
            raise InvalidParameterError("log power 1/gamma needs nonzero finite gamma")

    def value(self, h: float) -> float:
        if not 0.0 < h < 1.0:
            raise InvalidParameterError("modulus arguments live in (0, 1)")
        out = h**self.alpha
        if self.gamma is not None:
            out *= abs(math.log(h)) ** (1.0 / self.gamma)
        return out


@dataclass(frozen=True, eq=False)
class ModulusFit:
    """Sup increments at dyadic lags against a trial modulus."""

    lags_m: tuple[int, ...]
    lags: np.ndarray
    sup_increments: np.ndarray
    theta_values: np.ndarray
    ratios: np.ndarray


def modulus_ratio(path_: SamplePath, theta: PowerLogModulus,
                  m_lo: int, m_hi: int) -> ModulusFit:
    """Sup_x |path(x + h) - path(x)| / theta(h) at lags h = 2^-m.

    The sup runs over every grid point with the lag wrapped around the
    torus, which makes the increments invariant under circular shifts of
    the path.  Lags coarser than 1/4 or at the last grid step carry no
    information, hence the 2 <= m_lo < m_hi <= R - 1 window.
    """
    if not isinstance(theta, PowerLogModulus):
        raise InvalidParameterError("trial modulus must be a PowerLogModulus")
    if not 2 <= m_lo < m_hi <= path_.resolution - 1:
        raise InvalidParameterError(
            f"lag exponents must satisfy 2 <= m_lo < m_hi <= "
            f"{path_.resolution - 1}, got ({m_lo}, {m_hi})")
    ms = tuple(range(m_lo, m_hi + 1))

    def lag_sup(m: int) -> float:
        stride = 2 ** (path_.resolution - m)
        return float(np.max(np.abs(np.roll(path_.values, -stride) - path_.values)))

    sups = np.asarray(parallel_map(lag_sup, list(ms)))
    lags = 2.0 ** -np.asarray(ms, dtype=float)
    thetas = np.asarray([theta.value(h) for h in lags])
    return ModulusFit(lags_m=ms, lags=lags, sup_increments=sups,
                      theta_values=thetas, ratios=sups / thetas)


def regular_modulus_check(theta: PowerLogModulus, smoothness: int,
                          probe_scale: int) -> bool:
    """Decide the two-sided dyadic-sum regularity of a power-log modulus.

    For theta(h) = h^alpha |log h|^k both defining comparisons at integer
    exponent n reduce to strict inequalities on alpha alone: the tail sum
    stays comparable to its first term iff alpha > n, the head sum iff
    alpha < n + 1, and at the integer endpoints the log factor cannot
    rescue a divergent geometric comparison.  Searching n up to the given
    smoothness, the check holds exactly for non-integer alpha below
    smoothness + 1.  Within this family the comparisons hold uniformly in
    the probe scale, so that argument is only validated.
    """
    if not isinstance(theta, PowerLogModulus):
        raise InvalidParameterError("regularity check supports only PowerLogModulus")
    if smoothness < 0:
        raise InvalidParameterError("smoothness order must be nonnegative")
    if probe_scale < 1:
        raise InvalidParameterError("probe scale must be at least 1")
    return any(n < theta.alpha < n + 1 for n in range(smoothness + 1))


# ------------------------------------------------------------------ export

def export_profile_csv(profile: SupGrowthProfile, destination,
                       comment: str | None = None) -> None:
    """Long-format rows (J, global_sup, interval_id, local_sup)."""
    cells = profile.local_sups.shape[1]
    write_csv(destination, [
        ("J", np.repeat(np.asarray(profile.truncations), cells)),
        ("global_sup", np.repeat(profile.global_sups, cells)),
        ("interval_id", np.tile(np.arange(cells), len(profile.truncations))),
        ("local_sup", profile.local_sups.ravel()),
    ], digits=12, comment=comment)


def export_modulus_csv(fit: ModulusFit, destination,
                       comment: str | None = None) -> None:
    write_csv(destination, [
        ("m", np.asarray(fit.lags_m)),
        ("h", fit.lags),
        ("sup_increment", fit.sup_increments),
        ("theta", fit.theta_values),
        ("ratio", fit.ratios),
    ], digits=12, comment=comment)
