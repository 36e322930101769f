"""Coefficient fields on the torus, scale envelopes, and envelope criteria.

A field stores dense per-scale wavelet coefficients c_{j,k} (2^j of them at
scale j) plus the coarse constant term.  The envelope omega_j = max_k
|c_{j,k}| is the central statistic; criteria on envelopes (bounded,
vanishing, summable, sqrt(j)-weighted, gamma-weighted, log-log-weighted)
are decided exactly when a symbolic rate is attached and reported as
undecidable otherwise: convergence of a series is not finitely observable,
so numeric-only envelopes never get a holds/fails verdict.

Step-function coefficients are computed by quadrature in the rescaled
variable u = 2^j x - k on the wavelet's own table grid, which makes the
quadrature error uniform in j (the integrand never sharpens as j grows).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, InvalidParameterError
from .wavelets import MotherWaveletTable

CRITERION_KINDS = ("linfty", "c0", "l1", "sqrtj", "gamma", "loglog")

# extra (power, log-power, loglog-power) the weight multiplies onto a rate
_WEIGHT_SHIFT = {
    "l1": (0.0, 0.0, 0.0),
    "sqrtj": (0.5, 0.0, 0.0),
    "loglog": (0.5, 0.0, -1.0),
}


@dataclass(eq=False)
class CoefficientField:
    """Dense coefficients c_{j,k}, j = 0..j_max, 2^j reals per scale."""

    j_max: int
    coarse: float
    levels: list[np.ndarray] = field(repr=False)

    def __post_init__(self):
        if self.j_max < 0:
            raise InvalidParameterError(f"j_max must be nonnegative, got {self.j_max}")
        if len(self.levels) != self.j_max + 1:
            raise InvalidParameterError(
                f"expected {self.j_max + 1} levels, got {len(self.levels)}"
            )
        self.levels = [np.asarray(lv, dtype=float) for lv in self.levels]
        for j, lv in enumerate(self.levels):
            if lv.shape != (2**j,):
                raise InvalidParameterError(f"level {j} must have {2**j} entries, has {lv.shape}")
            if not np.all(np.isfinite(lv)):
                raise InvalidParameterError(f"level {j} contains non-finite entries")
        if not math.isfinite(self.coarse):
            raise InvalidParameterError("coarse term must be finite")


def zero_field(j_max: int, coarse: float = 0.0) -> CoefficientField:
    return CoefficientField(j_max, coarse, [np.zeros(2**j) for j in range(j_max + 1)])


def uniform_decay_field(alpha: float, j_max: int) -> CoefficientField:
    """c_{j,k} = 2^{-alpha j} at every position: the constant-envelope
    regularity model."""
    f = zero_field(j_max)
    for j in range(j_max + 1):
        f.levels[j][:] = 2.0 ** (-alpha * j)
    return f


@dataclass(frozen=True)
class PowerLogRate:
    """omega_j = 2^{-s j} * j^a * (log j)^b * (log log j)^c.

    support: "all" scales (where the factors are defined), "geometric"
    (only j_n = ratio^n, zero elsewhere), or "finite" (an explicit scale
    list, zero elsewhere).
    """

    s: float
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    support: str = "all"
    ratio: int | None = None
    scales: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.support not in ("all", "geometric", "finite"):
            raise InvalidParameterError(f"unknown rate support {self.support!r}")
        if self.support == "geometric" and (self.ratio is None or self.ratio < 2):
            raise InvalidParameterError("geometric support needs an integer ratio >= 2")
        if self.support == "finite" and not self.scales:
            raise InvalidParameterError("finite support needs a scale list")

    @property
    def first_scale(self) -> int:
        """Smallest j where every factor is defined and positive."""
        if self.c != 0.0:
            return 3  # log log j > 0 needs j >= 3
        if self.b != 0.0:
            return 2
        return 1

    def value(self, j: int) -> float:
        if j < self.first_scale:
            return 0.0
        out = 2.0 ** (-self.s * j) * float(j) ** self.a
        if self.b != 0.0:
            out *= math.log(j) ** self.b
        if self.c != 0.0:
            out *= math.log(math.log(j)) ** self.c
        return out

    def supported_scales(self, j_max: int) -> list[int]:
        if self.support == "all":
            return list(range(self.first_scale, j_max + 1))
        if self.support == "geometric":
            out, jn = [], self.ratio
            while jn <= j_max:
                if jn >= self.first_scale:
                    out.append(jn)
                jn *= self.ratio
            return out
        return [j for j in self.scales if j <= j_max]


@dataclass(frozen=True, eq=False)
class ScaleEnvelope:
    """omega_0..omega_{j_max} with an optional symbolic rate."""

    values: np.ndarray
    rate: PowerLogRate | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size == 0:
            raise InvalidParameterError("envelope needs a one-dimensional value array")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise InvalidParameterError("envelope values must be finite and nonnegative")
        if self.rate is not None:
            for j in self.rate.supported_scales(v.size - 1):
                if abs(v[j] - self.rate.value(j)) > 1e-12 * max(1.0, abs(v[j])):
                    raise InvalidParameterError(
                        f"envelope value at j={j} does not match the declared rate"
                    )

    @property
    def j_max(self) -> int:
        return self.values.size - 1


def envelope_from_rate(rate: PowerLogRate, j_max: int) -> ScaleEnvelope:
    values = np.zeros(j_max + 1)
    for j in rate.supported_scales(j_max):
        values[j] = rate.value(j)
    return ScaleEnvelope(values=values, rate=rate)


def scale_envelope(field_: CoefficientField) -> ScaleEnvelope:
    values = np.array([np.max(np.abs(lv)) if lv.size else 0.0 for lv in field_.levels])
    return ScaleEnvelope(values=values, rate=None)


# ---------------------------------------------------------------- criteria

@dataclass(frozen=True, eq=False)
class CriterionDecision:
    kind: str
    verdict: str  # holds | fails | undecidable-numeric
    evidence: np.ndarray
    gamma: float | None = None


def _lex_negative(a: float, b: float, c: float) -> bool:
    """(a, b, c) < (0, 0, 0) lexicographically: the power-log product -> 0."""
    if a != 0.0:
        return a < 0.0
    if b != 0.0:
        return b < 0.0
    return c < 0.0


def _full_series_converges(a: float, b: float, c: float) -> bool:
    """sum over all j of j^a (log j)^b (log log j)^c, standard rules."""
    if a != -1.0:
        return a < -1.0
    if b != -1.0:
        return b < -1.0
    return c < -1.0


def _geometric_series_converges(a: float, b: float, c: float) -> bool:
    """Same sum restricted to j_n = q^n: terms ~ q^{a n} n^b (log n)^c."""
    if a != 0.0:
        return a < 0.0
    if b != -1.0:
        return b < -1.0
    return c < -1.0


def _weight_values(kind: str, gamma: float | None, j_max: int) -> np.ndarray:
    j = np.arange(j_max + 1, dtype=float)
    if kind == "l1":
        return np.ones(j_max + 1)
    if kind == "sqrtj":
        return np.sqrt(j)
    if kind == "gamma":
        with np.errstate(divide="ignore"):
            return np.where(j > 0, j ** (1.0 / gamma), 0.0)
    # loglog weight sqrt(j)/log(log(j)) is defined (and positive) from j = 3
    w = np.zeros(j_max + 1)
    w[3:] = np.sqrt(j[3:]) / np.log(np.log(j[3:]))
    return w


def check_criterion(env: ScaleEnvelope, kind: str, gamma: float | None = None) -> CriterionDecision:
    if kind not in CRITERION_KINDS:
        raise InvalidParameterError(f"unknown criterion {kind!r}; expected one of {CRITERION_KINDS}")
    if kind == "gamma":
        if gamma is None or not 0.0 < gamma <= 2.0:
            raise InvalidParameterError("gamma criterion needs gamma in (0, 2]")
    elif gamma is not None:
        raise InvalidParameterError(f"criterion {kind!r} takes no gamma")

    if kind in ("linfty", "c0"):
        evidence = np.maximum.accumulate(env.values)
    else:
        evidence = np.cumsum(_weight_values(kind, gamma, env.j_max) * env.values)

    rate = env.rate
    if rate is None:
        return CriterionDecision(kind, "undecidable-numeric", evidence, gamma)

    if kind in ("linfty", "c0"):
        if rate.support == "finite":
            verdict = "holds"
        elif rate.s != 0.0:
            verdict = "holds" if rate.s > 0.0 else "fails"
        else:
            vanishes = _lex_negative(rate.a, rate.b, rate.c)
            constant = rate.a == rate.b == rate.c == 0.0
            if kind == "linfty":
                verdict = "holds" if (vanishes or constant) else "fails"
            else:
                verdict = "holds" if vanishes else "fails"
        return CriterionDecision(kind, verdict, evidence, gamma)

    if rate.support == "finite":
        return CriterionDecision(kind, "holds", evidence, gamma)
    if rate.s != 0.0:
        verdict = "holds" if rate.s > 0.0 else "fails"
        return CriterionDecision(kind, verdict, evidence, gamma)
    da, db, dc = _WEIGHT_SHIFT[kind] if kind != "gamma" else (1.0 / gamma, 0.0, 0.0)
    a, b, c = rate.a + da, rate.b + db, rate.c + dc
    if rate.support == "all":
        converges = _full_series_converges(a, b, c)
    else:
        converges = _geometric_series_converges(a, b, c)
    return CriterionDecision(kind, "holds" if converges else "fails", evidence, gamma)


# -------------------------------------------------------------- Hoelder fit

@dataclass(frozen=True)
class HolderFit:
    alpha: float
    C: float
    scales: tuple[int, ...]


def holder_fit(env: ScaleEnvelope, j_lo: int = 4, j_hi: int | None = None) -> HolderFit:
    """Fit log2 omega_j = log2 C - alpha j over the largest block of
    non-zero envelope entries in [j_lo, j_hi].

    A "block" is a maximal run of non-zero scales whose consecutive gaps all
    equal the smallest gap present, so an every-other-scale envelope fits on
    its own subsequence instead of being split into singletons.  Ties go to
    the deepest block.
    """
    if j_hi is None:
        j_hi = env.j_max
    if not 0 <= j_lo <= j_hi <= env.j_max:
        raise InvalidParameterError(f"bad fit range [{j_lo}, {j_hi}] for j_max {env.j_max}")
    idx = [j for j in range(j_lo, j_hi + 1) if env.values[j] > 0.0]
    if len(idx) < 4:
        raise InsufficientDataError(
            f"need at least 4 non-zero envelope values in [{j_lo}, {j_hi}], found {len(idx)}"
        )
    gaps = [b - a for a, b in zip(idx, idx[1:])]
    min_gap = min(gaps)
    blocks, current = [], [idx[0]]
    for g, j in zip(gaps, idx[1:]):
        if g == min_gap:
            current.append(j)
        else:
            blocks.append(current)
            current = [j]
    blocks.append(current)
    best = max(blocks, key=lambda blk: (len(blk), blk[-1]))
    if len(best) < 4:
        raise InsufficientDataError(
            f"largest equally-spaced block has {len(best)} points, need 4"
        )
    js = np.asarray(best, dtype=float)
    logs = np.log2(env.values[best])
    slope, intercept = np.polyfit(js, logs, 1)
    return HolderFit(alpha=float(-slope), C=float(2.0**intercept), scales=tuple(best))


# ------------------------------------------------------- step functions

def step_function_coefficients(
    table: MotherWaveletTable, kind: str, j_max: int
) -> CoefficientField:
    """Wavelet coefficients of the Heaviside step or the centered sawtooth.

    heaviside: H(x) = sign(x) on the real line; only translates whose
    support crosses 0 have nonzero coefficients, and those are independent
    of j exactly (substitute u = 2^j x - k).  The real-line cone is stored
    at torus positions k mod 2^j.

    sawtooth: the centered fractional part x - floor(x) - 1/2 with the
    midpoint value 0 exactly at the jump (the value its Fourier series
    converges to there).
    """
    if kind not in ("heaviside", "sawtooth"):
        raise InvalidParameterError(f"kind must be heaviside or sawtooth, got {kind!r}")
    if j_max > table.r_psi - 6:
        raise InvalidParameterError(
            f"j_max {j_max} too deep for table resolution (needs j_max <= r_psi - 6 = {table.r_psi - 6})"
        )
    length = table.support_length
    step = table.grid_step
    # left-endpoint u grid over the support, matching the table
    u = np.arange(length * 2**table.r_psi) * step
    psi = table.psi[:-1]
    out = zero_field(j_max)

    if kind == "heaviside":
        # T(k) = integral of sign(u + k) Psi(u) du, independent of j; the
        # grid point exactly on the jump contributes sign(0) = 0
        for k in range(-(length - 1), 0):
            value = float(np.sum(np.sign(u + k) * psi) * step)
            for j in range(j_max + 1):
                out.levels[j][k % 2**j] += value
        return out

    # sawtooth: x - 1/2 is linear wherever the support does not cross the
    # wrap, so those coefficients reduce to 2^-j times the first moment of
    # psi; only wrap-crossing positions need the folded integrand
    first_moment = float(np.sum(u * psi) * step)
    for j in range(j_max + 1):
        size = 2**j
        scale = 2.0**-j
        lv = out.levels[j]
        lv[:] = scale * first_moment
        for k in range(max(0, size - length + 1), size):
            x = ((u + k) * scale) % 1.0
            # midpoint value at a grid point exactly on the wrap, matching
            # sign(0) = 0 on the heaviside side
            saw = np.where(x == 0.0, 0.0, x - 0.5)
            lv[k] = float(np.sum(saw * psi) * step)
    return out


# ------------------------------------------------------------ serialization

def field_digest(field_: CoefficientField) -> str:
    """12-hex-digit content id, sensitive to every coefficient.

    Hashes the raw float bytes rather than a JSON rendering so deep fields
    stay cheap to identify; level sizes make the byte stream self-delimiting.
    """
    digest = hashlib.sha256()
    digest.update(np.float64(field_.coarse).tobytes())
    for lv in field_.levels:
        digest.update(lv.tobytes())
    return digest.hexdigest()[:12]


def field_to_json_obj(field_: CoefficientField) -> dict:
    return {
        "J_max": field_.j_max,
        "coarse": field_.coarse,
        "levels": [lv.tolist() for lv in field_.levels],
    }


def field_from_json_obj(obj: dict) -> CoefficientField:
    try:
        return CoefficientField(int(obj["J_max"]), float(obj["coarse"]),
                                [np.asarray(lv, dtype=float) for lv in obj["levels"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidParameterError(f"malformed field document: {exc}")


def save_field_json(field_: CoefficientField, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(field_to_json_obj(field_), fh)
        fh.write("\n")


def load_field_json(path) -> CoefficientField:
    with open(path, encoding="utf-8") as fh:
        return field_from_json_obj(json.load(fh))


def export_envelope_csv(env: ScaleEnvelope, path, comment: str | None = None) -> None:
    from .util import write_csv

    write_csv(path, [("j", np.arange(env.values.size)), ("omega_j", env.values)],
              digits=15, comment=comment)
