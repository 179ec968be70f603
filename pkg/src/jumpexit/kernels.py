"""Finite-range jump-rate kernels: evaluation, integration, and sampling.

A kernel gives the rate density gamma(x, y) for jumps from x to y, zero
whenever |x - y| >= horizon. Three families are provided:

* ``CompoundPoissonUniform`` -- constant density ``rate / (2 * horizon)``
  inside the jump range, so the total jump rate from any point in free
  space equals ``rate``. Finite activity, finite variation.
* ``TruncatedStable`` -- power-law density ``|z|**-(1 + alpha) / m``
  capped at the plateau value ``epsilon**-(1 + alpha) / m`` for
  ``|z| <= epsilon``. The cap makes the otherwise non-integrable density
  simulable as a compound Poisson process; the underlying uncapped family
  has infinite activity, with finite variation exactly when ``alpha < 1``.
* ``TabulatedKernel`` -- values interpolated from a table, either a
  translation-invariant profile over signed displacements or a full
  bivariate (x, y) grid. Integration is trapezoidal on the interpolant and
  activity classification is heuristic.

Rate integrals over interval unions use exact piecewise antiderivatives
(power-law, constant, and linear pieces), and jump destinations are drawn
by inverting the piecewise closed-form CDF -- no rejection loops, so the
cost per jump is deterministic even when the admissible region is tiny.

Kernels are immutable and safe to share across workers; sampling state
lives entirely in the caller-supplied generator.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .geometry import Intervals

FINITE = "finite"
INFINITE = "infinite"


@dataclass(frozen=True)
class ActivityClass:
    """Sample-path fluctuation class of the (unregularized) kernel family.

    ``activity`` counts jumps per unit time (infinite when the rate density
    is non-integrable at zero displacement); ``variation`` is the vertical
    distance traversed by the path. ``heuristic`` flags classifications read
    off numerically from tabulated values rather than from the family.
    """

    activity: str
    variation: str
    heuristic: bool = False


@dataclass(frozen=True)
class KernelDecomposition:
    """Split of a kernel into symmetric (diffusive) and antisymmetric
    (convective) parts; ``gamma_s + gamma_a`` recovers the original and
    ``gamma_s >= |gamma_a|`` pointwise since both jump directions carry
    nonnegative rates."""

    kernel: "JumpKernel"

    def gamma_s(self, x, y):
        return 0.5 * (self.kernel.evaluate(x, y) + self.kernel.evaluate(y, x))

    def gamma_a(self, x, y):
        return 0.5 * (self.kernel.evaluate(x, y) - self.kernel.evaluate(y, x))


# ---------------------------------------------------------------------------
# density pieces: closed-form mass and inverse CDF per piece


@dataclass(frozen=True)
class _ConstPiece:
    lo: float
    hi: float
    value: float

    def mass(self) -> float:
        return self.value * (self.hi - self.lo)

    def invert(self, v: float) -> float:
        return self.lo + v / self.value

    def clip(self, lo: float, hi: float) -> "_ConstPiece":
        return _ConstPiece(lo, hi, self.value)


@dataclass(frozen=True)
class _PowerPiece:
    """Density scale * |y - center|**-(1 + alpha) on one side of center."""

    lo: float
    hi: float
    center: float
    scale: float
    alpha: float

    def mass(self) -> float:
        za = abs(self.lo - self.center)
        zb = abs(self.hi - self.center)
        za, zb = min(za, zb), max(za, zb)
        return self.scale * (za ** -self.alpha - zb ** -self.alpha) / self.alpha

    def invert(self, v: float) -> float:
        a = self.alpha
        if self.lo >= self.center:  # right side: distance grows with y
            za = self.lo - self.center
            z = (za ** -a - v * a / self.scale) ** (-1.0 / a)
            return self.center + z
        # left side: distance shrinks as y sweeps from lo toward center
        z_far = self.center - self.lo
        z = (v * a / self.scale + z_far ** -a) ** (-1.0 / a)
        return self.center - z

    def clip(self, lo: float, hi: float) -> "_PowerPiece":
        return _PowerPiece(lo, hi, self.center, self.scale, self.alpha)


@dataclass(frozen=True)
class _LinearPiece:
    lo: float
    hi: float
    v_lo: float
    v_hi: float

    def _slope(self) -> float:
        return (self.v_hi - self.v_lo) / (self.hi - self.lo)

    def mass(self) -> float:
        return 0.5 * (self.v_lo + self.v_hi) * (self.hi - self.lo)

    def invert(self, v: float) -> float:
        s = self._slope()
        disc = self.v_lo * self.v_lo + 2.0 * s * v
        denom = self.v_lo + np.sqrt(max(disc, 0.0))
        if denom <= 0.0:
            return self.lo
        return self.lo + 2.0 * v / denom

    def value_at(self, y: float) -> float:
        return self.v_lo + self._slope() * (y - self.lo)

    def clip(self, lo: float, hi: float) -> "_LinearPiece":
        return _LinearPiece(lo, hi, self.value_at(lo), self.value_at(hi))


def _clip_pieces(pieces, region: Intervals | None):
    if region is None:
        return [p for p in pieces if p.hi > p.lo]
    out = []
    for p in pieces:
        for rlo, rhi in region.bounds:
            lo, hi = max(p.lo, rlo), min(p.hi, rhi)
            if hi > lo:
                out.append(p.clip(lo, hi))
    return out


class JumpKernel:
    """Shared behavior for all kernel families.

    Subclasses provide ``evaluate`` (vectorized in y), ``_pieces`` (the
    closed-form density pieces of y -> gamma(x, y)), and a classification.
    """

    horizon: float

    @property
    def symmetric(self) -> bool:
        raise NotImplementedError

    def evaluate(self, x, y):
        """Rate density gamma(x, y), vectorized over ``y``."""
        raise NotImplementedError

    def _pieces(self, x: float):
        raise NotImplementedError

    def classify(self) -> ActivityClass:
        raise NotImplementedError

    def scaled(self, c: float) -> "JumpKernel":
        """Kernel with all rates multiplied by ``c > 0``."""
        raise NotImplementedError

    def total_rate(self, x: float, region: Intervals | None = None) -> float:
        """Integral of gamma(x, .) over ``region`` (all space when None)."""
        pieces = _clip_pieces(self._pieces(x), region)
        return float(sum(p.mass() for p in pieces))

    def sample_jump(self, x: float, region: Intervals | None, rng: np.random.Generator) -> float:
        """Draw a destination with density gamma(x, .)/rate restricted to
        ``region``, by exact inversion of the piecewise CDF."""
        pieces = _clip_pieces(self._pieces(x), region)
        masses = [p.mass() for p in pieces]
        total = sum(masses)
        if total <= 0.0:
            raise ConfigurationError(
                f"no jump mass reachable from x={x}; the point is isolated "
                "within the configured region"
            )
        u = rng.random() * total
        for p, m in zip(pieces, masses):
            if u <= m:
                return p.invert(u)
            u -= m
        return pieces[-1].hi  # unreachable up to rounding

    def decompose(self) -> KernelDecomposition:
        return KernelDecomposition(self)

    def quadrature_values(self, x: float, centers: np.ndarray, widths: np.ndarray) -> np.ndarray:
        """Per-cell effective rate densities for collocation rows.

        Default is midpoint evaluation; singular families override near
        their plateau where the midpoint rule would be dominated by the
        kink error.
        """
        return np.asarray(self.evaluate(x, centers), dtype=float)


@dataclass(frozen=True)
class CompoundPoissonUniform(JumpKernel):
    """Uniform jumps over (x - horizon, x + horizon) with total rate ``rate``."""

    rate: float
    horizon: float

    def __post_init__(self):
        if self.rate <= 0 or self.horizon <= 0:
            raise ConfigurationError("rate and horizon must be positive")

    @property
    def symmetric(self) -> bool:
        return True

    @property
    def density(self) -> float:
        return self.rate / (2.0 * self.horizon)

    def evaluate(self, x, y):
        z = np.abs(np.asarray(y, dtype=float) - x)
        return np.where(z < self.horizon, self.density, 0.0)

    def _pieces(self, x: float):
        return [_ConstPiece(x - self.horizon, x + self.horizon, self.density)]

    def classify(self) -> ActivityClass:
        return ActivityClass(FINITE, FINITE)

    def scaled(self, c: float) -> "CompoundPoissonUniform":
        return CompoundPoissonUniform(rate=self.rate * c, horizon=self.horizon)

    def unregularized_tail_mass(self, delta: float) -> float:
        """Rate mass at displacements delta < |z| < horizon (bounded family:
        converges to ``rate`` as delta -> 0)."""
        return 2.0 * self.density * max(self.horizon - delta, 0.0)


@dataclass(frozen=True)
class TruncatedStable(JumpKernel):
    """Plateau-regularized truncated power-law kernel.

    Density ``|z|**-(1 + alpha) / m`` for ``epsilon < |z| < horizon``,
    frozen at the plateau value for ``|z| <= epsilon`` (plateau taken on
    the closed set), zero at or beyond the horizon.
    """

    alpha: float
    m: float
    horizon: float
    epsilon: float = 1e-3

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ConfigurationError(f"alpha must lie in (0, 2), got {self.alpha}")
        if self.m <= 0:
            raise ConfigurationError("m must be positive")
        if self.epsilon <= 0:
            raise ConfigurationError(
                "epsilon must be positive: the unregularized power-law kernel has "
                "divergent total rate and cannot be integrated or sampled"
            )
        if self.epsilon >= self.horizon:
            raise ConfigurationError("epsilon must be smaller than the horizon")

    @property
    def symmetric(self) -> bool:
        return True

    @property
    def plateau(self) -> float:
        return self.epsilon ** -(1.0 + self.alpha) / self.m

    def evaluate(self, x, y):
        z = np.abs(np.asarray(y, dtype=float) - x)
        power = np.maximum(z, self.epsilon) ** -(1.0 + self.alpha) / self.m
        vals = np.where(z <= self.epsilon, self.plateau, power)
        return np.where(z < self.horizon, vals, 0.0)

    def one_sided_cumulative(self, z):
        """Integral of the density over displacements (0, z), vectorized."""
        z = np.clip(np.asarray(z, dtype=float), 0.0, self.horizon)
        plateau_part = self.plateau * np.minimum(z, self.epsilon)
        zc = np.clip(z, self.epsilon, self.horizon)
        tail = (self.epsilon ** -self.alpha - zc ** -self.alpha) / (self.m * self.alpha)
        return plateau_part + tail

    def _pieces(self, x: float):
        lam, eps = self.horizon, self.epsilon
        scale = 1.0 / self.m
        return [
            _PowerPiece(x - lam, x - eps, x, scale, self.alpha),
            _ConstPiece(x - eps, x + eps, self.plateau),
            _PowerPiece(x + eps, x + lam, x, scale, self.alpha),
        ]

    def classify(self) -> ActivityClass:
        variation = FINITE if self.alpha < 1.0 else INFINITE
        return ActivityClass(INFINITE, variation)

    def scaled(self, c: float) -> "TruncatedStable":
        return TruncatedStable(alpha=self.alpha, m=self.m / c,
                               horizon=self.horizon, epsilon=self.epsilon)

    def unregularized_tail_mass(self, delta: float) -> float:
        """Mass of the *uncapped* power law on delta < |z| < horizon; grows
        without bound as delta -> 0 (the infinite-activity signature)."""
        delta = min(max(delta, 0.0), self.horizon)
        if delta == 0.0:
            return np.inf
        return 2.0 * (delta ** -self.alpha - self.horizon ** -self.alpha) / (self.m * self.alpha)

    def quadrature_values(self, x, centers, widths):
        vals = np.asarray(self.evaluate(x, centers), dtype=float)
        d = np.abs(np.asarray(centers, dtype=float) - x)
        near = d <= self.epsilon + 1.5 * widths
        if np.any(near):
            # exact cell averages where the cell touches the plateau or its
            # kink; distances keep the rule symmetric between cell pairs
            za = d[near] - 0.5 * widths[near]
            zb = d[near] + 0.5 * widths[near]
            mass = self.one_sided_cumulative(zb) - self.one_sided_cumulative(za)
            vals[near] = mass / widths[near]
        return vals


def _interp_zero_outside(z, zs, vs):
    out = np.interp(z, zs, vs, left=0.0, right=0.0)
    return out


@dataclass(frozen=True, eq=False)
class TabulatedKernel(JumpKernel):
    """Kernel interpolated from tabulated values.

    Either translation-invariant (``displacements``/``values`` over signed
    displacement, linear interpolation, zero outside the table) or bivariate
    (``x_nodes`` x ``y_nodes`` grid of values, bilinear). Values beyond the
    horizon are clipped to zero regardless of the table.
    """

    horizon: float
    displacements: np.ndarray | None = None
    values: np.ndarray | None = None
    x_nodes: np.ndarray | None = None
    y_nodes: np.ndarray | None = None
    grid_values: np.ndarray | None = None

    def __post_init__(self):
        if self.horizon <= 0:
            raise ConfigurationError("horizon must be positive")
        if self.displacements is not None:
            z = np.asarray(self.displacements, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if z.ndim != 1 or z.size < 2 or v.shape != z.shape:
                raise ConfigurationError("displacement table needs matching 1-D arrays")
            if np.any(np.diff(z) <= 0):
                raise ConfigurationError("displacement nodes must be strictly increasing")
            if np.any(v < 0):
                raise ConfigurationError("tabulated rates must be nonnegative")
            object.__setattr__(self, "displacements", z)
            object.__setattr__(self, "values", v)
        elif self.grid_values is not None:
            xs = np.asarray(self.x_nodes, dtype=float)
            ys = np.asarray(self.y_nodes, dtype=float)
            vv = np.asarray(self.grid_values, dtype=float)
            if vv.shape != (xs.size, ys.size):
                raise ConfigurationError("bivariate table shape must be (n_x, n_y)")
            if np.any(vv < 0):
                raise ConfigurationError("tabulated rates must be nonnegative")
            object.__setattr__(self, "x_nodes", xs)
            object.__setattr__(self, "y_nodes", ys)
            object.__setattr__(self, "grid_values", vv)
        else:
            raise ConfigurationError("tabulated kernel needs a displacement or bivariate table")

    @property
    def translation_invariant(self) -> bool:
        return self.displacements is not None

    @property
    def symmetric(self) -> bool:
        if self.translation_invariant:
            z, v = self.displacements, self.values
            mirrored = _interp_zero_outside(-z, z, v)
            scale = max(float(v.max()), 1e-300)
            return bool(np.max(np.abs(v - mirrored)) <= 1e-12 * scale)
        vv = self.grid_values
        if self.x_nodes.size != self.y_nodes.size or np.any(self.x_nodes != self.y_nodes):
            return False
        scale = max(float(vv.max()), 1e-300)
        return bool(np.max(np.abs(vv - vv.T)) <= 1e-12 * scale)

    def evaluate(self, x, y):
        y = np.asarray(y, dtype=float)
        z = y - x
        if self.translation_invariant:
            vals = _interp_zero_outside(z, self.displacements, self.values)
        else:
            vals = self._bilinear(np.full_like(y, x, dtype=float), y)
        return np.where(np.abs(z) < self.horizon, vals, 0.0)

    def _bilinear(self, x, y):
        xs, ys, vv = self.x_nodes, self.y_nodes, self.grid_values
        x = np.clip(x, xs[0], xs[-1])
        y = np.clip(y, ys[0], ys[-1])
        i = np.clip(np.searchsorted(xs, x) - 1, 0, xs.size - 2)
        j = np.clip(np.searchsorted(ys, y) - 1, 0, ys.size - 2)
        tx = (x - xs[i]) / (xs[i + 1] - xs[i])
        ty = (y - ys[j]) / (ys[j + 1] - ys[j])
        return ((1 - tx) * (1 - ty) * vv[i, j] + tx * (1 - ty) * vv[i + 1, j]
                + (1 - tx) * ty * vv[i, j + 1] + tx * ty * vv[i + 1, j + 1])

    def _pieces(self, x: float):
        lam = self.horizon
        if self.translation_invariant:
            nodes = x + self.displacements
            vals = self.values
        else:
            nodes = self.y_nodes
            vals = self._bilinear(np.full_like(nodes, x, dtype=float), nodes)
        pieces = []
        for k in range(nodes.size - 1):
            pieces.append(_LinearPiece(nodes[k], nodes[k + 1], vals[k], vals[k + 1]))
        return _clip_pieces(pieces, Intervals(((x - lam, x + lam),)))

    def classify(self) -> ActivityClass:
        # integral test at the table's resolution: does the mass outside a
        # shrinking ball keep growing, and does |z| * gamma stay integrable?
        deltas = np.geomspace(self.horizon / 2, self.horizon * 1e-6, 12)
        masses = []
        first_moments = []
        zg = np.linspace(-self.horizon, self.horizon, 4097)
        g = np.asarray(self.evaluate(0.0, zg), dtype=float) if self.translation_invariant else None
        for d in deltas:
            if g is not None:
                mask = np.abs(zg) > d
                masses.append(np.trapezoid(np.where(mask, g, 0.0), zg))
                first_moments.append(np.trapezoid(np.where(mask, np.abs(zg) * g, 0.0), zg))
            else:
                x0 = 0.5 * (self.x_nodes[0] + self.x_nodes[-1])
                region = Intervals.from_pairs([(x0 - self.horizon, x0 - d), (x0 + d, x0 + self.horizon)])
                masses.append(self.total_rate(x0, region))
                first_moments.append(masses[-1] * self.horizon)  # crude bound
        growth = masses[-1] / max(masses[0], 1e-300)
        activity = INFINITE if growth > 10.0 else FINITE
        var_growth = first_moments[-1] / max(first_moments[0], 1e-300)
        variation = INFINITE if var_growth > 10.0 else FINITE
        return ActivityClass(activity, variation, heuristic=True)

    def scaled(self, c: float) -> "TabulatedKernel":
        if self.translation_invariant:
            return TabulatedKernel(horizon=self.horizon, displacements=self.displacements,
                                   values=self.values * c)
        return TabulatedKernel(horizon=self.horizon, x_nodes=self.x_nodes,
                               y_nodes=self.y_nodes, grid_values=self.grid_values * c)


def load_tabulated_csv(path, horizon: float) -> TabulatedKernel:
    """Load a tabulated kernel from CSV.

    Two-column rows ``dx,value`` define a translation-invariant profile;
    three-column rows ``x,y,value`` must fill a complete rectangular grid.
    """
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            rows.append([float(c) for c in row])
    if not rows:
        raise ConfigurationError(f"kernel table {path} is empty")
    ncol = len(rows[0])
    if any(len(r) != ncol for r in rows):
        raise ConfigurationError(f"kernel table {path} has ragged rows")
    if ncol == 2:
        data = np.array(sorted(rows))
        return TabulatedKernel(horizon=horizon, displacements=data[:, 0], values=data[:, 1])
    if ncol == 3:
        data = np.array(rows)
        xs = np.unique(data[:, 0])
        ys = np.unique(data[:, 1])
        if xs.size * ys.size != data.shape[0]:
            raise ConfigurationError(
                f"kernel table {path}: (x, y) triples do not form a complete grid"
            )
        vv = np.full((xs.size, ys.size), np.nan)
        ix = np.searchsorted(xs, data[:, 0])
        iy = np.searchsorted(ys, data[:, 1])
        vv[ix, iy] = data[:, 2]
        if np.any(np.isnan(vv)):
            raise ConfigurationError(f"kernel table {path}: duplicate or missing grid entries")
        return TabulatedKernel(horizon=horizon, x_nodes=xs, y_nodes=ys, grid_values=vv)
    raise ConfigurationError(f"kernel table {path} must have 2 or 3 columns, found {ncol}")
