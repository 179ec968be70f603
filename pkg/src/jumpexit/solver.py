"""Time integration of the density equation and steady exit-moment solves.

The default scheme is implicit Euler: ``I - dt * A_fwd`` is an M-matrix
(Metzler off-diagonal signs plus exact weighted column sums), so densities
stay nonnegative and the survival probability is monotone for any step
size. Crank-Nicolson is available for accuracy studies but can undershoot
zero for large steps; it warns when it does. Absorbed mass is accumulated
from the scheme's stage density, which closes the survival + absorbed
budget to solver roundoff rather than O(dt).

Exit-time moments solve the generator recursion ``A m_k = -k m_{k-1}``
with ``m_0 = 1`` and moments pinned to zero on the absorbing cells,
reusing one LU factorization. The coercivity constant is the smallest
eigenvalue of the (symmetrized, width-weighted) negative generator,
computed by shifted inverse iteration.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import ConfigurationError, NumericalError
from .operators import DiscreteOperator

SCHEMES = ("implicit_euler", "crank_nicolson")


@dataclass(eq=False)
class DensityTrajectory:
    """Recorded evolution of the not-yet-exited density.

    ``survival[k]`` is the domain mass at ``times[k]``; ``absorbed_cdf[k]``
    the cumulative flux into the absorbing cells. Densities are stored at
    ``density_times`` (every ``store_every``-th step).
    """

    times: np.ndarray
    survival: np.ndarray
    absorbed_cdf: np.ndarray
    density_times: np.ndarray
    densities: np.ndarray

    def survival_at(self, t: float) -> float:
        k = int(round(t / (self.times[1] - self.times[0]))) if self.times.size > 1 else 0
        if not (0 <= k < self.times.size) or abs(self.times[k] - t) > 1e-9 * max(1.0, t):
            raise ValueError(f"time {t} is not on the recorded step grid")
        return float(self.survival[k])


@dataclass(eq=False)
class ExitMoments:
    """k-th exit-time moment field on the operator's cells (zero on the
    absorbing set)."""

    order: int
    values: np.ndarray
    centers: np.ndarray
    interior: np.ndarray

    @property
    def interior_values(self) -> np.ndarray:
        return self.values[self.interior]


@dataclass(frozen=True)
class SigmaEstimate:
    value: float
    residual: float
    iterations: int
    converged: bool
    mode: np.ndarray


def uniform_density(op: DiscreteOperator) -> np.ndarray:
    """Probability density uniform over the domain cells."""
    u = np.zeros(op.n_cells)
    mass = float(op.widths[op.interior].sum())
    u[op.interior] = 1.0 / mass
    return u


def point_mass(op: DiscreteOperator, x: float) -> np.ndarray:
    """Single-cell density of unit mass at the domain cell nearest ``x``."""
    i = op.interior[np.argmin(np.abs(op.centers[op.interior] - x))]
    u = np.zeros(op.n_cells)
    u[i] = 1.0 / op.widths[i]
    return u


def _validate_u0(op: DiscreteOperator, u0: np.ndarray) -> np.ndarray:
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (op.n_cells,):
        raise ConfigurationError(f"u0 must have one entry per cell ({op.n_cells})")
    if np.any(u0 < 0):
        raise ConfigurationError("u0 must be nonnegative")
    off = np.delete(np.arange(op.n_cells), op.interior)
    if np.any(u0[off] != 0):
        raise ConfigurationError("u0 must be supported on the domain cells")
    mass = float(np.sum(u0 * op.widths))
    if abs(mass - 1.0) > 1e-8:
        raise ConfigurationError(f"u0 must integrate to 1, got {mass}")
    return u0


def evolve(op: DiscreteOperator, u0: np.ndarray, dt: float, t_end: float,
           scheme: str = "implicit_euler", store_every: int = 1) -> DensityTrajectory:
    """Advance the density under the forward operator with the absorbing
    cells pinned to zero, recording survival and absorbed flux per step."""
    if scheme not in SCHEMES:
        raise ConfigurationError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    if dt <= 0 or t_end <= 0:
        raise ConfigurationError("dt and t_end must be positive")
    u = _validate_u0(op, u0).copy()

    n = op.n_cells
    n_steps = max(1, int(round(t_end / dt)))
    times = np.arange(n_steps + 1) * dt

    # zero the constraint rows so the stepping matrix gets exact identity
    # rows (the assembled matrices carry identity rows for steady solves)
    a = op.a_star.tolil()
    for i in op.absorbing:
        a.rows[i] = []
        a.data[i] = []
    a = a.tocsr()

    eye = sp.identity(n, format="csr")
    if scheme == "implicit_euler":
        system = (eye - dt * a).tocsc()
        rhs_mat = None
    else:
        system = (eye - 0.5 * dt * a).tocsc()
        rhs_mat = (eye + 0.5 * dt * a).tocsr()
    try:
        lu = splu(system)
    except RuntimeError as exc:
        raise NumericalError(f"time-step factorization failed: {exc}") from exc

    w_int = op.widths[op.interior]
    w_abs = op.widths[op.absorbing]
    survival = np.empty(n_steps + 1)
    absorbed = np.empty(n_steps + 1)
    survival[0] = float(np.sum(u[op.interior] * w_int))
    absorbed[0] = 0.0

    rec_idx = list(range(0, n_steps + 1, max(1, store_every)))
    if rec_idx[-1] != n_steps:
        rec_idx.append(n_steps)
    densities = np.empty((len(rec_idx), n))
    densities[0] = u
    rec_pos = 1

    warned_negative = False
    f_acc = 0.0
    for k in range(1, n_steps + 1):
        rhs = u if rhs_mat is None else rhs_mat @ u
        u_new = lu.solve(rhs)
        u_new[op.absorbing] = 0.0
        if scheme == "crank_nicolson" and not warned_negative:
            floor = u_new.min()
            if floor < -1e-12 * max(u_new.max(), 1.0):
                warnings.warn(
                    f"crank_nicolson produced negative densities (min {floor:.3e}); "
                    "reduce dt or use implicit_euler", RuntimeWarning)
                warned_negative = True
        stage = u_new if scheme == "implicit_euler" else 0.5 * (u + u_new)
        if w_abs.size:
            f_acc += dt * float(np.sum((op.flux_to_d @ stage) * w_abs))
        u = u_new
        survival[k] = float(np.sum(u[op.interior] * w_int))
        absorbed[k] = f_acc
        if rec_pos < len(rec_idx) and k == rec_idx[rec_pos]:
            densities[rec_pos] = u
            rec_pos += 1

    return DensityTrajectory(times=times, survival=survival, absorbed_cdf=absorbed,
                             density_times=times[np.array(rec_idx)], densities=densities)


def exit_moments(op: DiscreteOperator, k_max: int) -> list[ExitMoments]:
    """Exit-time moments m_1 .. m_k by the generator recursion, one LU."""
    if op.absorbing.size == 0:
        raise ConfigurationError(
            "exit moments need a nonempty absorbing set; a purely confined "
            "process never exits (the generator is singular on constants)"
        )
    if k_max < 1:
        raise ConfigurationError("k_max must be at least 1")
    lu = op.generator_solver()
    n = op.n_cells
    prev = np.ones(n)
    prev[op.absorbing] = 0.0  # m_0 on the reachable set, pinned on absorbing
    out = []
    for k in range(1, k_max + 1):
        rhs = -k * prev
        rhs[op.absorbing] = 0.0
        m = lu.solve(rhs)
        m[op.absorbing] = 0.0
        if np.min(m[op.interior]) < -1e-10 * max(1.0, float(np.max(np.abs(m)))):
            raise NumericalError(
                f"moment {k} came out negative (min {np.min(m[op.interior]):.3e}); "
                "the discrete system is not an absorbed-process generator"
            )
        out.append(ExitMoments(order=k, values=m, centers=op.centers, interior=op.interior))
        prev = m
    return out


def mean_exit_time(op: DiscreteOperator) -> ExitMoments:
    """Mean exit time field: generator solve with unit source, zero on the
    absorbing cells."""
    return exit_moments(op, 1)[0]


def coercivity_sigma(op: DiscreteOperator, grid=None, shift: float | None = None,
                     tol: float = 1e-13, max_iter: int = 500) -> SigmaEstimate:
    """Smallest eigenvalue of the negative generator on the domain block.

    Works in the width-weighted inner product: the matrix is symmetrized as
    ``(C + C^T)/2`` with ``C = W^{1/2} (-A) W^{-1/2}`` and the bottom of its
    spectrum found by shifted inverse iteration. Positive when the whole
    collar absorbs; zero (constants) when nothing does.
    """
    idx = op.interior
    m = -op.a_gen.toarray()[np.ix_(idx, idx)]
    sw = np.sqrt(op.widths[idx])
    c = (sw[:, np.newaxis] * m) / sw[np.newaxis, :]
    b = 0.5 * (c + c.T)
    norm_b = float(np.max(np.abs(b))) or 1.0
    if shift is None:
        shift = -1e-10 * norm_b  # keeps the shifted matrix SPD when 0 is an eigenvalue
    try:
        lu, piv = scipy.linalg.lu_factor(b - shift * np.eye(b.shape[0]))
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalError(f"coercivity shift solve failed: {exc}") from exc
    x = np.ones(b.shape[0]) / np.sqrt(b.shape[0])
    rho_old = np.inf
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        y = scipy.linalg.lu_solve((lu, piv), x)
        x = y / np.linalg.norm(y)
        rho = float(x @ (b @ x))
        if abs(rho - rho_old) <= tol * norm_b:
            converged = True
            break
        rho_old = rho
    residual = float(np.linalg.norm(b @ x - rho * x))
    if not converged:
        raise NumericalError(
            f"coercivity iteration did not converge in {max_iter} steps "
            f"(residual {residual:.3e})"
        )
    mode = x / sw
    mode /= np.linalg.norm(mode)
    return SigmaEstimate(value=rho, residual=residual, iterations=iterations,
                         converged=converged, mode=mode)
