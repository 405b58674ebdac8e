"""Time integration for the compact and classic schemes.

Both schemes are advanced through the same two-layer matrix form

    A_new u^{n+1} + A_old u^n = tau * (B_old f^n + B_new f^{n+1})

(Dirichlet data injected on the side).  Because the layer difference
A_new - A_old equals 4*B for the compact scheme (and the identity for
the classic one, whose B is I/4), one step reduces to a single banded
apply plus one double-sweep:

    solve  A_new v = B4 (u^n + tau (f^n + f^{n+1})/4),   u^{n+1} = v - u^n,

where B4 = 4B.  This is what keeps the compact step at 8N + O(1)
multiplications against 5N + O(1) for the classic scheme.  Boundary
rows that do not satisfy the layer-difference identity (e.g. the
classic epsilon != 1/2 Neumann closure) are patched into the right-hand
side explicitly, which costs O(1).

Multiplications and divisions are counted as performed; additions are
free by convention.  Forcing evaluation and right-hand-side preparation
are not counted (they are not part of the linear-algebra cost the
efficiency comparison is about).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

from .core import Dirichlet, Grid1D, ProblemSpec, ScalarKind
from .interior import CUT_FULL, assemble_row
from .linalg import SingularMatrixError, Tridiag, solve_tridiag
from .neumann import (
    BoundaryRow,
    ClassicNeumann,
    CompactThreePoint,
    NeumannVariant,
    build_left_row,
    build_right_row,
)
from .theta_fit import fit_boundary_left, fit_boundary_right, fit_interior


class ClassicRhsVariant(Enum):
    POINTWISE = "pointwise"
    THREE_POINT = "threepoint"
    FIVE_POINT = "fivepoint"


@dataclass(frozen=True)
class Compact:
    """Compact scheme descriptor: cut level and Neumann closure variant."""

    cut: int = CUT_FULL
    neumann: NeumannVariant = CompactThreePoint()


@dataclass(frozen=True)
class Classic:
    """Classic implicit (Crank-Nicolson type) scheme descriptor."""

    rhs: ClassicRhsVariant = ClassicRhsVariant.POINTWISE
    neumann: NeumannVariant = ClassicNeumann(0.5)


SchemeDescriptor = Union[Compact, Classic]


@dataclass
class StepReport:
    final_state: np.ndarray
    muls_per_step: int
    steps: int


@dataclass
class _WallFixup:
    """Right-hand-side patch for a wall row outside the fused identity."""

    d: np.ndarray  # alpha_new - alpha_old
    b_new_lit: np.ndarray
    b_old_lit: np.ndarray
    muls: int


@dataclass
class SchemeMatrices:
    """Assembled operators plus everything one step needs.

    a_*/b_* rows 0 and N hold the boundary rows (b in scaled units:
    the literal forcing operator is tau*b).  corner_* are the third
    entries of 3-point wall rows (column 2 and column N-2); the forcing
    side has no corners since beta_2 = 0 in every variant.
    """

    grid: Grid1D
    kind: ScalarKind
    a_new: Tridiag
    a_old: Tridiag
    b_new: Optional[Tridiag]
    b_old: Optional[Tridiag]
    corner_new: tuple
    corner_old: tuple
    dirichlet: Optional[Dirichlet]
    classic_rhs: Optional[ClassicRhsVariant]
    muls_per_step: int = 0
    _b4: Optional[Tridiag] = None
    _solver: Optional[Tridiag] = None
    _k_left: complex = 0.0
    _k_right: complex = 0.0
    _fix_left: Optional[_WallFixup] = None
    _fix_right: Optional[_WallFixup] = None


def _nnz(v: np.ndarray) -> int:
    return int(np.count_nonzero(v))


def _wall_fixup(row: BoundaryRow, force: bool = False) -> Optional[_WallFixup]:
    """None if the row satisfies the fused identity, else an rhs patch.

    Fused means: shared beta across layers, real scaled forcing row, and
    alpha_new - alpha_old = 4*beta/(nu0*tau) entrywise.  All compact
    variants and the epsilon = 1/2 classic closure qualify.  Fused rows
    ride inside the single banded apply of the compact step; the classic
    step has no such apply, so it forces the patch unconditionally (the
    patch algebra is exact for fused rows too).
    """
    d = row.alpha_new - row.alpha_old
    bt = row.beta_new / (row.nu0 * row.tau)
    scale = max(np.abs(d).max(), np.abs(bt).max(), 1.0)
    fused = (
        np.abs(row.beta_new - row.beta_old).max() <= 1e-10 * scale
        and np.abs(d - 4.0 * bt).max() <= 1e-10 * scale
        and np.abs(bt.imag).max() <= 1e-10 * scale
    )
    if fused and not force:
        return None
    bn = row.beta_new_literal
    bo = row.beta_old_literal
    return _WallFixup(d, bn, bo, _nnz(d) + _nnz(bn) + _nnz(bo))


def _mount_boundary(
    mats: SchemeMatrices, left: BoundaryRow, right: BoundaryRow, force_fixup: bool = False
):
    n = mats.grid.n
    a_new, a_old = mats.a_new, mats.a_old
    a_new.diag[0], a_new.upper[0] = left.alpha_new[0], left.alpha_new[1]
    a_old.diag[0], a_old.upper[0] = left.alpha_old[0], left.alpha_old[1]
    a_new.diag[n], a_new.lower[n - 1] = right.alpha_new[0], right.alpha_new[1]
    a_old.diag[n], a_old.lower[n - 1] = right.alpha_old[0], right.alpha_old[1]
    mats.corner_new = (left.alpha_new[2], right.alpha_new[2])
    mats.corner_old = (left.alpha_old[2], right.alpha_old[2])
    for b, attr in ((mats.b_new, "beta_new"), (mats.b_old, "beta_old")):
        if b is None:
            continue
        bl = getattr(left, attr) / (left.nu0 * left.tau)
        br = getattr(right, attr) / (right.nu0 * right.tau)
        b.diag[0], b.upper[0] = bl[0], bl[1]
        b.diag[n], b.lower[n - 1] = br[0], br[1]
    mats._fix_left = _wall_fixup(left, force_fixup)
    mats._fix_right = _wall_fixup(right, force_fixup)
    if mats._fix_left is not None:
        for b in (mats.b_new, mats.b_old):
            if b is not None:
                b.diag[0] = 0.0
                b.upper[0] = 0.0
    if mats._fix_right is not None:
        for b in (mats.b_new, mats.b_old):
            if b is not None:
                b.diag[n] = 0.0
                b.lower[n - 1] = 0.0


def _finalize(mats: SchemeMatrices):
    """Precompute the corner-eliminated solver and the step cost."""
    m = mats.grid.n + 1
    a = mats.a_new
    solver = a.copy()
    cl, cr = mats.corner_new
    corner_muls = 0
    if cl != 0.0:
        if a.upper[1] == 0.0:
            raise SingularMatrixError("cannot eliminate left corner: zero pivot")
        k = cl / a.upper[1]
        solver.diag[0] = a.diag[0] - k * a.lower[0]
        solver.upper[0] = a.upper[0] - k * a.diag[1]
        mats._k_left = k
        corner_muls += 1
    if cr != 0.0:
        if a.lower[m - 3] == 0.0:
            raise SingularMatrixError("cannot eliminate right corner: zero pivot")
        k = cr / a.lower[m - 3]
        solver.diag[m - 1] = a.diag[m - 1] - k * a.upper[m - 2]
        solver.lower[m - 2] = a.lower[m - 2] - k * a.diag[m - 2]
        mats._k_right = k
        corner_muls += 1
    mats._solver = solver
    muls = 5 * m - 4 + corner_muls
    if mats.classic_rhs is None:
        b4 = mats.b_new.copy()
        b4.lower *= 4.0
        b4.diag *= 4.0
        b4.upper *= 4.0
        mats._b4 = b4
        muls += 3 * m - 2
    for fx in (mats._fix_left, mats._fix_right):
        if fx is not None:
            muls += fx.muls
    mats.muls_per_step = muls


def _interior_nu(kind: ScalarKind, theta_j: float, tau: float, h: float) -> complex:
    nu = theta_j * tau / (h * h)
    return kind.kappa * nu if kind is ScalarKind.COMPLEX else nu


def _build_walls(problem: ProblemSpec, grid: Grid1D, variant: NeumannVariant):
    h, tau = grid.h, grid.tau
    kind = problem.kind
    fit_l = fit_boundary_left(problem.theta, h)
    fit_r = fit_boundary_right(problem.theta, h)
    nu0 = _interior_nu(kind, fit_l.theta_center, tau, h)
    nu_n = _interior_nu(kind, fit_r.theta_center, tau, h)
    left = build_left_row(fit_l, nu0, h, tau, variant)
    right = build_right_row(fit_r, nu_n, h, tau, variant)
    return left, right


def assemble_compact(
    problem: ProblemSpec,
    grid: Grid1D,
    cut: int = CUT_FULL,
    neumann_variant: NeumannVariant = CompactThreePoint(),
) -> SchemeMatrices:
    """Assemble the compact scheme operators for one problem and grid."""
    n, h, tau = grid.n, grid.h, grid.tau
    kind = problem.kind
    dtype = kind.dtype
    m = n + 1
    mats = SchemeMatrices(
        grid=grid,
        kind=kind,
        a_new=Tridiag.zeros(m, dtype),
        a_old=Tridiag.zeros(m, dtype),
        b_new=Tridiag.zeros(m, dtype),
        b_old=Tridiag.zeros(m, dtype),
        corner_new=(0.0, 0.0),
        corner_old=(0.0, 0.0),
        dirichlet=problem.boundary if isinstance(problem.boundary, Dirichlet) else None,
        classic_rhs=None,
    )
    for j in range(1, n):
        try:
            fit = fit_interior(problem.theta, float(grid.x[j]), h)
            nu = _interior_nu(kind, fit.theta_center, tau, h)
            row = assemble_row(fit, nu, h, cut)
        except (ValueError, ArithmeticError) as exc:
            raise type(exc)(f"interior row {j}: {exc}") from exc
        mats.a_new.lower[j - 1] = row.b_l1
        mats.a_new.diag[j] = row.a_1
        mats.a_new.upper[j] = row.b_r1
        mats.a_old.lower[j - 1] = row.b_l0
        mats.a_old.diag[j] = row.a_0
        mats.a_old.upper[j] = row.b_r0
        for b, (ql, p, qr) in (
            (mats.b_new, (row.q_l1, row.p_1, row.q_r1)),
            (mats.b_old, (row.q_l0, row.p_0, row.q_r0)),
        ):
            b.lower[j - 1] = ql
            b.diag[j] = p
            b.upper[j] = qr
    if isinstance(problem.boundary, Dirichlet):
        mats.a_new.diag[0] = 1.0
        mats.a_new.diag[n] = 1.0
    else:
        left, right = _build_walls(problem, grid, neumann_variant)
        _mount_boundary(mats, left, right)
    _finalize(mats)
    return mats


def assemble_classic(
    problem: ProblemSpec,
    grid: Grid1D,
    rhs: ClassicRhsVariant = ClassicRhsVariant.POINTWISE,
    neumann_variant: NeumannVariant = ClassicNeumann(0.5),
) -> SchemeMatrices:
    """Assemble the classic implicit scheme (second order).

    Interior row j:  u^{n+1}_j - u^n_j = (tau/2) kappa * D(u^n + u^{n+1})_j
    + tau F_j with D the divided difference of theta-weighted slopes,
    theta sampled at the half nodes.  Stored in the same two-layer form
    as the compact scheme (divided by 2, so A_new - A_old = I).
    """
    n, h, tau = grid.n, grid.h, grid.tau
    kind = problem.kind
    dtype = kind.dtype
    m = n + 1
    five_point = rhs is ClassicRhsVariant.FIVE_POINT
    b_new = None if five_point else Tridiag.zeros(m, dtype)
    b_old = None if five_point else Tridiag.zeros(m, dtype)
    mats = SchemeMatrices(
        grid=grid,
        kind=kind,
        a_new=Tridiag.zeros(m, dtype),
        a_old=Tridiag.zeros(m, dtype),
        b_new=b_new,
        b_old=b_old,
        corner_new=(0.0, 0.0),
        corner_old=(0.0, 0.0),
        dirichlet=problem.boundary if isinstance(problem.boundary, Dirichlet) else None,
        classic_rhs=rhs,
    )
    sig = kind.kappa * tau / (4.0 * h * h)
    for j in range(1, n):
        thm = float(problem.theta(float(grid.x[j]) - 0.5 * h))
        thp = float(problem.theta(float(grid.x[j]) + 0.5 * h))
        if thm <= 0.0 or thp <= 0.0:
            raise ValueError(f"interior row {j}: coefficient must be positive")
        mats.a_new.lower[j - 1] = -sig * thm
        mats.a_new.diag[j] = 0.5 + sig * (thm + thp)
        mats.a_new.upper[j] = -sig * thp
        mats.a_old.lower[j - 1] = -sig * thm
        mats.a_old.diag[j] = -0.5 + sig * (thm + thp)
        mats.a_old.upper[j] = -sig * thp
        if not five_point:
            if rhs is ClassicRhsVariant.POINTWISE:
                weights = (0.0, 0.25, 0.0)
            else:  # three-point average (f_{j-1} + 2 f_j + f_{j+1})/4, halved twice
                weights = (1.0 / 16.0, 2.0 / 16.0, 1.0 / 16.0)
            for b in (b_new, b_old):
                b.lower[j - 1] = weights[0]
                b.diag[j] = weights[1]
                b.upper[j] = weights[2]
    if isinstance(problem.boundary, Dirichlet):
        mats.a_new.diag[0] = 1.0
        mats.a_new.diag[n] = 1.0
    else:
        left, right = _build_walls(problem, grid, neumann_variant)
        _mount_boundary(mats, left, right, force_fixup=True)
    _finalize(mats)
    return mats


def _node_values(f: np.ndarray, m: int) -> np.ndarray:
    """Node samples of a forcing array that may live on the half grid."""
    if f.shape[0] == m:
        return f
    if f.shape[0] == 2 * m - 1:
        return f[::2]
    raise ValueError(f"forcing length {f.shape[0]} matches neither grid nor half grid")


def _classic_average(variant: ClassicRhsVariant, f: np.ndarray, m: int) -> np.ndarray:
    if variant is ClassicRhsVariant.POINTWISE:
        return _node_values(f, m)
    if variant is ClassicRhsVariant.THREE_POINT:
        fn = _node_values(f, m)
        out = fn.copy()
        out[1:-1] = 0.25 * (fn[:-2] + 2.0 * fn[1:-1] + fn[2:])
        return out
    if f.shape[0] != 2 * m - 1:
        raise ValueError("five-point averaging needs forcing on the half grid")
    out = f[::2].copy()
    out[1:-1] = (
        f[:-4:2] + 2.0 * f[1:-3:2] + 2.0 * f[2:-2:2] + 2.0 * f[3:-1:2] + f[4::2]
    ) / 8.0
    return out


def _apply_wall_fixup(rhs, fx: _WallFixup, idx, u, f0n, f1n):
    sl = slice(0, 3) if idx == 0 else slice(-1, -4, -1)
    rhs[idx] = (
        np.dot(fx.d, u[sl]) + np.dot(fx.b_new_lit, f1n[sl]) + np.dot(fx.b_old_lit, f0n[sl])
    )


def _step(mats: SchemeMatrices, u, f_n, f_np1, t_new=None, bc_vals=None):
    m = mats.grid.n + 1
    tau = mats.grid.tau
    muls = 0
    if mats.classic_rhs is None:
        z = u + 0.25 * tau * (f_n + f_np1)
        rhs, am = mats._b4.apply(z)
        muls += am
    else:
        fa = _classic_average(mats.classic_rhs, f_n, m)
        fb = _classic_average(mats.classic_rhs, f_np1, m)
        rhs = u + 0.25 * tau * (fa + fb)
    if mats.dirichlet is not None:
        if bc_vals is None:
            if t_new is None:
                raise ValueError("Dirichlet stepping needs the new time level")
            bc_vals = (mats.dirichlet.left(t_new), mats.dirichlet.right(t_new))
        rhs[0] = u[0] + bc_vals[0]
        rhs[m - 1] = u[m - 1] + bc_vals[1]
    else:
        if mats._fix_left is not None or mats._fix_right is not None:
            f0n = _node_values(f_n, m)
            f1n = _node_values(f_np1, m)
            if mats._fix_left is not None:
                _apply_wall_fixup(rhs, mats._fix_left, 0, u, f0n, f1n)
                muls += mats._fix_left.muls
            if mats._fix_right is not None:
                _apply_wall_fixup(rhs, mats._fix_right, m - 1, u, f0n, f1n)
                muls += mats._fix_right.muls
    if mats._k_left != 0.0:
        rhs[0] -= mats._k_left * rhs[1]
        muls += 1
    if mats._k_right != 0.0:
        rhs[m - 1] -= mats._k_right * rhs[m - 2]
        muls += 1
    v, sm = solve_tridiag(mats._solver, rhs)
    muls += sm
    return v - u, muls


def step(mats: SchemeMatrices, u_n, f_n, f_np1, t_new=None) -> np.ndarray:
    """Advance one time layer; see module docstring for the algebra."""
    out, _ = _step(mats, np.asarray(u_n), np.asarray(f_n), np.asarray(f_np1), t_new)
    return out


def _forcing_grid(mats: SchemeMatrices) -> np.ndarray:
    if mats.classic_rhs is ClassicRhsVariant.FIVE_POINT:
        n = mats.grid.n
        return np.arange(2 * n + 1) * (0.5 * mats.grid.h)
    return mats.grid.x


# Forcing can easily dominate the march when theta is large (stiff tau,
# hundreds of thousands of steps).  The stream below evaluates f(t, x)
# for a block of times in one broadcast call when the callable permits
# it, which amortizes the per-call overhead; closures that choke on
# array times (shape mismatch or an exception) are detected on the
# first block and evaluated one time level at a time instead.
_FORCING_CHUNK = 256


def _forcing_one(problem: ProblemSpec, t: float, xf: np.ndarray, dtype) -> np.ndarray:
    f = np.asarray(problem.forcing(t, xf), dtype=dtype)
    if f.shape != xf.shape:
        f = np.broadcast_to(f, xf.shape).astype(dtype)
    return f


def _forcing_stream(problem: ProblemSpec, times: np.ndarray, xf: np.ndarray, dtype):
    """Yield f(t_k, xf) for every entry of ``times``, in order."""
    nt = times.size
    k = 0
    vector_ok = True
    while k < nt:
        if vector_ok:
            hi = min(k + _FORCING_CHUNK, nt)
            try:
                block = np.asarray(
                    problem.forcing(times[k:hi, None], xf[None, :]), dtype=dtype
                )
                block = np.broadcast_to(block, (hi - k, xf.size))
            except (TypeError, ValueError, IndexError):
                vector_ok = False
                continue
            for i in range(hi - k):
                yield block[i]
            k = hi
        else:
            yield _forcing_one(problem, float(times[k]), xf, dtype)
            k += 1


def _dirichlet_series(bc: Dirichlet, times: np.ndarray, dtype):
    """(left, right) wall data at all times, or None if not vectorizable."""
    out = []
    for g in (bc.left, bc.right):
        try:
            vals = np.asarray(g(times), dtype=dtype)
            vals = np.broadcast_to(vals, times.shape)
        except (TypeError, ValueError, IndexError):
            return None
        out.append(vals)
    return out[0], out[1]


def run(problem: ProblemSpec, grid: Grid1D, scheme: SchemeDescriptor) -> StepReport:
    """March from t = 0 to t_final and report the final state and cost.

    Forcing and Dirichlet wall callables are evaluated in vectorized
    blocks over time when they broadcast numpy-style; anything else
    falls back to pointwise evaluation automatically.
    """
    if isinstance(scheme, Compact):
        mats = assemble_compact(problem, grid, scheme.cut, scheme.neumann)
    elif isinstance(scheme, Classic):
        mats = assemble_classic(problem, grid, scheme.rhs, scheme.neumann)
    else:
        raise TypeError(f"unknown scheme descriptor {scheme!r}")
    xf = _forcing_grid(mats)
    dtype = mats.kind.dtype
    u = np.asarray(problem.initial(grid.x), dtype=dtype).copy()
    times = np.arange(grid.n_steps + 1) * grid.tau
    walls = None
    if mats.dirichlet is not None:
        walls = _dirichlet_series(mats.dirichlet, times[1:], dtype)
    stream = _forcing_stream(problem, times, xf, dtype)
    f_n = next(stream)
    muls_per_step = None
    for n_step in range(grid.n_steps):
        t1 = float(times[n_step + 1])
        f_np1 = next(stream)
        bc = None if walls is None else (walls[0][n_step], walls[1][n_step])
        u, muls = _step(mats, u, f_n, f_np1, t1, bc)
        if muls_per_step is None:
            muls_per_step = muls
            if muls != mats.muls_per_step:
                raise AssertionError(
                    f"counted {muls} muls per step, assembly predicted {mats.muls_per_step}"
                )
        elif muls != muls_per_step:
            raise AssertionError("per-step cost drifted between steps")
        f_n = f_np1
    return StepReport(final_state=u, muls_per_step=muls_per_step, steps=grid.n_steps)


def c_norm_error(state: np.ndarray, reference: np.ndarray) -> float:
    """Maximum nodal deviation (complex modulus for the complex kind)."""
    return float(np.max(np.abs(np.asarray(state) - np.asarray(reference))))


def dense_operators(mats: SchemeMatrices):
    """Dense (A_new, A_old, B_new, B_old) with wall corners filled in.

    B is in scaled units (multiply by tau for the literal forcing
    operator).  Five-point classic right-hand sides have no node-local
    matrix representation and raise.
    """
    if mats.b_new is None:
        raise ValueError("five-point forcing has no nodal matrix form")
    a_new = mats.a_new.dense()
    a_old = mats.a_old.dense()
    cl, cr = mats.corner_new
    a_new[0, 2] = cl
    a_new[-1, -3] = cr
    cl, cr = mats.corner_old
    a_old[0, 2] = cl
    a_old[-1, -3] = cr
    b_new = mats.b_new.dense()
    b_old = mats.b_old.dense()
    if mats._fix_left is not None:
        b_new[0, :3] = mats._fix_left.b_new_lit / mats.grid.tau
        b_old[0, :3] = mats._fix_left.b_old_lit / mats.grid.tau
    if mats._fix_right is not None:
        b_new[-1, -3:] = mats._fix_right.b_new_lit[::-1] / mats.grid.tau
        b_old[-1, -3:] = mats._fix_right.b_old_lit[::-1] / mats.grid.tau
    return a_new, a_old, b_new, b_old
