"""Hopfield-Bogoliubov diagonalization of the single-cavity-mode light-matter Hamiltonian.

The matrix acts on the operator basis (a, b, a^dag, b^dag), with ``a`` the LC cavity
mode and ``b`` the cyclotron excitation.  Positive eigenvalues are the polariton
frequencies.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from polariton2d.units import TWO_PI

ZERO_NU_C_PROXY = 1e-3  # THz; nu_c = 0 is evaluated here, see ``anticrossing_sweep``


class HopfieldError(ValueError):
    pass


@dataclass(frozen=True)
class HopfieldInput:
    """Angular frequencies in rad/ps.

    ``diamagnetic`` defaults to ``omega_rabi_vac**2 / omega_cyclotron`` (and 0 when
    the cyclotron frequency vanishes).
    """

    omega_cavity: float
    omega_cyclotron: float
    omega_rabi_vac: float
    diamagnetic: float | None = None

    def __post_init__(self):
        for name in ("omega_cavity", "omega_cyclotron", "omega_rabi_vac"):
            if getattr(self, name) < 0:
                raise HopfieldError(f"{name} must be >= 0")
        if self.diamagnetic is None:
            d = self.omega_rabi_vac**2 / self.omega_cyclotron if self.omega_cyclotron > 0 else 0.0
            object.__setattr__(self, "diamagnetic", d)
        elif self.diamagnetic < 0:
            raise HopfieldError("diamagnetic must be >= 0")

    @classmethod
    def from_thz(cls, nu_cavity, nu_cyclotron, rabi_ratio, relative_to="cavity"):
        """Build from frequencies in THz and a coupling ratio Omega_R^V / omega.

        ``relative_to`` picks the reference frequency of the ratio: ``"cavity"`` or
        ``"cyclotron"``.
        """
        ref = nu_cavity if relative_to == "cavity" else nu_cyclotron
        return cls(TWO_PI * nu_cavity, TWO_PI * nu_cyclotron, TWO_PI * rabi_ratio * ref)


@dataclass(frozen=True)
class PolaritonBranches:
    lower: float  # THz
    upper: float  # THz
    hopfield_coefficients: np.ndarray  # shape (2, 4): rows LP, UP; columns (w, x, y, z)


def build_hopfield_matrix(inp: HopfieldInput) -> np.ndarray:
    w, wc, g, d = inp.omega_cavity, inp.omega_cyclotron, inp.omega_rabi_vac, inp.diamagnetic
    return np.array(
        [
            [w + 2 * d, g, 2 * d, g],
            [g, wc, g, 0.0],
            [-2 * d, -g, -w - 2 * d, -g],
            [-g, 0.0, -g, -wc],
        ]
    )


def _bogoliubov_norm(vec):
    return abs(vec[0]) ** 2 + abs(vec[1]) ** 2 - abs(vec[2]) ** 2 - abs(vec[3]) ** 2


def diagonalize(inp: HopfieldInput) -> PolaritonBranches:
    """Return LP/UP frequencies (THz) and Bogoliubov-normalized Hopfield coefficients.

    Coefficients (w, x, y, z) define p = w a + x b + y a^dag + z b^dag with
    [p, H] = omega p, i.e. they are eigenvectors of M transposed.
    """
    m = build_hopfield_matrix(inp)
    try:
        vals, vecs = np.linalg.eig(m.T)
    except np.linalg.LinAlgError as exc:
        raise HopfieldError(f"eigensolver did not converge: {exc}") from exc
    # floor keeps the (possibly defective) zero pair of a collapsed matter mode from tripping the check
    floor = 1e-6 * max(float(np.max(np.abs(vals))), 1e-300)
    for v in vals:
        if abs(v.imag) > 1e-9 * max(abs(v), floor):
            raise HopfieldError(f"complex eigenvalue {v!r}: unphysical parameter set")
    vals = vals.real

    branches = []
    for k in np.argsort(-vals)[:2]:
        vec = vecs[:, k]
        norm = _bogoliubov_norm(vec)
        if norm > 1e-14:
            vec = vec / math.sqrt(norm)
        branches.append((max(vals[k], 0.0), vec))
    # ascending; exact ties ordered by matter weight |x|^2, largest first
    branches.sort(key=lambda item: (item[0], -abs(item[1][1]) ** 2))
    return PolaritonBranches(
        lower=branches[0][0] / TWO_PI,
        upper=branches[1][0] / TWO_PI,
        hopfield_coefficients=np.array([b[1] for b in branches]),
    )


def anticrossing_sweep(template: HopfieldInput, nu_c_grid, *, scale_coupling=True):
    """Evaluate LP1/UP1 along a cyclotron-frequency grid (THz).

    With ``scale_coupling`` (default) the vacuum Rabi frequency of ``template`` is taken
    as the value at the template's cyclotron frequency and scaled as sqrt(nu_c), which
    keeps the diamagnetic term constant along the sweep, as for a Landau-quantized
    electron gas of fixed density.  nu_c = 0 is evaluated at ``ZERO_NU_C_PROXY``.

    Returns a list of ``(nu_c, lower, upper)`` tuples.
    """
    grid = np.asarray(nu_c_grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise HopfieldError("nu_c grid must be a non-empty 1-D sequence")
    if np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise HopfieldError("nu_c grid must be strictly increasing and >= 0")
    rows = []
    for nu_c in grid:
        nu_eval = nu_c if nu_c > 0 else ZERO_NU_C_PROXY
        wc = TWO_PI * nu_eval
        if scale_coupling and template.omega_cyclotron > 0:
            g = template.omega_rabi_vac * math.sqrt(wc / template.omega_cyclotron)
            inp = HopfieldInput(template.omega_cavity, wc, g, template.diamagnetic)
        else:
            inp = HopfieldInput(template.omega_cavity, wc, template.omega_rabi_vac)
        try:
            br = diagonalize(inp)
        except HopfieldError as exc:
            raise HopfieldError(f"nu_c = {nu_c} THz: {exc}") from exc
        lower = 0.0 if nu_c == 0 else br.lower
        rows.append((float(nu_c), lower, br.upper))
    return rows


def sweep_to_csv(rows, stream=None):
    """Write sweep rows as ``nu_c_THz,lp1_THz,up1_THz`` with 9 significant digits."""
    out = stream if stream is not None else io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["nu_c_THz", "lp1_THz", "up1_THz"])
    for row in rows:
        writer.writerow([f"{v:.9g}" for v in row])
    if stream is None:
        return out.getvalue()
    return None
