"""Sector spectra, leading free energies, crossing and cusp location,
and numeric amplitude extraction.

Free energy per site is f_L = -(1/W) log lambda0 for a real positive
leading eigenvalue and the log-modulus variant -(1/W) log |lambda0|
otherwise, so scans never crash at stray complex pairs off the real
weight manifold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from . import theory
from .connectivity import enumerate_basis
from .errors import SizeGuardError
from .graphs import AnnulusSpec
from .transfer import exact_partition_values, sector_matrix, sector_matrix_mp

__all__ = [
    "DENSE_CAP",
    "TIE_RTOL",
    "SectorSpectrum",
    "sector_spectrum",
    "ScanTable",
    "free_energy_scan",
    "locate_crossing",
    "locate_cusps",
    "AmplitudeFit",
    "extract_amplitudes",
]

DENSE_CAP = 1400
TIE_RTOL = 1e-10


@dataclass
class SectorSpectrum:
    """Eigenvalues of one L-leg sector at fixed weights, sorted by modulus."""

    W: int
    ell: int
    q: complex
    qs: complex
    v: complex
    eigenvalues: np.ndarray
    complete: bool
    dim: int
    iterations: int = 0

    @property
    def L(self):
        return 2 * self.ell

    @property
    def leading(self):
        return self.eigenvalues[0]

    @property
    def leading_is_real_positive(self):
        lam = self.leading
        return abs(lam.imag) <= TIE_RTOL * max(1.0, abs(lam)) and lam.real > 0

    @property
    def free_energy(self):
        lam = self.leading
        if self.leading_is_real_positive:
            return -math.log(lam.real) / self.W
        return -math.log(abs(lam)) / self.W

    @property
    def ties(self):
        out = []
        e = self.eigenvalues
        for i in range(len(e) - 1):
            a, b = abs(e[i]), abs(e[i + 1])
            if a > 0 and (a - b) <= TIE_RTOL * a:
                out.append((i, i + 1))
        return out


def sector_spectrum(spec: AnnulusSpec, ell, q, qs, v=None, *,
                    with_flags=True, dense_cap=DENSE_CAP, k=6,
                    basis=None, leading_only=False) -> SectorSpectrum:
    """Full dense spectrum up to `dense_cap` basis states; iterative
    leading eigenvalues (k of them) above it or when `leading_only`."""
    A, basis = sector_matrix(spec, ell, q, qs, v, with_flags=with_flags,
                             basis=basis)
    dim = A.shape[0]
    use_dense = dim <= (150 if leading_only else dense_cap)
    if use_dense:
        eig = scipy.linalg.eigvals(A) if dim > 1 else np.array([A[0, 0]])
        complete = True
        iterations = 0
    else:
        try:
            eig = scipy.sparse.linalg.eigs(
                A, k=min(k, dim - 2), which="LM", return_eigenvectors=False,
                maxiter=5000,
            )
        except scipy.sparse.linalg.ArpackNoConvergence as exc:
            raise SizeGuardError(
                f"iterative eigensolver failed to converge: {exc}"
            ) from exc
        complete = False
        iterations = 1
    eig = np.asarray(eig, dtype=complex)
    order = np.argsort(-np.abs(eig), kind="stable")
    return SectorSpectrum(spec.W, ell, complex(q), complex(qs),
                          complex(0) if isinstance(v, str) else complex(v if v is not None else spec.v),
                          eig[order], complete, dim, iterations)


def _scan_weights(spec: AnnulusSpec, t: float):
    """(q, v) on the antiferromagnetic critical curve of the lattice."""
    q = theory.beraha(t)
    v = theory.critical_coupling(spec.lattice, 1.0 - 1.0 / t)
    return q, v


@dataclass
class ScanTable:
    """Leading free energies per sector over an r grid at fixed t."""

    t: float
    W: int
    lattice: str
    r: list
    sectors: list  # L values
    f: dict  # L -> list of f_L
    real: dict  # L -> list of bool (leading eigenvalue real positive)


def free_energy_scan(spec: AnnulusSpec, t: float, r_grid, *,
                     sectors=None, with_flags=True) -> ScanTable:
    if t <= 2:
        raise ValueError("need t > 2")
    W = spec.W
    ells = list(range(W + 1)) if sectors is None else [L // 2 for L in sectors]
    q, v = _scan_weights(spec, t)
    bases = {ell: enumerate_basis(W, "sector", ell, with_flags) for ell in ells}
    rmax = t / (t - 1.0)
    f = {2 * ell: [] for ell in ells}
    real = {2 * ell: [] for ell in ells}
    rs = []
    for r in r_grid:
        if not (0 < r < rmax):
            raise ValueError(f"r = {r} outside (0, {rmax})")
        qs = theory.boundary_qs(t, r)
        rs.append(float(r))
        for ell in ells:
            s = sector_spectrum(spec, ell, q, qs, v, with_flags=with_flags,
                                basis=bases[ell], leading_only=True)
            f[2 * ell].append(s.free_energy)
            real[2 * ell].append(s.leading_is_real_positive)
    return ScanTable(float(t), W, spec.lattice, rs, [2 * e for e in ells], f, real)


def locate_crossing(spec: AnnulusSpec, t: float, L: int, r_bracket, *,
                    tol=1e-10, with_flags=True) -> float:
    """Bisect the crossing of f_L and f_{L+2} inside the bracket.

    Requires a sign change of f_L - f_{L+2} across the bracket; the
    bracket endpoints must avoid boundary-weight poles.
    """
    if L % 2 or L < 0:
        raise ValueError("L must be even and >= 0")
    W = spec.W
    ell_a, ell_b = L // 2, L // 2 + 1
    if ell_b > W:
        raise ValueError(f"sector L+2 = {L + 2} exceeds 2W = {2 * W}")
    q, v = _scan_weights(spec, t)
    basis_a = enumerate_basis(W, "sector", ell_a, with_flags)
    basis_b = enumerate_basis(W, "sector", ell_b, with_flags)

    def g(r):
        qs = theory.boundary_qs(t, r)
        fa = sector_spectrum(spec, ell_a, q, qs, v, with_flags=with_flags,
                             basis=basis_a, leading_only=True).free_energy
        fb = sector_spectrum(spec, ell_b, q, qs, v, with_flags=with_flags,
                             basis=basis_b, leading_only=True).free_energy
        return fa - fb

    lo, hi = float(r_bracket[0]), float(r_bracket[1])
    glo, ghi = g(lo), g(hi)
    if glo == 0:
        return lo
    if ghi == 0:
        return hi
    if glo * ghi > 0:
        raise ValueError(f"no sign change of f_{L} - f_{L + 2} in {r_bracket}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0:
            return mid
        if glo * gm < 0:
            hi = mid
        else:
            lo, glo = mid, gm
    return 0.5 * (lo + hi)


def locate_cusps(scan: ScanTable, *, ratio=8.0, floor=1e-9):
    """Per-sector cusp estimates from second differences of f_L(r).

    A cusp is a grid point whose |second difference| exceeds both an
    adaptive threshold (ratio times the median) and an absolute floor,
    and is a local maximum of the second-difference magnitude.
    """
    if len(scan.r) < 5:
        raise ValueError("scan grid too coarse for cusp detection")
    out = {}
    for L in scan.sectors:
        f = scan.f[L]
        d2 = [abs(f[i - 1] - 2 * f[i] + f[i + 1]) for i in range(1, len(f) - 1)]
        med = sorted(d2)[len(d2) // 2]
        thr = max(ratio * med, floor)
        hits = []
        for i in range(1, len(d2) - 1):
            if d2[i] > thr and d2[i] >= d2[i - 1] and d2[i] >= d2[i + 1]:
                hits.append(scan.r[i + 1])
        out[L] = hits
    return out


@dataclass
class AmplitudeFit:
    """Amplitudes fitted from partition values against all sector spectra."""

    eigenvalues: list  # mp complex, deduped
    amplitudes: list  # mp complex
    sectors_of: list  # set of L per eigenvalue
    residual: float  # max relative error over the fit equations
    holdout_error: float  # max relative error at held-out N
    dominant: dict  # L -> (eigenvalue, amplitude)
    dps: int
    n_range: tuple


def extract_amplitudes(spec: AnnulusSpec, q, qs, v=None, *, n0=2,
                       extra_eqs=3, holdout=3, dps=60, max_dps=480,
                       tol_residual=1e-10, with_flags=True) -> AmplitudeFit:
    """Fit P(N) = sum_i a_i lambda_i^N over the union of sector spectra.

    Escalates mpmath precision until the fit residual clears
    `tol_residual`; raises SizeGuardError when the cap is reached.
    Width is capped at 3: the fit needs exact partition values across a
    range of N plus complete spectra of every sector.
    """
    if spec.W > 3:
        raise SizeGuardError("amplitude extraction capped at W <= 3")
    if v is None:
        v = spec.v
    last_exc = None
    while dps <= max_dps:
        try:
            return _extract_at_dps(spec, q, qs, v, n0, extra_eqs, holdout,
                                   dps, tol_residual, with_flags)
        except _PrecisionFailure as exc:
            last_exc = exc
            dps *= 2
    raise SizeGuardError(
        f"amplitude fit residual stuck above {tol_residual}: {last_exc}"
    )


class _PrecisionFailure(Exception):
    pass


def _extract_at_dps(spec, q, qs, v, n0, extra_eqs, holdout, dps,
                    tol_residual, with_flags):
    W = spec.W
    with mpmath.workdps(dps):
        labeled = []  # (eigenvalue, L)
        for ell in range(W + 1):
            A, _basis = sector_matrix_mp(spec, ell, q, qs, v,
                                         with_flags=with_flags, dps=dps)
            if A.rows == 1:
                eigs = [A[0, 0]]
            else:
                eigs = mpmath.eig(A, left=False, right=False)
            labeled.extend((lam, 2 * ell) for lam in eigs)
        maxmod = max(abs(lam) for lam, _ in labeled)
        if maxmod == 0:
            raise SizeGuardError("all sector eigenvalues vanish")
        drop = mpmath.mpf(10) ** (-(dps // 2)) * maxmod
        labeled = [(lam, L) for lam, L in labeled if abs(lam) > drop]
        labeled.sort(key=lambda p: (-abs(p[0]), p[0].real if hasattr(p[0], "real") else 0))

        # dedupe eigenvalues shared between sectors (or repeated in one)
        groups = []
        for lam, L in labeled:
            for g in groups:
                if abs(lam - g["lam"]) <= mpmath.mpf(10) ** (-(dps // 2)) * maxmod:
                    g["sectors"].add(L)
                    break
            else:
                groups.append({"lam": lam, "sectors": {L}})
        lams = [g["lam"] for g in groups]
        m = len(lams)

        n_fit = list(range(n0, n0 + m + extra_eqs))
        n_hold = list(range(n0 + m + extra_eqs, n0 + m + extra_eqs + holdout))
        rational = isinstance(q, (int, Fraction)) and isinstance(qs, (int, Fraction)) \
            and not isinstance(v, str)
        spec_v = AnnulusSpec(spec.lattice, spec.W, spec.N, v)
        if rational:
            zvals = exact_partition_values(spec_v, Fraction(q), Fraction(qs),
                                           n_fit + n_hold)
            zmp = {n: mpmath.mpf(z.numerator) / z.denominator
                   for n, z in zvals.items()}
        else:
            zmp = exact_partition_values(spec_v, q, qs, n_fit + n_hold, dps=dps)

        # row-scaled least squares: divide equation n by maxmod^n
        rows = len(n_fit)
        Amat = mpmath.zeros(rows, m)
        bvec = mpmath.zeros(rows, 1)
        for i, n in enumerate(n_fit):
            sc = maxmod**n
            for jcol, lam in enumerate(lams):
                Amat[i, jcol] = lam**n / sc
            bvec[i, 0] = zmp[n] / sc
        try:
            sol = mpmath.qr_solve(Amat, bvec)[0]
        except (ZeroDivisionError, ValueError) as exc:
            raise _PrecisionFailure(f"solve failed at dps={dps}: {exc}")
        amps = [sol[jcol] for jcol in range(m)]

        def predict(n):
            return mpmath.fsum(
                [a * lam**n for a, lam in zip(amps, lams)], absolute=False
            )

        def relerr(n):
            zn = zmp[n]
            scale = max(abs(zn), maxmod**n * mpmath.mpf(10) ** (-dps))
            return float(abs(predict(n) - zn) / scale) if scale else 0.0

        residual = max(relerr(n) for n in n_fit)
        hold_err = max(relerr(n) for n in n_hold) if n_hold else 0.0
        if residual > tol_residual:
            raise _PrecisionFailure(f"residual {residual} at dps={dps}")

        dominant = {}
        for ell in range(W + 1):
            sector_lams = [(g["lam"], gi) for gi, g in enumerate(groups)
                           if 2 * ell in g["sectors"]]
            if not sector_lams:
                continue
            lam, gi = max(sector_lams, key=lambda p: abs(p[0]))
            dominant[2 * ell] = (lam, amps[gi])

        return AmplitudeFit(
            eigenvalues=lams,
            amplitudes=amps,
            sectors_of=[g["sectors"] for g in groups],
            residual=residual,
            holdout_error=hold_err,
            dominant=dominant,
            dps=dps,
            n_range=(n_fit[0], n_fit[-1]),
        )
