"""Two-photon polarization states after first-order PMD.

Times are in units of ``1/B_A``; with the default source (``B_A = B_B = 1``)
the DGD values are dimensionless. Two-qubit matrices are written in the PSP
product basis ``|s_A s_B>, |s_A s'_B>, |s'_A s_B>, |s'_A s'_B>``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .linalg import hermitian_eig, is_density, svd_2x2

TWO_PI = 2.0 * math.pi


class QuadratureError(RuntimeError):
    """Raised when the overlap quadrature cannot certify the requested accuracy."""


class NotInStateSet(ValueError):
    """Raised when a matrix does not have the two-level ``|ab>, |a'b'>`` form."""


@dataclass(frozen=True)
class SourceSpec:
    """Pump and filter parameters of the pair source.

    ``bp``, ``ba``, ``bb`` are RMS bandwidths; ``delta_omega`` offsets the two
    filters by ``-/+ delta_omega`` from the pump centre; ``alpha`` is the phase
    of the emitted ``(|hh> + e^{i alpha}|vv>)/sqrt(2)`` state.
    """

    bp: float = 0.1
    ba: float = 1.0
    bb: float = 1.0
    delta_omega: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        for name in ("bp", "ba", "bb", "delta_omega", "alpha"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        for name in ("bp", "ba", "bb"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        object.__setattr__(self, "alpha", self.alpha % TWO_PI)


@dataclass(frozen=True)
class FiberSpec:
    """DGD on each arm; negative values mean advance instead of delay."""

    tau_a: float = 1.0
    tau_b: float = 0.5

    def __post_init__(self):
        if not (math.isfinite(self.tau_a) and math.isfinite(self.tau_b)):
            raise ValueError("DGD values must be finite")


@dataclass(frozen=True)
class AlignmentSpec:
    """Overlap amplitudes between the source basis and the PSP basis.

    Use :meth:`from_angle` for the misalignment model used in the sweeps:
    photon A's basis rotated by ``theta_deg`` so ``eta1 = cos``, ``eta2 = sin``.
    """

    eta1: complex = 1.0
    eta2: complex = 0.0
    theta_deg: float | None = 0.0

    def __post_init__(self):
        e1, e2 = complex(self.eta1), complex(self.eta2)
        object.__setattr__(self, "eta1", e1)
        object.__setattr__(self, "eta2", e2)
        norm = abs(e1) ** 2 + abs(e2) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"|eta1|^2 + |eta2|^2 = {norm!r}, expected 1")

    @classmethod
    def from_angle(cls, theta_deg: float) -> "AlignmentSpec":
        t = math.radians(theta_deg)
        return cls(math.cos(t), math.sin(t), float(theta_deg))

    def phases(self, alpha: float) -> tuple[float, float]:
        """``(alpha_1, alpha_2)`` from ``eta_i = |eta_i| exp(i(alpha - alpha_i)/2)``.

        Undefined phases (``eta_i == 0``) are reported as ``alpha``.
        """
        out = []
        for eta in (self.eta1, self.eta2):
            out.append(alpha if eta == 0 else (alpha - 2.0 * cmath.phase(eta)) % TWO_PI)
        return out[0], out[1]


@dataclass(frozen=True)
class SpectralState:
    """``F |phi1><phi1| + (1-F) |phi2><phi2|`` with
    ``|phi_{1,2}> = (|ab> +/- e^{i theta}|a'b'>)/sqrt(2)``."""

    fidelity_f: float
    theta: float = 0.0
    basis: tuple[str, str] = ("ab", "a'b'")

    def __post_init__(self):
        if not 0.5 - 1e-12 <= self.fidelity_f <= 1.0 + 1e-12:
            raise ValueError(f"fidelity_f must lie in [1/2, 1], got {self.fidelity_f}")
        object.__setattr__(self, "fidelity_f", min(max(float(self.fidelity_f), 0.5), 1.0))
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)


def _exponent(src: SourceSpec, tau_a: float, tau_b: float) -> float:
    ba2, bb2, bp2 = src.ba**2, src.bb**2, src.bp**2
    num = ba2 * bb2 * (tau_a - tau_b) ** 2 + ba2 * bp2 * tau_a**2 + bb2 * bp2 * tau_b**2
    return num / (2.0 * (ba2 + bb2 + bp2))


def overlap_closed(src: SourceSpec, fiber: FiberSpec) -> complex:
    """Temporal overlap ``R(tau_A, tau_B)`` for Gaussian pump and filters."""
    return overlap_at(src, fiber.tau_a, fiber.tau_b)


def overlap_at(src: SourceSpec, tau_a: float, tau_b: float) -> complex:
    mag = math.exp(-_exponent(src, tau_a, tau_b))
    return mag * cmath.exp(-1j * src.delta_omega * (tau_a - tau_b))


def _spectral_log_density(src: SourceSpec, wa, wb):
    # |H_A|^2 |H_B|^2 |E_p(wa + wb)|^2, filters centred at -/+ delta_omega
    d = src.delta_omega
    return -(
        (wa + d) ** 2 / (2.0 * src.ba**2)
        + (wb - d) ** 2 / (2.0 * src.bb**2)
        + (wa + wb) ** 2 / (2.0 * src.bp**2)
    )


def _principal_frame(src: SourceSpec):
    # Hessian of the log spectral density; only used to lay out the grid.
    a, b, c = 1.0 / src.ba**2, 1.0 / src.bb**2, 1.0 / src.bp**2
    hess = np.array([[a + c, c], [c, b + c]])
    lam, vecs = np.linalg.eigh(hess)
    centre = np.array([-src.delta_omega, src.delta_omega])
    return centre, vecs, 1.0 / np.sqrt(lam)


def _trapezoid_overlap(src, tau_a, tau_b, per_sigma, span):
    centre, vecs, sig = _principal_frame(src)
    n = int(math.ceil(span * per_sigma))
    z = np.linspace(-span, span, 2 * n + 1)
    z1, z2 = np.meshgrid(z * sig[0], z * sig[1], indexing="ij")
    wa = centre[0] + vecs[0, 0] * z1 + vecs[0, 1] * z2
    wb = centre[1] + vecs[1, 0] * z1 + vecs[1, 1] * z2
    logw = _spectral_log_density(src, wa, wb)
    weight = np.exp(logw - logw.max())
    phase = np.exp(1j * (tau_a * wa + tau_b * wb))
    # uniform grid, Gaussian tails: plain sums are the trapezoid rule
    return complex(np.sum(weight * phase) / np.sum(weight))


@dataclass(frozen=True)
class QuadratureControl:
    """Grid density (points per standard deviation) and half-width in std units."""

    per_sigma: float = 4.0
    span: float = 10.0
    tol: float = 1e-10


def overlap_quadrature(src: SourceSpec, fiber: FiberSpec,
                       resolution: QuadratureControl = QuadratureControl()) -> complex:
    """Direct 2-D integration of the spectral overlap integral.

    The integral is normalised by its value at zero delay, so ``R(0, 0) = 1``
    exactly. A second pass at 3/4 of the grid density must agree to
    ``resolution.tol``; otherwise :class:`QuadratureError` is raised.
    """
    fine = _trapezoid_overlap(src, fiber.tau_a, fiber.tau_b, resolution.per_sigma, resolution.span)
    coarse = _trapezoid_overlap(src, fiber.tau_a, fiber.tau_b,
                                0.75 * resolution.per_sigma, resolution.span)
    if abs(fine - coarse) > resolution.tol:
        raise QuadratureError(
            f"quadrature not converged at tau=({fiber.tau_a}, {fiber.tau_b}): "
            f"|fine - coarse| = {abs(fine - coarse):.3e} > {resolution.tol:.1e}"
        )
    return fine


def generic_density(src: SourceSpec, fiber: FiberSpec,
                    align: AlignmentSpec = AlignmentSpec()) -> np.ndarray:
    """Polarization density matrix of the pair after both fibers.

    The four PSP components carry amplitudes
    ``(eta1, eta2, -e^{i alpha} eta2*, e^{i alpha} eta1*)/sqrt(2)`` and the
    time delays ``(+-tau_A/2, +-tau_B/2)``; tracing out time leaves each
    coherence weighted by the overlap at the relative delay.
    """
    e1, e2 = align.eta1, align.eta2
    ph = cmath.exp(1j * src.alpha)
    c = np.array([e1, e2, -ph * e2.conjugate(), ph * e1.conjugate()]) / math.sqrt(2.0)
    ta, tb = fiber.tau_a, fiber.tau_b
    r_a = overlap_at(src, ta, 0.0)
    r_b = overlap_at(src, 0.0, tb)
    r_ab = overlap_at(src, ta, tb)
    r_amb = overlap_at(src, ta, -tb)
    # overlap[p, q] = R(delay_q - delay_p); lower triangle, upper by conjugation
    ov = np.ones((4, 4), dtype=np.complex128)
    ov[1, 0] = r_b
    ov[2, 0] = r_a
    ov[3, 0] = r_ab
    ov[2, 1] = r_amb
    ov[3, 1] = r_a
    ov[3, 2] = r_b
    iu = np.triu_indices(4, 1)
    ov[iu] = ov.T[iu].conj()
    return np.outer(c, c.conj()) * ov


def aligned_density(src: SourceSpec, fiber: FiberSpec) -> np.ndarray:
    """PSP-aligned state: only the ``|ss>``/``|s's'>`` block is populated."""
    rho = np.zeros((4, 4), dtype=np.complex128)
    rho[0, 0] = rho[3, 3] = 0.5
    rho[3, 0] = 0.5 * cmath.exp(1j * src.alpha) * overlap_closed(src, fiber)
    rho[0, 3] = rho[3, 0].conjugate()
    return rho


def psp_align(state_coeffs, tol: float = 1e-10) -> np.ndarray:
    """Local unitary on photon A bringing a maximally entangled state to
    ``(|s s> + |s' s'>)/sqrt(2)`` in the PSP basis.

    ``state_coeffs[i, j]`` is the amplitude of ``|s_i>_A |s_j>_B``. Both
    singular values must equal ``1/sqrt(2)``.
    """
    a = np.asarray(state_coeffs, dtype=np.complex128)
    u, s, v = svd_2x2(a)
    if np.max(np.abs(s - 1.0 / math.sqrt(2.0))) > tol:
        raise ValueError(f"state is not maximally entangled: singular values {s}")
    u_tilde = u @ v
    return u_tilde.conj().T


def spectral_form(rho, tol: float = 1e-9) -> SpectralState:
    """``(F, theta)`` of a state ``(1/2)(|ab><ab| + |a'b'><a'b'|) + coherence``.

    ``rho`` is given in the product basis with ``|ab>`` first and ``|a'b'>``
    last.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (4, 4):
        raise NotInStateSet(f"expected 4x4, got {rho.shape}")
    template = np.zeros((4, 4), dtype=bool)
    template[[0, 0, 3, 3], [0, 3, 0, 3]] = True
    bad = []
    for p, q in zip(*np.nonzero(~template)):
        if abs(rho[p, q]) > tol:
            bad.append(f"rho[{p},{q}]={rho[p, q]:.3g}")
    for p in (0, 3):
        if abs(rho[p, p] - 0.5) > tol:
            bad.append(f"rho[{p},{p}]={rho[p, p]:.3g} (expected 1/2)")
    if abs(rho[3, 0] - rho[0, 3].conjugate()) > tol:
        bad.append("coherence not Hermitian")
    if abs(rho[3, 0]) > 0.5 + tol:
        bad.append(f"|rho[3,0]|={abs(rho[3, 0]):.3g} > 1/2")
    if bad:
        raise NotInStateSet("matrix is outside the two-level state set: " + ", ".join(bad))
    coh = rho[3, 0]
    mag = min(abs(coh), 0.5)
    theta = cmath.phase(coh) % TWO_PI if mag > 0 else 0.0
    return SpectralState(0.5 + mag, theta)


def state_from_spectral(s: SpectralState) -> np.ndarray:
    """Inverse of :func:`spectral_form`."""
    e = cmath.exp(1j * s.theta)
    phi1 = np.array([1.0, 0.0, 0.0, e]) / math.sqrt(2.0)
    phi2 = np.array([1.0, 0.0, 0.0, -e]) / math.sqrt(2.0)
    f = s.fidelity_f
    return f * np.outer(phi1, phi1.conj()) + (1.0 - f) * np.outer(phi2, phi2.conj())


def channel_fidelity(src: SourceSpec, fiber: FiberSpec) -> float:
    """Initial fidelity ``(1 + |R|)/2`` of the phase-corrected aligned state."""
    return 0.5 * (1.0 + abs(overlap_closed(src, fiber)))


def spectrum(rho) -> np.ndarray:
    w, _ = hermitian_eig(rho)
    return w


__all__ = [
    "AlignmentSpec", "FiberSpec", "NotInStateSet", "QuadratureControl", "QuadratureError",
    "SourceSpec", "SpectralState", "aligned_density", "channel_fidelity", "generic_density",
    "is_density", "overlap_at", "overlap_closed", "overlap_quadrature", "psp_align",
    "spectral_form", "spectrum", "state_from_spectral",
]
