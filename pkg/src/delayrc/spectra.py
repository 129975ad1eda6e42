"""Linear stability of the laser reservoir and spectrum-based predictors.

The operating point is the external cavity mode (ECM) with inversion
N* = -kappa and constant intensity A^2 = (P + kappa)/(1 - 2*kappa) (alpha = 0,
phi = 0; for kappa = 0 this is the solitary laser with N* = 0, A^2 = P).
Linearizing in real coordinates (e_re, e_im, n) about the ECM gives

    d"xi/dt = B xi + C xi(t - tau),

with the eigenvalues solving det(-lambda*I + B + C exp(-lambda*tau)) = 0.
The rotational symmetry of the field contributes an exact zero eigenvalue
(Goldstone mode), which carries no input-separability information and is
excluded everywhere below.

For long delays the roots organize into pseudocontinuous branches
lambda = gamma(mu)/tau + i*mu with two closed-form real-part curves
gamma_j(mu) = -ln|Y_j(mu)| and imaginary parts quantized by
mu = (2*pi*k - arg Y_j(mu))/tau, a contraction solved by fixed-point
iteration and optionally polished by Newton steps on the characteristic
determinant.

Two scalars summarize how the spectrum supports reservoir computing at clock
cycle T: the per-eigenvalue angular advance Phi_i = (|Im lambda_i| T) mod pi
(values near 0 or pi mean consecutive inputs land on nearly the same phase,
degrading separability) and the distance reduction Lambda_i =
exp(Re(lambda_i) T) (closer to 1 means slower forgetting).  Phi_hat and
Lambda_hat average these over the N leading eigenvalues.
"""

from __future__ import annotations

import cmath
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .laser import LaserParams

__all__ = [
    "ECM",
    "CharacteristicSystem",
    "SpectrumEntry",
    "Spectrum",
    "Predictors",
    "NewtonResult",
    "ecm",
    "solitary_jacobian",
    "solitary_eigenvalues",
    "solitary_spectrum",
    "class_b_onset",
    "characteristic_system",
    "characteristic_value",
    "pcs_gamma",
    "pcs_spectrum",
    "newton_refine",
    "refine_spectrum",
    "predictors",
    "resonance_lines",
    "resonant_clock_times",
]

GOLDSTONE_TOL = 1e-8  # |lambda| below this is treated as the zero mode
DEDUP_TOL = 1e-8


@dataclass(frozen=True)
class ECM:
    """External cavity mode: constant-intensity rotating-wave solution."""

    A_sq: float
    N_star: float
    omega: float = 0.0

    @property
    def A(self) -> float:
        return math.sqrt(self.A_sq)


def ecm(params: LaserParams) -> ECM:
    """The mode with N* = -kappa, omega = 0 (the maximal-gain ECM).

    Only the alpha = 0, phi = 0 configuration is supported; there the mode
    sits at A^2 = (P + kappa)/(1 - 2*kappa), which must be positive (pump
    above the feedback-shifted threshold P_th = -kappa).
    """
    if params.alpha != 0.0:
        raise NotImplementedError("ECM analysis requires alpha = 0")
    if params.phi != 0.0:
        raise NotImplementedError("ECM analysis requires phi = 0")
    if params.kappa >= 0.5:
        raise ValueError("kappa must be < 0.5 for a positive-intensity mode")
    a_sq = (params.P + params.kappa) / (1.0 - 2.0 * params.kappa)
    if a_sq <= 0.0:
        raise ValueError(
            f"pump P={params.P} at or below threshold P_th={-params.kappa}"
        )
    return ECM(A_sq=a_sq, N_star=-params.kappa, omega=0.0)


def solitary_jacobian(params: LaserParams) -> np.ndarray:
    """2x2 Jacobian of the amplitude-inversion system at the lasing state.

    After removing the free phase, the solitary laser (kappa = 0) reduces to
    dA/dt = N A, dN/dt = eps (P - N - (2N+1) A^2); at A^2 = P, N = 0 the
    Jacobian is [[0, A], [-2 eps A, -eps (1 + 2 A^2)]].
    """
    if params.kappa != 0.0:
        raise ValueError("solitary analysis requires kappa = 0")
    if params.P <= 0.0:
        raise ValueError("solitary lasing requires P > 0")
    a = math.sqrt(params.P)
    eps = params.eps
    return np.array(
        [
            [0.0, a],
            [-2.0 * eps * a, -eps * (1.0 + 2.0 * params.P)],
        ]
    )


def solitary_eigenvalues(params: LaserParams) -> tuple[complex, complex]:
    """Roots of lambda^2 + eps(1+2A^2) lambda + 2 eps A^2 = 0 with A^2 = P.

    Sorted by descending real part (ties: the +Im root first).  Complex for
    T_LK above the class-B onset, both real and negative below it.
    """
    if params.kappa != 0.0:
        raise ValueError("solitary analysis requires kappa = 0")
    if params.P <= 0.0:
        raise ValueError("solitary lasing requires P > 0")
    eps = params.eps
    b = eps * (1.0 + 2.0 * params.P)
    c = 2.0 * eps * params.P
    disc = cmath.sqrt(b * b - 4.0 * c)
    roots = ((-b + disc) / 2.0, (-b - disc) / 2.0)
    return tuple(sorted(roots, key=lambda z: (-z.real, -z.imag)))


def class_b_onset(P: float) -> float:
    """T_LK where the solitary eigenvalues collide and turn complex."""
    if P <= 0.0:
        raise ValueError("requires P > 0")
    return (1.0 + 2.0 * P) ** 2 / (8.0 * P)


@dataclass(frozen=True)
class CharacteristicSystem:
    """Matrices of the linearized delay system at the ECM."""

    B: np.ndarray
    C: np.ndarray
    tau: float

    def __post_init__(self) -> None:
        B = np.asarray(self.B, dtype=float)
        C = np.asarray(self.C, dtype=float)
        if B.shape != (3, 3) or C.shape != (3, 3):
            raise ValueError("B and C must be 3x3")
        if not (np.all(np.isfinite(B)) and np.all(np.isfinite(C))):
            raise ValueError("non-finite Jacobian entries")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)


def characteristic_system(
    params: LaserParams, mode: ECM | None = None
) -> CharacteristicSystem:
    """Assemble B (instantaneous) and C (delayed) at the ECM.

    Coordinates (e_re, e_im, n) with the mode rotated onto the real axis:

        B = [[N*, 0, A], [0, N*, 0], [-2 eps A (2N*+1), 0, -eps(1+2A^2)]]
        C = kappa * rotation(phi) on the field block, zero elsewhere.
    """
    m = mode if mode is not None else ecm(params)
    a = m.A
    eps = params.eps
    n_star = m.N_star
    B = np.array(
        [
            [n_star, 0.0, a],
            [0.0, n_star, 0.0],
            [-2.0 * eps * a * (2.0 * n_star + 1.0), 0.0, -eps * (1.0 + 2.0 * m.A_sq)],
        ]
    )
    cphi, sphi = math.cos(params.phi), math.sin(params.phi)
    C = params.kappa * np.array(
        [
            [cphi, -sphi, 0.0],
            [sphi, cphi, 0.0],
            [0.0, 0.0, 0.0],
        ]
    )
    return CharacteristicSystem(B=B, C=C, tau=params.tau)


def characteristic_value(lam: complex, system: CharacteristicSystem) -> complex:
    """det(-lambda I + B + C e^(-lambda tau)); zero exactly at eigenvalues."""
    lam = complex(lam)
    M = -lam * np.eye(3) + system.B + system.C * cmath.exp(-lam * system.tau)
    return complex(np.linalg.det(M))


def _branch_values(
    mu: np.ndarray, params: LaserParams, mode: ECM
) -> tuple[np.ndarray, np.ndarray]:
    """The two branch functions Y_j(mu) whose moduli set the decay rates.

    Derived by factoring the characteristic determinant in the long-delay
    ansatz lambda = gamma/tau + i*mu: branch 1 is the pure field branch,
    branch 2 couples field and inversion.
    """
    mu = np.asarray(mu, dtype=float)
    kappa = params.kappa
    eps = params.eps
    a_sq = mode.A_sq
    r = eps * (1.0 + 2.0 * a_sq)
    y1 = 1.0 + 1j * mu / kappa
    y2 = y1 + 2.0 * eps * (params.P + kappa) * (r - 1j * mu) / (
        kappa * (mu * mu + r * r)
    )
    return y1, y2


def pcs_gamma(
    mu: np.ndarray | float, params: LaserParams, mode: ECM | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Scaled real parts gamma_j(mu) = -ln|Y_j(mu)| of the two branches."""
    if params.kappa <= 0.0:
        raise ValueError("pseudocontinuous branches need kappa > 0; "
                         "use solitary_eigenvalues for kappa = 0")
    m = mode if mode is not None else ecm(params)
    y1, y2 = _branch_values(np.asarray(mu, dtype=float), params, m)
    g1 = -np.log(np.abs(y1))
    g2 = -np.log(np.abs(y2))
    if np.isscalar(mu) or np.asarray(mu).ndim == 0:
        return float(g1), float(g2)
    return g1, g2


@dataclass(frozen=True)
class SpectrumEntry:
    lam: complex
    branch: int
    k: int
    source: str  # exact2x2 | pcs | newton

    @property
    def gamma(self) -> float:
        """Delay-scaled decay rate (meaningful for pcs-derived entries)."""
        return self.lam.real

    @property
    def mu(self) -> float:
        return self.lam.imag


def _entry_order(e: SpectrumEntry):
    return (-e.lam.real, abs(e.lam.imag), -e.lam.imag, e.branch, e.k)


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalue list sorted by descending real part, zero mode excluded."""

    entries: tuple[SpectrumEntry, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "entries", tuple(sorted(self.entries, key=_entry_order))
        )

    def __len__(self) -> int:
        return len(self.entries)

    def eigenvalues(self) -> np.ndarray:
        return np.array([e.lam for e in self.entries], dtype=complex)

    def to_json(self, path: str | None = None) -> str:
        doc = {
            "schema": 1,
            "entries": [
                {
                    "re": e.lam.real,
                    "im": e.lam.imag,
                    "branch": e.branch,
                    "k": e.k,
                    "source": e.source,
                }
                for e in self.entries
            ],
            "meta": self.meta,
        }
        text = json.dumps(doc, indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_json(cls, text: str) -> "Spectrum":
        doc = json.loads(text)
        if doc.get("schema") != 1:
            raise ValueError(f"unsupported schema {doc.get('schema')}")
        entries = tuple(
            SpectrumEntry(
                complex(item["re"], item["im"]),
                int(item["branch"]),
                int(item["k"]),
                str(item["source"]),
            )
            for item in doc["entries"]
        )
        return cls(entries, doc.get("meta", {}))

    def to_csv(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write("re,im,branch,k,source\n")
            for e in self.entries:
                fh.write(
                    f"{e.lam.real:.17g},{e.lam.imag:.17g},{e.branch},{e.k},{e.source}\n"
                )


def _mu_fixed_point(
    k: int, branch: int, params: LaserParams, mode: ECM, nu: int
) -> float:
    """Solve mu = (2 pi k - arg Y_branch(mu)) / tau by fixed-point iteration.

    The map contracts with rate ~ |d(arg Y)/d mu| / tau, far below 1 for the
    long delays this spectrum targets.  Seeded at the leading-order grid
    mu_0 = pi (2k - nu) / tau.
    """
    tau = params.tau
    mu = math.pi * (2 * k - nu) / tau
    for _ in range(200):
        y = _branch_values(np.array([mu]), params, mode)[branch - 1][0]
        nxt = (2.0 * math.pi * k - cmath.phase(y)) / tau
        if abs(nxt - mu) <= 1e-15 * max(1.0, abs(nxt)):
            return nxt
        mu = nxt
    return mu


def pcs_spectrum(
    params: LaserParams, mode: ECM | None = None, N: int = 100
) -> Spectrum:
    """N leading eigenvalues from the pseudocontinuous branch expansion.

    Enumerates both branches over the mode index k, solves the imaginary-part
    quantization exactly (fixed point), attaches gamma_j(mu)/tau as the real
    part, drops the Goldstone zero, and keeps the N of largest real part.
    """
    if params.kappa <= 0.0:
        raise ValueError("pseudocontinuous spectrum needs kappa > 0")
    if N < 1:
        raise ValueError("N must be >= 1")
    if params.tau < 50.0:
        warnings.warn(
            f"tau={params.tau} is short for the long-delay expansion; "
            "eigenvalues carry O(1/tau^2) errors",
            stacklevel=2,
        )
    m = mode if mode is not None else ecm(params)
    k_max = max(N, 25)
    entries = []
    for branch in (1, 2):
        y0 = _branch_values(np.array([0.0]), params, m)[branch - 1][0]
        nu = 0 if y0.real > 0.0 else 1
        for k in range(-k_max, k_max + 1):
            mu = _mu_fixed_point(k, branch, params, m, nu)
            y = _branch_values(np.array([mu]), params, m)[branch - 1][0]
            gamma = -math.log(abs(y))
            lam = complex(gamma / params.tau, mu)
            if abs(lam) < GOLDSTONE_TOL:
                continue
            entries.append(SpectrumEntry(lam, branch, k, "pcs"))
    entries.sort(key=_entry_order)
    return Spectrum(
        tuple(entries[:N]),
        meta={
            "kappa": params.kappa,
            "P": params.P,
            "T_LK": params.T_LK,
            "tau": params.tau,
            "N": N,
        },
    )


def solitary_spectrum(params: LaserParams) -> Spectrum:
    """The two exact eigenvalues of the solitary laser as a Spectrum."""
    lam1, lam2 = solitary_eigenvalues(params)
    entries = (
        SpectrumEntry(lam1, 0, 0, "exact2x2"),
        SpectrumEntry(lam2, 0, 1, "exact2x2"),
    )
    return Spectrum(entries, meta={"P": params.P, "T_LK": params.T_LK})


@dataclass(frozen=True)
class NewtonResult:
    lam: complex
    converged: bool
    iterations: int
    residual: float


def newton_refine(
    lam0: complex,
    system: CharacteristicSystem,
    tol: float = 1e-12,
    max_iter: int = 50,
) -> NewtonResult:
    """Polish one eigenvalue seed by Newton iteration on the determinant.

    The derivative is a central difference with step scaled to the iterate.
    Non-convergence is reported, not raised; callers keep the seed then.
    """
    lam = complex(lam0)
    for it in range(max_iter + 1):
        f = characteristic_value(lam, system)
        if abs(f) < tol:
            return NewtonResult(lam, True, it, abs(f))
        if it == max_iter:
            break
        h = 1e-7 * max(1.0, abs(lam))
        df = (
            characteristic_value(lam + h, system)
            - characteristic_value(lam - h, system)
        ) / (2.0 * h)
        if df == 0.0:
            break
        step = f / df
        lam = lam - step
    return NewtonResult(lam, False, max_iter, abs(characteristic_value(lam, system)))


def refine_spectrum(
    spectrum: Spectrum,
    system: CharacteristicSystem,
    tol: float = 1e-12,
    max_iter: int = 50,
) -> Spectrum:
    """Newton-polish every entry; deduplicate seeds that merge onto one root.

    Converged entries are retagged 'newton'; failures keep the seed value and
    tag.  Roots closer than DEDUP_TOL (and the zero mode, should a refined
    value land there) are dropped.
    """
    refined: list[SpectrumEntry] = []
    for e in spectrum.entries:
        res = newton_refine(e.lam, system, tol, max_iter)
        lam, source = (res.lam, "newton") if res.converged else (e.lam, e.source)
        if abs(lam) < GOLDSTONE_TOL:
            continue
        if any(abs(lam - r.lam) < DEDUP_TOL for r in refined):
            continue
        refined.append(SpectrumEntry(lam, e.branch, e.k, source))
    return Spectrum(tuple(refined), meta=dict(spectrum.meta))


@dataclass(frozen=True)
class Predictors:
    """Angular-advance and distance-reduction summaries at clock cycle T."""

    entries: tuple[SpectrumEntry, ...]
    T: float
    phi: np.ndarray
    lam: np.ndarray
    phi_hat: float
    lambda_hat: float

    @property
    def N_used(self) -> int:
        return len(self.entries)

    def to_json(self, path: str | None = None) -> str:
        doc = {
            "schema": 1,
            "T": self.T,
            "N_used": self.N_used,
            "phi_hat": self.phi_hat,
            "lambda_hat": self.lambda_hat,
            "eigenvalues": [
                {
                    "re": e.lam.real,
                    "im": e.lam.imag,
                    "branch": e.branch,
                    "k": e.k,
                    "phi": float(p),
                    "lambda": float(l),
                }
                for e, p, l in zip(self.entries, self.phi, self.lam)
            ],
        }
        text = json.dumps(doc, indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def to_csv(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(f"# T={self.T!r} phi_hat={self.phi_hat!r} "
                     f"lambda_hat={self.lambda_hat!r}\n")
            fh.write("re,im,branch,k,phi,lambda\n")
            for e, p, l in zip(self.entries, self.phi, self.lam):
                fh.write(
                    f"{e.lam.real:.17g},{e.lam.imag:.17g},{e.branch},{e.k},"
                    f"{p:.17g},{l:.17g}\n"
                )


def predictors(spectrum: Spectrum, T: float, N: int = 100) -> Predictors:
    """Phi_i, Lambda_i and their means over the N leading eigenvalues.

    Phi_i = (|Im lambda_i| T) mod pi uses the rotation angle magnitude, so a
    conjugate pair contributes one angle twice rather than the pair
    (phi, pi - phi), whose average would sit at pi/2 for any spectrum.  The
    zero mode is excluded before selecting the N largest real parts.
    """
    if T <= 0.0:
        raise ValueError("T must be positive")
    usable = [e for e in spectrum.entries if abs(e.lam) >= GOLDSTONE_TOL]
    if len(usable) < N:
        raise ValueError(f"spectrum has {len(usable)} usable entries, need {N}")
    chosen = tuple(usable[:N])
    lam_arr = np.array([e.lam for e in chosen])
    phi = np.mod(np.abs(lam_arr.imag) * T, math.pi)
    red = np.exp(lam_arr.real * T)
    return Predictors(
        entries=chosen,
        T=T,
        phi=phi,
        lam=red,
        phi_hat=float(phi.mean()),
        lambda_hat=float(red.mean()),
    )


def resonant_clock_times(lam: complex, t_min: float, t_max: float) -> np.ndarray:
    """Clock cycles T in [t_min, t_max] where (|Im lambda| T) mod pi hits 0."""
    w = abs(lam.imag)
    if w == 0.0:
        raise ValueError("eigenvalue has zero imaginary part; always resonant")
    lo = math.ceil(t_min * w / math.pi)
    hi = math.floor(t_max * w / math.pi)
    return np.array([j * math.pi / w for j in range(max(lo, 1), hi + 1)])


def resonance_lines(
    spectrum: Spectrum,
    T_values: np.ndarray,
    N: int = 100,
    band: float = 0.05 * math.pi,
) -> list[dict]:
    """Predictor scan over clock cycles, flagging near-resonant points.

    A point is resonant when Phi_hat lies within ``band`` of 0 or pi.  A
    spectrum whose usable eigenvalues are all real is degenerate (Phi = 0
    identically); such records carry resonant=True and degenerate=True.
    """
    usable = [e for e in spectrum.entries if abs(e.lam) >= GOLDSTONE_TOL]
    n = min(N, len(usable))
    if n == 0:
        raise ValueError("spectrum has no usable entries")
    degenerate = all(abs(e.lam.imag) < 1e-14 for e in usable[:n])
    records = []
    for T in np.asarray(T_values, dtype=float):
        p = predictors(spectrum, float(T), n)
        resonant = degenerate or min(p.phi_hat, math.pi - p.phi_hat) <= band
        records.append(
            {
                "T": float(T),
                "phi_hat": p.phi_hat,
                "lambda_hat": p.lambda_hat,
                "resonant": bool(resonant),
                "degenerate": degenerate,
            }
        )
    return records
