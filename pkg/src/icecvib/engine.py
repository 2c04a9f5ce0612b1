"""ICEC cross sections with intramolecular vibrational structure.

Species A (electron acceptor) and D (electron donor) are either atomic or
diatomic. A diatomic species carries two Morse curves: ``initial_curve`` (A or
D) and ``final_curve`` (A- or D+). Final vibrational states are bound levels or
box-discretized dissociative states; atomic species have one trivial channel.

Public energies are in eV, cross sections in Mb (Mb/eV per dissociative axis).
Internally everything is Hartree atomic units.
"""
from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .continuum import BoxSpec, ContinuumSet, box_states
from .franck_condon import FcTable, fc_table
from .morse import GridQualityWarning, MorseParams, bound_wavefunction, level_energy, n_bound, potential_value
from .units import UNITS, kT
from .xs_data import CrossSectionTable, ResolvedPiSet, TableRangeError, interpolate, pr_from_pi

EV = UNITS.hartree_per_eV
MB = 1.0 / UNITS.megabarn_per_bohr2  # bohr^2 per Mb
CLOSED_THRESHOLD_EV = 1e-9
THERMAL_CUTOFF = 1e-6

ATOMIC, BOUND, CONTINUUM = 0, 1, 2
_KIND_NAMES = {ATOMIC: "atomic", BOUND: "bound", CONTINUUM: "continuum"}


class ContinuumTruncatedError(RuntimeError):
    """The energy budget of a channel exceeds the highest box state kept."""


# ---------------------------------------------------------------------------
# species and configuration

@dataclass(frozen=True)
class SpeciesSpec:
    name: str
    role: str  # "acceptor" | "donor"
    kind: str  # "atomic" | "diatomic"
    ip_reference: float  # eV
    pi_table: CrossSectionTable
    multiplicity_ratio: float = 1.0
    initial_curve: MorseParams | None = None
    final_curve: MorseParams | None = None
    resolved: ResolvedPiSet | None = None

    def __post_init__(self):
        if self.role not in ("acceptor", "donor"):
            raise ValueError(f"role must be acceptor or donor, got {self.role!r}")
        if self.kind == "atomic":
            if self.initial_curve is not None or self.final_curve is not None:
                raise ValueError(f"atomic species {self.name} cannot carry Morse curves")
        elif self.kind == "diatomic":
            if self.initial_curve is None or self.final_curve is None:
                raise ValueError(f"diatomic species {self.name} needs initial and final curves")
        else:
            raise ValueError(f"kind must be atomic or diatomic, got {self.kind!r}")

    @classmethod
    def diatomic(cls, name: str, role: str, ip_eV: float, pi_table: CrossSectionTable,
                 initial: MorseParams, final: MorseParams, **kw) -> "SpeciesSpec":
        """Place both curves on a common energy scale from a minimum-to-minimum IP.

        The initial curve dissociates at 0. The final curve minimum lies IP above
        (donor, D+) or below (acceptor, A-) the initial minimum.
        """
        sign = 1.0 if role == "donor" else -1.0
        ip = ip_eV * EV
        init = replace(initial, V_inf=0.0)
        fin = replace(final, V_inf=sign * ip + final.D_e - initial.D_e)
        return cls(name, role, "diatomic", ip_eV, pi_table, initial_curve=init, final_curve=fin, **kw)

    @classmethod
    def atomic(cls, name: str, role: str, ip_eV: float, pi_table: CrossSectionTable, **kw) -> "SpeciesSpec":
        return cls(name, role, "atomic", ip_eV, pi_table, **kw)


@dataclass(frozen=True)
class EngineConfig:
    acceptor: SpeciesSpec
    donor: SpeciesSpec
    r_ad: float  # bohr
    box: BoxSpec = field(default_factory=BoxSpec)
    mode: str = "fc"  # "fc" | "ab-initio"

    def __post_init__(self):
        if not self.r_ad > 0:
            raise ValueError("r_ad must be positive")
        if self.acceptor.role != "acceptor" or self.donor.role != "donor":
            raise ValueError("acceptor/donor roles mixed up")
        if self.mode not in ("fc", "ab-initio"):
            raise ValueError(f"mode must be fc or ab-initio, got {self.mode!r}")
        if self.mode == "ab-initio":
            if self.donor.resolved is None and self.donor.kind == "diatomic":
                raise ValueError("ab-initio mode needs resolved PI tables for the donor")
            if self.acceptor.resolved is None and self.acceptor.kind == "diatomic":
                raise ValueError("ab-initio mode needs resolved PI tables for the acceptor")


# ---------------------------------------------------------------------------
# energy bookkeeping (eV)

@dataclass(frozen=True)
class Transition:
    """Absolute energies (V_inf + E) of the initial and final vibronic state of one species."""

    initial: float
    final: float


def transferred_energy(epsilon: float, acceptor: Transition) -> float:
    """omega = eps + (V_A + E_nuA) - (V_A- + E_nuA-)."""
    return epsilon + acceptor.initial - acceptor.final


def outgoing_energy(omega: float, donor: Transition) -> float:
    """eps' = omega + (V_D + E_nuD) - (V_D+ + E_final); negative means closed."""
    return omega + donor.initial - donor.final


def transferred_energy_adiabatic(epsilon: float, ip_adiabatic: float, initial_offset: float,
                                 final_offset: float) -> float:
    """omega = eps + IP^a_A- + [(E_nuA - E_0A) - (E_nuA- - E_0A-)]."""
    return epsilon + ip_adiabatic + (initial_offset - final_offset)


def outgoing_energy_adiabatic(omega: float, ip_adiabatic: float, initial_offset: float,
                              final_offset: float) -> float:
    """eps' = omega - IP^a_D - [(E_nuD+ - E_0D+) - (E_nuD - E_0D)]."""
    return omega - ip_adiabatic - (final_offset - initial_offset)


# ---------------------------------------------------------------------------
# channels

@dataclass(frozen=True)
class FinalState:
    kind: str  # "atomic" | "bound" | "continuum"
    index: int = 0
    energy: float = 0.0  # eV relative to V_inf of the final curve (continuum: fragment energy)

    def label(self) -> str:
        if self.kind == "atomic":
            return "atom"
        if self.kind == "bound":
            return f"v{self.index}"
        return f"E{self.index}"


@dataclass(frozen=True)
class ChannelSpec:
    initial: tuple[int, int]
    final_A: FinalState
    final_D: FinalState

    @property
    def category(self) -> str:
        n = (self.final_A.kind == "continuum") + (self.final_D.kind == "continuum")
        return ("bb", "bd", "dd")[n]


@dataclass(frozen=True)
class ChannelResult:
    spec: ChannelSpec
    omega: float  # eV
    eps_out: float  # eV
    sigma: float  # Mb, or Mb/eV per dissociating species
    open: bool


@dataclass(frozen=True)
class XsBreakdown:
    epsilon: float
    bb: float
    bd: float
    dd: float

    @property
    def total(self) -> float:
        return self.bb + self.bd + self.dd


@dataclass(frozen=True)
class _Finals:
    kind: np.ndarray
    index: np.ndarray
    energy: np.ndarray  # Hartree, relative to V_inf of the final curve
    absolute: np.ndarray  # Hartree
    offset: np.ndarray  # Hartree, relative to the lowest final level
    factor: np.ndarray  # FC (bound) or FC * rho (continuum, 1/Hartree); 1 when tables carry it
    width: np.ndarray  # Hartree cell width for continuum, 0 otherwise

    def take(self, sel) -> "_Finals":
        return _Finals(*(getattr(self, f)[sel] for f in self.__dataclass_fields__))


@dataclass
class ChannelGrid:
    """All channels for one incoming energy and initial state, A-finals x D-finals."""

    epsilon: float
    initial: tuple[int, int]
    finals_A: _Finals
    finals_D: _Finals
    omega: np.ndarray  # (nA,) eV
    eps_out: np.ndarray  # (nA, nD) eV
    sigma: np.ndarray  # (nA, nD) Mb (/eV per continuum axis)
    weight_A: np.ndarray  # (nA, nD) eV for continuum axes, 1 for discrete, 0 closed
    weight_D: np.ndarray
    open: np.ndarray

    @property
    def weight(self) -> np.ndarray:
        return self.weight_A * self.weight_D

    def n_continuum(self) -> np.ndarray:
        return (self.finals_A.kind == CONTINUUM)[:, None].astype(int) + (self.finals_D.kind == CONTINUUM)[None, :]

    def contributions(self) -> np.ndarray:
        w = self.weight
        with np.errstate(invalid="ignore"):
            c = np.where(w > 0, self.sigma * w, 0.0)
        return c

    def breakdown(self) -> XsBreakdown:
        c = self.contributions()
        n = self.n_continuum()
        return XsBreakdown(self.epsilon, float(c[n == 0].sum()), float(c[n == 1].sum()), float(c[n == 2].sum()))

    def final_state(self, role: str, i: int) -> FinalState:
        f = self.finals_A if role == "A" else self.finals_D
        return FinalState(_KIND_NAMES[int(f.kind[i])], int(f.index[i]), float(f.energy[i] / EV))

    def channel(self, i: int, j: int) -> ChannelResult:
        spec = ChannelSpec(self.initial, self.final_state("A", i), self.final_state("D", j))
        return ChannelResult(spec, float(self.omega[i]), float(self.eps_out[i, j]),
                             float(self.sigma[i, j]), bool(self.open[i, j]))

    def channels(self):
        for i in range(self.eps_out.shape[0]):
            for j in range(self.eps_out.shape[1]):
                yield self.channel(i, j)


class _SpeciesModel:
    """Precomputed levels, continuum and overlaps for one species."""

    def __init__(self, spec: SpeciesSpec, box: BoxSpec):
        self.spec = spec
        self.box = box
        self.sign = 1.0 if spec.role == "donor" else -1.0
        self.atomic = spec.kind == "atomic"
        self._lock = threading.Lock()
        self._overlap_cache: dict[int, tuple[np.ndarray, np.ndarray | None]] = {}
        ip = spec.ip_reference * EV
        if self.atomic:
            self.initial_levels = np.array([0.0])
            self.initial_abs = np.array([0.0])
            self.final_V_inf = self.sign * ip
            self.final_levels = np.array([0.0])
            self.continuum = None
            self.grid = None
        else:
            pi, pf = spec.initial_curve, spec.final_curve
            self.initial_levels = level_energy(pi, np.arange(n_bound(pi)))
            self.initial_abs = pi.V_inf + self.initial_levels
            self.final_V_inf = pf.V_inf
            self.final_levels = level_energy(pf, np.arange(n_bound(pf)))
            self.grid = box.grid
            self.continuum = box_states(pf, box)
            if len(self.continuum) < 2:
                raise ValueError(f"{spec.name}: fewer than 2 continuum states below e_max; enlarge the box or e_max")
            self.check_box()

    # energies in Hartree -------------------------------------------------
    @property
    def final_ground_abs(self) -> float:
        return self.final_V_inf + float(self.final_levels[0])

    @property
    def ip_adiabatic(self) -> float:
        """Adiabatic ionization energy of D, or of A- for the acceptor (Hartree)."""
        gap = self.final_ground_abs - float(self.initial_abs[0])
        return gap if self.spec.role == "donor" else -gap

    def vertical_ip(self) -> float:
        if self.atomic:
            return self.spec.ip_reference * EV
        pi, pf = self.spec.initial_curve, self.spec.final_curve
        gap = (pf.V_inf + float(potential_value(pf, pi.R_e))) - (pi.V_inf - pi.D_e)
        return gap if self.spec.role == "donor" else -gap

    def n_initial(self) -> int:
        return self.initial_levels.size

    def overlaps(self, nu: int):
        """Squared overlaps of initial level nu with final bound levels and box states."""
        with self._lock:
            if nu not in self._overlap_cache:
                pi, pf = self.spec.initial_curve, self.spec.final_curve
                psi = bound_wavefunction(pi, nu, self.grid, warn=False)
                bound = np.array([np.trapezoid(psi * bound_wavefunction(pf, k, self.grid, warn=False), self.grid)
                                  for k in range(n_bound(pf))])**2
                cont = (self.box.step * (self.continuum.vectors.T @ psi))**2
                self._overlap_cache[nu] = (bound, cont)
            return self._overlap_cache[nu]

    def finals(self, nu: int, mode: str) -> _Finals:
        if not 0 <= nu < self.n_initial():
            raise ValueError(f"{self.spec.name}: initial level {nu} outside 0..{self.n_initial() - 1}")
        if self.atomic:
            z = np.zeros(1)
            return _Finals(np.array([ATOMIC]), np.array([0]), z, np.array([self.final_V_inf]), z,
                           np.ones(1), z)
        e0 = float(self.final_levels[0])
        if mode == "ab-initio":
            resolved = self.spec.resolved
            ks = np.array(resolved.finals(nu), dtype=int)
            if ks.size and ks.max() >= self.final_levels.size:
                raise ValueError(f"{self.spec.name}: resolved table for final level {ks.max()} "
                                 f"but the final curve has only {self.final_levels.size} bound levels")
            e = self.final_levels[ks]
            return _Finals(np.full(ks.size, BOUND), ks, e, self.final_V_inf + e, e - e0,
                           np.ones(ks.size), np.zeros(ks.size))
        bound, cont = self.overlaps(nu)
        nb, nc = bound.size, cont.size
        c = self.continuum
        e = np.concatenate([self.final_levels, c.energies])
        return _Finals(
            kind=np.concatenate([np.full(nb, BOUND), np.full(nc, CONTINUUM)]),
            index=np.concatenate([np.arange(nb), np.arange(nc)]),
            energy=e,
            absolute=self.final_V_inf + e,
            offset=e - e0,
            factor=np.concatenate([bound, cont * c.dos]),
            width=np.concatenate([np.zeros(nb), c.widths]),
        )

    def fc_table(self, nu: int) -> FcTable:
        return fc_table(self.spec.initial_curve, self.spec.final_curve, self.continuum, nu, warn=False)

    def check_box(self, max_initial: int = 3) -> None:
        """Warn once if bound levels used by the engine leak out of the box."""
        curves = ((self.spec.initial_curve, range(min(max_initial, self.n_initial()))),
                  (self.spec.final_curve, range(self.final_levels.size)))
        for p, levels in curves:
            for nu in levels:
                psi = bound_wavefunction(p, nu, self.grid, normalize=False, warn=False)
                lost = 1.0 - float(np.trapezoid(psi**2, self.grid))
                if abs(lost) > 1e-6:
                    warnings.warn(f"{self.spec.name} curve '{p.label}': level {nu} has {lost:.2e} of its norm "
                                  f"outside the box; it is renormalized inside", GridQualityWarning, stacklevel=3)


# ---------------------------------------------------------------------------
# engine

def _prefactor(omega_au, r_ad: float):
    c = UNITS.speed_of_light_au
    return 3.0 * c**4 / (4.0 * math.pi) / (omega_au**4 * r_ad**6)


class IcecEngine:
    """Cross-section engine for one acceptor/donor pair.

    ``eps_max`` (eV) is the largest incoming energy the engine will be asked
    for; it fixes the top of the box continuum when ``cfg.box.e_max`` is unset.
    """

    def __init__(self, cfg: EngineConfig, eps_max: float = 10.0):
        self.cfg = cfg
        self.eps_max = float(eps_max)
        box = cfg.box
        if box.e_max is None:
            box = box.with_e_max(self._default_e_max())
        self.box = box
        self.A = _SpeciesModel(cfg.acceptor, box)
        self.D = _SpeciesModel(cfg.donor, box)

    def _default_e_max(self) -> float:
        """max(eps_max + IP_A-, largest fragment energy any channel can reach)."""
        cfg = self.cfg
        budget = []
        for sp, other in ((cfg.acceptor, cfg.donor), (cfg.donor, cfg.acceptor)):
            if sp.kind == "atomic":
                continue
            sign_sp = 1.0 if sp.role == "donor" else -1.0
            V_f = sign_sp * sp.ip_reference + (sp.final_curve.D_e - sp.initial_curve.D_e) / EV
            spare = -V_f  # initial curve tops out at 0, dissociating fragment starts at V_f
            if other.kind == "atomic":
                spare += -(1.0 if other.role == "donor" else -1.0) * other.ip_reference
            else:
                sign_o = 1.0 if other.role == "donor" else -1.0
                V_fo = sign_o * other.ip_reference + (other.final_curve.D_e - other.initial_curve.D_e) / EV
                spare += -(V_fo - other.final_curve.D_e / EV)
            budget.append(self.eps_max + spare)
        default = self.eps_max + cfg.acceptor.ip_reference
        return max([default] + budget) * EV * 1.05

    # helpers -------------------------------------------------------------
    def species(self, role: str) -> _SpeciesModel:
        return self.A if role in ("A", "acceptor") else self.D

    def prepare(self, initials=None) -> None:
        """Fill the overlap caches up front (for use before threaded sweeps)."""
        initials = initials or [(0, 0)]
        for nu_a, nu_d in initials:
            if not self.A.atomic and self.cfg.mode == "fc":
                self.A.overlaps(nu_a)
            if not self.D.atomic and self.cfg.mode == "fc":
                self.D.overlaps(nu_d)

    def pr_xs(self, epsilon: float) -> float:
        """Unresolved photorecombination cross section of A (Mb); diverges as 1/eps at eps = 0."""
        if epsilon < 0:
            raise ValueError("incoming energy must be >= 0")
        A = self.cfg.acceptor
        omega = epsilon + A.ip_reference
        sigma_pi = interpolate(A.pi_table, omega)
        if epsilon == 0:
            return math.inf if sigma_pi > 0 else 0.0
        return pr_from_pi(sigma_pi, omega, epsilon, A.multiplicity_ratio)

    def electronic_xs(self, epsilon: float) -> float:
        """Fixed-nuclei ICEC cross section (Mb) with omega = eps + IP_A-."""
        omega = epsilon + self.cfg.acceptor.ip_reference
        pr = self.pr_xs(epsilon) * MB
        pi = interpolate(self.cfg.donor.pi_table, omega) * MB
        if math.isinf(pr):
            return math.inf if pi > 0 else 0.0
        return _prefactor(omega * EV, self.cfg.r_ad) * pr * pi / MB

    def vertical_ip_donor(self) -> float:
        return self.D.vertical_ip() / EV

    def adiabatic_ip(self, role: str) -> float:
        return self.species(role).ip_adiabatic / EV

    def electronic_line(self, epsilon: float) -> float:
        """Outgoing energy of the vertical (electronic) transition, eV."""
        return epsilon + self.cfg.acceptor.ip_reference - self.vertical_ip_donor()

    def initial_energies(self, initial) -> tuple[float, float]:
        """Absolute initial energies of A and D (eV)."""
        return (float(self.A.initial_abs[initial[0]]) / EV, float(self.D.initial_abs[initial[1]]) / EV)

    def transitions(self, initial, final_A: FinalState, final_D: FinalState) -> tuple[Transition, Transition]:
        ia, id_ = self.initial_energies(initial)
        fa = self.A.final_V_inf / EV + (final_A.energy if final_A.kind != "atomic" else 0.0)
        fd = self.D.final_V_inf / EV + (final_D.energy if final_D.kind != "atomic" else 0.0)
        return Transition(ia, fa), Transition(id_, fd)

    # channel grid --------------------------------------------------------
    def channel_grid(self, epsilon: float, initial=(0, 0), finals_A=None, finals_D=None) -> ChannelGrid:
        if epsilon < 0:
            raise ValueError("incoming energy must be >= 0")
        nu_a, nu_d = initial
        mode = self.cfg.mode
        fA = finals_A if finals_A is not None else self.A.finals(nu_a, mode)
        fD = finals_D if finals_D is not None else self.D.finals(nu_d, mode)

        eps = epsilon * EV
        # bookkeeping in the adiabatic-IP form; the V_inf form is checked in the tests
        off_a = float(self.A.initial_levels[nu_a] - self.A.initial_levels[0])
        off_d = float(self.D.initial_levels[nu_d] - self.D.initial_levels[0])
        omega = transferred_energy_adiabatic(eps, self.A.ip_adiabatic, off_a, fA.offset)
        eps_out = outgoing_energy_adiabatic(omega[:, None], self.D.ip_adiabatic, off_d, fD.offset[None, :])
        thr = CLOSED_THRESHOLD_EV * EV
        is_open = eps_out > thr

        sigma = np.zeros(eps_out.shape)
        rows = np.flatnonzero(is_open.any(axis=1))
        if rows.size:
            if np.any(omega[rows] <= 0):
                raise ValueError("non-positive transferred energy in an open channel")
            pr_rows = self._pr_rows(epsilon, omega[rows] / EV, nu_a, fA.take(rows))
            pi_rows = self._pi_rows(omega[rows] / EV, nu_d, fD)
            pref = _prefactor(omega[rows], self.cfg.r_ad)
            fa = fA.factor[rows]
            with np.errstate(invalid="ignore", over="ignore"):
                block = (pref * pr_rows * fa)[:, None] * pi_rows * fD.factor[None, :]
                block = np.nan_to_num(block, nan=0.0, posinf=np.inf)
            # per-Hartree continuum factors -> per eV
            scale = np.where(fA.kind[rows] == CONTINUUM, EV, 1.0)[:, None] * np.where(fD.kind == CONTINUUM, EV, 1.0)[None, :]
            sigma[rows] = np.where(is_open[rows], block * scale / MB, 0.0)

        wA, wD = self._weights(eps, omega, eps_out, fA, fD, nu_d, is_open)
        # caller-supplied subsets need not reach the top of the box
        if finals_A is None and finals_D is None:
            self._check_truncation(eps_out, fA, fD)
        return ChannelGrid(epsilon, (nu_a, nu_d), fA, fD, omega / EV, eps_out / EV, sigma, wA, wD, is_open)

    def _pr_rows(self, epsilon, omega_ev, nu_a, fA: _Finals) -> np.ndarray:
        """Acceptor photorecombination factor per A-final row, bohr^2."""
        A = self.cfg.acceptor
        if self.cfg.mode == "fc" or A.kind == "atomic":
            return np.full(omega_ev.size, self.pr_xs(epsilon) * MB)
        out = np.empty(omega_ev.size)
        for r, (k, w) in enumerate(zip(fA.index, omega_ev)):
            table = A.resolved[(int(k), nu_a)]
            sig = interpolate(table, w)
            out[r] = (math.inf if sig > 0 else 0.0) if epsilon == 0 else \
                pr_from_pi(sig, w, epsilon, A.multiplicity_ratio)
        return out * MB

    def _pi_rows(self, omega_ev, nu_d, fD: _Finals) -> np.ndarray:
        """Donor photoionization factor, (rows, nD) in bohr^2."""
        D = self.cfg.donor
        if self.cfg.mode == "fc" or D.kind == "atomic":
            col = np.atleast_1d(interpolate(D.pi_table, omega_ev)) * MB
            return np.repeat(col[:, None], fD.kind.size, axis=1)
        out = np.empty((omega_ev.size, fD.kind.size))
        for j, k in enumerate(fD.index):
            out[:, j] = np.atleast_1d(interpolate(D.resolved[(nu_d, int(k))], omega_ev)) * MB
        return out

    def _weights(self, eps, omega, eps_out, fA: _Finals, fD: _Finals, nu_d, is_open):
        """Integration weights; a continuum state owns [E_i, E_i + width_i], clipped at eps' = 0."""
        contA = (fA.kind == CONTINUUM)[:, None]
        contD = (fD.kind == CONTINUUM)[None, :]
        wA = np.where(is_open, 1.0, 0.0)
        wD = np.where(is_open, 1.0, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            fracA = np.clip(eps_out / (fA.width[:, None] / EV), 0.0, 1.0)
            # outer D limit in the double-dissociative case is taken with E_A- = 0
            eps_out_A0 = np.where(contA, eps_out + (fA.energy[:, None] / EV), eps_out)
            fracD = np.clip(np.where(contA & contD, eps_out_A0, eps_out) / (fD.width[None, :] / EV), 0.0, 1.0)
        wA = np.where(contA, wA * fracA * (fA.width[:, None] / EV), wA)
        wD = np.where(contD, wD * fracD * (fD.width[None, :] / EV), wD)
        return wA, wD

    def _check_truncation(self, eps_out, fA, fD) -> None:
        for f, axis in ((fA, 0), (fD, 1)):
            sel = np.flatnonzero(f.kind == CONTINUUM)
            if not sel.size:
                continue
            top = sel[-1]
            idx = (top, slice(None)) if axis == 0 else (slice(None), top)
            # the top state still open means states above e_max would be open too
            if np.any(eps_out[idx] - f.width[top] / EV > 0):
                raise ContinuumTruncatedError(
                    f"box continuum ends at {f.energy[top] / EV:.4g} eV but channels stay open above it; "
                    f"raise box e_max")

    # cross sections --------------------------------------------------------
    def channels(self, epsilon: float, initial=(0, 0)) -> list[ChannelResult]:
        return list(self.channel_grid(epsilon, initial).channels())

    def channel_xs(self, epsilon: float, spec: ChannelSpec) -> ChannelResult:
        nu_a, nu_d = spec.initial
        fA = self.A.finals(nu_a, self.cfg.mode)
        fD = self.D.finals(nu_d, self.cfg.mode)
        i = self._find(fA, spec.final_A)
        j = self._find(fD, spec.final_D)
        grid = self.channel_grid(epsilon, spec.initial, fA.take([i]), fD.take([j]))
        return grid.channel(0, 0)

    @staticmethod
    def _find(f: _Finals, state: FinalState) -> int:
        kind = {"atomic": ATOMIC, "bound": BOUND, "continuum": CONTINUUM}[state.kind]
        hit = np.flatnonzero((f.kind == kind) & (f.index == state.index))
        if hit.size == 0:
            raise KeyError(f"no final state {state.kind} {state.index}")
        return int(hit[0])

    def total_breakdown(self, epsilon: float, initial=(0, 0)) -> XsBreakdown:
        return self.channel_grid(epsilon, initial).breakdown()

    def total_xs(self, epsilon: float, initial=(0, 0)) -> float:
        return self.total_breakdown(epsilon, initial).total

    # thermal averaging -------------------------------------------------------
    def thermal_weights(self, temperature: float, cutoff: float = THERMAL_CUTOFF):
        """Boltzmann weights of initial (nu_A, nu_D) pairs, truncated and renormalized.

        Pairs are taken in order of increasing energy until the cumulative
        weight exceeds 1 - cutoff. T = 0 gives the ground pair only.
        """
        if temperature < 0:
            raise ValueError("temperature must be >= 0")
        ea = self.A.initial_levels
        ed = self.D.initial_levels
        pairs = [(a, d) for a in range(ea.size) for d in range(ed.size)]
        energy = np.array([ea[a] + ed[d] for a, d in pairs])
        order = np.argsort(energy, kind="stable")
        if temperature == 0:
            return [(pairs[order[0]], 1.0)]
        x = -(energy[order] - energy[order[0]]) / kT(temperature)
        w = np.exp(x)
        w /= w.sum()
        cum = np.cumsum(w)
        n = int(np.searchsorted(cum, 1.0 - cutoff, side="right")) + 1
        n = min(n, w.size)
        kept = w[:n] / w[:n].sum()
        return [(pairs[order[k]], float(kept[k])) for k in range(n)]

    def population(self, temperature: float, role: str = "D") -> np.ndarray:
        """Untruncated Boltzmann populations of one species' initial levels."""
        levels = self.species(role).initial_levels
        if temperature == 0:
            p = np.zeros(levels.size)
            p[0] = 1.0
            return p
        w = np.exp(-(levels - levels[0]) / kT(temperature))
        return w / w.sum()

    def thermal_xs(self, epsilon: float, temperature: float) -> float:
        return sum(w * self.total_xs(epsilon, init) for init, w in self.thermal_weights(temperature))

    def thermal_breakdown(self, epsilon: float, temperature: float) -> XsBreakdown:
        parts = [(w, self.total_breakdown(epsilon, init)) for init, w in self.thermal_weights(temperature)]
        return XsBreakdown(epsilon, sum(w * b.bb for w, b in parts), sum(w * b.bd for w, b in parts),
                           sum(w * b.dd for w, b in parts))

    # diagnostics -------------------------------------------------------------
    def energy_balance_residual(self, result: ChannelResult) -> float:
        """eps + sum(initial) - eps' - sum(final), eV."""
        ta, td = self.transitions(result.spec.initial, result.spec.final_A, result.spec.final_D)
        eps = self._epsilon_of(result, ta)
        return eps + ta.initial + td.initial - result.eps_out - ta.final - td.final

    @staticmethod
    def _epsilon_of(result: ChannelResult, ta: Transition) -> float:
        return result.omega - ta.initial + ta.final

    def fc_table(self, role: str, nu: int) -> FcTable:
        sp = self.species(role)
        if sp.atomic:
            raise ValueError("atomic species have no Franck-Condon table")
        return sp.fc_table(nu)
