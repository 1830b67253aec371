"""Scenario configuration: validated parameters, presets, flat key=value I/O.

All powers and thresholds are stored in dBm and converted to linear mW
exactly once, at this boundary.  Internal math everywhere else is linear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np
from scipy import stats


class ScenarioError(ValueError):
    """Raised for unparseable or invalid scenario input."""


def dbm_to_mw(x_dbm: float) -> float:
    return 10.0 ** (x_dbm / 10.0)


def mw_to_dbm(x_mw: float, floor_mw: float = 1e-30) -> float:
    return 10.0 * math.log10(max(x_mw, floor_mw))


@dataclass
class Scenario:
    # topology counts
    n_nru_ap: int = 1            # NR-U access points
    n_users: int = 6             # NR-U uplink users (single antenna each)
    n_wigig_ap: int = 1          # incumbent WiGig access points
    n_wigig_users_per_ap: int = 4

    # antenna geometry
    m0: int = 16                 # NR-U AP ULA elements
    n0: int = 2                  # NR-U AP RF chains (= beams per AP)
    m_wigig_ap: int = 8          # WiGig AP antennas
    n_wigig_ap_rf: int = 2       # WiGig AP RF chains (= streams per group)
    m_wigig_user: int = 2        # WiGig user antennas (single RF chain)

    # powers / thresholds (dBm)
    p_max_dbm: float = 10.0      # NR-U user transmit power cap
    p_wigig_dbm: float = 10.0    # total WiGig AP transmit power
    i_max_dbm: float = -60.0     # per-receiver inter-RAT interference cap
    i_avg_dbm: float = -63.0     # long-term average interference target

    # Lyapunov weights and delay targets
    v0: float = 20.0
    v1: float = 2.0e12
    delay_min_ms: float = 40.0
    delay_max_ms: float = 80.0

    # timing
    n_sp: int = 20               # service periods per episode
    tau_ms: float = 25.6         # SP duration

    # traffic
    arrival_density: float = 1.0     # mean arrival rate, bit/s/Hz per user
    arrival_packet: float = 0.004    # arrival quantum, bit/Hz
    arrival_cap_quantile: float = 0.999
    r_min: float = 0.1               # per-user minimum rate, bit/s/Hz

    # channel model
    n_nlos: int = 3
    pl0_db: float = 68.0         # path loss at d0 = 1 m
    pl_exp_los: float = 2.0
    pl_exp_nlos: float = 3.0
    nlos_extra_db: float = 10.0  # extra attenuation per NLoS path
    area_m: float = 10.0
    bandwidth_mhz: float = 20.0
    noise_psd_dbm_hz: float = -134.0

    # WiGig sector-sweep abstraction
    sector_oversample: int = 2   # codebook size = oversample * antennas
    semi_orth_threshold: float = 0.5

    # solver
    rho0: float = 0.5
    eta: float = 0.7
    delta0: float = 1.0
    eps1: float = 1e-3
    eps2: float = 1e-3
    n_bcu_max: int = 10
    n_abf_max: int = 20
    abf_tol: float = 1e-9
    max_outer: int = 300
    w_grad_tol: float = 1e-6
    w_max_steps: int = 200
    gamma_ceiling: float = 1e6
    warm_start: bool = True

    # reproducibility
    seed: int = 0

    # ---- derived quantities -------------------------------------------

    @property
    def n_beams(self) -> int:
        return self.n_nru_ap * self.n0

    @property
    def tau_s(self) -> float:
        return self.tau_ms * 1e-3

    @property
    def p_max_mw(self) -> float:
        return dbm_to_mw(self.p_max_dbm)

    @property
    def p_wigig_mw(self) -> float:
        return dbm_to_mw(self.p_wigig_dbm)

    @property
    def i_max_mw(self) -> float:
        return dbm_to_mw(self.i_max_dbm)

    @property
    def i_avg_mw(self) -> float:
        return dbm_to_mw(self.i_avg_dbm)

    @property
    def noise_mw(self) -> float:
        """Flat noise power: PSD times bandwidth, in mW."""
        return dbm_to_mw(self.noise_psd_dbm_hz) * self.bandwidth_mhz * 1e6

    def delay_targets_s(self) -> np.ndarray:
        """Per-user delay requirements, evenly spread over the configured span."""
        return np.linspace(self.delay_min_ms, self.delay_max_ms, self.n_users) * 1e-3

    def queue_targets(self) -> np.ndarray:
        """Delay bounds converted to queue bounds (bit/Hz) via Little's law."""
        return self.delay_targets_s() * self.arrival_density

    def arrival_mean(self) -> float:
        """Mean arrival volume per SP, bit/Hz."""
        return self.arrival_density * self.tau_s

    def arrival_cap_counts(self) -> int:
        """Truncation point for the quantized Poisson arrivals, in packets."""
        mu = self.arrival_mean() / self.arrival_packet
        return int(stats.poisson.ppf(self.arrival_cap_quantile, mu))

    def arrival_max(self) -> float:
        """Largest possible per-SP arrival volume, bit/Hz."""
        return self.arrival_cap_counts() * self.arrival_packet

    # ---- validation ----------------------------------------------------

    def validate(self) -> "Scenario":
        def req(cond: bool, msg: str) -> None:
            if not cond:
                raise ScenarioError(msg)

        for name in ("n_nru_ap", "n_users", "n_wigig_ap", "n_wigig_users_per_ap",
                     "m0", "n0", "m_wigig_ap", "n_wigig_ap_rf", "m_wigig_user",
                     "n_sp", "sector_oversample"):
            req(getattr(self, name) >= 1, f"{name} must be >= 1")
        req(self.n0 <= self.m0, "n0 must not exceed m0")
        req(self.n_wigig_ap_rf <= self.m_wigig_ap,
            "n_wigig_ap_rf must not exceed m_wigig_ap")
        req(self.n_wigig_users_per_ap <= self.sector_oversample * self.m_wigig_ap,
            "n_wigig_users_per_ap exceeds the WiGig sector codebook size")
        for name in ("tau_ms", "arrival_packet", "rho0", "delta0", "eps1", "eps2",
                     "abf_tol", "w_grad_tol", "gamma_ceiling", "area_m",
                     "bandwidth_mhz"):
            req(getattr(self, name) > 0, f"{name} must be > 0")
        req(0.0 < self.eta < 1.0, "eta must be in (0,1)")
        req(0.0 < self.arrival_cap_quantile < 1.0,
            "arrival_cap_quantile must be in (0,1)")
        req(0.0 < self.semi_orth_threshold <= 1.0,
            "semi_orth_threshold must be in (0,1]")
        for name in ("v0", "v1", "arrival_density", "r_min", "n_nlos",
                     "nlos_extra_db"):
            req(getattr(self, name) >= 0, f"{name} must be >= 0")
        req(0 < self.delay_min_ms <= self.delay_max_ms,
            "delay_min_ms/delay_max_ms must satisfy 0 < min <= max")
        for name in ("p_max_dbm", "p_wigig_dbm", "i_max_dbm", "i_avg_dbm",
                     "v0", "v1", "pl0_db", "noise_psd_dbm_hz"):
            req(math.isfinite(float(getattr(self, name))), f"{name} must be finite")
        for name in ("n_bcu_max", "n_abf_max", "max_outer", "w_max_steps"):
            req(getattr(self, name) >= 1, f"{name} must be >= 1")
        return self


# §-scale presets.  "desk" finishes a full comparison in minutes; "paper"
# mirrors the large evaluation configuration.
PRESETS: dict[str, dict] = {
    "desk": {},  # the dataclass defaults above
    "paper": dict(
        n_nru_ap=2, n_users=8, n_wigig_ap=3, n_wigig_users_per_ap=32,
        m0=128, n0=8, m_wigig_ap=64, n_wigig_ap_rf=4, m_wigig_user=4,
        p_max_dbm=10.0, p_wigig_dbm=10.0, i_max_dbm=-60.0, i_avg_dbm=-54.0,
        v0=3.0e5, v1=1.0e19,
        delay_min_ms=1.0, delay_max_ms=10.0,
        n_sp=20, tau_ms=25.6,
        arrival_density=5.0, r_min=0.1,
        n_nlos=3,
    ),
}

_FIELD_TYPES = {f.name: f.type for f in fields(Scenario)}


def make_scenario(preset: str = "desk", **overrides) -> Scenario:
    if preset not in PRESETS:
        raise ScenarioError(f"unknown preset '{preset}' (choose from {sorted(PRESETS)})")
    base = dict(PRESETS[preset])
    base.update(overrides)
    try:
        sc = Scenario(**base)
    except TypeError as exc:
        raise ScenarioError(str(exc)) from exc
    return sc.validate()


def _parse_value(name: str, raw: str):
    kind = _FIELD_TYPES.get(name)
    raw = raw.strip()
    if kind == "int":
        try:
            return int(raw)
        except ValueError as exc:
            raise ScenarioError(f"key '{name}' expects an integer, got '{raw}'") from exc
    if kind == "float":
        try:
            return float(raw)
        except ValueError as exc:
            raise ScenarioError(f"key '{name}' expects a number, got '{raw}'") from exc
    if kind == "bool":
        low = raw.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ScenarioError(f"key '{name}' expects true/false, got '{raw}'")
    raise ScenarioError(f"unknown key '{name}'")


def load_scenario(path, preset: str = "desk") -> Scenario:
    """Parse a flat `key = value` file, filling gaps from the named preset.

    Lines starting with '#' (or trailing '# ...' fragments) are comments.
    A `preset = name` line inside the file selects the fallback preset.
    """
    overrides: dict = {}
    file_preset = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ScenarioError(f"{path}:{lineno}: expected 'key = value', got '{text}'")
            key, _, raw = text.partition("=")
            key = key.strip()
            if key == "preset":
                file_preset = raw.strip()
                continue
            if key not in _FIELD_TYPES:
                raise ScenarioError(f"{path}:{lineno}: unknown key '{key}'")
            try:
                overrides[key] = _parse_value(key, raw)
            except ScenarioError as exc:
                raise ScenarioError(f"{path}:{lineno}: {exc}") from exc
    return make_scenario(file_preset or preset, **overrides)


def save_scenario(sc: Scenario, path) -> None:
    """Write every field as `key = value`; load_scenario round-trips exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        for f in fields(Scenario):
            fh.write(f"{f.name} = {getattr(sc, f.name)!r}\n".replace("'", ""))


def with_overrides(sc: Scenario, **kw) -> Scenario:
    return replace(sc, **kw).validate()
