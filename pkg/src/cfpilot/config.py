"""System-level configuration for the cell-free massive MIMO scenario."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields

BOLTZMANN = 1.380649e-23
T0_KELVIN = 290.0


@dataclass(frozen=True)
class SystemConfig:
    """Physical and dimensional constants of one network scenario.

    M: number of access points, each with L antennas.
    K: number of single-antenna users sharing tau_p orthogonal pilots.
    Distances for the three-slope path loss are in kilometers; positions
    elsewhere are in meters.
    """

    M: int = 10
    L: int = 2
    K: int = 6
    tau_p: int = 3
    pilot_power_mw: float = 100.0
    dl_power_mw: float = 200.0
    bandwidth_hz: float = 20e6
    noise_figure_db: float = 9.0
    area_side_m: float = 1000.0
    pl_const_db: float = 141.0
    d1_km: float = 0.05
    d0_km: float = 0.01
    sigma_sh_db: float = 8.0

    def __post_init__(self):
        for name in ("M", "L", "K", "tau_p"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        for name in ("pilot_power_mw", "dl_power_mw", "bandwidth_hz",
                     "area_side_m", "d1_km", "d0_km"):
            v = getattr(self, name)
            if not v > 0:
                raise ValueError(f"{name} must be strictly positive, got {v!r}")
        if self.sigma_sh_db < 0:
            raise ValueError("sigma_sh_db must be non-negative")
        if self.d0_km >= self.d1_km:
            raise ValueError("d0_km must be smaller than d1_km")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SystemConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def noise_power(config: SystemConfig) -> float:
    """Thermal noise power in watts: k_B * 290 K * B * noise figure (linear)."""
    nf = 10.0 ** (config.noise_figure_db / 10.0)
    return BOLTZMANN * T0_KELVIN * config.bandwidth_hz * nf


def pilot_snr(config: SystemConfig) -> float:
    """Normalized pilot SNR (dimensionless)."""
    return config.pilot_power_mw * 1e-3 / noise_power(config)


def downlink_snr(config: SystemConfig) -> float:
    """Normalized downlink SNR per AP (dimensionless)."""
    return config.dl_power_mw * 1e-3 / noise_power(config)
