"""Drone catalog and the load-dependent flight-time / maximum-reach model.

Flight time decreases linearly with load and hits zero at the drivable
limit k * mpc. The one-way reachable distance for a loaded-out /
unloaded-back round trip follows from splitting the energy budget between
the two legs; both the closed form and the two-leg derivation are exposed
so they can be cross-checked.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, ParseError, PayloadError


@dataclass(frozen=True)
class DroneSpec:
    model: str
    mpc_lb: float                 # max payload capability; 0 for non-cargo drones
    speed_kmh: float
    flight_time_min: float        # max flight time without cargo
    bay: tuple | None = None      # interior (l, w, h) in inches, None if no cargo bay
    video: bool = False

    def __post_init__(self):
        if self.mpc_lb < 0:
            raise ConfigError(f"{self.model}: mpc_lb must be >= 0")
        if self.speed_kmh < 0 or self.flight_time_min < 0:
            raise ConfigError(f"{self.model}: speed and flight time must be >= 0")
        if self.bay is not None and any(d <= 0 for d in self.bay):
            raise ConfigError(f"{self.model}: bay dimensions must be positive")

    @property
    def is_cargo(self):
        return self.bay is not None and self.mpc_lb > 0


@dataclass(frozen=True)
class RangeModel:
    k: float = 1.3

    def __post_init__(self):
        if not 1.0 < self.k <= 1.3:
            raise ConfigError(f"range coefficient k must be in (1, 1.3], got {self.k}")


def mdc_lb(spec, range_model):
    """Drivable limit: the load at which flight time reaches zero."""
    return range_model.k * spec.mpc_lb


def _check_load(spec, range_model, load_lb):
    limit = mdc_lb(spec, range_model)
    if load_lb < 0:
        raise PayloadError(f"load must be >= 0, got {load_lb}")
    if load_lb >= limit:
        raise PayloadError(f"load {load_lb} lb >= drivable limit {limit} lb for drone {spec.model}")


def flight_time_under_load(spec, range_model, load_lb):
    """Minutes of flight available while carrying load_lb; strictly decreasing."""
    _check_load(spec, range_model, load_lb)
    return spec.flight_time_min * (1.0 - load_lb / mdc_lb(spec, range_model))


def max_reach_km(spec, range_model, load_lb):
    """One-way reachable distance (km) for a loaded-out, unloaded-back trip."""
    _check_load(spec, range_model, load_lb)
    limit = mdc_lb(spec, range_model)
    return (load_lb - limit) / (load_lb - 2.0 * limit) * spec.speed_kmh * spec.flight_time_min / 30.0


def max_reach_km_two_leg(spec, range_model, load_lb):
    """Same quantity re-derived from the per-leg time split; cross-check only."""
    t_loaded = flight_time_under_load(spec, range_model, load_lb)
    t_empty = spec.flight_time_min
    leg_minutes = t_loaded * t_empty / (t_loaded + t_empty)
    return spec.speed_kmh / 60.0 * leg_minutes * 2.0


def mfd_m(spec):
    """Total path-length budget (m) of an unloaded reconnaissance flight."""
    return 1000.0 * spec.speed_kmh * spec.flight_time_min / 60.0


# Shipped defaults for the cargo drones B, C, F and the communication drone H.
DEFAULT_CATALOG = (
    DroneSpec("B", mpc_lb=8.0, speed_kmh=79.0, flight_time_min=40.0, bay=(8.0, 10.0, 14.0), video=True),
    DroneSpec("C", mpc_lb=14.0, speed_kmh=64.0, flight_time_min=35.0, bay=(24.0, 20.0, 20.0), video=False),
    DroneSpec("F", mpc_lb=22.0, speed_kmh=79.0, flight_time_min=24.0, bay=(24.0, 20.0, 20.0), video=False),
    DroneSpec("H", mpc_lb=0.0, speed_kmh=19.0, flight_time_min=20.0, bay=None, video=True),
)

_TRUE = {"true", "1", "yes", "y"}
_FALSE = {"false", "0", "no", "n", ""}


def load_catalog(path):
    """Drone catalog CSV: model,mpc_lb,speed_kmh,flight_time_min,bay_l,bay_w,bay_h,video."""
    specs = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"model", "mpc_lb", "speed_kmh", "flight_time_min", "bay_l", "bay_w", "bay_h", "video"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ParseError(f"drone catalog must have columns {sorted(required)}")
        for i, row in enumerate(reader):
            try:
                bay_vals = (row["bay_l"].strip(), row["bay_w"].strip(), row["bay_h"].strip())
                bay = tuple(float(v) for v in bay_vals) if all(bay_vals) else None
                video_s = row["video"].strip().lower()
                if video_s not in _TRUE | _FALSE:
                    raise ValueError(video_s)
                specs.append(DroneSpec(
                    model=row["model"].strip(),
                    mpc_lb=float(row["mpc_lb"]),
                    speed_kmh=float(row["speed_kmh"]),
                    flight_time_min=float(row["flight_time_min"]),
                    bay=bay,
                    video=video_s in _TRUE,
                ))
            except (ValueError, AttributeError):
                raise ParseError("bad drone catalog row", line=i + 2)
    if not specs:
        raise ParseError("drone catalog is empty")
    return tuple(specs)


def save_catalog(specs, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "mpc_lb", "speed_kmh", "flight_time_min", "bay_l", "bay_w", "bay_h", "video"])
        for s in specs:
            bay = s.bay if s.bay is not None else ("", "", "")
            writer.writerow([s.model, s.mpc_lb, s.speed_kmh, s.flight_time_min, *bay, str(s.video).lower()])
    return str(Path(path))
