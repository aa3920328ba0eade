"""Parameter fixture files: load, validate, and map to model objects.

Fixture schema (JSON, units documented per key):
  qubit_a / qubit_b : e_j, e_c, e_l (GHz), phi_ext (rad),
                      optional t1, t2_ramsey, t2_echo (us)
  bus               : f_b (GHz), dim (Fock levels), optional t1, t2 (us)
  couplings         : j_c, j_ab, j1, j2 (GHz), form
  capacitances      : c_c, c_f, c_b (fF)
Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources

from ..circuit import (BusParams, CapacitanceNetwork, ChargeCouplings,
                      FluxoniumParams)

_TOP_KEYS = {"description", "qubit_a", "qubit_b", "bus", "couplings",
             "capacitances"}
_QUBIT_KEYS = {"e_j", "e_c", "e_l", "phi_ext", "t1", "t2_ramsey", "t2_echo"}
_BUS_KEYS = {"f_b", "dim", "t1", "t2"}
_COUPLING_KEYS = {"j_c", "j_ab", "j1", "j2", "form"}
_CAP_KEYS = {"c_c", "c_f", "c_b"}


class FixtureError(ValueError):
    """Schema violation in a fixture file; message carries the key path."""


@dataclass
class Fixture:
    qubit_a: FluxoniumParams
    qubit_b: FluxoniumParams
    bus: BusParams
    couplings: ChargeCouplings
    capacitances: CapacitanceNetwork
    coherence: dict              # raw t1/t2 entries per subsystem
    sha256: str
    path: str


def _check_keys(section, data, allowed, required):
    unknown = set(data) - allowed
    if unknown:
        raise FixtureError(f"{section}: unknown keys {sorted(unknown)}")
    missing = required - set(data)
    if missing:
        raise FixtureError(f"{section}: missing keys {sorted(missing)}")


def load_fixture(path=None) -> Fixture:
    """Load a fixture JSON; with no path, the in-package device fixture."""
    if path is None:
        ref = resources.files(__package__) / "paper_device.json"
        raw = ref.read_bytes()
        path = str(ref)
    else:
        with open(path, "rb") as fh:
            raw = fh.read()
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise FixtureError(f"{path}: not valid JSON ({exc})") from exc

    _check_keys("fixture", data, _TOP_KEYS,
                {"qubit_a", "qubit_b", "bus", "couplings", "capacitances"})
    for name in ("qubit_a", "qubit_b"):
        _check_keys(name, data[name], _QUBIT_KEYS, {"e_j", "e_c", "e_l"})
    _check_keys("bus", data["bus"], _BUS_KEYS, {"f_b"})
    _check_keys("couplings", data["couplings"], _COUPLING_KEYS, {"form"})
    _check_keys("capacitances", data["capacitances"], _CAP_KEYS, _CAP_KEYS)

    def qubit(section):
        d = data[section]
        return FluxoniumParams(e_j=d["e_j"], e_c=d["e_c"], e_l=d["e_l"],
                               phi_ext=d.get("phi_ext", 3.141592653589793))

    coherence = {
        "qubit_a": {k: data["qubit_a"].get(k) for k in
                    ("t1", "t2_ramsey", "t2_echo")},
        "qubit_b": {k: data["qubit_b"].get(k) for k in
                    ("t1", "t2_ramsey", "t2_echo")},
        "bus": {k: data["bus"].get(k) for k in ("t1", "t2")},
    }
    try:
        fixture = Fixture(
            qubit_a=qubit("qubit_a"),
            qubit_b=qubit("qubit_b"),
            bus=BusParams(f_b=data["bus"]["f_b"],
                          dim=data["bus"].get("dim", 30)),
            couplings=ChargeCouplings(
                j_c=data["couplings"].get("j_c", 0.0),
                j_ab=data["couplings"].get("j_ab", 0.0),
                j1=data["couplings"].get("j1", 0.0),
                j2=data["couplings"].get("j2", 0.0),
                form=data["couplings"]["form"]),
            capacitances=CapacitanceNetwork(**data["capacitances"]),
            coherence=coherence,
            sha256=hashlib.sha256(raw).hexdigest(),
            path=str(path),
        )
    except (TypeError, ValueError) as exc:
        raise FixtureError(f"{path}: {exc}") from exc
    return fixture


def apply_overrides(fixture: Fixture, overrides) -> Fixture:
    """Rebuild a fixture with dotted-path overrides like 'bus.f_b=5.5'.

    Only numeric leaf values of the schema can be overridden; the fixture
    hash is retained so outputs stay traceable to the file on disk.
    """
    import dataclasses

    sections = {"qubit_a": fixture.qubit_a, "qubit_b": fixture.qubit_b,
                "bus": fixture.bus, "couplings": fixture.couplings,
                "capacitances": fixture.capacitances}
    for key, value in overrides.items():
        try:
            section, field_name = key.split(".", 1)
            target = sections[section]
        except (ValueError, KeyError):
            raise FixtureError(f"override {key!r}: unknown section") from None
        if field_name not in {f.name for f in dataclasses.fields(target)}:
            raise FixtureError(f"override {key!r}: unknown field")
        cast = type(getattr(target, field_name))
        sections[section] = dataclasses.replace(
            target, **{field_name: cast(value)})
    return dataclasses.replace(
        fixture, qubit_a=sections["qubit_a"], qubit_b=sections["qubit_b"],
        bus=sections["bus"], couplings=sections["couplings"],
        capacitances=sections["capacitances"])
