import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from iesched.building import BuildingParams, ComfortBand  # noqa: E402
from iesched.devices import ThermalUnit  # noqa: E402
from iesched.scenario import Features, Scenario, load_scenario  # noqa: E402

# filled by test_acceptance, printed after the run
ACCEPTANCE = {}


def window(s: Scenario, start: int, length: int) -> Scenario:
    """Periods ``start .. start+length-1`` (0-based) as a stand-alone scenario."""
    sl = slice(start, start + length)
    return s.replace(horizon=length, elec_load=s.elec_load[sl], t_outdoor=s.t_outdoor[sl],
                     wind=s.wind[sl], pv=s.pv[sl], name=f"{s.name}_w{start}")


def toy_scenario(load=30.0, **kw) -> Scenario:
    """One thermal unit, no devices, no renewables, no heat demand."""
    unit = ThermalUnit("G", 10.0, 50.0, 25.0, 25.0, 0.01, 10.0, 5.0, 2.0)
    bldg = BuildingParams(0.5, 2.3e7, 5e7, 1.007, 1.2)
    args = dict(horizon=1, dt=1.0, thermal_units=(unit,), chp_units=(), bess=None, eb=None,
                building=bldg, comfort=ComfortBand(), setpoint=20.0, elec_load=(load,),
                t_outdoor=(20.0,), wind=(None,), pv=(None,), q_step=5.0,
                features=Features(bess=False, hst=False, eb=False, inertia=False))
    args.update(kw)
    return Scenario(**args)


@pytest.fixture(scope="session")
def paper():
    return load_scenario("paper_case")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def window_doc(start: int, length: int) -> dict:
    """The bundled document cut to ``length`` periods from ``start``."""
    import json
    from importlib import resources

    doc = json.loads(resources.files("iesched.data").joinpath("paper_case.json").read_text())

    def cut(v):
        if isinstance(v, dict) and "values" in v:
            return dict(v, values=v["values"][start:start + length])
        if isinstance(v, list):
            return v[start:start + length]
        return v

    doc["horizon"] = length
    doc["name"] = f"paper_case_w{start}"
    for key in ("elec_load", "t_outdoor"):
        doc[key] = cut(doc[key])
    doc["wind"] = {k: cut(v) for k, v in doc["wind"].items()}
    doc["pv"] = {k: cut(v) for k, v in doc["pv"].items()}
    return doc
