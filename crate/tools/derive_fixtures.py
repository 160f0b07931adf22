#!/usr/bin/env python3
"""Independent hand-coded evaluation of the derived example values.

Writes crates/core/tests/fixtures/derived_values.json. Nothing here imports
or calls the Rust code; every value is evaluated directly from the model
equations so the fixture can act as an oracle for the implementation.
"""
import json
import math
import os

out = {}

# valve / chamber / force terms
out["orifice_flow"] = 0.7 * 1e-5 * math.sqrt(2.0 * 1e6 / 870.0)
out["linear_valve_flow"] = 2.0 * 1e-3 - 1e-11 * 5e7
out["chamber_pressure_rate"] = 1.4e9 * 1e-5 / 1e-3
out["internal_leakage"] = (6e6 - 4e6) / 1e11
out["load_acceleration_push"] = (1e6 * 0.002 - 400.0 * 0.0 - 1e4 * 0.0) / 100.0
out["load_acceleration_mixed"] = (1e6 * 0.002 - 400.0 * 0.5 - 1e4 * 0.1) / 100.0
out["relief_valve_flow"] = 1e-9 * (2.1e7 - 2e7)
out["hydraulic_power"] = 1e7 * 1e-4

# two trapezoid steps of a constant error, previous error seeded by the first sample
integral = 0.0
prev = None
for _ in range(2):
    e = 0.01
    p = e if prev is None else prev
    integral += 0.5 * (e + p) * 0.1
    prev = e
out["pid_trapezoid_output"] = 1.0 * integral

# one classical RK4 step of dy/dt = -y from y = 1 with h = 0.1
h = 0.1
f = lambda y: -y
k1 = f(1.0)
k2 = f(1.0 + 0.5 * h * k1)
k3 = f(1.0 + 0.5 * h * k2)
k4 = f(1.0 + h * k3)
out["rk4_decay_step"] = 1.0 + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
out["rk4_decay_exact"] = math.exp(-0.1)

out["saving_percent_table"] = 100.0 * (30.47 - 27.867) / 30.47

# Right-hand sides at a fixed operating point (second implementation).
P = dict(
    bulk_modulus=1.4e9, density=870.0,
    piston_area=0.002, chamber_volume=1e-3, leakage_resistance=1e12, stroke_limit=0.25,
    mass=500.0, viscous_coeff=1e4, load_stiffness=2000.0,
    pdcv_flow_gain=0.1, pdcv_flow_pressure_coeff=5e-12, pdcv_spool_limit=1e-3,
    bypass_discharge_coeff=0.7, bypass_max_area=3.6e-6, bypass_spool_limit=1e-3,
    cracking_pressure=5e6, override_gradient=1e-9,
    supply_flow=1.2e-4, spool_time_constant=0.01,
)
S = dict(X=0.1, v=0.03, P1=6e6, P2=1.5e6, xv=4e-4)
u = 0.5
F = 9000.0
out["rhs_params"] = P
out["rhs_state"] = S
out["rhs_command"] = u
out["rhs_load_force"] = F

# PDCV: single load-pressure state, equal split onto the chambers
PL = S["P1"] - S["P2"]
QL = P["pdcv_flow_gain"] * S["xv"] - P["pdcv_flow_pressure_coeff"] * PL
QL = max(-P["supply_flow"], min(P["supply_flow"], QL))
dPL = 2.0 * P["bulk_modulus"] / P["chamber_volume"] * (
    QL - P["piston_area"] * S["v"] - PL / P["leakage_resistance"])
acc = (PL * P["piston_area"] - P["viscous_coeff"] * S["v"]
       - P["load_stiffness"] * S["X"] - F) / P["mass"]
qprv = P["supply_flow"] - abs(QL)
out["pdcv_rates"] = dict(
    dX=S["v"], dv=acc, dP1=0.5 * dPL, dP2=-0.5 * dPL,
    dxv=(u * P["pdcv_spool_limit"] - S["xv"]) / P["spool_time_constant"],
)
out["pdcv_flows"] = dict(
    pump=P["supply_flow"], to_actuator=abs(QL), from_actuator=abs(QL),
    bypass=qprv, supply_pressure=P["cracking_pressure"] + qprv / P["override_gradient"],
)

# PFCV: rod end vented, bypass orifice from the bore chamber to tank
P1 = S["P1"]
area = P["bypass_max_area"] * S["xv"] / P["bypass_spool_limit"]
Q0 = P["bypass_discharge_coeff"] * area * math.sqrt(2.0 * P1 / P["density"])
Q1 = P["supply_flow"]
Q2 = Q1 - Q0
dP1 = P["bulk_modulus"] / P["chamber_volume"] * (
    Q2 - P["piston_area"] * S["v"] - P1 / P["leakage_resistance"])
acc = (P1 * P["piston_area"] - P["viscous_coeff"] * S["v"]
       - P["load_stiffness"] * S["X"] - F) / P["mass"]
out["pfcv_rates"] = dict(
    dX=S["v"], dv=acc, dP1=dP1, dP2=0.0,
    dxv=(u * P["bypass_spool_limit"] - S["xv"]) / P["spool_time_constant"],
)
out["pfcv_flows"] = dict(
    pump=Q1, to_actuator=Q1, from_actuator=Q2, bypass=Q0, supply_pressure=P1,
)

path = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "tests",
                    "fixtures", "derived_values.json")
with open(path, "w") as fh:
    json.dump(out, fh, indent=2, sort_keys=True)
    fh.write("\n")
print(json.dumps(out, indent=2, sort_keys=True))
