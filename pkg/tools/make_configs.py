"""Regenerate the shipped batch-reactor scenario files in src/qstc/data.

The observer gain L (also used as Mbar for the deadbeat variant) and the
certificate margin come from tools/design_gains.py, which minimises the
per-step range contraction gamma + sigma*alpha*(1 - gamma).  Scenarios with
sigma >= 1/N use the gain designed for sigma = 0.0343; N = 11 runs are
governed by the effective threshold 1/11 and use the gain designed for it.
"""
from pathlib import Path

import yaml

DATA = Path(__file__).resolve().parents[1] / "src" / "qstc" / "data"

AC = [[1.38, -0.2077, 6.715, -5.676], [-0.5814, -4.29, 0.0, 0.675],
      [1.067, 4.273, -6.654, 5.893], [0.048, 4.273, -1.343, -2.104]]
BC = [[0.0, 0.0], [5.679, 0.0], [1.136, -3.146], [1.136, 0.0]]
CY = [[1.0, 0.0, 1.0, -1.0], [0.0, 1.0, 0.0, 0.0]]
K1 = [[1.4110, -3.5708, -0.6385, -4.1134], [6.0726, -0.0486, 4.6801, -2.5005]]
# designed for sigma = 0.0343 (used whenever sigma >= 1/N)
L = [[0.029504869851636806, 0.00012233572655484526], [-0.014406137579231204, 0.015137453425560166],
     [0.029559471649554858, 7.617983432417486e-05], [0.0033224149742334674, 0.019722622422116864]]
MARGIN = 0.12706242484553976
# designed for the effective threshold 1/11 that governs N = 11
L_N11 = [[0.024845632121376356, 7.429589709812631e-10], [2.37651995762353e-05, 0.02480616619911896],
         [0.009418788829385271, 0.015426839924588868], [-0.0007237269444351162, 0.02120771957273481]]
MARGIN_N11 = 0.05981917446150474
# same search at Delta = 0.01 (the alternate step reading)
L_COARSE = [[0.04831529224778911, -1.3393155224492292e-09], [-0.02342462269153169, 0.024584027057113683],
            [0.013056204125984976, 0.03525872723859428], [0.00017503014001490073, 0.04153933091073704]]
MARGIN_COARSE = 0.2824976449987632
X0 = [1.0, -1.0, 0.5, -0.5]


def scenario(variant, N, sigma=0.0343, dos=None, delta=0.005):
    if delta != 0.005:
        obs, margin = L_COARSE, MARGIN_COARSE
    elif sigma < 1.0 / N:
        obs, margin = L_N11, MARGIN_N11
    else:
        obs, margin = L, MARGIN
    gains = {"K": K1, "L": obs} if variant == "standard" else {"K": "synthesize-deadbeat", "Mbar": obs}
    cfg = {
        "plant": {"continuous": {"A": AC, "B": BC}, "C": CY, "Delta": delta, "eta": "auto"},
        "gains": gains,
        "trigger": {"sigma": sigma, "tau_max": 20, "N": N, "E_in": 1.0, "strict_sigma": sigma >= 1.0 / N},
        "run": {"variant": variant, "x0": X0, "horizon": 400, "output_dir": "out", "check_invariants": True,
                "margin": margin},
    }
    if dos:
        cfg["dos"] = dos
    return cfg


def write(name, cfg):
    (DATA / f"{name}.yaml").write_text(yaml.safe_dump(cfg, sort_keys=False, default_flow_style=None, width=120))


REFERENCE = """\
# Annotated scenario file.  Every key below is accepted; anything else is an error.
# Matrices are lists of rows.  Keys marked (default) may be omitted.

plant:
  # Either 'continuous' (ZOH-discretized) or 'discrete' (A, B and optionally At, Bt).
  continuous:
    A: {AC}
    B: {BC}
  C: {CY}
  Delta: 0.005          # sensor-channel step
  eta: auto             # (default) actuator sub-steps per sensor step; auto = controllability index

gains:
  K: {K1}               # or synthesize-deadbeat (needs sub-step matrices)
  L: {L}                # observer gain of the standard variant
  # M: ...              # deadbeat observer gain, or give Mbar = (At^eta) M instead
  # deadbeat_order: 2   # (default: controllability index) nilpotency order for synthesis

trigger:
  sigma: 0.0343         # trigger threshold, admissible in [1/N, 1/alpha)
  tau_max: 20           # longest gap between samples
  N: 101                # quantization levels per output axis
  E_in: 1.0             # bound on the initial state, ||x0|| <= E_in
  strict_sigma: true    # (default) false lets sigma < 1/N; the range then contracts with 1/N

dos:
  mode: none            # (default) none | random | worst-case | scripted
  kappa_d: 0.0          # (default) attack budget offset
  nu_d: inf             # (default) one attacked step per nu_d steps; 'auto' = 1/(bound_fraction*dos_bound)
  bound_fraction: 0.9   # (default) used by nu_d: auto
  seed: 0               # (default) random mode generator seed
  attack_prob: 0.5      # (default) random mode per-step attack probability
  schedule: null        # (default) scripted mode, a string such as "0010001"
  schedule_file: null   # (default) or a file holding that string, relative to this file

run:
  variant: standard     # (default) standard | deadbeat
  x0: {X0}
  horizon: 400          # sensor steps
  output_dir: out       # (default)
  check_invariants: false  # (default) assert the trigger and range bounds every step
  margin: {MARGIN}      # (default 0.5) decay certificate gamma = rho + margin*(1 - rho)
"""


def main():
    DATA.mkdir(exist_ok=True)
    for v in ("standard", "deadbeat"):
        for N in (11, 31, 101):
            write(f"reactor_{v}_N{N}", scenario(v, N))
        for tag, s in (("0193", 0.0193), ("0343", 0.0343)):
            write(f"fig4_{v}_sigma{tag}", scenario(v, 101, s))
        dos = {"mode": "random", "kappa_d": 1.0, "nu_d": "auto", "bound_fraction": 0.9, "seed": 7,
               "attack_prob": 0.3}
        write(f"fig5_{v}_dos", scenario(v, 101, dos=dos))
        write(f"fig6_{v}", scenario(v, 101))
    (DATA / "reference.yaml").write_text(REFERENCE.format(AC=AC, BC=BC, CY=CY, K1=K1, L=L, X0=X0, MARGIN=MARGIN))
    write("fig3_standard_N31", scenario("standard", 31))
    write("fig3_standard_N101", scenario("standard", 101))
    write("fig3_deadbeat_N11", scenario("deadbeat", 11))
    write("fig3_deadbeat_N101", scenario("deadbeat", 101))
    write("reactor_deadbeat_coarse", scenario("deadbeat", 101, delta=0.01))
    (DATA / "fig6_grid.yaml").write_text(yaml.safe_dump(
        {"sigma": [0.0193, 0.0243, 0.0293, 0.0343, 0.0393, 0.0443], "N": [31, 101], "tau_max": [20]},
        sort_keys=False, default_flow_style=None))


if __name__ == "__main__":
    main()
