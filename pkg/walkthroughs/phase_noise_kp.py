"""How many quasi-static phase blocks does the network need?

Runs the phase-noise scenario for K_p in {0, 5, 10} at a low and a high SNR.
With K_p = 0 the network cannot follow the drifting phase at all; fewer
blocks average out more noise, more blocks follow the drift more closely,
so the better choice flips as the SNR grows.

    python walkthroughs/phase_noise_kp.py [trials]
"""
import sys

from wlcomp import load_scenario, run_scenario

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 10
base = load_scenario("phase_noise").with_overrides(trials=trials, grid=(10, 40), methods=("phycom2",))

print(f"{'Kp':>3}{'SNR':>5}{'MSE test':>10}{'SER test':>10}{'iters':>7}")
for kp in (0, 5, 10):
    res = run_scenario(base.with_overrides(kp=kp))
    for a in res.aggregates:
        print(f"{kp:>3}{a.x:>5}{a.mse_test:>10.4f}{a.ser_test:>10.4f}"
              f"{a.iters_supervised + a.iters_self:>7.1f}")
