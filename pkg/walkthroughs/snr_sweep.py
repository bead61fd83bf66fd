"""Testing MSE and SER against SNR for the simple scenario.

Fewer trials than the acceptance suite, so expect some Monte-Carlo noise.
Writes the CSV and manifest to ``out/``.

    python walkthroughs/snr_sweep.py [trials]
"""
import sys

from wlcomp import load_scenario, run_scenario
from wlcomp.bench import write_outputs

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 10
sc = load_scenario("simple").with_overrides(trials=trials, grid=(10, 20, 30, 40))
res = run_scenario(sc, progress=lambda done, total: print(f"\r{done}/{total}", end="", file=sys.stderr))
print(file=sys.stderr)

model = sc.channel_model()
print(f"{'SNR':>4}  {'method':<12}{'MSE test':>10}{'SER test':>10}{'theory':>10}")
for a in res.aggregates:
    theory = model.with_snr(a.x).clairvoyant_mse(sc.n)
    print(f"{a.x:>4}  {a.method:<12}{a.mse_test:>10.5f}{a.ser_test:>10.4f}{theory:>10.5f}")

for path in write_outputs(res, "out"):
    print("wrote", path)
