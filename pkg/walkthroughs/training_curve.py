"""One block through the FIR + CFO + IQ chain, trained from scratch.

Prints testing MSE after every accepted LM step, first on pilots only and
then on the network's own decisions, next to the clairvoyant level.

    python walkthroughs/training_curve.py
"""
import numpy as np

from wlcomp import load_scenario, make_allocation, semi_supervised_train, to_augmented
from wlcomp.bench import compute_mse
from wlcomp.network import build_mirror

sc = load_scenario("simple")
c = sc.get_constellation()
rng = np.random.default_rng(3)

# %% draw one block at 30 dB
model = sc.channel_model(snr_db=30)
s = c.draw(sc.n, rng)
y0 = model.propagate(s, rng)
x0 = to_augmented(s)
alloc = make_allocation(sc.allocation, sc.n, sc.n_pilots)

clair = compute_mse(x0, build_mirror(model, c).output(y0), alloc, "test")
print(f"clairvoyant testing MSE {clair:.5f} (theory {model.clairvoyant_mse(sc.n):.5f})")

# %% train, recording the curve through the callback
curve = []


def record(stage, it, net):
    curve.append((stage, it, compute_mse(x0, net.output(y0), alloc, "test")))


net = sc.build_network()
fit = semi_supervised_train(net, y0, s[alloc.indices], alloc, sc.lm_config(), callback=record)

print(f"{'stage':<12}{'iter':>5}{'test MSE':>12}")
for stage, it, mse in curve:
    print(f"{stage:<12}{it:>5}{mse:>12.5f}")
print(f"supervised: {fit.iterations_supervised} iterations ({fit.supervised.reason}); "
      f"self-training: {fit.iterations_self} ({fit.self_training.reason})")

# %% the CFO estimate is identifiable; IQ and FIR parameters are only
# determined jointly (a constant rotation can move between them)
print("CFO estimate", net.layers[1].params[0], "(channel offset 0.005)")
