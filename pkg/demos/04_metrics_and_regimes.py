"""
Improvement metrics and budget regimes
======================================

CVIR compares the best score found with the best training score; mCVIR
compares the means of the top-N lists.
"""

# %%
from scenescout.metrics import RegimeSpec, cvir, mcvir, regime_children
from scenescout.scoring import Direction

train = [10.0, 14.0, 20.0]
found = train + [18.0, 25.0, 22.0]

print("CVIR :", cvir(found, train))            # 25 / 20 - 1
print("mCVIR:", mcvir(found, train, n=3))       # mean(25, 22, 20) / mean(20, 14, 10) - 1

# %% [markdown]
# For criteria where lower is better the ratio is inverted so that a gain
# still reads positive. The uninverted form is available for comparison.

# %%
costs_train = [4.0, 5.0]
costs_all = costs_train + [2.0]
print("minimize CVIR:", cvir(costs_all, costs_train, Direction.MINIMIZE))
print("uninverted   :", cvir(costs_all, costs_train, Direction.MINIMIZE, uninverted=True))

# %% [markdown]
# Budgets: the total image count (training plus generated) must land inside
# the regime bounds. Children per epoch is what remains, split evenly.

# %%
for training_count in (35, 153):
    for regime in (RegimeSpec.low(), RegimeSpec.high()):
        cg = regime_children(training_count, 5, regime)
        print(f"{training_count:4d} training, {regime.name.value:5s} {regime.bounds}: "
              f"{cg} children/epoch, total {training_count + 5 * cg}")
