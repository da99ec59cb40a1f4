# %% [markdown]
# # Cost weights and overtaking
#
# Sweeps the velocity, obstacle-distance and collision-probability weights
# on the `overtake` fixture (lead vehicle at 13 m/s). Expect larger lateral
# clearance for larger collision-probability weights, and no overtake when
# the obstacle-distance weight dominates a small velocity weight.
# The full grid takes a minute or two.

# %%
import math
from pathlib import Path

from frenetplan.fixtures import load_fixture
from frenetplan.plotting import plot_study
from frenetplan.sim import STUDY_GRID, overtaking_study

out = Path("notebook_out")
out.mkdir(exist_ok=True)

scenario = load_fixture("overtake")
rows = overtaking_study(scenario, STUDY_GRID)

# %%
print(f"{'v_w':>5} {'d_o':>5} {'cp':>6}  overtook  clearance  status")
for r in rows:
    clearance = "-" if math.isinf(r["min_clearance"]) else f"{r['min_clearance']:.2f}"
    print(
        f"{r['velocity_offset']:>5g} {r['dist_to_obstacle']:>5g} {r['collision_probability']:>6g}"
        f"  {str(r['overtook']):>8}  {clearance:>9}  {r['status']}"
    )

# %%
plot_study(rows, scenario, out / "study.svg", label_keys=list(STUDY_GRID))

# %% [markdown]
# Switching off both the velocity and the collision-probability terms
# leaves nothing pulling the vehicle forward past the lead.

# %%
off = overtaking_study(scenario, {"velocity_offset": [0.0], "collision_probability": [0.0]})
print(off[0]["status"])
