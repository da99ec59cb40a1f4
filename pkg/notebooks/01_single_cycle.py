# %% [markdown]
# # One planning cycle
#
# Builds the reference path for the shipped `overtake` fixture, runs a
# single cycle from the initial state and looks at how many candidates
# survive each stage of the funnel.

# %%
from pathlib import Path

from frenetplan.config import load_config
from frenetplan.fixtures import load_fixture
from frenetplan.plotting import plot_fan
from frenetplan.sim import plan_from, setup_simulation

out = Path("notebook_out")
out.mkdir(exist_ok=True)

scenario = load_fixture("overtake")
config = load_config()
setup = setup_simulation(scenario, config)
print(f"reference path length {setup.path.length:.1f} m")

# %%
result = plan_from(setup, scenario.problem.initial_state, 0)
for key, value in result.diagnostics.items():
    print(f"{key:>24}: {value}")
print("category:", result.category)
print("chosen (tau, d, v) index:", result.chosen.index)
print("stage times [ms]:", {k: round(v, 2) for k, v in result.timings.items()})

# %% [markdown]
# The fan plot shows every feasible candidate shaded by cost, with the
# chosen one on top.

# %%
plot_fan(result, scenario, 0, out / "fan_0000.svg", vehicle=config.vehicle)
