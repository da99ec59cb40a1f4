# %% [markdown]
# # Stage timings
#
# Times sampling, feasibility and cost evaluation across the density
# ladder, serially and with the thread-parallel mode. Absolute numbers
# depend on the machine; on a single core the parallel mode cannot be
# faster, only its overhead shrinks relative to the work.

# %%
from frenetplan.bench import run_benchmark, write_csv

rows = run_benchmark([50, 180, 800, 3500, 13000], repetitions=10, warmup=2)
write_csv(rows, "notebook_out_bench.csv")

# %%
for r in rows:
    if r.stage == "total":
        print(f"{r.count:>6} {r.mode:<8} {r.median_ms:8.2f} ms  speedup {r.speedup:.2f}")
