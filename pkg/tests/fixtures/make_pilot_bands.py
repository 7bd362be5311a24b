"""Regenerate pilot_bands.json from a frozen pilot seed.

Run from the repository root:  python3 tests/fixtures/make_pilot_bands.py
The acceptance suite uses a different master seed, so it checks fresh
samples against these bands.
"""

import json
from pathlib import Path

from boxdel.experiments import ExperimentConfig, calibrate_bands, run_trials, scaling_report

PILOT_SEED = 20240611
GRID = [2**e for e in range(12, 18)]


def main():
    cfg = ExperimentConfig(d=2, n_grid=GRID, trials=30, seed=PILOT_SEED, stats=["degrees"])
    summary = scaling_report(run_trials(cfg))
    bands = calibrate_bands(summary)
    bands["pilot_seed"] = PILOT_SEED
    bands["trials"] = cfg.trials
    out = Path(__file__).with_name("pilot_bands.json")
    out.write_text(json.dumps(bands, indent=2, sort_keys=True) + "\n")
    for row in bands["rows"]:
        print(row["n"], {k: round(v["center"], 4) for k, v in row.items() if k != "n"})


if __name__ == "__main__":
    main()
