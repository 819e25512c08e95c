"""Run the simulated None / Nudge-LT / Nudge-FULL trial from ``sim.toml``.

The three arms see identical developers; only the notifications differ.  With
a response factor below one the nudged arms finish sooner, and the full mode
(quiet-window check plus targeted mentions) beats plain lifetime overrun.

    python demos/trial.py [out_dir]
"""
import sys
from pathlib import Path

from nudge.sim import load_config
from nudge.sim.report import emit_report, render_text
from nudge.sim.trial import ks_pvalues, run_trial


def main(out_dir="trial-out"):
    config = load_config(Path(__file__).with_name("sim.toml"))
    result = run_trial(config)
    print(render_text(result.report))
    for (a, b), p in ks_pvalues(result.report).items():
        print(f"KS {a} vs {b}: p = {p:.3g}")
    for path in emit_report(result.report, out_dir):
        print("wrote", path)


if __name__ == "__main__":
    main(*sys.argv[1:])
