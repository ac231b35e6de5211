# Copyright 2026 The virtmic Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Plot the CSV outputs of `virtmic track` and `virtmic mismatch`.

Convenience only; the CSV files are the interface.

    python3 docs/plot_results.py out/track            # history.csv, spectra.csv
    python3 docs/plot_results.py out/mismatch         # mismatch_spectra.csv
"""

import argparse
import csv
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read_columns(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    return {k: [float(r[k]) for r in rows] for k in rows[0]}


def plot_history(cols, out):
    zs = sorted((k for k in cols if k.startswith("z_")), key=lambda k: int(k[2:]))
    fig, (ax_z, ax_l) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
    for k in zs:
        ax_z.plot(cols["time_s"], cols[k], label=k)
    ax_z.set_ylabel("source ratio")
    ax_z.legend(ncol=len(zs))
    ax_l.plot(cols["time_s"], cols["L_mm_db"], label="L_mm")
    ax_l.plot(cols["time_s"], cols["L_me_db"], label="L_me")
    ax_l.set_xlabel("time [s]")
    ax_l.set_ylabel("normalised error [dB]")
    ax_l.legend()
    fig.tight_layout()
    fig.savefig(out)


def plot_spectra(cols, out, labels):
    fig, ax = plt.subplots(figsize=(7, 4))
    f = cols["frequency_hz"]
    for key, label in labels.items():
        ax.plot(f[1:], cols[key][1:], label=label)
    ax.set_xscale("log")
    ax.set_xlabel("frequency [Hz]")
    ax.set_ylabel("estimation error [dB]")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("run_dir", type=pathlib.Path)
    args = p.parse_args()
    d = args.run_dir
    made = []
    if (d / "history.csv").exists():
        plot_history(read_columns(d / "history.csv"), d / "history.png")
        made.append("history.png")
    if (d / "spectra.csv").exists():
        plot_spectra(read_columns(d / "spectra.csv"), d / "spectra.png",
                     {"L_eps_opt_db": "nominal", "L_eps_hat_db": "true ratios",
                      "L_eps_st_db": "tracked"})
        made.append("spectra.png")
    if (d / "mismatch_spectra.csv").exists():
        plot_spectra(read_columns(d / "mismatch_spectra.csv"), d / "mismatch_spectra.png",
                     {"L_eps_opt_db": "nominal", "L_eps_matched_db": "matched",
                      "L_eps_mismatched_db": "mismatched"})
        made.append("mismatch_spectra.png")
    if not made:
        raise SystemExit(f"no virtmic CSV files in {d}")
    print("wrote " + ", ".join(str(d / m) for m in made))


if __name__ == "__main__":
    main()
