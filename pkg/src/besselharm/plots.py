"""Optional SVG plots for experiment reports (matplotlib, Agg backend)."""

from __future__ import annotations

import os

import numpy as np

from .reporting import ExperimentReport


def write_plots(rep: ExperimentReport, outdir: str) -> list[str]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    if rep.experiment_id == "E1":
        names = [c[5:] for c in rep.columns if c.startswith("norm_")]
        rows = [r for r in rep.rows if not r.get("error")]
        if rows:
            fig, ax = plt.subplots(figsize=(7, 4.5))
            base = np.array([float(r["norm_S"]) for r in rows])
            for name in names:
                vals = np.array([float(r[f"norm_{name}"]) for r in rows])
                ax.scatter(base, vals, s=14, label=name)
            lim = [base.min() * 0.5, base.max() * 2]
            ax.plot(lim, lim, "k--", lw=0.7)
            ax.set_xscale("log")
            ax.set_yscale("log")
            ax.set_xlabel("||S f||_p")
            ax.set_ylabel("functional norm")
            ax.legend(fontsize=7, ncol=2)
            ax.set_title("norm-equivalence scatter across the corpus")
            path = os.path.join(outdir, "E1_ratio_scatter.svg")
            fig.savefig(path, format="svg", bbox_inches="tight")
            plt.close(fig)
            written.append(path)
    elif rep.experiment_id == "E7":
        gammas = np.array([float(r["gamma"]) for r in rep.rows])
        tails = np.array([float(r["tail_integral"]) for r in rep.rows])
        slope, icept = np.polyfit(np.log(gammas), np.log(tails), 1)
        fig, ax = plt.subplots(figsize=(5.5, 4))
        ax.loglog(gammas, tails, "o-", label="tail integral")
        ax.loglog(gammas, np.exp(icept) * gammas**slope, "--",
                  label=f"fit slope {slope:.2f}")
        ax.set_xlabel("dilation factor")
        ax.set_ylabel("maximal-function tail mass")
        ax.legend()
        path = os.path.join(outdir, "E7_tail_slopes.svg")
        fig.savefig(path, format="svg", bbox_inches="tight")
        plt.close(fig)
        written.append(path)
    return written
