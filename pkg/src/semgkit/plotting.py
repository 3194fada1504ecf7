"""Static envelope traces with shaded movement phases."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .session_io import Label, Session
from .signal_core import Envelope, Units


def write_envelope_csv(env: Envelope, channel_names, path) -> None:
    lines = ["time," + ",".join(channel_names)]
    for t, row in zip(env.times, env.values.T):
        lines.append(format(t, ".17g") + "," + ",".join(format(v, ".17g") for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def plot_envelopes(env: Envelope, session: Session, svg_path, csv_path=None) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = session.recording.channel_names
    if csv_path is not None:
        write_envelope_csv(env, names, csv_path)

    # fixed hash salt and no date keep the SVG byte-identical across runs
    with matplotlib.rc_context({"svg.hashsalt": "semgkit", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(10, 3.2))
        t = env.times
        for ch, name in enumerate(names):
            ax.plot(t, env.values[ch], lw=0.8, label=name)
        for iv in session.annotations:
            if iv.label is not Label.RELAX:
                ax.axvspan(iv.start, iv.end, color="0.8", alpha=0.6, lw=0, zorder=0)
        unit = "µV" if env.profile.units is Units.MICROVOLTS else "a.u."
        ax.set_xlabel("time (s)")
        ax.set_ylabel(f"envelope ({unit})")
        ax.set_xlim(t[0], t[-1] if len(t) > 1 else t[0] + 1)
        ax.set_ylim(0, max(float(np.max(env.values)) * 1.05, 1e-12))
        ax.legend(loc="upper right", fontsize="small", ncol=min(len(names), 4))
        ax.set_title(session.subject_id)
        fig.tight_layout()
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
        plt.close(fig)
