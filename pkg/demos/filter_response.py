"""Print the sleeve filter chain's magnitude response at a few frequencies.

Run:  python3 demos/filter_response.py
"""

from semgkit.config import default_config
from semgkit.signal_core import SLEEVE, design_bandpass, design_chain, design_notch, gain_db

rate = float(SLEEVE.sample_rate)
bp = design_bandpass(50, 115, 4, rate)
chain = design_chain(SLEEVE, default_config()["filters"])
print(f"{bp.design_descriptor}: {bp.n_sections} sections")
for f in (20, 40, 50, 60, 76, 100, 115, 120):
    print(f"  {f:5.1f} Hz  band-pass {gain_db(bp, f, rate):8.2f} dB   full chain {gain_db(chain, f, rate):8.2f} dB")
for center in (50, 60):
    n = design_notch(center, 30, rate)
    print(f"notch {center} Hz: {gain_db(n, center + 0.1, rate):.1f} dB at +0.1 Hz, "
          f"{gain_db(n, center + 5, rate):.2f} dB at +5 Hz")
