"""Train on one synthetic hand open/close session and score on another.

Also shows how accuracy falls when the movement contrast is shrunk.

Run:  python3 demos/gesture_classification.py
"""

from semgkit.config import default_config
from semgkit.features import extract_session
from semgkit.models import accuracy_table, train_and_evaluate
from semgkit.synth import degrade_snr, generate, preset_scenarios

cfg = default_config()
cfg["models"]["rf"]["trees"] = 50
base = preset_scenarios()["gesture_session"]

results = {}
for label, scenario in (("clean", base), ("low contrast", degrade_snr(base, 0.05))):
    train = extract_session(generate(scenario.replace(seed=1))[0], cfg, "s1")
    test = extract_session(generate(scenario.replace(seed=2))[0], cfg, "s2")
    print(f"{label}: {train.rows.shape[0]} training windows x {train.rows.shape[1]} features")
    for kind in ("lda", "rf", "mlp"):
        _, report = train_and_evaluate(train, test, kind, cfg, seed=0)
        results[(label, "sleeve", kind)] = report.accuracy
        print(f"  {kind:4s} accuracy {report.accuracy:.3f}")

print(accuracy_table(results)[1])
