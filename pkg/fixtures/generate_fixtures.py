"""Regenerate the three fixture mini-datasets, deterministically.

The trees under fixtures/datasets/ are committed; run this only if the
layouts need to change. Each dataset deliberately clashes with the
others on units, rate, decimal convention, labeling, and gravity so the
integration path is exercised end to end:

  twosplit_txt    txt in 2 split directories, space-delimited, unit g,
                  100 Hz, gravity included, activity in the file name
  twentydirs_csv  csv in 20 activity directories, m/s² linear
                  acceleration, 20 Hz, per-row label column
  logger_counts   semicolon csv with comma decimals, raw ADC counts
                  (0.0039 g/count), timestamp column at 50 Hz, gravity
                  included, sidecar label span files
"""

from pathlib import Path

import numpy as np

HERE = Path(__file__).parent
DATASETS = HERE / "datasets"

TWENTY_ACTIVITIES = [
    "WALKING", "JOGGING", "JUMPING", "STANDING", "SITTING", "LYING",
    "STAIRS_UP", "STAIRS_DOWN", "CYCLING", "BENDING", "SIT_TO_STAND",
    "STAND_TO_SIT", "FALL_FORWARD", "FALL_BACKWARD", "FALL_SIDEWARD",
    "CAR_STEP_IN", "CAR_STEP_OUT", "STUMBLE", "TRANSITION",
    "STANDING_FROM_LYING",
]


def activity_wave(rng, n, rate, freq_hz, amplitude, noise):
    t = np.arange(n) / rate
    return amplitude * np.sin(2 * np.pi * freq_hz * t) + rng.normal(0, noise, n)


def write_twosplit_txt():
    root = DATASETS / "twosplit_txt"
    rng = np.random.default_rng(2024_01)
    n, rate = 1000, 100.0  # 10 s at 100 Hz, values in g
    params = {"walk": (1.0, 0.2, 0.02), "run": (3.0, 0.6, 0.02), "sit": (0.0, 0.0, 0.005)}
    for split, subjects in (("train", ("s01", "s02")), ("test", ("s03",))):
        for subject in subjects:
            for activity, (freq, amp, noise) in params.items():
                x = activity_wave(rng, n, rate, freq, amp, noise) if amp else rng.normal(0, noise, n)
                y = rng.normal(0, noise, n)
                z = 1.0 + rng.normal(0, noise, n)  # gravity on z, in g
                path = root / split / f"{activity}_{subject}.txt"
                path.parent.mkdir(parents=True, exist_ok=True)
                with open(path, "w", encoding="utf-8") as fh:
                    for row in zip(x, y, z):
                        fh.write(" ".join(f"{v:.6f}" for v in row) + "\n")


def write_twentydirs_csv():
    root = DATASETS / "twentydirs_csv"
    rng = np.random.default_rng(2024_02)
    n, rate = 100, 20.0  # 5 s at 20 Hz, linear acceleration in m/s²
    quiet = {"STANDING", "SITTING", "LYING"}
    spiky = {a for a in TWENTY_ACTIVITIES if a.startswith("FALL_") or a == "STUMBLE"}
    for i, activity in enumerate(TWENTY_ACTIVITIES):
        if activity in quiet:
            freq, amp = 0.0, 0.0
        elif activity in spiky:
            freq, amp = 4.0, 8.0
        else:
            freq = 0.8 + (i % 5) * 0.5
            amp = 1.0 + (i % 4) * 0.8
        for subject in ("p01", "p02"):
            x = activity_wave(rng, n, rate, freq, amp, 0.1) if amp else rng.normal(0, 0.1, n)
            y = rng.normal(0, 0.1, n)
            z = rng.normal(0, 0.1, n)
            if activity == "TRANSITION" and subject == "p01":
                # mixed-label file: the row labels change halfway through
                labels = ["STANDING"] * (n // 2) + ["TRANSITION"] * (n - n // 2)
            else:
                labels = [activity] * n
            path = root / activity / f"{subject}_t1.csv"
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8") as fh:
                fh.write("x,y,z,label\n")
                for xv, yv, zv, label in zip(x, y, z, labels):
                    fh.write(f"{xv:.5f},{yv:.5f},{zv:.5f},{label}\n")


def write_logger_counts():
    root = DATASETS / "logger_counts"
    rng = np.random.default_rng(2024_03)
    n, rate = 250, 50.0  # 5 s at 50 Hz, raw counts at 0.0039 g/count
    recordings = {
        ("p1", "a"): [(0, 125, "gehen"), (125, 250, "stehen")],
        ("p1", "b"): [(0, 250, "gehen")],
        ("p2", "a"): [(0, 250, "drehen")],
    }

    def comma(v: float) -> str:
        return f"{v:.6f}".replace(".", ",")

    for (subject, trial), spans in recordings.items():
        t = np.arange(n) / rate
        x = 30 * np.sin(2 * np.pi * 1.2 * t) + rng.normal(0, 3, n)
        y = rng.normal(0, 3, n)
        z = 256 + rng.normal(0, 3, n)  # ≈ 1 g in counts
        data_path = root / "data" / f"{subject}_{trial}.csv"
        data_path.parent.mkdir(parents=True, exist_ok=True)
        with open(data_path, "w", encoding="utf-8") as fh:
            fh.write("t;x;y;z\n")
            for ti, xi, yi, zi in zip(t, x, y, z):
                fh.write(";".join(comma(v) for v in (ti, xi, yi, zi)) + "\n")
        label_path = root / "labels" / f"{subject}_{trial}.csv"
        label_path.parent.mkdir(parents=True, exist_ok=True)
        with open(label_path, "w", encoding="utf-8") as fh:
            fh.write("start,end,label\n")
            for start, end, label in spans:
                fh.write(f"{start},{end},{label}\n")


if __name__ == "__main__":
    write_twosplit_txt()
    write_twentydirs_csv()
    write_logger_counts()
    total = sum(1 for _ in DATASETS.rglob("*") if _.is_file())
    print(f"wrote {total} fixture files under {DATASETS}")
