"""Regenerate the shipped model and synthetic motion fixtures.

    python scripts/make_fixtures.py
"""
from pathlib import Path

from torquescore.motion import MotionSequence, save_motion
from torquescore.rigidbody import save_model
from torquescore.synthetic import (
    SYNTHETIC_MOTIONS,
    build_default_humanoid,
    build_double_pendulum,
    build_pendulum,
)

DATA = Path(__file__).resolve().parents[1] / "src" / "torquescore" / "data"


def main():
    models = DATA / "models"
    motions = DATA / "motions"
    models.mkdir(parents=True, exist_ok=True)
    motions.mkdir(parents=True, exist_ok=True)
    humanoid = build_default_humanoid()
    save_model(humanoid, models / "default_humanoid.model",
               "default humanoid v1: SMPL 24-joint topology, 70 kg, solid-ellipsoid segment inertias\n"
               "generated by scripts/make_fixtures.py")
    save_model(build_pendulum(), models / "pendulum1.model", "point-mass pendulum, m=1 kg, l=1 m")
    save_model(build_double_pendulum(), models / "double_pendulum.model",
               "planar double pendulum, point masses 1 kg, links 1 m")
    for name, make in SYNTHETIC_MOTIONS.items():
        save_motion(MotionSequence(30.0, make(humanoid), name), motions / f"{name}.motion")
    print(f"wrote fixtures under {DATA}")


if __name__ == "__main__":
    main()
