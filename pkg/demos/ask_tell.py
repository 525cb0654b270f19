"""Drive the optimizer one evaluation at a time (ask/tell style).

The objective is a smooth 1D function whose measurement occasionally
fails and returns garbage; the scheduled detection pass flags those
readings so the incumbent stays honest.
Run with:  python3 demos/ask_tell.py
"""

import numpy as np

from robustbo import BOConfig, Schedule, new_state, suggest, tell


def measure(x, rng):
    value = float((x[0] - 0.62) ** 2 + 0.15 * np.sin(9.0 * x[0]))
    if rng.random() < 0.15:  # sensor glitch
        return value + rng.uniform(1.0, 2.0), True
    return value, False


def main():
    config = BOConfig(
        dimension=1,
        bounds=np.array([[0.0, 1.0]]),
        budget=25,
        n_init=5,
        seed=1,
        robust_enabled=True,
        schedule=Schedule(warmup_fraction=0.3, period=4),
    )
    state = new_state(config)
    rng = np.random.default_rng(7)

    for t in range(config.budget):
        x = suggest(state, config)
        y, glitched = measure(x, rng)
        tell(state, x, y)
        note = "  <- glitch" if glitched else ""
        print(f"iter {t:2d}  x={x[0]:.3f}  y={y:+.3f}  "
              f"best={state.incumbent_value:+.3f}{note}")

    flags = state.dataset.flags
    print(f"\n{flags.sum()} observations flagged as outliers")
    print(f"best point x={state.incumbent_point[0]:.3f}, "
          f"value {state.incumbent_value:+.3f}")


if __name__ == "__main__":
    main()
