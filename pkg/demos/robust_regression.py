"""Fit a corrupted 1D dataset with a Gaussian and a Student-t model.

A fifth of the observations are replaced by junk values in [1, 2].  The
exact GP gets dragged toward them; the heavy-tailed model shrugs them
off, and the residual classifier recovers exactly the injected points.
Run with:  python3 demos/robust_regression.py
"""

import numpy as np

from robustbo import (
    Dataset,
    classify_outliers,
    fit_exact,
    fit_laplace,
    matern52_spec,
    predict_latent,
    sample_gp_function,
)
from robustbo.gp_exact import predict


def main():
    rng = np.random.default_rng(3)
    draw = sample_gp_function(matern52_spec([0.3]), seed=3)
    X = rng.random((40, 1))
    f_true = np.array([draw(x) for x in X])
    y = f_true.copy()
    injected = rng.random(40) < 0.2
    y[injected] = rng.uniform(1.0, 2.0, size=int(injected.sum()))
    print(f"{injected.sum()} of {y.size} observations corrupted")

    gauss = fit_exact(X, y, seed=0)
    robust = fit_laplace(X, y, restarts=2, seed=0)

    grid = np.linspace(0.0, 1.0, 9)[:, None]
    print("\n  x     true    gaussian  heavy-tail")
    for x in grid:
        g = predict(gauss, x).mean
        r, _ = predict_latent(robust, x)
        print(f"  {x[0]:.2f}  {draw(x):+7.3f}  {g:+8.3f}  {r:+9.3f}")

    err_g = [abs(predict(gauss, x).mean - draw(x)) for x in grid]
    err_r = [abs(predict_latent(robust, x)[0] - draw(x)) for x in grid]
    print(f"\nmean abs error on the grid: gaussian {np.mean(err_g):.3f}, "
          f"heavy-tail {np.mean(err_r):.3f}")

    dataset = Dataset(np.array([[0.0, 1.0]]), X, y)
    out = classify_outliers(dataset, robust, quantile=0.05)
    hits = (out.flags & injected).sum()
    print(f"classifier flagged {out.flags.sum()} points, "
          f"{hits} of {injected.sum()} injected ones among them")


if __name__ == "__main__":
    main()
