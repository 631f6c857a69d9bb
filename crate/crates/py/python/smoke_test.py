"""Exercise the compiled `attraos` module end to end.

Build and install first, e.g. `pip install maturin && maturin build -m crates/py/Cargo.toml`
followed by `pip install target/wheels/attraos-*.whl`.
"""

import json
import math

import attraos


def main():
    states = attraos.simulate_lorenz63(4000)
    assert len(states) == 4001 and len(states[0]) == 3
    x = [s[0] for s in states[1000:]]

    origin = attraos.simulate_lorenz63(100, x0=(0.0, 0.0, 0.0))
    assert all(v == 0.0 for s in origin for v in s)

    l96 = attraos.simulate_lorenz96(200, dim=8)
    obs = attraos.observe(l96, 3, seed=42)
    assert len(obs) == 201 and len(obs[0]) == 3
    try:
        attraos.simulate_lorenz96(10, dim=3)
    except ValueError:
        pass
    else:
        raise AssertionError("dim < 4 must be rejected")

    m, tau = attraos.select_embedding(x)
    assert m >= 2 and tau >= 1
    points = attraos.delay_embed(x, 3, 8)
    assert len(points) == len(x) - 16
    assert points[0] == [x[0], x[8], x[16]]

    mle, curve = attraos.max_lyapunov(x, 3, 16, horizon=40, fit_range=(5, 40))
    assert len(curve) == 41 and math.isfinite(mle) and mle > 0.0

    assert attraos.scan_deviation(257, n=8, d=4) <= 1e-10

    state, iters, energies = attraos.hopfield_retrieve([0.9, 0.1], [[1.0, 0.0], [0.0, 1.0]], beta=50.0)
    assert abs(state[0] - 1.0) < 1e-6 and iters <= 5
    assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))

    rows = [[v] for v in x]
    config = json.dumps({"embedding": {"m": 3, "tau": 8}, "window": 48, "horizon": 8, "patch_len": 4})
    model = attraos.Forecaster.fit(rows[:2500], config)
    assert (model.window, model.horizon, model.n_channels) == (48, 8, 1)
    forecast = model.predict(rows[:2600])
    assert len(forecast) == 8
    again = attraos.Forecaster.from_json(model.to_json()).predict(rows[:2600])
    assert again == forecast
    assert len(model.predict(rows[:2600], steps=20)) == 20
    mse = model.backtest_mse(rows[2500:], stride=10)
    assert math.isfinite(mse) and mse > 0.0
    try:
        attraos.Forecaster.fit(rows, '{"windw": 3}')
    except ValueError:
        pass
    else:
        raise AssertionError("unknown config keys must be rejected")

    print("smoke test passed: mle %.4f/step, backtest mse %.4f" % (mle, mse))


if __name__ == "__main__":
    main()
