"""Smoke test for the Python bindings.

Build and install first: pip install maturin && maturin develop -m crates/python/Cargo.toml
"""

import math
import os
import tempfile

import trustaug_py as ta


def main():
    fs = 60.0
    two_tone = ta.Signal([math.cos(2 * math.pi * 0.3 * n / fs) + math.cos(2 * math.pi * 0.8 * n / fs) for n in range(400)], fs)
    modes, centers = ta.decompose(two_tone, k_modes=2)
    assert len(modes) == 2 and len(modes[0]) == 400
    centers = sorted(centers)
    assert abs(centers[0] - 0.3) < 0.015 and abs(centers[1] - 0.8) < 0.04, centers

    ring = ta.Signal([math.exp(-0.2 * n / fs) * math.cos(2 * math.pi * 0.8 * n / fs) for n in range(400)], fs)
    f, sigma, _, _ = min(ta.prony_fit(ring, 2), key=lambda m: abs(m[0] - 0.8))
    assert abs(f - 0.8) < 5e-3 and abs(sigma + 0.2) < 5e-3

    line = ta.Signal([2.0 + 0.5 * n / fs for n in range(100)], fs)
    assert max(abs(v) for v in ta.detrend(line).samples) < 1e-12

    signals, labels = ta.gen_dataset(60, seed=3)
    assert set(labels) == {"stable", "unstable"}
    report = ta.label(ta.detrend(signals[0]))
    assert report["label"] in ("stable", "unstable")

    aug = [ta.augment(s) for s in signals]
    x = [ta.detrend(s).samples for s in signals[:30]]
    y = [ta.detrend(s).samples for s in signals[30:]]
    same = ta.mmd_test(x, y, alpha=0.05)
    assert same["verdict_rademacher"] == "not-rejected", same
    assert abs(ta.rademacher_bound(100, 0.05) - 0.4876) < 1e-3

    model = ta.EncoderModel("desk", seed=1)
    losses = model.train(aug, labels, epochs=2)
    assert len(losses) == 2 and all(math.isfinite(v) for v in losses)
    probs = model.predict_proba(aug[:5])
    assert all(0.0 <= p <= 1.0 for p in probs)
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "model.json")
        model.save(path)
        again = ta.EncoderModel.load(path)
        assert again.checksum == model.checksum
        assert again.predict(aug[:5]) == model.predict(aug[:5])

    try:
        ta.Signal([], fs)
    except ValueError:
        pass
    else:
        raise AssertionError("empty signal accepted")
    print("python smoke test passed")


if __name__ == "__main__":
    main()
