"""Smoke test for the metrics_ci extension module.

Build and install first:

    pip install maturin
    maturin develop -m crates/python/Cargo.toml   # or: maturin build + pip install
    python python/smoke_test.py
"""

import math

import metrics_ci as mc


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    close(mc.normal_cdf(0.0), 0.5, 0.0)
    close(mc.z_from_level(0.95), 1.959964, 5e-6)
    close(mc.level_from_z(1.0), 0.6826895, 1e-6)
    close(mc.normal_quantile(mc.normal_cdf(1.3)), 1.3, 1e-9)

    ci = mc.normal_approx_ci(3533, 3925, 1.0)
    close(ci.half_width, 0.0047858089837643, 1e-12)
    assert ci.method == "NormalApprox" and ci.n == 3925
    assert ci.lower <= ci.point <= ci.upper
    assert ci.overlaps(ci)

    fold = mc.fold_sample_ci([0.88, 0.90, 0.92], 1.0)
    close(fold.half_width, 0.02, 1e-12)
    assert fold.n is None

    stats = mc.sample_stats([0.0, 1.0])
    close(stats.std, math.sqrt(0.5), 1e-12)

    r = mc.mcnemar(15, 5)
    assert r.statistic == 4.05
    close(r.p_exact, 0.0413895, 1e-6)

    csv = (
        "model,fold,seed,sample_id,label,prediction\n"
        "a,0,0,s1,cat,cat\n"
        "a,0,0,s2,dog,cat\n"
        "b,0,0,s1,cat,cat\n"
        "b,0,0,s2,dog,dog\n"
    )
    assert mc.aggregate_accuracy(csv) == [("a", 1, 2, 0.5), ("b", 2, 2, 1.0)]

    labels = [(f"s{i}", f"c{i % 2}") for i in range(10)]
    folds, undersized = mc.stratified_folds(labels, 5, seed=1)
    assert sorted(folds) == [0, 0, 1, 1, 2, 2, 3, 3, 4, 4] and undersized == []

    edges, counts = mc.histogram([0.0, 1.0, 2.0, 3.0], 2)
    assert edges == [0.0, 1.5, 3.0] and counts == [2, 2]
    _, _, mu, sigma, dev = mc.qq_gaussian([0.88, 0.90, 0.92])
    close(mu, 0.9, 1e-12)

    coverage, nominal = mc.simulate_coverage(0.9, 3925, z=1.0, trials=20000, rng_seed=1)
    close(coverage, nominal, 0.02)
    accs, approx, std, ratio, clamps = mc.simulate_multiseed(tau=0.01, seeds=6, rng_seed=2)
    assert len(accs) == 120 and clamps == 0 and ratio > 0

    svg = mc.render_error_bar_svg("demo", [("a", 0.9, 0.01, 0.02)])
    assert svg.startswith("<?xml") and 'class="whisker primary"' in svg

    try:
        mc.normal_approx_ci(11, 10)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")

    print("metrics_ci smoke test: ok")


if __name__ == "__main__":
    main()
