"""Smoke test for the polar_awgn_py extension module.

Build and install first, e.g.

    pip install maturin
    maturin develop -m crates/python/Cargo.toml

then run `python python/smoke_test.py`.
"""

import json
import math
import os
import tempfile

import polar_awgn_py as pa


def main():
    # Rows of G_4 = [[1,0],[1,1]] ⊗ [[1,0],[1,1]].
    assert pa.polar_transform([1, 0, 0, 0]) == [1, 0, 0, 0]
    assert pa.polar_transform([0, 1, 0, 0]) == [1, 1, 0, 0]
    assert pa.polar_transform([0, 0, 1, 0]) == [1, 0, 1, 0]
    assert pa.polar_transform([0, 0, 0, 1]) == [1, 1, 1, 1]

    c = pa.Constellation(4, 1.0)
    assert c.levels == 2
    assert abs(c.shaping_variance - (1 - 4 ** (-1 / pa.BETA))) < 1e-15
    amps = c.amplitudes()
    assert amps[0] == 0.0 and amps[2] == 0.0 and amps[1] == -amps[3]
    assert c.quantize(0.2) == 0.0

    cap = pa.channel_capacity(1.0)
    assert abs(cap - 0.5) < 1e-12
    mi = c.mutual_information()
    assert 0.0 < mi < cap
    levels = sum(c.level_mutual_information(i) for i in (1, 2))
    assert abs(levels - mi) < 1e-6

    c16 = pa.Constellation(16, 16.0)
    table = pa.ReliabilityTable.estimate(c16, 500, seed=3)
    assert table.n == 16 and table.levels == 4
    z = table.z_means()
    assert all(0.0 <= v <= 1.0 for row in z for v in row)
    spec = pa.CodeSpec.select(c16, table, rule="rate", rate=1.0, seed=3)
    assert spec.rate == 1.0
    assert sum(len(s) for s in spec.info_sets()) == 16

    again = pa.CodeSpec.from_json(spec.to_json())
    assert again.digest() == spec.digest()
    assert json.loads(spec.to_json())["n"] == 16

    rec = spec.trial(0)
    assert len(rec["sent_symbols"]) == 16
    assert sum(x * x for x in rec["sent_symbols"]) / 16 <= 16.0

    rep = spec.simulate(200, workers=1)
    assert rep["trials"] == 200 and 0 <= rep["errors"] <= 200
    assert rep == spec.simulate(200, workers=2)

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "table.csv")
        table.write_csv(path)
        back = pa.ReliabilityTable.read_csv(path)
        assert back.z_means() == z

    lhs, rhs, holds = pa.quantization_bound_check(64, 1.0, 0.0)
    assert holds and lhs <= rhs

    mu, slope, r2 = pa.scaling_fit([64, 128, 256], [n ** (-1 / pa.BETA) for n in (64, 128, 256)])
    assert abs(mu - pa.BETA) < 1e-9 and abs(r2 - 1) < 1e-12

    assert abs(pa.h2_inv(0.5) - 0.110028) < 1e-6
    assert math.isfinite(pa.md_threshold(1024, 0.5))

    try:
        pa.Constellation(12, 1.0)
    except ValueError as e:
        assert "power of two" in str(e)
    else:
        raise AssertionError("n = 12 accepted")

    print("polar_awgn_py smoke test passed")


if __name__ == "__main__":
    main()
