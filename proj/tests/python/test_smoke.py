import random

import pytest

import obnn


def test_popcount_counts_and_bounds():
    assert obnn.popcount_gates("ta", 256)[0] == 2 * 255 - 8
    lo, hi = obnn.lba_bounds(500)
    assert lo <= obnn.popcount_gates("lba", 500)[0] <= hi
    assert obnn.popcount_gates("blb", 3)[0] == 1


def test_model_bytes_round_trip(data):
    raw = (data / "toy2d.fbnn").read_bytes()
    m = obnn.Model.from_bytes(raw)
    assert m.to_bytes() == raw
    assert m.input_shape == "8x8x1"
    assert m.class_count == 4


def test_bad_magic():
    with pytest.raises(obnn.ParseError, match="bad magic"):
        obnn.Model.from_bytes(b"XXXX" + bytes(16))


def test_garbled_matches_plain(data):
    rng = random.Random(3)
    for name in ("toy1d", "toy2d", "fc_sparse"):
        m = obnn.Model.load(str(data / f"{name}.fbnn"))
        x = [rng.choice((-1, 1)) for _ in range(m.input_size)]
        want = obnn.plain_infer(m, x)
        for kind in ("ta", "blb", "lba"):
            r = obnn.garbled_infer(m, x, kind, "stub")
            assert r["scores"] == want
            assert r["evaluator"]["rounds"] == 4
    r = obnn.garbled_infer(m, x, "lba", "simplest")
    assert r["scores"] == want


def test_compile_report_ordering():
    m = obnn.Model.random("1x300", "fc:4,out:2", 0.0, 9)
    ta = obnn.compile_report(m, "ta")["total"]
    lba = obnn.compile_report(m, "lba")["total"]
    assert ta > lba


def test_verify_and_quantize():
    m = obnn.Model.random("12x2", "conv1d:2:3,out:2", 0.2, 4)
    assert obnn.verify(m, 5)["passed"]
    assert obnn.quantize_threshold(1.0, 0.0, 4) == 2
    with pytest.raises(obnn.ValidationError):
        obnn.quantize_threshold(-1.0, 0.0, 4)


def test_costs_and_explore(data):
    assert obnn.conv1d_cost(8, 4, 2, 3) == 192
    assert obnn.conv2d_cost(4, 4, 1, 2, 3, 3) == 288
    arch = (data / "cbn1d.arch.json").read_text()
    base = obnn.arch_cost(arch)
    variants = obnn.explore(arch)
    assert len(variants) >= 3
    assert all(total == base for _, total, _ in variants)
