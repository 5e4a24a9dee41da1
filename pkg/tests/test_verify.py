import time

from overlap_lab import verify


def test_full_suite_passes():
    t0 = time.perf_counter()
    results = verify.run()
    assert time.perf_counter() - t0 < 300
    assert all(r.passed for r in results), verify.format_table(results)


def test_registry_covers_identity_families():
    names = set(verify.REGISTRY)
    for needed in ("wronskian", "airy product relation", "airy derivative relation",
                   "deformed Airy contour vs closed form", "diffusion equation",
                   "scorer closed form vs integral", "scorer differential equation",
                   "moment recurrences", "finite-N sums vs contour integrals",
                   "t-marginal identity", "bridge limits"):
        assert needed in names


def test_crashing_check_is_reported(monkeypatch):
    def boom(quick):
        raise RuntimeError("broken")

    monkeypatch.setitem(verify.REGISTRY, "wronskian", verify.Check("wronskian", 1e-12, boom))
    res = verify.run(quick=True, names={"wronskian"})
    assert len(res) == 1 and not res[0].passed and "broken" in res[0].detail
