import os
import subprocess
import sys

import numpy as np
import pytest

from dcpv import kernels
from dcpv._pykernels import local_search as py_local_search
from dcpv.ndb import generate_ndb, pack_bits
from dcpv.security import _entry_arrays

from conftest import random_template

compiled = kernels.compiled_backend
needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled extension not built")
BACKENDS = [kernels.python_backend] + ([compiled] if compiled is not None else [])


def raw_reference(values, masks, query_bits):
    signed = np.where(masks, 2 * values.astype(np.int64) - 1, 0)
    return int((signed @ (2 * query_bits.astype(np.int64) - 1)).sum())


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.__name__.rsplit(".", 1)[-1])
class TestBackends:
    def test_packed_raw(self, backend, rng):
        for m in (1, 63, 64, 65, 200, 512):
            vals = rng.integers(0, 2, (m * 2, m), dtype=np.uint8)
            mask = rng.random((m * 2, m)) < 0.3
            vals &= mask
            q = rng.integers(0, 2, m, dtype=np.uint8)
            got = backend.packed_raw(pack_bits(vals), pack_bits(mask), pack_bits(q))
            assert got == raw_reference(vals, mask, q)
            assert backend.total_specified(pack_bits(mask)) == int(mask.sum())

    def test_packed_raw_many(self, backend, rng):
        vals = rng.integers(0, 2, (90, 70), dtype=np.uint8)
        mask = rng.random((90, 70)) < 0.5
        vals &= mask
        qs = rng.integers(0, 2, (12, 70), dtype=np.uint8)
        got = backend.packed_raw_many(pack_bits(vals), pack_bits(mask), pack_bits(qs))
        assert list(got) == [raw_reference(vals, mask, q) for q in qs]

    def test_local_search_zero_iterations(self, backend, rng):
        b = random_template(rng, 16)
        pos, val, m = _entry_arrays(generate_ndb(b, 1))
        start = rng.integers(0, 2, m, dtype=np.uint8)
        y, count, moves, trace = backend.local_search(pos, val, start, 0, m)
        assert np.array_equal(y, start) and moves == 0 and len(trace) == 1


@needs_compiled
class TestCompiledMatchesPython:
    def test_local_search_identical(self, rng):
        for m, seed in [(16, 1), (32, 2), (64, 3), (100, 4)]:
            b = random_template(rng, m)
            pos, val, _ = _entry_arrays(generate_ndb(b, seed))
            for _ in range(5):
                start = rng.integers(0, 2, m, dtype=np.uint8)
                a = compiled.local_search(pos, val, start, 1000, m)
                p = py_local_search(pos, val, start, 1000, m)
                assert np.array_equal(a[0], p[0])
                assert a[1:3] == p[1:3]
                assert list(a[3]) == list(p[3])


def test_pure_python_switch():
    code = "import dcpv.kernels as k; print(k.BACKEND_NAME)"
    env = dict(os.environ, DCPV_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True)
    assert out.stdout.strip() == "python"
