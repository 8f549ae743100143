"""
Test motore parallelo: partizione, trasformate nel tempo, determinismo al variare di p
"""
import sys
import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dense_oracles import dense_time_dft, relative_error
from src.exceptions import DimensionMismatchError, LayoutMismatchError
from src.fem1d import SpatialGrid, TriDiagMatrix, assemble_mass, assemble_stiffness
from src.operators import BlockStencil, build_heat
from src.parallel import (
    ChunkedVector,
    Direction,
    Layout,
    ParallelEngine,
    Strategy,
    dft_apply,
    fft_apply,
    frequency_solve,
    time_transform,
    vector_transpose,
)
from src.precond import apply_inverse, build_circulant
from src.timegrid import TimeGrid
from test_operators import make_operator


@given(workers=st.integers(min_value=1, max_value=16), count=st.integers(min_value=0, max_value=200))
@settings(max_examples=80, deadline=None)
def test_partition_covers_each_index_once(workers, count):
    engine = ParallelEngine(workers)
    try:
        ranges = engine.partition(count)
        covered = [i for lo, hi in ranges for i in range(lo, hi)]
        assert covered == list(range(count))
        sizes = [hi - lo for lo, hi in ranges]
        if sizes:
            assert max(sizes) - min(sizes) <= 1
            assert sizes == sorted(sizes, reverse=True)
    finally:
        engine.close()


def test_remainder_goes_to_first_ranks():
    with ParallelEngine(3) as engine:
        assert engine.partition(8) == [(0, 3), (3, 6), (6, 8)]


def test_single_worker_runs_inline():
    seen = []
    with ParallelEngine(1) as engine:
        engine.run(lambda lo, hi: seen.append((threading.get_ident(), lo, hi)), 10)
    assert seen == [(threading.get_ident(), 0, 10)]


def test_engine_is_not_reentrant():
    with ParallelEngine(1) as engine:
        def nested(lo, hi):
            engine.run(lambda a, b: None, 4)

        with pytest.raises(RuntimeError):
            engine.run(nested, 4)
        engine.run(lambda lo, hi: None, 4)


def test_worker_exceptions_propagate():
    def boom(lo, hi):
        raise ZeroDivisionError("worker")

    with ParallelEngine(3) as engine:
        with pytest.raises(ZeroDivisionError):
            engine.run(boom, 9)


def test_invalid_engine_settings():
    with pytest.raises(ValueError):
        ParallelEngine(0)
    with pytest.raises(ValueError):
        ParallelEngine(1, strategy="mpi")


def test_chunked_vector_from_flat():
    cv = ChunkedVector.from_flat(np.arange(6.0), 2, 3)
    assert cv.layout is Layout.TIME_MAJOR
    assert (cv.n, cv.ell) == (2, 3)
    with pytest.raises(DimensionMismatchError):
        ChunkedVector.from_flat(np.arange(5.0), 2, 3)


def test_vector_transpose_example():
    with ParallelEngine(2) as engine:
        z = ChunkedVector.from_flat(np.arange(1.0, 7.0), 2, 3)
        x = vector_transpose(engine, z)
    assert x.layout is Layout.SPACE_MAJOR
    assert x.flat().tolist() == [1.0, 3.0, 5.0, 2.0, 4.0, 6.0]
    assert (x.n, x.ell) == (2, 3)


@given(n=st.integers(min_value=1, max_value=9), ell=st.integers(min_value=1, max_value=9), workers=st.integers(1, 4))
@settings(max_examples=30, deadline=None)
def test_double_transpose_is_identity(n, ell, workers):
    data = np.random.default_rng(n * 31 + ell).standard_normal(n * ell)
    with ParallelEngine(workers) as engine:
        z = ChunkedVector.from_flat(data, n, ell)
        back = vector_transpose(engine, vector_transpose(engine, z))
    assert back.layout is Layout.TIME_MAJOR
    assert np.array_equal(back.flat(), data)


def test_dft_single_step_is_identity():
    data = np.array([1.5, -2.0, 3.0])
    with ParallelEngine(1) as engine:
        for direction in Direction:
            out = dft_apply(engine, direction, ChunkedVector.from_flat(data, 3, 1))
            assert np.allclose(out.flat(), data, atol=0)


def test_dft_matches_dense_kronecker():
    n, ell = 2, 4
    z = np.random.default_rng(0).standard_normal(n * ell)
    with ParallelEngine(2) as engine:
        fwd = dft_apply(engine, Direction.FORWARD, ChunkedVector.from_flat(z, n, ell))
        inv = dft_apply(engine, Direction.INVERSE, ChunkedVector.from_flat(z, n, ell))
    assert relative_error(fwd.flat(), dense_time_dft(ell, n) @ z) < 1e-13
    assert relative_error(inv.flat(), dense_time_dft(ell, n, inverse=True) @ z) < 1e-13


@pytest.mark.parametrize("ell", [1, 5, 16, 30])
def test_dft_round_trip(ell):
    n = 3
    z = np.random.default_rng(ell).standard_normal(n * ell)
    with ParallelEngine(3) as engine:
        fwd = dft_apply(engine, Direction.FORWARD, ChunkedVector.from_flat(z, n, ell))
        back = dft_apply(engine, Direction.INVERSE, fwd)
    assert relative_error(back.flat().real, z) < 1e-12
    assert np.max(np.abs(back.flat().imag)) < 1e-12


def test_layout_mismatch():
    z = ChunkedVector.from_flat(np.ones(6), 2, 3)
    with ParallelEngine(1) as engine:
        with pytest.raises(LayoutMismatchError):
            fft_apply(engine, Direction.FORWARD, z)
        x = vector_transpose(engine, z)
        with pytest.raises(LayoutMismatchError):
            dft_apply(engine, Direction.FORWARD, x)


def test_fft_of_constant_is_zero_frequency():
    ell = 12
    with ParallelEngine(2) as engine:
        x = vector_transpose(engine, ChunkedVector.from_flat(np.ones(2 * ell), 2, ell))
        y = fft_apply(engine, Direction.FORWARD, x).data
    assert np.allclose(y[:, 0], np.sqrt(ell))
    assert np.allclose(y[:, 1:], 0.0, atol=1e-12)


@pytest.mark.parametrize("ell", [48, 96, 1024, 1440])
def test_fft_matches_rowsplit(ell):
    n = 4
    z = np.random.default_rng(ell).standard_normal(n * ell)
    cv = ChunkedVector.from_flat(z, n, ell)
    for direction in Direction:
        with ParallelEngine(2, Strategy.ROW_SPLIT_DFT) as rowsplit:
            a = time_transform(rowsplit, direction, cv)
        with ParallelEngine(2, Strategy.TRANSPOSE_FFT) as fft:
            b = time_transform(fft, direction, cv)
        assert b.layout is Layout.TIME_MAJOR
        assert relative_error(b.flat(), a.flat()) < 1e-11


def test_frequency_solve_identity_symbols():
    n, ell = 3, 6
    eye = TriDiagMatrix.from_constants(n, 0.0, 1.0, 0.0)
    P = build_circulant(BlockStencil(blocks=((0, eye),)), ell)
    rng = np.random.default_rng(1)
    zhat = ChunkedVector(rng.standard_normal((ell, n)) + 1j * rng.standard_normal((ell, n)), Layout.TIME_MAJOR)
    with ParallelEngine(2) as engine:
        out = frequency_solve(engine, P, zhat)
    assert np.array_equal(out.data, zhat.data)


def test_frequency_solve_bitwise_across_workers():
    op = make_operator("wave_bd2", 9, 13)
    P = build_circulant(op.stencil, 13)
    rng = np.random.default_rng(2)
    zhat = ChunkedVector(rng.standard_normal((13, 9)) + 1j * rng.standard_normal((13, 9)), Layout.TIME_MAJOR)
    results = []
    for p in (1, 2, 4):
        with ParallelEngine(p) as engine:
            results.append(frequency_solve(engine, P, zhat).data)
    assert all(np.array_equal(results[0], r) for r in results[1:])


def test_transform_solve_transform_matches_dense_inverse():
    from dense_oracles import dense_circulant

    op = make_operator("heat", 2, 4)
    P = build_circulant(op.stencil, 4)
    z = np.random.default_rng(3).standard_normal(8)
    with ParallelEngine(2) as engine:
        zhat = dft_apply(engine, Direction.INVERSE, ChunkedVector.from_flat(z, 2, 4))
        y = dft_apply(engine, Direction.FORWARD, frequency_solve(engine, P, zhat))
    assert relative_error(y.flat().real, np.linalg.solve(dense_circulant(op.stencil, 4), z)) < 1e-10


@pytest.mark.parametrize("kind", ["heat", "wave_bd2", "wave_bd4"])
def test_apply_inverse_bitwise_across_workers(kind):
    op = make_operator(kind, 10, 21)
    P = build_circulant(op.stencil, 21)
    z = np.random.default_rng(4).standard_normal(210)
    outputs = []
    for p in (1, 2, 4):
        with ParallelEngine(p, Strategy.ROW_SPLIT_DFT) as engine:
            outputs.append(apply_inverse(P, z, engine))
    assert all(np.array_equal(outputs[0], o) for o in outputs[1:])


@pytest.mark.slow
@pytest.mark.parametrize("ell", [768, 1024, 1440])
def test_strategies_agree_on_preconditioner(ell):
    n = 64
    grid = SpatialGrid(n)
    op = build_heat(assemble_mass(grid), assemble_stiffness(grid), TimeGrid.uniform(ell))
    P = build_circulant(op.stencil, ell)
    z = np.random.default_rng(ell).standard_normal(n * ell)
    with ParallelEngine(4, Strategy.ROW_SPLIT_DFT) as rowsplit:
        a = apply_inverse(P, z, rowsplit)
    with ParallelEngine(4, Strategy.TRANSPOSE_FFT) as fft:
        b = apply_inverse(P, z, fft)
    assert relative_error(b, a) < 1e-11


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
