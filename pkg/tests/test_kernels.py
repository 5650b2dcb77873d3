"""Backend selection and numba/numpy kernel equivalence."""

import math

import numpy as np
import pytest

from mqsvis import kernels
from mqsvis.kernels import backend_name, blur_block, bs_log_grid, th_log_grid
from mqsvis.preselect import (
    BeamSplitter,
    Theoretical,
    build_model,
    log_p_bs,
    log_p_th,
)
from mqsvis.series import PrecisionConfig
from mqsvis.specfun import LOG_ZERO
from mqsvis.indicators import model_log_grid


class TestBackendName:
    def test_auto_prefers_numba_when_available(self, monkeypatch):
        monkeypatch.delenv("MQSVIS_BACKEND", raising=False)
        want = "numba" if kernels.HAS_NUMBA else "numpy"
        assert backend_name() == want

    def test_explicit_numpy(self, monkeypatch):
        monkeypatch.setenv("MQSVIS_BACKEND", "numpy")
        assert backend_name() == "numpy"

    def test_whitespace_and_case_tolerated(self, monkeypatch):
        monkeypatch.setenv("MQSVIS_BACKEND", "  NumPy ")
        assert backend_name() == "numpy"

    def test_unknown_value_rejected(self, monkeypatch):
        monkeypatch.setenv("MQSVIS_BACKEND", "gpu")
        with pytest.raises(ValueError):
            backend_name()

    def test_numba_requested_but_missing(self, monkeypatch):
        monkeypatch.setenv("MQSVIS_BACKEND", "numba")
        monkeypatch.setattr(kernels, "HAS_NUMBA", False)
        with pytest.raises(RuntimeError):
            backend_name()

    def test_auto_falls_back_without_numba(self, monkeypatch):
        monkeypatch.delenv("MQSVIS_BACKEND", raising=False)
        monkeypatch.setattr(kernels, "HAS_NUMBA", False)
        assert backend_name() == "numpy"


needs_numba = pytest.mark.skipif(not kernels.HAS_NUMBA, reason="numba not importable")


@needs_numba
class TestBackendEquivalence:
    def test_th_grid_close(self, gain5, monkeypatch):
        # libm lgamma (compiled path) and CPython's lgamma differ by an
        # ulp at integer arguments, so cross-backend equality is a few ulp
        args = (-2, 24, -3, 25, 1, gain5)
        monkeypatch.setenv("MQSVIS_BACKEND", "numba")
        nb = th_log_grid(*args)
        monkeypatch.setenv("MQSVIS_BACKEND", "numpy")
        np_ = th_log_grid(*args)
        assert np.array_equal(nb == LOG_ZERO, np_ == LOG_ZERO)
        live = nb > LOG_ZERO
        assert np.allclose(nb[live], np_[live], rtol=1e-13, atol=1e-13)

    def test_th_grid_deterministic_per_backend(self, gain5, monkeypatch):
        for backend in ("numba", "numpy"):
            monkeypatch.setenv("MQSVIS_BACKEND", backend)
            first = th_log_grid(0, 30, 0, 30, 1, gain5)
            second = th_log_grid(0, 30, 0, 30, 1, gain5)
            assert np.array_equal(first, second)

    def test_bs_grid_close(self, gain5, bs01, monkeypatch):
        prec = PrecisionConfig()
        args = (-2, 20, -1, 18, 2, gain5, bs01, prec)
        monkeypatch.setenv("MQSVIS_BACKEND", "numba")
        nb = bs_log_grid(*args)
        monkeypatch.setenv("MQSVIS_BACKEND", "numpy")
        np_ = bs_log_grid(*args)
        assert nb.shape == np_.shape
        both = (nb > LOG_ZERO) & (np_ > LOG_ZERO)
        assert np.array_equal(nb > LOG_ZERO, np_ > LOG_ZERO)
        assert np.allclose(nb[both], np_[both], rtol=0.0, atol=5e-12)

    def test_blur_block_bitwise(self, monkeypatch):
        rng = np.random.default_rng(2718)
        nk, nl, width = 12, 9, 7
        ext = rng.random((nk + width - 1, nl + width - 1))
        w = np.exp(-np.linspace(-3.0, 3.0, width) ** 2)
        monkeypatch.setenv("MQSVIS_BACKEND", "numba")
        nb = blur_block(ext, w, nk, nl, 0.25)
        monkeypatch.setenv("MQSVIS_BACKEND", "numpy")
        np_ = blur_block(ext, w, nk, nl, 0.25)
        assert np.array_equal(nb, np_)


class TestThGrid:
    def test_negative_and_parity_cells_empty(self, gain5):
        grid = th_log_grid(-2, 6, -1, 5, 0, gain5)
        # rows are k in [-2, 4), columns l in [-1, 4)
        assert np.all(grid[0] == LOG_ZERO)  # k = -2
        assert np.all(grid[2] == LOG_ZERO)  # k = 0 even
        assert np.all(grid[:, 0] == LOG_ZERO)  # l = -1
        assert np.all(grid[:, 2] == LOG_ZERO)  # l = 1 odd
        assert grid[3, 1] > LOG_ZERO  # (k, l) = (1, 0)

    def test_matches_scalar_distribution(self, gain5):
        model = build_model(gain5, Theoretical(2))
        grid = model_log_grid(model, 0, 12, 0, 12)
        for k in range(12):
            for l in range(12):
                want = log_p_th(k, l, model)
                got = grid[k, l]
                if want == LOG_ZERO:
                    assert got == LOG_ZERO
                else:
                    assert got == pytest.approx(want, abs=1e-12 * (1.0 + abs(want)))

    def test_gate_threshold_applies(self, gain5):
        gated = th_log_grid(0, 8, 0, 8, 2, gain5)
        assert gated[1, 0] == LOG_ZERO  # (i, j) = (0, 0) below shell 2
        assert gated[3, 0] == LOG_ZERO  # shell 1
        assert gated[5, 0] > LOG_ZERO  # shell 2


class TestBsGrid:
    def test_matches_scalar_distribution(self, gain5, bs01):
        model = build_model(gain5, BeamSplitter(2, bs01))
        grid = model_log_grid(model, 0, 10, 0, 10)
        for k in range(0, 10, 3):
            for l in range(0, 10, 3):
                want = log_p_bs(k, l, model)
                got = grid[k, l]
                if want == LOG_ZERO:
                    assert got == LOG_ZERO
                else:
                    assert got == pytest.approx(want, abs=1e-11 * (1.0 + abs(want)))

    def test_negative_rows_empty(self, gain5, bs01):
        grid = bs_log_grid(-3, 5, -2, 4, 1, gain5, bs01, PrecisionConfig())
        assert np.all(grid[:3] == LOG_ZERO)
        assert np.all(grid[:, :2] == LOG_ZERO)
        assert grid[3, 2] > LOG_ZERO  # (k, l) = (0, 0)


class TestBlurBlock:
    def test_delta_center_weight(self):
        width = 2 * 3 + 1
        w = np.exp(-np.arange(-3, 4, dtype=float) ** 2 / 2.0)
        ext = np.zeros((width + 4, width + 4))
        ext[5, 5] = 1.0
        pre = 1.0 / (2.0 * math.pi)
        out = blur_block(ext, w, 5, 5, pre)
        # the delta lands at core position (2, 2): kernel center weight
        assert out[2, 2] == pytest.approx(pre * w[3] * w[3], rel=1e-14)

    def test_constant_field_window_mass(self):
        w = np.exp(-np.arange(-4, 5, dtype=float) ** 2 / 8.0)
        pre = 0.125
        c = 0.37
        ext = np.full((6 + 8, 7 + 8), c)
        out = blur_block(ext, w, 6, 7, pre)
        mass = pre * float(np.sum(w)) ** 2
        assert np.allclose(out, c * mass, rtol=1e-13)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            blur_block(np.zeros((4, 4)), np.ones(3), 4, 4, 1.0)
