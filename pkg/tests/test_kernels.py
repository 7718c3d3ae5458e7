import numpy as np
import pytest

from emprobe import _backend, _kernels_py

compiled = pytest.importorskip("emprobe._kernels", reason="extension not built")


def random_instance(rng, n, d):
    X = np.ascontiguousarray(rng.standard_normal((n, d)))
    s = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    w = rng.standard_normal(d)
    b = float(rng.standard_normal())
    C = float(10 ** rng.uniform(-2, 2))
    return X, s, w, b, C


class TestBackendEquivalence:
    def test_loss_grad_hessian_match(self, rng):
        for _ in range(40):
            n, d = int(rng.integers(2, 60)), int(rng.integers(1, 25))
            X, s, w, b, C = random_instance(rng, n, d)
            J1, g1, d1 = compiled.logistic_loss_grad(X, s, w, b, C)
            J2, g2, d2 = _kernels_py.logistic_loss_grad(X, s, w, b, C)
            assert J1 == pytest.approx(J2, rel=1e-10)
            assert np.allclose(g1, g2, rtol=1e-9, atol=1e-11)
            assert np.allclose(d1, d2, rtol=1e-12, atol=1e-15)
            H1 = compiled.logistic_hessian(X, d1, C)
            H2 = _kernels_py.logistic_hessian(X, d2, C)
            assert np.allclose(H1, H2, rtol=1e-9, atol=1e-11)
            assert np.all(H1 == H1.T)

    def test_logistic_value_matches(self, rng):
        z = rng.standard_normal(200) * 50
        v1 = compiled.logistic_value(np.ascontiguousarray(z))
        v2 = _kernels_py.logistic_value(z)
        assert v1 == pytest.approx(v2, rel=1e-12)

    def test_extreme_margins_stable(self):
        z = np.array([-800.0, -30.0, 0.0, 30.0, 800.0])
        v1 = compiled.logistic_value(z)
        v2 = _kernels_py.logistic_value(z)
        assert np.isfinite(v1) and v1 == pytest.approx(v2, rel=1e-12)


class TestRouting:
    def test_small_problems_use_compiled(self, monkeypatch):
        monkeypatch.delenv(_backend.KERNELS_ENV, raising=False)
        assert _backend.loss_grad_for(10, 3) is compiled.logistic_loss_grad
        assert _backend.hessian_for(10, 3) is compiled.logistic_hessian

    def test_large_problems_fall_back_to_numpy(self, monkeypatch):
        monkeypatch.delenv(_backend.KERNELS_ENV, raising=False)
        assert _backend.loss_grad_for(10_000, 500) is _kernels_py.logistic_loss_grad
        assert _backend.hessian_for(500, 600) is _kernels_py.logistic_hessian

    def test_env_forces_python(self, monkeypatch):
        monkeypatch.setenv(_backend.KERNELS_ENV, "python")
        assert _backend.active() is _kernels_py
        assert _backend.loss_grad_for(2, 1) is _kernels_py.logistic_loss_grad

    def test_env_forces_compiled(self, monkeypatch):
        monkeypatch.setenv(_backend.KERNELS_ENV, "compiled")
        assert _backend.active() is compiled

    def test_bad_env_rejected(self, monkeypatch):
        monkeypatch.setenv(_backend.KERNELS_ENV, "turbo")
        with pytest.raises(ValueError):
            _backend.active()

    def test_fit_results_agree_across_backends(self, rng, monkeypatch):
        from emprobe.linmod import fit_logistic
        X = rng.standard_normal((40, 6))
        y = (X[:, 0] > 0).astype(int)
        y[:2] = [0, 1]
        monkeypatch.setenv(_backend.KERNELS_ENV, "python")
        m_py = fit_logistic(X, y, 1.0)
        monkeypatch.setenv(_backend.KERNELS_ENV, "compiled")
        m_cy = fit_logistic(X, y, 1.0)
        assert np.allclose(m_py.weights, m_cy.weights, atol=1e-8)
        assert m_py.intercept == pytest.approx(m_cy.intercept, abs=1e-8)
