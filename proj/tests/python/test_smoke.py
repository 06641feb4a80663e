import math

import numpy as np
import pytest

import decman


def test_projection_onto_stiefel():
    spec = decman.ManifoldSpec.stiefel(10, 5)
    y = np.random.default_rng(0).standard_normal((10, 5))
    x = spec.project(y)
    assert np.allclose(x.T @ x, np.eye(5), atol=1e-10)
    # Polar factor from numpy as an independent oracle.
    u, _, vt = np.linalg.svd(y, full_matrices=False)
    assert np.allclose(x, u @ vt, atol=1e-10)
    with pytest.raises(decman.SingularityError):
        spec.project(np.zeros((10, 5)))


def test_tangent_projection_and_gstiefel():
    spec = decman.ManifoldSpec.stiefel(6, 3)
    x = spec.random_point(3)
    v = spec.project_tangent(x, np.ones((6, 3)))
    sym = x.T @ v
    assert np.allclose(sym + sym.T, 0.0, atol=1e-12)

    b = np.diag([1.0, 2.0, 4.0])
    gs = decman.ManifoldSpec.generalized_stiefel(b, 2)
    assert gs.kind == "gstiefel"
    assert gs.gamma == pytest.approx(0.125)
    z = gs.project(np.arange(6.0).reshape(3, 2) + 1.0)
    assert np.allclose(z.T @ b @ z, np.eye(2), atol=1e-10)


def test_mixing_matrix_ring():
    w, sigma2 = decman.mixing_matrix("ring", 8)
    assert np.allclose(w, w.T)
    assert np.allclose(w.sum(axis=1), 1.0)
    assert sigma2 == pytest.approx(1 / 3 + 2 / 3 * math.cos(math.pi / 4), abs=1e-10)
    assert decman.consensus_radius_t(0.5, 24 * math.sqrt(8), 1.0, 8) == 2
    with pytest.raises(decman.InvalidInput):
        decman.mixing_matrix("star", 4)


def test_problem_gradients_match_finite_differences():
    rng = np.random.default_rng(1)
    for problem in (decman.gen_pca(n=2, m_i=20, d=6, r=2),
                    decman.gen_gevp(n=2, m_i=20, d=6, r=2),
                    decman.gen_lrmc(n=2, m=12, T=20, r=2, nu=0.6)):
        x = problem.manifold.random_point(5)
        u = rng.standard_normal(x.shape)
        u /= np.linalg.norm(u)
        h = 1e-6
        fd = (problem.local_objective(0, x + h * u) - problem.local_objective(0, x - h * u)) / (2 * h)
        exact = float(np.sum(problem.local_gradient(0, x) * u))
        assert abs(fd - exact) <= 1e-4 * max(1.0, abs(exact)), problem.kind


def test_pca_truth_is_top_subspace():
    p = decman.gen_pca(n=4, m_i=50, d=8, r=3)
    assert p.agents == 4
    assert p.total_samples == 200
    assert p.truth_point is not None
    assert p.objective(p.truth_point) == pytest.approx(p.truth_value, rel=1e-10)
    q, _ = np.linalg.qr(np.random.default_rng(2).standard_normal((3, 3)))
    assert decman.subspace_distance(p.truth_point @ q, p.truth_point) < 1e-10


def test_dprgt_run_converges_and_is_deterministic():
    cfg = {"problem.n": 4, "problem.m_i": 40, "problem.d": 6, "problem.r": 2,
           "graph.topology": "er", "algo.kind": "dprgt", "run.K": 1500, "run.trace_every": 50}
    a = decman.run(cfg)
    b = decman.run(cfg, workers=4)
    assert a["abort"] is None
    assert a["iter"][-1] == 1500
    assert a["grad_norm_sq"][-1] < 1e-8
    assert a["dist_to_truth"][-1] < 1e-4
    assert a["max_tracking_gap"] <= 1e-10
    assert a["grad_norm_sq"] == b["grad_norm_sq"]


def test_config_errors_are_reported():
    with pytest.raises(decman.ConfigError, match="problem.kind"):
        decman.run({"problem.kind": "tensor"})
    with pytest.raises(decman.ConfigError):
        decman.run({"no.such.key": 1})
    names = [k[0] for k in decman.config_keys()]
    assert "algo.beta" in names


def test_run_experiment_and_cli(tmp_path):
    out = tmp_path / "run"
    path = decman.run_experiment({"problem.n": 4, "problem.m_i": 30, "problem.d": 6, "problem.r": 2,
                                  "run.K": 20, "out.dir": str(out)})
    lines = open(path).read().splitlines()
    assert lines[0].startswith("iter,step_size,consensus_error")
    assert len(lines) == 22
    code, stdout, _ = decman.cli("check", "--trials", "100")
    assert code == 0
    assert "max_ratio_lip" in stdout
    code, _, err = decman.cli("run", "--algo.kind", "nope", "--out.dir", str(tmp_path / "x"))
    assert code == 1
    assert "algo.kind" in err


def test_projection_lipschitz_probe():
    rep = decman.check_projection_lipschitz(decman.ManifoldSpec.stiefel(10, 5), trials=300)
    assert rep["max_ratio_lip"] <= 2.0
    assert rep["samples"] + rep["skipped"] == 300
