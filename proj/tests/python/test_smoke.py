import math

import numpy as np
import pytest

import tetrodiff as td


@pytest.fixture(scope="module")
def cube_mesh():
    mesh, report = td.build_mesh(td.cube(), h0=0.6, optimize=True, steps=5, seed=2)
    return mesh, report


def test_mesh_is_valid_and_fills_the_cube(cube_mesh):
    mesh, report = cube_mesh
    assert mesh.check_validity()["ok"]
    assert mesh.total_volume == pytest.approx(math.pi**3, rel=1e-9)
    assert mesh.positions.shape == (mesh.node_count, 3)
    assert mesh.elements.shape == (mesh.element_count, 4)
    assert min(mesh.volumes) > 0
    assert report["energy_final"] <= report["energy_refined"]


def test_seed_determinism():
    a, _ = td.build_mesh(td.cube(), h0=0.8, optimize=True, steps=4, seed=5)
    b, _ = td.build_mesh(td.cube(), h0=0.8, optimize=True, steps=4, seed=5)
    assert np.array_equal(a.positions, b.positions)


def test_laplace_matches_cube_series(cube_mesh):
    mesh, _ = cube_mesh
    bc = td.fill_boundary(td.plane_values(mesh, 0, math.pi, 1.0, False), mesh, 0.0)
    phi = td.solve_laplace(mesh, bc)
    ana = [td.laplace_cube_oracle(p, 1.0) for p in mesh.positions]
    _, mean, std = td.relative_difference(list(phi), ana)
    assert abs(mean) < 0.02
    assert std < 0.05


def test_linear_field_is_exact(cube_mesh):
    mesh, _ = cube_mesh
    bc = td.boundary_values(mesh, lambda p: 1.0 + 2.0 * p[0] - p[2])
    phi = td.solve_laplace(mesh, bc)
    x = mesh.positions
    assert np.max(np.abs(phi - (1.0 + 2.0 * x[:, 0] - x[:, 2]))) < 1e-10


def test_fundamental_mode_decays(cube_mesh):
    mesh, _ = cube_mesh
    x = mesh.positions
    g = np.sin(x[:, 0]) * np.sin(x[:, 1]) * np.sin(x[:, 2])
    bc = td.fill_boundary({}, mesh, 0.0)
    traj = td.solve_diffusion(mesh, g, D=1.0, dt=0.01, steps=3, bc=bc)
    assert [s for s, _, _ in traj] == [0, 1, 2, 3]
    norms = [np.linalg.norm(u) for _, _, u in traj]
    assert all(b < a for a, b in zip(norms, norms[1:]))
    assert norms[-1] / norms[0] == pytest.approx(1.03**-3, rel=0.05)


def test_pnp_stays_neutral(cube_mesh):
    mesh, _ = cube_mesh
    bc = td.fill_boundary(td.plane_values(mesh, 2, math.pi, 2.0, False), mesh, 1.0)
    n0 = np.zeros(mesh.node_count)
    out = td.solve_pnp(mesh, bc, D_plus=0.05, D_minus=0.05, k_plus=0.05, k_minus=0.05,
                       dt=0.05, steps=2, n_plus_init=n0, n_minus_init=n0)
    assert len(out["states"]) == 3
    last = out["states"][-1]
    assert np.max(np.abs(last["n_plus"] - last["n_minus"])) < 1e-12
    assert out["flux_plus"].shape == (mesh.element_count, 3)


def test_errors_are_typed():
    with pytest.raises(td.BuildError):
        td.cube(lo=1.0, hi=0.0)
    with pytest.raises(td.OracleError):
        td.point_charge_oracle([0, 0, 0], [0, 0, 0])
    with pytest.raises(td.TetrodiffError):
        td.read_mesh("/nonexistent/mesh.tetmesh")


def test_mesh_round_trip(tmp_path, cube_mesh):
    mesh, _ = cube_mesh
    path = str(tmp_path / "m.tetmesh")
    td.write_mesh(path, mesh, ["seed 2"])
    back = td.read_mesh(path)
    assert np.array_equal(back.positions, mesh.positions)
    assert np.array_equal(back.elements, mesh.elements)


def test_bessel_against_table():
    assert td.bessel_zeros(0, 1)[0] == pytest.approx(2.404825557695773, abs=1e-10)
    assert td.bessel_j(1, 1.0) == pytest.approx(0.44005058574493355, abs=1e-12)
