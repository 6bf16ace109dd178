"""Smoke test for the ibfe_py extension module."""

import math

import ibfe_py


def main():
    assert ibfe_py.delta_kernel(0.0) == 0.5
    assert ibfe_py.delta_kernel(1.0) == 0.25

    kappa = ibfe_py.kappa_from_nu(1.0, 0.4)
    assert math.isclose(kappa, 2.0 * 1.4 / (3.0 * 0.2))

    nh = ibfe_py.Material.neo_hookean(83.3333, mode="unmodified", nu_s=-1.0)
    p = nh.pk1_stress([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    assert math.isclose(p[0][0], 83.3333) and p[0][1] == 0.0
    assert nh.energy([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]) == 0.0
    try:
        nh.pk1_stress([[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    except ibfe_py.IbfeError as e:
        assert "inverted_element" in str(e)
    else:
        raise AssertionError("inverted F accepted")

    cfg = ibfe_py.Config.preset("cook2d", element="P1", mode="modified", nu_s=0.4, level=0)
    mesh = cfg.build_mesh()
    assert mesh.n_nodes == 25
    assert sorted(mesh.facet_set_names()) == ["clamped", "loaded"]
    again = ibfe_py.Config.from_toml(cfg.to_toml())
    assert again.to_toml() == cfg.to_toml()

    cfg.t_final = 0.5
    report = cfg.run()
    assert report.completed, report.failure
    samples = report.samples()
    assert samples[0]["t"] == 0.0 and samples[-1]["t"] > 0.4
    print("terminal displacement", report.terminal_displacement())

    for name, passed, detail in ibfe_py.verify():
        assert passed, (name, detail)
    print("ok")


if __name__ == "__main__":
    main()
