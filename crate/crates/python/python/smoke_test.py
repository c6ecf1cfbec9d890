"""Quick end-to-end check of the Python bindings."""

import math

import star_coupling_py as sc


def main():
    st = sc.InterfaceCondition.preset("standard", 3)
    assert st.rank_b == 1 and st.satisfies_d4()
    nf = st.normal_form()
    assert [[complex(v) for v in row] for row in nf["A1"]] == [[-1], [-1]]

    graph = sc.StarGraph.dirichlet([math.pi] * 3)
    mw = sc.eval_mw(graph, st, 1j)
    assert len(mw) == 3 and all(abs(mw[i][j] - mw[j][i]) < 1e-10 for i in range(3) for j in range(3))

    for x in (1.0, 4.0):
        assert sc.point_multiplicity(graph, st, x)["np_ab"] == 2

    dec = sc.InterfaceCondition.preset("decoupled", 3)
    assert sc.coupling_codim(st, dec) == 1

    red = sc.reduce_rank(sc.InterfaceCondition.preset("antidecoupled", 3), 1, seed=7)
    assert red.rank_b == 1 and red.satisfies_d4()

    clusters = sc.oracle_clusters(graph, st, 0.5, 1.5, points_per_edge=400)
    assert len(clusters) == 1 and clusters[0][1] == 2 and abs(clusters[0][0] - 1) < 2e-3

    again = sc.InterfaceCondition.from_json(st.to_json())
    assert again.rank_b == st.rank_b
    print("smoke test passed")


if __name__ == "__main__":
    main()
