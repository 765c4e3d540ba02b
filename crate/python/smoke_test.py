"""Smoke test for the fastge extension module."""

import math

import fastge


def main():
    g = fastge.Graph(6, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0), (2, 3, 0.1)])
    assert g.n == 6 and g.num_edges == 7
    assert math.isclose(g.cut([0, 1, 2]), 0.1)

    c = fastge.Constraints(cannot_link=[(0, 5)])
    problem = fastge.merge(g, c)
    values, vectors = problem.eigs(1, dense=True)
    assert values[0] > 0
    sweep = problem.sweep(vectors[0])
    assert sorted(sweep["cut_set"]) in ([0, 1, 2], [3, 4, 5])
    assert math.isclose(sweep["ratio_gh"], problem.badness([0, 0, 0, 1, 1, 1])[0])

    rows = problem.embedding(vectors)
    labels = fastge.kmeans(rows, 2, seed=1)
    assert labels == [0, 0, 0, 1, 1, 1], labels

    report = fastge.cluster(g, c, k=2)
    assert report["labels"] == [0, 0, 0, 1, 1, 1]
    assert report["quality"]["max_badness"] > 0

    points, truth = fastge.four_moons(600, seed=4)
    knn = fastge.noisy_knn(points, truth, kg=15, lg=5.0, seed=4)
    constraints = fastge.sample_constraints(truth, 40, seed=4)
    report = fastge.cluster(knn, constraints, k=4, restarts=5)
    score = fastge.rand_index(report["labels"], truth)
    assert score > 0.85, score

    try:
        fastge.cluster(g, c, k=1)
    except ValueError:
        pass
    else:
        raise AssertionError("k = 1 accepted")

    print(f"ok: four-moons rand index {score:.3f}")


if __name__ == "__main__":
    main()
