"""Pick a cluster count with silhouette + Calinski-Harabasz voting.

Both indices are min-max normalized over the candidate range and
averaged; the k with the best mean wins, ties toward smaller k. On
well-separated blobs the vote recovers the planted count.
"""
import numpy as np

from amdnloc import calinski_harabasz, kmeans, select_k, silhouette

rng = np.random.default_rng(2)
centers = np.array([[0.0, 0.0], [30.0, 5.0], [10.0, 25.0]])
points = np.vstack([c + rng.normal(scale=1.5, size=(40, 2)) for c in centers])

for k in range(2, 7):
    model = kmeans(points, k, seed=0)
    sc = silhouette(points, model.assignment)
    ch = calinski_harabasz(points, model.assignment)
    print(f"k={k}: silhouette={sc:.3f}  calinski-harabasz={ch:9.1f}  wcss={model.wcss:9.1f}")

best_k, best_model = select_k(points, range(2, 7), seed=0)
print(f"\nselected k = {best_k} (planted 3)")
print(f"centroids:\n{np.round(best_model.centroids, 1)}")
