from timeit import default_timer as timer

import numpy as np

from IGCoreset.Batching import ExperimentConfig, generate
from IGCoreset.Centroids import build_centroid_set
from IGCoreset.Coresets import approx_solution, iterative_coreset
from IGCoreset.Decomposition import build_tree
from IGCoreset.Graphs import build_graph
from IGCoreset.Solvers import fpt_cluster
from IGCoreset.Spanners import family_spanner


def timed(label, func, *args, **kwargs):
    start = timer()
    result = func(*args, **kwargs)
    print(f'{label:>10}: {timer() - start:.3f}s')
    return result


if __name__ == '__main__':
    config = ExperimentConfig(generator='grid-jitter', n=400, box=16.0, k=2, z=1)
    points = timed('generate', generate, config, 0)
    g = timed('graph', build_graph, points, 'udg-l2')
    X = np.arange(g.n)
    timed('spanner', family_spanner, g)
    tree = timed('decompose', build_tree, g, X)
    A = timed('approx', approx_solution, g, X, config.k, config.z, 0)
    cs = timed('centroids', build_centroid_set, g, X, A.centers, 0.5, tree=tree)
    print(f'centroid set sizes: {cs.sizes()}')
    Y = timed('coreset', iterative_coreset, g, X, config.k, config.z, 0.5, 0.1, 0, m=20)
    result = timed('fpt', fpt_cluster, g, X, config.k, config.z, coreset=Y)
    print(result)
