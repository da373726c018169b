import argparse
import logging
import sys

import numpy as np
import pandas as pd

from functools import partial
from typing import Any, Dict, List, Optional, Sequence

from IGCoreset.Batching import ExperimentConfig, generate, run_matrix
from IGCoreset.Centroids import CentroidSet, Replacement, build_centroid_set, error_frame, replace_solution
from IGCoreset.Collectors import MatrixCollector, infer_format, write_json, write_table
from IGCoreset.Core import LOGGER_NAME, PRESETS, InvalidParameterError, derive_rng, get_preset
from IGCoreset.Coresets import approx_solution, iterative_coreset, verify_coreset
from IGCoreset.Decode import JsonDecoder, KeyValueDecoder, read_coreset, read_points
from IGCoreset.Decomposition import build_tree, check_tree
from IGCoreset.Graphs import GraphInstance, build_graph, check_bounded_distance, check_locally_euclidean
from IGCoreset.Separators import sp_separator
from IGCoreset.Solvers import brute_force, fpt_cluster
from IGCoreset.Spanners import count_crossings, family_spanner, is_planar, verify_stretch

# Commands whose output is a table. Every other command writes JSON.
TABLE_COMMANDS = ('gen', 'verify-coreset', 'bench')
CENTROID_REPORTS = ('sizes', 'errors')


def _load(args: argparse.Namespace) -> GraphInstance:
    return build_graph(read_points(args.input), args.metric)


def _vertices(g: GraphInstance, ids: Optional[str]) -> np.ndarray:
    """Resolves ``'all'`` or a comma-separated list of point ids to vertices."""
    if ids is None or ids.strip().lower() == 'all':
        return np.arange(g.n)
    return np.array(sorted(g.points.index_of(int(i)) for i in ids.split(',') if i.strip()), dtype=np.int64)


def _clients(g: GraphInstance, args: argparse.Namespace) -> np.ndarray:
    """Explicit ``--clients`` win over ``--x-frac``, which draws a seeded fraction of the points."""
    frac = getattr(args, 'x_frac', None)
    if args.clients is not None or frac is None:
        return _vertices(g, args.clients)
    if not 0 < frac <= 1:
        raise InvalidParameterError('x_frac', frac, 'Expected 0 < x-frac <= 1.')
    size = max(1, int(round(frac * g.n)))
    return np.sort(derive_rng(args.seed, 'x-frac').choice(g.n, size=size, replace=False))


def _ids(g: GraphInstance, vertices: Sequence[int]) -> List[int]:
    return [int(g.points.ids[v]) for v in vertices]


def _report_items(value: str) -> List[str]:
    items = [item.strip().lower() for item in value.split(',') if item.strip()]
    unknown = sorted(set(items) - set(CENTROID_REPORTS))
    if unknown or not items:
        raise argparse.ArgumentTypeError(f'Expected a comma-separated subset of {",".join(CENTROID_REPORTS)}.')
    return items


def cmd_gen(args: argparse.Namespace) -> int:
    config = ExperimentConfig(generator=args.generator, n=args.n, box=args.box, clusters=args.clusters,
                              spread=args.spread, jitter=args.jitter, seeds=[args.seed])
    points = generate(config, args.seed)
    if infer_format(args.out, args.format) == 'json':
        write_json(points.to_frame().to_dict(orient='records'), args.out)
    elif args.out in (None, '-'):
        points.to_frame().to_csv(sys.stdout, index=False, float_format='%.17g')
    else:
        points.to_frame().to_csv(args.out, index=False, float_format='%.17g')
    return 0


def cmd_graph(args: argparse.Namespace) -> int:
    g = _load(args)
    data = g.to_dict()
    components, _ = g.components()
    data.update({'m': g.m, 'components': components, 'max_degree': g.max_degree})
    if args.check:
        local, bounded = check_locally_euclidean(g), check_bounded_distance(g)
        data.update({'locally_euclidean': bool(local), 'bounded_distance': bool(bounded)})
    write_json(data, args.out)
    return 0


def cmd_spanner(args: argparse.Namespace) -> int:
    g = _load(args)
    spanner = family_spanner(g)
    data = spanner.to_dict()
    data.update({'m': spanner.m, 'crossings': count_crossings(spanner), 'planar': is_planar(spanner)})
    if args.verify:
        stretch = verify_stretch(g, spanner, seed=args.seed)
        data.update({'stretch': stretch, 'stretch_ok': bool(stretch <= spanner.alpha + 1e-9)})
    write_json(data, args.out)
    return 0


def cmd_separator(args: argparse.Namespace) -> int:
    g = _load(args)
    spanner = family_spanner(g)
    weights = np.zeros(g.n)
    weights[_vertices(g, args.clients)] = 1.0
    sep = sp_separator(spanner, weights, args.b_max)
    write_json({'paths': [_ids(g, p) for p in sep.paths], 'balance': sep.balance, 'root': _ids(g, [sep.root])[0],
                'total': sep.total}, args.out)
    return 0


def cmd_decompose(args: argparse.Namespace) -> int:
    g = _load(args)
    tree = build_tree(g, _clients(g, args))
    data = tree.to_dict()
    data['valid'] = bool(check_tree(tree))
    write_json(data, args.out)
    return 0


def _error_summary(cs: CentroidSet, replacements: Sequence[Replacement]) -> Dict[str, Any]:
    """Pools the per-client error checks of every replaced solution."""
    frames = [error_frame(cs, r) for r in replacements]
    pooled = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=['relevant', 'ok', 'error'])
    relevant = pooled[pooled['relevant'].astype(bool)]
    checked = len(relevant)
    violations = int((~relevant['ok']).sum()) if checked else 0
    return {'solutions': len(replacements), 'relevant': checked, 'violations': violations,
            'pass_rate': 1.0 if checked == 0 else 1.0 - violations / checked,
            'max_error': float(relevant['error'].max()) if checked else 0.0}


def cmd_centroid(args: argparse.Namespace) -> int:
    g = _load(args)
    X = _clients(g, args)
    A = approx_solution(g, X, args.k, args.z, args.seed)
    cs = build_centroid_set(g, X, A.centers, args.eps, args.z, get_preset(args.preset), ell=args.ell)
    data = {'A': _ids(g, A.centers), 'net': _ids(g, cs.net), 'support': _ids(g, cs.support),
            'landmark': _ids(g, cs.landmark)}
    if 'sizes' in args.report:
        data['sizes'] = cs.sizes()
    replacements = []
    if args.solution:
        replacement = replace_solution(_vertices(g, args.solution), cs)
        frame = replacement.to_frame()
        data['replacement'] = frame.assign(s=_ids(g, frame['s']), rho=_ids(g, frame['rho'])).to_dict(orient='records')
        replacements.append(replacement)
    elif 'errors' in args.report:
        rng = derive_rng(args.seed, 'centroid-solutions')
        size = min(args.k, g.n)
        replacements = [replace_solution(np.sort(rng.choice(g.n, size=size, replace=False)), cs)
                        for _ in range(args.solutions)]
    if 'errors' in args.report:
        data['errors'] = _error_summary(cs, replacements)
    write_json(data, args.out)
    return 0


def cmd_coreset(args: argparse.Namespace) -> int:
    g = _load(args)
    Y = iterative_coreset(g, _vertices(g, args.clients), args.k, args.z, args.eps, args.delta, args.seed,
                          get_preset(args.preset))
    write_json(Y.to_dict(), args.out)
    return 0


def cmd_verify_coreset(args: argparse.Namespace) -> int:
    g = _load(args)
    X = _vertices(g, args.clients)
    Y = read_coreset(args.coreset, g)
    A = None if Y.reference is None else Y.reference.tolist()
    report = verify_coreset(g, X, Y, trials=args.trials, seed=args.seed, k=Y.params.get('k'), A=A)
    frame = report.frame[['trial', 'true_cost', 'coreset_cost', 'rel_err']]
    write_table(frame, args.out, args.format)
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    g = _load(args)
    X = _vertices(g, args.clients)
    if args.method == 'brute':
        result = brute_force(g, X, args.k, args.z)
    else:
        result = fpt_cluster(g, X, args.k, args.z, args.eps, args.seed, args.delta, get_preset(args.preset),
                             processes=args.processes)
    data = result.to_dict(timings=not args.no_timings)
    data['center_ids'] = _ids(g, result.centers)
    write_json(data, args.out)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    decoder = JsonDecoder() if args.config.lower().endswith('.json') else KeyValueDecoder()
    configs = decoder.decode(args.config)
    if args.no_timings:
        for config in configs:
            config.timings = False
    collector = MatrixCollector(args.out, args.format)
    report = run_matrix(configs, args.processes, collector)
    collector.write_records()
    if len(report.failures):
        collector.write_failures(args.failures)
    return report.exit_code


def global_flags(parser: argparse.ArgumentParser, default: Any = None):
    """Adds the flags every subcommand accepts. Subparsers pass ``argparse.SUPPRESS`` so the top-level values stand
    unless the flag is repeated after the subcommand."""
    def pick(value: Any) -> Any:
        return value if default is None else default

    parser.add_argument('--seed', type=int, default=pick(0), help='Root seed of every random stream.')
    parser.add_argument('--preset', choices=sorted(PRESETS), default=pick('desk'), help='Constants preset.')
    parser.add_argument('--out', default=pick(None), help='Output path. Defaults to stdout.')
    parser.add_argument('--format', choices=['csv', 'json'], default=pick(None),
                        help='Format of the table outputs of gen, verify-coreset and bench. Other commands always '
                             'write JSON and reject csv.')
    parser.add_argument('--log-level', default=pick('WARNING'), help='Level of the IGCORESET logger.')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='igcoreset', description='Coresets for clustering on intersection graphs.')
    global_flags(parser)
    common = argparse.ArgumentParser(add_help=False)
    global_flags(common, argparse.SUPPRESS)
    sub = parser.add_subparsers(dest='command', required=True)
    add = partial(sub.add_parser, parents=[common])

    def instance(p: argparse.ArgumentParser):
        p.add_argument('--in', dest='input', required=True, help='Points file (CSV id,x,y or JSON).')
        p.add_argument('--metric', default='udg-l2', help='udg-<norm>, usg-<norm> or hop-udg.')
        p.add_argument('--clients', default=None, help='Comma-separated client point ids, or "all" (the default).')

    p = add('gen', help='Generate a point set.')
    p.add_argument('--generator', default='uniform-box', choices=['uniform-box', 'gaussian-clusters', 'grid-jitter'])
    p.add_argument('--n', type=int, default=100)
    p.add_argument('--box', type=float, default=6.0)
    p.add_argument('--clusters', type=int, default=3)
    p.add_argument('--spread', type=float, default=0.5)
    p.add_argument('--jitter', type=float, default=0.25)
    p.set_defaults(func=cmd_gen)

    p = add('graph', help='Build the intersection graph.')
    instance(p)
    p.add_argument('--check', action='store_true', help='Check the Locally Euclidean and Bounded Distance properties.')
    p.set_defaults(func=cmd_graph)

    p = add('spanner', help='Build the planar spanner.')
    instance(p)
    p.add_argument('--verify', action='store_true', help='Measure the stretch against the declared bound.')
    p.set_defaults(func=cmd_spanner)

    p = add('separator', help='Separate the spanner by shortest paths.')
    instance(p)
    p.add_argument('--b-max', type=int, default=2)
    p.set_defaults(func=cmd_separator)

    p = add('decompose', help='Build the recursive decomposition.')
    instance(p)
    p.add_argument('--x-frac', type=float, default=None,
                   help='Use a seeded random fraction of the points as clients. --clients takes precedence.')
    p.set_defaults(func=cmd_decompose)

    p = add('centroid', help='Build the centroid set.')
    instance(p)
    p.add_argument('--k', type=int, default=3)
    p.add_argument('--z', type=int, default=1)
    p.add_argument('--eps', type=float, default=0.3)
    p.add_argument('--ell', type=int, default=None, help='Support hop radius override.')
    p.add_argument('--solution', default=None, help='Comma-separated center ids to replace.')
    p.add_argument('--x-frac', type=float, default=None,
                   help='Use a seeded random fraction of the points as clients. --clients takes precedence.')
    p.add_argument('--report', type=_report_items, default=['sizes'],
                   help='Comma-separated subset of sizes,errors. Defaults to sizes.')
    p.add_argument('--solutions', type=int, default=50,
                   help='Random solutions scored by the errors report when --solution is absent.')
    p.set_defaults(func=cmd_centroid)

    for name, func in (('coreset', cmd_coreset), ('solve', cmd_solve)):
        p = add(name, help='Build a coreset.' if name == 'coreset' else 'Solve the clustering.')
        instance(p)
        p.add_argument('--k', type=int, default=3)
        p.add_argument('--z', type=int, default=1)
        p.add_argument('--eps', type=float, default=0.2)
        p.add_argument('--delta', type=float, default=0.1)
        p.set_defaults(func=func)
        if name == 'solve':
            p.add_argument('--method', choices=['fpt', 'brute'], default='fpt')
            p.add_argument('--processes', type=int, default=1)
            p.add_argument('--no-timings', action='store_true', help='Omit wall time for byte-stable output.')

    p = add('verify-coreset', help='Compare coreset and true costs on random center sets.')
    instance(p)
    p.add_argument('--coreset', required=True, help='coreset.json written by the coreset command.')
    p.add_argument('--trials', type=int, default=200)
    p.set_defaults(func=cmd_verify_coreset)

    p = add('bench', help='Run an experiment matrix from a config file.')
    p.add_argument('--config', required=True, help='Key-value (.cfg) or JSON experiment file.')
    p.add_argument('--processes', type=int, default=1)
    p.add_argument('--failures', default=None, help='Where to write failed cells. Defaults to stdout.')
    p.add_argument('--no-timings', action='store_true', help='Drop runtime columns for byte-stable reports.')
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format == 'csv' and args.command not in TABLE_COMMANDS:
        parser.error(f'{args.command} writes JSON. --format csv applies to {", ".join(TABLE_COMMANDS)} only.')
    logging.basicConfig(format='%(asctime)s %(name)s %(levelname)s %(message)s')
    logging.getLogger(LOGGER_NAME).setLevel(args.log_level.upper())
    return args.func(args)


if __name__ == '__main__':
    sys.exit(main())
