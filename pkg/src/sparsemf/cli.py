"""Command-line driver: ``sparsemf {embed,oracle,evaluate,scree}``.

Exit codes: 0 success, 2 bad arguments, 3 bad input files, 4 numerical rank
failure, 5 an error bound was violated, 6 measured epsilon outside the
``eps < 0.5`` regime. Any option can also be set through an environment
variable ``SPARSEMF_<OPTION>`` (e.g. ``SPARSEMF_THREADS=4``); explicit
flags win.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import oracle
from .config import PipelineConfig
from .evaluation import evaluate, read_labels
from .factorization import (
    NumericalRankError,
    randomized_svd,
    read_embedding,
    scree_data,
    write_embedding_binary,
    write_embedding_text,
)
from .graph import GraphFormatError, load_edge_list, read_mapping, write_mapping
from .pipeline import run_embedding, sparse_netmf
from .sparse import SparseMatrix
from .sparsifier import build_sparsifier, laplacian_of, read_sparsifier, write_sparsifier

log = logging.getLogger("sparsemf")

ENV_PREFIX = "SPARSEMF_"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_RANK = 4
EXIT_BOUND = 5
EXIT_REGIME = 6


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class RunManifest:
    config: dict
    paths: dict
    timings: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    seed: int = 0
    dropped_self_loops: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def write_atomic(path: str, data: bytes | str) -> None:
    """Write to a temp file in the same directory and rename over ``path``."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data.encode("utf-8") if isinstance(data, str) else data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_graph(path: str, weighted: bool):
    try:
        return load_edge_list(path, weighted=weighted)
    except FileNotFoundError:
        raise CliError(f"input file not found: {path}", EXIT_INPUT) from None
    except (GraphFormatError, UnicodeDecodeError) as exc:
        raise CliError(f"{path}: {exc}", EXIT_INPUT) from None


def _config(args) -> PipelineConfig:
    samples = getattr(args, "samples", None)
    multiplier = getattr(args, "multiplier", None)
    if samples is None and multiplier is None:
        multiplier = 1000.0
    try:
        return PipelineConfig(
            window=args.window,
            samples=samples,
            multiplier=multiplier,
            dim=getattr(args, "dim", 1) or 1,
            negative=args.negative,
            seed=args.seed,
            threads=args.threads,
            weighted=args.weighted,
        )
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None


def _load_accumulator(path: str, n: int):
    try:
        with open(path, encoding="utf-8") as fh:
            acc, header = read_sparsifier(fh)
    except FileNotFoundError:
        raise CliError(f"sparsifier file not found: {path}", EXIT_INPUT) from None
    except (ValueError, KeyError) as exc:
        raise CliError(f"{path}: {exc}", EXIT_INPUT) from None
    if acc.n != n:
        raise CliError(f"{path}: sparsifier has n={acc.n}, graph has n={n}", EXIT_INPUT)
    return acc, header


def cmd_embed(args) -> int:
    if not args.input or not args.output:
        raise CliError("--input and --output are required", EXIT_USAGE)
    cfg = _config(args)
    g, raw_ids = _load_graph(args.input, cfg.weighted)
    if cfg.dim > g.n:
        raise CliError(f"--dim {cfg.dim} exceeds vertex count {g.n}", EXIT_USAGE)
    M = cfg.resolve_samples(g.m)
    cfg.samples, cfg.multiplier = M, None
    acc = None
    if args.sparsifier_in:
        acc, _ = _load_accumulator(args.sparsifier_in, g.n)
    log.info("graph: n=%d m=%d vol=%g; M=%d T=%d d=%d", g.n, g.m, g.volume, M, cfg.window, cfg.dim)
    try:
        res = run_embedding(g, cfg, acc=acc, strict=args.strict_rank)
    except NumericalRankError as exc:
        raise CliError(str(exc), EXIT_RANK) from None

    if args.format == "binary":
        buf = io.BytesIO()
        write_embedding_binary(res.embedding, buf)
        write_atomic(args.output, buf.getvalue())
    else:
        out = io.StringIO()
        write_embedding_text(res.embedding, out)
        write_atomic(args.output, out.getvalue())
    mapping_path = args.mapping or args.output + ".mapping"
    out = io.StringIO()
    write_mapping(raw_ids, out)
    write_atomic(mapping_path, out.getvalue())
    paths = {"input": args.input, "output": args.output, "mapping": mapping_path}
    if args.sparsifier_out:
        out = io.StringIO()
        write_sparsifier(res.accumulator, out, T=cfg.window, seed=cfg.seed)
        write_atomic(args.sparsifier_out, out.getvalue())
        paths["sparsifier"] = args.sparsifier_out
    if args.sparsifier_in:
        paths["sparsifier_in"] = args.sparsifier_in
    manifest_path = args.manifest or args.output + ".manifest.json"
    paths["manifest"] = manifest_path
    counts = dict(res.counts, n=g.n, m=g.m, dim=cfg.dim)
    manifest = RunManifest(
        config=cfg.to_dict(),
        paths=paths,
        timings=res.timings,
        counts=counts,
        seed=cfg.seed,
        dropped_self_loops=res.accumulator.dropped_self_loops,
    )
    write_atomic(manifest_path, manifest.to_json())
    log.info("wrote %s (%d x %d)", args.output, *res.embedding.shape)
    return EXIT_OK


def cmd_oracle(args) -> int:
    if not args.input:
        raise CliError("--input is required", EXIT_USAGE)
    cfg = _config(args)
    g, _ = _load_graph(args.input, cfg.weighted)
    if g.n > args.cap:
        raise CliError(f"n={g.n} exceeds oracle cap {args.cap}", EXIT_USAGE)
    if not args.epsilon_measure and args.epsilon is None:
        raise CliError("--no-epsilon-measure needs --epsilon", EXIT_USAGE)
    T, b = cfg.window, cfg.negative
    if args.paths:
        for r in range(1, T + 1):
            paths = list(oracle.enumerate_paths(g, r))
            total = math.fsum(oracle.path_probability(g, p) for p in paths)
            print(f"paths r={r} count={len(paths)} total_probability={total:.15f}")
    acc = build_sparsifier(g, cfg)
    lt = laplacian_of(acc, g.n).todense()
    lap = oracle.exact_L(g, oracle.uniform_alpha(T), args.cap)
    try:
        measured = oracle.measure_epsilon(lt, lap)
    except oracle.IncomparableError as exc:
        log.warning("sparsifier not comparable to L: %s", exc)
        measured = math.inf
    eps = measured if args.epsilon_measure else args.epsilon
    print(f"samples={acc.samples} pairs={len(acc)} measured_epsilon={measured:.6g} epsilon={eps:.6g}")
    if not eps < 0.5:
        print(f"FAIL epsilon={eps:.6g} worst_margin=nan")
        return EXIT_REGIME
    sing = oracle.check_singular_bound(oracle.m_from_laplacian(g, lt), oracle.exact_M(g, T, args.cap), eps, g)
    frob = oracle.check_frobenius_bound(g, lt, lap, eps, b)
    print("# singular-value bound")
    print(sing.table())
    print(sing.summary())
    print("# frobenius bound")
    print(frob.table())
    print(frob.summary())
    if sing.passed and frob.passed:
        print("PASS")
        return EXIT_OK
    worst = min(sing.worst_margin, frob.worst_margin)
    print(f"FAIL epsilon={eps:.6g} worst_margin={worst:.6g}")
    return EXIT_BOUND


def parse_ratios(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise CliError(f"bad ratio list {text!r}", EXIT_USAGE) from None
    if not vals:
        raise CliError("empty ratio list", EXIT_USAGE)
    # values >= 1 cannot be fractions, so the whole list is read as percentages
    if any(v >= 1 for v in vals):
        vals = [v / 100.0 for v in vals]
    if any(not 0 < v < 1 for v in vals):
        raise CliError(f"ratios must lie in (0, 1) or (0, 100) percent: {text!r}", EXIT_USAGE)
    return vals


def cmd_evaluate(args) -> int:
    if not args.embedding or not args.labels:
        raise CliError("--embedding and --labels are required", EXIT_USAGE)
    ratios = parse_ratios(args.ratios)
    try:
        emb = read_embedding(args.embedding)
    except FileNotFoundError:
        raise CliError(f"embedding file not found: {args.embedding}", EXIT_INPUT) from None
    except (ValueError, IndexError) as exc:
        raise CliError(f"{args.embedding}: {exc}", EXIT_INPUT) from None
    raw_ids = None
    if args.mapping:
        try:
            raw_ids = read_mapping(args.mapping)
        except (FileNotFoundError, GraphFormatError) as exc:
            raise CliError(f"{args.mapping}: {exc}", EXIT_INPUT) from None
        if len(raw_ids) != emb.shape[0]:
            raise CliError(
                f"mapping has {len(raw_ids)} vertices, embedding has {emb.shape[0]}", EXIT_INPUT
            )
    try:
        labels = read_labels(args.labels, raw_ids)
    except FileNotFoundError:
        raise CliError(f"label file not found: {args.labels}", EXIT_INPUT) from None
    except GraphFormatError as exc:
        raise CliError(f"{args.labels}: {exc}", EXIT_INPUT) from None
    if any(v >= emb.shape[0] for v in labels.labels):
        raise CliError("label file names vertices outside the embedding", EXIT_INPUT)
    try:
        report = evaluate(emb, labels, ratios, args.repeats, args.seed, args.reg)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    print(report.table())
    return EXIT_OK


def _read_matrix(path: str) -> SparseMatrix:
    """JSON header ``{"n": ...}`` then ``i j value`` lines with ``i <= j``; mirrored on load."""
    try:
        with open(path, encoding="utf-8") as fh:
            n = int(json.loads(fh.readline())["n"])
            data = np.loadtxt(fh, ndmin=2)
    except FileNotFoundError:
        raise CliError(f"matrix file not found: {path}", EXIT_INPUT) from None
    except (ValueError, KeyError) as exc:
        raise CliError(f"{path}: {exc}", EXIT_INPUT) from None
    if data.size == 0:
        return SparseMatrix.zeros(n)
    i, j, v = data[:, 0].astype(np.int64), data[:, 1].astype(np.int64), data[:, 2]
    if np.any(i > j) or np.any(j >= n) or np.any(i < 0):
        raise CliError(f"{path}: entries must satisfy 0 <= i <= j < n", EXIT_INPUT)
    off = i != j
    return SparseMatrix.from_triplets(
        n, np.concatenate([i, j[off]]), np.concatenate([j, i[off]]), np.concatenate([v, v[off]])
    )


def cmd_scree(args) -> int:
    if args.matrix:
        mat = _read_matrix(args.matrix)
    elif args.input:
        cfg = _config(args)
        g, _ = _load_graph(args.input, cfg.weighted)
        acc = _load_accumulator(args.sparsifier, g.n)[0] if args.sparsifier else None
        _, mat, _ = sparse_netmf(g, cfg, acc)
    else:
        raise CliError("give --input (optionally with --sparsifier) or --matrix", EXIT_USAGE)
    k = min(args.dim, mat.n)
    try:
        _, s, _ = randomized_svd(mat, k, seed=args.seed, threads=args.threads)
    except NumericalRankError as exc:
        raise CliError(str(exc), EXIT_RANK) from None
    # a matrix of order n has no singular values past n; report them as zero
    s = np.concatenate([s, np.zeros(args.dim - k)])
    print("rank\tsingular_value")
    for rank, value in scree_data(s):
        print(f"{rank}\t{value:.17g}")
    return EXIT_OK


def _env(name: str, default, cast=str):
    raw = os.environ.get(ENV_PREFIX + name.upper())
    if raw is None:
        return default
    if cast is bool:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    return cast(raw)


def _add_sampling(p: argparse.ArgumentParser, dim: bool = True) -> None:
    p.add_argument("--input", default=_env("input", None), help="edge list (u v [w] per line)")
    p.add_argument("--window", "-T", type=int, default=_env("window", 10, int), help="context window T")
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--samples", "-M", type=int, default=_env("samples", None, int), help="number of path samples M")
    grp.add_argument(
        "--multiplier", "-k", type=float, default=_env("multiplier", None, float),
        help="set M = k * T * m (default k=1000)",
    )
    if dim:
        p.add_argument("--dim", "-d", type=int, default=_env("dim", 128, int), help="embedding dimension")
    p.add_argument("--negative", "-b", type=float, default=_env("negative", 1.0, float), help="negative samples b")
    p.add_argument("--seed", type=int, default=_env("seed", 0, int))
    p.add_argument("--threads", type=int, default=_env("threads", 1, int))
    p.add_argument("--weighted", action="store_true", default=_env("weighted", False, bool))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsemf", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="learn embeddings from an edge list")
    _add_sampling(p)
    p.add_argument("--output", "-o", default=_env("output", None))
    p.add_argument("--format", choices=("text", "binary"), default=_env("format", "text"))
    p.add_argument("--mapping", default=_env("mapping", None), help="default: OUTPUT.mapping")
    p.add_argument("--manifest", default=_env("manifest", None), help="default: OUTPUT.manifest.json")
    p.add_argument("--sparsifier-out", default=_env("sparsifier_out", None), help="dump sampled pairs here")
    p.add_argument("--sparsifier-in", default=_env("sparsifier_in", None), help="reuse a dumped sparsifier")
    p.add_argument("--strict-rank", action="store_true", default=_env("strict_rank", False, bool),
                   help="fail (exit 4) instead of completing a rank-deficient sketch")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("oracle", help="check error bounds against dense references")
    _add_sampling(p, dim=False)
    p.add_argument("--epsilon-measure", action=argparse.BooleanOptionalAction,
                   default=_env("epsilon_measure", True, bool), help="measure epsilon from the sample")
    p.add_argument("--epsilon", type=float, default=_env("epsilon", None, float),
                   help="epsilon to use with --no-epsilon-measure")
    p.add_argument("--paths", action="store_true", help="also enumerate path probabilities")
    p.add_argument("--cap", type=int, default=_env("cap", oracle.ORACLE_CAP, int))
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("evaluate", help="multi-label classification of embeddings")
    p.add_argument("--embedding", default=_env("embedding", None))
    p.add_argument("--labels", default=_env("labels", None))
    p.add_argument("--mapping", default=_env("mapping", None), help="raw->dense id mapping from embed")
    p.add_argument("--ratios", default=_env("ratios", "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"),
                   help="comma list of fractions, or of percentages when any value is >= 1")
    p.add_argument("--repeats", type=int, default=_env("repeats", 10, int))
    p.add_argument("--seed", type=int, default=_env("seed", 0, int))
    p.add_argument("--reg", type=float, default=_env("reg", 1.0, float), help="L2 strength")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("scree", help="print singular values for a scree plot")
    _add_sampling(p)
    p.add_argument("--sparsifier", default=_env("sparsifier", None), help="dumped sparsifier for --input")
    p.add_argument("--matrix", default=_env("matrix", None), help="symmetric triplet file instead of a graph")
    p.set_defaults(func=cmd_scree)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    start = time.perf_counter()
    try:
        code = args.func(args)
    except CliError as exc:
        print(f"sparsemf {args.command}: {exc}", file=sys.stderr)
        if exc.code == EXIT_USAGE:
            parser.print_usage(sys.stderr)
        return exc.code
    except oracle.OracleSizeError as exc:
        print(f"sparsemf {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    log.info("%s finished in %.2fs", args.command, time.perf_counter() - start)
    return code


if __name__ == "__main__":
    sys.exit(main())
