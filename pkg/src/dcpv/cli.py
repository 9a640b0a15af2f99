"""Command-line front end.

Exit codes: 0 success, 1 verification reject, 2 usage or validation error,
3 I/O error.
"""

import argparse
import os
import secrets
import sys
from pathlib import Path

from . import features as feat
from . import store as store_mod
from ._prng import MASK64, SplitMix64
from .errors import DcpvError
from .evaluation import distribution_stats, roc_points
from .ndb import DEFAULT_K, DEFAULT_P, DEFAULT_R, IntervalSet
from .pipeline import (
    PER_USER_KEY,
    SHARED_KEY,
    Params,
    enroll,
    enrollment_k2,
    evaluate_features,
    unlinkability_features,
    verify_feature,
)
from .security import classify, local_search_attack

EXIT_OK, EXIT_REJECT, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _seed(text):
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= value <= MASK64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _interval(text):
    try:
        return IntervalSet.parse(text)
    except DcpvError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_params(p):
    p.add_argument("--m-p", type=int, default=None, help="template length (default min(512, m_f))")
    p.add_argument("--K", type=int, default=DEFAULT_K)
    p.add_argument("--r", type=int, default=DEFAULT_R)
    p.add_argument("--P", type=_interval, default=IntervalSet(DEFAULT_P),
                   help="comma-separated entry-type probabilities")
    p.add_argument("--allow-unsafe", action="store_true",
                   help="permit interval sets failing the hardness condition")


def _params(args):
    return Params(m_p=args.m_p, K=args.K, r=args.r, P=args.P, allow_unsafe=args.allow_unsafe)


def build_parser():
    parser = _Parser(prog="dcpv", description="Dual-level cancelable template protection")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("keygen", help="write fresh first- and second-level tokens")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=_seed, default=None,
                   help="derive the tokens deterministically from this seed")

    p = sub.add_parser("extract", help="competition-code features from PGM images")
    p.add_argument("images", nargs="+", help="P5 PGM files named <id>_<sample>.pgm")
    p.add_argument("--out", required=True)
    p.add_argument("--grid", type=int, default=8)
    p.add_argument("--n-theta", type=int, default=6)
    p.add_argument("--kernel-size", type=int, default=35)
    p.add_argument("--wavelength", type=float, default=8.0)
    p.add_argument("--sigma", type=float, default=4.0)
    p.add_argument("--aspect", type=float, default=0.5)

    p = sub.add_parser("enroll", help="enroll feature rows into a store")
    p.add_argument("--features", required=True)
    p.add_argument("--k1", type=_seed, required=True)
    p.add_argument("--k2", type=_seed, required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--id", default=None, help="enroll only this subject")
    p.add_argument("--sample", default=None, help="sample label to enroll (default: first row)")
    p.add_argument("--replace", action="store_true")
    _add_params(p)

    p = sub.add_parser("verify", help="verify one subject's feature row")
    p.add_argument("--features", required=True)
    p.add_argument("--k1", type=_seed, required=True)
    p.add_argument("--id", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--sample", default=None, help="sample label to query (default: first row)")
    p.add_argument("--threshold", type=float, default=None,
                   help="accept when distance <= threshold (default: midpoint of the expected "
                        "genuine self distance and 0.5)")

    p = sub.add_parser("evaluate", help="all-pairs verification evaluation")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k1", type=_seed, default=1)
    p.add_argument("--k2", type=_seed, default=2)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--shared-key", dest="key_mode", action="store_const", const=SHARED_KEY)
    mode.add_argument("--per-user-key", dest="key_mode", action="store_const", const=PER_USER_KEY)
    p.add_argument("--roc-points", type=int, default=1000)
    _add_params(p)
    p.set_defaults(key_mode=SHARED_KEY)

    p = sub.add_parser("analyze", help="hardness report for an interval set")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--P", type=_interval, required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("attack", help="local-search reversal attack on a stored NDB")
    p.add_argument("--store", required=True)
    p.add_argument("--id", required=True)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None)

    p = sub.add_parser("unlink", help="mated/non-mated unlinkability analysis")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k1", type=_seed, default=1)
    p.add_argument("--k2", type=_seed, default=2)
    p.add_argument("--bins", type=int, default=100)
    p.add_argument("--omega", type=float, default=1.0)
    _add_params(p)
    return parser


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _pick(rows, subject, sample):
    for row in rows:
        if row.subject_id == subject and (sample is None or row.sample_id == sample):
            return row
    what = f"subject {subject!r}" + (f" sample {sample!r}" if sample is not None else "")
    raise DcpvError(f"no feature row for {what}")


def cmd_keygen(args):
    if args.seed is None:
        k1, k2 = secrets.randbits(64), secrets.randbits(64)
    else:
        rng = SplitMix64(args.seed)
        k1, k2 = rng.next_u64(), rng.next_u64()
    _write(args.out, f"k1={k1}\nk2={k2}\n")
    return EXIT_OK


def cmd_extract(args):
    bank = feat.GaborBank(args.n_theta, args.kernel_size, args.wavelength, args.sigma,
                          args.aspect)
    rows = []
    for path in sorted(args.images):
        stem = Path(path).stem
        subject, _, sample = stem.rpartition("_")
        if not subject:
            subject, sample = stem, "0"
        img = feat.read_pgm(path)
        rows.append(feat.competition_code(img, bank, args.grid, subject, sample))
    feat.save_features(args.out, rows)
    return EXIT_OK


def cmd_enroll(args):
    rows = feat.load_features(args.features)
    params = _params(args)
    store = store_mod.load(args.store) if os.path.exists(args.store) else store_mod.EnrollmentStore()
    subjects = [args.id] if args.id else list(dict.fromkeys(r.subject_id for r in rows))
    for subject in subjects:
        row = _pick(rows, subject, args.sample)
        record = enroll(row, args.k1, enrollment_k2(args.k2, subject), params)
        store = store.add(record, replace=args.replace)
    store_mod.save(store, args.store)
    print(f"enrolled {len(subjects)} subject(s) into {args.store}")
    return EXIT_OK


def cmd_verify(args):
    store = store_mod.load(args.store)
    record = store.get(args.id)
    row = _pick(feat.load_features(args.features), args.id, args.sample)
    result = verify_feature(record, row, args.k1, args.threshold)
    verdict = "ACCEPT" if result.accepted else "REJECT"
    print(f"{verdict} id={args.id} distance={result.score.distance:.6f} raw={result.score.raw}")
    return EXIT_OK if result.accepted else EXIT_REJECT


def cmd_evaluate(args):
    rows = feat.load_features(args.features)
    res = evaluate_features(rows, args.k1, args.k2, _params(args), args.key_mode)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    roc = ["FAR,GAR"] + [f"{far!r},{gar!r}" for far, gar in roc_points(res.scores, args.roc_points)]
    _write(out / "roc.csv", "\n".join(roc) + "\n")
    dist = ["label,score"]
    dist += [f"genuine,{s!r}" for s in res.scores.genuine.tolist()]
    dist += [f"imposter,{s!r}" for s in res.scores.imposter.tolist()]
    _write(out / "dist.csv", "\n".join(dist) + "\n")
    (g_mean, g_std), (i_mean, i_std) = distribution_stats(res.scores)
    summary = [
        f"key_mode={res.key_mode}",
        f"m_p={res.m_p} K={args.K} r={args.r} P={args.P.serialize()}",
        f"genuine_pairs={res.scores.genuine.size} imposter_pairs={res.scores.imposter.size}",
        f"EER%={100 * res.eer[0]:.5f} threshold={res.eer[1]:.6f}",
        f"baseline_EER%={100 * res.baseline_eer[0]:.5f}",
        f"first_level_EER%={100 * res.first_level_eer[0]:.5f}",
        f"genuine={g_mean:.4f}+-{g_std:.4f}",
        f"imposter={i_mean:.4f}+-{i_std:.4f}",
    ]
    _write(out / "summary.txt", "\n".join(summary) + "\n")
    print("\n".join(summary))
    return EXIT_OK


def cmd_analyze(args):
    if args.P.K != args.K:
        raise DcpvError(f"--P has {args.P.K} probabilities but --K is {args.K}")
    text = classify(args.P).format(args.P)
    if args.out:
        _write(args.out, text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_attack(args):
    record = store_mod.load(args.store).get(args.id)
    result = local_search_attack(record.ndb, args.iters, args.restarts, args.seed,
                                 n_jobs=args.jobs)
    text = f"id={args.id}\n" + result.format()
    if args.out:
        _write(args.out, text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_unlink(args):
    rows = feat.load_features(args.features)
    run = unlinkability_features(rows, args.k1, args.k2, _params(args), args.bins, args.omega)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    res = run.result
    lines = ["score,D,mated_mass,non_mated_mass"]
    for s, d, pm, pn in zip(res.scores, res.local, res.mated_mass, res.non_mated_mass):
        lines.append(f"{s!r},{d!r},{pm!r},{pn!r}")
    _write(out / "unlinkability.csv", "\n".join(lines) + "\n")
    summary = (f"mated={run.mated.size} non_mated={run.non_mated.size}\n"
               f"D_sys={res.d_sys:.6f}\n")
    _write(out / "unlinkability.txt", summary)
    sys.stdout.write(summary)
    return EXIT_OK


COMMANDS = {
    "keygen": cmd_keygen,
    "extract": cmd_extract,
    "enroll": cmd_enroll,
    "verify": cmd_verify,
    "evaluate": cmd_evaluate,
    "analyze": cmd_analyze,
    "attack": cmd_attack,
    "unlink": cmd_unlink,
}


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except OSError as exc:
        print(f"dcpv: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DcpvError, TypeError) as exc:
        print(f"dcpv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
