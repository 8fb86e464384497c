"""Command-line interface: simulate, fit, stage2, evaluate, replicate.

Settings come from built-in defaults, then an optional JSON config file
(``--config``), then command-line flags, each overriding the previous.
A config file may hold flat keys or a section named after the command.

Exit codes: 0 success, 2 configuration error, 3 data-format error,
4 no fit converged.
"""

import argparse
import logging
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .adg import ADGEM, ConvergenceWarning, m_step
from .datagen import (
    GENERATOR_MODELS,
    Q_DESIGNS,
    ConfigError,
    SimConfig,
    simulate,
    timss_like,
)
from .evaluation import REPORT_FIELDS, accuracy_report, recon_error, reconstruct
from .model import ideal_matrix
from .stage_two import TwoStageSLAM
from .validation import DimensionError, check_response_matrix

logger = logging.getLogger("slamjmle")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NOCONV = 0, 2, 3, 4

GLOBAL_DEFAULTS = {"seed": 1, "threads": 1, "output": "."}

SIM_DEFAULTS = {
    "n": 1000,
    "j": 1000,
    "k": 7,
    "model": "dina",
    "noise": 0.2,
    "theta_lo": 0.2,
    "theta_hi": 0.8,
    "missing_rate": 0.0,
    "q_design": "blocks",
}

FIT_DEFAULTS = {
    "algorithm": "em",
    "gibbs": 5,
    "max_iter": 100,
    "stable_iters": 3,
    "theta_tol": 1e-4,
    "init": "cluster",
    "q_init": None,
    "a_init": None,
}

STAGE2_DEFAULTS = {"screen": "main", "tau": None}

DEFAULTS = {
    "simulate": {**SIM_DEFAULTS},
    "fit": {
        "data": None,
        "k": None,
        "fit_model": "dina",
        "anchors": None,
        "stage2": False,
        **FIT_DEFAULTS,
        **STAGE2_DEFAULTS,
    },
    "stage2": {"data": None, "q": None, "a": None, "theta": None, **STAGE2_DEFAULTS},
    "evaluate": {
        "q_hat": None,
        "a_hat": None,
        "q_true": None,
        "a_true": None,
        "theta": None,
        "bic": None,
        "fit_model": "dina",
    },
    "replicate": {**SIM_DEFAULTS, **FIT_DEFAULTS, **STAGE2_DEFAULTS, "replications": 20, "stage2": False},
}

# replicate output: one aggregated row in the layout of the simulation tables
TABLE_HEADER = (
    "2^K",
    "J",
    "N",
    "replications",
    "Q_exact",
    "Q_row_acc",
    "Q_entry_acc",
    "A_exact",
    "A_row_acc",
    "A_entry_acc",
    "recon_err",
    "converged",
)
REPLICATION_HEADER = ("replication", "seed", "converged", "n_iter", "stage1_q_row_acc", *REPORT_FIELDS)


def _flag(name):
    return "--" + name.replace("_", "-")


def build_parser():
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", help='worker processes for replicate (integer or "auto")')
    common.add_argument("--output", help="output directory")
    common.add_argument("-v", "--verbose", action="count")

    parser = argparse.ArgumentParser(
        prog="slamjmle", parents=[common], argument_default=argparse.SUPPRESS, description=__doc__.splitlines()[0]
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], argument_default=argparse.SUPPRESS, help=help_)

    def sim_flags(p):
        p.add_argument("--n", type=int)
        p.add_argument("--j", type=int)
        p.add_argument("--k", type=int)
        p.add_argument("--model", choices=GENERATOR_MODELS)
        p.add_argument("--noise", type=float)
        p.add_argument("--theta-lo", type=float)
        p.add_argument("--theta-hi", type=float)
        p.add_argument("--missing-rate", type=float)
        p.add_argument("--q-design", choices=Q_DESIGNS + ("timss",))

    def fit_flags(p):
        p.add_argument("--algorithm", choices=("em", "saem"))
        p.add_argument("--gibbs", type=int, help="Gibbs samples per iteration")
        p.add_argument("--max-iter", type=int)
        p.add_argument("--stable-iters", type=int)
        p.add_argument("--theta-tol", type=float)
        p.add_argument("--init", help="cluster | random | perturb:RATE | warm[:QPATH,APATH]")
        p.add_argument("--q-init", help="Q matrix for warm/perturb starts")
        p.add_argument("--a-init", help="A matrix for warm/perturb starts")

    def stage2_flags(p):
        p.add_argument("--screen", choices=("main", "all-effects"))
        p.add_argument("--tau", type=float)

    p = add("simulate", "generate a synthetic dataset")
    sim_flags(p)

    p = add("fit", "estimate Q, A and item parameters")
    p.add_argument("--data", help="response matrix CSV")
    p.add_argument("--k", type=int)
    p.add_argument("--model", dest="fit_model", choices=("dina", "dino"))
    p.add_argument("--anchors", help="CSV of frozen items: index[,q_1..q_K]")
    p.add_argument("--stage2", action="store_true")
    fit_flags(p)
    stage2_flags(p)

    p = add("stage2", "second-stage selection from stage-one estimates")
    p.add_argument("--data")
    p.add_argument("--q", help="stage-one Q_hat CSV")
    p.add_argument("--a", help="stage-one A_hat CSV")
    p.add_argument("--theta", help="stage-one theta CSV (recomputed when absent)")
    stage2_flags(p)

    p = add("evaluate", "accuracy of estimates against the truth")
    p.add_argument("--q-hat")
    p.add_argument("--a-hat")
    p.add_argument("--q-true")
    p.add_argument("--a-true")
    p.add_argument("--theta", help="theta CSV for the reconstruction error")
    p.add_argument("--bic", help="bic.json whose winning BIC is reported")
    p.add_argument("--model", dest="fit_model", choices=("dina", "dino"))

    p = add("replicate", "simulate, fit and evaluate over many replications")
    p.add_argument("--replications", type=int)
    p.add_argument("--stage2", action="store_true")
    sim_flags(p)
    fit_flags(p)
    stage2_flags(p)
    return parser


def resolve_config(args):
    """Merge defaults, config file and flags for ``args.command``."""
    cmd = args["command"]
    cfg = {**GLOBAL_DEFAULTS, **DEFAULTS[cmd]}
    if "config" in args:
        try:
            loaded = io.read_json(args["config"])
        except io.DataFormatError as exc:
            raise ConfigError(str(exc)) from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        section = loaded.pop(cmd, {})
        for name in DEFAULTS:
            loaded.pop(name, None)
        for source in (loaded, section):
            unknown = set(source) - set(cfg)
            if unknown:
                raise ConfigError(f"unknown config keys for {cmd}: {sorted(unknown)}")
            cfg.update(source)
    cfg.update({k: v for k, v in args.items() if k not in ("command", "config", "verbose")})
    return cfg


def _threads(value):
    if value in (None, "auto"):
        return os.cpu_count() or 1
    try:
        n = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f'threads must be a positive integer or "auto", got {value!r}') from None
    if n < 1:
        raise ConfigError("threads must be positive")
    return n


def _require(cfg, *keys):
    missing = [_flag(k) for k in keys if cfg.get(k) in (None, "")]
    if missing:
        raise ConfigError(f"missing required settings: {', '.join(missing)}")


def _outdir(cfg):
    out = Path(cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def parse_init(text):
    """``cluster``, ``random``, ``perturb:RATE`` or ``warm[:QPATH,APATH]`` -> (kind, rate, paths)."""
    kind, _, arg = str(text).partition(":")
    if kind in ("cluster", "random") and not arg:
        return kind, None, None
    if kind == "perturb":
        try:
            rate = float(arg) if arg else 1 / 3
        except ValueError:
            raise ConfigError(f"bad perturbation rate in --init {text!r}") from None
        if not 0 <= rate <= 1:
            raise ConfigError("perturbation rate must lie in [0, 1]")
        return kind, rate, None
    if kind == "warm":
        if not arg:
            return kind, None, None
        paths = arg.split(",")
        if len(paths) != 2:
            raise ConfigError("warm init takes two paths: warm:QPATH,APATH")
        return kind, None, tuple(paths)
    raise ConfigError(f"unknown init {text!r}")


def _sim_config(cfg, seed):
    return SimConfig(
        N=int(cfg["n"]),
        J=int(cfg["j"]),
        K=int(cfg["k"]),
        model=cfg["model"],
        noise=float(cfg["noise"]),
        theta_lo=float(cfg["theta_lo"]),
        theta_hi=float(cfg["theta_hi"]),
        missing_rate=float(cfg["missing_rate"]),
        seed=int(seed),
        q_design=cfg["q_design"],
    ).validate()


def _stage_two(cfg, K, seed):
    screen = {"main": "main", "all-effects": "all", "all": "all"}.get(cfg["screen"])
    if screen is None:
        raise ConfigError(f"unknown screen mode {cfg['screen']!r}")
    if screen == "all" and cfg["tau"] is None:
        raise ConfigError("all-effects screening needs --tau")
    gap = screen == "main" and cfg["tau"] is None
    return TwoStageSLAM(K, screen=screen, tau=cfg["tau"], gap_rule=gap, random_state=seed)


def _write_stage_two(out, model):
    io.write_matrix(out / "Q_hat2.csv", model.Q_)
    io.write_theta_multi(out / "theta_multi.csv", model.theta_table_)
    io.write_json(out / "bic.json", model.bic_)


def _estimator(cfg, K, seed, model="dina", Q_init=None, A_init=None, anchors=None):
    kind, rate, _ = parse_init(cfg["init"])
    return ADGEM(
        n_attributes=K,
        algorithm=cfg["algorithm"],
        n_gibbs=int(cfg["gibbs"]),
        max_iter=int(cfg["max_iter"]),
        stable_iters=int(cfg["stable_iters"]),
        theta_tol=float(cfg["theta_tol"]),
        init=kind,
        perturb_rate=1 / 3 if rate is None else rate,
        Q_init=Q_init,
        A_init=A_init,
        anchor_rows=anchors,
        model=model,
        random_state=int(seed),
    )


def _fit_quietly(est, R):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        est.fit(R)
    if not est.converged_:
        logger.warning("fit stopped at max_iter=%d without converging; best iterate kept", est.max_iter)
    return est


def cmd_simulate(cfg):
    out = _outdir(cfg)
    seed = int(cfg["seed"])
    if cfg["q_design"] == "timss":
        R, Q, Q_prov, anchors = timss_like(
            N=int(cfg["n"]), J=int(cfg["j"]), K=int(cfg["k"]), missing_rate=float(cfg["missing_rate"]),
            noise=float(cfg["noise"]), seed=seed,
        )
        A = None
        io.write_matrix(out / "Q_provisional.csv", Q_prov)
        io.write_matrix(out / "anchors.csv", np.column_stack([anchors, Q_prov[anchors]]))
    else:
        R, Q, A, _ = simulate(_sim_config(cfg, seed))
    io.write_matrix(out / "R.csv", R)
    io.write_matrix(out / "Q_true.csv", Q)
    if A is not None:
        io.write_matrix(out / "A_true.csv", A)
    io.write_json(out / "config.json", {k: cfg[k] for k in ("seed", *SIM_DEFAULTS)})
    logger.info("wrote %d x %d responses to %s", R.shape[0], R.shape[1], out)
    return EXIT_OK


def cmd_fit(cfg):
    _require(cfg, "data", "k")
    out = _outdir(cfg)
    K, seed = int(cfg["k"]), int(cfg["seed"])
    R = io.read_matrix(cfg["data"], allow_missing=True)
    N, J = R.shape
    kind, _, paths = parse_init(cfg["init"])
    q_path, a_path = paths if paths else (cfg["q_init"], cfg["a_init"])
    Q_init = A_init = None
    if kind in ("warm", "perturb"):
        if not (q_path and a_path):
            raise ConfigError(f"init {kind!r} needs --q-init and --a-init (or warm:QPATH,APATH)")
        Q_init, A_init = io.read_matrix(q_path), io.read_matrix(a_path)
        if Q_init.shape != (J, K) or A_init.shape != (N, K):
            raise io.DataFormatError(f"initial Q/A must be {(J, K)} and {(N, K)}")
    anchors = None
    if cfg["anchors"]:
        anchors, rows = io.read_anchors(cfg["anchors"], K)
        if anchors.max() >= J:
            raise io.DataFormatError(f"anchor index {anchors.max()} is out of range for J={J}")
        if rows is None and Q_init is None:
            raise ConfigError("anchor indices without Q rows need a warm or perturb Q")
        if rows is not None:
            Q_init = np.zeros((J, K), dtype=np.int8) if Q_init is None else Q_init.copy()
            Q_init[anchors] = rows
        anchors = anchors.tolist()
    est = _fit_quietly(_estimator(cfg, K, seed, cfg["fit_model"], Q_init, A_init, anchors), R)
    io.write_matrix(out / "Q_hat.csv", est.Q_)
    io.write_matrix(out / "A_hat.csv", est.A_)
    io.write_theta(out / "theta.csv", est.theta_plus_, est.theta_minus_)
    io.write_trace(out / "trace.csv", est.trace_)
    io.write_json(
        out / "fit.json",
        {
            "converged": bool(est.converged_),
            "n_iter": est.n_iter_,
            "loglik": est.loglik_,
            "refined_flips": est.n_refined_,
        },
    )
    if cfg["stage2"]:
        two = _stage_two(cfg, K, seed)
        two.fit_second_stage(R, est.A_, est.Q_, est.theta_plus_, est.theta_minus_, model=est.model)
        _write_stage_two(out, two)
    return EXIT_OK if est.converged_ else EXIT_NOCONV


def cmd_stage2(cfg):
    _require(cfg, "data", "q", "a")
    out = _outdir(cfg)
    R = io.read_matrix(cfg["data"], allow_missing=True)
    Q, A = io.read_matrix(cfg["q"]), io.read_matrix(cfg["a"])
    if Q.shape[0] != R.shape[1] or A.shape[0] != R.shape[0] or Q.shape[1] != A.shape[1]:
        raise io.DataFormatError(f"shapes R {R.shape}, Q {Q.shape}, A {A.shape} do not fit together")
    if cfg["theta"]:
        tp, tm = io.read_theta(cfg["theta"])
        if tp.size != Q.shape[0]:
            raise io.DataFormatError(f"theta file has {tp.size} items, expected {Q.shape[0]}")
    else:
        values, observed = check_response_matrix(R)
        tp, tm = m_step(values, ideal_matrix(Q, A), observed)
    two = _stage_two(cfg, Q.shape[1], int(cfg["seed"]))
    two.fit_second_stage(R, A, Q, tp, tm)
    _write_stage_two(out, two)
    return EXIT_OK


def _report_row(report):
    return [repr(v) if isinstance(v, float) else v for v in report.csv_row()]


def cmd_evaluate(cfg):
    _require(cfg, "q_hat", "a_hat", "q_true", "a_true")
    out = _outdir(cfg)
    Q_hat, A_hat = io.read_matrix(cfg["q_hat"]), io.read_matrix(cfg["a_hat"])
    Q_true, A_true = io.read_matrix(cfg["q_true"]), io.read_matrix(cfg["a_true"])
    if Q_hat.shape != Q_true.shape or A_hat.shape != A_true.shape:
        raise io.DataFormatError("estimated and true matrices differ in shape")
    report = accuracy_report(Q_hat, A_hat, Q_true, A_true)
    if cfg["theta"]:
        tp, tm = io.read_theta(cfg["theta"])
        ideal = ideal_matrix(Q_true, A_true, cfg["fit_model"])
        report.recon_err = recon_error(reconstruct(Q_hat, A_hat, tp, tm, cfg["fit_model"]), ideal)
    if cfg["bic"]:
        bic = io.read_json(cfg["bic"])
        report.bic = float(bic[bic["winner"]]["bic"])
    (out / "report.json").write_text(report.to_json() + "\n")
    io.write_rows(out / "report.csv", REPORT_FIELDS, [_report_row(report)])
    return EXIT_OK


def replication_seed(seed, index):
    """Independent 63-bit seed for replication ``index`` of a run seeded with ``seed``."""
    state = np.random.SeedSequence(int(seed), spawn_key=(int(index),)).generate_state(2, np.uint32)
    return int(state[0]) | (int(state[1] & 0x7FFFFFFF) << 32)


def run_replication(cfg, index):
    """One simulate -> fit (-> stage two) -> evaluate cycle; returns a result row."""
    seed = replication_seed(cfg["seed"], index)
    sim = _sim_config(cfg, seed)
    R, Q, A, _ = simulate(sim)
    est = _fit_quietly(_estimator(cfg, sim.K, seed, "dino" if sim.model == "dino" else "dina"), R)
    report = accuracy_report(est.Q_, est.A_, Q, A)
    stage1_row = report.q_row_acc
    if sim.model in ("dina", "dino"):
        R_hat = reconstruct(est.Q_, est.A_, est.theta_plus_, est.theta_minus_, est.model)
        report.recon_err = recon_error(R_hat, ideal_matrix(Q, A, sim.model))
    if cfg["stage2"]:
        two = _stage_two(cfg, sim.K, seed)
        two.fit_second_stage(R, est.A_, est.Q_, est.theta_plus_, est.theta_minus_)
        recon, bic = report.recon_err, two.bic_[two.bic_["winner"]]["bic"]
        report = accuracy_report(two.Q_, est.A_, Q, A, perm=np.asarray(report.perm))
        report.recon_err, report.bic = recon, bic
    return [index, seed, int(est.converged_), est.n_iter_, stage1_row, *report.csv_row()]


def aggregate(rows, cfg):
    """Table row from replication rows (order-independent)."""
    rows = sorted(rows, key=lambda r: r[0])
    col = {name: np.array([r[i] for r in rows], dtype=float) for i, name in enumerate(REPLICATION_HEADER)}
    return [
        2 ** int(cfg["k"]),
        int(cfg["j"]),
        int(cfg["n"]),
        len(rows),
        int(col["q_exact"].sum()),
        repr(float(col["q_row_acc"].mean())),
        repr(float(col["q_entry_acc"].mean())),
        int(col["a_exact"].sum()),
        repr(float(col["a_row_acc"].mean())),
        repr(float(col["a_entry_acc"].mean())),
        repr(float(np.mean(col["recon_err"]))),
        int(col["converged"].sum()),
    ]


def cmd_replicate(cfg):
    n_rep = int(cfg["replications"])
    if n_rep < 1:
        raise ConfigError("replications must be positive")
    if cfg["q_design"] == "timss":
        raise ConfigError("replicate supports the blocks, pairs and example3 designs")
    kind, _, _ = parse_init(cfg["init"])
    if kind not in ("cluster", "random"):
        raise ConfigError("replicate starts from cluster or random initial values only")
    _sim_config(cfg, cfg["seed"])
    out = _outdir(cfg)
    workers = min(_threads(cfg["threads"]), n_rep)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_replication, [cfg] * n_rep, range(n_rep)))
    else:
        rows = []
        for r in range(n_rep):
            rows.append(run_replication(cfg, r))
            logger.info("replication %d/%d done", r + 1, n_rep)
    rows.sort(key=lambda r: r[0])
    io.write_rows(
        out / "replications.csv",
        REPLICATION_HEADER,
        ([repr(v) if isinstance(v, float) else v for v in row] for row in rows),
    )
    io.write_rows(out / "table.csv", TABLE_HEADER, [aggregate(rows, cfg)])
    return EXIT_OK if any(r[2] for r in rows) else EXIT_NOCONV


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "stage2": cmd_stage2,
    "evaluate": cmd_evaluate,
    "replicate": cmd_replicate,
}


def main(argv=None):
    args = vars(build_parser().parse_args(argv))
    level = logging.DEBUG if args.get("verbose", 0) > 1 else logging.INFO if args.get("verbose") else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        _threads(cfg["threads"])
        return COMMANDS[args["command"]](cfg)
    except (ConfigError, ValueError) as exc:
        if isinstance(exc, (io.DataFormatError, DimensionError)):
            logger.error("data error: %s", exc)
            return EXIT_DATA
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
