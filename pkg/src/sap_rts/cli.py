"""Command line entry point: ``sap-rts <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
import time
from dataclasses import replace
from importlib import metadata
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from . import _kernels, config as config_mod
from .engine import apply_stat_overrides, reset_stats
from .harness.experiment import (
    ABLATIONS,
    Bar,
    Cell,
    ExperimentReport,
    ablation_study,
    fixed_baseline_vs_pool,
    recognition_accuracy,
    run_experiment,
    score_vs_pool,
    searched_response_bars,
)
from .harness.match import MatchConfig, run_match
from .harness.reports import emit_reports
from .harness.specs import AgentSpec, AgentSpecError, build_agent
from .harness.tournament import run_round_robin
from .recognition import RemoteRecognizer, RuleRecognizer
from .sen import ResultDataset, SENParams, TrainHistory, evaluate, train
from .strategy import StrategyLibrary, generate_library, parse_strategy, split_seen_unseen

log = logging.getLogger("sap_rts")


# -- helpers ---------------------------------------------------------------------------------


def _versions() -> dict:
    out = {"python": platform.python_version(), "numpy": np.__version__, "kernel_backend": _kernels.BACKEND}
    for pkg in ("artifact", "numba", "httpx", "pyyaml"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            pass
    return out


def _write_manifest(out: Path, args, cfg: config_mod.Config, outputs: list[Path], elapsed: float) -> None:
    path = out / "manifest.json"
    doc = json.loads(path.read_text()) if path.exists() else {"runs": []}
    doc.update({"config_hash": cfg.digest(), "config": cfg.to_dict(), "versions": _versions()})
    doc["runs"].append({
        "command": args.command,
        "argv": sys.argv[1:],
        "seed": cfg.seed,
        "config_hash": cfg.digest(),
        "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(time.time() - elapsed)),
        "seconds": round(elapsed, 2),
        "outputs": [str(p.relative_to(out)) if p.is_relative_to(out) else str(p) for p in outputs],
    })
    path.write_text(json.dumps(doc, indent=2))


def _client(cfg: config_mod.Config):
    if not cfg.remote.enabled:
        return None
    from .llm import ChatClient

    return ChatClient.from_env(cfg.remote.url_env, cfg.remote.key_env, cfg.remote.model_env,
                               timeout=cfg.remote.timeout)


def _ports(cfg: config_mod.Config) -> dict:
    """Planner and recognizer: remote adapters when enabled, rule stand-ins otherwise."""
    from .planner import RemotePlanner, RulePlanner

    client = _client(cfg)
    if client is None:
        return {"planner": RulePlanner(), "recognizer": RuleRecognizer(cfg.recognition)}
    return {"planner": RemotePlanner(client), "recognizer": RemoteRecognizer(client, cfg.recognition)}


def parse_agent(text: str, sen_path: Path | None, k: int, seed: int = 0) -> AgentSpec:
    """``sap``, ``sap_epe``, ``sap_no_sen``, ``sap_no_tips``, ``vanilla``, ``tips``,
    ``bot:<name>`` or ``fixed:<key=value,...>``."""
    kind, _, arg = text.partition(":")
    sen = str(sen_path) if sen_path is not None else None
    if kind == "bot":
        return AgentSpec("bot", bot=arg, k=k, seed=seed)
    if kind == "fixed":
        return AgentSpec("fixed", strategy=parse_strategy(arg), k=k)
    return AgentSpec(kind, sen_path=sen if kind.startswith("sap") else None, k=k)


def _library(path: Path) -> StrategyLibrary:
    if not path.exists():
        raise FileNotFoundError(f"{path} not found; run gen-strategies first")
    return StrategyLibrary.load(path)


# -- commands --------------------------------------------------------------------------------


def cmd_gen_strategies(args, cfg, out: Path) -> list[Path]:
    client = _client(cfg)
    source = None
    if client is not None:
        from .planner import RemoteStrategySource

        source = RemoteStrategySource(client)
    lib = generate_library(args.size or cfg.library.size, source, seed=cfg.seed)
    seen, unseen = split_seen_unseen(lib, args.seen or cfg.library.seen, seed=cfg.seed)
    paths = [out / "strategies.json", out / "seen.json", out / "unseen.json"]
    for p, part in zip(paths, (lib, seen, unseen)):
        part.save(p)
    print(f"{len(lib)} strategies ({len(seen)} seen / {len(unseen)} unseen) -> {out}")
    return paths


def cmd_tournament(args, cfg, out: Path) -> list[Path]:
    lib = _library(Path(args.library) if args.library else out / "seen.json")
    path = Path(args.output) if args.output else out / "dataset.jsonl"
    n = args.episodes or cfg.tournament.episodes
    t0 = time.time()
    ds = run_round_robin(lib, n, cfg.seed, args.workers, path, cfg.map, cfg.tournament.k)
    print(f"{len(ds)} records ({len(lib)}x{len(lib)}, N={n}) in {time.time() - t0:.1f}s -> {path}")
    return [path]


def cmd_train_sen(args, cfg, out: Path) -> list[Path]:
    data = ResultDataset.load(Path(args.data) if args.data else out / "dataset.jsonl")
    if not any(r.split == "test" for r in data.records):
        data = data.with_split(cfg.sen.test_fraction, seed=cfg.seed)
    hist = TrainHistory()
    params = train(data, cfg.sen.train_config(cfg.seed), hist)
    paths = [out / "sen.json", out / "dataset_split.jsonl", out / "train_history.json"]
    params.save(paths[0])
    data.save(paths[1])
    paths[2].write_text(json.dumps({"best_epoch": hist.best_epoch, "train_loss": hist.train_loss,
                                    "val_loss": hist.val_loss}))
    print(f"trained on {len(data.subset('train'))} records; best epoch {hist.best_epoch}, "
          f"val loss {min(hist.val_loss):.4f} -> {paths[0]}")
    return paths


def cmd_eval_sen(args, cfg, out: Path) -> list[Path]:
    params = SENParams.load(Path(args.sen) if args.sen else out / "sen.json")
    data = ResultDataset.load(Path(args.data) if args.data else out / "dataset_split.jsonl")
    test = data.subset("test")
    if len(test) == 0:
        test = data
    metrics = evaluate(params, test)
    result = {"metrics": metrics}
    bars = []
    unseen_path = Path(args.unseen) if args.unseen else out / "unseen.json"
    if unseen_path.exists() and not args.no_bars:
        bars = searched_response_bars(params, list(_library(unseen_path)), args.episodes, cfg.seed, cfg.map)
        result["searched_response"] = {
            "aggregate": float(np.mean([b.score for b in bars])),
            "bars": [{"opponent": b.opponent.to_text(), "response": b.response.to_text(),
                      "predicted": b.predicted, "wins": b.wins, "draws": b.draws,
                      "episodes": b.episodes} for b in bars],
        }
    path = out / "sen_eval.json"
    path.write_text(json.dumps(result, indent=2))
    print(f"accuracy {metrics['accuracy']:.3f}  fp rate {metrics['fp_rate']:.3f}  "
          f"confusion {metrics['confusion']}")
    if bars:
        print(f"searched response aggregate score {result['searched_response']['aggregate']:.3f}")
    return [path, *cmd_report(args, cfg, out)]


def cmd_match(args, cfg, out: Path) -> list[Path]:
    sen = out / "sen.json"
    k = cfg.experiment.k
    ports = _ports(cfg)
    specs = [parse_agent(a, sen, k, cfg.seed) for a in (args.p1, args.p2)]
    agents = [build_agent(s, **ports) for s in specs]
    log_path = out / "match_events.jsonl"
    res = run_match(MatchConfig(cfg.map, cfg.seed, args.step_limit, k), *agents, log=log_path)
    path = out / "match_result.json"
    path.write_text(json.dumps(res.to_record(), indent=2))
    print(f"{agents[0].name} vs {agents[1].name}: {res.outcome} at tick {res.final_tick}")
    return [path, log_path]


def cmd_experiment(args, cfg, out: Path) -> list[Path]:
    sen_path = out / "sen.json"
    episodes = args.episodes or cfg.experiment.episodes
    k = cfg.experiment.k
    ports = _ports(cfg)
    doc: dict = {"preset": args.preset, "episodes": episodes, "seed": cfg.seed}
    if args.preset in ("pool", "ablation"):
        pool = list(_library(out / "seen.json")) + list(_library(out / "unseen.json"))
        sen = SENParams.load(sen_path) if sen_path.exists() else None
        if args.preset == "ablation":
            ab = ablation_study(str(sen_path), pool, episodes, cfg.seed, ABLATIONS, cfg.map, sen, ports)
            doc["scores"] = {v: s.tolist() for v, s in ab["scores"].items()}
            doc["gaps"] = ab["gaps"]
            for v, s in ab["scores"].items():
                print(f"{v:12s} mean score {s.mean():.3f} over {len(s)} matches")
            for name, (d, lo, hi) in ab["gaps"].items():
                print(f"{name:28s} gap {d:+.3f}  95% CI [{lo:+.3f}, {hi:+.3f}]")
        else:
            sap = score_vs_pool(AgentSpec("sap", sen_path=str(sen_path), k=k), pool, episodes,
                                cfg.seed, cfg.map, sen, ports)
            base = fixed_baseline_vs_pool(pool, episodes, cfg.seed, cfg.map, k)
            doc.update(sap=sap.tolist(), fixed=base.tolist())
            print(f"SAP vs pool {sap.mean():.3f}; fixed vs pool {base.mean():.3f}")
    elif args.preset == "recognition":
        recog = recognition_accuracy(episodes, cfg.seed, cfg.map, cfg=cfg.recognition, k=k)
        doc["recognition"] = recog
        for value, dims in recog["by_value"].items():
            print(f"aggression={str(value).lower():5s} " + "  ".join(f"{d} {a:.2f}" for d, a in dims.items()))
    else:
        raw = cfg.experiment.agents or {
            "SAP": {"kind": "sap"}, "Vanilla": {"kind": "vanilla"}, "TA": {"kind": "tips"},
            "workerRushLike": {"kind": "bot", "bot": "workerRushLike"},
            "lightRushLike": {"kind": "bot", "bot": "lightRushLike"},
        }
        specs = {}
        for label, d in raw.items():
            d = dict(d)
            d.setdefault("k", k)
            if d["kind"].startswith("sap"):
                d.setdefault("sen_path", str(sen_path))
            specs[label] = AgentSpec.from_dict(d)
        report = run_experiment(specs, episodes, cfg.seed, cfg.map, ports=ports)
        doc["cells"] = {f"{a}|{b}": vars(c) for (a, b), c in report.cells.items()}
        doc["labels"] = report.labels
        doc["matches"] = [r.to_record() for r in report.results]
        for (a, b), c in sorted(report.cells.items()):
            print(f"{a:>16s} vs {b:<16s} W/D/L {c.wins}/{c.draws}/{c.losses}")
    path = out / f"experiment_{args.preset}.json"
    path.write_text(json.dumps(doc, indent=2, default=str))
    return [path, *cmd_report(args, cfg, out)]


def cmd_report(args, cfg, out: Path) -> list[Path]:
    """Rebuild the CSV tables from the JSON outputs already in out-dir."""
    report, results, confusion, bars, recog = None, [], None, [], None
    mpath = out / "experiment_matrix.json"
    if mpath.exists():
        doc = json.loads(mpath.read_text())
        report = ExperimentReport(doc["labels"])
        for key, c in doc["cells"].items():
            a, b = key.split("|")
            report.cells[(a, b)] = Cell(**c)
        for m in doc["matches"]:
            results.append(SimpleNamespace(
                agents=tuple(m["agents"]),
                action_histogram={int(k): v for k, v in m["action_histogram"].items()},
                metric_series={int(k): v for k, v in m["metric_series"].items()}))
    epath = out / "sen_eval.json"
    if epath.exists():
        doc = json.loads(epath.read_text())
        confusion = doc["metrics"]["confusion"]
        for b in doc.get("searched_response", {}).get("bars", []):
            bars.append(Bar(parse_strategy(b["opponent"]), parse_strategy(b["response"]), b["predicted"],
                            b["wins"], b["draws"], b["episodes"]))
    rpath = out / "experiment_recognition.json"
    if rpath.exists():
        recog = json.loads(rpath.read_text())["recognition"]
    paths = emit_reports(out / "reports", report, results, confusion, bars, recog)
    if args.command == "report":
        for p in paths:
            print(p)
    return paths


COMMANDS = {
    "gen-strategies": cmd_gen_strategies,
    "tournament": cmd_tournament,
    "train-sen": cmd_train_sen,
    "eval-sen": cmd_eval_sen,
    "match": cmd_match,
    "experiment": cmd_experiment,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sap-rts", description="Strategy-aware planning on a small RTS.")
    ap.add_argument("--config", help="YAML/JSON config file")
    ap.add_argument("--seed", type=int, help="overrides config seed")
    ap.add_argument("--out-dir", default="runs/default", help="all outputs go here (default %(default)s)")
    ap.add_argument("--workers", type=int, default=1, help="worker processes for tournaments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-strategies", help="sample a strategy library and split it seen/unseen")
    p.add_argument("--size", type=int)
    p.add_argument("--seen", type=int)

    p = sub.add_parser("tournament", help="round robin over the seen library (resumable)")
    p.add_argument("--library", help="library JSON (default out-dir/seen.json)")
    p.add_argument("--episodes", type=int, help="episodes per ordered pair")
    p.add_argument("--output", help="dataset JSONL (default out-dir/dataset.jsonl)")

    p = sub.add_parser("train-sen", help="train the strategy evaluation network")
    p.add_argument("--data", help="dataset JSONL (default out-dir/dataset.jsonl)")

    p = sub.add_parser("eval-sen", help="held-out metrics and searched-response bars")
    p.add_argument("--sen")
    p.add_argument("--data")
    p.add_argument("--unseen", help="library of opponents for the bar chart (default out-dir/unseen.json)")
    p.add_argument("--episodes", type=int, default=5)
    p.add_argument("--no-bars", action="store_true")

    p = sub.add_parser("match", help="play one match and log events")
    p.add_argument("p1", help="agent: sap|sap_epe|sap_no_sen|sap_no_tips|vanilla|tips|bot:<name>|fixed:<k=v,...>")
    p.add_argument("p2")
    p.add_argument("--step-limit", type=int)

    p = sub.add_parser("experiment", help="pairwise matrix, pool score, ablation or recognition study")
    p.add_argument("--preset", choices=("matrix", "pool", "ablation", "recognition"), default="matrix")
    p.add_argument("--episodes", type=int)

    sub.add_parser("report", help="rewrite CSV tables from results in out-dir")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_mod.load(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed).validate()
        if cfg.stats:
            apply_stat_overrides(cfg.stats)
        out = Path(args.out_dir).resolve()
        out.mkdir(parents=True, exist_ok=True)
        t0 = time.time()
        outputs = COMMANDS[args.command](args, cfg, out)
        _write_manifest(out, args, cfg, outputs, time.time() - t0)
    except (config_mod.ConfigError, AgentSpecError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    finally:
        reset_stats()
    return 0


if __name__ == "__main__":
    sys.exit(main())
