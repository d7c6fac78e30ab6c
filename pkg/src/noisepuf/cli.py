"""``noisepuf`` command line.

Exit status: 0 accept/pass, 1 reject/fail, 2 unknown identity, 3 operational
error (bad config, missing files, usage errors).
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import harness
from .config import (ENV_OUT, ChecksConfig, ConfigError, RunConfig, config_keys, dump_config,
                     load_config)
from .puf import (AuthDecision, CrpDatabase, authenticate, build_database, default_challenges,
                  hamming_fraction, pipeline_from_dict, quantize)
from .synth import load_trace, make_device_profile, save_trace, synthesize_samples, NoiseTrace
from ._seeds import derive_seed

EXIT_OK, EXIT_FAIL, EXIT_UNKNOWN, EXIT_ERROR = 0, 1, 2, 3


def _keys_help() -> str:
    lines = ["\b", "Config keys (YAML, nested by dots) and defaults:"]
    lines += [f"  {k} = {v!r}" for k, v in config_keys()]
    lines += ["", f"Output root: output.out_dir, else ${ENV_OUT}, else ./noisepuf_out."]
    return "\n".join(lines)


def _load(ctx: click.Context, path) -> RunConfig:
    cfg = load_config(path)
    ctx.obj = cfg
    return cfg


def _echo(cfg: RunConfig, msg: str, level: int = 1) -> None:
    if cfg.output.verbosity >= level:
        click.echo(msg)


config_option = click.option("--config", "config_path", type=click.Path(dir_okay=False),
                             default=None, help="YAML run configuration (defaults if omitted).")


@click.group(epilog=_keys_help(), context_settings={"max_content_width": 100})
def cli():
    """Switching-noise PUF enrollment, authentication and anomaly detection."""


# -- synth -----------------------------------------------------------------------------

@cli.command()
@config_option
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Trace directory [default: <out root>/traces].")
@click.option("--rogue", "n_rogue", type=int, default=0, show_default=True,
              help="Also write probe traces from this many never-enrolled devices.")
@click.pass_context
def synth(ctx, config_path, out_dir, n_rogue):
    """Write calibration and probe traces for every device of the fleet."""
    cfg = _load(ctx, config_path)
    sc = cfg.scenario
    pl = sc.pipeline
    out = Path(out_dir) if out_dir else cfg.out_root() / "traces"
    challenges = default_challenges(sc.n_challenges)
    devices = harness.build_fleet(sc)
    for d in devices:
        ddir = out / f"device_{d.device_id:03d}"
        ddir.mkdir(parents=True, exist_ok=True)
        (ddir / "profile.json").write_text(json.dumps(d.to_dict(), indent=1, sort_keys=True) + "\n")
        rms = []
        for ch in challenges:
            for i in range(sc.n_calib_traces):
                seed = derive_seed("calib", d.seed, ch.challenge_id, i)
                x = synthesize_samples(d, ch.condition, pl.measure_samples, seed, pl.synth)
                save_trace(NoiseTrace(x, pl.synth.sample_rate, d.device_id, ch.condition,
                                      "benign", seed), ddir / f"{ch.challenge_id}_calib_{i:02d}")
                rms.append(float(np.sqrt(np.mean(x**2))))
            _write_probe(d, ch, pl, derive_seed("probe", d.seed, ch.challenge_id), ddir)
        _echo(cfg, f"device {d.device_id:3d}  seed={d.seed}  traces={len(rms)}  "
                   f"mean_rms={np.mean(rms):.4f}")
    for j in range(n_rogue):
        rogue = make_device_profile(derive_seed("cli-rogue", sc.seed, j), sc.variability, -1,
                                    pl.synth)
        rdir = out / f"rogue_{j:03d}"
        rdir.mkdir(parents=True, exist_ok=True)
        for ch in challenges:
            _write_probe(rogue, ch, pl, derive_seed("probe", rogue.seed, ch.challenge_id), rdir)
        _echo(cfg, f"rogue  {j:3d}  seed={rogue.seed}")
    return EXIT_OK


def _write_probe(dev, ch, pl, seed, ddir: Path) -> None:
    x = synthesize_samples(dev, ch.condition, pl.measure_samples, seed, pl.synth)
    save_trace(NoiseTrace(x, pl.synth.sample_rate, dev.device_id, ch.condition, "benign", seed),
               ddir / f"{ch.challenge_id}_probe")


# -- enroll ----------------------------------------------------------------------------

@cli.command()
@config_option
@click.option("--traces", "trace_dir", type=click.Path(file_okay=False), default=None,
              help="Directory written by `synth` [default: <out root>/traces].")
@click.option("--db", "db_path", type=click.Path(dir_okay=False), default=None,
              help="Output CRP database [default: <out root>/crp_db.json].")
@click.pass_context
def enroll(ctx, config_path, trace_dir, db_path):
    """Build the CRP database from calibration traces on disk."""
    cfg = _load(ctx, config_path)
    sc = cfg.scenario
    pl = sc.pipeline
    tdir = Path(trace_dir) if trace_dir else cfg.out_root() / "traces"
    if not tdir.is_dir():
        raise ConfigError(f"trace directory {tdir} does not exist; run `noisepuf synth` first")
    challenges = default_challenges(sc.n_challenges)
    dev_dirs = sorted(tdir.glob("device_*"))
    if not dev_dirs:
        raise ConfigError(f"no device_* directories in {tdir}")
    feats = {}
    for ddir in dev_dirs:
        per_ch = {}
        dev_id = None
        for ch in challenges:
            files = sorted(ddir.glob(f"{ch.challenge_id}_calib_*.f32"))
            if len(files) < 8:
                raise ConfigError(f"{ddir}: found {len(files)} calibration traces for "
                                  f"{ch.challenge_id}, need at least 8")
            rows = []
            for f in files:
                tr = load_trace(f)
                dev_id = tr.device_id
                rows.append(pl.extractor(ch.condition.switching_freq)(tr.samples))
            per_ch[ch.challenge_id] = np.vstack(rows)
        feats[dev_id] = per_ch
    db, _ = build_database(feats, challenges, pl)
    out = Path(db_path) if db_path else cfg.out_root() / "crp_db.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    db.save(out)
    _echo(cfg, f"enrolled {len(feats)} devices x {len(challenges)} challenges -> "
               f"{len(db)} records in {out}")
    return EXIT_OK


# -- auth ------------------------------------------------------------------------------

@cli.command()
@click.option("--db", "db_path", type=click.Path(dir_okay=False), required=True)
@click.option("--device", "device_id", type=int, required=True, help="Claimed device id.")
@click.option("--challenge", "challenge_id", required=True)
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False), required=True,
              help="Response measurement (.f32 with .json sidecar).")
def auth(db_path, device_id, challenge_id, trace_path):
    """Authenticate one measured response against the database."""
    try:
        db = CrpDatabase.load(db_path)
    except OSError as e:
        raise ConfigError(f"cannot read database {db_path}: {e}") from e
    rec = db.get(device_id, challenge_id)
    if rec is None:
        click.echo(f"unknown_identity device={device_id} challenge={challenge_id}")
        return EXIT_UNKNOWN
    pl = pipeline_from_dict(db.pipeline)
    tr = load_trace(trace_path)
    if tr.sample_rate != pl.synth.sample_rate:
        raise ConfigError(f"trace sample rate {tr.sample_rate} differs from enrolled "
                          f"{pl.synth.sample_rate}")
    f = pl.extractor(rec.challenge.condition.switching_freq)(tr.samples)
    resp = quantize(f, rec.calibration, pl.puf)
    verdict = authenticate(device_id, rec.challenge, resp, db, pl.puf)
    dist = hamming_fraction(resp, rec.reference)
    click.echo(f"{verdict.value} device={device_id} challenge={challenge_id} "
               f"distance={dist:.4f} tau={pl.puf.auth_threshold}")
    return EXIT_OK if verdict is AuthDecision.ACCEPT else EXIT_FAIL


# -- detect / bench / report -----------------------------------------------------------

def evaluate_checks(result: harness.ScenarioResult, checks: ChecksConfig) -> dict[str, dict]:
    """Acceptance gates that apply to the sections present in ``result``."""
    out = {}

    def gate(name, value, ok):
        out[name] = {"value": value, "pass": bool(ok) if value is not None else False}

    p = result.puf
    if p:
        u = p["uniqueness_pooled"]
        gate("uniqueness", u, checks.uniqueness_min <= u <= checks.uniqueness_max)
        gate("reliability_min", p["reliability_min"], p["reliability_min"] >= checks.reliability_min)
        rf = p["randomness_fleet"]
        if "p_values" in rf:
            ok = rf["pass"]["monobit"] and rf["pass"]["block_frequency"]
            gate("randomness_fleet", min(rf["p_values"]["monobit"],
                                         rf["p_values"]["block_frequency"]), ok)
    if result.roc:
        gate("auc", result.roc["auc"], result.roc["auc"] >= checks.auc_min)
    d = result.detection
    if d:
        for kind, m in d["pipeline"]["per_attack"].items():
            if m["counts"]["tp"] + m["counts"]["fn"] > 0:
                f1 = m["f1"]
                gate(f"f1_{kind}", f1, f1 is not None and f1 >= checks.f1_min)
        g = d["accuracy_gain_over_baseline"]
        gate("baseline_gain", g, g is not None and g >= checks.baseline_gain_min)
    if result.latency:
        gate("p90_latency_us", result.latency["p90"],
             result.latency["p90"] < checks.p90_latency_max_us)
    a = result.auth
    if a.get("impersonation_reject_rate") is not None:
        gate("impersonation_reject", a["impersonation_reject_rate"],
             a["impersonation_reject_rate"] >= checks.impersonation_reject_min)
    if a.get("genuine_accept_rate") is not None:
        gate("genuine_accept", a["genuine_accept_rate"],
             a["genuine_accept_rate"] >= checks.genuine_accept_min)
    return out


def _print_checks(checks: dict) -> bool:
    for name, c in checks.items():
        v = c["value"]
        shown = f"{v:.4f}" if isinstance(v, float) else str(v)
        click.echo(f"  [{'PASS' if c['pass'] else 'FAIL'}] {name} = {shown}")
    return all(c["pass"] for c in checks.values())


@cli.command()
@config_option
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Report directory [default: <out root>/detect].")
@click.option("--disable-bayes", is_flag=True, help="Final decision from the threshold classifier alone.")
@click.option("--disable-detector", is_flag=True, help="Run enrollment and PUF authentication only.")
@click.pass_context
def detect(ctx, config_path, out_dir, disable_bayes, disable_detector):
    """Run the full scenario and write the report bundle."""
    from dataclasses import replace
    cfg = _load(ctx, config_path)
    sc = cfg.scenario
    if disable_bayes or disable_detector:
        dc = replace(sc.detector, bayes_enabled=sc.detector.bayes_enabled and not disable_bayes,
                     enabled=sc.detector.enabled and not disable_detector)
        sc = replace(sc, detector=dc)
    result = harness.run_scenario(sc, progress=lambda m: _echo(cfg, m, 2))
    out = Path(out_dir) if out_dir else cfg.out_root() / "detect"
    files = harness.emit_report(result, out)
    checks = evaluate_checks(result, cfg.checks)
    (out / "checks.json").write_text(json.dumps(checks, indent=1, sort_keys=True) + "\n")
    _echo(cfg, f"report: {files['report']}")
    ok = _print_checks(checks)
    return EXIT_OK if ok else EXIT_FAIL


@cli.command()
@config_option
@click.option("--frames", "n_frames", type=int, default=None, help="Overrides bench.n_frames.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Output directory [default: <out root>/bench].")
@click.pass_context
def bench(ctx, config_path, n_frames, out_dir):
    """Time the per-frame detection stages."""
    cfg = _load(ctx, config_path)
    n = n_frames if n_frames is not None else cfg.bench.n_frames
    rep = harness.latency_bench(cfg.scenario, n)
    out = Path(out_dir) if out_dir else cfg.out_root() / "bench"
    out.mkdir(parents=True, exist_ok=True)
    (out / "bench.json").write_text(json.dumps(rep, indent=1, sort_keys=True) + "\n")
    with open(out / "latency_histogram.csv", "w") as fh:
        fh.write("bin_lo_us,bin_hi_us,count\n")
        e, c = rep["histogram"]["edges"], rep["histogram"]["counts"]
        for lo, hi, k in zip(e[:-1], e[1:], c):
            fh.write(f"{lo!r},{hi!r},{k}\n")
    click.echo(f"frames={rep['n_measured']} p50={rep['p50']:.1f}us p90={rep['p90']:.1f}us "
               f"p99={rep['p99']:.1f}us overhead={rep['overhead_median']:.2f}us")
    ok = rep["p90"] < cfg.checks.p90_latency_max_us
    click.echo(f"  [{'PASS' if ok else 'FAIL'}] p90 < {cfg.checks.p90_latency_max_us:g} us")
    return EXIT_OK if ok else EXIT_FAIL


@cli.command()
@config_option
@click.argument("report_path", type=click.Path(exists=True))
@click.pass_context
def report(ctx, config_path, report_path):
    """Summarize an existing report and re-apply the acceptance gates."""
    cfg = _load(ctx, config_path)
    r = harness.load_report(report_path)
    p = r.puf
    if p:
        click.echo(f"uniqueness {p['uniqueness_pooled']:.2f}%  min reliability "
                   f"{p['reliability_min']:.2f}%")
    if r.detection:
        for name in ("pipeline", "classifier", "baseline"):
            m = r.detection[name]
            f1 = {k: v["f1"] for k, v in m["per_attack"].items()}
            click.echo(f"{name:<10} accuracy={m['accuracy']:.4f}  f1={f1}")
    if r.roc:
        click.echo(f"auc={r.roc['auc']:.4f} ({r.roc['source']})")
    ok = _print_checks(evaluate_checks(r, cfg.checks))
    return EXIT_OK if ok else EXIT_FAIL


@cli.command("config")
@config_option
@click.pass_context
def show_config(ctx, config_path):
    """Print the effective configuration as YAML."""
    click.echo(dump_config(_load(ctx, config_path)), nl=False)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        rv = cli.main(args=argv, prog_name="noisepuf", standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return EXIT_ERROR
    except click.ClickException as e:
        e.show()
        return EXIT_ERROR
    except click.Abort:
        click.echo("aborted", err=True)
        return EXIT_ERROR
    except (ConfigError, ValueError, OSError, KeyError) as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_ERROR
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
