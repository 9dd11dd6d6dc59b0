"""Command-line pipeline: classify, analyze, attack1, attack2, translate."""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import attack, attribution, data, network, symexec

DEFAULT_DATA_PREFIX = "data/train"


@dataclass(frozen=True)
class RunConfig:
    network_path: str
    image_selector: str | None
    metric: str
    top: float
    margin: float
    lo: float
    hi: float
    out_dir: str | None
    jobs: int
    data_prefix: str
    strategy: str = "exhaustive"

    def __post_init__(self):
        if self.metric not in attribution.METRICS:
            raise ValueError(f"unknown metric '{self.metric}'")
        if not 0.0 < self.top <= 100.0:
            raise ValueError(f"--top must be in (0, 100], got {self.top}")
        if self.margin < 0.0:
            raise ValueError(f"--margin must be >= 0, got {self.margin}")
        if not self.lo < self.hi:
            raise ValueError(f"--range lo must be < hi, got {self.lo},{self.hi}")
        if self.jobs < 1:
            raise ValueError(f"--jobs must be >= 1, got {self.jobs}")


def _parse_range(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected lo,hi, got '{text}'")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numeric lo,hi, got '{text}'") from None


def _config(args) -> RunConfig:
    lo, hi = args.range
    return RunConfig(
        network_path=args.network,
        image_selector=getattr(args, "image", None),
        metric=args.metric,
        top=args.top,
        margin=args.margin,
        lo=lo,
        hi=hi,
        out_dir=getattr(args, "out", None),
        jobs=args.jobs,
        data_prefix=args.data,
        strategy=getattr(args, "strategy", "exhaustive"),
    )


def _load_inputs(cfg: RunConfig):
    net = network.load_network(cfg.network_path)
    pixels, _, description = data.select_image(cfg.image_selector, cfg.data_prefix)
    if len(pixels) != net.input_dim:
        raise ValueError(f"image has {len(pixels)} pixels, network expects {net.input_dim}")
    return net, pixels, description


def _out_path(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    return os.path.join(cfg.out_dir, name)


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def cmd_classify(args) -> int:
    cfg = _config(args)
    net, pixels, description = _load_inputs(cfg)
    result = network.forward(net, pixels)
    print(f"image: {description}")
    print("logits: " + " ".join(f"{v:.9g}" for v in result.logits))
    print(f"label: {result.label}")
    offset = 0
    for i, size in enumerate(net.hidden_sizes, start=1):
        active = int(np.sum(result.pattern[offset:offset + size]))
        print(f"layer {i}: {active}/{size} active")
        offset += size
    return 0


def cmd_analyze(args) -> int:
    cfg = _config(args)
    net, pixels, description = _load_inputs(cfg)
    label = network.forward(net, pixels).label
    coeffs = symexec.concolic_coefficients(net, pixels)
    ranking = attribution.rank(attribution.score_pixels(coeffs, pixels, label, cfg.metric), label=label)
    selected = attribution.top_percent(ranking, cfg.top)

    ranking_path = _out_path(cfg, f"ranking_{cfg.metric}.txt")
    _write(ranking_path, "".join(f"{e.pixel} {e.score:.9g}\n" for e in ranking.entries))
    overlay_path = _out_path(cfg, f"overlay_{cfg.metric}_top{cfg.top:g}.ppm")
    attribution.render_overlay(pixels, selected, "green", overlay_path)

    print(f"image: {description}")
    print(f"label: {label}")
    print(f"metric: {cfg.metric}  top: {cfg.top:g}%  selected: {len(selected)} pixels")
    print(f"wrote {ranking_path}")
    print(f"wrote {overlay_path}")
    return 0


def cmd_attack1(args) -> int:
    cfg = _config(args)
    net, pixels, description = _load_inputs(cfg)
    search = attack.search_1pixel(
        net, pixels, cfg.strategy, metric=cfg.metric, top=cfg.top,
        lo=cfg.lo, hi=cfg.hi, margin=cfg.margin, jobs=cfg.jobs,
    )
    report = attack.render_1pixel_report(search)
    report_path = _out_path(cfg, "attack1_report.txt")
    _write(report_path, report)
    overlay_path = _out_path(cfg, "attack1_overlay.ppm")
    attribution.render_overlay(pixels, search.attackable_pixels, "red", overlay_path)

    print(f"image: {description}")
    print(f"strategy: {cfg.strategy}")
    print(report.rstrip("\n").splitlines()[-1])  # the SUMMARY line
    print(f"wrote {report_path}")
    print(f"wrote {overlay_path}")
    return 0


def cmd_attack2(args) -> int:
    cfg = _config(args)
    net, pixels, description = _load_inputs(cfg)
    try:
        search = attack.search_2pixel(
            net, pixels, cfg.metric, cfg.top,
            lo=cfg.lo, hi=cfg.hi, margin=cfg.margin, jobs=cfg.jobs,
        )
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    report = attack.render_2pixel_report(search)
    report_path = _out_path(cfg, "attack2_report.txt")
    _write(report_path, report)
    union = sorted({p for pair in search.attacked_pairs for p in pair})
    overlay_path = _out_path(cfg, "attack2_overlay.ppm")
    attribution.render_overlay(pixels, union, "red", overlay_path)

    print(f"image: {description}")
    print(report.rstrip("\n").splitlines()[-1])
    print(f"wrote {report_path}")
    print(f"wrote {overlay_path}")
    return 0


def cmd_translate(args) -> int:
    cfg = _config(args)
    net = network.load_network(cfg.network_path)
    program_path = _out_path(cfg, "program.txt")
    _write(program_path, network.emit_program(net))
    print(f"wrote {program_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relupath",
        description="Concolic analysis of fully-connected ReLU classifiers: "
                    "pixel attribution and 1/2-pixel attack synthesis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, image=True, out=True):
        p.add_argument("--network", required=True, help="weight file (JSON)")
        if image:
            p.add_argument("--image", required=True, help="idx:<path-prefix>:<index> or digit:<d>")
        p.add_argument("--data", default=DEFAULT_DATA_PREFIX,
                       help="IDX path prefix for digit:<d> selectors")
        p.add_argument("--metric", choices=attribution.METRICS, default="coi")
        p.add_argument("--top", type=float, default=5.0, help="importance threshold percent")
        p.add_argument("--margin", type=float, default=attack.DEFAULT_MARGIN,
                       help="strict-inequality margin epsilon")
        p.add_argument("--range", type=_parse_range, default=(attack.DEFAULT_LO, attack.DEFAULT_HI),
                       metavar="LO,HI", help="pixel value bounds")
        p.add_argument("--jobs", type=int, default=1, help="parallel attack workers")
        if out:
            p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("classify", help="print logits, label, and activation summary")
    common(p, out=False)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("analyze", help="rank pixels and write ranking + green overlay")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("attack1", help="search 1-pixel attacks")
    common(p)
    p.add_argument("--strategy", choices=("exhaustive", "guided"), default="exhaustive")
    p.set_defaults(func=cmd_attack1)

    p = sub.add_parser("attack2", help="search 2-pixel attacks over top-ranked pixels")
    common(p)
    p.set_defaults(func=cmd_attack2)

    p = sub.add_parser("translate", help="emit the imperative-program rendering")
    common(p, image=False)
    p.set_defaults(func=cmd_translate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (network.NetworkFormatError, network.NetworkShapeError, network.NetworkValueError,
            data.IdxFormatError, symexec.PatternFlipError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
