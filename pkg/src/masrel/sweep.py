"""Parameter sweeps over Monte Carlo runs, CSV output and plots."""
from __future__ import annotations

import copy
import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .config import KEYS, ConfigError, ScenarioConfig, set_value
from .estimator import monte_carlo

HEADER = ("param", "mean_lambda", "std_lambda", "r_service", "mean_m")


@dataclass
class SweepSpec:
    parameter: str
    values: list
    output_path: str | None = None

    def validate(self) -> "SweepSpec":
        if self.parameter not in KEYS:
            raise ConfigError(f"unknown sweep parameter {self.parameter!r}", key=self.parameter)
        if not self.values:
            raise ConfigError("sweep needs at least one value", key=self.parameter)
        return self


@dataclass(frozen=True)
class SweepRow:
    param: str
    mean_lambda: float
    std_lambda: float
    r_service: float
    mean_m: float

    def cells(self) -> list[str]:
        return [self.param] + [_num(x) for x in
                               (self.mean_lambda, self.std_lambda, self.r_service, self.mean_m)]


def _num(x: float) -> str:
    return format(x, ".10g")


def _label(value) -> str:
    return str(getattr(value, "value", value))


def parse_sweep(text: str) -> SweepSpec:
    """Sweep file: ``parameter = key``, ``values = a, b, c``, optional ``output = path``."""
    items: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in ("parameter", "values", "output"):
            raise ConfigError(f"bad sweep line {raw.strip()!r}", line=lineno)
        items[key] = value.strip()
    if "parameter" not in items or "values" not in items:
        raise ConfigError("sweep file needs 'parameter' and 'values'")
    values = [v.strip() for v in items["values"].split(",") if v.strip()]
    return SweepSpec(items["parameter"], values, items.get("output")).validate()


def config_for(cfg: ScenarioConfig, parameter: str, value) -> ScenarioConfig:
    out = copy.deepcopy(cfg)
    try:
        set_value(out, parameter, value)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value {value!r} for {parameter}: {exc}", key=parameter) from None
    return out.validate()


def run_sweep(cfg: ScenarioConfig, sweep: SweepSpec, *, jobs: int = 1,
              base_seed: int | None = None) -> list[SweepRow]:
    """One Monte Carlo run per value, all sharing the same base seed."""
    sweep.validate()
    seed = cfg.seed if base_seed is None else base_seed
    rows = []
    for value in sweep.values:
        report = monte_carlo(config_for(cfg, sweep.parameter, value), seed, jobs=jobs)
        rows.append(SweepRow(_label(value), report.mean_lambda, report.std_lambda,
                             report.mean_r_service, report.mean_final_m))
    return rows


def rows_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for row in rows:
        writer.writerow(row.cells())
    return buf.getvalue()


def read_csv(text: str) -> list[SweepRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != HEADER:
        raise ValueError(f"unexpected CSV header {header}")
    return [SweepRow(r[0], *(float(x) for x in r[1:])) for r in reader if r]


@dataclass
class PlotStyle:
    title: str = ""
    xlabel: str = ""
    ylabel: str = "mean reliability"
    kind: str = "line"  # or "column"
    ylim: tuple[float, float] | None = (0.0, 1.05)
    extra: dict = field(default_factory=dict)


def _x_values(rows: Sequence[SweepRow]) -> tuple[list, bool]:
    try:
        return [float(r.param) for r in rows], True
    except ValueError:
        return [r.param for r in rows], False


def emit_plot(series: Sequence[SweepRow] | Mapping[str, Sequence[SweepRow]], path: str | Path,
              style: PlotStyle | None = None) -> Path:
    """Write an SVG chart of mean reliability (with std error bars) plus the raw CSV.

    ``series`` is either one list of rows or a mapping of label -> rows; each
    series gets its own CSV next to the plot.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    style = style or PlotStyle()
    groups = dict(series) if isinstance(series, Mapping) else {"": list(series)}
    if not groups or not any(groups.values()):
        raise ValueError("nothing to plot")
    path = Path(path).with_suffix(".svg")
    path.parent.mkdir(parents=True, exist_ok=True)

    plt.rcParams["svg.hashsalt"] = "masrel"
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    n_groups = len(groups)
    for idx, (label, rows) in enumerate(groups.items()):
        if not rows:
            raise ValueError(f"series {label!r} is empty")
        xs, numeric = _x_values(rows)
        ys = [r.mean_lambda for r in rows]
        err = [r.std_lambda for r in rows]
        if style.kind == "column":
            pos = list(range(len(rows)))
            width = 0.8 / n_groups
            ax.bar([p + (idx - (n_groups - 1) / 2) * width for p in pos], ys, width,
                   yerr=err, capsize=3, label=label or None)
            ax.set_xticks(pos, [r.param for r in rows])
        else:
            ax.errorbar(xs if numeric else list(range(len(rows))), ys, yerr=err,
                        marker="o", capsize=3, label=label or None)
            if not numeric:
                ax.set_xticks(list(range(len(rows))), xs)
        suffix = f"_{label}" if label else ""
        path.with_name(f"{path.stem}{suffix}.csv").write_text(rows_to_csv(rows))
    ax.set_xlabel(style.xlabel)
    ax.set_ylabel(style.ylabel)
    if style.title:
        ax.set_title(style.title)
    if style.ylim:
        ax.set_ylim(*style.ylim)
    if n_groups > 1 or next(iter(groups)):
        ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
