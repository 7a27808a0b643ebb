"""gnuplot scripts rendering the CSV outputs

Each script reads the CSV by column name and writes a PNG next to it, so
``gnuplot grid.csv.gp`` produces ``grid.png``.
"""
import logging
from pathlib import Path
from typing import List, Optional, Sequence


SCRIPT_SUFFIX = ".gp"
PI_TICS = 'set {axis}tics ("0" 0, "π/2" pi/2, "π" pi, "3π/2" 3*pi/2, "2π" 2*pi)'
ANGLE_COLUMNS = ("phi", "zeta", "zeta_unwrapped")


logger = logging.getLogger(__name__)


def _quote(text: str) -> str:
    return "'" + str(text).replace("'", "''") + "'"


def _preamble(output: Path, title: str) -> List[str]:
    return [
        "set terminal pngcairo size 900,750 enhanced",
        f"set output {_quote(output.name)}",
        'set datafile separator ","',
        f"set title {_quote(title)}",
    ]


def _axis(axis: str, column: str) -> List[str]:
    lines = [f"set {axis}label {_quote(column)}"]
    if column in ANGLE_COLUMNS:
        lines.append(PI_TICS.format(axis=axis))
    return lines


def heatmap_script(
    csv_path: Path,
    x: str,
    y: str,
    z: str,
    title: str,
    logscale: bool = False,
    square: bool = True,
) -> str:
    """Colour map of column ``z`` over the ``(x, y)`` plane

    Works for regular grids and scattered Monte Carlo samples alike.
    """
    csv_path = Path(csv_path)
    lines = _preamble(csv_path.with_suffix(".png"), title)
    lines += _axis("x", x) + _axis("y", y)
    lines += [f"set cblabel {_quote(z)}", "set palette rgb 33,13,10"]
    if square:
        lines.append("set size ratio -1")
    if logscale:
        lines.append("set logscale cb")
    lines.append(
        f"plot {_quote(csv_path.name)} using {_quote(x)}:{_quote(y)}:{_quote(z)} "
        "with points pointtype 5 pointsize 0.5 palette notitle"
    )
    return "\n".join(lines) + "\n"


def profile_script(
    csv_paths: Sequence[Path],
    title: str,
    x: str = "phi",
    y: str = "p",
    labels: Optional[Sequence[str]] = None,
) -> str:
    """Line plot of column ``y`` against ``x``, one line per CSV"""
    csv_paths = [Path(path) for path in csv_paths]
    labels = list(labels) if labels is not None else [path.stem for path in csv_paths]
    lines = _preamble(csv_paths[0].with_suffix(".png"), title)
    lines += _axis("x", x) + _axis("y", y)
    lines.append("set key outside right")
    plots = [
        f"{_quote(path.name)} using {_quote(x)}:{_quote(y)} with lines "
        f"title {_quote(label)}"
        for path, label in zip(csv_paths, labels)
    ]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


def write_script(csv_path: Path, script: str) -> Path:
    """Write ``script`` next to ``csv_path`` with the ``.gp`` suffix appended"""
    csv_path = Path(csv_path)
    path = csv_path.with_name(csv_path.name + SCRIPT_SUFFIX)
    path.write_text(script, encoding="utf-8")
    logger.info(f"Wrote plot script {path}")
    return path


def history_script(csv_path: Path) -> str:
    """Training and validation loss per epoch on a log scale"""
    csv_path = Path(csv_path)
    name = _quote(csv_path.name)
    lines = _preamble(csv_path.with_suffix(".png"), "loss per epoch")
    lines += ["set xlabel 'epoch'", "set ylabel 'mean squared error'", "set logscale y"]
    lines.append(
        f"plot {name} using 'epoch':'train_loss' with lines title 'training', \\\n"
        f"     {name} using 'epoch':'val_loss' with lines title 'validation'"
    )
    return "\n".join(lines) + "\n"
