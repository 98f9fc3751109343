import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from app.core.errors import AssetError

COLUMNS = ("psnr", "lpips", "ssim", "rmse", "rmsew")
HEADERS = {
    "psnr": "PSNR↑",
    "lpips": "LPIPS↓",
    "ssim": "SSIM↑",
    "rmse": "RMSE↓",
    "rmsew": "RMSEw↓",
}


@dataclass(frozen=True)
class MetricsRow:
    id: str
    psnr: float
    ssim: float
    rmse: float
    rmsew: float | None = None
    lpips: float | None = None


@dataclass
class MetricsReport:
    rows: list[MetricsRow] = field(default_factory=list)
    failures: list[tuple[str, str]] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def aggregate(self) -> dict[str, float | None]:
        """Column means over the rows that carry a value."""
        out = {}
        for col in COLUMNS:
            values = [getattr(r, col) for r in self.rows if getattr(r, col) is not None]
            out[col] = math.fsum(values) / len(values) if values else None
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["id", *COLUMNS])
        for row in sorted(self.rows, key=lambda r: r.id):
            writer.writerow([row.id, *(_fmt(getattr(row, c)) for c in COLUMNS)])
        agg = self.aggregate()
        writer.writerow(["mean", *(_fmt(agg[c]) for c in COLUMNS)])
        return buf.getvalue()

    def to_markdown(self) -> str:
        lines = [
            f"# {self.meta.get('method', 'report')}",
            "",
            f"- dataset: {self.meta.get('dataset', '')}",
            f"- config: {self.meta.get('config_hash', '')}",
            f"- images: {len(self.rows)}",
            "",
            comparison_table([self]),
        ]
        if self.failures:
            lines += ["", "## failures", ""]
            lines += [f"- {entry_id}: {message}" for entry_id, message in self.failures]
        return "\n".join(lines) + "\n"

    def write(self, out_dir: Path) -> tuple[Path, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path, md_path = out_dir / "report.csv", out_dir / "report.md"
        csv_path.write_text(self.to_csv(), encoding="utf-8")
        md_path.write_text(self.to_markdown(), encoding="utf-8")
        return csv_path, md_path


def _fmt(value: float | None, digits: int = 6) -> str:
    return "" if value is None else f"{value:.{digits}f}"


def comparison_table(reports: list[MetricsReport]) -> str:
    """Aligned Markdown table, one aggregate row per report."""
    header = ["Method", "Images", *(HEADERS[c] for c in COLUMNS)]
    body = []
    for report in reports:
        agg = report.aggregate()
        body.append(
            [report.meta.get("method", ""), str(len(report.rows)), *(_fmt(agg[c], 4) for c in COLUMNS)]
        )
    widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]

    def line(cells):
        return "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"

    rule = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
    return "\n".join([line(header), rule, *(line(r) for r in body)])


def load_lpips(path: Path) -> dict[str, float]:
    """Side file computed elsewhere: {"00001": 0.012, ...}"""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise AssetError(f"cannot read LPIPS file {path}: {e}") from e
    return {str(k): float(v) for k, v in data.items()}
