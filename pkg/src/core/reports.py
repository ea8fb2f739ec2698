"""
Report tables for the content-validity and psychometric analyses.

Every table holds display strings produced from operation outputs by rounding
only; nothing is recomputed here. Tables render as markdown and as CSV.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import pandas as pd

from core.content_validity import (
    INDICATOR_LABELS,
    INDICATORS,
    LAWSHE_THRESHOLD,
    ItemCvSummary,
    StabilityReport,
    Study1Report,
    flag_item,
)
from core.psychometrics import Study2Report
from stats.correlation import DEFAULT_STAR_LEVELS, CorrelationTable, star_string
from utils.error_handler import DataError
from utils.workspace import atomic_write_text

logger = logging.getLogger(__name__)

MISSING = "n/a"
MERGED_REPORT = "report.md"
INDEX_FILE = "index.csv"

ASYMPTOTIC_P_LABEL = "Asymptotic significance value p"
RELIABILITY_COLUMNS = ("n", "α", "Guttman", "n retest", "ICC(2,1)", "ICC(3,1)", "Item-total r")


@dataclass(frozen=True)
class Formatter:
    """Rounding rules: statistics to ``decimal_places``, p-values to ``p_decimal_places``."""

    decimal_places: int = 2
    p_decimal_places: int = 3
    star_levels: Tuple[float, ...] = DEFAULT_STAR_LEVELS

    def stat(self, value: Optional[float]) -> str:
        if value is None or not math.isfinite(float(value)):
            return MISSING
        text = f"{float(value):.{self.decimal_places}f}"
        # no "-0.00"
        return text[1:] if text.startswith("-") and float(text) == 0 else text

    def p(self, value: Optional[float]) -> str:
        if value is None or not math.isfinite(float(value)):
            return MISSING
        floor = 10 ** -self.p_decimal_places
        if 0 < value < floor:
            return f"<{floor:.{self.p_decimal_places}f}"
        return f"{float(value):.{self.p_decimal_places}f}"

    def r(self, value: float, p_value: Optional[float] = None) -> str:
        text = self.stat(value)
        if p_value is not None and text != MISSING:
            text += star_string(p_value, self.star_levels)
        return text

    def legend(self) -> str:
        parts = [f"{'*' * (i + 1)} p < {level}" for i, level in enumerate(self.star_levels)]
        return "; ".join(parts)


@dataclass
class Table:
    name: str
    title: str
    frame: pd.DataFrame
    notes: List[str] = field(default_factory=list)
    emphasis: Set[Tuple[int, int]] = field(default_factory=set)

    def to_markdown(self) -> str:
        columns = [str(c) for c in self.frame.columns]
        lines = [f"## {self.title}", "", "| " + " | ".join(columns) + " |", "|" + "|".join("---" for _ in columns) + "|"]
        for i, row in enumerate(self.frame.itertuples(index=False)):
            cells = []
            for j, value in enumerate(row):
                text = "" if value is None else str(value)
                if (i, j) in self.emphasis and text:
                    text = f"**{text}**"
                cells.append(text.replace("|", "\\|"))
            lines.append("| " + " | ".join(cells) + " |")
        if self.notes:
            lines.append("")
            lines.extend(f"Note. {note}" for note in self.notes)
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        return self.frame.to_csv(index=False, lineterminator="\n")


@dataclass
class AnalysisReport:
    """Ordered set of tables written side by side as markdown and CSV."""

    title: str
    tables: List[Table] = field(default_factory=list)

    def add(self, table: Optional[Table]) -> None:
        if table is not None:
            self.tables.append(table)

    def table(self, name: str) -> Table:
        for table in self.tables:
            if table.name == name:
                return table
        raise KeyError(name)

    def to_markdown(self) -> str:
        parts = [f"# {self.title}\n"]
        parts.extend(table.to_markdown() for table in self.tables)
        return "\n".join(parts)

    def write(self, directory: Path, stem: str) -> List[Path]:
        directory = Path(directory)
        written = [atomic_write_text(directory / f"{stem}.md", self.to_markdown())]
        for table in self.tables:
            written.append(atomic_write_text(directory / f"{stem}_{table.name}.csv", table.to_csv()))
        for path in written:
            logger.info(f"Wrote {path}")
        return written


def _frame(rows: Sequence[Sequence[str]], columns: Sequence[str]) -> pd.DataFrame:
    return pd.DataFrame([list(row) for row in rows], columns=list(columns), dtype=object)


# Study 1 ---------------------------------------------------------------


def omnibus_table(report: Study1Report, fmt: Formatter, name: str, title: str) -> Table:
    """Mean ranks per group, then Chi-Square, df and p per indicator."""
    indicators = list(report.comparisons)
    columns = [""] + [INDICATOR_LABELS.get(i, i) for i in indicators]
    rows = []
    for group in report.groups:
        rows.append([f"Mean ranks {group}"] + [fmt.stat(report.comparisons[i].result.mean_ranks.get(group)) for i in indicators])
    rows.append(["Chi-Square"] + [fmt.stat(report.comparisons[i].result.statistic) for i in indicators])
    rows.append(["df"] + [str(report.comparisons[i].result.df) for i in indicators])
    rows.append([ASYMPTOTIC_P_LABEL] + [fmt.p(report.comparisons[i].result.p_value) for i in indicators])
    notes = ["; ".join(f"{label}: {size} items" for label, size in zip(report.groups, report.sizes))]
    degenerate = [INDICATOR_LABELS.get(i, i) for i in indicators if report.comparisons[i].result.degenerate]
    if degenerate:
        notes.append(f"All values tied, no test performed: {', '.join(degenerate)}")
    return Table(name, title, _frame(rows, columns), notes=notes)


def posthoc_table(report: Study1Report, fmt: Formatter, name: str, title: str) -> Optional[Table]:
    rows = []
    for indicator, comparison in report.comparisons.items():
        for pair in comparison.posthoc:
            rows.append(
                [
                    INDICATOR_LABELS.get(indicator, indicator),
                    pair.group_a,
                    pair.group_b,
                    fmt.stat(pair.z),
                    fmt.p(pair.p_raw),
                    fmt.p(pair.p_adj),
                ]
            )
    if not rows:
        return None
    columns = ["Indicator", "Group A", "Group B", "z", "p", "Adjusted p (Bonferroni)"]
    return Table(name, title, _frame(rows, columns))


def boxplot_table(report: Study1Report, fmt: Formatter, name: str, title: str) -> Table:
    rows = []
    for indicator, comparison in report.comparisons.items():
        for group, box in comparison.boxplots.items():
            rows.append(
                [INDICATOR_LABELS.get(indicator, indicator), group]
                + [fmt.stat(v) for v in (box.minimum, box.q1, box.median, box.q3, box.maximum)]
            )
    columns = ["Indicator", "Group", "Min", "Q1", "Median", "Q3", "Max"]
    return Table(name, title, _frame(rows, columns))


def lawshe_table(
    entries: Sequence[Tuple[str, str, float, bool]],
    fmt: Formatter,
    threshold: float = LAWSHE_THRESHOLD,
    name: str = "lawshe",
) -> Table:
    """One row per (item, group, CVR, retained) entry."""
    rows = [[item_id, group, fmt.stat(value), "yes" if kept else "no"] for item_id, group, value, kept in entries]
    kept = sum(1 for *_, k in entries if k)
    notes = [f"{kept} of {len(entries)} items reach CVR >= {threshold}"]
    return Table(name, "Lawshe content validity ratio per item", _frame(rows, ["Item", "Group", "CVR", "Retained"]), notes)


def item_summary_table(summaries: Sequence[ItemCvSummary], fmt: Formatter, name: str = "items") -> Table:
    rows = [
        [
            s.item_id,
            s.group_label,
            str(s.n_raters),
            fmt.stat(s.cvr),
            fmt.stat(s.mean_options_rationality),
            fmt.stat(s.mean_scoring_rationality),
            str(s.overall_sum),
        ]
        for s in summaries
    ]
    columns = ["Item", "Group", "Raters"] + [INDICATOR_LABELS[i] for i in INDICATORS]
    return Table(name, "Indicators per item", _frame(rows, columns))


def study1_report(
    report: Study1Report,
    fmt: Formatter,
    summaries: Sequence[ItemCvSummary] = (),
    threshold: float = LAWSHE_THRESHOLD,
    title: str = "Content validity",
) -> AnalysisReport:
    out = AnalysisReport(title)
    out.add(omnibus_table(report, fmt, "omnibus", "Kruskal-Wallis comparison of item groups"))
    out.add(posthoc_table(report, fmt, "posthoc", "Dunn post hoc comparisons"))
    out.add(boxplot_table(report, fmt, "boxplot", "Indicator quartiles per group"))
    out.add(lawshe_table(report.lawshe, fmt, threshold))
    if summaries:
        out.add(item_summary_table(summaries, fmt))
    return out


def stability_table(report: StabilityReport, fmt: Formatter, name: str = "stability") -> Table:
    indicators = list(report.rows)
    rows_by_indicator = [report.rows[i] for i in indicators]
    exact = all(row.method == "exact" for row in rows_by_indicator)
    u_label, z_label, exact_label = StabilityReport.ROW_LABELS
    columns = [""] + [INDICATOR_LABELS.get(i, i) for i in indicators]
    rows = [
        [f"Mean ranks {report.label_a}"] + [fmt.stat(r.mean_ranks[report.label_a]) for r in rows_by_indicator],
        [f"Mean ranks {report.label_b}"] + [fmt.stat(r.mean_ranks[report.label_b]) for r in rows_by_indicator],
        [u_label] + [fmt.stat(r.u) for r in rows_by_indicator],
        [z_label] + [fmt.stat(r.z) for r in rows_by_indicator],
        [exact_label if exact else ASYMPTOTIC_P_LABEL] + [fmt.p(r.p_value) for r in rows_by_indicator],
    ]
    notes = [f"U and z refer to {report.label_b}."]
    return Table(name, f"Mann-Whitney comparison of {report.label_a} and {report.label_b}", _frame(rows, columns), notes)


def stability_report(
    report: StabilityReport,
    fmt: Formatter,
    summaries: Sequence[ItemCvSummary] = (),
    threshold: float = LAWSHE_THRESHOLD,
) -> AnalysisReport:
    out = AnalysisReport("Generation stability")
    out.add(stability_table(report, fmt))
    if summaries:
        entries = [(s.item_id, s.group_label, s.cvr, flag_item(s, threshold)) for s in summaries]
        out.add(lawshe_table(entries, fmt, threshold))
        out.add(item_summary_table(summaries, fmt))
    return out


# Study 2 ---------------------------------------------------------------


def reliability_table(report: Study2Report, fmt: Formatter) -> Table:
    rows = []
    notes: List[str] = []
    for facet, entry in report.reliability.facets.items():
        span = entry.item_total_range()
        rows.append(
            [
                facet.label,
                str(entry.n_persons),
                fmt.stat(entry.cronbach_alpha),
                fmt.stat(entry.guttman_split_half),
                str(entry.n_retest),
                fmt.stat(entry.icc_2_1),
                fmt.stat(entry.icc_3_1),
                f"{fmt.stat(span[0])} to {fmt.stat(span[1])}" if span else MISSING,
            ]
        )
        notes.extend(f"{facet.label}: {note}" for note in entry.notes)
        flagged = sorted(item for item, it in entry.item_total.items() if it.flag)
        if flagged:
            notes.append(f"{facet.label}: item-total undefined for {', '.join(flagged)}")
    columns = ["Facet"] + list(RELIABILITY_COLUMNS)
    return Table("reliability", "Internal consistency, split-half and test-retest reliability", _frame(rows, columns), notes)


def descriptives_table(report: Study2Report, fmt: Formatter) -> Optional[Table]:
    rows = [
        [facet.label, session, str(d.n), fmt.stat(d.mean), fmt.stat(d.sd)]
        for session, stats in report.descriptives.items()
        for facet, d in stats.items()
    ]
    if not rows:
        return None
    return Table("descriptives", "Facet totals", _frame(rows, ["Facet", "Session", "n", "M", "SD"]))


def correlation_frame(table: CorrelationTable, fmt: Formatter) -> Tuple[pd.DataFrame, Set[Tuple[int, int]]]:
    """Display grid of r with stars; the upper triangle is left blank for lower-triangular tables."""
    shown = set(table.cells())
    rows = []
    for i, label in enumerate(table.row_labels):
        row = [label]
        for j in range(len(table.col_labels)):
            if (i, j) in shown:
                p_value = float(table.p[i, j])
                row.append(fmt.r(float(table.r[i, j]), p_value if math.isfinite(p_value) else None))
            else:
                row.append("")
        rows.append(row)
    emphasis = {(i, j + 1) for i, j in table.marked}
    return _frame(rows, [""] + list(table.col_labels)), emphasis


def mtmm_table(report: Study2Report, fmt: Formatter) -> Optional[Table]:
    if report.mtmm is None:
        return None
    frame, emphasis = correlation_frame(report.mtmm, fmt)
    notes = [f"n = {report.mtmm.n}. Convergent same-facet cells in bold. {fmt.legend()}"]
    return Table("mtmm", "Multitrait-multimethod correlations", frame, notes, emphasis)


def mtmm_summary_table(report: Study2Report, fmt: Formatter) -> Optional[Table]:
    summary = report.mtmm_summary
    if summary is None:
        return None
    rows = [
        ["Convergent r, mean", fmt.stat(summary.convergent_mean)],
        ["Convergent r, SD", fmt.stat(summary.convergent_sd)],
    ]
    rows.extend([f"Discriminant |r| mean, {method}", fmt.stat(v)] for method, v in summary.discriminant_mean_abs.items())
    return Table("mtmm_summary", "Convergent and discriminant validity", _frame(rows, ["", "Value"]))


def criterion_table(table: Optional[CorrelationTable], fmt: Formatter, name: str, title: str) -> Optional[Table]:
    if table is None:
        return None
    frame, _ = correlation_frame(table, fmt)
    return Table(name, title, frame, [f"n = {table.n}. {fmt.legend()}"])


def instrument_table(report: Study2Report, fmt: Formatter) -> Optional[Table]:
    if not report.instrument_alpha:
        return None
    rows = [[scale, fmt.stat(alpha)] for scale, alpha in report.instrument_alpha.items()]
    return Table("instrument_alpha", "Reliability of comparison instruments", _frame(rows, ["Scale", "α"]))


def exclusion_table(report: Study2Report) -> Table:
    rows = [[e.participant_id, e.reason] for e in report.excluded]
    notes = [f"{len(report.retained)} retained, {len(report.excluded)} excluded"]
    return Table("exclusions", "Excluded participants", _frame(rows, ["Participant", "Reason"]), notes)


def study2_report(report: Study2Report, fmt: Formatter) -> AnalysisReport:
    out = AnalysisReport("Psychometric properties")
    out.add(reliability_table(report, fmt))
    out.add(descriptives_table(report, fmt))
    out.add(mtmm_table(report, fmt))
    out.add(mtmm_summary_table(report, fmt))
    out.add(criterion_table(report.criterion_sjt, fmt, "criterion_sjt", "Criterion correlations, SJT"))
    out.add(criterion_table(report.criterion_likert, fmt, "criterion_likert", "Criterion correlations, Likert"))
    out.add(instrument_table(report, fmt))
    out.add(exclusion_table(report))
    if report.notes:
        out.tables[0].notes.extend(report.notes)
    return out


# Merge -----------------------------------------------------------------


def merge_reports(directory: Path, sources: Optional[Iterable[Path]] = None) -> Tuple[Path, Path]:
    """Concatenate the markdown reports of a directory into report.md and list its CSV tables in index.csv."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"Report directory not found: {directory}")
    markdown = sorted(sources) if sources is not None else sorted(
        p for p in directory.rglob("*.md") if p.name != MERGED_REPORT
    )
    if not markdown:
        raise DataError(f"No markdown reports under {directory}")
    merged = "\n".join(p.read_text(encoding="utf-8").rstrip("\n") + "\n" for p in markdown)
    report_path = atomic_write_text(directory / MERGED_REPORT, merged)

    csvs = sorted(p for p in directory.rglob("*.csv") if p.name != INDEX_FILE)
    index = pd.DataFrame(
        [(p.relative_to(directory).as_posix(), p.stem) for p in csvs], columns=["path", "table"]
    )
    index_path = atomic_write_text(directory / INDEX_FILE, index.to_csv(index=False, lineterminator="\n"))
    logger.info(f"Merged {len(markdown)} reports into {report_path}; indexed {len(csvs)} tables")
    return report_path, index_path
