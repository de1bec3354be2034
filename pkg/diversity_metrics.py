"""
Generation-quality metrics: token diversity D and length diversity DL.

D is the number of distinct new tokens the augmentations introduce, relative to the
token count of the original, as a percentage (it can exceed 100). DL is the mean
absolute length difference in tokens. Tokens are case-folded word characters, so
values are only comparable with other runs of this tool.
"""
import json
import logging
from dataclasses import dataclass
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from similarity import tokenize

logger = logging.getLogger(__name__)

TEXT_FIELDS = ("expanded_text", "abstract_text", "text")


class EmptyOriginal(ValueError):
    """The original document has no tokens"""


class MissingSourceRecord(KeyError):
    """An augmentation points to a source id the original corpus does not contain"""


class MissingAugmentationText(ValueError):
    """Augmentation rows with none of the text fields, e.g. `abstract` output produced without adapters"""


def _original_tokens(original: str) -> List[str]:
    tokens = tokenize(original)
    if not tokens:
        raise EmptyOriginal(f"original document has no tokens: {original!r}")
    return tokens


def token_diversity(original: str, augs: Sequence[str]) -> float:
    """100 * |tokens new in any augmentation| / |original tokens|, new tokens pooled over all augmentations"""
    base = _original_tokens(original)
    known = set(base)
    new = set()
    for aug in augs:
        new.update(t for t in tokenize(aug) if t not in known)
    return 100.0 * len(new) / len(base)


def token_diversity_per_augmentation(original: str, augs: Sequence[str]) -> float:
    """Mean over augmentations of each one's own new-token percentage"""
    base = _original_tokens(original)
    if not augs:
        return 0.0
    known = set(base)
    shares = [100.0 * len(set(tokenize(aug)) - known) / len(base) for aug in augs]
    return sum(shares) / len(shares)


def length_diversity(original: str, augs: Sequence[str]) -> float:
    base = _original_tokens(original)
    if not augs:
        return 0.0
    return sum(abs(len(tokenize(aug)) - len(base)) for aug in augs) / len(augs)


@dataclass
class DiversityReport:
    token_diversity: float
    length_diversity: float
    per_record: pd.DataFrame
    pooled: bool = True

    def to_json(self) -> Dict[str, Any]:
        return {
            "D": round(self.token_diversity, 4),
            "DL": round(self.length_diversity, 4),
            "pooled": self.pooled,
            "records": [
                {"source_id": row.source_id, "augmentations": int(row.augmentations),
                 "D": round(float(row.D), 4), "DL": round(float(row.DL), 4)}
                for row in self.per_record.itertuples(index=False)
            ],
        }

    def to_text(self) -> str:
        """Tabular report for humans"""
        lines = [
            "=" * 60,
            "AUGMENTATION DIVERSITY REPORT",
            "=" * 60,
            f"Generated: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}",
            f"Records: {len(self.per_record)}",
            f"Augmentations: {int(self.per_record['augmentations'].sum()) if len(self.per_record) else 0}",
            f"New-token mode: {'pooled over augmentations' if self.pooled else 'per augmentation'}",
            "",
            f"Token diversity D:   {self.token_diversity:.2f}",
            f"Length diversity DL: {self.length_diversity:.2f}",
            "",
            "-" * 60,
            f"{'source_id':<30}{'augs':>6}{'D':>12}{'DL':>12}",
            "-" * 60,
        ]
        for row in self.per_record.itertuples(index=False):
            lines.append(f"{str(row.source_id):<30}{int(row.augmentations):>6}{row.D:>12.2f}{row.DL:>12.2f}")
        lines.append("=" * 60)
        return "\n".join(lines) + "\n"

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False)


def _augmentation_text(row: Dict[str, Any]) -> Optional[str]:
    for key in TEXT_FIELDS:
        value = row.get(key)
        if isinstance(value, str):
            return value
    return None


def build_report(originals: Sequence[Dict[str, Any]], augmented: Sequence[Dict[str, Any]],
                 pooled: bool = True) -> DiversityReport:
    """
    Join augmentations to their originals on source_id and average D and DL per original.

    Rows carrying `round: null` are source rows of an augmented corpus and are skipped.
    A row without source_id stands for itself, so a corpus joined with itself scores zero.
    """
    aug_rows = []
    textless = []
    for row in augmented:
        if "round" in row and row["round"] is None:
            continue
        text = _augmentation_text(row)
        if text is None:
            textless.append(str(row.get("id")))
            continue
        aug_rows.append({
            "source_id": str(row.get("source_id") or row.get("id")),
            "aug_text": text,
        })
    if textless:
        raise MissingAugmentationText(
            f"{len(textless)} augmentation row(s) carry none of {', '.join(TEXT_FIELDS)}: {', '.join(textless)}"
        )
    columns = ["source_id", "augmentations", "D", "DL"]
    if not aug_rows:
        logger.warning("No augmentation rows to score")
        return DiversityReport(0.0, 0.0, pd.DataFrame(columns=columns), pooled)

    orig_df = pd.DataFrame(
        [{"source_id": str(r["id"]), "text": r.get("text") or ""} for r in originals],
        columns=["source_id", "text"],
    ).drop_duplicates("source_id")
    aug_df = pd.DataFrame(aug_rows)
    joined = aug_df.merge(orig_df, on="source_id", how="left", indicator=True)
    missing = joined.loc[joined["_merge"] == "left_only", "source_id"].unique()
    if len(missing):
        raise MissingSourceRecord(f"source id(s) not in the original corpus: {', '.join(missing)}")

    score = token_diversity if pooled else token_diversity_per_augmentation
    records = []
    for source_id, group in joined.groupby("source_id", sort=False):
        original = group["text"].iloc[0]
        augs = group["aug_text"].tolist()
        records.append({
            "source_id": source_id,
            "augmentations": len(augs),
            "D": score(original, augs),
            "DL": length_diversity(original, augs),
        })
    per_record = pd.DataFrame(records, columns=columns)
    report = DiversityReport(float(per_record["D"].mean()), float(per_record["DL"].mean()), per_record, pooled)
    logger.info(f"Scored {len(per_record)} record(s): D={report.token_diversity:.2f} DL={report.length_diversity:.2f}")
    return report
