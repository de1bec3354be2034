import json
import logging
import re
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

import pandas as pd

from augmentation_engine import AugRecord
from penman_codec import PenmanSyntaxError, parse_penman, serialize_penman

logger = logging.getLogger(__name__)

METADATA_RE = re.compile(r"^#\s*::(\w+)\s*(.*)$")


class CorpusFormatError(ValueError):
    """A corpus file that cannot be read as its extension says"""


def _decode(raw: bytes, path: Path, line_number: int) -> str:
    try:
        return raw.decode('utf-8')
    except UnicodeDecodeError as e:
        raise CorpusFormatError(f"{path}:{line_number}: not valid UTF-8 at byte {e.start} ({e.reason})") from e


class DataProcessor:
    def __init__(self):
        self.supported_formats = ['jsonl', 'json', 'csv', 'amr', 'txt']

        # Wire field names and the aliases accepted for them
        self.field_mappings = {
            'id': ['id', 'record_id', 'doc_id', 'uid', 'nid'],
            'text': ['text', 'snt', 'sentence', 'document', 'content'],
            'label': ['label', 'labels', 'category', 'class', 'target'],
            'amr': ['amr', 'graph', 'penman'],
            'tri': ['tri', 'keywords', 'tri_keywords'],
        }

    def process_file(self, path: Union[str, Path]) -> List[Dict[str, Any]]:
        """
        Read a corpus file and return records with standardized field names
        """
        path = Path(path)
        file_extension = path.suffix.lstrip('.').lower()
        if file_extension not in self.supported_formats:
            raise CorpusFormatError(f"Unsupported file format: {file_extension or '(none)'}")

        logger.debug(f"Reading {file_extension} corpus {path}")
        if file_extension == 'jsonl':
            records = self._process_jsonl(path)
        elif file_extension == 'json':
            records = self._process_json(path)
        elif file_extension == 'csv':
            records = self._process_csv(path)
        else:
            records = self._process_penman(path)

        logger.info(f"Read {len(records)} records from {path}")
        return [self._standardize_field_names(r) for r in records]

    def _process_jsonl(self, path: Path) -> List[Dict[str, Any]]:
        """One JSON object per line; blank lines are ignored"""
        records = []
        with open(path, 'rb') as handle:
            for line_number, raw in enumerate(handle, start=1):
                line = _decode(raw, path, line_number)
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as e:
                    raise CorpusFormatError(f"{path}:{line_number}: invalid JSON: {e.msg}") from e
                if not isinstance(record, dict):
                    raise CorpusFormatError(f"{path}:{line_number}: expected a JSON object")
                records.append(record)
        return records

    def _process_json(self, path: Path) -> List[Dict[str, Any]]:
        raw = path.read_bytes()
        try:
            content = raw.decode('utf-8')
        except UnicodeDecodeError as e:
            line_number = raw[:e.start].count(b'\n') + 1
            raise CorpusFormatError(f"{path}:{line_number}: not valid UTF-8 ({e.reason})") from e
        if not content.strip():
            return []
        try:
            json_data = json.loads(content)
        except json.JSONDecodeError as e:
            raise CorpusFormatError(f"{path}: invalid JSON: {e}") from e

        # Handle different JSON structures
        if isinstance(json_data, list):
            records = json_data
        elif isinstance(json_data, dict):
            if 'records' in json_data:
                records = json_data['records']
            elif 'data' in json_data:
                records = json_data['data']
            else:
                records = [json_data]
        else:
            raise CorpusFormatError(f"{path}: invalid JSON structure")
        return [r for r in records if isinstance(r, dict)]

    def _process_csv(self, path: Path) -> List[Dict[str, Any]]:
        try:
            df = pd.read_csv(path, dtype=str, keep_default_na=False)
        except pd.errors.EmptyDataError:
            return []
        except pd.errors.ParserError as e:
            raise CorpusFormatError(f"{path}: {e}") from e
        except UnicodeDecodeError as e:
            raise CorpusFormatError(f"{path}: not valid UTF-8 ({e.reason})") from e

        # Clean and standardize column names
        df.columns = df.columns.str.strip().str.lower().str.replace(' ', '_')
        records = df.to_dict('records')
        for record in records:
            # a CSV cell holds keywords as a ';'-separated list
            for column in self.field_mappings['tri']:
                if isinstance(record.get(column), str):
                    record[column] = [k.strip() for k in record[column].split(';') if k.strip()]
        return records

    def _process_penman(self, path: Path) -> List[Dict[str, Any]]:
        """
        Raw PENMAN: one graph per blank-line-separated block. `# ::id`, `# ::snt`
        and `# ::label` comment lines fill the matching fields.
        """
        content = path.read_text(encoding='utf-8', errors='replace')
        records = []
        for block in re.split(r"\n\s*\n", content):
            if not block.strip():
                continue
            record: Dict[str, Any] = {}
            graph_lines = []
            for line in block.splitlines():
                match = METADATA_RE.match(line.strip())
                if match:
                    record[match.group(1)] = match.group(2).strip()
                elif line.strip().startswith('#'):
                    continue
                else:
                    graph_lines.append(line)
            if not graph_lines:
                continue
            record.setdefault('id', str(len(records) + 1))
            record.setdefault('snt', '')
            record.setdefault('label', '')
            record['amr'] = '\n'.join(graph_lines)
            records.append(record)
        return records

    def _standardize_field_names(self, record: Dict[str, Any]) -> Dict[str, Any]:
        """Map aliases onto wire field names; other fields are kept as they are"""
        standardized = {}
        for standard_field, possible_names in self.field_mappings.items():
            for key, value in record.items():
                if str(key).lower().strip() in possible_names:
                    standardized[standard_field] = value
                    break

        aliases = {name for names in self.field_mappings.values() for name in names}
        for key, value in record.items():
            clean_key = str(key).lower().strip()
            if clean_key not in aliases and clean_key not in standardized:
                standardized[clean_key.replace(' ', '_').replace('-', '_')] = value
        return standardized

    def validate_records(self, records: List[Dict[str, Any]]) -> Tuple[List[AugRecord], Dict[str, Any]]:
        """
        Check ids, required fields and graphs. Returns the records that passed as
        AugRecords plus a validation report listing every problem with its record id.
        """
        validation_results = {
            'total_records': len(records),
            'valid_records': 0,
            'errors': [],
        }
        valid: List[AugRecord] = []
        seen_ids = set()

        for index, record in enumerate(records):
            record_id = record.get('id')
            record_id = str(record_id) if record_id is not None and str(record_id).strip() else None

            def reject(message: str, offset: Optional[int] = None):
                validation_results['errors'].append({
                    'record_index': index,
                    'id': record_id,
                    'error': message,
                    'offset': offset,
                })

            if record_id is None:
                reject("missing id")
                continue
            if record_id in seen_ids:
                reject(f"duplicate id '{record_id}'")
                continue
            seen_ids.add(record_id)

            missing = [f for f in ('text', 'label') if record.get(f) is None]
            if missing:
                reject(f"missing field(s): {', '.join(missing)}")
                continue

            tri = record.get('tri')
            if tri is not None and (not isinstance(tri, list) or not all(isinstance(k, str) for k in tri)):
                reject("tri must be a list of strings")
                continue

            graph = None
            amr_text = record.get('amr')
            if amr_text not in (None, ''):
                try:
                    graph = parse_penman(str(amr_text))
                except PenmanSyntaxError as e:
                    reject(f"{type(e).__name__}: {e.reason}", e.offset)
                    continue

            valid.append(AugRecord(
                id=record_id,
                text=str(record['text']),
                label=str(record['label']),
                amr=graph,
                tri=list(tri) if tri is not None else None,
            ))

        validation_results['valid_records'] = len(valid)
        return valid, validation_results

    def normalize_records(self, records: Iterable[AugRecord]) -> List[Dict[str, Any]]:
        """Wire form with single-line PENMAN"""
        rows = []
        for record in records:
            row: Dict[str, Any] = {'id': record.id, 'text': record.text, 'label': record.label}
            if record.amr is not None:
                row['amr'] = serialize_penman(record.amr)
            if record.tri is not None:
                row['tri'] = record.tri
            rows.append(row)
        return rows

    def get_data_summary(self, records: List[AugRecord]) -> Dict[str, Any]:
        """Generate summary statistics of a corpus"""
        if not records:
            return {"records": 0}

        df = pd.DataFrame([{
            'label': r.label,
            'has_graph': r.amr is not None,
            'variables': len(r.amr.instances) if r.amr is not None else None,
            'outputs': len(r.outputs),
        } for r in records])

        summary = {
            "records": len(df),
            "labels": {str(k): int(v) for k, v in df['label'].value_counts().items()},
            "graphs": int(df['has_graph'].sum()),
            "mean_variables": round(float(df['variables'].dropna().mean()), 2) if df['has_graph'].any() else 0.0,
            "outputs": int(df['outputs'].sum()),
        }
        logger.info(
            f"Corpus summary: {summary['records']} records, {len(summary['labels'])} labels, "
            f"{summary['graphs']} graphs, {summary['mean_variables']} variables per graph, "
            f"{summary['outputs']} augmentations"
        )
        return summary

    def save_jsonl(self, rows: Iterable[Dict[str, Any]], path: Union[str, Path]) -> int:
        count = 0
        with open(path, 'w', encoding='utf-8') as handle:
            for row in rows:
                handle.write(json.dumps(row, ensure_ascii=False) + '\n')
                count += 1
        logger.info(f"Wrote {count} rows to {path}")
        return count
