"""
Abstraction pipeline.

Every record goes through R rounds of: keyword protection, attribute filtering,
Gaussian-rate subgraph deletion and, when the mixing draw crosses beta, grafting
of subgraphs from the most similar other document. Each (record, round) pair gets
its own generator so results do not depend on corpus order or worker count.
"""
import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from amr_graph import AmrGraph
from config import EditConfig
from external_adapters import AdapterFailure, ExternalAdapters
from graph_editor import delete_subgraphs, filter_attributes, match_tri, sample_rate
from graph_mixer import CorpusTooSmall, apply_mix, build_mix_plan, retrieve_partner, retrieve_partners
from penman_codec import PenmanSyntaxError, parse_penman, serialize_penman
from similarity import (
    STOPWORDS,
    LexicalSimilarityProvider,
    SidecarEmbeddingProvider,
    SimilarityProvider,
    tokenize,
)

logger = logging.getLogger(__name__)

MAX_NGRAM = 3


@dataclass
class AugOutput:
    round: int
    graph: AmrGraph
    mixed: bool = False
    partner_id: Optional[str] = None
    abstract_text: Optional[str] = None
    expanded_text: Optional[str] = None


@dataclass
class AugRecord:
    id: str
    text: str
    label: str
    amr: Optional[AmrGraph] = None
    # None until extracted; an explicit list overrides extraction
    tri: Optional[List[str]] = None
    outputs: List[AugOutput] = field(default_factory=list)


def derive_seed(seed: int, record_id: str, round_index: int) -> int:
    """64-bit seed from sha256 of 'seed:record id:round'"""
    digest = hashlib.sha256(f"{seed}:{record_id}:{round_index}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def candidate_ngrams(text: str, max_n: int = MAX_NGRAM) -> List[Tuple[str, int, int]]:
    """Distinct n-grams as (phrase, start token, n), first occurrence only, stopword-edged ones dropped"""
    tokens = tokenize(text)
    seen = set()
    candidates = []
    for start in range(len(tokens)):
        for n in range(1, max_n + 1):
            gram = tokens[start:start + n]
            if len(gram) < n or gram[0] in STOPWORDS or gram[-1] in STOPWORDS:
                continue
            phrase = " ".join(gram)
            if phrase in seen:
                continue
            seen.add(phrase)
            candidates.append((phrase, start, n))
    return candidates


def extract_tri(text: str, label: str, k: int, scorer: Optional[SimilarityProvider] = None) -> List[str]:
    """
    Top-k document n-grams by similarity to the label.

    N-grams scoring zero or below are never kept, so fewer than k keywords (or none)
    come back when the text shares little with the label. Ties go to the earlier
    start position, then the shorter n-gram.
    """
    if k <= 0:
        return []
    scorer = scorer or LexicalSimilarityProvider()
    scored = []
    for phrase, start, n in candidate_ngrams(text):
        value = scorer.similarity(phrase, label)
        if value > 0:
            scored.append((-value, start, n, phrase))
    scored.sort()
    return [phrase for _, _, _, phrase in scored[:k]]


def abstract_once(record: AugRecord, config: EditConfig, rng: np.random.Generator) -> AmrGraph:
    """Protect keywords, filter attributes, then delete subgraphs"""
    if record.amr is None:
        raise ValueError(f"record '{record.id}' has no graph")
    policy = config.deletion_policy()
    protection = match_tri(record.amr, record.tri or [])
    filtered = filter_attributes(record.amr, policy, protection)
    return delete_subgraphs(filtered, policy, protection, rng)


def augment_round(
    record: AugRecord,
    corpus: Sequence[AugRecord],
    config: EditConfig,
    rng: np.random.Generator,
    round_index: int,
    provider: Optional[SimilarityProvider] = None,
    partner: Optional[AugRecord] = None,
) -> Tuple[AmrGraph, bool, Optional[str]]:
    """
    One abstraction round, mixed when the gate draw is strictly above beta.

    The gate draw comes first from the round's generator. Without a usable
    partner the round falls back to the unmixed abstract.
    """
    gamma = sample_rate(rng, config.mix_mu, config.mix_sigma2)
    abstract = abstract_once(record, config, rng)
    if config.no_mix or not gamma > config.beta:
        return abstract, False, None

    if partner is None:
        try:
            index = next(i for i, r in enumerate(corpus) if r.id == record.id)
            partner = corpus[retrieve_partner(corpus, index, provider or LexicalSimilarityProvider())]
        except (CorpusTooSmall, StopIteration):
            logger.warning(f"Record '{record.id}' round {round_index}: no partner available, mixing skipped")
            return abstract, False, None
    if partner.amr is None:
        logger.warning(f"Record '{record.id}' round {round_index}: partner '{partner.id}' has no graph, mixing skipped")
        return abstract, False, None

    partner_abstract = abstract_once(partner, config, rng)
    plan = build_mix_plan(
        abstract, partner_abstract, config.top_k_mix,
        config.similarity_mode, config.exact_bound, config.smatch_restarts, config.seed,
    )
    if len(plan) == 0:
        return abstract, False, None
    protection = match_tri(abstract, record.tri or [])
    mixed = apply_mix(abstract, partner_abstract, plan, config.mix_mode, protection)
    logger.debug(f"Record '{record.id}' round {round_index}: grafted {len(plan)} subgraph(s) from '{partner.id}'")
    return mixed, True, partner.id


class AugmentationEngine:
    def __init__(self, config: EditConfig, adapters: Optional[ExternalAdapters] = None,
                 provider: Optional[SimilarityProvider] = None):
        self.config = config
        self.adapters = adapters or ExternalAdapters()
        if provider is None:
            provider = (SidecarEmbeddingProvider.from_file(config.embeddings)
                        if config.embeddings else LexicalSimilarityProvider())
        self.provider = provider
        self.keyword_scorer = LexicalSimilarityProvider()
        self.failures: List[str] = []

    def _fail(self, message: str):
        logger.warning(message)
        self.failures.append(message)

    def prepare(self, records: Sequence[AugRecord]) -> List[AugRecord]:
        """Parse missing graphs through the text_to_amr adapter and extract keywords; returns usable records"""
        usable = []
        for record in records:
            if record.amr is None:
                if not self.adapters.has("text_to_amr"):
                    self._fail(f"record '{record.id}' has no graph and no text_to_amr adapter is configured")
                    continue
                try:
                    record.amr = parse_penman(self.adapters.text_to_amr([record.text])[0])
                except AdapterFailure as e:
                    self._fail(str(e.for_record(record.id, [])))
                    continue
                except PenmanSyntaxError as e:
                    self._fail(f"record '{record.id}': text_to_amr returned an unparsable graph: {e}")
                    continue
            if record.tri is None:
                record.tri = extract_tri(record.text, record.label, self.config.tri_k, self.keyword_scorer)
            usable.append(record)
        return usable

    def partners(self, usable: Sequence[AugRecord]) -> Dict[str, AugRecord]:
        if self.config.no_mix:
            return {}
        if len(usable) < 2:
            logger.warning(f"Only {len(usable)} usable record(s), mixing disabled")
            return {}
        positions = retrieve_partners(usable, self.provider)
        return {record.id: usable[p] for record, p in zip(usable, positions)}

    def augment_record(self, record: AugRecord, corpus: Sequence[AugRecord],
                       partner: Optional[AugRecord]) -> List[AugOutput]:
        source = serialize_penman(record.amr)
        outputs = []
        for round_index in range(self.config.rounds):
            rng = np.random.default_rng(derive_seed(self.config.seed, record.id, round_index))
            graph, mixed, partner_id = augment_round(
                record, corpus, self.config, rng, round_index, self.provider, partner
            )
            serialized = serialize_penman(graph)
            if not serialized or serialized == source:
                logger.debug(f"Record '{record.id}' round {round_index}: output equals the source, dropped")
                continue
            outputs.append(AugOutput(round_index, graph, mixed, partner_id))

        try:
            self._run_text_adapters(outputs)
        except AdapterFailure as e:
            self._fail(str(e.for_record(record.id, [o.round for o in outputs])))
            return []
        return outputs

    def _run_text_adapters(self, outputs: List[AugOutput]):
        if not outputs:
            return
        if self.adapters.has("amr_to_text"):
            texts = self.adapters.amr_to_text([serialize_penman(o.graph) for o in outputs])
            for output, text in zip(outputs, texts):
                output.abstract_text = text
        if self.adapters.has("expander"):
            inputs = [o.abstract_text if o.abstract_text is not None else serialize_penman(o.graph) for o in outputs]
            for output, text in zip(outputs, self.adapters.expand(inputs)):
                output.expanded_text = text

    def run(self, records: Sequence[AugRecord]) -> List[AugRecord]:
        usable = self.prepare(records)
        partners = self.partners(usable)
        with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
            results = list(pool.map(lambda r: self.augment_record(r, usable, partners.get(r.id)), usable))
        for record, outputs in zip(usable, results):
            record.outputs = outputs

        produced = sum(len(outputs) for outputs in results)
        mixed = sum(o.mixed for outputs in results for o in outputs)
        logger.info(
            f"Augmented {len(usable)} of {len(records)} record(s): {produced} output(s), {mixed} mixed, "
            f"{len(self.failures)} failure(s)"
        )
        return list(records)


def source_row(record: AugRecord) -> Dict[str, Any]:
    return {
        "id": record.id,
        "text": record.text,
        "label": record.label,
        "amr": serialize_penman(record.amr) if record.amr is not None else None,
        "tri": record.tri or [],
        "round": None,
    }


def output_row(record: AugRecord, output: AugOutput) -> Dict[str, Any]:
    row = {
        "id": f"{record.id}#r{output.round}",
        "source_id": record.id,
        "round": output.round,
        "label": record.label,
        "abstract_amr": serialize_penman(output.graph),
        "mixed": output.mixed,
        "partner_id": output.partner_id,
    }
    if output.abstract_text is not None:
        row["abstract_text"] = output.abstract_text
    if output.expanded_text is not None:
        row["expanded_text"] = output.expanded_text
    return row


def to_rows(records: Sequence[AugRecord], outputs_only: bool = False) -> List[Dict[str, Any]]:
    """Source rows first (unless outputs_only), then every augmentation row in record order"""
    rows = [] if outputs_only else [source_row(r) for r in records]
    for record in records:
        rows.extend(output_row(record, output) for output in record.outputs)
    return rows


def run_pipeline(dataset: Sequence[AugRecord], config: EditConfig,
                 adapters: Optional[ExternalAdapters] = None) -> List[Dict[str, Any]]:
    """Original rows plus augmentation rows, labels carried over from each source"""
    engine = AugmentationEngine(config, adapters)
    return to_rows(engine.run(dataset))
