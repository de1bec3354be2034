import numpy as np
import pytest

from augmentation_engine import AugRecord
from graph_editor import match_tri
from graph_mixer import (
    CorpusTooSmall,
    Graft,
    MixPlan,
    apply_mix,
    build_mix_plan,
    retrieve_partner,
    retrieve_partners,
    score_table,
)
from penman_codec import parse_penman
from similarity import LexicalSimilarityProvider, cosine

WIN_GRAPH = "(w / win-01 :ARG0 (t / team) :ARG1 (m / match :mod (f / final)))"

TEXTS = [
    "The team won the final match in Paris.",
    "The team lost the sports match at home.",
    "Prices rose by 5 percent in the stock market.",
    "The stock market crashed after the announcement.",
    "The senator proposed a new tax law.",
    "Voters rejected the tax law proposal.",
    "Two cats sleep on the sofa.",
    "The old dog sleeps near the house.",
    "The striker scored twice in the final.",
    "Bond prices fell as the market panicked.",
]


def records(texts):
    return [AugRecord(f"d{i}", text, "x") for i, text in enumerate(texts)]


def best_partner_score(vectors, index):
    return max(cosine(vectors[index], vectors[j]) for j in range(len(vectors)) if j != index)


class TestRetrieval:
    def test_two_documents_pair_up(self):
        corpus = records(TEXTS[:2])
        assert retrieve_partners(corpus, LexicalSimilarityProvider()) == [1, 0]

    def test_duplicate_text_is_the_partner(self):
        corpus = records(["cats sleep all day", "stock prices rose", "cats sleep all day"])
        provider = LexicalSimilarityProvider()
        assert retrieve_partners(corpus, provider) == [2, 0, 0]
        assert retrieve_partner(corpus, 0, provider) == 2

    def test_never_self(self):
        corpus = records(["same words", "same words", "same words"])
        assert retrieve_partners(corpus, LexicalSimilarityProvider()) == [1, 0, 0]

    def test_matches_brute_force(self):
        corpus = records(TEXTS)
        provider = LexicalSimilarityProvider()
        partners = retrieve_partners(corpus, provider)
        vectors = provider.embed(TEXTS)
        for i in range(len(TEXTS)):
            best = best_partner_score(vectors, i)
            for found in (partners[i], retrieve_partner(corpus, i, provider)):
                assert found != i
                assert cosine(vectors[i], vectors[found]) == pytest.approx(best, abs=1e-12)

    def test_single_document(self):
        with pytest.raises(CorpusTooSmall):
            retrieve_partners(records(TEXTS[:1]), LexicalSimilarityProvider())


class TestMixPlan:
    def test_zero_k(self, say_graph):
        assert build_mix_plan(say_graph, say_graph, 0) == MixPlan((), 0)

    def test_single_node_partner(self, say_graph):
        assert len(build_mix_plan(say_graph, parse_penman("(a / agree-01)"), 3)) == 0

    def test_self_plan_keeps_outer_subgraphs(self, say_graph):
        plan = build_mix_plan(say_graph, say_graph, 2)
        assert plan.grafts == (
            Graft("p", "p", 1.0, ":ARG0"),
            Graft("v", "v", 1.0, ":ARG1"),
        )
        assert plan.to_dict()["grafts"][0]["source_root"] == "p"

    @pytest.mark.parametrize("k", [1, 2, 3, 10])
    def test_plan_against_score_table(self, fixture_graphs, k):
        for gi, gk in zip(fixture_graphs, fixture_graphs[::-1]):
            plan = build_mix_plan(gi, gk, k)
            partner_subs, own_subs, table = score_table(gi, gk)
            assert len(plan) <= k
            rows = {s.root: r for r, s in enumerate(partner_subs)}
            scores = [g.score for g in plan.grafts]
            assert scores == sorted(scores, reverse=True)
            chosen = [partner_subs[rows[g.source_root]] for g in plan.grafts]
            for graft in plan.grafts:
                row = rows[graft.source_root]
                assert graft.score == pytest.approx(table[row].max())
                assert graft.anchor_root == own_subs[int(np.argmax(table[row]))].root
            for a in chosen:
                for b in chosen:
                    assert a is b or a.root not in b.members
            if own_subs and k >= len(partner_subs):
                for sub in partner_subs:
                    assert any(sub.root in c.members for c in chosen)


class TestApplyMix:
    def test_append_renames_clashing_variables(self, say_graph):
        plan = MixPlan((Graft("m", "v", 0.5, ":ARG1"),), 1)
        mixed = apply_mix(say_graph, parse_penman(WIN_GRAPH), plan)
        assert mixed.variables == ["s", "p", "f", "v", "m", "f1"]
        assert ("v", ":ARG1", "m") in mixed.relations
        assert ("m", ":mod", "f1") in mixed.relations
        assert mixed.concept_of("f1") == "final"
        assert mixed.concept_of("f") == "famous"

    def test_replace_swaps_the_anchor_subtree(self, say_graph):
        plan = MixPlan((Graft("m", "v", 0.5, ":ARG1"),), 1)
        mixed = apply_mix(say_graph, parse_penman(WIN_GRAPH), plan, mode="replace")
        assert set(mixed.variables) == {"s", "p", "f", "m", "f1"}
        assert ("s", ":ARG1", "m") in mixed.relations

    def test_protected_anchor_falls_back_to_append(self, say_graph):
        plan = MixPlan((Graft("m", "v", 0.5, ":ARG1"),), 1)
        protection = match_tri(say_graph, ["victory"])
        mixed = apply_mix(say_graph, parse_penman(WIN_GRAPH), plan, mode="replace", protection=protection)
        assert "v" in mixed.variables
        assert ("v", ":ARG1", "m") in mixed.relations

    def test_replaced_anchor_skips_later_grafts(self, say_graph):
        plan = MixPlan((Graft("m", "p", 0.5, ":ARG1"), Graft("t", "p", 0.4, ":ARG0")), 2)
        mixed = apply_mix(say_graph, parse_penman(WIN_GRAPH), plan, mode="replace")
        assert set(mixed.variables) == {"s", "v", "m", "f1"}

    def test_unknown_mode(self, say_graph):
        with pytest.raises(ValueError):
            apply_mix(say_graph, say_graph, MixPlan((), 1), mode="splice")

    def test_planned_append_adds_partner_subtrees(self, fixture_graphs):
        for gi, gk in zip(fixture_graphs, fixture_graphs[1:]):
            plan = build_mix_plan(gi, gk, 2)
            mixed = apply_mix(gi, gk, plan)
            mixed.validate()
            grafted = sum(len(gk.tree_view.descendants(g.source_root)) for g in plan.grafts)
            assert len(mixed.variables) == len(gi.variables) + grafted
            assert mixed.root == gi.root
