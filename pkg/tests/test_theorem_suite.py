import pytest
from pydantic import ValidationError as BoundsError

from core_model import Does, generate_history
from domain_file import dumps_domain, parse_domain
from ltlf import render_formula
from planning import PPD, enumerate_completions, enumerate_individual_plans, get_oracle, parse_plan
from responsibility import ResponsibilityKind, anticipate, attribute
from theorem_suite import (
    CHECKS, CheckResult, DomainBounds, build_corpus, build_item, check_equivalences, check_exclusion,
    check_fig2, check_theorem_1, check_theorem_3, check_theorem_4, check_theorem_5, random_ppd,
    render_replay, render_report, replay, run_suite,
)

SMALL = DomainBounds(max_agents=2, max_props=2, max_actions=2, max_horizon=2, plans_per_domain=3)


def test_bounds_from_env_precedence(monkeypatch):
    monkeypatch.setenv("RESP_MAX_AGENTS", "2")
    monkeypatch.setenv("RESP_VERIFY_SEED", "99")
    assert DomainBounds.from_env().max_agents == 2
    assert DomainBounds.from_env().rng_seed == 99
    assert DomainBounds.from_env(max_agents=4).max_agents == 4
    assert DomainBounds.from_env(max_agents=None).max_agents == 2


def test_bounds_defaults(monkeypatch):
    for name in ("RESP_MAX_AGENTS", "RESP_MAX_PROPS", "RESP_MAX_HORIZON", "RESP_VERIFY_SEED"):
        monkeypatch.delenv(name, raising=False)
    bounds = DomainBounds.from_env()
    assert (bounds.max_agents, bounds.max_props, bounds.max_horizon, bounds.rng_seed) == (3, 3, 2, 1)


@pytest.mark.parametrize("overrides", [
    {"max_agents": 0},
    {"max_horizon": 9},
    {"effect_density": 1.5},
    {"rng_seed": -1},
    {"max_props": "many"},
])
def test_bounds_validation(overrides):
    with pytest.raises(BoundsError):
        DomainBounds(**overrides)


def test_random_ppd_respects_bounds():
    for seed in range(1, 30):
        ppd = random_ppd(SMALL.model_copy(update={"rng_seed": seed}))
        sig = ppd.signature
        assert 1 <= sig.n_agents <= 2
        assert 1 <= sig.n_props <= 2
        assert 1 <= sig.n_actions <= 2
        assert sig.actions.names[0] == "skip"
        for agent in range(sig.n_agents):
            assert ppd.s0 in ppd.epistemic_set(agent)
        for (agent, action, prop) in list(ppd.theory.pos) + list(ppd.theory.neg):
            assert action != 0


def test_build_item_is_deterministic():
    first, second = build_item(SMALL, 17), build_item(SMALL, 17)
    assert dumps_domain(first.ppd) == dumps_domain(second.ppd)
    assert render_formula(first.omega, first.ppd.signature) == render_formula(second.omega, second.ppd.signature)
    assert first.plans == second.plans
    assert first.horizon == second.horizon


def test_build_item_plans_are_full_and_distinct():
    for item in build_corpus(SMALL, range(1, 25)):
        sig = item.ppd.signature
        assert 0 <= item.horizon <= SMALL.max_horizon
        assert 1 <= len(item.plans) <= SMALL.plans_per_domain
        assert len(set(item.plans)) == len(item.plans)
        for plan in item.plans:
            assert plan.is_full(sig)
            assert plan.horizon == item.horizon


def test_small_domains_take_every_plan_in_lexicographic_order():
    bounds = SMALL.model_copy(update={"plans_per_domain": 10 ** 6})
    for seed in range(1, 10):
        item = build_item(bounds, seed)
        expected = tuple(enumerate_completions(None, item.horizon, item.ppd.signature))
        assert item.plans == expected


def test_suite_passes_on_small_corpus():
    results = run_suite(SMALL, range(1, 21))
    assert len(results) == 20 * len(CHECKS)
    failures = [f"{r.theorem} seed={r.seed}: {r.detail}\n{r.replay_text}" for r in results if not r.passed]
    assert failures == []


def test_suite_passes_at_default_bounds_over_two_hundred_seeds():
    bounds = DomainBounds()
    assert (bounds.max_agents, bounds.max_props, bounds.max_actions, bounds.max_horizon) == (3, 3, 3, 2)
    results = run_suite(bounds, range(1, 201), workers=4)
    assert len(results) == 200 * len(CHECKS)
    failures = [f"{r.theorem} seed={r.seed}: {r.detail}" for r in results if not r.passed]
    assert failures == []


def test_suite_results_are_ordered_by_seed_then_check():
    results = run_suite(SMALL, [5, 3])
    assert [r.seed for r in results] == [3] * len(CHECKS) + [5] * len(CHECKS)
    assert [r.theorem for r in results[:len(CHECKS)]] == list(CHECKS)


def test_per_theorem_entry_points():
    corpus = build_corpus(SMALL, [1, 2, 3])
    for check, name in ((check_theorem_1, "T1"), (check_fig2, "FIG2"), (check_theorem_3, "T3"),
                        (check_theorem_4, "T4"), (check_theorem_5, "T5"), (check_exclusion, "EXCL"),
                        (check_equivalences, "EQUIV")):
        results = check(corpus)
        assert [r.seed for r in results] == [1, 2, 3]
        assert {r.theorem for r in results} == {name}
        assert all(r.passed for r in results)


def test_parallel_run_matches_serial():
    seeds = [1, 2, 3]
    assert run_suite(SMALL, seeds, workers=2) == run_suite(SMALL, seeds, workers=1)


def test_replay_block_reparses():
    item = build_item(SMALL, 4)
    sig = item.ppd.signature
    text = render_replay(item, 0, item.plans[0])
    lines = text.splitlines()
    assert lines[0] == "--- domain ---"
    plan_at = lines.index("--- plan ---")
    domain = parse_domain("\n".join(lines[1:plan_at]) + "\n")
    assert dumps_domain(domain) == dumps_domain(item.ppd)
    plan_lines = [line for line in lines[plan_at + 1:] if line.startswith("A")]
    if item.horizon:
        assert parse_plan("\n".join(plan_lines), sig) == item.plans[0]
    assert f"agent: {sig.agents.name_of(0)}" in lines
    assert f"horizon: {item.horizon}" in lines
    assert lines[-1] == f"outcome: {render_formula(item.omega, sig)}"


def test_replay_single_check():
    item = build_item(SMALL, 6)
    result = replay("EXCL", item)
    assert result == CheckResult("EXCL", 6, True)


def test_render_report():
    results = [
        CheckResult("T3", 2, True),
        CheckResult("T1", 2, False, "설명", "--- domain ---\nagents: A1"),
        CheckResult("T1", 1, True),
    ]
    assert render_report(results) == (
        "T1 seed=1 PASS\n"
        "T1 seed=2 FAIL\n"
        "  reason: 설명\n"
        "  --- domain ---\n"
        "  agents: A1\n"
        "T3 seed=2 PASS\n"
        "total=3 failed=1\n"
    )


def _mentions_do(formula) -> bool:
    return isinstance(formula, Does) or any(_mentions_do(child) for child in formula.children())


def test_zero_density_gives_effect_free_theory():
    bounds = SMALL.model_copy(update={"effect_density": 0.0})
    for seed in range(1, 30):
        item = build_item(bounds, seed)
        ppd, k = item.ppd, item.horizon
        assert not ppd.theory.pos and not ppd.theory.neg
        plans = list(enumerate_completions(None, k, ppd.signature))
        for plan in plans:
            assert generate_history(plan, ppd.s0, ppd.theory).states == (ppd.s0,) * (k + 1)
        if not _mentions_do(item.omega):
            oracle = get_oracle(ppd.theory, item.omega, k)
            assert len({oracle.holds_for(ppd.s0, plan) for plan in plans}) == 1


def test_single_agent_anticipation_matches_attribution():
    bounds = SMALL.model_copy(update={"max_agents": 1})
    for seed in range(1, 30):
        item = build_item(bounds, seed)
        ppd, omega = item.ppd, item.omega
        assert ppd.signature.n_agents == 1
        only_start = PPD.build(ppd.theory, ppd.s0)
        for plan in enumerate_individual_plans(0, item.horizon, ppd.signature):
            for kind in ResponsibilityKind:
                in_any_start = any(attribute(kind, 0, plan, s1, ppd, omega).holds for s1 in ppd.epistemic_set(0))
                assert anticipate(kind, 0, plan, ppd, omega).holds == in_any_start
                assert (anticipate(kind, 0, plan, only_start, omega).holds
                        == attribute(kind, 0, plan, only_start.s0, only_start, omega).holds)
