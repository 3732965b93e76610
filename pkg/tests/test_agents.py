"""Behavior networks: activation spreading, arbitration, plot-goal wiring."""

from __future__ import annotations

import random

import pytest

from dramatis.agents import (
    PLOT_CONDITION,
    PLOT_GOAL_ID,
    BehaviorNetwork,
    CompetenceModule,
    Goal,
    NetworkParams,
    networks_from_script,
    select_behavior,
    spread_activation,
    sync_plot_goal,
)
from dramatis.events import Tick, Utterance
from dramatis.runtime import handle_event, run_trace, start_session


def plot_module(module_id="m", character="c", expectation=1.0):
    return CompetenceModule(module_id, character, f"do_{module_id}",
                            effects=((PLOT_CONDITION, expectation),))


class TestSpreadActivation:
    def test_geometric_series_toward_limit(self):
        # independent oracle: iterate a <- beta*a + gamma by hand
        params = NetworkParams(gamma=1.0, beta=0.5)
        network = BehaviorNetwork("c", [plot_module()], [], params)
        relevances = {PLOT_GOAL_ID: 1.0}
        expected = 0.0
        for _ in range(20):
            expected = 0.5 * expected + 1.0
            got = spread_activation(network, relevances)["m"]
            assert got == pytest.approx(expected)
        assert spread_activation(network, relevances)["m"] <= params.a_max
        assert got == pytest.approx(2.0, abs=1e-4)  # limit gamma / (1 - beta)

    def test_first_two_cycles_exact(self):
        network = BehaviorNetwork("c", [plot_module()], [],
                                  NetworkParams(gamma=1.0, beta=0.5))
        relevances = {PLOT_GOAL_ID: 1.0}
        assert spread_activation(network, relevances)["m"] == pytest.approx(1.0)
        assert spread_activation(network, relevances)["m"] == pytest.approx(1.5)

    def test_unmatched_module_decays_geometrically(self):
        network = BehaviorNetwork("c", [CompetenceModule("idle", "c", "nap")], [])
        network.activations = {"idle": 0.8}
        values = [spread_activation(network, {})["idle"] for _ in range(5)]
        assert values == pytest.approx([0.4, 0.2, 0.1, 0.05, 0.025])

    def test_stronger_relevance_dominates_every_cycle(self):
        params = NetworkParams()
        strong = Goal("g1", "wanted_a", importance=1.0)
        weak = Goal("g2", "wanted_b", importance=1.0)
        network = BehaviorNetwork("c", [
            CompetenceModule("a", "c", "do_a", effects=(("wanted_a", 1.0),)),
            CompetenceModule("b", "c", "do_b", effects=(("wanted_b", 1.0),)),
        ], [strong, weak], params)
        relevances = {"g1": 1.0, "g2": 0.3, PLOT_GOAL_ID: 0.0}
        for _ in range(10):
            acts = spread_activation(network, relevances)
            assert acts["a"] > acts["b"]

    def test_conflicting_effect_inhibits(self):
        network = BehaviorNetwork("c", [
            CompetenceModule("helpful", "c", "help", effects=((PLOT_CONDITION, 1.0),)),
            CompetenceModule("saboteur", "c", "blow_it",
                             effects=((PLOT_CONDITION, 1.0),
                                      (f"not {PLOT_CONDITION}", 0.5),)),
        ], [])
        acts = spread_activation(network, {PLOT_GOAL_ID: 1.0})
        assert acts["saboteur"] < acts["helpful"]


class TestSelectBehavior:
    def test_argmax_above_threshold(self):
        network = BehaviorNetwork("c", [
            plot_module("plot"),
            CompetenceModule("idle", "c", "scratch_head"),
        ])
        network.activations = {"plot": 0.9, "idle": 0.3}
        chosen = select_behavior(network)
        assert chosen is not None and chosen.id == "plot"

    def test_threshold_decays_when_nothing_clears(self):
        params = NetworkParams(theta_exec=0.8, theta_decay=0.1)
        network = BehaviorNetwork("c", [plot_module("plot")], [], params)
        network.activations = {"plot": 0.55}
        assert select_behavior(network) is None
        assert network.theta_current == pytest.approx(0.7)
        assert select_behavior(network) is None
        assert network.theta_current == pytest.approx(0.6)
        # once the threshold sinks past the product, the module wins and resets it
        assert select_behavior(network) is None
        chosen = select_behavior(network)
        assert chosen is not None
        assert network.theta_current == pytest.approx(0.8)

    def test_tie_goes_to_declaration_order(self):
        network = BehaviorNetwork("c", [
            plot_module("first"), plot_module("second"),
        ])
        network.activations = {"first": 0.7, "second": 0.7}
        chosen = select_behavior(network)
        assert chosen is not None and chosen.id == "first"

    def test_executability_gates_the_product(self):
        network = BehaviorNetwork("c", [
            CompetenceModule("guarded", "c", "act", preconditions=("door_open",),
                             effects=((PLOT_CONDITION, 1.0),)),
            CompetenceModule("free", "c", "act2", effects=((PLOT_CONDITION, 0.6),)),
        ])
        network.activations = {"guarded": 1.0, "free": 0.6}
        chosen = select_behavior(network, world_truths={"door_open": 0.0})
        assert chosen is not None and chosen.id == "free"


class TestSyncPlotGoal:
    def test_silent_participant_full_relevance(self, doc):
        state = start_session(doc)
        handle_event(state, Tick(1))            # now listening at ss2
        networks = networks_from_script(doc)
        relevances = sync_plot_goal(state, networks)
        assert relevances[PLOT_GOAL_ID] == pytest.approx(1.0)
        policeman = networks["policeman"]
        plot_modules = [m for m in policeman.modules if m.id.startswith("plot:")]
        assert len(plot_modules) == 1
        assert policeman.payload(plot_modules[0]) == (
            "policeman_appears", "policeman_asks_drunk")

    def test_active_participant_zero_relevance(self, doc):
        state = start_session(doc)
        handle_event(state, Tick(1))
        handle_event(state, Utterance(2, "what is his name"))  # fires at 1.0, stays
        networks = networks_from_script(doc)
        relevances = sync_plot_goal(state, networks)
        assert relevances[PLOT_GOAL_ID] == pytest.approx(0.0)

    def test_no_idle_modules_nothing_selected(self, doc):
        state = start_session(doc)
        handle_event(state, Tick(1))
        handle_event(state, Utterance(2, "what is his name"))
        network = BehaviorNetwork("drunk_guy", [])
        relevances = sync_plot_goal(state, {"drunk_guy": network})
        spread_activation(network, relevances)
        assert select_behavior(network) is None

    def test_arbitration_agrees_with_notp_at_the_extreme(self, doc):
        # force full NOTP relevance at ss2 and compare against what the
        # runtime's own fallback logs on a silent playthrough
        state = start_session(doc)
        handle_event(state, Tick(1))
        networks = networks_from_script(doc)
        relevances = sync_plot_goal(state, networks)
        relevances[PLOT_GOAL_ID] = 1.0
        chosen_actions: set[str] = set()
        for network in networks.values():
            for _ in range(3):
                spread_activation(network, relevances)
            chosen = select_behavior(network)
            if chosen is not None and chosen.id.startswith("plot:"):
                chosen_actions.update(network.payload(chosen))

        silent = run_trace(doc, [Tick(t) for t in range(1, 12)])
        notp_logged = {e.action_id for e in silent
                       if e.cause.kind == "notp" and e.cause.detail.startswith("sc1.ss2")}
        assert chosen_actions == notp_logged == {
            "policeman_appears", "policeman_asks_drunk"}


class TestBoundedness:
    def test_random_networks_stay_bounded(self):
        rng = random.Random(42)
        for _ in range(100):
            params = NetworkParams(
                gamma=rng.uniform(0.1, 2.0),
                delta=rng.uniform(0.0, 1.5),
                beta=rng.uniform(0.0, 0.95),
                theta_exec=rng.uniform(0.1, 0.9),
                theta_decay=rng.uniform(0.01, 0.2),
            )
            goals = [Goal(f"g{i}", f"cond{i}", rng.random(), rng.random())
                     for i in range(rng.randint(0, 3))]
            modules = [
                CompetenceModule(
                    f"m{i}", "c", f"act{i}",
                    effects=tuple(
                        (rng.choice([f"cond{j}" for j in range(3)] + [PLOT_CONDITION]),
                         rng.random())
                        for _ in range(rng.randint(0, 3))),
                )
                for i in range(rng.randint(1, 4))
            ]
            network = BehaviorNetwork("c", modules, goals, params)
            relevances = {g.id: rng.random() for g in network.goals}
            bound = params.gamma * sum(g.importance for g in network.goals) / (1 - params.beta)
            for _ in range(1000):
                acts = spread_activation(network, relevances)
                for value in acts.values():
                    assert 0.0 <= value <= bound + 1e-9
                    assert value <= params.a_max + 1e-9

    def test_scale_dominance(self):
        rng = random.Random(7)
        for _ in range(50):
            params = NetworkParams(beta=0.5)
            network = BehaviorNetwork("c", [
                CompetenceModule("a", "c", "x", effects=(("wanted", 1.0),)),
                CompetenceModule("b", "c", "y", effects=(("other", 1.0),)),
            ], [Goal("g", "wanted", 1.0), Goal("h", "other", 1.0)], params)
            base_rel = rng.uniform(0.1, 0.5)
            relevances = {"g": base_rel, "h": base_rel, PLOT_GOAL_ID: 0.0}
            for _ in range(5):
                spread_activation(network, relevances)
            base = network.activations.copy()
            scaled = {"g": min(1.0, base_rel * 1.8), "h": base_rel, PLOT_GOAL_ID: 0.0}
            network.activations = {}
            for _ in range(5):
                spread_activation(network, scaled)
            boosted = network.activations
            assert (boosted["a"] - boosted["b"]) >= (base["a"] - base["b"]) - 1e-9


class TestScriptAgents:
    def test_fixture_declares_two_agents(self, doc):
        networks = networks_from_script(doc)
        assert set(networks) == {"drunk_guy", "policeman"}
        drunk = networks["drunk_guy"]
        assert [g.id for g in drunk.goals][0] == PLOT_GOAL_ID
        assert [m.id for m in drunk.modules] == ["mutter_and_search"]
        assert drunk.modules[0].preconditions == ("drunk_on_ground",)
