"""Goal-driven idle behavior for non-participant characters.

Each character owns an isolated behavior network: competence modules gather
activation from goals whose conditions their effects promise, and the module
with the best activation x executability wins once it clears a decaying
threshold.  Proposition truth values are necessity degrees in [0, 1], so the
same fuzzy calculus that drives the story rules also drives idling.

Every network carries the shared plot goal.  Its relevance tracks the NOTP
degree of the session's current block: when the participant goes quiet the
plot modules (payloads mirroring the block's NOTP fallback) take over, which
is exactly what the story runtime would do on its own.  The layer is
advisory: the runtime's NOTP rules stay authoritative for plot advancement.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import AgentDecl, RuleBlock, ScriptDoc

PLOT_GOAL_ID = "advance_plot"
PLOT_CONDITION = "plot_advanced"


def negated(proposition: str) -> str:
    return proposition[4:] if proposition.startswith("not ") else f"not {proposition}"


@dataclass(frozen=True)
class NetworkParams:
    gamma: float = 1.0       # activation gain
    delta: float = 0.8       # inhibition gain
    beta: float = 0.5        # inertia, < 1 keeps activation bounded
    theta_exec: float = 0.5  # execution threshold
    theta_decay: float = 0.1  # threshold decay per idle cycle

    def __post_init__(self) -> None:
        for name in ("gamma", "delta", "beta", "theta_exec", "theta_decay"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.beta >= 1.0:
            raise ValueError("beta must be < 1 so activation stays bounded")

    @property
    def a_max(self) -> float:
        return self.gamma / (1.0 - self.beta)


@dataclass(frozen=True)
class Goal:
    id: str
    condition: str
    importance: float
    relevance: float = 0.0


@dataclass(frozen=True)
class CompetenceModule:
    id: str
    character: str
    action_id: str
    preconditions: tuple[str, ...] = ()
    effects: tuple[tuple[str, float], ...] = ()

    def executability(self, truths: dict[str, float]) -> float:
        if not self.preconditions:
            return 1.0
        return min(truths.get(p, 0.0) for p in self.preconditions)

    def match(self, condition: str) -> float:
        return max((e for p, e in self.effects if p == condition), default=0.0)

    def conflict(self, condition: str) -> float:
        return max((e for p, e in self.effects if p == negated(condition)), default=0.0)


@dataclass
class BehaviorNetwork:
    character: str
    modules: list[CompetenceModule] = field(default_factory=list)
    goals: list[Goal] = field(default_factory=list)
    params: NetworkParams = NetworkParams()
    activations: dict[str, float] = field(default_factory=dict)
    theta_current: float = field(default=-1.0)
    plot_payloads: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not any(g.id == PLOT_GOAL_ID for g in self.goals):
            self.goals.insert(0, Goal(PLOT_GOAL_ID, PLOT_CONDITION, importance=1.0))
        if self.theta_current < 0:
            self.theta_current = self.params.theta_exec

    def activation(self, module_id: str) -> float:
        return self.activations.get(module_id, 0.0)

    def payload(self, module: CompetenceModule) -> tuple[str, ...]:
        """Concrete action ids behind a module; plot bundles expand here."""
        return self.plot_payloads.get(module.action_id, (module.action_id,))


def spread_activation(
    network: BehaviorNetwork,
    goal_relevances: dict[str, float] | None = None,
    world_truths: dict[str, float] | None = None,
) -> dict[str, float]:
    """One synchronous activation cycle over all modules.

    a <- beta * a + sum(gamma * importance * relevance * match)
                  - sum(delta * conflict), clamped to [0, gamma / (1 - beta)].
    Only the module's own links and the goal list are read, so characters can
    cycle in parallel off one snapshot.
    """
    relevances = goal_relevances or {}
    params = network.params
    fresh: dict[str, float] = {}
    for module in network.modules:
        a = params.beta * network.activation(module.id)
        for goal in network.goals:
            relevance = relevances.get(goal.id, goal.relevance)
            a += params.gamma * goal.importance * relevance * module.match(goal.condition)
            a -= params.delta * module.conflict(goal.condition)
        fresh[module.id] = min(max(a, 0.0), params.a_max)
    network.activations = fresh
    return fresh


def select_behavior(
    network: BehaviorNetwork,
    params: NetworkParams | None = None,
    world_truths: dict[str, float] | None = None,
) -> CompetenceModule | None:
    """Pick the module maximizing activation x executability above threshold.

    Ties go to declaration order.  A cycle with no winner lowers the threshold
    by theta_decay so somebody eventually acts; a win resets it.
    """
    params = params or network.params
    truths = world_truths or {}
    best: CompetenceModule | None = None
    best_product = -1.0
    for module in network.modules:
        product = network.activation(module.id) * module.executability(truths)
        if product > best_product:
            best, best_product = module, product
    if best is not None and best_product >= network.theta_current:
        network.theta_current = params.theta_exec
        return best
    network.theta_current = max(network.theta_current - params.theta_decay, 0.0)
    return None


def networks_from_script(doc: ScriptDoc, params: NetworkParams | None = None
                         ) -> dict[str, BehaviorNetwork]:
    """Build one network per AGENTS declaration in the script."""
    params = params or NetworkParams()
    networks: dict[str, BehaviorNetwork] = {}
    for decl in doc.agents:
        networks[decl.character] = _network_from_decl(decl, params)
    return networks


def _network_from_decl(decl: AgentDecl, params: NetworkParams) -> BehaviorNetwork:
    goals = [Goal(g.id, g.condition, g.importance, g.relevance) for g in decl.goals]
    modules = [
        CompetenceModule(m.id, decl.character, m.action_id, m.preconditions, m.effects)
        for m in decl.modules
    ]
    return BehaviorNetwork(decl.character, modules, goals, params)


def sync_plot_goal(session, networks: dict[str, BehaviorNetwork]) -> dict[str, float]:
    """Wire the current block's NOTP fallback into every character's network.

    The shared plot goal's relevance becomes the block's current NOTP degree,
    and each character whose actions appear in the NOTP consequence gets one
    plot module whose payload is exactly those actions.  Returns the goal
    relevance map to feed into spread_activation.
    """
    frame = session.active_frame
    relevance = session.notp_degree_now() if frame is not None else 0.0
    payloads = _notp_payloads(session, frame.block, frame.path) if frame else {}
    for character, network in networks.items():
        network.modules = [m for m in network.modules if not m.id.startswith("plot:")]
        network.plot_payloads = {}
        actions = payloads.get(character)
        if actions:
            bundle_id = f"bundle:{frame.path}:{character}"
            network.plot_payloads[bundle_id] = actions
            network.modules.insert(0, CompetenceModule(
                f"plot:{frame.path}", character, bundle_id,
                effects=((PLOT_CONDITION, 1.0),),
            ))
    return {PLOT_GOAL_ID: relevance}


def _notp_payloads(session, block: RuleBlock, path: str) -> dict[str, tuple[str, ...]]:
    payloads: dict[str, list[str]] = {}
    if block.notp_rule is None:
        return {}
    for ref in block.notp_rule.consequence.actions:
        if ref.bracketed:
            continue  # consistency-only actions run on demand, not as payload
        action = session.doc.action(ref.action_id)
        payloads.setdefault(action.performer, []).append(ref.action_id)
    return {ch: tuple(ids) for ch, ids in payloads.items()}
