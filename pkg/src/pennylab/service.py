"""HTTP play service: a human faces the prediction engine live.

Sessions hold a repeated game, the engine's strategy, and an exact
running score.  The engine's action for each stage is drawn from its
per-session rng stream BEFORE the human move of that stage is read, so
play is simultaneous: the engine's stage-t policy is a function of the
transcript prefix and its rng only.
"""

import json
import secrets
import threading
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .errors import PennylabError
from .exploit import PredictorState, predictor_strategy
from .formatting import fmt_number
from .games import example_games, shannon_entropy
from .repeated import History, sample_action

MAX_HORIZON = 500
MIN_ACTIONS = 2
MAX_ACTIONS_PER_PLAYER = 4

#: sliding window for the plug-in entropy estimate of the human's moves
ENTROPY_WINDOW = 16

ENGINE_KINDS = ("predictor", "seed-learner", "best-response")


class CreateSessionBody(BaseModel):
    game: str
    n: int
    engine: dict = {}
    engine_seed: Optional[int] = None


class MoveBody(BaseModel):
    action: str


class Session:
    """One live match; the engine owns seat 0, the human seat 1."""

    def __init__(self, sid: str, game, game_name: str, n: int,
                 engine, engine_config: dict, rng):
        self.id = sid
        self.game = game
        self.game_name = game_name
        self.n = n
        self.engine = engine
        self.engine_config = engine_config
        self.rng = rng
        self.history = History.empty(n)
        self.scores = [Fraction(0), Fraction(0)]
        self.lock = threading.Lock()
        self.pending: Optional[int] = None
        self._draw_engine_action()

    @property
    def finished(self) -> bool:
        return self.history.t >= self.n

    def _draw_engine_action(self) -> None:
        # commitment point: the engine's next action exists before any
        # human input for this stage is known
        if self.finished:
            self.pending = None
            return
        dist = self.engine.stage_distribution(self.game, self.history)
        self.pending = sample_action(dist, self.rng)

    def play(self, human_action: int) -> dict:
        engine_action = self.pending
        joint = (engine_action, human_action)
        payoffs = [Fraction(self.game.payoff_to(joint, i)) for i in range(2)]
        self.history = self.history.append(joint)
        for i in range(2):
            self.scores[i] += payoffs[i]
        self._draw_engine_action()
        return {
            "stage": self.history.t,
            "engine_action": self.game.actions[0][engine_action],
            "human_action": self.game.actions[1][human_action],
            "payoffs": [fmt_number(p) for p in payoffs],
            "scores": [fmt_number(s) for s in self.scores],
            "finished": self.finished,
            "diagnostics": self.diagnostics(),
        }

    def human_entropy_estimate(self) -> float:
        moves = self.history.own(1)[-ENTROPY_WINDOW:]
        if not moves:
            return 0.0
        k = self.game.num_actions(1)
        counts = [0] * k
        for a in moves:
            counts[a] += 1
        return shannon_entropy([c / len(moves) for c in counts])

    def diagnostics(self) -> dict:
        diagnostic = getattr(self.engine, "diagnostic", None)
        confidence = (float(diagnostic(self.game, self.history))
                      if diagnostic is not None else 0.0)
        return {
            "confidence": confidence,
            "human_entropy_estimate": self.human_entropy_estimate(),
            "stages_played": self.history.t,
        }

    def state(self) -> dict:
        transcript = [[self.game.actions[0][a0], self.game.actions[1][a1]]
                      for a0, a1 in self.history.stages]
        return {
            "id": self.id,
            "game": self.game_name,
            "n": self.n,
            "engine": self.engine_config,
            "transcript": transcript,
            "scores": [fmt_number(s) for s in self.scores],
            "remaining": self.n - self.history.t,
            "finished": self.finished,
            "diagnostics": self.diagnostics(),
        }


def _build_engine(game, n: int, config: dict):
    kind = config.get("kind", "predictor")
    if kind == "seed-learner":
        raise HTTPException(
            status_code=400,
            detail="the seed learner needs a seeded opponent program and "
                   "humans are not seeded; use the predictor engine")
    if kind == "best-response":
        raise HTTPException(
            status_code=400,
            detail="the best-response engine needs a declared opponent "
                   "strategy; use the predictor engine for live play")
    if kind != "predictor":
        raise HTTPException(
            status_code=400,
            detail=f"unknown engine kind {kind!r}; "
                   f"known: {', '.join(ENGINE_KINDS)}")
    state = PredictorState(
        context_length=int(config.get("context_length", 1)),
        tau=float(config.get("tau", 0.9)),
        min_support=int(config.get("min_support", 3)))
    try:
        engine = predictor_strategy(state, game, n)
    except PennylabError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from None
    resolved = {"kind": "predictor", "context_length": state.context_length,
                "tau": state.tau, "min_support": state.min_support}
    return engine, resolved


def create_app(journal=None) -> FastAPI:
    app = FastAPI(title="pennylab play service")
    games = example_games()
    sessions: dict[str, Session] = {}
    store_lock = threading.Lock()
    journal_path = Path(journal) if journal else None
    journal_lock = threading.Lock()

    def journal_write(record: dict) -> None:
        if journal_path is None:
            return
        with journal_lock:
            with open(journal_path, "a") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")

    def get_session(sid: str) -> Session:
        with store_lock:
            session = sessions.get(sid)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    @app.get("/api/games")
    def list_games():
        return {"games": [
            {"name": name, "players": g.players,
             "actions": [list(a) for a in g.actions],
             "zero_sum": g.zero_sum}
            for name, g in sorted(games.items())]}

    @app.post("/api/session", status_code=201)
    def create_session(body: CreateSessionBody):
        game = games.get(body.game)
        if game is None:
            raise HTTPException(status_code=400, detail="unknown game")
        if game.players != 2:
            raise HTTPException(status_code=400,
                                detail="live play is two-player only")
        if not all(MIN_ACTIONS <= m <= MAX_ACTIONS_PER_PLAYER
                   for m in game.shape):
            raise HTTPException(
                status_code=400,
                detail=f"live play needs {MIN_ACTIONS}-"
                       f"{MAX_ACTIONS_PER_PLAYER} actions per player")
        if not 1 <= body.n <= MAX_HORIZON:
            raise HTTPException(
                status_code=400,
                detail=f"n must lie in 1..{MAX_HORIZON}")
        engine, resolved = _build_engine(game, body.n, body.engine)
        if body.engine_seed is not None and body.engine_seed < 0:
            raise HTTPException(status_code=400,
                                detail="engine_seed must be non-negative")
        seed_entropy = (body.engine_seed if body.engine_seed is not None
                        else secrets.randbits(64))
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence([seed_entropy])))
        sid = secrets.token_hex(16)  # 128 bits
        session = Session(sid, game, body.game, body.n, engine, resolved,
                          rng)
        with store_lock:
            sessions[sid] = session
        journal_write({"event": "create", "session": sid,
                       "game": body.game, "n": body.n})
        return session.state()

    @app.post("/api/session/{sid}/move")
    def submit_move(sid: str, body: MoveBody):
        session = get_session(sid)
        with session.lock:
            if session.finished:
                raise HTTPException(status_code=409,
                                    detail="session complete")
            labels = session.game.actions[1]
            token = body.action.strip()
            if token in labels:
                action = labels.index(token)
            elif token.isdigit() and int(token) < len(labels):
                action = int(token)
            else:
                raise HTTPException(
                    status_code=400,
                    detail=f"invalid action {body.action!r}; "
                           f"one of {', '.join(labels)}")
            result = session.play(action)
        journal_write({"event": "move", "session": sid,
                       "stage": result["stage"],
                       "engine": result["engine_action"],
                       "human": result["human_action"]})
        return result

    @app.get("/api/session/{sid}")
    def session_state(sid: str):
        session = get_session(sid)
        with session.lock:
            return session.state()

    return app


app = create_app()
