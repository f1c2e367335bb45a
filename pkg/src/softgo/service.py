"""Local HTTP/JSON service for playing live games against a checkpointed
network and inspecting its Q-values and policy.

Every state mutation goes through the engine's `step`, so the service cannot
create an illegal position; the engine replies synchronously inside the move
request. Sessions are independent and serialized by per-session locks; the
loaded parameters are shared read-only.
"""

from __future__ import annotations

import os
import threading
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import engine, network, softq
from .engine import BLACK, WHITE, BoardConfig, GameState, IllegalMoveError

_COLOR_NAMES = {BLACK: "black", WHITE: "white"}
_COLOR_VALUES = {"black": BLACK, "white": WHITE}


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass
class GameSession:
    session_id: str
    state: GameState
    engine_color: int | None  # BLACK, WHITE, or None (human plays both)
    mode: str  # "argmax" or "sampling"
    move_log: list[int] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)


class NewGameRequest(BaseModel):
    size: int = 5
    komi: float = 7.5
    human_color: str = "black"  # "black", "white", or "both"
    mode: str = "argmax"


class MoveRequest(BaseModel):
    action: int


class SessionStore:
    def __init__(self):
        self._sessions: dict[str, GameSession] = {}
        self._lock = threading.Lock()

    def create(self, session: GameSession) -> None:
        with self._lock:
            self._sessions[session.session_id] = session

    def get(self, session_id: str) -> GameSession:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise ApiError(404, "unknown_session", f"no session {session_id}")
        return session


def _state_payload(session: GameSession) -> dict:
    state = session.state
    terminal = state.terminal
    mask = None if terminal else engine.legal_mask(state)
    score = engine.score(state) if terminal else None
    return {
        "session_id": session.session_id,
        "size": state.size,
        "komi": state.config.komi,
        "board": state.stones.astype(int).tolist(),
        "to_move": _COLOR_NAMES[state.to_move],
        "legal_mask": [] if mask is None else mask.astype(int).tolist(),
        "terminal": terminal,
        "score_if_terminal": None
        if score is None
        else {
            "area_black": score.area_black,
            "area_white": score.area_white,
            "score": score.score,
        },
        "move_log": list(session.move_log),
        "engine_color": None
        if session.engine_color is None
        else _COLOR_NAMES[session.engine_color],
        "mode": session.mode,
        "consecutive_passes": state.consecutive_passes,
        "move_count": state.move_count,
    }


def create_app(
    params: network.Parameters,
    alpha_display: float = 0.081,
    ui_dir: str | None = None,
    rng_seed: int = 0,
) -> FastAPI:
    app = FastAPI(title="softgo play service")
    store = SessionStore()
    rng = np.random.default_rng(rng_seed)
    rng_lock = threading.Lock()

    def engine_action(state: GameState, mode: str) -> int:
        mask = engine.legal_mask(state)
        q = network.forward(params, engine.features(state))[0]
        if mode == "argmax":
            return softq.argmax_action(q, mask)
        pi = softq.policy_from_q(q, mask, alpha_display)
        with rng_lock:
            return softq.sample_action(pi, rng)

    def engine_replies(session: GameSession) -> list[int]:
        replies = []
        while (
            not session.state.terminal
            and session.engine_color is not None
            and session.state.to_move == session.engine_color
        ):
            action = engine_action(session.state, session.mode)
            session.state, _, _ = engine.step(session.state, action)
            session.move_log.append(action)
            replies.append(action)
        return replies

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status, content={"code": exc.code, "message": exc.message}
        )

    @app.post("/game")
    def new_game_endpoint(req: NewGameRequest):
        if req.size != params.config.board_size:
            raise ApiError(
                400,
                "size_mismatch",
                f"loaded network plays {params.config.board_size}x{params.config.board_size}",
            )
        if req.mode not in ("argmax", "sampling"):
            raise ApiError(400, "bad_mode", "mode must be argmax or sampling")
        if req.human_color == "both":
            engine_color = None
        elif req.human_color in _COLOR_VALUES:
            engine_color = engine.opponent(_COLOR_VALUES[req.human_color])
        else:
            raise ApiError(400, "bad_color", "human_color must be black, white, or both")
        try:
            board = BoardConfig(size=req.size, komi=req.komi)
        except ValueError as exc:
            raise ApiError(400, "bad_config", str(exc))
        session = GameSession(
            session_id=uuid.uuid4().hex,
            state=engine.new_game(board),
            engine_color=engine_color,
            mode=req.mode,
        )
        store.create(session)
        with session.lock:
            engine_replies(session)
            return _state_payload(session)

    @app.get("/game/{session_id}")
    def get_game(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return _state_payload(session)

    def _apply_human_action(session_id: str, action: int) -> dict:
        session = store.get(session_id)
        with session.lock:
            state = session.state
            if session.engine_color is not None and not state.terminal:
                if state.to_move == session.engine_color:
                    raise ApiError(409, "not_your_turn", "engine is to move")
            try:
                session.state, _, _ = engine.step(state, action)
            except IllegalMoveError as exc:
                raise ApiError(409, exc.rule, str(exc))
            session.move_log.append(action)
            replies = engine_replies(session)
            payload = _state_payload(session)
            payload["human_move"] = action
            payload["engine_moves"] = replies
            return payload

    @app.post("/game/{session_id}/move")
    def post_move(session_id: str, req: MoveRequest):
        return _apply_human_action(session_id, req.action)

    @app.post("/game/{session_id}/pass")
    def post_pass(session_id: str):
        session = store.get(session_id)
        return _apply_human_action(session_id, session.state.config.pass_action)

    @app.post("/game/{session_id}/new")
    def post_new(session_id: str):
        session = store.get(session_id)
        with session.lock:
            session.state = engine.new_game(session.state.config)
            session.move_log.clear()
            engine_replies(session)
            return _state_payload(session)

    @app.get("/game/{session_id}/analysis")
    def get_analysis(session_id: str):
        session = store.get(session_id)
        with session.lock:
            state = session.state
            if state.terminal:
                raise ApiError(409, "terminal", "game is over")
            mask = engine.legal_mask(state)
            q = network.forward(params, engine.features(state))[0]
            pi = softq.policy_from_q(q, mask, alpha_display)
            return {
                "q_values": [float(v) for v in q],
                "policy": [float(p) for p in pi.probs],
                "legal_mask": mask.astype(int).tolist(),
                "argmax": softq.argmax_action(q, mask),
                "alpha": alpha_display,
                "to_move": _COLOR_NAMES[state.to_move],
            }

    @app.get("/game/{session_id}/sgf")
    def get_sgf(session_id: str):
        session = store.get(session_id)
        with session.lock:
            result = engine.score(session.state) if session.state.terminal else None
            sgf = engine.game_to_sgf(session.move_log, session.state.config, result)
            return PlainTextResponse(sgf, media_type="application/x-go-sgf")

    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
