"""HTTP service hosting the manual-correction loop.

Serves the correction queue, ticket results and glyph crops produced by a
batch run. Queue mutations are serialized through a single writer lock;
reads are concurrent.
"""
from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel

from .pipeline import ConflictError, apply_correction, load_queue, load_result


class CorrectionRequest(BaseModel):
    label: str


def create_app(out_dir: str | Path) -> FastAPI:
    out = Path(out_dir)
    app = FastAPI(title="ticket review service")
    write_lock = threading.Lock()

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.get("/api/queue")
    def queue(status: str | None = None):
        items = sorted(load_queue(out).values(), key=lambda it: it.id)
        if status is not None:
            if status not in ("pending", "corrected"):
                raise HTTPException(status_code=400, detail=f"unknown status {status!r}")
            items = [it for it in items if it.status == status]
        return [it.to_json() for it in items]

    @app.post("/api/queue/{item_id}")
    def correct(item_id: str, body: CorrectionRequest):
        if not body.label:
            raise HTTPException(status_code=400, detail="empty label")
        with write_lock:
            try:
                result = apply_correction(out, item_id, body.label)
            except ConflictError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            except KeyError as exc:
                raise HTTPException(status_code=404, detail=str(exc)) from exc
        return {"item_id": item_id, "ticket_id": result["id"], "result": result}

    @app.get("/api/tickets/{ticket_id}")
    def ticket(ticket_id: str):
        try:
            return load_result(out, ticket_id)
        except FileNotFoundError as exc:
            raise HTTPException(status_code=404, detail=f"unknown ticket {ticket_id!r}") from exc

    @app.get("/api/crops/{item_id}")
    def crop(item_id: str):
        items = load_queue(out)
        if item_id not in items:
            raise HTTPException(status_code=404, detail=f"unknown item {item_id!r}")
        path = out / items[item_id].crop_path
        if not path.exists():
            raise HTTPException(status_code=404, detail="crop image missing")
        return FileResponse(path, media_type="image/png")

    return app


def serve(out_dir: str | Path, host: str = "127.0.0.1", port: int = 8700) -> None:
    """Run the review service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(out_dir), host=host, port=port, log_level="warning")
