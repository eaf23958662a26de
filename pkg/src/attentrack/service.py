"""HTTP service wrapping the pipeline.

Endpoints operate on paths visible to the server process: POST /synth
renders scenario scripts into frame directories, POST /run processes a
frame directory end to end, POST /refhist regenerates the reference head
histograms.  Error responses carry a `kind` field ("usage", "data",
"invariant") that clients map to exit codes.
"""

from typing import List, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .errors import AttentrackError, ConfigError, DataError
from .pipeline import make_reference_histograms, run_pipeline, synthesize

app = FastAPI(title="attentrack", version="0.1.0")


class SynthRequest(BaseModel):
    out_dir: str
    script_path: Optional[str] = None
    config_path: Optional[str] = None
    use_default_set: bool = False
    seed: Optional[int] = None


class SequenceInfo(BaseModel):
    name: str
    dir: str
    frames: int


class SynthResponse(BaseModel):
    sequences: List[SequenceInfo]


class RunRequest(BaseModel):
    frames_dir: str
    out_dir: str
    config_path: Optional[str] = None
    no_track: bool = False
    heatmap_px_per_sample: int = 1
    refs_path: Optional[str] = None


class RunResponse(BaseModel):
    frames_processed: int
    detections: int
    confirmed_tracks: int
    wall_clock_s: float
    effective_fps: float
    false_negatives: Optional[int] = None
    false_positives: Optional[int] = None
    fn_rate_pct: Optional[float] = None
    id_switches: Optional[int] = None
    angle_mae_deg: Optional[float] = None
    sign_ranking: Optional[List[str]] = None
    oracle_sign_ranking: Optional[List[str]] = None
    ranking_matches_oracle: Optional[bool] = None


class RefhistRequest(BaseModel):
    out_path: str
    config_path: Optional[str] = None


class RefhistResponse(BaseModel):
    out_path: str
    histograms: int


def _http_error(exc):
    if isinstance(exc, ConfigError):
        return HTTPException(status_code=400,
                             detail={"kind": "usage", "message": str(exc),
                                     "field": exc.field})
    if isinstance(exc, DataError):
        return HTTPException(status_code=422,
                             detail={"kind": "data", "message": str(exc)})
    return HTTPException(status_code=500,
                         detail={"kind": "invariant", "message": str(exc)})


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/synth", response_model=SynthResponse)
def synth(req: SynthRequest):
    try:
        results = synthesize(req.script_path, req.out_dir,
                             config_path=req.config_path,
                             use_default_set=req.use_default_set,
                             seed=req.seed)
    except AttentrackError as exc:
        raise _http_error(exc)
    return SynthResponse(sequences=[SequenceInfo(**r) for r in results])


@app.post("/run", response_model=RunResponse)
def run(req: RunRequest):
    try:
        summary = run_pipeline(req.frames_dir, req.out_dir,
                               config_path=req.config_path,
                               no_track=req.no_track,
                               heatmap_px_per_sample=req.heatmap_px_per_sample,
                               refs_path=req.refs_path)
    except AttentrackError as exc:
        raise _http_error(exc)
    return RunResponse(**summary.__dict__)


@app.post("/refhist", response_model=RefhistResponse)
def refhist(req: RefhistRequest):
    try:
        refs = make_reference_histograms(req.out_path,
                                         config_path=req.config_path)
    except AttentrackError as exc:
        raise _http_error(exc)
    return RefhistResponse(out_path=req.out_path, histograms=len(refs))
