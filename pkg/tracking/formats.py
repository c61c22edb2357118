"""
Formatos de Arquivo
===================

Log de deteccoes (texto, um frame por linha):

    # comentario
    <frame> [gt=x,y,z,rx,ry,rz] [act=bx,by,bz,qx,qy,qz] tail:x:y tip:x:y body:x:y ...

Numeros sao gravados com repr(), entao ler(gravar(frames)) devolve os
mesmos valores bit a bit. `body` pode repetir (pontos nao rotulados, em
ordem); os demais labels sao unicos.

Arquivo de track e tabela de resultados: CSV via pandas (docs/FORMATOS.md).
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import pandas as pd

from .conic_geometry import PixelPoint
from .errors import InvalidInput, ParseError
from .needle_state import BODY, Action, Pose6D
from .observation import DetectionSet

TRACK_POSE_COLUMNS = ["frame", "x_m", "y_m", "z_m", "rx_rad", "ry_rad", "rz_rad"]
TRACK_ERROR_COLUMNS = ["pos_err_mm", "ori_err_deg"]

RESULT_COLUMNS = [
    "variant", "motion", "sigma",
    "pos_mean_mm", "pos_std_mm", "ori_mean_deg", "ori_std_deg",
    "runtime_s_per_frame", "failures", "trials",
]

PathLike = Union[str, Path]


# =============================================================================
# LOG DE DETECCOES
# =============================================================================
@dataclass(frozen=True)
class LogFrame:
    """Registro de um frame do log: deteccoes + verdade/acao opcionais."""
    frame: int
    detections: DetectionSet
    truth: Optional[Pose6D] = None
    action: Optional[Action] = None

    @classmethod
    def from_sim(cls, sim_frame) -> "LogFrame":
        return cls(sim_frame.frame, sim_frame.detections, sim_frame.truth, sim_frame.action)


def _numbers(values: Iterable[float]) -> str:
    return ",".join(repr(float(v)) for v in values)


def format_log_line(record: LogFrame) -> str:
    parts = [str(record.frame)]
    if record.truth is not None:
        parts.append("gt=" + _numbers(record.truth.position + record.truth.rotvec))
    if record.action is not None:
        parts.append("act=" + _numbers(record.action.translation + record.action.rotation))
    for label, point in record.detections.labeled.items():
        parts.append(f"{label}:{point.x!r}:{point.y!r}")
    for point in record.detections.body:
        parts.append(f"{BODY}:{point.x!r}:{point.y!r}")
    return " ".join(parts)


def _parse_vector(token: str, prefix: str, size: int, frame: int, line_number: int) -> List[float]:
    try:
        values = [float(v) for v in token[len(prefix):].split(",")]
    except ValueError:
        raise ParseError(f"Linha {line_number}: numero invalido em {token!r}", frame, line_number) from None
    if len(values) != size:
        raise ParseError(
            f"Linha {line_number}: {prefix[:-1]} exige {size} numeros, recebeu {len(values)}",
            frame, line_number,
        )
    return values


def parse_log_line(line: str, line_number: int = 0) -> LogFrame:
    """
    Raises:
        ParseError: com frame e numero da linha
    """
    tokens = line.split()
    try:
        frame = int(tokens[0])
    except (IndexError, ValueError):
        raise ParseError(f"Linha {line_number}: indice de frame invalido", None, line_number) from None

    truth, action = None, None
    labeled, body = {}, []
    for token in tokens[1:]:
        if token.startswith("gt="):
            values = _parse_vector(token, "gt=", 6, frame, line_number)
            truth = Pose6D(tuple(values[:3]), tuple(values[3:]))
        elif token.startswith("act="):
            values = _parse_vector(token, "act=", 6, frame, line_number)
            action = Action(tuple(values[:3]), tuple(values[3:]))
        else:
            pieces = token.split(":")
            if len(pieces) != 3 or not pieces[0]:
                raise ParseError(f"Linha {line_number}: ponto mal formado {token!r}", frame, line_number)
            try:
                point = PixelPoint(float(pieces[1]), float(pieces[2]))
            except (ValueError, InvalidInput):
                raise ParseError(f"Linha {line_number}: coordenada invalida em {token!r}", frame, line_number) from None
            if pieces[0] == BODY:
                body.append(point)
            elif pieces[0] in labeled:
                raise ParseError(f"Linha {line_number}: label repetido {pieces[0]!r}", frame, line_number)
            else:
                labeled[pieces[0]] = point

    if not labeled and not body:
        raise ParseError(f"Linha {line_number}: frame {frame} sem deteccoes", frame, line_number)
    return LogFrame(frame, DetectionSet(frame, labeled, tuple(body)), truth, action)


def write_detection_log(frames: Iterable, path: PathLike, header: Sequence[str] = ()) -> Path:
    """Grava LogFrames (ou SimFrames) no formato de log."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for comment in header:
            handle.write(f"# {comment}\n")
        for record in frames:
            if not isinstance(record, LogFrame):
                record = LogFrame.from_sim(record)
            handle.write(format_log_line(record) + "\n")
    return path


def read_detection_log(path: PathLike) -> List[LogFrame]:
    """
    Raises:
        ParseError: linha mal formada ou log sem frames
    """
    path = Path(path)
    records = []
    with path.open("r", encoding="utf-8") as handle:
        for line_number, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                records.append(parse_log_line(line, line_number))
    if not records:
        raise ParseError(f"{path}: log sem frames")
    return records


# =============================================================================
# TRACK / RESULTADOS
# =============================================================================
def track_row(frame: int, estimate: Pose6D, errors: Optional[Sequence[float]] = None) -> dict:
    row = dict(zip(TRACK_POSE_COLUMNS, [frame, *estimate.position, *estimate.rotvec]))
    if errors is not None:
        row.update(zip(TRACK_ERROR_COLUMNS, errors))
    return row


def write_track(rows: Sequence[dict], path: PathLike) -> Path:
    """Colunas de erro so aparecem quando todas as linhas tem verdade."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with_errors = bool(rows) and all(TRACK_ERROR_COLUMNS[0] in row for row in rows)
    columns = TRACK_POSE_COLUMNS + (TRACK_ERROR_COLUMNS if with_errors else [])
    pd.DataFrame(list(rows), columns=columns).to_csv(path, index=False)
    return path


def read_track(path: PathLike) -> pd.DataFrame:
    """
    Raises:
        ParseError: colunas de pose ausentes
    """
    frame = pd.read_csv(path)
    missing = [c for c in TRACK_POSE_COLUMNS if c not in frame.columns]
    if missing:
        raise ParseError(f"{path}: colunas ausentes {missing}")
    return frame


def append_result(summary, path: PathLike, record_runtime: bool = True) -> Path:
    """Acrescenta uma linha (ErrorSummary) a tabela; cria o cabecalho na primeira."""
    path = Path(path)
    row = {column: getattr(summary, column) for column in RESULT_COLUMNS}
    if not record_runtime:
        row["runtime_s_per_frame"] = None
    write_header = not path.exists() or path.stat().st_size == 0
    pd.DataFrame([row], columns=RESULT_COLUMNS).to_csv(path, mode="a", header=write_header, index=False)
    return path


def read_results(path: PathLike) -> pd.DataFrame:
    return pd.read_csv(path)
