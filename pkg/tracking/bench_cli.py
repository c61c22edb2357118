"""
Linha de Comando - Simulacao, Rastreamento e Benchmark
======================================================

Subcomandos:
    simulate  -> gera log de deteccoes com verdade de referencia
    track     -> roda o filtro sobre um log e grava o track
    bench     -> grade (variante x movimento x sigma) -> CSV de resultados
    compare   -> diferenca frame a frame entre dois tracks

Uso:
    python scripts/rastrear_agulha.py simulate --config config/experimento_padrao.json
    python scripts/rastrear_agulha.py track resultados/deteccoes.log --variant TwoPointsEM
    python scripts/rastrear_agulha.py bench --trials 10 --out resultados/tabela.csv
    python scripts/rastrear_agulha.py compare track_a.csv track_b.csv

Codigos de saida:
    0 sucesso
    1 erro de uso, configuracao, parse ou rastreamento
    2 track concluido, mas o filtro divergiu (reinicializado) ao menos uma vez
    3 benchmark concluido com tentativas falhas
"""

import argparse
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import structlog
from scipy.spatial.transform import Rotation

from .config import ExperimentConfig, derive_seed, load_config, with_overrides
from .conic_geometry import CameraIntrinsics
from .errors import AllParticlesDegenerate, ConfigError, GeometryError, InvalidInput, MissingLabel, TrackingError
from .formats import (
    LogFrame,
    append_result,
    read_detection_log,
    read_track,
    track_row,
    write_detection_log,
    write_track,
)
from .needle_state import Action, NeedleModel, pose_error, weighted_mean_pose
from .observation import ObservationVariant
from .particle_filter import FilterConfig, FilterState, initialize_from_detections, predict, step
from .settings import RuntimeSettings, configure_logging
from .simulator import ErrorSummary, MotionKind, TrialOutcome, run_experiment, simulate

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DIVERGED = 2
EXIT_FAILED_TRIALS = 3

# Chaves de derivacao de semente
SEED_SIMULATION = 1
SEED_FILTER = 2
SEED_REINIT = 3

__all__ = [
    "ErrorSummary",
    "TrackResult",
    "cmd_simulate",
    "cmd_track",
    "cmd_bench",
    "cmd_compare",
    "build_parser",
    "main",
]


def _output_dir(config: ExperimentConfig) -> Path:
    return Path(config.output or RuntimeSettings().output_dir)


def _banner(title: str) -> None:
    print("=" * 60)
    print(title)
    print("=" * 60)


# =============================================================================
# SIMULATE
# =============================================================================
def cmd_simulate(config: ExperimentConfig, out_path: Optional[Path] = None) -> Path:
    """
    Simula a trajetoria configurada e grava o log de deteccoes.

    Returns:
        Caminho do log gravado
    """
    model, K = config.needle_model(), config.camera_intrinsics()
    traj = config.trajectory_spec()
    noise = config.noise_spec()
    frames = simulate(traj, noise, model, K)

    path = Path(out_path) if out_path else _output_dir(config) / "deteccoes.log"
    header = [f"simulate kind={traj.kind.value} sigma_px={noise.sigma_px!r} seed={config.seed} frames={len(frames)}"]
    write_detection_log(frames, path, header=header)

    print(f"{len(frames)} frames ({traj.kind.value}, sigma={noise.sigma_px} px) -> {path}")
    return path


# =============================================================================
# TRACK
# =============================================================================
@dataclass(frozen=True)
class TrackResult:
    """Resumo de uma execucao de rastreamento."""
    path: Path
    frames: int
    reinitializations: int
    skipped_updates: int
    pos_mean_mm: Optional[float] = None
    ori_mean_deg: Optional[float] = None
    failed_reinitializations: int = 0

    @property
    def diverged(self) -> bool:
        return bool(self.reinitializations or self.failed_reinitializations)


def _try_initialize(
    record: LogFrame,
    filter_config: FilterConfig,
    model: NeedleModel,
    K: CameraIntrinsics,
) -> Optional[FilterState]:
    """Estado novo pela reconstrucao do frame; None se a reconstrucao falhar."""
    try:
        return initialize_from_detections(record.detections, filter_config, model, K)
    except (GeometryError, InvalidInput, MissingLabel) as error:
        logger.warning("reconstrucao_falhou", frame=record.frame, erro=str(error))
        return None


def _recover(
    state: FilterState,
    record: LogFrame,
    action: Action,
    config: ExperimentConfig,
    filter_config: FilterConfig,
) -> Tuple[FilterState, bool]:
    """Reinicializa pela reconstrucao do frame; se falhar, so prediz a nuvem atual."""
    reseeded = replace(filter_config, seed=derive_seed(config.seed, SEED_REINIT, record.frame))
    restarted = _try_initialize(record, reseeded, state.model, state.K)
    if restarted is not None:
        return restarted, True
    predicted = predict(state.particles, action, filter_config.motion_noise)
    return replace(state, particles=predicted, frame=record.frame), False


def cmd_track(log_path: Path, config: ExperimentConfig, out_path: Optional[Path] = None) -> TrackResult:
    """
    Rastreia um log de deteccoes.

    Inicializa pela reconstrucao do primeiro frame reconstruivel (frames
    anteriores ficam sem linha). Se todas as particulas zerarem,
    reinicializa pela reconstrucao do frame corrente; se ela falhar, a
    nuvem predita segue sem atualizacao e a reconstrucao e tentada de novo
    no frame seguinte. Um erro que interrompa o rastreamento ainda grava
    as linhas ja calculadas antes de propagar.

    Raises:
        ParseError: log mal formado
        MissingLabel: label exigido pela variante ausente
        TrackingError: nenhum frame reconstruivel
    """
    records = read_detection_log(log_path)
    model, K = config.needle_model(), config.camera_intrinsics()
    filter_config = config.filter_config()
    with_truth = all(record.truth is not None for record in records)
    path = Path(out_path) if out_path else _output_dir(config) / "track.csv"

    rows: List[dict] = []
    state: Optional[FilterState] = None
    recovering = False
    reinitializations = 0
    failed_reinitializations = 0
    skipped = 0

    try:
        for record in records:
            action = record.action or Action.zero()
            if state is None:
                state = _try_initialize(record, filter_config, model, K)
                if state is None:
                    continue
            else:
                if not recovering:
                    try:
                        state, _ = step(state, action, record.detections)
                    except AllParticlesDegenerate:
                        logger.warning("filtro_divergiu", frame=record.frame, reinicializacoes=reinitializations)
                        recovering = True
                if recovering:
                    previous_skipped = state.skipped_updates
                    state, restarted = _recover(state, record, action, config, filter_config)
                    if restarted:
                        reinitializations += 1
                        skipped += previous_skipped
                        recovering = False
                    else:
                        failed_reinitializations += 1

            estimate = weighted_mean_pose(state.particles)
            rows.append(track_row(record.frame, estimate, pose_error(estimate, record.truth) if with_truth else None))
    except TrackingError:
        if rows:
            write_track(rows, path)
            logger.warning("track_parcial", linhas=len(rows), arquivo=str(path))
        raise

    if state is None:
        raise TrackingError(f"{log_path}: nenhum frame permitiu reconstruir a pose inicial")
    skipped += state.skipped_updates
    write_track(rows, path)

    result = TrackResult(path, len(rows), reinitializations, skipped, failed_reinitializations=failed_reinitializations)
    if with_truth:
        result = replace(
            result,
            pos_mean_mm=float(np.mean([row["pos_err_mm"] for row in rows])),
            ori_mean_deg=float(np.mean([row["ori_err_deg"] for row in rows])),
        )
        print(f"{result.frames} frames -> {path} | erro medio {result.pos_mean_mm:.3f} mm / {result.ori_mean_deg:.3f} graus")
    else:
        print(f"{result.frames} frames -> {path}")
    if result.diverged:
        print(
            f"ATENCAO: filtro reinicializado {reinitializations} vez(es), "
            f"{failed_reinitializations} frame(s) sem reconstrucao"
        )
    return result




# =============================================================================
# BENCH
# =============================================================================
def cmd_bench(config: ExperimentConfig, out_path: Optional[Path] = None, n_jobs: Optional[int] = None) -> List[ErrorSummary]:
    """
    Executa run_experiment para cada (movimento, variante, sigma) e grava
    uma linha por condicao, na ordem da configuracao.

    Simulacao semeada por (movimento, sigma): todas as variantes de uma
    celula veem as mesmas deteccoes. Uma condicao que falhe por inteiro
    (ex.: trajetoria fora da imagem) grava uma linha com failures = trials
    e metricas vazias antes de propagar o erro.
    """
    bench = config.bench
    model, K = config.needle_model(), config.camera_intrinsics()
    n_jobs = RuntimeSettings().bench_jobs if n_jobs is None else n_jobs

    path = Path(out_path) if out_path else _output_dir(config) / "resultados.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("", encoding="utf-8")

    summaries = []
    motion_keys = list(MotionKind)
    variant_keys = list(ObservationVariant)
    for motion in bench.motions:
        traj = config.trajectory_spec(motion)
        for variant in bench.variants:
            for sigma_index, sigma in enumerate(bench.sigmas_px):
                cell = (motion_keys.index(motion), sigma_index)
                noise = config.noise_spec(sigma, seed=derive_seed(config.seed, SEED_SIMULATION, *cell))
                filter_config = config.filter_config(
                    variant, sigma, seed=derive_seed(config.seed, SEED_FILTER, *cell, variant_keys.index(variant)),
                )
                logger.info("condicao_iniciada", variante=variant.value, movimento=motion.value, sigma=sigma)
                try:
                    summary = run_experiment(
                        traj, noise, model, K, filter_config, bench.trials,
                        n_jobs=n_jobs, variant=variant.value, motion=motion.value,
                    )
                except TrackingError as error:
                    outcomes = [TrialOutcome(t, failed=True, reason=str(error)) for t in range(bench.trials)]
                    marker = ErrorSummary.from_outcomes(outcomes, variant.value, motion.value, sigma)
                    append_result(marker, path, record_runtime=bench.record_runtime)
                    logger.error("condicao_falhou", variante=variant.value, movimento=motion.value, sigma=sigma, erro=str(error))
                    raise
                append_result(summary, path, record_runtime=bench.record_runtime)
                summaries.append(summary)

    failures = sum(s.failures for s in summaries)
    print(f"{len(summaries)} condicoes -> {path} | tentativas falhas: {failures}")
    return summaries


# =============================================================================
# COMPARE
# =============================================================================
def cmd_compare(track_a: Path, track_b: Path, out_path: Optional[Path] = None) -> pd.DataFrame:
    """Diferenca de posicao (mm) e orientacao (graus) nos frames comuns."""
    first, second = read_track(track_a), read_track(track_b)
    merged = first.merge(second, on="frame", suffixes=("_a", "_b"))

    def columns(names, suffix):
        return merged[[f"{name}_{suffix}" for name in names]].to_numpy(dtype=float)

    position = ["x_m", "y_m", "z_m"]
    rotation = ["rx_rad", "ry_rad", "rz_rad"]
    pos_diff = np.linalg.norm(columns(position, "a") - columns(position, "b"), axis=1) * 1000.0
    if len(merged):
        relative = Rotation.from_rotvec(columns(rotation, "a")) * Rotation.from_rotvec(columns(rotation, "b")).inv()
        ori_diff = np.degrees(relative.magnitude())
    else:
        ori_diff = np.zeros(0)

    table = pd.DataFrame({"frame": merged["frame"], "pos_diff_mm": pos_diff, "ori_diff_deg": ori_diff})
    if out_path:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(out_path, index=False)

    if len(table):
        print(
            f"{len(table)} frames em comum | posicao {table.pos_diff_mm.mean():.3f} mm (max {table.pos_diff_mm.max():.3f}) "
            f"| orientacao {table.ori_diff_deg.mean():.3f} graus (max {table.ori_diff_deg.max():.3f})"
        )
    else:
        print("Nenhum frame em comum")
    return table


# =============================================================================
# ARGUMENTOS / MAIN
# =============================================================================
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Arquivo JSON de configuracao")
    common.add_argument("--seed", type=int, help="Semente (sobrescreve a configuracao)")
    common.add_argument("--out", type=Path, help="Arquivo de saida")
    common.add_argument("--log-level", default=None, help="Nivel de log (padrao: NEEDLE_LOG_LEVEL)")

    parser = argparse.ArgumentParser(
        prog="rastrear_agulha",
        description="Rastreamento de agulha cirurgica com filtro de particulas",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    subparsers.add_parser("simulate", parents=[common], help="Gera log de deteccoes simuladas")

    track = subparsers.add_parser("track", parents=[common], help="Rastreia um log de deteccoes")
    track.add_argument("log", type=Path, help="Log de deteccoes")
    track.add_argument("--variant", choices=[v.value for v in ObservationVariant], help="Variante de observacao")

    bench = subparsers.add_parser("bench", parents=[common], help="Executa a grade do benchmark")
    bench.add_argument("--variant", choices=[v.value for v in ObservationVariant], help="Restringe a uma variante")
    bench.add_argument("--trials", type=int, help="Tentativas por condicao")
    bench.add_argument("--jobs", type=int, default=None, help="Processos paralelos (padrao: NEEDLE_BENCH_JOBS)")

    compare = subparsers.add_parser("compare", help="Compara dois arquivos de track")
    compare.add_argument("track_a", type=Path)
    compare.add_argument("track_b", type=Path)
    compare.add_argument("--out", type=Path, help="CSV com as diferencas por frame")

    return parser


def _load(args: argparse.Namespace) -> ExperimentConfig:
    settings = RuntimeSettings()
    if args.config is not None:
        config = load_config(args.config)
    elif Path(settings.config_path).exists():
        config = load_config(settings.config_path)
    else:
        config = ExperimentConfig()
    return with_overrides(
        config,
        seed=args.seed,
        trials=getattr(args, "trials", None),
        variant=getattr(args, "variant", None),
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Ponto de entrada; devolve o codigo de saida."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return EXIT_OK if exit_.code == 0 else EXIT_ERROR

    try:
        settings = RuntimeSettings()
    except ConfigError as error:
        print(f"ERRO: {error}", file=sys.stderr)
        return EXIT_ERROR
    configure_logging(getattr(args, "log_level", None) or settings.log_level)
    _banner(f"RASTREAMENTO DE AGULHA - {args.command.upper()}")

    try:
        if args.command == "compare":
            cmd_compare(args.track_a, args.track_b, args.out)
            return EXIT_OK

        config = _load(args)
        if args.command == "simulate":
            cmd_simulate(config, args.out)
            return EXIT_OK
        if args.command == "track":
            result = cmd_track(args.log, config, args.out)
            return EXIT_DIVERGED if result.diverged else EXIT_OK
        summaries = cmd_bench(config, args.out, n_jobs=args.jobs)
        return EXIT_FAILED_TRIALS if any(s.failures for s in summaries) else EXIT_OK

    except ConfigError as error:
        logger.error("configuracao_invalida", campos=error.fields)
        print(f"ERRO: {error}", file=sys.stderr)
        return EXIT_ERROR
    except (TrackingError, OSError) as error:
        logger.error("comando_falhou", comando=args.command, erro=str(error))
        print(f"ERRO: {error}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
