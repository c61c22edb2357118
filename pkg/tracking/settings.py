"""
Configuracao de Execucao e Logging
==================================

Configuracoes do processo (nao do experimento): nivel de log, numero de
jobs paralelos do benchmark e diretorio de saida. Valores vem do `.env`
na raiz do projeto ou de variaveis de ambiente.
"""

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import structlog
from dotenv import load_dotenv

from .errors import ConfigError

PROJECT_ROOT = Path(__file__).parent.parent

# Carrega variaveis de ambiente
load_dotenv(PROJECT_ROOT / '.env')

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


# =============================================================================
# CONFIGURACAO
# =============================================================================
def _env_jobs(name: str, default: int) -> int:
    """
    Numero de processos do joblib (-1 = todos os nucleos).

    Raises:
        ConfigError: valor nao inteiro, zero ou menor que -1
    """
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{name} deve ser inteiro, recebido {raw!r}", fields=[name]) from None
    if value == 0 or value < -1:
        raise ConfigError(f"{name} deve ser >= 1 ou -1, recebido {value}", fields=[name])
    return value


@dataclass
class RuntimeSettings:
    """Configuracoes de execucao lidas do ambiente no momento da criacao."""
    log_level: str = field(default_factory=lambda: os.getenv("NEEDLE_LOG_LEVEL", "INFO"))
    bench_jobs: int = field(default_factory=lambda: _env_jobs("NEEDLE_BENCH_JOBS", 1))
    output_dir: str = field(default_factory=lambda: os.getenv("NEEDLE_OUTPUT_DIR", "./resultados"))
    config_path: str = field(
        default_factory=lambda: os.getenv("NEEDLE_CONFIG", str(PROJECT_ROOT / "config" / "experimento_padrao.json"))
    )


# =============================================================================
# LOGGING
# =============================================================================
def configure_logging(level: str = "INFO") -> None:
    """
    Configura logging estruturado sobre o logging padrao.

    Args:
        level: Nivel minimo (DEBUG, INFO, WARNING...)
    """
    numeric_level = getattr(logging, str(level).upper(), logging.INFO)

    logging.basicConfig(level=numeric_level, format=LOG_FORMAT, force=True)

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.format_exc_info,
            structlog.dev.ConsoleRenderer(colors=False),
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )
