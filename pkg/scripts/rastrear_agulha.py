#!/usr/bin/env python
"""
Script de Rastreamento de Agulha
================================

Encaminha para tracking.bench_cli.

Uso:
    python scripts/rastrear_agulha.py simulate
    python scripts/rastrear_agulha.py track resultados/deteccoes.log
    python scripts/rastrear_agulha.py bench --trials 3 --jobs 4
    python scripts/rastrear_agulha.py compare resultados/a.csv resultados/b.csv
"""

import sys
from pathlib import Path

# Configuracao de paths
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from tracking.bench_cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
