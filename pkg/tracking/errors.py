"""
Erros Tipados - Rastreamento de Agulha
======================================

Hierarquia de excecoes usada por toda a biblioteca.

Cada modulo levanta apenas erros desta hierarquia, para que o chamador
(CLI, benchmark ou testes) consiga decidir o que fazer com cada caso:
pular o update de um frame, reinicializar o filtro ou abortar.
"""

from typing import List, Optional, Sequence


class TrackingError(Exception):
    """Erro base de toda a biblioteca."""


# =============================================================================
# GEOMETRIA
# =============================================================================
class GeometryError(TrackingError):
    """Falha em operacoes de geometria projetiva."""


class DegenerateConfiguration(GeometryError):
    """Pontos nao determinam uma conica (posto deficiente ou mal condicionado)."""


class NotAnEllipse(GeometryError):
    """Conica com discriminante b^2 - a*c >= 0."""


class NumericalFailure(GeometryError):
    """Argumento de raiz quadrada negativo alem da tolerancia."""


class InvalidParams(GeometryError):
    """Parametros de elipse invalidos (eixos nao positivos)."""


class DegenerateNormalization(GeometryError):
    """Conica passa pela origem do pixel; termo constante nao pode ser 1."""


class BehindCamera(GeometryError):
    """Algum ponto do circulo (ou landmark) esta atras de z_min."""


class OutOfView(GeometryError):
    """Agulha fora da imagem (respeitando a margem configurada)."""


class AmbiguityUnresolved(GeometryError):
    """
    Candidatos de pose do circulo empatados dentro da tolerancia.

    O chamador decide: `candidates` vem ordenado do melhor para o pior.
    """

    def __init__(self, message: str, candidates: Sequence = ()):
        super().__init__(message)
        self.candidates: List = list(candidates)


# =============================================================================
# ESTADO / ENTRADAS
# =============================================================================
class InvalidInput(TrackingError, ValueError):
    """Violacao de pre-condicao (ex.: menos de 5 pontos para o ajuste)."""


class InvalidCovariance(InvalidInput):
    """Covariancia nao simetrica ou nao semidefinida positiva."""


class DegenerateOrientationMean(TrackingError):
    """Soma ponderada de quaternions com norma quase nula."""


# =============================================================================
# OBSERVACAO
# =============================================================================
class ObservationError(TrackingError):
    """Falha ao montar ou avaliar uma observacao."""


class UnknownLabel(ObservationError):
    """Label sem angulo conhecido no modelo da agulha."""


class MissingLabel(ObservationError):
    """Deteccao nao contem um label exigido pela variante."""


class MeasurementUnavailable(ObservationError):
    """Feature do frame nao pode ser construida; o filtro pula o update."""


# =============================================================================
# FILTRO
# =============================================================================
class AllParticlesDegenerate(TrackingError):
    """Todas as particulas ficaram com peso zero (divergencia)."""


# =============================================================================
# ARQUIVOS / CONFIGURACAO
# =============================================================================
class ConfigError(TrackingError):
    """Configuracao invalida; a mensagem lista os campos com problema."""

    def __init__(self, message: str, fields: Sequence[str] = ()):
        super().__init__(message)
        self.fields: List[str] = list(fields)


class ParseError(TrackingError):
    """Arquivo de log/track mal formado."""

    def __init__(self, message: str, frame: Optional[int] = None, line: Optional[int] = None):
        super().__init__(message)
        self.frame = frame
        self.line = line
