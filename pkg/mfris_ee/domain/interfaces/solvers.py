from abc import ABC, abstractmethod

from ..entities.iterate import RunResult
from ..entities.scenario import ScenarioInstance


class IRobustSolver(ABC):
    """Abstract interface for an alternating EE solver"""

    @abstractmethod
    def alternate(self, scenario: ScenarioInstance) -> RunResult:
        """Run to convergence (or the iteration cap) on one drop"""
        pass
