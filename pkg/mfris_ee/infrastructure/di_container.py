from typing import Any, Callable, Dict, Optional

from ..domain.interfaces.results import IPlotRenderer, IResultRepository
from .plotting.plot_renderer import MatplotlibPlotRenderer
from .storage.csv_result_repository import CsvResultRepository
from ..application.use_cases.experiment_use_cases import (
    ComplexityEstimateUseCase, EmitPlotsUseCase, FeasibilityRateUseCase, ListSchemesUseCase,
    RunConvergenceUseCase, RunSweepUseCase,
)
from ..simulation_config import SimulationSettings, load_settings


class DIContainer:
    """Wires settings, the CSV store and the plot renderer into the harness use cases.

    Services are built lazily from registered builders. Shared services are
    cached until ``configure`` swaps the settings; use cases are built fresh
    on every ``get_factory(...)()`` call so each request sees current settings.
    """

    def __init__(self, settings: Optional[SimulationSettings] = None):
        self._settings = settings
        self._builders: Dict[str, Callable[[], Any]] = {}
        self._cache: Dict[str, Any] = {}
        self._register_services()
        self._register_use_cases()

    def _register_services(self):
        self.register_singleton('settings', lambda: self._settings or load_settings())
        # both write under harness.output_dir
        self.register_singleton('result_repository', lambda: CsvResultRepository(
            base_path=self.settings.harness.output_dir
        ))
        self.register_singleton('plot_renderer', lambda: MatplotlibPlotRenderer(
            base_path=self.settings.harness.output_dir
        ))

    def _register_use_cases(self):
        self.register_factory('run_sweep_use_case', lambda: RunSweepUseCase(
            settings=self.settings, result_repository=self.result_repository
        ))
        self.register_factory('feasibility_rate_use_case', lambda: FeasibilityRateUseCase(
            settings=self.settings, result_repository=self.result_repository
        ))
        self.register_factory('run_convergence_use_case', lambda: RunConvergenceUseCase(
            settings=self.settings, result_repository=self.result_repository
        ))
        self.register_factory('emit_plots_use_case', lambda: EmitPlotsUseCase(
            result_repository=self.result_repository, plot_renderer=self.plot_renderer
        ))
        self.register_singleton('complexity_estimate_use_case', ComplexityEstimateUseCase)
        self.register_singleton('list_schemes_use_case', ListSchemesUseCase)

    @property
    def settings(self) -> SimulationSettings:
        return self.get_singleton('settings')

    @property
    def result_repository(self) -> IResultRepository:
        return self.get_singleton('result_repository')

    @property
    def plot_renderer(self) -> IPlotRenderer:
        return self.get_singleton('plot_renderer')

    def register_singleton(self, name: str, builder: Callable[[], Any]):
        self._builders[name] = builder
        self._cache.pop(name, None)

    def register_factory(self, name: str, builder: Callable[[], Any]):
        self._builders[name] = builder

    def get_singleton(self, name: str) -> Any:
        if name not in self._cache:
            self._cache[name] = self.get_factory(name)()
        return self._cache[name]

    def get_factory(self, name: str) -> Callable[[], Any]:
        try:
            return self._builders[name]
        except KeyError:
            raise ValueError(f"No service registered as '{name}'") from None

    def configure(self, settings: Optional[SimulationSettings]):
        """Swap the settings and drop every cached service built from the old ones"""
        self._settings = settings
        self._cache.clear()


container = DIContainer()
