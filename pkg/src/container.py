"""
Dependency injection container for wiring up all application layers.
Provides centralized configuration and dependency management.
"""
import logging
from typing import Any, Dict

# Application
from .application import (
    AnnotateUseCase,
    EvaluateUseCase,
    GenerateDataUseCase,
    SampleImagesUseCase,
    SweepUseCase,
    TrainModelUseCase,
)

# Infrastructure
from .infrastructure.exporters import PngExporter, ReportWriter
from .infrastructure.repositories import (
    FileAnnotationRepository,
    FileCheckpointRepository,
    FileDatasetRepository,
    FileFeatureRepository,
)

logger = logging.getLogger(__name__)


class DependencyContainer:
    """Dependency injection container for the application"""

    def __init__(self):
        self._repositories: Dict[str, Any] = {}
        self._exporters: Dict[str, Any] = {}
        self._use_cases: Dict[str, Any] = {}
        self._config: Dict[str, Any] = {}
        self._initialized = False

    def initialize(self, config: Dict[str, Any]) -> None:
        """Initialize all dependencies"""
        if self._initialized:
            logger.warning("Container already initialized")
            return

        try:
            self._config = config
            self._setup_repositories()
            self._setup_exporters()
            self._setup_use_cases()
            self._initialized = True
            logger.debug("Dependency container initialized")

        except Exception as e:
            logger.error(f"Failed to initialize dependency container: {e}")
            self.cleanup()
            raise

    def _setup_repositories(self) -> None:
        """Setup repository implementations"""
        self._repositories['dataset'] = FileDatasetRepository()
        self._repositories['feature'] = FileFeatureRepository()
        self._repositories['annotation'] = FileAnnotationRepository()
        self._repositories['checkpoint'] = FileCheckpointRepository()

    def _setup_exporters(self) -> None:
        """Setup output writers; every output carries the version string"""
        version = self._config['application']['version_string']
        self._exporters['png'] = PngExporter(version)
        self._exporters['report'] = ReportWriter(version)

    def _setup_use_cases(self) -> None:
        """Setup application use cases"""
        version = self._config['application']['version_string']
        device = self._config['runtime']['device']
        repos = self._repositories

        self._use_cases['generate_data'] = GenerateDataUseCase(
            dataset_repository=repos['dataset'],
            workers=self._config['runtime']['workers'],
        )
        self._use_cases['annotate'] = AnnotateUseCase(
            dataset_repository=repos['dataset'],
            annotation_repository=repos['annotation'],
            feature_repository=repos['feature'],
        )
        self._use_cases['train'] = TrainModelUseCase(
            dataset_repository=repos['dataset'],
            annotation_repository=repos['annotation'],
            checkpoint_repository=repos['checkpoint'],
            report_writer=self._exporters['report'],
            version=version,
            device=device,
        )
        self._use_cases['sample'] = SampleImagesUseCase(
            checkpoint_repository=repos['checkpoint'],
            annotation_repository=repos['annotation'],
            exporter=self._exporters['png'],
            device=device,
        )
        self._use_cases['evaluate'] = EvaluateUseCase(
            dataset_repository=repos['dataset'],
            annotation_repository=repos['annotation'],
            checkpoint_repository=repos['checkpoint'],
            report_writer=self._exporters['report'],
            device=device,
        )
        self._use_cases['sweep'] = SweepUseCase(
            dataset_repository=repos['dataset'],
            annotation_repository=repos['annotation'],
            checkpoint_repository=repos['checkpoint'],
            annotate_use_case=self._use_cases['annotate'],
            train_use_case=self._use_cases['train'],
            evaluate_use_case=self._use_cases['evaluate'],
            report_writer=self._exporters['report'],
            version=version,
            device=device,
        )

    def cleanup(self) -> None:
        """Drop every wired dependency"""
        self._repositories.clear()
        self._exporters.clear()
        self._use_cases.clear()
        self._initialized = False

    # Getters for dependencies

    def get_repository(self, name: str) -> Any:
        """Get repository by name"""
        if name not in self._repositories:
            raise ValueError(f"Repository '{name}' not found")
        return self._repositories[name]

    def get_use_case(self, name: str) -> Any:
        """Get use case by name"""
        if name not in self._use_cases:
            raise ValueError(f"Use case '{name}' not found")
        return self._use_cases[name]

    @property
    def is_initialized(self) -> bool:
        return self._initialized


def create_container(config: Dict[str, Any]) -> DependencyContainer:
    """Build and initialize a container from a ConfigFactory dict"""
    container = DependencyContainer()
    container.initialize(config)
    return container
