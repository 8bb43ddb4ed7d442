"""
Configuration factory for creating container configuration from settings.
Bridges between Pydantic settings and dependency injection container.
"""
from typing import Any, Dict

from config.settings import Settings


class ConfigFactory:
    """Factory for creating container configuration from application settings"""

    @staticmethod
    def create_container_config(settings: Settings) -> Dict[str, Any]:
        """Create container configuration from application settings"""
        return {
            'application': {
                'name': settings.app_name,
                'version': settings.app_version,
                'version_string': settings.version_string,
                'debug_mode': settings.debug_mode,
            },
            'runtime': {
                'device': settings.resolve_device(),
                'workers': settings.worker_count(),
            },
            'logging': {
                'level': settings.log_level,
                'file_path': settings.log_file_path,
                'max_size': settings.log_max_size,
                'backup_count': settings.log_backup_count,
            },
        }

    @staticmethod
    def validate_config(config: Dict[str, Any]) -> None:
        """Validate configuration before container initialization"""
        for section in ('application', 'runtime'):
            if section not in config:
                raise ValueError(f"Missing required config section: {section}")

        if not config['application'].get('version_string'):
            raise ValueError("Missing required application field: version_string")

        runtime = config['runtime']
        if runtime.get('device') not in ('cpu', 'cuda') and not str(runtime.get('device', '')).startswith('cuda:'):
            raise ValueError(f"Unsupported device: {runtime.get('device')!r}")
        if int(runtime.get('workers', 0)) < 1:
            raise ValueError("runtime.workers must be >= 1")
