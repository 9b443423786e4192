from cli.commands import main, handle_exceptions, configure_logging, resolve_catalog
from cli.manifest import RunManifest, write_manifest, read_manifest, file_sha256

__all__ = [
    'main', 'handle_exceptions', 'configure_logging', 'resolve_catalog',
    'RunManifest', 'write_manifest', 'read_manifest', 'file_sha256',
]
