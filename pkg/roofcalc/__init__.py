try:
    from ._version import get_versions
except ImportError:
    # Source checkouts only get _version.py when versioneer builds them.
    from importlib.metadata import PackageNotFoundError, version
    try:
        __version__ = version(__name__)
    except PackageNotFoundError:
        __version__ = '0+unknown'
    del PackageNotFoundError, version
else:
    __version__ = get_versions()['version']
    del get_versions

__all__ = ['analysis', 'cli', 'examples', 'formats', 'geometry', 'lp',
           'quantum', 'roof']
