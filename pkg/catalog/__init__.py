from catalog.catalog import (
    CraterCatalog, HEADER, DEFAULT_DIAM_RANGE, load_catalog, save_catalog, merge, query_box, query_box_indices,
)
from catalog.synthetic import synthesize_catalog, count_for_density

__all__ = [
    'CraterCatalog', 'HEADER', 'DEFAULT_DIAM_RANGE', 'load_catalog', 'save_catalog', 'merge', 'query_box',
    'query_box_indices', 'synthesize_catalog', 'count_for_density',
]
