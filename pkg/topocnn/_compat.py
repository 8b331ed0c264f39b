"""Module to cater for missing optional dependencies"""

"""
png imports; and their defaults if pypng is missing
"""
try:
    import png as _png

    PngReader = _png.Reader
    HAS_PNG = True
except ImportError:
    PngReader = None
    HAS_PNG = False
