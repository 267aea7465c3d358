"""Reference server for the EQA oracle wire protocol.

Stub mode answers from the shared conformance fixture directory and needs
nothing beyond the standard library; live mode loads vision-language
models behind the same three endpoints.
"""

from .server import ShimError, serve
from .stub import StubBackend

__version__ = "0.1.0"
