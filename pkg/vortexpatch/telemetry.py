"""
Telemetry
=========

OpenTelemetry tracing for solver phases.

A TracerProvider tagged with service.name is installed on first use. Spans
are exported over OTLP/gRPC only when Config.OTEL_ENDPOINT is set; otherwise
they are recorded without an exporter.
"""

from opentelemetry import trace
from opentelemetry.sdk.resources import Resource
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import BatchSpanProcessor

from vortexpatch import __version__
from vortexpatch.config import Config

TRACER_NAME = "vortexpatch"

_provider: TracerProvider | None = None


def setup_tracing(endpoint: str | None = None) -> TracerProvider:
    """
    Install the global tracer provider (idempotent).

    Args:
        endpoint: OTLP collector endpoint. Defaults to Config.OTEL_ENDPOINT.

    Returns:
        The installed TracerProvider
    """
    global _provider
    if _provider is not None:
        return _provider

    resource = Resource.create({
        "service.name": TRACER_NAME,
        "service.version": __version__,
    })
    provider = TracerProvider(resource=resource)

    endpoint = endpoint or Config.OTEL_ENDPOINT
    if endpoint:
        # Imported lazily: the gRPC stack is heavy and only needed when exporting
        from opentelemetry.exporter.otlp.proto.grpc.trace_exporter import OTLPSpanExporter

        provider.add_span_processor(BatchSpanProcessor(OTLPSpanExporter(endpoint=endpoint, insecure=True)))

    trace.set_tracer_provider(provider)
    _provider = provider
    return provider


def get_tracer() -> trace.Tracer:
    """Return the package tracer."""
    return trace.get_tracer(TRACER_NAME, __version__)
