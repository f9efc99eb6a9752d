"""faultline: fault injection for database clients inside functional tests.

Wrap a client with :func:`create_interceptor`, hand the test to
:func:`run_exploration`, and render the result with
:func:`emit_json_report` / :func:`emit_html_report`.
"""

from .errors import (BaselineFailed, ContractViolation, Exhausted, FaultlineError,
                     OutsideIteration, SchemaError, StaleHandle, UnknownInterface, UnknownMethod)
from .explorer import (ExplorationConfig, Frontier, IterationOutcome, Status, TestResult,
                       discover_new_sites, enumerate_assignments, run_exploration,
                       was_fault_injected, was_fault_injected_on)
from .faults import (ByzantineFault, ExceptionFault, FaultAssignment, FaultCatalog,
                     InjectedException, enumerate_exception_faults, fabricate_exception,
                     load_catalog)
from .intercept import (CallDescriptor, CallKind, DeferredHandle, ExecutionTrace,
                        InvocationRecord, Session, create_interceptor, resolve_call_site_id,
                        resolve_deferred)
from .interfaces import DEFAULT_INTERFACES, ClientInterface, InterfaceRegistry, client_interface
from .report import (ReportRow, TestReport, emit_html_report, emit_json_report,
                     parse_json_report)
from .transformers import (FunctionTransformer, Transformer, TransformerRegistry,
                           TransformerState, register_transformer)

__version__ = "0.1.0"
