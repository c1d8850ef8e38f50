#include "mas/error.hpp"

namespace mas {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::disconnected_graph: return "DisconnectedGraph";
    case Errc::duplicate_edge: return "DuplicateEdge";
    case Errc::self_loop: return "SelfLoop";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::numerical: return "NumericalFailure";
    case Errc::diameter_too_large: return "DiameterTooLarge";
    case Errc::sampling_out_of_range: return "SamplingOutOfRange";
    case Errc::budget_exceeded: return "BudgetExceeded";
    case Errc::outside_workspace: return "OutsideWorkspace";
    case Errc::arity_mismatch: return "ArityMismatch";
    case Errc::parse_error: return "ParseError";
    case Errc::non_rational_constant: return "NonRationalConstant";
    case Errc::horizon_overflow: return "HorizonOverflow";
    case Errc::unsupported_nesting: return "UnsupportedNesting";
    case Errc::non_periodic_word: return "NonPeriodicWord";
    case Errc::unsatisfiable: return "Unsatisfiable";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::workspace_exit: return "WorkspaceExit";
    case Errc::label_mismatch: return "LabelMismatch";
    case Errc::schema_error: return "SchemaError";
    case Errc::semantic_error: return "SemanticError";
    case Errc::io_error: return "IoError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

ParseError::ParseError(Errc code, std::size_t position, const std::string& what)
    : Error(code, what + " at position " + std::to_string(position)), position_(position) {}

}  // namespace mas
