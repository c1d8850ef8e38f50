#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mas {

enum class Errc {
  invalid_argument,
  disconnected_graph,
  duplicate_edge,
  self_loop,
  dimension_mismatch,
  numerical,
  diameter_too_large,
  sampling_out_of_range,
  budget_exceeded,
  outside_workspace,
  arity_mismatch,
  parse_error,
  non_rational_constant,
  horizon_overflow,
  unsupported_nesting,
  non_periodic_word,
  unsatisfiable,
  length_mismatch,
  workspace_exit,
  label_mismatch,
  schema_error,
  semantic_error,
  io_error,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Carries the byte offset into the formula text.
class ParseError : public Error {
 public:
  ParseError(Errc code, std::size_t position, const std::string& what);
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace mas
