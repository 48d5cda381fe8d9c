#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace treereg {

// Every failure the library reports carries one of these codes. The command
// line tool maps them onto process exit codes: tree/data validation failures
// exit with 1, file and argument parse errors with 2, numerical failures
// (singular systems, no grid point solved) with 3.
enum class errc {
  // tree structure
  empty_tree,
  duplicate_edge,
  multiple_parents,
  multiple_roots,
  cycle_detected,
  single_child_node,
  unknown_label,
  index_out_of_range,
  // arguments and dimensions
  dimension_mismatch,
  invalid_argument,
  eta_out_of_range,
  // data validation
  composition_violated,
  zero_signal,
  // numerical
  singular_system,
  all_solves_failed,
  // io
  parse_error,
  io_error,
  missing_column,
  unsupported_version,
  unknown_scenario,
};

const char* errc_name(errc code);

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw Error(code, what); }

// Non-fatal conditions (grid fallbacks, degenerate noise variance, ...) are
// appended to a caller supplied warning list when one is present.
using Warnings = std::vector<std::string>;

inline void warn(Warnings* sink, const std::string& message) {
  if (sink != nullptr) sink->push_back(message);
}

}  // namespace treereg
