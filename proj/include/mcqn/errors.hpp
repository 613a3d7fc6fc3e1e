#pragma once

#include <stdexcept>
#include <string>

namespace mcqn {

enum class errc {
  parse_error,
  non_open_network,
  non_strict_priority,
  bad_rates,
  negative_rate,
  no_convergence,
  ah_singular,
  dimension_too_large,
  bad_normalization,
  state_space_too_large,
  solver_failure,
  conditioning_event_empty,
  no_events,
  lcp_failure,
  no_boundary_mass,
  analysis_failed,
};

[[nodiscard]] constexpr const char* errc_name(errc c) {
  switch (c) {
    case errc::parse_error: return "ParseError";
    case errc::non_open_network: return "NonOpenNetwork";
    case errc::non_strict_priority: return "NonStrictPriority";
    case errc::bad_rates: return "BadRates";
    case errc::negative_rate: return "NegativeRate";
    case errc::no_convergence: return "NoConvergence";
    case errc::ah_singular: return "AHSingular";
    case errc::dimension_too_large: return "DimensionTooLarge";
    case errc::bad_normalization: return "BadNormalization";
    case errc::state_space_too_large: return "StateSpaceTooLarge";
    case errc::solver_failure: return "SolverFailure";
    case errc::conditioning_event_empty: return "ConditioningEventEmpty";
    case errc::no_events: return "NoEvents";
    case errc::lcp_failure: return "LcpFailure";
    case errc::no_boundary_mass: return "NoBoundaryMass";
    case errc::analysis_failed: return "AnalysisFailed";
  }
  return "UnknownError";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  [[nodiscard]] errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void throw_error(errc code, const std::string& what) {
  throw error(code, what);
}

}  // namespace mcqn
