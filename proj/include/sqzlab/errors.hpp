#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sqzlab {

// Resonator has no net round-trip decay (g >= 1).
struct invalid_geometry_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Pump at or above threshold where the below-threshold model diverges.
struct above_threshold_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A solve was asked for with more (or fewer) unknowns than constraints.
struct under_determined_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct fit_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// J'J is singular at the optimum; `combination` lists the parameter names
// spanning the unidentifiable direction.
struct rank_deficiency_error : fit_error {
  rank_deficiency_error(const std::string& what, std::vector<std::string> combo)
      : fit_error(what), combination(std::move(combo)) {}
  std::vector<std::string> combination;
};

// Residual function returned a non-finite value; `point_index` is the
// offending residual component.
struct evaluation_error : fit_error {
  evaluation_error(const std::string& what, std::size_t point)
      : fit_error(what), point_index(point) {}
  std::size_t point_index;
};

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct csv_error : std::runtime_error {
  csv_error(const std::string& what, std::size_t line, std::size_t column)
      : std::runtime_error(what), line(line), column(column) {}
  std::size_t line;    // 1-based
  std::size_t column;  // 1-based field index
};

}  // namespace sqzlab
