#pragma once

#include <span>
#include <string>

#include "dlm/linalg.hpp"

namespace dlm {

enum class Direction { comprehension, production };
enum class Provenance { endstate, frequency_informed, incremental };

std::string to_string(Direction d);
std::string to_string(Provenance p);
Direction parse_direction(const std::string& text);

/// Default ridge for the closed-form estimators, relative to the mean
/// diagonal of the (weighted) normal matrix.
inline constexpr double kDefaultRelativeRidge = 1e-8;
/// Default Widrow-Hoff rate for trial-to-trial simulation.
inline constexpr double kDefaultWidrowHoffRate = 0.001;

struct LinearMapping {
  Matrix weights;  ///< input_dim x output_dim
  Direction direction = Direction::comprehension;
  Provenance provenance = Provenance::endstate;

  Eigen::Index input_dim() const { return weights.rows(); }
  Eigen::Index output_dim() const { return weights.cols(); }
};

/// Unweighted least squares mapping (endstate of learning).
LinearMapping estimate_endstate(const Matrix& input, const Matrix& target,
                                double relative_ridge = kDefaultRelativeRidge,
                                Direction direction = Direction::comprehension);

/// Least squares with each row weighted by its token frequency.
LinearMapping estimate_frequency_informed(const Matrix& input, const Matrix& target,
                                          std::span<const double> frequencies,
                                          double relative_ridge = kDefaultRelativeRidge,
                                          Direction direction = Direction::comprehension);

/// One delta-rule update W <- W + eta * c^T (t - c W), in place.
void widrow_hoff_step(LinearMapping& map, const RowVector& cue_row, const RowVector& target_row,
                      double eta);

Matrix predict(const LinearMapping& map, const Matrix& input);
RowVector predict(const LinearMapping& map, const RowVector& input);

/// "DLML" container, version 1: u8 direction, u8 provenance, then the
/// weight matrix (u64 rows, u64 cols, row-major little-endian doubles).
void save_mapping(const std::string& path, const LinearMapping& map);
LinearMapping load_mapping(const std::string& path);

}  // namespace dlm
