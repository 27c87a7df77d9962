#include "dlm/linear_map.hpp"

#include <fstream>

#include "dlm/io.hpp"

namespace dlm {

std::string to_string(Direction d) {
  return d == Direction::comprehension ? "comprehension" : "production";
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::endstate:
      return "endstate";
    case Provenance::frequency_informed:
      return "frequency_informed";
    case Provenance::incremental:
      return "incremental";
  }
  return "unknown";
}

Direction parse_direction(const std::string& text) {
  if (text == "comprehension") return Direction::comprehension;
  if (text == "production") return Direction::production;
  throw InputError("unknown direction '" + text + "'");
}

LinearMapping estimate_endstate(const Matrix& input, const Matrix& target, double relative_ridge,
                                Direction direction) {
  LeastSquaresConfig<double> cfg;
  cfg.ridge_lambda = relative_ridge > 0 ? dlm::relative_ridge(input, relative_ridge) : 0.0;
  return {solve_least_squares(input, target, cfg), direction, Provenance::endstate};
}

LinearMapping estimate_frequency_informed(const Matrix& input, const Matrix& target,
                                          std::span<const double> frequencies,
                                          double relative_ridge, Direction direction) {
  if (static_cast<Eigen::Index>(frequencies.size()) != input.rows()) {
    throw ShapeError("frequency-informed estimate: " + std::to_string(frequencies.size()) +
                     " frequencies for " + std::to_string(input.rows()) + " rows");
  }
  Vector w = Eigen::Map<const Vector>(frequencies.data(), static_cast<Eigen::Index>(frequencies.size()));
  if (!(w.array() > 0).any()) {
    throw InputError("frequency-informed estimate: all frequencies are zero");
  }
  LeastSquaresConfig<double> cfg;
  cfg.weights = w;
  cfg.ridge_lambda = relative_ridge > 0 ? dlm::relative_ridge(input, relative_ridge, cfg.weights) : 0.0;
  return {solve_least_squares(input, target, cfg), direction, Provenance::frequency_informed};
}

void widrow_hoff_step(LinearMapping& map, const RowVector& cue_row, const RowVector& target_row,
                      double eta) {
  if (cue_row.size() != map.input_dim() || target_row.size() != map.output_dim()) {
    throw ShapeError("widrow_hoff_step: cue " + std::to_string(cue_row.size()) + ", target " +
                     std::to_string(target_row.size()) + " against weights " +
                     shape_string(map.input_dim(), map.output_dim()));
  }
  if (eta == 0) return;
  RowVector error = target_row - cue_row * map.weights;
  // Only rows of W under active cues move.
  for (Eigen::Index i = 0; i < cue_row.size(); ++i) {
    if (cue_row(i) != 0) map.weights.row(i) += (eta * cue_row(i)) * error;
  }
  map.provenance = Provenance::incremental;
}

Matrix predict(const LinearMapping& map, const Matrix& input) { return matmul(input, map.weights); }

RowVector predict(const LinearMapping& map, const RowVector& input) {
  if (input.size() != map.input_dim()) {
    throw ShapeError("predict: input of length " + std::to_string(input.size()) +
                     " for weights " + shape_string(map.input_dim(), map.output_dim()));
  }
  return input * map.weights;
}

void save_mapping(const std::string& path, const LinearMapping& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  io::BinaryWriter w(out);
  w.magic("DLML", 1);
  w.u8(static_cast<std::uint8_t>(map.direction));
  w.u8(static_cast<std::uint8_t>(map.provenance));
  w.matrix(map.weights);
}

LinearMapping load_mapping(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  io::BinaryReader r(in, path);
  if (auto v = r.magic("DLML"); v != 1) {
    throw ParseError(path + ": unsupported mapping version " + std::to_string(v));
  }
  LinearMapping map;
  auto dir = r.u8();
  auto prov = r.u8();
  if (dir > 1 || prov > 2) throw ParseError(path + ": bad mapping metadata");
  map.direction = static_cast<Direction>(dir);
  map.provenance = static_cast<Provenance>(prov);
  map.weights = r.matrix();
  return map;
}

}  // namespace dlm
