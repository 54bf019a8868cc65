#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stereofake/features.hpp"
#include "stereofake/forgery.hpp"

namespace stereofake {

inline constexpr double kDefaultPenalty = 0.4;
inline constexpr int kRealLabel = +1;
inline constexpr int kFakeLabel = -1;

// Labelled training vectors; labels are +1 (real) or -1 (fake).
struct TrainingSet {
  std::vector<std::vector<double>> features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t dimension() const {
    return features.empty() ? 0 : features.front().size();
  }
  void add(std::vector<double> x, int label) {
    features.push_back(std::move(x));
    labels.push_back(label);
  }
  // Throws InvalidArgument on count/dimension mismatch, non-finite values,
  // labels other than +-1, or a missing class.
  void validate() const;
};

struct Scaler {
  std::vector<double> mean;
  std::vector<double> std;  // population std; near-zero entries set to 1
};

Scaler fit_scaler(const TrainingSet& ts);

// Linear decision function over z-scored features:
// score(x) = <weights, (x - scaler_mean) / scaler_std> + bias.
struct SvmModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> scaler_mean;
  std::vector<double> scaler_std;
  double penalty = kDefaultPenalty;
  std::string corpus_id;
  std::optional<FakedSide> faked_side;

  std::size_t dimension() const { return weights.size(); }
  void validate() const;

  friend bool operator==(const SvmModel&, const SvmModel&) = default;
};

struct SolverOptions {
  double tolerance = 1e-4;        // on the maximal KKT violation
  std::size_t max_sweeps = 10000;  // one sweep = n pair updates
};

struct TrainResult {
  SvmModel model;
  std::vector<double> alphas;  // dual variables, in training-set order
  std::size_t iterations = 0;
  double max_violation = 0.0;
};

// Soft-margin linear SVM via SMO over the dual
//   min 1/2 a'Qa - e'a   s.t.  0 <= a_i <= C,  y'a = 0
// with Q_ij = y_i y_j <x_i, x_j> on standardized features. Pair selection
// uses second-order working-set selection; ties resolve to the lowest index.
// Throws ConvergenceError if the iteration cap is reached.
TrainResult train_svm(const TrainingSet& ts, double penalty,
                      const SolverOptions& options = {});
SvmModel train(const TrainingSet& ts, double penalty = kDefaultPenalty);

struct Decision {
  double score = 0.0;
  int label = kRealLabel;  // sign(score); a zero score counts as real
};

std::vector<double> standardize(const SvmModel& model,
                                std::span<const double> x);
Decision decide(const SvmModel& model, std::span<const double> x);

inline constexpr int kModelSchemaVersion = 1;

// Text form: a "stereofake-svm" line, "key value" lines, then "end".
std::string serialize_model(const SvmModel& model);
SvmModel parse_model(std::string_view text);
// Parses one embedded model document starting at `pos`, advancing it past the
// terminating "end" line.
SvmModel parse_model(std::string_view text, std::size_t& pos);
void save_model(const SvmModel& model, const std::filesystem::path& path);
SvmModel load_model(const std::filesystem::path& path);

}  // namespace stereofake
