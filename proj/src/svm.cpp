#include "stereofake/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "text_util.hpp"

namespace stereofake {
namespace {

constexpr double kMinStd = 1e-12;
constexpr double kTau = 1e-12;
// Row computations are only worth threading on large training sets.
constexpr std::ptrdiff_t kParallelRowThreshold = 4096;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Row-major n x d standardized design matrix.
struct Design {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> data;
  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * d, d};
  }
};

void kernel_row(const Design& x, std::size_t i, std::vector<double>& out) {
  const auto n = static_cast<std::ptrdiff_t>(x.n);
  const auto xi = x.row(i);
#pragma omp parallel for if (n >= kParallelRowThreshold) schedule(static)
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    out[static_cast<std::size_t>(t)] = dot(xi, x.row(static_cast<std::size_t>(t)));
  }
}

// Reads the next line from text starting at pos; false at end of input.
bool next_line(std::string_view text, std::size_t& pos, std::string_view& line) {
  if (pos >= text.size()) return false;
  const std::size_t nl = text.find('\n', pos);
  const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
  line = text.substr(pos, end - pos);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  pos = end == text.size() ? end : end + 1;
  return true;
}

std::string_view expect_key(std::string_view text, std::size_t& pos,
                            std::string_view key) {
  std::string_view line;
  if (!next_line(text, pos, line)) {
    throw ParseError("model: unexpected end of input, expected '" +
                     std::string(key) + "'");
  }
  const std::size_t sp = line.find(' ');
  const std::string_view got = line.substr(0, sp);
  if (got != key) {
    throw ParseError("model: expected '" + std::string(key) + "', found '" +
                     std::string(got) + "'");
  }
  return sp == std::string_view::npos ? std::string_view{} : line.substr(sp + 1);
}

std::vector<double> parse_vector(std::string_view value, std::string_view key) {
  std::vector<double> out;
  for (auto tok : detail::split(value, ' ')) {
    if (tok.empty()) continue;
    out.push_back(detail::parse_double(tok, key));
  }
  return out;
}

void append_vector(std::string& out, std::string_view key,
                   std::span<const double> v) {
  out += key;
  for (double x : v) {
    out += ' ';
    out += detail::format_double(x);
  }
  out += '\n';
}

}  // namespace

void TrainingSet::validate() const {
  if (features.size() != labels.size()) {
    throw InvalidArgument("training set: feature and label counts differ");
  }
  if (labels.empty()) throw InvalidArgument("training set is empty");
  const std::size_t d = dimension();
  if (d == 0) throw InvalidArgument("training set: zero-dimensional features");
  bool has_pos = false;
  bool has_neg = false;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (features[i].size() != d) {
      throw InvalidArgument("training set: inconsistent feature dimensions");
    }
    for (double v : features[i]) {
      if (!std::isfinite(v)) {
        throw InvalidArgument("training set: non-finite feature value");
      }
    }
    if (labels[i] == kRealLabel) {
      has_pos = true;
    } else if (labels[i] == kFakeLabel) {
      has_neg = true;
    } else {
      throw InvalidArgument("training set: labels must be +1 or -1");
    }
  }
  if (!has_pos || !has_neg) {
    throw InvalidArgument("training set must contain both classes");
  }
}

Scaler fit_scaler(const TrainingSet& ts) {
  if (ts.features.empty()) throw InvalidArgument("fit_scaler: empty set");
  const std::size_t d = ts.dimension();
  const auto n = static_cast<double>(ts.features.size());
  Scaler s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (const auto& x : ts.features) {
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += x[j];
  }
  for (double& m : s.mean) m /= n;
  for (const auto& x : ts.features) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = x[j] - s.mean[j];
      s.std[j] += c * c;
    }
  }
  for (double& v : s.std) {
    v = std::sqrt(v / n);
    if (v < kMinStd) v = 1.0;
  }
  return s;
}

void SvmModel::validate() const {
  const std::size_t d = weights.size();
  if (d == 0) throw InvalidArgument("model has no weights");
  if (scaler_mean.size() != d || scaler_std.size() != d) {
    throw InvalidArgument("model: scaler dimension differs from weights");
  }
  for (double s : scaler_std) {
    if (!(s > 0.0)) throw InvalidArgument("model: scaler_std must be positive");
  }
  if (!(penalty > 0.0)) throw InvalidArgument("model: C must be positive");
}

TrainResult train_svm(const TrainingSet& ts, double penalty,
                      const SolverOptions& options) {
  ts.validate();
  if (!(penalty > 0.0) || !std::isfinite(penalty)) {
    throw InvalidArgument("penalty C must be positive");
  }

  const Scaler scaler = fit_scaler(ts);
  Design x;
  x.n = ts.size();
  x.d = ts.dimension();
  x.data.resize(x.n * x.d);
  for (std::size_t i = 0; i < x.n; ++i) {
    for (std::size_t j = 0; j < x.d; ++j) {
      x.data[i * x.d + j] =
          (ts.features[i][j] - scaler.mean[j]) / scaler.std[j];
    }
  }

  const std::size_t n = x.n;
  const double c = penalty;
  const std::vector<int>& y = ts.labels;
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // (Q alpha)_t - 1
  std::vector<double> diag(n);
  for (std::size_t t = 0; t < n; ++t) diag[t] = dot(x.row(t), x.row(t));

  const auto in_up = [&](std::size_t t) {
    return (y[t] == +1 && alpha[t] < c) || (y[t] == -1 && alpha[t] > 0.0);
  };
  const auto in_low = [&](std::size_t t) {
    return (y[t] == +1 && alpha[t] > 0.0) || (y[t] == -1 && alpha[t] < c);
  };

  std::vector<double> row_i(n);
  std::vector<double> row_j(n);
  const std::size_t max_iter =
      options.max_sweeps * std::max<std::size_t>(n, 1);
  std::size_t iter = 0;
  double violation = std::numeric_limits<double>::infinity();

  while (true) {
    // First index: maximal violator in I_up.
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (in_up(t) && -y[t] * grad[t] > gmax) {
        gmax = -y[t] * grad[t];
        i = t;
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    std::size_t j = n;
    if (i < n) {
      kernel_row(x, i, row_i);
      double best_obj = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < n; ++t) {
        if (!in_low(t)) continue;
        const double yg = y[t] * grad[t];
        gmax2 = std::max(gmax2, yg);
        const double b = gmax + yg;
        if (b > 0.0) {
          double quad = diag[i] + diag[t] - 2.0 * row_i[t];
          if (quad <= 0.0) quad = kTau;
          const double obj = -(b * b) / quad;
          if (obj < best_obj) {
            best_obj = obj;
            j = t;
          }
        }
      }
    }
    violation = gmax + gmax2;
    if (i == n || j == n || violation < options.tolerance) break;
    if (iter >= max_iter) {
      throw ConvergenceError("SVM did not converge after " +
                             std::to_string(iter) +
                             " iterations (max KKT violation " +
                             std::to_string(violation) + ")");
    }
    ++iter;

    kernel_row(x, j, row_j);
    const double old_ai = alpha[i];
    const double old_aj = alpha[j];
    const double qij = y[i] * y[j] * row_i[j];

    // Two-variable subproblem with box clipping.
    if (y[i] != y[j]) {
      double quad = diag[i] + diag[j] + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = diag[i] + diag[j] - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }

    const double dai = alpha[i] - old_ai;
    const double daj = alpha[j] - old_aj;
    const auto nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for if (nn >= kParallelRowThreshold) schedule(static)
    for (std::ptrdiff_t tt = 0; tt < nn; ++tt) {
      const auto t = static_cast<std::size_t>(tt);
      grad[t] += y[t] * (y[i] * row_i[t] * dai + y[j] * row_j[t] * daj);
    }
  }

  // Bias from free vectors, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= c) {
      if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (y[t] == +1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count)
                                    : (ub + lb) / 2.0;

  TrainResult result;
  SvmModel& m = result.model;
  m.weights.assign(x.d, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] == 0.0) continue;
    const auto row = x.row(t);
    for (std::size_t k = 0; k < x.d; ++k) m.weights[k] += alpha[t] * y[t] * row[k];
  }
  m.bias = -rho;
  m.scaler_mean = scaler.mean;
  m.scaler_std = scaler.std;
  m.penalty = penalty;
  result.alphas = std::move(alpha);
  result.iterations = iter;
  result.max_violation = violation;
  return result;
}

SvmModel train(const TrainingSet& ts, double penalty) {
  return train_svm(ts, penalty).model;
}

std::vector<double> standardize(const SvmModel& model,
                                std::span<const double> x) {
  if (x.size() != model.dimension()) {
    throw InvalidArgument("feature dimension " + std::to_string(x.size()) +
                          " does not match model dimension " +
                          std::to_string(model.dimension()));
  }
  std::vector<double> z(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    z[j] = (x[j] - model.scaler_mean[j]) / model.scaler_std[j];
  }
  return z;
}

Decision decide(const SvmModel& model, std::span<const double> x) {
  const std::vector<double> z = standardize(model, x);
  Decision d;
  d.score = dot(model.weights, z) + model.bias;
  d.label = d.score < 0.0 ? kFakeLabel : kRealLabel;
  return d;
}

std::string serialize_model(const SvmModel& model) {
  model.validate();
  std::string out = "stereofake-svm\n";
  out += "schema_version " + std::to_string(kModelSchemaVersion) + "\n";
  out += "dimension " + std::to_string(model.dimension()) + "\n";
  out += "C " + detail::format_double(model.penalty) + "\n";
  out += "faked_side ";
  out += model.faked_side ? to_string(*model.faked_side) : "none";
  out += "\n";
  out += "corpus_id " + model.corpus_id + "\n";
  out += "bias " + detail::format_double(model.bias) + "\n";
  append_vector(out, "weights", model.weights);
  append_vector(out, "scaler_mean", model.scaler_mean);
  append_vector(out, "scaler_std", model.scaler_std);
  out += "end\n";
  return out;
}

SvmModel parse_model(std::string_view text, std::size_t& pos) {
  std::string_view line;
  if (!next_line(text, pos, line) || line != "stereofake-svm") {
    throw ParseError("model: missing 'stereofake-svm' header");
  }
  const int version = detail::parse_int<int>(
      expect_key(text, pos, "schema_version"), "schema_version");
  if (version != kModelSchemaVersion) {
    throw ParseError("model: schema version " + std::to_string(version) +
                     " is not supported (expected " +
                     std::to_string(kModelSchemaVersion) + ")");
  }
  const auto dim = detail::parse_int<std::size_t>(
      expect_key(text, pos, "dimension"), "dimension");

  SvmModel m;
  m.penalty = detail::parse_double(expect_key(text, pos, "C"), "C");
  const std::string_view side = expect_key(text, pos, "faked_side");
  if (side != "none") {
    try {
      m.faked_side = parse_faked_side(side);
    } catch (const InvalidArgument& e) {
      throw ParseError(std::string("model: ") + e.what());
    }
  }
  m.corpus_id = std::string(expect_key(text, pos, "corpus_id"));
  m.bias = detail::parse_double(expect_key(text, pos, "bias"), "bias");
  m.weights = parse_vector(expect_key(text, pos, "weights"), "weights");
  m.scaler_mean =
      parse_vector(expect_key(text, pos, "scaler_mean"), "scaler_mean");
  m.scaler_std = parse_vector(expect_key(text, pos, "scaler_std"), "scaler_std");
  if (!next_line(text, pos, line) || line != "end") {
    throw ParseError("model: missing 'end' line");
  }
  if (m.weights.size() != dim || m.scaler_mean.size() != dim ||
      m.scaler_std.size() != dim) {
    throw ParseError("model: declared dimension " + std::to_string(dim) +
                     " does not match vector lengths");
  }
  try {
    m.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what());
  }
  return m;
}

SvmModel parse_model(std::string_view text) {
  std::size_t pos = 0;
  return parse_model(text, pos);
}

void save_model(const SvmModel& model, const std::filesystem::path& path) {
  const std::string text = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

SvmModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  return parse_model(text);
}

}  // namespace stereofake
