#include "rydchain/detection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rydchain/errors.hpp"
#include "rydchain/obe.hpp"
#include "rydchain/thermal.hpp"

namespace rydchain {

std::string to_string(EpsilonModel::Backend backend) {
  switch (backend) {
    case EpsilonModel::Backend::table: return "table";
    case EpsilonModel::Backend::polynomial: return "polynomial";
    case EpsilonModel::Backend::recapture_mc: return "recapture_mc";
  }
  return "unknown";
}

EpsilonModel EpsilonModel::constant(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw DataError("epsilon must lie in [0, 1]");
  return polynomial({epsilon}, 0.0, std::numeric_limits<double>::infinity());
}

EpsilonModel EpsilonModel::table(std::vector<double> times, std::vector<double> epsilons) {
  if (times.size() != epsilons.size() || times.empty())
    throw DataError("epsilon table needs matching, non-empty time and value columns");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) throw DataError("epsilon table times must be strictly increasing");
  }
  for (double e : epsilons) {
    if (!(e >= 0.0 && e <= 1.0)) throw DataError("epsilon table values must lie in [0, 1]");
  }
  EpsilonModel m;
  m.backend_ = Backend::table;
  m.t_min_ = times.front();
  m.t_max_ = times.back();
  m.times_ = std::move(times);
  m.values_ = std::move(epsilons);
  return m;
}

EpsilonModel EpsilonModel::polynomial(std::vector<double> coefficients, double t_min, double t_max) {
  if (coefficients.empty()) throw DataError("polynomial needs at least one coefficient");
  EpsilonModel m;
  m.backend_ = Backend::polynomial;
  m.coefficients_ = std::move(coefficients);
  m.t_min_ = t_min;
  m.t_max_ = t_max;
  return m;
}

EpsilonModel EpsilonModel::recapture_mc(const PhysicalParams& params, double trap_depth, double floor,
                                        std::size_t n_mc, std::uint64_t seed, double t_max) {
  EpsilonModel m;
  m.backend_ = Backend::recapture_mc;
  m.params_ = params;
  m.trap_depth_ = trap_depth;
  m.floor_ = floor;
  m.n_mc_ = n_mc;
  m.seed_ = seed;
  m.t_min_ = 0.0;
  m.t_max_ = t_max;
  return m;
}

EpsilonModel EpsilonModel::load_table(const std::filesystem::path& path, TableQuantity quantity) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open calibration table " + path.string());
  std::vector<double> times, values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double t = 0.0, v = 0.0;
    if (!(fields >> t >> v))
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected two numeric columns");
    if (quantity == TableQuantity::p111) {
      if (!(v > 0.0 && v <= 1.0))
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": P_111 must lie in (0, 1]");
      v = 1.0 - std::cbrt(v);
    }
    times.push_back(t);
    values.push_back(v);
  }
  return table(std::move(times), std::move(values));
}

double EpsilonModel::operator()(double t) const {
  double e = 0.0;
  switch (backend_) {
    case Backend::table: {
      if (t <= times_.front()) return values_.front();
      if (t >= times_.back()) return values_.back();
      const auto hi = static_cast<std::size_t>(std::upper_bound(times_.begin(), times_.end(), t) - times_.begin());
      const std::size_t lo = hi - 1;
      const double w = (t - times_[lo]) / (times_[hi] - times_[lo]);
      e = values_[lo] + w * (values_[hi] - values_[lo]);
      break;
    }
    case Backend::polynomial: {
      for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) e = e * t + *it;
      break;
    }
    case Backend::recapture_mc:
      e = recapture_epsilon(params_, trap_depth_, std::max(t, 0.0), n_mc_, floor_, seed_);
      break;
  }
  return std::clamp(e, 0.0, 1.0);
}

std::vector<std::string> EpsilonModel::diagnostics() const {
  std::vector<std::string> out;
  if (backend_ == Backend::table) {
    for (std::size_t k = 1; k < values_.size(); ++k) {
      if (values_[k] < values_[k - 1]) {
        std::ostringstream msg;
        msg << "epsilon table decreases between t = " << times_[k - 1] << " and t = " << times_[k] << " us";
        out.push_back(msg.str());
      }
    }
  }
  return out;
}

namespace {

void require_normalized(double total) {
  if (!(std::abs(total - 1.0) <= 1e-9)) {
    std::ostringstream msg;
    msg << "true-state distribution must sum to 1 (got " << total << ")";
    throw ContractError(msg.str());
  }
}

void require_probability(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ContractError("epsilon must lie in [0, 1]");
}

}  // namespace

RecaptureDistribution forward_detection(const ReadoutPopulations& truth, double epsilon) {
  require_normalized(truth.total());
  require_probability(epsilon);
  const std::size_t n = truth.n_atoms();
  std::vector<double> p = truth.values();

  // Apply the single-atom channel on each digit in turn. Digit 1 (ground)
  // stays 1 with 1 - ε and flips to 0 with ε; digit 0 stays 0.
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t stride = ipow(2, n - 1 - k);
    for (std::size_t index = 0; index < p.size(); ++index) {
      if ((index / stride) % 2 == 1) {
        const double moved = epsilon * p[index];
        p[index] -= moved;
        p[index - stride] += moved;
      }
    }
  }
  return RecaptureDistribution(n, std::move(p));
}

RecaptureDistribution forward_detection(const LevelPopulations& truth, double epsilon) {
  require_normalized(truth.total());
  return forward_detection(project_to_readout(truth, ReadoutConvention::simulated_deexcitation), epsilon);
}

ReadoutPopulations invert_detection(const RecaptureDistribution& observed, double epsilon) {
  require_probability(epsilon);
  if (epsilon >= 1.0) throw ContractError("invert_detection: the channel is singular at epsilon = 1");
  // Rows: observed digit (0 lost, 1 seen); columns: true digit (0 Rydberg, 1 ground).
  Eigen::Matrix2d single;
  single << 1.0, epsilon, 0.0, 1.0 - epsilon;
  Eigen::MatrixXd channel = Eigen::MatrixXd::Ones(1, 1);
  for (std::size_t k = 0; k < observed.n_atoms(); ++k) {
    Eigen::MatrixXd next(channel.rows() * 2, channel.cols() * 2);
    for (Eigen::Index r = 0; r < channel.rows(); ++r)
      for (Eigen::Index c = 0; c < channel.cols(); ++c) next.block(2 * r, 2 * c, 2, 2) = channel(r, c) * single;
    channel = std::move(next);
  }
  const Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(observed.values().data(),
                                                             static_cast<Eigen::Index>(observed.size()));
  const Eigen::VectorXd x = channel.colPivHouseholderQr().solve(p);
  return ReadoutPopulations(observed.n_atoms(), std::vector<double>(x.data(), x.data() + x.size()));
}

std::vector<double> partition_sums(const RecaptureDistribution& observed) {
  const std::size_t n = observed.n_atoms();
  std::vector<double> out(n + 1, 0.0);
  for (std::size_t index = 0; index < observed.size(); ++index) {
    std::size_t ones = 0;
    for (std::size_t k = 0; k < n; ++k) ones += observed.digit(index, k);
    out[ones] += observed[index];
  }
  return out;
}

std::vector<double> predicted_partitions(double epsilon, std::size_t n_atoms) {
  require_probability(epsilon);
  std::vector<double> out(n_atoms + 1);
  double binom = 1.0;
  for (std::size_t k = 0; k <= n_atoms; ++k) {
    out[k] = binom * std::pow(1.0 - epsilon, static_cast<double>(k)) *
             std::pow(epsilon, static_cast<double>(n_atoms - k));
    binom = binom * static_cast<double>(n_atoms - k) / static_cast<double>(k + 1);
  }
  return out;
}

EpsilonFit fit_epsilon(std::span<const double> times, std::span<const double> p111, std::size_t degree) {
  if (times.size() != p111.size()) throw DataError("fit_epsilon: time and P_111 columns differ in length");
  if (times.size() < degree + 1) throw DataError("fit_epsilon: need at least degree + 1 points");
  const auto rows = static_cast<Eigen::Index>(times.size());
  const auto cols = static_cast<Eigen::Index>(degree + 1);
  Eigen::MatrixXd design(rows, cols);
  Eigen::VectorXd target(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double p = p111[static_cast<std::size_t>(r)];
    if (!(p > 0.0 && p <= 1.0)) throw DataError("fit_epsilon: P_111 values must lie in (0, 1]");
    target(r) = 1.0 - std::cbrt(p);
    double power = 1.0;
    for (Eigen::Index c = 0; c < cols; ++c) {
      design(r, c) = power;
      power *= times[static_cast<std::size_t>(r)];
    }
  }
  const Eigen::VectorXd coeffs = design.colPivHouseholderQr().solve(target);
  const Eigen::VectorXd residual = design * coeffs - target;

  const auto [t_lo, t_hi] = std::minmax_element(times.begin(), times.end());
  EpsilonFit fit{EpsilonModel::polynomial(std::vector<double>(coeffs.data(), coeffs.data() + coeffs.size()), *t_lo, *t_hi),
                 std::sqrt(residual.squaredNorm() / static_cast<double>(rows))};
  return fit;
}

ScaledExcitation scale_excitation_large_n(const Eigen::MatrixXd& p_excited, std::span<const double> times,
                                          const EpsilonModel& epsilon, std::size_t n_atoms) {
  if (n_atoms == 0) throw ContractError("scale_excitation_large_n: n_atoms must be at least 1");
  if (static_cast<std::size_t>(p_excited.cols()) != times.size())
    throw ContractError("scale_excitation_large_n: one time per column required");
  ScaledExcitation out{p_excited, {}};
  for (std::size_t c = 0; c < times.size(); ++c) {
    if (!epsilon.in_range(times[c])) {
      std::ostringstream msg;
      msg << "t = " << times[c] << " us lies outside the epsilon model range [" << epsilon.t_min() << ", "
          << epsilon.t_max() << "]; extrapolating";
      out.warnings.push_back(msg.str());
    }
    const double factor = std::pow(1.0 - epsilon(times[c]), static_cast<double>(n_atoms - 1));
    out.values.col(static_cast<Eigen::Index>(c)) *= factor;
  }
  return out;
}

}  // namespace rydchain
