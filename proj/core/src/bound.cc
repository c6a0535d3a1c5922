#include "loft/bound.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/binomial.hpp>

#include "absl/strings/str_format.h"

namespace loft {
namespace {

using Binomial = boost::math::binomial_distribution<double>;

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void Add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double CdfAt(const Binomial& dist, std::uint64_t n, std::int64_t k) {
  if (k < 0) return 0.0;
  if (static_cast<std::uint64_t>(k) >= n) return 1.0;
  return boost::math::cdf(dist, static_cast<double>(k));
}

double UpperTail(const Binomial& dist, std::uint64_t n, std::uint64_t k) {
  if (k >= n) return 0.0;
  return boost::math::cdf(boost::math::complement(dist, static_cast<double>(k)));
}

}  // namespace

absl::Status ValidateBoundParams(const BoundParams& params) {
  if (params.flows == 0 || params.counters == 0 || params.monitors == 0 ||
      params.minor_per_second == 0 || params.minors_per_major == 0) {
    return absl::InvalidArgumentError("bound parameters must be positive");
  }
  if (absl::Status s = ValidateFlowSpec(params.spec); !s.ok()) return s;
  if (!(params.overuse_ratio > 1.0)) {
    return absl::InvalidArgumentError("overuse ratio must exceed 1");
  }
  return absl::OkStatus();
}

MinV WorstCaseV(double theta, double c_l, double c_b, double f_l, double f_b,
                double m) {
  MinV out;
  out.e_x = c_l >= c_b ? 0.0 : m;
  const double num = theta * out.e_x * (c_l - c_b) + c_b * f_l - c_l * f_b;
  out.v_b = num / (2.0 * c_l * (c_b - theta));
  out.v_l = num / (2.0 * c_b * (c_l - theta));
  return out;
}

PHat ComputePHat(double theta, double c_b, double c_l, double f_b, double f_l,
                 double m) {
  PHat out;
  const MinV v = WorstCaseV(theta, c_l, c_b, f_l, f_b, m);
  const double m2 = m * m;
  if (!(c_b - theta < 1.0) && !(v.v_b < 0.0)) {
    out.p_b = std::exp(-2.0 * (c_b - theta) * v.v_b * v.v_b / m2);
  }
  if (!(c_l - theta < 1.0) && !(v.v_l < 0.0)) {
    out.p_l = std::exp(-2.0 * (c_l - theta) * v.v_l * v.v_l / m2);
  }
  return out;
}

double LogBinomialPmf(std::uint64_t n, std::uint64_t k, double p) {
  if (k > n) return -std::numeric_limits<double>::infinity();
  if (p <= 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return k == n ? 0.0 : -std::numeric_limits<double>::infinity();
  const double pmf =
      boost::math::pdf(Binomial(static_cast<double>(n), p), static_cast<double>(k));
  if (pmf > 0.0) return std::log(pmf);
  // Underflow: fall back to the log-gamma form.
  const double dn = static_cast<double>(n), dk = static_cast<double>(k);
  return std::lgamma(dn + 1) - std::lgamma(dk + 1) - std::lgamma(dn - dk + 1) +
         dk * std::log(p) + (dn - dk) * std::log1p(-p);
}

double BinomialCdf(std::uint64_t n, std::uint64_t k, double p) {
  if (k >= n) return 1.0;
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return 0.0;
  return boost::math::cdf(Binomial(static_cast<double>(n), p),
                          static_cast<double>(k));
}

double BinomialLowerTailSum(std::uint64_t n, std::uint64_t k, double p) {
  if (k >= n) return 1.0;
  std::vector<double> logs;
  logs.reserve(k + 1);
  double hi = -std::numeric_limits<double>::infinity();
  for (std::uint64_t i = 0; i <= k; ++i) {
    logs.push_back(LogBinomialPmf(n, i, p));
    hi = std::max(hi, logs.back());
  }
  if (!std::isfinite(hi)) return 0.0;
  CompensatedSum s;
  for (double l : logs) s.Add(std::exp(l - hi));
  return std::min(1.0, std::exp(hi + std::log(s.value())));
}

absl::StatusOr<CardinalityGrid> MakeCardinalityGrid(std::uint64_t n, double p,
                                                    std::uint64_t theta,
                                                    std::size_t max_bins) {
  if (n == 0) return absl::InvalidArgumentError("empty cardinality range");
  const Binomial dist(static_cast<double>(n), p);
  const double mean = static_cast<double>(n) * p;
  const double sigma = std::sqrt(static_cast<double>(n) * p * (1.0 - p));
  double half = std::max(12.0 * sigma, 50.0);

  CardinalityGrid grid;
  const double p0 = std::exp(LogBinomialPmf(n, 0, p));
  while (true) {
    grid.lo = static_cast<std::uint64_t>(std::max(1.0, std::floor(mean - half)));
    grid.hi = static_cast<std::uint64_t>(
        std::min(static_cast<double>(n), std::ceil(mean + half)));
    const double below =
        std::max(0.0, CdfAt(dist, n, static_cast<std::int64_t>(grid.lo) - 1) - p0);
    grid.truncation_deficit = below + UpperTail(dist, n, grid.hi);
    if (grid.truncation_deficit <= kMaxTruncationDeficit) break;
    if (grid.lo == 1 && grid.hi == n) break;
    half *= 2.0;
  }
  if (grid.truncation_deficit > kMaxTruncationDeficit) {
    return absl::InternalError(absl::StrFormat(
        "binomial window misses %g of the mass", grid.truncation_deficit));
  }
  grid.excluded_mass = p0 + grid.truncation_deficit;

  // Log pmf over the window by recurrence from the mode.
  const std::uint64_t len = grid.hi - grid.lo + 1;
  std::vector<double> logpmf(len);
  const std::uint64_t mode = std::clamp<std::uint64_t>(
      static_cast<std::uint64_t>(std::floor((static_cast<double>(n) + 1) * p)),
      grid.lo, grid.hi);
  const double log_odds = std::log(p) - std::log1p(-p);
  const std::uint64_t m0 = mode - grid.lo;
  logpmf[m0] = LogBinomialPmf(n, mode, p);
  for (std::uint64_t i = m0; i + 1 < len; ++i) {
    const double k = static_cast<double>(grid.lo + i);
    logpmf[i + 1] =
        logpmf[i] + std::log((static_cast<double>(n) - k) / (k + 1.0)) + log_odds;
  }
  for (std::uint64_t i = m0; i > 0; --i) {
    const double k = static_cast<double>(grid.lo + i);
    logpmf[i - 1] =
        logpmf[i] - std::log((static_cast<double>(n) - k + 1.0) / k) - log_odds;
  }

  const std::uint64_t width =
      max_bins == 0 || len <= max_bins ? 1 : (len + max_bins - 1) / max_bins;
  const std::uint64_t split = theta + 1;
  CompensatedSum mass, moment;
  std::uint64_t start = grid.lo;
  auto flush = [&](std::uint64_t last) {
    CardinalityBin b;
    b.lo = start;
    b.hi = last;
    b.mass = mass.value();
    b.c = b.mass > 0.0 ? moment.value() / b.mass
                       : 0.5 * static_cast<double>(start + last);
    grid.bins.push_back(b);
    mass = CompensatedSum();
    moment = CompensatedSum();
  };
  for (std::uint64_t c = grid.lo; c <= grid.hi; ++c) {
    if (c > start && (c - start == width || c == split)) {
      flush(c - 1);
      start = c;
    }
    const double w = std::exp(logpmf[c - grid.lo]);
    mass.Add(w);
    moment.Add(w * static_cast<double>(c));
  }
  flush(grid.hi);
  return grid;
}

PWin PWinOnGrid(std::uint64_t theta, double f_l, double f_b, double m,
                const CardinalityGrid& grid) {
  const double th = static_cast<double>(theta);
  CompensatedSum lose;
  for (const CardinalityBin& bl : grid.bins) {
    for (const CardinalityBin& bb : grid.bins) {
      const PHat ph = ComputePHat(th, bb.c, bl.c, f_b, f_l, m);
      const double fail = ph.p_b + ph.p_l - ph.p_b * ph.p_l;
      lose.Add(bl.mass * bb.mass * fail);
    }
  }
  const double e = grid.excluded_mass;
  PWin out;
  out.complement = std::clamp(e * (2.0 - e) + lose.value(), 0.0, 1.0);
  out.p_win = 1.0 - out.complement;
  out.truncation_deficit = grid.truncation_deficit;
  return out;
}

absl::StatusOr<PWin> PWinLower(std::uint64_t theta, double f_l, double f_b,
                               const BoundParams& params, std::size_t max_bins) {
  if (absl::Status s = ValidateBoundParams(params); !s.ok()) return s;
  if (theta == 0) return absl::InvalidArgumentError("theta must be >= 1");
  absl::StatusOr<CardinalityGrid> grid = MakeCardinalityGrid(
      params.flows * theta, 1.0 / params.counters, theta, max_bins);
  if (!grid.ok()) return grid.status();
  return PWinOnGrid(theta, f_l, f_b, params.max_segment(), *grid);
}

double PMonFromComplement(std::uint64_t flows, std::uint32_t monitors,
                          double win_complement) {
  if (monitors >= flows + 1) return 1.0;
  if (win_complement <= 0.0) return 1.0;
  return std::clamp(BinomialCdf(flows, monitors - 1, win_complement), 0.0, 1.0);
}

absl::StatusOr<double> PMonLower(std::uint64_t theta, double f_l,
                                 const BoundParams& params,
                                 std::size_t max_bins) {
  const double f_b =
      params.spec.gamma_bytes_per_s * static_cast<double>(theta) /
          params.minor_per_second +
      params.spec.beta_bytes;
  absl::StatusOr<PWin> win = PWinLower(theta, f_l, f_b, params, max_bins);
  if (!win.ok()) return win.status();
  return PMonFromComplement(params.flows, params.monitors, win->complement);
}

absl::StatusOr<ResetSolution> SolveResetCycle(double target_prob,
                                              const BoundParams& params,
                                              const SolverOptions& options) {
  if (!(target_prob > 0.0 && target_prob < 1.0)) {
    return absl::InvalidArgumentError("target probability must be in (0, 1)");
  }
  if (absl::Status s = ValidateBoundParams(params); !s.ok()) return s;
  const std::uint64_t z = params.minors_per_major;
  ResetSolution sol;
  auto p_mon_at = [&](std::uint64_t i) -> absl::StatusOr<double> {
    const std::uint64_t theta = i * z;
    const double f_l = params.overuse_ratio * params.spec.gamma_bytes_per_s *
                       static_cast<double>(theta) / params.minor_per_second;
    ++sol.evaluations;
    return PMonLower(theta, f_l, params, options.max_bins);
  };
  auto not_monotone = [](std::uint64_t a, std::uint64_t b) {
    return absl::FailedPreconditionError(absl::StrFormat(
        "P_mon decreased between theta multiples %d and %d", a, b));
  };
  constexpr double kSlack = 1e-12;

  const std::uint64_t max_i = std::max<std::uint64_t>(1, options.max_theta / z);
  std::uint64_t lo_i = 0;
  double lo_p = 0.0;
  std::uint64_t hi_i = 1;
  double hi_p = 0.0;
  while (true) {
    absl::StatusOr<double> p = p_mon_at(hi_i);
    if (!p.ok()) return p.status();
    if (*p + kSlack < lo_p) return not_monotone(lo_i, hi_i);
    hi_p = *p;
    if (hi_p >= target_prob) break;
    if (hi_i >= max_i) {
      sol.achievable = false;
      sol.theta = hi_i * z;
      sol.t_reset_s = static_cast<double>(sol.theta) / params.minor_per_second;
      sol.p_mon = hi_p;
      return sol;
    }
    lo_i = hi_i;
    lo_p = hi_p;
    hi_i = std::min(max_i, hi_i * 2);
  }
  while (hi_i - lo_i > 1) {
    const std::uint64_t mid = lo_i + (hi_i - lo_i) / 2;
    absl::StatusOr<double> p = p_mon_at(mid);
    if (!p.ok()) return p.status();
    if (*p + kSlack < lo_p || *p > hi_p + kSlack) return not_monotone(lo_i, hi_i);
    if (*p >= target_prob) {
      hi_i = mid;
      hi_p = *p;
    } else {
      lo_i = mid;
      lo_p = *p;
    }
  }
  sol.achievable = true;
  sol.theta = hi_i * z;
  sol.t_reset_s = static_cast<double>(sol.theta) / params.minor_per_second;
  sol.p_mon = hi_p;
  return sol;
}

}  // namespace loft
