#ifndef LOFT_BOUND_H_
#define LOFT_BOUND_H_

#include <cstdint>
#include <vector>

#include "absl/status/statusor.h"
#include "loft/types.h"

namespace loft {

// Parameters of the detection-probability analysis.
struct BoundParams {
  std::uint64_t flows = 400000;       // N
  std::uint32_t counters = 16384;     // W
  std::uint32_t monitors = 64;        // W_fm
  std::uint32_t minor_per_second = 64;  // omega
  std::uint32_t minors_per_major = 64;  // Z, granularity of the theta search
  FlowSpec spec{125000.0, 1500.0};
  double overuse_ratio = 2.0;  // l

  // Largest segment one flow can leave in one counter: gamma / omega + beta.
  double max_segment() const {
    return spec.gamma_bytes_per_s / minor_per_second + spec.beta_bytes;
  }
};

absl::Status ValidateBoundParams(const BoundParams& params);

struct MinV {
  double v_b = 0.0;
  double v_l = 0.0;
  double e_x = 0.0;  // minimizing E[X]
};

// Minimizes v_b and v_l over E[X] in [0, M]. Both share the numerator
// theta * E[X] * (c_l - c_b) + c_b * F_l - c_l * F_b, so one endpoint
// minimizes both.
MinV WorstCaseV(double theta, double c_l, double c_b, double f_l, double f_b,
                double m);

struct PHat {
  double p_b = 1.0;
  double p_l = 1.0;
};

PHat ComputePHat(double theta, double c_b, double c_l, double f_b, double f_l,
                 double m);

// log P(Bin(n, p) = k).
double LogBinomialPmf(std::uint64_t n, std::uint64_t k, double p);

// P(Bin(n, p) <= k) through the regularized incomplete beta function.
double BinomialCdf(std::uint64_t n, std::uint64_t k, double p);

// P(Bin(n, p) <= k) as a direct log-space sum of k + 1 terms.
double BinomialLowerTailSum(std::uint64_t n, std::uint64_t k, double p);

struct CardinalityBin {
  double c = 0.0;     // mass-weighted mean cardinality of the bin
  double mass = 0.0;  // total pmf mass of the bin
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;  // inclusive
};

struct CardinalityGrid {
  std::vector<CardinalityBin> bins;
  double excluded_mass = 0.0;       // mass outside the summed range
  double truncation_deficit = 0.0;  // excluded mass apart from c = 0
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
};

inline constexpr double kMaxTruncationDeficit = 1e-9;
inline constexpr std::size_t kDefaultMaxBins = 1024;

// Binomial(n, 1/W) cardinalities over mean +- max(12 sigma, 50), restricted
// to c >= 1, merged into at most `max_bins` bins. Bins never straddle
// c = theta + 1, where the bound switches branch. Pass max_bins = 0 for one
// bin per integer.
absl::StatusOr<CardinalityGrid> MakeCardinalityGrid(std::uint64_t n, double p,
                                                    std::uint64_t theta,
                                                    std::size_t max_bins);

struct PWin {
  double p_win = 0.0;       // lower bound on P(U_l > every U_b in the pair)
  double complement = 1.0;  // 1 - p_win, computed directly
  double truncation_deficit = 0.0;
};

PWin PWinOnGrid(std::uint64_t theta, double f_l, double f_b, double m,
                const CardinalityGrid& grid);

absl::StatusOr<PWin> PWinLower(std::uint64_t theta, double f_l, double f_b,
                               const BoundParams& params,
                               std::size_t max_bins = kDefaultMaxBins);

// P(Bin(N, 1 - p_win) <= W_fm - 1) for the overuse flow against the worst
// case benign flow (F_b = gamma * theta / omega + beta).
absl::StatusOr<double> PMonLower(std::uint64_t theta, double f_l,
                                 const BoundParams& params,
                                 std::size_t max_bins = kDefaultMaxBins);

// Same with the complement of P_win given directly.
double PMonFromComplement(std::uint64_t flows, std::uint32_t monitors,
                          double win_complement);

struct ResetSolution {
  bool achievable = false;
  std::uint64_t theta = 0;  // minor cycles
  double t_reset_s = 0.0;
  double p_mon = 0.0;
  int evaluations = 0;
};

struct SolverOptions {
  std::uint64_t max_theta = 64ULL * 3600;  // search cap, minor cycles
  std::size_t max_bins = kDefaultMaxBins;
};

// Smallest theta, a multiple of Z, whose P_mon reaches target_prob for an
// l-fold flow (F_l = l * gamma * theta / omega).
absl::StatusOr<ResetSolution> SolveResetCycle(double target_prob,
                                              const BoundParams& params,
                                              const SolverOptions& options = {});

}  // namespace loft

#endif  // LOFT_BOUND_H_
