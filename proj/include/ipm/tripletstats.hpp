#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ipm {

/// Counter-seeded xoshiro256** with portable samplers, so simulations are
/// reproducible across platforms and shot-parallel execution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  double uniform();      // [0, 1)
  double uniform_pos();  // (0, 1)
  double normal();
  double gamma(double shape);  // Marsaglia-Tsang, unit scale
  double beta(double a, double b);
  long long poisson(double mean);
  /// Exact binomial sample for any n (beta-split recursion above 64 trials).
  long long binomial_exact(long long n, double p);
  /// Bose-Einstein (geometric) photon number with the given mean.
  long long thermal(double mean);

  static std::uint64_t mix(std::uint64_t seed, std::uint64_t counter);

 private:
  std::array<std::uint64_t, 4> s_{};
};

enum class PairStatistics { poisson, thermal, multithermal };

PairStatistics pair_statistics_from_string(const std::string& name);
const char* to_string(PairStatistics s);

/// Shot-by-shot model of the entangled-triplet photon numbers: a primary
/// pair number M per shot (N1 = M), a binomial split of field 3 into the
/// upconverted field 2 (N2 ~ Binomial(M, conversion_prob), N3 = M - N2, so
/// N1 = N2 + N3 exactly), then lossy detection m_j ~ Binomial(N_j, eta_j)
/// plus Poisson background.
struct TripletModel {
  double mean_pairs = 1e4;
  PairStatistics statistics = PairStatistics::thermal;
  int modes = 1;  // multithermal only
  double conversion_prob = 0.02;
  std::array<double, 3> efficiency{1.0, 1.0, 1.0};
  std::array<double, 3> background{0.0, 0.0, 0.0};
};

struct TripletRecord {
  long long shot{};
  long long m1{}, m2{}, m3{};
};

/// Trials count above which binomial detection switches from exact sampling
/// to the rounded-Gaussian approximation.
inline constexpr long long kBinomialGaussianThreshold = 1'000'000;

/// Simulate `shots` laser shots. Deterministic given (model, shots, seed)
/// and independent of execution order (each shot derives its own stream
/// from the seed and shot index).
std::vector<TripletRecord> simulate(const TripletModel& model, long long shots,
                                    std::uint64_t seed);

/// Shot-lagged normalized covariance between m1(i) and m2(i+k) + m3(i+k),
/// estimated over the lag-aligned window. Throws std::invalid_argument when
/// fewer than two aligned pairs exist and std::domain_error when either
/// factor has zero variance.
double gamma_correlation(std::span<const TripletRecord> records, long long lag);

inline double epsilon(std::span<const TripletRecord> records) {
  return gamma_correlation(records, 0);
}

/// CSV round trip, schema: shot,m1,m2,m3
std::string records_csv(std::span<const TripletRecord> records);
std::vector<TripletRecord> parse_records_csv(const std::string& text);

}  // namespace ipm
