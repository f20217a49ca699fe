#include "ipm/tripletstats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace ipm {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& w : s_) w = splitmix64(x);
}

std::uint64_t Rng::mix(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t x = seed ^ (counter * 0x9E3779B97F4A7C15ull + 0xD1B54A32D192ED03ull);
  return splitmix64(x);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = std::rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform_pos() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  const double u1 = uniform_pos();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::gamma(double shape) {
  if (shape < 1.0) {
    // boost: Gamma(a) = Gamma(a+1) * U^(1/a)
    const double u = uniform_pos();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_pos();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Rng::beta(double a, double b) {
  const double x = gamma(a);
  const double y = gamma(b);
  return x / (x + y);
}

long long Rng::poisson(double mean) {
  if (mean <= 0.0) return 0;
  if (mean < 30.0) {
    const double limit = std::exp(-mean);
    long long n = 0;
    double prod = uniform_pos();
    while (prod > limit) {
      prod *= uniform_pos();
      ++n;
    }
    return n;
  }
  // Hormann's PTRS transformed rejection, exact for mean >= 10
  const double b = 0.931 + 2.53 * std::sqrt(mean);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  const double lml = std::log(mean);
  for (;;) {
    double u = uniform() - 0.5;
    const double v = uniform_pos();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<long long>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        k * lml - mean - std::lgamma(k + 1.0))
      return static_cast<long long>(k);
  }
}

long long Rng::binomial_exact(long long n, double p) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  long long count = 0;
  // order-statistic (beta) splits until the trial count is small
  while (n > 64) {
    const long long i = (n + 1) / 2;
    const double v = beta(static_cast<double>(i), static_cast<double>(n + 1 - i));
    if (v <= p) {
      count += i;
      n -= i;
      p = (p - v) / (1.0 - v);
    } else {
      n = i - 1;
      p = p / v;
    }
    if (p <= 0.0) return count;
    if (p >= 1.0) return count + n;
  }
  for (long long t = 0; t < n; ++t)
    if (uniform() < p) ++count;
  return count;
}

long long Rng::thermal(double mean) {
  if (mean <= 0.0) return 0;
  const double q = mean / (1.0 + mean);  // P(X >= k) = q^k
  const double u = uniform_pos();
  return static_cast<long long>(std::floor(std::log(u) / std::log(q)));
}

PairStatistics pair_statistics_from_string(const std::string& name) {
  if (name == "poisson") return PairStatistics::poisson;
  if (name == "thermal") return PairStatistics::thermal;
  if (name == "multithermal") return PairStatistics::multithermal;
  throw std::invalid_argument("unknown pair statistics: " + name);
}

const char* to_string(PairStatistics s) {
  switch (s) {
    case PairStatistics::poisson: return "poisson";
    case PairStatistics::thermal: return "thermal";
    case PairStatistics::multithermal: return "multithermal";
  }
  return "?";
}

namespace {

long long sample_primary(Rng& rng, const TripletModel& m) {
  switch (m.statistics) {
    case PairStatistics::poisson:
      return rng.poisson(m.mean_pairs);
    case PairStatistics::thermal:
      return rng.thermal(m.mean_pairs);
    case PairStatistics::multithermal: {
      // sum of `modes` equal thermal modes == gamma-mixed Poisson
      const double shape = static_cast<double>(std::max(1, m.modes));
      const double lambda = rng.gamma(shape) * (m.mean_pairs / shape);
      return rng.poisson(lambda);
    }
  }
  return 0;
}

long long detect(Rng& rng, long long n, double eta) {
  if (eta >= 1.0) return n;
  if (n > kBinomialGaussianThreshold) {
    const double mean = static_cast<double>(n) * eta;
    const double sd = std::sqrt(mean * (1.0 - eta));
    const double draw = std::round(mean + sd * rng.normal());
    return std::clamp<long long>(static_cast<long long>(draw), 0, n);
  }
  return rng.binomial_exact(n, eta);
}

}  // namespace

std::vector<TripletRecord> simulate(const TripletModel& model, long long shots,
                                    std::uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("simulate requires shots >= 1");
  if (!(model.mean_pairs >= 0.0))
    throw std::invalid_argument("mean_pairs must be >= 0");
  auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in_unit(model.conversion_prob) || !in_unit(model.efficiency[0]) ||
      !in_unit(model.efficiency[1]) || !in_unit(model.efficiency[2]))
    throw std::invalid_argument("probabilities must lie in [0, 1]");
  if (model.background[0] < 0.0 || model.background[1] < 0.0 ||
      model.background[2] < 0.0)
    throw std::invalid_argument("background means must be >= 0");
  std::vector<TripletRecord> records;
  records.reserve(static_cast<std::size_t>(shots));
  for (long long i = 0; i < shots; ++i) {
    Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(i)));
    const long long m = sample_primary(rng, model);
    const long long n2 = rng.binomial_exact(m, model.conversion_prob);
    const long long n3 = m - n2;  // N1 = N2 + N3 by construction
    TripletRecord r;
    r.shot = i;
    r.m1 = detect(rng, m, model.efficiency[0]) + rng.poisson(model.background[0]);
    r.m2 = detect(rng, n2, model.efficiency[1]) + rng.poisson(model.background[1]);
    r.m3 = detect(rng, n3, model.efficiency[2]) + rng.poisson(model.background[2]);
    records.push_back(r);
  }
  return records;
}

double gamma_correlation(std::span<const TripletRecord> records, long long lag) {
  if (lag < 0) throw std::invalid_argument("lag must be >= 0");
  const long long n = static_cast<long long>(records.size()) - lag;
  if (n < 2)
    throw std::invalid_argument("need at least lag + 2 records for gamma(lag)");
  double mx = 0.0, my = 0.0;
  for (long long i = 0; i < n; ++i) {
    mx += static_cast<double>(records[static_cast<std::size_t>(i)].m1);
    const auto& r = records[static_cast<std::size_t>(i + lag)];
    my += static_cast<double>(r.m2 + r.m3);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (long long i = 0; i < n; ++i) {
    const double x = static_cast<double>(records[static_cast<std::size_t>(i)].m1) - mx;
    const auto& r = records[static_cast<std::size_t>(i + lag)];
    const double y = static_cast<double>(r.m2 + r.m3) - my;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::domain_error("gamma(lag) undefined: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

std::string records_csv(std::span<const TripletRecord> records) {
  std::string out = "shot,m1,m2,m3\n";
  for (const auto& r : records) {
    out += std::to_string(r.shot);
    out += ',';
    out += std::to_string(r.m1);
    out += ',';
    out += std::to_string(r.m2);
    out += ',';
    out += std::to_string(r.m3);
    out += '\n';
  }
  return out;
}

std::vector<TripletRecord> parse_records_csv(const std::string& text) {
  std::vector<TripletRecord> records;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    TripletRecord r;
    if (std::sscanf(line.c_str(), "%lld,%lld,%lld,%lld", &r.shot, &r.m1, &r.m2,
                    &r.m3) != 4)
      throw std::runtime_error("malformed records CSV row: " + line);
    records.push_back(r);
  }
  return records;
}

}  // namespace ipm
