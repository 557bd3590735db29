#include "cshift/intensity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "cshift/error.hpp"
#include "cshift/special_functions.hpp"

namespace cshift {
namespace {

constexpr std::uint64_t kPilotDraws = 100000;
constexpr std::uint64_t kMaxAttemptsPerSample = 10000000;

void check_compatible(const ShiftSpec& train, const ShiftSpec& shift) {
  if (train.family() != shift.family()) {
    throw InvalidArgument(std::string("intensity needs specs of one family, got ") +
                          to_string(train.family()) + " and " + to_string(shift.family()));
  }
  if (train.dim() != shift.dim()) throw InvalidArgument("intensity specs differ in dimension");
  if (train.family() == ShiftFamily::extend || train.family() == ShiftFamily::overlap) {
    if (!(train.targets() == shift.targets())) throw InvalidArgument("intensity specs use different targets");
  }
  if (train.family() == ShiftFamily::extend && train.extend_tau() != shift.extend_tau()) {
    throw InvalidArgument("extend specs use different tau conventions");
  }
}

unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

double ball99_radius(std::size_t dim) {
  static std::mutex mutex;
  static std::map<std::size_t, double> cache;
  if (dim < 1) throw InvalidArgument("dimension must be positive");
  std::lock_guard lock(mutex);
  auto it = cache.find(dim);
  if (it != cache.end()) return it->second;
  const double r = std::sqrt(chi_square_quantile(static_cast<double>(dim), 0.99));
  cache.emplace(dim, r);
  return r;
}

double cap_fraction(double alpha, std::size_t dim) {
  if (dim < 2) throw InvalidArgument("cap_fraction needs d >= 2");
  if (!(alpha >= 0.0 && alpha <= std::numbers::pi)) {
    throw InvalidArgument("cap angle must lie in [0, pi]");
  }
  if (alpha > 0.5 * std::numbers::pi) return 1.0 - cap_fraction(std::numbers::pi - alpha, dim);
  const double s = std::sin(alpha);
  const double c = std::cos(alpha);
  return 0.5 * regularized_incomplete_beta(0.5 * (static_cast<double>(dim) - 1.0), 0.5, s * s, c * c);
}

double intensity_analytic(const ShiftSpec& train, const ShiftSpec& shift) {
  check_compatible(train, shift);
  switch (shift.family()) {
    case ShiftFamily::prior: return 0.0;
    case ShiftFamily::extend: {
      const double shift_measure = cap_fraction(shift.cap_radius(), shift.dim());
      if (!(shift_measure > 0.0)) throw DegenerateGeometry("shifted support has zero measure");
      const double common = cap_fraction(std::min(train.cap_radius(), shift.cap_radius()), shift.dim());
      return std::max(0.0, 1.0 - common / shift_measure);
    }
    case ShiftFamily::overlap: {
      // Two hemispheres whose axes subtend gamma intersect in a lune of
      // measure (pi - gamma) / (2 pi), independent of dimension.
      const double gamma = 2.0 * std::abs(shift.theta() - train.theta()) / std::numbers::pi *
                           shift.targets().angle();
      return gamma / std::numbers::pi;
    }
    case ShiftFamily::truncation: {
      const double r_train = train.support_radius();
      const double r_shift = shift.support_radius();
      if (r_shift <= r_train) return 0.0;
      return 1.0 - std::pow(r_train / r_shift, static_cast<double>(shift.dim()));
    }
  }
  return 0.0;
}

bool IntensityReport::consistent() const {
  if (!analytic) return true;
  return std::abs(*analytic - mc_estimate) <= 4.0 * mc_stderr + 1e-3;
}

std::vector<double> sample_uniform_support(const ShiftSpec& spec, CounterStream& rng,
                                           std::uint64_t* attempts) {
  const std::size_t d = spec.dim();
  std::vector<double> x(d);
  if (spec.family() == ShiftFamily::prior || spec.family() == ShiftFamily::truncation) {
    double n2 = 0.0;
    do {
      n2 = 0.0;
      for (double& v : x) {
        v = rng.next_normal();
        n2 += v * v;
      }
    } while (!(n2 > 0.0));
    const double r = spec.support_radius() * std::pow(rng.next_uniform(), 1.0 / static_cast<double>(d));
    const double scale = r / std::sqrt(n2);
    for (double& v : x) v *= scale;
    if (attempts) *attempts += 1;
    return x;
  }

  for (std::uint64_t k = 1; k <= kMaxAttemptsPerSample; ++k) {
    double n2 = 0.0;
    for (double& v : x) {
      v = rng.next_normal();
      n2 += v * v;
    }
    if (!(n2 > 0.0)) continue;
    const double inv = 1.0 / std::sqrt(n2);
    for (double& v : x) v *= inv;
    if (in_support(x, spec)) {
      if (attempts) *attempts += k;
      return x;
    }
  }
  throw InfeasibleGeometry("rejection sampler exhausted its attempt budget");
}

IntensityReport intensity_mc(const ShiftSpec& train, const ShiftSpec& shift, std::uint64_t n,
                             std::uint64_t seed, const MonteCarloOptions& options) {
  check_compatible(train, shift);
  if (n == 0) throw InvalidArgument("Monte Carlo sample count must be positive");

  IntensityReport report(train, shift);
  try {
    report.analytic = intensity_analytic(train, shift);
  } catch (const DegenerateGeometry&) {
    report.analytic.reset();
  }

  if (shift.family() == ShiftFamily::extend || shift.family() == ShiftFamily::overlap) {
    std::uint64_t accepted = 0;
    std::vector<double> x(shift.dim());
    for (std::uint64_t j = 0; j < kPilotDraws; ++j) {
      CounterStream rng(seed, streams::kIntensityPilot, j);
      double n2 = 0.0;
      for (double& v : x) {
        v = rng.next_normal();
        n2 += v * v;
      }
      const double inv = 1.0 / std::sqrt(n2);
      for (double& v : x) v *= inv;
      if (in_support(x, shift)) ++accepted;
    }
    const double rate = static_cast<double>(accepted) / static_cast<double>(kPilotDraws);
    if (rate < options.acceptance_floor) {
      std::ostringstream msg;
      msg << "uniform-in-cap rejection sampler acceptance " << rate << " is below the floor "
          << options.acceptance_floor << " (cap radius " << shift.cap_radius() << " rad, d="
          << shift.dim() << ")";
      throw InfeasibleGeometry(msg.str());
    }
  }

  const unsigned threads = static_cast<unsigned>(
      std::min<std::uint64_t>(resolve_threads(options.threads), n));
  std::vector<std::uint64_t> hits(threads, 0);
  std::vector<std::uint64_t> attempts(threads, 0);
  auto work = [&](unsigned t) {
    const std::uint64_t begin = n * t / threads;
    const std::uint64_t end = n * (t + 1) / threads;
    std::uint64_t h = 0;
    std::uint64_t a = 0;
    for (std::uint64_t j = begin; j < end; ++j) {
      CounterStream rng(seed, streams::kIntensityMc, j);
      const auto x = sample_uniform_support(shift, rng, &a);
      if (in_support(x, train)) ++h;
    }
    hits[t] = h;
    attempts[t] = a;
  };

  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          work(t);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    pool.clear();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::uint64_t total_hits = 0;
  std::uint64_t total_attempts = 0;
  for (unsigned t = 0; t < threads; ++t) {
    total_hits += hits[t];
    total_attempts += attempts[t];
  }
  const double inside = static_cast<double>(total_hits) / static_cast<double>(n);
  report.mc_samples = n;
  report.mc_hits = total_hits;
  report.mc_estimate = 1.0 - inside;
  report.mc_stderr = std::sqrt(inside * (1.0 - inside) / static_cast<double>(n));
  report.acceptance_rate = static_cast<double>(n) / static_cast<double>(total_attempts);
  return report;
}

}  // namespace cshift
