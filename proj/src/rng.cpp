#include "cshift/rng.hpp"

#include <boost/random/normal_distribution.hpp>

namespace cshift {

double CounterStream::next_normal() noexcept {
  return boost::random::normal_distribution<double>{}(*this);
}

}  // namespace cshift
