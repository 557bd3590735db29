#include <cmath>
#include <random>
#include <unordered_set>

#include "doctest.h"

#include "cshift/error.hpp"
#include "cshift/hash.hpp"
#include "cshift/shift.hpp"
#include "cshift/toy_classifier.hpp"
#include "cshift/toy_decoder.hpp"
#include "test_util.hpp"

using namespace cshift;

namespace {

float pixel(const std::vector<float>& img, std::size_t row, std::size_t col, std::size_t c) {
  return img[(row * 16 + col) * 3 + c];
}

double l2_diff(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

Dataset blobs(std::mt19937_64& rng, std::size_t n, double separation) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<float> values;
  std::vector<Label> labels;
  for (std::size_t i = 0; i < n; ++i) {
    const Label y = static_cast<Label>(i % 2);
    const double c = y == 0 ? -separation : separation;
    for (int k = 0; k < 4; ++k) values.push_back(static_cast<float>((k == 0 ? c : 0.0) + noise(rng)));
    labels.push_back(y);
  }
  return Dataset({4}, std::move(values), std::move(labels));
}

}  // namespace

TEST_CASE("squash maps 0 to one half and is monotone") {
  CHECK(squash(0.0) == 0.5);
  CHECK(squash(2.0) > squash(1.0));
  CHECK(squash(-40.0) > 0.0);
  CHECK(squash(40.0) <= 1.0);
  CHECK(squash(1.0, 2.0) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
}

TEST_CASE("z = 0 renders a centered mid-gray blob of mid scale") {
  const ToyDecoderConfig cfg;
  const std::vector<double> z(6, 0.0);
  const auto img = toy_decode(z, 0, cfg);
  REQUIRE(img.size() == 16 * 16 * 3);
  // Center (0.5, 0.5) sits between pixels 7 and 8; scale = 0.1 + 0.2 * 0.5.
  const double d2 = 2.0 * (1.0 / 32.0) * (1.0 / 32.0);
  const float want = static_cast<float>(0.5 * std::exp(-d2 / (2.0 * 0.2 * 0.2)));
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(pixel(img, 7, 7, c) == want);
    CHECK(pixel(img, 8, 8, c) == want);
    CHECK(pixel(img, 7, 8, c) == want);
  }
  // Brightest pixels surround the center; corners are darker.
  CHECK(pixel(img, 0, 0, 0) < pixel(img, 7, 7, 0));
}

TEST_CASE("ring peaks away from its center") {
  const ToyDecoderConfig cfg;
  const std::vector<double> z(6, 0.0);
  const auto img = toy_decode(z, 1, cfg);
  // Radius 0.2 of the image: pixel 4 (center 0.28) is nearer the ring than 7.
  CHECK(pixel(img, 7, 4, 0) > pixel(img, 7, 7, 0));
}

TEST_CASE("pixels lie in [0, 1] for extreme latents") {
  ToyDecoderConfig cfg;
  cfg.classes = 3;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> z(6);
    for (auto& v : z) v = n(rng);
    for (Label y = 0; y < 3; ++y) {
      for (float v : toy_decode(z, y, cfg)) REQUIRE((v >= 0.0f && v <= 1.0f));
    }
  }
}

TEST_CASE("injectivity probe along each factor") {
  const ToyDecoderConfig cfg;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> z(6);
    for (auto& v : z) v = n(rng);
    for (std::size_t k = 0; k < 6; ++k) {
      auto w = z;
      w[k] += 1e-3;
      for (Label y = 0; y < 2; ++y) CHECK(l2_diff(toy_decode(z, y, cfg), toy_decode(w, y, cfg)) > 0.0);
    }
  }
}

TEST_CASE("decoded batches have no duplicate images") {
  const ToyDecoderConfig cfg;
  const auto batch = sample_shifted_batch(ShiftSpec::prior(6), 10000, 3, 0, LabelRule::round_robin(2));
  const auto images = toy_decode_batch(batch.batch, cfg);
  std::unordered_set<std::uint64_t> seen;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto row = images.row(i);
    const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(row.data()),
                                              row.size() * sizeof(float));
    seen.insert(fnv1a64(bytes));
  }
  CHECK(seen.size() == images.size());
}

TEST_CASE("decoder is Lipschitz and continuous") {
  const ToyDecoderConfig cfg;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  double max_ratio = 0.0;
  for (int rep = 0; rep < 300; ++rep) {
    std::vector<double> z(6), dir(6);
    for (auto& v : z) v = n(rng);
    for (auto& v : dir) v = n(rng);
    const double len = norm(dir);
    auto w = z;
    for (int k = 0; k < 6; ++k) w[k] += 0.01 * dir[k] / len;
    const Label y = static_cast<Label>(rep % 2);
    max_ratio = std::max(max_ratio, l2_diff(toy_decode(z, y, cfg), toy_decode(w, y, cfg)) / 0.01);
  }
  // Each of 768 pixels moves by at most a few units per unit of latent.
  CHECK(max_ratio < 100.0);

  const std::vector<double> z{0.3, -0.2, 1.0, 0.1, -0.7, 0.4};
  double prev = INFINITY;
  for (double delta : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}) {
    auto w = z;
    for (auto& v : w) v += delta;
    const double d = l2_diff(toy_decode(z, 1, cfg), toy_decode(w, 1, cfg));
    CHECK(d < prev);
    prev = d;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("decoder input validation") {
  ToyDecoderConfig cfg;
  CHECK_THROWS_AS(toy_decode(std::vector<double>(5, 0.0), 0, cfg), InvalidArgument);
  CHECK_THROWS_AS(toy_decode(std::vector<double>(6, 0.0), 2, cfg), InvalidArgument);
  cfg.classes = 4;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg.classes = 2;
  cfg.squash_gain = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("softmax gradient matches central differences") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<float> values;
    std::vector<Label> labels;
    for (int i = 0; i < 25; ++i) {
      for (int k = 0; k < 6; ++k) values.push_back(static_cast<float>(n(rng)));
      labels.push_back(static_cast<Label>(i % 3));
    }
    const Dataset data({6}, values, labels);
    const SoftmaxObjective obj(data, 3, 0.05);
    std::vector<double> p(obj.parameter_count());
    for (auto& v : p) v = 0.5 * n(rng);
    std::vector<double> g(p.size());
    obj.evaluate(p, g);
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double h = 1e-5;
      auto plus = p, minus = p;
      plus[k] += h;
      minus[k] -= h;
      const double fd = (obj.evaluate(plus, {}) - obj.evaluate(minus, {})) / (2 * h);
      CHECK(std::abs(g[k] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("separable data is learned") {
  std::mt19937_64 rng(6);
  const auto train = blobs(rng, 400, 6.0);
  const auto model = train_classifier(train, {.epochs = 200});
  CHECK(model.accuracy(train) >= 0.99);
  CHECK(model.classes() == 2);
  CHECK(model.features() == 4);
}

TEST_CASE("training loss never increases under the default step") {
  const ToyDecoderConfig cfg;
  const auto batch = sample_shifted_batch(ShiftSpec::prior(6), 600, 7, 0, LabelRule::round_robin(2));
  const auto images = toy_decode_batch(batch.batch, cfg);
  const auto model = train_classifier(images, {.epochs = 150});
  const auto& loss = model.loss_history();
  REQUIRE(loss.size() == 151);
  for (std::size_t e = 1; e < loss.size(); ++e) REQUIRE(loss[e] <= loss[e - 1] + 1e-9);
  CHECK(loss.back() < loss.front());
  CHECK(model.learning_rate_used() > 0.0);
  for (double w : model.parameters()) REQUIRE(std::isfinite(w));
}

TEST_CASE("training is deterministic given the seed") {
  std::mt19937_64 rng(8);
  const auto train = blobs(rng, 100, 1.0);
  const auto a = train_classifier(train, {.epochs = 20, .seed = 3});
  const auto b = train_classifier(train, {.epochs = 20, .seed = 3});
  const auto c = train_classifier(train, {.epochs = 20, .seed = 4});
  CHECK(std::vector<double>(a.parameters().begin(), a.parameters().end()) ==
        std::vector<double>(b.parameters().begin(), b.parameters().end()));
  CHECK(std::vector<double>(a.parameters().begin(), a.parameters().end()) !=
        std::vector<double>(c.parameters().begin(), c.parameters().end()));
}

TEST_CASE("classifier input validation") {
  const Dataset one_class({2}, {1.0f, 2.0f, 3.0f, 4.0f}, {1, 1});
  CHECK_THROWS_AS(train_classifier(one_class, {}), InvalidArgument);
  const Dataset two({2}, {1.0f, 2.0f, 3.0f, 4.0f}, {0, 1});
  CHECK_THROWS_AS(train_classifier(two, {.learning_rate = -1.0}), InvalidArgument);
  const auto m = train_classifier(two, {.epochs = 5});
  CHECK_THROWS_AS(m.predict(std::vector<float>{1.0f}), InvalidArgument);
}
