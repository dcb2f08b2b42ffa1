#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "uiwf/error.hpp"
#include "uiwf/losses.hpp"
#include "uiwf/rng.hpp"

using namespace uiwf;

namespace {

std::vector<std::vector<double>> rows(const Matrix& m) {
  std::vector<std::vector<double>> out;
  for (std::size_t r = 0; r < m.rows; ++r) out.emplace_back(m.row(r).begin(), m.row(r).end());
  return out;
}

Matrix random_unit_rows(std::size_t n, std::size_t d, Rng& rng) {
  Matrix m(n, d);
  for (auto& v : m.data) v = uniform_real(rng, -1, 1);
  normalize_rows(m);
  return m;
}

std::vector<int> random_classes(std::size_t n, int k, Rng& rng) {
  std::vector<int> c(n);
  for (auto& v : c) v = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(k)));
  return c;
}

double loss_of(const Matrix& f, const std::vector<int>& y, double tau) {
  return supcon_loss({&f, y, tau}).loss;
}

}  // namespace

TEST_CASE("two same-class samples give zero loss") {
  Rng rng(1);
  for (int t = 0; t < 10; ++t) {
    const auto f = random_unit_rows(2, 3, rng);
    CHECK(loss_of(f, {4, 4}, 0.1) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("four identical same-class samples give 4 ln 3") {
  Matrix f(4, 3);
  for (std::size_t i = 0; i < 4; ++i) f(i, 0) = 0.6, f(i, 1) = 0.8;
  for (const double tau : {0.05, 0.1, 1.0, 7.0})
    CHECK(std::abs(loss_of(f, {0, 0, 0, 0}, tau) - 4.0 * std::log(3.0)) <= 1e-9);
}

TEST_CASE("axis fixture matches the scalar transcription") {
  Matrix f(4, 2);
  f(0, 0) = 1;
  f(1, 1) = 1;
  f(2, 0) = -1;
  f(3, 1) = -1;
  const std::vector<int> y{0, 0, 1, 1};
  const double ref = oracle::supcon(rows(f), y, 0.1);
  CHECK(ref == doctest::Approx(2.7726795210687447).epsilon(1e-15));
  CHECK(loss_of(f, y, 0.1) == doctest::Approx(2.7726795210687447).epsilon(1e-13));
}

TEST_CASE("property: loss equals the oracle, is non-negative and permutation invariant") {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    const auto n = 2 + uniform_index(rng, 11);
    const auto d = 1 + uniform_index(rng, 6);
    const auto f = random_unit_rows(n, d, rng);
    const auto y = random_classes(n, 1 + static_cast<int>(uniform_index(rng, 4)), rng);
    const double tau = uniform_real(rng, 0.05, 1.0);
    const auto r = supcon_loss({&f, y, tau});
    const double ref = oracle::supcon(rows(f), y, tau);
    REQUIRE(std::abs(r.loss - ref) <= 1e-9 * std::max(1.0, std::abs(ref)));
    REQUIRE(r.loss >= 0.0);

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    shuffle(std::span<std::size_t>(perm), rng);
    Matrix pf(n, d);
    std::vector<int> py(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::copy_n(f.row(perm[i]).begin(), d, pf.row(i).begin());
      py[i] = y[perm[i]];
    }
    const auto pr = supcon_loss({&pf, py, tau});
    REQUIRE(std::abs(pr.loss - r.loss) <= 1e-12 * std::max(1.0, r.loss));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < d; ++k)
        REQUIRE(std::abs(pr.grad(i, k) - r.grad(perm[i], k)) <= 1e-12 * std::max(1.0, std::abs(r.grad(perm[i], k))));
  }
}

TEST_CASE("gradients match central differences") {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto n = 2 + uniform_index(rng, 7);
    const auto d = 1 + uniform_index(rng, 4);
    auto f = random_unit_rows(n, d, rng);
    const auto y = random_classes(n, 2, rng);
    const double tau = uniform_real(rng, 0.1, 1.0);
    const auto g = supcon_loss({&f, y, tau}).grad;
    const double h = 1e-6;
    double num2 = 0.0, diff2 = 0.0, ana2 = 0.0;
    for (std::size_t i = 0; i < f.data.size(); ++i) {
      const double keep = f.data[i];
      f.data[i] = keep + h;
      const double up = loss_of(f, y, tau);
      f.data[i] = keep - h;
      const double down = loss_of(f, y, tau);
      f.data[i] = keep;
      const double numeric = (up - down) / (2 * h);
      num2 += numeric * numeric;
      ana2 += g.data[i] * g.data[i];
      diff2 += (numeric - g.data[i]) * (numeric - g.data[i]);
    }
    const double scale = std::max({std::sqrt(num2), std::sqrt(ana2), 1e-8});
    CHECK(std::sqrt(diff2) / scale <= 1e-6);
  }
}

TEST_CASE("anchors without positives are skipped") {
  Rng rng(4);
  const auto f = random_unit_rows(4, 3, rng);
  const auto r = supcon_loss({&f, {0, 1, 2, 2}, 0.1});
  CHECK(r.skipped_anchors == 2);
  CHECK(r.mean_loss == doctest::Approx(r.loss / 2));
  const auto none = supcon_loss({&f, {0, 1, 2, 3}, 0.1});
  CHECK(none.loss == 0.0);
  CHECK(std::all_of(none.grad.data.begin(), none.grad.data.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("input validation") {
  Matrix one(1, 2, 0.5);
  CHECK_THROWS_AS(supcon_loss({&one, {0}, 0.1}), InvalidArgument);
  Matrix two(2, 2, 0.5);
  CHECK_THROWS_AS(supcon_loss({&two, {0}, 0.1}), DimensionMismatch);
  CHECK_THROWS_AS(supcon_loss({&two, {0, 0}, 0.0}), InvalidArgument);
  two(0, 0) = std::nan("");
  CHECK_THROWS_AS(supcon_loss({&two, {0, 0}, 0.1}), InvalidArgument);
}

TEST_CASE("property: positives refine along the hierarchy") {
  const auto reg = LabelRegistry::default_registry();
  const auto labels = reg.chain_labels();
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    std::vector<ChainLabel> batch;
    for (int i = 0; i < 16; ++i) batch.push_back(labels[uniform_index(rng, 12)]);
    std::vector<std::vector<int>> ids;
    for (const auto level : kAllLevels) {
      std::vector<LevelKey> keys;
      for (const auto& l : batch) keys.push_back(project(l, level));
      ids.push_back(encode_classes(keys));
    }
    for (std::size_t i = 0; i < batch.size(); ++i)
      for (std::size_t j = 0; j < batch.size(); ++j) {
        if (ids[2][i] == ids[2][j]) REQUIRE(ids[1][i] == ids[1][j]);
        if (ids[1][i] == ids[1][j]) REQUIRE(ids[0][i] == ids[0][j]);
      }
  }
}

TEST_CASE("SHL defaults and single-level reduction") {
  const auto two = SHLConfig::two_level();
  CHECK(two.weight(Level::SV) == 0.5);
  CHECK(two.weight(Level::SVC) == 0.5);
  const auto three = SHLConfig::three_level();
  CHECK(three.weight(Level::S) == 0.2);
  CHECK(three.weight(Level::SV) == 0.4);
  CHECK(three.weight(Level::SVC) == 0.4);
  CHECK(three.temperature == 0.1);

  Rng rng(6);
  const auto f = random_unit_rows(8, 4, rng);
  const auto y = random_classes(8, 3, rng);
  const LevelBatch b{Level::SVC, {&f, y, 0.1}};
  const auto r = shl_loss(std::span<const LevelBatch>(&b, 1), SHLConfig::single_level());
  CHECK(r.loss == supcon_loss(b.batch).loss);
  CHECK(r.levels.at(0).result.grad == supcon_loss(b.batch).grad);
}

TEST_CASE("property: SHL is the weighted sum of per-level losses") {
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + uniform_index(rng, 10);
    std::vector<Matrix> f;
    std::vector<std::vector<int>> y;
    for (int l = 0; l < 3; ++l) {
      f.push_back(random_unit_rows(n, 1 + uniform_index(rng, 5), rng));
      y.push_back(random_classes(n, 1 + static_cast<int>(uniform_index(rng, 4)), rng));
    }
    SHLConfig config;
    config.temperature = uniform_real(rng, 0.05, 1.0);
    config.levels.clear();
    std::vector<LevelBatch> batches;
    for (int l = 0; l < 3; ++l) {
      if (!bernoulli(rng, 0.7) && !(l == 2 && config.levels.empty())) continue;
      config.levels.push_back(kAllLevels[l]);
      config.set_weight(kAllLevels[l], uniform_real(rng, 0.0, 2.0));
      batches.push_back({kAllLevels[l], {&f[l], y[l], config.temperature}});
    }
    const auto r = shl_loss(batches, config);
    double expect = 0.0;
    for (const auto level : config.levels) {
      const auto i = static_cast<std::size_t>(level);
      expect += config.weight(level) * oracle::supcon(rows(f[i]), y[i], config.temperature);
    }
    REQUIRE(std::abs(r.loss - expect) <= 1e-12 * std::max(1.0, std::abs(expect)));
    // Linearity in each weight: doubling one weight adds exactly its term once more.
    auto doubled = config;
    const auto level = config.levels.front();
    doubled.set_weight(level, 2 * config.weight(level));
    const auto r2 = shl_loss(batches, doubled);
    const double term = r.levels.front().result.loss;
    REQUIRE(std::abs(r2.loss - (r.loss + config.weight(level) * term)) <= 1e-12 * std::max(1.0, r2.loss));
  }
}

TEST_CASE("SHL rejects mismatched batches") {
  Rng rng(8);
  const auto a = random_unit_rows(4, 2, rng);
  const auto b = random_unit_rows(5, 2, rng);
  const std::vector<LevelBatch> batches{{Level::SV, {&a, {0, 0, 1, 1}, 0.1}},
                                        {Level::SVC, {&b, {0, 0, 1, 1, 1}, 0.1}}};
  CHECK_THROWS_AS(shl_loss(batches, SHLConfig::two_level()), InvalidArgument);
  CHECK_THROWS_AS(shl_loss(std::span<const LevelBatch>(batches.data(), 1), SHLConfig::two_level()),
                  InvalidArgument);
}
