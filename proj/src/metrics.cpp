#include "uiwf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "uiwf/error.hpp"
#include "uiwf/rng.hpp"

namespace uiwf {

void RetrievalIndex::validate() const {
  if (database.rows != database_keys.size() || queries.rows != query_keys.size())
    throw DimensionMismatch("retrieval index: one key per embedding row required");
  if (database.rows > 0 && queries.rows > 0 && database.cols != queries.cols)
    throw DimensionMismatch("retrieval index: database and query dimensions differ");
}

namespace {

std::vector<std::size_t> rank_all(const RetrievalIndex& index, std::size_t query) {
  const auto q = index.queries.row(query);
  std::vector<double> sims(index.database.rows);
  for (std::size_t i = 0; i < sims.size(); ++i) sims[i] = dot(index.database.row(i), q);
  std::vector<std::size_t> order(sims.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sims[a] > sims[b]; });
  return order;
}

}  // namespace

std::vector<std::size_t> knn_retrieve(const RetrievalIndex& index, std::size_t query,
                                      std::size_t k) {
  index.validate();
  if (query >= index.queries.rows) throw InvalidArgument("query index out of range");
  if (k > index.database.rows)
    throw InvalidArgument("k = " + std::to_string(k) + " exceeds database size " +
                          std::to_string(index.database.rows));
  auto order = rank_all(index, query);
  order.resize(k);
  return order;
}

double r_precision_of(const std::vector<bool>& hits, std::size_t relevant) {
  if (relevant == 0) throw InvalidArgument("R-precision undefined for R = 0");
  std::size_t found = 0;
  for (std::size_t i = 0; i < relevant && i < hits.size(); ++i) found += hits[i];
  return static_cast<double>(found) / static_cast<double>(relevant);
}

double average_precision_at_r(const std::vector<bool>& hits, std::size_t relevant) {
  if (relevant == 0) throw InvalidArgument("mAP@R undefined for R = 0");
  double sum = 0.0;
  std::size_t found = 0;
  for (std::size_t i = 0; i < relevant && i < hits.size(); ++i) {
    if (!hits[i]) continue;
    ++found;
    sum += static_cast<double>(found) / static_cast<double>(i + 1);
  }
  return sum / static_cast<double>(relevant);
}

namespace {

struct Accumulator {
  std::map<std::string, std::pair<double, std::size_t>> by_class;
  std::map<std::string, bool> seen;

  void add(const std::string& key, double v) {
    auto& [sum, n] = by_class[key];
    sum += v;
    ++n;
  }
  ClassTable finish(std::size_t skipped_queries) const {
    ClassTable t;
    t.skipped_queries = skipped_queries;
    for (const auto& [key, ignored] : seen)
      if (!by_class.count(key)) ++t.skipped_classes;
    double total = 0.0;
    for (const auto& [key, acc] : by_class) {
      t.per_class.push_back({key, acc.second, acc.first / static_cast<double>(acc.second)});
      total += t.per_class.back().score;
    }
    t.macro = t.per_class.empty() ? 0.0 : total / static_cast<double>(t.per_class.size());
    return t;
  }
};

}  // namespace

RetrievalScores retrieval_scores(const RetrievalIndex& index) {
  index.validate();
  std::map<std::string, std::size_t> references;
  for (const auto& k : index.database_keys) ++references[k];

  Accumulator p1, rp, map;
  std::size_t skipped = 0;
  for (std::size_t q = 0; q < index.queries.rows; ++q) {
    const auto& key = index.query_keys[q];
    p1.seen[key] = rp.seen[key] = map.seen[key] = true;
    const auto it = references.find(key);
    if (it == references.end()) {
      ++skipped;
      continue;
    }
    const std::size_t relevant = it->second;
    const auto order = rank_all(index, q);
    std::vector<bool> hits(std::min(relevant, order.size()));
    for (std::size_t i = 0; i < hits.size(); ++i) hits[i] = index.database_keys[order[i]] == key;
    p1.add(key, hits.front() ? 1.0 : 0.0);
    rp.add(key, r_precision_of(hits, relevant));
    map.add(key, average_precision_at_r(hits, relevant));
  }
  return {p1.finish(skipped), rp.finish(skipped), map.finish(skipped)};
}

ClassTable precision_at_1(const RetrievalIndex& index) { return retrieval_scores(index).precision_at_1; }
ClassTable r_precision(const RetrievalIndex& index) { return retrieval_scores(index).r_precision; }
ClassTable map_at_r(const RetrievalIndex& index) { return retrieval_scores(index).map_at_r; }

Partition Partition::from_labels(const std::vector<int>& labels) {
  Partition p;
  std::map<int, int> ids;
  p.labels.reserve(labels.size());
  for (const auto l : labels) {
    const auto [it, inserted] = ids.emplace(l, static_cast<int>(ids.size()));
    p.labels.push_back(it->second);
  }
  p.k = static_cast<int>(ids.size());
  return p;
}

Partition Partition::from_keys(const std::vector<std::string>& keys) {
  Partition p;
  std::map<std::string, int> ids;
  p.labels.reserve(keys.size());
  for (const auto& key : keys) {
    const auto [it, inserted] = ids.emplace(key, static_cast<int>(ids.size()));
    p.labels.push_back(it->second);
  }
  p.k = static_cast<int>(ids.size());
  return p;
}

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

Matrix kmeanspp_seed(const Matrix& x, int k, Rng& rng) {
  const std::size_t n = x.rows;
  Matrix centers(static_cast<std::size_t>(k), x.cols);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t pick = static_cast<std::size_t>(uniform_index(rng, n));
  for (int c = 0; c < k; ++c) {
    std::copy_n(x.row(pick).begin(), x.cols, centers.row(c).begin());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(x.row(i), centers.row(c)));
      total += d2[i];
    }
    if (c + 1 == k) break;
    if (total <= 0.0) {
      pick = static_cast<std::size_t>(uniform_index(rng, n));
      continue;
    }
    const double target = uniform01(rng) * total;
    double acc = 0.0;
    pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      acc += d2[i];
      if (acc > target && d2[i] > 0.0) {
        pick = i;
        break;
      }
    }
  }
  return centers;
}

KMeansResult lloyd(const Matrix& x, Matrix centers, int max_iter) {
  const std::size_t n = x.rows, d = x.cols;
  const int k = static_cast<int>(centers.rows);
  KMeansResult r;
  r.partition.k = k;
  r.partition.labels.assign(n, -1);
  std::vector<double> best_d2(n, 0.0);

  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = sq_dist(x.row(i), centers.row(0));
      for (int c = 1; c < k; ++c) {
        const double dd = sq_dist(x.row(i), centers.row(c));
        if (dd < bd) {
          bd = dd;
          best = c;
        }
      }
      best_d2[i] = bd;
      if (r.partition.labels[i] != best) {
        r.partition.labels[i] = best;
        changed = true;
      }
    }
    r.iterations = it + 1;

    Matrix sums(static_cast<std::size_t>(k), d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const int c = r.partition.labels[i];
      ++counts[c];
      auto s = sums.row(c);
      const auto p = x.row(i);
      for (std::size_t j = 0; j < d; ++j) s[j] += p[j];
    }
    std::vector<bool> taken(n, false);
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (std::size_t j = 0; j < d; ++j) centers(c, j) = sums(c, j) / counts[c];
        continue;
      }
      // Empty cluster: re-seed from the point farthest from its centroid.
      std::size_t far = 0;
      double fd = -1.0;
      for (std::size_t i = 0; i < n; ++i)
        if (!taken[i] && best_d2[i] > fd) {
          fd = best_d2[i];
          far = i;
        }
      taken[far] = true;
      best_d2[far] = 0.0;
      std::copy_n(x.row(far).begin(), d, centers.row(c).begin());
      changed = true;
    }
    if (!changed) break;
  }

  r.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    r.inertia += sq_dist(x.row(i), centers.row(r.partition.labels[i]));
  r.centroids = std::move(centers);
  return r;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& options) {
  if (k < 1) throw InvalidArgument("k must be >= 1");
  if (static_cast<std::size_t>(k) > points.rows)
    throw InvalidArgument("k = " + std::to_string(k) + " exceeds the number of points " +
                          std::to_string(points.rows));
  if (options.n_init < 1 || options.max_iter < 1) throw InvalidArgument("invalid k-means options");

  KMeansResult best;
  bool have = false;
  for (int run = 0; run < options.n_init; ++run) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(run), 0x6b6d65616e73ULL));
    auto r = lloyd(points, kmeanspp_seed(points, k, rng), options.max_iter);
    if (!have || r.inertia < best.inertia) {
      best = std::move(r);
      have = true;
    }
  }
  return best;
}

double expected_mutual_information(const std::vector<std::size_t>& a,
                                   const std::vector<std::size_t>& b, std::size_t n) {
  if (n == 0) return 0.0;
  const double N = static_cast<double>(n);
  const double lgN = std::lgamma(N + 1.0);
  double emi = 0.0;
  for (const auto ai_s : a) {
    for (const auto bj_s : b) {
      const double ai = static_cast<double>(ai_s), bj = static_cast<double>(bj_s);
      const auto lo = std::max<long long>(1, static_cast<long long>(ai_s + bj_s) - static_cast<long long>(n));
      const auto hi = static_cast<long long>(std::min(ai_s, bj_s));
      // Terms of the hypergeometric probability that do not depend on nij.
      const double fixed = std::lgamma(ai + 1.0) + std::lgamma(bj + 1.0) +
                           std::lgamma(N - ai + 1.0) + std::lgamma(N - bj + 1.0) - lgN;
      for (long long nij = lo; nij <= hi; ++nij) {
        const double x = static_cast<double>(nij);
        const double log_p = fixed - std::lgamma(x + 1.0) - std::lgamma(ai - x + 1.0) -
                             std::lgamma(bj - x + 1.0) - std::lgamma(N - ai - bj + x + 1.0);
        emi += (x / N) * std::log(N * x / (ai * bj)) * std::exp(log_p);
      }
    }
  }
  return emi;
}

ContingencyInfo contingency_info(const Partition& u, const Partition& v) {
  if (u.labels.size() != v.labels.size())
    throw DimensionMismatch("partitions have different item counts");
  const auto pu = Partition::from_labels(u.labels);
  const auto pv = Partition::from_labels(v.labels);
  const std::size_t n = pu.labels.size();
  ContingencyInfo info;
  if (n == 0) return info;

  std::vector<std::size_t> table(static_cast<std::size_t>(pu.k) * pv.k, 0), rows(pu.k, 0), cols(pv.k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++table[static_cast<std::size_t>(pu.labels[i]) * pv.k + pv.labels[i]];
    ++rows[pu.labels[i]];
    ++cols[pv.labels[i]];
  }
  const double N = static_cast<double>(n);
  for (const auto r : rows) info.entropy_u -= (r / N) * std::log(r / N);
  for (const auto c : cols) info.entropy_v -= (c / N) * std::log(c / N);
  for (int i = 0; i < pu.k; ++i) {
    for (int j = 0; j < pv.k; ++j) {
      const auto nij = table[static_cast<std::size_t>(i) * pv.k + j];
      if (nij == 0) continue;
      info.mutual_information +=
          (nij / N) * std::log(N * static_cast<double>(nij) / (static_cast<double>(rows[i]) * cols[j]));
    }
  }
  info.expected_mutual_information = expected_mutual_information(rows, cols, n);
  return info;
}

double ami(const Partition& u, const Partition& v) {
  const auto info = contingency_info(u, v);
  const double denom = 0.5 * (info.entropy_u + info.entropy_v) - info.expected_mutual_information;
  if (std::abs(denom) < 1e-12) return 0.0;
  return (info.mutual_information - info.expected_mutual_information) / denom;
}

}  // namespace uiwf
