#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "uiwf/matrix.hpp"

namespace uiwf {

// Database and query embeddings with their class keys at the evaluated level.
// Rows are expected to be unit norm, so dot products are cosine similarities.
struct RetrievalIndex {
  Matrix database;
  std::vector<std::string> database_keys;
  Matrix queries;
  std::vector<std::string> query_keys;

  void validate() const;
};

// Database indices ranked by descending cosine similarity; ties go to the
// lower index.
std::vector<std::size_t> knn_retrieve(const RetrievalIndex& index, std::size_t query,
                                      std::size_t k);

struct ClassScore {
  std::string key;
  std::size_t queries = 0;  // queries that were scored
  double score = 0.0;
};

struct ClassTable {
  std::vector<ClassScore> per_class;  // sorted by key
  double macro = 0.0;                 // unweighted mean over scored classes
  std::size_t skipped_queries = 0;    // queries whose class has no database reference
  std::size_t skipped_classes = 0;    // classes with no scored query
};

ClassTable precision_at_1(const RetrievalIndex& index);
ClassTable r_precision(const RetrievalIndex& index);
ClassTable map_at_r(const RetrievalIndex& index);

// Single-query building blocks; `hits[i]` tells whether the rank-(i+1)
// retrieval shares the query's class, `relevant` is R_q.
double r_precision_of(const std::vector<bool>& hits, std::size_t relevant);
double average_precision_at_r(const std::vector<bool>& hits, std::size_t relevant);

struct RetrievalScores {
  ClassTable precision_at_1;
  ClassTable r_precision;
  ClassTable map_at_r;
};

// All three tables from one ranking per query.
RetrievalScores retrieval_scores(const RetrievalIndex& index);

struct Partition {
  std::vector<int> labels;  // cluster id per item, in [0, k)
  int k = 0;

  static Partition from_labels(const std::vector<int>& labels);
  static Partition from_keys(const std::vector<std::string>& keys);
};

struct KMeansOptions {
  int n_init = 10;
  int max_iter = 300;
};

struct KMeansResult {
  Partition partition;
  Matrix centroids;
  double inertia = 0.0;
  int iterations = 0;
};

// Lloyd iterations from k-means++ seeding, best of n_init restarts by inertia.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& options = {});

struct ContingencyInfo {
  double mutual_information = 0.0;
  double entropy_u = 0.0;
  double entropy_v = 0.0;
  double expected_mutual_information = 0.0;
};

ContingencyInfo contingency_info(const Partition& u, const Partition& v);
double expected_mutual_information(const std::vector<std::size_t>& row_sums,
                                   const std::vector<std::size_t>& col_sums, std::size_t n);

// Adjusted mutual information with arithmetic-mean normalisation, natural log.
double ami(const Partition& u, const Partition& v);

}  // namespace uiwf
