#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lovit/config.hpp"
#include "lovit/matrix.hpp"
#include "lovit/weights.hpp"

// Brute-force reference implementations. This library links only the core
// data types (matrix, config, weight store, seed derivation) and shares no
// code with the optimized kernels it is used to check.
namespace lovit::oracle {

struct OracleReport {
  std::string case_id;
  double max_abs_diff = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

OracleReport make_report(std::string case_id, double max_abs_diff, double tolerance);

struct Mask {
  bool causal = false;
  std::int64_t offset = 0;  // query i sees keys j <= i + offset
};

// Explicit per-(i, j) loops over each head; softmax uses max subtraction only.
Matrix naive_attention(const Matrix& q, const Matrix& k, const Matrix& v, std::size_t num_heads = 1,
                       Mask mask = {});

struct SparsityRank {
  std::vector<double> scores;  // max - mean over every visible key
  std::vector<std::size_t> order;  // highest score first, ties by lower index
};
SparsityRank exhaustive_sparsity_rank(const Matrix& q, const Matrix& k, std::size_t d_k, Mask mask = {});

// Reference ProbSparse built on the naive pieces: same sampling contract,
// exhaustive sorting, lazy rows as explicit means.
Matrix naive_probsparse(const Matrix& q, const Matrix& k, const Matrix& v, std::size_t num_heads,
                        Mask mask, const SparseConfig& sp);

struct OraclePhaseOutput {
  std::int64_t frame = 0;
  std::vector<double> logits;
  double heat = 0.0;
  std::size_t predicted_phase = 0;
  double confidence = 0.0;
};

// Straight-line recomposition of the whole temporal model, recomputed frame
// by frame from raw tensors in the weight store. Returns one output per frame.
std::vector<OraclePhaseOutput> straightline_lovit(const Matrix& e_prefix, const WeightStore& weights,
                                                  const ModelConfig& cfg, std::uint64_t seed_root);

}  // namespace lovit::oracle
