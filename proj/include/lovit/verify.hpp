#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lovit/config.hpp"
#include "lovit/oracles.hpp"

// Oracle-equivalence suites shared by the `verify` subcommand and the tests.
// Each returns the worst case over its instances.
namespace lovit::verify {

using oracle::OracleReport;

// dense_attention against naive_attention on random shapes, masks and head counts.
OracleReport dense_vs_naive(std::size_t instances = 100, std::uint64_t seed = 1);
// probsparse_attention with u = L_Q and full sampling against dense_attention.
OracleReport probsparse_degenerate(std::size_t instances = 100, std::uint64_t seed = 2);
// Top-u selection under full sampling against the exhaustive ranking; the
// reported difference is the number of mismatched positions.
OracleReport topu_vs_exhaustive(std::size_t instances = 100, std::uint64_t seed = 3);
// Default ProbSparse settings against the naive reference (shared sampler seeds).
OracleReport probsparse_vs_naive(std::size_t instances = 100, std::uint64_t seed = 4);

// Batch model against the straight-line recomposition on one random stream.
// `sparse` keeps the ProbSparse global encoder; otherwise it is made dense.
OracleReport model_vs_straightline(const ModelConfig& cfg, std::size_t frames, bool sparse,
                                   std::uint64_t seed = 5);

// Streaming engine against batch evaluation over several streams; with
// `checkpoint` each stream is serialized and restored at its midpoint.
OracleReport streaming_vs_batch(const ModelConfig& cfg, std::size_t streams, std::size_t frames,
                                bool checkpoint, std::uint64_t seed = 6);

std::vector<OracleReport> run_all();
std::string format(const OracleReport& r);

}  // namespace lovit::verify
