#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fungraph {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

enum class ErrorCode {
  IncompatibleGrid,
  RankDeficient,
  DimensionMismatch,
  NotPositiveDefinite,
  DomainError,
  DegenerateRates,
  InvalidConfig,
  DataError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::IncompatibleGrid: return "IncompatibleGrid";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::DegenerateRates: return "DegenerateRates";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::DataError: return "DataError";
  }
  return "Unknown";
}

// Number of unordered pairs j < l among p variables.
constexpr Index pair_count(Index p) { return p * (p - 1) / 2; }

// Position of pair (j, l), j < l, in lexicographic order (0-based indices).
constexpr Index pair_index(Index j, Index l, Index p) {
  return j * p - j * (j + 1) / 2 + (l - j - 1);
}

// splitmix64 finalizer, used to derive independent RNG stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for a named sub-stream (stage tag, index) of a root seed.
constexpr std::uint64_t stream_seed(std::uint64_t root, std::uint64_t stage, std::uint64_t index) {
  return mix_seed(mix_seed(root ^ (stage * 0xd1b54a32d192ed03ULL)) ^ index);
}

}  // namespace fungraph
