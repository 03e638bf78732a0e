#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace tabens {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;
using MatrixRef = Eigen::Ref<const Eigen::MatrixXd>;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;
using IntVectorRef = Eigen::Ref<const Eigen::VectorXi>;

inline constexpr const char* kArtifactVersion = "0.1.0";

/// Config-file / spec-resolution problems. CLI exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dataset loading / shape / content problems. CLI exit code 3.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite losses, degenerate folds and similar numeric failures. CLI exit code 4.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Deterministic RNG used everywhere randomness is needed.
///
/// std::shuffle and the std <random> distributions are implementation-defined,
/// so this wraps mt19937_64 with fixed algorithms: fixed seed -> identical
/// streams on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t u64() { return state_(); }

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(state_() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection-free modulo is fine at our scales.
  int below(int n) { return static_cast<int>(state_() % static_cast<std::uint64_t>(n)); }

  /// Standard normal via Box-Muller on the deterministic uniforms.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  /// Fisher-Yates, deterministic for a fixed seed.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      std::swap(v[i], v[below(i + 1)]);
    }
  }

  /// Derive an independent child stream (used for per-tree / per-spec seeding).
  Rng spawn(std::uint64_t stream) {
    return Rng(state_() ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
  }

 private:
  std::mt19937_64 state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Collects non-fatal diagnostics (zero-denominator metrics, skipped AUC
/// classes, cosine zero-vector fallbacks, ...).
struct Warnings {
  std::vector<std::string> entries;

  void add(std::string msg) { entries.push_back(std::move(msg)); }
  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
};

/// Index of the row maximum; ties resolved to the lowest index.
inline int argmax(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  int best = 0;
  for (int j = 1; j < row.size(); ++j) {
    if (row(j) > row(best)) best = j;
  }
  return best;
}

/// FNV-1a 64-bit, used as the provenance fingerprint of config bytes.
inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace tabens
