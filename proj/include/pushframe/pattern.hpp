#pragma once

#include <algorithm>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pushframe {

// Sylvester-ordered Hadamard matrix of order n = 2^k. Entries are computed on
// demand: H(j, i) = (-1)^popcount(j & i).
class HadamardMatrix {
 public:
  static constexpr std::size_t kMaxOrder = 4096;

  std::size_t order() const noexcept { return order_; }
  int operator()(std::size_t row, std::size_t col) const noexcept {
    return (__builtin_popcountll(row & col) & 1) ? -1 : 1;
  }
  std::vector<int> column(std::size_t col) const;

 private:
  friend HadamardMatrix sylvester(std::size_t n);
  explicit HadamardMatrix(std::size_t n) : order_(n) {}
  std::size_t order_;
};

bool is_power_of_two(std::size_t n) noexcept;

// Throws ValidationError for n that is zero, not a power of two, or > 4096.
HadamardMatrix sylvester(std::size_t n);

// Column-permuted Hadamard sampling pattern. Column i of the pattern is
// column permutation[i] of the base matrix.
class PatternSpec {
 public:
  static constexpr int kDefaultScale = 4;

  // Identity permutation.
  explicit PatternSpec(HadamardMatrix base, int scale = kDefaultScale);
  // Throws ValidationError if `permutation` is not a bijection on 0..n-1 or
  // the run limit is set and violated.
  PatternSpec(HadamardMatrix base, std::vector<std::uint32_t> permutation, std::uint64_t seed,
              std::optional<int> max_run_limit, int scale = kDefaultScale);

  std::size_t order() const noexcept { return base_.order(); }
  const HadamardMatrix& base() const noexcept { return base_; }
  const std::vector<std::uint32_t>& permutation() const noexcept { return perm_; }
  const std::vector<std::uint32_t>& inverse_permutation() const noexcept { return inv_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::optional<int> max_run_limit() const noexcept { return max_run_limit_; }
  int scale() const noexcept { return scale_; }
  bool scrambled() const noexcept;

  // Entry (row, col) of the permuted +-1 matrix.
  int operator()(std::size_t row, std::size_t col) const noexcept { return base_(row, perm_[col]); }
  // 1 where the displayed mirror points at the detector.
  bool on(std::size_t row, std::size_t col) const noexcept { return (*this)(row, col) > 0; }
  // Index of the pattern column showing the all-ones base column.
  std::size_t white_column() const noexcept { return inv_[0]; }
  // Number of "on" pixels in pattern column `col`.
  std::size_t on_count(std::size_t col) const noexcept;

  // Stable digest of the canonical text serialization.
  std::uint64_t digest() const;
  std::string digest_hex() const;

  friend bool operator==(const PatternSpec& a, const PatternSpec& b) {
    return a.order() == b.order() && a.perm_ == b.perm_ && a.seed_ == b.seed_ &&
           a.max_run_limit_ == b.max_run_limit_ && a.scale_ == b.scale_;
  }

 private:
  HadamardMatrix base_;
  std::vector<std::uint32_t> perm_;
  std::vector<std::uint32_t> inv_;
  std::uint64_t seed_ = 0;
  std::optional<int> max_run_limit_;
  int scale_ = kDefaultScale;
};

// Longest constant run along any row of the permuted matrix, excluding the
// all-ones row 0.
int max_row_run(const PatternSpec& p);

// n/16, raised to log2(n)+1 for small orders where n/16 is at or below the
// achievable minimum of log2(n).
int default_max_run(std::size_t n);

struct ScrambleOptions {
  int scale = PatternSpec::kDefaultScale;
  // Restarts from a fresh seeded permutation. Each restart runs a bounded
  // local search.
  int max_attempts = 10000;
  // Cap on candidate swap evaluations across all attempts.
  std::size_t max_evaluations = 20000;
};

// Seeded column scramble with column 0 pinned. Starts from a uniformly drawn
// permutation and repairs runs longer than `max_run_limit` by seeded column
// swaps. Throws InfeasibleError when the budget is exhausted.
PatternSpec scramble(const HadamardMatrix& h, std::uint64_t seed, int max_run_limit,
                     const ScrambleOptions& opts = {});

// Row-major n x n 0/1 mask: +1 -> 1, -1 -> 0.
std::vector<std::uint8_t> to_binary_mask(const PatternSpec& p);

// Text pattern file: magic/version line, key=value header, n rows of '+'/'-'.
void write_pattern(std::ostream& os, const PatternSpec& p);
std::string serialize_pattern(const PatternSpec& p);
PatternSpec read_pattern(std::istream& is);
PatternSpec parse_pattern(const std::string& text);
void save_pattern(const std::string& path, const PatternSpec& p);
PatternSpec load_pattern(const std::string& path);

}  // namespace pushframe
