#include "pushframe/pattern.hpp"

#include <bit>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "pushframe/error.hpp"
#include "pushframe/util.hpp"

namespace pushframe {

namespace {

constexpr std::string_view kPatternMagic = "pushframe-pattern v1";

std::vector<std::uint32_t> invert(const std::vector<std::uint32_t>& perm) {
  std::vector<std::uint32_t> inv(perm.size(), 0);
  std::vector<bool> seen(perm.size(), false);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (perm[i] >= perm.size() || seen[perm[i]]) {
      throw ValidationError("column permutation is not a bijection on 0.." +
                            std::to_string(perm.size() - 1));
    }
    seen[perm[i]] = true;
    inv[perm[i]] = static_cast<std::uint32_t>(i);
  }
  return inv;
}

// Row-major 0/1 copy of the permuted matrix used by the run-length search.
class RunGrid {
 public:
  RunGrid(std::size_t n, const std::vector<std::uint32_t>& perm, int limit)
      : n_(n), limit_(limit), bits_(n * n) {
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) bits_[j * n + i] = __builtin_popcountll(j & perm[i]) & 1;
  }

  std::uint8_t at(std::size_t j, std::size_t i) const { return bits_[j * n_ + i]; }

  void swap_columns(std::size_t a, std::size_t b) {
    for (std::size_t j = 0; j < n_; ++j) std::swap(bits_[j * n_ + a], bits_[j * n_ + b]);
  }

  // [start, end) of the run containing column p in row j.
  std::pair<std::size_t, std::size_t> run_at(std::size_t j, std::size_t p) const {
    const std::uint8_t v = at(j, p);
    std::size_t lo = p, hi = p + 1;
    while (lo > 0 && at(j, lo - 1) == v) --lo;
    while (hi < n_ && at(j, hi) == v) ++hi;
    return {lo, hi};
  }

  long excess(std::size_t len) const {
    return len > static_cast<std::size_t>(limit_) ? static_cast<long>(len) - limit_ : 0;
  }

  // Excess of the distinct runs in row j that touch the neighbourhoods of a and b.
  long local_excess(std::size_t j, std::size_t a, std::size_t b) const {
    std::pair<std::size_t, std::size_t> runs[6];
    int count = 0;
    long total = 0;
    for (std::size_t c : {a, b}) {
      for (int d = -1; d <= 1; ++d) {
        if ((c == 0 && d < 0) || c + d >= n_) continue;
        const auto r = run_at(j, c + d);
        bool dup = false;
        for (int k = 0; k < count; ++k) dup |= runs[k] == r;
        if (!dup) {
          runs[count++] = r;
          total += excess(r.second - r.first);
        }
      }
    }
    return total;
  }

  long swap_delta(std::size_t a, std::size_t b) {
    long before = 0;
    for (std::size_t j = 1; j < n_; ++j) before += local_excess(j, a, b);
    swap_columns(a, b);
    long after = 0;
    for (std::size_t j = 1; j < n_; ++j) after += local_excess(j, a, b);
    swap_columns(a, b);
    return after - before;
  }

  // Violating runs as (row, middle column), plus total excess and longest run.
  struct Scan {
    std::vector<std::pair<std::size_t, std::size_t>> violations;
    long cost = 0;
    int longest = 0;
  };
  Scan scan() const {
    Scan s;
    for (std::size_t j = 1; j < n_; ++j) {
      std::size_t start = 0;
      for (std::size_t i = 1; i <= n_; ++i) {
        if (i == n_ || at(j, i) != at(j, start)) {
          const std::size_t len = i - start;
          s.longest = std::max(s.longest, static_cast<int>(len));
          if (const long e = excess(len); e > 0) {
            s.cost += e;
            s.violations.emplace_back(j, start + len / 2);
          }
          start = i;
        }
      }
    }
    return s;
  }

 private:
  std::size_t n_;
  int limit_;
  std::vector<std::uint8_t> bits_;
};

}  // namespace

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

std::vector<int> HadamardMatrix::column(std::size_t col) const {
  std::vector<int> out(order_);
  for (std::size_t j = 0; j < order_; ++j) out[j] = (*this)(j, col);
  return out;
}

HadamardMatrix sylvester(std::size_t n) {
  if (!is_power_of_two(n) || n > HadamardMatrix::kMaxOrder) {
    throw ValidationError(fmt::format("invalid Hadamard order {}: must be a power of two in [1, {}]",
                                      n, HadamardMatrix::kMaxOrder));
  }
  return HadamardMatrix(n);
}

PatternSpec::PatternSpec(HadamardMatrix base, int scale)
    : base_(base), perm_(base.order()), inv_(base.order()), scale_(scale) {
  if (scale < 1) throw ValidationError("pattern scale must be a positive integer");
  std::iota(perm_.begin(), perm_.end(), 0u);
  inv_ = perm_;
}

PatternSpec::PatternSpec(HadamardMatrix base, std::vector<std::uint32_t> permutation,
                         std::uint64_t seed, std::optional<int> max_run_limit, int scale)
    : base_(base), perm_(std::move(permutation)), seed_(seed), max_run_limit_(max_run_limit),
      scale_(scale) {
  if (scale < 1) throw ValidationError("pattern scale must be a positive integer");
  if (perm_.size() != base_.order()) {
    throw ValidationError(fmt::format("permutation has {} entries, pattern order is {}",
                                      perm_.size(), base_.order()));
  }
  inv_ = invert(perm_);
  if (max_run_limit_) {
    if (*max_run_limit_ < 1) throw ValidationError("max_run_limit must be positive");
    if (const int run = max_row_run(*this); run > *max_run_limit_) {
      throw ValidationError(
          fmt::format("pattern violates max_run_limit {}: longest row run is {}", *max_run_limit_, run));
    }
  }
}

bool PatternSpec::scrambled() const noexcept {
  for (std::size_t i = 0; i < perm_.size(); ++i)
    if (perm_[i] != i) return true;
  return false;
}

std::size_t PatternSpec::on_count(std::size_t col) const noexcept {
  // Every non-DC Sylvester column is balanced.
  return perm_[col] == 0 ? order() : order() / 2;
}

int default_max_run(std::size_t n) {
  const int log2n = n >= 2 ? std::countr_zero(n) : 1;
  return std::max({2, static_cast<int>(n / 16), log2n + 1});
}

int max_row_run(const PatternSpec& p) {
  const std::size_t n = p.order();
  int longest = 0;
  for (std::size_t j = 1; j < n; ++j) {
    int run = 1;
    for (std::size_t i = 1; i < n; ++i) {
      run = p(j, i) == p(j, i - 1) ? run + 1 : 1;
      longest = std::max(longest, run);
    }
    longest = std::max(longest, run);
  }
  return longest;
}

PatternSpec scramble(const HadamardMatrix& h, std::uint64_t seed, int max_run_limit,
                     const ScrambleOptions& opts) {
  if (max_run_limit < 2) throw ValidationError("max_run_limit must be >= 2");
  const std::size_t n = h.order();
  int best = std::numeric_limits<int>::max();
  std::size_t evaluations = 0;
  // A run of length L+1 in some row exists iff L consecutive XOR-differences
  // of adjacent column indices fail to span GF(2)^k, so no permutation beats
  // k = log2(n).
  const int lower_bound = n >= 4 ? std::countr_zero(n) : 1;
  const int attempts = max_run_limit < lower_bound ? 1 : opts.max_attempts;

  for (int attempt = 0; attempt < attempts && evaluations < opts.max_evaluations; ++attempt) {
    KeyedRng rng = KeyedRng::from(seed, 0x5c4a3b1e, attempt);
    std::vector<std::uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    // Fisher-Yates over columns 1..n-1; column 0 stays the all-ones column.
    for (std::size_t i = n - 1; i > 1; --i) {
      const std::size_t k = 1 + rng.below(i);
      std::swap(perm[i], perm[k]);
    }
    if (n <= 2) return PatternSpec(h, perm, seed, max_run_limit, opts.scale);

    RunGrid grid(n, perm, max_run_limit);
    auto scan = grid.scan();
    long stall = 0;
    // Local repair: move a column out of the middle of each violating run.
    while (scan.cost > 0 && stall < 4) {
      const long before = scan.cost;
      for (const auto& [row, mid] : scan.violations) {
        const auto run = grid.run_at(row, mid);
        if (grid.excess(run.second - run.first) == 0 || mid == 0) continue;
        std::size_t best_q = 0;
        long best_delta = 1;
        for (int trial = 0; trial < 8; ++trial) {
          const std::size_t q = 1 + rng.below(n - 1);
          if (q == mid) continue;
          const long d = grid.swap_delta(mid, q);
          ++evaluations;
          if (d < best_delta) {
            best_delta = d;
            best_q = q;
          }
        }
        if (best_q != 0) {
          grid.swap_columns(mid, best_q);
          std::swap(perm[mid], perm[best_q]);
        }
      }
      scan = grid.scan();
      stall = scan.cost < before ? 0 : stall + 1;
    }
    best = std::min(best, scan.longest);
    if (scan.cost == 0) return PatternSpec(h, std::move(perm), seed, max_run_limit, opts.scale);
  }
  throw InfeasibleError(fmt::format("no column permutation of order {} with row runs <= {} found "
                                    "(search budget exhausted, provable minimum {}); smallest achieved "
                                    "run length {}",
                                    n, max_run_limit, lower_bound, best),
                        best);
}

std::vector<std::uint8_t> to_binary_mask(const PatternSpec& p) {
  const std::size_t n = p.order();
  std::vector<std::uint8_t> mask(n * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) mask[j * n + i] = p.on(j, i) ? 1 : 0;
  return mask;
}

void write_pattern(std::ostream& os, const PatternSpec& p) { os << serialize_pattern(p); }

std::string serialize_pattern(const PatternSpec& p) {
  const std::size_t n = p.order();
  std::string out;
  out.reserve(n * (n + 8) + 64);
  out += kPatternMagic;
  out += '\n';
  out += fmt::format("order={}\nseed={}\nmax_run_limit={}\nscale={}\npermutation=", n, p.seed(),
                     p.max_run_limit() ? std::to_string(*p.max_run_limit()) : "none", p.scale());
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ',';
    out += std::to_string(p.permutation()[i]);
  }
  out += '\n';
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) out += p.on(j, i) ? '+' : '-';
    out += '\n';
  }
  return out;
}

std::uint64_t PatternSpec::digest() const { return fnv1a64(serialize_pattern(*this)); }
std::string PatternSpec::digest_hex() const { return hex64(digest()); }

PatternSpec parse_pattern(const std::string& text) {
  std::size_t pos = 0;
  auto next_line = [&](std::string_view what) {
    if (pos >= text.size()) throw FormatError(fmt::format("pattern file truncated: expected {}", what), pos);
    const std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) throw FormatError(fmt::format("pattern file: unterminated {}", what), pos);
    std::string line = text.substr(pos, eol - pos);
    const std::size_t start = pos;
    pos = eol + 1;
    return std::pair{line, start};
  };
  auto field = [&](std::string_view key) {
    auto [line, at] = next_line(key);
    if (line.size() <= key.size() || line.compare(0, key.size(), key) != 0 || line[key.size()] != '=') {
      throw FormatError(fmt::format("pattern file: expected '{}=' header", key), at);
    }
    return std::pair{line.substr(key.size() + 1), at};
  };
  auto to_u64 = [](const std::string& s, std::size_t at) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() || s[0] == '-') throw FormatError("pattern file: bad integer '" + s + "'", at);
    return static_cast<std::uint64_t>(v);
  };

  if (auto [magic, at] = next_line("magic"); magic != kPatternMagic) {
    throw FormatError("not a pattern file (bad magic line)", at);
  }
  const auto [order_s, order_at] = field("order");
  const std::uint64_t order = to_u64(order_s, order_at);
  const auto [seed_s, seed_at] = field("seed");
  const std::uint64_t seed = to_u64(seed_s, seed_at);
  const auto [limit_s, limit_at] = field("max_run_limit");
  std::optional<int> limit;
  if (limit_s != "none") limit = static_cast<int>(to_u64(limit_s, limit_at));
  const auto [scale_s, scale_at] = field("scale");
  const int scale = static_cast<int>(to_u64(scale_s, scale_at));
  const auto [perm_s, perm_at] = field("permutation");

  HadamardMatrix h = [&] {
    try {
      return sylvester(order);
    } catch (const ValidationError& e) {
      throw FormatError(std::string("pattern file: ") + e.what(), order_at);
    }
  }();
  std::vector<std::uint32_t> perm;
  perm.reserve(order);
  std::size_t start = 0;
  while (start <= perm_s.size()) {
    const std::size_t comma = std::min(perm_s.find(',', start), perm_s.size());
    perm.push_back(static_cast<std::uint32_t>(to_u64(perm_s.substr(start, comma - start), perm_at)));
    start = comma + 1;
  }
  if (perm.size() != order) {
    throw FormatError(fmt::format("pattern file: permutation has {} entries, order is {}", perm.size(), order),
                      perm_at);
  }

  std::optional<PatternSpec> spec;
  try {
    spec.emplace(h, std::move(perm), seed, limit, scale);
  } catch (const ValidationError& e) {
    throw FormatError(std::string("pattern file: ") + e.what(), perm_at);
  }
  for (std::size_t j = 0; j < order; ++j) {
    auto [row, at] = next_line("pattern row");
    if (row.size() != order) throw FormatError(fmt::format("pattern row {} has wrong length", j), at);
    for (std::size_t i = 0; i < order; ++i) {
      const char want = spec->on(j, i) ? '+' : '-';
      if (row[i] != want) {
        throw FormatError(fmt::format("pattern row {} column {} disagrees with header permutation", j, i), at + i);
      }
    }
  }
  if (pos != text.size()) throw FormatError("pattern file: trailing data", pos);
  return *std::move(spec);
}

PatternSpec read_pattern(std::istream& is) {
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_pattern(ss.str());
}

void save_pattern(const std::string& path, const PatternSpec& p) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  write_pattern(os, p);
  if (!os) throw FormatError("failed writing " + path);
}

PatternSpec load_pattern(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open pattern file " + path);
  return read_pattern(is);
}

}  // namespace pushframe
