#include <algorithm>
#include <sstream>

#include "drama/bitmask.hpp"
#include "drama/error.hpp"

namespace drama {

BitMask::BitMask(std::initializer_list<unsigned> bits) {
  *this = from_bits(std::span<const unsigned>(bits.begin(), bits.size()));
}

BitMask BitMask::from_bits(std::span<const unsigned> bits) {
  std::uint64_t raw = 0;
  for (unsigned b : bits) {
    if (b >= kAddressBits) {
      throw Error(ErrorKind::InvalidConfig,
                  "address bit " + std::to_string(b) + " exceeds the 40-bit address space");
    }
    raw |= std::uint64_t{1} << b;
  }
  return BitMask(raw);
}

BitMask BitMask::range(unsigned lo, unsigned hi) {
  if (hi >= kAddressBits || lo > hi) return BitMask();
  std::uint64_t upper = (hi == 63) ? ~std::uint64_t{0} : ((std::uint64_t{1} << (hi + 1)) - 1);
  std::uint64_t lower = (std::uint64_t{1} << lo) - 1;
  return BitMask(upper & ~lower);
}

std::vector<unsigned> BitMask::bits() const {
  std::vector<unsigned> out;
  for (std::uint64_t r = raw_; r != 0; r &= r - 1) {
    out.push_back(static_cast<unsigned>(std::countr_zero(r)));
  }
  return out;
}

std::string BitMask::to_string() const {
  if (empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (unsigned b : bits()) {
    if (!first) os << " ⊕ ";
    os << 'a' << b;
    first = false;
  }
  return os.str();
}

namespace {

constexpr std::uint64_t kRhsBit = std::uint64_t{1} << 63;

struct Echelon {
  std::vector<std::uint64_t> rows;  // reduced rows, rhs in bit 63
  std::vector<unsigned> pivots;     // pivot column per leading row
  bool inconsistent = false;
};

Echelon eliminate(const Gf2System &sys) {
  if (sys.addresses.size() != sys.rhs.size()) {
    throw Error(ErrorKind::InvalidConfig, "equation count and right-hand-side count differ");
  }
  Echelon e;
  e.rows.reserve(sys.addresses.size());
  const std::uint64_t universe = sys.universe.raw();
  for (std::size_t i = 0; i < sys.addresses.size(); ++i) {
    e.rows.push_back((sys.addresses[i] & universe) | (sys.rhs[i] ? kRhsBit : 0));
  }

  std::size_t rank = 0;
  for (std::uint64_t cols = universe; cols != 0; cols &= cols - 1) {
    const unsigned col = static_cast<unsigned>(std::countr_zero(cols));
    const std::uint64_t bit = std::uint64_t{1} << col;
    auto it = std::find_if(e.rows.begin() + static_cast<std::ptrdiff_t>(rank), e.rows.end(),
                           [bit](std::uint64_t r) { return (r & bit) != 0; });
    if (it == e.rows.end()) continue;
    std::iter_swap(e.rows.begin() + static_cast<std::ptrdiff_t>(rank), it);
    const std::uint64_t pivot = e.rows[rank];
    for (std::size_t r = 0; r < e.rows.size(); ++r) {
      if (r != rank && (e.rows[r] & bit)) e.rows[r] ^= pivot;
    }
    e.pivots.push_back(col);
    ++rank;
  }
  for (std::size_t r = rank; r < e.rows.size(); ++r) {
    if (e.rows[r] == kRhsBit) e.inconsistent = true;
  }
  e.rows.resize(rank);
  return e;
}

std::string join_bits(const std::vector<unsigned> &bits) {
  std::string s;
  for (unsigned b : bits) {
    if (!s.empty()) s += ",";
    s += std::to_string(b);
  }
  return s;
}

}  // namespace

std::vector<unsigned> free_bits(const Gf2System &sys) {
  Echelon e = eliminate(sys);
  if (e.inconsistent) throw Error(ErrorKind::Inconsistent, "no mask satisfies all equations");
  std::uint64_t pivoted = 0;
  for (unsigned p : e.pivots) pivoted |= std::uint64_t{1} << p;
  return BitMask(sys.universe.raw() & ~pivoted).bits();
}

BitMask solve_system(const Gf2System &sys) {
  Echelon e = eliminate(sys);
  if (e.inconsistent) throw Error(ErrorKind::Inconsistent, "no mask satisfies all equations");

  std::uint64_t pivoted = 0;
  for (unsigned p : e.pivots) pivoted |= std::uint64_t{1} << p;
  std::vector<unsigned> free = BitMask(sys.universe.raw() & ~pivoted).bits();
  if (!free.empty()) {
    std::string msg = "solution space has dimension " + std::to_string(free.size()) + "; free bits: " + join_bits(free);
    throw UnderdeterminedError(std::move(msg), std::move(free));
  }

  std::uint64_t solution = 0;
  for (std::size_t r = 0; r < e.rows.size(); ++r) {
    if (e.rows[r] & kRhsBit) solution |= std::uint64_t{1} << e.pivots[r];
  }
  const BitMask mask(solution);
  for (std::size_t i = 0; i < sys.addresses.size(); ++i) {
    if (eval_mask(mask, sys.addresses[i] & sys.universe.raw()) != (sys.rhs[i] & 1u)) {
      throw Error(ErrorKind::Inconsistent, "re-substitution failed for equation " + std::to_string(i));
    }
  }
  return mask;
}

MaskCombinations::MaskCombinations(BitMask universe, unsigned weight) : bits_(universe.bits()) {
  if (weight == 0 || weight > bits_.size()) {
    done_ = true;
    return;
  }
  idx_.resize(weight);
  for (unsigned i = 0; i < weight; ++i) idx_[i] = i;
}

bool MaskCombinations::next(BitMask &out) {
  if (done_) return false;
  const std::size_t k = idx_.size();
  const std::size_t n = bits_.size();
  if (started_) {
    std::size_t i = k;
    while (i > 0 && idx_[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) {
      done_ = true;
      return false;
    }
    ++idx_[i - 1];
    for (std::size_t j = i; j < k; ++j) idx_[j] = idx_[j - 1] + 1;
  }
  started_ = true;
  std::uint64_t raw = 0;
  for (unsigned i : idx_) raw |= std::uint64_t{1} << bits_[i];
  out = BitMask(raw);
  return true;
}

std::vector<BitMask> enumerate_masks(BitMask universe, unsigned weight) {
  std::vector<BitMask> out;
  MaskCombinations gen(universe, weight);
  for (BitMask m; gen.next(m);) out.push_back(m);
  return out;
}

namespace {

// XOR basis keyed by the highest set bit.
class XorBasis {
 public:
  /// Returns true if `m` was independent and has been inserted.
  bool insert(std::uint64_t m) {
    for (int b = static_cast<int>(kAddressBits) - 1; b >= 0 && m != 0; --b) {
      if (!((m >> b) & 1u)) continue;
      if (slot_[b] == 0) {
        slot_[b] = m;
        return true;
      }
      m ^= slot_[b];
    }
    return false;
  }

  bool contains(std::uint64_t m) const {
    for (int b = static_cast<int>(kAddressBits) - 1; b >= 0 && m != 0; --b) {
      if (((m >> b) & 1u) && slot_[b] != 0) m ^= slot_[b];
    }
    return m == 0;
  }

 private:
  std::uint64_t slot_[kAddressBits] = {};
};

}  // namespace

std::size_t gf2_rank(std::span<const BitMask> masks) {
  XorBasis basis;
  std::size_t rank = 0;
  for (BitMask m : masks) rank += basis.insert(m.raw()) ? 1 : 0;
  return rank;
}

std::vector<BitMask> reduce_to_independent(std::vector<BitMask> masks) {
  std::stable_sort(masks.begin(), masks.end(), [](BitMask a, BitMask b) {
    if (a.weight() != b.weight()) return a.weight() < b.weight();
    return a.raw() < b.raw();
  });
  XorBasis basis;
  std::vector<BitMask> out;
  for (BitMask m : masks) {
    if (basis.insert(m.raw())) out.push_back(m);
  }
  return out;
}

bool in_span(std::span<const BitMask> basis, BitMask m) {
  XorBasis b;
  for (BitMask v : basis) b.insert(v.raw());
  return b.contains(m.raw());
}

bool spans_equal(std::span<const BitMask> a, std::span<const BitMask> b) {
  std::vector<BitMask> both(a.begin(), a.end());
  both.insert(both.end(), b.begin(), b.end());
  const std::size_t ra = gf2_rank(a);
  return ra == gf2_rank(b) && ra == gf2_rank(both);
}

std::vector<BitMask> restrict_span(std::span<const BitMask> masks, BitMask allowed) {
  // Echelon form with the disallowed columns eliminated first: rows whose pivot
  // lands in an allowed column are free of every disallowed bit.
  std::vector<std::uint64_t> rows;
  for (BitMask m : masks) rows.push_back(m.raw());
  std::vector<unsigned> order = BitMask(~allowed.raw()).bits();
  for (unsigned b : allowed.bits()) order.push_back(b);

  std::size_t rank = 0;
  for (unsigned col : order) {
    const std::uint64_t bit = std::uint64_t{1} << col;
    auto it = std::find_if(rows.begin() + static_cast<std::ptrdiff_t>(rank), rows.end(),
                           [bit](std::uint64_t r) { return (r & bit) != 0; });
    if (it == rows.end()) continue;
    std::iter_swap(rows.begin() + static_cast<std::ptrdiff_t>(rank), it);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (r != rank && (rows[r] & bit)) rows[r] ^= rows[rank];
    }
    ++rank;
  }
  std::vector<BitMask> out;
  for (std::size_t r = 0; r < rank; ++r) {
    if ((rows[r] & ~allowed.raw()) == 0) out.push_back(BitMask(rows[r]));
  }
  return reduce_to_independent(std::move(out));
}

}  // namespace drama
