#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace drama {

using PhysAddr = std::uint64_t;

inline constexpr unsigned kAddressBits = 40;
inline constexpr std::uint64_t kAddressLimit = std::uint64_t{1} << kAddressBits;

/// Set of physical-address bit indices (0..39), packed into one word.
/// Evaluating a mask on an address XORs the selected address bits.
class BitMask {
 public:
  constexpr BitMask() = default;
  constexpr explicit BitMask(std::uint64_t raw) : raw_(raw & (kAddressLimit - 1)) {}
  BitMask(std::initializer_list<unsigned> bits);

  /// Throws InvalidConfig on any index >= 40.
  static BitMask from_bits(std::span<const unsigned> bits);
  /// Contiguous range [lo, hi].
  static BitMask range(unsigned lo, unsigned hi);

  constexpr std::uint64_t raw() const { return raw_; }
  constexpr bool empty() const { return raw_ == 0; }
  constexpr unsigned weight() const { return static_cast<unsigned>(std::popcount(raw_)); }
  constexpr bool test(unsigned bit) const { return bit < kAddressBits && ((raw_ >> bit) & 1u); }
  constexpr bool subset_of(BitMask other) const { return (raw_ & ~other.raw_) == 0; }

  std::vector<unsigned> bits() const;
  /// "a13 ⊕ a17"; the empty mask renders as "0".
  std::string to_string() const;

  constexpr BitMask operator^(BitMask o) const { return BitMask(raw_ ^ o.raw_); }
  constexpr BitMask operator&(BitMask o) const { return BitMask(raw_ & o.raw_); }
  constexpr BitMask operator|(BitMask o) const { return BitMask(raw_ | o.raw_); }
  constexpr BitMask &operator^=(BitMask o) { raw_ ^= o.raw_; return *this; }
  constexpr auto operator<=>(const BitMask &) const = default;

 private:
  std::uint64_t raw_ = 0;
};

constexpr unsigned eval_mask(BitMask mask, PhysAddr addr) {
  return static_cast<unsigned>(std::popcount(mask.raw() & addr)) & 1u;
}

/// Over-determined GF(2) system: find a mask m with eval_mask(m, addresses[i]) == rhs[i].
/// Only bits inside `universe` are unknowns; address bits outside it are ignored.
struct Gf2System {
  std::vector<PhysAddr> addresses;
  std::vector<unsigned> rhs;
  BitMask universe = BitMask::range(0, kAddressBits - 1);

  void add(PhysAddr addr, unsigned value) {
    addresses.push_back(addr);
    rhs.push_back(value & 1u);
  }
};

/// Gaussian elimination, lowest-index pivot first. The result is re-substituted
/// into every equation before it is returned.
/// Throws Inconsistent, or Underdetermined listing the free bits.
BitMask solve_system(const Gf2System &sys);

/// Free bits of the system (empty when the solution is unique); throws Inconsistent.
std::vector<unsigned> free_bits(const Gf2System &sys);

/// All masks with exactly `weight` bits drawn from `universe`, lexicographic order.
std::vector<BitMask> enumerate_masks(BitMask universe, unsigned weight);

/// Lazily walks the same sequence as enumerate_masks.
class MaskCombinations {
 public:
  MaskCombinations(BitMask universe, unsigned weight);
  /// Writes the next mask into `out`; false once exhausted.
  bool next(BitMask &out);

 private:
  std::vector<unsigned> bits_;
  std::vector<unsigned> idx_;
  bool done_ = false;
  bool started_ = false;
};

std::size_t gf2_rank(std::span<const BitMask> masks);

/// Greedy basis extraction after sorting by (weight, value): lower weight wins.
std::vector<BitMask> reduce_to_independent(std::vector<BitMask> masks);

bool spans_equal(std::span<const BitMask> a, std::span<const BitMask> b);

bool in_span(std::span<const BitMask> basis, BitMask m);

/// Basis of { v in span(masks) : v uses only bits in `allowed` }.
std::vector<BitMask> restrict_span(std::span<const BitMask> masks, BitMask allowed);

}  // namespace drama
