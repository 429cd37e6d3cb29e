#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "token_grid.hpp"

namespace genjscc {

inline constexpr std::uint32_t kPmfBits = 16;
inline constexpr std::uint32_t kPmfTotal = 1u << kPmfBits;
inline constexpr std::uint32_t kMaxAlphabet = 32768;
// Context position with no symbol (row start, grid border, lost neighbor).
inline constexpr std::uint32_t kAbsent = 0xFFFFFFFFu;

// Fixed-point probability mass function; weights >= 1 summing to 2^16.
struct Pmf {
  std::vector<std::uint32_t> weights;

  std::size_t size() const { return weights.size(); }
  double probability(std::uint32_t s) const { return double(weights.at(s)) / kPmfTotal; }
};

struct CountEntry {
  std::uint32_t symbol;
  std::uint32_t count;
};
using CountRow = std::vector<CountEntry>;  // sorted by symbol, counts > 0

// Sparse context -> symbol count table.
class CountTable {
 public:
  const CountRow* find(std::uint64_t context) const;
  void increment(std::uint64_t context, std::uint32_t symbol, std::uint32_t by = 1);
  std::uint64_t total(std::uint64_t context) const;
  std::uint32_t count(std::uint64_t context, std::uint32_t symbol) const;
  bool empty() const { return rows_.empty(); }
  std::size_t context_count() const { return rows_.size(); }
  const std::unordered_map<std::uint64_t, CountRow>& rows() const { return rows_; }

 private:
  std::unordered_map<std::uint64_t, CountRow> rows_;
};

// Quantizes (count + alpha) / (total + alpha A) to 2^16 fixed point:
//   w_s = 1 + floor(n_s (2^16 - A) / D),   n_s = count_s 2^16 + alpha_q
// and the leftover mass goes to the most probable symbol (lowest index on
// ties). Symbols absent from the row share one weight, so cumulative
// lookups cost O(distinct symbols seen) rather than O(A).
class QuantizedPmf {
 public:
  QuantizedPmf() = default;
  void assign(std::span<const CountEntry> row, std::uint32_t alphabet, std::uint32_t alpha_q);

  std::uint32_t alphabet() const { return alphabet_; }
  std::uint32_t weight(std::uint32_t s) const;
  std::uint32_t cumulative(std::uint32_t s) const;
  /// Symbol whose interval [cum, cum+freq) contains target (< 2^16).
  std::uint32_t find(std::uint32_t target, std::uint32_t& cum, std::uint32_t& freq) const;
  Pmf dense() const;
  /// Most probable symbol (lowest index on ties) and its weight.
  std::uint32_t mode(std::uint32_t& weight) const;

 private:
  struct Special {
    std::uint32_t symbol;
    std::uint32_t weight;
  };
  std::uint32_t alphabet_ = 0;
  std::uint32_t unseen_weight_ = 0;
  std::vector<Special> specials_;
};

std::uint32_t alpha_to_fixed(double alpha);

enum class ModelKind : std::uint8_t { kCausal = 0, kNeighborhood = 1 };

// Order-k raster-scan context model. Counts live in an immutable shared
// table plus a private table of updates, so copies start cheaply from a
// trained state.
class CausalContextModel {
 public:
  CausalContextModel(std::uint32_t alphabet, std::uint32_t order, double alpha = 1.0);

  std::uint32_t alphabet() const { return alphabet_; }
  std::uint32_t order() const { return order_; }
  std::uint32_t alpha_q() const { return alpha_q_; }
  double alpha() const { return double(alpha_q_) / kPmfTotal; }

  /// `context` lists the k preceding symbols, most recent first; kAbsent
  /// marks positions before the start of the row.
  std::uint64_t context_key(std::span<const std::uint32_t> context) const;
  /// Context of position `pos` in `symbols`, history reset every
  /// `row_length` symbols (0 = one row).
  std::uint64_t context_key_at(std::span<const std::uint32_t> symbols, std::size_t pos,
                               std::size_t row_length) const;

  Pmf pmf(std::span<const std::uint32_t> context) const;
  void pmf_for_key(std::uint64_t key, QuantizedPmf& out) const;

  void update(std::span<const std::uint32_t> context, std::uint32_t symbol);
  void update_key(std::uint64_t key, std::uint32_t symbol);
  std::uint64_t count(std::span<const std::uint32_t> context, std::uint32_t symbol) const;

  void train(std::span<const TokenGrid> corpus);
  /// Accumulates counts along a symbol sequence with the given row length.
  void observe_sequence(std::span<const std::uint32_t> symbols, std::size_t row_length);

  /// Mean -log2 p(token | context) in bits/token, raster order, no adaptation.
  double cross_entropy(const TokenGrid& grid) const;
  double sequence_cost_bits(std::span<const std::uint32_t> symbols, std::size_t row_length) const;

  /// Hash of the canonical serialized state.
  std::uint64_t descriptor_hash() const;
  /// Folds private updates into a fresh shared table.
  void freeze();

  std::vector<std::uint8_t> serialize() const;
  static CausalContextModel deserialize(std::span<const std::uint8_t> bytes);
  void save(const std::string& path) const;
  static CausalContextModel load(const std::string& path);

 private:
  void merged_row(std::uint64_t key, CountRow& out) const;
  void check_symbol(std::uint32_t s, const char* what) const;

  std::uint32_t alphabet_;
  std::uint32_t order_;
  std::uint32_t alpha_q_;
  std::shared_ptr<const CountTable> frozen_;
  CountTable live_;
  mutable std::optional<std::uint64_t> hash_;
};

// Bidirectional 4-neighbor model. Each cell is counted under every masking
// of its present neighbors, so the all-absent configuration is the marginal
// histogram and each partial configuration has its own table.
class NeighborhoodModel {
 public:
  struct Neighbors {
    std::uint32_t up = kAbsent;
    std::uint32_t left = kAbsent;
    std::uint32_t right = kAbsent;
    std::uint32_t down = kAbsent;
  };

  explicit NeighborhoodModel(std::uint32_t alphabet, double alpha = 1.0);

  std::uint32_t alphabet() const { return alphabet_; }
  std::uint32_t alpha_q() const { return alpha_q_; }

  std::uint64_t key(const Neighbors& n) const;
  /// Key actually used after backing off to configurations with counts.
  std::uint64_t resolve(const Neighbors& n) const;
  Pmf pmf(const Neighbors& n) const;
  void pmf_into(const Neighbors& n, QuantizedPmf& out) const;

  void update(const Neighbors& n, std::uint32_t symbol);
  void train(std::span<const TokenGrid> corpus);
  /// Neighbors of (r, c) in `grid`, treating missing cells as absent.
  static Neighbors neighbors_of(const TokenGrid& grid, int r, int c);

  std::uint64_t count(const Neighbors& n, std::uint32_t symbol) const;
  std::uint64_t marginal_total() const;
  std::size_t context_count() const { return table_.context_count(); }

  std::uint64_t descriptor_hash() const;
  std::vector<std::uint8_t> serialize() const;
  static NeighborhoodModel deserialize(std::span<const std::uint8_t> bytes);
  void save(const std::string& path) const;
  static NeighborhoodModel load(const std::string& path);

 private:
  void check_neighbor(std::uint32_t s) const;

  std::uint32_t alphabet_;
  std::uint32_t alpha_q_;
  CountTable table_;
};

/// Reads the kind byte of a serialized model.
ModelKind peek_model_kind(std::span<const std::uint8_t> bytes);

}  // namespace genjscc
