#include "context_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "binary_io.hpp"
#include "error.hpp"

namespace genjscc {

// ---------------------------------------------------------------------------
// CountTable

const CountRow* CountTable::find(std::uint64_t context) const {
  auto it = rows_.find(context);
  return it == rows_.end() ? nullptr : &it->second;
}

void CountTable::increment(std::uint64_t context, std::uint32_t symbol, std::uint32_t by) {
  auto& row = rows_[context];
  auto it = std::lower_bound(row.begin(), row.end(), symbol,
                             [](const CountEntry& e, std::uint32_t s) { return e.symbol < s; });
  if (it != row.end() && it->symbol == symbol) {
    require(it->count <= std::numeric_limits<std::uint32_t>::max() - by, ErrorKind::kRange,
            "context count overflow");
    it->count += by;
  } else {
    row.insert(it, CountEntry{symbol, by});
  }
}

std::uint64_t CountTable::total(std::uint64_t context) const {
  const CountRow* row = find(context);
  std::uint64_t t = 0;
  if (row)
    for (const auto& e : *row) t += e.count;
  return t;
}

std::uint32_t CountTable::count(std::uint64_t context, std::uint32_t symbol) const {
  const CountRow* row = find(context);
  if (!row) return 0;
  auto it = std::lower_bound(row->begin(), row->end(), symbol,
                             [](const CountEntry& e, std::uint32_t s) { return e.symbol < s; });
  return (it != row->end() && it->symbol == symbol) ? it->count : 0;
}

// ---------------------------------------------------------------------------
// QuantizedPmf

void QuantizedPmf::assign(std::span<const CountEntry> row, std::uint32_t alphabet,
                          std::uint32_t alpha_q) {
  alphabet_ = alphabet;
  specials_.clear();
  const std::uint64_t budget = kPmfTotal - alphabet;
  std::uint64_t total = 0;
  for (const auto& e : row) total += e.count;
  using u128 = unsigned __int128;
  const u128 denom = (u128(total) << kPmfBits) + u128(alphabet) * alpha_q;

  unseen_weight_ = 1 + static_cast<std::uint32_t>(u128(alpha_q) * budget / denom);
  std::uint64_t sum = std::uint64_t{unseen_weight_} * (alphabet - row.size());

  std::size_t arg = 0;
  std::uint32_t best = 0;
  specials_.reserve(row.size() + 1);
  for (std::size_t i = 0; i < row.size(); ++i) {
    const u128 n = (u128(row[i].count) << kPmfBits) + alpha_q;
    auto w = 1 + static_cast<std::uint32_t>(n * budget / denom);
    specials_.push_back({row[i].symbol, w});
    sum += w;
    if (row[i].count > best) {
      best = row[i].count;
      arg = i;
    }
  }
  const auto remainder = static_cast<std::uint32_t>(kPmfTotal - sum);
  if (row.empty()) {
    specials_.push_back({0, unseen_weight_ + remainder});
  } else {
    specials_[arg].weight += remainder;
  }
}

std::uint32_t QuantizedPmf::weight(std::uint32_t s) const {
  for (const auto& sp : specials_) {
    if (sp.symbol == s) return sp.weight;
    if (sp.symbol > s) break;
  }
  return unseen_weight_;
}

std::uint32_t QuantizedPmf::cumulative(std::uint32_t s) const {
  std::uint32_t cum = 0;
  std::uint32_t prev = 0;
  for (const auto& sp : specials_) {
    if (sp.symbol >= s) break;
    cum += (sp.symbol - prev) * unseen_weight_ + sp.weight;
    prev = sp.symbol + 1;
  }
  return cum + (s - prev) * unseen_weight_;
}

std::uint32_t QuantizedPmf::find(std::uint32_t target, std::uint32_t& cum,
                                 std::uint32_t& freq) const {
  std::uint32_t acc = 0;
  std::uint32_t prev = 0;
  auto in_gap = [&](std::uint32_t gap_end, std::uint32_t& out) {
    const std::uint32_t span = (gap_end - prev) * unseen_weight_;
    if (target < acc + span) {
      std::uint32_t j = (target - acc) / unseen_weight_;
      out = prev + j;
      cum = acc + j * unseen_weight_;
      freq = unseen_weight_;
      return true;
    }
    acc += span;
    return false;
  };
  std::uint32_t s = 0;
  for (const auto& sp : specials_) {
    if (in_gap(sp.symbol, s)) return s;
    if (target < acc + sp.weight) {
      cum = acc;
      freq = sp.weight;
      return sp.symbol;
    }
    acc += sp.weight;
    prev = sp.symbol + 1;
  }
  if (in_gap(alphabet_, s)) return s;
  fail(ErrorKind::kCorrupt, "cumulative target outside the distribution");
}

Pmf QuantizedPmf::dense() const {
  Pmf p{std::vector<std::uint32_t>(alphabet_, unseen_weight_)};
  for (const auto& sp : specials_) p.weights[sp.symbol] = sp.weight;
  return p;
}

std::uint32_t QuantizedPmf::mode(std::uint32_t& weight) const {
  std::uint32_t lowest_unseen = 0;
  for (const auto& sp : specials_) {
    if (sp.symbol != lowest_unseen) break;
    ++lowest_unseen;
  }
  std::uint32_t best_s = 0;
  std::uint32_t best_w = 0;
  if (lowest_unseen < alphabet_) {
    best_s = lowest_unseen;
    best_w = unseen_weight_;
  }
  for (const auto& sp : specials_)
    if (sp.weight > best_w || (sp.weight == best_w && sp.symbol < best_s)) {
      best_w = sp.weight;
      best_s = sp.symbol;
    }
  weight = best_w;
  return best_s;
}

std::uint32_t alpha_to_fixed(double alpha) {
  require(std::isfinite(alpha) && alpha > 0.0, ErrorKind::kParameter, "smoothing alpha must be > 0");
  double q = std::round(alpha * kPmfTotal);
  require(q >= 1.0 && q <= 4294967295.0, ErrorKind::kParameter,
          "smoothing alpha outside the representable fixed-point range");
  return static_cast<std::uint32_t>(q);
}

namespace {

void check_alphabet(std::uint32_t a) {
  require(a >= 2 && a <= kMaxAlphabet, ErrorKind::kParameter,
          "alphabet size must lie in [2, " + std::to_string(kMaxAlphabet) + "]");
}

void merge_rows(const CountRow* a, const CountRow* b, CountRow& out) {
  out.clear();
  if (!a && !b) return;
  if (!b) {
    out = *a;
    return;
  }
  if (!a) {
    out = *b;
    return;
  }
  auto i = a->begin();
  auto j = b->begin();
  while (i != a->end() || j != b->end()) {
    if (j == b->end() || (i != a->end() && i->symbol < j->symbol)) {
      out.push_back(*i++);
    } else if (i == a->end() || j->symbol < i->symbol) {
      out.push_back(*j++);
    } else {
      out.push_back({i->symbol, i->count + j->count});
      ++i;
      ++j;
    }
  }
}

struct Triple {
  std::uint64_t context;
  std::uint32_t symbol;
  std::uint32_t count;
};

std::vector<std::uint8_t> serialize_model(ModelKind kind, std::uint32_t alphabet,
                                          std::uint32_t arity, std::uint32_t alpha_q,
                                          const std::vector<Triple>& triples) {
  ByteWriter w;
  w.bytes("GJCM");
  w.u8(1);
  w.u8(static_cast<std::uint8_t>(kind));
  w.u32(alphabet);
  w.u32(arity);
  w.u32(alpha_q);
  w.u64(triples.size());
  for (const auto& t : triples) {
    w.u64(t.context);
    w.u32(t.symbol);
    w.u32(t.count);
  }
  return w.take();
}

struct ParsedModel {
  ModelKind kind;
  std::uint32_t alphabet;
  std::uint32_t arity;
  std::uint32_t alpha_q;
  std::vector<Triple> triples;
};

ParsedModel parse_model(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "model");
  r.magic("GJCM");
  auto version = r.u8("version");
  require(version == 1, ErrorKind::kFormat, "model: unsupported version " + std::to_string(version));
  ParsedModel m;
  auto kind = r.u8("kind");
  require(kind <= 1, ErrorKind::kFormat, "model: unknown kind byte " + std::to_string(kind));
  m.kind = static_cast<ModelKind>(kind);
  m.alphabet = r.u32("alphabet");
  m.arity = r.u32("order");
  m.alpha_q = r.u32("alpha");
  require(m.alpha_q >= 1, ErrorKind::kFormat, "model: alpha must be positive");
  auto n = r.u64("triple count");
  require(n <= r.remaining() / 16, ErrorKind::kFormat, "model: truncated count table");
  m.triples.resize(n);
  for (auto& t : m.triples) {
    t.context = r.u64("context");
    t.symbol = r.u32("symbol");
    t.count = r.u32("count");
    require(t.symbol < m.alphabet, ErrorKind::kFormat, "model: symbol outside alphabet");
    require(t.count > 0, ErrorKind::kFormat, "model: zero count stored");
  }
  require(r.remaining() == 0, ErrorKind::kFormat, "model: trailing bytes");
  return m;
}

}  // namespace

ModelKind peek_model_kind(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "model");
  r.magic("GJCM");
  r.u8("version");
  auto kind = r.u8("kind");
  require(kind <= 1, ErrorKind::kFormat, "model: unknown kind byte " + std::to_string(kind));
  return static_cast<ModelKind>(kind);
}

// ---------------------------------------------------------------------------
// CausalContextModel

CausalContextModel::CausalContextModel(std::uint32_t alphabet, std::uint32_t order, double alpha)
    : alphabet_(alphabet), order_(order), alpha_q_(alpha_to_fixed(alpha)),
      frozen_(std::make_shared<CountTable>()) {
  check_alphabet(alphabet);
  // (A+1)^k must fit in 64 bits.
  double bits = order * std::log2(double(alphabet) + 1.0);
  require(bits < 63.0, ErrorKind::kParameter, "context order too large for this alphabet");
}

void CausalContextModel::check_symbol(std::uint32_t s, const char* what) const {
  if (s >= alphabet_)
    fail(ErrorKind::kRange, std::string(what) + ": symbol " + std::to_string(s) +
                                " outside alphabet of size " + std::to_string(alphabet_));
}

std::uint64_t CausalContextModel::context_key(std::span<const std::uint32_t> context) const {
  require(context.size() == order_, ErrorKind::kParameter, "context length must equal model order");
  std::uint64_t key = 0;
  for (std::size_t i = context.size(); i-- > 0;) {
    std::uint32_t s = context[i];
    if (s != kAbsent) check_symbol(s, "context");
    key = key * (alphabet_ + 1ull) + (s == kAbsent ? alphabet_ : s);
  }
  return key;
}

std::uint64_t CausalContextModel::context_key_at(std::span<const std::uint32_t> symbols,
                                                 std::size_t pos, std::size_t row_length) const {
  const std::size_t row_start = row_length ? pos - pos % row_length : 0;
  std::uint64_t key = 0;
  for (std::size_t i = order_; i-- > 0;) {
    // i-th most recent symbol
    std::uint64_t digit = alphabet_;
    if (pos >= row_start + i + 1) digit = symbols[pos - i - 1];
    key = key * (alphabet_ + 1ull) + digit;
  }
  return key;
}

void CausalContextModel::merged_row(std::uint64_t key, CountRow& out) const {
  merge_rows(frozen_->find(key), live_.find(key), out);
}

void CausalContextModel::pmf_for_key(std::uint64_t key, QuantizedPmf& out) const {
  const CountRow* a = frozen_->find(key);
  const CountRow* b = live_.find(key);
  if (a && b) {
    thread_local CountRow scratch;
    merge_rows(a, b, scratch);
    out.assign(scratch, alphabet_, alpha_q_);
  } else if (a || b) {
    out.assign(a ? *a : *b, alphabet_, alpha_q_);
  } else {
    out.assign({}, alphabet_, alpha_q_);
  }
}

Pmf CausalContextModel::pmf(std::span<const std::uint32_t> context) const {
  QuantizedPmf q;
  pmf_for_key(context_key(context), q);
  return q.dense();
}

void CausalContextModel::update(std::span<const std::uint32_t> context, std::uint32_t symbol) {
  update_key(context_key(context), symbol);
}

void CausalContextModel::update_key(std::uint64_t key, std::uint32_t symbol) {
  check_symbol(symbol, "update");
  live_.increment(key, symbol);
  hash_.reset();
}

std::uint64_t CausalContextModel::count(std::span<const std::uint32_t> context,
                                        std::uint32_t symbol) const {
  auto key = context_key(context);
  return std::uint64_t{frozen_->count(key, symbol)} + live_.count(key, symbol);
}

void CausalContextModel::observe_sequence(std::span<const std::uint32_t> symbols,
                                          std::size_t row_length) {
  for (auto s : symbols) check_symbol(s, "train");
  for (std::size_t i = 0; i < symbols.size(); ++i)
    live_.increment(context_key_at(symbols, i, row_length), symbols[i]);
  hash_.reset();
}

void CausalContextModel::train(std::span<const TokenGrid> corpus) {
  require(!corpus.empty(), ErrorKind::kParameter, "train: empty corpus");
  for (const auto& g : corpus) observe_sequence(g.tokens, static_cast<std::size_t>(g.cols));
  freeze();
}

double CausalContextModel::sequence_cost_bits(std::span<const std::uint32_t> symbols,
                                              std::size_t row_length) const {
  QuantizedPmf q;
  double bits = 0.0;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    check_symbol(symbols[i], "cross_entropy");
    pmf_for_key(context_key_at(symbols, i, row_length), q);
    bits -= std::log2(double(q.weight(symbols[i])) / kPmfTotal);
  }
  return bits;
}

double CausalContextModel::cross_entropy(const TokenGrid& grid) const {
  require(grid.missing_count() == 0, ErrorKind::kParameter, "cross_entropy: grid has missing tokens");
  return sequence_cost_bits(grid.tokens, static_cast<std::size_t>(grid.cols)) /
         static_cast<double>(grid.size());
}

void CausalContextModel::freeze() {
  if (live_.empty()) return;
  auto merged = std::make_shared<CountTable>(*frozen_);
  for (const auto& [ctx, row] : live_.rows())
    for (const auto& e : row) merged->increment(ctx, e.symbol, e.count);
  frozen_ = std::move(merged);
  live_ = CountTable{};
}

std::vector<std::uint8_t> CausalContextModel::serialize() const {
  std::vector<std::uint64_t> keys;
  keys.reserve(frozen_->context_count() + live_.context_count());
  for (const auto& [k, row] : frozen_->rows()) keys.push_back(k);
  for (const auto& [k, row] : live_.rows())
    if (!frozen_->find(k)) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  std::vector<Triple> triples;
  CountRow row;
  for (auto k : keys) {
    merged_row(k, row);
    for (const auto& e : row) triples.push_back({k, e.symbol, e.count});
  }
  return serialize_model(ModelKind::kCausal, alphabet_, order_, alpha_q_, triples);
}

std::uint64_t CausalContextModel::descriptor_hash() const {
  if (!hash_) hash_ = fnv1a64(serialize());
  return *hash_;
}

CausalContextModel CausalContextModel::deserialize(std::span<const std::uint8_t> bytes) {
  auto m = parse_model(bytes);
  require(m.kind == ModelKind::kCausal, ErrorKind::kFormat, "model: expected a causal model");
  require(m.alphabet >= 2 && m.alphabet <= kMaxAlphabet, ErrorKind::kFormat, "model: bad alphabet");
  CausalContextModel model(m.alphabet, m.arity, double(m.alpha_q) / kPmfTotal);
  model.alpha_q_ = m.alpha_q;
  for (const auto& t : m.triples) model.live_.increment(t.context, t.symbol, t.count);
  model.freeze();
  return model;
}

void CausalContextModel::save(const std::string& path) const { write_file(path, serialize()); }
CausalContextModel CausalContextModel::load(const std::string& path) {
  return deserialize(read_file(path));
}

// ---------------------------------------------------------------------------
// NeighborhoodModel

NeighborhoodModel::NeighborhoodModel(std::uint32_t alphabet, double alpha)
    : alphabet_(alphabet), alpha_q_(alpha_to_fixed(alpha)) {
  check_alphabet(alphabet);
}

void NeighborhoodModel::check_neighbor(std::uint32_t s) const {
  if (s != kAbsent && s >= alphabet_)
    fail(ErrorKind::kRange, "neighbor symbol " + std::to_string(s) + " outside alphabet of size " +
                                std::to_string(alphabet_));
}

std::uint64_t NeighborhoodModel::key(const Neighbors& n) const {
  const std::uint64_t base = alphabet_ + 1ull;
  auto digit = [&](std::uint32_t s) {
    check_neighbor(s);
    return s == kAbsent ? std::uint64_t{alphabet_} : std::uint64_t{s};
  };
  return ((digit(n.up) * base + digit(n.left)) * base + digit(n.right)) * base + digit(n.down);
}

std::uint64_t NeighborhoodModel::resolve(const Neighbors& n) const {
  Neighbors cur = n;
  for (;;) {
    const std::uint64_t k = key(cur);
    if (table_.find(k)) return k;
    std::uint32_t* slots[4] = {&cur.up, &cur.left, &cur.right, &cur.down};
    int best = -1;
    std::uint64_t best_total = 0;
    for (int i = 0; i < 4; ++i) {
      if (*slots[i] == kAbsent) continue;
      std::uint32_t saved = *slots[i];
      *slots[i] = kAbsent;
      std::uint64_t t = table_.total(key(cur));
      *slots[i] = saved;
      if (best < 0 || t > best_total) {
        best = i;
        best_total = t;
      }
    }
    if (best < 0) return k;  // all absent and untrained: uniform
    *slots[best] = kAbsent;
  }
}

void NeighborhoodModel::pmf_into(const Neighbors& n, QuantizedPmf& out) const {
  const CountRow* row = table_.find(resolve(n));
  if (row) out.assign(*row, alphabet_, alpha_q_);
  else out.assign({}, alphabet_, alpha_q_);
}

Pmf NeighborhoodModel::pmf(const Neighbors& n) const {
  QuantizedPmf q;
  pmf_into(n, q);
  return q.dense();
}

void NeighborhoodModel::update(const Neighbors& n, std::uint32_t symbol) {
  if (symbol >= alphabet_)
    fail(ErrorKind::kRange, "update: symbol " + std::to_string(symbol) + " outside alphabet");
  table_.increment(key(n), symbol);
}

NeighborhoodModel::Neighbors NeighborhoodModel::neighbors_of(const TokenGrid& grid, int r, int c) {
  auto get = [&](int rr, int cc) {
    if (rr < 0 || cc < 0 || rr >= grid.rows || cc >= grid.cols || grid.is_missing(rr, cc))
      return kAbsent;
    return grid.at(rr, cc);
  };
  return Neighbors{get(r - 1, c), get(r, c - 1), get(r, c + 1), get(r + 1, c)};
}

void NeighborhoodModel::train(std::span<const TokenGrid> corpus) {
  require(!corpus.empty(), ErrorKind::kParameter, "train: empty corpus");
  for (const auto& g : corpus)
    for (auto t : g.tokens)
      if (t >= alphabet_) fail(ErrorKind::kRange, "train: token outside alphabet");
  for (const auto& g : corpus) {
    for (int r = 0; r < g.rows; ++r)
      for (int c = 0; c < g.cols; ++c) {
        if (g.is_missing(r, c)) continue;
        const Neighbors full = neighbors_of(g, r, c);
        const std::uint32_t vals[4] = {full.up, full.left, full.right, full.down};
        unsigned present = 0;
        for (int i = 0; i < 4; ++i)
          if (vals[i] != kAbsent) present |= 1u << i;
        // every subset of the present neighbors
        for (unsigned mask = present;; mask = (mask - 1) & present) {
          Neighbors n;
          n.up = (mask & 1u) ? vals[0] : kAbsent;
          n.left = (mask & 2u) ? vals[1] : kAbsent;
          n.right = (mask & 4u) ? vals[2] : kAbsent;
          n.down = (mask & 8u) ? vals[3] : kAbsent;
          table_.increment(key(n), g.at(r, c));
          if (mask == 0) break;
        }
      }
  }
}

std::uint64_t NeighborhoodModel::count(const Neighbors& n, std::uint32_t symbol) const {
  return table_.count(key(n), symbol);
}

std::uint64_t NeighborhoodModel::marginal_total() const { return table_.total(key(Neighbors{})); }

std::vector<std::uint8_t> NeighborhoodModel::serialize() const {
  std::vector<std::uint64_t> keys;
  for (const auto& [k, row] : table_.rows()) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  std::vector<Triple> triples;
  for (auto k : keys)
    for (const auto& e : *table_.find(k)) triples.push_back({k, e.symbol, e.count});
  return serialize_model(ModelKind::kNeighborhood, alphabet_, 4, alpha_q_, triples);
}

std::uint64_t NeighborhoodModel::descriptor_hash() const { return fnv1a64(serialize()); }

NeighborhoodModel NeighborhoodModel::deserialize(std::span<const std::uint8_t> bytes) {
  auto m = parse_model(bytes);
  require(m.kind == ModelKind::kNeighborhood, ErrorKind::kFormat, "model: expected a neighborhood model");
  require(m.arity == 4, ErrorKind::kFormat, "model: neighborhood arity must be 4");
  require(m.alphabet >= 2 && m.alphabet <= kMaxAlphabet, ErrorKind::kFormat, "model: bad alphabet");
  NeighborhoodModel model(m.alphabet, double(m.alpha_q) / kPmfTotal);
  model.alpha_q_ = m.alpha_q;
  for (const auto& t : m.triples) model.table_.increment(t.context, t.symbol, t.count);
  return model;
}

void NeighborhoodModel::save(const std::string& path) const { write_file(path, serialize()); }
NeighborhoodModel NeighborhoodModel::load(const std::string& path) {
  return deserialize(read_file(path));
}

}  // namespace genjscc
