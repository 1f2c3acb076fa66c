#include "bivlm/bit_packer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <utility>

#include "bivlm/errors.hpp"
#include "bivlm/hybrid.hpp"

namespace bivlm {

namespace {

constexpr int kMaxCodeLength = 63;

struct Decoder {
  std::vector<std::size_t> count;  // per length
  std::vector<std::uint64_t> first;
  std::vector<std::size_t> offset;
  std::vector<std::uint8_t> sorted;
  int max_len = 0;

  explicit Decoder(const CodeBook& book) {
    for (auto l : book.lengths) max_len = std::max<int>(max_len, l);
    count.assign(static_cast<std::size_t>(max_len) + 1, 0);
    first.assign(count.size(), 0);
    offset.assign(count.size(), 0);
    for (auto l : book.lengths)
      if (l > 0) ++count[l];
    for (int len = 1; len <= max_len; ++len)
      for (std::size_t s = 0; s < book.lengths.size(); ++s)
        if (book.lengths[s] == len) sorted.push_back(static_cast<std::uint8_t>(s));
    std::uint64_t code = 0;
    std::size_t off = 0;
    for (int len = 1; len <= max_len; ++len) {
      first[len] = code;
      offset[len] = off;
      code = (code + count[len]) << 1;
      off += count[len];
    }
  }

  std::uint8_t next(BitReader& in) const {
    std::uint64_t code = 0;
    for (int len = 1; len <= max_len; ++len) {
      code = (code << 1) | static_cast<std::uint64_t>(in.read_bit());
      const std::uint64_t idx = code - first[len];
      if (code >= first[len] && idx < count[len]) return sorted[offset[len] + idx];
    }
    throw FormatError("bit pattern does not match any code");
  }
};

void assign_canonical(CodeBook& book) {
  book.codes.assign(book.lengths.size(), 0);
  std::vector<std::size_t> order;
  for (std::size_t s = 0; s < book.lengths.size(); ++s)
    if (book.lengths[s] > 0) order.push_back(s);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return book.lengths[a] < book.lengths[b]; });
  std::uint64_t code = 0;
  int prev = order.empty() ? 0 : book.lengths[order.front()];
  for (auto s : order) {
    code <<= (book.lengths[s] - prev);
    prev = book.lengths[s];
    book.codes[s] = code++;
  }
}

}  // namespace

int max_partitions(int l_i_max) {
  if (l_i_max < 2 || l_i_max > 8)
    throw DomainError("L_i,max must lie in [2, 8], got " + std::to_string(l_i_max));
  return (1 << l_i_max) - 3;
}

double index_bits(int n_uns, double p_sal_max, double p_uns, int l_i_max) {
  if (n_uns < 1) throw DomainError("N_uns must be >= 1");
  if (std::abs(p_uns - (1.0 - p_sal_max) / n_uns) > 1e-9)
    throw DomainError("p_uns must equal (1 - p_sal_max)/N_uns");
  double weighted = 0.0;
  for (int eta = 1; eta <= l_i_max; ++eta) {
    const double two_eta = std::ldexp(1.0, eta);
    weighted += eta * std::max(0.0, std::min(two_eta, n_uns - two_eta + 1.0));
  }
  return weighted * p_uns + p_sal_max * l_i_max;
}

double index_bits(int n_uns, double p_sal_max, int l_i_max) {
  if (n_uns < 1) throw DomainError("N_uns must be >= 1");
  return index_bits(n_uns, p_sal_max, (1.0 - p_sal_max) / n_uns, l_i_max);
}

double CodeBook::average_length(std::span<const double> frequencies) const {
  double total = 0.0;
  double bits = 0.0;
  for (std::size_t s = 0; s < frequencies.size() && s < lengths.size(); ++s) {
    total += frequencies[s];
    bits += frequencies[s] * lengths[s];
  }
  return total > 0.0 ? bits / total : 0.0;
}

CodeBook build_codebook(std::span<const double> frequencies) {
  const std::size_t g = frequencies.size();
  if (g == 0 || g > static_cast<std::size_t>(kMaxGroups))
    throw DomainError("codebook needs 1.." + std::to_string(kMaxGroups) + " groups");
  double sum = 0.0;
  for (double f : frequencies) {
    if (!(f >= 0.0) || !std::isfinite(f)) throw DomainError("frequencies must be finite and nonnegative");
    sum += f;
  }
  if (sum <= 0.0) throw DomainError("frequencies must not all be zero");

  CodeBook book;
  book.lengths.assign(g, 0);
  std::vector<std::size_t> used;
  for (std::size_t s = 0; s < g; ++s)
    if (frequencies[s] > 0.0) used.push_back(s);
  if (used.size() == 1) {
    book.only = static_cast<int>(used.front());
    book.codes.assign(g, 0);
    return book;
  }

  struct Node {
    double weight;
    std::size_t min_symbol;
    std::vector<std::size_t> symbols;
  };
  std::vector<Node> live;
  for (auto s : used) live.push_back({frequencies[s], s, {s}});
  auto before = [](const Node& a, const Node& b) {
    return a.weight < b.weight || (a.weight == b.weight && a.min_symbol < b.min_symbol);
  };
  while (live.size() > 1) {
    std::sort(live.begin(), live.end(), before);
    Node merged{live[0].weight + live[1].weight, std::min(live[0].min_symbol, live[1].min_symbol), {}};
    for (int side = 0; side < 2; ++side)
      for (auto s : live[static_cast<std::size_t>(side)].symbols) {
        ++book.lengths[s];
        merged.symbols.push_back(s);
      }
    live.erase(live.begin(), live.begin() + 2);
    live.push_back(std::move(merged));
  }
  assign_canonical(book);
  return book;
}

CodeBook build_codebook(std::span<const std::size_t> counts) {
  std::vector<double> f(counts.begin(), counts.end());
  return build_codebook(f);
}

CodeBook codebook_from_lengths(std::span<const std::uint8_t> lengths, int only) {
  if (lengths.empty() || lengths.size() > static_cast<std::size_t>(kMaxGroups))
    throw FormatError("codebook group count out of range");
  CodeBook book;
  book.lengths.assign(lengths.begin(), lengths.end());
  if (only >= 0) {
    if (static_cast<std::size_t>(only) >= lengths.size()) throw FormatError("single symbol outside codebook");
    if (std::any_of(lengths.begin(), lengths.end(), [](auto l) { return l != 0; }))
      throw FormatError("single-symbol codebook must have zero lengths");
    book.only = only;
    book.codes.assign(lengths.size(), 0);
    return book;
  }
  long double kraft = 0.0L;
  for (auto l : lengths) {
    if (l > kMaxCodeLength) throw FormatError("code length above 63");
    if (l > 0) kraft += std::ldexp(1.0L, -static_cast<int>(l));
  }
  if (kraft > 1.0L) throw FormatError("code lengths violate the Kraft inequality");
  assign_canonical(book);
  return book;
}

double entropy_bits(std::span<const std::size_t> counts) {
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  if (total == 0.0) return 0.0;
  double h = 0.0;
  for (auto c : counts)
    if (c > 0) {
      const double p = static_cast<double>(c) / total;
      h -= p * std::log2(p);
    }
  return h;
}

void BitWriter::write_bit(bool bit) {
  if (bits_ % 8 == 0) bytes_.push_back(0);
  if (bit) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (bits_ % 8));
  ++bits_;
}

void BitWriter::write(std::uint64_t bits, int width) {
  for (int b = width - 1; b >= 0; --b) write_bit(((bits >> b) & 1u) != 0);
}

std::vector<std::uint8_t> BitWriter::finish() {
  bits_ = 0;
  return std::exchange(bytes_, {});
}

bool BitReader::read_bit() {
  if (pos_ >= bytes_.size() * 8) throw TruncationError("bit stream ended early");
  const bool bit = ((bytes_[pos_ / 8] >> (7 - pos_ % 8)) & 1u) != 0;
  ++pos_;
  return bit;
}

std::uint64_t BitReader::read(int width) {
  std::uint64_t v = 0;
  for (int b = 0; b < width; ++b) v = (v << 1) | static_cast<std::uint64_t>(read_bit());
  return v;
}

std::vector<std::uint8_t> pack_stream(std::span<const std::uint8_t> symbols, const CodeBook& book) {
  BitWriter out;
  for (auto s : symbols) {
    if (!book.has(s)) throw DomainError("symbol " + std::to_string(s) + " has no code");
    if (!book.single_symbol()) out.write(book.codes[s], book.lengths[s]);
  }
  return out.finish();
}

std::vector<std::uint8_t> unpack_stream(std::span<const std::uint8_t> bytes, const CodeBook& book,
                                        std::size_t count) {
  if (book.single_symbol()) return std::vector<std::uint8_t>(count, static_cast<std::uint8_t>(book.only));
  std::vector<std::uint8_t> out(count);
  if (count == 0) return out;
  const Decoder dec(book);
  if (dec.max_len == 0) throw FormatError("codebook has no codes");
  BitReader in(bytes);
  for (auto& s : out) s = dec.next(in);
  return out;
}

std::vector<std::uint8_t> pack_fixed(std::span<const std::uint8_t> values, int width) {
  if (width < 1 || width > 8) throw DomainError("fixed code width must lie in [1, 8]");
  BitWriter out;
  for (auto v : values) {
    if (width < 8 && (v >> width) != 0) throw DomainError("code does not fit in " + std::to_string(width) + " bits");
    out.write(v, width);
  }
  return out.finish();
}

std::vector<std::uint8_t> unpack_fixed(std::span<const std::uint8_t> bytes, int width, std::size_t count) {
  if (width < 1 || width > 8) throw DomainError("fixed code width must lie in [1, 8]");
  BitReader in(bytes);
  std::vector<std::uint8_t> out(count);
  for (auto& v : out) v = static_cast<std::uint8_t>(in.read(width));
  return out;
}

std::vector<std::uint8_t> pack_signs(std::span<const std::int8_t> signs) {
  std::vector<std::uint8_t> out((signs.size() + 7) / 8, 0);
  for (std::size_t e = 0; e < signs.size(); ++e)
    if (signs[e] < 0) out[e / 8] |= static_cast<std::uint8_t>(0x80u >> (e % 8));
  return out;
}

std::vector<std::int8_t> unpack_signs(std::span<const std::uint8_t> bytes, std::size_t count) {
  if (bytes.size() < (count + 7) / 8) throw TruncationError("sign stream ended early");
  std::vector<std::int8_t> out(count);
  for (std::size_t e = 0; e < count; ++e)
    out[e] = ((bytes[e / 8] >> (7 - e % 8)) & 1u) ? std::int8_t{-1} : std::int8_t{1};
  return out;
}

IndexStream encode_labels(std::span<const std::uint8_t> labels, std::size_t groups, bool unmasked_default) {
  std::vector<std::size_t> counts(groups, 0);
  for (auto g : labels) {
    if (g >= groups) throw DomainError("label " + std::to_string(g) + " outside the group range");
    ++counts[g];
  }

  IndexStream s;
  s.count = labels.size();
  s.unmasked_default = unmasked_default;
  if (labels.empty()) {
    s.book.lengths.assign(groups, 0);
    s.book.codes.assign(groups, 0);
    return s;
  }

  if (!unmasked_default) {
    s.book = build_codebook(counts);
    s.default_group = s.book.single_symbol() ? static_cast<std::uint8_t>(s.book.only) : 0;
    s.bytes = pack_stream(labels, s.book);
    s.bits = 0;
    for (auto g : labels) s.bits += s.book.lengths[g];
    return s;
  }

  const auto top = std::max_element(counts.begin(), counts.end()) - counts.begin();
  s.default_group = static_cast<std::uint8_t>(top);
  auto rest = counts;
  rest[static_cast<std::size_t>(top)] = 0;
  if (std::all_of(rest.begin(), rest.end(), [](auto c) { return c == 0; })) {
    s.book.lengths.assign(groups, 0);
    s.book.codes.assign(groups, 0);
  } else {
    s.book = build_codebook(rest);
  }
  BitWriter out;
  for (auto g : labels) {
    if (g == s.default_group) {
      out.write_bit(false);
      continue;
    }
    out.write_bit(true);
    if (!s.book.single_symbol()) out.write(s.book.codes[g], s.book.lengths[g]);
  }
  s.bits = out.bit_count();
  s.bytes = out.finish();
  return s;
}

std::vector<std::uint8_t> decode_labels(const IndexStream& stream) {
  if (!stream.unmasked_default) return unpack_stream(stream.bytes, stream.book, stream.count);
  std::vector<std::uint8_t> out(stream.count);
  BitReader in(stream.bytes);
  const bool any_code = std::any_of(stream.book.lengths.begin(), stream.book.lengths.end(),
                                    [](auto l) { return l != 0; });
  std::optional<Decoder> dec;
  if (any_code) dec.emplace(stream.book);
  for (auto& g : out) {
    if (!in.read_bit()) {
      g = stream.default_group;
    } else if (stream.book.single_symbol()) {
      g = static_cast<std::uint8_t>(stream.book.only);
    } else if (dec) {
      g = dec->next(in);
    } else {
      throw FormatError("escape flag set but the codebook is empty");
    }
  }
  return out;
}

StorageBudget storage_budget(std::size_t m, std::size_t n, int n_uns, int n_bits, double p_sal_max,
                             int scale_bits, int l_i_max) {
  if (m == 0 || n == 0) throw DomainError("storage budget needs a nonempty shape");
  if (n_uns < 1) throw DomainError("N_uns must be >= 1");
  if (n_bits < 1) throw DomainError("N_b must be >= 1");
  if (!(p_sal_max >= 0.0 && p_sal_max < 1.0)) throw DomainError("p_sal_max must lie in [0, 1)");
  const double mn = static_cast<double>(m) * static_cast<double>(n);
  StorageBudget b;
  b.L_B = 1.0 + (n_bits - 1) * p_sal_max;
  b.L_a = (static_cast<double>(n_uns) * scale_bits + static_cast<double>(scale_bits) * static_cast<double>(m)) / mn;
  b.L_model = b.L_B + b.L_a;
  b.L_i = index_bits(n_uns, p_sal_max, l_i_max);
  return b;
}

StorageReport storage_report(const QuantizedLayer& layer, int l_i_max) {
  layer.check();
  const auto budget = storage_budget(layer.rows, layer.cols, layer.n_uns, layer.n_bits, layer.p_sal_max,
                                     layer.scale_bits, l_i_max);
  const double mn = static_cast<double>(layer.size());

  StorageReport r;
  r.name = layer.name;
  r.m = layer.rows;
  r.n = layer.cols;
  r.n_uns = layer.n_uns;
  r.n_bits = layer.n_bits;
  r.p_sal_max = layer.p_sal_max;
  r.p_sal_used = layer.p_sal_used;
  r.L_B = budget.L_B;
  r.L_a = budget.L_a;
  r.L_model = budget.L_model;
  r.L_i_formula = budget.L_i;

  const auto counts = layer.group_counts();
  const auto index = encode_labels(layer.labels, layer.groups(), layer.unmasked_default);
  const std::size_t unsalient = layer.size() - counts[kSalient];
  const std::size_t payload_bits = unsalient + counts[kSalient] * static_cast<std::size_t>(layer.n_bits);
  r.L_B_realized = static_cast<double>(payload_bits) / mn;
  r.L_i = static_cast<double>(index.bits) / mn;
  r.index_entropy = entropy_bits(counts);

  const std::size_t sign_bytes = (unsalient + 7) / 8;
  const std::size_t code_bytes = (counts[kSalient] * static_cast<std::size_t>(layer.n_bits) + 7) / 8;
  const std::size_t scalars = layer.rows + static_cast<std::size_t>(layer.n_uns) + layer.salient.grid.centers.size();
  r.realized_total_bits = 8 * (sign_bytes + code_bytes + index.bytes.size()) +
                          static_cast<std::uint64_t>(scalars) * static_cast<std::uint64_t>(layer.scale_bits);
  r.realized_bpw = static_cast<double>(r.realized_total_bits) / mn;

  const double allowance = (static_cast<double>(layer.salient.grid.centers.size()) * layer.scale_bits + 3 * 8) / mn;
  r.within_budget = r.realized_bpw <= r.L_B + r.L_a + r.L_i + allowance + 1e-12;
  return r;
}

StorageReport aggregate_reports(std::span<const StorageReport> reports) {
  StorageReport a;
  a.name = "model";
  double total = 0.0;
  for (const auto& r : reports) {
    const double w = static_cast<double>(r.m) * static_cast<double>(r.n);
    total += w;
    a.p_sal_max += w * r.p_sal_max;
    a.p_sal_used += w * r.p_sal_used;
    a.L_B += w * r.L_B;
    a.L_a += w * r.L_a;
    a.L_model += w * r.L_model;
    a.L_i_formula += w * r.L_i_formula;
    a.L_B_realized += w * r.L_B_realized;
    a.L_i += w * r.L_i;
    a.index_entropy += w * r.index_entropy;
    a.realized_total_bits += r.realized_total_bits;
    a.within_budget = a.within_budget && r.within_budget;
    a.m += r.m * r.n;
  }
  a.n = reports.empty() ? 0 : 1;
  if (total > 0.0) {
    for (double* f : {&a.p_sal_max, &a.p_sal_used, &a.L_B, &a.L_a, &a.L_model, &a.L_i_formula, &a.L_B_realized,
                      &a.L_i, &a.index_entropy})
      *f /= total;
    a.realized_bpw = static_cast<double>(a.realized_total_bits) / total;
  }
  return a;
}

}  // namespace bivlm
