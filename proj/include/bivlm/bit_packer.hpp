#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bivlm {

struct QuantizedLayer;

/// 2^L_i_max - 3. Throws DomainError for L_i_max < 2 or > 8.
int max_partitions(int l_i_max);

/// Fixed-schedule index cost in bits per index:
///   [sum_{eta=1..L} eta·max(0, min(2^eta, N_uns - 2^eta + 1))]·p_uns + p_sal_max·L.
/// Throws DomainError if p_uns != (1 - p_sal_max)/N_uns (to 1e-9) or N_uns < 1.
double index_bits(int n_uns, double p_sal_max, double p_uns, int l_i_max);
double index_bits(int n_uns, double p_sal_max, int l_i_max);

/// Canonical prefix code over G symbols. A zero length means the symbol
/// never occurs, except in a single-symbol book where `only` is that symbol
/// and it costs no bits.
struct CodeBook {
  std::vector<std::uint8_t> lengths;
  std::vector<std::uint64_t> codes;
  int only = -1;

  std::size_t groups() const { return lengths.size(); }
  bool single_symbol() const { return only >= 0; }
  bool has(std::size_t symbol) const {
    return symbol < lengths.size() && (lengths[symbol] > 0 || only == static_cast<int>(symbol));
  }
  /// Expected bits per symbol under the given frequencies.
  double average_length(std::span<const double> frequencies) const;
};

/// Huffman lengths from the frequencies (ties merge the subtree holding the
/// lower symbol first), then canonical codes ordered by (length, symbol).
/// Throws DomainError on negative or all-zero frequencies, or G > 64.
CodeBook build_codebook(std::span<const double> frequencies);
CodeBook build_codebook(std::span<const std::size_t> counts);

/// Rebuilds the canonical codes from stored lengths. Throws FormatError if
/// the lengths do not form a prefix code.
CodeBook codebook_from_lengths(std::span<const std::uint8_t> lengths, int only = -1);

/// Shannon entropy in bits of a count vector.
double entropy_bits(std::span<const std::size_t> counts);

/// MSB-first bit sink; finish() zero-pads to a byte boundary.
class BitWriter {
 public:
  void write(std::uint64_t bits, int width);
  void write_bit(bool bit);
  std::size_t bit_count() const { return bits_; }
  std::vector<std::uint8_t> finish();

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t bits_ = 0;
};

/// MSB-first bit source. Reading past the end throws TruncationError.
class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  bool read_bit();
  std::uint64_t read(int width);
  std::size_t position() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> pack_stream(std::span<const std::uint8_t> symbols, const CodeBook& book);
std::vector<std::uint8_t> unpack_stream(std::span<const std::uint8_t> bytes, const CodeBook& book, std::size_t count);

/// Fixed-width codes, `width` bits each (1..8).
std::vector<std::uint8_t> pack_fixed(std::span<const std::uint8_t> values, int width);
std::vector<std::uint8_t> unpack_fixed(std::span<const std::uint8_t> bytes, int width, std::size_t count);

/// One bit per sign: 0 for +1, 1 for -1.
std::vector<std::uint8_t> pack_signs(std::span<const std::int8_t> signs);
std::vector<std::int8_t> unpack_signs(std::span<const std::uint8_t> bytes, std::size_t count);

/// Packed group-index stream. In unmasked-default mode each element costs a
/// flag bit, and only elements outside `default_group` carry a code from
/// `book` (built over the remaining groups).
struct IndexStream {
  std::vector<std::uint8_t> bytes;
  CodeBook book;
  bool unmasked_default = false;
  std::uint8_t default_group = 0;
  std::size_t count = 0;
  std::size_t bits = 0;  // before padding
};

IndexStream encode_labels(std::span<const std::uint8_t> labels, std::size_t groups, bool unmasked_default);
std::vector<std::uint8_t> decode_labels(const IndexStream& stream);

/// Closed-form budget of a layer shape.
struct StorageBudget {
  double L_B = 0.0;  // 1 + (N_b - 1)·p_sal_max
  double L_a = 0.0;  // (N_uns·w + w·m) / (m·n), w = scale width
  double L_model = 0.0;
  double L_i = 0.0;  // fixed-schedule index formula
};

StorageBudget storage_budget(std::size_t m, std::size_t n, int n_uns, int n_bits, double p_sal_max,
                             int scale_bits = 16, int l_i_max = 3);

struct StorageReport {
  std::string name;
  std::size_t m = 0;
  std::size_t n = 0;
  int n_uns = 0;
  int n_bits = 0;
  double p_sal_max = 0.0;
  double p_sal_used = 0.0;
  double L_B = 0.0;  // closed-form bound
  double L_a = 0.0;
  double L_model = 0.0;
  double L_i_formula = 0.0;
  double L_B_realized = 0.0;   // sign and code bits per weight
  double L_i = 0.0;            // realized index bits per weight
  double index_entropy = 0.0;  // entropy of the label stream, bits per weight
  std::uint64_t realized_total_bits = 0;  // every packed stream plus all scales and centers
  double realized_bpw = 0.0;
  bool within_budget = true;

  /// L_model + L_i: the predicted whole-layer cost including the index stream.
  double predicted_bpw() const { return L_model + L_i; }
};

/// Packs the layer's streams and measures them against the closed form.
/// The budget flag fails when realized_bpw exceeds L_B + L_a + L_i plus the
/// center table and byte padding.
StorageReport storage_report(const QuantizedLayer& layer, int l_i_max = 3);

/// Weight-count-weighted mean of every per-weight field; totals are summed.
StorageReport aggregate_reports(std::span<const StorageReport> reports);

}  // namespace bivlm
