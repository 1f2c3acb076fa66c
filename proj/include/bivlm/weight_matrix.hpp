#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bivlm {

/// Model component a layer belongs to. Selects the default salient budget.
enum class Role : std::uint8_t { kVision = 0, kLanguage = 1, kAdaptor = 2 };

std::string_view role_name(Role role);
/// Parses "vision", "language" or "adaptor"; throws ValueError otherwise.
Role parse_role(std::string_view text);

/// Dense row-major m×n weight matrix with layer metadata.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  /// Throws ValueError if data.size() != rows*cols or any value is non-finite.
  WeightMatrix(std::string name, Role role, std::size_t rows, std::size_t cols, std::vector<float> data);

  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }
  Role role() const { return role_; }
  void set_role(Role role) { role_ = role; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<const float> data() const { return data_; }
  std::span<const float> row(std::size_t i) const { return std::span<const float>(data_).subspan(i * cols_, cols_); }
  float operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

 private:
  std::string name_;
  Role role_ = Role::kLanguage;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

/// Squared Frobenius norm, accumulated in double.
double frobenius_sq(const WeightMatrix& w);

/// Squared Frobenius norm of (a - b). Shapes must match.
double frobenius_sq_diff(const WeightMatrix& a, const WeightMatrix& b);

}  // namespace bivlm
