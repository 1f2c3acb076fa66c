#include "bivlm/weight_matrix.hpp"

#include <cmath>

#include "bivlm/errors.hpp"

namespace bivlm {

std::string_view role_name(Role role) {
  switch (role) {
    case Role::kVision:
      return "vision";
    case Role::kLanguage:
      return "language";
    case Role::kAdaptor:
      return "adaptor";
  }
  return "unknown";
}

Role parse_role(std::string_view text) {
  if (text == "vision") return Role::kVision;
  if (text == "language") return Role::kLanguage;
  if (text == "adaptor") return Role::kAdaptor;
  throw ValueError("unknown role \"" + std::string(text) + "\" (expected vision, language or adaptor)");
}

WeightMatrix::WeightMatrix(std::string name, Role role, std::size_t rows, std::size_t cols,
                           std::vector<float> data)
    : name_(std::move(name)), role_(role), rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_)
    throw ValueError("matrix '" + name_ + "': " + std::to_string(data_.size()) + " values for shape " +
                     std::to_string(rows_) + "x" + std::to_string(cols_));
  for (std::size_t e = 0; e < data_.size(); ++e)
    if (!std::isfinite(data_[e]))
      throw ValueError("matrix '" + name_ + "': non-finite value at element " + std::to_string(e));
}

double frobenius_sq(const WeightMatrix& w) {
  double s = 0.0;
  for (float v : w.data()) s += static_cast<double>(v) * v;
  return s;
}

double frobenius_sq_diff(const WeightMatrix& a, const WeightMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ValueError("shape mismatch in frobenius_sq_diff");
  double s = 0.0;
  for (std::size_t e = 0; e < a.size(); ++e) {
    const double d = static_cast<double>(a.data()[e]) - b.data()[e];
    s += d * d;
  }
  return s;
}

}  // namespace bivlm
