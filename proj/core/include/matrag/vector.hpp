#pragma once

#include <span>
#include <vector>

namespace matrag {

// Dense embedding. Components are finite; dimension is fixed per index.
class Vector {
 public:
  Vector() = default;
  // Throws ValidationError on an empty or non-finite input.
  explicit Vector(std::vector<double> components);

  std::size_t dimension() const { return components_.size(); }
  bool empty() const { return components_.empty(); }
  std::span<const double> components() const { return components_; }
  double operator[](std::size_t i) const { return components_[i]; }
  double norm() const;

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> components_;
};

}  // namespace matrag
