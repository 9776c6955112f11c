#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace taumix {

/// Ordered rows x_1..x_T in R^d, stored row-major. Row t (1-based in the
/// mathematical notation) lives at `row(t - 1)`.
///
/// The order carries meaning: trajectory time for rollouts, sampler return
/// order for minibatches.
class ObservationSequence {
 public:
  ObservationSequence() = default;
  ObservationSequence(std::size_t dim, std::vector<double> values, std::string label = {});

  static ObservationSequence from_rows(const std::vector<std::vector<double>>& rows,
                                       std::string label = {});
  static ObservationSequence from_scalars(std::span<const double> xs, std::string label = {});

  std::size_t dim() const { return dim_; }
  std::size_t length() const { return dim_ == 0 ? 0 : values_.size() / dim_; }
  bool empty() const { return length() == 0; }

  std::span<const double> row(std::size_t index) const {
    return {values_.data() + index * dim_, dim_};
  }
  void push_back(std::span<const double> row);

  const std::vector<double>& values() const { return values_; }
  const std::string& label() const { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

  friend bool operator==(const ObservationSequence&, const ObservationSequence&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
  std::string label_;
};

}  // namespace taumix
