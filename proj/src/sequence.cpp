#include "taumix/sequence.hpp"

#include <stdexcept>

namespace taumix {

ObservationSequence::ObservationSequence(std::size_t dim, std::vector<double> values,
                                         std::string label)
    : dim_(dim), values_(std::move(values)), label_(std::move(label)) {
  if (dim_ == 0 && !values_.empty())
    throw std::invalid_argument("ObservationSequence: dimension must be at least 1");
  if (dim_ != 0 && values_.size() % dim_ != 0)
    throw std::invalid_argument("ObservationSequence: value count is not a multiple of the dimension");
}

ObservationSequence ObservationSequence::from_rows(const std::vector<std::vector<double>>& rows,
                                                   std::string label) {
  ObservationSequence seq;
  seq.label_ = std::move(label);
  for (const auto& r : rows) seq.push_back(r);
  return seq;
}

ObservationSequence ObservationSequence::from_scalars(std::span<const double> xs,
                                                      std::string label) {
  return ObservationSequence(1, std::vector<double>(xs.begin(), xs.end()), std::move(label));
}

void ObservationSequence::push_back(std::span<const double> row) {
  if (row.empty()) throw std::invalid_argument("ObservationSequence: empty row");
  if (dim_ == 0) {
    dim_ = row.size();
  } else if (row.size() != dim_) {
    throw std::invalid_argument("ObservationSequence: row dimension mismatch");
  }
  values_.insert(values_.end(), row.begin(), row.end());
}

}  // namespace taumix
