#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "scband/error.hpp"
#include "scband/log.hpp"

namespace scband {

struct Subject {
  std::vector<double> x;
  std::vector<double> y;

  std::size_t size() const { return x.size(); }
};

/// Ragged longitudinal sample {(X_ij, Y_ij)} with design points in [0,1].
class ObservationSet {
 public:
  ObservationSet() = default;
  explicit ObservationSet(std::vector<Subject> subjects) : subjects_(std::move(subjects)) {
    validate();
  }

  const std::vector<Subject>& subjects() const { return subjects_; }
  const Subject& operator[](std::size_t i) const { return subjects_[i]; }

  std::size_t n() const { return subjects_.size(); }
  std::size_t total_obs() const { return total_; }
  /// Mean number of observations per subject.
  double mean_count() const { return static_cast<double>(total_) / static_cast<double>(n()); }

 private:
  void validate() {
    if (subjects_.empty()) fail(ErrorCode::EmptyDataset, "observation set has no subjects");
    total_ = 0;
    std::size_t singletons = 0;
    for (std::size_t i = 0; i < subjects_.size(); ++i) {
      const Subject& s = subjects_[i];
      if (s.x.size() != s.y.size())
        fail(ErrorCode::InvalidArgument, "subject " + std::to_string(i) + ": x and y lengths differ");
      if (s.x.empty())
        fail(ErrorCode::InvalidArgument, "subject " + std::to_string(i) + " has no observations");
      for (std::size_t j = 0; j < s.x.size(); ++j) {
        if (!(s.x[j] >= 0.0 && s.x[j] <= 1.0))
          fail(ErrorCode::Domain, "subject " + std::to_string(i) + ": design point outside [0,1]");
        if (!std::isfinite(s.y[j]))
          fail(ErrorCode::InvalidArgument, "subject " + std::to_string(i) + ": non-finite response");
      }
      if (s.x.size() == 1) ++singletons;
      total_ += s.x.size();
    }
    if (singletons > 0)
      warn(std::to_string(singletons) +
           " subject(s) have a single observation; they enter the fit and the diagonal "
           "covariance term only");
  }

  std::vector<Subject> subjects_;
  std::size_t total_ = 0;
};

}  // namespace scband
