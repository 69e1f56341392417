// Survival data container and axis-aligned regions.
//
// A SurvivalDataset keeps two feature views of the same rows: x_adjust feeds
// the Cox model, x_subgp defines subgroups.  Rows are stored sorted by
// non-decreasing time; sort_index maps each stored row back to the row index
// the dataset was constructed with, so subsets keep a paper trail to the
// original file.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "coxsg/matrix.hpp"

namespace coxsg {

// Closed axis-aligned box; +-inf bounds are allowed.
struct Region {
  std::vector<double> lower, upper;

  std::size_t dim() const { return lower.size(); }
  bool contains(std::span<const double> x) const;
  // Intersection; may produce an empty box (some lower > upper).
  Region intersect(const Region& other) const;
  bool empty() const;
  // Product of side lengths of the box clipped to nothing; 0 if empty.
  double volume() const;

  static Region whole(std::size_t dim);
};

struct SurvivalDataset {
  Matrix x_adjust;                      // n x d1, rows sorted by time
  Matrix x_subgp;                       // n x d2, same row order
  std::vector<double> times;            // non-decreasing
  std::vector<std::uint8_t> events;     // 1 = event observed, 0 = censored
  std::vector<std::size_t> sort_index;  // stored row i came from original row sort_index[i]

  std::size_t size() const { return times.size(); }
  std::size_t d_adjust() const { return x_adjust.cols(); }
  std::size_t d_subgp() const { return x_subgp.cols(); }
  std::size_t n_events() const;

  // Throws std::invalid_argument on any broken invariant.
  void validate() const;

  // Subset by stored-row indices given in increasing order (keeps time order).
  SurvivalDataset subset(const std::vector<std::size_t>& rows) const;

  // Stored-row indices whose x_subgp lies in the region, in increasing order.
  std::vector<std::size_t> rows_in(const Region& region) const;

  // Bounding box of x_subgp.
  Region bounding_box() const;
};

// Sorts rows by time (stable, so equal times keep input order) and validates.
SurvivalDataset make_dataset(Matrix x_adjust, Matrix x_subgp,
                             std::vector<double> times,
                             std::vector<std::uint8_t> events);

// first_tied[i] = smallest j with times[j] == times[i] (start of i's tie block);
// strict_after[i] = smallest j with times[j] > times[i] (n if none).
void tie_structure(const std::vector<double>& times,
                   std::vector<std::int32_t>& first_tied,
                   std::vector<std::int32_t>& strict_after);

}  // namespace coxsg
