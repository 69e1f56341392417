#include "coxsg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace coxsg {

bool Region::contains(std::span<const double> x) const {
  if (x.size() != lower.size()) return false;
  for (std::size_t j = 0; j < lower.size(); ++j)
    if (x[j] < lower[j] || x[j] > upper[j]) return false;
  return true;
}

Region Region::intersect(const Region& other) const {
  if (other.dim() != dim())
    throw std::invalid_argument("Region::intersect: dimension mismatch");
  Region out;
  out.lower.resize(dim());
  out.upper.resize(dim());
  for (std::size_t j = 0; j < dim(); ++j) {
    out.lower[j] = std::max(lower[j], other.lower[j]);
    out.upper[j] = std::min(upper[j], other.upper[j]);
  }
  return out;
}

bool Region::empty() const {
  for (std::size_t j = 0; j < dim(); ++j)
    if (lower[j] > upper[j]) return true;
  return dim() == 0;
}

double Region::volume() const {
  if (empty()) return 0.0;
  double v = 1.0;
  for (std::size_t j = 0; j < dim(); ++j) v *= upper[j] - lower[j];
  return v;
}

Region Region::whole(std::size_t dim) {
  Region r;
  r.lower.assign(dim, -std::numeric_limits<double>::infinity());
  r.upper.assign(dim, std::numeric_limits<double>::infinity());
  return r;
}

std::size_t SurvivalDataset::n_events() const {
  std::size_t k = 0;
  for (auto e : events) k += e;
  return k;
}

void SurvivalDataset::validate() const {
  const std::size_t n = times.size();
  if (events.size() != n || sort_index.size() != n ||
      x_adjust.rows() != n || x_subgp.rows() != n)
    throw std::invalid_argument("SurvivalDataset: inconsistent row counts");
  if (n == 0) throw std::invalid_argument("SurvivalDataset: empty");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(times[i]) || times[i] < 0.0)
      throw std::invalid_argument("SurvivalDataset: times must be finite and >= 0");
    if (events[i] > 1)
      throw std::invalid_argument("SurvivalDataset: events must be 0 or 1");
    if (i + 1 < n && times[i] > times[i + 1])
      throw std::invalid_argument("SurvivalDataset: times not sorted");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (double v : x_adjust.row(i))
      if (!std::isfinite(v))
        throw std::invalid_argument("SurvivalDataset: non-finite x_adjust");
    for (double v : x_subgp.row(i))
      if (!std::isfinite(v))
        throw std::invalid_argument("SurvivalDataset: non-finite x_subgp");
  }
  // sort_index must be a permutation of the original row ids.
  std::vector<std::size_t> seen(sort_index.begin(), sort_index.end());
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    throw std::invalid_argument("SurvivalDataset: duplicate sort_index entries");
}

SurvivalDataset SurvivalDataset::subset(const std::vector<std::size_t>& rows) const {
  for (std::size_t i = 0; i + 1 < rows.size(); ++i)
    if (rows[i] >= rows[i + 1])
      throw std::invalid_argument("SurvivalDataset::subset: rows must be strictly increasing");
  if (!rows.empty() && rows.back() >= size())
    throw std::invalid_argument("SurvivalDataset::subset: row out of range");
  SurvivalDataset out;
  out.x_adjust = x_adjust.gather(rows);
  out.x_subgp = x_subgp.gather(rows);
  out.times.reserve(rows.size());
  out.events.reserve(rows.size());
  out.sort_index.reserve(rows.size());
  for (std::size_t r : rows) {
    out.times.push_back(times[r]);
    out.events.push_back(events[r]);
    out.sort_index.push_back(sort_index[r]);
  }
  return out;
}

std::vector<std::size_t> SurvivalDataset::rows_in(const Region& region) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < size(); ++i)
    if (region.contains(x_subgp.row(i))) rows.push_back(i);
  return rows;
}

Region SurvivalDataset::bounding_box() const {
  const std::size_t d = x_subgp.cols();
  Region box;
  box.lower.assign(d, std::numeric_limits<double>::infinity());
  box.upper.assign(d, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < size(); ++i) {
    auto row = x_subgp.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      box.lower[j] = std::min(box.lower[j], row[j]);
      box.upper[j] = std::max(box.upper[j], row[j]);
    }
  }
  return box;
}

SurvivalDataset make_dataset(Matrix x_adjust, Matrix x_subgp,
                             std::vector<double> times,
                             std::vector<std::uint8_t> events) {
  const std::size_t n = times.size();
  if (events.size() != n || x_adjust.rows() != n || x_subgp.rows() != n)
    throw std::invalid_argument("make_dataset: inconsistent row counts");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  SurvivalDataset out;
  out.x_adjust = x_adjust.gather(order);
  out.x_subgp = x_subgp.gather(order);
  out.times.reserve(n);
  out.events.reserve(n);
  for (std::size_t r : order) {
    out.times.push_back(times[r]);
    out.events.push_back(events[r]);
  }
  out.sort_index = std::move(order);
  out.validate();
  return out;
}

void tie_structure(const std::vector<double>& times,
                   std::vector<std::int32_t>& first_tied,
                   std::vector<std::int32_t>& strict_after) {
  const std::int32_t n = static_cast<std::int32_t>(times.size());
  first_tied.resize(n);
  strict_after.resize(n);
  std::int32_t i = 0;
  while (i < n) {
    std::int32_t j = i;
    while (j < n && times[j] == times[i]) ++j;
    for (std::int32_t k = i; k < j; ++k) {
      first_tied[k] = i;
      strict_after[k] = j;
    }
    i = j;
  }
}

}  // namespace coxsg
