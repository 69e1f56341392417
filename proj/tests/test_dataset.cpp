#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"

#include "coxsg/dataset.hpp"

using namespace coxsg;

namespace {

SurvivalDataset tiny_dataset() {
  // Input rows (time, event, adjust, subgp): deliberately unsorted.
  Matrix adj(4, 1, {1.0, 2.0, 3.0, 4.0});
  Matrix sub(4, 2, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8});
  std::vector<double> times{3.0, 1.0, 2.0, 1.0};
  std::vector<std::uint8_t> events{1, 0, 1, 1};
  return make_dataset(std::move(adj), std::move(sub), std::move(times),
                      std::move(events));
}

}  // namespace

TEST_CASE("Matrix element, row and gather access") {
  Matrix m(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(0, 2) == 3.0);
  CHECK(m(1, 0) == 4.0);
  const auto row1 = m.row(1);
  CHECK(row1.size() == 3);
  CHECK(row1[1] == 5.0);
  const Matrix g = m.gather({1, 0});
  CHECK(g(0, 0) == 4.0);
  CHECK(g(1, 2) == 3.0);
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1.0}),
                  std::invalid_argument);
}

TEST_CASE("make_dataset sorts by time, stable on ties") {
  const SurvivalDataset d = tiny_dataset();
  CHECK(d.size() == 4);
  CHECK(d.times == std::vector<double>{1.0, 1.0, 2.0, 3.0});
  // Ties keep input order: input rows 1 and 3 both have time 1.
  CHECK(d.sort_index == std::vector<std::size_t>{1, 3, 2, 0});
  CHECK(d.events == std::vector<std::uint8_t>{0, 1, 1, 1});
  CHECK(d.x_adjust(0, 0) == 2.0);  // from input row 1
  CHECK(d.x_adjust(1, 0) == 4.0);  // from input row 3
  CHECK(d.x_subgp(3, 1) == 0.2);   // input row 0 moved last
  CHECK(d.n_events() == 3);
}

TEST_CASE("make_dataset validation errors") {
  Matrix adj(2, 1), sub(2, 1);
  CHECK_THROWS_AS(
      make_dataset(Matrix(1, 1), Matrix(2, 1), {1.0, 2.0}, {1, 1}),
      std::invalid_argument);
  CHECK_THROWS_AS(make_dataset(adj, sub, {1.0}, {1, 1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_dataset(adj, sub, {1.0, 2.0}, {1, 2}),
                  std::invalid_argument);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(make_dataset(adj, sub, {1.0, nan}, {1, 1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_dataset(Matrix(0, 1), Matrix(0, 1), {}, {}),
                  std::invalid_argument);
}

TEST_CASE("Region contains borders, intersects and measures volume") {
  Region r;
  r.lower = {0.0, -1.0};
  r.upper = {1.0, 1.0};
  CHECK(r.contains(std::vector<double>{0.0, -1.0}));  // closed box
  CHECK(r.contains(std::vector<double>{1.0, 1.0}));
  CHECK(!r.contains(std::vector<double>{1.0001, 0.0}));
  CHECK(r.volume() == doctest::Approx(2.0));
  CHECK(!r.empty());

  Region s;
  s.lower = {0.5, 0.0};
  s.upper = {2.0, 0.5};
  const Region inter = r.intersect(s);
  CHECK(inter.lower == std::vector<double>{0.5, 0.0});
  CHECK(inter.upper == std::vector<double>{1.0, 0.5});
  CHECK(inter.volume() == doctest::Approx(0.25));

  Region far;
  far.lower = {5.0, 5.0};
  far.upper = {6.0, 6.0};
  CHECK(r.intersect(far).empty());
  CHECK(r.intersect(far).volume() == 0.0);

  const Region whole = Region::whole(2);
  CHECK(whole.contains(std::vector<double>{1e300, -1e300}));
  CHECK(whole.intersect(r).lower == r.lower);
}

TEST_CASE("subset keeps time order and the original-row trail") {
  const SurvivalDataset d = tiny_dataset();
  const SurvivalDataset s = d.subset({0, 2, 3});
  CHECK(s.size() == 3);
  CHECK(s.times == std::vector<double>{1.0, 2.0, 3.0});
  // Paper trail composes through the subset.
  CHECK(s.sort_index == std::vector<std::size_t>{1, 2, 0});
  CHECK(s.x_adjust(0, 0) == 2.0);
  CHECK(s.x_adjust(2, 0) == 1.0);
}

TEST_CASE("rows_in and bounding_box") {
  const SurvivalDataset d = tiny_dataset();
  const Region box = d.bounding_box();
  CHECK(box.lower == std::vector<double>{0.1, 0.2});
  CHECK(box.upper == std::vector<double>{0.7, 0.8});
  CHECK(d.rows_in(box).size() == 4);

  Region half;
  half.lower = {0.0, 0.0};
  half.upper = {0.5, 1.0};  // x_subgp first column <= 0.5
  const auto rows = d.rows_in(half);
  // Sorted rows with x_subgp col0 in [0, 0.5]: values are (by stored order)
  // row0: 0.5 (input row 1), row1: 0.7, row2: 0.3, row3: 0.1.
  CHECK(rows == std::vector<std::size_t>{0, 2, 3});
}

TEST_CASE("tie_structure marks tie blocks and strict successors") {
  std::vector<double> times{1.0, 1.0, 2.0, 3.0, 3.0, 3.0};
  std::vector<std::int32_t> first_tied, strict_after;
  tie_structure(times, first_tied, strict_after);
  CHECK(first_tied == std::vector<std::int32_t>{0, 0, 2, 3, 3, 3});
  CHECK(strict_after == std::vector<std::int32_t>{2, 2, 3, 6, 6, 6});
}
