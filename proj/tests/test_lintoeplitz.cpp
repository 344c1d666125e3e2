#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "subnetmle/lintoeplitz.hpp"
#include "support.hpp"

using namespace subnetmle;
using testkit::dense_toeplitz;

namespace {

using Op = BandedLowerToeplitz<double>;

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }
Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

TEST_CASE("first column of monic and strictly delayed operators") {
  CHECK(Op::from_polynomial(ToeplitzKind::Monic, {1.0, 0.25}, 4).first_column() ==
        std::vector<double>{1.0, 1.0, 0.25, 0.0});
  CHECK(Op::from_polynomial(ToeplitzKind::Monic, {}, 3).first_column() == std::vector<double>{1.0, 0.0, 0.0});
  CHECK(Op::from_polynomial(ToeplitzKind::StrictlyDelayed, {0.3, 0.15}, 4).first_column() ==
        std::vector<double>{0.0, 0.3, 0.15, 0.0});
}

TEST_CASE("band longer than n - 1 is rejected") {
  CHECK_THROWS_AS(Op::from_polynomial(ToeplitzKind::Monic, {1.0, 2.0, 3.0}, 3), Error);
  CHECK_NOTHROW(Op::from_polynomial(ToeplitzKind::Monic, {1.0, 2.0}, 3));
  CHECK_THROWS_AS(Op::from_polynomial(ToeplitzKind::Monic, {}, 0), Error);
  try {
    Op::from_polynomial(ToeplitzKind::StrictlyDelayed, {1.0, 2.0, 3.0}, 2);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Dimension);
  }
}

TEST_CASE("apply") {
  const std::vector<double> v{0.5, -1.0, 2.0, 3.5};
  CHECK(Op::from_polynomial(ToeplitzKind::Monic, {}, 4).apply(v) == v);
  CHECK(Op::from_polynomial(ToeplitzKind::Monic, {1.0, 0.25}, 4).apply(std::vector<double>{1, 0, 0, 0}) ==
        std::vector<double>{1.0, 1.0, 0.25, 0.0});
  CHECK_THROWS_AS(Op::from_polynomial(ToeplitzKind::Monic, {1.0}, 4).apply(std::vector<double>{1, 2, 3}), Error);
}

TEST_CASE("apply matches a dense matrix-vector product") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 8;
    const std::size_t nb = 1 + static_cast<std::size_t>(trial % 5);
    for (ToeplitzKind kind : {ToeplitzKind::Monic, ToeplitzKind::StrictlyDelayed}) {
      const Op t = Op::from_polynomial(kind, testkit::random_vector(rng, nb), n);
      const std::vector<double> v = testkit::random_vector(rng, n);
      const std::vector<double> expected = to_std(dense_toeplitz(t.first_column()) * to_eigen(v));
      CHECK(testkit::max_abs_diff(t.apply(v), expected) <= 1e-12);
    }
  }
}

TEST_CASE("solve_unit_lower") {
  const std::vector<double> w{1.0, -2.0, 0.5};
  CHECK(Op::from_polynomial(ToeplitzKind::Monic, {}, 3).solve_unit_lower(w) == w);
  CHECK_THROWS_AS(Op::from_polynomial(ToeplitzKind::StrictlyDelayed, {1.0}, 3).solve_unit_lower(w), Error);
  try {
    Op::from_polynomial(ToeplitzKind::StrictlyDelayed, {1.0}, 3).solve_unit_lower(w);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingularOperator);
  }
  CHECK_THROWS_AS(Op::from_polynomial(ToeplitzKind::Monic, {1.0}, 4).solve_unit_lower(w), Error);
}

TEST_CASE("solve_unit_lower matches dense forward substitution") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 8;
    const Op t = Op::from_polynomial(ToeplitzKind::Monic, testkit::random_vector(rng, 1 + trial % 4, 0.5), n);
    const std::vector<double> w = testkit::random_vector(rng, n);
    const Eigen::MatrixXd dense = dense_toeplitz(t.first_column());
    const std::vector<double> expected =
        to_std(dense.triangularView<Eigen::UnitLower>().solve(to_eigen(w)));
    CHECK(testkit::rel_diff(t.solve_unit_lower(w), expected) <= 1e-12);
  }
}

TEST_CASE("solve inverts apply") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 50;
    const Op t = Op::from_polynomial(ToeplitzKind::Monic, testkit::stable_tail(rng, 3), n);
    const std::vector<double> v = testkit::random_vector(rng, n);
    CHECK(testkit::rel_diff(t.solve_unit_lower(t.apply(v)), v) <= 1e-12);
    CHECK(testkit::rel_diff(t.apply(t.solve_unit_lower(v)), v) <= 1e-12);
  }
}

TEST_CASE("products of Toeplitz operators commute") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 30;
    const Op p = Op::from_polynomial(ToeplitzKind::Monic, testkit::random_vector(rng, 2), n);
    const Op q = Op::from_polynomial(ToeplitzKind::StrictlyDelayed, testkit::random_vector(rng, 3), n);
    const std::vector<double> v = testkit::random_vector(rng, n);
    CHECK(testkit::max_abs_diff(p.apply(q.apply(v)), q.apply(p.apply(v))) <= 1e-12);
  }
}

TEST_CASE("strictly delayed operator is a unit shift composed with the band") {
  const Op shift = Op::from_polynomial(ToeplitzKind::StrictlyDelayed, {1.0}, 5);
  CHECK(shift.apply(std::vector<double>{1, 2, 3, 4, 5}) == std::vector<double>{0, 1, 2, 3, 4});
  const Op b = Op::from_polynomial(ToeplitzKind::StrictlyDelayed, {0.3, 0.15}, 5);
  CHECK(b.coefficient(0) == 0.0);
  CHECK(b.coefficient(2) == 0.15);
  CHECK(b.coefficient(3) == 0.0);
}
