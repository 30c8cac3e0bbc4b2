#include "doctest.h"
#include "qhedge/errors.hpp"
#include "qhedge/pinv.hpp"
#include "qhedge/subspace.hpp"
#include "support.hpp"

using namespace qhedge;
using namespace qhedge::testing;

namespace {

Matrix columns(std::initializer_list<Vector> cols) {
  Matrix m(cols.begin()->size(), static_cast<Eigen::Index>(cols.size()));
  Eigen::Index j = 0;
  for (const Vector& c : cols) {
    m.col(j++) = c;
  }
  return m;
}

Vector unit(Eigen::Index n, Eigen::Index i) { return Vector::Unit(n, i); }

}  // namespace

TEST_CASE("intersection of coordinate planes") {
  const auto l = SubspaceBasis::span(columns({unit(3, 0), unit(3, 1)}));
  const auto m = SubspaceBasis::span(columns({unit(3, 1), unit(3, 2)}));
  const auto both = intersection(l, m);
  CHECK(both.dim() == 1);
  CHECK(both.contains(unit(3, 1)));
  CHECK(subspace_sum(l, m).dim() == 3);
  CHECK(orthogonal_complement(l).dim() == 1);
  CHECK(orthogonal_complement(l).contains(unit(3, 2)));
}

TEST_CASE("zero and whole subspaces") {
  const SubspaceBasis zero(4);
  CHECK(zero.is_zero());
  CHECK(zero.contains(Vector::Zero(4)));
  CHECK_FALSE(zero.contains(unit(4, 0)));
  CHECK(orthogonal_complement(zero).dim() == 4);
  CHECK(SubspaceBasis::whole(4).contains(Vector::Ones(4)));
  CHECK(intersection(zero, SubspaceBasis::whole(4)).is_zero());
  CHECK(SubspaceBasis::null(Matrix::Identity(3, 3)).is_zero());
  CHECK(SubspaceBasis::range(Matrix::Zero(3, 2)).is_zero());
}

TEST_CASE("dimension mismatch is rejected") {
  CHECK_THROWS_AS(intersection(SubspaceBasis::whole(2), SubspaceBasis::whole(3)), InvalidInput);
  CHECK_THROWS_AS(subspace_sum(SubspaceBasis::whole(2), SubspaceBasis::whole(3)), InvalidInput);
}

TEST_CASE("dimension formula and orthogonal decomposition on random subspaces") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = uniform_int(rng, 2, 8);
    // Shared directions make the intersection non-trivial.
    const Eigen::Index shared = uniform_int(rng, 0, static_cast<int>(n) / 2);
    const Matrix common = gaussian(rng, n, shared);
    const Eigen::Index el = uniform_int(rng, 0, static_cast<int>(n - shared));
    const Eigen::Index em = uniform_int(rng, 0, static_cast<int>(n - shared));
    Matrix ls(n, shared + el);
    ls << common, gaussian(rng, n, el);
    Matrix ms(n, shared + em);
    ms << common, gaussian(rng, n, em);
    const auto l = SubspaceBasis::span(ls);
    const auto m = SubspaceBasis::span(ms);
    const auto both = intersection(l, m);
    CHECK(both.dim() + subspace_sum(l, m).dim() == l.dim() + m.dim());
    CHECK(l.contains(both));
    CHECK(m.contains(both));
    // L = (L ∩ M) ⊕⊥ P_L M⊥.
    const auto rest = image(l.projector(), orthogonal_complement(m));
    CHECK(same_subspace(subspace_sum(both, rest), l));
    if (!both.is_zero() && !rest.is_zero()) {
      CHECK((both.vectors().transpose() * rest.vectors()).norm() < 1e-9);
    }
    CHECK(both.dim() + rest.dim() == l.dim());
  }
}

TEST_CASE("basis vectors are orthonormal") {
  Rng rng(9);
  const auto s = SubspaceBasis::span(random_matrix(rng, 6, 4, 3));
  CHECK(s.dim() == 3);
  CHECK((s.vectors().transpose() * s.vectors() - Matrix::Identity(3, 3)).norm() < 1e-12);
  CHECK(s.residual(s.vectors().col(0)) < 1e-14);
}
