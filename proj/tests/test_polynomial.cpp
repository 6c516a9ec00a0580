#include <doctest.h>

#include <complex>
#include <random>

#include "gridcert/error.hpp"
#include "gridcert/polynomial.hpp"

using gridcert::Polynomial;
using cd = std::complex<double>;

TEST_CASE("arithmetic and evaluation")
{
    const Polynomial a{1.0, 1.0};       // 1 + s
    const Polynomial b{2.0, 0.0, 1.0};  // 2 + s^2
    CHECK(a * b == Polynomial({2.0, 2.0, 1.0, 1.0}));
    CHECK(a + b == Polynomial({3.0, 1.0, 1.0}));
    CHECK((b - b).is_zero());
    CHECK(b(cd(0.0, 1.0)) == cd(1.0, 0.0));
    CHECK(b.derivative() == Polynomial({0.0, 2.0}));
    CHECK(Polynomial({0.0, 0.0, 3.0}).zero_root_multiplicity() == 2);
    CHECK(Polynomial({0.0, 0.0, 3.0}).deflate_zero_roots(2) == Polynomial({3.0}));
    CHECK(Polynomial({1.0, 2.0, 0.0}).degree() == 1);
}

TEST_CASE("from_roots and roots are inverse")
{
    const std::vector<cd> r{{-1.0, 2.0}, {-1.0, -2.0}, {-3.0, 0.0}, {0.5, 0.0}};
    const auto p = Polynomial::from_roots(r);
    CHECK(p.leading() == 1.0);
    CHECK(p(cd(-3.0, 0.0)) == cd(0.0, 0.0));
    auto found = p.roots();
    REQUIRE(found.size() == 4);
    for (const auto& root : r) {
        double best = 1e9;
        for (const auto& f : found) best = std::min(best, std::abs(f - root));
        CHECK(best < 1e-12);
    }
}

TEST_CASE("even product matches direct evaluation")
{
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> ca(4), cb(6);
        for (auto& x : ca) x = n01(rng);
        for (auto& x : cb) x = n01(rng);
        const Polynomial a(ca), b(cb);
        const auto e = gridcert::even_product(a, b);
        for (double w : {0.0, 0.3, 1.0, 2.7, 11.0}) {
            const cd s(0.0, w);
            const double direct = (a(s) * b(-s)).real();
            CHECK(e(w * w) == doctest::Approx(direct).epsilon(1e-10).scale(1.0));
        }
    }
}

TEST_CASE("degree cap")
{
    std::vector<double> c(70, 1.0);
    const Polynomial p(c);
    try {
        (void)p.roots();
        FAIL("expected DegreeLimit");
    } catch (const gridcert::Error& e) {
        CHECK(e.code() == gridcert::ErrorCode::DegreeLimit);
    }
}
