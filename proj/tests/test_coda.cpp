#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "scomb/coda.hpp"
#include "scomb/errors.hpp"

using namespace scomb;
using oracles::code_of;

TEST_SUITE_BEGIN("coda");

TEST_CASE("closure normalizes and rejects bad input") {
    Composition c = closure(std::vector<double>{1, 1, 1, 1});
    for (size_t i = 0; i < 4; ++i) CHECK(c[i] == 0.25);

    Composition d = closure(std::vector<double>{2, 1, 1});
    CHECK(d[0] == 0.5);
    CHECK(d[1] == 0.25);
    CHECK(d[2] == 0.25);

    CHECK(code_of([] { closure(std::vector<double>{1.0}); }) == Errc::invalid_argument);
    CHECK(code_of([] { closure(std::vector<double>{1, 0}); }) == Errc::non_positive_entry);
    CHECK(code_of([] { closure(std::vector<double>{1, -2}); }) == Errc::non_positive_entry);
    CHECK(code_of([] {
              closure(std::vector<double>{1, std::numeric_limits<double>::infinity()});
          }) == Errc::non_positive_entry);
}

TEST_CASE("closure is scale invariant") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.1, 9.0);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> v(2 + rep % 7);
        for (double& x : v) x = u(rng);
        const double scale = u(rng);
        std::vector<double> scaled = v;
        for (double& x : scaled) x *= scale;
        Composition a = closure(v);
        Composition b = closure(scaled);
        for (size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));
        }
    }
}

TEST_CASE("composition invariants enforced at construction") {
    CHECK(code_of([] { Composition(std::vector<double>{0.5, 0.6}); }) ==
          Errc::invalid_argument);
    CHECK(code_of([] { Composition(std::vector<double>{1.5, -0.5}); }) ==
          Errc::non_positive_entry);
    Composition u = Composition::uniform(5);
    CHECK(u.size() == 5);
    CHECK(u[3] == 0.2);
}

TEST_CASE("clr matches worked examples and the direct oracle") {
    Composition uniform = Composition::uniform(4);
    for (double x : clr(uniform).coords) CHECK(x == 0.0);

    Composition w(std::vector<double>{0.5, 0.25, 0.25});
    ClrVector x = clr(w);
    CHECK(x.coords[0] == doctest::Approx(0.4621).epsilon(1e-3));
    CHECK(x.coords[1] == doctest::Approx(-0.2310).epsilon(1e-3));
    CHECK(x.coords[2] == doctest::Approx(-0.2310).epsilon(1e-3));

    std::mt19937_64 rng(12);
    for (int rep = 0; rep < 200; ++rep) {
        Composition c = oracles::random_composition(rng, 2 + rep % 9);
        ClrVector v = clr(c);
        std::vector<double> direct = oracles::clr_direct(c.parts());
        double sum = 0.0;
        for (size_t i = 0; i < c.size(); ++i) {
            CHECK(v.coords[i] == doctest::Approx(direct[i]).epsilon(1e-11));
            sum += v.coords[i];
        }
        CHECK(std::fabs(sum) < 1e-10);
    }
}

TEST_CASE("clr is invariant to input scaling") {
    std::vector<double> v{3.0, 1.0, 2.5};
    std::vector<double> scaled{30.0, 10.0, 25.0};
    ClrVector a = clr(closure(v));
    ClrVector b = clr(closure(scaled));
    for (size_t i = 0; i < 3; ++i) CHECK(a.coords[i] == doctest::Approx(b.coords[i]));
}

TEST_CASE("clr_inv inverts clr and validates the zero sum") {
    Composition origin = clr_inv(ClrVector{{0.0, 0.0, 0.0}});
    for (size_t i = 0; i < 3; ++i) CHECK(origin[i] == doctest::Approx(1.0 / 3.0));

    Composition back = clr_inv(ClrVector{{0.4621, -0.2310, -0.2311}});
    CHECK(back[0] == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(back[1] == doctest::Approx(0.25).epsilon(1e-3));

    CHECK(code_of([] { clr_inv(ClrVector{{0.5, 0.5, 0.5}}); }) == Errc::not_zero_sum);
    CHECK(code_of([] { clr_inv(ClrVector{{}}); }) == Errc::invalid_argument);

    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 500; ++rep) {
        Composition w = oracles::random_composition(rng, 2 + rep % 15);
        Composition round = clr_inv(clr(w));
        for (size_t i = 0; i < w.size(); ++i) {
            CHECK(std::fabs(round[i] - w[i]) < 1e-10);
        }
    }
}

TEST_CASE("perturbation group structure") {
    Composition w(std::vector<double>{0.7, 0.1, 0.2});
    Composition u = Composition::uniform(3);
    Composition same = perturb(w, u);
    for (size_t i = 0; i < 3; ++i) CHECK(same[i] == doctest::Approx(w[i]));

    Composition neutral = perturb_inverse(w, w);
    for (size_t i = 0; i < 3; ++i) CHECK(neutral[i] == doctest::Approx(1.0 / 3.0));

    Composition p = perturb(Composition(std::vector<double>{0.5, 0.5}),
                            Composition(std::vector<double>{0.8, 0.2}));
    CHECK(p[0] == doctest::Approx(0.8).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(0.2).epsilon(1e-14));

    CHECK(code_of([&] { perturb(w, Composition::uniform(2)); }) == Errc::dimension_mismatch);
    CHECK(code_of([&] { perturb_inverse(w, Composition::uniform(4)); }) ==
          Errc::dimension_mismatch);

    std::mt19937_64 rng(14);
    for (int rep = 0; rep < 200; ++rep) {
        Composition a = oracles::random_composition(rng, 5);
        Composition b = oracles::random_composition(rng, 5);
        Composition round = perturb(perturb_inverse(a, b), b);
        for (size_t i = 0; i < 5; ++i) CHECK(std::fabs(round[i] - a[i]) < 1e-10);
    }
}

TEST_CASE("power handles identity, zero, and fractional exponents") {
    Composition w(std::vector<double>{0.8, 0.2});
    Composition same = power(w, 1.0);
    CHECK(same[0] == doctest::Approx(0.8).epsilon(1e-15));

    Composition flat = power(w, 0.0);
    CHECK(flat[0] == 0.5);
    CHECK(flat[1] == 0.5);

    Composition half = power(w, 0.5);
    CHECK(half[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(half[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

    CHECK(code_of([&] { power(w, std::nan("")); }) == Errc::invalid_argument);
}

TEST_CASE("center matches hand examples exactly") {
    CompositionMatrix constant({Composition(std::vector<double>{0.6, 0.4}),
                                Composition(std::vector<double>{0.6, 0.4})});
    Composition g1 = center(constant);
    CHECK(g1[0] == doctest::Approx(0.6).epsilon(1e-15));

    CompositionMatrix sym({Composition(std::vector<double>{0.8, 0.2}),
                           Composition(std::vector<double>{0.2, 0.8})});
    Composition g2 = center(sym);
    CHECK(g2[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(g2[1] == doctest::Approx(0.5).epsilon(1e-15));

    CompositionMatrix two({Composition(std::vector<double>{0.5, 0.5}),
                           Composition(std::vector<double>{0.8, 0.2})});
    Composition g3 = center(two);
    CHECK(g3[0] == 2.0 / 3.0);  // exact: geometric means land on the binary third
    CHECK(g3[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("center agrees with the clr route") {
    std::mt19937_64 rng(15);
    for (int rep = 0; rep < 300; ++rep) {
        CompositionMatrix w = oracles::random_matrix(rng, 2 + rep % 12, 2 + rep % 7);
        Composition direct = center(w);
        // Route two: arithmetic mean of clr rows, mapped back.
        std::vector<double> mean(w.cols(), 0.0);
        for (size_t t = 0; t < w.rows(); ++t) {
            ClrVector x = clr(w.row(t));
            for (size_t j = 0; j < w.cols(); ++j) mean[j] += x.coords[j];
        }
        for (double& m : mean) m /= static_cast<double>(w.rows());
        Composition via_clr = clr_inv(ClrVector{std::move(mean)});
        for (size_t j = 0; j < w.cols(); ++j) {
            CHECK(std::fabs(direct[j] - via_clr[j]) < 1e-10);
        }
    }
}

TEST_CASE("variation matrix against the brute-force oracle") {
    CompositionMatrix constant({Composition(std::vector<double>{0.6, 0.3, 0.1}),
                                Composition(std::vector<double>{0.6, 0.3, 0.1})});
    VariationMatrix v0 = variation_matrix(constant);
    CHECK(v0.total == 0.0);
    for (size_t i = 0; i < 3; ++i) {
        for (size_t j = 0; j < 3; ++j) CHECK(v0(i, j) == 0.0);
    }

    // Columns 0 and 1 keep a constant ratio: their entry is zero.
    CompositionMatrix prop({closure(std::vector<double>{2, 1, 1}),
                            closure(std::vector<double>{4, 2, 1}),
                            closure(std::vector<double>{6, 3, 7})});
    VariationMatrix vp = variation_matrix(prop);
    CHECK(vp(0, 1) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(vp(1, 2) > 0.0);

    std::mt19937_64 rng(16);
    for (int rep = 0; rep < 100; ++rep) {
        CompositionMatrix w = oracles::random_matrix(rng, 3 + rep % 8, 3 + rep % 5);
        VariationMatrix v = variation_matrix(w);
        double total = 0.0;
        for (size_t i = 0; i < w.cols(); ++i) {
            CHECK(v(i, i) == 0.0);
            for (size_t j = i + 1; j < w.cols(); ++j) {
                const double expected = oracles::logratio_variance(w, i, j);
                CHECK(v(i, j) == doctest::Approx(expected).epsilon(1e-12));
                CHECK(v(i, j) == v(j, i));
                total += v(i, j);
            }
        }
        CHECK(v.total == doctest::Approx(total).epsilon(1e-12));
    }

    CHECK(code_of([] {
              variation_matrix(
                  CompositionMatrix({Composition(std::vector<double>{0.5, 0.5})}));
          }) == Errc::insufficient_rows);
}

TEST_CASE("center_and_scale fulfills its centering and scaling contract") {
    CHECK(code_of([] {
              center_and_scale(CompositionMatrix({Composition::uniform(3),
                                                  Composition::uniform(3)}));
          }) == Errc::zero_variation);

    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 100; ++rep) {
        CompositionMatrix w = oracles::random_matrix(rng, 3 + rep % 10, 2 + rep % 6);
        CompositionMatrix z = center_and_scale(w);
        Composition g = center(z);
        const double uniform_part = 1.0 / static_cast<double>(z.cols());
        for (size_t j = 0; j < z.cols(); ++j) {
            CHECK(std::fabs(g[j] - uniform_part) < 1e-8);
        }
        CHECK(oracles::total_variation(z) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("subcompositional coherence of ratios and variation entries") {
    std::mt19937_64 rng(18);
    for (int rep = 0; rep < 100; ++rep) {
        Composition w = oracles::random_composition(rng, 4);
        const std::vector<size_t> keep{0, 2, 3};
        Composition sub = subcomposition(w, keep);
        for (size_t a = 0; a < keep.size(); ++a) {
            for (size_t b = 0; b < keep.size(); ++b) {
                const double full_ratio = w[keep[a]] / w[keep[b]];
                CHECK(sub[a] / sub[b] == doctest::Approx(full_ratio).epsilon(1e-12));
            }
        }
    }

    // Dropping a column leaves the variation entries of the kept pair alone.
    std::mt19937_64 rng2(19);
    for (int rep = 0; rep < 50; ++rep) {
        CompositionMatrix w = oracles::random_matrix(rng2, 5, 4);
        VariationMatrix full = variation_matrix(w);
        const std::vector<size_t> keep{0, 1, 3};
        CompositionMatrix sub = w.subcolumns(keep);
        VariationMatrix reduced = variation_matrix(sub);
        for (size_t a = 0; a < keep.size(); ++a) {
            for (size_t b = 0; b < keep.size(); ++b) {
                CHECK(std::fabs(reduced(a, b) - full(keep[a], keep[b])) < 1e-10);
            }
        }
    }
}

TEST_CASE("composition matrix shape checks") {
    CHECK(code_of([] { CompositionMatrix({}); }) == Errc::insufficient_rows);
    CHECK(code_of([] {
              CompositionMatrix({Composition::uniform(2), Composition::uniform(3)});
          }) == Errc::dimension_mismatch);
    CHECK(code_of([] {
              CompositionMatrix({Composition::uniform(2)}, {"a", "b", "c"});
          }) == Errc::dimension_mismatch);

    CompositionMatrix w({Composition::uniform(3)}, {"a", "b", "c"});
    CHECK(w.rows() == 1);
    CHECK(w.cols() == 3);
    CHECK(w.column_labels()[2] == "c");
}

TEST_SUITE_END();
