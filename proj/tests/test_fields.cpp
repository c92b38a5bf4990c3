#include <doctest.h>

#include <cmath>

#include "quench/errors.hpp"
#include "quench/fields.hpp"
#include "quench/random.hpp"

using namespace quench;

namespace {

// Central finite-difference Jacobian, the independent oracle for the closed
// forms.
Mat2 fd_jacobian(FieldKind kind, Vec2 y, double h) {
    auto col = [&](Vec2 e) {
        const Vec2 fp = eval_field(kind, y + h * e);
        const Vec2 fm = eval_field(kind, y - h * e);
        return (fp - fm) / (2.0 * h);
    };
    const Vec2 c1 = col({1.0, 0.0});
    const Vec2 c2 = col({0.0, 1.0});
    return {c1.x, c2.x, c1.y, c2.y};
}

double max_abs_entry(const Mat2& m) {
    return std::max(std::max(std::abs(m.a11), std::abs(m.a12)),
                    std::max(std::abs(m.a21), std::abs(m.a22)));
}

Vec2 sample_off_singular(FieldKind kind, Rng& rng) {
    for (;;) {
        const Vec2 y{rng.uniform(-2.0, 3.0), rng.uniform(-2.0, 3.0)};
        if (singular_distance(kind, y) > 0.05) return y;
    }
}

}  // namespace

TEST_CASE("field values match the defining formulas") {
    const Vec2 a = eval_field(FieldKind::F1, {0.5, 2.0});
    CHECK(a.x == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(a.y == doctest::Approx(2.5).epsilon(1e-15));

    const Vec2 b = eval_field(FieldKind::F2, {0.3, 0.4});
    CHECK(b.x == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(b.y == doctest::Approx(0.8).epsilon(1e-15));

    const Vec2 c = eval_field(FieldKind::F3, {0.5, 0.5});
    CHECK(c.x == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(c.y == doctest::Approx(2.0).epsilon(1e-15));

    CHECK_THROWS_AS(eval_field(FieldKind::F2, {0.6, 0.8}), SingularInput);
    CHECK_THROWS_AS(eval_field(FieldKind::F1, {1.0, 3.0}), SingularInput);
}

TEST_CASE("jacobians match the closed forms and finite differences") {
    const Mat2 j1 = eval_jacobian(FieldKind::F1, {0.5, 2.0});
    CHECK(j1.a11 == doctest::Approx(8.0));
    CHECK(j1.a12 == doctest::Approx(2.0));
    CHECK(j1.a21 == doctest::Approx(1.0));
    CHECK(j1.a22 == doctest::Approx(1.0));

    const Mat2 j3 = eval_jacobian(FieldKind::F3, {0.5, 0.5});
    CHECK(j3.a11 == doctest::Approx(0.0));
    CHECK(j3.a12 == doctest::Approx(4.0));
    CHECK(j3.a21 == doctest::Approx(4.0));
    CHECK(j3.a22 == doctest::Approx(0.0));

    const Mat2 j2 = eval_jacobian(FieldKind::F2, {0.3, 0.4});
    const Mat2 fd = fd_jacobian(FieldKind::F2, {0.3, 0.4}, 1e-6);
    CHECK(std::abs(j2.a11 - fd.a11) <= 1e-6);
    CHECK(std::abs(j2.a12 - fd.a12) <= 1e-6);
    CHECK(std::abs(j2.a21 - fd.a21) <= 1e-6);
    CHECK(std::abs(j2.a22 - fd.a22) <= 1e-6);
}

TEST_CASE("jacobians agree with finite differences on random samples") {
    Rng rng(7);
    for (FieldKind kind : {FieldKind::F1, FieldKind::F2, FieldKind::F3}) {
        for (int i = 0; i < 200; ++i) {
            const Vec2 y = sample_off_singular(kind, rng);
            const double h = 1e-6 * std::max(1.0, norm(y));
            const Mat2 j = eval_jacobian(kind, y);
            const Mat2 fd = fd_jacobian(kind, y, h);
            const double scale = std::max(1.0, max_abs_entry(j));
            CHECK(std::abs(j.a11 - fd.a11) <= 1e-5 * scale);
            CHECK(std::abs(j.a12 - fd.a12) <= 1e-5 * scale);
            CHECK(std::abs(j.a21 - fd.a21) <= 1e-5 * scale);
            CHECK(std::abs(j.a22 - fd.a22) <= 1e-5 * scale);
        }
    }
}

TEST_CASE("f2 is rotation-equivariant") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const Vec2 y = sample_off_singular(FieldKind::F2, rng);
        const double th = rng.uniform(0.0, 2.0 * M_PI);
        const Mat2 R{std::cos(th), -std::sin(th), std::sin(th), std::cos(th)};
        const Vec2 lhs = eval_field(FieldKind::F2, R * y);
        const Vec2 rhs = R * eval_field(FieldKind::F2, y);
        CHECK(norm(lhs - rhs) <= 1e-12 * (1.0 + norm(rhs)));
    }
}

TEST_CASE("f3 swaps with coordinate swap exactly") {
    Rng rng(13);
    for (int i = 0; i < 200; ++i) {
        const Vec2 y = sample_off_singular(FieldKind::F3, rng);
        const Vec2 f = eval_field(FieldKind::F3, y);
        const Vec2 fs = eval_field(FieldKind::F3, {y.y, y.x});
        CHECK(fs.x == f.y);
        CHECK(fs.y == f.x);
    }
}

TEST_CASE("singular distances") {
    CHECK(singular_distance(FieldKind::F1, {0.9, 5.0}) == doctest::Approx(0.1));
    CHECK(singular_distance(FieldKind::F2, {0.6, 0.8}) == doctest::Approx(0.0));
    CHECK(singular_distance(FieldKind::F3, {0.95, 0.97}) == doctest::Approx(0.03));
}

TEST_CASE("seed region membership") {
    const auto below = in_seed_region(FieldKind::F2, {0.75, 0.0}, 1.0);
    REQUIRE(below.has_value());
    CHECK(*below == Branch::Below);

    CHECK_FALSE(in_seed_region(FieldKind::F1, {0.9, 0.5}, 1.0).has_value());

    // Above component of f3 reaches up to 1 + e^{-3/2}/2 ~ 1.11157.
    const auto above = in_seed_region(FieldKind::F3, {1.05, 1.05}, 1.0);
    REQUIRE(above.has_value());
    CHECK(*above == Branch::Above);
    CHECK_FALSE(in_seed_region(FieldKind::F3, {1.12, 1.05}, 1.0).has_value());

    CHECK_THROWS_AS(in_seed_region(FieldKind::F1, {0.9, 2.0}, 0.0), InvalidParameter);
    CHECK_THROWS_AS(in_seed_region(FieldKind::F1, {0.9, 2.0}, -1.0), InvalidParameter);
}

TEST_CASE("seed membership implies positive distance and the branch predicate") {
    Rng rng(17);
    for (FieldKind kind : {FieldKind::F1, FieldKind::F2, FieldKind::F3}) {
        for (int i = 0; i < 300; ++i) {
            const Vec2 y{rng.uniform(-0.5, 2.5), rng.uniform(-0.5, 3.5)};
            const double k0 = rng.uniform(0.3, 3.0);
            const auto branch = in_seed_region(kind, y, k0);
            if (!branch) continue;
            CHECK(singular_distance(kind, y) > 0.0);
            CHECK(on_branch(kind, *branch, y));
        }
    }
}
