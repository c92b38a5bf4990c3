#include "quench/fields.hpp"

#include <cmath>

#include "quench/errors.hpp"

namespace quench {

namespace {

// Points closer to the singular set than this are rejected outright instead
// of producing huge field values.
double singular_guard(Vec2 y) { return 1e-14 * (1.0 + norm(y)); }

void require_off_singular_set(FieldKind kind, Vec2 y) {
    if (!is_finite(y)) throw SingularInput("state has non-finite coordinates");
    if (singular_distance(kind, y) < singular_guard(y)) {
        throw SingularInput(std::string("state on singular set of ") + to_string(kind));
    }
}

}  // namespace

const char* to_string(FieldKind kind) {
    switch (kind) {
        case FieldKind::F1: return "f1";
        case FieldKind::F2: return "f2";
        case FieldKind::F3: return "f3";
    }
    return "?";
}

const char* to_string(Branch branch) {
    return branch == Branch::Below ? "below" : "above";
}

Vec2 eval_field(FieldKind kind, Vec2 y) {
    require_off_singular_set(kind, y);
    switch (kind) {
        case FieldKind::F1:
            return {y.y / (1.0 - y.x), y.x + y.y};
        case FieldKind::F2: {
            const double r = norm(y);
            return y / (1.0 - r);
        }
        case FieldKind::F3:
            return {1.0 / (1.0 - y.y), 1.0 / (1.0 - y.x)};
    }
    throw InvalidParameter("unknown field kind");
}

Mat2 eval_jacobian(FieldKind kind, Vec2 y) {
    require_off_singular_set(kind, y);
    switch (kind) {
        case FieldKind::F1: {
            const double d = 1.0 - y.x;
            return {y.y / (d * d), 1.0 / d,
                    1.0,           1.0};
        }
        case FieldKind::F2: {
            const double r = norm(y);
            if (r == 0.0) return Mat2::identity();
            const double d = 1.0 - r;
            const double s = 1.0 / (d * d);
            return {s * (d + y.x * y.x / r), s * (y.x * y.y / r),
                    s * (y.x * y.y / r),     s * (d + y.y * y.y / r)};
        }
        case FieldKind::F3: {
            const double d1 = 1.0 - y.x;
            const double d2 = 1.0 - y.y;
            return {0.0,            1.0 / (d2 * d2),
                    1.0 / (d1 * d1), 0.0};
        }
    }
    throw InvalidParameter("unknown field kind");
}

double singular_distance(FieldKind kind, Vec2 y) {
    switch (kind) {
        case FieldKind::F1: return std::abs(1.0 - y.x);
        case FieldKind::F2: return std::abs(1.0 - norm(y));
        case FieldKind::F3: return std::min(std::abs(1.0 - y.x), std::abs(1.0 - y.y));
    }
    throw InvalidParameter("unknown field kind");
}

std::optional<Branch> in_seed_region(FieldKind kind, Vec2 y0, double k0) {
    if (!(k0 > 0.0) || !std::isfinite(k0)) throw InvalidParameter("k0 must be positive");
    if (!is_finite(y0)) throw InvalidParameter("y0 has non-finite coordinates");
    switch (kind) {
        case FieldKind::F1: {
            const double half = 1.0 / (2.0 * k0);
            if (y0.x > 1.0 - half && y0.x < 1.0 && y0.y > k0 + 1.0 / k0 - 1.0)
                return Branch::Below;
            if (y0.x > 1.0 && y0.x < 1.0 + half && y0.y > k0 + 1.0)
                return Branch::Above;
            return std::nullopt;
        }
        case FieldKind::F2: {
            const double r = norm(y0);
            if (r > 1.0 - 1.0 / (2.0 * k0 + 1.0) && r < 1.0) return Branch::Below;
            if (r > 1.0 && r < 1.0 + 1.0 / (2.0 * k0)) return Branch::Above;
            return std::nullopt;
        }
        case FieldKind::F3: {
            const double w = std::exp(-1.5) / (2.0 * k0);
            if (y0.x > 1.0 - w && y0.x < 1.0 && y0.y > 1.0 - w && y0.y < 1.0)
                return Branch::Below;
            if (y0.x > 1.0 && y0.x < 1.0 + w && y0.y > 1.0 && y0.y < 1.0 + w)
                return Branch::Above;
            return std::nullopt;
        }
    }
    throw InvalidParameter("unknown field kind");
}

bool on_branch(FieldKind kind, Branch branch, Vec2 y) {
    const bool below = branch == Branch::Below;
    switch (kind) {
        case FieldKind::F1: return below ? y.x < 1.0 : y.x > 1.0;
        case FieldKind::F2: {
            const double r = norm(y);
            return below ? r < 1.0 : r > 1.0;
        }
        case FieldKind::F3:
            return below ? (y.x < 1.0 && y.y < 1.0) : (y.x > 1.0 && y.y > 1.0);
    }
    return false;
}

}  // namespace quench
