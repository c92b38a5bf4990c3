#pragma once

#include <cmath>

namespace quench {

// Plain 2-vector used for states, controls and adjoints.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
    friend Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
    Vec2& operator+=(Vec2 b) { x += b.x; y += b.y; return *this; }
    Vec2& operator-=(Vec2 b) { x -= b.x; y -= b.y; return *this; }
    friend bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline bool is_finite(Vec2 a) { return std::isfinite(a.x) && std::isfinite(a.y); }

// 2x2 real matrix, row-major entries.
struct Mat2 {
    double a11 = 0.0, a12 = 0.0;
    double a21 = 0.0, a22 = 0.0;

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

    Mat2 transpose() const { return {a11, a21, a12, a22}; }

    friend Vec2 operator*(const Mat2& m, Vec2 v) {
        return {m.a11 * v.x + m.a12 * v.y, m.a21 * v.x + m.a22 * v.y};
    }
    friend Mat2 operator*(double s, const Mat2& m) {
        return {s * m.a11, s * m.a12, s * m.a21, s * m.a22};
    }
    friend bool operator==(const Mat2& a, const Mat2& b) {
        return a.a11 == b.a11 && a.a12 == b.a12 && a.a21 == b.a21 && a.a22 == b.a22;
    }
};

inline bool is_finite(const Mat2& m) {
    return std::isfinite(m.a11) && std::isfinite(m.a12) && std::isfinite(m.a21) &&
           std::isfinite(m.a22);
}

// Largest singular value, in closed form via the eigenvalues of M^T M.
inline double spectral_norm(const Mat2& m) {
    const double p = m.a11 * m.a11 + m.a21 * m.a21;
    const double q = m.a12 * m.a12 + m.a22 * m.a22;
    const double r = m.a11 * m.a12 + m.a21 * m.a22;
    const double disc = std::sqrt(std::max(0.0, (p - q) * (p - q) + 4.0 * r * r));
    return std::sqrt(std::max(0.0, 0.5 * (p + q + disc)));
}

}  // namespace quench
