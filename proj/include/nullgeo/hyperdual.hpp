#pragma once

#include <cmath>

namespace nullgeo {

// Hyper-dual number a + b e1 + c e2 + d e1e2 with e1^2 = e2^2 = 0.
// Evaluating f(x + e1 + e2) yields f, f' (twice) and f'' exactly, which is
// how the catalog metrics produce exact first and second partials.
struct HyperDual {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double d = 0.0;

    constexpr HyperDual() = default;
    constexpr HyperDual(double v) : a(v) {}  // NOLINT(google-explicit-constructor)
    constexpr HyperDual(double a_, double b_, double c_, double d_) : a(a_), b(b_), c(c_), d(d_) {}

    HyperDual& operator+=(const HyperDual& o) {
        a += o.a; b += o.b; c += o.c; d += o.d;
        return *this;
    }
    HyperDual& operator-=(const HyperDual& o) {
        a -= o.a; b -= o.b; c -= o.c; d -= o.d;
        return *this;
    }
    HyperDual& operator*=(const HyperDual& o) {
        *this = HyperDual{a * o.a, a * o.b + b * o.a, a * o.c + c * o.a,
                          a * o.d + b * o.c + c * o.b + d * o.a};
        return *this;
    }
    HyperDual& operator/=(const HyperDual& o);
};

// Chain rule for a scalar function with value f, derivative f1, second derivative f2.
inline HyperDual lift(const HyperDual& x, double f, double f1, double f2) {
    return {f, f1 * x.b, f1 * x.c, f1 * x.d + f2 * x.b * x.c};
}

inline HyperDual operator-(const HyperDual& x) { return {-x.a, -x.b, -x.c, -x.d}; }
inline HyperDual operator+(HyperDual x, const HyperDual& y) { return x += y; }
inline HyperDual operator-(HyperDual x, const HyperDual& y) { return x -= y; }
inline HyperDual operator*(HyperDual x, const HyperDual& y) { return x *= y; }

inline HyperDual reciprocal(const HyperDual& x) {
    const double inv = 1.0 / x.a;
    return lift(x, inv, -inv * inv, 2.0 * inv * inv * inv);
}

inline HyperDual& HyperDual::operator/=(const HyperDual& o) { return *this *= reciprocal(o); }
inline HyperDual operator/(HyperDual x, const HyperDual& y) { return x /= y; }

inline HyperDual exp(const HyperDual& x) {
    const double e = std::exp(x.a);
    return lift(x, e, e, e);
}
inline HyperDual log(const HyperDual& x) { return lift(x, std::log(x.a), 1.0 / x.a, -1.0 / (x.a * x.a)); }
inline HyperDual sin(const HyperDual& x) {
    const double s = std::sin(x.a);
    return lift(x, s, std::cos(x.a), -s);
}
inline HyperDual cos(const HyperDual& x) {
    const double co = std::cos(x.a);
    return lift(x, co, -std::sin(x.a), -co);
}
inline HyperDual sqrt(const HyperDual& x) {
    const double r = std::sqrt(x.a);
    return lift(x, r, 0.5 / r, -0.25 / (r * x.a));
}

inline bool operator<(const HyperDual& x, const HyperDual& y) { return x.a < y.a; }
inline bool operator>(const HyperDual& x, const HyperDual& y) { return x.a > y.a; }

inline double value_of(double x) { return x; }
inline double value_of(const HyperDual& x) { return x.a; }

}  // namespace nullgeo
