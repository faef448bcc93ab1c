#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace cubefit {

// Fixed-width forward-mode dual number: value plus N partial derivatives.
// Used for the 3-D parts of the objective (corner assembly, overlap, depth,
// contact) where the active parameter count per frame is small and fixed.
template <int N>
struct Dual {
    double v = 0.0;
    std::array<double, N> d{};

    Dual() = default;
    Dual(double value) : v(value) {}  // constant (zero derivative)
    static Dual var(double value, int slot) {
        Dual r(value);
        r.d[slot] = 1.0;
        return r;
    }

    Dual operator-() const {
        Dual r(-v);
        for (int i = 0; i < N; ++i) r.d[i] = -d[i];
        return r;
    }
    Dual& operator+=(const Dual& o) {
        v += o.v;
        for (int i = 0; i < N; ++i) d[i] += o.d[i];
        return *this;
    }
    Dual& operator-=(const Dual& o) {
        v -= o.v;
        for (int i = 0; i < N; ++i) d[i] -= o.d[i];
        return *this;
    }
    Dual& operator*=(const Dual& o) {
        for (int i = 0; i < N; ++i) d[i] = d[i] * o.v + v * o.d[i];
        v *= o.v;
        return *this;
    }
    Dual& operator/=(const Dual& o) {
        double inv = 1.0 / o.v;
        for (int i = 0; i < N; ++i) d[i] = (d[i] - v * inv * o.d[i]) * inv;
        v *= inv;
        return *this;
    }

    friend Dual operator+(Dual a, const Dual& b) { return a += b; }
    friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
    friend Dual operator*(Dual a, const Dual& b) { return a *= b; }
    friend Dual operator/(Dual a, const Dual& b) { return a /= b; }

    friend bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
    friend bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
    friend bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
    friend bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }
};

template <int N>
Dual<N> sqrt(const Dual<N>& a) {
    Dual<N> r(std::sqrt(a.v));
    double s = 0.5 / r.v;
    for (int i = 0; i < N; ++i) r.d[i] = s * a.d[i];
    return r;
}

template <int N>
Dual<N> exp(const Dual<N>& a) {
    Dual<N> r(std::exp(a.v));
    for (int i = 0; i < N; ++i) r.d[i] = r.v * a.d[i];
    return r;
}

template <int N>
Dual<N> sin(const Dual<N>& a) {
    Dual<N> r(std::sin(a.v));
    double c = std::cos(a.v);
    for (int i = 0; i < N; ++i) r.d[i] = c * a.d[i];
    return r;
}

template <int N>
Dual<N> cos(const Dual<N>& a) {
    Dual<N> r(std::cos(a.v));
    double s = -std::sin(a.v);
    for (int i = 0; i < N; ++i) r.d[i] = s * a.d[i];
    return r;
}

// Value-branching min/max/abs: derivative follows the selected branch.
template <int N>
Dual<N> min(const Dual<N>& a, const Dual<N>& b) { return a.v <= b.v ? a : b; }
template <int N>
Dual<N> max(const Dual<N>& a, const Dual<N>& b) { return a.v >= b.v ? a : b; }
template <int N>
Dual<N> abs(const Dual<N>& a) { return a.v >= 0.0 ? a : -a; }

// Scalar passthroughs so templated code works for plain double too.
inline double min(double a, double b) { return a <= b ? a : b; }
inline double max(double a, double b) { return a >= b ? a : b; }
inline double sqrt(double x) { return std::sqrt(x); }
inline double exp(double x) { return std::exp(x); }
inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double abs(double x) { return std::fabs(x); }
inline double value_of(double x) { return x; }
template <int N>
double value_of(const Dual<N>& x) { return x.v; }

}  // namespace cubefit
