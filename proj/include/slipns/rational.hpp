// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace slipns {

/// Exact rational with an optional +infinity, enough for exponent bookkeeping.
struct Rational {
    std::int64_t num = 0, den = 1;
    bool inf = false;

    constexpr Rational() = default;
    constexpr Rational(std::int64_t n, std::int64_t d = 1) : num(n), den(d) { normalize(); }  // NOLINT implicit from integer

    static constexpr Rational infinity() {
        Rational r;
        r.inf = true;
        r.num = 1;
        r.den = 0;
        return r;
    }

    /// Parses "a", "a/b" or "inf".
    static Rational parse(const std::string& s) {
        if (s == "inf" || s == "infinity") return infinity();
        const auto slash = s.find('/');
        std::size_t pos = 0;
        if (slash == std::string::npos) {
            const long long n = std::stoll(s, &pos);
            if (pos != s.size()) throw std::invalid_argument("not a rational: " + s);
            return Rational(n);
        }
        const long long n = std::stoll(s.substr(0, slash), &pos);
        if (pos != slash) throw std::invalid_argument("not a rational: " + s);
        const std::string ds = s.substr(slash + 1);
        const long long d = std::stoll(ds, &pos);
        if (pos != ds.size() || d == 0) throw std::invalid_argument("not a rational: " + s);
        return Rational(n, d);
    }

    [[nodiscard]] double value() const { return inf ? 1.0 / 0.0 : double(num) / double(den); }
    [[nodiscard]] std::string str() const {
        if (inf) return "inf";
        return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
    }

    friend constexpr Rational operator+(const Rational& a, const Rational& b) {
        if (a.inf || b.inf) throw std::domain_error("rational overflow to infinity");
        return Rational(a.num * b.den + b.num * a.den, a.den * b.den);
    }
    friend constexpr Rational operator*(const Rational& a, const Rational& b) {
        if (a.inf || b.inf) throw std::domain_error("rational overflow to infinity");
        return Rational(a.num * b.num, a.den * b.den);
    }
    /// a / b with a / infinity = 0.
    friend constexpr Rational operator/(const Rational& a, const Rational& b) {
        if (b.inf) return Rational(0);
        if (a.inf || b.num == 0) throw std::domain_error("division by zero");
        return Rational(a.num * b.den, a.den * b.num);
    }
    friend constexpr bool operator==(const Rational& a, const Rational& b) {
        if (a.inf || b.inf) return a.inf == b.inf;
        return a.num == b.num && a.den == b.den;
    }
    friend constexpr bool operator<(const Rational& a, const Rational& b) {
        if (a.inf) return false;
        if (b.inf) return true;
        return a.num * b.den < b.num * a.den;
    }
    friend constexpr bool operator<=(const Rational& a, const Rational& b) { return a < b || a == b; }
    friend constexpr bool operator>(const Rational& a, const Rational& b) { return b < a; }

private:
    constexpr void normalize() {
        if (den == 0) throw std::domain_error("zero denominator");
        if (den < 0) { num = -num; den = -den; }
        const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
    }
};

/// 1 < q < 3/2, 1 < r < 2 and 2/r + 3/q = 4.
inline bool maximal_regularity_exponents(const Rational& r, const Rational& q) {
    if (r.inf || q.inf) return false;
    if (!(Rational(1) < q && q < Rational(3, 2))) return false;
    if (!(Rational(1) < r && r < Rational(2))) return false;
    return Rational(2) / r + Rational(3) / q == Rational(4);
}

/// r in [2, inf), s in (3, inf] and 2/r + 3/s = 1.
inline bool serrin_check(const Rational& r, const Rational& s) {
    if (r.inf || r < Rational(2)) return false;
    if (!(Rational(3) < s)) return false;
    return Rational(2) / r + Rational(3) / s == Rational(1);
}

}  // namespace slipns
