#include "htstep/errors.hpp"
#include "htstep/integrators.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <string>

namespace htstep {

namespace {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

struct Decimal {
    cpp_int mantissa;
    long exponent = 0;  // value = mantissa * 10^exponent
};

Decimal shortest_decimal(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific);
    const std::string s(buf, res.ptr);
    const auto e = s.find('e');
    std::string digits;
    long frac = 0;
    bool after_point = false;
    for (std::size_t i = 0; i < e; ++i) {
        const char ch = s[i];
        if (ch == '.') {
            after_point = true;
        } else if (ch != '-') {
            digits.push_back(ch);
            if (after_point) ++frac;
        }
    }
    Decimal d;
    d.mantissa = cpp_int(digits);
    if (v < 0) d.mantissa = -d.mantissa;
    d.exponent = std::stol(s.substr(e + 1)) - frac;
    return d;
}

}  // namespace

SchemeSpec SchemeSpec::euler() { return SchemeSpec{}; }

SchemeSpec SchemeSpec::midpoint() {
    SchemeSpec s;
    s.kind_ = Kind::Midpoint;
    return s;
}

SchemeSpec SchemeSpec::adams_bashforth(int steps) {
    if (steps < 1 || steps > 5) throw InputError("Adams-Bashforth order must be in 1..5");
    SchemeSpec s;
    s.kind_ = Kind::AdamsBashforth;
    s.steps_ = steps;
    return s;
}

SchemeSpec SchemeSpec::parse(const std::string& name) {
    if (name == "euler") return euler();
    if (name == "midpoint") return midpoint();
    if (name.size() == 3 && name.rfind("ab", 0) == 0 && name[2] >= '1' && name[2] <= '5')
        return adams_bashforth(name[2] - '0');
    throw InputError("unknown scheme '" + name + "' (expected euler, midpoint, ab1..ab5)");
}

int SchemeSpec::order() const {
    switch (kind_) {
        case Kind::Euler: return 1;
        case Kind::Midpoint: return 2;
        case Kind::AdamsBashforth: return steps_;
    }
    return 1;
}

std::string SchemeSpec::name() const {
    switch (kind_) {
        case Kind::Euler: return "euler";
        case Kind::Midpoint: return "midpoint";
        case Kind::AdamsBashforth: return "ab" + std::to_string(steps_);
    }
    return "euler";
}

std::vector<double> SchemeSpec::weights() const {
    if (kind_ == Kind::AdamsBashforth) return ab_coefficients(steps_);
    return {1.0};
}

std::vector<double> ab_coefficients(int s) {
    if (s < 1 || s > 5) throw InputError("Adams-Bashforth order must be in 1..5");
    // Order conditions sum_j b_j (-j)^q = 1/(q+1), q = 0..s-1, solved exactly.
    std::vector<std::vector<cpp_rational>> a(static_cast<std::size_t>(s), std::vector<cpp_rational>(s + 1));
    for (int q = 0; q < s; ++q) {
        for (int j = 0; j < s; ++j) {
            cpp_int p = 1;
            for (int e = 0; e < q; ++e) p *= -j;
            a[q][j] = cpp_rational(p);
        }
        a[q][s] = cpp_rational(1, q + 1);
    }
    for (int c = 0; c < s; ++c) {
        int pivot = c;
        while (a[pivot][c] == 0) ++pivot;
        std::swap(a[pivot], a[c]);
        for (int r = 0; r < s; ++r) {
            if (r == c || a[r][c] == 0) continue;
            const cpp_rational factor = a[r][c] / a[c][c];
            for (int k = c; k <= s; ++k) a[r][k] -= factor * a[c][k];
        }
    }
    std::vector<double> b;
    for (int j = 0; j < s; ++j) b.push_back(static_cast<double>(a[j][s] / a[j][j]));
    return b;
}

ThresholdPolicy ThresholdPolicy::euler(double M1, double M2) { return {M2, M1, {}}; }

ThresholdPolicy ThresholdPolicy::midpoint(double A, double B, double G) { return {A, B, {G}}; }

ThresholdPolicy ThresholdPolicy::adams_bashforth(double A, double B, std::vector<double> G) {
    return {A, B, std::move(G)};
}

void ThresholdPolicy::validate() const {
    auto ok = [](double v) { return v >= 0.0 && std::isfinite(v); };
    if (!ok(A) || !ok(B)) throw InputError("threshold constants must be finite and >= 0");
    for (double g : G)
        if (!ok(g)) throw InputError("threshold constants must be finite and >= 0");
}

double decimal_scaled_power(double c, double dt, int power) {
    if (c == 0.0 || dt == 0.0) return 0.0;
    const Decimal dc = shortest_decimal(c);
    const Decimal dd = shortest_decimal(dt);
    cpp_int m = dc.mantissa;
    for (int i = 0; i < power; ++i) m *= dd.mantissa;
    const long e = dc.exponent + power * dd.exponent;
    const std::string text = m.str() + "e" + std::to_string(e);
    return std::strtod(text.c_str(), nullptr);
}

Thresholds threshold_schedule(const SchemeSpec& scheme, double dt, const ThresholdPolicy& policy) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("time step must be positive");
    policy.validate();
    const int p = scheme.order();
    Thresholds th;
    th.alpha = decimal_scaled_power(policy.A, dt, p + 1);
    th.beta = decimal_scaled_power(policy.B, dt, p);
    switch (scheme.kind()) {
        case SchemeSpec::Kind::Euler:
            break;
        case SchemeSpec::Kind::Midpoint:
            if (policy.G.empty()) throw InputError("midpoint needs the stage constant G");
            th.gamma = {decimal_scaled_power(policy.G.front(), dt, 1)};
            break;
        case SchemeSpec::Kind::AdamsBashforth: {
            const auto s = static_cast<std::size_t>(scheme.steps());
            if (policy.G.size() != s && policy.G.size() != 1)
                throw InputError("AB(" + std::to_string(s) + ") needs " + std::to_string(s) + " stage constants G_j");
            for (std::size_t j = 0; j < s; ++j)
                th.gamma.push_back(decimal_scaled_power(policy.G.size() == 1 ? policy.G[0] : policy.G[j], dt, p));
            break;
        }
    }
    return th;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace htstep
