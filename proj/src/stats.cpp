#include "ujs/stats.hpp"

#include <cmath>

#include "ujs/error.hpp"

namespace ujs {

namespace {

// Regularized lower incomplete gamma P(a, x). Series expansion for
// x < a + 1, continued fraction otherwise (Lentz's method).
double gamma_p(double a, double x) {
    if (x < 0 || a <= 0) throw StatsError("gamma_p: invalid arguments");
    if (x == 0) return 0;
    double gln = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a;
        double sum = 1.0 / a;
        double del = sum;
        for (int i = 0; i < 1000; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-14)
                return sum * std::exp(-x + a * std::log(x) - gln);
        }
        throw StatsError("gamma_p: series did not converge");
    }
    double b = x + 1.0 - a;
    double c = 1e300;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::fabs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-14)
            return 1.0 - std::exp(-x + a * std::log(x) - gln) * h;
    }
    throw StatsError("gamma_p: continued fraction did not converge");
}

}  // namespace

double chi_square_pvalue(double statistic, double df) {
    if (df <= 0) throw StatsError("chi_square_pvalue: df must be positive");
    if (statistic <= 0) return 1.0;
    return 1.0 - gamma_p(df / 2.0, statistic / 2.0);
}

UniformityResult uniformity_test(
    const std::map<std::string, std::int64_t>& counts,
    std::size_t universe_size, double alpha) {
    UniformityResult out;
    if (universe_size == 0)
        throw StatsError("uniformity_test: empty universe");
    out.cells = universe_size;
    for (const auto& [k, c] : counts) out.total += c;
    if (out.total == 0) throw StatsError("uniformity_test: no observations");
    if (counts.size() > universe_size)
        throw StatsError("uniformity_test: observed " +
                         std::to_string(counts.size()) +
                         " distinct keys, universe has only " +
                         std::to_string(universe_size));

    double expected = static_cast<double>(out.total) /
                      static_cast<double>(universe_size);
    if (expected < 5.0)
        out.warnings.push_back("expected cell count " +
                               std::to_string(expected) +
                               " below 5; test may be unreliable");
    double stat = 0;
    for (const auto& [k, c] : counts) {
        double diff = static_cast<double>(c) - expected;
        stat += diff * diff / expected;
    }
    // Keys never observed contribute expected each.
    stat += expected *
            static_cast<double>(universe_size - counts.size());
    out.statistic = stat;
    out.df = static_cast<double>(universe_size) - 1.0;
    out.p_value = out.df > 0 ? chi_square_pvalue(stat, out.df) : 1.0;
    out.pass = out.p_value >= alpha;
    return out;
}

}  // namespace ujs
