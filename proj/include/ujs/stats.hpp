#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ujs {

// Upper-tail p-value of a chi-square statistic with df degrees of
// freedom, via the regularized incomplete gamma function.
double chi_square_pvalue(double statistic, double df);

struct UniformityResult {
    double statistic = 0;
    double df = 0;
    double p_value = 1;
    std::int64_t total = 0;
    std::size_t cells = 0;
    bool pass = false;  // p_value >= alpha
    std::vector<std::string> warnings;
};

// Pearson chi-square goodness-of-fit test against the uniform
// distribution over all keys in `expected_keys`. Counts for keys absent
// from `counts` are zero. Warns when any expected cell count is below 5.
UniformityResult uniformity_test(
    const std::map<std::string, std::int64_t>& counts,
    std::size_t universe_size, double alpha = 0.01);

}  // namespace ujs
