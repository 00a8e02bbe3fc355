#pragma once

#include <span>
#include <vector>

namespace asym::stats {

double mean(std::span<const double> v);
// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(std::span<const double> v);
// Average ranks (1-based) with ties sharing the mean rank.
std::vector<double> ranks(std::span<const double> v);
double pearson(std::span<const double> a, std::span<const double> b);
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace asym::stats
