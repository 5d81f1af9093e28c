#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include "gradcont/bench.hpp"
#include "gradcont/order_conditions.hpp"

namespace gradcont {

ConditionReport verify(const Eigen::VectorXd& gamma) {
  const int n = static_cast<int>(gamma.size());
  if (n < 1) throw std::invalid_argument("verify: empty coefficient vector");

  ConditionReport rep;
  rep.n = n;

  rep.sym_max_abs = 0.0;
  for (int j = 1; j <= n / 2; ++j)
    rep.sym_max_abs =
        std::max(rep.sym_max_abs, std::abs(gamma[j - 1] - gamma[n - j]));

  const Eigen::VectorXd vals = order_condition_values(gamma);
  const auto& info = order_condition_info();
  for (int c = 0; c < kNumOrderConditions; ++c)
    rep.order_residuals[c] = {info[c].label, vals[c]};

  rep.one_norm = gamma.lpNorm<1>();
  rep.euclid_norm = gamma.norm();

  rep.of2_value = 0.0;
  for (int i = 1; i <= n / 2; ++i)
    rep.of2_value = std::max(rep.of2_value,
                             std::abs(primed_partial_sum(gamma, i)));

  rep.cumsum_ok = true;
  double s = gamma[0];
  for (int i = 2; i <= n; ++i) {
    s += gamma[i - 1];
    if (s < -1e-12 || s > 1.0 + 1e-12) {
      rep.cumsum_ok = false;
      break;
    }
  }
  return rep;
}

Eigen::VectorXd load_coeff_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.good())
    throw std::runtime_error("cannot open coefficient file: " + path);

  std::vector<double> vals;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // Strip trailing comment and surrounding whitespace.
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto is_space = [](unsigned char c) { return std::isspace(c); };
    while (!line.empty() && is_space(line.back())) line.pop_back();
    std::size_t start = 0;
    while (start < line.size() && is_space(line[start])) ++start;
    if (start == line.size()) continue;

    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(line.substr(start), &used);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": not a number: " + line.substr(start));
    }
    if (start + used != line.size())
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": trailing garbage: " + line.substr(start));
    vals.push_back(v);
  }
  if (vals.empty())
    throw std::runtime_error("coefficient file has no values: " + path);

  Eigen::VectorXd g(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i)
    g[static_cast<Eigen::Index>(i)] = vals[i];
  return g;
}

void save_coeff_file(const std::string& path, const Eigen::VectorXd& gamma) {
  std::ofstream out(path, std::ios::trunc);
  if (!out.good())
    throw std::runtime_error("cannot write coefficient file: " + path);
  char buf[64];
  for (Eigen::Index i = 0; i < gamma.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", gamma[i]);
    out << buf << '\n';
  }
  if (!out.good())
    throw std::runtime_error("write failed for coefficient file: " + path);
}

}  // namespace gradcont
