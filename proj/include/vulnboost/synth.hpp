#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "vulnboost/dataset.hpp"

namespace vulnboost {

// Class priors shaped like a typical skewed vulnerability census: the top
// grade share is ~20%, the smallest under 5%.
inline constexpr std::array<double, 11> kDefaultSkewWeights = {
    0.20, 0.14, 0.12, 0.10, 0.09, 0.08, 0.07, 0.06, 0.05, 0.045, 0.035};

namespace detail {

// Largest-remainder apportionment of n rows over the class weights, so the
// emitted class prior matches the requested one exactly.
inline std::array<std::size_t, 11> apportion(
    std::size_t n, const std::array<double, 11>& weights) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ConfigError("class weights must be non-negative");
    total += w;
  }
  if (total <= 0.0) throw ConfigError("class weights must not all be zero");

  std::array<std::size_t, 11> counts{};
  std::array<double, 11> frac{};
  std::size_t assigned = 0;
  for (int c = 0; c < 11; ++c) {
    double exact = static_cast<double>(n) * weights[c] / total;
    counts[c] = static_cast<std::size_t>(std::floor(exact));
    frac[c] = exact - static_cast<double>(counts[c]);
    assigned += counts[c];
  }
  // Hand out the leftover seats by descending fractional part, low class
  // first on ties.
  while (assigned < n) {
    int best = -1;
    for (int c = 0; c < 11; ++c)
      if (weights[c] > 0.0 && (best < 0 || frac[c] > frac[best])) best = c;
    counts[best] += 1;
    frac[best] -= 1.0;
    ++assigned;
  }
  return counts;
}

inline const std::vector<std::string>& os_pool() {
  static const std::vector<std::string> pool = {
      "Ubuntu18.04",  "Ubuntu20.04",   "CentOS7.9.2009", "Debian10.13",
      "Windows2016",  "Windows2019",   "FreeBSD12.2",    "RedHat8.6"};
  return pool;
}

inline const std::vector<std::string>& language_pool() {
  static const std::vector<std::string> pool = {
      "PHP5.3.29", "PHP7.4.30",   "Java1.8.0",  "Python3.8.10",
      "Ruby2.7.6", "NodeJS14.17.0", "Go1.17.8", "Perl5.30.0"};
  return pool;
}

inline const std::vector<std::string>& container_pool() {
  static const std::vector<std::string> pool = {
      "Apache2.4.33", "Nginx1.18.0", "IIS10.0", "Tomcat9.0.62",
      "Lighttpd1.4.59", "Caddy2.4.6"};
  return pool;
}

inline const std::vector<std::string>& app_pool() {
  static const std::vector<std::string> pool = {
      "WordPress5.9.3", "Joomla3.10.8",  "Drupal9.3.12", "Magento2.4.4",
      "MediaWiki1.37.2", "Nextcloud23.0.4"};
  return pool;
}

}  // namespace detail

/// The grade rule the generator plants into the features. Monotone in the
/// CVSS score and in the vulnerability count (carried by the count column),
/// raised by a weak password and by a missing firewall; range is [0,10].
inline double synth_score_rule(double cvss, long vuln_count, bool weak_password,
                               bool no_firewall) {
  double capped = static_cast<double>(vuln_count < 8 ? vuln_count : 8);
  return 0.6 * cvss + 0.25 * capped + (weak_password ? 1.0 : 0.0) +
         (no_firewall ? 1.0 : 0.0);
}

/// Draws labeled records for desk-scale experiments, standing in for the
/// private expert-scored corpus. Per row: a grade is drawn from `imbalance`
/// (matched exactly via largest-remainder quotas), a continuous target
/// grade +/- bounded noise is fixed, and the planted features (CVSS score,
/// vulnerability count in the count column, weak-password and firewall flags)
/// are solved so that rounding synth_score_rule reproduces the grade. All
/// other columns are nuisance draws. Byte-identical output for equal seeds.
inline std::vector<RawAssetRecord> synth_dataset(
    std::size_t n_rows, const std::array<double, 11>& imbalance,
    std::uint64_t seed) {
  if (n_rows < 110)
    throw ConfigError("synthetic datasets need at least 110 rows");
  auto counts = detail::apportion(n_rows, imbalance);

  // Grade sequence: quota-expanded, then one deterministic shuffle.
  std::vector<int> grades;
  grades.reserve(n_rows);
  for (int c = 0; c < 11; ++c)
    grades.insert(grades.end(), counts[static_cast<std::size_t>(c)], c);
  RngStream shuffle_rng(seed, 0x73687566ULL);
  for (std::size_t i = 0; i + 1 < grades.size(); ++i) {
    std::size_t j = i + shuffle_rng.next_index(grades.size() - i);
    std::swap(grades[i], grades[j]);
  }

  const long date_lo = date_to_serial("2015/1/1");
  const long date_hi = date_to_serial("2022/12/31");

  std::vector<RawAssetRecord> records;
  records.reserve(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) {
    int grade = grades[i];
    RngStream rng(seed, 0x726f77ULL, i);

    double target = grade + rng.uniform(-0.449, 0.449);
    if (target < 0.0) target = 0.0;
    if (target > 10.0) target = 10.0;

    // Prefer risky flags for high grades, then fall back through the other
    // combinations until the CVSS residual is solvable.
    bool weak_pw = rng.next_unit() < 0.05 + 0.085 * grade;
    bool no_fw = rng.next_unit() < 0.10 + 0.080 * grade;
    const std::array<std::pair<bool, bool>, 4> combos = {
        std::pair{weak_pw, no_fw}, std::pair{weak_pw, !no_fw},
        std::pair{!weak_pw, no_fw}, std::pair{!weak_pw, !no_fw}};
    long vuln_count = 0;
    double cvss = 0.0;
    bool solved = false;
    for (auto [wp, nf] : combos) {
      double base = (wp ? 1.0 : 0.0) + (nf ? 1.0 : 0.0);
      long lo = static_cast<long>(std::ceil(4.0 * (target - 6.0 - base)));
      long hi = static_cast<long>(std::floor(4.0 * (target - base)));
      if (lo < 0) lo = 0;
      if (hi > 8) hi = 8;
      if (lo > hi) continue;
      vuln_count = lo + static_cast<long>(
                            rng.next_index(static_cast<std::size_t>(hi - lo + 1)));
      cvss = (target - base - 0.25 * static_cast<double>(vuln_count)) / 0.6;
      if (cvss < 0.0) cvss = 0.0;
      if (cvss > 10.0) cvss = 10.0;
      weak_pw = wp;
      no_fw = nf;
      solved = true;
      break;
    }
    if (!solved) throw InternalError("no feasible feature combination");

    char cvss_buf[16];
    std::snprintf(cvss_buf, sizeof(cvss_buf), "%.3f", cvss);
    double cvss_rounded = std::strtod(cvss_buf, nullptr);
    int check = static_cast<int>(std::llround(synth_score_rule(
        cvss_rounded, vuln_count, weak_pw, no_fw)));
    if (check != grade) throw InternalError("planted grade rule mismatch");

    const auto& os = detail::os_pool();
    const auto& lang = detail::language_pool();
    const auto& cont = detail::container_pool();
    const auto& app = detail::app_pool();
    long cve_year = 2015 + static_cast<long>(rng.next_index(8));
    long cve_num = 1000 + static_cast<long>(rng.next_index(49000));
    long date_serial =
        date_lo + static_cast<long>(rng.next_index(
                      static_cast<std::size_t>(date_hi - date_lo + 1)));
    if (date_serial == 60) date_serial = 61;  // unreachable range, but safe

    RawAssetRecord rec;
    rec.values = {
        weak_pw ? "YES" : "NO",
        no_fw ? "NO" : "YES",
        rng.next_unit() < 0.5 ? "YES" : "NO",
        rng.next_unit() < 0.4 ? "YES" : "NO",
        os[rng.next_index(os.size())],
        lang[rng.next_index(lang.size())],
        cont[rng.next_index(cont.size())],
        std::to_string(vuln_count),
        app[rng.next_index(app.size())],
        cvss_buf,
        "CVE-" + std::to_string(cve_year) + "-" + std::to_string(cve_num),
        serial_to_date(date_serial),
        std::to_string(grade),
    };
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace vulnboost
